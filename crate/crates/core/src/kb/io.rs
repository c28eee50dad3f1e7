//! TSV reading and writing for triples and entity-type sidecars.

use std::fs;
use std::path::Path;

use super::{Kb, KbBuilder, KbId};
use crate::error::{Error, Result};

pub fn load_kb(path: impl AsRef<Path>, kb_id: KbId) -> Result<Kb> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kb(kb_id, &text, None, &path.display().to_string())
}

pub fn load_kb_with_types(
    path: impl AsRef<Path>,
    types_path: impl AsRef<Path>,
    kb_id: KbId,
) -> Result<Kb> {
    let path = path.as_ref();
    let types_path = types_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let types = fs::read_to_string(types_path).map_err(|e| Error::io(types_path, e))?;
    let types_name = types_path.display().to_string();
    parse_kb(
        kb_id,
        &text,
        Some((&types, &types_name)),
        &path.display().to_string(),
    )
}

/// Writes the canonical form: rows sorted by (subject, relation, object) name.
pub fn save_kb(kb: &Kb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_tsv(kb)).map_err(|e| Error::io(path, e))
}

pub fn save_types(kb: &Kb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, types_to_tsv(kb)).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_tsv(kb: &Kb) -> String {
    let mut rows: Vec<(&str, &str, &str)> = kb
        .triples()
        .iter()
        .map(|t| {
            (
                kb.entity_name(t.subject),
                kb.relation_name(t.relation),
                kb.entity_name(t.object),
            )
        })
        .collect();
    rows.sort_unstable();
    let mut out = String::new();
    for (s, r, o) in rows {
        out.push_str(s);
        out.push('\t');
        out.push_str(r);
        out.push('\t');
        out.push_str(o);
        out.push('\n');
    }
    out
}

/// Entity order is preserved so that triples + types reload to the same ids.
pub(crate) fn types_to_tsv(kb: &Kb) -> String {
    let mut out = String::new();
    for e in kb.entities() {
        out.push_str(kb.entity_name(e));
        out.push('\t');
        out.push_str(kb.entity_type(e));
        out.push('\n');
    }
    out
}

fn rows<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

pub(crate) fn parse_kb(
    kb_id: KbId,
    text: &str,
    types: Option<(&str, &str)>,
    source_name: &str,
) -> Result<Kb> {
    let mut b = KbBuilder::new(kb_id);
    for (line, cols) in rows(text) {
        if cols.len() != 3 {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        b.named_triple(cols[0], cols[1], cols[2]);
    }
    if let Some((types, types_name)) = types {
        fill_types(&mut b, types, types_name)?;
    }
    Ok(b.build())
}

fn fill_types(b: &mut KbBuilder, text: &str, source_name: &str) -> Result<()> {
    for (line, cols) in rows(text) {
        if cols.len() != 2 {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line,
                message: format!("expected name<TAB>type, found {} columns", cols.len()),
            });
        }
        b.typed_entity(cols[0], cols[1]);
    }
    Ok(())
}
