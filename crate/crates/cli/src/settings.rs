//! Layered run configuration: defaults, preset, config file, `--set`, `--seed`.

use std::path::Path;

use multikb::config::{Preset, RunConfig};
use multikb::{Error, Result};
use toml::{Table, Value};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Overlay `top` onto `base`, table by table.
fn deep_merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => deep_merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse `section.key=value`. The value is read as a TOML literal and
/// falls back to a plain string.
fn parse_override(spec: &str) -> Result<(Vec<String>, Value)> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("--set expects section.key=value, got {spec:?}")))?;
    let keys: Vec<String> = path.trim().split('.').map(str::to_owned).collect();
    if keys.iter().any(String::is_empty) {
        return Err(config_err(format!("bad key in --set {spec:?}")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_owned())),
        Err(_) => Value::String(raw.to_owned()),
    };
    Ok((keys, value))
}

fn apply_override(root: &mut Table, keys: &[String], value: Value) -> Result<()> {
    let (last, parents) = keys.split_last().expect("non-empty key path");
    let mut table = root;
    for k in parents {
        table = match table.get_mut(k) {
            Some(Value::Table(t)) => t,
            _ => return Err(config_err(format!("unknown config section {:?}", keys.join(".")))),
        };
    }
    if !table.contains_key(last) && last != "translator_hidden" {
        return Err(config_err(format!("unknown config key {:?}", keys.join("."))));
    }
    table.insert(last.clone(), value);
    Ok(())
}

pub struct Layers<'a> {
    pub preset: Preset,
    pub file: Option<&'a Path>,
    pub overrides: &'a [String],
    pub seed: Option<u64>,
}

pub fn resolve(l: &Layers) -> Result<RunConfig> {
    let mut root = Table::try_from(RunConfig::preset(l.preset)).map_err(|e| config_err(e.to_string()))?;
    if let Some(path) = l.file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Table = text.parse().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        deep_merge(&mut root, file);
    }
    for spec in l.overrides {
        let (keys, value) = parse_override(spec)?;
        apply_override(&mut root, &keys, value)?;
    }
    let mut cfg: RunConfig = Value::Table(root).try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    if let Some(seed) = l.seed {
        cfg.set_seed(seed);
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers<'a>(overrides: &'a [String], seed: Option<u64>) -> Layers<'a> {
        Layers {
            preset: Preset::Desk,
            file: None,
            overrides,
            seed,
        }
    }

    #[test]
    fn overrides_and_seed() {
        let sets = vec!["train.lr_kbe=0.01".to_owned(), "gen.entities_per_kb = 400".to_owned()];
        let cfg = resolve(&layers(&sets, Some(7))).unwrap();
        assert_eq!(cfg.train.lr_kbe, 0.01);
        assert_eq!(cfg.gen.entities_per_kb, 400);
        assert_eq!((cfg.train.seed, cfg.qa.seed, cfg.gen.seed), (7, 7, 7));
        assert_eq!(cfg.seeds, vec![7]);
        assert_eq!(cfg.train.h, 32);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        for bad in ["train.nope=1", "train.h", "train.h=\"x\"", "nosuch.h=1"] {
            let sets = vec![bad.to_owned()];
            let err = resolve(&layers(&sets, None)).unwrap_err();
            assert_eq!(err.kind(), "config", "{bad}");
        }
    }

    #[test]
    fn file_layer_sits_between_preset_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[train]\nh = 8\nn_kbe = 3\n").unwrap();
        let sets = vec!["train.n_kbe=4".to_owned()];
        let cfg = resolve(&Layers {
            preset: Preset::Desk,
            file: Some(&path),
            overrides: &sets,
            seed: None,
        })
        .unwrap();
        assert_eq!((cfg.train.h, cfg.train.n_kbe, cfg.train.k_kbe), (8, 4, 100));
    }
}
