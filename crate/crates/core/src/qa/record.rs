use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityRef, LinkType};

/// The six query-graph templates, plus the one-hop probe asked about planted
/// merge-failure pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    P1,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::T1,
        TemplateId::T2,
        TemplateId::T3,
        TemplateId::T4,
        TemplateId::T5,
        TemplateId::T6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::T1 => "T1",
            TemplateId::T2 => "T2",
            TemplateId::T3 => "T3",
            TemplateId::T4 => "T4",
            TemplateId::T5 => "T5",
            TemplateId::T6 => "T6",
            TemplateId::P1 => "P1",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TemplateId::ALL
            .into_iter()
            .chain([TemplateId::P1])
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown template {s:?}")))
    }
}

/// A question with its topic entities and gold answers.
#[derive(Clone, Debug, PartialEq)]
pub struct QuestionRecord {
    pub id: String,
    pub text: String,
    pub topic_entities: Vec<EntityRef>,
    pub answers: Vec<EntityRef>,
    pub template: TemplateId,
    pub link_type: LinkType,
}

impl QuestionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.topic_entities.is_empty() {
            return Err(Error::domain(format!("question {} has no topic entity", self.id)));
        }
        if self.answers.is_empty() {
            return Err(Error::domain(format!("question {} has no answer", self.id)));
        }
        Ok(())
    }
}
