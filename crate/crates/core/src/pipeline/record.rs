use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::filter::FilteredSet;
use crate::mask::MaskProposal;
use crate::prompt::{PromptString, Rejection};

/// One JSONL line. Stages fill in later fields and keep unknown ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub sent_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conllu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposals: Option<Vec<MaskProposal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<Vec<Generation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered: Option<FilteredSet>,
    /// Problems met while processing this sentence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CorpusRecord {
    pub fn new(sent_id: impl Into<String>, text: impl Into<String>) -> Self {
        CorpusRecord {
            sent_id: sent_id.into(),
            text: text.into(),
            conllu: None,
            proposals: None,
            generations: None,
            filtered: None,
            errors: Vec::new(),
            extra: Map::new(),
        }
    }

    /// Filled candidate sentences across all generations, in order.
    pub fn candidates(&self) -> Vec<String> {
        self.generations
            .iter()
            .flatten()
            .flat_map(|g| g.completions.iter())
            .filter_map(|c| c.sentence.clone())
            .collect()
    }
}

/// Backend output for one proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    /// Position of the proposal in `proposals`.
    pub proposal: usize,
    pub prompt: PromptString,
    pub completions: Vec<Completion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub raw: String,
    /// The masked sentence with this completion's answers filled in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Rejection>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_survive_round_trip() {
        let line = r#"{"sent_id":"a","text":"Hi.","label":"entailment","meta":{"k":1}}"#;
        let rec: CorpusRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.extra["label"], "entailment");
        let back = serde_json::to_string(&rec).unwrap();
        assert!(back.contains(r#""label":"entailment""#));
        assert!(!back.contains("proposals"));
    }
}
