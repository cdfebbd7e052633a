//! JSON model document describing an event tree.
//!
//! ```json
//! {
//!   "name": "single-floret",
//!   "devents": [
//!     {"id": "fail", "text": "fail"},
//!     {"id": "ok", "text": "not fail"}
//!   ],
//!   "vertices": ["v0", "v1", "v2"],
//!   "edges": [
//!     {"src": "v0", "dst": "v1", "devent": "fail", "index": 1},
//!     {"src": "v0", "dst": "v2", "devent": "ok", "index": 2}
//!   ],
//!   "leaf_status": {"v1": "failed", "v2": "operational"},
//!   "theta": {"v0": [0.5, 0.5]}
//! }
//! ```
//!
//! `theta` vectors are listed in sibling order, i.e. ascending edge `index`.
//! Two optional sections refine the colouring:
//!
//! * `stages`: a list of situation blocks declaring the stage partition.
//!   Situations not listed form singleton stages. Declared stages are
//!   validated, never inferred.
//! * `edge_colours`: groups of edges (named by source vertex and d-event)
//!   that share a colour, and therefore a transition probability, across
//!   different stages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CegError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub devents: Vec<DEventDoc>,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    pub leaf_status: BTreeMap<String, LeafStatus>,
    pub theta: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_colours: Vec<Vec<EdgeKeyDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DEventDoc {
    pub id: String,
    pub text: String,
    /// Marks d-events describing root causes; their edges form the
    /// candidate set for remedial interventions.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub root_cause: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub src: String,
    pub dst: String,
    pub devent: String,
    pub index: u32,
}

/// Identifies a tree edge by its source situation and d-event label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeKeyDoc {
    pub vertex: String,
    pub devent: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafStatus {
    Failed,
    Operational,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CegError::parse(&e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }
}
