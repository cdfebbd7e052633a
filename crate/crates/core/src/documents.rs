//! JSON documents describing interventions and causal queries.
//!
//! An intervention names its manipulation in one of three ways:
//!
//! ```json
//! {"theta_hat": {"w1": [0.4, 0.3, 0.05, 0.25]}}
//! ```
//!
//! ```json
//! {"fixed_edges": ["w1->w4"],
//!  "prior": {"alpha": {"w1": [7, 5, 5, 3]}, "eta": {"w1": [2, 2, 2, 2]}}}
//! ```
//!
//! ```json
//! {"prior": {"alpha": {"w1": [7, 5, 5, 3]}, "eta": {"w1": [2, 2, 2, 2]}},
//!  "record": {"maintenance": "tighten gasket", "delta": false,
//!             "actions": [{"name": "a1", "probability": 0.3, "indicators": [1, 0, 0, 0, 0, 0]},
//!                         {"name": "a2", "probability": 0.7, "indicators": [1, 1, 0, 0, 0, 0]}]}}
//! ```
//!
//! Indicator vectors list the root-cause edges in CEG edge order. A query
//! names the target d-event and optionally a partition to verify:
//!
//! ```json
//! {"target": "x_f1",
//!  "partition": {"name": "symptom partition", "by": "devents",
//!                "blocks": [["x_s1", "x_s3", "x_s5"], ["x_s2", "x_s4", "x_s6"]]}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ceg::{Ceg, NodeId};
use crate::error::{CegError, Result};
use crate::intervention::{
    classify_remedy, infer_indicator_distribution, manipulation_from_indicators, DirichletFloretPrior,
    HiddenAction, IndicatorDistribution, IndicatorLaw, InterventionIndicators, RemedialRecord,
    RemedyClass, StochasticManipulation,
};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_edges: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RecordDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorDocument {
    pub alpha: BTreeMap<String, Vec<f64>>,
    pub eta: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordDocument {
    /// `null` means nothing was recorded.
    #[serde(default)]
    pub maintenance: Option<String>,
    #[serde(default)]
    pub delta: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failure_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remedy_indicators: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDocument {
    pub name: String,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicators: Option<IndicatorLawDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndicatorLawDocument {
    Point(Vec<u8>),
    Distribution { distribution: Vec<(Vec<u8>, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDocument {
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// `devents`, `stages`, `positions` or `edges`.
    pub by: String,
    pub blocks: Vec<Vec<String>>,
}

macro_rules! json_io {
    ($t:ty) => {
        impl $t {
            pub fn from_json(text: &str) -> Result<Self> {
                serde_json::from_str(text).map_err(|e| CegError::parse(&e))
            }

            pub fn to_json(&self) -> String {
                serde_json::to_string_pretty(self).expect("documents always serialize")
            }
        }
    };
}

json_io!(InterventionDocument);
json_io!(QueryDocument);

/// One manipulation of an intervention with its mixture weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub weight: f64,
    pub indicators: Option<Vec<u8>>,
    pub manipulation: StochasticManipulation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedIntervention {
    pub scenarios: Vec<Scenario>,
    pub remedy: Option<RemedyClass>,
    pub record: Option<RemedialRecord>,
    pub indicator_distribution: Option<IndicatorDistribution>,
    pub prior: Option<DirichletFloretPrior>,
}

impl ResolvedIntervention {
    /// The single manipulation when the intervention has exactly one.
    pub fn single(&self) -> Option<&StochasticManipulation> {
        match self.scenarios.as_slice() {
            [s] => Some(&s.manipulation),
            _ => None,
        }
    }
}

fn position(c: &Ceg, name: &str) -> Result<NodeId> {
    c.node_by_name(name)
        .filter(|&n| !c.is_sink(n))
        .ok_or_else(|| CegError::PositionNotInCeg(name.to_string()))
}

fn resolve_prior(c: &Ceg, doc: &PriorDocument) -> Result<DirichletFloretPrior> {
    let map = |m: &BTreeMap<String, Vec<f64>>| -> Result<BTreeMap<NodeId, Vec<f64>>> {
        m.iter().map(|(k, v)| Ok((position(c, k)?, v.clone()))).collect()
    };
    DirichletFloretPrior::new(c, map(&doc.alpha)?, map(&doc.eta)?)
}

fn resolve_record(doc: &RecordDocument) -> RemedialRecord {
    RemedialRecord {
        maintenance: doc.maintenance.clone(),
        delta: doc.delta,
        failure_path: doc.failure_path.clone(),
        remedy_indicators: doc.remedy_indicators.clone(),
        actions: doc
            .actions
            .iter()
            .map(|a| HiddenAction {
                name: a.name.clone(),
                probability: a.probability,
                indicators: a.indicators.as_ref().map(|law| match law {
                    IndicatorLawDocument::Point(v) => IndicatorLaw::Point(v.clone()),
                    IndicatorLawDocument::Distribution { distribution } => {
                        IndicatorLaw::Distribution(distribution.clone())
                    }
                }),
            })
            .collect(),
        p_delta: doc.p_delta,
    }
}

/// Turns a document into concrete manipulations on `c`.
pub fn resolve_intervention(c: &Ceg, doc: &InterventionDocument) -> Result<ResolvedIntervention> {
    let routes = [doc.theta_hat.is_some(), doc.fixed_edges.is_some(), doc.record.is_some()];
    if routes.iter().filter(|&&r| r).count() != 1 {
        return Err(CegError::InvalidRecord(
            "an intervention needs exactly one of `theta_hat`, `fixed_edges` or `record`".into(),
        ));
    }
    if let Some(theta_hat) = &doc.theta_hat {
        let entries = theta_hat
            .iter()
            .map(|(k, v)| Ok((position(c, k)?, v.clone())))
            .collect::<Result<Vec<_>>>()?;
        return Ok(ResolvedIntervention {
            scenarios: vec![Scenario {
                label: "theta_hat".into(),
                weight: 1.0,
                indicators: None,
                manipulation: StochasticManipulation::new(entries),
            }],
            remedy: None,
            record: None,
            indicator_distribution: None,
            prior: None,
        });
    }
    let prior_doc = doc
        .prior
        .as_ref()
        .ok_or_else(|| CegError::MissingConditional("a Dirichlet `prior` for the indicator route".into()))?;
    let prior = resolve_prior(c, prior_doc)?;
    let to_manipulation = |values: &[u8]| -> Result<StochasticManipulation> {
        let ind = InterventionIndicators::from_vector(c, values)?;
        manipulation_from_indicators(c, &prior, &ind)
    };
    if let Some(fixed) = &doc.fixed_edges {
        let edges = fixed.iter().map(|e| c.edge_by_ref(e)).collect::<Result<Vec<_>>>()?;
        let ind = InterventionIndicators::from_fixed_edges(c, &edges)?;
        let manipulation = manipulation_from_indicators(c, &prior, &ind)?;
        return Ok(ResolvedIntervention {
            scenarios: vec![Scenario {
                label: "fixed edges".into(),
                weight: 1.0,
                indicators: Some(ind.values().to_vec()),
                manipulation,
            }],
            remedy: None,
            record: None,
            indicator_distribution: None,
            prior: Some(prior),
        });
    }

    let record = resolve_record(doc.record.as_ref().expect("record route"));
    let distribution = infer_indicator_distribution(&record, c.tolerance())?;
    let mut scenarios = Vec::new();
    if record.delta {
        let v = record.remedy_indicators.clone().expect("validated");
        scenarios.push(Scenario {
            label: record.maintenance.clone().unwrap_or_default(),
            weight: 1.0,
            manipulation: to_manipulation(&v)?,
            indicators: Some(v),
        });
    } else {
        for a in &record.actions {
            let rows: Vec<(Vec<u8>, f64)> = match a.indicators.as_ref().expect("validated") {
                IndicatorLaw::Point(v) => vec![(v.clone(), 1.0)],
                IndicatorLaw::Distribution(d) => d.clone(),
            };
            for (v, q) in rows {
                scenarios.push(Scenario {
                    label: a.name.clone(),
                    weight: a.probability * q,
                    manipulation: to_manipulation(&v)?,
                    indicators: Some(v),
                });
            }
        }
    }
    Ok(ResolvedIntervention {
        scenarios,
        remedy: Some(classify_remedy(&record)),
        record: Some(record),
        indicator_distribution: Some(distribution),
        prior: Some(prior),
    })
}

/// Intervention documents for the shipped models: the bushing insulator
/// replacement at `w1`, and a manipulation of the conservator root floret.
pub fn bushing_intervention() -> InterventionDocument {
    InterventionDocument {
        theta_hat: Some(BTreeMap::from([("w1".to_string(), vec![0.4, 0.3, 0.05, 0.25])])),
        ..Default::default()
    }
}

pub fn conservator_intervention() -> InterventionDocument {
    InterventionDocument {
        theta_hat: Some(BTreeMap::from([("w0".to_string(), vec![0.15, 0.85])])),
        ..Default::default()
    }
}

pub fn bushing_query() -> QueryDocument {
    QueryDocument {
        target: "x_f1".into(),
        partition: Some(PartitionDocument {
            name: Some("symptom partition".into()),
            by: "devents".into(),
            blocks: vec![
                vec!["x_s1".into(), "x_s3".into(), "x_s5".into()],
                vec!["x_s2".into(), "x_s4".into(), "x_s6".into()],
            ],
        }),
    }
}

pub fn conservator_query() -> QueryDocument {
    QueryDocument {
        target: "x_f1".into(),
        partition: Some(PartitionDocument {
            name: Some("stage partition".into()),
            by: "positions".into(),
            blocks: vec![
                vec!["w3".into(), "w5".into()],
                vec!["w4".into(), "w6".into()],
            ],
        }),
    }
}

/// An imperfect remedy on the bushing: a gasket job that may or may not
/// also have fixed the porcelain.
pub fn bushing_imperfect_intervention() -> InterventionDocument {
    InterventionDocument {
        prior: Some(PriorDocument {
            alpha: BTreeMap::from([("w1".to_string(), vec![7.0, 5.0, 5.0, 3.0])]),
            eta: BTreeMap::from([("w1".to_string(), vec![2.0, 2.0, 2.0, 2.0])]),
        }),
        record: Some(RecordDocument {
            maintenance: Some("tighten gasket".into()),
            delta: false,
            failure_path: vec!["w0->w1#1".into(), "w1->w3#1".into(), "w3->w6#1".into(), "w6->w_inf_f#1".into()],
            remedy_indicators: None,
            actions: vec![
                ActionDocument {
                    name: "gasket only".into(),
                    probability: 0.3,
                    indicators: Some(IndicatorLawDocument::Point(vec![1, 0, 0, 0, 0, 0])),
                },
                ActionDocument {
                    name: "gasket and porcelain".into(),
                    probability: 0.7,
                    indicators: Some(IndicatorLawDocument::Point(vec![1, 1, 0, 0, 0, 0])),
                },
            ],
            p_delta: None,
        }),
        ..Default::default()
    }
}
