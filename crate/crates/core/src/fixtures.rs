//! Shipped example models and random generators for tests and benches.
//!
//! The two reliability models use chosen transition probabilities; the
//! structure follows the bushing and conservator event trees.
//!
//! Bushing tree vertex layout (breadth-first):
//!
//! ```text
//! v0 -> v1 (endogenous), v2 (exogenous)
//! v1 -> v3 gasket, v4 porcelain, v5 cracked insulator, v6 other endogenous
//! v2 -> v7 lightning/other exogenous, v8 corrosive sulphur
//! v3 -> v9 oil leak, v10 no oil leak     v4 -> v11, v12 (same symptoms)
//! v5 -> v13 loss of oil, v14 mix of oil  v6 -> v15 thermal runaway, v16 discharge
//! v7 .. v16 -> fail / no fail leaves v17 .. v36
//! ```

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{CegError, Result};
use crate::event_tree::{build_event_tree, ProbabilityTree, VertexId};
use crate::model::{DEventDoc, EdgeDoc, EdgeKeyDoc, LeafStatus, ModelDocument};
use crate::staging::StagedTree;

/// Incremental construction of a [`ModelDocument`].
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    doc: ModelDocument,
}

impl ModelBuilder {
    pub fn new(name: &str) -> Self {
        let mut b = ModelBuilder::default();
        b.doc.name = Some(name.to_string());
        b
    }

    pub fn devent(mut self, id: &str, text: &str) -> Self {
        self.doc.devents.push(DEventDoc {
            id: id.into(),
            text: text.into(),
            root_cause: false,
        });
        self
    }

    pub fn root_cause(mut self, id: &str, text: &str) -> Self {
        self.doc.devents.push(DEventDoc {
            id: id.into(),
            text: text.into(),
            root_cause: true,
        });
        self
    }

    fn vertex(&mut self, name: &str) {
        if !self.doc.vertices.iter().any(|v| v == name) {
            self.doc.vertices.push(name.to_string());
        }
    }

    /// Adds the floret at `center` with `(child, d-event)` pairs in sibling
    /// order.
    pub fn floret(mut self, center: &str, children: &[(&str, &str)], theta: &[f64]) -> Self {
        self.vertex(center);
        for (i, (child, devent)) in children.iter().enumerate() {
            self.vertex(child);
            self.doc.edges.push(EdgeDoc {
                src: center.into(),
                dst: (*child).into(),
                devent: (*devent).into(),
                index: i as u32 + 1,
            });
        }
        self.doc.theta.insert(center.into(), theta.to_vec());
        self
    }

    pub fn leaf(mut self, name: &str, status: LeafStatus) -> Self {
        self.vertex(name);
        self.doc.leaf_status.insert(name.into(), status);
        self
    }

    pub fn stages(mut self, blocks: &[&[&str]]) -> Self {
        self.doc.stages = Some(
            blocks
                .iter()
                .map(|b| b.iter().map(|s| s.to_string()).collect())
                .collect(),
        );
        self
    }

    pub fn colour_tie(mut self, edges: &[(&str, &str)]) -> Self {
        self.doc.edge_colours.push(
            edges
                .iter()
                .map(|(v, d)| EdgeKeyDoc {
                    vertex: v.to_string(),
                    devent: d.to_string(),
                })
                .collect(),
        );
        self
    }

    pub fn document(self) -> ModelDocument {
        self.doc
    }

    pub fn build(self) -> ProbabilityTree {
        build_event_tree(&self.doc).expect("fixture models are valid")
    }
}

/// Adds fail / no-fail florets under each of `centers`, naming leaves
/// `v{first_leaf}`, `v{first_leaf + 1}`, ...
fn failure_florets(
    mut b: ModelBuilder,
    centers: &[(&str, f64)],
    first_leaf: usize,
) -> ModelBuilder {
    let mut next = first_leaf;
    for &(center, p) in centers {
        let fail = format!("v{next}");
        let ok = format!("v{}", next + 1);
        next += 2;
        b = b
            .floret(center, &[(&fail, "x_f1"), (&ok, "x_f2")], &[p, 1.0 - p])
            .leaf(&fail, LeafStatus::Failed)
            .leaf(&ok, LeafStatus::Operational);
    }
    b
}

fn bushing_builder(symmetric: bool) -> ModelBuilder {
    let (insulator, other) = if symmetric {
        ([0.4, 0.6], [0.4, 0.6])
    } else {
        ([0.55, 0.45], [0.3, 0.7])
    };
    let b = ModelBuilder::new(if symmetric { "bushing" } else { "bushing-broken" })
        .devent("x_en", "endogenous cause")
        .devent("x_exo", "exogenous cause")
        .root_cause("x_c1", "gasket")
        .root_cause("x_c2", "porcelain")
        .root_cause("x_c3", "cracked insulator")
        .root_cause("x_c4", "other endogenous cause")
        .root_cause("x_c5", "corrosive sulphur")
        .root_cause("x_c6", "lightning and other exogenous cause")
        .devent("x_s1", "oil leak")
        .devent("x_s2", "no oil leak")
        .devent("x_s3", "loss of oil")
        .devent("x_s4", "mix of oil")
        .devent("x_s5", "thermal runaway")
        .devent("x_s6", "electrical discharge")
        .devent("x_f1", "fail")
        .devent("x_f2", "no fail")
        .floret("v0", &[("v1", "x_en"), ("v2", "x_exo")], &[0.7, 0.3])
        .floret(
            "v1",
            &[("v3", "x_c1"), ("v4", "x_c2"), ("v5", "x_c3"), ("v6", "x_c4")],
            &[0.35, 0.25, 0.25, 0.15],
        )
        .floret("v2", &[("v7", "x_c6"), ("v8", "x_c5")], &[0.6, 0.4])
        .floret("v3", &[("v9", "x_s1"), ("v10", "x_s2")], &[0.4, 0.6])
        .floret("v4", &[("v11", "x_s1"), ("v12", "x_s2")], &[0.4, 0.6])
        .floret("v5", &[("v13", "x_s3"), ("v14", "x_s4")], &insulator)
        .floret("v6", &[("v15", "x_s5"), ("v16", "x_s6")], &other);
    let b = failure_florets(
        b,
        &[
            ("v7", 0.45),
            ("v8", 0.45),
            ("v9", 0.8),
            ("v10", 0.3),
            ("v11", 0.8),
            ("v12", 0.3),
            ("v13", 0.45),
            ("v14", 0.45),
            ("v15", 0.45),
            ("v16", 0.45),
        ],
        17,
    )
    .stages(&[
        &["v3", "v4"],
        &["v7", "v8", "v13", "v14", "v15", "v16"],
        &["v9", "v11"],
        &["v10", "v12"],
    ]);
    if symmetric {
        b.colour_tie(&[("v3", "x_s1"), ("v5", "x_s3"), ("v6", "x_s5")])
            .colour_tie(&[("v3", "x_s2"), ("v5", "x_s4"), ("v6", "x_s6")])
    } else {
        b
    }
}

/// Bushing model with its symptom florets sharing colours across stages.
pub fn bushing_document() -> ModelDocument {
    bushing_builder(true).document()
}

pub fn bushing_tree() -> ProbabilityTree {
    bushing_builder(true).build()
}

/// Bushing model with the cross-stage symptom colouring removed and the
/// insulator and other-cause symptom probabilities changed.
pub fn bushing_broken_document() -> ModelDocument {
    bushing_builder(false).document()
}

pub fn bushing_broken_tree() -> ProbabilityTree {
    bushing_builder(false).build()
}

fn conservator_builder() -> ModelBuilder {
    let b = ModelBuilder::new("conservator")
        .root_cause("x_c1", "oil indicator or contact fault")
        .root_cause("x_c2", "other fault")
        .devent("x_o1", "oil leak and oil level low")
        .devent("x_o2", "other observation")
        .devent("x_b1", "buchholz and drycol alarm")
        .devent("x_b2", "other alarm")
        .devent("x_f1", "fail")
        .devent("x_f2", "no fail")
        .floret("v0", &[("v1", "x_c1"), ("v2", "x_c2")], &[0.4, 0.6])
        .floret("v1", &[("v3", "x_o1"), ("v4", "x_o2")], &[0.3, 0.7])
        .floret("v2", &[("v5", "x_o1"), ("v6", "x_o2")], &[0.3, 0.7])
        .floret("v3", &[("v7", "x_b1"), ("v8", "x_b2")], &[0.6, 0.4])
        .floret("v4", &[("v9", "x_b1"), ("v10", "x_b2")], &[0.25, 0.75])
        .floret("v5", &[("v11", "x_b1"), ("v12", "x_b2")], &[0.6, 0.4])
        .floret("v6", &[("v13", "x_b1"), ("v14", "x_b2")], &[0.25, 0.75]);
    failure_florets(
        b,
        &[
            ("v7", 0.7),
            ("v8", 0.2),
            ("v9", 0.7),
            ("v10", 0.7),
            ("v11", 0.2),
            ("v12", 0.2),
            ("v13", 0.2),
            ("v14", 0.2),
        ],
        15,
    )
    .stages(&[
        &["v1", "v2"],
        &["v3", "v5"],
        &["v4", "v6"],
        &["v7", "v9", "v10"],
        &["v8", "v11", "v12", "v13", "v14"],
    ])
}

pub fn conservator_document() -> ModelDocument {
    conservator_builder().document()
}

pub fn conservator_tree() -> ProbabilityTree {
    conservator_builder().build()
}

/// One binary fail / no-fail floret with θ = (p, 1 - p).
pub fn single_floret(p: f64) -> ProbabilityTree {
    failure_florets(ModelBuilder::new("single-floret").devent("x_f1", "fail").devent("x_f2", "no fail"), &[("v0", p)], 1)
        .build()
}

/// Two florets under the root whose leaves are all failed.
pub fn all_failed_tree() -> ProbabilityTree {
    ModelBuilder::new("all-failed")
        .devent("a", "cause a")
        .devent("b", "cause b")
        .devent("f1", "fail early")
        .devent("f2", "fail late")
        .floret("v0", &[("v1", "a"), ("v2", "b")], &[0.5, 0.5])
        .floret("v1", &[("v3", "f1"), ("v4", "f2")], &[0.2, 0.8])
        .floret("v2", &[("v5", "f1"), ("v6", "f2")], &[0.6, 0.4])
        .leaf("v3", LeafStatus::Failed)
        .leaf("v4", LeafStatus::Failed)
        .leaf("v5", LeafStatus::Failed)
        .leaf("v6", LeafStatus::Failed)
        .build()
}

/// A tree whose florets all carry different d-event sets.
pub fn distinct_label_tree() -> ProbabilityTree {
    ModelBuilder::new("distinct")
        .devent("a", "cause a")
        .devent("b", "cause b")
        .devent("fa", "fail after a")
        .devent("na", "no fail after a")
        .devent("fb", "fail after b")
        .devent("nb", "no fail after b")
        .floret("v0", &[("v1", "a"), ("v2", "b")], &[0.5, 0.5])
        .floret("v1", &[("v3", "fa"), ("v4", "na")], &[0.5, 0.5])
        .floret("v2", &[("v5", "fb"), ("v6", "nb")], &[0.5, 0.5])
        .leaf("v3", LeafStatus::Failed)
        .leaf("v4", LeafStatus::Operational)
        .leaf("v5", LeafStatus::Failed)
        .leaf("v6", LeafStatus::Operational)
        .build()
}

/// Complete binary tree with `depth` levels of edges; the last level is the
/// failure indicator.
pub fn complete_binary_tree(depth: usize) -> ProbabilityTree {
    assert!(depth >= 1);
    let mut b = ModelBuilder::new("binary");
    for level in 0..depth - 1 {
        b = b
            .devent(&format!("l{level}a"), "left")
            .devent(&format!("l{level}b"), "right");
    }
    b = b.devent("x_f1", "fail").devent("x_f2", "no fail");
    let mut frontier = vec!["v0".to_string()];
    let mut next = 1;
    for level in 0..depth {
        let mut children = Vec::new();
        for v in &frontier {
            let (l, r) = (format!("v{next}"), format!("v{}", next + 1));
            next += 2;
            let labels = if level + 1 == depth {
                ("x_f1".to_string(), "x_f2".to_string())
            } else {
                (format!("l{level}a"), format!("l{level}b"))
            };
            b = b.floret(v, &[(&l, &labels.0), (&r, &labels.1)], &[0.5, 0.5]);
            if level + 1 == depth {
                b = b.leaf(&l, LeafStatus::Failed).leaf(&r, LeafStatus::Operational);
            }
            children.extend([l, r]);
        }
        frontier = children;
    }
    b.build()
}

/// One draw from a Dirichlet distribution with concentrations `alpha`.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
            .collect();
        let total: f64 = draws.iter().sum();
        let v: Vec<f64> = draws.iter().map(|x| x / total).collect();
        // Degenerate draws (a component rounding to 0) are rejected so the
        // result stays in the open simplex.
        if total > 0.0 && v.iter().all(|&p| p > 1e-9 && p < 1.0) {
            return v;
        }
    }
}

/// Redraws every transition probability while keeping stages and colour
/// ties intact: edges of one colour share a value and each floret sums to 1.
pub fn randomize_theta<R: Rng + ?Sized>(t: &ProbabilityTree, rng: &mut R) -> Result<ProbabilityTree> {
    let st = StagedTree::new(t.clone());
    let tree = t.tree();
    let mut colour_value: Vec<Option<f64>> = vec![None; st.colour_count()];
    let mut theta = vec![Vec::new(); tree.vertex_count()];
    for block in st.stages().stages() {
        let rep = block[0];
        let edges = tree.out_edges(rep);
        let colours: Vec<usize> = edges.iter().map(|&e| st.edge_colour(e)).collect();
        let fixed: f64 = colours.iter().filter_map(|&c| colour_value[c]).sum();
        let mut free: Vec<usize> = colours
            .iter()
            .copied()
            .filter(|&c| colour_value[c].is_none())
            .collect();
        free.sort();
        free.dedup();
        let remaining = 1.0 - fixed;
        let tol = t.tolerance();
        if free.is_empty() {
            if remaining.abs() > tol {
                return Err(CegError::InfeasibleTies(tree.name(rep).to_string()));
            }
        } else {
            if remaining <= 0.0 {
                return Err(CegError::InfeasibleTies(tree.name(rep).to_string()));
            }
            // A colour used by several edges of this floret counts once per
            // edge, so weights are divided by the multiplicity.
            let share = dirichlet(rng, &vec![1.0; free.len()]);
            for (&c, s) in free.iter().zip(share) {
                let multiplicity = colours.iter().filter(|&&x| x == c).count() as f64;
                colour_value[c] = Some(remaining * s / multiplicity);
            }
        }
        let vector: Vec<f64> = colours.iter().map(|&c| colour_value[c].unwrap()).collect();
        for &v in block {
            theta[v.0] = vector.clone();
        }
    }
    // Renormalize the last component against rounding so every floret sums
    // to 1 within tolerance.
    for v in tree.situations() {
        let s: f64 = theta[v.0].iter().sum();
        if (s - 1.0).abs() > t.tolerance() {
            return Err(CegError::InfeasibleTies(tree.name(v).to_string()));
        }
    }
    t.with_theta(theta)
}

/// Shape of a random tree.
#[derive(Debug, Clone, Copy)]
pub struct RandomTreeParams {
    /// Maximum number of edges on a root-to-leaf path (at least 1).
    pub max_depth: usize,
    /// Maximum floret size on non-terminal situations (at least 2).
    pub max_branching: usize,
    /// Chance that a non-root situation above the last level ends in a
    /// failure floret.
    pub stop_probability: f64,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        RandomTreeParams {
            max_depth: 6,
            max_branching: 4,
            stop_probability: 0.3,
        }
    }
}

/// A random probability tree. Florets at one depth share a d-event alphabet
/// and pick from two probability templates, so stages and positions merge
/// regularly. Terminal florets are binary fail / no-fail florets.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, params: RandomTreeParams) -> ProbabilityTree {
    assert!(params.max_depth >= 1 && params.max_branching >= 2);
    let levels = params.max_depth - 1;
    let mut b = ModelBuilder::new("random")
        .devent("x_f1", "fail")
        .devent("x_f2", "no fail");
    let mut alphabets = Vec::new();
    let mut templates = Vec::new();
    for level in 0..levels {
        let k = rng.random_range(2..=params.max_branching);
        let labels: Vec<String> = (0..k).map(|j| format!("d{level}_{j}")).collect();
        for l in &labels {
            b = if level == 0 {
                b.root_cause(l, l)
            } else {
                b.devent(l, l)
            };
        }
        alphabets.push(labels);
        templates.push([dirichlet(rng, &vec![1.0; k]), dirichlet(rng, &vec![1.0; k])]);
    }
    let fail_templates: Vec<[f64; 2]> = (0..=levels)
        .map(|_| {
            let p = dirichlet(rng, &[1.0, 1.0])[0];
            [p, 1.0 - p]
        })
        .collect();

    let mut counter = 1usize;
    let mut frontier = vec![("v0".to_string(), 0usize)];
    while let Some((v, level)) = frontier.pop() {
        let terminal = level == levels || (level > 0 && rng.random_bool(params.stop_probability));
        if terminal {
            let (f, n) = (format!("v{counter}"), format!("v{}", counter + 1));
            counter += 2;
            let pick = rng.random_bool(0.5);
            let p = if pick {
                fail_templates[level][0]
            } else {
                fail_templates[level][1]
            };
            b = b
                .floret(&v, &[(&f, "x_f1"), (&n, "x_f2")], &[p, 1.0 - p])
                .leaf(&f, LeafStatus::Failed)
                .leaf(&n, LeafStatus::Operational);
        } else {
            let children: Vec<String> = (0..alphabets[level].len())
                .map(|j| format!("v{}", counter + j))
                .collect();
            counter += children.len();
            let pairs: Vec<(&str, &str)> = children
                .iter()
                .zip(&alphabets[level])
                .map(|(c, d)| (c.as_str(), d.as_str()))
                .collect();
            let theta = &templates[level][rng.random_range(0..2)];
            b = b.floret(&v, &pairs, theta);
            frontier.extend(children.into_iter().map(|c| (c, level + 1)));
        }
    }
    b.build()
}

/// Vertices by name, for tests.
pub fn vertex(t: &ProbabilityTree, name: &str) -> VertexId {
    t.tree()
        .vertex_by_name(name)
        .unwrap_or_else(|| panic!("no vertex {name}"))
}
