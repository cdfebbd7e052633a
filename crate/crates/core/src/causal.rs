//! Causal effects of stochastic manipulations, back-door partitions and
//! the adjustment formula.
//!
//! Every probability written `π*(·)` below is taken in the idle CEG
//! conditioned on the intervened paths `Λ(w*)`; `π̂*(·)` is the same under
//! the manipulated CEG.

use std::collections::BTreeMap;
use std::fmt;

use crate::ceg::{Ceg, CegEdgeId, NodeId, NodeKind};
use crate::error::{CegError, Result};
use crate::event_tree::DEventId;
use crate::intervention::{
    force_edges, infer_indicator_distribution, manipulated_ceg, manipulated_path_probabilities,
    validate_stochastic, IndicatorVector, RemedialRecord, StochasticManipulation,
};
use crate::paths::PathSet;

/// Looks up a d-event by id.
pub fn resolve_devent(c: &Ceg, id: &str) -> Result<DEventId> {
    c.devent_by_name(id)
        .ok_or_else(|| CegError::UnknownSelector(format!("devent:{id}")))
}

/// d-events on the out-edges of `w*`, in order of first appearance.
pub fn controlled_devents(c: &Ceg, w_star: &[NodeId]) -> Vec<DEventId> {
    let mut out = Vec::new();
    for &w in w_star {
        for &e in c.out_edges(w) {
            let d = c.edge(e).devent;
            if !out.contains(&d) {
                out.push(d);
            }
        }
    }
    out
}

/// `E(w*)`.
pub fn intervened_edges(c: &Ceg, w_star: &[NodeId]) -> Vec<CegEdgeId> {
    w_star.iter().flat_map(|&w| c.out_edges(w).iter().copied()).collect()
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Ground truth: enumerates the paths of the manipulated CEG and adds up
/// those traversing an edge labelled `y`. An empty manipulation gives the
/// idle probability `π(Λ_y)`.
pub fn brute_force_effect(c: &Ceg, m: &StochasticManipulation, y: DEventId) -> Result<f64> {
    if m.is_empty() {
        return Ok(c.mass(&c.lambda_devent(y)));
    }
    let manipulated = manipulated_ceg(c, m)?.ceg;
    let mut total = 0.0;
    for (path, p) in manipulated.paths().iter().zip(manipulated.path_probabilities()) {
        if path.iter().any(|e| manipulated.edge(*e).devent == y) {
            total += p;
        }
    }
    Ok(total)
}

/// `Σ_x π*(Λ_y ‖ Λ_x) π̂*(Λ_x)` over the controlled d-events `x`.
///
/// The singular effect of `x` forces the `x`-edge at every intervened
/// position carrying `x` and conditions on reaching one of those positions.
/// This matches the edge-level sum whenever each controlled d-event labels
/// a single edge, or all edges it labels receive the same θ̂.
pub fn causal_effect_devent(c: &Ceg, m: &StochasticManipulation, y: DEventId) -> Result<f64> {
    validate_stochastic(c, m)?;
    let w_star = m.positions();
    let e_star = intervened_edges(c, &w_star);
    let controlled = controlled_devents(c, &w_star);
    for &x in &controlled {
        if let Some(e) = c.edges_with_devent(x).into_iter().find(|e| !e_star.contains(e)) {
            return Err(CegError::ControlledEventLeaksOutsideIntervention {
                devent: c.devent(x).id.clone(),
                edge: c.edge_name(e),
            });
        }
    }
    let lam = c.lambda_nodes(&w_star);
    let hat = manipulated_path_probabilities(c, m);
    let hat_total = lam.measure(&hat);
    let lam_y = c.lambda_devent(y);
    let mut total = 0.0;
    for &x in &controlled {
        let x_edges = c.edges_with_devent(x);
        let positions: Vec<NodeId> = x_edges.iter().map(|&e| c.edge(e).source).collect();
        let forced = force_edges(c, &x_edges)?;
        let reach = c.lambda_nodes(&positions);
        let single = ratio(forced.mass(&reach.intersection(&lam_y)), forced.mass(&reach))
            .ok_or_else(|| CegError::UndefinedConditional(format!("Λ_y given Λ_{}", c.devent(x).id)))?;
        let px = c.lambda_devent(x).intersection(&lam).measure(&hat) / hat_total;
        total += single * px;
    }
    Ok(total)
}

/// `Σ_{e ∈ E(w*)} π*(Λ_y | Λ(e)) π̂*(Λ(e))`.
pub fn causal_effect_edge_level(c: &Ceg, m: &StochasticManipulation, y: DEventId) -> Result<f64> {
    if m.is_empty() {
        return Ok(c.mass(&c.lambda_devent(y)));
    }
    validate_stochastic(c, m)?;
    let w_star = m.positions();
    let lam = c.lambda_nodes(&w_star);
    let hat = manipulated_path_probabilities(c, m);
    let hat_total = lam.measure(&hat);
    let lam_y = c.lambda_devent(y);
    let mut total = 0.0;
    for e in intervened_edges(c, &w_star) {
        let through = c.lambda_edge(e);
        let given = ratio(c.mass(&through.intersection(&lam_y)), c.mass(through))
            .ok_or_else(|| CegError::UndefinedConditional(format!("Λ_y given {}", c.edge_name(e))))?;
        total += given * through.measure(&hat) / hat_total;
    }
    Ok(total)
}

// --- back-door partitions ------------------------------------------------

/// What the blocks of a declared partition are made of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionBasis {
    DEvents,
    Stages,
    Positions,
    Edges,
}

impl PartitionBasis {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "devents" => Ok(PartitionBasis::DEvents),
            "stages" => Ok(PartitionBasis::Stages),
            "positions" => Ok(PartitionBasis::Positions),
            "edges" => Ok(PartitionBasis::Edges),
            other => Err(CegError::UnknownSelector(format!("partition basis `{other}`"))),
        }
    }
}

/// Blocks `{Λ_z}` partitioning `Λ(w*)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackdoorPartition {
    pub name: String,
    pub blocks: Vec<PathSet>,
    /// Human-readable description of each block.
    pub labels: Vec<String>,
}

/// Builds the blocks `∪ Λ(item) ∩ Λ(w*)` from named objects. Stages are
/// written `u<k>`.
pub fn partition_from_items(
    c: &Ceg,
    w_star: &[NodeId],
    basis: PartitionBasis,
    blocks: &[Vec<String>],
    name: &str,
) -> Result<BackdoorPartition> {
    let lam = c.lambda_nodes(w_star);
    let mut sets = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut set = PathSet::empty(c.path_count());
        for item in block {
            let part = match basis {
                PartitionBasis::DEvents => c.lambda_devent(resolve_devent(c, item)?),
                PartitionBasis::Positions => c
                    .node_by_name(item)
                    .map(|n| c.lambda_node(n).clone())
                    .ok_or_else(|| CegError::UnknownSelector(format!("position:{item}")))?,
                PartitionBasis::Edges => c.lambda_edge(c.edge_by_ref(item)?).clone(),
                PartitionBasis::Stages => {
                    let k = item
                        .strip_prefix('u')
                        .and_then(|k| k.parse::<usize>().ok())
                        .ok_or_else(|| CegError::UnknownSelector(format!("stage:{item}")))?;
                    let members: Vec<_> = c.positions().filter(|&n| c.node(n).stage == Some(k)).collect();
                    if members.is_empty() {
                        return Err(CegError::UnknownSelector(format!("stage:{item}")));
                    }
                    c.lambda_nodes(&members)
                }
            };
            set.union_with(&part);
        }
        sets.push(set.intersection(&lam));
    }
    Ok(BackdoorPartition {
        name: name.to_string(),
        blocks: sets,
        labels: blocks.iter().map(|b| b.join(" | ")).collect(),
    })
}

fn check_partition_shape(c: &Ceg, w_star: &[NodeId], p: &BackdoorPartition) -> Result<()> {
    let lam = c.lambda_nodes(w_star);
    let mut union = PathSet::empty(c.path_count());
    for (i, b) in p.blocks.iter().enumerate() {
        if b.universe() != c.path_count() {
            return Err(CegError::NotAPartition(format!("block {i} belongs to another graph")));
        }
        if !b.is_subset(&lam) {
            return Err(CegError::NotAPartition(format!("block {i} leaves the intervened paths")));
        }
        if !b.is_disjoint(&union) {
            return Err(CegError::NotAPartition(format!("block {i} overlaps an earlier block")));
        }
        union.union_with(b);
    }
    if union != lam {
        return Err(CegError::NotAPartition(format!(
            "{} intervened paths are not covered",
            lam.difference(&union).len()
        )));
    }
    Ok(())
}

/// One side-by-side comparison made by the criteria check.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub criterion: u8,
    pub position: NodeId,
    pub edge: CegEdgeId,
    pub block: usize,
    /// Conditioned on the position (criterion 1) or on the position, the
    /// controlled d-event and the block (criterion 2). `None` when the
    /// conditioning event has zero probability.
    pub lhs: Option<f64>,
    /// Conditioned on the edge (and the block, for criterion 2).
    pub rhs: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackdoorReport {
    pub holds: bool,
    pub comparisons: Vec<Comparison>,
}

impl BackdoorReport {
    pub fn violations(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| !c.holds)
    }

    pub fn criterion_holds(&self, criterion: u8) -> bool {
        self.comparisons
            .iter()
            .filter(|c| c.criterion == criterion)
            .all(|c| c.holds)
    }
}

fn compare(lhs: Option<f64>, rhs: Option<f64>, tol: f64) -> bool {
    match (lhs, rhs) {
        (Some(a), Some(b)) => (a - b).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

/// Checks both back-door criteria for every intervened position, every
/// out-edge and every block:
///
/// 1. `π*(Λ_z | Λ(w)) = π*(Λ_z | Λ(e))`
/// 2. `π*(Λ_y | Λ(w), Λ_x, Λ_z) = π*(Λ_y | Λ(e), Λ_z)` with `x = x(e)`.
pub fn check_backdoor_partition(
    c: &Ceg,
    w_star: &[NodeId],
    p: &BackdoorPartition,
    y: DEventId,
) -> Result<BackdoorReport> {
    if w_star.is_empty() {
        return Err(CegError::EmptyInterventionSet);
    }
    check_partition_shape(c, w_star, p)?;
    let tol = c.tolerance();
    let lam_y = c.lambda_devent(y);
    let mut comparisons = Vec::new();
    for &w in w_star {
        let lw = c.lambda_node(w);
        for &e in c.out_edges(w) {
            let le = c.lambda_edge(e);
            let lx = c.lambda_devent(c.edge(e).devent);
            let lwx = lw.intersection(&lx);
            for (k, z) in p.blocks.iter().enumerate() {
                let lhs = ratio(c.mass(&z.intersection(lw)), c.mass(lw));
                let rhs = ratio(c.mass(&z.intersection(le)), c.mass(le));
                comparisons.push(Comparison {
                    criterion: 1,
                    position: w,
                    edge: e,
                    block: k,
                    lhs,
                    rhs,
                    holds: compare(lhs, rhs, tol),
                });
                let lwxz = lwx.intersection(z);
                let lez = le.intersection(z);
                let lhs = ratio(c.mass(&lwxz.intersection(&lam_y)), c.mass(&lwxz));
                let rhs = ratio(c.mass(&lez.intersection(&lam_y)), c.mass(&lez));
                comparisons.push(Comparison {
                    criterion: 2,
                    position: w,
                    edge: e,
                    block: k,
                    lhs,
                    rhs,
                    holds: compare(lhs, rhs, tol),
                });
            }
        }
    }
    Ok(BackdoorReport {
        holds: comparisons.iter().all(|c| c.holds),
        comparisons,
    })
}

struct Adjustment<'a> {
    c: &'a Ceg,
    lam_y: PathSet,
    hat: Vec<f64>,
    hat_total: f64,
}

impl Adjustment<'_> {
    fn new<'a>(c: &'a Ceg, m: &StochasticManipulation, p: &BackdoorPartition, y: DEventId) -> Result<Adjustment<'a>> {
        let w_star = m.positions();
        validate_stochastic(c, m)?;
        if !check_backdoor_partition(c, &w_star, p, y)?.holds {
            return Err(CegError::PartitionNotValid);
        }
        let hat = manipulated_path_probabilities(c, m);
        let hat_total = c.lambda_nodes(&w_star).measure(&hat);
        Ok(Adjustment {
            c,
            lam_y: c.lambda_devent(y),
            hat,
            hat_total,
        })
    }

    /// `π*(Λ_y | cond) · π*(Λ_z | Λ(w)) · π̂*(mass_set)`, with terms whose
    /// weight vanishes skipped before their conditional is needed.
    fn term(&self, w: NodeId, cond: &PathSet, z: &PathSet, mass_set: &PathSet) -> Result<f64> {
        let c = self.c;
        let lw = c.lambda_node(w);
        let pz = c.mass(&z.intersection(lw)) / c.mass(lw);
        let px = mass_set.measure(&self.hat) / self.hat_total;
        if pz == 0.0 || px == 0.0 {
            return Ok(0.0);
        }
        let given = ratio(c.mass(&cond.intersection(&self.lam_y)), c.mass(cond)).ok_or_else(|| {
            CegError::UndefinedConditional(format!("Λ_y given a block at {}", c.node(w).name))
        })?;
        Ok(given * pz * px)
    }
}

/// Back-door adjustment over controlled d-events:
/// `Σ_w Σ_x Σ_z π*(Λ_y | Λ(w), Λ_x, Λ_z) π*(Λ_z | Λ(w)) π̂*(Λ_x ∩ Λ(w))`.
///
/// With a single intervened position this is
/// `Σ_x Σ_z π*(Λ_y | Λ_x, Λ_z) π*(Λ_z) π̂*(Λ_x)`.
pub fn backdoor_adjustment(c: &Ceg, m: &StochasticManipulation, p: &BackdoorPartition, y: DEventId) -> Result<f64> {
    let adj = Adjustment::new(c, m, p, y)?;
    let mut total = 0.0;
    for w in m.positions() {
        let lw = c.lambda_node(w);
        for x in controlled_devents(c, &[w]) {
            let lwx = lw.intersection(&c.lambda_devent(x));
            for z in &p.blocks {
                total += adj.term(w, &lwx.intersection(z), z, &lwx)?;
            }
        }
    }
    Ok(total)
}

/// Edge-level adjustment:
/// `Σ_w Σ_{e ∈ E(w)} Σ_z π*(Λ_y | Λ(e), Λ_z) π*(Λ_z | Λ(w)) π̂*(Λ(e))`.
pub fn backdoor_adjustment_edge_level(
    c: &Ceg,
    m: &StochasticManipulation,
    p: &BackdoorPartition,
    y: DEventId,
) -> Result<f64> {
    let adj = Adjustment::new(c, m, p, y)?;
    let mut total = 0.0;
    for w in m.positions() {
        for &e in c.out_edges(w) {
            let le = c.lambda_edge(e);
            for z in &p.blocks {
                total += adj.term(w, &le.intersection(z), z, le)?;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum StepKey {
    Stage(usize),
    Colour(usize),
    Edge(usize),
    Sink(bool),
    PastTarget,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Stage,
    Colour,
    Edge,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Stage => "stage",
            Family::Colour => "edge colour",
            Family::Edge => "edge",
        })
    }
}

/// Partition of `Λ(w*)` by what each path meets `k` steps after `w*`: the
/// stage of the vertex, the colour of the edge, or the edge itself. Paths
/// that already passed `y` share one block.
fn step_partition(c: &Ceg, w_star: &[NodeId], y: DEventId, family: Family, k: usize) -> BackdoorPartition {
    let lam = c.lambda_nodes(w_star);
    let mut groups: BTreeMap<StepKey, (usize, PathSet, Vec<String>)> = BTreeMap::new();
    for i in lam.iter() {
        let edges = &c.paths()[i];
        let nodes = c.path_nodes(i);
        let start = nodes
            .iter()
            .position(|n| w_star.contains(n))
            .expect("path passes w*");
        let y_at = edges.iter().position(|e| c.edge(*e).devent == y);
        let at = start + k;
        let passed = y_at.is_some_and(|j| j < at);
        let (key, label) = if passed {
            (StepKey::PastTarget, "after y".to_string())
        } else {
            match family {
                Family::Stage => {
                    let n = nodes[at.min(nodes.len() - 1)];
                    match c.node(n).kind {
                        NodeKind::Position => {
                            let s = c.node(n).stage.unwrap_or(usize::MAX);
                            (StepKey::Stage(s), format!("u{s}"))
                        }
                        kind => {
                            let fail = kind == NodeKind::FailureSink;
                            (StepKey::Sink(fail), c.node(n).name.clone())
                        }
                    }
                }
                Family::Colour | Family::Edge if at >= edges.len() => (StepKey::End, "end".into()),
                Family::Colour => {
                    let e = c.edge(edges[at]);
                    (StepKey::Colour(e.colour), c.devent(e.devent).id.clone())
                }
                Family::Edge => (StepKey::Edge(edges[at].0), c.edge_name(edges[at])),
            }
        };
        let entry = groups
            .entry(key)
            .or_insert_with(|| (i, PathSet::empty(c.path_count()), Vec::new()));
        entry.1.insert(i);
        if !entry.2.contains(&label) {
            entry.2.push(label);
        }
    }
    let mut blocks: Vec<_> = groups.into_values().collect();
    blocks.sort_by_key(|b| b.0);
    BackdoorPartition {
        name: format!("{family} partition {k} step{} after w*", if k == 1 { "" } else { "s" }),
        labels: blocks.iter().map(|b| b.2.join(" | ")).collect(),
        blocks: blocks.into_iter().map(|b| b.1).collect(),
    }
}

/// Every non-trivial candidate partition, in search order: stage blocks
/// for each step, then edge-colour blocks, then single edges.
pub fn backdoor_candidates(c: &Ceg, w_star: &[NodeId], y: DEventId) -> Vec<BackdoorPartition> {
    if w_star.is_empty() {
        return Vec::new();
    }
    let max_len = c.paths().iter().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<BackdoorPartition> = Vec::new();
    for family in [Family::Stage, Family::Colour, Family::Edge] {
        for k in 1..=max_len {
            let p = step_partition(c, w_star, y, family, k);
            if p.blocks.len() < 2 {
                continue;
            }
            let mut key = p.blocks.clone();
            key.sort_by_key(|b| b.iter().next());
            let seen = out.iter().any(|q| {
                let mut other = q.blocks.clone();
                other.sort_by_key(|b| b.iter().next());
                other == key
            });
            if !seen {
                out.push(p);
            }
        }
    }
    out
}

/// First candidate passing both criteria. `None` only means no candidate in
/// the generated family works; other partitions may still exist.
pub fn search_backdoor_partition(c: &Ceg, w_star: &[NodeId], y: DEventId) -> Option<BackdoorPartition> {
    backdoor_candidates(c, w_star, y)
        .into_iter()
        .find(|p| check_backdoor_partition(c, w_star, p, y).is_ok_and(|r| r.holds))
}

// --- imperfect remedies -----------------------------------------------------

/// One term of the mixture over hidden actions and indicator vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    pub action: String,
    pub indicators: IndicatorVector,
    pub weight: f64,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBreakdown {
    pub terms: Vec<MixtureTerm>,
    pub total: f64,
}

/// `Σ_I Σ_a π(Λ_y ‖ θ̂(I, a)) p(I | a, r) p(a | r, δ)`.
///
/// `intervention_map` turns an indicator vector and action into the
/// manipulation it implies. A perfect record contributes the single term
/// for `I(r)`.
pub fn expected_effect_imperfect(
    c: &Ceg,
    rec: &RemedialRecord,
    intervention_map: &dyn Fn(&[u8], &str) -> Result<StochasticManipulation>,
    y: DEventId,
) -> Result<MixtureBreakdown> {
    let tol = c.tolerance();
    infer_indicator_distribution(rec, tol)?;
    let mut rows: Vec<(String, IndicatorVector, f64)> = Vec::new();
    if rec.delta {
        let v = rec.remedy_indicators.clone().expect("validated");
        rows.push((rec.maintenance.clone().unwrap_or_default(), v, 1.0));
    } else {
        for a in &rec.actions {
            match a.indicators.as_ref().expect("validated") {
                crate::intervention::IndicatorLaw::Point(v) => rows.push((a.name.clone(), v.clone(), a.probability)),
                crate::intervention::IndicatorLaw::Distribution(d) => {
                    for (v, p) in d {
                        rows.push((a.name.clone(), v.clone(), a.probability * p));
                    }
                }
            }
        }
    }
    let mut terms = Vec::with_capacity(rows.len());
    let mut total = 0.0;
    for (action, indicators, weight) in rows {
        let m = intervention_map(&indicators, &action)?;
        let effect = causal_effect_edge_level(c, &m, y)?;
        total += weight * effect;
        terms.push(MixtureTerm {
            action,
            indicators,
            weight,
            effect,
        });
    }
    Ok(MixtureBreakdown { terms, total })
}
