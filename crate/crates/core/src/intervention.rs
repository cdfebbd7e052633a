//! Remedial interventions on a CEG.
//!
//! A stochastic manipulation replaces the transition vectors of a set of
//! intervened positions `w*`. Its effect is described by the manipulated
//! CEG: the sub-graph traversed by the intervened paths `Λ(w*)`, carrying
//! probabilities conditioned on `Λ(w*)`. Remedial records describe what a
//! maintenance log says about which root causes were fixed, and are turned
//! into distributions over intervention indicators.

use std::collections::BTreeMap;

use crate::ceg::{Ceg, CegEdgeId, CegNode, NodeId};
use crate::error::{CegError, Result};
use crate::paths::PathSet;

/// New transition vectors for the intervened positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StochasticManipulation {
    theta_hat: BTreeMap<NodeId, Vec<f64>>,
}

impl StochasticManipulation {
    pub fn new(entries: impl IntoIterator<Item = (NodeId, Vec<f64>)>) -> Self {
        StochasticManipulation {
            theta_hat: entries.into_iter().collect(),
        }
    }

    /// A manipulation that changes nothing.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_hat.is_empty()
    }

    /// Intervened positions, in numbering order.
    pub fn positions(&self) -> Vec<NodeId> {
        self.theta_hat.keys().copied().collect()
    }

    pub fn theta_hat(&self, w: NodeId) -> Option<&[f64]> {
        self.theta_hat.get(&w).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &[f64])> {
        self.theta_hat.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Edge probabilities of `c` with θ̂ substituted on the intervened
    /// florets.
    pub fn apply(&self, c: &Ceg) -> Vec<f64> {
        let mut theta = c.edge_thetas().to_vec();
        for (w, hat) in &self.theta_hat {
            for (e, p) in c.out_edges(*w).iter().zip(hat) {
                theta[e.0] = *p;
            }
        }
        theta
    }
}

/// What the engine does besides replacing θ on `w*`: the sibling edges of
/// `w*` that the definition sets to zero, and the positions on intervened
/// paths that keep their idle vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManipulationPlan {
    pub intervened: Vec<NodeId>,
    pub zeroed_sibling_edges: Vec<CegEdgeId>,
    pub unchanged_positions: Vec<NodeId>,
}

/// Checks a stochastic manipulation against `c`.
pub fn validate_stochastic(c: &Ceg, m: &StochasticManipulation) -> Result<ManipulationPlan> {
    let tol = c.tolerance();
    if m.is_empty() {
        return Err(CegError::EmptyInterventionSet);
    }
    for (w, hat) in m.iter() {
        if w.0 >= c.nodes().len() || c.is_sink(w) {
            return Err(CegError::PositionNotInCeg(format!("#{}", w.0)));
        }
        let name = &c.node(w).name;
        let idle = c.theta(w);
        if hat.len() != idle.len() {
            return Err(CegError::LengthMismatch {
                expected: idle.len(),
                found: hat.len(),
            });
        }
        if let Some(&value) = hat.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(CegError::OutOfOpenInterval {
                position: name.clone(),
                value,
            });
        }
        let sum: f64 = hat.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(CegError::NotNormalized {
                position: name.clone(),
                sum,
            });
        }
        if hat.iter().zip(&idle).all(|(a, b)| (a - b).abs() <= tol) {
            return Err(CegError::IdenticalTheta(name.clone()));
        }
    }
    let intervened = m.positions();
    for (i, &a) in intervened.iter().enumerate() {
        for &b in &intervened[i + 1..] {
            if !c.lambda_node(a).is_disjoint(c.lambda_node(b)) {
                return Err(CegError::OverlappingIntervention(
                    c.node(a).name.clone(),
                    c.node(b).name.clone(),
                ));
            }
        }
    }

    let mut zeroed = Vec::new();
    for &w in &intervened {
        for &into in c.in_edges(w) {
            let parent = c.edge(into).source;
            for &e in c.out_edges(parent) {
                if !intervened.contains(&c.edge(e).target) {
                    zeroed.push(e);
                }
            }
        }
    }
    zeroed.sort();
    zeroed.dedup();
    let on_paths = c.lambda_nodes(&intervened);
    let unchanged = c
        .positions()
        .filter(|n| !intervened.contains(n) && !c.lambda_node(*n).is_disjoint(&on_paths))
        .collect();
    Ok(ManipulationPlan {
        intervened,
        zeroed_sibling_edges: zeroed,
        unchanged_positions: unchanged,
    })
}

/// π̂(λ) for every path of `c`: the idle product with θ̂ substituted on
/// intervened edges for paths through `w*`, and 0 elsewhere.
pub fn manipulated_path_probabilities(c: &Ceg, m: &StochasticManipulation) -> Vec<f64> {
    let theta = m.apply(c);
    let through = c.lambda_nodes(&m.positions());
    c.paths()
        .iter()
        .enumerate()
        .map(|(i, path)| {
            if through.contains(i) {
                path.iter().map(|e| theta[e.0]).product()
            } else {
                0.0
            }
        })
        .collect()
}

pub fn manipulated_path_probability(c: &Ceg, m: &StochasticManipulation, path: usize) -> f64 {
    let through = c.lambda_nodes(&m.positions());
    if !through.contains(path) {
        return 0.0;
    }
    let theta = m.apply(c);
    c.paths()[path].iter().map(|e| theta[e.0]).product()
}

/// Which probabilities the conditioned graph carries.
#[derive(Debug, Clone, Copy)]
pub enum Conditioning<'a> {
    Idle,
    Manipulated(&'a StochasticManipulation),
}

/// A sub-graph of a CEG together with the map back to the original.
#[derive(Debug, Clone)]
pub struct ConditionedCeg {
    pub ceg: Ceg,
    /// Original node of each retained node.
    pub node_origin: Vec<NodeId>,
    /// Original edge of each retained edge.
    pub edge_origin: Vec<CegEdgeId>,
}

impl ConditionedCeg {
    pub fn node_of(&self, original: NodeId) -> Option<NodeId> {
        self.node_origin.iter().position(|&n| n == original).map(NodeId)
    }

    pub fn edge_of(&self, original: CegEdgeId) -> Option<CegEdgeId> {
        self.edge_origin.iter().position(|&e| e == original).map(CegEdgeId)
    }
}

/// The CEG restricted to `Λ(w*)`, with each transition probability the
/// quotient of the intervened mass through the edge over the intervened
/// mass through its source.
///
/// The masses come from one forward and one backward pass: `f` is the
/// probability of reaching a node, `h` the part of it that has already
/// passed `w*`, and `g` the probability of reaching `w*` from a node.
pub fn conditioned_ceg(c: &Ceg, w_star: &[NodeId], which: Conditioning<'_>) -> Result<ConditionedCeg> {
    if w_star.is_empty() {
        return Err(CegError::EmptyInterventionSet);
    }
    for &w in w_star {
        if w.0 >= c.nodes().len() || c.is_sink(w) {
            return Err(CegError::PositionNotInCeg(format!("#{}", w.0)));
        }
    }
    let theta = match which {
        Conditioning::Idle => c.edge_thetas().to_vec(),
        Conditioning::Manipulated(m) => {
            validate_stochastic(c, m)?;
            m.apply(c)
        }
    };
    let n = c.nodes().len();
    let in_star = |v: NodeId| w_star.contains(&v);
    let order = topological_order(c);

    let mut f = vec![0.0; n];
    let mut h = vec![0.0; n];
    f[c.root().0] = 1.0;
    for &v in &order {
        if in_star(v) {
            h[v.0] = f[v.0];
        }
        for &e in c.out_edges(v) {
            let t = c.edge(e).target;
            f[t.0] += f[v.0] * theta[e.0];
            h[t.0] += h[v.0] * theta[e.0];
        }
    }
    let mut g = vec![0.0; n];
    for &v in order.iter().rev() {
        g[v.0] = if in_star(v) {
            1.0
        } else {
            c.out_edges(v)
                .iter()
                .map(|&e| theta[e.0] * g[c.edge(e).target.0])
                .sum()
        };
    }

    let through = c.lambda_nodes(w_star);
    let mut node_origin = Vec::new();
    let mut new_id = vec![None; n];
    for (i, _) in c.nodes().iter().enumerate() {
        if !c.lambda_node(NodeId(i)).is_disjoint(&through) {
            new_id[i] = Some(NodeId(node_origin.len()));
            node_origin.push(NodeId(i));
        }
    }
    let nodes: Vec<CegNode> = node_origin.iter().map(|&o| c.node(o).clone()).collect();

    let mut edges = Vec::new();
    let mut edge_origin = Vec::new();
    let mut new_theta = Vec::new();
    for &origin in &node_origin {
        let u = origin.0;
        let before = f[u] - h[u];
        let source_mass = h[u] + before * g[u];
        for &e in c.out_edges(origin) {
            if c.lambda_edge(e).is_disjoint(&through) {
                continue;
            }
            let edge = *c.edge(e);
            let t = edge.target.0;
            if source_mass <= 0.0 {
                return Err(CegError::UndefinedConditional(format!(
                    "no intervened mass reaches {}",
                    c.node(origin).name
                )));
            }
            let mass = theta[e.0] * (h[u] + before * g[t]);
            let mut copy = edge;
            copy.source = new_id[u].expect("source retained");
            copy.target = new_id[t].expect("target retained");
            edges.push(copy);
            edge_origin.push(e);
            new_theta.push(mass / source_mass);
        }
    }
    let ceg = Ceg::assemble(
        c.name().map(str::to_string),
        c.devents().to_vec(),
        nodes,
        edges,
        new_theta,
        new_id[c.root().0].expect("root retained"),
        c.stage_count(),
        c.tolerance(),
    );
    Ok(ConditionedCeg {
        ceg,
        node_origin,
        edge_origin,
    })
}

/// The manipulated CEG of `m`: the conditioned topology on `Λ(w*)`
/// carrying post-intervention probabilities.
pub fn manipulated_ceg(c: &Ceg, m: &StochasticManipulation) -> Result<ConditionedCeg> {
    conditioned_ceg(c, &m.positions(), Conditioning::Manipulated(m))
}

fn topological_order(c: &Ceg) -> Vec<NodeId> {
    let n = c.nodes().len();
    let mut indegree: Vec<usize> = (0..n).map(|i| c.in_edges(NodeId(i)).len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![c.root()];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &e in c.out_edges(v) {
            let t = c.edge(e).target;
            indegree[t.0] -= 1;
            if indegree[t.0] == 0 {
                stack.push(t);
            }
        }
    }
    order
}

/// Forces the listed edges: each gets probability 1 and its siblings 0.
pub fn force_edges(c: &Ceg, forced: &[CegEdgeId]) -> Result<Ceg> {
    let mut theta = c.edge_thetas().to_vec();
    for &e in forced {
        if e.0 >= c.edges().len() {
            return Err(CegError::UnknownEdge(format!("#{}", e.0)));
        }
        for &s in c.out_edges(c.edge(e).source) {
            theta[s.0] = 0.0;
        }
    }
    for &e in forced {
        theta[e.0] = 1.0;
    }
    Ok(c.with_edge_theta(theta))
}

/// Singular manipulation of one edge.
pub fn singular_manipulation(c: &Ceg, e: CegEdgeId) -> Result<Ceg> {
    force_edges(c, &[e])
}

// --- remedial records ---------------------------------------------------

/// Intervention indicators over `E^Δ`, listed in the order of
/// [`Ceg::root_cause_edges`].
pub type IndicatorVector = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterventionIndicators {
    edges: Vec<CegEdgeId>,
    values: IndicatorVector,
}

impl InterventionIndicators {
    pub fn from_vector(c: &Ceg, values: &[u8]) -> Result<Self> {
        let edges = c.root_cause_edges();
        if values.len() != edges.len() {
            return Err(CegError::LengthMismatch {
                expected: edges.len(),
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(CegError::InvalidRecord(format!("indicator value {bad} is not 0 or 1")));
        }
        Ok(InterventionIndicators {
            edges,
            values: values.to_vec(),
        })
    }

    /// Indicators equal to 1 exactly on `fixed`.
    pub fn from_fixed_edges(c: &Ceg, fixed: &[CegEdgeId]) -> Result<Self> {
        let edges = c.root_cause_edges();
        for e in fixed {
            if !edges.contains(e) {
                return Err(CegError::NotARootCauseEdge(c.edge_name(*e)));
            }
        }
        let values = edges.iter().map(|e| u8::from(fixed.contains(e))).collect();
        Ok(InterventionIndicators { edges, values })
    }

    pub fn edges(&self) -> &[CegEdgeId] {
        &self.edges
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, e: CegEdgeId) -> Option<u8> {
        self.edges.iter().position(|&x| x == e).map(|i| self.values[i])
    }

    /// The indicator subvector `I_w` over the out-edges of `w`.
    pub fn at_position(&self, c: &Ceg, w: NodeId) -> Vec<u8> {
        c.out_edges(w)
            .iter()
            .map(|&e| self.get(e).unwrap_or(0))
            .collect()
    }
}

/// `w* = { w ∈ W^Δ : some I_e = 1 on E(w) }`.
pub fn intervened_positions_from(c: &Ceg, indicators: &InterventionIndicators) -> Vec<NodeId> {
    let mut w: Vec<_> = indicators
        .edges()
        .iter()
        .zip(indicators.values())
        .filter(|(_, &v)| v == 1)
        .map(|(&e, _)| c.edge(e).source)
        .collect();
    w.sort();
    w.dedup();
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RemedyClass {
    Perfect,
    Imperfect,
    Uncertain,
}

/// Conditional law `p(I | r, a)`.
#[derive(Debug, Clone, PartialEq)]
pub enum IndicatorLaw {
    Point(IndicatorVector),
    Distribution(Vec<(IndicatorVector, f64)>),
}

/// A hidden maintenance action with `p(a | r, λ)` and `p(I | r, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenAction {
    pub name: String,
    pub probability: f64,
    pub indicators: Option<IndicatorLaw>,
}

/// One maintenance log entry after an observed failure.
#[derive(Debug, Clone, PartialEq)]
pub struct RemedialRecord {
    /// Observed maintenance `r`; `None` is `r_0`, nothing recorded.
    pub maintenance: Option<String>,
    /// Status indicator δ: the system was restored as good as new.
    pub delta: bool,
    /// The observed failure path, as CEG edge references.
    pub failure_path: Vec<String>,
    /// `I(r)`, the root causes the recorded remedy fixes.
    pub remedy_indicators: Option<IndicatorVector>,
    /// The hidden action space `A` with its conditionals.
    pub actions: Vec<HiddenAction>,
    /// `p(δ = 1 | r)`.
    pub p_delta: Option<f64>,
}

pub fn classify_remedy(rec: &RemedialRecord) -> RemedyClass {
    match (&rec.maintenance, rec.delta) {
        (None, _) => RemedyClass::Uncertain,
        (Some(_), true) => RemedyClass::Perfect,
        (Some(_), false) => RemedyClass::Imperfect,
    }
}

/// A finite distribution over indicator vectors, ordered by vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndicatorDistribution {
    support: BTreeMap<IndicatorVector, f64>,
}

impl IndicatorDistribution {
    pub fn point(v: IndicatorVector) -> Self {
        IndicatorDistribution {
            support: BTreeMap::from([(v, 1.0)]),
        }
    }

    fn add(&mut self, v: IndicatorVector, p: f64) {
        *self.support.entry(v).or_insert(0.0) += p;
    }

    pub fn probability(&self, v: &[u8]) -> f64 {
        self.support.get(v).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndicatorVector, f64)> {
        self.support.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.support.values().sum()
    }
}

fn check_normalized(sum: f64, tol: f64) -> Result<()> {
    if (sum - 1.0).abs() > tol {
        return Err(CegError::DistributionNotNormalized(sum));
    }
    Ok(())
}

/// Validates the tables of a record.
pub fn validate_record(rec: &RemedialRecord, tol: f64) -> Result<()> {
    if rec.maintenance.is_none() && (rec.delta || rec.remedy_indicators.is_some()) {
        return Err(CegError::InvalidRecord(
            "an unrecorded remedy cannot assert which root causes were fixed".into(),
        ));
    }
    if let Some(p) = rec.p_delta {
        if !(0.0..=1.0).contains(&p) {
            return Err(CegError::InvalidRecord(format!("p(delta) = {p} is not a probability")));
        }
    }
    if !rec.actions.is_empty() {
        check_normalized(rec.actions.iter().map(|a| a.probability).sum(), tol)?;
    }
    for a in &rec.actions {
        if !(0.0..=1.0).contains(&a.probability) {
            return Err(CegError::InvalidRecord(format!(
                "p({} | r, lambda) = {} is not a probability",
                a.name, a.probability
            )));
        }
        if let Some(IndicatorLaw::Distribution(d)) = &a.indicators {
            check_normalized(d.iter().map(|(_, p)| p).sum(), tol)?;
        }
    }
    Ok(())
}

/// `p(I | δ, λ, r)` for the observed δ: a point mass on `I(r)` when δ = 1,
/// otherwise `Σ_a p(I | r, a) p(a | r, λ)`.
pub fn infer_indicator_distribution(rec: &RemedialRecord, tol: f64) -> Result<IndicatorDistribution> {
    validate_record(rec, tol)?;
    if rec.delta {
        perfect_part(rec)
    } else {
        hidden_action_mixture(rec)
    }
}

fn perfect_part(rec: &RemedialRecord) -> Result<IndicatorDistribution> {
    rec.remedy_indicators
        .clone()
        .map(IndicatorDistribution::point)
        .ok_or_else(|| CegError::MissingConditional("I(r) for a perfect remedy".into()))
}

fn hidden_action_mixture(rec: &RemedialRecord) -> Result<IndicatorDistribution> {
    if rec.actions.is_empty() {
        return Err(CegError::MissingConditional("p(a | r, lambda)".into()));
    }
    let mut out = IndicatorDistribution::default();
    for a in &rec.actions {
        match &a.indicators {
            None => {
                return Err(CegError::MissingConditional(format!("p(I | r, {})", a.name)));
            }
            Some(IndicatorLaw::Point(v)) => out.add(v.clone(), a.probability),
            Some(IndicatorLaw::Distribution(d)) => {
                for (v, p) in d {
                    out.add(v.clone(), p * a.probability);
                }
            }
        }
    }
    Ok(out)
}

/// `p(I | r, λ) = p(δ=1 | r) p(I | δ=1, λ, r) + p(δ=0 | r) p(I | δ=0, λ, r)`,
/// for when δ itself was not observed.
pub fn infer_indicator_marginal(rec: &RemedialRecord, tol: f64) -> Result<IndicatorDistribution> {
    let mut unobserved = rec.clone();
    unobserved.delta = false;
    validate_record(&unobserved, tol)?;
    let p = rec
        .p_delta
        .ok_or_else(|| CegError::MissingConditional("p(delta | r)".into()))?;
    let mut out = IndicatorDistribution::default();
    if p > 0.0 {
        for (v, q) in perfect_part(rec)?.iter() {
            out.add(v.clone(), p * q);
        }
    }
    if p < 1.0 {
        for (v, q) in hidden_action_mixture(rec)?.iter() {
            out.add(v.clone(), (1.0 - p) * q);
        }
    }
    Ok(out)
}

// --- Dirichlet priors -------------------------------------------------------

/// Independent Dirichlet priors on the florets of some positions, with a
/// sensitivity vector for the linear update.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletFloretPrior {
    alpha: BTreeMap<NodeId, Vec<f64>>,
    eta: BTreeMap<NodeId, Vec<f64>>,
}

impl DirichletFloretPrior {
    pub fn new(
        c: &Ceg,
        alpha: BTreeMap<NodeId, Vec<f64>>,
        eta: BTreeMap<NodeId, Vec<f64>>,
    ) -> Result<Self> {
        for (w, a) in &alpha {
            if w.0 >= c.nodes().len() || c.is_sink(*w) {
                return Err(CegError::PositionNotInCeg(format!("#{}", w.0)));
            }
            let degree = c.out_edges(*w).len();
            let e = eta
                .get(w)
                .ok_or_else(|| CegError::MissingConditional(format!("eta for {}", c.node(*w).name)))?;
            for v in [a, e] {
                if v.len() != degree {
                    return Err(CegError::LengthMismatch {
                        expected: degree,
                        found: v.len(),
                    });
                }
                if v.iter().any(|&x| x.is_nan() || x <= 0.0) {
                    return Err(CegError::NonPositiveConcentration(c.node(*w).name.clone()));
                }
            }
        }
        if let Some(w) = eta.keys().find(|w| !alpha.contains_key(w)) {
            return Err(CegError::MissingConditional(format!("alpha for #{}", w.0)));
        }
        Ok(DirichletFloretPrior { alpha, eta })
    }

    pub fn alpha(&self, w: NodeId) -> Option<&[f64]> {
        self.alpha.get(&w).map(Vec::as_slice)
    }

    pub fn eta(&self, w: NodeId) -> Option<&[f64]> {
        self.eta.get(&w).map(Vec::as_slice)
    }

    /// Mean of the Dirichlet at `w`.
    pub fn mean(&self, w: NodeId) -> Option<Vec<f64>> {
        let a = self.alpha.get(&w)?;
        let total: f64 = a.iter().sum();
        Some(a.iter().map(|x| x / total).collect())
    }
}

/// `α̂_w = α_w + η_w (1 - I_w)`, componentwise.
pub fn update_dirichlet(
    prior: &DirichletFloretPrior,
    w: NodeId,
    indicators: &[u8],
) -> Result<DirichletFloretPrior> {
    let alpha = prior
        .alpha
        .get(&w)
        .ok_or_else(|| CegError::MissingConditional(format!("prior for #{}", w.0)))?;
    let eta = &prior.eta[&w];
    if indicators.len() != alpha.len() {
        return Err(CegError::LengthMismatch {
            expected: alpha.len(),
            found: indicators.len(),
        });
    }
    let updated = alpha
        .iter()
        .zip(eta)
        .zip(indicators)
        .map(|((a, e), &i)| a + e * f64::from(1 - i.min(1)))
        .collect();
    let mut next = prior.clone();
    next.alpha.insert(w, updated);
    Ok(next)
}

/// Turns indicators into a manipulation: every intervened position gets
/// the mean of its updated prior as θ̂.
pub fn manipulation_from_indicators(
    c: &Ceg,
    prior: &DirichletFloretPrior,
    indicators: &InterventionIndicators,
) -> Result<StochasticManipulation> {
    let mut entries = Vec::new();
    for w in intervened_positions_from(c, indicators) {
        let updated = update_dirichlet(prior, w, &indicators.at_position(c, w))?;
        entries.push((w, updated.mean(w).expect("updated position has a prior")));
    }
    Ok(StochasticManipulation::new(entries))
}

/// Λ(w*), the paths through the intervened positions.
pub fn intervened_paths(c: &Ceg, w_star: &[NodeId]) -> PathSet {
    c.lambda_nodes(w_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn bushing() -> Ceg {
        Ceg::from_tree(&fixtures::bushing_tree())
    }

    fn w(c: &Ceg, name: &str) -> NodeId {
        c.node_by_name(name).unwrap()
    }

    fn w1_manipulation(c: &Ceg) -> StochasticManipulation {
        StochasticManipulation::new([(w(c, "w1"), vec![0.3, 0.3, 0.1, 0.3])])
    }

    #[test]
    fn valid_manipulation_and_plan() {
        let c = bushing();
        let plan = validate_stochastic(&c, &w1_manipulation(&c)).unwrap();
        assert_eq!(plan.intervened, vec![w(&c, "w1")]);
        assert_eq!(plan.zeroed_sibling_edges, vec![c.edge_by_ref("w0->w2").unwrap()]);
        let names: Vec<_> = plan
            .unchanged_positions
            .iter()
            .map(|&n| c.node(n).name.as_str())
            .collect();
        assert_eq!(names, ["w0", "w3", "w4", "w5", "w6", "w7", "w8"]);
    }

    #[test]
    fn invalid_manipulations() {
        let c = bushing();
        let w1 = w(&c, "w1");
        let idle = StochasticManipulation::new([(w1, c.theta(w1))]);
        assert!(matches!(validate_stochastic(&c, &idle), Err(CegError::IdenticalTheta(_))));
        let zero = StochasticManipulation::new([(w1, vec![0.0, 0.5, 0.25, 0.25])]);
        assert!(matches!(
            validate_stochastic(&c, &zero),
            Err(CegError::OutOfOpenInterval { .. })
        ));
        let loose = StochasticManipulation::new([(w1, vec![0.3, 0.3, 0.3, 0.3])]);
        assert!(matches!(validate_stochastic(&c, &loose), Err(CegError::NotNormalized { .. })));
        let sink = StochasticManipulation::new([(c.failure_sink().unwrap(), vec![1.0])]);
        assert!(matches!(validate_stochastic(&c, &sink), Err(CegError::PositionNotInCeg(_))));
        let nested = StochasticManipulation::new([
            (w1, vec![0.3, 0.3, 0.1, 0.3]),
            (w(&c, "w3"), vec![0.5, 0.5]),
        ]);
        assert!(matches!(
            validate_stochastic(&c, &nested),
            Err(CegError::OverlappingIntervention(..))
        ));
        assert_eq!(
            validate_stochastic(&c, &StochasticManipulation::none()),
            Err(CegError::EmptyInterventionSet)
        );
    }

    #[test]
    fn manipulated_path_probability_substitutes_theta_hat() {
        let c = bushing();
        let m = w1_manipulation(&c);
        let gasket = c.edge_by_ref("w1->w3#1").unwrap();
        let through_w2 = c.lambda_node(w(&c, "w2"));
        for (i, path) in c.paths().iter().enumerate() {
            let p = manipulated_path_probability(&c, &m, i);
            if through_w2.contains(i) {
                assert_eq!(p, 0.0);
            } else if path.contains(&gasket) {
                let idle = c.path_probabilities()[i];
                assert!((p - idle / 0.35 * 0.3).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn root_manipulation_keeps_full_mass() {
        let c = Ceg::from_tree(&fixtures::conservator_tree());
        let m = StochasticManipulation::new([(c.root(), vec![0.1, 0.9])]);
        let total: f64 = manipulated_path_probabilities(&c, &m).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditioned_on_w1_drops_exogenous_branch() {
        let c = bushing();
        let cond = conditioned_ceg(&c, &[w(&c, "w1")], Conditioning::Idle).unwrap();
        let g = &cond.ceg;
        assert!(g.node_by_name("w2").is_none());
        assert_eq!(g.position_count(), 8);
        assert_eq!(g.path_count(), 16);
        assert_eq!(g.theta(g.root()), vec![1.0]);
        for n in g.positions() {
            let s: f64 = g.theta(n).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioning_on_root_is_identity() {
        let c = bushing();
        let cond = conditioned_ceg(&c, &[c.root()], Conditioning::Idle).unwrap();
        assert_eq!(cond.ceg.edges().len(), c.edges().len());
        for (i, &o) in cond.edge_origin.iter().enumerate() {
            assert!((cond.ceg.edge_thetas()[i] - c.edge_theta(o)).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_manipulation_routes_all_mass() {
        let c = bushing();
        let e = c.edge_by_ref("w1->w3#1").unwrap();
        let s = singular_manipulation(&c, e).unwrap();
        assert_eq!(s.edge_theta(e), 1.0);
        for &o in c.out_edges(w(&c, "w1")) {
            if o != e {
                assert_eq!(s.edge_theta(o), 0.0);
            }
        }
        assert!((s.path_probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let root_edge = c.edge_by_ref("w0->w1").unwrap();
        let s = singular_manipulation(&c, root_edge).unwrap();
        assert!((s.mass(c.lambda_node(w(&c, "w1"))) - 1.0).abs() < 1e-12);
        assert!(singular_manipulation(&c, CegEdgeId(999)).is_err());
    }

    #[test]
    fn indicators_select_positions() {
        let c = bushing();
        let insulator = c.edge_by_ref("w1->w4").unwrap();
        let i = InterventionIndicators::from_fixed_edges(&c, &[insulator]).unwrap();
        assert_eq!(intervened_positions_from(&c, &i), vec![w(&c, "w1")]);
        let none = InterventionIndicators::from_vector(&c, &[0; 6]).unwrap();
        assert!(intervened_positions_from(&c, &none).is_empty());
        let both = InterventionIndicators::from_vector(&c, &[1, 0, 0, 0, 0, 1]).unwrap();
        assert_eq!(intervened_positions_from(&c, &both), vec![w(&c, "w1"), w(&c, "w2")]);
        let fail = c.edge_by_ref("w6->w_inf_f").unwrap();
        assert!(matches!(
            InterventionIndicators::from_fixed_edges(&c, &[fail]),
            Err(CegError::NotARootCauseEdge(_))
        ));
        assert!(InterventionIndicators::from_vector(&c, &[0; 5]).is_err());
    }

    fn record(delta: bool) -> RemedialRecord {
        RemedialRecord {
            maintenance: Some("replace insulator".into()),
            delta,
            failure_path: vec![],
            remedy_indicators: Some(vec![0, 0, 1, 0]),
            actions: vec![
                HiddenAction {
                    name: "a1".into(),
                    probability: 0.3,
                    indicators: Some(IndicatorLaw::Point(vec![1, 0, 0, 0])),
                },
                HiddenAction {
                    name: "a2".into(),
                    probability: 0.7,
                    indicators: Some(IndicatorLaw::Point(vec![0, 1, 0, 0])),
                },
            ],
            p_delta: Some(0.6),
        }
    }

    #[test]
    fn remedy_classes() {
        assert_eq!(classify_remedy(&record(true)), RemedyClass::Perfect);
        assert_eq!(classify_remedy(&record(false)), RemedyClass::Imperfect);
        let mut r = record(false);
        r.maintenance = None;
        assert_eq!(classify_remedy(&r), RemedyClass::Uncertain);
    }

    #[test]
    fn indicator_inference() {
        let d = infer_indicator_distribution(&record(true), 1e-12).unwrap();
        assert_eq!(d, IndicatorDistribution::point(vec![0, 0, 1, 0]));
        let d = infer_indicator_distribution(&record(false), 1e-12).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.probability(&[1, 0, 0, 0]), 0.3);
        assert_eq!(d.probability(&[0, 1, 0, 0]), 0.7);
        let d = infer_indicator_marginal(&record(false), 1e-12).unwrap();
        assert!((d.probability(&[0, 0, 1, 0]) - 0.6).abs() < 1e-15);
        assert!((d.probability(&[1, 0, 0, 0]) - 0.12).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_tables() {
        let mut r = record(true);
        r.remedy_indicators = None;
        assert!(matches!(
            infer_indicator_distribution(&r, 1e-12),
            Err(CegError::MissingConditional(_))
        ));
        let mut r = record(false);
        r.actions[1].indicators = None;
        assert!(matches!(
            infer_indicator_distribution(&r, 1e-12),
            Err(CegError::MissingConditional(_))
        ));
        let mut r = record(false);
        r.actions[1].probability = 0.5;
        assert!(matches!(
            infer_indicator_distribution(&r, 1e-12),
            Err(CegError::DistributionNotNormalized(_))
        ));
        let mut r = record(true);
        r.maintenance = None;
        assert!(matches!(infer_indicator_distribution(&r, 1e-12), Err(CegError::InvalidRecord(_))));
    }

    #[test]
    fn dirichlet_linear_update() {
        let c = Ceg::from_tree(&fixtures::conservator_tree());
        let w0 = c.root();
        let prior = DirichletFloretPrior::new(
            &c,
            BTreeMap::from([(w0, vec![1.0, 1.0])]),
            BTreeMap::from([(w0, vec![2.0, 3.0])]),
        )
        .unwrap();
        assert_eq!(update_dirichlet(&prior, w0, &[1, 0]).unwrap().alpha(w0).unwrap(), [1.0, 4.0]);
        assert_eq!(update_dirichlet(&prior, w0, &[1, 1]).unwrap().alpha(w0).unwrap(), [1.0, 1.0]);
        assert_eq!(update_dirichlet(&prior, w0, &[0, 0]).unwrap().alpha(w0).unwrap(), [3.0, 4.0]);
        assert!(matches!(
            update_dirichlet(&prior, w0, &[1]),
            Err(CegError::LengthMismatch { .. })
        ));
        let bad = DirichletFloretPrior::new(
            &c,
            BTreeMap::from([(w0, vec![0.0, 1.0])]),
            BTreeMap::from([(w0, vec![2.0, 3.0])]),
        );
        assert!(matches!(bad, Err(CegError::NonPositiveConcentration(_))));
    }

    #[test]
    fn indicators_to_manipulation() {
        let c = Ceg::from_tree(&fixtures::conservator_tree());
        let w0 = c.root();
        let prior = DirichletFloretPrior::new(
            &c,
            BTreeMap::from([(w0, vec![4.0, 6.0])]),
            BTreeMap::from([(w0, vec![2.0, 2.0])]),
        )
        .unwrap();
        let i = InterventionIndicators::from_vector(&c, &[1, 0]).unwrap();
        let m = manipulation_from_indicators(&c, &prior, &i).unwrap();
        assert_eq!(m.theta_hat(w0).unwrap(), [4.0 / 12.0, 8.0 / 12.0]);
    }
}
