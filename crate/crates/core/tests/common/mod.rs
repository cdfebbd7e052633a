//! Test-side oracles. Everything here works from raw path lists and edge
//! probabilities only, never through the library's conditioning or
//! formula code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ceg_core::intervention::StochasticManipulation;
use ceg_core::{Ceg, CegEdgeId, DEventId, NodeId, ProbabilityTree, StagedTree, VertexId};
use rand::Rng;

pub const TOL: f64 = 1e-12;

/// Edge probabilities after replacing the florets of the manipulated positions.
pub fn manipulated_theta(c: &Ceg, m: &StochasticManipulation) -> Vec<f64> {
    let mut theta = c.edge_thetas().to_vec();
    for (w, hat) in m.iter() {
        for (k, &e) in c.out_edges(w).iter().enumerate() {
            theta[e.0] = hat[k];
        }
    }
    theta
}

pub fn path_weights(c: &Ceg, theta: &[f64]) -> Vec<f64> {
    c.paths()
        .iter()
        .map(|p| p.iter().map(|e| theta[e.0]).product())
        .collect()
}

pub fn visits(c: &Ceg, path: &[CegEdgeId], nodes: &[NodeId]) -> bool {
    path.iter().any(|&e| nodes.contains(&c.edge(e).source))
}

pub fn has_devent(c: &Ceg, path: &[CegEdgeId], d: DEventId) -> bool {
    path.iter().any(|&e| c.edge(e).devent == d)
}

/// `π(Λ_y ‖ θ̂)`: manipulated mass of the intervened paths through `y`
/// over the manipulated mass of all intervened paths.
pub fn effect_oracle(c: &Ceg, m: &StochasticManipulation, y: DEventId) -> f64 {
    let w_star = m.positions();
    let w = path_weights(c, &manipulated_theta(c, m));
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, x) in c.paths().iter().zip(&w) {
        if visits(c, p, &w_star) {
            den += x;
            if has_devent(c, p, y) {
                num += x;
            }
        }
    }
    num / den
}

/// Quotient probabilities `θ*(e)` of the graph restricted to the paths
/// through `w_star`, under edge probabilities `theta`. `None` where the
/// source is never reached by those paths.
pub fn conditioned_theta_oracle(c: &Ceg, w_star: &[NodeId], theta: &[f64]) -> Vec<Option<f64>> {
    let weights = path_weights(c, theta);
    let mut through_edge = vec![0.0; c.edges().len()];
    let mut through_node = vec![0.0; c.nodes().len()];
    for (p, &w) in c.paths().iter().zip(&weights) {
        if !visits(c, p, w_star) {
            continue;
        }
        for &e in p {
            through_edge[e.0] += w;
            through_node[c.edge(e).source.0] += w;
        }
    }
    (0..c.edges().len())
        .map(|i| {
            let d = through_node[c.edge(CegEdgeId(i)).source.0];
            (d > 0.0).then(|| through_edge[i] / d)
        })
        .collect()
}

/// Positions none of which lies on a path through another.
pub fn random_antichain<R: Rng + ?Sized>(c: &Ceg, rng: &mut R) -> Vec<NodeId> {
    let mut candidates: Vec<NodeId> = c.positions().collect();
    let mut chosen: Vec<NodeId> = Vec::new();
    while !candidates.is_empty() {
        let w = candidates.swap_remove(rng.random_range(0..candidates.len()));
        let comparable = chosen
            .iter()
            .any(|&u| !c.lambda_node(u).is_disjoint(c.lambda_node(w)));
        if !comparable && (chosen.is_empty() || rng.random_bool(0.5)) {
            chosen.push(w);
        }
    }
    chosen.sort();
    chosen
}

/// A strictly interior random θ̂ for every position of `w_star`.
pub fn random_manipulation<R: Rng + ?Sized>(c: &Ceg, w_star: &[NodeId], rng: &mut R) -> StochasticManipulation {
    StochasticManipulation::new(w_star.iter().map(|&w| {
        let k = c.out_edges(w).len();
        (w, ceg_core::fixtures::dirichlet(rng, &vec![1.0; k]))
    }))
}

/// Plain recursive coloured-subtree isomorphism.
pub fn iso_oracle(st: &StagedTree, a: VertexId, b: VertexId) -> bool {
    let t = st.probability_tree().tree();
    match (t.is_leaf(a), t.is_leaf(b)) {
        (true, true) => t.leaf_status(a) == t.leaf_status(b),
        (false, false) => {
            if st.stages().stage_of(a) != st.stages().stage_of(b) {
                return false;
            }
            t.out_edges(a).iter().all(|&ea| {
                let d = t.edge(ea).devent;
                match t.edge_with_devent(b, d) {
                    Some(eb) => iso_oracle(st, t.edge(ea).target, t.edge(eb).target),
                    None => false,
                }
            })
        }
        _ => false,
    }
}

/// Two florets are stage-compatible when they carry the same d-events and
/// equal probabilities d-event by d-event.
fn compatible(t: &ProbabilityTree, a: VertexId, b: VertexId) -> bool {
    let tree = t.tree();
    let da: BTreeSet<_> = tree.out_edges(a).iter().map(|&e| tree.edge(e).devent).collect();
    let db: BTreeSet<_> = tree.out_edges(b).iter().map(|&e| tree.edge(e).devent).collect();
    da == db
        && tree.out_edges(a).iter().all(|&ea| {
            let eb = tree.edge_with_devent(b, tree.edge(ea).devent).unwrap();
            (t.edge_theta(ea) - t.edge_theta(eb)).abs() <= t.tolerance()
        })
}

/// Transitive closure of stage compatibility by repeated pairwise merging.
pub fn stage_closure_oracle(t: &ProbabilityTree) -> BTreeSet<BTreeSet<VertexId>> {
    let mut blocks: Vec<BTreeSet<VertexId>> = t.tree().situations().map(|v| BTreeSet::from([v])).collect();
    loop {
        let mut merged = None;
        'outer: for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                if blocks[i]
                    .iter()
                    .any(|&a| blocks[j].iter().any(|&b| compatible(t, a, b)))
                {
                    merged = Some((i, j));
                    break 'outer;
                }
            }
        }
        match merged {
            Some((i, j)) => {
                let b = blocks.swap_remove(j);
                blocks[i].extend(b);
            }
            None => break,
        }
    }
    blocks.into_iter().collect()
}

pub fn as_sets(blocks: &[Vec<VertexId>]) -> BTreeSet<BTreeSet<VertexId>> {
    blocks.iter().map(|b| b.iter().copied().collect()).collect()
}

pub fn node(c: &Ceg, name: &str) -> NodeId {
    c.node_by_name(name).unwrap_or_else(|| panic!("no node {name}"))
}

pub fn edge(c: &Ceg, r: &str) -> CegEdgeId {
    c.edge_by_ref(r).unwrap()
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}
