//! Chain event graphs: positions of a staged tree joined by (possibly
//! parallel) edges, with leaves collapsed into a failure sink and a working
//! sink.

use std::collections::HashMap;
use std::fmt;

use crate::error::{CegError, Result};
use crate::event_tree::{DEvent, DEventId, ProbabilityTree, TreeEdgeId, TreePath, VertexId};
use crate::model::LeafStatus;
use crate::paths::PathSet;
use crate::staging::{compute_positions, PositionPartition, StagedTree};

pub const FAILURE_SINK: &str = "w_inf_f";
pub const WORKING_SINK: &str = "w_inf_n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CegEdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Position,
    FailureSink,
    WorkingSink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CegNode {
    pub name: String,
    pub kind: NodeKind,
    /// Stage of the position; `None` for sinks.
    pub stage: Option<usize>,
    /// Tree situations merged into this position.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CegEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub devent: DEventId,
    /// Distinguishes parallel edges: 1, 2, ... per (source, target) pair.
    pub index: u32,
    pub colour: usize,
}

#[derive(Debug, Clone)]
pub struct Ceg {
    name: Option<String>,
    devents: Vec<DEvent>,
    nodes: Vec<CegNode>,
    edges: Vec<CegEdge>,
    theta: Vec<f64>,
    out: Vec<Vec<CegEdgeId>>,
    inc: Vec<Vec<CegEdgeId>>,
    root: NodeId,
    failure_sink: Option<NodeId>,
    working_sink: Option<NodeId>,
    stage_count: usize,
    tolerance: f64,
    tree_edge_image: Vec<CegEdgeId>,
    paths: Vec<Vec<CegEdgeId>>,
    path_probability: Vec<f64>,
    edge_paths: Vec<PathSet>,
    node_paths: Vec<PathSet>,
}

/// Object whose path set is requested from [`Ceg::lambda_of`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    DEvent(String),
    Position(String),
    Edge(String),
    FailureSink,
    WorkingSink,
}

impl Selector {
    /// Parses `devent:ID`, `position:NAME`, `edge:REF`, `sink:f` or `sink:n`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, value) = text
            .split_once(':')
            .ok_or_else(|| CegError::UnknownSelector(text.to_string()))?;
        match (kind, value) {
            ("devent", v) => Ok(Selector::DEvent(v.to_string())),
            ("position", v) => Ok(Selector::Position(v.to_string())),
            ("edge", v) => Ok(Selector::Edge(v.to_string())),
            ("sink", "f") => Ok(Selector::FailureSink),
            ("sink", "n") => Ok(Selector::WorkingSink),
            _ => Err(CegError::UnknownSelector(text.to_string())),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::DEvent(d) => write!(f, "devent:{d}"),
            Selector::Position(p) => write!(f, "position:{p}"),
            Selector::Edge(e) => write!(f, "edge:{e}"),
            Selector::FailureSink => f.write_str("sink:f"),
            Selector::WorkingSink => f.write_str("sink:n"),
        }
    }
}

/// Λ_C split into failure and deteriorating paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootToSinkPaths {
    pub all: PathSet,
    pub failure: PathSet,
    pub deteriorating: PathSet,
}

/// Builds the CEG of a staged tree from its position partition.
pub fn build_ceg(st: &StagedTree, positions: &PositionPartition) -> Ceg {
    let pt = st.probability_tree();
    let tree = pt.tree();
    let has_status = |s| tree.leaves().any(|l| tree.leaf_status(l) == Some(s));

    let mut nodes: Vec<CegNode> = positions
        .positions()
        .iter()
        .enumerate()
        .map(|(k, members)| CegNode {
            name: format!("w{k}"),
            kind: NodeKind::Position,
            stage: st.stages().stage_of(members[0]),
            members: members.iter().map(|&v| tree.name(v).to_string()).collect(),
        })
        .collect();
    let mut sink_of = HashMap::new();
    for (status, kind, name) in [
        (LeafStatus::Failed, NodeKind::FailureSink, FAILURE_SINK),
        (LeafStatus::Operational, NodeKind::WorkingSink, WORKING_SINK),
    ] {
        if has_status(status) {
            sink_of.insert(status, NodeId(nodes.len()));
            nodes.push(CegNode {
                name: name.to_string(),
                kind,
                stage: None,
                members: tree
                    .leaves()
                    .filter(|&l| tree.leaf_status(l) == Some(status))
                    .map(|l| tree.name(l).to_string())
                    .collect(),
            });
        }
    }
    let node_of = |v: VertexId| -> NodeId {
        match tree.leaf_status(v) {
            Some(s) => sink_of[&s],
            None => NodeId(positions.position_of(v).expect("situation has a position")),
        }
    };

    let mut edges = Vec::new();
    let mut theta = Vec::new();
    let mut position_edges: Vec<Vec<(DEventId, CegEdgeId)>> = Vec::new();
    for members in positions.positions() {
        let rep = members[0];
        let mut per_target: HashMap<NodeId, u32> = HashMap::new();
        let mut mine = Vec::new();
        for (&e, &p) in tree.out_edges(rep).iter().zip(pt.theta(rep)) {
            let te = tree.edge(e);
            let source = node_of(rep);
            let target = node_of(te.target);
            let index = per_target.entry(target).or_insert(0);
            *index += 1;
            mine.push((te.devent, CegEdgeId(edges.len())));
            edges.push(CegEdge {
                source,
                target,
                devent: te.devent,
                index: *index,
                colour: st.edge_colour(e),
            });
            theta.push(p);
        }
        position_edges.push(mine);
    }

    let tree_edge_image = tree
        .edges()
        .iter()
        .map(|te| {
            let p = positions.position_of(te.source).expect("situation");
            position_edges[p]
                .iter()
                .find(|(d, _)| *d == te.devent)
                .map(|&(_, id)| id)
                .expect("position members share d-events")
        })
        .collect();

    let mut ceg = Ceg::assemble(
        pt.name().map(str::to_string),
        tree.devents().to_vec(),
        nodes,
        edges,
        theta,
        NodeId(positions.position_of(tree.root()).expect("root is a situation")),
        st.stages().len(),
        pt.tolerance(),
    );
    ceg.tree_edge_image = tree_edge_image;
    ceg
}

impl Ceg {
    /// Stages, positions and CEG of a probability tree in one step.
    pub fn from_tree(t: &ProbabilityTree) -> Ceg {
        let st = StagedTree::new(t.clone());
        let positions = compute_positions(&st);
        build_ceg(&st, &positions)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: Option<String>,
        devents: Vec<DEvent>,
        nodes: Vec<CegNode>,
        edges: Vec<CegEdge>,
        theta: Vec<f64>,
        root: NodeId,
        stage_count: usize,
        tolerance: f64,
    ) -> Ceg {
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            out[e.source.0].push(CegEdgeId(i));
            inc[e.target.0].push(CegEdgeId(i));
        }
        let find = |kind| nodes.iter().position(|x| x.kind == kind).map(NodeId);
        let failure_sink = find(NodeKind::FailureSink);
        let working_sink = find(NodeKind::WorkingSink);

        let mut paths = Vec::new();
        let mut stack = vec![(root, Vec::new())];
        while let Some((at, prefix)) = stack.pop() {
            if out[at.0].is_empty() {
                paths.push(prefix);
                continue;
            }
            for &e in out[at.0].iter().rev() {
                let mut next = prefix.clone();
                next.push(e);
                stack.push((edges[e.0].target, next));
            }
        }
        let m = paths.len();
        let mut edge_paths = vec![PathSet::empty(m); edges.len()];
        let mut node_paths = vec![PathSet::empty(m); n];
        for (i, path) in paths.iter().enumerate() {
            node_paths[root.0].insert(i);
            for &e in path {
                edge_paths[e.0].insert(i);
                node_paths[edges[e.0].target.0].insert(i);
            }
        }
        let path_probability = paths
            .iter()
            .map(|p| p.iter().map(|e| theta[e.0]).product())
            .collect();
        Ceg {
            name,
            devents,
            nodes,
            edges,
            theta,
            out,
            inc,
            root,
            failure_sink,
            working_sink,
            stage_count,
            tolerance,
            tree_edge_image: Vec::new(),
            paths,
            path_probability,
            edge_paths,
            node_paths,
        }
    }

    /// Same graph with every edge probability replaced. No range checks are
    /// made, since manipulated graphs legitimately carry 0 and 1.
    pub fn with_edge_theta(&self, theta: Vec<f64>) -> Ceg {
        assert_eq!(theta.len(), self.edges.len());
        let mut next = self.clone();
        next.path_probability = next
            .paths
            .iter()
            .map(|p| p.iter().map(|e| theta[e.0]).product())
            .collect();
        next.theta = theta;
        next
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn devents(&self) -> &[DEvent] {
        &self.devents
    }

    pub fn devent(&self, d: DEventId) -> &DEvent {
        &self.devents[d.0]
    }

    pub fn devent_by_name(&self, name: &str) -> Option<DEventId> {
        self.devents.iter().position(|d| d.id == name).map(DEventId)
    }

    pub fn nodes(&self) -> &[CegNode] {
        &self.nodes
    }

    pub fn node(&self, n: NodeId) -> &CegNode {
        &self.nodes[n.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|x| x.name == name).map(NodeId)
    }

    /// Non-sink vertices in numbering order.
    pub fn positions(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len())
            .map(NodeId)
            .filter(|&n| self.nodes[n.0].kind == NodeKind::Position)
    }

    pub fn position_count(&self) -> usize {
        self.positions().count()
    }

    pub fn is_sink(&self, n: NodeId) -> bool {
        self.nodes[n.0].kind != NodeKind::Position
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn failure_sink(&self) -> Option<NodeId> {
        self.failure_sink
    }

    pub fn working_sink(&self) -> Option<NodeId> {
        self.working_sink
    }

    pub fn edges(&self) -> &[CegEdge] {
        &self.edges
    }

    pub fn edge(&self, e: CegEdgeId) -> &CegEdge {
        &self.edges[e.0]
    }

    pub fn out_edges(&self, n: NodeId) -> &[CegEdgeId] {
        &self.out[n.0]
    }

    pub fn in_edges(&self, n: NodeId) -> &[CegEdgeId] {
        &self.inc[n.0]
    }

    pub fn edge_theta(&self, e: CegEdgeId) -> f64 {
        self.theta[e.0]
    }

    pub fn edge_thetas(&self) -> &[f64] {
        &self.theta
    }

    /// Transition vector of a position, in out-edge order.
    pub fn theta(&self, n: NodeId) -> Vec<f64> {
        self.out[n.0].iter().map(|e| self.theta[e.0]).collect()
    }

    pub fn edges_with_devent(&self, d: DEventId) -> Vec<CegEdgeId> {
        (0..self.edges.len())
            .map(CegEdgeId)
            .filter(|e| self.edges[e.0].devent == d)
            .collect()
    }

    /// Whether (source, target) carries more than one edge.
    pub fn is_parallel(&self, e: CegEdgeId) -> bool {
        let edge = self.edges[e.0];
        self.out[edge.source.0]
            .iter()
            .filter(|o| self.edges[o.0].target == edge.target)
            .count()
            > 1
    }

    /// `source->target#index`.
    pub fn edge_name(&self, e: CegEdgeId) -> String {
        let edge = &self.edges[e.0];
        format!(
            "{}->{}#{}",
            self.nodes[edge.source.0].name, self.nodes[edge.target.0].name, edge.index
        )
    }

    /// Resolves `src->dst#k`, `src->dst` (when unique) or a d-event id that
    /// labels a single edge.
    pub fn edge_by_ref(&self, text: &str) -> Result<CegEdgeId> {
        let Some((src, rest)) = text.split_once("->") else {
            let d = self
                .devent_by_name(text)
                .ok_or_else(|| CegError::UnknownEdge(text.to_string()))?;
            return match self.edges_with_devent(d).as_slice() {
                [] => Err(CegError::UnknownEdge(text.to_string())),
                [e] => Ok(*e),
                _ => Err(CegError::AmbiguousEdge(text.to_string())),
            };
        };
        let (dst, index) = match rest.split_once('#') {
            Some((d, i)) => (
                d,
                Some(
                    i.parse::<u32>()
                        .map_err(|_| CegError::UnknownEdge(text.to_string()))?,
                ),
            ),
            None => (rest, None),
        };
        let unknown = || CegError::UnknownEdge(text.to_string());
        let s = self.node_by_name(src.trim()).ok_or_else(unknown)?;
        let t = self.node_by_name(dst.trim()).ok_or_else(unknown)?;
        let candidates: Vec<_> = self.out[s.0]
            .iter()
            .copied()
            .filter(|e| self.edges[e.0].target == t)
            .filter(|e| index.is_none_or(|i| self.edges[e.0].index == i))
            .collect();
        match candidates.as_slice() {
            [] => Err(unknown()),
            [e] => Ok(*e),
            _ => Err(CegError::AmbiguousEdge(text.to_string())),
        }
    }

    /// Root-to-sink paths as edge lists, in depth-first order.
    pub fn paths(&self) -> &[Vec<CegEdgeId>] {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// π(λ) for every path.
    pub fn path_probabilities(&self) -> &[f64] {
        &self.path_probability
    }

    pub fn path_nodes(&self, path: usize) -> Vec<NodeId> {
        let mut v = vec![self.root];
        v.extend(self.paths[path].iter().map(|e| self.edges[e.0].target));
        v
    }

    /// π(Λ) of a set of paths.
    pub fn mass(&self, set: &PathSet) -> f64 {
        set.measure(&self.path_probability)
    }

    pub fn all_paths(&self) -> PathSet {
        PathSet::full(self.paths.len())
    }

    pub fn lambda_edge(&self, e: CegEdgeId) -> &PathSet {
        &self.edge_paths[e.0]
    }

    pub fn lambda_node(&self, n: NodeId) -> &PathSet {
        &self.node_paths[n.0]
    }

    /// Λ_x: union of Λ(e) over edges labelled `d`.
    pub fn lambda_devent(&self, d: DEventId) -> PathSet {
        let mut s = PathSet::empty(self.paths.len());
        for e in self.edges_with_devent(d) {
            s.union_with(&self.edge_paths[e.0]);
        }
        s
    }

    pub fn lambda_nodes(&self, nodes: &[NodeId]) -> PathSet {
        let mut s = PathSet::empty(self.paths.len());
        for n in nodes {
            s.union_with(&self.node_paths[n.0]);
        }
        s
    }

    pub fn lambda_of(&self, selector: &Selector) -> Result<PathSet> {
        let unknown = || CegError::UnknownSelector(selector.to_string());
        match selector {
            Selector::DEvent(d) => Ok(self.lambda_devent(self.devent_by_name(d).ok_or_else(unknown)?)),
            Selector::Position(p) => {
                let n = self.node_by_name(p).ok_or_else(unknown)?;
                Ok(self.node_paths[n.0].clone())
            }
            Selector::Edge(e) => Ok(self.edge_paths[self.edge_by_ref(e).map_err(|_| unknown())?.0].clone()),
            Selector::FailureSink => Ok(self
                .failure_sink
                .map(|n| self.node_paths[n.0].clone())
                .unwrap_or_else(|| PathSet::empty(self.paths.len()))),
            Selector::WorkingSink => Ok(self
                .working_sink
                .map(|n| self.node_paths[n.0].clone())
                .unwrap_or_else(|| PathSet::empty(self.paths.len()))),
        }
    }

    pub fn is_fine_cut(&self, cut: &[NodeId]) -> bool {
        self.lambda_nodes(cut).len() == self.paths.len()
    }

    /// Edges labelled by root-cause d-events.
    pub fn root_cause_edges(&self) -> Vec<CegEdgeId> {
        (0..self.edges.len())
            .map(CegEdgeId)
            .filter(|e| self.devents[self.edges[e.0].devent.0].root_cause)
            .collect()
    }

    /// Positions with at least one root-cause edge, in numbering order.
    pub fn root_cause_positions(&self) -> Vec<NodeId> {
        let mut v: Vec<_> = self
            .root_cause_edges()
            .iter()
            .map(|e| self.edges[e.0].source)
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// CEG edge that a tree edge collapses onto. Only available on graphs
    /// built from a tree.
    pub fn tree_edge_image(&self, e: TreeEdgeId) -> Option<CegEdgeId> {
        self.tree_edge_image.get(e.0).copied()
    }

    /// Index of the CEG path that a root-to-leaf tree path maps to.
    pub fn tree_path_image(&self, path: &TreePath) -> Option<usize> {
        let image: Option<Vec<_>> = path.edges.iter().map(|&e| self.tree_edge_image(e)).collect();
        let image = image?;
        self.paths.iter().position(|p| *p == image)
    }
}

/// Λ_C as failure and deteriorating paths.
pub fn root_to_sink_paths(c: &Ceg) -> RootToSinkPaths {
    RootToSinkPaths {
        all: c.all_paths(),
        failure: c.lambda_of(&Selector::FailureSink).expect("sink selector"),
        deteriorating: c.lambda_of(&Selector::WorkingSink).expect("sink selector"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_tree::{path_probability, root_to_leaf_paths};
    use crate::fixtures;

    fn bushing() -> Ceg {
        Ceg::from_tree(&fixtures::bushing_tree())
    }

    fn pair_count(c: &Ceg, s: &str, t: &str) -> usize {
        let (s, t) = (c.node_by_name(s).unwrap(), c.node_by_name(t).unwrap());
        c.out_edges(s).iter().filter(|e| c.edge(**e).target == t).count()
    }

    #[test]
    fn bushing_topology() {
        let c = bushing();
        assert_eq!(c.position_count(), 9);
        assert!(c.failure_sink().is_some() && c.working_sink().is_some());
        for (s, t) in [("w1", "w3"), ("w4", "w8"), ("w5", "w8"), ("w2", "w8")] {
            assert_eq!(pair_count(&c, s, t), 2, "{s} => {t}");
        }
        assert_eq!(pair_count(&c, "w1", "w4"), 1);
        assert_eq!(c.path_count(), 20);
    }

    #[test]
    fn failure_and_deteriorating_paths() {
        let c = bushing();
        let p = root_to_sink_paths(&c);
        assert_eq!(p.failure.len(), 10);
        assert_eq!(p.deteriorating.len(), 10);
        assert!(p.failure.is_disjoint(&p.deteriorating));
        assert_eq!(p.failure.union(&p.deteriorating), p.all);
        let total: f64 = c.path_probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_selectors() {
        let c = bushing();
        let gasket = c.lambda_of(&Selector::DEvent("x_c1".into())).unwrap();
        assert_eq!(gasket, c.lambda_of(&Selector::Edge("w1->w3#1".into())).unwrap());
        let fail = c.lambda_of(&Selector::DEvent("x_f1".into())).unwrap();
        assert_eq!(fail, c.lambda_of(&Selector::FailureSink).unwrap());
        assert_eq!(c.lambda_of(&Selector::Position("w3".into())).unwrap().len(), 8);
        assert_eq!(c.lambda_of(&Selector::Position("w0".into())).unwrap(), c.all_paths());
        assert!(matches!(
            c.lambda_of(&Selector::Position("w99".into())),
            Err(CegError::UnknownSelector(_))
        ));
    }

    #[test]
    fn fine_cuts() {
        let c = bushing();
        let w = |n: &str| c.node_by_name(n).unwrap();
        assert!(c.is_fine_cut(&[w("w1"), w("w2")]));
        assert!(!c.is_fine_cut(&[w("w1")]));
        assert!(c.is_fine_cut(&[w("w0")]));
    }

    #[test]
    fn edge_references() {
        let c = bushing();
        let e = c.edge_by_ref("w1->w3#2").unwrap();
        assert_eq!(c.devent(c.edge(e).devent).id, "x_c2");
        assert_eq!(c.edge_by_ref("w1->w4").unwrap(), c.edge_by_ref("x_c3").unwrap());
        assert!(matches!(c.edge_by_ref("w1->w3"), Err(CegError::AmbiguousEdge(_))));
        assert!(matches!(c.edge_by_ref("x_f1"), Err(CegError::AmbiguousEdge(_))));
        assert!(matches!(c.edge_by_ref("w3->w1"), Err(CegError::UnknownEdge(_))));
        for e in 0..c.edges().len() {
            assert_eq!(c.edge_by_ref(&c.edge_name(CegEdgeId(e))).unwrap(), CegEdgeId(e));
        }
    }

    #[test]
    fn tree_and_ceg_probabilities_agree() {
        let t = fixtures::bushing_tree();
        let c = Ceg::from_tree(&t);
        let mut hit = vec![false; c.path_count()];
        for path in root_to_leaf_paths(&t) {
            let i = c.tree_path_image(&path).unwrap();
            assert!(!std::mem::replace(&mut hit[i], true));
            let diff = c.path_probabilities()[i] - path_probability(&t, &path).unwrap();
            assert!(diff.abs() < 1e-15);
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn all_failed_tree_has_only_failure_sink() {
        let c = Ceg::from_tree(&fixtures::all_failed_tree());
        assert!(c.failure_sink().is_some());
        assert!(c.working_sink().is_none());
        assert!(root_to_sink_paths(&c).deteriorating.is_empty());
    }

    #[test]
    fn single_floret() {
        let c = Ceg::from_tree(&fixtures::single_floret(0.5));
        assert_eq!(c.position_count(), 1);
        assert_eq!(c.path_probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn root_cause_positions_of_bushing() {
        let c = bushing();
        let names: Vec<_> = c
            .root_cause_positions()
            .iter()
            .map(|&n| c.node(n).name.clone())
            .collect();
        assert_eq!(names, ["w1", "w2"]);
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(Selector::parse("sink:f").unwrap(), Selector::FailureSink);
        assert_eq!(
            Selector::parse("edge:w1->w3#1").unwrap(),
            Selector::Edge("w1->w3#1".into())
        );
        assert!(Selector::parse("w1").is_err());
    }
}
