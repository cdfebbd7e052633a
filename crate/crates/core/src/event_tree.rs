//! Event trees with d-event labels and floret probability vectors.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use crate::error::{CegError, Result};
use crate::model::{DEventDoc, EdgeDoc, EdgeKeyDoc, LeafStatus, ModelDocument};
use crate::staging;
use crate::DEFAULT_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeEdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DEventId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A labelled event carried by an edge: a cause, a symptom or a failure
/// indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DEvent {
    pub id: String,
    pub text: String,
    pub root_cause: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeEdge {
    pub source: VertexId,
    pub target: VertexId,
    pub devent: DEventId,
    /// Sibling order within the floret of `source`.
    pub index: u32,
}

/// A rooted directed tree whose edges carry d-events.
#[derive(Debug, Clone)]
pub struct EventTree {
    names: Vec<String>,
    devents: Vec<DEvent>,
    edges: Vec<TreeEdge>,
    children: Vec<Vec<TreeEdgeId>>,
    parent: Vec<Option<TreeEdgeId>>,
    leaf_status: Vec<Option<LeafStatus>>,
    root: VertexId,
    bfs: Vec<VertexId>,
    bfs_rank: Vec<usize>,
    depth: Vec<usize>,
}

/// A situation together with its children and emanating edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Floret {
    pub center: VertexId,
    pub children: Vec<VertexId>,
    pub edges: Vec<TreeEdgeId>,
}

impl EventTree {
    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn devents(&self) -> &[DEvent] {
        &self.devents
    }

    pub fn devent(&self, id: DEventId) -> &DEvent {
        &self.devents[id.0]
    }

    pub fn devent_by_name(&self, name: &str) -> Option<DEventId> {
        self.devents.iter().position(|d| d.id == name).map(DEventId)
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn edge(&self, id: TreeEdgeId) -> &TreeEdge {
        &self.edges[id.0]
    }

    /// Emanating edges of `v`, in sibling order.
    pub fn out_edges(&self, v: VertexId) -> &[TreeEdgeId] {
        &self.children[v.0]
    }

    pub fn parent_edge(&self, v: VertexId) -> Option<TreeEdgeId> {
        self.parent[v.0]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0].map(|e| self.edges[e.0].source)
    }

    pub fn children(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.children[v.0].iter().map(|e| self.edges[e.0].target)
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v.0].is_empty()
    }

    pub fn leaf_status(&self, v: VertexId) -> Option<LeafStatus> {
        self.leaf_status[v.0]
    }

    /// Vertices in breadth-first order, siblings visited by edge index.
    pub fn bfs_order(&self) -> &[VertexId] {
        &self.bfs
    }

    pub fn bfs_rank(&self, v: VertexId) -> usize {
        self.bfs_rank[v.0]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v.0]
    }

    /// Situations (non-leaf vertices) in breadth-first order.
    pub fn situations(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.bfs.iter().copied().filter(|&v| !self.is_leaf(v))
    }

    /// Leaves in breadth-first order.
    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.bfs.iter().copied().filter(|&v| self.is_leaf(v))
    }

    pub fn floret(&self, v: VertexId) -> Option<Floret> {
        if self.is_leaf(v) {
            return None;
        }
        Some(Floret {
            center: v,
            children: self.children(v).collect(),
            edges: self.children[v.0].clone(),
        })
    }

    /// The emanating edge of `v` labelled `devent`, if any.
    pub fn edge_with_devent(&self, v: VertexId, devent: DEventId) -> Option<TreeEdgeId> {
        self.children[v.0]
            .iter()
            .copied()
            .find(|e| self.edges[e.0].devent == devent)
    }
}

/// A root-to-leaf path, stored as its ordered edge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreePath {
    pub edges: Vec<TreeEdgeId>,
}

/// An event tree with a transition probability vector on every floret.
#[derive(Debug, Clone)]
pub struct ProbabilityTree {
    name: Option<String>,
    tree: EventTree,
    theta: Vec<Vec<f64>>,
    declared_stages: Option<Vec<Vec<VertexId>>>,
    colour_ties: Vec<Vec<TreeEdgeId>>,
    tolerance: f64,
}

impl ProbabilityTree {
    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Transition probabilities of the floret at `v`, in sibling order.
    /// Empty for leaves.
    pub fn theta(&self, v: VertexId) -> &[f64] {
        &self.theta[v.0]
    }

    pub fn edge_theta(&self, e: TreeEdgeId) -> f64 {
        let edge = self.tree.edge(e);
        let pos = self
            .tree
            .out_edges(edge.source)
            .iter()
            .position(|&x| x == e)
            .expect("edge belongs to its source floret");
        self.theta[edge.source.0][pos]
    }

    pub fn declared_stages(&self) -> Option<&[Vec<VertexId>]> {
        self.declared_stages.as_deref()
    }

    pub fn colour_ties(&self) -> &[Vec<TreeEdgeId>] {
        &self.colour_ties
    }

    /// Replaces every floret vector. The caller guarantees the same
    /// invariants as the document route; they are re-checked here.
    pub fn with_theta(&self, theta: Vec<Vec<f64>>) -> Result<Self> {
        let mut next = self.clone();
        next.theta = theta;
        next.check_theta()?;
        if let Some(stages) = &next.declared_stages {
            staging::check_declared_stages(&next, stages)?;
        }
        next.check_colour_ties()?;
        Ok(next)
    }

    /// Same tree with the stage declaration replaced.
    pub fn with_declared_stages(&self, stages: Option<Vec<Vec<VertexId>>>) -> Result<Self> {
        let mut next = self.clone();
        if let Some(blocks) = &stages {
            staging::check_declared_stages(&next, blocks)?;
        }
        next.declared_stages = stages;
        Ok(next)
    }

    pub fn with_colour_ties(&self, ties: Vec<Vec<TreeEdgeId>>) -> Result<Self> {
        let mut next = self.clone();
        next.colour_ties = ties;
        next.check_colour_ties()?;
        Ok(next)
    }

    fn check_theta(&self) -> Result<()> {
        let tol = self.tolerance;
        for v in self.tree.situations() {
            let name = self.tree.name(v);
            let vector = &self.theta[v.0];
            let expected = self.tree.out_edges(v).len();
            if vector.len() != expected {
                return Err(CegError::ThetaLength {
                    vertex: name.to_string(),
                    expected,
                    found: vector.len(),
                });
            }
            if let Some(&bad) = vector.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
                return Err(CegError::ProbabilityOutOfOpenInterval {
                    vertex: name.to_string(),
                    value: bad,
                });
            }
            let sum: f64 = vector.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(CegError::ProbabilityNotNormalized {
                    vertex: name.to_string(),
                    sum,
                });
            }
        }
        Ok(())
    }

    fn check_colour_ties(&self) -> Result<()> {
        for group in &self.colour_ties {
            let Some(&first) = group.first() else {
                return Err(CegError::InvalidColour("empty colour group".into()));
            };
            let reference = self.edge_theta(first);
            for &e in group {
                let value = self.edge_theta(e);
                if (value - reference).abs() > self.tolerance {
                    let edge = self.tree.edge(e);
                    return Err(CegError::InvalidColour(format!(
                        "edge `{}` labelled `{}` has probability {value}, its colour group has {reference}",
                        self.tree.name(edge.source),
                        self.tree.devent(edge.devent).id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> ModelDocument {
        let t = &self.tree;
        let mut leaf_status = BTreeMap::new();
        let mut theta = BTreeMap::new();
        for v in t.bfs_order() {
            if let Some(status) = t.leaf_status(*v) {
                leaf_status.insert(t.name(*v).to_string(), status);
            } else {
                theta.insert(t.name(*v).to_string(), self.theta[v.0].clone());
            }
        }
        let edge_key = |e: TreeEdgeId| {
            let edge = t.edge(e);
            EdgeKeyDoc {
                vertex: t.name(edge.source).to_string(),
                devent: t.devent(edge.devent).id.clone(),
            }
        };
        ModelDocument {
            name: self.name.clone(),
            devents: t
                .devents
                .iter()
                .map(|d| DEventDoc {
                    id: d.id.clone(),
                    text: d.text.clone(),
                    root_cause: d.root_cause,
                })
                .collect(),
            vertices: t.names.clone(),
            edges: t
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    src: t.name(e.source).to_string(),
                    dst: t.name(e.target).to_string(),
                    devent: t.devent(e.devent).id.clone(),
                    index: e.index,
                })
                .collect(),
            leaf_status,
            theta,
            stages: self.declared_stages.as_ref().map(|blocks| {
                blocks
                    .iter()
                    .map(|b| b.iter().map(|&v| t.name(v).to_string()).collect())
                    .collect()
            }),
            edge_colours: self
                .colour_ties
                .iter()
                .map(|g| g.iter().map(|&e| edge_key(e)).collect())
                .collect(),
        }
    }
}

/// Validates a model document and builds the probability tree it
/// describes, using the default tolerance.
pub fn build_event_tree(doc: &ModelDocument) -> Result<ProbabilityTree> {
    build_event_tree_with_tolerance(doc, DEFAULT_TOLERANCE)
}

pub fn build_event_tree_with_tolerance(doc: &ModelDocument, tol: f64) -> Result<ProbabilityTree> {
    let mut vertex_index = HashMap::new();
    for (i, name) in doc.vertices.iter().enumerate() {
        if vertex_index.insert(name.as_str(), VertexId(i)).is_some() {
            return Err(CegError::DuplicateId(name.clone()));
        }
    }
    let mut devent_index = HashMap::new();
    let mut devents = Vec::with_capacity(doc.devents.len());
    for (i, d) in doc.devents.iter().enumerate() {
        if devent_index.insert(d.id.as_str(), DEventId(i)).is_some() {
            return Err(CegError::DuplicateId(d.id.clone()));
        }
        devents.push(DEvent {
            id: d.id.clone(),
            text: d.text.clone(),
            root_cause: d.root_cause,
        });
    }

    let n = doc.vertices.len();
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut children: Vec<Vec<TreeEdgeId>> = vec![Vec::new(); n];
    let mut parent: Vec<Option<TreeEdgeId>> = vec![None; n];
    for (i, e) in doc.edges.iter().enumerate() {
        let (Some(&source), Some(&target)) = (
            vertex_index.get(e.src.as_str()),
            vertex_index.get(e.dst.as_str()),
        ) else {
            return Err(CegError::DanglingEdge {
                src: e.src.clone(),
                dst: e.dst.clone(),
            });
        };
        let Some(&devent) = devent_index.get(e.devent.as_str()) else {
            return Err(CegError::UnknownDEvent {
                src: e.src.clone(),
                dst: e.dst.clone(),
                devent: e.devent.clone(),
            });
        };
        if parent[target.0].is_some() {
            return Err(CegError::MultipleParents(e.dst.clone()));
        }
        let id = TreeEdgeId(i);
        parent[target.0] = Some(id);
        children[source.0].push(id);
        edges.push(TreeEdge {
            source,
            target,
            devent,
            index: e.index,
        });
    }

    let mut roots = (0..n).filter(|&v| parent[v].is_none());
    let root = match (roots.next(), roots.next()) {
        (None, _) => return Err(CegError::NoRoot),
        (Some(r), None) => VertexId(r),
        (Some(a), Some(b)) => {
            return Err(CegError::MultipleRoots(
                doc.vertices[a].clone(),
                doc.vertices[b].clone(),
            ))
        }
    };

    for (v, out) in children.iter_mut().enumerate() {
        out.sort_by_key(|e| edges[e.0].index);
        for pair in out.windows(2) {
            let (a, b) = (&edges[pair[0].0], &edges[pair[1].0]);
            if a.index == b.index {
                return Err(CegError::DuplicateEdgeIndex {
                    vertex: doc.vertices[v].clone(),
                    index: a.index,
                });
            }
        }
        let mut seen = Vec::with_capacity(out.len());
        for e in out.iter() {
            let d = edges[e.0].devent;
            if seen.contains(&d) {
                return Err(CegError::DuplicateDEventInFloret {
                    vertex: doc.vertices[v].clone(),
                    devent: devents[d.0].id.clone(),
                });
            }
            seen.push(d);
        }
        if out.len() == 1 {
            return Err(CegError::DegenerateFloret(doc.vertices[v].clone()));
        }
    }

    // Breadth-first traversal doubles as the cycle/reachability check: with
    // one parent per vertex and a single root, anything unvisited sits on a
    // cycle.
    let mut bfs = Vec::with_capacity(n);
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::from([root]);
    depth[root.0] = 0;
    while let Some(v) = queue.pop_front() {
        bfs.push(v);
        for e in &children[v.0] {
            let c = edges[e.0].target;
            if depth[c.0] != usize::MAX {
                return Err(CegError::Unreachable(doc.vertices[c.0].clone()));
            }
            depth[c.0] = depth[v.0] + 1;
            queue.push_back(c);
        }
    }
    if let Some(v) = (0..n).find(|&v| depth[v] == usize::MAX) {
        return Err(CegError::Unreachable(doc.vertices[v].clone()));
    }
    let mut bfs_rank = vec![0; n];
    for (rank, v) in bfs.iter().enumerate() {
        bfs_rank[v.0] = rank;
    }

    let mut leaf_status = vec![None; n];
    for (name, status) in &doc.leaf_status {
        let Some(&v) = vertex_index.get(name.as_str()) else {
            return Err(CegError::UnknownVertex(name.clone()));
        };
        if !children[v.0].is_empty() {
            return Err(CegError::StatusOnSituation(name.clone()));
        }
        leaf_status[v.0] = Some(*status);
    }
    for &v in &bfs {
        if children[v.0].is_empty() && leaf_status[v.0].is_none() {
            return Err(CegError::MissingLeafStatus(doc.vertices[v.0].clone()));
        }
    }

    // The d-event on the edge into a leaf is a failure indicator: it may only
    // label edges into leaves, all carrying the same status.
    let mut indicator: HashMap<DEventId, Option<LeafStatus>> = HashMap::new();
    for e in &edges {
        let status = leaf_status[e.target.0];
        let entry = indicator.entry(e.devent).or_insert(status);
        if *entry != status {
            return Err(CegError::InconsistentFailureIndicator(
                devents[e.devent.0].id.clone(),
            ));
        }
    }
    if edges.is_empty() {
        return Err(CegError::DegenerateFloret(doc.vertices[root.0].clone()));
    }

    let mut theta = vec![Vec::new(); n];
    for (name, vector) in &doc.theta {
        let Some(&v) = vertex_index.get(name.as_str()) else {
            return Err(CegError::UnknownVertex(name.clone()));
        };
        if children[v.0].is_empty() {
            return Err(CegError::ThetaLength {
                vertex: name.clone(),
                expected: 0,
                found: vector.len(),
            });
        }
        theta[v.0] = vector.clone();
    }
    for &v in &bfs {
        if !children[v.0].is_empty() && !doc.theta.contains_key(&doc.vertices[v.0]) {
            return Err(CegError::MissingTheta(doc.vertices[v.0].clone()));
        }
    }

    let tree = EventTree {
        names: doc.vertices.clone(),
        devents,
        edges,
        children,
        parent,
        leaf_status,
        root,
        bfs,
        bfs_rank,
        depth,
    };

    let resolve_edge = |key: &EdgeKeyDoc| -> Result<TreeEdgeId> {
        let v = tree
            .vertex_by_name(&key.vertex)
            .ok_or_else(|| CegError::UnknownVertex(key.vertex.clone()))?;
        let d = tree.devent_by_name(&key.devent).ok_or_else(|| {
            CegError::InvalidColour(format!("unknown d-event `{}`", key.devent))
        })?;
        tree.edge_with_devent(v, d).ok_or_else(|| {
            CegError::InvalidColour(format!(
                "`{}` has no emanating edge labelled `{}`",
                key.vertex, key.devent
            ))
        })
    };
    let colour_ties = doc
        .edge_colours
        .iter()
        .map(|group| group.iter().map(resolve_edge).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let declared_stages = match &doc.stages {
        None => None,
        Some(blocks) => Some(
            blocks
                .iter()
                .map(|block| {
                    block
                        .iter()
                        .map(|name| {
                            tree.vertex_by_name(name)
                                .ok_or_else(|| CegError::UnknownVertex(name.clone()))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let pt = ProbabilityTree {
        name: doc.name.clone(),
        tree,
        theta,
        declared_stages: None,
        colour_ties,
        tolerance: tol,
    };
    pt.check_theta()?;
    pt.check_colour_ties()?;
    pt.with_declared_stages(declared_stages)
}

/// Every root-to-leaf path, in breadth-first order of the leaves.
pub fn root_to_leaf_paths(t: &ProbabilityTree) -> Vec<TreePath> {
    let tree = t.tree();
    tree.leaves()
        .map(|leaf| {
            let mut edges = Vec::with_capacity(tree.depth(leaf));
            let mut v = leaf;
            while let Some(e) = tree.parent_edge(v) {
                edges.push(e);
                v = tree.edge(e).source;
            }
            edges.reverse();
            TreePath { edges }
        })
        .collect()
}

/// Product of the transition probabilities along a root-to-leaf path.
pub fn path_probability(t: &ProbabilityTree, path: &TreePath) -> Result<f64> {
    let tree = t.tree();
    let mut at = tree.root();
    let mut p = 1.0;
    for &e in &path.edges {
        let edge = tree.edges().get(e.0).ok_or(CegError::PathNotInTree)?;
        if edge.source != at {
            return Err(CegError::PathNotInTree);
        }
        p *= t.edge_theta(e);
        at = edge.target;
    }
    if !tree.is_leaf(at) {
        return Err(CegError::PathNotInTree);
    }
    Ok(p)
}
