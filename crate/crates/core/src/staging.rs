//! Stage and position partitions of a probability tree.
//!
//! Stages group situations whose florets carry the same d-events with the
//! same probabilities. Positions refine stages: two situations share a
//! position when their rooted subtrees are isomorphic as coloured trees.
//! Isomorphism is decided through interned canonical forms computed bottom
//! up, so every situation gets a small integer code and equal codes mean
//! isomorphic subtrees.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{CegError, Result};
use crate::event_tree::{DEventId, ProbabilityTree, TreeEdgeId, VertexId};
use crate::model::LeafStatus;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePartition {
    stages: Vec<Vec<VertexId>>,
    stage_of: Vec<Option<usize>>,
}

impl StagePartition {
    fn from_blocks(t: &ProbabilityTree, mut blocks: Vec<Vec<VertexId>>) -> Self {
        let tree = t.tree();
        for b in &mut blocks {
            b.sort_by_key(|&v| tree.bfs_rank(v));
        }
        blocks.sort_by_key(|b| tree.bfs_rank(b[0]));
        let mut stage_of = vec![None; tree.vertex_count()];
        for (k, b) in blocks.iter().enumerate() {
            for &v in b {
                stage_of[v.0] = Some(k);
            }
        }
        StagePartition {
            stages: blocks,
            stage_of,
        }
    }

    /// Stage blocks `u_0, u_1, ...`, each sorted in breadth-first order and
    /// numbered by their first member.
    pub fn stages(&self) -> &[Vec<VertexId>] {
        &self.stages
    }

    pub fn stage_of(&self, v: VertexId) -> Option<usize> {
        self.stage_of[v.0]
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Colour id of a stage. Singleton stages are coloured too; callers that
    /// draw graphs usually leave them blank.
    pub fn colour(&self, stage: usize) -> usize {
        stage
    }

    pub fn is_singleton(&self, stage: usize) -> bool {
        self.stages[stage].len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionPartition {
    positions: Vec<Vec<VertexId>>,
    position_of: Vec<Option<usize>>,
}

impl PositionPartition {
    /// Position blocks `w_0, w_1, ...` in topological order of the graph
    /// they induce.
    pub fn positions(&self) -> &[Vec<VertexId>] {
        &self.positions
    }

    pub fn position_of(&self, v: VertexId) -> Option<usize> {
        self.position_of[v.0]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// A probability tree with its stage partition and edge colouring.
#[derive(Debug, Clone)]
pub struct StagedTree {
    tree: ProbabilityTree,
    stages: StagePartition,
    edge_colour: Vec<usize>,
    colour_count: usize,
}

impl StagedTree {
    pub fn new(tree: ProbabilityTree) -> Self {
        let stages = compute_stages(&tree);
        Self::with_stages(tree, stages).expect("computed stages are valid")
    }

    pub fn with_stages(tree: ProbabilityTree, stages: StagePartition) -> Result<Self> {
        check_declared_stages(&tree, stages.stages())?;
        let (edge_colour, colour_count) = edge_colours(&tree, &stages);
        Ok(StagedTree {
            tree,
            stages,
            edge_colour,
            colour_count,
        })
    }

    pub fn probability_tree(&self) -> &ProbabilityTree {
        &self.tree
    }

    pub fn stages(&self) -> &StagePartition {
        &self.stages
    }

    pub fn edge_colour(&self, e: TreeEdgeId) -> usize {
        self.edge_colour[e.0]
    }

    pub fn colour_count(&self) -> usize {
        self.colour_count
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn devent_signature(t: &ProbabilityTree, v: VertexId) -> Vec<DEventId> {
    let tree = t.tree();
    let mut s: Vec<_> = tree.out_edges(v).iter().map(|&e| tree.edge(e).devent).collect();
    s.sort();
    s
}

/// θ keyed by d-event, so florets are compared edge by matching label.
fn theta_by_devent(t: &ProbabilityTree, v: VertexId) -> BTreeMap<DEventId, f64> {
    let tree = t.tree();
    tree.out_edges(v)
        .iter()
        .zip(t.theta(v))
        .map(|(&e, &p)| (tree.edge(e).devent, p))
        .collect()
}

fn same_stage(t: &ProbabilityTree, a: VertexId, b: VertexId) -> bool {
    if devent_signature(t, a) != devent_signature(t, b) {
        return false;
    }
    let (ta, tb) = (theta_by_devent(t, a), theta_by_devent(t, b));
    ta.iter()
        .all(|(d, p)| (p - tb[d]).abs() <= t.tolerance())
}

/// The declared stage partition if the model carries one, otherwise the
/// inferred one.
pub fn compute_stages(t: &ProbabilityTree) -> StagePartition {
    match t.declared_stages() {
        Some(blocks) => {
            let mut blocks = blocks.to_vec();
            let mut covered = vec![false; t.tree().vertex_count()];
            for &v in blocks.iter().flatten() {
                covered[v.0] = true;
            }
            blocks.extend(
                t.tree()
                    .situations()
                    .filter(|v| !covered[v.0])
                    .map(|v| vec![v]),
            );
            StagePartition::from_blocks(t, blocks)
        }
        None => infer_stages(t),
    }
}

/// Infers stages from the numeric florets: situations with the same d-event
/// set are merged whenever their matched probabilities agree, and the
/// relation is closed transitively.
pub fn infer_stages(t: &ProbabilityTree) -> StagePartition {
    let tree = t.tree();
    let situations: Vec<_> = tree.situations().collect();
    let mut by_signature: HashMap<Vec<DEventId>, Vec<usize>> = HashMap::new();
    for (i, &v) in situations.iter().enumerate() {
        by_signature.entry(devent_signature(t, v)).or_default().push(i);
    }
    let mut uf = UnionFind::new(situations.len());
    for group in by_signature.values() {
        for (k, &i) in group.iter().enumerate() {
            for &j in &group[k + 1..] {
                if same_stage(t, situations[i], situations[j]) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for (i, &v) in situations.iter().enumerate() {
        blocks.entry(uf.find(i)).or_default().push(v);
    }
    StagePartition::from_blocks(t, blocks.into_values().collect())
}

/// Checks that `blocks` are disjoint sets of situations whose florets
/// satisfy the stage conditions.
pub fn check_declared_stages(t: &ProbabilityTree, blocks: &[Vec<VertexId>]) -> Result<()> {
    let tree = t.tree();
    let mut seen = vec![false; tree.vertex_count()];
    for block in blocks {
        let Some(&first) = block.first() else {
            return Err(CegError::InvalidStage("empty stage block".into()));
        };
        for &v in block {
            if tree.is_leaf(v) {
                return Err(CegError::InvalidStage(format!(
                    "`{}` is a leaf, stages hold situations only",
                    tree.name(v)
                )));
            }
            if std::mem::replace(&mut seen[v.0], true) {
                return Err(CegError::InvalidStage(format!(
                    "`{}` appears in more than one block",
                    tree.name(v)
                )));
            }
            if devent_signature(t, v) != devent_signature(t, first) {
                return Err(CegError::InvalidStage(format!(
                    "`{}` and `{}` carry different d-events",
                    tree.name(first),
                    tree.name(v)
                )));
            }
            if !same_stage(t, first, v) {
                return Err(CegError::InvalidStage(format!(
                    "`{}` and `{}` have different transition probabilities",
                    tree.name(first),
                    tree.name(v)
                )));
            }
        }
    }
    Ok(())
}

/// Colours tree edges: edges with the same d-event inside one stage share a
/// colour, and declared ties merge colours across stages. Colour ids follow
/// breadth-first order of the first edge carrying them.
fn edge_colours(t: &ProbabilityTree, stages: &StagePartition) -> (Vec<usize>, usize) {
    let tree = t.tree();
    let n = tree.edges().len();
    let mut uf = UnionFind::new(n);
    let mut first_in_class: HashMap<(usize, DEventId), usize> = HashMap::new();
    for (i, e) in tree.edges().iter().enumerate() {
        let stage = stages.stage_of(e.source).expect("sources are situations");
        let rep = *first_in_class.entry((stage, e.devent)).or_insert(i);
        uf.union(rep, i);
    }
    for group in t.colour_ties() {
        for pair in group.windows(2) {
            uf.union(pair[0].0, pair[1].0);
        }
    }
    let mut ids = HashMap::new();
    let mut colour = vec![0; n];
    for &v in tree.bfs_order() {
        for &e in tree.out_edges(v) {
            let root = uf.find(e.0);
            let next = ids.len();
            colour[e.0] = *ids.entry(root).or_insert(next);
        }
    }
    (colour, ids.len())
}

/// Node of the interned canonical-form table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Form {
    Leaf(LeafStatus),
    Situation(usize, Vec<(DEventId, usize)>),
}

/// Canonical code per vertex; two vertices have equal codes exactly when
/// their rooted coloured subtrees are isomorphic.
pub fn canonical_codes(st: &StagedTree) -> Vec<usize> {
    let tree = st.probability_tree().tree();
    let mut codes = vec![usize::MAX; tree.vertex_count()];
    let mut table: HashMap<Form, usize> = HashMap::new();
    for &v in tree.bfs_order().iter().rev() {
        let form = match tree.leaf_status(v) {
            Some(status) => Form::Leaf(status),
            None => {
                let mut kids: Vec<_> = tree
                    .out_edges(v)
                    .iter()
                    .map(|&e| {
                        let edge = tree.edge(e);
                        (edge.devent, codes[edge.target.0])
                    })
                    .collect();
                kids.sort();
                let stage = st.stages().stage_of(v).expect("situation");
                Form::Situation(stage, kids)
            }
        };
        let next = table.len();
        codes[v.0] = *table.entry(form).or_insert(next);
    }
    codes
}

/// Whether the rooted subtrees at `a` and `b` are isomorphic coloured trees.
pub fn subtrees_isomorphic(st: &StagedTree, a: VertexId, b: VertexId) -> bool {
    let codes = canonical_codes(st);
    codes[a.0] == codes[b.0]
}

/// Refines the stages by subtree isomorphism.
///
/// Positions are numbered by a first-in first-out topological sort of the
/// position graph, starting from the root and visiting targets in sibling
/// order of each position's first member.
pub fn compute_positions(st: &StagedTree) -> PositionPartition {
    let tree = st.probability_tree().tree();
    let codes = canonical_codes(st);
    let mut blocks: Vec<Vec<VertexId>> = Vec::new();
    let mut block_of_code: HashMap<usize, usize> = HashMap::new();
    for v in tree.situations() {
        let next = blocks.len();
        let b = *block_of_code.entry(codes[v.0]).or_insert(next);
        if b == next {
            blocks.push(Vec::new());
        }
        blocks[b].push(v);
    }

    let targets = |b: usize| -> Vec<usize> {
        tree.children(blocks[b][0])
            .filter(|&c| !tree.is_leaf(c))
            .map(|c| block_of_code[&codes[c.0]])
            .collect()
    };
    let mut indegree = vec![0usize; blocks.len()];
    for b in 0..blocks.len() {
        for t in targets(b) {
            indegree[t] += 1;
        }
    }
    let root_block = block_of_code[&codes[tree.root().0]];
    let mut order = Vec::with_capacity(blocks.len());
    let mut queue = VecDeque::from([root_block]);
    while let Some(b) = queue.pop_front() {
        order.push(b);
        for t in targets(b) {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    debug_assert_eq!(order.len(), blocks.len());

    let mut position_of = vec![None; tree.vertex_count()];
    let positions: Vec<Vec<VertexId>> = order
        .iter()
        .map(|&b| std::mem::take(&mut blocks[b]))
        .collect();
    for (k, p) in positions.iter().enumerate() {
        for &v in p {
            position_of[v.0] = Some(k);
        }
    }
    PositionPartition {
        positions,
        position_of,
    }
}
