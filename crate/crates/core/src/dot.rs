//! Graphviz output. Nodes sharing a stage get the same fill colour;
//! singleton stages stay white. Edges carry the d-event text.

use std::fmt::Write;

use crate::ceg::{Ceg, NodeKind};
use crate::event_tree::ProbabilityTree;
use crate::model::LeafStatus;
use crate::staging::StagedTree;

const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#bc80bd", "#ccebc5", "#ffed6f", "#d9d9d9",
];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn theta_label(text: &str, theta: f64) -> String {
    format!("{text}\\n{theta:.4}")
}

/// Assigns palette entries to the non-singleton classes in order of first use.
struct Colours {
    seen: Vec<Option<usize>>,
    next: usize,
}

impl Colours {
    fn new(classes: usize) -> Self {
        Colours {
            seen: vec![None; classes],
            next: 0,
        }
    }

    fn get(&mut self, class: usize) -> &'static str {
        let slot = *self.seen[class].get_or_insert_with(|| {
            self.next += 1;
            self.next - 1
        });
        PALETTE[slot % PALETTE.len()]
    }
}

fn tree_dot(pt: &ProbabilityTree, staged: Option<&StagedTree>) -> String {
    let t = pt.tree();
    let mut out = String::new();
    let title = pt.name().unwrap_or("tree");
    writeln!(out, "digraph {} {{", quote(title)).unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=circle style=filled fillcolor=white];\n");
    let mut colours = Colours::new(staged.map_or(0, |s| s.stages().len()));
    for &v in t.bfs_order() {
        let mut attrs = format!("label={}", quote(t.name(v)));
        match t.leaf_status(v) {
            Some(LeafStatus::Failed) => attrs.push_str(" shape=doublecircle fillcolor=\"#fb8072\""),
            Some(LeafStatus::Operational) => attrs.push_str(" shape=doublecircle"),
            None => {
                if let Some(s) = staged {
                    let k = s.stages().stage_of(v).expect("situations are staged");
                    if !s.stages().is_singleton(k) {
                        write!(attrs, " fillcolor=\"{}\" xlabel=\"u{k}\"", colours.get(k)).unwrap();
                    }
                }
            }
        }
        writeln!(out, "  {} [{attrs}];", quote(t.name(v))).unwrap();
    }
    for (i, e) in t.edges().iter().enumerate() {
        let text = &t.devent(e.devent).text;
        let theta = pt.edge_theta(crate::event_tree::TreeEdgeId(i));
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(t.name(e.source)),
            quote(t.name(e.target)),
            quote(&theta_label(text, theta))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// The event tree with its edge probabilities.
pub fn event_tree_dot(pt: &ProbabilityTree) -> String {
    tree_dot(pt, None)
}

/// The event tree, situations filled by stage.
pub fn staged_tree_dot(st: &StagedTree) -> String {
    tree_dot(st.probability_tree(), Some(st))
}

/// A chain event graph, positions filled by stage.
pub fn ceg_dot(c: &Ceg) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(c.name().unwrap_or("ceg"))).unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=circle style=filled fillcolor=white];\n");
    let mut per_stage = vec![0usize; c.stage_count()];
    for n in c.nodes() {
        if let Some(k) = n.stage {
            per_stage[k] += 1;
        }
    }
    let mut colours = Colours::new(c.stage_count());
    for n in c.nodes() {
        let mut attrs = format!("label={}", quote(&n.name));
        match n.kind {
            NodeKind::FailureSink => attrs.push_str(" shape=doublecircle fillcolor=\"#fb8072\""),
            NodeKind::WorkingSink => attrs.push_str(" shape=doublecircle"),
            NodeKind::Position => {
                let k = n.stage.expect("positions are staged");
                if per_stage[k] > 1 {
                    write!(attrs, " fillcolor=\"{}\" xlabel=\"u{k}\"", colours.get(k)).unwrap();
                }
            }
        }
        writeln!(out, "  {} [{attrs}];", quote(&n.name)).unwrap();
    }
    for (i, e) in c.edges().iter().enumerate() {
        let text = &c.devent(e.devent).text;
        let theta = c.edge_thetas()[i];
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(&c.node(e.source).name),
            quote(&c.node(e.target).name),
            quote(&theta_label(text, theta))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deterministic_and_complete() {
        let pt = fixtures::bushing_tree();
        let st = StagedTree::new(pt.clone());
        let c = Ceg::from_tree(&pt);
        let a = ceg_dot(&c);
        assert_eq!(a, ceg_dot(&Ceg::from_tree(&pt)));
        assert_eq!(a.matches(" -> ").count(), c.edges().len());
        assert!(a.contains("\"w_inf_f\" [label=\"w_inf_f\" shape=doublecircle"));

        let tree = event_tree_dot(&pt);
        assert_eq!(tree.matches(" -> ").count(), pt.tree().edges().len());
        assert!(!tree.contains("xlabel"));
        let staged = staged_tree_dot(&st);
        assert!(staged.contains("xlabel=\"u"));
        assert_eq!(staged, staged_tree_dot(&st));
    }

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(quote("a \"b\""), "\"a \\\"b\\\"\"");
    }
}
