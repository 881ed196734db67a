//! Serializers: canonical document form, DOT, ASCII, and JSON prefix trees.
//!
//! All output is deterministic: states are renumbered in breadth-first
//! order from the root, node identifiers are path-based, and JSON object
//! keys are emitted in sorted order.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde_json::{json, Value};
use thiserror::Error;

use crate::arena::{ArenaSpec, Choice, ChoiceSpace, Payoff, Pref, UtilityValues};
use crate::multistage::{MsDecor, MsNode, MsPrefixTree, MsSystem};
use crate::system::{Decor, PrefixTree, StateRef, System};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("only census systems have a canonical document form")]
    NotCensus,
}

fn render_arena(arena: &ArenaSpec, out: &mut String) {
    out.push_str("arena {\n");
    let names: Vec<&str> = arena.agents().map(|a| arena.agent_name(a)).collect();
    let _ = writeln!(out, "  agents {};", names.join(", "));
    for a in arena.agents() {
        match arena.choices(a) {
            ChoiceSpace::Enumerated(labels) => {
                let _ = writeln!(
                    out,
                    "  choices {} {{ {} }};",
                    arena.agent_name(a),
                    labels.join(", ")
                );
            }
            ChoiceSpace::Naturals => {
                let _ = writeln!(out, "  choices {} naturals;", arena.agent_name(a));
            }
        }
    }
    for a in arena.agents() {
        let dom = arena.utility(a);
        let domain = match &dom.values {
            UtilityValues::Integers => "int".to_string(),
            UtilityValues::Symbolic(labels) => format!("sym {{ {} }}", labels.join(", ")),
        };
        let pref = match &dom.pref {
            Pref::IntLeq => "leq".to_string(),
            Pref::Indifference => "indifference".to_string(),
            Pref::EqualityOnly => "equality".to_string(),
            Pref::Explicit(rel) => {
                let UtilityValues::Symbolic(labels) = &dom.values else {
                    unreachable!("explicit relations live on symbolic domains")
                };
                let pairs: Vec<String> = rel
                    .iter()
                    .filter(|(lo, hi)| lo != hi)
                    .map(|(lo, hi)| format!("{} <= {}", labels[*lo], labels[*hi]))
                    .collect();
                format!("order {{ {} }}", pairs.join("; "))
            }
        };
        let _ = writeln!(out, "  utility {} {} {};", arena.agent_name(a), domain, pref);
    }
    out.push_str("}\n");
}

fn payoff_doc(arena: &ArenaSpec, p: &Payoff) -> String {
    let parts: Vec<String> = arena
        .agents()
        .map(|a| {
            format!(
                "{}: {}",
                arena.agent_name(a),
                arena.utility(a).value_label(p.get(a))
            )
        })
        .collect();
    format!("leaf {{ {} }}", parts.join(", "))
}

/// Canonical `.game` document for a census game or profile. Reachable
/// states are renumbered `s0..` in breadth-first order, so bisimilar
/// presentations of the same reachable table render identically.
pub fn render_doc<C: Decor>(sys: &System<C>) -> Result<String, RenderError> {
    let reachable = sys.reachable().ok_or(RenderError::NotCensus)?;
    let name_of: HashMap<u64, String> = reachable
        .iter()
        .enumerate()
        .map(|(i, s)| (s.0, format!("s{i}")))
        .collect();
    let arena = sys.arena();
    let mut out = String::new();
    render_arena(arena, &mut out);
    let mut chooses: Vec<(String, String)> = Vec::new();
    for st in &reachable {
        match sys.view(*st) {
            crate::system::View::Leaf(p) => {
                let _ = writeln!(out, "def {} = {};", name_of[&st.0], payoff_doc(arena, &p));
            }
            crate::system::View::Node {
                agent,
                chosen,
                branch,
            } => {
                let crate::system::BranchView::Enumerated(targets) = branch else {
                    unreachable!("census nodes are enumerated")
                };
                let branches: Vec<String> = targets
                    .iter()
                    .enumerate()
                    .map(|(ci, t)| {
                        format!(
                            "{} -> {}",
                            arena.choice_label(agent, Choice(ci as u64)),
                            name_of[&t.0]
                        )
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "def {} = node {} {{ {} }};",
                    name_of[&st.0],
                    arena.agent_name(agent),
                    branches.join(", ")
                );
                if let Some(c) = chosen.as_choice() {
                    chooses.push((
                        name_of[&st.0].clone(),
                        arena.choice_label(agent, c),
                    ));
                }
            }
        }
    }
    let _ = writeln!(out, "root {};", name_of[&sys.root().0]);
    for (state, label) in chooses {
        let _ = writeln!(out, "choose {} = {};", state, label);
    }
    Ok(out)
}

/// Canonical document for a multi-stage census system.
pub fn render_ms_doc<C: MsDecor>(sys: &MsSystem<C>) -> Result<String, RenderError> {
    let arena = sys.arena();
    let arities: Vec<usize> = arena
        .agents()
        .map(|a| arena.choices(a).arity().expect("ms arenas are enumerated"))
        .collect();
    let joint_label = |rank: usize| -> String {
        let jc = crate::multistage::JointChoice::unrank(rank, &arities);
        let labels: Vec<String> = arena
            .agents()
            .map(|a| arena.choice_label(a, jc.0[a.0]))
            .collect();
        format!("({})", labels.join(", "))
    };
    // breadth-first reachable renumbering
    let mut order: Vec<StateRef> = vec![sys.root()];
    let mut seen: HashMap<u64, String> = HashMap::new();
    seen.insert(sys.root().0, "s0".into());
    let mut i = 0;
    while i < order.len() {
        if let MsNode::Node { branches, .. } = sys.node(order[i]) {
            for b in branches {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(b.0) {
                    e.insert(format!("s{}", order.len()));
                    order.push(*b);
                }
            }
        }
        i += 1;
    }
    let mut out = String::new();
    render_arena(arena, &mut out);
    let mut chooses: Vec<(String, String)> = Vec::new();
    for st in &order {
        match sys.node(*st) {
            MsNode::Leaf(p) => {
                let _ = writeln!(out, "def {} = {};", seen[&st.0], payoff_doc(arena, p));
            }
            MsNode::Node { chosen, branches } => {
                let parts: Vec<String> = branches
                    .iter()
                    .enumerate()
                    .map(|(r, t)| format!("{} -> {}", joint_label(r), seen[&t.0]))
                    .collect();
                let _ = writeln!(
                    out,
                    "def {} = msnode {{ {} }};",
                    seen[&st.0],
                    parts.join(", ")
                );
                if let Some(jc) = chosen.as_joint() {
                    chooses.push((seen[&st.0].clone(), joint_label(jc.rank(&arities))));
                }
            }
        }
    }
    let _ = writeln!(out, "root {};", seen[&sys.root().0]);
    for (state, label) in chooses {
        let _ = writeln!(out, "choose {} = {};", state, label);
    }
    Ok(out)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering of the depth-bounded unfolding. Node identifiers are the
/// choice paths from the root; chosen edges are drawn bold.
pub fn render_dot<C: Decor>(sys: &System<C>, depth: u32, nat_samples: u64) -> String {
    let tree = sys.unfold_prefix(depth, nat_samples);
    let arena = sys.arena();
    let mut out = String::from("digraph game {\n  rankdir=TB;\n  node [fontname=\"monospace\"];\n");
    fn walk<C: Decor>(
        arena: &ArenaSpec,
        tree: &PrefixTree,
        id: &str,
        out: &mut String,
        _marker: std::marker::PhantomData<C>,
    ) {
        match tree {
            PrefixTree::Leaf(p) => {
                let _ = writeln!(
                    out,
                    "  \"{id}\" [shape=box, label=\"{}\"];",
                    dot_escape(&p.display(arena))
                );
            }
            PrefixTree::Continuation(s) => {
                let _ = writeln!(
                    out,
                    "  \"{id}\" [shape=plaintext, label=\"… #{}\"];",
                    s.0
                );
            }
            PrefixTree::Node {
                state,
                agent,
                chosen,
                branches,
                elided,
            } => {
                let _ = writeln!(
                    out,
                    "  \"{id}\" [shape=circle, label=\"{} #{}\"];",
                    dot_escape(arena.agent_name(*agent)),
                    state.0
                );
                for (c, sub) in branches {
                    let child = format!("{id}_{}", c.0);
                    let label = dot_escape(&arena.choice_label(*agent, *c));
                    let style = if Some(*c) == *chosen {
                        ", penwidth=2, style=bold"
                    } else {
                        ""
                    };
                    let _ = writeln!(out, "  \"{id}\" -> \"{child}\" [label=\"{label}\"{style}];");
                    walk::<C>(arena, sub, &child, out, std::marker::PhantomData);
                }
                if *elided {
                    let child = format!("{id}_ellipsis");
                    let _ = writeln!(out, "  \"{child}\" [shape=plaintext, label=\"⋯\"];");
                    let _ = writeln!(out, "  \"{id}\" -> \"{child}\" [style=dotted];");
                }
            }
        }
    }
    walk::<C>(arena, &tree, "n", &mut out, std::marker::PhantomData);
    out.push_str("}\n");
    out
}

/// Indented text rendering of the depth-bounded unfolding. Chosen branches
/// are marked with `=>`.
pub fn render_ascii<C: Decor>(sys: &System<C>, depth: u32, nat_samples: u64) -> String {
    let tree = sys.unfold_prefix(depth, nat_samples);
    let arena = sys.arena();
    let mut out = String::new();
    fn walk(arena: &ArenaSpec, tree: &PrefixTree, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match tree {
            PrefixTree::Leaf(p) => {
                let _ = writeln!(out, "{pad}leaf {{ {} }}", p.display(arena));
            }
            PrefixTree::Continuation(s) => {
                let _ = writeln!(out, "{pad}... (state #{})", s.0);
            }
            PrefixTree::Node {
                state,
                agent,
                chosen,
                branches,
                elided,
            } => {
                let _ = writeln!(out, "{pad}node {} (state #{})", arena.agent_name(*agent), state.0);
                for (c, sub) in branches {
                    let mark = if Some(*c) == *chosen { "=>" } else { "->" };
                    let _ = writeln!(
                        out,
                        "{pad}  {} {mark}",
                        arena.choice_label(*agent, *c)
                    );
                    walk(arena, sub, indent + 2, out);
                }
                if *elided {
                    let _ = writeln!(out, "{pad}  ...");
                }
            }
        }
    }
    walk(arena, &tree, 0, &mut out);
    out
}

/// JSON encoding of the depth-bounded unfolding, per the shipped schema.
pub fn export_prefix_json<C: Decor>(sys: &System<C>, depth: u32, nat_samples: u64) -> Value {
    let tree = sys.unfold_prefix(depth, nat_samples);
    prefix_tree_json(sys.arena(), &tree)
}

fn payoff_json(arena: &ArenaSpec, p: &Payoff) -> Value {
    let mut map = serde_json::Map::new();
    for a in arena.agents() {
        map.insert(
            arena.agent_name(a).to_string(),
            Value::String(arena.utility(a).value_label(p.get(a))),
        );
    }
    Value::Object(map)
}

fn prefix_tree_json(arena: &ArenaSpec, tree: &PrefixTree) -> Value {
    match tree {
        PrefixTree::Leaf(p) => json!({
            "kind": "leaf",
            "payoff": payoff_json(arena, p),
        }),
        PrefixTree::Continuation(s) => json!({
            "kind": "continuation",
            "state": s.0.to_string(),
        }),
        PrefixTree::Node {
            state,
            agent,
            chosen,
            branches,
            elided,
        } => {
            let bs: Vec<Value> = branches
                .iter()
                .map(|(c, sub)| {
                    json!({
                        "choice": arena.choice_label(*agent, *c),
                        "tree": prefix_tree_json(arena, sub),
                    })
                })
                .collect();
            json!({
                "kind": "node",
                "state": state.0.to_string(),
                "agent": arena.agent_name(*agent),
                "chosen": chosen.map(|c| arena.choice_label(*agent, c)),
                "elided": elided,
                "branches": bs,
            })
        }
    }
}

/// DOT rendering for multi-stage systems.
pub fn ms_render_dot<C: MsDecor>(sys: &MsSystem<C>, depth: u32) -> String {
    let tree = sys.unfold_prefix(depth);
    let arena = sys.arena();
    let mut out = String::from("digraph game {\n  rankdir=TB;\n  node [fontname=\"monospace\"];\n");
    fn joint_label(arena: &ArenaSpec, jc: &crate::multistage::JointChoice) -> String {
        let labels: Vec<String> = arena
            .agents()
            .map(|a| arena.choice_label(a, jc.0[a.0]))
            .collect();
        format!("({})", labels.join(","))
    }
    fn walk(arena: &ArenaSpec, tree: &MsPrefixTree, id: &str, out: &mut String) {
        match tree {
            MsPrefixTree::Leaf(p) => {
                let _ = writeln!(
                    out,
                    "  \"{id}\" [shape=box, label=\"{}\"];",
                    dot_escape(&p.display(arena))
                );
            }
            MsPrefixTree::Continuation(s) => {
                let _ = writeln!(out, "  \"{id}\" [shape=plaintext, label=\"… #{}\"];", s.0);
            }
            MsPrefixTree::Node {
                state,
                chosen,
                branches,
            } => {
                let _ = writeln!(out, "  \"{id}\" [shape=circle, label=\"* #{}\"];", state.0);
                for (i, (jc, sub)) in branches.iter().enumerate() {
                    let child = format!("{id}_{i}");
                    let style = if chosen.as_ref() == Some(jc) {
                        ", penwidth=2, style=bold"
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        out,
                        "  \"{id}\" -> \"{child}\" [label=\"{}\"{style}];",
                        dot_escape(&joint_label(arena, jc))
                    );
                    walk(arena, sub, &child, out);
                }
            }
        }
    }
    walk(arena, &tree, "n", &mut out);
    out.push_str("}\n");
    out
}

/// Indented text rendering for multi-stage systems.
pub fn ms_render_ascii<C: MsDecor>(sys: &MsSystem<C>, depth: u32) -> String {
    let tree = sys.unfold_prefix(depth);
    let arena = sys.arena();
    let mut out = String::new();
    fn walk(arena: &ArenaSpec, tree: &MsPrefixTree, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match tree {
            MsPrefixTree::Leaf(p) => {
                let _ = writeln!(out, "{pad}leaf {{ {} }}", p.display(arena));
            }
            MsPrefixTree::Continuation(s) => {
                let _ = writeln!(out, "{pad}... (state #{})", s.0);
            }
            MsPrefixTree::Node {
                state,
                chosen,
                branches,
            } => {
                let _ = writeln!(out, "{pad}msnode (state #{})", state.0);
                for (jc, sub) in branches {
                    let labels: Vec<String> = arena
                        .agents()
                        .map(|a| arena.choice_label(a, jc.0[a.0]))
                        .collect();
                    let mark = if chosen.as_ref() == Some(jc) { "=>" } else { "->" };
                    let _ = writeln!(out, "{pad}  ({}) {mark}", labels.join(", "));
                    walk(arena, sub, indent + 2, out);
                }
            }
        }
    }
    walk(arena, &tree, 0, &mut out);
    out
}

/// JSON prefix tree for multi-stage systems.
pub fn ms_export_prefix_json<C: MsDecor>(sys: &MsSystem<C>, depth: u32) -> Value {
    let tree = sys.unfold_prefix(depth);
    let arena = sys.arena();
    fn walk(arena: &ArenaSpec, tree: &MsPrefixTree) -> Value {
        match tree {
            MsPrefixTree::Leaf(p) => json!({"kind": "leaf", "payoff": payoff_json(arena, p)}),
            MsPrefixTree::Continuation(s) => {
                json!({"kind": "continuation", "state": s.0.to_string()})
            }
            MsPrefixTree::Node {
                state,
                chosen,
                branches,
            } => {
                let labels = |jc: &crate::multistage::JointChoice| -> Vec<Value> {
                    arena
                        .agents()
                        .map(|a| Value::String(arena.choice_label(a, jc.0[a.0])))
                        .collect()
                };
                json!({
                    "kind": "node",
                    "state": state.0.to_string(),
                    "chosen": chosen.as_ref().map(|jc| Value::Array(labels(jc))),
                    "elided": false,
                    "branches": branches.iter().map(|(jc, sub)| json!({
                        "choice": Value::Array(labels(jc)),
                        "tree": walk(arena, sub),
                    })).collect::<Vec<Value>>(),
                })
            }
        }
    }
    walk(arena, &tree)
}
