//! The finiteness and convergence taxonomy on games and profiles.
//!
//! Every check returns a three-valued [`Verdict`]: `Holds`, `Fails` with a
//! finite replayable witness, or `Unknown` when a fuel-bounded exploration
//! ran out. Census and stage systems get exact answers; closure systems get
//! bounded exploration, upgraded by a certified [`AnalyticFact`] when the
//! exploration was inconclusive. Boolean contexts must branch three ways;
//! `Unknown` is never silently collapsed into either definite answer.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::arena::Choice;
use crate::stage::{StageEdge, StageFamily};
use crate::system::{
    AnalyticProp, BranchView, Decor, GameSystem, Lasso, PathEnd, Space, StateRef, StrategySystem,
    System, View,
};
use crate::Limits;

/// Result of a semi-decidable check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails(Witness),
    Unknown {
        /// Exploration budget spent before giving up.
        fuel_spent: u64,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }
}

/// A finite, replayable refutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// Following `path` from the root reaches a ℕ-branching node.
    NaturalsBranching { path: Vec<Choice> },
    /// Following `prefix` then repeating `cycle` stays inside the system's
    /// node states forever.
    Cycle {
        prefix: Vec<Choice>,
        cycle: Vec<Choice>,
    },
    /// The chosen play closes a lasso (for convergence-type predicates).
    ChosenLasso(Lasso),
    /// The chosen play reaches a leaf (refutes divergence).
    Terminates { path: Vec<Choice> },
    /// A reachable subprofile at `path` fails a local predicate.
    At { path: Vec<Choice>, inner: Box<Witness> },
    /// At the node reached by `path`, the alternative branch beats the
    /// chosen one in the owner's preorder (refutes an equilibrium).
    PrefViolation {
        path: Vec<Choice>,
        chosen: Choice,
        alternative: Choice,
    },
    /// A finite witness class was enumerated in full and no member passed
    /// (refutes an existential; replay by re-running the search).
    SearchExhausted { candidates: u128 },
}

/// DFS cycle search in a finite choice-labelled graph. `succ` lists a key's
/// outgoing edges; `None` targets are edges to leaves. Returns the choice
/// path to the first cycle found, split into prefix and cycle.
fn find_cycle<F>(root: u64, succ: F) -> Option<(Vec<Choice>, Vec<Choice>)>
where
    F: Fn(u64) -> Vec<(Choice, Option<u64>)>,
{
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        Grey,
        Black,
    }
    let mut color: HashMap<u64, Color> = HashMap::new();
    let mut on_path: HashMap<u64, usize> = HashMap::new();
    let mut path: Vec<Choice> = Vec::new();
    let mut stack: Vec<(u64, Vec<(Choice, Option<u64>)>, usize)> = Vec::new();
    color.insert(root, Color::Grey);
    on_path.insert(root, 0);
    stack.push((root, succ(root), 0));
    while !stack.is_empty() {
        let top = stack.len() - 1;
        let mut descend: Option<(Choice, u64)> = None;
        loop {
            let (_, edges, idx) = &mut stack[top];
            if *idx >= edges.len() {
                break;
            }
            let (c, target) = edges[*idx];
            *idx += 1;
            let Some(target) = target else { continue };
            match color.get(&target) {
                Some(Color::Grey) => {
                    let entry = on_path[&target];
                    let mut full = path.clone();
                    full.push(c);
                    let cycle = full.split_off(entry);
                    return Some((full, cycle));
                }
                Some(Color::Black) => {}
                None => {
                    descend = Some((c, target));
                    break;
                }
            }
        }
        match descend {
            Some((c, target)) => {
                color.insert(target, Color::Grey);
                path.push(c);
                on_path.insert(target, path.len());
                stack.push((target, succ(target), 0));
            }
            None => {
                let key = stack[top].0;
                color.insert(key, Color::Black);
                on_path.remove(&key);
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

fn census_succ<C: Decor>(sys: &System<C>) -> impl Fn(u64) -> Vec<(Choice, Option<u64>)> + '_ {
    |key| match sys.view(StateRef(key)) {
        View::Leaf(_) => Vec::new(),
        View::Node { branch, .. } => match branch {
            BranchView::Enumerated(targets) => targets
                .iter()
                .enumerate()
                .map(|(i, t)| (Choice(i as u64), Some(t.0)))
                .collect(),
            BranchView::Naturals(_) => unreachable!("census nodes are enumerated"),
        },
    }
}

fn stage_succ<C: Clone + PartialEq + std::fmt::Debug>(
    fam: &StageFamily<C>,
) -> impl Fn(u64) -> Vec<(Choice, Option<u64>)> + '_ {
    |key| {
        fam.templates[key as usize]
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| match e {
                StageEdge::Leaf(_) => (Choice(i as u64), None),
                StageEdge::Next { template, .. } => (Choice(i as u64), Some(*template as u64)),
            })
            .collect()
    }
}

fn root_template<C: Decor>(sys: &System<C>) -> usize {
    match crate::stage::unpack(sys.root()) {
        crate::stage::StageState::Node { template, .. } => template,
        crate::stage::StageState::Leaf { template, .. } => template,
    }
}

/// Exploration outcome for closure systems.
enum Explored {
    /// Every reachable state was expanded; the reachable graph is this.
    Complete(HashMap<u64, Vec<Option<u64>>>),
    NatNode { path: Vec<Choice> },
    Cycle { prefix: Vec<Choice>, cycle: Vec<Choice> },
    OutOfFuel { spent: u64 },
}

/// Depth-first exploration of a closure system, trusting state keys as
/// identities (the closure contract). Stops at the first ℕ-branching node
/// or cycle; otherwise runs to completion or out of fuel.
fn explore_closure<C: Decor>(sys: &System<C>, limits: &Limits) -> Explored {
    let mut children: HashMap<u64, Vec<Option<u64>>> = HashMap::new();
    let mut on_path: HashMap<u64, usize> = HashMap::new();
    let mut path: Vec<Choice> = Vec::new();
    let mut stack: Vec<(u64, Vec<u64>, usize)> = Vec::new();
    let mut spent: u64 = 0;

    let expand = |key: u64, spent: &mut u64| -> Result<Option<Vec<u64>>, Vec<Choice>> {
        *spent += 1;
        match sys.view(StateRef(key)) {
            View::Leaf(_) => Ok(None),
            View::Node { branch, .. } => match branch {
                BranchView::Enumerated(ts) => Ok(Some(ts.iter().map(|t| t.0).collect())),
                BranchView::Naturals(_) => Err(Vec::new()),
            },
        }
    };

    match expand(sys.root().0, &mut spent) {
        Err(_) => return Explored::NatNode { path },
        Ok(None) => {
            children.insert(sys.root().0, Vec::new());
            return Explored::Complete(children);
        }
        Ok(Some(ts)) => {
            on_path.insert(sys.root().0, 0);
            stack.push((sys.root().0, ts, 0));
        }
    }

    while let Some((key, targets, idx)) = stack.last_mut() {
        if *idx < targets.len() {
            let c = Choice(*idx as u64);
            let target = targets[*idx];
            *idx += 1;
            if let Some(entry) = on_path.get(&target) {
                let mut full = path.clone();
                full.push(c);
                let cycle = full.split_off(*entry);
                return Explored::Cycle {
                    prefix: full,
                    cycle,
                };
            }
            if children.contains_key(&target) {
                continue;
            }
            if spent >= limits.fuel {
                return Explored::OutOfFuel { spent };
            }
            match expand(target, &mut spent) {
                Err(_) => {
                    let mut p = path.clone();
                    p.push(c);
                    return Explored::NatNode { path: p };
                }
                Ok(None) => {
                    children.insert(target, Vec::new());
                }
                Ok(Some(ts)) => {
                    path.push(c);
                    on_path.insert(target, path.len());
                    stack.push((target, ts, 0));
                }
            }
        } else {
            let key = *key;
            let targets = std::mem::take(targets);
            children.insert(key, targets.into_iter().map(Some).collect());
            on_path.remove(&key);
            stack.pop();
            path.pop();
        }
    }
    Explored::Complete(children)
}

/// Number of strategy profiles of the finite tree a state unfolds to.
/// `None` children are immediate leaves. Saturates at `u128::MAX`.
fn profile_count(root: u64, children: &impl Fn(u64) -> Vec<Option<u64>>) -> u128 {
    fn go(
        key: u64,
        children: &impl Fn(u64) -> Vec<Option<u64>>,
        memo: &mut HashMap<u64, u128>,
    ) -> u128 {
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let kids = children(key);
        let v = if kids.is_empty() {
            1
        } else {
            let mut acc: u128 = kids.len() as u128;
            for k in &kids {
                let sub = match k {
                    None => 1,
                    Some(k) => go(*k, children, memo),
                };
                acc = acc.saturating_mul(sub);
            }
            acc
        };
        memo.insert(key, v);
        v
    }
    go(root, children, &mut HashMap::new())
}

fn upgrade_unknown<C: Decor>(sys: &System<C>, prop: AnalyticProp, v: Verdict) -> Verdict {
    if let Verdict::Unknown { .. } = v {
        if let Some(fact) = sys.fact(prop) {
            // certified facts settle questions the bounded search could not;
            // they never override a computed definite answer
            return if fact.holds {
                Verdict::Holds
            } else {
                v
            };
        }
    }
    v
}

/// Does the game have finitely many positions?
///
/// Holds exactly when the game unfolds to a finite tree: enumerated
/// branching everywhere and no reachable cycle. A reachable ℕ-branching
/// node or cycle is a definite refutation even on closure systems.
pub fn is_finite_game(g: &GameSystem, limits: &Limits) -> Verdict {
    match g.space() {
        Space::Census(_) => match find_cycle(g.root().0, census_succ(g)) {
            Some((prefix, cycle)) => Verdict::Fails(Witness::Cycle { prefix, cycle }),
            None => Verdict::Holds,
        },
        Space::Stage(fam) => match find_cycle(root_template(g) as u64, stage_succ(fam)) {
            Some((prefix, cycle)) => Verdict::Fails(Witness::Cycle { prefix, cycle }),
            None => Verdict::Holds,
        },
        Space::Closure(_) => {
            let v = match explore_closure(g, limits) {
                Explored::Complete(_) => Verdict::Holds,
                Explored::NatNode { path } => Verdict::Fails(Witness::NaturalsBranching { path }),
                Explored::Cycle { prefix, cycle } => {
                    Verdict::Fails(Witness::Cycle { prefix, cycle })
                }
                Explored::OutOfFuel { spent } => Verdict::Unknown { fuel_spent: spent },
            };
            upgrade_unknown(g, AnalyticProp::FiniteGame, v)
        }
    }
}

/// Finite-profile analog: the checks differ from the game ones only in
/// carrying chosen choices, which are validated at construction, so the
/// erasure decides.
pub fn is_finite_profile(s: &StrategySystem, limits: &Limits) -> Verdict {
    is_finite_game(&s.game(), limits)
}

/// Does the game admit only finitely many strategy profiles?
///
/// Equivalent to unfolding to a finite tree. On `Holds` also reports the
/// number of profiles: the product over tree nodes of their branching
/// arity (saturating).
pub fn is_finitely_broad(g: &GameSystem, limits: &Limits) -> (Verdict, Option<u128>) {
    match g.space() {
        Space::Census(_) => match find_cycle(g.root().0, census_succ(g)) {
            Some((prefix, cycle)) => (Verdict::Fails(Witness::Cycle { prefix, cycle }), None),
            None => {
                let children = |key: u64| -> Vec<Option<u64>> {
                    census_succ(g)(key)
                        .into_iter()
                        .map(|(_, t)| t)
                        .collect()
                };
                let count = profile_count(g.root().0, &children);
                (Verdict::Holds, Some(count))
            }
        },
        Space::Stage(fam) => {
            let root = root_template(g) as u64;
            match find_cycle(root, stage_succ(fam)) {
                Some((prefix, cycle)) => (Verdict::Fails(Witness::Cycle { prefix, cycle }), None),
                None => {
                    let children = |key: u64| -> Vec<Option<u64>> {
                        stage_succ(fam)(key).into_iter().map(|(_, t)| t).collect()
                    };
                    (Verdict::Holds, Some(profile_count(root, &children)))
                }
            }
        }
        Space::Closure(_) => {
            let v = match explore_closure(g, limits) {
                Explored::Complete(children) => {
                    let count = profile_count(g.root().0, &|key| children[&key].clone());
                    return (Verdict::Holds, Some(count));
                }
                Explored::NatNode { path } => Verdict::Fails(Witness::NaturalsBranching { path }),
                Explored::Cycle { prefix, cycle } => {
                    Verdict::Fails(Witness::Cycle { prefix, cycle })
                }
                Explored::OutOfFuel { spent } => Verdict::Unknown { fuel_spent: spent },
            };
            (upgrade_unknown(g, AnalyticProp::FinitelyBroad, v), None)
        }
    }
}

/// Does every history (root-to-leaf path) have finite length?
///
/// Census and stage systems: exactly when the reachable graph has no cycle.
/// ℕ-branching does not refute this — a node may have infinitely many
/// branches, each leading to a finite history — so closure systems are
/// explored with sampling and fall back to certified facts.
pub fn is_finite_history_game(g: &GameSystem, limits: &Limits) -> Verdict {
    match g.space() {
        Space::Census(_) => match find_cycle(g.root().0, census_succ(g)) {
            Some((prefix, cycle)) => Verdict::Fails(Witness::Cycle { prefix, cycle }),
            None => Verdict::Holds,
        },
        Space::Stage(fam) => match find_cycle(root_template(g) as u64, stage_succ(fam)) {
            Some((prefix, cycle)) => Verdict::Fails(Witness::Cycle { prefix, cycle }),
            None => Verdict::Holds,
        },
        Space::Closure(_) => {
            let v = sampled_cycle_search(g, limits);
            upgrade_unknown(g, AnalyticProp::FiniteHistoryGame, v)
        }
    }
}

pub fn is_finite_history_profile(s: &StrategySystem, limits: &Limits) -> Verdict {
    is_finite_history_game(&s.game(), limits)
}

/// Bounded cycle search that samples ℕ-branching nodes instead of failing
/// on them. Complete exploration without ℕ nodes gives a definite `Holds`;
/// any sampling leaves the answer `Unknown` at best.
fn sampled_cycle_search(g: &GameSystem, limits: &Limits) -> Verdict {
    let mut on_path: HashMap<u64, usize> = HashMap::new();
    let mut done: HashSet<u64> = HashSet::new();
    let mut path: Vec<Choice> = Vec::new();
    let mut stack: Vec<(u64, Vec<(Choice, u64)>, usize)> = Vec::new();
    let mut spent: u64 = 0;
    let mut sampled = false;

    let expand = |key: u64, spent: &mut u64, sampled: &mut bool| -> Vec<(Choice, u64)> {
        *spent += 1;
        match g.view(StateRef(key)) {
            View::Leaf(_) => Vec::new(),
            View::Node { branch, .. } => match branch {
                BranchView::Enumerated(ts) => ts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (Choice(i as u64), t.0))
                    .collect(),
                BranchView::Naturals(f) => {
                    *sampled = true;
                    (0..limits.nat_samples).map(|n| (Choice(n), f(n).0)).collect()
                }
            },
        }
    };

    let root = g.root().0;
    let edges = expand(root, &mut spent, &mut sampled);
    on_path.insert(root, 0);
    stack.push((root, edges, 0));
    while let Some((key, edges, idx)) = stack.last_mut() {
        if *idx < edges.len() {
            let (c, target) = edges[*idx];
            *idx += 1;
            if let Some(entry) = on_path.get(&target) {
                let mut full = path.clone();
                full.push(c);
                let cycle = full.split_off(*entry);
                return Verdict::Fails(Witness::Cycle {
                    prefix: full,
                    cycle,
                });
            }
            if done.contains(&target) {
                continue;
            }
            if spent >= limits.fuel {
                return Verdict::Unknown { fuel_spent: spent };
            }
            let child_edges = expand(target, &mut spent, &mut sampled);
            path.push(c);
            on_path.insert(target, path.len());
            stack.push((target, child_edges, 0));
        } else {
            let key = *key;
            done.insert(key);
            on_path.remove(&key);
            stack.pop();
            path.pop();
        }
    }
    if sampled {
        Verdict::Unknown { fuel_spent: spent }
    } else {
        Verdict::Holds
    }
}

/// Does the chosen play from the root reach a leaf?
pub fn is_convergent(s: &StrategySystem, limits: &Limits) -> Verdict {
    let path = s.chosen_path(limits.fuel);
    let v = match path.end {
        PathEnd::Leaf(_) => Verdict::Holds,
        PathEnd::Lasso { cycle_start } => Verdict::Fails(Witness::ChosenLasso(Lasso {
            prefix: path.steps[..cycle_start].to_vec(),
            cycle: path.steps[cycle_start..].to_vec(),
        })),
        PathEnd::Exhausted => Verdict::Unknown {
            fuel_spent: limits.fuel,
        },
    };
    upgrade_unknown(s, AnalyticProp::Convergent, v)
}

/// The `Always` modality: a local predicate holds at every reachable
/// subprofile. Leaves satisfy it unconditionally.
pub fn always(
    s: &StrategySystem,
    local: &dyn Fn(&StrategySystem) -> Verdict,
    limits: &Limits,
) -> Verdict {
    // (state key, path, is-node) worklist; breadth-first so witnesses are short
    let mut queue: VecDeque<(StateRef, Vec<Choice>)> = VecDeque::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut spent: u64 = 0;
    let mut incomplete = false;

    // stage systems: quantify over templates at their minimal stages; the
    // local condition at a template is checked once, generically
    if let Space::Stage(fam) = s.space() {
        let root = root_template(s);
        let mins = fam.min_stages(root, match crate::stage::unpack(s.root()) {
            crate::stage::StageState::Node { stage, .. } => stage,
            crate::stage::StageState::Leaf { stage, .. } => stage,
        });
        let mut unknown: Option<u64> = None;
        for t in fam.reachable_templates(root) {
            let stage = mins[t].expect("reachable template has a minimal stage");
            let sub = s.re_root(crate::stage::pack_node(t, stage));
            match local(&sub) {
                Verdict::Holds => {}
                Verdict::Fails(w) => {
                    return Verdict::Fails(Witness::At {
                        path: Vec::new(),
                        inner: Box::new(w),
                    })
                }
                Verdict::Unknown { fuel_spent } => unknown = Some(fuel_spent),
            }
        }
        return match unknown {
            Some(fuel_spent) => Verdict::Unknown { fuel_spent },
            None => Verdict::Holds,
        };
    }

    queue.push_back((s.root(), Vec::new()));
    seen.insert(s.root().0);
    while let Some((state, path)) = queue.pop_front() {
        spent += 1;
        if spent > limits.fuel {
            incomplete = true;
            break;
        }
        match s.view(state) {
            View::Leaf(_) => {}
            View::Node { branch, .. } => {
                let sub = s.re_root(state);
                match local(&sub) {
                    Verdict::Holds => {}
                    Verdict::Fails(w) => {
                        return Verdict::Fails(Witness::At {
                            path,
                            inner: Box::new(w),
                        })
                    }
                    Verdict::Unknown { .. } => incomplete = true,
                }
                match branch {
                    BranchView::Enumerated(ts) => {
                        for (i, t) in ts.iter().enumerate() {
                            if seen.insert(t.0) {
                                let mut p = path.clone();
                                p.push(Choice(i as u64));
                                queue.push_back((*t, p));
                            }
                        }
                    }
                    BranchView::Naturals(f) => {
                        incomplete = true;
                        for n in 0..limits.nat_samples {
                            let t = f(n);
                            if seen.insert(t.0) {
                                let mut p = path.clone();
                                p.push(Choice(n));
                                queue.push_back((t, p));
                            }
                        }
                    }
                }
            }
        }
    }
    if incomplete {
        Verdict::Unknown { fuel_spent: spent }
    } else {
        Verdict::Holds
    }
}

/// `⇓`: Always applied to convergence. The class of profiles equilibrium
/// analysis is interested in.
pub fn is_always_convergent(s: &StrategySystem, limits: &Limits) -> Verdict {
    let v = always(s, &|sub| is_convergent(sub, limits), limits);
    upgrade_unknown(s, AnalyticProp::AlwaysConvergent, v)
}

/// Totality of the utility assignment on convergent profiles: if the chosen
/// play converges, `uassign` must assign. True by construction; this check
/// asserts it rather than assuming it.
pub fn existence_uassign_check(s: &StrategySystem, limits: &Limits) -> Verdict {
    match is_convergent(s, limits) {
        Verdict::Holds => match s.uassign(limits.fuel) {
            crate::system::UassignResult::Assigned(_) => Verdict::Holds,
            crate::system::UassignResult::DivergenceDetected(l) => {
                Verdict::Fails(Witness::ChosenLasso(l))
            }
            crate::system::UassignResult::FuelExhausted(steps) => Verdict::Fails(Witness::Terminates {
                path: steps.iter().map(|st| st.chosen).collect(),
            }),
        },
        // vacuous: the implication's antecedent is not established
        _ => Verdict::Holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{AgentId, ArenaSpec, ChoiceSpace, Payoff, UtilityDomain, UtilityValue};
    use crate::system::CensusNode;
    use std::sync::Arc;

    fn arena1() -> Arc<ArenaSpec> {
        ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Enumerated(vec!["l".into(), "r".into()])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap()
    }

    fn pay(v: i64) -> Payoff {
        Payoff(vec![UtilityValue::Int(v)])
    }

    #[test]
    fn leaf_game_is_finite_and_broad_with_one_profile() {
        let g = GameSystem::census(arena1(), vec![CensusNode::Leaf(pay(1))], 0).unwrap();
        let limits = Limits::default();
        assert_eq!(is_finite_game(&g, &limits), Verdict::Holds);
        assert_eq!(is_finite_history_game(&g, &limits), Verdict::Holds);
        assert_eq!(is_finitely_broad(&g, &limits), (Verdict::Holds, Some(1)));
    }

    #[test]
    fn three_leaves_give_three_profiles() {
        let arena = ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Enumerated(vec![
                "x".into(),
                "y".into(),
                "z".into(),
            ])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap();
        let g = GameSystem::census(
            arena,
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(1), StateRef(2), StateRef(3)],
                },
                CensusNode::Leaf(pay(1)),
                CensusNode::Leaf(pay(2)),
                CensusNode::Leaf(pay(3)),
            ],
            0,
        )
        .unwrap();
        assert_eq!(
            is_finitely_broad(&g, &Limits::default()),
            (Verdict::Holds, Some(3))
        );
    }

    #[test]
    fn cycle_fails_finiteness_with_replayable_witness() {
        let g = GameSystem::census(
            arena1(),
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(1), StateRef(2)],
                },
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(0), StateRef(2)],
                },
                CensusNode::Leaf(pay(0)),
            ],
            0,
        )
        .unwrap();
        let v = is_finite_game(&g, &Limits::default());
        let Verdict::Fails(Witness::Cycle { prefix, cycle }) = &v else {
            panic!("expected a cycle witness, got {v:?}");
        };
        // replay: walking prefix then cycle must return to the same state
        let mut s = g.root();
        for c in prefix {
            s = g.step(s, *c).unwrap();
        }
        let start = s;
        for c in cycle {
            s = g.step(s, *c).unwrap();
        }
        assert_eq!(s, start);
        assert!(is_finite_history_game(&g, &Limits::default()).fails());
    }

    #[test]
    fn closure_chain_is_finite_when_fully_explored() {
        // a 5-step unit chain presented as a closure
        let arena = ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Enumerated(vec!["go".into()])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap();
        let g = GameSystem::closure(arena, StateRef(5), |s| {
            if s.0 == 0 {
                View::Leaf(pay(0))
            } else {
                View::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branch: BranchView::Enumerated(vec![StateRef(s.0 - 1)]),
                }
            }
        });
        assert_eq!(is_finite_game(&g, &Limits::default()), Verdict::Holds);
        assert_eq!(
            is_finitely_broad(&g, &Limits::default()),
            (Verdict::Holds, Some(1))
        );
        // with a starving budget the answer degrades to Unknown
        let tiny = Limits {
            fuel: 2,
            ..Limits::default()
        };
        assert!(is_finite_game(&g, &tiny).is_unknown());
    }

    #[test]
    fn nat_branching_fails_finiteness_definitely() {
        let arena = ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Naturals],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap();
        let g = GameSystem::closure(arena, StateRef(u64::MAX), |s| {
            if s.0 == u64::MAX {
                View::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branch: BranchView::Naturals(Arc::new(StateRef)),
                }
            } else {
                View::Leaf(pay(0))
            }
        });
        let v = is_finite_game(&g, &Limits::default());
        assert!(matches!(
            v,
            Verdict::Fails(Witness::NaturalsBranching { ref path }) if path.is_empty()
        ));
        let (v, count) = is_finitely_broad(&g, &Limits::default());
        assert!(v.fails());
        assert_eq!(count, None);
    }

    #[test]
    fn finite_implies_finite_history_and_broad() {
        // containment of the notions, on a little DAG with sharing
        let g = GameSystem::census(
            arena1(),
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(1), StateRef(1)],
                },
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(2), StateRef(2)],
                },
                CensusNode::Leaf(pay(0)),
            ],
            0,
        )
        .unwrap();
        let limits = Limits::default();
        assert!(is_finite_game(&g, &limits).holds());
        assert!(is_finite_history_game(&g, &limits).holds());
        let (v, count) = is_finitely_broad(&g, &limits);
        assert!(v.holds());
        // tree unfolding: root node (2 choices) over two copies of a
        // 2-choice node: 2 * (2 * 1 * 1)^2 = 8
        assert_eq!(count, Some(8));
    }

    #[test]
    fn convergence_and_always_convergence() {
        // A 2-state loop profile that always continues, and one that stops.
        let looping = StrategySystem::census(
            arena1(),
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: Choice(1),
                    branches: vec![StateRef(1), StateRef(0)],
                },
                CensusNode::Leaf(pay(3)),
            ],
            0,
        )
        .unwrap();
        let limits = Limits::default();
        assert!(is_convergent(&looping, &limits).fails());
        assert!(is_always_convergent(&looping, &limits).fails());
        assert_eq!(existence_uassign_check(&looping, &limits), Verdict::Holds);

        let stopping = StrategySystem::census(
            arena1(),
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: Choice(0),
                    branches: vec![StateRef(1), StateRef(0)],
                },
                CensusNode::Leaf(pay(3)),
            ],
            0,
        )
        .unwrap();
        assert!(is_convergent(&stopping, &limits).holds());
        assert!(is_always_convergent(&stopping, &limits).holds());
        assert_eq!(existence_uassign_check(&stopping, &limits), Verdict::Holds);
    }

    #[test]
    fn always_holds_vacuously_on_leaves() {
        let s = StrategySystem::census(arena1(), vec![CensusNode::Leaf(pay(0))], 0).unwrap();
        let v = always(
            &s,
            &|_| Verdict::Fails(Witness::Terminates { path: vec![] }),
            &Limits::default(),
        );
        assert_eq!(v, Verdict::Holds);
    }
}
