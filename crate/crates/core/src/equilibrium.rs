//! Subgame perfect equilibria: checking, solving, and a brute-force oracle.
//!
//! A profile is an SPE when it is always convergent and, at every reachable
//! node, the owner's chosen branch yields a payoff at least as good (in the
//! owner's preorder) as every alternative branch's payoff, recursively at
//! every subprofile.
//!
//! The coinductive predicate is decided in two regimes:
//!
//! * finite trees ([`check_spe_finite`], [`backward_induction`],
//!   [`enumerate_spe_bruteforce`]) — always-convergence is automatic, and
//!   the check is a leaf-up sweep;
//! * finitely presented infinite profiles ([`check_spe_regular`]) — the
//!   predicate is a greatest fixpoint, and on a finite state graph (census
//!   or stage family) the greatest fixpoint of the monotone local condition
//!   is exactly "the local condition holds at every reachable state", given
//!   that the utility assignments are fixed by the chosen plays. Stage
//!   systems check the pref condition as affine inequalities over every
//!   reachable stage, so one template check covers all its instances.
//!
//! `Holds` verdicts come with a replayable [`SpeCertificate`].

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::arena::{AgentId, Choice, Payoff};
use crate::finiteness::{is_always_convergent, Verdict, Witness};
use crate::stage::{self, AffinePayoff, StageEdge, StageFamily};
use crate::system::{
    BranchView, CensusNode, Decor, GameSystem, Space, StateRef, StrategySystem, System,
    UassignResult, View,
};
use crate::Limits;

/// Default cap on brute-force profile enumeration.
pub const DEFAULT_BRUTE_BOUND: u128 = 4096;

/// Hard cap on materialized tree nodes and solution sets.
const MAX_TREE_NODES: usize = 1 << 20;

/// How a solver resolves preference ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieRule {
    /// Return every subgame perfect equilibrium.
    AllOptima,
    /// Return the lexicographically first optimal choice at each node.
    FirstOptimal,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpeError {
    #[error("the game does not unfold to a finite tree")]
    NotFiniteTree,
    #[error("this analysis needs a finitely presented system (census or stage family)")]
    NoCensus,
    #[error("no choice dominates all others at node reached by {path:?}")]
    NoMaximalChoice { path: Vec<Choice> },
    #[error("{count} profiles exceed the configured bound {bound}")]
    TooBroad { count: u128, bound: u128 },
    #[error("tree expansion exceeded {0} nodes")]
    TreeTooLarge(usize),
}

/// A payoff recorded in a certificate: concrete, or affine in the stage at
/// which the certified template is entered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CertPayoff {
    Concrete(Payoff),
    Affine(AffinePayoff),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertAlternative {
    pub choice: Choice,
    pub payoff: CertPayoff,
    pub pref_ok: bool,
}

/// The local evidence at one reachable node state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertEntry {
    /// Choice path from the root to the node.
    pub path: Vec<Choice>,
    pub agent: AgentId,
    pub chosen: Choice,
    pub chosen_payoff: CertPayoff,
    pub alternatives: Vec<CertAlternative>,
}

/// Per-node record of chosen and alternative payoffs with their preference
/// comparisons. Replayable: re-running the utility assignment on each
/// recorded subprofile reproduces the recorded payoffs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Default)]
pub struct SpeCertificate {
    pub entries: Vec<CertEntry>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("certificate path {path:?} does not lead to a node")]
    BadPath { path: Vec<Choice> },
    #[error("recorded payoff mismatch at {path:?} branch {choice:?} (stage offset {offset})")]
    PayoffMismatch {
        path: Vec<Choice>,
        choice: Choice,
        offset: u64,
    },
    #[error("recorded preference outcome mismatch at {path:?} branch {choice:?}")]
    PrefMismatch { path: Vec<Choice>, choice: Choice },
}

impl SpeCertificate {
    /// Re-run the utility assignment on every recorded subprofile and
    /// compare with the recorded payoffs and preference outcomes. For stage
    /// systems the affine payoffs are additionally re-checked a few stages
    /// beyond the path's endpoint.
    pub fn replay(&self, s: &StrategySystem, limits: &Limits) -> Result<(), ReplayError> {
        for entry in &self.entries {
            let mut state = s.root();
            for &c in &entry.path {
                state = s.step(state, c).ok_or(ReplayError::BadPath {
                    path: entry.path.clone(),
                })?;
            }
            let offsets: &[u64] = if matches!(s.space(), Space::Stage(_)) {
                &[0, 1, 2]
            } else {
                &[0]
            };
            for &offset in offsets {
                let node = match (s.space(), offset) {
                    (_, 0) => state,
                    (Space::Stage(_), _) => match stage::unpack(state) {
                        stage::StageState::Node { template, stage } => {
                            stage::pack_node(template, stage + offset)
                        }
                        stage::StageState::Leaf { .. } => state,
                    },
                    _ => state,
                };
                let entry_stage = match s.space() {
                    Space::Stage(_) => match stage::unpack(node) {
                        stage::StageState::Node { stage, .. } => stage,
                        stage::StageState::Leaf { stage, .. } => stage,
                    },
                    _ => 0,
                };
                let check = |choice: Choice, recorded: &CertPayoff| -> Result<(), ReplayError> {
                    let target = s.step(node, choice).ok_or(ReplayError::BadPath {
                        path: entry.path.clone(),
                    })?;
                    let got = s.re_root(target).uassign(limits.fuel);
                    let expected = match recorded {
                        CertPayoff::Concrete(p) => p.clone(),
                        CertPayoff::Affine(ap) => ap.at(entry_stage),
                    };
                    match got {
                        UassignResult::Assigned(p) if p == expected => Ok(()),
                        _ => Err(ReplayError::PayoffMismatch {
                            path: entry.path.clone(),
                            choice,
                            offset,
                        }),
                    }
                };
                check(entry.chosen, &entry.chosen_payoff)?;
                for alt in &entry.alternatives {
                    check(alt.choice, &alt.payoff)?;
                    if offset == 0 {
                        let dom = s.arena().utility(entry.agent);
                        let chosen_v = match &entry.chosen_payoff {
                            CertPayoff::Concrete(p) => *p.get(entry.agent),
                            CertPayoff::Affine(ap) => {
                                *ap.at(entry_stage).get(entry.agent)
                            }
                        };
                        let alt_v = match &alt.payoff {
                            CertPayoff::Concrete(p) => *p.get(entry.agent),
                            CertPayoff::Affine(ap) => *ap.at(entry_stage).get(entry.agent),
                        };
                        if dom.pref_holds(&alt_v, &chosen_v) != alt.pref_ok {
                            return Err(ReplayError::PrefMismatch {
                                path: entry.path.clone(),
                                choice: alt.choice,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Verdict plus certificate (present exactly on `Holds`).
#[derive(Clone, Debug, Serialize)]
pub struct SpeOutcome {
    pub verdict: Verdict,
    pub certificate: Option<SpeCertificate>,
}

/// Materialize the finite tree a system unfolds to, as census rows with
/// children at fresh indices. Fails on cycles and ℕ-branching.
fn expand_to_tree<C: Decor>(sys: &System<C>) -> Result<Vec<CensusNode<C>>, SpeError> {
    struct Ctx<'a, C: Decor> {
        sys: &'a System<C>,
        nodes: Vec<CensusNode<C>>,
        on_path: HashSet<u64>,
    }
    fn go<C: Decor>(ctx: &mut Ctx<'_, C>, state: StateRef) -> Result<usize, SpeError> {
        if ctx.nodes.len() >= MAX_TREE_NODES {
            return Err(SpeError::TreeTooLarge(MAX_TREE_NODES));
        }
        match ctx.sys.view(state) {
            View::Leaf(p) => {
                ctx.nodes.push(CensusNode::Leaf(p));
                Ok(ctx.nodes.len() - 1)
            }
            View::Node {
                agent,
                chosen,
                branch,
            } => {
                let targets = match branch {
                    BranchView::Enumerated(ts) => ts,
                    BranchView::Naturals(_) => return Err(SpeError::NotFiniteTree),
                };
                if !ctx.on_path.insert(state.0) {
                    return Err(SpeError::NotFiniteTree);
                }
                let idx = ctx.nodes.len();
                ctx.nodes.push(CensusNode::Node {
                    agent,
                    chosen: chosen.clone(),
                    branches: Vec::new(),
                });
                let mut children = Vec::with_capacity(targets.len());
                for t in targets {
                    children.push(StateRef(go(ctx, t)? as u64));
                }
                if let CensusNode::Node { branches, .. } = &mut ctx.nodes[idx] {
                    *branches = children;
                }
                ctx.on_path.remove(&state.0);
                Ok(idx)
            }
        }
    }
    let mut ctx = Ctx {
        sys,
        nodes: Vec::new(),
        on_path: HashSet::new(),
    };
    let root = go(&mut ctx, sys.root())?;
    debug_assert_eq!(root, 0);
    Ok(ctx.nodes)
}

/// Payoff of the chosen play from every tree node, leaf-up.
fn tree_payoffs(nodes: &[CensusNode<Choice>]) -> Vec<Payoff> {
    let mut out: Vec<Option<Payoff>> = vec![None; nodes.len()];
    // children have larger indices than their parent, so sweep backwards
    for i in (0..nodes.len()).rev() {
        out[i] = Some(match &nodes[i] {
            CensusNode::Leaf(p) => p.clone(),
            CensusNode::Node {
                chosen, branches, ..
            } => out[branches[chosen.0 as usize].0 as usize]
                .clone()
                .expect("child payoff computed"),
        });
    }
    out.into_iter().map(|p| p.unwrap()).collect()
}

fn tree_paths<C: Decor>(nodes: &[CensusNode<C>]) -> Vec<Vec<Choice>> {
    let mut paths: Vec<Vec<Choice>> = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        if let CensusNode::Node { branches, .. } = &nodes[i] {
            for (ci, b) in branches.iter().enumerate() {
                let mut p = paths[i].clone();
                p.push(Choice(ci as u64));
                paths[b.0 as usize] = p;
            }
        }
    }
    paths
}

/// SPE check for profiles whose game unfolds to a finite tree.
///
/// On a finite tree every play terminates, so always-convergence holds by
/// construction and the check reduces to the preference condition at every
/// node.
pub fn check_spe_finite(s: &StrategySystem, _limits: &Limits) -> Result<SpeOutcome, SpeError> {
    let nodes = expand_to_tree(s)?;
    let payoffs = tree_payoffs(&nodes);
    let paths = tree_paths(&nodes);
    let mut cert = SpeCertificate::default();
    for (i, node) in nodes.iter().enumerate() {
        let CensusNode::Node {
            agent,
            chosen,
            branches,
        } = node
        else {
            continue;
        };
        let dom = s.arena().utility(*agent);
        let chosen_pay = &payoffs[branches[chosen.0 as usize].0 as usize];
        let mut alternatives = Vec::new();
        for (ci, b) in branches.iter().enumerate() {
            let c = Choice(ci as u64);
            if c == *chosen {
                continue;
            }
            let alt_pay = &payoffs[b.0 as usize];
            let ok = dom.pref_holds(alt_pay.get(*agent), chosen_pay.get(*agent));
            if !ok {
                return Ok(SpeOutcome {
                    verdict: Verdict::Fails(Witness::PrefViolation {
                        path: paths[i].clone(),
                        chosen: *chosen,
                        alternative: c,
                    }),
                    certificate: None,
                });
            }
            alternatives.push(CertAlternative {
                choice: c,
                payoff: CertPayoff::Concrete(alt_pay.clone()),
                pref_ok: ok,
            });
        }
        cert.entries.push(CertEntry {
            path: paths[i].clone(),
            agent: *agent,
            chosen: *chosen,
            chosen_payoff: CertPayoff::Concrete(chosen_pay.clone()),
            alternatives,
        });
    }
    Ok(SpeOutcome {
        verdict: Verdict::Holds,
        certificate: Some(cert),
    })
}

/// SPE check on finitely presented, possibly infinite profiles.
pub fn check_spe_regular(s: &StrategySystem, limits: &Limits) -> Result<SpeOutcome, SpeError> {
    match s.space() {
        Space::Census(_) => check_spe_census(s, limits),
        Space::Stage(fam) => check_spe_stage(s, fam.clone(), limits),
        Space::Closure(_) => Err(SpeError::NoCensus),
    }
}

fn check_spe_census(s: &StrategySystem, limits: &Limits) -> Result<SpeOutcome, SpeError> {
    match is_always_convergent(s, limits) {
        Verdict::Holds => {}
        v => {
            return Ok(SpeOutcome {
                verdict: v,
                certificate: None,
            })
        }
    }
    let reachable = s.reachable().expect("census system");
    // payoffs of the chosen plays; no chosen cycle exists after ⇓
    let mut payoff: HashMap<u64, Payoff> = HashMap::new();
    for &st in reachable.iter().rev() {
        let mut chain = vec![];
        let mut cur = st;
        loop {
            if payoff.contains_key(&cur.0) {
                break;
            }
            match s.view(cur) {
                View::Leaf(p) => {
                    payoff.insert(cur.0, p);
                    break;
                }
                View::Node { chosen, branch, .. } => {
                    chain.push(cur);
                    cur = branch.target(chosen).expect("chosen in space");
                }
            }
        }
        let p = payoff[&cur.0].clone();
        for st in chain {
            payoff.insert(st.0, p.clone());
        }
    }
    // shortest paths for certificate entries
    let mut path_of: HashMap<u64, Vec<Choice>> = HashMap::new();
    let mut queue = VecDeque::new();
    path_of.insert(s.root().0, Vec::new());
    queue.push_back(s.root());
    let mut cert = SpeCertificate::default();
    while let Some(st) = queue.pop_front() {
        let View::Node {
            agent,
            chosen,
            branch,
        } = s.view(st)
        else {
            continue;
        };
        let targets = match branch {
            BranchView::Enumerated(ts) => ts,
            BranchView::Naturals(_) => unreachable!("census nodes are enumerated"),
        };
        let dom = s.arena().utility(agent);
        let here = path_of[&st.0].clone();
        let chosen_pay = payoff[&targets[chosen.0 as usize].0].clone();
        let mut alternatives = Vec::new();
        for (ci, t) in targets.iter().enumerate() {
            let c = Choice(ci as u64);
            if let std::collections::hash_map::Entry::Vacant(e) = path_of.entry(t.0) {
                let mut p = here.clone();
                p.push(c);
                e.insert(p);
                queue.push_back(*t);
            }
            if c == chosen {
                continue;
            }
            let alt_pay = payoff[&t.0].clone();
            let ok = dom.pref_holds(alt_pay.get(agent), chosen_pay.get(agent));
            if !ok {
                return Ok(SpeOutcome {
                    verdict: Verdict::Fails(Witness::PrefViolation {
                        path: here,
                        chosen,
                        alternative: c,
                    }),
                    certificate: None,
                });
            }
            alternatives.push(CertAlternative {
                choice: c,
                payoff: CertPayoff::Concrete(alt_pay),
                pref_ok: ok,
            });
        }
        cert.entries.push(CertEntry {
            path: here,
            agent,
            chosen,
            chosen_payoff: CertPayoff::Concrete(chosen_pay),
            alternatives,
        });
    }
    Ok(SpeOutcome {
        verdict: Verdict::Holds,
        certificate: Some(cert),
    })
}

/// Smallest reachable stage of `template` lying in the violation set, with
/// the choice path reaching that instance. Reachable (template, stage)
/// pairs are enumerated breadth-first up to a cap that pumping arguments
/// make sufficient: any reachable stage beyond the cap comes from iterating
/// a template cycle, which also produces an instance within one cycle's
/// total gain of the threshold.
fn violating_stage<C: Clone + PartialEq + std::fmt::Debug>(
    fam: &StageFamily<C>,
    root_template: usize,
    root_stage: u64,
    template: usize,
    violation: &ViolationSet,
) -> Option<(u64, Vec<Choice>)> {
    let delta_sum: u64 = fam
        .templates
        .iter()
        .flat_map(|t| t.edges.iter())
        .map(|e| match e {
            StageEdge::Next { delta, .. } => *delta,
            StageEdge::Leaf(_) => 0,
        })
        .sum();
    let cap = match violation {
        ViolationSet::All => root_stage + delta_sum + 1,
        ViolationSet::AllExcept(n0) => (root_stage + delta_sum + 1).max(n0 + delta_sum + 1),
        ViolationSet::SuffixFrom(k) => k + delta_sum + 1,
        ViolationSet::PrefixBelow(k) => k.saturating_sub(1),
    };
    let hit = |n: u64| match violation {
        ViolationSet::All => true,
        ViolationSet::AllExcept(n0) => n != *n0,
        ViolationSet::SuffixFrom(k) => n >= *k,
        ViolationSet::PrefixBelow(k) => n < *k,
    };
    let mut best: Option<(u64, Vec<Choice>)> = None;
    let mut paths: HashMap<(usize, u64), Vec<Choice>> = HashMap::new();
    let mut queue = VecDeque::new();
    paths.insert((root_template, root_stage), Vec::new());
    queue.push_back((root_template, root_stage));
    while let Some((t, n)) = queue.pop_front() {
        let here = paths[&(t, n)].clone();
        if t == template && hit(n) && best.as_ref().is_none_or(|(b, _)| n < *b) {
            best = Some((n, here.clone()));
        }
        for (ci, e) in fam.templates[t].edges.iter().enumerate() {
            if let StageEdge::Next { template: t2, delta } = e {
                let n2 = n + delta;
                if n2 <= cap && !paths.contains_key(&(*t2, n2)) {
                    let mut p = here.clone();
                    p.push(Choice(ci as u64));
                    paths.insert((*t2, n2), p);
                    queue.push_back((*t2, n2));
                }
            }
        }
    }
    best
}

/// Stage sets where a preference comparison fails.
enum ViolationSet {
    All,
    /// Everywhere except one crossing stage where the payoffs coincide.
    AllExcept(u64),
    SuffixFrom(u64),
    PrefixBelow(u64),
}

/// Stages at which `alt <= chosen` fails, as a set description, or `None`
/// when it holds everywhere.
fn int_leq_violations(alt: &stage::AffineUtility, chosen: &stage::AffineUtility) -> Option<ViolationSet> {
    // diff(n) = chosen(n) - alt(n); violation wherever diff(n) < 0
    let s = chosen.slope - alt.slope;
    let b = chosen.intercept - alt.intercept;
    match s.cmp(&0) {
        std::cmp::Ordering::Equal => {
            if b < 0 {
                Some(ViolationSet::All)
            } else {
                None
            }
        }
        std::cmp::Ordering::Greater => {
            // diff < 0 for n < ceil(-b / s)
            if b >= 0 {
                None
            } else {
                let k = (-b + s - 1) / s; // ceil(-b / s)
                Some(ViolationSet::PrefixBelow(k as u64))
            }
        }
        std::cmp::Ordering::Less => {
            // diff < 0 for n > floor(b / -s), i.e. n >= floor(b / -s) + 1
            let k = if b < 0 { 0 } else { b / (-s) + 1 };
            Some(ViolationSet::SuffixFrom(k as u64))
        }
    }
}

fn check_spe_stage(
    s: &StrategySystem,
    fam: std::sync::Arc<StageFamily<Choice>>,
    limits: &Limits,
) -> Result<SpeOutcome, SpeError> {
    match is_always_convergent(s, limits) {
        Verdict::Holds => {}
        v => {
            return Ok(SpeOutcome {
                verdict: v,
                certificate: None,
            })
        }
    }
    let (root_template, root_stage) = match stage::unpack(s.root()) {
        stage::StageState::Node { template, stage } => (template, stage),
        stage::StageState::Leaf { .. } => {
            return Ok(SpeOutcome {
                verdict: Verdict::Holds,
                certificate: Some(SpeCertificate::default()),
            })
        }
    };
    // shortest template paths for certificate entries
    let mut path_of: HashMap<usize, (Vec<Choice>, u64)> = HashMap::new();
    let mut queue = VecDeque::new();
    path_of.insert(root_template, (Vec::new(), root_stage));
    queue.push_back(root_template);
    let mut order = Vec::new();
    while let Some(t) = queue.pop_front() {
        order.push(t);
        let (path, stage_here) = path_of[&t].clone();
        for (ci, e) in fam.templates[t].edges.iter().enumerate() {
            if let StageEdge::Next { template, delta } = e {
                if !path_of.contains_key(template) {
                    let mut p = path.clone();
                    p.push(Choice(ci as u64));
                    path_of.insert(*template, (p, stage_here + delta));
                    queue.push_back(*template);
                }
            }
        }
    }

    // affine payoff of each template's chosen play (⇓ holds, so it exists)
    let chosen_pay: HashMap<usize, AffinePayoff> = order
        .iter()
        .map(|&t| {
            let p = fam
                .chosen_payoff(t)
                .expect("always-convergent profile has chosen payoffs");
            (t, p)
        })
        .collect();

    let mins = fam.min_stages(root_template, root_stage);
    let mut cert = SpeCertificate::default();
    for &t in &order {
        let template = &fam.templates[t];
        let dom = s.arena().utility(template.agent);
        let n_min = mins[t].expect("reachable template");
        let (path, _) = path_of[&t].clone();
        let chosen = template.chosen;
        let edge_payoff = |ci: usize| -> AffinePayoff {
            match &template.edges[ci] {
                StageEdge::Leaf(p) => p.clone(),
                StageEdge::Next { template: t2, delta } => chosen_pay[t2].shifted(*delta),
            }
        };
        let chosen_branch_pay = edge_payoff(chosen.0 as usize);
        let mut alternatives = Vec::new();
        for ci in 0..template.edges.len() {
            let c = Choice(ci as u64);
            if c == chosen {
                continue;
            }
            let alt = edge_payoff(ci);
            // the pref condition must hold at every reachable stage of t
            let violation = match &dom.pref {
                crate::arena::Pref::Indifference => None,
                crate::arena::Pref::IntLeq => int_leq_violations(
                    alt.get(template.agent),
                    chosen_branch_pay.get(template.agent),
                ),
                crate::arena::Pref::EqualityOnly => {
                    let a = alt.get(template.agent);
                    let ch = chosen_branch_pay.get(template.agent);
                    if a == ch {
                        None
                    } else if a.slope == ch.slope {
                        Some(ViolationSet::All)
                    } else {
                        // distinct affine functions agree at one crossing
                        // stage at most; everywhere else is a violation
                        let num = a.intercept - ch.intercept;
                        let den = ch.slope - a.slope;
                        if num % den == 0 && num / den >= 0 {
                            Some(ViolationSet::AllExcept((num / den) as u64))
                        } else {
                            Some(ViolationSet::All)
                        }
                    }
                }
                crate::arena::Pref::Explicit(_) => {
                    unreachable!("stage arenas are integer-valued")
                }
            };
            if let Some(vset) = violation {
                if let Some((_, bad_path)) =
                    violating_stage(&fam, root_template, root_stage, t, &vset)
                {
                    return Ok(SpeOutcome {
                        verdict: Verdict::Fails(Witness::PrefViolation {
                            path: bad_path,
                            chosen,
                            alternative: c,
                        }),
                        certificate: None,
                    });
                }
            }
            let ok_at_min = {
                let a = alt.at(n_min);
                let ch = chosen_branch_pay.at(n_min);
                dom.pref_holds(a.get(template.agent), ch.get(template.agent))
            };
            alternatives.push(CertAlternative {
                choice: c,
                payoff: CertPayoff::Affine(alt),
                pref_ok: ok_at_min,
            });
        }
        cert.entries.push(CertEntry {
            path,
            agent: template.agent,
            chosen,
            chosen_payoff: CertPayoff::Affine(chosen_branch_pay),
            alternatives,
        });
    }
    Ok(SpeOutcome {
        verdict: Verdict::Holds,
        certificate: Some(cert),
    })
}

/// One backward-induction solution of a tree: the choices at internal nodes
/// plus the induced payoff.
#[derive(Clone, Debug)]
struct Solution {
    choices: Vec<(usize, Choice)>,
    payoff: Payoff,
}

fn assemble_profile(
    game_nodes: &[CensusNode<()>],
    arena: &std::sync::Arc<crate::arena::ArenaSpec>,
    sol: &Solution,
) -> StrategySystem {
    let chosen: HashMap<usize, Choice> = sol.choices.iter().copied().collect();
    let nodes: Vec<CensusNode<Choice>> = game_nodes
        .iter()
        .enumerate()
        .map(|(i, n)| match n {
            CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
            CensusNode::Node {
                agent, branches, ..
            } => CensusNode::Node {
                agent: *agent,
                chosen: chosen[&i],
                branches: branches.clone(),
            },
        })
        .collect();
    StrategySystem::census(arena.clone(), nodes, 0).expect("tree profile is valid")
}

fn optimal_choices(
    arena: &crate::arena::ArenaSpec,
    agent: AgentId,
    branch_payoffs: &[&Payoff],
) -> Vec<Choice> {
    let dom = arena.utility(agent);
    (0..branch_payoffs.len())
        .filter(|&ci| {
            branch_payoffs.iter().all(|alt| {
                dom.pref_holds(alt.get(agent), branch_payoffs[ci].get(agent))
            })
        })
        .map(|ci| Choice(ci as u64))
        .collect()
}

/// Solve a finite game leaf-up.
///
/// Under `AllOptima` the result is exactly the set of profiles where every
/// node's choice is preference-maximal among the branch payoffs induced by
/// the profile's own subprofiles — the SPE set. A node where no choice
/// dominates all others contributes nothing, so with partial preorders the
/// set can be empty; under `FirstOptimal` that situation is the
/// `NoMaximalChoice` error.
pub fn backward_induction(
    g: &GameSystem,
    tie: TieRule,
    _limits: &Limits,
) -> Result<Vec<StrategySystem>, SpeError> {
    let nodes = expand_to_tree(g)?;
    let paths = tree_paths(&nodes);
    match tie {
        TieRule::FirstOptimal => {
            let sol = solve_first(&nodes, g, 0, &paths)?;
            Ok(vec![assemble_profile(&nodes, g.arena(), &sol)])
        }
        TieRule::AllOptima => {
            let sols = solve_all(&nodes, g, 0)?;
            Ok(sols
                .iter()
                .map(|sol| assemble_profile(&nodes, g.arena(), sol))
                .collect())
        }
    }
}

fn solve_first(
    nodes: &[CensusNode<()>],
    g: &GameSystem,
    idx: usize,
    paths: &[Vec<Choice>],
) -> Result<Solution, SpeError> {
    match &nodes[idx] {
        CensusNode::Leaf(p) => Ok(Solution {
            choices: Vec::new(),
            payoff: p.clone(),
        }),
        CensusNode::Node {
            agent, branches, ..
        } => {
            let subs: Vec<Solution> = branches
                .iter()
                .map(|b| solve_first(nodes, g, b.0 as usize, paths))
                .collect::<Result<_, _>>()?;
            let pays: Vec<&Payoff> = subs.iter().map(|s| &s.payoff).collect();
            let optima = optimal_choices(g.arena(), *agent, &pays);
            let Some(&c) = optima.first() else {
                return Err(SpeError::NoMaximalChoice {
                    path: paths[idx].clone(),
                });
            };
            let mut choices: Vec<(usize, Choice)> = vec![(idx, c)];
            for sub in &subs {
                choices.extend_from_slice(&sub.choices);
            }
            Ok(Solution {
                choices,
                payoff: subs[c.0 as usize].payoff.clone(),
            })
        }
    }
}

fn solve_all(
    nodes: &[CensusNode<()>],
    g: &GameSystem,
    idx: usize,
) -> Result<Vec<Solution>, SpeError> {
    match &nodes[idx] {
        CensusNode::Leaf(p) => Ok(vec![Solution {
            choices: Vec::new(),
            payoff: p.clone(),
        }]),
        CensusNode::Node {
            agent, branches, ..
        } => {
            let subs: Vec<Vec<Solution>> = branches
                .iter()
                .map(|b| solve_all(nodes, g, b.0 as usize))
                .collect::<Result<_, _>>()?;
            // cartesian product of branch solution sets
            let mut combos: Vec<Vec<&Solution>> = vec![Vec::new()];
            for branch_sols in &subs {
                let mut next = Vec::new();
                for partial in &combos {
                    for sol in branch_sols {
                        let mut p = partial.clone();
                        p.push(sol);
                        next.push(p);
                        if next.len() > MAX_TREE_NODES {
                            return Err(SpeError::TooBroad {
                                count: next.len() as u128,
                                bound: MAX_TREE_NODES as u128,
                            });
                        }
                    }
                }
                combos = next;
            }
            let mut out = Vec::new();
            for combo in combos {
                let pays: Vec<&Payoff> = combo.iter().map(|s| &s.payoff).collect();
                for c in optimal_choices(g.arena(), *agent, &pays) {
                    let mut choices: Vec<(usize, Choice)> = vec![(idx, c)];
                    for sub in &combo {
                        choices.extend_from_slice(&sub.choices);
                    }
                    out.push(Solution {
                        choices,
                        payoff: combo[c.0 as usize].payoff.clone(),
                    });
                }
            }
            Ok(out)
        }
    }
}

/// Enumerate every profile of a finite tree and keep the subgame perfect
/// equilibria, by the definition. The oracle the solver is tested against.
pub fn enumerate_spe_bruteforce(
    g: &GameSystem,
    bound: u128,
    limits: &Limits,
) -> Result<Vec<StrategySystem>, SpeError> {
    let (broad, count) = crate::finiteness::is_finitely_broad(g, limits);
    if !broad.holds() {
        return Err(SpeError::NotFiniteTree);
    }
    let count = count.unwrap_or(u128::MAX);
    if count > bound {
        return Err(SpeError::TooBroad { count, bound });
    }
    let nodes = expand_to_tree(g)?;
    let internal: Vec<(usize, usize)> = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n {
            CensusNode::Node { branches, .. } => Some((i, branches.len())),
            CensusNode::Leaf(_) => None,
        })
        .collect();
    let mut odometer: Vec<usize> = vec![0; internal.len()];
    let mut out = Vec::new();
    loop {
        let sol = Solution {
            choices: internal
                .iter()
                .zip(&odometer)
                .map(|(&(i, _), &c)| (i, Choice(c as u64)))
                .collect(),
            payoff: Payoff(Vec::new()), // unused by assembly
        };
        let profile = assemble_profile(&nodes, g.arena(), &sol);
        if check_spe_finite(&profile, limits)?.verdict.holds() {
            out.push(profile);
        }
        // advance the odometer
        let mut k = 0;
        loop {
            if k == odometer.len() {
                return Ok(out);
            }
            odometer[k] += 1;
            if odometer[k] < internal[k].1 {
                break;
            }
            odometer[k] = 0;
            k += 1;
        }
    }
}

/// Canonical encoding of a tree profile for set comparison: the chosen
/// choice at every internal node in index order.
pub fn profile_signature(s: &StrategySystem) -> Vec<(u64, Choice)> {
    let mut sig = Vec::new();
    if let Some(states) = s.reachable() {
        for st in states {
            if let View::Node { chosen, .. } = s.view(st) {
                sig.push((st.0, chosen));
            }
        }
    }
    sig.sort();
    sig
}
