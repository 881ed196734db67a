//! Escalation: divergent profiles that are locally rational at every step.
//!
//! A profile escalates when its chosen play never reaches a leaf
//! (divergence) while at every node along the play the taken choice heads
//! some subgame perfect equilibrium of the residual game. A profile is good
//! when some profile over the same game (bisimilar, same head choice) is an
//! SPE; witnesses are searched in
//! the finite class of memoryless profiles — one choice per game state, or
//! per template for stage systems — optionally enlarged by a bounded memory
//! of recent choices.
//!
//! For stage systems one witness per play-path template certifies every
//! concrete instance of that template on the path: its equilibrium
//! certificate quantifies over all stages reachable from the instance where
//! the witness was rooted, and later instances only see later stages.

use std::collections::VecDeque;

use thiserror::Error;

use crate::arena::{AgentId, Choice};
use crate::equilibrium::{check_spe_regular, SpeCertificate, SpeError};
use crate::finiteness::{Verdict, Witness};
use crate::stage::{StageFamily, StageState, StageTemplate};
use crate::system::{
    CensusNode, Lasso, PathEnd, Space, StateRef, StrategySystem, System, View,
};
use crate::Limits;

/// Cap on the number of candidate profiles a witness search may enumerate.
pub const SEARCH_BOUND: u128 = 1 << 16;

/// Cap on product-construction states for bounded-memory searches.
const MEMORY_PRODUCT_BOUND: usize = 4096;

/// Largest supported memory window.
pub const MAX_MEMORY: u32 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EscalationError {
    #[error("escalation analysis needs a finitely presented profile (census or stage family)")]
    NoCensus,
    #[error("witness class has {count} candidates, over the search bound {bound}")]
    SearchTooLarge { count: u128, bound: u128 },
    #[error("bounded-memory witnesses are only supported on census systems")]
    MemoryOnStage,
    #[error("memory windows are capped at {MAX_MEMORY} choices")]
    MemoryTooDeep,
    #[error(transparent)]
    Spe(#[from] SpeError),
}

/// The finite class a Good witness is searched in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessClass {
    /// One choice per reachable game state (per template on stage systems).
    Memoryless,
    /// Choices may additionally depend on the last `m` choices taken
    /// (`m` at most [`MAX_MEMORY`]).
    BoundedMemory(u32),
}

/// An SPE witness produced by a Good search.
#[derive(Clone, Debug)]
pub struct GoodWitness {
    /// The witnessing profile: same game as the checked residual (up to the
    /// memory unrolling), same head choice.
    pub profile: StrategySystem,
    pub certificate: SpeCertificate,
}

/// Good evidence for one node on the divergent play.
#[derive(Clone, Debug)]
pub struct PathNodeWitness {
    /// Choice path from the profile's root to the node.
    pub path: Vec<Choice>,
    pub state: StateRef,
    pub agent: AgentId,
    /// The chosen (head) choice the witness must agree on.
    pub head: Choice,
    pub witness: GoodWitness,
}

/// The full evidence for an escalation.
#[derive(Clone, Debug)]
pub struct EscalationReport {
    pub profile: String,
    pub lasso: Lasso,
    pub witnesses: Vec<PathNodeWitness>,
}

#[derive(Clone, Debug)]
pub enum EscalationOutcome {
    Escalates(EscalationReport),
    NoEscalation { reason: String },
    Unknown { reason: String },
}

/// Fuel that provably suffices for chosen-path analysis on finitely
/// presented systems.
fn certain_fuel(s: &StrategySystem, limits: &Limits) -> u64 {
    let base = match s.space() {
        Space::Census(nodes) => nodes.len() as u64 + 2,
        Space::Stage(fam) => fam.templates.len() as u64 + 2,
        Space::Closure(_) => 0,
    };
    base.max(limits.fuel)
}

/// Does the chosen play never reach a leaf?
///
/// Census and stage systems answer with certainty (lasso detection is the
/// negation of convergence there); closure systems answer `Unknown` unless
/// a lasso happens to close on stable state keys.
pub fn is_divergent(s: &StrategySystem, limits: &Limits) -> Verdict {
    let path = s.chosen_path(certain_fuel(s, limits));
    let v = match path.end {
        PathEnd::Leaf(_) => Verdict::Fails(Witness::Terminates {
            path: path.steps.iter().map(|st| st.chosen).collect(),
        }),
        PathEnd::Lasso { cycle_start } => {
            let _ = cycle_start;
            Verdict::Holds
        }
        PathEnd::Exhausted => Verdict::Unknown {
            fuel_spent: limits.fuel,
        },
    };
    if let Verdict::Unknown { .. } = v {
        if let Some(fact) = s.fact(crate::system::AnalyticProp::Divergent) {
            if fact.holds {
                return Verdict::Holds;
            }
        }
    }
    v
}

/// Is some memoryless (or bounded-memory) profile over this profile's game,
/// with the same head choice, a subgame perfect equilibrium?
pub fn is_good(
    s: &StrategySystem,
    class: WitnessClass,
    limits: &Limits,
) -> Result<(Verdict, Option<GoodWitness>), EscalationError> {
    match s.space() {
        Space::Census(_) => {
            let game = match class {
                WitnessClass::Memoryless => s.game(),
                WitnessClass::BoundedMemory(m) if m > MAX_MEMORY => {
                    return Err(EscalationError::MemoryTooDeep)
                }
                WitnessClass::BoundedMemory(m) => memory_unrolled_game(&s.game(), m)?,
            };
            let head = s.chosen_at(s.root());
            search_census_witness(&game, head, limits)
        }
        Space::Stage(fam) => match class {
            WitnessClass::Memoryless => search_stage_witness(s, fam.clone(), limits),
            WitnessClass::BoundedMemory(_) => Err(EscalationError::MemoryOnStage),
        },
        Space::Closure(_) => Err(EscalationError::NoCensus),
    }
}

/// Unroll a census game against windows of the last `m` choices. The result
/// is bisimilar to the input (memory does not change behavior, only
/// identity), so memoryless witnesses over it are bounded-memory witnesses
/// over the original.
fn memory_unrolled_game(
    g: &System<()>,
    m: u32,
) -> Result<System<()>, EscalationError> {
    let mut index: std::collections::HashMap<(u64, Vec<Choice>), usize> =
        std::collections::HashMap::new();
    let mut rows: Vec<(StateRef, Vec<Choice>)> = Vec::new();
    let mut queue = VecDeque::new();
    let root_key = (g.root().0, Vec::new());
    index.insert(root_key.clone(), 0);
    rows.push((g.root(), Vec::new()));
    queue.push_back(0usize);
    let mut nodes: Vec<Option<CensusNode<()>>> = vec![None];
    while let Some(i) = queue.pop_front() {
        let (state, window) = rows[i].clone();
        match g.view(state) {
            View::Leaf(p) => nodes[i] = Some(CensusNode::Leaf(p)),
            View::Node { agent, branch, .. } => {
                let targets = match branch {
                    crate::system::BranchView::Enumerated(ts) => ts,
                    crate::system::BranchView::Naturals(_) => {
                        return Err(EscalationError::NoCensus)
                    }
                };
                let mut branches = Vec::with_capacity(targets.len());
                for (ci, t) in targets.iter().enumerate() {
                    let mut w = window.clone();
                    w.push(Choice(ci as u64));
                    if w.len() > m as usize {
                        w.remove(0);
                    }
                    let key = (t.0, w.clone());
                    let idx = *index.entry(key).or_insert_with(|| {
                        rows.push((*t, w));
                        nodes.push(None);
                        queue.push_back(rows.len() - 1);
                        rows.len() - 1
                    });
                    branches.push(StateRef(idx as u64));
                }
                nodes[i] = Some(CensusNode::Node {
                    agent,
                    chosen: (),
                    branches,
                });
                if rows.len() > MEMORY_PRODUCT_BOUND {
                    return Err(EscalationError::SearchTooLarge {
                        count: rows.len() as u128,
                        bound: MEMORY_PRODUCT_BOUND as u128,
                    });
                }
            }
        }
    }
    let nodes: Vec<CensusNode<()>> = nodes.into_iter().map(|n| n.unwrap()).collect();
    Ok(System::census(g.arena().clone(), nodes, 0).expect("unrolling is valid"))
}

/// Enumerate choice assignments over the reachable node states of a census
/// game, respecting the head constraint, and return the first SPE found
/// (assignments are tried in lexicographic order, so the result is
/// deterministic).
fn search_census_witness(
    game: &System<()>,
    head: Option<Choice>,
    limits: &Limits,
) -> Result<(Verdict, Option<GoodWitness>), EscalationError> {
    let reachable = game.reachable().expect("census system");
    let node_states: Vec<(StateRef, usize)> = reachable
        .iter()
        .filter_map(|&st| match game.view(st) {
            View::Node { branch, .. } => match branch {
                crate::system::BranchView::Enumerated(ts) => Some((st, ts.len())),
                crate::system::BranchView::Naturals(_) => None,
            },
            View::Leaf(_) => None,
        })
        .collect();
    if node_states.is_empty() {
        // a leaf residual: the leaf itself is an SPE witness
        let profile = census_profile_with(game, &Default::default());
        let out = check_spe_regular(&profile, limits)?;
        return Ok((
            Verdict::Holds,
            Some(GoodWitness {
                certificate: out.certificate.unwrap_or_default(),
                profile,
            }),
        ));
    }
    let head_pos = node_states
        .iter()
        .position(|(st, _)| *st == game.root())
        .filter(|_| head.is_some());
    let mut count: u128 = 1;
    for (i, (_, arity)) in node_states.iter().enumerate() {
        if Some(i) == head_pos {
            continue;
        }
        count = count.saturating_mul(*arity as u128);
        if count > SEARCH_BOUND {
            return Err(EscalationError::SearchTooLarge {
                count,
                bound: SEARCH_BOUND,
            });
        }
    }
    let mut assignment: Vec<Choice> = node_states
        .iter()
        .enumerate()
        .map(|(i, _)| {
            if Some(i) == head_pos {
                head.unwrap()
            } else {
                Choice(0)
            }
        })
        .collect();
    let mut tried: u128 = 0;
    loop {
        tried += 1;
        let by_state: std::collections::HashMap<u64, Choice> = node_states
            .iter()
            .zip(&assignment)
            .map(|((st, _), c)| (st.0, *c))
            .collect();
        let profile = census_profile_with(game, &by_state);
        let out = check_spe_regular(&profile, limits)?;
        if out.verdict.holds() {
            return Ok((
                Verdict::Holds,
                Some(GoodWitness {
                    certificate: out.certificate.unwrap_or_default(),
                    profile,
                }),
            ));
        }
        // advance, skipping the pinned head position
        let mut k = 0;
        loop {
            if k == assignment.len() {
                return Ok((
                    Verdict::Fails(Witness::SearchExhausted { candidates: tried }),
                    None,
                ));
            }
            if Some(k) == head_pos {
                k += 1;
                continue;
            }
            assignment[k] = Choice(assignment[k].0 + 1);
            if (assignment[k].0 as usize) < node_states[k].1 {
                break;
            }
            assignment[k] = Choice(0);
            k += 1;
        }
    }
}

/// Build a census profile over a census game from a per-state choice map.
/// Node rows not reachable from the root get an arbitrary first choice;
/// they do not affect any rooted analysis.
fn census_profile_with(
    game: &System<()>,
    by_state: &std::collections::HashMap<u64, Choice>,
) -> StrategySystem {
    let Space::Census(rows) = game.space() else {
        unreachable!("census game expected")
    };
    let nodes: Vec<CensusNode<Choice>> = rows
        .iter()
        .enumerate()
        .map(|(i, n)| match n {
            CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
            CensusNode::Node {
                agent, branches, ..
            } => CensusNode::Node {
                agent: *agent,
                chosen: by_state.get(&(i as u64)).copied().unwrap_or(Choice(0)),
                branches: branches.clone(),
            },
        })
        .collect();
    let s = StrategySystem::census(game.arena().clone(), nodes, 0).expect("valid profile");
    s.re_root(game.root())
}

/// Memoryless-on-templates witness search for stage profiles.
fn search_stage_witness(
    s: &StrategySystem,
    fam: std::sync::Arc<StageFamily<Choice>>,
    limits: &Limits,
) -> Result<(Verdict, Option<GoodWitness>), EscalationError> {
    let (root_template, root_stage) = match crate::stage::unpack(s.root()) {
        StageState::Node { template, stage } => (template, stage),
        StageState::Leaf { .. } => {
            let out = check_spe_regular(s, limits)?;
            return Ok((
                Verdict::Holds,
                Some(GoodWitness {
                    certificate: out.certificate.unwrap_or_default(),
                    profile: s.clone(),
                }),
            ));
        }
    };
    let head = fam.templates[root_template].chosen;
    let game = fam.erase();
    let reachable = game.reachable_templates(root_template);
    let arities: Vec<usize> = reachable
        .iter()
        .map(|&t| game.templates[t].edges.len())
        .collect();
    let head_pos = reachable
        .iter()
        .position(|&t| t == root_template)
        .expect("root template reachable");
    let mut count: u128 = 1;
    for (i, a) in arities.iter().enumerate() {
        if i == head_pos {
            continue;
        }
        count = count.saturating_mul(*a as u128);
        if count > SEARCH_BOUND {
            return Err(EscalationError::SearchTooLarge {
                count,
                bound: SEARCH_BOUND,
            });
        }
    }
    let mut assignment: Vec<Choice> = (0..reachable.len())
        .map(|i| if i == head_pos { head } else { Choice(0) })
        .collect();
    let mut tried: u128 = 0;
    loop {
        tried += 1;
        let mut templates: Vec<StageTemplate<Choice>> = fam.templates.clone();
        for (&t, &c) in reachable.iter().zip(&assignment) {
            templates[t].chosen = c;
        }
        let candidate = StrategySystem::stage_family(
            StageFamily {
                arena: fam.arena.clone(),
                templates,
            },
            root_template,
            root_stage,
        )
        .expect("valid stage profile");
        let out = check_spe_regular(&candidate, limits)?;
        if out.verdict.holds() {
            return Ok((
                Verdict::Holds,
                Some(GoodWitness {
                    certificate: out.certificate.unwrap_or_default(),
                    profile: candidate,
                }),
            ));
        }
        let mut k = 0;
        loop {
            if k == assignment.len() {
                return Ok((
                    Verdict::Fails(Witness::SearchExhausted { candidates: tried }),
                    None,
                ));
            }
            if k == head_pos {
                k += 1;
                continue;
            }
            assignment[k] = Choice(assignment[k].0 + 1);
            if (assignment[k].0 as usize) < arities[k] {
                break;
            }
            assignment[k] = Choice(0);
            k += 1;
        }
    }
}

/// Is every node on the chosen play Good? Collects one witness per distinct
/// play state (census) or play template (stage).
pub fn along_good(
    s: &StrategySystem,
    class: WitnessClass,
    limits: &Limits,
) -> Result<(Verdict, Vec<PathNodeWitness>), EscalationError> {
    if !s.is_finitely_presented() {
        return Err(EscalationError::NoCensus);
    }
    let walk = s.chosen_path(certain_fuel(s, limits));
    let mut witnesses = Vec::new();
    let mut seen: std::collections::HashSet<u64> = std::collections::HashSet::new();
    let mut path: Vec<Choice> = Vec::new();
    for step in &walk.steps {
        let dedup_key = match s.space() {
            Space::Stage(_) => match crate::stage::unpack(step.state) {
                StageState::Node { template, .. } => template as u64,
                StageState::Leaf { .. } => step.state.0,
            },
            _ => step.state.0,
        };
        if seen.insert(dedup_key) {
            let sub = s.re_root(step.state);
            let (v, w) = is_good(&sub, class, limits)?;
            match v {
                Verdict::Holds => witnesses.push(PathNodeWitness {
                    path: path.clone(),
                    state: step.state,
                    agent: step.agent,
                    head: step.chosen,
                    witness: w.expect("holds comes with a witness"),
                }),
                Verdict::Fails(inner) => {
                    return Ok((
                        Verdict::Fails(Witness::At {
                            path: path.clone(),
                            inner: Box::new(inner),
                        }),
                        Vec::new(),
                    ))
                }
                v @ Verdict::Unknown { .. } => return Ok((v, Vec::new())),
            }
        }
        path.push(step.chosen);
    }
    Ok((Verdict::Holds, witnesses))
}

/// The escalation check: divergent and along-good, with the full report.
pub fn check_escalation(
    s: &StrategySystem,
    name: &str,
    class: WitnessClass,
    limits: &Limits,
) -> Result<EscalationOutcome, EscalationError> {
    if !s.is_finitely_presented() {
        return Err(EscalationError::NoCensus);
    }
    let divergent = is_divergent(s, limits);
    let lasso = match divergent {
        Verdict::Holds => {
            let walk = s.chosen_path(certain_fuel(s, limits));
            match walk.end {
                PathEnd::Lasso { cycle_start } => Lasso {
                    prefix: walk.steps[..cycle_start].to_vec(),
                    cycle: walk.steps[cycle_start..].to_vec(),
                },
                _ => unreachable!("divergence on finitely presented systems is a lasso"),
            }
        }
        Verdict::Fails(_) => {
            return Ok(EscalationOutcome::NoEscalation {
                reason: "not divergent: the chosen play reaches a leaf".into(),
            })
        }
        Verdict::Unknown { .. } => {
            return Ok(EscalationOutcome::Unknown {
                reason: "divergence undetermined within the fuel budget".into(),
            })
        }
    };
    let (good, witnesses) = along_good(s, class, limits)?;
    match good {
        Verdict::Holds => Ok(EscalationOutcome::Escalates(EscalationReport {
            profile: name.to_string(),
            lasso,
            witnesses,
        })),
        Verdict::Fails(w) => Ok(EscalationOutcome::NoEscalation {
            reason: format!("a play node is not good: {w:?}"),
        }),
        Verdict::Unknown { .. } => Ok(EscalationOutcome::Unknown {
            reason: "goodness undetermined".into(),
        }),
    }
}
