//! The built-in game gallery.
//!
//! * a two-agent tree with agent-dependent choice and utility spaces
//!   (`example-2-1`), plus its one-stage simultaneous variant;
//! * the threadlike chains and the ℕ-branching game whose histories are all
//!   finite although no longest one exists (`game-wfh`);
//! * the dollar auction as a stage family — stopping at stage `n` costs the
//!   stopper `n` and hands the opponent `pot - n` — with its four
//!   memoryless profiles;
//! * the ying-yang loop with the two unordered utilities, where even a
//!   trivial preference sustains an escalation.
//!
//! The `example-2-1` leaf payoffs and the dollar pot are free parameters
//! of these constructions; they are isolated right below so swapping in
//! other values is a one-line change.

use std::sync::Arc;

use thiserror::Error;

use crate::arena::{
    AgentId, ArenaSpec, Choice, ChoiceSpace, Payoff, Pref, UtilityDomain, UtilityValue,
};
use crate::multistage::{MsGameSystem, MsNode};
use crate::stage::{AffinePayoff, AffineUtility, StageEdge, StageFamily, StageTemplate};
use crate::system::{
    AnalyticProp, BranchView, CensusNode, GameSystem, StateRef, StrategySystem, View,
};

/// The dollar-auction pot: stopping at stage `n` pays the stopper `-n`
/// and the opponent `DOLLAR_POT - n`.
pub const DOLLAR_POT: i64 = 100;

/// Leaf payoffs for `example-2-1`, in tree order:
/// blue leaf, green->black, green->dotted, red leaf. Components are
/// (A's symbolic level 0..=2, B's integer).
const EXAMPLE_2_1_PAYOFFS: [(usize, i64); 4] = [(1, 2), (2, 0), (0, 3), (0, 1)];

/// Who continues in a two-agent stop/continue profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    /// Both continue.
    AcBc,
    /// Alice stops, Bob continues.
    AsBc,
    /// Alice continues, Bob stops.
    AcBs,
    /// Both stop.
    AsBs,
}

impl ProfileKind {
    pub fn parse(s: &str) -> Option<ProfileKind> {
        match s.to_ascii_lowercase().as_str() {
            "acbc" => Some(ProfileKind::AcBc),
            "asbc" => Some(ProfileKind::AsBc),
            "acbs" => Some(ProfileKind::AcBs),
            "asbs" => Some(ProfileKind::AsBs),
            _ => None,
        }
    }

    fn alice_continues(self) -> bool {
        matches!(self, ProfileKind::AcBc | ProfileKind::AcBs)
    }

    fn bob_continues(self) -> bool {
        matches!(self, ProfileKind::AcBc | ProfileKind::AsBc)
    }
}

// ---------------------------------------------------------------------------
// Example 2.1: agent-dependent choices and utilities
// ---------------------------------------------------------------------------

fn arena_2_1() -> Arc<ArenaSpec> {
    ArenaSpec::new(
        vec!["A".into(), "B".into()],
        vec![
            ChoiceSpace::Enumerated(vec!["blue".into(), "green".into(), "red".into()]),
            ChoiceSpace::Enumerated(vec!["black".into(), "dotted".into()]),
        ],
        vec![
            UtilityDomain::symbolic_ordered(
                vec!["weak", "medium", "strong"],
                &[("weak", "medium"), ("medium", "strong")],
            )
            .expect("valid domain"),
            UtilityDomain::int_leq(),
        ],
    )
    .expect("valid arena")
}

fn pay_2_1(ix: usize) -> Payoff {
    let (a, b) = EXAMPLE_2_1_PAYOFFS[ix];
    Payoff(vec![UtilityValue::Sym(a), UtilityValue::Int(b)])
}

/// The finite tree with choices blue/green/red for A, black/dotted for B,
/// symbolic utilities for A and integers for B.
pub fn example_2_1() -> GameSystem {
    GameSystem::census(
        arena_2_1(),
        vec![
            CensusNode::Node {
                agent: AgentId(0),
                chosen: (),
                branches: vec![StateRef(2), StateRef(1), StateRef(5)],
            },
            CensusNode::Node {
                agent: AgentId(1),
                chosen: (),
                branches: vec![StateRef(3), StateRef(4)],
            },
            CensusNode::Leaf(pay_2_1(0)),
            CensusNode::Leaf(pay_2_1(1)),
            CensusNode::Leaf(pay_2_1(2)),
            CensusNode::Leaf(pay_2_1(3)),
        ],
        0,
    )
    .expect("valid construction")
}

/// One simultaneous stage over the same choices and utilities as
/// `example-2-1`: six joint outcomes.
pub fn msgame_2_1() -> MsGameSystem {
    let payoffs: [(usize, i64); 6] = [(1, 2), (2, 0), (0, 3), (0, 1), (1, 1), (2, 2)];
    let mut nodes = vec![MsNode::Node {
        chosen: (),
        branches: (1..=6).map(StateRef).collect(),
    }];
    nodes.extend(payoffs.iter().map(|&(a, b)| {
        MsNode::Leaf(Payoff(vec![UtilityValue::Sym(a), UtilityValue::Int(b)]))
    }));
    MsGameSystem::census(arena_2_1(), nodes, 0).expect("valid construction")
}

// ---------------------------------------------------------------------------
// Threadlike chains and the game with finite histories, no longest one
// ---------------------------------------------------------------------------

fn arena_wfh() -> Arc<ArenaSpec> {
    ArenaSpec::new(
        vec!["Alice".into(), "Bob".into()],
        vec![
            ChoiceSpace::Naturals,
            ChoiceSpace::Enumerated(vec!["tt".into()]),
        ],
        vec![
            UtilityDomain::symbolic_indifferent(vec!["tt"]),
            UtilityDomain::symbolic_indifferent(vec!["tt"]),
        ],
    )
    .expect("valid arena")
}

fn triv() -> Payoff {
    Payoff(vec![UtilityValue::Sym(0), UtilityValue::Sym(0)])
}

/// A chain of `n` unit-choice Bob nodes ending in the trivial leaf.
pub fn threadlike(n: u64) -> GameSystem {
    let mut nodes: Vec<CensusNode<()>> = (0..n)
        .map(|i| CensusNode::Node {
            agent: AgentId(1),
            chosen: (),
            branches: vec![StateRef(i + 1)],
        })
        .collect();
    nodes.push(CensusNode::Leaf(triv()));
    GameSystem::census(arena_wfh(), nodes, 0).expect("valid construction")
}

/// The profile on `threadlike(n)`: Bob's only choice everywhere.
pub fn threadlike_profile(n: u64) -> StrategySystem {
    let mut nodes: Vec<CensusNode<Choice>> = (0..n)
        .map(|i| CensusNode::Node {
            agent: AgentId(1),
            chosen: Choice(0),
            branches: vec![StateRef(i + 1)],
        })
        .collect();
    nodes.push(CensusNode::Leaf(triv()));
    StrategySystem::census(arena_wfh(), nodes, 0).expect("valid construction")
}

/// State encoding for the ℕ-branching game: `u64::MAX` is the Alice root,
/// any other key `k` is the threadlike chain with `k` Bob moves left.
const WFH_ROOT: u64 = u64::MAX;

/// Alice picks any natural `n` and enters a chain of `n` Bob moves: every
/// history is finite, yet for every `n` some history is longer than `n`.
pub fn game_wfh() -> GameSystem {
    GameSystem::closure(arena_wfh(), StateRef(WFH_ROOT), |s| {
        if s.0 == WFH_ROOT {
            View::Node {
                agent: AgentId(0),
                chosen: (),
                branch: BranchView::Naturals(Arc::new(StateRef)),
            }
        } else if s.0 == 0 {
            View::Leaf(triv())
        } else {
            View::Node {
                agent: AgentId(1),
                chosen: (),
                branch: BranchView::Enumerated(vec![StateRef(s.0 - 1)]),
            }
        }
    })
    .with_fact(
        AnalyticProp::FiniteHistoryGame,
        true,
        "every branch n is a finite chain of n unit moves",
    )
}

/// A history of `game_wfh` strictly longer than `n` moves: Alice picks the
/// branch `n`, followed by `n` Bob moves.
pub fn wfh_history_exceeding(n: u64) -> Vec<Choice> {
    let mut h = Vec::with_capacity(n as usize + 1);
    h.push(Choice(n));
    h.extend(std::iter::repeat_n(Choice(0), n as usize));
    h
}

// ---------------------------------------------------------------------------
// The dollar auction as a stage family
// ---------------------------------------------------------------------------

fn arena_dollar() -> Arc<ArenaSpec> {
    ArenaSpec::new(
        vec!["Alice".into(), "Bob".into()],
        vec![
            ChoiceSpace::Enumerated(vec!["stop".into(), "continue".into()]),
            ChoiceSpace::Enumerated(vec!["stop".into(), "continue".into()]),
        ],
        vec![UtilityDomain::int_leq(), UtilityDomain::int_leq()],
    )
    .expect("valid arena")
}

pub const STOP: Choice = Choice(0);
pub const CONTINUE: Choice = Choice(1);

/// Payoff of stopping at the current stage `n`: the stopper gets `-n`, the
/// opponent `DOLLAR_POT - n`.
fn dollar_stop_payoff(stopper: AgentId) -> AffinePayoff {
    let stopping = AffineUtility {
        slope: -1,
        intercept: 0,
    };
    let opponent = AffineUtility {
        slope: -1,
        intercept: DOLLAR_POT,
    };
    if stopper == AgentId(0) {
        AffinePayoff(vec![stopping, opponent])
    } else {
        AffinePayoff(vec![opponent, stopping])
    }
}

fn dollar_templates<C: Clone>(alice: C, bob: C) -> Vec<StageTemplate<C>> {
    vec![
        StageTemplate {
            agent: AgentId(0),
            chosen: alice,
            edges: vec![
                StageEdge::Leaf(dollar_stop_payoff(AgentId(0))),
                StageEdge::Next {
                    template: 1,
                    delta: 1,
                },
            ],
        },
        StageTemplate {
            agent: AgentId(1),
            chosen: bob,
            edges: vec![
                StageEdge::Leaf(dollar_stop_payoff(AgentId(1))),
                StageEdge::Next {
                    template: 0,
                    delta: 1,
                },
            ],
        },
    ]
}

fn dollar_root(stage: u64) -> usize {
    // even stages are Alice's, odd ones Bob's
    (stage % 2) as usize
}

/// The dollar-auction game entered at the given stage.
pub fn dollar_game(stage: u64) -> GameSystem {
    GameSystem::stage_family(
        StageFamily {
            arena: arena_dollar(),
            templates: dollar_templates((), ()),
        },
        dollar_root(stage),
        stage,
    )
    .expect("valid construction")
}

/// One of the four memoryless dollar profiles, entered at the given stage.
pub fn dollar_profile(kind: ProfileKind, stage: u64) -> StrategySystem {
    let alice = if kind.alice_continues() { CONTINUE } else { STOP };
    let bob = if kind.bob_continues() { CONTINUE } else { STOP };
    StrategySystem::stage_family(
        StageFamily {
            arena: arena_dollar(),
            templates: dollar_templates(alice, bob),
        },
        dollar_root(stage),
        stage,
    )
    .expect("valid construction")
}

// ---------------------------------------------------------------------------
// The ying-yang loop
// ---------------------------------------------------------------------------

pub const DOWN: Choice = Choice(0);
pub const RIGHT: Choice = Choice(1);

fn arena_yingyang(pref: Pref) -> Arc<ArenaSpec> {
    let dom = UtilityDomain {
        values: crate::arena::UtilityValues::Symbolic(vec!["ying".into(), "yang".into()]),
        pref,
    };
    ArenaSpec::new(
        vec!["A".into(), "B".into()],
        vec![
            ChoiceSpace::Enumerated(vec!["down".into(), "right".into()]),
            ChoiceSpace::Enumerated(vec!["down".into(), "right".into()]),
        ],
        vec![dom.clone(), dom],
    )
    .expect("valid arena")
}

const YING: UtilityValue = UtilityValue::Sym(0);
const YANG: UtilityValue = UtilityValue::Sym(1);

/// The two-node loop: A's down-leaf pays (ying, yang), B's down-leaf pays
/// (yang, ying), and both right branches continue around the loop. The two
/// utilities are unordered; the default preference is total indifference
/// (see `yingyang_game_with` for the strict-equality reading).
pub fn yingyang_game() -> GameSystem {
    yingyang_game_with(Pref::Indifference)
}

pub fn yingyang_game_with(pref: Pref) -> GameSystem {
    GameSystem::census(arena_yingyang(pref), yingyang_nodes((), ()), 0)
        .expect("valid construction")
}

fn yingyang_nodes<C: Clone>(a: C, b: C) -> Vec<CensusNode<C>> {
    vec![
        CensusNode::Node {
            agent: AgentId(0),
            chosen: a,
            branches: vec![StateRef(2), StateRef(1)],
        },
        CensusNode::Node {
            agent: AgentId(1),
            chosen: b,
            branches: vec![StateRef(3), StateRef(0)],
        },
        CensusNode::Leaf(Payoff(vec![YING, YANG])),
        CensusNode::Leaf(Payoff(vec![YANG, YING])),
    ]
}

pub fn yingyang_profile(kind: ProfileKind) -> StrategySystem {
    yingyang_profile_with(kind, Pref::Indifference)
}

pub fn yingyang_profile_with(kind: ProfileKind, pref: Pref) -> StrategySystem {
    let a = if kind.alice_continues() { RIGHT } else { DOWN };
    let b = if kind.bob_continues() { RIGHT } else { DOWN };
    StrategySystem::census(arena_yingyang(pref), yingyang_nodes(a, b), 0)
        .expect("valid construction")
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum Built {
    Game(GameSystem),
    Profile(StrategySystem),
    MsGame(MsGameSystem),
}

/// A named gallery entry with its analytic facts.
pub struct EntryInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Meaning of the optional `name:N` parameter, if any.
    pub param: Option<&'static str>,
    /// Facts established analytically, re-checked by the analyses where
    /// decidable.
    pub facts: &'static [&'static str],
}

pub fn entries() -> Vec<EntryInfo> {
    vec![
        EntryInfo {
            name: "example-2-1",
            summary: "finite tree with agent-dependent choices and utilities",
            param: None,
            facts: &["finite game", "finitely broad with 6 profiles"],
        },
        EntryInfo {
            name: "msgame-2-1",
            summary: "one simultaneous stage over the example-2-1 spaces (6 joint outcomes)",
            param: None,
            facts: &[],
        },
        EntryInfo {
            name: "threadlike",
            summary: "a chain of N unit-choice Bob nodes ending in the trivial leaf",
            param: Some("N = chain length (default 3)"),
            facts: &["finite game", "exactly one history, of N moves"],
        },
        EntryInfo {
            name: "game-wfh",
            summary: "Alice picks any natural n, then n Bob moves: only finite histories, no longest one",
            param: None,
            facts: &[
                "finite-history game (certified: branch n is a chain of n moves)",
                "not a finite game (naturals branching at the root)",
                "not finitely broad",
                "for every n some history is longer than n",
            ],
        },
        EntryInfo {
            name: "dollar-game",
            summary: "dollar auction entered at stage N: stopping at stage n pays the stopper -n, the opponent 100-n",
            param: Some("N = entry stage (default 0)"),
            facts: &["infinite stage family; template cycle of period 2"],
        },
        EntryInfo {
            name: "dollar-acbc",
            summary: "dollar auction, both agents always continue (the escalation profile)",
            param: Some("N = entry stage (default 0)"),
            facts: &["divergent", "along-good: opponent-always-stops witnesses at every stage"],
        },
        EntryInfo {
            name: "dollar-asbc",
            summary: "dollar auction, Alice always stops, Bob always continues",
            param: Some("N = entry stage (default 0)"),
            facts: &["subgame perfect equilibrium at every stage"],
        },
        EntryInfo {
            name: "dollar-acbs",
            summary: "dollar auction, Alice always continues, Bob always stops",
            param: Some("N = entry stage (default 0)"),
            facts: &["subgame perfect equilibrium at every stage"],
        },
        EntryInfo {
            name: "dollar-asbs",
            summary: "dollar auction, both agents always stop",
            param: Some("N = entry stage (default 0)"),
            facts: &["convergent; uassign at stage 0 is (Alice: 0, Bob: 100)"],
        },
        EntryInfo {
            name: "yingyang-game",
            summary: "two-node loop with unordered utilities ying and yang (indifference preference by default)",
            param: None,
            facts: &["not a finite game (loop)", "census of 2 nodes and 2 leaves"],
        },
        EntryInfo {
            name: "yingyang-acbc",
            summary: "ying-yang loop, both agents always continue (the escalation profile)",
            param: None,
            facts: &["divergent with a period-2 lasso", "along-good under indifference"],
        },
        EntryInfo {
            name: "yingyang-asbc",
            summary: "ying-yang loop, A down, B right",
            param: None,
            facts: &["always convergent", "SPE under indifference"],
        },
        EntryInfo {
            name: "yingyang-acbs",
            summary: "ying-yang loop, A right, B down",
            param: None,
            facts: &["always convergent", "SPE under indifference"],
        },
        EntryInfo {
            name: "yingyang-asbs",
            summary: "ying-yang loop, both agents stop",
            param: None,
            facts: &["always convergent", "SPE under indifference"],
        },
    ]
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GalleryError {
    #[error("unknown gallery entry {0:?} (see the `examples` subcommand)")]
    UnknownEntry(String),
    #[error("entry {0} takes no parameter")]
    NoParam(String),
}

/// Build a gallery entry by name. `param` is the `name:N` suffix; a
/// preference override replaces every symbolic preference.
pub fn build(name: &str, param: Option<u64>, pref: Option<Pref>) -> Result<Built, GalleryError> {
    let wrap_game = |g: GameSystem| match &pref {
        Some(p) => Built::Game(g.with_symbolic_pref(p.clone())),
        None => Built::Game(g),
    };
    let wrap_profile = |s: StrategySystem| match &pref {
        Some(p) => Built::Profile(s.with_symbolic_pref(p.clone())),
        None => Built::Profile(s),
    };
    let no_param = |name: &str| -> Result<(), GalleryError> {
        if param.is_some() {
            Err(GalleryError::NoParam(name.to_string()))
        } else {
            Ok(())
        }
    };
    match name {
        "example-2-1" => {
            no_param(name)?;
            Ok(wrap_game(example_2_1()))
        }
        "msgame-2-1" => {
            no_param(name)?;
            Ok(Built::MsGame(msgame_2_1()))
        }
        "threadlike" => Ok(wrap_game(threadlike(param.unwrap_or(3)))),
        "threadlike-profile" => Ok(wrap_profile(threadlike_profile(param.unwrap_or(3)))),
        "game-wfh" => {
            no_param(name)?;
            Ok(wrap_game(game_wfh()))
        }
        "dollar-game" => Ok(wrap_game(dollar_game(param.unwrap_or(0)))),
        "yingyang-game" => {
            no_param(name)?;
            Ok(wrap_game(yingyang_game()))
        }
        _ => {
            if let Some(kind) = name
                .strip_prefix("dollar-")
                .and_then(ProfileKind::parse)
            {
                return Ok(wrap_profile(dollar_profile(kind, param.unwrap_or(0))));
            }
            if let Some(kind) = name
                .strip_prefix("yingyang-")
                .and_then(ProfileKind::parse)
            {
                no_param(name)?;
                return Ok(wrap_profile(yingyang_profile(kind)));
            }
            Err(GalleryError::UnknownEntry(name.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{bisim_bounded, bisim_exact, Bounded, NatPolicy};
    use crate::equilibrium::check_spe_regular;
    use crate::escalation::is_divergent;
    use crate::finiteness::{
        is_convergent, is_finite_game, is_finite_history_game, is_finitely_broad, Verdict, Witness,
    };
    use crate::system::UassignResult;
    use crate::Limits;

    #[test]
    fn example_2_1_has_the_declared_spaces() {
        let g = example_2_1();
        let arena = g.arena();
        assert_eq!(arena.num_agents(), 2);
        assert_eq!(arena.choices(AgentId(0)).arity(), Some(3));
        assert_eq!(arena.choices(AgentId(1)).arity(), Some(2));
        // A's utilities are ordered weak < medium < strong
        let dom = arena.utility(AgentId(0));
        assert!(dom.pref_holds(&UtilityValue::Sym(0), &UtilityValue::Sym(2)));
        assert!(!dom.pref_holds(&UtilityValue::Sym(2), &UtilityValue::Sym(0)));
        assert!(is_finite_game(&g, &Limits::default()).holds());
        // 3 root choices x 2 at the inner B node = 6... with every leaf
        // counting 1: 3 * (2) = 6 profiles? The root's green branch has 2,
        // blue and red have 1 each: 3 * 2 * 1 * 1 = 6.
        assert_eq!(
            is_finitely_broad(&g, &Limits::default()),
            (Verdict::Holds, Some(6))
        );
    }

    #[test]
    fn yingyang_depth3_unfolding_shape() {
        // A-node{down -> leaf, right -> B-node{down -> leaf, right -> continuation}}
        let g = yingyang_game();
        let crate::system::PrefixTree::Node { agent, branches, .. } = g.unfold_prefix(2, 8)
        else {
            panic!("root is a node");
        };
        assert_eq!(agent, AgentId(0));
        assert!(matches!(branches[0].1, crate::system::PrefixTree::Leaf(_)));
        let crate::system::PrefixTree::Node { agent: b, branches: inner, .. } = &branches[1].1
        else {
            panic!("right goes to B's node");
        };
        assert_eq!(*b, AgentId(1));
        assert!(matches!(inner[0].1, crate::system::PrefixTree::Leaf(_)));
        assert!(matches!(
            inner[1].1,
            crate::system::PrefixTree::Continuation(s) if s == g.root()
        ));
    }

    #[test]
    fn threadlike_zero_is_the_trivial_leaf() {
        let g = threadlike(0);
        assert!(matches!(g.view(g.root()), View::Leaf(p) if p == triv()));
    }

    #[test]
    fn threadlike_two_has_one_history_of_two_bob_steps() {
        let s = threadlike_profile(2);
        let path = s.chosen_path(10);
        assert_eq!(path.steps.len(), 2);
        assert!(path.steps.iter().all(|st| st.agent == AgentId(1)));
        assert!(matches!(path.end, crate::system::PathEnd::Leaf(_)));
        // single unit choice at each node: exactly one profile
        assert_eq!(
            is_finitely_broad(&threadlike(2), &Limits::default()).1,
            Some(1)
        );
    }

    #[test]
    fn threadlike_chains_have_finite_histories() {
        for n in [0u64, 1, 2, 17, 1000] {
            assert!(is_finite_history_game(&threadlike(n), &Limits::default()).holds());
        }
    }

    #[test]
    fn threadlike_2_and_3_differ_after_two_steps() {
        // one unfolds to a leaf, the other to a Bob node
        let out = bisim_bounded(
            &threadlike(2),
            &threadlike(3),
            10,
            NatPolicy::Sample(8),
        )
        .unwrap();
        assert_eq!(out, Bounded::DifferAt(vec![Choice(0), Choice(0)]));
    }

    #[test]
    fn wfh_branch_zero_is_a_leaf_and_branch_k_has_k_bob_moves() {
        let g = game_wfh();
        let View::Node { agent, branch, .. } = g.view(g.root()) else {
            panic!("root is Alice's node");
        };
        assert_eq!(agent, AgentId(0));
        let b0 = branch.target(Choice(0)).unwrap();
        assert!(matches!(g.view(b0), View::Leaf(_)));
        // replay a history of length 6 > 5
        let h = wfh_history_exceeding(5);
        assert_eq!(h.len(), 6);
        let mut state = g.root();
        for c in &h {
            state = g.step(state, *c).expect("history is playable");
        }
        assert!(matches!(g.view(state), View::Leaf(_)));
    }

    #[test]
    fn wfh_is_not_finite_but_has_only_finite_histories() {
        let g = game_wfh();
        let limits = Limits::default();
        assert!(matches!(
            is_finite_game(&g, &limits),
            Verdict::Fails(Witness::NaturalsBranching { ref path }) if path.is_empty()
        ));
        let (broad, _) = is_finitely_broad(&g, &limits);
        assert!(broad.fails());
        // certified analytically, never contradicted by bounded search
        assert!(is_finite_history_game(&g, &limits).holds());
    }

    #[test]
    fn dollar_stop_now_hands_the_pot_to_the_opponent() {
        let s = dollar_profile(ProfileKind::AsBs, 0);
        assert_eq!(
            s.uassign(10),
            UassignResult::Assigned(Payoff(vec![
                UtilityValue::Int(0),
                UtilityValue::Int(DOLLAR_POT)
            ]))
        );
    }

    #[test]
    fn dollar_stop_leaves_drift_with_the_stage() {
        // entering at stage 2, Alice's immediate stop costs her 2
        let s = dollar_profile(ProfileKind::AsBs, 2);
        assert_eq!(
            s.uassign(10),
            UassignResult::Assigned(Payoff(vec![
                UtilityValue::Int(-2),
                UtilityValue::Int(DOLLAR_POT - 2)
            ]))
        );
        // and the games entered at stages 0 and 2 differ at the stop leaf
        let out = bisim_bounded(&dollar_game(0), &dollar_game(2), 1, NatPolicy::Sample(8)).unwrap();
        assert_eq!(out, Bounded::DifferAt(vec![STOP]));
    }

    #[test]
    fn dollar_acbc_diverges_and_erases_to_the_dollar_game() {
        let s = dollar_profile(ProfileKind::AcBc, 0);
        assert!(is_divergent(&s, &Limits::default()).holds());
        // bounded bisimulation oracle for the erasure
        let out = bisim_bounded(&s.game(), &dollar_game(0), 50, NatPolicy::Sample(8)).unwrap();
        assert!(out.is_equal());
    }

    #[test]
    fn dollar_always_convergence_is_per_template() {
        use crate::finiteness::is_always_convergent;
        let limits = Limits::default();
        // every reachable template's chosen play stops within a step
        assert!(is_always_convergent(&dollar_profile(ProfileKind::AsBs, 0), &limits).holds());
        // one template keeps continuing into the other, which stops
        assert!(is_always_convergent(&dollar_profile(ProfileKind::AcBs, 0), &limits).holds());
        assert!(is_always_convergent(&dollar_profile(ProfileKind::AcBc, 0), &limits).fails());
    }

    #[test]
    fn dollar_opponent_always_stops_profiles_are_spe() {
        let limits = Limits::default();
        for (kind, stage) in [
            (ProfileKind::AsBc, 0),
            (ProfileKind::AsBc, 1),
            (ProfileKind::AcBs, 0),
            (ProfileKind::AcBs, 5),
        ] {
            let s = dollar_profile(kind, stage);
            let out = check_spe_regular(&s, &limits).unwrap();
            assert!(out.verdict.holds(), "{kind:?}@{stage} should be an SPE");
            out.certificate.unwrap().replay(&s, &limits).unwrap();
        }
        // both-continue is not even convergent
        let acbc = dollar_profile(ProfileKind::AcBc, 0);
        assert!(check_spe_regular(&acbc, &limits).unwrap().verdict.fails());
        // both-stop fails: whoever stops first regrets not outlasting the
        // opponent's stop
        let asbs = dollar_profile(ProfileKind::AsBs, 0);
        assert!(check_spe_regular(&asbs, &limits).unwrap().verdict.fails());
    }

    #[test]
    fn yingyang_census_and_leaf_payoffs() {
        let g = yingyang_game();
        let states = g.reachable().unwrap();
        assert_eq!(states.len(), 4, "2 node states plus 2 leaf states");
        // leaf after A's down pays (ying, yang)
        let after_down = g.step(g.root(), DOWN).unwrap();
        assert!(matches!(
            g.view(after_down),
            View::Leaf(p) if p == Payoff(vec![YING, YANG])
        ));
        assert!(is_finite_game(&g, &Limits::default()).fails());
    }

    #[test]
    fn yingyang_acbc_has_a_period_two_lasso() {
        let s = yingyang_profile(ProfileKind::AcBc);
        match s.uassign(100) {
            UassignResult::DivergenceDetected(l) => assert_eq!(l.period(), 2),
            other => panic!("expected divergence, got {other:?}"),
        }
        assert_eq!(s.reachable().unwrap().len(), 4);
        assert!(is_convergent(&s, &Limits::default()).fails());
    }

    #[test]
    fn yingyang_game_of_acbc_is_the_yingyang_game() {
        let s = yingyang_profile(ProfileKind::AcBc);
        assert!(bisim_exact(&s.game(), &yingyang_game()).unwrap());
    }

    #[test]
    fn yingyang_loop_is_bisimilar_to_its_unrolling() {
        // 2x unrolling: A0 B0 A1 B1 with right-edges closing the bigger loop
        let arena = arena_yingyang(Pref::Indifference);
        let unrolled = GameSystem::census(
            arena,
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(4), StateRef(1)],
                },
                CensusNode::Node {
                    agent: AgentId(1),
                    chosen: (),
                    branches: vec![StateRef(5), StateRef(2)],
                },
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(6), StateRef(3)],
                },
                CensusNode::Node {
                    agent: AgentId(1),
                    chosen: (),
                    branches: vec![StateRef(7), StateRef(0)],
                },
                CensusNode::Leaf(Payoff(vec![YING, YANG])),
                CensusNode::Leaf(Payoff(vec![YANG, YING])),
                CensusNode::Leaf(Payoff(vec![YING, YANG])),
                CensusNode::Leaf(Payoff(vec![YANG, YING])),
            ],
            0,
        )
        .unwrap();
        assert!(bisim_exact(&yingyang_game(), &unrolled).unwrap());
        // swapping the two leaf payoffs breaks it
        let swapped = yingyang_game_with(Pref::Indifference);
        let Some(crate::system::Space::Census(nodes)) = Some(swapped.space()) else {
            unreachable!()
        };
        let mut nodes = (**nodes).clone();
        nodes[2] = CensusNode::Leaf(Payoff(vec![YANG, YING]));
        nodes[3] = CensusNode::Leaf(Payoff(vec![YING, YANG]));
        let swapped =
            GameSystem::census(arena_yingyang(Pref::Indifference), nodes, 0).unwrap();
        assert!(!bisim_exact(&yingyang_game(), &swapped).unwrap());
    }

    #[test]
    fn yingyang_always_convergent_profiles_are_spe_under_indifference() {
        let limits = Limits::default();
        for kind in [ProfileKind::AsBs, ProfileKind::AsBc, ProfileKind::AcBs] {
            let s = yingyang_profile(kind);
            let out = check_spe_regular(&s, &limits).unwrap();
            assert!(out.verdict.holds(), "{kind:?} should be an SPE");
            out.certificate.unwrap().replay(&s, &limits).unwrap();
        }
        // under the strict equality preference, A-continue/B-stop fails:
        // at B's node, stopping yields ying but the alternative play yields
        // yang, and the two are unrelated
        let s = yingyang_profile_with(ProfileKind::AcBs, Pref::EqualityOnly);
        assert!(check_spe_regular(&s, &limits).unwrap().verdict.fails());
    }

    #[test]
    fn both_escalation_lemmas_reproduce() {
        use crate::escalation::{check_escalation, EscalationOutcome, WitnessClass};
        let limits = Limits::default();
        for (name, s) in [
            ("yingyang-acbc", yingyang_profile(ProfileKind::AcBc)),
            ("dollar-acbc", dollar_profile(ProfileKind::AcBc, 0)),
        ] {
            let out =
                check_escalation(&s, name, WitnessClass::Memoryless, &limits).unwrap();
            let EscalationOutcome::Escalates(report) = out else {
                panic!("{name} should escalate, got {out:?}");
            };
            assert_eq!(report.lasso.period(), 2, "{name} lasso period");
            assert_eq!(report.witnesses.len(), 2, "{name} path witnesses");
            for w in &report.witnesses {
                assert_eq!(w.witness.profile.chosen_at(w.witness.profile.root()), Some(w.head));
                w.witness
                    .certificate
                    .replay(&w.witness.profile, &limits)
                    .unwrap();
            }
        }
    }

    #[test]
    fn dollar_witnesses_are_opponent_always_stops() {
        use crate::escalation::{check_escalation, EscalationOutcome, WitnessClass};
        let limits = Limits::default();
        let s = dollar_profile(ProfileKind::AcBc, 0);
        let out = check_escalation(&s, "dollar-acbc", WitnessClass::Memoryless, &limits).unwrap();
        let EscalationOutcome::Escalates(report) = out else {
            panic!("expected escalation");
        };
        // at Alice's node: Alice continues, Bob always stops; at Bob's
        // node the mirror image
        for w in &report.witnesses {
            let fam = w.witness.profile.stage().expect("stage witness");
            let opponent = AgentId(1 - w.agent.0);
            let opp_template = fam
                .templates
                .iter()
                .find(|t| t.agent == opponent)
                .unwrap();
            assert_eq!(w.head, CONTINUE);
            assert_eq!(opp_template.chosen, STOP);
        }
    }

    #[test]
    fn yingyang_under_equality_only_is_not_along_good() {
        use crate::escalation::{check_escalation, EscalationOutcome, WitnessClass};
        let s = yingyang_profile_with(ProfileKind::AcBc, Pref::EqualityOnly);
        let out = check_escalation(&s, "yy", WitnessClass::Memoryless, &Limits::default()).unwrap();
        assert!(matches!(out, EscalationOutcome::NoEscalation { .. }));
    }

    #[test]
    fn yingyang_every_head_choice_is_good_under_indifference() {
        use crate::escalation::{is_good, WitnessClass};
        let limits = Limits::default();
        // for every node and every pinned head choice some memoryless
        // always-convergent SPE agrees with the head
        for (a, b) in [(DOWN, DOWN), (DOWN, RIGHT), (RIGHT, DOWN), (RIGHT, RIGHT)] {
            let s = StrategySystem::census(
                arena_yingyang(Pref::Indifference),
                yingyang_nodes(a, b),
                0,
            )
            .unwrap();
            for root in [StateRef(0), StateRef(1)] {
                let sub = s.re_root(root);
                let (v, w) = is_good(&sub, WitnessClass::Memoryless, &limits).unwrap();
                assert!(v.holds(), "head ({a:?},{b:?}) at {root:?}");
                let w = w.unwrap();
                // the witness's game is the node's residual game
                assert!(bisim_exact(&w.profile.game(), &sub.game()).unwrap());
            }
        }
    }

    #[test]
    fn registry_builds_every_entry() {
        for info in entries() {
            let built = build(info.name, None, None).unwrap();
            match built {
                Built::Game(_) | Built::Profile(_) | Built::MsGame(_) => {}
            }
        }
        assert!(matches!(
            build("nope", None, None),
            Err(GalleryError::UnknownEntry(_))
        ));
        assert!(build("threadlike", Some(7), None).is_ok());
        assert!(matches!(
            build("yingyang-game", Some(7), None),
            Err(GalleryError::NoParam(_))
        ));
    }
}
