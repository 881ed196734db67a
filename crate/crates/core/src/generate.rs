//! Seeded random systems for property suites and oracle comparisons.
//!
//! Everything here is deterministic in the seed, so failures reproduce.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::arena::{
    AgentId, ArenaSpec, Choice, ChoiceSpace, Payoff, UtilityDomain, UtilityValue,
};
use crate::finiteness::is_finitely_broad;
use crate::multistage::{MsGameSystem, MsNode};
use crate::system::{CensusNode, GameSystem, StateRef, StrategySystem};
use crate::Limits;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// An arena with integer-leq utilities and enumerated spaces of sizes
/// `1..=max_choices`.
pub fn int_arena(rng: &mut StdRng, agents: usize, max_choices: usize) -> Arc<ArenaSpec> {
    let names = (0..agents).map(|i| format!("P{i}")).collect();
    let spaces = (0..agents)
        .map(|_| {
            let k = rng.random_range(1..=max_choices);
            ChoiceSpace::Enumerated((0..k).map(|i| format!("c{i}")).collect())
        })
        .collect();
    let domains = (0..agents).map(|_| UtilityDomain::int_leq()).collect();
    ArenaSpec::new(names, spaces, domains).expect("valid arena")
}

/// An arena that sometimes carries symbolic domains and non-trivial
/// preorders, for exercising serialization.
pub fn mixed_arena(rng: &mut StdRng, agents: usize, max_choices: usize) -> Arc<ArenaSpec> {
    let names = (0..agents).map(|i| format!("P{i}")).collect();
    let spaces = (0..agents)
        .map(|_| {
            let k = rng.random_range(1..=max_choices);
            ChoiceSpace::Enumerated((0..k).map(|i| format!("c{i}")).collect())
        })
        .collect();
    let domains = (0..agents)
        .map(|_| match rng.random_range(0..4u8) {
            0 => UtilityDomain::symbolic_indifferent(vec!["lo", "mid", "hi"]),
            1 => UtilityDomain::symbolic_equality(vec!["lo", "mid", "hi"]),
            2 => UtilityDomain::symbolic_ordered(
                vec!["lo", "mid", "hi"],
                &[("lo", "mid"), ("mid", "hi")],
            )
            .expect("valid domain"),
            _ => UtilityDomain::int_leq(),
        })
        .collect();
    ArenaSpec::new(names, spaces, domains).expect("valid arena")
}

pub fn random_payoff(rng: &mut StdRng, arena: &ArenaSpec, lo: i64, hi: i64) -> Payoff {
    Payoff(
        arena
            .agents()
            .map(|a| match &arena.utility(a).values {
                crate::arena::UtilityValues::Integers => {
                    UtilityValue::Int(rng.random_range(lo..=hi))
                }
                crate::arena::UtilityValues::Symbolic(labels) => {
                    UtilityValue::Sym(rng.random_range(0..labels.len()))
                }
            })
            .collect(),
    )
}

/// A random finite tree game with profile count at most `max_profiles`
/// (regenerated until the bound holds, deterministically in the rng).
pub fn random_finite_tree(
    rng: &mut StdRng,
    agents: usize,
    max_depth: u32,
    max_profiles: u128,
) -> GameSystem {
    loop {
        let arena = int_arena(rng, agents, 3);
        let mut nodes: Vec<CensusNode<()>> = Vec::new();
        build_tree(rng, &arena, &mut nodes, max_depth);
        let g = GameSystem::census(arena, nodes, 0).expect("tree is valid");
        let (v, count) = is_finitely_broad(&g, &Limits::default());
        debug_assert!(v.holds());
        if count.is_some_and(|c| c <= max_profiles) {
            return g;
        }
    }
}

fn build_tree(
    rng: &mut StdRng,
    arena: &ArenaSpec,
    nodes: &mut Vec<CensusNode<()>>,
    depth: u32,
) -> usize {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        nodes.push(CensusNode::Leaf(random_payoff(rng, arena, -9, 9)));
        return nodes.len() - 1;
    }
    let agent = AgentId(rng.random_range(0..arena.num_agents()));
    let arity = arena.choices(agent).arity().expect("enumerated");
    let idx = nodes.len();
    nodes.push(CensusNode::Node {
        agent,
        chosen: (),
        branches: Vec::new(),
    });
    let children: Vec<StateRef> = (0..arity)
        .map(|_| StateRef(build_tree(rng, arena, nodes, depth - 1) as u64))
        .collect();
    if let CensusNode::Node { branches, .. } = &mut nodes[idx] {
        *branches = children;
    }
    idx
}

/// A random census game over up to `max_states` states; cycles and shared
/// subtrees arise naturally from uniform branch targets.
pub fn random_census_game(rng: &mut StdRng, max_states: usize) -> GameSystem {
    let agents = rng.random_range(2..=3);
    let arena = int_arena(rng, agents, 3);
    random_census_game_on(rng, arena, max_states)
}

/// As [`random_census_game`], over a given arena.
pub fn random_census_game_on(
    rng: &mut StdRng,
    arena: Arc<ArenaSpec>,
    max_states: usize,
) -> GameSystem {
    let n = rng.random_range(1..=max_states);
    let nodes = (0..n)
        .map(|_| {
            if rng.random_bool(0.4) {
                CensusNode::Leaf(random_payoff(rng, &arena, -9, 9))
            } else {
                let agent = AgentId(rng.random_range(0..arena.num_agents()));
                let arity = arena.choices(agent).arity().expect("enumerated");
                CensusNode::Node {
                    agent,
                    chosen: (),
                    branches: (0..arity)
                        .map(|_| StateRef(rng.random_range(0..n) as u64))
                        .collect(),
                }
            }
        })
        .collect();
    GameSystem::census(arena, nodes, 0).expect("valid construction")
}

/// A random census profile; chosen choices are uniform, so convergent and
/// divergent profiles both occur.
pub fn random_census_profile(rng: &mut StdRng, max_states: usize) -> StrategySystem {
    let g = random_census_game(rng, max_states);
    random_profile_of(rng, &g)
}

/// Attach uniformly random chosen choices to a census game.
pub fn random_profile_of(rng: &mut StdRng, g: &GameSystem) -> StrategySystem {
    let crate::system::Space::Census(rows) = g.space() else {
        panic!("census game expected");
    };
    let nodes = rows
        .iter()
        .map(|n| match n {
            CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
            CensusNode::Node {
                agent, branches, ..
            } => CensusNode::Node {
                agent: *agent,
                chosen: Choice(rng.random_range(0..branches.len()) as u64),
                branches: branches.clone(),
            },
        })
        .collect();
    StrategySystem::census(g.arena().clone(), nodes, g.root().0 as usize)
        .expect("valid construction")
}

/// The `k`-fold unrolling of a census game: states are (state, phase) pairs
/// and edges advance the phase. Bisimilar to the original by construction.
pub fn unrolled(g: &GameSystem, k: usize) -> GameSystem {
    let crate::system::Space::Census(rows) = g.space() else {
        panic!("census game expected");
    };
    let n = rows.len();
    let mut nodes = Vec::with_capacity(n * k);
    for phase in 0..k {
        for row in rows.iter() {
            nodes.push(match row {
                CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
                CensusNode::Node {
                    agent, branches, ..
                } => CensusNode::Node {
                    agent: *agent,
                    chosen: (),
                    branches: branches
                        .iter()
                        .map(|b| StateRef(((phase + 1) % k * n) as u64 + b.0))
                        .collect(),
                },
            });
        }
    }
    GameSystem::census(g.arena().clone(), nodes, g.root().0 as usize)
        .expect("valid construction")
}

/// A randomly perturbed copy: one leaf payoff or one branch target changed.
/// Usually, though not always, not bisimilar to the original.
pub fn mutated(rng: &mut StdRng, g: &GameSystem) -> GameSystem {
    let crate::system::Space::Census(rows) = g.space() else {
        panic!("census game expected");
    };
    let mut nodes: Vec<CensusNode<()>> = (**rows).clone();
    let n = nodes.len();
    let i = rng.random_range(0..n);
    match &mut nodes[i] {
        CensusNode::Leaf(p) => {
            let a = rng.random_range(0..p.0.len());
            if let UtilityValue::Int(v) = &mut p.0[a] {
                *v += 1;
            }
        }
        CensusNode::Node { branches, .. } => {
            let b = rng.random_range(0..branches.len());
            branches[b] = StateRef(rng.random_range(0..n) as u64);
        }
    }
    GameSystem::census(g.arena().clone(), nodes, g.root().0 as usize)
        .expect("valid construction")
}

/// A random one-stage simultaneous game: one node over the joint product,
/// each joint choice to its own leaf.
pub fn random_one_stage_ms(rng: &mut StdRng, max_agents: usize, max_choices: usize) -> MsGameSystem {
    let agents = rng.random_range(2..=max_agents);
    let arena = int_arena(rng, agents, max_choices);
    let product: usize = arena
        .agents()
        .map(|a| arena.choices(a).arity().expect("enumerated"))
        .product();
    let mut nodes = vec![MsNode::Node {
        chosen: (),
        branches: (1..=product).map(|i| StateRef(i as u64)).collect(),
    }];
    for _ in 0..product {
        nodes.push(MsNode::Leaf(random_payoff(rng, &arena, -9, 9)));
    }
    MsGameSystem::census(arena, nodes, 0).expect("valid construction")
}

/// A random census system over an arena with symbolic domains mixed in,
/// for serialization round trips.
pub fn random_mixed_census_game(rng: &mut StdRng, max_states: usize) -> GameSystem {
    let agents = rng.random_range(1..=3);
    let arena = mixed_arena(rng, agents, 3);
    let n = rng.random_range(1..=max_states);
    let nodes = (0..n)
        .map(|_| {
            if rng.random_bool(0.4) {
                CensusNode::Leaf(random_payoff(rng, &arena, -9, 9))
            } else {
                let agent = AgentId(rng.random_range(0..arena.num_agents()));
                let arity = arena.choices(agent).arity().expect("enumerated");
                CensusNode::Node {
                    agent,
                    chosen: (),
                    branches: (0..arity)
                        .map(|_| StateRef(rng.random_range(0..n) as u64))
                        .collect(),
                }
            }
        })
        .collect();
    GameSystem::census(arena, nodes, 0).expect("valid construction")
}
