//! Multi-stage games: every agent moves simultaneously at every node.
//!
//! Nodes do not belong to an agent; branches are indexed by joint choices,
//! one choice per agent, ranked lexicographically in agent order. The
//! paper's type comes with no equilibrium notion; profiles and the utility
//! assignment here are minimal plumbing, plus [`sequentialize`], a
//! beyond-the-source transform that turns a one-shot simultaneous node into
//! a chain of per-agent nodes with the picks resolved at the chain's end.
//! The sequentialized game is perfect-information — later agents in the
//! order see earlier picks — so no claim is made that equilibrium analysis
//! on it matches any simultaneous solution concept; what is preserved is
//! the outcome function: every joint choice reaches the same payoff.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{AgentId, ArenaSpec, Choice, Payoff};
use crate::system::{CensusNode, GameSystem, StateRef};

/// One choice per agent, in agent order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointChoice(pub Vec<Choice>);

impl JointChoice {
    /// Rank in the lexicographic enumeration of the product space
    /// (agent 0 most significant).
    pub fn rank(&self, arities: &[usize]) -> usize {
        let mut r = 0usize;
        for (c, a) in self.0.iter().zip(arities) {
            r = r * a + c.0 as usize;
        }
        r
    }

    pub fn unrank(mut rank: usize, arities: &[usize]) -> JointChoice {
        let mut out = vec![Choice(0); arities.len()];
        for i in (0..arities.len()).rev() {
            out[i] = Choice((rank % arities[i]) as u64);
            rank /= arities[i];
        }
        JointChoice(out)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MsError {
    #[error("multi-stage systems need enumerated choice spaces for every agent")]
    NaturalsNotSupported,
    #[error("state {0} is out of range for a census of {1} states")]
    StateOutOfRange(u64, usize),
    #[error("state {state}: expected {expected} joint branches, found {found}")]
    BranchArity {
        state: u64,
        expected: usize,
        found: usize,
    },
    #[error("state {state}: payoff is not in the agents' utility domains")]
    BadPayoff { state: u64 },
    #[error("state {state}: chosen joint choice is outside the product space")]
    BadChosen { state: u64 },
    #[error("the agent order must be a permutation of the arena's agents")]
    InvalidOrder,
}

/// A multi-stage census state. Branches are indexed by joint-choice rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MsNode<C> {
    Leaf(Payoff),
    Node { chosen: C, branches: Vec<StateRef> },
}

/// A finite-state multi-stage system; `C` is `()` for games and
/// [`JointChoice`] for profiles.
#[derive(Clone, Debug)]
pub struct MsSystem<C> {
    arena: Arc<ArenaSpec>,
    nodes: Arc<Vec<MsNode<C>>>,
    root: StateRef,
}

pub type MsGameSystem = MsSystem<()>;
pub type MsStrategySystem = MsSystem<JointChoice>;

pub trait MsDecor: Clone + PartialEq + std::fmt::Debug {
    fn check(&self, arena: &ArenaSpec) -> bool;
    fn as_joint(&self) -> Option<JointChoice>;
}

impl MsDecor for () {
    fn check(&self, _arena: &ArenaSpec) -> bool {
        true
    }
    fn as_joint(&self) -> Option<JointChoice> {
        None
    }
}

impl MsDecor for JointChoice {
    fn check(&self, arena: &ArenaSpec) -> bool {
        self.0.len() == arena.num_agents()
            && arena
                .agents()
                .all(|a| arena.choices(a).contains(self.0[a.0]))
    }
    fn as_joint(&self) -> Option<JointChoice> {
        Some(self.clone())
    }
}

impl<C: MsDecor> MsSystem<C> {
    pub fn census(
        arena: Arc<ArenaSpec>,
        nodes: Vec<MsNode<C>>,
        root: usize,
    ) -> Result<Self, MsError> {
        let arities = product_arities(&arena)?;
        let product: usize = arities.iter().product();
        let len = nodes.len();
        if root >= len {
            return Err(MsError::StateOutOfRange(root as u64, len));
        }
        for (i, n) in nodes.iter().enumerate() {
            match n {
                MsNode::Leaf(p) => {
                    if !arena.validate_payoff(p) {
                        return Err(MsError::BadPayoff { state: i as u64 });
                    }
                }
                MsNode::Node { chosen, branches } => {
                    if branches.len() != product {
                        return Err(MsError::BranchArity {
                            state: i as u64,
                            expected: product,
                            found: branches.len(),
                        });
                    }
                    for b in branches {
                        if b.0 as usize >= len {
                            return Err(MsError::StateOutOfRange(b.0, len));
                        }
                    }
                    if !chosen.check(&arena) {
                        return Err(MsError::BadChosen { state: i as u64 });
                    }
                }
            }
        }
        Ok(MsSystem {
            arena,
            nodes: Arc::new(nodes),
            root: StateRef(root as u64),
        })
    }

    pub fn arena(&self) -> &Arc<ArenaSpec> {
        &self.arena
    }

    pub fn root(&self) -> StateRef {
        self.root
    }

    pub fn node(&self, s: StateRef) -> &MsNode<C> {
        &self.nodes[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Truncated unfolding; branches carry their joint choices.
    pub fn unfold_prefix(&self, depth: u32) -> MsPrefixTree {
        self.unfold_at(self.root, depth)
    }

    fn unfold_at(&self, s: StateRef, depth: u32) -> MsPrefixTree {
        let arities = product_arities(&self.arena).expect("validated at construction");
        match self.node(s) {
            MsNode::Leaf(p) => MsPrefixTree::Leaf(p.clone()),
            MsNode::Node { .. } if depth == 0 => MsPrefixTree::Continuation(s),
            MsNode::Node { chosen, branches } => MsPrefixTree::Node {
                state: s,
                chosen: chosen.as_joint(),
                branches: branches
                    .iter()
                    .enumerate()
                    .map(|(r, b)| (JointChoice::unrank(r, &arities), self.unfold_at(*b, depth - 1)))
                    .collect(),
            },
        }
    }
}

impl MsStrategySystem {
    pub fn game(&self) -> MsGameSystem {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                MsNode::Leaf(p) => MsNode::Leaf(p.clone()),
                MsNode::Node { branches, .. } => MsNode::Node {
                    chosen: (),
                    branches: branches.clone(),
                },
            })
            .collect();
        MsSystem::census(self.arena.clone(), nodes, self.root.0 as usize)
            .expect("erasure preserves validity")
    }

    /// Follow the chosen joint choices; same result taxonomy as the
    /// single-owner utility assignment.
    pub fn uassign(&self, fuel: u64) -> MsUassignResult {
        let arities = product_arities(&self.arena).expect("validated");
        let mut steps: Vec<(StateRef, JointChoice)> = Vec::new();
        let mut visited: HashMap<u64, usize> = HashMap::new();
        let mut state = self.root;
        for _ in 0..fuel {
            match self.node(state) {
                MsNode::Leaf(p) => return MsUassignResult::Assigned(p.clone()),
                MsNode::Node { chosen, branches } => {
                    if let Some(&first) = visited.get(&state.0) {
                        return MsUassignResult::DivergenceDetected {
                            prefix: steps[..first].to_vec(),
                            cycle: steps[first..].to_vec(),
                        };
                    }
                    visited.insert(state.0, steps.len());
                    steps.push((state, chosen.clone()));
                    state = branches[chosen.rank(&arities)];
                }
            }
        }
        if let MsNode::Leaf(p) = self.node(state) {
            return MsUassignResult::Assigned(p.clone());
        }
        MsUassignResult::FuelExhausted(steps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum MsUassignResult {
    Assigned(Payoff),
    DivergenceDetected {
        prefix: Vec<(StateRef, JointChoice)>,
        cycle: Vec<(StateRef, JointChoice)>,
    },
    FuelExhausted(Vec<(StateRef, JointChoice)>),
}

/// Finite observation of a multi-stage system.
#[derive(Clone, Debug, PartialEq)]
pub enum MsPrefixTree {
    Leaf(Payoff),
    Continuation(StateRef),
    Node {
        state: StateRef,
        chosen: Option<JointChoice>,
        branches: Vec<(JointChoice, MsPrefixTree)>,
    },
}

fn product_arities(arena: &ArenaSpec) -> Result<Vec<usize>, MsError> {
    arena
        .agents()
        .map(|a| {
            arena
                .choices(a)
                .arity()
                .ok_or(MsError::NaturalsNotSupported)
        })
        .collect()
}

/// Turn a multi-stage game into an extensive game: each simultaneous node
/// becomes a chain of per-agent nodes in the given order, and the
/// accumulated picks are resolved at the chain's end.
pub fn sequentialize(g: &MsGameSystem, order: &[AgentId]) -> Result<GameSystem, MsError> {
    let arena = g.arena();
    let n = arena.num_agents();
    {
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(MsError::InvalidOrder);
        }
        for a in order {
            if a.0 >= n || seen[a.0] {
                return Err(MsError::InvalidOrder);
            }
            seen[a.0] = true;
        }
    }
    let arities = product_arities(arena)?;

    // chain states: (ms state, picks so far, in order positions 0..k)
    type Key = (u64, Vec<Choice>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut rows: Vec<Key> = Vec::new();
    let mut out: Vec<Option<CensusNode<()>>> = Vec::new();
    let mut queue = std::collections::VecDeque::new();

    let intern = |key: Key,
                      rows: &mut Vec<Key>,
                      out: &mut Vec<Option<CensusNode<()>>>,
                      queue: &mut std::collections::VecDeque<usize>,
                      index: &mut HashMap<Key, usize>| {
        if let Some(&i) = index.get(&key) {
            return i;
        }
        rows.push(key.clone());
        out.push(None);
        let i = rows.len() - 1;
        index.insert(key, i);
        queue.push_back(i);
        i
    };

    let root = intern(
        (g.root().0, Vec::new()),
        &mut rows,
        &mut out,
        &mut queue,
        &mut index,
    );
    debug_assert_eq!(root, 0);
    while let Some(i) = queue.pop_front() {
        let (ms_state, picks) = rows[i].clone();
        match g.node(StateRef(ms_state)) {
            MsNode::Leaf(p) => {
                debug_assert!(picks.is_empty());
                out[i] = Some(CensusNode::Leaf(p.clone()));
            }
            MsNode::Node { branches, .. } => {
                let k = picks.len();
                let agent = order[k];
                let arity = arities[agent.0];
                let mut next = Vec::with_capacity(arity);
                for c in 0..arity {
                    let mut picks2 = picks.clone();
                    picks2.push(Choice(c as u64));
                    let key: Key = if k + 1 == n {
                        // resolve: rebuild the joint choice in agent order
                        let mut joint = vec![Choice(0); n];
                        for (pos, a) in order.iter().enumerate() {
                            joint[a.0] = picks2[pos];
                        }
                        let target = branches[JointChoice(joint).rank(&arities)];
                        (target.0, Vec::new())
                    } else {
                        (ms_state, picks2)
                    };
                    let t = intern(key, &mut rows, &mut out, &mut queue, &mut index);
                    next.push(StateRef(t as u64));
                }
                out[i] = Some(CensusNode::Node {
                    agent,
                    chosen: (),
                    branches: next,
                });
            }
        }
    }
    let nodes: Vec<CensusNode<()>> = out.into_iter().map(|n| n.unwrap()).collect();
    Ok(GameSystem::census(arena.clone(), nodes, 0).expect("sequentialization is valid"))
}

/// Walk the sequentialized game with the components of one joint choice, in
/// the order used to sequentialize. Lands on the payoff the multi-stage
/// branch reaches (used to state and test outcome preservation).
pub fn play_joint(
    seq: &GameSystem,
    order: &[AgentId],
    joint: &JointChoice,
    fuel: u64,
) -> Option<Payoff> {
    let mut state = seq.root();
    let mut steps = 0u64;
    loop {
        match seq.view(state) {
            crate::system::View::Leaf(p) => return Some(p),
            crate::system::View::Node { agent, branch, .. } => {
                let pos = order.iter().position(|a| *a == agent)?;
                let c = joint.0[order[pos].0];
                state = branch.target(c)?;
                steps += 1;
                if steps > fuel {
                    return None;
                }
                // after a full chain the next node restarts the order; one
                // joint choice only decides a single stage
                if pos + 1 == order.len() {
                    return match seq.view(state) {
                        crate::system::View::Leaf(p) => Some(p),
                        _ => None,
                    };
                }
            }
        }
    }
}
