//! Bisimulation equality on games and profiles.
//!
//! The coinductive equality identifies systems with the same constructor at
//! the root (same leaf payoff, or same owning agent — and same chosen choice
//! for profiles) and recursively equal branches. Two routes are implemented:
//!
//! * [`bisim_bounded`] compares depth-limited unfoldings of arbitrary
//!   systems and reports the shortest differing path;
//! * [`bisim_exact`] decides full bisimilarity of finite-state (census)
//!   systems by partition refinement over the disjoint union of their
//!   reachable states, with leaf payoffs and owning agents as the initial
//!   blocks and branch-target blocks as the refinement signature.
//!
//! On census systems the two routes agree once the bound reaches the product
//! of the census sizes.

use std::collections::{BTreeMap, HashSet, VecDeque};

use thiserror::Error;

use crate::arena::{Choice, Payoff};
use crate::system::{BranchView, Decor, StateRef, System, View};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BisimError {
    #[error("the two systems have different arenas")]
    ArenaMismatch,
    #[error("exact bisimulation needs a census on both systems")]
    NoCensus,
    #[error("exhaustive comparison hit a ℕ-branching node")]
    UnboundedBranch,
}

/// How to treat ℕ-branching nodes during bounded comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NatPolicy {
    /// Compare the first `n` branches and flag the result as sampled.
    Sample(u64),
    /// Refuse: report [`BisimError::UnboundedBranch`].
    Exhaustive,
}

/// Outcome of a bounded comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bounded {
    EqualUpTo {
        depth: u32,
        /// True when some ℕ-branching node was compared by sampling only.
        nat_sampled: bool,
    },
    /// The shortest differing path, lexicographically least among those of
    /// equal length.
    DifferAt(Vec<Choice>),
}

impl Bounded {
    pub fn is_equal(&self) -> bool {
        matches!(self, Bounded::EqualUpTo { .. })
    }
}

/// Compare the depth-`depth` unfoldings of two systems node for node.
pub fn bisim_bounded<C: Decor>(
    a: &System<C>,
    b: &System<C>,
    depth: u32,
    nat: NatPolicy,
) -> Result<Bounded, BisimError> {
    if a.arena() != b.arena() {
        return Err(BisimError::ArenaMismatch);
    }
    let mut nat_sampled = false;
    // (state in a, state in b, path, remaining depth)
    let mut queue: VecDeque<(StateRef, StateRef, Vec<Choice>, u32)> = VecDeque::new();
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    queue.push_back((a.root(), b.root(), Vec::new(), depth));
    while let Some((sa, sb, path, rem)) = queue.pop_front() {
        if !seen.insert((sa.0, sb.0)) {
            // first visit had the greater remaining depth (breadth-first),
            // so everything this revisit could explore is already covered
            continue;
        }
        match (a.view(sa), b.view(sb)) {
            (View::Leaf(pa), View::Leaf(pb)) => {
                // leaf equality is exact value equality per agent
                if pa != pb {
                    return Ok(Bounded::DifferAt(path));
                }
            }
            (View::Leaf(_), View::Node { .. }) | (View::Node { .. }, View::Leaf(_)) => {
                return Ok(Bounded::DifferAt(path));
            }
            (
                View::Node {
                    agent: aa,
                    chosen: ca,
                    branch: ba,
                },
                View::Node {
                    agent: ab,
                    chosen: cb,
                    branch: bb,
                },
            ) => {
                if aa != ab || ca != cb {
                    return Ok(Bounded::DifferAt(path));
                }
                if rem == 0 {
                    continue;
                }
                let choices: Vec<Choice> = match (&ba, &bb) {
                    (BranchView::Enumerated(va), BranchView::Enumerated(_)) => {
                        (0..va.len() as u64).map(Choice).collect()
                    }
                    _ => match nat {
                        NatPolicy::Exhaustive => return Err(BisimError::UnboundedBranch),
                        NatPolicy::Sample(n) => {
                            nat_sampled = true;
                            (0..n).map(Choice).collect()
                        }
                    },
                };
                for c in choices {
                    let ta = ba.target(c).expect("branch total on the space");
                    let tb = bb.target(c).expect("branch total on the space");
                    let mut p = path.clone();
                    p.push(c);
                    queue.push_back((ta, tb, p, rem - 1));
                }
            }
        }
    }
    Ok(Bounded::EqualUpTo { depth, nat_sampled })
}

/// Initial-partition key of a state: its local observation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum LocalKey {
    Leaf(Payoff),
    Node {
        agent: usize,
        chosen: Option<Choice>,
    },
}

/// Decide full bisimilarity of two census systems.
pub fn bisim_exact<C: Decor>(a: &System<C>, b: &System<C>) -> Result<bool, BisimError> {
    if a.arena() != b.arena() {
        return Err(BisimError::ArenaMismatch);
    }
    let (ra, rb) = match (a.reachable(), b.reachable()) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => return Err(BisimError::NoCensus),
    };
    // the disjoint union: (side, state)
    let states: Vec<(u8, StateRef)> = ra
        .iter()
        .map(|&s| (0u8, s))
        .chain(rb.iter().map(|&s| (1u8, s)))
        .collect();
    let view = |side: u8, s: StateRef| if side == 0 { a.view(s) } else { b.view(s) };

    // initial partition by local observation
    let mut block_of: BTreeMap<(u8, u64), usize> = BTreeMap::new();
    {
        let mut by_key: BTreeMap<LocalKey, usize> = BTreeMap::new();
        for &(side, s) in &states {
            let key = match view(side, s) {
                View::Leaf(p) => LocalKey::Leaf(p),
                View::Node { agent, chosen, .. } => LocalKey::Node {
                    agent: agent.0,
                    chosen: chosen.as_choice(),
                },
            };
            let next_id = by_key.len();
            let id = *by_key.entry(key).or_insert(next_id);
            block_of.insert((side, s.0), id);
        }
    }

    // refine: split blocks by the branch-target block signature
    loop {
        let mut by_sig: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut next: BTreeMap<(u8, u64), usize> = BTreeMap::new();
        for &(side, s) in &states {
            let own = block_of[&(side, s.0)];
            let sig: Vec<usize> = match view(side, s) {
                View::Leaf(_) => Vec::new(),
                View::Node { branch, .. } => match branch {
                    BranchView::Enumerated(targets) => targets
                        .iter()
                        .map(|t| block_of[&(side, t.0)])
                        .collect(),
                    BranchView::Naturals(_) => unreachable!("census nodes are enumerated"),
                },
            };
            let next_id = by_sig.len();
            let id = *by_sig.entry((own, sig)).or_insert(next_id);
            next.insert((side, s.0), id);
        }
        let stable = {
            // same number of blocks means no split happened
            let old_count = block_of.values().collect::<HashSet<_>>().len();
            by_sig.len() == old_count
        };
        block_of = next;
        if stable {
            break;
        }
    }
    Ok(block_of[&(0, a.root().0)] == block_of[&(1, b.root().0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{AgentId, ArenaSpec, ChoiceSpace, UtilityDomain, UtilityValue};
    use crate::system::CensusNode;
    use std::sync::Arc;

    fn arena() -> Arc<ArenaSpec> {
        ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Enumerated(vec!["l".into(), "r".into()])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap()
    }

    fn leaf(v: i64) -> CensusNode<()> {
        CensusNode::Leaf(Payoff(vec![UtilityValue::Int(v)]))
    }

    fn node(l: u64, r: u64) -> CensusNode<()> {
        CensusNode::Node {
            agent: AgentId(0),
            chosen: (),
            branches: vec![StateRef(l), StateRef(r)],
        }
    }

    /// Two presentations of the same regular tree: a tight loop and its
    /// two-fold unrolling.
    #[test]
    fn loop_and_unrolling_are_bisimilar() {
        let tight = System::census(arena(), vec![node(1, 0), leaf(7)], 0).unwrap();
        let unrolled = System::census(
            arena(),
            vec![node(1, 2), leaf(7), node(1, 0)],
            0,
        )
        .unwrap();
        assert!(bisim_exact(&tight, &unrolled).unwrap());
        // bounded agrees at the product depth
        let d = (tight.reachable().unwrap().len() * unrolled.reachable().unwrap().len()) as u32;
        assert!(bisim_bounded(&tight, &unrolled, d, NatPolicy::Sample(8))
            .unwrap()
            .is_equal());
    }

    #[test]
    fn differing_leaf_payoffs_split_the_initial_partition() {
        let g1 = System::census(arena(), vec![node(1, 2), leaf(1), leaf(2)], 0).unwrap();
        let g2 = System::census(arena(), vec![node(1, 2), leaf(2), leaf(1)], 0).unwrap();
        assert!(!bisim_exact(&g1, &g2).unwrap());
        assert_eq!(
            bisim_bounded(&g1, &g2, 4, NatPolicy::Sample(8)).unwrap(),
            Bounded::DifferAt(vec![Choice(0)])
        );
    }

    #[test]
    fn reflexive_on_anything() {
        let g = System::census(arena(), vec![node(1, 0), leaf(0)], 0).unwrap();
        assert!(bisim_exact(&g, &g).unwrap());
        assert!(bisim_bounded(&g, &g, 32, NatPolicy::Sample(8))
            .unwrap()
            .is_equal());
    }

    #[test]
    fn profiles_compare_chosen_choices_too() {
        let mk = |chosen: u64| {
            System::census(
                arena(),
                vec![
                    CensusNode::Node {
                        agent: AgentId(0),
                        chosen: Choice(chosen),
                        branches: vec![StateRef(1), StateRef(1)],
                    },
                    CensusNode::Leaf(Payoff(vec![UtilityValue::Int(0)])),
                ],
                0,
            )
            .unwrap()
        };
        let s_l = mk(0);
        let s_r = mk(1);
        assert!(!bisim_exact(&s_l, &s_r).unwrap());
        // ...but their erasures are the same game
        assert!(bisim_exact(&s_l.game(), &s_r.game()).unwrap());
    }

    #[test]
    fn arena_mismatch_is_an_error() {
        let other = ArenaSpec::new(
            vec!["B".into()],
            vec![ChoiceSpace::Enumerated(vec!["l".into(), "r".into()])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap();
        let g1 = System::census(arena(), vec![leaf(0)], 0).unwrap();
        let g2 = System::census(other, vec![leaf(0)], 0).unwrap();
        assert_eq!(bisim_exact(&g1, &g2).unwrap_err(), BisimError::ArenaMismatch);
    }

    #[test]
    fn exhaustive_policy_refuses_naturals() {
        let nat_arena = ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Naturals],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap();
        let mk = || {
            System::<()>::closure(nat_arena.clone(), StateRef(0), |s| {
                if s.0 == 0 {
                    View::Node {
                        agent: AgentId(0),
                        chosen: (),
                        branch: BranchView::Naturals(Arc::new(|_| StateRef(1))),
                    }
                } else {
                    View::Leaf(Payoff(vec![UtilityValue::Int(0)]))
                }
            })
        };
        assert_eq!(
            bisim_bounded(&mk(), &mk(), 3, NatPolicy::Exhaustive).unwrap_err(),
            BisimError::UnboundedBranch
        );
        let res = bisim_bounded(&mk(), &mk(), 3, NatPolicy::Sample(4)).unwrap();
        assert_eq!(
            res,
            Bounded::EqualUpTo {
                depth: 3,
                nat_sampled: true
            }
        );
    }
}
