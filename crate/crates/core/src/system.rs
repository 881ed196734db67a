//! Game and strategy-profile coalgebras.
//!
//! A system is an arena, a root state, and an unfolding that maps each state
//! to a node view: either a leaf carrying a payoff, or an internal node
//! owned by an agent with one successor state per choice. Strategy profiles
//! are the same shape with a chosen choice recorded at every internal node;
//! the two are one generic type, `System<C>`, with `C = ()` for games and
//! `C = Choice` for profiles.
//!
//! Three presentations are supported:
//!
//! * **census** — an explicit finite table of states. Exact analyses
//!   (partition-refinement bisimulation, equilibrium checks) need this.
//! * **closure** — a pure function from state references to views. Covers
//!   infinite and ℕ-branching trees; analyses are fuel-bounded and answer
//!   `Unknown` rather than looping.
//! * **stage** — a finite template family with affine stage-indexed payoffs
//!   (see [`crate::stage`]); infinite-state but finitely presented, so the
//!   per-stage analyses stay exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{AgentId, ArenaSpec, Choice, Payoff, Pref};
use crate::stage::{self, StageFamily, StageState};

/// An opaque reference to a state of some system.
///
/// Census systems use the index of the state in their table. Closure systems
/// choose their own stable keys; stability is what makes lasso detection
/// possible, so closures should hash-cons (reuse the key for the same
/// mathematical state) on a best-effort basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateRef(pub u64);

/// Successors of an internal node, one per choice of the owning agent.
#[derive(Clone)]
pub enum BranchView {
    /// Successor per enumerated choice, parallel to the space's label list.
    Enumerated(Vec<StateRef>),
    /// Successor for every natural number.
    Naturals(Arc<dyn Fn(u64) -> StateRef + Send + Sync>),
}

impl BranchView {
    pub fn target(&self, c: Choice) -> Option<StateRef> {
        match self {
            BranchView::Enumerated(v) => v.get(c.0 as usize).copied(),
            BranchView::Naturals(f) => Some(f(c.0)),
        }
    }
}

impl fmt::Debug for BranchView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchView::Enumerated(v) => f.debug_tuple("Enumerated").field(v).finish(),
            BranchView::Naturals(_) => f.write_str("Naturals(<fn>)"),
        }
    }
}

/// One observation of a state.
#[derive(Clone, Debug)]
pub enum View<C> {
    Leaf(Payoff),
    Node {
        agent: AgentId,
        chosen: C,
        branch: BranchView,
    },
}

/// Node decorations: nothing for games, the chosen choice for profiles.
pub trait Decor: Clone + PartialEq + Eq + fmt::Debug + Send + Sync + 'static {
    fn as_choice(&self) -> Option<Choice>;
}

impl Decor for () {
    fn as_choice(&self) -> Option<Choice> {
        None
    }
}

impl Decor for Choice {
    fn as_choice(&self) -> Option<Choice> {
        Some(*self)
    }
}

/// A state in a census table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CensusNode<C> {
    Leaf(Payoff),
    Node {
        agent: AgentId,
        chosen: C,
        branches: Vec<StateRef>,
    },
}

#[derive(Clone)]
pub enum Space<C> {
    Census(Arc<Vec<CensusNode<C>>>),
    Closure(Arc<dyn Fn(StateRef) -> View<C> + Send + Sync>),
    Stage(Arc<StageFamily<C>>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("state {0} is out of range for a census of {1} states")]
    StateOutOfRange(u64, usize),
    #[error("state {state}: agent index {agent} is not in the arena")]
    BadAgent { state: u64, agent: usize },
    #[error("state {state}: census nodes need an enumerated choice space")]
    NaturalsInCensus { state: u64 },
    #[error("state {state}: expected {expected} branches, found {found}")]
    BranchArity {
        state: u64,
        expected: usize,
        found: usize,
    },
    #[error("state {state}: payoff is not in the agents' utility domains")]
    BadPayoff { state: u64 },
    #[error("state {state}: chosen choice is outside the agent's space")]
    BadChosen { state: u64 },
    #[error(transparent)]
    Stage(#[from] stage::StageError),
}

/// Facts certified at construction time, for questions the bounded analyses
/// cannot settle (e.g. a ℕ-branching gallery game known to have only finite
/// histories). Consulted only when an analysis would otherwise answer
/// `Unknown`; a definite computed verdict always wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticFact {
    pub prop: AnalyticProp,
    pub holds: bool,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticProp {
    FiniteGame,
    FiniteHistoryGame,
    FinitelyBroad,
    Convergent,
    AlwaysConvergent,
    Divergent,
}

/// A possibly-infinite game or strategy profile, lazily unfolded.
#[derive(Clone)]
pub struct System<C: Decor> {
    arena: Arc<ArenaSpec>,
    root: StateRef,
    space: Space<C>,
    analytic: Arc<Vec<AnalyticFact>>,
}

/// An extensive game.
pub type GameSystem = System<()>;
/// A strategy profile: a game with a chosen choice at every internal node.
pub type StrategySystem = System<Choice>;

impl<C: Decor> fmt::Debug for System<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.space {
            Space::Census(nodes) => format!("census[{}]", nodes.len()),
            Space::Closure(_) => "closure".to_string(),
            Space::Stage(fam) => format!("stage[{}]", fam.templates.len()),
        };
        write!(f, "System({kind}, root={})", self.root.0)
    }
}

impl<C: Decor> System<C> {
    /// Build a census system, validating every state against the arena.
    pub fn census(
        arena: Arc<ArenaSpec>,
        nodes: Vec<CensusNode<C>>,
        root: usize,
    ) -> Result<Self, SystemError> {
        let len = nodes.len();
        if root >= len {
            return Err(SystemError::StateOutOfRange(root as u64, len));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                CensusNode::Leaf(p) => {
                    if !arena.validate_payoff(p) {
                        return Err(SystemError::BadPayoff { state: i as u64 });
                    }
                }
                CensusNode::Node {
                    agent,
                    chosen,
                    branches,
                } => {
                    if agent.0 >= arena.num_agents() {
                        return Err(SystemError::BadAgent {
                            state: i as u64,
                            agent: agent.0,
                        });
                    }
                    let space = arena.choices(*agent);
                    let arity = space
                        .arity()
                        .ok_or(SystemError::NaturalsInCensus { state: i as u64 })?;
                    if branches.len() != arity {
                        return Err(SystemError::BranchArity {
                            state: i as u64,
                            expected: arity,
                            found: branches.len(),
                        });
                    }
                    for b in branches {
                        if b.0 as usize >= len {
                            return Err(SystemError::StateOutOfRange(b.0, len));
                        }
                    }
                    if let Some(c) = chosen.as_choice() {
                        if !space.contains(c) {
                            return Err(SystemError::BadChosen { state: i as u64 });
                        }
                    }
                }
            }
        }
        Ok(System {
            arena,
            root: StateRef(root as u64),
            space: Space::Census(Arc::new(nodes)),
            analytic: Arc::new(Vec::new()),
        })
    }

    /// Build a programmatic system from a pure unfolding closure.
    ///
    /// The closure must be deterministic, must produce views valid for the
    /// arena, and should give equal states equal references so that cycles
    /// can be noticed. None of this is checkable up front; it is validated
    /// where views are consumed.
    pub fn closure(
        arena: Arc<ArenaSpec>,
        root: StateRef,
        unfold: impl Fn(StateRef) -> View<C> + Send + Sync + 'static,
    ) -> Self {
        System {
            arena,
            root,
            space: Space::Closure(Arc::new(unfold)),
            analytic: Arc::new(Vec::new()),
        }
    }

    /// Build a stage-parametric system rooted at a template and stage.
    pub fn stage_family(
        family: StageFamily<C>,
        root_template: usize,
        root_stage: u64,
    ) -> Result<Self, SystemError> {
        let arena = family.arena.clone();
        family.validate(|t| match t.chosen.as_choice() {
            Some(c) => arena.choices(t.agent).contains(c),
            None => true,
        })?;
        if root_template >= family.templates.len() {
            return Err(stage::StageError::BadRoot(root_template).into());
        }
        Ok(System {
            arena,
            root: stage::pack_node(root_template, root_stage),
            space: Space::Stage(Arc::new(family)),
            analytic: Arc::new(Vec::new()),
        })
    }

    pub fn arena(&self) -> &Arc<ArenaSpec> {
        &self.arena
    }

    pub fn root(&self) -> StateRef {
        self.root
    }

    pub fn space(&self) -> &Space<C> {
        &self.space
    }

    pub fn stage(&self) -> Option<&StageFamily<C>> {
        match &self.space {
            Space::Stage(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_census(&self) -> bool {
        matches!(self.space, Space::Census(_))
    }

    /// Census or stage family: the presentations exact analyses can use.
    pub fn is_finitely_presented(&self) -> bool {
        matches!(self.space, Space::Census(_) | Space::Stage(_))
    }

    /// Attach a certified fact (see [`AnalyticFact`]).
    pub fn with_fact(mut self, prop: AnalyticProp, holds: bool, note: &str) -> Self {
        let mut facts = (*self.analytic).clone();
        facts.push(AnalyticFact {
            prop,
            holds,
            note: note.to_string(),
        });
        self.analytic = Arc::new(facts);
        self
    }

    pub fn fact(&self, prop: AnalyticProp) -> Option<&AnalyticFact> {
        self.analytic.iter().find(|f| f.prop == prop)
    }

    pub fn facts(&self) -> &[AnalyticFact] {
        &self.analytic
    }

    /// The same system observed from a different root.
    pub fn re_root(&self, state: StateRef) -> Self {
        System {
            arena: self.arena.clone(),
            root: state,
            space: self.space.clone(),
            analytic: Arc::new(Vec::new()),
        }
    }

    /// The same system with every symbolic preference replaced.
    pub fn with_symbolic_pref(&self, pref: Pref) -> Self {
        let mut out = self.clone();
        out.arena = self.arena.with_symbolic_pref(pref);
        if let Space::Stage(fam) = &self.space {
            let mut f = (**fam).clone();
            f.arena = out.arena.clone();
            out.space = Space::Stage(Arc::new(f));
        }
        out
    }

    /// Observe one state.
    pub fn view(&self, s: StateRef) -> View<C> {
        match &self.space {
            Space::Census(nodes) => {
                let node = nodes
                    .get(s.0 as usize)
                    .unwrap_or_else(|| panic!("census state {} out of range", s.0));
                match node {
                    CensusNode::Leaf(p) => View::Leaf(p.clone()),
                    CensusNode::Node {
                        agent,
                        chosen,
                        branches,
                    } => View::Node {
                        agent: *agent,
                        chosen: chosen.clone(),
                        branch: BranchView::Enumerated(branches.clone()),
                    },
                }
            }
            Space::Closure(f) => f(s),
            Space::Stage(fam) => match stage::unpack(s) {
                StageState::Leaf {
                    template,
                    edge,
                    stage,
                } => match &fam.templates[template].edges[edge] {
                    stage::StageEdge::Leaf(p) => View::Leaf(p.at(stage)),
                    stage::StageEdge::Next { .. } => {
                        panic!("leaf reference {} decodes to a continuation edge", s.0)
                    }
                },
                StageState::Node { template, stage } => {
                    let t = &fam.templates[template];
                    let branches = t
                        .edges
                        .iter()
                        .enumerate()
                        .map(|(i, e)| match e {
                            stage::StageEdge::Leaf(_) => stage::pack_leaf(template, i, stage),
                            stage::StageEdge::Next { template: t2, delta } => {
                                stage::pack_node(*t2, stage + delta)
                            }
                        })
                        .collect();
                    View::Node {
                        agent: t.agent,
                        chosen: t.chosen.clone(),
                        branch: BranchView::Enumerated(branches),
                    }
                }
            },
        }
    }

    /// Follow one choice from a state. `None` at leaves and for choices
    /// outside the space. Cheaper than materializing the full view for
    /// census and stage systems.
    pub fn step(&self, s: StateRef, c: Choice) -> Option<StateRef> {
        match &self.space {
            Space::Census(nodes) => match nodes.get(s.0 as usize)? {
                CensusNode::Leaf(_) => None,
                CensusNode::Node { branches, .. } => branches.get(c.0 as usize).copied(),
            },
            Space::Closure(f) => match f(s) {
                View::Leaf(_) => None,
                View::Node { branch, .. } => branch.target(c),
            },
            Space::Stage(fam) => match stage::unpack(s) {
                StageState::Leaf { .. } => None,
                StageState::Node { template, stage } => {
                    match fam.templates[template].edges.get(c.0 as usize)? {
                        stage::StageEdge::Leaf(_) => {
                            Some(stage::pack_leaf(template, c.0 as usize, stage))
                        }
                        stage::StageEdge::Next { template: t2, delta } => {
                            Some(stage::pack_node(*t2, stage + delta))
                        }
                    }
                }
            },
        }
    }

    /// All states reachable from the root, in breadth-first order, when the
    /// system has a census. This is the census the analyses quantify over.
    pub fn reachable(&self) -> Option<Vec<StateRef>> {
        let nodes = match &self.space {
            Space::Census(nodes) => nodes,
            _ => return None,
        };
        let mut seen = vec![false; nodes.len()];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        seen[self.root.0 as usize] = true;
        queue.push_back(self.root);
        while let Some(s) = queue.pop_front() {
            order.push(s);
            if let CensusNode::Node { branches, .. } = &nodes[s.0 as usize] {
                for &b in branches {
                    if !seen[b.0 as usize] {
                        seen[b.0 as usize] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        Some(order)
    }

    /// Truncated unfolding to the given depth. Nodes at the depth limit
    /// become continuation markers carrying their state so unfolding can
    /// resume; ℕ-branching nodes are sampled up to `nat_samples` branches
    /// and flagged as elided.
    pub fn unfold_prefix(&self, depth: u32, nat_samples: u64) -> PrefixTree {
        self.unfold_at(self.root, depth, nat_samples)
    }

    fn unfold_at(&self, s: StateRef, depth: u32, nat_samples: u64) -> PrefixTree {
        match self.view(s) {
            View::Leaf(p) => PrefixTree::Leaf(p),
            View::Node { .. } if depth == 0 => PrefixTree::Continuation(s),
            View::Node {
                agent,
                chosen,
                branch,
            } => {
                let (targets, elided): (Vec<(Choice, StateRef)>, bool) = match &branch {
                    BranchView::Enumerated(v) => (
                        v.iter()
                            .enumerate()
                            .map(|(i, t)| (Choice(i as u64), *t))
                            .collect(),
                        false,
                    ),
                    BranchView::Naturals(f) => (
                        (0..nat_samples).map(|n| (Choice(n), f(n))).collect(),
                        true,
                    ),
                };
                let branches = targets
                    .into_iter()
                    .map(|(c, t)| (c, self.unfold_at(t, depth - 1, nat_samples)))
                    .collect();
                PrefixTree::Node {
                    state: s,
                    agent,
                    chosen: chosen.as_choice(),
                    branches,
                    elided,
                }
            }
        }
    }
}

impl StrategySystem {
    /// Erase the chosen choices: the underlying game. The presentation is
    /// preserved, census included.
    pub fn game(&self) -> GameSystem {
        let space = match &self.space {
            Space::Census(nodes) => Space::Census(Arc::new(
                nodes
                    .iter()
                    .map(|n| match n {
                        CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
                        CensusNode::Node {
                            agent, branches, ..
                        } => CensusNode::Node {
                            agent: *agent,
                            chosen: (),
                            branches: branches.clone(),
                        },
                    })
                    .collect(),
            )),
            Space::Closure(f) => {
                let f = f.clone();
                Space::Closure(Arc::new(move |s| match f(s) {
                    View::Leaf(p) => View::Leaf(p),
                    View::Node { agent, branch, .. } => View::Node {
                        agent,
                        chosen: (),
                        branch,
                    },
                }) as Arc<dyn Fn(StateRef) -> View<()> + Send + Sync>)
            }
            Space::Stage(fam) => Space::Stage(Arc::new(fam.erase())),
        };
        System {
            arena: self.arena.clone(),
            root: self.root,
            space,
            analytic: Arc::new(Vec::new()),
        }
    }

    /// The chosen choice at a node state; `None` at leaves.
    pub fn chosen_at(&self, s: StateRef) -> Option<Choice> {
        match self.view(s) {
            View::Leaf(_) => None,
            View::Node { chosen, .. } => Some(chosen),
        }
    }

    /// Walk the play induced by the chosen choices.
    ///
    /// Terminates on a leaf, on a detected lasso (a state revisited on the
    /// path — for stage systems, a template revisited, which is sound
    /// because choices are per-template), or when fuel runs out. Failure to
    /// detect a cycle degrades to `Exhausted`, never to a wrong answer.
    pub fn chosen_path(&self, fuel: u64) -> ChosenPath {
        let mut steps: Vec<PathStep> = Vec::new();
        let mut visited: HashMap<u64, usize> = HashMap::new();
        let mut state = self.root;
        for _ in 0..fuel {
            let key = match &self.space {
                // lasso on templates: stages drift but behavior repeats
                Space::Stage(_) => match stage::unpack(state) {
                    StageState::Node { template, .. } => template as u64,
                    StageState::Leaf { .. } => state.0,
                },
                _ => state.0,
            };
            match self.view(state) {
                View::Leaf(p) => {
                    return ChosenPath {
                        steps,
                        end: PathEnd::Leaf(p),
                    }
                }
                View::Node {
                    agent,
                    chosen,
                    branch,
                } => {
                    if let Some(&first) = visited.get(&key) {
                        return ChosenPath {
                            steps,
                            end: PathEnd::Lasso { cycle_start: first },
                        };
                    }
                    visited.insert(key, steps.len());
                    steps.push(PathStep {
                        state,
                        agent,
                        chosen,
                    });
                    state = branch
                        .target(chosen)
                        .expect("chosen choice must lie in the branch");
                }
            }
        }
        // one more observation: fuel bounds steps, a leaf here still counts
        if let View::Leaf(p) = self.view(state) {
            return ChosenPath {
                steps,
                end: PathEnd::Leaf(p),
            };
        }
        ChosenPath {
            steps,
            end: PathEnd::Exhausted,
        }
    }

    /// The utility assignment: the payoff reached by the chosen play.
    pub fn uassign(&self, fuel: u64) -> UassignResult {
        let path = self.chosen_path(fuel);
        match path.end {
            PathEnd::Leaf(p) => UassignResult::Assigned(p),
            PathEnd::Lasso { cycle_start } => UassignResult::DivergenceDetected(Lasso {
                prefix: path.steps[..cycle_start].to_vec(),
                cycle: path.steps[cycle_start..].to_vec(),
            }),
            PathEnd::Exhausted => UassignResult::FuelExhausted(path.steps),
        }
    }
}

/// One step of a chosen play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub state: StateRef,
    pub agent: AgentId,
    pub chosen: Choice,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathEnd {
    Leaf(Payoff),
    Lasso { cycle_start: usize },
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChosenPath {
    pub steps: Vec<PathStep>,
    pub end: PathEnd,
}

/// A detected cycle on a chosen play: `prefix` then `cycle` repeating.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso {
    pub prefix: Vec<PathStep>,
    pub cycle: Vec<PathStep>,
}

impl Lasso {
    pub fn period(&self) -> usize {
        self.cycle.len()
    }
}

/// Outcome of the utility assignment on a profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UassignResult {
    Assigned(Payoff),
    DivergenceDetected(Lasso),
    FuelExhausted(Vec<PathStep>),
}

impl UassignResult {
    pub fn payoff(&self) -> Option<&Payoff> {
        match self {
            UassignResult::Assigned(p) => Some(p),
            _ => None,
        }
    }
}

/// A finite observation of a system: its unfolding truncated at a depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrefixTree {
    Leaf(Payoff),
    /// Truncation point; unfolding can resume from the carried state.
    Continuation(StateRef),
    Node {
        state: StateRef,
        agent: AgentId,
        chosen: Option<Choice>,
        branches: Vec<(Choice, PrefixTree)>,
        /// True when a ℕ-branching node was sampled rather than enumerated.
        elided: bool,
    },
}

impl PrefixTree {
    /// Restrict to a smaller depth, turning deeper nodes into continuations.
    pub fn truncate(&self, depth: u32) -> PrefixTree {
        match self {
            PrefixTree::Leaf(_) | PrefixTree::Continuation(_) => self.clone(),
            PrefixTree::Node { state, .. } if depth == 0 => PrefixTree::Continuation(*state),
            PrefixTree::Node {
                state,
                agent,
                chosen,
                branches,
                elided,
            } => PrefixTree::Node {
                state: *state,
                agent: *agent,
                chosen: *chosen,
                branches: branches
                    .iter()
                    .map(|(c, t)| (*c, t.truncate(depth - 1)))
                    .collect(),
                elided: *elided,
            },
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            PrefixTree::Leaf(_) | PrefixTree::Continuation(_) => 0,
            PrefixTree::Node { branches, .. } => {
                1 + branches.iter().map(|(_, t)| t.depth()).max().unwrap_or(0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{ChoiceSpace, UtilityDomain, UtilityValue};

    fn int_arena(names: &[&str], spaces: Vec<ChoiceSpace>) -> Arc<ArenaSpec> {
        ArenaSpec::new(
            names.iter().map(|s| s.to_string()).collect(),
            spaces,
            names.iter().map(|_| UtilityDomain::int_leq()).collect(),
        )
        .unwrap()
    }

    fn pay(vals: &[i64]) -> Payoff {
        Payoff(vals.iter().map(|&v| UtilityValue::Int(v)).collect())
    }

    /// A single leaf profile.
    fn leaf_profile(vals: &[i64]) -> StrategySystem {
        let arena = int_arena(
            &["A", "B"],
            vec![
                ChoiceSpace::Enumerated(vec!["l".into(), "r".into()]),
                ChoiceSpace::Enumerated(vec!["l".into(), "r".into()]),
            ],
        );
        System::census(arena, vec![CensusNode::Leaf(pay(vals))], 0).unwrap()
    }

    #[test]
    fn systems_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<GameSystem>();
        assert_send_sync::<StrategySystem>();
    }

    #[test]
    fn uassign_on_leaf_is_the_leaf_payoff() {
        let s = leaf_profile(&[3, 4]);
        assert_eq!(s.uassign(1), UassignResult::Assigned(pay(&[3, 4])));
        let path = s.chosen_path(1);
        assert!(path.steps.is_empty());
        assert_eq!(path.end, PathEnd::Leaf(pay(&[3, 4])));
    }

    #[test]
    fn unfold_leaf_at_depth_zero_is_a_leaf() {
        let s = leaf_profile(&[1, 2]);
        assert_eq!(s.unfold_prefix(0, 8), PrefixTree::Leaf(pay(&[1, 2])));
    }

    #[test]
    fn erasure_on_leaf_is_identity_and_idempotent() {
        let s = leaf_profile(&[1, 2]);
        let g = s.game();
        assert!(matches!(g.view(g.root()), View::Leaf(p) if p == pay(&[1, 2])));
        // census preserved
        assert_eq!(g.reachable().unwrap().len(), 1);
    }

    #[test]
    fn census_validation_rejects_dangling_branches() {
        let arena = int_arena(
            &["A"],
            vec![ChoiceSpace::Enumerated(vec!["l".into(), "r".into()])],
        );
        let err = System::<Choice>::census(
            arena,
            vec![CensusNode::Node {
                agent: AgentId(0),
                chosen: Choice(0),
                branches: vec![StateRef(5), StateRef(0)],
            }],
            0,
        )
        .unwrap_err();
        assert_eq!(err, SystemError::StateOutOfRange(5, 1));
    }

    #[test]
    fn census_validation_rejects_partial_branch_maps() {
        let arena = int_arena(
            &["A"],
            vec![ChoiceSpace::Enumerated(vec!["l".into(), "r".into()])],
        );
        let err = System::<Choice>::census(
            arena,
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: Choice(0),
                    branches: vec![StateRef(1)],
                },
                CensusNode::Leaf(pay(&[0])),
            ],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, SystemError::BranchArity { .. }));
    }

    #[test]
    fn chosen_path_detects_self_loop() {
        let arena = int_arena(
            &["A"],
            vec![ChoiceSpace::Enumerated(vec!["stay".into(), "out".into()])],
        );
        let s = System::census(
            arena,
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: Choice(0),
                    branches: vec![StateRef(0), StateRef(1)],
                },
                CensusNode::Leaf(pay(&[7])),
            ],
            0,
        )
        .unwrap();
        match s.uassign(100) {
            UassignResult::DivergenceDetected(lasso) => {
                assert_eq!(lasso.period(), 1);
                assert!(lasso.prefix.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn unfold_restriction_property() {
        // a 3-state chain
        let arena = int_arena(&["A"], vec![ChoiceSpace::Enumerated(vec!["go".into()])]);
        let s = System::<()>::census(
            arena,
            vec![
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(1)],
                },
                CensusNode::Node {
                    agent: AgentId(0),
                    chosen: (),
                    branches: vec![StateRef(2)],
                },
                CensusNode::Leaf(pay(&[1])),
            ],
            0,
        )
        .unwrap();
        for d in 0..4 {
            assert_eq!(s.unfold_prefix(d + 1, 8).truncate(d), s.unfold_prefix(d, 8));
        }
    }
}
