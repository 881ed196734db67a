//! Stage-parametric systems: a finite set of node templates indexed by a
//! stage counter, with leaf payoffs affine in the stage.
//!
//! This presents infinite-state games such as the dollar auction (stopping
//! at stage `n` pays the stopper `-n` and the opponent `100 - n`) with
//! finitely many templates, so that questions quantified over every stage —
//! divergence of a profile, the subgame-perfect-equilibrium condition at
//! every stage — reduce to finite checks on templates and affine
//! inequalities.
//!
//! Stage deltas are nonnegative: following an edge never rewinds the
//! counter. Utility domains must be integer-valued so payoffs can be affine.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{AgentId, ArenaSpec, Choice, Payoff, UtilityValue, UtilityValues};
use crate::system::StateRef;

/// An integer utility as a function of the stage: `slope * n + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineUtility {
    pub slope: i64,
    pub intercept: i64,
}

impl AffineUtility {
    pub fn constant(v: i64) -> Self {
        AffineUtility {
            slope: 0,
            intercept: v,
        }
    }

    pub fn at(&self, stage: u64) -> i64 {
        self.slope * stage as i64 + self.intercept
    }

    /// The same utility observed `delta` stages later: `n ↦ value(n + delta)`.
    pub fn shifted(&self, delta: u64) -> Self {
        AffineUtility {
            slope: self.slope,
            intercept: self.intercept + self.slope * delta as i64,
        }
    }

    /// Does `self(n) <= other(n)` hold for every `n >= from_stage`?
    /// On failure returns the smallest such `n` violating the inequality.
    pub fn leq_from(&self, other: &AffineUtility, from_stage: u64) -> Result<(), u64> {
        let ds = other.slope - self.slope;
        let db = other.intercept - self.intercept;
        // need ds*n + db >= 0 for all n >= from_stage
        let at = |n: u64| ds * n as i64 + db;
        if at(from_stage) < 0 {
            return Err(from_stage);
        }
        if ds >= 0 {
            return Ok(());
        }
        // decreasing: first violation at the smallest n with ds*n + db < 0
        let n = (db / -ds) as u64 + 1;
        Err(n.max(from_stage))
    }
}

impl fmt::Display for AffineUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slope {
            0 => write!(f, "{}", self.intercept),
            1 => write!(f, "n{:+}", self.intercept),
            -1 => write!(f, "-n{:+}", self.intercept),
            s => write!(f, "{}n{:+}", s, self.intercept),
        }
    }
}

/// Per-agent affine payoff at a stage-parametric leaf.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinePayoff(pub Vec<AffineUtility>);

impl AffinePayoff {
    pub fn at(&self, stage: u64) -> Payoff {
        Payoff(self.0.iter().map(|u| UtilityValue::Int(u.at(stage))).collect())
    }

    pub fn shifted(&self, delta: u64) -> Self {
        AffinePayoff(self.0.iter().map(|u| u.shifted(delta)).collect())
    }

    pub fn get(&self, a: AgentId) -> &AffineUtility {
        &self.0[a.0]
    }
}

/// One outgoing edge of a template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageEdge {
    /// The game ends; the payoff is evaluated at the stage the edge is taken.
    Leaf(AffinePayoff),
    /// Continue to another template, advancing the stage by `delta`.
    Next { template: usize, delta: u64 },
}

/// A node template. `chosen` is `()` for games and a `Choice` for profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageTemplate<C> {
    pub agent: AgentId,
    pub chosen: C,
    pub edges: Vec<StageEdge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StageError {
    #[error("stage families need at least one template")]
    NoTemplates,
    #[error("template {0} references template {1}, which does not exist")]
    DanglingTemplate(usize, usize),
    #[error("template {0}: agent must have an enumerated choice space")]
    NaturalsAgent(usize),
    #[error("template {template}: expected {expected} edges, found {found}")]
    EdgeArity {
        template: usize,
        expected: usize,
        found: usize,
    },
    #[error("stage payoffs require integer utility domains for every agent")]
    NonIntegerUtilities,
    #[error("template {0}: affine payoff does not cover every agent")]
    PayoffArity(usize),
    #[error("template {0}: chosen choice out of the agent's space")]
    BadChosen(usize),
    #[error("root template {0} does not exist")]
    BadRoot(usize),
    #[error("too many templates or choices to pack into state references")]
    PackingOverflow,
}

/// A finite family of stage-indexed templates over an arena.
#[derive(Clone, Debug)]
pub struct StageFamily<C> {
    pub arena: Arc<ArenaSpec>,
    pub templates: Vec<StageTemplate<C>>,
}

// StateRef packing: [tag:1][template:7][choice:8][stage:48]
const STAGE_BITS: u32 = 48;
const CHOICE_BITS: u32 = 8;
const TEMPLATE_BITS: u32 = 7;
const STAGE_MASK: u64 = (1 << STAGE_BITS) - 1;

/// Decoded form of a stage-system state reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageState {
    Node { template: usize, stage: u64 },
    Leaf { template: usize, edge: usize, stage: u64 },
}

pub fn pack_node(template: usize, stage: u64) -> StateRef {
    debug_assert!(template < (1 << TEMPLATE_BITS) && stage <= STAGE_MASK);
    StateRef(((template as u64) << (CHOICE_BITS + STAGE_BITS)) | (stage & STAGE_MASK))
}

pub fn pack_leaf(template: usize, edge: usize, stage: u64) -> StateRef {
    debug_assert!(template < (1 << TEMPLATE_BITS) && edge < (1 << CHOICE_BITS));
    StateRef(
        (1 << 63)
            | ((template as u64) << (CHOICE_BITS + STAGE_BITS))
            | ((edge as u64) << STAGE_BITS)
            | (stage & STAGE_MASK),
    )
}

pub fn unpack(r: StateRef) -> StageState {
    let stage = r.0 & STAGE_MASK;
    let edge = ((r.0 >> STAGE_BITS) & ((1 << CHOICE_BITS) - 1)) as usize;
    let template = ((r.0 >> (CHOICE_BITS + STAGE_BITS)) & ((1 << TEMPLATE_BITS) - 1)) as usize;
    if r.0 >> 63 == 1 {
        StageState::Leaf {
            template,
            edge,
            stage,
        }
    } else {
        StageState::Node { template, stage }
    }
}

impl<C: Clone + PartialEq + fmt::Debug> StageFamily<C> {
    /// Validate the family against its arena. `chosen_check` validates the
    /// decoration (`()` for games, a choice within the space for profiles).
    pub(crate) fn validate(
        &self,
        chosen_check: impl Fn(&StageTemplate<C>) -> bool,
    ) -> Result<(), StageError> {
        if self.templates.is_empty() {
            return Err(StageError::NoTemplates);
        }
        if self.templates.len() > (1 << TEMPLATE_BITS) {
            return Err(StageError::PackingOverflow);
        }
        for a in self.arena.agents() {
            if self.arena.utility(a).values != UtilityValues::Integers {
                return Err(StageError::NonIntegerUtilities);
            }
        }
        for (i, t) in self.templates.iter().enumerate() {
            let space = self.arena.choices(t.agent);
            let arity = space.arity().ok_or(StageError::NaturalsAgent(i))?;
            if arity > (1 << CHOICE_BITS) {
                return Err(StageError::PackingOverflow);
            }
            if t.edges.len() != arity {
                return Err(StageError::EdgeArity {
                    template: i,
                    expected: arity,
                    found: t.edges.len(),
                });
            }
            for e in &t.edges {
                match e {
                    StageEdge::Leaf(p) => {
                        if p.0.len() != self.arena.num_agents() {
                            return Err(StageError::PayoffArity(i));
                        }
                    }
                    StageEdge::Next { template, .. } => {
                        if *template >= self.templates.len() {
                            return Err(StageError::DanglingTemplate(i, *template));
                        }
                    }
                }
            }
            if !chosen_check(t) {
                return Err(StageError::BadChosen(i));
            }
        }
        Ok(())
    }

    /// Minimal stage at which each template can occur, starting from the
    /// given root. Edges only ever increase the stage, so a breadth-first
    /// relaxation converges. Unreachable templates get `None`.
    pub fn min_stages(&self, root_template: usize, root_stage: u64) -> Vec<Option<u64>> {
        let mut best: Vec<Option<u64>> = vec![None; self.templates.len()];
        best[root_template] = Some(root_stage);
        let mut work = vec![root_template];
        while let Some(t) = work.pop() {
            let stage = best[t].unwrap();
            for e in &self.templates[t].edges {
                if let StageEdge::Next { template, delta } = e {
                    let cand = stage + delta;
                    if best[*template].is_none_or(|b| cand < b) {
                        best[*template] = Some(cand);
                        work.push(*template);
                    }
                }
            }
        }
        best
    }

    /// Template indices reachable from `root_template` through every edge.
    pub fn reachable_templates(&self, root_template: usize) -> Vec<usize> {
        let mut seen = vec![false; self.templates.len()];
        seen[root_template] = true;
        let mut order = vec![root_template];
        let mut i = 0;
        while i < order.len() {
            for e in &self.templates[order[i]].edges {
                if let StageEdge::Next { template, .. } = e {
                    if !seen[*template] {
                        seen[*template] = true;
                        order.push(*template);
                    }
                }
            }
            i += 1;
        }
        order
    }

    /// Is there a template cycle reachable from `root_template`? Returns the
    /// cycle as a template sequence if so. A reachable cycle means the
    /// concrete game has unboundedly long histories (stages only grow, so a
    /// template cycle never closes back on a concrete state, it keeps
    /// producing fresh ones).
    pub fn find_template_cycle(&self, root_template: usize) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Grey,
            Black,
        }
        let mut color = vec![Color::White; self.templates.len()];
        let mut stack: Vec<(usize, usize)> = vec![(root_template, 0)];
        let mut path = vec![root_template];
        color[root_template] = Color::Grey;
        while let Some(&mut (t, ref mut cursor)) = stack.last_mut() {
            let mut next = None;
            for (off, e) in self.templates[t].edges[*cursor..].iter().enumerate() {
                if let StageEdge::Next { template, .. } = e {
                    next = Some((*cursor + off + 1, *template));
                    break;
                }
            }
            match next {
                Some((new_cursor, target)) => {
                    *cursor = new_cursor;
                    match color[target] {
                        Color::Grey => {
                            let start = path.iter().position(|&p| p == target).unwrap();
                            let mut cycle = path[start..].to_vec();
                            cycle.push(target);
                            return Some(cycle);
                        }
                        Color::White => {
                            color[target] = Color::Grey;
                            path.push(target);
                            stack.push((target, 0));
                        }
                        Color::Black => {}
                    }
                }
                None => {
                    color[t] = Color::Black;
                    stack.pop();
                    path.pop();
                }
            }
        }
        None
    }
}

impl StageFamily<Choice> {
    /// Erase the chosen choices, producing the underlying game family.
    pub fn erase(&self) -> StageFamily<()> {
        StageFamily {
            arena: self.arena.clone(),
            templates: self
                .templates
                .iter()
                .map(|t| StageTemplate {
                    agent: t.agent,
                    chosen: (),
                    edges: t.edges.clone(),
                })
                .collect(),
        }
    }

    /// Follow chosen edges from a template. Either the walk reaches a leaf,
    /// and the payoff is affine in the entry stage, or a template repeats,
    /// which certifies divergence at every stage (chosen choices depend only
    /// on the template).
    pub fn chosen_walk(&self, from_template: usize) -> StageWalk {
        let mut steps: Vec<(usize, Choice)> = Vec::new();
        let mut seen: Vec<Option<usize>> = vec![None; self.templates.len()];
        let mut t = from_template;
        let mut delta_sum: u64 = 0;
        loop {
            if let Some(first) = seen[t] {
                return StageWalk::Cycles {
                    steps,
                    cycle_start: first,
                };
            }
            seen[t] = Some(steps.len());
            let template = &self.templates[t];
            let c = template.chosen;
            steps.push((t, c));
            match &template.edges[c.0 as usize] {
                StageEdge::Leaf(p) => {
                    return StageWalk::Converges {
                        steps,
                        payoff: p.shifted(delta_sum),
                    };
                }
                StageEdge::Next { template, delta } => {
                    delta_sum += delta;
                    t = *template;
                }
            }
        }
    }

    /// Affine payoff of the chosen play from a template, as a function of
    /// the stage at which the template is entered. `None` when the chosen
    /// play diverges.
    pub fn chosen_payoff(&self, from_template: usize) -> Option<AffinePayoff> {
        match self.chosen_walk(from_template) {
            StageWalk::Converges { payoff, .. } => Some(payoff),
            StageWalk::Cycles { .. } => None,
        }
    }
}

/// Result of following chosen edges through the template graph.
#[derive(Clone, Debug)]
pub enum StageWalk {
    Converges {
        steps: Vec<(usize, Choice)>,
        /// Payoff as a function of the stage at the walk's starting template.
        payoff: AffinePayoff,
    },
    Cycles {
        steps: Vec<(usize, Choice)>,
        /// Index into `steps` where the repeated template first occurred.
        cycle_start: usize,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_eval_and_shift() {
        let u = AffineUtility {
            slope: -1,
            intercept: 100,
        };
        assert_eq!(u.at(0), 100);
        assert_eq!(u.at(7), 93);
        let v = u.shifted(3); // n ↦ 100 - (n + 3)
        assert_eq!(v.at(0), 97);
        assert_eq!(v.at(4), u.at(7));
    }

    #[test]
    fn affine_leq_from_all_cases() {
        let c = AffineUtility::constant(0);
        // 0 <= n + 1 for all n >= 0
        assert_eq!(
            c.leq_from(&AffineUtility { slope: 1, intercept: 1 }, 0),
            Ok(())
        );
        // 0 <= 5 - n fails first at n = 6
        assert_eq!(
            c.leq_from(&AffineUtility { slope: -1, intercept: 5 }, 0),
            Err(6)
        );
        // same slope: intercept comparison
        assert_eq!(
            AffineUtility { slope: -1, intercept: 0 }
                .leq_from(&AffineUtility { slope: -1, intercept: -2 }, 0),
            Err(0)
        );
        // violation already at the floor stage
        assert_eq!(
            c.leq_from(&AffineUtility { slope: -1, intercept: 5 }, 9),
            Err(9)
        );
    }

    #[test]
    fn pack_unpack_round_trip() {
        let r = pack_node(3, 12345);
        assert_eq!(
            unpack(r),
            StageState::Node {
                template: 3,
                stage: 12345
            }
        );
        let l = pack_leaf(5, 1, 7);
        assert_eq!(
            unpack(l),
            StageState::Leaf {
                template: 5,
                edge: 1,
                stage: 7
            }
        );
    }
}
