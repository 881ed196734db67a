//! The ambient signature of a game: agents, per-agent choice spaces, and
//! per-agent preordered utility domains.
//!
//! Choices and utilities are dependent on the agent. At run time this is
//! enforced by validating every choice label and utility value against the
//! owning agent's space at construction; a violation is an error, never a
//! latent state.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an agent in the arena's agent list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A choice of some agent.
///
/// For an `Enumerated` space the value is the index into the label list; for
/// a `Naturals` space it is the natural number itself. Canonical choice order
/// is numeric order on this value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Choice(pub u64);

/// The set of choices available to one agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoiceSpace {
    /// A nonempty, explicitly listed set of choice labels.
    Enumerated(Vec<String>),
    /// All nonnegative integers.
    Naturals,
}

impl ChoiceSpace {
    pub fn is_enumerated(&self) -> bool {
        matches!(self, ChoiceSpace::Enumerated(_))
    }

    /// Number of choices, or `None` for `Naturals`.
    pub fn arity(&self) -> Option<usize> {
        match self {
            ChoiceSpace::Enumerated(labels) => Some(labels.len()),
            ChoiceSpace::Naturals => None,
        }
    }

    pub fn contains(&self, c: Choice) -> bool {
        match self {
            ChoiceSpace::Enumerated(labels) => (c.0 as usize) < labels.len(),
            ChoiceSpace::Naturals => true,
        }
    }

    /// Display label for a choice of this space.
    pub fn label(&self, c: Choice) -> String {
        match self {
            ChoiceSpace::Enumerated(labels) => labels
                .get(c.0 as usize)
                .cloned()
                .unwrap_or_else(|| format!("?{}", c.0)),
            ChoiceSpace::Naturals => c.0.to_string(),
        }
    }

    /// Resolve a label back to a choice.
    pub fn choice_of_label(&self, label: &str) -> Option<Choice> {
        match self {
            ChoiceSpace::Enumerated(labels) => labels
                .iter()
                .position(|l| l == label)
                .map(|i| Choice(i as u64)),
            ChoiceSpace::Naturals => label.parse::<u64>().ok().map(Choice),
        }
    }
}

/// The carrier of one agent's utility domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UtilityValues {
    Integers,
    /// A finite set of labels, e.g. `{ying, yang}` or `{weak, medium, strong}`.
    Symbolic(Vec<String>),
}

/// A preorder on a utility domain.
///
/// `pref(x, y)` reads "y is at least as good as x".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pref {
    /// The usual `<=` on integers.
    IntLeq,
    /// Everything is related to everything: a total, trivial preorder.
    Indifference,
    /// Only `x <= x`: the discrete preorder.
    EqualityOnly,
    /// An explicit relation over symbolic labels, stored as index pairs.
    /// Closed under reflexivity and transitivity at construction.
    Explicit(BTreeSet<(usize, usize)>),
}

/// A value in some agent's utility domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UtilityValue {
    Int(i64),
    /// Index into the domain's symbolic label list.
    Sym(usize),
}

/// One agent's utility domain: a carrier plus a preorder on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtilityDomain {
    pub values: UtilityValues,
    pub pref: Pref,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArenaError {
    #[error("an arena needs at least one agent")]
    NoAgents,
    #[error("agent {0} has an empty enumerated choice space")]
    EmptyChoiceSpace(String),
    #[error("agent {0}: explicit preference relations require a symbolic utility domain")]
    ExplicitPrefOnIntegers(String),
    #[error("agent {0}: `leq` preference requires an integer utility domain")]
    IntLeqOnSymbolic(String),
    #[error("agent {0}: preference relation mentions label index {1} outside the domain")]
    PrefLabelOutOfDomain(String, usize),
    #[error("duplicate agent name {0}")]
    DuplicateAgent(String),
    #[error("duplicate label {1} in a space of agent {0}")]
    DuplicateLabel(String, String),
}

impl UtilityDomain {
    /// Integer domain under the usual order.
    pub fn int_leq() -> Self {
        UtilityDomain {
            values: UtilityValues::Integers,
            pref: Pref::IntLeq,
        }
    }

    /// Symbolic domain where every comparison holds.
    pub fn symbolic_indifferent<S: Into<String>>(labels: Vec<S>) -> Self {
        UtilityDomain {
            values: UtilityValues::Symbolic(labels.into_iter().map(Into::into).collect()),
            pref: Pref::Indifference,
        }
    }

    /// Symbolic domain where only `x <= x` holds.
    pub fn symbolic_equality<S: Into<String>>(labels: Vec<S>) -> Self {
        UtilityDomain {
            values: UtilityValues::Symbolic(labels.into_iter().map(Into::into).collect()),
            pref: Pref::EqualityOnly,
        }
    }

    /// Symbolic domain with an explicit relation, given as pairs of labels
    /// `(lo, hi)`. The relation is closed under reflexivity and transitivity
    /// here, so the preorder laws hold by construction.
    pub fn symbolic_ordered<S: Into<String>>(
        labels: Vec<S>,
        pairs: &[(&str, &str)],
    ) -> Result<Self, ArenaError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let index = |l: &str| labels.iter().position(|x| x == l);
        let mut rel: BTreeSet<(usize, usize)> = BTreeSet::new();
        for i in 0..labels.len() {
            rel.insert((i, i));
        }
        for (lo, hi) in pairs {
            let (i, j) = match (index(lo), index(hi)) {
                (Some(i), Some(j)) => (i, j),
                _ => return Err(ArenaError::PrefLabelOutOfDomain(lo.to_string(), 0)),
            };
            rel.insert((i, j));
        }
        // transitive closure; domains are tiny
        loop {
            let mut grew = false;
            let snapshot: Vec<_> = rel.iter().copied().collect();
            for &(a, b) in &snapshot {
                for &(b2, c) in &snapshot {
                    if b == b2 && rel.insert((a, c)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        Ok(UtilityDomain {
            values: UtilityValues::Symbolic(labels),
            pref: Pref::Explicit(rel),
        })
    }

    pub fn contains(&self, v: &UtilityValue) -> bool {
        match (&self.values, v) {
            (UtilityValues::Integers, UtilityValue::Int(_)) => true,
            (UtilityValues::Symbolic(labels), UtilityValue::Sym(i)) => *i < labels.len(),
            _ => false,
        }
    }

    /// Does `hi` sit at least as high as `lo` in this domain's preorder?
    pub fn pref_holds(&self, lo: &UtilityValue, hi: &UtilityValue) -> bool {
        match &self.pref {
            Pref::IntLeq => match (lo, hi) {
                (UtilityValue::Int(a), UtilityValue::Int(b)) => a <= b,
                _ => false,
            },
            Pref::Indifference => true,
            Pref::EqualityOnly => lo == hi,
            Pref::Explicit(rel) => match (lo, hi) {
                (UtilityValue::Sym(a), UtilityValue::Sym(b)) => rel.contains(&(*a, *b)),
                _ => false,
            },
        }
    }

    /// Display form of a value of this domain.
    pub fn value_label(&self, v: &UtilityValue) -> String {
        match (&self.values, v) {
            (UtilityValues::Symbolic(labels), UtilityValue::Sym(i)) => labels
                .get(*i)
                .cloned()
                .unwrap_or_else(|| format!("?{i}")),
            (_, UtilityValue::Int(n)) => n.to_string(),
            (_, UtilityValue::Sym(i)) => format!("?{i}"),
        }
    }

    pub fn value_of_label(&self, label: &str) -> Option<UtilityValue> {
        match &self.values {
            UtilityValues::Integers => label.parse::<i64>().ok().map(UtilityValue::Int),
            UtilityValues::Symbolic(labels) => labels
                .iter()
                .position(|l| l == label)
                .map(UtilityValue::Sym),
        }
    }

    /// Check the preorder laws. Explicit relations are verified exhaustively;
    /// the other forms are preorders by definition.
    pub fn validate(&self) -> bool {
        match (&self.values, &self.pref) {
            (UtilityValues::Integers, Pref::IntLeq) => true,
            (UtilityValues::Symbolic(_), Pref::IntLeq) => false,
            (UtilityValues::Integers, Pref::Explicit(_)) => false,
            (_, Pref::Indifference) | (_, Pref::EqualityOnly) => true,
            (UtilityValues::Symbolic(labels), Pref::Explicit(rel)) => {
                let n = labels.len();
                if rel.iter().any(|&(a, b)| a >= n || b >= n) {
                    return false;
                }
                for i in 0..n {
                    if !rel.contains(&(i, i)) {
                        return false;
                    }
                }
                for &(a, b) in rel.iter() {
                    for &(b2, c) in rel.iter() {
                        if b == b2 && !rel.contains(&(a, c)) {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}

/// A total payoff: one utility value per agent, in agent order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Payoff(pub Vec<UtilityValue>);

impl Payoff {
    pub fn get(&self, a: AgentId) -> &UtilityValue {
        &self.0[a.0]
    }

    pub fn display(&self, arena: &ArenaSpec) -> String {
        let parts: Vec<String> = arena
            .agents()
            .map(|a| {
                format!(
                    "{}:{}",
                    arena.agent_name(a),
                    arena.utility(a).value_label(self.get(a))
                )
            })
            .collect();
        parts.join(", ")
    }
}

/// The arena: agents plus their choice spaces and utility domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArenaSpec {
    agent_names: Vec<String>,
    choice_spaces: Vec<ChoiceSpace>,
    utility_domains: Vec<UtilityDomain>,
}

impl ArenaSpec {
    pub fn new(
        agent_names: Vec<String>,
        choice_spaces: Vec<ChoiceSpace>,
        utility_domains: Vec<UtilityDomain>,
    ) -> Result<Arc<Self>, ArenaError> {
        if agent_names.is_empty() {
            return Err(ArenaError::NoAgents);
        }
        assert_eq!(agent_names.len(), choice_spaces.len());
        assert_eq!(agent_names.len(), utility_domains.len());
        for (i, name) in agent_names.iter().enumerate() {
            if agent_names[..i].contains(name) {
                return Err(ArenaError::DuplicateAgent(name.clone()));
            }
        }
        for (name, space) in agent_names.iter().zip(&choice_spaces) {
            if let ChoiceSpace::Enumerated(labels) = space {
                if labels.is_empty() {
                    return Err(ArenaError::EmptyChoiceSpace(name.clone()));
                }
                for (i, l) in labels.iter().enumerate() {
                    if labels[..i].contains(l) {
                        return Err(ArenaError::DuplicateLabel(name.clone(), l.clone()));
                    }
                }
            }
        }
        for (name, dom) in agent_names.iter().zip(&utility_domains) {
            if !dom.validate() {
                return Err(match (&dom.values, &dom.pref) {
                    (UtilityValues::Symbolic(_), Pref::IntLeq) => {
                        ArenaError::IntLeqOnSymbolic(name.clone())
                    }
                    (UtilityValues::Integers, Pref::Explicit(_)) => {
                        ArenaError::ExplicitPrefOnIntegers(name.clone())
                    }
                    (_, Pref::Explicit(rel)) => {
                        let bad = rel
                            .iter()
                            .map(|&(a, b)| a.max(b))
                            .max()
                            .unwrap_or(0);
                        ArenaError::PrefLabelOutOfDomain(name.clone(), bad)
                    }
                    _ => ArenaError::PrefLabelOutOfDomain(name.clone(), 0),
                });
            }
            if let UtilityValues::Symbolic(labels) = &dom.values {
                for (i, l) in labels.iter().enumerate() {
                    if labels[..i].contains(l) {
                        return Err(ArenaError::DuplicateLabel(name.clone(), l.clone()));
                    }
                }
            }
        }
        Ok(Arc::new(ArenaSpec {
            agent_names,
            choice_spaces,
            utility_domains,
        }))
    }

    pub fn num_agents(&self) -> usize {
        self.agent_names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agent_names.len()).map(AgentId)
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agent_names[a.0]
    }

    pub fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agent_names.iter().position(|n| n == name).map(AgentId)
    }

    pub fn choices(&self, a: AgentId) -> &ChoiceSpace {
        &self.choice_spaces[a.0]
    }

    pub fn utility(&self, a: AgentId) -> &UtilityDomain {
        &self.utility_domains[a.0]
    }

    /// A payoff is valid when it gives every agent a value of that agent's
    /// own domain.
    pub fn validate_payoff(&self, p: &Payoff) -> bool {
        p.0.len() == self.num_agents()
            && self
                .agents()
                .all(|a| self.utility(a).contains(p.get(a)))
    }

    pub fn choice_label(&self, a: AgentId, c: Choice) -> String {
        self.choices(a).label(c)
    }

    /// Replace every symbolic preference by the given one. Used by the
    /// `--pref-override` flag to probe how analyses depend on the preorder.
    pub fn with_symbolic_pref(&self, pref: Pref) -> Arc<Self> {
        let utility_domains = self
            .utility_domains
            .iter()
            .map(|d| match d.values {
                UtilityValues::Symbolic(_) => UtilityDomain {
                    values: d.values.clone(),
                    pref: pref.clone(),
                },
                UtilityValues::Integers => d.clone(),
            })
            .collect();
        Arc::new(ArenaSpec {
            agent_names: self.agent_names.clone(),
            choice_spaces: self.choice_spaces.clone(),
            utility_domains,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent_arena() -> Arc<ArenaSpec> {
        ArenaSpec::new(
            vec!["A".into(), "B".into()],
            vec![
                ChoiceSpace::Enumerated(vec!["l".into(), "r".into()]),
                ChoiceSpace::Naturals,
            ],
            vec![UtilityDomain::int_leq(), UtilityDomain::int_leq()],
        )
        .unwrap()
    }

    #[test]
    fn rejects_empty_agent_list() {
        assert_eq!(
            ArenaSpec::new(vec![], vec![], vec![]).unwrap_err(),
            ArenaError::NoAgents
        );
    }

    #[test]
    fn rejects_empty_enumerated_space() {
        let err = ArenaSpec::new(
            vec!["A".into()],
            vec![ChoiceSpace::Enumerated(vec![])],
            vec![UtilityDomain::int_leq()],
        )
        .unwrap_err();
        assert_eq!(err, ArenaError::EmptyChoiceSpace("A".into()));
    }

    #[test]
    fn choice_label_round_trip() {
        let arena = two_agent_arena();
        let a = AgentId(0);
        let c = arena.choices(a).choice_of_label("r").unwrap();
        assert_eq!(c, Choice(1));
        assert_eq!(arena.choice_label(a, c), "r");
        // naturals: labels are the numbers themselves
        let b = AgentId(1);
        assert_eq!(arena.choices(b).choice_of_label("42"), Some(Choice(42)));
    }

    #[test]
    fn explicit_pref_closure_is_reflexive_and_transitive() {
        let dom = UtilityDomain::symbolic_ordered(
            vec!["weak", "medium", "strong"],
            &[("weak", "medium"), ("medium", "strong")],
        )
        .unwrap();
        assert!(dom.validate());
        let weak = UtilityValue::Sym(0);
        let strong = UtilityValue::Sym(2);
        // transitivity was closed in: weak <= strong
        assert!(dom.pref_holds(&weak, &strong));
        assert!(!dom.pref_holds(&strong, &weak));
        assert!(dom.pref_holds(&strong, &strong));
    }

    #[test]
    fn pref_shapes() {
        let indiff = UtilityDomain::symbolic_indifferent(vec!["ying", "yang"]);
        let eq_only = UtilityDomain::symbolic_equality(vec!["ying", "yang"]);
        let ying = UtilityValue::Sym(0);
        let yang = UtilityValue::Sym(1);
        assert!(indiff.pref_holds(&ying, &yang));
        assert!(indiff.pref_holds(&yang, &ying));
        assert!(!eq_only.pref_holds(&ying, &yang));
        assert!(eq_only.pref_holds(&yang, &yang));
    }

    #[test]
    fn payoff_validation_checks_domain_membership() {
        let arena = two_agent_arena();
        assert!(arena.validate_payoff(&Payoff(vec![
            UtilityValue::Int(3),
            UtilityValue::Int(-1)
        ])));
        assert!(!arena.validate_payoff(&Payoff(vec![UtilityValue::Int(3)])));
        assert!(!arena.validate_payoff(&Payoff(vec![
            UtilityValue::Sym(0),
            UtilityValue::Int(0)
        ])));
    }

    #[test]
    fn mismatched_pref_and_values_rejected() {
        let bad = UtilityDomain {
            values: UtilityValues::Symbolic(vec!["x".into()]),
            pref: Pref::IntLeq,
        };
        assert!(!bad.validate());
    }
}
