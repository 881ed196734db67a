//! Extensive games and strategy profiles as lazily-unfolded coalgebras,
//! finite or infinite, with decidable analyses on their finitely presented
//! classes: bisimulation equality, utility assignment, the finiteness and
//! convergence taxonomy, subgame-perfect-equilibrium checking and solving,
//! and escalation detection. A textual game-description language and a CLI
//! front the library.

pub mod arena;
pub mod bisim;
pub mod cli;
pub mod escalation;
pub mod finiteness;
pub mod gallery;
pub mod generate;
pub mod equilibrium;
pub mod system;
pub mod textio;
pub mod multistage;
pub mod stage;

/// Exploration budgets shared by the fuel-bounded analyses.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Steps a chosen-path walk may take; states a bounded search may visit.
    pub fuel: u64,
    /// Depth bound for unfoldings and bounded comparisons.
    pub depth: u32,
    /// Branches sampled at a ℕ-branching node.
    pub nat_samples: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            fuel: 10_000,
            depth: 16,
            nat_samples: 8,
        }
    }
}

pub use arena::{AgentId, ArenaSpec, Choice, ChoiceSpace, Payoff, Pref, UtilityDomain, UtilityValue};
pub use system::{
    CensusNode, GameSystem, PrefixTree, StateRef, StrategySystem, System, UassignResult, View,
};
