//! Python bindings: the main types and operations, in-process.
//!
//! `Game` and `Profile` wrap the engine's systems; analyses return verdict
//! strings (`"holds"`, `"fails"`, `"unknown"`) or JSON strings for
//! structured results (certificates, escalation reports, prefix trees).
//!
//! Usage from Python:
//!
//! ```text
//! import cogame_py as cg
//! p = cg.example("yingyang-acbc")
//! report = json.loads(p.check_escalation())
//! assert report["verdict"] == "holds"
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use cogame::arena::Pref;
use cogame::bisim::{bisim_bounded, bisim_exact, NatPolicy};
use cogame::equilibrium::{backward_induction, check_spe_finite, check_spe_regular, TieRule};
use cogame::escalation::{check_escalation, EscalationOutcome, WitnessClass};
use cogame::finiteness::{
    is_always_convergent, is_convergent, is_finite_game, is_finite_history_game,
    is_finitely_broad, Verdict,
};
use cogame::gallery;
use cogame::multistage::{sequentialize, MsGameSystem};
use cogame::system::{GameSystem, StrategySystem, UassignResult};
use cogame::textio;
use cogame::Limits;

fn limits(fuel: u64) -> Limits {
    Limits {
        fuel,
        ..Limits::default()
    }
}

fn verdict_word(v: &Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails(_) => "fails",
        Verdict::Unknown { .. } => "unknown",
    }
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    let mut out = json!({ "verdict": verdict_word(v) });
    if let Verdict::Fails(w) = v {
        out["witness"] = serde_json::to_value(w).expect("witnesses serialize");
    }
    out
}

fn pref_of(name: &str) -> PyResult<Pref> {
    match name {
        "indifference" => Ok(Pref::Indifference),
        "equality" => Ok(Pref::EqualityOnly),
        other => Err(PyValueError::new_err(format!(
            "unknown preference override {other:?} (use \"indifference\" or \"equality\")"
        ))),
    }
}

/// An extensive game (census, programmatic, or stage-parametric).
#[pyclass]
struct Game {
    inner: GameSystem,
}

/// A strategy profile: a game with a chosen choice at every node.
#[pyclass]
struct Profile {
    inner: StrategySystem,
}

/// A multi-stage game: all agents move simultaneously at each node.
#[pyclass]
struct MsGame {
    inner: MsGameSystem,
}

#[pymethods]
impl Game {
    /// Agent display names, in agent order.
    fn agents(&self) -> Vec<String> {
        let arena = self.inner.arena();
        arena
            .agents()
            .map(|a| arena.agent_name(a).to_string())
            .collect()
    }

    fn is_census(&self) -> bool {
        self.inner.is_census()
    }

    /// Number of reachable states, when the game has a census.
    fn census_size(&self) -> Option<usize> {
        self.inner.reachable().map(|r| r.len())
    }

    /// "holds" / "fails" / "unknown": does the game have finitely many positions?
    fn check_finite(&self) -> String {
        verdict_word(&is_finite_game(&self.inner, &Limits::default())).into()
    }

    /// Are all histories finite?
    fn check_finite_history(&self) -> String {
        verdict_word(&is_finite_history_game(&self.inner, &Limits::default())).into()
    }

    /// (verdict, profile count when finite).
    fn check_broad(&self) -> (String, Option<u128>) {
        let (v, count) = is_finitely_broad(&self.inner, &Limits::default());
        (verdict_word(&v).into(), count)
    }

    /// Full bisimulation on census games, raising on programmatic input.
    fn bisim(&self, other: &Game) -> PyResult<bool> {
        bisim_exact(&self.inner, &other.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Depth-bounded comparison; ℕ-branching nodes are sampled.
    #[pyo3(signature = (other, depth = 16, nat_samples = 8))]
    fn bisim_bounded(&self, other: &Game, depth: u32, nat_samples: u64) -> PyResult<bool> {
        bisim_bounded(
            &self.inner,
            &other.inner,
            depth,
            NatPolicy::Sample(nat_samples),
        )
        .map(|b| b.is_equal())
        .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Backward induction; `tie` is "first" or "all".
    #[pyo3(signature = (tie = "first"))]
    fn solve(&self, tie: &str) -> PyResult<Vec<Profile>> {
        let rule = match tie {
            "first" => TieRule::FirstOptimal,
            "all" => TieRule::AllOptima,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown tie rule {other:?} (use \"first\" or \"all\")"
                )))
            }
        };
        backward_induction(&self.inner, rule, &Limits::default())
            .map(|sols| sols.into_iter().map(|inner| Profile { inner }).collect())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Canonical document form (census games only).
    fn render_doc(&self) -> PyResult<String> {
        textio::render_doc(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn render_dot(&self, depth: u32, nat_samples: u64) -> String {
        textio::render_dot(&self.inner, depth, nat_samples)
    }

    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn render_text(&self, depth: u32, nat_samples: u64) -> String {
        textio::render_ascii(&self.inner, depth, nat_samples)
    }

    /// JSON prefix tree of the truncated unfolding.
    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn unfold_json(&self, depth: u32, nat_samples: u64) -> String {
        textio::export_prefix_json(&self.inner, depth, nat_samples).to_string()
    }

    /// A copy with every symbolic preference replaced by `pref`.
    fn with_pref_override(&self, pref: &str) -> PyResult<Game> {
        Ok(Game {
            inner: self.inner.with_symbolic_pref(pref_of(pref)?),
        })
    }

    fn __repr__(&self) -> String {
        format!("Game({:?})", self.inner)
    }
}

#[pymethods]
impl Profile {
    /// The underlying game, chosen choices erased.
    fn game(&self) -> Game {
        Game {
            inner: self.inner.game(),
        }
    }

    fn agents(&self) -> Vec<String> {
        self.game().agents()
    }

    fn census_size(&self) -> Option<usize> {
        self.inner.reachable().map(|r| r.len())
    }

    /// Follow the chosen play: JSON with "kind" of "assigned",
    /// "divergent", or "exhausted", plus the payoff or lasso.
    #[pyo3(signature = (fuel = 10_000))]
    fn uassign(&self, fuel: u64) -> String {
        let arena = self.inner.arena();
        match self.inner.uassign(fuel) {
            UassignResult::Assigned(p) => {
                let payoff: serde_json::Map<String, serde_json::Value> = arena
                    .agents()
                    .map(|a| {
                        (
                            arena.agent_name(a).to_string(),
                            json!(arena.utility(a).value_label(p.get(a))),
                        )
                    })
                    .collect();
                json!({"kind": "assigned", "payoff": payoff}).to_string()
            }
            UassignResult::DivergenceDetected(l) => json!({
                "kind": "divergent",
                "prefix": l.prefix.len(),
                "period": l.period(),
            })
            .to_string(),
            UassignResult::FuelExhausted(steps) => {
                json!({"kind": "exhausted", "steps": steps.len()}).to_string()
            }
        }
    }

    #[pyo3(signature = (fuel = 10_000))]
    fn check_convergent(&self, fuel: u64) -> String {
        verdict_word(&is_convergent(&self.inner, &limits(fuel))).into()
    }

    #[pyo3(signature = (fuel = 10_000))]
    fn check_always_convergent(&self, fuel: u64) -> String {
        verdict_word(&is_always_convergent(&self.inner, &limits(fuel))).into()
    }

    /// Subgame-perfection: JSON with the verdict, a witness on failure, and
    /// the certificate on success.
    fn check_spe(&self) -> PyResult<String> {
        let lim = Limits::default();
        let outcome = if is_finite_game(&self.inner.game(), &lim).holds() {
            check_spe_finite(&self.inner, &lim)
        } else {
            check_spe_regular(&self.inner, &lim)
        }
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let mut out = verdict_json(&outcome.verdict);
        if let Some(cert) = &outcome.certificate {
            out["certificate"] = serde_json::to_value(cert).expect("certificates serialize");
        }
        Ok(out.to_string())
    }

    /// Escalation: JSON with "verdict" and either the report (lasso period,
    /// witnesses with rendered profiles) or the reason it does not apply.
    #[pyo3(signature = (name = "profile", memory = None))]
    fn check_escalation(&self, name: &str, memory: Option<u32>) -> PyResult<String> {
        let class = match memory {
            Some(m) => WitnessClass::BoundedMemory(m),
            None => WitnessClass::Memoryless,
        };
        let out = check_escalation(&self.inner, name, class, &Limits::default())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let arena = self.inner.arena();
        Ok(match out {
            EscalationOutcome::Escalates(report) => {
                let witnesses: Vec<serde_json::Value> = report
                    .witnesses
                    .iter()
                    .map(|w| {
                        json!({
                            "agent": arena.agent_name(w.agent),
                            "head": arena.choice_label(w.agent, w.head),
                            "certificate": serde_json::to_value(&w.witness.certificate).unwrap(),
                        })
                    })
                    .collect();
                json!({
                    "verdict": "holds",
                    "profile": report.profile,
                    "lasso_period": report.lasso.period(),
                    "witnesses": witnesses,
                })
                .to_string()
            }
            EscalationOutcome::NoEscalation { reason } => {
                json!({"verdict": "fails", "reason": reason}).to_string()
            }
            EscalationOutcome::Unknown { reason } => {
                json!({"verdict": "unknown", "reason": reason}).to_string()
            }
        })
    }

    fn render_doc(&self) -> PyResult<String> {
        textio::render_doc(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn render_dot(&self, depth: u32, nat_samples: u64) -> String {
        textio::render_dot(&self.inner, depth, nat_samples)
    }

    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn render_text(&self, depth: u32, nat_samples: u64) -> String {
        textio::render_ascii(&self.inner, depth, nat_samples)
    }

    /// JSON prefix tree of the truncated unfolding.
    #[pyo3(signature = (depth = 16, nat_samples = 8))]
    fn unfold_json(&self, depth: u32, nat_samples: u64) -> String {
        textio::export_prefix_json(&self.inner, depth, nat_samples).to_string()
    }

    /// Profile bisimulation (chosen choices compared) on census profiles.
    fn bisim(&self, other: &Profile) -> PyResult<bool> {
        bisim_exact(&self.inner, &other.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn with_pref_override(&self, pref: &str) -> PyResult<Profile> {
        Ok(Profile {
            inner: self.inner.with_symbolic_pref(pref_of(pref)?),
        })
    }

    fn __repr__(&self) -> String {
        format!("Profile({:?})", self.inner)
    }
}

#[pymethods]
impl MsGame {
    fn agents(&self) -> Vec<String> {
        let arena = self.inner.arena();
        arena
            .agents()
            .map(|a| arena.agent_name(a).to_string())
            .collect()
    }

    /// Turn the simultaneous game into an extensive one; `order` lists the
    /// agent names in play order.
    fn sequentialize(&self, order: Vec<String>) -> PyResult<Game> {
        let arena = self.inner.arena();
        let ids: Vec<_> = order
            .iter()
            .map(|n| {
                arena
                    .agent_by_name(n)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown agent {n:?}")))
            })
            .collect::<PyResult<_>>()?;
        sequentialize(&self.inner, &ids)
            .map(|inner| Game { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn render_doc(&self) -> PyResult<String> {
        textio::render_ms_doc(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[pyo3(signature = (depth = 16))]
    fn render_text(&self, depth: u32) -> String {
        textio::ms_render_ascii(&self.inner, depth)
    }

    fn __repr__(&self) -> String {
        format!("MsGame(states={})", self.inner.len())
    }
}

/// Parse an extensive-game document.
#[pyfunction]
fn parse_game(text: &str) -> PyResult<Game> {
    textio::parse_game(text)
        .map(|inner| Game { inner })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Parse a profile document (every node needs a choose line).
#[pyfunction]
fn parse_profile(text: &str) -> PyResult<Profile> {
    textio::parse_profile(text)
        .map(|inner| Profile { inner })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Build a gallery entry by name (see `example_names()`); `param` is the
/// `name:N` parameter.
#[pyfunction]
#[pyo3(signature = (name, param = None, pref_override = None))]
fn example(py: Python<'_>, name: &str, param: Option<u64>, pref_override: Option<&str>) -> PyResult<Py<PyAny>> {
    let pref = pref_override.map(pref_of).transpose()?;
    match gallery::build(name, param, pref)
        .map_err(|e| PyValueError::new_err(e.to_string()))?
    {
        gallery::Built::Game(inner) => Ok(Game { inner }.into_pyobject(py)?.into_any().unbind()),
        gallery::Built::Profile(inner) => {
            Ok(Profile { inner }.into_pyobject(py)?.into_any().unbind())
        }
        gallery::Built::MsGame(inner) => {
            Ok(MsGame { inner }.into_pyobject(py)?.into_any().unbind())
        }
    }
}

/// Gallery entries as (name, summary) pairs.
#[pyfunction]
fn example_names() -> Vec<(String, String)> {
    gallery::entries()
        .iter()
        .map(|e| (e.name.to_string(), e.summary.to_string()))
        .collect()
}

#[pymodule]
fn cogame_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Game>()?;
    m.add_class::<Profile>()?;
    m.add_class::<MsGame>()?;
    m.add_function(wrap_pyfunction!(parse_game, m)?)?;
    m.add_function(wrap_pyfunction!(parse_profile, m)?)?;
    m.add_function(wrap_pyfunction!(example, m)?)?;
    m.add_function(wrap_pyfunction!(example_names, m)?)?;
    Ok(())
}
