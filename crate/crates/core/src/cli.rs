//! The command-line interface.
//!
//! Exit codes: 0 = holds / success, 1 = fails / negative verdict,
//! 2 = unknown (budget exhausted), 64 = usage or inapplicable analysis,
//! 65 = document error. `--format json` wraps every result in a small
//! envelope validating against `schemas/cli-output.schema.json`; text and
//! json modes always report the same verdict.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::arena::{Choice, Pref};
use crate::bisim::{bisim_bounded, bisim_exact, BisimError, Bounded, NatPolicy};
use crate::equilibrium::{
    backward_induction, check_spe_finite, check_spe_regular, enumerate_spe_bruteforce, SpeError,
    TieRule, DEFAULT_BRUTE_BOUND,
};
use crate::escalation::{check_escalation, EscalationOutcome, WitnessClass};
use crate::finiteness::{
    is_always_convergent, is_convergent, is_finite_game, is_finite_history_game,
    is_finitely_broad, Verdict, Witness,
};
use crate::gallery;
use crate::system::{GameSystem, StrategySystem, UassignResult, View};
use crate::textio::{
    export_prefix_json, ms_export_prefix_json, ms_render_ascii, ms_render_dot, parse_doc,
    render_ascii, render_doc, render_dot, render_ms_doc, ParsedDoc,
};
use crate::Limits;

const EXIT_HOLDS: i32 = 0;
const EXIT_FAILS: i32 = 1;
const EXIT_UNKNOWN: i32 = 2;
const EXIT_USAGE: i32 = 64;
const EXIT_PARSE: i32 = 65;

#[derive(Parser)]
#[command(
    name = "cogame",
    version,
    about = "Analyses for finite and infinite extensive games: unfolding, bisimulation, \
             utility assignment, finiteness checks, subgame perfect equilibria, escalation.",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Target {
    /// Path to a `.game` document.
    file: Option<PathBuf>,
    /// A built-in gallery entry, e.g. `yingyang-acbc`, `dollar-acbc:3`,
    /// `threadlike:5` (see `cogame examples`).
    #[arg(long, value_name = "NAME[:N]")]
    example: Option<String>,
    /// Replace every symbolic preference before analyzing.
    #[arg(long, value_enum)]
    pref_override: Option<PrefArg>,
}

#[derive(Args)]
struct Opts {
    /// Step budget for chosen-path walks and bounded searches.
    #[arg(long, default_value_t = 10_000)]
    fuel: u64,
    /// Depth bound for unfolding and bounded comparison.
    #[arg(long, default_value_t = 16)]
    depth: u32,
    /// Branches sampled at ℕ-branching nodes.
    #[arg(long, default_value_t = 8)]
    nat_samples: u64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl Opts {
    fn limits(&self) -> Limits {
        Limits {
            fuel: self.fuel,
            depth: self.depth,
            nat_samples: self.nat_samples,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrefArg {
    Indifference,
    Equality,
}

impl PrefArg {
    fn pref(self) -> Pref {
        match self {
            PrefArg::Indifference => Pref::Indifference,
            PrefArg::Equality => Pref::EqualityOnly,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TieArg {
    First,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckProp {
    Finite,
    Broad,
    FiniteHistory,
    Convergent,
    AlwaysConvergent,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a document and report what it defines.
    Parse { file: PathBuf },
    /// Print the truncated unfolding of a game or profile.
    Unfold {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
    /// Decide bisimulation equality of two documents.
    Eq {
        file1: PathBuf,
        file2: PathBuf,
        /// Force the depth-bounded comparison even when both systems have a
        /// census.
        #[arg(long)]
        bounded: bool,
        /// Refuse to sample ℕ-branching nodes (meeting one is an error).
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        opts: Opts,
    },
    /// Follow a profile's chosen play to its payoff.
    Uassign {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a finiteness or convergence check.
    Check {
        #[arg(value_enum)]
        prop: CheckProp,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
    /// Solve a finite game by backward induction.
    Solve {
        #[command(flatten)]
        target: Target,
        /// Tie handling: the first optimal choice per node, or every SPE.
        #[arg(long, value_enum, default_value_t = TieArg::First)]
        tie: TieArg,
        /// Cross-check against brute-force enumeration (within its bound).
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check a profile for subgame perfection.
    CheckSpe {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check a profile for escalation (divergent and along-good).
    CheckEscalation {
        #[command(flatten)]
        target: Target,
        /// Search bounded-memory witnesses with windows up to M choices.
        #[arg(long, value_name = "M")]
        memory: Option<u32>,
        #[command(flatten)]
        opts: Opts,
    },
    /// List the built-in gallery, or show one entry's document.
    Examples {
        name: Option<String>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Render a system as DOT, text, or a JSON prefix tree.
    Render {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
}

enum Loaded {
    Game(GameSystem),
    Profile(StrategySystem),
    MsGame(crate::multistage::MsGameSystem),
    MsProfile(crate::multistage::MsStrategySystem),
}

enum Failure {
    Usage(String),
    Doc(String),
}

impl Failure {
    fn exit(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Doc(_) => EXIT_PARSE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Doc(m) => m,
        }
    }
}

fn load(target: &Target) -> Result<(Loaded, String), Failure> {
    let loaded = match (&target.file, &target.example) {
        (Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "give either a file or --example, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Failure::Usage("give a file or --example NAME".into()))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("cannot read {}: {e}", path.display()))
            })?;
            let doc = parse_doc(&text).map_err(|e| Failure::Doc(e.to_string()))?;
            let name = path.display().to_string();
            let loaded = match doc {
                ParsedDoc::Game(g) => Loaded::Game(g),
                ParsedDoc::Profile(s) => Loaded::Profile(s),
                ParsedDoc::MsGame(g) => Loaded::MsGame(g),
                ParsedDoc::MsProfile(s) => Loaded::MsProfile(s),
            };
            (loaded, name)
        }
        (None, Some(spec)) => {
            let (name, param) = match spec.split_once(':') {
                Some((n, p)) => {
                    let v = p.parse::<u64>().map_err(|_| {
                        Failure::Usage(format!("parameter in `{spec}` is not a number"))
                    })?;
                    (n, Some(v))
                }
                None => (spec.as_str(), None),
            };
            let built = gallery::build(name, param, target.pref_override.map(PrefArg::pref))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let loaded = match built {
                gallery::Built::Game(g) => Loaded::Game(g),
                gallery::Built::Profile(s) => Loaded::Profile(s),
                gallery::Built::MsGame(g) => Loaded::MsGame(g),
            };
            (loaded, spec.clone())
        }
    };
    // file targets: apply the preference override after parsing
    let (mut loaded, name) = loaded;
    if target.file.is_some() {
        if let Some(p) = target.pref_override {
            loaded = match loaded {
                Loaded::Game(g) => Loaded::Game(g.with_symbolic_pref(p.pref())),
                Loaded::Profile(s) => Loaded::Profile(s.with_symbolic_pref(p.pref())),
                other => other,
            };
        }
    }
    Ok((loaded, name))
}

fn need_game(loaded: Loaded) -> Result<GameSystem, Failure> {
    match loaded {
        Loaded::Game(g) => Ok(g),
        Loaded::Profile(s) => Ok(s.game()),
        _ => Err(Failure::Usage(
            "this analysis applies to extensive games, not multi-stage ones".into(),
        )),
    }
}

fn need_profile(loaded: Loaded) -> Result<StrategySystem, Failure> {
    match loaded {
        Loaded::Profile(s) => Ok(s),
        Loaded::Game(_) => Err(Failure::Usage(
            "this analysis needs a strategy profile (a document with choose lines, \
             or a profile gallery entry)"
                .into(),
        )),
        _ => Err(Failure::Usage(
            "this analysis applies to extensive profiles, not multi-stage ones".into(),
        )),
    }
}

struct Emit {
    json: bool,
    command: &'static str,
    target: String,
}

impl Emit {
    fn verdict(&self, verdict: &Verdict, text_detail: String, mut extra: serde_json::Map<String, Value>) -> i32 {
        let (word, exit) = match verdict {
            Verdict::Holds => ("holds", EXIT_HOLDS),
            Verdict::Fails(_) => ("fails", EXIT_FAILS),
            Verdict::Unknown { .. } => ("unknown", EXIT_UNKNOWN),
        };
        if self.json {
            if let Verdict::Fails(w) = verdict {
                extra.insert("witness".into(), serde_json::to_value(w).unwrap());
            }
            if let Verdict::Unknown { fuel_spent } = verdict {
                extra.insert("fuel_spent".into(), json!(fuel_spent));
            }
            self.json_out(word, exit, extra);
        } else {
            println!("{}: {word}{}", self.command, if text_detail.is_empty() {
                String::new()
            } else {
                format!(" — {text_detail}")
            });
        }
        exit
    }

    fn json_out(&self, verdict: &str, exit: i32, extra: serde_json::Map<String, Value>) {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), json!(self.command));
        map.insert("target".into(), json!(self.target));
        map.insert("verdict".into(), json!(verdict));
        map.insert("exit".into(), json!(exit));
        for (k, v) in extra {
            map.insert(k, v);
        }
        println!("{}", serde_json::to_string_pretty(&Value::Object(map)).unwrap());
    }
}

/// Human form of a state reference: census states by index, stage states
/// by template and stage.
fn state_label<C: crate::system::Decor>(s: &crate::system::System<C>, r: crate::system::StateRef) -> String {
    if s.stage().is_some() {
        match crate::stage::unpack(r) {
            crate::stage::StageState::Node { template, stage } => {
                format!("template {template} @ stage {stage}")
            }
            crate::stage::StageState::Leaf { template, stage, .. } => {
                format!("leaf of template {template} @ stage {stage}")
            }
        }
    } else {
        format!("#{}", r.0)
    }
}

/// Resolve a choice path to display labels by walking the system.
fn path_labels(g: &GameSystem, path: &[Choice]) -> String {
    let mut out = Vec::new();
    let mut state = g.root();
    for c in path {
        match g.view(state) {
            View::Node { agent, branch, .. } => {
                out.push(g.arena().choice_label(agent, *c));
                match branch.target(*c) {
                    Some(t) => state = t,
                    None => break,
                }
            }
            View::Leaf(_) => break,
        }
    }
    if out.is_empty() {
        "(root)".to_string()
    } else {
        out.join(" · ")
    }
}

fn witness_text(g: &GameSystem, w: &Witness) -> String {
    match w {
        Witness::NaturalsBranching { path } => {
            format!("ℕ-branching node at {}", path_labels(g, path))
        }
        Witness::Cycle { prefix, cycle } => format!(
            "cycle at {} repeating [{}]",
            path_labels(g, prefix),
            cycle
                .iter()
                .map(|c| c.0.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        Witness::ChosenLasso(l) => format!(
            "chosen play loops with period {} after {} steps",
            l.period(),
            l.prefix.len()
        ),
        Witness::Terminates { path } => format!("chosen play reaches a leaf in {} steps", path.len()),
        Witness::At { path, inner } => {
            format!("at {}: {}", path_labels(g, path), witness_text(g, inner))
        }
        Witness::PrefViolation {
            path,
            chosen,
            alternative,
        } => format!(
            "at {}: alternative branch {} beats the chosen branch {}",
            path_labels(g, path),
            alternative.0,
            chosen.0
        ),
        Witness::SearchExhausted { candidates } => {
            format!("no witness among {candidates} candidates")
        }
    }
}

fn spe_error_failure(e: SpeError) -> Failure {
    Failure::Usage(format!("analysis not applicable: {e}"))
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print through the normal channel
            if e.use_stderr() {
                eprintln!("{e}");
                return EXIT_USAGE;
            }
            print!("{e}");
            return EXIT_HOLDS;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.cmd {
        Cmd::Parse { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            match parse_doc(&text) {
                Ok(doc) => {
                    let (kind, states) = match &doc {
                        ParsedDoc::Game(g) => ("game", g.reachable().unwrap().len()),
                        ParsedDoc::Profile(s) => ("profile", s.reachable().unwrap().len()),
                        ParsedDoc::MsGame(g) => ("multi-stage game", g.len()),
                        ParsedDoc::MsProfile(s) => ("multi-stage profile", s.len()),
                    };
                    println!("ok: {kind} with {states} reachable states");
                    Ok(EXIT_HOLDS)
                }
                Err(e) => {
                    eprintln!("parse error: {e}");
                    Ok(EXIT_PARSE)
                }
            }
        }

        Cmd::Unfold { target, opts } | Cmd::Render { target, opts } => {
            let (loaded, name) = load(&target)?;
            if opts.format == Format::Json {
                let tree = match &loaded {
                    Loaded::Game(g) => export_prefix_json(g, opts.depth, opts.nat_samples),
                    Loaded::Profile(s) => export_prefix_json(s, opts.depth, opts.nat_samples),
                    Loaded::MsGame(g) => ms_export_prefix_json(g, opts.depth),
                    Loaded::MsProfile(s) => ms_export_prefix_json(s, opts.depth),
                };
                let emit = Emit {
                    json: true,
                    command: "render",
                    target: name,
                };
                let mut extra = serde_json::Map::new();
                extra.insert("tree".into(), tree);
                emit.json_out("holds", EXIT_HOLDS, extra);
                return Ok(EXIT_HOLDS);
            }
            let out = match (&loaded, opts.format) {
                (Loaded::Game(g), Format::Dot) => render_dot(g, opts.depth, opts.nat_samples),
                (Loaded::Game(g), _) => render_ascii(g, opts.depth, opts.nat_samples),
                (Loaded::Profile(s), Format::Dot) => render_dot(s, opts.depth, opts.nat_samples),
                (Loaded::Profile(s), _) => render_ascii(s, opts.depth, opts.nat_samples),
                (Loaded::MsGame(g), Format::Dot) => ms_render_dot(g, opts.depth),
                (Loaded::MsGame(g), _) => ms_render_ascii(g, opts.depth),
                (Loaded::MsProfile(s), Format::Dot) => ms_render_dot(s, opts.depth),
                (Loaded::MsProfile(s), _) => ms_render_ascii(s, opts.depth),
            };
            print!("{out}");
            Ok(EXIT_HOLDS)
        }

        Cmd::Eq {
            file1,
            file2,
            bounded,
            exhaustive,
            opts,
        } => {
            let read = |p: &PathBuf| -> Result<GameSystem, Failure> {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
                crate::textio::parse_game(&text).map_err(|e| Failure::Doc(e.to_string()))
            };
            let g1 = read(&file1)?;
            let g2 = read(&file2)?;
            let emit = Emit {
                json: opts.format == Format::Json,
                command: "eq",
                target: format!("{} vs {}", file1.display(), file2.display()),
            };
            let policy = if exhaustive {
                NatPolicy::Exhaustive
            } else {
                NatPolicy::Sample(opts.nat_samples)
            };
            let map_err = |e: BisimError| Failure::Usage(e.to_string());
            if !bounded && g1.is_census() && g2.is_census() {
                let equal = bisim_exact(&g1, &g2).map_err(map_err)?;
                let verdict = if equal { "equal" } else { "different" };
                let exit = if equal { EXIT_HOLDS } else { EXIT_FAILS };
                if emit.json {
                    let mut extra = serde_json::Map::new();
                    extra.insert("mode".into(), json!("exact"));
                    emit.json_out(if equal { "holds" } else { "fails" }, exit, extra);
                } else {
                    println!("eq: {verdict} (exact bisimulation)");
                }
                Ok(exit)
            } else {
                match bisim_bounded(&g1, &g2, opts.depth, policy).map_err(map_err)? {
                    Bounded::EqualUpTo { depth, nat_sampled } => {
                        if emit.json {
                            let mut extra = serde_json::Map::new();
                            extra.insert("mode".into(), json!("bounded"));
                            extra.insert("depth".into(), json!(depth));
                            extra.insert("nat_sampled".into(), json!(nat_sampled));
                            emit.json_out("holds", EXIT_HOLDS, extra);
                        } else {
                            println!(
                                "eq: equal up to depth {depth}{}",
                                if nat_sampled { " (ℕ nodes sampled)" } else { "" }
                            );
                        }
                        Ok(EXIT_HOLDS)
                    }
                    Bounded::DifferAt(path) => {
                        if emit.json {
                            let mut extra = serde_json::Map::new();
                            extra.insert("mode".into(), json!("bounded"));
                            extra.insert(
                                "differ_at".into(),
                                json!(path.iter().map(|c| c.0).collect::<Vec<_>>()),
                            );
                            emit.json_out("fails", EXIT_FAILS, extra);
                        } else {
                            println!("eq: differ at {}", path_labels(&g1, &path));
                        }
                        Ok(EXIT_FAILS)
                    }
                }
            }
        }

        Cmd::Uassign { target, opts } => {
            let (loaded, name) = load(&target)?;
            let emit = Emit {
                json: opts.format == Format::Json,
                command: "uassign",
                target: name,
            };
            if let Loaded::MsProfile(s) = &loaded {
                let result = s.uassign(opts.fuel);
                let (word, exit, text) = match &result {
                    crate::multistage::MsUassignResult::Assigned(p) => (
                        "holds",
                        EXIT_HOLDS,
                        format!("assigned {{ {} }}", p.display(s.arena())),
                    ),
                    crate::multistage::MsUassignResult::DivergenceDetected { cycle, .. } => (
                        "fails",
                        EXIT_FAILS,
                        format!("divergent (lasso period {})", cycle.len()),
                    ),
                    crate::multistage::MsUassignResult::FuelExhausted(_) => {
                        ("unknown", EXIT_UNKNOWN, "fuel exhausted".to_string())
                    }
                };
                if emit.json {
                    let mut extra = serde_json::Map::new();
                    extra.insert("result".into(), serde_json::to_value(&result).unwrap());
                    emit.json_out(word, exit, extra);
                } else {
                    println!("uassign: {text}");
                }
                return Ok(exit);
            }
            let s = need_profile(loaded)?;
            let result = s.uassign(opts.fuel);
            let (word, exit, text) = match &result {
                UassignResult::Assigned(p) => (
                    "holds",
                    EXIT_HOLDS,
                    format!("assigned {{ {} }}", p.display(s.arena())),
                ),
                UassignResult::DivergenceDetected(l) => (
                    "fails",
                    EXIT_FAILS,
                    format!(
                        "divergent (lasso period {} after {} steps)",
                        l.period(),
                        l.prefix.len()
                    ),
                ),
                UassignResult::FuelExhausted(steps) => (
                    "unknown",
                    EXIT_UNKNOWN,
                    format!("no leaf within {} steps", steps.len()),
                ),
            };
            if emit.json {
                let mut extra = serde_json::Map::new();
                extra.insert("result".into(), serde_json::to_value(&result).unwrap());
                emit.json_out(word, exit, extra);
            } else {
                println!("uassign: {text}");
            }
            Ok(exit)
        }

        Cmd::Check { prop, target, opts } => {
            let (loaded, name) = load(&target)?;
            let limits = opts.limits();
            let command: &'static str = match prop {
                CheckProp::Finite => "check finite",
                CheckProp::Broad => "check broad",
                CheckProp::FiniteHistory => "check finite-history",
                CheckProp::Convergent => "check convergent",
                CheckProp::AlwaysConvergent => "check always-convergent",
            };
            let emit = Emit {
                json: opts.format == Format::Json,
                command,
                target: name,
            };
            let mut extra = serde_json::Map::new();
            let (verdict, game_for_labels, detail) = match prop {
                CheckProp::Finite | CheckProp::Broad | CheckProp::FiniteHistory => {
                    let g = need_game(loaded)?;
                    let (v, detail) = match prop {
                        CheckProp::Finite => (is_finite_game(&g, &limits), String::new()),
                        CheckProp::FiniteHistory => {
                            (is_finite_history_game(&g, &limits), String::new())
                        }
                        CheckProp::Broad => {
                            let (v, count) = is_finitely_broad(&g, &limits);
                            let detail = match count {
                                Some(c) => {
                                    extra.insert("profiles".into(), json!(c.to_string()));
                                    format!("{c} profiles")
                                }
                                None => String::new(),
                            };
                            (v, detail)
                        }
                        _ => unreachable!(),
                    };
                    (v, g, detail)
                }
                CheckProp::Convergent | CheckProp::AlwaysConvergent => {
                    let s = need_profile(loaded)?;
                    let v = match prop {
                        CheckProp::Convergent => is_convergent(&s, &limits),
                        _ => is_always_convergent(&s, &limits),
                    };
                    (v, s.game(), String::new())
                }
            };
            let text = match (&verdict, detail.as_str()) {
                (Verdict::Fails(w), _) => witness_text(&game_for_labels, w),
                (_, "") => String::new(),
                (_, d) => d.to_string(),
            };
            Ok(emit.verdict(&verdict, text, extra))
        }

        Cmd::Solve {
            target,
            tie,
            oracle,
            opts,
        } => {
            let (loaded, name) = load(&target)?;
            let g = need_game(loaded)?;
            let limits = opts.limits();
            let emit = Emit {
                json: opts.format == Format::Json,
                command: "solve",
                target: name,
            };
            let rule = match tie {
                TieArg::First => TieRule::FirstOptimal,
                TieArg::All => TieRule::AllOptima,
            };
            let solutions = match backward_induction(&g, rule, &limits) {
                Ok(s) => s,
                Err(SpeError::NoMaximalChoice { path }) => {
                    if emit.json {
                        let mut extra = serde_json::Map::new();
                        extra.insert(
                            "no_maximal_choice_at".into(),
                            json!(path.iter().map(|c| c.0).collect::<Vec<_>>()),
                        );
                        emit.json_out("fails", EXIT_FAILS, extra);
                    } else {
                        println!(
                            "solve: no choice dominates all others at {}",
                            path_labels(&g, &path)
                        );
                    }
                    return Ok(EXIT_FAILS);
                }
                Err(e) => return Err(spe_error_failure(e)),
            };
            if oracle {
                let brute = enumerate_spe_bruteforce(&g, DEFAULT_BRUTE_BOUND, &limits)
                    .map_err(spe_error_failure)?;
                let sig = |v: &[StrategySystem]| {
                    let mut sigs: Vec<_> =
                        v.iter().map(crate::equilibrium::profile_signature).collect();
                    sigs.sort();
                    sigs.dedup();
                    sigs
                };
                if rule == TieRule::AllOptima && sig(&solutions) != sig(&brute) {
                    return Err(Failure::Usage(
                        "internal: solver and brute-force oracle disagree".into(),
                    ));
                }
            }
            if solutions.is_empty() {
                if emit.json {
                    emit.json_out("fails", EXIT_FAILS, serde_json::Map::new());
                } else {
                    println!("solve: no subgame perfect equilibrium");
                }
                return Ok(EXIT_FAILS);
            }
            if emit.json {
                let docs: Vec<Value> = solutions
                    .iter()
                    .map(|s| json!(render_doc(s).expect("solutions are census trees")))
                    .collect();
                let mut extra = serde_json::Map::new();
                extra.insert("solutions".into(), json!(docs));
                emit.json_out("holds", EXIT_HOLDS, extra);
            } else {
                println!(
                    "solve: {} subgame perfect profile{}",
                    solutions.len(),
                    if solutions.len() == 1 { "" } else { "s" }
                );
                for (i, s) in solutions.iter().enumerate() {
                    println!("--- solution {} ---", i + 1);
                    print!("{}", render_doc(s).expect("solutions are census trees"));
                }
            }
            Ok(EXIT_HOLDS)
        }

        Cmd::CheckSpe { target, opts } => {
            let (loaded, name) = load(&target)?;
            let s = need_profile(loaded)?;
            let limits = opts.limits();
            let emit = Emit {
                json: opts.format == Format::Json,
                command: "check-spe",
                target: name,
            };
            // finite trees get the tree check; everything finitely
            // presented gets the greatest-fixpoint check
            let outcome = if is_finite_game(&s.game(), &limits).holds() {
                check_spe_finite(&s, &limits).map_err(spe_error_failure)?
            } else {
                check_spe_regular(&s, &limits).map_err(spe_error_failure)?
            };
            let mut extra = serde_json::Map::new();
            if let Some(cert) = &outcome.certificate {
                extra.insert("certificate".into(), serde_json::to_value(cert).unwrap());
            }
            let text = match &outcome.verdict {
                Verdict::Fails(w) => witness_text(&s.game(), w),
                _ => format!(
                    "certificate covers {} node state(s)",
                    outcome.certificate.as_ref().map_or(0, |c| c.entries.len())
                ),
            };
            Ok(emit.verdict(&outcome.verdict, text, extra))
        }

        Cmd::CheckEscalation {
            target,
            memory,
            opts,
        } => {
            let (loaded, name) = load(&target)?;
            let s = need_profile(loaded)?;
            let limits = opts.limits();
            let emit = Emit {
                json: opts.format == Format::Json,
                command: "check-escalation",
                target: name.clone(),
            };
            let class = match memory {
                Some(m) => WitnessClass::BoundedMemory(m),
                None => WitnessClass::Memoryless,
            };
            let outcome = check_escalation(&s, &name, class, &limits)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            match outcome {
                EscalationOutcome::Escalates(report) => {
                    if emit.json {
                        let witnesses: Vec<Value> = report
                            .witnesses
                            .iter()
                            .map(|w| {
                                json!({
                                    "agent": s.arena().agent_name(w.agent),
                                    "head": s.arena().choice_label(w.agent, w.head),
                                    "state": state_label(&s, w.state),
                                    "witness_profile": render_witness_doc(&w.witness.profile),
                                    "certificate": serde_json::to_value(&w.witness.certificate).unwrap(),
                                })
                            })
                            .collect();
                        let mut extra = serde_json::Map::new();
                        extra.insert("lasso_period".into(), json!(report.lasso.period()));
                        extra.insert("lasso_prefix".into(), json!(report.lasso.prefix.len()));
                        extra.insert("witnesses".into(), json!(witnesses));
                        emit.json_out("holds", EXIT_HOLDS, extra);
                    } else {
                        println!("check-escalation: escalation in {}", report.profile);
                        println!(
                            "  divergence: lasso of period {} after {} steps",
                            report.lasso.period(),
                            report.lasso.prefix.len()
                        );
                        for w in &report.witnesses {
                            println!(
                                "  good at {} ({} heads {}): SPE witness with {} certified node(s)",
                                state_label(&s, w.state),
                                s.arena().agent_name(w.agent),
                                s.arena().choice_label(w.agent, w.head),
                                w.witness.certificate.entries.len()
                            );
                        }
                    }
                    Ok(EXIT_HOLDS)
                }
                EscalationOutcome::NoEscalation { reason } => {
                    if emit.json {
                        let mut extra = serde_json::Map::new();
                        extra.insert("reason".into(), json!(reason));
                        emit.json_out("fails", EXIT_FAILS, extra);
                    } else {
                        println!("check-escalation: no escalation — {reason}");
                    }
                    Ok(EXIT_FAILS)
                }
                EscalationOutcome::Unknown { reason } => {
                    if emit.json {
                        let mut extra = serde_json::Map::new();
                        extra.insert("reason".into(), json!(reason));
                        emit.json_out("unknown", EXIT_UNKNOWN, extra);
                    } else {
                        println!("check-escalation: unknown — {reason}");
                    }
                    Ok(EXIT_UNKNOWN)
                }
            }
        }

        Cmd::Examples { name, opts } => {
            match name {
                None => {
                    if opts.format == Format::Json {
                        let list: Vec<Value> = gallery::entries()
                            .iter()
                            .map(|e| {
                                json!({
                                    "name": e.name,
                                    "summary": e.summary,
                                    "param": e.param,
                                    "facts": e.facts,
                                })
                            })
                            .collect();
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&json!({
                                "command": "examples",
                                "target": "",
                                "verdict": "holds",
                                "exit": 0,
                                "entries": list,
                            }))
                            .unwrap()
                        );
                    } else {
                        for e in gallery::entries() {
                            println!("{:<18} {}", e.name, e.summary);
                            if let Some(p) = e.param {
                                println!("{:<18}   parameter: {p}", "");
                            }
                            for f in e.facts {
                                println!("{:<18}   fact: {f}", "");
                            }
                        }
                    }
                    Ok(EXIT_HOLDS)
                }
                Some(spec) => {
                    let (n, param) = match spec.split_once(':') {
                        Some((n, p)) => (
                            n.to_string(),
                            Some(p.parse::<u64>().map_err(|_| {
                                Failure::Usage(format!("parameter in `{spec}` is not a number"))
                            })?),
                        ),
                        None => (spec.clone(), None),
                    };
                    let built = gallery::build(&n, param, None)
                        .map_err(|e| Failure::Usage(e.to_string()))?;
                    let text = match built {
                        gallery::Built::Game(g) => render_doc(&g).unwrap_or_else(|_| {
                            format!(
                                "# {spec} is not a census system; showing its unfolding\n{}",
                                render_ascii(&g, 4, 8)
                            )
                        }),
                        gallery::Built::Profile(s) => render_doc(&s).unwrap_or_else(|_| {
                            format!(
                                "# {spec} is not a census system; showing its unfolding\n{}",
                                render_ascii(&s, 4, 8)
                            )
                        }),
                        gallery::Built::MsGame(g) => {
                            render_ms_doc(&g).expect("gallery ms games are census")
                        }
                    };
                    print!("{text}");
                    Ok(EXIT_HOLDS)
                }
            }
        }
    }
}

fn render_witness_doc(s: &StrategySystem) -> String {
    render_doc(s).unwrap_or_else(|_| {
        // stage witnesses have no census; describe the template family
        match s.stage() {
            Some(fam) => {
                let mut out = String::from("# stage-family witness (choices per template)\n");
                for (i, t) in fam.templates.iter().enumerate() {
                    out.push_str(&format!(
                        "# template {}: agent {} chooses {}\n",
                        i,
                        fam.arena.agent_name(t.agent),
                        fam.arena.choice_label(t.agent, t.chosen)
                    ));
                }
                out
            }
            None => "# programmatic witness".into(),
        }
    })
}
