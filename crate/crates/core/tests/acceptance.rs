//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured runtime (visible with `cargo test --test acceptance --
//! --nocapture`). Time limits are asserted where the criterion states one.

use std::time::Instant;

use cogame::arena::{AgentId, Pref};
use cogame::bisim::{bisim_bounded, bisim_exact, NatPolicy};
use cogame::equilibrium::{
    backward_induction, check_spe_regular, enumerate_spe_bruteforce, profile_signature, TieRule,
};
use cogame::escalation::{check_escalation, EscalationOutcome, WitnessClass};
use cogame::finiteness::{
    is_always_convergent, is_finite_game, is_finite_history_game, is_finitely_broad, Verdict,
};
use cogame::gallery::{
    self, dollar_profile, game_wfh, wfh_history_exceeding, yingyang_profile, ProfileKind,
};
use cogame::generate;
use cogame::multistage::{play_joint, sequentialize, JointChoice, MsNode};
use cogame::system::{UassignResult, View};
use cogame::textio::{parse_doc, parse_game, parse_profile, render_doc, ParsedDoc};
use cogame::Limits;

fn pass(n: u32, what: &str, started: Instant) {
    println!(
        "PASS  criterion {n}: {what}  ({} ms)",
        started.elapsed().as_millis()
    );
}

/// Criterion 1: the ying-yang escalation — a report with a period-2 lasso
/// and Good witnesses whose equilibrium certificates replay. Under 1 s.
#[test]
fn c1_yingyang_escalation() {
    let started = Instant::now();
    let limits = Limits::default();
    let s = yingyang_profile(ProfileKind::AcBc);
    let out = check_escalation(&s, "yingyang-acbc", WitnessClass::Memoryless, &limits).unwrap();
    let EscalationOutcome::Escalates(report) = out else {
        panic!("yingyang-acbc must escalate, got {out:?}");
    };
    assert_eq!(report.lasso.period(), 2, "divergence lasso has period 2");
    assert!(!report.witnesses.is_empty());
    for w in &report.witnesses {
        // the witness heads the same choice and is a verified SPE
        assert_eq!(w.witness.profile.chosen_at(w.witness.profile.root()), Some(w.head));
        let spe = check_spe_regular(&w.witness.profile, &limits).unwrap();
        assert!(spe.verdict.holds());
        w.witness
            .certificate
            .replay(&w.witness.profile, &limits)
            .expect("certificate replays");
    }
    assert!(started.elapsed().as_secs_f64() < 1.0, "runtime under 1 s");
    pass(1, "ying-yang escalation reproduced with replaying witnesses", started);
}

/// Criterion 2: the dollar-auction escalation — a report whose witnesses
/// are the opponent-always-stops profiles, certificates replaying. Under 1 s.
#[test]
fn c2_dollar_escalation() {
    let started = Instant::now();
    let limits = Limits::default();
    let s = dollar_profile(ProfileKind::AcBc, 0);
    let out = check_escalation(&s, "dollar-acbc", WitnessClass::Memoryless, &limits).unwrap();
    let EscalationOutcome::Escalates(report) = out else {
        panic!("dollar-acbc must escalate, got {out:?}");
    };
    assert_eq!(report.witnesses.len(), 2, "one witness per play template");
    for w in &report.witnesses {
        let fam = w.witness.profile.stage().expect("stage witness");
        assert_eq!(w.head, gallery::CONTINUE);
        let opponent = AgentId(1 - w.agent.0);
        let theirs = fam
            .templates
            .iter()
            .find(|t| t.agent == opponent)
            .expect("two templates");
        assert_eq!(theirs.chosen, gallery::STOP, "the opponent always stops");
        let spe = check_spe_regular(&w.witness.profile, &limits).unwrap();
        assert!(spe.verdict.holds());
        w.witness
            .certificate
            .replay(&w.witness.profile, &limits)
            .expect("certificate replays");
        // the witness plays over the node's residual game
        let residual = s.re_root(w.state).game();
        assert!(bisim_bounded(
            &w.witness.profile.game(),
            &residual,
            50,
            NatPolicy::Sample(8)
        )
        .unwrap()
        .is_equal());
    }
    assert!(started.elapsed().as_secs_f64() < 1.0, "runtime under 1 s");
    pass(2, "dollar escalation reproduced with opponent-stops witnesses", started);
}

/// Criterion 3: the finite-histories counterexample — only finite histories,
/// no longest one, not finite, not finitely broad. Under 5 s.
#[test]
fn c3_game_with_finite_histories_and_no_longest() {
    let started = Instant::now();
    let limits = Limits::default();
    let g = game_wfh();
    assert!(is_finite_history_game(&g, &limits).holds());
    assert!(is_finite_game(&g, &limits).fails());
    let (broad, _) = is_finitely_broad(&g, &limits);
    assert!(broad.fails());
    // for every n <= 10^4, exhibit a history of length > n and replay it
    for n in 0..=10_000u64 {
        let h = wfh_history_exceeding(n);
        assert!(h.len() as u64 > n);
        let mut state = g.root();
        for (i, c) in h.iter().enumerate() {
            state = g
                .step(state, *c)
                .unwrap_or_else(|| panic!("history for n={n} dies at move {i}"));
        }
        assert!(
            matches!(g.view(state), View::Leaf(_)),
            "history for n={n} must end at a leaf"
        );
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "runtime under 5 s");
    pass(3, "finite histories, no longest history (n up to 10^4)", started);
}

/// Criterion 4: backward induction equals the brute-force SPE set on at
/// least 200 random finite trees. Under 30 s total.
#[test]
fn c4_spe_oracle_equivalence() {
    let started = Instant::now();
    let limits = Limits::default();
    let mut rng = generate::rng(0x5be5);
    let mut nonempty = 0usize;
    for case in 0..200 {
        let agents = if case % 2 == 0 { 2 } else { 3 };
        let g = generate::random_finite_tree(&mut rng, agents, 4, 4096);
        let solved = backward_induction(&g, TieRule::AllOptima, &limits)
            .unwrap_or_else(|e| panic!("case {case}: solver failed: {e}"));
        let brute = enumerate_spe_bruteforce(&g, 4096, &limits)
            .unwrap_or_else(|e| panic!("case {case}: oracle failed: {e}"));
        let sig = |v: &[cogame::system::StrategySystem]| {
            let mut sigs: Vec<_> = v.iter().map(profile_signature).collect();
            sigs.sort();
            sigs.dedup();
            sigs
        };
        assert_eq!(sig(&solved), sig(&brute), "case {case}: SPE sets must match");
        if !solved.is_empty() {
            nonempty += 1;
        }
        // integer-leq preferences are total, so a solution always exists
        assert!(!solved.is_empty(), "case {case}: total preorder admits an SPE");
    }
    assert!(started.elapsed().as_secs_f64() < 30.0, "runtime under 30 s");
    pass(
        4,
        &format!("solver = oracle on 200 trees ({nonempty} nonempty SPE sets)"),
        started,
    );
}

/// Criterion 5: totality of the utility assignment on always-convergent
/// profiles, over at least 1000 random census profiles. Zero violations.
#[test]
fn c5_existence_uassign() {
    let started = Instant::now();
    let limits = Limits::default();
    let mut rng = generate::rng(0xeab5);
    let mut always_convergent = 0usize;
    for case in 0..1000 {
        let s = generate::random_census_profile(&mut rng, 12);
        if is_always_convergent(&s, &limits).holds() {
            always_convergent += 1;
            match s.uassign(limits.fuel) {
                UassignResult::Assigned(_) => {}
                other => panic!("case {case}: always-convergent profile not assigned: {other:?}"),
            }
        }
        // the check itself must hold on every input
        assert_eq!(
            cogame::finiteness::existence_uassign_check(&s, &limits),
            Verdict::Holds,
            "case {case}"
        );
    }
    assert!(always_convergent >= 100, "sample exercises the property");
    pass(
        5,
        &format!("uassign total on {always_convergent} always-convergent profiles of 1000"),
        started,
    );
}

/// Criterion 6: the utility assignment is a function — repeated evaluation
/// over the same 1000 profiles is byte-identical.
#[test]
fn c6_uassign_functionality() {
    let started = Instant::now();
    let limits = Limits::default();
    let run = || -> Vec<String> {
        let mut rng = generate::rng(0xf00d);
        (0..1000)
            .map(|_| {
                let s = generate::random_census_profile(&mut rng, 12);
                serde_json::to_string(&s.uassign(limits.fuel)).unwrap()
            })
            .collect()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "byte-identical results on repeated evaluation");
    pass(6, "uassign byte-identical over 1000 profiles, twice", started);
}

/// Criterion 7: exact bisimulation agrees with the bounded comparison at
/// depth |c1|*|c2| on at least 500 random pairs, and is an equivalence on
/// the sample.
#[test]
fn c7_bisimulation_coherence() {
    let started = Instant::now();
    let mut rng = generate::rng(0xb151);
    let mut equal_pairs = 0usize;
    let mut checked = 0usize;
    for case in 0..500 {
        // a mix of unrelated, mutated, and unrolled (bisimilar) pairs
        let g1 = generate::random_census_game(&mut rng, 12);
        let g2 = match case % 3 {
            0 => generate::random_census_game_on(&mut rng, g1.arena().clone(), 12),
            1 => generate::mutated(&mut rng, &g1),
            _ => generate::unrolled(&g1, 2),
        };
        checked += 1;
        let exact = bisim_exact(&g1, &g2).unwrap();
        let depth = (g1.reachable().unwrap().len() * g2.reachable().unwrap().len()) as u32;
        let bounded = bisim_bounded(&g1, &g2, depth, NatPolicy::Sample(8))
            .unwrap()
            .is_equal();
        assert_eq!(exact, bounded, "case {case}: exact vs bounded at product depth");
        // symmetry
        assert_eq!(exact, bisim_exact(&g2, &g1).unwrap(), "case {case}: symmetry");
        // reflexivity
        assert!(bisim_exact(&g1, &g1).unwrap(), "case {case}: reflexivity");
        if exact {
            equal_pairs += 1;
            // transitivity through a third presentation
            let g3 = generate::unrolled(&g2, 3);
            assert!(bisim_exact(&g2, &g3).unwrap());
            assert!(bisim_exact(&g1, &g3).unwrap(), "case {case}: transitivity");
        }
    }
    assert!(checked >= 500, "all pairs share arenas by construction");
    assert!(equal_pairs >= 100, "sample contains positive cases");
    pass(
        7,
        &format!("exact = bounded on {checked} pairs ({equal_pairs} bisimilar)"),
        started,
    );
}

/// Criterion 8: canonical-form round trips for every gallery census system
/// and 100 random documents; the three malformed classes are rejected with
/// positioned errors.
#[test]
fn c8_dsl_round_trip() {
    let started = Instant::now();
    // gallery census systems, games and profiles
    let mut gallery_docs = 0usize;
    for name in [
        "example-2-1",
        "threadlike",
        "threadlike-profile",
        "yingyang-game",
        "yingyang-acbc",
        "yingyang-asbc",
        "yingyang-acbs",
        "yingyang-asbs",
    ] {
        match gallery::build(name, None, None).unwrap() {
            gallery::Built::Game(g) => {
                let doc = render_doc(&g).unwrap();
                let back = parse_game(&doc).unwrap();
                assert!(bisim_exact(&g, &back).unwrap(), "{name} round trip");
                gallery_docs += 1;
            }
            gallery::Built::Profile(s) => {
                let doc = render_doc(&s).unwrap();
                let back = parse_profile(&doc).unwrap();
                assert!(bisim_exact(&s, &back).unwrap(), "{name} round trip");
                gallery_docs += 1;
            }
            gallery::Built::MsGame(_) => {}
        }
    }
    // random documents over mixed arenas
    let mut rng = generate::rng(0xd0c5);
    for case in 0..100 {
        let g = generate::random_mixed_census_game(&mut rng, 10);
        let doc = render_doc(&g).unwrap();
        let back = match parse_doc(&doc) {
            Ok(ParsedDoc::Game(g)) => g,
            other => panic!("case {case}: expected a game, got {other:?}\n{doc}"),
        };
        assert!(
            bisim_exact(&g, &back).unwrap(),
            "case {case} round trip\n{doc}"
        );
    }
    // malformed class 1: lexical
    let lex = parse_game("arena{agents A; choices A{l}; utility A int leq}\ndef t = leaf{A: $3};\nroot t").unwrap_err();
    assert_eq!(lex.line, 2);
    assert!(lex.col > 0);
    // malformed class 2: syntactic
    let syn = parse_game("arena{agents A choices A{l}; utility A int leq} def t = leaf{A:1}; root t").unwrap_err();
    assert_eq!(syn.line, 1);
    assert!(syn.col > 0);
    // malformed class 3: semantic (branch map not total)
    let sem =
        parse_game("arena{agents A; choices A{l,r}; utility A int leq}\ndef n = node A {l->t};\ndef t = leaf{A:1};\nroot n").unwrap_err();
    assert_eq!(sem.line, 2);
    assert!(sem.message.contains("`r`"), "{sem}");
    pass(
        8,
        &format!("round trips for {gallery_docs} gallery docs + 100 random docs; 3 malformed classes rejected"),
        started,
    );
}

/// Criterion 9: sequentialization preserves the outcome of every joint
/// choice, in both agent orders, on 100 random one-stage games.
#[test]
fn c9_sequentialization_outcomes() {
    let started = Instant::now();
    let mut rng = generate::rng(0x5e9);
    for case in 0..100 {
        let g = generate::random_one_stage_ms(&mut rng, 3, 3);
        let arena = g.arena().clone();
        let arities: Vec<usize> = arena
            .agents()
            .map(|a| arena.choices(a).arity().unwrap())
            .collect();
        let product: usize = arities.iter().product();
        let forward: Vec<AgentId> = arena.agents().collect();
        let mut backward = forward.clone();
        backward.reverse();
        for order in [forward, backward] {
            let seq = sequentialize(&g, &order).unwrap();
            for r in 0..product {
                let joint = JointChoice::unrank(r, &arities);
                let expected = match g.node(g.root()) {
                    MsNode::Node { branches, .. } => match g.node(branches[r]) {
                        MsNode::Leaf(p) => p.clone(),
                        _ => unreachable!("one-stage games have leaf branches"),
                    },
                    _ => unreachable!("one-stage games have a node root"),
                };
                let got = play_joint(&seq, &order, &joint, 10)
                    .unwrap_or_else(|| panic!("case {case}: joint {r} unreachable"));
                assert_eq!(expected, got, "case {case}: joint choice {r} outcome");
            }
        }
    }
    pass(9, "outcomes preserved for 100 one-stage games, both orders", started);
}

/// The preference-reading knob behind the ying-yang lemma: under strict
/// equality the escalation argument breaks, under indifference it goes
/// through. Companion to criterion 1.
#[test]
fn yingyang_pref_sensitivity() {
    let limits = Limits::default();
    let strict = cogame::gallery::yingyang_profile_with(ProfileKind::AcBc, Pref::EqualityOnly);
    let out = check_escalation(&strict, "yy-strict", WitnessClass::Memoryless, &limits).unwrap();
    assert!(matches!(out, EscalationOutcome::NoEscalation { .. }));
}
