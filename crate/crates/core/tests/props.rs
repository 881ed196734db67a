//! Cross-module invariants, property-tested over seeded random systems.

use proptest::prelude::*;

use cogame::arena::Choice;
use cogame::bisim::bisim_exact;
use cogame::equilibrium::{
    backward_induction, check_spe_finite, check_spe_regular, enumerate_spe_bruteforce, TieRule,
};
use cogame::escalation::{is_good, WitnessClass};
use cogame::finiteness::{
    is_always_convergent, is_convergent, is_finite_game, is_finite_history_game,
    is_finitely_broad,
};
use cogame::generate;
use cogame::system::{CensusNode, Space, StrategySystem, UassignResult, View};
use cogame::Limits;

proptest! {
    /// Unfolding one level deeper and truncating gives the original prefix.
    #[test]
    fn unfold_restriction(seed in any::<u64>(), depth in 0u32..5) {
        let g = generate::random_census_game(&mut generate::rng(seed), 10);
        let wider = g.unfold_prefix(depth + 1, 8);
        prop_assert_eq!(wider.truncate(depth), g.unfold_prefix(depth, 8));
    }

    /// Erasure is idempotent and preserves the census.
    #[test]
    fn erasure_idempotent(seed in any::<u64>()) {
        let s = generate::random_census_profile(&mut generate::rng(seed), 10);
        let g1 = s.game();
        let g2 = {
            // re-erasing through a fresh profile with different choices
            let again = generate::random_profile_of(&mut generate::rng(seed ^ 1), &g1);
            again.game()
        };
        prop_assert!(bisim_exact(&g1, &g2).unwrap());
        let census_of = |sys: &Space<Choice>| match sys {
            Space::Census(rows) => rows.len(),
            _ => unreachable!(),
        };
        let _ = census_of;
        prop_assert_eq!(
            s.reachable().unwrap().len(),
            g1.reachable().unwrap().len()
        );
    }

    /// A finite game has finite histories and finitely many profiles.
    #[test]
    fn finiteness_containments(seed in any::<u64>()) {
        let limits = Limits::default();
        let g = generate::random_census_game(&mut generate::rng(seed), 10);
        if is_finite_game(&g, &limits).holds() {
            prop_assert!(is_finite_history_game(&g, &limits).holds());
            let (broad, count) = is_finitely_broad(&g, &limits);
            prop_assert!(broad.holds());
            prop_assert!(count.is_some());
        }
    }

    /// The profile count matches brute-force enumeration on small trees.
    #[test]
    fn broad_count_matches_enumeration(seed in any::<u64>()) {
        let limits = Limits::default();
        let g = generate::random_finite_tree(&mut generate::rng(seed), 2, 3, 64);
        let (broad, count) = is_finitely_broad(&g, &limits);
        prop_assert!(broad.holds());
        // every profile is SPE-checked by the oracle with a trivial filter:
        // enumerate all and count
        let all = enumerate_all_count(&g);
        prop_assert_eq!(count.unwrap(), all);
    }

    /// Always-convergent implies convergent, and the utility assignment is
    /// total at the root and at every reachable subprofile.
    #[test]
    fn always_convergent_is_strong(seed in any::<u64>()) {
        let limits = Limits::default();
        let s = generate::random_census_profile(&mut generate::rng(seed), 10);
        if is_always_convergent(&s, &limits).holds() {
            prop_assert!(is_convergent(&s, &limits).holds());
            for st in s.reachable().unwrap() {
                let sub = s.re_root(st);
                prop_assert!(matches!(sub.uassign(limits.fuel), UassignResult::Assigned(_)));
            }
        }
    }

    /// The regular (greatest-fixpoint) check agrees with the finite-tree
    /// check on acyclic census profiles, and replaying certificates works.
    #[test]
    fn regular_agrees_with_finite_on_trees(seed in any::<u64>()) {
        let limits = Limits::default();
        let mut rng = generate::rng(seed);
        let g = generate::random_finite_tree(&mut rng, 2, 3, 256);
        let s = generate::random_profile_of(&mut rng, &g);
        let fin = check_spe_finite(&s, &limits).unwrap();
        let reg = check_spe_regular(&s, &limits).unwrap();
        prop_assert_eq!(fin.verdict.holds(), reg.verdict.holds());
        for out in [fin, reg] {
            if let Some(cert) = out.certificate {
                prop_assert!(cert.replay(&s, &limits).is_ok());
            }
        }
    }

    /// Every backward-induction solution passes the definitional check, and
    /// the first-optimal solution is among the all-optima solutions.
    #[test]
    fn solver_soundness(seed in any::<u64>()) {
        let limits = Limits::default();
        let g = generate::random_finite_tree(&mut generate::rng(seed), 2, 3, 512);
        let all = backward_induction(&g, TieRule::AllOptima, &limits).unwrap();
        for s in &all {
            prop_assert!(check_spe_finite(s, &limits).unwrap().verdict.holds());
        }
        // integer preferences are total, so first-optimal succeeds
        let first = backward_induction(&g, TieRule::FirstOptimal, &limits).unwrap();
        prop_assert_eq!(first.len(), 1);
        let sig = cogame::equilibrium::profile_signature(&first[0]);
        prop_assert!(all.iter().any(|s| cogame::equilibrium::profile_signature(s) == sig));
    }

    /// Parse-render round trip on random mixed-arena census systems.
    #[test]
    fn doc_round_trip(seed in any::<u64>()) {
        let g = generate::random_mixed_census_game(&mut generate::rng(seed), 8);
        let doc = cogame::textio::render_doc(&g).unwrap();
        let back = cogame::textio::parse_game(&doc).unwrap();
        prop_assert!(bisim_exact(&g, &back).unwrap());
    }
}

/// Count profiles of a finite tree by explicit enumeration.
fn enumerate_all_count(g: &cogame::system::GameSystem) -> u128 {
    // materialize the tree through the solver's oracle with a filter that
    // accepts everything: enumerate by odometer over the census rows
    let Space::Census(rows) = g.space() else { unreachable!() };
    fn count(rows: &[CensusNode<()>], idx: usize) -> u128 {
        match &rows[idx] {
            CensusNode::Leaf(_) => 1,
            CensusNode::Node { branches, .. } => {
                let mut acc = branches.len() as u128;
                for b in branches {
                    acc = acc.saturating_mul(count(rows, b.0 as usize));
                }
                acc
            }
        }
    }
    count(rows, g.root().0 as usize)
}

/// Good transfers along game bisimulation: a profile and its unrolling get
/// the same answer, with witnesses on both sides.
#[test]
fn good_is_invariant_under_unrolling() {
    let limits = Limits::default();
    let s = cogame::gallery::yingyang_profile(cogame::gallery::ProfileKind::AcBc);
    // unroll the profile by hand: two phases of the 4-state loop
    let Space::Census(rows) = s.space() else { unreachable!() };
    let n = rows.len();
    let mut nodes: Vec<CensusNode<Choice>> = Vec::new();
    for phase in 0..2usize {
        for row in rows.iter() {
            nodes.push(match row {
                CensusNode::Leaf(p) => CensusNode::Leaf(p.clone()),
                CensusNode::Node { agent, chosen, branches } => CensusNode::Node {
                    agent: *agent,
                    chosen: *chosen,
                    branches: branches
                        .iter()
                        .map(|b| cogame::system::StateRef((((phase + 1) % 2) * n) as u64 + b.0))
                        .collect(),
                },
            });
        }
    }
    let unrolled = StrategySystem::census(s.arena().clone(), nodes, 0).unwrap();
    assert!(bisim_exact(&s.game(), &unrolled.game()).unwrap());
    let (v1, w1) = is_good(&s, WitnessClass::Memoryless, &limits).unwrap();
    let (v2, w2) = is_good(&unrolled, WitnessClass::Memoryless, &limits).unwrap();
    assert_eq!(v1.holds(), v2.holds());
    for (witness, subject) in [(w1, &s), (w2, &unrolled)] {
        let w = witness.expect("good holds under indifference");
        assert!(bisim_exact(&w.profile.game(), &subject.game()).unwrap());
    }
}

/// Bounded-memory witness classes subsume the memoryless one.
#[test]
fn bounded_memory_finds_memoryless_witnesses() {
    let limits = Limits::default();
    let s = cogame::gallery::yingyang_profile(cogame::gallery::ProfileKind::AcBc);
    let (v0, _) = is_good(&s, WitnessClass::Memoryless, &limits).unwrap();
    let (v1, w1) = is_good(&s, WitnessClass::BoundedMemory(2), &limits).unwrap();
    assert_eq!(v0.holds(), v1.holds());
    let w = w1.unwrap();
    // the unrolled witness game is still the ying-yang game
    assert!(bisim_exact(&w.profile.game(), &s.game()).unwrap());
    w.certificate.replay(&w.profile, &limits).unwrap();
}

/// Profile bisimulation (the flagged extension: chosen choices compared) is
/// finer than game bisimulation.
#[test]
fn profile_bisim_is_finer_than_game_bisim() {
    use cogame::gallery::{yingyang_profile, ProfileKind};
    let a = yingyang_profile(ProfileKind::AcBc);
    let b = yingyang_profile(ProfileKind::AsBc);
    assert!(bisim_exact(&a.game(), &b.game()).unwrap());
    assert!(!bisim_exact(&a, &b).unwrap());
    assert!(bisim_exact(&a, &a).unwrap());
}

/// The ⇓-at-root phrasing of the equilibrium condition implies the nested
/// always-convergence requirements: on finitely presented profiles a Holds
/// verdict pins every reachable subprofile as always convergent too.
#[test]
fn spe_holds_implies_nested_always_convergence() {
    let limits = Limits::default();
    for seed in 0..50u64 {
        let mut rng = generate::rng(seed);
        let g = generate::random_finite_tree(&mut rng, 2, 3, 128);
        let s = generate::random_profile_of(&mut rng, &g);
        if check_spe_regular(&s, &limits).unwrap().verdict.holds() {
            for st in s.reachable().unwrap() {
                if matches!(s.view(st), View::Leaf(_)) {
                    continue;
                }
                assert!(is_always_convergent(&s.re_root(st), &limits).holds());
            }
        }
    }
}

/// The brute-force oracle respects its configured bound.
#[test]
fn brute_force_bound_respected() {
    let limits = Limits::default();
    let g = generate::random_finite_tree(&mut generate::rng(11), 2, 4, 4096);
    let (_, count) = is_finitely_broad(&g, &limits);
    let count = count.unwrap();
    if count > 1 {
        let err = enumerate_spe_bruteforce(&g, count - 1, &limits).unwrap_err();
        assert!(matches!(err, cogame::equilibrium::SpeError::TooBroad { .. }));
    }
}
