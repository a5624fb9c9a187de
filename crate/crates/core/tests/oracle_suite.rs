//! Screening, cuts and branch and bound checked against exhaustive search on
//! small seeded instances.

use scg::bnb::{apply_fixings, solve, solve_from, BnbOptions};
use scg::cutgen::{generate_cuts_ctx, CutMode, GenConfigCuts};
use scg::oracle::{count_eliminated, enumerate_optimal, suite_instance, verify_cut_safety};
use scg::pipeline::{screen, CutSettings};
use scg::relaxation::dual_objective_at;
use scg::scg::{is_minimal, is_minimal_by_perturbation, potential_screening_ability, ScreenContext};
use scg::{ProblemInstance, RelaxOptions};

fn instances() -> impl Iterator<Item = (u64, ProblemInstance)> {
    let mut out = Vec::new();
    let mut seed = 0;
    for d in [8, 10] {
        for k in [2, 3] {
            for gamma in [0.05, 0.2, 1.0, 2.0] {
                for _ in 0..2 {
                    seed += 1;
                    out.push((seed, suite_instance(seed, d, k, gamma).unwrap()));
                }
            }
        }
    }
    out.into_iter()
}

fn full_settings(d: usize, k: usize) -> CutSettings {
    CutSettings {
        inclusive: Some(GenConfigCuts {
            mode: CutMode::Inclusive,
            max_cuts: usize::MAX,
            max_len: d - k,
        }),
        exclusive: Some(GenConfigCuts {
            mode: CutMode::Exclusive,
            max_cuts: usize::MAX,
            max_len: k.saturating_sub(1).max(1),
        }),
    }
}

#[test]
fn cuts_keep_every_optimal_support() {
    let mut total = 0;
    for (seed, inst) in instances() {
        let (d, k) = (inst.d(), inst.k());
        let sc = screen(&inst, &RelaxOptions::default(), None, &full_settings(d, k)).unwrap();
        let oracle = enumerate_optimal(&inst, 1e-9).unwrap();
        let cuts = sc.cuts();
        total += cuts.len();
        let report = verify_cut_safety(&cuts, &oracle, d);
        assert!(report.is_safe(), "seed {seed}: {:?}", report.violations);
    }
    assert!(total > 0, "the suite should produce some cuts");
}

#[test]
fn relaxation_bounds_the_optimum() {
    for (seed, inst) in instances() {
        let sc = screen(
            &inst,
            &RelaxOptions::default(),
            None,
            &CutSettings {
                inclusive: None,
                exclusive: None,
            },
        )
        .unwrap();
        let oracle = enumerate_optimal(&inst, 1e-9).unwrap();
        assert!(sc.relax.v_conic <= oracle.v_star + 1e-8, "seed {seed}");
        let dual = dual_objective_at(&inst, &sc.relax);
        assert!(
            (dual - sc.relax.v_conic).abs() <= 1e-6 * sc.relax.v_conic.abs(),
            "seed {seed}"
        );
        assert!(sc.bounds.v_ub >= oracle.v_star - 1e-12);
    }
}

#[test]
fn three_way_agreement() {
    let exact = BnbOptions {
        target_gap: 0.0,
        ..BnbOptions::default()
    };
    for (seed, inst) in instances() {
        let (d, k) = (inst.d(), inst.k());
        let v_star = enumerate_optimal(&inst, 1e-9).unwrap().v_star;
        let sc = screen(&inst, &RelaxOptions::default(), None, &CutSettings::defaults(d, k)).unwrap();
        let plain = solve(&inst, &[], &exact).unwrap();
        let root = apply_fixings(&inst, &sc.fixings.fix_zero, &sc.fixings.fix_one).unwrap();
        let ssr = solve_from(&inst, &root, &[], &exact).unwrap();
        let cuts = sc.cuts();
        let scg = solve(&inst, &cuts, &exact).unwrap();
        for (name, r) in [("plain", &plain), ("ssr", &ssr), ("scg", &scg)] {
            let rel = (r.v_primal - v_star).abs() / v_star.abs().max(1e-12);
            assert!(rel <= 1e-6, "seed {seed} {name}: {} vs {v_star}", r.v_primal);
            assert!(r.v_dual <= r.v_primal + 1e-9);
        }
        assert!(cuts.iter().all(|c| c.is_satisfied_by(&scg.z_opt)));
    }
}

#[test]
fn emitted_tuples_are_minimal_and_counted_exactly() {
    for (_, inst) in instances() {
        let (d, k) = (inst.d(), inst.k());
        let sc = screen(
            &inst,
            &RelaxOptions::default(),
            None,
            &CutSettings {
                inclusive: None,
                exclusive: None,
            },
        )
        .unwrap();
        let ctx = ScreenContext::from_bounds(&sc.relax.w_hat, &sc.bounds).unwrap();
        for (mode, cfg) in [
            (CutMode::Inclusive, full_settings(d, k).inclusive.unwrap()),
            (CutMode::Exclusive, full_settings(d, k).exclusive.unwrap()),
        ] {
            let batch = generate_cuts_ctx(&ctx, &cfg);
            assert_eq!(batch.meta.mode, mode);
            for (t, cut) in batch.tuples.iter().zip(&batch.cuts) {
                assert!(is_minimal(t, &ctx).unwrap());
                assert!(is_minimal_by_perturbation(t, &ctx));
                let counted = count_eliminated(std::slice::from_ref(cut), d, k).unwrap();
                assert_eq!(potential_screening_ability(t, d), counted);
            }
        }
    }
}
