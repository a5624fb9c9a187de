//! End-to-end check on the diagonal design X = √3·I, Y = √3·(3,2,1), γ = 1, k = 1.

use nalgebra::{DMatrix, DVector};
use scg::bnb::{solve, BnbOptions};
use scg::cutgen::{generate_cuts, CutMode, GenConfigCuts};
use scg::oracle::{enumerate_optimal, verify_cut_safety};
use scg::relaxation::{make_bounds, upper_bound};
use scg::scg::{ssr_screen, ScreeningCut};
use scg::{solve_relaxation, IndexSet, ProblemInstance, RelaxOptions};

fn diag3() -> ProblemInstance {
    let s = 3f64.sqrt();
    let x = DMatrix::from_diagonal(&DVector::from_element(3, s));
    let y = DVector::from_vec(vec![3.0 * s, 2.0 * s, s]);
    ProblemInstance::new(x, y, 1.0, 1).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-6
}

#[test]
fn pipeline_reproduces_closed_forms() {
    let inst = diag3();
    let relax = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
    assert!(close(relax.v_conic, 28.0 / 3.0));
    let (v_ub, support) = upper_bound(&inst, &relax);
    assert_eq!(support, IndexSet::new([0]));
    let bounds = make_bounds(&inst, &relax, v_ub);
    assert!(close(bounds.gap, 1.0 / 6.0));
    assert!(close(bounds.c_threshold, 94.0 / 9.0));

    let fix = ssr_screen(&relax.w_hat, 1.0, bounds.gap, 1).unwrap();
    assert_eq!(fix.fix_zero, IndexSet::new([2]));
    assert!(fix.fix_one.is_empty());

    let inc = generate_cuts(
        &relax,
        &bounds,
        &GenConfigCuts {
            mode: CutMode::Inclusive,
            max_cuts: 10,
            max_len: 2,
        },
    )
    .unwrap();
    assert_eq!(
        inc.cuts,
        vec![ScreeningCut::new(IndexSet::empty(), IndexSet::new([0, 1])).unwrap()]
    );
    let exc = generate_cuts(
        &relax,
        &bounds,
        &GenConfigCuts {
            mode: CutMode::Exclusive,
            max_cuts: 10,
            max_len: 3,
        },
    )
    .unwrap();
    assert!(exc.cuts.is_empty());

    let oracle = enumerate_optimal(&inst, 1e-9).unwrap();
    let mut cuts = inc.cuts.clone();
    cuts.push(ScreeningCut::new(IndexSet::new([2]), IndexSet::empty()).unwrap());
    assert!(verify_cut_safety(&cuts, &oracle, 3).is_safe());

    let exact = BnbOptions {
        target_gap: 0.0,
        ..BnbOptions::default()
    };
    let plain = solve(&inst, &[], &exact).unwrap();
    let with_cuts = solve(&inst, &cuts, &exact).unwrap();
    assert!(close(plain.v_primal, 9.5));
    assert!(close(with_cuts.v_primal, 9.5));
    assert!(with_cuts.nodes_explored <= plain.nodes_explored);
}
