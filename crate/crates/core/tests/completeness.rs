//! Generation with unlimited budget finds exactly the minimal cuts that an
//! exhaustive scan of the knapsack polytope finds.

use std::collections::BTreeSet;

use proptest::prelude::*;
use scg::cutgen::{generate_cuts_ctx, CutMode, GenConfigCuts};
use scg::oracle::brute_force_cuts;
use scg::scg::ScreenContext;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn generation_matches_brute_force(
        w in proptest::collection::vec(0.0f64..10.0, 3..11),
        k_raw in 1usize..10,
        frac in 0.3f64..1.0,
    ) {
        let d = w.len();
        let k = k_raw.min(d - 1);
        let top: f64 = {
            let mut s = w.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            s.iter().take(k).sum()
        };
        let ctx = ScreenContext::from_threshold(&w, k, frac * top).unwrap();
        for len in 1..=d - k {
            let cfg = GenConfigCuts { mode: CutMode::Inclusive, max_cuts: usize::MAX, max_len: len };
            let got: BTreeSet<_> = generate_cuts_ctx(&ctx, &cfg).cuts.into_iter().collect();
            prop_assert_eq!(got, brute_force_cuts(&ctx, CutMode::Inclusive, len).unwrap());
        }
        for len in 1..k {
            let cfg = GenConfigCuts { mode: CutMode::Exclusive, max_cuts: usize::MAX, max_len: len };
            let got: BTreeSet<_> = generate_cuts_ctx(&ctx, &cfg).cuts.into_iter().collect();
            prop_assert_eq!(got, brute_force_cuts(&ctx, CutMode::Exclusive, len).unwrap());
        }
    }
}
