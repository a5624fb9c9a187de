//! Brute-force reference solutions for small instances.

use serde::{Deserialize, Serialize};

use std::collections::BTreeSet;

use crate::cutgen::{minimal_tuples_from_point, CutMode, KnapsackPoint};
use crate::data::{generate_synthetic, GenConfig};
use crate::error::{Result, ScgError};
use crate::index::IndexSet;
use crate::model::{restricted_ridge, ProblemInstance};
use crate::scg::{binomial, cut_from_tuple, is_minimal, ScgTuple, ScreenContext, ScreeningCut};

pub const DEFAULT_BUDGET: u128 = 2_000_000;
pub const DEFAULT_TOL_OPT: f64 = 1e-9;
/// Largest `d` accepted by [`count_eliminated`].
pub const MAX_COUNT_DIM: usize = 20;
/// Per-support values are only kept up to this many supports.
const VALUE_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub v_star: f64,
    pub optimal_supports: Vec<IndexSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_support_values: Option<Vec<(IndexSet, f64)>>,
}

/// Number of supports of size at most `k` out of `d`.
pub fn support_count(d: usize, k: usize) -> u128 {
    (0..=k.min(d)).fold(0u128, |acc, i| acc.saturating_add(binomial(d, i)))
}

/// Calls `f` on every `r`-subset of `[0, d)` in lexicographic order.
fn for_each_combination(d: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r > d {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let Some(i) = (0..r).rev().find(|&i| idx[i] != i + d - r) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn enumerate_optimal(inst: &ProblemInstance, tol_opt: f64) -> Result<OracleResult> {
    enumerate_optimal_with_budget(inst, tol_opt, DEFAULT_BUDGET)
}

/// Restricted ridge on every support of size at most `k`; keeps all supports
/// within `tol_opt` (relative) of the minimum.
pub fn enumerate_optimal_with_budget(inst: &ProblemInstance, tol_opt: f64, budget: u128) -> Result<OracleResult> {
    let (d, k) = (inst.d(), inst.k());
    let required = support_count(d, k);
    if required > budget {
        return Err(ScgError::OracleRefusal { required, budget });
    }
    let mut values = Vec::with_capacity(required as usize);
    for r in 0..=k {
        for_each_combination(d, r, |c| {
            let support = IndexSet::new(c.iter().copied());
            let fit = restricted_ridge(inst, &support);
            values.push((support, fit.value));
        });
    }
    let v_star = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let cutoff = v_star + tol_opt * v_star.abs();
    let optimal_supports = values.iter().filter(|v| v.1 <= cutoff).map(|v| v.0.clone()).collect();
    let per_support_values = (values.len() <= VALUE_CAP).then_some(values);
    Ok(OracleResult {
        v_star,
        optimal_supports,
        per_support_values,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutViolation {
    pub cut: usize,
    pub support: IndexSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub violations: Vec<CutViolation>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every cut against the indicator of every optimal support.
pub fn verify_cut_safety(cuts: &[ScreeningCut], oracle: &OracleResult, d: usize) -> SafetyReport {
    let mut violations = Vec::new();
    for support in &oracle.optimal_supports {
        let z = support.mask(d);
        for (i, cut) in cuts.iter().enumerate() {
            if !cut.is_satisfied_by(&z) {
                violations.push(CutViolation {
                    cut: i,
                    support: support.clone(),
                });
            }
        }
    }
    SafetyReport { violations }
}

/// Number of binary `z` with at most `k` ones violating at least one cut.
pub fn count_eliminated(cuts: &[ScreeningCut], d: usize, k: usize) -> Result<u128> {
    if d > MAX_COUNT_DIM {
        return Err(ScgError::OracleRefusal {
            required: 1u128 << d.min(127),
            budget: 1u128 << MAX_COUNT_DIM,
        });
    }
    let masks: Vec<(u64, u64)> = cuts.iter().map(|c| (c.s.bits(), c.n.bits())).collect();
    let mut count = 0u128;
    for z in 0u64..(1u64 << d) {
        if z.count_ones() as usize > k {
            continue;
        }
        if masks.iter().any(|&(s, n)| z & s == s && z & n == 0) {
            count += 1;
        }
    }
    Ok(count)
}

/// Every minimal cut of one family with length at most `max_len`, found by
/// scanning all supports of size at most `k` for knapsack membership.
///
/// Length is `|N|` for inclusive cuts and `|S|` for exclusive ones. Refuses
/// `d > 20`.
pub fn brute_force_cuts(ctx: &ScreenContext, mode: CutMode, max_len: usize) -> Result<BTreeSet<ScreeningCut>> {
    let (d, k) = (ctx.d(), ctx.k);
    if d > MAX_COUNT_DIM {
        return Err(ScgError::OracleRefusal {
            required: 1u128 << d.min(127),
            budget: 1u128 << MAX_COUNT_DIM,
        });
    }
    let mut out = BTreeSet::new();
    for m in 1u64..(1u64 << d) {
        if m.count_ones() as usize > k {
            continue;
        }
        let supp = IndexSet::new((0..d).filter(|i| m >> i & 1 == 1));
        if !ctx.accepts_positions(supp.as_slice()) {
            continue;
        }
        let point = KnapsackPoint::new(supp, &ctx.sw);
        for t in minimal_tuples_from_point(&point, d, k)? {
            let len = match mode {
                CutMode::Inclusive if t.s.is_empty() => t.n.len(),
                CutMode::Exclusive if t.n.is_empty() => t.s.len(),
                _ => continue,
            };
            if len == 0 || len > max_len {
                continue;
            }
            let orig = ScgTuple {
                s: ctx.sw.to_indices(&t.s),
                n: ctx.sw.to_indices(&t.n),
                c: ctx.sw.to_indices(&t.c),
            };
            if is_minimal(&orig, ctx)? {
                out.insert(cut_from_tuple(&orig)?);
            }
        }
    }
    Ok(out)
}

/// Seeded small instance for oracle comparisons: correlated synthetic design
/// with `n = d`, `k` true nonzeros and SNR 3.5.
pub fn suite_instance(seed: u64, d: usize, k: usize, gamma: f64) -> Result<ProblemInstance> {
    let cfg = GenConfig {
        d,
        n: d,
        rho: 0.5,
        snr: 3.5,
        k0: k,
        seed,
    };
    generate_synthetic(&cfg)?.dataset.instance(gamma, k)
}
