//! Screening tuples `(S, N, C)`, their validity and minimality, and the
//! single-variable screening baseline.
//!
//! A tuple asserts that no optimal binary `z` has `z_S = 1` and `z_N = 0`.
//! It is valid when the reduced-cost inequality
//!
//! ```text
//! Σ_{i≤k} ŵ_[i] − Σ_{S} ŵ − Σ_{C} ŵ  >  (4/γ)·gap
//! ```
//!
//! holds, where `C` is the best completion of `S` among the remaining
//! indices. All weight comparisons use `(value, index)` order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::index::IndexSet;
use crate::order::SortedWeights;
use crate::relaxation::{BoundsContext, EPS_SAFE};

/// Sorted weights plus the right-hand side of the reduced-cost test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreenContext {
    pub sw: SortedWeights,
    pub k: usize,
    /// `(4/γ)·gap`.
    pub margin: f64,
}

impl ScreenContext {
    pub fn new(w_hat: &[f64], k: usize, margin: f64) -> Result<Self> {
        if k == 0 || k > w_hat.len() {
            return input_err(format!("k = {k} outside [1, {}]", w_hat.len()));
        }
        if w_hat.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return input_err("weights must be finite and non-negative");
        }
        Ok(ScreenContext {
            sw: SortedWeights::new(w_hat),
            k,
            margin,
        })
    }

    pub fn from_gap(w_hat: &[f64], k: usize, gamma: f64, gap: f64) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 || gap.is_nan() || gap < 0.0 {
            return input_err("need gamma > 0 and gap >= 0");
        }
        Self::new(w_hat, k, 4.0 * gap / gamma)
    }

    pub fn from_bounds(w_hat: &[f64], bounds: &BoundsContext) -> Result<Self> {
        Self::new(w_hat, bounds.k, bounds.margin())
    }

    /// Context for a knapsack threshold `c` given directly.
    pub fn from_threshold(w_hat: &[f64], k: usize, c: f64) -> Result<Self> {
        let mut ctx = Self::new(w_hat, k, 0.0)?;
        ctx.margin = ctx.sw.top_sum(k) - c;
        Ok(ctx)
    }

    pub fn d(&self) -> usize {
        self.sw.d()
    }

    /// `c(ŵ) = Σ_{i≤k} ŵ_[i] − margin`.
    pub fn c_threshold(&self) -> f64 {
        self.sw.top_sum(self.k) - self.margin
    }

    /// Strict reduced-cost test on a reduced cost value.
    pub fn accepts(&self, reduced_cost: f64) -> bool {
        reduced_cost > self.margin + EPS_SAFE
    }

    /// Whether the support given by sorted positions lies in the knapsack
    /// polytope, i.e. certifies a cut.
    pub fn accepts_positions(&self, positions: &[usize]) -> bool {
        self.accepts(self.sw.reduced_cost(self.k, positions))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScgTuple {
    #[serde(rename = "S")]
    pub s: IndexSet,
    #[serde(rename = "N")]
    pub n: IndexSet,
    #[serde(rename = "C")]
    pub c: IndexSet,
}

impl ScgTuple {
    /// `S ∪ C`, the support whose reduced cost decides validity.
    pub fn support(&self) -> IndexSet {
        self.s.union(&self.c)
    }
}

impl fmt::Display for ScgTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.s, self.n, self.c)
    }
}

/// `Σ_{S} z_i + Σ_{N} (1 − z_i) ≤ |S| + |N| − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScreeningCut {
    #[serde(rename = "S")]
    pub s: IndexSet,
    #[serde(rename = "N")]
    pub n: IndexSet,
    pub rhs: usize,
}

impl ScreeningCut {
    pub fn new(s: IndexSet, n: IndexSet) -> Result<Self> {
        if !s.is_disjoint(&n) {
            return input_err("cut sets S and N overlap");
        }
        let len = s.len() + n.len();
        if len == 0 {
            return input_err("a cut needs S or N non-empty");
        }
        Ok(ScreeningCut { s, n, rhs: len - 1 })
    }

    pub fn len(&self) -> usize {
        self.s.len() + self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// "At least one index of N is selected."
    pub fn is_inclusive(&self) -> bool {
        self.s.is_empty()
    }

    /// "Not all of S is selected."
    pub fn is_exclusive(&self) -> bool {
        self.n.is_empty()
    }

    pub fn lhs(&self, z: &[bool]) -> usize {
        self.s.iter().filter(|&i| z[i]).count() + self.n.iter().filter(|&i| !z[i]).count()
    }

    pub fn is_satisfied_by(&self, z: &[bool]) -> bool {
        self.lhs(z) <= self.rhs
    }

    /// Bitmask test for `d ≤ 64`: violated iff `S ⊆ z` and `N ∩ z = ∅`.
    pub fn is_violated_by_bits(&self, z: u64) -> bool {
        let s = self.s.bits();
        z & s == s && z & self.n.bits() == 0
    }
}

impl fmt::Display for ScreeningCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = self.s.iter().map(|i| format!("z{}", i + 1)).collect();
        terms.extend(self.n.iter().map(|i| format!("(1-z{})", i + 1)));
        write!(f, "{} <= {}", terms.join(" + "), self.rhs)
    }
}

/// Builds `(S, N, C)` with `C` the `min(k − |S|, |R|)` heaviest indices of
/// `R = [d] \ (S ∪ N)`.
pub fn build_scg_tuple(s: IndexSet, n: IndexSet, sw: &SortedWeights, k: usize) -> Result<ScgTuple> {
    let d = sw.d();
    if !s.within(d) || !n.within(d) {
        return input_err("index out of range");
    }
    if !s.is_disjoint(&n) {
        return input_err("S and N overlap");
    }
    if s.len() > k {
        return input_err(format!("|S| = {} exceeds k = {k}", s.len()));
    }
    let want = (k - s.len()).min(d - s.len() - n.len());
    let c = IndexSet::new(
        sw.perm
            .iter()
            .copied()
            .filter(|&i| !s.contains(i) && !n.contains(i))
            .take(want),
    );
    Ok(ScgTuple { s, n, c })
}

/// Reduced-cost validity of a tuple with the structure of [`build_scg_tuple`].
pub fn check_validity(tuple: &ScgTuple, ctx: &ScreenContext) -> bool {
    ctx.accepts(ctx.sw.reduced_cost_of(ctx.k, &tuple.support()))
}

/// Structural conditions on `(S, N, C)`: disjointness, the size of `C`, and
/// `C` being the heaviest part of the remaining indices.
pub fn is_well_formed(tuple: &ScgTuple, sw: &SortedWeights, k: usize) -> bool {
    let d = sw.d();
    let (s, n, c) = (&tuple.s, &tuple.n, &tuple.c);
    if !s.within(d) || !n.within(d) || !c.within(d) {
        return false;
    }
    if !s.is_disjoint(n) || !s.is_disjoint(c) || !n.is_disjoint(c) {
        return false;
    }
    if s.len() > k || s.len() + n.len() > d {
        return false;
    }
    if c.len() != (k - s.len()).min(d - n.len() - s.len()) {
        return false;
    }
    match c.iter().map(|i| sw.rank[i]).max() {
        None => true,
        Some(worst) => sw.perm[..=worst]
            .iter()
            .all(|&i| s.contains(i) || n.contains(i) || c.contains(i)),
    }
}

/// Validity checked condition by condition, without assuming the tuple came
/// from [`build_scg_tuple`].
pub fn check_validity_algebraic(tuple: &ScgTuple, ctx: &ScreenContext) -> bool {
    is_well_formed(tuple, &ctx.sw, ctx.k) && check_validity(tuple, ctx)
}

fn max_rank(set: &IndexSet, sw: &SortedWeights) -> Option<usize> {
    set.iter().map(|i| sw.rank[i]).max()
}

fn min_rank(set: &IndexSet, sw: &SortedWeights) -> Option<usize> {
    set.iter().map(|i| sw.rank[i]).min()
}

/// Rank-based minimality test for a valid tuple.
pub fn is_minimal(tuple: &ScgTuple, ctx: &ScreenContext) -> Result<bool> {
    if !check_validity_algebraic(tuple, ctx) {
        return input_err(format!("tuple {tuple} is not valid"));
    }
    let sw = &ctx.sw;
    let (d, k) = (ctx.d(), ctx.k);
    let (s, n, c) = (&tuple.s, &tuple.n, &tuple.c);
    if n.len() > d - k {
        return Ok(s.is_empty());
    }
    if c.is_empty() {
        return Ok(n.is_empty() && !s.iter().any(|i| sw.rank[i] == 0));
    }
    let c_worst = max_rank(c, sw).unwrap_or(0);
    let n_ok = max_rank(n, sw).is_none_or(|r| r < c_worst);
    let s_ok = match min_rank(s, sw) {
        None => true,
        Some(s_best) => ((c_worst + 1)..s_best).any(|p| {
            let j = sw.perm[p];
            !s.contains(j) && !n.contains(j) && !c.contains(j)
        }),
    };
    Ok(n_ok && s_ok)
}

/// Single-coordinate perturbations: `(S, N \ {i}, C)` for `i ∈ N` and
/// `(S \ {i}, N, C ∪ {i})` for `i ∈ S`, with `C` otherwise held fixed.
pub fn perturbations(tuple: &ScgTuple) -> Vec<ScgTuple> {
    let mut out = Vec::with_capacity(tuple.s.len() + tuple.n.len());
    for i in tuple.n.iter() {
        out.push(ScgTuple {
            s: tuple.s.clone(),
            n: tuple.n.without(i),
            c: tuple.c.clone(),
        });
    }
    for i in tuple.s.iter() {
        out.push(ScgTuple {
            s: tuple.s.without(i),
            n: tuple.n.clone(),
            c: tuple.c.with(i),
        });
    }
    out
}

/// Minimality by definition: no perturbation stays valid.
pub fn is_minimal_by_perturbation(tuple: &ScgTuple, ctx: &ScreenContext) -> bool {
    perturbations(tuple).iter().all(|t| !check_validity_algebraic(t, ctx))
}

/// `S₁ ⊆ S₂` and `N₁ ⊆ N₂`: the cut of `t1` is at least as strong.
pub fn dominates(t1: &ScgTuple, t2: &ScgTuple) -> bool {
    t1.s.is_subset(&t2.s) && t1.n.is_subset(&t2.n)
}

/// `binom(n, r)` saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n − i) / (i + 1) stays integral at every step.
        let num = (n - i) as u128;
        match acc.checked_mul(num) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// `Σ_{i=0}^{|C|} binom(d − |S ∪ N|, i)`: feasible points the cut removes.
pub fn potential_screening_ability(tuple: &ScgTuple, d: usize) -> u128 {
    let free = d - tuple.s.len() - tuple.n.len();
    (0..=tuple.c.len()).fold(0u128, |acc, i| acc.saturating_add(binomial(free, i)))
}

/// Cut generated by a tuple.
pub fn cut_from_tuple(tuple: &ScgTuple) -> Result<ScreeningCut> {
    ScreeningCut::new(tuple.s.clone(), tuple.n.clone())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsrFixings {
    pub fix_zero: IndexSet,
    pub fix_one: IndexSet,
}

impl SsrFixings {
    pub fn len(&self) -> usize {
        self.fix_zero.len() + self.fix_one.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Single-variable screening rule.
///
/// `j` outside the top k is fixed to zero when `ŵ_[k] − ŵ_j` beats the
/// margin; `j` inside is fixed to one when `ŵ_j − ŵ_[k+1]` does. With
/// `k = d` there is no `(k+1)`-th weight; zero stands in, and no index can
/// be fixed to zero.
pub fn ssr_screen_ctx(ctx: &ScreenContext) -> SsrFixings {
    let sw = &ctx.sw;
    let k = ctx.k;
    let d = ctx.d();
    let kth = sw.w_tilde[k - 1];
    let next = sw.at(k);
    let mut fix_zero = Vec::new();
    let mut fix_one = Vec::new();
    for p in 0..d {
        let j = sw.perm[p];
        if p < k {
            if ctx.accepts(sw.w_tilde[p] - next) {
                fix_one.push(j);
            }
        } else if ctx.accepts(kth - sw.w_tilde[p]) {
            fix_zero.push(j);
        }
    }
    SsrFixings {
        fix_zero: IndexSet::new(fix_zero),
        fix_one: IndexSet::new(fix_one),
    }
}

pub fn ssr_screen(w_hat: &[f64], gamma: f64, gap: f64, k: usize) -> Result<SsrFixings> {
    Ok(ssr_screen_ctx(&ScreenContext::from_gap(w_hat, k, gamma, gap)?))
}

/// The singleton tuples whose validity coincides with the screening rule:
/// `({i}, ∅, Top_{k−1})` for `i` outside the top k and `(∅, {j}, ·)` for
/// `j` inside it.
pub fn singleton_tuples(ctx: &ScreenContext) -> Vec<ScgTuple> {
    let d = ctx.d();
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let t = if ctx.sw.rank[i] < ctx.k {
            build_scg_tuple(IndexSet::empty(), IndexSet::new([i]), &ctx.sw, ctx.k)
        } else {
            build_scg_tuple(IndexSet::new([i]), IndexSet::empty(), &ctx.sw, ctx.k)
        };
        out.push(t.expect("singleton tuples are well formed"));
    }
    out
}
