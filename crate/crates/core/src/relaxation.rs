//! Perspective relaxation of sparse ridge regression.
//!
//! The relaxation replaces `γβ_i²` by `γβ_i²/z_i` with `z ∈ [0,1]^d`,
//! `Σz ≤ k`. For fixed β the inner minimum over z has a closed form
//! (waterfilling), so the problem is solved in β alone:
//!
//! ```text
//! F(β) = (1/n)‖Y − Xβ‖² + γ·g(β),   g(β) = min_z Σ β_i²/z_i
//! ```
//!
//! `g` is convex but not differentiable where a zero coordinate competes for
//! the budget, so the solver is an accelerated proximal gradient method with
//! backtracking. The proximal map of `g` is itself a waterfilling problem and
//! is evaluated exactly.
//!
//! Every solve also reports a Fenchel dual bound built from
//! `p̂ = −∇L(β̂)/γ`. That bound is a valid lower bound on the relaxation for
//! any β̂, converged or not, which is what the screening and branching code
//! relies on.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result, ScgError};
use crate::index::IndexSet;
use crate::model::{lex_cmp, restricted_ridge, ProblemInstance};

/// Margin subtracted from every strict reduced-cost comparison.
pub const EPS_SAFE: f64 = 1e-7;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Status of one binary variable inside a (sub)problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarState {
    Free,
    One,
    Zero,
}

/// Per-coordinate fixings; the free coordinates share the remaining budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixings {
    states: Vec<VarState>,
    k: usize,
}

impl Fixings {
    pub fn free(d: usize, k: usize) -> Self {
        Fixings {
            states: vec![VarState::Free; d],
            k,
        }
    }

    pub fn new(states: Vec<VarState>, k: usize) -> Result<Self> {
        let ones = states.iter().filter(|&&s| s == VarState::One).count();
        if ones > k {
            return input_err(format!("{ones} variables fixed to one but k = {k}"));
        }
        Ok(Fixings { states, k })
    }

    pub fn states(&self) -> &[VarState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> VarState {
        self.states[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ones(&self) -> usize {
        self.states.iter().filter(|&&s| s == VarState::One).count()
    }

    /// Budget left for free coordinates.
    pub fn budget(&self) -> usize {
        self.k - self.ones()
    }

    pub fn set_of(&self, state: VarState) -> IndexSet {
        IndexSet::new(
            self.states
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == state)
                .map(|(i, _)| i),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Primal and dual quantities of a relaxation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSolution {
    pub beta_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub p_hat: Vec<f64>,
    /// `p̂ ∘ p̂`.
    pub w_hat: Vec<f64>,
    /// Primal relaxation value `F(β̂)`.
    pub v_conic: f64,
    /// Fenchel dual value at `p̂`; never above the true relaxation optimum.
    pub v_dual: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl RelaxationSolution {
    /// The certified lower bound `min(v_conic, v_dual)`.
    pub fn lower_bound(&self) -> f64 {
        self.v_conic.min(self.v_dual)
    }
}

/// Solves `s ≥ 0` with `Σ clip(s·a_i − offset, 0, 1) = m`.
///
/// Requires more than `m` strictly positive `a_i`; the left side is then
/// continuous, nondecreasing and eventually exceeds `m`.
fn clip_level(a: &[f64], offset: f64, m: f64) -> f64 {
    // (breakpoint, index, is_start)
    let mut events: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * a.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai > 0.0 {
            events.push((offset / ai, i, true));
            events.push(((1.0 + offset) / ai, i, false));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.2.cmp(&x.2)));
    let mut slope = 0.0;
    let mut intercept = 0.0;
    for (pos, &(at, i, start)) in events.iter().enumerate() {
        if start {
            slope += a[i];
            intercept -= offset;
        } else {
            slope -= a[i];
            intercept += offset + 1.0;
        }
        // Solve inside the segment that starts here; clamping to its left
        // end absorbs rounding when the root sits on a breakpoint.
        let next = events.get(pos + 1).map_or(f64::INFINITY, |e| e.0);
        if slope * at + intercept >= m * (1.0 - 1e-12) {
            return at;
        }
        if slope > 0.0 {
            let s = (m - intercept) / slope;
            if s <= next {
                return s.max(at);
            }
        }
    }
    // Only reachable when at most m entries are positive.
    events.last().map_or(0.0, |e| e.0)
}

/// Minimizer of `Σ β_i²/z_i` over `z ∈ [0,1]^d, Σz ≤ k` for `abs_beta ≥ 0`.
///
/// When at most `k` entries are positive the budget is slack and the
/// minimizer is the support indicator; otherwise `z_i = min(1, |β_i|/θ)`
/// with `θ` chosen so that `Σz = k`.
pub fn waterfill_z(abs_beta: &[f64], k: usize) -> Vec<f64> {
    let positive = abs_beta.iter().filter(|&&a| a > 0.0).count();
    if positive <= k {
        return abs_beta.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect();
    }
    let s = clip_level(abs_beta, 0.0, k as f64);
    abs_beta.iter().map(|&a| (s * a).min(1.0)).collect()
}

/// `min_z Σ β_i²/z_i` with the `0²/0 = 0` convention.
pub fn waterfill_value(abs_beta: &[f64], k: usize) -> f64 {
    let positive = abs_beta.iter().filter(|&&a| a > 0.0).count();
    if positive <= k {
        return abs_beta.iter().map(|a| a * a).sum();
    }
    if k == 0 {
        return f64::INFINITY;
    }
    let s = clip_level(abs_beta, 0.0, k as f64);
    abs_beta
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| if s * a >= 1.0 { a * a } else { a / s })
        .sum()
}

/// Penalty `g` restricted by fixings: one-coordinates pay `β²`, zero
/// coordinates must vanish, free ones are waterfilled on the budget.
fn fixed_penalty(beta: &[f64], fix: &Fixings) -> f64 {
    let mut total = 0.0;
    let mut free = Vec::new();
    for (i, &b) in beta.iter().enumerate() {
        match fix.state(i) {
            VarState::One => total += b * b,
            VarState::Zero => {
                if b != 0.0 {
                    return f64::INFINITY;
                }
            }
            VarState::Free => free.push(b.abs()),
        }
    }
    total + waterfill_value(&free, fix.budget())
}

/// Proximal map of `lam·g` under fixings.
fn prox_penalty(v: &[f64], fix: &Fixings, lam: f64) -> Vec<f64> {
    let shrink = 1.0 + 2.0 * lam;
    let mut out = vec![0.0; v.len()];
    let free_idx: Vec<usize> = (0..v.len()).filter(|&i| fix.state(i) == VarState::Free).collect();
    for i in 0..v.len() {
        if fix.state(i) == VarState::One {
            out[i] = v[i] / shrink;
        }
    }
    let budget = fix.budget();
    if budget == 0 || free_idx.is_empty() {
        return out;
    }
    let a: Vec<f64> = free_idx.iter().map(|&i| v[i].abs()).collect();
    let positive = a.iter().filter(|&&x| x > 0.0).count();
    if positive <= budget {
        for &i in &free_idx {
            out[i] = v[i] / shrink;
        }
        return out;
    }
    let offset = 2.0 * lam;
    let s = clip_level(&a, offset, budget as f64);
    for (pos, &i) in free_idx.iter().enumerate() {
        let z = (s * a[pos] - offset).clamp(0.0, 1.0);
        if z > 0.0 {
            out[i] = v[i] * z / (z + offset);
        }
    }
    out
}

fn largest_eigenvalue(inst: &ProblemInstance) -> f64 {
    let g = inst.gram();
    let d = inst.d();
    let mut v = DVector::from_fn(d, |i, _| 1.0 + (i as f64) * 1e-3);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..60 {
        let w = g * &v;
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        lambda = nrm;
        v = w / nrm;
    }
    lambda
}

/// Smooth part without the constant `‖Y‖²/n`: `βᵀGβ − 2bᵀβ`.
fn smooth_part(inst: &ProblemInstance, beta: &DVector<f64>) -> f64 {
    beta.dot(&(inst.gram() * beta)) - 2.0 * inst.xty().dot(beta)
}

/// Solves the relaxation with all variables free.
pub fn solve_relaxation(inst: &ProblemInstance, opts: &RelaxOptions) -> Result<RelaxationSolution> {
    solve_relaxation_fixed(inst, &Fixings::free(inst.d(), inst.k()), None, opts)
}

/// Solves the relaxation under fixings, optionally warm-started.
pub fn solve_relaxation_fixed(
    inst: &ProblemInstance,
    fix: &Fixings,
    warm: Option<&[f64]>,
    opts: &RelaxOptions,
) -> Result<RelaxationSolution> {
    let d = inst.d();
    if fix.states().len() != d {
        return input_err("fixings length differs from d");
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return input_err("tol must be positive");
    }
    let gamma = inst.gamma();

    let mut x = DVector::zeros(d);
    if let Some(w) = warm {
        if w.len() == d {
            x = DVector::from_column_slice(w);
        }
    }
    // Make the start point feasible for the fixings.
    x = DVector::from_vec(prox_penalty(x.as_slice(), fix, 0.0));

    let scale = (2.0 * inst.xty().norm()).max(1.0);
    let tol = opts.tol * scale;
    let mu = 2.0 * gamma;
    let mut lip = (2.0 * largest_eigenvalue(inst)).max(1e-12);

    let objective = |b: &DVector<f64>| smooth_part(inst, b) + gamma * fixed_penalty(b.as_slice(), fix);

    let mut y = x.clone();
    let mut fx = objective(&x);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=opts.max_iter {
        iterations = it;
        let grad = inst.loss_gradient(&y);
        let (x_new, diff) = loop {
            let step = 1.0 / lip;
            let v = &y - &grad * step;
            let cand = DVector::from_vec(prox_penalty(v.as_slice(), fix, gamma * step));
            let diff = &cand - &y;
            // f is quadratic: f(y+Δ) − f(y) − ∇f(y)ᵀΔ = ΔᵀGΔ exactly.
            let curvature = diff.dot(&(inst.gram() * &diff));
            if curvature <= 0.5 * lip * diff.norm_squared() * (1.0 + 1e-12) {
                break (cand, diff);
            }
            lip *= 2.0;
        };
        residual = lip * diff.norm();
        let f_new = objective(&x_new);
        if residual <= tol {
            x = x_new;
            converged = true;
            break;
        }
        if f_new > fx {
            // Adaptive restart: drop the momentum.
            y = x_new.clone();
        } else {
            let q = (mu / lip).min(1.0);
            let momentum = (1.0 - q.sqrt()) / (1.0 + q.sqrt());
            y = &x_new + (&x_new - &x) * momentum;
        }
        x = x_new;
        fx = f_new;
    }

    let sol = assemble(inst, fix, x, iterations, residual);
    if converged || opts.max_iter == 0 && residual <= tol {
        Ok(sol)
    } else {
        Err(ScgError::Convergence {
            iterations,
            residual,
            best: Box::new(sol),
        })
    }
}

/// Like [`solve_relaxation_fixed`] but keeps the best iterate on a
/// convergence failure. Its dual bound is valid either way.
pub fn solve_relaxation_lenient(
    inst: &ProblemInstance,
    fix: &Fixings,
    warm: Option<&[f64]>,
    opts: &RelaxOptions,
) -> Result<RelaxationSolution> {
    match solve_relaxation_fixed(inst, fix, warm, opts) {
        Err(ScgError::Convergence { best, .. }) => {
            log::debug!("relaxation stopped early, residual {:.2e}", best.kkt_residual);
            Ok(*best)
        }
        other => other,
    }
}

fn assemble(
    inst: &ProblemInstance,
    fix: &Fixings,
    beta: DVector<f64>,
    iterations: usize,
    residual: f64,
) -> RelaxationSolution {
    let gamma = inst.gamma();
    let d = inst.d();
    let free_idx: Vec<usize> = (0..d).filter(|&i| fix.state(i) == VarState::Free).collect();
    let free_abs: Vec<f64> = free_idx.iter().map(|&i| beta[i].abs()).collect();
    let free_z = waterfill_z(&free_abs, fix.budget());
    let mut z_hat: Vec<f64> = fix
        .states()
        .iter()
        .map(|&s| if s == VarState::One { 1.0 } else { 0.0 })
        .collect();
    for (pos, &i) in free_idx.iter().enumerate() {
        z_hat[i] = free_z[pos];
    }

    let p = dual_from_primal(inst, &beta);
    let w_hat: Vec<f64> = p.iter().map(|v| v * v).collect();

    let loss = inst.loss(&beta);
    let v_conic = loss + gamma * fixed_penalty(beta.as_slice(), fix);

    let mut free_w: Vec<f64> = free_idx.iter().map(|&i| w_hat[i]).collect();
    free_w.sort_by(|a, b| b.total_cmp(a));
    let fixed_w: f64 = (0..d)
        .filter(|&i| fix.state(i) == VarState::One)
        .map(|i| w_hat[i])
        .sum();
    let top_free: f64 = free_w.iter().take(fix.budget()).sum();
    let linear: f64 = p.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
    let v_dual = loss + gamma * linear - 0.25 * gamma * (fixed_w + top_free);

    RelaxationSolution {
        beta_hat: beta.as_slice().to_vec(),
        z_hat,
        p_hat: p,
        w_hat,
        v_conic,
        v_dual,
        iterations,
        kkt_residual: residual,
    }
}

/// Fenchel dual certificate `p̂ = −∇L(β̂)/γ`.
pub fn dual_from_primal(inst: &ProblemInstance, beta_hat: &DVector<f64>) -> Vec<f64> {
    let g = inst.loss_gradient(beta_hat);
    g.iter().map(|v| -v / inst.gamma()).collect()
}

/// Fenchel dual objective evaluated at the triple `(p̂, β̂, ẑ)`.
pub fn dual_objective_at(inst: &ProblemInstance, relax: &RelaxationSolution) -> f64 {
    let beta = DVector::from_column_slice(&relax.beta_hat);
    let mut acc = 0.0;
    for i in 0..inst.d() {
        acc += relax.p_hat[i] * relax.beta_hat[i] - relax.w_hat[i] * relax.z_hat[i] / 4.0;
    }
    inst.loss(&beta) + inst.gamma() * acc
}

/// Bound information feeding the screening rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsContext {
    pub v_ub: f64,
    pub v_conic: f64,
    /// Lower bound actually used for the gap (`min(v_conic, v_dual)`).
    pub v_lower: f64,
    pub gap: f64,
    /// `c(ŵ) = Σ_{i≤k} ŵ_[i] − (4/γ)·gap`.
    pub c_threshold: f64,
    pub gamma: f64,
    pub k: usize,
}

impl BoundsContext {
    /// Right-hand side `(4/γ)·gap` of the reduced-cost inequality.
    pub fn margin(&self) -> f64 {
        4.0 * self.gap / self.gamma
    }
}

/// Rounds `ẑ` to a support of size `k` and solves the restricted ridge on it.
/// Ties in `ẑ` go to the larger `|β̂_i|`, then to the smaller index.
pub fn upper_bound(inst: &ProblemInstance, relax: &RelaxationSolution) -> (f64, IndexSet) {
    let d = inst.d();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| {
        relax.z_hat[b]
            .total_cmp(&relax.z_hat[a])
            .then(relax.beta_hat[b].abs().total_cmp(&relax.beta_hat[a].abs()))
            .then(a.cmp(&b))
    });
    let support = IndexSet::new(idx.into_iter().take(inst.k()));
    let fit = restricted_ridge(inst, &support);
    (fit.value, support)
}

pub fn make_bounds(inst: &ProblemInstance, relax: &RelaxationSolution, v_ub: f64) -> BoundsContext {
    let v_lower = relax.lower_bound();
    let raw_gap = v_ub - v_lower;
    if raw_gap < -1e-9 * v_ub.abs().max(1.0) {
        log::warn!("upper bound {v_ub} lies below the relaxation bound {v_lower}");
    }
    let gap = raw_gap.max(0.0);
    let k = inst.k();
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..relax.w_hat.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(&relax.w_hat, a, b));
        idx
    };
    let top: f64 = order.iter().take(k).map(|&i| relax.w_hat[i]).sum();
    BoundsContext {
        v_ub,
        v_conic: relax.v_conic,
        v_lower,
        gap,
        c_threshold: top - 4.0 * gap / inst.gamma(),
        gamma: inst.gamma(),
        k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::diag3;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn waterfill_zero_vector() {
        assert_eq!(waterfill_z(&[0.0, 0.0, 0.0], 1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn waterfill_slack_budget_is_indicator() {
        assert_eq!(waterfill_z(&[0.3, 0.0, 2.0], 2), vec![1.0, 0.0, 1.0]);
    }

    /// Independent check by a fine grid over z₁ (z₂ = 1 − z₁).
    #[test]
    fn waterfill_two_coordinates_matches_grid() {
        let z = waterfill_z(&[2.0, 1.0], 1);
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((z[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((waterfill_value(&[2.0, 1.0], 1) - 9.0).abs() < 1e-12);

        let mut best = (f64::INFINITY, 0.0);
        for step in 1..100_000 {
            let z1 = step as f64 / 100_000.0;
            let v = 4.0 / z1 + 1.0 / (1.0 - z1);
            if v < best.0 {
                best = (v, z1);
            }
        }
        assert!((best.1 - 2.0 / 3.0).abs() < 1e-4);
        assert!((best.0 - 9.0).abs() < 1e-6);
    }

    #[test]
    fn zero_response_gives_zero_relaxation() {
        let x = DMatrix::from_fn(4, 3, |r, c| (r + 2 * c) as f64);
        let inst = ProblemInstance::new(x, DVector::zeros(4), 0.5, 2).unwrap();
        let sol = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
        assert!(sol.beta_hat.iter().all(|&b| b == 0.0));
        assert!(sol.z_hat.iter().all(|&z| z == 0.0));
        assert_eq!(sol.v_conic, 0.0);
        let (v_ub, _) = upper_bound(&inst, &sol);
        assert_eq!(v_ub, 0.0);
        assert_eq!(make_bounds(&inst, &sol, v_ub).gap, 0.0);
    }

    #[test]
    fn diag3_golden_values() {
        let inst = diag3();
        let sol = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-6;
        assert!(close(sol.v_conic, 28.0 / 3.0), "{}", sol.v_conic);
        assert!(close(sol.v_dual, 28.0 / 3.0), "{}", sol.v_dual);
        for (got, want) in sol.z_hat.iter().zip([0.8, 0.2, 0.0]) {
            assert!(close(*got, want), "{:?}", sol.z_hat);
        }
        for (got, want) in sol.beta_hat.iter().zip([4.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!(close(*got, want), "{:?}", sol.beta_hat);
        }
        for (got, want) in sol.p_hat.iter().zip([10.0 / 3.0, 10.0 / 3.0, 2.0]) {
            assert!(close(*got, want), "{:?}", sol.p_hat);
        }
        for (got, want) in sol.w_hat.iter().zip([100.0 / 9.0, 100.0 / 9.0, 4.0]) {
            assert!(close(*got, want));
        }
        let (v_ub, support) = upper_bound(&inst, &sol);
        assert_eq!(support.as_slice(), &[0]);
        assert!(close(v_ub, 9.5));
        let b = make_bounds(&inst, &sol, v_ub);
        assert!(close(b.gap, 1.0 / 6.0));
        assert!(close(b.c_threshold, 94.0 / 9.0));
    }

    #[test]
    fn dual_of_interpolating_beta_is_zero() {
        let inst = diag3();
        let p = dual_from_primal(&inst, &DVector::from_vec(vec![3.0, 2.0, 1.0]));
        assert!(p.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dual_diag3_closed_form() {
        let p = dual_from_primal(&diag3(), &DVector::from_vec(vec![4.0 / 3.0, 1.0 / 3.0, 0.0]));
        for (got, want) in p.iter().zip([10.0 / 3.0, 10.0 / 3.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn full_budget_relaxation_is_exact() {
        let inst = random_instance(7, 10, 5, 0.4, 5);
        let sol = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
        let (v_ub, _) = upper_bound(&inst, &sol);
        let b = make_bounds(&inst, &sol, v_ub);
        assert!(b.gap < 1e-8, "gap {}", b.gap);
        let full = restricted_ridge(&inst, &IndexSet::range(0, 5));
        assert!((v_ub - full.value).abs() < 1e-10);
    }

    #[test]
    fn threshold_tends_to_top_sum_for_large_gamma_limit() {
        let sol = solve_relaxation(&diag3(), &RelaxOptions::default()).unwrap();
        let mut bounds = make_bounds(&diag3(), &sol, 9.5);
        let top = bounds.c_threshold + 4.0 * bounds.gap / bounds.gamma;
        bounds.gap = 0.0;
        assert_eq!(bounds.margin(), 0.0);
        assert!((top - 100.0 / 9.0).abs() < 1e-6);
    }

    #[test]
    fn convergence_error_carries_iterate() {
        let inst = random_instance(3, 8, 6, 0.05, 2);
        let opts = RelaxOptions {
            tol: 1e-14,
            max_iter: 3,
        };
        match solve_relaxation(&inst, &opts) {
            Err(ScgError::Convergence { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(best.beta_hat.len(), 6);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn fixings_are_respected() {
        let inst = random_instance(11, 8, 6, 0.3, 3);
        let mut states = vec![VarState::Free; 6];
        states[0] = VarState::Zero;
        states[4] = VarState::One;
        let fix = Fixings::new(states, 3).unwrap();
        let sol = solve_relaxation_fixed(&inst, &fix, None, &RelaxOptions::default()).unwrap();
        assert_eq!(sol.beta_hat[0], 0.0);
        assert_eq!(sol.z_hat[0], 0.0);
        assert_eq!(sol.z_hat[4], 1.0);
        let free_sum: f64 = sol.z_hat.iter().sum::<f64>() - 1.0;
        assert!(free_sum <= 2.0 + 1e-8);
        assert!((sol.v_conic - sol.v_dual).abs() < 1e-7 * sol.v_conic.max(1.0));
    }

    pub(crate) fn random_instance(seed: u64, n: usize, d: usize, gamma: f64, k: usize) -> ProblemInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        ProblemInstance::new(x, y, gamma, k).unwrap()
    }

    proptest! {
        #[test]
        fn waterfill_beats_random_feasible_z(
            beta in proptest::collection::vec(-3.0f64..3.0, 2..8),
            k_raw in 1usize..8,
            seed in 0u64..10_000,
        ) {
            let d = beta.len();
            let k = k_raw.min(d);
            let abs: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
            let z = waterfill_z(&abs, k);
            prop_assert!(z.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(z.iter().sum::<f64>() <= k as f64 + 1e-9);
            let inner = |z: &[f64]| -> f64 {
                abs.iter().zip(z).map(|(a, &zi)| if *a == 0.0 { 0.0 } else if zi == 0.0 { f64::INFINITY } else { a * a / zi }).sum()
            };
            let best = inner(&z);
            prop_assert!((best - waterfill_value(&abs, k)).abs() <= 1e-9 * best.max(1.0));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let mut cand: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
                let total: f64 = cand.iter().sum();
                if total > k as f64 {
                    for c in cand.iter_mut() { *c *= k as f64 / total; }
                }
                prop_assert!(best <= inner(&cand) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn relaxation_monotone_in_k(seed in 0u64..500) {
            let inst = random_instance(seed, 7, 6, 0.2, 2);
            let a = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
            let b = solve_relaxation(&inst.with_k(3).unwrap(), &RelaxOptions::default()).unwrap();
            prop_assert!(b.v_conic <= a.v_conic + 1e-9);
        }

        #[test]
        fn dual_matches_primal_at_convergence(seed in 0u64..500, gamma in 0.05f64..3.0) {
            let inst = random_instance(seed, 8, 7, gamma, 3);
            let sol = solve_relaxation(&inst, &RelaxOptions::default()).unwrap();
            prop_assert!(sol.v_dual <= sol.v_conic + 1e-12);
            let rel = (sol.v_conic - sol.v_dual).abs() / sol.v_conic.abs().max(1e-12);
            prop_assert!(rel < 1e-6, "rel {}", rel);
            let at = dual_objective_at(&inst, &sol);
            prop_assert!((at - sol.v_conic).abs() / sol.v_conic.abs().max(1e-12) < 1e-6);
            for i in 0..7 {
                if sol.z_hat[i] > 0.01 {
                    let alt = 2.0 * sol.beta_hat[i] / sol.z_hat[i];
                    prop_assert!((sol.p_hat[i] - alt).abs() <= 1e-4, "{} vs {}", sol.p_hat[i], alt);
                }
            }
        }
    }
}
