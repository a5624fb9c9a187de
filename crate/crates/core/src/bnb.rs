//! Best-first branch and bound over the binary support indicators.
//!
//! Each node fixes some indicators to zero or one and is bounded by the
//! dual bound of its relaxation. Screening cuts act combinatorially: a node
//! whose fixings violate a cut is dropped, and a cut with one undecided
//! literal forces that literal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::Duration;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;
use web_time::Instant;

use crate::error::{input_err, Result, ScgError};
use crate::index::IndexSet;
use crate::model::{restricted_ridge, ProblemInstance};
use crate::relaxation::{solve_relaxation_lenient, Fixings, RelaxOptions, VarState};
use crate::scg::ScreeningCut;

pub const DEFAULT_TARGET_GAP: f64 = 1e-2;
/// Relative slack below which bounds count as equal.
const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub target_gap: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub relax: RelaxOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            target_gap: DEFAULT_TARGET_GAP,
            node_limit: None,
            time_limit: None,
            relax: RelaxOptions {
                tol: 1e-7,
                max_iter: 5_000,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbNode {
    pub fixed_one: IndexSet,
    pub fixed_zero: IndexSet,
    pub lower_bound: f64,
    pub depth: usize,
}

impl BnbNode {
    pub fn root() -> Self {
        BnbNode {
            fixed_one: IndexSet::empty(),
            fixed_zero: IndexSet::empty(),
            lower_bound: f64::NEG_INFINITY,
            depth: 0,
        }
    }
}

/// Root node pre-loaded with variable fixings.
pub fn apply_fixings(inst: &ProblemInstance, fix_zero: &IndexSet, fix_one: &IndexSet) -> Result<BnbNode> {
    let d = inst.d();
    if !fix_zero.within(d) || !fix_one.within(d) {
        return input_err("fixing index out of range");
    }
    if !fix_zero.is_disjoint(fix_one) {
        return input_err("an index is fixed to both zero and one");
    }
    if fix_one.len() > inst.k() {
        return input_err(format!("{} indices fixed to one but k = {}", fix_one.len(), inst.k()));
    }
    Ok(BnbNode {
        fixed_one: fix_one.clone(),
        fixed_zero: fix_zero.clone(),
        lower_bound: f64::NEG_INFINITY,
        depth: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    NodeLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn hit_limit(self) -> bool {
        matches!(self, SolveStatus::NodeLimit | SolveStatus::TimeLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapReached => "gap_reached",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::TimeLimit => "time_limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub beta_opt: Vec<f64>,
    pub z_opt: Vec<bool>,
    pub v_primal: f64,
    pub v_dual: f64,
    pub mip_gap: f64,
    pub nodes_explored: usize,
    pub cuts_used: usize,
    pub wall_time: Duration,
    pub status: SolveStatus,
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

impl SolveResult {
    pub fn support(&self) -> IndexSet {
        IndexSet::new(self.z_opt.iter().enumerate().filter(|(_, &z)| z).map(|(i, _)| i))
    }

    /// JSON summary; `timing = false` reports `time_ms = 0` so output is
    /// reproducible byte for byte.
    pub fn to_json(&self, timing: bool) -> serde_json::Value {
        let time_ms = if timing {
            self.wall_time.as_secs_f64() * 1e3
        } else {
            0.0
        };
        json!({
            "v_primal": finite_or_null(self.v_primal),
            "v_dual": finite_or_null(self.v_dual),
            "mip_gap": finite_or_null(self.mip_gap),
            "nodes": self.nodes_explored,
            "time_ms": time_ms,
            "support": self.support(),
            "status": self.status,
            "cuts_used": self.cuts_used,
        })
    }
}

/// `|v_p − v_d| / |v_p|`, or the absolute difference when `v_p = 0`.
pub fn mip_gap(v_primal: f64, v_dual: f64) -> f64 {
    let diff = (v_primal - v_dual).abs();
    if v_primal == 0.0 {
        diff
    } else {
        diff / v_primal.abs()
    }
}

enum Propagation {
    Feasible,
    Infeasible,
}

/// Cardinality and cut propagation to a fixed point.
fn propagate(states: &mut [VarState], k: usize, cuts: &[ScreeningCut]) -> Propagation {
    loop {
        let mut changed = false;
        let ones = states.iter().filter(|&&s| s == VarState::One).count();
        if ones > k {
            return Propagation::Infeasible;
        }
        if ones == k {
            for s in states.iter_mut() {
                if *s == VarState::Free {
                    *s = VarState::Zero;
                    changed = true;
                }
            }
        }
        for cut in cuts {
            let mut undecided = None;
            let mut open = 0;
            let mut satisfied = false;
            for i in cut.s.iter() {
                match states[i] {
                    VarState::Zero => satisfied = true,
                    VarState::Free => {
                        open += 1;
                        undecided = Some((i, VarState::Zero));
                    }
                    VarState::One => {}
                }
            }
            if satisfied {
                continue;
            }
            for i in cut.n.iter() {
                match states[i] {
                    VarState::One => satisfied = true,
                    VarState::Free => {
                        open += 1;
                        undecided = Some((i, VarState::One));
                    }
                    VarState::Zero => {}
                }
            }
            if satisfied {
                continue;
            }
            match (open, undecided) {
                (0, _) => return Propagation::Infeasible,
                (1, Some((i, forced))) => {
                    states[i] = forced;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Propagation::Feasible;
        }
    }
}

struct Incumbent {
    value: f64,
    beta: Vec<f64>,
    z: Vec<bool>,
}

struct Node {
    bound: f64,
    seq: u64,
    depth: usize,
    states: Vec<VarState>,
    beta: Vec<f64>,
    z_hat: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Reversed so the max-heap pops the smallest bound, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    cuts: &'a [ScreeningCut],
    opts: &'a BnbOptions,
    incumbent: Option<Incumbent>,
    evaluated: usize,
    seq: u64,
}

impl Search<'_> {
    fn try_incumbent(&mut self, support: &IndexSet) {
        let z = support.mask(self.inst.d());
        if !self.cuts.iter().all(|c| c.is_satisfied_by(&z)) {
            return;
        }
        let fit = restricted_ridge(self.inst, support);
        if self.incumbent.as_ref().is_none_or(|inc| fit.value < inc.value) {
            self.incumbent = Some(Incumbent {
                value: fit.value,
                beta: fit.beta.as_slice().to_vec(),
                z,
            });
        }
    }

    fn prune_slack(&self) -> f64 {
        match &self.incumbent {
            None => 0.0,
            Some(inc) => self.opts.target_gap * inc.value.abs() + BOUND_TOL * inc.value.abs() + 1e-12,
        }
    }

    fn is_pruned(&self, bound: f64) -> bool {
        self.incumbent
            .as_ref()
            .is_some_and(|inc| bound >= inc.value - self.prune_slack())
    }

    /// Propagates, bounds and rounds a node. `None` if it is infeasible.
    fn evaluate(
        &mut self,
        mut states: Vec<VarState>,
        parent_bound: f64,
        warm: Option<&[f64]>,
        depth: usize,
    ) -> Option<Node> {
        let k = self.inst.k();
        if let Propagation::Infeasible = propagate(&mut states, k, self.cuts) {
            return None;
        }
        self.evaluated += 1;
        self.seq += 1;
        let ones = IndexSet::new((0..states.len()).filter(|&i| states[i] == VarState::One));
        let free: Vec<usize> = (0..states.len()).filter(|&i| states[i] == VarState::Free).collect();
        if free.is_empty() {
            self.try_incumbent(&ones);
            let value = restricted_ridge(self.inst, &ones).value;
            return Some(Node {
                bound: value.max(parent_bound),
                seq: self.seq,
                depth,
                z_hat: ones
                    .mask(states.len())
                    .iter()
                    .map(|&b| f64::from(u8::from(b)))
                    .collect(),
                beta: vec![0.0; states.len()],
                states,
            });
        }
        let fix = Fixings::new(states.clone(), k).expect("propagation keeps ones within k");
        let relax = match solve_relaxation_lenient(self.inst, &fix, warm, &self.opts.relax) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("node relaxation failed: {e}");
                return None;
            }
        };
        let budget = fix.budget();
        let mut order = free.clone();
        order.sort_by(|&a, &b| {
            relax.z_hat[b]
                .total_cmp(&relax.z_hat[a])
                .then(relax.beta_hat[b].abs().total_cmp(&relax.beta_hat[a].abs()))
                .then(a.cmp(&b))
        });
        let rounded = ones.union(&IndexSet::new(order.into_iter().take(budget)));
        self.try_incumbent(&rounded);
        Some(Node {
            bound: relax.lower_bound().max(parent_bound),
            seq: self.seq,
            depth,
            states,
            beta: relax.beta_hat,
            z_hat: relax.z_hat,
        })
    }

    fn branch_variable(&self, node: &Node) -> usize {
        let free = (0..node.states.len()).filter(|&i| node.states[i] == VarState::Free);
        let frac = free
            .clone()
            .filter(|&i| node.z_hat[i] > 1e-9 && node.z_hat[i] < 1.0 - 1e-9)
            .min_by(|&a, &b| {
                (node.z_hat[a] - 0.5)
                    .abs()
                    .total_cmp(&(node.z_hat[b] - 0.5).abs())
                    .then(a.cmp(&b))
            });
        if let Some(i) = frac {
            return i;
        }
        // Integral relaxation: prefer a variable of a cut the rounding breaks.
        let z: Vec<bool> = node.z_hat.iter().map(|&v| v > 0.5).collect();
        for cut in self.cuts {
            if !cut.is_satisfied_by(&z) {
                if let Some(i) = cut
                    .s
                    .iter()
                    .chain(cut.n.iter())
                    .find(|&i| node.states[i] == VarState::Free)
                {
                    return i;
                }
            }
        }
        free.max_by(|&a, &b| node.z_hat[a].total_cmp(&node.z_hat[b]).then(b.cmp(&a)))
            .expect("branching needs a free variable")
    }
}

/// Solves from the unconstrained root.
pub fn solve(inst: &ProblemInstance, cuts: &[ScreeningCut], opts: &BnbOptions) -> Result<SolveResult> {
    solve_from(inst, &BnbNode::root(), cuts, opts)
}

/// Solves from a given root node.
pub fn solve_from(
    inst: &ProblemInstance,
    root: &BnbNode,
    cuts: &[ScreeningCut],
    opts: &BnbOptions,
) -> Result<SolveResult> {
    let start = Instant::now();
    let d = inst.d();
    if opts.target_gap.is_nan() || opts.target_gap < 0.0 {
        return input_err("target gap must be non-negative");
    }
    for cut in cuts {
        if !cut.s.within(d) || !cut.n.within(d) {
            return input_err(format!("cut {cut} references an index beyond d = {d}"));
        }
    }
    let mut states = vec![VarState::Free; d];
    for i in root.fixed_zero.iter() {
        states[i] = VarState::Zero;
    }
    for i in root.fixed_one.iter() {
        states[i] = VarState::One;
    }

    let mut search = Search {
        inst,
        cuts,
        opts,
        incumbent: None,
        evaluated: 0,
        seq: 0,
    };
    let Some(root_node) = search.evaluate(states, root.lower_bound, None, 0) else {
        return Err(ScgError::Infeasible);
    };
    let mut heap = BinaryHeap::new();
    heap.push(root_node);
    let mut pruned_min = f64::INFINITY;
    let mut status = None;

    loop {
        let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
        let inc_value = search.incumbent.as_ref().map_or(f64::INFINITY, |i| i.value);
        let v_dual = open_min.min(pruned_min).min(inc_value);
        if heap.is_empty() || mip_gap(inc_value, v_dual) <= opts.target_gap {
            break;
        }
        if opts.node_limit.is_some_and(|l| search.evaluated >= l) {
            status = Some(SolveStatus::NodeLimit);
            break;
        }
        if opts.time_limit.is_some_and(|l| start.elapsed() >= l) {
            status = Some(SolveStatus::TimeLimit);
            break;
        }
        let node = heap.pop().expect("heap is non-empty");
        if search.is_pruned(node.bound) {
            pruned_min = pruned_min.min(node.bound);
            continue;
        }
        if node.states.iter().all(|&s| s != VarState::Free) {
            // Leaf: its bound is its exact value and it already fed the incumbent.
            pruned_min = pruned_min.min(node.bound);
            continue;
        }
        let i = search.branch_variable(&node);
        for value in [VarState::One, VarState::Zero] {
            let mut child = node.states.clone();
            child[i] = value;
            if let Some(c) = search.evaluate(child, node.bound, Some(&node.beta), node.depth + 1) {
                if search.is_pruned(c.bound) {
                    pruned_min = pruned_min.min(c.bound);
                } else {
                    heap.push(c);
                }
            }
        }
    }

    let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let Some(inc) = search.incumbent else {
        if heap.is_empty() {
            return Err(ScgError::Infeasible);
        }
        return Ok(SolveResult {
            beta_opt: vec![0.0; d],
            z_opt: vec![false; d],
            v_primal: f64::INFINITY,
            v_dual: open_min.min(pruned_min),
            mip_gap: f64::INFINITY,
            nodes_explored: search.evaluated,
            cuts_used: cuts.len(),
            wall_time: start.elapsed(),
            status: status.unwrap_or(SolveStatus::NodeLimit),
        });
    };
    let v_dual = open_min.min(pruned_min).min(inc.value);
    let gap = mip_gap(inc.value, v_dual);
    let status = status.unwrap_or(if gap <= BOUND_TOL || opts.target_gap == 0.0 {
        SolveStatus::Optimal
    } else {
        SolveStatus::GapReached
    });
    Ok(SolveResult {
        beta_opt: inc.beta,
        z_opt: inc.z,
        v_primal: inc.value,
        v_dual,
        mip_gap: gap,
        nodes_explored: search.evaluated,
        cuts_used: cuts.len(),
        wall_time: start.elapsed(),
        status,
    })
}

/// Objective of a solve result, recomputed from its coefficients.
pub fn recompute_value(inst: &ProblemInstance, result: &SolveResult) -> f64 {
    let beta = DVector::from_column_slice(&result.beta_opt);
    inst.loss(&beta) + inst.gamma() * beta.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::diag3;
    use crate::oracle::enumerate_optimal;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::from_one_based(v).unwrap()
    }

    fn exact() -> BnbOptions {
        BnbOptions {
            target_gap: 0.0,
            ..BnbOptions::default()
        }
    }

    fn random_instance(seed: u64, n: usize, d: usize, gamma: f64, k: usize) -> ProblemInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        ProblemInstance::new(x, y, gamma, k).unwrap()
    }

    #[test]
    fn diag3_plain() {
        let r = solve(&diag3(), &[], &exact()).unwrap();
        assert!((r.v_primal - 9.5).abs() < 1e-9);
        assert_eq!(r.support(), set(&[1]));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.v_dual <= r.v_primal + 1e-9);
    }

    #[test]
    fn diag3_with_cuts() {
        let plain = solve(&diag3(), &[], &exact()).unwrap();
        let cuts = vec![
            ScreeningCut::new(set(&[3]), IndexSet::empty()).unwrap(),
            ScreeningCut::new(IndexSet::empty(), set(&[1, 2])).unwrap(),
        ];
        let r = solve(&diag3(), &cuts, &exact()).unwrap();
        assert!((r.v_primal - plain.v_primal).abs() < 1e-9);
        assert!(r.nodes_explored <= plain.nodes_explored);
        assert!(cuts.iter().all(|c| c.is_satisfied_by(&r.z_opt)));
        assert_eq!(r.cuts_used, 2);
    }

    #[test]
    fn full_budget_is_a_single_node() {
        let inst = random_instance(4, 9, 5, 0.3, 5);
        let r = solve(&inst, &[], &exact()).unwrap();
        let full = restricted_ridge(&inst, &IndexSet::range(0, 5));
        assert_eq!(r.nodes_explored, 1);
        assert!((r.v_primal - full.value).abs() < 1e-10);
        assert!(r.mip_gap < 1e-8);
    }

    #[test]
    fn fixings_examples() {
        let inst = diag3();
        let root = apply_fixings(&inst, &IndexSet::empty(), &IndexSet::empty()).unwrap();
        assert_eq!(root, BnbNode::root());
        let root = apply_fixings(&inst, &set(&[3]), &IndexSet::empty()).unwrap();
        let r = solve_from(&inst, &root, &[], &exact()).unwrap();
        assert!((r.v_primal - 9.5).abs() < 1e-9);
        let root = apply_fixings(&inst, &IndexSet::empty(), &set(&[2])).unwrap();
        let r = solve_from(&inst, &root, &[], &exact()).unwrap();
        assert_eq!(r.nodes_explored, 1);
        assert_eq!(r.support(), set(&[2]));
        assert!(apply_fixings(&inst, &IndexSet::empty(), &set(&[1, 2])).is_err());
        assert!(apply_fixings(&inst, &set(&[1]), &set(&[1])).is_err());
    }

    #[test]
    fn contradictory_cuts_are_infeasible() {
        let cuts = vec![
            ScreeningCut::new(IndexSet::empty(), set(&[1])).unwrap(),
            ScreeningCut::new(set(&[1]), IndexSet::empty()).unwrap(),
        ];
        assert!(matches!(solve(&diag3(), &cuts, &exact()), Err(ScgError::Infeasible)));
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = random_instance(9, 12, 10, 0.05, 3);
        let opts = BnbOptions {
            node_limit: Some(2),
            ..exact()
        };
        let r = solve(&inst, &[], &opts).unwrap();
        if r.status == SolveStatus::NodeLimit {
            assert!(r.v_dual <= r.v_primal + 1e-9);
        }
    }

    #[test]
    fn gap_is_relative_or_absolute() {
        assert_eq!(mip_gap(2.0, 1.0), 0.5);
        assert_eq!(mip_gap(0.0, -0.25), 0.25);
    }

    #[test]
    fn json_without_timing_is_stable() {
        let a = solve(&diag3(), &[], &exact()).unwrap().to_json(false);
        let b = solve(&diag3(), &[], &exact()).unwrap().to_json(false);
        assert_eq!(a.to_string(), b.to_string());
        assert_eq!(a["support"], json!([1]));
        assert_eq!(a["status"], json!("optimal"));
    }

    #[test]
    fn propagation_forces_last_literal() {
        let cuts = vec![ScreeningCut::new(set(&[1]), set(&[2, 3])).unwrap()];
        let mut states = vec![VarState::One, VarState::Zero, VarState::Free, VarState::Free];
        assert!(matches!(propagate(&mut states, 3, &cuts), Propagation::Feasible));
        assert_eq!(states[2], VarState::One);
        let mut states = vec![VarState::One, VarState::Zero, VarState::Zero, VarState::Free];
        assert!(matches!(propagate(&mut states, 3, &cuts), Propagation::Infeasible));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn matches_oracle(seed in 0u64..10_000, gamma in prop::sample::select(vec![0.05, 0.2, 1.0, 2.0]), k in 1usize..4) {
            let inst = random_instance(seed, 10, 8, gamma, k);
            let oracle = enumerate_optimal(&inst, 1e-9).unwrap();
            let r = solve(&inst, &[], &exact()).unwrap();
            prop_assert!((r.v_primal - oracle.v_star).abs() <= 1e-6 * oracle.v_star.abs().max(1e-12));
            prop_assert!((recompute_value(&inst, &r) - r.v_primal).abs() <= 1e-9 * r.v_primal.max(1.0));
            prop_assert!(r.v_dual <= r.v_primal + 1e-9);
            prop_assert!(r.support().len() <= k);
        }
    }
}
