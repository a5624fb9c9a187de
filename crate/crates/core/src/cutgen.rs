//! Enumeration of minimal inclusive and exclusive screening cuts.
//!
//! Everything below works on sorted positions: position `p` holds the
//! `(p+1)`-th largest weight. A support `A` of size at most `k` certifies a
//! cut when it lies in the knapsack polytope
//!
//! ```text
//! K(w̃) = { A : |A| ≤ k, Σ_{p∈A} w̃_p < c(w̃) }
//! ```
//!
//! Class indices `s` are 1-based prefix lengths. The inclusive class `𝒯_s`
//! holds size-k supports whose last position is `s − 1`; the exclusive class
//! `𝒯'_s` holds size-k supports whose leading run is exactly `[0, s)`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::index::IndexSet;
pub use crate::order::SortedWeights;
use crate::relaxation::{BoundsContext, RelaxationSolution};
use crate::scg::{ScgTuple, ScreenContext, ScreeningCut};

pub fn sort_weights(w_hat: &[f64]) -> SortedWeights {
    SortedWeights::new(w_hat)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnapsackPoint {
    /// Sorted positions.
    pub support: IndexSet,
    pub weight_sum: f64,
}

impl KnapsackPoint {
    pub fn new(support: IndexSet, sw: &SortedWeights) -> Self {
        let weight_sum = support.iter().map(|p| sw.w_tilde[p]).sum();
        KnapsackPoint { support, weight_sum }
    }
}

/// Splits a set into maximal runs of consecutive integers.
pub fn min_consecutive_partition(a: &IndexSet) -> Result<Vec<IndexSet>> {
    if a.is_empty() {
        return input_err("cannot partition an empty set");
    }
    let mut blocks = Vec::new();
    let mut cur = vec![a.as_slice()[0]];
    for &i in &a.as_slice()[1..] {
        if i == cur[cur.len() - 1] + 1 {
            cur.push(i);
        } else {
            blocks.push(IndexSet::new(std::mem::take(&mut cur)));
            cur.push(i);
        }
    }
    blocks.push(IndexSet::new(cur));
    Ok(blocks)
}

/// Indices outside `a` that precede some element of `a`.
pub fn comp_index_set(a: &IndexSet) -> Result<IndexSet> {
    match a.last() {
        None => input_err("complementary set of an empty set"),
        Some(last) => Ok(IndexSet::range(0, last).difference(a)),
    }
}

/// Runs `A_1..A_m` of a set and the gaps `B_j` in front of each run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsecutivePartition {
    pub blocks: Vec<IndexSet>,
    pub gaps: Vec<IndexSet>,
}

impl ConsecutivePartition {
    pub fn of(a: &IndexSet) -> Result<Self> {
        let blocks = min_consecutive_partition(a)?;
        let mut gaps = Vec::with_capacity(blocks.len());
        let mut prev_end = 0;
        for b in &blocks {
            let first = b.first().unwrap_or(0);
            gaps.push(IndexSet::range(prev_end, first));
            prev_end = b.last().map_or(0, |l| l + 1);
        }
        Ok(ConsecutivePartition { blocks, gaps })
    }
}

fn union_all<'a>(sets: impl IntoIterator<Item = &'a IndexSet>) -> IndexSet {
    sets.into_iter().fold(IndexSet::empty(), |acc, s| acc.union(s))
}

/// Minimal tuples induced by a knapsack point (positions in, positions out).
pub fn minimal_tuples_from_point(y: &KnapsackPoint, d: usize, k: usize) -> Result<Vec<ScgTuple>> {
    let supp = &y.support;
    if supp.is_empty() {
        return input_err("knapsack point has empty support");
    }
    if supp.len() > k || !supp.within(d) {
        return input_err("knapsack point is not a support of size at most k");
    }
    if supp.len() < k {
        return Ok(vec![ScgTuple {
            s: IndexSet::empty(),
            n: supp.complement(d),
            c: supp.clone(),
        }]);
    }
    let part = ConsecutivePartition::of(supp)?;
    let m = part.blocks.len();
    let mut out = Vec::new();
    if !part.gaps[0].is_empty() {
        out.push(ScgTuple {
            s: supp.clone(),
            n: IndexSet::empty(),
            c: IndexSet::empty(),
        });
    }
    for l in 1..m {
        out.push(ScgTuple {
            s: union_all(&part.blocks[l..]),
            n: union_all(&part.gaps[..l]),
            c: union_all(&part.blocks[..l]),
        });
    }
    out.push(ScgTuple {
        s: IndexSet::empty(),
        n: comp_index_set(supp)?,
        c: supp.clone(),
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutMode {
    Inclusive,
    Exclusive,
}

impl fmt::Display for CutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutMode::Inclusive => "inclusive",
            CutMode::Exclusive => "exclusive",
        })
    }
}

impl FromStr for CutMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inc" | "inclusive" => Ok(CutMode::Inclusive),
            "exc" | "exclusive" => Ok(CutMode::Exclusive),
            other => Err(format!("unknown cut mode '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfigCuts {
    pub mode: CutMode,
    /// Cut budget; `usize::MAX` means unlimited.
    pub max_cuts: usize,
    /// Longest cut, counted as `|N|` (inclusive) or `|S|` (exclusive).
    pub max_len: usize,
}

impl GenConfigCuts {
    pub fn inclusive_default(k: usize) -> Self {
        GenConfigCuts {
            mode: CutMode::Inclusive,
            max_cuts: k,
            max_len: 2,
        }
    }

    pub fn exclusive_default(d: usize, k: usize) -> Self {
        GenConfigCuts {
            mode: CutMode::Exclusive,
            max_cuts: d - k,
            max_len: 3,
        }
    }

    /// Range of class indices `s` searched by this configuration.
    pub fn search_range(&self, d: usize, k: usize) -> RangeInclusive<usize> {
        match self.mode {
            CutMode::Inclusive => (k + 1)..=(k + self.max_len).min(d),
            CutMode::Exclusive => k.saturating_sub(self.max_len).max(1)..=k.saturating_sub(1),
        }
    }
}

/// Positions of the lightest member of a class, if the class is non-trivial.
fn class_witness(mode: CutMode, s: usize, d: usize, k: usize) -> Option<Vec<usize>> {
    match mode {
        CutMode::Inclusive => (s >= k && s <= d).then(|| (s - k..s).collect()),
        CutMode::Exclusive => {
            if s == 0 || s >= k || d < k + 1 {
                return None;
            }
            let tail = k - s;
            Some((0..s).chain(d - tail..d).collect())
        }
    }
}

fn class_nonempty(ctx: &ScreenContext, mode: CutMode, s: usize) -> bool {
    class_witness(mode, s, ctx.d(), ctx.k).is_some_and(|w| ctx.accepts_positions(&w))
}

/// Smallest `s` in the range whose inclusive class is non-empty.
pub fn inclusive_start_index(ctx: &ScreenContext, sr: RangeInclusive<usize>) -> Option<usize> {
    sr.into_iter().find(|&s| class_nonempty(ctx, CutMode::Inclusive, s))
}

/// Largest `s` in the range whose exclusive class is non-empty.
pub fn exclusive_start_index(ctx: &ScreenContext, sr: RangeInclusive<usize>) -> Option<usize> {
    sr.into_iter()
        .rev()
        .find(|&s| class_nonempty(ctx, CutMode::Exclusive, s))
}

struct ClassSearch<'a> {
    ctx: &'a ScreenContext,
    /// `prefix[p] = Σ_{q<p} w̃_q`.
    prefix: Vec<f64>,
    /// Prune when a lower bound on the class weight exceeds this.
    limit: f64,
    budget: usize,
    chosen: Vec<usize>,
    fixed_tail: Vec<usize>,
    out: Vec<KnapsackPoint>,
}

impl ClassSearch<'_> {
    fn range_sum(&self, lo: usize, hi: usize) -> f64 {
        self.prefix[hi] - self.prefix[lo]
    }

    /// Picks `r` more positions from `[from, to)` in increasing order.
    fn recurse(&mut self, from: usize, to: usize, r: usize, partial: f64) {
        if self.out.len() >= self.budget {
            return;
        }
        if r == 0 {
            let mut support = self.chosen.clone();
            support.extend_from_slice(&self.fixed_tail);
            support.sort_unstable();
            if self.ctx.accepts_positions(&support) {
                let point = KnapsackPoint::new(IndexSet::new(support), &self.ctx.sw);
                self.out.push(point);
            }
            return;
        }
        for p in from..=to - r {
            // Lightest completion: the last r − 1 positions of the window.
            let lightest = partial + self.ctx.sw.w_tilde[p] + self.range_sum(to - (r - 1), to);
            if lightest > self.limit {
                // Later p only make the completion lighter, so keep going.
                continue;
            }
            self.chosen.push(p);
            self.recurse(p + 1, to, r - 1, partial + self.ctx.sw.w_tilde[p]);
            self.chosen.pop();
            if self.out.len() >= self.budget {
                return;
            }
        }
    }
}

/// Members of `𝒯_s` or `𝒯'_s`, heaviest first, at most `budget` of them.
pub fn enumerate_partition_class(
    s: usize,
    mode: CutMode,
    ctx: &ScreenContext,
    budget: usize,
) -> Result<Vec<KnapsackPoint>> {
    let (d, k) = (ctx.d(), ctx.k);
    let valid = match mode {
        CutMode::Inclusive => s >= k && s <= d,
        CutMode::Exclusive => s >= 1 && s < k,
    };
    if !valid {
        return input_err(format!("class index {s} outside the {mode} range"));
    }
    if budget == 0 {
        return Ok(Vec::new());
    }
    let w = &ctx.sw.w_tilde;
    let mut prefix = vec![0.0; d + 1];
    for p in 0..d {
        prefix[p + 1] = prefix[p] + w[p];
    }
    let c = ctx.c_threshold();
    let limit = c + 1e-9 * (prefix[d].abs() + c.abs()).max(1.0);
    let mut search = ClassSearch {
        ctx,
        prefix,
        limit,
        budget,
        chosen: Vec::with_capacity(k),
        fixed_tail: Vec::new(),
        out: Vec::new(),
    };
    match mode {
        CutMode::Inclusive => {
            search.fixed_tail = vec![s - 1];
            let base = w[s - 1];
            if k == 1 {
                search.recurse(0, 0, 0, base);
            } else {
                search.recurse(0, s - 1, k - 1, base);
            }
        }
        CutMode::Exclusive => {
            if d - (s + 1) < k - s {
                return Ok(Vec::new());
            }
            search.fixed_tail = (0..s).collect();
            let base = search.range_sum(0, s);
            search.recurse(s + 1, d, k - s, base);
        }
    }
    Ok(search.out)
}

/// Minimal tuple attached to a class member during generation.
fn class_tuple(point: &KnapsackPoint, mode: CutMode, s: usize) -> ScgTuple {
    let supp = &point.support;
    match mode {
        CutMode::Inclusive => ScgTuple {
            s: IndexSet::empty(),
            n: IndexSet::range(0, s).difference(supp),
            c: supp.clone(),
        },
        CutMode::Exclusive => {
            let lead = IndexSet::range(0, s);
            ScgTuple {
                s: supp.difference(&lead),
                n: IndexSet::empty(),
                c: lead,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The configured range of class indices is empty.
    EmptyRange,
    /// No class in the range has a member under the threshold.
    NoWitness,
    MaxCuts,
    RangeExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutDiagnostics {
    pub mode: CutMode,
    pub s_start: Option<usize>,
    pub classes_visited: usize,
    pub c_threshold: f64,
    pub reason: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutBatch {
    pub cuts: Vec<ScreeningCut>,
    /// Tuples behind `cuts`, in original indices.
    #[serde(skip)]
    pub tuples: Vec<ScgTuple>,
    pub meta: CutDiagnostics,
}

impl CutBatch {
    pub fn average_len(&self) -> Option<f64> {
        if self.cuts.is_empty() {
            None
        } else {
            Some(self.cuts.iter().map(|c| c.len()).sum::<usize>() as f64 / self.cuts.len() as f64)
        }
    }
}

/// Walks the classes from the start index, one step at a time, emitting the
/// cut of every member until the budget or the range runs out.
pub fn generate_cuts_ctx(ctx: &ScreenContext, cfg: &GenConfigCuts) -> CutBatch {
    let (d, k) = (ctx.d(), ctx.k);
    let sr = cfg.search_range(d, k);
    let mut meta = CutDiagnostics {
        mode: cfg.mode,
        s_start: None,
        classes_visited: 0,
        c_threshold: ctx.c_threshold(),
        reason: StopReason::EmptyRange,
    };
    let mut batch = CutBatch {
        cuts: Vec::new(),
        tuples: Vec::new(),
        meta: meta.clone(),
    };
    if sr.is_empty() || cfg.max_len == 0 {
        return batch;
    }
    let start = match cfg.mode {
        CutMode::Inclusive => inclusive_start_index(ctx, sr.clone()),
        CutMode::Exclusive => exclusive_start_index(ctx, sr.clone()),
    };
    let Some(mut s) = start else {
        meta.reason = StopReason::NoWitness;
        batch.meta = meta;
        return batch;
    };
    meta.s_start = Some(s);
    let mut remaining = cfg.max_cuts;
    loop {
        if remaining == 0 {
            meta.reason = StopReason::MaxCuts;
            break;
        }
        let points =
            enumerate_partition_class(s, cfg.mode, ctx, remaining).expect("class index lies in the search range");
        meta.classes_visited += 1;
        for point in &points {
            let pos_tuple = class_tuple(point, cfg.mode, s);
            let tuple = ScgTuple {
                s: ctx.sw.to_indices(&pos_tuple.s),
                n: ctx.sw.to_indices(&pos_tuple.n),
                c: ctx.sw.to_indices(&pos_tuple.c),
            };
            let cut = ScreeningCut::new(tuple.s.clone(), tuple.n.clone()).expect("class tuples have a non-empty side");
            batch.cuts.push(cut);
            batch.tuples.push(tuple);
            if remaining != usize::MAX {
                remaining -= 1;
            }
        }
        let next = match cfg.mode {
            CutMode::Inclusive => s.checked_add(1),
            CutMode::Exclusive => s.checked_sub(1),
        };
        match next {
            Some(n) if sr.contains(&n) => s = n,
            _ => {
                meta.reason = if remaining == 0 {
                    StopReason::MaxCuts
                } else {
                    StopReason::RangeExhausted
                };
                break;
            }
        }
    }
    batch.meta = meta;
    batch
}

pub fn generate_cuts(relax: &RelaxationSolution, bounds: &BoundsContext, cfg: &GenConfigCuts) -> Result<CutBatch> {
    let ctx = ScreenContext::from_bounds(&relax.w_hat, bounds)?;
    Ok(generate_cuts_ctx(&ctx, cfg))
}
