//! Weight orderings shared by screening and cut generation.

use serde::Serialize;

use crate::index::IndexSet;
use crate::model::lex_order;

/// Weights sorted in decreasing `(value, index)` order.
///
/// Position `p` holds `w_tilde[p] = w[perm[p]]` and `rank[perm[p]] = p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortedWeights {
    pub w: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub perm: Vec<usize>,
    pub rank: Vec<usize>,
}

impl SortedWeights {
    pub fn new(w: &[f64]) -> Self {
        let perm = lex_order(w);
        let mut rank = vec![0; w.len()];
        for (p, &i) in perm.iter().enumerate() {
            rank[i] = p;
        }
        SortedWeights {
            w: w.to_vec(),
            w_tilde: perm.iter().map(|&i| w[i]).collect(),
            perm,
            rank,
        }
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    /// `Σ_{p<k} w̃_p`.
    pub fn top_sum(&self, k: usize) -> f64 {
        self.w_tilde.iter().take(k).sum()
    }

    /// `w̃_p`, with `0` past the end.
    pub fn at(&self, p: usize) -> f64 {
        self.w_tilde.get(p).copied().unwrap_or(0.0)
    }

    pub fn to_positions(&self, set: &IndexSet) -> IndexSet {
        set.map(|i| self.rank[i])
    }

    pub fn to_indices(&self, positions: &IndexSet) -> IndexSet {
        positions.map(|p| self.perm[p])
    }

    /// `Σ_{p<k} w̃_p − Σ_{p∈A} w̃_p` for sorted, distinct positions `A`.
    ///
    /// Only the terms that do not cancel are summed, so singleton
    /// comparisons reduce to a single floating subtraction.
    pub fn reduced_cost(&self, k: usize, positions: &[usize]) -> f64 {
        let mut plus = 0.0;
        let mut minus = 0.0;
        let mut it = positions.iter().peekable();
        for p in 0..k.min(self.d()) {
            if it.peek() == Some(&&p) {
                it.next();
            } else {
                plus += self.w_tilde[p];
            }
        }
        for &p in it {
            minus += self.w_tilde[p];
        }
        plus - minus
    }

    /// [`Self::reduced_cost`] for a set of original indices.
    pub fn reduced_cost_of(&self, k: usize, set: &IndexSet) -> f64 {
        self.reduced_cost(k, self.to_positions(set).as_slice())
    }
}
