//! Problem data for sparse ridge regression and the primitives every other
//! module leans on: the loss, restricted ridge solves and weight orderings.
//!
//! The loss is `(1/n)·‖Y − Xβ‖² + γ·‖β‖²` subject to `‖β‖₀ ≤ k`.

use std::cmp::Ordering;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::index::IndexSet;

/// Samples and responses without a ridge weight or sparsity budget attached.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return input_err("X must have at least one row and one column");
        }
        if x.nrows() != y.len() {
            return input_err(format!("X has {} rows but Y has {} entries", x.nrows(), y.len()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return input_err("X and Y must contain only finite values");
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn instance(&self, gamma: f64, k: usize) -> Result<ProblemInstance> {
        ProblemInstance::new(self.x.clone(), self.y.clone(), gamma, k)
    }
}

/// A sparse ridge regression instance `(X, Y, γ, k)`.
///
/// The scaled Gram matrix `XᵀX/n` and `XᵀY/n` are cached at construction;
/// the instance is immutable afterwards.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    x: DMatrix<f64>,
    y: DVector<f64>,
    gamma: f64,
    k: usize,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
}

impl ProblemInstance {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, gamma: f64, k: usize) -> Result<Self> {
        let data = Dataset::new(x, y)?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return input_err(format!("gamma must be positive, got {gamma}"));
        }
        let d = data.d();
        if k < 1 || k > d {
            return input_err(format!("k must lie in [1, {d}], got {k}"));
        }
        let n = data.n() as f64;
        let gram = data.x.tr_mul(&data.x) / n;
        let xty = data.x.tr_mul(&data.y) / n;
        Ok(ProblemInstance {
            x: data.x,
            y: data.y,
            gamma,
            k,
            gram,
            xty,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `XᵀX / n`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `XᵀY / n`.
    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), gamma, self.k)
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), self.gamma, k)
    }

    /// `(1/n)·‖Y − Xβ‖²`, computed from the residual.
    pub fn loss(&self, beta: &DVector<f64>) -> f64 {
        let r = &self.y - &self.x * beta;
        r.norm_squared() / self.n() as f64
    }

    /// Gradient of the loss, `(2/n)·Xᵀ(Xβ − Y)`.
    pub fn loss_gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        (&self.gram * beta - &self.xty) * 2.0
    }
}

/// A point of the mixed-binary feasible set: `z_i = 0 ⇒ β_i = 0`, `Σz ≤ k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasiblePoint {
    pub beta: Vec<f64>,
    pub z: Vec<bool>,
}

impl FeasiblePoint {
    pub fn new(beta: Vec<f64>, z: Vec<bool>, k: usize) -> Result<Self> {
        if beta.len() != z.len() {
            return input_err("beta and z must have the same length");
        }
        if z.iter().filter(|&&b| b).count() > k {
            return input_err(format!("z has more than k = {k} ones"));
        }
        if beta.iter().zip(&z).any(|(b, &zi)| !zi && *b != 0.0) {
            return input_err("beta must vanish wherever z is zero");
        }
        Ok(FeasiblePoint { beta, z })
    }

    pub fn support(&self) -> IndexSet {
        IndexSet::new(self.z.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
    }
}

/// Ridge objective `(1/n)‖Y − Xβ‖² + γ‖β‖²`.
pub fn objective(instance: &ProblemInstance, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != instance.d() {
        return input_err(format!(
            "beta has length {} but the instance has d = {}",
            beta.len(),
            instance.d()
        ));
    }
    Ok(instance.loss(beta) + instance.gamma() * beta.norm_squared())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeFit {
    pub beta: DVector<f64>,
    pub value: f64,
}

/// Ridge regression restricted to `support`; coefficients off the support are zero.
///
/// Solves `(X_SᵀX_S/n + γI)·β_S = X_SᵀY/n` by Cholesky. The system is
/// positive definite for every γ > 0.
pub fn restricted_ridge(instance: &ProblemInstance, support: &IndexSet) -> RidgeFit {
    let d = instance.d();
    let mut beta = DVector::zeros(d);
    let s = support.as_slice();
    if !s.is_empty() {
        let m = s.len();
        let gram = instance.gram();
        let mut a = DMatrix::from_fn(m, m, |r, c| gram[(s[r], s[c])]);
        for i in 0..m {
            a[(i, i)] += instance.gamma();
        }
        let b = DVector::from_iterator(m, s.iter().map(|&i| instance.xty()[i]));
        let chol = Cholesky::new(a).expect("ridge system is positive definite");
        let sol = chol.solve(&b);
        for (pos, &i) in s.iter().enumerate() {
            beta[i] = sol[pos];
        }
    }
    let value = instance.loss(&beta) + instance.gamma() * beta.norm_squared();
    RidgeFit { beta, value }
}

/// Orders by value descending, breaking ties by the smaller index.
pub fn lex_cmp(w: &[f64], a: usize, b: usize) -> Ordering {
    w[b].total_cmp(&w[a]).then(a.cmp(&b))
}

/// Indices sorted from largest to smallest weight, ties by index.
pub fn lex_order(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(w, a, b));
    idx
}

/// Indices of the `k` largest components of `w` (lexicographic ties).
pub fn top_k_indices(w: &[f64], k: usize) -> Result<IndexSet> {
    if k < 1 || k > w.len() {
        return input_err(format!("k must lie in [1, {}], got {k}", w.len()));
    }
    Ok(IndexSet::new(lex_order(w).into_iter().take(k)))
}


#[cfg(test)]
mod tests {
    use super::fixtures::diag3;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn objective_at_zero_is_mean_square_response() {
        let inst = diag3();
        let v = objective(&inst, &DVector::zeros(3)).unwrap();
        // (1/3)·3·(9+4+1)
        assert!((v - 14.0).abs() < 1e-12);
    }

    #[test]
    fn objective_diag3_closed_form() {
        let inst = diag3();
        let v = objective(&inst, &DVector::from_vec(vec![1.5, 0.0, 0.0])).unwrap();
        assert!((v - 9.5).abs() < 1e-12);
    }

    #[test]
    fn objective_interpolating_beta_leaves_only_penalty() {
        let inst = diag3();
        let beta = DVector::from_vec(vec![3.0, 2.0, 1.0]);
        assert!(inst.loss(&beta).abs() < 1e-24);
        let v = objective(&inst, &beta).unwrap();
        assert!((v - 14.0).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_wrong_length() {
        assert!(objective(&diag3(), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn instance_validation() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_element(2, 1.0);
        assert!(ProblemInstance::new(x.clone(), y.clone(), 0.0, 1).is_err());
        assert!(ProblemInstance::new(x.clone(), y.clone(), 1.0, 0).is_err());
        assert!(ProblemInstance::new(x.clone(), y.clone(), 1.0, 3).is_err());
        assert!(ProblemInstance::new(x.clone(), DVector::zeros(3), 1.0, 1).is_err());
        let mut bad = x.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(ProblemInstance::new(bad, y, 1.0, 1).is_err());
    }

    #[test]
    fn restricted_ridge_empty_support() {
        let inst = diag3();
        let fit = restricted_ridge(&inst, &IndexSet::empty());
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        assert!((fit.value - 14.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_ridge_diag3() {
        let inst = diag3();
        let fit = restricted_ridge(&inst, &IndexSet::new([0]));
        assert!((fit.beta[0] - 1.5).abs() < 1e-12);
        assert!((fit.value - 9.5).abs() < 1e-12);

        let fit = restricted_ridge(&inst, &IndexSet::new([2]));
        assert!((fit.beta[2] - 0.5).abs() < 1e-12);
        assert!((fit.value - 13.5).abs() < 1e-12);
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_indices(&[5., 4., 3., 2., 1.], 2).unwrap().as_slice(), &[0, 1]);
        assert_eq!(top_k_indices(&[4., 4., 1.], 1).unwrap().as_slice(), &[0]);
        let w = [100.0 / 9.0, 100.0 / 9.0, 4.0];
        assert_eq!(top_k_indices(&w, 1).unwrap().as_slice(), &[0]);
        assert!(top_k_indices(&w, 0).is_err());
        assert!(top_k_indices(&w, 4).is_err());
    }

    fn random_instance(seed: u64, n: usize, d: usize, gamma: f64) -> ProblemInstance {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        ProblemInstance::new(x, y, gamma, 1).unwrap()
    }

    proptest! {
        #[test]
        fn enlarging_support_never_hurts(seed in 0u64..1000, mask_a in 0u32..256, extra in 0u32..256) {
            let inst = random_instance(seed, 6, 8, 0.3);
            let a = IndexSet::new((0..8).filter(|i| mask_a >> i & 1 == 1));
            let b = a.union(&IndexSet::new((0..8).filter(|i| extra >> i & 1 == 1)));
            let va = restricted_ridge(&inst, &a).value;
            let vb = restricted_ridge(&inst, &b).value;
            prop_assert!(vb <= va * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn restricted_value_matches_objective(seed in 0u64..1000, mask in 0u32..256) {
            let inst = random_instance(seed, 5, 8, 0.7);
            let s = IndexSet::new((0..8).filter(|i| mask >> i & 1 == 1));
            let fit = restricted_ridge(&inst, &s);
            let v = objective(&inst, &fit.beta).unwrap();
            prop_assert!((v - fit.value).abs() <= 1e-10 * v.abs().max(1e-300));
            for i in 0..8 {
                if !s.contains(i) {
                    prop_assert_eq!(fit.beta[i], 0.0);
                }
            }
        }

        #[test]
        fn top_k_is_nested(w in proptest::collection::vec(0.0f64..10.0, 2..12)) {
            let d = w.len();
            for k in 1..d {
                let a = top_k_indices(&w, k).unwrap();
                let b = top_k_indices(&w, k + 1).unwrap();
                prop_assert!(a.is_subset(&b));
            }
        }
    }
}
