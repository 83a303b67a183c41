//! Modular (additive) set functions represented by their weight vectors.

use serde::{Deserialize, Serialize};

use crate::oracle::SetFunction;
use crate::set::SubsetMask;

/// Weight vector `w` inducing the modular function `X -> sum_{j in X} w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularVector {
    w: Vec<f64>,
}

impl ModularVector {
    pub fn new(w: Vec<f64>) -> Self {
        assert!(!w.is_empty(), "weight vector must be nonempty");
        ModularVector { w }
    }

    pub fn zeros(n: usize) -> Self {
        ModularVector::new(vec![0.0; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        ModularVector::new((0..n).map(f).collect())
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.w[j]
    }

    pub fn set(&mut self, j: usize, value: f64) {
        self.w[j] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn eval(&self, x: &SubsetMask) -> f64 {
        assert_eq!(x.n(), self.w.len(), "ground set size mismatch");
        x.iter().map(|j| self.w[j]).sum()
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn negated(&self) -> Self {
        ModularVector::new(self.w.iter().map(|v| -v).collect())
    }

    /// Elements with weight strictly below `-tol`.
    pub fn negative_support(&self, tol: f64) -> SubsetMask {
        let mut m = SubsetMask::empty(self.w.len());
        for (j, &v) in self.w.iter().enumerate() {
            if v < -tol {
                m.insert(j);
            }
        }
        m
    }

    /// Elements with weight strictly above `tol`.
    pub fn positive_support(&self, tol: f64) -> SubsetMask {
        let mut m = SubsetMask::empty(self.w.len());
        for (j, &v) in self.w.iter().enumerate() {
            if v > tol {
                m.insert(j);
            }
        }
        m
    }
}

impl SetFunction for ModularVector {
    fn n(&self) -> usize {
        self.w.len()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        self.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_sums_selected_weights() {
        let w = ModularVector::new(vec![1.0, -2.0, 0.5]);
        let x = SubsetMask::from_indices(3, [0, 2]).unwrap();
        assert!((w.eval(&x) - 1.5).abs() < 1e-12);
        assert!((w.total() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn supports_split_by_sign() {
        let w = ModularVector::new(vec![-9.0, 4.0, 0.0, -1e-12, 2.0]);
        assert_eq!(w.negative_support(1e-9).one_based(), vec![1]);
        assert_eq!(w.positive_support(1e-9).one_based(), vec![2, 5]);
    }
}
