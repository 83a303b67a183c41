//! Evaluation oracles for set functions.
//!
//! [`Oracle`] wraps any [`SetFunction`], shifts it so the empty set evaluates
//! to zero, and counts evaluations behind an atomic so concurrent solvers can
//! share one instance. Every solver in this crate consumes oracles, which
//! makes reported call counts comparable across algorithms.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::set::{GroundSet, SubsetMask};
use crate::TOLERANCE;

/// A real-valued function on subsets of `{0, .., n-1}`.
pub trait SetFunction: Send + Sync {
    fn n(&self) -> usize;

    /// Raw value before empty-set normalization.
    fn eval_raw(&self, x: &SubsetMask) -> f64;
}

struct FnFunction<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&SubsetMask) -> f64 + Send + Sync> SetFunction for FnFunction<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        (self.f)(x)
    }
}

/// Normalized, call-counted evaluation handle.
pub struct Oracle {
    f: Arc<dyn SetFunction>,
    offset: f64,
    calls: AtomicU64,
}

impl Oracle {
    pub fn new(f: impl SetFunction + 'static) -> Self {
        Oracle::from_arc(Arc::new(f))
    }

    pub fn from_arc(f: Arc<dyn SetFunction>) -> Self {
        let offset = f.eval_raw(&SubsetMask::empty(f.n()));
        assert!(
            offset.is_finite(),
            "function must be finite at the empty set"
        );
        Oracle {
            f,
            offset,
            calls: AtomicU64::new(0),
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(&SubsetMask) -> f64 + Send + Sync + 'static) -> Self {
        Oracle::new(FnFunction { n, f })
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn ground(&self) -> GroundSet {
        GroundSet::new(self.f.n()).expect("set functions have nonempty ground sets")
    }

    /// Normalized value `f(X) - f(empty)`. Counts one evaluation.
    pub fn eval(&self, x: &SubsetMask) -> f64 {
        assert_eq!(x.n(), self.f.n(), "ground set size mismatch");
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.f.eval_raw(x) - self.offset
    }

    /// Marginal gain `f(X + j) - f(X)`. Zero without any oracle call when
    /// `j` is already a member; two evaluations otherwise.
    pub fn gain(&self, j: usize, x: &SubsetMask) -> f64 {
        if x.contains(j) {
            return 0.0;
        }
        self.eval(&x.with(j)) - self.eval(x)
    }

    /// Evaluations performed so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

const EXHAUSTIVE_LIMIT: usize = 20;

fn exhaustive_guard(n: usize, what: &str) -> Result<()> {
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "{what} enumerates all 2^n subsets and is capped at n = {EXHAUSTIVE_LIMIT}, got n = {n}"
        )));
    }
    Ok(())
}

fn full_table(f: &Oracle) -> Vec<f64> {
    let n = f.n();
    (0..1u64 << n)
        .map(|bits| f.eval(&SubsetMask::from_bits(n, bits)))
        .collect()
}

/// Exhaustive diminishing-returns check: for every set `X` and distinct
/// `j, k` outside `X`, adding `j` must gain at least as much at `X` as at
/// `X + k`, up to `tol`. Capped at `n <= 20`.
pub fn is_submodular(f: &Oracle, tol: f64) -> Result<bool> {
    let n = f.n();
    exhaustive_guard(n, "is_submodular")?;
    let t = full_table(f);
    for x in 0..1u64 << n {
        for j in 0..n {
            if x >> j & 1 == 1 {
                continue;
            }
            let gain_at_x = t[(x | 1 << j) as usize] - t[x as usize];
            for k in (j + 1)..n {
                if x >> k & 1 == 1 {
                    continue;
                }
                let xk = x | 1 << k;
                let gain_at_xk = t[(xk | 1 << j) as usize] - t[xk as usize];
                if gain_at_x < gain_at_xk - tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Exhaustive monotonicity check: every marginal gain is at least `-tol`.
/// Capped at `n <= 20`.
pub fn is_monotone(f: &Oracle, tol: f64) -> Result<bool> {
    let n = f.n();
    exhaustive_guard(n, "is_monotone")?;
    let t = full_table(f);
    for x in 0..1u64 << n {
        for j in 0..n {
            if x >> j & 1 == 0 && t[(x | 1 << j) as usize] < t[x as usize] - tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Total curvature `1 - min_j f(j | V-j) / f(j)` of a monotone function with
/// strictly positive singleton values. Zero for modular functions, one when
/// some element's gain vanishes at the full set.
pub fn curvature(f: &Oracle) -> Result<f64> {
    let n = f.n();
    let full = SubsetMask::full(n);
    let f_full = f.eval(&full);
    let mut min_ratio = f64::INFINITY;
    for j in 0..n {
        let singleton = f.eval(&f.ground().singleton(j));
        if singleton <= TOLERANCE {
            return Err(Error::Domain(format!(
                "curvature needs positive singleton values, element {} evaluates to {singleton}",
                j + 1
            )));
        }
        let top_gain = f_full - f.eval(&full.without(j));
        if top_gain < -TOLERANCE {
            return Err(Error::Domain(format!(
                "curvature needs a monotone function, element {} loses value at the full set",
                j + 1
            )));
        }
        min_ratio = min_ratio.min(top_gain.max(0.0) / singleton);
    }
    Ok((1.0 - min_ratio).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::ModularVector;

    fn sqrt_card(n: usize) -> Oracle {
        Oracle::from_fn(n, |x| (x.len() as f64).sqrt())
    }

    #[test]
    fn normalization_shifts_empty_to_zero() {
        let f = Oracle::from_fn(4, |x| 7.5 + x.len() as f64);
        assert_eq!(f.eval(&SubsetMask::empty(4)), 0.0);
        assert_eq!(f.eval(&SubsetMask::full(4)), 4.0);
    }

    #[test]
    fn gain_of_member_is_free() {
        let f = sqrt_card(5);
        let x = SubsetMask::from_indices(5, [1, 2]).unwrap();
        let before = f.calls();
        assert_eq!(f.gain(1, &x), 0.0);
        assert_eq!(f.calls(), before);
        let g = f.gain(0, &x);
        assert_eq!(f.calls(), before + 2);
        assert!((g - (3f64.sqrt() - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn concave_of_cardinality_is_submodular_and_monotone() {
        let f = sqrt_card(6);
        assert!(is_submodular(&f, 1e-9).unwrap());
        assert!(is_monotone(&f, 1e-9).unwrap());
    }

    #[test]
    fn squared_cardinality_is_not_submodular() {
        let f = Oracle::from_fn(3, |x| (x.len() * x.len()) as f64);
        assert!(!is_submodular(&f, 1e-9).unwrap());
    }

    #[test]
    fn exhaustive_checks_refuse_large_ground_sets() {
        let f = sqrt_card(21);
        assert!(matches!(
            is_submodular(&f, 1e-9),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn curvature_of_modular_is_zero() {
        let w = ModularVector::new(vec![0.5, 2.0, 1.25]);
        let f = Oracle::new(w);
        assert!(curvature(&f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn curvature_of_sqrt_cardinality_matches_definition() {
        // n = 4: min ratio is (2 - sqrt 3) / 1, so curvature is sqrt(3) - 1.
        let f = sqrt_card(4);
        let k = curvature(&f).unwrap();
        assert!((k - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        // The smooth approximation 1 - 0.5 * 4^{-0.5} lands nearby.
        assert!((k - 0.75).abs() < 0.02);
    }

    #[test]
    fn curvature_of_truncated_cardinality_is_one() {
        let f = Oracle::from_fn(6, |x| x.len().min(3) as f64);
        assert!((curvature(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_rejects_nonpositive_singletons() {
        let w = ModularVector::new(vec![1.0, -0.5]);
        assert!(matches!(curvature(&Oracle::new(w)), Err(Error::Domain(_))));
    }
}
