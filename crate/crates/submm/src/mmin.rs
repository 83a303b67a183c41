//! Minimization by repeated tightening of modular upper bounds.
//!
//! Each round replaces `f` by an upper bound tight at the incumbent and
//! moves to that bound's minimizer, so the true value never increases.
//! Unconstrained descent realizes the bound minimizer in closed form with
//! ties broken toward the incumbent: a zero-gain member stays, a zero-gain
//! outsider stays out. That bias is what makes the two one-sided descents
//! land on the extreme local minima bracketing every global minimizer.

use crate::error::{Error, Result};
use crate::linopt::{minimize_modular, Constraint};
use crate::modular::ModularVector;
use crate::oracle::{curvature, Oracle};
use crate::semigradient::{supergradient, SupergradientKind};
use crate::set::SubsetMask;
use crate::{TrajectoryPoint, TOLERANCE};

/// Sublattice `[lower, upper]` of subsets sandwiched between two sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeInterval {
    lower: SubsetMask,
    upper: SubsetMask,
}

impl LatticeInterval {
    pub fn new(lower: SubsetMask, upper: SubsetMask) -> Result<Self> {
        if lower.n() != upper.n() {
            return Err(Error::invalid("interval endpoints must share a ground set"));
        }
        if !lower.is_subset_of(&upper) {
            return Err(Error::invalid(
                "interval lower end must be contained in the upper end",
            ));
        }
        Ok(LatticeInterval { lower, upper })
    }

    pub fn lower(&self) -> &SubsetMask {
        &self.lower
    }

    pub fn upper(&self) -> &SubsetMask {
        &self.upper
    }

    pub fn contains(&self, x: &SubsetMask) -> bool {
        self.lower.is_subset_of(x) && x.is_subset_of(&self.upper)
    }

    /// Share of elements whose membership is already decided, in percent.
    pub fn reduction_percent(&self) -> f64 {
        let n = self.lower.n() as f64;
        (1.0 - (self.upper.len() - self.lower.len()) as f64 / n) * 100.0
    }
}

/// Which minimization routine produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinVariant {
    Descent(SupergradientKind),
    Alternate,
    Constrained,
}

impl MinVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MinVariant::Descent(kind) => kind.name(),
            MinVariant::Alternate => "alternate",
            MinVariant::Constrained => "constrained",
        }
    }
}

/// Knobs shared by the minimization routines. `eta` is the relative
/// improvement a constrained step must achieve to be accepted; unconstrained
/// descent ignores it because every set change is already a strict
/// improvement.
#[derive(Debug, Clone)]
pub struct MinOptions {
    pub eta: f64,
    pub max_iterations: Option<usize>,
}

impl Default for MinOptions {
    fn default() -> Self {
        MinOptions {
            eta: 0.0,
            max_iterations: None,
        }
    }
}

impl MinOptions {
    /// Default continuation threshold for constrained descent.
    pub fn constrained() -> Self {
        MinOptions {
            eta: 1e-6,
            max_iterations: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::invalid("eta must be finite and nonnegative"));
        }
        Ok(())
    }
}

const MAX_ITERATIONS_FALLBACK: usize = 1_000;

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub variant: MinVariant,
    pub solution: SubsetMask,
    pub value: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    /// `n / (1 + (n-1)(1-kappa))`, when curvature is defined.
    pub curvature_bound: Option<f64>,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub warnings: Vec<String>,
}

/// Worst-case ratio of the constrained-descent value to the optimum for a
/// monotone function of curvature `kappa`, over sets of size `k`.
pub fn curvature_ratio_bound(k: usize, kappa: f64) -> f64 {
    let k = k as f64;
    k / (1.0 + (k - 1.0) * (1.0 - kappa))
}

/// Nearest minimizer of a modular bound: members leave only on strictly
/// positive gain, outsiders enter only on strictly negative gain.
fn bound_step(x: &SubsetMask, w: &ModularVector, tol: f64) -> SubsetMask {
    let mut next = SubsetMask::empty(x.n());
    for j in 0..x.n() {
        let keep = if x.contains(j) {
            w.get(j) <= tol
        } else {
            w.get(j) < -tol
        };
        if keep {
            next.insert(j);
        }
    }
    next
}

/// Descend from `x0` using one fixed upper-bound flavor until the incumbent
/// reproduces itself. Every accepted move strictly decreases `f`.
pub fn descend(
    f: &Oracle,
    x0: &SubsetMask,
    kind: SupergradientKind,
    opts: &MinOptions,
) -> Result<MinimizeReport> {
    opts.validate()?;
    if x0.n() != f.n() {
        return Err(Error::invalid("start set must match the oracle"));
    }
    let calls_before = f.calls();
    let cap = opts.max_iterations.unwrap_or(MAX_ITERATIONS_FALLBACK);
    let mut x = x0.clone();
    let mut fx = f.eval(&x);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        set: x.clone(),
        value: fx,
    }];
    let mut warnings = Vec::new();
    for t in 1..=cap {
        let bound = supergradient(f, &x, kind)?;
        let next = bound_step(&x, bound.values(), TOLERANCE);
        if next == x {
            break;
        }
        let f_next = f.eval(&next);
        if f_next > fx + TOLERANCE {
            warnings.push(format!(
                "step {t} would increase the value from {fx} to {f_next}; stopped"
            ));
            break;
        }
        x = next;
        fx = f_next;
        trajectory.push(TrajectoryPoint {
            iteration: t,
            set: x.clone(),
            value: fx,
        });
        if t == cap {
            warnings.push(format!("iteration cap {cap} reached before a fixpoint"));
        }
    }
    Ok(MinimizeReport {
        variant: MinVariant::Descent(kind),
        solution: x,
        value: fx,
        iterations: trajectory.len() - 1,
        trajectory,
        curvature_bound: None,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

/// One grow step then one shrink step, repeated to a joint fixpoint, with a
/// final single-flip audit of local minimality.
pub fn alternate(f: &Oracle, x0: &SubsetMask, opts: &MinOptions) -> Result<MinimizeReport> {
    opts.validate()?;
    if x0.n() != f.n() {
        return Err(Error::invalid("start set must match the oracle"));
    }
    let calls_before = f.calls();
    let cap = opts.max_iterations.unwrap_or(MAX_ITERATIONS_FALLBACK);
    let mut x = x0.clone();
    let mut fx = f.eval(&x);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        set: x.clone(),
        value: fx,
    }];
    let mut warnings = Vec::new();
    let mut t = 0;
    loop {
        let mut changed = false;
        for kind in [SupergradientKind::Grow, SupergradientKind::Shrink] {
            let bound = supergradient(f, &x, kind)?;
            let next = bound_step(&x, bound.values(), TOLERANCE);
            if next != x {
                fx = f.eval(&next);
                x = next;
                t += 1;
                changed = true;
                trajectory.push(TrajectoryPoint {
                    iteration: t,
                    set: x.clone(),
                    value: fx,
                });
            }
        }
        if !changed {
            break;
        }
        if t >= cap {
            warnings.push(format!("iteration cap {cap} reached before a fixpoint"));
            break;
        }
    }
    // Joint fixpoints are single-flip local minima; a failure here means the
    // tolerance swallowed a real improvement.
    for j in 0..f.n() {
        let mut flipped = x.clone();
        flipped.toggle(j);
        if f.eval(&flipped) < fx - TOLERANCE {
            warnings.push(format!(
                "single-flip audit found an improving move on element {}",
                j + 1
            ));
        }
    }
    Ok(MinimizeReport {
        variant: MinVariant::Alternate,
        solution: x,
        value: fx,
        iterations: trajectory.len() - 1,
        trajectory,
        curvature_bound: None,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

/// Minimize over a constraint by optimizing successive upper bounds with the
/// exact linear solvers. The first round is anchored at the empty set, so
/// its value is the plain modular proxy everyone compares against; later
/// rounds anchor at the incumbent and continue while the value improves by a
/// relative `eta`.
pub fn descend_constrained(
    f: &Oracle,
    c: &Constraint,
    opts: &MinOptions,
) -> Result<MinimizeReport> {
    opts.validate()?;
    c.validate_for(f.n())?;
    let calls_before = f.calls();
    let cap = opts.max_iterations.unwrap_or(MAX_ITERATIONS_FALLBACK);
    let mut warnings = Vec::new();

    let curvature_bound = match curvature(f) {
        Ok(kappa) => Some(curvature_ratio_bound(f.n(), kappa)),
        Err(Error::Domain(why)) => {
            warnings.push(format!("worst-case factor undefined: {why}"));
            None
        }
        Err(other) => return Err(other),
    };

    let empty = SubsetMask::empty(f.n());
    let first = supergradient(f, &empty, SupergradientKind::Grow)?;
    let sub = minimize_modular(first.values(), c, TOLERANCE)?;
    if !sub.exact {
        warnings.push(format!(
            "linear subproblem solved approximately (factor {})",
            sub.beta
        ));
    }
    let mut x = sub.set;
    let mut fx = f.eval(&x);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 1,
        set: x.clone(),
        value: fx,
    }];

    for t in 2..=cap {
        let bound = supergradient(f, &x, SupergradientKind::Grow)?;
        let sub = minimize_modular(bound.values(), c, TOLERANCE)?;
        if sub.set == x {
            break;
        }
        let f_next = f.eval(&sub.set);
        if f_next > fx - opts.eta * fx.abs() {
            break;
        }
        if !sub.exact {
            warnings.push(format!(
                "linear subproblem solved approximately (factor {})",
                sub.beta
            ));
        }
        x = sub.set;
        fx = f_next;
        trajectory.push(TrajectoryPoint {
            iteration: t,
            set: x.clone(),
            value: fx,
        });
        if t == cap {
            warnings.push(format!("iteration cap {cap} reached before convergence"));
        }
    }
    Ok(MinimizeReport {
        variant: MinVariant::Constrained,
        solution: x,
        value: fx,
        iterations: trajectory.len(),
        trajectory,
        curvature_bound,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

/// Project `x0` into the interval of candidate minimizers: the combined
/// bound reaches its fixpoint in at most two rounds and lands on
/// `(x0 and B) or A`, where `A` collects the elements helpful on their own
/// and `B` those harmless at the top.
pub fn contract(f: &Oracle, x0: &SubsetMask) -> Result<MinimizeReport> {
    descend(f, x0, SupergradientKind::Bar, &MinOptions::default())
}

/// Lattice endpoints produced by the two one-sided descents.
#[derive(Debug, Clone)]
pub struct PruneResult {
    /// First-step interval `[A, B]`.
    pub initial: LatticeInterval,
    /// Fixpoint interval `[A+, B+]`; every minimizer and every single-flip
    /// local minimum lies inside.
    pub contracted: LatticeInterval,
    pub lower_iterations: usize,
    pub upper_iterations: usize,
    pub oracle_calls: u64,
}

/// Run grow descent from the empty set and shrink descent from the full set,
/// reporting both the one-step and the fixpoint intervals.
pub fn prune_lattice(f: &Oracle) -> Result<PruneResult> {
    let opts = MinOptions::default();
    let ground = f.ground();
    let from_empty = descend(f, &ground.empty(), SupergradientKind::Grow, &opts)?;
    let from_full = descend(f, &ground.full(), SupergradientKind::Shrink, &opts)?;
    let first = |r: &MinimizeReport| {
        r.trajectory
            .get(1)
            .map(|p| p.set.clone())
            .unwrap_or_else(|| r.solution.clone())
    };
    let initial = LatticeInterval::new(first(&from_empty), first(&from_full))?;
    let contracted = LatticeInterval::new(from_empty.solution, from_full.solution)?;
    Ok(PruneResult {
        initial,
        contracted,
        lower_iterations: from_empty.iterations,
        upper_iterations: from_full.iterations,
        oracle_calls: from_empty.oracle_calls + from_full.oracle_calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{ConcaveOverModular, Concavity};

    fn reference_instance() -> Oracle {
        let w1 = ModularVector::new(vec![3.0, 9.0, 17.0, 14.0, 14.0, 10.0, 16.0, 4.0, 13.0, 2.0]);
        let w2 = ModularVector::new(vec![
            -9.0, 4.0, 6.0, -1.0, 10.0, -4.0, -6.0, -1.0, 2.0, -8.0,
        ]);
        Oracle::new(ConcaveOverModular::new(w1, w2, Concavity::Sqrt, false).unwrap())
    }

    fn set(ids: &[usize]) -> SubsetMask {
        SubsetMask::from_one_based(10, ids).unwrap()
    }

    #[test]
    fn reference_lattice_endpoints() {
        let f = reference_instance();
        let res = prune_lattice(&f).unwrap();
        assert_eq!(*res.initial.lower(), set(&[1, 6, 7, 10]));
        assert_eq!(*res.initial.upper(), set(&[1, 4, 6, 7, 8, 10]));
        assert_eq!(*res.contracted.lower(), set(&[1, 6, 7, 8, 10]));
        assert_eq!(*res.contracted.upper(), set(&[1, 6, 7, 8, 10]));
        assert!((res.contracted.reduction_percent() - 100.0).abs() < 1e-12);
        assert!((res.initial.reduction_percent() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn reference_contraction_of_outside_start() {
        let f = reference_instance();
        let report = contract(&f, &set(&[2, 4])).unwrap();
        assert_eq!(report.solution, set(&[1, 4, 6, 7, 10]));
        assert!(report.iterations <= 2);
    }

    #[test]
    fn combined_descent_from_extremes() {
        let f = reference_instance();
        let from_empty = contract(&f, &SubsetMask::empty(10)).unwrap();
        assert_eq!(from_empty.solution, set(&[1, 6, 7, 10]));
        let from_full = contract(&f, &SubsetMask::full(10)).unwrap();
        assert_eq!(from_full.solution, set(&[1, 4, 6, 7, 8, 10]));
    }

    #[test]
    fn alternate_reaches_global_optimum_here() {
        let f = reference_instance();
        let report = alternate(&f, &SubsetMask::empty(10), &MinOptions::default()).unwrap();
        assert_eq!(report.solution, set(&[1, 6, 7, 8, 10]));
        assert!((report.value - (35f64.sqrt() - 28.0)).abs() < 1e-9);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn descent_value_never_increases() {
        let f = reference_instance();
        for kind in SupergradientKind::ALL {
            let report = descend(&f, &SubsetMask::full(10), kind, &MinOptions::default()).unwrap();
            for pair in report.trajectory.windows(2) {
                assert!(pair[1].value <= pair[0].value + 1e-12);
            }
        }
    }

    #[test]
    fn constrained_descent_reports_first_round_proxy() {
        let f = reference_instance();
        let c = Constraint::CardinalityAtLeast(8);
        let report = descend_constrained(&f, &c, &MinOptions::constrained()).unwrap();
        assert_eq!(report.trajectory[0].iteration, 1);
        assert!(report.value <= report.trajectory[0].value + 1e-12);
        assert_eq!(report.solution.len(), 8);
        // Monotone instances get a finite worst-case factor; this one is not
        // monotone, so none is reported.
        assert!(report.curvature_bound.is_none());
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn interval_validation() {
        let lo = set(&[1, 2]);
        let hi = set(&[1]);
        assert!(LatticeInterval::new(lo, hi).is_err());
        let iv = LatticeInterval::new(set(&[1]), set(&[1, 2, 3])).unwrap();
        assert!(iv.contains(&set(&[1, 3])));
        assert!(!iv.contains(&set(&[2])));
        assert!((iv.reduction_percent() - 80.0).abs() < 1e-12);
    }
}
