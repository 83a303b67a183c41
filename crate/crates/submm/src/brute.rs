//! Exhaustive reference solvers and certificates for small instances.
//!
//! Everything here recomputes answers from first principles so the fast
//! routines can be checked against an independent source of truth. All
//! entry points refuse ground sets past twenty elements.

use crate::error::{Error, Result};
use crate::linopt::{enumerate_feasible, Constraint};
use crate::mmin::{prune_lattice, LatticeInterval};
use crate::oracle::Oracle;
use crate::semigradient::{BoundSide, ModularBound};
use crate::set::SubsetMask;
use crate::TOLERANCE;

const BRUTE_LIMIT: usize = 20;
const ENUMERATION_CAP: usize = 1 << 21;

fn brute_guard(n: usize) -> Result<()> {
    if n > BRUTE_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "exhaustive search is capped at n = {BRUTE_LIMIT}, got n = {n}"
        )));
    }
    Ok(())
}

/// `f` on every subset, indexed by bitmask.
pub fn value_table(f: &Oracle) -> Result<Vec<f64>> {
    brute_guard(f.n())?;
    let n = f.n();
    Ok((0..1u64 << n)
        .map(|bits| f.eval(&SubsetMask::from_bits(n, bits)))
        .collect())
}

/// Exhaustive optimization outcome.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub optimum: f64,
    /// Every feasible set within tolerance of the optimum.
    pub optimizers: Vec<SubsetMask>,
    /// Single-flip local optima; filled only for unconstrained runs.
    pub local_optima: Vec<SubsetMask>,
    pub enumerated: usize,
}

fn scan(f: &Oracle, c: &Constraint, maximize: bool) -> Result<BruteForceResult> {
    let n = f.n();
    brute_guard(n)?;
    c.validate_for(n)?;
    let sign = if maximize { -1.0 } else { 1.0 };

    if matches!(c, Constraint::Unconstrained) {
        let table = value_table(f)?;
        let optimum = table
            .iter()
            .copied()
            .reduce(|a, b| if maximize { a.max(b) } else { a.min(b) })
            .expect("table nonempty");
        let optimizers = (0..table.len())
            .filter(|&bits| (table[bits] - optimum).abs() <= TOLERANCE)
            .map(|bits| SubsetMask::from_bits(n, bits as u64))
            .collect();
        let mut local_optima = Vec::new();
        for bits in 0..table.len() {
            let here = sign * table[bits];
            let is_local = (0..n).all(|j| sign * table[bits ^ (1 << j)] >= here - TOLERANCE);
            if is_local {
                local_optima.push(SubsetMask::from_bits(n, bits as u64));
            }
        }
        return Ok(BruteForceResult {
            optimum,
            optimizers,
            local_optima,
            enumerated: table.len(),
        });
    }

    let feasible = enumerate_feasible(c, n, ENUMERATION_CAP)?;
    if feasible.is_empty() {
        return Err(Error::Infeasible(
            "constraint admits no feasible set".into(),
        ));
    }
    let values: Vec<f64> = feasible.iter().map(|x| f.eval(x)).collect();
    let optimum = values
        .iter()
        .copied()
        .reduce(|a, b| if maximize { a.max(b) } else { a.min(b) })
        .expect("feasible nonempty");
    let optimizers = feasible
        .iter()
        .zip(&values)
        .filter(|(_, &v)| (v - optimum).abs() <= TOLERANCE)
        .map(|(x, _)| x.clone())
        .collect();
    Ok(BruteForceResult {
        optimum,
        optimizers,
        local_optima: Vec::new(),
        enumerated: feasible.len(),
    })
}

pub fn brute_minimize(f: &Oracle, c: &Constraint) -> Result<BruteForceResult> {
    scan(f, c, false)
}

pub fn brute_maximize(f: &Oracle, c: &Constraint) -> Result<BruteForceResult> {
    scan(f, c, true)
}

/// One named pass/fail observation, with a witness set on failure.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub witness: Option<String>,
}

impl CheckItem {
    fn pass(name: &str) -> Self {
        CheckItem {
            name: name.to_string(),
            pass: true,
            witness: None,
        }
    }

    fn fail(name: &str, witness: String) -> Self {
        CheckItem {
            name: name.to_string(),
            pass: false,
            witness: Some(witness),
        }
    }
}

/// Exhaustively verify that a modular bound sits on its declared side of `f`
/// and touches it at the anchor.
pub fn check_bound(f: &Oracle, bound: &ModularBound) -> Result<CheckItem> {
    brute_guard(f.n())?;
    let name = match bound.side() {
        BoundSide::Lower => "lower_bound_dominance",
        BoundSide::Upper => "upper_bound_dominance",
    };
    let gap = bound.eval(bound.anchor()) - f.eval(bound.anchor());
    if gap.abs() > TOLERANCE {
        return Ok(CheckItem::fail(
            name,
            format!("anchor {} off by {gap}", bound.anchor()),
        ));
    }
    for bits in 0..1u64 << f.n() {
        let x = SubsetMask::from_bits(f.n(), bits);
        let diff = bound.eval(&x) - f.eval(&x);
        let ok = match bound.side() {
            BoundSide::Lower => diff <= TOLERANCE,
            BoundSide::Upper => diff >= -TOLERANCE,
        };
        if !ok {
            return Ok(CheckItem::fail(name, format!("violated at {x} by {diff}")));
        }
    }
    Ok(CheckItem::pass(name))
}

/// Exhaustive audit of the pruning interval claims.
#[derive(Debug, Clone)]
pub struct LatticeCertificate {
    pub initial: LatticeInterval,
    pub contracted: LatticeInterval,
    pub minimizers: Vec<SubsetMask>,
    pub local_minima: Vec<SubsetMask>,
    pub checks: Vec<CheckItem>,
}

impl LatticeCertificate {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Compare the pruning endpoints against exhaustively computed minimizers
/// and local minima. Nine named checks cover the sandwich, extremality, and
/// local-minimality claims.
pub fn verify_lattice_claims(f: &Oracle) -> Result<LatticeCertificate> {
    brute_guard(f.n())?;
    let pruned = prune_lattice(f)?;
    let brute = brute_minimize(f, &Constraint::Unconstrained)?;
    let a = pruned.initial.lower();
    let b = pruned.initial.upper();
    let a_plus = pruned.contracted.lower();
    let b_plus = pruned.contracted.upper();

    let mut checks = Vec::new();
    let mut subset_check = |name: &str, holds: bool, witness: String| {
        checks.push(if holds {
            CheckItem::pass(name)
        } else {
            CheckItem::fail(name, witness)
        });
    };

    subset_check(
        "a_subset_a_plus",
        a.is_subset_of(a_plus),
        format!("{a} not within {a_plus}"),
    );
    subset_check(
        "b_plus_subset_b",
        b_plus.is_subset_of(b),
        format!("{b_plus} not within {b}"),
    );

    let bad_min = brute
        .optimizers
        .iter()
        .find(|m| !a_plus.is_subset_of(m))
        .cloned();
    subset_check(
        "a_plus_subset_every_minimizer",
        bad_min.is_none(),
        bad_min.map(|m| m.to_string()).unwrap_or_default(),
    );
    let bad_max = brute
        .optimizers
        .iter()
        .find(|m| !m.is_subset_of(b_plus))
        .cloned();
    subset_check(
        "every_minimizer_subset_b_plus",
        bad_max.is_none(),
        bad_max.map(|m| m.to_string()).unwrap_or_default(),
    );

    let is_local = |x: &SubsetMask| brute.local_optima.contains(x);
    subset_check(
        "a_plus_is_local_minimum",
        is_local(a_plus),
        a_plus.to_string(),
    );
    subset_check(
        "b_plus_is_local_minimum",
        is_local(b_plus),
        b_plus.to_string(),
    );

    let not_above = brute
        .local_optima
        .iter()
        .find(|m| !a_plus.is_subset_of(m))
        .cloned();
    subset_check(
        "a_plus_smallest_local_minimum",
        not_above.is_none(),
        not_above.clone().map(|m| m.to_string()).unwrap_or_default(),
    );
    let not_below = brute
        .local_optima
        .iter()
        .find(|m| !m.is_subset_of(b_plus))
        .cloned();
    subset_check(
        "b_plus_largest_local_minimum",
        not_below.is_none(),
        not_below.clone().map(|m| m.to_string()).unwrap_or_default(),
    );

    let outside = brute
        .local_optima
        .iter()
        .find(|m| !pruned.contracted.contains(m))
        .cloned();
    subset_check(
        "local_minima_inside_contracted_interval",
        outside.is_none(),
        outside.map(|m| m.to_string()).unwrap_or_default(),
    );

    Ok(LatticeCertificate {
        initial: pruned.initial,
        contracted: pruned.contracted,
        minimizers: brute.optimizers,
        local_minima: brute.local_optima,
        checks,
    })
}
