//! Maximization by repeated ascent on modular lower bounds.
//!
//! A chain anchored at the incumbent yields a lower bound tight there;
//! moving to the bound's maximizer never decreases the true value, and the
//! choice of chain decides which single-element moves the round can see.
//! The schedules differ in how chains are drawn, how convergence is
//! declared, and whether the final answer is compared with its complement.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linopt::{is_feasible, maximize_modular, Constraint};
use crate::modular::ModularVector;
use crate::oracle::{curvature, Oracle};
use crate::semigradient::{Permutation, Subgradient};
use crate::set::SubsetMask;
use crate::{TrajectoryPoint, TOLERANCE};

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
const MAX_ITERATIONS_FALLBACK: usize = 1_000;

/// Unconstrained maximization schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// One ascent step on a uniformly random chain.
    Rp,
    /// Fresh random anchored chains until a round stops improving.
    Ra,
    /// Random chains that pin the best insertion and the weakest member so a
    /// rejected round certifies an approximate local maximum.
    Rls,
    /// Deterministic alternation of insertion-visible and deletion-visible
    /// chains; stops after both parities reject.
    Dls,
    /// Deterministic bidirectional scan followed by one chain step.
    Bg,
    /// Randomized bidirectional scan followed by one chain step.
    Rg,
}

impl Schedule {
    pub const ALL: [Schedule; 6] = [
        Schedule::Rp,
        Schedule::Ra,
        Schedule::Rls,
        Schedule::Dls,
        Schedule::Bg,
        Schedule::Rg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Rp => "rp",
            Schedule::Ra => "ra",
            Schedule::Rls => "rls",
            Schedule::Dls => "dls",
            Schedule::Bg => "bg",
            Schedule::Rg => "rg",
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, Schedule::Dls | Schedule::Bg)
    }
}

/// Knobs for the maximization routines. `eta` is the relative improvement a
/// round must achieve to continue; `repetitions` reruns randomized schedules
/// with derived seeds and keeps the best outcome.
#[derive(Debug, Clone)]
pub struct MaxOptions {
    pub eta: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub max_iterations: Option<usize>,
}

impl Default for MaxOptions {
    fn default() -> Self {
        MaxOptions {
            eta: 1e-6,
            seed: 0,
            repetitions: 1,
            max_iterations: None,
        }
    }
}

impl MaxOptions {
    fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::invalid("eta must be finite and nonnegative"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least one"));
        }
        Ok(())
    }

    /// Stream for one repetition; distinct reps get decorrelated seeds.
    pub fn rng_for(&self, rep: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_add((rep as u64).wrapping_mul(SEED_STRIDE)),
        )
    }
}

/// Accepted-step cap: with a relative threshold `eta` each accepted round
/// multiplies the value by at least `1 + eta`, and the best singleton start
/// is within a factor `n` of the optimum.
pub fn iteration_cap(n: usize, eta: f64, explicit: Option<usize>) -> usize {
    if let Some(cap) = explicit {
        return cap.max(1);
    }
    if eta > 0.0 {
        (((n.max(2)) as f64).ln() / (1.0 + eta).ln())
            .floor()
            .max(1.0) as usize
    } else {
        MAX_ITERATIONS_FALLBACK
    }
}

/// Result of a maximization run.
#[derive(Debug, Clone)]
pub struct MaximizeReport {
    pub schedule: Schedule,
    pub solution: SubsetMask,
    pub value: f64,
    /// Achieved ratio against a certified optimum, filled in by callers that
    /// ran an exhaustive check.
    pub factor: Option<f64>,
    /// A-priori guarantee of the schedule, where one exists.
    pub expected_factor: Option<f64>,
    /// Outcome of the single-flip audit on the converged iterate, for
    /// schedules that claim local maximality.
    pub local_max: Option<bool>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub iterations: usize,
    pub repetitions: usize,
    pub oracle_calls: u64,
    pub warnings: Vec<String>,
}

struct RunOutcome {
    solution: SubsetMask,
    value: f64,
    trajectory: Vec<TrajectoryPoint>,
    iterations: usize,
    local_max: Option<bool>,
    warnings: Vec<String>,
}

/// Nearest maximizer of a lower bound: members leave only on strictly
/// negative gain, outsiders enter only on strictly positive gain.
fn ascent_step(x: &SubsetMask, h: &ModularVector, tol: f64) -> SubsetMask {
    let mut next = SubsetMask::empty(x.n());
    for j in 0..x.n() {
        let keep = if x.contains(j) {
            h.get(j) >= -tol
        } else {
            h.get(j) > tol
        };
        if keep {
            next.insert(j);
        }
    }
    next
}

fn local_max_audit(f: &Oracle, x: &SubsetMask, fx: f64, eta: f64) -> bool {
    (0..f.n()).all(|j| {
        let mut flipped = x.clone();
        flipped.toggle(j);
        f.eval(&flipped) <= fx + eta * fx.abs() + TOLERANCE
    })
}

/// Cheap necessary check for the nonnegativity precondition: probe the empty
/// set, the ground set, and every singleton. A full check would cost 2^n.
fn probe_nonnegative(f: &Oracle) -> Result<()> {
    let ground = f.ground();
    let mut worst = f.eval(&ground.empty()).min(f.eval(&ground.full()));
    for j in 0..f.n() {
        worst = worst.min(f.eval(&ground.singleton(j)));
    }
    if worst < -TOLERANCE {
        return Err(Error::Domain(format!(
            "negative value {worst} sampled; factor guarantees need a nonnegative function"
        )));
    }
    Ok(())
}

fn best_singleton(f: &Oracle) -> (usize, f64) {
    let ground = f.ground();
    let mut best = (0, f.eval(&ground.singleton(0)));
    for j in 1..f.n() {
        let v = f.eval(&ground.singleton(j));
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Run the schedule. Guarantees assume a nonnegative submodular function;
/// the routine itself runs on anything.
pub fn maximize(f: &Oracle, schedule: Schedule, opts: &MaxOptions) -> Result<MaximizeReport> {
    opts.validate()?;
    let calls_before = f.calls();
    probe_nonnegative(f)?;
    let mut warnings = Vec::new();
    let reps = if schedule.is_deterministic() {
        if opts.repetitions > 1 {
            warnings.push(format!(
                "{} is deterministic; extra repetitions are skipped",
                schedule.name()
            ));
        }
        1
    } else {
        opts.repetitions
    };

    let mut best: Option<RunOutcome> = None;
    for rep in 0..reps {
        let mut rng = opts.rng_for(rep);
        let outcome = match schedule {
            Schedule::Rp => run_rp(f, &mut rng)?,
            Schedule::Ra => run_ra(f, &mut rng, opts)?,
            Schedule::Rls => run_rls(f, &mut rng, opts)?,
            Schedule::Dls => run_dls(f, opts)?,
            Schedule::Bg => run_bg(f)?,
            Schedule::Rg => run_rg(f, &mut rng)?,
        };
        let better = best
            .as_ref()
            .map(|b| outcome.value > b.value)
            .unwrap_or(true);
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one repetition ran");
    if best.value < -TOLERANCE {
        return Err(Error::Domain(format!(
            "iterate reached negative value {}; the function is not nonnegative",
            best.value
        )));
    }
    warnings.extend(best.warnings);

    let expected_factor = match schedule {
        Schedule::Rp => Some(0.25),
        Schedule::Ra => None,
        Schedule::Rls | Schedule::Dls => Some(1.0 / 3.0 - opts.eta),
        Schedule::Bg => Some(1.0 / 3.0),
        Schedule::Rg => Some(0.5),
    };

    Ok(MaximizeReport {
        schedule,
        solution: best.solution,
        value: best.value,
        factor: None,
        expected_factor,
        local_max: best.local_max,
        trajectory: best.trajectory,
        iterations: best.iterations,
        repetitions: reps,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

fn run_rp(f: &Oracle, rng: &mut ChaCha8Rng) -> Result<RunOutcome> {
    let empty = SubsetMask::empty(f.n());
    let sg = Subgradient::from_permutation(f, Permutation::random(f.n(), rng))?;
    let x = ascent_step(&empty, sg.values(), TOLERANCE);
    let value = f.eval(&x);
    Ok(RunOutcome {
        trajectory: vec![
            TrajectoryPoint {
                iteration: 0,
                set: empty,
                value: 0.0,
            },
            TrajectoryPoint {
                iteration: 1,
                set: x.clone(),
                value,
            },
        ],
        solution: x,
        value,
        iterations: 1,
        local_max: None,
        warnings: Vec::new(),
    })
}

fn run_ra(f: &Oracle, rng: &mut ChaCha8Rng, opts: &MaxOptions) -> Result<RunOutcome> {
    let cap = iteration_cap(f.n(), opts.eta, opts.max_iterations);
    let mut x = SubsetMask::empty(f.n());
    let mut fx = f.eval(&x);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        set: x.clone(),
        value: fx,
    }];
    let mut warnings = Vec::new();
    let mut accepted = 0;
    loop {
        let sg = Subgradient::from_permutation(f, Permutation::anchored_random(&x, rng))?;
        let next = ascent_step(&x, sg.values(), TOLERANCE);
        if next == x {
            break;
        }
        let f_next = f.eval(&next);
        if f_next <= fx + opts.eta * fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
        accepted += 1;
        trajectory.push(TrajectoryPoint {
            iteration: accepted,
            set: x.clone(),
            value: fx,
        });
        if accepted >= cap {
            warnings.push(format!("iteration cap {cap} reached"));
            break;
        }
    }
    let local_max = Some(local_max_audit(f, &x, fx, opts.eta));
    Ok(RunOutcome {
        solution: x,
        value: fx,
        trajectory,
        iterations: accepted,
        local_max,
        warnings,
    })
}

/// Chain for one randomized local-search round: members shuffled with the
/// weakest one last, then the strongest outsider, then the rest shuffled.
/// The bound therefore prices the best single insertion and the best single
/// deletion exactly.
fn rls_permutation(f: &Oracle, x: &SubsetMask, rng: &mut ChaCha8Rng) -> Result<Permutation> {
    let fx = f.eval(x);
    let mut members: Vec<usize> = x.iter().collect();
    let mut outsiders: Vec<usize> = (0..f.n()).filter(|&j| !x.contains(j)).collect();

    let mut order = Vec::with_capacity(f.n());
    if !members.is_empty() {
        let weakest = members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let ga = fx - f.eval(&x.without(a));
                let gb = fx - f.eval(&x.without(b));
                ga.total_cmp(&gb).then(a.cmp(&b))
            })
            .expect("members nonempty");
        members.retain(|&j| j != weakest);
        members.shuffle(rng);
        order.extend(members);
        order.push(weakest);
    }
    if !outsiders.is_empty() {
        let strongest = outsiders
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let ga = f.eval(&x.with(a)) - fx;
                let gb = f.eval(&x.with(b)) - fx;
                ga.total_cmp(&gb).then(b.cmp(&a))
            })
            .expect("outsiders nonempty");
        outsiders.retain(|&j| j != strongest);
        outsiders.shuffle(rng);
        order.push(strongest);
        order.extend(outsiders);
    }
    Permutation::new(order, x.len())
}

fn run_rls(f: &Oracle, rng: &mut ChaCha8Rng, opts: &MaxOptions) -> Result<RunOutcome> {
    let cap = iteration_cap(f.n(), opts.eta, opts.max_iterations);
    let (seed_elem, seed_value) = best_singleton(f);
    let mut x = f.ground().singleton(seed_elem);
    let mut fx = seed_value;
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        set: x.clone(),
        value: fx,
    }];
    let mut warnings = Vec::new();
    let mut accepted = 0;
    loop {
        let sg = Subgradient::from_permutation(f, rls_permutation(f, &x, rng)?)?;
        let next = ascent_step(&x, sg.values(), TOLERANCE);
        if next == x {
            break;
        }
        let f_next = f.eval(&next);
        if f_next <= fx + opts.eta * fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
        accepted += 1;
        trajectory.push(TrajectoryPoint {
            iteration: accepted,
            set: x.clone(),
            value: fx,
        });
        if accepted >= cap {
            warnings.push(format!("iteration cap {cap} reached"));
            break;
        }
    }
    let local_max = Some(local_max_audit(f, &x, fx, opts.eta));
    finish_with_complement(f, x, fx, trajectory, accepted, local_max, warnings)
}

/// Pick the better of the converged set and its complement.
fn finish_with_complement(
    f: &Oracle,
    x: SubsetMask,
    fx: f64,
    trajectory: Vec<TrajectoryPoint>,
    iterations: usize,
    local_max: Option<bool>,
    warnings: Vec<String>,
) -> Result<RunOutcome> {
    let complement = x.complement();
    let f_comp = f.eval(&complement);
    let (solution, value) = if f_comp > fx {
        (complement, f_comp)
    } else {
        (x, fx)
    };
    Ok(RunOutcome {
        solution,
        value,
        trajectory,
        iterations,
        local_max,
        warnings,
    })
}

/// Greedy visit order: always the remaining element with the largest gain on
/// top of the prefix, ties to the lowest id.
fn greedy_order(f: &Oracle) -> Vec<usize> {
    let n = f.n();
    let mut cur = SubsetMask::empty(n);
    let mut f_cur = 0.0;
    let mut order = Vec::with_capacity(n);
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let (pos, _, value) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, j, f.eval(&cur.with(j))))
            .max_by(|a, b| (a.2 - 0.0).total_cmp(&b.2).then(b.1.cmp(&a.1)))
            .expect("remaining nonempty");
        let j = remaining.swap_remove(pos);
        cur.insert(j);
        f_cur = value;
        order.push(j);
    }
    let _ = f_cur;
    order
}

/// Insertion-visible chain: members in their previous relative order, then
/// outsiders greedily by gain on the growing set.
fn dls_insert_order(f: &Oracle, x: &SubsetMask, previous: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = previous
        .iter()
        .copied()
        .filter(|&j| x.contains(j))
        .collect();
    let mut t = x.clone();
    let mut f_t = f.eval(&t);
    let mut remaining: Vec<usize> = previous
        .iter()
        .copied()
        .filter(|&j| !x.contains(j))
        .collect();
    remaining.sort_unstable();
    while !remaining.is_empty() {
        let (pos, _, value) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, j, f.eval(&t.with(j))))
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.1.cmp(&a.1)))
            .expect("remaining nonempty");
        let j = remaining.remove(pos);
        t.insert(j);
        f_t = value;
        order.push(j);
    }
    let _ = f_t;
    order
}

/// Deletion-visible chain: peel the weakest member off repeatedly, lay the
/// peel order down backwards, then the outsiders in their previous order.
fn dls_delete_order(f: &Oracle, x: &SubsetMask, previous: &[usize]) -> Vec<usize> {
    let mut t = x.clone();
    let mut peel = Vec::with_capacity(x.len());
    while !t.is_empty() {
        let f_t = f.eval(&t);
        let weakest = t
            .iter()
            .min_by(|&a, &b| {
                let ga = f_t - f.eval(&t.without(a));
                let gb = f_t - f.eval(&t.without(b));
                ga.total_cmp(&gb).then(a.cmp(&b))
            })
            .expect("set nonempty");
        peel.push(weakest);
        t.remove(weakest);
    }
    peel.reverse();
    let mut order = peel;
    order.extend(previous.iter().copied().filter(|&j| !x.contains(j)));
    order
}

fn run_dls(f: &Oracle, opts: &MaxOptions) -> Result<RunOutcome> {
    let cap = iteration_cap(f.n(), opts.eta, opts.max_iterations);
    let mut previous = greedy_order(f);
    let sg = Subgradient::from_permutation(f, Permutation::new(previous.clone(), 0)?)?;
    let mut x = ascent_step(&SubsetMask::empty(f.n()), sg.values(), TOLERANCE);
    let mut fx = f.eval(&x);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        set: x.clone(),
        value: fx,
    }];
    let mut warnings = Vec::new();
    let mut accepted = 0;
    let mut rejects = 0;
    let mut insert_parity = true;
    while rejects < 2 {
        let order = if insert_parity {
            dls_insert_order(f, &x, &previous)
        } else {
            dls_delete_order(f, &x, &previous)
        };
        insert_parity = !insert_parity;
        let sg = Subgradient::from_permutation(f, Permutation::new(order, x.len())?)?;
        previous = sg.permutation().order().to_vec();
        let next = ascent_step(&x, sg.values(), TOLERANCE);
        if next == x {
            rejects += 1;
            continue;
        }
        let f_next = f.eval(&next);
        if f_next <= fx + opts.eta * fx.abs() {
            rejects += 1;
            continue;
        }
        rejects = 0;
        x = next;
        fx = f_next;
        accepted += 1;
        trajectory.push(TrajectoryPoint {
            iteration: accepted,
            set: x.clone(),
            value: fx,
        });
        if accepted >= cap {
            warnings.push(format!("iteration cap {cap} reached"));
            break;
        }
    }
    let local_max = Some(local_max_audit(f, &x, fx, opts.eta));
    finish_with_complement(f, x, fx, trajectory, accepted, local_max, warnings)
}

/// Outcome of a bidirectional element scan.
pub struct ScanOutcome {
    pub survivor: SubsetMask,
    pub survivor_value: f64,
    pub accepted: Vec<usize>,
    pub deleted: Vec<usize>,
}

/// Scan elements in the order given by `order` keeping two frontiers: a
/// growing lower set and a shrinking upper set. `decide` sees the insertion
/// gain at the lower frontier and the deletion gain at the upper one.
/// `order` must visit every element exactly once.
pub fn bidirectional_scan(
    f: &Oracle,
    order: &[usize],
    mut decide: impl FnMut(usize, f64, f64) -> bool,
) -> Result<ScanOutcome> {
    let n = f.n();
    let visited = SubsetMask::from_indices(n, order.iter().copied())?;
    if order.len() != n || !visited.is_full() {
        return Err(Error::invalid("scan order must visit every element once"));
    }
    let mut lower = SubsetMask::empty(n);
    let mut upper = SubsetMask::full(n);
    let mut f_lower = f.eval(&lower);
    let mut f_upper = f.eval(&upper);
    let mut accepted = Vec::new();
    let mut deleted = Vec::new();
    for &i in order {
        let f_lower_with = f.eval(&lower.with(i));
        let f_upper_without = f.eval(&upper.without(i));
        let gain_add = f_lower_with - f_lower;
        let gain_del = f_upper_without - f_upper;
        if decide(i, gain_add, gain_del) {
            lower.insert(i);
            f_lower = f_lower_with;
            accepted.push(i);
        } else {
            upper.remove(i);
            f_upper = f_upper_without;
            deleted.push(i);
        }
    }
    Ok(ScanOutcome {
        survivor: lower,
        survivor_value: f_lower,
        accepted,
        deleted,
    })
}

fn scan_to_outcome(f: &Oracle, scan: ScanOutcome) -> Result<RunOutcome> {
    let mut order = scan.accepted.clone();
    order.extend(scan.deleted.iter().rev());
    let perm = Permutation::new(order, scan.accepted.len())?;
    let sg = Subgradient::from_permutation(f, perm)?;
    let stepped = ascent_step(&SubsetMask::empty(f.n()), sg.values(), TOLERANCE);
    let stepped_value = f.eval(&stepped);
    let (solution, value) = if stepped_value >= scan.survivor_value {
        (stepped, stepped_value)
    } else {
        (scan.survivor.clone(), scan.survivor_value)
    };
    Ok(RunOutcome {
        trajectory: vec![
            TrajectoryPoint {
                iteration: 0,
                set: scan.survivor,
                value: scan.survivor_value,
            },
            TrajectoryPoint {
                iteration: 1,
                set: solution.clone(),
                value,
            },
        ],
        solution,
        value,
        iterations: 1,
        local_max: None,
        warnings: Vec::new(),
    })
}

fn run_bg(f: &Oracle) -> Result<RunOutcome> {
    let order: Vec<usize> = (0..f.n()).collect();
    let scan = bidirectional_scan(f, &order, |_, gain_add, gain_del| gain_add >= gain_del)?;
    scan_to_outcome(f, scan)
}

fn run_rg(f: &Oracle, rng: &mut ChaCha8Rng) -> Result<RunOutcome> {
    let order: Vec<usize> = (0..f.n()).collect();
    let scan = bidirectional_scan(f, &order, |_, gain_add, gain_del| {
        let up = gain_add.max(0.0);
        let down = gain_del.max(0.0);
        if up + down <= 0.0 {
            true
        } else {
            rng.random_bool(up / (up + down))
        }
    })?;
    scan_to_outcome(f, scan)
}

/// One ascent step anchored at an externally supplied set; the result never
/// scores below `f(y)`.
pub fn warm_start_step(f: &Oracle, y: &SubsetMask) -> Result<(SubsetMask, f64)> {
    if y.n() != f.n() {
        return Err(Error::invalid("start set must match the oracle"));
    }
    let sg = Subgradient::from_permutation(f, Permutation::anchored_identity(y))?;
    let x = ascent_step(y, sg.values(), TOLERANCE);
    Ok((x.clone(), f.eval(&x)))
}

fn constrained_factor(
    f: &Oracle,
    c: &Constraint,
    warnings: &mut Vec<String>,
) -> Result<Option<f64>> {
    let kappa = match curvature(f) {
        Ok(k) => k,
        Err(Error::Domain(why)) => {
            warnings.push(format!("worst-case factor undefined: {why}"));
            return Ok(None);
        }
        Err(other) => return Err(other),
    };
    Ok(match c {
        Constraint::CardinalityAtMost(_) => Some(if kappa <= TOLERANCE {
            1.0
        } else {
            (1.0 - (-kappa).exp()) / kappa
        }),
        Constraint::Matroid(_) => Some(1.0 / (1.0 + kappa)),
        Constraint::MatroidIntersection(ms) => Some(1.0 / (ms.len() as f64 + kappa)),
        _ => None,
    })
}

/// Maximize over a down-monotone constraint: build a chain by feasible
/// greedy extension, then optimize its lower bound over the constraint with
/// the exact linear solver. The answer always scores at least the greedy
/// set itself.
pub fn maximize_constrained_greedy(
    f: &Oracle,
    c: &Constraint,
    opts: &MaxOptions,
) -> Result<MaximizeReport> {
    opts.validate()?;
    c.validate_for(f.n())?;
    if !c.is_down_monotone() {
        return Err(Error::invalid(
            "greedy maximization needs a down-monotone constraint",
        ));
    }
    if matches!(c, Constraint::Knapsack { .. }) {
        return Err(Error::invalid(
            "knapsack maximization has a dedicated routine with cost-ratio chains",
        ));
    }
    let calls_before = f.calls();
    probe_nonnegative(f)?;
    let mut warnings = Vec::new();
    let expected_factor = constrained_factor(f, c, &mut warnings)?;

    let n = f.n();
    let mut greedy_set = SubsetMask::empty(n);
    let mut f_greedy = 0.0;
    let mut order = Vec::with_capacity(n);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if greedy_set.contains(j) || order.contains(&j) {
                continue;
            }
            let cand = greedy_set.with(j);
            if !is_feasible(&cand, c, TOLERANCE)? {
                continue;
            }
            let value = f.eval(&cand);
            let improves = best.map(|(_, bv)| value > bv).unwrap_or(true);
            if improves {
                best = Some((j, value));
            }
        }
        let Some((j, value)) = best else { break };
        greedy_set.insert(j);
        f_greedy = value;
        order.push(j);
    }
    let greedy_len = order.len();
    order.extend((0..n).filter(|j| !greedy_set.contains(*j)));

    let sg = Subgradient::from_permutation(f, Permutation::new(order, 0)?)?;
    let sub = maximize_modular(sg.values(), c, TOLERANCE)?;
    if !sub.exact {
        warnings.push(format!(
            "linear subproblem solved approximately (factor {})",
            sub.beta
        ));
    }
    let stepped_value = f.eval(&sub.set);
    let (solution, value) = if stepped_value >= f_greedy {
        (sub.set, stepped_value)
    } else {
        (greedy_set.clone(), f_greedy)
    };
    Ok(MaximizeReport {
        schedule: Schedule::Dls,
        solution: solution.clone(),
        value,
        factor: None,
        expected_factor,
        local_max: None,
        trajectory: vec![
            TrajectoryPoint {
                iteration: 0,
                set: greedy_set,
                value: f_greedy,
            },
            TrajectoryPoint {
                iteration: 1,
                set: solution,
                value,
            },
        ],
        iterations: greedy_len.max(1),
        repetitions: 1,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

fn knapsack_chain_candidate(
    f: &Oracle,
    costs: &[f64],
    budget: f64,
    base: &SubsetMask,
    c: &Constraint,
    warnings: &mut Vec<String>,
) -> Result<(SubsetMask, f64)> {
    let n = f.n();
    let mut x = base.clone();
    let mut spent: f64 = x.iter().map(|j| costs[j]).sum();
    let mut f_x = f.eval(&x);
    let mut order: Vec<usize> = {
        let mut ids: Vec<usize> = base.iter().collect();
        ids.sort_unstable();
        ids
    };
    loop {
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &cost) in costs.iter().enumerate() {
            if x.contains(j) || order.contains(&j) || spent + cost > budget + TOLERANCE {
                continue;
            }
            let gain = f.eval(&x.with(j)) - f_x;
            let ratio = if cost > 0.0 {
                gain / cost
            } else if gain > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let better = match best {
                None => true,
                Some((bj, br, bg)) => {
                    ratio > br || (ratio == br && (gain > bg || (gain == bg && j < bj)))
                }
            };
            if better {
                best = Some((j, ratio, gain));
            }
        }
        let Some((j, _, gain)) = best else { break };
        x.insert(j);
        spent += costs[j];
        f_x += gain;
        order.push(j);
    }
    let greedy_set = x.clone();
    let f_greedy = f.eval(&greedy_set);
    order.extend((0..n).filter(|j| !greedy_set.contains(*j)));

    let sg = Subgradient::from_permutation(f, Permutation::new(order, base.len())?)?;
    let sub = maximize_modular(sg.values(), c, TOLERANCE)?;
    if !sub.exact {
        warnings.push(format!(
            "linear subproblem solved approximately (factor {})",
            sub.beta
        ));
    }
    let stepped_value = f.eval(&sub.set);
    if stepped_value >= f_greedy {
        Ok((sub.set, stepped_value))
    } else {
        Ok((greedy_set, f_greedy))
    }
}

fn feasible_subsets_up_to(n: usize, costs: &[f64], budget: f64, size: usize) -> Vec<SubsetMask> {
    let mut out = vec![SubsetMask::empty(n)];
    if size == 0 {
        return out;
    }
    let mut stack: Vec<(usize, SubsetMask, f64)> = vec![(0, SubsetMask::empty(n), 0.0)];
    while let Some((start, set, spent)) = stack.pop() {
        for (j, &item_cost) in costs.iter().enumerate().skip(start) {
            let cost = spent + item_cost;
            if cost > budget + TOLERANCE {
                continue;
            }
            let bigger = set.with(j);
            out.push(bigger.clone());
            if bigger.len() < size {
                stack.push((j + 1, bigger, cost));
            }
        }
    }
    out
}

/// Budgeted maximization: cost-ratio chains optimized by the exact knapsack
/// solver, compared against the best affordable singleton. `seed_size`
/// enumerates all feasible starts up to that many elements (at most three)
/// and keeps the best finish, trading oracle calls for a stronger factor.
pub fn maximize_knapsack(
    f: &Oracle,
    costs: &[f64],
    budget: f64,
    seed_size: usize,
    opts: &MaxOptions,
) -> Result<MaximizeReport> {
    opts.validate()?;
    let c = Constraint::Knapsack {
        costs: costs.to_vec(),
        budget,
    };
    c.validate_for(f.n())?;
    if seed_size > 3 {
        return Err(Error::invalid(
            "seed enumeration is capped at three elements",
        ));
    }
    let calls_before = f.calls();
    probe_nonnegative(f)?;
    let mut warnings = Vec::new();

    let mut best_set = SubsetMask::empty(f.n());
    let mut best_value = 0.0;
    for (j, &cost) in costs.iter().enumerate() {
        if cost <= budget + TOLERANCE {
            let v = f.eval(&f.ground().singleton(j));
            if v > best_value {
                best_value = v;
                best_set = f.ground().singleton(j);
            }
        }
    }

    let seeds = feasible_subsets_up_to(f.n(), costs, budget, seed_size);
    let seed_count = seeds.len();
    for seed in seeds {
        let (set, value) = knapsack_chain_candidate(f, costs, budget, &seed, &c, &mut warnings)?;
        if value > best_value {
            best_value = value;
            best_set = set;
        }
    }

    let expected_factor = if seed_size >= 3 {
        Some(1.0 - (-1.0f64).exp())
    } else {
        Some(1.0 - (-0.5f64).exp())
    };
    Ok(MaximizeReport {
        schedule: Schedule::Dls,
        solution: best_set.clone(),
        value: best_value,
        factor: None,
        expected_factor,
        local_max: None,
        trajectory: vec![TrajectoryPoint {
            iteration: 0,
            set: best_set,
            value: best_value,
        }],
        iterations: seed_count,
        repetitions: 1,
        oracle_calls: f.calls() - calls_before,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::{brute_maximize, brute_minimize};
    use crate::functions::{random_instance, FamilyParams};
    use crate::mmin::curvature_ratio_bound;

    fn dr_instance(n: usize, seed: u64, lambda: f64) -> Oracle {
        let params = FamilyParams {
            lambda: Some(lambda),
            ..FamilyParams::default()
        };
        random_instance("dr", n, seed, &params).unwrap()
    }

    #[test]
    fn deterministic_schedules_beat_a_third_of_optimum() {
        for seed in 0..6 {
            let f = dr_instance(8, seed, 1.0);
            let opt = brute_maximize(&f, &Constraint::Unconstrained)
                .unwrap()
                .optimum;
            let bg = maximize(&f, Schedule::Bg, &MaxOptions::default()).unwrap();
            assert!(bg.value >= opt / 3.0 - 1e-9, "bg seed {seed}");
            let dls = maximize(&f, Schedule::Dls, &MaxOptions::default()).unwrap();
            assert!(
                dls.value >= (1.0 / 3.0 - 1e-6) * opt - 1e-9,
                "dls seed {seed}"
            );
            assert_eq!(dls.local_max, Some(true));
        }
    }

    #[test]
    fn randomized_schedules_run_and_stay_feasible() {
        let f = dr_instance(8, 11, 0.9);
        for schedule in [Schedule::Rp, Schedule::Ra, Schedule::Rls, Schedule::Rg] {
            let opts = MaxOptions {
                seed: 5,
                repetitions: 3,
                ..MaxOptions::default()
            };
            let report = maximize(&f, schedule, &opts).unwrap();
            assert!((f.eval(&report.solution) - report.value).abs() < 1e-9);
            assert!(report.value >= -1e-9, "{}", schedule.name());
            let again = maximize(&f, schedule, &opts).unwrap();
            assert_eq!(report.solution, again.solution, "{}", schedule.name());
        }
    }

    #[test]
    fn scan_order_is_respected_and_validated() {
        let f = dr_instance(7, 2, 1.0);
        let reversed: Vec<usize> = (0..7).rev().collect();
        let scan = bidirectional_scan(&f, &reversed, |_, add, del| add >= del).unwrap();
        let mut seen = scan.accepted.clone();
        seen.extend(scan.deleted.iter());
        seen.sort_unstable();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
        assert_eq!(scan.survivor.len(), scan.accepted.len());
        // the follow-up chain step never drops below the scan survivor
        let outcome = scan_to_outcome(&f, scan).unwrap();
        assert!(outcome.value >= outcome.trajectory[0].value - 1e-12);

        assert!(bidirectional_scan(&f, &[0, 1, 2], |_, a, d| a >= d).is_err());
        assert!(bidirectional_scan(&f, &[0, 0, 1, 2, 3, 4, 5], |_, a, d| a >= d).is_err());
    }

    #[test]
    fn rls_certifies_a_local_maximum() {
        for seed in 0..5 {
            let f = dr_instance(9, seed, 1.0);
            let report = maximize(&f, Schedule::Rls, &MaxOptions::default()).unwrap();
            assert_eq!(report.local_max, Some(true), "seed {seed}");
        }
    }

    #[test]
    fn warm_start_never_loses_value() {
        let f = dr_instance(9, 3, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut y = SubsetMask::empty(9);
            for j in 0..9 {
                if rng.random_bool(0.5) {
                    y.insert(j);
                }
            }
            let fy = f.eval(&y);
            let (x, fx) = warm_start_step(&f, &y).unwrap();
            assert!(fx >= fy - 1e-9);
            assert!((f.eval(&x) - fx).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_cardinality_respects_curvature_factor() {
        for seed in 0..5 {
            let f = random_instance("cm", 10, seed, &FamilyParams::default()).unwrap();
            let c = Constraint::CardinalityAtMost(3);
            let report = maximize_constrained_greedy(&f, &c, &MaxOptions::default()).unwrap();
            assert!(is_feasible(&report.solution, &c, 1e-9).unwrap());
            let opt = brute_maximize(&f, &c).unwrap().optimum;
            let factor = report.expected_factor.unwrap();
            assert!(
                report.value >= factor * opt - 1e-9,
                "seed {seed}: {} < {factor} * {opt}",
                report.value
            );
        }
    }

    #[test]
    fn knapsack_seeding_only_helps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..4 {
            let f = random_instance("cm", 10, 100 + seed, &FamilyParams::default()).unwrap();
            let costs: Vec<f64> = (0..10).map(|_| rng.random_range(1..=4) as f64).collect();
            let budget = 8.0;
            let c = Constraint::Knapsack {
                costs: costs.clone(),
                budget,
            };
            let opt = brute_maximize(&f, &c).unwrap().optimum;
            let plain = maximize_knapsack(&f, &costs, budget, 0, &MaxOptions::default()).unwrap();
            let seeded = maximize_knapsack(&f, &costs, budget, 3, &MaxOptions::default()).unwrap();
            assert!(is_feasible(&plain.solution, &c, 1e-9).unwrap());
            assert!(is_feasible(&seeded.solution, &c, 1e-9).unwrap());
            assert!(seeded.value >= plain.value - 1e-9, "seed {seed}");
            assert!(plain.value >= plain.expected_factor.unwrap() * opt - 1e-9);
            assert!(seeded.value >= seeded.expected_factor.unwrap() * opt - 1e-9);
        }
    }

    #[test]
    fn iteration_cap_formula() {
        assert_eq!(iteration_cap(12, 0.01, None), 249);
        assert_eq!(iteration_cap(2, 10.0, None), 1);
        assert_eq!(iteration_cap(100, 0.0, None), MAX_ITERATIONS_FALLBACK);
        assert_eq!(iteration_cap(100, 0.5, Some(7)), 7);
    }

    #[test]
    fn curvature_bound_is_consistent_with_constrained_minimum() {
        for seed in 0..5 {
            let f = random_instance("ccm", 10, seed, &FamilyParams::default()).unwrap();
            let c = Constraint::CardinalityAtLeast(4);
            let report =
                crate::mmin::descend_constrained(&f, &c, &crate::mmin::MinOptions::constrained())
                    .unwrap();
            let brute = brute_minimize(&f, &c).unwrap();
            let k = brute.optimizers[0].len();
            let kappa = curvature(&f).unwrap();
            let bound = curvature_ratio_bound(k, kappa) * brute.optimum;
            assert!(
                report.value <= bound + 1e-9,
                "seed {seed}: {} > {bound}",
                report.value
            );
            assert!(report.value <= report.trajectory[0].value + 1e-12);
        }
    }
}
