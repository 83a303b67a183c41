//! Experiment runner behind the `bench` subcommand. A JSON spec describes a
//! grid of instances; the runner solves every cell, writes one CSV of
//! per-instance rows plus one of grid averages, and reports any violated
//! guarantee. Outputs are byte-deterministic unless timing capture is on.

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};

use submm::brute::{brute_maximize, brute_minimize};
use submm::functions::{random_instance, FamilyParams};
use submm::linopt::Constraint;
use submm::mmax::{maximize, MaxOptions, Schedule};
use submm::mmin::{curvature_ratio_bound, descend_constrained, prune_lattice, MinOptions};
use submm::oracle::curvature;
use submm::{Oracle, SubsetMask, TOLERANCE};

use crate::constraint_spec::ConstraintSpec;

#[derive(Debug, Clone, Deserialize)]
pub struct FamilyEntry {
    pub family: String,
    #[serde(default)]
    pub params: FamilyParams,
}

fn default_eta() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

fn default_reps() -> usize {
    5
}

/// One experiment grid. `out` defaults to `<name>.csv`; a companion
/// `<name>_summary.csv` always accompanies it.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    /// Interval pruning across families and sizes.
    LatticeReduction {
        name: String,
        families: Vec<FamilyEntry>,
        ns: Vec<usize>,
        seeds: Vec<u64>,
        #[serde(default)]
        out: Option<String>,
    },
    /// Constrained descent vs its one-round proxy and (optionally) the
    /// exhaustive optimum.
    ConstrainedMin {
        name: String,
        families: Vec<FamilyEntry>,
        constraints: Vec<ConstraintSpec>,
        /// Sizes for constraints that do not fix the ground set themselves.
        #[serde(default)]
        ns: Vec<usize>,
        seeds: Vec<u64>,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_true")]
        certify: bool,
        #[serde(default)]
        out: Option<String>,
    },
    /// Maximization schedules head to head on diversity-relevance
    /// instances, including the uniform-random baseline `rs`.
    MaxComparison {
        name: String,
        n: usize,
        lambdas: Vec<f64>,
        seeds: Vec<u64>,
        schedules: Vec<String>,
        #[serde(default = "default_reps")]
        repetitions: usize,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default)]
        out: Option<String>,
    },
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing experiment spec")
    }

    pub fn name(&self) -> &str {
        match self {
            ExperimentSpec::LatticeReduction { name, .. }
            | ExperimentSpec::ConstrainedMin { name, .. }
            | ExperimentSpec::MaxComparison { name, .. } => name,
        }
    }

    fn out_file(&self) -> String {
        let explicit = match self {
            ExperimentSpec::LatticeReduction { out, .. }
            | ExperimentSpec::ConstrainedMin { out, .. }
            | ExperimentSpec::MaxComparison { out, .. } => out.clone(),
        };
        explicit.unwrap_or_else(|| format!("{}.csv", self.name()))
    }
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub violations: Vec<String>,
}

pub fn run(
    spec: &ExperimentSpec,
    out_dir: &Path,
    jobs: usize,
    timings: bool,
) -> Result<BenchOutcome> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    match spec {
        ExperimentSpec::LatticeReduction {
            families,
            ns,
            seeds,
            ..
        } => run_lattice_reduction(spec, families, ns, seeds, out_dir, jobs, timings),
        ExperimentSpec::ConstrainedMin {
            families,
            constraints,
            ns,
            seeds,
            eta,
            certify,
            ..
        } => run_constrained_min(
            spec,
            families,
            constraints,
            ns,
            seeds,
            *eta,
            *certify,
            out_dir,
            jobs,
            timings,
        ),
        ExperimentSpec::MaxComparison {
            n,
            lambdas,
            seeds,
            schedules,
            repetitions,
            eta,
            ..
        } => run_max_comparison(
            spec,
            *n,
            lambdas,
            seeds,
            schedules,
            *repetitions,
            *eta,
            out_dir,
            jobs,
            timings,
        ),
    }
}

/// Run `work` over the job list, serially or on a bounded thread pool.
/// Results come back in job order either way, so output bytes never depend
/// on scheduling.
fn run_jobs<J, R>(
    jobs: Vec<J>,
    threads: usize,
    work: impl Fn(&J) -> Result<R> + Sync,
) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
{
    if threads <= 1 {
        return jobs.iter().map(&work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter().map(&work).collect()
    })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn elapsed_ms(start: std::time::Instant, timings: bool) -> u128 {
    if timings {
        start.elapsed().as_millis()
    } else {
        0
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn summary_path(main: &Path) -> PathBuf {
    let stem = main.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    main.with_file_name(format!("{stem}_summary.csv"))
}

struct LatticeRow {
    family: String,
    n: usize,
    seed: u64,
    a_len: usize,
    b_len: usize,
    a_plus_len: usize,
    b_plus_len: usize,
    initial_pct: f64,
    contracted_pct: f64,
    oracle_calls: u64,
    wall_ms: u128,
    violation: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn run_lattice_reduction(
    spec: &ExperimentSpec,
    families: &[FamilyEntry],
    ns: &[usize],
    seeds: &[u64],
    out_dir: &Path,
    jobs: usize,
    timings: bool,
) -> Result<BenchOutcome> {
    if families.is_empty() || ns.is_empty() || seeds.is_empty() {
        bail!("lattice_reduction needs nonempty families, ns, and seeds");
    }
    let mut grid = Vec::new();
    for fam in families {
        for &n in ns {
            for &seed in seeds {
                grid.push((fam.clone(), n, seed));
            }
        }
    }
    let rows = run_jobs(grid, jobs, |(fam, n, seed)| {
        let start = std::time::Instant::now();
        let f = random_instance(&fam.family, *n, *seed, &fam.params)?;
        let res = prune_lattice(&f)?;
        let nested = res.initial.lower().is_subset_of(res.contracted.lower())
            && res.contracted.upper().is_subset_of(res.initial.upper());
        Ok(LatticeRow {
            family: fam.family.clone(),
            n: *n,
            seed: *seed,
            a_len: res.initial.lower().len(),
            b_len: res.initial.upper().len(),
            a_plus_len: res.contracted.lower().len(),
            b_plus_len: res.contracted.upper().len(),
            initial_pct: res.initial.reduction_percent(),
            contracted_pct: res.contracted.reduction_percent(),
            oracle_calls: res.oracle_calls,
            wall_ms: elapsed_ms(start, timings),
            violation: (!nested)
                .then(|| format!("{} n={n} seed={seed}: intervals not nested", fam.family)),
        })
    })?;

    let header = "family,n,seed,a_len,b_len,a_plus_len,b_plus_len,initial_reduction_pct,contracted_reduction_pct,oracle_calls,wall_ms";
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.family,
                r.n,
                r.seed,
                r.a_len,
                r.b_len,
                r.a_plus_len,
                r.b_plus_len,
                num(r.initial_pct),
                num(r.contracted_pct),
                r.oracle_calls,
                r.wall_ms
            )
        })
        .collect();

    // Per (family, n) means over seeds, then one "all" row per family.
    let mut summary = Vec::new();
    for fam in families {
        let fam_rows: Vec<&LatticeRow> = rows.iter().filter(|r| r.family == fam.family).collect();
        for &n in ns {
            let cell: Vec<&&LatticeRow> = fam_rows.iter().filter(|r| r.n == n).collect();
            summary.push(format!(
                "{},{},{},{},{},{}",
                fam.family,
                n,
                cell.len(),
                num(mean(
                    &cell.iter().map(|r| r.initial_pct).collect::<Vec<_>>()
                )),
                num(mean(
                    &cell.iter().map(|r| r.contracted_pct).collect::<Vec<_>>()
                )),
                num(mean(
                    &cell
                        .iter()
                        .map(|r| r.oracle_calls as f64)
                        .collect::<Vec<_>>()
                )),
            ));
        }
        summary.push(format!(
            "{},all,{},{},{},{}",
            fam.family,
            fam_rows.len(),
            num(mean(
                &fam_rows.iter().map(|r| r.initial_pct).collect::<Vec<_>>()
            )),
            num(mean(
                &fam_rows
                    .iter()
                    .map(|r| r.contracted_pct)
                    .collect::<Vec<_>>()
            )),
            num(mean(
                &fam_rows
                    .iter()
                    .map(|r| r.oracle_calls as f64)
                    .collect::<Vec<_>>()
            )),
        ));
    }

    let main = out_dir.join(spec.out_file());
    let summary_file = summary_path(&main);
    write_csv(&main, header, &lines)?;
    write_csv(
        &summary_file,
        "family,n,instances,mean_initial_reduction_pct,mean_contracted_reduction_pct,mean_oracle_calls",
        &summary,
    )?;
    Ok(BenchOutcome {
        files: vec![main, summary_file],
        rows: rows.len(),
        violations: rows.into_iter().filter_map(|r| r.violation).collect(),
    })
}

struct ConstrainedRow {
    family: String,
    constraint: String,
    n: usize,
    seed: u64,
    mmin_value: f64,
    mu_value: f64,
    opt: Option<f64>,
    factor_mmin: Option<f64>,
    factor_mu: Option<f64>,
    curvature: Option<f64>,
    bound_n: Option<f64>,
    bound_opt: Option<f64>,
    iterations: usize,
    oracle_calls: u64,
    warnings: usize,
    wall_ms: u128,
    violations: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn run_constrained_min(
    spec: &ExperimentSpec,
    families: &[FamilyEntry],
    constraints: &[ConstraintSpec],
    ns: &[usize],
    seeds: &[u64],
    eta: f64,
    certify: bool,
    out_dir: &Path,
    jobs: usize,
    timings: bool,
) -> Result<BenchOutcome> {
    if families.is_empty() || constraints.is_empty() || seeds.is_empty() {
        bail!("constrained_min needs nonempty families, constraints, and seeds");
    }
    let mut grid = Vec::new();
    for fam in families {
        for cs in constraints {
            let sizes = match cs.intrinsic_n()? {
                Some(n) => vec![n],
                None if ns.is_empty() => {
                    bail!("constraint {cs:?} does not fix n; list sizes under \"ns\"")
                }
                None => ns.to_vec(),
            };
            for n in sizes {
                for &seed in seeds {
                    grid.push((fam.clone(), cs.clone(), n, seed));
                }
            }
        }
    }
    let rows = run_jobs(grid, jobs, |(fam, cs, n, seed)| {
        let start = std::time::Instant::now();
        let c = cs.build(*n)?;
        let f = random_instance(&fam.family, *n, *seed, &fam.params)?;
        let opts = MinOptions {
            eta,
            max_iterations: None,
        };
        let report = descend_constrained(&f, &c, &opts)?;
        let mu_value = report
            .trajectory
            .first()
            .map(|p| p.value)
            .unwrap_or(report.value);
        let kappa = curvature(&f).ok();
        let tag = format!("{} {} n={n} seed={seed}", fam.family, c.name());
        let mut violations = Vec::new();
        if report.value > mu_value + TOLERANCE {
            violations.push(format!("{tag}: final value above one-round proxy"));
        }

        let mut opt = None;
        let mut factor_mmin = None;
        let mut factor_mu = None;
        let mut bound_opt = None;
        if certify {
            let brute = brute_minimize(&f, &c)?;
            opt = Some(brute.optimum);
            if report.value < brute.optimum - TOLERANCE {
                violations.push(format!("{tag}: value below exhaustive optimum"));
            }
            if brute.optimum > TOLERANCE {
                factor_mmin = Some(report.value / brute.optimum);
                factor_mu = Some(mu_value / brute.optimum);
            }
            if let Some(kappa) = kappa {
                let sharp = curvature_ratio_bound(brute.optimizers[0].len(), kappa);
                bound_opt = Some(sharp);
                if report.value > sharp * brute.optimum + 1e-6 {
                    violations.push(format!("{tag}: curvature factor bound violated"));
                }
            }
        }
        Ok(ConstrainedRow {
            family: fam.family.clone(),
            constraint: c.name().to_string(),
            n: *n,
            seed: *seed,
            mmin_value: report.value,
            mu_value,
            opt,
            factor_mmin,
            factor_mu,
            curvature: kappa,
            bound_n: report.curvature_bound,
            bound_opt,
            iterations: report.iterations,
            oracle_calls: report.oracle_calls,
            warnings: report.warnings.len(),
            wall_ms: elapsed_ms(start, timings),
            violations,
        })
    })?;

    let header = "family,constraint,n,seed,mmin_value,mu_value,opt,factor_mmin,factor_mu,curvature,bound_n,bound_opt,iterations,oracle_calls,warnings,wall_ms";
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.family,
                r.constraint,
                r.n,
                r.seed,
                num(r.mmin_value),
                num(r.mu_value),
                opt_num(r.opt),
                opt_num(r.factor_mmin),
                opt_num(r.factor_mu),
                opt_num(r.curvature),
                opt_num(r.bound_n),
                opt_num(r.bound_opt),
                r.iterations,
                r.oracle_calls,
                r.warnings,
                r.wall_ms
            )
        })
        .collect();

    let mut summary = Vec::new();
    for fam in families {
        for cs in constraints {
            let c_name = cs.build(
                cs.intrinsic_n()?
                    .unwrap_or_else(|| ns.first().copied().unwrap_or(1)),
            );
            let c_name = match c_name {
                Ok(c) => c.name().to_string(),
                Err(_) => continue,
            };
            let cell: Vec<&ConstrainedRow> = rows
                .iter()
                .filter(|r| r.family == fam.family && r.constraint == c_name)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let mmin: Vec<f64> = cell.iter().filter_map(|r| r.factor_mmin).collect();
            let mu: Vec<f64> = cell.iter().filter_map(|r| r.factor_mu).collect();
            let fmt_stats = |v: &[f64]| {
                if v.is_empty() {
                    (String::new(), String::new())
                } else {
                    (
                        num(mean(v)),
                        num(v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
                    )
                }
            };
            let (mean_mmin, worst_mmin) = fmt_stats(&mmin);
            let (mean_mu, worst_mu) = fmt_stats(&mu);
            summary.push(format!(
                "{},{},{},{},{},{},{}",
                fam.family,
                c_name,
                cell.len(),
                mean_mmin,
                worst_mmin,
                mean_mu,
                worst_mu,
            ));
        }
    }

    let main = out_dir.join(spec.out_file());
    let summary_file = summary_path(&main);
    write_csv(&main, header, &lines)?;
    write_csv(
        &summary_file,
        "family,constraint,instances,mean_factor_mmin,worst_factor_mmin,mean_factor_mu,worst_factor_mu",
        &summary,
    )?;
    Ok(BenchOutcome {
        files: vec![main, summary_file],
        rows: rows.len(),
        violations: rows.into_iter().flat_map(|r| r.violations).collect(),
    })
}

enum ScheduleChoice {
    Lib(Schedule),
    UniformRandom,
}

fn parse_schedule(name: &str) -> Result<ScheduleChoice> {
    Ok(match name {
        "rp" => ScheduleChoice::Lib(Schedule::Rp),
        "ra" => ScheduleChoice::Lib(Schedule::Ra),
        "rls" => ScheduleChoice::Lib(Schedule::Rls),
        "dls" => ScheduleChoice::Lib(Schedule::Dls),
        "bg" => ScheduleChoice::Lib(Schedule::Bg),
        "rg" => ScheduleChoice::Lib(Schedule::Rg),
        "rs" => ScheduleChoice::UniformRandom,
        other => bail!("unknown schedule {other:?} (expected rp, ra, rls, dls, bg, rg, or rs)"),
    })
}

/// Baseline: best of `repetitions` uniformly random subsets.
fn run_uniform_random(f: &Oracle, opts: &MaxOptions) -> (f64, u64) {
    let calls_before = f.calls();
    let mut best = f64::NEG_INFINITY;
    for rep in 0..opts.repetitions {
        let mut rng = opts.rng_for(rep);
        let mut x = SubsetMask::empty(f.n());
        for j in 0..f.n() {
            if rng.random_bool(0.5) {
                x.insert(j);
            }
        }
        best = best.max(f.eval(&x));
    }
    (best, f.calls() - calls_before)
}

struct MaxRow {
    lambda: f64,
    seed: u64,
    schedule: String,
    value: f64,
    opt: f64,
    factor: Option<f64>,
    expected_factor: Option<f64>,
    iterations: usize,
    oracle_calls: u64,
    wall_ms: u128,
    violations: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn run_max_comparison(
    spec: &ExperimentSpec,
    n: usize,
    lambdas: &[f64],
    seeds: &[u64],
    schedules: &[String],
    repetitions: usize,
    eta: f64,
    out_dir: &Path,
    jobs: usize,
    timings: bool,
) -> Result<BenchOutcome> {
    if lambdas.is_empty() || seeds.is_empty() || schedules.is_empty() {
        bail!("max_comparison needs nonempty lambdas, seeds, and schedules");
    }
    for s in schedules {
        parse_schedule(s)?;
    }
    let mut grid = Vec::new();
    for &lambda in lambdas {
        for &seed in seeds {
            grid.push((lambda, seed));
        }
    }
    let nested: Vec<Vec<MaxRow>> = run_jobs(grid, jobs, |(lambda, seed)| {
        let params = FamilyParams {
            lambda: Some(*lambda),
            ..FamilyParams::default()
        };
        let f = random_instance("dr", n, *seed, &params)?;
        let opt = brute_maximize(&f, &Constraint::Unconstrained)?.optimum;
        let opts = MaxOptions {
            eta,
            seed: *seed,
            repetitions,
            max_iterations: None,
        };
        let mut out = Vec::new();
        for name in schedules {
            let start = std::time::Instant::now();
            let tag = format!("{name} lambda={lambda} seed={seed}");
            let mut violations = Vec::new();
            let (value, expected_factor, iterations, oracle_calls) = match parse_schedule(name)? {
                ScheduleChoice::Lib(schedule) => {
                    let r = maximize(&f, schedule, &opts)?;
                    // Only the deterministic schedules promise a factor on
                    // every single instance.
                    if let (true, Some(floor)) = (schedule.is_deterministic(), r.expected_factor) {
                        if r.value < floor * opt - TOLERANCE {
                            violations.push(format!("{tag}: below guaranteed factor {floor}"));
                        }
                    }
                    (r.value, r.expected_factor, r.iterations, r.oracle_calls)
                }
                ScheduleChoice::UniformRandom => {
                    let (value, calls) = run_uniform_random(&f, &opts);
                    (value, None, 1, calls)
                }
            };
            out.push(MaxRow {
                lambda: *lambda,
                seed: *seed,
                schedule: name.clone(),
                value,
                opt,
                factor: (opt > TOLERANCE).then(|| value / opt),
                expected_factor,
                iterations,
                oracle_calls,
                wall_ms: elapsed_ms(start, timings),
                violations,
            });
        }
        Ok(out)
    })?;
    let rows: Vec<MaxRow> = nested.into_iter().flatten().collect();

    let header =
        "lambda,seed,schedule,value,opt,factor,expected_factor,iterations,oracle_calls,wall_ms";
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                num(r.lambda),
                r.seed,
                r.schedule,
                num(r.value),
                num(r.opt),
                opt_num(r.factor),
                opt_num(r.expected_factor),
                r.iterations,
                r.oracle_calls,
                r.wall_ms
            )
        })
        .collect();

    let mut summary = Vec::new();
    for name in schedules {
        let cell: Vec<&MaxRow> = rows.iter().filter(|r| &r.schedule == name).collect();
        let factors: Vec<f64> = cell.iter().filter_map(|r| r.factor).collect();
        let (mean_factor, min_factor) = if factors.is_empty() {
            (String::new(), String::new())
        } else {
            (
                num(mean(&factors)),
                num(factors.iter().cloned().fold(f64::INFINITY, f64::min)),
            )
        };
        summary.push(format!(
            "{},{},{},{}",
            name,
            cell.len(),
            mean_factor,
            min_factor
        ));
    }

    let main = out_dir.join(spec.out_file());
    let summary_file = summary_path(&main);
    write_csv(&main, header, &lines)?;
    write_csv(
        &summary_file,
        "schedule,instances,mean_factor,min_factor",
        &summary,
    )?;
    Ok(BenchOutcome {
        files: vec![main, summary_file],
        rows: rows.len(),
        violations: rows.into_iter().flat_map(|r| r.violations).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_specs_parse_with_defaults() {
        let spec = ExperimentSpec::from_json(
            r#"{"kind":"lattice_reduction","name":"lat",
                "families":[{"family":"cm"}],"ns":[10],"seeds":[1,2]}"#,
        )
        .unwrap();
        assert_eq!(spec.name(), "lat");
        assert_eq!(spec.out_file(), "lat.csv");

        let spec = ExperimentSpec::from_json(
            r#"{"kind":"constrained_min","name":"cmin",
                "families":[{"family":"wc"}],
                "constraints":[{"kind":"cardinality_at_least","k":3}],
                "ns":[8],"seeds":[0],"out":"custom.csv"}"#,
        )
        .unwrap();
        assert_eq!(spec.out_file(), "custom.csv");
        match spec {
            ExperimentSpec::ConstrainedMin { eta, certify, .. } => {
                assert_eq!(eta, 1e-6);
                assert!(certify);
            }
            _ => unreachable!(),
        }

        let spec = ExperimentSpec::from_json(
            r#"{"kind":"max_comparison","name":"mx","n":10,
                "lambdas":[0.5],"seeds":[1],"schedules":["bg","rg"]}"#,
        )
        .unwrap();
        match spec {
            ExperimentSpec::MaxComparison { repetitions, .. } => assert_eq!(repetitions, 5),
            _ => unreachable!(),
        }

        assert!(ExperimentSpec::from_json(r#"{"kind":"nope","name":"x"}"#).is_err());
    }
}
