//! `submm`: drive the library from the command line. Instances are JSON
//! problem specs, constraints are JSON descriptions (inline or files), and
//! every subcommand prints a JSON report to stdout. `bench` runs experiment
//! grids to CSV. Exit status is zero only when every checked guarantee held.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use submm::brute::{brute_maximize, brute_minimize, check_bound, CheckItem};
use submm::functions::ProblemSpec;
use submm::linopt::Constraint;
use submm::mmax::{maximize, maximize_constrained_greedy, maximize_knapsack, MaxOptions, Schedule};
use submm::mmin::{
    alternate, curvature_ratio_bound, descend, descend_constrained, prune_lattice, MinOptions,
    MinimizeReport,
};
use submm::oracle::curvature;
use submm::semigradient::{supergradient, Permutation, Subgradient, SupergradientKind};
use submm::{Oracle, SubsetMask, TrajectoryPoint, TOLERANCE};

use submm_cli::constraint_spec::{load_constraint_spec, ConstraintSpec};
use submm_cli::experiments;

#[derive(Parser)]
#[command(
    name = "submm",
    version,
    about = "Submodular optimization via modular bounds: descent, ascent schedules, \
             interval pruning, exhaustive certification, and experiment grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize an instance by iterated bound descent
    Minimize(MinimizeArgs),
    /// Maximize an instance with one of the ascent schedules
    Maximize(MaximizeArgs),
    /// Report the pruned candidate interval [A+, B+] and its width
    Prune(InstanceArgs),
    /// Exhaustively certify interval and bound claims (small n only)
    Verify(InstanceArgs),
    /// Run an experiment spec and write per-instance and summary CSVs
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    /// Add-only descent (members enter on negative gain)
    Grow,
    /// Remove-only descent from the full set
    Shrink,
    /// Two-sided projection onto the candidate interval
    Bar,
    /// Alternate grow and shrink until a joint fixpoint
    Alternate,
    /// Constrained descent with the curvature factor bound
    Constrained,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Rp,
    Ra,
    Rls,
    Dls,
    Bg,
    Rg,
    /// Feasible greedy chain over a down-monotone constraint
    Greedy,
    /// Budget-constrained greedy with seed enumeration
    Knapsack,
}

#[derive(Parser)]
struct InstanceArgs {
    /// Instance spec: inline JSON or a path to a JSON file
    #[arg(long)]
    spec: String,
    /// Also write the JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct MinimizeArgs {
    /// Instance spec: inline JSON or a path to a JSON file
    #[arg(long)]
    spec: String,
    /// Descent variant
    #[arg(long, value_enum, default_value_t = VariantArg::Grow)]
    variant: VariantArg,
    /// Constraint JSON (inline or file); constrained variant only
    #[arg(long)]
    constraint: Option<String>,
    /// Relative improvement threshold; defaults to 0 (exact fixpoint)
    /// unconstrained and 1e-6 constrained
    #[arg(long)]
    eta: Option<f64>,
    /// Start set: "empty", "full", or comma-separated 1-based ids
    #[arg(long)]
    x0: Option<String>,
    /// Compare against exhaustive search (small n) and check factor bounds
    #[arg(long)]
    certify: bool,
    /// Also write the JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct MaximizeArgs {
    /// Instance spec: inline JSON or a path to a JSON file
    #[arg(long)]
    spec: String,
    /// Ascent schedule
    #[arg(long, value_enum)]
    schedule: ScheduleArg,
    /// Seed for the schedule's random choices
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions, keeping the best run; defaults to 5 for randomized
    /// schedules and 1 for deterministic ones
    #[arg(long)]
    reps: Option<usize>,
    /// Relative improvement threshold for local-search certification
    #[arg(long, default_value_t = 1e-6)]
    eta: f64,
    /// Constraint JSON; required by greedy and knapsack
    #[arg(long)]
    constraint: Option<String>,
    /// Seed-enumeration size for knapsack (0 to 3)
    #[arg(long, default_value_t = 3)]
    seed_size: usize,
    /// Compare against exhaustive search (small n) and check the factor
    #[arg(long)]
    brute_force_certify: bool,
    /// Also write the JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct BenchArgs {
    /// Experiment spec: inline JSON or a path to a JSON file
    #[arg(long)]
    spec: String,
    /// Directory for the CSV outputs
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for the instance grid
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall-clock times (makes outputs non-reproducible)
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Minimize(args) => cmd_minimize(args),
        Command::Maximize(args) => cmd_maximize(args),
        Command::Prune(args) => cmd_prune(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Inline JSON (leading `{`) or file contents.
fn read_arg_or_file(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

fn load_instance(arg: &str) -> Result<(ProblemSpec, Oracle)> {
    let text = read_arg_or_file(arg)?;
    let spec = ProblemSpec::from_json(&text)?;
    let f = spec.build()?;
    Ok((spec, f))
}

fn ids(mask: &SubsetMask) -> serde_json::Value {
    json!(mask.one_based())
}

fn trajectory_json(points: &[TrajectoryPoint]) -> serde_json::Value {
    json!(points
        .iter()
        .map(|p| json!({"iteration": p.iteration, "set": ids(&p.set), "value": p.value}))
        .collect::<Vec<_>>())
}

fn check_json(item: &CheckItem) -> serde_json::Value {
    json!({"name": item.name, "pass": item.pass, "witness": item.witness})
}

/// Print the report and mirror it to `--out` when given.
fn emit(report: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(report)?);
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn parse_x0(arg: &str, n: usize) -> Result<SubsetMask> {
    match arg {
        "empty" => Ok(SubsetMask::empty(n)),
        "full" => Ok(SubsetMask::full(n)),
        csv => {
            let ids: Vec<usize> = csv
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .context("x0 must list 1-based ids")
                })
                .collect::<Result<_>>()?;
            Ok(SubsetMask::from_one_based(n, &ids)?)
        }
    }
}

fn cmd_minimize(args: MinimizeArgs) -> Result<bool> {
    let (spec, f) = load_instance(&args.spec)?;
    let n = f.n();

    let constraint = match (&args.variant, &args.constraint) {
        (VariantArg::Constrained, Some(text)) => Some(load_constraint_spec(text)?.build(n)?),
        (VariantArg::Constrained, None) => bail!("the constrained variant needs --constraint"),
        (_, Some(_)) => bail!("--constraint only applies to --variant constrained"),
        (_, None) => None,
    };

    let report: MinimizeReport = match args.variant {
        VariantArg::Grow | VariantArg::Shrink | VariantArg::Bar | VariantArg::Alternate => {
            let default_x0 = if matches!(args.variant, VariantArg::Shrink) {
                "full"
            } else {
                "empty"
            };
            let x0 = parse_x0(args.x0.as_deref().unwrap_or(default_x0), n)?;
            let opts = MinOptions {
                eta: args.eta.unwrap_or(0.0),
                max_iterations: None,
            };
            match args.variant {
                VariantArg::Grow => descend(&f, &x0, SupergradientKind::Grow, &opts)?,
                VariantArg::Shrink => descend(&f, &x0, SupergradientKind::Shrink, &opts)?,
                VariantArg::Bar => descend(&f, &x0, SupergradientKind::Bar, &opts)?,
                _ => alternate(&f, &x0, &opts)?,
            }
        }
        VariantArg::Constrained => {
            if args.x0.is_some() {
                bail!("the constrained variant always starts from the modular proxy; drop --x0");
            }
            let opts = MinOptions {
                eta: args.eta.unwrap_or(1e-6),
                max_iterations: None,
            };
            descend_constrained(&f, constraint.as_ref().unwrap(), &opts)?
        }
    };

    let mut ok = true;
    let mut certificate = serde_json::Value::Null;
    if args.certify {
        let c = constraint.clone().unwrap_or(Constraint::Unconstrained);
        let brute = brute_minimize(&f, &c)?;
        let gap = report.value - brute.optimum;
        if gap < -TOLERANCE {
            ok = false;
        }
        // The sharp factor bound needs the optimizer's size and the
        // function's curvature; both are only available here.
        let bound_holds = if constraint.is_some() {
            match curvature(&f) {
                Ok(kappa) => {
                    let sharp = curvature_ratio_bound(brute.optimizers[0].len(), kappa);
                    let holds = report.value <= sharp * brute.optimum + 1e-6;
                    if !holds {
                        ok = false;
                    }
                    json!({"sharp_bound": sharp, "holds": holds})
                }
                Err(_) => serde_json::Value::Null,
            }
        } else {
            serde_json::Value::Null
        };
        certificate = json!({
            "optimum": brute.optimum,
            "optimum_example": ids(&brute.optimizers[0]),
            "gap": gap,
            "optimal": gap.abs() <= TOLERANCE,
            "factor_bound": bound_holds,
        });
    }

    let report_json = json!({
        "command": "minimize",
        "family": spec.family,
        "n": n,
        "instance_seed": spec.seed,
        "variant": report.variant.name(),
        "constraint": constraint.as_ref().map(|c| c.name()).unwrap_or("unconstrained"),
        "solution": ids(&report.solution),
        "value": report.value,
        "iterations": report.iterations,
        "oracle_calls": report.oracle_calls,
        "curvature_bound": report.curvature_bound,
        "trajectory": trajectory_json(&report.trajectory),
        "warnings": report.warnings,
        "certificate": certificate,
    });
    emit(&report_json, args.out.as_deref())?;
    Ok(ok)
}

fn schedule_label(s: ScheduleArg) -> &'static str {
    match s {
        ScheduleArg::Rp => "rp",
        ScheduleArg::Ra => "ra",
        ScheduleArg::Rls => "rls",
        ScheduleArg::Dls => "dls",
        ScheduleArg::Bg => "bg",
        ScheduleArg::Rg => "rg",
        ScheduleArg::Greedy => "greedy",
        ScheduleArg::Knapsack => "knapsack",
    }
}

fn cmd_maximize(args: MaximizeArgs) -> Result<bool> {
    let (spec, f) = load_instance(&args.spec)?;
    let n = f.n();

    let lib_schedule = match args.schedule {
        ScheduleArg::Rp => Some(Schedule::Rp),
        ScheduleArg::Ra => Some(Schedule::Ra),
        ScheduleArg::Rls => Some(Schedule::Rls),
        ScheduleArg::Dls => Some(Schedule::Dls),
        ScheduleArg::Bg => Some(Schedule::Bg),
        ScheduleArg::Rg => Some(Schedule::Rg),
        ScheduleArg::Greedy | ScheduleArg::Knapsack => None,
    };
    let deterministic = lib_schedule.map(|s| s.is_deterministic()).unwrap_or(true);
    let opts = MaxOptions {
        eta: args.eta,
        seed: args.seed,
        repetitions: args.reps.unwrap_or(if deterministic { 1 } else { 5 }),
        max_iterations: None,
    };

    let constraint_spec = args
        .constraint
        .as_deref()
        .map(load_constraint_spec)
        .transpose()?;

    let (report, constraint) = match args.schedule {
        ScheduleArg::Greedy => {
            let Some(cs) = &constraint_spec else {
                bail!("greedy needs --constraint");
            };
            let c = cs.build(n)?;
            (maximize_constrained_greedy(&f, &c, &opts)?, Some(c))
        }
        ScheduleArg::Knapsack => {
            let Some(ConstraintSpec::Knapsack { costs, budget }) = &constraint_spec else {
                bail!("knapsack needs --constraint of kind \"knapsack\"");
            };
            let report = maximize_knapsack(&f, costs, *budget, args.seed_size, &opts)?;
            let c = Constraint::Knapsack {
                costs: costs.clone(),
                budget: *budget,
            };
            (report, Some(c))
        }
        _ => {
            if constraint_spec.is_some() {
                bail!(
                    "schedule {} is unconstrained; use greedy or knapsack",
                    schedule_label(args.schedule)
                );
            }
            (maximize(&f, lib_schedule.unwrap(), &opts)?, None)
        }
    };

    let mut ok = true;
    let mut certificate = serde_json::Value::Null;
    if args.brute_force_certify {
        let c = constraint.clone().unwrap_or(Constraint::Unconstrained);
        let brute = brute_maximize(&f, &c)?;
        let factor = (brute.optimum > TOLERANCE).then(|| report.value / brute.optimum);
        // Expectation-only schedules get their factor reported, not
        // asserted; a single run may legitimately land below it.
        let guarantee = if deterministic {
            report.expected_factor.map(|floor| {
                let holds = report.value >= floor * brute.optimum - TOLERANCE;
                if !holds {
                    ok = false;
                }
                holds
            })
        } else {
            None
        };
        certificate = json!({
            "optimum": brute.optimum,
            "optimum_example": ids(&brute.optimizers[0]),
            "factor": factor,
            "guarantee_holds": guarantee,
        });
    }

    let report_json = json!({
        "command": "maximize",
        "family": spec.family,
        "n": n,
        "instance_seed": spec.seed,
        "schedule": schedule_label(args.schedule),
        "constraint": constraint.as_ref().map(|c| c.name()).unwrap_or("unconstrained"),
        "solution": ids(&report.solution),
        "value": report.value,
        "expected_factor": report.expected_factor,
        "local_max": report.local_max,
        "iterations": report.iterations,
        "repetitions": report.repetitions,
        "oracle_calls": report.oracle_calls,
        "trajectory": trajectory_json(&report.trajectory),
        "warnings": report.warnings,
        "certificate": certificate,
    });
    emit(&report_json, args.out.as_deref())?;
    Ok(ok)
}

fn cmd_prune(args: InstanceArgs) -> Result<bool> {
    let (_, f) = load_instance(&args.spec)?;
    let res = prune_lattice(&f)?;
    let report = json!({
        "A": ids(res.initial.lower()),
        "B": ids(res.initial.upper()),
        "A_plus": ids(res.contracted.lower()),
        "B_plus": ids(res.contracted.upper()),
        "reduction_pct": res.contracted.reduction_percent(),
        "oracle_calls": res.oracle_calls,
    });
    emit(&report, args.out.as_deref())?;
    Ok(true)
}

fn cmd_verify(args: InstanceArgs) -> Result<bool> {
    let (spec, f) = load_instance(&args.spec)?;
    let cert = submm::brute::verify_lattice_claims(&f)?;

    // Spot-check bound validity from three anchors: the extremes and the
    // contracted lower endpoint.
    let ground = f.ground();
    let anchors = [
        ground.empty(),
        ground.full(),
        cert.contracted.lower().clone(),
    ];
    let mut bound_checks = Vec::new();
    for anchor in &anchors {
        let chain = Subgradient::from_permutation(&f, Permutation::anchored_identity(anchor))?;
        let mut items = vec![("chain", check_bound(&f, &chain.bound())?)];
        for kind in SupergradientKind::ALL {
            items.push((
                kind.name(),
                check_bound(&f, &supergradient(&f, anchor, kind)?)?,
            ));
        }
        for (construction, item) in items {
            bound_checks.push(json!({
                "anchor": ids(anchor),
                "construction": construction,
                "name": item.name,
                "pass": item.pass,
                "witness": item.witness,
            }));
        }
    }
    let bounds_pass = bound_checks
        .iter()
        .all(|c| c["pass"].as_bool().unwrap_or(false));
    let all_pass = cert.all_pass() && bounds_pass;

    let report = json!({
        "command": "verify",
        "family": spec.family,
        "n": f.n(),
        "instance_seed": spec.seed,
        "all_pass": all_pass,
        "checks": cert.checks.iter().map(check_json).collect::<Vec<_>>(),
        "bound_checks": bound_checks,
        "interval": {
            "initial": {"lower": ids(cert.initial.lower()), "upper": ids(cert.initial.upper())},
            "contracted": {"lower": ids(cert.contracted.lower()), "upper": ids(cert.contracted.upper())},
        },
        "minimizers": cert.minimizers.iter().map(ids).collect::<Vec<_>>(),
        "local_minima": cert.local_minima.iter().map(ids).collect::<Vec<_>>(),
    });
    emit(&report, args.out.as_deref())?;
    Ok(all_pass)
}

fn cmd_bench(args: BenchArgs) -> Result<bool> {
    let text = read_arg_or_file(&args.spec)?;
    let spec = experiments::ExperimentSpec::from_json(&text)?;
    let outcome = experiments::run(&spec, &args.out, args.jobs, args.timings)?;
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    println!("rows: {}", outcome.rows);
    println!("violations: {}", outcome.violations.len());
    for v in &outcome.violations {
        eprintln!("violation: {v}");
    }
    Ok(outcome.violations.is_empty())
}
