//! End-to-end tour: build a seeded instance, prune the candidate lattice,
//! then run one descent and one ascent schedule on it.

use submm::functions::ProblemSpec;
use submm::mmax::{maximize, MaxOptions, Schedule};
use submm::mmin::{descend, prune_lattice, MinOptions};
use submm::semigradient::SupergradientKind;
use submm::SubsetMask;

fn main() -> submm::Result<()> {
    let spec = r#"{
        "family": "cm", "n": 12, "seed": 13,
        "params": {"w1_low": 1, "w1_high": 16, "w2_low": -6, "w2_high": 6}
    }"#;
    let f = ProblemSpec::from_json(spec)?.build()?;

    let pruned = prune_lattice(&f)?;
    println!(
        "interval [A+, B+]: {:?} .. {:?} ({:.1}% pruned, {} oracle calls)",
        pruned.contracted.lower().one_based(),
        pruned.contracted.upper().one_based(),
        pruned.contracted.reduction_percent(),
        pruned.oracle_calls
    );

    let start = SubsetMask::empty(f.n());
    let min = descend(&f, &start, SupergradientKind::Grow, &MinOptions::default())?;
    println!(
        "descent: f{:?} = {:.6}",
        min.solution.one_based(),
        min.value
    );

    // ascent wants a nonnegative objective, so switch families
    let g = ProblemSpec::from_json(r#"{"family":"dr","n":12,"seed":7}"#)?.build()?;
    let max = maximize(&g, Schedule::Bg, &MaxOptions::default())?;
    println!(
        "ascent:  g{:?} = {:.6}",
        max.solution.one_based(),
        max.value
    );
    Ok(())
}
