//! Exact or factor-bounded optimization of a modular function subject to a
//! combinatorial constraint.
//!
//! Each round of the surrogate optimizers reduces to one of these linear
//! problems. Most constraints admit exact polynomial solvers (greedy, sorted
//! selection, tree/path/matching algorithms, knapsack DP for integral
//! costs); the rest return the best known factor and say so via
//! [`LinOptResult::exact`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{
    extreme_perfect_matching, extreme_spanning_tree, is_perfect_matching, is_simple_path,
    is_spanning_tree, perfect_matchings, shortest_path, spanning_trees, st_paths, Graph, UnionFind,
};
use crate::modular::ModularVector;
use crate::set::SubsetMask;

/// Independence system with the matroid exchange property. Implementations
/// must answer membership queries only; the greedy solver does the rest.
pub trait Matroid: Send + Sync + fmt::Debug {
    fn n(&self) -> usize;
    fn is_independent(&self, x: &SubsetMask) -> bool;
}

/// Sets of size at most `rank`.
#[derive(Debug, Clone)]
pub struct UniformMatroid {
    n: usize,
    rank: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, rank: usize) -> Result<Self> {
        if rank > n {
            return Err(Error::invalid("rank exceeds the ground set"));
        }
        Ok(UniformMatroid { n, rank })
    }
}

impl Matroid for UniformMatroid {
    fn n(&self) -> usize {
        self.n
    }

    fn is_independent(&self, x: &SubsetMask) -> bool {
        x.len() <= self.rank
    }
}

/// At most `capacity[i]` elements from block `i`; uncovered elements are
/// unconstrained.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    n: usize,
    blocks: Vec<SubsetMask>,
    capacities: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(n: usize, blocks: Vec<SubsetMask>, capacities: Vec<usize>) -> Result<Self> {
        if blocks.len() != capacities.len() {
            return Err(Error::invalid("need one capacity per block"));
        }
        let mut covered = SubsetMask::empty(n);
        for b in &blocks {
            if b.n() != n {
                return Err(Error::invalid("block size must match the ground set"));
            }
            if !covered.is_disjoint_from(b) {
                return Err(Error::invalid("blocks must be disjoint"));
            }
            covered = covered.union(b);
        }
        Ok(PartitionMatroid {
            n,
            blocks,
            capacities,
        })
    }
}

impl Matroid for PartitionMatroid {
    fn n(&self) -> usize {
        self.n
    }

    fn is_independent(&self, x: &SubsetMask) -> bool {
        self.blocks
            .iter()
            .zip(&self.capacities)
            .all(|(b, &cap)| x.intersection(b).len() <= cap)
    }
}

/// Forests of a graph, over the edge ground set.
#[derive(Debug, Clone)]
pub struct GraphicMatroid {
    graph: Graph,
}

impl GraphicMatroid {
    pub fn new(graph: Graph) -> Result<Self> {
        graph.validate()?;
        Ok(GraphicMatroid { graph })
    }
}

impl Matroid for GraphicMatroid {
    fn n(&self) -> usize {
        self.graph.n_edges()
    }

    fn is_independent(&self, x: &SubsetMask) -> bool {
        let mut uf = UnionFind::new(self.graph.vertices);
        x.iter().all(|id| {
            let (a, b) = self.graph.edges[id];
            uf.union(a, b)
        })
    }
}

/// Feasible region for the per-round linear problem.
#[derive(Debug, Clone)]
pub enum Constraint {
    Unconstrained,
    CardinalityAtLeast(usize),
    CardinalityAtMost(usize),
    SpanningTree(Graph),
    Path(Graph),
    PerfectMatching(Graph),
    Matroid(Arc<dyn Matroid>),
    MatroidIntersection(Vec<Arc<dyn Matroid>>),
    Knapsack { costs: Vec<f64>, budget: f64 },
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::Unconstrained => "unconstrained",
            Constraint::CardinalityAtLeast(_) => "cardinality_at_least",
            Constraint::CardinalityAtMost(_) => "cardinality_at_most",
            Constraint::SpanningTree(_) => "spanning_tree",
            Constraint::Path(_) => "path",
            Constraint::PerfectMatching(_) => "perfect_matching",
            Constraint::Matroid(_) => "matroid",
            Constraint::MatroidIntersection(_) => "matroid_intersection",
            Constraint::Knapsack { .. } => "knapsack",
        }
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self {
            Constraint::Unconstrained => Ok(()),
            Constraint::CardinalityAtLeast(k) | Constraint::CardinalityAtMost(k) => {
                if *k > n {
                    Err(Error::invalid("cardinality bound exceeds the ground set"))
                } else {
                    Ok(())
                }
            }
            Constraint::SpanningTree(g) | Constraint::PerfectMatching(g) => {
                g.validate()?;
                expect_edges(g, n)
            }
            Constraint::Path(g) => {
                g.validate()?;
                g.endpoints()?;
                expect_edges(g, n)
            }
            Constraint::Matroid(m) => expect_matroid(m.as_ref(), n),
            Constraint::MatroidIntersection(ms) => {
                if ms.is_empty() {
                    return Err(Error::invalid("intersection needs at least one matroid"));
                }
                ms.iter().try_for_each(|m| expect_matroid(m.as_ref(), n))
            }
            Constraint::Knapsack { costs, budget } => {
                if costs.len() != n {
                    return Err(Error::invalid("need one cost per element"));
                }
                if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::invalid("costs must be finite and nonnegative"));
                }
                if !budget.is_finite() || *budget < 0.0 {
                    return Err(Error::invalid("budget must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// Whether feasibility survives removing elements.
    pub fn is_down_monotone(&self) -> bool {
        matches!(
            self,
            Constraint::Unconstrained
                | Constraint::CardinalityAtMost(_)
                | Constraint::Matroid(_)
                | Constraint::MatroidIntersection(_)
                | Constraint::Knapsack { .. }
        )
    }
}

fn expect_edges(g: &Graph, n: usize) -> Result<()> {
    if g.n_edges() != n {
        Err(Error::invalid(format!(
            "constraint graph has {} edges, ground set has {n}",
            g.n_edges()
        )))
    } else {
        Ok(())
    }
}

fn expect_matroid(m: &dyn Matroid, n: usize) -> Result<()> {
    if m.n() != n {
        Err(Error::invalid("matroid size must match the ground set"))
    } else {
        Ok(())
    }
}

/// Outcome of one linear subproblem. `value >= optimum / beta` for
/// maximization (symmetrically for minimization) and `exact` marks `beta`
/// equal to one.
#[derive(Debug, Clone)]
pub struct LinOptResult {
    pub set: SubsetMask,
    pub value: f64,
    pub exact: bool,
    pub beta: f64,
}

impl LinOptResult {
    fn exact(set: SubsetMask, w: &ModularVector) -> Self {
        let value = w.eval(&set);
        LinOptResult {
            set,
            value,
            exact: true,
            beta: 1.0,
        }
    }

    fn approximate(set: SubsetMask, w: &ModularVector, beta: f64) -> Self {
        let value = w.eval(&set);
        LinOptResult {
            set,
            value,
            exact: false,
            beta,
        }
    }
}

/// Ids sorted by weight then id; ascending or descending weight.
fn sorted_ids(w: &ModularVector, descending: bool) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..w.n()).collect();
    ids.sort_by(|&a, &b| {
        let ord = if descending {
            w.get(b).total_cmp(&w.get(a))
        } else {
            w.get(a).total_cmp(&w.get(b))
        };
        ord.then(a.cmp(&b))
    });
    ids
}

fn matroid_greedy(
    w: &ModularVector,
    accepts: &dyn Fn(&SubsetMask) -> bool,
    descending: bool,
    tol: f64,
) -> SubsetMask {
    let mut picked = SubsetMask::empty(w.n());
    for id in sorted_ids(w, descending) {
        let improves = if descending {
            w.get(id) > tol
        } else {
            w.get(id) < -tol
        };
        if !improves {
            break;
        }
        let cand = picked.with(id);
        if accepts(&cand) {
            picked = cand;
        }
    }
    picked
}

/// Minimize `w` over the constraint. Every supported case is exact.
pub fn minimize_modular(w: &ModularVector, c: &Constraint, tol: f64) -> Result<LinOptResult> {
    c.validate_for(w.n())?;
    let n = w.n();
    match c {
        Constraint::Unconstrained => Ok(LinOptResult::exact(w.negative_support(tol), w)),
        Constraint::CardinalityAtLeast(k) => {
            let mut set = w.negative_support(tol);
            for id in sorted_ids(w, false) {
                if set.len() >= *k {
                    break;
                }
                set.insert(id);
            }
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::CardinalityAtMost(k) => {
            let mut set = SubsetMask::empty(n);
            for id in sorted_ids(w, false).into_iter().take(*k) {
                if w.get(id) < -tol {
                    set.insert(id);
                }
            }
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::SpanningTree(g) => {
            Ok(LinOptResult::exact(extreme_spanning_tree(g, w, false)?, w))
        }
        Constraint::Path(g) => Ok(LinOptResult::exact(shortest_path(g, w, tol)?, w)),
        Constraint::PerfectMatching(g) => Ok(LinOptResult::exact(
            extreme_perfect_matching(g, w, false)?,
            w,
        )),
        Constraint::Matroid(m) => {
            let set = matroid_greedy(w, &|x| m.is_independent(x), false, tol);
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::MatroidIntersection(ms) => {
            let set = matroid_greedy(w, &|x| ms.iter().all(|m| m.is_independent(x)), false, tol);
            if ms.len() <= 1 {
                Ok(LinOptResult::exact(set, w))
            } else {
                Ok(LinOptResult::approximate(set, w, ms.len() as f64))
            }
        }
        Constraint::Knapsack { .. } => Err(Error::Unsupported(
            "minimization under a knapsack constraint".into(),
        )),
    }
}

/// Maximize `w` over the constraint. Exact except for longest path (refused),
/// matroid intersections with two or more matroids, and knapsacks whose
/// costs are fractional or whose DP table would be too large.
pub fn maximize_modular(w: &ModularVector, c: &Constraint, tol: f64) -> Result<LinOptResult> {
    c.validate_for(w.n())?;
    let n = w.n();
    match c {
        Constraint::Unconstrained => Ok(LinOptResult::exact(w.positive_support(tol), w)),
        Constraint::CardinalityAtLeast(k) => {
            let mut set = w.positive_support(tol);
            for id in sorted_ids(w, true) {
                if set.len() >= *k {
                    break;
                }
                set.insert(id);
            }
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::CardinalityAtMost(k) => {
            let mut set = SubsetMask::empty(n);
            for id in sorted_ids(w, true).into_iter().take(*k) {
                if w.get(id) > tol {
                    set.insert(id);
                }
            }
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::SpanningTree(g) => {
            Ok(LinOptResult::exact(extreme_spanning_tree(g, w, true)?, w))
        }
        Constraint::Path(g) => {
            let _ = g;
            Err(Error::Unsupported(
                "maximization over simple paths (longest path)".into(),
            ))
        }
        Constraint::PerfectMatching(g) => Ok(LinOptResult::exact(
            extreme_perfect_matching(g, w, true)?,
            w,
        )),
        Constraint::Matroid(m) => {
            let set = matroid_greedy(w, &|x| m.is_independent(x), true, tol);
            Ok(LinOptResult::exact(set, w))
        }
        Constraint::MatroidIntersection(ms) => {
            let set = matroid_greedy(w, &|x| ms.iter().all(|m| m.is_independent(x)), true, tol);
            if ms.len() <= 1 {
                Ok(LinOptResult::exact(set, w))
            } else {
                Ok(LinOptResult::approximate(set, w, ms.len() as f64))
            }
        }
        Constraint::Knapsack { costs, budget } => knapsack_maximize(w, costs, *budget, tol),
    }
}

const KNAPSACK_DP_CELLS: usize = 10_000_000;

fn knapsack_maximize(
    w: &ModularVector,
    costs: &[f64],
    budget: f64,
    tol: f64,
) -> Result<LinOptResult> {
    let n = w.n();
    let items: Vec<usize> = (0..n)
        .filter(|&j| w.get(j) > tol && costs[j] <= budget + tol)
        .collect();
    if items.is_empty() {
        return Ok(LinOptResult::exact(SubsetMask::empty(n), w));
    }
    let integral = costs.iter().all(|c| (c - c.round()).abs() <= 1e-9);
    if integral {
        let capacity = (budget + tol).floor().max(0.0) as usize;
        if (capacity + 1).saturating_mul(items.len() + 1) <= KNAPSACK_DP_CELLS {
            return Ok(knapsack_dp(w, costs, capacity, &items));
        }
    }
    Ok(knapsack_ratio_greedy(w, costs, budget, tol, &items))
}

fn knapsack_dp(w: &ModularVector, costs: &[f64], capacity: usize, items: &[usize]) -> LinOptResult {
    let mut dp = vec![0.0f64; capacity + 1];
    let mut take = vec![vec![false; capacity + 1]; items.len()];
    let mut free = SubsetMask::empty(w.n());
    for (i, &j) in items.iter().enumerate() {
        let cost = costs[j].round() as usize;
        if cost == 0 {
            free.insert(j);
            continue;
        }
        for cap in (cost..=capacity).rev() {
            let cand = dp[cap - cost] + w.get(j);
            if cand > dp[cap] {
                dp[cap] = cand;
                take[i][cap] = true;
            }
        }
    }
    let mut set = free;
    let mut cap = capacity;
    for (i, &j) in items.iter().enumerate().rev() {
        if costs[j].round() as usize == 0 {
            continue;
        }
        if take[i][cap] {
            set.insert(j);
            cap -= costs[j].round() as usize;
        }
    }
    LinOptResult::exact(set, w)
}

fn knapsack_ratio_greedy(
    w: &ModularVector,
    costs: &[f64],
    budget: f64,
    tol: f64,
    items: &[usize],
) -> LinOptResult {
    let mut order = items.to_vec();
    // Zero-cost items sort as infinite ratio; among those, heavier weight first.
    order.sort_by(|&a, &b| {
        let ra = if costs[a] > 0.0 {
            w.get(a) / costs[a]
        } else {
            f64::INFINITY
        };
        let rb = if costs[b] > 0.0 {
            w.get(b) / costs[b]
        } else {
            f64::INFINITY
        };
        rb.total_cmp(&ra)
            .then(w.get(b).total_cmp(&w.get(a)))
            .then(a.cmp(&b))
    });
    let mut set = SubsetMask::empty(w.n());
    let mut spent = 0.0;
    for &j in &order {
        if spent + costs[j] <= budget + tol {
            set.insert(j);
            spent += costs[j];
        }
    }
    let best_single = items
        .iter()
        .copied()
        .max_by(|&a, &b| w.get(a).total_cmp(&w.get(b)).then(b.cmp(&a)))
        .expect("items nonempty");
    if w.eval(&set) < w.get(best_single) {
        set = SubsetMask::empty(w.n()).with(best_single);
    }
    LinOptResult::approximate(set, w, 2.0)
}

/// Membership test for the constraint.
pub fn is_feasible(x: &SubsetMask, c: &Constraint, tol: f64) -> Result<bool> {
    c.validate_for(x.n())?;
    Ok(match c {
        Constraint::Unconstrained => true,
        Constraint::CardinalityAtLeast(k) => x.len() >= *k,
        Constraint::CardinalityAtMost(k) => x.len() <= *k,
        Constraint::SpanningTree(g) => is_spanning_tree(g, x),
        Constraint::Path(g) => is_simple_path(g, x),
        Constraint::PerfectMatching(g) => is_perfect_matching(g, x),
        Constraint::Matroid(m) => m.is_independent(x),
        Constraint::MatroidIntersection(ms) => ms.iter().all(|m| m.is_independent(x)),
        Constraint::Knapsack { costs, budget } => {
            x.iter().map(|j| costs[j]).sum::<f64>() <= budget + tol
        }
    })
}

const SCAN_LIMIT: usize = 20;

/// Every feasible set, for certification on small instances. Structural
/// constraints enumerate directly; the rest scan all subsets, which caps the
/// ground set at twenty elements.
pub fn enumerate_feasible(c: &Constraint, n: usize, cap: usize) -> Result<Vec<SubsetMask>> {
    c.validate_for(n)?;
    match c {
        Constraint::SpanningTree(g) => spanning_trees(g, cap),
        Constraint::Path(g) => st_paths(g, cap),
        Constraint::PerfectMatching(g) => perfect_matchings(g, cap),
        _ => {
            if n > SCAN_LIMIT {
                return Err(Error::BudgetExceeded(format!(
                    "subset scan supports at most {SCAN_LIMIT} elements, got {n}"
                )));
            }
            let mut out = Vec::new();
            for bits in 0u64..(1 << n) {
                let x = SubsetMask::from_bits(n, bits);
                if is_feasible(&x, c, crate::TOLERANCE)? {
                    if out.len() >= cap {
                        return Err(Error::BudgetExceeded(format!(
                            "more than {cap} feasible sets"
                        )));
                    }
                    out.push(x);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> ModularVector {
        ModularVector::from_fn(n, |_| rng.random_range(-4.0..=4.0))
    }

    fn brute_extreme(w: &ModularVector, c: &Constraint, maximize: bool) -> Option<f64> {
        let sets = enumerate_feasible(c, w.n(), 1_000_000).ok()?;
        sets.iter()
            .map(|x| w.eval(x))
            .reduce(|a, b| if maximize { a.max(b) } else { a.min(b) })
    }

    #[test]
    fn unconstrained_reference_minimizer() {
        let w = ModularVector::new(vec![
            -9.0, 4.0, 6.0, -1.0, 10.0, -4.0, -6.0, -1.0, 2.0, -8.0,
        ]);
        let res = minimize_modular(&w, &Constraint::Unconstrained, TOL).unwrap();
        assert_eq!(
            res.set,
            SubsetMask::from_one_based(10, &[1, 4, 6, 7, 8, 10]).unwrap()
        );
        assert!((res.value - -29.0).abs() < 1e-12);
        assert!(res.exact);
    }

    #[test]
    fn zero_weights_stay_out() {
        let w = ModularVector::new(vec![0.0, -1.0, 2.0]);
        let min = minimize_modular(&w, &Constraint::Unconstrained, TOL).unwrap();
        assert_eq!(min.set, SubsetMask::from_indices(3, [1]).unwrap());
        let max = maximize_modular(&w, &Constraint::Unconstrained, TOL).unwrap();
        assert_eq!(max.set, SubsetMask::from_indices(3, [2]).unwrap());
    }

    #[test]
    fn cardinality_bounds_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..20 {
            let w = random_weights(&mut rng, 8);
            for c in [
                Constraint::CardinalityAtLeast(3),
                Constraint::CardinalityAtMost(3),
            ] {
                for maximize in [false, true] {
                    let got = if maximize {
                        maximize_modular(&w, &c, TOL).unwrap()
                    } else {
                        minimize_modular(&w, &c, TOL).unwrap()
                    };
                    let want = brute_extreme(&w, &c, maximize).unwrap();
                    assert!(
                        (got.value - want).abs() < 1e-9,
                        "trial {trial} {} maximize={maximize}",
                        c.name()
                    );
                    assert!(is_feasible(&got.set, &c, TOL).unwrap());
                }
            }
        }
    }

    #[test]
    fn matroid_greedy_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let blocks = vec![
            SubsetMask::from_indices(8, [0, 1, 2]).unwrap(),
            SubsetMask::from_indices(8, [3, 4]).unwrap(),
            SubsetMask::from_indices(8, [5, 6, 7]).unwrap(),
        ];
        let partition =
            Arc::new(PartitionMatroid::new(8, blocks, vec![1, 1, 2]).unwrap()) as Arc<dyn Matroid>;
        let uniform = Arc::new(UniformMatroid::new(8, 3).unwrap()) as Arc<dyn Matroid>;
        for c in [Constraint::Matroid(partition), Constraint::Matroid(uniform)] {
            for trial in 0..20 {
                let w = random_weights(&mut rng, 8);
                for maximize in [false, true] {
                    let got = if maximize {
                        maximize_modular(&w, &c, TOL).unwrap()
                    } else {
                        minimize_modular(&w, &c, TOL).unwrap()
                    };
                    let want = brute_extreme(&w, &c, maximize).unwrap();
                    assert!(
                        (got.value - want).abs() < 1e-9,
                        "trial {trial} maximize={maximize}"
                    );
                }
            }
        }
    }

    #[test]
    fn graphic_matroid_forests() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let m = GraphicMatroid::new(g).unwrap();
        assert!(m.is_independent(&SubsetMask::from_indices(4, [0, 1, 3]).unwrap()));
        assert!(!m.is_independent(&SubsetMask::from_indices(4, [0, 1, 2]).unwrap()));
    }

    #[test]
    fn knapsack_dp_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 10;
            let w = random_weights(&mut rng, n);
            let costs: Vec<f64> = (0..n).map(|_| rng.random_range(1..=5) as f64).collect();
            let c = Constraint::Knapsack {
                costs,
                budget: 12.0,
            };
            let got = maximize_modular(&w, &c, TOL).unwrap();
            assert!(got.exact);
            let want = brute_extreme(&w, &c, true).unwrap();
            assert!((got.value - want).abs() < 1e-9, "trial {trial}");
            assert!(is_feasible(&got.set, &c, TOL).unwrap());
        }
    }

    #[test]
    fn knapsack_greedy_keeps_half_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = 10;
            let w = ModularVector::from_fn(n, |_| rng.random_range(0.1..=4.0));
            let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..=2.7)).collect();
            let c = Constraint::Knapsack { costs, budget: 5.0 };
            let got = maximize_modular(&w, &c, TOL).unwrap();
            assert!(!got.exact);
            assert!((got.beta - 2.0).abs() < 1e-12);
            let want = brute_extreme(&w, &c, true).unwrap();
            assert!(got.value >= want / 2.0 - 1e-9);
            assert!(is_feasible(&got.set, &c, TOL).unwrap());
        }
    }

    #[test]
    fn knapsack_minimization_is_refused() {
        let c = Constraint::Knapsack {
            costs: vec![1.0; 3],
            budget: 2.0,
        };
        let w = ModularVector::new(vec![-1.0, 2.0, 3.0]);
        assert!(matches!(
            minimize_modular(&w, &c, TOL),
            Err(Error::Unsupported(_))
        ));
        let mut g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        g.s = Some(0);
        g.t = Some(2);
        assert!(matches!(
            maximize_modular(&w, &Constraint::Path(g), TOL),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn intersection_of_two_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Arc::new(
            PartitionMatroid::new(
                6,
                vec![
                    SubsetMask::from_indices(6, [0, 1, 2]).unwrap(),
                    SubsetMask::from_indices(6, [3, 4, 5]).unwrap(),
                ],
                vec![1, 2],
            )
            .unwrap(),
        ) as Arc<dyn Matroid>;
        let b = Arc::new(
            PartitionMatroid::new(
                6,
                vec![
                    SubsetMask::from_indices(6, [0, 3]).unwrap(),
                    SubsetMask::from_indices(6, [1, 4]).unwrap(),
                    SubsetMask::from_indices(6, [2, 5]).unwrap(),
                ],
                vec![1, 1, 1],
            )
            .unwrap(),
        ) as Arc<dyn Matroid>;
        let c = Constraint::MatroidIntersection(vec![a, b]);
        for _ in 0..20 {
            let w = ModularVector::from_fn(6, |_| rng.random_range(0.0..=4.0));
            let got = maximize_modular(&w, &c, TOL).unwrap();
            assert!(!got.exact);
            assert!((got.beta - 2.0).abs() < 1e-12);
            let want = brute_extreme(&w, &c, true).unwrap();
            assert!(got.value >= want / 2.0 - 1e-9);
            assert!(is_feasible(&got.set, &c, TOL).unwrap());
        }
    }

    #[test]
    fn structural_dispatch_through_constraints() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = ModularVector::new(vec![1.0, 2.0, 3.0]);
        let tree = minimize_modular(&w, &Constraint::SpanningTree(g.clone()), TOL).unwrap();
        assert!((tree.value - 3.0).abs() < 1e-12);
        let mut gp = g.clone();
        gp.s = Some(0);
        gp.t = Some(2);
        let path = minimize_modular(&w, &Constraint::Path(gp), TOL).unwrap();
        assert!((path.value - 3.0).abs() < 1e-12);
        assert_eq!(
            enumerate_feasible(&Constraint::SpanningTree(g), 3, 10)
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn scan_guard_refuses_large_ground_sets() {
        assert!(matches!(
            enumerate_feasible(&Constraint::Unconstrained, 21, 1 << 21),
            Err(Error::BudgetExceeded(_))
        ));
    }
}
