//! Concrete submodular function families and seeded random instances.
//!
//! Every constructor validates its inputs; evaluation happens through
//! [`Oracle`], which normalizes the empty set to zero. Random instances are
//! generated from a [`ProblemSpec`], a small JSON description carrying the
//! family name, ground set size, seed, and family parameters, so any instance
//! can be reproduced from its spec alone.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::ModularVector;
use crate::oracle::{Oracle, SetFunction};
use crate::set::SubsetMask;

/// Concave transform applied on top of modular weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concavity {
    Sqrt,
    Log1p,
}

impl Concavity {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Concavity::Sqrt => t.sqrt(),
            Concavity::Log1p => t.ln_1p(),
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "sqrt" => Ok(Concavity::Sqrt),
            "log1p" => Ok(Concavity::Log1p),
            other => Err(Error::invalid(format!(
                "unknown concave transform {other:?}, expected \"sqrt\" or \"log1p\""
            ))),
        }
    }
}

fn check_nonnegative(w: &ModularVector, what: &str) -> Result<()> {
    if let Some(j) = w.values().iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(format!(
            "{what} must be finite and nonnegative, entry {} is {}",
            j + 1,
            w.get(j)
        )));
    }
    Ok(())
}

fn check_finite(w: &ModularVector, what: &str) -> Result<()> {
    if let Some(j) = w.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} must be finite, entry {} is {}",
            j + 1,
            w.get(j)
        )));
    }
    Ok(())
}

/// `g(w1(X)) + w2(X)`, or `g(w1(X)) + w2(V - X)` in complement mode, with
/// `g` concave and `w1 >= 0`. Submodular; monotone when `w2 >= 0` in plain
/// mode.
#[derive(Debug, Clone)]
pub struct ConcaveOverModular {
    weights: ModularVector,
    linear: ModularVector,
    curve: Concavity,
    complement: bool,
}

impl ConcaveOverModular {
    pub fn new(
        weights: ModularVector,
        linear: ModularVector,
        curve: Concavity,
        complement: bool,
    ) -> Result<Self> {
        if weights.n() != linear.n() {
            return Err(Error::invalid("weight vectors must have equal length"));
        }
        check_nonnegative(&weights, "concave-side weights")?;
        check_finite(&linear, "linear-side weights")?;
        Ok(ConcaveOverModular {
            weights,
            linear,
            curve,
            complement,
        })
    }
}

impl SetFunction for ConcaveOverModular {
    fn n(&self) -> usize {
        self.weights.n()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let linear = if self.complement {
            self.linear.total() - self.linear.eval(x)
        } else {
            self.linear.eval(x)
        };
        self.curve.apply(self.weights.eval(x)) + linear
    }
}

/// Sum of concave transforms over cluster restrictions:
/// `sum_i g(w(X intersect C_i))`. Monotone submodular for `w >= 0`.
#[derive(Debug, Clone)]
pub struct ClusteredConcave {
    clusters: Vec<SubsetMask>,
    weights: ModularVector,
    curve: Concavity,
}

impl ClusteredConcave {
    pub fn new(
        clusters: Vec<SubsetMask>,
        weights: ModularVector,
        curve: Concavity,
    ) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::invalid("need at least one cluster"));
        }
        check_nonnegative(&weights, "cluster weights")?;
        for c in &clusters {
            if c.n() != weights.n() {
                return Err(Error::invalid(
                    "cluster mask size must match the ground set",
                ));
            }
        }
        Ok(ClusteredConcave {
            clusters,
            weights,
            curve,
        })
    }
}

impl SetFunction for ClusteredConcave {
    fn n(&self) -> usize {
        self.weights.n()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        self.clusters
            .iter()
            .map(|c| self.curve.apply(self.weights.eval(&x.intersection(c))))
            .sum()
    }
}

/// `sqrt(w1(N(X))) + w2(V - X)` where `N(X)` is the neighborhood of `X` on
/// the right side of a bipartite adjacency. Submodular; the coverage term is
/// monotone, the complement term decreasing.
#[derive(Debug, Clone)]
pub struct BipartiteNeighborhood {
    neighbors: Vec<SubsetMask>,
    cover_weights: ModularVector,
    linear: ModularVector,
}

impl BipartiteNeighborhood {
    pub fn new(
        neighbors: Vec<SubsetMask>,
        cover_weights: ModularVector,
        linear: ModularVector,
    ) -> Result<Self> {
        if neighbors.len() != linear.n() {
            return Err(Error::invalid(
                "need one neighbor mask per ground set element",
            ));
        }
        check_nonnegative(&cover_weights, "coverage weights")?;
        check_finite(&linear, "linear weights")?;
        for m in &neighbors {
            if m.n() != cover_weights.n() {
                return Err(Error::invalid(
                    "neighbor masks must range over the coverage side",
                ));
            }
        }
        Ok(BipartiteNeighborhood {
            neighbors,
            cover_weights,
            linear,
        })
    }
}

impl SetFunction for BipartiteNeighborhood {
    fn n(&self) -> usize {
        self.neighbors.len()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let mut covered = SubsetMask::empty(self.cover_weights.n());
        for j in x.iter() {
            covered = covered.union(&self.neighbors[j]);
        }
        self.cover_weights.eval(&covered).sqrt() + self.linear.total() - self.linear.eval(x)
    }
}

/// `min(|X|, |X - R| + beta, alpha)`: grows like cardinality until either the
/// plateau `alpha` or the penalty track through `R` takes over. Monotone with
/// curvature one; its minimizer structure exercises tie handling heavily.
#[derive(Debug, Clone)]
pub struct WorstCase {
    r: SubsetMask,
    alpha: f64,
    beta: f64,
}

impl WorstCase {
    pub fn new(r: SubsetMask, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("plateau parameters must be positive"));
        }
        Ok(WorstCase { r, alpha, beta })
    }

    /// Scale-tied parameters: plateau `n^(1/2 + eps)`, penalty offset
    /// `n^(2 eps)`, and a random distinguished set of size `round(alpha)`.
    pub fn canonical(n: usize, epsilon: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 0.5)"));
        }
        let alpha = (n as f64).powf(0.5 + epsilon);
        let beta = (n as f64).powf(2.0 * epsilon);
        let size = (alpha.round() as usize).clamp(1, n);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(rng);
        let r = SubsetMask::from_indices(n, ids.into_iter().take(size))?;
        WorstCase::new(r, alpha, beta)
    }

    pub fn distinguished(&self) -> &SubsetMask {
        &self.r
    }
}

impl SetFunction for WorstCase {
    fn n(&self) -> usize {
        self.r.n()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let card = x.len() as f64;
        let outside = x.difference(&self.r).len() as f64;
        card.min(outside + self.beta).min(self.alpha)
    }
}

/// Indicator of touching a hidden set `R` plus the weight of the still
/// missing part of `R`. After normalization the unique minimizers are the
/// supersets of `R`, which makes planted-optimum instances easy to build.
#[derive(Debug, Clone)]
pub struct BestSet {
    r: SubsetMask,
    weights: ModularVector,
}

impl BestSet {
    pub fn new(r: SubsetMask, weights: ModularVector) -> Result<Self> {
        if r.n() != weights.n() {
            return Err(Error::invalid("hidden set must match the ground set"));
        }
        if r.is_empty() {
            return Err(Error::invalid("hidden set must be nonempty"));
        }
        check_nonnegative(&weights, "hidden-set weights")?;
        Ok(BestSet { r, weights })
    }

    pub fn hidden(&self) -> &SubsetMask {
        &self.r
    }
}

impl SetFunction for BestSet {
    fn n(&self) -> usize {
        self.weights.n()
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let touched = !x.is_disjoint_from(&self.r);
        let missing = self.weights.eval(&self.r.difference(x));
        (touched as u8) as f64 + missing
    }
}

/// Relevance-minus-redundancy selection objective:
/// `sum_{i in V, j in X} s_ij - lambda * sum_{i, j in X} s_ij`.
/// Submodular for nonnegative similarities; nonnegative for `lambda <= 1`;
/// non-monotone, which is what makes its maximization interesting.
#[derive(Debug, Clone)]
pub struct DiversityRelevance {
    similarity: Vec<f64>,
    column_sums: Vec<f64>,
    lambda: f64,
    n: usize,
}

impl DiversityRelevance {
    pub fn new(n: usize, similarity: Vec<f64>, lambda: f64) -> Result<Self> {
        if similarity.len() != n * n {
            return Err(Error::invalid("similarity must be a flat n x n matrix"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid("lambda must lie in [0, 1]"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = similarity[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(
                        "similarities must be finite and nonnegative",
                    ));
                }
                if (v - similarity[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid("similarity matrix must be symmetric"));
                }
            }
        }
        let column_sums = (0..n)
            .map(|j| (0..n).map(|i| similarity[i * n + j]).sum())
            .collect();
        Ok(DiversityRelevance {
            similarity,
            column_sums,
            lambda,
            n,
        })
    }
}

impl SetFunction for DiversityRelevance {
    fn n(&self) -> usize {
        self.n
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let relevance: f64 = x.iter().map(|j| self.column_sums[j]).sum();
        let mut redundancy = 0.0;
        for i in x.iter() {
            for j in x.iter() {
                redundancy += self.similarity[i * self.n + j];
            }
        }
        relevance - self.lambda * redundancy
    }
}

/// `|X| * |V - X| - sum_{j in X} (5 j - 2 n)` with 1-based `j`: the standard
/// hard benchmark for minimization, integer-valued and loaded with ties.
#[derive(Debug, Clone, Copy)]
pub struct IwataTest {
    n: usize,
}

impl IwataTest {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("ground set must be nonempty"));
        }
        Ok(IwataTest { n })
    }
}

impl SetFunction for IwataTest {
    fn n(&self) -> usize {
        self.n
    }

    fn eval_raw(&self, x: &SubsetMask) -> f64 {
        let k = x.len() as f64;
        let n = self.n as f64;
        let linear: f64 = x.iter().map(|j| 5.0 * (j + 1) as f64 - 2.0 * n).sum();
        k * (n - k) - linear
    }
}

/// Family parameters accepted inside a [`ProblemSpec`]. All fields are
/// optional; families ignore what they do not use.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyParams {
    /// Scale on the linear / redundancy term (cm, bn, dr).
    pub lambda: Option<f64>,
    /// Concave transform, "sqrt" or "log1p" (cm, ccm).
    pub curve: Option<String>,
    /// Charge the linear term on the complement instead of the set (cm).
    pub complement: Option<bool>,
    pub w1_low: Option<f64>,
    pub w1_high: Option<f64>,
    pub w2_low: Option<f64>,
    pub w2_high: Option<f64>,
    /// Number of clusters (ccm).
    pub clusters: Option<usize>,
    /// Size of the coverage side (bn).
    pub right_size: Option<usize>,
    /// Expected neighbors per element (bn).
    pub expected_degree: Option<f64>,
    /// Plateau exponent offset (wc).
    pub epsilon: Option<f64>,
    /// Size of the hidden set (bs).
    pub r_size: Option<usize>,
    /// Explicit inner weights, overriding the sampled ones (modular, cm).
    pub w1: Option<Vec<f64>>,
    /// Explicit linear weights, overriding the sampled ones (cm).
    pub w2: Option<Vec<f64>>,
}

/// Reproducible description of a random instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: FamilyParams,
}

impl ProblemSpec {
    pub fn new(family: &str, n: usize, seed: u64) -> Self {
        ProblemSpec {
            family: family.to_string(),
            n,
            seed,
            params: FamilyParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed problem spec: {e}")))
    }

    pub fn build(&self) -> Result<Oracle> {
        random_instance(&self.family, self.n, self.seed, &self.params)
    }
}

fn uniform_vector(rng: &mut impl Rng, n: usize, low: f64, high: f64) -> Result<ModularVector> {
    if !(low.is_finite() && high.is_finite() && low <= high) {
        return Err(Error::invalid(format!("bad weight range [{low}, {high}]")));
    }
    Ok(ModularVector::from_fn(n, |_| rng.random_range(low..=high)))
}

/// Explicit weights when given, a uniform draw otherwise. The draw happens
/// either way so that explicit overrides do not shift later samples.
fn explicit_or_uniform(
    explicit: &Option<Vec<f64>>,
    rng: &mut impl Rng,
    n: usize,
    low: f64,
    high: f64,
) -> Result<ModularVector> {
    let sampled = uniform_vector(rng, n, low, high)?;
    match explicit {
        Some(w) if w.len() == n => Ok(ModularVector::new(w.clone())),
        Some(w) => Err(Error::invalid(format!(
            "explicit weight vector has length {}, expected {n}",
            w.len()
        ))),
        None => Ok(sampled),
    }
}

/// Draw a named family instance. The same `(family, n, seed, params)` always
/// produces the same function.
pub fn random_instance(family: &str, n: usize, seed: u64, params: &FamilyParams) -> Result<Oracle> {
    if n == 0 {
        return Err(Error::invalid("ground set must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1_low = params.w1_low.unwrap_or(0.0);
    let w1_high = params.w1_high.unwrap_or(1.0);
    let w2_low = params.w2_low.unwrap_or(0.0);
    let w2_high = params.w2_high.unwrap_or(1.0);
    let lambda = params.lambda.unwrap_or(1.0);
    let curve = Concavity::parse(params.curve.as_deref().unwrap_or("sqrt"))?;

    match family {
        "modular" => {
            let w = explicit_or_uniform(&params.w1, &mut rng, n, w1_low, w1_high)?;
            Ok(Oracle::new(w))
        }
        "cm" => {
            let w1 = explicit_or_uniform(&params.w1, &mut rng, n, w1_low, w1_high)?;
            let mut w2 = explicit_or_uniform(&params.w2, &mut rng, n, w2_low, w2_high)?;
            for j in 0..n {
                w2.set(j, lambda * w2.get(j));
            }
            let f = ConcaveOverModular::new(w1, w2, curve, params.complement.unwrap_or(false))?;
            Ok(Oracle::new(f))
        }
        "ccm" => {
            let k = params.clusters.unwrap_or_else(|| n.div_ceil(5)).max(1);
            let mut clusters = vec![SubsetMask::empty(n); k];
            for j in 0..n {
                clusters[rng.random_range(0..k)].insert(j);
            }
            let w = uniform_vector(&mut rng, n, w1_low, w1_high)?;
            Ok(Oracle::new(ClusteredConcave::new(clusters, w, curve)?))
        }
        "bn" => {
            let m = params.right_size.unwrap_or(n);
            if m == 0 {
                return Err(Error::invalid("coverage side must be nonempty"));
            }
            let degree = params.expected_degree.unwrap_or(3.0);
            let p = (degree / m as f64).clamp(0.0, 1.0);
            let neighbors = (0..n)
                .map(|_| {
                    let mut mask = SubsetMask::empty(m);
                    for u in 0..m {
                        if rng.random_bool(p) {
                            mask.insert(u);
                        }
                    }
                    mask
                })
                .collect();
            let w1 = uniform_vector(&mut rng, m, w1_low, w1_high)?;
            let mut w2 = uniform_vector(&mut rng, n, w2_low, w2_high)?;
            for j in 0..n {
                w2.set(j, lambda * w2.get(j));
            }
            Ok(Oracle::new(BipartiteNeighborhood::new(neighbors, w1, w2)?))
        }
        "wc" => {
            let eps = params.epsilon.unwrap_or(0.1);
            Ok(Oracle::new(WorstCase::canonical(n, eps, &mut rng)?))
        }
        "bs" => {
            let size = params.r_size.unwrap_or_else(|| n.div_ceil(4)).clamp(1, n);
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(&mut rng);
            let r = SubsetMask::from_indices(n, ids.into_iter().take(size))?;
            let w = uniform_vector(&mut rng, n, w1_low, w1_high)?;
            Ok(Oracle::new(BestSet::new(r, w)?))
        }
        "dr" => {
            let mut s = vec![0.0; n * n];
            for i in 0..n {
                s[i * n + i] = 1.0;
                for j in (i + 1)..n {
                    let a: f64 = rng.random_range(0.0..=1.0);
                    let b: f64 = rng.random_range(0.0..=1.0);
                    let v = 0.5 * (a + b);
                    s[i * n + j] = v;
                    s[j * n + i] = v;
                }
            }
            Ok(Oracle::new(DiversityRelevance::new(n, s, lambda)?))
        }
        "iwata" => Ok(Oracle::new(IwataTest::new(n)?)),
        other => Err(Error::invalid(format!(
            "unknown family {other:?}, expected one of modular, cm, ccm, bn, wc, bs, dr, iwata"
        ))),
    }
}
