//! On-disk constraint descriptions: a JSON schema mirroring the library's
//! `Constraint`, plus a small catalog of named graphs for experiment specs.
//!
//! Element and vertex conventions follow the rest of the CLI: ground-set
//! element ids are 1-based in JSON, graph vertex ids are 0-based (matching
//! the graph file format).

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use std::sync::Arc;

use submm::graph::Graph;
use submm::linopt::{Constraint, GraphicMatroid, Matroid, PartitionMatroid, UniformMatroid};
use submm::SubsetMask;

/// A graph argument: either inline JSON or the name of a catalog graph
/// such as `grid_3x3` or `bipartite_sparse_4x4`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GraphRef {
    Named(String),
    Inline(Graph),
}

impl GraphRef {
    pub fn resolve(&self) -> Result<Graph> {
        match self {
            GraphRef::Named(name) => catalog_graph(name),
            GraphRef::Inline(g) => Ok(g.clone()),
        }
    }
}

fn parse_dims(token: &str) -> Option<Vec<usize>> {
    let dims: Option<Vec<usize>> = token.split('x').map(|p| p.parse().ok()).collect();
    dims.filter(|d| !d.is_empty() && d.iter().all(|&v| v > 0))
}

/// Named graph families. Every catalog graph gets s = first vertex and
/// t = last vertex so it can serve path constraints without extra fields.
pub fn catalog_graph(name: &str) -> Result<Graph> {
    let (prefix, dims_token) = name
        .rsplit_once('_')
        .ok_or_else(|| anyhow!("unknown graph name {name:?}"))?;
    let dims =
        parse_dims(dims_token).ok_or_else(|| anyhow!("bad dimensions in graph name {name:?}"))?;
    let mut g = match (prefix, dims.as_slice()) {
        ("grid", [r, c]) => grid(*r, *c, false)?,
        ("grid_diag", [r, c]) => grid(*r, *c, true)?,
        ("cube", [x, y, z]) => cube(*x, *y, *z)?,
        ("clusters", [k, m]) => clusters(*k, *m)?,
        ("bipartite", [a, b]) => bipartite(*a, *b, false)?,
        ("bipartite_sparse", [a, b]) => bipartite(*a, *b, true)?,
        _ => bail!(
            "unknown graph name {name:?}; expected grid_RxC, grid_diag_RxC, \
             cube_XxYxZ, clusters_KxM, bipartite_AxB, or bipartite_sparse_AxB"
        ),
    };
    g.s = Some(0);
    g.t = Some(g.vertices - 1);
    Ok(g)
}

fn grid(r: usize, c: usize, diagonals: bool) -> Result<Graph> {
    let idx = |i: usize, j: usize| i * c + j;
    let mut edges = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if j + 1 < c {
                edges.push((idx(i, j), idx(i, j + 1)));
            }
            if i + 1 < r {
                edges.push((idx(i, j), idx(i + 1, j)));
            }
            if diagonals && i + 1 < r && j + 1 < c {
                edges.push((idx(i, j), idx(i + 1, j + 1)));
            }
        }
    }
    Ok(Graph::new(r * c, edges)?)
}

fn cube(x: usize, y: usize, z: usize) -> Result<Graph> {
    let idx = |i: usize, j: usize, k: usize| (i * y + j) * z + k;
    let mut edges = Vec::new();
    for i in 0..x {
        for j in 0..y {
            for k in 0..z {
                if i + 1 < x {
                    edges.push((idx(i, j, k), idx(i + 1, j, k)));
                }
                if j + 1 < y {
                    edges.push((idx(i, j, k), idx(i, j + 1, k)));
                }
                if k + 1 < z {
                    edges.push((idx(i, j, k), idx(i, j, k + 1)));
                }
            }
        }
    }
    Ok(Graph::new(x * y * z, edges)?)
}

/// k cliques of m vertices each, chained by single bridge edges.
fn clusters(k: usize, m: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for cl in 0..k {
        let base = cl * m;
        for i in 0..m {
            for j in (i + 1)..m {
                edges.push((base + i, base + j));
            }
        }
        if cl + 1 < k {
            edges.push((base + m - 1, base + m));
        }
    }
    Ok(Graph::new(k * m, edges)?)
}

fn bipartite(a: usize, b: usize, sparse: bool) -> Result<Graph> {
    let mut edges = Vec::new();
    if sparse {
        for i in 0..a {
            edges.push((i, a + i % b));
            if b > 1 {
                edges.push((i, a + (i + 1) % b));
            }
        }
    } else {
        for i in 0..a {
            for j in 0..b {
                edges.push((i, a + j));
            }
        }
    }
    let mut g = Graph::new(a + b, edges)?;
    g.bipartition = Some((0..a).collect());
    Ok(g)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatroidSpec {
    Uniform {
        rank: usize,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
    },
    Graphic {
        graph: GraphRef,
    },
}

impl MatroidSpec {
    pub fn build(&self, n: usize) -> Result<Arc<dyn Matroid>> {
        Ok(match self {
            MatroidSpec::Uniform { rank } => Arc::new(UniformMatroid::new(n, *rank)?),
            MatroidSpec::Partition { blocks, capacities } => {
                let masks = blocks
                    .iter()
                    .map(|ids| SubsetMask::from_one_based(n, ids))
                    .collect::<submm::Result<Vec<_>>>()?;
                Arc::new(PartitionMatroid::new(n, masks, capacities.clone())?)
            }
            MatroidSpec::Graphic { graph } => Arc::new(GraphicMatroid::new(graph.resolve()?)?),
        })
    }
}

/// JSON description of a feasible region.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Unconstrained,
    CardinalityAtLeast { k: usize },
    CardinalityAtMost { k: usize },
    SpanningTree { graph: GraphRef },
    Path { graph: GraphRef },
    PerfectMatching { graph: GraphRef },
    Matroid { matroid: MatroidSpec },
    MatroidIntersection { matroids: Vec<MatroidSpec> },
    Knapsack { costs: Vec<f64>, budget: f64 },
}

impl ConstraintSpec {
    /// Ground-set size implied by the constraint itself, when it has one.
    /// Graph constraints act on edges; knapsacks on the cost vector.
    pub fn intrinsic_n(&self) -> Result<Option<usize>> {
        Ok(match self {
            ConstraintSpec::SpanningTree { graph }
            | ConstraintSpec::Path { graph }
            | ConstraintSpec::PerfectMatching { graph } => Some(graph.resolve()?.edges.len()),
            ConstraintSpec::Matroid {
                matroid: MatroidSpec::Graphic { graph },
            } => Some(graph.resolve()?.edges.len()),
            ConstraintSpec::Knapsack { costs, .. } => Some(costs.len()),
            _ => None,
        })
    }

    pub fn build(&self, n: usize) -> Result<Constraint> {
        let c = match self {
            ConstraintSpec::Unconstrained => Constraint::Unconstrained,
            ConstraintSpec::CardinalityAtLeast { k } => Constraint::CardinalityAtLeast(*k),
            ConstraintSpec::CardinalityAtMost { k } => Constraint::CardinalityAtMost(*k),
            ConstraintSpec::SpanningTree { graph } => Constraint::SpanningTree(graph.resolve()?),
            ConstraintSpec::Path { graph } => Constraint::Path(graph.resolve()?),
            ConstraintSpec::PerfectMatching { graph } => {
                Constraint::PerfectMatching(graph.resolve()?)
            }
            ConstraintSpec::Matroid { matroid } => Constraint::Matroid(matroid.build(n)?),
            ConstraintSpec::MatroidIntersection { matroids } => Constraint::MatroidIntersection(
                matroids.iter().map(|m| m.build(n)).collect::<Result<_>>()?,
            ),
            ConstraintSpec::Knapsack { costs, budget } => Constraint::Knapsack {
                costs: costs.clone(),
                budget: *budget,
            },
        };
        c.validate_for(n)?;
        Ok(c)
    }
}

/// Accept a constraint as inline JSON (leading `{`) or a file path.
pub fn load_constraint_spec(arg: &str) -> Result<ConstraintSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading constraint file {arg}"))?
    };
    serde_json::from_str(&text).context("parsing constraint JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(name: &str) -> (usize, usize) {
        let g = catalog_graph(name).unwrap();
        assert_eq!(g.s, Some(0));
        assert_eq!(g.t, Some(g.vertices - 1));
        (g.vertices, g.edges.len())
    }

    #[test]
    fn catalog_graphs_have_expected_shapes() {
        assert_eq!(shape("grid_3x3"), (9, 12));
        assert_eq!(shape("grid_diag_2x2"), (4, 5));
        assert_eq!(shape("cube_2x2x2"), (8, 12));
        assert_eq!(shape("clusters_2x3"), (6, 7));
        assert_eq!(shape("bipartite_2x3"), (5, 6));
        assert_eq!(shape("bipartite_sparse_4x4"), (8, 8));
        let g = catalog_graph("bipartite_2x3").unwrap();
        assert_eq!(g.bipartition, Some(vec![0, 1]));
    }

    #[test]
    fn catalog_rejects_malformed_names() {
        assert!(catalog_graph("ring_5").is_err());
        assert!(catalog_graph("grid_0x3").is_err());
        assert!(catalog_graph("grid").is_err());
        assert!(catalog_graph("cube_2x2").is_err());
    }

    #[test]
    fn constraint_specs_parse_and_build() {
        let c = load_constraint_spec(r#"{"kind":"cardinality_at_most","k":3}"#).unwrap();
        assert!(c.intrinsic_n().unwrap().is_none());
        assert!(c.build(8).is_ok());

        let c = load_constraint_spec(r#"{"kind":"spanning_tree","graph":"grid_2x3"}"#).unwrap();
        assert_eq!(c.intrinsic_n().unwrap(), Some(7));
        assert!(c.build(7).is_ok());
        assert!(c.build(8).is_err());

        let c =
            load_constraint_spec(r#"{"kind":"knapsack","costs":[1,2,3,4],"budget":5}"#).unwrap();
        assert_eq!(c.intrinsic_n().unwrap(), Some(4));
        assert!(c.build(4).is_ok());

        let c = load_constraint_spec(
            r#"{"kind":"matroid","matroid":{"kind":"partition",
                "blocks":[[1,2,3],[4,5,6]],"capacities":[1,2]}}"#,
        )
        .unwrap();
        assert!(c.build(6).is_ok());
    }

    #[test]
    fn constraint_spec_reads_from_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"kind":"cardinality_at_least","k":2}"#).unwrap();
        let c = load_constraint_spec(path.to_str().unwrap()).unwrap();
        assert!(matches!(c, ConstraintSpec::CardinalityAtLeast { k: 2 }));
    }
}
