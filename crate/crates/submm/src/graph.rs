//! Graphs whose edge set doubles as the optimization ground set, plus the
//! exact combinatorial solvers used when a modular function is minimized or
//! maximized over trees, paths, or matchings.
//!
//! Element `j` of the ground set is edge `j` in declaration order. Vertices
//! are 0-based in the JSON encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::ModularVector;
use crate::set::SubsetMask;

/// Undirected graph with optional bipartition and path endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartition: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Graph {
            vertices,
            edges,
            bipartition: None,
            s: None,
            t: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Graph = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed graph: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if u >= self.vertices || v >= self.vertices {
                return Err(Error::invalid(format!(
                    "edge {i} has an endpoint out of range"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("edge {i} is a self-loop")));
            }
        }
        if let Some(part) = &self.bipartition {
            let mut seen = vec![false; self.vertices];
            for &v in part {
                if v >= self.vertices || seen[v] {
                    return Err(Error::invalid("bipartition must list distinct vertices"));
                }
                seen[v] = true;
            }
        }
        for (name, v) in [("s", self.s), ("t", self.t)] {
            if let Some(v) = v {
                if v >= self.vertices {
                    return Err(Error::invalid(format!("endpoint {name} out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn endpoints(&self) -> Result<(usize, usize)> {
        match (self.s, self.t) {
            (Some(s), Some(t)) if s != t => Ok((s, t)),
            (Some(_), Some(_)) => Err(Error::invalid("path endpoints must differ")),
            _ => Err(Error::invalid(
                "graph does not declare path endpoints s and t",
            )),
        }
    }

    /// Left/right vertex lists; requires a bipartition covering everything
    /// with every edge crossing it.
    pub fn sides(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let part = self
            .bipartition
            .as_ref()
            .ok_or_else(|| Error::invalid("graph does not declare a bipartition"))?;
        let mut is_left = vec![false; self.vertices];
        for &v in part {
            is_left[v] = true;
        }
        for &(u, v) in &self.edges {
            if is_left[u] == is_left[v] {
                return Err(Error::invalid("an edge does not cross the bipartition"));
            }
        }
        let left: Vec<usize> = (0..self.vertices).filter(|&v| is_left[v]).collect();
        let right: Vec<usize> = (0..self.vertices).filter(|&v| !is_left[v]).collect();
        Ok((left, right))
    }

    /// Per-vertex incidence list of `(edge id, other endpoint)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((i, v));
            adj[v].push((i, u));
        }
        adj
    }
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the two classes; false when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

fn check_edge_weights(g: &Graph, w: &ModularVector) -> Result<()> {
    if w.n() != g.n_edges() {
        return Err(Error::invalid("need one weight per edge"));
    }
    Ok(())
}

/// Extreme-weight spanning tree by sorted greedy edge insertion. Ties break
/// toward lower edge id, so the answer is deterministic.
pub fn extreme_spanning_tree(g: &Graph, w: &ModularVector, maximize: bool) -> Result<SubsetMask> {
    g.validate()?;
    check_edge_weights(g, w)?;
    let mut ids: Vec<usize> = (0..g.n_edges()).collect();
    ids.sort_by(|&a, &b| {
        let (wa, wb) = (w.get(a), w.get(b));
        let ord = if maximize {
            wb.total_cmp(&wa)
        } else {
            wa.total_cmp(&wb)
        };
        ord.then(a.cmp(&b))
    });
    let mut uf = UnionFind::new(g.vertices);
    let mut tree = SubsetMask::empty(g.n_edges());
    for id in ids {
        let (u, v) = g.edges[id];
        if uf.union(u, v) {
            tree.insert(id);
        }
    }
    if uf.components() != 1 {
        return Err(Error::Infeasible("graph is not connected".into()));
    }
    Ok(tree)
}

/// Minimum-weight simple `s`-`t` path for nonnegative edge weights. Weights
/// within `tol` below zero are treated as zero.
pub fn shortest_path(g: &Graph, w: &ModularVector, tol: f64) -> Result<SubsetMask> {
    g.validate()?;
    check_edge_weights(g, w)?;
    let (s, t) = g.endpoints()?;
    let mut weight = vec![0.0; g.n_edges()];
    for (j, slot) in weight.iter_mut().enumerate() {
        let wj = w.get(j);
        if wj < -tol {
            return Err(Error::Domain(
                "path minimization requires nonnegative edge weights".into(),
            ));
        }
        *slot = wj.max(0.0);
    }

    let adj = g.adjacency();
    let mut dist = vec![f64::INFINITY; g.vertices];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.vertices];
    let mut done = vec![false; g.vertices];
    // Heap entries ordered by (distance, vertex id) for deterministic pops.
    let mut heap = std::collections::BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(std::cmp::Reverse((ordered(0.0), s)));
    while let Some(std::cmp::Reverse((_, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        let dv = dist[v];
        for &(edge, to) in &adj[v] {
            let cand = dv + weight[edge];
            if cand < dist[to] {
                dist[to] = cand;
                prev[to] = Some((edge, v));
                heap.push(std::cmp::Reverse((ordered(cand), to)));
            }
        }
    }
    if !dist[t].is_finite() {
        return Err(Error::Infeasible("no path between the endpoints".into()));
    }
    let mut path = SubsetMask::empty(g.n_edges());
    let mut v = t;
    while v != s {
        let (edge, from) = prev[v].expect("reachable vertex has a predecessor");
        path.insert(edge);
        v = from;
    }
    Ok(path)
}

/// Order-preserving bit encoding for nonnegative finite floats.
fn ordered(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    x.to_bits()
}

/// Extreme-weight perfect matching on a bipartite graph via the assignment
/// algorithm with potentials. Parallel edges collapse to the cheapest (or
/// costliest) representative per vertex pair before solving.
pub fn extreme_perfect_matching(
    g: &Graph,
    w: &ModularVector,
    maximize: bool,
) -> Result<SubsetMask> {
    g.validate()?;
    check_edge_weights(g, w)?;
    let (left, right) = g.sides()?;
    if left.len() != right.len() {
        return Err(Error::Infeasible(
            "bipartition sides differ in size, no perfect matching exists".into(),
        ));
    }
    let k = left.len();
    if k == 0 {
        return Ok(SubsetMask::empty(g.n_edges()));
    }
    let mut side_index = vec![usize::MAX; g.vertices];
    for (i, &v) in left.iter().enumerate() {
        side_index[v] = i;
    }
    for (i, &v) in right.iter().enumerate() {
        side_index[v] = i;
    }
    let is_left = {
        let mut flags = vec![false; g.vertices];
        for &v in &left {
            flags[v] = true;
        }
        flags
    };

    let mut cost = vec![vec![f64::INFINITY; k]; k];
    let mut pick = vec![vec![usize::MAX; k]; k];
    for (id, &(u, v)) in g.edges.iter().enumerate() {
        let (lu, rv) = if is_left[u] { (u, v) } else { (v, u) };
        let (i, j) = (side_index[lu], side_index[rv]);
        let c = if maximize { -w.get(id) } else { w.get(id) };
        if c < cost[i][j] {
            cost[i][j] = c;
            pick[i][j] = id;
        }
    }

    let assignment = hungarian(&cost)
        .ok_or_else(|| Error::Infeasible("graph admits no perfect matching".into()))?;
    let mut mask = SubsetMask::empty(g.n_edges());
    for (j, &i) in assignment.iter().enumerate() {
        mask.insert(pick[i][j]);
    }
    Ok(mask)
}

/// Minimum-cost assignment; `result[column] = row`, or None when some row
/// cannot be matched along finite costs.
fn hungarian(cost: &[Vec<f64>]) -> Option<Vec<usize>> {
    let k = cost.len();
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    // p[j] = row currently matched to column j; index k is the virtual start
    // column of each augmentation.
    let mut p = vec![usize::MAX; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 0..k {
        p[k] = row;
        let mut j0 = k;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = k;
            for j in 0..k {
                if !used[j] {
                    let cur = cost[i0][j] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == usize::MAX {
                break;
            }
        }
        while j0 != k {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    p.truncate(k);
    Some(p)
}

/// True when the edge set is a spanning tree of the whole graph.
pub fn is_spanning_tree(g: &Graph, x: &SubsetMask) -> bool {
    if x.n() != g.n_edges() || x.len() + 1 != g.vertices {
        return false;
    }
    let mut uf = UnionFind::new(g.vertices);
    for id in x.iter() {
        let (a, b) = g.edges[id];
        if !uf.union(a, b) {
            return false;
        }
    }
    uf.components() == 1
}

/// True when the edge set is a simple path between the declared endpoints.
pub fn is_simple_path(g: &Graph, x: &SubsetMask) -> bool {
    let Ok((s, t)) = g.endpoints() else {
        return false;
    };
    if x.n() != g.n_edges() || x.is_empty() {
        return false;
    }
    let mut degree = vec![0usize; g.vertices];
    let mut uf = UnionFind::new(g.vertices);
    let mut touched = 0usize;
    for id in x.iter() {
        let (a, b) = g.edges[id];
        for v in [a, b] {
            if degree[v] == 0 {
                touched += 1;
            }
            degree[v] += 1;
        }
        if !uf.union(a, b) {
            return false;
        }
    }
    if degree[s] != 1 || degree[t] != 1 || touched != x.len() + 1 {
        return false;
    }
    if degree.iter().any(|&d| d > 2) {
        return false;
    }
    uf.find(s) == uf.find(t)
}

/// True when every vertex is covered by exactly one chosen edge.
pub fn is_perfect_matching(g: &Graph, x: &SubsetMask) -> bool {
    if x.n() != g.n_edges() || x.len() * 2 != g.vertices {
        return false;
    }
    let mut covered = vec![false; g.vertices];
    for id in x.iter() {
        let (a, b) = g.edges[id];
        if covered[a] || covered[b] {
            return false;
        }
        covered[a] = true;
        covered[b] = true;
    }
    true
}

fn push_capped(out: &mut Vec<SubsetMask>, mask: SubsetMask, cap: usize) -> Result<()> {
    if out.len() >= cap {
        return Err(Error::BudgetExceeded(format!(
            "more than {cap} feasible sets"
        )));
    }
    out.push(mask);
    Ok(())
}

/// All spanning trees, failing once more than `cap` are found.
pub fn spanning_trees(g: &Graph, cap: usize) -> Result<Vec<SubsetMask>> {
    g.validate()?;
    let m = g.n_edges();
    if g.vertices == 1 {
        return Ok(vec![SubsetMask::empty(m)]);
    }
    let mut out = Vec::new();
    let mut chosen = SubsetMask::empty(m);
    fn rec(
        g: &Graph,
        idx: usize,
        need: usize,
        uf: &UnionFind,
        chosen: &mut SubsetMask,
        out: &mut Vec<SubsetMask>,
        cap: usize,
    ) -> Result<()> {
        if need == 0 {
            return push_capped(out, chosen.clone(), cap);
        }
        if g.n_edges() - idx < need {
            return Ok(());
        }
        let (a, b) = g.edges[idx];
        let mut with = uf.clone();
        if with.union(a, b) {
            chosen.insert(idx);
            rec(g, idx + 1, need - 1, &with, chosen, out, cap)?;
            chosen.remove(idx);
        }
        rec(g, idx + 1, need, uf, chosen, out, cap)
    }
    rec(
        g,
        0,
        g.vertices - 1,
        &UnionFind::new(g.vertices),
        &mut chosen,
        &mut out,
        cap,
    )?;
    Ok(out)
}

/// All simple paths between the declared endpoints, failing past `cap`.
pub fn st_paths(g: &Graph, cap: usize) -> Result<Vec<SubsetMask>> {
    g.validate()?;
    let (s, t) = g.endpoints()?;
    let adj = g.adjacency();
    let mut out = Vec::new();
    let mut visited = vec![false; g.vertices];
    let mut chosen = SubsetMask::empty(g.n_edges());
    fn dfs(
        v: usize,
        t: usize,
        adj: &[Vec<(usize, usize)>],
        visited: &mut [bool],
        chosen: &mut SubsetMask,
        out: &mut Vec<SubsetMask>,
        cap: usize,
    ) -> Result<()> {
        if v == t {
            return push_capped(out, chosen.clone(), cap);
        }
        visited[v] = true;
        for &(edge, to) in &adj[v] {
            if !visited[to] {
                chosen.insert(edge);
                dfs(to, t, adj, visited, chosen, out, cap)?;
                chosen.remove(edge);
            }
        }
        visited[v] = false;
        Ok(())
    }
    dfs(s, t, &adj, &mut visited, &mut chosen, &mut out, cap)?;
    Ok(out)
}

/// All perfect matchings (any graph), failing past `cap`.
pub fn perfect_matchings(g: &Graph, cap: usize) -> Result<Vec<SubsetMask>> {
    g.validate()?;
    if !g.vertices.is_multiple_of(2) {
        return Ok(Vec::new());
    }
    let adj = g.adjacency();
    let mut covered = vec![false; g.vertices];
    let mut chosen = SubsetMask::empty(g.n_edges());
    let mut out = Vec::new();
    fn rec(
        adj: &[Vec<(usize, usize)>],
        covered: &mut [bool],
        chosen: &mut SubsetMask,
        out: &mut Vec<SubsetMask>,
        cap: usize,
    ) -> Result<()> {
        let Some(u) = covered.iter().position(|&c| !c) else {
            return push_capped(out, chosen.clone(), cap);
        };
        covered[u] = true;
        for &(edge, to) in &adj[u] {
            if !covered[to] {
                covered[to] = true;
                chosen.insert(edge);
                rec(adj, covered, chosen, out, cap)?;
                chosen.remove(edge);
                covered[to] = false;
            }
        }
        covered[u] = false;
        Ok(())
    }
    rec(&adj, &mut covered, &mut chosen, &mut out, cap)?;
    Ok(out)
}
