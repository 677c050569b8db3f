//! Graph representation and structural operations.
//!
//! Graphs are simple (no loops, no parallel edges) with dense integer
//! vertex ids `0..p` and an optional bipartition `(X, Y)`. The
//! operations here are the structural moves the coloring algorithms are
//! built from: vertex splitting and coinciding, edge joining, leaf
//! addition and peeling, and the one-edge exchange move on trees.
//!
//! Structural ops that can scramble ids (split, coincide) renormalize
//! them by BFS from the lowest id so equal inputs give byte-equal
//! outputs; ops that only append (leaf addition, edge join) keep every
//! existing id fixed, which the leaf-adding colorings rely on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A simple `(p,q)`-graph with dense vertex ids and an optional
/// bipartition. Edges are stored as sorted pairs `(u,v)` with `u < v`,
/// and the edge list itself is kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    p: usize,
    edges: Vec<(usize, usize)>,
    bipartition: Option<(Vec<usize>, Vec<usize>)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    p: usize,
    q: usize,
    edges: Vec<(usize, usize)>,
    #[serde(rename = "X", default)]
    x: Vec<usize>,
    #[serde(rename = "Y", default)]
    y: Vec<usize>,
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let (x, y) = match &self.bipartition {
            Some((x, y)) => (x.clone(), y.clone()),
            None => (Vec::new(), Vec::new()),
        };
        GraphJson {
            p: self.p,
            q: self.edges.len(),
            edges: self.edges.clone(),
            x,
            y,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GraphJson::deserialize(de)?;
        let mut g = Graph::new(raw.p, &raw.edges).map_err(D::Error::custom)?;
        if raw.q != g.q() {
            return Err(D::Error::custom(format!(
                "edge count q={} does not match the {} listed edges",
                raw.q,
                g.q()
            )));
        }
        if !raw.x.is_empty() || !raw.y.is_empty() {
            g = g
                .with_bipartition(&raw.x, &raw.y)
                .map_err(D::Error::custom)?;
        }
        Ok(g)
    }
}

impl Graph {
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Precondition(format!("loop edge at vertex {u}")));
            }
            if u >= p || v >= p {
                return Err(Error::Precondition(format!(
                    "edge ({u},{v}) outside vertex range 0..{p}"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("parallel edges are not allowed".into()));
        }
        Ok(Graph {
            p,
            edges: normalized,
            bipartition: None,
        })
    }

    /// Attaches a declared bipartition; every edge must cross it.
    pub fn with_bipartition(mut self, x: &[usize], y: &[usize]) -> Result<Self> {
        let xs: BTreeSet<usize> = x.iter().copied().collect();
        let ys: BTreeSet<usize> = y.iter().copied().collect();
        if xs.len() + ys.len() != self.p || !xs.is_disjoint(&ys) {
            return Err(Error::Precondition(
                "bipartition must split the vertex set into two disjoint parts".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|&v| v >= self.p) {
            return Err(Error::Precondition("bipartition names unknown vertices".into()));
        }
        for &(u, v) in &self.edges {
            if xs.contains(&u) == xs.contains(&v) {
                return Err(Error::Precondition(format!(
                    "edge ({u},{v}) does not cross the declared bipartition"
                )));
            }
        }
        self.bipartition = Some((
            xs.into_iter().collect(),
            ys.into_iter().collect(),
        ));
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn bipartition(&self) -> Option<(&[usize], &[usize])> {
        self.bipartition
            .as_ref()
            .map(|(x, y)| (x.as_slice(), y.as_slice()))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out.sort();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.p];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.p == 0 {
            return true;
        }
        self.component_of(0).len() == self.p
    }

    fn component_of(&self, start: usize) -> BTreeSet<usize> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.p];
        let mut out = Vec::new();
        for v in 0..self.p {
            if !seen[v] {
                let comp = self.component_of(v);
                for &w in &comp {
                    seen[w] = true;
                }
                out.push(comp.into_iter().collect());
            }
        }
        out
    }

    pub fn is_tree(&self) -> bool {
        self.p >= 1 && self.q() == self.p - 1 && self.is_connected()
    }

    /// Largest eccentricity over all vertices; errors on disconnected
    /// input because distances would be infinite.
    pub fn diameter(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::Precondition("diameter needs a connected graph".into()));
        }
        let adj = self.adjacency();
        let mut best = 0;
        for start in 0..self.p {
            let dist = bfs_distances(&adj, start);
            best = best.max(dist.into_iter().flatten().max().unwrap_or(0));
        }
        Ok(best)
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.p).filter(|&v| self.degree(v) == 1).collect()
    }

    /// Computes a 2-coloring by BFS, or errors when an odd cycle exists.
    /// The side containing vertex 0 of each component becomes X.
    pub fn auto_bipartition(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let adj = self.adjacency();
        let mut side = vec![None; self.p];
        for start in 0..self.p {
            if side[start].is_some() {
                continue;
            }
            side[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    match side[w] {
                        None => {
                            side[w] = Some(!side[v].unwrap());
                            queue.push_back(w);
                        }
                        Some(s) if s == side[v].unwrap() => {
                            return Err(Error::Precondition(
                                "graph contains an odd cycle, no bipartition exists".into(),
                            ));
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (v, s) in side.into_iter().enumerate() {
            if s.unwrap() {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        Ok((x, y))
    }

    /// Which declared side vertex `v` is on: false for X, true for Y.
    pub fn side_of(&self, v: usize) -> Option<bool> {
        self.bipartition
            .as_ref()
            .map(|(x, _)| !x.binary_search(&v).is_ok())
    }

    /// Relabels vertices through `map` (old id -> new id), carrying the
    /// bipartition along. `map` must be a bijection on `0..p`.
    fn relabeled(&self, map: &[usize]) -> Graph {
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (map[u], map[v]))
            .collect();
        let mut g = Graph::new(self.p, &edges).expect("relabeling preserves simplicity");
        if let Some((x, y)) = &self.bipartition {
            let nx: Vec<usize> = x.iter().map(|&v| map[v]).collect();
            let ny: Vec<usize> = y.iter().map(|&v| map[v]).collect();
            g = g
                .with_bipartition(&nx, &ny)
                .expect("relabeling preserves the bipartition");
        }
        g
    }
}

fn bfs_distances(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(dist[v].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Renormalizes ids by BFS from the lowest id of every component.
/// Returns the relabeled graph and the map new id -> old id.
pub fn bfs_renormalize(g: &Graph) -> (Graph, Vec<usize>) {
    let adj = g.adjacency();
    let mut order = Vec::with_capacity(g.p());
    let mut seen = vec![false; g.p()];
    for start in 0..g.p() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut old_to_new = vec![0; g.p()];
    for (new, &old) in order.iter().enumerate() {
        old_to_new[old] = new;
    }
    (g.relabeled(&old_to_new), order)
}

/// Splits vertex `v` into one copy per part of its neighborhood. Each
/// copy is adjacent to exactly its part, so the edge count is unchanged.
/// Ids are renormalized; the second return value maps new ids to the
/// pre-normalization ids where copies of `v` all report `v`.
pub fn vertex_split(g: &Graph, v: usize, parts: &[Vec<usize>]) -> Result<(Graph, Vec<usize>)> {
    if v >= g.p() {
        return Err(Error::Precondition(format!("no such vertex {v}")));
    }
    let nbrs: BTreeSet<usize> = g.neighbors(v).into_iter().collect();
    let mut covered = BTreeSet::new();
    for part in parts {
        if part.is_empty() {
            return Err(Error::Precondition("empty part in vertex split".into()));
        }
        for &w in part {
            if !nbrs.contains(&w) {
                return Err(Error::Precondition(format!(
                    "{w} is not a neighbor of {v}"
                )));
            }
            if !covered.insert(w) {
                return Err(Error::Precondition(format!(
                    "neighbor {w} appears in two parts"
                )));
            }
        }
    }
    if covered != nbrs {
        return Err(Error::Precondition(
            "parts must cover the whole neighborhood".into(),
        ));
    }
    // Copy 0 of v keeps id v; copies 1.. get fresh ids p, p+1, ...
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| a != v && b != v)
        .collect();
    let mut origin: Vec<usize> = (0..g.p()).collect();
    for (i, part) in parts.iter().enumerate() {
        let copy = if i == 0 {
            v
        } else {
            origin.push(v);
            origin.len() - 1
        };
        for &w in part {
            edges.push((copy.min(w), copy.max(w)));
        }
    }
    let split = Graph::new(origin.len(), &edges)?;
    let split = carry_split_bipartition(g, &split, &origin);
    let (normalized, new_to_old) = bfs_renormalize(&split);
    let back: Vec<usize> = new_to_old.iter().map(|&mid| origin[mid]).collect();
    Ok((normalized, back))
}

/// Re-derives a bipartition for a graph whose vertices map back to `g`
/// through `origin`: every vertex inherits the side of its original.
fn carry_split_bipartition(g: &Graph, split: &Graph, origin: &[usize]) -> Graph {
    let Some((x, _)) = g.bipartition() else {
        return split.clone();
    };
    let xs: BTreeSet<usize> = x.iter().copied().collect();
    let mut nx = Vec::new();
    let mut ny = Vec::new();
    for (v, &orig) in origin.iter().enumerate() {
        if xs.contains(&orig) {
            nx.push(v);
        } else {
            ny.push(v);
        }
    }
    split
        .clone()
        .with_bipartition(&nx, &ny)
        .unwrap_or_else(|_| split.clone())
}

/// Repeatedly splits cycle vertices until the graph is a tree with the
/// same edge count, so `q+1` vertices. Returns the tree and the vertex
/// map back to `g`, which is a graph homomorphism. Deterministic for a
/// fixed seed.
pub fn vertex_split_to_tree(g: &Graph, seed: u64) -> Result<(Graph, Vec<usize>)> {
    if !g.is_connected() {
        return Err(Error::Precondition(
            "vertex_split_to_tree needs a connected graph".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut current = g.clone();
    // to_original[v] is the vertex of g that v descends from.
    let mut to_original: Vec<usize> = (0..g.p()).collect();
    while !current.is_tree() {
        let cycle = find_cycle(&current).expect("non-tree connected graph has a cycle");
        // Split one endpoint of a random cycle edge off from the rest of
        // its neighborhood; the cycle keeps everything connected.
        let i = rng.gen_range(0..cycle.len());
        let u = cycle[i];
        let v = cycle[(i + 1) % cycle.len()];
        let rest: Vec<usize> = current
            .neighbors(v)
            .into_iter()
            .filter(|&w| w != u)
            .collect();
        let parts = vec![vec![u], rest];
        let before = to_original.clone();
        let before_graph = current.clone();
        let (next, back) = vertex_split(&before_graph, v, &parts)?;
        to_original = back.into_iter().map(|mid| before[mid]).collect();
        current = next;
    }
    Ok((current, to_original))
}

/// Finds any cycle in `g` as a vertex sequence (without repeating the
/// closing vertex), or `None` when `g` is acyclic.
fn find_cycle(g: &Graph) -> Option<Vec<usize>> {
    let adj = g.adjacency();
    let mut parent = vec![usize::MAX; g.p()];
    let mut state = vec![0u8; g.p()];
    for start in 0..g.p() {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, usize::MAX)];
        while let Some(&(v, from)) = stack.last() {
            if state[v] == 0 {
                state[v] = 1;
                parent[v] = from;
                for &w in &adj[v] {
                    if w == from {
                        continue;
                    }
                    if state[w] == 1 {
                        // Back edge v-w closes a cycle.
                        let mut path = vec![v];
                        let mut cur = v;
                        while cur != w {
                            cur = parent[cur];
                            path.push(cur);
                        }
                        return Some(path);
                    }
                    if state[w] == 0 {
                        stack.push((w, v));
                    }
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Coincides `v` into `u`. The merged vertex keeps the union of both
/// neighborhoods; parallel edges collapse to one (simple-graph policy).
/// Adjacent vertices are rejected because merging them would create a
/// loop. Ids are renormalized; the map new id -> old id is returned,
/// with the merged vertex reporting `u`.
pub fn vertex_coincide(g: &Graph, u: usize, v: usize) -> Result<(Graph, Vec<usize>)> {
    if u >= g.p() || v >= g.p() || u == v {
        return Err(Error::Precondition(format!(
            "vertex_coincide needs two distinct vertices, got {u} and {v}"
        )));
    }
    if g.has_edge(u, v) {
        return Err(Error::Precondition(format!(
            "vertices {u} and {v} are adjacent; coinciding them would create a loop"
        )));
    }
    let mut edges = BTreeSet::new();
    for &(a, b) in g.edges() {
        let a = if a == v { u } else { a };
        let b = if b == v { u } else { b };
        edges.insert((a.min(b), a.max(b)));
    }
    // Close the id gap left by v.
    let shift = |w: usize| if w > v { w - 1 } else { w };
    let shifted: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(a, b)| (shift(a), shift(b)))
        .collect();
    let merged = Graph::new(g.p() - 1, &shifted)?;
    let mut origin: Vec<usize> = (0..g.p()).filter(|&w| w != v).collect();
    let merged = carry_split_bipartition(g, &merged, &origin);
    let (normalized, new_to_mid) = bfs_renormalize(&merged);
    origin = new_to_mid.into_iter().map(|mid| origin[mid]).collect();
    Ok((normalized, origin))
}

/// Joins disjoint graphs with one new edge from `u` in `g1` to `x` in
/// `g2`. Vertices of `g2` are shifted up by `p1`; existing ids of `g1`
/// are untouched.
pub fn edge_join(g1: &Graph, g2: &Graph, u: usize, x: usize) -> Result<Graph> {
    if u >= g1.p() || x >= g2.p() {
        return Err(Error::Precondition("join endpoint out of range".into()));
    }
    let p1 = g1.p();
    let mut edges = g1.edges().to_vec();
    edges.extend(g2.edges().iter().map(|&(a, b)| (a + p1, b + p1)));
    edges.push((u, x + p1));
    let joined = Graph::new(p1 + g2.p(), &edges)?;
    let (Some((x1, y1)), Some((x2, y2))) = (g1.bipartition(), g2.bipartition()) else {
        return Ok(joined);
    };
    // Keep g1's sides; flip g2 if needed so the new edge crosses.
    let u_in_x1 = x1.binary_search(&u).is_ok();
    let x_in_x2 = x2.binary_search(&x).is_ok();
    let (gx2, gy2) = if u_in_x1 == x_in_x2 {
        (y2, x2)
    } else {
        (x2, y2)
    };
    let nx: Vec<usize> = x1
        .iter()
        .copied()
        .chain(gx2.iter().map(|&w| w + p1))
        .collect();
    let ny: Vec<usize> = y1
        .iter()
        .copied()
        .chain(gy2.iter().map(|&w| w + p1))
        .collect();
    joined.with_bipartition(&nx, &ny)
}

/// How many leaves to hang on which vertices, split by bipartition side.
/// Reproducible plans come out of [`LeafPlan::random`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafPlan {
    /// Leaf counts for X-side parents, keyed by vertex id.
    pub x_counts: BTreeMap<usize, usize>,
    /// Leaf counts for Y-side parents, keyed by vertex id.
    pub y_counts: BTreeMap<usize, usize>,
    pub rng_seed: u64,
}

impl LeafPlan {
    /// Total leaves on the X side (the paper's `A`).
    pub fn a(&self) -> usize {
        self.x_counts.values().sum()
    }

    /// Total leaves on the Y side (the paper's `B`).
    pub fn b(&self) -> usize {
        self.y_counts.values().sum()
    }

    pub fn m(&self) -> usize {
        self.a() + self.b()
    }

    /// Draws a uniform count in `0..=max_per_vertex` for every vertex of
    /// the declared (or auto-computed) bipartition. At least one leaf
    /// total: an all-zero draw puts a single leaf on the lowest X vertex.
    pub fn random(g: &Graph, seed: u64, max_per_vertex: usize) -> Result<LeafPlan> {
        let (x, y) = match g.bipartition() {
            Some((x, y)) => (x.to_vec(), y.to_vec()),
            None => g.auto_bipartition()?,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut plan = LeafPlan {
            x_counts: BTreeMap::new(),
            y_counts: BTreeMap::new(),
            rng_seed: seed,
        };
        for &v in &x {
            let n = rng.gen_range(0..=max_per_vertex);
            if n > 0 {
                plan.x_counts.insert(v, n);
            }
        }
        for &v in &y {
            let n = rng.gen_range(0..=max_per_vertex);
            if n > 0 {
                plan.y_counts.insert(v, n);
            }
        }
        if plan.m() == 0 {
            let first = x.first().copied().unwrap_or(0);
            plan.x_counts.insert(first, 1);
        }
        Ok(plan)
    }
}

/// Adds the planned leaves. New vertices get ids `p, p+1, ...` in a
/// fixed order: X-side parents ascending, then Y-side parents ascending,
/// each parent's leaves consecutive. Existing ids are untouched.
pub fn add_leaves(g: &Graph, plan: &LeafPlan) -> Result<Graph> {
    Ok(add_leaves_with_children(g, plan)?.0)
}

/// Like [`add_leaves`] but also reports which new leaf ids hang on which
/// parent, in creation order.
pub fn add_leaves_with_children(
    g: &Graph,
    plan: &LeafPlan,
) -> Result<(Graph, BTreeMap<usize, Vec<usize>>)> {
    for &v in plan.x_counts.keys().chain(plan.y_counts.keys()) {
        if v >= g.p() {
            return Err(Error::Precondition(format!(
                "leaf plan names unknown vertex {v}"
            )));
        }
    }
    let mut edges = g.edges().to_vec();
    let mut next = g.p();
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut new_x = Vec::new();
    let mut new_y = Vec::new();
    for (counts, new_side) in [(&plan.x_counts, &mut new_y), (&plan.y_counts, &mut new_x)] {
        for (&parent, &n) in counts.iter() {
            for _ in 0..n {
                edges.push((parent.min(next), parent.max(next)));
                children.entry(parent).or_default().push(next);
                new_side.push(next);
                next += 1;
            }
        }
    }
    let grown = Graph::new(next, &edges)?;
    let grown = match g.bipartition() {
        Some((x, y)) => {
            let nx: Vec<usize> = x.iter().copied().chain(new_x).collect();
            let ny: Vec<usize> = y.iter().copied().chain(new_y).collect();
            grown.with_bipartition(&nx, &ny)?
        }
        None => grown,
    };
    Ok((grown, children))
}

/// One level of a leaf-peeling trace.
#[derive(Debug, Clone)]
pub struct PeelLevel {
    /// The tree at this level, with dense ids of its own.
    pub tree: Graph,
    /// Maps this level's dense ids back to the original tree's ids.
    pub orig_ids: Vec<usize>,
    /// Leaves of this level's tree, as original ids. For every level but
    /// the last these are exactly the vertices missing from the next.
    pub removed: Vec<usize>,
}

/// The sequence `T_1, T_2, ..., T_{m+1}` with `T_{i+1} = T_i - L(T_i)`,
/// stopping at a star. The length is `ceil(D(T)/2)`.
#[derive(Debug, Clone)]
pub struct PeelTrace {
    pub levels: Vec<PeelLevel>,
}

impl PeelTrace {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn star(&self) -> &PeelLevel {
        self.levels.last().expect("trace has at least one level")
    }
}

/// Whether a tree is a star: at most one vertex of degree two or more.
/// `K_1` and `K_2` count as (degenerate) stars.
pub fn is_star(t: &Graph) -> bool {
    t.is_tree() && (0..t.p()).filter(|&v| t.degree(v) >= 2).count() <= 1
}

/// Peels all leaves repeatedly until a star remains.
pub fn peel_leaves(t: &Graph) -> Result<PeelTrace> {
    if !t.is_tree() {
        return Err(Error::Precondition("peel_leaves needs a tree".into()));
    }
    if t.p() < 2 {
        return Err(Error::Precondition(
            "peel_leaves needs a tree with at least one edge".into(),
        ));
    }
    let mut levels = Vec::new();
    let mut tree = t.clone();
    let mut orig_ids: Vec<usize> = (0..t.p()).collect();
    loop {
        let leaves: Vec<usize> = tree.leaves().iter().map(|&v| orig_ids[v]).collect();
        let star = is_star(&tree);
        levels.push(PeelLevel {
            tree: tree.clone(),
            orig_ids: orig_ids.clone(),
            removed: leaves,
        });
        if star {
            break;
        }
        let keep: Vec<usize> = (0..tree.p()).filter(|&v| tree.degree(v) != 1).collect();
        let old_to_new: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let edges: Vec<(usize, usize)> = tree
            .edges()
            .iter()
            .filter(|&&(a, b)| old_to_new.contains_key(&a) && old_to_new.contains_key(&b))
            .map(|&(a, b)| (old_to_new[&a], old_to_new[&b]))
            .collect();
        let next = Graph::new(keep.len(), &edges)?;
        orig_ids = keep.iter().map(|&v| orig_ids[v]).collect();
        tree = next;
    }
    Ok(PeelTrace { levels })
}

/// Number of partitions of `m` into parts of size at most `k`, through
/// the recursion `A(m,k) = A(m,k-1) + A(m-k,k)` with `A(0,k) = 1` and
/// `A(m,0) = 0` for `m > 0`.
pub fn count_partitions(m: i64, k: i64) -> Result<i128> {
    if m < 0 || k < 0 {
        return Err(Error::Precondition(format!(
            "count_partitions needs nonnegative arguments, got ({m},{k})"
        )));
    }
    let (m, k) = (m as usize, k as usize);
    let mut table = vec![vec![0i128; k + 1]; m + 1];
    for row in table.iter_mut() {
        row[0] = 0;
    }
    for cell in table[0].iter_mut() {
        *cell = 1;
    }
    for mm in 1..=m {
        for kk in 1..=k {
            table[mm][kk] = table[mm][kk - 1]
                + if mm >= kk { table[mm - kk][kk] } else { 0 };
        }
    }
    Ok(table[m][k])
}

/// The one-edge exchange move: remove an existing edge, add a currently
/// absent one on the same vertex set. Returns the new graph and whether
/// it is a tree.
pub fn pm_edge_op(
    t: &Graph,
    remove: (usize, usize),
    add: (usize, usize),
) -> Result<(Graph, bool)> {
    if !t.has_edge(remove.0, remove.1) {
        return Err(Error::Precondition(format!(
            "edge ({},{}) is not present",
            remove.0, remove.1
        )));
    }
    if add.0 == add.1 || add.0 >= t.p() || add.1 >= t.p() {
        return Err(Error::Precondition("added edge is not a valid pair".into()));
    }
    let rm = (remove.0.min(remove.1), remove.0.max(remove.1));
    let ad = (add.0.min(add.1), add.0.max(add.1));
    if ad != rm && t.has_edge(ad.0, ad.1) {
        return Err(Error::Precondition(format!(
            "edge ({},{}) is already present",
            ad.0, ad.1
        )));
    }
    let edges: Vec<(usize, usize)> = t
        .edges()
        .iter()
        .copied()
        .filter(|&e| e != rm)
        .chain(std::iter::once(ad))
        .collect();
    let g = Graph::new(t.p(), &edges)?;
    let is_tree = g.is_tree();
    Ok((g, is_tree))
}

/// All trees reachable from `t` by one edge-exchange move, up to
/// isomorphism (the identity move is included, so `t` itself appears).
/// The boolean is false when `max_nodes` cut the enumeration short.
pub fn enumerate_pm_tree_set(t: &Graph, max_nodes: usize) -> Result<(Vec<Graph>, bool)> {
    if !t.is_tree() {
        return Err(Error::Precondition("enumerate_pm_tree_set needs a tree".into()));
    }
    if t.q() > 8 {
        return Err(Error::TooLarge(format!(
            "one-step enumeration is limited to q <= 8, got q = {}",
            t.q()
        )));
    }
    let mut seen: BTreeMap<String, Graph> = BTreeMap::new();
    let mut complete = true;
    'outer: for &rm in t.edges() {
        for u in 0..t.p() {
            for v in (u + 1)..t.p() {
                let candidate = (u, v);
                if candidate != rm && t.has_edge(u, v) {
                    continue;
                }
                let (g, tree) = pm_edge_op(t, rm, candidate)?;
                if !tree {
                    continue;
                }
                let key = tree_canonical_key(&g)?;
                seen.entry(key).or_insert(g);
                if seen.len() >= max_nodes {
                    complete = false;
                    break 'outer;
                }
            }
        }
    }
    Ok((seen.into_values().collect(), complete))
}

/// BFS closure of the edge-exchange move over labeled trees on the same
/// vertex set. On `n` vertices the full closure is all `n^(n-2)` labeled
/// trees. The boolean is false when `max_nodes` cut the walk short.
pub fn labeled_pm_closure(t: &Graph, max_nodes: usize) -> Result<(Vec<Graph>, bool)> {
    if !t.is_tree() {
        return Err(Error::Precondition("labeled_pm_closure needs a tree".into()));
    }
    let key_of = |g: &Graph| g.edges().to_vec();
    let mut seen: BTreeMap<Vec<(usize, usize)>, Graph> = BTreeMap::new();
    let mut queue = VecDeque::from([t.clone()]);
    seen.insert(key_of(t), t.clone());
    let mut complete = true;
    while let Some(cur) = queue.pop_front() {
        for &rm in cur.edges() {
            for u in 0..cur.p() {
                for v in (u + 1)..cur.p() {
                    if (u, v) != rm && cur.has_edge(u, v) {
                        continue;
                    }
                    let (g, tree) = pm_edge_op(&cur, rm, (u, v))?;
                    if !tree {
                        continue;
                    }
                    let key = key_of(&g);
                    if !seen.contains_key(&key) {
                        if seen.len() >= max_nodes {
                            complete = false;
                        } else {
                            seen.insert(key, g.clone());
                            queue.push_back(g);
                        }
                    }
                }
            }
        }
    }
    Ok((seen.into_values().collect(), complete))
}

/// Uniform random labeled tree on `n` vertices from a seeded Pruefer
/// sequence. `n = 1` gives `K_1`, `n = 2` gives `K_2`.
pub fn random_tree(n: usize, seed: u64) -> Graph {
    assert!(n >= 1, "a tree needs at least one vertex");
    if n == 1 {
        return Graph::new(1, &[]).unwrap();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let seq: Vec<usize> = (0..n.saturating_sub(2))
        .map(|_| rng.gen_range(0..n))
        .collect();
    prufer_decode(n, &seq)
}

fn prufer_decode(n: usize, seq: &[usize]) -> Graph {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaf_heap: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    for &v in seq {
        let leaf = *leaf_heap.iter().next().unwrap();
        leaf_heap.remove(&leaf);
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
        if degree[v] == 1 {
            leaf_heap.insert(v);
        }
    }
    let mut last: Vec<usize> = leaf_heap.into_iter().collect();
    // Exactly two vertices of degree 1 remain.
    edges.push((last.remove(0), last.remove(0)));
    Graph::new(n, &edges).unwrap()
}

/// Canonical string for a tree, distinguishing trees exactly up to
/// isomorphism (rooted AHU encoding at the centroid-free tree center).
pub fn tree_canonical_key(t: &Graph) -> Result<String> {
    if !t.is_tree() {
        return Err(Error::Precondition("tree_canonical_key needs a tree".into()));
    }
    if t.p() == 1 {
        return Ok("()".into());
    }
    let centers = tree_centers(t);
    let keys: Vec<String> = centers.iter().map(|&c| ahu_encode(t, c)).collect();
    Ok(keys.into_iter().min().unwrap())
}

fn tree_centers(t: &Graph) -> Vec<usize> {
    let mut degree: Vec<usize> = (0..t.p()).map(|v| t.degree(v)).collect();
    let adj = t.adjacency();
    let mut remaining = t.p();
    let mut frontier: Vec<usize> = (0..t.p()).filter(|&v| degree[v] <= 1).collect();
    let mut alive = vec![true; t.p()];
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &frontier {
            alive[v] = false;
            remaining -= 1;
            for &w in &adj[v] {
                if alive[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        frontier = next;
    }
    (0..t.p()).filter(|&v| alive[v]).collect()
}

fn ahu_encode(t: &Graph, root: usize) -> String {
    let adj = t.adjacency();
    fn enc(v: usize, parent: Option<usize>, adj: &[Vec<usize>]) -> String {
        let mut kids: Vec<String> = adj[v]
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| enc(w, Some(v), adj))
            .collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    enc(root, None, &adj)
}

const ISO_P_LIMIT: usize = 10;

/// Canonical string for a general graph with `p <= 10`, distinguishing
/// graphs exactly up to isomorphism. Uses iterated degree refinement
/// with backtracking over the remaining color classes.
pub fn graph_canonical_key(g: &Graph) -> Result<String> {
    if g.p() > ISO_P_LIMIT {
        return Err(Error::TooLarge(format!(
            "canonical forms are limited to p <= {ISO_P_LIMIT}, got p = {}",
            g.p()
        )));
    }
    if g.is_tree() {
        return tree_canonical_key(g);
    }
    let n = g.p();
    let adj = g.adjacency();
    // Refine an initial coloring by neighbor color multisets.
    let mut colors: Vec<u64> = (0..n).map(|v| adj[v].len() as u64).collect();
    for _ in 0..n {
        let mut sig: Vec<(u64, Vec<u64>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u64> = adj[v].iter().map(|&w| colors[w]).collect();
                nb.sort();
                (colors[v], nb)
            })
            .collect();
        let mut uniq = sig.clone();
        uniq.sort();
        uniq.dedup();
        let next: Vec<u64> = sig
            .drain(..)
            .map(|s| uniq.binary_search(&s).unwrap() as u64)
            .collect();
        if next == colors {
            break;
        }
        colors = next;
    }
    // Backtracking search for the lexicographically smallest adjacency
    // encoding over permutations compatible with the refinement.
    let mut best: Option<String> = None;
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search_canonical(g, &colors, 0, &mut perm, &mut used, &mut best);
    Ok(best.expect("at least one permutation exists"))
}

fn search_canonical(
    g: &Graph,
    colors: &[u64],
    pos: usize,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut Option<String>,
) {
    let n = g.p();
    if pos == n {
        let mut bits = String::with_capacity(n * n);
        for i in 0..n {
            for j in (i + 1)..n {
                bits.push(if g.has_edge(perm[i], perm[j]) { '1' } else { '0' });
            }
        }
        if best.as_ref().is_none_or(|b| bits < *b) {
            *best = Some(bits);
        }
        return;
    }
    // Candidates for slot pos: vertices of the minimal unused color.
    let min_color = (0..n)
        .filter(|&v| !used[v])
        .map(|v| colors[v])
        .min()
        .unwrap();
    for v in 0..n {
        if !used[v] && colors[v] == min_color {
            used[v] = true;
            perm[pos] = v;
            search_canonical(g, colors, pos + 1, perm, used, best);
            used[v] = false;
        }
    }
}

/// Exact isomorphism test for graphs with `p <= 10`; larger inputs get
/// an explicit error rather than a heuristic answer.
pub fn is_isomorphic(a: &Graph, b: &Graph) -> Result<bool> {
    if a.p() != b.p() || a.q() != b.q() {
        return Ok(false);
    }
    Ok(graph_canonical_key(a)? == graph_canonical_key(b)?)
}
