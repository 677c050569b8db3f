//! Set-colorings over linear forms and the hypergraphs they induce.
//!
//! A set-coloring assigns a finite nonempty set of linear forms to
//! vertices and edges instead of a single color. Two families of
//! constructions build them on trees from ordinary colorings: the v-set
//! coloring, which peels leaves and colors every edge with the
//! intersection of its endpoint sets, and five W-constraint variants
//! whose edge sets also collect the operator value of every endpoint
//! element pair. The distinct assigned sets form a hypergraph over
//! their union, and [`verify_set_coloring`] checks the set analogues of
//! properness, intersection and magic-constant conditions against a
//! graph.
//!
//! Constructions on plain integer colorings of bipartite trees record
//! which side each value came from, so [`lift_kd`] can replay the same
//! sets with X-side values as multiples of d and the rest as `k + j*d`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coloring_engine::{Family, Param, TotalColoring, Violation, CHECK_GRID};
use crate::constructors::{tree_kd_coloring, ChoiceVector};
use crate::graph_core::{peel_leaves, vertex_split_to_tree, Graph};
use crate::groups_homo::EdgeFn;
use crate::topcode_matrix::LinForm;
use crate::{Error, Result};

/// How the edge sets of a set-coloring relate to its vertex sets.
///
/// Constructions record the rule they used, so later consumers know
/// whether edge sets are derived data. `Explicit` makes no promise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Edge sets were assigned directly.
    Explicit,
    /// Every edge set is the intersection of its endpoint sets.
    Intersection,
    /// Every edge set is the endpoint intersection together with the
    /// operator value of every pair of endpoint elements.
    WJoin(EdgeFn),
}

/// A set-valued total coloring: finite nonempty sets of linear forms on
/// vertices and on edges. Edge keys are stored with the smaller
/// endpoint first, like [`TotalColoring`].
///
/// The ground set Lambda is always the union of all assigned sets; it
/// is computed, never stored, so it cannot drift out of sync.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetColoring {
    vertex_sets: BTreeMap<usize, BTreeSet<LinForm>>,
    edge_sets: BTreeMap<(usize, usize), BTreeSet<LinForm>>,
    edge_rule: EdgeRule,
    /// Plain value to parameterized form, for values that are colors of
    /// known side. Empty when the construction had nothing to record.
    label_lifts: BTreeMap<LinForm, LinForm>,
    /// Per-edge overrides for operator values whose lift differs from
    /// any label's. Consulted before `label_lifts`.
    edge_lifts: BTreeMap<(usize, usize), BTreeMap<LinForm, LinForm>>,
    /// Which peeling round assigned each vertex set, 1-based. Only the
    /// peeling constructions fill this in.
    levels: BTreeMap<usize, usize>,
}

impl SetColoring {
    pub fn new(edge_rule: EdgeRule) -> Self {
        SetColoring {
            vertex_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
            edge_rule,
            label_lifts: BTreeMap::new(),
            edge_lifts: BTreeMap::new(),
            levels: BTreeMap::new(),
        }
    }

    pub fn set_vertex_set(&mut self, v: usize, set: BTreeSet<LinForm>) -> Result<()> {
        if set.is_empty() {
            return Err(Error::Precondition(format!(
                "set-colorings assign nonempty sets, vertex {v} got an empty one"
            )));
        }
        self.vertex_sets.insert(v, set);
        Ok(())
    }

    pub fn set_edge_set(&mut self, u: usize, v: usize, set: BTreeSet<LinForm>) -> Result<()> {
        if set.is_empty() {
            return Err(Error::Precondition(format!(
                "set-colorings assign nonempty sets, edge {u}-{v} got an empty one"
            )));
        }
        self.edge_sets.insert((u.min(v), u.max(v)), set);
        Ok(())
    }

    pub fn vertex_set(&self, v: usize) -> Option<&BTreeSet<LinForm>> {
        self.vertex_sets.get(&v)
    }

    pub fn edge_set(&self, u: usize, v: usize) -> Option<&BTreeSet<LinForm>> {
        self.edge_sets.get(&(u.min(v), u.max(v)))
    }

    pub fn vertex_sets(&self) -> &BTreeMap<usize, BTreeSet<LinForm>> {
        &self.vertex_sets
    }

    pub fn edge_sets(&self) -> &BTreeMap<(usize, usize), BTreeSet<LinForm>> {
        &self.edge_sets
    }

    pub fn edge_rule(&self) -> EdgeRule {
        self.edge_rule
    }

    /// The ground set: the union of every assigned set.
    pub fn lambda(&self) -> BTreeSet<LinForm> {
        self.vertex_sets
            .values()
            .chain(self.edge_sets.values())
            .flatten()
            .copied()
            .collect()
    }

    /// The peeling round that fixed the set of vertex `v`, if a peeling
    /// construction built this coloring.
    pub fn level_of(&self, v: usize) -> Option<usize> {
        self.levels.get(&v).copied()
    }

    /// Checks that every vertex and every edge of `g` has a set.
    pub fn is_total_on(&self, g: &Graph) -> bool {
        (0..g.p()).all(|v| self.vertex_sets.contains_key(&v))
            && g.edges().iter().all(|e| self.edge_sets.contains_key(e))
    }
}

#[derive(Serialize, Deserialize)]
struct SetColoringJson {
    vertices: BTreeMap<String, Vec<LinForm>>,
    edges: BTreeMap<String, Vec<LinForm>>,
    rule: EdgeRule,
}

impl Serialize for SetColoring {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SetColoringJson {
            vertices: self
                .vertex_sets
                .iter()
                .map(|(v, s)| (v.to_string(), s.iter().copied().collect()))
                .collect(),
            edges: self
                .edge_sets
                .iter()
                .map(|(&(u, v), s)| (format!("{u}-{v}"), s.iter().copied().collect()))
                .collect(),
            rule: self.edge_rule,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SetColoring {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = SetColoringJson::deserialize(de)?;
        let mut out = SetColoring::new(raw.rule);
        for (key, set) in raw.vertices {
            let v: usize = key
                .parse()
                .map_err(|_| D::Error::custom(format!("bad vertex key {key:?}")))?;
            out.set_vertex_set(v, set.into_iter().collect())
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        for (key, set) in raw.edges {
            let (u, v) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| D::Error::custom(format!("bad edge key {key:?}")))?;
            out.set_edge_set(u, v, set.into_iter().collect())
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        Ok(out)
    }
}

/// A hypergraph: distinct nonempty hyperedges over the ground set
/// Lambda, with Lambda equal to the union of the hyperedges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    lambda: BTreeSet<LinForm>,
    edges: BTreeSet<BTreeSet<LinForm>>,
}

impl Hypergraph {
    /// Builds a hypergraph from a family of sets. Duplicates collapse;
    /// an empty set, or no sets at all, is an error.
    pub fn new(edges: impl IntoIterator<Item = BTreeSet<LinForm>>) -> Result<Self> {
        let edges: BTreeSet<BTreeSet<LinForm>> = edges.into_iter().collect();
        if edges.is_empty() {
            return Err(Error::Precondition(
                "a hypergraph needs at least one hyperedge".into(),
            ));
        }
        if edges.iter().any(|e| e.is_empty()) {
            return Err(Error::Precondition("hyperedges must be nonempty".into()));
        }
        let lambda = edges.iter().flatten().copied().collect();
        Ok(Hypergraph { lambda, edges })
    }

    pub fn lambda(&self) -> &BTreeSet<LinForm> {
        &self.lambda
    }

    pub fn hyperedges(&self) -> &BTreeSet<BTreeSet<LinForm>> {
        &self.edges
    }

    /// Number of vertices of the hypergraph.
    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    /// Number of hyperedges.
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    /// Whether the two defining conditions hold: no empty hyperedge and
    /// Lambda exactly the union. Constructed values always pass; this
    /// matters for deserialized ones.
    pub fn is_valid(&self) -> bool {
        !self.edges.is_empty()
            && self.edges.iter().all(|e| !e.is_empty())
            && self.lambda == self.edges.iter().flatten().copied().collect()
    }
}

/// Which assigned sets to collect when extracting a hypergraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetScope {
    Vertices,
    Edges,
    Total,
}

impl FromStr for SetScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertices" => Ok(SetScope::Vertices),
            "edges" => Ok(SetScope::Edges),
            "total" => Ok(SetScope::Total),
            other => Err(Error::Parse(format!(
                "unknown scope {other:?}, expected vertices, edges or total"
            ))),
        }
    }
}

/// The distinct sets a set-coloring assigns within `scope`, as a
/// hypergraph over their union.
pub fn extract_hypergraph(sc: &SetColoring, scope: SetScope) -> Result<Hypergraph> {
    let vertices = sc.vertex_sets.values().cloned();
    let edges = sc.edge_sets.values().cloned();
    let sets: Vec<BTreeSet<LinForm>> = match scope {
        SetScope::Vertices => vertices.collect(),
        SetScope::Edges => edges.collect(),
        SetScope::Total => vertices.chain(edges).collect(),
    };
    if sets.is_empty() {
        return Err(Error::Precondition(
            "the set-coloring assigns no sets in the requested scope".into(),
        ));
    }
    Hypergraph::new(sets)
}

/// False for X, true for Y, using the declared bipartition when there
/// is one and the BFS 2-coloring otherwise.
fn side_vec(t: &Graph) -> Result<Vec<bool>> {
    let (x, _) = match t.bipartition() {
        Some((x, y)) => (x.to_vec(), y.to_vec()),
        None => t.auto_bipartition()?,
    };
    let mut side = vec![true; t.p()];
    for &v in &x {
        side[v] = false;
    }
    Ok(side)
}

/// The parameterized form of a plain color: X-side values become
/// multiples of d, everything else `k + j*d`.
fn side_lift(value: LinForm, y_side: bool) -> LinForm {
    if y_side {
        LinForm::kd(value.dcoef)
    } else {
        value
    }
}

/// Vertex colors of `f` on all of `t`, checked for injectivity.
fn vertex_values(t: &Graph, f: &TotalColoring) -> Result<Vec<LinForm>> {
    let mut seen = BTreeMap::new();
    let mut values = Vec::with_capacity(t.p());
    for v in 0..t.p() {
        let c = f.vertex(v).ok_or_else(|| {
            Error::Precondition(format!("vertex {v} has no color"))
        })?;
        if let Some(w) = seen.insert(c, v) {
            return Err(Error::Precondition(format!(
                "vertex colors must be distinct, vertices {w} and {v} share one"
            )));
        }
        values.push(c);
    }
    Ok(values)
}

type VertexSets = BTreeMap<usize, BTreeSet<LinForm>>;
type Levels = BTreeMap<usize, usize>;

/// Leaf-peeling vertex sets: every leaf of the current tree gets its
/// own color paired with its neighbor's, the final star keeps the bare
/// center color. Shared by the v-set construction and the level-leaf
/// W-variant. Returns the sets and the 1-based round of each vertex.
fn leaf_peel_sets(t: &Graph, values: &[LinForm]) -> Result<(VertexSets, Levels)> {
    let trace = peel_leaves(t)?;
    let mut sets = BTreeMap::new();
    let mut levels = BTreeMap::new();
    let last = trace.levels.len() - 1;
    for (idx, level) in trace.levels.iter().enumerate() {
        if idx < last {
            for &w in &level.removed {
                let local = level
                    .orig_ids
                    .binary_search(&w)
                    .expect("removed vertices live in their level");
                let nb = level.orig_ids[level.tree.neighbors(local)[0]];
                sets.insert(w, BTreeSet::from([values[w], values[nb]]));
                levels.insert(w, idx + 1);
            }
        } else {
            let star = &level.tree;
            let center_local = (0..star.p()).find(|&v| star.degree(v) >= 2).unwrap_or(0);
            let center = level.orig_ids[center_local];
            for local in 0..star.p() {
                let w = level.orig_ids[local];
                let set = if local == center_local {
                    BTreeSet::from([values[center]])
                } else {
                    BTreeSet::from([values[w], values[center]])
                };
                sets.insert(w, set);
                levels.insert(w, idx + 1);
            }
        }
    }
    Ok((sets, levels))
}

/// The v-set coloring of a tree under an injective vertex coloring:
/// leaf-peeling vertex sets, and each edge colored with the
/// intersection of its endpoint sets, which the peeling order keeps
/// nonempty.
pub fn vset_coloring(t: &Graph, f: &TotalColoring) -> Result<SetColoring> {
    let values = vertex_values(t, f)?;
    let (vertex_sets, levels) = leaf_peel_sets(t, &values)?;
    let mut out = SetColoring::new(EdgeRule::Intersection);
    out.levels = levels;
    for (v, set) in vertex_sets {
        out.set_vertex_set(v, set)?;
    }
    for &(u, v) in t.edges() {
        let inter: BTreeSet<LinForm> = out.vertex_sets[&u]
            .intersection(&out.vertex_sets[&v])
            .copied()
            .collect();
        debug_assert!(!inter.is_empty(), "peeling keeps endpoint sets overlapping");
        out.set_edge_set(u, v, inter)?;
    }
    if values.iter().all(|c| c.is_pure_d()) {
        let side = side_vec(t)?;
        for v in 0..t.p() {
            out.label_lifts.insert(values[v], side_lift(values[v], side[v]));
        }
    }
    Ok(out)
}

/// Which W-constraint set-coloring construction to run.
///
/// All five take a coloring whose edge colors satisfy the operator
/// constraint and finish with the same edge rule; they differ in how
/// the vertex sets are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PwcscVariant {
    /// Peel the leaves around both inner ends of a longest path, round
    /// by round, pairing each peeled color with its hub's.
    OrderedPath,
    /// Peel all leaves of every round, as in the v-set construction.
    LevelLeaf,
    /// Each vertex gets the colors of its neighbors.
    NeighborVertex,
    /// Each vertex gets the colors of its incident edges.
    NeighborEdge,
    /// Each vertex gets both neighbor and incident edge colors.
    NeighborEdgeVertex,
}

impl FromStr for PwcscVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "ordered-path" => Ok(PwcscVariant::OrderedPath),
            "b" | "level-leaf" => Ok(PwcscVariant::LevelLeaf),
            "c" | "neighbor-vertex" => Ok(PwcscVariant::NeighborVertex),
            "d" | "neighbor-edge" => Ok(PwcscVariant::NeighborEdge),
            "e" | "neighbor-edge-vertex" => Ok(PwcscVariant::NeighborEdgeVertex),
            other => Err(Error::Parse(format!(
                "unknown variant {other:?}, expected a through e or their long names"
            ))),
        }
    }
}

/// A longest path of a tree, deterministic: start from the smallest id
/// of maximal eccentricity, walk to the smallest farthest id along
/// smallest-id parents.
fn longest_path(t: &Graph) -> Vec<usize> {
    let dist = |s: usize| -> Vec<usize> {
        let mut d = vec![usize::MAX; t.p()];
        d[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for w in t.neighbors(v) {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        d
    };
    let ecc: Vec<usize> = (0..t.p())
        .map(|v| dist(v).into_iter().max().unwrap())
        .collect();
    let best = *ecc.iter().max().unwrap();
    let start = (0..t.p()).find(|&v| ecc[v] == best).unwrap();
    let d = dist(start);
    let end = (0..t.p()).find(|&v| d[v] == best).unwrap();
    let mut path = vec![end];
    let mut cur = end;
    while cur != start {
        cur = t
            .neighbors(cur)
            .into_iter()
            .find(|&w| d[w] + 1 == d[path[path.len() - 1]])
            .unwrap();
        path.push(cur);
    }
    path.reverse();
    path
}

/// Ordered-path vertex sets: each round removes the leaves hanging off
/// the second and second-to-last vertices of a longest path, coloring
/// them with their own color and the hub's; the final star gets the
/// bare center color and leaf-center pairs.
fn ordered_path_sets(t: &Graph, values: &[LinForm]) -> (VertexSets, Levels) {
    let mut sets = BTreeMap::new();
    let mut levels = BTreeMap::new();
    let mut tree = t.clone();
    let mut orig: Vec<usize> = (0..t.p()).collect();
    let mut round = 0;
    loop {
        round += 1;
        if tree.diameter().map_or(true, |d| d <= 2) {
            let center_local = (0..tree.p()).find(|&v| tree.degree(v) >= 2).unwrap_or(0);
            let center = orig[center_local];
            for (local, &w) in orig.iter().enumerate() {
                let set = if local == center_local {
                    BTreeSet::from([values[center]])
                } else {
                    BTreeSet::from([values[w], values[center]])
                };
                sets.insert(w, set);
                levels.insert(w, round);
            }
            return (sets, levels);
        }
        let path = longest_path(&tree);
        let hubs = [path[1], path[path.len() - 2]];
        let mut removed = Vec::new();
        for &hub in &hubs {
            for leaf in tree.neighbors(hub) {
                if tree.degree(leaf) == 1 {
                    let w = orig[leaf];
                    sets.insert(w, BTreeSet::from([values[w], values[orig[hub]]]));
                    levels.insert(w, round);
                    removed.push(leaf);
                }
            }
        }
        let keep: Vec<usize> = (0..tree.p()).filter(|v| !removed.contains(v)).collect();
        let old_to_new: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let edges: Vec<(usize, usize)> = tree
            .edges()
            .iter()
            .filter(|&&(a, b)| old_to_new.contains_key(&a) && old_to_new.contains_key(&b))
            .map(|&(a, b)| (old_to_new[&a], old_to_new[&b]))
            .collect();
        orig = keep.iter().map(|&v| orig[v]).collect();
        tree = Graph::new(keep.len(), &edges).expect("removing leaves keeps a tree");
    }
}

/// A W-constraint set-coloring of a tree. The coloring `f` must be
/// total with edge colors equal to `op` of the endpoint colors; the
/// peeling variants and the neighbor-vertex one also need distinct
/// vertex colors, the neighbor-edge ones distinct edge colors.
pub fn pwcsc(
    t: &Graph,
    f: &TotalColoring,
    variant: PwcscVariant,
    op: EdgeFn,
) -> Result<SetColoring> {
    if !t.is_tree() {
        return Err(Error::Precondition("pwcsc needs a tree".into()));
    }
    if !f.is_total_on(t) {
        return Err(Error::Precondition(
            "coloring is not total: some vertex or edge of the tree is uncolored".into(),
        ));
    }
    for &(u, v) in t.edges() {
        let want = op.apply(f.vertex(u).unwrap(), f.vertex(v).unwrap());
        if f.edge(u, v).unwrap() != want {
            return Err(Error::Precondition(format!(
                "edge {u}-{v} does not carry the operator value of its endpoints"
            )));
        }
    }
    let needs_vertex_injective = matches!(
        variant,
        PwcscVariant::OrderedPath | PwcscVariant::LevelLeaf | PwcscVariant::NeighborVertex
    );
    let needs_edge_injective = matches!(
        variant,
        PwcscVariant::OrderedPath | PwcscVariant::NeighborEdge | PwcscVariant::NeighborEdgeVertex
    );
    if needs_edge_injective {
        let mut seen = BTreeSet::new();
        for &(u, v) in t.edges() {
            if !seen.insert(f.edge(u, v).unwrap()) {
                return Err(Error::Precondition(
                    "edge colors must be distinct for this variant".into(),
                ));
            }
        }
    }
    let values = if needs_vertex_injective {
        vertex_values(t, f)?
    } else {
        (0..t.p()).map(|v| f.vertex(v).unwrap()).collect()
    };

    let (vertex_sets, levels) = match variant {
        PwcscVariant::OrderedPath => {
            if t.p() < 2 {
                return Err(Error::Precondition(
                    "the peeling variants need a tree with at least one edge".into(),
                ));
            }
            ordered_path_sets(t, &values)
        }
        PwcscVariant::LevelLeaf => leaf_peel_sets(t, &values)?,
        PwcscVariant::NeighborVertex => {
            let sets = (0..t.p())
                .map(|x| (x, t.neighbors(x).into_iter().map(|y| values[y]).collect()))
                .collect();
            (sets, BTreeMap::new())
        }
        PwcscVariant::NeighborEdge => {
            let sets = (0..t.p())
                .map(|x| {
                    let set = t
                        .neighbors(x)
                        .into_iter()
                        .map(|z| f.edge(x, z).unwrap())
                        .collect();
                    (x, set)
                })
                .collect();
            (sets, BTreeMap::new())
        }
        PwcscVariant::NeighborEdgeVertex => {
            let sets = (0..t.p())
                .map(|x| {
                    let set = t
                        .neighbors(x)
                        .into_iter()
                        .flat_map(|z| [values[z], f.edge(x, z).unwrap()])
                        .collect();
                    (x, set)
                })
                .collect();
            (sets, BTreeMap::new())
        }
    };
    if vertex_sets.values().any(|s: &BTreeSet<LinForm>| s.is_empty()) {
        return Err(Error::Precondition(
            "an isolated vertex has no neighbor colors to collect".into(),
        ));
    }

    // Lift bookkeeping is only possible for plain colorings: vertex
    // colors lift by the side of their owner, edge colors to k + j*d.
    // A vertex and an edge sharing a value keeps the vertex's lift.
    let mut label_lifts = BTreeMap::new();
    if f.all_colors().iter().all(|c| c.is_pure_d()) {
        let side = side_vec(t)?;
        for v in 0..t.p() {
            label_lifts.insert(values[v], side_lift(values[v], side[v]));
        }
        for &(u, v) in t.edges() {
            let c = f.edge(u, v).unwrap();
            label_lifts.entry(c).or_insert_with(|| LinForm::kd(c.dcoef));
        }
    }

    let mut out = SetColoring::new(EdgeRule::WJoin(op));
    out.levels = levels;
    for (v, set) in vertex_sets {
        out.set_vertex_set(v, set)?;
    }
    for &(u, v) in t.edges() {
        let fu = &out.vertex_sets[&u];
        let fv = &out.vertex_sets[&v];
        let inter: BTreeSet<LinForm> = fu.intersection(fv).copied().collect();
        let mut set = inter.clone();
        let mut lifts = BTreeMap::new();
        for &a in fu {
            for &b in fv {
                let c = op.apply(a, b);
                set.insert(c);
                if !label_lifts.is_empty() && !inter.contains(&c) {
                    lifts
                        .entry(c)
                        .or_insert_with(|| op.apply(label_lifts[&a], label_lifts[&b]));
                }
            }
        }
        out.set_edge_set(u, v, set)?;
        if !lifts.is_empty() {
            out.edge_lifts.insert((u.min(v), u.max(v)), lifts);
        }
    }
    out.label_lifts = label_lifts;
    Ok(out)
}

/// Replays a constructed set-coloring with parameterized values: plain
/// colors become `j*d` on the X side and `k + j*d` elsewhere, operator
/// values are recomputed from the lifted pair that produced them.
/// Symbolic parameters keep the forms, concrete ones evaluate them;
/// `(k, d) = (0, 1)` returns the coloring unchanged.
///
/// Only colorings built here from plain colorings carry the needed side
/// bookkeeping; anything else is rejected.
pub fn lift_kd(sc: &SetColoring, k: Param, d: Param) -> Result<SetColoring> {
    let mode = match (k, d) {
        (Param::Sym, Param::Sym) => None,
        (Param::At(k0), Param::At(d0)) => {
            if k0 < 0 || d0 < 1 {
                return Err(Error::Precondition(format!(
                    "parameters need k >= 0 and d >= 1, got ({k0},{d0})"
                )));
            }
            if (k0, d0) == (0, 1) {
                return Ok(sc.clone());
            }
            Some((k0, d0))
        }
        _ => {
            return Err(Error::Precondition(
                "mixed symbolic and concrete parameters are not supported".into(),
            ))
        }
    };
    if sc.label_lifts.is_empty() {
        return Err(Error::Precondition(
            "this set-coloring records no side information to lift from".into(),
        ));
    }
    let finish = |c: LinForm| match mode {
        None => c,
        Some((k0, d0)) => LinForm::int(c.eval(k0, d0)),
    };
    let lifted = |site: Option<(usize, usize)>, v: LinForm| -> Result<LinForm> {
        let form = site
            .and_then(|e| sc.edge_lifts.get(&e))
            .and_then(|m| m.get(&v))
            .or_else(|| sc.label_lifts.get(&v))
            .ok_or_else(|| {
                Error::Precondition(format!("value {v} has no recorded lift"))
            })?;
        Ok(finish(*form))
    };
    let mut out = SetColoring::new(match sc.edge_rule {
        EdgeRule::Intersection => EdgeRule::Intersection,
        // Operator values were lifted pairwise, which a recomputation
        // from the lifted vertex sets would not always reproduce.
        _ => EdgeRule::Explicit,
    });
    out.levels = sc.levels.clone();
    for (&v, set) in &sc.vertex_sets {
        let new: BTreeSet<LinForm> = set
            .iter()
            .map(|&c| lifted(None, c))
            .collect::<Result<_>>()?;
        debug_assert_eq!(new.len(), set.len(), "lifting never merges values");
        out.set_vertex_set(v, new)?;
    }
    for (&(u, v), set) in &sc.edge_sets {
        let new: BTreeSet<LinForm> = set
            .iter()
            .map(|&c| lifted(Some((u, v)), c))
            .collect::<Result<_>>()?;
        debug_assert_eq!(new.len(), set.len(), "lifting never merges values");
        out.set_edge_set(u, v, new)?;
    }
    Ok(out)
}

/// One of the numbered set-coloring conditions: the Nset properness and
/// intersection family, and the Chyper containment family. The rank of
/// `Chyper2` is the required intersection size, at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetConstraint {
    /// Every vertex has a set.
    Nset1,
    /// Every edge has a set.
    Nset2,
    /// Every vertex and every edge has a set.
    Nset3,
    /// Adjacent vertices get distinct sets.
    Nset4,
    /// Adjacent edges get distinct sets.
    Nset5,
    /// Each edge's set differs from both endpoint sets.
    Nset6,
    /// The ground set is the union of the assigned sets.
    Nset7,
    /// Adjacent vertices get intersecting sets.
    Nset8,
    /// Adjacent edges get intersecting sets.
    Nset9,
    /// Each edge's set intersects both endpoint sets.
    Nset10,
    /// Endpoint intersections are nonempty and land inside the edge set.
    Chyper1,
    /// Endpoint intersections have at least `r` elements and land
    /// inside the edge set.
    Chyper2(usize),
    /// Each edge's set intersects both endpoint sets.
    Chyper3,
    /// Adjacent edges get intersecting sets.
    Chyper4,
    /// Adjacent edges get disjoint sets.
    Chyper5,
}

impl fmt::Display for SetConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetConstraint::Nset1 => write!(f, "nset-1"),
            SetConstraint::Nset2 => write!(f, "nset-2"),
            SetConstraint::Nset3 => write!(f, "nset-3"),
            SetConstraint::Nset4 => write!(f, "nset-4"),
            SetConstraint::Nset5 => write!(f, "nset-5"),
            SetConstraint::Nset6 => write!(f, "nset-6"),
            SetConstraint::Nset7 => write!(f, "nset-7"),
            SetConstraint::Nset8 => write!(f, "nset-8"),
            SetConstraint::Nset9 => write!(f, "nset-9"),
            SetConstraint::Nset10 => write!(f, "nset-10"),
            SetConstraint::Chyper1 => write!(f, "chyper-1"),
            SetConstraint::Chyper2(r) => write!(f, "chyper-2:{r}"),
            SetConstraint::Chyper3 => write!(f, "chyper-3"),
            SetConstraint::Chyper4 => write!(f, "chyper-4"),
            SetConstraint::Chyper5 => write!(f, "chyper-5"),
        }
    }
}

impl FromStr for SetConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown set constraint {s:?}"));
        if let Some(n) = s.strip_prefix("nset-") {
            return match n {
                "1" => Ok(SetConstraint::Nset1),
                "2" => Ok(SetConstraint::Nset2),
                "3" => Ok(SetConstraint::Nset3),
                "4" => Ok(SetConstraint::Nset4),
                "5" => Ok(SetConstraint::Nset5),
                "6" => Ok(SetConstraint::Nset6),
                "7" => Ok(SetConstraint::Nset7),
                "8" => Ok(SetConstraint::Nset8),
                "9" => Ok(SetConstraint::Nset9),
                "10" => Ok(SetConstraint::Nset10),
                _ => Err(bad()),
            };
        }
        if let Some(n) = s.strip_prefix("chyper-") {
            return match n {
                "1" => Ok(SetConstraint::Chyper1),
                "3" => Ok(SetConstraint::Chyper3),
                "4" => Ok(SetConstraint::Chyper4),
                "5" => Ok(SetConstraint::Chyper5),
                _ => {
                    let r = match n.strip_prefix("2:") {
                        Some(r) => r.parse().map_err(|_| bad())?,
                        None if n == "2" => 2,
                        None => return Err(bad()),
                    };
                    if r < 2 {
                        return Err(Error::Parse(
                            "chyper-2 needs a rank of at least 2".into(),
                        ));
                    }
                    Ok(SetConstraint::Chyper2(r))
                }
            };
        }
        Err(bad())
    }
}

/// The set analogue of an edge constraint, checked existentially: every
/// edge needs elements `a` in `F(u)`, `b` in `F(v)` and `c` in `F(uv)`
/// related by the constraint.
///
/// The four constant kinds take the expected constant, or `None` to
/// search for one shared by all edges. The graceful and harmonious
/// kinds instead require the chosen edge elements to run through the
/// arithmetic set `{k, k+d, ..., k+(q-1)d}` once each; their parameters
/// follow the usual convention, both symbolic or both concrete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetMagic {
    /// `c + |b - a|` constant.
    EdgeDifference(Option<LinForm>),
    /// `a + c + b` constant.
    EdgeMagic(Option<LinForm>),
    /// `|a + b - c|` constant.
    FelicitousDifference(Option<LinForm>),
    /// `||a - b| - c|` constant.
    GracefulDifference(Option<LinForm>),
    /// `c = |a - b|`, edge elements forming the arithmetic set.
    Graceful { k: Param, d: Param },
    /// `c = a + b` modulo `q*d` shifted by k, edge elements forming the
    /// arithmetic set.
    Harmonious { k: Param, d: Param },
}

/// The elements that witnessed a magic constraint on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagicWitness {
    pub edge: (usize, usize),
    pub a: LinForm,
    pub b: LinForm,
    pub c: LinForm,
}

/// Outcome of a set-coloring verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetVerifyReport {
    pub pass: bool,
    /// The constant the magic check verified or discovered.
    pub constant_found: Option<LinForm>,
    /// The edge element assignment of the graceful or harmonious check,
    /// in edge order.
    pub edge_set_found: Vec<LinForm>,
    pub witnesses: Vec<MagicWitness>,
    pub violations: Vec<Violation>,
}

impl SetVerifyReport {
    fn empty() -> Self {
        SetVerifyReport {
            pass: true,
            constant_found: None,
            edge_set_found: Vec::new(),
            witnesses: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn flag(&mut self, site: impl Into<String>, reason: impl Into<String>) {
        self.pass = false;
        self.violations.push(Violation {
            site: site.into(),
            reason: reason.into(),
        });
    }
}

fn edge_site(u: usize, v: usize) -> String {
    format!("edge {u}-{v}")
}

/// Pairs of distinct edges sharing a vertex, each pair once.
fn adjacent_edge_pairs(g: &Graph) -> Vec<((usize, usize), (usize, usize))> {
    let mut out = Vec::new();
    for w in 0..g.p() {
        let nb = g.neighbors(w);
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                let e1 = (w.min(nb[i]), w.max(nb[i]));
                let e2 = (w.min(nb[j]), w.max(nb[j]));
                if e1 < e2 {
                    out.push((e1, e2));
                } else {
                    out.push((e2, e1));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Checks the requested conditions and the optional magic constraint of
/// a set-coloring against `g`. Missing sets are flagged rather than
/// rejected, so partial assignments report what they lack. All
/// existential searches are exhaustive over the involved sets.
pub fn verify_set_coloring(
    g: &Graph,
    sc: &SetColoring,
    constraints: &[SetConstraint],
    magic: Option<&SetMagic>,
) -> Result<SetVerifyReport> {
    let mut report = SetVerifyReport::empty();
    for &c in constraints {
        check_constraint(g, sc, c, &mut report);
    }
    if let Some(magic) = magic {
        check_magic(g, sc, magic, &mut report)?;
    }
    Ok(report)
}

fn check_constraint(g: &Graph, sc: &SetColoring, c: SetConstraint, report: &mut SetVerifyReport) {
    let missing_vertex = |v: usize, report: &mut SetVerifyReport| {
        report.flag(format!("vertex {v}"), format!("{c}: vertex has no set"));
    };
    let missing_edge = |u: usize, v: usize, report: &mut SetVerifyReport| {
        report.flag(edge_site(u, v), format!("{c}: edge has no set"));
    };
    type EdgeTest<'a> =
        &'a dyn Fn(&BTreeSet<LinForm>, &BTreeSet<LinForm>, &BTreeSet<LinForm>) -> Option<String>;
    type PairTest<'a> = &'a dyn Fn(&BTreeSet<LinForm>, &BTreeSet<LinForm>) -> Option<String>;
    // Conditions over one edge and both endpoint sets share this loop.
    let per_edge = |test: EdgeTest, needs_edge_set: bool, report: &mut SetVerifyReport| {
        for &(u, v) in g.edges() {
            let (Some(fu), Some(fv)) = (sc.vertex_set(u), sc.vertex_set(v)) else {
                if sc.vertex_set(u).is_none() {
                    missing_vertex(u, report);
                }
                if sc.vertex_set(v).is_none() {
                    missing_vertex(v, report);
                }
                continue;
            };
            let fe = match sc.edge_set(u, v) {
                Some(fe) => fe,
                None if needs_edge_set => {
                    missing_edge(u, v, report);
                    continue;
                }
                None => &BTreeSet::new(),
            };
            if let Some(reason) = test(fu, fv, fe) {
                report.flag(edge_site(u, v), reason);
            }
        }
    };
    let per_edge_pair =
        |test: PairTest, report: &mut SetVerifyReport| {
            for (e1, e2) in adjacent_edge_pairs(g) {
                let (Some(s1), Some(s2)) = (sc.edge_sets.get(&e1), sc.edge_sets.get(&e2)) else {
                    if !sc.edge_sets.contains_key(&e1) {
                        missing_edge(e1.0, e1.1, report);
                    }
                    if !sc.edge_sets.contains_key(&e2) {
                        missing_edge(e2.0, e2.1, report);
                    }
                    continue;
                };
                if let Some(reason) = test(s1, s2) {
                    report.flag(
                        format!("edges {}-{} and {}-{}", e1.0, e1.1, e2.0, e2.1),
                        reason,
                    );
                }
            }
        };
    match c {
        SetConstraint::Nset1 => {
            for v in 0..g.p() {
                if sc.vertex_set(v).is_none() {
                    missing_vertex(v, report);
                }
            }
        }
        SetConstraint::Nset2 => {
            for &(u, v) in g.edges() {
                if sc.edge_set(u, v).is_none() {
                    missing_edge(u, v, report);
                }
            }
        }
        SetConstraint::Nset3 => {
            check_constraint(g, sc, SetConstraint::Nset1, report);
            check_constraint(g, sc, SetConstraint::Nset2, report);
        }
        SetConstraint::Nset4 => per_edge(
            &|fu, fv, _| (fu == fv).then(|| format!("{c}: endpoint sets are equal")),
            false,
            report,
        ),
        SetConstraint::Nset5 => per_edge_pair(
            &|s1, s2| (s1 == s2).then(|| format!("{c}: adjacent edge sets are equal")),
            report,
        ),
        SetConstraint::Nset6 => per_edge(
            &|fu, fv, fe| {
                (fe == fu || fe == fv).then(|| format!("{c}: edge set equals an endpoint set"))
            },
            true,
            report,
        ),
        SetConstraint::Nset7 => {
            // Lambda is defined as the union here, so this can only
            // fail for a coloring with no sets at all.
            if sc.vertex_sets.is_empty() && sc.edge_sets.is_empty() {
                report.flag("coloring", format!("{c}: no sets are assigned"));
            }
        }
        SetConstraint::Nset8 => per_edge(
            &|fu, fv, _| {
                fu.intersection(fv)
                    .next()
                    .is_none()
                    .then(|| format!("{c}: endpoint sets are disjoint"))
            },
            false,
            report,
        ),
        SetConstraint::Nset9 | SetConstraint::Chyper4 => per_edge_pair(
            &|s1, s2| {
                s1.intersection(s2)
                    .next()
                    .is_none()
                    .then(|| format!("{c}: adjacent edge sets are disjoint"))
            },
            report,
        ),
        SetConstraint::Nset10 | SetConstraint::Chyper3 => per_edge(
            &|fu, fv, fe| {
                (fe.intersection(fu).next().is_none() || fe.intersection(fv).next().is_none())
                    .then(|| format!("{c}: edge set misses an endpoint set"))
            },
            true,
            report,
        ),
        SetConstraint::Chyper1 => per_edge(
            &|fu, fv, fe| {
                let mut inter = fu.intersection(fv).peekable();
                if inter.peek().is_none() {
                    return Some(format!("{c}: endpoint sets are disjoint"));
                }
                inter
                    .any(|x| !fe.contains(x))
                    .then(|| format!("{c}: endpoint intersection leaks out of the edge set"))
            },
            true,
            report,
        ),
        SetConstraint::Chyper2(r) => per_edge(
            &|fu, fv, fe| {
                let inter: Vec<_> = fu.intersection(fv).collect();
                if inter.len() < r {
                    return Some(format!("{c}: endpoint intersection has {} elements", inter.len()));
                }
                inter
                    .iter()
                    .any(|x| !fe.contains(x))
                    .then(|| format!("{c}: endpoint intersection leaks out of the edge set"))
            },
            true,
            report,
        ),
        SetConstraint::Chyper5 => per_edge_pair(
            &|s1, s2| {
                s1.intersection(s2)
                    .next()
                    .is_some()
                    .then(|| format!("{c}: adjacent edge sets intersect"))
            },
            report,
        ),
    }
}

/// Sets of one edge, in graph edge order, collapsed through `mode` like
/// the single-color verifier does.
struct EdgeSets {
    edge: (usize, usize),
    fu: Vec<LinForm>,
    fv: Vec<LinForm>,
    fe: Vec<LinForm>,
}

fn collapsed_edges(g: &Graph, sc: &SetColoring, mode: Option<(i128, i128)>) -> Vec<EdgeSets> {
    let val = |c: LinForm| match mode {
        None => c,
        Some((k0, d0)) => LinForm::int(c.eval(k0, d0)),
    };
    let mut out = Vec::new();
    for &(u, v) in g.edges() {
        let (fu, fv, fe) = (
            sc.vertex_set(u).expect("totality was checked"),
            sc.vertex_set(v).expect("totality was checked"),
            sc.edge_set(u, v).expect("totality was checked"),
        );
        let collapse = |s: &BTreeSet<LinForm>| {
            let out: BTreeSet<LinForm> = s.iter().map(|&c| val(c)).collect();
            out.into_iter().collect::<Vec<_>>()
        };
        out.push(EdgeSets {
            edge: (u, v),
            fu: collapse(fu),
            fv: collapse(fv),
            fe: collapse(fe),
        });
    }
    out
}

/// Magic checks need every involved set; flags each missing site once.
fn magic_totality(g: &Graph, sc: &SetColoring, report: &mut SetVerifyReport) -> bool {
    let mut ok = true;
    let ends: BTreeSet<usize> = g.edges().iter().flat_map(|&(u, v)| [u, v]).collect();
    for w in ends {
        if sc.vertex_set(w).is_none() {
            report.flag(format!("vertex {w}"), "magic: vertex has no set");
            ok = false;
        }
    }
    for &(u, v) in g.edges() {
        if sc.edge_set(u, v).is_none() {
            report.flag(edge_site(u, v), "magic: edge has no set");
            ok = false;
        }
    }
    ok
}

/// Greedy augmenting-path matching of edges to target values. `cands`
/// lists, per edge, the indices of targets it can take; returns one
/// target index per edge when a perfect matching exists.
fn perfect_matching(cands: &[Vec<usize>], targets: usize) -> Option<Vec<usize>> {
    fn augment(
        e: usize,
        cands: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &t in &cands[e] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            if owner[t].is_none() || augment(owner[t].unwrap(), cands, owner, seen) {
                owner[t] = Some(e);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; targets];
    for e in 0..cands.len() {
        let mut seen = vec![false; targets];
        if !augment(e, cands, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut assign = vec![usize::MAX; cands.len()];
    for (t, e) in owner.into_iter().enumerate() {
        if let Some(e) = e {
            assign[e] = t;
        }
    }
    Some(assign)
}

fn w_expr(magic: &SetMagic, a: LinForm, b: LinForm, c: LinForm) -> LinForm {
    match magic {
        SetMagic::EdgeDifference(_) => c + (b - a).abs_dom(),
        SetMagic::EdgeMagic(_) => a + c + b,
        SetMagic::FelicitousDifference(_) => (a + b - c).abs_dom(),
        SetMagic::GracefulDifference(_) => ((a - b).abs_dom() - c).abs_dom(),
        _ => unreachable!("only the constant kinds have a W expression"),
    }
}

fn check_magic(
    g: &Graph,
    sc: &SetColoring,
    magic: &SetMagic,
    report: &mut SetVerifyReport,
) -> Result<()> {
    match magic {
        SetMagic::EdgeDifference(want)
        | SetMagic::EdgeMagic(want)
        | SetMagic::FelicitousDifference(want)
        | SetMagic::GracefulDifference(want) => {
            if magic_totality(g, sc, report) {
                check_constant_magic(g, sc, magic, *want, report);
            }
            Ok(())
        }
        SetMagic::Graceful { k, d } | SetMagic::Harmonious { k, d } => {
            let harmonious = matches!(magic, SetMagic::Harmonious { .. });
            let points: Vec<(i128, i128)> = match (k, d) {
                (Param::Sym, Param::Sym) => CHECK_GRID.to_vec(),
                (Param::At(k0), Param::At(d0)) => {
                    if *k0 < 0 || *d0 < 1 {
                        return Err(Error::Precondition(format!(
                            "parameters need k >= 0 and d >= 1, got ({k0},{d0})"
                        )));
                    }
                    vec![(*k0, *d0)]
                }
                _ => {
                    return Err(Error::Precondition(
                        "mixed symbolic and concrete parameters are not supported".into(),
                    ))
                }
            };
            if !magic_totality(g, sc, report) {
                return Ok(());
            }
            // The graceful kind has an exact symbolic reading; the
            // harmonious one needs integers for its modulus.
            let symbolic_first = !harmonious && matches!(k, Param::Sym);
            let mut primary = true;
            if symbolic_first {
                check_arithmetic_magic(g, sc, harmonious, None, primary, report);
                primary = false;
            }
            for (k0, d0) in points {
                check_arithmetic_magic(g, sc, harmonious, Some((k0, d0)), primary, report);
                primary = false;
            }
            Ok(())
        }
    }
}

/// The four constant kinds: exact forms first, then every grid point,
/// each time asking for one constant that all edges can witness.
fn check_constant_magic(
    g: &Graph,
    sc: &SetColoring,
    magic: &SetMagic,
    want: Option<LinForm>,
    report: &mut SetVerifyReport,
) {
    let modes: Vec<Option<(i128, i128)>> = std::iter::once(None)
        .chain(CHECK_GRID.iter().map(|&p| Some(p)))
        .collect();
    let mut candidates: Option<BTreeSet<LinForm>> = None;
    for mode in modes {
        let edges = collapsed_edges(g, sc, mode);
        let val = |c: LinForm| match mode {
            None => c,
            Some((k0, d0)) => LinForm::int(c.eval(k0, d0)),
        };
        // All witnessable values per edge, then the running set of
        // exact constants that survive every mode so far.
        let mut shared: Option<BTreeSet<LinForm>> = None;
        for es in &edges {
            let mut values = BTreeSet::new();
            for &c in &es.fe {
                for &a in &es.fu {
                    for &b in &es.fv {
                        values.insert(w_expr(magic, a, b, c));
                    }
                }
            }
            shared = Some(match shared {
                None => values,
                Some(prev) => prev.intersection(&values).copied().collect(),
            });
        }
        let shared = shared.unwrap_or_default();
        match mode {
            None => {
                let mut found: BTreeSet<LinForm> = match want {
                    Some(c) => shared.contains(&c).then_some(c).into_iter().collect(),
                    None => shared,
                };
                if found.is_empty() {
                    report.flag(
                        "magic",
                        match want {
                            Some(c) => format!("no witnesses reach the constant {c} on every edge"),
                            None => "no constant is witnessed on every edge".to_string(),
                        },
                    );
                    return;
                }
                candidates = Some(std::mem::take(&mut found));
            }
            Some((k0, d0)) => {
                let cands = candidates.as_mut().unwrap();
                cands.retain(|c| shared.contains(&val(*c)));
                if cands.is_empty() {
                    report.flag(
                        "magic",
                        format!("no shared constant survives at (k,d)=({k0},{d0})"),
                    );
                    return;
                }
            }
        }
    }
    let constant = *candidates.unwrap().iter().next().unwrap();
    report.constant_found = Some(constant);
    // Record one witness per edge for the verified constant.
    let edges = collapsed_edges(g, sc, None);
    for es in &edges {
        'search: for &c in &es.fe {
            for &a in &es.fu {
                for &b in &es.fv {
                    if w_expr(magic, a, b, c) == constant {
                        report.witnesses.push(MagicWitness {
                            edge: es.edge,
                            a,
                            b,
                            c,
                        });
                        break 'search;
                    }
                }
            }
        }
    }
}

/// The graceful and harmonious kinds: every edge picks an element of
/// its set, witnessed by endpoint elements, and the picks run through
/// `{k, k+d, ..., k+(q-1)d}` once each.
fn check_arithmetic_magic(
    g: &Graph,
    sc: &SetColoring,
    harmonious: bool,
    mode: Option<(i128, i128)>,
    primary: bool,
    report: &mut SetVerifyReport,
) {
    let q = g.q() as i128;
    let edges = collapsed_edges(g, sc, mode);
    let val = |c: LinForm| match mode {
        None => c,
        Some((k0, d0)) => LinForm::int(c.eval(k0, d0)),
    };
    let targets: Vec<LinForm> = (0..q).map(|j| val(LinForm::kd(j))).collect();
    let fits = |a: LinForm, b: LinForm, c: LinForm| -> bool {
        if harmonious {
            // The k shift cancels: c - k and a + b - k agree modulo
            // q*d exactly when a + b - c does against zero.
            let (_, d0) = mode.expect("harmonious checks are pointwise");
            (a + b - c).dcoef.rem_euclid(q * d0) == 0
        } else {
            (a - b).abs_dom() == c
        }
    };
    // Candidate targets per edge, with one witness kept for each.
    let mut cands: Vec<Vec<usize>> = Vec::new();
    let mut witness: Vec<BTreeMap<usize, (LinForm, LinForm, LinForm)>> = Vec::new();
    for es in &edges {
        let mut own = Vec::new();
        let mut wit = BTreeMap::new();
        for (t, &target) in targets.iter().enumerate() {
            'search: for &c in &es.fe {
                if c != target {
                    continue;
                }
                for &a in &es.fu {
                    for &b in &es.fv {
                        if fits(a, b, c) {
                            own.push(t);
                            wit.insert(t, (a, b, c));
                            break 'search;
                        }
                    }
                }
            }
        }
        cands.push(own);
        witness.push(wit);
    }
    let suffix = match mode {
        None => String::new(),
        Some((k0, d0)) => format!(" at (k,d)=({k0},{d0})"),
    };
    match perfect_matching(&cands, targets.len()) {
        Some(assign) => {
            if primary {
                report.edge_set_found = assign.iter().map(|&t| targets[t]).collect();
                for (i, es) in edges.iter().enumerate() {
                    let (a, b, c) = witness[i][&assign[i]];
                    report.witnesses.push(MagicWitness {
                        edge: es.edge,
                        a,
                        b,
                        c,
                    });
                }
            }
        }
        None => {
            report.flag(
                "magic",
                format!("the edge sets cannot cover the arithmetic edge colors{suffix}"),
            );
        }
    }
}

/// The six families used to bundle a graph's split tree into one
/// set-coloring, in bundling order.
pub const BUNDLED_FAMILIES: [Family; 6] = [
    Family::Graceful,
    Family::Harmonious,
    Family::EdgeDifference,
    Family::EdgeMagic,
    Family::FelicitousDifference,
    Family::GracefulDifference,
];

/// A total set-coloring of any connected graph: split vertices until a
/// tree remains, color that tree in all six constraint families with
/// symbolic parameters, and give every original vertex and edge the
/// colors of its tree copies. Each family's constraint then holds
/// existentially on every edge, witnessed by that family's own colors.
pub fn graph_kd_total_set_coloring(g: &Graph, seed: u64) -> Result<SetColoring> {
    if g.q() == 0 {
        return Err(Error::Precondition(
            "the bundled set-coloring needs at least one edge".into(),
        ));
    }
    let (t, back) = vertex_split_to_tree(g, seed)?;
    let trace = peel_leaves(&t)?;
    let choices = ChoiceVector::zeros(trace.len() - 1);
    let colorings: Vec<TotalColoring> = BUNDLED_FAMILIES
        .iter()
        .map(|&fam| tree_kd_coloring(&t, fam, Param::Sym, Param::Sym, &choices))
        .collect::<Result<_>>()?;
    let mut out = SetColoring::new(EdgeRule::Explicit);
    for u in 0..g.p() {
        let set: BTreeSet<LinForm> = (0..t.p())
            .filter(|&c| back[c] == u)
            .flat_map(|c| colorings.iter().map(move |f| f.vertex(c).unwrap()))
            .collect();
        out.set_vertex_set(u, set)?;
    }
    for &(a, b) in t.edges() {
        let set: BTreeSet<LinForm> = colorings.iter().map(|f| f.edge(a, b).unwrap()).collect();
        let (u, v) = (back[a], back[b]);
        let merged = match out.edge_set(u, v) {
            Some(prev) => prev.union(&set).copied().collect(),
            None => set,
        };
        out.set_edge_set(u, v, merged)?;
    }
    debug_assert!(out.is_total_on(g), "splitting covers every vertex and edge");
    Ok(out)
}
