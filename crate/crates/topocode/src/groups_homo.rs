//! Every-zero Topcode-matrix groups and colored graph homomorphisms:
//! the additive and subtractive v-operations under a preappointed zero,
//! family generation by shifting vertex rows mod M, the C-1..C-8
//! conditions behind bipartite, graceful and odd-graceful colored
//! homomorphisms, color-driven vertex coinciding, and the edge-exchange
//! distance between colored trees on one labeled vertex set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::coloring_engine::TotalColoring;
use crate::graph_core::Graph;
use crate::topcode_matrix::{LinForm, TopcodeMatrix};
use crate::{Error, Result};

/// The registered edge function e = f(x, y) of a matrix family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFn {
    Sum,
    AbsDifference,
}

impl EdgeFn {
    pub fn apply(self, x: LinForm, y: LinForm) -> LinForm {
        match self {
            EdgeFn::Sum => x + y,
            EdgeFn::AbsDifference => (x - y).abs_dom(),
        }
    }
}

/// Representative of `v` mod `m` taken in [1, m].
fn rep(v: i128, m: i128) -> i128 {
    (v - 1).rem_euclid(m) + 1
}

/// A family {T^1, ..., T^m} of Topcode-matrices that is closed under
/// the entrywise operations x_i + x_j - x_k (mod M) and
/// x_i - x_j + x_k (mod M) for every preappointed zero T^k, with edge
/// rows always recomputed from vertex rows by the registered edge
/// function. Construction verifies closure exhaustively, so the group
/// operations on a built value cannot fail except through bad indices.
#[derive(Debug, Clone)]
pub struct MatrixGroup {
    members: Vec<TopcodeMatrix>,
    modulus: i128,
    edge_fn: EdgeFn,
}

impl MatrixGroup {
    pub fn new(members: Vec<TopcodeMatrix>, modulus: i128, edge_fn: EdgeFn) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Precondition("a group needs at least one member".into()));
        }
        if modulus < 1 {
            return Err(Error::Precondition("modulus must be positive".into()));
        }
        let q = members[0].q();
        for (idx, t) in members.iter().enumerate() {
            if t.q() != q {
                return Err(Error::Precondition(format!(
                    "member {} has {} columns, expected {q}",
                    idx + 1,
                    t.q()
                )));
            }
            for row in [&t.x, &t.y] {
                for &v in row.iter() {
                    if !v.is_pure_d() || v.dcoef < 1 || v.dcoef > modulus {
                        return Err(Error::Precondition(format!(
                            "member {} holds vertex entry {v} outside [1, {modulus}]",
                            idx + 1
                        )));
                    }
                }
            }
            for r in 0..q {
                let want = edge_fn.apply(t.x[r], t.y[r]);
                if t.e[r] != want {
                    return Err(Error::Precondition(format!(
                        "member {} column {} has edge entry {}, the edge function gives {want}",
                        idx + 1,
                        r + 1,
                        t.e[r]
                    )));
                }
            }
        }
        let group = MatrixGroup { members, modulus, edge_fn };
        for k in 1..=group.members.len() {
            for i in 1..=group.members.len() {
                for j in 1..=group.members.len() {
                    group.combine(i, j, k, false)?;
                    group.combine(i, j, k, true)?;
                }
            }
        }
        Ok(group)
    }

    pub fn members(&self) -> &[TopcodeMatrix] {
        &self.members
    }

    pub fn modulus(&self) -> i128 {
        self.modulus
    }

    pub fn edge_fn(&self) -> EdgeFn {
        self.edge_fn
    }

    /// Member T^i, 1-based like the index arithmetic.
    pub fn member(&self, i: usize) -> Result<&TopcodeMatrix> {
        self.check_index(i)?;
        Ok(&self.members[i - 1])
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.members.len() {
            return Err(Error::Precondition(format!(
                "index {i} is outside the family [1, {}]",
                self.members.len()
            )));
        }
        Ok(())
    }

    /// Entrywise combination under zero `k`, additive or subtractive,
    /// and the check that it lands exactly on the member the index
    /// arithmetic names.
    fn combine(&self, i: usize, j: usize, k: usize, sub: bool) -> Result<usize> {
        self.check_index(i)?;
        self.check_index(j)?;
        self.check_index(k)?;
        let (i_, j_, k_) = (i as i128, j as i128, k as i128);
        let raw = if sub { i_ - j_ + k_ } else { i_ + j_ - k_ };
        let lam = rep(raw, self.modulus);
        if lam as usize > self.members.len() {
            return Err(Error::Precondition(format!(
                "corrupt group: index {raw} lands on {lam}, past the last member"
            )));
        }
        let (ti, tj, tk) = (&self.members[i - 1], &self.members[j - 1], &self.members[k - 1]);
        let target = &self.members[lam as usize - 1];
        for r in 0..ti.q() {
            let entry = |a: LinForm, b: LinForm, c: LinForm| {
                let v = if sub {
                    a.dcoef - b.dcoef + c.dcoef
                } else {
                    a.dcoef + b.dcoef - c.dcoef
                };
                LinForm::int(rep(v, self.modulus))
            };
            let x = entry(ti.x[r], tj.x[r], tk.x[r]);
            let y = entry(ti.y[r], tj.y[r], tk.y[r]);
            let e = self.edge_fn.apply(x, y);
            if target.x[r] != x || target.y[r] != y || target.e[r] != e {
                return Err(Error::Precondition(format!(
                    "corrupt group: T^{i} {} T^{j} under zero T^{k} misses member T^{lam} \
                     at column {}",
                    if sub { "-" } else { "+" },
                    r + 1
                )));
            }
        }
        Ok(lam as usize)
    }
}

/// T^i + T^j under the preappointed zero T^k; returns the landing
/// index lambda = i+j-k (mod M) in [1, m].
pub fn group_add(g: &MatrixGroup, i: usize, j: usize, zero: usize) -> Result<usize> {
    g.combine(i, j, zero, false)
}

/// T^i - T^j under the preappointed zero T^k; returns the landing
/// index mu = i-j+k (mod M) in [1, m].
pub fn group_sub(g: &MatrixGroup, i: usize, j: usize, zero: usize) -> Result<usize> {
    g.combine(i, j, zero, true)
}

/// Generates the m = M members by shifting the base's vertex rows by
/// 0, 1, ..., M-1 (mod M, representatives in [1, M]) and recomputing
/// every edge row through `f`, then verifies group closure.
pub fn build_every_zero_family(
    base: &TopcodeMatrix,
    modulus: i128,
    f: EdgeFn,
) -> Result<MatrixGroup> {
    if modulus < 1 {
        return Err(Error::Precondition("modulus must be positive".into()));
    }
    let shifted = |v: LinForm, by: i128| -> Result<LinForm> {
        if !v.is_pure_d() || v.dcoef < 1 || v.dcoef > modulus {
            return Err(Error::Precondition(format!(
                "base vertex entry {v} is outside [1, {modulus}]"
            )));
        }
        Ok(LinForm::int(rep(v.dcoef + by, modulus)))
    };
    let mut members = Vec::with_capacity(modulus as usize);
    for i in 0..modulus {
        let x: Vec<LinForm> = base.x.iter().map(|&v| shifted(v, i)).collect::<Result<_>>()?;
        let y: Vec<LinForm> = base.y.iter().map(|&v| shifted(v, i)).collect::<Result<_>>()?;
        let e: Vec<LinForm> = x.iter().zip(&y).map(|(&a, &b)| f.apply(a, b)).collect();
        members.push(TopcodeMatrix { x, e, y });
    }
    if members[0].e != base.e {
        return Err(Error::Precondition(
            "the base edge row disagrees with the registered edge function".into(),
        ));
    }
    MatrixGroup::new(members, modulus, f)
}

/// The five colored-homomorphism flavors, each a fixed subset of the
/// conditions C-1..C-8 reported by [`homo_conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomoKind {
    Bipartitely,
    Gracefully,
    SetOrderedGracefully,
    OddGracefully,
    SetOrderedOddGracefully,
}

impl HomoKind {
    /// Required conditions as 1-based C-indices.
    pub fn required(self) -> &'static [usize] {
        match self {
            HomoKind::Bipartitely => &[1],
            HomoKind::Gracefully => &[2, 3, 4, 6],
            HomoKind::SetOrderedGracefully => &[2, 3, 4, 6, 8],
            HomoKind::OddGracefully => &[2, 3, 5, 7],
            HomoKind::SetOrderedOddGracefully => &[2, 3, 5, 7, 8],
        }
    }
}

/// Resolved sides of a graph: the declared bipartition when present,
/// otherwise any 2-coloring, or None for non-bipartite graphs.
fn sides(g: &Graph) -> Option<(BTreeSet<usize>, BTreeSet<usize>)> {
    if let Some((x, y)) = g.bipartition() {
        return Some((x.iter().copied().collect(), y.iter().copied().collect()));
    }
    let (x, y) = g.auto_bipartition().ok()?;
    Some((x.into_iter().collect(), y.into_iter().collect()))
}

fn validate_map(t: &Graph, h: &Graph, phi: &BTreeMap<usize, usize>) -> Result<()> {
    for v in 0..t.p() {
        match phi.get(&v) {
            None => {
                return Err(Error::Precondition(format!(
                    "the vertex map is partial: vertex {v} has no image"
                )))
            }
            Some(&w) if w >= h.p() => {
                return Err(Error::Precondition(format!(
                    "vertex {v} maps to {w}, past the target graph"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

fn preserves_edges(t: &Graph, h: &Graph, phi: &BTreeMap<usize, usize>) -> bool {
    t.edges()
        .iter()
        .all(|&(u, v)| phi[&u] != phi[&v] && h.has_edge(phi[&u], phi[&v]))
}

/// True when every color in `it` is the plain integer range [lo, hi].
fn colors_in_range<I: Iterator<Item = LinForm>>(it: I, lo: i128, hi: i128) -> bool {
    let mut any = false;
    for c in it {
        if !c.is_pure_d() || c.dcoef < lo || c.dcoef > hi {
            return false;
        }
        any = true;
    }
    any
}

fn ints(colors: &BTreeSet<LinForm>) -> Option<BTreeSet<i128>> {
    colors
        .iter()
        .map(|c| c.is_pure_d().then_some(c.dcoef))
        .collect()
}

fn set_ordered(g: &Graph, f: &TotalColoring) -> bool {
    let Some((a, b)) = sides(g) else { return false };
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let colors = |s: &BTreeSet<usize>| -> Vec<LinForm> {
        s.iter().filter_map(|&v| f.vertex(v)).collect()
    };
    let (ca, cb) = (colors(&a), colors(&b));
    let (max_a, min_a) = (ca.iter().max().unwrap(), ca.iter().min().unwrap());
    let (max_b, min_b) = (cb.iter().max().unwrap(), cb.iter().min().unwrap());
    max_a < min_b || max_b < min_a
}

/// Evaluates the conditions C-1..C-8 for an edge-preserving map
/// phi: V(T) -> V(H) between totally colored graphs; entry i-1 of the
/// result reports C-i. Conditions over H's edges read the image edges
/// {phi(u)phi(v)}. The integer range and edge set conditions C-4..C-7
/// hold only for plain integer colors; C-7 reads the odd edge color
/// set {1, 3, ..., 2q-1}.
pub fn homo_conditions(
    t: &Graph,
    h: &Graph,
    phi: &BTreeMap<usize, usize>,
    f: &TotalColoring,
    g: &TotalColoring,
) -> Result<[bool; 8]> {
    validate_map(t, h, phi)?;
    for (graph, coloring, name) in [(t, f, "source"), (h, g, "target")] {
        if !coloring.is_total_on(graph) {
            return Err(Error::Precondition(format!(
                "the {name} coloring is not total on its graph"
            )));
        }
    }
    if !preserves_edges(t, h, phi) {
        return Err(Error::Precondition(
            "the map does not preserve edges, so no colored conditions apply".into(),
        ));
    }
    let (q, q2) = (t.q() as i128, h.q() as i128);
    let image_edges: BTreeSet<(usize, usize)> = t
        .edges()
        .iter()
        .map(|&(u, v)| (phi[&u].min(phi[&v]), phi[&u].max(phi[&v])))
        .collect();

    let c1 = (|| {
        let (tx, _) = sides(t)?;
        let (hx, hy) = sides(h)?;
        let mut low_image = BTreeSet::new();
        let mut high_image = BTreeSet::new();
        for &(u, v) in t.edges() {
            let (xu, yv) = if tx.contains(&u) { (u, v) } else { (v, u) };
            low_image.insert(phi[&xu]);
            high_image.insert(phi[&yv]);
        }
        let respects = (low_image.is_subset(&hx) && high_image.is_subset(&hy))
            || (low_image.is_subset(&hy) && high_image.is_subset(&hx));
        Some(respects)
    })()
    .unwrap_or(false);

    let c2 = t
        .edges()
        .iter()
        .all(|&(u, v)| f.edge(u, v) == Some((f.vertex(u).unwrap() - f.vertex(v).unwrap()).abs_dom()))
        && image_edges.iter().all(|&(a, b)| {
            g.edge(a, b) == Some((g.vertex(a).unwrap() - g.vertex(b).unwrap()).abs_dom())
        });

    let c3 = t
        .edges()
        .iter()
        .all(|&(u, v)| f.edge(u, v) == g.edge(phi[&u], phi[&v]));

    let vt = (0..t.p()).map(|v| f.vertex(v).unwrap());
    let vh = (0..h.p()).map(|v| g.vertex(v).unwrap());
    let c4 = colors_in_range(vt.clone(), 1, q + 1) && colors_in_range(vh.clone(), 1, q2 + 1);
    let c5 = colors_in_range(vt, 1, 2 * q + 2) && colors_in_range(vh, 1, 2 * q2 + 2);

    let f_edges: BTreeSet<LinForm> = t.edges().iter().map(|&(u, v)| f.edge(u, v).unwrap()).collect();
    let g_edges: BTreeSet<LinForm> = image_edges.iter().map(|&(a, b)| g.edge(a, b).unwrap()).collect();
    let edge_sets_are = |want_t: BTreeSet<i128>, want_h: BTreeSet<i128>| -> bool {
        q == q2
            && ints(&f_edges).is_some_and(|s| s == want_t)
            && ints(&g_edges).is_some_and(|s| s == want_h)
    };
    let c6 = edge_sets_are((1..=q).collect(), (1..=q2).collect());
    let c7 = edge_sets_are(
        (0..q).map(|j| 2 * j + 1).collect(),
        (0..q2).map(|j| 2 * j + 1).collect(),
    );

    let c8 = set_ordered(t, f) && set_ordered(h, g);

    Ok([c1, c2, c3, c4, c5, c6, c7, c8])
}

/// Checks phi: V(T) -> V(H) for edge preservation, and in colored mode
/// additionally for the condition subset of the requested flavor. Edge
/// failures answer false; a partial or out-of-range map is an error.
pub fn homomorphism_check(
    t: &Graph,
    h: &Graph,
    phi: &BTreeMap<usize, usize>,
    colored: Option<(&TotalColoring, &TotalColoring, HomoKind)>,
) -> Result<bool> {
    validate_map(t, h, phi)?;
    if !preserves_edges(t, h, phi) {
        return Ok(false);
    }
    match colored {
        None => Ok(true),
        Some((f, g, kind)) => {
            let c = homo_conditions(t, h, phi, f, g)?;
            Ok(kind.required().iter().all(|&i| c[i - 1]))
        }
    }
}

/// Merges same-colored vertices of a colored graph into one vertex
/// each and returns the quotient, the vertex map, and the induced
/// coloring. By default every color class merges; explicit classes
/// restrict the merging (unlisted vertices stay put). Merging adjacent
/// vertices would create a loop and is rejected, as are parallel edges
/// that disagree in color; parallel edges of one color collapse to a
/// single edge. The quotient keeps a declared bipartition only when
/// every merge class sits inside one side.
pub fn coincide_same_colors(
    t: &Graph,
    f: &TotalColoring,
    classes: Option<&[Vec<usize>]>,
) -> Result<(Graph, BTreeMap<usize, usize>, TotalColoring)> {
    if !f.is_total_on(t) {
        return Err(Error::Precondition("coloring is not total on the graph".into()));
    }
    let mut groups: Vec<Vec<usize>> = match classes {
        None => {
            let mut by_color: BTreeMap<LinForm, Vec<usize>> = BTreeMap::new();
            for v in 0..t.p() {
                by_color.entry(f.vertex(v).unwrap()).or_default().push(v);
            }
            by_color.into_values().collect()
        }
        Some(explicit) => {
            let mut seen = BTreeSet::new();
            for class in explicit {
                if class.is_empty() {
                    return Err(Error::Precondition("empty merge class".into()));
                }
                for &v in class {
                    if v >= t.p() {
                        return Err(Error::Precondition(format!(
                            "merge class names vertex {v}, past the graph"
                        )));
                    }
                    if !seen.insert(v) {
                        return Err(Error::Precondition(format!(
                            "vertex {v} appears in two merge classes"
                        )));
                    }
                }
                let color = f.vertex(class[0]).unwrap();
                if class.iter().any(|&v| f.vertex(v).unwrap() != color) {
                    return Err(Error::Precondition(
                        "a merge class mixes colors, the induced coloring would be \
                         ill-defined"
                            .into(),
                    ));
                }
            }
            let mut groups: Vec<Vec<usize>> = explicit.to_vec();
            groups.extend((0..t.p()).filter(|v| !seen.contains(v)).map(|v| vec![v]));
            groups
        }
    };
    for class in &mut groups {
        class.sort_unstable();
        for (a, &u) in class.iter().enumerate() {
            for &v in &class[a + 1..] {
                if t.has_edge(u, v) {
                    return Err(Error::Precondition(format!(
                        "vertices {u} and {v} are adjacent and share a color; merging \
                         them would create a loop"
                    )));
                }
            }
        }
    }
    groups.sort_by_key(|class| class[0]);
    let mut phi = BTreeMap::new();
    for (new_id, class) in groups.iter().enumerate() {
        for &v in class {
            phi.insert(v, new_id);
        }
    }
    let mut edge_colors: BTreeMap<(usize, usize), LinForm> = BTreeMap::new();
    for &(u, v) in t.edges() {
        let (a, b) = (phi[&u].min(phi[&v]), phi[&u].max(phi[&v]));
        let color = f.edge(u, v).unwrap();
        match edge_colors.get(&(a, b)) {
            Some(&c) if c != color => {
                return Err(Error::Precondition(format!(
                    "parallel edges between classes {a} and {b} carry colors {c} and \
                     {color}, the induced coloring would be ill-defined"
                )));
            }
            _ => {
                edge_colors.insert((a, b), color);
            }
        }
    }
    let edges: Vec<(usize, usize)> = edge_colors.keys().copied().collect();
    let mut quotient = Graph::new(groups.len(), &edges)?;
    if let Some((x, _)) = t.bipartition() {
        let x: BTreeSet<usize> = x.iter().copied().collect();
        let pure = groups
            .iter()
            .all(|class| class.iter().all(|v| x.contains(v)) || class.iter().all(|v| !x.contains(v)));
        if pure {
            let low: Vec<usize> = groups
                .iter()
                .enumerate()
                .filter(|(_, class)| x.contains(&class[0]))
                .map(|(i, _)| i)
                .collect();
            let high: Vec<usize> = (0..groups.len()).filter(|i| !low.contains(i)).collect();
            quotient = quotient.with_bipartition(&low, &high)?;
        }
    }
    let mut coloring = TotalColoring::new();
    for (new_id, class) in groups.iter().enumerate() {
        coloring.set_vertex(new_id, f.vertex(class[0]).unwrap());
    }
    for (&(a, b), &c) in &edge_colors {
        coloring.set_edge(a, b, c);
    }
    Ok((quotient, phi, coloring))
}

/// Largest edge count [`pm_e_distance`] accepts.
pub const PM_DISTANCE_Q_LIMIT: usize = 6;

/// Fewest edge-exchange moves carrying the first colored tree into the
/// second, where a move removes one edge and adds one absent edge and
/// every intermediate stage must be a tree. Vertices are identified
/// across the two trees by their colors, so both need distinct vertex
/// colors drawn from one common set. Answers None when the distance
/// exceeds `bound`.
pub fn pm_e_distance(
    t1: &Graph,
    f1: &TotalColoring,
    t2: &Graph,
    f2: &TotalColoring,
    bound: usize,
) -> Result<Option<usize>> {
    for (t, f, name) in [(t1, f1, "first"), (t2, f2, "second")] {
        if !t.is_tree() {
            return Err(Error::Precondition(format!("the {name} input is not a tree")));
        }
        if !f.is_total_on(t) {
            return Err(Error::Precondition(format!(
                "the {name} coloring is not total on its tree"
            )));
        }
    }
    if t1.q() != t2.q() {
        return Err(Error::Precondition(format!(
            "edge counts differ: {} and {}",
            t1.q(),
            t2.q()
        )));
    }
    if t1.q() > PM_DISTANCE_Q_LIMIT {
        return Err(Error::TooLarge(format!(
            "the exchange walk is limited to q <= {PM_DISTANCE_Q_LIMIT}, got q = {}",
            t1.q()
        )));
    }
    let color_ids = |t: &Graph, f: &TotalColoring| -> Result<BTreeMap<LinForm, usize>> {
        let set: BTreeSet<LinForm> = (0..t.p()).map(|v| f.vertex(v).unwrap()).collect();
        if set.len() != t.p() {
            return Err(Error::Precondition(
                "repeated vertex colors, vertices cannot be identified across the trees"
                    .into(),
            ));
        }
        Ok(set.into_iter().enumerate().map(|(i, c)| (c, i)).collect())
    };
    let rank = color_ids(t1, f1)?;
    if rank != color_ids(t2, f2)? {
        return Err(Error::Precondition(
            "the two trees use different vertex color sets".into(),
        ));
    }
    let canon = |t: &Graph, f: &TotalColoring| -> BTreeSet<(usize, usize)> {
        t.edges()
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (rank[&f.vertex(u).unwrap()], rank[&f.vertex(v).unwrap()]);
                (a.min(b), a.max(b))
            })
            .collect()
    };
    let start = canon(t1, f1);
    let goal = canon(t2, f2);
    if start == goal {
        return Ok(Some(0));
    }
    let p = t1.p();
    let mut seen: BTreeSet<BTreeSet<(usize, usize)>> = BTreeSet::from([start.clone()]);
    let mut frontier = VecDeque::from([(start, 0usize)]);
    while let Some((state, depth)) = frontier.pop_front() {
        if depth >= bound {
            continue;
        }
        for &rm in &state {
            for a in 0..p {
                for b in (a + 1)..p {
                    if state.contains(&(a, b)) {
                        continue;
                    }
                    let mut next = state.clone();
                    next.remove(&rm);
                    next.insert((a, b));
                    if seen.contains(&next) {
                        continue;
                    }
                    let edges: Vec<(usize, usize)> = next.iter().copied().collect();
                    if !Graph::new(p, &edges)?.is_tree() {
                        continue;
                    }
                    if next == goal {
                        return Ok(Some(depth + 1));
                    }
                    seen.insert(next.clone());
                    frontier.push_back((next, depth + 1));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring_engine::{Family, Param};
    use crate::constructors::{tree_kd_coloring, ChoiceVector};
    use crate::graph_core::{random_tree, vertex_split_to_tree};
    use crate::topcode_matrix::from_colored_graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(x: &[i128], e: &[i128], y: &[i128]) -> TopcodeMatrix {
        TopcodeMatrix::from_int_rows(x, e, y).unwrap()
    }

    fn star_family() -> MatrixGroup {
        let base = matrix(&[1, 1, 1], &[3, 4, 5], &[2, 3, 4]);
        build_every_zero_family(&base, 4, EdgeFn::Sum).unwrap()
    }

    #[test]
    fn shifting_the_star_base_regenerates_all_four_members() {
        let g = star_family();
        assert_eq!(g.members().len(), 4);
        assert_eq!(g.member(2).unwrap(), &matrix(&[2, 2, 2], &[5, 6, 3], &[3, 4, 1]));
        assert_eq!(g.member(3).unwrap(), &matrix(&[3, 3, 3], &[7, 4, 5], &[4, 1, 2]));
        assert_eq!(g.member(4).unwrap(), &matrix(&[4, 4, 4], &[5, 6, 7], &[1, 2, 3]));
    }

    #[test]
    fn star_addition_under_zero_two_lands_on_member_two() {
        let g = star_family();
        assert_eq!(group_add(&g, 1, 3, 2).unwrap(), 2);
        for i in 1..=4 {
            assert_eq!(group_add(&g, i, i, i).unwrap(), i);
        }
    }

    #[test]
    fn every_zero_has_identity_and_inverses() {
        for m in 2..=8i128 {
            let one_col = matrix(&[1], &[2], &[1]);
            let g = build_every_zero_family(&one_col, m, EdgeFn::Sum).unwrap();
            for k in 1..=m as usize {
                for i in 1..=m as usize {
                    assert_eq!(group_add(&g, i, k, k).unwrap(), i);
                    let j = rep(2 * k as i128 - i as i128, m) as usize;
                    assert_eq!(group_add(&g, i, j, k).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn add_then_sub_is_the_identity() {
        let g = star_family();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (i, j, k) = (
                rng.gen_range(1..=4),
                rng.gen_range(1..=4),
                rng.gen_range(1..=4),
            );
            let lam = group_add(&g, i, j, k).unwrap();
            assert_eq!(group_sub(&g, lam, j, k).unwrap(), i);
        }
    }

    #[test]
    fn abs_difference_families_close_at_small_moduli() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..=6i128 {
            let q = 3;
            let x: Vec<i128> = (0..q).map(|_| rng.gen_range(1..=m)).collect();
            let y: Vec<i128> = (0..q).map(|_| rng.gen_range(1..=m)).collect();
            let e: Vec<i128> = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).collect();
            let base = matrix(&x, &e, &y);
            let g = build_every_zero_family(&base, m, EdgeFn::AbsDifference).unwrap();
            assert_eq!(g.members().len(), m as usize);
        }
    }

    #[test]
    fn modulus_one_gives_the_trivial_group() {
        let base = matrix(&[1], &[2], &[1]);
        let g = build_every_zero_family(&base, 1, EdgeFn::Sum).unwrap();
        assert_eq!(g.members().len(), 1);
        assert_eq!(group_add(&g, 1, 1, 1).unwrap(), 1);
        assert_eq!(group_sub(&g, 1, 1, 1).unwrap(), 1);
    }

    #[test]
    fn tampered_members_are_rejected() {
        let g = star_family();
        let mut members = g.members().to_vec();
        members[2].y[1] = LinForm::int(2);
        members[2].e[1] = LinForm::int(5);
        assert!(MatrixGroup::new(members, 4, EdgeFn::Sum).is_err());
        // An edge row out of step with the edge function is caught
        // before any closure check.
        let mut members = g.members().to_vec();
        members[0].e[0] = LinForm::int(9);
        assert!(MatrixGroup::new(members, 4, EdgeFn::Sum).is_err());
    }

    fn identity_map(p: usize) -> BTreeMap<usize, usize> {
        (0..p).map(|v| (v, v)).collect()
    }

    #[test]
    fn identity_is_a_plain_homomorphism() {
        let g = random_tree(7, 3);
        let phi = identity_map(g.p());
        assert!(homomorphism_check(&g, &g, &phi, None).unwrap());
        let mut partial = phi.clone();
        partial.remove(&0);
        assert!(homomorphism_check(&g, &g, &partial, None).is_err());
    }

    #[test]
    fn split_trees_map_homomorphically_onto_their_graph() {
        let c5 = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let k4 = Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        for g in [c5, k4] {
            for seed in 0..5 {
                let (tree, back) = vertex_split_to_tree(&g, seed).unwrap();
                let phi: BTreeMap<usize, usize> =
                    back.iter().enumerate().map(|(v, &w)| (v, w)).collect();
                assert!(homomorphism_check(&tree, &g, &phi, None).unwrap());
            }
        }
    }

    #[test]
    fn shifted_graceful_path_is_gracefully_homomorphic_to_itself() {
        // P4 with vertex colors 1, 4, 2, 3: edges |.| give {3, 2, 1}.
        let p4 = Graph::new(4, &[(0, 1), (1, 2), (2, 3)])
            .unwrap()
            .with_bipartition(&[0, 2], &[1, 3])
            .unwrap();
        let mut f = TotalColoring::new();
        for (v, c) in [(0, 1), (1, 4), (2, 2), (3, 3)] {
            f.set_vertex(v, LinForm::int(c));
        }
        for &(u, v) in p4.edges() {
            let d = (f.vertex(u).unwrap() - f.vertex(v).unwrap()).abs_dom();
            f.set_edge(u, v, d);
        }
        let phi = identity_map(4);
        let c = homo_conditions(&p4, &p4, &phi, &f, &f).unwrap();
        assert!(c[0], "bipartite sides and a side-respecting map");
        assert!(c[1] && c[2] && c[3] && c[5], "C-2, C-3, C-4, C-6");
        assert!(c[7], "colors 1,2 sit below 3,4, so the sides are ordered");
        for kind in [
            HomoKind::Bipartitely,
            HomoKind::Gracefully,
            HomoKind::SetOrderedGracefully,
        ] {
            assert!(homomorphism_check(&p4, &p4, &phi, Some((&f, &f, kind))).unwrap());
        }
        // The edge colors fill [1,3], not the odd set {1,3,5}.
        assert!(!homomorphism_check(
            &p4,
            &p4,
            &phi,
            Some((&f, &f, HomoKind::OddGracefully))
        )
        .unwrap());
    }

    #[test]
    fn odd_graceful_path_is_set_ordered_odd_gracefully_homomorphic() {
        // P3 with vertex colors 2, 1, 4: edge colors 1 and 3.
        let p3 = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mut f = TotalColoring::new();
        for (v, c) in [(0, 2), (1, 1), (2, 4)] {
            f.set_vertex(v, LinForm::int(c));
        }
        f.set_edge(0, 1, LinForm::int(1));
        f.set_edge(1, 2, LinForm::int(3));
        let phi = identity_map(3);
        for kind in [HomoKind::OddGracefully, HomoKind::SetOrderedOddGracefully] {
            assert!(homomorphism_check(&p3, &p3, &phi, Some((&f, &f, kind))).unwrap());
        }
        assert!(!homomorphism_check(&p3, &p3, &phi, Some((&f, &f, HomoKind::Gracefully))).unwrap());
    }

    #[test]
    fn all_distinct_colors_coincide_to_the_identity() {
        let t = random_tree(6, 1);
        let f = tree_kd_coloring(
            &t,
            Family::EdgeDifference,
            Param::Sym,
            Param::Sym,
            &ChoiceVector::zeros(peel_choices(&t)),
        )
        .unwrap();
        let distinct: BTreeSet<LinForm> = (0..t.p()).map(|v| f.vertex(v).unwrap()).collect();
        assert_eq!(distinct.len(), t.p(), "fixture needs all-distinct colors");
        let (g, phi, fg) = coincide_same_colors(&t, &f, None).unwrap();
        assert_eq!(g.p(), t.p());
        assert_eq!(g.edges(), t.edges());
        assert!((0..t.p()).all(|v| phi[&v] == v));
        assert_eq!(fg, f);
    }

    fn peel_choices(t: &Graph) -> usize {
        crate::graph_core::peel_leaves(t).unwrap().len() - 1
    }

    #[test]
    fn same_colored_star_leaves_merge_and_drop_an_edge() {
        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut f = TotalColoring::new();
        f.set_vertex(0, LinForm::int(0));
        f.set_vertex(1, LinForm::kd(0));
        f.set_vertex(2, LinForm::kd(2));
        f.set_vertex(3, LinForm::kd(2));
        f.set_edge(0, 1, LinForm::kd(0));
        f.set_edge(0, 2, LinForm::kd(2));
        f.set_edge(0, 3, LinForm::kd(2));
        let (g, phi, fg) = coincide_same_colors(&star, &f, None).unwrap();
        assert_eq!(g.p(), 3);
        assert_eq!(g.q(), 2);
        assert_eq!(phi[&2], phi[&3]);
        assert!(fg.is_total_on(&g));
        assert!(homomorphism_check(&star, &g, &phi, None).unwrap());

        // Distinct parallel edge colors make the quotient ill-defined.
        f.set_edge(0, 3, LinForm::kd(3));
        assert!(coincide_same_colors(&star, &f, None).is_err());
        // Adjacent same-colored vertices would merge into a loop.
        f.set_edge(0, 3, LinForm::kd(2));
        f.set_vertex(0, LinForm::kd(2));
        f.set_edge(0, 1, LinForm::int(0));
        assert!(coincide_same_colors(&star, &f, None).is_err());
    }

    #[test]
    fn merging_a_repeated_color_keeps_the_quotient_graceful() {
        // Find a tree whose graceful coloring repeats a vertex color on
        // vertices with disjoint neighborhoods, then quotient it.
        for seed in 0..400 {
            let t = random_tree(8, seed);
            let f = tree_kd_coloring(
                &t,
                Family::Graceful,
                Param::Sym,
                Param::Sym,
                &ChoiceVector::zeros(peel_choices(&t)),
            )
            .unwrap();
            let mut by_color: BTreeMap<LinForm, Vec<usize>> = BTreeMap::new();
            for v in 0..t.p() {
                by_color.entry(f.vertex(v).unwrap()).or_default().push(v);
            }
            if by_color.values().all(|class| class.len() == 1) {
                continue;
            }
            let mergeable = by_color.values().all(|class| {
                let mut hit = BTreeSet::new();
                class
                    .iter()
                    .all(|&v| t.neighbors(v).into_iter().all(|w| hit.insert(w)))
            });
            if !mergeable {
                continue;
            }
            let (g, phi, fg) = coincide_same_colors(&t, &f, None).unwrap();
            assert!(g.p() < t.p());
            assert_eq!(g.q(), t.q(), "no parallel edges merged");
            assert!(homomorphism_check(&t, &g, &phi, None).unwrap());
            let c = homo_conditions(&t, &g, &phi, &f, &fg).unwrap();
            assert!(c[1], "edge colors stay absolute differences");
            assert!(c[2], "edge colors are preserved pointwise");
            assert!((0..t.p()).all(|v| f.vertex(v) == fg.vertex(phi[&v])));
            let before = from_colored_graph(&t, &f).unwrap();
            let after = from_colored_graph(&g, &fg).unwrap();
            assert!(before.multiset_eq(&after));
            return;
        }
        panic!("no mergeable fixture found in 400 seeds");
    }

    fn labeled(edges: &[(usize, usize)]) -> (Graph, TotalColoring) {
        let g = Graph::new(4, edges).unwrap();
        let mut f = TotalColoring::new();
        for v in 0..4 {
            f.set_vertex(v, LinForm::int(v as i128 + 1));
        }
        for &(u, v) in edges {
            f.set_edge(u, v, LinForm::int(9));
        }
        (g, f)
    }

    type EdgeLists = Vec<Vec<(usize, usize)>>;

    /// All 16 labeled trees on 4 vertices with pairwise move distances
    /// computed over the explicit exchange graph.
    fn four_vertex_oracle() -> (EdgeLists, Vec<Vec<usize>>) {
        let pairs: Vec<(usize, usize)> = (0..4)
            .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
            .collect();
        let mut trees = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                for k in (j + 1)..6 {
                    let edges = vec![pairs[i], pairs[j], pairs[k]];
                    if Graph::new(4, &edges).unwrap().is_tree() {
                        trees.push(edges);
                    }
                }
            }
        }
        assert_eq!(trees.len(), 16);
        let big = usize::MAX / 2;
        let mut dist = vec![vec![big; 16]; 16];
        for (a, ta) in trees.iter().enumerate() {
            dist[a][a] = 0;
            for (b, tb) in trees.iter().enumerate() {
                let shared = ta.iter().filter(|e| tb.contains(e)).count();
                if shared == 2 {
                    dist[a][b] = 1;
                }
            }
        }
        for via in 0..16 {
            for a in 0..16 {
                for b in 0..16 {
                    dist[a][b] = dist[a][b].min(dist[a][via] + dist[via][b]);
                }
            }
        }
        (trees, dist)
    }

    #[test]
    fn exchange_distances_match_the_exhaustive_oracle() {
        let (trees, want) = four_vertex_oracle();
        let colored: Vec<(Graph, TotalColoring)> =
            trees.iter().map(|e| labeled(e)).collect();
        for a in 0..16 {
            for b in 0..16 {
                let (ta, fa) = &colored[a];
                let (tb, fb) = &colored[b];
                let got = pm_e_distance(ta, fa, tb, fb, 6).unwrap();
                assert_eq!(got, Some(want[a][b]), "pair ({a}, {b})");
                let back = pm_e_distance(tb, fb, ta, fa, 6).unwrap();
                assert_eq!(got, back, "distances are symmetric");
            }
        }
        for (a, b, c) in [(0, 5, 11), (2, 7, 14), (1, 9, 15)] {
            assert!(want[a][c] <= want[a][b] + want[b][c]);
        }
    }

    #[test]
    fn path_to_star_takes_two_moves_and_bounds_cut_off() {
        let (path, fp) = labeled(&[(0, 1), (1, 2), (2, 3)]);
        let (star, fs) = labeled(&[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(pm_e_distance(&path, &fp, &star, &fs, 6).unwrap(), Some(2));
        assert_eq!(pm_e_distance(&path, &fp, &star, &fs, 1).unwrap(), None);
        assert_eq!(pm_e_distance(&path, &fp, &path, &fp, 0).unwrap(), Some(0));
    }

    #[test]
    fn exchange_distance_rejects_mismatched_inputs() {
        let (path, fp) = labeled(&[(0, 1), (1, 2), (2, 3)]);
        let (mut star, mut fs) = labeled(&[(0, 1), (0, 2), (0, 3)]);
        fs.set_vertex(3, LinForm::int(9));
        assert!(pm_e_distance(&path, &fp, &star, &fs, 6).is_err());
        let (k2, f2) = {
            let g = Graph::new(2, &[(0, 1)]).unwrap();
            let mut f = TotalColoring::new();
            f.set_vertex(0, LinForm::int(1));
            f.set_vertex(1, LinForm::int(2));
            f.set_edge(0, 1, LinForm::int(9));
            (g, f)
        };
        assert!(pm_e_distance(&path, &fp, &k2, &f2, 6).is_err());
        star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        fs = TotalColoring::new();
        for v in 0..4 {
            fs.set_vertex(v, LinForm::int(1));
        }
        for &(u, v) in star.edges() {
            fs.set_edge(u, v, LinForm::int(9));
        }
        assert!(pm_e_distance(&path, &fp, &star, &fs, 6).is_err());
    }
}
