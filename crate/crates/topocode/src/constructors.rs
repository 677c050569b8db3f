//! Constructive algorithms producing (k,d)-total colorings: the
//! complete bipartite base case, leaf-peeling tree algorithms driven by
//! LS/SL choice vectors, the four RLA leaf-adding algorithms, flawed
//! forest labelings, graph books, and a desk-scale backtracking finder
//! for set-ordered graceful labelings.
//!
//! The tree algorithms work backwards along a leaf-peeling trace: color
//! the innermost star, then restore each peeled level, choosing between
//! the SL and LS scan orders per level. Distinct choice vectors give
//! distinct colorings, which is where the `2^m` multiplicity of tree
//! colorings comes from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::coloring_engine::{
    derive_equivalent, verify, Family, FamilySpec, Param, TotalColoring,
};
use crate::graph_core::{add_leaves_with_children, peel_leaves, Graph, LeafPlan, PeelLevel};
use crate::topcode_matrix::LinForm;
use crate::{Error, Result};

/// One bit per restored peel level: 0 picks the SL scan (X-side parents
/// ascending, then Y-side ascending), 1 picks LS (Y-side descending,
/// then X-side descending). Bit 0 governs the first level grown back
/// out of the star.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceVector {
    bits: Vec<bool>,
}

impl ChoiceVector {
    pub fn new(bits: Vec<bool>) -> Self {
        ChoiceVector { bits }
    }

    /// The all-SL vector of length `m`.
    pub fn zeros(m: usize) -> Self {
        ChoiceVector { bits: vec![false; m] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Every vector of length `m`, in binary counting order.
    pub fn all(m: usize) -> Vec<ChoiceVector> {
        (0..1usize << m)
            .map(|mask| ChoiceVector {
                bits: (0..m).map(|i| mask >> i & 1 == 1).collect(),
            })
            .collect()
    }
}

impl FromStr for ChoiceVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Parse(format!(
                        "choice vectors are strings over 0 and 1, found {other:?}"
                    )))
                }
            }
        }
        Ok(ChoiceVector { bits })
    }
}

impl fmt::Display for ChoiceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// The graceful (k,d)-total coloring of K_{m,n}: f(x_j) = (j-1)d,
/// f(y_i) = k + (m-1)d + m(i-1)d, edges f(y_i) - f(x_j) = k + (mi-j)d,
/// a bijection onto S_{mn-1,k,0,d}.
pub fn color_complete_bipartite(m: usize, n: usize) -> Result<(Graph, TotalColoring)> {
    if m < 1 || n < 1 {
        return Err(Error::Precondition(
            "complete bipartite graphs need both sides nonempty".into(),
        ));
    }
    let mut edges = Vec::with_capacity(m * n);
    for x in 0..m {
        for y in 0..n {
            edges.push((x, m + y));
        }
    }
    let xs: Vec<usize> = (0..m).collect();
    let ys: Vec<usize> = (m..m + n).collect();
    let g = Graph::new(m + n, &edges)?.with_bipartition(&xs, &ys)?;
    let mut f = TotalColoring::new();
    let mi = m as i128;
    for j in 0..m {
        f.set_vertex(j, LinForm::int(j as i128));
    }
    for i in 0..n {
        f.set_vertex(m + i, LinForm::kd(mi - 1 + mi * i as i128));
    }
    for j in 1..=m {
        for i in 1..=n {
            f.set_edge(j - 1, m + i - 1, LinForm::kd(mi * i as i128 - j as i128));
        }
    }
    Ok((g, f))
}

/// Shared state while growing a coloring back along a peel trace.
/// Vertices and edges are keyed by ids of the original tree.
struct Rebuild {
    xs: BTreeSet<usize>,
    vertices: BTreeMap<usize, LinForm>,
    edges: BTreeMap<(usize, usize), LinForm>,
}

impl Rebuild {
    fn coloring(self) -> TotalColoring {
        let mut f = TotalColoring::new();
        for (v, c) in self.vertices {
            f.set_vertex(v, c);
        }
        for ((u, v), c) in self.edges {
            f.set_edge(u, v, c);
        }
        f
    }

    fn shift_y_vertices(&mut self, t: i128) {
        let shift = LinForm::int(t);
        for (v, c) in self.vertices.iter_mut() {
            if !self.xs.contains(v) {
                *c = *c + shift;
            }
        }
    }

    fn shift_edges(&mut self, t: i128) {
        let shift = LinForm::int(t);
        for c in self.edges.values_mut() {
            *c = *c + shift;
        }
    }
}

/// Center and leaves (ascending original ids) of the innermost star.
fn star_shape(level: &PeelLevel) -> (usize, Vec<usize>) {
    let t = &level.tree;
    let center_local = (0..t.p()).find(|&v| t.degree(v) >= 2).unwrap_or(0);
    let center = level.orig_ids[center_local];
    let mut leaves: Vec<usize> = (0..t.p())
        .filter(|&v| v != center_local)
        .map(|v| level.orig_ids[v])
        .collect();
    leaves.sort_unstable();
    (center, leaves)
}

/// The leaves removed at this level, grouped by their parent in the
/// level's tree, all in original ids; leaves ascending per parent.
fn level_groups(level: &PeelLevel) -> BTreeMap<usize, Vec<usize>> {
    let inv: BTreeMap<usize, usize> = level
        .orig_ids
        .iter()
        .enumerate()
        .map(|(local, &orig)| (orig, local))
        .collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &w in &level.removed {
        let local = inv[&w];
        let parent_local = level.tree.neighbors(local)[0];
        groups
            .entry(level.orig_ids[parent_local])
            .or_default()
            .push(w);
    }
    for leaves in groups.values_mut() {
        leaves.sort_unstable();
    }
    groups
}

/// Parents in scan order for one level: SL (bit 0) lists X-side parents
/// ascending by (color, id) and then Y-side ascending; LS (bit 1) lists
/// Y-side descending and then X-side descending.
fn scan_order(st: &Rebuild, groups: &BTreeMap<usize, Vec<usize>>, bit: bool) -> Vec<usize> {
    let mut xp: Vec<usize> = groups.keys().filter(|p| st.xs.contains(p)).copied().collect();
    let mut yp: Vec<usize> = groups.keys().filter(|p| !st.xs.contains(p)).copied().collect();
    xp.sort_by_key(|&p| (st.vertices[&p], p));
    yp.sort_by_key(|&p| (st.vertices[&p], p));
    if bit {
        yp.into_iter().rev().chain(xp.into_iter().rev()).collect()
    } else {
        xp.into_iter().chain(yp).collect()
    }
}

type Trace = crate::graph_core::PeelTrace;

/// Levels to restore, innermost first, paired with their choice bits.
fn growth_steps<'a>(
    trace: &'a Trace,
    choices: &'a ChoiceVector,
) -> impl Iterator<Item = (&'a PeelLevel, bool)> {
    trace.levels[..trace.len() - 1]
        .iter()
        .rev()
        .enumerate()
        .map(|(step, level)| (level, choices.bit(step)))
}

fn rebuild_graceful(trace: &Trace, choices: &ChoiceVector) -> Rebuild {
    let (center, leaves) = star_shape(trace.star());
    let mut st = Rebuild {
        xs: BTreeSet::from([center]),
        vertices: BTreeMap::from([(center, LinForm::int(0))]),
        edges: BTreeMap::new(),
    };
    for (j, &leaf) in leaves.iter().enumerate() {
        let c = LinForm::kd(j as i128);
        st.vertices.insert(leaf, c);
        st.edges.insert(key(center, leaf), c);
    }
    for (level, bit) in growth_steps(trace, choices) {
        let groups = level_groups(level);
        let t = level.removed.len() as i128;
        st.shift_y_vertices(t);
        st.shift_edges(t);
        let mut next_edge = 0i128;
        for parent in scan_order(&st, &groups, bit) {
            let on_x = st.xs.contains(&parent);
            for &leaf in &groups[&parent] {
                let e = LinForm::kd(next_edge);
                next_edge += 1;
                let c = if on_x {
                    st.vertices[&parent] + e
                } else {
                    st.xs.insert(leaf);
                    st.vertices[&parent] - e
                };
                st.vertices.insert(leaf, c);
                st.edges.insert(key(parent, leaf), e);
            }
        }
    }
    st
}

/// Edge-difference recursion: the constant stays 2k+(q-1)d at every
/// level. Old edges keep their colors, new edges take the top block.
fn rebuild_edge_difference(trace: &Trace, choices: &ChoiceVector) -> Rebuild {
    let (center, leaves) = star_shape(trace.star());
    let n = leaves.len() as i128;
    let mut st = Rebuild {
        xs: BTreeSet::from([center]),
        vertices: BTreeMap::from([(center, LinForm::int(0))]),
        edges: BTreeMap::new(),
    };
    for (j, &leaf) in leaves.iter().enumerate() {
        st.vertices.insert(leaf, LinForm::kd(j as i128));
        st.edges.insert(key(center, leaf), LinForm::kd(n - 1 - j as i128));
    }
    for (level, bit) in growth_steps(trace, choices) {
        let groups = level_groups(level);
        let t = level.removed.len() as i128;
        let q_prev = st.edges.len() as i128;
        let t_star = LinForm::new(2, q_prev + t - 1);
        st.shift_y_vertices(t);
        let mut next_edge = q_prev;
        for parent in scan_order(&st, &groups, bit) {
            let on_x = st.xs.contains(&parent);
            for &leaf in &groups[&parent] {
                let e = LinForm::kd(next_edge);
                next_edge += 1;
                let c = if on_x {
                    t_star + st.vertices[&parent] - e
                } else {
                    st.xs.insert(leaf);
                    e + st.vertices[&parent] - t_star
                };
                st.vertices.insert(leaf, c);
                st.edges.insert(key(parent, leaf), e);
            }
        }
    }
    st
}

/// Harmonious recursion over stored residues: each edge keeps a stored
/// color in [k, k+(q-1)d]; wrapped edges (stored = sum - qd) keep their
/// stored color across levels, unwrapped ones shift with the sum. New
/// edges fill the gaps of the stored set. Returns None when a leaf
/// color would leave the codomain, which no scan order can fix.
fn try_harmonious(trace: &Trace, choices: &ChoiceVector) -> Option<Rebuild> {
    let (center, leaves) = star_shape(trace.star());
    let n = leaves.len() as i128;
    let mut st = Rebuild {
        xs: BTreeSet::from([center]),
        vertices: BTreeMap::from([(center, LinForm::int(0))]),
        edges: BTreeMap::new(),
    };
    // wrapped[e] marks stored = sum - qd edges.
    let mut wrapped: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (j, &leaf) in leaves.iter().enumerate() {
        let j = j as i128 + 1;
        st.vertices.insert(leaf, LinForm::kd(j));
        let stored = if j == n { LinForm::kd(0) } else { LinForm::kd(j) };
        if j == n {
            wrapped.insert(key(center, leaf));
        }
        st.edges.insert(key(center, leaf), stored);
    }
    for (level, bit) in growth_steps(trace, choices) {
        let groups = level_groups(level);
        let t = level.removed.len() as i128;
        let q_new = st.edges.len() as i128 + t;
        st.shift_y_vertices(t);
        let shift = LinForm::int(t);
        for (e, c) in st.edges.iter_mut() {
            if !wrapped.contains(e) {
                *c = *c + shift;
            }
        }
        let taken: BTreeSet<i128> = st.edges.values().map(|c| c.dcoef).collect();
        let mut gaps: Vec<i128> = (0..q_new).filter(|o| !taken.contains(o)).collect();
        if taken.len() + gaps.len() != q_new as usize {
            return None; // stored colors collided after the shift
        }
        gaps.reverse(); // pop() hands them out ascending
        for parent in scan_order(&st, &groups, bit) {
            let on_x = st.xs.contains(&parent);
            for &leaf in &groups[&parent] {
                let stored = LinForm::kd(gaps.pop()?);
                let ekey = key(parent, leaf);
                let c = if on_x {
                    stored - st.vertices[&parent]
                } else {
                    wrapped.insert(ekey);
                    st.xs.insert(leaf);
                    stored + LinForm::int(q_new) - st.vertices[&parent]
                };
                if c.dcoef < 0 {
                    return None;
                }
                st.vertices.insert(leaf, c);
                st.edges.insert(ekey, stored);
            }
        }
    }
    Some(st)
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Colors a tree in the given family, steering each restored peel level
/// with one choice bit. The graceful coloring doubles as the
/// graceful-difference one (constant 0); felicitous-difference,
/// edge-magic and, when its direct recursion leaves the codomain,
/// harmonious are reached from it through the equivalence rewrites.
/// The result is checked against the family verifier at (k, d) before
/// being returned.
pub fn tree_kd_coloring(
    t: &Graph,
    family: Family,
    k: Param,
    d: Param,
    choices: &ChoiceVector,
) -> Result<TotalColoring> {
    if !t.is_tree() {
        return Err(Error::Precondition("tree_kd_coloring needs a tree".into()));
    }
    let trace = peel_leaves(t)?;
    let m = trace.len() - 1;
    if choices.len() != m {
        return Err(Error::Precondition(format!(
            "choice vector has {} bits but the tree peels in {m} levels",
            choices.len()
        )));
    }
    let out = match family {
        Family::Graceful | Family::GracefulDifference => {
            rebuild_graceful(&trace, choices).coloring()
        }
        Family::EdgeMagic | Family::FelicitousDifference => {
            let base = rebuild_graceful(&trace, choices).coloring();
            derive_equivalent(&base, t, &FamilySpec::new(family))?
        }
        Family::EdgeDifference => rebuild_edge_difference(&trace, choices).coloring(),
        Family::Harmonious => {
            let direct = try_harmonious(&trace, choices).map(Rebuild::coloring);
            let direct = direct.filter(|f| {
                verify(t, f, &FamilySpec::new(family), Param::Sym, Param::Sym)
                    .map(|r| r.pass)
                    .unwrap_or(false)
            });
            match direct {
                Some(f) => f,
                None => {
                    let base = rebuild_graceful(&trace, choices).coloring();
                    derive_equivalent(&base, t, &FamilySpec::new(family))?
                }
            }
        }
        other => {
            return Err(Error::Precondition(format!(
                "the tree algorithms cover graceful, harmonious, edge-difference, \
                 graceful-difference, felicitous-difference and edge-magic, not {other}"
            )))
        }
    };
    let report = verify(t, &out, &FamilySpec::new(family), k, d)?;
    if !report.pass {
        let first = report
            .violations
            .first()
            .map(|v| format!("{}: {}", v.site, v.reason))
            .unwrap_or_default();
        return Err(Error::Undecided(format!(
            "constructed coloring failed its own verification ({first})"
        )));
    }
    Ok(out)
}

/// A set-ordered graceful labeling: integer colors, vertex labels
/// distinct with 0 = f(x_1), every X label below every Y label, edge
/// labels |f(u)-f(v)| hitting [1, q] exactly once each.
#[derive(Debug, Clone)]
pub struct SetOrderedGraceful {
    f: TotalColoring,
    xs: Vec<usize>,
    ys: Vec<usize>,
}

impl SetOrderedGraceful {
    /// Validates `f` as a set-ordered graceful labeling of `g`. The X
    /// role goes to whichever side of the bipartition carries the
    /// smaller labels.
    pub fn from_coloring(g: &Graph, f: &TotalColoring) -> Result<Self> {
        if !f.is_total_on(g) {
            return Err(Error::Precondition(
                "labeling is not total on the graph".into(),
            ));
        }
        let label = |v: usize| -> Result<i128> {
            let c = f.vertex(v).unwrap();
            if c.kcoef != 0 {
                return Err(Error::Precondition(format!(
                    "set-ordered graceful labelings use plain integers, vertex {v} has {c}"
                )));
            }
            Ok(c.dcoef)
        };
        let (a, b) = match g.bipartition() {
            Some((x, y)) => (x.to_vec(), y.to_vec()),
            None => g.auto_bipartition()?,
        };
        let max_of = |side: &[usize]| -> Result<i128> {
            side.iter().map(|&v| label(v)).try_fold(i128::MIN, |m, l| Ok(m.max(l?)))
        };
        let min_of = |side: &[usize]| -> Result<i128> {
            side.iter().map(|&v| label(v)).try_fold(i128::MAX, |m, l| Ok(m.min(l?)))
        };
        let (xs, ys) = if max_of(&a)? < min_of(&b)? {
            (a, b)
        } else if max_of(&b)? < min_of(&a)? {
            (b, a)
        } else {
            return Err(Error::Precondition(
                "labeling is not set-ordered: neither side lies fully below the other".into(),
            ));
        };
        let values: BTreeSet<i128> = (0..g.p()).map(label).collect::<Result<_>>()?;
        if values.len() != g.p() {
            return Err(Error::Precondition("vertex labels repeat".into()));
        }
        if values.first() != Some(&0) {
            return Err(Error::Precondition("the least vertex label must be 0".into()));
        }
        let mut diffs = Vec::with_capacity(g.q());
        for &(u, v) in g.edges() {
            let want = (label(u)? - label(v)?).abs();
            let got = f.edge(u, v).unwrap();
            if got != LinForm::int(want) {
                return Err(Error::Precondition(format!(
                    "edge {u}-{v} is labeled {got}, not |f(u)-f(v)| = {want}"
                )));
            }
            diffs.push(want);
        }
        diffs.sort_unstable();
        if diffs != (1..=g.q() as i128).collect::<Vec<_>>() {
            return Err(Error::Precondition(
                "edge labels do not hit [1, q] exactly".into(),
            ));
        }
        let mut xs = xs;
        let mut ys = ys;
        xs.sort_by_key(|&v| f.vertex(v).unwrap());
        ys.sort_by_key(|&v| f.vertex(v).unwrap());
        Ok(SetOrderedGraceful { f: f.clone(), xs, ys })
    }

    pub fn coloring(&self) -> &TotalColoring {
        &self.f
    }

    /// X-side vertices, ascending by label.
    pub fn xs(&self) -> &[usize] {
        &self.xs
    }

    /// Y-side vertices, ascending by label.
    pub fn ys(&self) -> &[usize] {
        &self.ys
    }

    fn label(&self, v: usize) -> i128 {
        self.f.vertex(v).unwrap().dcoef
    }

    fn max_x(&self) -> i128 {
        self.label(*self.xs.last().unwrap())
    }

    fn min_y(&self) -> i128 {
        self.label(self.ys[0])
    }
}

/// The four RLA leaf-adding algorithms. Starting from a set-ordered
/// graceful labeling of `g`, each produces a (k,d)-total coloring of
/// `g` plus the planned leaves in the requested family, with the
/// closed-form constant it returns alongside:
/// graceful-difference [min f(Y)-max f(X)-1]d, edge-difference
/// 2(k-d)+(M+m)d with M = q+min f(Y)-max f(X), felicitous-difference
/// [max f(X)+m]d, edge-magic 2k+[max f(X)+q+2m-1]d.
///
/// One caveat on the edge-magic variant: a leaf hung on a high X
/// vertex gets a color above k+(q+m-1)d, so [`verify`] reports a
/// total-set violation for such plans even though the constraint and
/// the exact edge set hold. Plans whose leaves all sit on Y verify
/// fully.
pub fn rla(
    g: &Graph,
    base: &SetOrderedGraceful,
    plan: &LeafPlan,
    family: Family,
) -> Result<(Graph, TotalColoring, LinForm)> {
    if !base.coloring().is_total_on(g) || base.xs.len() + base.ys.len() != g.p() {
        return Err(Error::Precondition(
            "base labeling does not belong to this graph".into(),
        ));
    }
    let (grown, children) = add_leaves_with_children(g, plan)?;
    let q = g.q() as i128;
    let m = plan.m() as i128;
    let (max_x, min_y) = (base.max_x(), base.min_y());

    // Leaf counts per parent, regardless of which side the plan filed
    // them under; the base ordering decides the side below.
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (&v, &n) in plan.x_counts.iter().chain(plan.y_counts.iter()) {
        *counts.entry(v).or_default() += n;
    }

    // Vertex and edge transforms of the base labeling, parameterized.
    type YMap<'a> = Box<dyn Fn(usize) -> LinForm + 'a>;
    type EMap<'a> = Box<dyn Fn(i128) -> LinForm + 'a>;
    let lx = |v: usize| max_x - base.label(v);
    let (hy, he, constant): (YMap<'_>, EMap<'_>, LinForm) = match family {
        Family::GracefulDifference => (
            Box::new(move |v| LinForm::kd(q + min_y - 1 + m - base.label(v))),
            Box::new(move |e| LinForm::kd(q - e + m)),
            LinForm::int(min_y - max_x - 1),
        ),
        Family::EdgeDifference => (
            Box::new(move |v| LinForm::kd(q + min_y - 1 + m - base.label(v))),
            Box::new(move |e| LinForm::kd(e - 1)),
            LinForm::new(2, q + min_y - max_x + m - 2),
        ),
        Family::FelicitousDifference => (
            Box::new(move |v| LinForm::kd(base.label(v) - 1 + m)),
            Box::new(move |e| LinForm::kd(e - 1)),
            LinForm::int(max_x + m),
        ),
        Family::EdgeMagic => (
            Box::new(move |v| LinForm::kd(base.label(v) - 1 + m)),
            Box::new(move |e| LinForm::kd(q - e + m)),
            LinForm::new(2, max_x + q + 2 * m - 1),
        ),
        other => {
            return Err(Error::Precondition(format!(
                "RLA covers graceful-difference, edge-difference, felicitous-difference \
                 and edge-magic, not {other}"
            )))
        }
    };

    let mut h = TotalColoring::new();
    let xset: BTreeSet<usize> = base.xs.iter().copied().collect();
    for &v in &base.xs {
        h.set_vertex(v, LinForm::int(lx(v)));
    }
    for &v in &base.ys {
        h.set_vertex(v, hy(v));
    }
    for &(u, v) in g.edges() {
        let e = base.coloring().edge(u, v).unwrap().dcoef;
        h.set_edge(u, v, he(e));
    }

    // New edges fill a block of the color range in a per-family scan
    // order over the parents; leaf colors then follow the formulas.
    let with_leaves = |order: &[usize]| -> Vec<usize> {
        order
            .iter()
            .filter(|v| counts.get(v).copied().unwrap_or(0) > 0)
            .copied()
            .collect()
    };
    let xs_asc = with_leaves(&base.xs);
    let ys_asc = with_leaves(&base.ys);
    let rev = |v: &[usize]| -> Vec<usize> { v.iter().rev().copied().collect() };
    let (parent_order, first_offset) = match family {
        Family::GracefulDifference => {
            ([ys_asc.clone(), rev(&xs_asc)].concat(), 0)
        }
        Family::EdgeDifference | Family::FelicitousDifference => {
            ([xs_asc.clone(), rev(&ys_asc)].concat(), q)
        }
        Family::EdgeMagic => ([rev(&ys_asc), rev(&xs_asc)].concat(), 0),
        _ => unreachable!(),
    };
    let mut next = first_offset;
    for parent in parent_order {
        let on_x = xset.contains(&parent);
        let hp = h.vertex(parent).unwrap();
        for &leaf in &children[&parent] {
            let e = LinForm::kd(next);
            next += 1;
            let c = match family {
                Family::GracefulDifference => {
                    let mgr = LinForm::int(min_y - max_x - 1);
                    if on_x { hp + e + mgr } else { hp - e - mgr }
                }
                Family::EdgeDifference => {
                    if on_x { constant - e + hp } else { hp - constant + e }
                }
                Family::FelicitousDifference => constant + e - hp,
                Family::EdgeMagic => constant - e - hp,
                _ => unreachable!(),
            };
            h.set_vertex(leaf, c);
            h.set_edge(parent, leaf, e);
        }
    }
    Ok((grown, h, constant))
}

/// Joins set-ordered gracefully labeled trees into one labeling of
/// their disjoint union: X blocks stack up from 0, Y blocks stack down
/// from the top, and the edge color blocks of consecutive trees leave
/// single-value gaps where the missing connecting edges would sit.
pub fn flawed_forest_labeling(
    trees: &[Graph],
    labelings: &[SetOrderedGraceful],
) -> Result<(Graph, TotalColoring)> {
    if trees.is_empty() || trees.len() != labelings.len() {
        return Err(Error::Precondition(
            "need one labeling per tree and at least one tree".into(),
        ));
    }
    for (t, l) in trees.iter().zip(labelings) {
        if !t.is_tree() {
            return Err(Error::Precondition(
                "flawed forest labelings join trees".into(),
            ));
        }
        if !l.coloring().is_total_on(t) || l.xs.len() + l.ys.len() != t.p() {
            return Err(Error::Precondition(
                "labeling does not belong to its tree".into(),
            ));
        }
    }
    let s: Vec<i128> = labelings.iter().map(|l| l.xs.len() as i128).collect();
    let t_sizes: Vec<i128> = labelings.iter().map(|l| l.ys.len() as i128).collect();
    let big_m: i128 = s.iter().sum();

    let mut edges = Vec::new();
    let mut xs_all = Vec::new();
    let mut ys_all = Vec::new();
    let mut f = TotalColoring::new();
    let mut offset = 0usize;
    for (i, (tree, lab)) in trees.iter().zip(labelings).enumerate() {
        let x_shift: i128 = s[..i].iter().sum();
        let y_shift: i128 = big_m - s[i] + t_sizes[i + 1..].iter().sum::<i128>();
        for &v in &lab.xs {
            xs_all.push(offset + v);
            f.set_vertex(offset + v, LinForm::int(lab.label(v) + x_shift));
        }
        for &v in &lab.ys {
            ys_all.push(offset + v);
            f.set_vertex(offset + v, LinForm::int(lab.label(v) + y_shift));
        }
        for &(u, v) in tree.edges() {
            edges.push((offset + u, offset + v));
            let a = f.vertex(offset + u).unwrap();
            let b = f.vertex(offset + v).unwrap();
            f.set_edge(offset + u, offset + v, (a - b).abs_dom());
        }
        offset += tree.p();
    }
    xs_all.sort_unstable();
    ys_all.sort_unstable();
    let forest = Graph::new(offset, &edges)?.with_bipartition(&xs_all, &ys_all)?;
    Ok((forest, f))
}

/// Glues pages into a book along a common spine: every page must carry
/// the same X-side colors, which become the s spine vertices. Page j's
/// Y vertices and edges are lifted by (q_1 + ... + q_{j-1})d, so the
/// page edge sets line up into consecutive blocks.
pub fn build_graph_book(
    pages: &[(Graph, TotalColoring)],
    spine: usize,
) -> Result<(Graph, TotalColoring)> {
    if pages.is_empty() {
        return Err(Error::Precondition("a book needs at least one page".into()));
    }
    let mut spine_colors: Option<Vec<LinForm>> = None;
    let mut page_sides = Vec::new();
    for (g, f) in pages {
        if !f.is_total_on(g) {
            return Err(Error::Precondition("page coloring is not total".into()));
        }
        let (x, y) = match g.bipartition() {
            Some((x, y)) => (x.to_vec(), y.to_vec()),
            None => g.auto_bipartition()?,
        };
        if x.len() != spine {
            return Err(Error::Precondition(format!(
                "page X side has {} vertices, spine needs {spine}",
                x.len()
            )));
        }
        let mut ordered = x.clone();
        ordered.sort_by_key(|&v| f.vertex(v).unwrap());
        let colors: Vec<LinForm> = ordered.iter().map(|&v| f.vertex(v).unwrap()).collect();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition(
                "spine colors must be distinct within a page".into(),
            ));
        }
        match &spine_colors {
            None => spine_colors = Some(colors),
            Some(expect) if *expect != colors => {
                return Err(Error::Precondition(
                    "pages disagree on the spine colors".into(),
                ))
            }
            _ => {}
        }
        page_sides.push((ordered, y));
    }
    let spine_colors = spine_colors.unwrap();

    let mut f = TotalColoring::new();
    for (slot, &c) in spine_colors.iter().enumerate() {
        f.set_vertex(slot, c);
    }
    let mut edges = Vec::new();
    let mut next_id = spine;
    let mut ys_all = Vec::new();
    let mut q_shift = 0i128;
    for ((g, pf), (ordered_x, page_y)) in pages.iter().zip(&page_sides) {
        let slot_of: BTreeMap<usize, usize> = ordered_x
            .iter()
            .enumerate()
            .map(|(slot, &v)| (v, slot))
            .collect();
        let mut y_id: BTreeMap<usize, usize> = BTreeMap::new();
        for &y in page_y {
            y_id.insert(y, next_id);
            ys_all.push(next_id);
            f.set_vertex(next_id, pf.vertex(y).unwrap() + LinForm::int(q_shift));
            next_id += 1;
        }
        for &(u, v) in g.edges() {
            let (x, y) = if slot_of.contains_key(&u) { (u, v) } else { (v, u) };
            let (sx, sy) = (slot_of[&x], y_id[&y]);
            edges.push((sx.min(sy), sx.max(sy)));
            f.set_edge(sx, sy, pf.edge(u, v).unwrap() + LinForm::int(q_shift));
        }
        q_shift += g.q() as i128;
    }
    let xs: Vec<usize> = (0..spine).collect();
    let book = Graph::new(next_id, &edges)?.with_bipartition(&xs, &ys_all)?;
    Ok((book, f))
}

/// Outcome of the set-ordered graceful search: a witness, a proof of
/// absence (the search space was exhausted), or an inconclusive stop at
/// the budget.
#[derive(Debug)]
pub enum SearchOutcome {
    Found(SetOrderedGraceful),
    Nonexistent,
    Unknown,
}

/// Size guard for [`find_set_ordered_graceful`].
pub const SEARCH_Q_LIMIT: usize = 14;

/// Backtracking search for a set-ordered graceful labeling of a
/// connected bipartite graph, trying both side orientations. `budget`
/// bounds the number of label placements tried.
pub fn find_set_ordered_graceful(g: &Graph, budget: u64) -> Result<SearchOutcome> {
    if !g.is_connected() {
        return Err(Error::Precondition("search needs a connected graph".into()));
    }
    if g.q() > SEARCH_Q_LIMIT {
        return Err(Error::TooLarge(format!(
            "search handles at most q = {SEARCH_Q_LIMIT} edges, got {}",
            g.q()
        )));
    }
    let (a, b) = match g.bipartition() {
        Some((x, y)) => (x.to_vec(), y.to_vec()),
        None => match g.auto_bipartition() {
            Ok(sides) => sides,
            Err(_) => return Ok(SearchOutcome::Nonexistent),
        },
    };
    let mut spent = 0u64;
    let mut ran_dry = false;
    for (low, high) in [(&a, &b), (&b, &a)] {
        match search_orientation(g, low, high, budget, &mut spent) {
            Some(f) => {
                let so = SetOrderedGraceful::from_coloring(g, &f)?;
                return Ok(SearchOutcome::Found(so));
            }
            None => {
                if spent >= budget {
                    ran_dry = true;
                    break;
                }
            }
        }
    }
    Ok(if ran_dry {
        SearchOutcome::Unknown
    } else {
        SearchOutcome::Nonexistent
    })
}

struct Search<'a> {
    g: &'a Graph,
    // Low side first, then high side, each by id. Every low label must
    // stay below every high label.
    order: Vec<usize>,
    low_len: usize,
    q: i128,
    budget: u64,
    labels: BTreeMap<usize, i128>,
    used_labels: BTreeSet<i128>,
    used_diffs: BTreeSet<i128>,
}

impl Search<'_> {
    fn dfs(&mut self, pos: usize, spent: &mut u64) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let v = self.order[pos];
        let on_low = pos < self.low_len;
        for cand in 0..=self.q {
            if *spent >= self.budget {
                return false;
            }
            *spent += 1;
            if self.used_labels.contains(&cand) {
                continue;
            }
            // Low vertices are placed first, so a high candidate only
            // needs to clear the low labels already on the board.
            if !on_low
                && self.order[..self.low_len]
                    .iter()
                    .any(|w| self.labels.get(w).is_some_and(|&l| cand <= l))
            {
                continue;
            }
            let mut new_diffs = Vec::new();
            let mut ok = true;
            for w in self.g.neighbors(v) {
                if let Some(&l) = self.labels.get(&w) {
                    let diff = (cand - l).abs();
                    if diff == 0 || self.used_diffs.contains(&diff) || new_diffs.contains(&diff) {
                        ok = false;
                        break;
                    }
                    new_diffs.push(diff);
                }
            }
            if !ok {
                continue;
            }
            self.labels.insert(v, cand);
            self.used_labels.insert(cand);
            self.used_diffs.extend(new_diffs.iter().copied());
            if self.dfs(pos + 1, spent) {
                return true;
            }
            self.labels.remove(&v);
            self.used_labels.remove(&cand);
            for d in new_diffs {
                self.used_diffs.remove(&d);
            }
        }
        false
    }
}

fn search_orientation(
    g: &Graph,
    low: &[usize],
    high: &[usize],
    budget: u64,
    spent: &mut u64,
) -> Option<TotalColoring> {
    let mut search = Search {
        g,
        order: low.iter().chain(high).copied().collect(),
        low_len: low.len(),
        q: g.q() as i128,
        budget,
        labels: BTreeMap::new(),
        used_labels: BTreeSet::new(),
        used_diffs: BTreeSet::new(),
    };
    if !search.dfs(0, spent) {
        return None;
    }
    let mut f = TotalColoring::new();
    for (&v, &l) in &search.labels {
        f.set_vertex(v, LinForm::int(l));
    }
    for &(u, v) in g.edges() {
        f.set_edge(u, v, LinForm::int((search.labels[&u] - search.labels[&v]).abs()));
    }
    Some(f)
}
