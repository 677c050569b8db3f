//! Topcode-matrix algebra over integer linear forms.
//!
//! A Topcode-matrix is a 3 x q matrix with rows X (vertex ends), E
//! (edges) and Y (vertex ends), one column per edge. Entries are linear
//! forms `alpha*k + a*d` in the two parameters k and d, so the same
//! matrix covers both plain integer labelings (k-coefficient zero,
//! evaluate at d = 1) and parameterized colorings.
//!
//! Column operations treat a matrix as a multiset of columns: `union_sum`
//! concatenates, `subtract` removes one occurrence per matched column,
//! `intersect` keeps the maximal common column multiset, and
//! `coincide`/`split` merge and unmerge over a declared overlap.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Integer linear form `kcoef*k + dcoef*d` in the parameters k and d.
///
/// Plain integers are carried as pure-d forms `(0, v)`, so evaluating at
/// `(k, d) = (0, 1)` recovers the underlying integer matrix. Ordering is
/// lexicographic in `(kcoef, dcoef)`, which matches the intended regime
/// where k strictly dominates any multiple of d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinForm {
    pub kcoef: i128,
    pub dcoef: i128,
}

impl LinForm {
    pub const ZERO: LinForm = LinForm { kcoef: 0, dcoef: 0 };

    pub fn new(kcoef: i128, dcoef: i128) -> Self {
        LinForm { kcoef, dcoef }
    }

    /// A plain integer `v`, stored as the pure-d form `v*d`.
    pub fn int(v: i128) -> Self {
        LinForm { kcoef: 0, dcoef: v }
    }

    /// The form `k + a*d`, the usual shape of edge and Y-side colors.
    pub fn kd(a: i128) -> Self {
        LinForm { kcoef: 1, dcoef: a }
    }

    pub fn eval(self, k0: i128, d0: i128) -> i128 {
        self.kcoef * k0 + self.dcoef * d0
    }

    pub fn is_zero(self) -> bool {
        self.kcoef == 0 && self.dcoef == 0
    }

    /// True when the form is a plain integer (no k term).
    pub fn is_pure_d(self) -> bool {
        self.kcoef == 0
    }

    /// Absolute value under the k-dominant order: negate iff the form is
    /// lexicographically below zero. This is exact for every admissible
    /// `(k, d)` only when the sign survives evaluation, which concrete
    /// re-checks are responsible for.
    pub fn abs_dom(self) -> LinForm {
        if self < LinForm::ZERO {
            -self
        } else {
            self
        }
    }

    pub fn scale(self, c: i128) -> LinForm {
        LinForm {
            kcoef: self.kcoef * c,
            dcoef: self.dcoef * c,
        }
    }
}

impl std::ops::Add for LinForm {
    type Output = LinForm;
    fn add(self, rhs: LinForm) -> LinForm {
        LinForm {
            kcoef: self.kcoef + rhs.kcoef,
            dcoef: self.dcoef + rhs.dcoef,
        }
    }
}

impl std::ops::Sub for LinForm {
    type Output = LinForm;
    fn sub(self, rhs: LinForm) -> LinForm {
        LinForm {
            kcoef: self.kcoef - rhs.kcoef,
            dcoef: self.dcoef - rhs.dcoef,
        }
    }
}

impl std::ops::Neg for LinForm {
    type Output = LinForm;
    fn neg(self) -> LinForm {
        LinForm {
            kcoef: -self.kcoef,
            dcoef: -self.dcoef,
        }
    }
}

impl std::iter::Sum for LinForm {
    fn sum<I: Iterator<Item = LinForm>>(iter: I) -> LinForm {
        iter.fold(LinForm::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for LinForm {
    /// Symbolic rendering: `0`, `3`, `d` and `2*d` never appear together
    /// because plain integers are pure-d forms; a pure-d form prints as
    /// `a*d` (or `d`), a k-form as `k+a*d` with zero terms omitted.
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let mut parts = String::new();
        match self.kcoef {
            0 => {}
            1 => parts.push('k'),
            -1 => parts.push_str("-k"),
            n => parts.push_str(&format!("{n}*k")),
        }
        if self.dcoef != 0 {
            if !parts.is_empty() {
                parts.push(if self.dcoef < 0 { '-' } else { '+' });
            } else if self.dcoef < 0 {
                parts.push('-');
            }
            match self.dcoef.abs() {
                1 => parts.push('d'),
                n => parts.push_str(&format!("{n}*d")),
            }
        }
        write!(out, "{parts}")
    }
}

/// Parses `0`, `7`, `k`, `2*k`, `3d`, `k+2*d`, `2k-d`, and the like.
/// A bare integer is read as a plain integer, that is a pure-d form.
pub fn parse_linform(s: &str) -> Result<LinForm> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty linear form".into()));
    }
    if let Ok(v) = s.parse::<i128>() {
        return Ok(LinForm::int(v));
    }
    let mut kcoef = 0i128;
    let mut dcoef = 0i128;
    // Split into signed terms; each term is [int][*]k, [int][*]d, or int.
    let mut terms: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            terms.push(cur.clone());
            cur.clear();
            if ch == '-' {
                cur.push('-');
            }
        } else if !ch.is_whitespace() {
            cur.push(ch);
        }
    }
    terms.push(cur);
    for term in &terms {
        let t = term.trim();
        if t.is_empty() {
            return Err(Error::Parse(format!("bad linear form {s:?}")));
        }
        let (var, coef_text) = if let Some(stripped) = t.strip_suffix('k') {
            ('k', stripped.trim_end_matches('*'))
        } else if let Some(stripped) = t.strip_suffix('d') {
            ('d', stripped.trim_end_matches('*'))
        } else {
            ('d', t)
        };
        let coef = match coef_text {
            "" => 1,
            "-" => -1,
            text => text
                .parse::<i128>()
                .map_err(|_| Error::Parse(format!("bad coefficient in {s:?}")))?,
        };
        match var {
            'k' => kcoef += coef,
            _ => dcoef += coef,
        }
    }
    Ok(LinForm { kcoef, dcoef })
}

impl Serialize for LinForm {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        (self.kcoef, self.dcoef).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for LinForm {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = <Vec<i128>>::deserialize(de)?;
        if raw.len() != 2 {
            return Err(D::Error::custom("linear form must be a [kcoef, dcoef] pair"));
        }
        Ok(LinForm::new(raw[0], raw[1]))
    }
}

/// Which offsets an odd arithmetic set walks through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OddConvention {
    /// `{k+d, k+3d, ...}`: offsets 1, 3, 5, ... up to s.
    OddStart,
    /// `{k, k+2d, ...}`: offsets 0, 2, 4, ... up to s-1.
    EvenStart,
}

/// The parameterized arithmetic set `S_{s,k,r,d} = {k+rd, ..., k+(r+s)d}`
/// with `s+1` elements, or its odd variant `O` which keeps every other
/// offset only.
///
/// `kmult` is 0 or 1 depending on whether the set lives on the pure-d
/// side (vertex X colors) or the k side (edge and Y colors).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithSet {
    pub s: i128,
    pub kmult: i128,
    pub r: i128,
    pub odd: Option<OddConvention>,
}

impl ArithSet {
    /// `S_{s,k,r,d}` with the k term present (`kmult = 1`).
    pub fn with_k(s: i128, r: i128) -> Self {
        ArithSet {
            s,
            kmult: 1,
            r,
            odd: None,
        }
    }

    /// `S_{s,0,r,d}`, the pure-d variant used for X-side colors.
    pub fn pure_d(s: i128, r: i128) -> Self {
        ArithSet {
            s,
            kmult: 0,
            r,
            odd: None,
        }
    }

    /// `O_{s,k,d}` under the chosen convention.
    pub fn odd(s: i128, convention: OddConvention) -> Self {
        ArithSet {
            s,
            kmult: 1,
            r: 0,
            odd: Some(convention),
        }
    }

    fn offsets(&self) -> Vec<i128> {
        match self.odd {
            None => (0..=self.s).collect(),
            Some(OddConvention::OddStart) => (1..=self.s).step_by(2).collect(),
            Some(OddConvention::EvenStart) => (0..self.s).step_by(2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> Vec<LinForm> {
        self.offsets()
            .into_iter()
            .map(|off| LinForm::new(self.kmult, self.r + off))
            .collect()
    }

    pub fn contains(&self, v: LinForm) -> bool {
        if v.kcoef != self.kmult {
            return false;
        }
        let off = v.dcoef - self.r;
        match self.odd {
            None => (0..=self.s).contains(&off),
            Some(OddConvention::OddStart) => off >= 1 && off <= self.s && off % 2 == 1,
            Some(OddConvention::EvenStart) => off >= 0 && off < self.s && off % 2 == 0,
        }
    }
}

/// The union set `Lambda_{(m,b,n,k,a,d)} = S_{m,0,b,d} ∪ S_{n,k,a,d}`.
pub fn lambda_set(m: i128, b: i128, n: i128, a: i128) -> Vec<LinForm> {
    let mut out = ArithSet::pure_d(m, b).elements();
    out.extend(ArithSet::with_k(n, a).elements());
    out
}

/// A fully evaluated 3 x q matrix of plain integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    #[serde(rename = "X")]
    pub x: Vec<i128>,
    #[serde(rename = "E")]
    pub e: Vec<i128>,
    #[serde(rename = "Y")]
    pub y: Vec<i128>,
}

impl IntMatrix {
    pub fn q(&self) -> usize {
        self.e.len()
    }

    pub fn to_text(&self) -> String {
        let line = |row: &[i128]| {
            row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n{}\n", line(&self.x), line(&self.e), line(&self.y))
    }
}

/// A 3 x q Topcode-matrix: rows X, E, Y of linear forms, one column per
/// edge `(x_i, e_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopcodeMatrix {
    #[serde(rename = "X")]
    pub x: Vec<LinForm>,
    #[serde(rename = "E")]
    pub e: Vec<LinForm>,
    #[serde(rename = "Y")]
    pub y: Vec<LinForm>,
}

pub type Column = (LinForm, LinForm, LinForm);

impl TopcodeMatrix {
    pub fn new(x: Vec<LinForm>, e: Vec<LinForm>, y: Vec<LinForm>) -> Result<Self> {
        if x.len() != e.len() || e.len() != y.len() {
            return Err(Error::Precondition(format!(
                "row lengths differ: |X|={}, |E|={}, |Y|={}",
                x.len(),
                e.len(),
                y.len()
            )));
        }
        Ok(TopcodeMatrix { x, e, y })
    }

    /// Builds a matrix of plain integers (pure-d forms) from three rows.
    pub fn from_int_rows(x: &[i128], e: &[i128], y: &[i128]) -> Result<Self> {
        TopcodeMatrix::new(
            x.iter().copied().map(LinForm::int).collect(),
            e.iter().copied().map(LinForm::int).collect(),
            y.iter().copied().map(LinForm::int).collect(),
        )
    }

    pub fn from_columns(cols: &[Column]) -> Self {
        TopcodeMatrix {
            x: cols.iter().map(|c| c.0).collect(),
            e: cols.iter().map(|c| c.1).collect(),
            y: cols.iter().map(|c| c.2).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.e.len()
    }

    pub fn column(&self, i: usize) -> Column {
        (self.x[i], self.e[i], self.y[i])
    }

    pub fn columns(&self) -> Vec<Column> {
        (0..self.q()).map(|i| self.column(i)).collect()
    }

    /// Canonical column order: sort by (E, X, Y). Matrices are printed in
    /// edge-color order, and the algebra below reports results this way.
    pub fn sorted(&self) -> TopcodeMatrix {
        let mut cols = self.columns();
        cols.sort_by_key(|&(x, e, y)| (e, x, y));
        TopcodeMatrix::from_columns(&cols)
    }

    /// Column-multiset equality, ignoring column order.
    pub fn multiset_eq(&self, other: &TopcodeMatrix) -> bool {
        self.sorted() == other.sorted()
    }

    fn column_counts(&self) -> BTreeMap<Column, usize> {
        let mut counts = BTreeMap::new();
        for col in self.columns() {
            *counts.entry(col).or_insert(0) += 1;
        }
        counts
    }

    fn from_counts(counts: &BTreeMap<Column, usize>) -> TopcodeMatrix {
        let mut cols = Vec::new();
        for (&col, &n) in counts {
            cols.extend(std::iter::repeat_n(col, n));
        }
        let mut m = TopcodeMatrix::from_columns(&cols);
        m = m.sorted();
        m
    }

    pub fn evaluate(&self, k0: i128, d0: i128) -> Result<IntMatrix> {
        let eval_row = |row: &[LinForm]| -> Result<Vec<i128>> {
            row.iter()
                .map(|f| {
                    let v = f.eval(k0, d0);
                    if v < 0 {
                        Err(Error::Precondition(format!(
                            "entry {f} evaluates to {v} < 0 at (k,d)=({k0},{d0})"
                        )))
                    } else {
                        Ok(v)
                    }
                })
                .collect()
        };
        Ok(IntMatrix {
            x: eval_row(&self.x)?,
            e: eval_row(&self.e)?,
            y: eval_row(&self.y)?,
        })
    }

    pub fn to_text(&self) -> String {
        let line = |row: &[LinForm]| {
            row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n{}\n", line(&self.x), line(&self.e), line(&self.y))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != 3 {
            return Err(Error::Parse(format!(
                "matrix text needs exactly 3 nonempty lines, got {}",
                rows.len()
            )));
        }
        let parse_row = |line: &str| -> Result<Vec<LinForm>> {
            line.split_whitespace().map(parse_linform).collect()
        };
        TopcodeMatrix::new(parse_row(rows[0])?, parse_row(rows[1])?, parse_row(rows[2])?)
    }
}

/// Multiset disjoint union: all columns of `a` and all columns of `b`.
pub fn union_sum(a: &TopcodeMatrix, b: &TopcodeMatrix) -> TopcodeMatrix {
    let mut cols = a.columns();
    cols.extend(b.columns());
    TopcodeMatrix::from_columns(&cols).sorted()
}

/// Removes one occurrence of every column of `b` from `a`. Errors when
/// `b` is not a column-sub-multiset of `a`.
pub fn subtract(a: &TopcodeMatrix, b: &TopcodeMatrix) -> Result<TopcodeMatrix> {
    let mut counts = a.column_counts();
    for col in b.columns() {
        match counts.get_mut(&col) {
            Some(n) if *n > 0 => *n -= 1,
            _ => {
                return Err(Error::Precondition(format!(
                    "column ({}, {}, {}) of the subtrahend does not occur often enough",
                    col.0, col.1, col.2
                )))
            }
        }
    }
    counts.retain(|_, n| *n > 0);
    Ok(TopcodeMatrix::from_counts(&counts))
}

/// Maximal common column multiset of `a` and `b`.
pub fn intersect(a: &TopcodeMatrix, b: &TopcodeMatrix) -> TopcodeMatrix {
    let ca = a.column_counts();
    let cb = b.column_counts();
    let mut out = BTreeMap::new();
    for (col, &na) in &ca {
        if let Some(&nb) = cb.get(col) {
            out.insert(*col, na.min(nb));
        }
    }
    TopcodeMatrix::from_counts(&out)
}

/// `A ∪ B = (A∖B) ⊎ (B∖A) ⊎ (A∩B)`: per distinct column, the larger of
/// the two occurrence counts.
pub fn union(a: &TopcodeMatrix, b: &TopcodeMatrix) -> TopcodeMatrix {
    let ca = a.column_counts();
    let cb = b.column_counts();
    let mut out = ca.clone();
    for (col, &nb) in &cb {
        let n = out.entry(*col).or_insert(0);
        *n = (*n).max(nb);
    }
    TopcodeMatrix::from_counts(&out)
}

/// Merges `a` and `b` over the declared overlap `h`, which must be a
/// column-sub-multiset of both. The overlap appears once in the result.
pub fn coincide(a: &TopcodeMatrix, b: &TopcodeMatrix, h: &TopcodeMatrix) -> Result<TopcodeMatrix> {
    let ra = subtract(a, h)?;
    let rb = subtract(b, h)?;
    Ok(union_sum(&union_sum(&ra, &rb), h))
}

/// Splits `c` over the overlap `h` into a canonical operand pair
/// `((c∖h)⊎h, h)`. Splitting is lossy in general: many operand pairs
/// coincide to the same matrix, so only the canonical pair is returned,
/// and `coincide(split(c,h))` always reproduces `c`.
pub fn split(c: &TopcodeMatrix, h: &TopcodeMatrix) -> Result<(TopcodeMatrix, TopcodeMatrix)> {
    let rest = subtract(c, h)?;
    Ok((union_sum(&rest, h), h.clone()))
}

/// Swaps columns i and j in all three rows.
pub fn column_exchange(m: &mut TopcodeMatrix, i: usize, j: usize) -> Result<()> {
    if i >= m.q() || j >= m.q() {
        return Err(Error::Precondition(format!(
            "column index out of range: q={}, i={i}, j={j}",
            m.q()
        )));
    }
    m.x.swap(i, j);
    m.e.swap(i, j);
    m.y.swap(i, j);
    Ok(())
}

/// Swaps the X and Y entries of column i.
pub fn line_exchange(m: &mut TopcodeMatrix, i: usize) -> Result<()> {
    if i >= m.q() {
        return Err(Error::Precondition(format!(
            "column index out of range: q={}, i={i}",
            m.q()
        )));
    }
    std::mem::swap(&mut m.x[i], &mut m.y[i]);
    Ok(())
}

const SIMILARITY_Q_LIMIT: usize = 8;

/// Whether `a` can be carried to `b` by a sequence of column exchanges
/// and line exchanges. Decided through a canonical form: normalize every
/// column so x <= y, then sort. Bounded at q <= 8; larger matrices get an
/// explicit `Undecided` instead of a guess.
pub fn is_similar(a: &TopcodeMatrix, b: &TopcodeMatrix) -> Result<bool> {
    if a.q() != b.q() {
        return Ok(false);
    }
    if a.q() > SIMILARITY_Q_LIMIT {
        return Err(Error::Undecided(format!(
            "similarity is only decided for q <= {SIMILARITY_Q_LIMIT}, got q = {}",
            a.q()
        )));
    }
    Ok(similarity_canonical(a) == similarity_canonical(b))
}

fn similarity_canonical(m: &TopcodeMatrix) -> Vec<Column> {
    let mut cols: Vec<Column> = m
        .columns()
        .into_iter()
        .map(|(x, e, y)| if x <= y { (x, e, y) } else { (y, e, x) })
        .collect();
    cols.sort();
    cols
}

/// `P = k*I0 + d*T` for a plain integer matrix `T`: X-row entries become
/// `d*x_i`, E and Y rows become `k + d*entry`, following the unite matrix
/// `I0` whose X-row is all 0 and whose E and Y rows are all 1.
pub fn parameterize(t: &TopcodeMatrix) -> Result<TopcodeMatrix> {
    for f in t.x.iter().chain(&t.e).chain(&t.y) {
        if !f.is_pure_d() {
            return Err(Error::Precondition(format!(
                "parameterize needs a plain integer matrix, found entry {f}"
            )));
        }
    }
    Ok(TopcodeMatrix {
        x: t.x.clone(),
        e: t.e.iter().map(|f| LinForm::kd(f.dcoef)).collect(),
        y: t.y.iter().map(|f| LinForm::kd(f.dcoef)).collect(),
    })
}

/// Entrywise integer combination `sum_i coeffs[i] * mats[i]`.
pub fn linear_combine(coeffs: &[i128], mats: &[TopcodeMatrix]) -> Result<TopcodeMatrix> {
    if coeffs.len() != mats.len() || mats.is_empty() {
        return Err(Error::Precondition(format!(
            "need equally many coefficients and matrices, got {} and {}",
            coeffs.len(),
            mats.len()
        )));
    }
    if coeffs.iter().sum::<i128>() < 1 {
        return Err(Error::Precondition(
            "coefficients must sum to at least 1".into(),
        ));
    }
    let q = mats[0].q();
    for m in mats {
        if m.q() != q {
            return Err(Error::Precondition(format!(
                "matrix sizes differ: q={} vs q={}",
                q,
                m.q()
            )));
        }
    }
    let combine_row = |pick: fn(&TopcodeMatrix) -> &Vec<LinForm>| -> Vec<LinForm> {
        (0..q)
            .map(|i| {
                coeffs
                    .iter()
                    .zip(mats)
                    .map(|(&c, m)| pick(m)[i].scale(c))
                    .sum()
            })
            .collect()
    };
    Ok(TopcodeMatrix {
        x: combine_row(|m| &m.x),
        e: combine_row(|m| &m.e),
        y: combine_row(|m| &m.y),
    })
}

/// Reads the Topcode-matrix off a totally colored graph, one column
/// per edge in sorted edge order. With a bipartition the X row takes
/// the X-side endpoint; without one the smaller endpoint id goes first.
pub fn from_colored_graph(
    g: &crate::graph_core::Graph,
    f: &crate::coloring_engine::TotalColoring,
) -> Result<TopcodeMatrix> {
    if !f.is_total_on(g) {
        return Err(Error::Precondition(
            "coloring is not total: some vertex or edge of the graph is uncolored".into(),
        ));
    }
    let x_side: std::collections::BTreeSet<usize> = match g.bipartition() {
        Some((x, _)) => x.iter().copied().collect(),
        None => Default::default(),
    };
    let mut cols = Vec::with_capacity(g.q());
    for &(u, v) in g.edges() {
        let (a, b) = if g.bipartition().is_some() && !x_side.contains(&u) {
            (v, u)
        } else {
            (u, v)
        };
        cols.push((
            f.vertex(a).unwrap(),
            f.edge(u, v).unwrap(),
            f.vertex(b).unwrap(),
        ));
    }
    Ok(TopcodeMatrix::from_columns(&cols))
}

/// Size guard for [`graphs_from_matrix`].
pub const RECONSTRUCT_Q_LIMIT: usize = 10;

/// All set partitions of `items`. At most `cap` survive each growth
/// round; the flag reports whether anything was cut.
fn set_partitions(items: &[usize], cap: usize) -> (Vec<Vec<Vec<usize>>>, bool) {
    let cap = cap.max(1);
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    let mut truncated = false;
    for &item in items {
        let mut next = Vec::new();
        for partial in &out {
            for i in 0..=partial.len() {
                let mut grown = partial.clone();
                if i == partial.len() {
                    grown.push(vec![item]);
                } else {
                    grown[i].push(item);
                }
                next.push(grown);
            }
        }
        if next.len() > cap {
            next.truncate(cap);
            truncated = true;
        }
        out = next;
    }
    (out, truncated)
}

/// Reconstructs every simple colored graph whose Topcode-matrix is `m`,
/// by enumerating the ways equal-colored endpoint slots can name one
/// vertex. Endpoint slots sharing a column never merge (no loops), and
/// merge patterns that repeat an edge are dropped. The flag is false
/// when the search stopped at `budget` candidate patterns.
pub fn graphs_from_matrix(
    m: &TopcodeMatrix,
    budget: usize,
) -> Result<(
    Vec<(crate::graph_core::Graph, crate::coloring_engine::TotalColoring)>,
    bool,
)> {
    use crate::coloring_engine::TotalColoring;
    use crate::graph_core::Graph;

    let q = m.q();
    if q == 0 {
        return Err(Error::Precondition("matrix has no columns".into()));
    }
    if q > RECONSTRUCT_Q_LIMIT {
        return Err(Error::TooLarge(format!(
            "reconstruction handles at most q = {RECONSTRUCT_Q_LIMIT} columns, got {q}"
        )));
    }

    // Slot 2i is the X endpoint of column i, slot 2i+1 the Y endpoint.
    let slot_color = |s: usize| if s.is_multiple_of(2) { m.x[s / 2] } else { m.y[s / 2] };
    let mut classes: BTreeMap<LinForm, Vec<usize>> = BTreeMap::new();
    for s in 0..2 * q {
        classes.entry(slot_color(s)).or_default().push(s);
    }
    let mut complete = true;
    let class_partitions: Vec<Vec<Vec<Vec<usize>>>> = classes
        .values()
        .map(|slots| {
            let (parts, truncated) = set_partitions(slots, budget);
            complete &= !truncated;
            parts
        })
        .collect();

    let mut results = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut tried = 0usize;
    let mut choice = vec![0usize; class_partitions.len()];
    'outer: loop {
        tried += 1;
        if tried > budget {
            complete = false;
            break;
        }

        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (c, parts) in choice.iter().zip(&class_partitions) {
            blocks.extend(parts[*c].iter().cloned());
        }
        // Vertex ids follow the least slot of each block.
        blocks.sort_by_key(|b| *b.iter().min().unwrap());
        let mut vertex_of = vec![0usize; 2 * q];
        let mut valid = true;
        for (id, block) in blocks.iter().enumerate() {
            // A block holding both endpoints of one column is a loop.
            let mut cols: Vec<usize> = block.iter().map(|s| s / 2).collect();
            cols.sort_unstable();
            cols.dedup();
            if cols.len() < block.len() {
                valid = false;
                break;
            }
            for &s in block {
                vertex_of[s] = id;
            }
        }
        if valid {
            let mut edges = Vec::with_capacity(q);
            for i in 0..q {
                let (a, b) = (vertex_of[2 * i], vertex_of[2 * i + 1]);
                edges.push((a.min(b), a.max(b)));
            }
            let mut dedup = edges.clone();
            dedup.sort_unstable();
            dedup.dedup();
            if dedup.len() == q {
                let mut g = Graph::new(blocks.len(), &edges)?;
                // Row-pure blocks reproduce a bipartition; mixed-row
                // blocks arise from odd cycles and leave it off.
                let row_pure = blocks
                    .iter()
                    .all(|b| b.iter().all(|s| s % 2 == 0) || b.iter().all(|s| s % 2 == 1));
                if row_pure {
                    let xs: Vec<usize> = blocks
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| b[0] % 2 == 0)
                        .map(|(id, _)| id)
                        .collect();
                    let ys: Vec<usize> = blocks
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| b[0] % 2 == 1)
                        .map(|(id, _)| id)
                        .collect();
                    g = g.with_bipartition(&xs, &ys)?;
                }
                let mut f = TotalColoring::new();
                for (id, block) in blocks.iter().enumerate() {
                    f.set_vertex(id, slot_color(block[0]));
                }
                for (i, &(a, b)) in edges.iter().enumerate() {
                    f.set_edge(a, b, m.e[i]);
                }
                let key = format!(
                    "{}|{:?}|{:?}",
                    blocks.len(),
                    edges,
                    blocks.iter().map(|b| slot_color(b[0])).collect::<Vec<_>>()
                );
                if seen.insert(key) {
                    results.push((g, f));
                }
            }
        }

        // Advance the mixed-radix choice vector.
        for i in 0..choice.len() {
            choice[i] += 1;
            if choice[i] < class_partitions[i].len() {
                continue 'outer;
            }
            choice[i] = 0;
        }
        break;
    }
    Ok((results, complete))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring_engine::TotalColoring;
    use crate::graph_core::Graph;

    #[test]
    fn matrix_of_colored_path_and_back() {
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3)])
            .unwrap()
            .with_bipartition(&[0, 2], &[1, 3])
            .unwrap();
        let mut f = TotalColoring::new();
        f.set_vertex(0, LinForm::int(0));
        f.set_vertex(1, LinForm::kd(2));
        f.set_vertex(2, LinForm::int(1));
        f.set_vertex(3, LinForm::kd(1));
        f.set_edge(0, 1, LinForm::kd(2));
        f.set_edge(1, 2, LinForm::kd(1));
        f.set_edge(2, 3, LinForm::kd(0));
        let m = from_colored_graph(&g, &f).unwrap();
        assert_eq!(m.x, vec![LinForm::int(0), LinForm::int(1), LinForm::int(1)]);
        assert_eq!(m.e, vec![LinForm::kd(2), LinForm::kd(1), LinForm::kd(0)]);
        assert_eq!(m.y, vec![LinForm::kd(2), LinForm::kd(2), LinForm::kd(1)]);

        // The colors 1 and k+2d both appear twice, and each repeat may
        // or may not name one vertex: the path itself plus three
        // disconnected alternatives share this matrix.
        let (graphs, complete) = graphs_from_matrix(&m, 10_000).unwrap();
        assert!(complete);
        assert_eq!(graphs.len(), 4);
        let mut orders: Vec<usize> = graphs.iter().map(|(h, _)| h.p()).collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![4, 5, 5, 6]);
        let (h, _) = graphs.iter().find(|(h, _)| h.p() == 4).unwrap();
        assert!(crate::graph_core::is_isomorphic(&g, h).unwrap());
        for (h, fh) in &graphs {
            assert_eq!(from_colored_graph(h, fh).unwrap().sorted(), m.sorted());
        }
    }

    #[test]
    fn reconstruction_branches_on_repeated_colors() {
        // Two columns (0, k, k) and (0, k, k): merging or separating
        // the equal-colored endpoints gives a star, its mirror, or two
        // disjoint edges; merging both ends doubles the edge, dropped.
        let m = TopcodeMatrix::from_columns(&[
            (LinForm::int(0), LinForm::kd(0), LinForm::kd(0)),
            (LinForm::int(0), LinForm::kd(0), LinForm::kd(0)),
        ]);
        let (graphs, complete) = graphs_from_matrix(&m, 10_000).unwrap();
        assert!(complete);
        assert_eq!(graphs.len(), 3);
        let mut shapes: Vec<(usize, usize)> = graphs.iter().map(|(g, _)| (g.p(), g.q())).collect();
        shapes.sort_unstable();
        assert_eq!(shapes, vec![(3, 2), (3, 2), (4, 2)]);
    }

    #[test]
    fn reconstruction_rejects_oversized_matrices() {
        let cols: Vec<_> = (0..11)
            .map(|i| (LinForm::int(i), LinForm::kd(i), LinForm::kd(i)))
            .collect();
        let m = TopcodeMatrix::from_columns(&cols);
        assert!(matches!(
            graphs_from_matrix(&m, 10_000),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn linform_order_is_k_dominant() {
        assert!(LinForm::kd(-5) > LinForm::int(1000));
        assert!(LinForm::int(2) > LinForm::int(1));
        assert!(LinForm::new(2, 0) > LinForm::kd(999));
    }

    #[test]
    fn linform_display_and_parse_round_trip() {
        let forms = [
            LinForm::ZERO,
            LinForm::int(7),
            LinForm::int(-3),
            LinForm::kd(0),
            LinForm::kd(1),
            LinForm::kd(-4),
            LinForm::new(2, 5),
            LinForm::new(-1, 1),
            LinForm::new(0, 1),
        ];
        for f in forms {
            let text = f.to_string();
            assert_eq!(parse_linform(&text).unwrap(), f, "round trip of {text}");
        }
        assert_eq!(parse_linform("2k+3d").unwrap(), LinForm::new(2, 3));
        assert_eq!(parse_linform("11").unwrap(), LinForm::int(11));
    }

    #[test]
    fn linform_serde_is_a_pair() {
        let f = LinForm::new(2, -3);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "[2,-3]");
        assert_eq!(serde_json::from_str::<LinForm>(&json).unwrap(), f);
    }

    #[test]
    fn arith_set_has_s_plus_one_elements() {
        let s = ArithSet::with_k(5, 2);
        assert_eq!(s.len(), 6);
        assert_eq!(s.elements()[0], LinForm::kd(2));
        assert_eq!(s.elements()[5], LinForm::kd(7));
        assert!(s.contains(LinForm::kd(4)));
        assert!(!s.contains(LinForm::kd(8)));
        assert!(!s.contains(LinForm::int(4)));
    }

    #[test]
    fn odd_set_conventions() {
        // O_{2q-1,k,d} with q = 3: default {k+d, k+3d, k+5d}.
        let default = ArithSet::odd(5, OddConvention::OddStart);
        assert_eq!(
            default.elements(),
            vec![LinForm::kd(1), LinForm::kd(3), LinForm::kd(5)]
        );
        let alt = ArithSet::odd(5, OddConvention::EvenStart);
        assert_eq!(
            alt.elements(),
            vec![LinForm::kd(0), LinForm::kd(2), LinForm::kd(4)]
        );
    }

    fn worked_a() -> TopcodeMatrix {
        // The worked pair used for the multiset identities.
        TopcodeMatrix::from_int_rows(&[7, 1, 2], &[1, 7, 9], &[18, 18, 12]).unwrap()
    }

    fn worked_b() -> TopcodeMatrix {
        TopcodeMatrix::from_int_rows(&[7, 1, 5], &[1, 7, 9], &[18, 18, 12]).unwrap()
    }

    #[test]
    fn worked_intersection_and_difference() {
        let a = worked_a();
        let b = worked_b();
        let common = intersect(&a, &b);
        assert_eq!(common.q(), 2);
        let cols = common.columns();
        assert!(cols.contains(&(LinForm::int(7), LinForm::int(1), LinForm::int(18))));
        assert!(cols.contains(&(LinForm::int(1), LinForm::int(7), LinForm::int(18))));
        let b_minus_a = subtract(&b, &common).unwrap();
        assert_eq!(
            b_minus_a.columns(),
            vec![(LinForm::int(5), LinForm::int(9), LinForm::int(12))]
        );
        assert_eq!(union_sum(&a, &b).q(), 6);
        assert_eq!(union(&a, &b).q(), 4);
    }

    #[test]
    fn union_subtract_identity() {
        let a = worked_a();
        let b = worked_b();
        let back = subtract(&union_sum(&a, &b), &b).unwrap();
        assert!(back.multiset_eq(&a));
    }

    #[test]
    fn coincide_split_round_trip() {
        let a = worked_a();
        let b = worked_b();
        let h = intersect(&a, &b);
        let c = coincide(&a, &b, &h).unwrap();
        assert_eq!(c.q(), a.q() + b.q() - h.q());
        let (s1, s2) = split(&c, &h).unwrap();
        let again = coincide(&s1, &s2, &h).unwrap();
        assert!(again.multiset_eq(&c));
    }

    #[test]
    fn exchanges_are_involutions() {
        let mut m = worked_a();
        let original = m.clone();
        column_exchange(&mut m, 0, 2).unwrap();
        column_exchange(&mut m, 0, 2).unwrap();
        assert_eq!(m, original);
        line_exchange(&mut m, 1).unwrap();
        line_exchange(&mut m, 1).unwrap();
        assert_eq!(m, original);
        assert!(column_exchange(&mut m, 0, 3).is_err());
    }

    #[test]
    fn similarity_under_exchanges() {
        let a = worked_a();
        let mut b = a.clone();
        column_exchange(&mut b, 0, 1).unwrap();
        line_exchange(&mut b, 2).unwrap();
        assert!(is_similar(&a, &b).unwrap());
        assert!(!is_similar(&a, &worked_b()).unwrap());
        let big = TopcodeMatrix::from_int_rows(&[0; 9], &[0; 9], &[0; 9]).unwrap();
        assert!(is_similar(&big, &big).is_err());
    }

    #[test]
    fn parameterize_and_evaluate() {
        let t = TopcodeMatrix::from_int_rows(&[0, 1], &[3, 2], &[3, 3]).unwrap();
        let p = parameterize(&t).unwrap();
        assert_eq!(p.x, vec![LinForm::int(0), LinForm::int(1)]);
        assert_eq!(p.e, vec![LinForm::kd(3), LinForm::kd(2)]);
        // Evaluating at (0,1) recovers the integer matrix.
        assert_eq!(p.evaluate(0, 1).unwrap(), t.evaluate(0, 1).unwrap());
        // Evaluating at (1,0) exposes the unite-matrix pattern.
        let unit = p.evaluate(1, 0).unwrap();
        assert_eq!(unit.x, vec![0, 0]);
        assert_eq!(unit.e, vec![1, 1]);
        assert_eq!(unit.y, vec![1, 1]);
    }

    #[test]
    fn evaluate_rejects_negative_entries() {
        let t = TopcodeMatrix::new(vec![LinForm::new(1, -2)], vec![LinForm::kd(0)], vec![LinForm::kd(0)])
            .unwrap();
        assert!(t.evaluate(1, 1).is_err());
        assert!(t.evaluate(5, 2).is_ok());
    }

    #[test]
    fn linear_combination_of_matrices() {
        let t1 = worked_a();
        let single = linear_combine(&[1], std::slice::from_ref(&t1)).unwrap();
        assert_eq!(single, t1);
        let double = linear_combine(&[1, 1], &[t1.clone(), t1.clone()]).unwrap();
        assert_eq!(double.e[0], LinForm::int(2));
        assert!(linear_combine(&[0, 0], &[t1.clone(), t1.clone()]).is_err());
        assert!(linear_combine(&[1], &[]).is_err());
    }

    #[test]
    fn matrix_text_round_trip() {
        let t = TopcodeMatrix::new(
            vec![LinForm::int(0), LinForm::int(2)],
            vec![LinForm::kd(0), LinForm::kd(1)],
            vec![LinForm::kd(2), LinForm::new(2, 3)],
        )
        .unwrap();
        let text = t.to_text();
        assert_eq!(TopcodeMatrix::from_text(&text).unwrap(), t);
    }

    #[test]
    fn matrix_json_shape() {
        let t = TopcodeMatrix::from_int_rows(&[0], &[1], &[1]).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["X"][0][1], 0);
        assert_eq!(json["E"][0][1], 1);
    }
}
