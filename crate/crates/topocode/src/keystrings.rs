//! Number-based strings: emitting digit strings from evaluated
//! Topcode-matrices in a chosen cell order, comparing them by digit
//! multiset, the desk-scale parameterized partition solver that cuts a
//! string back into candidate matrices with their (k0, d0), and
//! every-zero string groups combined digit by digit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coloring_engine::{Family, FamilySpec, TotalColoring};
use crate::graph_core::Graph;
use crate::topcode_matrix::{graphs_from_matrix, IntMatrix, TopcodeMatrix};
use crate::{Error, Result};

/// A separator-free base-10 digit sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DigitString {
    digits: String,
}

impl DigitString {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let digits = s.into();
        if let Some(c) = digits.chars().find(|c| !c.is_ascii_digit()) {
            return Err(Error::Parse(format!(
                "number-based strings hold digits only, found {c:?}"
            )));
        }
        Ok(DigitString { digits })
    }

    pub fn as_str(&self) -> &str {
        &self.digits
    }

    /// Byte length, which equals the digit count.
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    fn digit_counts(&self) -> [usize; 10] {
        let mut counts = [0usize; 10];
        for b in self.digits.bytes() {
            counts[(b - b'0') as usize] += 1;
        }
        counts
    }
}

impl FromStr for DigitString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DigitString::new(s)
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits)
    }
}

/// The order in which the 3q cells of a 3 x q matrix are emitted.
/// Cells are numbered row-major: X row left to right, then E, then Y.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSpec {
    RowMajor,
    /// Emission sequence: output position t takes cell `perm[t]`.
    Permutation(Vec<usize>),
    /// Index into the (3q)! permutations in the factorial number
    /// system; index 0 is row-major.
    FactorialIndex(u128),
}

impl OrderSpec {
    /// Resolves to the emission sequence over `cells` cell indices.
    pub fn cell_order(&self, cells: usize) -> Result<Vec<usize>> {
        match self {
            OrderSpec::RowMajor => Ok((0..cells).collect()),
            OrderSpec::Permutation(p) => {
                if p.len() != cells {
                    return Err(Error::Precondition(format!(
                        "permutation lists {} cells, matrix has {cells}",
                        p.len()
                    )));
                }
                let mut seen = vec![false; cells];
                for &c in p {
                    if c >= cells || seen[c] {
                        return Err(Error::Precondition(
                            "cell order must be a bijection on the 3q cells".into(),
                        ));
                    }
                    seen[c] = true;
                }
                Ok(p.clone())
            }
            OrderSpec::FactorialIndex(idx) => unrank_permutation(cells, *idx),
        }
    }
}

fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, u128::checked_mul)
}

fn unrank_permutation(n: usize, mut idx: u128) -> Result<Vec<usize>> {
    let total = factorial(n).ok_or_else(|| {
        Error::TooLarge(format!("({n})! does not fit the permutation index type"))
    })?;
    if idx >= total {
        return Err(Error::Precondition(format!(
            "permutation index {idx} is out of range for {n} cells"
        )));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i).unwrap();
        out.push(pool.remove((idx / f) as usize));
        idx %= f;
    }
    Ok(out)
}

fn cell_value(m: &IntMatrix, cell: usize) -> i128 {
    let q = m.q();
    match cell / q {
        0 => m.x[cell % q],
        1 => m.e[cell % q],
        _ => m.y[cell % q],
    }
}

/// Concatenates the decimal expansions of the matrix entries in the
/// given cell order.
pub fn string_from_matrix(m: &IntMatrix, order: &OrderSpec) -> Result<DigitString> {
    let q = m.q();
    for row in [&m.x, &m.e, &m.y] {
        if let Some(v) = row.iter().find(|&&v| v < 0) {
            return Err(Error::Precondition(format!(
                "number-based strings need nonnegative entries, found {v}"
            )));
        }
    }
    let mut s = String::new();
    for cell in order.cell_order(3 * q)? {
        s.push_str(&cell_value(m, cell).to_string());
    }
    Ok(DigitString { digits: s })
}

/// The decimal width of every cell, row-major. Together with the cell
/// order this makes [`string_from_matrix`] invertible; see
/// [`matrix_from_string`].
pub fn decimal_widths(m: &IntMatrix) -> Vec<usize> {
    (0..3 * m.q())
        .map(|c| cell_value(m, c).to_string().len())
        .collect()
}

/// Rebuilds the matrix from a digit string, the row-major cell widths
/// and the cell order used to emit it.
pub fn matrix_from_string(
    s: &DigitString,
    widths: &[usize],
    order: &OrderSpec,
) -> Result<IntMatrix> {
    if !widths.len().is_multiple_of(3) || widths.is_empty() {
        return Err(Error::Precondition(
            "width list must cover 3q cells".into(),
        ));
    }
    let q = widths.len() / 3;
    if widths.iter().sum::<usize>() != s.len() {
        return Err(Error::Precondition(format!(
            "widths sum to {}, string has {} digits",
            widths.iter().sum::<usize>(),
            s.len()
        )));
    }
    let mut cells = vec![0i128; 3 * q];
    let mut pos = 0;
    for cell in order.cell_order(3 * q)? {
        let w = widths[cell];
        let chunk = &s.as_str()[pos..pos + w];
        pos += w;
        if w > 1 && chunk.starts_with('0') {
            return Err(Error::Parse(format!(
                "segment {chunk:?} has a leading zero, not a decimal expansion"
            )));
        }
        cells[cell] = chunk
            .parse::<i128>()
            .map_err(|e| Error::Parse(format!("segment {chunk:?}: {e}")))?;
    }
    Ok(IntMatrix {
        x: cells[..q].to_vec(),
        e: cells[q..2 * q].to_vec(),
        y: cells[2 * q..].to_vec(),
    })
}

/// True when the two strings use every digit equally often, the
/// surviving necessary condition for a common matrix origin once the
/// emission order is lost.
pub fn string_multiset_equal(a: &DigitString, b: &DigitString) -> bool {
    a.digit_counts() == b.digit_counts()
}

/// One accepted cut of the input string: segment end positions, the
/// parameter pair, and per-segment witnesses (beta_j, gamma_j) with
/// a_j = beta_j*k0 + gamma_j*d0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub cuts: Vec<usize>,
    pub k0: i128,
    pub d0: i128,
    pub witnesses: Vec<(i128, i128)>,
}

/// One reconstruction: the integer matrix read off the cut, its
/// parameters, the cut itself, and every graph realizing the matrix.
#[derive(Debug, Clone)]
pub struct PnbspSolution {
    pub matrix: IntMatrix,
    pub k0: i128,
    pub d0: i128,
    pub segmentation: Segmentation,
    pub graphs: Vec<(Graph, TotalColoring)>,
}

#[derive(Debug)]
pub struct PnbspOutcome {
    pub solutions: Vec<PnbspSolution>,
    /// True when the budget ran out before the full (k0, d0) grid and
    /// all segmentations were covered; the list is then a prefix.
    pub exhausted: bool,
}

/// Upper bound of the (k0, d0) grid scanned by [`pnbsp_solve`].
pub const PNBSP_PARAM_LIMIT: i128 = 1000;

/// Largest column count [`pnbsp_solve`] accepts.
pub const PNBSP_Q_LIMIT: usize = 4;

/// Cuts `s` into 3q decimal segments forming the X, E and Y rows of a
/// matrix that is family-consistent at some (k0, d0) with d0 >= 1:
/// X entries are multiples of d0, the E row is exactly
/// {k0, k0+d0, ..., k0+(q-1)d0}, Y entries have the form k0+j*d0, and
/// the family constraint holds column by column. The grid is scanned
/// ascending in d0 then k0; ties are all reported. Every solution
/// regenerates `s` row-major by construction.
pub fn pnbsp_solve(
    s: &DigitString,
    q: usize,
    family: &FamilySpec,
    budget: u64,
) -> Result<PnbspOutcome> {
    if q == 0 {
        return Err(Error::Precondition("need at least one column".into()));
    }
    if q > PNBSP_Q_LIMIT {
        return Err(Error::TooLarge(format!(
            "the partition solver handles at most q = {PNBSP_Q_LIMIT} columns, got {q}"
        )));
    }
    match family.family {
        Family::Graceful
        | Family::Harmonious
        | Family::EdgeMagic
        | Family::EdgeDifference
        | Family::GracefulDifference
        | Family::FelicitousDifference => {}
        other => {
            return Err(Error::Precondition(format!(
                "the partition solver covers the six families with edge set \
                 {{k0, ..., k0+(q-1)d0}}, not {other}"
            )))
        }
    }
    let mut outcome = PnbspOutcome {
        solutions: Vec::new(),
        exhausted: false,
    };
    let mut spent = 0u64;
    'grid: for d0 in 1..=PNBSP_PARAM_LIMIT {
        for k0 in 0..=PNBSP_PARAM_LIMIT {
            if spent >= budget {
                outcome.exhausted = true;
                break 'grid;
            }
            spent += 1;
            let mut search = Cutter {
                digits: s.as_str().as_bytes(),
                q,
                family: family.family,
                k0,
                d0,
                edge_left: (0..q as i128).map(|j| k0 + j * d0).collect(),
                values: Vec::with_capacity(3 * q),
                cuts: Vec::with_capacity(3 * q),
                witnesses: Vec::with_capacity(3 * q),
                found: Vec::new(),
            };
            if !search.dfs(0, budget, &mut spent) {
                outcome.exhausted = true;
                break 'grid;
            }
            let mut batch = search.found;
            batch.sort_by(|a, b| (&a.x, &a.e, &a.y).cmp(&(&b.x, &b.e, &b.y)));
            for cut in batch {
                let forms = TopcodeMatrix::from_int_rows(&cut.x, &cut.e, &cut.y)?;
                let (graphs, _) = graphs_from_matrix(&forms, 100_000)?;
                outcome.solutions.push(PnbspSolution {
                    matrix: IntMatrix { x: cut.x, e: cut.e, y: cut.y },
                    k0,
                    d0,
                    segmentation: Segmentation {
                        cuts: cut.cuts,
                        k0,
                        d0,
                        witnesses: cut.witnesses,
                    },
                    graphs,
                });
            }
        }
    }
    Ok(outcome)
}

/// A finished cut within one (k0, d0): rows plus bookkeeping.
struct CutResult {
    x: Vec<i128>,
    e: Vec<i128>,
    y: Vec<i128>,
    cuts: Vec<usize>,
    witnesses: Vec<(i128, i128)>,
}

struct Cutter<'a> {
    digits: &'a [u8],
    q: usize,
    family: Family,
    k0: i128,
    d0: i128,
    /// Edge values not yet used; the E row must consume all of them.
    edge_left: Vec<i128>,
    values: Vec<i128>,
    cuts: Vec<usize>,
    witnesses: Vec<(i128, i128)>,
    found: Vec<CutResult>,
}

impl Cutter<'_> {
    /// Returns false only when the budget died mid-search.
    fn dfs(&mut self, pos: usize, budget: u64, spent: &mut u64) -> bool {
        let seg = self.cuts.len();
        if seg == 3 * self.q {
            if pos == self.digits.len() && self.residuals_hold() {
                self.found.push(CutResult {
                    x: self.values[..self.q].to_vec(),
                    e: self.values[self.q..2 * self.q].to_vec(),
                    y: self.values[2 * self.q..].to_vec(),
                    cuts: self.cuts.clone(),
                    witnesses: self.witnesses.clone(),
                });
            }
            return true;
        }
        let segs_after = 3 * self.q - seg - 1;
        let mut v: i128 = 0;
        for end in pos + 1..=self.digits.len().saturating_sub(segs_after) {
            if *spent >= budget {
                return false;
            }
            *spent += 1;
            // A segment starting with 0 is only the expansion of 0.
            if end > pos + 1 && self.digits[pos] == b'0' {
                break;
            }
            let digit = (self.digits[end - 1] - b'0') as i128;
            if v > (i128::MAX - digit) / 10 {
                break;
            }
            v = v * 10 + digit;
            let Some(witness) = self.admit(seg, v) else {
                if self.over_cap(seg, v) {
                    break;
                }
                continue;
            };
            self.values.push(v);
            self.cuts.push(end);
            self.witnesses.push(witness);
            let used_edge = seg / self.q == 1;
            if used_edge {
                let at = self.edge_left.iter().position(|&e| e == v).unwrap();
                self.edge_left.swap_remove(at);
            }
            let alive = self.dfs(end, budget, spent);
            if used_edge {
                self.edge_left.push(v);
            }
            self.values.pop();
            self.cuts.pop();
            self.witnesses.pop();
            if !alive {
                return false;
            }
        }
        true
    }

    /// Accepts value `v` for segment `seg` and returns its witness.
    fn admit(&self, seg: usize, v: i128) -> Option<(i128, i128)> {
        match seg / self.q {
            // X row: nonnegative multiples of d0.
            0 => (v % self.d0 == 0).then_some((0, v / self.d0)),
            // E row: one of the unconsumed edge values.
            1 => self
                .edge_left
                .contains(&v)
                .then_some((1, (v - self.k0) / self.d0)),
            // Y row: k0 + j*d0 with j >= 0, bounded for the families
            // whose definition bounds the total set.
            _ => {
                if v < self.k0 || (v - self.k0) % self.d0 != 0 {
                    return None;
                }
                let j = (v - self.k0) / self.d0;
                let bounded = matches!(self.family, Family::Graceful | Family::EdgeMagic);
                (!bounded || j < self.q as i128).then_some((1, j))
            }
        }
    }

    /// True when no longer segment can be admitted either, so the
    /// extension loop may stop.
    fn over_cap(&self, seg: usize, v: i128) -> bool {
        let top_edge = self.k0 + (self.q as i128 - 1) * self.d0;
        match seg / self.q {
            0 => false,
            1 => v > top_edge,
            _ => match self.family {
                Family::Graceful | Family::EdgeMagic => v > top_edge,
                _ => false,
            },
        }
    }

    fn residuals_hold(&self) -> bool {
        let q = self.q;
        let (x, e, y) = (
            &self.values[..q],
            &self.values[q..2 * q],
            &self.values[2 * q..],
        );
        let mut constant: Option<i128> = None;
        let mut same = |r: i128| match constant {
            None => {
                constant = Some(r);
                true
            }
            Some(c) => c == r,
        };
        (0..q).all(|i| match self.family {
            Family::Graceful => (x[i] - y[i]).abs() == e[i],
            Family::Harmonious => {
                (x[i] + y[i] - self.k0).rem_euclid(q as i128 * self.d0) == e[i] - self.k0
            }
            Family::EdgeMagic => same(x[i] + e[i] + y[i]),
            Family::EdgeDifference => same(e[i] + (x[i] - y[i]).abs()),
            Family::GracefulDifference => same(((x[i] - y[i]).abs() - e[i]).abs()),
            Family::FelicitousDifference => same((x[i] + y[i] - e[i]).abs()),
            _ => false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StringGroupMode {
    Add,
    Sub,
}

/// Digitwise every-zero group operation over a family of equal-length
/// strings: add gives c_{i,t}+c_{j,t}-c_{r,t} (mod M) in each place,
/// sub gives c_{i,t}-c_{j,t}+c_{r,t} (mod M), where r names the zero.
/// Returns the combined string and the index lambda = i+j-r (mod M)
/// (add) or i-j+r (mod M) (sub), represented in [1, M]. Indices are
/// 1-based.
pub fn string_group_op(
    family: &[DigitString],
    i: usize,
    j: usize,
    zero: usize,
    modulus: u32,
    mode: StringGroupMode,
) -> Result<(DigitString, usize)> {
    if !(1..=10).contains(&modulus) {
        return Err(Error::Precondition(
            "digitwise closure needs a modulus in [1, 10]".into(),
        ));
    }
    for idx in [i, j, zero] {
        if idx == 0 || idx > family.len() {
            return Err(Error::Precondition(format!(
                "index {idx} is outside the family [1, {}]",
                family.len()
            )));
        }
    }
    let (si, sj, sr) = (&family[i - 1], &family[j - 1], &family[zero - 1]);
    if si.len() != sj.len() || sj.len() != sr.len() {
        return Err(Error::Precondition(format!(
            "strings differ in length: {}, {}, {}",
            si.len(),
            sj.len(),
            sr.len()
        )));
    }
    let m = modulus as i64;
    let digits: String = si
        .as_str()
        .bytes()
        .zip(sj.as_str().bytes())
        .zip(sr.as_str().bytes())
        .map(|((a, b), z)| {
            let (a, b, z) = ((a - b'0') as i64, (b - b'0') as i64, (z - b'0') as i64);
            let c = match mode {
                StringGroupMode::Add => a + b - z,
                StringGroupMode::Sub => a - b + z,
            };
            (b'0' + c.rem_euclid(m) as u8) as char
        })
        .collect();
    let (i, j, zero) = (i as i64, j as i64, zero as i64);
    let raw = match mode {
        StringGroupMode::Add => i + j - zero,
        StringGroupMode::Sub => i - j + zero,
    };
    let lambda = ((raw - 1).rem_euclid(m) + 1) as usize;
    Ok((DigitString { digits }, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g2_code() -> IntMatrix {
        IntMatrix {
            x: vec![11, 11, 11, 11, 44, 44],
            e: vec![76, 52, 47, 33, 21, 31],
            y: vec![87, 63, 58, 44, 23, 13],
        }
    }

    #[test]
    fn row_major_string_of_a_colored_graph_code() {
        let s = string_from_matrix(&g2_code(), &OrderSpec::RowMajor).unwrap();
        assert_eq!(s.as_str(), "111111114444765247332131876358442313");
        assert_eq!(s.len(), 36);
    }

    #[test]
    fn trivial_column_and_negative_rejection() {
        let m = IntMatrix { x: vec![0], e: vec![1], y: vec![1] };
        let s = string_from_matrix(&m, &OrderSpec::RowMajor).unwrap();
        assert_eq!(s.as_str(), "011");
        let bad = IntMatrix { x: vec![-1], e: vec![1], y: vec![1] };
        assert!(string_from_matrix(&bad, &OrderSpec::RowMajor).is_err());
    }

    #[test]
    fn factorial_index_zero_is_row_major() {
        let m = g2_code();
        let a = string_from_matrix(&m, &OrderSpec::RowMajor).unwrap();
        let b = string_from_matrix(&m, &OrderSpec::FactorialIndex(0)).unwrap();
        assert_eq!(a, b);
        // The last index reverses the cell order.
        let total = factorial(18).unwrap();
        let rev = string_from_matrix(&m, &OrderSpec::FactorialIndex(total - 1)).unwrap();
        let manual: Vec<usize> = (0..18).rev().collect();
        let c = string_from_matrix(&m, &OrderSpec::Permutation(manual)).unwrap();
        assert_eq!(rev, c);
        assert!(string_from_matrix(&m, &OrderSpec::FactorialIndex(total)).is_err());
    }

    #[test]
    fn permutations_preserve_the_digit_multiset() {
        let m = g2_code();
        let canonical = string_from_matrix(&m, &OrderSpec::RowMajor).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut perm: Vec<usize> = (0..18).collect();
            perm.shuffle(&mut rng);
            let s = string_from_matrix(&m, &OrderSpec::Permutation(perm)).unwrap();
            assert!(string_multiset_equal(&canonical, &s));
        }
    }

    #[test]
    fn width_annotated_round_trip() {
        let m = g2_code();
        let widths = decimal_widths(&m);
        for order in [
            OrderSpec::RowMajor,
            OrderSpec::Permutation((0..18).rev().collect()),
        ] {
            let s = string_from_matrix(&m, &order).unwrap();
            let back = matrix_from_string(&s, &widths, &order).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn multiset_equality_examples() {
        let a: DigitString = "01".parse().unwrap();
        let b: DigitString = "10".parse().unwrap();
        let c: DigitString = "11".parse().unwrap();
        assert!(string_multiset_equal(&a, &b));
        assert!(!string_multiset_equal(&a, &c));
        assert!("1a2".parse::<DigitString>().is_err());
    }

    #[test]
    fn pnbsp_parses_the_smallest_string() {
        let s: DigitString = "011".parse().unwrap();
        let spec = FamilySpec::new(Family::Graceful);
        let out = pnbsp_solve(&s, 1, &spec, 30_000_000).unwrap();
        assert!(!out.exhausted);
        // The E row forces k0 = 1; every d0 in the grid divides x = 0
        // and fits y = k0, so each d0 appears once.
        assert_eq!(out.solutions.len(), PNBSP_PARAM_LIMIT as usize);
        let first = &out.solutions[0];
        assert_eq!((first.k0, first.d0), (1, 1));
        assert_eq!(first.matrix, IntMatrix { x: vec![0], e: vec![1], y: vec![1] });
        assert_eq!(first.segmentation.witnesses, vec![(0, 0), (1, 0), (1, 0)]);
        assert!(out.solutions.iter().all(|sol| sol.k0 == 1));
        for sol in &out.solutions {
            let back = string_from_matrix(&sol.matrix, &OrderSpec::RowMajor).unwrap();
            assert_eq!(back, s);
            assert!(!sol.graphs.is_empty());
        }
    }

    #[test]
    fn pnbsp_closes_the_loop_on_a_graceful_star() {
        // K_{1,2} colored gracefully at (3,2): x = 0, edges {3,5},
        // leaves {3,5}; row-major string "003535".
        let m = IntMatrix { x: vec![0, 0], e: vec![3, 5], y: vec![3, 5] };
        let s = string_from_matrix(&m, &OrderSpec::RowMajor).unwrap();
        assert_eq!(s.as_str(), "003535");
        let spec = FamilySpec::new(Family::Graceful);
        let out = pnbsp_solve(&s, 2, &spec, 60_000_000).unwrap();
        assert!(!out.exhausted);
        assert_eq!(out.solutions.len(), 1);
        let sol = &out.solutions[0];
        assert_eq!((sol.k0, sol.d0), (3, 2));
        assert_eq!(sol.matrix, m);
        // Both endpoint slots of color 0 may merge (the star) or stay
        // apart (two disjoint edges).
        assert_eq!(sol.graphs.len(), 2);
        for (g, f) in &sol.graphs {
            assert!(f.is_total_on(g));
        }
    }

    #[test]
    fn pnbsp_returns_no_false_positives() {
        let s: DigitString = "7919".parse().unwrap();
        let spec = FamilySpec::new(Family::Graceful);
        let out = pnbsp_solve(&s, 1, &spec, 5_000_000).unwrap();
        for sol in &out.solutions {
            let back = string_from_matrix(&sol.matrix, &OrderSpec::RowMajor).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn group_op_zero_behavior() {
        let family: Vec<DigitString> = ["123", "111"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let (s, lambda) =
            string_group_op(&family, 1, 2, 2, 10, StringGroupMode::Add).unwrap();
        assert_eq!(s.as_str(), "123");
        assert_eq!(lambda, 1);
    }

    #[test]
    fn group_add_then_sub_restores_the_operand() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let family: Vec<DigitString> = (0..5)
                .map(|_| {
                    let s: String =
                        (0..12).map(|_| char::from(b'0' + rng.gen_range(0..7))).collect();
                    s.parse().unwrap()
                })
                .collect();
            let (sum, _) = string_group_op(&family, 2, 4, 3, 7, StringGroupMode::Add).unwrap();
            let mut with_sum = family.clone();
            with_sum.push(sum);
            let (back, _) =
                string_group_op(&with_sum, 6, 4, 3, 7, StringGroupMode::Sub).unwrap();
            assert_eq!(back, family[1]);
        }
    }

    #[test]
    fn group_op_rejects_mismatched_lengths() {
        let family: Vec<DigitString> = ["12", "345"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(string_group_op(&family, 1, 2, 1, 10, StringGroupMode::Add).is_err());
    }
}
