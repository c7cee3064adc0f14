//! Dense bit-packed boolean and trit matrices.
//!
//! Two products drive everything else in the crate:
//!
//! * the boolean product `A·B`, `out[i][j] = OR_k (A[i][k] AND B[k][j])`;
//! * the sharp product `A⊙B`, `out[i][j] = MIN_k (B[k][j] - A[i][k] + 1)`,
//!   whose entries lie in `{0, 1, 2}`.
//!
//! Both are evaluated row-at-a-time with whole-word operations: the boolean
//! product ORs together the rows of `B` selected by row `i` of `A`, and the
//! sharp product takes the entrywise minimum of one trit row per inner index.

use std::fmt;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::{self, Ones};
use crate::model::ObjectSet;

/// Row count from which row-wise fills are spread over the rayon pool.
const PAR_ROWS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{0}: empty matrix list")]
    EmptyList(&'static str),
    #[error("sharp product needs a non-empty inner dimension")]
    EmptyInner,
    #[error("row {row}: expected {expected} entries, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: entry `{value}` out of range")]
    BadEntry {
        row: usize,
        col: usize,
        value: String,
    },
}

/// Row-major `rows × cols` matrix over `{0, 1}`.
///
/// Rows are `stride` words apart. After [`BoolMatrix::grow`] the stride can
/// exceed the row width, leaving zero spare words at the end of each row.
#[derive(Clone)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl PartialEq for BoolMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && (0..self.rows).all(|i| self.row_words(i) == other.row_words(i))
    }
}

impl Eq for BoolMatrix {}

impl Hash for BoolMatrix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.shape().hash(state);
        for i in 0..self.rows {
            self.row_words(i).hash(state);
        }
    }
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = bits::words_for(cols);
        BoolMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            bits::fill_ones(m.row_words_mut(i), cols);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from explicit `0`/`1` rows.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MatrixError::Ragged {
                    row: i,
                    expected: cols,
                    found: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(i, j, true),
                    _ => {
                        return Err(MatrixError::BadEntry {
                            row: i,
                            col: j,
                            value: v.to_string(),
                        })
                    }
                }
            }
        }
        Ok(m)
    }

    /// One column per set, `out[i][j] = 1` iff `i ∈ sets[j]`.
    pub fn from_columns(rows: usize, sets: &[&ObjectSet]) -> Self {
        let mut m = Self::zeros(rows, sets.len());
        for (j, s) in sets.iter().enumerate() {
            assert_eq!(s.universe_len(), rows);
            for i in s.iter() {
                m.set(i, j, true);
            }
        }
        m
    }

    /// Parses the dump format written by [`BoolMatrix::dump`].
    pub fn parse_dump(text: &str) -> Result<Self, MatrixError> {
        Self::from_rows(&parse_rows(text, 1)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(
            i < self.rows && j < self.cols,
            "({i}, {j}) out of bounds {:?}",
            self.shape()
        );
        bits::get(self.row_words(i), j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(
            i < self.rows && j < self.cols,
            "({i}, {j}) out of bounds {:?}",
            self.shape()
        );
        bits::set(self.row_words_mut(i), j, value);
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        let start = i * self.stride;
        &self.data[start..start + self.width()]
    }

    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        let (start, width) = (i * self.stride, self.width());
        &mut self.data[start..start + width]
    }

    /// Words holding one row's entries.
    fn width(&self) -> usize {
        bits::words_for(self.cols)
    }

    /// Row `i` read as a set over the column index space.
    pub fn row_set(&self, i: usize) -> ObjectSet {
        ObjectSet::from_words(self.cols, self.row_words(i).to_vec())
    }

    pub(crate) fn set_row(&mut self, i: usize, words: &[u64]) {
        self.row_words_mut(i).copy_from_slice(words);
    }

    /// Overwrites columns `col0..col0 + cols.len()` in rows `0..rows`: entry
    /// `(i, col0 + c)` becomes bit `i` of `cols[c]`.
    pub(crate) fn write_columns(&mut self, col0: usize, cols: &[&[u64]], rows: usize) {
        assert!(col0 + cols.len() <= self.cols && rows <= self.rows);
        let mut block = vec![0u64; rows];
        for (chunk, group) in cols.chunks(bits::WORD_BITS).enumerate() {
            block.iter_mut().for_each(|w| *w = 0);
            for (c, col) in group.iter().enumerate() {
                for i in bits::Ones::new(col).take_while(|&i| i < rows) {
                    block[i] |= 1 << c;
                }
            }
            let start = col0 + chunk * bits::WORD_BITS;
            for (i, w) in block.iter().enumerate() {
                bits::copy_range(
                    self.row_words_mut(i),
                    start,
                    std::slice::from_ref(w),
                    0,
                    group.len(),
                );
            }
        }
    }

    /// Overwrites every row with `f(i, row)`, in parallel for large matrices.
    pub(crate) fn fill_rows<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [u64]) + Sync,
    {
        if self.stride == 0 {
            return;
        }
        let width = self.width();
        if self.rows >= PAR_ROWS {
            self.data
                .par_chunks_mut(self.stride)
                .enumerate()
                .for_each(|(i, row)| f(i, &mut row[..width]));
        } else {
            self.data
                .chunks_mut(self.stride)
                .enumerate()
                .for_each(|(i, row)| f(i, &mut row[..width]));
        }
    }

    pub fn row_ones(&self, i: usize) -> Ones<'_> {
        Ones::new(self.row_words(i))
    }

    pub fn count_ones(&self) -> usize {
        bits::count_ones(&self.data)
    }

    pub fn is_zero(&self) -> bool {
        bits::is_zero(&self.data)
    }

    pub fn transpose(&self) -> BoolMatrix {
        let mut out = BoolMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_ones(i) {
                out.set(j, i, true);
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    /// `true` iff `self[i][j] <= other[i][j]` everywhere.
    pub fn leq(&self, other: &BoolMatrix) -> Result<bool, MatrixError> {
        self.same_shape("leq", other)?;
        Ok((0..self.rows).all(|i| bits::is_subset(self.row_words(i), other.row_words(i))))
    }

    /// Boolean matrix–vector product: entry `i` is set iff row `i` meets `x`.
    pub fn mul_vec(&self, x: &ObjectSet) -> Result<ObjectSet, MatrixError> {
        if x.universe_len() != self.cols {
            return Err(MatrixError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (x.universe_len(), 1),
            });
        }
        let hits = (0..self.rows).filter(|&i| bits::intersects(self.row_words(i), x.words()));
        Ok(ObjectSet::from_indices(self.rows, hits))
    }

    /// Sharp matrix–vector product `self ⊙ x` with `x` a column vector.
    ///
    /// Entry `i` is `MIN_k (x[k] - self[i][k] + 1)`: `0`/`1` according to
    /// whether row `i` is contained in `x` when the row is non-empty, and
    /// `1 + [x is full]` for an all-zero row.
    pub fn sharp_vec(&self, x: &ObjectSet) -> Result<Vec<u8>, MatrixError> {
        if x.universe_len() != self.cols {
            return Err(MatrixError::DimensionMismatch {
                op: "sharp_vec",
                left: self.shape(),
                right: (x.universe_len(), 1),
            });
        }
        if self.cols == 0 {
            return Err(MatrixError::EmptyInner);
        }
        let full = x.is_full();
        Ok((0..self.rows)
            .map(|i| {
                let row = self.row_words(i);
                if bits::is_zero(row) {
                    1 + u8::from(full)
                } else {
                    u8::from(bits::is_subset(row, x.words()))
                }
            })
            .collect())
    }

    /// One line per row, entries separated by single spaces, newline-terminated.
    pub fn dump(&self) -> String {
        let mut s = String::with_capacity(self.rows * (2 * self.cols + 1));
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    s.push(' ');
                }
                s.push(if self.get(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// Submatrix keeping the listed rows and columns (each ascending).
    pub fn select(&self, keep_rows: &[usize], keep_cols: &[usize]) -> BoolMatrix {
        let mut out = BoolMatrix::zeros(keep_rows.len(), keep_cols.len());
        let runs = bits::runs_of(keep_cols);
        for (ni, &i) in keep_rows.iter().enumerate() {
            let src = self.row_words(i);
            let dst = out.row_words_mut(ni);
            for &(src_start, dst_start, len) in &runs {
                bits::copy_range(dst, dst_start, src, src_start, len);
            }
        }
        out
    }

    /// Pads with zero rows/columns to `rows × cols` in place. When the
    /// new columns no longer fit in the row stride, rows are relaid with half
    /// again as many spare words, so repeated growth copies rarely.
    pub fn grow(&mut self, rows: usize, cols: usize) {
        assert!(rows >= self.rows && cols >= self.cols);
        let width = bits::words_for(cols);
        if width > self.stride {
            let stride = width.max(self.stride + self.stride / 2);
            let mut data = Vec::with_capacity((rows + rows / 2) * stride);
            data.resize(rows * stride, 0);
            for i in 0..self.rows {
                data[i * stride..i * stride + self.width()].copy_from_slice(self.row_words(i));
            }
            self.data = data;
            self.stride = stride;
        } else {
            self.data.resize(rows * self.stride, 0);
        }
        self.rows = rows;
        self.cols = cols;
    }

    /// Copy padded with zero rows/columns to `rows × cols`.
    pub fn padded(&self, rows: usize, cols: usize) -> BoolMatrix {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut out = BoolMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            out.row_words_mut(i)[..self.width()].copy_from_slice(self.row_words(i));
        }
        out
    }

    fn same_shape(&self, op: &'static str, other: &BoolMatrix) -> Result<(), MatrixError> {
        if self.shape() != other.shape() {
            return Err(MatrixError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{}", self.rows, self.cols)?;
        f.write_str(&self.dump())
    }
}

/// Matrix over `{0, 1, 2}` stored as two threshold bit planes: `ge1` marks
/// entries `>= 1` and `ge2` marks entries `== 2`, so `ge2 ⊆ ge1` and
/// entrywise min/max become plane-wise AND/OR.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TritMatrix {
    ge1: BoolMatrix,
    ge2: BoolMatrix,
}

impl TritMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TritMatrix {
            ge1: BoolMatrix::zeros(rows, cols),
            ge2: BoolMatrix::zeros(rows, cols),
        }
    }

    pub fn from_planes(ge1: BoolMatrix, ge2: BoolMatrix) -> Result<Self, MatrixError> {
        if ge1.shape() != ge2.shape() {
            return Err(MatrixError::DimensionMismatch {
                op: "from_planes",
                left: ge1.shape(),
                right: ge2.shape(),
            });
        }
        if !ge2.leq(&ge1)? {
            return Err(MatrixError::BadEntry {
                row: 0,
                col: 0,
                value: "inconsistent planes".into(),
            });
        }
        Ok(TritMatrix { ge1, ge2 })
    }

    /// Embeds a boolean matrix (entries stay 0/1).
    pub fn from_bool(m: &BoolMatrix) -> Self {
        TritMatrix {
            ge1: m.clone(),
            ge2: BoolMatrix::zeros(m.rows, m.cols),
        }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MatrixError::Ragged {
                    row: i,
                    expected: cols,
                    found: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                if v > 2 {
                    return Err(MatrixError::BadEntry {
                        row: i,
                        col: j,
                        value: v.to_string(),
                    });
                }
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn parse_dump(text: &str) -> Result<Self, MatrixError> {
        Self::from_rows(&parse_rows(text, 2)?)
    }

    pub fn rows(&self) -> usize {
        self.ge1.rows
    }

    pub fn cols(&self) -> usize {
        self.ge1.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        self.ge1.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.ge1.get(i, j)) + u8::from(self.ge2.get(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, value: u8) {
        assert!(value <= 2, "trit out of range: {value}");
        self.ge1.set(i, j, value >= 1);
        self.ge2.set(i, j, value == 2);
    }

    /// Plane of entries `>= 1`.
    pub fn ge1(&self) -> &BoolMatrix {
        &self.ge1
    }

    /// Plane of entries equal to 2.
    pub fn ge2(&self) -> &BoolMatrix {
        &self.ge2
    }

    pub(crate) fn planes_mut(&mut self) -> (&mut BoolMatrix, &mut BoolMatrix) {
        (&mut self.ge1, &mut self.ge2)
    }

    pub(crate) fn set_row(&mut self, i: usize, ge1: &[u64], ge2: &[u64]) {
        self.ge1.set_row(i, ge1);
        self.ge2.set_row(i, ge2);
    }

    pub fn has_twos(&self) -> bool {
        !self.ge2.is_zero()
    }

    /// The matrix as a boolean one, or `None` if some entry equals 2.
    pub fn to_bool(&self) -> Option<BoolMatrix> {
        if self.has_twos() {
            None
        } else {
            Some(self.ge1.clone())
        }
    }

    pub fn transpose(&self) -> TritMatrix {
        TritMatrix {
            ge1: self.ge1.transpose(),
            ge2: self.ge2.transpose(),
        }
    }

    pub fn select(&self, keep_rows: &[usize], keep_cols: &[usize]) -> TritMatrix {
        TritMatrix {
            ge1: self.ge1.select(keep_rows, keep_cols),
            ge2: self.ge2.select(keep_rows, keep_cols),
        }
    }

    pub fn grow(&mut self, rows: usize, cols: usize) {
        self.ge1.grow(rows, cols);
        self.ge2.grow(rows, cols);
    }

    pub fn padded(&self, rows: usize, cols: usize) -> TritMatrix {
        TritMatrix {
            ge1: self.ge1.padded(rows, cols),
            ge2: self.ge2.padded(rows, cols),
        }
    }

    pub fn dump(&self) -> String {
        let (rows, cols) = self.shape();
        let mut s = String::with_capacity(rows * (2 * cols + 1));
        for i in 0..rows {
            for j in 0..cols {
                if j > 0 {
                    s.push(' ');
                }
                s.push(char::from(b'0' + self.get(i, j)));
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for TritMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TritMatrix {}x{}", self.rows(), self.cols())?;
        f.write_str(&self.dump())
    }
}

fn parse_rows(text: &str, max: u8) -> Result<Vec<Vec<u8>>, MatrixError> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split_whitespace()
                .enumerate()
                .map(|(j, tok)| match tok.parse::<u8>() {
                    Ok(v) if v <= max => Ok(v),
                    _ => Err(MatrixError::BadEntry {
                        row: i,
                        col: j,
                        value: tok.to_string(),
                    }),
                })
                .collect()
        })
        .collect()
}

/// Boolean product `A·B`.
pub fn bool_product(a: &BoolMatrix, b: &BoolMatrix) -> Result<BoolMatrix, MatrixError> {
    if a.cols != b.rows {
        return Err(MatrixError::DimensionMismatch {
            op: "bool_product",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = BoolMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let dst = out.row_words_mut(i);
        for k in a.row_ones(i) {
            bits::or_into(dst, b.row_words(k));
        }
    }
    Ok(out)
}

/// Sharp product `A⊙B` with `out[i][j] = MIN_k (B[k][j] - A[i][k] + 1)`.
///
/// For a fixed `i` and `k`, the term row over `j` is `B[k]` when
/// `A[i][k] = 1` and `B[k] + 1` otherwise; the result row is the entrywise
/// minimum of those `p` term rows.
pub fn sharp_product(a: &BoolMatrix, b: &BoolMatrix) -> Result<TritMatrix, MatrixError> {
    if a.cols != b.rows {
        return Err(MatrixError::DimensionMismatch {
            op: "sharp_product",
            left: a.shape(),
            right: b.shape(),
        });
    }
    if a.cols == 0 {
        return Err(MatrixError::EmptyInner);
    }
    let mut out = TritMatrix::zeros(a.rows, b.cols);
    let mut ge1 = vec![0u64; b.width()];
    let mut ge2 = vec![0u64; b.width()];
    for i in 0..a.rows {
        bits::fill_ones(&mut ge1, b.cols);
        bits::fill_ones(&mut ge2, b.cols);
        for k in 0..a.cols {
            let bk = b.row_words(k);
            if a.get(i, k) {
                // term = B[k] ∈ {0,1}
                bits::and_into(&mut ge1, bk);
                ge2.fill(0);
            } else {
                // term = B[k] + 1 ∈ {1,2}
                bits::and_into(&mut ge2, bk);
            }
        }
        out.set_row(i, &ge1, &ge2);
    }
    Ok(out)
}

/// Entrywise OR of a non-empty list of equally shaped matrices.
pub fn entrywise_join(ms: &[BoolMatrix]) -> Result<BoolMatrix, MatrixError> {
    let (first, rest) = ms
        .split_first()
        .ok_or(MatrixError::EmptyList("entrywise_join"))?;
    let mut out = first.clone();
    for m in rest {
        out.same_shape("entrywise_join", m)?;
        for i in 0..out.rows {
            bits::or_into(out.row_words_mut(i), m.row_words(i));
        }
    }
    Ok(out)
}

/// Entrywise minimum of a non-empty list of equally shaped trit matrices.
pub fn entrywise_meet(ms: &[TritMatrix]) -> Result<TritMatrix, MatrixError> {
    let (first, rest) = ms
        .split_first()
        .ok_or(MatrixError::EmptyList("entrywise_meet"))?;
    let mut out = first.clone();
    for m in rest {
        out.ge1.same_shape("entrywise_meet", &m.ge1)?;
        for i in 0..out.rows() {
            bits::and_into(out.ge1.row_words_mut(i), m.ge1.row_words(i));
            bits::and_into(out.ge2.row_words_mut(i), m.ge2.row_words(i));
        }
    }
    Ok(out)
}
