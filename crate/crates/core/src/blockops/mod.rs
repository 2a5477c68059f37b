//! Operators over a common finite-dimensional base space, block operator
//! matrices built from them, and the dense kernels (LU, eigenvalues,
//! shift-invert iteration) every other module consumes.

mod eigen;
mod lu;
mod strategy;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FyError, Result};

pub use eigen::{
    dense_eigenvalues, hausdorff_distance, match_spectra, selector_pencil_eigenvalues, shift_invert_eigenpair,
    symmetric_eigenpairs, EigenResult, ShiftInvertOptions, SpectrumMatch,
};
pub use lu::{linear_solve, DenseLu};
pub use strategy::{DenseStrategy, EigenStrategy, ShiftInvertStrategy, SolveRequest, StrategyRegistry};

/// Largest matrix order handed to dense kernels unless overridden.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Anything that acts linearly on vectors of a fixed dimension and can
/// enumerate its stored entries.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Visits stored entries as `(row, col, value)`. Entries visited twice
    /// are meant to be summed.
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64));

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        self.for_each_entry(&mut |i, j, v| m[(i, j)] += v);
        m
    }
}

/// Compressed sparse row storage for a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(FyError::InvalidInput(format!(
                "triplet ({i}, {j}) outside a {dim}x{dim} matrix"
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self {
            dim,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut triplets = Vec::with_capacity(self.values.len());
        self.for_each_entry(&mut |i, j, v| {
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        });
        let mut row_ptr = vec![0; self.dim + 1];
        for &(i, _, _) in &triplets {
            row_ptr[i + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        self.row_ptr = row_ptr;
        self.col_idx = triplets.iter().map(|t| t.1).collect();
        self.values = triplets.iter().map(|t| t.2).collect();
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim,
            (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                f(i, j, v);
            }
        }
    }
}

type ApplyFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// An operator known only through its action.
#[derive(Clone)]
pub struct MatrixFree {
    dim: usize,
    apply: Arc<ApplyFn>,
}

impl MatrixFree {
    pub fn new(dim: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            apply: Arc::new(apply),
        }
    }
}

impl fmt::Debug for MatrixFree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFree").field("dim", &self.dim).finish_non_exhaustive()
    }
}

/// A square real operator in one of several storage forms.
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
    Sparse(CsrMatrix),
    MatrixFree(MatrixFree),
}

impl Operator {
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(FyError::InvalidInput(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::Dense(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self::Diagonal(DVector::from_element(dim, 1.0))
    }

    pub fn zero(dim: usize) -> Self {
        Self::Diagonal(DVector::zeros(dim))
    }

    /// Sum of two operators of equal dimension, keeping the cheapest storage
    /// that represents it exactly.
    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(FyError::InvalidInput(format!(
                "cannot add operators of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        use Operator::*;
        Ok(match (self, other) {
            (Diagonal(a), Diagonal(b)) => Diagonal(a + b),
            (Dense(a), b) | (b, Dense(a)) => {
                let mut m = a.clone();
                b.for_each_entry(&mut |i, j, v| m[(i, j)] += v);
                Dense(m)
            }
            (MatrixFree(_), _) | (_, MatrixFree(_)) => {
                let (a, b) = (self.clone(), other.clone());
                MatrixFree(self::MatrixFree::new(self.dim(), move |x| a.apply(x) + b.apply(x)))
            }
            _ => {
                let mut triplets = Vec::new();
                self.for_each_entry(&mut |i, j, v| triplets.push((i, j, v)));
                other.for_each_entry(&mut |i, j, v| triplets.push((i, j, v)));
                Sparse(CsrMatrix::from_triplets(self.dim(), triplets)?)
            }
        })
    }

    pub fn scaled(&self, s: f64) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(m * s),
            Operator::Diagonal(d) => Operator::Diagonal(d * s),
            Operator::Sparse(c) => {
                let mut c = c.clone();
                c.values.iter_mut().for_each(|v| *v *= s);
                c.drop_zeros();
                Operator::Sparse(c)
            }
            Operator::MatrixFree(f) => {
                let f = f.clone();
                Operator::MatrixFree(MatrixFree::new(f.dim, move |x| (f.apply)(x) * s))
            }
        }
    }

    /// Replaces the listed rows by `value` on the diagonal and zeros elsewhere.
    pub fn with_rows_replaced(&self, rows: &[usize], value: f64) -> Result<Operator> {
        let n = self.dim();
        let mut replace = vec![false; n];
        for &r in rows {
            if r >= n {
                return Err(FyError::InvalidInput(format!("row {r} outside dimension {n}")));
            }
            replace[r] = true;
        }
        Ok(match self {
            Operator::Diagonal(d) => {
                let mut d = d.clone();
                for (i, v) in d.iter_mut().enumerate() {
                    if replace[i] {
                        *v = value;
                    }
                }
                Operator::Diagonal(d)
            }
            Operator::Dense(m) => {
                let mut m = m.clone();
                for i in (0..n).filter(|&i| replace[i]) {
                    m.row_mut(i).fill(0.0);
                    m[(i, i)] = value;
                }
                Operator::Dense(m)
            }
            _ => {
                let mut triplets = Vec::new();
                self.for_each_entry(&mut |i, j, v| {
                    if !replace[i] {
                        triplets.push((i, j, v));
                    }
                });
                triplets.extend((0..n).filter(|&i| replace[i]).map(|i| (i, i, value)));
                Operator::Sparse(CsrMatrix::from_triplets(n, triplets)?)
            }
        })
    }

    /// Exact (entrywise) symmetry of the stored representation.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Operator::Diagonal(_) => true,
            _ => {
                let m = self.to_dense();
                m == m.transpose()
            }
        }
    }

    /// True when every stored entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        let mut zero = true;
        self.for_each_entry(&mut |_, _, v| zero &= v == 0.0);
        zero
    }
}

impl LinearOperator for Operator {
    fn dim(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Diagonal(d) => d.len(),
            Operator::Sparse(c) => c.dim,
            Operator::MatrixFree(f) => f.dim,
        }
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Operator::Dense(m) => m * x,
            Operator::Diagonal(d) => d.component_mul(x),
            Operator::Sparse(c) => c.apply(x),
            Operator::MatrixFree(f) => (f.apply)(x),
        }
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        match self {
            Operator::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        f(i, j, m[(i, j)]);
                    }
                }
            }
            Operator::Diagonal(d) => d.iter().enumerate().for_each(|(i, &v)| f(i, i, v)),
            Operator::Sparse(c) => c.for_each_entry(f),
            Operator::MatrixFree(mf) => {
                let mut e = DVector::zeros(mf.dim);
                for j in 0..mf.dim {
                    e[j] = 1.0;
                    let col = (mf.apply)(&e);
                    e[j] = 0.0;
                    col.iter().enumerate().for_each(|(i, &v)| f(i, j, v));
                }
            }
        }
    }
}

impl From<DMatrix<f64>> for Operator {
    fn from(m: DMatrix<f64>) -> Self {
        Operator::Dense(m)
    }
}

/// An `m x m` grid of optional operators over a base space of dimension `d`.
/// Absent entries are exact zeros.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    blocks: usize,
    base_dim: usize,
    entries: Vec<Option<Operator>>,
}

impl BlockOperator {
    pub fn new(blocks: usize, base_dim: usize) -> Self {
        Self {
            blocks,
            base_dim,
            entries: vec![None; blocks * blocks],
        }
    }

    /// Block-diagonal operator with the given diagonal entries.
    pub fn block_diagonal(diagonal: Vec<Operator>) -> Result<Self> {
        let d = diagonal.first().map_or(0, |o| o.dim());
        let mut b = Self::new(diagonal.len(), d);
        for (i, op) in diagonal.into_iter().enumerate() {
            b.set(i, i, op)?;
        }
        Ok(b)
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn set(&mut self, row: usize, col: usize, op: Operator) -> Result<()> {
        if row >= self.blocks || col >= self.blocks {
            return Err(FyError::InvalidInput(format!(
                "block ({row}, {col}) outside a {0}x{0} grid",
                self.blocks
            )));
        }
        if op.dim() != self.base_dim {
            return Err(FyError::InvalidInput(format!(
                "block ({row}, {col}) has dimension {} but the base space has {}",
                op.dim(),
                self.base_dim
            )));
        }
        self.entries[row * self.blocks + col] = Some(op);
        Ok(())
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&Operator> {
        self.entries[row * self.blocks + col].as_ref()
    }

    /// Entrywise sum; a block is present if it is present in either operand.
    pub fn add(&self, other: &BlockOperator) -> Result<BlockOperator> {
        if self.blocks != other.blocks || self.base_dim != other.base_dim {
            return Err(FyError::InvalidInput("block operators differ in shape".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => a.add(b).map(Some),
                (Some(a), None) | (None, Some(a)) => Ok(Some(a.clone())),
                (None, None) => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            entries,
            ..*self
        })
    }

    /// Presence pattern of the grid, row-major.
    pub fn pattern(&self) -> Vec<Vec<bool>> {
        (0..self.blocks)
            .map(|i| (0..self.blocks).map(|j| self.get(i, j).is_some()).collect())
            .collect()
    }

    /// Number of present off-diagonal blocks.
    pub fn off_diagonal_count(&self) -> usize {
        (0..self.blocks)
            .flat_map(|i| (0..self.blocks).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.get(i, j).is_some())
            .count()
    }

    /// Splits a vector on the enlarged space into its `m` block components.
    pub fn split(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let d = self.base_dim;
        (0..self.blocks).map(|k| x.rows(k * d, d).into_owned()).collect()
    }

    /// Stacks block components into one vector of the enlarged space.
    pub fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
        let total: usize = parts.iter().map(|p| p.len()).sum();
        DVector::from_iterator(total, parts.iter().flat_map(|p| p.iter().copied()))
    }

    fn check_consistent(&self) -> Result<()> {
        if self.entries.len() != self.blocks * self.blocks {
            return Err(FyError::InvalidInput("block grid has the wrong entry count".into()));
        }
        if let Some(op) = self.entries.iter().flatten().find(|o| o.dim() != self.base_dim) {
            return Err(FyError::InvalidInput(format!(
                "block of dimension {} in a base space of dimension {}",
                op.dim(),
                self.base_dim
            )));
        }
        Ok(())
    }
}

impl LinearOperator for BlockOperator {
    fn dim(&self) -> usize {
        self.blocks * self.base_dim
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.base_dim;
        let parts = self.split(x);
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.blocks {
            let mut acc = out.rows_mut(i * d, d);
            for (j, part) in parts.iter().enumerate() {
                if let Some(op) = self.get(i, j) {
                    acc += op.apply(part);
                }
            }
        }
        out
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        let d = self.base_dim;
        for i in 0..self.blocks {
            for j in 0..self.blocks {
                if let Some(op) = self.get(i, j) {
                    op.for_each_entry(&mut |r, c, v| f(i * d + r, j * d + c, v));
                }
            }
        }
    }
}

/// Materializes a block operator as one dense `(m·d) x (m·d)` operator.
pub fn flatten(block: &BlockOperator) -> Result<Operator> {
    block.check_consistent()?;
    Ok(Operator::Dense(block.to_dense()))
}

/// Writes a matrix in the row-major debugging format: a `rows cols` header
/// line followed by one line per row of space-separated `%.17e` values.
pub fn write_matrix<W: Write>(out: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Parses the format produced by [`write_matrix`].
pub fn read_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| FyError::InvalidInput("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| FyError::InvalidInput(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(FyError::InvalidInput(format!("bad header {header:?}")));
    };
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| FyError::InvalidInput(format!("missing row {i}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| FyError::InvalidInput(format!("bad value {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(FyError::InvalidInput(format!("row {i} has {} values", vals.len())));
        }
        m.row_mut(i).copy_from_slice(&vals);
    }
    Ok(m)
}
