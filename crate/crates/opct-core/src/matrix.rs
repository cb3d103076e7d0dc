//! Dense (row-major) and CSR sparse matrix storage with the numeric kernels
//! used by split learning, tree induction and evaluation.
//!
//! Representation contract: the two storage forms of the same logical matrix
//! produce *bit-identical* kernel results. Every reduction walks indices in
//! ascending order and accumulates sequentially; the sparse paths skip stored
//! zeros, which are exact no-ops for the dense paths. Keep that discipline
//! when touching this file — model reproducibility across representations
//! depends on it. In particular do not introduce pairwise/blocked summation
//! or reorder loops.

use crate::error::{Error, Result};

/// Row-major dense matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                context: "dense matrix values",
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dense matrix contains non-finite value {bad}"
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Test/helper constructor from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    context: "dense matrix row",
                    expected: c,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(r, c, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn unchecked(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }
}

/// CSR sparse matrix. Canonical form: within each row, column indices are
/// strictly increasing and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from raw CSR arrays, canonicalizing on the way in: entries in
    /// each row are sorted by column, duplicates summed, exact zeros dropped.
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::LengthMismatch {
                context: "sparse row offsets",
                expected: rows + 1,
                got: row_offsets.len(),
            });
        }
        if col_indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                context: "sparse column indices",
                expected: values.len(),
                got: col_indices.len(),
            });
        }
        if row_offsets.first() != Some(&0) || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::InvalidArgument(
                "sparse row offsets must start at 0 and end at nnz".into(),
            ));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "sparse row offsets must be non-decreasing".into(),
            ));
        }
        if let Some(&j) = col_indices.iter().find(|&&j| j >= cols) {
            return Err(Error::InvalidArgument(format!(
                "sparse column index {j} out of range (cols = {cols})"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sparse matrix contains non-finite value {bad}"
            )));
        }

        // canonicalize row by row
        let mut out_offsets = Vec::with_capacity(rows + 1);
        let mut out_cols = Vec::with_capacity(values.len());
        let mut out_vals = Vec::with_capacity(values.len());
        out_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            scratch.clear();
            scratch.extend(col_indices[lo..hi].iter().copied().zip(values[lo..hi].iter().copied()));
            scratch.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < scratch.len() {
                let j = scratch[k].0;
                let mut v = scratch[k].1;
                k += 1;
                while k < scratch.len() && scratch[k].0 == j {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    out_cols.push(j);
                    out_vals.push(v);
                }
            }
            out_offsets.push(out_cols.len());
        }
        Ok(Self {
            rows,
            cols,
            row_offsets: out_offsets,
            col_indices: out_cols,
            values: out_vals,
        })
    }

    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, _, _)) = triplets.iter().find(|&&(i, _, _)| i >= rows) {
            return Err(Error::InvalidArgument(format!(
                "triplet row index {i} out of range (rows = {rows})"
            )));
        }
        let mut counts = vec![0usize; rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut col_indices = vec![0usize; triplets.len()];
        let mut values = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let k = cursor[i];
            col_indices[k] = j;
            values[k] = v;
            cursor[i] += 1;
        }
        Self::new(rows, cols, counts, col_indices, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row_entries(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row_entries(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    fn unchecked(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        }
    }
}

/// Tagged union over the two storage forms. Most of the crate works in terms
/// of this type so representation is an orthogonal choice.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixHandle {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl From<DenseMatrix> for MatrixHandle {
    fn from(m: DenseMatrix) -> Self {
        MatrixHandle::Dense(m)
    }
}

impl From<SparseMatrix> for MatrixHandle {
    fn from(m: SparseMatrix) -> Self {
        MatrixHandle::Sparse(m)
    }
}

impl MatrixHandle {
    pub fn rows(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.rows(),
            MatrixHandle::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.cols(),
            MatrixHandle::Sparse(m) => m.cols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, MatrixHandle::Sparse(_))
    }

    /// Count of stored nonzeros (dense form counts actual nonzero entries).
    pub fn nnz(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.values().iter().filter(|&&v| v != 0.0).count(),
            MatrixHandle::Sparse(m) => m.nnz(),
        }
    }

    /// Fraction of nonzero entries; 0 for an empty matrix.
    pub fn density(&self) -> f64 {
        let total = self.rows() * self.cols();
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            MatrixHandle::Dense(m) => m.get(i, j),
            MatrixHandle::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            MatrixHandle::Dense(m) => m.clone(),
            MatrixHandle::Sparse(m) => {
                let mut out = DenseMatrix::zeros(m.rows(), m.cols());
                for i in 0..m.rows() {
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        out.values_mut()[i * m.cols() + j] = v;
                    }
                }
                out
            }
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            MatrixHandle::Sparse(m) => m.clone(),
            MatrixHandle::Dense(m) => {
                let mut offsets = Vec::with_capacity(m.rows() + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                offsets.push(0);
                for i in 0..m.rows() {
                    for (j, &v) in m.row(i).iter().enumerate() {
                        if v != 0.0 {
                            cols.push(j);
                            vals.push(v);
                        }
                    }
                    offsets.push(cols.len());
                }
                SparseMatrix::unchecked(m.rows(), m.cols(), offsets, cols, vals)
            }
        }
    }

    /// Gathers rows by index (duplicates allowed), preserving representation.
    pub fn select_rows(&self, idx: &[usize]) -> MatrixHandle {
        match self {
            MatrixHandle::Dense(m) => {
                let mut values = Vec::with_capacity(idx.len() * m.cols());
                for &i in idx {
                    values.extend_from_slice(m.row(i));
                }
                MatrixHandle::Dense(DenseMatrix::unchecked(idx.len(), m.cols(), values))
            }
            MatrixHandle::Sparse(m) => {
                let mut offsets = Vec::with_capacity(idx.len() + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                offsets.push(0);
                for &i in idx {
                    let (c, v) = m.row_entries(i);
                    cols.extend_from_slice(c);
                    vals.extend_from_slice(v);
                    offsets.push(cols.len());
                }
                MatrixHandle::Sparse(SparseMatrix::unchecked(
                    idx.len(),
                    m.cols(),
                    offsets,
                    cols,
                    vals,
                ))
            }
        }
    }

    /// Gathers columns by index. `idx` must be strictly increasing; the
    /// feature-subset machinery always passes a sorted subset.
    pub fn select_cols(&self, idx: &[usize]) -> MatrixHandle {
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        match self {
            MatrixHandle::Dense(m) => {
                let mut values = Vec::with_capacity(m.rows() * idx.len());
                for i in 0..m.rows() {
                    let row = m.row(i);
                    for &j in idx {
                        values.push(row[j]);
                    }
                }
                MatrixHandle::Dense(DenseMatrix::unchecked(m.rows(), idx.len(), values))
            }
            MatrixHandle::Sparse(m) => {
                let mut remap = vec![usize::MAX; m.cols()];
                for (new, &old) in idx.iter().enumerate() {
                    remap[old] = new;
                }
                let mut offsets = Vec::with_capacity(m.rows() + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                offsets.push(0);
                for i in 0..m.rows() {
                    let (c, v) = m.row_entries(i);
                    for (&j, &x) in c.iter().zip(v) {
                        if remap[j] != usize::MAX {
                            cols.push(remap[j]);
                            vals.push(x);
                        }
                    }
                    offsets.push(cols.len());
                }
                MatrixHandle::Sparse(SparseMatrix::unchecked(
                    m.rows(),
                    idx.len(),
                    offsets,
                    cols,
                    vals,
                ))
            }
        }
    }

    /// Dot product of row `i` with a dense vector.
    #[inline]
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        match self {
            MatrixHandle::Dense(m) => {
                let mut acc = 0.0;
                for (x, w) in m.row(i).iter().zip(v) {
                    acc += x * w;
                }
                acc
            }
            MatrixHandle::Sparse(m) => {
                let (cols, vals) = m.row_entries(i);
                let mut acc = 0.0;
                for (&j, &x) in cols.iter().zip(vals) {
                    acc += x * v[j];
                }
                acc
            }
        }
    }

    /// `M v` — result length `rows`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols() {
            return Err(Error::LengthMismatch {
                context: "matvec vector",
                expected: self.cols(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(i, v);
        }
        Ok(out)
    }

    /// `Mᵀ v` — result length `cols`.
    pub fn matvec_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows() {
            return Err(Error::LengthMismatch {
                context: "transposed matvec vector",
                expected: self.rows(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols()];
        match self {
            MatrixHandle::Dense(m) => {
                for i in 0..m.rows() {
                    let vi = v[i];
                    for (o, &x) in out.iter_mut().zip(m.row(i)) {
                        *o += vi * x;
                    }
                }
            }
            MatrixHandle::Sparse(m) => {
                for i in 0..m.rows() {
                    let vi = v[i];
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &x) in cols.iter().zip(vals) {
                        out[j] += vi * x;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Per-column sums.
    pub fn col_sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.accumulate_cols(|x| x, &mut out);
        out
    }

    /// Per-column sums of squares.
    pub fn col_sum_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.accumulate_cols(|x| x * x, &mut out);
        out
    }

    fn accumulate_cols(&self, f: impl Fn(f64) -> f64, out: &mut [f64]) {
        match self {
            MatrixHandle::Dense(m) => {
                for i in 0..m.rows() {
                    for (o, &x) in out.iter_mut().zip(m.row(i)) {
                        *o += f(x);
                    }
                }
            }
            MatrixHandle::Sparse(m) => {
                for i in 0..m.rows() {
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &x) in cols.iter().zip(vals) {
                        out[j] += f(x);
                    }
                }
            }
        }
    }

    /// Unweighted column means. Errors on an empty matrix.
    pub fn colmean(&self) -> Result<Vec<f64>> {
        if self.rows() == 0 {
            return Err(Error::EmptyInput("colmean of a matrix with no rows"));
        }
        let n = self.rows() as f64;
        let mut sums = self.col_sum();
        for s in &mut sums {
            *s /= n;
        }
        Ok(sums)
    }

    fn check_weights(&self, a: &[f64], ctx: &'static str) -> Result<f64> {
        if a.len() != self.rows() {
            return Err(Error::LengthMismatch {
                context: "weight vector",
                expected: self.rows(),
                got: a.len(),
            });
        }
        let mut total = 0.0;
        for &w in a {
            if !(w >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "weights must be non-negative, got {w}"
                )));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::DegenerateWeights(ctx));
        }
        Ok(total)
    }

    /// Weighted column means: `mean(v, a) = Σ aᵢ vᵢ / Σ aᵢ` per column.
    pub fn weighted_colmean(&self, a: &[f64]) -> Result<Vec<f64>> {
        let total = self.check_weights(a, "weighted_colmean")?;
        let mut out = vec![0.0; self.cols()];
        self.weighted_accumulate(a, &mut out, &mut []);
        for o in &mut out {
            *o /= total;
        }
        Ok(out)
    }

    /// Weighted column variances via `mean(v², a) − mean(v, a)²`, clamped at 0.
    pub fn weighted_colvar(&self, a: &[f64]) -> Result<Vec<f64>> {
        let total = self.check_weights(a, "weighted_colvar")?;
        let mut sums = vec![0.0; self.cols()];
        let mut sq = vec![0.0; self.cols()];
        self.weighted_accumulate(a, &mut sums, &mut sq);
        let mut out = sq;
        for (o, s) in out.iter_mut().zip(&sums) {
            let mean = s / total;
            *o = (*o / total - mean * mean).max(0.0);
        }
        Ok(out)
    }

    /// One pass collecting Σaᵢvᵢ and (when `sq` is non-empty) Σaᵢvᵢ².
    fn weighted_accumulate(&self, a: &[f64], sums: &mut [f64], sq: &mut [f64]) {
        let with_sq = !sq.is_empty();
        match self {
            MatrixHandle::Dense(m) => {
                for i in 0..m.rows() {
                    let ai = a[i];
                    let row = m.row(i);
                    if with_sq {
                        for j in 0..row.len() {
                            let x = row[j];
                            sums[j] += ai * x;
                            sq[j] += ai * x * x;
                        }
                    } else {
                        for (s, &x) in sums.iter_mut().zip(row) {
                            *s += ai * x;
                        }
                    }
                }
            }
            MatrixHandle::Sparse(m) => {
                for i in 0..m.rows() {
                    let ai = a[i];
                    let (cols, vals) = m.row_entries(i);
                    if with_sq {
                        for (&j, &x) in cols.iter().zip(vals) {
                            sums[j] += ai * x;
                            sq[j] += ai * x * x;
                        }
                    } else {
                        for (&j, &x) in cols.iter().zip(vals) {
                            sums[j] += ai * x;
                        }
                    }
                }
            }
        }
    }

    /// True for every column that holds a single repeated value.
    pub fn constant_cols(&self) -> Vec<bool> {
        let k = self.cols();
        let n = self.rows();
        if n == 0 {
            return vec![true; k];
        }
        match self {
            MatrixHandle::Dense(m) => {
                let first = m.row(0).to_vec();
                let mut constant = vec![true; k];
                for i in 1..n {
                    for (c, (&x, &f)) in constant.iter_mut().zip(m.row(i).iter().zip(&first)) {
                        if x != f {
                            *c = false;
                        }
                    }
                }
                constant
            }
            MatrixHandle::Sparse(m) => {
                // a sparse column is constant iff it is all zeros, or it has
                // a stored value in every row and all stored values agree
                let mut counts = vec![0usize; k];
                let mut value = vec![0.0f64; k];
                let mut agree = vec![true; k];
                for i in 0..n {
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &x) in cols.iter().zip(vals) {
                        if counts[j] == 0 {
                            value[j] = x;
                        } else if x != value[j] {
                            agree[j] = false;
                        }
                        counts[j] += 1;
                    }
                }
                (0..k)
                    .map(|j| counts[j] == 0 || (counts[j] == n && agree[j]))
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn matvec_identity() {
        let m = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let out = MatrixHandle::Dense(m).matvec(&[3.0, -1.0]).unwrap();
        assert_eq!(out, vec![3.0, -1.0]);
    }

    #[test]
    fn matvec_zero_sparse() {
        let m = SparseMatrix::from_triplets(3, 4, &[]).unwrap();
        let out = MatrixHandle::Sparse(m).matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn matvec_csr_row_products() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]).unwrap();
        let out = MatrixHandle::Sparse(m).matvec(&[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![3.0, 3.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let m = MatrixHandle::Dense(DenseMatrix::zeros(2, 3));
        assert!(m.matvec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn weighted_colmean_values() {
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[1.0], &[3.0]]).unwrap());
        assert_eq!(m.weighted_colmean(&[1.0, 1.0]).unwrap(), vec![2.0]);
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[0.0], &[1.0]]).unwrap());
        assert_eq!(m.weighted_colmean(&[1.0, 3.0]).unwrap(), vec![0.75]);
    }

    #[test]
    fn weighted_colmean_one_hot_selects_row() {
        let m = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[&[1.0, 5.0], &[2.0, 7.0], &[4.0, 9.0]]).unwrap(),
        );
        assert_eq!(m.weighted_colmean(&[0.0, 1.0, 0.0]).unwrap(), vec![2.0, 7.0]);
    }

    #[test]
    fn weighted_colmean_zero_weights_errors() {
        let m = MatrixHandle::Dense(DenseMatrix::zeros(2, 1));
        assert!(matches!(
            m.weighted_colmean(&[0.0, 0.0]),
            Err(Error::DegenerateWeights(_))
        ));
    }

    #[test]
    fn weighted_colvar_values() {
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[1.0], &[3.0]]).unwrap());
        assert_eq!(m.weighted_colvar(&[1.0, 1.0]).unwrap(), vec![1.0]);
        // two-pass oracle: Σa(v−m)²/A = 3/4 − 9/16 = 0.1875
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[0.0], &[1.0]]).unwrap());
        assert_eq!(m.weighted_colvar(&[1.0, 3.0]).unwrap(), vec![0.1875]);
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[5.0], &[5.0], &[5.0]]).unwrap());
        assert_eq!(m.weighted_colvar(&[0.5, 1.0, 2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn colmean_values() {
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[0.0, 1.0], &[2.0, 3.0]]).unwrap());
        assert_eq!(m.colmean().unwrap(), vec![1.0, 2.0]);
        let single = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[4.0, 5.0]]).unwrap());
        assert_eq!(single.colmean().unwrap(), vec![4.0, 5.0]);
        let sparse = MatrixHandle::Sparse(SparseMatrix::from_triplets(3, 4, &[(0, 2, 6.0)]).unwrap());
        assert_eq!(sparse.colmean().unwrap(), vec![0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn colmean_empty_errors() {
        let m = MatrixHandle::Dense(DenseMatrix::zeros(0, 3));
        assert!(m.colmean().is_err());
    }

    #[test]
    fn canonicalization_drops_zeros_sorts_and_merges() {
        let m = SparseMatrix::new(
            2,
            3,
            vec![0, 3, 4],
            vec![2, 0, 2, 1],
            vec![1.5, 0.0, -1.5, 2.0],
        )
        .unwrap();
        // row 0: (2,1.5) and (2,-1.5) merge to zero and drop; (0,0.0) drops
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), 2.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn dense_sparse_kernels_bit_identical() {
        // seeded pseudo-random sparse-ish matrix built without rand
        let mut vals = Vec::new();
        let mut state = 11u64;
        let (n, k) = (23, 7);
        for _ in 0..n * k {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            vals.push(if u < 0.7 { 0.0 } else { u * 4.0 - 2.0 });
        }
        let dense = DenseMatrix::new(n, k, vals).unwrap();
        let dh = MatrixHandle::Dense(dense.clone());
        let sh = MatrixHandle::Sparse(dh.to_sparse());

        let v: Vec<f64> = (0..k).map(|j| (j as f64) * 0.37 - 1.0).collect();
        assert_eq!(dh.matvec(&v).unwrap(), sh.matvec(&v).unwrap());
        let u: Vec<f64> = (0..n).map(|i| (i as f64) * 0.11 - 0.5).collect();
        assert_eq!(dh.matvec_t(&u).unwrap(), sh.matvec_t(&u).unwrap());
        assert_eq!(dh.colmean().unwrap(), sh.colmean().unwrap());
        let a: Vec<f64> = (0..n).map(|i| 0.1 + (i % 5) as f64).collect();
        assert_eq!(dh.weighted_colmean(&a).unwrap(), sh.weighted_colmean(&a).unwrap());
        assert_eq!(dh.weighted_colvar(&a).unwrap(), sh.weighted_colvar(&a).unwrap());
        assert_eq!(dh.col_sum(), sh.col_sum());
        assert_eq!(dh.col_sum_sq(), sh.col_sum_sq());
        assert_eq!(dh.constant_cols(), sh.constant_cols());
    }

    #[test]
    fn variance_consistency_identity() {
        let m = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[&[0.3, -1.0], &[2.2, 0.5], &[-0.7, 3.0]]).unwrap(),
        );
        let a = [0.5, 1.5, 2.0];
        let var = m.weighted_colvar(&a).unwrap();
        let mean = m.weighted_colmean(&a).unwrap();
        let squared = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[
                &[0.3f64 * 0.3, 1.0],
                &[2.2 * 2.2, 0.25],
                &[0.49, 9.0],
            ])
            .unwrap(),
        );
        let meansq = squared.weighted_colmean(&a).unwrap();
        for j in 0..2 {
            let expect = meansq[j] - mean[j] * mean[j];
            assert!((var[j] - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn select_rows_and_cols() {
        let m = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]).unwrap(),
        );
        let s = m.select_rows(&[2, 0, 2]);
        assert_eq!(s.get(0, 1), 8.0);
        assert_eq!(s.get(2, 2), 9.0);
        let c = m.select_cols(&[0, 2]);
        assert_eq!(c.cols(), 2);
        assert_eq!(c.get(1, 1), 6.0);

        let sp = MatrixHandle::Sparse(m.to_sparse());
        let sc = sp.select_cols(&[0, 2]);
        assert_eq!(sc.get(1, 1), 6.0);
        assert_eq!(sc.to_dense(), c.to_dense());
    }

    #[test]
    fn constant_cols_detection() {
        let m = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[&[1.0, 0.0, 2.0], &[1.0, 0.0, 3.0]]).unwrap(),
        );
        assert_eq!(m.constant_cols(), vec![true, true, false]);
        let s = MatrixHandle::Sparse(m.to_sparse());
        assert_eq!(s.constant_cols(), vec![true, true, false]);
    }
}
