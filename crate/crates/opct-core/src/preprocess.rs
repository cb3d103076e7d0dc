//! Encoding, per-node standardization, hierarchy expansion and label weights.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixHandle, SparseMatrix};
use std::collections::HashMap;

/// Matrices below this nonzero density are handled as logically sparse:
/// stored in CSR by the loaders and standardized without centering.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.1;

/// Per-column location/scale transform fitted on one node's data.
///
/// In sparse mode columns are only scaled (centering would destroy sparsity),
/// so means are treated as zero at apply time. Sparse mode is a property of
/// the *data*, not its storage: CSR input or dense input below the density
/// threshold both select it, keeping results independent of representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
    sparse_mode: bool,
}

impl Standardizer {
    /// Column means and population standard deviations. Zero-spread columns
    /// store the sentinel std 1 so apply never divides by zero.
    pub fn fit(m: &MatrixHandle) -> Result<Standardizer> {
        if m.rows() == 0 {
            return Err(Error::EmptyInput("standardizer fit on a matrix with no rows"));
        }
        let means = m.colmean()?;
        let ones = vec![1.0; m.rows()];
        let vars = m.weighted_colvar(&ones)?;
        let stds: Vec<f64> = vars
            .iter()
            .map(|&v| {
                let s = v.sqrt();
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        let sparse_mode = m.is_sparse() || m.density() < SPARSE_DENSITY_THRESHOLD;
        Ok(Standardizer {
            means,
            stds,
            sparse_mode,
        })
    }

    pub fn sparse_mode(&self) -> bool {
        self.sparse_mode
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Effective per-column mean subtracted at apply time (zero in sparse mode).
    pub fn effective_mean(&self, j: usize) -> f64 {
        if self.sparse_mode {
            0.0
        } else {
            self.means[j]
        }
    }

    /// Applies the transform; output representation equals input
    /// representation. CSR input is never centered regardless of mode.
    pub fn apply(&self, m: &MatrixHandle) -> Result<MatrixHandle> {
        if m.cols() != self.stds.len() {
            return Err(Error::LengthMismatch {
                context: "standardizer apply",
                expected: self.stds.len(),
                got: m.cols(),
            });
        }
        match m {
            MatrixHandle::Dense(d) => {
                let mut values = d.values().to_vec();
                let cols = d.cols();
                if self.sparse_mode {
                    for (k, v) in values.iter_mut().enumerate() {
                        *v /= self.stds[k % cols];
                    }
                } else {
                    for (k, v) in values.iter_mut().enumerate() {
                        let j = k % cols;
                        *v = (*v - self.means[j]) / self.stds[j];
                    }
                }
                Ok(MatrixHandle::Dense(DenseMatrix::new(d.rows(), cols, values)?))
            }
            MatrixHandle::Sparse(s) => {
                let mut triplets = Vec::with_capacity(s.nnz());
                for i in 0..s.rows() {
                    let (cols, vals) = s.row_entries(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        triplets.push((i, j, v / self.stds[j]));
                    }
                }
                Ok(MatrixHandle::Sparse(SparseMatrix::from_triplets(
                    s.rows(),
                    s.cols(),
                    &triplets,
                )?))
            }
        }
    }
}

/// How one raw input column is turned into numeric feature columns.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSpec {
    /// Values parse as numbers and pass through unchanged.
    Numeric,
    /// One-hot block; categories in first-seen order. An unseen category at
    /// apply time encodes as all zeros for the block.
    Categorical(Vec<String>),
}

/// Fitted column-wise feature encoding for tabular (CSV) inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureEncoder {
    specs: Vec<ColumnSpec>,
}

impl FeatureEncoder {
    /// Learns the encoding from raw cells, one `Vec<String>` per column.
    /// A column is numeric when every cell parses as f64.
    pub fn fit(columns: &[Vec<String>]) -> FeatureEncoder {
        let specs = columns
            .iter()
            .map(|col| {
                if col.iter().all(|c| c.trim().parse::<f64>().is_ok()) {
                    ColumnSpec::Numeric
                } else {
                    let mut seen = Vec::new();
                    for c in col {
                        let c = c.trim();
                        if !seen.iter().any(|s| s == c) {
                            seen.push(c.to_string());
                        }
                    }
                    ColumnSpec::Categorical(seen)
                }
            })
            .collect();
        FeatureEncoder { specs }
    }

    pub fn specs(&self) -> &[ColumnSpec] {
        &self.specs
    }

    pub fn from_specs(specs: Vec<ColumnSpec>) -> FeatureEncoder {
        FeatureEncoder { specs }
    }

    /// Number of encoded output columns.
    pub fn encoded_width(&self) -> usize {
        self.specs
            .iter()
            .map(|s| match s {
                ColumnSpec::Numeric => 1,
                ColumnSpec::Categorical(cats) => cats.len(),
            })
            .sum()
    }

    /// Encodes raw cells into a matrix, choosing CSR when the encoded density
    /// falls below the 10% threshold. `line_offset` shifts reported line
    /// numbers so errors point at the original file.
    pub fn apply(&self, columns: &[Vec<String>], line_offset: usize) -> Result<MatrixHandle> {
        if columns.len() != self.specs.len() {
            return Err(Error::LengthMismatch {
                context: "feature encoder apply",
                expected: self.specs.len(),
                got: columns.len(),
            });
        }
        let rows = columns.first().map_or(0, |c| c.len());
        let width = self.encoded_width();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut base = 0usize;
        for (c, (spec, col)) in self.specs.iter().zip(columns).enumerate() {
            match spec {
                ColumnSpec::Numeric => {
                    for (i, cell) in col.iter().enumerate() {
                        let v: f64 = cell.trim().parse().map_err(|_| Error::CellParse {
                            line: line_offset + i + 1,
                            column: c + 1,
                            message: format!("cannot parse '{}' as a number", cell.trim()),
                        })?;
                        if v != 0.0 {
                            triplets.push((i, base, v));
                        }
                    }
                    base += 1;
                }
                ColumnSpec::Categorical(cats) => {
                    for (i, cell) in col.iter().enumerate() {
                        let cell = cell.trim();
                        if let Some(k) = cats.iter().position(|s| s == cell) {
                            triplets.push((i, base + k, 1.0));
                        }
                        // unseen category: all zeros for this block
                    }
                    base += cats.len();
                }
            }
        }
        let total = rows * width;
        let density = if total == 0 {
            1.0
        } else {
            triplets.len() as f64 / total as f64
        };
        let sparse = SparseMatrix::from_triplets(rows, width, &triplets)?;
        if density < SPARSE_DENSITY_THRESHOLD {
            Ok(MatrixHandle::Sparse(sparse))
        } else {
            Ok(MatrixHandle::Dense(MatrixHandle::Sparse(sparse).to_dense()))
        }
    }
}

/// One-hot encodes class indices into an N×k binary matrix. Emitted sparse
/// when the density 1/k falls below the 10% threshold.
pub fn one_hot_targets(labels: &[usize], k: usize) -> Result<MatrixHandle> {
    if let Some(&bad) = labels.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!(
            "class index {bad} out of range for {k} classes"
        )));
    }
    let triplets: Vec<(usize, usize, f64)> =
        labels.iter().enumerate().map(|(i, &c)| (i, c, 1.0)).collect();
    let sparse = SparseMatrix::from_triplets(labels.len(), k, &triplets)?;
    if k > 0 && 1.0 / k as f64 < SPARSE_DENSITY_THRESHOLD {
        Ok(MatrixHandle::Sparse(sparse))
    } else {
        Ok(MatrixHandle::Dense(MatrixHandle::Sparse(sparse).to_dense()))
    }
}

/// Label hierarchy as a DAG. Roots are labels with no parents; a label's
/// depth is its minimum edge distance from any root.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    depths: Vec<usize>,
    roots: Vec<usize>,
}

impl HierarchyGraph {
    /// Builds from (parent, child) name pairs. Labels appearing only as
    /// parents are roots. Fails on cycles, reporting one witness loop.
    pub fn from_edges(edges: &[(String, String)]) -> Result<HierarchyGraph> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str, names: &mut Vec<String>, index: &mut HashMap<String, usize>| {
            if let Some(&i) = index.get(name) {
                i
            } else {
                let i = names.len();
                names.push(name.to_string());
                index.insert(name.to_string(), i);
                i
            }
        };
        let mut parents: Vec<Vec<usize>> = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        for (p, c) in edges {
            let pi = intern(p, &mut names, &mut index);
            let ci = intern(c, &mut names, &mut index);
            while parents.len() < names.len() {
                parents.push(Vec::new());
                children.push(Vec::new());
            }
            if !parents[ci].contains(&pi) {
                parents[ci].push(pi);
                children[pi].push(ci);
            }
        }
        while parents.len() < names.len() {
            parents.push(Vec::new());
            children.push(Vec::new());
        }

        let n = names.len();
        // Kahn topological pass; any remainder is part of a cycle
        let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0usize;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            seen += 1;
            for &c in &children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if seen != n {
            let witness = find_cycle(&parents, &indeg, &names);
            return Err(Error::HierarchyCycle { witness });
        }

        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        // BFS shortest distance from any root
        let mut depths = vec![usize::MAX; n];
        let mut bfs: Vec<usize> = roots.clone();
        for &r in &roots {
            depths[r] = 0;
        }
        let mut head = 0;
        while head < bfs.len() {
            let u = bfs[head];
            head += 1;
            for &c in &children[u] {
                if depths[c] == usize::MAX {
                    depths[c] = depths[u] + 1;
                    bfs.push(c);
                }
            }
        }
        Ok(HierarchyGraph {
            names,
            index,
            parents,
            children,
            depths,
            roots,
        })
    }

    pub fn label_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn depth(&self, label: usize) -> usize {
        self.depths[label]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn parents(&self, label: usize) -> &[usize] {
        &self.parents[label]
    }

    /// All strict ancestors of `label`.
    pub fn ancestors(&self, label: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.parents[label].to_vec();
        let mut seen = vec![false; self.names.len()];
        while let Some(u) = stack.pop() {
            if !seen[u] {
                seen[u] = true;
                out.push(u);
                stack.extend_from_slice(&self.parents[u]);
            }
        }
        out.sort_unstable();
        out
    }
}

fn find_cycle(parents: &[Vec<usize>], indeg_after_kahn: &[usize], names: &[String]) -> Vec<String> {
    // walk parent links inside the unresolved subgraph until a repeat
    let n = parents.len();
    let start = (0..n).find(|&i| indeg_after_kahn[i] > 0).unwrap_or(0);
    let mut seen = vec![usize::MAX; n];
    let mut path = vec![start];
    seen[start] = 0;
    loop {
        let u = *path.last().unwrap();
        let next = parents[u]
            .iter()
            .copied()
            .find(|&p| indeg_after_kahn[p] > 0)
            .unwrap_or(parents[u][0]);
        if seen[next] != usize::MAX {
            let mut cycle: Vec<String> =
                path[seen[next]..].iter().map(|&i| names[i].clone()).collect();
            cycle.push(names[next].clone());
            return cycle;
        }
        seen[next] = path.len();
        path.push(next);
    }
}

/// Closes a binary label matrix upward: whenever a label is set, all of its
/// ancestors are set too. Idempotent. Output is CSR when the input is.
pub fn expand_hierarchy(y: &MatrixHandle, h: &HierarchyGraph) -> Result<MatrixHandle> {
    if y.cols() != h.label_count() {
        return Err(Error::LengthMismatch {
            context: "hierarchy expansion",
            expected: h.label_count(),
            got: y.cols(),
        });
    }
    let k = h.label_count();
    let ancestors: Vec<Vec<usize>> = (0..k).map(|j| h.ancestors(j)).collect();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut row_mask = vec![false; k];
    for i in 0..y.rows() {
        row_mask.iter_mut().for_each(|m| *m = false);
        let positives: Vec<usize> = match y {
            MatrixHandle::Dense(d) => d
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, _)| j)
                .collect(),
            MatrixHandle::Sparse(s) => {
                let (cols, vals) = s.row_entries(i);
                cols.iter()
                    .zip(vals)
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(&j, _)| j)
                    .collect()
            }
        };
        for &j in &positives {
            row_mask[j] = true;
            for &a in &ancestors[j] {
                row_mask[a] = true;
            }
        }
        for (j, &set) in row_mask.iter().enumerate() {
            if set {
                triplets.push((i, j, 1.0));
            }
        }
    }
    let sparse = SparseMatrix::from_triplets(y.rows(), k, &triplets)?;
    if y.is_sparse() {
        Ok(MatrixHandle::Sparse(sparse))
    } else {
        Ok(MatrixHandle::Dense(MatrixHandle::Sparse(sparse).to_dense()))
    }
}

/// Per-label weights `base^depth`, roots at depth 0.
pub fn hierarchy_label_weights(h: &HierarchyGraph, base: f64) -> Vec<f64> {
    (0..h.label_count())
        .map(|j| base.powi(h.depth(j) as i32))
        .collect()
}

/// Non-negative priorities over clustering attributes; not all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringWeights(Vec<f64>);

impl ClusteringWeights {
    pub fn new(p: Vec<f64>) -> Result<ClusteringWeights> {
        if p.is_empty() {
            return Err(Error::EmptyInput("clustering weights"));
        }
        if let Some(&bad) = p.iter().find(|&&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "clustering weights must be finite and non-negative, got {bad}"
            )));
        }
        if p.iter().sum::<f64>() <= 0.0 {
            return Err(Error::DegenerateWeights("clustering weights"));
        }
        Ok(ClusteringWeights(p))
    }

    pub fn uniform(k: usize) -> ClusteringWeights {
        ClusteringWeights(vec![1.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn fit_dense_two_points() {
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[0.0], &[2.0]]).unwrap());
        let s = Standardizer::fit(&m).unwrap();
        assert_eq!(s.means(), &[1.0]);
        assert_eq!(s.stds(), &[1.0]); // population std of {0,2} is 1
        assert!(!s.sparse_mode());
        let t = s.apply(&m).unwrap();
        assert_eq!(t.get(0, 0), -1.0);
        assert_eq!(t.get(1, 0), 1.0);
    }

    #[test]
    fn constant_column_sentinel() {
        let m = MatrixHandle::Dense(DenseMatrix::from_rows(&[&[5.0], &[5.0]]).unwrap());
        let s = Standardizer::fit(&m).unwrap();
        assert_eq!(s.stds(), &[1.0]);
        let t = s.apply(&m).unwrap();
        // sentinel std 1 and dense centering turn the column into zeros
        assert_eq!(t.get(0, 0), 0.0);
        assert_eq!(t.get(1, 0), 0.0);
    }

    #[test]
    fn sparse_scaling_without_centering() {
        let m = MatrixHandle::Sparse(
            SparseMatrix::from_triplets(3, 1, &[(2, 0, 3.0)]).unwrap(),
        );
        let s = Standardizer::fit(&m).unwrap();
        assert!(s.sparse_mode());
        // population std of {0,0,3} is sqrt(2)
        let sigma = 2.0f64.sqrt();
        assert!((s.stds()[0] - sigma).abs() < 1e-15);
        let t = s.apply(&m).unwrap();
        assert_eq!(t.nnz(), 1);
        assert!((t.get(2, 0) - 3.0 / sigma).abs() < 1e-15);
        assert_eq!(t.get(0, 0), 0.0);
    }

    #[test]
    fn apply_fit_normalizes_dense_columns() {
        let m = MatrixHandle::Dense(
            DenseMatrix::from_rows(&[&[1.0, 10.0], &[2.0, 30.0], &[4.0, 20.0], &[7.0, 40.0]])
                .unwrap(),
        );
        let s = Standardizer::fit(&m).unwrap();
        let t = s.apply(&m).unwrap();
        let means = t.colmean().unwrap();
        let vars = t.weighted_colvar(&[1.0; 4]).unwrap();
        for j in 0..2 {
            assert!(means[j].abs() <= 1e-10);
            assert!((vars[j].sqrt() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn one_hot_targets_basic() {
        let m = one_hot_targets(&[0, 1], 2).unwrap();
        assert!(!m.is_sparse());
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);

        let m = one_hot_targets(&[2, 2], 3).unwrap();
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(1, 2), 1.0);

        assert!(one_hot_targets(&[3], 3).is_err());
    }

    #[test]
    fn one_hot_targets_sparse_above_ten_classes() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 50).collect();
        let m = one_hot_targets(&labels, 50).unwrap();
        assert!(m.is_sparse());
        assert_eq!(m.nnz(), 1000);
    }

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn hierarchy_depths_and_roots() {
        let h = HierarchyGraph::from_edges(&edges(&[("a", "b"), ("a", "c")])).unwrap();
        assert_eq!(h.roots().len(), 1);
        assert_eq!(h.depth(h.label_index("a").unwrap()), 0);
        assert_eq!(h.depth(h.label_index("b").unwrap()), 1);
        assert_eq!(h.depth(h.label_index("c").unwrap()), 1);
    }

    #[test]
    fn hierarchy_cycle_detected() {
        let err = HierarchyGraph::from_edges(&edges(&[("a", "b"), ("b", "a")])).unwrap_err();
        assert!(matches!(err, Error::HierarchyCycle { .. }));
    }

    #[test]
    fn diamond_min_depth() {
        let h =
            HierarchyGraph::from_edges(&edges(&[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]))
                .unwrap();
        assert_eq!(h.depth(h.label_index("d").unwrap()), 2);
    }

    #[test]
    fn expand_chain_and_idempotence() {
        let h = HierarchyGraph::from_edges(&edges(&[("a", "b")])).unwrap();
        let (a, b) = (h.label_index("a").unwrap(), h.label_index("b").unwrap());
        let mut row = vec![0.0, 0.0];
        row[b] = 1.0;
        let y = MatrixHandle::Dense(DenseMatrix::new(1, 2, row).unwrap());
        let closed = expand_hierarchy(&y, &h).unwrap();
        assert_eq!(closed.get(0, a), 1.0);
        assert_eq!(closed.get(0, b), 1.0);
        let again = expand_hierarchy(&closed, &h).unwrap();
        assert_eq!(again.to_dense(), closed.to_dense());
    }

    #[test]
    fn expand_two_parent_closure() {
        let h = HierarchyGraph::from_edges(&edges(&[("a", "c"), ("b", "c")])).unwrap();
        let c = h.label_index("c").unwrap();
        let mut row = vec![0.0; 3];
        row[c] = 1.0;
        let y = MatrixHandle::Dense(DenseMatrix::new(1, 3, row).unwrap());
        let closed = expand_hierarchy(&y, &h).unwrap();
        for j in 0..3 {
            assert_eq!(closed.get(0, j), 1.0);
        }
    }

    #[test]
    fn label_weights_powers() {
        let h =
            HierarchyGraph::from_edges(&edges(&[("a", "b"), ("b", "c")])).unwrap();
        let w = hierarchy_label_weights(&h, 0.75);
        assert_eq!(w[h.label_index("a").unwrap()], 1.0);
        assert_eq!(w[h.label_index("c").unwrap()], 0.5625);
        let flat = hierarchy_label_weights(&h, 1.0);
        assert!(flat.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn encoder_one_hot_first_seen_and_unseen() {
        let cols = vec![
            vec!["1.0".to_string(), "2.5".to_string()],
            vec!["red".to_string(), "blue".to_string()],
        ];
        let enc = FeatureEncoder::fit(&cols);
        assert_eq!(enc.encoded_width(), 3);
        let m = enc.apply(&cols, 1).unwrap();
        assert_eq!(m.get(0, 1), 1.0); // red is first-seen
        assert_eq!(m.get(1, 2), 1.0);
        // unseen category encodes to zeros
        let new_cols = vec![
            vec!["0.0".to_string()],
            vec!["green".to_string()],
        ];
        let m2 = enc.apply(&new_cols, 1).unwrap();
        assert_eq!(m2.get(0, 1), 0.0);
        assert_eq!(m2.get(0, 2), 0.0);
    }
}
