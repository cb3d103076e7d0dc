//! Two-cluster Lloyd iterations over the clustering attributes.

use super::ClusterAssignment;
use crate::error::Result;
use crate::matrix::MatrixHandle;
use rand::Rng;

/// Clusters rows of `z` into two groups. Centroids start at two random rows
/// with distinct values; iterations stop when assignments no longer change
/// or `max_iter` is reached. Returns `None` when every row is identical
/// (the caller then makes a leaf).
pub fn kmeans2(
    z: &MatrixHandle,
    max_iter: usize,
    rng: &mut impl Rng,
) -> Result<Option<ClusterAssignment>> {
    Ok(run_lloyd(z, max_iter, rng, false).map(|(a, _)| a))
}

/// Same as `kmeans2` but also reports the within-cluster sum of squares after
/// each assignment step (used by tests to check Lloyd monotonicity).
pub(crate) fn kmeans2_traced(
    z: &MatrixHandle,
    max_iter: usize,
    rng: &mut impl Rng,
) -> Option<(ClusterAssignment, Vec<f64>)> {
    run_lloyd(z, max_iter, rng, true)
}

fn rows_equal(z: &MatrixHandle, a: usize, b: usize) -> bool {
    (0..z.cols()).all(|j| z.get(a, j) == z.get(b, j))
}

fn row_to_dense(z: &MatrixHandle, i: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match z {
        MatrixHandle::Dense(m) => out.copy_from_slice(m.row(i)),
        MatrixHandle::Sparse(m) => {
            let (cols, vals) = m.row_entries(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[j] = v;
            }
        }
    }
}

fn run_lloyd(
    z: &MatrixHandle,
    max_iter: usize,
    rng: &mut impl Rng,
    trace: bool,
) -> Option<(ClusterAssignment, Vec<f64>)> {
    let n = z.rows();
    let k = z.cols();
    if n < 2 {
        return None;
    }

    // two distinct random rows as initial centroids
    let first = rng.random_range(0..n);
    let mut second = None;
    for _ in 0..16 {
        let cand = rng.random_range(0..n);
        if cand != first && !rows_equal(z, first, cand) {
            second = Some(cand);
            break;
        }
    }
    if second.is_none() {
        second = (0..n).find(|&i| i != first && !rows_equal(z, first, i));
    }
    let second = second?;

    let mut c0 = vec![0.0; k];
    let mut c1 = vec![0.0; k];
    row_to_dense(z, first, &mut c0);
    row_to_dense(z, second, &mut c1);

    let mut assignment = vec![false; n];
    let mut wcss_trace = Vec::new();

    for _ in 0..max_iter.max(1) {
        // assignment step; ‖x‖² cancels in the comparison, so score each
        // centroid by ‖c‖² − 2 x·c
        let n0 = sq_norm(&c0);
        let n1 = sq_norm(&c1);
        let mut changed = false;
        for i in 0..n {
            let d0 = n0 - 2.0 * z.row_dot(i, &c0);
            let d1 = n1 - 2.0 * z.row_dot(i, &c1);
            let pick = d1 < d0;
            if pick != assignment[i] {
                assignment[i] = pick;
                changed = true;
            }
        }
        if trace {
            let mut wcss = 0.0;
            for i in 0..n {
                let c = if assignment[i] { &c1 } else { &c0 };
                let mut row = vec![0.0; k];
                row_to_dense(z, i, &mut row);
                for j in 0..k {
                    let d = row[j] - c[j];
                    wcss += d * d;
                }
            }
            wcss_trace.push(wcss);
        }
        if !changed {
            break;
        }

        // centroid update
        let mut sum0 = vec![0.0; k];
        let mut sum1 = vec![0.0; k];
        let mut count0 = 0usize;
        let mut count1 = 0usize;
        for i in 0..n {
            let (sum, count) = if assignment[i] {
                (&mut sum1, &mut count1)
            } else {
                (&mut sum0, &mut count0)
            };
            *count += 1;
            match z {
                MatrixHandle::Dense(m) => {
                    for (s, &x) in sum.iter_mut().zip(m.row(i)) {
                        *s += x;
                    }
                }
                MatrixHandle::Sparse(m) => {
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &x) in cols.iter().zip(vals) {
                        sum[j] += x;
                    }
                }
            }
        }
        if count0 == 0 || count1 == 0 {
            break; // one cluster swallowed everything; keep the assignment
        }
        for j in 0..k {
            c0[j] = sum0[j] / count0 as f64;
            c1[j] = sum1[j] / count1 as f64;
        }
    }

    Some((ClusterAssignment::from_binary(&assignment), wcss_trace))
}

fn sq_norm(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in v {
        acc += x * x;
    }
    acc
}
