//! Axis-parallel exhaustive split search and tree induction.
//!
//! This is the comparison baseline: for every feature it sorts the values,
//! tries a threshold at each midpoint of consecutive distinct values and
//! scores it with `n·imp(parent) − n1·imp(left) − n2·imp(right)`. It works
//! on densified data on purpose — the point of the baseline is the standard
//! per-column scan that pays for every clustering attribute at every
//! candidate, so its cost scales with D·K rather than D+K.

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::preprocess::ClusteringWeights;
use crate::split::Hyperplane;
use crate::task::Task;
use crate::tree::{grow, GrowConfig, Tree};
use crate::split::SplitMethod;

/// Winning axis-parallel test for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisTest {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

/// Encodes an axis test as the degenerate hyperplane `x_f − θ ≥ 0`, so
/// prediction, serialization and importance reuse the oblique machinery.
pub(crate) fn axis_hyperplane(feature: usize, threshold: f64, n_features: usize) -> Hyperplane {
    let mut w = vec![0.0; n_features];
    w[feature] = 1.0;
    Hyperplane::new(w, -threshold)
}

/// Exhaustive scan over `(feature, midpoint)` candidates. Ties resolve to
/// the lowest feature index, then the lowest threshold. Returns `None` when
/// no feature has two distinct values.
pub fn best_axis_test(
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
) -> Result<Option<AxisTest>> {
    let n = x.rows();
    if n != z.rows() {
        return Err(Error::LengthMismatch {
            context: "feature/clustering row counts",
            expected: n,
            got: z.rows(),
        });
    }
    if p.len() != z.cols() {
        return Err(Error::LengthMismatch {
            context: "clustering weights",
            expected: z.cols(),
            got: p.len(),
        });
    }
    if n < 2 {
        return Ok(None);
    }

    let xd = x.to_dense();
    let zd = z.to_dense();
    let k = z.cols();
    let d = x.cols();
    let pw = p.as_slice();

    // Σⱼ pⱼ zᵢⱼ² per point, and per-column totals
    let mut point_wsq = vec![0.0; n];
    let mut col_sum = vec![0.0; k];
    for i in 0..n {
        let row = zd.row(i);
        let mut acc = 0.0;
        for j in 0..k {
            acc += pw[j] * row[j] * row[j];
            col_sum[j] += row[j];
        }
        point_wsq[i] = acc;
    }
    let total_wsq: f64 = point_wsq.iter().sum();
    let mut total_bsq = 0.0;
    for j in 0..k {
        total_bsq += pw[j] * col_sum[j] * col_sum[j];
    }
    let n_f = n as f64;
    // n·imp(S) expands to Σⱼpⱼ(Σz²) − Σⱼpⱼ(Σz)²/n; these running scalars make
    // each candidate O(1) after the O(K) point move
    let parent_term = total_wsq - total_bsq / n_f;

    let mut best: Option<AxisTest> = None;
    let mut order: Vec<usize> = (0..n).collect();
    let mut left_col_sum = vec![0.0; k];

    for f in 0..d {
        order.sort_by(|&a, &b| xd.get(a, f).total_cmp(&xd.get(b, f)));
        if xd.get(order[0], f) == xd.get(order[n - 1], f) {
            continue; // constant feature, no candidate thresholds
        }
        left_col_sum.iter_mut().for_each(|v| *v = 0.0);
        let mut left_wsq = 0.0;
        let mut left_bsq = 0.0;
        let mut right_bsq = total_bsq;

        for pos in 0..n - 1 {
            let i = order[pos];
            left_wsq += point_wsq[i];
            let row = zd.row(i);
            for j in 0..k {
                let zij = row[j];
                let ul = left_col_sum[j];
                let ur = col_sum[j] - ul;
                left_bsq += pw[j] * (2.0 * ul * zij + zij * zij);
                right_bsq += pw[j] * (zij * zij - 2.0 * ur * zij);
                left_col_sum[j] = ul + zij;
            }
            let here = xd.get(i, f);
            let next = xd.get(order[pos + 1], f);
            if here == next {
                continue;
            }
            let threshold = 0.5 * (here + next);
            let n1 = (pos + 1) as f64;
            let n2 = n_f - n1;
            let left_term = left_wsq - left_bsq / n1;
            let right_term = (total_wsq - left_wsq) - right_bsq / n2;
            let score = parent_term - left_term - right_term;
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(AxisTest {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    Ok(best)
}

/// Grows an axis-parallel tree with the same induction shell, acceptance
/// rule and leaf prototypes as the oblique variants.
pub fn grow_axis_parallel(
    task: Task,
    x: &MatrixHandle,
    y: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    cfg: &GrowConfig,
) -> Result<Tree> {
    let mut axis_cfg = cfg.clone();
    axis_cfg.method = SplitMethod::Axis;
    grow(task, x, y, z, p, &axis_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn handle(rows: &[&[f64]]) -> MatrixHandle {
        MatrixHandle::Dense(DenseMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn hand_scored_split() {
        let x = handle(&[&[0.0], &[0.0], &[1.0], &[1.0]]);
        let z = handle(&[&[0.0], &[0.0], &[1.0], &[1.0]]);
        let p = ClusteringWeights::uniform(1);
        let best = best_axis_test(&x, &z, &p).unwrap().unwrap();
        assert_eq!(best.feature, 0);
        assert_eq!(best.threshold, 0.5);
        // n·var(parent) = 4 · 0.25 = 1.0, both children pure
        assert!((best.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_clustering_scores_zero() {
        let x = handle(&[&[0.0], &[1.0], &[2.0]]);
        let z = handle(&[&[3.0], &[3.0], &[3.0]]);
        let p = ClusteringWeights::uniform(1);
        let best = best_axis_test(&x, &z, &p).unwrap().unwrap();
        assert!(best.score.abs() < 1e-12);
    }

    #[test]
    fn duplicate_feature_ties_to_lower_index() {
        let x = handle(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        let z = handle(&[&[0.0], &[0.0], &[5.0], &[5.0]]);
        let p = ClusteringWeights::uniform(1);
        let best = best_axis_test(&x, &z, &p).unwrap().unwrap();
        assert_eq!(best.feature, 0);
        assert_eq!(best.threshold, 1.5);
    }

    #[test]
    fn all_identical_features_signal_no_split() {
        let x = handle(&[&[2.0, 7.0], &[2.0, 7.0], &[2.0, 7.0]]);
        let z = handle(&[&[0.0], &[1.0], &[2.0]]);
        let p = ClusteringWeights::uniform(1);
        assert!(best_axis_test(&x, &z, &p).unwrap().is_none());
    }

    /// Brute-force oracle: recompute every candidate with two-pass variances.
    fn brute_force(x: &MatrixHandle, z: &MatrixHandle, p: &ClusteringWeights) -> Option<AxisTest> {
        let n = x.rows();
        let k = z.cols();
        let imp = |rows: &[usize]| -> f64 {
            let mut acc = 0.0;
            for j in 0..k {
                let vals: Vec<f64> = rows.iter().map(|&i| z.get(i, j)).collect();
                let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
                let var: f64 =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
                acc += p.as_slice()[j] * var;
            }
            acc
        };
        let all: Vec<usize> = (0..n).collect();
        let parent = imp(&all) * n as f64;
        let mut best: Option<AxisTest> = None;
        for f in 0..x.cols() {
            let mut vals: Vec<f64> = (0..n).map(|i| x.get(i, f)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let threshold = 0.5 * (w[0] + w[1]);
                let left: Vec<usize> = (0..n).filter(|&i| x.get(i, f) < threshold).collect();
                let right: Vec<usize> = (0..n).filter(|&i| x.get(i, f) >= threshold).collect();
                let score =
                    parent - imp(&left) * left.len() as f64 - imp(&right) * right.len() as f64;
                if best.as_ref().map_or(true, |b| score > b.score) {
                    best = Some(AxisTest {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::seeding::seeded_rng(404);
        for _ in 0..30 {
            let n = rng.random_range(5..50);
            let d = rng.random_range(1..6);
            let k = rng.random_range(1..4);
            let x = MatrixHandle::Dense(
                DenseMatrix::new(
                    n,
                    d,
                    (0..n * d).map(|_| (rng.random_range(0..8) as f64) * 0.5).collect(),
                )
                .unwrap(),
            );
            let z = MatrixHandle::Dense(
                DenseMatrix::new(n, k, (0..n * k).map(|_| rng.random::<f64>() * 3.0).collect())
                    .unwrap(),
            );
            let p = ClusteringWeights::new((0..k).map(|j| 0.5 + j as f64).collect()).unwrap();
            let fast = best_axis_test(&x, &z, &p).unwrap();
            let slow = brute_force(&x, &z, &p);
            match (fast, slow) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.feature, b.feature, "argmax feature differs");
                    assert!((a.threshold - b.threshold).abs() < 1e-12);
                    assert!((a.score - b.score).abs() < 1e-8 * a.score.abs().max(1.0));
                }
                other => panic!("oracle disagreement: {other:?}"),
            }
        }
    }
}
