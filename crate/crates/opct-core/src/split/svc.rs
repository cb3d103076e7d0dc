//! L1-regularized squared-hinge linear classification by coordinate descent.
//!
//! Minimizes `||w||_1 + C Σ max(0, 1 − cᵢ(xᵢ·w + b))²` with the bias handled
//! as an extra unregularized coordinate. Each coordinate takes a Newton step
//! soft-thresholded against the L1 term, then backtracks until the exact
//! objective change satisfies an Armijo bound, so the objective never
//! increases. Margins are maintained incrementally; the running loss is
//! resynced from scratch once per sweep to stop drift.

use super::{ClusterAssignment, Hyperplane, SvmSplitConfig};
use crate::matrix::MatrixHandle;

const LINE_SEARCH_SIGMA: f64 = 0.01;
const LINE_SEARCH_BETA: f64 = 0.5;
const MAX_BACKTRACKS: usize = 20;
const HESSIAN_RIDGE: f64 = 1e-12;

/// Column view that works for both storage forms. The dense arm visits every
/// row (zero entries are exact no-ops), the sparse arm only stored entries.
enum Columns<'a> {
    Dense(&'a crate::matrix::DenseMatrix),
    Sparse {
        col_rows: Vec<Vec<usize>>,
        col_vals: Vec<Vec<f64>>,
    },
}

impl<'a> Columns<'a> {
    fn build(x: &'a MatrixHandle) -> Columns<'a> {
        match x {
            MatrixHandle::Dense(m) => Columns::Dense(m),
            MatrixHandle::Sparse(m) => {
                let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m.cols()];
                let mut col_vals: Vec<Vec<f64>> = vec![Vec::new(); m.cols()];
                for i in 0..m.rows() {
                    let (cols, vals) = m.row_entries(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        col_rows[j].push(i);
                        col_vals[j].push(v);
                    }
                }
                Columns::Sparse { col_rows, col_vals }
            }
        }
    }

    /// Applies `f(row, value)` to the entries of column `j` in ascending row
    /// order.
    #[inline]
    fn for_each(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Columns::Dense(m) => {
                for i in 0..m.rows() {
                    f(i, m.get(i, j));
                }
            }
            Columns::Sparse { col_rows, col_vals } => {
                for (&i, &v) in col_rows[j].iter().zip(&col_vals[j]) {
                    f(i, v);
                }
            }
        }
    }
}

#[inline]
fn hinge_sq(c: f64, margin: f64) -> f64 {
    let t = 1.0 - c * margin;
    if t > 0.0 {
        t * t
    } else {
        0.0
    }
}

fn full_loss(labels: &[f64], margins: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&c, &m) in labels.iter().zip(margins) {
        acc += hinge_sq(c, m);
    }
    acc
}

fn l1_norm(w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in w {
        acc += v.abs();
    }
    acc
}

/// Newton step for `|w + d| + g d + h d²/2`.
#[inline]
fn newton_l1_step(w: f64, g: f64, h: f64) -> f64 {
    if g + 1.0 <= h * w {
        -(g + 1.0) / h
    } else if g - 1.0 >= h * w {
        -(g - 1.0) / h
    } else {
        -w
    }
}

pub fn fit_svc(x: &MatrixHandle, c: &ClusterAssignment, cfg: &SvmSplitConfig) -> Hyperplane {
    fit_svc_traced(x, c, cfg).0
}

/// Runs the solver and also returns the best-so-far objective after each
/// sweep.
pub(crate) fn fit_svc_traced(
    x: &MatrixHandle,
    c: &ClusterAssignment,
    cfg: &SvmSplitConfig,
) -> (Hyperplane, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let labels = c.labels();
    debug_assert_eq!(labels.len(), n);
    let columns = Columns::build(x);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut margins = vec![0.0; n];
    let mut loss = full_loss(labels, &margins);

    let mut best_obj = l1_norm(&w) + cfg.c * loss;
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut trace = vec![best_obj];
    let mut prev_obj = best_obj;

    for _sweep in 0..cfg.max_opt_iter {
        for j in 0..=d {
            let is_bias = j == d;
            // gradient and curvature of the loss along this coordinate
            let mut g = 0.0;
            let mut h = HESSIAN_RIDGE;
            let wj = if is_bias { b } else { w[j] };
            {
                let accumulate = |i: usize, xij: f64, g: &mut f64, h: &mut f64| {
                    let ci = labels[i];
                    let t = 1.0 - ci * margins[i];
                    if t > 0.0 {
                        *g += -2.0 * ci * xij * t;
                        *h += 2.0 * xij * xij;
                    }
                };
                if is_bias {
                    for i in 0..n {
                        accumulate(i, 1.0, &mut g, &mut h);
                    }
                } else {
                    columns.for_each(j, |i, xij| accumulate(i, xij, &mut g, &mut h));
                }
            }
            g *= cfg.c;
            h *= cfg.c;

            let step = if is_bias {
                -g / h
            } else {
                newton_l1_step(wj, g, h)
            };
            if step == 0.0 || !step.is_finite() {
                continue;
            }
            // expected decrease used by the Armijo test
            let dir_decrease = if is_bias {
                g * step
            } else {
                g * step + (wj + step).abs() - wj.abs()
            };

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial = lambda * step;
                let mut delta_loss = 0.0;
                if is_bias {
                    for (i, &ci) in labels.iter().enumerate() {
                        delta_loss += hinge_sq(ci, margins[i] + trial) - hinge_sq(ci, margins[i]);
                    }
                } else {
                    columns.for_each(j, |i, xij| {
                        delta_loss +=
                            hinge_sq(labels[i], margins[i] + trial * xij)
                                - hinge_sq(labels[i], margins[i]);
                    });
                }
                let delta_reg = if is_bias {
                    0.0
                } else {
                    (wj + trial).abs() - wj.abs()
                };
                let delta_obj = delta_reg + cfg.c * delta_loss;
                if delta_obj <= LINE_SEARCH_SIGMA * lambda * dir_decrease {
                    accepted = Some((trial, delta_loss));
                    break;
                }
                lambda *= LINE_SEARCH_BETA;
            }
            let Some((trial, delta_loss)) = accepted else {
                continue;
            };
            if is_bias {
                for m in margins.iter_mut() {
                    *m += trial;
                }
                b += trial;
            } else {
                columns.for_each(j, |i, xij| {
                    margins[i] += trial * xij;
                });
                w[j] += trial;
            }
            loss += delta_loss;
        }

        loss = full_loss(labels, &margins); // resync incremental drift
        let obj = l1_norm(&w) + cfg.c * loss;
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&w);
            best_b = b;
        }
        trace.push(best_obj);
        let rel = (prev_obj - obj).abs() / prev_obj.abs().max(1e-12);
        if rel < cfg.tol {
            break;
        }
        prev_obj = obj;
    }

    (Hyperplane::new(best_w, best_b), trace)
}
