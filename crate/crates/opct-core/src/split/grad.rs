//! Direct fuzzy-impurity minimization with Adam.
//!
//! Objective: `reg(w) + C f(w, b)` where `f` is the size-weighted two-sided
//! fuzzy impurity (see `eval_split_fitness`) and
//! `reg(w) = (Σᵢ √(|wᵢ| + ε))²` — an L½ penalty smoothed by ε so plain
//! gradient steps apply. Weights start from a standard normal scaled by
//! 1/√D; the bias starts at −median(X w₀) so the first split is balanced.
//! The best-objective iterate is returned, with weights below
//! `1e-4 · max|wⱼ|` truncated to exact zeros.

use super::{eval_split_fitness, ClusteringStats, GradSplitConfig, Hyperplane};
use crate::matrix::MatrixHandle;
use crate::preprocess::ClusteringWeights;
use rand::Rng;
use rand_distr::StandardNormal;

const TRUNCATION_RATIO: f64 = 1e-4;

#[inline]
fn sign_or_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// `(Σ √(|wᵢ|+ε))²`.
pub(crate) fn smoothed_l_half(w: &[f64], eps: f64) -> f64 {
    let mut root_sum = 0.0;
    for &v in w {
        root_sum += (v.abs() + eps).sqrt();
    }
    root_sum * root_sum
}

/// Analytic derivative of `smoothed_l_half`: `R · sign(wᵢ) / √(|wᵢ|+ε)` with
/// `R = Σ √(|wⱼ|+ε)`.
pub(crate) fn smoothed_l_half_grad(w: &[f64], eps: f64) -> Vec<f64> {
    let mut root_sum = 0.0;
    for &v in w {
        root_sum += (v.abs() + eps).sqrt();
    }
    w.iter()
        .map(|&v| root_sum * sign_or_zero(v) / (v.abs() + eps).sqrt())
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n_params: usize, cfg: &GradSplitConfig) -> Adam {
        Adam {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            lr: cfg.lr,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn fit_grad_split(
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    cfg: &GradSplitConfig,
    rng: &mut impl Rng,
) -> Hyperplane {
    fit_grad_split_traced(x, z, p, cfg, rng).0
}

/// Runs the optimizer and also returns the best-so-far objective per iterate
/// (the initial point counts as iterate zero).
pub(crate) fn fit_grad_split_traced(
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    cfg: &GradSplitConfig,
    rng: &mut impl Rng,
) -> (Hyperplane, Vec<f64>) {
    let d = x.cols();
    let n = x.rows();
    debug_assert!(n >= 2);
    let stats = ClusteringStats::of(z);
    let scale = 1.0 / (d as f64).sqrt();
    let mut w: Vec<f64> = (0..d)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * scale
        })
        .collect();
    let initial_margins = x.matvec(&w).expect("weights sized to x");
    let mut b = -median(&initial_margins);

    let eval = |w: &[f64], b: f64| {
        eval_split_fitness(x, z, p.as_slice(), &stats, w, b, true)
            .expect("dimensions checked by caller")
    };

    let (mut fitness, mut grad) = eval(&w, b);
    let mut obj = smoothed_l_half(&w, cfg.reg_smooth_eps) + cfg.c * fitness;
    let mut best_obj = obj;
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut trace = vec![best_obj];

    let mut adam = Adam::new(d + 1, cfg);
    let mut params = vec![0.0; d + 1];
    let mut grads = vec![0.0; d + 1];

    for _ in 0..cfg.max_opt_iter {
        let (dw, db) = grad.take().expect("gradient always requested");
        let reg_grad = smoothed_l_half_grad(&w, cfg.reg_smooth_eps);
        for j in 0..d {
            params[j] = w[j];
            grads[j] = reg_grad[j] + cfg.c * dw[j];
        }
        params[d] = b;
        grads[d] = cfg.c * db;
        adam.update(&mut params, &grads);
        w.copy_from_slice(&params[..d]);
        b = params[d];

        let prev_obj = obj;
        let (f, g) = eval(&w, b);
        fitness = f;
        grad = g;
        obj = smoothed_l_half(&w, cfg.reg_smooth_eps) + cfg.c * fitness;
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&w);
            best_b = b;
        }
        trace.push(best_obj);
        let rel = (obj - prev_obj).abs() / prev_obj.abs().max(1e-12);
        if rel < cfg.tol {
            break;
        }
    }

    truncate_small_weights(&mut best_w);
    (Hyperplane::new(best_w, best_b), trace)
}

/// Zeroes weights whose magnitude falls below `1e-4 · max|wⱼ|`; Adam never
/// lands on exact zeros by itself but downstream sparsity accounting needs
/// them.
fn truncate_small_weights(w: &mut [f64]) {
    let max_abs = w.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return;
    }
    let threshold = TRUNCATION_RATIO * max_abs;
    for v in w.iter_mut() {
        if v.abs() < threshold {
            *v = 0.0;
        }
    }
}
