//! Oblique split learning.
//!
//! Two learners produce a separating hyperplane for one tree node: a
//! clustering-then-classify route (2-means on the clustering attributes
//! followed by an L1-regularized squared-hinge linear classifier) and a
//! direct route that minimizes a fuzzy two-sided impurity with Adam.
//! `learn_split` wraps either one with per-node standardization and folds the
//! transform back so the returned plane acts on raw feature space. The
//! axis-parallel exhaustive search lives in `crate::baseline` and is exposed
//! through the same entry point so tree induction has a single call site.

mod grad;
mod kmeans;
mod svc;

pub use grad::fit_grad_split;
pub use kmeans::kmeans2;
pub use svc::fit_svc;

pub(crate) use grad::fit_grad_split_traced;
pub(crate) use kmeans::kmeans2_traced;
pub(crate) use svc::fit_svc_traced;

use crate::baseline;
use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::preprocess::{ClusteringWeights, Standardizer};
use rand::Rng;

/// An oblique decision boundary `x·w + b >= 0` in raw feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Hyperplane {
    pub fn new(weights: Vec<f64>, bias: f64) -> Hyperplane {
        Hyperplane { weights, bias }
    }

    /// Signed margin of a dense example.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(x) {
            acc += w * v;
        }
        acc + self.bias
    }

    /// Signed margin of row `i` of a matrix.
    pub fn margin_row(&self, m: &MatrixHandle, i: usize) -> f64 {
        m.row_dot(i, &self.weights) + self.bias
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }
}

/// Configuration of the clustering + linear-classifier split learner.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSplitConfig {
    /// Loss multiplier in `||w||_1 + C * Σ hinge²`.
    pub c: f64,
    /// Cap on 2-means Lloyd iterations.
    pub max_cluster_iter: usize,
    /// Cap on coordinate-descent sweeps.
    pub max_opt_iter: usize,
    /// Relative objective change that counts as converged.
    pub tol: f64,
}

impl Default for SvmSplitConfig {
    fn default() -> Self {
        SvmSplitConfig {
            c: 10.0,
            max_cluster_iter: 10,
            max_opt_iter: 100,
            tol: 1e-4,
        }
    }
}

/// Configuration of the gradient-descent split learner.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSplitConfig {
    /// Loss multiplier in `||w||_½ + C * f(w, b)`.
    pub c: f64,
    /// Adam learning rate.
    pub lr: f64,
    /// Cap on Adam iterations.
    pub max_opt_iter: usize,
    /// Relative objective change that counts as converged.
    pub tol: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Smoothing inside the square roots of the L½ penalty.
    pub reg_smooth_eps: f64,
}

impl Default for GradSplitConfig {
    fn default() -> Self {
        GradSplitConfig {
            c: 10.0,
            lr: 0.1,
            max_opt_iter: 100,
            tol: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            reg_smooth_eps: 1e-8,
        }
    }
}

/// Which split search runs at each node.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitMethod {
    Svm(SvmSplitConfig),
    Grad(GradSplitConfig),
    /// Exhaustive single-feature threshold search (the comparison baseline).
    Axis,
}

impl SplitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SplitMethod::Svm(_) => "svm",
            SplitMethod::Grad(_) => "grad",
            SplitMethod::Axis => "axis",
        }
    }
}

/// Hard two-way partition of a node's examples, encoded as ±1 per example.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<f64>,
}

impl ClusterAssignment {
    /// Builds from ±1 labels.
    pub fn new(labels: Vec<f64>) -> Result<ClusterAssignment> {
        if let Some(&bad) = labels.iter().find(|&&c| c != 1.0 && c != -1.0) {
            return Err(Error::InvalidArgument(format!(
                "cluster labels must be -1 or +1, got {bad}"
            )));
        }
        Ok(ClusterAssignment { labels })
    }

    pub(crate) fn from_binary(bits: &[bool]) -> ClusterAssignment {
        ClusterAssignment {
            labels: bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect(),
        }
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[inline]
pub(crate) fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

#[inline]
fn div_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Per-node constants of the clustering matrix reused across optimizer
/// iterations: column sums and column sums of squares.
pub(crate) struct ClusteringStats {
    pub col_sum: Vec<f64>,
    pub col_sum_sq: Vec<f64>,
}

impl ClusteringStats {
    pub fn of(z: &MatrixHandle) -> ClusteringStats {
        ClusteringStats {
            col_sum: z.col_sum(),
            col_sum_sq: z.col_sum_sq(),
        }
    }
}

/// Fuzzy impurity: Σⱼ pⱼ · var(Z₋ⱼ, s).
pub fn fuzzy_impurity(z: &MatrixHandle, p: &ClusteringWeights, s: &[f64]) -> Result<f64> {
    if p.len() != z.cols() {
        return Err(Error::LengthMismatch {
            context: "clustering weights",
            expected: z.cols(),
            got: p.len(),
        });
    }
    let vars = z.weighted_colvar(s)?;
    let mut acc = 0.0;
    for (v, w) in vars.iter().zip(p.as_slice()) {
        acc += w * v;
    }
    Ok(acc)
}

/// Fitness of a candidate plane and, optionally, its analytic gradient.
///
/// With s = σ(Xw + b), S = Σs and t, r the column sums / sums of squares of
/// Z, the two-sided size-weighted impurity collapses to
///   f = Σⱼ pⱼ (rⱼ − uⱼ²/S − (tⱼ−uⱼ)²/(N−S)),   u = Zᵀs,
/// because the Σ sᵢ zᵢⱼ² terms of the two sides add up to rⱼ. A side whose
/// weight total is zero contributes nothing. The gradient chains through the
/// sigmoid:
///   ∂f/∂sᵢ = Σⱼ pⱼ (mⱼ₊² − mⱼ₋²) − 2 (Z d)ᵢ,  dⱼ = pⱼ (mⱼ₊ − mⱼ₋),
///   ∂f/∂w = Xᵀ h, ∂f/∂b = Σ h,  hᵢ = ∂f/∂sᵢ · sᵢ(1−sᵢ),
/// where mⱼ₊ = uⱼ/S and mⱼ₋ = (tⱼ−uⱼ)/(N−S) are the side means.
pub(crate) fn eval_split_fitness(
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &[f64],
    stats: &ClusteringStats,
    w: &[f64],
    b: f64,
    want_grad: bool,
) -> Result<(f64, Option<(Vec<f64>, f64)>)> {
    let n = x.rows();
    let margins = x.matvec(w)?;
    let mut s = Vec::with_capacity(n);
    let mut s_total = 0.0;
    for &m in &margins {
        let v = sigmoid(m);
        s.push(v);
        s_total += v;
    }
    let neg_total = n as f64 - s_total;

    let u = z.matvec_t(&s)?;
    let mut value = 0.0;
    for j in 0..z.cols() {
        let pos = div_or_zero(u[j] * u[j], s_total);
        let diff = stats.col_sum[j] - u[j];
        let neg = div_or_zero(diff * diff, neg_total);
        value += p[j] * (stats.col_sum_sq[j] - pos - neg);
    }

    if !want_grad {
        return Ok((value, None));
    }

    let k = z.cols();
    let mut d = vec![0.0; k];
    let mut alpha = 0.0;
    for j in 0..k {
        let m_pos = div_or_zero(u[j], s_total);
        let m_neg = div_or_zero(stats.col_sum[j] - u[j], neg_total);
        d[j] = p[j] * (m_pos - m_neg);
        alpha += p[j] * (m_pos * m_pos - m_neg * m_neg);
    }
    let zd = z.matvec(&d)?;
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let ds = alpha - 2.0 * zd[i];
        h.push(ds * s[i] * (1.0 - s[i]));
    }
    let dw = x.matvec_t(&h)?;
    let mut db = 0.0;
    for &v in &h {
        db += v;
    }
    Ok((value, Some((dw, db))))
}

/// Split fitness `S·imp(Z,p,s) + (N−S)·imp(Z,p,1−s)` with `s = σ(Xw+b)`.
pub fn split_fitness(
    plane: &Hyperplane,
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
) -> Result<f64> {
    check_split_dims(x, z, p, plane.weights.len())?;
    let stats = ClusteringStats::of(z);
    let (value, _) = eval_split_fitness(x, z, p.as_slice(), &stats, &plane.weights, plane.bias, false)?;
    Ok(value)
}

/// Analytic gradient of `split_fitness` with respect to (w, b).
pub fn grad_split_fitness(
    plane: &Hyperplane,
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
) -> Result<(Vec<f64>, f64)> {
    check_split_dims(x, z, p, plane.weights.len())?;
    let stats = ClusteringStats::of(z);
    let (_, grad) = eval_split_fitness(x, z, p.as_slice(), &stats, &plane.weights, plane.bias, true)?;
    Ok(grad.expect("gradient requested"))
}

fn check_split_dims(
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    w_len: usize,
) -> Result<()> {
    if x.rows() != z.rows() {
        return Err(Error::LengthMismatch {
            context: "feature/clustering row counts",
            expected: x.rows(),
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
    if w_len != x.cols() {
        return Err(Error::LengthMismatch {
            context: "hyperplane weights",
            expected: x.cols(),
            got: w_len,
        });
    }
    Ok(())
}

/// Learns a split for one node, or signals that no split is possible.
///
/// Features and clustering attributes are standardized on the node's own
/// data before the chosen learner runs; the returned plane is folded back to
/// raw feature space (`wᵢ/σᵢ`, `b − Σ wᵢ μᵢ/σᵢ`, with μ = 0 when
/// standardization ran in sparse mode). The axis method skips
/// standardization entirely since its thresholds live in raw space.
pub fn learn_split(
    method: &SplitMethod,
    x: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    rng: &mut impl Rng,
) -> Result<Option<Hyperplane>> {
    check_split_dims(x, z, p, x.cols())?;
    if x.rows() < 2 {
        return Ok(None);
    }
    // nothing to separate: every weighted clustering column is constant
    let constant = z.constant_cols();
    if constant
        .iter()
        .zip(p.as_slice())
        .all(|(&c, &w)| c || w == 0.0)
    {
        return Ok(None);
    }

    if let SplitMethod::Axis = method {
        return Ok(baseline::best_axis_test(x, z, p)?.map(|best| {
            baseline::axis_hyperplane(best.feature, best.threshold, x.cols())
        }));
    }

    let x_std = Standardizer::fit(x)?;
    let z_std = Standardizer::fit(z)?;
    let xs = x_std.apply(x)?;
    let zs = z_std.apply(z)?;

    let raw = match method {
        SplitMethod::Svm(cfg) => {
            let Some(assignment) = kmeans2(&zs, cfg.max_cluster_iter, rng)? else {
                return Ok(None);
            };
            Some(fit_svc(&xs, &assignment, cfg))
        }
        SplitMethod::Grad(cfg) => Some(fit_grad_split(&xs, &zs, p, cfg, rng)),
        SplitMethod::Axis => unreachable!(),
    };

    Ok(raw.map(|plane| fold_back(plane, &x_std)))
}

/// Rewrites a plane learned in standardized coordinates so it produces the
/// same margins on raw inputs.
fn fold_back(plane: Hyperplane, std: &Standardizer) -> Hyperplane {
    let mut w = plane.weights;
    let mut shift = 0.0;
    for (j, wj) in w.iter_mut().enumerate() {
        let sigma = std.stds()[j];
        shift += *wj * std.effective_mean(j) / sigma;
        *wj /= sigma;
    }
    Hyperplane::new(w, plane.bias - shift)
}

#[cfg(test)]
mod tests;
