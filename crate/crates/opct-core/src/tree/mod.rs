//! Top-down induction of a single oblique predictive clustering tree.
//!
//! At every node a split hyperplane is learned on the node's examples (over
//! a random feature subset in random-forest mode), the examples are
//! partitioned by the sign of `x·w + b`, and the split is kept only when it
//! leaves both sides non-empty and reduces the clustering impurity of at
//! least one side by the configured relative amount. Rejected nodes become
//! leaves that predict the column means of the targets.

pub mod io;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixHandle};
use crate::preprocess::ClusteringWeights;
use crate::seeding::{mix_seed, seeded_rng};
use crate::split::{learn_split, Hyperplane, SplitMethod};
use crate::task::Task;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        plane: Hyperplane,
        /// Child taking examples with `x·w + b < 0`.
        negative: Box<TreeNode>,
        /// Child taking examples with `x·w + b >= 0` (boundary ties included).
        positive: Box<TreeNode>,
        n_examples: usize,
    },
    Leaf {
        /// Column means of the targets over the training examples that
        /// reached this leaf.
        prototype: Vec<f64>,
        n_examples: usize,
    },
}

impl TreeNode {
    pub fn n_examples(&self) -> usize {
        match self {
            TreeNode::Split { n_examples, .. } | TreeNode::Leaf { n_examples, .. } => *n_examples,
        }
    }

    fn count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split {
                negative, positive, ..
            } => 1 + negative.count() + positive.count(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split {
                negative, positive, ..
            } => 1 + negative.depth().max(positive.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub root: TreeNode,
    pub task: Task,
    pub n_features: usize,
    pub n_targets: usize,
    pub total_training_examples: usize,
}

/// Growth parameters shared by all split methods.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowConfig {
    pub method: SplitMethod,
    /// `None` for unlimited depth.
    pub max_depth: Option<usize>,
    /// A split is attempted only when the node holds at least this many
    /// examples.
    pub min_examples_to_split: usize,
    /// Required relative impurity reduction, in at least one child, for a
    /// split to be accepted.
    pub impurity_reduction_threshold: f64,
    /// Fraction of features drawn per node; `None` means all features
    /// (random-forest mode substitutes √D/D).
    pub feature_subset_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for GrowConfig {
    fn default() -> Self {
        GrowConfig {
            method: SplitMethod::Grad(Default::default()),
            max_depth: None,
            min_examples_to_split: 2,
            impurity_reduction_threshold: 0.05,
            feature_subset_fraction: None,
            seed: 0,
        }
    }
}

/// Σⱼ pⱼ · var(Z₋ⱼ) with uniform example weights; the quantity the stopping
/// rule compares across parent and children.
fn node_impurity(z: &MatrixHandle, p: &ClusteringWeights) -> Result<f64> {
    let ones = vec![1.0; z.rows()];
    let vars = z.weighted_colvar(&ones)?;
    let mut acc = 0.0;
    for (v, w) in vars.iter().zip(p.as_slice()) {
        acc += w * v;
    }
    Ok(acc)
}

struct Grower<'a> {
    cfg: &'a GrowConfig,
    p: &'a ClusteringWeights,
    next_index: u64,
}

impl Grower<'_> {
    fn leaf(&self, y: &MatrixHandle) -> Result<TreeNode> {
        Ok(TreeNode::Leaf {
            prototype: y.colmean()?,
            n_examples: y.rows(),
        })
    }

    fn grow_node(
        &mut self,
        x: &MatrixHandle,
        y: &MatrixHandle,
        z: &MatrixHandle,
        depth: usize,
    ) -> Result<TreeNode> {
        let n = x.rows();
        let node_index = self.next_index;
        self.next_index += 1;

        if n < self.cfg.min_examples_to_split {
            return self.leaf(y);
        }
        if let Some(limit) = self.cfg.max_depth {
            if depth >= limit {
                return self.leaf(y);
            }
        }
        // zero parent impurity: every weighted clustering column is constant
        let constant = z.constant_cols();
        if constant
            .iter()
            .zip(self.p.as_slice())
            .all(|(&c, &w)| c || w == 0.0)
        {
            return self.leaf(y);
        }
        let parent_impurity = node_impurity(z, self.p)?;
        if parent_impurity <= 0.0 {
            return self.leaf(y);
        }

        let mut node_rng = seeded_rng(mix_seed(self.cfg.seed, node_index));
        let d = x.cols();
        let fraction = self.cfg.feature_subset_fraction.unwrap_or(1.0);
        let subset: Option<Vec<usize>> = if fraction < 1.0 {
            let m = ((fraction * d as f64).round() as usize).clamp(1, d);
            let mut idx = rand::seq::index::sample(&mut node_rng, d, m).into_vec();
            idx.sort_unstable();
            Some(idx)
        } else {
            None
        };

        let restricted;
        let x_for_split: &MatrixHandle = match &subset {
            Some(idx) => {
                restricted = x.select_cols(idx);
                &restricted
            }
            None => x,
        };
        let plane = match learn_split(&self.cfg.method, x_for_split, z, self.p, &mut node_rng)? {
            None => return self.leaf(y),
            Some(plane) => match &subset {
                Some(idx) => scatter_weights(plane, idx, d),
                None => plane,
            },
        };

        let mut positive_rows = Vec::new();
        let mut negative_rows = Vec::new();
        for i in 0..n {
            if plane.margin_row(x, i) >= 0.0 {
                positive_rows.push(i);
            } else {
                negative_rows.push(i);
            }
        }
        if positive_rows.is_empty() || negative_rows.is_empty() {
            return self.leaf(y);
        }

        let z_pos = z.select_rows(&positive_rows);
        let z_neg = z.select_rows(&negative_rows);
        let reduction_pos = 1.0 - node_impurity(&z_pos, self.p)? / parent_impurity;
        let reduction_neg = 1.0 - node_impurity(&z_neg, self.p)? / parent_impurity;
        if reduction_pos.max(reduction_neg) < self.cfg.impurity_reduction_threshold {
            return self.leaf(y);
        }

        let negative = {
            let x_neg = x.select_rows(&negative_rows);
            let y_neg = y.select_rows(&negative_rows);
            self.grow_node(&x_neg, &y_neg, &z_neg, depth + 1)?
        };
        let positive = {
            let x_pos = x.select_rows(&positive_rows);
            let y_pos = y.select_rows(&positive_rows);
            self.grow_node(&x_pos, &y_pos, &z_pos, depth + 1)?
        };
        Ok(TreeNode::Split {
            plane,
            negative: Box::new(negative),
            positive: Box::new(positive),
            n_examples: n,
        })
    }
}

/// Expands weights learned on a column subset back to full width; excluded
/// features get weight exactly 0.
fn scatter_weights(plane: Hyperplane, subset: &[usize], width: usize) -> Hyperplane {
    let mut w = vec![0.0; width];
    for (k, &j) in subset.iter().enumerate() {
        w[j] = plane.weights[k];
    }
    Hyperplane::new(w, plane.bias)
}

/// Grows one tree. Row counts of `x`, `y` and `z` must agree and be at
/// least one.
pub fn grow(
    task: Task,
    x: &MatrixHandle,
    y: &MatrixHandle,
    z: &MatrixHandle,
    p: &ClusteringWeights,
    cfg: &GrowConfig,
) -> Result<Tree> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("tree growth needs at least one example"));
    }
    if y.rows() != x.rows() || z.rows() != x.rows() {
        return Err(Error::LengthMismatch {
            context: "feature/target/clustering row counts",
            expected: x.rows(),
            got: y.rows().min(z.rows()),
        });
    }
    if p.len() != z.cols() {
        return Err(Error::LengthMismatch {
            context: "clustering weights",
            expected: z.cols(),
            got: p.len(),
        });
    }
    let mut grower = Grower {
        cfg,
        p,
        next_index: 0,
    };
    let root = grower.grow_node(x, y, z, 0)?;
    Ok(Tree {
        root,
        task,
        n_features: x.cols(),
        n_targets: y.cols(),
        total_training_examples: x.rows(),
    })
}

impl Tree {
    /// Routes one dense example to its leaf prototype. Boundary margins
    /// (`x·w + b = 0`) take the positive child.
    pub fn predict_one(&self, x: &[f64]) -> Result<&[f64]> {
        if x.len() != self.n_features {
            return Err(Error::LengthMismatch {
                context: "prediction features",
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prototype, .. } => return Ok(prototype),
                TreeNode::Split {
                    plane,
                    negative,
                    positive,
                    ..
                } => {
                    node = if plane.margin(x) >= 0.0 {
                        positive
                    } else {
                        negative
                    };
                }
            }
        }
    }

    fn predict_row(&self, m: &MatrixHandle, i: usize) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prototype, .. } => return prototype,
                TreeNode::Split {
                    plane,
                    negative,
                    positive,
                    ..
                } => {
                    node = if plane.margin_row(m, i) >= 0.0 {
                        positive
                    } else {
                        negative
                    };
                }
            }
        }
    }

    /// Prototype predictions for every row of `m`.
    pub fn predict_matrix(&self, m: &MatrixHandle) -> Result<DenseMatrix> {
        if m.cols() != self.n_features {
            return Err(Error::LengthMismatch {
                context: "prediction features",
                expected: self.n_features,
                got: m.cols(),
            });
        }
        let mut values = Vec::with_capacity(m.rows() * self.n_targets);
        for i in 0..m.rows() {
            values.extend_from_slice(self.predict_row(m, i));
        }
        DenseMatrix::new(m.rows(), self.n_targets, values)
    }

    /// Adds each tree row's prototype into `acc` (row-major N×T), used for
    /// ensemble averaging without intermediate allocations.
    pub(crate) fn accumulate_predictions(&self, m: &MatrixHandle, acc: &mut [f64]) {
        let t = self.n_targets;
        for i in 0..m.rows() {
            let proto = self.predict_row(m, i);
            for (slot, &v) in acc[i * t..(i + 1) * t].iter_mut().zip(proto) {
                *slot += v;
            }
        }
    }

    /// Total node count, leaves included.
    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    /// Length of the longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Applies `f` to every split node.
    pub fn for_each_split(&self, mut f: impl FnMut(&Hyperplane, usize)) {
        fn walk(node: &TreeNode, f: &mut impl FnMut(&Hyperplane, usize)) {
            if let TreeNode::Split {
                plane,
                negative,
                positive,
                n_examples,
            } = node
            {
                f(plane, *n_examples);
                walk(negative, f);
                walk(positive, f);
            }
        }
        walk(&self.root, &mut f);
    }

    /// Count of split nodes and total nonzero split weights, for reporting.
    pub fn split_weight_stats(&self) -> (usize, usize) {
        let mut splits = 0;
        let mut nonzeros = 0;
        self.for_each_split(|plane, _| {
            splits += 1;
            nonzeros += plane.nonzero_weights();
        });
        (splits, nonzeros)
    }
}

#[cfg(test)]
mod tests;
