//! Regression random forest.
//!
//! CART trees grown on bootstrap samples with a fresh random subset of
//! `mtry` candidate features at every node, averaged for prediction.
//! Importance is the per-feature sum of node SSE reductions.
//!
//! Every tree draws from its own random stream addressed by
//! `(seed, tree_index)`, so a forest is bit-identical regardless of the
//! number of threads used to grow it.

mod persist;
mod split;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use persist::FOREST_SCHEMA;
pub use split::{best_split, SplitCandidate, SPLIT_TOLERANCE};
pub use tree::{fit_tree, Node, RegressionTree, TreeParams};

use crate::{rng, Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Shape(format!(
                "{} values for a {n_rows}×{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Matrix::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` resolves to `max(1, p / 3)`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_node_size: 5,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry.unwrap_or((n_features / 3).max(1))
    }

    pub fn with_mtry(self, mtry: usize) -> Self {
        ForestConfig {
            mtry: Some(mtry),
            ..self
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ForestConfig { seed, ..self }
    }
}

/// Random stream used by tree `index` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, index: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub(crate) trees: Vec<RegressionTree>,
    pub(crate) config: ForestConfig,
    pub(crate) mtry: usize,
    pub(crate) feature_names: Vec<String>,
}

pub fn fit_forest(
    x: &Matrix,
    y: &[f64],
    feature_names: &[String],
    config: &ForestConfig,
) -> Result<Forest> {
    let p = x.n_cols();
    if feature_names.len() != p {
        return Err(Error::Shape(format!(
            "{} feature names for {p} columns",
            feature_names.len()
        )));
    }
    if config.n_trees == 0 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    let mtry = config.resolved_mtry(p);
    if mtry == 0 || mtry > p {
        return Err(Error::Config(format!("mtry = {mtry} outside 1..={p}")));
    }
    if config.min_node_size == 0 {
        return Err(Error::Config("min_node_size must be >= 1".into()));
    }
    let params = TreeParams {
        mtry,
        min_node_size: config.min_node_size,
        bootstrap: config.bootstrap,
    };
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| fit_tree(x, y, params, &mut tree_rng(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        trees,
        config: *config,
        mtry,
        feature_names: feature_names.to_vec(),
    })
}

impl Forest {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Mean of the per-tree predictions.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "query has {} features, forest expects {}",
                row.len(),
                self.n_features()
            )));
        }
        // shifted mean: exact when every tree agrees
        let first = self.trees[0].predict(row);
        let dev: f64 = self.trees.iter().map(|t| t.predict(row) - first).sum();
        Ok(first + dev / self.trees.len() as f64)
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>> {
        (0..x.n_rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn raw_importance(&self) -> ImportanceRaw {
        let mut values = vec![0.0; self.n_features()];
        for t in &self.trees {
            t.accumulate_importance(&mut values);
        }
        ImportanceRaw {
            names: self.feature_names.clone(),
            values,
        }
    }
}

/// Per-feature accumulated SSE reduction over all splits of all trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRaw {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

pub fn raw_importance(forest: &Forest) -> ImportanceRaw {
    forest.raw_importance()
}

pub fn predict(forest: &Forest, row: &[f64]) -> Result<f64> {
    forest.predict(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    fn data(seed: u64, n: usize) -> (Matrix, Vec<f64>) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::new(n, 3, (0..n * 3).map(|_| r.random::<f64>()).collect()).unwrap();
        let y = (0..n)
            .map(|i| 4.0 * x.get(i, 0) + r.random_range(-0.5..0.5))
            .collect();
        (x, y)
    }

    fn cfg(n_trees: usize, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees,
            mtry: Some(2),
            min_node_size: 3,
            bootstrap: true,
            seed,
        }
    }

    #[test]
    fn singleton_forest_equals_tree_on_derived_stream() {
        let (x, y) = data(1, 40);
        let f = fit_forest(&x, &y, &names(3), &cfg(1, 77)).unwrap();
        let params = TreeParams {
            mtry: 2,
            min_node_size: 3,
            bootstrap: true,
        };
        let t = fit_tree(&x, &y, params, &mut tree_rng(77, 0)).unwrap();
        assert_eq!(f.trees[0], t);
    }

    #[test]
    fn constant_target_everywhere() {
        let (x, _) = data(2, 30);
        let f = fit_forest(&x, &[1.7; 30], &names(3), &cfg(20, 1)).unwrap();
        for i in 0..30 {
            assert_eq!(f.predict(x.row(i)).unwrap(), 1.7);
        }
    }

    #[test]
    fn same_seed_same_forest_different_seed_different_draws() {
        let (x, y) = data(3, 50);
        let a = fit_forest(&x, &y, &names(3), &cfg(25, 5)).unwrap();
        let b = fit_forest(&x, &y, &names(3), &cfg(25, 5)).unwrap();
        let c = fit_forest(&x, &y, &names(3), &cfg(25, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (x, y) = data(4, 50);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit_forest(&x, &y, &names(3), &cfg(40, 9)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn prediction_is_mean_of_trees_and_bounded() {
        let (x, y) = data(5, 60);
        let f = fit_forest(&x, &y, &names(3), &cfg(30, 2)).unwrap();
        let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let (q, _) = data(6, 50);
        for i in 0..q.n_rows() {
            let per_tree: Vec<f64> = f.trees.iter().map(|t| t.predict(q.row(i))).collect();
            let mean = per_tree.iter().sum::<f64>() / per_tree.len() as f64;
            let got = f.predict(q.row(i)).unwrap();
            assert!((got - mean).abs() <= 1e-14 * mean.abs().max(1.0));
            assert!(got >= lo && got <= hi);
        }
    }

    #[test]
    fn two_tree_mean() {
        let leaf = |v| RegressionTree {
            nodes: vec![Node::Leaf {
                value: v,
                n_samples: 1,
            }],
            n_features: 1,
        };
        let f = Forest {
            trees: vec![leaf(1.0), leaf(2.0)],
            config: ForestConfig::default(),
            mtry: 1,
            feature_names: names(1),
        };
        assert_eq!(f.predict(&[0.0]).unwrap(), 1.5);
        assert!(matches!(f.predict(&[0.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn importance_of_single_split() {
        let tree = RegressionTree {
            nodes: vec![
                Node::Split {
                    split: SplitCandidate {
                        feature: 2,
                        threshold: 0.5,
                        sse_reduction: 1.0,
                    },
                    n_samples: 4,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: 0.0, n_samples: 2 },
                Node::Leaf { value: 1.0, n_samples: 2 },
            ],
            n_features: 4,
        };
        let f = Forest {
            trees: vec![tree],
            config: ForestConfig::default(),
            mtry: 4,
            feature_names: names(4),
        };
        assert_eq!(f.raw_importance().values, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let (x, y) = data(7, 40);
        // column 2 is constant, so it can never be split on
        let mut rows: Vec<Vec<f64>> = (0..40).map(|i| x.row(i).to_vec()).collect();
        rows.iter_mut().for_each(|r| r[2] = 0.5);
        let x = Matrix::from_rows(&rows).unwrap();
        let f = fit_forest(&x, &y, &names(3), &cfg(20, 3)).unwrap();
        let imp = f.raw_importance().values;
        assert_eq!(imp[2], 0.0);
        assert!(imp.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn config_validation() {
        let (x, y) = data(8, 10);
        assert!(fit_forest(&x, &y, &names(3), &ForestConfig { n_trees: 0, ..cfg(1, 0) }).is_err());
        assert!(fit_forest(&x, &y, &names(3), &cfg(1, 0).with_mtry(4)).is_err());
        assert!(fit_forest(&x, &y, &names(2), &cfg(1, 0)).is_err());
        assert_eq!(ForestConfig::default().resolved_mtry(14), 4);
        assert_eq!(ForestConfig::default().resolved_mtry(2), 1);
    }
}
