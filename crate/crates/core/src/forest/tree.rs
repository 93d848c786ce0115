use rand::seq::index;
use rand::Rng;

use super::split::{best_split, SplitCandidate};
use super::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        split: SplitCandidate,
        n_samples: usize,
        left: usize,
        right: usize,
    },
}

impl Node {
    pub fn n_samples(&self) -> usize {
        match *self {
            Node::Leaf { n_samples, .. } | Node::Split { n_samples, .. } => n_samples,
        }
    }
}

/// Binary regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Features drawn (without replacement) at every node.
    pub mtry: usize,
    /// Smallest number of rows a child may hold.
    pub min_node_size: usize,
    /// Train on `n` rows drawn with replacement.
    pub bootstrap: bool,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value, .. } => return value,
                Node::Split { split, left, right, .. } => {
                    at = if row[split.feature] <= split.threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Adds every split's SSE reduction to `importance[feature]`.
    pub fn accumulate_importance(&self, importance: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { split, .. } = node {
                importance[split.feature] += split.sse_reduction;
            }
        }
    }
}

/// Mean of `y` over `rows`, taken in ascending row order relative to the
/// first row so that a constant node reproduces its value exactly.
pub(crate) fn leaf_mean(y: &[f64], rows: &mut [usize]) -> f64 {
    rows.sort_unstable();
    let base = y[rows[0]];
    let shift: f64 = rows.iter().map(|&i| y[i] - base).sum();
    base + shift / rows.len() as f64
}

/// Grow one tree greedily. Node expansion stops when a node is too small to
/// yield two children of `min_node_size`, its targets are constant, or no
/// sampled feature offers an improving split.
pub fn fit_tree<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    let n = x.n_rows();
    let p = x.n_cols();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if y.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", y.len())));
    }
    if params.mtry == 0 || params.mtry > p {
        return Err(Error::Config(format!("mtry = {} outside 1..={p}", params.mtry)));
    }

    let rows: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };

    let mut tree = RegressionTree {
        nodes: Vec::new(),
        n_features: p,
    };
    grow(&mut tree, x, y, rows, params, rng);
    Ok(tree)
}

fn grow<R: Rng + ?Sized>(
    tree: &mut RegressionTree,
    x: &Matrix,
    y: &[f64],
    mut rows: Vec<usize>,
    params: TreeParams,
    rng: &mut R,
) -> usize {
    let id = tree.nodes.len();
    let n = rows.len();
    let leaf = |rows: &mut Vec<usize>| Node::Leaf {
        value: leaf_mean(y, rows),
        n_samples: rows.len(),
    };

    let constant = rows.iter().all(|&i| y[i] == y[rows[0]]);
    if constant || n < 2 * params.min_node_size.max(1) {
        tree.nodes.push(leaf(&mut rows));
        return id;
    }

    let mut features = index::sample(rng, x.n_cols(), params.mtry).into_vec();
    features.sort_unstable();
    let Some(split) = best_split(x, y, &rows, &features, params.min_node_size) else {
        tree.nodes.push(leaf(&mut rows));
        return id;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| x.get(i, split.feature) <= split.threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

    // placeholder, patched once the children exist
    tree.nodes.push(Node::Leaf {
        value: f64::NAN,
        n_samples: n,
    });
    let left = grow(tree, x, y, left_rows, params, rng);
    let right = grow(tree, x, y, right_rows, params, rng);
    tree.nodes[id] = Node::Split {
        split,
        n_samples: n,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::SeedableRng;

    fn params(mtry: usize, min_node_size: usize, bootstrap: bool) -> TreeParams {
        TreeParams {
            mtry,
            min_node_size,
            bootstrap,
        }
    }

    fn random_data(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::new(n, p, (0..n * p).map(|_| r.random::<f64>()).collect()).unwrap();
        let y = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        (x, y)
    }

    fn sse(values: &[f64]) -> f64 {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        values.iter().map(|v| (v - m) * (v - m)).sum()
    }

    #[test]
    fn memorises_distinct_rows() {
        let (x, y) = random_data(1, 40, 3);
        let t = fit_tree(&x, &y, params(3, 1, false), &mut rng::stream(0, 0)).unwrap();
        for i in 0..40 {
            assert_eq!(t.predict(x.row(i)), y[i]);
        }
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let (x, _) = random_data(2, 20, 2);
        let y = vec![0.1; 20];
        let t = fit_tree(&x, &y, params(2, 1, true), &mut rng::stream(0, 0)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(x.row(3)), 0.1);
    }

    #[test]
    fn empty_training_set() {
        let x = Matrix::new(0, 2, vec![]).unwrap();
        assert!(matches!(
            fit_tree(&x, &[], params(1, 1, false), &mut rng::stream(0, 0)),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn structural_invariants() {
        let (x, y) = random_data(3, 60, 4);
        for seed in 0..10 {
            let t = fit_tree(&x, &y, params(2, 3, true), &mut rng::stream(seed, 0)).unwrap();
            let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            for node in &t.nodes {
                match *node {
                    Node::Leaf { value, n_samples } => {
                        assert!(n_samples >= 3);
                        assert!(value >= lo && value <= hi);
                    }
                    Node::Split { split, n_samples, left, right } => {
                        assert!(split.sse_reduction >= 0.0);
                        assert!(left > 0 && right > 0);
                        let (nl, nr) = (t.nodes[left].n_samples(), t.nodes[right].n_samples());
                        assert_eq!(nl + nr, n_samples);
                        assert!(nl < n_samples && nr < n_samples);
                    }
                }
            }
        }
    }

    #[test]
    fn importance_telescopes_to_root_minus_leaf_sse() {
        let (x, y) = random_data(4, 50, 3);
        let t = fit_tree(&x, &y, params(3, 4, false), &mut rng::stream(9, 0)).unwrap();
        let mut imp = vec![0.0; 3];
        t.accumulate_importance(&mut imp);

        // SSE of the training rows that land in each leaf
        let mut leaves: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
        for i in 0..50 {
            leaves.entry(t.predict(x.row(i)).to_bits()).or_default().push(y[i]);
        }
        let leaf_sse: f64 = leaves.values().map(|v| sse(v)).sum();
        let total: f64 = imp.iter().sum();
        assert!((total - (sse(&y) - leaf_sse)).abs() < 1e-9);
    }

    #[test]
    fn row_order_does_not_change_predictions() {
        let (x, y) = random_data(5, 30, 2);
        let perm: Vec<usize> = (0..30).rev().collect();
        let xp = Matrix::new(30, 2, perm.iter().flat_map(|&i| x.row(i).to_vec()).collect()).unwrap();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = fit_tree(&x, &y, params(2, 2, false), &mut rng::stream(1, 0)).unwrap();
        let b = fit_tree(&xp, &yp, params(2, 2, false), &mut rng::stream(1, 0)).unwrap();
        let (q, _) = random_data(6, 100, 2);
        for i in 0..100 {
            let (pa, pb) = (a.predict(q.row(i)), b.predict(q.row(i)));
            assert!((pa - pb).abs() <= 1e-12 * pa.abs().max(1.0));
        }
    }
}
