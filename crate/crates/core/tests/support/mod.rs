//! Independent oracles and randomized checks shared by the integration
//! tests and the acceptance runner. Each check returns a one-line summary on
//! success and a description of the first counterexample on failure.

#![allow(dead_code)]

use canopyflux::eval::scale_importance;
use canopyflux::forest::{fit_forest, fit_tree, ForestConfig, Matrix, TreeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

/// Greedy CART by brute force: every feature, every midpoint between
/// distinct values, child SSEs computed from scratch.
#[derive(Debug)]
pub enum OracleTree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

fn sse(y: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    rows.iter().map(|&i| (y[i] - mean).powi(2)).sum()
}

/// Leaf value as the tree contract defines it: shifted mean over the rows
/// in ascending index order.
fn leaf_value(y: &[f64], rows: &[usize]) -> f64 {
    let mut r = rows.to_vec();
    r.sort_unstable();
    let base = y[r[0]];
    base + r.iter().map(|&i| y[i] - base).sum::<f64>() / r.len() as f64
}

pub fn oracle_cart(x: &Matrix, y: &[f64], rows: &[usize], min_node_size: usize, tol_rel: f64) -> OracleTree {
    let n = rows.len();
    let constant = rows.iter().all(|&i| y[i] == y[rows[0]]);
    if constant || n < 2 * min_node_size {
        return OracleTree::Leaf(leaf_value(y, rows));
    }
    let parent = sse(y, rows);
    let tol = tol_rel * parent;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x.n_cols() {
        let mut values: Vec<f64> = rows.iter().map(|&i| x.get(i, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= t);
            if l.len() < min_node_size || r.len() < min_node_size {
                continue;
            }
            let gain = parent - sse(y, &l) - sse(y, &r);
            let better = match best {
                None => gain > tol,
                Some((_, _, g)) => gain > g + tol,
            };
            if better {
                best = Some((f, t, gain));
            }
        }
    }
    match best {
        None => OracleTree::Leaf(leaf_value(y, rows)),
        Some((feature, threshold, _)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, feature) <= threshold);
            OracleTree::Split {
                feature,
                threshold,
                left: Box::new(oracle_cart(x, y, &l, min_node_size, tol_rel)),
                right: Box::new(oracle_cart(x, y, &r, min_node_size, tol_rel)),
            }
        }
    }
}

impl OracleTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            OracleTree::Leaf(v) => *v,
            OracleTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

/// Tiny instance; half the time values come from a small integer set so
/// that duplicate x values and exact SSE ties occur.
pub fn tiny_instance(rng: &mut ChaCha8Rng, n_max: usize, p_max: usize) -> (Matrix, Vec<f64>) {
    let n = rng.random_range(2..=n_max);
    let p = rng.random_range(1..=p_max);
    let discrete = rng.random_bool(0.5);
    let draw = |rng: &mut ChaCha8Rng| {
        if discrete {
            f64::from(rng.random_range(0..4))
        } else {
            rng.random_range(-1.0..1.0)
        }
    };
    let data: Vec<f64> = (0..n * p).map(|_| draw(rng)).collect();
    let y: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    (Matrix::new(n, p, data).unwrap(), y)
}

/// Fitted trees (mtry = p, no bootstrap) against the brute-force oracle on
/// every training point, compared with `==`.
pub fn cart_oracle_equivalence(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let (x, y) = tiny_instance(&mut rng, 8, 2);
        let min_node_size = rng.random_range(1..=2);
        let params = TreeParams {
            mtry: x.n_cols(),
            min_node_size,
            bootstrap: false,
        };
        let tree = fit_tree(&x, &y, params, &mut ChaCha8Rng::seed_from_u64(case as u64)).unwrap();
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        let oracle = oracle_cart(&x, &y, &rows, min_node_size, canopyflux::forest::SPLIT_TOLERANCE);
        for i in 0..x.n_rows() {
            let (got, want) = (tree.predict(x.row(i)), oracle.predict(x.row(i)));
            if got != want {
                return Err(format!("instance {case}, row {i}: tree {got} vs oracle {want}"));
            }
        }
    }
    Ok(format!("{instances} instances identical"))
}

/// Single fully grown tree on distinct rows: zero training RMSE.
pub fn memorization(datasets: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..datasets {
        let n = rng.random_range(2..=50);
        let p = rng.random_range(1..=5);
        // continuous draws: rows are distinct with probability 1; checked anyway
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = Matrix::new(n, p, data).unwrap();
        for a in 0..n {
            for b in 0..a {
                assert_ne!(x.row(a), x.row(b), "duplicate rows in memorization fixture");
            }
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let params = TreeParams {
            mtry: p,
            min_node_size: 1,
            bootstrap: false,
        };
        let tree = fit_tree(&x, &y, params, &mut ChaCha8Rng::seed_from_u64(case as u64)).unwrap();
        let mse = (0..n).map(|i| (tree.predict(x.row(i)) - y[i]).powi(2)).sum::<f64>() / n as f64;
        if mse != 0.0 {
            return Err(format!("dataset {case} (n = {n}, p = {p}): training RMSE {}", mse.sqrt()));
        }
    }
    Ok(format!("{datasets} datasets, training RMSE 0"))
}

/// `y = f(B11) + noise` with `B8A` pure noise: count runs in which B11 has
/// the larger raw importance, and check the scaled table's extremes.
pub fn importance_monte_carlo(runs: u64) -> Result<(u64, String), String> {
    let mut wins = 0;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = 80;
        let mut data = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let informative: f64 = rng.random_range(0.05..0.35);
            let noise: f64 = rng.random_range(0.05..0.35);
            data.extend([informative, noise]);
            y.push(10.0 * informative + rng.random_range(-0.5..0.5));
        }
        let x = Matrix::new(n, 2, data).unwrap();
        let names = vec!["B11".to_string(), "B8A".to_string()];
        let cfg = ForestConfig {
            n_trees: 50,
            seed,
            ..ForestConfig::default()
        };
        let forest = fit_forest(&x, &y, &names, &cfg).map_err(|e| e.to_string())?;
        let raw = forest.raw_importance();
        if raw.values[0] > raw.values[1] {
            wins += 1;
        }
        let table = scale_importance(&raw);
        let top = format!("{} {:.3}", table.rows[0].name, table.rows[0].scaled);
        let bottom = format!("{} {:.3}", table.rows[1].name, table.rows[1].scaled);
        if !top.ends_with(" 100.000") || !bottom.ends_with(" 0.000") {
            return Err(format!("seed {seed}: scaled table {top} / {bottom}"));
        }
    }
    Ok((wins, format!("informative band ranked first in {wins}/{runs} runs")))
}
