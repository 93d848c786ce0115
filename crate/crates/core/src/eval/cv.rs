use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics};
use crate::features::Design;
use crate::forest::{fit_forest, Forest, ForestConfig};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    /// `None` means every value in `1..=p`.
    pub mtry_grid: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            repeats: 30,
            mtry_grid: None,
            seed: 0,
        }
    }
}

impl CvConfig {
    /// Sorted, de-duplicated grid, validated against `p` features and `n` rows.
    pub fn grid(&self, n: usize, p: usize) -> Result<Vec<usize>> {
        if self.k < 2 || self.k > n {
            return Err(Error::Config(format!("k = {} outside 2..={n}", self.k)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        let mut grid = self.mtry_grid.clone().unwrap_or_else(|| (1..=p).collect());
        grid.sort_unstable();
        grid.dedup();
        if grid.is_empty() || grid[0] == 0 || *grid.last().unwrap() > p {
            return Err(Error::Config(format!("mtry grid {grid:?} not within 1..={p}")));
        }
        Ok(grid)
    }
}

/// Partition `0..n` into `k` disjoint folds whose sizes differ by at most
/// one; the first `n % k` folds hold the extra rows. Each fold is sorted.
pub fn kfold_split<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("cannot split {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Fold assignment of repeat `repeat`.
pub fn repeat_folds(n: usize, k: usize, seed: u64, repeat: u64) -> Result<Vec<Vec<usize>>> {
    kfold_split(n, k, &mut rng::stream(rng::derive_seed(seed, &[repeat]), 0))
}

/// Forest seed of resample `(repeat, fold)`; shared across the mtry grid.
pub fn resample_seed(seed: u64, repeat: u64, fold: usize) -> u64 {
    rng::derive_seed(seed, &[repeat, fold as u64])
}

/// Seed of the model refitted on all rows after tuning.
pub fn final_model_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, &[u64::MAX])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resample {
    pub mtry: usize,
    pub repeat: u64,
    pub fold: usize,
    pub metrics: Metrics,
}

/// Mean and sample standard deviation of resample metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse_mean: f64,
    pub rmse_sd: f64,
    pub mae_mean: f64,
    pub mae_sd: f64,
    pub r2_mean: Option<f64>,
    pub r2_sd: Option<f64>,
    pub n_resamples: usize,
    /// Resamples contributing an R² value.
    pub n_r2: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MetricSet {
    pub fn from_resamples(resamples: &[Resample]) -> Result<MetricSet> {
        if resamples.is_empty() {
            return Err(Error::EmptyInput("no resamples to aggregate".into()));
        }
        let rmse: Vec<f64> = resamples.iter().map(|r| r.metrics.rmse).collect();
        let mae: Vec<f64> = resamples.iter().map(|r| r.metrics.mae).collect();
        let r2: Vec<f64> = resamples.iter().filter_map(|r| r.metrics.r2).collect();
        let (rmse_mean, rmse_sd) = mean_sd(&rmse);
        let (mae_mean, mae_sd) = mean_sd(&mae);
        let (r2_mean, r2_sd) = if r2.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_sd(&r2);
            (Some(m), Some(s))
        };
        Ok(MetricSet {
            rmse_mean,
            rmse_sd,
            mae_mean,
            mae_sd,
            r2_mean,
            r2_sd,
            n_resamples: resamples.len(),
            n_r2: r2.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtryResult {
    pub mtry: usize,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub repeats: usize,
    pub n_rows: usize,
    pub per_mtry: Vec<MtryResult>,
    pub best_mtry: usize,
    /// Resample averages for `best_mtry`.
    pub metrics: MetricSet,
}

/// Train on the out-of-fold rows of each `(repeat, fold)` listed by
/// `repeats` and score the held-out fold. Results follow the input order.
pub fn evaluate_resamples(
    design: &Design,
    forest: &ForestConfig,
    k: usize,
    seed: u64,
    mtry_grid: &[usize],
    repeats: &[u64],
) -> Result<Vec<Resample>> {
    let n = design.x.n_rows();
    let folds = repeats
        .iter()
        .map(|&r| repeat_folds(n, k, seed, r))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize, usize)> = mtry_grid
        .iter()
        .flat_map(|&m| (0..repeats.len()).flat_map(move |ri| (0..k).map(move |f| (m, ri, f))))
        .collect();

    tasks
        .par_iter()
        .map(|&(mtry, ri, f)| {
            let repeat = repeats[ri];
            let test = &folds[ri][f];
            let train: Vec<usize> = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
            let x_train = design.x.select_rows(&train);
            let y_train: Vec<f64> = train.iter().map(|&i| design.y[i]).collect();
            let cfg = forest
                .with_mtry(mtry)
                .with_seed(resample_seed(seed, repeat, f));
            let model = fit_forest(&x_train, &y_train, &design.names, &cfg)?;
            let pred = test
                .iter()
                .map(|&i| model.predict(design.x.row(i)))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<f64> = test.iter().map(|&i| design.y[i]).collect();
            Ok(Resample {
                mtry,
                repeat,
                fold: f,
                metrics: metrics(&truth, &pred)?,
            })
        })
        .collect()
}

/// Index of the smallest mean RMSE; earlier (smaller mtry) wins ties.
pub fn select_best(per_mtry: &[MtryResult]) -> Option<&MtryResult> {
    per_mtry.iter().fold(None, |best: Option<&MtryResult>, cand| match best {
        Some(b) if b.metrics.rmse_mean <= cand.metrics.rmse_mean => Some(b),
        _ => Some(cand),
    })
}

/// Repeated k-fold cross-validation over the mtry grid.
pub fn repeated_cv(design: &Design, forest: &ForestConfig, cv: &CvConfig) -> Result<CvResult> {
    let n = design.x.n_rows();
    let grid = cv.grid(n, design.x.n_cols())?;
    let repeats: Vec<u64> = (0..cv.repeats as u64).collect();
    let resamples = evaluate_resamples(design, forest, cv.k, cv.seed, &grid, &repeats)?;

    let per_mtry = grid
        .iter()
        .map(|&mtry| {
            let own: Vec<Resample> = resamples.iter().filter(|r| r.mtry == mtry).copied().collect();
            Ok(MtryResult {
                mtry,
                metrics: MetricSet::from_resamples(&own)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&per_mtry).expect("grid is non-empty").clone();
    Ok(CvResult {
        k: cv.k,
        repeats: cv.repeats,
        n_rows: n,
        per_mtry,
        best_mtry: best.mtry,
        metrics: best.metrics,
    })
}

/// Tuned cross-validation result plus the model refitted on every row.
#[derive(Debug, Clone)]
pub struct Trained {
    pub cv: CvResult,
    pub forest: Forest,
}

pub fn train(design: &Design, forest: &ForestConfig, cv: &CvConfig) -> Result<Trained> {
    let result = repeated_cv(design, forest, cv)?;
    let cfg = forest
        .with_mtry(result.best_mtry)
        .with_seed(final_model_seed(cv.seed));
    let model = fit_forest(&design.x, &design.y, &design.names, &cfg)?;
    Ok(Trained {
        cv: result,
        forest: model,
    })
}
