use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Squared Pearson correlation of observed and predicted; `None` when
    /// either vector has zero variance or fewer than two values.
    pub r2: Option<f64>,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} observations vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Shape("metrics of empty vectors".into()));
    }
    let n = y_true.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (t, p) in y_true.iter().zip(y_pred) {
        let e = t - p;
        se += e * e;
        ae += e.abs();
    }
    Ok(Metrics {
        rmse: (se / n).sqrt(),
        mae: ae / n,
        r2: squared_correlation(y_true, y_pred),
    })
}

fn squared_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab * sab / (saa * sbb)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction() {
        let y = [0.3, 1.2, 2.5, 0.9];
        let m = metrics(&y, &y).unwrap();
        assert_eq!((m.rmse, m.mae, m.r2), (0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn constant_prediction_has_no_r2() {
        let m = metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.r2, None);
    }

    #[test]
    fn hand_pearson() {
        // deviations (-1,0,1) and (-1,1,0): cov 1, variances 2 and 2 -> r = 1/2
        let m = metrics(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((m.r2.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(metrics(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
        assert!(metrics(&[], &[]).is_err());
        assert_eq!(metrics(&[1.0], &[2.0]).unwrap().r2, None);
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(v in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50)) {
            let (t, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let m = metrics(&t, &p).unwrap();
            prop_assert!(m.mae <= m.rmse * (1.0 + 1e-12));
            prop_assert!(m.rmse >= 0.0 && m.mae >= 0.0);
            if let Some(r2) = m.r2 { prop_assert!((0.0..=1.0).contains(&r2)); }
        }

        #[test]
        fn r2_invariant_under_positive_affine_maps(
            v in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            a in 0.1f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let (t, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let mapped: Vec<f64> = p.iter().map(|x| a * x + b).collect();
            let (r1, r2) = (metrics(&t, &p).unwrap().r2, metrics(&t, &mapped).unwrap().r2);
            if let (Some(r1), Some(r2)) = (r1, r2) {
                prop_assert!((r1 - r2).abs() < 1e-12);
            }
        }
    }
}
