use super::Matrix;

/// Relative tolerance (w.r.t. the node's SSE) below which a reduction is
/// treated as no improvement, and within which two candidates tie.
pub const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub sse_reduction: f64,
}

/// Exhaustive search over `features` for the split of `rows` that maximises
/// `SSE(parent) − SSE(left) − SSE(right)`.
///
/// Thresholds are midpoints between consecutive distinct sorted values.
/// Both children must keep at least `min_node_size` rows. Ties go to the
/// lowest feature index, then the lowest threshold, so `features` is
/// visited in ascending order.
pub fn best_split(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    min_node_size: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_node_size = min_node_size.max(1);
    if n < 2 || n < 2 * min_node_size {
        return None;
    }

    // Centre the targets so the prefix-sum formula stays accurate.
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let centred: Vec<f64> = rows.iter().map(|&i| y[i] - mean).collect();
    let total: f64 = centred.iter().sum();
    let parent_sse = centred.iter().map(|c| c * c).sum::<f64>() - total * total / n as f64;
    if !(parent_sse > 0.0) {
        return None;
    }
    let tol = SPLIT_TOLERANCE * parent_sse;
    let parent_term = total * total / n as f64;

    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in &sorted {
        pairs.clear();
        pairs.extend(rows.iter().zip(&centred).map(|(&i, &c)| (x.get(i, f), c)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += pairs[k].1;
            let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
            if lo >= hi {
                continue;
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_node_size || n_right < min_node_size {
                continue;
            }
            let right_sum = total - left_sum;
            let reduction = (left_sum * left_sum / n_left as f64
                + right_sum * right_sum / n_right as f64
                - parent_term)
                .max(0.0);
            let improves = match best {
                None => reduction > tol,
                Some(b) => reduction > b.sse_reduction + tol,
            };
            if improves {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    sse_reduction: reduction,
                });
            }
        }
    }
    best
}

/// A value `t` with `lo <= t < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t < hi && t >= lo {
        t
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Matrix {
        Matrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn step_target() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let s = best_split(&x, &y, &[0, 1, 2, 3], &[0], 1).unwrap();
        // enumeration of the three thresholds:
        //   1.5 -> 1 - (0 + 2/3) = 1/3
        //   2.5 -> 1 - (0 + 0)   = 1
        //   3.5 -> 1 - (2/3 + 0) = 1/3
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert!((s.sse_reduction - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_target_has_no_split() {
        let x = column(&[1.0, 2.0, 3.0]);
        assert_eq!(best_split(&x, &[2.0; 3], &[0, 1, 2], &[0], 1), None);
    }

    #[test]
    fn constant_feature_has_no_threshold() {
        let x = Matrix::new(4, 2, vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0]).unwrap();
        let y = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(best_split(&x, &y, &[0, 1, 2, 3], &[0], 1), None);
        assert_eq!(best_split(&x, &y, &[0, 1, 2, 3], &[0, 1], 1).unwrap().feature, 1);
    }

    #[test]
    fn min_node_size_excludes_thin_children() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [10.0, 0.0, 0.0, 0.0, 0.0];
        // best unconstrained split isolates row 0
        assert_eq!(best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 1).unwrap().threshold, 1.5);
        assert_eq!(best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 2).unwrap().threshold, 2.5);
        assert_eq!(best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 3), None);
    }

    #[test]
    fn ties_prefer_lowest_feature_then_threshold() {
        // identical columns -> identical reductions
        let x = Matrix::new(4, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let s = best_split(&x, &y, &[0, 1, 2, 3], &[1, 0], 1).unwrap();
        assert_eq!(s.feature, 0);
        // thresholds 1.5 and 3.5 tie; the lower wins
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn duplicated_rows_from_bootstrap() {
        let x = column(&[1.0, 2.0, 3.0]);
        let y = [0.0, 0.0, 3.0];
        let s = best_split(&x, &y, &[0, 0, 1, 2, 2], &[0], 1).unwrap();
        assert_eq!(s.threshold, 2.5);
    }

    #[test]
    fn adjacent_floats_midpoint() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
    }
}
