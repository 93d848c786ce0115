use serde::{Deserialize, Serialize};

use crate::forest::ImportanceRaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub name: String,
    pub scaled: f64,
}

/// Importances min–max scaled to [0, 100], sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub rows: Vec<ImportanceEntry>,
}

/// `100 · (raw − min) / (max − min)`; if every raw value is equal, all map
/// to 100. Ties in the scaled value are ordered by feature name.
pub fn scale_importance(raw: &ImportanceRaw) -> ImportanceTable {
    let min = raw.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let mut rows: Vec<ImportanceEntry> = raw
        .names
        .iter()
        .zip(&raw.values)
        .map(|(name, &v)| ImportanceEntry {
            name: name.clone(),
            scaled: if range > 0.0 {
                (v - min) / range * 100.0
            } else {
                100.0
            },
        })
        .collect();
    rows.sort_by(|a, b| b.scaled.total_cmp(&a.scaled).then_with(|| a.name.cmp(&b.name)));
    ImportanceTable { rows }
}

impl ImportanceTable {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(values: &[f64]) -> ImportanceRaw {
        ImportanceRaw {
            names: (0..values.len()).map(|i| format!("f{i:02}")).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn min_max_formula() {
        let t = scale_importance(&raw(&[5.0, 10.0, 20.0]));
        let names: Vec<&str> = t.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["f02", "f01", "f00"]);
        assert_eq!(t.rows[0].scaled, 100.0);
        assert!((t.rows[1].scaled - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.rows[2].scaled, 0.0);
    }

    #[test]
    fn degenerate_inputs_map_to_100() {
        assert_eq!(scale_importance(&raw(&[3.0])).rows[0].scaled, 100.0);
        assert!(scale_importance(&raw(&[2.0, 2.0])).rows.iter().all(|r| r.scaled == 100.0));
    }

    proptest! {
        #[test]
        fn preserves_ranking_and_bounds(values in proptest::collection::vec(0.0f64..1e4, 2..15)) {
            let t = scale_importance(&raw(&values));
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
            let expected: Vec<String> = order.iter().map(|i| format!("f{i:02}")).collect();
            let got: Vec<String> = t.rows.iter().map(|r| r.name.clone()).collect();
            prop_assert_eq!(got, expected);
            let distinct = values.iter().any(|&v| v != values[0]);
            if distinct {
                prop_assert_eq!(t.rows[0].scaled, 100.0);
                prop_assert_eq!(t.rows.last().unwrap().scaled, 0.0);
            }
            prop_assert!(t.rows.iter().all(|r| (0.0..=100.0).contains(&r.scaled)));
        }
    }
}
