use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::CvResult;
use super::importance::{ImportanceEntry, ImportanceTable};
use crate::features::FeatureSet;
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "report-v1";

/// Cross-validation outcome of one site under one feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteResult {
    pub site_id: String,
    pub feature_set: FeatureSet,
    pub cv: CvResult,
    pub importance: ImportanceTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub r2_mean: Option<f64>,
    pub r2_sd: Option<f64>,
    pub mae_mean: f64,
    pub mae_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
    pub best_mtry: usize,
    pub n_weeks: usize,
    pub importance: Vec<ImportanceEntry>,
}

/// `report-v1`: sites → feature sets → entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub sites: BTreeMap<String, BTreeMap<FeatureSet, ReportEntry>>,
}

impl Report {
    pub fn from_results(results: &[SiteResult]) -> Result<Report> {
        if results.is_empty() {
            return Err(Error::EmptyInput("no results to report".into()));
        }
        let mut sites: BTreeMap<String, BTreeMap<FeatureSet, ReportEntry>> = BTreeMap::new();
        for r in results {
            let m = &r.cv.metrics;
            let entry = ReportEntry {
                r2_mean: m.r2_mean,
                r2_sd: m.r2_sd,
                mae_mean: m.mae_mean,
                mae_sd: m.mae_sd,
                rmse_mean: m.rmse_mean,
                rmse_sd: m.rmse_sd,
                best_mtry: r.cv.best_mtry,
                n_weeks: r.cv.n_rows,
                importance: r.importance.rows.clone(),
            };
            let prev = sites
                .entry(r.site_id.clone())
                .or_default()
                .insert(r.feature_set, entry);
            if prev.is_some() {
                return Err(Error::DuplicateRecord(format!(
                    "result for site `{}` / {}",
                    r.site_id, r.feature_set
                )));
            }
        }
        Ok(Report {
            schema: REPORT_SCHEMA.to_string(),
            sites,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_json(text: &str) -> Result<Report> {
        let report: Report = serde_json::from_str(text)?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::UnsupportedVersion {
                found: report.schema,
                expected: REPORT_SCHEMA.into(),
            });
        }
        Ok(report)
    }

    fn feature_sets(&self) -> Vec<FeatureSet> {
        let set: BTreeSet<FeatureSet> = self.sites.values().flat_map(|m| m.keys().copied()).collect();
        set.into_iter().collect()
    }
}

/// `R² (MAE)` with two decimals, e.g. `0.57 (0.50)`.
pub fn format_cell(r2: Option<f64>, mae: f64) -> String {
    match r2 {
        Some(r2) => format!("{r2:.2} ({mae:.2})"),
        None => format!("NA ({mae:.2})"),
    }
}

fn render_grid(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                let pad = widths[c] - cell.chars().count();
                line.push_str(cell);
                line.push_str(&" ".repeat(pad + 3));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

/// Sites as rows, feature sets as columns, cells `R² (MAE)`.
pub fn render_metrics_table(report: &Report) -> String {
    let sets = report.feature_sets();
    let mut rows = vec![std::iter::once("Site".to_string())
        .chain(sets.iter().map(|s| s.label().to_string()))
        .collect::<Vec<_>>()];
    for (site, entries) in &report.sites {
        let mut row = vec![site.clone()];
        for set in &sets {
            row.push(
                entries
                    .get(set)
                    .map(|e| format_cell(e.r2_mean, e.mae_mean))
                    .unwrap_or_else(|| "-".into()),
            );
        }
        rows.push(row);
    }
    let mut out = String::from("R² (MAE) of the cross-validated models\n\n");
    render_grid(&mut out, &rows);
    out
}

/// Ranked scaled importances, one column per site and feature set, cells
/// like `B11 100.000`.
pub fn render_importance_table(report: &Report) -> String {
    let columns: Vec<(String, &ReportEntry)> = report
        .sites
        .iter()
        .flat_map(|(site, m)| m.iter().map(move |(fs, e)| (format!("{site} {}", fs.label()), e)))
        .collect();
    let depth = columns.iter().map(|(_, e)| e.importance.len()).max().unwrap_or(0);
    let mut rows = vec![std::iter::once("Ranking".to_string())
        .chain(columns.iter().map(|(h, _)| h.clone()))
        .collect::<Vec<_>>()];
    for rank in 0..depth {
        let mut row = vec![(rank + 1).to_string()];
        for (_, e) in &columns {
            row.push(
                e.importance
                    .get(rank)
                    .map(|r| format!("{} {:.3}", r.name, r.scaled))
                    .unwrap_or_default(),
            );
        }
        rows.push(row);
    }
    let mut out = String::from("Relative importance of variables\n\n");
    render_grid(&mut out, &rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::cv::{MetricSet, MtryResult};

    fn result(site: &str, fs: FeatureSet, r2: f64, mae: f64) -> SiteResult {
        let metrics = MetricSet {
            rmse_mean: mae * 1.25,
            rmse_sd: 0.1,
            mae_mean: mae,
            mae_sd: 0.05,
            r2_mean: Some(r2),
            r2_sd: Some(0.1),
            n_resamples: 150,
            n_r2: 150,
        };
        SiteResult {
            site_id: site.into(),
            feature_set: fs,
            cv: CvResult {
                k: 5,
                repeats: 30,
                n_rows: 30,
                per_mtry: vec![MtryResult { mtry: 3, metrics }],
                best_mtry: 3,
                metrics,
            },
            importance: ImportanceTable {
                rows: vec![
                    ImportanceEntry { name: "B11".into(), scaled: 100.0 },
                    ImportanceEntry { name: "B12".into(), scaled: 64.399 },
                    ImportanceEntry { name: "B8A".into(), scaled: 0.0 },
                ],
            },
        }
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(Some(0.5), 0.25), "0.50 (0.25)");
        assert_eq!(format_cell(Some(0.57), 0.50), "0.57 (0.50)");
        assert_eq!(format_cell(None, 0.5), "NA (0.50)");
    }

    #[test]
    fn two_by_two_layout() {
        let report = Report::from_results(&[
            result("site1", FeatureSet::S2, 0.28, 0.68),
            result("site1", FeatureSet::S2Meteo, 0.57, 0.50),
            result("site2", FeatureSet::S2, 0.79, 0.70),
            result("site2", FeatureSet::S2Meteo, 0.80, 0.68),
        ])
        .unwrap();
        let t = render_metrics_table(&report);
        let lines: Vec<&str> = t.lines().skip(2).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "Site    S2            S2+Meteo");
        assert_eq!(lines[1], "site1   0.28 (0.68)   0.57 (0.50)");
        assert_eq!(lines[2], "site2   0.79 (0.70)   0.80 (0.68)");

        let imp = render_importance_table(&report);
        assert!(imp.contains("B11 100.000"));
        assert!(imp.contains("B8A 0.000"));
        assert!(imp.lines().nth(2).unwrap().starts_with("Ranking"));
    }

    #[test]
    fn json_layout_and_roundtrip() {
        let report = Report::from_results(&[result("site1", FeatureSet::S2Meteo, 0.57, 0.5)]).unwrap();
        let json = report.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], "report-v1");
        let e = &v["sites"]["site1"]["S2+Meteo"];
        assert_eq!(e["r2_mean"], 0.57);
        assert_eq!(e["best_mtry"], 3);
        assert_eq!(e["importance"][0]["name"], "B11");
        assert_eq!(Report::from_json(&json).unwrap(), report);
    }

    #[test]
    fn duplicate_results_rejected() {
        let r = result("s", FeatureSet::S2, 0.1, 0.1);
        assert!(Report::from_results(&[r.clone(), r]).is_err());
        assert!(Report::from_results(&[]).is_err());
    }
}
