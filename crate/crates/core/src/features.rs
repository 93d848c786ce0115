//! Weekly join of target and predictors, and its numeric design matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::forest::Matrix;
use crate::ingest::{Band, WeeklyMeteo, WeeklySpectra};
use crate::sapflow::WeeklyTranspiration;
use crate::week::IsoWeek;
use crate::{Error, Result};

pub const TAIR: &str = "Tair";
pub const PRPC: &str = "Prpc";
pub const TARGET_COLUMN: &str = "transpiration_mm_day";

/// Predictor configuration: reflectance only, or reflectance plus
/// meteorology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "S2")]
    S2,
    #[serde(rename = "S2+Meteo")]
    S2Meteo,
}

impl FeatureSet {
    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::S2 => "S2",
            FeatureSet::S2Meteo => "S2+Meteo",
        }
    }

    /// File-name friendly form.
    pub fn slug(self) -> &'static str {
        match self {
            FeatureSet::S2 => "s2",
            FeatureSet::S2Meteo => "s2_meteo",
        }
    }

    pub fn uses_meteo(self) -> bool {
        self == FeatureSet::S2Meteo
    }

    pub fn predictor_names(self) -> Vec<String> {
        let mut names: Vec<String> = Band::ALL.iter().map(|b| b.name().to_string()).collect();
        if self.uses_meteo() {
            names.push(TAIR.to_string());
            names.push(PRPC.to_string());
        }
        names
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S2" | "s2" => Ok(FeatureSet::S2),
            "S2+Meteo" | "s2_meteo" => Ok(FeatureSet::S2Meteo),
            other => Err(Error::Config(format!(
                "unknown feature set `{other}` (expected S2 or S2+Meteo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub iso_week: IsoWeek,
    /// Aligned with [`FeatureTable::predictor_names`].
    pub predictors: Vec<f64>,
    /// mm·day⁻¹
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub site_id: String,
    pub predictor_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn value(&self, row: usize, predictor: &str) -> Option<f64> {
        let j = self.predictor_names.iter().position(|n| n == predictor)?;
        self.rows.get(row).map(|r| r.predictors[j])
    }

    pub fn weeks(&self) -> Vec<IsoWeek> {
        self.rows.iter().map(|r| r.iso_week).collect()
    }
}

fn coverage<'a>(name: &str, weeks: impl Iterator<Item = &'a IsoWeek>) -> String {
    let set: BTreeSet<&IsoWeek> = weeks.collect();
    match (set.first(), set.last()) {
        (Some(a), Some(b)) => format!("{name}: {} weeks {a}..{b}", set.len()),
        _ => format!("{name}: 0 weeks"),
    }
}

/// Inner join on ISO week: a week is kept only when the target and every
/// selected predictor source have a value for it.
pub fn join_weekly(
    transpiration: &WeeklyTranspiration,
    spectra: &[WeeklySpectra],
    meteo: Option<&[WeeklyMeteo]>,
    feature_set: FeatureSet,
) -> Result<FeatureTable> {
    let target: BTreeMap<IsoWeek, f64> = transpiration.observed().collect();
    let bands: BTreeMap<IsoWeek, &WeeklySpectra> = spectra.iter().map(|s| (s.iso_week, s)).collect();
    let meteo: Option<BTreeMap<IsoWeek, &WeeklyMeteo>> = match (feature_set.uses_meteo(), meteo) {
        (true, Some(m)) => Some(m.iter().map(|w| (w.iso_week, w)).collect()),
        (true, None) => {
            return Err(Error::EmptyInput(
                "feature set S2+Meteo needs weekly meteorology".into(),
            ))
        }
        (false, _) => None,
    };

    let mut rows = Vec::new();
    for (&week, &y) in &target {
        let Some(s) = bands.get(&week) else { continue };
        let mut predictors = s.band_means.to_vec();
        if let Some(m) = &meteo {
            let Some(w) = m.get(&week) else { continue };
            predictors.push(w.tair_mean);
            predictors.push(w.precip_sum);
        }
        rows.push(FeatureRow {
            iso_week: week,
            predictors,
            target: y,
        });
    }

    if rows.is_empty() {
        let mut parts = vec![
            coverage("transpiration", target.keys()),
            coverage("spectra", bands.keys()),
        ];
        if let Some(m) = &meteo {
            parts.push(coverage("meteo", m.keys()));
        }
        return Err(Error::NoOverlap {
            coverage: parts.join("; "),
        });
    }

    Ok(FeatureTable {
        site_id: transpiration.site_id.clone(),
        predictor_names: feature_set.predictor_names(),
        rows,
    })
}

/// Numeric view of a feature table; column `j` of `x` is `names[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub names: Vec<String>,
}

pub fn to_matrix(table: &FeatureTable) -> Result<Design> {
    if table.is_empty() {
        return Err(Error::EmptyInput("feature table has no rows".into()));
    }
    let p = table.predictor_names.len();
    let mut data = Vec::with_capacity(table.len() * p);
    let mut y = Vec::with_capacity(table.len());
    for (i, row) in table.rows.iter().enumerate() {
        if row.predictors.len() != p {
            return Err(Error::Shape(format!(
                "row {i} has {} predictors, expected {p}",
                row.predictors.len()
            )));
        }
        for (j, &v) in row.predictors.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data {
                    row: i,
                    column: table.predictor_names[j].clone(),
                });
            }
        }
        if !row.target.is_finite() {
            return Err(Error::Data {
                row: i,
                column: TARGET_COLUMN.into(),
            });
        }
        data.extend_from_slice(&row.predictors);
        y.push(row.target);
    }
    Ok(Design {
        x: Matrix::new(table.len(), p, data)?,
        y,
        names: table.predictor_names.clone(),
    })
}

pub fn from_matrix(design: &Design, weeks: &[IsoWeek], site_id: &str) -> Result<FeatureTable> {
    if weeks.len() != design.x.n_rows() || design.y.len() != design.x.n_rows() {
        return Err(Error::Shape(format!(
            "{} weeks, {} targets for {} rows",
            weeks.len(),
            design.y.len(),
            design.x.n_rows()
        )));
    }
    Ok(FeatureTable {
        site_id: site_id.to_string(),
        predictor_names: design.names.clone(),
        rows: weeks
            .iter()
            .enumerate()
            .map(|(i, &iso_week)| FeatureRow {
                iso_week,
                predictors: design.x.row(i).to_vec(),
                target: design.y[i],
            })
            .collect(),
    })
}

pub fn features_file_name(site_id: &str, feature_set: FeatureSet) -> String {
    format!("features_{site_id}_{}.csv", feature_set.slug())
}

pub fn write_features(path: &Path, table: &FeatureTable) -> Result<()> {
    let mut w = csvio::writer(path)?;
    let mut header = vec!["iso_week".to_string()];
    header.extend(table.predictor_names.iter().cloned());
    header.push(TARGET_COLUMN.to_string());
    csvio::write_record(&mut w, path, &header)?;
    for row in &table.rows {
        let mut rec = vec![row.iso_week.to_string()];
        rec.extend(row.predictors.iter().map(|v| v.to_string()));
        rec.push(row.target.to_string());
        csvio::write_record(&mut w, path, &rec)?;
    }
    csvio::finish(w, path)
}

/// Reads a features CSV. Predictors are every column between `iso_week` and
/// the trailing target column.
pub fn read_features(path: &Path, site_id: &str) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = |column: &str| Error::Schema {
        path: path.to_path_buf(),
        column: column.to_string(),
    };
    if header.first().map(String::as_str) != Some("iso_week") {
        return Err(schema("iso_week"));
    }
    if header.len() < 3 || header.last().map(String::as_str) != Some(TARGET_COLUMN) {
        return Err(schema(TARGET_COLUMN));
    }
    let predictor_names = header[1..header.len() - 1].to_vec();

    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::row(path, line, format!("cannot parse column `{}`", header[i])))
        };
        let iso_week: IsoWeek = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::row(path, line, e.to_string()))?;
        let predictors = (1..header.len() - 1).map(num).collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            iso_week,
            predictors,
            target: num(header.len() - 1)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no rows", path.display())));
    }
    if rows.windows(2).any(|w| w[1].iso_week <= w[0].iso_week) {
        return Err(Error::MalformedSeries {
            id: path.display().to_string(),
            reason: "weeks not strictly increasing".into(),
        });
    }
    Ok(FeatureTable {
        site_id: site_id.to_string(),
        predictor_names,
        rows,
    })
}
