use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use super::{PlotTranspirationSeries, ThermalReading, TranspirationValue, TreeRecord, WeeklyTranspiration};
use crate::csvio::{self, Table};
use crate::week::IsoWeek;
use crate::{Error, Result};

pub const SAPFLOW_HEADER: [&str; 3] = ["tree_id", "timestamp_utc", "delta_t_c"];
pub const INVENTORY_HEADER: [&str; 3] = ["tree_id", "dbh_m", "species"];
pub const WEEKLY_TRANSPIRATION_HEADER: [&str; 4] =
    ["site_id", "iso_week", "transpiration_mm_day", "n_days"];

pub fn read_sapflow(path: &Path) -> Result<Vec<ThermalReading>> {
    sapflow_rows(csvio::open(path, &SAPFLOW_HEADER)?)
}

pub fn parse_sapflow<R: Read>(source: R, label: &Path) -> Result<Vec<ThermalReading>> {
    sapflow_rows(Table::new(source, label, &SAPFLOW_HEADER)?)
}

fn sapflow_rows<R: Read>(mut table: Table<R>) -> Result<Vec<ThermalReading>> {
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let raw_ts = row.raw(1);
        let timestamp = csvio::parse_utc(raw_ts)
            .ok_or_else(|| row.error(format!("cannot parse timestamp `{raw_ts}`")))?;
        let delta_t: f64 = row.get(2, "delta_t_c")?;
        out.push(ThermalReading {
            tree_id: row.raw(0).to_string(),
            timestamp,
            delta_t,
        });
    }
    Ok(out)
}

pub fn read_inventory(path: &Path) -> Result<Vec<TreeRecord>> {
    inventory_rows(csvio::open(path, &INVENTORY_HEADER)?)
}

pub fn parse_inventory<R: Read>(source: R, label: &Path) -> Result<Vec<TreeRecord>> {
    inventory_rows(Table::new(source, label, &INVENTORY_HEADER)?)
}

fn inventory_rows<R: Read>(mut table: Table<R>) -> Result<Vec<TreeRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let tree_id = row.raw(0).to_string();
        let dbh: f64 = row.get(1, "dbh_m")?;
        if !(dbh > 0.0) || !dbh.is_finite() {
            return Err(row.error(format!("dbh_m = {dbh} must be > 0")));
        }
        if !seen.insert(tree_id.clone()) {
            return Err(Error::DuplicateRecord(format!("tree `{tree_id}` at line {}", row.line())));
        }
        out.push(TreeRecord {
            tree_id,
            dbh,
            species: row.raw(2).to_string(),
        });
    }
    Ok(out)
}

/// Gap weeks are written with an empty transpiration field.
pub fn write_weekly_transpiration(path: &Path, series: &WeeklyTranspiration) -> Result<()> {
    let mut w = csvio::writer(path)?;
    csvio::write_record(&mut w, path, WEEKLY_TRANSPIRATION_HEADER)?;
    for v in &series.values {
        csvio::write_record(
            &mut w,
            path,
            [
                series.site_id.clone(),
                v.key.to_string(),
                csvio::fmt_opt(v.transpiration),
                v.support.to_string(),
            ],
        )?;
    }
    csvio::finish(w, path)
}

/// Reads a weekly transpiration table. The plot radius is not stored in the
/// file and is returned as NaN. All rows must belong to one site.
pub fn read_weekly_transpiration(path: &Path) -> Result<WeeklyTranspiration> {
    let mut table = csvio::open(path, &WEEKLY_TRANSPIRATION_HEADER)?;
    let mut site_id: Option<String> = None;
    let mut values = Vec::new();
    for row in table.rows() {
        let row = row?;
        let site = row.raw(0);
        match &site_id {
            None => site_id = Some(site.to_string()),
            Some(s) if s != site => {
                return Err(row.error(format!("mixed sites `{s}` and `{site}` in one table")))
            }
            _ => {}
        }
        let key: IsoWeek = row
            .raw(1)
            .parse()
            .map_err(|e: Error| row.error(e.to_string()))?;
        values.push(TranspirationValue {
            key,
            transpiration: row.get_opt(2, "transpiration_mm_day")?,
            support: row.get(3, "n_days")?,
        });
    }
    Ok(PlotTranspirationSeries {
        site_id: site_id.unwrap_or_default(),
        plot_radius: f64::NAN,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sapflow_rows() {
        let csv = "tree_id,timestamp_utc,delta_t_c\nT01,2020-06-01T00:00:00Z,10.5\nT01,2020-06-01T01:00:00,10.25\n";
        let r = parse_sapflow(csv.as_bytes(), Path::new("sapflow.csv")).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].delta_t, 10.25);
        assert_eq!(r[1].timestamp.to_rfc3339(), "2020-06-01T01:00:00+00:00");
    }

    #[test]
    fn sapflow_schema_and_row_errors() {
        let missing = "tree_id,timestamp_utc\nT01,2020-06-01T00:00:00Z\n";
        assert!(matches!(
            parse_sapflow(missing.as_bytes(), Path::new("s.csv")),
            Err(Error::Schema { column, .. }) if column == "delta_t_c"
        ));
        let bad = "tree_id,timestamp_utc,delta_t_c\nT01,2020-06-01T00:00:00Z,1\nT01,yesterday,1\n";
        assert!(matches!(
            parse_sapflow(bad.as_bytes(), Path::new("s.csv")),
            Err(Error::Row { line: 3, .. })
        ));
    }

    #[test]
    fn inventory_rejects_duplicates_and_bad_dbh() {
        let dup = "tree_id,dbh_m,species\nA,0.3,Picea abies\nA,0.4,Picea abies\n";
        assert!(matches!(
            parse_inventory(dup.as_bytes(), Path::new("i.csv")),
            Err(Error::DuplicateRecord(_))
        ));
        let neg = "tree_id,dbh_m,species\nA,-0.3,Picea abies\n";
        assert!(parse_inventory(neg.as_bytes(), Path::new("i.csv")).is_err());
    }

    #[test]
    fn weekly_file_roundtrip_keeps_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transpiration_weekly.csv");
        let series = PlotTranspirationSeries {
            site_id: "site1".into(),
            plot_radius: 12.0,
            values: vec![
                TranspirationValue {
                    key: "2020-W30".parse().unwrap(),
                    transpiration: Some(1.25),
                    support: 7,
                },
                TranspirationValue {
                    key: "2020-W31".parse().unwrap(),
                    transpiration: None,
                    support: 2,
                },
            ],
        };
        write_weekly_transpiration(&path, &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "site_id,iso_week,transpiration_mm_day,n_days\nsite1,2020-W30,1.25,7\nsite1,2020-W31,,2\n"
        );
        let back = read_weekly_transpiration(&path).unwrap();
        assert_eq!(back.values, series.values);
    }
}
