use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::csvio::{self, Table};
use crate::week::IsoWeek;
use crate::{Error, Result};

pub const METEO_HEADER: [&str; 3] = ["date", "tair_c", "precip_mm"];
pub const WEEKLY_METEO_HEADER: [&str; 4] = ["iso_week", "tair_mean_c", "precip_sum_mm", "n_days"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteoDaily {
    pub date: NaiveDate,
    /// °C
    pub tair: f64,
    /// mm·day⁻¹
    pub precip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeeklyMeteo {
    pub iso_week: IsoWeek,
    pub tair_mean: f64,
    /// mm·week⁻¹
    pub precip_sum: f64,
    pub n_days: usize,
}

pub fn read_meteo(path: &Path) -> Result<Vec<MeteoDaily>> {
    meteo_rows(csvio::open(path, &METEO_HEADER)?)
}

pub fn parse_meteo<R: Read>(source: R, label: &Path) -> Result<Vec<MeteoDaily>> {
    meteo_rows(Table::new(source, label, &METEO_HEADER)?)
}

fn meteo_rows<R: Read>(mut table: Table<R>) -> Result<Vec<MeteoDaily>> {
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let raw = row.raw(0);
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| row.error(format!("cannot parse date `{raw}`")))?;
        let tair: f64 = row.get(1, "tair_c")?;
        let precip: f64 = row.get(2, "precip_mm")?;
        if !tair.is_finite() {
            return Err(row.error("tair_c is not finite"));
        }
        if !(precip >= 0.0) || !precip.is_finite() {
            return Err(row.error(format!("precip_mm = {precip} must be >= 0")));
        }
        out.push(MeteoDaily { date, tair, precip });
    }
    Ok(out)
}

/// Weekly mean air temperature and precipitation total. With
/// `require_complete`, only weeks with all seven days are emitted.
pub fn weekly_meteo(daily: &[MeteoDaily], require_complete: bool) -> Result<Vec<WeeklyMeteo>> {
    let mut by_date: BTreeMap<NaiveDate, &MeteoDaily> = BTreeMap::new();
    for d in daily {
        if by_date.insert(d.date, d).is_some() {
            return Err(Error::DuplicateRecord(format!("meteorology for {}", d.date)));
        }
    }
    let mut weeks: BTreeMap<IsoWeek, (f64, f64, usize)> = BTreeMap::new();
    for (date, d) in by_date {
        let e = weeks.entry(IsoWeek::of(date)).or_insert((0.0, 0.0, 0));
        e.0 += d.tair;
        e.1 += d.precip;
        e.2 += 1;
    }
    Ok(weeks
        .into_iter()
        .filter(|(_, (_, _, n))| !require_complete || *n == 7)
        .map(|(iso_week, (tair, precip, n))| WeeklyMeteo {
            iso_week,
            tair_mean: tair / n as f64,
            precip_sum: precip,
            n_days: n,
        })
        .collect())
}

pub fn write_weekly_meteo(path: &Path, weeks: &[WeeklyMeteo]) -> Result<()> {
    let mut w = csvio::writer(path)?;
    csvio::write_record(&mut w, path, WEEKLY_METEO_HEADER)?;
    for week in weeks {
        csvio::write_record(
            &mut w,
            path,
            [
                week.iso_week.to_string(),
                week.tair_mean.to_string(),
                week.precip_sum.to_string(),
                week.n_days.to_string(),
            ],
        )?;
    }
    csvio::finish(w, path)
}

pub fn read_weekly_meteo(path: &Path) -> Result<Vec<WeeklyMeteo>> {
    let mut table = csvio::open(path, &WEEKLY_METEO_HEADER)?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let iso_week: IsoWeek = row
            .raw(0)
            .parse()
            .map_err(|e: Error| row.error(e.to_string()))?;
        out.push(WeeklyMeteo {
            iso_week,
            tair_mean: row.get(1, "tair_mean_c")?,
            precip_sum: row.get(2, "precip_sum_mm")?,
            n_days: row.get(3, "n_days")?,
        });
    }
    Ok(out)
}
