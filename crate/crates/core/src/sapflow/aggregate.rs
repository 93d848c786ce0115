use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::NaiveDate;

use super::{
    DailyTranspiration, PlotTranspirationSeries, SapFluxSeries, TranspirationValue, TreeCoverage,
    WeeklyTranspiration,
};
use crate::week::IsoWeek;
use crate::{Error, Result};

const SECONDS_PER_SAMPLE: f64 = 3600.0;
const MM_PER_M: f64 = 1000.0;

/// One tree's integrated flux for a UTC calendar day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyFlux {
    pub date: NaiveDate,
    /// m³·m⁻²·day⁻¹, `None` when fewer than `min_hours` samples were valid.
    pub flux: Option<f64>,
    pub n_samples: usize,
}

/// Integrate hourly flux density to daily flux, `Σ Fd · 3600 s`.
pub fn daily_flux(series: &SapFluxSeries, min_hours: usize) -> Vec<DailyFlux> {
    let mut days: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for (t, fd) in &series.samples {
        let e = days.entry(t.date_naive()).or_insert((0.0, 0));
        e.0 += fd * SECONDS_PER_SAMPLE;
        e.1 += 1;
    }
    days.into_iter()
        .map(|(date, (sum, n))| DailyFlux {
            date,
            flux: (n >= min_hours).then_some(sum),
            n_samples: n,
        })
        .collect()
}

/// Sapwood area `alpha · dbh^beta`, m².
pub fn sapwood_area(dbh: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(dbh > 0.0) || !dbh.is_finite() {
        return Err(Error::InvalidInventory(format!("dbh = {dbh} m (must be > 0)")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInventory(format!("alpha = {alpha} (must be > 0)")));
    }
    Ok(alpha * dbh.powf(beta))
}

/// Sapwood-weighted plot transpiration,
/// `T = Σ Fd_i · As_i / (π r²)` converted to mm·day⁻¹.
///
/// `daily` maps tree id to that tree's daily fluxes; `areas` maps tree id to
/// sapwood area. Trees present in `areas` without flux are ignored.
pub fn plot_transpiration(
    site_id: &str,
    daily: &BTreeMap<String, Vec<DailyFlux>>,
    areas: &BTreeMap<String, f64>,
    plot_radius: f64,
    coverage: TreeCoverage,
) -> Result<DailyTranspiration> {
    if !(plot_radius > 0.0) {
        return Err(Error::Config(format!("plot_radius = {plot_radius} (must be > 0)")));
    }
    let mut total_area = 0.0;
    for tree in daily.keys() {
        total_area += *areas
            .get(tree)
            .ok_or_else(|| Error::InventoryMismatch(tree.clone()))?;
    }
    let ground = PI * plot_radius * plot_radius;
    let n_trees = daily.len();

    // date -> (Σ Fd·As, Σ As of reporting trees, reporting trees)
    let mut by_day: BTreeMap<NaiveDate, (f64, f64, usize)> = BTreeMap::new();
    for (tree, days) in daily {
        let area = areas[tree];
        for d in days {
            let e = by_day.entry(d.date).or_insert((0.0, 0.0, 0));
            if let Some(flux) = d.flux {
                e.0 += flux * area;
                e.1 += area;
                e.2 += 1;
            }
        }
    }

    let values = by_day
        .into_iter()
        .map(|(date, (weighted, reporting_area, reporting))| {
            let volume = match coverage {
                TreeCoverage::AllTrees => (reporting == n_trees).then_some(weighted),
                TreeCoverage::AvailableTrees => {
                    (reporting > 0).then(|| weighted * (total_area / reporting_area))
                }
            };
            TranspirationValue {
                key: date,
                transpiration: volume.map(|v| v / ground * MM_PER_M),
                support: reporting,
            }
        })
        .collect();

    Ok(PlotTranspirationSeries {
        site_id: site_id.to_string(),
        plot_radius,
        values,
    })
}

/// ISO-week means of the valid daily values; weeks with fewer than
/// `min_days` valid days become gaps.
pub fn weekly_transpiration(daily: &DailyTranspiration, min_days: usize) -> WeeklyTranspiration {
    let mut weeks: BTreeMap<IsoWeek, (f64, usize)> = BTreeMap::new();
    for v in &daily.values {
        let e = weeks.entry(IsoWeek::of(v.key)).or_insert((0.0, 0));
        if let Some(t) = v.transpiration {
            e.0 += t;
            e.1 += 1;
        }
    }
    let values = weeks
        .into_iter()
        .map(|(week, (sum, n))| TranspirationValue {
            key: week,
            transpiration: (n >= min_days && n > 0).then(|| sum / n as f64),
            support: n,
        })
        .collect();
    PlotTranspirationSeries {
        site_id: daily.site_id.clone(),
        plot_radius: daily.plot_radius,
        values,
    }
}
