//! Tree-level sap flow to plot-scale canopy transpiration.
//!
//! Probe temperature differences are converted to sap flux density with the
//! thermal-dissipation calibration, integrated to daily fluxes, weighted by
//! each tree's sapwood area, normalised by the plot ground area and finally
//! averaged to ISO weeks.

mod aggregate;
mod granier;
mod io;

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub use aggregate::{daily_flux, plot_transpiration, sapwood_area, weekly_transpiration, DailyFlux};
pub use granier::{compute_delta_t_max, flux_series, granier_flux, FluxDensity};
pub use io::{
    parse_inventory, parse_sapflow, read_inventory, read_sapflow, read_weekly_transpiration,
    write_weekly_transpiration, INVENTORY_HEADER, SAPFLOW_HEADER, WEEKLY_TRANSPIRATION_HEADER,
};

use crate::week::IsoWeek;
use crate::{Error, Result};

/// One hourly probe record.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalReading {
    pub tree_id: String,
    pub timestamp: DateTime<Utc>,
    /// Heated minus reference probe temperature, °C.
    pub delta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRecord {
    pub tree_id: String,
    /// Diameter at breast height, m.
    pub dbh: f64,
    pub species: String,
}

/// Sap flux density samples of one tree, m³·m⁻²·s⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct SapFluxSeries {
    pub tree_id: String,
    pub samples: Vec<(DateTime<Utc>, f64)>,
}

/// One entry of a plot transpiration series. `transpiration` is `None` for a
/// gap. `support` counts what backs the value: reporting trees for a daily
/// entry, valid days for a weekly one.
#[derive(Debug, Clone, PartialEq)]
pub struct TranspirationValue<K> {
    pub key: K,
    pub transpiration: Option<f64>,
    pub support: usize,
}

/// Plot-scale transpiration in mm·day⁻¹, keyed by date or ISO week.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTranspirationSeries<K> {
    pub site_id: String,
    pub plot_radius: f64,
    pub values: Vec<TranspirationValue<K>>,
}

pub type DailyTranspiration = PlotTranspirationSeries<NaiveDate>;
pub type WeeklyTranspiration = PlotTranspirationSeries<IsoWeek>;

impl<K: Copy> PlotTranspirationSeries<K> {
    /// Non-gap entries as `(key, value)`.
    pub fn observed(&self) -> impl Iterator<Item = (K, f64)> + '_ {
        self.values
            .iter()
            .filter_map(|v| v.transpiration.map(|t| (v.key, t)))
    }
}

/// Thermal-dissipation calibration `Fd = coefficient · K^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GranierConstants {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for GranierConstants {
    fn default() -> Self {
        GranierConstants {
            coefficient: 118.99e-6,
            exponent: 1.231,
        }
    }
}

/// Sapwood-area power law `As = alpha · dbh^beta` (dbh in m, As in m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allometry {
    pub alpha: f64,
    pub beta: f64,
}

impl Allometry {
    /// Illustrative coefficients for Norway spruce, giving roughly 0.05 m² of
    /// sapwood at 35 cm DBH. Not a fitted calibration: site studies must
    /// supply their own.
    pub const PICEA_ABIES_EXAMPLE: Allometry = Allometry {
        alpha: 0.4,
        beta: 1.9,
    };
}

/// Which days produce a plot value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeCoverage {
    /// Only days on which every instrumented tree reports.
    #[default]
    AllTrees,
    /// Any day with at least one reporting tree; the reporting trees' mean
    /// sapwood-weighted flux is scaled up to the full instrumented sapwood area.
    AvailableTrees,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapflowConfig {
    pub window_days: u32,
    pub min_hours: usize,
    pub min_days: usize,
    pub plot_radius: f64,
    pub granier: GranierConstants,
    pub allometry: Allometry,
    pub coverage: TreeCoverage,
}

impl SapflowConfig {
    pub fn new(allometry: Allometry) -> Self {
        SapflowConfig {
            window_days: 10,
            min_hours: 20,
            min_days: 4,
            plot_radius: 12.0,
            granier: GranierConstants::default(),
            allometry,
            coverage: TreeCoverage::AllTrees,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.window_days == 0 {
            return fail("window_days must be >= 1");
        }
        if self.min_hours == 0 || self.min_hours > 24 {
            return fail("min_hours must be in 1..=24");
        }
        if self.min_days == 0 || self.min_days > 7 {
            return fail("min_days must be in 1..=7");
        }
        if !(self.plot_radius > 0.0 && self.plot_radius.is_finite()) {
            return fail("plot_radius must be > 0");
        }
        if !(self.allometry.alpha > 0.0) || !self.allometry.beta.is_finite() {
            return fail("allometry alpha must be > 0 and beta finite");
        }
        if !(self.granier.coefficient > 0.0) || !(self.granier.exponent > 0.0) {
            return fail("granier constants must be > 0");
        }
        Ok(())
    }
}

/// Counters for readings the conversion did not take at face value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluxQa {
    /// Readings with ΔT ≤ 0, dropped before conversion.
    pub invalid_readings: usize,
    /// Readings with ΔT above the baseline whose flow index was clamped to 0.
    pub clamped: usize,
}

impl std::ops::AddAssign for FluxQa {
    fn add_assign(&mut self, rhs: FluxQa) {
        self.invalid_readings += rhs.invalid_readings;
        self.clamped += rhs.clamped;
    }
}

#[derive(Debug, Clone)]
pub struct Upscaled {
    pub daily: DailyTranspiration,
    pub weekly: WeeklyTranspiration,
    pub qa: FluxQa,
}

/// Full tree-to-plot chain for one site.
///
/// Readings may interleave trees; each tree's readings must be in strictly
/// increasing time order.
pub fn upscale(
    site_id: &str,
    readings: &[ThermalReading],
    inventory: &[TreeRecord],
    config: &SapflowConfig,
) -> Result<Upscaled> {
    config.validate()?;
    if readings.is_empty() {
        return Err(Error::EmptyInput("no sap-flow readings".into()));
    }

    let mut by_tree: BTreeMap<&str, Vec<ThermalReading>> = BTreeMap::new();
    for r in readings {
        by_tree.entry(r.tree_id.as_str()).or_default().push(r.clone());
    }

    let mut areas = BTreeMap::new();
    for tree in inventory {
        if areas.contains_key(&tree.tree_id) {
            return Err(Error::DuplicateRecord(format!("tree `{}` in inventory", tree.tree_id)));
        }
        let area = sapwood_area(tree.dbh, config.allometry.alpha, config.allometry.beta)?;
        areas.insert(tree.tree_id.clone(), area);
    }

    let mut qa = FluxQa::default();
    let mut daily = BTreeMap::new();
    for (tree_id, tree_readings) in by_tree {
        let (series, tree_qa) = flux_series(tree_id, &tree_readings, config)?;
        if tree_qa.invalid_readings > 0 {
            log::warn!("tree {tree_id}: dropped {} readings with ΔT <= 0", tree_qa.invalid_readings);
        }
        qa += tree_qa;
        daily.insert(tree_id.to_string(), daily_flux(&series, config.min_hours));
    }

    let daily = plot_transpiration(site_id, &daily, &areas, config.plot_radius, config.coverage)?;
    let weekly = weekly_transpiration(&daily, config.min_days);
    log::debug!(
        "{site_id}: {} of {} weeks observed",
        weekly.observed().count(),
        weekly.values.len()
    );
    Ok(Upscaled { daily, weekly, qa })
}
