//! Deterministic synthetic site: all four pipeline inputs plus a sidecar
//! with the true weekly transpiration.
//!
//! Weekly transpiration is planted as a linear function of latent weekly
//! predictors plus Gaussian noise. Each tree's daily flux is a fixed share of
//! that value; hourly ΔT follows a night plateau at the tree's ΔT_max and a
//! daytime sine-shaped depression obtained by inverting the calibration, so
//! the sap-flow chain recovers the planted weeks up to rounding.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::features::{PRPC, TAIR};
use crate::ingest::{weekly_meteo, Band, MeteoDaily, METEO_HEADER, S2_HEADER};
use crate::sapflow::{sapwood_area, Allometry, GranierConstants, INVENTORY_HEADER, SAPFLOW_HEADER};
use crate::week::IsoWeek;
use crate::{csvio, rng, Error, Result};

pub const TRUTH_SCHEMA: &str = "synth-truth-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub site_id: String,
    /// Instrumented trees.
    pub n_trees: usize,
    /// Mapped but uninstrumented trees added to the inventory.
    pub n_uninstrumented: usize,
    pub n_weeks: usize,
    /// First day; moved back to its ISO-week Monday.
    pub start: NaiveDate,
    /// Share of acquisitions flagged cloud or snow.
    pub cloud_fraction: f64,
    pub noise_sd: f64,
    pub intercept: f64,
    /// Predictor name (band, `Tair`, `Prpc`) to weight.
    pub planted_coefficients: BTreeMap<String, f64>,
    pub plot_radius: f64,
    pub revisit_days: u32,
    pub allometry: Allometry,
    pub granier: GranierConstants,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            site_id: "synth".into(),
            n_trees: 20,
            n_uninstrumented: 4,
            n_weeks: 30,
            start: NaiveDate::from_ymd_opt(2020, 6, 1).expect("valid date"),
            cloud_fraction: 0.3,
            noise_sd: 0.15,
            intercept: 0.2,
            planted_coefficients: BTreeMap::from([("B11".into(), 9.0), (TAIR.into(), 0.03)]),
            plot_radius: 12.0,
            revisit_days: 5,
            allometry: Allometry::PICEA_ABIES_EXAMPLE,
            granier: GranierConstants::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.cloud_fraction) {
            return fail(format!("cloud_fraction = {} outside [0, 1)", self.cloud_fraction));
        }
        if !(self.noise_sd >= 0.0) {
            return fail(format!("noise_sd = {} must be >= 0", self.noise_sd));
        }
        if self.n_trees == 0 || self.n_weeks == 0 || self.revisit_days == 0 {
            return fail("n_trees, n_weeks and revisit_days must be >= 1".into());
        }
        if !(self.plot_radius > 0.0) {
            return fail("plot_radius must be > 0".into());
        }
        for name in self.planted_coefficients.keys() {
            if Band::from_name(name).is_none() && name != TAIR && name != PRPC {
                return fail(format!("unknown planted predictor `{name}`"));
            }
        }
        Ok(())
    }

    /// Standard deviation of the planted signal's band terms. Latent band
    /// values are uniform on ±40 % of the band base, so each contributes
    /// `coef² · (0.8 · base)² / 12` to the variance.
    pub fn band_signal_sd(&self) -> f64 {
        self.planted_coefficients
            .iter()
            .filter_map(|(name, coef)| {
                Band::from_name(name).map(|b| (coef * 0.8 * BAND_BASE[b.index()]).powi(2) / 12.0)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Noise level at which a band-only signal has the given expected
    /// oracle R² (`var_s / (var_s + noise²)`).
    pub fn noise_for_oracle_r2(&self, r2: f64) -> f64 {
        self.band_signal_sd() * ((1.0 - r2) / r2).sqrt()
    }

    fn first_monday(&self) -> NaiveDate {
        let back = self.start.weekday().num_days_from_monday();
        self.start - Duration::days(i64::from(back))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthWeek {
    pub iso_week: IsoWeek,
    /// Planted noise-free value.
    pub signal_mm_day: f64,
    /// Signal plus noise (floored at 0); what the sap-flow data encode.
    pub transpiration_mm_day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub schema: String,
    pub seed: u64,
    pub site_id: String,
    pub intercept: f64,
    pub noise_sd: f64,
    pub planted_coefficients: BTreeMap<String, f64>,
    pub weeks: Vec<TruthWeek>,
}

impl Truth {
    /// Squared correlation between planted signal and noisy transpiration:
    /// the best R² any model of the predictors can expect.
    pub fn oracle_r2(&self) -> Option<f64> {
        let s: Vec<f64> = self.weeks.iter().map(|w| w.signal_mm_day).collect();
        let t: Vec<f64> = self.weeks.iter().map(|w| w.transpiration_mm_day).collect();
        crate::eval::metrics(&t, &s).ok().and_then(|m| m.r2)
    }

    pub fn load(path: &Path) -> Result<Truth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub sapflow: PathBuf,
    pub inventory: PathBuf,
    pub s2_samples: PathBuf,
    pub meteo: PathBuf,
    pub truth_path: PathBuf,
    pub truth: Truth,
}

// independent random streams per generation stage
const STREAM_BANDS: u64 = 1;
const STREAM_METEO: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_TREES: u64 = 4;
const STREAM_S2: u64 = 5;

/// Typical summer reflectance of a closed spruce canopy, by band.
const BAND_BASE: [f64; 12] = [
    0.020, 0.030, 0.050, 0.030, 0.080, 0.200, 0.250, 0.270, 0.290, 0.300, 0.150, 0.070,
];

pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<SynthOutput> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let monday = config.first_monday();
    let n_days = config.n_weeks * 7;
    let day = |d: usize| monday + Duration::days(d as i64);
    let week_of_day = |d: usize| d / 7;

    // latent weekly reflectance: uniform in ±40 % around the band base
    let mut r = rng::stream(config.seed, STREAM_BANDS);
    let bands: Vec<[f64; 12]> = (0..config.n_weeks)
        .map(|_| std::array::from_fn(|b| BAND_BASE[b] * (0.6 + 0.8 * r.random::<f64>())))
        .collect();

    let meteo = daily_meteo(config, monday, n_days);
    let weekly = weekly_meteo(&meteo, true)?;

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut r = rng::stream(config.seed, STREAM_NOISE);
    let mut truth_weeks = Vec::with_capacity(config.n_weeks);
    for (w, wb) in bands.iter().enumerate() {
        let mut signal = config.intercept;
        for (name, coef) in &config.planted_coefficients {
            let x = match Band::from_name(name) {
                Some(b) => wb[b.index()],
                None if name == TAIR => weekly[w].tair_mean,
                None => weekly[w].precip_sum,
            };
            signal += coef * x;
        }
        let noise = config.noise_sd * normal.sample(&mut r);
        truth_weeks.push(TruthWeek {
            iso_week: IsoWeek::of(day(w * 7)),
            signal_mm_day: signal,
            transpiration_mm_day: (signal + noise).max(0.0),
        });
    }

    let out = SynthOutput {
        sapflow: out_dir.join("sapflow.csv"),
        inventory: out_dir.join("inventory.csv"),
        s2_samples: out_dir.join("s2_samples.csv"),
        meteo: out_dir.join("meteo.csv"),
        truth_path: out_dir.join("truth.json"),
        truth: Truth {
            schema: TRUTH_SCHEMA.into(),
            seed: config.seed,
            site_id: config.site_id.clone(),
            intercept: config.intercept,
            noise_sd: config.noise_sd,
            planted_coefficients: config.planted_coefficients.clone(),
            weeks: truth_weeks,
        },
    };

    write_trees(config, &out, monday, n_days)?;
    write_s2(config, &out.s2_samples, &bands, monday, n_days, week_of_day)?;
    write_meteo(&out.meteo, &meteo)?;
    let mut truth_json = serde_json::to_string_pretty(&out.truth)?;
    truth_json.push('\n');
    std::fs::write(&out.truth_path, truth_json).map_err(|e| Error::io(&out.truth_path, e))?;
    Ok(out)
}

fn daily_meteo(config: &SynthConfig, monday: NaiveDate, n_days: usize) -> Vec<MeteoDaily> {
    let mut r = rng::stream(config.seed, STREAM_METEO);
    let normal = Normal::new(0.0, 2.5).expect("valid sd");
    let rain = Exp::new(1.0 / 6.0).expect("valid rate");
    (0..n_days)
        .map(|d| {
            let date = monday + Duration::days(d as i64);
            let doy = f64::from(date.ordinal());
            let seasonal = 8.0 + 9.0 * (2.0 * PI * (doy - 200.0) / 365.25).cos();
            let tair = round_to(seasonal + normal.sample(&mut r), 100.0);
            let precip = if r.random_bool(0.35) {
                round_to(rain.sample(&mut r), 10.0)
            } else {
                0.0
            };
            MeteoDaily { date, tair, precip }
        })
        .collect()
}

fn round_to(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}

/// Fraction of a day's flux in each UTC hour: zero at night, a sine arch
/// between 06:00 and 18:00.
fn diurnal_shape() -> [f64; 24] {
    let mut s = [0.0; 24];
    for (h, v) in s.iter_mut().enumerate() {
        if h > 6 && h < 18 {
            *v = (PI * (h as f64 - 6.0) / 12.0).sin();
        }
    }
    let total: f64 = s.iter().sum();
    s.map(|v| v / total)
}

fn write_trees(config: &SynthConfig, out: &SynthOutput, monday: NaiveDate, n_days: usize) -> Result<()> {
    let mut r: ChaCha8Rng = rng::stream(config.seed, STREAM_TREES);
    struct Tree {
        id: String,
        dbh: f64,
        weight: f64,
        delta_t_max: f64,
    }
    let mut trees: Vec<Tree> = (0..config.n_trees)
        .map(|i| Tree {
            id: format!("T{:02}", i + 1),
            dbh: round_to(r.random_range(0.20..0.55), 1000.0),
            weight: r.random_range(0.7..1.3),
            delta_t_max: round_to(r.random_range(9.0..12.0), 1000.0),
        })
        .collect();
    let areas: Vec<f64> = trees
        .iter()
        .map(|t| sapwood_area(t.dbh, config.allometry.alpha, config.allometry.beta))
        .collect::<Result<_>>()?;
    let total_area: f64 = areas.iter().sum();
    let weighted: f64 = trees.iter().zip(&areas).map(|(t, a)| t.weight * a).sum();
    for t in &mut trees {
        t.weight *= total_area / weighted;
    }

    let mut w = csvio::writer(&out.inventory)?;
    csvio::write_record(&mut w, &out.inventory, INVENTORY_HEADER)?;
    for t in &trees {
        csvio::write_record(&mut w, &out.inventory, [t.id.as_str(), &t.dbh.to_string(), "Picea abies"])?;
    }
    for i in 0..config.n_uninstrumented {
        let dbh = round_to(r.random_range(0.10..0.45), 1000.0);
        csvio::write_record(
            &mut w,
            &out.inventory,
            [format!("U{:02}", i + 1), dbh.to_string(), "Picea abies".into()],
        )?;
    }
    csvio::finish(w, &out.inventory)?;

    // plot water depth (mm/day) -> volume per unit sapwood (m³/m²/day)
    let ground = PI * config.plot_radius * config.plot_radius;
    let per_sapwood = ground / (1000.0 * total_area);
    let shape = diurnal_shape();
    let g = config.granier;

    let mut w = csvio::writer(&out.sapflow)?;
    csvio::write_record(&mut w, &out.sapflow, SAPFLOW_HEADER)?;
    let t0 = Utc.from_utc_datetime(&monday.and_hms_opt(0, 0, 0).expect("midnight"));
    for t in &trees {
        for d in 0..n_days {
            let transp = out.truth.weeks[d / 7].transpiration_mm_day;
            let daily = t.weight * transp * per_sapwood;
            for (h, share) in shape.iter().enumerate() {
                let fd = daily * share / 3600.0;
                let delta_t = if fd > 0.0 {
                    let k = (fd / g.coefficient).powf(1.0 / g.exponent);
                    t.delta_t_max / (1.0 + k)
                } else {
                    t.delta_t_max
                };
                let ts = t0 + Duration::hours((d * 24 + h) as i64);
                csvio::write_record(
                    &mut w,
                    &out.sapflow,
                    [
                        t.id.clone(),
                        ts.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
                        delta_t.to_string(),
                    ],
                )?;
            }
        }
    }
    csvio::finish(w, &out.sapflow)
}

fn write_s2(
    config: &SynthConfig,
    path: &Path,
    bands: &[[f64; 12]],
    monday: NaiveDate,
    n_days: usize,
    week_of_day: impl Fn(usize) -> usize,
) -> Result<()> {
    let mut r = rng::stream(config.seed, STREAM_S2);
    let jitter = Normal::new(0.0, 0.002).expect("valid sd");
    let phase = r.random_range(0..config.revisit_days) as usize;

    // 3×3 grid of 10 m pixels around an off-centre site
    let pixels: Vec<(String, f64)> = (-1..=1)
        .flat_map(|i| (-1..=1).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (dx, dy) = (f64::from(i) * 10.0 + 2.0, f64::from(j) * 10.0 - 3.0);
            (format!("px{}{}", i + 1, j + 1), round_to(dx.hypot(dy), 100.0))
        })
        .collect();
    let pixel_gain: Vec<[f64; 12]> = pixels
        .iter()
        .map(|_| std::array::from_fn(|_| r.random_range(-0.03..0.03)))
        .collect();

    let mut w = csvio::writer(path)?;
    csvio::write_record(&mut w, path, S2_HEADER)?;
    for d in (phase..n_days).step_by(config.revisit_days as usize) {
        let date = monday + Duration::days(d as i64);
        let ts = format!("{}T10:20:00Z", date.format("%Y-%m-%d"));
        let flagged = r.random_bool(config.cloud_fraction);
        let snow = flagged && r.random_bool(0.25);
        let cloud = flagged && !snow;
        let latent = &bands[week_of_day(d)];
        for (p, (id, dist)) in pixels.iter().enumerate() {
            let mut rec = vec![ts.clone(), id.clone(), dist.to_string()];
            for b in 0..12 {
                let mut v = latent[b] * (1.0 + pixel_gain[p][b]) + jitter.sample(&mut r);
                if *dist > config.plot_radius {
                    v += 0.05;
                }
                if flagged {
                    v = 0.45 + 0.1 * r.random::<f64>();
                }
                let dn = (v.clamp(0.0, 1.0) * 1e4).round() as i64;
                rec.push(dn.to_string());
            }
            rec.push(u8::from(cloud).to_string());
            rec.push(u8::from(snow).to_string());
            csvio::write_record(&mut w, path, &rec)?;
        }
    }
    csvio::finish(w, path)
}

fn write_meteo(path: &Path, days: &[MeteoDaily]) -> Result<()> {
    let mut w = csvio::writer(path)?;
    csvio::write_record(&mut w, path, METEO_HEADER)?;
    for d in days {
        csvio::write_record(
            &mut w,
            path,
            [d.date.format("%Y-%m-%d").to_string(), d.tair.to_string(), d.precip.to_string()],
        )?;
    }
    csvio::finish(w, path)
}
