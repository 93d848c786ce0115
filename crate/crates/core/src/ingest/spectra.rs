use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::csvio::{self, Table};
use crate::week::IsoWeek;
use crate::{Error, Result};

/// Sentinel-2 L2A surface-reflectance bands (B10 is not distributed at L2A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B8A,
    B9,
    B11,
    B12,
}

impl Band {
    pub const ALL: [Band; 12] = [
        Band::B1,
        Band::B2,
        Band::B3,
        Band::B4,
        Band::B5,
        Band::B6,
        Band::B7,
        Band::B8,
        Band::B8A,
        Band::B9,
        Band::B11,
        Band::B12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Band::B1 => "B1",
            Band::B2 => "B2",
            Band::B3 => "B3",
            Band::B4 => "B4",
            Band::B5 => "B5",
            Band::B6 => "B6",
            Band::B7 => "B7",
            Band::B8 => "B8",
            Band::B8A => "B8A",
            Band::B9 => "B9",
            Band::B11 => "B11",
            Band::B12 => "B12",
        }
    }

    pub fn index(self) -> usize {
        Band::ALL.iter().position(|&b| b == self).expect("listed")
    }

    pub fn from_name(name: &str) -> Option<Band> {
        Band::ALL.iter().copied().find(|b| b.name() == name)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Digital numbers in the L2A archive are reflectance × 10⁴.
pub const REFLECTANCE_SCALE: f64 = 1e-4;
const DN_PER_UNIT: f64 = 10_000.0;

pub const S2_HEADER: [&str; 17] = [
    "timestamp_utc",
    "pixel_id",
    "distance_m",
    "B1",
    "B2",
    "B3",
    "B4",
    "B5",
    "B6",
    "B7",
    "B8",
    "B8A",
    "B9",
    "B11",
    "B12",
    "cloud",
    "snow",
];

/// One pixel of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub timestamp: DateTime<Utc>,
    pub pixel_id: String,
    /// Distance from the site centre, m.
    pub distance: f64,
    /// Surface reflectance in [0, 1], indexed by [`Band::index`].
    pub bands: [f64; 12],
    pub cloud: bool,
    pub snow: bool,
}

impl SpectralSample {
    pub fn band(&self, band: Band) -> f64 {
        self.bands[band.index()]
    }
}

/// Mean in-buffer reflectance of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionMean {
    pub timestamp: DateTime<Utc>,
    pub bands: [f64; 12],
    pub n_pixels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySpectra {
    pub iso_week: IsoWeek,
    pub band_means: [f64; 12],
    pub n_obs: usize,
}

pub fn read_s2(path: &Path) -> Result<Vec<SpectralSample>> {
    s2_rows(csvio::open(path, &S2_HEADER)?)
}

pub fn parse_s2<R: Read>(source: R, label: &Path) -> Result<Vec<SpectralSample>> {
    s2_rows(Table::new(source, label, &S2_HEADER)?)
}

fn s2_rows<R: Read>(mut table: Table<R>) -> Result<Vec<SpectralSample>> {
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let raw_ts = row.raw(0);
        let timestamp = csvio::parse_utc(raw_ts)
            .ok_or_else(|| row.error(format!("cannot parse timestamp `{raw_ts}`")))?;
        let distance: f64 = row.get(2, "distance_m")?;
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(row.error(format!("distance_m = {distance} must be >= 0")));
        }
        let mut bands = [0.0; 12];
        for (i, band) in Band::ALL.iter().enumerate() {
            let dn: f64 = row.get(3 + i, band.name())?;
            let r = dn / DN_PER_UNIT;
            if !(0.0..=1.0).contains(&r) {
                return Err(row.error(format!("{band} = {dn} outside the 0..=10000 range")));
            }
            bands[i] = r;
        }
        let flag = |col: usize, name: &str| -> Result<bool> {
            match row.raw(col) {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(row.error(format!("{name} = `{other}` (expected 0 or 1)"))),
            }
        };
        out.push(SpectralSample {
            timestamp,
            pixel_id: row.raw(1).to_string(),
            distance,
            bands,
            cloud: flag(15, "cloud")?,
            snow: flag(16, "snow")?,
        });
    }
    Ok(out)
}

/// Keep only samples flagged neither cloud nor snow.
pub fn qa_filter(samples: &[SpectralSample]) -> Vec<SpectralSample> {
    samples
        .iter()
        .filter(|s| !s.cloud && !s.snow)
        .cloned()
        .collect()
}

/// Per-acquisition mean over pixels within `radius` m of the site centre.
/// Acquisitions without in-buffer pixels are omitted.
pub fn buffer_average(samples: &[SpectralSample], radius: f64) -> Result<Vec<AcquisitionMean>> {
    if !(radius > 0.0) {
        return Err(Error::Config(format!("buffer radius = {radius} (must be > 0)")));
    }
    let mut acc: BTreeMap<DateTime<Utc>, ([f64; 12], usize)> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.distance <= radius) {
        let e = acc.entry(s.timestamp).or_insert(([0.0; 12], 0));
        for (sum, v) in e.0.iter_mut().zip(&s.bands) {
            *sum += v;
        }
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(timestamp, (sums, n))| AcquisitionMean {
            timestamp,
            bands: sums.map(|s| s / n as f64),
            n_pixels: n,
        })
        .collect())
}

/// ISO-week mean over acquisitions. Weeks without acquisitions are absent.
pub fn weekly_bands(acquisitions: &[AcquisitionMean]) -> Vec<WeeklySpectra> {
    let mut acc: BTreeMap<IsoWeek, ([f64; 12], usize)> = BTreeMap::new();
    for a in acquisitions {
        let e = acc
            .entry(IsoWeek::of(a.timestamp.date_naive()))
            .or_insert(([0.0; 12], 0));
        for (sum, v) in e.0.iter_mut().zip(&a.bands) {
            *sum += v;
        }
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(iso_week, (sums, n))| WeeklySpectra {
            iso_week,
            band_means: sums.map(|s| s / n as f64),
            n_obs: n,
        })
        .collect()
}

pub const WEEKLY_SPECTRA_HEADER: [&str; 14] = [
    "iso_week", "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8", "B8A", "B9", "B11", "B12", "n_obs",
];

pub fn write_weekly_spectra(path: &Path, weeks: &[WeeklySpectra]) -> Result<()> {
    let mut w = csvio::writer(path)?;
    csvio::write_record(&mut w, path, WEEKLY_SPECTRA_HEADER)?;
    for week in weeks {
        let mut rec = vec![week.iso_week.to_string()];
        rec.extend(week.band_means.iter().map(|v| v.to_string()));
        rec.push(week.n_obs.to_string());
        csvio::write_record(&mut w, path, rec)?;
    }
    csvio::finish(w, path)
}

pub fn read_weekly_spectra(path: &Path) -> Result<Vec<WeeklySpectra>> {
    let mut table = csvio::open(path, &WEEKLY_SPECTRA_HEADER)?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let iso_week: IsoWeek = row
            .raw(0)
            .parse()
            .map_err(|e: Error| row.error(e.to_string()))?;
        let mut band_means = [0.0; 12];
        for (i, band) in Band::ALL.iter().enumerate() {
            band_means[i] = row.get(1 + i, band.name())?;
        }
        out.push(WeeklySpectra {
            iso_week,
            band_means,
            n_obs: row.get(13, "n_obs")?,
        });
    }
    Ok(out)
}
