//! Per-site TOML configuration.
//!
//! Every section except `[site]` and `[allometry]` is optional. Unknown keys
//! are rejected. Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use canopyflux::eval::CvConfig;
use canopyflux::features::FeatureSet;
use canopyflux::forest::ForestConfig;
use canopyflux::sapflow::{Allometry, GranierConstants, SapflowConfig, TreeCoverage};
use canopyflux::synth::SynthConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub site: SiteSection,
    #[serde(default)]
    pub inputs: InputsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sapflow: SapflowSection,
    pub allometry: AllometrySection,
    #[serde(default)]
    pub granier: GranierSection,
    #[serde(default)]
    pub spectra: SpectraSection,
    #[serde(default)]
    pub meteo: MeteoSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSection {
    pub id: String,
    #[serde(default = "default_radius")]
    pub plot_radius_m: f64,
    #[serde(default = "default_feature_sets")]
    pub feature_sets: Vec<FeatureSet>,
}

fn default_radius() -> f64 {
    12.0
}

fn default_feature_sets() -> Vec<FeatureSet> {
    vec![FeatureSet::S2, FeatureSet::S2Meteo]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsSection {
    pub sapflow: PathBuf,
    pub inventory: PathBuf,
    pub s2_samples: PathBuf,
    /// Read only when a feature set needs meteorology.
    pub meteo: Option<PathBuf>,
}

impl Default for InputsSection {
    fn default() -> Self {
        InputsSection {
            sapflow: "sapflow.csv".into(),
            inventory: "inventory.csv".into(),
            s2_samples: "s2_samples.csv".into(),
            meteo: Some("meteo.csv".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SapflowSection {
    pub window_days: u32,
    pub min_hours: usize,
    pub min_days: usize,
    pub coverage: TreeCoverage,
}

impl Default for SapflowSection {
    fn default() -> Self {
        let d = SapflowConfig::new(Allometry::PICEA_ABIES_EXAMPLE);
        SapflowSection {
            window_days: d.window_days,
            min_hours: d.min_hours,
            min_days: d.min_days,
            coverage: d.coverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllometrySection {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GranierSection {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for GranierSection {
    fn default() -> Self {
        let g = GranierConstants::default();
        GranierSection {
            coefficient: g.coefficient,
            exponent: g.exponent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSection {
    /// Defaults to the plot radius.
    pub buffer_radius_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeteoSection {
    pub require_complete_weeks: bool,
}

impl Default for MeteoSection {
    fn default() -> Self {
        MeteoSection {
            require_complete_weeks: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: usize,
    pub min_node_size: usize,
    pub bootstrap: bool,
}

impl Default for ForestSection {
    fn default() -> Self {
        let f = ForestConfig::default();
        ForestSection {
            n_trees: f.n_trees,
            min_node_size: f.min_node_size,
            bootstrap: f.bootstrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: usize,
    pub repeats: usize,
    pub mtry_grid: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for CvSection {
    fn default() -> Self {
        let c = CvConfig::default();
        CvSection {
            k: c.k,
            repeats: c.repeats,
            mtry_grid: c.mtry_grid,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub n_trees: usize,
    pub n_uninstrumented: usize,
    pub n_weeks: usize,
    pub start: NaiveDate,
    pub cloud_fraction: f64,
    pub noise_sd: f64,
    pub intercept: f64,
    pub planted_coefficients: BTreeMap<String, f64>,
    pub revisit_days: u32,
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        SynthSection {
            seed: s.seed,
            n_trees: s.n_trees,
            n_uninstrumented: s.n_uninstrumented,
            n_weeks: s.n_weeks,
            start: s.start,
            cloud_fraction: s.cloud_fraction,
            noise_sd: s.noise_sd,
            intercept: s.intercept,
            planted_coefficients: s.planted_coefficients,
            revisit_days: s.revisit_days,
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: SiteConfig,
    pub path: PathBuf,
    pub dir: PathBuf,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::config(path, e.to_string()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::config(path, e.to_string()))?;
    let config: SiteConfig = toml::from_str(text).map_err(|e| CliError::config(path, e.to_string()))?;
    config.validate().map_err(|reason| CliError::config(path, reason))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        config,
        path: path.to_path_buf(),
        dir,
        sha256: sha256_hex(&bytes),
    })
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl SiteConfig {
    pub fn validate(&self) -> Result<(), String> {
        let id = &self.site.id;
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(format!("site.id `{id}` must be non-empty [A-Za-z0-9_-]"));
        }
        if self.site.feature_sets.is_empty() {
            return Err("site.feature_sets must not be empty".into());
        }
        for (i, fs) in self.site.feature_sets.iter().enumerate() {
            if self.site.feature_sets[..i].contains(fs) {
                return Err(format!("feature set {fs} listed twice"));
            }
        }
        if self.needs_meteo() && self.inputs.meteo.is_none() {
            return Err("inputs.meteo is required by feature set S2+Meteo".into());
        }
        if let Some(r) = self.spectra.buffer_radius_m {
            if !(r > 0.0) {
                return Err(format!("spectra.buffer_radius_m = {r} must be > 0"));
            }
        }
        if self.forest.n_trees == 0 || self.forest.min_node_size == 0 {
            return Err("forest.n_trees and forest.min_node_size must be >= 1".into());
        }
        if self.cv.k < 2 || self.cv.repeats == 0 {
            return Err("cv.k must be >= 2 and cv.repeats >= 1".into());
        }
        self.sapflow_config().validate().map_err(|e| e.to_string())?;
        self.synth_config(None).validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn needs_meteo(&self) -> bool {
        self.site.feature_sets.iter().any(|fs| fs.uses_meteo())
    }

    pub fn buffer_radius(&self) -> f64 {
        self.spectra.buffer_radius_m.unwrap_or(self.site.plot_radius_m)
    }

    pub fn sapflow_config(&self) -> SapflowConfig {
        SapflowConfig {
            window_days: self.sapflow.window_days,
            min_hours: self.sapflow.min_hours,
            min_days: self.sapflow.min_days,
            plot_radius: self.site.plot_radius_m,
            granier: GranierConstants {
                coefficient: self.granier.coefficient,
                exponent: self.granier.exponent,
            },
            allometry: Allometry {
                alpha: self.allometry.alpha,
                beta: self.allometry.beta,
            },
            coverage: self.sapflow.coverage,
        }
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.forest.n_trees,
            min_node_size: self.forest.min_node_size,
            bootstrap: self.forest.bootstrap,
            ..ForestConfig::default()
        }
    }

    pub fn cv_config(&self, seed: Option<u64>) -> CvConfig {
        CvConfig {
            k: self.cv.k,
            repeats: self.cv.repeats,
            mtry_grid: self.cv.mtry_grid.clone(),
            seed: seed.unwrap_or(self.cv.seed),
        }
    }

    pub fn synth_config(&self, seed: Option<u64>) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            seed: seed.unwrap_or(s.seed),
            site_id: self.site.id.clone(),
            n_trees: s.n_trees,
            n_uninstrumented: s.n_uninstrumented,
            n_weeks: s.n_weeks,
            start: s.start,
            cloud_fraction: s.cloud_fraction,
            noise_sd: s.noise_sd,
            intercept: s.intercept,
            planted_coefficients: s.planted_coefficients.clone(),
            plot_radius: self.site.plot_radius_m,
            revisit_days: s.revisit_days,
            allometry: Allometry {
                alpha: self.allometry.alpha,
                beta: self.allometry.beta,
            },
            granier: GranierConstants {
                coefficient: self.granier.coefficient,
                exponent: self.granier.exponent,
            },
        }
    }
}

impl Loaded {
    pub fn site_id(&self) -> &str {
        &self.config.site.id
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.dir.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.dir)
    }
}
