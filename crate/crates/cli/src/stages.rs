//! The pipeline stages. Each reads the previous stage's files from the
//! output directory, so stages can run one by one or chained.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use canopyflux::eval::{self, render_importance_table, render_metrics_table, scale_importance, Report, SiteResult};
use canopyflux::features::{features_file_name, join_weekly, read_features, to_matrix, write_features, FeatureSet};
use canopyflux::ingest::{
    buffer_average, qa_filter, read_meteo, read_s2, read_weekly_meteo, read_weekly_spectra, weekly_bands,
    weekly_meteo, write_weekly_meteo, write_weekly_spectra,
};
use canopyflux::sapflow::{read_inventory, read_sapflow, read_weekly_transpiration, upscale, write_weekly_transpiration};
use canopyflux::synth::{self, SynthOutput};
use canopyflux::Error;

use crate::config::Loaded;
use crate::error::{CliError, Stage, StageContext};
use crate::{manifest, plot};

pub const TRANSPIRATION_WEEKLY: &str = "transpiration_weekly.csv";
pub const SPECTRA_WEEKLY: &str = "spectra_weekly.csv";
pub const METEO_WEEKLY: &str = "meteo_weekly.csv";
pub const QA: &str = "qa.json";
pub const REPORT: &str = "report.json";

pub fn cv_file_name(site_id: &str, fs: FeatureSet) -> String {
    format!("cv_{site_id}_{}.json", fs.slug())
}

pub fn forest_file_name(site_id: &str, fs: FeatureSet) -> String {
    format!("forest_{site_id}_{}.json", fs.slug())
}

pub fn plot_file_name(site_id: &str) -> String {
    format!("transpiration_{site_id}.svg")
}

fn create_dir(dir: &Path, stage: Stage) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).stage(stage)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> canopyflux::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn config_ref(cfg: &Loaded) -> [(&str, &str); 1] {
    [(cfg.site_id(), cfg.sha256.as_str())]
}

fn input_label(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

/// Writes the four input files and `truth.json`. Defaults to the config's
/// directory, where the default `[inputs]` paths point.
pub fn synth(cfg: &Loaded, out_dir: Option<&Path>, seed: Option<u64>) -> Result<SynthOutput, CliError> {
    let stage = Stage::Synth;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.dir.clone());
    let sc = cfg.config.synth_config(seed);
    let out = synth::generate(&sc, &dir).stage(stage)?;
    log::info!("synth: {} weeks for site {} in {}", sc.n_weeks, sc.site_id, dir.display());
    let outputs = [&out.sapflow, &out.inventory, &out.s2_samples, &out.meteo, &out.truth_path].map(|p| p.to_path_buf());
    manifest::write(&dir, stage, &config_ref(cfg), &[], &outputs).stage(stage)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct IngestQa {
    site_id: String,
    sapflow: SapflowQa,
    spectra: SpectraQa,
    meteo: Option<MeteoQa>,
}

#[derive(Debug, Serialize)]
struct SapflowQa {
    readings: usize,
    invalid_readings: usize,
    clamped: usize,
    days: usize,
    days_observed: usize,
    weeks: usize,
    weeks_observed: usize,
}

#[derive(Debug, Serialize)]
struct SpectraQa {
    samples: usize,
    flagged: usize,
    acquisitions: usize,
    weeks: usize,
}

#[derive(Debug, Serialize)]
struct MeteoQa {
    days: usize,
    weeks: usize,
}

pub fn ingest(cfg: &Loaded, out: &Path) -> Result<(), CliError> {
    let stage = Stage::Ingest;
    let c = &cfg.config;
    create_dir(out, stage)?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();

    let sap_path = cfg.resolve(&c.inputs.sapflow);
    let inv_path = cfg.resolve(&c.inputs.inventory);
    let readings = read_sapflow(&sap_path).stage(stage)?;
    let inventory = read_inventory(&inv_path).stage(stage)?;
    let up = upscale(cfg.site_id(), &readings, &inventory, &c.sapflow_config()).stage(stage)?;
    let p = out.join(TRANSPIRATION_WEEKLY);
    write_weekly_transpiration(&p, &up.weekly).stage(stage)?;
    outputs.push(p);
    inputs.push((input_label(&c.inputs.sapflow), sap_path));
    inputs.push((input_label(&c.inputs.inventory), inv_path));

    let s2_path = cfg.resolve(&c.inputs.s2_samples);
    let samples = read_s2(&s2_path).stage(stage)?;
    let clear = qa_filter(&samples);
    let acquisitions = buffer_average(&clear, c.buffer_radius()).stage(stage)?;
    let spectra = weekly_bands(&acquisitions);
    let p = out.join(SPECTRA_WEEKLY);
    write_weekly_spectra(&p, &spectra).stage(stage)?;
    outputs.push(p);
    inputs.push((input_label(&c.inputs.s2_samples), s2_path));

    let meteo_qa = match (&c.inputs.meteo, c.needs_meteo()) {
        (Some(rel), true) => {
            let path = cfg.resolve(rel);
            let daily = read_meteo(&path).stage(stage)?;
            let weekly = weekly_meteo(&daily, c.meteo.require_complete_weeks).stage(stage)?;
            let p = out.join(METEO_WEEKLY);
            write_weekly_meteo(&p, &weekly).stage(stage)?;
            outputs.push(p);
            inputs.push((input_label(rel), path));
            Some(MeteoQa {
                days: daily.len(),
                weeks: weekly.len(),
            })
        }
        _ => None,
    };

    let qa = IngestQa {
        site_id: cfg.site_id().to_string(),
        sapflow: SapflowQa {
            readings: readings.len(),
            invalid_readings: up.qa.invalid_readings,
            clamped: up.qa.clamped,
            days: up.daily.values.len(),
            days_observed: up.daily.observed().count(),
            weeks: up.weekly.values.len(),
            weeks_observed: up.weekly.observed().count(),
        },
        spectra: SpectraQa {
            samples: samples.len(),
            flagged: samples.len() - clear.len(),
            acquisitions: acquisitions.len(),
            weeks: spectra.len(),
        },
        meteo: meteo_qa,
    };
    let p = out.join(QA);
    write_json(&p, &qa).stage(stage)?;
    outputs.push(p);
    log::info!(
        "ingest: {} of {} weeks with transpiration, {} spectral weeks",
        qa.sapflow.weeks_observed,
        qa.sapflow.weeks,
        qa.spectra.weeks
    );
    manifest::write(out, stage, &config_ref(cfg), &inputs, &outputs).stage(stage)?;
    Ok(())
}

pub fn features(cfg: &Loaded, out: &Path) -> Result<(), CliError> {
    let stage = Stage::Features;
    let c = &cfg.config;
    let mut inputs = Vec::new();
    let t_path = out.join(TRANSPIRATION_WEEKLY);
    let s_path = out.join(SPECTRA_WEEKLY);
    let transpiration = read_weekly_transpiration(&t_path).stage(stage)?;
    let spectra = read_weekly_spectra(&s_path).stage(stage)?;
    inputs.push((TRANSPIRATION_WEEKLY.to_string(), t_path));
    inputs.push((SPECTRA_WEEKLY.to_string(), s_path));
    let meteo = if c.needs_meteo() {
        let m_path = out.join(METEO_WEEKLY);
        let m = read_weekly_meteo(&m_path).stage(stage)?;
        inputs.push((METEO_WEEKLY.to_string(), m_path));
        Some(m)
    } else {
        None
    };

    let mut outputs = Vec::new();
    for &fs in &c.site.feature_sets {
        let table = join_weekly(&transpiration, &spectra, meteo.as_deref(), fs).stage(stage)?;
        let p = out.join(features_file_name(cfg.site_id(), fs));
        write_features(&p, &table).stage(stage)?;
        log::info!("features: {} weeks for {}", table.len(), fs);
        outputs.push(p);
    }
    manifest::write(out, stage, &config_ref(cfg), &inputs, &outputs).stage(stage)?;
    Ok(())
}

pub fn train(cfg: &Loaded, out: &Path, seed: Option<u64>) -> Result<Vec<SiteResult>, CliError> {
    let stage = Stage::Train;
    let c = &cfg.config;
    let forest_cfg = c.forest_config();
    let cv_cfg = c.cv_config(seed);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut results = Vec::new();
    for &fs in &c.site.feature_sets {
        let name = features_file_name(cfg.site_id(), fs);
        let path = out.join(&name);
        let table = read_features(&path, cfg.site_id()).stage(stage)?;
        inputs.push((name, path));
        let design = to_matrix(&table).stage(stage)?;
        let trained = eval::train(&design, &forest_cfg, &cv_cfg).stage(stage)?;
        let result = SiteResult {
            site_id: cfg.site_id().to_string(),
            feature_set: fs,
            importance: scale_importance(&trained.forest.raw_importance()),
            cv: trained.cv,
        };
        log::info!(
            "train: {} {}: best mtry {}, r2 {:?}",
            cfg.site_id(),
            fs,
            result.cv.best_mtry,
            result.cv.metrics.r2_mean
        );
        let p = out.join(cv_file_name(cfg.site_id(), fs));
        write_json(&p, &result).stage(stage)?;
        outputs.push(p);
        let p = out.join(forest_file_name(cfg.site_id(), fs));
        trained.forest.save(&p).stage(stage)?;
        outputs.push(p);
        results.push(result);
    }
    let p = out.join(REPORT);
    Report::from_results(&results).stage(stage)?.write(&p).stage(stage)?;
    outputs.push(p);
    manifest::write(out, stage, &config_ref(cfg), &inputs, &outputs).stage(stage)?;
    Ok(results)
}

/// Merge the cross-validation results of one or more sites into
/// `report.json` and print the two tables.
pub fn report(
    cfgs: &[(Loaded, PathBuf)],
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<Report, CliError> {
    let stage = Stage::Report;
    create_dir(out, stage)?;
    let mut inputs = Vec::new();
    let mut results = Vec::new();
    for (cfg, dir) in cfgs {
        for &fs in &cfg.config.site.feature_sets {
            let name = cv_file_name(cfg.site_id(), fs);
            let path = dir.join(&name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e)).stage(stage)?;
            let result: SiteResult = serde_json::from_str(&text)
                .map_err(|e| Error::row(&path, e.line() as u64, e.to_string()))
                .stage(stage)?;
            results.push(result);
            inputs.push((name, path));
        }
    }
    let report = Report::from_results(&results).stage(stage)?;
    let p = out.join(REPORT);
    report.write(&p).stage(stage)?;
    let tables = format!("{}\n{}", render_metrics_table(&report), render_importance_table(&report));
    stdout
        .write_all(tables.as_bytes())
        .map_err(|e| CliError::Internal(format!("writing tables: {e}")))?;
    let configs: Vec<(&str, &str)> = cfgs.iter().map(|(c, _)| (c.site_id(), c.sha256.as_str())).collect();
    manifest::write(out, stage, &configs, &inputs, &[p]).stage(stage)?;
    Ok(report)
}

pub fn plot(cfg: &Loaded, out: &Path) -> Result<PathBuf, CliError> {
    let stage = Stage::Plot;
    let t_path = out.join(TRANSPIRATION_WEEKLY);
    let mut series = read_weekly_transpiration(&t_path).stage(stage)?;
    series.site_id = cfg.site_id().to_string();
    let svg = plot::render_svg(&series).stage(stage)?;
    let p = out.join(plot_file_name(cfg.site_id()));
    std::fs::write(&p, svg).map_err(|e| Error::io(&p, e)).stage(stage)?;
    manifest::write(
        out,
        stage,
        &config_ref(cfg),
        &[(TRANSPIRATION_WEEKLY.to_string(), t_path)],
        &[p.clone()],
    )
    .stage(stage)?;
    Ok(p)
}

pub fn pipeline(cfg: &Loaded, out: &Path, seed: Option<u64>, stdout: &mut dyn Write) -> Result<(), CliError> {
    ingest(cfg, out)?;
    features(cfg, out)?;
    train(cfg, out, seed)?;
    report(&[(cfg.clone(), out.to_path_buf())], out, stdout)?;
    plot(cfg, out)?;
    Ok(())
}
