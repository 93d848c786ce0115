//! Repeated k-fold cross-validation, metrics, importance scaling and the
//! report tables.

mod cv;
mod importance;
mod metrics;
mod report;

pub use cv::{
    evaluate_resamples, final_model_seed, kfold_split, repeat_folds, repeated_cv, resample_seed,
    select_best, train, CvConfig, CvResult, MetricSet, MtryResult, Resample, Trained,
};
pub use importance::{scale_importance, ImportanceEntry, ImportanceTable};
pub use metrics::{metrics, Metrics};
pub use report::{
    format_cell, render_importance_table, render_metrics_table, Report, ReportEntry, SiteResult,
    REPORT_SCHEMA,
};
