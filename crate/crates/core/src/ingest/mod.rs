//! Sentinel-2 L2A pixel samples and station meteorology, aggregated to ISO
//! weeks.

mod meteo;
mod spectra;

pub use meteo::{
    parse_meteo, read_meteo, read_weekly_meteo, weekly_meteo, write_weekly_meteo, MeteoDaily,
    WeeklyMeteo, METEO_HEADER, WEEKLY_METEO_HEADER,
};
pub use spectra::{
    buffer_average, parse_s2, qa_filter, read_s2, read_weekly_spectra, weekly_bands,
    write_weekly_spectra, AcquisitionMean, Band, SpectralSample, WeeklySpectra, REFLECTANCE_SCALE,
    S2_HEADER, WEEKLY_SPECTRA_HEADER,
};
