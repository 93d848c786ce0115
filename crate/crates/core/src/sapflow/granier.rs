use std::collections::VecDeque;

use chrono::Duration;

use super::{FluxQa, GranierConstants, SapFluxSeries, SapflowConfig, ThermalReading};
use crate::{Error, Result};

/// Zero-flow baseline: for every reading, the maximum ΔT over the trailing
/// window `[t - window_days, t]` (both ends inclusive).
pub fn compute_delta_t_max(readings: &[ThermalReading], window_days: u32) -> Result<Vec<f64>> {
    if readings.is_empty() {
        return Err(Error::EmptyInput("ΔT series".into()));
    }
    if window_days == 0 {
        return Err(Error::Config("window_days must be >= 1".into()));
    }
    for pair in readings.windows(2) {
        if pair[1].timestamp <= pair[0].timestamp {
            return Err(Error::MalformedSeries {
                id: pair[1].tree_id.clone(),
                reason: format!(
                    "timestamp {} does not follow {}",
                    pair[1].timestamp, pair[0].timestamp
                ),
            });
        }
    }

    let window = Duration::days(i64::from(window_days));
    // Monotone deque of indices with strictly decreasing ΔT.
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::with_capacity(readings.len());
    for (i, r) in readings.iter().enumerate() {
        while deque.back().is_some_and(|&j| readings[j].delta_t <= r.delta_t) {
            deque.pop_back();
        }
        deque.push_back(i);
        let start = r.timestamp - window;
        while deque.front().is_some_and(|&j| readings[j].timestamp < start) {
            deque.pop_front();
        }
        out.push(readings[deque[0]].delta_t);
    }
    Ok(out)
}

/// Flux density and whether the flow index had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDensity {
    /// m³·m⁻²·s⁻¹
    pub value: f64,
    pub clamped: bool,
}

/// `Fd = coefficient · K^exponent` with flow index `K = (ΔT_max − ΔT) / ΔT`.
///
/// A baseline below ΔT (sensor noise) yields `K = 0` with `clamped` set.
pub fn granier_flux(delta_t: f64, delta_t_max: f64, constants: GranierConstants) -> Result<FluxDensity> {
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(Error::InvalidReading(format!("ΔT = {delta_t} °C (must be > 0)")));
    }
    if !delta_t_max.is_finite() {
        return Err(Error::InvalidReading(format!("ΔT_max = {delta_t_max} °C")));
    }
    if delta_t_max < delta_t {
        return Ok(FluxDensity {
            value: 0.0,
            clamped: true,
        });
    }
    let k = (delta_t_max - delta_t) / delta_t;
    let value = if k == 0.0 {
        0.0
    } else {
        constants.coefficient * k.powf(constants.exponent)
    };
    Ok(FluxDensity {
        value,
        clamped: false,
    })
}

/// Convert one tree's readings to a flux-density series. Readings with
/// ΔT ≤ 0 are dropped (and counted) before the baseline is computed.
pub fn flux_series(
    tree_id: &str,
    readings: &[ThermalReading],
    config: &SapflowConfig,
) -> Result<(SapFluxSeries, FluxQa)> {
    let valid: Vec<ThermalReading> = readings
        .iter()
        .filter(|r| r.delta_t > 0.0 && r.delta_t.is_finite())
        .cloned()
        .collect();
    let mut qa = FluxQa {
        invalid_readings: readings.len() - valid.len(),
        clamped: 0,
    };
    if valid.is_empty() {
        return Err(Error::EmptyInput(format!("no valid ΔT readings for tree `{tree_id}`")));
    }

    let baseline = compute_delta_t_max(&valid, config.window_days)?;
    let mut samples = Vec::with_capacity(valid.len());
    for (r, &max) in valid.iter().zip(&baseline) {
        let fd = granier_flux(r.delta_t, max, config.granier)?;
        if fd.clamped {
            qa.clamped += 1;
        }
        samples.push((r.timestamp, fd.value));
    }
    Ok((
        SapFluxSeries {
            tree_id: tree_id.to_string(),
            samples,
        },
        qa,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use rand::{Rng, SeedableRng};

    fn hourly(values: &[f64]) -> Vec<ThermalReading> {
        let t0 = Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| ThermalReading {
                tree_id: "t1".into(),
                timestamp: t0 + Duration::hours(i as i64),
                delta_t: v,
            })
            .collect()
    }

    /// O(n·w) scan: every earlier reading within the window.
    fn naive_max(readings: &[ThermalReading], window_days: u32) -> Vec<f64> {
        let w = Duration::days(i64::from(window_days));
        readings
            .iter()
            .map(|r| {
                readings
                    .iter()
                    .filter(|q| q.timestamp <= r.timestamp && q.timestamp >= r.timestamp - w)
                    .map(|q| q.delta_t)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn constant_series_baseline() {
        let r = hourly(&[10.0; 48]);
        assert!(compute_delta_t_max(&r, 10).unwrap().iter().all(|&m| m == 10.0));
    }

    #[test]
    fn max_of_window() {
        let r = hourly(&[8.0, 9.0, 10.0]);
        assert_eq!(compute_delta_t_max(&r, 1).unwrap()[2], 10.0);
    }

    #[test]
    fn matches_naive_scan_on_seeded_series() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..30 * 24).map(|_| rng.random_range(4.0..12.0)).collect();
        let mut r = hourly(&values);
        // irregular spacing: drop some hours
        r.retain(|x| x.timestamp.timestamp() % 7 != 3);
        assert_eq!(compute_delta_t_max(&r, 10).unwrap(), naive_max(&r, 10));
        assert_eq!(compute_delta_t_max(&r, 1).unwrap(), naive_max(&r, 1));
    }

    #[test]
    fn rejects_empty_and_non_monotone() {
        assert!(matches!(compute_delta_t_max(&[], 10), Err(Error::EmptyInput(_))));
        let mut r = hourly(&[5.0, 6.0, 7.0]);
        r.swap(1, 2);
        assert!(matches!(
            compute_delta_t_max(&r, 10),
            Err(Error::MalformedSeries { .. })
        ));
        let mut dup = hourly(&[5.0, 6.0]);
        dup[1].timestamp = dup[0].timestamp;
        assert!(compute_delta_t_max(&dup, 10).is_err());
    }

    #[test]
    fn granier_reference_points() {
        let c = GranierConstants::default();
        assert_eq!(granier_flux(8.0, 8.0, c).unwrap().value, 0.0);
        assert_eq!(granier_flux(5.0, 10.0, c).unwrap().value, 118.99e-6);
        // (0.25)^1.231 evaluated independently: exp(1.231 · ln 0.25)
        let expected = 118.99e-6 * (1.231f64 * 0.25f64.ln()).exp();
        let got = granier_flux(8.0, 10.0, c).unwrap().value;
        assert!(((got - expected) / expected).abs() < 1e-12);
        // 30-digit evaluation of the closed form
        let frozen = 2.159_606_446_572_054_9e-5;
        assert!(((got - frozen) / frozen).abs() < 1e-9);
    }

    #[test]
    fn granier_errors_and_clamp() {
        let c = GranierConstants::default();
        assert!(matches!(granier_flux(0.0, 10.0, c), Err(Error::InvalidReading(_))));
        assert!(matches!(granier_flux(-1.0, 10.0, c), Err(Error::InvalidReading(_))));
        let fd = granier_flux(11.0, 10.0, c).unwrap();
        assert_eq!(fd.value, 0.0);
        assert!(fd.clamped);
    }

    #[test]
    fn granier_strictly_decreasing_in_delta_t() {
        let c = GranierConstants::default();
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.05).collect();
        let flux: Vec<f64> = grid.iter().map(|&dt| granier_flux(dt, 10.0, c).unwrap().value).collect();
        assert!(flux.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*flux.last().unwrap(), 0.0);
        assert!(flux.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn flux_series_drops_invalid_readings() {
        let cfg = SapflowConfig::new(super::super::Allometry::PICEA_ABIES_EXAMPLE);
        let r = hourly(&[10.0, -0.5, 8.0, 0.0, 9.0]);
        let (series, qa) = flux_series("t1", &r, &cfg).unwrap();
        assert_eq!(series.samples.len(), 3);
        assert_eq!(qa.invalid_readings, 2);
        assert_eq!(qa.clamped, 0);
        assert_eq!(series.samples[0].1, 0.0);
        assert!(series.samples[1].1 > 0.0);
    }
}
