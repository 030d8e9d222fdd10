//! Regulation-signal analytics.
//!
//! Fits the two signal models that feed the chance constraints on
//! instantaneous power (a direct Gaussian and a conservative Gaussian
//! envelope whose upper-tail quantiles dominate the data), and tabulates
//! empirical VaR bounds of the cumulative signal over sub-horizons.

mod quantile;
pub mod synth;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use quantile::{empirical_quantile, inverse_normal_cdf, normal_cdf};

/// Minimum number of windows a cumulative-signal sample must contain.
pub const MIN_WINDOWS: usize = 30;

/// Default envelope fitting levels.
pub const DEFAULT_QUANTILE_GRID: [f64; 7] = [0.80, 0.85, 0.90, 0.925, 0.95, 0.975, 0.99];

/// Regulation signal samples `s_k ∈ [-1, 1]` at a fixed interval `dt` (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulationTrace {
    pub samples: Vec<f64>,
    pub dt: f64,
    /// Epoch seconds of the first sample.
    #[serde(default)]
    pub start: f64,
}

impl RegulationTrace {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        let trace = Self { samples, dt, start: 0.0 };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("trace dt must be > 0, got {}", self.dt)));
        }
        if self.samples.len() < 2 {
            return Err(Error::Invalid("trace needs at least 2 samples".into()));
        }
        if let Some((k, s)) = self.samples.iter().enumerate().find(|(_, s)| !(s.abs() <= 1.0)) {
            return Err(Error::Invalid(format!("sample {k} = {s} outside [-1, 1]")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_hours(&self) -> f64 {
        self.samples.len() as f64 * self.dt / 3600.0
    }

    /// Samples per `hours`, rounded to the nearest whole sample.
    pub fn samples_per(&self, hours: f64) -> usize {
        (hours * 3600.0 / self.dt).round() as usize
    }

    /// Splits into a fitting head (`fraction` of samples) and a held-out tail.
    pub fn split(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Domain(format!("split fraction {fraction} outside (0, 1)")));
        }
        let cut = (self.samples.len() as f64 * fraction).round() as usize;
        let head = Self { samples: self.samples[..cut].to_vec(), dt: self.dt, start: self.start };
        let tail = Self {
            samples: self.samples[cut..].to_vec(),
            dt: self.dt,
            start: self.start + cut as f64 * self.dt,
        };
        head.validate()?;
        tail.validate()?;
        Ok((head, tail))
    }

    pub fn mean_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.abs()).sum::<f64>() / self.samples.len() as f64
    }

    /// Reads `timestamp,s` rows; timestamps are epoch seconds or RFC 3339.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row_no, rec) in rdr.records().enumerate() {
            let line = row_no + 2;
            let rec = rec.map_err(|e| Error::Parse { line, detail: e.to_string() })?;
            if rec.len() != 2 {
                return Err(Error::Parse { line, detail: format!("expected 2 fields, got {}", rec.len()) });
            }
            let ts = parse_timestamp(rec[0].trim()).ok_or_else(|| Error::Parse {
                line,
                detail: format!("bad timestamp {:?}", &rec[0]),
            })?;
            let s: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, detail: format!("bad signal value {:?}", &rec[1]) })?;
            if !(s.abs() <= 1.0) {
                return Err(Error::Parse { line, detail: format!("signal {s} outside [-1, 1]") });
            }
            times.push(ts);
            samples.push(s);
        }
        if times.len() < 2 {
            return Err(Error::Invalid("trace needs at least 2 samples".into()));
        }
        let dt = times[1] - times[0];
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs().max(1.0) {
                return Err(Error::Parse { line: k + 3, detail: "non-uniform sampling interval".into() });
            }
        }
        let trace = Self { samples, dt, start: times[0] };
        trace.validate()?;
        Ok(trace)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["timestamp", "s"])?;
        for (k, s) in self.samples.iter().enumerate() {
            let ts = self.start + k as f64 * self.dt;
            wtr.write_record([format!("{ts}"), format!("{s}")])?;
        }
        wtr.flush().map_err(|e| Error::io("signal.csv", e))?;
        Ok(())
    }
}

fn parse_timestamp(raw: &str) -> Option<f64> {
    if let Ok(v) = raw.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp_micros() as f64 / 1e6);
    }
    chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|dt| dt.and_utc().timestamp_micros() as f64 / 1e6)
}

/// Cumulative signal `Σ_k s_k·Δk` (signal-hours) over windows of
/// `window_hours`, advancing `stride_hours` between window starts
/// (`None` → non-overlapping).
pub fn cumulative_windows(
    trace: &RegulationTrace,
    window_hours: f64,
    stride_hours: Option<f64>,
) -> Result<Vec<f64>> {
    trace.validate()?;
    let width = trace.samples_per(window_hours);
    if width == 0 || window_hours * 3600.0 < trace.dt * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "window {window_hours} h shorter than sampling interval {} s",
            trace.dt
        )));
    }
    let stride = match stride_hours {
        Some(h) => trace.samples_per(h).max(1),
        None => width,
    };
    let needed = width + stride * (MIN_WINDOWS - 1);
    if trace.len() < needed {
        return Err(Error::Invalid(format!(
            "trace too short: {} samples, need at least {needed} for {MIN_WINDOWS} windows of {window_hours} h",
            trace.len()
        )));
    }
    let scale = trace.dt / 3600.0;
    // prefix sums keep each window O(1)
    let mut prefix = Vec::with_capacity(trace.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for s in &trace.samples {
        acc += s;
        prefix.push(acc);
    }
    Ok((0..)
        .map(|w| w * stride)
        .take_while(|start| start + width <= trace.len())
        .map(|start| (prefix[start + width] - prefix[start]) * scale)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarEntry {
    pub horizon_hours: f64,
    pub s_low: f64,
    pub s_high: f64,
    pub n_windows: usize,
}

/// Empirical `VaR_ε` / `VaR_{1-ε}` of the cumulative signal per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaRTable {
    pub eps_e: f64,
    pub entries: Vec<VarEntry>,
}

impl VaRTable {
    pub fn get(&self, horizon_hours: f64) -> Option<&VarEntry> {
        self.entries.iter().find(|e| (e.horizon_hours - horizon_hours).abs() < 1e-9)
    }
}

pub fn build_var_table(
    trace: &RegulationTrace,
    horizons_hours: &[f64],
    eps_e: f64,
    stride_hours: Option<f64>,
) -> Result<VaRTable> {
    if !(eps_e > 0.0 && eps_e <= 0.5) {
        return Err(Error::Domain(format!("eps_e = {eps_e} outside (0, 0.5]")));
    }
    let entries = horizons_hours
        .iter()
        .map(|&h| {
            let sums = cumulative_windows(trace, h, stride_hours)?;
            Ok(VarEntry {
                horizon_hours: h,
                s_low: empirical_quantile(&sums, eps_e)?,
                s_high: empirical_quantile(&sums, 1.0 - eps_e)?,
                n_windows: sums.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VaRTable { eps_e, entries })
}

/// Gaussian model `N(mu, sigma²)` of the instantaneous signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnvelope {
    pub mu: f64,
    pub sigma: f64,
    /// `(level, mu + Φ⁻¹(level)·sigma − empirical quantile)` per fitted level.
    #[serde(default)]
    pub margins: Vec<(f64, f64)>,
    #[serde(default)]
    pub degenerate: bool,
}

impl GaussianEnvelope {
    /// Upper-tail quantile `mu + Φ⁻¹(level)·sigma`.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        Ok(self.mu + inverse_normal_cdf(level)? * self.sigma)
    }
}

fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    // a constant trace must come out exactly degenerate, not σ ≈ 1e-13
    if samples.iter().all(|s| *s == samples[0]) {
        return (samples[0], 0.0);
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (n - 1.0);
    (mu, var.max(0.0).sqrt())
}

/// Sample mean and sample (n−1) standard deviation.
pub fn fit_direct_gaussian(trace: &RegulationTrace) -> Result<GaussianEnvelope> {
    trace.validate()?;
    let (mu, sigma) = mean_and_std(&trace.samples);
    Ok(GaussianEnvelope { mu, sigma, margins: Vec::new(), degenerate: sigma == 0.0 })
}

/// Smallest `sigma` (at the sample mean) whose quantile function dominates
/// the empirical one at every level of `grid`.
pub fn fit_gaussian_envelope(
    trace: &RegulationTrace,
    grid: &[f64],
    eps_min: f64,
) -> Result<GaussianEnvelope> {
    trace.validate()?;
    if grid.is_empty() {
        return Err(Error::Domain("empty quantile grid".into()));
    }
    if let Some(q) = grid.iter().find(|&&q| !(q > 0.5 && q <= 1.0 - eps_min)) {
        return Err(Error::Domain(format!("grid level {q} outside (0.5, {}]", 1.0 - eps_min)));
    }
    let mut sorted = trace.samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mu = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let empirical: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&q| Ok((q, quantile::sorted_quantile(&sorted, q), inverse_normal_cdf(q)?)))
        .collect::<Result<_>>()?;
    let degenerate = sorted.first() == sorted.last();
    let sigma = if degenerate {
        log::warn!("degenerate regulation trace (all samples equal); envelope sigma = 0");
        0.0
    } else {
        empirical.iter().map(|(_, eq, z)| (eq - mu) / z).fold(0.0, f64::max)
    };
    let margins = empirical.iter().map(|(q, eq, z)| (*q, mu + z * sigma - eq)).collect();
    Ok(GaussianEnvelope { mu, sigma, margins, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::synth::{generate, SignalKind};
    use approx::assert_abs_diff_eq;

    fn constant(v: f64, n: usize) -> RegulationTrace {
        RegulationTrace::new(vec![v; n], 2.0).unwrap()
    }

    #[test]
    fn cumulative_window_examples() {
        let t = constant(1.0, 1800 * 40);
        let w = cumulative_windows(&t, 1.0, None).unwrap();
        assert_eq!(w.len(), 40);
        for v in &w {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let z = constant(0.0, 1800 * 30);
        assert!(cumulative_windows(&z, 1.0, None).unwrap().iter().all(|v| *v == 0.0));
        let alt: Vec<f64> = (0..900 * 31).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let alt = RegulationTrace::new(alt, 2.0).unwrap();
        for v in cumulative_windows(&alt, 0.5, None).unwrap() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulative_windows_too_short() {
        let t = constant(0.5, 1800 * 29);
        match cumulative_windows(&t, 1.0, None) {
            Err(Error::Invalid(msg)) => assert!(msg.contains("need at least 54000"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(cumulative_windows(&t, 0.0001, None).is_err());
    }

    #[test]
    fn overlapping_stride_yields_more_windows() {
        let t = constant(0.2, 1800 * 40);
        let a = cumulative_windows(&t, 1.0, None).unwrap();
        let b = cumulative_windows(&t, 1.0, Some(0.25)).unwrap();
        assert!(b.len() > a.len());
    }

    #[test]
    fn var_table_examples() {
        let t = constant(1.0, 1800 * 40);
        let table = build_var_table(&t, &[0.25, 1.0], 0.05, None).unwrap();
        assert_abs_diff_eq!(table.entries[0].s_low, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(table.entries[1].s_high, 1.0, epsilon = 1e-12);

        let g = generate(SignalKind::Gaussian, 200_000, 2.0, 9);
        let half = build_var_table(&g, &[0.5], 0.5, None).unwrap();
        assert_eq!(half.entries[0].s_low, half.entries[0].s_high);
        let sums = cumulative_windows(&g, 0.5, None).unwrap();
        assert_abs_diff_eq!(half.entries[0].s_low, empirical_quantile(&sums, 0.5).unwrap());
    }

    #[test]
    fn symmetric_signal_gives_symmetric_var() {
        // sign-flipped copy appended: the window sample set is exactly symmetric
        let g = generate(SignalKind::Gaussian, 90_000, 2.0, 4);
        let mut s = g.samples.clone();
        s.extend(g.samples.iter().map(|v| -v));
        let sym = RegulationTrace::new(s, 2.0).unwrap();
        let table = build_var_table(&sym, &[0.25], 0.1, None).unwrap();
        let e = &table.entries[0];
        assert!((e.s_low + e.s_high).abs() <= 0.05 * e.s_high.abs().max(1e-3), "{e:?}");
    }

    #[test]
    fn var_coverage_invariant() {
        let g = generate(SignalKind::HeavyTailed, 300_000, 2.0, 11);
        for eps in [0.05, 0.1, 0.2] {
            let table = build_var_table(&g, &[0.25, 0.5, 1.0], eps, None).unwrap();
            for e in &table.entries {
                assert!(e.s_low <= e.s_high);
                let sums = cumulative_windows(&g, e.horizon_hours, None).unwrap();
                let n = sums.len() as f64;
                let below = sums.iter().filter(|v| **v <= e.s_high).count() as f64 / n;
                let above = sums.iter().filter(|v| **v >= e.s_low).count() as f64 / n;
                assert!(below >= 1.0 - eps - 1.0 / n);
                assert!(above >= 1.0 - eps - 1.0 / n);
                assert!(sums.iter().all(|v| v.abs() <= e.horizon_hours + 1e-12));
            }
        }
    }

    #[test]
    fn direct_gaussian_examples() {
        let g = fit_direct_gaussian(&constant(0.5, 10)).unwrap();
        assert_eq!((g.mu, g.sigma), (0.5, 0.0));
        let two = RegulationTrace::new(vec![-1.0, 1.0], 2.0).unwrap();
        let g = fit_direct_gaussian(&two).unwrap();
        assert_abs_diff_eq!(g.mu, 0.0);
        assert_abs_diff_eq!(g.sigma, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn direct_gaussian_recovers_generator_moments() {
        let n = 40_000;
        let t = synth::iid_normal(n, 0.3, 2.0, 5);
        let g = fit_direct_gaussian(&t).unwrap();
        let tol = 3.0 / (n as f64).sqrt();
        assert!(g.mu.abs() <= tol * 0.3 * 3.0);
        assert!((g.sigma / 0.3 - 1.0).abs() <= tol * 3.0);
    }

    #[test]
    fn envelope_of_gaussian_is_itself() {
        // quantile-matched standard normal data, scaled into [-1, 1]
        let n = 20_001;
        let scale = 0.2;
        let samples: Vec<f64> = (1..=n)
            .map(|k| scale * inverse_normal_cdf(k as f64 / (n as f64 + 1.0)).unwrap())
            .collect();
        let t = RegulationTrace::new(samples, 2.0).unwrap();
        let env = fit_gaussian_envelope(&t, &DEFAULT_QUANTILE_GRID, 0.01).unwrap();
        assert_abs_diff_eq!(env.mu, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(env.sigma / scale, 1.0, epsilon = 2e-3);
    }

    #[test]
    fn envelope_degenerate() {
        let env = fit_gaussian_envelope(&constant(0.3, 100), &DEFAULT_QUANTILE_GRID, 0.01).unwrap();
        assert_abs_diff_eq!(env.mu, 0.3, epsilon = 1e-15);
        assert_eq!(env.sigma, 0.0);
        assert!(env.degenerate);
    }

    #[test]
    fn envelope_grid_validation() {
        let t = constant(0.1, 10);
        assert!(fit_gaussian_envelope(&t, &[], 0.01).is_err());
        assert!(fit_gaussian_envelope(&t, &[0.4], 0.01).is_err());
        assert!(fit_gaussian_envelope(&t, &[0.995], 0.01).is_err());
    }

    #[test]
    fn envelope_exceeds_direct_on_heavy_tails() {
        let t = synth::student_t(100_000, 3.0, 0.1, 2.0, 21);
        let env = fit_gaussian_envelope(&t, &DEFAULT_QUANTILE_GRID, 0.01).unwrap();
        let direct = fit_direct_gaussian(&t).unwrap();
        assert!(env.sigma > direct.sigma, "env {} direct {}", env.sigma, direct.sigma);
        let bursty = generate(SignalKind::HeavyTailed, 200_000, 2.0, 3);
        let env = fit_gaussian_envelope(&bursty, &DEFAULT_QUANTILE_GRID, 0.01).unwrap();
        let direct = fit_direct_gaussian(&bursty).unwrap();
        assert!(env.sigma > direct.sigma);
    }

    #[test]
    fn trace_csv_round_trip_and_timestamps() {
        let mut t = generate(SignalKind::Sinusoid, 50, 2.0, 1);
        t.start = 1_700_000_000.0;
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(RegulationTrace::read_csv(buf.as_slice()).unwrap(), t);

        let iso = "timestamp,s\n2018-07-01T00:00:00Z,0.1\n2018-07-01T00:00:02Z,-0.2\n2018-07-01T00:00:04Z,0.3\n";
        let t = RegulationTrace::read_csv(iso.as_bytes()).unwrap();
        assert_abs_diff_eq!(t.dt, 2.0);
        let bad = "timestamp,s\n0,0.1\n2,1.5\n";
        assert!(matches!(RegulationTrace::read_csv(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn envelope_dominates_grid(seed in 0u64..500, kind in 0usize..4) {
                let kinds = [SignalKind::Gaussian, SignalKind::ClippedGaussian, SignalKind::HeavyTailed, SignalKind::Sinusoid];
                let t = generate(kinds[kind], 5_000, 2.0, seed);
                let env = fit_gaussian_envelope(&t, &DEFAULT_QUANTILE_GRID, 0.01).unwrap();
                for &q in &DEFAULT_QUANTILE_GRID {
                    let eq = empirical_quantile(&t.samples, q).unwrap();
                    prop_assert!(env.quantile(q).unwrap() - eq >= -1e-9);
                }
                for (_, m) in &env.margins {
                    prop_assert!(*m >= -1e-9);
                }
            }

            #[test]
            fn cumulative_windows_bounded(seed in 0u64..200, hours in 0.05f64..0.5) {
                let t = generate(SignalKind::ClippedGaussian, 40_000, 2.0, seed);
                for v in cumulative_windows(&t, hours, None).unwrap() {
                    prop_assert!(v.abs() <= hours + 2.0 / 3600.0);
                }
            }
        }
    }
}
