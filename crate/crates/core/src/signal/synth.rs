//! Seeded synthetic regulation-signal generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use super::RegulationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// AR(1) Gaussian, σ = 0.3, clipped to [-1, 1] (rarely active).
    Gaussian,
    /// AR(1) Gaussian, σ = 0.6, heavily clipped.
    ClippedGaussian,
    /// Gaussian core with saturating ± excursions: leptokurtic, with upper
    /// quantiles well beyond a moment-matched Gaussian.
    HeavyTailed,
    /// Slow sinusoid plus AR(1) noise.
    Sinusoid,
}

impl std::str::FromStr for SignalKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "clipped_gaussian" | "clipped-gaussian" => Ok(Self::ClippedGaussian),
            "heavy_tailed" | "heavy-tailed" => Ok(Self::HeavyTailed),
            "sinusoid" => Ok(Self::Sinusoid),
            other => Err(format!("unknown signal kind {other:?}")),
        }
    }
}

const AR_PHI: f64 = 0.97;

struct Ar1 {
    phi: f64,
    innov: Normal<f64>,
    state: f64,
}

impl Ar1 {
    fn new(sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let innov = Normal::new(0.0, sigma * (1.0 - AR_PHI * AR_PHI).sqrt()).expect("finite sigma");
        let state = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
        Self { phi: AR_PHI, innov, state }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.state = self.phi * self.state + self.innov.sample(rng);
        self.state
    }
}

pub fn generate(kind: SignalKind, n: usize, dt: f64, seed: u64) -> RegulationTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = match kind {
        SignalKind::Gaussian | SignalKind::ClippedGaussian => {
            let sigma = if kind == SignalKind::Gaussian { 0.3 } else { 0.6 };
            let mut ar = Ar1::new(sigma, &mut rng);
            (0..n).map(|_| ar.next(&mut rng).clamp(-1.0, 1.0)).collect()
        }
        SignalKind::HeavyTailed => {
            // two-state regime: mean burst length 60 samples, ~20% of time in bursts
            let mut core = Ar1::new(0.15, &mut rng);
            let p_exit = 1.0 / 60.0;
            let p_enter = 0.25 * p_exit;
            let jitter = Normal::new(0.0, 0.02).expect("finite");
            let mut level: Option<f64> = None;
            (0..n)
                .map(|_| {
                    let base = core.next(&mut rng);
                    level = match level {
                        Some(_) if rng.random::<f64>() < p_exit => None,
                        None if rng.random::<f64>() < p_enter => {
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            Some(sign * rng.random_range(0.85..1.0))
                        }
                        keep => keep,
                    };
                    match level {
                        Some(b) => (b + jitter.sample(&mut rng)).clamp(-1.0, 1.0),
                        None => base.clamp(-1.0, 1.0),
                    }
                })
                .collect()
        }
        SignalKind::Sinusoid => {
            let mut ar = Ar1::new(0.15, &mut rng);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let period = 600.0;
            (0..n)
                .map(|k| {
                    let wave = 0.5 * (std::f64::consts::TAU * k as f64 * dt / period + phase).sin();
                    (wave + ar.next(&mut rng)).clamp(-1.0, 1.0)
                })
                .collect()
        }
    };
    RegulationTrace { samples, dt, start: 0.0 }
}

/// Independent `N(0, sigma²)` samples clipped to [-1, 1].
pub fn iid_normal(n: usize, sigma: f64, dt: f64, seed: u64) -> RegulationTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).expect("finite sigma");
    let samples = (0..n).map(|_| d.sample(&mut rng).clamp(-1.0, 1.0)).collect();
    RegulationTrace { samples, dt, start: 0.0 }
}

/// Scaled Student-t samples clipped to [-1, 1].
pub fn student_t(n: usize, dof: f64, scale: f64, dt: f64, seed: u64) -> RegulationTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = StudentT::new(dof).expect("dof > 0");
    let samples = (0..n).map(|_| (scale * d.sample(&mut rng)).clamp(-1.0, 1.0)).collect();
    RegulationTrace { samples, dt, start: 0.0 }
}
