//! Model configuration, queue parameters and fitted signal coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    build_var_table, fit_direct_gaussian, fit_gaussian_envelope, inverse_normal_cdf, GaussianEnvelope,
    RegulationTrace, VaRTable, DEFAULT_QUANTILE_GRID,
};
use crate::workload::{DataCenterSpec, JobCluster, ScheduleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftingMode {
    None,
    Spatial,
    Temporal,
    Joint,
}

impl ShiftingMode {
    pub const ALL: [ShiftingMode; 4] = [Self::None, Self::Spatial, Self::Temporal, Self::Joint];

    pub fn allows_spatial(self) -> bool {
        matches!(self, Self::Spatial | Self::Joint)
    }

    pub fn allows_temporal(self) -> bool {
        matches!(self, Self::Temporal | Self::Joint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Decoupled,
    Independent,
    Cooperative,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Self::Decoupled, Self::Independent, Self::Cooperative];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    DirectGaussian,
    Envelope,
}

macro_rules! impl_enum_text {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),+ })
            }
        }
        impl std::str::FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.replace('-', "_").as_str() {
                    $($text => Ok(Self::$variant),)+
                    other => Err(Error::Invalid(format!("unknown {} {other:?}", stringify!($ty)))),
                }
            }
        }
    };
}

impl_enum_text!(ShiftingMode { None => "none", Spatial => "spatial", Temporal => "temporal", Joint => "joint" });
impl_enum_text!(Strategy { Decoupled => "decoupled", Independent => "independent", Cooperative => "cooperative" });
impl_enum_text!(SignalModel { DirectGaussian => "direct_gaussian", Envelope => "envelope" });

/// Regulation market prices for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegPrice {
    /// Capacity price, $/MW per hour.
    pub c_rc: f64,
    /// Performance price, $/MW per hour, scaled by the mileage factor.
    pub c_rp: f64,
    /// Mileage / performance factor; defaults to the fitted mean |s|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub shifting_mode: ShiftingMode,
    pub strategy: Strategy,
    pub signal_model: SignalModel,
    pub eps_p: f64,
    pub eps_e: f64,
    pub delta_qos: f64,
    /// Load-shedding penalty, $/MWh.
    pub c_penal: f64,
    /// One entry per slot, or a single entry applied to every slot.
    pub reg_prices: Vec<RegPrice>,
    pub slot_hours: f64,
    /// Sub-slot horizons (hours) at which queue VaR rows are enforced.
    pub var_horizons: Vec<f64>,
    /// Stride between VaR fitting windows; `None` uses non-overlapping windows.
    pub var_stride_hours: Option<f64>,
    pub quantile_grid: Vec<f64>,
    /// Extra variance added to the envelope sigma² (interactive-load noise allowance).
    pub envelope_inflation: f64,
    /// Test mode: schedule fractions restricted to {0, 1}.
    pub integral_x: bool,
    pub time_limit_secs: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            shifting_mode: ShiftingMode::Joint,
            strategy: Strategy::Cooperative,
            signal_model: SignalModel::Envelope,
            eps_p: 0.05,
            eps_e: 0.05,
            delta_qos: 5.0,
            c_penal: 10_000.0,
            reg_prices: vec![RegPrice { c_rc: 30.0, c_rp: 10.0, m_bar: None }],
            slot_hours: 1.0,
            var_horizons: vec![0.25, 0.5, 1.0],
            var_stride_hours: None,
            quantile_grid: DEFAULT_QUANTILE_GRID.to_vec(),
            envelope_inflation: 0.0,
            integral_x: false,
            time_limit_secs: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, n_slots: usize, max_gen_cost: f64) -> Result<()> {
        // eps = 0.5 is admitted: the chance row then degenerates to the median form.
        if !(self.eps_p > 0.0 && self.eps_p <= 0.5) {
            return Err(Error::Domain(format!("eps_p = {} outside (0, 0.5]", self.eps_p)));
        }
        if !(self.eps_e > 0.0 && self.eps_e <= 0.5) {
            return Err(Error::Domain(format!("eps_e = {} outside (0, 0.5]", self.eps_e)));
        }
        if !(self.delta_qos >= 0.0) {
            return Err(Error::Domain(format!("delta_qos = {} must be ≥ 0", self.delta_qos)));
        }
        if !(self.c_penal > max_gen_cost) {
            return Err(Error::Domain(format!(
                "c_penal = {} must exceed the largest generator cost {max_gen_cost}",
                self.c_penal
            )));
        }
        if !(self.slot_hours > 0.0) {
            return Err(Error::Domain(format!("slot_hours = {} must be > 0", self.slot_hours)));
        }
        if !(self.reg_prices.len() == 1 || self.reg_prices.len() == n_slots) {
            return Err(Error::Dimension(format!(
                "reg_prices has {} entries, expected 1 or {n_slots}",
                self.reg_prices.len()
            )));
        }
        for p in &self.reg_prices {
            if !(p.c_rc >= 0.0 && p.c_rp >= 0.0 && p.m_bar.is_none_or(|m| m >= 0.0)) {
                return Err(Error::Domain("regulation prices and m_bar must be ≥ 0".into()));
            }
        }
        if let Some(h) = self.var_horizons.iter().find(|h| !(**h > 0.0 && **h <= self.slot_hours + 1e-12)) {
            return Err(Error::Domain(format!("var horizon {h} h outside (0, slot_hours]")));
        }
        if !(self.envelope_inflation >= 0.0) {
            return Err(Error::Domain("envelope_inflation must be ≥ 0".into()));
        }
        Ok(())
    }

    /// Configured horizons plus the full slot, ascending; the slot endpoint is
    /// always enforced.
    pub fn effective_var_horizons(&self) -> Vec<f64> {
        let mut h = self.var_horizons.clone();
        if !h.iter().any(|v| (v - self.slot_hours).abs() < 1e-12) {
            h.push(self.slot_hours);
        }
        h.sort_by(f64::total_cmp);
        h.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        h
    }

    pub fn price(&self, t: usize) -> &RegPrice {
        if self.reg_prices.len() == 1 { &self.reg_prices[0] } else { &self.reg_prices[t] }
    }

    /// Hourly revenue per MW of committed capacity at slot `t`.
    pub fn unit_revenue(&self, t: usize, default_m_bar: f64) -> f64 {
        let p = self.price(t);
        p.c_rc + p.c_rp * p.m_bar.unwrap_or(default_m_bar)
    }
}

/// Per-DC queue data in MWh-equivalent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcQueue {
    pub q0: f64,
    /// Exogenous arrivals per slot.
    pub arrivals: Vec<f64>,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueParameters {
    pub dcs: Vec<DcQueue>,
}

impl QueueParameters {
    /// Arrivals equal to the energy each DC serves under `x_base`, so the
    /// baseline schedule holds every queue at its initial level.
    pub fn from_baseline(
        dcs: &[DataCenterSpec],
        q0: &[f64],
        jobs: &[JobCluster],
        x_base: &ScheduleMatrix,
    ) -> Result<Self> {
        let (n_jobs, n_slots, n_dc) = x_base.dims();
        if n_dc != dcs.len() || q0.len() != n_dc || n_jobs != jobs.len() {
            return Err(Error::Dimension("queue construction inputs disagree on sizes".into()));
        }
        let dcs = (0..n_dc)
            .map(|l| DcQueue {
                q0: q0[l],
                arrivals: (0..n_slots)
                    .map(|t| jobs.iter().enumerate().map(|(i, j)| j.energy_mwh() * x_base.get(i, t, l)).sum())
                    .collect(),
                q_min: dcs[l].q_min,
                q_max: dcs[l].q_max,
            })
            .collect();
        Ok(Self { dcs })
    }

    pub fn validate(&self, n_dc: usize, n_slots: usize) -> Result<()> {
        if self.dcs.len() != n_dc {
            return Err(Error::Dimension(format!("{} queue entries for {n_dc} data centers", self.dcs.len())));
        }
        for (l, q) in self.dcs.iter().enumerate() {
            if q.arrivals.len() != n_slots {
                return Err(Error::Dimension(format!("dc {}: {} arrival entries", l + 1, q.arrivals.len())));
            }
            if !(q.q_min <= q.q0 && q.q0 <= q.q_max) {
                return Err(Error::Invalid(format!(
                    "dc {}: need q_min ≤ q0 ≤ q_max, got {} / {} / {}",
                    l + 1,
                    q.q_min,
                    q.q0,
                    q.q_max
                )));
            }
            if q.arrivals.iter().any(|a| !a.is_finite()) {
                return Err(Error::Invalid(format!("dc {}: non-finite arrivals", l + 1)));
            }
        }
        Ok(())
    }
}

/// Fitted signal quantities consumed by the model builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalModels {
    pub model: SignalModel,
    pub gaussian: GaussianEnvelope,
    pub var_table: VaRTable,
    /// Mean |s| of the fitting trace.
    pub m_bar: f64,
}

impl SignalModels {
    pub fn fit(trace: &RegulationTrace, cfg: &ModelConfig) -> Result<Self> {
        let gaussian = match cfg.signal_model {
            SignalModel::DirectGaussian => fit_direct_gaussian(trace)?,
            SignalModel::Envelope => {
                let mut grid = cfg.quantile_grid.clone();
                let level = 1.0 - cfg.eps_p;
                if level > 0.5 && !grid.iter().any(|q| (q - level).abs() < 1e-12) {
                    grid.push(level);
                    grid.sort_by(f64::total_cmp);
                }
                let eps_min = grid.iter().fold(0.5f64, |m, q| m.min(1.0 - q));
                fit_gaussian_envelope(trace, &grid, eps_min)?
            }
        };
        let var_table = build_var_table(trace, &cfg.effective_var_horizons(), cfg.eps_e, cfg.var_stride_hours)?;
        Ok(Self { model: cfg.signal_model, gaussian, var_table, m_bar: trace.mean_abs() })
    }

    /// `mu + Φ⁻¹(1−ε_p)·sqrt(sigma² + inflation)`, floored at 0 so the row
    /// always implies `ϑ̄ ≥ P_min`.
    pub fn chance_coefficient(&self, eps_p: f64, inflation: f64) -> Result<f64> {
        let z = inverse_normal_cdf(1.0 - eps_p)?;
        let sigma = (self.gaussian.sigma.powi(2) + inflation).sqrt();
        Ok((self.gaussian.mu + z * sigma).max(0.0))
    }
}
