//! Run configuration files.
//!
//! A configuration is a TOML document. Physical parameters come from exactly
//! one of `[params]` (direct values) or `[magnet]` (disk magnet material and
//! geometry). Each command reads its own block: `[equilibrium]`,
//! `[stability]`, `[simulate]` or `[montecarlo]`. See `configs/` for a
//! complete example.

use std::path::Path;

use orbitron_core::model::{MagnetSpecs, OrbitronParams, MU0};
use orbitron_core::{min_spin, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnet: Option<MagnetBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloBlock>,
}

/// Direct physical parameters (SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub kappa: f64,
    pub h: f64,
    pub mu: f64,
    pub mass: f64,
    pub i_perp: f64,
    pub i_axial: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
}

/// Disk magnet material/geometry and the pole pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetBlock {
    pub density: f64,
    pub remanence: f64,
    pub disk_diameter: f64,
    pub disk_height: f64,
    pub pole_kappa: f64,
    pub pole_half_gap: f64,
}

/// Spin of the supporting point: either an absolute `n0` or a multiple of
/// the minimum stabilizing spin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinChoice {
    pub n0: Option<f64>,
    pub n0_over_min: Option<f64>,
}

impl SpinChoice {
    pub fn resolve(&self, params: &OrbitronParams, r0: f64) -> Result<f64, CliError> {
        match (self.n0, self.n0_over_min) {
            (Some(n0), None) => Ok(n0),
            (None, Some(factor)) => {
                let bound = min_spin(params, r0).map_err(|e| CliError::validation(format!("n0_over_min: {e}")))?;
                Ok(factor * bound.n0_min)
            }
            (None, None) => Err(CliError::validation("one of n0 or n0_over_min is required")),
            (Some(_), Some(_)) => Err(CliError::validation("n0 and n0_over_min are mutually exclusive")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumBlock {
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_over_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_over_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

/// Grid of `r0/h` (fixed step) by `n0` (evenly spaced points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub ratio_start: f64,
    pub ratio_stop: f64,
    pub ratio_step: f64,
    pub n0_start: f64,
    pub n0_stop: f64,
    pub n0_points: usize,
}

impl SweepBlock {
    pub fn ratios(&self) -> Result<Vec<f64>, CliError> {
        let ok = self.ratio_start > 0.0
            && self.ratio_stop >= self.ratio_start
            && self.ratio_step > 0.0
            && [self.ratio_start, self.ratio_stop, self.ratio_step]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(CliError::validation(
                "sweep needs 0 < ratio_start <= ratio_stop and ratio_step > 0",
            ));
        }
        let count = ((self.ratio_stop - self.ratio_start) / self.ratio_step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| self.ratio_start + i as f64 * self.ratio_step)
            .collect())
    }

    pub fn spins(&self) -> Result<Vec<f64>, CliError> {
        if self.n0_points == 0 || !(self.n0_start.is_finite() && self.n0_stop.is_finite()) {
            return Err(CliError::validation("sweep needs n0_points >= 1 and finite n0 bounds"));
        }
        if self.n0_points == 1 {
            return Ok(vec![self.n0_start]);
        }
        if self.n0_stop <= self.n0_start {
            return Err(CliError::validation("sweep needs n0_stop > n0_start"));
        }
        let last = (self.n0_points - 1) as f64;
        Ok((0..self.n0_points)
            .map(|i| {
                let f = i as f64 / last;
                (1.0 - f) * self.n0_start + f * self.n0_stop
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: [f64; 3],
    pub p: [f64; 3],
    pub nu: [f64; 3],
    pub n: [f64; 3],
}

impl InitialState {
    pub fn to_state(&self) -> Result<orbitron_core::DipoleState, CliError> {
        let v = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
        Ok(orbitron_core::DipoleState::new(
            v(self.x),
            v(self.p),
            v(self.nu),
            v(self.n),
        )?)
    }
}

/// Start from a relative equilibrium (`r0` + spin) or from `initial`.
/// Duration is `t_end` seconds or `periods` orbital periods; the step is
/// `dt` or one `steps_per_period`-th of the reference orbital period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_over_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<bool>,
    /// Write every n-th step to the trajectory file (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_over_min: Option<f64>,
    pub n_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<bool>,
}

impl EquilibriumBlock {
    pub fn spin(&self) -> SpinChoice {
        SpinChoice {
            n0: self.n0,
            n0_over_min: self.n0_over_min,
        }
    }
}

impl StabilityBlock {
    pub fn spin(&self) -> SpinChoice {
        SpinChoice {
            n0: self.n0,
            n0_over_min: self.n0_over_min,
        }
    }
}

impl SimulateBlock {
    pub fn spin(&self) -> SpinChoice {
        SpinChoice {
            n0: self.n0,
            n0_over_min: self.n0_over_min,
        }
    }
}

impl MonteCarloBlock {
    pub fn spin(&self) -> SpinChoice {
        SpinChoice {
            n0: self.n0,
            n0_over_min: self.n0_over_min,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn orbitron_params(&self) -> Result<OrbitronParams, CliError> {
        match (&self.params, &self.magnet) {
            (Some(p), None) => {
                let params = OrbitronParams::new(p.kappa, p.h, p.mu, p.mass, p.i_perp, p.i_axial)?;
                Ok(params.with_mu0(p.mu0.unwrap_or(MU0))?)
            }
            (None, Some(m)) => Ok(OrbitronParams::from_magnet_specs(&MagnetSpecs {
                density: m.density,
                remanence: m.remanence,
                disk_diameter: m.disk_diameter,
                disk_height: m.disk_height,
                pole_kappa: m.pole_kappa,
                pole_half_gap: m.pole_half_gap,
            })?),
            (None, None) => Err(CliError::validation("config needs a [params] or a [magnet] block")),
            (Some(_), Some(_)) => Err(CliError::validation("[params] and [magnet] are mutually exclusive")),
        }
    }
}
