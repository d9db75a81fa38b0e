//! Random perturbations of a relative equilibrium and batch integration.
//!
//! Every trial draws its perturbation from its own ChaCha8 stream
//! (`seed`, stream = trial index), so results do not depend on how trials
//! are scheduled across threads.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{propagate, StepPlan};
use crate::equilibrium::EquilibriumSolution;
use crate::error::{OrbitronError, Result};
use crate::model::{DipoleState, OrbitronParams, Vec3};

/// Name of the random generator, recorded with batch output.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64(seed), stream = trial index";

/// Default steps per orbital period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;

/// Default boundedness threshold on the deviation metric.
pub const DEFAULT_BOUND_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Perturbation amplitude relative to each coordinate's natural scale.
    pub rel_eps: f64,
    pub seed: u64,
    pub n_trials: usize,
    /// Integration horizon in orbital periods.
    pub horizon_periods: f64,
    pub steps_per_period: usize,
    /// Project onto the Casimir level set after each step.
    pub renormalize: bool,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            rel_eps: 0.01,
            seed: 0,
            n_trials: 1000,
            horizon_periods: 10.0,
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            renormalize: true,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_eps >= 0.0 && self.rel_eps.is_finite()) {
            return Err(OrbitronError::invalid(
                "rel_eps",
                format!("must be finite and >= 0, got {}", self.rel_eps),
            ));
        }
        if self.n_trials == 0 {
            return Err(OrbitronError::invalid("n_trials", "must be at least 1"));
        }
        if !(self.horizon_periods > 0.0 && self.horizon_periods.is_finite()) {
            return Err(OrbitronError::invalid("horizon_periods", "must be finite and > 0"));
        }
        if self.steps_per_period == 0 {
            return Err(OrbitronError::invalid("steps_per_period", "must be at least 1"));
        }
        Ok(())
    }
}

fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Perturbs each of the 12 coordinates of the supporting point by
/// `u * rel_eps * scale` with `u ~ U[-1, 1]`, then renormalizes `nu`.
pub fn sample_perturbed(eq: &EquilibriumSolution, spec: &PerturbationSpec, trial_index: u64) -> DipoleState {
    let mut rng = trial_rng(spec.seed, trial_index);
    let scales = eq.coordinate_scales();
    let mut z = eq.state.to_array();
    for (c, scale) in z.iter_mut().zip(scales) {
        let u: f64 = rng.random_range(-1.0..=1.0);
        *c += u * spec.rel_eps * scale;
    }
    let mut state = DipoleState::from_array(&z);
    state.nu = state.nu.normalize();
    state
}

/// Distance of `state` from the relative-equilibrium orbit of `eq`, in units
/// of the natural scales. Invariant under rotations about `e3`.
pub fn deviation_metric(state: &DipoleState, eq: &EquilibriumSolution) -> f64 {
    let r = state.x.norm();
    let down = Vec3::new(0.0, 0.0, -1.0);
    let cos = (state.nu.dot(&down) / state.nu.norm()).clamp(-1.0, 1.0);
    let terms = [
        (r - eq.r0).abs() / eq.r0,
        state.x.z.abs() / eq.r0,
        (state.p.norm() - eq.p0).abs() / eq.p0,
        cos.acos() / FRAC_PI_2,
        (state.n.z - eq.n0).abs() / eq.spin_scale(),
    ];
    terms.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub index: u64,
    pub seed: u64,
    /// Largest deviation metric seen along the trajectory.
    pub max_deviation: f64,
    pub bounded: bool,
    /// The integration aborted (pole proximity, origin, non-finite state).
    pub fault: bool,
    /// Time reached before a fault, or the horizon [s].
    pub end_time: f64,
}

/// Quantiles of the per-trial maximum deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSummary {
    pub min: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub spec: PerturbationSpec,
    pub bound_threshold: f64,
    pub trials: Vec<TrialOutcome>,
    pub bounded_count: usize,
    pub unbounded_count: usize,
    pub fault_count: usize,
    pub summary: DeviationSummary,
    /// The equilibrium satisfied both analytic stability conditions.
    pub equilibrium_conditions_hold: bool,
}

impl BatchResult {
    pub fn bounded_fraction(&self) -> f64 {
        self.bounded_count as f64 / self.trials.len() as f64
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(trials: &[TrialOutcome]) -> DeviationSummary {
    let mut devs: Vec<f64> = trials.iter().map(|t| t.max_deviation).collect();
    devs.sort_by(f64::total_cmp);
    DeviationSummary {
        min: devs[0],
        p50: quantile(&devs, 0.5),
        p90: quantile(&devs, 0.9),
        p99: quantile(&devs, 0.99),
        max: devs[devs.len() - 1],
    }
}

/// Integrates one perturbed sample and reports its worst deviation.
pub fn run_trial(
    params: &OrbitronParams,
    eq: &EquilibriumSolution,
    spec: &PerturbationSpec,
    bound_threshold: f64,
    trial_index: u64,
) -> Result<TrialOutcome> {
    let initial = sample_perturbed(eq, spec, trial_index);
    let period = eq.period();
    let plan = StepPlan::new(
        spec.horizon_periods * period,
        period / spec.steps_per_period as f64,
        spec.renormalize,
    )?;
    let mut max_deviation = 0.0_f64;
    let run = propagate(params, &initial, &plan, |_, s| {
        max_deviation = max_deviation.max(deviation_metric(s, eq));
    })?;
    let fault = run.fault.is_some();
    Ok(TrialOutcome {
        index: trial_index,
        seed: spec.seed,
        max_deviation,
        bounded: !fault && max_deviation < bound_threshold,
        fault,
        end_time: run.final_time,
    })
}

/// Runs `spec.n_trials` independent trials in parallel on the current rayon
/// pool.
pub fn run_batch(
    params: &OrbitronParams,
    eq: &EquilibriumSolution,
    spec: &PerturbationSpec,
    bound_threshold: f64,
) -> Result<BatchResult> {
    spec.validate()?;
    if !(bound_threshold > 0.0) {
        return Err(OrbitronError::invalid("bound_threshold", "must be > 0"));
    }
    if !(eq.omega > 0.0) {
        return Err(OrbitronError::invalid("omega", "equilibrium must rotate"));
    }
    let trials = (0..spec.n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(params, eq, spec, bound_threshold, i))
        .collect::<Result<Vec<_>>>()?;
    let fault_count = trials.iter().filter(|t| t.fault).count();
    let bounded_count = trials.iter().filter(|t| t.bounded).count();
    let conditions = crate::stability::stability_conditions(params, eq.r0, eq.n0)?.conditions_hold();
    Ok(BatchResult {
        spec: *spec,
        bound_threshold,
        summary: summarize(&trials),
        bounded_count,
        unbounded_count: trials.len() - bounded_count - fault_count,
        fault_count,
        trials,
        equilibrium_conditions_hold: conditions,
    })
}
