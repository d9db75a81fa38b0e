//! Circular relative equilibria in the `z = 0` plane.
//!
//! The supporting point is `x = r0 e1`, `p = p0 e2`, `nu = -e3`, `n = n0 e3`.
//! On this orbit the whole state rotates rigidly about `e3` at `omega`.

use std::f64::consts::PI;

use crate::error::{require_positive, OrbitronError, Result};
use crate::model::{scalar_invariants, DipoleState, OrbitronParams, Vec3};
use crate::potential::potential_energy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSolution {
    /// Orbit radius [m].
    pub r0: f64,
    /// Orbital angular velocity [rad/s].
    pub omega: f64,
    /// Orbital momentum `M omega r0` [kg·m/s].
    pub p0: f64,
    /// Spin angular momentum along `e3` [kg·m²/s].
    pub n0: f64,
    /// `∂U/∂c'''` at the supporting point [J].
    pub k: f64,
    /// Multiplier of `|nu|²/2` [J].
    pub lambda1: f64,
    /// Multiplier of `nu·n` [rad/s].
    pub lambda2: f64,
    /// The supporting point itself.
    pub state: DipoleState,
}

impl EquilibriumSolution {
    /// Orbital period `2π/omega` [s].
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Orbital angular momentum `M omega r0²` [kg·m²/s].
    pub fn orbital_momentum(&self) -> f64 {
        self.p0 * self.r0
    }

    /// Magnitude used to measure spin deviations: `|n0|`, or the orbital
    /// angular momentum when the equilibrium carries no spin.
    pub fn spin_scale(&self) -> f64 {
        if self.n0 != 0.0 {
            self.n0.abs()
        } else {
            self.orbital_momentum()
        }
    }

    /// Natural size of each of the 12 state coordinates at this point:
    /// `r0` for positions, `p0` for momenta, 1 for the axis and
    /// [`spin_scale`](Self::spin_scale) for the spin.
    pub fn coordinate_scales(&self) -> [f64; 12] {
        // a field-free equilibrium has p0 = 0; fall back to unit SI scales
        let or_unit = |v: f64| if v > 0.0 { v } else { 1.0 };
        let mut s = [0.0; 12];
        s[0..3].fill(self.r0);
        s[3..6].fill(or_unit(self.p0));
        s[6..9].fill(1.0);
        s[9..12].fill(or_unit(self.spin_scale()));
        s
    }
}

fn check_radius(r0: f64) -> Result<()> {
    require_positive("r0", r0)
}

/// `K = lambda0 h / (2π R³)` with `R² = r0² + h²`.
pub fn k_constant(params: &OrbitronParams, r0: f64) -> Result<f64> {
    check_radius(r0)?;
    let big_r2 = r0 * r0 + params.h * params.h;
    Ok(params.lambda0() * params.h / (2.0 * PI * big_r2 * big_r2.sqrt()))
}

/// Positive root of `M omega² = 3K/R²`.
pub fn orbital_frequency(params: &OrbitronParams, r0: f64) -> Result<f64> {
    let k = k_constant(params, r0)?;
    let big_r2 = r0 * r0 + params.h * params.h;
    Ok((3.0 * k / (params.mass * big_r2)).sqrt())
}

pub fn make_equilibrium(params: &OrbitronParams, r0: f64, n0: f64) -> Result<EquilibriumSolution> {
    check_radius(r0)?;
    if !n0.is_finite() {
        return Err(OrbitronError::invalid("n0", "must be finite"));
    }
    let k = k_constant(params, r0)?;
    let omega = orbital_frequency(params, r0)?;
    let p0 = params.mass * omega * r0;
    let lambda2 = params.alpha() * n0 - omega;
    let lambda1 = k + n0 * lambda2;
    Ok(EquilibriumSolution {
        r0,
        omega,
        p0,
        n0,
        k,
        lambda1,
        lambda2,
        state: DipoleState {
            x: Vec3::new(r0, 0.0, 0.0),
            p: Vec3::new(0.0, p0, 0.0),
            nu: Vec3::new(0.0, 0.0, -1.0),
            n: Vec3::new(0.0, 0.0, n0),
        },
    })
}

/// Adjoined Hamiltonian `T + U - omega j3 + lambda1 |nu|²/2 + lambda2 nu·n`.
pub fn adjoined_hamiltonian(params: &OrbitronParams, eq: &EquilibriumSolution, state: &DipoleState) -> Result<f64> {
    let inv = scalar_invariants(state)?;
    let kinetic = state.p.norm_squared() / (2.0 * params.mass) + 0.5 * params.alpha() * state.n.norm_squared();
    let j3 = state.x.x * state.p.y - state.x.y * state.p.x + state.n.z;
    Ok(kinetic + potential_energy(params, &inv)? - eq.omega * j3
        + 0.5 * eq.lambda1 * state.nu.norm_squared()
        + eq.lambda2 * state.nu.dot(&state.n))
}

/// `H̃(z_e + dz) - H̃(z_e)` for the adjoined Hamiltonian of `eq`.
///
/// Each term is differenced analytically against its value at the
/// supporting point, so the rounding error scales with the increment
/// rather than with the (much larger) spin energy.
pub fn adjoined_increment(params: &OrbitronParams, eq: &EquilibriumSolution, dz: &[f64; 12]) -> Result<f64> {
    let base = eq.state;
    let d = DipoleState::from_array(dz);
    let state = DipoleState {
        x: base.x + d.x,
        p: base.p + d.p,
        nu: base.nu + d.nu,
        n: base.n + d.n,
    };
    let inv = scalar_invariants(&state)?;
    let base_inv = scalar_invariants(&base)?;
    let kinetic =
        d.p.dot(&(base.p * 2.0 + d.p)) / (2.0 * params.mass) + 0.5 * params.alpha() * d.n.dot(&(base.n * 2.0 + d.n));
    let potential = potential_energy(params, &inv)? - potential_energy(params, &base_inv)?;
    let j3 = d.x.x * base.p.y + base.x.x * d.p.y + d.x.x * d.p.y - (base.x.y + d.x.y) * (base.p.x + d.p.x)
        + base.x.y * base.p.x
        + d.n.z;
    let nu2 = d.nu.dot(&(base.nu * 2.0 + d.nu));
    let nun = d.nu.dot(&base.n) + base.nu.dot(&d.n) + d.nu.dot(&d.n);
    Ok(kinetic + potential - eq.omega * j3 + 0.5 * eq.lambda1 * nu2 + eq.lambda2 * nun)
}

/// Energy magnitude used to make critical-point residuals dimensionless:
/// `K + p0²/M + alpha n0²`.
pub fn energy_scale(params: &OrbitronParams, eq: &EquilibriumSolution) -> f64 {
    eq.k + eq.p0 * eq.p0 / params.mass + params.alpha() * eq.n0 * eq.n0
}

/// Relative finite-difference step for the critical-point check.
pub const CRITICAL_POINT_STEP: f64 = 1e-6;

/// Central-difference gradient of the adjoined Hamiltonian at the supporting
/// point, each component multiplied by its coordinate scale and divided by
/// [`energy_scale`]. Component order follows [`DipoleState::to_array`].
pub fn critical_point_gradient(params: &OrbitronParams, eq: &EquilibriumSolution) -> Result<[f64; 12]> {
    let base = eq.state.to_array();
    let scales = eq.coordinate_scales();
    let e_ref = energy_scale(params, eq);
    let mut grad = [0.0; 12];
    for i in 0..12 {
        let step = CRITICAL_POINT_STEP * base[i].abs().max(scales[i]);
        let mut dz = [0.0; 12];
        dz[i] = step;
        let hp = adjoined_increment(params, eq, &dz)?;
        dz[i] = -step;
        let hm = adjoined_increment(params, eq, &dz)?;
        grad[i] = (hp - hm) / (2.0 * step) * scales[i] / e_ref;
    }
    Ok(grad)
}

/// Max-norm of [`critical_point_gradient`]; zero at an exact equilibrium up
/// to differencing error.
pub fn verify_critical_point(params: &OrbitronParams, eq: &EquilibriumSolution) -> Result<f64> {
    let grad = critical_point_gradient(params, eq)?;
    Ok(grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())))
}
