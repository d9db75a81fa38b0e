//! Potential energy of the dipole in the two-pole field, written in the
//! axisymmetric variables `(r, c', c'', c''')`, and its analytic partials.
//!
//! `U = -(lambda0 / 4π) Σ_ε ε U_ε` with `U_ε = (r c'' - ε h c''') / R_ε³` and
//! `R_ε = sqrt(r² - 2 ε h r c' + h²)`.

use std::f64::consts::PI;

use crate::error::{OrbitronError, Result};
use crate::model::{OrbitronParams, ScalarInvariants};

/// One of the two field poles, identified by the sign of its charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    /// Charge `+kappa` at `z = +h`.
    Upper,
    /// Charge `-kappa` at `z = -h`.
    Lower,
}

impl Pole {
    pub const BOTH: [Pole; 2] = [Pole::Upper, Pole::Lower];

    pub fn sign(self) -> f64 {
        match self {
            Pole::Upper => 1.0,
            Pole::Lower => -1.0,
        }
    }
}

/// Partials of `U` with respect to `(r, c', c'', c''')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialGradients {
    /// [J/m]
    pub du_dr: f64,
    /// [J]
    pub du_dc1: f64,
    /// [J]
    pub du_dc2: f64,
    /// [J]
    pub du_dc3: f64,
}

/// Distance from a point at radius `r` with `c' = c1` to the given pole.
pub fn pole_distance(r: f64, c1: f64, h: f64, pole: Pole) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(OrbitronError::invalid("r", format!("must be non-negative, got {r}")));
    }
    let eps = pole.sign();
    let sq = r * r - 2.0 * eps * h * r * c1 + h * h;
    if sq > 0.0 {
        Ok(sq.sqrt())
    } else {
        Err(OrbitronError::NearPole {
            distance: 0.0,
            guard: 0.0,
        })
    }
}

fn guarded_distances(params: &OrbitronParams, inv: &ScalarInvariants) -> Result<[f64; 2]> {
    let guard = params.pole_guard();
    let mut out = [0.0; 2];
    for (slot, pole) in out.iter_mut().zip(Pole::BOTH) {
        let distance = pole_distance(inv.r, inv.c1, params.h, pole).map_err(|e| match e {
            OrbitronError::NearPole { .. } => OrbitronError::NearPole { distance: 0.0, guard },
            other => other,
        })?;
        if distance < guard {
            return Err(OrbitronError::NearPole { distance, guard });
        }
        *slot = distance;
    }
    Ok(out)
}

fn prefactor(params: &OrbitronParams) -> f64 {
    -params.lambda0() / (4.0 * PI)
}

pub fn potential_energy(params: &OrbitronParams, inv: &ScalarInvariants) -> Result<f64> {
    let distances = guarded_distances(params, inv)?;
    let h = params.h;
    let sum: f64 = Pole::BOTH
        .iter()
        .zip(distances)
        .map(|(pole, big_r)| {
            let eps = pole.sign();
            eps * (inv.r * inv.c2 - eps * h * inv.c3) / big_r.powi(3)
        })
        .sum();
    Ok(prefactor(params) * sum)
}

pub fn potential_gradients(params: &OrbitronParams, inv: &ScalarInvariants) -> Result<PotentialGradients> {
    let distances = guarded_distances(params, inv)?;
    let ScalarInvariants { r, c1, c2, c3 } = *inv;
    let h = params.h;
    let mut g = PotentialGradients {
        du_dr: 0.0,
        du_dc1: 0.0,
        du_dc2: 0.0,
        du_dc3: 0.0,
    };
    for (pole, big_r) in Pole::BOTH.iter().zip(distances) {
        let eps = pole.sign();
        let r3 = big_r.powi(3);
        let r5 = r3 * big_r * big_r;
        let numer = r * c2 - eps * h * c3;
        // each per-pole partial enters with its ε weight
        g.du_dr += eps * (c2 / r3 - 3.0 * numer * (r - eps * h * c1) / r5);
        g.du_dc1 += eps * (3.0 * numer * eps * h * r / r5);
        g.du_dc2 += eps * (r / r3);
        g.du_dc3 += eps * (-eps * h / r3);
    }
    let k = prefactor(params);
    g.du_dr *= k;
    g.du_dc1 *= k;
    g.du_dc2 *= k;
    g.du_dc3 *= k;
    Ok(g)
}
