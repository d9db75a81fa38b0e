//! Independent reference computations shared by the integration tests.
//!
//! Everything here is written in plain Cartesian form from the Coulomb field
//! of two point poles, without going through the library's scalar-invariant
//! reduction.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{SMatrix, Vector3};
use orbitron_core::{DipoleState, EquilibriumSolution, MagnetSpecs, OrbitronParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type V3 = Vector3<f64>;

pub fn reference_params() -> OrbitronParams {
    OrbitronParams::from_magnet_specs(&MagnetSpecs::NDFEB_DISK).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Field of `+kappa` at `(0,0,h)` and `-kappa` at `(0,0,-h)`.
pub fn coulomb_field(params: &OrbitronParams, x: &V3) -> V3 {
    let c = params.mu0 * params.kappa / (4.0 * PI);
    let up = x - V3::new(0.0, 0.0, params.h);
    let down = x + V3::new(0.0, 0.0, params.h);
    up * (c / up.norm().powi(3)) - down * (c / down.norm().powi(3))
}

/// Dipole energy `-mu nu · B`.
pub fn dipole_energy(params: &OrbitronParams, x: &V3, nu: &V3) -> f64 {
    -params.mu * nu.dot(&coulomb_field(params, x))
}

/// Central-difference gradient of `mu nu · B` with respect to position.
pub fn force_by_differences(params: &OrbitronParams, x: &V3, nu: &V3, step: f64) -> V3 {
    let mut f = V3::zeros();
    for i in 0..3 {
        let mut e = V3::zeros();
        e[i] = step;
        f[i] = -(dipole_energy(params, &(x + e), nu) - dipole_energy(params, &(x - e), nu)) / (2.0 * step);
    }
    f
}

pub fn unit_vector(rng: &mut impl Rng) -> V3 {
    loop {
        let v = V3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Position with `|x|` in `(0.3h, 5h)` and at least `0.05h` from either pole.
pub fn random_position(params: &OrbitronParams, rng: &mut impl Rng) -> V3 {
    let h = params.h;
    loop {
        let x = unit_vector(rng) * rng.random_range(0.3 * h..5.0 * h);
        let up = (x - V3::new(0.0, 0.0, h)).norm();
        let down = (x + V3::new(0.0, 0.0, h)).norm();
        if up.min(down) > 0.05 * h {
            return x;
        }
    }
}

/// A random admissible state with momenta and spins of typical size.
pub fn random_state(params: &OrbitronParams, rng: &mut impl Rng) -> DipoleState {
    let x = random_position(params, rng);
    let p = unit_vector(rng) * rng.random_range(0.0..2e-3);
    let nu = unit_vector(rng);
    let n = unit_vector(rng) * rng.random_range(0.0..5e-5);
    DipoleState::new(x, p, nu, n).unwrap()
}

/// Parameter set scattered log-uniformly around the reference magnet.
pub fn random_params(rng: &mut impl Rng) -> OrbitronParams {
    let base = reference_params();
    let mut f = || 10f64.powf(rng.random_range(-1.0..1.0));
    OrbitronParams::new(
        base.kappa * f(),
        base.h * f(),
        base.mu * f(),
        base.mass * f(),
        base.i_perp * f(),
        base.i_axial * f(),
    )
    .unwrap()
}

/// `H̃(z_e + dz) - H̃(z_e)` with `H̃ = T + U - omega j3 + lambda1 |nu|²/2 +
/// lambda2 nu·n`. The polynomial terms are expanded by hand so only the
/// potential is differenced numerically.
pub fn adjoined_increment(params: &OrbitronParams, eq: &EquilibriumSolution, dz: &[f64; 12]) -> f64 {
    let z = eq.state;
    let v = |i: usize| V3::new(dz[i], dz[i + 1], dz[i + 2]);
    let (dx, dp, dnu, dn) = (v(0), v(3), v(6), v(9));
    let kinetic = (2.0 * z.p.dot(&dp) + dp.norm_squared()) / (2.0 * params.mass)
        + params.alpha() * (2.0 * z.n.dot(&dn) + dn.norm_squared()) / 2.0;
    let potential = dipole_energy(params, &(z.x + dx), &(z.nu + dnu)) - dipole_energy(params, &z.x, &z.nu);
    let (x, p) = (z.x + dx, z.p + dp);
    let j3 = (x.x * p.y - x.y * p.x) - (z.x.x * z.p.y - z.x.y * z.p.x) + dn.z;
    let nu2 = 2.0 * z.nu.dot(&dnu) + dnu.norm_squared();
    let nun = dnu.dot(&z.n) + z.nu.dot(&dn) + dnu.dot(&dn);
    kinetic + potential - eq.omega * j3 + 0.5 * eq.lambda1 * nu2 + eq.lambda2 * nun
}

/// Second variation in the independent variations
/// `(dx1, dx2, dp3, dx3, dnu1, dn1, dnu2, dn2)`, with the dependent ones
/// fixed by `dnu3 = dn3 = 0`, `dp1 = (p0/r0) dx2`, `dp2 = -(p0/r0) dx1`.
pub fn second_variation(params: &OrbitronParams, eq: &EquilibriumSolution) -> SMatrix<f64, 8, 8> {
    let k = eq.p0 / eq.r0;
    // each column is a unit independent variation written in state coordinates
    let mut basis = [[0.0; 12]; 8];
    basis[0][0] = 1.0;
    basis[0][4] = -k;
    basis[1][1] = 1.0;
    basis[1][3] = k;
    basis[2][5] = 1.0;
    basis[3][2] = 1.0;
    basis[4][6] = 1.0;
    basis[5][9] = 1.0;
    basis[6][7] = 1.0;
    basis[7][10] = 1.0;
    let spin = if eq.n0 != 0.0 { eq.n0.abs() } else { eq.p0 * eq.r0 };
    let scales = [eq.r0, eq.r0, eq.p0, eq.r0, 1.0, spin, 1.0, spin];
    let steps: Vec<f64> = scales.iter().map(|s| 1e-4 * s).collect();
    let eval = |a: usize, sa: f64, b: usize, sb: f64| {
        let mut dz = [0.0; 12];
        for c in 0..12 {
            dz[c] = sa * steps[a] * basis[a][c] + sb * steps[b] * basis[b][c];
        }
        adjoined_increment(params, eq, &dz)
    };
    let mut q = SMatrix::<f64, 8, 8>::zeros();
    for a in 0..8 {
        for b in a..8 {
            let value = if a == b {
                (eval(a, 1.0, a, 0.0) + eval(a, -1.0, a, 0.0)) / (steps[a] * steps[a])
            } else {
                (eval(a, 1.0, b, 1.0) - eval(a, 1.0, b, -1.0) - eval(a, -1.0, b, 1.0) + eval(a, -1.0, b, -1.0))
                    / (4.0 * steps[a] * steps[b])
            };
            q[(a, b)] = value;
            q[(b, a)] = value;
        }
    }
    q
}

/// Largest entrywise mismatch, each entry measured against its own size or,
/// for entries that should vanish, against `sqrt(|Q_ii Q_jj|)`.
pub fn worst_relative_mismatch(a: &SMatrix<f64, 8, 8>, b: &SMatrix<f64, 8, 8>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..8 {
        for j in 0..8 {
            let diag = (a[(i, i)] * a[(j, j)]).abs().sqrt();
            let scale = a[(i, j)].abs().max(if a[(i, j)] == 0.0 { diag } else { 0.0 });
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / scale);
        }
    }
    worst
}
