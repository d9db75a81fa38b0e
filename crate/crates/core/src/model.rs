//! Domain types, physical parameters and the geometric invariants of a phase
//! point.
//!
//! All quantities are SI. The two field poles sit on the z axis at `±h`, the
//! `+h` pole carrying charge `+kappa`. The dipole moment vector is `mu * nu`
//! with `mu >= 0`, so orientation lives entirely in the unit axis `nu`.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{require_positive, OrbitronError, Result};

pub type Vec3 = Vector3<f64>;

/// Vacuum permeability [T·m/A].
pub const MU0: f64 = 4.0e-7 * PI;

/// Tolerance on `|nu| = 1` accepted by [`DipoleState::new`].
pub const UNIT_AXIS_TOL: f64 = 1e-9;

/// Fraction of `h` inside which a point counts as sitting on a pole.
pub const POLE_GUARD_FRACTION: f64 = 1e-3;

/// Full phase point of the moving magnet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleState {
    /// Position [m].
    pub x: Vec3,
    /// Linear momentum [kg·m/s].
    pub p: Vec3,
    /// Unit symmetry axis of the magnet.
    pub nu: Vec3,
    /// Intrinsic angular momentum [kg·m²/s].
    pub n: Vec3,
}

impl DipoleState {
    /// Builds a state, rejecting non-finite components and non-unit axes.
    pub fn new(x: Vec3, p: Vec3, nu: Vec3, n: Vec3) -> Result<Self> {
        let state = Self { x, p, nu, n };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(OrbitronError::NonFinite("dipole state"));
        }
        let norm = self.nu.norm();
        if (norm - 1.0).abs() > UNIT_AXIS_TOL {
            return Err(OrbitronError::invalid(
                "nu",
                format!("axis must be a unit vector, |nu| = {norm}"),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.p, self.nu, self.n]
            .iter()
            .all(|v| v.iter().all(|c| c.is_finite()))
    }

    /// Flattens to `[x1, x2, x3, p1, p2, p3, nu1, nu2, nu3, n1, n2, n3]`.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (block, v) in [self.x, self.p, self.nu, self.n].iter().enumerate() {
            out[3 * block..3 * block + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    /// Inverse of [`DipoleState::to_array`]; performs no validation.
    pub fn from_array(a: &[f64; 12]) -> Self {
        let v = |i: usize| Vec3::new(a[i], a[i + 1], a[i + 2]);
        Self {
            x: v(0),
            p: v(3),
            nu: v(6),
            n: v(9),
        }
    }
}

/// Physical constants of the pole pair and the moving magnet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitronParams {
    /// Pole strength [A·m].
    pub kappa: f64,
    /// Half the pole separation [m].
    pub h: f64,
    /// Dipole moment magnitude [A·m²].
    pub mu: f64,
    /// Mass of the magnet [kg].
    pub mass: f64,
    /// Transverse moment of inertia [kg·m²].
    pub i_perp: f64,
    /// Axial moment of inertia [kg·m²]; only used to report spin rates.
    pub i_axial: f64,
    /// Vacuum permeability [T·m/A].
    pub mu0: f64,
}

impl OrbitronParams {
    /// Builds a parameter set with the SI vacuum permeability.
    pub fn new(kappa: f64, h: f64, mu: f64, mass: f64, i_perp: f64, i_axial: f64) -> Result<Self> {
        let params = Self {
            kappa,
            h,
            mu,
            mass,
            i_perp,
            i_axial,
            mu0: MU0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mu0(mut self, mu0: f64) -> Result<Self> {
        self.mu0 = mu0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("kappa", self.kappa)?;
        require_positive("h", self.h)?;
        require_positive("mu", self.mu)?;
        require_positive("mass", self.mass)?;
        require_positive("i_perp", self.i_perp)?;
        require_positive("i_axial", self.i_axial)?;
        require_positive("mu0", self.mu0)
    }

    /// Coupling `mu0 * kappa * mu` [J·m].
    pub fn lambda0(&self) -> f64 {
        self.mu0 * self.kappa * self.mu
    }

    /// Inverse transverse inertia [1/(kg·m²)].
    pub fn alpha(&self) -> f64 {
        1.0 / self.i_perp
    }

    /// Distance from a pole below which evaluations are rejected [m].
    pub fn pole_guard(&self) -> f64 {
        POLE_GUARD_FRACTION * self.h
    }

    pub fn from_magnet_specs(specs: &MagnetSpecs) -> Result<Self> {
        specs.validate()?;
        let radius = 0.5 * specs.disk_diameter;
        let volume = PI * radius * radius * specs.disk_height;
        let mass = specs.density * volume;
        Self::new(
            specs.pole_kappa,
            specs.pole_half_gap,
            specs.remanence * volume / MU0,
            mass,
            mass * (3.0 * radius * radius + specs.disk_height * specs.disk_height) / 12.0,
            0.5 * mass * radius * radius,
        )
    }
}

/// Material and geometry data of a disk magnet and the pole pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetSpecs {
    /// [kg/m³]
    pub density: f64,
    /// Remanent induction [T].
    pub remanence: f64,
    /// [m]
    pub disk_diameter: f64,
    /// [m]
    pub disk_height: f64,
    /// [A·m]
    pub pole_kappa: f64,
    /// [m]
    pub pole_half_gap: f64,
}

impl MagnetSpecs {
    /// NdFeB disk (14 mm × 6 mm) between poles of 17.6 A·m placed 0.1 m apart.
    pub const NDFEB_DISK: Self = Self {
        density: 7.4e3,
        remanence: 0.25,
        disk_diameter: 0.014,
        disk_height: 0.006,
        pole_kappa: 17.6,
        pole_half_gap: 0.05,
    };

    pub fn validate(&self) -> Result<()> {
        require_positive("density", self.density)?;
        require_positive("remanence", self.remanence)?;
        require_positive("disk_diameter", self.disk_diameter)?;
        require_positive("disk_height", self.disk_height)?;
        require_positive("pole_kappa", self.pole_kappa)?;
        require_positive("pole_half_gap", self.pole_half_gap)
    }
}

/// Convenience wrapper around [`OrbitronParams::from_magnet_specs`].
pub fn from_magnet_specs(
    density: f64,
    remanence: f64,
    disk_diameter: f64,
    disk_height: f64,
    pole_kappa: f64,
    pole_half_gap: f64,
) -> Result<OrbitronParams> {
    OrbitronParams::from_magnet_specs(&MagnetSpecs {
        density,
        remanence,
        disk_diameter,
        disk_height,
        pole_kappa,
        pole_half_gap,
    })
}

/// Axisymmetric reduction `(r, c', c'', c''')` of a phase point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarInvariants {
    /// `|x|`
    pub r: f64,
    /// `x3 / r`
    pub c1: f64,
    /// `nu · e_r`
    pub c2: f64,
    /// `nu3`
    pub c3: f64,
}

pub fn scalar_invariants(state: &DipoleState) -> Result<ScalarInvariants> {
    if !state.is_finite() {
        return Err(OrbitronError::NonFinite("dipole state"));
    }
    let r = state.x.norm();
    if r == 0.0 {
        return Err(OrbitronError::AtOrigin);
    }
    let e_r = state.x / r;
    Ok(ScalarInvariants {
        r,
        c1: e_r.z,
        c2: state.nu.dot(&e_r),
        c3: state.nu.z,
    })
}

/// Distance from `pos` to the nearer pole [m].
pub fn nearest_pole_distance(params: &OrbitronParams, pos: &Vec3) -> f64 {
    let up = (pos - Vec3::new(0.0, 0.0, params.h)).norm();
    let down = (pos + Vec3::new(0.0, 0.0, params.h)).norm();
    up.min(down)
}

pub(crate) fn check_pole_clearance(params: &OrbitronParams, pos: &Vec3) -> Result<()> {
    let distance = nearest_pole_distance(params, pos);
    let guard = params.pole_guard();
    if distance < guard {
        Err(OrbitronError::NearPole { distance, guard })
    } else {
        Ok(())
    }
}

/// Field of the two poles at `pos` [T].
pub fn field_at(params: &OrbitronParams, pos: &Vec3) -> Result<Vec3> {
    if !pos.iter().all(|c| c.is_finite()) {
        return Err(OrbitronError::NonFinite("field point"));
    }
    check_pole_clearance(params, pos)?;
    let prefactor = params.mu0 / (4.0 * PI) * params.kappa;
    let mut field = Vec3::zeros();
    for eps in [1.0, -1.0] {
        let d = pos - Vec3::new(0.0, 0.0, eps * params.h);
        let dist = d.norm();
        field += d * (eps * prefactor / (dist * dist * dist));
    }
    Ok(field)
}
