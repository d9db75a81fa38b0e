//! Second-variation test of a circular relative equilibrium.
//!
//! The second variation of the adjoined Hamiltonian is restricted to the
//! admissible variations at the supporting point (`dnu3 = dn3 = 0`,
//! `dp1 = (p0/r0) dx2`, `dp2 = -(p0/r0) dx1`) and expressed in the 8
//! remaining independent variations, ordered so the matrix is block diagonal:
//!
//! ```text
//! dx1 | dx2 | dp3 | dx3 dnu1 dn1 | dnu2 dn2
//! ```
//!
//! Positive definiteness reduces to a geometric window `sqrt(2/3) < r0/h < 2`
//! and a lower bound on the spin `n0`. Both are sufficient conditions for
//! nonlinear stability; a failed test does not prove instability.

use nalgebra::{DMatrix, SMatrix};

use crate::equilibrium::{adjoined_increment, make_equilibrium, EquilibriumSolution};
use crate::error::{require_positive, OrbitronError, Result};
use crate::model::OrbitronParams;

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Embedding = SMatrix<f64, 12, 8>;

/// Lower end of the admissible `r0/h` window, `sqrt(2/3)`.
pub fn geometric_lower_bound() -> f64 {
    (2.0_f64 / 3.0).sqrt()
}

/// Upper end of the admissible `r0/h` window.
pub const GEOMETRIC_UPPER_BOUND: f64 = 2.0;

/// Default tolerance for [`positive_definite`].
pub const PD_TOL: f64 = 1e-12;

/// Independent variations, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    X1,
    X2,
    P3,
    X3,
    Nu1,
    N1,
    Nu2,
    N2,
}

impl Variation {
    pub const ALL: [Variation; 8] = [
        Variation::X1,
        Variation::X2,
        Variation::P3,
        Variation::X3,
        Variation::Nu1,
        Variation::N1,
        Variation::Nu2,
        Variation::N2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Variation::X1 => "dx1",
            Variation::X2 => "dx2",
            Variation::P3 => "dp3",
            Variation::X3 => "dx3",
            Variation::Nu1 => "dnu1",
            Variation::N1 => "dn1",
            Variation::Nu2 => "dnu2",
            Variation::N2 => "dn2",
        }
    }

    /// Index of the coordinate in [`DipoleState::to_array`](crate::DipoleState::to_array)
    /// order that this variation moves directly.
    fn coordinate(self) -> usize {
        match self {
            Variation::X1 => 0,
            Variation::X2 => 1,
            Variation::X3 => 2,
            Variation::P3 => 5,
            Variation::Nu1 => 6,
            Variation::Nu2 => 7,
            Variation::N1 => 9,
            Variation::N2 => 10,
        }
    }
}

/// Index sets of the diagonal blocks.
pub const BLOCKS: [&[usize]; 5] = [&[0], &[1], &[2], &[3, 4, 5], &[6, 7]];

/// Second variation in the independent variations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub entries: Matrix8,
}

impl QuadraticForm {
    pub fn basis_labels() -> [&'static str; 8] {
        Variation::ALL.map(Variation::label)
    }

    pub fn get(&self, a: Variation, b: Variation) -> f64 {
        self.entries[(a.index(), b.index())]
    }

    /// Sub-matrix on the given indices.
    pub fn block(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            self.entries[(indices[i], indices[j])]
        })
    }
}

/// Closed-form second variation at the supporting point of `eq`.
pub fn build_q(params: &OrbitronParams, eq: &EquilibriumSolution) -> QuadraticForm {
    use Variation::*;
    let h2 = params.h * params.h;
    let r2 = eq.r0 * eq.r0;
    let big_r2 = r2 + h2;
    let radial = 3.0 * eq.k / big_r2;
    let alpha = params.alpha();
    let mut q = Matrix8::zeros();
    let mut set = |a: Variation, b: Variation, v: f64| {
        q[(a.index(), b.index())] = v;
        q[(b.index(), a.index())] = v;
    };
    set(X1, X1, radial * (4.0 * h2 - r2) / big_r2);
    set(X2, X2, 4.0 * radial);
    set(P3, P3, 1.0 / params.mass);
    set(X3, X3, radial * (3.0 * r2 - 2.0 * h2) / big_r2);
    set(X3, Nu1, -radial * eq.r0);
    set(Nu1, Nu1, eq.lambda1);
    set(Nu1, N1, eq.lambda2);
    set(N1, N1, alpha);
    set(Nu2, Nu2, eq.lambda1);
    set(Nu2, N2, eq.lambda2);
    set(N2, N2, alpha);
    QuadraticForm { entries: q }
}

/// Maps the 8 independent variations into the 12 state coordinates.
pub fn variation_embedding(eq: &EquilibriumSolution) -> Embedding {
    let mut b = Embedding::zeros();
    for v in Variation::ALL {
        b[(v.coordinate(), v.index())] = 1.0;
    }
    let ratio = eq.p0 / eq.r0;
    b[(4, Variation::X1.index())] = -ratio;
    b[(3, Variation::X2.index())] = ratio;
    b
}

/// Relative step of the second differences in [`projected_hessian_oracle`].
pub const HESSIAN_STEP: f64 = 1e-4;

/// Central second-difference Hessian of the adjoined Hamiltonian over all 12
/// coordinates at the supporting point [SI units, mixed].
pub fn numeric_hessian(params: &OrbitronParams, eq: &EquilibriumSolution) -> Result<SMatrix<f64, 12, 12>> {
    let steps = eq.coordinate_scales().map(|s| HESSIAN_STEP * s);
    let eval = |i: usize, si: f64, j: usize, sj: f64| -> Result<f64> {
        let mut dz = [0.0; 12];
        dz[i] += si * steps[i];
        dz[j] += sj * steps[j];
        adjoined_increment(params, eq, &dz)
    };
    let mut hess = SMatrix::<f64, 12, 12>::zeros();
    for i in 0..12 {
        for j in i..12 {
            let value = if i == j {
                let plus = eval(i, 1.0, i, 0.0)?;
                let minus = eval(i, -1.0, i, 0.0)?;
                (plus + minus) / (steps[i] * steps[i])
            } else {
                let pp = eval(i, 1.0, j, 1.0)?;
                let pm = eval(i, 1.0, j, -1.0)?;
                let mp = eval(i, -1.0, j, 1.0)?;
                let mm = eval(i, -1.0, j, -1.0)?;
                (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j])
            };
            hess[(i, j)] = value;
            hess[(j, i)] = value;
        }
    }
    Ok(hess)
}

/// Numerical counterpart of [`build_q`]: `Bᵀ · Hess · B` with the
/// finite-difference Hessian and the constraint embedding.
pub fn projected_hessian_oracle(params: &OrbitronParams, eq: &EquilibriumSolution) -> Result<Matrix8> {
    let b = variation_embedding(eq);
    let hess = numeric_hessian(params, eq)?;
    Ok(b.transpose() * hess * b)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(OrbitronError::NonFinite("matrix"));
    }
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        return Err(OrbitronError::NotSymmetric(worst));
    }
    Ok(())
}

/// Leading principal minors of the unit-diagonal rescaling
/// `D^{-1/2} A D^{-1/2}` all exceed `tol`. Requires a positive diagonal.
fn scaled_minors_positive(a: &DMatrix<f64>, tol: f64) -> bool {
    let n = a.nrows();
    if (0..n).any(|i| !(a[(i, i)] > 0.0)) {
        return false;
    }
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]));
    (1..=n).all(|k| scaled.view((0, 0), (k, k)).determinant() > tol)
}

/// Positive definiteness of a symmetric matrix by leading principal minors.
///
/// When the off-block entries vanish the test runs block by block on
/// [`BLOCKS`]; otherwise it falls back to the full matrix. Minors are taken
/// after rescaling to unit diagonal, so `tol` is relative.
pub fn positive_definite_matrix(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(OrbitronError::invalid("matrix", "must be square"));
    }
    check_symmetric(m)?;
    Ok(scaled_minors_positive(m, tol))
}

pub fn positive_definite(q: &QuadraticForm, tol: f64) -> Result<bool> {
    let full = DMatrix::from_fn(8, 8, |i, j| q.entries[(i, j)]);
    check_symmetric(&full)?;
    let block_of = |i: usize| BLOCKS.iter().position(|b| b.contains(&i)).unwrap();
    let block_diagonal = (0..8).all(|i| (0..8).all(|j| block_of(i) == block_of(j) || q.entries[(i, j)] == 0.0));
    if !block_diagonal {
        return Ok(scaled_minors_positive(&full, tol));
    }
    Ok(BLOCKS.iter().all(|idx| scaled_minors_positive(&q.block(idx), tol)))
}

/// `(1/3)(1 + (h/r0)²) / ((3/2)(r0/h)² - 1)`, the factor multiplying the
/// orbital angular momentum in the minimum-spin bound.
pub fn geometric_factor(ratio: f64) -> f64 {
    (1.0 + 1.0 / (ratio * ratio)) / (3.0 * (1.5 * ratio * ratio - 1.0))
}

/// Minimum spin for which the second variation is positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBound {
    /// Minimum intrinsic angular momentum [kg·m²/s].
    pub n0_min: f64,
    /// The same as a spin rate about the symmetry axis, `n0_min / I_axial` [rad/s].
    pub spin_rate_min: f64,
}

pub fn min_spin(params: &OrbitronParams, r0: f64) -> Result<SpinBound> {
    require_positive("r0", r0)?;
    let ratio = r0 / params.h;
    if !(ratio > geometric_lower_bound()) || 1.5 * ratio * ratio - 1.0 <= 0.0 {
        return Err(OrbitronError::SpinBoundUndefined { ratio });
    }
    let omega = crate::equilibrium::orbital_frequency(params, r0)?;
    let n0_min = omega / params.alpha() + geometric_factor(ratio) * omega * params.mass * r0 * r0;
    Ok(SpinBound {
        n0_min,
        spin_rate_min: n0_min / params.i_axial,
    })
}

/// Analytic and matrix verdicts for one `(r0, n0)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub equilibrium: EquilibriumSolution,
    /// `r0 / h`
    pub ratio: f64,
    pub geometric_lo: f64,
    pub geometric_hi: f64,
    pub geometric_ok: bool,
    /// `(omega/alpha)(alpha n0 - omega)` [J]
    pub dynamic_lhs: f64,
    /// `K / ((3/2)(r0/h)² - 1)` [J]; infinite below the geometric window.
    pub dynamic_rhs: f64,
    pub dynamic_ok: bool,
    pub q_positive_definite: bool,
    pub spin_bound: Option<SpinBound>,
    pub q: QuadraticForm,
}

impl StabilityReport {
    /// Both analytic conditions hold.
    pub fn conditions_hold(&self) -> bool {
        self.geometric_ok && self.dynamic_ok
    }

    /// The analytic reduction and the matrix test give the same verdict.
    pub fn verdicts_agree(&self) -> bool {
        self.conditions_hold() == self.q_positive_definite
    }
}

pub fn stability_conditions(params: &OrbitronParams, r0: f64, n0: f64) -> Result<StabilityReport> {
    let eq = make_equilibrium(params, r0, n0)?;
    let ratio = r0 / params.h;
    let lo = geometric_lower_bound();
    let geometric_ok = ratio > lo && ratio < GEOMETRIC_UPPER_BOUND;
    let alpha = params.alpha();
    let dynamic_lhs = eq.omega / alpha * (alpha * n0 - eq.omega);
    let denom = 1.5 * ratio * ratio - 1.0;
    let dynamic_rhs = if denom > 0.0 { eq.k / denom } else { f64::INFINITY };
    let dynamic_ok = dynamic_lhs > dynamic_rhs;
    let q = build_q(params, &eq);
    let q_positive_definite = positive_definite(&q, PD_TOL)?;
    Ok(StabilityReport {
        equilibrium: eq,
        ratio,
        geometric_lo: lo,
        geometric_hi: GEOMETRIC_UPPER_BOUND,
        geometric_ok,
        dynamic_lhs,
        dynamic_rhs,
        dynamic_ok,
        q_positive_definite,
        spin_bound: min_spin(params, r0).ok(),
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MagnetSpecs;
    use approx::assert_relative_eq;

    fn params() -> OrbitronParams {
        OrbitronParams::from_magnet_specs(&MagnetSpecs::NDFEB_DISK).unwrap()
    }

    #[test]
    fn layout_and_symmetries() {
        let p = params();
        let eq = make_equilibrium(&p, 0.075, 1.8e-5).unwrap();
        let q = build_q(&p, &eq);
        use Variation::*;
        assert_eq!(q.entries, q.entries.transpose());
        assert_eq!(q.get(Nu1, Nu1), q.get(Nu2, Nu2));
        assert_eq!(q.get(Nu1, N1), q.get(Nu2, N2));
        assert_eq!(q.get(N1, N1), q.get(N2, N2));
        assert_eq!(q.get(P3, P3), 1.0 / p.mass);
        assert_relative_eq!(q.get(X2, X2), 4.0 * p.mass * eq.omega * eq.omega, max_relative = 1e-14);
        assert!(q.get(X1, X1) > 0.0);
        assert_eq!(
            QuadraticForm::basis_labels(),
            ["dx1", "dx2", "dp3", "dx3", "dnu1", "dn1", "dnu2", "dn2"]
        );
    }

    #[test]
    fn radial_entry_vanishes_at_upper_bound() {
        let p = params();
        let eq = make_equilibrium(&p, 2.0 * p.h, 1e-5).unwrap();
        assert_eq!(build_q(&p, &eq).get(Variation::X1, Variation::X1), 0.0);
    }

    #[test]
    fn embedding_columns() {
        let eq = make_equilibrium(&params(), 0.075, 1e-5).unwrap();
        let b = variation_embedding(&eq);
        let col = b.column(Variation::X2.index());
        assert_eq!(col[1], 1.0);
        assert_relative_eq!(col[3], eq.p0 / eq.r0);
        assert_eq!(col.iter().filter(|v| **v != 0.0).count(), 2);
        let col = b.column(Variation::X1.index());
        assert_relative_eq!(col[4], -eq.p0 / eq.r0);
    }

    #[test]
    fn free_body_limit() {
        // no field and no spin: only the kinetic terms survive
        let p = OrbitronParams { kappa: 0.0, ..params() };
        let eq = make_equilibrium(&p, 0.075, 0.0).unwrap();
        assert_eq!((eq.omega, eq.lambda1, eq.lambda2), (0.0, 0.0, 0.0));
        let oracle = projected_hessian_oracle(&p, &eq).unwrap();
        let mut expected = Matrix8::zeros();
        expected[(2, 2)] = 1.0 / p.mass;
        expected[(5, 5)] = p.alpha();
        expected[(7, 7)] = p.alpha();
        for i in 0..8 {
            for j in 0..8 {
                let e = expected[(i, j)];
                assert!((oracle[(i, j)] - e).abs() <= 1e-6 * e.abs().max(1.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn identity_and_negated_identity() {
        let id = QuadraticForm {
            entries: Matrix8::identity(),
        };
        assert!(positive_definite(&id, PD_TOL).unwrap());
        let neg = QuadraticForm {
            entries: -Matrix8::identity(),
        };
        assert!(!positive_definite(&neg, PD_TOL).unwrap());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = Matrix8::identity();
        m[(0, 3)] = 0.5;
        let err = positive_definite(&QuadraticForm { entries: m }, PD_TOL).unwrap_err();
        assert!(matches!(err, OrbitronError::NotSymmetric(_)));
    }

    #[test]
    fn dense_matrix_uses_full_minors() {
        // couples dx1 and dx3: indefinite although every block alone is fine
        let mut m = Matrix8::identity();
        m[(0, 3)] = 2.0;
        m[(3, 0)] = 2.0;
        assert!(!positive_definite(&QuadraticForm { entries: m }, PD_TOL).unwrap());
        m[(0, 3)] = 0.5;
        m[(3, 0)] = 0.5;
        assert!(positive_definite(&QuadraticForm { entries: m }, PD_TOL).unwrap());
    }

    #[test]
    fn geometric_factor_values() {
        assert_relative_eq!(geometric_factor(1.0), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(geometric_factor(1.5), 0.2027290448, max_relative = 1e-9);
    }

    #[test]
    fn spinless_orbit_fails_dynamic_condition() {
        let p = params();
        let report = stability_conditions(&p, 0.075, 0.0).unwrap();
        assert!(report.geometric_ok);
        assert!(report.dynamic_lhs < 0.0 && report.dynamic_rhs > 0.0);
        assert!(!report.dynamic_ok);
        assert!(!report.q_positive_definite);
    }

    #[test]
    fn paper_point_with_margin_is_positive_definite() {
        let p = params();
        let bound = min_spin(&p, 0.075).unwrap();
        let report = stability_conditions(&p, 0.075, 1.5 * bound.n0_min).unwrap();
        assert!(report.geometric_ok && report.dynamic_ok && report.q_positive_definite);
        assert!(report.verdicts_agree());
    }

    #[test]
    fn below_window_is_never_stable() {
        let p = params();
        for n0 in [0.0, 1e-5, 1e-3, 1.0] {
            let report = stability_conditions(&p, 0.5 * p.h, n0).unwrap();
            assert!(!report.geometric_ok);
            assert!(!report.q_positive_definite);
            assert!(report.spin_bound.is_none());
        }
    }

    #[test]
    fn spin_bound_is_the_dynamic_boundary() {
        let p = params();
        let bound = min_spin(&p, 0.075).unwrap();
        let at = stability_conditions(&p, 0.075, bound.n0_min).unwrap();
        assert_relative_eq!(at.dynamic_lhs, at.dynamic_rhs, max_relative = 1e-12);
        // the ω/α term is a small correction at this geometry
        let eq = make_equilibrium(&p, 0.075, 0.0).unwrap();
        assert!(eq.omega / p.alpha() < 0.02 * bound.n0_min);
    }

    #[test]
    fn spin_bound_undefined_below_window() {
        let p = params();
        let err = min_spin(&p, 0.8 * p.h).unwrap_err();
        assert!(matches!(err, OrbitronError::SpinBoundUndefined { .. }));
        assert!(min_spin(&p, 0.0).unwrap_err().is_validation());
    }
}
