//! Equations of motion, a fixed-step RK4 propagator and conserved quantities.
//!
//! Two right-hand sides are provided. [`rhs_hamiltonian`] works through the
//! axisymmetric invariants and the analytic partials of `U`.
//! [`rhs_classical`] uses force `∇(μ·B)`, torque `μ × B` and the Cartesian
//! field of the poles directly. They must agree to rounding.

use std::f64::consts::PI;

use crate::error::{require_positive, OrbitronError, Result};
use crate::model::{check_pole_clearance, field_at, scalar_invariants, DipoleState, OrbitronParams, Vec3};
use crate::potential::{potential_energy, potential_gradients};

/// Time derivative of a [`DipoleState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub dx: Vec3,
    pub dp: Vec3,
    pub dnu: Vec3,
    pub dn: Vec3,
}

impl StateDerivative {
    pub fn to_array(&self) -> [f64; 12] {
        DipoleState {
            x: self.dx,
            p: self.dp,
            nu: self.dnu,
            n: self.dn,
        }
        .to_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    /// Kinetic plus potential energy [J].
    pub energy: f64,
    /// z component of total angular momentum [kg·m²/s].
    pub j3: f64,
    /// `|nu|²`
    pub casimir_nu2: f64,
    /// `nu · n` [kg·m²/s]
    pub casimir_nun: f64,
}

pub fn rhs_hamiltonian(params: &OrbitronParams, state: &DipoleState) -> Result<StateDerivative> {
    let inv = scalar_invariants(state)?;
    let g = potential_gradients(params, &inv)?;
    let e_r = state.x / inv.r;
    let e_z = Vec3::z();
    let perp_ez = e_z - e_r * inv.c1;
    let perp_nu = state.nu - e_r * inv.c2;
    Ok(StateDerivative {
        dx: state.p / params.mass,
        dp: -e_r * g.du_dr - (perp_ez * g.du_dc1 + perp_nu * g.du_dc2) / inv.r,
        dnu: state.n.cross(&state.nu) * params.alpha(),
        dn: -state.nu.cross(&(e_r * g.du_dc2 + e_z * g.du_dc3)),
    })
}

/// Gradient of `m · B` with respect to position, from the Coulomb form of
/// each pole's field.
fn moment_field_gradient(params: &OrbitronParams, pos: &Vec3, moment: &Vec3) -> Vec3 {
    let c = params.mu0 / (4.0 * PI) * params.kappa;
    let mut grad = Vec3::zeros();
    for eps in [1.0, -1.0] {
        let d = pos - Vec3::new(0.0, 0.0, eps * params.h);
        let dist2 = d.norm_squared();
        let dist3 = dist2 * dist2.sqrt();
        let dist5 = dist3 * dist2;
        grad += (moment / dist3 - d * (3.0 * moment.dot(&d) / dist5)) * (eps * c);
    }
    grad
}

pub fn rhs_classical(params: &OrbitronParams, state: &DipoleState) -> Result<StateDerivative> {
    if !state.is_finite() {
        return Err(OrbitronError::NonFinite("dipole state"));
    }
    if state.x.norm() == 0.0 {
        return Err(OrbitronError::AtOrigin);
    }
    let field = field_at(params, &state.x)?;
    let moment = state.nu * params.mu;
    let moment_rate = state.n.cross(&moment) / params.i_perp;
    Ok(StateDerivative {
        dx: state.p / params.mass,
        dp: moment_field_gradient(params, &state.x, &moment),
        dnu: moment_rate / params.mu,
        dn: moment.cross(&field),
    })
}

pub fn conserved_quantities(params: &OrbitronParams, state: &DipoleState) -> Result<ConservedQuantities> {
    let inv = scalar_invariants(state)?;
    let kinetic = state.p.norm_squared() / (2.0 * params.mass) + 0.5 * params.alpha() * state.n.norm_squared();
    Ok(ConservedQuantities {
        energy: kinetic + potential_energy(params, &inv)?,
        j3: state.x.x * state.p.y - state.x.y * state.p.x + state.n.z,
        casimir_nu2: state.nu.norm_squared(),
        casimir_nun: state.nu.dot(&state.n),
    })
}

fn advance(state: &DipoleState, k: &StateDerivative, h: f64) -> DipoleState {
    DipoleState {
        x: state.x + k.dx * h,
        p: state.p + k.dp * h,
        nu: state.nu + k.dnu * h,
        n: state.n + k.dn * h,
    }
}

/// One classical RK4 step of the Hamiltonian equations.
pub fn rk4_step(params: &OrbitronParams, state: &DipoleState, dt: f64) -> Result<DipoleState> {
    let k1 = rhs_hamiltonian(params, state)?;
    let k2 = rhs_hamiltonian(params, &advance(state, &k1, 0.5 * dt))?;
    let k3 = rhs_hamiltonian(params, &advance(state, &k2, 0.5 * dt))?;
    let k4 = rhs_hamiltonian(params, &advance(state, &k3, dt))?;
    let w = dt / 6.0;
    let combine = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + (b + c) * 2.0 + d) * w;
    Ok(DipoleState {
        x: state.x + combine(k1.dx, k2.dx, k3.dx, k4.dx),
        p: state.p + combine(k1.dp, k2.dp, k3.dp, k4.dp),
        nu: state.nu + combine(k1.dnu, k2.dnu, k3.dnu, k4.dnu),
        n: state.n + combine(k1.dn, k2.dn, k3.dn, k4.dn),
    })
}

/// Projects a state back onto the Casimir level set `|nu| = 1`,
/// `nu · n = target_nun`. Only the `nu`-parallel part of `n` is touched.
pub fn project_casimirs(state: &DipoleState, target_nun: f64) -> DipoleState {
    let nu = state.nu.normalize();
    let n = state.n + nu * (target_nun - nu.dot(&state.n));
    DipoleState { nu, n, ..*state }
}

/// Why a propagation stopped before reaching its end time.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationFault {
    /// Time of the last good state [s].
    pub time: f64,
    pub error: OrbitronError,
}

/// Sampled solution of an initial value problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DipoleState>,
    pub conserved: Vec<ConservedQuantities>,
    /// Set when the run aborted; the samples above stop at the fault time.
    pub fault: Option<IntegrationFault>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.fault.is_none()
    }

    pub fn drift(&self) -> DriftStats {
        DriftStats::from_samples(&self.states, &self.conserved)
    }
}

/// Worst-case departure of the invariants from their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftStats {
    /// `max |E - E0| / |E0|`
    pub energy_rel: f64,
    /// `max |j3 - j3_0| / |j3_0|`
    pub j3_rel: f64,
    /// `max |nu·n - (nu·n)_0|` [kg·m²/s]
    pub casimir_nun_abs: f64,
    /// `max ||nu| - 1|`
    pub unit_axis_abs: f64,
}

impl DriftStats {
    pub fn from_samples(states: &[DipoleState], conserved: &[ConservedQuantities]) -> Self {
        let Some(first) = conserved.first() else {
            return Self::default();
        };
        let rel = |v: f64, v0: f64| {
            if v0 == 0.0 {
                (v - v0).abs()
            } else {
                ((v - v0) / v0).abs()
            }
        };
        let mut out = Self::default();
        for c in conserved {
            out.energy_rel = out.energy_rel.max(rel(c.energy, first.energy));
            out.j3_rel = out.j3_rel.max(rel(c.j3, first.j3));
            out.casimir_nun_abs = out.casimir_nun_abs.max((c.casimir_nun - first.casimir_nun).abs());
        }
        for s in states {
            out.unit_axis_abs = out.unit_axis_abs.max((s.nu.norm() - 1.0).abs());
        }
        out
    }
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub t_end: f64,
    pub dt: f64,
    /// Re-project onto the Casimir level set after every step.
    pub renormalize: bool,
}

impl StepPlan {
    pub fn new(t_end: f64, dt: f64, renormalize: bool) -> Result<Self> {
        require_positive("t_end", t_end)?;
        require_positive("dt", dt)?;
        Ok(Self { t_end, dt, renormalize })
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest.max(1.0) as usize
        } else {
            ratio.ceil() as usize
        }
    }

    fn time_of(&self, step: usize, total: usize) -> f64 {
        if step == total {
            self.t_end
        } else {
            step as f64 * self.dt
        }
    }
}

/// Outcome of [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub final_state: DipoleState,
    pub final_time: f64,
    pub steps_taken: usize,
    pub fault: Option<IntegrationFault>,
}

/// Integrates from `initial`, handing every accepted state (including the
/// initial one at `t = 0`) to `observer`.
///
/// A state that lands at the origin, inside the pole guard or becomes
/// non-finite ends the run with a fault; it is not passed to the observer.
pub fn propagate<F>(
    params: &OrbitronParams,
    initial: &DipoleState,
    plan: &StepPlan,
    mut observer: F,
) -> Result<Propagation>
where
    F: FnMut(f64, &DipoleState),
{
    initial.validate()?;
    admissible(params, initial)?;
    StepPlan::new(plan.t_end, plan.dt, plan.renormalize)?;
    let target_nun = initial.nu.dot(&initial.n);
    let total = plan.steps();
    let mut state = *initial;
    let mut t = 0.0;
    observer(t, &state);
    for step in 1..=total {
        let t_next = plan.time_of(step, total);
        let next = rk4_step(params, &state, t_next - t).and_then(|mut s| {
            if plan.renormalize {
                s = project_casimirs(&s, target_nun);
            }
            admissible(params, &s)?;
            Ok(s)
        });
        match next {
            Ok(s) => {
                state = s;
                t = t_next;
                observer(t, &state);
            }
            Err(error) => {
                return Ok(Propagation {
                    final_state: state,
                    final_time: t,
                    steps_taken: step - 1,
                    fault: Some(IntegrationFault { time: t, error }),
                });
            }
        }
    }
    Ok(Propagation {
        final_state: state,
        final_time: t,
        steps_taken: total,
        fault: None,
    })
}

fn admissible(params: &OrbitronParams, state: &DipoleState) -> Result<()> {
    if !state.is_finite() {
        return Err(OrbitronError::NonFinite("dipole state"));
    }
    if state.x.norm() == 0.0 {
        return Err(OrbitronError::AtOrigin);
    }
    check_pole_clearance(params, &state.x)
}

/// RK4 integration recording every step.
pub fn integrate(
    params: &OrbitronParams,
    initial: &DipoleState,
    t_end: f64,
    dt: f64,
    renormalize: bool,
) -> Result<Trajectory> {
    let plan = StepPlan::new(t_end, dt, renormalize)?;
    let capacity = plan.steps() + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        conserved: Vec::with_capacity(capacity),
        fault: None,
    };
    let mut first_error = None;
    let run = propagate(params, initial, &plan, |t, s| {
        if first_error.is_some() {
            return;
        }
        match conserved_quantities(params, s) {
            Ok(c) => {
                traj.times.push(t);
                traj.states.push(*s);
                traj.conserved.push(c);
            }
            Err(error) => first_error = Some(IntegrationFault { time: t, error }),
        }
    })?;
    traj.fault = first_error.or(run.fault);
    Ok(traj)
}
