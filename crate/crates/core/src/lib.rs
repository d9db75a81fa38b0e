//! Hamiltonian dynamics and stability of a small axisymmetric magnet orbiting
//! in the field of two fixed, opposite magnetic poles.
//!
//! The moving magnet is a point dipole `mu * nu` with rigid-body spin `n`.
//! The crate provides:
//!
//! * the field and the dipole potential energy with analytic partials
//!   ([`potential`]),
//! * the equations of motion in two equivalent forms and an RK4 propagator
//!   ([`dynamics`]),
//! * circular relative equilibria and their Lagrange multipliers
//!   ([`equilibrium`]),
//! * the 8×8 second-variation test, its closed-form reduction and the
//!   minimum spin needed for stability ([`stability`]),
//! * a seeded Monte Carlo harness perturbing the equilibrium ([`montecarlo`]).

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod potential;
pub mod stability;

pub use dynamics::{
    conserved_quantities, integrate, rhs_classical, rhs_hamiltonian, ConservedQuantities, DriftStats, StateDerivative,
    Trajectory,
};
pub use equilibrium::{k_constant, make_equilibrium, orbital_frequency, verify_critical_point, EquilibriumSolution};
pub use error::{OrbitronError, Result};
pub use model::{
    field_at, from_magnet_specs, scalar_invariants, DipoleState, MagnetSpecs, OrbitronParams, ScalarInvariants, Vec3,
};
pub use montecarlo::{deviation_metric, run_batch, sample_perturbed, BatchResult, PerturbationSpec};
pub use potential::{pole_distance, potential_energy, potential_gradients, Pole, PotentialGradients};
pub use stability::{
    build_q, min_spin, positive_definite, projected_hessian_oracle, stability_conditions, QuadraticForm, SpinBound,
    StabilityReport, Variation,
};
