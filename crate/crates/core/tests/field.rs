mod common;

use std::f64::consts::PI;

use common::*;
use nalgebra::Rotation3;
use orbitron_core::{field_at, potential_energy, potential_gradients, scalar_invariants, DipoleState};
use proptest::prelude::*;

fn position() -> impl Strategy<Value = V3> {
    // spherical coordinates with r in (0.3h, 5h) for h = 0.05
    (0.015..0.25f64, -1.0..1.0f64, 0.0..(2.0 * PI)).prop_filter_map("too close to a pole", |(r, c, phi)| {
        let s = (1.0 - c * c).sqrt();
        let x = V3::new(r * s * phi.cos(), r * s * phi.sin(), r * c);
        let h = 0.05;
        let clear = (x - V3::new(0.0, 0.0, h)).norm().min((x + V3::new(0.0, 0.0, h)).norm());
        (clear > 0.0025).then_some(x)
    })
}

fn unit() -> impl Strategy<Value = V3> {
    (-1.0..1.0f64, 0.0..(2.0 * PI)).prop_map(|(c, phi)| {
        let s = (1.0 - c * c).sqrt();
        V3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn invariants_unchanged_by_rotation_about_the_axis(x in position(), nu in unit(), angle in 0.0..(2.0 * PI)) {
        let rot = Rotation3::from_axis_angle(&V3::z_axis(), angle);
        let a = scalar_invariants(&DipoleState::new(x, V3::zeros(), nu, V3::zeros()).unwrap()).unwrap();
        let b = scalar_invariants(&DipoleState::new(rot * x, V3::zeros(), rot * nu, V3::zeros()).unwrap()).unwrap();
        prop_assert!((a.r - b.r).abs() <= 1e-15 * a.r);
        prop_assert!((a.c1 - b.c1).abs() <= 1e-14);
        prop_assert!((a.c2 - b.c2).abs() <= 1e-14);
        prop_assert!((a.c3 - b.c3).abs() <= 1e-15);
    }

    #[test]
    fn field_is_rotation_covariant(x in position(), angle in 0.0..(2.0 * PI)) {
        let params = reference_params();
        let rot = Rotation3::from_axis_angle(&V3::z_axis(), angle);
        let rotated = field_at(&params, &(rot * x)).unwrap();
        let expected = rot * field_at(&params, &x).unwrap();
        prop_assert!((rotated - expected).norm() <= 1e-13 * expected.norm());
    }

    #[test]
    fn field_is_divergence_free(x in position()) {
        let params = reference_params();
        let step = 1e-5 * x.norm();
        let mut div = 0.0;
        let mut size = 0.0_f64;
        for i in 0..3 {
            let mut e = V3::zeros();
            e[i] = step;
            let plus = field_at(&params, &(x + e)).unwrap();
            let minus = field_at(&params, &(x - e)).unwrap();
            div += (plus[i] - minus[i]) / (2.0 * step);
            size = size.max(((plus - minus) / (2.0 * step)).amax());
        }
        prop_assert!(div.abs() <= 1e-6 * size, "div {div:e} vs gradient size {size:e}");
    }

    #[test]
    fn library_field_matches_coulomb_sum(x in position()) {
        let params = reference_params();
        let b = field_at(&params, &x).unwrap();
        let reference = coulomb_field(&params, &x);
        prop_assert!((b - reference).norm() <= 1e-14 * reference.norm());
    }

    #[test]
    fn potential_is_minus_mu_dot_b(x in position(), nu in unit()) {
        let params = reference_params();
        let inv = scalar_invariants(&DipoleState::new(x, V3::zeros(), nu, V3::zeros()).unwrap()).unwrap();
        let u = potential_energy(&params, &inv).unwrap();
        let size = params.mu * coulomb_field(&params, &x).norm();
        prop_assert!((u - dipole_energy(&params, &x, &nu)).abs() <= 1e-12 * size);
    }
}

/// Outward flux through a sphere that encloses no pole, by Gauss-Legendre
/// quadrature in `cos(theta)` and the trapezoid rule in `phi`.
fn sphere_flux(center: V3, radius: f64) -> (f64, f64) {
    let params = reference_params();
    // 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half)
    let nodes = [
        (0.0950125098376374, 0.1894506104550685),
        (0.2816035507792589, 0.1826034150449236),
        (0.4580167776572274, 0.1691565193950025),
        (0.6178762444026438, 0.1495959888165767),
        (0.755404408355003, 0.1246289712555339),
        (0.8656312023878318, 0.0951585116824928),
        (0.9445750230732326, 0.0622535239386479),
        (0.9894009349916499, 0.0271524594117541),
    ];
    let n_phi = 64;
    let (mut flux, mut magnitude) = (0.0, 0.0);
    for &(node, weight) in &nodes {
        for c in [node, -node] as [f64; 2] {
            let s = (1.0 - c * c).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                let normal = V3::new(s * phi.cos(), s * phi.sin(), c);
                let b = field_at(&params, &(center + normal * radius)).unwrap();
                let w = weight * 2.0 * PI / n_phi as f64 * radius * radius;
                flux += w * b.dot(&normal);
                magnitude += w * b.norm();
            }
        }
    }
    (flux, magnitude)
}

#[test]
fn no_net_flux_through_empty_spheres() {
    for (center, radius) in [
        (V3::new(0.075, 0.0, 0.0), 0.02),
        (V3::new(0.0, 0.0, 0.0), 0.03),
        (V3::new(0.04, -0.03, 0.02), 0.015),
    ] {
        let (flux, magnitude) = sphere_flux(center, radius);
        assert!(flux.abs() < 1e-8 * magnitude, "flux {flux:e} vs {magnitude:e}");
    }
}

#[test]
fn sphere_around_one_pole_carries_its_charge() {
    let params = reference_params();
    let (flux, _) = sphere_flux(V3::new(0.0, 0.0, params.h), 0.02);
    let expected = params.mu0 * params.kappa;
    assert!((flux - expected).abs() < 1e-6 * expected);
}

#[test]
fn far_field_is_that_of_a_point_dipole() {
    // the pair is a dipole of moment 2 h kappa along e3
    let params = reference_params();
    let moment = V3::new(0.0, 0.0, 2.0 * params.h * params.kappa);
    let mut rng = rng(3);
    for _ in 0..100 {
        let e = unit_vector(&mut rng);
        let x = e * (100.0 * params.h);
        let r = x.norm();
        let dipole = (e * (3.0 * moment.dot(&e)) - moment) * (params.mu0 / (4.0 * PI * r.powi(3)));
        let b = field_at(&params, &x).unwrap();
        assert!((b - dipole).norm() < 0.01 * dipole.norm());
    }
}

#[test]
fn analytic_partials_match_differences() {
    let params = reference_params();
    let mut rng = rng(21);
    for _ in 0..1000 {
        let s = random_state(&params, &mut rng);
        let inv = scalar_invariants(&s).unwrap();
        let g = potential_gradients(&params, &inv).unwrap();
        let analytic = [g.du_dr * inv.r, g.du_dc1, g.du_dc2, g.du_dc3];
        let scale = analytic.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let base = [inv.r, inv.c1, inv.c2, inv.c3];
        for k in 0..4 {
            let step = if k == 0 { 1e-5 * inv.r } else { 1e-5 };
            let eval = |sign: f64| {
                let mut v = base;
                v[k] += sign * step;
                let shifted = orbitron_core::ScalarInvariants {
                    r: v[0],
                    c1: v[1],
                    c2: v[2],
                    c3: v[3],
                };
                potential_energy(&params, &shifted).unwrap()
            };
            let mut numeric = (eval(1.0) - eval(-1.0)) / (2.0 * step);
            if k == 0 {
                numeric *= inv.r;
            }
            assert!(
                (numeric - analytic[k]).abs() < 1e-6 * scale,
                "partial {k}: {numeric:e} vs {:e}",
                analytic[k]
            );
        }
    }
}

#[test]
fn midpoint_field_is_axial() {
    // at the origin both poles push the field the same way along -e3
    let params = reference_params();
    let b = field_at(&params, &V3::new(0.0, 0.0, 1e-9)).unwrap();
    let expected = -2.0 * params.mu0 * params.kappa / (4.0 * PI * params.h * params.h);
    assert!((b.z - expected).abs() < 1e-6 * expected.abs());
    assert!(b.x.abs() < 1e-12 && b.y.abs() < 1e-12);
}
