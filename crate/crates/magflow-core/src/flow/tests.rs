use super::*;
use crate::geom::{BumpSpec, ScalarFieldSpec, SurfaceConfig, SurfaceModel};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

fn constant_surface() -> SurfaceModel {
    SurfaceModel::new(SurfaceConfig::constant_model()).unwrap()
}

fn perturbed_surface() -> SurfaceModel {
    SurfaceModel::new(SurfaceConfig::perturbed_model()).unwrap()
}

fn origin_point(theta: f64) -> SMPoint {
    SMPoint::new(DiskPoint::origin(), theta)
}

/// Independent coframe from the defining formulas: alpha and beta via the
/// metric pairing with v and iv, psi via a finite-difference covariant
/// derivative along a straight chart curve.
fn coframe_oracle(surface: &SurfaceModel, p: &SMPoint, xi: [f64; 3]) -> [f64; 3] {
    let j = surface.total_exponent_jet(p.z());
    let e_phi = j.value.exp();
    let (c, s) = (p.theta.cos(), p.theta.sin());
    let alpha = e_phi * (c * xi[0] + s * xi[1]);
    let beta = e_phi * (-s * xi[0] + c * xi[1]);

    // psi(xi) = <D/dt v(t), iv>_g along Z(t) = (z + t xi_base, theta + t xi_theta)
    let h = 1e-6;
    let v_chart = |t: f64| -> (f64, f64) {
        let z = Complex64::new(p.base.x + t * xi[0], p.base.y + t * xi[1]);
        let th = p.theta + t * xi[2];
        let e = (-surface.total_exponent_jet(z).value).exp();
        (e * th.cos(), e * th.sin())
    };
    let (vxp, vyp) = v_chart(h);
    let (vxm, vym) = v_chart(-h);
    let vdot = ((vxp - vxm) / (2.0 * h), (vyp - vym) / (2.0 * h));
    let ch = surface.christoffel_at(p.base);
    let v0 = ((-j.value).exp() * c, (-j.value).exp() * s);
    // (Gamma(zdot) v)^k = Gamma^k_{ij} zdot^i v^j
    let gx = ch.gxxx * xi[0] * v0.0
        + ch.gxxy * (xi[0] * v0.1 + xi[1] * v0.0)
        + ch.gxyy * xi[1] * v0.1;
    let gy = ch.gyxx * xi[0] * v0.0
        + ch.gyxy * (xi[0] * v0.1 + xi[1] * v0.0)
        + ch.gyyy * xi[1] * v0.1;
    let dv = (vdot.0 + gx, vdot.1 + gy);
    let iv_chart = ((-j.value).exp() * -s, (-j.value).exp() * c);
    let psi = e_phi * e_phi * (dv.0 * iv_chart.0 + dv.1 * iv_chart.1);
    [alpha, beta, psi]
}

#[test]
fn frame_duality_against_oracle() {
    let surface = perturbed_surface();
    let mut state = 12345u64;
    let mut rand = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r = 0.75 * rand().sqrt();
        let a = 2.0 * PI * rand();
        let z = Complex64::from_polar(r, a);
        if !surface.group.contains(z, 0.0) {
            continue;
        }
        let p = SMPoint::new(DiskPoint::new(z.re, z.im).unwrap(), 2.0 * PI * rand());
        let frame = frame_at(&surface, &p);
        for (fi, fvec) in frame.iter().enumerate() {
            let forms = coframe_oracle(&surface, &p, *fvec);
            for (ci, val) in forms.iter().enumerate() {
                let expect = if fi == ci { 1.0 } else { 0.0 };
                worst = worst.max((val - expect).abs());
            }
        }
    }
    assert!(worst < 1e-9, "duality matrix deviation {worst}");
}

#[test]
fn implemented_coframe_is_exact_dual() {
    let surface = perturbed_surface();
    let p = SMPoint::new(DiskPoint::new(0.31, -0.18).unwrap(), 1.1);
    let frame = frame_at(&surface, &p);
    let coframe = coframe_at(&surface, &p);
    for (ci, form) in coframe.iter().enumerate() {
        for (fi, vec) in frame.iter().enumerate() {
            let v: f64 = form.iter().zip(vec.iter()).map(|(a, b)| a * b).sum();
            let expect = if ci == fi { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "pair ({ci},{fi}): {v}");
        }
    }
}

#[test]
fn geodesic_through_origin_is_diameter_of_unit_length() {
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.0, 1e-3);
    let orbit = flow.integrate(origin_point(0.0), 1.0).unwrap();
    // stays on the x-axis
    for p in &orbit.points {
        assert!(p.base.y.abs() < 1e-12);
    }
    // hyperbolic length 1: endpoint at euclid radius tanh(1/2)
    let end = orbit.end();
    assert!((end.base.x - (0.5f64).tanh()).abs() < 1e-9);
}

#[test]
fn lambda_one_orbit_is_horocycle() {
    // k_g = 1 orbit through the origin heading +x: the euclidean circle of
    // radius 1/2 centered at (0, 1/2), internally tangent to the boundary.
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 1.0, 1e-3);
    let orbit = flow.integrate(origin_point(0.0), 4.0).unwrap();
    for (i, p) in orbit.points.iter().enumerate() {
        // the orbit may be pulled back by deck maps once it leaves the
        // octagon; only check the un-reduced early stretch
        if orbit.stage_of[i] != 0 {
            break;
        }
        let d = (p.z() - Complex64::new(0.0, 0.5)).norm();
        assert!((d - 0.5).abs() < 1e-8, "sample {i} off circle by {d}");
    }
    let (_, ks) = geodesic_curvature_along(&surface, &orbit).unwrap();
    for k in ks {
        assert!((k - 1.0).abs() < 1e-6);
    }
}

#[test]
fn hypercycle_matches_closed_form() {
    // lambda = 0.5: constant-distance curve around the conjugated axis.
    let surface = constant_surface();
    let lambda = 0.5f64;
    let flow = MagneticFlow::new(&surface, lambda, 1e-3);
    let t_max = 2.5;
    let orbit = flow.integrate(origin_point(0.0), t_max).unwrap();
    let d = lambda.atanh();
    let m = MobiusMap::translation(FRAC_PI_2, d);
    let rate = (1.0 - lambda * lambda).sqrt();
    for (i, (&t, p)) in orbit.times.iter().zip(orbit.points.iter()).enumerate() {
        if orbit.stage_of[i] != 0 {
            break;
        }
        let ts = MobiusMap::translation(0.0, t * rate);
        let z_cf = m.compose(&ts).compose(&m.inverse()).apply(Complex64::new(0.0, 0.0));
        assert!(
            (p.z() - z_cf).norm() < 1e-6,
            "t={t}: {} vs {}",
            p.z(),
            z_cf
        );
    }
    // constant geodesic curvature lambda
    let (_, ks) = geodesic_curvature_along(&surface, &orbit).unwrap();
    for k in &ks {
        assert!((k - lambda).abs() < 1e-6);
    }
}

#[test]
fn geodesic_curvature_tracks_variable_magnetic_density() {
    let cfg = SurfaceConfig {
        name: "varf".into(),
        magnetic: ScalarFieldSpec {
            constant: 1.0,
            bumps: vec![BumpSpec {
                center: [0.1, -0.05],
                width: 0.5,
                amplitude: 0.3,
            }],
        },
        ..SurfaceConfig::default()
    };
    let surface = SurfaceModel::new(cfg).unwrap();
    let lambda = 0.3;
    let flow = MagneticFlow::new(&surface, lambda, 1e-3);
    let orbit = flow.integrate(origin_point(0.7), 3.0).unwrap();
    let (times, ks) = geodesic_curvature_along(&surface, &orbit).unwrap();
    let mut worst = 0.0f64;
    for (&t, &k) in times.iter().zip(ks.iter()) {
        let idx = orbit.times.iter().position(|&u| (u - t).abs() < 1e-12).unwrap();
        let f = surface.magnetic_density(orbit.points[idx].z());
        worst = worst.max((k - lambda * f).abs());
    }
    assert!(worst < 1e-5, "k_g tracking residual {worst}");
}

#[test]
fn liouville_determinant_is_one() {
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.4, 1e-3);
    let p = SMPoint::new(DiskPoint::new(0.1, 0.2).unwrap(), 0.9);
    assert_eq!(liouville_jacobian(&flow, p, 0.0).unwrap(), 1.0);
    let det = liouville_jacobian(&flow, p, 10.0).unwrap();
    assert!((det - 1.0).abs() < 1e-5, "det = {det}");

    let surface = perturbed_surface();
    let flow = MagneticFlow::new(&surface, 0.2, 1e-3);
    let det = liouville_jacobian(&flow, p, 10.0).unwrap();
    assert!((det - 1.0).abs() < 1e-4, "perturbed det = {det}");
}

#[test]
fn commutator_residuals_small_and_curvature_coefficient() {
    let surface = constant_surface();
    let p = origin_point(0.3);
    let res = commutator_check(&surface, &p, 1e-4);
    for (i, r) in res.iter().enumerate() {
        assert!(*r < 1e-6, "bracket residual {i}: {r}");
    }
    // [X,H] along V reads off K
    let surface = perturbed_surface();
    let p = SMPoint::new(DiskPoint::new(0.25, 0.1).unwrap(), 1.4);
    let field = |which: usize, s: [f64; 3]| -> [f64; 3] {
        let q = SMPoint::new(DiskPoint { x: s[0], y: s[1] }, s[2]);
        frame_at(&surface, &q)[which]
    };
    let h = 1e-4;
    let s0 = [p.base.x, p.base.y, p.theta];
    let mut xh = [0.0; 3];
    for dir in 0..3 {
        let mut ep = s0;
        ep[dir] += h;
        let mut em = s0;
        em[dir] -= h;
        let x0 = field(0, s0);
        let h0 = field(1, s0);
        let hp = field(1, ep);
        let hm = field(1, em);
        let xp = field(0, ep);
        let xm = field(0, em);
        for i in 0..3 {
            xh[i] += x0[dir] * (hp[i] - hm[i]) / (2.0 * h) - h0[dir] * (xp[i] - xm[i]) / (2.0 * h);
        }
    }
    let k = surface.curvature_at(p.base);
    assert!((xh[2] - k).abs() < 1e-4, "V-coefficient {} vs K {}", xh[2], k);
}

#[test]
fn fiber_rotation_by_pi_flips_x() {
    let surface = perturbed_surface();
    let p = SMPoint::new(DiskPoint::new(0.2, -0.3).unwrap(), 0.8);
    let f1 = frame_at(&surface, &p);
    let f2 = frame_at(&surface, &p.flipped());
    for i in 0..3 {
        assert!((f2[0][i] + f1[0][i]).abs() < 1e-14, "X component {i}");
    }
    // flowing along V by 2 pi returns the point
    let q = SMPoint::new(p.base, p.theta + std::f64::consts::TAU);
    assert!((q.theta - p.theta).abs() < 1e-12);
}

#[test]
fn flip_relation_holds_only_for_geodesic_flow() {
    let surface = perturbed_surface();
    let p = SMPoint::new(DiskPoint::new(0.15, 0.22).unwrap(), 2.1);
    let t = 1.7;
    let flow0 = MagneticFlow::new(&surface, 0.0, 1e-3);
    let a = flow0.integrate(p.flipped(), t).unwrap().end();
    let b = flow0.integrate(p, -t).unwrap().end().flipped();
    assert!(sm_distance(&surface, &a, &b) < 1e-7, "geodesic flip");

    let flow_mag = MagneticFlow::new(&surface, 0.5, 1e-3);
    let a = flow_mag.integrate(p.flipped(), t).unwrap().end();
    let b = flow_mag.integrate(p, -t).unwrap().end().flipped();
    assert!(
        sm_distance(&surface, &a, &b) > 1e-3,
        "magnetic flow should break the flip relation"
    );
}

#[test]
fn reversibility_round_trip() {
    let surface = perturbed_surface();
    let flow = MagneticFlow::new(&surface, 0.3, 1e-3);
    let p = SMPoint::new(DiskPoint::new(-0.2, 0.35).unwrap(), 4.0);
    let fwd = flow.integrate(p, 3.0).unwrap();
    let back = flow.integrate(fwd.end(), -3.0).unwrap();
    let d = sm_distance(&surface, &p, &back.end());
    assert!(d < 1e-7, "round trip distance {d}");
}

#[test]
fn reintegration_reproduces_samples() {
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.6, 1e-3);
    let p = SMPoint::new(DiskPoint::new(0.05, -0.1).unwrap(), 1.0);
    let orbit = flow.integrate(p, 2.0).unwrap();
    let k = orbit.len() / 2;
    let rest = flow
        .integrate(orbit.points[k], orbit.duration() - orbit.times[k])
        .unwrap();
    let d = sm_distance(&surface, &orbit.end(), &rest.end());
    assert!(d < 1e-10, "re-integration mismatch {d}");
}

#[test]
fn unit_speed_is_conserved() {
    let surface = perturbed_surface();
    let flow = MagneticFlow::new(&surface, 0.4, 1e-3);
    let p = SMPoint::new(DiskPoint::new(0.3, 0.1).unwrap(), 0.2);
    let orbit = flow.integrate(p, 5.0).unwrap();
    let res = orbit.unit_speed_residual(&surface);
    assert!(res < 1e-9, "unit-speed residual {res}");
}

#[test]
fn variational_transport_constant_curvature_growth() {
    // lambda = 0: transverse block follows y'' = y (cosh/sinh in the frame).
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.0, 1e-3);
    let p = origin_point(0.4);
    let t = 2.0;
    let tr = variational_transport(&flow, p, t, 1e12).unwrap();
    // transverse (H,V) block of the frame transport
    let a = tr.matrix;
    let block = [
        [a.m[1][1], a.m[1][2]],
        [a.m[2][1], a.m[2][2]],
    ];
    // expected [[cosh t, sinh t], [sinh t, cosh t]]
    assert!((block[0][0] - t.cosh()).abs() < 1e-5, "HH {}", block[0][0]);
    assert!((block[1][1] - t.cosh()).abs() < 1e-5);
    assert!((block[0][1] - t.sinh()).abs() < 1e-5);
    assert!((block[1][0] - t.sinh()).abs() < 1e-5);
    assert!((a.det() - 1.0).abs() < 1e-6);
}

#[test]
fn variational_transport_magnetic_rate() {
    // lambda = 0.6: transverse growth rate sqrt(1 - lambda^2) = 0.8.
    let surface = constant_surface();
    let lambda = 0.6;
    let flow = MagneticFlow::new(&surface, lambda, 1e-3);
    let p = SMPoint::new(DiskPoint::new(0.12, -0.07).unwrap(), 2.2);
    // growth rate between two horizons (cancels the constant factor)
    let norm_at = |t: f64| -> f64 {
        let tr = variational_transport(&flow, p, t, 1e14).unwrap();
        let v = tr.matrix.mul_vec([0.0, 1.0, 0.3]);
        let vq = [v[1], v[2] - lambda * v[0]];
        (vq[0] * vq[0] + vq[1] * vq[1]).sqrt()
    };
    let (t1, t2) = (6.0, 18.0);
    let growth = (norm_at(t2).ln() - norm_at(t1).ln()) / (t2 - t1);
    let expect = (1.0 - lambda * lambda).sqrt();
    assert!(
        (growth - expect).abs() < 1e-3,
        "growth {growth} vs {expect}"
    );
    let t = t2;
    let tr = variational_transport(&flow, p, t, 1e14).unwrap();
    // flow direction is neutral: X_lambda maps to X_lambda
    let xl = tr.matrix.mul_vec([1.0, 0.0, lambda]);
    assert!((xl[0] - 1.0).abs() < 1e-8);
    assert!(xl[1].abs() < 1e-8);
    assert!((xl[2] - lambda).abs() < 1e-8);
}

#[test]
fn adaptive_integration_agrees_with_fixed_step() {
    let surface = perturbed_surface();
    let mut flow = MagneticFlow::new(&surface, 0.35, 1e-3);
    let p = SMPoint::new(DiskPoint::new(0.1, 0.4).unwrap(), 5.3);
    let a = flow.integrate(p, 2.0).unwrap().end();
    flow.method = Method::Adaptive { tol: 1e-12 };
    flow.dt = 5e-3;
    let b = flow.integrate(p, 2.0).unwrap().end();
    assert!(sm_distance(&surface, &a, &b) < 1e-8);
}
