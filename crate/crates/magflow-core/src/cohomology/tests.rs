use super::oneform::periods;
use super::*;
use crate::fourier::{apply_x_lambda_mode, random_quotient_field};
use crate::geom::bump::dist_sq_jet;
use crate::geom::{SurfaceConfig, SurfaceModel};
use crate::grid::SMGrid;

fn constant_surface() -> SurfaceModel {
    SurfaceModel::new(SurfaceConfig::constant_model()).unwrap()
}

#[test]
fn closed_geodesic_has_translation_length_period() {
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.0, 1e-3);
    let word = surface.group.parse_word("a").unwrap();
    let orbit = find_closed_orbit(&flow, &word).unwrap();
    let ell = word.map.translation_length();
    assert!(
        (orbit.period - ell).abs() < 1e-6,
        "period {} vs translation length {ell}",
        orbit.period
    );
    assert!(orbit.closure_error < 1e-8);
}

#[test]
fn magnetic_closed_orbit_is_hypercycle() {
    let surface = constant_surface();
    let lambda = 0.5;
    let flow = MagneticFlow::new(&surface, lambda, 1e-3);
    let word = surface.group.parse_word("a").unwrap();
    let orbit = find_closed_orbit(&flow, &word).unwrap();
    let expect = constant_curvature_period(word.map.translation_length(), lambda);
    assert!(
        (orbit.period - expect).abs() < 1e-6,
        "period {} vs hypercycle {expect}",
        orbit.period
    );
    // constant distance from the axis of the word:
    // cosh d(z, geodesic(u, v)) = 2 |z-u| |z-v| / ((1-|z|^2) |u-v|)
    let (rep, att) = word.map.axis_endpoints().unwrap();
    let dist_to_axis = |z: num_complex::Complex64| -> f64 {
        let num = (z - rep).norm() * (z - att).norm();
        let den = (1.0 - z.norm_sqr()) * (rep - att).norm() / 2.0;
        (num / den).acosh()
    };
    let d_expect = lambda.atanh();
    for (i, _p) in orbit.orbit.points.iter().enumerate().step_by(200) {
        // map back to the cover chart of the seed for a clean comparison
        let (z, _) = orbit.orbit.sample_in_chart_of(0, i);
        let d = dist_to_axis(z);
        assert!(
            (d - d_expect).abs() < 1e-5,
            "sample {i}: axis distance {d} vs {d_expect}"
        );
    }
}

#[test]
fn closed_orbit_persists_under_step_refinement() {
    let surface = SurfaceModel::new(SurfaceConfig::perturbed_model()).unwrap();
    let word = surface.group.parse_word("b").unwrap();
    let flow1 = MagneticFlow::new(&surface, 0.2, 1e-3);
    let flow2 = MagneticFlow::new(&surface, 0.2, 5e-4);
    let o1 = find_closed_orbit(&flow1, &word).unwrap();
    let o2 = find_closed_orbit(&flow2, &word).unwrap();
    assert!(
        (o1.period - o2.period).abs() < 1e-5,
        "period shift {} vs {}",
        o1.period,
        o2.period
    );
}

#[test]
fn orbit_integral_of_one_is_period() {
    let surface = constant_surface();
    let flow = MagneticFlow::new(&surface, 0.3, 1e-3);
    let word = surface.group.parse_word("a").unwrap();
    let orbit = find_closed_orbit(&flow, &word).unwrap();
    let (val, err) = orbit_integral(&orbit.orbit, |_| 1.0);
    assert!((val - orbit.period).abs() < 1e-9 + err);
}

#[test]
fn orbit_integral_of_coboundary_vanishes() {
    // analytic coboundary: g = B(z) cos(theta) with an interior-supported
    // bump; X_lambda(g) evaluated in closed form telescopes to zero over
    // closed orbits, so only quadrature and closure error remain.
    let surface = constant_surface();
    let lambda = 0.3;
    let flow = MagneticFlow::new(&surface, lambda, 1e-3);
    let c = Complex64::new(0.1, -0.05);
    let r2 = 1.25f64 * 1.25;
    let x_lambda_g = |p: &crate::flow::SMPoint| -> f64 {
        let z = p.z();
        let d2 = dist_sq_jet(z, c);
        let s = d2.value / r2;
        if s >= 1.0 {
            return 0.0;
        }
        let b = (1.0 - s).powi(4);
        let b1 = -4.0 * (1.0 - s).powi(3) / r2;
        let (bx, by) = (b1 * d2.dx, b1 * d2.dy);
        let jet = surface.total_exponent_jet(z);
        let e = (-jet.value).exp();
        let (co, si) = (p.theta.cos(), p.theta.sin());
        // g = B cos(theta): dg = (B_x cos, B_y cos, -B sin)
        let (dx_g, dy_g, dtheta_g) = (bx * co, by * co, -b * si);
        e * (co * dx_g + si * dy_g + (jet.dy * co - jet.dx * si) * dtheta_g)
            + lambda * surface.magnetic_density(z) * dtheta_g
    };
    for w in ["a", "c"] {
        let word = surface.group.parse_word(w).unwrap();
        let orbit = find_closed_orbit(&flow, &word).unwrap();
        let (val, err) = orbit_integral(&orbit.orbit, x_lambda_g);
        let budget = err + 1e-7;
        assert!(
            val.abs() < budget,
            "word {w}: integral {val} exceeds budget {budget}"
        );
    }
}

#[test]
fn harmonic_basis_has_unit_periods() {
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 24, 32).unwrap();
    let basis = harmonic_basis(&surface, &grid).unwrap();
    for (k, form) in basis.iter().enumerate() {
        let per = periods(&surface, form).unwrap();
        for (j, &p) in per.iter().enumerate() {
            let expect = if j == k { 1.0 } else { 0.0 };
            assert!(
                (p - expect).abs() < 1e-3,
                "basis {k} period {j}: {p} vs {expect}"
            );
        }
    }
}

#[test]
fn harmonic_form_integral_over_orbit_matches_class_pairing() {
    // the orbit of word `a` pairs with the dual basis form: integral over
    // the closed orbit of the fiber restriction equals the period
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 24, 32).unwrap();
    let basis = harmonic_basis(&surface, &grid).unwrap();
    let flow = MagneticFlow::new(&surface, 0.0, 1e-3);
    let word = surface.group.parse_word("a").unwrap();
    let orbit = find_closed_orbit(&flow, &word).unwrap();
    let (val, err) = orbit_integral(&orbit.orbit, |p| {
        basis[0].restriction_at(&grid, &surface, p).unwrap()
    });
    assert!(
        (val - 1.0).abs() < 0.02 + err,
        "pairing integral {val} (err {err})"
    );
    // a form dual to another generator integrates to ~0
    let (val2, err2) = orbit_integral(&orbit.orbit, |p| {
        basis[2].restriction_at(&grid, &surface, p).unwrap()
    });
    assert!(val2.abs() < 0.02 + err2, "off-pairing integral {val2}");
}

#[test]
fn transport_recovers_synthetic_coboundary() {
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 24, 32).unwrap();
    let lambda = 0.3;
    let g_true = random_quotient_field(&surface, &grid, 271, 2, 2);
    let f = apply_x_lambda_mode(&grid, &g_true, lambda).unwrap();
    let sol = solve_transport(&grid, &surface, &f, lambda, SolveOptions::default()).unwrap();
    let tau = (5.0 * sol.relative_residual).max(1e-10);
    // mean-aligned comparison (solution is zero-mean)
    let mean_true = {
        let m0 = g_true.mode(0);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..grid.n_nodes() {
            s += grid.weights[i] * m0[i];
        }
        s
    };
    let mut diff_sq = 0.0;
    for n in sol.g.min_mode()..=sol.g.max_mode() {
        let a = sol.g.mode(n);
        let b = g_true.mode(n);
        let d: Vec<Complex64> = (0..grid.n_nodes())
            .map(|i| {
                let shift = if n == 0 { mean_true } else { Complex64::new(0.0, 0.0) };
                a[i] - (b[i] - shift)
            })
            .collect();
        diff_sq += grid.mode_norm_sq(&d);
    }
    let g_norm = g_true.norm_sq(&grid).sqrt();
    let rel = diff_sq.sqrt() / g_norm;
    assert!(rel < 20.0 * tau + 1e-6, "recovery error {rel} (tau {tau})");
    // tail modes below the solver floor
    let check = fourier_support_check(&grid, &sol, 3, tau * g_norm);
    assert!(check.pass, "offending tail modes: {:?}", check.offending);
}

#[test]
fn exact_one_form_yields_zero_mode_solution() {
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 24, 32).unwrap();
    let lambda = 0.25;
    // potential: interior-supported smooth bump
    let c = Complex64::new(0.1, -0.05);
    let h: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&z| {
            let s = dist_sq_jet(z, c).value / (1.3 * 1.3);
            if s >= 1.0 {
                0.0
            } else {
                (1.0 - s).powi(4)
            }
        })
        .collect();
    let form = OneForm::exact_from_potential(&grid, &h);
    let f = form.fiber_field(&grid);
    let sol = solve_transport(&grid, &surface, &f, lambda, SolveOptions::default()).unwrap();
    assert!(
        sol.relative_residual < 5e-3,
        "exact form residual {}",
        sol.relative_residual
    );
    // solution concentrated in H_0
    let total = sol.g.norm_sq(&grid);
    let zero = grid.mode_norm_sq(sol.g.mode(0));
    assert!(
        zero / total > 0.999,
        "H0 fraction {} (profile {:?})",
        zero / total,
        sol.mode_profile
    );
    // g matches the pull-back of the potential (mean aligned)
    let mean_h: f64 = (0..grid.n_nodes())
        .map(|i| grid.weights[i] * h[i])
        .sum();
    let mut worst = 0.0f64;
    for i in 0..grid.n_nodes() {
        let want = h[i] - mean_h;
        worst = worst.max((sol.g.mode(0)[i].re - want).abs());
    }
    assert!(worst < 0.02, "potential recovery deviation {worst}");
}

#[test]
fn harmonic_one_form_has_residual_floor() {
    let surface = constant_surface();
    let lambda = 0.25;
    let floor_at = |across: usize| -> f64 {
        let grid = SMGrid::build(&surface, across, 32).unwrap();
        let basis = harmonic_basis(&surface, &grid).unwrap();
        let f = basis[0].fiber_field(&grid);
        let sol =
            solve_transport(&grid, &surface, &f, lambda, SolveOptions::default()).unwrap();
        sol.relative_residual
    };
    let f1 = floor_at(18);
    let f2 = floor_at(26);
    assert!(f1 > 0.05, "floor too small: {f1}");
    assert!(
        (f1 - f2).abs() / f1.max(f2) < 0.25,
        "floor not mesh-stable: {f1} vs {f2}"
    );
}

#[test]
fn zero_source_gives_zero_solution() {
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 20, 32).unwrap();
    let f = FourierField::zero(&grid);
    let sol = solve_transport(&grid, &surface, &f, 0.2, SolveOptions::default()).unwrap();
    assert!(sol.g.norm_sq(&grid) < 1e-24);
    let check = fourier_support_check(&grid, &sol, 0, 1e-10);
    assert!(check.pass);
}

#[test]
fn transport_margin_gate_names_inequality() {
    let surface = constant_surface();
    let grid = SMGrid::build(&surface, 16, 32).unwrap();
    let mut f = FourierField::zero(&grid);
    let ones = vec![Complex64::new(1.0, 0.0); grid.n_nodes()];
    f.set_mode(3, &ones);
    match solve_transport(&grid, &surface, &f, 0.6, SolveOptions::default()) {
        Err(MagError::HypothesisViolated { inequality, .. }) => {
            assert!(inequality.contains("max(N+1, 2)"), "{inequality}");
        }
        other => panic!("expected margin gate, got {:?}", other.map(|s| s.residual)),
    }
}
