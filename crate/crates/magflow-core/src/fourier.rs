//! Vertical Fourier decomposition on the discretized unit tangent bundle.
//!
//! A function on `SM` is stored per vertical mode `n` (eigenvalue of `-iV`).
//! The raising and lowering operators act per mode:
//!
//! ```text
//!   (eta+ f)_{n+1} = e^{-Phi} (d/dz  f_n  -  n (dPhi/dz)  f_n)
//!   (eta- f)_{n-1} = e^{-Phi} (d/dz̄ f_n  +  n (dPhi/dz̄) f_n)
//! ```
//!
//! with `d/dz` the Wirtinger derivative realized by centered differences and
//! group-aware ghost closure; `V` is exact (spectral in the fiber angle).
//! Everything is measured in the normalized Liouville inner product carried
//! by the grid weights.

use crate::error::{MagError, Result};
use crate::geom::bump::dist_sq_jet;
use crate::geom::SurfaceModel;
use crate::grid::SMGrid;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Coefficients of a function on SM, indexed by (vertical mode, base node).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    pub n_nodes: usize,
    pub n_theta: usize,
    /// `coeffs[(n + n_theta/2) * n_nodes + node]`.
    pub coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zero(grid: &SMGrid) -> Self {
        Self {
            n_nodes: grid.n_nodes(),
            n_theta: grid.n_theta,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_nodes() * grid.n_theta],
        }
    }

    pub fn min_mode(&self) -> i32 {
        -(self.n_theta as i32) / 2
    }

    pub fn max_mode(&self) -> i32 {
        self.n_theta as i32 / 2 - 1
    }

    #[inline]
    pub fn mode_index(&self, n: i32) -> usize {
        (n + self.n_theta as i32 / 2) as usize
    }

    pub fn mode(&self, n: i32) -> &[Complex64] {
        let i = self.mode_index(n) * self.n_nodes;
        &self.coeffs[i..i + self.n_nodes]
    }

    pub fn mode_mut(&mut self, n: i32) -> &mut [Complex64] {
        let i = self.mode_index(n) * self.n_nodes;
        &mut self.coeffs[i..i + self.n_nodes]
    }

    pub fn set_mode(&mut self, n: i32, values: &[Complex64]) {
        self.mode_mut(n).copy_from_slice(values);
    }

    /// Total squared Liouville norm (Parseval over modes).
    pub fn norm_sq(&self, grid: &SMGrid) -> f64 {
        let mut s = 0.0;
        for n in self.min_mode()..=self.max_mode() {
            s += grid.mode_norm_sq(self.mode(n));
        }
        s
    }

    /// Per-mode norms `(n, ||f_n||)`.
    pub fn mode_profile(&self, grid: &SMGrid) -> Vec<(i32, f64)> {
        (self.min_mode()..=self.max_mode())
            .map(|n| (n, grid.mode_norm_sq(self.mode(n)).sqrt()))
            .collect()
    }

    /// Largest `|n|` whose mode energy exceeds `threshold` times the total.
    pub fn band(&self, grid: &SMGrid, threshold: f64) -> i32 {
        let total = self.norm_sq(grid).max(1e-300);
        let mut band = 0;
        for n in self.min_mode()..=self.max_mode() {
            if grid.mode_norm_sq(self.mode(n)) > threshold * total {
                band = band.max(n.abs());
            }
        }
        band
    }

    /// Deviation from the real-field symmetry `conj(f_n) = f_{-n}`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 1..=(-self.min_mode()).min(self.max_mode()) {
            let a = self.mode(n);
            let b = self.mode(-n);
            for i in 0..self.n_nodes {
                worst = worst.max((a[i].conj() - b[i]).norm());
            }
        }
        worst
    }

    /// Enforce `f_{-n} = conj(f_n)` (copying from non-negative modes).
    pub fn symmetrize_real(&mut self) {
        for n in 1..=(-self.min_mode() - 1).min(self.max_mode()) {
            let src: Vec<Complex64> = self.mode(n).iter().map(|v| v.conj()).collect();
            self.set_mode(-n, &src);
        }
        // zero mode must be real
        for v in self.mode_mut(0) {
            *v = Complex64::new(v.re, 0.0);
        }
        // unpaired bottom mode cannot be conj-matched: clear it
        let min = self.min_mode();
        for v in self.mode_mut(min) {
            *v = Complex64::new(0.0, 0.0);
        }
    }

    pub fn add_scaled(&mut self, other: &FourierField, s: Complex64) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += s * b;
        }
    }
}

/// Per-node fiber samples -> modes (plain DFT; n_theta is small).
/// Returns the field and the top-band energy fraction (aliasing indicator).
pub fn project_modes(grid: &SMGrid, samples: &[Complex64]) -> (FourierField, f64) {
    let nn = grid.n_nodes();
    let nt = grid.n_theta;
    assert_eq!(samples.len(), nn * nt);
    let mut field = FourierField::zero(grid);
    let inv = 1.0 / nt as f64;
    for n in field.min_mode()..=field.max_mode() {
        let idx = field.mode_index(n) * nn;
        for node in 0..nn {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..nt {
                let th = TAU * k as f64 / nt as f64;
                acc += samples[node * nt + k] * Complex64::from_polar(1.0, -(n as f64) * th);
            }
            field.coeffs[idx + node] = acc * inv;
        }
    }
    // aliasing indicator: energy at the edge modes
    let total = field.norm_sq(grid).max(1e-300);
    let edge = grid.mode_norm_sq(field.mode(field.min_mode()))
        + grid.mode_norm_sq(field.mode(field.max_mode()));
    (field, edge / total)
}

/// Modes -> per-node fiber samples.
pub fn synthesize(grid: &SMGrid, field: &FourierField) -> Vec<Complex64> {
    let nn = grid.n_nodes();
    let nt = grid.n_theta;
    let mut out = vec![Complex64::new(0.0, 0.0); nn * nt];
    for n in field.min_mode()..=field.max_mode() {
        let m = field.mode(n);
        for node in 0..nn {
            if m[node].norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..nt {
                let th = TAU * k as f64 / nt as f64;
                out[node * nt + k] += m[node] * Complex64::from_polar(1.0, n as f64 * th);
            }
        }
    }
    out
}

/// `V = d/dtheta`, spectral: multiplies mode `n` by `i n`.
pub fn apply_v(field: &FourierField) -> FourierField {
    let mut out = field.clone();
    for n in field.min_mode()..=field.max_mode() {
        let s = Complex64::new(0.0, n as f64);
        for v in out.mode_mut(n) {
            *v *= s;
        }
    }
    out
}

fn band_guard(grid: &SMGrid, field: &FourierField, top: bool) -> Result<()> {
    let n = if top { field.max_mode() } else { field.min_mode() };
    let e = grid.mode_norm_sq(field.mode(n));
    let total = field.norm_sq(grid);
    if e > 1e-26 * total.max(1e-30) {
        return Err(MagError::InvalidConfig(format!(
            "band overflow: mode {n} carries energy {e:.3e}; shrink the band"
        )));
    }
    Ok(())
}

/// Raising operator: maps mode `n` content to mode `n+1`.
pub fn apply_eta_plus(grid: &SMGrid, field: &FourierField) -> Result<FourierField> {
    band_guard(grid, field, true)?;
    let mut out = FourierField::zero(grid);
    for n in field.min_mode()..field.max_mode() {
        let src = field.mode(n);
        if src.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let d = grid.d_z(src, n);
        let dst = out.mode_mut(n + 1);
        for i in 0..grid.n_nodes() {
            dst[i] = grid.exp_m_phi[i] * (d[i] - (n as f64) * grid.dphi[i] * src[i]);
        }
    }
    Ok(out)
}

/// Lowering operator: maps mode `n` content to mode `n-1`.
pub fn apply_eta_minus(grid: &SMGrid, field: &FourierField) -> Result<FourierField> {
    band_guard(grid, field, false)?;
    let mut out = FourierField::zero(grid);
    for n in (field.min_mode() + 1)..=field.max_mode() {
        let src = field.mode(n);
        if src.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let d = grid.d_zbar(src, n);
        let dst = out.mode_mut(n - 1);
        for i in 0..grid.n_nodes() {
            dst[i] =
                grid.exp_m_phi[i] * (d[i] + (n as f64) * grid.dphi[i].conj() * src[i]);
        }
    }
    Ok(out)
}

/// `X = eta+ + eta-` in mode space.
pub fn apply_x_mode(grid: &SMGrid, field: &FourierField) -> Result<FourierField> {
    let mut a = apply_eta_plus(grid, field)?;
    let b = apply_eta_minus(grid, field)?;
    a.add_scaled(&b, Complex64::new(1.0, 0.0));
    Ok(a)
}

/// `X_lambda = X + lambda F V` via the per-mode formula:
/// `(X_lambda g)_n = eta+ g_{n-1} + eta- g_{n+1} + i n lambda F g_n`.
pub fn apply_x_lambda_mode(
    grid: &SMGrid,
    field: &FourierField,
    lambda: f64,
) -> Result<FourierField> {
    let mut out = apply_x_mode(grid, field)?;
    for n in field.min_mode()..=field.max_mode() {
        let src = field.mode(n);
        let mut add = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
        for i in 0..grid.n_nodes() {
            add[i] = Complex64::new(0.0, n as f64 * lambda * grid.magnetic[i]) * src[i];
        }
        let dst = out.mode_mut(n);
        for i in 0..grid.n_nodes() {
            dst[i] += add[i];
        }
    }
    Ok(out)
}

/// `X_lambda` through the angle-sample route: reconstruct fiber samples,
/// differentiate the frame coefficients pointwise in sample space (spectral
/// only for `d/dtheta` and the ghost phase shifts), and project back.
pub fn apply_x_lambda_direct(
    grid: &SMGrid,
    field: &FourierField,
    lambda: f64,
) -> Result<FourierField> {
    band_guard(grid, field, true)?;
    band_guard(grid, field, false)?;
    let nn = grid.n_nodes();
    let nt = grid.n_theta;
    let samples = synthesize(grid, field);

    // fiber samples at ghost points (mode phases, then synthesis)
    let mut ghost_samples = vec![Complex64::new(0.0, 0.0); grid.ghosts.len() * nt];
    for (gi, rule) in grid.ghosts.iter().enumerate() {
        for n in field.min_mode()..=field.max_mode() {
            let m = field.mode(n);
            let mut v = Complex64::new(0.0, 0.0);
            for &(idx, w) in &rule.weights {
                v += w * m[idx as usize];
            }
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let phased = v * Complex64::from_polar(1.0, n as f64 * rule.rotation);
            for k in 0..nt {
                let th = TAU * k as f64 / nt as f64;
                ghost_samples[gi * nt + k] += phased * Complex64::from_polar(1.0, n as f64 * th);
            }
        }
    }

    // spectral d/dtheta per node
    let dtheta = {
        let vfield = apply_v(field);
        synthesize(grid, &vfield)
    };

    let fetch = |r: crate::grid::NeighborRef, k: usize| -> Complex64 {
        match r {
            crate::grid::NeighborRef::Interior(t) => samples[t as usize * nt + k],
            crate::grid::NeighborRef::Ghost(g) => ghost_samples[g as usize * nt + k],
        }
    };

    let mut out_samples = vec![Complex64::new(0.0, 0.0); nn * nt];
    let inv2h = 1.0 / (2.0 * grid.h);
    for i in 0..nn {
        let nb = grid.neighbors[i];
        let e_m_phi = grid.exp_m_phi[i];
        let phi_x = 2.0 * grid.dphi[i].re;
        let phi_y = -2.0 * grid.dphi[i].im;
        let f_here = grid.magnetic[i];
        for k in 0..nt {
            let th = TAU * k as f64 / nt as f64;
            let (c, s) = (th.cos(), th.sin());
            let dx = (fetch(nb[0], k) - fetch(nb[1], k)) * inv2h;
            let dy = (fetch(nb[2], k) - fetch(nb[3], k)) * inv2h;
            let dth = dtheta[i * nt + k];
            out_samples[i * nt + k] = e_m_phi * (c * dx + s * dy + (phi_y * c - phi_x * s) * dth)
                + lambda * f_here * dth;
        }
    }
    let (out, _) = project_modes(grid, &out_samples);
    Ok(out)
}

/// Relative adjointness residual `|<eta+ f, g> + <f, eta- g>|`, normalized
/// by the participating norms.
pub fn adjointness_residual(grid: &SMGrid, f: &FourierField, g: &FourierField) -> Result<f64> {
    let ef = apply_eta_plus(grid, f)?;
    let eg = apply_eta_minus(grid, g)?;
    let mut ip = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    for n in f.min_mode()..=f.max_mode() {
        ip += grid.mode_inner(ef.mode(n), g.mode(n));
        ip += grid.mode_inner(f.mode(n), eg.mode(n));
    }
    scale += (ef.norm_sq(grid) * g.norm_sq(grid)).sqrt();
    scale += (f.norm_sq(grid) * eg.norm_sq(grid)).sqrt();
    Ok(ip.norm() / scale.max(1e-300))
}

/// Off-target mode energy fraction after raising a single-mode field.
pub fn mode_locality_residual(grid: &SMGrid, field: &FourierField, n: i32) -> Result<f64> {
    let raised = apply_eta_plus(grid, field)?;
    let total = raised.norm_sq(grid).max(1e-300);
    let target = grid.mode_norm_sq(raised.mode(n + 1));
    Ok(((total - target) / total).max(0.0))
}

/// `||eta+ f||^2 - A n ||f||^2 - ||eta- f||^2` for a single-mode field.
pub fn energy_inequality_slack(
    grid: &SMGrid,
    mode_values: &[Complex64],
    n: i32,
    a_const: f64,
) -> Result<f64> {
    let mut f = FourierField::zero(grid);
    let nrm = grid.mode_norm_sq(mode_values).sqrt();
    let scaled: Vec<Complex64> = mode_values.iter().map(|v| v / nrm).collect();
    f.set_mode(n, &scaled);
    let up = apply_eta_plus(grid, &f)?;
    let down = apply_eta_minus(grid, &f)?;
    let up_sq = grid.mode_norm_sq(up.mode(n + 1));
    let down_sq = grid.mode_norm_sq(down.mode(n - 1));
    Ok(up_sq - a_const * n as f64 - down_sq)
}

/// Per-mode residuals between the direct and per-mode transport routes.
pub fn mode_transport_residuals(
    grid: &SMGrid,
    g: &FourierField,
    lambda: f64,
) -> Result<Vec<(i32, f64)>> {
    let a = apply_x_lambda_mode(grid, g, lambda)?;
    let b = apply_x_lambda_direct(grid, g, lambda)?;
    let scale = g.norm_sq(grid).sqrt().max(1e-300);
    let mut out = Vec::new();
    for n in g.min_mode()..=g.max_mode() {
        let am = a.mode(n);
        let bm = b.mode(n);
        let diff: Vec<Complex64> = am.iter().zip(bm.iter()).map(|(x, y)| x - y).collect();
        out.push((n, grid.mode_norm_sq(&diff).sqrt() / scale));
    }
    Ok(out)
}

/// Sequences and slack list of the tail recurrence
/// `b_{n+1} >= b_{n-1} + r_n` for modes above the source band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceReport {
    /// `a_n = ||eta+ g_n||^2 + ||eta+ g_{n-1}||^2` for n in `range`.
    pub a_seq: Vec<(i32, f64)>,
    pub b_seq: Vec<(i32, f64)>,
    pub r_seq: Vec<(i32, f64)>,
    /// Modes `n > N+2` where `b_{n+1} - b_{n-1} - r_n < -tau`.
    pub violations: Vec<(i32, f64)>,
    /// Max residual of the homogeneous mode equation over `n > N`.
    pub mode_equation_residual: f64,
}

/// Diagnostics for the tail recurrence of the homogeneous system.
///
/// Requires `F == 1` (area-form regime), `A - lambda^2 >= 0`, and that `g`
/// satisfies the homogeneous mode equation for `n > band_n` within `tau_eq`.
pub fn recurrence_diagnostics(
    grid: &SMGrid,
    g: &FourierField,
    band_n: i32,
    lambda: f64,
    a_const: f64,
    tau_eq: f64,
    tau_ineq: f64,
) -> Result<RecurrenceReport> {
    let f_dev = grid
        .magnetic
        .iter()
        .fold(0.0f64, |acc, &f| acc.max((f - 1.0).abs()));
    if f_dev > 1e-12 {
        return Err(MagError::HypothesisViolated {
            inequality: "F == 1 (area-form regime)".into(),
            margin: -f_dev,
        });
    }
    if a_const - lambda * lambda < 0.0 {
        return Err(MagError::HypothesisViolated {
            inequality: "A - lambda^2 >= 0".into(),
            margin: a_const - lambda * lambda,
        });
    }
    let up = apply_eta_plus(grid, g)?;
    let down = apply_eta_minus(grid, g)?;
    let norm_of = |n: i32| -> f64 {
        if n < g.min_mode() || n > g.max_mode() {
            0.0
        } else {
            grid.mode_norm_sq(g.mode(n)).sqrt()
        }
    };
    let scale = g.norm_sq(grid).sqrt().max(1e-300);

    // homogeneous mode equation residual for n > band_n
    let mut eq_res = 0.0f64;
    for n in (band_n + 1)..g.max_mode() {
        let mut r = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
        let u = up.mode(n);
        let d = down.mode(n);
        let gm = g.mode(n);
        for i in 0..grid.n_nodes() {
            r[i] = u[i] + d[i] + Complex64::new(0.0, n as f64 * lambda) * gm[i];
        }
        eq_res = eq_res.max(grid.mode_norm_sq(&r).sqrt() / scale);
    }
    if eq_res > tau_eq {
        return Err(MagError::HypothesisViolated {
            inequality: format!(
                "homogeneous mode equation for n > {band_n} (residual {eq_res:.3e} > {tau_eq:.3e})"
            ),
            margin: tau_eq - eq_res,
        });
    }

    let eta_norm_sq = |n: i32| -> f64 {
        if n < g.min_mode() || n + 1 > g.max_mode() {
            0.0
        } else {
            grid.mode_norm_sq(up.mode(n + 1))
        }
    };
    let a_of = |n: i32| eta_norm_sq(n) + eta_norm_sq(n - 1);
    let b_of = |n: i32| a_of(n) + a_of(n - 1);
    let r_of = |n: i32| -> f64 {
        let nf = n as f64;
        -(nf - 2.0) * (nf - 2.0) * lambda * lambda * norm_of(n - 2).powi(2)
            + (nf - 1.0) * (a_const - 2.0 * lambda * lambda) * norm_of(n - 1).powi(2)
            + (2.0 * a_const * nf + lambda * lambda * nf * nf) * norm_of(n).powi(2)
            + a_const * (nf + 1.0) * norm_of(n + 1).powi(2)
    };

    let top = g.max_mode();
    let mut a_seq = Vec::new();
    let mut b_seq = Vec::new();
    let mut r_seq = Vec::new();
    let mut violations = Vec::new();
    for n in (band_n + 1)..=top {
        a_seq.push((n, a_of(n)));
        b_seq.push((n, b_of(n)));
        if n > band_n + 2 {
            let r = r_of(n);
            r_seq.push((n, r));
            let slack = b_of(n + 1) - b_of(n - 1) - r;
            if slack < -tau_ineq {
                violations.push((n, slack));
            }
        }
    }
    Ok(RecurrenceReport {
        a_seq,
        b_seq,
        r_seq,
        violations,
        mode_equation_residual: eq_res,
    })
}

// ---------------------------------------------------------------------------
// probe fields

/// Specification of a reproducible smooth test field: compactly supported
/// base bumps (strictly inside the octagon, so no seam interaction) with
/// random complex coefficients per mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub bumps: Vec<ProbeBump>,
    /// `coeffs[b][m]` multiplies bump `b` in mode `m - band`.
    pub coeffs: Vec<Vec<(f64, f64)>>,
    pub band: i32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeBump {
    pub center: [f64; 2],
    /// Hyperbolic support radius (value is `(1 - d^2/R^2)^4` inside).
    pub radius: f64,
}

impl ProbeSpec {
    pub fn random<R: Rng>(rng: &mut R, band: i32, n_bumps: usize) -> Self {
        let mut bumps = Vec::new();
        let mut coeffs = Vec::new();
        for _ in 0..n_bumps {
            let r = 0.16 * rng.gen::<f64>();
            let a = TAU * rng.gen::<f64>();
            bumps.push(ProbeBump {
                center: [r * a.cos(), r * a.sin()],
                radius: 1.05 + 0.25 * rng.gen::<f64>(),
            });
            let mut row = Vec::new();
            for _ in -band..=band {
                row.push((rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            }
            coeffs.push(row);
        }
        Self {
            bumps,
            coeffs,
            band,
        }
    }

    /// Evaluate on a grid. The support stays strictly inside the octagon
    /// (inradius 1.5286), so node values alone define the quotient function.
    pub fn evaluate(&self, grid: &SMGrid) -> FourierField {
        let mut field = FourierField::zero(grid);
        for (b, bump) in self.bumps.iter().enumerate() {
            let c = Complex64::new(bump.center[0], bump.center[1]);
            let values: Vec<f64> = grid
                .nodes
                .iter()
                .map(|&z| {
                    let d2 = dist_sq_jet(z, c).value;
                    let s = d2 / (bump.radius * bump.radius);
                    if s >= 1.0 {
                        0.0
                    } else {
                        (1.0 - s).powi(4)
                    }
                })
                .collect();
            for (mi, &(re, im)) in self.coeffs[b].iter().enumerate() {
                let m = mi as i32 - self.band;
                let coef = Complex64::new(re, im);
                let dst = field.mode_mut(m);
                for i in 0..grid.n_nodes() {
                    dst[i] += coef * values[i];
                }
            }
        }
        field
    }
}

/// Single-mode node values of an orbit-summed bump section: the mode-`m`
/// coefficient of a genuine smooth function on SM supported near the orbit
/// of `center` (whole-domain probe, seam-aware).
pub fn orbit_mode_bump(
    surface: &SurfaceModel,
    grid: &SMGrid,
    center: Complex64,
    width: f64,
    m: i32,
) -> Vec<Complex64> {
    let cutoff = width * (2.0f64 * 41.5).sqrt();
    let reach = surface.group.circumradius + 1.0 + cutoff;
    let orbit = surface.group.orbit_ball(center, reach, 10);
    let neg_half_inv_w2 = -0.5 / (width * width);
    grid.nodes
        .iter()
        .map(|&z| {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in &orbit {
                let d2 = dist_sq_jet(z, e.point).value;
                let s = neg_half_inv_w2 * d2;
                if s < -40.0 {
                    continue;
                }
                // phase of the deck rotation carrying the fiber angle
                let rho = -e.map.inverse().rotation_at(z);
                acc += s.exp() * Complex64::from_polar(1.0, -(m as f64) * rho);
            }
            acc
        })
        .collect()
}

/// A real whole-domain random field (orbit-summed, conj-symmetric).
pub fn random_quotient_field(
    surface: &SurfaceModel,
    grid: &SMGrid,
    seed: u64,
    band: i32,
    n_bumps: usize,
) -> FourierField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = FourierField::zero(grid);
    for _ in 0..n_bumps {
        let r = 0.55 * rng.gen::<f64>();
        let a = TAU * rng.gen::<f64>();
        let c = Complex64::from_polar(r, a);
        let width = 0.35 + 0.2 * rng.gen::<f64>();
        for m in 0..=band {
            let coef = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let vals = orbit_mode_bump(surface, grid, c, width, m);
            let dst = field.mode_mut(m);
            for i in 0..grid.n_nodes() {
                dst[i] += coef * vals[i];
            }
        }
    }
    field.symmetrize_real();
    field
}

// ---------------------------------------------------------------------------
// measured tolerances

/// Empirical discretization tolerances of a grid, measured on seeded probe
/// families (never hard-coded).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCalibration {
    /// 5x the worst adjointness/locality residual over the probe family.
    pub tau_grid: f64,
    /// 5x the worst negative inequality slack over the calibration family.
    pub tau_ineq: f64,
    pub adjointness_max: f64,
    pub locality_max: f64,
    pub inequality_floor: f64,
    pub across: usize,
}

/// Measure tolerances on interior-supported probe fields.
pub fn calibrate(grid: &SMGrid, a_const: f64, seed: u64) -> Result<GridCalibration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = 0.0f64;
    let mut loc = 0.0f64;
    for _ in 0..10 {
        let f = ProbeSpec::random(&mut rng, 5, 2).evaluate(grid);
        let g = ProbeSpec::random(&mut rng, 5, 2).evaluate(grid);
        adj = adj.max(adjointness_residual(grid, &f, &g)?);
    }
    for n in 0..=6 {
        let spec = ProbeSpec::random(&mut rng, 0, 2);
        let base = spec.evaluate(grid);
        let mut f = FourierField::zero(grid);
        f.set_mode(n, base.mode(0));
        loc = loc.max(mode_locality_residual(grid, &f, n)?);
    }
    let mut floor = f64::INFINITY;
    for n in 0..=6 {
        for _ in 0..4 {
            let spec = ProbeSpec::random(&mut rng, 0, 2);
            let base = spec.evaluate(grid);
            let slack = energy_inequality_slack(grid, base.mode(0), n, a_const)?;
            floor = floor.min(slack);
        }
    }
    let tau_grid = 5.0 * adj.max(loc).max(1e-14);
    let tau_ineq = 5.0 * (-floor).max(tau_grid);
    Ok(GridCalibration {
        tau_grid,
        tau_ineq,
        adjointness_max: adj,
        locality_max: loc,
        inequality_floor: floor,
        across: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SurfaceConfig;

    fn setup() -> (SurfaceModel, SMGrid) {
        let s = SurfaceModel::new(SurfaceConfig::constant_model()).unwrap();
        let g = SMGrid::build(&s, 24, 32).unwrap();
        (s, g)
    }

    #[test]
    fn constant_function_projects_to_zero_mode() {
        let (_, grid) = setup();
        let samples = vec![Complex64::new(1.0, 0.0); grid.n_nodes() * grid.n_theta];
        let (field, alias) = project_modes(&grid, &samples);
        assert!(alias < 1e-14);
        for n in field.min_mode()..=field.max_mode() {
            let e = grid.mode_norm_sq(field.mode(n));
            if n == 0 {
                assert!((e - 1.0).abs() < 1e-12);
            } else {
                assert!(e < 1e-24, "mode {n} energy {e}");
            }
        }
    }

    #[test]
    fn pure_harmonic_occupies_single_pair() {
        // f(x, theta) = cos(3 theta + c(x)) lives in modes +-3
        let (_, grid) = setup();
        let nt = grid.n_theta;
        let mut samples = vec![Complex64::new(0.0, 0.0); grid.n_nodes() * nt];
        for i in 0..grid.n_nodes() {
            let c = grid.nodes[i].re;
            for k in 0..nt {
                let th = TAU * k as f64 / nt as f64;
                samples[i * nt + k] = Complex64::new((3.0 * th + c).cos(), 0.0);
            }
        }
        let (field, _) = project_modes(&grid, &samples);
        let total = field.norm_sq(&grid);
        let in_pair =
            grid.mode_norm_sq(field.mode(3)) + grid.mode_norm_sq(field.mode(-3));
        assert!((in_pair - total).abs() < 1e-20 * total.max(1.0));
        assert!(field.reality_defect() < 1e-14);
    }

    #[test]
    fn parseval_roundtrip() {
        let (_, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = ProbeSpec::random(&mut rng, 4, 3);
        let field = spec.evaluate(&grid);
        let samples = synthesize(&grid, &field);
        // sample-space Liouville norm (fiber-averaged)
        let mut s = 0.0;
        for i in 0..grid.n_nodes() {
            for k in 0..grid.n_theta {
                s += grid.weights[i] * samples[i * grid.n_theta + k].norm_sqr();
            }
        }
        s /= grid.n_theta as f64;
        let m = field.norm_sq(&grid);
        assert!((s - m).abs() < 1e-12 * m, "{s} vs {m}");
        // roundtrip
        let (back, _) = project_modes(&grid, &samples);
        let mut worst = 0.0f64;
        for (a, b) in back.coeffs.iter().zip(field.coeffs.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-13);
    }

    #[test]
    fn minus_i_v_is_n_times_identity() {
        let (_, grid) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = ProbeSpec::random(&mut rng, 4, 2).evaluate(&grid);
        let v = apply_v(&field);
        for n in field.min_mode()..=field.max_mode() {
            let a = v.mode(n);
            let b = field.mode(n);
            for i in 0..grid.n_nodes() {
                let want = Complex64::new(0.0, 1.0) * (n as f64) * b[i];
                assert!((a[i] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eta_plus_kills_constants() {
        let (_, grid) = setup();
        let mut f = FourierField::zero(&grid);
        let ones = vec![Complex64::new(1.0, 0.0); grid.n_nodes()];
        f.set_mode(0, &ones);
        let up = apply_eta_plus(&grid, &f).unwrap();
        assert!(up.norm_sq(&grid) < 1e-24, "{}", up.norm_sq(&grid));
        let down = apply_eta_minus(&grid, &f).unwrap();
        assert!(down.norm_sq(&grid) < 1e-24);
    }

    #[test]
    fn eta_plus_matches_analytic_derivative() {
        // eta+ of an interior-supported mode-0 field vs the closed form
        // e^{-Phi} d(bump)/dz; the stencil error must shrink at order ~2.
        let s = SurfaceModel::new(SurfaceConfig::constant_model()).unwrap();
        let c = Complex64::new(0.05, -0.1);
        let radius = 1.2f64;
        let worst_at = |across: usize| -> f64 {
            let grid = SMGrid::build(&s, across, 32).unwrap();
            let vals: Vec<Complex64> = grid
                .nodes
                .iter()
                .map(|&z| {
                    let d2 = dist_sq_jet(z, c).value;
                    let u = d2 / (radius * radius);
                    if u >= 1.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new((1.0 - u).powi(4), 0.0)
                    }
                })
                .collect();
            let mut f = FourierField::zero(&grid);
            f.set_mode(0, &vals);
            let up = apply_eta_plus(&grid, &f).unwrap();
            let got = up.mode(1);
            let mut worst = 0.0f64;
            for (i, &z) in grid.nodes.iter().enumerate() {
                let jet = dist_sq_jet(z, c);
                let u = jet.value / (radius * radius);
                if u >= 0.96 {
                    continue; // fourth derivative jump at the support edge
                }
                let du = Complex64::new(jet.dx, -jet.dy) * (0.5 / (radius * radius));
                let deriv = -4.0 * (1.0 - u).powi(3) * du;
                let exact = (-s.total_exponent_jet(z).value).exp() * deriv;
                worst = worst.max((got[i] - exact).norm());
            }
            worst
        };
        let coarse = worst_at(24);
        let fine = worst_at(48);
        assert!(coarse < 0.08, "coarse mismatch {coarse}");
        assert!(
            coarse / fine > 3.0,
            "order too low: coarse {coarse}, fine {fine}"
        );
    }

    #[test]
    fn adjointness_and_locality_within_measured_tolerance() {
        let (_, grid) = setup();
        let cal = calibrate(&grid, 0.5, 77).unwrap();
        assert!(cal.adjointness_max < 1e-2, "adj {}", cal.adjointness_max);
        // locality is exact by construction
        assert!(cal.locality_max < 1e-12, "loc {}", cal.locality_max);
        // fresh fields stay within the 5x margin
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..5 {
            let f = ProbeSpec::random(&mut rng, 5, 2).evaluate(&grid);
            let g = ProbeSpec::random(&mut rng, 5, 2).evaluate(&grid);
            let r = adjointness_residual(&grid, &f, &g).unwrap();
            assert!(r < cal.tau_grid, "residual {r} vs tau {}", cal.tau_grid);
        }
    }

    #[test]
    fn adjointness_improves_under_refinement() {
        let s = SurfaceModel::new(SurfaceConfig::constant_model()).unwrap();
        let coarse = SMGrid::build(&s, 16, 32).unwrap();
        let fine = SMGrid::build(&s, 32, 32).unwrap();
        let cal_c = calibrate(&coarse, 0.5, 5).unwrap();
        let cal_f = calibrate(&fine, 0.5, 5).unwrap();
        let order = (cal_c.tau_grid / cal_f.tau_grid).log2();
        assert!(
            order >= 1.8,
            "order {order}: coarse {} fine {}",
            cal_c.tau_grid,
            cal_f.tau_grid
        );
    }

    #[test]
    fn energy_inequality_on_random_fields() {
        let (_, grid) = setup();
        let cal = calibrate(&grid, 0.5, 333).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(999);
        for n in 0..=6 {
            for _ in 0..6 {
                let base = ProbeSpec::random(&mut rng, 0, 2).evaluate(&grid);
                let slack = energy_inequality_slack(&grid, base.mode(0), n, 0.5).unwrap();
                assert!(
                    slack >= -cal.tau_ineq,
                    "mode {n}: slack {slack} vs -tau {}",
                    -cal.tau_ineq
                );
            }
        }
    }

    #[test]
    fn transport_routes_agree() {
        let (s, grid) = setup();
        let field = random_quotient_field(&s, &grid, 4242, 4, 2);
        for &lambda in &[0.0, 0.2] {
            let res = mode_transport_residuals(&grid, &field, lambda).unwrap();
            for (n, r) in res {
                assert!(r < 1e-10, "lambda {lambda} mode {n}: residual {r}");
            }
        }
    }

    #[test]
    fn x_lambda_of_zero_mode_state_occupies_adjacent_modes() {
        let (s, grid) = setup();
        let vals = orbit_mode_bump(&s, &grid, Complex64::new(0.2, 0.1), 0.4, 0);
        let mut g = FourierField::zero(&grid);
        g.set_mode(0, &vals);
        let xg = apply_x_lambda_mode(&grid, &g, 0.3).unwrap();
        let total = xg.norm_sq(&grid);
        let adj = grid.mode_norm_sq(xg.mode(1)) + grid.mode_norm_sq(xg.mode(-1));
        assert!((adj - total).abs() < 1e-20 * total.max(1e-30));
    }

    #[test]
    fn recurrence_on_truncated_field_has_no_violations() {
        // g supported in |n| <= N-1: all a_n, b_n, r_n vanish above N+1.
        let (s, grid) = setup();
        let field = random_quotient_field(&s, &grid, 77, 2, 2);
        let rep = recurrence_diagnostics(&grid, &field, 3, 0.3, 0.5, 1e-6, 1e-8).unwrap();
        assert!(rep.violations.is_empty());
        for &(n, a) in &rep.a_seq {
            if n > 4 {
                assert!(a < 1e-20, "a_{n} = {a}");
            }
        }
    }

    #[test]
    fn recurrence_gates_on_corrupted_band() {
        let (s, grid) = setup();
        let mut field = random_quotient_field(&s, &grid, 78, 2, 2);
        // inject energy at mode 7 (beyond the claimed band)
        let vals = orbit_mode_bump(&s, &grid, Complex64::new(-0.1, 0.2), 0.4, 7);
        field.set_mode(7, &vals);
        match recurrence_diagnostics(&grid, &field, 2, 0.3, 0.5, 1e-6, 1e-8) {
            Err(MagError::HypothesisViolated { inequality, .. }) => {
                assert!(inequality.contains("mode equation"));
            }
            other => panic!("expected gate, got {other:?}"),
        }
    }

    #[test]
    fn real_fields_have_conjugate_symmetry() {
        let (s, grid) = setup();
        let field = random_quotient_field(&s, &grid, 5150, 3, 2);
        assert!(field.reality_defect() < 1e-14);
        // synthesized samples are real
        let samples = synthesize(&grid, &field);
        let worst = samples.iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
        assert!(worst < 1e-12);
    }
}
