//! Adapted charts, the longitudinal return-time cocycle `K(p, T)`, its
//! periodic-orbit obstruction, and the contact-form criterion.
//!
//! The chart at `p` is spanned by the local strong unstable and stable
//! curves: `psi_p(u, s)` walks distance `u` along the unstable curve, then
//! `s` along the stable curve through that point. `f_T(u, s)` is the time
//! offset between `phi_T(psi_p(u, s))` and the transversal at `phi_T(p)`;
//! the cocycle is its mixed second difference at the origin,
//!
//! ```text
//!   K(p, T) ~ [f(h,h) - f(h,-h) - f(-h,h) + f(-h,-h)] / (4 h^2),
//! ```
//!
//! reported with a two-scale error estimate. `f_T` vanishes on both axes by
//! construction, so pure-`u` and pure-`s` contamination cancels in the
//! stencil; what survives is the genuinely mixed discrepancy.
//!
//! Direction fields are transported from the linearized flow and fitted as
//! local cubic polynomial models per chart patch; chart surfaces are fitted
//! as bivariate quintics. Every fit residual lands in the per-sample error
//! budget through the two-scale comparison plus a calibrated noise floor.

pub mod regularity;

pub use regularity::{zygmund_lipschitz_scan, RegularityClass, RegularityReport};

use crate::cohomology::ClosedOrbit;
use crate::cohomology::OneForm;
use crate::error::{MagError, Result};
use crate::flow::linalg::Mat3;
use crate::flow::{coframe_at, frame_matrix, MagneticFlow, SMPoint};
use crate::geom::{DiskPoint, MobiusMap};
use crate::grid::SMGrid;
use crate::splitting::{stable_direction, unstable_direction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tunables of the cocycle pipeline.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CocycleSettings {
    /// Transport horizon for the invariant direction fields.
    pub dir_horizon: f64,
    /// Step size for direction-field transports.
    pub dir_dt: f64,
    /// Step size for the orbit legs between transversals.
    pub flow_dt: f64,
    /// Chart fit extent in the (u, s) coordinates.
    pub chart_radius: f64,
    /// Finite-difference scale `h` of the mixed stencil.
    pub fd_scale: f64,
    /// Absolute error floor added to every sample's estimate (typically
    /// calibrated from a constant-curvature run).
    pub noise_floor: f64,
}

impl Default for CocycleSettings {
    fn default() -> Self {
        Self {
            dir_horizon: 14.0,
            dir_dt: 1e-2,
            flow_dt: 1e-3,
            chart_radius: 7e-3,
            fd_scale: 4e-3,
            noise_floor: 1e-7,
        }
    }
}

impl CocycleSettings {
    /// Settings with the direction horizon adapted to the flow's weakest
    /// contraction rate, so the invariant directions converge to ~3e-8
    /// regardless of how flat the curvature gets.
    pub fn for_flow(flow: &MagneticFlow) -> Self {
        let gap = (-flow.surface.max_curvature() - flow.lambda * flow.lambda).max(1e-3);
        let rate = gap.sqrt() * 0.95;
        let horizon = (17.3 / rate).clamp(14.0, 44.0);
        Self {
            dir_horizon: horizon,
            ..Self::default()
        }
    }

    /// The profile used for refinement-stability checks: halved steps and
    /// stencil, extended direction horizon.
    pub fn refined(&self) -> Self {
        Self {
            dir_horizon: self.dir_horizon + 2.0,
            dir_dt: self.dir_dt / 2.0,
            flow_dt: self.flow_dt / 2.0,
            chart_radius: self.chart_radius,
            fd_scale: self.fd_scale / 2.0,
            noise_floor: self.noise_floor,
        }
    }
}

// ---------------------------------------------------------------------------
// local polynomial models

/// Trivariate monomials up to degree 3 (20 terms).
fn tri_basis(x: f64, y: f64, t: f64) -> [f64; 20] {
    [
        1.0,
        x,
        y,
        t,
        x * x,
        x * y,
        x * t,
        y * y,
        y * t,
        t * t,
        x * x * x,
        x * x * y,
        x * x * t,
        x * y * y,
        x * y * t,
        x * t * t,
        y * y * y,
        y * y * t,
        y * t * t,
        t * t * t,
    ]
}

/// Bivariate monomials up to degree 5 (21 terms).
fn bi_basis(u: f64, s: f64) -> [f64; 21] {
    let mut out = [0.0; 21];
    let mut k = 0;
    let mut up = [1.0; 6];
    let mut sp = [1.0; 6];
    for i in 1..6 {
        up[i] = up[i - 1] * u;
        sp[i] = sp[i - 1] * s;
    }
    for deg in 0..=5 {
        for i in (0..=deg).rev() {
            out[k] = up[i] * sp[deg - i];
            k += 1;
        }
    }
    out
}

/// Dense least squares via normal equations (small systems only).
fn dense_lsq(rows: &[Vec<f64>], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut g = vec![vec![0.0f64; n]; n];
    let mut b = vec![0.0f64; n];
    for (row, &y) in rows.iter().zip(rhs.iter()) {
        for p in 0..n {
            for q in 0..n {
                g[p][q] += row[p] * row[q];
            }
            b[p] += row[p] * y;
        }
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if g[r][col].abs() > g[piv][col].abs() {
                piv = r;
            }
        }
        if g[piv][col].abs() < 1e-300 {
            return None;
        }
        g.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = g[r][col] / g[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                g[r][c] -= f * g[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= g[col][c] * x[c];
        }
        x[col] = s / g[col][col];
    }
    Some(x)
}

/// Fitted invariant direction fields over a chart patch.
struct PatchFields {
    center: [f64; 3],
    scale: f64,
    eu: [Vec<f64>; 3],
    es: [Vec<f64>; 3],
}

impl PatchFields {
    fn eval(&self, coeffs: &[Vec<f64>; 3], q: [f64; 3]) -> [f64; 3] {
        let b = tri_basis(
            (q[0] - self.center[0]) / self.scale,
            (q[1] - self.center[1]) / self.scale,
            wrap_angle(q[2] - self.center[2]) / self.scale,
        );
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = coeffs[c].iter().zip(b.iter()).map(|(a, v)| a * v).sum();
        }
        out
    }

    fn unstable(&self, q: [f64; 3]) -> [f64; 3] {
        self.eval(&self.eu, q)
    }

    fn stable(&self, q: [f64; 3]) -> [f64; 3] {
        self.eval(&self.es, q)
    }
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d.rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    d
}

/// Unit chart vector of a frame-component direction at a point.
fn chart_direction(flow: &MagneticFlow, p: &SMPoint, frame_vec: [f64; 3]) -> [f64; 3] {
    let m = frame_matrix(flow.surface, p);
    let v = m.mul_vec(frame_vec);
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn direction_at(flow: &MagneticFlow, q: [f64; 3], horizon: f64, stable: bool) -> Result<[f64; 3]> {
    let p = SMPoint::new(DiskPoint::new(q[0], q[1])?, q[2]);
    let f = if stable {
        stable_direction(flow, p, horizon)?
    } else {
        unstable_direction(flow, p, horizon)?
    };
    Ok(chart_direction(flow, &p, f))
}

/// Fit the direction fields over a box around `center`.
fn fit_patch_fields(
    flow: &MagneticFlow,
    center: &SMPoint,
    settings: &CocycleSettings,
) -> Result<PatchFields> {
    let scale = 3.0 * settings.chart_radius;
    let dir_flow = MagneticFlow {
        dt: settings.dir_dt,
        ..*flow
    };
    let levels = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];
    let c = [center.base.x, center.base.y, center.theta];
    let mut rows = Vec::with_capacity(64);
    let mut eu_samples: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut es_samples: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for &lx in &levels {
        for &ly in &levels {
            for &lt in &levels {
                let q = [c[0] + lx * scale, c[1] + ly * scale, c[2] + lt * scale];
                let eu = direction_at(&dir_flow, q, settings.dir_horizon, false)?;
                let es = direction_at(&dir_flow, q, settings.dir_horizon, true)?;
                rows.push(tri_basis(lx, ly, lt).to_vec());
                for k in 0..3 {
                    eu_samples[k].push(eu[k]);
                    es_samples[k].push(es[k]);
                }
            }
        }
    }
    let fit = |samples: &Vec<f64>| -> Result<Vec<f64>> {
        dense_lsq(&rows, samples, 20).ok_or_else(|| MagError::NonConvergence {
            what: "patch field fit".into(),
            last: f64::NAN,
            previous: f64::NAN,
        })
    };
    Ok(PatchFields {
        center: c,
        scale,
        eu: [
            fit(&eu_samples[0])?,
            fit(&eu_samples[1])?,
            fit(&eu_samples[2])?,
        ],
        es: [
            fit(&es_samples[0])?,
            fit(&es_samples[1])?,
            fit(&es_samples[2])?,
        ],
    })
}

// ---------------------------------------------------------------------------
// adapted charts

/// Fitted adapted chart at a point: polynomial surface
/// `(u, s) -> psi_p(u, s)` spanned by the strong unstable (u) and strong
/// stable (s) curves.
pub struct AdaptedChart {
    pub point: SMPoint,
    pub radius: f64,
    surf: [Vec<f64>; 3],
    /// Tangency defect of the fitted axes against freshly transported
    /// directions at the center.
    pub tangency_defect: f64,
    /// RMS fit residual of the surface sample grid.
    pub fit_residual: f64,
}

impl AdaptedChart {
    pub fn eval(&self, u: f64, s: f64) -> [f64; 3] {
        let b = bi_basis(u / self.radius, s / self.radius);
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = self.surf[c].iter().zip(b.iter()).map(|(a, v)| a * v).sum();
        }
        out
    }

    pub fn jacobian(&self, u: f64, s: f64) -> [[f64; 3]; 2] {
        let eps = 1e-6 * self.radius;
        let plus_u = self.eval(u + eps, s);
        let minus_u = self.eval(u - eps, s);
        let plus_s = self.eval(u, s + eps);
        let minus_s = self.eval(u, s - eps);
        let mut du = [0.0; 3];
        let mut ds = [0.0; 3];
        for c in 0..3 {
            du[c] = (plus_u[c] - minus_u[c]) / (2.0 * eps);
            ds[c] = (plus_s[c] - minus_s[c]) / (2.0 * eps);
        }
        [du, ds]
    }
}

/// Integrate a curve of the fitted direction field by arclength.
fn field_curve(
    patch: &PatchFields,
    start: [f64; 3],
    arclength: f64,
    stable: bool,
    steps: usize,
) -> [f64; 3] {
    let mut q = start;
    let h = arclength / steps as f64;
    let f = |q: [f64; 3]| -> [f64; 3] {
        let v = if stable {
            patch.stable(q)
        } else {
            patch.unstable(q)
        };
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for _ in 0..steps {
        let k1 = f(q);
        let k2 = f(add3(q, k1, h / 2.0));
        let k3 = f(add3(q, k2, h / 2.0));
        let k4 = f(add3(q, k3, h));
        for i in 0..3 {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    q
}

fn add3(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Build the adapted chart at `p`.
pub fn build_adapted_chart(
    flow: &MagneticFlow,
    p: SMPoint,
    settings: &CocycleSettings,
) -> Result<AdaptedChart> {
    crate::splitting::require_anosov_margin(flow)?;
    let patch = fit_patch_fields(flow, &p, settings)?;
    let r = settings.chart_radius;
    let m = 6usize;
    let q0 = [p.base.x, p.base.y, p.theta];
    for q in [
        field_curve(&patch, q0, r * 1.05, false, 10),
        field_curve(&patch, q0, -r * 1.05, false, 10),
    ] {
        let d = (0..3).map(|i| (q[i] - q0[i]).abs()).fold(0.0f64, f64::max);
        if d > patch.scale {
            return Err(MagError::ChartPatch { radius: r });
        }
    }
    // chebyshev-like levels plus the exact axes
    let mut levels = Vec::with_capacity(m + 1);
    for i in 0..m {
        let x = (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos();
        levels.push(-r * x);
    }
    levels.push(0.0);
    let mut rows = Vec::new();
    let mut vals: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for &u in &levels {
        let base = field_curve(&patch, q0, u, false, 8);
        for &s in &levels {
            let q = field_curve(&patch, base, s, true, 8);
            rows.push(bi_basis(u / r, s / r).to_vec());
            for c in 0..3 {
                vals[c].push(q[c]);
            }
        }
    }
    let surf = [
        dense_lsq(&rows, &vals[0], 21).ok_or(MagError::ChartPatch { radius: r })?,
        dense_lsq(&rows, &vals[1], 21).ok_or(MagError::ChartPatch { radius: r })?,
        dense_lsq(&rows, &vals[2], 21).ok_or(MagError::ChartPatch { radius: r })?,
    ];
    let mut res = 0.0f64;
    let mut count = 0usize;
    for (ri, row) in rows.iter().enumerate() {
        for c in 0..3 {
            let fit: f64 = surf[c].iter().zip(row.iter()).map(|(a, v)| a * v).sum();
            res += (fit - vals[c][ri]).powi(2);
            count += 1;
        }
    }
    let fit_residual = (res / count as f64).sqrt();

    let chart = AdaptedChart {
        point: p,
        radius: r,
        surf,
        tangency_defect: 0.0,
        fit_residual,
    };
    let dir_flow = MagneticFlow {
        dt: settings.dir_dt,
        ..*flow
    };
    let [du, ds] = chart.jacobian(0.0, 0.0);
    let eu = direction_at(&dir_flow, q0, settings.dir_horizon + 2.0, false)?;
    let es = direction_at(&dir_flow, q0, settings.dir_horizon + 2.0, true)?;
    let ang = |a: [f64; 3], b: [f64; 3]| -> f64 {
        let na = (a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let nb = (b.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        (1.0 - (dot / (na * nb)).abs()).max(0.0)
    };
    let defect = ang(du, eu).max(ang(ds, es));
    Ok(AdaptedChart {
        tangency_defect: defect,
        ..chart
    })
}

// ---------------------------------------------------------------------------
// return time and the cocycle

struct Leg {
    end: SMPoint,
    /// Unwrapped fiber angle at the end (chart continuity).
    theta_raw: f64,
    deck: MobiusMap,
}

fn integrate_leg(flow: &MagneticFlow, start: [f64; 3], t: f64) -> Result<Leg> {
    let p = SMPoint::new(DiskPoint::new(start[0], start[1])?, start[2]);
    let seg = flow.integrate(p, t)?;
    let w = seg.total_deck_word();
    let end = seg.end();
    Ok(Leg {
        end,
        theta_raw: end.theta,
        deck: w.map,
    })
}

/// The return-time function of a pair of charts: time offset between
/// `phi_T(psi_source(u, s))` and the transversal at `phi_T(source center)`.
pub struct ReturnTime<'a, 'b> {
    pub flow: &'a MagneticFlow<'b>,
    pub source: &'a AdaptedChart,
    pub target: &'a AdaptedChart,
    pub t: f64,
    center_deck: MobiusMap,
    settings: CocycleSettings,
}

impl<'a, 'b> ReturnTime<'a, 'b> {
    pub fn new(
        flow: &'a MagneticFlow<'b>,
        source: &'a AdaptedChart,
        target: &'a AdaptedChart,
        t: f64,
        settings: CocycleSettings,
    ) -> Result<Self> {
        let leg_flow = MagneticFlow {
            dt: settings.flow_dt,
            ..*flow
        };
        let q0 = source.eval(0.0, 0.0);
        let center = integrate_leg(&leg_flow, q0, t)?;
        let tgt = target.eval(0.0, 0.0);
        let d = (center.end.base.x - tgt[0]).hypot(center.end.base.y - tgt[1]);
        if d > 20.0 * settings.chart_radius {
            return Err(MagError::ChartMismatch {
                cap: settings.chart_radius,
            });
        }
        Ok(Self {
            flow,
            source,
            target,
            t,
            center_deck: center.deck,
            settings,
        })
    }

    /// Evaluate `f_T(u, s)` by Newton against the fitted target surface.
    pub fn eval(&self, u: f64, s: f64) -> Result<f64> {
        let leg_flow = MagneticFlow {
            dt: self.settings.flow_dt,
            ..*self.flow
        };
        let start = self.source.eval(u, s);
        let leg = integrate_leg(&leg_flow, start, self.t)?;
        // express the endpoint in the target chart's deck frame
        let rel = self.center_deck.compose(&leg.deck.inverse());
        let z = Complex64::new(leg.end.base.x, leg.end.base.y);
        let zr = rel.apply(z);
        let th = leg.theta_raw + rel.rotation_at(z);
        let tgt0 = self.target.eval(0.0, 0.0);
        let w = [zr.re, zr.im, tgt0[2] + wrap_angle(th - tgt0[2])];

        let field = |q: [f64; 3]| self.flow.field(q);
        let jac_field = |q: [f64; 3]| self.flow.field_jacobian(q);
        let f0 = field(w);
        let df = jac_field(w).mul_vec(f0);
        let mut tau = 0.0f64;
        let (mut up, mut sp) = (0.0f64, 0.0f64);
        for _ in 0..30 {
            let fw = [
                w[0] + tau * f0[0] + 0.5 * tau * tau * df[0],
                w[1] + tau * f0[1] + 0.5 * tau * tau * df[1],
                w[2] + tau * f0[2] + 0.5 * tau * tau * df[2],
            ];
            let tv = self.target.eval(up, sp);
            let r = [fw[0] - tv[0], fw[1] - tv[1], fw[2] - tv[2]];
            let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if rn < 1e-14 {
                break;
            }
            let [du, ds] = self.target.jacobian(up, sp);
            let m = Mat3::from_columns(
                [
                    f0[0] + tau * df[0],
                    f0[1] + tau * df[1],
                    f0[2] + tau * df[2],
                ],
                [-du[0], -du[1], -du[2]],
                [-ds[0], -ds[1], -ds[2]],
            );
            let delta = m.solve([-r[0], -r[1], -r[2]]).ok_or(MagError::ChartMismatch {
                cap: self.settings.chart_radius,
            })?;
            tau += delta[0];
            up += delta[1];
            sp += delta[2];
            if tau.abs() > 0.2 {
                return Err(MagError::ChartMismatch { cap: 0.2 });
            }
        }
        if up.abs() > 3.0 * self.target.radius || sp.abs() > 3.0 * self.target.radius {
            return Err(MagError::ChartMismatch {
                cap: self.target.radius,
            });
        }
        Ok(tau)
    }
}

/// One cocycle sample with its two-scale error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CocycleSample {
    pub t: f64,
    pub h: f64,
    /// Value at the finer stencil scale.
    pub value: f64,
    pub value_coarse: f64,
    /// `max(|K_h - K_{h/2}|, noise_floor)`.
    pub error: f64,
}

/// Mixed second difference of the return time at two stencil scales.
pub fn kam_cocycle_with_charts(
    rt: &ReturnTime<'_, '_>,
    h: f64,
    noise_floor: f64,
) -> Result<CocycleSample> {
    let stencil = |h: f64| -> Result<f64> {
        let fpp = rt.eval(h, h)?;
        let fpm = rt.eval(h, -h)?;
        let fmp = rt.eval(-h, h)?;
        let fmm = rt.eval(-h, -h)?;
        Ok((fpp - fpm - fmp + fmm) / (4.0 * h * h))
    };
    let k_h = stencil(h)?;
    let k_h2 = stencil(h / 2.0)?;
    let diff = (k_h - k_h2).abs();
    let error = diff.max(noise_floor);
    if diff > 10.0 * k_h2.abs().max(noise_floor) && diff > 100.0 * noise_floor {
        return Err(MagError::UnreliableSample {
            value: k_h2,
            error: diff,
        });
    }
    Ok(CocycleSample {
        t: rt.t,
        h,
        value: k_h2,
        value_coarse: k_h,
        error,
    })
}

/// Build charts and evaluate `K(p, T)` in one call.
pub fn kam_cocycle(
    flow: &MagneticFlow,
    p: SMPoint,
    t: f64,
    settings: &CocycleSettings,
) -> Result<CocycleSample> {
    let source = build_adapted_chart(flow, p, settings)?;
    let leg_flow = MagneticFlow {
        dt: settings.flow_dt,
        ..*flow
    };
    let end = leg_flow.integrate(p, t)?.end();
    let target = build_adapted_chart(flow, end, settings)?;
    let rt = ReturnTime::new(flow, &source, &target, t, *settings)?;
    kam_cocycle_with_charts(&rt, settings.fd_scale, settings.noise_floor)
}

/// Periodic-orbit obstruction: the cocycle summed over a partition of one
/// period. A coboundary telescopes to zero; a value exceeding its budget by
/// the witness margin is a rigidity witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub word: String,
    pub period: f64,
    pub value: f64,
    /// Sum of per-segment error estimates.
    pub budget: f64,
    pub segments: Vec<CocycleSample>,
    /// `|value| / budget`.
    pub ratio: f64,
}

/// Sum `K(p_i, dt)` over a partition of the closed orbit.
pub fn periodic_obstruction(
    flow: &MagneticFlow,
    orbit: &ClosedOrbit,
    settings: &CocycleSettings,
    n_segments: usize,
) -> Result<ObstructionReport> {
    let n = n_segments.max(2);
    let dt_seg = orbit.period / n as f64;
    let leg_flow = MagneticFlow {
        dt: settings.flow_dt,
        ..*flow
    };
    let mut points = Vec::with_capacity(n);
    let mut cur = orbit.seed;
    for _ in 0..n {
        points.push(cur);
        cur = leg_flow.integrate(cur, dt_seg)?.end();
    }
    let mut charts = Vec::with_capacity(n);
    for p in &points {
        charts.push(build_adapted_chart(flow, *p, settings)?);
    }
    let mut segments = Vec::with_capacity(n);
    let mut value = 0.0;
    let mut budget = 0.0;
    for i in 0..n {
        let target = &charts[(i + 1) % n];
        let rt = ReturnTime::new(flow, &charts[i], target, dt_seg, *settings)?;
        let sample = kam_cocycle_with_charts(&rt, settings.fd_scale, settings.noise_floor)?;
        value += sample.value;
        budget += sample.error;
        segments.push(sample);
    }
    Ok(ObstructionReport {
        word: orbit.word.name(),
        period: orbit.period,
        value,
        budget,
        segments,
        ratio: value.abs() / budget.max(1e-300),
    })
}

// ---------------------------------------------------------------------------
// contact criterion

/// Evaluation of the candidate primitive
/// `-alpha - lambda c psi + lambda theta` on `X_lambda` along an orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactReport {
    /// Reference constant `-1 - lambda^2 c mean(F)`.
    pub reference: f64,
    pub max_deviation: f64,
    pub profile: Vec<(f64, f64)>,
}

/// Evaluate the primitive on `X_lambda` along orbit samples.
///
/// `c` is the cohomology constant of the surface; `theta_form` is the
/// potential 1-form with `d theta = (F - c K) Omega_a` (None in the
/// constant case, where it vanishes identically).
pub fn contact_check(
    flow: &MagneticFlow,
    orbit: &crate::flow::OrbitSegment,
    c: f64,
    theta_form: Option<(&SMGrid, &OneForm)>,
    mean_f: f64,
    stride: usize,
) -> Result<ContactReport> {
    let lambda = flow.lambda;
    let reference = -1.0 - lambda * lambda * c * mean_f;
    let mut profile = Vec::new();
    let mut max_dev = 0.0f64;
    for (i, p) in orbit.points.iter().enumerate().step_by(stride.max(1)) {
        let s = [p.base.x, p.base.y, p.theta];
        let xl = flow.field(s);
        let forms = coframe_at(flow.surface, p);
        let pair = |w: [f64; 3]| -> f64 { w[0] * xl[0] + w[1] * xl[1] + w[2] * xl[2] };
        let alpha_xl = pair(forms[0]);
        let psi_xl = pair(forms[2]);
        let theta_xl = match theta_form {
            None => 0.0,
            Some((grid, form)) => form.restriction_at(grid, flow.surface, p)?,
        };
        let value = -alpha_xl - lambda * c * psi_xl + lambda * theta_xl;
        max_dev = max_dev.max((value - reference).abs());
        profile.push((orbit.times[i], value));
    }
    Ok(ContactReport {
        reference,
        max_deviation: max_dev,
        profile,
    })
}
