//! The unit tangent bundle, its frame fields, and the magnetic flow
//! integrator.
//!
//! State on `SM` is `(x, y, theta)`: a base point of the disk chart and the
//! angle of the unit vector against the chart horizontal. The angle
//! parametrization makes unit speed structural. The generator of the
//! magnetic flow is `X_lambda = X + lambda F V`:
//!
//! ```text
//!   x'     = e^{-Phi} cos(theta)
//!   y'     = e^{-Phi} sin(theta)
//!   theta' = e^{-Phi} (Phi_y cos(theta) - Phi_x sin(theta)) + lambda F
//! ```

pub mod linalg;
mod variational;

pub use variational::{liouville_jacobian, variational_transport, FrameTransport};

use crate::error::{MagError, Result};
use crate::geom::{DiskPoint, GroupWord, Letter, MobiusMap, SurfaceModel};
use linalg::Mat3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// A point of the unit tangent bundle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SMPoint {
    pub base: DiskPoint,
    /// Fiber angle, normalized to `[0, 2 pi)`.
    pub theta: f64,
}

impl SMPoint {
    pub fn new(base: DiskPoint, theta: f64) -> Self {
        Self {
            base,
            theta: theta.rem_euclid(TAU),
        }
    }

    pub fn z(&self) -> Complex64 {
        self.base.to_complex()
    }

    /// Image under a disk isometry: the base maps by `m`, the fiber angle
    /// shifts by the chart rotation of `m` at the base point.
    pub fn transported(&self, m: &MobiusMap) -> Result<SMPoint> {
        let z = self.z();
        let base = DiskPoint::from_complex(m.apply(z))?;
        Ok(SMPoint::new(base, self.theta + m.rotation_at(z)))
    }

    /// Fiber flip `v -> -v`.
    pub fn flipped(&self) -> SMPoint {
        SMPoint::new(self.base, self.theta + std::f64::consts::PI)
    }
}

/// Integration method.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum Method {
    /// Classical fixed-step RK4 (default; deterministic and reproducible).
    FixedRk4,
    /// Step-doubling RK4 with local error control.
    Adaptive { tol: f64 },
}

/// Parameters of a magnetic flow on a fixed surface.
#[derive(Debug, Clone, Copy)]
pub struct MagneticFlow<'a> {
    pub surface: &'a SurfaceModel,
    pub lambda: f64,
    pub dt: f64,
    pub method: Method,
}

impl<'a> MagneticFlow<'a> {
    pub fn new(surface: &'a SurfaceModel, lambda: f64, dt: f64) -> Self {
        Self {
            surface,
            lambda,
            dt,
            method: Method::FixedRk4,
        }
    }

    /// Vector field `X_lambda` in chart coordinates.
    pub fn field(&self, s: [f64; 3]) -> [f64; 3] {
        let z = Complex64::new(s[0], s[1]);
        let (v, gx, gy) = self.surface.total_exponent_jet1(z);
        let e = (-v).exp();
        let (c, sn) = (s[2].cos(), s[2].sin());
        [
            e * c,
            e * sn,
            e * (gy * c - gx * sn) + self.lambda * self.surface.magnetic_density(z),
        ]
    }

    /// Chart Jacobian of `X_lambda` (for the linearized flow).
    pub fn field_jacobian(&self, s: [f64; 3]) -> Mat3 {
        let z = Complex64::new(s[0], s[1]);
        let j = self.surface.total_exponent_jet(z);
        let fj = self.surface.magnetic_jet(z);
        let e = (-j.value).exp();
        let (c, sn) = (s[2].cos(), s[2].sin());
        let rot = j.dy * c - j.dx * sn;
        // columns are d/dx, d/dy, d/dtheta of the field
        Mat3::from_columns(
            [
                -j.dx * e * c,
                -j.dx * e * sn,
                -j.dx * e * rot + e * (j.dxy * c - j.dxx * sn) + self.lambda * fj.dx,
            ],
            [
                -j.dy * e * c,
                -j.dy * e * sn,
                -j.dy * e * rot + e * (j.dyy * c - j.dxy * sn) + self.lambda * fj.dy,
            ],
            [-e * sn, e * c, e * (-j.dy * sn - j.dx * c)],
        )
    }

    /// Frame fields `(X, H, V)` at a point, as chart vectors.
    pub fn frame_at(&self, p: &SMPoint) -> [[f64; 3]; 3] {
        frame_at(self.surface, p)
    }

    /// Margin of the Anosov criterion `lambda^2 + max K < 0`; positive means
    /// the sufficient condition holds. Uses sampled curvature extrema.
    pub fn anosov_margin(&self, max_curvature: f64) -> f64 {
        -(self.lambda * self.lambda + max_curvature)
    }

    /// Integrate from `p0` for time `T` (negative `T` flows backward).
    pub fn integrate(&self, p0: SMPoint, t_total: f64) -> Result<OrbitSegment> {
        self.integrate_with_stride(p0, t_total, 1)
    }

    /// Integrate, storing every `stride`-th sample (and always the last).
    pub fn integrate_with_stride(
        &self,
        p0: SMPoint,
        t_total: f64,
        stride: usize,
    ) -> Result<OrbitSegment> {
        let dir = if t_total < 0.0 { -1.0 } else { 1.0 };
        let n_steps = (t_total.abs() / self.dt).round().max(0.0) as usize;
        let h = dir * t_total.abs() / (n_steps.max(1)) as f64;

        let mut seg = OrbitSegment::new(p0, self.lambda, self.dt);
        let mut s = [p0.base.x, p0.base.y, p0.theta];
        let mut t = 0.0;
        for step in 1..=n_steps {
            match self.method {
                Method::FixedRk4 => {
                    s = rk4_step(|u| self.field(u), s, h);
                }
                Method::Adaptive { tol } => {
                    s = self.adaptive_step(s, h, tol, t)?;
                }
            }
            t = step as f64 * h;
            if !s[0].is_finite() || !s[1].is_finite() || !s[2].is_finite() {
                return Err(MagError::Integration {
                    t,
                    reason: "state became non-finite".into(),
                });
            }
            // pull back into the fundamental octagon when the base leaves it
            let z = Complex64::new(s[0], s[1]);
            if !self.surface.group.contains(z, 1e-13) {
                let (zr, word) = self.surface.group.reduce(z)?;
                let gamma = word.map.inverse(); // maps z -> zr
                let rot = gamma.rotation_at(z);
                s = [zr.x, zr.y, s[2] + rot];
                let inv_letters: Vec<Letter> = word
                    .letters
                    .iter()
                    .rev()
                    .map(|l| Letter {
                        gen: l.gen,
                        inverse: !l.inverse,
                    })
                    .collect();
                seg.push_reduction(gamma, inv_letters);
            }
            if step % stride == 0 || step == n_steps {
                seg.push_sample(t, SMPoint::new(DiskPoint::new(s[0], s[1])?, s[2]));
            }
        }
        Ok(seg)
    }

    fn adaptive_step(&self, s: [f64; 3], h: f64, tol: f64, t: f64) -> Result<[f64; 3]> {
        // Step doubling: one step of h vs two of h/2; bisect until the
        // discrepancy estimate is below tol, then apply substeps to cover h.
        let mut remaining = h;
        let mut cur = s;
        let mut sub = h;
        let mut guard = 0usize;
        while remaining.abs() > 1e-15 {
            guard += 1;
            if guard > 100_000 {
                return Err(MagError::Integration {
                    t,
                    reason: "adaptive step limit exceeded".into(),
                });
            }
            if sub.abs() > remaining.abs() {
                sub = remaining;
            }
            let one = rk4_step(|u| self.field(u), cur, sub);
            let half = rk4_step(|u| self.field(u), cur, sub / 2.0);
            let two = rk4_step(|u| self.field(u), half, sub / 2.0);
            let err = (0..3)
                .map(|i| (one[i] - two[i]).abs())
                .fold(0.0f64, f64::max);
            if err <= tol || sub.abs() < 1e-13 {
                if sub.abs() < 1e-13 && err > tol {
                    return Err(MagError::Integration {
                        t,
                        reason: format!("step-size underflow (err {err:.3e} > tol {tol:.3e})"),
                    });
                }
                cur = two;
                remaining -= sub;
                if err < tol / 32.0 {
                    sub *= 2.0;
                }
            } else {
                sub /= 2.0;
            }
        }
        Ok(cur)
    }
}

/// One classical RK4 step.
pub fn rk4_step<F: Fn([f64; 3]) -> [f64; 3]>(f: F, s: [f64; 3], h: f64) -> [f64; 3] {
    let k1 = f(s);
    let k2 = f(add_scaled(s, k1, h / 2.0));
    let k3 = f(add_scaled(s, k2, h / 2.0));
    let k4 = f(add_scaled(s, k3, h));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add_scaled(s: [f64; 3], k: [f64; 3], a: f64) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

/// Frame fields `(X, H, V)` at a point, as chart vectors.
pub fn frame_at(surface: &SurfaceModel, p: &SMPoint) -> [[f64; 3]; 3] {
    let j = surface.total_exponent_jet(p.z());
    let e = (-j.value).exp();
    let (c, s) = (p.theta.cos(), p.theta.sin());
    [
        [e * c, e * s, e * (j.dy * c - j.dx * s)],
        [-e * s, e * c, e * (-j.dy * s - j.dx * c)],
        [0.0, 0.0, 1.0],
    ]
}

/// Coframe `(alpha, beta, psi)` at a point, as chart covectors.
pub fn coframe_at(surface: &SurfaceModel, p: &SMPoint) -> [[f64; 3]; 3] {
    let j = surface.total_exponent_jet(p.z());
    let e = j.value.exp();
    let (c, s) = (p.theta.cos(), p.theta.sin());
    [
        [e * c, e * s, 0.0],
        [-e * s, e * c, 0.0],
        [-j.dy, j.dx, 1.0],
    ]
}

/// Frame matrix with columns `X, H, V`.
pub fn frame_matrix(surface: &SurfaceModel, p: &SMPoint) -> Mat3 {
    let f = frame_at(surface, p);
    Mat3::from_columns(f[0], f[1], f[2])
}

/// Deck stage: cumulative isometry applied to the stored orbit samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeckStage {
    pub map: MobiusMap,
    pub letters: Vec<Letter>,
}

/// A sampled orbit of the magnetic flow, stored reduced to the fundamental
/// domain with the deck words of every reduction event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub lambda: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub points: Vec<SMPoint>,
    /// `stage_of[i]` indexes into `stages` for sample `i`.
    pub stage_of: Vec<u32>,
    pub stages: Vec<DeckStage>,
}

impl OrbitSegment {
    fn new(p0: SMPoint, lambda: f64, dt: f64) -> Self {
        Self {
            lambda,
            dt,
            times: vec![0.0],
            points: vec![p0],
            stage_of: vec![0],
            stages: vec![DeckStage {
                map: MobiusMap::identity(),
                letters: Vec::new(),
            }],
        }
    }

    fn push_sample(&mut self, t: f64, p: SMPoint) {
        self.times.push(t);
        self.points.push(p);
        self.stage_of.push((self.stages.len() - 1) as u32);
    }

    fn push_reduction(&mut self, gamma: MobiusMap, letters: Vec<Letter>) {
        let last = self.stages.last().unwrap();
        let map = gamma.compose(&last.map);
        // reading order: leftmost letter applied last, so gamma's letters
        // prepend the previous stage's
        let mut ls = letters;
        ls.extend(last.letters.iter().cloned());
        self.stages.push(DeckStage { map, letters: ls });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn end(&self) -> SMPoint {
        *self.points.last().unwrap()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Accumulated deck word of the whole segment (maps the unreduced end
    /// point to the stored end point).
    pub fn total_deck_word(&self) -> GroupWord {
        let s = self.stages.last().unwrap();
        GroupWord {
            letters: s.letters.clone(),
            map: s.map,
        }
    }

    /// Map sample `j` into the chart of sample `i` (undo the deck mismatch).
    pub fn sample_in_chart_of(&self, i: usize, j: usize) -> (Complex64, f64) {
        let wi = &self.stages[self.stage_of[i] as usize].map;
        let wj = &self.stages[self.stage_of[j] as usize].map;
        let rel = wi.compose(&wj.inverse());
        let zj = self.points[j].z();
        let z = rel.apply(zj);
        let th = self.points[j].theta + rel.rotation_at(zj);
        (z, th)
    }

    /// Largest deviation of the finite-difference metric speed from 1, over
    /// interior samples (fourth-order stencils).
    pub fn unit_speed_residual(&self, surface: &SurfaceModel) -> f64 {
        let mut worst = 0.0f64;
        let n = self.len();
        if n < 5 {
            return 0.0;
        }
        for i in (2..n - 2).step_by(1 + n / 512) {
            let dt = self.times[i + 1] - self.times[i];
            let get = |j: usize| self.sample_in_chart_of(i, j).0;
            let vx = (-get(i + 2).re + 8.0 * get(i + 1).re - 8.0 * get(i - 1).re
                + get(i - 2).re)
                / (12.0 * dt);
            let vy = (-get(i + 2).im + 8.0 * get(i + 1).im - 8.0 * get(i - 1).im
                + get(i - 2).im)
                / (12.0 * dt);
            let z = self.points[i].z();
            let speed = (vx * vx + vy * vy).sqrt() * surface.metric_factor(z).sqrt();
            worst = worst.max((speed - 1.0).abs());
        }
        worst
    }
}

/// Signed geodesic curvature along an orbit, by finite differences of the
/// stored samples (independent of the vector field used to produce them).
///
/// Returns `(times, k_g)` for the interior samples.
pub fn geodesic_curvature_along(
    surface: &SurfaceModel,
    orbit: &OrbitSegment,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = orbit.len();
    if n < 5 {
        return Err(MagError::InvalidConfig(
            "geodesic curvature needs at least 5 samples".into(),
        ));
    }
    let mut times = Vec::with_capacity(n - 4);
    let mut ks = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let dt = orbit.times[i + 1] - orbit.times[i];
        let chart = |j: usize| orbit.sample_in_chart_of(i, j);
        let (zm2, tm2) = chart(i - 2);
        let (zm1, tm1) = chart(i - 1);
        let (z0, t0) = (orbit.points[i].z(), orbit.points[i].theta);
        let (zp1, tp1) = chart(i + 1);
        let (zp2, tp2) = chart(i + 2);
        // unwrap fiber angles around t0
        let unwrap = |t: f64| -> f64 {
            let mut d = t - t0;
            while d > std::f64::consts::PI {
                d -= TAU;
            }
            while d < -std::f64::consts::PI {
                d += TAU;
            }
            t0 + d
        };
        let d4 = |fm2: f64, fm1: f64, fp1: f64, fp2: f64| -> f64 {
            (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * dt)
        };
        let vx = d4(zm2.re, zm1.re, zp1.re, zp2.re);
        let vy = d4(zm2.im, zm1.im, zp1.im, zp2.im);
        let th_dot = d4(unwrap(tm2), unwrap(tm1), unwrap(tp1), unwrap(tp2));
        let speed_sq = vx * vx + vy * vy;
        if speed_sq < 1e-30 {
            return Err(MagError::Integration {
                t: orbit.times[i],
                reason: "degenerate (zero-speed) sample".into(),
            });
        }
        let j = surface.total_exponent_jet(z0);
        // parallel-transport rotation rate and metric speed
        let parallel = j.dy * vx - j.dx * vy;
        let speed = speed_sq.sqrt() * j.value.exp();
        ks.push((th_dot - parallel) / speed);
        times.push(orbit.times[i]);
    }
    Ok((times, ks))
}

/// Residual norms of the frame bracket relations
/// `[V,X] - H`, `[V,H] + X`, `[X,H] - K V`, by central finite differences
/// of the implemented frame fields with step `h`.
pub fn commutator_check(surface: &SurfaceModel, p: &SMPoint, h: f64) -> [f64; 3] {
    let field = |which: usize, s: [f64; 3]| -> [f64; 3] {
        let q = SMPoint::new(
            DiskPoint {
                x: s[0],
                y: s[1],
            },
            s[2],
        );
        frame_at(surface, &q)[which]
    };
    let bracket = |a: usize, b: usize| -> [f64; 3] {
        let s0 = [p.base.x, p.base.y, p.theta];
        let mut out = [0.0; 3];
        for dir in 0..3 {
            let mut ep = s0;
            ep[dir] += h;
            let mut em = s0;
            em[dir] -= h;
            let db = field(b, ep);
            let db_m = field(b, em);
            let da = field(a, ep);
            let da_m = field(a, em);
            let av = field(a, s0);
            let bv = field(b, s0);
            for i in 0..3 {
                out[i] += av[dir] * (db[i] - db_m[i]) / (2.0 * h)
                    - bv[dir] * (da[i] - da_m[i]) / (2.0 * h);
            }
        }
        out
    };
    let f = frame_at(surface, p);
    let k = surface.curvature_at(p.base);
    let vx = bracket(2, 0); // [V, X] should equal H
    let vh = bracket(2, 1); // [V, H] should equal -X
    let xh = bracket(0, 1); // [X, H] should equal K V
    let norm3 = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [
        norm3([vx[0] - f[1][0], vx[1] - f[1][1], vx[2] - f[1][2]]),
        norm3([vh[0] + f[0][0], vh[1] + f[0][1], vh[2] + f[0][2]]),
        norm3([xh[0] - k * f[2][0], xh[1] - k * f[2][1], xh[2] - k * f[2][2]]),
    ]
}

/// Quotient-aware distance on `SM` (minimum over the identity and the eight
/// side maps), used for closure and reversibility checks.
pub fn sm_distance(surface: &SurfaceModel, p: &SMPoint, q: &SMPoint) -> f64 {
    let mut best = f64::INFINITY;
    let mut consider = |z: Complex64, th: f64| {
        let d_base = crate::geom::hyperbolic_distance(p.z(), z);
        let mut d_th = (th - p.theta).rem_euclid(TAU);
        if d_th > std::f64::consts::PI {
            d_th = TAU - d_th;
        }
        let d = (d_base * d_base + d_th * d_th).sqrt();
        if d < best {
            best = d;
        }
    };
    consider(q.z(), q.theta);
    for m in &surface.group.side_maps {
        let z = m.apply(q.z());
        if z.norm_sqr() < 1.0 {
            consider(z, q.theta + m.rotation_at(q.z()));
        }
    }
    best
}

#[cfg(test)]
mod tests;
