//! One-forms on the quotient surface: closed representatives with
//! prescribed periods, Hodge projection to harmonic representatives, exact
//! forms from potentials, and the fiber restriction into modes +-1.
//!
//! A closed form with integer periods is built as `du` where
//! `u = sum_w phi_w(z) m(w)` runs over the orbit of the origin with a
//! partition of unity `phi_w` and a homomorphism `m` of the group into the
//! reals (well defined: the octagon relator has zero exponent sums). `u`
//! itself jumps by `m(gamma)` across the gluing, so `du` descends to a
//! closed 1-form with period `m(gamma_k)` around the k-th pairing loop.

use super::sparse::{cgls, CsrMatrix};
use crate::error::{MagError, Result};
use crate::fourier::FourierField;
use crate::geom::bump::{dist_sq_jet, Jet2};
use crate::geom::SurfaceModel;
use crate::grid::SMGrid;
use num_complex::Complex64;


/// Quotient rule for jets: returns the jet of `t/s`.
fn ratio_jet(t: &Jet2, s: &Jet2) -> Jet2 {
    let v = t.value / s.value;
    let vx = (t.dx - v * s.dx) / s.value;
    let vy = (t.dy - v * s.dy) / s.value;
    Jet2 {
        value: v,
        dx: vx,
        dy: vy,
        dxx: (t.dxx - 2.0 * vx * s.dx - v * s.dxx) / s.value,
        dxy: (t.dxy - vx * s.dy - vy * s.dx - v * s.dxy) / s.value,
        dyy: (t.dyy - 2.0 * vy * s.dy - v * s.dyy) / s.value,
    }
}

/// Compactly supported partition bump `B(d^2) = (1 - d^2/R^2)^4`.
fn partition_jet(z: Complex64, center: Complex64, radius: f64) -> Jet2 {
    let d2 = dist_sq_jet(z, center);
    let r2 = radius * radius;
    let s = d2.value / r2;
    if s >= 1.0 {
        return Jet2::default();
    }
    let b = (1.0 - s).powi(4);
    let b1 = -4.0 * (1.0 - s).powi(3) / r2;
    let b2 = 12.0 * (1.0 - s).powi(2) / (r2 * r2);
    Jet2 {
        value: b,
        dx: b1 * d2.dx,
        dy: b1 * d2.dy,
        dxx: b2 * d2.dx * d2.dx + b1 * d2.dxx,
        dxy: b2 * d2.dx * d2.dy + b1 * d2.dxy,
        dyy: b2 * d2.dy * d2.dy + b1 * d2.dyy,
    }
}

/// The differential `du` of the orbit partition function with weights `m`.
#[derive(Debug, Clone)]
pub struct JumpForm {
    /// (orbit point `w(0)`, weight `m(w)`)
    terms: Vec<(Complex64, f64)>,
    radius: f64,
}

impl JumpForm {
    /// Build for the homomorphism sending generator `k` to `m_vec[k]`.
    pub fn new(surface: &SurfaceModel, m_vec: [f64; 4]) -> Self {
        let radius = 2.9; // exceeds the octagon circumradius: full covering
        let reach = surface.group.circumradius + 3.2 + radius;
        let orbit = surface
            .group
            .orbit_ball(Complex64::new(0.0, 0.0), reach, 12);
        let terms = orbit
            .iter()
            .map(|e| {
                let m: f64 = e
                    .exponents
                    .iter()
                    .zip(m_vec.iter())
                    .map(|(&k, &v)| k as f64 * v)
                    .sum();
                (e.point, m)
            })
            .collect();
        Self { terms, radius }
    }

    /// Jet of the local branch of `u` at `z` (well defined up to an additive
    /// constant; derivatives are global).
    pub fn u_jet(&self, z: Complex64) -> Jet2 {
        let mut num = Jet2::default();
        let mut den = Jet2::default();
        for &(c, m) in &self.terms {
            let b = partition_jet(z, c, self.radius);
            if b.value == 0.0 && b.dx == 0.0 {
                continue;
            }
            den.add_assign(&b);
            let mut weighted = b;
            weighted.value *= m;
            weighted.dx *= m;
            weighted.dy *= m;
            weighted.dxx *= m;
            weighted.dxy *= m;
            weighted.dyy *= m;
            num.add_assign(&weighted);
        }
        ratio_jet(&num, &den)
    }

    /// Chart components `(P, Q)` of `du` at `z`.
    pub fn components(&self, z: Complex64) -> (f64, f64) {
        let j = self.u_jet(z);
        (j.dx, j.dy)
    }

    /// Euclidean divergence `Delta u` (the Hodge right-hand side).
    pub fn divergence(&self, z: Complex64) -> f64 {
        let j = self.u_jet(z);
        j.dxx + j.dyy
    }
}

/// A 1-form with its decomposition bookkeeping and node components.
#[derive(Debug, Clone)]
pub struct OneForm {
    /// Chart components at grid nodes.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Coefficients in the 4-dimensional harmonic basis (zero for exact).
    pub harmonic_coeffs: [f64; 4],
    /// Potential of the exact part, as node values (when known).
    pub potential: Option<Vec<f64>>,
    /// Analytic closed part for off-node evaluation.
    pub jump: Option<JumpForm>,
    /// Grid potential whose differential is subtracted from the jump part.
    pub hodge_potential: Option<Vec<f64>>,
}

impl OneForm {
    /// Exact form `dh` from node values of a potential.
    pub fn exact_from_potential(grid: &SMGrid, h: &[f64]) -> OneForm {
        let hc: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let d = grid.d_z(&hc, 0);
        let p: Vec<f64> = d.iter().map(|v| 2.0 * v.re).collect();
        let q: Vec<f64> = d.iter().map(|v| -2.0 * v.im).collect();
        OneForm {
            p,
            q,
            harmonic_coeffs: [0.0; 4],
            potential: Some(h.to_vec()),
            jump: None,
            hodge_potential: None,
        }
    }

    /// Fiber restriction `f(x, v) = omega_x(v)` as a mode +-1 field.
    pub fn fiber_field(&self, grid: &SMGrid) -> FourierField {
        let mut field = FourierField::zero(grid);
        let mut plus = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
        for i in 0..grid.n_nodes() {
            plus[i] = grid.exp_m_phi[i] * Complex64::new(self.p[i], -self.q[i]) * 0.5;
        }
        let minus: Vec<Complex64> = plus.iter().map(|v| v.conj()).collect();
        field.set_mode(1, &plus);
        field.set_mode(-1, &minus);
        field
    }

    /// Evaluate chart components at an arbitrary disk point (uses the
    /// analytic jump part plus the interpolated potential gradients).
    pub fn components_at(
        &self,
        grid: &SMGrid,
        surface: &SurfaceModel,
        z: Complex64,
    ) -> Result<(f64, f64)> {
        let (mut p, mut q) = match &self.jump {
            Some(j) => j.components(z),
            None => (0.0, 0.0),
        };
        let mut subtract_grad = |h: &[f64], sign: f64| -> Result<()> {
            // gradient of the quotient scalar at the reduced point, pulled
            // back to the chart at z
            let (red, word) = if surface.group.contains(z, 1e-13) {
                (z, None)
            } else {
                let (r, w) = surface.group.reduce(z)?;
                (r.to_complex(), Some(w))
            };
            let rule = grid.mls_gradient(red)?;
            let mut wx = 0.0;
            let mut wy = 0.0;
            for &(idx, gx, gy) in &rule {
                wx += gx * h[idx as usize];
                wy += gy * h[idx as usize];
            }
            let w_cplx = Complex64::new(wx, -wy);
            let w_at_z = match word {
                None => w_cplx,
                Some(w) => {
                    // gamma: z -> red; (h~)' (z) = h'(red) * gamma'(z)
                    let gamma = w.map.inverse();
                    w_cplx * gamma.derivative(z)
                }
            };
            p += sign * w_at_z.re;
            q += sign * -w_at_z.im;
            Ok(())
        };
        if let Some(h) = &self.hodge_potential {
            subtract_grad(h, -1.0)?;
        }
        if self.jump.is_none() {
            if let Some(h) = &self.potential {
                subtract_grad(h, 1.0)?;
            }
        }
        Ok((p, q))
    }

    /// Restriction value `omega_x(v)` at an SM point.
    pub fn restriction_at(
        &self,
        grid: &SMGrid,
        surface: &SurfaceModel,
        p: &crate::flow::SMPoint,
    ) -> Result<f64> {
        let z = p.z();
        let (px, qy) = self.components_at(grid, surface, z)?;
        let e = (-surface.total_exponent_jet(z).value).exp();
        Ok(e * (px * p.theta.cos() + qy * p.theta.sin()))
    }
}

/// Line integral of the analytic jump part along the segment 0 -> end.
pub fn segment_integral_jump(jump: &JumpForm, end: Complex64, samples: usize) -> f64 {
    let mut acc = 0.0;
    let mut prev_val = {
        let (p, q) = jump.components(Complex64::new(0.0, 0.0));
        p * end.re + q * end.im
    };
    for k in 1..=samples {
        let t = k as f64 / samples as f64;
        let z = end * t;
        let (p, q) = jump.components(z);
        let val = p * end.re + q * end.im;
        acc += 0.5 * (prev_val + val) / samples as f64;
        prev_val = val;
    }
    acc
}

/// The 4-dimensional harmonic basis: jump forms Hodge-projected so their
/// euclidean divergence vanishes (conformally invariant harmonicity).
pub fn harmonic_basis(surface: &SurfaceModel, grid: &SMGrid) -> Result<Vec<OneForm>> {
    let lap = assemble_laplacian(grid);
    let mut out = Vec::new();
    for k in 0..4 {
        let mut m = [0.0; 4];
        m[k] = 1.0;
        let jump = JumpForm::new(surface, m);
        // rhs: Delta u at nodes
        let rhs: Vec<Complex64> = grid
            .nodes
            .iter()
            .map(|&z| Complex64::new(jump.divergence(z), 0.0))
            .collect();
        // compatibility: subtract the euclidean-measure mean
        let mean: Complex64 =
            rhs.iter().sum::<Complex64>() / Complex64::new(rhs.len() as f64, 0.0);
        let b: Vec<Complex64> = rhs.iter().map(|v| v - mean).collect();
        let sol = cgls(&lap, &b, 40_000, 1e-12);
        if !sol.converged && sol.residual > 1e-7 {
            return Err(MagError::SolverStagnation {
                iterations: sol.iterations,
                residual: sol.residual,
                history: sol.history,
            });
        }
        let h: Vec<f64> = sol.x.iter().map(|v| v.re).collect();
        let hc: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let d = grid.d_z(&hc, 0);
        let mut p = Vec::with_capacity(grid.n_nodes());
        let mut q = Vec::with_capacity(grid.n_nodes());
        for (i, &z) in grid.nodes.iter().enumerate() {
            let (jp, jq) = jump.components(z);
            p.push(jp - 2.0 * d[i].re);
            q.push(jq + 2.0 * d[i].im);
        }
        let mut coeffs = [0.0; 4];
        coeffs[k] = 1.0;
        out.push(OneForm {
            p,
            q,
            harmonic_coeffs: coeffs,
            potential: None,
            jump: Some(jump),
            hodge_potential: Some(h),
        });
    }
    Ok(out)
}

/// Periods of a harmonic-basis form around the four pairing loops, by
/// quadrature of the analytic jump part (the potential parts drop out).
pub fn periods(surface: &SurfaceModel, form: &OneForm) -> Result<[f64; 4]> {
    let jump = form
        .jump
        .as_ref()
        .ok_or_else(|| MagError::InvalidConfig("form has no analytic closed part".into()))?;
    let mut out = [0.0; 4];
    for (k, g) in surface.group.generators.iter().enumerate() {
        let end = g.apply(Complex64::new(0.0, 0.0));
        out[k] = segment_integral_jump(jump, end, 4000);
    }
    Ok(out)
}

/// 5-point euclidean Laplacian as a sparse matrix with ghost closure.
pub fn assemble_laplacian(grid: &SMGrid) -> CsrMatrix {
    let nn = grid.n_nodes();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut trip = Vec::new();
    for i in 0..nn {
        for slot in 0..4 {
            match grid.neighbors[i][slot] {
                crate::grid::NeighborRef::Interior(t) => {
                    trip.push((i as u32, t, Complex64::new(inv_h2, 0.0)));
                }
                crate::grid::NeighborRef::Ghost(g) => {
                    let rule = &grid.ghosts[g as usize];
                    for &(t, w) in &rule.weights {
                        trip.push((i as u32, t, Complex64::new(w * inv_h2, 0.0)));
                    }
                }
            }
        }
        trip.push((i as u32, i as u32, Complex64::new(-4.0 * inv_h2, 0.0)));
    }
    CsrMatrix::from_triplets(nn, nn, trip)
}
