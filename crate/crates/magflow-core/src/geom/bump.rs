//! Radially symmetric Gaussian bumps in hyperbolic distance, with exact
//! first and second chart derivatives.
//!
//! A bump of amplitude `A`, width `w`, center `c` evaluates to
//! `A exp(-d(z,c)^2 / (2 w^2))`. Everything is routed through the smooth
//! kernel `u = cosh d - 1` (a rational function of the chart coordinates)
//! and `G(u) = d^2 = arccosh(1+u)^2`, which is analytic at `u = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Specification of a single bump (before group symmetrization).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

/// Value, gradient and Hessian of a scalar function of the chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn add_assign(&mut self, o: &Jet2) {
        self.value += o.value;
        self.dx += o.dx;
        self.dy += o.dy;
        self.dxx += o.dxx;
        self.dxy += o.dxy;
        self.dyy += o.dyy;
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

/// `G(u) = arccosh(1+u)^2` and its first two derivatives.
///
/// Series near 0 (radius of convergence 2): G = 2u - u^2/3 + 4u^3/45 - u^4/35.
fn g_of_u(u: f64) -> (f64, f64, f64) {
    if u < 1e-3 {
        let g = u * (2.0 + u * (-1.0 / 3.0 + u * (4.0 / 45.0 - u / 35.0)));
        let g1 = 2.0 + u * (-2.0 / 3.0 + u * (4.0 / 15.0 - u * 4.0 / 35.0));
        let g2 = -2.0 / 3.0 + u * (8.0 / 15.0 - u * 12.0 / 35.0);
        (g, g1, g2)
    } else {
        let cosh_d = 1.0 + u;
        let sinh_d = (u * (2.0 + u)).sqrt();
        let d = (cosh_d + sinh_d).ln();
        let g = d * d;
        let g1 = 2.0 * d / sinh_d;
        let g2 = 2.0 * (sinh_d - d * cosh_d) / (sinh_d * sinh_d * sinh_d);
        (g, g1, g2)
    }
}

/// Jet of the squared hyperbolic distance `d(z, center)^2` (smooth at the
/// center thanks to the `G(u)` route).
pub fn dist_sq_jet(z: Complex64, center: Complex64) -> Jet2 {
    let k_c = 1.0 - center.norm_sqr();
    let dz = z - center;
    let q = dz.norm_sqr();
    let p = 1.0 - z.norm_sqr();
    let u = 2.0 * q / (p * k_c);
    let (g, g1, g2) = g_of_u(u);
    let qx = 2.0 * dz.re;
    let qy = 2.0 * dz.im;
    let px = -2.0 * z.re;
    let py = -2.0 * z.im;
    let inv_p = 1.0 / p;
    let i2 = inv_p * inv_p;
    let i3 = i2 * inv_p;
    let two_over_kc = 2.0 / k_c;
    let ux = two_over_kc * (qx * inv_p - q * px * i2);
    let uy = two_over_kc * (qy * inv_p - q * py * i2);
    let hq = 2.0;
    let hp = -2.0;
    let wxx = hq * inv_p - 2.0 * qx * px * i2 - q * hp * i2 + 2.0 * q * px * px * i3;
    let wyy = hq * inv_p - 2.0 * qy * py * i2 - q * hp * i2 + 2.0 * q * py * py * i3;
    let wxy = -(qx * py + qy * px) * i2 + 2.0 * q * px * py * i3;
    let uxx = two_over_kc * wxx;
    let uyy = two_over_kc * wyy;
    let uxy = two_over_kc * wxy;
    Jet2 {
        value: g,
        dx: g1 * ux,
        dy: g1 * uy,
        dxx: g2 * ux * ux + g1 * uxx,
        dxy: g2 * ux * uy + g1 * uxy,
        dyy: g2 * uy * uy + g1 * uyy,
    }
}

/// A bump anchored at a fixed center, ready for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct AnchoredBump {
    pub center: Complex64,
    /// `1 - |center|^2`, precomputed.
    k_c: f64,
    /// `-1 / (2 width^2)`.
    neg_half_inv_w2: f64,
    pub amplitude: f64,
    /// Hyperbolic distance beyond which the bump is treated as zero.
    pub cutoff_distance: f64,
    /// Euclidean disk bounding the support (hyperbolic balls are euclidean
    /// disks in this model): center and squared radius, for cheap rejection.
    pub euclid_center: Complex64,
    pub euclid_radius_sq: f64,
}

impl AnchoredBump {
    pub fn new(center: Complex64, width: f64, amplitude: f64) -> Self {
        // exp(-d^2/2w^2) < 1e-18 once d > w sqrt(2 * 41.5)
        let cutoff_distance = width * (2.0 * 41.5_f64).sqrt();
        let th = (cutoff_distance / 2.0).tanh();
        let c2 = center.norm_sqr();
        let den = 1.0 - th * th * c2;
        let euclid_center = center * ((1.0 - th * th) / den);
        let euclid_radius = th * (1.0 - c2) / den;
        Self {
            center,
            k_c: 1.0 - center.norm_sqr(),
            neg_half_inv_w2: -0.5 / (width * width),
            amplitude,
            cutoff_distance,
            euclid_center,
            euclid_radius_sq: euclid_radius * euclid_radius,
        }
    }

    /// True when the bump is identically zero (beyond cutoff) at `z`.
    #[inline]
    pub fn rejects(&self, z: Complex64) -> bool {
        (z - self.euclid_center).norm_sqr() > self.euclid_radius_sq
    }

    /// Value and gradient only (no Hessian); cheaper for flow right-hand
    /// sides.
    pub fn jet1(&self, z: Complex64) -> (f64, f64, f64) {
        let dz = z - self.center;
        let q = dz.norm_sqr();
        let p = 1.0 - z.norm_sqr();
        let u = 2.0 * q / (p * self.k_c);
        let (g, g1, _) = g_of_u(u);
        let s = self.neg_half_inv_w2 * g;
        if s < -42.0 {
            return (0.0, 0.0, 0.0);
        }
        let b = self.amplitude * s.exp();
        let s1 = self.neg_half_inv_w2 * g1;
        let qx = 2.0 * dz.re;
        let qy = 2.0 * dz.im;
        let px = -2.0 * z.re;
        let py = -2.0 * z.im;
        let inv_p = 1.0 / p;
        let i2 = inv_p * inv_p;
        let two_over_kc = 2.0 / self.k_c;
        let ux = two_over_kc * (qx * inv_p - q * px * i2);
        let uy = two_over_kc * (qy * inv_p - q * py * i2);
        (b, b * s1 * ux, b * s1 * uy)
    }

    /// Evaluate value/gradient/Hessian at `z`.
    pub fn jet(&self, z: Complex64) -> Jet2 {
        if self.rejects(z) {
            return Jet2::default();
        }
        let dz = z - self.center;
        let q = dz.norm_sqr();
        let p = 1.0 - z.norm_sqr();
        // u = 2q / (p k_c)
        let u = 2.0 * q / (p * self.k_c);

        let (g, g1, g2) = g_of_u(u);
        let s = self.neg_half_inv_w2 * g;
        if s < -42.0 {
            return Jet2::default();
        }
        let b = self.amplitude * s.exp();
        let s1 = self.neg_half_inv_w2 * g1;
        let s2 = self.neg_half_inv_w2 * g2;

        // derivatives of u = (2/k_c) q/p
        let qx = 2.0 * dz.re;
        let qy = 2.0 * dz.im;
        let px = -2.0 * z.re;
        let py = -2.0 * z.im;
        let inv_p = 1.0 / p;
        let i2 = inv_p * inv_p;
        let i3 = i2 * inv_p;
        let two_over_kc = 2.0 / self.k_c;
        let ux = two_over_kc * (qx * inv_p - q * px * i2);
        let uy = two_over_kc * (qy * inv_p - q * py * i2);
        // Hessian of q/p:
        //   Hq/p - (grad q (x) grad p + grad p (x) grad q)/p^2
        //   - q Hp / p^2 + 2 q grad p (x) grad p / p^3
        let hq = 2.0; // Hess q = 2 I
        let hp = -2.0; // Hess p = -2 I
        let wxx = hq * inv_p - 2.0 * qx * px * i2 - q * hp * i2 + 2.0 * q * px * px * i3;
        let wyy = hq * inv_p - 2.0 * qy * py * i2 - q * hp * i2 + 2.0 * q * py * py * i3;
        let wxy = -(qx * py + qy * px) * i2 + 2.0 * q * px * py * i3;
        let uxx = two_over_kc * wxx;
        let uyy = two_over_kc * wyy;
        let uxy = two_over_kc * wxy;

        Jet2 {
            value: b,
            dx: b * s1 * ux,
            dy: b * s1 * uy,
            dxx: b * ((s2 + s1 * s1) * ux * ux + s1 * uxx),
            dxy: b * ((s2 + s1 * s1) * ux * uy + s1 * uxy),
            dyy: b * ((s2 + s1 * s1) * uy * uy + s1 * uyy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::disk::hyperbolic_distance;

    fn value_only(b: &AnchoredBump, z: Complex64) -> f64 {
        let d = hyperbolic_distance(z, b.center);
        b.amplitude * (b.neg_half_inv_w2 * d * d).exp()
    }

    #[test]
    fn jet_value_matches_distance_formula() {
        let b = AnchoredBump::new(Complex64::new(0.2, -0.1), 0.35, 0.1);
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.2), (-0.4, 0.5), (0.19, -0.11)] {
            let z = Complex64::new(x, y);
            let j = b.jet(z);
            assert!(
                (j.value - value_only(&b, z)).abs() < 1e-14,
                "at ({x},{y}): {} vs {}",
                j.value,
                value_only(&b, z)
            );
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let b = AnchoredBump::new(Complex64::new(0.15, 0.05), 0.4, 0.08);
        let h = 1e-5;
        for &(x, y) in &[(0.1, -0.2), (0.3, 0.3), (0.16, 0.05)] {
            let z = Complex64::new(x, y);
            let j = b.jet(z);
            let f = |z: Complex64| b.jet(z).value;
            let ex = Complex64::new(h, 0.0);
            let ey = Complex64::new(0.0, h);
            let fd_x = (f(z + ex) - f(z - ex)) / (2.0 * h);
            let fd_y = (f(z + ey) - f(z - ey)) / (2.0 * h);
            let fd_xx = (f(z + ex) - 2.0 * f(z) + f(z - ex)) / (h * h);
            let fd_yy = (f(z + ey) - 2.0 * f(z) + f(z - ey)) / (h * h);
            let fd_xy =
                (f(z + ex + ey) - f(z + ex - ey) - f(z - ex + ey) + f(z - ex - ey)) / (4.0 * h * h);
            assert!((j.dx - fd_x).abs() < 1e-8, "dx");
            assert!((j.dy - fd_y).abs() < 1e-8, "dy");
            assert!((j.dxx - fd_xx).abs() < 2e-5, "dxx {} {}", j.dxx, fd_xx);
            assert!((j.dyy - fd_yy).abs() < 2e-5, "dyy");
            assert!((j.dxy - fd_xy).abs() < 2e-5, "dxy");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for &u in &[9e-4, 1.1e-3] {
            let (g_a, g1_a, g2_a) = g_of_u(u);
            // reference via high-precision closed form
            let d = (1.0 + u + (u * (2.0 + u)).sqrt()).ln();
            assert!((g_a - d * d).abs() < 1e-14);
            let sinh_d = (u * (2.0 + u)).sqrt();
            assert!((g1_a - 2.0 * d / sinh_d).abs() < 1e-10);
            let g2_ref = 2.0 * (sinh_d - d * (1.0 + u)) / sinh_d.powi(3);
            assert!((g2_a - g2_ref).abs() < 1e-8);
        }
    }
}
