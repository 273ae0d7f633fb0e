//! Points and distances in the Poincaré disk model.
//!
//! The base hyperbolic metric is `e^{2 phi0} |dz|^2` with
//! `phi0 = log(2 / (1 - |z|^2))`, so the unperturbed curvature is -1.

use crate::error::{MagError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Margin below which a point counts as "on the boundary" and is rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// A point in the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    /// Build a disk point, rejecting anything with `|z| >= 1 - 1e-12`.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x * x + y * y >= (1.0 - BOUNDARY_MARGIN) {
            return Err(MagError::OutsideDisk { x, y });
        }
        Ok(Self { x, y })
    }

    pub fn origin() -> Self {
        Self { x: 0.0, y: 0.0 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// `1 + cosh`-style distance kernel: `u(z, w) = cosh(d(z, w)) - 1`.
///
/// This is a smooth rational function of the coordinates, which keeps
/// derivative formulas free of the square-root kink of `d` itself.
pub fn cosh_dist_minus_one(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    2.0 * num / den
}

/// Hyperbolic distance between two points of the disk.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let u = cosh_dist_minus_one(z, w);
    (1.0 + u + (u * (2.0 + u)).sqrt()).ln()
}

/// Conformal exponent of the base metric, `phi0 = log(2/(1-|z|^2))`.
pub fn base_exponent(z: Complex64) -> f64 {
    (2.0 / (1.0 - z.norm_sqr())).ln()
}

/// Gradient of `phi0` in chart coordinates.
pub fn base_exponent_grad(z: Complex64) -> (f64, f64) {
    let p = 1.0 - z.norm_sqr();
    (2.0 * z.re / p, 2.0 * z.im / p)
}

/// Hessian of `phi0` as `(h_xx, h_xy, h_yy)`.
pub fn base_exponent_hess(z: Complex64) -> (f64, f64, f64) {
    let p = 1.0 - z.norm_sqr();
    let (x, y) = (z.re, z.im);
    (
        2.0 / p + 4.0 * x * x / (p * p),
        4.0 * x * y / (p * p),
        2.0 / p + 4.0 * y * y / (p * p),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_boundary_points() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(DiskPoint::new(0.9999999999999, 0.0).is_err());
        assert!(DiskPoint::new(0.999, 0.0).is_ok());
    }

    #[test]
    fn distance_from_origin_matches_closed_form() {
        // d(0, r) = 2 artanh(r) = log((1+r)/(1-r))
        for &r in &[0.1, 0.5, 0.9] {
            let d = hyperbolic_distance(Complex64::new(0.0, 0.0), Complex64::new(r, 0.0));
            let expect = ((1.0 + r) / (1.0 - r)).ln();
            assert!((d - expect).abs() < 1e-13, "r={r}: {d} vs {expect}");
        }
    }

    #[test]
    fn base_hessian_matches_finite_differences() {
        let z = Complex64::new(0.3, -0.2);
        let h = 1e-5;
        let f = |z: Complex64| base_exponent(z);
        let fd_xx = (f(z + Complex64::new(h, 0.0)) - 2.0 * f(z) + f(z - Complex64::new(h, 0.0)))
            / (h * h);
        let fd_yy = (f(z + Complex64::new(0.0, h)) - 2.0 * f(z) + f(z - Complex64::new(0.0, h)))
            / (h * h);
        let fd_xy = (f(z + Complex64::new(h, h)) - f(z + Complex64::new(h, -h))
            - f(z + Complex64::new(-h, h))
            + f(z + Complex64::new(-h, -h)))
            / (4.0 * h * h);
        let (hxx, hxy, hyy) = base_exponent_hess(z);
        assert!((hxx - fd_xx).abs() < 1e-5);
        assert!((hxy - fd_xy).abs() < 1e-5);
        assert!((hyy - fd_yy).abs() < 1e-5);
    }
}
