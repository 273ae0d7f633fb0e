//! Möbius transformations preserving the unit disk.
//!
//! Maps are stored in SU(1,1) form `z -> (a z + b) / (conj(b) z + conj(a))`
//! with `|a|^2 - |b|^2 = 1`; composition is the 2x2 matrix product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation along the diameter at angle `psi`, by
    /// hyperbolic length `t` (positive direction `e^{i psi}`).
    pub fn translation(psi: f64, t: f64) -> Self {
        let a = Complex64::new((t / 2.0).cosh(), 0.0);
        let b = Complex64::from_polar((t / 2.0).sinh(), psi);
        Self { a, b }
    }

    /// Rotation by `angle` about the origin.
    pub fn rotation(angle: f64) -> Self {
        Self {
            a: Complex64::from_polar(1.0, angle / 2.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Complex derivative `gamma'(z) = 1 / (conj(b) z + conj(a))^2`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.b.conj() * z + self.a.conj();
        (den * den).finv()
    }

    /// Chart rotation `arg gamma'(z)` the map induces on tangent directions.
    pub fn rotation_at(&self, z: Complex64) -> f64 {
        -2.0 * (self.b.conj() * z + self.a.conj()).arg()
    }

    /// Gradient of `z -> rotation_at(z)` as a chart covector `(d/dx, d/dy)`.
    pub fn rotation_gradient(&self, z: Complex64) -> (f64, f64) {
        // arg w with w = conj(b) z + conj(a); d(arg w) = Im(conj(b) dz / w)
        let w = self.b.conj() * z + self.a.conj();
        let r = self.b.conj() / w;
        (-2.0 * r.im, -2.0 * r.re)
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &MobiusMap) -> Self {
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        Self { a, b }.renormalized()
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Rescale so `|a|^2 - |b|^2 = 1` exactly (drift from long compositions).
    pub fn renormalized(&self) -> Self {
        let det = self.a.norm_sqr() - self.b.norm_sqr();
        let s = det.sqrt().recip();
        Self {
            a: self.a * s,
            b: self.b * s,
        }
    }

    /// Determinant defect `|a|^2 - |b|^2 - 1`.
    pub fn determinant_defect(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - 1.0
    }

    /// Translation length of a hyperbolic element, `2 arccosh(|Re a|)`.
    /// Returns 0 for elliptic/parabolic elements (`|Re a| <= 1`).
    pub fn translation_length(&self) -> f64 {
        let t = self.a.re.abs();
        if t <= 1.0 {
            0.0
        } else {
            2.0 * t.acosh()
        }
    }

    /// Attracting and repelling fixed points on the boundary circle, and the
    /// axis direction, for a hyperbolic element.
    ///
    /// Returns `(repelling, attracting)` unit complex numbers.
    pub fn axis_endpoints(&self) -> Option<(Complex64, Complex64)> {
        // Fixed points solve conj(b) z^2 + (conj(a) - a) z - b = 0.
        let cb = self.b.conj();
        if cb.norm() < 1e-15 {
            return None; // rotation about the origin
        }
        let beta = self.a.conj() - self.a;
        let disc = (beta * beta + 4.0 * cb * self.b).sqrt();
        let z1 = (-beta + disc) / (2.0 * cb);
        let z2 = (-beta - disc) / (2.0 * cb);
        // classify by |gamma'|: attracting fixed point has |gamma'| < 1
        let (mut rep, mut att) = (z1, z2);
        if self.derivative(z1).norm() < 1.0 {
            rep = z2;
            att = z1;
        }
        Some((rep / rep.norm(), att / att.norm()))
    }

    /// Maximum displacement against `other` over a few probe points; used
    /// for identity checks in tests and group diagnostics.
    pub fn map_distance(&self, other: &MobiusMap) -> f64 {
        let probes = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.4),
            Complex64::new(0.1, -0.5),
        ];
        probes
            .iter()
            .map(|&z| (self.apply(z) - other.apply(z)).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn translation_moves_origin_along_axis() {
        let t = 1.3;
        let m = MobiusMap::translation(0.0, t);
        let img = m.apply(Complex64::new(0.0, 0.0));
        assert!((img.re - (t / 2.0).tanh()).abs() < 1e-14);
        assert!(img.im.abs() < 1e-14);
        assert!((m.translation_length() - t).abs() < 1e-12);
    }

    #[test]
    fn rotation_gradient_matches_fd() {
        let m = MobiusMap::translation(0.7, 2.0);
        let z = Complex64::new(0.2, -0.3);
        let h = 1e-6;
        let fx = (m.rotation_at(z + Complex64::new(h, 0.0))
            - m.rotation_at(z - Complex64::new(h, 0.0)))
            / (2.0 * h);
        let fy = (m.rotation_at(z + Complex64::new(0.0, h))
            - m.rotation_at(z - Complex64::new(0.0, h)))
            / (2.0 * h);
        let (gx, gy) = m.rotation_gradient(z);
        assert!((fx - gx).abs() < 1e-8);
        assert!((fy - gy).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn composition_keeps_unit_determinant(t1 in 0.1f64..3.0, p1 in 0.0f64..6.28,
                                              t2 in 0.1f64..3.0, p2 in 0.0f64..6.28) {
            let m = MobiusMap::translation(p1, t1).compose(&MobiusMap::translation(p2, t2));
            prop_assert!(m.determinant_defect().abs() < 1e-12);
            // inverse really inverts
            let id = m.compose(&m.inverse());
            prop_assert!(id.map_distance(&MobiusMap::identity()) < 1e-12);
        }

        #[test]
        fn preserves_disk(t in 0.1f64..3.0, p in 0.0f64..6.28, r in 0.0f64..0.95, a in 0.0f64..6.28) {
            let m = MobiusMap::translation(p, t);
            let z = Complex64::from_polar(r, a);
            prop_assert!(m.apply(z).norm() < 1.0);
        }
    }
}
