//! The linearized flow `d phi^lambda_T`, expressed in the frame `(X, H, V)`.
//!
//! The 3x3 chart Jacobian is integrated alongside the base orbit; at every
//! fundamental-domain reduction it is conjugated by the deck differential.
//! Frame expression at the endpoints removes the conformal chart factors, so
//! determinants and growth rates are the intrinsic ones.

use super::linalg::Mat3;
use super::{MagneticFlow, SMPoint};
use crate::error::{MagError, Result};
use crate::geom::DiskPoint;
use num_complex::Complex64;

/// Result of transporting the linearization along an orbit.
#[derive(Debug, Clone)]
pub struct FrameTransport {
    /// Derivative of the time-`T` flow in the `(X, H, V)` frame:
    /// frame components at the endpoint of images of frame vectors at the
    /// start.
    pub matrix: Mat3,
    /// Chart-coordinate Jacobian mapping `T_p` to the tangent space at the
    /// reduced endpoint (deck differentials already applied).
    pub chart_matrix: Mat3,
    /// Accumulated deck map: stored endpoint = deck_map(cover endpoint).
    pub deck_map: crate::geom::MobiusMap,
    /// Endpoint of the orbit (reduced).
    pub end: SMPoint,
    /// Chart-space Jacobian norm reached (conditioning indicator).
    pub chart_norm: f64,
}

/// Deck differential on `SM` at `z`: base block is the conformal derivative,
/// the fiber row is the gradient of the rotation angle.
fn deck_differential(map: &crate::geom::MobiusMap, z: Complex64) -> Mat3 {
    let d = map.derivative(z);
    let (rx, ry) = map.rotation_gradient(z);
    Mat3::from_columns([d.re, d.im, rx], [-d.im, d.re, ry], [0.0, 0.0, 1.0])
}

/// Transport the identity frame along the orbit of `p0` for time `t_total`.
///
/// `norm_cap` guards against double-precision overflow of the linearization;
/// exceeding it returns [`MagError::LinearizationOverflow`].
pub fn variational_transport(
    flow: &MagneticFlow,
    p0: SMPoint,
    t_total: f64,
    norm_cap: f64,
) -> Result<FrameTransport> {
    let dir = if t_total < 0.0 { -1.0 } else { 1.0 };
    let n_steps = (t_total.abs() / flow.dt).round().max(1.0) as usize;
    let h = dir * t_total.abs() / n_steps as f64;
    if t_total == 0.0 {
        return Ok(FrameTransport {
            matrix: Mat3::identity(),
            chart_matrix: Mat3::identity(),
            deck_map: crate::geom::MobiusMap::identity(),
            end: p0,
            chart_norm: 1.0,
        });
    }

    // augmented state: (x, y, theta, J columns)
    let mut s = [p0.base.x, p0.base.y, p0.theta];
    let mut jac = Mat3::identity();
    let mut deck = crate::geom::MobiusMap::identity();
    let frame0 = super::frame_matrix(flow.surface, &p0);

    for step in 0..n_steps {
        // RK4 on the pair (s, J): J' = Df(s(t)) J
        let f = |u: [f64; 3]| flow.field(u);
        let k1 = f(s);
        let a1 = flow.field_jacobian(s).mul(&jac);
        let s2 = add3(s, k1, h / 2.0);
        let j2 = addm(&jac, &a1, h / 2.0);
        let k2 = f(s2);
        let a2 = flow.field_jacobian(s2).mul(&j2);
        let s3 = add3(s, k2, h / 2.0);
        let j3 = addm(&jac, &a2, h / 2.0);
        let k3 = f(s3);
        let a3 = flow.field_jacobian(s3).mul(&j3);
        let s4 = add3(s, k3, h);
        let j4 = addm(&jac, &a3, h);
        let k4 = f(s4);
        let a4 = flow.field_jacobian(s4).mul(&j4);
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        jac = addm4(&jac, &a1, &a2, &a3, &a4, h / 6.0);

        let t = (step + 1) as f64 * h;
        let norm = jac.frobenius_norm();
        if !norm.is_finite() || norm > norm_cap {
            return Err(MagError::LinearizationOverflow { t, norm });
        }
        let z = Complex64::new(s[0], s[1]);
        if !flow.surface.group.contains(z, 1e-13) {
            let (zr, word) = flow.surface.group.reduce(z)?;
            let gamma = word.map.inverse();
            let rot = gamma.rotation_at(z);
            jac = deck_differential(&gamma, z).mul(&jac);
            deck = gamma.compose(&deck);
            s = [zr.x, zr.y, s[2] + rot];
        }
    }

    let end = SMPoint::new(DiskPoint::new(s[0], s[1])?, s[2]);
    let frame_t = super::frame_matrix(flow.surface, &end);
    let inv = frame_t
        .inverse()
        .ok_or(MagError::LinearizationOverflow {
            t: t_total,
            norm: f64::INFINITY,
        })?;
    Ok(FrameTransport {
        matrix: inv.mul(&jac).mul(&frame0),
        chart_matrix: jac,
        deck_map: deck,
        end,
        chart_norm: jac.frobenius_norm(),
    })
}

/// Determinant of the flow derivative in the frame; equals 1 for the exact
/// flow (Liouville volume preservation).
pub fn liouville_jacobian(flow: &MagneticFlow, p0: SMPoint, t_total: f64) -> Result<f64> {
    if t_total.abs() > 20.0 {
        return Err(MagError::InvalidConfig(
            "liouville_jacobian horizon capped at |T| <= 20".into(),
        ));
    }
    let tr = variational_transport(flow, p0, t_total, 1e12)?;
    Ok(tr.matrix.det())
}

fn add3(s: [f64; 3], k: [f64; 3], a: f64) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

fn addm(j: &Mat3, a: &Mat3, h: f64) -> Mat3 {
    let mut m = j.m;
    for (c, col) in m.iter_mut().enumerate() {
        for (r, v) in col.iter_mut().enumerate() {
            *v += h * a.m[c][r];
        }
    }
    Mat3 { m }
}

fn addm4(j: &Mat3, a1: &Mat3, a2: &Mat3, a3: &Mat3, a4: &Mat3, h6: f64) -> Mat3 {
    let mut m = j.m;
    for (c, col) in m.iter_mut().enumerate() {
        for (r, v) in col.iter_mut().enumerate() {
            *v += h6 * (a1.m[c][r] + 2.0 * a2.m[c][r] + 2.0 * a3.m[c][r] + a4.m[c][r]);
        }
    }
    Mat3 { m }
}
