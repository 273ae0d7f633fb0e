//! The Anosov splitting of the magnetic flow, computed from the linearized
//! flow itself: push a generic transverse line forward (backward for the
//! stable bundle) and read off the limiting direction.
//!
//! Directions are reported as slopes in the transverse plane: a tangent
//! vector with frame components `(c_X, c_H, c_V)` is quotiented by the flow
//! direction `X_lambda = (1, 0, lambda F)` to `(c_H, c_V - lambda F c_X)`,
//! and the slope is the ratio of the second to the first.

use crate::error::{MagError, Result};
use crate::flow::{variational_transport, MagneticFlow, SMPoint};
use serde::{Deserialize, Serialize};

/// Riccati slopes of the invariant bundles at a point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplittingSample {
    pub point: SMPoint,
    /// Stable slope `u^s` in the `(H, V)` transverse frame.
    pub u_s: f64,
    /// Unstable slope `u^u`.
    pub u_u: f64,
    /// Empirical forward growth rate of the unstable direction.
    pub growth_rate: f64,
    /// Transport horizon used.
    pub horizon: f64,
}

/// Fitted uniform-hyperbolicity constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub c: f64,
    /// Unstable expansion rate (must exceed 1).
    pub eta: f64,
    /// Stable contraction rate (must be below 1).
    pub rho: f64,
    /// min(eta - 1, 1 - rho).
    pub margin: f64,
    /// Number of fitted log-norm sequences.
    pub segments: usize,
}

/// Gate for the sufficient Anosov criterion `lambda^2 + max K < 0`.
pub fn require_anosov_margin(flow: &MagneticFlow) -> Result<f64> {
    let margin = -(flow.lambda * flow.lambda + flow.surface.max_curvature());
    if margin <= 0.0 {
        return Err(MagError::HypothesisViolated {
            inequality: "lambda^2 + K(x) < 0 for all x".into(),
            margin,
        });
    }
    Ok(margin)
}

/// Frame components at `q` of the unstable direction, computed by pushing a
/// generic vector forward from `phi_{-horizon}(q)` along the flow.
///
/// The returned vector is normalized; its orientation is fixed so the
/// `H`-component is positive.
pub fn unstable_direction(flow: &MagneticFlow, q: SMPoint, horizon: f64) -> Result<[f64; 3]> {
    transported_direction(flow, q, horizon, true)
}

/// Frame components at `q` of the stable direction (backward-time analogue).
pub fn stable_direction(flow: &MagneticFlow, q: SMPoint, horizon: f64) -> Result<[f64; 3]> {
    transported_direction(flow, q, horizon, false)
}

fn transported_direction(
    flow: &MagneticFlow,
    q: SMPoint,
    horizon: f64,
    unstable: bool,
) -> Result<[f64; 3]> {
    let sign = if unstable { -1.0 } else { 1.0 };
    // Walk backward in unit-time chunks, storing the checkpoints; then
    // transport a generic vector forward chunk by chunk, re-anchoring the
    // trajectory at each stored point. Re-anchoring keeps the integration
    // error local: a single backward-forward round trip would amplify it
    // by e^{2 horizon} (the flow is Anosov), which already dominates at
    // moderate horizons.
    let n_chunks = horizon.ceil().max(1.0) as usize;
    let delta = horizon / n_chunks as f64;
    let mut checkpoints = Vec::with_capacity(n_chunks + 1);
    checkpoints.push(q);
    let mut cur = q;
    for _ in 0..n_chunks {
        cur = flow.integrate(cur, sign * delta)?.end();
        checkpoints.push(cur);
    }
    let mut v = [0.0f64, 1.0, 0.37]; // generic transverse seed
    for k in (1..=n_chunks).rev() {
        let tr = variational_transport(flow, checkpoints[k], -sign * delta, 1e30)?;
        let w = tr.matrix.mul_vec(v);
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(MagError::NonConvergence {
                what: "direction transport".into(),
                last: n,
                previous: f64::NAN,
            });
        }
        v = [w[0] / n, w[1] / n, w[2] / n];
    }
    if v[1] < 0.0 {
        for o in &mut v {
            *o = -*o;
        }
    }
    Ok(v)
}

/// Transverse quotient slope of a frame vector at a point.
pub fn quotient_slope(flow: &MagneticFlow, p: &SMPoint, v: [f64; 3]) -> f64 {
    let f = flow.surface.magnetic_density(p.z());
    (v[2] - flow.lambda * f * v[0]) / v[1]
}

/// Unstable slope with a doubling convergence check: the result at horizon
/// `T` and `2T` must agree within `1e-6`.
pub fn unstable_slope(flow: &MagneticFlow, p: SMPoint, horizon: f64) -> Result<f64> {
    require_anosov_margin(flow)?;
    let a = quotient_slope(flow, &p, unstable_direction(flow, p, horizon)?);
    let b = quotient_slope(flow, &p, unstable_direction(flow, p, 2.0 * horizon)?);
    if (a - b).abs() > 1e-6 {
        return Err(MagError::NonConvergence {
            what: "unstable slope (doubling test)".into(),
            last: b,
            previous: a,
        });
    }
    Ok(b)
}

/// Stable slope with the same doubling test.
pub fn stable_slope(flow: &MagneticFlow, p: SMPoint, horizon: f64) -> Result<f64> {
    require_anosov_margin(flow)?;
    let a = quotient_slope(flow, &p, stable_direction(flow, p, horizon)?);
    let b = quotient_slope(flow, &p, stable_direction(flow, p, 2.0 * horizon)?);
    if (a - b).abs() > 1e-6 {
        return Err(MagError::NonConvergence {
            what: "stable slope (doubling test)".into(),
            last: b,
            previous: a,
        });
    }
    Ok(b)
}

/// Both slopes plus the measured growth rate at a point.
pub fn splitting_sample(flow: &MagneticFlow, p: SMPoint, horizon: f64) -> Result<SplittingSample> {
    let u_u = unstable_slope(flow, p, horizon)?;
    let u_s = stable_slope(flow, p, horizon)?;
    let e_u = unstable_direction(flow, p, 2.0 * horizon)?;
    let n1 = transported_norm(flow, p, e_u, horizon)?;
    let growth_rate = n1.ln() / horizon;
    if u_u <= u_s {
        return Err(MagError::HyperbolicityViolation { rho: u_s, eta: u_u });
    }
    Ok(SplittingSample {
        point: p,
        u_s,
        u_u,
        growth_rate,
        horizon,
    })
}

fn transported_norm(flow: &MagneticFlow, p: SMPoint, v: [f64; 3], t: f64) -> Result<f64> {
    let tr = variational_transport(flow, p, t, 1e250)?;
    let w = tr.matrix.mul_vec(v);
    Ok((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt())
}

/// Fit dichotomy constants over an ensemble of base points.
///
/// For each point the unstable (stable) direction is transported forward in
/// unit-time segments with renormalization; the log-norm sequence is fitted
/// by least squares. `eta` and `rho` are exponentials of the mean slopes;
/// `C` bounds all fit residuals from above.
pub fn dichotomy_fit(
    flow: &MagneticFlow,
    points: &[SMPoint],
    segments: usize,
    horizon: f64,
) -> Result<DichotomyReport> {
    require_anosov_margin(flow)?;
    let mut slopes_u = Vec::new();
    let mut slopes_s = Vec::new();
    let mut log_c: f64 = 0.0;
    for &p in points {
        for stable in [false, true] {
            let dir = if stable {
                stable_direction(flow, p, horizon)?
            } else {
                unstable_direction(flow, p, horizon)?
            };
            let mut cur_p = p;
            let mut cur_v = dir;
            let mut logs = vec![0.0f64];
            let mut acc = 0.0;
            for _ in 0..segments {
                let tr = variational_transport(flow, cur_p, 1.0, 1e250)?;
                let w = tr.matrix.mul_vec(cur_v);
                let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
                acc += n.ln();
                logs.push(acc);
                cur_v = [w[0] / n, w[1] / n, w[2] / n];
                cur_p = tr.end;
            }
            // least squares logs[j] ~ a + b j
            let n = logs.len() as f64;
            let sx = (0..logs.len()).map(|j| j as f64).sum::<f64>();
            let sy = logs.iter().sum::<f64>();
            let sxx = (0..logs.len()).map(|j| (j * j) as f64).sum::<f64>();
            let sxy = logs
                .iter()
                .enumerate()
                .map(|(j, &y)| j as f64 * y)
                .sum::<f64>();
            let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let a = (sy - b * sx) / n;
            for (j, &y) in logs.iter().enumerate() {
                log_c = log_c.max((y - (a + b * j as f64)).abs());
            }
            if stable {
                slopes_s.push(b);
            } else {
                slopes_u.push(b);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let eta = mean(&slopes_u).exp();
    let rho = mean(&slopes_s).exp();
    if rho >= 1.0 || eta <= 1.0 {
        return Err(MagError::HyperbolicityViolation { rho, eta });
    }
    Ok(DichotomyReport {
        c: log_c.exp(),
        eta,
        rho,
        margin: (eta - 1.0).min(1.0 - rho),
        segments: points.len() * 2,
    })
}
