//! Zygmund / Lipschitz regularity estimation from difference-quotient
//! tables of uniformly sampled data.
//!
//! For dyadic scales `t` the scan records
//! `sup_x |f(x+t) - f(x)| / t` (first quotient) and
//! `sup_x |f(x+t) + f(x-t) - 2 f(x)| / t` (second symmetric quotient).
//! A smooth function has a decaying second quotient; a Lipschitz function a
//! bounded first quotient; a Zygmund function a bounded second quotient.

use crate::error::{MagError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityClass {
    /// Second quotient decays with scale (consistent with C^1 and better).
    Smooth,
    /// First quotient bounded, second quotient bounded but not decaying.
    LipschitzNotSmooth,
    /// Second quotient bounded, first quotient grows: Zygmund class only.
    ZygmundNotLipschitz,
    /// Second quotient grows: rougher than Zygmund.
    Rough,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Dyadic scales, decreasing.
    pub scales: Vec<f64>,
    pub first_quotient: Vec<f64>,
    pub second_quotient: Vec<f64>,
    /// Log-log slopes fitted over the scale range.
    pub first_slope: f64,
    pub second_slope: f64,
    pub classification: RegularityClass,
}

/// Scan uniformly spaced samples spanning `domain_len`.
///
/// Scales run over dyadic strides from 1/4 of the range down to the sample
/// spacing, intersected with `[2^-12, 2^-4]` of the domain length.
pub fn zygmund_lipschitz_scan(samples: &[f64], domain_len: f64) -> Result<RegularityReport> {
    let n = samples.len();
    if n < 64 {
        return Err(MagError::InvalidConfig(format!(
            "regularity scan needs >= 64 samples, got {n}"
        )));
    }
    let dx = domain_len / (n - 1) as f64;
    let mut scales = Vec::new();
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut stride = 1usize;
    let mut by_scale = Vec::new();
    while 4 * stride < n {
        by_scale.push(stride);
        stride *= 2;
    }
    by_scale.reverse(); // large scale first
    for &m in &by_scale {
        let t = m as f64 * dx;
        let mut q1 = 0.0f64;
        let mut q2 = 0.0f64;
        for i in m..n - m {
            let d1 = (samples[i + m] - samples[i]).abs();
            let d2 = (samples[i + m] + samples[i - m] - 2.0 * samples[i]).abs();
            q1 = q1.max(d1);
            q2 = q2.max(d2);
        }
        scales.push(t);
        first.push(q1 / t);
        second.push(q2 / t);
    }
    // fit log2 quotient against log2 scale
    let slope = |ys: &[f64]| -> f64 {
        let pts: Vec<(f64, f64)> = scales
            .iter()
            .zip(ys.iter())
            .filter(|&(_, &y)| y > 0.0)
            .map(|(&t, &y)| (t.log2(), y.log2()))
            .collect();
        if pts.len() < 3 {
            return 0.0;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let first_slope = slope(&first);
    let second_slope = slope(&second);
    // positive slope means the quotient DECAYS as t -> 0
    let classification = if second_slope >= 0.6 {
        RegularityClass::Smooth
    } else if second_slope <= -0.35 {
        RegularityClass::Rough
    } else if first_slope >= -0.1 {
        RegularityClass::LipschitzNotSmooth
    } else {
        RegularityClass::ZygmundNotLipschitz
    };
    Ok(RegularityReport {
        scales,
        first_quotient: first,
        second_quotient: second,
        first_slope,
        second_slope,
        classification,
    })
}
