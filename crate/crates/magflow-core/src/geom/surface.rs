//! Surface models: the hyperbolic base metric, a group-invariant conformal
//! perturbation `phi`, and the magnetic density `F`.
//!
//! The metric is `e^{2(phi0 + phi)} |dz|^2` with `phi0` the disk exponent.
//! `phi` and `F` are finite sums of radial bumps symmetrized over the group
//! orbit (word length capped at `truncation_length`, distance-pruned so the
//! dropped tail is below 1e-16 of amplitude inside the evaluation region).

use crate::error::{MagError, Result};
use crate::geom::bump::{AnchoredBump, BumpSpec, Jet2};
use crate::geom::disk::{
    base_exponent, base_exponent_grad, base_exponent_hess, DiskPoint,
};
use crate::geom::octagon::FuchsianGroup;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Extra Euclidean-chart margin past the octagon inside which field
/// evaluations must stay exact (integrator stages may step slightly out).
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct ScalarFieldSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

/// Plain data describing a surface; serializable for config echo.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SurfaceConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Conformal exponent perturbation phi (constant + bumps).
    #[serde(default)]
    pub phi: ScalarFieldSpec,
    /// Magnetic density F (constant + bumps). Defaults to F = 1.
    #[serde(default = "default_magnetic")]
    pub magnetic: ScalarFieldSpec,
    /// Word-length cap for orbit symmetrization.
    #[serde(default = "default_truncation")]
    pub truncation_length: usize,
}

fn default_name() -> String {
    "surface".to_string()
}
fn default_magnetic() -> ScalarFieldSpec {
    ScalarFieldSpec {
        constant: 1.0,
        bumps: Vec::new(),
    }
}
fn default_truncation() -> usize {
    8
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            phi: ScalarFieldSpec::default(),
            magnetic: default_magnetic(),
            truncation_length: default_truncation(),
        }
    }
}

impl SurfaceConfig {
    /// Constant-curvature model: K = -1, F = 1.
    pub fn constant_model() -> Self {
        Self {
            name: "constant".into(),
            ..Self::default()
        }
    }

    /// The shipped perturbed-curvature model (amplitude 0.1, width 0.4).
    pub fn perturbed_model() -> Self {
        Self {
            name: "perturbed".into(),
            phi: ScalarFieldSpec {
                constant: 0.0,
                bumps: vec![BumpSpec {
                    center: [0.12, 0.07],
                    width: 0.55,
                    amplitude: 0.1,
                }],
            },
            ..Self::default()
        }
    }
}

/// Christoffel symbols of the conformal metric at a point, in the chart.
/// For `g = e^{2 Phi} delta`, the symbols are determined by `grad Phi`.
#[derive(Debug, Clone, Copy)]
pub struct Christoffel {
    /// Gamma^x_{xx} = Phi_x, Gamma^x_{xy} = Phi_y, Gamma^x_{yy} = -Phi_x
    pub gxxx: f64,
    pub gxxy: f64,
    pub gxyy: f64,
    /// Gamma^y_{xx} = -Phi_y, Gamma^y_{xy} = Phi_x, Gamma^y_{yy} = Phi_y
    pub gyxx: f64,
    pub gyxy: f64,
    pub gyyy: f64,
}

/// Spatial index over anchored bumps: a uniform euclidean cell grid where
/// each cell lists the terms whose support disk meets it. Term counts after
/// orbit symmetrization reach the thousands while only a few dozen overlap
/// any given point, so lookups beat full scans by 1-2 orders of magnitude.
#[derive(Debug, Clone, Default)]
struct BumpIndex {
    cells: Vec<Vec<u32>>,
    n_cells: usize,
    cell: f64,
    half_extent: f64,
}

impl BumpIndex {
    fn build(terms: &[AnchoredBump]) -> Self {
        let half_extent = 1.0;
        let n_cells = 50usize;
        let cell = 2.0 * half_extent / n_cells as f64;
        let mut cells = vec![Vec::new(); n_cells * n_cells];
        for (t, b) in terms.iter().enumerate() {
            let r = b.euclid_radius_sq.sqrt();
            let lo_x = (((b.euclid_center.re - r + half_extent) / cell).floor() as i64).max(0);
            let hi_x =
                (((b.euclid_center.re + r + half_extent) / cell).ceil() as i64).min(n_cells as i64 - 1);
            let lo_y = (((b.euclid_center.im - r + half_extent) / cell).floor() as i64).max(0);
            let hi_y =
                (((b.euclid_center.im + r + half_extent) / cell).ceil() as i64).min(n_cells as i64 - 1);
            for cy in lo_y..=hi_y {
                for cx in lo_x..=hi_x {
                    cells[cy as usize * n_cells + cx as usize].push(t as u32);
                }
            }
        }
        Self {
            cells,
            n_cells,
            cell,
            half_extent,
        }
    }

    #[inline]
    fn lookup(&self, z: Complex64) -> Option<&[u32]> {
        if self.cells.is_empty() {
            return Some(&[]);
        }
        let cx = ((z.re + self.half_extent) / self.cell) as i64;
        let cy = ((z.im + self.half_extent) / self.cell) as i64;
        if cx < 0 || cy < 0 || cx >= self.n_cells as i64 || cy >= self.n_cells as i64 {
            return None; // outside the indexed square: caller falls back
        }
        Some(&self.cells[cy as usize * self.n_cells + cx as usize])
    }
}

/// A hyperbolic surface with conformal perturbation and magnetic density.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    pub config: SurfaceConfig,
    pub group: FuchsianGroup,
    phi_terms: Vec<AnchoredBump>,
    f_terms: Vec<AnchoredBump>,
    phi_index: BumpIndex,
    f_index: BumpIndex,
    /// Upper bound on the orbit-truncation error of the symmetrized sums
    /// inside the working region.
    pub truncation_bound: f64,
    /// True when phi has no bumps (exactly constant curvature).
    pub constant_curvature: bool,
    /// Diagnostics sampled once at construction (hypothesis gates read the
    /// curvature extrema from here).
    pub base_diagnostics: SurfaceDiagnostics,
}

impl SurfaceModel {
    pub fn new(config: SurfaceConfig) -> Result<Self> {
        let group = FuchsianGroup::bolza();
        let work_radius = group.circumradius + 1.0; // hyperbolic reach of evals
        let mut truncation_bound = 0.0f64;

        let mut symmetrize = |spec: &ScalarFieldSpec| -> Result<Vec<AnchoredBump>> {
            let mut terms = Vec::new();
            for b in &spec.bumps {
                if b.width <= 0.0 {
                    return Err(MagError::InvalidConfig(format!(
                        "bump width must be positive, got {}",
                        b.width
                    )));
                }
                let center = DiskPoint::new(b.center[0], b.center[1])?.to_complex();
                let proto = AnchoredBump::new(center, b.width, b.amplitude);
                let reach = work_radius + proto.cutoff_distance;
                let orbit = group.orbit_ball(center, reach, config.truncation_length);
                // bound on what the cap drops: bump value at the enumeration edge
                let edge = proto.cutoff_distance;
                truncation_bound +=
                    b.amplitude.abs() * (-(edge * edge) / (2.0 * b.width * b.width)).exp();
                for e in &orbit {
                    terms.push(AnchoredBump::new(e.point, b.width, b.amplitude));
                }
            }
            Ok(terms)
        };

        let phi_terms = symmetrize(&config.phi)?;
        let f_terms = symmetrize(&config.magnetic)?;
        let constant_curvature = phi_terms.is_empty();
        let phi_index = BumpIndex::build(&phi_terms);
        let f_index = BumpIndex::build(&f_terms);
        let mut model = Self {
            config,
            group,
            phi_terms,
            f_terms,
            phi_index,
            f_index,
            truncation_bound,
            constant_curvature,
            base_diagnostics: SurfaceDiagnostics {
                min_curvature: -1.0,
                max_curvature: -1.0,
                vertical_bound: 0.5,
                area: 0.0,
                mean_magnetic: 0.0,
                curvature_integral: 0.0,
                cohomology_constant: 0.0,
                invariance_phi: 0.0,
                invariance_magnetic: 0.0,
                truncation_bound: 0.0,
            },
        };
        model.base_diagnostics = model.diagnostics(96);
        Ok(model)
    }

    /// Curvature maximum from the construction-time sample.
    pub fn max_curvature(&self) -> f64 {
        self.base_diagnostics.max_curvature
    }

    /// `A = min(-K/2)` from the construction-time sample.
    pub fn vertical_bound(&self) -> f64 {
        self.base_diagnostics.vertical_bound
    }

    /// Euclidean-chart radius limit for valid evaluations.
    fn check_work_region(&self, z: Complex64) -> Result<()> {
        if z.norm_sqr() >= 1.0 - 1e-12 {
            return Err(MagError::OutsideDisk { x: z.re, y: z.im });
        }
        Ok(())
    }

    /// Jet of the perturbation `phi` (constant + symmetrized bumps).
    pub fn phi_jet(&self, z: Complex64) -> Jet2 {
        let mut j = Jet2 {
            value: self.config.phi.constant,
            ..Jet2::default()
        };
        match self.phi_index.lookup(z) {
            Some(list) => {
                for &t in list {
                    let b = &self.phi_terms[t as usize];
                    if !b.rejects(z) {
                        j.add_assign(&b.jet(z));
                    }
                }
            }
            None => {
                for b in &self.phi_terms {
                    j.add_assign(&b.jet(z));
                }
            }
        }
        j
    }

    /// Value and gradient of `phi` only (cheap path for flow right-hand
    /// sides).
    pub fn phi_jet1(&self, z: Complex64) -> (f64, f64, f64) {
        let mut v = self.config.phi.constant;
        let mut gx = 0.0;
        let mut gy = 0.0;
        match self.phi_index.lookup(z) {
            Some(list) => {
                for &t in list {
                    let b = &self.phi_terms[t as usize];
                    if !b.rejects(z) {
                        let (bv, bx, by) = b.jet1(z);
                        v += bv;
                        gx += bx;
                        gy += by;
                    }
                }
            }
            None => {
                for b in &self.phi_terms {
                    let (bv, bx, by) = b.jet1(z);
                    v += bv;
                    gx += bx;
                    gy += by;
                }
            }
        }
        (v, gx, gy)
    }

    /// Jet of the magnetic density `F`.
    pub fn magnetic_jet(&self, z: Complex64) -> Jet2 {
        let mut j = Jet2 {
            value: self.config.magnetic.constant,
            ..Jet2::default()
        };
        match self.f_index.lookup(z) {
            Some(list) => {
                for &t in list {
                    let b = &self.f_terms[t as usize];
                    if !b.rejects(z) {
                        j.add_assign(&b.jet(z));
                    }
                }
            }
            None => {
                for b in &self.f_terms {
                    j.add_assign(&b.jet(z));
                }
            }
        }
        j
    }

    pub fn magnetic_density(&self, z: Complex64) -> f64 {
        let mut v = self.config.magnetic.constant;
        match self.f_index.lookup(z) {
            Some(list) => {
                for &t in list {
                    let b = &self.f_terms[t as usize];
                    if !b.rejects(z) {
                        v += b.jet1(z).0;
                    }
                }
            }
            None => {
                for b in &self.f_terms {
                    v += b.jet1(z).0;
                }
            }
        }
        v
    }

    /// Value and gradient of `Phi = phi0 + phi` (cheap path).
    pub fn total_exponent_jet1(&self, z: Complex64) -> (f64, f64, f64) {
        let (mut v, mut gx, mut gy) = self.phi_jet1(z);
        v += base_exponent(z);
        let (bx, by) = base_exponent_grad(z);
        gx += bx;
        gy += by;
        (v, gx, gy)
    }

    /// Jet of the full conformal exponent `Phi = phi0 + phi`.
    pub fn total_exponent_jet(&self, z: Complex64) -> Jet2 {
        let mut j = self.phi_jet(z);
        j.value += base_exponent(z);
        let (gx, gy) = base_exponent_grad(z);
        j.dx += gx;
        j.dy += gy;
        let (hxx, hxy, hyy) = base_exponent_hess(z);
        j.dxx += hxx;
        j.dxy += hxy;
        j.dyy += hyy;
        j
    }

    /// Metric factor `e^{2 Phi}` (chart metric is this times the identity).
    pub fn metric_factor(&self, z: Complex64) -> f64 {
        (2.0 * (base_exponent(z) + self.phi_jet(z).value)).exp()
    }

    /// Gaussian curvature `K = e^{-2 phi} (-1 - Delta_0 phi)`, with
    /// `Delta_0` the hyperbolic-base Laplacian (analyst sign, div grad).
    pub fn curvature_at(&self, p: DiskPoint) -> f64 {
        let z = p.to_complex();
        if self.constant_curvature && self.config.phi.constant == 0.0 {
            return -1.0;
        }
        let phi = self.phi_jet(z);
        let lap0 = (-2.0 * base_exponent(z)).exp() * phi.laplacian();
        (-2.0 * phi.value).exp() * (-1.0 - lap0)
    }

    /// Curvature for a raw complex point (work-region checked).
    pub fn curvature_at_z(&self, z: Complex64) -> Result<f64> {
        self.check_work_region(z)?;
        Ok(self.curvature_at(DiskPoint { x: z.re, y: z.im }))
    }

    /// Gradient of the Gaussian curvature in chart coordinates.
    ///
    /// Only first derivatives of K are ever needed (hypothesis margins use
    /// sampled extrema); computed by central differences of the closed form.
    pub fn curvature_gradient(&self, z: Complex64) -> (f64, f64) {
        let h = 1e-6;
        let k = |z: Complex64| self.curvature_at(DiskPoint { x: z.re, y: z.im });
        (
            (k(z + Complex64::new(h, 0.0)) - k(z - Complex64::new(h, 0.0))) / (2.0 * h),
            (k(z + Complex64::new(0.0, h)) - k(z - Complex64::new(0.0, h))) / (2.0 * h),
        )
    }

    /// Christoffel symbols of the full metric in the conformal chart.
    pub fn christoffel_at(&self, p: DiskPoint) -> Christoffel {
        let j = self.total_exponent_jet(p.to_complex());
        Christoffel {
            gxxx: j.dx,
            gxxy: j.dy,
            gxyy: -j.dx,
            gyxx: -j.dy,
            gyxy: j.dx,
            gyyy: j.dy,
        }
    }

    /// Deterministic sample of chart points covering the fundamental octagon.
    pub fn octagon_samples(&self, across: usize) -> Vec<Complex64> {
        let r = 2.0f64.powf(-0.25);
        let h = 2.0 * r / across as f64;
        let mut pts = Vec::new();
        let n = (across as i64) / 2 + 1;
        for i in -n..n {
            for j in -n..n {
                let z = Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if self.group.contains(z, -1e-9) {
                    pts.push(z);
                }
            }
        }
        pts
    }

    /// Summary quantities over the fundamental domain.
    pub fn diagnostics(&self, across: usize) -> SurfaceDiagnostics {
        let pts = self.octagon_samples(across);
        let mut min_k = f64::INFINITY;
        let mut max_k = f64::NEG_INFINITY;
        let mut area = 0.0;
        let mut int_f = 0.0;
        let mut int_k = 0.0;
        let r = 2.0f64.powf(-0.25);
        let cell = (2.0 * r / across as f64).powi(2);
        for &z in &pts {
            let k = self.curvature_at(DiskPoint { x: z.re, y: z.im });
            min_k = min_k.min(k);
            max_k = max_k.max(k);
            let da = self.metric_factor(z) * cell;
            area += da;
            int_f += self.magnetic_density(z) * da;
            int_k += k * da;
        }
        let mut inv_phi = 0.0f64;
        let mut inv_f = 0.0f64;
        for (i, &z) in pts.iter().enumerate().step_by((pts.len() / 40).max(1)) {
            let _ = i;
            for g in &self.group.generators {
                let w = g.apply(z);
                inv_phi = inv_phi.max((self.phi_jet(w).value - self.phi_jet(z).value).abs());
                inv_f = inv_f
                    .max((self.magnetic_density(w) - self.magnetic_density(z)).abs());
            }
        }
        SurfaceDiagnostics {
            min_curvature: min_k,
            max_curvature: max_k,
            vertical_bound: min_k / -2.0,
            area,
            mean_magnetic: int_f / area,
            curvature_integral: int_k,
            cohomology_constant: int_f / int_k,
            invariance_phi: inv_phi,
            invariance_magnetic: inv_f,
            truncation_bound: self.truncation_bound,
        }
    }
}

/// Sampled summary of a surface model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceDiagnostics {
    pub min_curvature: f64,
    pub max_curvature: f64,
    /// `A = min(-K/2)`, the constant entering the vertical energy inequality.
    pub vertical_bound: f64,
    /// Total area (Gauss-Bonnet check: curvature_integral should be -4 pi).
    pub area: f64,
    pub mean_magnetic: f64,
    pub curvature_integral: f64,
    /// `c` with `Omega = c K Omega_a + d theta`: equals `int F dA / int K dA`.
    pub cohomology_constant: f64,
    pub invariance_phi: f64,
    pub invariance_magnetic: f64,
    pub truncation_bound: f64,
}

impl SurfaceDiagnostics {
    /// `A = vertical_bound` but guarded against a positive-curvature model.
    pub fn vertical_bound_checked(&self) -> Result<f64> {
        if self.max_curvature >= 0.0 {
            return Err(MagError::HypothesisViolated {
                inequality: "K(x) < 0 for all x".into(),
                margin: -self.max_curvature,
            });
        }
        Ok(self.vertical_bound)
    }
}
