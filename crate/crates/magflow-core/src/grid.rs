//! Discretized unit tangent bundle of the octagon quotient.
//!
//! Base nodes form a uniform Cartesian lattice clipped to the fundamental
//! octagon; the fiber circle is sampled at `n_theta` equispaced angles and
//! handled spectrally. Stencil neighbors that fall outside the octagon are
//! "ghosts": their values are pulled back by the side-pairing isometry and
//! interpolated from interior nodes by moving least squares, with the
//! fiber-mode phase `e^{i n omega}` induced by the pairing's chart rotation.
//!
//! Quadrature weights approximate the normalized Liouville measure: a fine
//! subsample of the octagon assigns metric mass to the nearest node, which
//! keeps the total mass exact and the rule midpoint-accurate away from the
//! seam.

use crate::error::{MagError, Result};
use crate::geom::{DiskPoint, SurfaceModel};
use num_complex::Complex64;
use std::collections::HashMap;

/// Reference of a stencil neighbor: a real node or a ghost rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborRef {
    Interior(u32),
    Ghost(u32),
}

/// Ghost closure: the value of mode `n` at the ghost point is
/// `e^{i n rotation} * sum_j weight_j * f_n(node_j)`.
#[derive(Debug, Clone)]
pub struct GhostRule {
    pub weights: Vec<(u32, f64)>,
    pub rotation: f64,
    /// Reduced (in-domain) image of the ghost point.
    pub reduced: Complex64,
    /// The ghost point itself (outside the octagon).
    pub point: Complex64,
}

/// Interpolation rule at an arbitrary point of the quotient.
#[derive(Debug, Clone)]
pub struct InterpRule {
    pub weights: Vec<(u32, f64)>,
    pub rotation: f64,
}

#[derive(Debug, Clone)]
pub struct SMGrid {
    /// Interior base nodes (inside the open octagon), lexicographic order.
    pub nodes: Vec<Complex64>,
    /// Lattice spacing.
    pub h: f64,
    /// Fiber resolution (power of two).
    pub n_theta: usize,
    /// Normalized Liouville weights per node (sum exactly 1).
    pub weights: Vec<f64>,
    /// Total metric area measured by the fine quadrature (before
    /// normalization); Gauss–Bonnet says 4 pi for these surfaces.
    pub measured_area: f64,
    /// `Phi = phi0 + phi` at nodes.
    pub phi_total: Vec<f64>,
    /// `e^{-Phi}` at nodes.
    pub exp_m_phi: Vec<f64>,
    /// Wirtinger derivative `dPhi = (Phi_x - i Phi_y)/2` at nodes.
    pub dphi: Vec<Complex64>,
    /// Magnetic density `F` at nodes.
    pub magnetic: Vec<f64>,
    /// Gaussian curvature at nodes.
    pub curvature: Vec<f64>,
    /// Stencil neighbors per node: +x, -x, +y, -y.
    pub neighbors: Vec<[NeighborRef; 4]>,
    pub ghosts: Vec<GhostRule>,
    lattice_index: HashMap<(i64, i64), u32>,
}

/// Degree of the moving-least-squares polynomial (cubic: 10 basis terms).
const MLS_DEGREE_TERMS: usize = 10;
const MLS_NEIGHBORS: usize = 18;

impl SMGrid {
    /// Build a grid with roughly `across` nodes across the octagon diameter
    /// and `n_theta` fiber samples.
    pub fn build(surface: &SurfaceModel, across: usize, n_theta: usize) -> Result<SMGrid> {
        if across < 8 {
            return Err(MagError::InvalidConfig("grid across < 8".into()));
        }
        if !n_theta.is_power_of_two() || n_theta < 8 {
            return Err(MagError::InvalidConfig(
                "n_theta must be a power of two >= 8".into(),
            ));
        }
        let r_v = 2.0f64.powf(-0.25);
        let h = 2.0 * r_v / across as f64;
        let group = &surface.group;

        // interior nodes at ((i+1/2) h, (j+1/2) h)
        let mut nodes = Vec::new();
        let mut lattice_index = HashMap::new();
        let n = across as i64 / 2 + 2;
        for j in -n..n {
            for i in -n..n {
                let z = Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if group.contains(z, -1e-9) {
                    lattice_index.insert((i, j), nodes.len() as u32);
                    nodes.push(z);
                }
            }
        }
        if nodes.is_empty() {
            return Err(MagError::InvalidConfig("no interior nodes".into()));
        }

        // per-node geometry
        let mut phi_total = Vec::with_capacity(nodes.len());
        let mut exp_m_phi = Vec::with_capacity(nodes.len());
        let mut dphi = Vec::with_capacity(nodes.len());
        let mut magnetic = Vec::with_capacity(nodes.len());
        let mut curvature = Vec::with_capacity(nodes.len());
        for &z in &nodes {
            let jet = surface.total_exponent_jet(z);
            phi_total.push(jet.value);
            exp_m_phi.push((-jet.value).exp());
            dphi.push(Complex64::new(jet.dx, -jet.dy) * 0.5);
            magnetic.push(surface.magnetic_density(z));
            curvature.push(surface.curvature_at(DiskPoint { x: z.re, y: z.im }));
        }

        let mut grid = SMGrid {
            nodes,
            h,
            n_theta,
            weights: Vec::new(),
            measured_area: 0.0,
            phi_total,
            exp_m_phi,
            dphi,
            magnetic,
            curvature,
            neighbors: Vec::new(),
            ghosts: Vec::new(),
            lattice_index,
        };

        grid.build_neighbors(surface)?;
        grid.build_weights(surface, 8);
        Ok(grid)
    }

    fn lattice_of(&self, z: Complex64) -> (i64, i64) {
        (
            (z.re / self.h - 0.5).round() as i64,
            (z.im / self.h - 0.5).round() as i64,
        )
    }

    fn build_neighbors(&mut self, surface: &SurfaceModel) -> Result<()> {
        let offs = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
        let mut neighbors = Vec::with_capacity(self.nodes.len());
        let mut ghosts: Vec<GhostRule> = Vec::new();
        for idx in 0..self.nodes.len() {
            let (i, j) = self.lattice_of(self.nodes[idx]);
            let mut refs = [NeighborRef::Interior(0); 4];
            for (k, (di, dj)) in offs.iter().enumerate() {
                if let Some(&t) = self.lattice_index.get(&(i + di, j + dj)) {
                    refs[k] = NeighborRef::Interior(t);
                } else {
                    let zg = Complex64::new(
                        ((i + di) as f64 + 0.5) * self.h,
                        ((j + dj) as f64 + 0.5) * self.h,
                    );
                    let rule = self.make_ghost_rule(surface, zg)?;
                    refs[k] = NeighborRef::Ghost(ghosts.len() as u32);
                    ghosts.push(rule);
                }
            }
            neighbors.push(refs);
        }
        self.neighbors = neighbors;
        self.ghosts = ghosts;
        Ok(())
    }

    fn make_ghost_rule(&self, surface: &SurfaceModel, zg: Complex64) -> Result<GhostRule> {
        let (reduced, word) = surface.group.reduce(zg)?;
        let gamma = word.map.inverse();
        let rotation = gamma.rotation_at(zg);
        let zr = reduced.to_complex();
        let weights = self.mls_weights(zr)?;
        Ok(GhostRule {
            weights,
            rotation,
            reduced: zr,
            point: zg,
        })
    }

    /// Weights extracting the gradient `(d/dx, d/dy)` of the MLS fit at an
    /// in-domain point: entries `(node, wx, wy)`.
    pub fn mls_gradient(&self, z: Complex64) -> Result<Vec<(u32, f64, f64)>> {
        let (picked, a, wgt) = self.mls_setup(z)?;
        let gx = self.mls_functional(&a, &wgt, 1)?;
        let gy = self.mls_functional(&a, &wgt, 2)?;
        let inv_h = 1.0 / self.h;
        Ok(picked
            .iter()
            .enumerate()
            .map(|(row, &(_, idx))| (idx, gx[row] * inv_h, gy[row] * inv_h))
            .collect())
    }

    /// Moving-least-squares interpolation weights at an in-domain point:
    /// a weighted cubic fit over the nearest interior nodes.
    pub(crate) fn mls_weights(&self, z: Complex64) -> Result<Vec<(u32, f64)>> {
        let (picked, a, wgt) = self.mls_setup(z)?;
        let v = self.mls_functional(&a, &wgt, 0)?;
        Ok(picked
            .iter()
            .enumerate()
            .map(|(row, &(_, idx))| (idx, v[row]))
            .collect())
    }

    /// Shared MLS scaffolding: picked nodes, scaled basis rows, weights.
    #[allow(clippy::type_complexity)]
    fn mls_setup(
        &self,
        z: Complex64,
    ) -> Result<(Vec<(f64, u32)>, Vec<[f64; MLS_DEGREE_TERMS]>, Vec<f64>)> {
        // gather nearest nodes (brute force; node counts are small)
        let mut order: Vec<(f64, u32)> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &w)| ((w - z).norm_sqr(), i as u32))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = MLS_NEIGHBORS.min(order.len());
        if k < MLS_DEGREE_TERMS {
            return Err(MagError::InvalidConfig(
                "grid too coarse for interpolation stencil".into(),
            ));
        }
        let picked: Vec<(f64, u32)> = order[..k].to_vec();
        // basis: 1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3 at (dz/h)
        let mut a = vec![[0.0f64; MLS_DEGREE_TERMS]; k];
        let mut wgt = vec![0.0f64; k];
        let scale = (picked.last().unwrap().0).sqrt().max(self.h);
        for (row, &(d2, idx)) in picked.iter().enumerate() {
            let d = self.nodes[idx as usize] - z;
            let (x, y) = (d.re / self.h, d.im / self.h);
            a[row] = [
                1.0,
                x,
                y,
                x * x,
                x * y,
                y * y,
                x * x * x,
                x * x * y,
                x * y * y,
                y * y * y,
            ];
            let r = d2.sqrt() / scale;
            wgt[row] = (-2.0 * r * r).exp();
        }
        Ok((picked, a, wgt))
    }

    /// Row of weights realizing the `which`-th basis functional (0 = value,
    /// 1 = d/dx in lattice units, 2 = d/dy) of the weighted LS fit.
    fn mls_functional(
        &self,
        a: &[[f64; MLS_DEGREE_TERMS]],
        wgt: &[f64],
        which: usize,
    ) -> Result<Vec<f64>> {
        let mut g = [[0.0f64; MLS_DEGREE_TERMS]; MLS_DEGREE_TERMS];
        for (row, arow) in a.iter().enumerate() {
            for p in 0..MLS_DEGREE_TERMS {
                for q in 0..MLS_DEGREE_TERMS {
                    g[p][q] += wgt[row] * arow[p] * arow[q];
                }
            }
        }
        let mut rhs = [0.0f64; MLS_DEGREE_TERMS];
        rhs[which] = 1.0;
        // weights_row_j = wgt_j * (A row_j) . (G^{-1} e_which)
        let coef = solve_dense(&mut g, rhs).ok_or_else(|| {
            MagError::InvalidConfig("singular interpolation stencil".into())
        })?;
        let mut out = Vec::with_capacity(a.len());
        for (row, arow) in a.iter().enumerate() {
            let mut v = 0.0;
            for p in 0..MLS_DEGREE_TERMS {
                v += arow[p] * coef[p];
            }
            out.push(wgt[row] * v);
        }
        Ok(out)
    }

    /// Interpolation rule at an arbitrary disk point (reduces first).
    pub fn interpolation_rule(&self, surface: &SurfaceModel, z: Complex64) -> Result<InterpRule> {
        if surface.group.contains(z, 1e-13) {
            return Ok(InterpRule {
                weights: self.mls_weights(z)?,
                rotation: 0.0,
            });
        }
        let (reduced, word) = surface.group.reduce(z)?;
        let gamma = word.map.inverse();
        Ok(InterpRule {
            weights: self.mls_weights(reduced.to_complex())?,
            rotation: gamma.rotation_at(z),
        })
    }

    fn build_weights(&mut self, surface: &SurfaceModel, fine: usize) {
        let r_v = 2.0f64.powf(-0.25);
        let hf = self.h / fine as f64;
        let nf = (r_v / hf).ceil() as i64 + 2;
        let mut mass = vec![0.0f64; self.nodes.len()];
        let mut total = 0.0;
        for j in -nf..nf {
            for i in -nf..nf {
                let z = Complex64::new((i as f64 + 0.5) * hf, (j as f64 + 0.5) * hf);
                if !surface.group.contains(z, 0.0) {
                    continue;
                }
                let m = surface.metric_factor(z) * hf * hf;
                total += m;
                // nearest interior node: search expanding lattice rings
                let (ci, cj) = self.lattice_of(z);
                let mut best: Option<(f64, usize)> = None;
                for ring in 0..6i64 {
                    for dj in -ring..=ring {
                        for di in -ring..=ring {
                            if di.abs() != ring && dj.abs() != ring {
                                continue;
                            }
                            if let Some(&t) = self.lattice_index.get(&(ci + di, cj + dj)) {
                                let d = (self.nodes[t as usize] - z).norm_sqr();
                                if best.map_or(true, |(bd, _)| d < bd) {
                                    best = Some((d, t as usize));
                                }
                            }
                        }
                    }
                    if let Some((bd, _)) = best {
                        // a strictly closer node cannot live beyond ring+1
                        if bd.sqrt() < (ring as f64) * self.h {
                            break;
                        }
                    }
                }
                let tgt = match best {
                    Some((_, t)) => t,
                    None => {
                        // extremely coarse grids: brute force
                        let mut bt = 0;
                        let mut bd = f64::INFINITY;
                        for (t, &w) in self.nodes.iter().enumerate() {
                            let d = (w - z).norm_sqr();
                            if d < bd {
                                bd = d;
                                bt = t;
                            }
                        }
                        bt
                    }
                };
                mass[tgt] += m;
            }
        }
        self.measured_area = total;
        for m in &mut mass {
            *m /= total;
        }
        self.weights = mass;
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Weighted L2 inner product of node vectors (one mode).
    pub fn mode_inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.nodes.len() {
            s += self.weights[i] * a[i] * b[i].conj();
        }
        s
    }

    pub fn mode_norm_sq(&self, a: &[Complex64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.nodes.len() {
            s += self.weights[i] * a[i].norm_sqr();
        }
        s
    }

    /// Fetch a neighbor value for mode `n`, resolving ghosts.
    #[inline]
    pub fn neighbor_value(&self, f_mode: &[Complex64], r: NeighborRef, n: i32) -> Complex64 {
        match r {
            NeighborRef::Interior(t) => f_mode[t as usize],
            NeighborRef::Ghost(g) => {
                let rule = &self.ghosts[g as usize];
                let mut v = Complex64::new(0.0, 0.0);
                for &(idx, w) in &rule.weights {
                    v += w * f_mode[idx as usize];
                }
                v * Complex64::from_polar(1.0, n as f64 * rule.rotation)
            }
        }
    }

    /// Wirtinger derivative `(d/dz) f_n` by centered differences.
    pub fn d_z(&self, f_mode: &[Complex64], n: i32) -> Vec<Complex64> {
        let inv4h = 1.0 / (4.0 * self.h);
        let mut out = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let nb = &self.neighbors[i];
            let e = self.neighbor_value(f_mode, nb[0], n);
            let w = self.neighbor_value(f_mode, nb[1], n);
            let nn = self.neighbor_value(f_mode, nb[2], n);
            let s = self.neighbor_value(f_mode, nb[3], n);
            // (d_x - i d_y)/2
            out.push(((e - w) - Complex64::i() * (nn - s)) * inv4h);
        }
        out
    }

    /// Conjugate Wirtinger derivative `(d/dz̄) f_n`.
    pub fn d_zbar(&self, f_mode: &[Complex64], n: i32) -> Vec<Complex64> {
        let inv4h = 1.0 / (4.0 * self.h);
        let mut out = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let nb = &self.neighbors[i];
            let e = self.neighbor_value(f_mode, nb[0], n);
            let w = self.neighbor_value(f_mode, nb[1], n);
            let nn = self.neighbor_value(f_mode, nb[2], n);
            let s = self.neighbor_value(f_mode, nb[3], n);
            out.push(((e - w) + Complex64::i() * (nn - s)) * inv4h);
        }
        out
    }

    /// Euclidean 5-point Laplacian of a mode-0 (scalar) node vector.
    pub fn laplacian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let nb = &self.neighbors[i];
            let e = self.neighbor_value(f, nb[0], 0);
            let w = self.neighbor_value(f, nb[1], 0);
            let nn = self.neighbor_value(f, nb[2], 0);
            let s = self.neighbor_value(f, nb[3], 0);
            out.push((e + w + nn + s - 4.0 * f[i]) * inv_h2);
        }
        out
    }
}

/// Solve a small dense symmetric system by Gaussian elimination with
/// partial pivoting. Returns None when singular.
fn solve_dense(
    g: &mut [[f64; MLS_DEGREE_TERMS]; MLS_DEGREE_TERMS],
    rhs: [f64; MLS_DEGREE_TERMS],
) -> Option<[f64; MLS_DEGREE_TERMS]> {
    let n = MLS_DEGREE_TERMS;
    let mut b = rhs;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if g[r][col].abs() > g[piv][col].abs() {
                piv = r;
            }
        }
        if g[piv][col].abs() < 1e-14 {
            return None;
        }
        g.swap(col, piv);
        b.swap(col, piv);
        let d = g[col][col];
        for r in col + 1..n {
            let f = g[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                g[r][c] -= f * g[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; MLS_DEGREE_TERMS];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= g[col][c] * x[c];
        }
        x[col] = s / g[col][col];
    }
    Some(x)
}
