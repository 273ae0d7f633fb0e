//! Complex sparse matrices (CSR) and a CGLS least-squares solver.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from unsorted triplets; duplicate entries are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(u32, u32, Complex64)>,
    ) -> Self {
        triplets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r as usize + 1] += 1;
                prev = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            out[r] = acc;
        }
    }

    /// Conjugate-transpose product `A^H y`.
    pub fn matvec_adj(&self, y: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        for v in out.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for r in 0..self.rows {
            let yr = y[r];
            if yr.norm_sqr() == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k] as usize] += self.values[k].conj() * yr;
            }
        }
    }

    /// Euclidean norms of the columns (for Jacobi scaling).
    pub fn column_norms(&self) -> Vec<f64> {
        let mut n = vec![0.0f64; self.cols];
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                n[self.indices[k] as usize] += self.values[k].norm_sqr();
            }
        }
        n.into_iter().map(f64::sqrt).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CglsResult {
    pub x: Vec<Complex64>,
    /// `||A x - b||` at exit.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// CGLS for `min ||A x - b||` with Jacobi column scaling.
///
/// `tol` is relative on the normal-equations residual `||A^H r||`.
pub fn cgls(a: &CsrMatrix, b: &[Complex64], max_iter: usize, tol: f64) -> CglsResult {
    let col_norms = a.column_norms();
    let scale: Vec<f64> = col_norms
        .iter()
        .map(|&c| if c > 1e-300 { 1.0 / c } else { 0.0 })
        .collect();

    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        u.iter()
            .zip(v.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
    };
    let nrm = |u: &[Complex64]| -> f64 { dot(u, u).re.max(0.0).sqrt() };

    let mut x = vec![Complex64::new(0.0, 0.0); a.cols];
    let mut r = b.to_vec();
    let mut s = vec![Complex64::new(0.0, 0.0); a.cols];
    a.matvec_adj(&r, &mut s);
    for (si, sc) in s.iter_mut().zip(scale.iter()) {
        *si *= *sc;
    }
    let s0_norm = nrm(&s).max(1e-300);
    let mut p = s.clone();
    let mut gamma = s0_norm * s0_norm;
    let mut q = vec![Complex64::new(0.0, 0.0); a.rows];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        // q = A (D p)
        let dp: Vec<Complex64> = p.iter().zip(scale.iter()).map(|(v, sc)| v * *sc).collect();
        a.matvec(&dp, &mut q);
        let qn = nrm(&q);
        if qn <= 1e-300 {
            converged = true;
            break;
        }
        let alpha = gamma / (qn * qn);
        for i in 0..x.len() {
            x[i] += alpha * dp[i];
        }
        for i in 0..r.len() {
            r[i] -= alpha * q[i];
        }
        a.matvec_adj(&r, &mut s);
        for (si, sc) in s.iter_mut().zip(scale.iter()) {
            *si *= *sc;
        }
        let gamma_new = {
            let n = nrm(&s);
            n * n
        };
        if it % 8 == 0 {
            history.push(nrm(&r));
        }
        if gamma_new.sqrt() / s0_norm < tol {
            converged = true;
            break;
        }
        let beta = gamma_new / gamma;
        for i in 0..p.len() {
            p[i] = s[i] + beta * p[i];
        }
        gamma = gamma_new;
    }
    let residual = nrm(&r);
    history.push(residual);
    CglsResult {
        x,
        residual,
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_overdetermined_system() {
        // 4x2 system with known least-squares solution
        let triplets = vec![
            (0u32, 0u32, Complex64::new(1.0, 0.0)),
            (0, 1, Complex64::new(0.0, 1.0)),
            (1, 0, Complex64::new(2.0, 0.0)),
            (2, 1, Complex64::new(1.0, -1.0)),
            (3, 0, Complex64::new(0.0, 0.5)),
            (3, 1, Complex64::new(1.0, 0.0)),
        ];
        let a = CsrMatrix::from_triplets(4, 2, triplets);
        let x_true = [Complex64::new(0.3, -0.2), Complex64::new(-1.1, 0.4)];
        let mut b = vec![Complex64::new(0.0, 0.0); 4];
        a.matvec(&x_true, &mut b);
        let res = cgls(&a, &b, 100, 1e-14);
        assert!(res.converged);
        for i in 0..2 {
            assert!((res.x[i] - x_true[i]).norm() < 1e-10);
        }
        assert!(res.residual < 1e-10);
    }

    #[test]
    fn reports_residual_floor_for_inconsistent_system() {
        // overdetermined inconsistent: rows (1), (1) with different rhs
        let triplets = vec![
            (0u32, 0u32, Complex64::new(1.0, 0.0)),
            (1, 0, Complex64::new(1.0, 0.0)),
        ];
        let a = CsrMatrix::from_triplets(2, 1, triplets);
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let res = cgls(&a, &b, 50, 1e-14);
        // best fit x = 1/2, residual sqrt(1/2)
        assert!((res.x[0].re - 0.5).abs() < 1e-10);
        assert!((res.residual - (0.5f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn adjoint_is_consistent() {
        let triplets = vec![
            (0u32, 0u32, Complex64::new(1.0, 2.0)),
            (0, 2, Complex64::new(-0.5, 0.0)),
            (1, 1, Complex64::new(0.0, -1.0)),
            (2, 0, Complex64::new(0.3, 0.3)),
        ];
        let a = CsrMatrix::from_triplets(3, 3, triplets);
        let x = [
            Complex64::new(1.0, -1.0),
            Complex64::new(0.5, 0.2),
            Complex64::new(-0.3, 0.9),
        ];
        let y = [
            Complex64::new(0.2, 0.1),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.4, -0.6),
        ];
        let mut ax = vec![Complex64::new(0.0, 0.0); 3];
        a.matvec(&x, &mut ax);
        let mut aty = vec![Complex64::new(0.0, 0.0); 3];
        a.matvec_adj(&y, &mut aty);
        let lhs: Complex64 = y.iter().zip(ax.iter()).map(|(u, v)| u.conj() * v).sum();
        let rhs: Complex64 = aty.iter().zip(x.iter()).map(|(u, v)| u.conj() * v).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
