//! Minimal fixed-size linear algebra for the linearized flow.

/// Column-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    /// m[col][row]
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub fn identity() -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, col) in m.iter_mut().enumerate() {
            col[i] = 1.0;
        }
        Self { m }
    }

    pub fn from_columns(c0: [f64; 3], c1: [f64; 3], c2: [f64; 3]) -> Self {
        Self { m: [c0, c1, c2] }
    }

    pub fn column(&self, j: usize) -> [f64; 3] {
        self.m[j]
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, col) in self.m.iter().enumerate() {
            for i in 0..3 {
                out[i] += col[i] * v[j];
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        Mat3 {
            m: [
                self.mul_vec(other.m[0]),
                self.mul_vec(other.m[1]),
                self.mul_vec(other.m[2]),
            ],
        }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2])
            - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
            + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2])
    }

    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return None;
        }
        let m = &self.m;
        let inv_d = 1.0 / d;
        // adjugate, written out
        let c = |r: usize, cidx: usize| -> f64 {
            let rows: [usize; 2] = match r {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            };
            let cols: [usize; 2] = match cidx {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            };
            let minor = m[cols[0]][rows[0]] * m[cols[1]][rows[1]]
                - m[cols[1]][rows[0]] * m[cols[0]][rows[1]];
            let sign = if (r + cidx) % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor
        };
        let mut out = [[0.0; 3]; 3];
        for (j, col) in out.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                // inverse[i][j] = cofactor(j, i) / det; column-major storage
                *v = c(j, i) * inv_d;
            }
        }
        Some(Mat3 { m: out })
    }

    /// Solve `self * x = b` via the explicit inverse (3x3, well scaled here).
    pub fn solve(&self, b: [f64; 3]) -> Option<[f64; 3]> {
        self.inverse().map(|inv| inv.mul_vec(b))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral norm via a few power iterations on `A^T A`.
    pub fn spectral_norm(&self) -> f64 {
        let mut v = [1.0, 0.7, 0.4];
        let at = self.transpose();
        let mut lam = 0.0;
        for _ in 0..60 {
            let w = at.mul_vec(self.mul_vec(v));
            lam = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            if lam == 0.0 {
                return 0.0;
            }
            v = [w[0] / lam, w[1] / lam, w[2] / lam];
        }
        lam.sqrt()
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut m = self.m;
        for col in &mut m {
            for v in col {
                *v *= s;
            }
        }
        Mat3 { m }
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut m = self.m;
        for (j, col) in m.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v -= other.m[j][i];
            }
        }
        Mat3 { m }
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

pub fn vec3_norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn vec3_sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a = Mat3::from_columns([2.0, 1.0, 0.5], [-1.0, 3.0, 0.2], [0.3, -0.4, 1.5]);
        let inv = a.inverse().unwrap();
        let id = a.mul(&inv);
        assert!(id.sub(&Mat3::identity()).max_abs() < 1e-12);
        assert!((a.det() * inv.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Mat3::from_columns([3.0, 0.0, 0.0], [0.0, -5.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((a.spectral_norm() - 5.0).abs() < 1e-9);
    }
}
