//! The genus-2 octagon quotient: a Fuchsian group with the regular
//! hyperbolic octagon (vertex angle pi/4) as fundamental domain.
//!
//! Opposite sides are paired by hyperbolic translations through the origin.
//! Side `j` (midpoint direction `(2j+1) pi/8`) is glued to side `j+4` by the
//! generator `g_j`, `j = 0..4`; the relator, checked numerically at
//! construction, is `g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 = id`.

use crate::error::{MagError, Result};
use crate::geom::disk::{hyperbolic_distance, DiskPoint};
use crate::geom::mobius::MobiusMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One letter of a group word: generator index 0..4, `inverse` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u8,
    pub inverse: bool,
}

impl Letter {
    pub fn name(&self) -> String {
        let c = (b'a' + self.gen) as char;
        if self.inverse {
            c.to_ascii_uppercase().to_string()
        } else {
            c.to_string()
        }
    }
}

/// A group element carried both as a word in the generators and as the
/// composed Möbius map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupWord {
    pub letters: Vec<Letter>,
    pub map: MobiusMap,
}

impl GroupWord {
    pub fn identity() -> Self {
        Self {
            letters: Vec::new(),
            map: MobiusMap::identity(),
        }
    }

    pub fn name(&self) -> String {
        if self.letters.is_empty() {
            "e".to_string()
        } else {
            self.letters.iter().map(|l| l.name()).collect()
        }
    }

    /// Exponent sums per generator (image under abelianization).
    pub fn exponents(&self) -> [i32; 4] {
        let mut e = [0i32; 4];
        for l in &self.letters {
            e[l.gen as usize] += if l.inverse { -1 } else { 1 };
        }
        e
    }
}

/// The Bolza octagon group together with domain-membership machinery.
#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    /// The four side-pairing translations `g0..g3`.
    pub generators: [MobiusMap; 4],
    /// All eight side maps: entry `j < 4` is `g_j` (glues side j+4 to side j),
    /// entry `j >= 4` is `g_{j-4}^{-1}`.
    pub side_maps: [MobiusMap; 8],
    /// Hyperbolic circumradius of the octagon.
    pub circumradius: f64,
    /// Hyperbolic inradius (distance from the origin to each side).
    pub inradius: f64,
    /// Euclidean data of the side geodesics: each side `j` lies on the circle
    /// `|e^{-i psi_j} z - center| = radius` with `psi_j = (2j+1) pi/8`.
    side_center: f64,
    side_radius: f64,
    /// Maximum word length used by the reducer before giving up.
    pub max_reduction_steps: usize,
}

impl Default for FuchsianGroup {
    fn default() -> Self {
        Self::bolza()
    }
}

impl FuchsianGroup {
    /// Construct the standard group. Translation length of each generator is
    /// `2 arccosh(1 + sqrt 2)` (twice the inradius).
    pub fn bolza() -> Self {
        let cosh_rho = 1.0 + 2.0_f64.sqrt();
        let rho = cosh_rho.acosh();
        let mut generators = [MobiusMap::identity(); 4];
        for (k, g) in generators.iter_mut().enumerate() {
            let psi = (2 * k + 1) as f64 * PI / 8.0;
            *g = MobiusMap::translation(psi, 2.0 * rho);
        }
        let mut side_maps = [MobiusMap::identity(); 8];
        for j in 0..4 {
            side_maps[j] = generators[j];
            side_maps[j + 4] = generators[j].inverse();
        }
        let x0 = (rho / 2.0).tanh();
        Self {
            generators,
            side_maps,
            circumradius: (3.0 + 2.0 * 2.0_f64.sqrt()).acosh(),
            inradius: rho,
            side_center: (x0 + 1.0 / x0) / 2.0,
            side_radius: (1.0 / x0 - x0) / 2.0,
            max_reduction_steps: 64,
        }
    }

    /// Residual of the defining relation `g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3`.
    pub fn relator_defect(&self) -> f64 {
        let g = &self.generators;
        let seq = [
            g[0],
            g[1].inverse(),
            g[2],
            g[3].inverse(),
            g[0].inverse(),
            g[1],
            g[2].inverse(),
            g[3],
        ];
        let mut m = MobiusMap::identity();
        for s in &seq {
            m = m.compose(s);
        }
        m.map_distance(&MobiusMap::identity())
    }

    /// Signed excess of `z` beyond side `j` (positive means outside the
    /// octagon across that side).
    fn side_excess(&self, z: Complex64, j: usize) -> f64 {
        let psi = (2 * j + 1) as f64 * PI / 8.0;
        let w = z * Complex64::from_polar(1.0, -psi);
        self.side_radius - (w - Complex64::new(self.side_center, 0.0)).norm()
    }

    /// Whether `z` lies in the closed fundamental octagon (up to `tol`).
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        // vertex euclidean radius is 2^(-1/4); anything beyond it is out
        if z.norm_sqr() > 0.7071067811865477 + tol.abs() {
            return false;
        }
        (0..8).all(|j| self.side_excess(z, j) <= tol)
    }

    /// Reduce a point to the fundamental octagon.
    ///
    /// Returns the reduced point and the word `w` with `w(reduced) = z`.
    /// Greedy strategy: while outside, apply whichever side map brings the
    /// point closest to the origin; the octagon is the Dirichlet domain of
    /// the origin, so each application strictly decreases the distance for
    /// points off the cut locus.
    pub fn reduce(&self, z: Complex64) -> Result<(DiskPoint, GroupWord)> {
        if z.norm_sqr() >= 1.0 - 1e-12 {
            return Err(MagError::OutsideDisk { x: z.re, y: z.im });
        }
        let origin = Complex64::new(0.0, 0.0);
        let mut cur = z;
        // letters of the inverse word applied so far (maps z -> cur)
        let mut applied: Vec<Letter> = Vec::new();
        for step in 0..self.max_reduction_steps {
            if self.contains(cur, 1e-13) {
                // cur = (l_n ... l_1)(z); the word w with w(cur) = z is
                // l_1^-1 ... l_n^-1, i.e. the applied letters inverted but
                // kept in application order (rightmost letter acts first).
                let letters: Vec<Letter> = applied
                    .iter()
                    .map(|l| Letter {
                        gen: l.gen,
                        inverse: !l.inverse,
                    })
                    .collect();
                let mut map = MobiusMap::identity();
                for l in &letters {
                    let g = if l.inverse {
                        self.generators[l.gen as usize].inverse()
                    } else {
                        self.generators[l.gen as usize]
                    };
                    map = map.compose(&g);
                }
                let word = GroupWord { letters, map };
                return Ok((DiskPoint::from_complex(cur)?, word));
            }
            let d0 = hyperbolic_distance(cur, origin);
            let mut best: Option<(f64, usize, Complex64)> = None;
            for (idx, m) in self.side_maps.iter().enumerate() {
                let w = m.apply(cur);
                let d = hyperbolic_distance(w, origin);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, idx, w));
                }
            }
            let (bd, idx, w) = best.unwrap();
            if bd >= d0 - 1e-15 {
                // No strict improvement (cut-locus tie); push across the
                // deepest violated side instead.
                let j = (0..8)
                    .max_by(|&a, &b| {
                        self.side_excess(cur, a)
                            .partial_cmp(&self.side_excess(cur, b))
                            .unwrap()
                    })
                    .unwrap();
                // crossing side j from outside means undoing a copy g_side(O)
                let idx = (j + 4) % 8;
                cur = self.side_maps[idx].apply(cur);
                applied.push(Letter {
                    gen: (idx % 4) as u8,
                    inverse: idx >= 4,
                });
                let _ = step;
                continue;
            }
            cur = w;
            applied.push(Letter {
                gen: (idx % 4) as u8,
                inverse: idx >= 4,
            });
        }
        Err(MagError::ReductionOutOfReach {
            steps: self.max_reduction_steps,
            radius: cur.norm(),
        })
    }

    /// Apply a word given by letters to a point.
    pub fn apply_word(&self, letters: &[Letter], z: Complex64) -> Complex64 {
        let mut m = MobiusMap::identity();
        for l in letters {
            let g = if l.inverse {
                self.generators[l.gen as usize].inverse()
            } else {
                self.generators[l.gen as usize]
            };
            m = m.compose(&g);
        }
        m.apply(z)
    }

    /// Parse a word like "aB" (lowercase = generator, uppercase = inverse).
    pub fn parse_word(&self, s: &str) -> Result<GroupWord> {
        let mut letters = Vec::new();
        for c in s.chars() {
            if c.is_whitespace() {
                continue;
            }
            let lower = c.to_ascii_lowercase();
            if !('a'..='d').contains(&lower) {
                return Err(MagError::InvalidConfig(format!(
                    "invalid word letter '{c}' (use a-d, A-D)"
                )));
            }
            letters.push(Letter {
                gen: (lower as u8) - b'a',
                inverse: c.is_ascii_uppercase(),
            });
        }
        let mut map = MobiusMap::identity();
        for l in &letters {
            let g = if l.inverse {
                self.generators[l.gen as usize].inverse()
            } else {
                self.generators[l.gen as usize]
            };
            map = map.compose(&g);
        }
        Ok(GroupWord { letters, map })
    }

    /// Enumerate orbit elements `w` with `d(0, w(center)) <= radius`, BFS on
    /// word length up to `max_word_len`. Returns `(map, image-of-center,
    /// exponent-sums)` triples in a deterministic order.
    pub fn orbit_ball(
        &self,
        center: Complex64,
        radius: f64,
        max_word_len: usize,
    ) -> Vec<OrbitElement> {
        let key = |z: Complex64| -> (i64, i64) {
            ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64)
        };
        let mut seen = std::collections::HashSet::new();
        let origin = Complex64::new(0.0, 0.0);
        let start = OrbitElement {
            map: MobiusMap::identity(),
            point: center,
            exponents: [0; 4],
        };
        seen.insert(key(center));
        let mut out = vec![start];
        let mut frontier: Vec<usize> = vec![0];
        // Expand one extra ring beyond the radius so elements whose every
        // geodesic word passes outside the ball are still found.
        let slack = 2.0 * self.inradius + 0.1;
        for _depth in 0..max_word_len {
            let mut next = Vec::new();
            for &i in &frontier {
                let base = out[i].clone();
                for (idx, m) in self.side_maps.iter().enumerate() {
                    let map = m.compose(&base.map);
                    let point = map.apply(center);
                    if hyperbolic_distance(point, origin) > radius + slack {
                        continue;
                    }
                    let k = key(point);
                    if seen.insert(k) {
                        let mut exponents = base.exponents;
                        exponents[idx % 4] += if idx >= 4 { -1 } else { 1 };
                        next.push(out.len());
                        out.push(OrbitElement {
                            map,
                            point,
                            exponents,
                        });
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out.retain(|e| hyperbolic_distance(e.point, origin) <= radius);
        out.sort_by(|a, b| {
            let da = a.point.norm_sqr();
            let db = b.point.norm_sqr();
            da.partial_cmp(&db)
                .unwrap()
                .then_with(|| a.point.re.partial_cmp(&b.point.re).unwrap())
                .then_with(|| a.point.im.partial_cmp(&b.point.im).unwrap())
        });
        out
    }
}

/// One orbit element produced by [`FuchsianGroup::orbit_ball`].
#[derive(Debug, Clone)]
pub struct OrbitElement {
    pub map: MobiusMap,
    /// Image of the queried center under `map`.
    pub point: Complex64,
    /// Exponent sums of the word (well defined: the relator is balanced).
    pub exponents: [i32; 4],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relator_is_identity() {
        let g = FuchsianGroup::bolza();
        assert!(g.relator_defect() < 1e-9, "defect {}", g.relator_defect());
    }

    #[test]
    fn generators_pair_opposite_sides() {
        let g = FuchsianGroup::bolza();
        let x0 = (g.inradius / 2.0).tanh();
        for j in 0..4 {
            let psi = (2 * j + 1) as f64 * PI / 8.0;
            let mid_far = Complex64::from_polar(-x0, psi);
            let mid_near = Complex64::from_polar(x0, psi);
            let img = g.generators[j].apply(mid_far);
            assert!((img - mid_near).norm() < 1e-12, "side {j}");
        }
    }

    #[test]
    fn reduce_center_and_generator_images() {
        let g = FuchsianGroup::bolza();
        let (p, w) = g.reduce(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(w.letters.len(), 0);
        assert!(p.norm_sq() < 1e-20);

        let z = g.generators[1].apply(Complex64::new(0.0, 0.0));
        let (p, w) = g.reduce(z).unwrap();
        assert!(p.to_complex().norm() < 1e-10);
        // word maps reduced point back to z
        let back = w.map.apply(p.to_complex());
        assert!((back - z).norm() < 1e-10, "roundtrip {back} vs {z}");
        assert_eq!(w.name(), "b");
    }

    #[test]
    fn reduce_matches_exhaustive_search_near_origin() {
        // Oracle: exhaustive search over words of length <= 3 minimizing the
        // distance of w^-1(z) to the origin.
        let g = FuchsianGroup::bolza();
        let origin = Complex64::new(0.0, 0.0);
        let mut rng_state = 42u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let t = 3.0 * next();
            let a = 2.0 * PI * next();
            let z = Complex64::from_polar((t / 2.0).tanh(), a);
            let (p, w) = g.reduce(z).unwrap();
            assert!((w.map.apply(p.to_complex()) - z).norm() < 1e-10);
            // exhaustive minimum over short words
            let mut best = hyperbolic_distance(z, origin);
            let mut stack = vec![MobiusMap::identity()];
            for _ in 0..3 {
                let mut nf = Vec::new();
                for m in &stack {
                    for s in &g.side_maps {
                        let c = s.compose(m);
                        let d = hyperbolic_distance(c.apply(z), origin);
                        if d < best {
                            best = d;
                        }
                        nf.push(c);
                    }
                }
                stack = nf;
            }
            let got = hyperbolic_distance(p.to_complex(), origin);
            assert!(
                got <= best + 1e-9,
                "reduced dist {got} vs exhaustive {best}"
            );
            assert!(got <= g.circumradius + 1e-9);
        }
    }

    #[test]
    fn orbit_ball_counts_grow_like_area() {
        let g = FuchsianGroup::bolza();
        let n6 = g.orbit_ball(Complex64::new(0.0, 0.0), 6.0, 8).len();
        let n8 = g.orbit_ball(Complex64::new(0.0, 0.0), 8.0, 10).len();
        // Values pinned from an independent BFS implementation.
        assert_eq!(n6, 97);
        assert_eq!(n8, 793);
    }

    #[test]
    fn parse_word_roundtrip() {
        let g = FuchsianGroup::bolza();
        let w = g.parse_word("aBc").unwrap();
        assert_eq!(w.name(), "aBc");
        assert_eq!(w.exponents(), [1, -1, 1, 0]);
    }
}
