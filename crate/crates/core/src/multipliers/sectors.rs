//! Angular partition of frequency space into caps of angular width about `delta / lambda`.
//!
//! Directions are split by an equiangular cubed sphere: the face is the dominant axis of
//! `xi`, and each tangent coordinate `atan(xi_b / |xi_a|)` is cut into `m` equal arcs.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::grid::{SpatialLattice, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct AngularSectorSet {
    dim: usize,
    lambda: f64,
    delta: f64,
    /// Arcs per tangent coordinate; zero means a single sector.
    m: usize,
}

/// Face scale keeping `2n m^{n-1} <= 8 (lambda/delta)^{n-1}`.
fn face_constant(dim: usize) -> f64 {
    if dim <= 1 {
        return 1.0;
    }
    (4.0 / dim as f64).powf(1.0 / (dim as f64 - 1.0)).min(1.0)
}

impl AngularSectorSet {
    pub fn new(dim: usize, lambda: f64, delta: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "angular sectors need 1 <= n <= 6".into(),
            });
        }
        if !(delta > 0.0 && lambda > 0.0 && delta <= lambda * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "sector width delta={delta} must satisfy 0 < delta <= lambda={lambda}"
            )));
        }
        let m = if dim == 1 { 1 } else { (face_constant(dim) * lambda / delta + 1e-9).floor() as usize };
        Ok(AngularSectorSet { dim, lambda, delta, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn arcs_per_face(&self) -> usize {
        self.m
    }

    pub fn count(&self) -> usize {
        if self.m == 0 {
            1
        } else {
            2 * self.dim * self.m.pow(self.dim as u32 - 1)
        }
    }

    /// Sector containing direction `xi`; `None` for `xi = 0`.
    pub fn assign(&self, xi: &[f64]) -> Option<usize> {
        let xi = &xi[..self.dim];
        let mut face = 0;
        let mut best = -1.0;
        for (a, v) in xi.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                face = a;
            }
        }
        if best <= 0.0 {
            return None;
        }
        if self.m == 0 {
            return Some(0);
        }
        let m = self.m;
        let neg = xi[face] < 0.0;
        let mut cell = 0usize;
        for (b, v) in xi.iter().enumerate() {
            if b == face {
                continue;
            }
            let theta = (v / best).atan();
            let c = (((theta + FRAC_PI_4) / FRAC_PI_2) * m as f64).floor() as i64;
            cell = cell * m + c.clamp(0, m as i64 - 1) as usize;
        }
        let face_id = 2 * face + usize::from(neg);
        Some(face_id * m.pow(self.dim as u32 - 1) + cell)
    }

    fn decode(&self, id: usize) -> (usize, bool, Vec<usize>) {
        let per = self.m.pow(self.dim as u32 - 1);
        let face_id = id / per;
        let mut rem = id % per;
        let mut cells = vec![0; self.dim - 1];
        for c in cells.iter_mut().rev() {
            *c = rem % self.m;
            rem /= self.m;
        }
        (face_id / 2, face_id % 2 == 1, cells)
    }

    fn direction(&self, face: usize, neg: bool, tangent: &[f64]) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        v[face] = if neg { -1.0 } else { 1.0 };
        let mut t = tangent.iter();
        for (b, slot) in v.iter_mut().enumerate().take(self.dim) {
            if b != face {
                *slot = *t.next().unwrap();
            }
        }
        let n = v[..self.dim].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= n;
        }
        v
    }

    /// Unit center direction of sector `id`.
    pub fn center(&self, id: usize) -> [f64; MAX_DIM] {
        let mut e = [0.0; MAX_DIM];
        if self.m == 0 {
            e[0] = 1.0;
            return e;
        }
        let (face, neg, cells) = self.decode(id);
        let w = FRAC_PI_2 / self.m as f64;
        let tan: Vec<f64> = cells.iter().map(|&c| (-FRAC_PI_4 + (c as f64 + 0.5) * w).tan()).collect();
        self.direction(face, neg, &tan)
    }

    /// Largest angle between the center of `id` and a point of its cell.
    pub fn angular_radius(&self, id: usize) -> f64 {
        if self.m == 0 {
            return std::f64::consts::PI;
        }
        let (face, neg, cells) = self.decode(id);
        let c = self.center(id);
        let w = FRAC_PI_2 / self.m as f64;
        let k = cells.len();
        let mut worst = 0.0f64;
        for mask in 0..(1usize << k) {
            let tan: Vec<f64> = cells
                .iter()
                .enumerate()
                .map(|(i, &cell)| {
                    let edge = if mask >> i & 1 == 1 { cell + 1 } else { cell };
                    (-FRAC_PI_4 + edge as f64 * w).tan()
                })
                .collect();
            let v = self.direction(face, neg, &tan);
            let dot: f64 = (0..self.dim).map(|a| v[a] * c[a]).sum();
            worst = worst.max(dot.clamp(-1.0, 1.0).acos());
        }
        worst
    }

    /// Sector id of every point of a spatial lattice (`u32::MAX` at `xi = 0`).
    pub fn assign_lattice(&self, lattice: &SpatialLattice) -> Vec<u32> {
        (0..lattice.len())
            .map(|s| self.assign(&lattice.xi(s)).map_or(u32::MAX, |id| id as u32))
            .collect()
    }
}

/// Angle in `[0, pi]` between two vectors.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    let cross2 = (aa * bb - dot * dot).max(0.0);
    cross2.sqrt().atan2(dot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_respect_bound() {
        for dim in 2..=6 {
            for &(lam, del) in &[(16.0, 4.0), (64.0, 8.0), (8.0, 8.0), (8.0, 2.0 * 2f64.sqrt())] {
                let s = AngularSectorSet::new(dim, lam, del).unwrap();
                let bound = 8.0 * (lam / del).powi(dim as i32 - 1);
                assert!(s.count() as f64 <= bound + 1e-9, "dim {dim} count {} bound {bound}", s.count());
            }
        }
        let s = AngularSectorSet::new(2, 16.0, 4.0).unwrap();
        assert!((2..=64).contains(&s.count()));
    }

    #[test]
    fn every_direction_gets_exactly_one_valid_id() {
        let s = AngularSectorSet::new(3, 16.0, 4.0).unwrap();
        let lat = SpatialLattice::new(3, 8, 1.0);
        let ids = s.assign_lattice(&lat);
        for (i, id) in ids.iter().enumerate() {
            if i == 0 {
                assert_eq!(*id, u32::MAX);
            } else {
                assert!((*id as usize) < s.count());
            }
        }
    }

    #[test]
    fn center_lies_in_its_own_sector() {
        for dim in 2..=5 {
            let s = AngularSectorSet::new(dim, 32.0, 4.0).unwrap();
            for id in 0..s.count() {
                assert_eq!(s.assign(&s.center(id)), Some(id));
                assert!(s.angular_radius(id) < 2.0 * (dim as f64).sqrt() * 4.0 / 32.0 * 1.6);
            }
        }
    }

    #[test]
    fn coarse_width_gives_a_handful_of_sectors() {
        let s = AngularSectorSet::new(2, 8.0, 8.0).unwrap();
        assert!((1..=8).contains(&s.count()));
        assert!(AngularSectorSet::new(2, 8.0, 9.0).is_err());
    }

    #[test]
    fn angle_of_collinear_vectors_is_zero() {
        assert_eq!(angle_between(&[1.0, 2.0], &[2.0, 4.0]), 0.0);
        assert!((angle_between(&[1.0, 0.0], &[0.0, 3.0]) - FRAC_PI_2).abs() < 1e-15);
    }
}
