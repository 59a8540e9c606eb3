//! Coordinate boxes and low-discrepancy point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Point;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in the given base.
pub fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    r
}

/// Axis-aligned coordinate box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Invalid("domain bounds must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Invalid("domain needs finite bounds with lo < hi".into()));
        }
        Ok(Domain { lo, hi })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Domain { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn center(&self) -> Point {
        Point::new(self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    /// Shrinks every side by `margin` (absolute) on both ends.
    pub fn shrink(&self, margin: f64) -> Self {
        Domain {
            lo: self.lo.iter().map(|v| v + margin).collect(),
            hi: self.hi.iter().map(|v| v - margin).collect(),
        }
    }

    /// Maps a point of the unit cube into the box.
    pub fn map_unit(&self, u: &[f64]) -> Point {
        Point::new(
            u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(t, (a, b))| a + t * (b - a))
                .collect(),
        )
    }

    /// `count` Halton points in the box. With a seed, a Cranley–Patterson
    /// rotation drawn from that seed is applied (mod 1).
    pub fn halton(&self, count: usize, seed: Option<u64>) -> Vec<Point> {
        let d = self.dim();
        let shift: Vec<f64> = match seed {
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..d).map(|_| rng.gen::<f64>()).collect()
            }
            None => vec![0.0; d],
        };
        (1..=count as u64)
            .map(|i| {
                let u: Vec<f64> = (0..d)
                    .map(|k| (radical_inverse(i, PRIMES[k % PRIMES.len()]) + shift[k]).fract())
                    .collect();
                self.map_unit(&u)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn halton_points_stay_inside() {
        let d = Domain::new(vec![-1.0, 2.0, 0.0], vec![1.0, 3.0, 0.5]).unwrap();
        for p in d.halton(100, Some(7)) {
            assert!(d.contains(p.coords()));
        }
        assert_eq!(d.halton(5, Some(3)), d.halton(5, Some(3)));
        assert_ne!(d.halton(5, Some(3)), d.halton(5, Some(4)));
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(Domain::new(vec![1.0], vec![0.0]).is_err());
    }
}
