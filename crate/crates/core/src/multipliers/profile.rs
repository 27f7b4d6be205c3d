use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial bump `phi` with `phi = 1` on `|s| <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffProfile {
    /// Indicator of `|s| < 1`.
    Sharp,
    /// Smoothstep of the given order, vanishing for `|s| >= 1 + 2 transition`.
    Smooth { transition: f64, order: u32 },
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile::Sharp
    }
}

impl CutoffProfile {
    pub fn smooth() -> Self {
        CutoffProfile::Smooth { transition: 0.25, order: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if let CutoffProfile::Smooth { transition, order } = *self {
            if !(transition > 0.0 && transition <= 0.5) {
                return Err(Error::Config(format!("transition {transition} must lie in (0, 1/2]")));
            }
            if order == 0 || order > 12 {
                return Err(Error::Config(format!("smoothstep order {order} must lie in 1..=12")));
            }
        }
        Ok(())
    }

    pub fn is_sharp(&self) -> bool {
        matches!(self, CutoffProfile::Sharp)
    }

    /// `phi(s)`.
    pub fn bump(&self, s: f64) -> f64 {
        let a = s.abs();
        match *self {
            CutoffProfile::Sharp => {
                if a < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::Smooth { transition, order } => {
                if a <= 1.0 {
                    1.0
                } else if a >= 1.0 + 2.0 * transition {
                    0.0
                } else {
                    1.0 - smoothstep((a - 1.0) / (2.0 * transition), order)
                }
            }
        }
    }

    /// Radius beyond which `phi` vanishes.
    pub fn reach(&self) -> f64 {
        match *self {
            CutoffProfile::Sharp => 1.0,
            CutoffProfile::Smooth { transition, .. } => 1.0 + 2.0 * transition,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Generalized smoothstep `S_N` on `[0,1]`: `C^N` at both ends.
pub fn smoothstep(x: f64, order: u32) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let n = order;
    let mut sum = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binomial(n + k, k) * binomial(2 * n + 1, n - k) * x.powi(k as i32);
    }
    x.powi(n as i32 + 1) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        for order in 1..=6 {
            assert!(smoothstep(0.0, order).abs() < 1e-14);
            assert!((smoothstep(1.0, order) - 1.0).abs() < 1e-12);
            for &x in &[0.1, 0.3, 0.45] {
                let s = smoothstep(x, order) + smoothstep(1.0 - x, order);
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_bump_is_monotone_in_unit_interval() {
        let p = CutoffProfile::smooth();
        let mut prev = 1.0;
        for i in 0..400 {
            let v = p.bump(i as f64 * 0.005);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(p.bump(1.5), 0.0);
        assert_eq!(CutoffProfile::Sharp.bump(1.0), 0.0);
        assert_eq!(CutoffProfile::Sharp.bump(0.999), 1.0);
    }
}
