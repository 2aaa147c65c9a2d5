//! Global parameters of one working session: the rank and the visual scale.

use crate::error::{ArborError, Result};

/// Rank of the free group together with the visual metric scale.
///
/// All letter arithmetic is 0-based: letters are `0..2r`, letter `i` and
/// letter `i + r mod 2r` are mutually inverse, and the lexicographic order on
/// words uses the numeric order of letters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupContext {
    r: usize,
    epsilon: f64,
}

impl GroupContext {
    pub fn new(r: usize, epsilon: f64) -> Result<Self> {
        if r < 2 {
            return Err(ArborError::pre(format!("rank must be at least 2, got {r}")));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(ArborError::pre(format!(
                "visual scale must be a positive finite number, got {epsilon}"
            )));
        }
        Ok(GroupContext { r, epsilon })
    }

    /// Context with the default visual scale 1.
    pub fn with_rank(r: usize) -> Result<Self> {
        GroupContext::new(r, 1.0)
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of generators and inverses, `2r`.
    pub fn alphabet_size(&self) -> usize {
        2 * self.r
    }

    /// Branching factor of the Cayley tree away from the root, `2r - 1`.
    pub fn branching(&self) -> usize {
        2 * self.r - 1
    }

    /// Volume growth rate `Q = ln(2r - 1)`; also the critical exponent.
    pub fn growth(&self) -> f64 {
        ((2 * self.r - 1) as f64).ln()
    }

    /// Hausdorff dimension `Q / epsilon` of the boundary in the visual metric.
    pub fn boundary_dim(&self) -> f64 {
        self.growth() / self.epsilon
    }

    /// Hyperbolicity constant of the Gromov product on the tree. Trees are
    /// 0-hyperbolic, and `e^{-eps(.,.)}` is a metric for every `eps > 0`, so
    /// the visual metric needs no Frink correction: the comparison constant
    /// between `e^{-eps(.,.)}` and the metric is exactly 1.
    pub fn hyperbolicity(&self) -> f64 {
        0.0
    }

    /// `(2r - 1)^x` for real `x`, evaluated as `exp(x * Q)`.
    ///
    /// Every power of the branching factor in this crate goes through this
    /// single routine so that quantities contracted to agree bit for bit
    /// (spherical function, radial matrix coefficients, Poisson numerators)
    /// are built from identical factors.
    #[inline]
    pub fn qpow(&self, x: f64) -> f64 {
        (x * self.growth()).exp()
    }

    /// Size of the sphere of radius `n` as an exact integer.
    ///
    /// `|S_0| = 1` and `|S_n| = 2r (2r-1)^{n-1}`. Overflows u128 only for
    /// radii far beyond any enumerable range.
    pub fn sphere_size(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let b = (2 * self.r - 1) as u128;
        let mut size = (2 * self.r) as u128;
        for _ in 1..n {
            size = size.checked_mul(b).expect("sphere size overflows u128");
        }
        size
    }

    /// Size of the closed ball of radius `n`.
    pub fn ball_size(&self, n: usize) -> u128 {
        (0..=n).map(|j| self.sphere_size(j)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(GroupContext::new(1, 1.0).is_err());
        assert!(GroupContext::new(2, 0.0).is_err());
        assert!(GroupContext::new(2, -1.0).is_err());
        assert!(GroupContext::new(2, f64::NAN).is_err());
    }

    #[test]
    fn sphere_sizes_rank_two() {
        let ctx = GroupContext::with_rank(2).unwrap();
        let sizes: Vec<u128> = (0..5).map(|n| ctx.sphere_size(n)).collect();
        assert_eq!(sizes, vec![1, 4, 12, 36, 108]);
        assert_eq!(ctx.ball_size(3), 53);
    }

    #[test]
    fn growth_matches_branching() {
        let ctx = GroupContext::with_rank(3).unwrap();
        assert_eq!(ctx.branching(), 5);
        assert!((ctx.growth() - 5f64.ln()).abs() < 1e-15);
        assert!((ctx.qpow(2.0) - 25.0).abs() < 25.0 * 1e-14);
        assert_eq!(ctx.qpow(0.0), 1.0);
    }

    #[test]
    fn boundary_dim_scales_with_epsilon() {
        let ctx = GroupContext::new(2, 0.5).unwrap();
        assert!((ctx.boundary_dim() - 2.0 * 3f64.ln()).abs() < 1e-15);
    }
}
