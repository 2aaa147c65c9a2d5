//! Exact boundary measure theory: cylinder masses, annulus profiles along
//! points and rays, conformal derivative cocycle, visual distances, and
//! closed-form pair counts over spheres.
//!
//! All masses are exact rationals. The only place a mass becomes a float is
//! [`rat_to_f64`], so any two routines converting the same rational get the
//! same bits.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::context::GroupContext;
use crate::error::{ArborError, Result};
use crate::word::{busemann_on_cylinder, ReducedWord};

/// A boundary cylinder: all rays extending a nonempty reduced word, or the
/// whole boundary at level 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cylinder {
    Whole,
    Word(ReducedWord),
}

impl Cylinder {
    pub fn level(&self) -> usize {
        match self {
            Cylinder::Whole => 0,
            Cylinder::Word(w) => w.len(),
        }
    }
}

/// Target of an annulus profile: a generic boundary point (all rays have the
/// same profile) or an orbit point at distance `n` from the base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileTarget {
    Boundary,
    Orbit(usize),
}

/// The single rational-to-double conversion point of the crate.
pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("rational within double range")
}

fn big_branch_pow(ctx: &GroupContext, k: usize) -> BigUint {
    BigUint::from(ctx.branching()).pow(k as u32)
}

/// Measure of any level-`k` cylinder: `1/(2r (2r-1)^{k-1})` for `k >= 1`,
/// and 1 at level 0. The Patterson-Sullivan measure of the tree boundary is
/// uniform on each level.
pub fn level_measure(ctx: &GroupContext, k: usize) -> BigRational {
    if k == 0 {
        return BigRational::one();
    }
    let denom = BigUint::from(ctx.alphabet_size()) * big_branch_pow(ctx, k - 1);
    BigRational::new(BigInt::one(), denom.into())
}

pub fn cylinder_measure(ctx: &GroupContext, c: &Cylinder) -> BigRational {
    level_measure(ctx, c.level())
}

/// Mass of `{xi : (xi, y)_o = m}`.
///
/// For a boundary target the profile is `p_0 = (2r-1)/(2r)` and
/// `p_m = (2r-2)/(2r (2r-1)^m)` for `m >= 1`. For an orbit point of length
/// `n` the values agree for `m < n` and the terminal mass `p_n` is the full
/// level-`n` cylinder; `m > n` is out of range.
pub fn annulus_profile(ctx: &GroupContext, y: ProfileTarget, m: usize) -> Result<BigRational> {
    if let ProfileTarget::Orbit(n) = y {
        if m > n {
            return Err(ArborError::pre(format!(
                "annulus index {m} exceeds point length {n}"
            )));
        }
        if m == n {
            return Ok(level_measure(ctx, n));
        }
    }
    if m == 0 {
        // complement of the first-letter cylinder
        return Ok(BigRational::new(
            BigInt::from(ctx.branching()),
            BigInt::from(ctx.alphabet_size()),
        ));
    }
    let denom = BigUint::from(ctx.alphabet_size()) * big_branch_pow(ctx, m);
    Ok(BigRational::new(
        BigInt::from(ctx.alphabet_size() - 2),
        BigInt::from(denom),
    ))
}

/// Extreme ratios of annulus mass to `e^{-Qk}` over `k <= k_max`: the
/// two-sided regularity constants of the boundary partition along `y`.
pub fn ahlfors_partition_check(
    ctx: &GroupContext,
    y: ProfileTarget,
    k_max: usize,
) -> Result<(f64, f64)> {
    if k_max < 1 {
        return Err(ArborError::pre("need k_max >= 1"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=k_max {
        let mass = annulus_profile(ctx, y, k)?;
        // exact: mass * (2r-1)^k
        let ratio = mass * BigRational::from(BigInt::from(big_branch_pow(ctx, k)));
        let ratio = rat_to_f64(&ratio);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// Exponent of the conformal derivative of `gamma` on the cylinder of `u`:
/// the Busemann value. Requires `|u| >= |gamma|`.
pub fn rn_exponent(gamma: &ReducedWord, u: &ReducedWord) -> Result<i64> {
    busemann_on_cylinder(u, gamma)
}

/// Exact derivative `d(gamma_* nu)/d nu = (2r-1)^{rn_exponent}` on the
/// cylinder of `u`.
pub fn rn_derivative(ctx: &GroupContext, gamma: &ReducedWord, u: &ReducedWord) -> Result<BigRational> {
    let beta = rn_exponent(gamma, u)?;
    let pow = big_branch_pow(ctx, beta.unsigned_abs() as usize);
    Ok(if beta >= 0 {
        BigRational::from(BigInt::from(pow))
    } else {
        BigRational::new(BigInt::one(), pow.into())
    })
}

/// Visual distance between distinct equal-level cylinders: `e^{-eps m}` with
/// `m` the common-prefix length, constant over the two cylinders.
pub fn visual_distance(ctx: &GroupContext, u: &ReducedWord, v: &ReducedWord) -> Result<f64> {
    if u.len() != v.len() {
        return Err(ArborError::pre("visual distance wants equal-level cylinders"));
    }
    if u == v {
        return Err(ArborError::pre(
            "distance is not constant within a single cylinder",
        ));
    }
    Ok((-ctx.epsilon() * u.common_prefix_len(v) as f64).exp())
}

/// Number of ordered pairs `(g, h)` in `S_n x S_n` with common prefix length
/// exactly `m`, in closed form.
pub fn pair_count_sphere(ctx: &GroupContext, n: usize, m: usize) -> Result<BigUint> {
    if m > n {
        return Err(ArborError::pre(format!("pair stratum {m} exceeds radius {n}")));
    }
    let sphere = BigUint::from(ctx.sphere_size(n));
    Ok(if n == 0 {
        BigUint::one()
    } else if m == n {
        sphere
    } else if m == 0 {
        sphere * big_branch_pow(ctx, n)
    } else {
        sphere * BigUint::from(ctx.alphabet_size() - 2) * big_branch_pow(ctx, n - m - 1)
    })
}
