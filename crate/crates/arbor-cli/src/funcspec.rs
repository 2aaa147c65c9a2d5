//! Tiny grammar for test functions given on the command line.
//!
//! Forms:
//!   one                  constant 1 at level 0
//!   const:RE[,IM]        constant complex value
//!   ind:WORD             indicator of the cylinder at WORD
//!   oneplus:WORD,RE[,IM] 1 + c * indicator(WORD)
//!   noise:LEVEL,SEED     seeded pseudorandom values in [-1/2,1/2]^2

use arbor_core::cylfn::CylinderFunction;
use arbor_core::{GroupContext, ReducedWord, TreeTestFunction};
use num_complex::Complex64;

use crate::config::ConfigError;

fn bad(flag: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: flag.into(), msg: msg.into() }
}

fn parse_complex(flag: &str, s: &str) -> Result<Complex64, ConfigError> {
    let (re, im) = match s.split_once(',') {
        Some((re, im)) => (re, Some(im)),
        None => (s, None),
    };
    let re: f64 = re.trim().parse().map_err(|_| bad(flag, format!("bad real part '{re}'")))?;
    let im: f64 = match im {
        Some(im) => im.trim().parse().map_err(|_| bad(flag, format!("bad imaginary part '{im}'")))?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

/// The generator behind `noise:` values; small-state shift mixer, so the
/// same (level, seed) always names the same function.
fn noise_values(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..dim).map(|_| Complex64::new(next(), next())).collect()
}

/// Parses one function spec into a boundary cylinder function. `flag` names
/// the command-line option for error messages.
pub fn parse_cylinder(
    ctx: &GroupContext,
    flag: &str,
    spec: &str,
) -> Result<CylinderFunction, ConfigError> {
    let core = |e: arbor_core::ArborError| bad(flag, e.to_string());
    if spec == "one" {
        return Ok(CylinderFunction::one());
    }
    let Some((head, rest)) = spec.split_once(':') else {
        return Err(bad(
            flag,
            format!("unrecognized function spec '{spec}' (forms: one, const:, ind:, oneplus:, noise:)"),
        ));
    };
    match head {
        "const" => Ok(CylinderFunction::constant(parse_complex(flag, rest)?)),
        "ind" => {
            let w = ReducedWord::parse(ctx, rest).map_err(core)?;
            if w.is_empty() {
                return Err(bad(flag, "ind: needs a nonempty word"));
            }
            CylinderFunction::indicator(ctx, &w).map_err(core)
        }
        "oneplus" => {
            let Some((word, c)) = rest.split_once(',') else {
                return Err(bad(flag, "oneplus: wants WORD,RE[,IM]"));
            };
            let w = ReducedWord::parse(ctx, word).map_err(core)?;
            if w.is_empty() {
                return Err(bad(flag, "oneplus: needs a nonempty word"));
            }
            let c = parse_complex(flag, c)?;
            let ind = CylinderFunction::indicator(ctx, &w).map_err(core)?;
            CylinderFunction::one().add(ctx, &ind.scale(c)).map_err(core)
        }
        "noise" => {
            let Some((level, seed)) = rest.split_once(',') else {
                return Err(bad(flag, "noise: wants LEVEL,SEED"));
            };
            let level: usize =
                level.trim().parse().map_err(|_| bad(flag, format!("bad level '{level}'")))?;
            let seed: u64 =
                seed.trim().parse().map_err(|_| bad(flag, format!("bad seed '{seed}'")))?;
            let dim = if level == 0 { 1 } else { ctx.sphere_size(level) as usize };
            CylinderFunction::from_values(ctx, level, noise_values(dim, seed)).map_err(core)
        }
        other => Err(bad(flag, format!("unrecognized function form '{other}:'"))),
    }
}

/// Same grammar, wrapped as a boundary-driven tree test function.
pub fn parse_tree(
    ctx: &GroupContext,
    flag: &str,
    spec: &str,
) -> Result<TreeTestFunction, ConfigError> {
    if spec == "one" {
        return Ok(TreeTestFunction::one());
    }
    Ok(TreeTestFunction::from_boundary(ctx, parse_cylinder(ctx, flag, spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> GroupContext {
        GroupContext::with_rank(2).unwrap()
    }

    #[test]
    fn grammar_round_trips() {
        let ctx = ctx();
        assert_eq!(parse_cylinder(&ctx, "f", "one").unwrap().level(), 0);
        let c = parse_cylinder(&ctx, "f", "const:2,-1").unwrap();
        assert_eq!(c.values()[0], Complex64::new(2.0, -1.0));
        assert_eq!(parse_cylinder(&ctx, "f", "ind:ab").unwrap().level(), 2);
        let op = parse_cylinder(&ctx, "f", "oneplus:a,0.5").unwrap();
        assert_eq!(op.level(), 1);
        assert_eq!(op.values()[0], Complex64::new(1.5, 0.0));
        assert_eq!(op.values()[1], Complex64::new(1.0, 0.0));
        let n = parse_cylinder(&ctx, "f", "noise:2,7").unwrap();
        assert_eq!(n.level(), 2);
        assert_eq!(n, parse_cylinder(&ctx, "f", "noise:2,7").unwrap());
    }

    #[test]
    fn bad_specs_name_the_flag() {
        let ctx = ctx();
        for spec in ["", "wave:3", "ind:", "oneplus:a", "noise:2", "const:x"] {
            match parse_cylinder(&ctx, "g", spec) {
                Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "g"),
                other => panic!("spec {spec:?} should fail naming the flag, got {other:?}"),
            }
        }
    }
}
