//! Named example tuples, addressed as `builtin:NAME` or `builtin:NAME(args)`.
//!
//! | name | generators |
//! |------|------------|
//! | `notmix2` | `[[0,2],[1,0]]`, `[[0,1],[2,0]]` |
//! | `nilpotent2` | `[[0,1],[0,0]]`, `[[0,0],[1,0]]` |
//! | `alpha(a1,a2)` | `[[0,a2],[a1,0]]`, `[[0,a1],[a2,0]]`, default `(3/5,4/5)` |
//! | `rankone4` | `[[1,1],[0,0]]`, `[[1,-1],[0,0]]`, `[[0,0],[1,1]]`, `[[0,0],[-1,1]]` |
//! | `eps(e)` | `[[0,2],[1,0]]`, `[[e,1],[2,0]]` |

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{parse_rational, rat, ratio_to_f64, QMatrix};
use crate::tuple::MatrixTuple;

/// Registry names accepted by [`builtin`], with their argument syntax.
pub const NAMES: &[&str] = &["notmix2", "nilpotent2", "alpha(a1,a2)", "rankone4", "eps(e)"];

pub fn notmix2() -> MatrixTuple {
    MatrixTuple::from_ints(2, &[&[0, 2, 1, 0], &[0, 1, 2, 0]]).unwrap().with_label("notmix2")
}

pub fn nilpotent2() -> MatrixTuple {
    MatrixTuple::from_ints(2, &[&[0, 1, 0, 0], &[0, 0, 1, 0]]).unwrap().with_label("nilpotent2")
}

pub fn rankone4() -> MatrixTuple {
    MatrixTuple::from_ints(2, &[&[1, 1, 0, 0], &[1, -1, 0, 0], &[0, 0, 1, 1], &[0, 0, -1, 1]])
        .unwrap()
        .with_label("rankone4")
}

fn assemble(mats: Vec<Vec<BigRational>>, exact: bool, label: String) -> MatrixTuple {
    let tuple = if exact {
        MatrixTuple::from_exact(mats.into_iter().map(|m| QMatrix::from_row_major(2, 2, m)).collect())
    } else {
        MatrixTuple::from_float(
            mats.into_iter()
                .map(|m| nalgebra::DMatrix::from_row_iterator(2, 2, m.iter().map(ratio_to_f64)))
                .collect(),
        )
    };
    tuple.unwrap().with_label(label)
}

/// `[[0,a2],[a1,0]]`, `[[0,a1],[a2,0]]`.
pub fn alpha(a1: BigRational, a2: BigRational) -> MatrixTuple {
    alpha_with(a1, a2, true)
}

fn alpha_with(a1: BigRational, a2: BigRational, exact: bool) -> MatrixTuple {
    let z = BigRational::zero();
    let label = format!("alpha({a1},{a2})");
    assemble(vec![vec![z.clone(), a2.clone(), a1.clone(), z.clone()], vec![z.clone(), a1, a2, z]], exact, label)
}

/// `[[0,2],[1,0]]`, `[[e,1],[2,0]]`; `eps(0)` is `notmix2`.
pub fn eps(e: BigRational) -> MatrixTuple {
    eps_with(e, true)
}

fn eps_with(e: BigRational, exact: bool) -> MatrixTuple {
    let i = |n: i64| rat(n, 1);
    let label = format!("eps({e})");
    assemble(vec![vec![i(0), i(2), i(1), i(0)], vec![e, i(1), i(2), i(0)]], exact, label)
}

fn parse_args(args: &str) -> Result<(Vec<BigRational>, bool)> {
    let mut any_decimal = false;
    let mut out = Vec::new();
    for part in args.split(',') {
        let (v, decimal) = parse_rational(part).map_err(Error::InvalidArgument)?;
        any_decimal |= decimal;
        out.push(v);
    }
    Ok((out, any_decimal))
}

/// Looks up `name`, with or without the `builtin:` prefix.
pub fn builtin(name: &str) -> Result<MatrixTuple> {
    let name = name.trim();
    let name = name.strip_prefix("builtin:").unwrap_or(name);
    let (head, args) = match name.split_once('(') {
        Some((h, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::InvalidArgument(format!("unbalanced parentheses in {name:?}")))?;
            (h.trim(), Some(inner))
        }
        None => (name, None),
    };
    let unknown = || Error::InvalidArgument(format!("unknown builtin {name:?}; known: {}", NAMES.join(", ")));
    match (head, args) {
        ("notmix2", None) => Ok(notmix2()),
        ("nilpotent2", None) => Ok(nilpotent2()),
        ("rankone4", None) => Ok(rankone4()),
        ("alpha", None) => Ok(alpha(rat(3, 5), rat(4, 5))),
        ("alpha", Some(a)) => match parse_args(a)? {
            (v, decimal) if v.len() == 2 => Ok(alpha_with(v[0].clone(), v[1].clone(), !decimal)),
            _ => Err(Error::InvalidArgument("alpha takes two parameters".into())),
        },
        ("eps", Some(a)) => match parse_args(a)? {
            (v, decimal) if v.len() == 1 => Ok(eps_with(v[0].clone(), !decimal)),
            _ => Err(Error::InvalidArgument("eps takes one parameter".into())),
        },
        ("eps", None) => Err(Error::InvalidArgument("eps needs a parameter, e.g. builtin:eps(1/4)".into())),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::ScalarPolicy;

    #[test]
    fn names_resolve() {
        assert_eq!(builtin("builtin:notmix2").unwrap(), notmix2());
        assert_eq!(builtin("eps(0)").unwrap(), notmix2());
        assert_eq!(builtin("alpha").unwrap(), builtin("alpha(3/5, 4/5)").unwrap());
        assert_eq!(builtin("eps(0.25)").unwrap().policy(), ScalarPolicy::DoublePrecision);
        assert_eq!(builtin("eps(1/4)").unwrap().policy(), ScalarPolicy::ExactRational);
        assert_eq!(rankone4().symbols(), 4);
        assert!(builtin("nope").is_err());
        assert!(builtin("eps").is_err());
        assert!(builtin("alpha(1)").is_err());
    }
}
