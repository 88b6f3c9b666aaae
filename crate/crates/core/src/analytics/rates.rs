use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, Result};

/// Block counts up to which rates are evaluated in exact rationals.
pub const EXACT_RATE_LIMIT: usize = 64;

/// The measure `Lambda` of a Lambda-coalescent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMeasure {
    /// Uniform on [0, 1]: Bolthausen-Sznitman.
    Uniform,
    /// Unit mass at zero: Kingman.
    PointMassAtZero,
}

fn check(b: usize, k: usize) -> Result<()> {
    if k < 2 || k > b {
        return Err(invalid("k", format!("need 2 <= k <= b, got b = {b}, k = {k}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Rate at which a given k-tuple out of `b` blocks merges, as an exact rational.
///
/// For the uniform measure this is `B(k-1, b-k+1) = 1 / ((b-1) C(b-2, k-2))`.
pub fn lambda_bk_exact(b: usize, k: usize, measure: LambdaMeasure) -> Result<BigRational> {
    check(b, k)?;
    Ok(match measure {
        LambdaMeasure::PointMassAtZero => {
            if k == 2 {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }
        LambdaMeasure::Uniform => BigRational::new(
            BigInt::one(),
            BigInt::from(b - 1) * binomial(b - 2, k - 2),
        ),
    })
}

pub fn lambda_bk(b: usize, k: usize, measure: LambdaMeasure) -> Result<f64> {
    check(b, k)?;
    if b <= EXACT_RATE_LIMIT || measure == LambdaMeasure::PointMassAtZero {
        return Ok(lambda_bk_exact(b, k, measure)?.to_f64().unwrap_or(0.0));
    }
    Ok(ln_beta((k - 1) as f64, (b - k + 1) as f64).exp())
}

/// Aggregate rates `C(b, k) lambda_{b,k}` for `k = 2..=b` (index 0 is k = 2).
pub fn merger_rates(b: usize, measure: LambdaMeasure) -> Vec<f64> {
    if b < 2 {
        return Vec::new();
    }
    (2..=b)
        .map(|k| {
            if b <= EXACT_RATE_LIMIT || measure == LambdaMeasure::PointMassAtZero {
                let lam = lambda_bk_exact(b, k, measure).expect("k in range");
                (lam * BigRational::from_integer(binomial(b, k)))
                    .to_f64()
                    .unwrap_or(0.0)
            } else {
                (ln_binomial(b as u64, k as u64) + ln_beta((k - 1) as f64, (b - k + 1) as f64))
                    .exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn uniform_small_cases() {
        assert_eq!(lambda_bk_exact(2, 2, LambdaMeasure::Uniform).unwrap(), r(1, 1));
        assert_eq!(lambda_bk_exact(5, 3, LambdaMeasure::Uniform).unwrap(), r(1, 12));
        let expected = [r(1, 4), r(1, 12), r(1, 12), r(1, 4)];
        for (k, e) in (2..=5).zip(expected) {
            assert_eq!(lambda_bk_exact(5, k, LambdaMeasure::Uniform).unwrap(), e);
        }
    }

    #[test]
    fn uniform_matches_direct_integration() {
        for (b, k) in [(5usize, 3usize), (7, 2), (9, 6), (12, 12)] {
            let direct = quad::integrate(
                |x: f64| x.powi(k as i32 - 2) * (1.0 - x).powi((b - k) as i32),
                0.0,
                1.0,
                1e-13,
            );
            let v = lambda_bk(b, k, LambdaMeasure::Uniform).unwrap();
            assert!((v - direct).abs() < 1e-12, "b={b} k={k}");
        }
    }

    #[test]
    fn kingman_rates() {
        assert_eq!(lambda_bk(7, 2, LambdaMeasure::PointMassAtZero).unwrap(), 1.0);
        assert_eq!(lambda_bk(7, 3, LambdaMeasure::PointMassAtZero).unwrap(), 0.0);
        assert_eq!(merger_rates(4, LambdaMeasure::PointMassAtZero), vec![6.0, 0.0, 0.0]);
    }

    #[test]
    fn pascal_identity_exact() {
        for b in 2..EXACT_RATE_LIMIT {
            for k in 2..=b {
                let lhs = lambda_bk_exact(b, k, LambdaMeasure::Uniform).unwrap();
                let rhs = lambda_bk_exact(b + 1, k + 1, LambdaMeasure::Uniform).unwrap()
                    + lambda_bk_exact(b + 1, k, LambdaMeasure::Uniform).unwrap();
                assert_eq!(lhs, rhs, "b={b} k={k}");
            }
        }
    }

    #[test]
    fn bsz_total_rate_is_b_minus_one() {
        for b in [2usize, 5, 20, 64, 65, 200] {
            let total: f64 = merger_rates(b, LambdaMeasure::Uniform).iter().sum();
            assert!((total - (b - 1) as f64).abs() < 1e-9 * b as f64, "b={b}");
        }
    }

    #[test]
    fn float_branch_agrees_at_boundary() {
        let exact = lambda_bk(64, 10, LambdaMeasure::Uniform).unwrap();
        let float = ln_beta(9.0, 55.0).exp();
        assert!((exact - float).abs() / exact < 1e-10);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(lambda_bk(5, 1, LambdaMeasure::Uniform).is_err());
        assert!(lambda_bk(5, 6, LambdaMeasure::Uniform).is_err());
    }
}
