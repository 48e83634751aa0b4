use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Number type the estimator computes in: `f64` for speed, [`BigRational`]
/// when results must be exact.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const EXACT: bool;

    fn from_u128(n: u128) -> Self;
    fn from_i128(n: i128) -> Self;
    fn to_f64(&self) -> f64;

    /// num / den
    fn ratio(num: u128, den: u128) -> Self {
        Self::from_u128(num) / Self::from_u128(den)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_u128(n: u128) -> Self {
        n as f64
    }

    fn from_i128(n: i128) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ratio(num: u128, den: u128) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_u128(n: u128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_i128(n: i128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn ratio(num: u128, den: u128) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// (n)_k = n·(n−1)·…·(n−k+1)
pub fn falling_factorial<S: Scalar>(n: u128, k: u128) -> S {
    let mut acc = S::one();
    for i in 0..k {
        acc = acc * S::from_u128(n.saturating_sub(i));
    }
    acc
}

/// (w)_k / (n)_k, computed factor by factor so that floats stay in range.
pub fn falling_ratio<S: Scalar>(w: u128, n: u128, k: u128) -> S {
    if S::EXACT {
        return falling_factorial::<S>(w, k) / falling_factorial::<S>(n, k);
    }
    let mut acc = S::one();
    for i in 0..k {
        acc = acc * S::ratio(w - i, n - i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::binomial;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};

    #[test]
    fn falling_factorial_identity() {
        // C(n−k, m−k) / C(n, m) = (m)_k / (n)_k
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n: u128 = rng.gen_range(1..=30);
            let m: u128 = rng.gen_range(1..=n);
            let k: u128 = rng.gen_range(1..=m);
            let lhs = BigRational::new(
                BigInt::from(binomial(n - k, m - k)),
                BigInt::from(binomial(n, m)),
            );
            assert_eq!(lhs, falling_ratio::<BigRational>(m, n, k), "n={n} m={m} k={k}");
        }
    }

    #[test]
    fn small_values() {
        assert_eq!(falling_factorial::<f64>(4, 2), 12.0);
        assert_eq!(falling_factorial::<f64>(4, 0), 1.0);
        assert_eq!(
            falling_ratio::<BigRational>(2, 4, 2),
            BigRational::new(1.into(), 6.into())
        );
        assert!((falling_ratio::<f64>(2, 4, 2) - 1.0 / 6.0).abs() < 1e-15);
    }
}
