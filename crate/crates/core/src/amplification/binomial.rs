//! Binomial and Poisson-binomial tails over `f64` or exact rationals.

use num_traits::{One, Zero};
use std::ops::{Add, Mul, Sub};

/// Scalar field the tail sums are evaluated in.
pub trait TailScalar:
    Clone + Zero + One + PartialOrd + for<'a> Add<&'a Self, Output = Self> + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
{
}

impl<T> TailScalar for T where
    T: Clone
        + Zero
        + One
        + PartialOrd
        + for<'a> Add<&'a T, Output = T>
        + for<'a> Mul<&'a T, Output = T>
        + for<'a> Sub<&'a T, Output = T>
{
}

/// Distribution of the number of successes of independent trials with
/// success probabilities `xs`; entry `j` is `Pr[count = j]`.
pub fn success_count_distribution<T: TailScalar>(xs: &[T]) -> Vec<T> {
    let mut dp = vec![T::one()];
    for x in xs {
        let q = T::one() - x;
        let mut next = vec![T::zero(); dp.len() + 1];
        for (j, d) in dp.iter().enumerate() {
            next[j] = next[j].clone() + &(d.clone() * &q);
            next[j + 1] = next[j + 1].clone() + &(d.clone() * x);
        }
        dp = next;
    }
    dp
}

/// `Σ_{z: Σz ≥ threshold} Π u_{z_i}(X_i)` with `u₁(X) = X`, `u₀(X) = 1 − X`.
pub fn multilinear_tail<T: TailScalar>(xs: &[T], threshold: usize) -> T {
    success_count_distribution(xs)
        .into_iter()
        .skip(threshold)
        .fold(T::zero(), |acc, v| acc + &v)
}

/// `Σ_{j ≥ threshold} C(n,j) p^j (1−p)^{n−j}`.
pub fn binomial_tail<T: TailScalar>(p: &T, n: usize, threshold: usize) -> T {
    multilinear_tail(&vec![p.clone(); n], threshold)
}

/// `Σ_j w_j · tail(p_j)` over eigen-weights `(p_j, w_j)`.
pub fn analytic_acceptance<T: TailScalar>(weights: &[(T, T)], n: usize, threshold: usize) -> T {
    weights.iter().fold(T::zero(), |acc, (p, w)| {
        acc + &(binomial_tail(p, n, threshold) * w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn tail_examples() {
        assert_eq!(binomial_tail(&1.0, 7, 5), 1.0);
        assert_eq!(binomial_tail(&rat(0, 1), 7, 1), rat(0, 1));
        // N = 2, threshold 1: 1 - (1/2)^2
        assert_eq!(binomial_tail(&rat(1, 2), 2, 1), rat(3, 4));
        // t = 3, p = 0.9, at least 2 successes
        let want = 3.0 * 0.9f64.powi(2) * 0.1 + 0.9f64.powi(3);
        assert!((binomial_tail(&0.9, 3, 2) - want).abs() < 1e-15);
    }

    #[test]
    fn counts_match_closed_form() {
        // C(n,j) p^j q^(n-j) with binomials from Pascal's triangle
        let p = rat(3, 7);
        let n = 9;
        let dist = success_count_distribution(&vec![p.clone(); n]);
        let mut row = vec![BigInt::from(1)];
        for _ in 0..n {
            let mut next = vec![BigInt::from(1); row.len() + 1];
            for j in 1..row.len() {
                next[j] = &row[j - 1] + &row[j];
            }
            row = next;
        }
        let q = rat(4, 7);
        for j in 0..=n {
            let mut term = BigRational::from(row[j].clone());
            for _ in 0..j {
                term = term * &p;
            }
            for _ in 0..n - j {
                term = term * &q;
            }
            assert_eq!(dist[j], term);
        }
    }

    proptest! {
        #[test]
        fn tail_is_nondecreasing_in_each_coordinate(
            xs in proptest::collection::vec(0.0f64..1.0, 1..6),
            idx in 0usize..6,
            bump in 0.0f64..1.0,
            thr in 0usize..7,
        ) {
            let i = idx % xs.len();
            let mut ys = xs.clone();
            ys[i] = xs[i] + (1.0 - xs[i]) * bump;
            prop_assert!(multilinear_tail(&ys, thr) >= multilinear_tail(&xs, thr) - 1e-15);
        }

        #[test]
        fn distribution_sums_to_one(xs in proptest::collection::vec(0.0f64..1.0, 0..10)) {
            let s: f64 = success_count_distribution(&xs).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
