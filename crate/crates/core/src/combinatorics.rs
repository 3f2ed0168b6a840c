//! Exact arbitrary-precision evaluation of the region-count formulas,
//! recursions, bounds and ratio quantities.
//!
//! All counts are exact `BigUint`s; nothing here ever rounds. Ratios are
//! kept as exact numerator/denominator pairs with a `log10` field for
//! display, since the interesting values overflow `f64` quickly.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use thiserror::Error;

/// Exact non-negative region count.
pub type CountValue = BigUint;

#[derive(Debug, Error)]
pub enum CombinatoricsError {
    #[error("argmax estimate d/ln(k) is undefined for k = {0}")]
    UndefinedEstimate(u64),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Exact binomial coefficient C(n, j); zero for j > n.
pub fn binomial(n: u64, j: u64) -> CountValue {
    if j > n {
        return BigUint::zero();
    }
    let j = j.min(n - j);
    let mut res = BigUint::one();
    for i in 0..j {
        res = res * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    res
}

/// Region count of n hyperplanes in general position in dimension d:
/// `sum_{j=0}^{d} C(n, j)`. Any arrangement of n hyperplanes has at most
/// this many regions.
pub fn zaslavsky_bound(n: u64, d: u64) -> CountValue {
    assert!(d >= 1, "dimension must be at least 1");
    (0..=d).map(|j| binomial(n, j)).sum()
}

/// Closed-form region count for n pencils of k parallel hyperplanes each,
/// in general position modulo parallelism, in dimension d:
///
/// `(k+1) * sum_{j=0}^{d-1} C(n-1, j) k^j  +  k^d * sum_{j=d}^{n-1} C(j-1, d-1)`
///
/// Empty sums contribute zero.
pub fn parallel_regions_count(n: u64, k: u64, d: u64) -> CountValue {
    assert!(n >= 1 && k >= 1 && d >= 1, "n, k, d must all be at least 1");
    let kb = BigUint::from(k);
    let mut first = BigUint::zero();
    for j in 0..d.min(n) {
        first += binomial(n - 1, j) * kb.pow(j as u32);
    }
    first *= BigUint::from(k + 1);
    let mut second = BigUint::zero();
    for j in d..n {
        second += binomial(j - 1, d - 1);
    }
    second *= kb.pow(d as u32);
    first + second
}

/// Same count as [`parallel_regions_count`] but computed by the memoized
/// recursion `r(n, d) = r(n-1, d) + k * r(n-1, d-1)` from the initial
/// conditions `r(1, d) = k + 1` and `r(n, 1) = k n + 1`.
pub fn parallel_regions_recursive(n: u64, k: u64, d: u64) -> CountValue {
    assert!(n >= 1 && k >= 1 && d >= 1, "n, k, d must all be at least 1");
    // The memo table is per-call, so concurrent callers never share state.
    let mut memo: HashMap<(u64, u64), CountValue> = HashMap::new();
    recurse(n, k, d, &mut memo)
}

fn recurse(n: u64, k: u64, d: u64, memo: &mut HashMap<(u64, u64), CountValue>) -> CountValue {
    if let Some(v) = memo.get(&(n, d)) {
        return v.clone();
    }
    let v = if n == 1 {
        BigUint::from(k + 1)
    } else if d == 1 {
        BigUint::from(k * n + 1)
    } else {
        recurse(n - 1, k, d, memo) + BigUint::from(k) * recurse(n - 1, k, d - 1, memo)
    };
    memo.insert((n, d), v.clone());
    v
}

/// Region count for pencils of possibly different sizes `ks[l]`, by the
/// same deletion/restriction recursion over one pencil at a time. Equals
/// [`parallel_regions_count`] when all sizes agree.
pub fn parallel_regions_count_mixed(ks: &[u64], d: u64) -> CountValue {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(ks.iter().all(|&k| k >= 1), "pencil sizes must be at least 1");
    fn go(ks: &[u64], d: u64) -> CountValue {
        match ks.split_last() {
            None => BigUint::one(),
            Some((&k, rest)) => {
                if d == 1 {
                    // On a line every hyperplane is a point.
                    BigUint::from(rest.iter().sum::<u64>() + k + 1)
                } else {
                    go(rest, d) + BigUint::from(k) * go(rest, d - 1)
                }
            }
        }
    }
    go(ks, d)
}

/// Upper bound on the number of outer regions (regions lying outside
/// every pencil's band, on one side or the other of each pencil):
/// `sum_{j=0}^{d} C(n, j)`, the general-position count for n single
/// hyperplanes.
pub fn outer_region_bound(n: u64, d: u64) -> CountValue {
    assert!(n >= 1 && d >= 1, "n and d must be at least 1");
    zaslavsky_bound(n, d)
}

/// Checks the exact binomial identity that ties the general-position count
/// to the k = 1 case of the closed form:
///
/// `sum_{j=0}^{d} C(n,j) = 2 sum_{j=0}^{d-1} C(n-1,j) + sum_{j=d}^{n-1} C(j-1,d-1)`
pub fn region_count_identity_holds(n: u64, d: u64) -> bool {
    assert!(1 <= d && d <= n, "requires 1 <= d <= n");
    let lhs = zaslavsky_bound(n, d);
    let mut rhs: BigUint = (0..d).map(|j| binomial(n - 1, j)).sum();
    rhs *= BigUint::from(2u32);
    for j in d..n {
        rhs += binomial(j - 1, d - 1);
    }
    lhs == rhs
}

/// Exact ratio of two counts plus its base-10 logarithm for display.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRatio {
    pub numerator: CountValue,
    pub denominator: CountValue,
    pub log10: f64,
}

impl ExactRatio {
    fn new(numerator: CountValue, denominator: CountValue) -> Self {
        assert!(!denominator.is_zero(), "ratio denominator must be positive");
        let log10 = big_log10(&numerator) - big_log10(&denominator);
        Self { numerator, denominator, log10 }
    }
}

/// log10 of a positive big integer, from the bit length and the leading
/// bits; error well below 1e-12 relative to the value's magnitude.
pub fn big_log10(v: &CountValue) -> f64 {
    assert!(!v.is_zero(), "log10 of zero");
    let bits = v.bits();
    if bits <= 53 {
        return v.to_f64().unwrap().log10();
    }
    let shift = bits - 53;
    let top = (v >> shift).to_f64().unwrap();
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// Ratio of the worst-case general-position bound on n*k hyperplanes to
/// the parallel-pencil count: how much the pencil structure saves.
pub fn gamma_ratio(n: u64, k: u64, d: u64) -> ExactRatio {
    ExactRatio::new(zaslavsky_bound(n * k, d), parallel_regions_count(n, k, d))
}

/// Ratio of the outer-region bound to the two-offset pencil count: the
/// extra saving of the stable-fixed-point bound over the region bound.
pub fn eta_ratio(n: u64, d: u64) -> ExactRatio {
    ExactRatio::new(outer_region_bound(n, d), parallel_regions_count(n, 2, d))
}

/// Estimate `d / ln(k)` for the n at which `gamma_ratio` peaks.
pub fn gamma_argmax_estimate(d: u64, k: u64) -> Result<f64, CombinatoricsError> {
    if k < 2 {
        return Err(CombinatoricsError::UndefinedEstimate(k));
    }
    Ok(d as f64 / (k as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        // Oracle: Pascal's recurrence, built independently of the
        // multiplicative formula.
        let n_max = 300usize;
        let mut row: Vec<BigUint> = vec![BigUint::one()];
        for n in 1..=n_max {
            let mut next = vec![BigUint::one(); n + 1];
            for j in 1..n {
                next[j] = &row[j - 1] + &row[j];
            }
            row = next;
        }
        let c = binomial(300, 30);
        assert_eq!(c, row[30]);
        assert!(c.to_string().len() >= 40, "expected a 40-plus-digit value");
    }

    #[test]
    fn zaslavsky_examples() {
        assert_eq!(zaslavsky_bound(3, 2), BigUint::from(7u32));
        assert_eq!(zaslavsky_bound(4, 2), BigUint::from(11u32));
        for n in 0..6u64 {
            for d in n..(n + 3) {
                let d = d.max(1);
                assert_eq!(zaslavsky_bound(n, d), BigUint::from(2u32).pow(n as u32));
            }
        }
    }

    #[test]
    fn parallel_regions_examples() {
        assert_eq!(parallel_regions_count(3, 2, 1), BigUint::from(7u32));
        assert_eq!(parallel_regions_count(1, 2, 3), BigUint::from(3u32));
        assert_eq!(parallel_regions_count(2, 2, 2), BigUint::from(9u32));
        assert_eq!(parallel_regions_count(3, 2, 2), BigUint::from(19u32));
    }

    #[test]
    fn recursive_examples() {
        assert_eq!(parallel_regions_recursive(3, 2, 2), BigUint::from(19u32));
        assert_eq!(parallel_regions_recursive(1, 5, 4), BigUint::from(6u32));
        assert_eq!(
            parallel_regions_recursive(20, 10, 20),
            parallel_regions_count(20, 10, 20)
        );
    }

    #[test]
    fn mixed_pencils_agree_with_uniform() {
        for n in 1..=5u64 {
            for k in 1..=3u64 {
                for d in 1..=4u64 {
                    let ks = vec![k; n as usize];
                    assert_eq!(
                        parallel_regions_count_mixed(&ks, d),
                        parallel_regions_count(n, k, d)
                    );
                }
            }
        }
        // Two parallel lines plus one transversal line: 6 regions.
        assert_eq!(parallel_regions_count_mixed(&[2, 1], 2), BigUint::from(6u32));
    }

    #[test]
    fn outer_bound_examples() {
        assert_eq!(outer_region_bound(2, 1), BigUint::from(3u32));
        for d in 1..6 {
            assert_eq!(outer_region_bound(1, d), BigUint::from(2u32));
        }
        assert_eq!(outer_region_bound(5, 3), BigUint::from(26u32));
        // The outer-region bound is exactly the k = 1 pencil count.
        for n in 1..=10u64 {
            for d in 1..=10u64 {
                assert_eq!(outer_region_bound(n, d), parallel_regions_count(n, 1, d));
            }
        }
    }

    #[test]
    fn identity_examples() {
        assert!(region_count_identity_holds(3, 2));
        assert!(region_count_identity_holds(5, 1));
        for n in 1..=12 {
            assert!(region_count_identity_holds(n, n));
        }
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_ratio(1, 2, 1);
        assert_eq!(g.numerator, g.denominator);
        assert!(g.log10.abs() < 1e-12);

        let g = gamma_ratio(2, 2, 2);
        assert_eq!(g.numerator, BigUint::from(11u32));
        assert_eq!(g.denominator, BigUint::from(9u32));

        for n in 1..=8 {
            for d in 1..=8 {
                let g = gamma_ratio(n, 1, d);
                assert_eq!(g.numerator, g.denominator, "gamma must be 1 at k = 1");
            }
        }
    }

    #[test]
    fn eta_examples() {
        let e = eta_ratio(1, 1);
        assert_eq!((e.numerator, e.denominator), (BigUint::from(2u32), BigUint::from(3u32)));
        let e = eta_ratio(2, 1);
        assert_eq!((e.numerator, e.denominator), (BigUint::from(3u32), BigUint::from(5u32)));
        for d in 1..=10 {
            let e = eta_ratio(1, d);
            assert_eq!((e.numerator, e.denominator), (BigUint::from(2u32), BigUint::from(3u32)));
        }
    }

    #[test]
    fn argmax_estimate() {
        assert!((gamma_argmax_estimate(15, 2).unwrap() - 21.6404).abs() < 1e-3);
        assert!((gamma_argmax_estimate(25, 10).unwrap() - 10.8574).abs() < 1e-3);
        assert!(gamma_argmax_estimate(10, 1).is_err());
    }

    #[test]
    fn log10_matches_f64_for_small_values() {
        for v in [1u64, 2, 10, 999, 1_000_000, 123_456_789_012_345] {
            let b = BigUint::from(v);
            assert!((big_log10(&b) - (v as f64).log10()).abs() < 1e-12);
        }
        // A value needing the bit-length path: 10^40.
        let b = BigUint::from(10u32).pow(40);
        assert!((big_log10(&b) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn recursion_is_safe_to_call_concurrently() {
        let handles: Vec<_> = (0..4)
            .map(|_| std::thread::spawn(|| parallel_regions_recursive(15, 3, 7)))
            .collect();
        let want = parallel_regions_count(15, 3, 7);
        for h in handles {
            assert_eq!(h.join().unwrap(), want);
        }
    }

    #[test]
    fn monotone_in_each_argument() {
        for n in 1..=8u64 {
            for k in 1..=4u64 {
                for d in 1..=5u64 {
                    let base = parallel_regions_count(n, k, d);
                    assert!(parallel_regions_count(n + 1, k, d) >= base);
                    assert!(parallel_regions_count(n, k + 1, d) >= base);
                    assert!(parallel_regions_count(n, k, d + 1) >= base);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_equals_recursion(n in 1u64..=20, k in 1u64..=10, d in 1u64..=20) {
            prop_assert_eq!(parallel_regions_count(n, k, d), parallel_regions_recursive(n, k, d));
        }

        #[test]
        fn gamma_is_at_least_one(n in 1u64..=12, k in 1u64..=6, d in 1u64..=10) {
            let g = gamma_ratio(n, k, d);
            prop_assert!(g.numerator >= g.denominator);
        }

        #[test]
        fn identity_holds_on_grid(n in 1u64..=30, d in 1u64..=30) {
            let (n, d) = if d <= n { (n, d) } else { (d, n) };
            prop_assert!(region_count_identity_holds(n, d));
        }
    }
}
