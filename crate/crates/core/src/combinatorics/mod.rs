//! Exact combinatorial kernels: binomials, Pochhammer symbols, Stirling
//! numbers, complete and partial Bell polynomials and the hyperbolic-sine
//! power expansion.

mod bell;
mod series;
mod sinh;
mod stirling;

pub use bell::{
    bell_complete, bell_complete_all, bell_convolution_check, bell_determinant, bell_numbers, bell_partial, BellArgs,
};
pub use series::PowerSeries;
pub use sinh::{
    sinh_expansion_check, sinh_power_expand, sinh_power_exponential, SinhBasis, SinhExpansion,
    SinhTerm,
};
pub use stirling::{
    cache_file_name, gf_coefficient_check, stirling, stirling_cache, CacheOutcome, CacheStatus, StirlingCache,
    StirlingKind, StirlingTable,
};

use rug::Integer;

use crate::numeric::Field;

/// C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

pub fn factorial(n: u64) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

/// Rising factorial a(a+1)...(a+n-1); (a)_0 = 1.
pub fn pochhammer<F: Field>(a: &F, n: u64) -> F {
    let mut acc = a.one_like();
    for i in 0..n {
        acc = acc * a.add_i64(i as i64);
    }
    acc
}

/// Outcome of an identity check that passed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub cases: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rational_normalize, Rational};

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 7), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(60, 30), Integer::from(118264581564861424u64));
    }

    #[test]
    fn pochhammer_examples() {
        let three = Rational::from(3);
        assert_eq!(pochhammer(&three, 0), 1);
        assert_eq!(pochhammer(&three, 2), 12);
        let half = rational_normalize(1, 2).unwrap();
        assert_eq!(pochhammer(&half, 3), rational_normalize(15, 8).unwrap());
    }

    #[test]
    fn pochhammer_ratio_identity() {
        // (x)_k / (x+1)_k = x / (x+k)
        for (p, q) in [(1, 2), (7, 3), (-1, 2), (5, 1), (-7, 3)] {
            let x = rational_normalize(p, q).unwrap();
            for k in 0..12u64 {
                let den = pochhammer(&x.add_i64(1), k);
                if Field::is_zero(&den) || Field::is_zero(&x.add_i64(k as i64)) {
                    continue;
                }
                let lhs = pochhammer(&x, k).try_div(&den).unwrap();
                let rhs = x.try_div(&x.add_i64(k as i64)).unwrap();
                assert_eq!(lhs, rhs, "x={x} k={k}");
            }
        }
    }
}
