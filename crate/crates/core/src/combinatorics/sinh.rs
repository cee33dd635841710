use std::collections::BTreeMap;
use std::fmt;

use rug::{Integer, Rational};
use serde::Serialize;

use super::{binomial, IdentityReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SinhBasis {
    Cosh,
    Sinh,
    Const,
}

impl fmt::Display for SinhBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SinhBasis::Cosh => "cosh",
            SinhBasis::Sinh => "sinh",
            SinhBasis::Const => "const",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinhTerm {
    pub coefficient: Rational,
    pub frequency: u32,
    pub basis: SinhBasis,
}

/// sinh^N w as a finite combination of cosh(jw), sinh(jw) and a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinhExpansion {
    pub n: u32,
    pub terms: Vec<SinhTerm>,
}

/// Expansion of sinh^N. Terms come in order of decreasing frequency, the
/// constant (even N only) last.
pub fn sinh_power_expand(n: u32) -> Result<SinhExpansion> {
    if n == 0 {
        return Err(Error::InvalidArgument("sinh power needs N >= 1".into()));
    }
    let mut terms = Vec::new();
    if n % 2 == 0 {
        let h = (n / 2) as u64;
        let den = Integer::from(1) << (2 * h as u32);
        for k in 0..h {
            let mut c = Rational::from((binomial(2 * h, k) * 2u32, den.clone()));
            if k % 2 == 1 {
                c = -c;
            }
            terms.push(SinhTerm {
                coefficient: c,
                frequency: 2 * (h - k) as u32,
                basis: SinhBasis::Cosh,
            });
        }
        let mut c = Rational::from((binomial(2 * h, h), den));
        if h % 2 == 1 {
            c = -c;
        }
        terms.push(SinhTerm {
            coefficient: c,
            frequency: 0,
            basis: SinhBasis::Const,
        });
    } else {
        let h = (n as u64 + 1) / 2;
        let den = Integer::from(1) << (2 * h as u32 - 2);
        for k in 0..h {
            let mut c = Rational::from((binomial(2 * h - 1, k), den.clone()));
            if k % 2 == 1 {
                c = -c;
            }
            terms.push(SinhTerm {
                coefficient: c,
                frequency: (2 * h - 2 * k - 1) as u32,
                basis: SinhBasis::Sinh,
            });
        }
    }
    Ok(SinhExpansion { n, terms })
}

impl SinhExpansion {
    /// Coefficients of e^{jw}, keyed by j, after rewriting every hyperbolic term in exponentials.
    pub fn to_exponential(&self) -> BTreeMap<i64, Rational> {
        let mut out: BTreeMap<i64, Rational> = BTreeMap::new();
        for t in &self.terms {
            let f = t.frequency as i64;
            let half = Rational::from(&t.coefficient / 2u32);
            match t.basis {
                SinhBasis::Const => *out.entry(0).or_default() += &t.coefficient,
                SinhBasis::Cosh => {
                    *out.entry(f).or_default() += &half;
                    *out.entry(-f).or_default() += &half;
                }
                SinhBasis::Sinh => {
                    *out.entry(f).or_default() += &half;
                    *out.entry(-f).or_default() -= &half;
                }
            }
        }
        out.retain(|_, c| c.cmp0().is_ne());
        out
    }
}

/// ((e^w - e^{-w})/2)^N by the binomial theorem.
pub fn sinh_power_exponential(n: u32) -> BTreeMap<i64, Rational> {
    let den = Integer::from(1) << n;
    (0..=n as u64)
        .map(|k| {
            let mut c = Rational::from((binomial(n as u64, k), den.clone()));
            if k % 2 == 1 {
                c = -c;
            }
            (n as i64 - 2 * k as i64, c)
        })
        .collect()
}

/// Checks the cosh/sinh expansion against the binomial expansion for every 1 <= N <= max_n.
pub fn sinh_expansion_check(max_n: u32) -> Result<IdentityReport> {
    for n in 1..=max_n {
        if sinh_power_expand(n)?.to_exponential() != sinh_power_exponential(n) {
            return Err(Error::identity("sinh power expansion", format!("N={n}")));
        }
    }
    Ok(IdentityReport {
        identity: "sinh power expansion",
        cases: max_n as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(p: i64, q: i64, frequency: u32, basis: SinhBasis) -> SinhTerm {
        SinhTerm {
            coefficient: Rational::from((p, q)),
            frequency,
            basis,
        }
    }

    #[test]
    fn low_powers() {
        assert_eq!(sinh_power_expand(1).unwrap().terms, vec![term(1, 1, 1, SinhBasis::Sinh)]);
        assert_eq!(
            sinh_power_expand(2).unwrap().terms,
            vec![term(1, 2, 2, SinhBasis::Cosh), term(-1, 2, 0, SinhBasis::Const)]
        );
        assert_eq!(
            sinh_power_expand(3).unwrap().terms,
            vec![term(1, 4, 3, SinhBasis::Sinh), term(-3, 4, 1, SinhBasis::Sinh)]
        );
        assert!(sinh_power_expand(0).is_err());
    }

    #[test]
    fn matches_binomial_expansion() {
        assert_eq!(sinh_expansion_check(12).unwrap().cases, 12);
        sinh_expansion_check(31).unwrap();
    }

    #[test]
    fn numeric_spot_check() {
        let w = 0.37f64;
        for n in 1..=9u32 {
            let e = sinh_power_expand(n).unwrap();
            let v: f64 = e
                .terms
                .iter()
                .map(|t| {
                    let c = t.coefficient.to_f64();
                    let a = t.frequency as f64 * w;
                    c * match t.basis {
                        SinhBasis::Cosh => a.cosh(),
                        SinhBasis::Sinh => a.sinh(),
                        SinhBasis::Const => 1.0,
                    }
                })
                .sum();
            assert!((v - w.sinh().powi(n as i32)).abs() < 1e-14, "N={n}");
        }
    }
}
