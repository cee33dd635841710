use std::fmt;
use std::thread;

use rug::{Float, Rational};
use serde::Serialize;

use super::exact::{beta_identity, direct_sum, lemma1_derivatives};
use super::{evaluate, EvalOptions, EvalResult, Method, SumParams};
use crate::combinatorics::{bell_complete, binomial, factorial, BellArgs, IdentityReport};
use crate::error::{Error, Result};
use crate::numeric::{relative_difference, Real, Scalar};
use crate::special::{
    g_deleted_bracket_sign_l, g_derivatives, g_derivatives_deleted, g_derivatives_integer, harmonic, IntegerSign,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Pass,
    Fail,
    Skipped,
    Error,
}

impl fmt::Display for EntryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryStatus::Pass => "pass",
            EntryStatus::Fail => "fail",
            EntryStatus::Skipped => "skipped",
            EntryStatus::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidationEntry {
    pub method: Method,
    pub result: Option<EvalResult>,
    pub status: EntryStatus,
    /// Relative discrepancy against the reference.
    pub discrepancy: Option<f64>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidationReport {
    pub params: SumParams,
    pub reference: EvalResult,
    pub tol: f64,
    pub entries: Vec<CrossValidationEntry>,
}

impl CrossValidationReport {
    /// Builds a report from already computed results.
    pub fn from_results(
        params: SumParams,
        reference: EvalResult,
        results: Vec<(Method, Result<EvalResult>)>,
        tol: f64,
    ) -> Self {
        let entries = results
            .into_iter()
            .map(|(method, r)| entry(&reference, method, r, tol))
            .collect();
        CrossValidationReport {
            params,
            reference,
            tol,
            entries,
        }
    }

    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(e.status, EntryStatus::Pass | EntryStatus::Skipped))
    }

    pub fn failures(&self) -> impl Iterator<Item = &CrossValidationEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, EntryStatus::Fail | EntryStatus::Error))
    }
}

fn entry(reference: &EvalResult, method: Method, r: Result<EvalResult>, tol: f64) -> CrossValidationEntry {
    match r {
        Ok(res) => {
            let (status, d) = judge(reference, &res, tol);
            CrossValidationEntry {
                method,
                result: Some(res),
                status,
                discrepancy: Some(d),
                message: None,
            }
        }
        Err(e) => CrossValidationEntry {
            method,
            result: None,
            status: match e {
                Error::InvalidArgument(_) => EntryStatus::Skipped,
                _ => EntryStatus::Error,
            },
            discrepancy: None,
            message: Some(e.to_string()),
        },
    }
}

/// Compares a candidate with the reference. Two exact values must be equal;
/// otherwise the relative discrepancy may not exceed max(combined bound / |ref|, tol).
pub fn judge(reference: &EvalResult, candidate: &EvalResult, tol: f64) -> (EntryStatus, f64) {
    let bits = [&reference.context, &candidate.context]
        .iter()
        .filter_map(|c| c.map(|c| c.bits()))
        .max()
        .unwrap_or(128)
        + 64;
    let d = relative_difference(&candidate.value, &reference.value, bits);
    if reference.exact && candidate.exact {
        let status = if candidate.value == reference.value {
            EntryStatus::Pass
        } else {
            EntryStatus::Fail
        };
        return (status, d);
    }
    let mut bound = Float::new(bits);
    for r in [reference, candidate] {
        if let Some(e) = &r.error_bound {
            bound += e;
        }
    }
    let scale = reference.value.abs(bits);
    let allowed = if scale.is_zero() {
        bound.to_f64().max(tol)
    } else {
        (bound / scale).to_f64().max(tol)
    };
    let status = if d <= allowed {
        EntryStatus::Pass
    } else {
        EntryStatus::Fail
    };
    (status, d)
}

/// The reference method: the Beta identity for m = 1, the direct sum otherwise.
pub fn reference_method(p: &SumParams) -> Method {
    if p.m == 1 {
        Method::BetaIdentity
    } else {
        Method::Direct
    }
}

/// Evaluates `methods` concurrently and compares each with the reference.
pub fn cross_validate(p: &SumParams, methods: &[Method], opts: &EvalOptions) -> Result<CrossValidationReport> {
    let reference_m = reference_method(p);
    let reference = evaluate(p, reference_m, opts)?;
    let results: Vec<(Method, Result<EvalResult>)> = thread::scope(|s| {
        let handles: Vec<_> = methods
            .iter()
            .filter(|&&m| m != reference_m)
            .map(|&m| (m, s.spawn(move || evaluate(p, m, opts))))
            .collect();
        handles
            .into_iter()
            .map(|(m, h)| (m, h.join().expect("evaluator panicked")))
            .collect()
    });
    Ok(CrossValidationReport::from_results(p.clone(), reference, results, opts.tol))
}

/// Loss of significance of the float direct sum at `bits`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CancellationProfile {
    pub n: u64,
    pub m: u32,
    pub bits: u32,
    /// log10 of max_k |C(N,k) (x+k)^-m| / |S|.
    pub predicted_digits_lost: f64,
    pub relative_error: f64,
    /// bits log10 2 - log10(1/relative_error), clamped at zero.
    pub digits_lost: f64,
}

pub fn cancellation_profile(x: &Rational, n: u64, m: u32, bits: u32) -> Result<CancellationProfile> {
    let exact = direct_sum(x, n, m)?;
    if exact == 0 {
        return Err(Error::InvalidArgument("the sum vanishes".into()));
    }
    let xr = Real(Float::with_val(bits, x));
    let approx = direct_sum(&xr, n, m)?;
    let wide = bits.max(64) * 2;
    let rel = relative_difference(&Scalar::Real(approx), &Scalar::Rational(exact.clone()), wide);
    let mut max_term = Rational::new();
    for k in 0..=n {
        let base = Rational::from(x + k);
        let t = Rational::from(binomial(n, k)) / base.pow_abs(m);
        if t > max_term {
            max_term = t;
        }
    }
    let ratio = Float::with_val(wide, max_term / exact.abs());
    let predicted = ratio.log10().to_f64();
    let available = f64::from(bits) * std::f64::consts::LOG10_2;
    let digits_lost = if rel == 0.0 {
        0.0
    } else {
        (available + rel.log10()).max(0.0)
    };
    Ok(CancellationProfile {
        n,
        m,
        bits,
        predicted_digits_lost: predicted,
        relative_error: rel,
        digits_lost,
    })
}

trait PowAbs {
    fn pow_abs(&self, m: u32) -> Rational;
}

impl PowAbs for Rational {
    fn pow_abs(&self, m: u32) -> Rational {
        let mut r = Rational::from(1);
        let a = Rational::from(self.abs_ref());
        for _ in 0..m {
            r *= &a;
        }
        r
    }
}

const FD_BITS: u32 = 192;
const FD_LEVELS: usize = 9;

fn central_difference(x: &Float, n: u64, j: usize, h: &Float) -> Result<Float> {
    let mut acc = Float::new(FD_BITS);
    for i in 0..=j {
        let offset = Float::with_val(FD_BITS, h * (j as f64 / 2.0 - i as f64));
        let point = Real(Float::with_val(FD_BITS, x + &offset));
        let f = beta_identity(&point, n)?.0 * binomial(j as u64, i as u64);
        if i % 2 == 0 {
            acc += f;
        } else {
            acc -= f;
        }
    }
    let hj = Float::with_val(FD_BITS, h.pow_ref_u(j));
    Ok(acc / hj)
}

trait PowU {
    fn pow_ref_u(&self, j: usize) -> Float;
}

impl PowU for Float {
    fn pow_ref_u(&self, j: usize) -> Float {
        let mut r = Float::with_val(self.prec(), 1);
        for _ in 0..j {
            r *= self;
        }
        r
    }
}

/// Checks the Bell-polynomial derivatives of N!/(x)_{N+1} against central
/// differences with Richardson extrapolation at 192 bits.
pub fn lemma1_finite_difference_check(x: &Rational, n: u64, jmax: usize, tol: f64) -> Result<IdentityReport> {
    let exact = lemma1_derivatives(x, n, jmax)?;
    let xf = Float::with_val(FD_BITS, x);
    // keep every stencil point away from the poles 0, -1, ..., -N
    let mut dist = f64::INFINITY;
    for k in 0..=n {
        dist = dist.min((x.to_f64() + k as f64).abs());
    }
    for (j, d_exact) in exact.iter().enumerate().skip(1) {
        let h0 = (0.125f64).min(dist / (j as f64 + 1.0));
        let mut table: Vec<Vec<Float>> = Vec::new();
        for level in 0..FD_LEVELS {
            let h = Float::with_val(FD_BITS, h0) >> level as u32;
            let mut row = vec![central_difference(&xf, n, j, &h)?];
            for l in 1..=level {
                let factor = Float::with_val(FD_BITS, 4u32).pow_ref_u(l) - 1u32;
                let prev = &table[level - 1][l - 1];
                let cur = &row[l - 1];
                let next = Float::with_val(FD_BITS, cur - prev) / factor + cur;
                row.push(next);
            }
            table.push(row);
        }
        let estimate = table[FD_LEVELS - 1][FD_LEVELS - 1].clone();
        let reference = Scalar::Rational(d_exact.clone());
        let rel = relative_difference(&Scalar::Real(Real(estimate)), &reference, FD_BITS);
        if !(rel <= tol) {
            return Err(Error::identity(
                "Bell derivatives vs finite differences",
                format!("x={x}, N={n}, j={j}: relative difference {rel:e}"),
            ));
        }
    }
    Ok(IdentityReport {
        identity: "Bell derivatives vs finite differences",
        cases: jmax,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialCaseReport {
    pub cases: usize,
    /// Points where the deleted-sum bracket with sign (-1)^l H_K disagrees
    /// with the direct deleted sum.
    pub printed_form_mismatches: usize,
}

fn bell_from_args(f: &Rational, g: &[Rational], m: u32) -> Rational {
    let j = m as usize - 1;
    let y = bell_complete(&BellArgs::rational(g[..j].to_vec()));
    let v = Rational::from(f * y) / Rational::from(factorial(j as u64));
    if j % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Harmonic-number argument vectors at integer x against the exact sums and
/// finite g-sums: x = 1, x = K >= 1, and the deleted sum at x = -K.
pub fn special_case_check(max_n: u64, max_m: u32, max_k: u64) -> Result<SpecialCaseReport> {
    let mut cases = 0;
    let mut printed_form_mismatches = 0;
    let lmax = (max_m as usize).max(6) - 1;
    for n in 1..=max_n {
        // x = 1: [-H_{N+1}, H_{N+1}^(2), -2! H_{N+1}^(3), ...]
        let args: Vec<Rational> = (0..lmax)
            .map(|l| {
                let v = harmonic(n + 1, l as u32 + 1).map(|h| h.value * Rational::from(factorial(l as u64)));
                v.map(|v| if l % 2 == 0 { -v } else { v })
            })
            .collect::<Result<_>>()?;
        let f = Rational::from((1, n + 1));
        for m in 1..=max_m {
            let lhs = bell_from_args(&f, &args, m);
            if lhs != direct_sum(&Rational::from(1), n, m)? {
                return Err(Error::identity("x = 1 harmonic arguments", format!("N={n}, m={m}")));
            }
            cases += 1;
        }
        for k in 1..=max_k {
            let closed = g_derivatives_integer(k as i64, IntegerSign::Plus, n, lmax)?;
            let x = Rational::from(k);
            if closed.values != g_derivatives(&x, n, lmax)?.values {
                return Err(Error::identity("g at positive integers", format!("K={k}, N={n}")));
            }
            let f = beta_identity(&x, n)?;
            for m in 1..=max_m {
                if bell_from_args(&f, &closed.values, m) != direct_sum(&x, n, m)? {
                    return Err(Error::identity("Bell form at positive integers", format!("K={k}, N={n}, m={m}")));
                }
                cases += 1;
            }
            if k <= n {
                let closed = g_derivatives_integer(k as i64, IntegerSign::Minus, n, lmax)?;
                let deleted = g_derivatives_deleted(k, n, lmax)?;
                if closed.values != deleted.values {
                    return Err(Error::identity("deleted sum at x = -K", format!("K={k}, N={n}")));
                }
                for l in 0..=lmax {
                    if g_deleted_bracket_sign_l(k, n, l)? != deleted.values[l] {
                        printed_form_mismatches += 1;
                    }
                }
                cases += 1;
            }
        }
    }
    Ok(SpecialCaseReport {
        cases,
        printed_form_mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::PrecisionContext;

    #[test]
    fn cross_validation_passes_on_small_grid() {
        let opts = EvalOptions::new(PrecisionContext::new(128).unwrap(), 1e-25);
        for (a, b, n, m) in [(1, 1, 2, 2), (3, 2, 4, 3), (1, 2, 5, 1)] {
            let p = SumParams::rational(a, b, n, m).unwrap();
            let r = cross_validate(&p, &Method::ALL, &opts).unwrap();
            for e in &r.entries {
                assert!(
                    matches!(e.status, EntryStatus::Pass | EntryStatus::Skipped),
                    "{:?} {:?} {:?}",
                    e.method,
                    e.status,
                    e.message
                );
            }
            assert!(r.passed());
        }
    }

    #[test]
    fn perturbed_result_fails() {
        let p = SumParams::rational(1, 1, 2, 2).unwrap();
        let opts = EvalOptions::default();
        let reference = evaluate(&p, Method::Direct, &opts).unwrap();
        let mut bad = evaluate(&p, Method::SeriesStirling2, &opts).unwrap();
        let nudge = Scalar::Real(Real(Float::with_val(128, 1e-20)));
        bad.value = bad.value.add(&nudge).unwrap();
        let report = CrossValidationReport::from_results(p, reference, vec![(Method::SeriesStirling2, Ok(bad))], 1e-25);
        assert!(!report.passed());
        assert_eq!(report.failures().count(), 1);
    }

    #[test]
    fn exact_mismatch_fails() {
        let p = SumParams::rational(1, 1, 2, 2).unwrap();
        let opts = EvalOptions::default();
        let reference = evaluate(&p, Method::Direct, &opts).unwrap();
        let mut other = reference.clone();
        other.value = Scalar::rational(11, 19).unwrap();
        assert_eq!(judge(&reference, &other, 1.0).0, EntryStatus::Fail);
    }

    #[test]
    fn cancellation_grows_with_n() {
        let x = Rational::from(1);
        let a = cancellation_profile(&x, 10, 1, 53).unwrap();
        let b = cancellation_profile(&x, 60, 1, 53).unwrap();
        assert!(b.digits_lost > a.digits_lost);
        assert!(b.predicted_digits_lost > 15.0);
    }

    #[test]
    fn special_cases() {
        let r = special_case_check(20, 6, 10).unwrap();
        assert!(r.cases > 1000);
        assert!(r.printed_form_mismatches > 0);
    }

    #[test]
    fn lemma1_check_passes() {
        for x in [Rational::from(1), Rational::from((1, 2)), Rational::from((7, 3))] {
            lemma1_finite_difference_check(&x, 6, 6, 1e-20).unwrap();
        }
    }
}
