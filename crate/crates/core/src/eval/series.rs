//! Infinite-series evaluators: the Stirling-second-kind geometric series and
//! the two slowly convergent forms (Stirling first kind, harmonic Bell form),
//! the latter summed with tail extrapolation.

use rug::{Float, Integer, Rational};

use super::exact::beta_identity;
use super::extrapolate::{accelerate, TailShape};
use super::{EvalOptions, EvalResult, Method, SumParams};
use crate::combinatorics::{bell_complete, factorial, stirling, BellArgs, StirlingKind};
use crate::error::{Error, Result};
use crate::numeric::{Complex, Field, FloatField, Real, Scalar};

type Run<F> = (F, Float, u64);

/// Runs a float evaluator at two working precisions; the error estimate is
/// the evaluator's own bound plus the disagreement between the two runs.
fn two_precision(
    p: &SumParams,
    method: Method,
    opts: &EvalOptions,
    lo_bits: u32,
    hi_bits: u32,
    run_r: impl Fn(&Real) -> Result<Run<Real>>,
    run_c: impl Fn(&Complex) -> Result<Run<Complex>>,
) -> Result<EvalResult> {
    match &p.x {
        Scalar::Complex(_) => {
            let (lo, _, _) = run_c(&p.x.to_complex(lo_bits))?;
            let (hi, err, terms) = run_c(&p.x.to_complex(hi_bits))?;
            let diff = (hi.clone() - lo).modulus();
            Ok(EvalResult::inexact(Scalar::Complex(hi), err + diff, method, terms, opts.ctx))
        }
        _ => {
            let (lo, _, _) = run_r(&p.x.to_real(lo_bits).expect("real"))?;
            let (hi, err, terms) = run_r(&p.x.to_real(hi_bits).expect("real"))?;
            let diff = Float::with_val(hi_bits, &hi.0 - &lo.0).abs();
            Ok(EvalResult::inexact(Scalar::Real(hi), err + diff, method, terms, opts.ctx))
        }
    }
}

fn effective_tol(opts: &EvalOptions) -> f64 {
    opts.tol.max(2f64.powi(-(opts.ctx.bits().min(1000) as i32)))
}

// ---------------------------------------------------------------------------
// Stirling numbers of the second kind
// ---------------------------------------------------------------------------

const RATIO_LIMIT: f64 = 1.0 - 1e-3;

fn stirling2_run<F: FloatField>(x: &F, n: u64, m: u32, tol: f64, max_terms: u64) -> Result<Run<F>> {
    let y = x.add_i64(n as i64);
    let ratio = Float::with_val(64, n) / y.modulus();
    if ratio > RATIO_LIMIT || y.modulus() <= n {
        return Err(Error::NoConvergence(format!(
            "Stirling-2 series ratio N/|x+N| = {} is too close to 1",
            ratio.to_f64()
        )));
    }
    let inv = y.try_recip()?;
    let nu = n as usize;
    // v[j] = S(k, j) / y^k
    let mut v = vec![x.zero_like(); nu + 1];
    v[0] = x.one_like();
    let advance = |v: &mut Vec<F>| {
        for j in (1..v.len()).rev() {
            v[j] = (v[j].mul_i64(j as i64) + v[j - 1].clone()) * inv.clone();
        }
        v[0] = x.zero_like();
    };
    for _ in 0..n {
        advance(&mut v);
    }
    let pref = x.from_rational_like(&Rational::from((factorial(n), factorial(u64::from(m) - 1))))
        * inv.powi(i64::from(m))?;
    let rising = |k: u64| -> Integer {
        let mut r = Integer::from(1);
        for i in 1..u64::from(m) {
            r *= k + i;
        }
        r
    };
    let term_at = |k: u64, v: &[F]| pref.clone() * v[nu].mul_integer(&rising(k));
    let mut k = n;
    let mut term = term_at(k, &v);
    let mut sum = x.zero_like();
    loop {
        sum = sum + term.clone();
        advance(&mut v);
        let next = term_at(k + 1, &v);
        let (a, b) = (term.modulus(), next.modulus());
        let q = if a.is_zero() { Float::with_val(a.prec(), 0) } else { Float::with_val(a.prec(), &b / &a) };
        if q < 1 {
            let one_minus = Float::with_val(q.prec(), 1 - &q);
            let tail = Float::with_val(b.prec(), &b / &one_minus);
            let bound = Float::with_val(tail.prec(), sum.modulus() * tol);
            if tail <= bound && k >= n + u64::from(m) {
                return Ok((sum, tail, k + 1 - n));
            }
        }
        k += 1;
        if k - n > max_terms {
            return Err(Error::NoConvergence(format!("Stirling-2 series exceeded {max_terms} terms")));
        }
        term = next;
    }
}

/// S(x,N,m) = N!/(m-1)! sum_{n>=N} S(n,N) (n+1)...(n+m-1) / (x+N)^(n+m), with
/// a geometric tail bound from the (non-increasing) term ratio.
pub fn series_stirling2(p: &SumParams, opts: &EvalOptions) -> Result<EvalResult> {
    let (n, m) = (p.n, p.m);
    let tol = effective_tol(opts) / 4.0;
    let bits = opts.ctx.bits();
    two_precision(
        p,
        Method::SeriesStirling2,
        opts,
        bits + 64,
        2 * bits + 64,
        |x| stirling2_run(x, n, m, tol, opts.max_terms),
        |x| stirling2_run(x, n, m, tol, opts.max_terms),
    )
}

// ---------------------------------------------------------------------------
// Stirling numbers of the first kind and the harmonic Bell form
// ---------------------------------------------------------------------------

/// B(N+k+1, x) for k = 0, 1, ...
struct BetaWalk<F> {
    x: F,
    n: u64,
    k: u64,
    value: F,
}

impl<F: Field> BetaWalk<F> {
    fn new(x: &F, n: u64) -> Result<Self> {
        Ok(BetaWalk {
            x: x.clone(),
            n,
            k: 0,
            value: beta_identity(x, n)?,
        })
    }

    fn step(&mut self) -> Result<()> {
        self.k += 1;
        let a = (self.n + self.k) as i64;
        let r = self.x.from_i64_like(a).try_div(&self.x.add_i64(a))?;
        self.value = self.value.clone() * r;
        Ok(())
    }
}

fn finish<F: FloatField>(acc: super::Acceleration<F>) -> Run<F> {
    (acc.value, acc.fit_error, acc.terms)
}

fn stirling1_run<F: FloatField>(x: &F, n: u64, m: u32, tol: f64, max_terms: u64) -> Result<Run<F>> {
    let mut beta = BetaWalk::new(x, n)?;
    if m == 1 {
        let v = beta.value.clone();
        return Ok((v, Float::new(x.prec()), 1));
    }
    let j = m as usize - 1;
    // a[i] = |s(k, i)| / k!
    let mut a = vec![x.zero_like(); j + 1];
    a[0] = x.one_like();
    let start = j as u64;
    for k in 1..=start {
        advance_stirling1(&mut a, k)?;
        beta.step()?;
    }
    let shape = TailShape {
        alpha: x.clone(),
        log_powers: j,
    };
    let mut first = true;
    let acc = accelerate(
        |_| {
            if !first {
                advance_stirling1(&mut a, beta.k + 1)?;
                beta.step()?;
            }
            first = false;
            Ok(a[j].clone() * beta.value.clone())
        },
        start,
        &shape,
        tol,
        max_terms,
    )?;
    Ok(finish(acc))
}

fn advance_stirling1<F: Field>(a: &mut [F], k: u64) -> Result<()> {
    let inv = a[0].from_rational_like(&Rational::from((1, k)));
    for i in (1..a.len()).rev() {
        a[i] = (a[i - 1].clone() + a[i].mul_i64(k as i64 - 1)) * inv.clone();
    }
    a[0] = a[0].mul_i64(k as i64 - 1) * inv;
    Ok(())
}

/// S(x,N,m) = sum_{n>=m-1} |s(n,m-1)|/n! B(N+n+1, x).
pub fn series_stirling1(p: &SumParams, opts: &EvalOptions) -> Result<EvalResult> {
    let (n, m) = (p.n, p.m);
    let tol = effective_tol(opts);
    let w = 2 * opts.ctx.bits() + 64;
    two_precision(
        p,
        Method::SeriesStirling1,
        opts,
        w,
        2 * w,
        |x| stirling1_run(x, n, m, tol, opts.max_terms),
        |x| stirling1_run(x, n, m, tol, opts.max_terms),
    )
}

fn harmonic_args<F: Field>(h: &[F]) -> Vec<F> {
    // (-1)^(i-1) (i-1)! H^(i), i = 1..
    h.iter()
        .enumerate()
        .map(|(i, v)| {
            let c = v.mul_integer(&factorial(i as u64));
            if i % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .collect()
}

fn bell_harmonic_run<F: FloatField>(x: &F, n: u64, m: u32, tol: f64, max_terms: u64) -> Result<Run<F>> {
    let order = m as usize - 2;
    let mut beta = BetaWalk::new(x, n)?;
    beta.step()?;
    let mut h = vec![x.zero_like(); order];
    let norm = x.from_rational_like(&Rational::from((1, factorial(order as u64))));
    let shape = TailShape {
        alpha: x.clone(),
        log_powers: order + 1,
    };
    let mut k = 1u64;
    let acc = accelerate(
        |_| {
            if k > 1 {
                let prev = x.from_i64_like(k as i64 - 1).try_recip()?;
                let mut pw = prev.clone();
                for hr in h.iter_mut() {
                    *hr = hr.clone() + pw.clone();
                    pw = pw * prev.clone();
                }
                beta.step()?;
            }
            let y = bell_complete(&BellArgs::new(harmonic_args(&h), x));
            let t = y * beta.value.clone() * norm.clone() * x.from_rational_like(&Rational::from((1, k)));
            k += 1;
            Ok(t)
        },
        1,
        &shape,
        tol,
        max_terms,
    )?;
    Ok(finish(acc))
}

/// S(x,N,m) = 1/(m-2)! sum_{n>=1} B(N+n+1,x)/n Y_{m-2}[H_{n-1}, -H_{n-1}^(2), 2! H_{n-1}^(3), ...].
pub fn series_bell_harmonic(p: &SumParams, opts: &EvalOptions) -> Result<EvalResult> {
    let (n, m) = (p.n, p.m);
    if m < 2 {
        return Err(Error::InvalidArgument("series-bell-harmonic needs m >= 2".into()));
    }
    let tol = effective_tol(opts);
    let w = 2 * opts.ctx.bits() + 64;
    two_precision(
        p,
        Method::SeriesBellHarmonic,
        opts,
        w,
        2 * w,
        |x| bell_harmonic_run(x, n, m, tol, opts.max_terms),
        |x| bell_harmonic_run(x, n, m, tol, opts.max_terms),
    )
}

/// Term k of the Stirling-first-kind series, exactly: |s(k,m-1)|/k! B(N+k+1,x).
pub fn series_stirling1_term(x: &Rational, n: u64, m: u32, k: u64) -> Result<Rational> {
    if m == 0 {
        return Err(Error::InvalidArgument("needs m >= 1".into()));
    }
    let s = stirling(StirlingKind::FirstSigned, k as usize, m as usize - 1).abs();
    let b = beta_identity(x, n + k)?;
    Ok(b * Rational::from((s, factorial(k))))
}

/// Term k >= 1 of the harmonic Bell series, exactly.
pub fn series_bell_harmonic_term(x: &Rational, n: u64, m: u32, k: u64) -> Result<Rational> {
    if m < 2 || k == 0 {
        return Err(Error::InvalidArgument("needs m >= 2 and k >= 1".into()));
    }
    let order = m as usize - 2;
    let h: Vec<Rational> = (1..=order as u32)
        .map(|r| crate::special::harmonic(k - 1, r).map(|v| v.value))
        .collect::<Result<_>>()?;
    let y = bell_complete(&BellArgs::rational(harmonic_args(&h)));
    let b = beta_identity(x, n + k)?;
    Ok(y * b * Rational::from((1, Integer::from(k) * factorial(order as u64))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::direct_sum;
    use crate::numeric::{relative_difference, PrecisionContext};

    fn check(method: fn(&SumParams, &EvalOptions) -> Result<EvalResult>, p: &SumParams, tol: f64) {
        let opts = EvalOptions::new(PrecisionContext::new(128).unwrap(), 1e-25);
        let r = method(p, &opts).unwrap();
        let exact = Scalar::Rational(direct_sum(p.x.as_rational().unwrap(), p.n, p.m).unwrap());
        let d = relative_difference(&r.value, &exact, 256);
        assert!(d < tol, "x={} N={} m={}: {d}", p.x, p.n, p.m);
        let bound = r.error_bound.unwrap() / exact.abs(256);
        assert!(bound < tol * 10.0, "bound {bound}");
    }

    #[test]
    fn stirling2_matches_exact() {
        for (a, b, n, m) in [(1, 1, 1, 1), (1, 1, 2, 2), (1, 2, 10, 5), (3, 2, 4, 3), (7, 3, 6, 2)] {
            check(series_stirling2, &SumParams::rational(a, b, n, m).unwrap(), 1e-25);
        }
    }

    #[test]
    fn stirling2_ratio_guard() {
        let p = SumParams::rational(1, 100_000, 100, 1).unwrap();
        let r = series_stirling2(&p, &EvalOptions::default());
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn stirling1_matches_exact() {
        for (a, b, n, m) in [(1, 1, 2, 2), (1, 2, 10, 5), (3, 2, 4, 3), (2, 1, 3, 1)] {
            check(series_stirling1, &SumParams::rational(a, b, n, m).unwrap(), 1e-25);
        }
    }

    #[test]
    fn bell_harmonic_matches_exact() {
        for (a, b, n, m) in [(1, 1, 2, 2), (1, 2, 10, 5), (3, 2, 4, 3)] {
            check(series_bell_harmonic, &SumParams::rational(a, b, n, m).unwrap(), 1e-25);
        }
    }

    #[test]
    fn complex_argument() {
        let ctx = PrecisionContext::new(128).unwrap();
        let x = Scalar::parse("1.5+0.5i", ctx).unwrap();
        let p = SumParams::new(x.clone(), 3, 3).unwrap();
        let exact = Scalar::Complex(direct_sum(&x.to_complex(512), 3, 3).unwrap());
        let opts = EvalOptions::new(ctx, 1e-25);
        for f in [series_stirling2, series_stirling1, series_bell_harmonic] {
            let r = f(&p, &opts).unwrap();
            assert!(relative_difference(&r.value, &exact, 256) < 1e-25);
        }
    }

    #[test]
    fn term_forms_agree() {
        let x = Rational::from((3, 2));
        for m in 2..=6u32 {
            for k in 1..=25u64 {
                assert_eq!(
                    series_stirling1_term(&x, 4, m, k).unwrap(),
                    series_bell_harmonic_term(&x, 4, m, k).unwrap(),
                    "m={m} k={k}"
                );
            }
        }
    }

    #[test]
    fn terms_are_positive_for_positive_x() {
        let x = Rational::from((1, 2));
        for m in 2..=5u32 {
            for k in u64::from(m - 1)..30 {
                assert!(series_stirling1_term(&x, 3, m, k).unwrap() > 0);
            }
        }
    }
}
