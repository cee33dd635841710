//! The identity suite behind `absum selftest` and the acceptance harness.
//!
//! Each check returns the number of cases it verified or the first violation.

use std::path::PathBuf;
use std::thread;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::{Float, Rational};
use serde::Serialize;

use crate::combinatorics::{
    bell_complete, bell_convolution_check, bell_determinant, bell_numbers, bell_partial, factorial,
    gf_coefficient_check, pochhammer, sinh_expansion_check, stirling_cache, BellArgs, CacheStatus, StirlingKind,
    StirlingTable,
};
use crate::error::{Error, Result};
use crate::eval::{
    cancellation_profile, evaluate, lemma1_finite_difference_check, recursion_a, recursion_a_printed_step,
    special_case_check, EvalOptions, EvalResult, Method, SumParams,
};
use crate::extensions::{beta_series_check, eval2_quad, eval2_series, two_param_consistency, TwoParamForm, TwoParamSpec};
use crate::numeric::{
    format_rational, parse_rational, rational_normalize, relative_difference, round_to_context, scalar_pow_int,
    Field, PrecisionContext, Real, Scalar,
};
use crate::quadrature::{gamma_log_moment, s_quadrature, QuadForm};
use crate::special::{
    euler_gamma, g_derivatives, harmonic, polygamma_asymptotic, polygamma_special, unsigned_stirling_bell_check,
    zeta_int,
};

pub fn q(p: i64, d: i64) -> Rational {
    rational_normalize(p, d).expect("nonzero denominator")
}

fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).expect("valid precision")
}

fn fail(identity: &str, location: String) -> Error {
    Error::IdentityViolation {
        identity: identity.into(),
        location,
    }
}

pub fn exact_grid() -> Vec<Rational> {
    vec![q(1, 1), q(2, 1), q(1, 2), q(3, 2), q(7, 3), q(-1, 2)]
}

fn params(x: &Rational, n: u64, m: u32) -> Option<SumParams> {
    SumParams::new(Scalar::Rational(x.clone()), n, m).ok()
}

pub fn numeric_laws() -> Result<usize> {
    let mut cases = 0;
    let vals = [q(3, 7), q(-5, 2), q(1, 1), q(22, 9), q(-1, 3)];
    for a in &vals {
        if Rational::from(a + Rational::from(-a)) != 0 {
            return Err(fail("a + (-a) = 0", format!("{a}")));
        }
        for b in &vals {
            if Rational::from(Rational::from(a * b) / b) != *a || Rational::from(Rational::from(a + b) - b) != *a {
                return Err(fail("exact rational arithmetic", format!("{a}, {b}")));
            }
            cases += 1;
        }
        let s = Scalar::Rational(a.clone());
        for m in -3i64..=3 {
            for n in -3i64..=3 {
                let lhs = scalar_pow_int(&s, m + n)?;
                let rhs = scalar_pow_int(&s, m)?.mul(&scalar_pow_int(&s, n)?)?;
                if lhs != rhs {
                    return Err(fail("a^(m+n) = a^m a^n", format!("{a}, {m}, {n}")));
                }
                cases += 1;
            }
        }
        for bits in [53, 128, 300] {
            let once = round_to_context(&s, ctx(bits));
            if round_to_context(&once, ctx(bits)) != once {
                return Err(fail("round_to_context idempotent", format!("{a} at {bits}")));
            }
            cases += 1;
        }
    }
    for (text, canon) in [("3/6", "1/2"), ("1", "1/1"), ("-4/-8", "1/2"), ("10/-4", "-5/2")] {
        if format_rational(&parse_rational(text)?) != canon {
            return Err(fail("p/q round trip", text.into()));
        }
        cases += 1;
    }
    if PrecisionContext::new(52).is_ok() || parse_rational("1/0").is_ok() {
        return Err(fail("input validation", "precision below 53 or zero denominator".into()));
    }
    Ok(cases + 2)
}

pub fn stirling_tables(max_n: usize) -> Result<usize> {
    let first = StirlingTable::build(StirlingKind::FirstSigned, max_n);
    let second = StirlingTable::build(StirlingKind::Second, max_n);
    first.validate()?;
    second.validate()?;
    let bells = bell_numbers(max_n);
    for n in 0..=max_n {
        let abs_sum: rug::Integer = first.row(n).iter().map(|v| v.clone().abs()).sum();
        if abs_sum != factorial(n as u64) {
            return Err(fail("sum_k |s(n,k)| = n!", format!("n={n}")));
        }
        let sum: rug::Integer = second.row(n).iter().sum();
        if sum != bells[n] {
            return Err(fail("sum_k S(n,k) = B_n", format!("n={n}")));
        }
        for j in 0..=n {
            let dot: rug::Integer = (j..=n).map(|k| first.get(n, k) * second.get(k, j)).sum();
            if dot != i32::from(n == j) {
                return Err(fail("Stirling orthogonality", format!("n={n}, j={j}")));
            }
        }
    }
    Ok(3 * (max_n + 1))
}

pub fn stirling_gf(max_m: usize, order: usize) -> Result<usize> {
    let mut cases = 0;
    for kind in [StirlingKind::FirstSigned, StirlingKind::Second] {
        for m in 1..=max_m {
            cases += gf_coefficient_check(kind, m, order)?.cases;
        }
    }
    Ok(cases)
}

fn random_rationals(rng: &mut StdRng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| q(rng.random_range(-12..=12), rng.random_range(1..=9)))
        .collect()
}

pub fn bell_routes(max_n: usize, trials: usize, seed: u64) -> Result<usize> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cases = 0;
    for n in 1..=max_n {
        for _ in 0..trials {
            let args = BellArgs::rational(random_rationals(&mut rng, n));
            let y = bell_complete(&args);
            let det = bell_determinant(&args);
            let mut partial = Rational::new();
            for k in 1..=n {
                partial += bell_partial(n, k, &args)?;
            }
            if y != det || y != partial {
                return Err(fail("Bell determinant = recursion = partial sum", format!("n={n}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

pub fn bell_convolution(max_n: usize, trials: usize, seed: u64) -> Result<usize> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cases = 0;
    for n in 1..=max_n {
        for _ in 0..trials {
            let a = random_rationals(&mut rng, n);
            let b = random_rationals(&mut rng, n);
            cases += bell_convolution_check(&a, &b)?.cases;
        }
    }
    Ok(cases)
}

pub fn pochhammer_ratio(max_k: u64) -> Result<usize> {
    let mut cases = 0;
    let mut xs = exact_grid();
    xs.extend([q(-7, 3), q(-5, 1), q(11, 4)]);
    for x in &xs {
        let x1 = x.add_i64(1);
        for k in 0..=max_k {
            let den = pochhammer(&x1, k);
            if den.is_zero() || x.add_i64(k as i64).is_zero() {
                continue;
            }
            let lhs = pochhammer(x, k).try_div(&den)?;
            if lhs != x.try_div(&x.add_i64(k as i64))? {
                return Err(fail("(x)_k / (x+1)_k = x/(x+k)", format!("x={x}, k={k}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// Exact evaluators on the rational grid, each compared with the direct sum.
pub fn exact_agreement(xs: &[Rational], max_n: u64, max_m: u32) -> Result<usize> {
    let opts = EvalOptions::default();
    let mut cases = 0;
    for x in xs {
        for n in 1..=max_n {
            for m in 1..=max_m {
                let Some(p) = params(x, n, m) else { continue };
                let reference = evaluate(&p, Method::Direct, &opts)?.value;
                let mut methods = vec![Method::Hypergeometric, Method::Bell];
                if *x > 1 {
                    methods.push(Method::RecursionB);
                }
                for method in methods {
                    if evaluate(&p, method, &opts)?.value != reference {
                        return Err(fail("exact method agreement", format!("{method} at x={x}, N={n}, m={m}")));
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(cases)
}

pub fn beta_reduction(xs: &[Rational], max_n: u64) -> Result<usize> {
    let opts = EvalOptions::default();
    let mut cases = 0;
    for x in xs {
        for n in 0..=max_n {
            let Some(p) = params(x, n, 1) else { continue };
            if evaluate(&p, Method::Direct, &opts)?.value != evaluate(&p, Method::BetaIdentity, &opts)?.value {
                return Err(fail("S(x, N, 1) = B(x, N+1)", format!("x={x}, N={n}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

pub fn scaling(xs: &[Rational], max_m: u32) -> Result<usize> {
    let opts = EvalOptions::default();
    let mut cases = 0;
    for x in xs {
        for m in 1..=max_m {
            let Some(p) = params(x, 1, m) else { continue };
            let expected = x.powi(-i64::from(m))? - x.add_i64(1).powi(-i64::from(m))?;
            if evaluate(&p, Method::Direct, &opts)?.value != Scalar::Rational(expected) {
                return Err(fail("S(x, 1, m) = x^-m - (x+1)^-m", format!("x={x}, m={m}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

pub fn lemma1_fd(xs: &[Rational], ns: &[u64], jmax: usize, tol: f64) -> Result<usize> {
    let mut cases = 0;
    for x in xs {
        for &n in ns {
            cases += lemma1_finite_difference_check(x, n, jmax, tol)?.cases;
        }
    }
    Ok(cases)
}

fn relative_to_exact(r: &EvalResult, exact: &Rational) -> f64 {
    relative_difference(&r.value, &Scalar::Rational(exact.clone()), 256)
}

/// |value - exact| <= error_bound.
fn within_bound(r: &EvalResult, exact: &Rational) -> bool {
    let err = r.value.distance(&Scalar::Rational(exact.clone()), 512);
    match &r.error_bound {
        Some(b) => err <= *b,
        None => err.is_zero(),
    }
}

/// The three series evaluators against the exact sum. Out-of-domain points
/// (InvalidArgument) are skipped.
pub fn series_grid(xs: &[Rational], max_n: u64, max_m: u32, bits: u32, tol: f64) -> Result<usize> {
    let opts = EvalOptions::new(ctx(bits), tol);
    let mut cases = 0;
    let mut points = Vec::new();
    for x in xs {
        for n in 1..=max_n {
            for m in 1..=max_m {
                points.push((x.clone(), n, m));
            }
        }
    }
    let results: Vec<Result<usize>> = thread::scope(|s| {
        let handles: Vec<_> = points
            .iter()
            .map(|(x, n, m)| {
                s.spawn(move || -> Result<usize> {
                    let Some(p) = params(x, *n, *m) else { return Ok(0) };
                    let exact = crate::eval::direct_sum(x, *n, *m)?;
                    let fx = Scalar::Real(Real::from_rational(x, ctx(bits)));
                    let pf = SumParams::new(fx, *n, *m)?;
                    let mut local = 0;
                    for method in [Method::SeriesStirling2, Method::SeriesStirling1, Method::SeriesBellHarmonic] {
                        let r = match evaluate(&p, method, &opts).or_else(|e| match e {
                            Error::InvalidArgument(_) => Err(e),
                            _ => evaluate(&pf, method, &opts),
                        }) {
                            Ok(r) => r,
                            Err(Error::InvalidArgument(_)) => continue,
                            Err(e) => return Err(e),
                        };
                        let d = relative_to_exact(&r, &exact);
                        if !(d <= tol) {
                            return Err(fail("series vs exact", format!("{method} at x={x}, N={n}, m={m}: {d:e}")));
                        }
                        if !within_bound(&r, &exact) {
                            return Err(fail("series error bound", format!("{method} at x={x}, N={n}, m={m}")));
                        }
                        local += 1;
                    }
                    Ok(local)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("series check panicked")).collect()
    });
    for r in results {
        cases += r?;
    }
    Ok(cases)
}

pub fn special_cases() -> Result<usize> {
    let r = special_case_check(20, 6, 10)?;
    if r.printed_form_mismatches == 0 {
        return Err(fail("deleted-sum sign discrepancy", "no mismatch found".into()));
    }
    Ok(r.cases)
}

/// g(x, N) - g(x+1, N-1) is the single k = 0 term.
pub fn g_telescoping(xs: &[Rational], max_n: u64, max_l: usize) -> Result<usize> {
    let mut cases = 0;
    for x in xs {
        for n in 1..=max_n {
            if params(x, n, 1).is_none() {
                continue;
            }
            let a = g_derivatives(x, n, max_l)?.values;
            let b = g_derivatives(&x.add_i64(1), n - 1, max_l)?.values;
            for l in 0..=max_l {
                let mut boundary = Rational::from(factorial(l as u64)) * x.powi(-(l as i64) - 1)?;
                if l % 2 == 0 {
                    boundary = -boundary;
                }
                if Rational::from(&a[l] - &b[l]) != boundary {
                    return Err(fail("g telescoping", format!("x={x}, N={n}, l={l}")));
                }
                cases += 1;
            }
        }
    }
    Ok(cases)
}

/// (-1)^(r-1)/(r-1)! (psi^(r-1)(n+1) - psi^(r-1)(1)) = H_n^(r).
pub fn harmonic_bridge(max_n: u64, max_r: u32, bits: u32, tol: f64) -> Result<usize> {
    let c = ctx(bits);
    let mut cases = 0;
    for r in 1..=max_r {
        let base = polygamma_special(r - 1, &Rational::from(1), c)?.0;
        for n in 0..=max_n {
            let top = polygamma_special(r - 1, &Rational::from(n + 1), c)?.0;
            let mut v = Float::with_val(bits, &top - &base) / Float::with_val(bits, &factorial(u64::from(r) - 1));
            if r % 2 == 0 {
                v = -v;
            }
            let h = harmonic(n, r)?.value;
            let d = Float::with_val(bits, &v - &h).abs().to_f64();
            if !(d <= tol) {
                return Err(fail("harmonic-polygamma bridge", format!("n={n}, r={r}: {d:e}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// psi^(l) at 1/2 + s: closed form shifted versus the asymptotic route.
pub fn polygamma_half(max_l: u32, max_shift: i64, bits: u32, tol: f64) -> Result<usize> {
    let c = ctx(bits);
    let mut cases = 0;
    for l in 1..=max_l {
        for s in 0..=max_shift {
            let p = q(2 * s + 1, 2);
            let a = Scalar::Real(polygamma_special(l, &p, c)?);
            let b = Scalar::Real(polygamma_asymptotic(l, &p, c)?);
            let d = relative_difference(&a, &b, bits);
            if !(d <= tol) {
                return Err(fail("polygamma at half integers", format!("l={l}, point={p}: {d:e}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// Y_n(-gamma, x_2, ..., x_n) with x_j = (-1)^j (j-1)! zeta(j) versus int_0^inf e^-t ln^n t dt.
pub fn gamma_moment(max_n: u32, bits: u32, tol: f64) -> Result<usize> {
    let c = ctx(bits);
    let wide = PrecisionContext::new(2 * bits)?;
    let proto = Real(Float::new(2 * bits));
    for n in 1..=max_n {
        let mut args = vec![Real(-euler_gamma(wide)?)];
        for j in 2..=n {
            let mut v = Float::with_val(2 * bits, zeta_int(j, wide)?.value * factorial(u64::from(j - 1)));
            if j % 2 == 1 {
                v = -v;
            }
            args.push(Real(v));
        }
        let y = Scalar::Real(bell_complete(&BellArgs::new(args, &proto)));
        let quad = gamma_log_moment(n, tol / 100.0, c)?;
        let d = relative_difference(&quad, &y, bits);
        if !(d <= tol) {
            return Err(fail("Gamma derivative identity", format!("n={n}: {d:e}")));
        }
    }
    Ok(max_n as usize)
}

/// The three quadrature forms against the exact sum, plus eq6 vs eq7 within
/// their combined error estimates.
pub fn quadrature_grid(xs: &[Rational], max_n: u64, max_m: u32, bits: u32, tol: f64) -> Result<usize> {
    let mut points = Vec::new();
    for x in xs {
        for n in 1..=max_n {
            for m in 1..=max_m {
                points.push((x.clone(), n, m));
            }
        }
    }
    let results: Vec<Result<usize>> = thread::scope(|s| {
        let handles: Vec<_> = points
            .iter()
            .map(|(x, n, m)| {
                s.spawn(move || -> Result<usize> {
                    let Some(p) = params(x, *n, *m) else { return Ok(0) };
                    let exact = crate::eval::direct_sum(x, *n, *m)?;
                    let mut out = Vec::new();
                    for form in [QuadForm::Eq6, QuadForm::Eq7, QuadForm::Eq20] {
                        let r = s_quadrature(&p, form, tol / 100.0, ctx(bits))?;
                        let d = relative_to_exact(&r, &exact);
                        if !(d <= tol) {
                            return Err(fail("quadrature vs exact", format!("{form:?} at x={x}, N={n}, m={m}: {d:e}")));
                        }
                        if !within_bound(&r, &exact) {
                            return Err(fail("quadrature error bound", format!("{form:?} at x={x}, N={n}, m={m}")));
                        }
                        out.push(r);
                    }
                    let gap = out[0].value.distance(&out[1].value, 2 * bits);
                    let mut allowed = Float::with_val(2 * bits, out[0].error_bound.as_ref().expect("inexact"));
                    allowed += out[1].error_bound.as_ref().expect("inexact");
                    if gap > allowed {
                        return Err(fail("eq6 vs eq7", format!("x={x}, N={n}, m={m}: {gap} > {allowed}")));
                    }
                    Ok(4)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("quadrature check panicked")).collect()
    });
    results.into_iter().sum()
}

/// Tightening the tolerance never makes the achieved error worse.
pub fn quadrature_refinement() -> Result<usize> {
    let mut cases = 0;
    for (a, b, n, m) in [(1, 1, 3, 2), (1, 2, 5, 3), (3, 2, 8, 4), (2, 1, 2, 5)] {
        let p = SumParams::rational(a, b, n, m)?;
        let exact = crate::eval::direct_sum(p.x.as_rational().expect("rational"), n, m)?;
        for form in [QuadForm::Eq6, QuadForm::Eq7, QuadForm::Eq20] {
            let mut prev = f64::INFINITY;
            let mut tol = 1e-8;
            while tol > 1e-30 {
                let r = s_quadrature(&p, form, tol, ctx(128))?;
                let err = relative_to_exact(&r, &exact).max(1e-36);
                if err > prev {
                    return Err(fail("monotone refinement", format!("{form:?} at x={a}/{b}, N={n}, m={m}, tol={tol:e}")));
                }
                prev = err;
                tol /= 1e4;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn spec(x: &Rational, y: &Rational, m: u32, n: u32) -> Result<TwoParamSpec> {
    TwoParamSpec::new(Scalar::Rational(x.clone()), Scalar::Rational(y.clone()), m, n)
}

pub fn symmetry_grid() -> Vec<(Rational, Rational, u32, u32)> {
    vec![
        (q(1, 1), q(2, 1), 1, 2),
        (q(1, 2), q(3, 2), 2, 1),
        (q(3, 2), q(5, 2), 2, 2),
        (q(2, 1), q(7, 3), 1, 3),
        (q(5, 4), q(1, 1), 3, 1),
        (q(3, 1), q(1, 2), 2, 3),
        (q(7, 2), q(2, 1), 1, 1),
        (q(4, 3), q(4, 1), 3, 2),
        (q(5, 2), q(3, 1), 2, 2),
        (q(1, 1), q(1, 1), 3, 3),
    ]
}

pub fn two_param_symmetry(bits: u32, tol: f64) -> Result<usize> {
    let mut cases = 0;
    for (x, y, m, n) in symmetry_grid() {
        cases += two_param_consistency(&spec(&x, &y, m, n)?, tol, ctx(bits))?.cases;
    }
    Ok(cases)
}

/// Terminating series in y versus the eq30 quadrature.
pub fn two_param_series_vs_quadrature(ys: &[i64], xs: &[Rational], max_m: u32, max_n: u32, bits: u32, tol: f64) -> Result<usize> {
    let mut points = Vec::new();
    for &y in ys {
        for x in xs {
            for m in 1..=max_m {
                for n in 1..=max_n {
                    points.push((Rational::from(y), x.clone(), m, n));
                }
            }
        }
    }
    let results: Vec<Result<usize>> = thread::scope(|s| {
        let handles: Vec<_> = points
            .iter()
            .map(|(y, x, m, n)| {
                s.spawn(move || -> Result<usize> {
                    let sp = spec(x, y, *m, *n)?;
                    let a = eval2_series(&sp, tol / 10.0, 2_000_000, ctx(bits))?;
                    let b = eval2_quad(&sp, TwoParamForm::Eq30, tol / 10.0, ctx(bits))?;
                    let d = relative_difference(&a.value, &b.value, bits);
                    if !(d <= tol) {
                        return Err(fail("two-parameter series vs eq30", format!("x={x}, y={y}, m={m}, n={n}: {d:e}")));
                    }
                    Ok(1)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("two-parameter check panicked")).collect()
    });
    results.into_iter().sum()
}

/// S(N+1, y, 1, n) = (-1)^(n-1) (n-1)! S(y, N, n) over the exact grid.
pub fn two_param_correspondence(ys: &[Rational], max_n: u64, max_m: u32, bits: u32, tol: f64) -> Result<usize> {
    let mut points = Vec::new();
    for y in ys.iter().filter(|y| **y > 0) {
        for big_n in 1..=max_n {
            for m in 1..=max_m {
                points.push((y.clone(), big_n, m));
            }
        }
    }
    let results: Vec<Result<usize>> = thread::scope(|s| {
        let handles: Vec<_> = points
            .iter()
            .map(|(y, big_n, m)| {
                s.spawn(move || -> Result<usize> {
                    let sp = spec(&Rational::from(big_n + 1), y, 1, *m)?;
                    Ok(two_param_consistency(&sp, tol, ctx(bits))?.cases)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("two-parameter check panicked")).collect()
    });
    results.into_iter().sum()
}

pub fn beta_series(bits: u32, tol: f64) -> Result<usize> {
    let mut cases = 0;
    let pairs = [
        (q(1, 2), q(3, 1)),
        (q(3, 2), q(1, 1)),
        (q(7, 3), q(4, 1)),
        (q(1, 1), q(1, 2)),
        (q(3, 2), q(5, 2)),
        (q(2, 1), q(7, 3)),
    ];
    for (x, y) in pairs {
        cases += beta_series_check(&Scalar::Rational(x), &Scalar::Rational(y), tol, ctx(bits))?.cases;
    }
    Ok(cases)
}

/// The printed step S(x,N,m) = [S(x,N,m-1) + N S(x-1,N-1,m)]/x misses 13/144 at
/// (2, 2, 2); the recursion with S(x+1, N-1, m) hits it.
pub fn recursion_discrepancy() -> Result<usize> {
    let x = Rational::from(2);
    let exact = q(13, 144);
    if crate::eval::direct_sum(&x, 2, 2)? != exact {
        return Err(fail("S(2,2,2) = 13/144", "direct".into()));
    }
    let printed = recursion_a_printed_step(&x, 2, 2)?;
    if printed == exact {
        return Err(fail("printed recursion discrepancy", format!("printed step gave {printed}")));
    }
    if recursion_a(&x, 2, 2)?.0 != exact {
        return Err(fail("validated recursion", "x=2, N=2, m=2".into()));
    }
    Ok(2)
}

/// Digits lost by the 53-bit direct sum at x = 1, m = 3; returns the N = 60 loss.
pub fn cancellation_losses(ns: &[u64]) -> Result<Vec<f64>> {
    let x = Rational::from(1);
    let opts = EvalOptions::default();
    let mut losses = Vec::new();
    for &n in ns {
        let profile = cancellation_profile(&x, n, 3, 53)?;
        if let Some(&last) = losses.last() {
            if profile.digits_lost < last {
                return Err(fail("nondecreasing cancellation", format!("N={n}")));
            }
        }
        let p = SumParams::rational(1, 1, n, 3)?;
        for method in [Method::Bell, Method::Direct] {
            let r = evaluate(&p, method, &opts)?;
            if !r.exact || r.value != Scalar::Rational(crate::eval::direct_sum(&x, n, 3)?) {
                return Err(fail("exact methods lose nothing", format!("{method} at N={n}")));
            }
        }
        losses.push(profile.digits_lost);
    }
    Ok(losses)
}

/// Digits lost at N = 60 by the 53-bit direct sum (measured 13.418).
pub const N60_MIN_DIGITS_LOST: f64 = 13.0;

pub fn cancellation() -> Result<usize> {
    let losses = cancellation_losses(&[5, 20, 40, 60])?;
    if losses[3] < N60_MIN_DIGITS_LOST {
        return Err(fail("cancellation at N=60", format!("only {:.2} digits lost", losses[3])));
    }
    let wide = cancellation_profile(&Rational::from(1), 5, 3, 256)?;
    if wide.digits_lost > 2.0 {
        return Err(fail("cancellation at 256 bits", format!("{:.2} digits lost", wide.digits_lost)));
    }
    Ok(5)
}

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> Result<usize>,
}

pub const CHECKS: &[Check] = &[
    Check { name: "numeric", run: numeric_laws },
    Check { name: "stirling-tables", run: || stirling_tables(20) },
    Check { name: "stirling-gf", run: || stirling_gf(6, 25) },
    Check { name: "stirling-bell", run: || Ok(unsigned_stirling_bell_check(20)?.cases) },
    Check { name: "bell-routes", run: || bell_routes(10, 4, 11) },
    Check { name: "bell-convolution", run: || bell_convolution(8, 4, 12) },
    Check { name: "sinh-expansion", run: || Ok(sinh_expansion_check(12)?.cases) },
    Check { name: "pochhammer-ratio", run: || pochhammer_ratio(12) },
    Check { name: "exact-agreement", run: || exact_agreement(&exact_grid(), 25, 6) },
    Check { name: "beta-reduction", run: || beta_reduction(&exact_grid(), 25) },
    Check { name: "scaling", run: || scaling(&exact_grid(), 6) },
    Check { name: "lemma1-fd", run: || lemma1_fd(&[q(3, 2), q(2, 1), q(5, 2)], &[1, 3, 6], 4, 1e-12) },
    Check { name: "series-grid", run: || series_grid(&[q(1, 1), q(2, 1), q(1, 2)], 10, 5, 128, 1e-25) },
    Check { name: "special-cases", run: special_cases },
    Check { name: "g-telescoping", run: || g_telescoping(&exact_grid(), 20, 5) },
    Check { name: "harmonic-bridge", run: || harmonic_bridge(30, 6, 128, 1e-25) },
    Check { name: "polygamma-half", run: || polygamma_half(6, 4, 128, 1e-30) },
    Check { name: "gamma-moment", run: || gamma_moment(6, 128, 1e-15) },
    Check { name: "quadrature-grid", run: || quadrature_grid(&[q(1, 1), q(1, 2), q(3, 2), q(2, 1)], 8, 5, 128, 1e-20) },
    Check { name: "quadrature-refinement", run: quadrature_refinement },
    Check { name: "two-param-symmetry", run: || two_param_symmetry(128, 1e-15) },
    Check {
        name: "two-param-series",
        run: || two_param_series_vs_quadrature(&[2, 3, 4], &[q(1, 1), q(1, 2), q(3, 2)], 3, 3, 128, 1e-15),
    },
    Check { name: "two-param-correspondence", run: || two_param_correspondence(&exact_grid(), 6, 4, 128, 1e-15) },
    Check { name: "beta-series", run: || beta_series(128, 1e-20) },
    Check { name: "recursion-discrepancy", run: recursion_discrepancy },
    Check { name: "cancellation", run: cancellation },
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub error: Option<String>,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub cache: Vec<CacheStatus>,
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    /// Run only checks whose name contains this substring.
    pub filter: Option<String>,
    pub cache_dir: Option<PathBuf>,
}

pub fn selected(filter: Option<&str>) -> Vec<&'static Check> {
    CHECKS
        .iter()
        .filter(|c| filter.is_none_or(|f| c.name.contains(f)))
        .collect()
}

/// Syncs the on-disk cache (if any), then runs the selected checks
/// concurrently; results keep the catalogue order.
pub fn run_selftest(opts: &SelftestOptions) -> Result<SelftestReport> {
    let cache = match &opts.cache_dir {
        Some(dir) => stirling_cache().sync_dir(dir, 64)?,
        None => Vec::new(),
    };
    let checks = selected(opts.filter.as_deref());
    let outcomes = thread::scope(|s| {
        let handles: Vec<_> = checks
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let start = Instant::now();
                    let r = (c.run)();
                    let millis = start.elapsed().as_millis();
                    match r {
                        Ok(cases) => CheckOutcome {
                            name: c.name,
                            passed: true,
                            cases,
                            error: None,
                            millis,
                        },
                        Err(e) => CheckOutcome {
                            name: c.name,
                            passed: false,
                            cases: 0,
                            error: Some(e.to_string()),
                            millis,
                        },
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&checks)
            .map(|(h, c)| {
                h.join().unwrap_or_else(|_| CheckOutcome {
                    name: c.name,
                    passed: false,
                    cases: 0,
                    error: Some("check panicked".into()),
                    millis: 0,
                })
            })
            .collect()
    });
    Ok(SelftestReport { cache, checks: outcomes })
}
