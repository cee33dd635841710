//! Generalized harmonic numbers, the finite sums g^(l)(x) = psi^(l)(x) -
//! psi^(l)(x+N+1), and the zeta / Euler-gamma / polygamma values needed to
//! check special-value identities.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::combinatorics::{
    bell_complete_all, binomial, factorial, stirling, BellArgs, IdentityReport, StirlingKind,
};
use crate::error::{Error, Result};
use crate::numeric::{Field, PrecisionContext, Real};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarmonicValue {
    pub n: u64,
    pub r: u32,
    pub value: Rational,
}

/// H_n^(r) = sum_{k=1..n} k^-r, exactly.
pub fn harmonic(n: u64, r: u32) -> Result<HarmonicValue> {
    if r == 0 {
        return Err(Error::InvalidArgument("harmonic order r must be positive".into()));
    }
    let mut value = Rational::new();
    for k in 1..=n {
        value += Rational::from((1, Integer::from(k).pow(r)));
    }
    Ok(HarmonicValue { n, r, value })
}

/// g^(l)(x) for l = 0..=L. `deleted_index` is set when x = -K and the k = K term was dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct GDerivs<F> {
    pub x: F,
    pub n: u64,
    pub values: Vec<F>,
    pub deleted_index: Option<u64>,
}

fn signed_factorial<F: Field>(proto: &F, l: usize) -> F {
    // -(-1)^l l!
    let f = proto.from_integer_like(&factorial(l as u64));
    if l % 2 == 0 {
        -f
    } else {
        f
    }
}

fn g_from_power_sums<F: Field>(sums: Vec<F>) -> Vec<F> {
    sums.into_iter()
        .enumerate()
        .map(|(l, s)| signed_factorial(&s, l) * s)
        .collect()
}

/// g^(l)(x) = -(-1)^l l! sum_{k=0..N} (x+k)^-(l+1), exact for rational x.
pub fn g_derivatives<F: Field>(x: &F, n: u64, max_l: usize) -> Result<GDerivs<F>> {
    let mut sums = vec![x.zero_like(); max_l + 1];
    for k in 0..=n {
        let shifted = x.add_i64(k as i64);
        if shifted.is_zero() {
            return Err(Error::Pole(format!("x = -{k} lies in {{0, -1, ..., -{n}}}")));
        }
        let inv = shifted.try_recip()?;
        let mut p = inv.clone();
        for s in sums.iter_mut() {
            *s = s.clone() + p.clone();
            p = p * inv.clone();
        }
    }
    Ok(GDerivs {
        x: x.clone(),
        n,
        values: g_from_power_sums(sums),
        deleted_index: None,
    })
}

/// g^(l)(-K) with the singular k = K term omitted: (-1)^(l+1) l! sum_{k != K} (k-K)^-(l+1).
pub fn g_derivatives_deleted(k_del: u64, n: u64, max_l: usize) -> Result<GDerivs<Rational>> {
    if k_del > n {
        return Err(Error::InvalidArgument(format!("deleted index K={k_del} exceeds N={n}")));
    }
    let x = Rational::from(-(k_del as i64));
    let mut sums = vec![Rational::new(); max_l + 1];
    for k in (0..=n).filter(|&k| k != k_del) {
        let inv = Rational::from((1, k as i64 - k_del as i64));
        let mut p = inv.clone();
        for s in sums.iter_mut() {
            *s += &p;
            p *= &inv;
        }
    }
    Ok(GDerivs {
        x,
        n,
        values: g_from_power_sums(sums),
        deleted_index: Some(k_del),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegerSign {
    Plus,
    Minus,
}

fn h(n: u64, r: u32) -> Rational {
    harmonic(n, r).expect("r >= 1").value
}

fn lead(l: usize) -> Rational {
    // (-1)^(l+1) l!
    let f = Rational::from(factorial(l as u64));
    if l % 2 == 0 {
        -f
    } else {
        f
    }
}

/// Harmonic-number closed forms of g^(l)(+-K).
///
/// Plus: g^(l)(K) = (-1)^(l+1) l! [H_{N+K}^(l+1) - H_{K-1}^(l+1)].
/// Minus (deleted sum at x = -K): (-1)^(l+1) l! [H_{N-K}^(l+1) + (-1)^(l+1) H_K^(l+1)].
pub fn g_derivatives_integer(k: i64, sign: IntegerSign, n: u64, max_l: usize) -> Result<GDerivs<Rational>> {
    match sign {
        IntegerSign::Plus => {
            if k < 1 {
                return Err(Error::InvalidArgument(format!("K must be a positive integer, got {k}")));
            }
            let k = k as u64;
            let values = (0..=max_l)
                .map(|l| {
                    let r = l as u32 + 1;
                    lead(l) * (h(n + k, r) - h(k - 1, r))
                })
                .collect();
            Ok(GDerivs {
                x: Rational::from(k),
                n,
                values,
                deleted_index: None,
            })
        }
        IntegerSign::Minus => {
            if k < 0 || k as u64 > n {
                return Err(Error::InvalidArgument(format!("deleted variant needs 0 <= K <= N, got K={k}, N={n}")));
            }
            let k = k as u64;
            let values = (0..=max_l)
                .map(|l| {
                    let r = l as u32 + 1;
                    let hk = h(k, r);
                    let bracket = if l % 2 == 0 { h(n - k, r) - hk } else { h(n - k, r) + hk };
                    lead(l) * bracket
                })
                .collect();
            Ok(GDerivs {
                x: Rational::from(-(k as i64)),
                n,
                values,
                deleted_index: Some(k),
            })
        }
    }
}

/// The deleted-sum closed form with the bracket sign (-1)^l H_K, which
/// disagrees with the deleted finite sum; kept for regression checks.
pub fn g_deleted_bracket_sign_l(k: u64, n: u64, l: usize) -> Result<Rational> {
    if k > n {
        return Err(Error::InvalidArgument(format!("K={k} exceeds N={n}")));
    }
    let r = l as u32 + 1;
    let hk = h(k, r);
    let bracket = if l % 2 == 0 { h(n - k, r) + hk } else { h(n - k, r) - hk };
    Ok(lead(l) * bracket)
}

/// |s(n+1,k+1)| = n!/k! Y_k[H_n, -H_n^(2), 2! H_n^(3), ..., (-1)^(k-1) (k-1)! H_n^(k)]
/// for all 0 <= k <= n <= max_n.
pub fn unsigned_stirling_bell_check(max_n: usize) -> Result<IdentityReport> {
    let mut cases = 0;
    for n in 0..=max_n {
        let args: Vec<Rational> = (1..=n as u32)
            .map(|r| {
                let v = h(n as u64, r) * Rational::from(factorial(u64::from(r) - 1));
                if r % 2 == 0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let ys = bell_complete_all(&BellArgs::rational(args));
        for k in 0..=n {
            let lhs = Rational::from(stirling(StirlingKind::FirstSigned, n + 1, k + 1).abs());
            let rhs = Rational::from((factorial(n as u64), factorial(k as u64))) * &ys[k];
            if lhs != rhs {
                return Err(Error::identity(
                    "unsigned Stirling numbers via Bell polynomials",
                    format!("n={n}, k={k}: {lhs} vs {rhs}"),
                ));
            }
            cases += 1;
        }
    }
    Ok(IdentityReport {
        identity: "unsigned Stirling numbers via Bell polynomials",
        cases,
    })
}

// ---------------------------------------------------------------------------
// zeta, gamma, polygamma
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaValue {
    pub k: u32,
    pub value: Float,
    pub context: PrecisionContext,
}

/// Borwein's accelerated alternating series for zeta(s), s >= 2, with
/// truncation error below 3 (3+sqrt 8)^-n / (1 - 2^(1-s)).
fn zeta_borwein(s: u32, bits: u32) -> Float {
    let wp = bits + 32;
    let n = (f64::from(wp) * std::f64::consts::LN_2 / (3.0 + 8f64.sqrt()).ln()).ceil() as u64 + 2;
    // d_k = n sum_{i=0..k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    let mut d = Vec::with_capacity(n as usize + 1);
    let mut acc = Integer::new();
    let mut term = Rational::from((1, n)); // i = 0: (n-1)!/n! = 1/n
    for i in 0..=n {
        if i > 0 {
            // ratio t_i / t_{i-1} = (n+i-1)(n-i+1) 4 / ((2i)(2i-1))
            term *= Rational::from(((n + i - 1) * (n - i + 1) * 4, (2 * i) * (2 * i - 1)));
        }
        let scaled = Rational::from(&term * n);
        debug_assert_eq!(*scaled.denom(), 1);
        acc += scaled.numer();
        d.push(acc.clone());
    }
    let dn = d[n as usize].clone();
    let mut sum = Float::with_val(wp, 0);
    for k in 0..n {
        let num = Integer::from(&d[k as usize] - &dn);
        let mut t = Float::with_val(wp, &num);
        t /= Float::with_val(wp, Integer::from(k + 1).pow(s));
        if k % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    let one_minus = Float::with_val(wp, 1) - (Float::with_val(wp, 1) >> (s - 1));
    let den = Float::with_val(wp, &dn) * one_minus;
    Float::with_val(bits, -sum / den)
}

fn memo<K: std::hash::Hash + Eq + Clone>(
    cell: &'static OnceLock<Mutex<HashMap<K, Float>>>,
    key: K,
    build: impl FnOnce() -> Result<Float>,
) -> Result<Float> {
    let map = cell.get_or_init(Default::default);
    if let Some(v) = map.lock().expect("memo lock").get(&key) {
        return Ok(v.clone());
    }
    let v = build()?;
    map.lock().expect("memo lock").insert(key, v.clone());
    Ok(v)
}

/// zeta(k) for integer k >= 2, accepted only when the p- and 2p-bit
/// evaluations agree to 2^(2-p) relative.
pub fn zeta_int(k: u32, ctx: PrecisionContext) -> Result<ZetaValue> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("zeta_int needs k >= 2, got {k}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Float>>> = OnceLock::new();
    let bits = ctx.bits();
    let value = memo(&CACHE, (k, bits), || {
        let lo = zeta_borwein(k, bits);
        let hi = zeta_borwein(k, 2 * bits);
        let diff = Float::with_val(2 * bits, &hi - &lo).abs();
        let limit = Float::with_val(2 * bits, &hi).abs() >> (bits - 2);
        if diff > limit {
            return Err(Error::NoConvergence(format!("zeta({k}) precision check failed at {bits} bits")));
        }
        Ok(Float::with_val(bits, &hi))
    })?;
    Ok(ZetaValue { k, value, context: ctx })
}

/// Euler's constant by the Brent-McMillan iteration.
fn euler_gamma_bm(bits: u32) -> Float {
    let n = ((f64::from(bits) + 16.0) * std::f64::consts::LN_2 / 4.0).ceil() as u64 + 1;
    let wp = bits + (3.0 * n as f64) as u32 + 64;
    let n2 = Float::with_val(wp, n * n);
    let mut a = -Float::with_val(wp, n).ln();
    let mut b = Float::with_val(wp, 1);
    let mut u = a.clone();
    let mut v = b.clone();
    let mut k = 1u64;
    loop {
        b *= &n2;
        b /= k * k;
        a *= &n2;
        a /= k;
        a += &b;
        a /= k;
        u += &a;
        v += &b;
        if k > n && b < (Float::with_val(wp, &v) >> wp) && Float::with_val(wp, a.abs_ref()) < (Float::with_val(wp, u.abs_ref()) >> wp) {
            break;
        }
        k += 1;
    }
    Float::with_val(bits, u / v)
}

/// Euler's constant gamma = -psi(1), certified by agreement at two precisions.
pub fn euler_gamma(ctx: PrecisionContext) -> Result<Float> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Float>>> = OnceLock::new();
    let bits = ctx.bits();
    memo(&CACHE, bits, || {
        let lo = euler_gamma_bm(bits);
        let hi = euler_gamma_bm(2 * bits);
        let diff = Float::with_val(2 * bits, &hi - &lo).abs();
        if diff > (Float::with_val(2 * bits, &hi) >> (bits - 2)) {
            return Err(Error::NoConvergence("Euler gamma precision check failed".into()));
        }
        Ok(Float::with_val(bits, &hi))
    })
}

/// Splits a positive rational into base 1 or 1/2 plus a nonnegative integer shift.
fn split_point(p: &Rational) -> Option<(Rational, u64)> {
    if p.cmp0().is_le() {
        return None;
    }
    let half = Rational::from((1, 2));
    for base in [Rational::from(1), half] {
        let d = Rational::from(p - &base);
        if *d.denom() == 1 && d.cmp0().is_ge() {
            return d.numer().to_u64().map(|s| (base, s));
        }
    }
    None
}

/// psi^(l) at 1 or 1/2 from the zeta closed forms, shifted to p = base + s by
/// psi^(l)(x+1) = psi^(l)(x) + (-1)^l l! x^-(l+1).
pub fn polygamma_special(l: u32, point: &Rational, ctx: PrecisionContext) -> Result<Real> {
    let bits = ctx.bits();
    let wctx = PrecisionContext::new(bits + 64)?;
    let (base, shift) = split_point(point)
        .ok_or_else(|| Error::InvalidArgument(format!("polygamma_special supports 1/2 + k and 1 + k, got {point}")))?;
    let at_one = base == 1;
    let lf = Rational::from(factorial(u64::from(l)));
    let base_value = if l == 0 {
        if !at_one {
            return Err(Error::InvalidArgument("psi at 1/2 + k is not supported".into()));
        }
        -euler_gamma(wctx)?
    } else {
        let z = zeta_int(l + 1, wctx)?.value;
        let mut c = lf.clone();
        if !at_one {
            c *= Integer::from(Integer::u_pow_u(2, l + 1)) - 1u32;
        }
        if l % 2 == 0 {
            c = -c;
        }
        Float::with_val(bits + 64, z * &c)
    };
    let mut shift_sum = Rational::new();
    for i in 0..shift {
        let x = Rational::from(&base + i);
        shift_sum += x.powi(-(i64::from(l) + 1))?;
    }
    shift_sum *= lf;
    if l % 2 == 1 {
        shift_sum = -shift_sum;
    }
    Ok(Real(Float::with_val(bits, base_value + &shift_sum)))
}

/// B_0..=B_n (B_1 = -1/2).
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::from(1)];
    for m in 1..=n {
        let mut acc = Rational::new();
        for (j, bj) in b.iter().enumerate() {
            acc += Rational::from(bj * binomial(m as u64 + 1, j as u64));
        }
        b.push(-acc / Rational::from(m as u64 + 1));
    }
    b
}

/// psi^(l)(z) for positive rational z from the Stirling asymptotic series at
/// a large shifted argument, walked back with the recurrence. Independent of
/// the zeta closed forms.
pub fn polygamma_asymptotic(l: u32, z: &Rational, ctx: PrecisionContext) -> Result<Real> {
    if z.cmp0().is_le() {
        return Err(Error::InvalidArgument("polygamma_asymptotic needs z > 0".into()));
    }
    let bits = ctx.bits();
    let wp = bits + 64;
    let target = u64::from(bits.max(64));
    let shift = target.saturating_sub(z.to_f64().floor() as u64);
    let w = Rational::from(z + shift);
    let wf = Float::with_val(wp, &w);
    let kmax = (bits as usize) / 2 + 8;
    let bern = bernoulli_numbers(2 * kmax);
    let lf = factorial(u64::from(l));
    let eps = Float::with_val(wp, 1) >> wp;

    // sum_{k>=1} B_2k (2k+l-1)! / (2k)! w^-(2k+l), with l = 0 using 1/(2k).
    let mut series = Float::with_val(wp, 0);
    for k in 1..=kmax {
        let b = &bern[2 * k];
        let coef = if l == 0 {
            Rational::from(b / (2 * k as u64))
        } else {
            Rational::from(b * factorial(2 * k as u64 + u64::from(l) - 1)) / Rational::from(factorial(2 * k as u64))
        };
        let t = Float::with_val(wp, &coef) / Float::with_val(wp, (&wf).pow(2 * k as u32 + l));
        let small = Float::with_val(wp, t.abs_ref()) < Float::with_val(wp, series.abs_ref()) * &eps;
        series += t;
        if small {
            break;
        }
    }
    let value = if l == 0 {
        Float::with_val(wp, wf.ln_ref()) - Float::with_val(wp, 1) / (Float::with_val(wp, &wf) * 2u32) - series
    } else {
        // (-1)^(l+1) [ (l-1)!/w^l + l!/(2 w^(l+1)) + series ]
        let a = Float::with_val(wp, &factorial(u64::from(l) - 1)) / Float::with_val(wp, (&wf).pow(l));
        let b = Float::with_val(wp, &lf) / (Float::with_val(wp, (&wf).pow(l + 1)) * 2u32);
        let s = a + b + series;
        if l % 2 == 0 {
            -s
        } else {
            s
        }
    };
    // psi^(l)(z) = psi^(l)(z+s) - (-1)^l l! sum_{i<s} (z+i)^-(l+1)
    let mut back = Rational::new();
    for i in 0..shift {
        back += Rational::from(z + i).powi(-(i64::from(l) + 1))?;
    }
    back *= Rational::from(lf);
    if l % 2 == 1 {
        back = -back;
    }
    Ok(Real(Float::with_val(bits, value - back)))
}

/// MPFR's Euler constant and zeta, used only as oracles in tests.
pub fn euler_gamma_mpfr(bits: u32) -> Float {
    Float::with_val(bits, Constant::Euler)
}

pub fn zeta_mpfr(k: u32, bits: u32) -> Float {
    Float::with_val(bits, Float::zeta_u(k))
}
