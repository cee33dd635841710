//! Scalar arithmetic: exact rationals, multiprecision reals and rectangular
//! complex numbers, all behind the [`Field`] trait so that the evaluators can
//! be written once and run either exactly or at a chosen binary precision.
//!
//! Every real/complex value carries its precision in the MPFR significand;
//! all MPFR operations round to nearest-even.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::{Float, Integer};

use crate::error::{Error, Result};

pub use rug::Rational;

/// Binary significand precision shared by every inexact value of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    pub const MIN_BITS: u32 = 53;
    pub const DEFAULT_BITS: u32 = 128;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::InvalidArgument(format!(
                "precision must be at least {} bits, got {bits}",
                Self::MIN_BITS
            )));
        }
        Ok(PrecisionContext { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Context with twice the precision, used by the two-precision error rule.
    pub fn doubled(self) -> Self {
        PrecisionContext {
            bits: self.bits * 2,
        }
    }

    /// Context with `bits * num / den` bits (never below the current one).
    pub fn scaled(self, num: u32, den: u32) -> Self {
        PrecisionContext {
            bits: (self.bits * num).div_ceil(den).max(self.bits),
        }
    }

    /// Number of significant decimal digits used when serializing: ceil(bits * 0.301) + 2.
    pub fn decimal_digits(self) -> usize {
        (f64::from(self.bits) * 0.301).ceil() as usize + 2
    }

    /// 2^-bits as a float at this precision.
    pub fn epsilon(self) -> Float {
        Float::with_val(self.bits, 1) >> self.bits
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext {
            bits: Self::DEFAULT_BITS,
        }
    }
}

/// Build `p/q` in lowest terms with a positive denominator.
pub fn rational_normalize(p: impl Into<Integer>, q: impl Into<Integer>) -> Result<Rational> {
    let (p, q) = (p.into(), q.into());
    if q == 0 {
        return Err(Error::InvalidArgument("zero denominator".into()));
    }
    Ok(Rational::from((p, q)))
}

/// Always "p/q", including integers ("3/1").
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parse "p/q" or "p".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: Integer = p.trim().parse().map_err(|_| bad())?;
            let q: Integer = q.trim().parse().map_err(|_| bad())?;
            rational_normalize(p, q)
        }
        None => {
            let p: Integer = s.parse().map_err(|_| bad())?;
            Ok(Rational::from(p))
        }
    }
}

fn parse_float(s: &str, bits: u32) -> Result<Float> {
    let s = s.trim();
    if s.contains('/') {
        let q = parse_rational(s)?;
        return Ok(Float::with_val(bits, &q));
    }
    let parsed = Float::parse(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    let v = Float::with_val(bits, parsed);
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value {s:?}")));
    }
    Ok(v)
}

/// Decimal rendering with `digits` significant digits (deterministic).
pub fn format_float(v: &Float, digits: usize) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.to_string_radix(10, Some(digits))
}

// ---------------------------------------------------------------------------
// The Field abstraction
// ---------------------------------------------------------------------------

/// Arithmetic needed by the evaluators. Implemented exactly by [`Rational`]
/// and with rounding by [`Real`] and [`Complex`].
///
/// Constructors take `&self` as a prototype so inexact values inherit the
/// precision of the operand they are combined with.
pub trait Field:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64_like(&self, v: i64) -> Self;
    fn from_integer_like(&self, v: &Integer) -> Self;
    fn from_rational_like(&self, v: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn try_recip(&self) -> Result<Self>;
    fn into_scalar(self) -> Scalar;

    /// True when arithmetic on this type never rounds.
    fn is_exact() -> bool;

    fn zero_like(&self) -> Self {
        self.from_i64_like(0)
    }

    fn one_like(&self) -> Self {
        self.from_i64_like(1)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.clone() * rhs.try_recip()?)
    }

    fn add_i64(&self, v: i64) -> Self {
        self.clone() + self.from_i64_like(v)
    }

    fn mul_i64(&self, v: i64) -> Self {
        self.clone() * self.from_i64_like(v)
    }

    fn mul_integer(&self, v: &Integer) -> Self {
        self.clone() * self.from_integer_like(v)
    }

    /// a^k by binary powering; a negative exponent inverts first.
    fn powi(&self, k: i64) -> Result<Self> {
        let base = if k < 0 {
            self.try_recip()?
        } else {
            self.clone()
        };
        let mut e = k.unsigned_abs();
        let mut acc = self.one_like();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq.clone();
            }
            e >>= 1;
            if e > 0 {
                sq = sq.clone() * sq;
            }
        }
        Ok(acc)
    }
}

/// Extra operations on rounded values (quadrature, series acceleration).
pub trait FloatField: Field {
    fn prec(&self) -> u32;
    fn scale(&self, w: &Float) -> Self;
    fn modulus(&self) -> Float;
    fn parts(&self) -> (Float, Float);
    /// Rebuild from parts; real values ignore `im`.
    fn from_parts_like(&self, re: Float, im: Float) -> Self;
    fn exp(&self) -> Self;
}

impl Field for Rational {
    fn from_i64_like(&self, v: i64) -> Self {
        Rational::from(v)
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        Rational::from(v)
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        v.clone()
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn try_recip(&self) -> Result<Self> {
        if Field::is_zero(self) {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational::from(self.recip_ref()))
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Rational(self)
    }
    fn is_exact() -> bool {
        true
    }
}

/// Multiprecision real; its precision is that of the wrapped MPFR value.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Real(pub Float);

impl Real {
    pub fn from_rational(q: &Rational, ctx: PrecisionContext) -> Real {
        Real(Float::with_val(ctx.bits(), q))
    }

    pub fn from_f64(v: f64, ctx: PrecisionContext) -> Real {
        Real(Float::with_val(ctx.bits(), v))
    }

    pub fn float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn context(&self) -> PrecisionContext {
        PrecisionContext {
            bits: self.0.prec(),
        }
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        Real(self.0 + rhs.0)
    }
}
impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        Real(self.0 - rhs.0)
    }
}
impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        Real(self.0 * rhs.0)
    }
}
impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl Field for Real {
    fn from_i64_like(&self, v: i64) -> Self {
        Real(Float::with_val(self.0.prec(), v))
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        Real(Float::with_val(self.0.prec(), v))
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        Real(Float::with_val(self.0.prec(), v))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn try_recip(&self) -> Result<Self> {
        if self.0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Real(Float::with_val(self.0.prec(), self.0.recip_ref())))
    }
    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Real(Float::with_val(self.0.prec(), &self.0 / &rhs.0)))
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Real(self)
    }
    fn is_exact() -> bool {
        false
    }
}

impl FloatField for Real {
    fn prec(&self) -> u32 {
        self.0.prec()
    }
    fn scale(&self, w: &Float) -> Self {
        Real(Float::with_val(self.0.prec(), &self.0 * w))
    }
    fn modulus(&self) -> Float {
        Float::with_val(self.0.prec(), self.0.abs_ref())
    }
    fn parts(&self) -> (Float, Float) {
        (self.0.clone(), Float::new(self.0.prec()))
    }
    fn from_parts_like(&self, re: Float, _im: Float) -> Self {
        Real(Float::with_val(self.0.prec(), re))
    }
    fn exp(&self) -> Self {
        Real(Float::with_val(self.0.prec(), self.0.exp_ref()))
    }
}

/// Rectangular complex number with both parts at the same precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Complex {
        let prec = re.prec().max(im.prec());
        Complex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_real(re: Float) -> Complex {
        let im = Float::new(re.prec());
        Complex { re, im }
    }

    pub fn context(&self) -> PrecisionContext {
        PrecisionContext {
            bits: self.re.prec(),
        }
    }

    /// Principal logarithm; the branch cut runs along the negative real axis.
    pub fn ln(&self) -> Complex {
        let prec = self.re.prec();
        let r = Float::with_val(prec, self.re.hypot_ref(&self.im));
        let arg = Float::with_val(prec, self.im.atan2_ref(&self.re));
        Complex {
            re: r.ln(),
            im: arg,
        }
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, rhs: Complex) -> Complex {
        Complex {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}
impl Sub for Complex {
    type Output = Complex;
    fn sub(self, rhs: Complex) -> Complex {
        Complex {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}
impl Mul for Complex {
    type Output = Complex;
    fn mul(self, rhs: Complex) -> Complex {
        let prec = self.re.prec();
        let ac = Float::with_val(prec, &self.re * &rhs.re);
        let bd = Float::with_val(prec, &self.im * &rhs.im);
        let ad = Float::with_val(prec, &self.re * &rhs.im);
        let bc = Float::with_val(prec, &self.im * &rhs.re);
        Complex {
            re: ac - bd,
            im: ad + bc,
        }
    }
}
impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Field for Complex {
    fn from_i64_like(&self, v: i64) -> Self {
        Complex::from_real(Float::with_val(self.re.prec(), v))
    }
    fn from_integer_like(&self, v: &Integer) -> Self {
        Complex::from_real(Float::with_val(self.re.prec(), v))
    }
    fn from_rational_like(&self, v: &Rational) -> Self {
        Complex::from_real(Float::with_val(self.re.prec(), v))
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn try_recip(&self) -> Result<Self> {
        if Field::is_zero(self) {
            return Err(Error::DivisionByZero);
        }
        let prec = self.re.prec();
        let norm = Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref());
        Ok(Complex {
            re: Float::with_val(prec, &self.re / &norm),
            im: -Float::with_val(prec, &self.im / &norm),
        })
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Complex(self)
    }
    fn is_exact() -> bool {
        false
    }
}

impl FloatField for Complex {
    fn prec(&self) -> u32 {
        self.re.prec()
    }
    fn scale(&self, w: &Float) -> Self {
        let prec = self.re.prec();
        Complex {
            re: Float::with_val(prec, &self.re * w),
            im: Float::with_val(prec, &self.im * w),
        }
    }
    fn modulus(&self) -> Float {
        Float::with_val(self.re.prec(), self.re.hypot_ref(&self.im))
    }
    fn parts(&self) -> (Float, Float) {
        (self.re.clone(), self.im.clone())
    }
    fn from_parts_like(&self, re: Float, im: Float) -> Self {
        let prec = self.re.prec();
        Complex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }
    fn exp(&self) -> Self {
        let prec = self.re.prec();
        let mag = Float::with_val(prec, self.re.exp_ref());
        let (s, c) = self.im.clone().sin_cos(Float::new(prec));
        Complex {
            re: Float::with_val(prec, &mag * &c),
            im: Float::with_val(prec, &mag * &s),
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar: the tagged value handed across module and process boundaries
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(Rational),
    Real(Real),
    Complex(Complex),
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Rational(q)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Rational(Rational::from(v))
    }
}

impl Scalar {
    pub fn rational(p: i64, q: i64) -> Result<Scalar> {
        Ok(Scalar::Rational(rational_normalize(p, q)?))
    }

    /// Parse "p/q", "p", a decimal, "re+imi" or "re,im". Inexact forms are
    /// rounded to `ctx`.
    pub fn parse(s: &str, ctx: PrecisionContext) -> Result<Scalar> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        if let Some((re, im)) = s.split_once(',') {
            let re = parse_float(re, ctx.bits())?;
            let im = parse_float(im, ctx.bits())?;
            return Ok(Scalar::Complex(Complex { re, im }));
        }
        if let Some(body) = s.strip_suffix('i') {
            // split at the last sign that is not an exponent sign
            let bytes = body.as_bytes();
            let mut split = None;
            for i in (1..bytes.len()).rev() {
                if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                    split = Some(i);
                    break;
                }
            }
            let (re, im) = match split {
                Some(i) => (&body[..i], &body[i..]),
                None => ("0", body),
            };
            let im = match im {
                "+" | "" => "1",
                "-" => "-1",
                other => other,
            };
            let re = parse_float(re, ctx.bits())?;
            let im = parse_float(im.trim_start_matches('+'), ctx.bits())?;
            return Ok(Scalar::Complex(Complex { re, im }));
        }
        if let Ok(q) = parse_rational(s) {
            return Ok(Scalar::Rational(q));
        }
        Ok(Scalar::Real(Real(parse_float(s, ctx.bits())?)))
    }

    pub fn context(&self) -> Option<PrecisionContext> {
        match self {
            Scalar::Rational(_) => None,
            Scalar::Real(r) => Some(r.context()),
            Scalar::Complex(c) => Some(c.context()),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Rational(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(q) => Field::is_zero(q),
            Scalar::Real(r) => r.0.is_zero(),
            Scalar::Complex(c) => Field::is_zero(c),
        }
    }

    /// Real part as a float of the given precision.
    pub fn re(&self, bits: u32) -> Float {
        match self {
            Scalar::Rational(q) => Float::with_val(bits, q),
            Scalar::Real(r) => Float::with_val(bits, &r.0),
            Scalar::Complex(c) => Float::with_val(bits, &c.re),
        }
    }

    pub fn im(&self, bits: u32) -> Float {
        match self {
            Scalar::Complex(c) => Float::with_val(bits, &c.im),
            _ => Float::new(bits),
        }
    }

    pub fn re_f64(&self) -> f64 {
        self.re(64).to_f64()
    }

    pub fn to_real(&self, bits: u32) -> Option<Real> {
        match self {
            Scalar::Complex(_) => None,
            other => Some(Real(other.re(bits))),
        }
    }

    pub fn to_complex(&self, bits: u32) -> Complex {
        Complex {
            re: self.re(bits),
            im: self.im(bits),
        }
    }

    /// |self| as a float at `bits`.
    pub fn abs(&self, bits: u32) -> Float {
        match self {
            Scalar::Complex(c) => Float::with_val(bits, c.re.hypot_ref(&c.im)),
            other => other.re(bits).abs(),
        }
    }

    /// The value minus an integer, if the value is an integer.
    pub fn as_integer(&self) -> Option<Integer> {
        match self {
            Scalar::Rational(q) if *q.denom() == 1 => Some(q.numer().clone()),
            Scalar::Real(r) if r.0.is_integer() => r.0.to_integer(),
            Scalar::Complex(c) if c.im.is_zero() && c.re.is_integer() => c.re.to_integer(),
            _ => None,
        }
    }

    /// Returns the shared context of two operands; rationals adapt to the other side.
    fn joint_context(&self, rhs: &Scalar) -> Result<Option<PrecisionContext>> {
        match (self.context(), rhs.context()) {
            (Some(a), Some(b)) if a != b => Err(Error::ContextMismatch(a.bits(), b.bits())),
            (Some(a), _) => Ok(Some(a)),
            (None, b) => Ok(b),
        }
    }

    fn binary(
        &self,
        rhs: &Scalar,
        q: impl Fn(&Rational, &Rational) -> Result<Rational>,
        r: impl Fn(Real, Real) -> Result<Real>,
        c: impl Fn(Complex, Complex) -> Result<Complex>,
    ) -> Result<Scalar> {
        let ctx = self.joint_context(rhs)?;
        match (self, rhs, ctx) {
            (Scalar::Rational(a), Scalar::Rational(b), _) => Ok(Scalar::Rational(q(a, b)?)),
            (Scalar::Complex(_), _, Some(ctx)) | (_, Scalar::Complex(_), Some(ctx)) => Ok(Scalar::Complex(c(
                self.to_complex(ctx.bits()),
                rhs.to_complex(ctx.bits()),
            )?)),
            (_, _, Some(ctx)) => Ok(Scalar::Real(r(
                Real(self.re(ctx.bits())),
                Real(rhs.re(ctx.bits())),
            )?)),
            _ => unreachable!("non-rational scalar without context"),
        }
    }

    pub fn add(&self, rhs: &Scalar) -> Result<Scalar> {
        self.binary(
            rhs,
            |a, b| Ok(Rational::from(a + b)),
            |a, b| Ok(a + b),
            |a, b| Ok(a + b),
        )
    }

    pub fn sub(&self, rhs: &Scalar) -> Result<Scalar> {
        self.binary(
            rhs,
            |a, b| Ok(Rational::from(a - b)),
            |a, b| Ok(a - b),
            |a, b| Ok(a - b),
        )
    }

    pub fn mul(&self, rhs: &Scalar) -> Result<Scalar> {
        self.binary(
            rhs,
            |a, b| Ok(Rational::from(a * b)),
            |a, b| Ok(a * b),
            |a, b| Ok(a * b),
        )
    }

    pub fn div(&self, rhs: &Scalar) -> Result<Scalar> {
        self.binary(rhs, |a, b| a.try_div(b), |a, b| a.try_div(&b), |a, b| a.try_div(&b))
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(q) => Scalar::Rational(Rational::from(-q)),
            Scalar::Real(r) => Scalar::Real(-r.clone()),
            Scalar::Complex(c) => Scalar::Complex(-c.clone()),
        }
    }

    pub fn add_i64(&self, k: i64) -> Scalar {
        match self {
            Scalar::Rational(q) => Scalar::Rational(Rational::from(q + k)),
            Scalar::Real(r) => Scalar::Real(r.add_i64(k)),
            Scalar::Complex(c) => Scalar::Complex(c.add_i64(k)),
        }
    }

    /// Distance |self - other| as a float at `bits`.
    pub fn distance(&self, other: &Scalar, bits: u32) -> Float {
        let a = self.to_complex(bits);
        let b = other.to_complex(bits);
        (a - b).modulus()
    }

    /// Renders rationals as "p/q", reals with `digits` significant digits and
    /// complex values as "re+imi".
    pub fn render(&self, digits: usize) -> String {
        match self {
            Scalar::Rational(q) => format_rational(q),
            Scalar::Real(r) => format_float(&r.0, digits),
            Scalar::Complex(c) => {
                let im = format_float(&c.im, digits);
                if im.starts_with('-') {
                    format!("{}{}i", format_float(&c.re, digits), im)
                } else {
                    format!("{}+{}i", format_float(&c.re, digits), im)
                }
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self
            .context()
            .map(PrecisionContext::decimal_digits)
            .unwrap_or(0);
        f.write_str(&self.render(digits))
    }
}

/// a^k; exact for rationals. A zero base with a negative exponent is an error.
pub fn scalar_pow_int(a: &Scalar, k: i64) -> Result<Scalar> {
    match a {
        Scalar::Rational(q) => Ok(Scalar::Rational(q.powi(k)?)),
        Scalar::Real(r) => Ok(Scalar::Real(r.powi(k)?)),
        Scalar::Complex(c) => Ok(Scalar::Complex(c.powi(k)?)),
    }
}

/// Correctly rounded conversion to `ctx`; rationals round once.
pub fn round_to_context(a: &Scalar, ctx: PrecisionContext) -> Scalar {
    let bits = ctx.bits();
    match a {
        Scalar::Rational(q) => Scalar::Real(Real(Float::with_val(bits, q))),
        Scalar::Real(r) => Scalar::Real(Real(Float::with_val(bits, &r.0))),
        Scalar::Complex(c) => Scalar::Complex(Complex {
            re: Float::with_val(bits, &c.re),
            im: Float::with_val(bits, &c.im),
        }),
    }
}

/// pi by the Gauss-Legendre (AGM) iteration.
pub fn pi(ctx: PrecisionContext) -> Float {
    let wp = ctx.bits() + 32;
    let mut a = Float::with_val(wp, 1);
    let mut b = Float::with_val(wp, 0.5).sqrt();
    let mut t = Float::with_val(wp, 0.25);
    let mut p = Float::with_val(wp, 1);
    let tiny = Float::with_val(wp, 1) >> (wp - 4);
    loop {
        let an = Float::with_val(wp, &a + &b) / 2u32;
        let bn = Float::with_val(wp, &a * &b).sqrt();
        let d = Float::with_val(wp, &a - &an);
        t -= Float::with_val(wp, &p * d.square());
        p *= 2u32;
        let done = Float::with_val(wp, &an - &bn).abs() < tiny;
        a = an;
        b = bn;
        if done {
            break;
        }
    }
    let s = Float::with_val(wp, &a + &b);
    let num = s.square();
    Float::with_val(ctx.bits(), num / (t * 4u32))
}

/// MPFR's pi, used only as an independent oracle in tests.
pub fn pi_mpfr(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

/// Relative difference |a-b|/|b| (|a-b| when b = 0) as f64.
pub fn relative_difference(a: &Scalar, b: &Scalar, bits: u32) -> f64 {
    let d = a.distance(b, bits);
    let m = b.abs(bits);
    if m.is_zero() {
        d.to_f64()
    } else {
        (d / m).to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        rational_normalize(p, d).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(format_rational(&q(2, 4)), "1/2");
        assert_eq!(format_rational(&q(3, -6)), "-1/2");
        assert_eq!(format_rational(&q(0, 7)), "0/1");
        assert!(matches!(rational_normalize(1, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pow_examples() {
        let half = Scalar::Rational(q(1, 2));
        assert_eq!(scalar_pow_int(&half, 3).unwrap(), Scalar::Rational(q(1, 8)));
        assert_eq!(scalar_pow_int(&half, 0).unwrap(), Scalar::Rational(q(1, 1)));
        let a = Scalar::Rational(q(3, 2));
        assert_eq!(scalar_pow_int(&a, -2).unwrap(), Scalar::Rational(q(4, 9)));
        let zero = Scalar::from(0);
        assert_eq!(scalar_pow_int(&zero, -1), Err(Error::DivisionByZero));
    }

    #[test]
    fn rounding_contract() {
        let ctx53 = PrecisionContext::new(53).unwrap();
        let third = round_to_context(&Scalar::Rational(q(1, 3)), ctx53);
        let v = third.re(53);
        assert_eq!(v.to_f64(), 1.0 / 3.0);

        let half = round_to_context(&Scalar::Rational(q(1, 2)), PrecisionContext::new(200).unwrap());
        assert_eq!(half.re(200), 0.5);

        // |v - 11/18| <= 2^-128 * 11/18, checked against the exact rational
        let ctx = PrecisionContext::new(128).unwrap();
        let r = round_to_context(&Scalar::Rational(q(11, 18)), ctx);
        let exact = q(11, 18);
        let v = Rational::from(r.re(128).to_rational().unwrap());
        let err = Rational::from(&v - &exact).abs();
        let bound = Rational::from(&exact * Rational::from((1, Integer::from(Integer::u_pow_u(2, 128)))));
        assert!(err <= bound);

        // idempotent
        assert_eq!(round_to_context(&r, ctx), r);
    }

    #[test]
    fn parse_forms() {
        let ctx = PrecisionContext::default();
        assert_eq!(Scalar::parse("3/6", ctx).unwrap(), Scalar::Rational(q(1, 2)));
        assert_eq!(Scalar::parse("-7", ctx).unwrap(), Scalar::Rational(q(-7, 1)));
        assert!(matches!(Scalar::parse("0.25", ctx).unwrap(), Scalar::Real(_)));
        let c = Scalar::parse("3+2i", ctx).unwrap();
        assert_eq!(c.re(64), 3);
        assert_eq!(c.im(64), 2);
        let c = Scalar::parse("1.5e-1-2.5i", ctx).unwrap();
        assert_eq!(c.im(64), -2.5);
        let c = Scalar::parse("3,-4", ctx).unwrap();
        assert_eq!(c.abs(64), 5);
        assert!(Scalar::parse("x", ctx).is_err());
        assert!(Scalar::parse("1/0", ctx).is_err());
    }

    #[test]
    fn mixed_context_rejected() {
        let a = Scalar::parse("0.5", PrecisionContext::new(64).unwrap()).unwrap();
        let b = Scalar::parse("0.5", PrecisionContext::new(128).unwrap()).unwrap();
        assert_eq!(a.add(&b), Err(Error::ContextMismatch(64, 128)));
        // rationals adopt the other side's context
        let s = a.add(&Scalar::from(1)).unwrap();
        assert_eq!(s.context().unwrap().bits(), 64);
    }

    #[test]
    fn complex_arithmetic() {
        let ctx = PrecisionContext::default();
        let z = Scalar::parse("3+4i", ctx).unwrap();
        let w = z.mul(&z).unwrap(); // -7 + 24i
        assert_eq!(w.re(64), -7);
        assert_eq!(w.im(64), 24);
        let r = Scalar::from(1).div(&z).unwrap(); // (3 - 4i)/25
        assert!((r.re(64).to_f64() - 0.12).abs() < 1e-18);
        assert!((r.im(64).to_f64() + 0.16).abs() < 1e-18);
        let l = z.to_complex(128).ln();
        assert!((l.re.to_f64() - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn agm_pi_matches_mpfr() {
        for bits in [64, 128, 512] {
            let ctx = PrecisionContext::new(bits).unwrap();
            let diff = Float::with_val(bits, pi(ctx) - pi_mpfr(bits)).abs();
            assert!(diff <= (Float::with_val(bits, 4) >> bits), "bits {bits}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rat() -> impl Strategy<Value = Rational> {
            (-1000i64..1000, 1i64..1000).prop_map(|(p, d)| q(p, d))
        }

        proptest! {
            #[test]
            fn rational_field_is_exact(a in rat(), b in rat()) {
                let s = Rational::from(&a + &b);
                prop_assert_eq!(Rational::from(&s - &b), a.clone());
                prop_assert!(Field::is_zero(&(a.clone() + (-a.clone()))));
                if !Field::is_zero(&b) {
                    let p = a.clone() * b.clone();
                    prop_assert_eq!(p.try_div(&b).unwrap(), a.clone());
                }
                prop_assert!(*s.denom() > 0);
                prop_assert_eq!(Integer::from(s.numer().gcd_ref(s.denom())), 1);
            }

            #[test]
            fn pow_is_additive_in_exponent(a in rat(), m in -6i64..6, n in -6i64..6) {
                prop_assume!(!Field::is_zero(&a));
                let lhs = a.powi(m + n).unwrap();
                let rhs = a.powi(m).unwrap() * a.powi(n).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn rounding_is_idempotent(a in rat(), bits in 53u32..300) {
                let ctx = PrecisionContext::new(bits).unwrap();
                let once = round_to_context(&Scalar::Rational(a), ctx);
                prop_assert_eq!(round_to_context(&once, ctx), once);
            }
        }
    }
}
