//! Evaluation methods for S(x, N, m) = sum_{k=0..N} C(N,k) (-1)^k / (x+k)^m.

mod exact;
mod extrapolate;
mod series;
mod validate;

pub use exact::{
    beta_identity, bell_form, direct_sum, hypergeometric_sum, lemma1_derivatives, recursion_a,
    recursion_a_printed_step, recursion_b,
};
pub(crate) use extrapolate::{accelerate, Acceleration, TailShape};
pub use series::{
    series_bell_harmonic, series_bell_harmonic_term, series_stirling1, series_stirling1_term,
    series_stirling2,
};
pub use validate::{
    cancellation_profile, cross_validate, judge, lemma1_finite_difference_check, reference_method,
    special_case_check, CancellationProfile, CrossValidationEntry, CrossValidationReport, EntryStatus,
    SpecialCaseReport,
};

use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{Complex, PrecisionContext, Real, Scalar};
use crate::quadrature::{s_quadrature, QuadForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "hypergeometric")]
    Hypergeometric,
    #[serde(rename = "beta-identity")]
    BetaIdentity,
    #[serde(rename = "bell")]
    Bell,
    #[serde(rename = "recursion-a")]
    RecursionA,
    #[serde(rename = "recursion-b")]
    RecursionB,
    #[serde(rename = "series-stirling2")]
    SeriesStirling2,
    #[serde(rename = "series-stirling1")]
    SeriesStirling1,
    #[serde(rename = "series-bell-harmonic")]
    SeriesBellHarmonic,
    #[serde(rename = "quadrature-6")]
    Quadrature6,
    #[serde(rename = "quadrature-7")]
    Quadrature7,
    #[serde(rename = "quadrature-20")]
    Quadrature20,
    #[serde(rename = "two-param-series")]
    TwoParamSeries,
    #[serde(rename = "two-param-quadrature-30")]
    TwoParamQuadrature30,
    #[serde(rename = "two-param-quadrature-34")]
    TwoParamQuadrature34,
    #[serde(rename = "two-param-quadrature-36")]
    TwoParamQuadrature36,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Direct,
        Method::Hypergeometric,
        Method::BetaIdentity,
        Method::Bell,
        Method::RecursionA,
        Method::RecursionB,
        Method::SeriesStirling2,
        Method::SeriesStirling1,
        Method::SeriesBellHarmonic,
        Method::Quadrature6,
        Method::Quadrature7,
        Method::Quadrature20,
    ];

    /// Evaluators of the two-parameter sums; not part of [`Method::ALL`].
    pub const TWO_PARAM: [Method; 4] = [
        Method::TwoParamSeries,
        Method::TwoParamQuadrature30,
        Method::TwoParamQuadrature34,
        Method::TwoParamQuadrature36,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Hypergeometric => "hypergeometric",
            Method::BetaIdentity => "beta-identity",
            Method::Bell => "bell",
            Method::RecursionA => "recursion-a",
            Method::RecursionB => "recursion-b",
            Method::SeriesStirling2 => "series-stirling2",
            Method::SeriesStirling1 => "series-stirling1",
            Method::SeriesBellHarmonic => "series-bell-harmonic",
            Method::Quadrature6 => "quadrature-6",
            Method::Quadrature7 => "quadrature-7",
            Method::Quadrature20 => "quadrature-20",
            Method::TwoParamSeries => "two-param-series",
            Method::TwoParamQuadrature30 => "two-param-quadrature-30",
            Method::TwoParamQuadrature34 => "two-param-quadrature-34",
            Method::TwoParamQuadrature36 => "two-param-quadrature-36",
        }
    }

    /// Methods that return exact rationals for rational x.
    pub fn is_exact_capable(self) -> bool {
        matches!(
            self,
            Method::Direct
                | Method::Hypergeometric
                | Method::BetaIdentity
                | Method::Bell
                | Method::RecursionA
                | Method::RecursionB
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .chain(Method::TWO_PARAM)
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

/// The triple (x, N, m); construction rejects x in {0, -1, ..., -N}.
#[derive(Clone, Debug, PartialEq)]
pub struct SumParams {
    pub x: Scalar,
    pub n: u64,
    pub m: u32,
}

impl SumParams {
    pub fn new(x: Scalar, n: u64, m: u32) -> Result<Self> {
        if let Some(k) = x.as_integer() {
            if k <= 0 && k >= -(n as i64) {
                return Err(Error::Pole(format!("x = {k} lies in {{0, -1, ..., -{n}}}")));
            }
        }
        Ok(SumParams { x, n, m })
    }

    pub fn rational(p: i64, q: i64, n: u64, m: u32) -> Result<Self> {
        SumParams::new(Scalar::rational(p, q)?, n, m)
    }

    pub fn re_x(&self) -> f64 {
        self.x.re_f64()
    }

    fn require_paper_range(&self, method: Method) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::InvalidArgument(format!("{method} needs N >= 1 and m >= 1")));
        }
        Ok(())
    }

    fn require_positive_re(&self, method: Method, bound: f64) -> Result<()> {
        if self.x.re(64) <= bound {
            return Err(Error::InvalidArgument(format!("{method} needs Re x > {bound}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub value: Scalar,
    pub method: Method,
    pub exact: bool,
    /// Absolute error bound; absent for exact results.
    pub error_bound: Option<Float>,
    pub terms_used: u64,
    pub context: Option<PrecisionContext>,
}

impl EvalResult {
    pub fn exact(value: Scalar, method: Method, terms_used: u64) -> Self {
        EvalResult {
            value,
            method,
            exact: true,
            error_bound: None,
            terms_used,
            context: None,
        }
    }

    /// Inexact result rounded to `ctx`; the bound is widened by the final rounding.
    pub fn inexact(value: Scalar, error: Float, method: Method, terms_used: u64, ctx: PrecisionContext) -> Self {
        let value = crate::numeric::round_to_context(&value, ctx);
        let rounding = value.abs(ctx.bits()) >> (ctx.bits() - 1);
        let bound = Float::with_val(ctx.bits(), error.abs() + rounding);
        EvalResult {
            value,
            method,
            exact: false,
            error_bound: Some(bound),
            terms_used,
            context: Some(ctx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub ctx: PrecisionContext,
    /// Relative tolerance for series and quadrature methods.
    pub tol: f64,
    pub max_terms: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            ctx: PrecisionContext::default(),
            tol: 1e-25,
            max_terms: 2_000_000,
        }
    }
}

impl EvalOptions {
    pub fn new(ctx: PrecisionContext, tol: f64) -> Self {
        EvalOptions {
            ctx,
            tol,
            ..Default::default()
        }
    }
}

/// Runs `run` exactly for rational x; otherwise at p and 2p bits, keeping the
/// 2p value and the difference as error estimate.
fn exact_or_two_precision(
    p: &SumParams,
    method: Method,
    opts: &EvalOptions,
    run_q: impl Fn(&rug::Rational) -> Result<(rug::Rational, u64)>,
    run_r: impl Fn(&Real) -> Result<(Real, u64)>,
    run_c: impl Fn(&Complex) -> Result<(Complex, u64)>,
) -> Result<EvalResult> {
    let ctx = opts.ctx;
    let (lo_bits, hi_bits) = (ctx.bits() + 32, 2 * ctx.bits() + 32);
    match &p.x {
        Scalar::Rational(q) => {
            let (v, terms) = run_q(q)?;
            Ok(EvalResult::exact(Scalar::Rational(v), method, terms))
        }
        Scalar::Real(_) => {
            let (lo, terms) = run_r(&p.x.to_real(lo_bits).expect("real"))?;
            let (hi, _) = run_r(&p.x.to_real(hi_bits).expect("real"))?;
            let diff = Float::with_val(hi_bits, &hi.0 - &lo.0).abs();
            Ok(EvalResult::inexact(Scalar::Real(hi), diff, method, terms, ctx))
        }
        Scalar::Complex(_) => {
            let (lo, terms) = run_c(&p.x.to_complex(lo_bits))?;
            let (hi, _) = run_c(&p.x.to_complex(hi_bits))?;
            let diff = Scalar::Complex(hi.clone()).distance(&Scalar::Complex(lo), hi_bits);
            Ok(EvalResult::inexact(Scalar::Complex(hi), diff, method, terms, ctx))
        }
    }
}

macro_rules! generic_exact {
    ($p:expr, $method:expr, $opts:expr, |$x:ident| $body:expr) => {
        exact_or_two_precision(
            $p,
            $method,
            $opts,
            |$x: &rug::Rational| $body,
            |$x: &Real| $body,
            |$x: &Complex| $body,
        )
    };
}

/// Evaluates S(x, N, m) by `method`.
pub fn evaluate(p: &SumParams, method: Method, opts: &EvalOptions) -> Result<EvalResult> {
    let (n, m) = (p.n, p.m);
    match method {
        Method::Direct => generic_exact!(p, method, opts, |x| direct_sum(x, n, m).map(|v| (v, n + 1))),
        Method::Hypergeometric => {
            p.require_paper_range(method)?;
            generic_exact!(p, method, opts, |x| hypergeometric_sum(x, n, m).map(|v| (v, n + 1)))
        }
        Method::BetaIdentity => {
            if m != 1 {
                return Err(Error::InvalidArgument("beta-identity evaluates the m = 1 sum only".into()));
            }
            generic_exact!(p, method, opts, |x| beta_identity(x, n).map(|v| (v, n + 1)))
        }
        Method::Bell => {
            if m < 1 {
                return Err(Error::InvalidArgument("bell needs m >= 1".into()));
            }
            generic_exact!(p, method, opts, |x| bell_form(x, n, m).map(|v| (v, n + 1 + u64::from(m) * u64::from(m))))
        }
        Method::RecursionA => {
            if m < 1 {
                return Err(Error::InvalidArgument("recursion-a needs m >= 1".into()));
            }
            p.require_positive_re(method, 0.0)?;
            generic_exact!(p, method, opts, |x| recursion_a(x, n, m))
        }
        Method::RecursionB => {
            if m < 1 {
                return Err(Error::InvalidArgument("recursion-b needs m >= 1".into()));
            }
            p.require_positive_re(method, 1.0)?;
            generic_exact!(p, method, opts, |x| recursion_b(x, n, m))
        }
        Method::SeriesStirling2 => {
            p.require_paper_range(method)?;
            p.require_positive_re(method, 0.0)?;
            series_stirling2(p, opts)
        }
        Method::SeriesStirling1 => {
            p.require_paper_range(method)?;
            p.require_positive_re(method, 0.0)?;
            series_stirling1(p, opts)
        }
        Method::SeriesBellHarmonic => {
            p.require_paper_range(method)?;
            if m < 2 {
                return Err(Error::InvalidArgument("series-bell-harmonic needs m >= 2".into()));
            }
            p.require_positive_re(method, 0.0)?;
            series_bell_harmonic(p, opts)
        }
        Method::TwoParamSeries
        | Method::TwoParamQuadrature30
        | Method::TwoParamQuadrature34
        | Method::TwoParamQuadrature36 => Err(Error::InvalidArgument(format!(
            "{method} evaluates the two-parameter sums; use the extensions module"
        ))),
        Method::Quadrature6 | Method::Quadrature7 | Method::Quadrature20 => {
            p.require_paper_range(method)?;
            p.require_positive_re(method, 0.0)?;
            let form = match method {
                Method::Quadrature6 => QuadForm::Eq6,
                Method::Quadrature7 => QuadForm::Eq7,
                _ => QuadForm::Eq20,
            };
            s_quadrature(p, form, opts.tol, opts.ctx)
        }
    }
}

/// "auto": the Bell form for rational x (checked against the direct sum when
/// N <= 64), the direct sum at two precisions otherwise.
pub fn evaluate_auto(p: &SumParams, opts: &EvalOptions) -> Result<EvalResult> {
    if p.x.is_exact() && p.m >= 1 {
        let r = evaluate(p, Method::Bell, opts)?;
        if p.n <= 64 {
            let check = evaluate(p, Method::Direct, opts)?;
            if check.value != r.value {
                return Err(Error::identity("bell vs direct", format!("x={}, N={}, m={}", p.x, p.n, p.m)));
            }
        }
        return Ok(r);
    }
    evaluate(p, Method::Direct, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ids_round_trip() {
        for m in Method::ALL.into_iter().chain(Method::TWO_PARAM) {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.id()));
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn pole_rejected() {
        assert!(matches!(SumParams::rational(0, 1, 3, 1), Err(Error::Pole(_))));
        assert!(matches!(SumParams::rational(-3, 1, 3, 1), Err(Error::Pole(_))));
        assert!(SumParams::rational(-4, 1, 3, 1).is_ok());
        assert!(SumParams::rational(-1, 2, 3, 1).is_ok());
    }

    #[test]
    fn auto_uses_bell_for_rationals() {
        let p = SumParams::rational(1, 1, 2, 2).unwrap();
        let r = evaluate_auto(&p, &EvalOptions::default()).unwrap();
        assert_eq!(r.method, Method::Bell);
        assert_eq!(r.value, Scalar::rational(11, 18).unwrap());
    }
}
