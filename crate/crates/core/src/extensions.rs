//! Two-parameter sums S(x,y,m,n) = int_0^1 u^(x-1) (1-u)^(y-1) ln^(m-1) u ln^(n-1)(1-u) du
//! = d_x^(m-1) d_y^(n-1) B(x,y).

use rug::{Float, Rational};
use serde::Serialize;

use crate::combinatorics::{bell_complete, factorial, pochhammer, BellArgs, IdentityReport};
use crate::error::{Error, Result};
use crate::eval::{accelerate, direct_sum, EvalResult, Method, TailShape};
use crate::numeric::{relative_difference, Complex, Field, FloatField, PrecisionContext, Real, Scalar};
use crate::quadrature::{integrate_adaptive, Decay, Domain, Point, Quadrature};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoParamSpec {
    pub x: Scalar,
    pub y: Scalar,
    pub m: u32,
    pub n: u32,
}

impl TwoParamSpec {
    pub fn new(x: Scalar, y: Scalar, m: u32, n: u32) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(Error::InvalidArgument("two-parameter sums need m, n >= 1".into()));
        }
        Ok(TwoParamSpec { x, y, m, n })
    }

    pub fn rational(x: (i64, i64), y: (i64, i64), m: u32, n: u32) -> Result<Self> {
        TwoParamSpec::new(Scalar::rational(x.0, x.1)?, Scalar::rational(y.0, y.1)?, m, n)
    }

    /// S(y, x, n, m).
    pub fn swapped(&self) -> TwoParamSpec {
        TwoParamSpec {
            x: self.y.clone(),
            y: self.x.clone(),
            m: self.n,
            n: self.m,
        }
    }

    fn require_positive(&self) -> Result<()> {
        if self.x.re(64) <= 0 || self.y.re(64) <= 0 {
            return Err(Error::InvalidArgument("two-parameter forms need Re x > 0 and Re y > 0".into()));
        }
        Ok(())
    }

    fn is_complex(&self) -> bool {
        matches!(self.x, Scalar::Complex(_)) || matches!(self.y, Scalar::Complex(_))
    }
}

fn positive_integer(s: &Scalar) -> Option<u64> {
    s.as_integer().filter(|k| *k >= 1).and_then(|k| k.to_u64())
}

/// B(x, y): exact for a positive-integer argument with a rational partner,
/// otherwise exp(lnG(x) + lnG(y) - lnG(x+y)) for real arguments.
pub fn beta_eval(x: &Scalar, y: &Scalar, ctx: PrecisionContext) -> Result<Scalar> {
    if x.re(64) <= 0 || y.re(64) <= 0 {
        return Err(Error::InvalidArgument("B(x, y) needs Re x > 0 and Re y > 0".into()));
    }
    for (a, k) in [(x, y), (y, x)] {
        if let Some(k) = positive_integer(k) {
            return match a {
                Scalar::Rational(q) => Ok(Scalar::Rational(
                    Rational::from(factorial(k - 1)).try_div(&pochhammer(q, k))?,
                )),
                Scalar::Real(r) => {
                    let r = Real(Float::with_val(ctx.bits() + 32, &r.0));
                    let v = r.from_integer_like(&factorial(k - 1)).try_div(&pochhammer(&r, k))?;
                    Ok(Scalar::Real(Real(Float::with_val(ctx.bits(), v.0))))
                }
                Scalar::Complex(c) => {
                    let c = Complex::new(Float::with_val(ctx.bits() + 32, &c.re), Float::with_val(ctx.bits() + 32, &c.im));
                    let v = c.from_integer_like(&factorial(k - 1)).try_div(&pochhammer(&c, k))?;
                    Ok(crate::numeric::round_to_context(&Scalar::Complex(v), ctx))
                }
            };
        }
    }
    if matches!(x, Scalar::Complex(_)) || matches!(y, Scalar::Complex(_)) {
        return Err(Error::InvalidArgument(
            "B(x, y) for complex non-integer arguments is not supported".into(),
        ));
    }
    let wp = ctx.bits() + 64;
    let (a, b) = (x.re(wp), y.re(wp));
    let s = Float::with_val(wp, &a + &b);
    let l = Float::with_val(wp, a.ln_gamma_ref()) + Float::with_val(wp, b.ln_gamma_ref())
        - Float::with_val(wp, s.ln_gamma_ref());
    Ok(Scalar::Real(Real(Float::with_val(ctx.bits(), l.exp()))))
}

/// (1-y)_j / j! and its y-derivatives, with the vanishing factor i = K
/// (y = K + 1) deleted when requested.
struct PochWalk<F> {
    one_minus_y: F,
    deleted: Option<u64>,
    /// prod_{i<j, i != K} (1-y+i) / j!
    value: F,
    /// sums[r] = sum_{i<j, i != K} (1-y+i)^-(r+1)
    sums: Vec<F>,
    j: u64,
}

impl<F: Field> PochWalk<F> {
    fn new(y: &F, deleted: Option<u64>, orders: usize) -> Self {
        let one_minus_y = -y.add_i64(-1);
        PochWalk {
            value: y.one_like(),
            sums: vec![y.zero_like(); orders],
            one_minus_y,
            deleted,
            j: 0,
        }
    }

    fn step(&mut self) -> Result<()> {
        let i = self.j;
        self.j += 1;
        let inv_j = self.value.from_rational_like(&Rational::from((1, self.j)));
        if self.deleted == Some(i) {
            self.value = self.value.clone() * inv_j;
            return Ok(());
        }
        let c = self.one_minus_y.add_i64(i as i64);
        let ci = c.try_recip()?;
        let mut pw = ci.clone();
        for s in self.sums.iter_mut() {
            *s = s.clone() + pw.clone();
            pw = pw * ci.clone();
        }
        self.value = self.value.clone() * c * inv_j;
        Ok(())
    }

    /// d_y^k of the tracked product over j!.
    fn derivative(&self, k: usize) -> F {
        let g: Vec<F> = (0..k)
            .map(|l| -self.sums[l].mul_integer(&factorial(l as u64)))
            .collect();
        self.value.clone() * bell_complete(&BellArgs::new(g, &self.value))
    }

    /// d_y^k (1-y)_j / j! at the current j.
    fn term(&self, k: usize) -> F {
        match self.deleted {
            Some(d) if self.j > d => {
                if k == 0 {
                    self.value.zero_like()
                } else {
                    -self.derivative(k - 1).mul_i64(k as i64)
                }
            }
            _ => self.derivative(k),
        }
    }
}

fn series_terms<F: Field>(x: &F, y: &F, deleted: Option<u64>, m: u32, n: u32) -> impl FnMut(u64) -> Result<F> {
    let mut walk = PochWalk::new(y, deleted, n as usize);
    let x = x.clone();
    move |j: u64| {
        while walk.j < j {
            walk.step()?;
        }
        Ok(walk.term(n as usize - 1) * x.add_i64(j as i64).powi(-i64::from(m))?)
    }
}

fn series_prefactor<F: Field>(proto: &F, m: u32) -> F {
    let c = proto.from_integer_like(&factorial(u64::from(m - 1)));
    if m % 2 == 0 {
        -c
    } else {
        c
    }
}

fn series_run<F: FloatField>(
    x: &F,
    y: &F,
    deleted: Option<u64>,
    finite: Option<u64>,
    m: u32,
    n: u32,
    tol: f64,
    max_terms: u64,
) -> Result<(F, Float, u64)> {
    let mut terms = series_terms(x, y, deleted, m, n);
    if let Some(last) = finite {
        let mut acc = x.zero_like();
        for j in 0..=last {
            acc = acc + terms(j)?;
        }
        return Ok((acc * series_prefactor(x, m), Float::new(x.prec()), last + 1));
    }
    let shape = TailShape {
        alpha: y.add_i64(i64::from(m) - 1),
        log_powers: n as usize,
    };
    let acc = accelerate(terms, 0, &shape, tol, max_terms)?;
    let pref = series_prefactor(x, m);
    let err = Float::with_val(x.prec(), acc.fit_error * pref.modulus());
    Ok((acc.value * pref, err, acc.terms))
}

/// (-1)^(m-1) (m-1)! sum_j d_y^(n-1) (1-y)_j / j! (x+j)^-m. The sum terminates
/// when y is a positive integer and n = 1; for n >= 2 the vanishing factor of
/// (1-y)_j is split off and the series continues.
pub fn eval2_series(spec: &TwoParamSpec, tol: f64, max_terms: u64, ctx: PrecisionContext) -> Result<EvalResult> {
    let (m, n) = (spec.m, spec.n);
    if spec.x.re(64) <= 0 {
        return Err(Error::InvalidArgument("the two-parameter series needs Re x > 0".into()));
    }
    let int_y = positive_integer(&spec.y);
    if int_y.is_none() && spec.y.re(64) <= 0 {
        return Err(Error::InvalidArgument("the two-parameter series needs Re y > 0".into()));
    }
    let deleted = int_y.map(|k| k - 1);
    let finite = if n == 1 { deleted } else { None };
    let method = Method::TwoParamSeries;
    if let (Some(last), Scalar::Rational(x), Scalar::Rational(y)) = (finite, &spec.x, &spec.y) {
        let mut terms = series_terms(x, y, deleted, m, n);
        let mut acc = Rational::new();
        for j in 0..=last {
            acc += terms(j)?;
        }
        return Ok(EvalResult::exact(
            Scalar::Rational(acc * series_prefactor(x, m)),
            method,
            last + 1,
        ));
    }
    let tol = tol.max(2f64.powi(-(ctx.bits().min(1000) as i32)));
    let w = 2 * ctx.bits() + 64;
    let results: Vec<(Scalar, Float, u64)> = [w, 2 * w]
        .into_iter()
        .map(|bits| -> Result<(Scalar, Float, u64)> {
            if spec.is_complex() {
                let (x, y) = (spec.x.to_complex(bits), spec.y.to_complex(bits));
                let (v, e, t) = series_run(&x, &y, deleted, finite, m, n, tol, max_terms)?;
                Ok((Scalar::Complex(v), e, t))
            } else {
                let (x, y) = (spec.x.to_real(bits).expect("real"), spec.y.to_real(bits).expect("real"));
                let (v, e, t) = series_run(&x, &y, deleted, finite, m, n, tol, max_terms)?;
                Ok((Scalar::Real(v), e, t))
            }
        })
        .collect::<Result<_>>()?;
    let [(lo, _, _), (hi, err, terms)] = <[_; 2]>::try_from(results).expect("two runs");
    let diff = hi.distance(&lo, 2 * w);
    Ok(EvalResult::inexact(hi, err + diff, method, terms, ctx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoParamForm {
    /// int_0^1 u^(x-1) (1-u)^(y-1) ln^(m-1) u ln^(n-1)(1-u) du
    Eq30,
    /// (-1)^(n-1) int_0^inf v^(n-1) ln^(m-1)(1-e^-v) (1-e^-v)^(x-1) e^(-yv) dv
    Eq34,
    /// int_0^inf e^(-(x+y-1)v) (e^v-1)^(y-1) (-v)^(m-1) (ln(e^v-1) - v)^(n-1) dv
    Eq36,
}

impl TwoParamForm {
    pub const ALL: [TwoParamForm; 3] = [TwoParamForm::Eq30, TwoParamForm::Eq34, TwoParamForm::Eq36];

    pub fn method(self) -> Method {
        match self {
            TwoParamForm::Eq30 => Method::TwoParamQuadrature30,
            TwoParamForm::Eq34 => Method::TwoParamQuadrature34,
            TwoParamForm::Eq36 => Method::TwoParamQuadrature36,
        }
    }
}

fn fpow(a: &Float, k: u32) -> Float {
    let mut acc = Float::with_val(a.prec(), 1);
    for _ in 0..k {
        acc *= a;
    }
    acc
}

fn quad_run<F: FloatField>(
    x: &F,
    y: &F,
    form: TwoParamForm,
    m: u32,
    n: u32,
    tol: f64,
    ctx: PrecisionContext,
) -> Result<Quadrature<F>> {
    let (a, b) = (m - 1, n - 1);
    let re_x = x.parts().0.to_f64();
    let re_y = y.parts().0.to_f64();
    // |ln(1 - e^-v)| <= 1.6 e^-v and (1 - e^-v)^s <= max(1, 0.632^s) for v >= 1
    let log_bound = |k: u32, s: f64| 1.6f64.powi(k as i32) * 0.632f64.powf((s - 1.0).min(0.0));
    let f = |p: &Point| -> F {
        let bits = x.prec();
        match form {
            TwoParamForm::Eq30 => {
                let l = Float::with_val(bits, &p.from_left);
                let r = Float::with_val(bits, &p.from_right);
                if l.is_zero() || r.is_zero() {
                    return x.zero_like();
                }
                let (ll, lr) = (l.ln(), r.ln());
                let e = x.add_i64(-1).scale(&ll) + y.add_i64(-1).scale(&lr);
                e.exp().scale(&(fpow(&ll, a) * fpow(&lr, b)))
            }
            TwoParamForm::Eq34 => {
                let v = Float::with_val(bits, &p.x);
                if v.is_zero() {
                    return x.zero_like();
                }
                let one_minus = -Float::with_val(bits, -&v).exp_m1();
                let l = one_minus.ln();
                let e = x.add_i64(-1).scale(&l) - y.scale(&v);
                let mut w = fpow(&v, b) * fpow(&l, a);
                if b % 2 == 1 {
                    w = -w;
                }
                e.exp().scale(&w)
            }
            TwoParamForm::Eq36 => {
                let v = Float::with_val(bits, &p.x);
                if v.is_zero() {
                    return x.zero_like();
                }
                let l = Float::with_val(bits, v.exp_m1_ref()).ln();
                let e = (y.add_i64(-1)).scale(&l) - (x.clone() + y.clone()).add_i64(-1).scale(&v);
                let bracket = Float::with_val(bits, &l - &v);
                let mut w = fpow(&v, a) * fpow(&bracket, b);
                if a % 2 == 1 {
                    w = -w;
                }
                e.exp().scale(&w)
            }
        }
    };
    let domain = match form {
        TwoParamForm::Eq30 => Domain::unit(),
        TwoParamForm::Eq34 => Domain::HalfLine(Decay {
            rate: re_y + f64::from(a),
            power: f64::from(b),
            coeff: log_bound(a, re_x),
        }),
        TwoParamForm::Eq36 => Domain::HalfLine(Decay {
            rate: re_x + f64::from(b),
            power: f64::from(a),
            coeff: log_bound(b, re_y),
        }),
    };
    integrate_adaptive(f, &domain, tol, ctx)
}

/// S(x,y,m,n) by quadrature of one of its integral forms.
pub fn eval2_quad(spec: &TwoParamSpec, form: TwoParamForm, tol: f64, ctx: PrecisionContext) -> Result<EvalResult> {
    spec.require_positive()?;
    let bits = ctx.scaled(3, 2).bits();
    let (value, error, evals) = if spec.is_complex() {
        let (x, y) = (spec.x.to_complex(bits), spec.y.to_complex(bits));
        let q = quad_run(&x, &y, form, spec.m, spec.n, tol, ctx)?;
        (Scalar::Complex(q.value), q.error, q.evaluations)
    } else {
        let (x, y) = (spec.x.to_real(bits).expect("real"), spec.y.to_real(bits).expect("real"));
        let q = quad_run(&x, &y, form, spec.m, spec.n, tol, ctx)?;
        (Scalar::Real(q.value), q.error, q.evaluations)
    };
    Ok(EvalResult::inexact(value, error, form.method(), evals, ctx))
}

fn allowed(a: &EvalResult, b: &EvalResult, tol: f64) -> f64 {
    let mut bound = 0.0;
    for r in [a, b] {
        if let Some(e) = &r.error_bound {
            bound += e.to_f64();
        }
    }
    let scale = b.value.abs(64).to_f64();
    if scale > 0.0 {
        (bound / scale).max(tol)
    } else {
        bound.max(tol)
    }
}

/// Checks S(x,y,m,n) = S(y,x,n,m) and, when x = N+1 is a positive integer and
/// m = 1, S(x,y,1,n) = (-1)^(n-1) (n-1)! S(y, N, n).
pub fn two_param_consistency(spec: &TwoParamSpec, tol: f64, ctx: PrecisionContext) -> Result<IdentityReport> {
    let qtol = tol / 8.0;
    let a = eval2_quad(spec, TwoParamForm::Eq30, qtol, ctx)?;
    let b = eval2_quad(&spec.swapped(), TwoParamForm::Eq30, qtol, ctx)?;
    let d = relative_difference(&a.value, &b.value, ctx.bits());
    if d > allowed(&a, &b, tol) {
        return Err(Error::identity(
            "two-parameter symmetry",
            format!("x={}, y={}, m={}, n={}: relative difference {d:e}", spec.x, spec.y, spec.m, spec.n),
        ));
    }
    let mut cases = 1;
    if let (Some(k), 1) = (positive_integer(&spec.x), spec.m) {
        let big_n = k - 1;
        let mut s = match &spec.y {
            Scalar::Rational(q) => Scalar::Rational(direct_sum(q, big_n, spec.n)?),
            Scalar::Real(r) => Scalar::Real(direct_sum(&Real(Float::with_val(2 * ctx.bits(), &r.0)), big_n, spec.n)?),
            Scalar::Complex(_) => Scalar::Complex(direct_sum(&spec.y.to_complex(2 * ctx.bits()), big_n, spec.n)?),
        };
        let mut c = Rational::from(factorial(u64::from(spec.n - 1)));
        if spec.n % 2 == 0 {
            c = -c;
        }
        s = s.mul(&Scalar::Rational(c))?;
        let d = relative_difference(&a.value, &crate::numeric::round_to_context(&s, ctx), ctx.bits());
        let bound = a.error_bound.as_ref().map(|e| e.to_f64()).unwrap_or(0.0) / s.abs(64).to_f64();
        if d > bound.max(tol) {
            return Err(Error::identity(
                "two-parameter sum vs S(x, N, m)",
                format!("x={}, y={}, n={}: relative difference {d:e}", spec.x, spec.y, spec.n),
            ));
        }
        cases += 1;
    }
    Ok(IdentityReport {
        identity: "two-parameter consistency",
        cases,
    })
}

/// Compares sum_j (1-y)_j / j! / (x+j) with [`beta_eval`].
pub fn beta_series_check(x: &Scalar, y: &Scalar, tol: f64, ctx: PrecisionContext) -> Result<IdentityReport> {
    let spec = TwoParamSpec::new(x.clone(), y.clone(), 1, 1)?;
    let series = eval2_series(&spec, tol / 4.0, 2_000_000, ctx)?;
    let beta = beta_eval(x, y, ctx)?;
    let ok = if series.exact && beta.is_exact() {
        series.value == beta
    } else {
        let wide = ctx.bits() + 64;
        let d = relative_difference(&series.value, &beta, wide);
        let bound = series.error_bound.as_ref().map(|e| e.to_f64()).unwrap_or(0.0) / beta.abs(64).to_f64();
        d <= bound.max(tol)
    };
    if !ok {
        return Err(Error::identity(
            "Beta binomial series",
            format!("x={x}, y={y}: series {} vs B(x,y) {beta}", series.value),
        ));
    }
    Ok(IdentityReport {
        identity: "Beta binomial series",
        cases: 1,
    })
}
