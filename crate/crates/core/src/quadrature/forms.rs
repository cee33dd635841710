use rug::{Float, Integer};
use serde::Serialize;

use super::{integrate_adaptive, Decay, Domain, Point, Quadrature};
use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::eval::{EvalResult, Method, SumParams};
use crate::numeric::{Complex, Field, FloatField, PrecisionContext, Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadForm {
    /// (1/(m-1)!) int_0^inf t^(m-1) e^(-xt) (1-e^-t)^N dt
    Eq6,
    /// (2^(N+m)/(m-1)!) int_0^inf w^(m-1) e^(-(2x+N)w) sinh^N w dw
    Eq7,
    /// ((-1)^(m-1)/(m-1)!) int_0^1 v^N (1-v)^(x-1) ln^(m-1)(1-v) dv
    Eq20,
}

impl QuadForm {
    pub fn method(self) -> Method {
        match self {
            QuadForm::Eq6 => Method::Quadrature6,
            QuadForm::Eq7 => Method::Quadrature7,
            QuadForm::Eq20 => Method::Quadrature20,
        }
    }
}

fn real_like<F: FloatField>(proto: &F, v: Float) -> F {
    let im = Float::new(v.prec());
    proto.from_parts_like(v, im)
}

fn fpow(a: &Float, k: u64) -> Float {
    let mut acc = Float::with_val(a.prec(), 1);
    for _ in 0..k {
        acc *= a;
    }
    acc
}

fn integrand<F: FloatField>(form: QuadForm, x: &F, n: u64, m: u32) -> impl Fn(&Point) -> F + '_ {
    let k = u64::from(m - 1);
    move |p: &Point| {
        let b = x.prec();
        let t = Float::with_val(b, &p.x);
        match form {
            QuadForm::Eq6 => {
                let one_minus = -Float::with_val(b, -&t).exp_m1();
                let w = fpow(&t, k) * fpow(&one_minus, n);
                (-x.scale(&t)).exp().scale(&w)
            }
            QuadForm::Eq7 => {
                let sh = Float::with_val(b, t.sinh_ref());
                let w = fpow(&t, k) * fpow(&sh, n);
                let rate = x.mul_i64(2).add_i64(n as i64);
                (-rate.scale(&t)).exp().scale(&w)
            }
            QuadForm::Eq20 => {
                let r = Float::with_val(b, &p.from_right);
                if r.is_zero() {
                    return x.zero_like();
                }
                let ln_r = Float::with_val(b, r.ln_ref());
                let w = fpow(&t, n) * fpow(&ln_r, k);
                x.add_i64(-1).scale(&ln_r).exp().scale(&w)
            }
        }
    }
}

fn run<F: FloatField>(x: &F, form: QuadForm, n: u64, m: u32, tol: f64, ctx: PrecisionContext) -> Result<Quadrature<F>> {
    let re_x = x.parts().0.to_f64();
    let k = f64::from(m - 1);
    let domain = match form {
        QuadForm::Eq6 => Domain::HalfLine(Decay {
            rate: re_x,
            power: k,
            coeff: 1.0,
        }),
        QuadForm::Eq7 => Domain::HalfLine(Decay {
            rate: 2.0 * re_x,
            power: k,
            coeff: 0.5f64.powi(n as i32),
        }),
        QuadForm::Eq20 => Domain::unit(),
    };
    integrate_adaptive(integrand(form, x, n, m), &domain, tol, ctx)
}

/// S(x, N, m) by quadrature of one of its integral representations.
pub fn s_quadrature(p: &SumParams, form: QuadForm, tol: f64, ctx: PrecisionContext) -> Result<EvalResult> {
    let (n, m) = (p.n, p.m);
    if n < 1 || m < 1 {
        return Err(Error::InvalidArgument("quadrature forms need N >= 1 and m >= 1".into()));
    }
    if p.x.re(64) <= 0 {
        return Err(Error::InvalidArgument("quadrature forms need Re x > 0".into()));
    }
    let bits = ctx.scaled(3, 2).bits();
    let mut pref = Float::with_val(bits, 1) / Float::with_val(bits, factorial(u64::from(m - 1)));
    match form {
        QuadForm::Eq6 => {}
        QuadForm::Eq7 => pref *= Float::with_val(bits, Integer::from(1) << (n as u32 + m)),
        QuadForm::Eq20 => {
            if m % 2 == 0 {
                pref = -pref;
            }
        }
    }
    let (value, error, evals) = match &p.x {
        Scalar::Complex(_) => {
            let x = p.x.to_complex(bits);
            let q: Quadrature<Complex> = run(&x, form, n, m, tol, ctx)?;
            (Scalar::Complex(q.value.scale(&pref)), q.error, q.evaluations)
        }
        _ => {
            let x = p.x.to_real(bits).expect("real");
            let q: Quadrature<Real> = run(&x, form, n, m, tol, ctx)?;
            (Scalar::Real(q.value.scale(&pref)), q.error, q.evaluations)
        }
    };
    let error = Float::with_val(bits, error * pref.abs());
    Ok(EvalResult::inexact(value, error, form.method(), evals, ctx))
}

/// int_0^inf e^-t ln^n t dt = Gamma^(n)(1).
pub fn gamma_log_moment(n: u32, tol: f64, ctx: PrecisionContext) -> Result<Scalar> {
    let bits = ctx.scaled(3, 2).bits();
    let proto = Real(Float::new(bits));
    let f = |p: &Point| {
        let b = p.x.prec();
        if p.x.is_zero() {
            return proto.zero_like();
        }
        let l = Float::with_val(b, p.x.ln_ref());
        let e = Float::with_val(b, -&p.x).exp();
        real_like(&proto, fpow(&l, u64::from(n)) * e)
    };
    let domain = Domain::HalfLine(Decay {
        rate: 1.0,
        power: f64::from(n),
        coeff: 1.0,
    });
    let q = integrate_adaptive(f, &domain, tol, ctx)?;
    let v = q.value.0;
    Ok(Scalar::Real(Real(Float::with_val(ctx.bits(), v))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{bell_complete, BellArgs};
    use crate::eval::direct_sum;
    use crate::numeric::{relative_difference, PrecisionContext};
    use crate::special::{euler_gamma_mpfr, zeta_mpfr};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn forms_match_exact() {
        for (a, b, n, m) in [(1, 1, 1, 1), (1, 1, 2, 2), (1, 2, 8, 5), (3, 2, 3, 4), (2, 1, 8, 1)] {
            let p = SumParams::rational(a, b, n, m).unwrap();
            let exact = Scalar::Rational(direct_sum(p.x.as_rational().unwrap(), n, m).unwrap());
            for form in [QuadForm::Eq6, QuadForm::Eq7, QuadForm::Eq20] {
                let r = s_quadrature(&p, form, 1e-25, ctx()).unwrap();
                let d = relative_difference(&r.value, &exact, 256);
                assert!(d < 1e-22, "{form:?} x={a}/{b} N={n} m={m}: {d}");
            }
        }
    }

    #[test]
    fn complex_form() {
        let x = Scalar::parse("3+2i", PrecisionContext::new(192).unwrap()).unwrap();
        let exact = Scalar::Complex(direct_sum(&x.to_complex(384), 5, 3).unwrap());
        let p = SumParams::new(x, 5, 3).unwrap();
        let r = s_quadrature(&p, QuadForm::Eq6, 1e-25, PrecisionContext::new(192).unwrap()).unwrap();
        assert!(relative_difference(&r.value, &exact, 384) < 1e-22);
    }

    #[test]
    fn guards() {
        let p = SumParams::rational(-1, 2, 2, 2).unwrap();
        assert!(s_quadrature(&p, QuadForm::Eq20, 1e-10, ctx()).is_err());
    }

    #[test]
    fn gamma_moments() {
        let g = gamma_log_moment(0, 1e-25, ctx()).unwrap();
        assert!((g.re(128).to_f64() - 1.0).abs() < 1e-15);
        let gamma = euler_gamma_mpfr(256);
        for n in 1..=6u32 {
            let mut args = vec![Real(Float::with_val(256, -&gamma))];
            for j in 2..=n {
                let mut v = zeta_mpfr(j, 256) * factorial(u64::from(j - 1));
                if j % 2 == 1 {
                    v = -v;
                }
                args.push(Real(v));
            }
            let proto = Real(Float::new(256));
            let y = bell_complete(&BellArgs::new(args, &proto));
            let q = gamma_log_moment(n, 1e-25, ctx()).unwrap();
            let d = relative_difference(&q, &Scalar::Real(y), 256);
            assert!(d < 1e-20, "n={n}: {d}");
        }
    }
}
