//! Double-exponential (tanh-sinh) quadrature at multiprecision and the
//! integral representations of S(x, N, m) built on it.

mod forms;

pub use forms::{gamma_log_moment, s_quadrature, QuadForm};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::{FloatField, PrecisionContext};

/// Abscissa handed to an integrand, with both endpoint distances carried
/// separately so factors like ln(1 - v) keep full relative accuracy.
#[derive(Clone, Debug)]
pub struct Point {
    pub x: Float,
    pub from_left: Float,
    pub from_right: Float,
}

/// |f(t)| <= coeff * t^power * e^(-rate t) for t >= 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decay {
    pub rate: f64,
    pub power: f64,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Finite { a: Float, b: Float },
    /// [0, inf), truncated where the decay bound makes the tail negligible.
    HalfLine(Decay),
}

impl Domain {
    pub fn unit() -> Domain {
        Domain::Finite {
            a: Float::with_val(64, 0),
            b: Float::with_val(64, 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Quadrature<F> {
    pub value: F,
    /// Level-difference estimate plus the truncated tail bound.
    pub error: Float,
    pub level: u32,
    pub evaluations: u64,
    pub cutoff: Option<f64>,
}

const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 12;

/// Node on the positive half of the t axis: c = 1 - tanh(pi/2 sinh t) and
/// the weight (pi/2) cosh t / cosh^2(pi/2 sinh t).
#[derive(Debug)]
struct Node {
    c: Float,
    w: Float,
}

type NodeTable = Arc<Vec<Node>>;

fn t_max(bits: u32) -> f64 {
    // complement reaches 2^(-8 bits)
    let u = 4.0 * f64::from(bits) * std::f64::consts::LN_2;
    (2.0 * u / std::f64::consts::PI).asinh()
}

fn build_nodes(level: u32, bits: u32) -> Vec<Node> {
    let h = 0.5f64.powi(level as i32);
    let tmax = t_max(bits);
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let step = if level == 0 { 1 } else { 2 };
    let start = if level == 0 { 0 } else { 1 };
    let mut out = Vec::new();
    let mut j = start;
    loop {
        let t = j as f64 * h;
        if t > tmax {
            break;
        }
        // t = j * 2^-level is exact in binary
        let tf = Float::with_val(bits, j) >> level;
        let (sh, ch) = tf.sinh_cosh(Float::new(bits));
        let u = Float::with_val(bits, &half_pi * &sh);
        let e = Float::with_val(bits, &u * 2u32).exp();
        let c = Float::with_val(bits, 2) / Float::with_val(bits, &e + 1u32);
        let denom = Float::with_val(bits, &e + 2u32) + Float::with_val(bits, e.recip_ref());
        let w = Float::with_val(bits, &half_pi * &ch) * 4u32 / denom;
        out.push(Node { c, w });
        j += step;
    }
    out
}

fn nodes(level: u32, bits: u32) -> NodeTable {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), NodeTable>>> = OnceLock::new();
    let map = CACHE.get_or_init(Default::default);
    if let Some(t) = map.lock().expect("node cache").get(&(level, bits)) {
        return t.clone();
    }
    let table = Arc::new(build_nodes(level, bits));
    map.lock()
        .expect("node cache")
        .entry((level, bits))
        .or_insert(table)
        .clone()
}

/// Smallest T >= 1 with coeff T^p e^(-rT) / (r - p/T) <= target.
fn tail_cutoff(d: &Decay, target: f64) -> f64 {
    let ln_target = target.max(f64::MIN_POSITIVE).ln();
    let mut t = (d.power / d.rate).max(1.0) + 1.0;
    for _ in 0..200 {
        let denom = (d.rate - d.power / t).max(d.rate * 1e-3);
        let next = ((d.coeff / denom).ln() + d.power * t.ln() - ln_target) / d.rate;
        let next = next.max(t.min(1.0)).max((d.power / d.rate).max(1.0) + 1.0);
        if (next - t).abs() < 1e-9 * t {
            return next;
        }
        t = next;
    }
    t
}

/// Evaluated in f64; the margin covers the rounding of exp and powf.
fn tail_bound(d: &Decay, t: f64) -> f64 {
    let denom = (d.rate - d.power / t).max(d.rate * 1e-3);
    d.coeff * t.powf(d.power) * (-d.rate * t).exp() / denom * (1.0 + 1e-12)
}

fn finite<F: FloatField>(
    f: &impl Fn(&Point) -> F,
    a: &Float,
    b: &Float,
    bits: u32,
    tol: &Float,
    min_level: u32,
    max_level: u32,
) -> Result<(F, Float, u32, u64)> {
    let half = Float::with_val(bits, Float::with_val(bits, b - a) / 2u32);
    let eps = Float::with_val(bits, 1) >> bits;
    let mut evals = 0u64;
    let mut total: Option<F> = None;
    let mut prev: Option<F> = None;
    let mut last_diff = Float::with_val(bits, 0);
    for level in 0..=max_level {
        let table = nodes(level, bits);
        let mut sum: Option<F> = None;
        let add = |v: F, sum: &mut Option<F>| {
            *sum = Some(match sum.take() {
                Some(s) => s + v,
                None => v,
            });
        };
        for side in [1i32, -1] {
            let mut quiet = 0;
            for (idx, node) in table.iter().enumerate() {
                if side == -1 && level == 0 && idx == 0 {
                    continue;
                }
                // distances from the left/right ends in units of (b - a)/2
                let two_minus_c = Float::with_val(bits, 2u32 - &node.c);
                let (l, r) = if side == 1 {
                    (two_minus_c, node.c.clone())
                } else {
                    (node.c.clone(), two_minus_c)
                };
                let from_left = Float::with_val(bits, &l * &half);
                let from_right = Float::with_val(bits, &r * &half);
                let x = Float::with_val(bits, a + &from_left);
                let p = Point { x, from_left, from_right };
                let v = f(&p);
                evals += 1;
                if !v.modulus().is_finite() {
                    return Err(Error::NoConvergence("integrand is not finite at a quadrature node".into()));
                }
                let term = v.scale(&node.w);
                let mag = term.modulus();
                let reference = sum.as_ref().map(|s: &F| s.modulus()).unwrap_or_else(|| Float::new(bits));
                add(term, &mut sum);
                if idx > 2 && mag <= Float::with_val(bits, &reference * &eps) {
                    quiet += 1;
                    if quiet >= 4 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
        }
        let h = Float::with_val(bits, Float::with_val(bits, 1) >> level) * &half;
        let level_sum = sum.expect("level 0 always has nodes").scale(&h);
        let current = match total.take() {
            Some(t) => t.scale(&Float::with_val(bits, 0.5)) + level_sum,
            None => level_sum,
        };
        if let Some(p) = prev.take() {
            last_diff = (current.clone() - p).modulus();
            let scale = current.modulus();
            if level >= min_level && last_diff <= Float::with_val(bits, tol * &scale) {
                return Ok((current, last_diff, level, evals));
            }
        }
        prev = Some(current.clone());
        total = Some(current);
    }
    Err(Error::NoConvergence(format!(
        "tanh-sinh did not reach tolerance by level {max_level} (last difference {})",
        last_diff.to_f64()
    )))
}

/// Integrates `f` over `domain` to relative tolerance `tol`. Nodes and weights
/// are built at 1.5x the context precision and memoized per (level, bits).
pub fn integrate_adaptive<F: FloatField>(
    f: impl Fn(&Point) -> F,
    domain: &Domain,
    tol: f64,
    ctx: PrecisionContext,
) -> Result<Quadrature<F>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    let bits = ctx.scaled(3, 2).bits();
    let floor = 2f64.powi(-(ctx.bits().min(1000) as i32));
    let tol_f = Float::with_val(bits, tol.max(floor));
    match domain {
        Domain::Finite { a, b } => {
            let a = Float::with_val(bits, a);
            let b = Float::with_val(bits, b);
            let (value, error, level, evaluations) = finite(&f, &a, &b, bits, &tol_f, MIN_LEVEL, MAX_LEVEL)?;
            Ok(Quadrature {
                value,
                error,
                level,
                evaluations,
                cutoff: None,
            })
        }
        Domain::HalfLine(decay) => {
            if !(decay.rate > 0.0) || decay.power < 0.0 || !(decay.coeff > 0.0) {
                return Err(Error::InvalidArgument("half-line integrand needs a positive decay rate".into()));
            }
            let zero = Float::new(bits);
            let pilot_t = tail_cutoff(decay, decay.coeff * 1e-8);
            let coarse = Float::with_val(bits, 1e-6);
            let (pilot, _, _, pilot_evals) = finite(&f, &zero, &Float::with_val(bits, pilot_t), bits, &coarse, 2, MAX_LEVEL)?;
            let magnitude = pilot.modulus().to_f64();
            let scale = if magnitude > 0.0 { magnitude } else { decay.coeff };
            let target = tol.max(floor) * scale / 16.0;
            let cutoff = tail_cutoff(decay, target);
            let (value, error, level, evaluations) =
                finite(&f, &zero, &Float::with_val(bits, cutoff), bits, &tol_f, MIN_LEVEL, MAX_LEVEL)?;
            let tail = Float::with_val(bits, tail_bound(decay, cutoff));
            Ok(Quadrature {
                value,
                error: error + tail,
                level,
                evaluations: evaluations + pilot_evals,
                cutoff: Some(cutoff),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Real;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn close(q: &Quadrature<Real>, exact: f64, tol: f64) {
        let v = q.value.0.to_f64();
        assert!((v - exact).abs() <= tol * exact.abs().max(1.0), "{v} vs {exact}");
    }

    #[test]
    fn constant_on_unit_interval() {
        let q = integrate_adaptive(|p| Real(Float::with_val(p.x.prec(), 1)), &Domain::unit(), 1e-30, ctx()).unwrap();
        let err = Float::with_val(192, &q.value.0 - 1u32).abs();
        assert!(err < 1e-35);
    }

    #[test]
    fn exponential_on_half_line() {
        let d = Domain::HalfLine(Decay {
            rate: 1.0,
            power: 0.0,
            coeff: 1.0,
        });
        let q = integrate_adaptive(|p| Real(Float::with_val(p.x.prec(), -&p.x).exp()), &d, 1e-30, ctx()).unwrap();
        let err = Float::with_val(192, &q.value.0 - 1u32).abs();
        assert!(err < 1e-29, "{err}");
        assert!(q.cutoff.unwrap() > 60.0);
    }

    #[test]
    fn log_endpoint_singularity() {
        let q = integrate_adaptive(
            |p| Real(Float::with_val(p.x.prec(), p.from_right.ln_ref())),
            &Domain::unit(),
            1e-30,
            ctx(),
        )
        .unwrap();
        let err = Float::with_val(192, &q.value.0 + 1u32).abs();
        assert!(err < 1e-35, "{err}");
        close(&q, -1.0, 1e-15);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        // int_0^1 (1-v)^-1/2 dv = 2
        let q = integrate_adaptive(
            |p| Real(Float::with_val(p.x.prec(), p.from_right.sqrt_ref()).recip()),
            &Domain::unit(),
            1e-30,
            ctx(),
        )
        .unwrap();
        let err = Float::with_val(192, &q.value.0 - 2u32).abs();
        assert!(err < 1e-33, "{err}");
    }

    #[test]
    fn halving_tol_does_not_worsen() {
        let f = |p: &Point| {
            let b = p.x.prec();
            Real(Float::with_val(b, p.x.square_ref()) * Float::with_val(b, p.from_right.ln_ref()))
        };
        let exact = Float::with_val(256, -11) / 18u32;
        let mut last = f64::INFINITY;
        for tol in [1e-10, 5e-11, 1e-20, 5e-21, 1e-30] {
            let q = integrate_adaptive(f, &Domain::unit(), tol, ctx()).unwrap();
            let err = Float::with_val(256, &q.value.0 - &exact).abs().to_f64();
            assert!(err <= last.max(1e-45), "tol={tol}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn rejects_bad_input() {
        let d = Domain::HalfLine(Decay {
            rate: 0.0,
            power: 0.0,
            coeff: 1.0,
        });
        assert!(integrate_adaptive(|p| Real(p.x.clone()), &d, 1e-10, ctx()).is_err());
        assert!(integrate_adaptive(|p| Real(p.x.clone()), &Domain::unit(), 0.0, ctx()).is_err());
    }
}
