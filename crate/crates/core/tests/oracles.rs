//! Values worked out by hand.

use absum::combinatorics::{bell_numbers, stirling, StirlingKind};
use absum::eval::{evaluate, EvalOptions, Method, SumParams};
use absum::numeric::{PrecisionContext, Scalar};
use absum::special::{euler_gamma, harmonic, zeta_int};
use rug::{Float, Rational};

fn opts(bits: u32) -> EvalOptions {
    EvalOptions::new(PrecisionContext::new(bits).unwrap(), 1e-25)
}

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn value(x: (i64, i64), n: u64, m: u32, method: Method) -> Scalar {
    let p = SumParams::rational(x.0, x.1, n, m).unwrap();
    evaluate(&p, method, &opts(128)).unwrap().value
}

fn close(v: &Scalar, want: &Rational, tol: f64) {
    let got = v.re(256);
    let want = Float::with_val(256, want);
    let rel = Float::with_val(256, (got - &want) / &want).abs().to_f64();
    assert!(rel < tol, "rel {rel}");
}

#[test]
fn small_sums() {
    let cases = [
        ((1, 1), 0, 3, "1"),
        ((1, 1), 1, 1, "1/2"),
        ((1, 1), 3, 1, "1/4"),
        ((1, 1), 2, 2, "11/18"),
        ((1, 1), 2, 3, "85/108"),
        ((2, 1), 1, 1, "1/6"),
        ((2, 1), 3, 2, "77/1200"),
        ((1, 2), 1, 2, "32/9"),
        ((1, 2), 3, 1, "32/35"),
    ];
    for (x, n, m, want) in cases {
        for method in [Method::Direct, Method::Hypergeometric, Method::Bell, Method::RecursionA] {
            if n == 0 && method != Method::Direct {
                continue;
            }
            assert_eq!(value(x, n, m, method).as_rational(), Some(&q(want)), "{x:?} {n} {m} {method:?}");
        }
    }
}

#[test]
fn beta_values() {
    assert_eq!(value((1, 1), 4, 1, Method::BetaIdentity).as_rational(), Some(&q("1/5")));
    assert_eq!(value((1, 2), 3, 1, Method::BetaIdentity).as_rational(), Some(&q("32/35")));
}

#[test]
fn approximate_methods_hit_oracles() {
    close(&value((2, 1), 3, 2, Method::SeriesStirling2), &q("77/1200"), 1e-25);
    close(&value((2, 1), 3, 2, Method::SeriesStirling1), &q("77/1200"), 1e-25);
    close(&value((1, 1), 2, 2, Method::SeriesBellHarmonic), &q("11/18"), 1e-25);
    close(&value((1, 2), 3, 1, Method::Quadrature6), &q("32/35"), 1e-25);
    close(&value((1, 2), 3, 1, Method::Quadrature7), &q("32/35"), 1e-25);
    close(&value((1, 1), 2, 2, Method::Quadrature20), &q("11/18"), 1e-25);
}

#[test]
fn complex_argument() {
    let ctx = PrecisionContext::new(128).unwrap();
    let x = Scalar::parse("1+1i", ctx).unwrap();
    let p = SumParams::new(x, 1, 1).unwrap();
    let v = evaluate(&p, Method::Direct, &opts(128)).unwrap().value;
    assert!((v.re(128).to_f64() - 0.1).abs() < 1e-30);
    assert!((v.im(128).to_f64() + 0.3).abs() < 1e-30);
}

#[test]
fn combinatorial_tables() {
    let bell: Vec<u64> = bell_numbers(9).iter().map(|b| b.to_u64().unwrap()).collect();
    assert_eq!(bell, [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147]);
    assert_eq!(stirling(StirlingKind::Second, 5, 2), 15);
    assert_eq!(stirling(StirlingKind::Second, 7, 3), 301);
    assert_eq!(stirling(StirlingKind::FirstSigned, 5, 2), -50);
    assert_eq!(stirling(StirlingKind::FirstSigned, 6, 3), -225);
}

#[test]
fn constants() {
    let ctx = PrecisionContext::new(128).unwrap();
    assert_eq!(harmonic(4, 1).unwrap().value, q("25/12"));
    assert_eq!(harmonic(3, 2).unwrap().value, q("49/36"));
    let gamma = euler_gamma(ctx).unwrap().to_f64();
    assert!((gamma - 0.577_215_664_901_532_9).abs() < 1e-16);
    let zeta3 = zeta_int(3, ctx).unwrap().value.to_f64();
    assert!((zeta3 - 1.202_056_903_159_594_3).abs() < 1e-15);
}
