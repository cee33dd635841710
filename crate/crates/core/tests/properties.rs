use absum::combinatorics::{binomial, pochhammer};
use absum::eval::{evaluate, EvalOptions, Method, SumParams};
use absum::numeric::{format_rational, parse_rational, round_to_context, scalar_pow_int, PrecisionContext, Scalar};
use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};

fn opts() -> EvalOptions {
    EvalOptions::new(PrecisionContext::default(), 1e-25)
}

fn exact(p: &SumParams, method: Method) -> Rational {
    let r = evaluate(p, method, &opts()).unwrap();
    assert!(r.exact, "{method:?}");
    r.value.as_rational().unwrap().clone()
}

fn positive_rational() -> impl Strategy<Value = (i64, i64)> {
    (1i64..40, 1i64..12)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_methods_agree((a, b) in positive_rational(), n in 1u64..12, m in 1u32..5) {
        let p = SumParams::rational(a, b, n, m).unwrap();
        let reference = exact(&p, Method::Direct);
        for method in [Method::Hypergeometric, Method::Bell, Method::RecursionA] {
            prop_assert_eq!(&exact(&p, method), &reference, "{:?}", method);
        }
        if m == 1 {
            prop_assert_eq!(&exact(&p, Method::BetaIdentity), &reference);
        }
    }

    #[test]
    fn single_step_difference((a, b) in positive_rational(), m in 1u32..6) {
        let x = Rational::from((a, b));
        let want = x.clone().recip().pow(m as i32) - Rational::from(x + 1u32).recip().pow(m as i32);
        let p = SumParams::rational(a, b, 1, m).unwrap();
        prop_assert_eq!(exact(&p, Method::Direct), want);
    }

    #[test]
    fn unit_argument_first_order(n in 0u64..40) {
        let p = SumParams::rational(1, 1, n, 1).unwrap();
        prop_assert_eq!(exact(&p, Method::Bell), Rational::from((1, n + 1)));
    }

    #[test]
    fn pow_law((a, b) in positive_rational(), j in -6i64..6, k in -6i64..6) {
        let s = Scalar::rational(a, b).unwrap();
        let lhs = scalar_pow_int(&s, j + k).unwrap();
        let rhs = scalar_pow_int(&s, j).unwrap().mul(&scalar_pow_int(&s, k).unwrap()).unwrap();
        prop_assert_eq!(lhs.as_rational(), rhs.as_rational());
    }

    #[test]
    fn rounding_is_idempotent((a, b) in positive_rational(), bits in 53u32..300) {
        let ctx = PrecisionContext::new(bits).unwrap();
        let once = round_to_context(&Scalar::rational(a, b).unwrap(), ctx);
        let twice = round_to_context(&once, ctx);
        prop_assert_eq!(once.re(bits), twice.re(bits));
    }

    #[test]
    fn rational_text_round_trip(a in -10_000i64..10_000, b in 1i64..10_000) {
        let q = Rational::from((a, b));
        let text = format_rational(&q);
        prop_assert!(text.contains('/'));
        prop_assert_eq!(parse_rational(&text).unwrap(), q);
    }

    #[test]
    fn pochhammer_ratio((a, b) in positive_rational(), k in 0u64..15) {
        let x = Rational::from((a, b));
        let lhs = pochhammer(&x, k + 1);
        let rhs = pochhammer(&x, k) * Rational::from(x.clone() + k);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn binomial_row_sums(n in 0u64..60) {
        let total: Integer = (0..=n).map(|k| binomial(n, k)).sum();
        prop_assert_eq!(total, Integer::from(1) << n as u32);
    }
}
