use rug::{Integer, Rational};

use super::{binomial, IdentityReport};
use crate::error::{Error, Result};
use crate::numeric::Field;

/// Argument vector (x_1, ..., x_n) of a Bell polynomial. `unit` is a
/// prototype value giving the precision of the result (needed for n = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct BellArgs<F> {
    values: Vec<F>,
    unit: F,
}

impl<F: Field> BellArgs<F> {
    pub fn new(values: Vec<F>, unit: &F) -> Self {
        BellArgs {
            values,
            unit: unit.one_like(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// x_i, 1-based.
    fn x(&self, i: usize) -> &F {
        &self.values[i - 1]
    }
}

impl BellArgs<Rational> {
    pub fn rational(values: Vec<Rational>) -> Self {
        BellArgs {
            values,
            unit: Rational::from(1),
        }
    }
}

fn scale_int<F: Field>(v: &F, c: &Integer) -> F {
    if *c == 1 {
        v.clone()
    } else {
        v.mul_integer(c)
    }
}

/// All complete Bell polynomials Y_0..=Y_n by Y_{n+1} = sum_k C(n,k) Y_{n-k} x_{k+1}.
pub fn bell_complete_all<F: Field>(args: &BellArgs<F>) -> Vec<F> {
    let n = args.len();
    let mut y = Vec::with_capacity(n + 1);
    y.push(args.unit.clone());
    for order in 0..n {
        let mut acc = args.unit.zero_like();
        for k in 0..=order {
            let c = binomial(order as u64, k as u64);
            acc = acc + scale_int(&(y[order - k].clone() * args.x(k + 1).clone()), &c);
        }
        y.push(acc);
    }
    y
}

/// Y_n(x_1, ..., x_n) by the binomial-convolution recursion; Y_0 = 1.
pub fn bell_complete<F: Field>(args: &BellArgs<F>) -> F {
    bell_complete_all(args).pop().expect("Y_0 always present")
}

/// Y_n as the determinant of the n x n lower-Hessenberg matrix with
/// entries C(i-1, j-1) x_{i-j+1} on and below the diagonal and -1 on the
/// superdiagonal, expanded by Gaussian elimination.
pub fn bell_determinant<F: Field>(args: &BellArgs<F>) -> F {
    let n = args.len();
    let one = args.unit.clone();
    if n == 0 {
        return one;
    }
    let zero = one.zero_like();
    let mut a: Vec<Vec<F>> = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| {
                    if j <= i {
                        scale_int(args.x(i - j + 1), &binomial((i - 1) as u64, (j - 1) as u64))
                    } else if j == i + 1 {
                        -one.clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect()
        })
        .collect();

    let mut det = one.clone();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return zero;
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det = det * pivot.clone();
        let inv = pivot.try_recip().expect("pivot is nonzero");
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() * inv.clone();
            for c in col..n {
                let v = a[r][c].clone() - factor.clone() * a[col][c].clone();
                a[r][c] = v;
            }
        }
    }
    det
}

/// Partial Bell polynomial B_{n,k}(x_1, ..., x_{n-k+1}) via
/// B_{n,k} = sum_{i=1}^{n-k+1} C(n-1, i-1) x_i B_{n-i,k-1}.
pub fn bell_partial<F: Field>(n: usize, k: usize, args: &BellArgs<F>) -> Result<F> {
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("partial Bell needs 1 <= k <= n, got n={n}, k={k}")));
    }
    if args.len() < n - k + 1 {
        return Err(Error::InvalidArgument(format!(
            "B_{{{n},{k}}} needs {} arguments, got {}",
            n - k + 1,
            args.len()
        )));
    }
    let zero = args.unit.zero_like();
    // table[j][r] = B_{r,j}
    let mut prev: Vec<F> = (0..=n).map(|r| if r == 0 { args.unit.clone() } else { zero.clone() }).collect();
    for j in 1..=k {
        let mut cur = vec![zero.clone(); n + 1];
        for r in j..=(n - (k - j)) {
            let mut acc = zero.clone();
            for i in 1..=(r + 1 - j) {
                if prev[r - i].is_zero() {
                    continue;
                }
                let c = binomial((r - 1) as u64, (i - 1) as u64);
                acc = acc + scale_int(&(args.x(i).clone() * prev[r - i].clone()), &c);
            }
            cur[r] = acc;
        }
        prev = cur;
    }
    Ok(prev[n].clone())
}

/// Checks Y_j(x + y) = sum_k C(j,k) Y_{j-k}(x) Y_k(y) exactly for every order j <= n.
pub fn bell_convolution_check(xargs: &[Rational], yargs: &[Rational]) -> Result<IdentityReport> {
    if xargs.len() != yargs.len() {
        return Err(Error::InvalidArgument("argument vectors differ in length".into()));
    }
    let n = xargs.len();
    let sum: Vec<Rational> = xargs.iter().zip(yargs).map(|(a, b)| Rational::from(a + b)).collect();
    let ys = bell_complete_all(&BellArgs::rational(sum));
    let yx = bell_complete_all(&BellArgs::rational(xargs.to_vec()));
    let yy = bell_complete_all(&BellArgs::rational(yargs.to_vec()));
    for j in 0..=n {
        let mut rhs = Rational::new();
        for k in 0..=j {
            rhs += Rational::from(&yx[j - k] * &yy[k]) * binomial(j as u64, k as u64);
        }
        if rhs != ys[j] {
            return Err(Error::identity("Bell binomial convolution", format!("order {j}")));
        }
    }
    Ok(IdentityReport {
        identity: "Bell binomial convolution",
        cases: n + 1,
    })
}

/// Bell numbers B_0..=B_n by B_{n+1} = sum_k C(n,k) B_k.
pub fn bell_numbers(n: usize) -> Vec<Integer> {
    let mut b = vec![Integer::from(1)];
    for order in 0..n {
        let next: Integer = (0..=order).map(|k| binomial(order as u64, k as u64) * &b[k]).sum();
        b.push(next);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rational_normalize, Real};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(p: i64, d: i64) -> Rational {
        rational_normalize(p, d).unwrap()
    }

    fn random_args(rng: &mut StdRng, n: usize) -> Vec<Rational> {
        (0..n).map(|_| q(rng.random_range(-20..=20), rng.random_range(1..=9))).collect()
    }

    #[test]
    fn small_orders() {
        let (x1, x2, x3) = (q(3, 2), q(-2, 5), q(7, 3));
        assert_eq!(bell_complete(&BellArgs::rational(vec![])), 1);
        assert_eq!(bell_complete(&BellArgs::rational(vec![x1.clone()])), x1);
        let y2 = Rational::from(x1.square_ref()) + &x2;
        assert_eq!(bell_complete(&BellArgs::rational(vec![x1.clone(), x2.clone()])), y2);
        assert_eq!(bell_determinant(&BellArgs::rational(vec![x1.clone(), x2.clone()])), y2);
        let y3 = x1.powi(3).unwrap() + Rational::from(&x1 * &x2) * 3 + &x3;
        let args = BellArgs::rational(vec![x1, x2, x3]);
        assert_eq!(bell_complete(&args), y3);
        assert_eq!(bell_determinant(&args), y3);
        assert_eq!(bell_determinant(&BellArgs::rational(vec![])), 1);
    }

    #[test]
    fn partial_examples() {
        let (x1, x2) = (q(5, 3), q(-4, 7));
        let args = BellArgs::rational(vec![x1.clone(), x2.clone(), q(9, 2)]);
        assert_eq!(bell_partial(3, 2, &args).unwrap(), Rational::from(&x1 * &x2) * 3);
        for n in 1..7 {
            let a = BellArgs::rational(vec![x1.clone()]);
            assert_eq!(bell_partial(n, n, &a).unwrap(), x1.powi(n as i64).unwrap());
        }
        let total: Rational = (1..=3).map(|k| bell_partial(3, k, &args).unwrap()).sum();
        assert_eq!(total, bell_complete(&args));
        assert!(bell_partial(3, 0, &args).is_err());
        assert!(bell_partial(3, 4, &args).is_err());
        assert!(bell_partial(5, 1, &args).is_err());
    }

    #[test]
    fn all_ones_gives_bell_numbers() {
        let bells = bell_numbers(12);
        for n in 0..=12 {
            let args = BellArgs::rational(vec![Rational::from(1); n]);
            assert_eq!(bell_complete(&args), bells[n]);
        }
    }

    #[test]
    fn three_routes_agree_on_random_rationals() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for n in 0..=10 {
            for _ in 0..5 {
                let args = BellArgs::rational(random_args(&mut rng, n));
                let rec = bell_complete(&args);
                assert_eq!(bell_determinant(&args), rec, "n={n}");
                if n > 0 {
                    let partial: Rational = (1..=n).map(|k| bell_partial(n, k, &args).unwrap()).sum();
                    assert_eq!(partial, rec, "n={n}");
                }
            }
        }
    }

    #[test]
    fn convolution() {
        assert_eq!(bell_convolution_check(&[], &[]).unwrap().cases, 1);
        let mut rng = StdRng::seed_from_u64(7);
        for n in 0..=8 {
            let x = random_args(&mut rng, n);
            bell_convolution_check(&x, &vec![Rational::new(); n]).unwrap();
            let y = random_args(&mut rng, n);
            bell_convolution_check(&x, &y).unwrap();
        }
        assert!(bell_convolution_check(&[q(1, 1)], &[]).is_err());
    }

    #[test]
    fn float_arguments() {
        let unit = Real::from_f64(1.0, Default::default());
        let args = BellArgs::new(vec![unit.from_i64_like(2), unit.from_i64_like(3)], &unit);
        assert_eq!(bell_complete(&args).0, 7);
        assert_eq!(bell_determinant(&args).0, 7);
    }
}
