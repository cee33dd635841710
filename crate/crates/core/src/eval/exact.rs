use rug::Rational;

use crate::combinatorics::{bell_complete, binomial, factorial, pochhammer, BellArgs};
use crate::error::{Error, Result};
use crate::numeric::Field;
use crate::special::g_derivatives;

fn pole_check<F: Field>(x: &F, n: u64) -> Result<()> {
    for k in 0..=n {
        if x.add_i64(k as i64).is_zero() {
            return Err(Error::Pole(format!("x + {k} = 0")));
        }
    }
    Ok(())
}

/// sum_{k=0..N} C(N,k) (-1)^k (x+k)^-m. m = 0 gives the binomial-theorem value.
pub fn direct_sum<F: Field>(x: &F, n: u64, m: u32) -> Result<F> {
    pole_check(x, n)?;
    if m == 0 {
        return Ok(x.from_i64_like(i64::from(n == 0)));
    }
    let mut acc = x.zero_like();
    for k in 0..=n {
        let term = x.add_i64(k as i64).powi(-i64::from(m))?.mul_integer(&binomial(n, k));
        acc = if k % 2 == 0 { acc + term } else { acc - term };
    }
    Ok(acc)
}

/// x^-m times the terminating (m+1)F_m(x..x, -N; x+1..x+1; 1), summed by the
/// term ratio [(x+k)/(x+k+1)]^m (k-N)/(k+1).
pub fn hypergeometric_sum<F: Field>(x: &F, n: u64, m: u32) -> Result<F> {
    pole_check(x, n)?;
    let mut term = x.powi(-i64::from(m))?;
    let mut acc = term.clone();
    for k in 0..n {
        let ratio = x.add_i64(k as i64).try_div(&x.add_i64(k as i64 + 1))?;
        let factor = ratio.powi(i64::from(m))?;
        let c = x.from_rational_like(&Rational::from((k as i64 - n as i64, k as i64 + 1)));
        term = term * factor * c;
        acc = acc + term.clone();
    }
    Ok(acc)
}

/// N!/(x)_{N+1} = B(x, N+1), the m = 1 sum.
pub fn beta_identity<F: Field>(x: &F, n: u64) -> Result<F> {
    pole_check(x, n)?;
    x.from_integer_like(&factorial(n)).try_div(&pochhammer(x, n + 1))
}

/// f Y_j[g, g', ..., g^(j-1)] for j = 0..=jmax, with f = N!/(x)_{N+1}: the
/// derivatives (d/dx)^j f by the Bell-polynomial form of Faa di Bruno.
pub fn lemma1_derivatives<F: Field>(x: &F, n: u64, jmax: usize) -> Result<Vec<F>> {
    let f = beta_identity(x, n)?;
    let g = if jmax == 0 {
        Vec::new()
    } else {
        g_derivatives(x, n, jmax - 1)?.values
    };
    Ok((0..=jmax)
        .map(|j| f.clone() * bell_complete(&BellArgs::new(g[..j].to_vec(), x)))
        .collect())
}

/// (-1)^(m-1)/(m-1)! f(x) Y_{m-1}[g(x), ..., g^(m-2)(x)].
pub fn bell_form<F: Field>(x: &F, n: u64, m: u32) -> Result<F> {
    if m == 0 {
        return Err(Error::InvalidArgument("bell form needs m >= 1".into()));
    }
    let j = m as usize - 1;
    let deriv = lemma1_derivatives(x, n, j)?.pop().expect("nonempty");
    let c = x.from_rational_like(&Rational::from((1, factorial(j as u64))));
    let v = deriv * c;
    Ok(if j % 2 == 1 { -v } else { v })
}

/// Table T[j][k] = S(x+j, N-j, k) from
/// S(x,N,m) = [S(x,N,m-1) + N S(x+1,N-1,m)] / x with bases m = 1 (Beta) and N = 0.
fn recursion_a_table<F: Field>(x: &F, n: u64, m: u32) -> Result<Vec<Vec<F>>> {
    pole_check(x, n)?;
    let n_us = n as usize;
    let m_us = m as usize;
    let mut t: Vec<Vec<F>> = vec![Vec::with_capacity(m_us + 1); n_us + 1];
    for j in (0..=n_us).rev() {
        let xj = x.add_i64(j as i64);
        let nj = n - j as u64;
        let inv = xj.try_recip()?;
        let mut row = vec![x.zero_like(); m_us + 1];
        row[0] = x.from_i64_like(i64::from(nj == 0));
        for k in 1..=m_us {
            row[k] = if nj == 0 {
                inv.powi(k as i64)?
            } else if k == 1 {
                beta_identity(&xj, nj)?
            } else {
                (row[k - 1].clone() + t[j + 1][k].clone().mul_i64(nj as i64)) * inv.clone()
            };
        }
        t[j] = row;
    }
    Ok(t)
}

/// Integration-by-parts recursion in (N, m), valid for Re x > 0.
pub fn recursion_a<F: Field>(x: &F, n: u64, m: u32) -> Result<(F, u64)> {
    if m == 0 {
        return Ok((x.from_i64_like(i64::from(n == 0)), 1));
    }
    let t = recursion_a_table(x, n, m)?;
    Ok((t[0][m as usize].clone(), (n + 1) * u64::from(m)))
}

/// One step of S(x,N,m) = [S(x,N,m-1) + N S(x-1,N-1,m)] / x with the inner
/// sums taken from the direct sum.
pub fn recursion_a_printed_step(x: &Rational, n: u64, m: u32) -> Result<Rational> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("needs N >= 1 and m >= 1".into()));
    }
    let a = direct_sum(x, n, m - 1)?;
    let b = direct_sum(&x.add_i64(-1), n - 1, m)?;
    (a + b.mul_i64(n as i64)).try_div(x)
}

/// S(x,N,m) = [(x-1) S(x-1,N+1,m) - S(x-1,N+1,m-1)] / (N+1), applied while
/// Re(x - j) > 1; the remaining sums come from Beta (m = 1) and recursion a.
pub fn recursion_b<F: Field>(x: &F, n: u64, m: u32) -> Result<(F, u64)> {
    if m == 0 {
        return Ok((x.from_i64_like(i64::from(n == 0)), 1));
    }
    pole_check(x, n)?;
    let mut shifts = 0u64;
    while shift_re_above_one(x, shifts) {
        shifts += 1;
    }
    if shifts == 0 {
        return Err(Error::InvalidArgument("recursion-b needs Re x > 1".into()));
    }
    let m_us = m as usize;
    // row[k] = S(x - j, N + j, k) for the current j, starting at j = shifts
    let xs = x.add_i64(-(shifts as i64));
    let base = recursion_a_table(&xs, n + shifts, m)?;
    let mut row = base[0].clone();
    let mut terms = (n + shifts + 1) * u64::from(m);
    for j in (0..shifts).rev() {
        let xj = x.add_i64(-(j as i64));
        let nj = n + j;
        let denom = x.from_i64_like(nj as i64 + 1).try_recip()?;
        let mut next = vec![x.zero_like(); m_us + 1];
        next[0] = x.from_i64_like(i64::from(nj == 0));
        next[1] = beta_identity(&xj, nj)?;
        for k in 2..=m_us {
            next[k] = (xj.add_i64(-1) * row[k].clone() - row[k - 1].clone()) * denom.clone();
            terms += 1;
        }
        row = next;
    }
    Ok((row[m_us].clone(), terms))
}

fn shift_re_above_one<F: Field>(x: &F, j: u64) -> bool {
    let s = x.add_i64(-(j as i64)).into_scalar();
    s.re(64) > 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rational_normalize, PrecisionContext, Real};

    fn q(p: i64, d: i64) -> Rational {
        rational_normalize(p, d).unwrap()
    }

    #[test]
    fn direct_examples() {
        assert_eq!(direct_sum(&q(1, 1), 1, 1).unwrap(), q(1, 2));
        assert_eq!(direct_sum(&q(1, 1), 2, 2).unwrap(), q(11, 18));
        assert_eq!(direct_sum(&q(1, 2), 1, 1).unwrap(), q(4, 3));
        assert_eq!(direct_sum(&q(3, 7), 0, 3).unwrap(), q(343, 27));
        assert_eq!(direct_sum(&q(3, 7), 4, 0).unwrap(), 0);
        assert_eq!(direct_sum(&q(3, 7), 0, 0).unwrap(), 1);
        assert!(matches!(direct_sum(&q(-2, 1), 3, 1), Err(Error::Pole(_))));
    }

    #[test]
    fn hypergeometric_examples() {
        assert_eq!(hypergeometric_sum(&q(2, 1), 1, 1).unwrap(), q(1, 6));
        assert_eq!(hypergeometric_sum(&q(1, 1), 2, 2).unwrap(), q(11, 18));
    }

    #[test]
    fn beta_examples() {
        for n in 1..10 {
            assert_eq!(beta_identity(&q(1, 1), n).unwrap(), q(1, n as i64 + 1));
        }
        assert_eq!(beta_identity(&q(1, 2), 1).unwrap(), q(4, 3));
    }

    #[test]
    fn bell_examples() {
        assert_eq!(bell_form(&q(1, 1), 2, 2).unwrap(), q(11, 18));
        assert_eq!(bell_form(&q(3, 2), 1, 2).unwrap(), q(64, 225));
        assert_eq!(bell_form(&q(5, 3), 4, 1).unwrap(), beta_identity(&q(5, 3), 4).unwrap());
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(recursion_b(&q(2, 1), 1, 2).unwrap().0, q(5, 36));
        assert_eq!(recursion_a(&q(2, 1), 2, 2).unwrap().0, q(13, 144));
        assert_eq!(recursion_a(&q(3, 5), 4, 1).unwrap().0, beta_identity(&q(3, 5), 4).unwrap());
        assert_eq!(recursion_a_printed_step(&q(2, 1), 2, 2).unwrap(), q(19, 24));
        assert!(recursion_b(&q(1, 1), 2, 2).is_err());
    }

    #[test]
    fn methods_agree_on_grid() {
        for x in [q(1, 1), q(2, 1), q(1, 2), q(3, 2), q(7, 3), q(-1, 2), q(-7, 2)] {
            for n in 1..=12u64 {
                for m in 1..=5u32 {
                    let Ok(d) = direct_sum(&x, n, m) else { continue };
                    assert_eq!(hypergeometric_sum(&x, n, m).unwrap(), d, "x={x} N={n} m={m}");
                    assert_eq!(bell_form(&x, n, m).unwrap(), d);
                    if x > 0 {
                        assert_eq!(recursion_a(&x, n, m).unwrap().0, d);
                    }
                    if x > 1 {
                        assert_eq!(recursion_b(&x, n, m).unwrap().0, d);
                    }
                }
            }
        }
    }

    #[test]
    fn special_case_x_one_arguments() {
        // at x = 1: g^(l)(1) = -(-1)^l l! H_{N+1}^(l+1)
        for n in 1..=20u64 {
            let g = g_derivatives(&q(1, 1), n, 5).unwrap().values;
            for (l, gl) in g.iter().enumerate() {
                let h = crate::special::harmonic(n + 1, l as u32 + 1).unwrap().value;
                let mut expect = h * Rational::from(factorial(l as u64));
                if l % 2 == 0 {
                    expect = -expect;
                }
                assert_eq!(*gl, expect);
            }
        }
    }

    #[test]
    fn float_and_exact_agree() {
        let ctx = PrecisionContext::new(256).unwrap();
        let x = q(7, 3);
        let xr = Real::from_rational(&x, ctx);
        let exact = direct_sum(&x, 9, 4).unwrap();
        for v in [direct_sum(&xr, 9, 4).unwrap(), bell_form(&xr, 9, 4).unwrap(), recursion_b(&xr, 9, 4).unwrap().0] {
            let e = Real::from_rational(&exact, ctx);
            let d = (v - e.clone()).0.abs() / e.0.abs();
            assert!(d < 1e-70);
        }
    }
}
