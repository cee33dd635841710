//! Tail extrapolation for slowly convergent series whose partial sums behave
//! like S - sum_{i,l} c_{il} n^(-alpha-i) ln^l n.

use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::FloatField;

pub(crate) struct TailShape<F> {
    pub alpha: F,
    /// Number of log powers in the remainder (l = 0..log_powers).
    pub log_powers: usize,
}

pub(crate) struct Acceleration<F> {
    pub value: F,
    /// |fit(J_HI) - fit(J_LO)|.
    pub fit_error: Float,
    pub terms: u64,
}

const J_LO: usize = 12;
const J_HI: usize = 14;
const RATIO: f64 = 1.04;
const FIRST_NODE: u64 = 1000;

fn node_list(n0: u64, count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let mut v = n0 as f64;
    for _ in 0..count {
        let mut n = v.round() as u64;
        if let Some(&last) = out.last() {
            n = n.max(last + 1);
        }
        out.push(n);
        v *= RATIO;
    }
    out
}

/// Solves the square system and returns the first unknown.
fn solve_first<F: FloatField>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Result<F> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].modulus().partial_cmp(&a[j][col].modulus()).expect("finite"))
            .expect("nonempty");
        if a[pivot][col].is_zero() {
            return Err(Error::NoConvergence("singular extrapolation system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].try_recip()?;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() * inv.clone();
            for c in col + 1..n {
                let v = a[r][c].clone() - factor.clone() * a[col][c].clone();
                a[r][c] = v;
            }
            b[r] = b[r].clone() - factor * b[col].clone();
        }
    }
    let mut x: Vec<F> = vec![b[0].zero_like(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc.try_div(&a[r][r])?;
    }
    Ok(x.swap_remove(0))
}

fn fit<F: FloatField>(nodes: &[u64], partials: &[F], shape: &TailShape<F>, j: usize, n0: u64) -> Result<F> {
    let count = 1 + (j + 1) * shape.log_powers;
    let prec = shape.alpha.prec();
    let mut rows = Vec::with_capacity(count);
    for &n in &nodes[..count] {
        let r = Float::with_val(prec, n) / Float::with_val(prec, n0);
        let ln_r = Float::with_val(prec, r.ln_ref());
        let inv_r = Float::with_val(prec, r.recip_ref());
        let mut row = Vec::with_capacity(count);
        row.push(shape.alpha.one_like());
        let mut pw = (-shape.alpha.scale(&ln_r)).exp();
        for _ in 0..=j {
            let mut t = pw.clone();
            for _ in 0..shape.log_powers {
                row.push(t.clone());
                t = t.scale(&ln_r);
            }
            pw = pw.scale(&inv_r);
        }
        rows.push(row);
    }
    solve_first(rows, partials[..count].to_vec())
}

/// Sums `term(start), term(start+1), ...` and extrapolates the partial sums,
/// pushing the node window outward until two fit orders agree to `tol`.
pub(crate) fn accelerate<F: FloatField>(
    mut term: impl FnMut(u64) -> Result<F>,
    start: u64,
    shape: &TailShape<F>,
    tol: f64,
    max_terms: u64,
) -> Result<Acceleration<F>> {
    let count = 1 + (J_HI + 1) * shape.log_powers;
    let mut n0 = FIRST_NODE.max(start + 1);
    let mut sum = shape.alpha.zero_like();
    let mut next = start;
    let mut recorded: Vec<(u64, F)> = Vec::new();
    loop {
        let nodes = node_list(n0, count);
        let last = *nodes.last().expect("nonempty");
        if last > max_terms {
            return Err(Error::NoConvergence(format!(
                "series extrapolation needs more than {max_terms} terms"
            )));
        }
        while next <= last {
            sum = sum + term(next)?;
            recorded.push((next, sum.clone()));
            next += 1;
        }
        let partials: Vec<F> = nodes
            .iter()
            .map(|n| recorded[(n - start) as usize].1.clone())
            .collect();
        let hi = fit(&nodes, &partials, shape, J_HI, n0)?;
        let lo = fit(&nodes, &partials, shape, J_LO, n0)?;
        let fit_error = (hi.clone() - lo).modulus();
        let scale = hi.modulus();
        if fit_error <= Float::with_val(scale.prec(), &scale * tol) {
            return Ok(Acceleration {
                value: hi,
                fit_error,
                terms: last + 1 - start,
            });
        }
        n0 *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Field, PrecisionContext, Real};
    use rug::ops::Pow;

    #[test]
    fn zeta_three_by_extrapolation() {
        let ctx = PrecisionContext::new(320).unwrap();
        // sum 1/k^3, remainder ~ n^-2
        let shape = TailShape {
            alpha: Real::from_f64(2.0, ctx),
            log_powers: 1,
        };
        let cube = |k: u64| Real(Float::with_val(320, k).pow(3u32)).try_recip();
        let acc = accelerate(cube, 1, &shape, 1e-30, 100_000).unwrap();
        let exact = crate::special::zeta_mpfr(3, 320);
        let err = Float::with_val(320, &acc.value.0 - &exact).abs();
        assert!(err < 1e-35, "{err}");
        assert!(acc.fit_error < 1e-30);
    }

    #[test]
    fn node_window_limit() {
        let ctx = PrecisionContext::new(128).unwrap();
        let shape = TailShape {
            alpha: Real::from_f64(1.0, ctx),
            log_powers: 1,
        };
        let r = accelerate(|_| Ok(Real::from_f64(1.0, ctx)), 0, &shape, 1e-20, 500);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }
}
