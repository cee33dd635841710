use rug::{Integer, Rational};

/// Formal power series with exact rational coefficients, truncated after
/// `coeffs.len() - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<Rational>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        PowerSeries {
            coeffs: vec![Rational::new(); order + 1],
        }
    }

    pub fn monomial(power: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = Rational::from(1);
        }
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>, order: usize) -> Self {
        coeffs.resize(order + 1, Rational::new());
        PowerSeries { coeffs }
    }

    /// e^{a z} - 1 for integer slope a.
    pub fn exp_minus_one(slope: i64, order: usize) -> Self {
        let mut coeffs = vec![Rational::new(); order + 1];
        let mut fact = Integer::from(1);
        let mut pow = Integer::from(1);
        for (n, c) in coeffs.iter_mut().enumerate().skip(1) {
            fact *= n as u64;
            pow *= slope;
            *c = Rational::from((pow.clone(), fact.clone()));
        }
        PowerSeries { coeffs }
    }

    /// ln(1 + z).
    pub fn log_one_plus(order: usize) -> Self {
        let mut coeffs = vec![Rational::new(); order + 1];
        for (n, c) in coeffs.iter_mut().enumerate().skip(1) {
            let sign = if n % 2 == 1 { 1 } else { -1 };
            *c = Rational::from((sign, n as i64));
        }
        PowerSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &Rational {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn mul(&self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order().min(rhs.order());
        let mut out = vec![Rational::new(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.cmp0().is_eq() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] += Rational::from(a * b);
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn pow(&self, m: u32) -> PowerSeries {
        let mut acc = PowerSeries::monomial(0, self.order());
        for _ in 0..m {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, c: &Rational) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|a| Rational::from(a * c)).collect(),
        }
    }

    pub fn add(&self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order().min(rhs.order());
        PowerSeries {
            coeffs: (0..=order)
                .map(|i| Rational::from(&self.coeffs[i] + &rhs.coeffs[i]))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_squared_cubic_coefficient() {
        // ln^2(1+z) = z^2 - z^3 + 11/12 z^4 - ...
        let l2 = PowerSeries::log_one_plus(4).pow(2);
        assert_eq!(*l2.coeff(2), 1);
        assert_eq!(*l2.coeff(3), -1);
        assert_eq!(*l2.coeff(4), Rational::from((11, 12)));
    }

    #[test]
    fn exp_minus_one_squared() {
        // (e^z - 1)^2 = z^2 + z^3 + 7/12 z^4 + ...
        let e2 = PowerSeries::exp_minus_one(1, 4).pow(2);
        assert_eq!(*e2.coeff(3), 1);
        assert_eq!(*e2.coeff(4), Rational::from((7, 12)));
    }
}
