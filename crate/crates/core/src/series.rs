//! Truncated power series with complex coefficients.

use num_complex::Complex64;

/// Coefficients `c_0..c_{N−1}` of a series taken modulo `z^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<Complex64>,
}

impl PowerSeries {
    pub fn new(mut coeffs: Vec<Complex64>, order: usize) -> Self {
        coeffs.resize(order, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64], order: usize) -> Self {
        Self::new(
            coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            order,
        )
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    /// The series of `z` itself.
    pub fn identity(order: usize) -> Self {
        Self::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            order,
        )
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_constant(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        if let Some(c0) = out.coeffs.first_mut() {
            *c0 += c;
        }
        out
    }

    /// Product modulo `z^N`, `N` = this series' order.
    pub fn mul_trunc(&self, other: &PowerSeries) -> PowerSeries {
        let n = self.order();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in other.coeffs.iter().take(n - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Quotient modulo `z^N`; `None` if the divisor vanishes at 0.
    pub fn div_trunc(&self, den: &PowerSeries) -> Option<PowerSeries> {
        let d0 = den.coeff(0);
        if d0.norm() == 0.0 {
            return None;
        }
        let n = self.order();
        let mut q = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = self.coeff(k);
            for j in 1..=k.min(den.order().saturating_sub(1)) {
                acc -= den.coeffs[j] * q[k - j];
            }
            q[k] = acc / d0;
        }
        Some(PowerSeries { coeffs: q })
    }

    /// Horner evaluation of the truncated series.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `Σ p_k s^k` for polynomial coefficients `p`, modulo `z^N`.
    pub fn compose_polynomial(&self, p: &[Complex64]) -> PowerSeries {
        let n = self.order();
        let mut acc = PowerSeries::constant(Complex64::new(0.0, 0.0), n);
        for &c in p.iter().rev() {
            acc = acc.mul_trunc(self).add_constant(c);
        }
        acc
    }
}

/// `s^k mod z^N` by binary exponentiation.
pub fn series_pow(s: &PowerSeries, k: u32, order: usize) -> PowerSeries {
    let mut base = PowerSeries::new(s.coeffs().to_vec(), order);
    let mut result = PowerSeries::constant(Complex64::new(1.0, 0.0), order);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.mul_trunc(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul_trunc(&base);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &PowerSeries, b: &[f64], tol: f64) -> bool {
        a.order() == b.len()
            && a.coeffs()
                .iter()
                .zip(b)
                .all(|(x, &y)| (x.re - y).abs() <= tol && x.im.abs() <= tol)
    }

    #[test]
    fn pow_of_affine() {
        let s = PowerSeries::from_real(&[0.4, 0.3], 3);
        assert!(close(&series_pow(&s, 2, 3), &[0.16, 0.24, 0.09], 1e-15));
    }

    #[test]
    fn pow_zero_is_one() {
        let s = PowerSeries::from_real(&[0.1, 0.2, 0.3], 4);
        assert!(close(&series_pow(&s, 0, 4), &[1.0, 0.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn pow_of_monomial() {
        let a = 0.7;
        let s = PowerSeries::from_real(&[0.0, a], 8);
        let p = series_pow(&s, 5, 8);
        for j in 0..8 {
            let want = if j == 5 { a.powi(5) } else { 0.0 };
            assert!((p.coeff(j).re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = PowerSeries::from_real(&[1.0, -0.5, 0.25], 6);
        let b = PowerSeries::from_real(&[2.0, 0.3], 6);
        let q = a.mul_trunc(&b).div_trunc(&b).unwrap();
        for j in 0..6 {
            assert!((q.coeff(j) - a.coeff(j)).norm() < 1e-14);
        }
        assert!(a.div_trunc(&PowerSeries::identity(6)).is_none());
    }

    #[test]
    fn compose_polynomial_matches_pointwise() {
        let s = PowerSeries::from_real(&[0.1, 0.5], 12);
        let p = [
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.0),
        ];
        let c = s.compose_polynomial(&p);
        let z = Complex64::new(0.3, -0.2);
        let w = s.eval(z);
        let direct = p[0] + p[1] * w + p[2] * w * w;
        assert!((c.eval(z) - direct).norm() < 1e-14);
    }
}
