//! Coefficient weights `w_n` of a weighted analytic Hilbert space.
//!
//! A radial weight `ω` on `[0, 1)` gives the norm
//! `‖f‖² = |f(0)|² + ∫_D |f'|² ω dA`, and for `f = Σ b_n zⁿ` this is
//! `Σ |b_n|² w_n` with `w_0 = 1` and `w_n = 2n² ∫₀¹ r^{2n−1} ω(r) dr`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use statrs::function::beta::ln_beta;
use thiserror::Error;

use crate::quad;

/// Relative tolerance for the radial-weight quadrature.
pub const QUAD_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("alpha must be > -1, got {0}")]
    AlphaOutOfRange(f64),
    #[error("n_max must be at least 1")]
    EmptyRange,
    #[error("radial weight is not strictly positive and finite at r = {0}")]
    NonPositiveWeight(f64),
    #[error("quadrature for w_{n} did not converge after {intervals} subintervals")]
    QuadratureDiverged { n: usize, intervals: usize },
    #[error("radial weight is not integrable on [0, 1)")]
    NotIntegrable,
    #[error("cannot parse weight spec `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalKind {
    Hardy,
    Bergman,
    Dirichlet,
}

/// A positive continuous weight on `[0, 1)`.
#[derive(Clone)]
pub struct RadialWeight {
    pub name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RadialWeight {
    pub fn new(name: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.func)(r)
    }
}

impl fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialWeight")
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum WeightSpec {
    /// `ω(r) = (1 − r²)^α`, `α > −1`.
    Alpha(f64),
    /// Sequence-defined norms: Hardy `w_n = 1`, Bergman `1/(n+1)`, Dirichlet `n`.
    Classical(ClassicalKind),
    CustomRadial(RadialWeight),
}

impl WeightSpec {
    pub fn alpha(alpha: f64) -> Result<Self, WeightError> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(WeightError::AlphaOutOfRange(alpha));
        }
        Ok(WeightSpec::Alpha(alpha))
    }

    pub fn hardy() -> Self {
        WeightSpec::Classical(ClassicalKind::Hardy)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        match self {
            WeightSpec::Alpha(a) if !(*a > -1.0) || !a.is_finite() => {
                Err(WeightError::AlphaOutOfRange(*a))
            }
            WeightSpec::CustomRadial(w) => {
                // positivity on a probe grid; integrability is checked by quadrature
                for i in 0..=256 {
                    let r = i as f64 / 256.0 * (1.0 - 1e-9);
                    let v = w.eval(r);
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(WeightError::NonPositiveWeight(r));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `w_n` for a single index, without building the whole table.
    pub fn weight(&self, n: usize) -> Result<f64, WeightError> {
        match self {
            WeightSpec::Classical(kind) => Ok(match kind {
                ClassicalKind::Hardy => 1.0,
                ClassicalKind::Bergman => 1.0 / (n as f64 + 1.0),
                ClassicalKind::Dirichlet => {
                    if n == 0 {
                        1.0
                    } else {
                        n as f64
                    }
                }
            }),
            _ if n == 0 => Ok(1.0),
            WeightSpec::Alpha(alpha) => {
                let nf = n as f64;
                Ok((2.0 * nf.ln() + ln_beta(nf, alpha + 1.0)).exp())
            }
            WeightSpec::CustomRadial(w) => radial_weight_by_quadrature(w, n),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Alpha(a) => write!(f, "alpha({a})"),
            WeightSpec::Classical(ClassicalKind::Hardy) => write!(f, "hardy"),
            WeightSpec::Classical(ClassicalKind::Bergman) => write!(f, "bergman"),
            WeightSpec::Classical(ClassicalKind::Dirichlet) => write!(f, "dirichlet"),
            WeightSpec::CustomRadial(w) => write!(f, "radial({})", w.name),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = WeightError;

    /// Accepts `hardy`, `bergman`, `dirichlet` and `alpha(<real>)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "hardy" => return Ok(WeightSpec::Classical(ClassicalKind::Hardy)),
            "bergman" => return Ok(WeightSpec::Classical(ClassicalKind::Bergman)),
            "dirichlet" => return Ok(WeightSpec::Classical(ClassicalKind::Dirichlet)),
            _ => {}
        }
        let inner = t
            .strip_prefix("alpha(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| WeightError::Parse(s.to_string()))?;
        let alpha: f64 = inner
            .trim()
            .parse()
            .map_err(|_| WeightError::Parse(s.to_string()))?;
        WeightSpec::alpha(alpha)
    }
}

fn radial_weight_by_quadrature(w: &RadialWeight, n: usize) -> Result<f64, WeightError> {
    let nf = n as f64;
    // geometric breakpoints toward r = 1, where r^{2n-1} ω(r) concentrates;
    // [1 − 2^{-52}, 1) is below double resolution and is dropped
    let mut bounds = vec![0.0];
    bounds.extend((1..=52).map(|k| 1.0 - 0.5f64.powi(k)));
    let exponent = 2 * n as i32 - 1;
    let integral = quad::adaptive(
        |r| r.powi(exponent) * w.eval(r),
        &bounds,
        QUAD_REL_TOL,
        200_000,
    )
    .map_err(|e| WeightError::QuadratureDiverged {
        n,
        intervals: e.intervals,
    })?;
    if !integral.is_finite() || integral <= 0.0 {
        return Err(WeightError::NotIntegrable);
    }
    Ok(2.0 * nf * nf * integral)
}

/// The table `w_0..=w_{n_max}` for a weight spec.
#[derive(Debug, Clone)]
pub struct CoefWeights {
    pub spec: WeightSpec,
    values: Vec<f64>,
}

impl CoefWeights {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// Rows `n,w_n` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,w_n\n");
        for (n, w) in self.values.iter().enumerate() {
            out.push_str(&format!("{n},{w:.17e}\n"));
        }
        out
    }
}

/// Build `w_0..=w_{n_max}`.
pub fn coef_weights(spec: &WeightSpec, n_max: usize) -> Result<CoefWeights, WeightError> {
    if n_max < 1 {
        return Err(WeightError::EmptyRange);
    }
    spec.validate()?;
    let values = (0..=n_max)
        .map(|n| spec.weight(n))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = values.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(WeightError::NonPositiveWeight(r as f64));
    }
    Ok(CoefWeights {
        spec: spec.clone(),
        values,
    })
}

/// Empirical constants in `δ_ε e^{−εn} ≤ w_n ≤ C n²` over `1 ≤ n ≤ n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizBounds {
    pub delta: f64,
    pub c: f64,
    pub ok: bool,
}

pub fn check_siz_bounds(weights: &CoefWeights, eps: f64) -> SizBounds {
    let mut c = 0.0f64;
    let mut delta = f64::INFINITY;
    for (n, &w) in weights.values.iter().enumerate().skip(1) {
        let nf = n as f64;
        c = c.max(w / (nf * nf));
        delta = delta.min(w * (eps * nf).exp());
    }
    let ok = c.is_finite() && c > 0.0 && delta.is_finite() && delta > 0.0;
    SizBounds { delta, c, ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha_radial(alpha: f64) -> WeightSpec {
        WeightSpec::CustomRadial(RadialWeight::new(
            format!("(1-r^2)^{alpha}"),
            move |r: f64| (1.0 - r * r).powf(alpha),
        ))
    }

    #[test]
    fn alpha_one_first_weight_is_half() {
        let w = coef_weights(&WeightSpec::Alpha(1.0), 4).unwrap();
        assert!((w.get(1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn alpha_zero_is_dirichlet_like() {
        let w = coef_weights(&WeightSpec::Alpha(0.0), 8).unwrap();
        assert!((w.get(5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn w0_is_one_for_integral_weights() {
        for spec in [WeightSpec::Alpha(0.3), alpha_radial(2.0)] {
            let w = coef_weights(&spec, 2).unwrap();
            assert_eq!(w.get(0), 1.0);
        }
    }

    #[test]
    fn classical_sequences() {
        let h = coef_weights(&"hardy".parse().unwrap(), 5).unwrap();
        assert!(h.values().iter().all(|&v| v == 1.0));
        let b = coef_weights(&"bergman".parse().unwrap(), 5).unwrap();
        assert_eq!(b.get(3), 0.25);
        let d = coef_weights(&"dirichlet".parse().unwrap(), 5).unwrap();
        assert_eq!(d.get(0), 1.0);
        assert_eq!(d.get(4), 4.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for (alpha, tol) in [
            (0.0, 1e-10),
            (1.0, 1e-10),
            (2.0, 1e-10),
            (3.5, 1e-10),
            (-0.5, 1e-6),
        ] {
            let closed = coef_weights(&WeightSpec::Alpha(alpha), 200).unwrap();
            let quad = coef_weights(&alpha_radial(alpha), 200).unwrap();
            for n in 0..=200 {
                let rel = (closed.get(n) - quad.get(n)).abs() / closed.get(n);
                assert!(rel < tol, "alpha={alpha} n={n} rel={rel}");
            }
        }
    }

    #[test]
    fn alpha_weights_scale_like_power() {
        for alpha in [0.0, 1.0, 2.0, 0.5] {
            let n_max = 400;
            let w = coef_weights(&WeightSpec::Alpha(alpha), n_max).unwrap();
            let ratio = |n: usize| w.get(n) / (n as f64).powf(1.0 - alpha);
            let r = ratio(n_max / 2) / ratio(n_max);
            assert!((r - 1.0).abs() < 0.05, "alpha={alpha} r={r}");
        }
    }

    #[test]
    fn large_index_stays_finite() {
        let w = coef_weights(&WeightSpec::Alpha(2.0), 10_000).unwrap();
        let n = 10_000.0;
        assert!((w.get(10_000) - 2.0 * n / ((n + 1.0) * (n + 2.0))).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(
            WeightSpec::alpha(-1.0).unwrap_err(),
            WeightError::AlphaOutOfRange(-1.0)
        );
        assert!(coef_weights(&WeightSpec::Alpha(-2.0), 3).is_err());
        assert_eq!(
            coef_weights(&WeightSpec::hardy(), 0).unwrap_err(),
            WeightError::EmptyRange
        );
        let neg = WeightSpec::CustomRadial(RadialWeight::new("neg", |r: f64| r - 0.5));
        assert!(matches!(
            coef_weights(&neg, 3),
            Err(WeightError::NonPositiveWeight(_))
        ));
        assert!("alpha(x)".parse::<WeightSpec>().is_err());
        assert!("sobolev".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn siz_bounds_examples() {
        let hardy = coef_weights(&WeightSpec::hardy(), 100).unwrap();
        let b = check_siz_bounds(&hardy, 0.1);
        assert!(b.ok && b.c >= 1.0 - 1e-15);

        let dirichlet = coef_weights(&WeightSpec::Alpha(0.0), 100).unwrap();
        let b = check_siz_bounds(&dirichlet, 0.5);
        assert!(b.ok);
        assert!((b.c - 1.0).abs() < 1e-12);

        let bergman = coef_weights(&WeightSpec::Alpha(2.0), 500).unwrap();
        let b = check_siz_bounds(&bergman, 0.01);
        assert!(b.ok && b.delta > 0.0);
    }

    #[test]
    fn csv_dump() {
        let w = coef_weights(&WeightSpec::hardy(), 2).unwrap();
        let csv = w.to_csv();
        assert!(csv.starts_with("n,w_n\n0,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
