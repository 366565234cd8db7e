//! Truncated matrices of composition operators and their singular values.
//!
//! In the orthonormal basis `e_k = z^k / √w_k` the operator `f ↦ f ∘ φ`
//! has entries `A_{j,k} = c_{j,k} √(w_j / w_k)` where `c_{j,k}` is the
//! `j`-th Taylor coefficient of `φ^k`. The approximation numbers are the
//! singular values, with `a_1 = ‖A‖`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::PowerSeries;
use crate::symbols::{space_norm, sup_norm, Symbol, SymbolError};
use crate::weights::{coef_weights, CoefWeights, WeightError, WeightSpec};

pub const DEFAULT_ORDER: usize = 128;
pub const MAX_ORDER: usize = 1024;
/// Singular values below this are reported as exact zeros.
pub const ZERO_CLAMP: f64 = 1e-300;
/// Fit window on the values of `a_n`.
pub const WINDOW_HIGH: f64 = 1e-2;
pub const WINDOW_LOW: f64 = 1e-10;
/// Minimum number of points in the fit window.
pub const MIN_WINDOW: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("truncation order {0} is below the minimum of 8")]
    OrderTooSmall(usize),
    #[error("weight table has n_max = {have}, need at least {need}")]
    WeightsTooShort { have: usize, need: usize },
    #[error("sup norm {0} is not < 1; matrix entries are unbounded")]
    NotCompactSymbol(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("SVD did not converge")]
    SvdNotConverged,
    #[error("fit window holds {found} values (need {MIN_WINDOW}); change N or precision")]
    WindowTooSmall { found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone)]
pub enum MatrixData {
    /// Symbols with real Taylor coefficients.
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

#[derive(Debug, Clone)]
pub struct CompositionMatrix {
    pub data: MatrixData,
    pub order: usize,
    pub symbol: String,
    pub weights: String,
}

impl CompositionMatrix {
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        match &self.data {
            MatrixData::Real(m) => Complex64::new(m[(j, k)], 0.0),
            MatrixData::Complex(m) => m[(j, k)],
        }
    }
}

/// Columns `c_{·,k}` for `k < order`, i.e. the series of `φ^k`.
pub fn power_columns(series: &PowerSeries) -> Vec<PowerSeries> {
    let n = series.order();
    let mut cols = Vec::with_capacity(n);
    let mut cur = PowerSeries::constant(Complex64::new(1.0, 0.0), n);
    for _ in 0..n {
        let next = cur.mul_trunc(series);
        cols.push(cur);
        cur = next;
    }
    cols
}

pub fn assemble_matrix(
    symbol: &Symbol,
    weights: &CoefWeights,
    order: usize,
) -> Result<CompositionMatrix, OperatorError> {
    if order < 8 {
        return Err(OperatorError::OrderTooSmall(order));
    }
    if weights.n_max() + 1 < order {
        return Err(OperatorError::WeightsTooShort {
            have: weights.n_max(),
            need: order - 1,
        });
    }
    let rho = sup_norm(symbol, 1024);
    if !(rho < 1.0) {
        return Err(OperatorError::NotCompactSymbol(rho));
    }
    let series = symbol.taylor(order)?;
    let cols = power_columns(&series);
    let sqrt_w: Vec<f64> = weights.values()[..order].iter().map(|w| w.sqrt()).collect();
    let entry = |j: usize, k: usize| cols[k].coeff(j) * (sqrt_w[j] / sqrt_w[k]);
    let data = if series.is_real() {
        MatrixData::Real(DMatrix::from_fn(order, order, |j, k| entry(j, k).re))
    } else {
        MatrixData::Complex(DMatrix::from_fn(order, order, entry))
    };
    let finite = match &data {
        MatrixData::Real(m) => m.iter().all(|x| x.is_finite()),
        MatrixData::Complex(m) => m.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
    };
    if !finite {
        return Err(OperatorError::NonFinite);
    }
    Ok(CompositionMatrix {
        data,
        order,
        symbol: symbol.to_string(),
        weights: weights.spec.to_string(),
    })
}

/// Descending singular values; `a_n = values[n − 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < ZERO_CLAMP {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    /// `a_n`, 1-based.
    pub fn a(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rows `n,a_n,log_a_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,log_a_n\n");
        for (i, &a) in self.values.iter().enumerate() {
            let log = if a > 0.0 {
                format!("{:.17e}", a.ln())
            } else {
                "-inf".into()
            };
            out.push_str(&format!("{},{:.17e},{}\n", i + 1, a, log));
        }
        out
    }
}

const SVD_MAX_ITER: usize = 10_000;

pub fn approximation_numbers(m: &CompositionMatrix) -> Result<SingularSpectrum, OperatorError> {
    let values: Vec<f64> = match &m.data {
        MatrixData::Real(a) => a
            .clone()
            .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
            .ok_or(OperatorError::SvdNotConverged)?
            .singular_values
            .iter()
            .copied()
            .collect(),
        MatrixData::Complex(a) => a
            .clone()
            .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
            .ok_or(OperatorError::SvdNotConverged)?
            .singular_values
            .iter()
            .copied()
            .collect(),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(OperatorError::NonFinite);
    }
    Ok(SingularSpectrum::new(values))
}

/// Singular values of an arbitrary real matrix, same conventions.
pub fn singular_values_of(a: &DMatrix<f64>) -> Result<SingularSpectrum, OperatorError> {
    let svd = a
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(OperatorError::SvdNotConverged)?;
    Ok(SingularSpectrum::new(
        svd.singular_values.iter().copied().collect(),
    ))
}

/// Upper bound on the operator-norm contribution of the columns `k ≥ order`,
/// `Σ_{k≥N} w_k^{−1/2} ρ^k √(1 + k²ρ^{−2}) ‖φ‖_ω`. Terms are summed until
/// their ratio settles below 1 and the remainder is closed by a geometric series.
pub fn truncation_tail_bound(
    symbol: &Symbol,
    weights: &CoefWeights,
    order: usize,
) -> Result<f64, OperatorError> {
    let rho = sup_norm(symbol, 1024);
    if !(rho < 1.0) {
        return Err(OperatorError::NotCompactSymbol(rho));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let norm = space_norm(symbol, weights, None)?;
    let weight = |k: usize| -> Result<f64, OperatorError> {
        if k <= weights.n_max() {
            Ok(weights.get(k))
        } else {
            Ok(weights.spec.weight(k)?)
        }
    };
    let log_term = |k: usize, w: f64| {
        let kf = k as f64;
        -0.5 * w.ln() + kf * rho.ln() + 0.5 * (1.0 + kf * kf / (rho * rho)).ln()
    };
    let mut sum = 0.0;
    let mut k = order;
    let mut prev = log_term(k, weight(k)?);
    sum += prev.exp();
    loop {
        k += 1;
        let cur = log_term(k, weight(k)?);
        sum += cur.exp();
        let ratio = (cur - prev).exp();
        if ratio < 1.0 && (k - order > 64 || cur.exp() < 1e-30 * sum) {
            // later ratios only shrink toward ρ once the polynomial factors settle
            let q = ratio.max(rho);
            sum += cur.exp() * q / (1.0 - q);
            break;
        }
        if k - order > 1_000_000 {
            return Ok(f64::INFINITY);
        }
        prev = cur;
    }
    Ok(sum * norm)
}

/// Least-squares fit of `log a_n` against `n` over the auto-selected window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    pub window: (usize, usize),
    pub slope_stderr: f64,
    pub fit_r2: f64,
}

pub fn estimate_beta(s: &SingularSpectrum) -> Result<BetaEstimate, OperatorError> {
    let n_total = s.len();
    let lo_n = 5;
    let hi_n = n_total.saturating_sub(5);
    let pts: Vec<(f64, f64)> = (lo_n..=hi_n)
        .filter(|&n| n >= 1)
        .map(|n| (n, s.a(n)))
        .filter(|&(_, a)| (WINDOW_LOW..=WINDOW_HIGH).contains(&a))
        .map(|(n, a)| (n as f64, a.ln()))
        .collect();
    if pts.len() < MIN_WINDOW {
        return Err(OperatorError::WindowTooSmall { found: pts.len() });
    }
    let window = (pts[0].0 as usize, pts[pts.len() - 1].0 as usize);
    let (slope, stderr, r2) = linear_fit(&pts);
    Ok(BetaEstimate {
        beta: slope.exp(),
        window,
        slope_stderr: stderr,
        fit_r2: r2,
    })
}

/// Returns (slope, slope standard error, R²).
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if pts.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, stderr, r2)
}

/// Result of [`beta_for_symbol`]: the fit plus the order that was used.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRun {
    pub order: usize,
    pub tail_bound: f64,
    pub certified: bool,
    pub estimate: BetaEstimate,
    pub spectrum: SingularSpectrum,
}

/// Assemble, decompose and fit, doubling the order (when `refine`) until
/// the tail bound is below `1e-12 · WINDOW_LOW` or [`MAX_ORDER`] is reached.
pub fn beta_for_symbol(
    symbol: &Symbol,
    spec: &WeightSpec,
    order: usize,
    refine: bool,
) -> Result<BetaRun, OperatorError> {
    let symbol = symbol.canonical();
    let target = 1e-12 * WINDOW_LOW;
    let mut n = order;
    loop {
        let weights = coef_weights(spec, n.max(2))?;
        let tail = truncation_tail_bound(&symbol, &weights, n)?;
        let certified = tail < target;
        if refine && !certified && n * 2 <= MAX_ORDER {
            n *= 2;
            continue;
        }
        let matrix = assemble_matrix(&symbol, &weights, n)?;
        let spectrum = approximation_numbers(&matrix)?;
        let estimate = estimate_beta(&spectrum)?;
        return Ok(BetaRun {
            order: n,
            tail_bound: tail,
            certified,
            estimate,
            spectrum,
        });
    }
}

/// `Δ = (a² − b² − 1)² − 4b²` of the exact affine spectrum.
pub fn cd_delta(a: f64, b: f64) -> f64 {
    (a * a - b * b - 1.0).powi(2) - 4.0 * b * b
}

fn cd_q(a: f64, b: f64) -> Result<f64, OperatorError> {
    if !(a > 0.0 && b >= 0.0 && a + b < 1.0) {
        return Err(OperatorError::InvalidParameters(format!(
            "need a > 0, b >= 0, a + b < 1 (a = {a}, b = {b})"
        )));
    }
    let delta = cd_delta(a, b);
    assert!(
        delta > 0.0,
        "delta = {delta} must be positive for admissible (a, b)"
    );
    Ok((1.0 + a * a - b * b - delta.sqrt()) / (2.0 * a * a))
}

/// Exact `a_n = a^{n−1} Q^{n−1/2}` for `z ↦ az + b` on the Hardy space.
pub fn clifford_dabkowski(a: f64, b: f64, n: usize) -> Result<f64, OperatorError> {
    if n == 0 {
        return Err(OperatorError::InvalidParameters("n is 1-based".into()));
    }
    let q = cd_q(a, b)?;
    let nf = n as f64;
    Ok(((nf - 1.0) * a.ln() + (nf - 0.5) * q.ln()).exp())
}

/// `β = aQ` for the affine symbol.
pub fn cd_beta(a: f64, b: f64) -> Result<f64, OperatorError> {
    Ok(a * cd_q(a, b)?)
}
