//! Gauss–Legendre quadrature rules and an adaptive integrator on intervals.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n starting from the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Apply the rule on [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Shared 20-point rule.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Shared 8-point rule, used for smooth panel integrands.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFailure {
    pub intervals: usize,
    pub estimate: f64,
}

/// Adaptive Gauss–Legendre over the breakpoints `bounds` (sorted), with
/// bisection until each piece agrees with its two halves to the share of
/// `rel_tol * |total|` proportional to its length.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    bounds: &[f64],
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64, QuadFailure> {
    let rule = gl20();
    let span = bounds[bounds.len() - 1] - bounds[0];
    let mut stack: Vec<(f64, f64, f64, u32)> = bounds
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], rule.integrate(w[0], w[1], &mut f), 0))
        .collect();
    let rough: f64 = stack.iter().map(|s| s.2).sum();
    let scale = rough.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut processed = 0;
    while let Some((a, b, whole, depth)) = stack.pop() {
        processed += 1;
        if processed > max_intervals || depth > 60 {
            return Err(QuadFailure {
                intervals: processed,
                estimate: total + whole + stack.iter().map(|s| s.2).sum::<f64>(),
            });
        }
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, &mut f);
        let right = rule.integrate(m, b, &mut f);
        let local_tol = rel_tol * scale * ((b - a) / span).max(1e-3);
        if (left + right - whole).abs() <= local_tol || (b - a) <= f64::EPSILON * span {
            total += left + right;
        } else {
            stack.push((a, m, left, depth + 1));
            stack.push((m, b, right, depth + 1));
        }
    }
    Ok(total)
}
