//! Green capacity of compact subsets of the unit disk.
//!
//! Three independent routes:
//! * closed forms for pseudo-hyperbolic disks, Euclidean disks, and
//!   segments on a diameter (complete elliptic integrals by AGM);
//! * a boundary equilibrium-measure solver on flat panels;
//! * the Dirichlet-energy minimizer on a Cartesian grid, solved by CG.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad;
use crate::symbols::{image_disk, pseudo_hyperbolic, Disk, Symbol, SymbolError};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Samples of `φ(∂D)` taken when a symbol's image is a general curve.
pub const CURVE_SAMPLES: usize = 4096;
/// Maximum gap between the first and last sample of a closed curve.
pub const CURVE_CLOSURE_TOL: f64 = 1e-6;
/// Negative masses below this trigger the simplex fallback.
pub const NEGATIVE_MASS_TOL: f64 = -1e-10;
pub const KKT_TOL: f64 = 1e-8;
pub const MAX_PG_ITERATIONS: usize = 100_000;
pub const GRID_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("set is not compactly contained in the open unit disk: {0}")]
    NotInDisk(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("curve is not closed (gap {0:e})")]
    CurveNotClosed(f64),
    #[error("need at least {min} panels, got {got}")]
    TooFewPanels { min: usize, got: usize },
    #[error("equilibrium system is singular (duplicate nodes?)")]
    SingularSystem,
    #[error("projected gradient did not reach KKT residual {KKT_TOL:e} in {0} iterations")]
    NotConverged(usize),
    #[error("grid spacing {0} must be 2/n for even n with h <= 1/128")]
    BadGrid(f64),
    #[error("set touches the unit circle on the grid")]
    MaskConflict,
    #[error("no grid node falls inside the set")]
    EmptyMask,
    #[error("conjugate gradient stalled at relative residual {0:e}")]
    CgStalled(f64),
    #[error("no closed form for this set")]
    NoClosedForm,
    #[error("cannot parse set `{0}`")]
    Parse(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// `g(z, w) = log |(1 − w̄ z) / (z − w)|`; `+∞` on the diagonal.
pub fn green_kernel(z: Complex64, w: Complex64) -> f64 {
    let d = (z - w).norm();
    if d == 0.0 {
        return f64::INFINITY;
    }
    ((ONE - w.conj() * z).norm() / d).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    ClosedForm,
    Equilibrium,
    Grid,
}

impl fmt::Display for CapacityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityMethod::ClosedForm => "closed_form",
            CapacityMethod::Equilibrium => "equilibrium",
            CapacityMethod::Grid => "grid",
        })
    }
}

impl FromStr for CapacityMethod {
    type Err = CapacityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "closed_form" | "closed" => Ok(CapacityMethod::ClosedForm),
            "equilibrium" => Ok(CapacityMethod::Equilibrium),
            "grid" => Ok(CapacityMethod::Grid),
            other => Err(CapacityError::Parse(other.to_string())),
        }
    }
}

/// `M(E) = e^{−1/cap(E)}`, with `M = 0` for `cap = 0`.
pub fn m_value(cap: f64) -> f64 {
    if cap > 0.0 {
        (-1.0 / cap).exp()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub method: CapacityMethod,
    pub error_indicator: f64,
    pub m_value: f64,
}

impl CapacityEstimate {
    pub fn new(value: f64, method: CapacityMethod, error_indicator: f64) -> Self {
        Self {
            value,
            method,
            error_indicator,
            m_value: m_value(value),
        }
    }
}

/// `1 / log(1/r)` for a closed pseudo-hyperbolic disk of radius `r`.
pub fn cap_ph_disk(r: f64) -> Result<CapacityEstimate, CapacityError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(CapacityError::OutOfRange(format!(
            "pseudo-hyperbolic radius {r}"
        )));
    }
    Ok(CapacityEstimate::new(
        1.0 / (1.0 / r).ln(),
        CapacityMethod::ClosedForm,
        0.0,
    ))
}

/// `Δ₀ = (1 + a² − b²)² − 4a²`.
pub fn disk_delta0(b: f64, a: f64) -> f64 {
    (1.0 + a * a - b * b).powi(2) - 4.0 * a * a
}

/// Closed Euclidean disk of center `b ≥ 0` and radius `a`: `cap = 1/log λ`
/// with `λ` the larger root of `a z² − (1 + a² − b²) z + a`.
pub fn cap_euclid_disk(b: f64, a: f64) -> Result<CapacityEstimate, CapacityError> {
    if !(a > 0.0 && b >= 0.0 && a + b < 1.0) {
        return Err(CapacityError::NotInDisk(format!(
            "disk center {b}, radius {a}"
        )));
    }
    let m = (1.0 + a * a - b * b - disk_delta0(b, a).sqrt()) / (2.0 * a);
    let value = -1.0 / m.ln();
    Ok(CapacityEstimate {
        value,
        method: CapacityMethod::ClosedForm,
        error_indicator: 0.0,
        m_value: m,
    })
}

/// Arithmetic–geometric mean, iterated to relative agreement 1e-15.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a.abs().max(b.abs()) {
            break;
        }
        let next = (0.5 * (a + b), (a * b).sqrt());
        a = next.0;
        b = next.1;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind for modulus `k`,
/// `K(k) = π / (2 AGM(1, √(1 − k²)))`.
pub fn elliptic_k(k: f64) -> f64 {
    let kp = (1.0 - k * k).max(0.0).sqrt();
    let g = agm(1.0, kp);
    if g == 0.0 {
        f64::INFINITY
    } else {
        PI / (2.0 * g)
    }
}

/// `cap([0, h]) = I′ / (π I)` with `k = (1 − h)/(1 + h)`.
pub fn cap_segment(h: f64) -> Result<CapacityEstimate, CapacityError> {
    if !(h > 0.0 && h < 1.0) {
        return Err(CapacityError::OutOfRange(format!("segment length {h}")));
    }
    let k = (1.0 - h) / (1.0 + h);
    let kp = (1.0 - k * k).sqrt();
    let value = elliptic_k(kp) / (PI * elliptic_k(k));
    Ok(CapacityEstimate::new(
        value,
        CapacityMethod::ClosedForm,
        0.0,
    ))
}

/// Compact subsets handled by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactSetSpec {
    EuclidDisk {
        center: Complex64,
        radius: f64,
    },
    PhDisk {
        center: Complex64,
        radius: f64,
    },
    Segment {
        start: Complex64,
        end: Complex64,
    },
    /// Closed polyline; the last point repeats the first.
    Curve {
        points: Vec<Complex64>,
    },
}

impl CompactSetSpec {
    pub fn validate(&self) -> Result<(), CapacityError> {
        let inside = |z: Complex64| z.norm() < 1.0;
        match self {
            CompactSetSpec::EuclidDisk { center, radius } => {
                if !(*radius > 0.0) || center.norm() + radius >= 1.0 {
                    return Err(CapacityError::NotInDisk(format!(
                        "disk {center} radius {radius}"
                    )));
                }
            }
            CompactSetSpec::PhDisk { center, radius } => {
                if !inside(*center) || !(*radius > 0.0 && *radius < 1.0) {
                    return Err(CapacityError::NotInDisk(format!(
                        "ph-disk {center} radius {radius}"
                    )));
                }
            }
            CompactSetSpec::Segment { start, end } => {
                if !inside(*start) || !inside(*end) || start == end {
                    return Err(CapacityError::NotInDisk(format!(
                        "segment [{start}, {end}]"
                    )));
                }
            }
            CompactSetSpec::Curve { points } => {
                if points.len() < 4 {
                    return Err(CapacityError::TooFewPanels {
                        min: 4,
                        got: points.len(),
                    });
                }
                if let Some(p) = points.iter().find(|p| !inside(**p)) {
                    return Err(CapacityError::NotInDisk(format!("curve point {p}")));
                }
                let gap = (points[0] - points[points.len() - 1]).norm();
                if gap > CURVE_CLOSURE_TOL {
                    return Err(CapacityError::CurveNotClosed(gap));
                }
            }
        }
        Ok(())
    }

    /// The Euclidean description of a disk-shaped set.
    pub fn as_euclid_disk(&self) -> Option<Disk> {
        match self {
            CompactSetSpec::EuclidDisk { center, radius } => Some(Disk {
                center: *center,
                radius: *radius,
            }),
            CompactSetSpec::PhDisk { center, radius } => {
                let (w2, r2) = (center.norm_sqr(), radius * radius);
                let den = 1.0 - r2 * w2;
                Some(Disk {
                    center: center * ((1.0 - r2) / den),
                    radius: radius * (1.0 - w2) / den,
                })
            }
            _ => None,
        }
    }

    /// Image of the disk under a symbol: a Euclidean disk for
    /// fractional-linear maps, otherwise the boundary curve of a univalent map.
    pub fn from_symbol(symbol: &Symbol) -> Result<Self, CapacityError> {
        if symbol.mobius_matrix().is_some() {
            let d = image_disk(symbol)?;
            return Ok(CompactSetSpec::EuclidDisk {
                center: d.center,
                radius: d.radius,
            });
        }
        if !symbol.declared_univalent() {
            return Err(CapacityError::OutOfRange(
                "capacity of φ(D) needs a univalent symbol".into(),
            ));
        }
        Ok(CompactSetSpec::Curve {
            points: symbol.boundary_curve(CURVE_SAMPLES)?,
        })
    }

    /// Membership test used by the grid mask; segments are thickened by `h/2`.
    fn contains(&self, z: Complex64, h: f64) -> bool {
        if let Some(d) = self.as_euclid_disk() {
            return (z - d.center).norm() <= d.radius * (1.0 + 1e-12);
        }
        match self {
            CompactSetSpec::Segment { start, end } => {
                let dir = end - start;
                let t = (((z - start) * dir.conj()).re / dir.norm_sqr()).clamp(0.0, 1.0);
                (z - (start + dir * t)).norm() <= 0.5 * h * (1.0 + 1e-9)
            }
            CompactSetSpec::Curve { points } => point_in_polygon(z, points),
            _ => unreachable!(),
        }
    }
}

fn point_in_polygon(z: Complex64, pts: &[Complex64]) -> bool {
    let mut inside = false;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl fmt::Display for CompactSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompactSetSpec::EuclidDisk { center, radius } => write!(f, "disk({center},{radius})"),
            CompactSetSpec::PhDisk { center, radius } => write!(f, "phdisk({center},{radius})"),
            CompactSetSpec::Segment { start, end } => write!(f, "segment({start},{end})"),
            CompactSetSpec::Curve { points } => write!(f, "curve({} points)", points.len()),
        }
    }
}

impl FromStr for CompactSetSpec {
    type Err = CapacityError;

    /// `disk(center,radius)`, `phdisk(center,radius)`, `segment(a,b)` or
    /// `image(<symbol>)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CapacityError::Parse(s.to_string());
        let t = s.trim();
        let open = t.find('(').ok_or_else(err)?;
        let inner = t[open + 1..].strip_suffix(')').ok_or_else(err)?;
        let name = t[..open].trim().to_ascii_lowercase();
        if name == "image" {
            let symbol: Symbol = inner.parse()?;
            let set = CompactSetSpec::from_symbol(&symbol)?;
            set.validate()?;
            return Ok(set);
        }
        let args: Vec<Complex64> = inner
            .split(',')
            .map(|a| {
                let a: String = a.chars().filter(|c| !c.is_whitespace()).collect();
                Complex64::from_str(&a).map_err(|_| err())
            })
            .collect::<Result<_, _>>()?;
        if args.len() != 2 {
            return Err(err());
        }
        let set = match name.as_str() {
            "disk" => CompactSetSpec::EuclidDisk {
                center: args[0],
                radius: args[1].re,
            },
            "phdisk" => CompactSetSpec::PhDisk {
                center: args[0],
                radius: args[1].re,
            },
            "segment" => CompactSetSpec::Segment {
                start: args[0],
                end: args[1],
            },
            _ => return Err(err()),
        };
        set.validate()?;
        Ok(set)
    }
}

/// Closed-form capacity where one is known: disks, and segments lying on a
/// line through the origin (moved to `[0, ρ]` by an automorphism).
pub fn closed_form(set: &CompactSetSpec) -> Result<CapacityEstimate, CapacityError> {
    set.validate()?;
    if let CompactSetSpec::PhDisk { radius, .. } = set {
        return cap_ph_disk(*radius);
    }
    if let Some(d) = set.as_euclid_disk() {
        return cap_euclid_disk(d.center.norm(), d.radius);
    }
    match set {
        CompactSetSpec::Segment { start, end } => {
            let cross = start.re * end.im - start.im * end.re;
            if cross.abs() > 1e-14 {
                return Err(CapacityError::NoClosedForm);
            }
            cap_segment(pseudo_hyperbolic(*start, *end))
        }
        _ => Err(CapacityError::NoClosedForm),
    }
}

/// Flat boundary panels: node, length, unit tangent, plus the `M + 1`
/// breakpoints on the set (closed sets repeat the first breakpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDiscretization {
    pub nodes: Vec<Complex64>,
    pub lengths: Vec<f64>,
    pub tangents: Vec<Complex64>,
    pub breakpoints: Vec<Complex64>,
    pub closed: bool,
}

impl PanelDiscretization {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Twice the signed area enclosed by the breakpoints; positive when
    /// the boundary runs counter-clockwise.
    fn orientation(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[0].re * w[1].im - w[1].re * w[0].im)
            .sum()
    }
}

pub const MIN_PANELS: usize = 4;

pub fn discretize(set: &CompactSetSpec, m: usize) -> Result<PanelDiscretization, CapacityError> {
    if m < MIN_PANELS {
        return Err(CapacityError::TooFewPanels {
            min: MIN_PANELS,
            got: m,
        });
    }
    set.validate()?;
    if let Some(d) = set.as_euclid_disk() {
        let step = 2.0 * PI / m as f64;
        let at = |t: f64| d.center + Complex64::from_polar(d.radius, t);
        return Ok(PanelDiscretization {
            nodes: (0..m).map(|i| at((i as f64 + 0.5) * step)).collect(),
            lengths: vec![d.radius * step; m],
            tangents: (0..m)
                .map(|i| Complex64::from_polar(1.0, (i as f64 + 0.5) * step + 0.5 * PI))
                .collect(),
            breakpoints: (0..=m).map(|i| at(i as f64 * step)).collect(),
            closed: true,
        });
    }
    match set {
        CompactSetSpec::Segment { start, end } => {
            let dir = end - start;
            let len = dir.norm();
            let tangent = dir / len;
            let cheb = |x: f64| 0.5 * (1.0 - (PI * x / m as f64).cos());
            let breaks: Vec<f64> = (0..=m).map(|k| cheb(k as f64)).collect();
            Ok(PanelDiscretization {
                nodes: (0..m).map(|k| start + dir * cheb(k as f64 + 0.5)).collect(),
                lengths: breaks.windows(2).map(|w| len * (w[1] - w[0])).collect(),
                tangents: vec![tangent; m],
                breakpoints: breaks.iter().map(|&t| start + dir * t).collect(),
                closed: false,
            })
        }
        CompactSetSpec::Curve { points } => Ok(discretize_polyline(points, m)),
        _ => unreachable!(),
    }
}

/// Equal-arclength panels along a closed polyline.
fn discretize_polyline(points: &[Complex64], m: usize) -> PanelDiscretization {
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum[cum.len() - 1] + (w[1] - w[0]).norm());
    }
    let total = cum[cum.len() - 1];
    let at = |s: f64| -> Complex64 {
        let s = s.clamp(0.0, total);
        let seg = match cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(points.len() - 2),
            Err(i) => i.saturating_sub(1).min(points.len() - 2),
        };
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 {
            (s - cum[seg]) / span
        } else {
            0.0
        };
        points[seg] + (points[seg + 1] - points[seg]) * t
    };
    let ell = total / m as f64;
    let mut breakpoints: Vec<Complex64> = (0..m).map(|k| at(k as f64 * ell)).collect();
    breakpoints.push(breakpoints[0]);
    let tangents = breakpoints
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d / d.norm()
        })
        .collect();
    PanelDiscretization {
        nodes: (0..m).map(|k| at((k as f64 + 0.5) * ell)).collect(),
        lengths: vec![ell; m],
        tangents,
        breakpoints,
        closed: true,
    }
}

/// `(1/ℓ) ∫ log|z − w| ds` over the flat panel `w = c + τ s`, `|s| ≤ ℓ/2`.
fn flat_panel_log_average(z: Complex64, center: Complex64, tangent: Complex64, len: f64) -> f64 {
    let zeta = (z - center) * tangent.conj();
    // antiderivative of log|ζ − s| in s, in terms of u = ζ − s
    let prim = |u: Complex64| {
        let r2 = u.norm_sqr();
        let log_term = if u.re == 0.0 {
            0.0
        } else {
            -u.re * (0.5 * r2.ln() - 1.0)
        };
        let arg_term = if u.im == 0.0 {
            0.0
        } else {
            u.im * u.im.atan2(u.re)
        };
        log_term + arg_term
    };
    let half = 0.5 * len;
    let u_hi = zeta - Complex64::new(half, 0.0);
    let u_lo = zeta + Complex64::new(half, 0.0);
    (prim(u_hi) - prim(u_lo)) / len
}

/// Average of `g(z, ·)` over panel `i`: exact for the logarithmic part near
/// the panel, midpoint value far away.
fn panel_green_average(p: &PanelDiscretization, i: usize, z: Complex64) -> f64 {
    let (c, tau, len) = (p.nodes[i], p.tangents[i], p.lengths[i]);
    if (z - c).norm() > 8.0 * len {
        return green_kernel(z, c);
    }
    let smooth = quad::gl8().integrate(-0.5 * len, 0.5 * len, |s| {
        let w = c + tau * s;
        (ONE - w.conj() * z).norm().ln()
    }) / len;
    smooth - flat_panel_log_average(z, c, tau, len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySolver {
    Saddle,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub masses: Vec<f64>,
    pub energy: f64,
    pub capacity: f64,
    pub frostman_residual: f64,
    pub solver: EnergySolver,
    pub iterations: usize,
}

impl EquilibriumSolution {
    pub fn estimate(&self) -> CapacityEstimate {
        CapacityEstimate::new(
            self.capacity,
            CapacityMethod::Equilibrium,
            self.frostman_residual,
        )
    }
}

/// Collocation energy matrix: point Green values off the diagonal, flat-panel
/// self-energy `log(1 − |z_i|²) + 1 − log(ℓ_i / 2)` on it.
pub fn energy_matrix(p: &PanelDiscretization) -> Result<DMatrix<f64>, CapacityError> {
    let m = p.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        (1.0 - p.nodes[i].norm_sqr()).ln() + 1.0 - (0.5 * p.lengths[i]).ln()
                    } else {
                        green_kernel(p.nodes[i], p.nodes[j])
                    }
                })
                .collect()
        })
        .collect();
    let g = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(CapacityError::SingularSystem);
    }
    Ok(g)
}

/// Minimizer of `μᵀ G μ` over the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub masses: Vec<f64>,
    pub energy: f64,
    pub solver: EnergySolver,
    pub iterations: usize,
}

/// Saddle-point solve of `[G 1; 1ᵀ 0][μ; λ] = [0; 1]`, falling back to
/// projected gradient when some mass comes out negative.
pub fn minimize_energy(g: &DMatrix<f64>) -> Result<SimplexMinimum, CapacityError> {
    let m = g.nrows();
    let mut k = DMatrix::<f64>::zeros(m + 1, m + 1);
    k.view_mut((0, 0), (m, m)).copy_from(g);
    for i in 0..m {
        k[(i, m)] = 1.0;
        k[(m, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let sol = k.lu().solve(&rhs).ok_or(CapacityError::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(CapacityError::SingularSystem);
    }
    let mu: Vec<f64> = sol.iter().take(m).copied().collect();
    if mu.iter().all(|&x| x >= NEGATIVE_MASS_TOL) {
        let mut masses: Vec<f64> = mu.iter().map(|&x| x.max(0.0)).collect();
        let s: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|x| *x /= s);
        let energy = quadratic_form(g, &masses);
        return Ok(SimplexMinimum {
            masses,
            energy,
            solver: EnergySolver::Saddle,
            iterations: 0,
        });
    }
    projected_gradient(g, &mu)
}

fn quadratic_form(g: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    v.dot(&(g * &v))
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Relative KKT residual of `min μᵀGμ` on the simplex.
pub fn kkt_residual(g: &DMatrix<f64>, mu: &[f64]) -> f64 {
    let v = DVector::from_column_slice(mu);
    let grad = g * &v;
    let energy = v.dot(&grad);
    let scale = energy.abs().max(f64::MIN_POSITIVE);
    mu.iter()
        .zip(grad.iter())
        .map(|(&m, &gi)| {
            if m > 1e-14 {
                (gi - energy).abs()
            } else {
                (energy - gi).max(0.0)
            }
        })
        .fold(0.0, f64::max)
        / scale
}

fn projected_gradient(g: &DMatrix<f64>, start: &[f64]) -> Result<SimplexMinimum, CapacityError> {
    let m = g.nrows();
    // Lipschitz constant of the gradient 2Gμ via power iteration
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = g * &v;
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        lambda = n;
        v = w / n;
    }
    let step = 1.0 / (2.0 * lambda.max(f64::MIN_POSITIVE));
    let mut x = project_simplex(start);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = quadratic_form(g, &x);
    for it in 1..=MAX_PG_ITERATIONS {
        let yv = DVector::from_column_slice(&y);
        let grad = g * &yv;
        let trial: Vec<f64> = y
            .iter()
            .zip(grad.iter())
            .map(|(&yi, &gi)| yi - 2.0 * step * gi)
            .collect();
        let x_new = project_simplex(&trial);
        let f_new = quadratic_form(g, &x_new);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_new > f_prev {
            // restart momentum
            y = x.clone();
            t = 1.0;
            continue;
        }
        y = x_new
            .iter()
            .zip(&x)
            .map(|(&a, &b)| a + (t - 1.0) / t_new * (a - b))
            .collect();
        x = x_new;
        t = t_new;
        f_prev = f_new;
        if it % 10 == 0 && kkt_residual(g, &x) < KKT_TOL {
            return Ok(SimplexMinimum {
                energy: quadratic_form(g, &x),
                masses: x,
                solver: EnergySolver::ProjectedGradient,
                iterations: it,
            });
        }
    }
    Err(CapacityError::NotConverged(MAX_PG_ITERATIONS))
}

/// Discrete equilibrium measure on the panels, its energy `V`, capacity
/// `1/V`, and the Frostman residual `max |G_μ − V| / V` on test points of
/// the set.
pub fn solve_equilibrium(p: &PanelDiscretization) -> Result<EquilibriumSolution, CapacityError> {
    let g = energy_matrix(p)?;
    let min = minimize_energy(&g)?;
    let energy = min.energy;
    let pts = frostman_test_points(p);
    let residual = pts
        .par_iter()
        .map(|&z| (potential_of(&min.masses, p, z) - energy).abs() / energy)
        .reduce(|| 0.0, f64::max);
    Ok(EquilibriumSolution {
        capacity: 1.0 / energy,
        energy,
        frostman_residual: residual,
        solver: min.solver,
        iterations: min.iterations,
        masses: min.masses,
    })
}

/// Panel midpoints moved a quarter panel inward for closed sets; interior
/// breakpoints for segments.
pub fn frostman_test_points(p: &PanelDiscretization) -> Vec<Complex64> {
    if p.closed {
        let inward = if p.orientation() >= 0.0 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, -1.0)
        };
        (0..p.len())
            .map(|i| p.nodes[i] + inward * p.tangents[i] * (0.25 * p.lengths[i]))
            .collect()
    } else {
        p.breakpoints[1..p.breakpoints.len() - 1].to_vec()
    }
}

fn potential_of(masses: &[f64], p: &PanelDiscretization, z: Complex64) -> f64 {
    masses
        .iter()
        .enumerate()
        .filter(|(_, &m)| m != 0.0)
        .map(|(i, &m)| m * panel_green_average(p, i, z))
        .sum()
}

/// `G_μ(z) = Σ μ_i g(z, ·)` with the panel-averaged kernel, so `z` may sit on a node.
pub fn green_potential(sol: &EquilibriumSolution, p: &PanelDiscretization, z: Complex64) -> f64 {
    potential_of(&sol.masses, p, z)
}

/// `max G_μ · cap` over a `n × n` sample grid of the disk (expected ≤ 1).
pub fn dual_diagnostic(sol: &EquilibriumSolution, p: &PanelDiscretization, n: usize) -> f64 {
    let pts: Vec<Complex64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            Complex64::new(
                -1.0 + 2.0 * (i as f64 + 0.5) / n as f64,
                -1.0 + 2.0 * (j as f64 + 0.5) / n as f64,
            )
        })
        .filter(|z| z.norm() < 0.999)
        .collect();
    pts.par_iter()
        .map(|&z| green_potential(sol, p, z) * sol.capacity)
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Outside,
    InSet,
    Free,
}

/// Discrete harmonic function on the grid and its Dirichlet energy.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub h: f64,
    pub n: usize,
    pub u: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

impl GridSolution {
    /// Rows `x,y,u` for nodes of the closed unit disk.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,u\n");
        for i in 0..=self.n {
            for j in 0..=self.n {
                let (x, y) = (-1.0 + i as f64 * self.h, -1.0 + j as f64 * self.h);
                if x * x + y * y <= 1.0 {
                    out.push_str(&format!("{x},{y},{}\n", self.u[i * (self.n + 1) + j]));
                }
            }
        }
        out
    }
}

/// Solve the grid Dirichlet problem (`u = 1` on the set, `0` off the disk).
/// `guess`, when given, is a solution on the grid with spacing `2h`.
pub fn solve_dirichlet_grid(
    set: &CompactSetSpec,
    h: f64,
    guess: Option<&GridSolution>,
) -> Result<GridSolution, CapacityError> {
    set.validate()?;
    let n_f = 2.0 / h;
    let n = n_f.round() as usize;
    if !(h > 0.0) || (n_f - n as f64).abs() > 1e-9 || !n.is_multiple_of(2) || n < 8 {
        return Err(CapacityError::BadGrid(h));
    }
    let side = n + 1;
    let idx = |i: usize, j: usize| i * side + j;
    let coord = |i: usize| -1.0 + i as f64 * h;
    let mut kind = vec![NodeKind::Outside; side * side];
    let mut any_in_set = false;
    for i in 0..side {
        for j in 0..side {
            let z = Complex64::new(coord(i), coord(j));
            kind[idx(i, j)] = if z.norm() >= 1.0 {
                NodeKind::Outside
            } else if set.contains(z, h) {
                any_in_set = true;
                NodeKind::InSet
            } else {
                NodeKind::Free
            };
        }
    }
    if !any_in_set {
        return Err(CapacityError::EmptyMask);
    }
    let neighbours =
        |i: usize, j: usize| [idx(i - 1, j), idx(i + 1, j), idx(i, j - 1), idx(i, j + 1)];
    for i in 1..n {
        for j in 1..n {
            if kind[idx(i, j)] == NodeKind::InSet
                && neighbours(i, j)
                    .iter()
                    .any(|&q| kind[q] == NodeKind::Outside)
            {
                return Err(CapacityError::MaskConflict);
            }
        }
    }

    // right-hand side: Dirichlet value 1 from set neighbours
    let mut b = vec![0.0; side * side];
    for i in 1..n {
        for j in 1..n {
            if kind[idx(i, j)] == NodeKind::Free {
                b[idx(i, j)] = neighbours(i, j)
                    .iter()
                    .filter(|&&q| kind[q] == NodeKind::InSet)
                    .count() as f64;
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 1..n {
            for j in 1..n {
                let p = idx(i, j);
                out[p] = if kind[p] == NodeKind::Free {
                    4.0 * x[p] - neighbours(i, j).iter().map(|&q| x[q]).sum::<f64>()
                } else {
                    0.0
                };
            }
        }
    };

    let mut x = vec![0.0; side * side];
    if let Some(coarse) = guess.filter(|c| c.n * 2 == n) {
        let cs = coarse.n + 1;
        let cu = |i: usize, j: usize| coarse.u[i.min(coarse.n) * cs + j.min(coarse.n)];
        for i in 0..side {
            for j in 0..side {
                if kind[idx(i, j)] == NodeKind::Free {
                    let (ci, cj) = (i / 2, j / 2);
                    let (di, dj) = (i % 2, j % 2);
                    x[idx(i, j)] = 0.25
                        * (cu(ci, cj) + cu(ci + di, cj) + cu(ci, cj + dj) + cu(ci + di, cj + dj));
                }
            }
        }
    }

    let mut ax = vec![0.0; side * side];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut d = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = b
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let max_iter = 20 * side * side;
    let mut iterations = 0;
    let mut ad = vec![0.0; side * side];
    while rr.sqrt() > GRID_RESIDUAL_TOL * b_norm {
        if iterations >= max_iter {
            return Err(CapacityError::CgStalled(rr.sqrt() / b_norm));
        }
        apply(&d, &mut ad);
        let dad: f64 = d.iter().zip(&ad).map(|(a, b)| a * b).sum();
        let alpha = rr / dad;
        for p in 0..x.len() {
            x[p] += alpha * d[p];
            r[p] -= alpha * ad[p];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for p in 0..d.len() {
            d[p] = r[p] + beta * d[p];
        }
        rr = rr_new;
        iterations += 1;
    }

    for (p, k) in kind.iter().enumerate() {
        x[p] = match k {
            NodeKind::Outside => 0.0,
            NodeKind::InSet => 1.0,
            NodeKind::Free => x[p],
        };
    }
    let mut energy = 0.0;
    for i in 0..side {
        for j in 0..side {
            if i + 1 < side {
                energy += (x[idx(i + 1, j)] - x[idx(i, j)]).powi(2);
            }
            if j + 1 < side {
                energy += (x[idx(i, j + 1)] - x[idx(i, j)]).powi(2);
            }
        }
    }
    Ok(GridSolution {
        h,
        n,
        u: x,
        value: energy / (2.0 * PI),
        iterations,
    })
}

/// Grid capacity at spacing `h ≤ 1/128`; the error indicator is the
/// first-order Richardson difference `|cap_h − cap_{2h}|`.
pub fn cap_dirichlet_grid(set: &CompactSetSpec, h: f64) -> Result<CapacityEstimate, CapacityError> {
    if !(h > 0.0 && h <= 1.0 / 128.0 + 1e-15) {
        return Err(CapacityError::BadGrid(h));
    }
    let coarse = solve_dirichlet_grid(set, 2.0 * h, None)?;
    let fine = solve_dirichlet_grid(set, h, Some(&coarse))?;
    Ok(CapacityEstimate::new(
        fine.value,
        CapacityMethod::Grid,
        (fine.value - coarse.value).abs(),
    ))
}

/// Capacities of `[0, 1 − 2^{−j}]` and the largest `c` with
/// `cap ≥ c · log 2^j` over the range.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGrowth {
    pub j: Vec<u32>,
    pub capacities: Vec<f64>,
    pub c: f64,
    pub increasing: bool,
}

pub fn segment_growth(js: impl IntoIterator<Item = u32>) -> Result<SegmentGrowth, CapacityError> {
    let j: Vec<u32> = js.into_iter().collect();
    let capacities = j
        .iter()
        .map(|&k| cap_segment(1.0 - 0.5f64.powi(k as i32)).map(|e| e.value))
        .collect::<Result<Vec<_>, _>>()?;
    let c = j
        .iter()
        .zip(&capacities)
        .map(|(&k, &cap)| cap / (k as f64 * 2f64.ln()))
        .fold(f64::INFINITY, f64::min);
    let increasing = capacities.windows(2).all(|w| w[1] > w[0]);
    Ok(SegmentGrowth {
        j,
        capacities,
        c,
        increasing,
    })
}
