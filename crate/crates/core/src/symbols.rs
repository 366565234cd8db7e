//! Analytic self-maps of the unit disk built as chains of closed-form maps.
//!
//! A [`Symbol`] stores its primitives in application order: the first
//! element acts on `z` first. The text form writes composition the usual
//! way, so `auto(0.5)*dil(0.5)` is `Φ_{0.5} ∘ (z ↦ z/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::series::PowerSeries;
use crate::weights::{CoefWeights, WeightError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Boundary samples used when checking the self-map property.
const CONSTRUCTION_SAMPLES: usize = 1024;
/// Sampling radius when the closed disk contains a pole.
const INNER_RADIUS: f64 = 1.0 - 1e-9;
/// Cap on the automatically chosen truncation order.
pub const MAX_AUTO_ORDER: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("pole of the symbol at z = {0}")]
    Pole(Complex64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol does not map the disk into itself (sup norm ≈ {0})")]
    NotSelfMap(f64),
    #[error("sup norm {0} is not < 1; the coefficient tail does not converge")]
    NotStrictlyInside(f64),
    #[error("moebius map with |c| >= |d| has no convergent Taylor expansion on the disk")]
    SeriesDivergent,
    #[error("symbol is not fractional-linear; its image is not a disk")]
    NotFractionalLinear,
    #[error("image of the unit circle is degenerate (collinear points)")]
    DegenerateImage,
    #[error("cannot parse symbol `{0}`")]
    Parse(String),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// `z ↦ a z + b`
    Affine { a: Complex64, b: Complex64 },
    /// `z ↦ (a z + b) / (c z + d)`
    Moebius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    /// `z ↦ r z`, `0 < r < 1`
    Dilation(f64),
    /// `Φ_a(z) = (a − z) / (1 − ā z)`, `|a| < 1`
    Automorphism(Complex64),
    /// `z ↦ Σ c_k z^k`
    Polynomial(Vec<Complex64>),
}

impl Primitive {
    fn validate(&self) -> Result<(), SymbolError> {
        let bad = |m: String| Err(SymbolError::InvalidParameter(m));
        match self {
            Primitive::Dilation(r) if !(*r > 0.0 && *r < 1.0) => {
                bad(format!("dilation r = {r} not in (0,1)"))
            }
            Primitive::Automorphism(a) if !(a.norm() < 1.0) => {
                bad(format!("automorphism |a| = {} not < 1", a.norm()))
            }
            Primitive::Moebius { a, b, c, d } if (a * d - b * c).norm() == 0.0 => {
                bad("moebius map with ad - bc = 0".into())
            }
            Primitive::Polynomial(p) if p.is_empty() => bad("empty polynomial".into()),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, SymbolError> {
        match self {
            Primitive::Affine { a, b } => Ok(a * z + b),
            Primitive::Moebius { a, b, c, d } => {
                let den = c * z + d;
                if den.norm() <= f64::MIN_POSITIVE {
                    return Err(SymbolError::Pole(z));
                }
                Ok((a * z + b) / den)
            }
            Primitive::Dilation(r) => Ok(z * r),
            Primitive::Automorphism(a) => Ok((a - z) / (ONE - a.conj() * z)),
            Primitive::Polynomial(p) => Ok(p.iter().rev().fold(ZERO, |acc, &c| acc * z + c)),
        }
    }

    /// Substitute the series `s` into this primitive.
    fn apply_series(&self, s: &PowerSeries) -> Result<PowerSeries, SymbolError> {
        let n = s.order();
        match self {
            Primitive::Affine { a, b } => Ok(s.scale(*a).add_constant(*b)),
            Primitive::Dilation(r) => Ok(s.scale(Complex64::new(*r, 0.0))),
            Primitive::Automorphism(a) => {
                let num = s.scale(-ONE).add_constant(*a);
                let den = s.scale(-a.conj()).add_constant(ONE);
                num.div_trunc(&den).ok_or(SymbolError::SeriesDivergent)
            }
            Primitive::Moebius { a, b, c, d } => {
                if c.norm() >= d.norm() {
                    return Err(SymbolError::SeriesDivergent);
                }
                let num = s.scale(*a).add_constant(*b);
                let den = s.scale(*c).add_constant(*d);
                num.div_trunc(&den).ok_or(SymbolError::SeriesDivergent)
            }
            Primitive::Polynomial(p) => Ok(s.compose_polynomial(p)),
        }
        .map(|out| PowerSeries::new(out.coeffs().to_vec(), n))
    }

    /// 2×2 matrix `[[A, B], [C, D]]` of a fractional-linear primitive.
    fn mobius_matrix(&self) -> Option<[Complex64; 4]> {
        match self {
            Primitive::Affine { a, b } => Some([*a, *b, ZERO, ONE]),
            Primitive::Moebius { a, b, c, d } => Some([*a, *b, *c, *d]),
            Primitive::Dilation(r) => Some([Complex64::new(*r, 0.0), ZERO, ZERO, ONE]),
            Primitive::Automorphism(a) => Some([-ONE, *a, -a.conj(), ONE]),
            Primitive::Polynomial(p) if p.len() <= 2 => {
                Some([p.get(1).copied().unwrap_or(ZERO), p[0], ZERO, ONE])
            }
            Primitive::Polynomial(_) => None,
        }
    }
}

/// Conditions under which `(az+b)/(cz+d)` maps the disk into itself.
pub fn moebius_preserves_disk(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let lhs = a.norm_sqr() + b.norm_sqr() + 2.0 * (a.conj() * b - c.conj() * d).norm();
    lhs <= c.norm_sqr() + d.norm_sqr() && c.norm() <= d.norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    chain: Vec<Primitive>,
    declared_univalent: bool,
}

impl Symbol {
    /// Build from primitives in application order. Rejects chains whose
    /// sampled sup norm exceeds 1.
    pub fn new(chain: Vec<Primitive>) -> Result<Self, SymbolError> {
        if chain.is_empty() {
            return Err(SymbolError::InvalidParameter("empty chain".into()));
        }
        for p in &chain {
            p.validate()?;
        }
        let univalent = chain.iter().all(|p| p.mobius_matrix().is_some());
        let symbol = Symbol {
            chain,
            declared_univalent: univalent,
        };
        let sup = sup_norm(&symbol, CONSTRUCTION_SAMPLES);
        if !(sup <= 1.0 + 1e-9) {
            return Err(SymbolError::NotSelfMap(sup));
        }
        if univalent
            && symbol
                .mobius_matrix()
                .map(|m| (m[0] * m[3] - m[1] * m[2]).norm() == 0.0)
                == Some(true)
        {
            // constant map
            return Ok(Symbol {
                declared_univalent: false,
                ..symbol
            });
        }
        Ok(symbol)
    }

    pub fn single(p: Primitive) -> Result<Self, SymbolError> {
        Self::new(vec![p])
    }

    /// Asserts (or retracts) univalence; not verified.
    pub fn with_univalent(mut self, univalent: bool) -> Self {
        self.declared_univalent = univalent;
        self
    }

    pub fn declared_univalent(&self) -> bool {
        self.declared_univalent
    }

    pub fn chain(&self) -> &[Primitive] {
        &self.chain
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, SymbolError> {
        self.chain.iter().try_fold(z, |w, p| p.eval(w))
    }

    /// Taylor coefficients about 0, modulo `z^order`.
    pub fn taylor(&self, order: usize) -> Result<PowerSeries, SymbolError> {
        if order == 0 {
            return Err(SymbolError::InvalidParameter(
                "series order must be >= 1".into(),
            ));
        }
        self.chain
            .iter()
            .try_fold(PowerSeries::identity(order), |s, p| p.apply_series(&s))
    }

    /// Overall `[[A, B], [C, D]]` if every primitive is fractional-linear.
    pub fn mobius_matrix(&self) -> Option<[Complex64; 4]> {
        let mut acc = [ONE, ZERO, ZERO, ONE];
        for p in &self.chain {
            let m = p.mobius_matrix()?;
            acc = [
                m[0] * acc[0] + m[1] * acc[2],
                m[0] * acc[1] + m[1] * acc[3],
                m[2] * acc[0] + m[3] * acc[2],
                m[2] * acc[1] + m[3] * acc[3],
            ];
        }
        Some(acc)
    }

    /// `az+b` and `|a|z+|b|` induce unitarily equivalent operators; a lone
    /// affine primitive is replaced by its non-negative form.
    pub fn canonical(&self) -> Symbol {
        match self.chain.as_slice() {
            [Primitive::Affine { a, b }] => Symbol {
                chain: vec![Primitive::Affine {
                    a: Complex64::new(a.norm(), 0.0),
                    b: Complex64::new(b.norm(), 0.0),
                }],
                declared_univalent: self.declared_univalent,
            },
            _ => self.clone(),
        }
    }

    fn boundary_radius(&self) -> f64 {
        let probe = 64;
        for j in 0..probe {
            let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / probe as f64);
            match self.eval(z) {
                Ok(w) if w.re.is_finite() && w.im.is_finite() => {}
                _ => return INNER_RADIUS,
            }
        }
        let has_boundary_pole = self.chain.iter().any(|p| match p {
            Primitive::Moebius { c, d, .. } => c.norm() >= d.norm(),
            _ => false,
        });
        if has_boundary_pole {
            INNER_RADIUS
        } else {
            1.0
        }
    }

    /// Closed polyline `φ(e^{iθ_j})`, `j = 0..=m`, last point equal to the first.
    pub fn boundary_curve(&self, m: usize) -> Result<Vec<Complex64>, SymbolError> {
        let radius = self.boundary_radius();
        let mut pts = (0..m)
            .map(|j| {
                self.eval(Complex64::from_polar(
                    radius,
                    2.0 * PI * j as f64 / m as f64,
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        pts.push(pts[0]);
        Ok(pts)
    }
}

fn fmt_complex(c: &Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Affine { a, b } => {
                write!(f, "affine({},{})", fmt_complex(a), fmt_complex(b))
            }
            Primitive::Moebius { a, b, c, d } => write!(
                f,
                "mobius({},{},{},{})",
                fmt_complex(a),
                fmt_complex(b),
                fmt_complex(c),
                fmt_complex(d)
            ),
            Primitive::Dilation(r) => write!(f, "dil({r})"),
            Primitive::Automorphism(a) => write!(f, "auto({})", fmt_complex(a)),
            Primitive::Polynomial(p) => {
                let parts: Vec<String> = p.iter().map(fmt_complex).collect();
                write!(f, "poly({})", parts.join(","))
            }
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.chain.iter().rev().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_complex(s: &str, whole: &str) -> Result<Complex64, SymbolError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&t).map_err(|_| SymbolError::Parse(whole.to_string()))
}

fn parse_real(s: &str, whole: &str) -> Result<f64, SymbolError> {
    let c = parse_complex(s, whole)?;
    if c.im != 0.0 {
        return Err(SymbolError::Parse(whole.to_string()));
    }
    Ok(c.re)
}

fn parse_primitive(term: &str, whole: &str) -> Result<Primitive, SymbolError> {
    let err = || SymbolError::Parse(whole.to_string());
    let term = term.trim();
    let open = term.find('(').ok_or_else(err)?;
    let inner = term[open + 1..].strip_suffix(')').ok_or_else(err)?;
    let name = term[..open].trim().to_ascii_lowercase();
    let args: Vec<&str> = split_top_level(inner, ',');
    let c = |i: usize| parse_complex(args[i], whole);
    let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(err()) };
    match name.as_str() {
        "affine" => {
            arity(2)?;
            Ok(Primitive::Affine { a: c(0)?, b: c(1)? })
        }
        "mobius" | "moebius" => {
            arity(4)?;
            Ok(Primitive::Moebius {
                a: c(0)?,
                b: c(1)?,
                c: c(2)?,
                d: c(3)?,
            })
        }
        "dil" | "dilation" => {
            arity(1)?;
            Ok(Primitive::Dilation(parse_real(args[0], whole)?))
        }
        "auto" | "automorphism" => {
            arity(1)?;
            Ok(Primitive::Automorphism(c(0)?))
        }
        "poly" | "polynomial" => Ok(Primitive::Polynomial(
            args.iter()
                .map(|a| parse_complex(a, whole))
                .collect::<Result<_, _>>()?,
        )),
        _ => Err(err()),
    }
}

impl FromStr for Symbol {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chain = split_top_level(s.trim(), '*')
            .into_iter()
            .map(|t| parse_primitive(t, s))
            .collect::<Result<Vec<_>, _>>()?;
        chain.reverse();
        Symbol::new(chain)
    }
}

/// Estimate of `sup_{|z|<1} |φ(z)|` from `m` boundary samples plus a
/// golden-section refinement around the largest one. Sampling can only
/// under-estimate.
pub fn sup_norm(symbol: &Symbol, m: usize) -> f64 {
    let m = m.max(8);
    let radius = symbol.boundary_radius();
    let modulus = |theta: f64| {
        symbol
            .eval(Complex64::from_polar(radius, theta))
            .map(|w| w.norm())
            .unwrap_or(f64::INFINITY)
    };
    let step = 2.0 * PI / m as f64;
    let (best_j, best) =
        (0..m)
            .map(|j| (j, modulus(j as f64 * step)))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
    if !best.is_finite() {
        return best;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best_j as f64 - 1.0) * step, (best_j as f64 + 1.0) * step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (modulus(x1), modulus(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = modulus(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = modulus(x1);
        }
    }
    best.max(f1).max(f2)
}

/// `ρ(z, w) = |z − w| / |1 − z̄ w|`.
pub fn pseudo_hyperbolic(z: Complex64, w: Complex64) -> f64 {
    (z - w).norm() / (ONE - z.conj() * w).norm()
}

/// Euclidean disk (center, radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

fn circumcircle(p: Complex64, q: Complex64, r: Complex64) -> Option<Disk> {
    let (b, c) = (q - p, r - p);
    let d = 2.0 * (b.re * c.im - b.im * c.re);
    let scale = b.norm().max(c.norm());
    if d.abs() <= 1e-14 * scale * scale {
        return None;
    }
    let (b2, c2) = (b.norm_sqr(), c.norm_sqr());
    let ux = (c.im * b2 - b.im * c2) / d;
    let uy = (b.re * c2 - c.re * b2) / d;
    let center = p + Complex64::new(ux, uy);
    Some(Disk {
        center,
        radius: (center - p).norm(),
    })
}

/// The Euclidean disk `φ(D)` of a fractional-linear symbol, from the
/// circumcircle of three boundary images; affine chains use `b`, `|a|`.
pub fn image_disk(symbol: &Symbol) -> Result<Disk, SymbolError> {
    let m = symbol
        .mobius_matrix()
        .ok_or(SymbolError::NotFractionalLinear)?;
    if m[2].norm() == 0.0 {
        let (a, b) = (m[0] / m[3], m[1] / m[3]);
        if a.norm() == 0.0 {
            return Err(SymbolError::DegenerateImage);
        }
        return Ok(Disk {
            center: b,
            radius: a.norm(),
        });
    }
    if m[2].norm() >= m[3].norm() {
        // pole on or inside the closed disk: image is not a bounded disk
        return Err(SymbolError::DegenerateImage);
    }
    let pts = [ONE, Complex64::new(0.0, 1.0), -ONE]
        .iter()
        .map(|&z| symbol.eval(z))
        .collect::<Result<Vec<_>, _>>()?;
    circumcircle(pts[0], pts[1], pts[2]).ok_or(SymbolError::DegenerateImage)
}

/// Truncation order with `ρ^N < 1e-15`, capped at [`MAX_AUTO_ORDER`].
pub fn auto_order(rho: f64) -> usize {
    if rho <= 0.0 {
        return 2;
    }
    let n = (1e-15f64.ln() / rho.ln()).ceil();
    if !n.is_finite() || n > MAX_AUTO_ORDER as f64 {
        MAX_AUTO_ORDER
    } else {
        (n as usize).max(2)
    }
}

/// `(Σ |c_n|² w_n)^{1/2}` over the stored coefficients; weights beyond the
/// table are taken from its spec.
pub fn series_norm(series: &PowerSeries, weights: &CoefWeights) -> Result<f64, SymbolError> {
    let mut acc = 0.0;
    for (n, c) in series.coeffs().iter().enumerate() {
        let w = if n <= weights.n_max() {
            weights.get(n)
        } else {
            weights.spec.weight(n)?
        };
        acc += c.norm_sqr() * w;
    }
    Ok(acc.sqrt())
}

/// `‖φ‖_ω` from the Taylor series; `order = None` picks [`auto_order`].
pub fn space_norm(
    symbol: &Symbol,
    weights: &CoefWeights,
    order: Option<usize>,
) -> Result<f64, SymbolError> {
    let rho = sup_norm(symbol, 1024);
    if rho >= 1.0 {
        return Err(SymbolError::NotStrictlyInside(rho));
    }
    let n = order.unwrap_or_else(|| auto_order(rho));
    series_norm(&symbol.taylor(n)?, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{coef_weights, WeightSpec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let z1 = c(1.0);
        assert_eq!(
            Symbol::single(Primitive::Dilation(0.5))
                .unwrap()
                .eval(z1)
                .unwrap(),
            c(0.5)
        );
        let aff = Symbol::single(Primitive::Affine {
            a: c(0.3),
            b: c(0.4),
        })
        .unwrap();
        assert!((aff.eval(z1).unwrap() - c(0.7)).norm() < 1e-15);
        let auto = Symbol::single(Primitive::Automorphism(c(0.5))).unwrap();
        assert_eq!(auto.eval(c(0.0)).unwrap(), c(0.5));
    }

    #[test]
    fn moebius_pole_is_reported() {
        let m = Primitive::Moebius {
            a: c(1.0),
            b: c(0.0),
            c: c(1.0),
            d: c(-0.5),
        };
        assert!(matches!(m.eval(c(0.5)), Err(SymbolError::Pole(_))));
    }

    #[test]
    fn taylor_examples() {
        let auto = Symbol::single(Primitive::Automorphism(c(0.5))).unwrap();
        let t = auto.taylor(4).unwrap();
        for (got, want) in t.coeffs().iter().zip([0.5, -0.75, -0.375, -0.1875]) {
            assert!((got - c(want)).norm() < 1e-15);
        }
        let aff = Symbol::single(Primitive::Affine {
            a: c(0.3),
            b: c(0.4),
        })
        .unwrap();
        let t = aff.taylor(3).unwrap();
        assert_eq!(t.coeffs(), &[c(0.4), c(0.3), c(0.0)]);
        let s: Symbol = "dil(0.25)*auto(0)".parse().unwrap();
        let t = s.taylor(4).unwrap();
        assert!((t.coeff(1) - c(-0.25)).norm() < 1e-16);
        assert_eq!(t.coeff(0), c(0.0));
        assert_eq!(t.coeff(2), c(0.0));
    }

    #[test]
    fn moebius_on_circle_has_no_series() {
        // z / (z + 1) has |c| = |d|
        let s = Symbol::new(vec![
            Primitive::Dilation(0.5),
            Primitive::Moebius {
                a: c(0.5),
                b: c(0.0),
                c: c(1.0),
                d: c(1.0),
            },
        ]);
        // accepted or not as a self-map, expansion must be refused
        if let Ok(s) = s {
            assert_eq!(s.taylor(4).unwrap_err(), SymbolError::SeriesDivergent);
        }
        let m = Primitive::Moebius {
            a: c(0.5),
            b: c(0.0),
            c: c(1.0),
            d: c(1.0),
        };
        assert_eq!(
            m.apply_series(&PowerSeries::identity(3)).unwrap_err(),
            SymbolError::SeriesDivergent
        );
    }

    #[test]
    fn moebius_disk_conditions() {
        // z/(2z+1): satisfies the first inequality but not |c| <= |d|
        assert!(!moebius_preserves_disk(c(1.0), c(0.0), c(2.0), c(1.0)));
        assert!(moebius_preserves_disk(c(0.3), c(0.4), c(0.0), c(1.0)));
        assert!(!moebius_preserves_disk(c(0.6), c(0.5), c(0.0), c(1.0)));
    }

    #[test]
    fn construction_rejects_non_self_maps() {
        assert!(matches!(
            "affine(0.6,0.5)".parse::<Symbol>(),
            Err(SymbolError::NotSelfMap(_))
        ));
        assert!("dil(1.5)".parse::<Symbol>().is_err());
        assert!("auto(1)".parse::<Symbol>().is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let aff: Symbol = "affine(0.3,0.4)".parse().unwrap();
        assert!((sup_norm(&aff, 256) - 0.7).abs() < 1e-9);
        let dil: Symbol = "dil(0.5)".parse().unwrap();
        assert!((sup_norm(&dil, 64) - 0.5).abs() < 1e-15);
        let s: Symbol = "auto(0.5)*dil(0.5)".parse().unwrap();
        let dense = (0..200_000)
            .map(|j| {
                let z = Complex64::from_polar(0.5, 2.0 * PI * j as f64 / 200_000.0);
                ((c(0.5) - z) / (c(1.0) - 0.5 * z)).norm()
            })
            .fold(0.0, f64::max);
        let est = sup_norm(&s, 256);
        assert!((est - dense).abs() < 1e-9, "{est} vs {dense}");
        assert!((est - 0.8).abs() < 1e-9);
    }

    #[test]
    fn pseudo_hyperbolic_examples() {
        assert!((pseudo_hyperbolic(c(0.5), c(0.0)) - 0.5).abs() < 1e-15);
        let z = Complex64::new(0.2, -0.3);
        assert_eq!(pseudo_hyperbolic(z, z), 0.0);
        assert!((pseudo_hyperbolic(c(0.5), c(-0.5)) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn image_disk_examples() {
        let aff: Symbol = "affine(0.3,0.4)".parse().unwrap();
        let d = image_disk(&aff).unwrap();
        assert!((d.center - c(0.4)).norm() < 1e-15 && (d.radius - 0.3).abs() < 1e-15);
        let dil: Symbol = "dil(0.7)".parse().unwrap();
        let d = image_disk(&dil).unwrap();
        assert_eq!(d.center, c(0.0));
        assert!((d.radius - 0.7).abs() < 1e-15);
    }

    #[test]
    fn image_disk_matches_three_point_oracle() {
        let s: Symbol = "auto(0.5)*dil(0.5)".parse().unwrap();
        let d = image_disk(&s).unwrap();
        let f = |z: Complex64| (c(0.5) - z) / (c(1.0) - 0.5 * z);
        let (p, q, r) = (f(c(0.5)), f(c(-0.5)), f(Complex64::new(0.0, 0.5)));
        let oracle = circumcircle(p, q, r).unwrap();
        assert!((d.center - oracle.center).norm() < 1e-12);
        assert!((d.radius - oracle.radius).abs() < 1e-12);
        // Φ_{1/2} maps the real diameter [-1/2, 1/2] to [0, 4/5]
        assert!((d.center - c(0.4)).norm() < 1e-12 && (d.radius - 0.4).abs() < 1e-12);
        for j in 0..97 {
            let w = s.eval(Complex64::from_polar(1.0, 0.37 + j as f64)).unwrap();
            assert!(((w - d.center).norm() - d.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn image_disk_requires_fractional_linear() {
        let p: Symbol = "poly(0,0.3,0.2)".parse().unwrap();
        assert_eq!(
            image_disk(&p).unwrap_err(),
            SymbolError::NotFractionalLinear
        );
    }

    #[test]
    fn space_norm_examples() {
        let hardy = coef_weights(&WeightSpec::hardy(), 8).unwrap();
        let dirichlet = coef_weights(&"dirichlet".parse().unwrap(), 8).unwrap();
        let dil: Symbol = "dil(0.6)".parse().unwrap();
        assert!((space_norm(&dil, &hardy, None).unwrap() - 0.6).abs() < 1e-15);
        assert!((space_norm(&dil, &dirichlet, None).unwrap() - 0.6).abs() < 1e-15);
        let aff: Symbol = "affine(0.3,0.4)".parse().unwrap();
        assert!((space_norm(&aff, &hardy, None).unwrap() - 0.5).abs() < 1e-15);
        let auto: Symbol = "auto(0.3)".parse().unwrap();
        assert!(matches!(
            space_norm(&auto, &hardy, None),
            Err(SymbolError::NotStrictlyInside(_))
        ));
    }

    #[test]
    fn auto_order_rule() {
        assert_eq!(auto_order(0.5), 50);
        assert_eq!(auto_order(1.0 - 1e-9), MAX_AUTO_ORDER);
        assert_eq!(auto_order(1e-6), 3);
    }

    #[test]
    fn parse_and_display() {
        let s: Symbol = "auto(0.5)*dil(0.5)".parse().unwrap();
        assert_eq!(s.chain()[0], Primitive::Dilation(0.5));
        assert_eq!(s.to_string(), "auto(0.5)*dil(0.5)");
        let m: Symbol = "mobius(0.2+0.1i, 0.1, 0, 1)".parse().unwrap();
        assert_eq!(m.to_string(), "mobius(0.2+0.1i,0.1,0,1)");
        assert!(s.declared_univalent());
        let p: Symbol = "poly(0,0.5,0.1)".parse().unwrap();
        assert!(!p.declared_univalent());
        assert!(p.with_univalent(true).declared_univalent());
        for bad in [
            "",
            "dil()",
            "dil(0.5",
            "foo(0.1)",
            "affine(0.1)",
            "dil(0.5i)",
        ] {
            assert!(bad.parse::<Symbol>().is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_affine() {
        let s: Symbol = "affine(-0.3i,-0.4)".parse().unwrap();
        assert_eq!(s.canonical().to_string(), "affine(0.3,0.4)");
    }

    #[test]
    fn boundary_curve_is_closed() {
        let s: Symbol = "affine(0.3,0.4)".parse().unwrap();
        let pts = s.boundary_curve(16).unwrap();
        assert_eq!(pts.len(), 17);
        assert_eq!(pts[0], pts[16]);
    }
}
