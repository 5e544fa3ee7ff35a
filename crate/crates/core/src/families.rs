//! Constructors for the explicit generator families, with their parameter
//! constraints enforced.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{PolyError, Polynomial};
use crate::raster::{escape_classify, CellState, DEFAULT_MAX_ROUNDS};
use crate::semigroup::{Generator, GeneratorSet, SemigroupError, Tri};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("degree pair (2, 2) is forbidden (generator {generator} has degree 2)")]
    DegreePairForbidden { generator: usize },
    #[error("center {center} is not interior to the trapped region with margin {margin}")]
    CenterNotInterior { center: Complex64, margin: f64 },
    #[error("unknown family spec: {0}")]
    Parse(String),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentCount {
    Finite(usize),
    Countable,
    Uncountable,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub pcb: Option<Tri>,
    pub connected: Option<bool>,
    pub component_count: Option<ComponentCount>,
    pub hyperbolic: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub expected: Option<Expected>,
}

impl FamilySpec {
    fn new(name: &str, parameters: &[(&str, f64)], expected: Expected) -> Self {
        Self {
            name: name.to_string(),
            parameters: parameters.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            expected: Some(expected),
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `{z³, z²/4}`.
pub fn sy_example() -> GeneratorSet {
    GeneratorSet::from_polynomials(vec![
        Polynomial::monomial(c(1.0), 3).expect("valid"),
        Polynomial::monomial(c(0.25), 2).expect("valid"),
    ])
    .expect("valid")
}

/// `{(z²−1)∘(z²−1), (z²/4)∘(z²/4)}`.
pub fn figure1_example() -> GeneratorSet {
    let g1 = Polynomial::from_real(&[-1.0, 0.0, 1.0]).expect("valid");
    let g2 = Polynomial::monomial(c(0.25), 2).expect("valid");
    GeneratorSet::from_polynomials(vec![g1.compose(&g1).expect("small"), g2.compose(&g2).expect("small")])
        .expect("valid")
}

fn check_eps(eps: f64) -> Result<(), FamilyError> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(FamilyError::ConstraintViolation(format!("epsilon {eps} not in (0, 1/2)")))
    }
}

fn check_l(l: u32) -> Result<(), FamilyError> {
    if l >= 1 {
        Ok(())
    } else {
        Err(FamilyError::ConstraintViolation("iteration count must be at least 1".into()))
    }
}

/// `{α_j^l, β_j^l : j = 1..n}` with `α_j = z²/j` and `β_j = (z−ε)²/j + ε`,
/// in the order `α_1, β_1, α_2, β_2, ...`.
pub fn fincomp_family(n: usize, eps: f64, l: u32) -> Result<GeneratorSet, FamilyError> {
    if n < 2 {
        return Err(FamilyError::ConstraintViolation(format!("n = {n} must be at least 2")));
    }
    check_eps(eps)?;
    check_l(l)?;
    let mut gens = Vec::with_capacity(2 * n);
    for j in 1..=n {
        let a = c(1.0 / j as f64);
        gens.push(Generator::iterate(Polynomial::monomial(a, 2)?, l)?);
        gens.push(Generator::iterate(Polynomial::centered_power(a, c(eps), 2)?, l)?);
    }
    Ok(GeneratorSet::new(gens)?)
}

/// `{α_1^l, α_2^l, α_3^l}` with `α_1 = z²`, `α_2 = (z−ε)² + ε`, `α_3 = z²/2`.
pub fn countprop_family(eps: f64, l: u32) -> Result<GeneratorSet, FamilyError> {
    check_eps(eps)?;
    check_l(l)?;
    Ok(GeneratorSet::new(vec![
        Generator::iterate(Polynomial::monomial(c(1.0), 2)?, l)?,
        Generator::iterate(Polynomial::centered_power(c(1.0), c(eps), 2)?, l)?,
        Generator::iterate(Polynomial::monomial(c(0.5), 2)?, l)?,
    ])?)
}

/// Largest admissible `c` for `c z^a (1−z)^b`:
/// `((a+b)/a)^a ((a+b)/b)^b`.
pub fn logistic_c_max(a: u32, b: u32) -> f64 {
    let s = (a + b) as f64;
    (s / a as f64).powi(a as i32) * (s / b as f64).powi(b as i32)
}

/// `c z^a (1−z)^b` in coefficient form.
pub fn logistic_polynomial(a: u32, b: u32, cc: f64) -> Result<Polynomial, FamilyError> {
    if a < 1 || b < 1 || !(cc > 0.0) || !cc.is_finite() {
        return Err(FamilyError::ConstraintViolation(format!("({a}, {b}, {cc}) needs a, b >= 1 and c > 0")));
    }
    if cc > logistic_c_max(a, b) * (1.0 + 1e-12) {
        return Err(FamilyError::ConstraintViolation(format!(
            "({a}, {b}, {cc}): c (a/(a+b))^a (b/(a+b))^b > 1"
        )));
    }
    let mut coeffs = vec![c(0.0); (a + b + 1) as usize];
    let mut binom = 1.0;
    for k in 0..=b {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[(a + k) as usize] = c(cc * sign * binom);
        binom = binom * (b - k) as f64 / (k + 1) as f64;
    }
    Ok(Polynomial::new(coeffs)?)
}

pub fn logistic_family(triples: &[(u32, u32, f64)]) -> Result<GeneratorSet, FamilyError> {
    if triples.is_empty() {
        return Err(FamilyError::ConstraintViolation("empty logistic family".into()));
    }
    let polys = triples
        .iter()
        .map(|&(a, b, cc)| logistic_polynomial(a, b, cc))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GeneratorSet::from_polynomials(polys)?)
}

/// Resolution of the trapped-region check behind [`attach_perturbation`].
pub const INTERIOR_CHECK_RESOLUTION: usize = 256;

/// A new generator `a(z−b)^d + b` attachable to `Γ` for `0 < |a| < c₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub c0: f64,
    pub center: Complex64,
    pub degree: usize,
    pub radius: f64,
}

impl Perturbation {
    pub fn build(&self, a: Complex64) -> Result<Polynomial, FamilyError> {
        let m = a.norm();
        if !(m > 0.0 && m < self.c0) {
            return Err(FamilyError::ConstraintViolation(format!("|a| = {m} not in (0, c0 = {})", self.c0)));
        }
        Ok(Polynomial::centered_power(a, self.center, self.degree)?)
    }

    /// `Γ ∪ {a(z−b)^d + b}`.
    pub fn attach(&self, gens: &GeneratorSet, a: Complex64) -> Result<GeneratorSet, FamilyError> {
        Ok(gens.with(Generator::new(self.build(a)?))?)
    }
}

/// `c₀ = min_h exp(d(d−1)d_h / (d + d_h − d_h d) · (log 2 − log(|a_h|/2)/d_h − log(r)/d))`.
pub fn perturbation_c0(gens: &GeneratorSet, d: usize, r: f64) -> Result<f64, FamilyError> {
    let df = d as f64;
    let mut best = f64::INFINITY;
    for (i, h) in gens.generators().iter().enumerate() {
        let dh = h.degree() as f64;
        let denom = df + dh - dh * df;
        if denom == 0.0 {
            return Err(FamilyError::DegreePairForbidden { generator: i + 1 });
        }
        let log_a = h.log_abs_leading();
        let bracket = std::f64::consts::LN_2 - (log_a - std::f64::consts::LN_2) / dh - r.ln() / df;
        best = best.min((df * (df - 1.0) * dh / denom * bracket).exp());
    }
    Ok(best)
}

/// `(r/α)^{1/d} > 2 ((2/|a_h|) (1/α)^{1/(d−1)})^{1/d_h}` for every `h`,
/// compared in logarithms.
pub fn perturbation_inequality(gens: &GeneratorSet, alpha: f64, d: usize, r: f64) -> bool {
    let df = d as f64;
    let ln2 = std::f64::consts::LN_2;
    let lhs = (r.ln() - alpha.ln()) / df;
    gens.generators().iter().all(|h| {
        let dh = h.degree() as f64;
        let rhs = ln2 + (ln2 - h.log_abs_leading() - alpha.ln() / (df - 1.0)) / dh;
        lhs > rhs
    })
}

/// `b` lies in a Trapped cell of the escape classification and every cell
/// within distance `r` of `b` is Trapped.
pub fn center_is_interior(gens: &GeneratorSet, b: Complex64, r: f64, resolution: usize) -> bool {
    let grid = escape_classify(gens, resolution, DEFAULT_MAX_ROUNDS);
    let f = grid.frame;
    let Some(idx) = f.locate(b) else { return false };
    if grid.cells[idx] != CellState::Trapped {
        return false;
    }
    let reach = (r / f.cell_width().min(f.cell_height())).ceil() as i64 + 1;
    let (x0, y0) = f.coords(b);
    let n = f.resolution as i64;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (x0 + dx, y0 + dy);
            if !(0..n).contains(&x) || !(0..n).contains(&y) {
                return false;
            }
            let i = f.index(x as usize, y as usize);
            // cells meeting the closed disk of radius r about b
            let (cx, cy) = (x as f64, y as f64);
            let lo = f.lattice_point(cx, cy + 1.0);
            let hi = f.lattice_point(cx + 1.0, cy);
            let ddx = (lo.re - b.re).max(0.0).max(b.re - hi.re);
            let ddy = (lo.im - b.im).max(0.0).max(b.im - hi.im);
            if ddx.hypot(ddy) <= r && grid.cells[i] != CellState::Trapped {
                return false;
            }
        }
    }
    true
}

pub fn attach_perturbation(gens: &GeneratorSet, b: Complex64, d: usize, r: f64) -> Result<Perturbation, FamilyError> {
    if d < 2 {
        return Err(FamilyError::ConstraintViolation(format!("degree {d} must be at least 2")));
    }
    if !(r > 0.0) {
        return Err(FamilyError::ConstraintViolation(format!("radius {r} must be positive")));
    }
    let c0 = perturbation_c0(gens, d, r)?;
    if !center_is_interior(gens, b, r, INTERIOR_CHECK_RESOLUTION) {
        return Err(FamilyError::CenterNotInterior { center: b, margin: r });
    }
    Ok(Perturbation {
        c0,
        center: b,
        degree: d,
        radius: r,
    })
}

/// A parsed `--family` value.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyRequest {
    Sy,
    Figure1,
    Fincomp { n: usize, eps: f64, l: u32 },
    Countprop { eps: f64, l: u32 },
    Logistic(Vec<(u32, u32, f64)>),
    /// `{z²}` enlarged by `(c₀/2)(z)^d` with center 0 and margin `r`.
    Perturb { d: usize, r: f64 },
}

fn nums<T: FromStr>(s: &str, spec: &str) -> Result<Vec<T>, FamilyError> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| FamilyError::Parse(spec.to_string())))
        .collect()
}

impl FromStr for FamilyRequest {
    type Err = FamilyError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = || FamilyError::Parse(spec.to_string());
        let (name, args) = spec.split_once(':').map_or((spec, None), |(n, a)| (n, Some(a)));
        Ok(match (name.trim(), args) {
            ("sy", None) => FamilyRequest::Sy,
            ("figure1", None) => FamilyRequest::Figure1,
            ("fincomp", Some(a)) => {
                let v: Vec<f64> = nums(a, spec)?;
                if v.len() != 3 || v[0].fract() != 0.0 || v[2].fract() != 0.0 || v[0] < 0.0 || v[2] < 0.0 {
                    return Err(bad());
                }
                FamilyRequest::Fincomp { n: v[0] as usize, eps: v[1], l: v[2] as u32 }
            }
            ("countprop", Some(a)) => {
                let v: Vec<f64> = nums(a, spec)?;
                if v.len() != 2 || v[1].fract() != 0.0 || v[1] < 0.0 {
                    return Err(bad());
                }
                FamilyRequest::Countprop { eps: v[0], l: v[1] as u32 }
            }
            ("logistic", Some(a)) => {
                let mut triples = Vec::new();
                for part in a.split(';').filter(|p| !p.trim().is_empty()) {
                    let v: Vec<&str> = part.split(',').map(str::trim).collect();
                    if v.len() != 3 {
                        return Err(bad());
                    }
                    triples.push((
                        v[0].parse().map_err(|_| bad())?,
                        v[1].parse().map_err(|_| bad())?,
                        v[2].parse().map_err(|_| bad())?,
                    ));
                }
                FamilyRequest::Logistic(triples)
            }
            ("perturb", None) => FamilyRequest::Perturb { d: 3, r: 0.5 },
            ("perturb", Some(a)) => {
                let v: Vec<f64> = nums(a, spec)?;
                if v.len() != 2 || v[0].fract() != 0.0 || v[0] < 0.0 {
                    return Err(bad());
                }
                FamilyRequest::Perturb { d: v[0] as usize, r: v[1] }
            }
            _ => return Err(bad()),
        })
    }
}

impl FamilyRequest {
    /// Builds the generator set and its descriptive record.
    pub fn build(&self) -> Result<(FamilySpec, GeneratorSet), FamilyError> {
        let disconnected = |count| Expected {
            pcb: Some(Tri::Yes),
            connected: Some(false),
            component_count: count,
            hyperbolic: None,
        };
        Ok(match *self {
            FamilyRequest::Sy => (
                FamilySpec::new("sy", &[], disconnected(Some(ComponentCount::Uncountable))),
                sy_example(),
            ),
            FamilyRequest::Figure1 => (
                FamilySpec::new(
                    "figure1",
                    &[],
                    Expected {
                        hyperbolic: Some(true),
                        ..disconnected(Some(ComponentCount::Uncountable))
                    },
                ),
                figure1_example(),
            ),
            FamilyRequest::Fincomp { n, eps, l } => (
                FamilySpec::new(
                    "fincomp",
                    &[("n", n as f64), ("eps", eps), ("l", l as f64)],
                    disconnected(Some(ComponentCount::Finite(n))),
                ),
                fincomp_family(n, eps, l)?,
            ),
            FamilyRequest::Countprop { eps, l } => (
                FamilySpec::new(
                    "countprop",
                    &[("eps", eps), ("l", l as f64)],
                    disconnected(Some(ComponentCount::Countable)),
                ),
                countprop_family(eps, l)?,
            ),
            FamilyRequest::Logistic(ref triples) => {
                let mut params = Vec::new();
                let names: Vec<(String, f64)> = triples
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &(a, b, cc))| {
                        [(format!("a{}", i + 1), a as f64), (format!("b{}", i + 1), b as f64), (format!("c{}", i + 1), cc)]
                    })
                    .collect();
                for (k, v) in &names {
                    params.push((k.as_str(), *v));
                }
                (
                    FamilySpec::new(
                        "logistic",
                        &params,
                        Expected {
                            pcb: Some(Tri::Yes),
                            ..Expected::default()
                        },
                    ),
                    logistic_family(triples)?,
                )
            }
            FamilyRequest::Perturb { d, r } => {
                let base = GeneratorSet::from_polynomials(vec![Polynomial::monomial(c(1.0), 2)?])?;
                let p = attach_perturbation(&base, c(0.0), d, r)?;
                let a = p.c0 / 2.0;
                (
                    FamilySpec::new(
                        "perturb",
                        &[("d", d as f64), ("r", r), ("c0", p.c0), ("a", a)],
                        disconnected(None),
                    ),
                    p.attach(&base, c(a))?,
                )
            }
        })
    }
}
