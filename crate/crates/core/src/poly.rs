//! Dense complex polynomials.
//!
//! Coefficients are stored in ascending degree order. All dynamics in this
//! crate are built from [`Polynomial::eval`], which saturates to
//! [`ESCAPE_SENTINEL`] instead of producing infinities or NaNs.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Moduli at or above this value are treated as escaped to infinity.
pub const ESCAPE_SENTINEL: f64 = 1e150;

/// Relative residual tolerance of the root finder.
pub const TOL_ROOT: f64 = 1e-12;

/// Absolute tolerance used to merge duplicate roots and critical values.
pub const TOL_MERGE: f64 = 1e-8;

/// Default iteration cap of the Aberth-Ehrlich iteration.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Largest degree that explicit composition will produce.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

/// Largest coefficient modulus that explicit composition will produce.
pub const DEFAULT_COEFFICIENT_CAP: f64 = 1e150;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial must be non-constant with a nonzero leading coefficient")]
    Degenerate,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("coefficient overflow while composing (degree {degree}); evaluate the word pointwise")]
    CoefficientOverflow { degree: usize },
    #[error("composition degree {degree} exceeds the cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },
    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("cannot parse coefficient {0:?}")]
    Parse(String),
}

/// A dense complex polynomial `c0 + c1 z + ... + cd z^d` with `cd != 0`.
///
/// Constructors reject constants; the only constant values ever produced are
/// derivatives of linear polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

#[inline]
pub fn is_escaped(z: Complex64) -> bool {
    !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= ESCAPE_SENTINEL
}

#[inline]
fn sentinel() -> Complex64 {
    Complex64::new(ESCAPE_SENTINEL, 0.0)
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients. Trailing zero
    /// coefficients are dropped before the degree check.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self, PolyError> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(PolyError::NonFinite);
        }
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(PolyError::Degenerate);
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, PolyError> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `a z^d`.
    pub fn monomial(a: Complex64, degree: usize) -> Result<Self, PolyError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = a;
        Self::new(coeffs)
    }

    /// `a (z - b)^d + b`.
    pub fn centered_power(a: Complex64, b: Complex64, degree: usize) -> Result<Self, PolyError> {
        if degree == 0 {
            return Err(PolyError::Degenerate);
        }
        let shift = Polynomial {
            coeffs: vec![-b, Complex64::new(1.0, 0.0)],
        };
        let mut acc = shift.clone();
        for _ in 1..degree {
            acc = acc.mul(&shift);
        }
        let mut coeffs: Vec<Complex64> = acc.coeffs.iter().map(|c| c * a).collect();
        coeffs[0] += b;
        Self::new(coeffs)
    }

    /// Constant-or-higher polynomial used internally for derivatives and
    /// products; bypasses the non-constant check.
    fn raw(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree()]
    }

    pub fn is_monomial(&self) -> bool {
        self.coeffs[..self.degree()].iter().all(|c| c.norm() == 0.0)
    }

    /// Horner evaluation. Overflow saturates to [`ESCAPE_SENTINEL`].
    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if is_escaped(z) {
            return sentinel();
        }
        let mut acc = self.coeffs[self.coeffs.len() - 1];
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z + c;
        }
        if is_escaped(acc) {
            sentinel()
        } else {
            acc
        }
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = self.coeffs[self.coeffs.len() - 1];
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev().skip(1) {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect();
        Polynomial::raw(coeffs)
    }

    fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::raw(out)
    }

    /// `self ∘ inner` with the default caps.
    pub fn compose(&self, inner: &Polynomial) -> Result<Polynomial, PolyError> {
        self.compose_capped(inner, DEFAULT_MAX_DEGREE, DEFAULT_COEFFICIENT_CAP)
    }

    pub fn compose_capped(
        &self,
        inner: &Polynomial,
        max_degree: usize,
        coefficient_cap: f64,
    ) -> Result<Polynomial, PolyError> {
        let degree = self.degree() * inner.degree();
        if degree > max_degree {
            return Err(PolyError::DegreeCapExceeded {
                degree,
                cap: max_degree,
            });
        }
        let mut acc = Polynomial::raw(vec![self.leading()]);
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(inner);
            acc.coeffs[0] += c;
            if acc
                .coeffs
                .iter()
                .any(|c| !(c.norm() <= coefficient_cap))
            {
                return Err(PolyError::CoefficientOverflow {
                    degree: acc.degree(),
                });
            }
        }
        Polynomial::new(acc.coeffs)
    }

    /// `self - w`.
    pub fn shifted(&self, w: Complex64) -> Polynomial {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] -= w;
        Polynomial::raw(coeffs)
    }

    /// All `deg(p)` roots, with multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>, PolyError> {
        roots_of(&self.coeffs, DEFAULT_MAX_ITER)
    }

    /// Finite critical values `{ p(c) : p'(c) = 0 }`, duplicates merged
    /// within [`TOL_MERGE`].
    pub fn critical_values(&self) -> Result<Vec<Complex64>, PolyError> {
        if self.degree() < 2 {
            return Ok(Vec::new());
        }
        let crit = roots_of(&self.derivative().coeffs, DEFAULT_MAX_ITER)?;
        let values: Vec<Complex64> = crit.into_iter().map(|c| self.eval(c)).collect();
        Ok(merge_points(values, TOL_MERGE))
    }

    /// Solutions of `p(ζ) = w`.
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>, PolyError> {
        roots_of(&self.shifted(w).coeffs, DEFAULT_MAX_ITER)
    }

    /// Fixed points `p(z) = z`.
    pub fn fixed_points(&self) -> Result<Vec<Complex64>, PolyError> {
        let mut coeffs = self.coeffs.clone();
        coeffs[1] -= Complex64::new(1.0, 0.0);
        roots_of(&coeffs, DEFAULT_MAX_ITER)
    }

    pub fn max_coefficient_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Merges points closer than `tol`, keeping the first representative.
pub fn merge_points(points: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (q - p).norm() <= tol) {
            out.push(p);
        }
    }
    out
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = coeffs[coeffs.len() - 1];
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev().skip(1) {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn residual_ok(coeffs: &[Complex64], root: Complex64) -> bool {
    let d = (coeffs.len() - 1) as f64;
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let (p, _) = horner(coeffs, root);
    let lhs = p.norm();
    if lhs == 0.0 {
        return true;
    }
    if !lhs.is_finite() {
        return false;
    }
    lhs.ln() <= TOL_ROOT.ln() + d * (1.0 + root.norm()).ln() + scale.ln()
}

/// Roots of the polynomial with the given ascending coefficients. The
/// trailing coefficient must be nonzero; lower zero coefficients give exact
/// zero roots.
pub(crate) fn roots_of(coeffs: &[Complex64], max_iter: usize) -> Result<Vec<Complex64>, PolyError> {
    let degree = coeffs.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    let low_zeros = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let mut roots = vec![zero; low_zeros];
    let reduced = &coeffs[low_zeros..];
    let d = degree - low_zeros;
    if d == 0 {
        return Ok(roots);
    }
    let lead = reduced[d];
    if d == 1 {
        roots.push(-reduced[0] / lead);
        return Ok(roots);
    }
    if reduced[1..d].iter().all(|c| c.norm() == 0.0) {
        // binomial a z^d + c0: closed-form d-th roots
        let w = -reduced[0] / lead;
        let r = w.norm().powf(1.0 / d as f64);
        let theta = w.arg();
        for k in 0..d {
            let angle = (theta + TAU * k as f64) / d as f64;
            roots.push(Complex64::from_polar(r, angle));
        }
        return Ok(roots);
    }
    if d == 2 {
        let (a, b, c) = (reduced[2], reduced[1], reduced[0]);
        let disc = (b * b - a * c * 4.0).sqrt();
        // choose the sign that avoids cancellation
        let q = if (b.conj() * disc).re >= 0.0 {
            -(b + disc) * 0.5
        } else {
            -(b - disc) * 0.5
        };
        if q.norm() == 0.0 {
            roots.extend([zero, zero]);
        } else {
            roots.extend([q / a, c / q]);
        }
        for r in roots.iter_mut().skip(low_zeros) {
            *r = polish(reduced, *r);
        }
        return Ok(roots);
    }
    let found = aberth(reduced, max_iter)?;
    roots.extend(found);
    Ok(roots)
}

fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..2 {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if horner(coeffs, next).0.norm() < p.norm() {
            z = next;
        } else {
            break;
        }
    }
    z
}

/// Aberth-Ehrlich simultaneous iteration with initial guesses on the Cauchy
/// bound circle, followed by Newton polishing.
fn aberth(coeffs: &[Complex64], max_iter: usize) -> Result<Vec<Complex64>, PolyError> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let cauchy = 1.0
        + coeffs[..d]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(cauchy, TAU * k as f64 / d as f64 + 0.4))
        .collect();
    let mut done = vec![false; d];
    let mut iterations = 0;
    while iterations < max_iter && done.iter().any(|f| !f) {
        iterations += 1;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(coeffs, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i] - zj;
                    if diff.norm() > 0.0 {
                        sum += diff.inv();
                    }
                }
            }
            let step = if dp.norm() == 0.0 {
                // perturb off a critical point
                Complex64::new(1e-8 * (1.0 + z[i].norm()), 1e-8)
            } else {
                let ratio = p / dp;
                ratio / (Complex64::new(1.0, 0.0) - ratio * sum)
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                return Err(PolyError::NoConvergence { iterations });
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z[i].norm()) {
                done[i] = true;
            }
        }
    }
    for zi in z.iter_mut() {
        *zi = polish(coeffs, *zi);
    }
    if z.iter().all(|&r| residual_ok(coeffs, r)) {
        Ok(z)
    } else {
        Err(PolyError::NoConvergence { iterations })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{},{}", c.re, c.im)?;
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = PolyError;

    /// Parses whitespace-separated `re,im` pairs in ascending degree order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coeffs = s
            .split_whitespace()
            .map(|tok| {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| PolyError::Parse(tok.to_string()))?;
                let re: f64 = re.parse().map_err(|_| PolyError::Parse(tok.to_string()))?;
                let im: f64 = im.parse().map_err(|_| PolyError::Parse(tok.to_string()))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>, PolyError>>()?;
        Polynomial::new(coeffs)
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
        Polynomial::new(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn evaluate_examples() {
        let quarter = Polynomial::from_real(&[0.0, 0.0, 0.25]).unwrap();
        assert_eq!(quarter.eval(c(2.0, 0.0)), c(1.0, 0.0));
        let cube = Polynomial::monomial(c(1.0, 0.0), 3).unwrap();
        assert_eq!(cube.eval(c(0.0, 0.0)), c(0.0, 0.0));
        let basilica = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let twice = basilica.compose(&basilica).unwrap();
        assert_eq!(twice.eval(c(0.0, 0.0)), c(0.0, 0.0));
        // (z^2-1)^2-1 at z = 0.5 by hand: (0.25-1)^2-1 = -0.4375
        assert!(close(twice.eval(c(0.5, 0.0)), c(-0.4375, 0.0), 1e-15));
    }

    #[test]
    fn eval_saturates_instead_of_overflowing() {
        let p = Polynomial::monomial(c(1.0, 0.0), 100).unwrap();
        let v = p.eval(c(1e10, 0.0));
        assert!(is_escaped(v));
        assert!(v.re.is_finite());
        assert!(is_escaped(p.eval(c(f64::INFINITY, 0.0))));
    }

    #[test]
    fn constructor_rejects_constants() {
        assert_eq!(Polynomial::from_real(&[3.0]), Err(PolyError::Degenerate));
        assert_eq!(Polynomial::from_real(&[3.0, 0.0, 0.0]), Err(PolyError::Degenerate));
        assert_eq!(Polynomial::from_real(&[f64::NAN, 1.0]), Err(PolyError::NonFinite));
        assert_eq!(Polynomial::from_real(&[1.0, 2.0, 0.0]).unwrap().degree(), 1);
    }

    #[test]
    fn derivative_examples() {
        let quarter = Polynomial::from_real(&[0.0, 0.0, 0.25]).unwrap();
        assert_eq!(quarter.derivative().coefficients(), &[c(0.0, 0.0), c(0.5, 0.0)]);
        let cube = Polynomial::monomial(c(1.0, 0.0), 3).unwrap();
        assert_eq!(cube.derivative().coefficients(), &[c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        // a (z-b)^d has derivative a d (z-b)^(d-1); binomial expansion oracle
        let (a, b, d) = (c(0.5, 0.25), c(0.3, -0.2), 4usize);
        let p = Polynomial::centered_power(a, b, d).unwrap().shifted(b);
        let expected = Polynomial::centered_power(a * d as f64, b, d - 1).unwrap().shifted(b);
        for (x, y) in p.derivative().coefficients().iter().zip(expected.coefficients()) {
            assert!(close(*x, *y, 1e-14));
        }
    }

    #[test]
    fn compose_examples() {
        let sq = Polynomial::monomial(c(1.0, 0.0), 2).unwrap();
        assert_eq!(sq.compose(&sq).unwrap(), Polynomial::monomial(c(1.0, 0.0), 4).unwrap());
        let basilica = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            basilica.compose(&basilica).unwrap(),
            Polynomial::from_real(&[0.0, 0.0, -2.0, 0.0, 1.0]).unwrap()
        );
    }

    #[test]
    fn compose_caps() {
        let p = Polynomial::monomial(c(1.0, 0.0), 64).unwrap();
        assert!(matches!(
            p.compose(&p.compose(&p).unwrap()),
            Err(PolyError::DegreeCapExceeded { .. })
        ));
        let big = Polynomial::from_real(&[1e100, 0.0, 1e100]).unwrap();
        assert!(matches!(
            big.compose_capped(&big, 4096, 1e150),
            Err(PolyError::CoefficientOverflow { .. })
        ));
    }

    #[test]
    fn roots_examples() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let r = sorted_re(p.roots().unwrap());
        assert!(close(r[0], c(-1.0, 0.0), 1e-15) && close(r[1], c(1.0, 0.0), 1e-15));
        let cube = Polynomial::monomial(c(1.0, 0.0), 3).unwrap();
        assert_eq!(cube.roots().unwrap(), vec![c(0.0, 0.0); 3]);
        let double = Polynomial::from_real(&[1.0, -2.0, 1.0]).unwrap();
        let r = double.roots().unwrap();
        assert_eq!(r.len(), 2);
        for x in r {
            assert!(close(x, c(1.0, 0.0), 1e-7));
            assert!(double.eval(x).norm() < 1e-12);
        }
    }

    #[test]
    fn aberth_handles_clustered_roots() {
        // (z-1)^3 (z+2) expanded
        let p = Polynomial::from_real(&[-2.0, 5.0, -3.0, -1.0, 1.0]).unwrap();
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.iter().filter(|z| close(**z, c(1.0, 0.0), 1e-4)).count(), 3);
        assert_eq!(r.iter().filter(|z| close(**z, c(-2.0, 0.0), 1e-9)).count(), 1);
    }

    #[test]
    fn critical_value_examples() {
        let quarter = Polynomial::from_real(&[0.0, 0.0, 0.25]).unwrap();
        assert_eq!(quarter.critical_values().unwrap(), vec![c(0.0, 0.0)]);
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.critical_values().unwrap(), vec![c(-1.0, 0.0)]);
        let b = c(0.3, 0.1);
        let g = Polynomial::centered_power(c(0.5, 0.0), b, 3).unwrap();
        let cv = g.critical_values().unwrap();
        assert_eq!(cv.len(), 1);
        assert!(close(cv[0], b, 1e-9));
    }

    #[test]
    fn preimage_examples() {
        let sq = Polynomial::monomial(c(1.0, 0.0), 2).unwrap();
        let r = sorted_re(sq.preimages(c(4.0, 0.0)).unwrap());
        assert!(close(r[0], c(-2.0, 0.0), 1e-15) && close(r[1], c(2.0, 0.0), 1e-15));
        let quarter = Polynomial::from_real(&[0.0, 0.0, 0.25]).unwrap();
        let r = sorted_re(quarter.preimages(c(1.0, 0.0)).unwrap());
        assert!(close(r[0], c(-2.0, 0.0), 1e-15) && close(r[1], c(2.0, 0.0), 1e-15));
        let cube = Polynomial::monomial(c(1.0, 0.0), 3).unwrap();
        let r = cube.preimages(c(8.0, 0.0)).unwrap();
        for k in 0..3 {
            let polar = Complex64::from_polar(2.0, TAU * k as f64 / 3.0);
            assert!(r.iter().any(|z| close(*z, polar, 1e-12)));
        }
        for z in r {
            assert!((cube.eval(z) - c(8.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn text_format() {
        let p: Polynomial = "0,0 0,0 0.25,0".parse().unwrap();
        assert_eq!(p, Polynomial::from_real(&[0.0, 0.0, 0.25]).unwrap());
        assert_eq!(p.to_string(), "0,0 0,0 0.25,0");
        assert!("1,0 x".parse::<Polynomial>().is_err());
        assert!("5,0".parse::<Polynomial>().is_err());
    }

    fn arb_poly(max_degree: usize) -> impl Strategy<Value = Polynomial> {
        (1..=max_degree)
            .prop_flat_map(|d| {
                prop::collection::vec((0.0..1.0f64, 0.0..TAU), d + 1)
            })
            .prop_filter_map("degenerate", |pairs| {
                let mut coeffs: Vec<Complex64> =
                    pairs.iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
                let last = coeffs.len() - 1;
                if coeffs[last].norm() < 0.05 {
                    coeffs[last] = Complex64::new(0.5, 0.0);
                }
                Polynomial::new(coeffs).ok()
            })
    }

    proptest! {
        #[test]
        fn preimages_round_trip(p in arb_poly(6), wr in -2.0..2.0f64, wi in -2.0..2.0f64) {
            let w = c(wr, wi);
            let pre = p.preimages(w).unwrap();
            prop_assert_eq!(pre.len(), p.degree());
            for z in pre {
                prop_assert!((p.eval(z) - w).norm() < 1e-9 * (1.0 + w.norm()));
            }
        }

        #[test]
        fn compose_matches_nested_evaluation(
            p in arb_poly(4), q in arb_poly(4), zr in -1.0..1.0f64, zi in -1.0..1.0f64
        ) {
            let z = c(zr, zi);
            let pq = p.compose(&q).unwrap();
            prop_assert_eq!(pq.degree(), p.degree() * q.degree());
            prop_assert!((pq.eval(z) - p.eval(q.eval(z))).norm() < 1e-9);
        }

        #[test]
        fn derivative_matches_central_difference(p in arb_poly(6), zr in -1.0..1.0f64, zi in -1.0..1.0f64) {
            let z = c(zr, zi);
            let h = 1e-5;
            let fd = (p.eval(z + h) - p.eval(z - h)) / (2.0 * h);
            prop_assert!((p.derivative().eval_with_derivative(z).0 - fd).norm() < 1e-7);
        }

        #[test]
        fn critical_values_bounded_by_degree(p in arb_poly(6)) {
            if p.degree() >= 2 {
                prop_assert!(p.critical_values().unwrap().len() <= p.degree() - 1);
            }
        }
    }
}
