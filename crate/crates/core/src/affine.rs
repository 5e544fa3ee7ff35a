//! The real-affine shadow of a polynomial semigroup.
//!
//! `Ψ(g)(x) = deg(g) x + log|a(g)|` sends composition to composition. The
//! M-set of `Ψ(G)` is computed as the attractor of the contracting system of
//! inverse maps; cover tests that certify connectedness or finiteness are
//! done in exact rational arithmetic on the `f64` inputs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Polynomial;
use crate::semigroup::{Generator, GeneratorSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffineError {
    #[error("affine map needs a finite nonzero slope")]
    ZeroSlope,
    #[error("slope one has no unique fixed point")]
    SlopeOne,
    #[error("inverse system is not contracting (|slope| = {0} <= 1)")]
    NotExpanding(f64),
}

/// `x ↦ slope · x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineMap {
    pub fn new(slope: f64, intercept: f64) -> Result<Self, AffineError> {
        if slope == 0.0 || !slope.is_finite() || !intercept.is_finite() {
            return Err(AffineError::ZeroSlope);
        }
        Ok(Self { slope, intercept })
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn inverse_apply(&self, x: f64) -> f64 {
        (x - self.intercept) / self.slope
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            slope: self.slope * inner.slope,
            intercept: self.slope * inner.intercept + self.intercept,
        }
    }

    pub fn fixed_point(&self) -> Result<f64, AffineError> {
        if self.slope == 1.0 {
            return Err(AffineError::SlopeOne);
        }
        Ok(self.intercept / (1.0 - self.slope))
    }
}

pub fn psi(p: &Polynomial) -> AffineMap {
    AffineMap {
        slope: p.degree() as f64,
        intercept: p.leading().norm().ln(),
    }
}

/// `Ψ` of a generator, with the iterate's leading coefficient in closed form.
pub fn psi_generator(g: &Generator) -> AffineMap {
    AffineMap {
        slope: g.degree() as f64,
        intercept: g.log_abs_leading(),
    }
}

/// `Θ(g)(z) = a(g) z^{deg(g)}`.
pub fn theta(p: &Polynomial) -> Polynomial {
    Polynomial::monomial(p.leading(), p.degree()).expect("leading coefficient is nonzero")
}

/// Gaps at or below this width are merged away.
pub const MERGE_RESOLUTION: f64 = 1e-12;

/// Refinement stops once a cover holds this many intervals.
pub const MAX_INTERVALS: usize = 1 << 22;

/// Sorted disjoint closed intervals on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<[f64; 2]>,
    pub contains_plus_infinity: bool,
}

impl IntervalSet {
    /// Sorts and merges intervals whose gap is at most [`MERGE_RESOLUTION`].
    pub fn from_intervals(mut raw: Vec<[f64; 2]>) -> Self {
        raw.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut intervals: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
        for iv in raw {
            match intervals.last_mut() {
                Some(last) if iv[0] - last[1] <= MERGE_RESOLUTION => last[1] = last[1].max(iv[1]),
                _ => intervals.push(iv),
            }
        }
        Self {
            intervals,
            contains_plus_infinity: false,
        }
    }

    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv[1] < x);
        self.intervals.get(idx).is_some_and(|iv| iv[0] <= x)
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    /// Every interval of `self` lies inside some interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|iv| {
            let idx = other.intervals.partition_point(|o| o[1] < iv[1]);
            other
                .intervals
                .get(idx)
                .is_some_and(|o| o[0] <= iv[0] && iv[1] <= o[1])
        })
    }
}

fn distinct_maps(gens: &GeneratorSet) -> Vec<AffineMap> {
    let mut maps: Vec<AffineMap> = Vec::new();
    for g in gens.generators() {
        let m = psi_generator(g);
        if !maps.contains(&m) {
            maps.push(m);
        }
    }
    maps
}

fn hull(maps: &[AffineMap]) -> Result<[f64; 2], AffineError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in maps {
        if m.slope.abs() <= 1.0 {
            return Err(AffineError::NotExpanding(m.slope.abs()));
        }
        let p = m.fixed_point()?;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok([lo.next_down(), hi.next_up()])
}

/// Outward-rounded inverse image, clamped to the hull that contains the
/// attractor.
fn inverse_image(m: &AffineMap, iv: [f64; 2], hull: [f64; 2]) -> [f64; 2] {
    let a = m.inverse_apply(iv[0]);
    let b = m.inverse_apply(iv[1]);
    [a.min(b).next_down().max(hull[0]), a.max(b).next_up().min(hull[1])]
}

/// Outer covers of `M(Ψ(G))` at depths `0..=depth`, stopping early at
/// [`MAX_INTERVALS`].
fn m_set_layers(gens: &GeneratorSet, depth: usize) -> Result<Vec<IntervalSet>, AffineError> {
    let maps = distinct_maps(gens);
    let h = hull(&maps)?;
    let mut layers = vec![IntervalSet::from_intervals(vec![h])];
    for _ in 0..depth {
        let current = layers.last().expect("nonempty");
        if current.count() * maps.len() > MAX_INTERVALS {
            break;
        }
        let raw: Vec<[f64; 2]> = maps
            .iter()
            .flat_map(|m| current.intervals.iter().map(move |&iv| inverse_image(m, iv, h)))
            .collect();
        layers.push(IntervalSet::from_intervals(raw));
    }
    Ok(layers)
}

/// Outer cover of the M-set of `Ψ(G)`: the union of all depth-`refine_depth`
/// images of the fixed-point hull under the inverse maps, with outward
/// rounding at every step.
pub fn m_set(gens: &GeneratorSet, refine_depth: usize) -> Result<IntervalSet, AffineError> {
    Ok(m_set_layers(gens, refine_depth)?.pop().expect("nonempty"))
}

/// Exact iteration gives up beyond this many intervals.
const EXACT_MAX_INTERVALS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountBound {
    Finite(usize),
    AtLeast(usize),
}

impl CountBound {
    pub fn value(&self) -> usize {
        match *self {
            CountBound::Finite(n) | CountBound::AtLeast(n) => n,
        }
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn exact_inverse_image(m: &AffineMap, lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
    let slope = exact(m.slope);
    let b = exact(m.intercept);
    let a = (lo - &b) / &slope;
    let c = (hi - &b) / &slope;
    if a <= c {
        (a, c)
    } else {
        (c, a)
    }
}

/// Sorts and merges closed intervals that overlap or touch exactly.
fn merge_exact(mut ivs: Vec<(BigRational, BigRational)>) -> Vec<(BigRational, BigRational)> {
    ivs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(BigRational, BigRational)> = Vec::with_capacity(ivs.len());
    for (lo, hi) in ivs {
        match out.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Iterates the inverse system exactly from the exact fixed-point hull.
/// Returns the interval count once an iterate equals its successor, which
/// makes it the attractor itself.
fn exact_fixed_cover(maps: &[AffineMap], max_steps: usize, max_intervals: usize) -> Option<usize> {
    let one = BigRational::from_integer(BigInt::from(1));
    let fixed: Vec<BigRational> = maps
        .iter()
        .map(|m| -exact(m.intercept) / (exact(m.slope) - &one))
        .collect();
    let lo = fixed.iter().min()?.clone();
    let hi = fixed.iter().max()?.clone();
    let mut current = vec![(lo, hi)];
    for _ in 0..max_steps {
        let next = merge_exact(
            maps.iter()
                .flat_map(|m| current.iter().map(move |(lo, hi)| exact_inverse_image(m, lo, hi)))
                .collect(),
        );
        if next == current {
            return Some(current.len());
        }
        if next.len() > max_intervals {
            return None;
        }
        current = next;
    }
    None
}

/// Upper bound on the number of components of `J(G)` from the M-set of
/// `Ψ(G)`. `Finite(n)` only when exact iteration of the inverse system
/// reaches a fixed union of `n` intervals; otherwise `AtLeast(n)` with `n`
/// the interval count of the depth-`refine_depth` cover, each interval of
/// which meets the attractor.
pub fn component_count_upper_bound(
    gens: &GeneratorSet,
    refine_depth: usize,
) -> Result<CountBound, AffineError> {
    let maps = distinct_maps(gens);
    let cover = m_set(gens, refine_depth)?;
    match exact_fixed_cover(&maps, refine_depth.max(1), EXACT_MAX_INTERVALS) {
        Some(n) => Ok(CountBound::Finite(n)),
        None => Ok(CountBound::AtLeast(cover.count())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub alpha: f64,
    pub beta: f64,
    pub covered: bool,
    pub gap_witness: Option<f64>,
    pub criterion_name: String,
}

/// Exact test of `[α, β] ⊂ ⋃_j Ψ(h_j)^{-1}([α, β])` where `α, β` are the
/// extreme fixed points `-log|a_j| / (deg h_j - 1)`.
pub fn check_interval_cover(gens: &GeneratorSet) -> CriterionReport {
    let maps: Vec<AffineMap> = gens.generators().iter().map(psi_generator).collect();
    let fixed: Vec<BigRational> = maps
        .iter()
        .map(|m| -exact(m.intercept) / (exact(m.slope) - BigRational::from_integer(BigInt::from(1))))
        .collect();
    let alpha = fixed.iter().min().expect("nonempty").clone();
    let beta = fixed.iter().max().expect("nonempty").clone();
    let images = merge_exact(
        maps.iter()
            .map(|m| exact_inverse_image(m, &alpha, &beta))
            .collect(),
    );
    let mut reach = alpha.clone();
    let mut gap = None;
    for (lo, hi) in &images {
        if *lo > reach && reach < beta {
            let right = if *lo < beta { lo.clone() } else { beta.clone() };
            gap = Some((&reach + &right) / BigRational::from_integer(BigInt::from(2)));
            break;
        }
        if *hi > reach {
            reach = hi.clone();
        }
    }
    if gap.is_none() && reach < beta {
        gap = Some((&reach + &beta) / BigRational::from_integer(BigInt::from(2)));
    }
    let to_f64 = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    CriterionReport {
        alpha: to_f64(&alpha),
        beta: to_f64(&beta),
        covered: gap.is_none(),
        gap_witness: gap.as_ref().map(to_f64),
        criterion_name: "interval_cover".to_string(),
    }
}

pub fn check_all_quadratic(gens: &GeneratorSet) -> bool {
    !gens.is_empty() && gens.generators().iter().all(|g| g.degree() == 2)
}

/// Largest violation of `(deg h_ξ - 1) log|a_λ| = (deg h_λ - 1) log|a_ξ|`
/// over all pairs.
pub fn equal_normalized_residual(gens: &GeneratorSet) -> f64 {
    let data: Vec<(f64, f64)> = gens
        .generators()
        .iter()
        .map(|g| (g.degree() as f64, g.log_abs_leading()))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, &(dx, ax)) in data.iter().enumerate() {
        for &(dl, al) in &data[i + 1..] {
            worst = worst.max(((dx - 1.0) * al - (dl - 1.0) * ax).abs());
        }
    }
    worst
}

pub fn check_equal_normalized(gens: &GeneratorSet, tol: f64) -> bool {
    equal_normalized_residual(gens) <= tol
}

/// Default tolerance of [`check_equal_normalized`] in reports.
pub const EQUAL_NORMALIZED_TOL: f64 = 1e-12;

/// The three connectedness criteria as uniform reports. The
/// equal-normalized criterion is named `equal_normalized~tol` when it only
/// holds up to the tolerance rather than exactly.
pub fn connectedness_criteria(gens: &GeneratorSet) -> Vec<CriterionReport> {
    let cover = check_interval_cover(gens);
    let (alpha, beta) = (cover.alpha, cover.beta);
    let quadratic = check_all_quadratic(gens);
    let residual = equal_normalized_residual(gens);
    let equal = residual <= EQUAL_NORMALIZED_TOL;
    vec![
        cover,
        CriterionReport {
            alpha,
            beta,
            covered: quadratic,
            gap_witness: None,
            criterion_name: "all_quadratic".to_string(),
        },
        CriterionReport {
            alpha,
            beta,
            covered: equal,
            gap_witness: None,
            criterion_name: if equal && !residual.is_zero() {
                "equal_normalized~tol".to_string()
            } else {
                "equal_normalized".to_string()
            },
        },
    ]
}

/// Fixed points of `Ψ(h_j)` in generator order.
pub fn fixed_points(gens: &GeneratorSet) -> Vec<f64> {
    gens.generators()
        .iter()
        .map(|g| psi_generator(g).fixed_point().unwrap_or(f64::NAN))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn poly(coeffs: &[f64]) -> Polynomial {
        Polynomial::from_real(coeffs).unwrap()
    }

    fn set(polys: Vec<Polynomial>) -> GeneratorSet {
        GeneratorSet::from_polynomials(polys).unwrap()
    }

    fn sy() -> GeneratorSet {
        set(vec![poly(&[0.0, 0.0, 0.0, 1.0]), poly(&[0.0, 0.0, 0.25])])
    }

    const LOG4: f64 = std::f64::consts::LN_2 * 2.0;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&poly(&[0.0, 0.0, 0.0, 1.0])), AffineMap { slope: 3.0, intercept: 0.0 });
        let q = psi(&poly(&[0.0, 0.0, 0.25]));
        assert_eq!(q.slope, 2.0);
        assert!((q.intercept + 1.3862943611198906).abs() < 1e-15);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(&poly(&[-1.0, 0.0, 1.0])), poly(&[0.0, 0.0, 1.0]));
        assert_eq!(theta(&poly(&[0.0, 0.0, 0.25])), poly(&[0.0, 0.0, 0.25]));
        assert_eq!(theta(&poly(&[0.0, 1.0, 0.0, 0.0, 3.0])), poly(&[0.0, 0.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(psi(&poly(&[0.0, 0.0, 0.0, 1.0])).fixed_point().unwrap(), 0.0);
        assert!((psi(&poly(&[0.0, 0.0, 0.25])).fixed_point().unwrap() - LOG4).abs() < 1e-15);
        let g = Polynomial::centered_power(Complex64::new(0.5, 0.0), Complex64::new(0.2, 0.0), 3).unwrap();
        assert!((psi(&g).fixed_point().unwrap() - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert_eq!(AffineMap::new(1.0, 2.0).unwrap().fixed_point(), Err(AffineError::SlopeOne));
        assert_eq!(AffineMap::new(0.0, 2.0), Err(AffineError::ZeroSlope));
    }

    #[test]
    fn m_set_sy_depth_one_has_a_gap() {
        let cover = m_set(&sy(), 1).unwrap();
        assert_eq!(cover.count(), 2);
        let [a, b] = cover.intervals[0];
        let [c, d] = cover.intervals[1];
        assert!(a.abs() < 1e-15 && (b - LOG4 / 3.0).abs() < 1e-12);
        assert!((c - LOG4 / 2.0).abs() < 1e-12 && (d - LOG4).abs() < 1e-12);
        // depth-k count is 2^k for this Cantor set
        for k in 0..8 {
            assert_eq!(m_set(&sy(), k).unwrap().count(), 1 << k);
        }
    }

    #[test]
    fn m_set_connected_pair() {
        let g = set(vec![poly(&[0.0, 0.0, 1.0]), poly(&[0.0, 0.0, 2.0])]);
        for k in 0..6 {
            let cover = m_set(&g, k).unwrap();
            assert_eq!(cover.count(), 1);
            assert!((cover.intervals[0][0] + std::f64::consts::LN_2).abs() < 1e-12);
            assert!(cover.intervals[0][1].abs() < 1e-12);
        }
        assert_eq!(component_count_upper_bound(&g, 4).unwrap(), CountBound::Finite(1));
    }

    #[test]
    fn single_generator_m_set_is_a_point() {
        let g = set(vec![poly(&[0.0, 0.0, 0.25])]);
        let cover = m_set(&g, 5).unwrap();
        assert_eq!(cover.count(), 1);
        assert!(cover.total_length() < 1e-12);
        assert_eq!(component_count_upper_bound(&g, 5).unwrap(), CountBound::Finite(1));
    }

    #[test]
    fn sy_count_keeps_growing() {
        assert_eq!(component_count_upper_bound(&sy(), 6).unwrap(), CountBound::AtLeast(64));
    }

    #[test]
    fn interval_cover_examples() {
        let g = set(vec![poly(&[0.0, 0.0, 2.0]), poly(&[0.0, 0.0, 1.0])]);
        let r = check_interval_cover(&g);
        assert!(r.covered);
        assert!((r.alpha + std::f64::consts::LN_2).abs() < 1e-15 && r.beta == 0.0);

        let r = check_interval_cover(&sy());
        assert!(!r.covered);
        assert_eq!(r.alpha, 0.0);
        assert!((r.beta - LOG4).abs() < 1e-15);
        let w = r.gap_witness.unwrap();
        assert!(LOG4 / 3.0 < w && w < LOG4 / 2.0);

        let single = set(vec![poly(&[0.3, 0.0, 0.7])]);
        let r = check_interval_cover(&single);
        assert!(r.covered && r.alpha == r.beta);
    }

    #[test]
    fn quadratic_and_normalized_examples() {
        assert!(check_all_quadratic(&set(vec![poly(&[-1.0, 0.0, 1.0]), poly(&[0.0, 0.0, 0.25])])));
        assert!(!check_all_quadratic(&sy()));
        assert!(check_equal_normalized(&set(vec![poly(&[0.0, 0.0, 1.0]), poly(&[0.0, 0.0, 0.0, 1.0])]), 1e-12));
        assert!(check_equal_normalized(
            &set(vec![poly(&[0.0, 0.0, 0.25]), poly(&[0.0, 0.0, 0.0, 1.0 / 16.0])]),
            1e-12
        ));
        assert!(!check_equal_normalized(&sy(), 1e-12));
    }

    #[test]
    fn interval_set_merges_and_queries() {
        let s = IntervalSet::from_intervals(vec![[2.0, 3.0], [0.0, 1.0], [1.0 + 1e-13, 1.5]]);
        assert_eq!(s.intervals, vec![[0.0, 1.5], [2.0, 3.0]]);
        assert!(s.contains(1.2) && !s.contains(1.7) && s.contains(3.0));
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["contains_plus_infinity"], false);
        assert_eq!(json["intervals"][1][0], 2.0);
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        (2usize..=4, prop::collection::vec(-1.0..1.0f64, 5), 0.2..3.0f64).prop_map(|(d, c, lead)| {
            let mut coeffs: Vec<f64> = c[..d].to_vec();
            coeffs.push(lead);
            poly(&coeffs)
        })
    }

    proptest! {
        #[test]
        fn psi_is_a_homomorphism(p in arb_poly(), q in arb_poly()) {
            let pq = p.compose(&q).unwrap();
            let lhs = psi(&pq);
            let rhs = psi(&p).compose(&psi(&q));
            prop_assert_eq!(lhs.slope, rhs.slope);
            prop_assert!((lhs.intercept - rhs.intercept).abs() < 1e-12);
        }

        #[test]
        fn psi_fixed_point_formula(p in arb_poly()) {
            let expected = -p.leading().norm().ln() / (p.degree() as f64 - 1.0);
            prop_assert!((psi(&p).fixed_point().unwrap() - expected).abs() < 1e-12);
        }

        #[test]
        fn m_set_refinement_is_monotone(a in 0.05..4.0f64, b in 0.05..4.0f64, d1 in 2usize..4, d2 in 2usize..4) {
            let mut c1 = vec![0.0; d1]; c1.push(a);
            let mut c2 = vec![0.0; d2]; c2.push(b);
            let g = set(vec![poly(&c1), poly(&c2)]);
            let layers = m_set_layers(&g, 6).unwrap();
            for w in layers.windows(2) {
                prop_assert!(w[1].is_subset_of(&w[0]));
                prop_assert!(w[1].count() >= w[0].count());
            }
        }

        #[test]
        fn interval_cover_implies_single_component(a in 0.1..3.0f64, b in 0.1..3.0f64, c in 0.1..3.0f64) {
            let g = set(vec![poly(&[0.0, 0.0, a]), poly(&[0.0, 0.0, b]), poly(&[0.0, 0.0, c])]);
            let r = check_interval_cover(&g);
            prop_assert!(r.covered);
            prop_assert_eq!(component_count_upper_bound(&g, 8).unwrap(), CountBound::Finite(1));
        }
    }
}
