//! Finite generator sets and the postcritical boundedness procedure.
//!
//! Words follow the composition convention `h_w = h_{w_k} ∘ ... ∘ h_{w_1}`:
//! the first index of a word is applied first. Word indices are 1-based.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{is_escaped, merge_points, PolyError, Polynomial, DEFAULT_MAX_DEGREE, TOL_MERGE};

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error("a generator set needs at least one generator")]
    Empty,
    #[error("generator {index} has degree {degree}; every generator needs degree at least two")]
    DegreeTooLow { index: usize, degree: usize },
    #[error("iterate count must be at least one")]
    ZeroIterations,
    #[error("word index {index} outside 1..={m}")]
    InvalidWord { index: usize, m: usize },
    #[error("empty word")]
    EmptyWord,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid generator document: {0}")]
    Json(#[from] serde_json::Error),
}

/// One generator of a semigroup: an `l`-fold iterate of a base polynomial.
///
/// Plain polynomials have `iterations == 1`. Iterates are evaluated
/// pointwise through the base map; an explicit coefficient form is kept only
/// when its degree fits the composition cap.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    base: Polynomial,
    iterations: u32,
    expanded: Option<Polynomial>,
}

impl Generator {
    pub fn new(p: Polynomial) -> Self {
        Self {
            expanded: Some(p.clone()),
            base: p,
            iterations: 1,
        }
    }

    pub fn iterate(base: Polynomial, iterations: u32) -> Result<Self, SemigroupError> {
        if iterations == 0 {
            return Err(SemigroupError::ZeroIterations);
        }
        let degree = (base.degree() as f64).powi(iterations as i32);
        let mut expanded = Some(base.clone());
        if degree > DEFAULT_MAX_DEGREE as f64 {
            expanded = None;
        } else {
            for _ in 1..iterations {
                expanded = expanded.and_then(|acc| base.compose(&acc).ok());
            }
        }
        Ok(Self {
            base,
            iterations,
            expanded,
        })
    }

    pub fn base(&self) -> &Polynomial {
        &self.base
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Explicit coefficient form, if it fits under the composition caps.
    pub fn polynomial(&self) -> Option<&Polynomial> {
        self.expanded.as_ref()
    }

    pub fn degree(&self) -> u64 {
        (self.base.degree() as u64).pow(self.iterations)
    }

    /// `log |a(h)|` computed in closed form from the base map.
    pub fn log_abs_leading(&self) -> f64 {
        let d = self.base.degree() as f64;
        let l = self.iterations as i32;
        let factor = if self.base.degree() == 1 {
            self.iterations as f64
        } else {
            (d.powi(l) - 1.0) / (d - 1.0)
        };
        self.base.leading().norm().ln() * factor
    }

    #[inline]
    pub fn eval(&self, mut z: Complex64) -> Complex64 {
        for _ in 0..self.iterations {
            z = self.base.eval(z);
        }
        z
    }

    /// Value and derivative by the chain rule.
    pub fn eval_with_derivative(&self, mut z: Complex64) -> (Complex64, Complex64) {
        let mut deriv = Complex64::new(1.0, 0.0);
        for _ in 0..self.iterations {
            let (v, dv) = self.base.eval_with_derivative(z);
            deriv *= dv;
            z = v;
        }
        (z, deriv)
    }

    /// All `deg(h)` preimages of `w`.
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>, PolyError> {
        let mut layer = vec![w];
        for _ in 0..self.iterations {
            let mut next = Vec::with_capacity(layer.len() * self.base.degree());
            for v in layer {
                next.extend(self.base.preimages(v)?);
            }
            layer = next;
        }
        Ok(layer)
    }

    /// One preimage of `w`, choosing a uniformly random branch at every
    /// stage; uniform over all `deg(h)` branches.
    pub fn random_preimage<R: Rng + ?Sized>(
        &self,
        w: Complex64,
        rng: &mut R,
    ) -> Result<Complex64, PolyError> {
        let mut v = w;
        for _ in 0..self.iterations {
            let pre = self.base.preimages(v)?;
            v = pre[rng.gen_range(0..pre.len())];
        }
        Ok(v)
    }

    /// Finite critical values. For an `l`-fold iterate these are
    /// `h^k(v)` for the base critical values `v` and `k < l`.
    pub fn critical_values(&self) -> Result<Vec<Complex64>, PolyError> {
        let base_values = self.base.critical_values()?;
        let mut out = Vec::new();
        for v in base_values {
            let mut z = v;
            for _ in 0..self.iterations {
                out.push(z);
                z = self.base.eval(z);
            }
        }
        Ok(merge_points(out, TOL_MERGE))
    }

    /// Fixed points of the base map whose multiplier under this generator
    /// has modulus greater than one.
    pub fn repelling_fixed_points(&self) -> Result<Vec<Complex64>, PolyError> {
        Ok(self
            .base
            .fixed_points()?
            .into_iter()
            .filter(|&z| self.eval_with_derivative(z).1.norm() > 1.0 + 1e-9)
            .collect())
    }

    /// Radius `R` with `|z| > R ⇒ |h(z)| > 2|z|`.
    pub fn escape_radius(&self) -> f64 {
        // iterates inherit the base radius: each base step doubles the modulus
        polynomial_escape_radius(self.expanded.as_ref().unwrap_or(&self.base))
    }
}

/// Per-polynomial escape radius: `2 · max(1, (2 + Σ_{i<d}|c_i|)/|c_d|)^{1/(d-1)}`,
/// enlarged when that value does not satisfy `|z| > R ⇒ |p(z)| > 2|z|`.
pub fn polynomial_escape_radius(p: &Polynomial) -> f64 {
    let d = p.degree();
    let coeffs = p.coefficients();
    let lead = p.leading().norm();
    let lower: f64 = coeffs[..d].iter().map(|c| c.norm()).sum();
    let base = ((2.0 + lower) / lead).max(1.0);
    let mut r = 2.0 * base.powf(1.0 / (d as f64 - 1.0).max(1.0));
    // |c_d| t^d - Σ|c_i| t^i - 2t has exactly one positive root (one sign
    // change), so positivity at r certifies every t > r.
    let margin = |t: f64| {
        let mut s = lead;
        for (i, c) in coeffs[..d].iter().enumerate() {
            s -= c.norm() * t.powi(i as i32 - d as i32);
        }
        s - 2.0 * t.powi(1 - d as i32)
    };
    while margin(r) <= 0.0 {
        r *= 2.0;
    }
    r
}

/// An ordered finite family `Γ = (h_1, ..., h_m)` of maps of degree ≥ 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorDocument", into = "GeneratorDocument")]
pub struct GeneratorSet {
    generators: Vec<Generator>,
}

/// A generator entry: plain coefficients, or a base map with an iteration
/// count.
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum GeneratorEntry {
    Plain(Polynomial),
    Iterate { base: Polynomial, iterations: u32 },
}

#[derive(Clone, Serialize, Deserialize)]
struct GeneratorDocument {
    generators: Vec<GeneratorEntry>,
}

impl TryFrom<GeneratorDocument> for GeneratorSet {
    type Error = SemigroupError;

    fn try_from(doc: GeneratorDocument) -> Result<Self, Self::Error> {
        let gens = doc
            .generators
            .into_iter()
            .map(|e| match e {
                GeneratorEntry::Plain(p) => Ok(Generator::new(p)),
                GeneratorEntry::Iterate { base, iterations } => Generator::iterate(base, iterations),
            })
            .collect::<Result<Vec<_>, _>>()?;
        GeneratorSet::new(gens)
    }
}

impl From<GeneratorSet> for GeneratorDocument {
    fn from(set: GeneratorSet) -> Self {
        let generators = set
            .generators
            .into_iter()
            .map(|g| {
                if g.iterations == 1 {
                    GeneratorEntry::Plain(g.base)
                } else {
                    GeneratorEntry::Iterate {
                        base: g.base,
                        iterations: g.iterations,
                    }
                }
            })
            .collect();
        GeneratorDocument { generators }
    }
}

impl GeneratorSet {
    pub fn new(generators: Vec<Generator>) -> Result<Self, SemigroupError> {
        if generators.is_empty() {
            return Err(SemigroupError::Empty);
        }
        for (i, g) in generators.iter().enumerate() {
            if g.degree() < 2 {
                return Err(SemigroupError::DegreeTooLow {
                    index: i + 1,
                    degree: g.degree() as usize,
                });
            }
        }
        Ok(Self { generators })
    }

    pub fn from_polynomials(polys: Vec<Polynomial>) -> Result<Self, SemigroupError> {
        Self::new(polys.into_iter().map(Generator::new).collect())
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `h_i` with a 1-based index.
    pub fn get(&self, index: usize) -> Option<&Generator> {
        index.checked_sub(1).and_then(|i| self.generators.get(i))
    }

    /// A new set with `extra` appended.
    pub fn with(&self, extra: Generator) -> Result<Self, SemigroupError> {
        let mut generators = self.generators.clone();
        generators.push(extra);
        Self::new(generators)
    }

    /// Parses `{ "generators": [ entry, ... ] }` where an entry is an
    /// ascending coefficient list `[[re, im], ...]` or
    /// `{ "base": [[re, im], ...], "iterations": l }`.
    pub fn from_json(text: &str) -> Result<Self, SemigroupError> {
        let doc: GeneratorDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> Result<String, SemigroupError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Maximum of the per-generator escape radii.
    pub fn escape_radius(&self) -> f64 {
        self.generators
            .iter()
            .map(Generator::escape_radius)
            .fold(0.0, f64::max)
    }

    /// `h_w(z)` by sequential evaluation.
    pub fn evaluate_word(&self, word: &Word, z: Complex64) -> Result<Complex64, SemigroupError> {
        word.validate(self.len())?;
        Ok(word
            .indices()
            .iter()
            .fold(z, |acc, &i| self.generators[i - 1].eval(acc)))
    }

    /// Union of the finite critical values of all generators.
    pub fn critical_values(&self) -> Result<Vec<Complex64>, PolyError> {
        let mut all = Vec::new();
        for g in &self.generators {
            all.extend(g.critical_values()?);
        }
        Ok(merge_points(all, TOL_MERGE))
    }

    /// Every word of length `1..=max_len`, shortest first, in lexicographic
    /// order within each length.
    pub fn words(&self, max_len: usize) -> Vec<Word> {
        let m = self.len();
        let mut out = Vec::new();
        let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * m);
            for w in &layer {
                for i in 1..=m {
                    let mut v = w.clone();
                    v.push(i);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned().map(Word));
            layer = next;
        }
        out
    }
}

/// A finite word `(w_1, ..., w_k)` of 1-based generator indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(indices: Vec<usize>) -> Result<Self, SemigroupError> {
        if indices.is_empty() {
            return Err(SemigroupError::EmptyWord);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0) {
            return Err(SemigroupError::InvalidWord { index: bad, m: 0 });
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn validate(&self, m: usize) -> Result<(), SemigroupError> {
        match self.0.iter().find(|&&i| i == 0 || i > m) {
            Some(&index) => Err(SemigroupError::InvalidWord { index, m }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcbVerdict {
    Bounded,
    Escaped,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tri {
    Yes,
    No,
    Undecided,
}

impl From<PcbVerdict> for Tri {
    fn from(v: PcbVerdict) -> Self {
        match v {
            PcbVerdict::Bounded => Tri::Yes,
            PcbVerdict::Escaped => Tri::No,
            PcbVerdict::Undecided => Tri::Undecided,
        }
    }
}

/// How a verdict was certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcbCertificate {
    /// The orbit closed up: no new dedup cell appeared at the last depth.
    FiniteClosure,
    /// A disk containing the orbit mapped into itself by every generator.
    TrappingDisk,
    /// An explicit word pushing a critical value beyond the escape radius.
    EscapeWitness,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcbReport {
    pub verdict: PcbVerdict,
    pub certificate: PcbCertificate,
    pub witness_word: Option<Word>,
    pub witness_value: Option<Complex64>,
    /// Critical value the witness word starts from.
    pub witness_start: Option<Complex64>,
    pub escape_radius: f64,
    pub max_modulus_seen: f64,
    pub depth_reached: usize,
    pub points: usize,
    pub trapping_disk: Option<Disk>,
}

/// Exploration budget of [`postcritical_orbit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_depth: usize,
    pub max_points: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_depth: 30,
            max_points: 2_000_000,
        }
    }
}

/// Dedup cell size of the orbit hash grid.
pub const TOL_DEDUP: f64 = 1e-6;

/// Boundary samples per generator when verifying a trapping disk.
pub const DISK_SAMPLES: usize = 256;

struct Node {
    z: Complex64,
    parent: u32,
    generator: u32,
    start: u32,
}

const NO_PARENT: u32 = u32::MAX;

struct DedupGrid {
    cells: HashMap<(i64, i64), Vec<u32>>,
    tol: f64,
}

impl DedupGrid {
    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.tol).floor() as i64, (z.im / self.tol).floor() as i64)
    }

    fn contains_near(&self, z: Complex64, nodes: &[Node]) -> bool {
        let (kx, ky) = self.key(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    if ids.iter().any(|&id| (nodes[id as usize].z - z).norm() <= self.tol) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn insert(&mut self, z: Complex64, id: u32) {
        let key = self.key(z);
        self.cells.entry(key).or_default().push(id);
    }
}

fn word_of(nodes: &[Node], mut id: u32) -> (Word, Complex64) {
    let mut indices = Vec::new();
    let start = nodes[id as usize].start;
    while nodes[id as usize].parent != NO_PARENT {
        indices.push(nodes[id as usize].generator as usize + 1);
        id = nodes[id as usize].parent;
    }
    indices.reverse();
    (Word(indices), nodes[start as usize].z)
}

/// Checks `h(D) ⊂ D` for every generator by sampling the boundary circle.
/// By the maximum modulus principle applied to `h(z) - center`, the
/// boundary carries the extreme values.
pub fn verify_trapping_disk(gens: &GeneratorSet, disk: Disk) -> bool {
    if !(disk.radius > 0.0) {
        return false;
    }
    gens.generators().iter().all(|h| {
        (0..DISK_SAMPLES).all(|k| {
            let p = disk.center + Complex64::from_polar(disk.radius, TAU * k as f64 / DISK_SAMPLES as f64);
            (h.eval(p) - disk.center).norm() <= disk.radius
        })
    })
}

fn trapping_disk_of(points: &[Complex64]) -> Disk {
    let n = points.len().max(1) as f64;
    let center = points.iter().sum::<Complex64>() / n;
    let spread = points
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    Disk {
        center,
        radius: 1.05 * spread,
    }
}

/// Breadth-first forward orbit of the critical values under all generators,
/// deduplicated on a [`TOL_DEDUP`] hash grid.
pub fn postcritical_orbit(
    gens: &GeneratorSet,
    budget: Budget,
) -> Result<(Vec<Complex64>, PcbReport), PolyError> {
    let radius = gens.escape_radius();
    let mut grid = DedupGrid {
        cells: HashMap::new(),
        tol: TOL_DEDUP,
    };
    let mut nodes: Vec<Node> = Vec::new();
    let mut frontier: Vec<u32> = Vec::new();
    let mut max_modulus: f64 = 0.0;
    for v in gens.critical_values()? {
        if grid.contains_near(v, &nodes) {
            continue;
        }
        let id = nodes.len() as u32;
        nodes.push(Node {
            z: v,
            parent: NO_PARENT,
            generator: 0,
            start: id,
        });
        grid.insert(v, id);
        frontier.push(id);
        max_modulus = max_modulus.max(v.norm());
    }

    let mut report = PcbReport {
        verdict: PcbVerdict::Undecided,
        certificate: PcbCertificate::None,
        witness_word: None,
        witness_value: None,
        witness_start: None,
        escape_radius: radius,
        max_modulus_seen: max_modulus,
        depth_reached: 0,
        points: nodes.len(),
        trapping_disk: None,
    };

    let mut closed = false;
    for depth in 1..=budget.max_depth {
        report.depth_reached = depth;
        let images: Vec<(u32, u32, Complex64)> = frontier
            .par_iter()
            .flat_map_iter(|&id| {
                let z = nodes[id as usize].z;
                gens.generators()
                    .iter()
                    .enumerate()
                    .map(move |(g, h)| (id, g as u32, h.eval(z)))
            })
            .collect();
        let mut next = Vec::new();
        for (parent, g, q) in images {
            let modulus = if is_escaped(q) { f64::INFINITY } else { q.norm() };
            if modulus > radius {
                let id = nodes.len() as u32;
                nodes.push(Node {
                    z: q,
                    parent,
                    generator: g,
                    start: nodes[parent as usize].start,
                });
                let (word, start) = word_of(&nodes, id);
                nodes.pop();
                report.verdict = PcbVerdict::Escaped;
                report.certificate = PcbCertificate::EscapeWitness;
                report.witness_word = Some(word);
                report.witness_value = Some(q);
                report.witness_start = Some(start);
                report.max_modulus_seen = max_modulus.max(q.norm());
                report.points = nodes.len();
                let cloud = nodes.iter().map(|n| n.z).collect();
                return Ok((cloud, report));
            }
            if grid.contains_near(q, &nodes) {
                continue;
            }
            let id = nodes.len() as u32;
            nodes.push(Node {
                z: q,
                parent,
                generator: g,
                start: nodes[parent as usize].start,
            });
            grid.insert(q, id);
            next.push(id);
            max_modulus = max_modulus.max(modulus);
        }
        frontier = next;
        if frontier.is_empty() {
            closed = true;
            break;
        }
        if nodes.len() >= budget.max_points {
            break;
        }
    }

    let cloud: Vec<Complex64> = nodes.iter().map(|n| n.z).collect();
    report.points = cloud.len();
    report.max_modulus_seen = max_modulus;
    if closed {
        report.verdict = PcbVerdict::Bounded;
        report.certificate = PcbCertificate::FiniteClosure;
    } else {
        let disk = trapping_disk_of(&cloud);
        if verify_trapping_disk(gens, disk) {
            report.verdict = PcbVerdict::Bounded;
            report.certificate = PcbCertificate::TrappingDisk;
            report.trapping_disk = Some(disk);
        }
    }
    Ok((cloud, report))
}

pub fn is_postcritically_bounded(gens: &GeneratorSet, budget: Budget) -> Result<Tri, PolyError> {
    let (_, report) = postcritical_orbit(gens, budget)?;
    Ok(report.verdict.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[f64]) -> Polynomial {
        Polynomial::from_real(coeffs).unwrap()
    }

    fn sy() -> GeneratorSet {
        GeneratorSet::from_polynomials(vec![poly(&[0.0, 0.0, 0.0, 1.0]), poly(&[0.0, 0.0, 0.25])]).unwrap()
    }

    #[test]
    fn rejects_low_degree_and_empty() {
        assert!(matches!(GeneratorSet::new(vec![]), Err(SemigroupError::Empty)));
        assert!(matches!(
            GeneratorSet::from_polynomials(vec![poly(&[0.0, 1.0])]),
            Err(SemigroupError::DegreeTooLow { index: 1, degree: 1 })
        ));
    }

    #[test]
    fn evaluate_word_examples() {
        let g = sy();
        let w = Word::new(vec![2, 1]).unwrap();
        assert_eq!(g.evaluate_word(&w, c(2.0, 0.0)).unwrap(), c(1.0, 0.0));
        let w = Word::new(vec![1]).unwrap();
        assert_eq!(g.evaluate_word(&w, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let cube = GeneratorSet::from_polynomials(vec![poly(&[0.0, 0.0, 0.0, 1.0])]).unwrap();
        let w = Word::new(vec![1, 1, 1]).unwrap();
        assert_eq!(cube.evaluate_word(&w, c(2.0, 0.0)).unwrap(), c(2f64.powi(27), 0.0));
        assert!(matches!(
            cube.evaluate_word(&Word::new(vec![2]).unwrap(), c(0.0, 0.0)),
            Err(SemigroupError::InvalidWord { index: 2, m: 1 })
        ));
        assert!(Word::new(vec![]).is_err());
    }

    #[test]
    fn escape_radius_examples() {
        let sq = GeneratorSet::from_polynomials(vec![poly(&[0.0, 0.0, 1.0])]).unwrap();
        let r = sq.escape_radius();
        assert!(r <= 4.0);
        for k in 0..64 {
            let z = Complex64::from_polar(r * (1.0 + 1e-9), TAU * k as f64 / 64.0);
            assert!(z.norm_sqr() > 2.0 * z.norm());
        }
        let r = sy().escape_radius();
        assert!(r >= 8.0);
        let z = c(r * 1.000001, 0.0);
        assert!((z * z / 4.0).norm() > 2.0 * z.norm());
        // adding a generator never decreases the radius
        let bigger = sq.with(Generator::new(poly(&[0.0, 0.0, 0.25]))).unwrap();
        assert!(bigger.escape_radius() >= sq.escape_radius());
    }

    #[test]
    fn escape_radius_enlarges_invalid_formula_values() {
        // large lower coefficients make the closed-form radius too small for d > 2
        let p = poly(&[0.0, 0.0, 100.0, 1.0]);
        let r = polynomial_escape_radius(&p);
        for t in [r * 1.0001, r * 2.0, r * 10.0] {
            for k in 0..32 {
                let z = Complex64::from_polar(t, TAU * k as f64 / 32.0);
                assert!(p.eval(z).norm() > 2.0 * z.norm());
            }
        }
    }

    #[test]
    fn iterate_generator_matches_composition() {
        let base = poly(&[-1.0, 0.0, 1.0]);
        let g = Generator::iterate(base.clone(), 3).unwrap();
        assert_eq!(g.degree(), 8);
        let explicit = base.compose(&base).unwrap().compose(&base).unwrap();
        let z = c(0.3, 0.7);
        assert!((g.eval(z) - explicit.eval(z)).norm() < 1e-12);
        assert!((g.log_abs_leading() - explicit.leading().norm().ln()).abs() < 1e-12);
        let pre = g.preimages(c(0.2, 0.1)).unwrap();
        assert_eq!(pre.len(), 8);
        for p in pre {
            assert!((g.eval(p) - c(0.2, 0.1)).norm() < 1e-9);
        }
        let half = Generator::iterate(poly(&[0.0, 0.0, 0.5]), 4).unwrap();
        // leading coefficient (1/2)^(2^4 - 1)
        assert!((half.log_abs_leading() - 15.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn iterate_critical_values_are_forward_images() {
        let base = poly(&[-1.0, 0.0, 1.0]);
        let g = Generator::iterate(base.clone(), 2).unwrap();
        let mut cv = g.critical_values().unwrap();
        cv.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let explicit = base.compose(&base).unwrap().critical_values().unwrap();
        assert_eq!(cv.len(), explicit.len());
        for v in explicit {
            assert!(cv.iter().any(|w| (w - v).norm() < 1e-9));
        }
    }

    #[test]
    fn sy_orbit_is_the_origin() {
        let (cloud, report) = postcritical_orbit(&sy(), Budget::default()).unwrap();
        assert_eq!(cloud, vec![c(0.0, 0.0)]);
        assert_eq!(report.verdict, PcbVerdict::Bounded);
        assert_eq!(report.certificate, PcbCertificate::FiniteClosure);
        assert_eq!(is_postcritically_bounded(&sy(), Budget::default()).unwrap(), Tri::Yes);
    }

    #[test]
    fn escaping_critical_value_gives_witness() {
        let g = GeneratorSet::from_polynomials(vec![poly(&[10.0, 0.0, 1.0])]).unwrap();
        let (_, report) = postcritical_orbit(&g, Budget::default()).unwrap();
        assert_eq!(report.verdict, PcbVerdict::Escaped);
        let word = report.witness_word.clone().unwrap();
        assert_eq!(word.indices(), &[1]);
        let start = report.witness_start.unwrap();
        assert_eq!(start, c(10.0, 0.0));
        let replay = g.evaluate_word(&word, start).unwrap();
        assert!(replay.norm() > report.escape_radius);
        assert_eq!(report.witness_value, Some(replay));
        assert_eq!(is_postcritically_bounded(&g, Budget::default()).unwrap(), Tri::No);
    }

    #[test]
    fn basilica_and_quarter_square_are_bounded() {
        let g = GeneratorSet::from_polynomials(vec![poly(&[-1.0, 0.0, 1.0]), poly(&[0.0, 0.0, 0.25])]).unwrap();
        let (cloud, report) = postcritical_orbit(&g, Budget::default()).unwrap();
        assert_eq!(report.verdict, PcbVerdict::Bounded, "{report:?}");
        for v in [c(-1.0, 0.0), c(0.0, 0.0), c(0.25, 0.0), c(-15.0 / 16.0, 0.0)] {
            assert!(cloud.iter().any(|z| (z - v).norm() < 1e-6));
        }
        assert!(cloud.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        // the cloud is forward invariant up to the dedup tolerance
        for z in &cloud {
            for h in g.generators() {
                let q = h.eval(*z);
                assert!(cloud.iter().any(|p| (p - q).norm() <= 2.0 * TOL_DEDUP));
            }
        }
    }

    #[test]
    fn trapping_disk_is_forward_invariant_when_reported() {
        // random-ish contracting quadratics whose orbit does not close up
        let g = GeneratorSet::from_polynomials(vec![
            Polynomial::new(vec![c(0.05, 0.02), c(0.0, 0.0), c(0.6, 0.3)]).unwrap(),
            Polynomial::new(vec![c(-0.04, 0.03), c(0.0, 0.0), c(-0.5, 0.4)]).unwrap(),
        ])
        .unwrap();
        let budget = Budget { max_depth: 30, max_points: 20_000 };
        let (_, report) = postcritical_orbit(&g, budget).unwrap();
        assert_eq!(report.verdict, PcbVerdict::Bounded);
        if let Some(disk) = report.trapping_disk {
            assert!(verify_trapping_disk(&g, disk));
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{ "generators": [ [[0,0],[0,0],[0,0],[1,0]], [[0,0],[0,0],[0.25,0]] ] }"#;
        let g = GeneratorSet::from_json(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.generators()[1].base(), &poly(&[0.0, 0.0, 0.25]));
        let again = GeneratorSet::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(again.generators()[0].base(), g.generators()[0].base());
        assert!(GeneratorSet::from_json(r#"{ "generators": [ [[1,0],[1,0]] ] }"#).is_err());
    }

    #[test]
    fn json_iterate_entries() {
        let text = r#"{ "generators": [ { "base": [[0,0],[0,0],[1,0]], "iterations": 13 }, [[0,0],[0,0],[0.5,0]] ] }"#;
        let g = GeneratorSet::from_json(text).unwrap();
        assert_eq!(g.generators()[0].degree(), 1 << 13);
        assert!(g.generators()[0].polynomial().is_none());
        assert_eq!(GeneratorSet::from_json(&g.to_json().unwrap()).unwrap(), g);
        let zero = r#"{ "generators": [ { "base": [[0,0],[0,0],[1,0]], "iterations": 0 } ] }"#;
        assert!(GeneratorSet::from_json(zero).is_err());
    }

    #[test]
    fn word_enumeration_counts() {
        let words = sy().words(3);
        assert_eq!(words.len(), 2 + 4 + 8);
        assert_eq!(words[0].indices(), &[1]);
        assert_eq!(words[2].indices(), &[1, 1]);
    }
}
