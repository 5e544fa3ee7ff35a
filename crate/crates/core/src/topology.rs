//! Connected components of Julia rasters and the surrounding order.
//!
//! Julia cells are joined with 8-connectivity, complements are flooded with
//! 4-connectivity. Component `i` is `Less` than `j` when `i` lies in a
//! bounded complementary region of `j`, i.e. `j` surrounds `i`.

use std::collections::{BTreeSet, VecDeque};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::PolyError;
use crate::raster::{single_julia_raster, CellState, Frame, Grid};
use crate::semigroup::{Generator, GeneratorSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("surrounding order is not total: components {0} and {1} are incomparable")]
    NotTotal(usize, usize),
    #[error("no components in the raster")]
    Empty,
    #[error("J(h_{generator}) straddles components: best containment {best_fraction:.3}")]
    AmbiguousContainment { generator: usize, best_fraction: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Components smaller than this are noise.
pub const MIN_CELLS: usize = 4;
/// Fraction of a generator's Julia raster that must lie near one component.
pub const CONTAINMENT: f64 = 0.95;
/// Label of cells outside every component.
pub const UNLABELED: u32 = u32::MAX;
/// Label of Boundary cells in discarded small components.
pub const NOISE: u32 = u32::MAX - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Less,
    Greater,
    Equal,
    Incomparable,
}

impl Relation {
    pub fn flip(self) -> Self {
        match self {
            Relation::Less => Relation::Greater,
            Relation::Greater => Relation::Less,
            r => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub cells: usize,
    /// `[x_min, y_min, x_max, y_max]` in cell coordinates.
    pub bbox: [usize; 4],
    /// Range of `|z - box centre|` over the component's cell centres.
    pub radius_range: [f64; 2],
    /// First cell in raster order.
    pub representative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSet {
    pub labels: Vec<u32>,
    pub count: usize,
    pub components: Vec<ComponentInfo>,
    /// `order_matrix[i][j]` is the relation of component `i` to `j`.
    pub order_matrix: Vec<Vec<Relation>>,
    pub noise_cells: usize,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Union-find labelling of Boundary cells with 8-connectivity; components
/// below `min_cells` become [`NOISE`].
pub fn label_components_with(grid: &Grid, min_cells: usize) -> ComponentSet {
    let f = grid.frame;
    let n = f.resolution;
    let on = |i: usize| grid.cells[i] == CellState::Boundary;
    let mut parent: Vec<u32> = (0..(n * n) as u32).collect();
    for y in 0..n {
        for x in 0..n {
            let i = y * n + x;
            if !on(i) {
                continue;
            }
            // already-visited neighbours: W, NW, N, NE
            if x > 0 && on(i - 1) {
                union(&mut parent, i as u32, (i - 1) as u32);
            }
            if y > 0 {
                if on(i - n) {
                    union(&mut parent, i as u32, (i - n) as u32);
                }
                if x > 0 && on(i - n - 1) {
                    union(&mut parent, i as u32, (i - n - 1) as u32);
                }
                if x + 1 < n && on(i - n + 1) {
                    union(&mut parent, i as u32, (i - n + 1) as u32);
                }
            }
        }
    }
    let mut size = vec![0usize; n * n];
    for i in 0..n * n {
        if on(i) {
            let r = find(&mut parent, i as u32);
            size[r as usize] += 1;
        }
    }
    // roots are the smallest index of their class, so raster order is kept
    let mut id_of_root = vec![UNLABELED; n * n];
    let mut labels = vec![UNLABELED; n * n];
    let mut components: Vec<ComponentInfo> = Vec::new();
    let mut noise_cells = 0;
    let c = f.center;
    for i in 0..n * n {
        if !on(i) {
            continue;
        }
        let r = find(&mut parent, i as u32) as usize;
        if size[r] < min_cells {
            labels[i] = NOISE;
            noise_cells += 1;
            continue;
        }
        if id_of_root[r] == UNLABELED {
            id_of_root[r] = components.len() as u32;
            let (x, y) = f.xy(i);
            components.push(ComponentInfo {
                cells: 0,
                bbox: [x, y, x, y],
                radius_range: [f64::INFINITY, 0.0],
                representative: i,
            });
        }
        let id = id_of_root[r];
        labels[i] = id;
        let info = &mut components[id as usize];
        let (x, y) = f.xy(i);
        info.cells += 1;
        info.bbox = [info.bbox[0].min(x), info.bbox[1].min(y), info.bbox[2].max(x), info.bbox[3].max(y)];
        let rad = (f.cell_center(i) - c).norm();
        info.radius_range = [info.radius_range[0].min(rad), info.radius_range[1].max(rad)];
    }
    let count = components.len();
    let mut cs = ComponentSet {
        labels,
        count,
        components,
        order_matrix: Vec::new(),
        noise_cells,
    };
    cs.order_matrix = order_matrix(&cs, &f);
    cs
}

pub fn label_components(grid: &Grid) -> ComponentSet {
    label_components_with(grid, MIN_CELLS)
}

/// Cells reached from the frame by a 4-connected flood fill that avoids
/// component `j`.
fn outside_of(cs: &ComponentSet, frame: &Frame, j: usize) -> Vec<bool> {
    let n = frame.resolution;
    let blocked = |i: usize| cs.labels[i] == j as u32;
    let mut reached = vec![false; n * n];
    let mut queue = VecDeque::new();
    for k in 0..n {
        for i in [k, (n - 1) * n + k, k * n, k * n + n - 1] {
            if !blocked(i) && !reached[i] {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        for nb in frame.neighbors4(i) {
            if !reached[nb] && !blocked(nb) {
                reached[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    reached
}

fn order_matrix(cs: &ComponentSet, frame: &Frame) -> Vec<Vec<Relation>> {
    let k = cs.count;
    // inside[j][i]: component i is not reached when flooding around j
    let inside: Vec<Vec<bool>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let reached = outside_of(cs, frame, j);
            (0..k).map(|i| i != j && !reached[cs.components[i].representative]).collect()
        })
        .collect();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        Relation::Equal
                    } else if inside[j][i] {
                        Relation::Less
                    } else if inside[i][j] {
                        Relation::Greater
                    } else {
                        Relation::Incomparable
                    }
                })
                .collect()
        })
        .collect()
}

/// Relation of component `i` to component `j` by flood fill.
pub fn surrounds(cs: &ComponentSet, i: usize, j: usize, grid: &Grid) -> Relation {
    if i == j {
        return Relation::Equal;
    }
    let rep_i = cs.components[i].representative;
    let rep_j = cs.components[j].representative;
    if !outside_of(cs, &grid.frame, j)[rep_i] {
        Relation::Less
    } else if !outside_of(cs, &grid.frame, i)[rep_j] {
        Relation::Greater
    } else {
        Relation::Incomparable
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub incomparable_pairs: Vec<(usize, usize)>,
    pub antisymmetry_violations: Vec<(usize, usize)>,
    pub transitivity_violations: Vec<(usize, usize, usize)>,
    pub total: bool,
}

pub fn verify_total_order(cs: &ComponentSet, _grid: &Grid) -> OrderReport {
    let k = cs.count;
    let m = &cs.order_matrix;
    let mut report = OrderReport::default();
    for i in 0..k {
        for j in i + 1..k {
            if m[i][j] == Relation::Incomparable {
                report.incomparable_pairs.push((i, j));
            }
            if m[j][i] != m[i][j].flip() {
                report.antisymmetry_violations.push((i, j));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            if m[i][j] != Relation::Less {
                continue;
            }
            for l in 0..k {
                if m[j][l] == Relation::Less && m[i][l] != Relation::Less {
                    report.transitivity_violations.push((i, j, l));
                }
            }
        }
    }
    report.total = report.incomparable_pairs.is_empty()
        && report.antisymmetry_violations.is_empty()
        && report.transitivity_violations.is_empty();
    report
}

/// Components from innermost to outermost; requires a total order.
pub fn sorted_order(cs: &ComponentSet) -> Result<Vec<usize>, TopologyError> {
    if cs.count == 0 {
        return Err(TopologyError::Empty);
    }
    for i in 0..cs.count {
        for j in 0..cs.count {
            if cs.order_matrix[i][j] == Relation::Incomparable {
                return Err(TopologyError::NotTotal(i, j));
            }
        }
    }
    let mut ids: Vec<usize> = (0..cs.count).collect();
    // number of components surrounding each one
    let rank = |i: usize| cs.order_matrix[i].iter().filter(|&&r| r == Relation::Less).count();
    ids.sort_by_key(|&i| std::cmp::Reverse(rank(i)));
    Ok(ids)
}

/// `(j_min, j_max)` of the realized order.
pub fn find_extremes(cs: &ComponentSet, _grid: &Grid) -> Result<(usize, usize), TopologyError> {
    let order = sorted_order(cs)?;
    Ok((order[0], *order.last().expect("nonempty")))
}

/// Cell indices of each component.
pub fn component_cells(cs: &ComponentSet) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cs.count];
    for (i, &l) in cs.labels.iter().enumerate() {
        if (l as usize) < cs.count {
            out[l as usize].push(i);
        }
    }
    out
}

/// Distinct component labels within one cell (Chebyshev) of `idx`.
fn labels_near(cs: &ComponentSet, frame: &Frame, idx: usize) -> BTreeSet<u32> {
    std::iter::once(idx)
        .chain(frame.neighbors8(idx))
        .map(|j| cs.labels[j])
        .filter(|&l| (l as usize) < cs.count)
        .collect()
}

fn point_labels_near(cs: &ComponentSet, frame: &Frame, z: Complex64) -> BTreeSet<u32> {
    frame.locate(z).map(|i| labels_near(cs, frame, i)).unwrap_or_default()
}

/// Per-component fraction of the cells of `mask` lying within one cell of
/// that component.
fn containment_fractions(cs: &ComponentSet, frame: &Frame, mask: &[bool]) -> (usize, Vec<f64>) {
    let mut hits = vec![0usize; cs.count];
    let mut total = 0;
    for (i, &on) in mask.iter().enumerate() {
        if !on {
            continue;
        }
        total += 1;
        for l in labels_near(cs, frame, i) {
            hits[l as usize] += 1;
        }
    }
    let frac = hits.iter().map(|&h| if total == 0 { 0.0 } else { h as f64 / total as f64 }).collect();
    (total, frac)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    /// 1-based generator index.
    pub generator: usize,
    pub component: Option<usize>,
    pub fraction: f64,
}

/// The component containing `J(h)` for each generator, if any.
pub fn generator_carriers(gens: &GeneratorSet, cs: &ComponentSet, grid: &Grid) -> Vec<Carrier> {
    let r = gens.escape_radius();
    gens.generators()
        .iter()
        .enumerate()
        .map(|(g, h)| {
            let mask = single_julia_raster(h, grid.frame, r);
            let (_, frac) = containment_fractions(cs, &grid.frame, &mask);
            let best = (0..cs.count).max_by(|&a, &b| frac[a].total_cmp(&frac[b]));
            let fraction = best.map_or(0.0, |b| frac[b]);
            Carrier {
                generator: g + 1,
                component: best.filter(|_| fraction >= CONTAINMENT),
                fraction,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPartition {
    /// 1-based generator indices with `J(h) ⊂ J_min`.
    pub gamma_min: Vec<usize>,
    pub rest: Vec<usize>,
    /// Generators with `J(h) ⊂ J_max`.
    pub j_max_carriers: Vec<usize>,
    pub carriers: Vec<Carrier>,
    /// Both `gamma_min` and `j_max_carriers` are nonempty, or there is a
    /// single component.
    pub extremes_carried: bool,
}

pub fn gamma_min_partition(
    gens: &GeneratorSet,
    cs: &ComponentSet,
    grid: &Grid,
) -> Result<GammaPartition, TopologyError> {
    let (j_min, j_max) = find_extremes(cs, grid)?;
    let carriers = generator_carriers(gens, cs, grid);
    if let Some(c) = carriers.iter().find(|c| c.component.is_none()) {
        return Err(TopologyError::AmbiguousContainment {
            generator: c.generator,
            best_fraction: c.fraction,
        });
    }
    let gamma_min: Vec<usize> = carriers.iter().filter(|c| c.component == Some(j_min)).map(|c| c.generator).collect();
    let rest = carriers.iter().filter(|c| c.component != Some(j_min)).map(|c| c.generator).collect();
    let j_max_carriers: Vec<usize> =
        carriers.iter().filter(|c| c.component == Some(j_max)).map(|c| c.generator).collect();
    let extremes_carried = cs.count == 1 || (!gamma_min.is_empty() && !j_max_carriers.is_empty());
    Ok(GammaPartition {
        gamma_min,
        rest,
        j_max_carriers,
        carriers,
        extremes_carried,
    })
}

/// Cell centres of `cells`, thinned to at most `limit` evenly spaced ones.
fn sample_cells(frame: &Frame, cells: &[usize], limit: usize) -> Vec<Complex64> {
    let step = cells.len().div_ceil(limit.max(1)).max(1);
    cells.iter().step_by(step).map(|&i| frame.cell_center(i)).collect()
}

/// Preimage points of `points` under `h`.
fn preimage_points(h: &Generator, points: &[Complex64]) -> Result<Vec<Complex64>, PolyError> {
    let parts: Vec<Vec<Complex64>> = points.par_iter().map(|&w| h.preimages(w)).collect::<Result<_, _>>()?;
    Ok(parts.concat())
}

/// Cells sampled per component when forming preimage rasters.
pub const PREIMAGE_SAMPLES: usize = 2000;

/// Width in cells of the empty ring between consecutive components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: usize,
    pub outer: usize,
    /// Number of empty cells on the shortest king-move path between them.
    pub width_cells: usize,
}

/// Chebyshev distance (in cells) from `sources` to every cell.
fn chebyshev_distance(frame: &Frame, sources: &[usize]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; frame.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(i) = queue.pop_front() {
        for nb in frame.neighbors8(i) {
            if dist[nb] == u32::MAX {
                dist[nb] = dist[i] + 1;
                queue.push_back(nb);
            }
        }
    }
    dist
}

/// Empty annuli between consecutive components of a total order.
pub fn separating_annuli(cs: &ComponentSet, grid: &Grid) -> Result<Vec<Annulus>, TopologyError> {
    let order = sorted_order(cs)?;
    let cells = component_cells(cs);
    Ok(order
        .windows(2)
        .map(|w| {
            let dist = chebyshev_distance(&grid.frame, &cells[w[0]]);
            let gap = cells[w[1]].iter().map(|&i| dist[i]).min().unwrap_or(u32::MAX);
            Annulus {
                inner: w[0],
                outer: w[1],
                width_cells: gap.saturating_sub(1) as usize,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountCertificate {
    CertifiedCount(usize),
    NoCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub certificate: CountCertificate,
    /// Components that contain no generator's Julia set.
    pub coreless_components: Vec<usize>,
    /// `(generator, component)` pairs whose preimage meets no component.
    pub failed_pairs: Vec<(usize, usize)>,
    pub annuli: Vec<Annulus>,
    pub reason: Option<String>,
}

/// Raster form of the finite-count criterion. Each component must contain
/// the Julia set of some generator, every preimage `h^{-1}(J_j)` must meet
/// some component, and consecutive components must be separated by empty
/// annuli.
pub fn count_certificate(gens: &GeneratorSet, cs: &ComponentSet, grid: &Grid) -> Result<CountReport, TopologyError> {
    let mut report = CountReport {
        certificate: CountCertificate::NoCertificate,
        coreless_components: Vec::new(),
        failed_pairs: Vec::new(),
        annuli: Vec::new(),
        reason: None,
    };
    if cs.count == 0 {
        report.reason = Some("no components".into());
        return Ok(report);
    }
    report.annuli = match separating_annuli(cs, grid) {
        Ok(a) => a,
        Err(e) => {
            report.reason = Some(e.to_string());
            return Ok(report);
        }
    };
    let carriers = generator_carriers(gens, cs, grid);
    report.coreless_components = (0..cs.count)
        .filter(|&k| !carriers.iter().any(|c| c.component == Some(k)))
        .collect();
    let cells = component_cells(cs);
    for (g, h) in gens.generators().iter().enumerate() {
        for (j, cj) in cells.iter().enumerate() {
            let pts = preimage_points(h, &sample_cells(&grid.frame, cj, PREIMAGE_SAMPLES))?;
            if !pts.iter().any(|&p| !point_labels_near(cs, &grid.frame, p).is_empty()) {
                report.failed_pairs.push((g + 1, j));
            }
        }
    }
    let annuli_ok = report.annuli.iter().all(|a| a.width_cells >= 1);
    if !report.coreless_components.is_empty() {
        report.reason = Some(format!("{} components carry no generator Julia set", report.coreless_components.len()));
    } else if !report.failed_pairs.is_empty() {
        report.reason = Some("some preimage meets no component".into());
    } else if !annuli_ok {
        report.reason = Some("consecutive components not separated".into());
    } else {
        report.certificate = CountCertificate::CertifiedCount(cs.count);
    }
    Ok(report)
}

/// Marks the cells containing `points`.
fn rasterize(frame: &Frame, points: &[Complex64]) -> Vec<bool> {
    let mut mask = vec![false; frame.len()];
    for &p in points {
        if let Some(i) = frame.locate(p) {
            mask[i] = true;
        }
    }
    mask
}

fn masked_points(frame: &Frame, mask: &[bool]) -> Vec<Complex64> {
    mask.iter().enumerate().filter(|(_, &on)| on).map(|(i, _)| frame.cell_center(i)).collect()
}

/// Raster form of the countable-structure criterion for a designated
/// generator `h_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountableReport {
    /// 1-based generator index `m`.
    pub generator: usize,
    pub depth_cap: usize,
    /// At least three generators, all `J(h_j)` with `j ≠ m` in one component
    /// `J_0`, and every `h_j^{-1}(J(h_m))` meeting `J_0`.
    pub hypotheses_hold: bool,
    /// `(component, smallest matching n)` for every non-extreme component.
    pub matches: Vec<(usize, Option<usize>)>,
    pub all_matched: bool,
}

/// Checks the hypotheses of the countable-structure criterion for `h_m`,
/// then matches every non-extreme component against `h_m^{-n}(J_min ∪
/// J_max)`, `n ≤ depth_cap`. A component matches at depth `n` when at
/// least 95% of its cells lie within one cell of the depth-`n` preimage
/// raster.
pub fn countable_structure_check(
    gens: &GeneratorSet,
    cs: &ComponentSet,
    grid: &Grid,
    m: usize,
    depth_cap: usize,
) -> Result<CountableReport, TopologyError> {
    let (j_min, j_max) = find_extremes(cs, grid)?;
    let frame = grid.frame;
    let h = gens.get(m).expect("valid generator index");
    let cells = component_cells(cs);

    let carriers = generator_carriers(gens, cs, grid);
    let others: Vec<&Carrier> = carriers.iter().filter(|c| c.generator != m).collect();
    let j0 = others.first().and_then(|c| c.component);
    let mut hypotheses_hold = gens.len() >= 3 && j0.is_some() && others.iter().all(|c| c.component == j0);
    if hypotheses_hold {
        let j0 = j0.expect("checked") as u32;
        let julia_m = masked_points(&frame, &single_julia_raster(h, frame, gens.escape_radius()));
        let julia_m = thin(julia_m, PREIMAGE_SAMPLES);
        for c in &others {
            let pre = preimage_points(&gens.generators()[c.generator - 1], &julia_m)?;
            if !pre.iter().any(|&p| point_labels_near(cs, &frame, p).contains(&j0)) {
                hypotheses_hold = false;
            }
        }
    }

    let mut pending: Vec<usize> = (0..cs.count).filter(|&k| k != j_min && k != j_max).collect();
    let mut matched: Vec<(usize, Option<usize>)> = Vec::new();
    let mut seeds: Vec<usize> = cells[j_min].iter().chain(&cells[j_max]).copied().collect();
    seeds.sort_unstable();
    let mut points = thin(seeds.iter().map(|&i| frame.cell_center(i)).collect(), COUNTABLE_POINTS);
    for depth in 1..=depth_cap {
        if pending.is_empty() {
            break;
        }
        let mask = rasterize(&frame, &preimage_points(h, &points)?);
        pending.retain(|&k| {
            let near = cells[k]
                .iter()
                .filter(|&&i| std::iter::once(i).chain(frame.neighbors8(i)).any(|j| mask[j]))
                .count();
            let hit = near as f64 >= CONTAINMENT * cells[k].len() as f64;
            if hit {
                matched.push((k, Some(depth)));
            }
            !hit
        });
        points = thin(masked_points(&frame, &mask), COUNTABLE_POINTS);
    }
    matched.extend(pending.iter().map(|&k| (k, None)));
    matched.sort_unstable();
    let all_matched = pending.is_empty();
    Ok(CountableReport {
        generator: m,
        depth_cap,
        hypotheses_hold,
        matches: matched,
        all_matched,
    })
}

/// Points carried between preimage depths.
const COUNTABLE_POINTS: usize = 60_000;


fn thin(points: Vec<Complex64>, limit: usize) -> Vec<Complex64> {
    if points.len() > limit {
        let step = points.len().div_ceil(limit);
        points.into_iter().step_by(step).collect()
    } else {
        points
    }
}

/// Cells of the escape-classification boundary (approximating the boundary
/// of the smallest filled-in Julia set) and where they sit relative to the
/// components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TouchReport {
    pub boundary_cells: usize,
    /// Cells within one cell of `J_min`.
    pub near_j_min: usize,
    /// Cells within one cell of some other component.
    pub near_other: usize,
    pub only_j_min: bool,
}

/// `∂K̂ ⊂ J_min` at raster scale: no escape-boundary cell of `escape_grid`
/// comes within one cell of a component other than `J_min`.
pub fn khat_boundary_check(escape_grid: &Grid, cs: &ComponentSet, j_min: usize) -> TouchReport {
    let f = escape_grid.frame;
    let mut report = TouchReport {
        boundary_cells: 0,
        near_j_min: 0,
        near_other: 0,
        only_j_min: true,
    };
    for (i, &s) in escape_grid.cells.iter().enumerate() {
        if s != CellState::Boundary {
            continue;
        }
        report.boundary_cells += 1;
        let near = labels_near(cs, &f, i);
        if near.contains(&(j_min as u32)) {
            report.near_j_min += 1;
        }
        if near.iter().any(|&l| l != j_min as u32) {
            report.near_other += 1;
        }
    }
    report.only_j_min = report.near_other == 0;
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    /// 1-based generator index.
    pub generator: usize,
    pub preimage_points: usize,
    /// Preimage points landing in a `J_min` cell.
    pub in_j_min: usize,
}

/// For each generator whose Julia set is carried outside `J_min`, the
/// preimages of sampled Julia cells must avoid `J_min`.
pub fn preimage_avoidance_check(
    gens: &GeneratorSet,
    cs: &ComponentSet,
    grid: &Grid,
    partition: &GammaPartition,
) -> Result<Vec<AvoidanceReport>, TopologyError> {
    let (j_min, _) = find_extremes(cs, grid)?;
    let mut julia: Vec<usize> = component_cells(cs).concat();
    julia.sort_unstable();
    let pts = sample_cells(&grid.frame, &julia, 8 * PREIMAGE_SAMPLES);
    let mut out = Vec::new();
    for c in &partition.carriers {
        if c.component == Some(j_min) {
            continue;
        }
        let pre = preimage_points(&gens.generators()[c.generator - 1], &pts)?;
        let in_j_min = pre
            .iter()
            .filter(|&&p| grid.frame.locate(p).is_some_and(|i| cs.labels[i] == j_min as u32))
            .count();
        out.push(AvoidanceReport {
            generator: c.generator,
            preimage_points: pre.len(),
            in_j_min,
        });
    }
    Ok(out)
}

/// JSON topology summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub count: usize,
    pub noise_cells: usize,
    /// Component ids from innermost to outermost, when the order is total.
    pub order: Option<Vec<usize>>,
    pub order_check: OrderReport,
    pub j_min: Option<usize>,
    pub j_max: Option<usize>,
    pub gamma_min: Option<Vec<usize>>,
    pub partition: Option<GammaPartition>,
    pub partition_error: Option<String>,
    pub certificates: Option<CountReport>,
    pub countable: Vec<CountableReport>,
    pub radius_ranges: Vec<[f64; 2]>,
}

/// Countable-structure matching depth used by [`topology_report`].
pub const COUNTABLE_DEPTH: usize = 6;

/// Labels, order, extremes, partition, count certificate and (for three or
/// more components) the countable-structure check of a Julia raster.
pub fn topology_report(gens: &GeneratorSet, cs: &ComponentSet, grid: &Grid) -> TopologyReport {
    let order_check = verify_total_order(cs, grid);
    let order = sorted_order(cs).ok();
    let extremes = find_extremes(cs, grid).ok();
    let (partition, partition_error) = match gamma_min_partition(gens, cs, grid) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let certificates = count_certificate(gens, cs, grid).ok();
    let countable = if extremes.is_some() && cs.count >= 3 {
        (1..=gens.len())
            .filter_map(|m| countable_structure_check(gens, cs, grid, m, COUNTABLE_DEPTH).ok())
            .collect()
    } else {
        Vec::new()
    };
    TopologyReport {
        count: cs.count,
        noise_cells: cs.noise_cells,
        order,
        order_check,
        j_min: extremes.map(|e| e.0),
        j_max: extremes.map(|e| e.1),
        gamma_min: partition.as_ref().map(|p| p.gamma_min.clone()),
        partition,
        partition_error,
        certificates,
        countable,
        radius_ranges: cs.components.iter().map(|c| c.radius_range).collect(),
    }
}
