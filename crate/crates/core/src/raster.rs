//! Planar rasters of the escaping region, the smallest filled-in Julia set
//! and the Julia set, plus backward (chaos-game) sampling.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::PolyError;
use crate::semigroup::{Generator, GeneratorSet, Word};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("word budget exceeded: {words} words > cap {cap}")]
    BudgetExceeded { words: u128, cap: usize },
    #[error("no generator has a repelling fixed point")]
    NoRepellingFixedPoint,
    #[error("resolution {0} below the minimum of 64")]
    InvalidResolution(usize),
    #[error("malformed grid dump: {0}")]
    Format(String),
    #[error("image encoding failed: {0}")]
    Image(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Box half-width as a multiple of the escape radius.
pub const BOX_FACTOR: f64 = 1.25;
pub const MIN_RESOLUTION: usize = 64;
pub const DEFAULT_MAX_ROUNDS: usize = 64;
pub const DEFAULT_WORD_CAP: usize = 4096;
pub const PIXEL_ITERATION_CAP: usize = 256;

/// Axis-aligned box with a square pixel lattice; row 0 is the top edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
    pub resolution: usize,
}

impl Frame {
    pub fn square(center: Complex64, half_width: f64, resolution: usize) -> Self {
        Self {
            center,
            half_width,
            half_height: half_width,
            resolution,
        }
    }

    /// Square of half-width `1.25 R` about 0.
    pub fn for_generators(gens: &GeneratorSet, resolution: usize) -> Self {
        Self::square(Complex64::new(0.0, 0.0), BOX_FACTOR * gens.escape_radius(), resolution)
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    pub fn cell_height(&self) -> f64 {
        2.0 * self.half_height / self.resolution as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_width().hypot(self.cell_height())
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    /// Lattice point `(i, j)` with `0 ≤ i, j ≤ resolution`; integer
    /// coordinates are cell corners, half-integers are centres.
    pub fn lattice_point(&self, i: f64, j: f64) -> Complex64 {
        Complex64::new(
            self.center.re - self.half_width + i * self.cell_width(),
            self.center.im + self.half_height - j * self.cell_height(),
        )
    }

    pub fn cell_center(&self, idx: usize) -> Complex64 {
        let (ix, iy) = (idx % self.resolution, idx / self.resolution);
        self.lattice_point(ix as f64 + 0.5, iy as f64 + 0.5)
    }

    /// Cell coordinates of `z`, possibly outside the lattice.
    pub fn coords(&self, z: Complex64) -> (i64, i64) {
        let x = (z.re - (self.center.re - self.half_width)) / self.cell_width();
        let y = ((self.center.im + self.half_height) - z.im) / self.cell_height();
        (x.floor() as i64, y.floor() as i64)
    }

    pub fn locate(&self, z: Complex64) -> Option<usize> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        let (x, y) = self.coords(z);
        let n = self.resolution as i64;
        (0..n).contains(&x).then_some(())?;
        (0..n).contains(&y).then_some(())?;
        Some(y as usize * self.resolution + x as usize)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.resolution + ix
    }

    pub fn xy(&self, idx: usize) -> (usize, usize) {
        (idx % self.resolution, idx / self.resolution)
    }

    /// Indices of the (up to 8) neighbours of a cell.
    pub fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.xy(idx);
        let n = self.resolution as i64;
        (-1i64..=1)
            .flat_map(|dy| (-1i64..=1).map(move |dx| (dx, dy)))
            .filter(|&d| d != (0, 0))
            .filter_map(move |(dx, dy)| {
                let (a, b) = (x as i64 + dx, y as i64 + dy);
                ((0..n).contains(&a) && (0..n).contains(&b)).then(|| b as usize * self.resolution + a as usize)
            })
    }

    /// Indices of the (up to 4) edge neighbours of a cell.
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.xy(idx);
        let n = self.resolution as i64;
        [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .filter_map(move |(dx, dy)| {
                let (a, b) = (x as i64 + dx, y as i64 + dy);
                ((0..n).contains(&a) && (0..n).contains(&b)).then(|| b as usize * self.resolution + a as usize)
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Escaping,
    Trapped,
    Boundary,
    Unknown,
}

impl CellState {
    fn code(self) -> char {
        match self {
            CellState::Escaping => 'E',
            CellState::Trapped => 'T',
            CellState::Boundary => 'B',
            CellState::Unknown => 'U',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        Some(match c {
            'E' => CellState::Escaping,
            'T' => CellState::Trapped,
            'B' => CellState::Boundary,
            'U' => CellState::Unknown,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub frame: Frame,
    pub cells: Vec<CellState>,
}

impl Grid {
    pub fn filled(frame: Frame, state: CellState) -> Self {
        Self {
            frame,
            cells: vec![state; frame.len()],
        }
    }

    pub fn resolution(&self) -> usize {
        self.frame.resolution
    }

    pub fn state_at(&self, z: Complex64) -> Option<CellState> {
        self.frame.locate(z).map(|i| self.cells[i])
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    /// Cells whose 8 neighbours all share their state `state`.
    pub fn interior_count(&self, state: CellState) -> usize {
        (0..self.cells.len())
            .filter(|&i| {
                self.cells[i] == state
                    && self.frame.neighbors8(i).count() == 8
                    && self.frame.neighbors8(i).all(|j| self.cells[j] == state)
            })
            .count()
    }

    /// Occupied cells of a point cloud as `Boundary`, dilated by `dilate`
    /// cells (Chebyshev); everything else `Unknown`.
    pub fn from_sample(frame: Frame, points: &[Complex64], dilate: usize) -> Self {
        let mut grid = Grid::filled(frame, CellState::Unknown);
        let n = frame.resolution as i64;
        let r = dilate as i64;
        for &p in points {
            let (x, y) = frame.coords(p);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (a, b) = (x + dx, y + dy);
                    if (0..n).contains(&a) && (0..n).contains(&b) {
                        grid.cells[b as usize * frame.resolution + a as usize] = CellState::Boundary;
                    }
                }
            }
        }
        grid
    }

    /// `PSGRID v1`: header, box, resolution, then one run-length encoded
    /// row per line (`120E 3B ...`).
    pub fn to_psgrid(&self) -> String {
        let f = &self.frame;
        let mut out = String::new();
        let _ = writeln!(out, "PSGRID v1");
        let _ = writeln!(out, "box {} {} {} {}", f.center.re, f.center.im, f.half_width, f.half_height);
        let _ = writeln!(out, "resolution {}", f.resolution);
        for row in self.cells.chunks(f.resolution) {
            let mut first = true;
            let mut i = 0;
            while i < row.len() {
                let s = row[i];
                let run = row[i..].iter().take_while(|&&t| t == s).count();
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{}{}", run, s.code());
                first = false;
                i += run;
            }
            out.push('\n');
        }
        out
    }

    pub fn from_psgrid(text: &str) -> Result<Self, RasterError> {
        let bad = |m: &str| RasterError::Format(m.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("PSGRID v1") {
            return Err(bad("missing PSGRID v1 header"));
        }
        let boxline = lines.next().ok_or_else(|| bad("missing box line"))?;
        let nums: Vec<f64> = boxline
            .strip_prefix("box ")
            .ok_or_else(|| bad("missing box line"))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad box value")))
            .collect::<Result<_, _>>()?;
        if nums.len() != 4 {
            return Err(bad("box needs four values"));
        }
        let resolution: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("resolution "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad("missing resolution line"))?;
        let frame = Frame {
            center: Complex64::new(nums[0], nums[1]),
            half_width: nums[2],
            half_height: nums[3],
            resolution,
        };
        let mut cells = Vec::with_capacity(frame.len());
        for _ in 0..resolution {
            let line = lines.next().ok_or_else(|| bad("missing row"))?;
            let start = cells.len();
            for token in line.split_whitespace() {
                let code = token.chars().last().ok_or_else(|| bad("empty token"))?;
                let state = CellState::from_code(code).ok_or_else(|| bad("unknown state"))?;
                let run: usize = token[..token.len() - 1].parse().map_err(|_| bad("bad run length"))?;
                cells.extend(std::iter::repeat_n(state, run));
            }
            if cells.len() - start != resolution {
                return Err(bad("row length mismatch"));
            }
        }
        Ok(Grid { frame, cells })
    }
}

/// Escape classification with the generator that moved each escaping cell
/// into the escaping set, for replay.
#[derive(Clone, Debug)]
pub struct EscapeMap {
    pub grid: Grid,
    /// 1-based generator index per cell; 0 for cells outside radius `R` or
    /// never escaping.
    pub via: Vec<u8>,
    pub rounds: usize,
    pub escape_radius: f64,
}

const OUTSIDE: u32 = u32::MAX;

/// Landing cell of `h(z)`, or [`OUTSIDE`] when it leaves the box or the
/// escape disk.
fn landing(frame: &Frame, h: &Generator, z: Complex64, r: f64) -> u32 {
    let w = h.eval(z);
    if w.norm() > r {
        return OUTSIDE;
    }
    frame.locate(w).map_or(OUTSIDE, |i| i as u32)
}

/// Cell-mapping approximation of the escaping set.
///
/// # Panics
/// If `resolution < 64`.
pub fn escape_classify(gens: &GeneratorSet, resolution: usize, max_rounds: usize) -> Grid {
    escape_classify_detailed(gens, resolution, max_rounds).grid
}

pub fn escape_classify_detailed(gens: &GeneratorSet, resolution: usize, max_rounds: usize) -> EscapeMap {
    assert!(resolution >= MIN_RESOLUTION, "resolution must be at least {MIN_RESOLUTION}");
    let r = gens.escape_radius();
    let frame = Frame::for_generators(gens, resolution);
    let n = resolution;
    let m = gens.len();

    // per generator: landing cells of the (n+1)^2 corners and the n^2 centres
    let corner_land: Vec<Vec<u32>> = gens
        .generators()
        .iter()
        .map(|h| {
            (0..(n + 1) * (n + 1))
                .into_par_iter()
                .map(|k| landing(&frame, h, frame.lattice_point((k % (n + 1)) as f64, (k / (n + 1)) as f64), r))
                .collect()
        })
        .collect();
    let center_land: Vec<Vec<u32>> = gens
        .generators()
        .iter()
        .map(|h| {
            (0..n * n)
                .into_par_iter()
                .map(|k| landing(&frame, h, frame.cell_center(k), r))
                .collect()
        })
        .collect();
    let samples = |g: usize, idx: usize| -> [u32; 5] {
        let (x, y) = (idx % n, idx / n);
        let c = &corner_land[g];
        [
            center_land[g][idx],
            c[y * (n + 1) + x],
            c[y * (n + 1) + x + 1],
            c[(y + 1) * (n + 1) + x],
            c[(y + 1) * (n + 1) + x + 1],
        ]
    };

    // cells entirely outside the escape disk
    let mut escaping: Vec<bool> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = ((idx % n) as f64, (idx / n) as f64);
            let mut re = [frame.lattice_point(x, y).re, frame.lattice_point(x + 1.0, y).re];
            let mut im = [frame.lattice_point(x, y).im, frame.lattice_point(x, y + 1.0).im];
            re.sort_by(f64::total_cmp);
            im.sort_by(f64::total_cmp);
            let dx = if re[0] > 0.0 { re[0] } else if re[1] < 0.0 { -re[1] } else { 0.0 };
            let dy = if im[0] > 0.0 { im[0] } else if im[1] < 0.0 { -im[1] } else { 0.0 };
            dx.hypot(dy) > r
        })
        .collect();
    let mut via = vec![0u8; n * n];
    let is_esc = |esc: &[bool], t: u32| t == OUTSIDE || esc[t as usize];

    let mut rounds = 0;
    while rounds < max_rounds {
        let updates: Vec<(usize, u8)> = (0..n * n)
            .into_par_iter()
            .filter(|&idx| !escaping[idx])
            .filter_map(|idx| {
                (0..m)
                    .find(|&g| samples(g, idx).iter().all(|&t| is_esc(&escaping, t)))
                    .map(|g| (idx, (g + 1) as u8))
            })
            .collect();
        rounds += 1;
        if updates.is_empty() {
            break;
        }
        for (idx, g) in updates {
            escaping[idx] = true;
            via[idx] = g;
        }
    }

    let cells: Vec<CellState> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            if escaping[idx] {
                CellState::Escaping
            } else if frame.neighbors8(idx).any(|j| escaping[j]) {
                CellState::Boundary
            } else if (0..m).all(|g| samples(g, idx).iter().all(|&t| !is_esc(&escaping, t))) {
                CellState::Trapped
            } else {
                CellState::Unknown
            }
        })
        .collect();
    EscapeMap {
        grid: Grid { frame, cells },
        via,
        rounds,
        escape_radius: r,
    }
}

impl EscapeMap {
    /// Replays the recorded generators from the cell's sample points and
    /// returns a word sending one of them beyond the escape radius.
    pub fn escape_witness(&self, gens: &GeneratorSet, idx: usize) -> Option<(Complex64, Word)> {
        if self.grid.cells[idx] != CellState::Escaping {
            return None;
        }
        let f = &self.grid.frame;
        let (x, y) = (f.xy(idx).0 as f64, f.xy(idx).1 as f64);
        let starts = [
            f.cell_center(idx),
            f.lattice_point(x, y),
            f.lattice_point(x + 1.0, y),
            f.lattice_point(x, y + 1.0),
            f.lattice_point(x + 1.0, y + 1.0),
        ];
        let limit = self.rounds + 64;
        'start: for &z0 in &starts {
            let mut z = z0;
            let mut word = Vec::new();
            for _ in 0..=limit {
                if z.norm() > self.escape_radius {
                    if word.is_empty() {
                        // already outside: any letter keeps it there
                        word.push(1);
                    }
                    return Some((z0, Word::new(word).ok()?));
                }
                let cell = match f.locate(z) {
                    Some(c) if self.grid.cells[c] == CellState::Escaping && self.via[c] > 0 => c,
                    _ => continue 'start,
                };
                let g = self.via[cell] as usize;
                z = gens.generators()[g - 1].eval(z);
                word.push(g);
            }
        }
        None
    }
}

/// Escape time of `z0` under iteration of the word `letters`: `None` when
/// the orbit stays in the disk of radius `r` (cap or a detected cycle),
/// otherwise an estimate of the distance from `z0` to `J(h_w)`.
fn word_escape_distance(letters: &[&Generator], z0: Complex64, r: f64, cap: usize) -> Option<f64> {
    let r2 = r * r;
    if z0.norm_sqr() > r2 {
        return Some(distance_estimate(letters, 0, z0, Complex64::new(1.0, 0.0)));
    }
    let mut z = z0;
    let mut dz = Complex64::new(1.0, 0.0);
    let mut saved = z;
    let mut limit = 2;
    let mut steps = 0;
    for _ in 0..cap {
        for (k, h) in letters.iter().enumerate() {
            let (w, dw) = h.eval_with_derivative(z);
            dz *= dw;
            z = w;
            if !(z.norm_sqr() <= r2) {
                return Some(distance_estimate(letters, k + 1, z, dz));
            }
        }
        if (z - saved).norm_sqr() <= 1e-20 * (1.0 + saved.norm_sqr()) {
            return None;
        }
        steps += 1;
        if steps == limit {
            saved = z;
            limit *= 2;
            steps = 0;
        }
    }
    None
}

/// Continues the escaping orbit to a large modulus and returns
/// `|z| log|z| / (2 |z'|)`.
fn distance_estimate(letters: &[&Generator], next: usize, mut z: Complex64, mut dz: Complex64) -> f64 {
    const BAILOUT: f64 = 1e8;
    for h in letters.iter().cycle().skip(next % letters.len()).take(16) {
        if z.norm() > BAILOUT {
            break;
        }
        let (w, dw) = h.eval_with_derivative(z);
        let dw = dz * dw;
        if !(w.re.is_finite() && w.im.is_finite() && dw.re.is_finite() && dw.im.is_finite()) {
            break;
        }
        z = w;
        dz = dw;
    }
    let m = z.norm();
    let d = 0.5 * m * m.ln() / dz.norm();
    if d.is_nan() {
        0.0
    } else {
        d
    }
}

/// Number of words of length `1..=max_len` over `m` letters.
pub fn word_count(m: usize, max_len: usize) -> u128 {
    (1..=max_len as u32).map(|k| (m as u128).saturating_pow(k)).fold(0u128, u128::saturating_add)
}

/// Union over all words `|w| ≤ max_len` of the escape-time boundary of
/// `J(h_w)`, with the default word cap.
pub fn julia_union_words(gens: &GeneratorSet, max_len: usize, resolution: usize) -> Result<Grid, RasterError> {
    julia_union_words_capped(gens, max_len, resolution, DEFAULT_WORD_CAP)
}

/// Cells where the escape status changes across a 4-neighbour edge (both
/// sides) or whose escaping centre lies within half a cell of `J(h_w)` by
/// distance estimate are `Boundary`; others are `Escaping` if some word's
/// iteration escapes from them and `Trapped` otherwise. The single escape
/// radius of the semigroup is valid for every word.
pub fn julia_union_words_capped(
    gens: &GeneratorSet,
    max_len: usize,
    resolution: usize,
    word_cap: usize,
) -> Result<Grid, RasterError> {
    if resolution < MIN_RESOLUTION {
        return Err(RasterError::InvalidResolution(resolution));
    }
    let total = word_count(gens.len(), max_len.max(1));
    if total > word_cap as u128 {
        return Err(RasterError::BudgetExceeded { words: total, cap: word_cap });
    }
    let frame = Frame::for_generators(gens, resolution);
    let n = resolution;
    let (boundary, escaped_any) = union_words_masks(gens, max_len.max(1), frame, gens.escape_radius());
    let cells = (0..n * n)
        .map(|i| {
            if boundary[i] {
                CellState::Boundary
            } else if escaped_any[i] {
                CellState::Escaping
            } else {
                CellState::Trapped
            }
        })
        .collect();
    Ok(Grid { frame, cells })
}

/// Boundary and escaped-under-some-word masks of the word union on an
/// arbitrary frame; `r` must be an escape radius valid for every word.
pub fn union_words_masks(gens: &GeneratorSet, max_len: usize, frame: Frame, r: f64) -> (Vec<bool>, Vec<bool>) {
    let mut boundary = vec![false; frame.len()];
    let mut escaped_any = vec![false; frame.len()];
    for word in gens.words(max_len) {
        let letters: Vec<&Generator> = word.indices().iter().map(|&i| &gens.generators()[i - 1]).collect();
        let mark = boundary_marks(&letters, frame, r);
        boundary
            .par_iter_mut()
            .zip(escaped_any.par_iter_mut())
            .zip(mark)
            .for_each(|((b, e), (mb, me))| {
                *b |= mb;
                *e |= me;
            });
    }
    (boundary, escaped_any)
}

/// Backward-orbit points used when `J(h)` is below the raster scale.
pub const SUBCELL_SAMPLES: usize = 512;

/// Raster of the single-map Julia set `J(h)` on a given frame. When no
/// cell is marked (`J(h)` fits between cell centres), the cells of a short
/// backward orbit of `h` are used instead.
pub fn single_julia_raster(h: &Generator, frame: Frame, r: f64) -> Vec<bool> {
    let mut mask: Vec<bool> = boundary_marks(&[h], frame, r).into_iter().map(|(b, _)| b).collect();
    if !mask.contains(&true) {
        let single = GeneratorSet::new(vec![h.clone()]).expect("degree checked by the caller's set");
        if let Ok(sample) = julia_backward_sample(&single, SUBCELL_SAMPLES, 20, 0) {
            for p in sample.points {
                if let Some(i) = frame.locate(p) {
                    mask[i] = true;
                }
            }
        }
    }
    mask
}

/// Per cell: (on the raster boundary of `J(h_w)`, escapes under `h_w`).
fn boundary_marks(letters: &[&Generator], frame: Frame, r: f64) -> Vec<(bool, bool)> {
    let n = frame.resolution;
    let half_cell = 0.5 * frame.cell_width().max(frame.cell_height());
    let dist: Vec<Option<f64>> = (0..n * n)
        .into_par_iter()
        .map(|idx| word_escape_distance(letters, frame.cell_center(idx), r, PIXEL_ITERATION_CAP))
        .collect();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let esc = dist[idx].is_some();
            let edge = frame.neighbors4(idx).any(|j| dist[j].is_some() != esc);
            let close = dist[idx].is_some_and(|d| d < half_cell);
            (edge || close, esc)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuliaSample {
    pub points: Vec<Complex64>,
    pub seed: u64,
    /// Steps taken with each generator.
    pub words_used: Vec<u64>,
}

/// A repelling fixed point, preferring `h_1`.
pub fn repelling_start(gens: &GeneratorSet) -> Result<Complex64, RasterError> {
    for g in gens.generators() {
        if let Some(&z) = g.repelling_fixed_points()?.first() {
            return Ok(z);
        }
    }
    Err(RasterError::NoRepellingFixedPoint)
}

fn chain(
    gens: &GeneratorSet,
    start: Complex64,
    n_points: usize,
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Complex64>, Vec<u64>), RasterError> {
    let m = gens.len();
    let mut used = vec![0u64; m];
    let mut points = Vec::with_capacity(n_points);
    let mut z = start;
    for step in 0..burn_in + n_points {
        let g = rng.gen_range(0..m);
        used[g] += 1;
        z = gens.generators()[g].random_preimage(z, rng)?;
        if step >= burn_in {
            points.push(z);
        }
    }
    Ok((points, used))
}

/// Backward orbit from a repelling fixed point with uniformly random
/// generator and branch; the first `burn_in` points are dropped.
pub fn julia_backward_sample(
    gens: &GeneratorSet,
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<JuliaSample, RasterError> {
    let start = repelling_start(gens)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, words_used) = chain(gens, start, n_points, burn_in, &mut rng)?;
    Ok(JuliaSample { points, seed, words_used })
}

/// `chains` independent streams of one seed run in parallel and
/// concatenated in stream order; deterministic for a given seed.
pub fn julia_backward_sample_parallel(
    gens: &GeneratorSet,
    n_points: usize,
    burn_in: usize,
    seed: u64,
    chains: usize,
) -> Result<JuliaSample, RasterError> {
    let chains = chains.max(1);
    let start = repelling_start(gens)?;
    let per = n_points.div_ceil(chains);
    let parts: Vec<(Vec<Complex64>, Vec<u64>)> = (0..chains)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = per.min(n_points.saturating_sub(k * per));
            chain(gens, start, count, burn_in, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    let mut points = Vec::with_capacity(n_points);
    let mut words_used = vec![0u64; gens.len()];
    for (p, u) in parts {
        points.extend(p);
        for (a, b) in words_used.iter_mut().zip(u) {
            *a += b;
        }
    }
    Ok(JuliaSample { points, seed, words_used })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub escaping: [u8; 3],
    pub trapped: [u8; 3],
    pub boundary: [u8; 3],
    pub unknown: [u8; 3],
    pub background: [u8; 3],
    pub sample: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            escaping: [0, 0, 0],
            trapped: [40, 60, 140],
            boundary: [255, 255, 255],
            unknown: [120, 120, 120],
            background: [0, 0, 0],
            sample: [255, 255, 255],
        }
    }
}

/// RGB pixels of a grid, row-major from the top.
pub fn grid_pixels(grid: &Grid, palette: &Palette) -> Vec<u8> {
    grid.cells
        .iter()
        .flat_map(|s| match s {
            CellState::Escaping => palette.escaping,
            CellState::Trapped => palette.trapped,
            CellState::Boundary => palette.boundary,
            CellState::Unknown => palette.unknown,
        })
        .collect()
}

/// RGB pixels of a point cloud with 1-pixel stamps.
pub fn sample_pixels(frame: &Frame, points: &[Complex64], palette: &Palette) -> Vec<u8> {
    let mut px: Vec<u8> = std::iter::repeat_n(palette.background, frame.len()).flatten().collect();
    for &p in points {
        if let Some(i) = frame.locate(p) {
            px[3 * i..3 * i + 3].copy_from_slice(&palette.sample);
        }
    }
    px
}

/// Writes `pixels` as binary PPM to `ppm`, and as PNG to `png` if given.
pub fn write_image(pixels: &[u8], resolution: usize, ppm: &Path, png: Option<&Path>) -> Result<(), RasterError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(ppm)?);
    write!(file, "P6\n{resolution} {resolution}\n255\n")?;
    file.write_all(pixels)?;
    file.flush()?;
    if let Some(path) = png {
        let img = image::RgbImage::from_raw(resolution as u32, resolution as u32, pixels.to_vec())
            .ok_or_else(|| RasterError::Image("pixel buffer size mismatch".into()))?;
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| RasterError::Image(e.to_string()))?;
    }
    Ok(())
}

pub fn render_grid(grid: &Grid, palette: &Palette, ppm: &Path, png: Option<&Path>) -> Result<(), RasterError> {
    write_image(&grid_pixels(grid, palette), grid.resolution(), ppm, png)
}

pub fn render_sample(
    frame: &Frame,
    sample: &JuliaSample,
    palette: &Palette,
    ppm: &Path,
    png: Option<&Path>,
) -> Result<(), RasterError> {
    write_image(&sample_pixels(frame, &sample.points, palette), frame.resolution, ppm, png)
}
