//! End-to-end analysis pipeline and its versioned JSON report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{
    component_count_upper_bound, connectedness_criteria, fixed_points, m_set, AffineError, CountBound, CriterionReport,
    IntervalSet,
};
use crate::families::FamilySpec;
use crate::hyperbolicity::{default_margin, hyperbolic_check_on, HyperbolicVerdict, HyperbolicityReport};
use crate::raster::{
    escape_classify, julia_backward_sample_parallel, julia_union_words_capped, render_grid, render_sample,
    word_count, CellState, Frame, Grid, Palette, RasterError, DEFAULT_MAX_ROUNDS, DEFAULT_WORD_CAP,
};
use crate::poly::PolyError;
use crate::semigroup::{postcritical_orbit, Budget, GeneratorSet, PcbReport, Tri};
use crate::topology::{
    find_extremes, khat_boundary_check, label_components, preimage_avoidance_check, separating_annuli,
    topology_report, Annulus, AvoidanceReport, TopologyReport, TouchReport,
};

pub const SCHEMA: &str = "psjson/1";

/// Refinement depth of the reported M-set cover and count bound.
pub const AFFINE_DEPTH: usize = 6;

/// Independent chaos-game chains; fixed so output does not depend on the
/// thread count.
pub const SAMPLE_CHAINS: usize = 8;

pub const SAMPLE_BURN_IN: usize = 100;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Affine(#[from] AffineError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("resolution mismatch: raster has {found}, expected {expected}")]
    ResolutionMismatch { found: usize, expected: usize },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub resolution: usize,
    pub word_len: usize,
    pub points: usize,
    pub seed: u64,
    /// Hyperbolicity margin; two cell diagonals when absent.
    pub margin: Option<f64>,
    pub budget: Budget,
    pub timings: bool,
    pub png: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            resolution: 512,
            word_len: 5,
            points: 1_000_000,
            seed: 0,
            margin: None,
            budget: Budget::default(),
            timings: true,
            png: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub family: Option<FamilySpec>,
    pub generators: GeneratorSet,
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConnectednessVerdict {
    Connected { by: String },
    DisconnectedEvidence,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connectedness {
    pub criteria: Vec<CriterionReport>,
    pub verdict: ConnectednessVerdict,
    /// Widest empty annulus between consecutive raster components.
    pub separating_annulus: Option<Annulus>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSection {
    pub fixed_points: Vec<f64>,
    pub m_set_depth: usize,
    pub m_set: IntervalSet,
    pub upper_bound: CountBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterSection {
    pub resolution: usize,
    pub word_len_used: usize,
    pub julia_cells: usize,
    pub trapped_cells: usize,
    pub trapped_interior_cells: usize,
    pub sample_points: usize,
}

/// Raster-scale checks of the order-theoretic structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSection {
    pub khat_boundary: Option<TouchReport>,
    pub preimage_avoidance: Vec<AvoidanceReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub input: InputEcho,
    pub pcb: PcbReport,
    pub connectedness: Connectedness,
    pub affine: AffineSection,
    pub raster: Option<RasterSection>,
    pub topology: Option<TopologyReport>,
    pub invariants: Option<InvariantSection>,
    pub hyperbolicity: Option<HyperbolicityReport>,
    pub artifacts: Vec<String>,
    /// Seconds per stage.
    pub timings: Option<BTreeMap<String, f64>>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String, AnalysisError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// 2 when undecided outcomes outnumber decided ones among the pcb
    /// verdict, the connectedness verdict and (if run) the hyperbolicity
    /// verdict; 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        let mut decided = 0;
        let mut undecided = 0;
        let mut tally = |d: bool| if d { decided += 1 } else { undecided += 1 };
        tally(self.pcb.verdict != crate::semigroup::PcbVerdict::Undecided);
        tally(self.connectedness.verdict != ConnectednessVerdict::Unknown);
        if let Some(h) = &self.hyperbolicity {
            tally(h.verdict != HyperbolicVerdict::Undecided);
        }
        if undecided > decided {
            2
        } else {
            0
        }
    }
}

struct Clock {
    enabled: bool,
    stages: BTreeMap<String, f64>,
    last: Instant,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            stages: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        *self.stages.entry(stage.to_string()).or_default() += (now - self.last).as_secs_f64();
        self.last = now;
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.stages)
    }
}

fn verdict(criteria: &[CriterionReport], pcb: Tri, annulus: Option<&Annulus>) -> ConnectednessVerdict {
    if pcb == Tri::Yes {
        if let Some(c) = criteria.iter().find(|c| c.covered) {
            return ConnectednessVerdict::Connected {
                by: c.criterion_name.clone(),
            };
        }
    }
    if annulus.is_some() {
        ConnectednessVerdict::DisconnectedEvidence
    } else {
        ConnectednessVerdict::Unknown
    }
}

fn affine_section(gens: &GeneratorSet) -> Result<AffineSection, AnalysisError> {
    Ok(AffineSection {
        fixed_points: fixed_points(gens),
        m_set_depth: AFFINE_DEPTH,
        m_set: m_set(gens, AFFINE_DEPTH)?,
        upper_bound: component_count_upper_bound(gens, AFFINE_DEPTH)?,
    })
}

/// Postcritical boundedness, the three connectedness criteria and the
/// affine count bound.
pub fn check(gens: &GeneratorSet, family: Option<FamilySpec>, opts: &Options) -> Result<AnalysisReport, AnalysisError> {
    let mut clock = Clock::new(opts.timings);
    let (_, pcb) = postcritical_orbit(gens, opts.budget)?;
    clock.lap("pcb");
    let criteria = connectedness_criteria(gens);
    let affine = affine_section(gens)?;
    clock.lap("affine");
    Ok(AnalysisReport {
        schema: SCHEMA.to_string(),
        input: InputEcho {
            family,
            generators: gens.clone(),
            options: opts.clone(),
        },
        connectedness: Connectedness {
            verdict: verdict(&criteria, pcb.verdict.into(), None),
            criteria,
            separating_annulus: None,
        },
        pcb,
        affine,
        raster: None,
        topology: None,
        invariants: None,
        hyperbolicity: None,
        artifacts: Vec::new(),
        timings: clock.finish(),
    })
}

/// Largest word length not above `requested` whose word count fits the
/// union budget.
pub fn fitting_word_len(m: usize, requested: usize) -> usize {
    let mut k = requested.max(1);
    while k > 1 && word_count(m, k) > DEFAULT_WORD_CAP as u128 {
        k -= 1;
    }
    k
}

/// The rasters behind [`analyze`] and the `render` command.
pub struct Rasters {
    pub julia: Grid,
    pub escape: Grid,
    pub sample: crate::raster::JuliaSample,
    pub word_len_used: usize,
}

pub fn compute_rasters(
    gens: &GeneratorSet,
    opts: &Options,
    julia: Option<Grid>,
) -> Result<Rasters, AnalysisError> {
    let word_len_used = fitting_word_len(gens.len(), opts.word_len);
    let julia = match julia {
        Some(g) if g.resolution() != opts.resolution => {
            return Err(AnalysisError::ResolutionMismatch {
                found: g.resolution(),
                expected: opts.resolution,
            })
        }
        Some(g) => g,
        None => julia_union_words_capped(gens, word_len_used, opts.resolution, DEFAULT_WORD_CAP)?,
    };
    let escape = escape_classify(gens, opts.resolution.max(crate::raster::MIN_RESOLUTION), DEFAULT_MAX_ROUNDS);
    let sample = julia_backward_sample_parallel(gens, opts.points, SAMPLE_BURN_IN, opts.seed, SAMPLE_CHAINS)?;
    Ok(Rasters {
        julia,
        escape,
        sample,
        word_len_used,
    })
}

/// Writes grid dumps and images under `dir`; returns the written paths.
pub fn write_artifacts(rasters: &Rasters, dir: &Path, png: bool) -> Result<Vec<String>, AnalysisError> {
    std::fs::create_dir_all(dir)?;
    let palette = Palette::default();
    let mut out = Vec::new();
    let mut push = |p: PathBuf| out.push(p.display().to_string());
    for (name, grid) in [("julia", &rasters.julia), ("escape", &rasters.escape)] {
        let dump = dir.join(format!("{name}.psgrid"));
        std::fs::write(&dump, grid.to_psgrid())?;
        push(dump);
        let ppm = dir.join(format!("{name}.ppm"));
        let png_path = png.then(|| dir.join(format!("{name}.png")));
        render_grid(grid, &palette, &ppm, png_path.as_deref())?;
        push(ppm);
        if let Some(p) = png_path {
            push(p);
        }
    }
    let ppm = dir.join("sample.ppm");
    let png_path = png.then(|| dir.join("sample.png"));
    render_sample(&rasters.julia.frame, &rasters.sample, &palette, &ppm, png_path.as_deref())?;
    push(ppm);
    if let Some(p) = png_path {
        push(p);
    }
    Ok(out)
}

/// Full pipeline: [`check`] plus the Julia raster, its topology, the
/// order invariants and the hyperbolicity check. Artifacts go to `out`
/// when given; `julia` replaces the word-union raster when given.
pub fn analyze(
    gens: &GeneratorSet,
    family: Option<FamilySpec>,
    opts: &Options,
    julia: Option<Grid>,
    out: Option<&Path>,
) -> Result<AnalysisReport, AnalysisError> {
    let mut clock = Clock::new(opts.timings);
    let (cloud, pcb) = postcritical_orbit(gens, opts.budget)?;
    clock.lap("pcb");
    let criteria = connectedness_criteria(gens);
    let affine = affine_section(gens)?;
    clock.lap("affine");
    let rasters = compute_rasters(gens, opts, julia)?;
    clock.lap("raster");

    let grid = &rasters.julia;
    let cs = label_components(grid);
    let topology = topology_report(gens, &cs, grid);
    let annulus = if cs.count >= 2 {
        separating_annuli(&cs, grid)
            .ok()
            .and_then(|a| a.into_iter().filter(|a| a.width_cells >= 1).max_by_key(|a| a.width_cells))
    } else {
        None
    };
    let invariants = find_extremes(&cs, grid).ok().map(|(j_min, _)| InvariantSection {
        khat_boundary: Some(khat_boundary_check(&rasters.escape, &cs, j_min)),
        preimage_avoidance: topology
            .partition
            .as_ref()
            .and_then(|p| preimage_avoidance_check(gens, &cs, grid, p).ok())
            .unwrap_or_default(),
    });
    clock.lap("topology");

    let pcb_tri: Tri = pcb.verdict.into();
    let hyperbolicity = (pcb_tri != Tri::No).then(|| {
        let frame: Frame = grid.frame;
        let margin = opts.margin.unwrap_or_else(|| default_margin(&frame));
        hyperbolic_check_on(&frame, &rasters.sample, &cloud, margin, pcb_tri)
    });
    clock.lap("hyperbolicity");

    let artifacts = match out {
        Some(dir) => write_artifacts(&rasters, dir, opts.png)?,
        None => Vec::new(),
    };
    clock.lap("artifacts");

    let raster = RasterSection {
        resolution: opts.resolution,
        word_len_used: rasters.word_len_used,
        julia_cells: grid.count(CellState::Boundary),
        trapped_cells: rasters.escape.count(CellState::Trapped),
        trapped_interior_cells: rasters.escape.interior_count(CellState::Trapped),
        sample_points: rasters.sample.points.len(),
    };
    Ok(AnalysisReport {
        schema: SCHEMA.to_string(),
        input: InputEcho {
            family,
            generators: gens.clone(),
            options: opts.clone(),
        },
        connectedness: Connectedness {
            verdict: verdict(&criteria, pcb_tri, annulus.as_ref()),
            criteria,
            separating_annulus: annulus,
        },
        pcb,
        affine,
        raster: Some(raster),
        topology: Some(topology),
        invariants,
        hyperbolicity,
        artifacts,
        timings: clock.finish(),
    })
}
