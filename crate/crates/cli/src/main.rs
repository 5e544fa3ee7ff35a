//! `psg`: command-line front end for polynomial semigroup analysis.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polysemigroup::analysis::{self, compute_rasters, write_artifacts, AnalysisError, Options};
use polysemigroup::families::{FamilyRequest, FamilySpec};
use polysemigroup::raster::Grid;
use polysemigroup::GeneratorSet;

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "psg", version, about = "Analyze finitely generated polynomial semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Postcritical boundedness, connectedness criteria and the affine count bound.
    Check(Common),
    /// Escape, Julia and sample images plus grid dumps.
    Render(Common),
    /// Full pipeline including topology and hyperbolicity.
    Analyze(AnalyzeArgs),
    /// Emit a family's generator JSON.
    Construct(Source),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Generator JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// sy | figure1 | fincomp:n,eps,l | countprop:eps,l | logistic:a,b,c;... | perturb[:d,r]
    #[arg(long)]
    family: Option<String>,
}

#[derive(Args, Debug)]
struct Common {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    #[arg(long, default_value_t = 5)]
    word_len: usize,
    #[arg(long, default_value_t = 1_000_000)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hyperbolicity margin; two cell diagonals by default.
    #[arg(long)]
    margin: Option<f64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Omit stage timings from the report.
    #[arg(long)]
    no_timings: bool,
    /// Also write PNG images.
    #[arg(long)]
    png: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Use this PSGRID dump as the Julia raster instead of the word union.
    #[arg(long)]
    raster: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Family(#[from] polysemigroup::families::FamilyError),
    #[error(transparent)]
    Semigroup(#[from] polysemigroup::semigroup::SemigroupError),
    #[error(transparent)]
    Raster(#[from] polysemigroup::raster::RasterError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(source: &Source) -> Result<(Option<FamilySpec>, GeneratorSet), CliError> {
    match (&source.input, &source.family) {
        (Some(path), None) => Ok((None, GeneratorSet::from_json(&read(path)?)?)),
        (None, Some(spec)) => {
            let request: FamilyRequest = spec.parse().map_err(|e: polysemigroup::families::FamilyError| CliError::Usage(e.to_string()))?;
            let (spec, gens) = request.build()?;
            Ok((Some(spec), gens))
        }
        _ => Err(CliError::Usage("exactly one of --input or --family is required".into())),
    }
}

fn options(c: &Common) -> Result<Options, CliError> {
    if c.resolution < polysemigroup::raster::MIN_RESOLUTION {
        return Err(CliError::Usage(format!("--resolution must be at least {}", polysemigroup::raster::MIN_RESOLUTION)));
    }
    if c.word_len == 0 || c.points == 0 {
        return Err(CliError::Usage("--word-len and --points must be positive".into()));
    }
    if let Some(m) = c.margin {
        if !(m >= 0.0) {
            return Err(CliError::Usage("--margin must be non-negative".into()));
        }
    }
    Ok(Options {
        resolution: c.resolution,
        word_len: c.word_len,
        points: c.points,
        seed: c.seed,
        margin: c.margin,
        timings: !c.no_timings,
        png: c.png,
        ..Options::default()
    })
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

/// Writes to stdout; a closed pipe is not an error.
fn say(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

/// Prints the report and writes `report.json` under `out`.
fn emit(report: &analysis::AnalysisReport, out: Option<&Path>) -> Result<u8, CliError> {
    let json = report.to_json()?;
    if let Some(dir) = out {
        write(&dir.join("report.json"), &json)?;
    }
    say(&json)?;
    Ok(report.exit_code() as u8)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Check(c) => {
            set_threads(c.threads)?;
            let opts = options(&c)?;
            let (family, gens) = load(&c.source)?;
            let report = analysis::check(&gens, family, &opts)?;
            emit(&report, c.out.as_deref())
        }
        Command::Analyze(a) => {
            let c = &a.common;
            set_threads(c.threads)?;
            let opts = options(c)?;
            let (family, gens) = load(&c.source)?;
            let julia = match &a.raster {
                Some(path) => Some(Grid::from_psgrid(&read(path)?)?),
                None => None,
            };
            let report = analysis::analyze(&gens, family, &opts, julia, c.out.as_deref())?;
            emit(&report, c.out.as_deref())
        }
        Command::Render(c) => {
            set_threads(c.threads)?;
            let opts = options(&c)?;
            let (_, gens) = load(&c.source)?;
            let rasters = compute_rasters(&gens, &opts, None)?;
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let artifacts = write_artifacts(&rasters, &dir, opts.png)?;
            let doc = serde_json::json!({ "schema": analysis::SCHEMA, "artifacts": artifacts });
            say(&(serde_json::to_string_pretty(&doc).expect("plain JSON") + "\n"))?;
            Ok(0)
        }
        Command::Construct(s) => {
            let (_, gens) = load(&s)?;
            say(&(gens.to_json()? + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("psg: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("psg: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
