//! `latcosine` command-line front-end.
//!
//! Exit codes: 0 on success, 1 when a numerical contract fails (a check,
//! a series tolerance, a resource limit), 2 on usage errors.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use latcosine::approx::{
    approximate, exact_l2_error, random_cosine_polynomial, wce_upper_bound, CoefficientMap,
};
use latcosine::cbc::{cbc_construct, CbcConfig, Criterion, Engine};
use latcosine::hypercross::{default_q_grid, enumerate_h, min_cardinality_bound};
use latcosine::lattice::{lattice_points, transform_points, GeneratingVector, Shift};
use latcosine::wce::{wce_cosine_tented, wce_korobov_dual, wce_korobov_lattice, wce_rms_shifted, WceReport};
use latcosine::{Error, SpaceParams, WeightSpec, SCHEMA};

pub mod check;
pub mod study;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("{0}")]
    Contract(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(e) => match e {
                Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::NotPrime(_)
                | Error::Infeasible(_)
                | Error::Unsupported(_)
                | Error::Parse(_) => 2,
                Error::SeriesTolerance { .. } | Error::IndexSetTooLarge { .. } | Error::MemoryLimit { .. } => 1,
            },
            CliError::Contract(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "latcosine", version, about = "Tent-transformed lattice rules in weighted cosine spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Smoothness alpha > 1/2.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// `c=<c>,eta=<eta>` for gamma_j = c j^-eta, or a comma-separated list.
    #[arg(long, default_value = "c=1,eta=2")]
    pub weights: WeightSpec,
}

impl SpaceArgs {
    fn build(&self, d: usize) -> CliResult<SpaceParams> {
        Ok(SpaceParams::from_spec(self.alpha, self.weights.clone(), d)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub n: u64,
    /// Generating vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub z: Vec<i64>,
    /// Optional check on the dimension of `--z`.
    #[arg(long)]
    pub d: Option<usize>,
}

impl LatticeArgs {
    fn build(&self) -> CliResult<GeneratingVector> {
        if let Some(d) = self.d {
            if d != self.z.len() {
                return Err(CliError::Usage(format!("--d {d} but --z has {} components", self.z.len())));
            }
        }
        Ok(GeneratingVector::new(self.n, &self.z)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Korobov,
    KorobovHalved,
    Approximation,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Korobov => Criterion::KorobovIntegration,
            CriterionArg::KorobovHalved => Criterion::KorobovIntegrationHalved,
            CriterionArg::Approximation => Criterion::ApproximationE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Plain,
    Fast,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Plain => Engine::Plain,
            EngineArg::Fast => Engine::Fast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WceKind {
    All,
    Korobov,
    Tented,
    Rms,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice points, optionally shifted and tent-transformed.
    Points {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_delimiter = ',')]
        shift: Option<Vec<f64>>,
        #[arg(long)]
        tent: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Component-by-component construction of a generating vector.
    Cbc {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Fast)]
        engine: EngineArg,
        #[arg(long, value_enum, default_value_t = CriterionArg::Korobov)]
        criterion: CriterionArg,
        /// Hyperbolic cross parameter for the approximation criterion.
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        /// `csv` prints the z-file, `json` the summary; `--out` writes the
        /// z-file there and the summary next to it with a `.json` suffix.
        #[command(flatten)]
        out: OutArgs,
    },
    /// Squared worst-case errors of a given lattice rule, plus the
    /// cosine-tented over Korobov ratio when both dual sums are computed.
    Wce {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value_t = WceKind::All)]
        method: WceKind,
        /// Dual truncation box; defaults to max(32, 4n).
        #[arg(long = "box")]
        bound: Option<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Weighted hyperbolic cross enumeration.
    Hypercross {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long = "M")]
        m: f64,
        /// Enumerate all octants instead of the non-negative one.
        #[arg(long)]
        signed: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Approximate a cosine polynomial from lattice samples and report its
    /// exact error and the worst-case bound.
    Approx {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long = "M")]
        m: f64,
        /// Coefficients as JSON lines `{k, re, im}`; a random unit-norm
        /// polynomial is drawn when absent.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "box", default_value_t = 64)]
        bound: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a convergence or consistency study from a JSON spec.
    Study {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output prefix in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Check {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latcosine: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Writes `text` to `path`, or to `stdout` when no path is given.
pub(crate) fn emit(stdout: &mut dyn Write, path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

pub fn run(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Points { lattice, shift, tent, out } => {
            let gen = lattice.build()?;
            let shift = shift.map(Shift::new).transpose()?;
            let ps = transform_points(&lattice_points(&gen), shift.as_ref(), tent)?;
            let text = match out.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    ps.write_csv(&mut buf).expect("write to memory");
                    String::from_utf8(buf).expect("ascii")
                }
                Format::Json => json_line(&serde_json::json!({
                    "schema": SCHEMA,
                    "n": gen.n(),
                    "z": gen.z(),
                    "kind": ps.kind(),
                    "points": ps.to_rows(),
                })),
            };
            emit(stdout, out.out.as_deref(), &text)
        }
        Command::Cbc {
            n,
            d,
            space,
            engine,
            criterion,
            m,
            kappa,
            out,
        } => {
            let params = space.build(d)?;
            let mut cfg = CbcConfig::new(n, params, criterion.into(), engine.into());
            cfg.m = m;
            cfg.kappa = kappa;
            let res = cbc_construct(&cfg)?;
            let json = format!("{}\n", res.to_json());
            match (&out.out, out.format) {
                (Some(path), _) => {
                    emit(stdout, Some(path), &res.z_file())?;
                    emit(stdout, Some(&with_suffix(path, ".json")), &json)
                }
                (None, Format::Csv) => emit(stdout, None, &res.z_file()),
                (None, Format::Json) => emit(stdout, None, &json),
            }
        }
        Command::Wce {
            lattice,
            space,
            method,
            bound,
            out,
        } => {
            let gen = lattice.build()?;
            let params = space.build(gen.dim())?;
            let mut rows: Vec<(&str, WceReport)> = Vec::new();
            if matches!(method, WceKind::All | WceKind::Korobov) {
                rows.push(("korobov-closed-form", wce_korobov_lattice(&params, &gen)?));
                rows.push(("korobov-dual", wce_korobov_dual(&params, &gen, bound)?));
            }
            if matches!(method, WceKind::All | WceKind::Tented) {
                rows.push(("tented-cosine-dual", wce_cosine_tented(&params, &gen, bound)?));
            }
            if matches!(method, WceKind::All | WceKind::Rms) {
                let rms = wce_rms_shifted(&params, &gen, bound)?;
                rows.push(("rms-kernel-form", rms.kernel_form));
                rows.push(("rms-dual", rms.dual_sum));
            }
            // cosine-tented over Korobov on the same dual box; never above one
            let find = |key: &str| rows.iter().find(|(name, _)| *name == key).map(|(_, r)| r.squared_error);
            let ratio = match (find("tented-cosine-dual"), find("korobov-dual")) {
                (Some(t), Some(k)) if k > 0.0 => Some(t / k),
                _ => None,
            };
            let text = match out.format {
                Format::Csv => {
                    let mut s = String::from("quantity,method,squared_error,truncation_bound,clamped\n");
                    for (name, r) in &rows {
                        let method = serde_json::to_value(r.method).expect("enum");
                        s += &format!(
                            "{name},{},{:.17e},{:.17e},{}\n",
                            method.as_str().unwrap_or_default(),
                            r.squared_error,
                            r.truncation_bound,
                            r.clamped
                        );
                    }
                    if let Some(ratio) = ratio {
                        s += &format!("sign-factor-ratio,ratio,{ratio:.17e},,\n");
                    }
                    s
                }
                Format::Json => {
                    let reports: serde_json::Map<String, serde_json::Value> = rows
                        .iter()
                        .map(|(name, r)| (name.to_string(), serde_json::to_value(r).expect("report")))
                        .collect();
                    json_line(&serde_json::json!({
                        "schema": SCHEMA,
                        "n": gen.n(),
                        "z": gen.z(),
                        "reports": reports,
                        "sign_factor_ratio": ratio,
                    }))
                }
            };
            emit(stdout, out.out.as_deref(), &text)
        }
        Command::Hypercross {
            d,
            space,
            m,
            signed,
            out,
        } => {
            let params = space.build(d)?;
            let set = enumerate_h(&params, m, signed)?;
            let text = match out.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    set.write_csv(&mut buf).expect("write to memory");
                    String::from_utf8(buf).expect("ascii")
                }
                Format::Json => {
                    let (q, bound) = min_cardinality_bound(&params, m, &default_q_grid(params.alpha()))?;
                    json_line(&serde_json::json!({
                        "schema": SCHEMA,
                        "M": m,
                        "signed": signed,
                        "len": set.len(),
                        "cardinality_bound": bound,
                        "q": q,
                        "indices": set.as_slice(),
                    }))
                }
            };
            emit(stdout, out.out.as_deref(), &text)
        }
        Command::Approx {
            lattice,
            space,
            m,
            coeffs,
            terms,
            seed,
            bound,
            out,
        } => {
            let gen = lattice.build()?;
            let params = space.build(gen.dim())?;
            let f = match coeffs {
                Some(path) => {
                    let file = fs::File::open(&path).map_err(io_err(&path))?;
                    CoefficientMap::read_jsonl(BufReader::new(file), gen.dim())?
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    random_cosine_polynomial(&params, 4.0 * m, terms, &mut rng)?
                }
            };
            let res = approximate(|x: &[f64]| f.eval(x), &gen, &params, m)?;
            let error = exact_l2_error(&f, &gen, &params, m)?;
            let wb = wce_upper_bound(&params, &gen, m, bound)?;
            let text = match out.format {
                Format::Csv => {
                    let mut s = String::new();
                    for (k, c) in res.coeffs.iter() {
                        let k: Vec<String> = k.iter().map(i32::to_string).collect();
                        s += &format!("{},{:.17e},{:.17e}\n", k.join(","), c.re, c.im);
                    }
                    s
                }
                Format::Json => json_line(&serde_json::json!({
                    "schema": SCHEMA,
                    "n": gen.n(),
                    "z": gen.z(),
                    "M": m,
                    "norm_sq": f.space_norm_sq(&params),
                    "exact_l2_error": error,
                    "wce_bound": wb.value(),
                    "aliasing": wb.aliasing,
                    "truncation_bound": wb.truncation_bound,
                    "approximation": serde_json::from_str::<serde_json::Value>(&res.to_json()).expect("json"),
                })),
            };
            emit(stdout, out.out.as_deref(), &text)
        }
        Command::Study { spec, seed, out } => {
            let text = fs::read_to_string(&spec).map_err(io_err(&spec))?;
            let mut spec: study::StudySpec =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("study spec: {e}")))?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(out) = out {
                spec.output = Some(out);
            }
            let artifact = study::run_study(&spec)?;
            match &spec.output {
                Some(prefix) => {
                    emit(stdout, Some(&with_suffix(prefix, ".csv")), &artifact.csv)?;
                    emit(stdout, Some(&with_suffix(prefix, ".json")), &artifact.summary_json())?;
                }
                None => {
                    emit(stdout, None, &artifact.csv)?;
                    emit(stdout, None, &artifact.summary_json())?;
                }
            }
            if artifact.passed {
                Ok(())
            } else {
                Err(CliError::Contract(format!("study {:?} reported failures", spec.mode)))
            }
        }
        Command::Check { format } => {
            let outcomes = check::run_checks();
            let text = check::render(&outcomes, format);
            emit(stdout, None, &text)?;
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Contract(format!("{failed} invariant checks failed")))
            }
        }
    }
}
