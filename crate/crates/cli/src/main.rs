//! `entanglab`: drives the entanglab-core experiments from the shell.
//!
//! Every subcommand prints one table, as CSV (metadata in `#` comment
//! lines) or JSON (`{metadata, columns, rows}`). Given the same seed and
//! parameters the data section is byte-identical across runs and thread
//! counts; only the timestamp in the metadata moves.

mod config;
mod experiments;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::FileConfig;
use experiments::RunCtx;
use output::{num, Format, Table};

/// Failure taxonomy: usage and config mistakes exit 2, runtime failures
/// exit 1. All of them print a one-line JSON object on stderr.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Compute(String),
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Compute(_) => "compute",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Compute(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    fn render(&self) -> String {
        json!({ "error": { "kind": self.kind(), "message": self.message() } }).to_string()
    }
}

#[derive(Parser)]
#[command(name = "entanglab", version, about = "Finite-dimensional entanglement experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write the table to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed; every pseudo-random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file. Keys mirror the long flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = automatic). Also read from ENTANGLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

/// The squeezing parameter in either of its guises. Exactly one may be
/// given; the other is derived through λ = tanh r.
#[derive(Args, Clone)]
struct LambdaArgs {
    /// NOPA weight(s) λ in [0, 1), comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Option<Vec<f64>>,
    /// Squeezing strength(s) r >= 0, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    r: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Schmidt coefficients, weights, and entropy of a bipartite state.
    Schmidt {
        /// Local dimension.
        #[arg(long)]
        d: Option<usize>,
        /// omega (maximally entangled), random, or nopa.
        #[arg(long)]
        state: Option<String>,
        #[command(flatten)]
        lr: LambdaArgs,
        /// Fock truncation for the nopa state.
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// Entropy along the log-divergent family, one row per block size.
    EntropyDivergence {
        /// Block sizes, comma-separated.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Best product-state fidelity against the 1/d ceiling.
    NogoBound {
        /// Local dimensions, comma-separated.
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<usize>>,
        /// Haar samples per dimension.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// See-saw maximization of the CHSH value on a given state.
    BellSeesaw {
        /// singlet, product, or chain-pair.
        #[arg(long)]
        state: Option<String>,
        /// Random restarts on top of the saturating start.
        #[arg(long)]
        restarts: Option<usize>,
        /// Product states to draw (state = product only).
        #[arg(long)]
        samples: Option<usize>,
        /// Pair indices (state = chain-pair only); arbitrary-precision.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<String>>,
        /// Iteration cap per restart.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Expectation values of pair observables on the infinite chain.
    ChainExpect {
        /// Pair indices, comma-separated; arbitrary-precision.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<String>>,
        /// Width of the window the observable acts on.
        #[arg(long)]
        window: Option<usize>,
        /// JSON observable description (overrides the default family).
        #[arg(long)]
        obs_file: Option<PathBuf>,
        /// JSON chain-state description (defaults to the singlet chain).
        #[arg(long)]
        state_file: Option<PathBuf>,
    },
    /// Modular-operator identities on random full-rank states.
    Modular {
        /// Local dimension.
        #[arg(long)]
        d: Option<usize>,
        /// Number of random states.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Far-side doubles: exact on flat spectra, obstructed otherwise.
    Doubles {
        /// Local dimension.
        #[arg(long)]
        d: Option<usize>,
        /// Number of random observables.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Clock/shift expansion of the maximally entangled projector.
    WeylProjector {
        /// Local dimensions, comma-separated.
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<usize>>,
    },
    /// Qudit extraction from the two-mode squeezed state.
    NopaExtract {
        #[command(flatten)]
        lr: LambdaArgs,
        /// Extracted qudit dimension.
        #[arg(long)]
        d: Option<usize>,
        /// Fock truncation.
        #[arg(long)]
        trunc: Option<usize>,
        /// Extraction rounds; each round recurses on the coarse state.
        #[arg(long)]
        stages: Option<usize>,
    },
    /// Index-permutation defects on the two-mode squeezed state.
    NopaPerm {
        #[command(flatten)]
        lr: LambdaArgs,
        /// shift, swap, or even.
        #[arg(long)]
        perm: Option<String>,
        /// Shift distance (perm = shift only).
        #[arg(long)]
        ell: Option<usize>,
        /// Fock truncation.
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// EPR quadrature covariances, closed form against the Fock sum.
    EprCovariance {
        #[command(flatten)]
        lr: LambdaArgs,
        /// Fock truncation.
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// Two-mode characteristic function along and across the EPR axis.
    CharFn {
        #[command(flatten)]
        lr: LambdaArgs,
        /// Number of sample points on [0, max-arg].
        #[arg(long)]
        points: Option<usize>,
        /// Largest displacement argument.
        #[arg(long)]
        max_arg: Option<f64>,
        /// Fock truncation.
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// Root-of-unitary extraction fidelity on the periodized grid.
    GridExtract {
        #[command(flatten)]
        lr: LambdaArgs,
        /// Grid points per axis (power of two).
        #[arg(long)]
        l: Option<usize>,
        /// Requested half-extent in units of pi.
        #[arg(long)]
        extent_pi: Option<f64>,
        /// Root order.
        #[arg(long)]
        d: Option<usize>,
        /// Spectral offset of the root rays.
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        /// Snap the step count so the rooted pair commutes exactly.
        #[arg(long)]
        exact: bool,
        /// Dump the discretized state to this file (single λ only).
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.to_string());
            eprintln!("{}", err.render());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.render());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let GlobalOpts {
        format,
        out,
        seed,
        config,
        threads,
    } = cli.global;
    let cfg = FileConfig::load(config.as_deref())?;

    let format = match format.or(cfg.string("format")?) {
        Some(name) => Format::parse(&name).ok_or_else(|| {
            CliError::Config(format!("unknown format {name:?}: expected csv or json"))
        })?,
        None => Format::Csv,
    };
    let seed = seed.or(cfg.unsigned("seed")?).unwrap_or(0);
    let threads = requested_threads(threads, &cfg)?;
    let effective = init_workers(threads);
    let ctx = RunCtx {
        seed,
        threads: effective,
    };

    let mut table = dispatch(&ctx, cli.command, &cfg)?;
    finalize_metadata(&mut table, &ctx, format);

    let rendered = table.render(format);
    match out.or(cfg.string("out")?.map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, rendered)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            if let Err(e) = std::io::stdout().write_all(rendered.as_bytes()) {
                // A closed pipe downstream (e.g. `| head`) is not a failure.
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    return Ok(());
                }
                return Err(CliError::Io(format!("cannot write stdout: {e}")));
            }
        }
    }
    Ok(())
}

fn requested_threads(flag: Option<usize>, cfg: &FileConfig) -> Result<Option<usize>, CliError> {
    if let Some(t) = flag {
        return Ok(Some(t));
    }
    if let Ok(raw) = std::env::var("ENTANGLAB_THREADS") {
        let t = raw.parse::<usize>().map_err(|_| {
            CliError::Config(format!("ENTANGLAB_THREADS: cannot parse {raw:?} as a thread count"))
        })?;
        return Ok(Some(t));
    }
    Ok(cfg.unsigned("threads")?.map(|t| t as usize))
}

#[cfg(feature = "parallel")]
fn init_workers(requested: Option<usize>) -> usize {
    if let Some(t) = requested {
        // Errors only if a global pool already exists, which is fine here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn init_workers(_requested: Option<usize>) -> usize {
    1
}

fn finalize_metadata(table: &mut Table, ctx: &RunCtx, format: Format) {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    table.meta("version", Value::String(env!("CARGO_PKG_VERSION").into()));
    table.meta("threads", Value::from(ctx.threads));
    table.meta("timestamp_unix", Value::from(now));
    table.meta("seed", Value::from(ctx.seed));
    table.meta("format", Value::String(format.name().into()));
    table.meta("tol_structural", num(entanglab_core::TOL_STRUCTURAL));
    table.meta("tol_spectral", num(entanglab_core::TOL_SPECTRAL));
    table.meta("tol_modular", num(entanglab_core::TOL_MODULAR));
    table.meta("tol_defect", num(entanglab_core::TOL_DEFECT));
    table.meta("tol_centralizer", num(entanglab_core::TOL_CENTRALIZER));
    table.meta("tol_seesaw", num(entanglab_core::TOL_SEESAW));
    table.meta(
        "tol_grid_commutation",
        num(entanglab_core::TOL_GRID_COMMUTATION),
    );
}

/// Flag value if given, else the config key, else the built-in default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// λ/r merge: if either flag appears the pair is resolved from flags
/// alone, otherwise from the config file, otherwise from the default.
fn lambda_pairs(
    lr: &LambdaArgs,
    cfg: &FileConfig,
    default_lambda: Option<&[f64]>,
    default_r: Option<&[f64]>,
) -> Result<Vec<(f64, f64)>, CliError> {
    let (lambda, r) = if lr.lambda.is_some() || lr.r.is_some() {
        (lr.lambda.clone(), lr.r.clone())
    } else {
        (cfg.float_list("lambda")?, cfg.float_list("r")?)
    };
    if lambda.is_none() && r.is_none() {
        if let Some(ls) = default_lambda {
            return experiments::resolve_lambda_r(Some(ls.to_vec()), None);
        }
        if let Some(rs) = default_r {
            return experiments::resolve_lambda_r(None, Some(rs.to_vec()));
        }
    }
    experiments::resolve_lambda_r(lambda, r)
}

fn dispatch(ctx: &RunCtx, command: Command, cfg: &FileConfig) -> Result<Table, CliError> {
    match command {
        Command::Schmidt { d, state, lr, trunc } => {
            let d = pick(d, cfg.unsigned("d")?.map(|v| v as usize), 4);
            let state = pick(state, cfg.string("state")?, "omega".into());
            let trunc = pick(trunc, cfg.unsigned("trunc")?.map(|v| v as usize), 64);
            // λ/r stay optional here; only the nopa state consumes them.
            let has_flags = lr.lambda.is_some() || lr.r.is_some();
            let has_cfg = cfg.float_list("lambda")?.is_some() || cfg.float_list("r")?.is_some();
            let pairs = if has_flags || (state == "nopa" && has_cfg) {
                Some(lambda_pairs(&lr, cfg, None, None)?)
            } else {
                None
            };
            experiments::schmidt(ctx, d, &state, pairs, trunc)
        }
        Command::EntropyDivergence { n } => {
            let ns = pick(n, cfg.unsigned_list("n")?, vec![100, 1000, 10000]);
            experiments::entropy_divergence(ctx, ns)
        }
        Command::NogoBound { d, samples } => {
            let ds = pick(d, cfg.unsigned_list("d")?, vec![2, 3, 4]);
            let samples = pick(samples, cfg.unsigned("samples")?.map(|v| v as usize), 1000);
            experiments::nogo_bound(ctx, ds, samples)
        }
        Command::BellSeesaw {
            state,
            restarts,
            samples,
            k,
            max_iters,
        } => {
            let state = pick(state, cfg.string("state")?, "singlet".into());
            let restarts = pick(restarts, cfg.unsigned("restarts")?.map(|v| v as usize), 8);
            let samples = pick(samples, cfg.unsigned("samples")?.map(|v| v as usize), 10);
            let ks = pick(k, cfg.string_list("k")?, vec!["0".into()]);
            let max_iters = pick(max_iters, cfg.unsigned("max_iters")?.map(|v| v as usize), 500);
            experiments::bell_seesaw(ctx, &state, restarts, samples, ks, max_iters)
        }
        Command::ChainExpect {
            k,
            window,
            obs_file,
            state_file,
        } => {
            let ks = pick(
                k,
                cfg.string_list("k")?,
                vec!["0".into(), "10".into(), "1000000".into()],
            );
            let window = pick(window, cfg.unsigned("window")?.map(|v| v as usize), 1_000_000_000);
            let obs_file = obs_file.or(cfg.string("obs_file")?.map(PathBuf::from));
            let state_file = state_file.or(cfg.string("state_file")?.map(PathBuf::from));
            experiments::chain_expect(ctx, ks, window, obs_file.as_deref(), state_file.as_deref())
        }
        Command::Modular { d, samples } => {
            let d = pick(d, cfg.unsigned("d")?.map(|v| v as usize), 4);
            let samples = pick(samples, cfg.unsigned("samples")?.map(|v| v as usize), 100);
            experiments::modular_suite(ctx, d, samples)
        }
        Command::Doubles { d, samples } => {
            let d = pick(d, cfg.unsigned("d")?.map(|v| v as usize), 3);
            let samples = pick(samples, cfg.unsigned("samples")?.map(|v| v as usize), 20);
            experiments::doubles(ctx, d, samples)
        }
        Command::WeylProjector { d } => {
            let ds = pick(d, cfg.unsigned_list("d")?, vec![2, 3, 5]);
            experiments::weyl_projector(ctx, ds)
        }
        Command::NopaExtract { lr, d, trunc, stages } => {
            let pairs = lambda_pairs(&lr, cfg, Some(&[0.9]), None)?;
            let d = pick(d, cfg.unsigned("d")?.map(|v| v as usize), 2);
            let trunc = pick(trunc, cfg.unsigned("trunc")?.map(|v| v as usize), 256);
            let stages = pick(stages, cfg.unsigned("stages")?.map(|v| v as usize), 1);
            experiments::nopa_extract(ctx, pairs, d, trunc, stages)
        }
        Command::NopaPerm { lr, perm, ell, trunc } => {
            let pairs = lambda_pairs(&lr, cfg, Some(&[0.9]), None)?;
            let perm = pick(perm, cfg.string("perm")?, "shift".into());
            let ell = pick(ell, cfg.unsigned("ell")?.map(|v| v as usize), 1);
            let trunc = pick(trunc, cfg.unsigned("trunc")?.map(|v| v as usize), 512);
            experiments::nopa_perm(ctx, pairs, &perm, ell, trunc)
        }
        Command::EprCovariance { lr, trunc } => {
            let pairs = lambda_pairs(&lr, cfg, None, Some(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]))?;
            let trunc = pick(trunc, cfg.unsigned("trunc")?.map(|v| v as usize), 512);
            experiments::epr_covariance(ctx, pairs, trunc)
        }
        Command::CharFn {
            lr,
            points,
            max_arg,
            trunc,
        } => {
            let pairs = lambda_pairs(&lr, cfg, None, Some(&[1.0]))?;
            let points = pick(points, cfg.unsigned("points")?.map(|v| v as usize), 9);
            let max_arg = pick(max_arg, cfg.float("max_arg")?, 2.0);
            let trunc = pick(trunc, cfg.unsigned("trunc")?.map(|v| v as usize), 64);
            experiments::char_fn(ctx, pairs, points, max_arg, trunc)
        }
        Command::GridExtract {
            lr,
            l,
            extent_pi,
            d,
            a,
            exact,
            export,
        } => {
            let pairs = lambda_pairs(&lr, cfg, None, Some(&[0.0, 1.0, 2.0, 3.0]))?;
            let l = pick(l, cfg.unsigned("l")?.map(|v| v as usize), 512);
            let extent_pi = pick(extent_pi, cfg.float("extent_pi")?, 12.0);
            let d = pick(d, cfg.unsigned("d")?.map(|v| v as usize), 2);
            let a = pick(a, cfg.float("a")?, 0.0);
            let exact = exact || cfg.boolean("exact")?.unwrap_or(false);
            let export = export.or(cfg.string("export")?.map(PathBuf::from));
            experiments::grid_extract(ctx, pairs, l, extent_pi, d, a, exact, export.as_deref())
        }
    }
}
