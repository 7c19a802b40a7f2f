//! `voi-workbench`: batch front end to the workbench.
//!
//! Every analysis runs in-process against a model file unless `--remote`
//! names a running service, in which case the model is uploaded into a
//! fresh session and the same request goes over HTTP. JSON output is the
//! same in both modes.
//!
//! Exit codes: 0 on success, 1 when a model, reference or request is
//! invalid, 2 on a usage error.

mod args;
mod remote;
mod render;

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use voi_core::model::file::{inspect_model, parse_model, save_model, RefineEntry};
use voi_core::sensitivity::{self, PlotFormat, DEFAULT_GRID};
use voi_core::voi::{self, DEFAULT_SAMPLES};
use voi_core::{intervals, DecisionModel, Diagnostic, ParamRef, ProbabilityInterval};
use voi_protocol::{Evaluation, RankResponse, DEFAULT_PORT};

use args::RefList;

#[derive(Parser, Debug)]
#[command(
    name = "voi-workbench",
    version,
    about = "Value-of-information analysis for discrete decision models"
)]
pub struct Cli {
    /// Output format; csv is available for `voi` and `sweep`
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Monte Carlo seed for `focus` and `rank`
    #[arg(long, global = true, env = "VOI_WORKBENCH_SEED", default_value_t = voi::DEFAULT_SEED)]
    pub seed: u64,

    /// Monte Carlo samples for `focus` and `rank`
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,

    /// Run against a workbench service at URL instead of in-process
    #[arg(long, global = true, value_name = "URL")]
    pub remote: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Marginals, expected utility of each alternative and the optimal one
    Eval { model: PathBuf },
    /// Condition a variable on new parents and write the refined model
    Refine {
        model: PathBuf,
        /// Unconditioned probability reference of the variable to refine
        #[arg(long, value_parser = args::param_ref)]
        target: ParamRef,
        /// JSON file with `parents` and `cpt`
        #[arg(long = "with", value_name = "CPT_FILE")]
        with: PathBuf,
        #[arg(short, long, value_name = "OUT")]
        output: PathBuf,
    },
    /// Value of perfect information on chance variables
    Voi {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, value_name = "VARS")]
        observe: Vec<String>,
    },
    /// Whether refining a cluster of annotated parameters is worth its cost
    Focus {
        model: PathBuf,
        #[arg(long, value_parser = args::ref_list, required = true, value_name = "REFS")]
        cluster: Vec<RefList>,
    },
    /// Refine recommendations for every annotated parameter, best first
    Rank { model: PathBuf },
    /// One-way sensitivity of expected utilities to one parameter
    Sweep {
        model: PathBuf,
        #[arg(long, value_parser = args::param_ref)]
        param: ParamRef,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Sweep range lo:hi (required for utilities)
        #[arg(long, value_parser = args::range, allow_hyphen_values = true, value_name = "LO:HI")]
        range: Option<(f64, f64)>,
    },
    /// Bounds on a marginal when probabilities are only known to intervals
    Bounds {
        model: PathBuf,
        #[arg(long = "interval", value_parser = args::interval_override, required = true, value_name = "REF=LO:HI")]
        intervals: Vec<(ParamRef, ProbabilityInterval)>,
        #[arg(long, value_parser = args::target, value_name = "VAR=OUTCOME")]
        target: (String, String),
    },
    /// Start the HTTP service
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
    },
    /// Check a model file and list every problem
    Validate { model: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Refine { .. } => "refine",
            Command::Voi { .. } => "voi",
            Command::Focus { .. } => "focus",
            Command::Rank { .. } => "rank",
            Command::Sweep { .. } => "sweep",
            Command::Bounds { .. } => "bounds",
            Command::Serve { .. } => "serve",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Result of one subcommand, rendered according to `--format`.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    Eval(Evaluation),
    Refine(RefineReport),
    Voi(voi::ObservationalVpiReport),
    Focus(voi::FocusReport),
    Rank(RankResponse),
    Sweep(sensitivity::SweepResult),
    Bounds(intervals::BoundsReport),
    Validate(ValidateReport),
}

#[derive(Debug, Serialize)]
pub struct RefineReport {
    pub output: PathBuf,
    pub evaluation: Evaluation,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }
}

impl From<voi_core::Error> for Failure {
    fn from(e: voi_core::Error) -> Self {
        let diagnostics = match &e {
            voi_core::Error::Invalid(d) => d.clone(),
            _ => Vec::new(),
        };
        Failure {
            code: 1,
            message: e.to_string(),
            diagnostics,
        }
    }
}

impl From<voi_client::ClientError> for Failure {
    fn from(e: voi_client::ClientError) -> Self {
        let diagnostics = match &e {
            voi_client::ClientError::Api { body, .. } => body.diagnostics.clone(),
            _ => Vec::new(),
        };
        Failure {
            code: 1,
            message: e.to_string(),
            diagnostics,
        }
    }
}

/// Parses `argv` (including the program name), runs the command and writes
/// its output. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            for d in &f.diagnostics {
                let _ = writeln!(stderr, "  {}: {}", d.subject, d.message);
            }
            f.code
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let name = cli.command.name();
    if cli.format == Format::Csv && !matches!(cli.command, Command::Voi { .. } | Command::Sweep { .. }) {
        return Err(Failure::usage(format!(
            "--format csv is not available for `{name}` (use text or json)"
        )));
    }
    if cli.remote.is_some() && matches!(cli.command, Command::Serve { .. } | Command::Validate { .. }) {
        return Err(Failure::usage(format!("--remote cannot be used with `{name}`")));
    }
    if let Command::Serve { port, host } = cli.command {
        return serve(SocketAddr::new(host, port));
    }
    let report = match &cli.remote {
        Some(url) => remote::execute(url, &cli)?,
        None => local(&cli)?,
    };
    let invalid = match &report {
        Report::Validate(v) if !v.valid => Some(v.diagnostics.len()),
        _ => None,
    };
    let bytes = render::render(&report, cli.format)?;
    out.write_all(&bytes)
        .map_err(|e| Failure::invalid(format!("cannot write output: {e}")))?;
    match (invalid, &cli.command) {
        (Some(n), Command::Validate { model }) => {
            Err(Failure::invalid(format!("{}: {n} problem(s) found", model.display())))
        }
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))
}

/// Loads and validates a model file; errors name the file.
pub(crate) fn load(path: &Path) -> Result<DecisionModel, Failure> {
    parse_model(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

pub(crate) fn load_extension(path: &Path) -> Result<RefineEntry, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::invalid(format!("{}: malformed refinement file: {e}", path.display())))
}

fn cluster(lists: &[RefList]) -> Vec<ParamRef> {
    lists.iter().flat_map(|l| l.0.iter().cloned()).collect()
}

fn local(cli: &Cli) -> Result<Report, Failure> {
    Ok(match &cli.command {
        Command::Eval { model } => Report::Eval(Evaluation::of(&load(model)?)?),
        Command::Refine {
            model,
            target,
            with,
            output,
        } => {
            let refined = load_extension(with)?.apply(&load(model)?, target)?;
            save_model(&refined, output)
                .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", output.display())))?;
            Report::Refine(RefineReport {
                output: output.clone(),
                evaluation: Evaluation::of(&refined)?,
            })
        }
        Command::Voi { model, observe } => Report::Voi(voi::observational_vpi(&load(model)?, observe)?),
        Command::Focus { model, cluster: refs } => {
            Report::Focus(voi::recommend(&load(model)?, &cluster(refs), cli.samples, cli.seed)?)
        }
        Command::Rank { model } => Report::Rank(RankResponse::from_ranking(voi::rank_parameters(
            &load(model)?,
            cli.samples,
            cli.seed,
        )?)),
        Command::Sweep {
            model,
            param,
            grid,
            range,
        } => Report::Sweep(sensitivity::sweep(&load(model)?, param, *grid, *range)?),
        Command::Bounds {
            model,
            intervals: overrides,
            target: (variable, outcome),
        } => Report::Bounds(intervals::marginal_bounds(
            &load(model)?,
            overrides,
            (variable, outcome),
        )?),
        Command::Validate { model } => {
            let diagnostics = inspect_model(&read(model)?).map_err(|e| {
                let mut f = Failure::from(e);
                f.message = format!("{}: {}", model.display(), f.message);
                f
            })?;
            Report::Validate(ValidateReport {
                valid: diagnostics.is_empty(),
                diagnostics,
            })
        }
        Command::Serve { .. } => unreachable!("serve is handled before dispatch"),
    })
}

fn serve(addr: SocketAddr) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info,tower_http=debug".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
    runtime()?
        .block_on(voi_service::serve(addr))
        .map_err(|e| Failure::invalid(format!("cannot serve on {addr}: {e}")))
}

pub(crate) fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::invalid(format!("cannot start runtime: {e}")))
}

pub(crate) fn plot_format(format: Format) -> Option<PlotFormat> {
    match format {
        Format::Csv => Some(PlotFormat::Csv),
        Format::Json => Some(PlotFormat::Json),
        Format::Text => None,
    }
}
