//! Command-line front end. [`run`] is the whole program minus process
//! plumbing, so it can be driven from tests.

pub mod report;
pub mod validate;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channels::{parse_pure_spec, XParams};
use crate::error::Error;

pub use report::{format_number, pure_row, write_rows, x_row, Evaluation, Format, ReportRow, COLUMNS};
pub use validate::{run_validation, ValidateConfig, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "xtele", version, about = "Teleportation fidelities over pure and X-state channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one channel and print a single report row.
    Eval(EvalArgs),
    /// Evaluate a channel over a one-parameter grid.
    Sweep(SweepArgs),
    /// Compare closed forms with quadrature, Monte Carlo and brute force.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Closed,
    Quad,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Pure channel, `alpha=<value>` with 0 ≤ alpha ≤ 1/√2.
    #[arg(long, conflicts_with = "x")]
    pure: Option<String>,
    /// X-state channel, `r11=..,r22=..,r33=..,r44=..,r14=..[,r23=..]`.
    #[arg(long)]
    x: Option<String>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Require r11·r44 > r22·r33.
    #[arg(long)]
    strict_principal: bool,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Flat `key=value` file mirroring the long flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    channel: ChannelArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// `param=start:stop:steps`; `param` is an X-state key or `alpha`.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random channels for the quadrature and brute-force checks.
    #[arg(long, default_value_t = 1000)]
    channels: usize,
    /// Random channels for the Monte Carlo check.
    #[arg(long, default_value_t = 50)]
    mc_channels: usize,
    /// Samples per Monte Carlo estimate.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb_closed: f64,
}

/// Fully resolved channel options after merging the config file.
#[derive(Debug, Clone, PartialEq)]
struct Resolved {
    channel: ChannelSpec,
    evaluation: Evaluation,
    strict: bool,
    format: Format,
    sweep: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum ChannelSpec {
    Pure(f64),
    X(XParams),
}

/// Parsed `--sweep` value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn parse(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("expected `param=start:stop:steps`, got `{s}`"));
        let (parameter, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let [start, stop, steps] = parts.as_slice() else {
            return Err(bad());
        };
        let num = |t: &str| -> Result<f64, Error> {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("`{t}` is not a finite number")))
        };
        let steps: usize = steps
            .parse()
            .map_err(|_| Error::Parse(format!("`{steps}` is not a step count")))?;
        if steps == 0 {
            return Err(Error::Parse("sweep needs at least one step".into()));
        }
        Ok(Self {
            parameter: parameter.trim().to_string(),
            start: num(start)?,
            stop: num(stop)?,
            steps,
        })
    }

    /// Grid values; a single step yields `start` alone.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.start + span * (i as f64 / last))
            .collect()
    }
}

/// Reads a flat `key=value` file. Blank lines and `#` comments are skipped;
/// keys may be written with or without the leading `--`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('-', "_");
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 8] = [
    "pure",
    "x",
    "method",
    "samples",
    "seed",
    "strict_principal",
    "format",
    "sweep",
];

fn resolve(args: ChannelArgs, sweep: Option<String>) -> Result<Resolved, Error> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some(unknown) = config.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::Parse(format!("unknown config key `{unknown}`")));
    }
    let from_config = |key: &str| config.get(key).cloned();

    // A channel given on the command line replaces either kind from the file.
    let (pure, x) = if args.pure.is_some() || args.x.is_some() {
        (args.pure, args.x)
    } else {
        (from_config("pure"), from_config("x"))
    };
    let channel = match (pure, x) {
        (Some(_), Some(_)) => return Err(Error::InvalidArgument("give either --pure or --x, not both".into())),
        (Some(p), None) => ChannelSpec::Pure(parse_pure_spec(&p)?),
        (None, Some(x)) => ChannelSpec::X(x.parse()?),
        (None, None) => return Err(Error::InvalidArgument("a channel is required: --pure or --x".into())),
    };

    let method = match args.method {
        Some(m) => m,
        None => match from_config("method") {
            Some(m) => MethodArg::from_str(&m, true)
                .map_err(|_| Error::Parse(format!("unknown method `{m}`")))?,
            None => MethodArg::Closed,
        },
    };
    let parse_num = |key: &str| -> Result<Option<u64>, Error> {
        from_config(key)
            .map(|v| v.parse::<u64>().map_err(|_| Error::Parse(format!("`{key}` must be an integer"))))
            .transpose()
    };
    let samples = match args.samples {
        Some(n) => n,
        None => parse_num("samples")?.map_or(DEFAULT_SAMPLES, |n| n as usize),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => parse_num("seed")?.unwrap_or(0),
    };
    let strict = args.strict_principal
        || match from_config("strict_principal").as_deref() {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => return Err(Error::Parse(format!("`strict_principal` must be true or false, got `{other}`"))),
        };
    let format = match args.format {
        Some(f) => f,
        None => match from_config("format") {
            Some(f) => FormatArg::from_str(&f, true).map_err(|_| Error::Parse(format!("unknown format `{f}`")))?,
            None => FormatArg::Csv,
        },
    };
    let evaluation = match method {
        MethodArg::Closed => Evaluation::Closed,
        MethodArg::Quad => Evaluation::Quadrature,
        MethodArg::Mc => {
            if samples < 2 {
                return Err(Error::InvalidArgument("--samples must be at least 2".into()));
            }
            Evaluation::MonteCarlo { samples, seed }
        }
    };
    Ok(Resolved {
        channel,
        evaluation,
        strict,
        format: match format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        sweep: sweep.or_else(|| from_config("sweep")),
    })
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("write failed: {e}"))
    }
}

fn input(e: Error) -> Failure {
    Failure::Input(e.to_string())
}

fn internal(e: Error) -> Failure {
    Failure::Internal(e.to_string())
}

fn eval_row(spec: &ChannelSpec, r: &Resolved) -> Result<ReportRow, Failure> {
    match spec {
        ChannelSpec::Pure(alpha) => pure_row(*alpha, r.evaluation).map_err(internal),
        ChannelSpec::X(p) => x_row(*p, r.strict, r.evaluation).map_err(internal),
    }
}

/// Explains why a channel is invalid, for the eval diagnostic.
fn channel_error(spec: &ChannelSpec, strict: bool) -> Option<Error> {
    match spec {
        ChannelSpec::Pure(alpha) => crate::channels::make_pure_channel(*alpha).err(),
        ChannelSpec::X(p) => crate::channels::XState::new(*p, strict).err(),
    }
}

fn cmd_eval<W: Write>(r: Resolved, out: &mut W) -> Result<(), Failure> {
    if let Some(e) = channel_error(&r.channel, r.strict) {
        return Err(Failure::Input(format!("invalid channel: {e}")));
    }
    let row = eval_row(&r.channel, &r)?;
    write_rows(out, &[row], r.format)?;
    Ok(())
}

fn cmd_sweep<W: Write>(r: Resolved, out: &mut W) -> Result<(), Failure> {
    let spec = r
        .sweep
        .as_deref()
        .ok_or_else(|| Failure::Input("--sweep param=start:stop:steps is required".into()))
        .and_then(|s| SweepSpec::parse(s).map_err(input))?;
    let points: Vec<ChannelSpec> = match &r.channel {
        ChannelSpec::Pure(_) => {
            if spec.parameter != "alpha" {
                return Err(Failure::Input(format!(
                    "pure channels sweep `alpha`, not `{}`",
                    spec.parameter
                )));
            }
            spec.values().into_iter().map(ChannelSpec::Pure).collect()
        }
        ChannelSpec::X(base) => {
            if base.get(&spec.parameter).is_none() {
                return Err(Failure::Input(format!(
                    "unknown sweep parameter `{}`; expected one of {}",
                    spec.parameter,
                    XParams::KEYS.join(", ")
                )));
            }
            spec.values()
                .into_iter()
                .map(|v| {
                    let mut p = *base;
                    p.set(&spec.parameter, v).expect("key checked above");
                    ChannelSpec::X(p)
                })
                .collect()
        }
    };
    let rows = points
        .iter()
        .map(|p| eval_row(p, &r))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.iter().all(|row| !row.valid) {
        return Err(Failure::Input(format!(
            "all {} sweep points describe invalid channels",
            rows.len()
        )));
    }
    write_rows(out, &rows, r.format)?;
    Ok(())
}

fn cmd_validate<W: Write>(a: ValidateArgs, out: &mut W) -> Result<bool, Failure> {
    if !a.perturb_closed.is_finite() {
        return Err(Failure::Input("--perturb-closed must be finite".into()));
    }
    let cfg = ValidateConfig {
        seed: a.seed,
        channels: a.channels,
        mc_channels: a.mc_channels,
        mc_samples: a.samples.max(2),
        perturb_closed: a.perturb_closed,
    };
    let report = run_validation(&cfg).map_err(internal)?;
    out.write_all(report.render().as_bytes())?;
    Ok(report.passed())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Eval(a) => resolve(a.channel, None)
            .map_err(input)
            .and_then(|r| cmd_eval(r, out))
            .map(|_| true),
        Command::Sweep(a) => resolve(a.channel, a.sweep)
            .map_err(input)
            .and_then(|r| cmd_sweep(r, out))
            .map(|_| true),
        Command::Validate(a) => cmd_validate(a, out),
    };
    let _ = out.flush();
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}
