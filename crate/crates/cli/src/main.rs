//! `epigame`: trace, simulate, enumerate and compare best-response epidemic
//! processes from the command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 horizon exhausted before
//! absorption, 3 no closed-form law for the parameters, 4 resource cap hit.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epigame_core::dynamics::{AgentSequence, MonteCarloOptions, RunOptions, DEFAULT_EPOCHS_PER_AGENT};
use epigame_core::enumeration::{absorbed_mass, settled_mass, EnumerateOptions};
use epigame_core::numeric::{ratio_to_f64, render_decimal, render_rational, RationalString};
use epigame_core::report::{
    build_table, chi_square, convergence_series, parse_grid, render_csv, render_series_csv, reference_grid, tv_distance,
    Method, REFERENCE_HORIZON,
};
use epigame_core::theory::classify_regime;
use epigame_core::{
    enumerate_exact, limit_law, monte_carlo, run_dvsp, with_config, with_threads, AnyConfig, Arithmetic, ConfigSpec,
    Error, ModelConfig, Rational, Scalar, DEFAULT_SUPPORT_CAP,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "epigame", version, about = "Best-response epidemic dynamics: trajectories, exact laws and limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one process along an explicit agent sequence and print its trajectory as JSON lines.
    Trace(TraceArgs),
    /// Sample the limit law by Monte Carlo.
    Simulate(SimulateArgs),
    /// Exact law of the state after a fixed number of epochs.
    Enumerate(EnumerateArgs),
    /// Closed-form limit law.
    Theory(TheoryArgs),
    /// Compare enumerated or sampled laws with the closed forms over a grid.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of agents.
    #[arg(long)]
    n: Option<usize>,
    /// Initial action of every agent ("p/q", decimal or integer).
    #[arg(long)]
    a: Option<String>,
    /// Immunity of every agent.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long, value_enum)]
    arithmetic: Option<ArithmeticArg>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Digits after the decimal point in rendered probabilities.
    #[arg(long, default_value_t = 3)]
    precision: usize,
    /// Worker threads for parallel engines.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated 1-based agent labels.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    seq: String,
    /// Stop after this many epochs (defaults to the sequence length).
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Keep following the sequence after absorption.
    #[arg(long)]
    run_through: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    /// Per-sample epoch budget (defaults to 64·n).
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of epochs (transitions) to apply to the initial state.
    #[arg(long)]
    horizon: usize,
    /// Abort once the support exceeds this many states.
    #[arg(long, default_value_t = DEFAULT_SUPPORT_CAP)]
    support_cap: usize,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Grid of (a, tau[, horizon]) points as JSON or CSV; defaults to the built-in reference grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Horizon for grid points that do not set one.
    #[arg(long, default_value_t = REFERENCE_HORIZON)]
    horizon: usize,
    #[arg(long, value_enum, default_value = "enumerate")]
    method: MethodArg,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Required with --method monte-carlo.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SUPPORT_CAP)]
    support_cap: usize,
    /// Emit the (horizon, tv distance) series of the configured point instead of a table.
    #[arg(long)]
    plot_data: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ArithmeticArg {
    Rational,
    Float,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Enumerate,
    MonteCarlo,
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Uncovered { .. } => 3,
            Error::SupportCapExceeded { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn build_spec(common: &Common) -> Result<ConfigSpec, Failure> {
    let mut spec = match &common.config {
        Some(path) => ConfigSpec::from_path(path)?,
        None => ConfigSpec::default(),
    };
    if let Some(n) = common.n {
        spec.n = Some(n);
    }
    if let Some(a) = &common.a {
        spec.set_a(a);
    }
    if let Some(tau) = &common.tau {
        spec.set_tau(tau);
    }
    if let Some(arith) = common.arithmetic {
        spec.arithmetic = Some(match arith {
            ArithmeticArg::Rational => Arithmetic::Rational,
            ArithmeticArg::Float => Arithmetic::Float,
        });
    }
    Ok(spec)
}

fn build_config(common: &Common) -> Result<AnyConfig, Failure> {
    Ok(AnyConfig::from_spec(&build_spec(common)?)?)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn emit_json(common: &Common, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    emit(common, &text)
}

fn parse_sequence(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Failure::usage(format!("bad agent label {s:?} in --seq")))
        })
        .collect()
}

fn trace(args: &TraceArgs) -> CmdResult {
    let any = build_config(&args.common)?;
    let labels = parse_sequence(&args.seq)?;
    let seq = AgentSequence::from_labels(&labels)?;
    seq.validate(any.n())?;
    let mut opts = RunOptions::new(args.max_epochs.unwrap_or(labels.len()));
    if args.run_through {
        opts = opts.run_through();
    }
    let format = args.common.format.unwrap_or(Format::Json);
    let absorbed = with_config!(&any, cfg => {
        let t = run_dvsp(cfg, &seq, opts)?;
        let text = match format {
            Format::Json => t.to_json_lines()?,
            Format::Csv => {
                let mut out = String::from("epoch,chosen,infected,actions\n");
                let row = |epoch: String, chosen: String, s: &epigame_core::State<_>| {
                    let infected: Vec<String> = s.infected.to_labels().iter().map(usize::to_string).collect();
                    let actions: Vec<String> = s.actions.iter().map(Scalar::render).collect();
                    format!("{epoch},{chosen},\"{}\",\"{}\"\n", infected.join(" "), actions.join(" "))
                };
                out.push_str(&row("0".into(), String::new(), &t.initial));
                for r in &t.records {
                    out.push_str(&row((r.epoch + 1).to_string(), (r.chosen + 1).to_string(), &r.next));
                }
                out
            }
        };
        emit(&args.common, &text)?;
        t.absorbed
    });
    if absorbed {
        Ok(0)
    } else {
        eprintln!("epigame: sequence exhausted before absorption");
        Ok(2)
    }
}

/// Closed-form size law for a homogeneous config, if one exists.
fn theory_for<S: Scalar>(cfg: &ModelConfig<S>) -> Option<Vec<Rational>> {
    let (a, tau) = cfg.homogeneous_params()?;
    limit_law(cfg.n, &a.to_rational(), &tau.to_rational()).ok().map(|l| l.size_law())
}

fn simulate(args: &SimulateArgs) -> CmdResult {
    let any = build_config(&args.common)?;
    let opts = MonteCarloOptions {
        samples: args.samples,
        seed: args.seed,
        max_epochs: args.max_epochs.unwrap_or(DEFAULT_EPOCHS_PER_AGENT * any.n()),
        threads: args.common.threads,
    };
    let precision = args.common.precision;
    let (report, theory) = with_config!(&any, cfg => (monte_carlo(cfg, opts)?, theory_for(cfg)));
    let export = report.export(&opts, precision);
    match args.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut value = serde_json::to_value(&export).map_err(Error::from)?;
            let map = value.as_object_mut().expect("export is an object");
            map.insert("arithmetic".into(), json!(any_arithmetic(&any)));
            if let Some(t) = &theory {
                let expected: Vec<f64> = t.iter().map(ratio_to_f64).collect();
                let tv = tv_distance(&report.law.size_law_f64(), &expected)?;
                let chi = chi_square(&report.law.size_counts, &expected)?;
                map.insert(
                    "theory".into(),
                    json!({
                        "size_law": t.iter().map(render_rational).collect::<Vec<_>>(),
                        "size_law_decimal": t.iter().map(|p| render_decimal(p, precision)).collect::<Vec<_>>(),
                        "tv_distance": tv,
                        "chi_square": chi,
                    }),
                );
            } else {
                map.insert("theory".into(), Value::Null);
            }
            emit_json(&args.common, &value)?;
        }
        Format::Csv => {
            let mut out = String::from("size,count,frequency,theoretical\n");
            for (m, count) in report.law.size_counts.iter().enumerate() {
                let freq = render_decimal(&export.size_law[m].0, precision);
                let th = theory.as_ref().map(|t| render_decimal(&t[m], precision)).unwrap_or_default();
                out.push_str(&format!("{},{count},{freq},{th}\n", m + 1));
            }
            emit(&args.common, &out)?;
        }
    }
    Ok(0)
}

fn any_arithmetic(any: &AnyConfig) -> &'static str {
    match any {
        AnyConfig::Rational(_) => "rational",
        AnyConfig::Float(_) => "float",
    }
}

fn enumerate(args: &EnumerateArgs) -> CmdResult {
    let any = build_config(&args.common)?;
    let cfg = any.exact()?;
    let opts = EnumerateOptions {
        horizon: args.horizon,
        support_cap: args.support_cap,
    };
    let dist = with_threads(args.common.threads, || enumerate_exact(cfg, opts))??;
    let precision = args.common.precision;
    let export = dist.export(precision);
    match args.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut value = serde_json::to_value(&export).map_err(Error::from)?;
            let map = value.as_object_mut().expect("export is an object");
            map.insert("settled_mass".into(), json!(RationalString(settled_mass(&dist, cfg))));
            map.insert("absorbed_mass".into(), json!(RationalString(absorbed_mass(&dist, cfg))));
            emit_json(&args.common, &value)?;
        }
        Format::Csv => {
            let mut out = String::from("size,probability,decimal\n");
            for (m, (p, d)) in export.marginal.iter().zip(&export.marginal_decimal).enumerate() {
                out.push_str(&format!("{},{},{d}\n", m + 1, render_rational(&p.0)));
            }
            emit(&args.common, &out)?;
        }
    }
    Ok(0)
}

fn theory(args: &TheoryArgs) -> CmdResult {
    let spec = build_spec(&args.common)?;
    let cfg = spec.build()?;
    let precision = args.common.precision;
    let Some((a, tau)) = cfg.homogeneous_params() else {
        return uncovered(
            &args.common,
            cfg.n,
            None,
            "closed forms need equal actions and immunities on the complete graph with agent 1 infected",
        );
    };
    let law = match limit_law(cfg.n, &a, &tau) {
        Ok(law) => law,
        Err(Error::Uncovered { reason, .. }) => return uncovered(&args.common, cfg.n, Some((&a, &tau)), reason),
        Err(e) => return Err(e.into()),
    };
    match args.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let value = serde_json::to_value(law.export(precision)).map_err(Error::from)?;
            emit_json(&args.common, &value)?;
        }
        Format::Csv => {
            let mut out = String::from("size,probability,decimal\n");
            for (m, p) in law.size_law().iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", m + 1, render_rational(p), render_decimal(p, precision)));
            }
            emit(&args.common, &out)?;
        }
    }
    Ok(0)
}

fn uncovered(common: &Common, n: usize, params: Option<(&Rational, &Rational)>, reason: &str) -> CmdResult {
    let value = json!({
        "status": "uncovered",
        "n": n,
        "a": params.map(|(a, _)| render_rational(a)),
        "tau": params.map(|(_, t)| render_rational(t)),
        "regime": params.map(|(a, t)| classify_regime(n, a, t).name()),
        "reason": reason,
    });
    emit_json(common, &value)?;
    eprintln!("epigame: no closed-form limit law: {reason}");
    Ok(3)
}

fn compare(args: &CompareArgs) -> CmdResult {
    let common = &args.common;
    if args.plot_data {
        return plot_data(args);
    }
    let n = match &common.config {
        Some(_) => build_spec(common)?.n.unwrap_or(5),
        None => common.n.unwrap_or(5),
    };
    let grid = match &args.grid {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            parse_grid(&text, args.horizon)?
        }
        None => reference_grid(args.horizon),
    };
    let method = match args.method {
        MethodArg::Enumerate => Method::Enumerate {
            support_cap: args.support_cap,
        },
        MethodArg::MonteCarlo => Method::MonteCarlo {
            samples: args.samples,
            seed: args
                .seed
                .ok_or_else(|| Failure::usage("--seed is required with --method monte-carlo"))?,
            max_epochs: args.max_epochs.unwrap_or(DEFAULT_EPOCHS_PER_AGENT * n),
        },
    };
    let rows = with_threads(common.threads, || build_table(n, &grid, method))?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(common, &render_csv(&rows, common.precision))?,
        Format::Json => {
            let exports: Vec<_> = rows.iter().map(|r| r.export(common.precision)).collect();
            emit_json(common, &serde_json::to_value(exports).map_err(Error::from)?)?;
        }
    }
    let capped = rows.iter().filter(|r| r.resource_cap).count();
    if capped > 0 {
        eprintln!("epigame: {capped} row(s) hit the support cap");
        return Ok(4);
    }
    Ok(0)
}

fn plot_data(args: &CompareArgs) -> CmdResult {
    let spec = build_spec(&args.common)?;
    let cfg = spec.build()?;
    let Some((a, tau)) = cfg.homogeneous_params() else {
        return Err(Failure {
            code: 3,
            message: "plot data needs a homogeneous config with a closed-form law".into(),
        });
    };
    let limit = limit_law(cfg.n, &a, &tau)?.size_law();
    let series = with_threads(args.common.threads, || {
        convergence_series(&cfg, &limit, args.horizon, args.support_cap)
    })??;
    emit(&args.common, &render_series_csv(&series))?;
    Ok(0)
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Trace(a) => trace(a),
        Command::Simulate(a) => simulate(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Theory(a) => theory(a),
        Command::Compare(a) => compare(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("epigame: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
