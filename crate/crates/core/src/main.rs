use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seqmul::analytic::{estimate_report, InputBitProbabilities};
use seqmul::distribution::InputDistribution;
use seqmul::error::{Error, Result, EXIT_OK, EXIT_USAGE};
use seqmul::imagedemo::{load_pgm, run_demo, save_pgm, save_pgm16};
use seqmul::metrics::{error_distance, report_exhaustive, DEFAULT_CEILING};
use seqmul::montecarlo::{report_monte_carlo, SamplingPlan, DEFAULT_SAMPLES};
use seqmul::multiplier::{mul_accurate_sequential, mul_approx_sequential, MultiplierConfig, Operand};
use seqmul::report::{self, Row};
use seqmul::sweep::{pareto_front, points_from_rows, run_sweep, ParetoPoint, SweepSpec, TRule};
use seqmul::trace::{trace_accurate, trace_approx, CycleTrace};

#[derive(Parser)]
#[command(name = "seqmul", version, about = "Approximate sequential multiplier simulator and error analysis")]
struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiply two operands with the accurate and approximate datapaths.
    Mul(MulArgs),
    /// Error metrics of one configuration.
    Metrics(MetricsArgs),
    /// Error metrics over a grid of configurations.
    Sweep(SweepArgs),
    /// Non-dominated configurations of a metrics table.
    Pareto(ParetoArgs),
    /// Square a grayscale PGM image and score it against exact squaring.
    ImageDemo(ImageArgs),
}

#[derive(Args)]
struct FixFlags {
    /// Force the low product bits to one when the last LSP carry is lost (default).
    #[arg(long, overrides_with = "no_fix")]
    fix: bool,
    #[arg(long, overrides_with = "fix")]
    no_fix: bool,
}

#[derive(Args)]
struct ConfigArgs {
    /// Operand width in bits.
    #[arg(long)]
    n: u32,
    /// Carry-chain splitting point.
    #[arg(long)]
    t: u32,
    #[command(flatten)]
    fix: FixFlags,
    /// Keep the carry chain whole (exact multiplication).
    #[arg(long)]
    accurate: bool,
}

impl ConfigArgs {
    fn config(&self) -> Result<MultiplierConfig> {
        if self.accurate {
            MultiplierConfig::degenerate(self.n, self.t)
        } else {
            MultiplierConfig::new(self.n, self.t, !self.fix.no_fix)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exhaustive,
    Mc,
    Estimate,
}

#[derive(Args)]
struct MulArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    a: u64,
    #[arg(long)]
    b: u64,
    /// Print the per-cycle register contents.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest n evaluated exhaustively.
    #[arg(long, default_value_t = DEFAULT_CEILING)]
    ceiling: u32,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "exhaustive")]
    method: MethodArg,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Operand A distribution file (`n=<w>` then 2^w probabilities).
    #[arg(long)]
    dist_a: Option<PathBuf>,
    #[arg(long)]
    dist_b: Option<PathBuf>,
    /// Conditioning depth of the estimator.
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TRuleArg {
    /// Every t in 2..=n/2.
    All,
    /// t = n/2.
    Halved,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated operand widths.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Explicit comma-separated splitting points; overrides --t-rule.
    #[arg(long, value_delimiter = ',')]
    t: Vec<u32>,
    #[arg(long, value_enum, default_value = "all")]
    t_rule: TRuleArg,
    /// Only fix-to-1 on. Both settings run when neither flag is given.
    #[arg(long, conflicts_with = "no_fix")]
    fix: bool,
    /// Only fix-to-1 off.
    #[arg(long)]
    no_fix: bool,
    /// Force one method; by default widths above the ceiling use Monte Carlo.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ParetoArgs {
    /// Metrics table in the tidy CSV format.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ImageArgs {
    /// Binary PGM (P5, maxval 255).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 8)]
    n: u32,
    #[arg(long, default_value_t = 4)]
    t: u32,
    #[command(flatten)]
    fix: FixFlags,
    /// Writes PREFIX_product.pgm, PREFIX_display.pgm and PREFIX_score.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK } as u8);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Mul(args) => cmd_mul(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Pareto(args) => cmd_pareto(&args),
        Command::ImageDemo(args) => cmd_image(&args),
    }
}

fn emit(output: &OutputArgs, bytes: &[u8]) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    report::write_csv(rows, &mut bytes)?;
    Ok(bytes)
}

fn render_trace(traces: &[CycleTrace], n: u32) -> String {
    let w = n as usize;
    let mut out = format!("{:<6} {:<w$} {:<w1$} {:<w$} cff cout fix\n", "cycle", "B", "S", "C", w1 = w + 1);
    for tr in traces {
        out += &format!(
            "{:<6} {:0w$b} {:0w1$b} {:0w$b} {:>3} {:>4} {:>3}\n",
            tr.cycle,
            tr.reg_b,
            tr.sum_bits,
            tr.carry_bits,
            tr.carry_ff as u8,
            tr.lsp_carry_out as u8,
            tr.fix_applied as u8,
            w = w,
            w1 = w + 1,
        );
    }
    out
}

fn cmd_mul(args: &MulArgs) -> Result<()> {
    let cfg = args.config.config()?;
    let a = Operand::new(args.a, cfg.n)?;
    let b = Operand::new(args.b, cfg.n)?;
    let exact = mul_accurate_sequential(&a, &b)?;
    let approx = mul_approx_sequential(&a, &b, &cfg)?;
    let width = 2 * cfg.n as usize;
    let mut out = format!(
        "accurate={} approx={}\naccurate_bin={:0width$b} approx_bin={:0width$b}\nerror_distance={}\n",
        exact.value(),
        approx.value(),
        exact.value(),
        approx.value(),
        error_distance(&exact, &approx),
    );
    if args.trace {
        out += "accurate trace\n";
        out += &render_trace(&trace_accurate(&a, &b)?, cfg.n);
        out += &format!("approximate trace (t={}, fix={})\n", cfg.t, report::fix_label(&cfg));
        out += &render_trace(&trace_approx(&a, &b, &cfg)?, cfg.n);
    }
    print!("{out}");
    Ok(())
}

fn load_distribution(path: Option<&Path>, n: u32) -> Result<InputDistribution> {
    match path {
        Some(p) => InputDistribution::load(p),
        None => InputDistribution::uniform(n),
    }
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let cfg = args.config.config()?;
    let dist_a = load_distribution(args.dist_a.as_deref(), cfg.n)?;
    let dist_b = load_distribution(args.dist_b.as_deref(), cfg.n)?;
    let json_out = args.output.format == Format::Json;
    let bytes = match args.method {
        MethodArg::Exhaustive => {
            let r = report_exhaustive(&cfg, &dist_a, &dist_b, args.sampling.ceiling)?;
            if json_out { json(&r)? } else { csv(&report::error_report_rows(&r))? }
        }
        MethodArg::Mc => {
            let plan = SamplingPlan {
                sample_count: args.sampling.samples,
                seed: args.sampling.seed,
                dist_a,
                dist_b,
                confidence_level: 0.95,
            };
            let r = report_monte_carlo(&cfg, &plan)?;
            if json_out { json(&r)? } else { csv(&report::monte_carlo_rows(&r))? }
        }
        MethodArg::Estimate => {
            for d in [&dist_a, &dist_b] {
                if d.width() != cfg.n {
                    return Err(Error::Distribution(format!(
                        "distribution width {} does not match n={}",
                        d.width(),
                        cfg.n
                    )));
                }
            }
            let inputs = InputBitProbabilities::from_distributions(&dist_a, &dist_b);
            let r = estimate_report(&cfg, &inputs, args.depth)?;
            if json_out { json(&r)? } else { csv(&report::estimate_rows(&r))? }
        }
    };
    emit(&args.output, &bytes)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let fix_settings = match (args.fix, args.no_fix) {
        (true, _) => vec![true],
        (false, true) => vec![false],
        (false, false) => vec![false, true],
    };
    let t_rule = if !args.t.is_empty() {
        TRule::Explicit(args.t.clone())
    } else {
        match args.t_rule {
            TRuleArg::All => TRule::All,
            TRuleArg::Halved => TRule::Halved,
        }
    };
    let mut spec = SweepSpec {
        ns: args.n.clone(),
        t_rule,
        fix_settings,
        ceiling: args.sampling.ceiling,
        samples: args.sampling.samples,
        seed: args.sampling.seed,
    };
    match args.method {
        Some(MethodArg::Estimate) => {
            return Err(Error::Sweep("sweeps run exhaustive or mc, not estimate".into()))
        }
        Some(MethodArg::Mc) => spec.ceiling = 0,
        Some(MethodArg::Exhaustive) => {
            if let Some(&n) = spec.ns.iter().find(|&&n| n > spec.ceiling) {
                return Err(Error::AboveCeiling { n, ceiling: spec.ceiling });
            }
        }
        None => {}
    }
    let reports = run_sweep(&spec)?;
    let bytes = if args.output.format == Format::Json {
        json(&reports)?
    } else {
        let rows: Vec<Row> = reports.iter().flat_map(report::error_report_rows).collect();
        csv(&rows)?
    };
    emit(&args.output, &bytes)
}

fn pareto_rows(points: &[ParetoPoint]) -> Vec<Row> {
    points
        .iter()
        .flat_map(|p| {
            [("er", p.er), ("mae", p.mae), ("nmed", p.nmed)].map(|(metric, v)| Row {
                n: p.config.n,
                t: p.config.t,
                fix: report::fix_label(&p.config).into(),
                method: p.method.clone(),
                metric: metric.into(),
                value: report::format_value(v),
                samples: None,
                seed: None,
            })
        })
        .collect()
}

fn cmd_pareto(args: &ParetoArgs) -> Result<()> {
    let rows = report::read_csv(fs::File::open(&args.input)?)?;
    let front = pareto_front(&points_from_rows(&rows)?);
    let bytes = if args.output.format == Format::Json {
        json(&front)?
    } else {
        csv(&pareto_rows(&front))?
    };
    emit(&args.output, &bytes)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_image(args: &ImageArgs) -> Result<()> {
    let cfg = MultiplierConfig::new(args.n, args.t, !args.fix.no_fix)?;
    let img = load_pgm(&args.input)?;
    let (squared, summary) = run_demo(&img, &cfg)?;
    save_pgm16(&squared.product, &with_suffix(&args.out_prefix, "_product.pgm"))?;
    save_pgm(&squared.display, &with_suffix(&args.out_prefix, "_display.pgm"))?;
    fs::write(with_suffix(&args.out_prefix, "_score.json"), json(&summary)?)?;
    println!(
        "ssim={} psnr={}",
        report::format_value(summary.score.ssim),
        report::format_value(summary.score.psnr)
    );
    Ok(())
}
