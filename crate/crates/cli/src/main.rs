//! Command-line front end: closed-form bounds, ranging and positioning
//! experiments, fingerprinting, and the Monte-Carlo runner.
//!
//! Exit codes: 0 on success, 2 on argument/scenario validation errors, 3
//! when the estimator failure rate exceeds the scenario's threshold under
//! the `count_as_failure` policy.

mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pulsefix_core::bounds;
use pulsefix_core::harness::{
    build_rss_fingerprints, load_scenario, query_fingerprints, run_monte_carlo, FailurePolicy,
    RangingMethod, RunOptions, Scenario,
};
use pulsefix_core::positioning::{
    grid_bayes, hyperbolic_fix, nls_solve, triangulate, trilaterate, MeasurementKind, Point,
    PositionEstimate, PriorGrid, SolveStatus, Weighting,
};
use pulsefix_core::SPEED_OF_LIGHT;

#[derive(Parser)]
#[command(name = "pulsefix", version, about = "UWB impulse-radio ranging and positioning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form Cramér-Rao bounds as CSV.
    Crlb {
        #[command(subcommand)]
        which: CrlbCommand,
    },
    /// Run the ranging stage of a scenario and emit per-trial TOA errors.
    Range(RangeArgs),
    /// Solve a position fix from a measurement CSV.
    Locate(LocateArgs),
    /// Build or query an RSS fingerprint database.
    Fingerprint {
        #[command(subcommand)]
        action: FingerprintCommand,
    },
    /// Run the full Monte-Carlo pipeline of a scenario.
    Montecarlo(MonteCarloArgs),
}

#[derive(Subcommand)]
enum CrlbCommand {
    /// RSS ranging bound: (ln10·σ_sh·d)/(10·n), meters.
    Rss {
        /// Path-loss exponent n.
        #[arg(long)]
        path_loss_exponent: f64,
        /// Shadowing deviation σ_sh, dB.
        #[arg(long)]
        shadowing_db: f64,
        /// True distance, meters.
        #[arg(long)]
        distance_m: f64,
    },
    /// TOA bound 1/(2√2·π·√SNR·β) in seconds, and as a range in meters.
    Toa {
        #[arg(long)]
        snr_db: f64,
        /// Effective bandwidth β, Hz.
        #[arg(long)]
        beta_hz: f64,
    },
    /// AOA bound for a uniform linear array, radians and degrees.
    Aoa {
        #[arg(long)]
        snr_db: f64,
        /// Effective bandwidth β, Hz.
        #[arg(long)]
        beta_hz: f64,
        /// Number of array elements.
        #[arg(long)]
        elements: usize,
        /// Inter-element spacing, meters.
        #[arg(long)]
        spacing_m: f64,
        /// Arrival angle, degrees.
        #[arg(long, default_value_t = 0.0)]
        alpha_deg: f64,
    },
}

#[derive(Args)]
struct RangeArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's TOA estimator.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for ranging.csv (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Peak,
    First,
    Twostep,
}

#[derive(Args)]
struct LocateArgs {
    /// Measurement CSV: kind,anchor_id,ref_anchor_id,value,variance.
    #[arg(long)]
    measurements: PathBuf,
    /// Anchor CSV: id,x,y,tdoa_reference.
    #[arg(long)]
    anchors: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Nls)]
    estimator: EstimatorArg,
    /// Grid for the grid-bayes estimator: x0,y0,width,height,resolution.
    #[arg(long, value_delimiter = ',', num_args = 5)]
    grid: Option<Vec<f64>>,
    /// Output directory for estimate.csv (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Nls,
    Trilaterate,
    Triangulate,
    Hyperbolic,
    GridBayes,
}

#[derive(Subcommand)]
enum FingerprintCommand {
    /// Sample a synthetic RSS fingerprint grid from a scenario.
    Build {
        #[arg(long)]
        scenario: PathBuf,
        /// Grid cells along x.
        #[arg(long, default_value_t = 20)]
        nx: usize,
        /// Grid cells along y.
        #[arg(long, default_value_t = 20)]
        ny: usize,
        /// Domain as x0,y0,width,height (default: anchor box padded 1 m).
        #[arg(long, value_delimiter = ',', num_args = 4)]
        domain: Option<Vec<f64>>,
        /// Training CSV output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate positions for query vectors against a training CSV.
    Query {
        /// Training CSV produced by `fingerprint build`.
        #[arg(long)]
        training: PathBuf,
        /// Query CSV with the same measurement columns.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        /// Estimate CSV output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    InverseDistance,
}

#[derive(Args)]
struct MonteCarloArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for summary.json, ranging.csv, positions.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary format printed to stdout.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Run trials sequentially instead of on the thread pool.
    #[arg(long)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Crlb { which } => run_crlb(which),
        Command::Range(args) => run_range(args),
        Command::Locate(args) => run_locate(args),
        Command::Fingerprint { action } => run_fingerprint(action),
        Command::Montecarlo(args) => run_montecarlo(args),
    }
}

fn run_crlb(which: CrlbCommand) -> Result<ExitCode> {
    match which {
        CrlbCommand::Rss { path_loss_exponent, shadowing_db, distance_m } => {
            let bound = bounds::crlb_rss(path_loss_exponent, shadowing_db, distance_m)?;
            println!("bound_m,path_loss_exponent,shadowing_db,distance_m");
            println!("{bound},{path_loss_exponent},{shadowing_db},{distance_m}");
        }
        CrlbCommand::Toa { snr_db, beta_hz } => {
            let snr = 10f64.powf(snr_db / 10.0);
            let bound_s = bounds::crlb_toa(snr, beta_hz)?;
            println!("bound_s,bound_m,snr_db,beta_hz");
            println!("{bound_s},{},{snr_db},{beta_hz}", SPEED_OF_LIGHT * bound_s);
        }
        CrlbCommand::Aoa { snr_db, beta_hz, elements, spacing_m, alpha_deg } => {
            let snr = 10f64.powf(snr_db / 10.0);
            let bound =
                bounds::crlb_aoa(snr, beta_hz, elements, spacing_m, alpha_deg.to_radians())?;
            println!("bound_rad,bound_deg,snr_db,beta_hz,elements,spacing_m,alpha_deg");
            println!(
                "{bound},{},{snr_db},{beta_hz},{elements},{spacing_m},{alpha_deg}",
                bound.to_degrees()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_with_overrides(
    path: &PathBuf,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<Scenario> {
    let mut scenario = load_scenario(path)
        .with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(trials) = trials {
        scenario.trials = trials;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn run_range(args: RangeArgs) -> Result<ExitCode> {
    let mut scenario = load_with_overrides(&args.scenario, args.seed, args.trials)?;
    if let Some(method) = args.method {
        scenario.ranging.method = match method {
            MethodArg::Peak => RangingMethod::Peak,
            MethodArg::First => RangingMethod::First,
            MethodArg::Twostep => RangingMethod::TwoStep,
        };
    }
    if !scenario.measurements.contains(&MeasurementKind::ToaRange) {
        bail!("range needs a scenario with toa_range measurements");
    }
    let output = run_monte_carlo(&scenario, &RunOptions::default())?;

    // Per-link view of the first anchor.
    let first_anchor = &scenario.anchors[0].id;
    let mut csv = String::from("trial,true_toa_s,est_toa_s,error_m\n");
    for r in output
        .ranging_records
        .iter()
        .filter(|r| r.kind == MeasurementKind::ToaRange && &r.anchor_id == first_anchor)
    {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.trial,
            r.true_value / SPEED_OF_LIGHT,
            r.estimated / SPEED_OF_LIGHT,
            r.error
        ));
    }
    io::emit(args.out.as_deref(), "ranging.csv", &csv)?;
    eprintln!(
        "ranging over {} trials: detection rate {:.4}",
        output.report.trials, output.report.detection_rate
    );
    exit_for_failures(&scenario, output.report.failed_trials, output.report.trials)
}

fn run_locate(args: LocateArgs) -> Result<ExitCode> {
    let anchors = io::read_anchors(&args.anchors)?;
    let measurements = io::read_measurements(&args.measurements)?;

    let estimate: PositionEstimate<f64> = match args.estimator {
        EstimatorArg::Nls => nls_solve(&measurements, &anchors, None)?,
        EstimatorArg::Trilaterate => {
            let ranges = io::per_anchor_values(&anchors, &measurements, |k| {
                matches!(k, MeasurementKind::ToaRange | MeasurementKind::RssRange)
            })?;
            trilaterate(&anchors, &ranges)?
        }
        EstimatorArg::Triangulate => {
            let angles = io::per_anchor_values(&anchors, &measurements, |k| {
                k == MeasurementKind::Aoa
            })?;
            triangulate(&anchors, &angles)?
        }
        EstimatorArg::Hyperbolic => {
            let tdoas: Vec<f64> = anchors
                .iter()
                .filter(|a| !a.is_tdoa_reference)
                .map(|a| {
                    measurements
                        .iter()
                        .find(|m| m.anchor_id == a.id && m.kind == MeasurementKind::TdoaRange)
                        .map(|m| m.value)
                        .with_context(|| format!("no tdoa_range measurement for anchor {}", a.id))
                })
                .collect::<Result<_>>()?;
            let fix = hyperbolic_fix(&anchors, &tdoas)?;
            if fix.ambiguous {
                eprintln!(
                    "warning: ambiguous fix; {} alternate solution(s) with comparable residual",
                    fix.alternates.len()
                );
            }
            fix.best
        }
        EstimatorArg::GridBayes => {
            let grid = args
                .grid
                .as_ref()
                .context("grid-bayes needs --grid x0,y0,width,height,resolution")?;
            let prior = PriorGrid::uniform(
                Point::new(grid[0], grid[1]),
                grid[2],
                grid[3],
                grid[4],
            )?;
            grid_bayes(&measurements, &anchors, &prior)?.map
        }
    };

    let status = match estimate.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max_iter",
        SolveStatus::Degenerate => "degenerate",
        SolveStatus::Diverged => "diverged",
    };
    let mut csv = String::from("x,y,status,iterations,residual\n");
    csv.push_str(&format!(
        "{},{},{},{},{}\n",
        estimate.position.x, estimate.position.y, status, estimate.iterations, estimate.residual
    ));
    io::emit(args.out.as_deref(), "estimate.csv", &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn run_fingerprint(action: FingerprintCommand) -> Result<ExitCode> {
    match action {
        FingerprintCommand::Build { scenario, nx, ny, domain, out } => {
            let scenario = load_with_overrides(&scenario, None, None)?;
            let domain = match domain {
                Some(d) => (d[0], d[1], d[2], d[3]),
                None => {
                    let xs: Vec<f64> = scenario.anchors.iter().map(|a| a.x).collect();
                    let ys: Vec<f64> = scenario.anchors.iter().map(|a| a.y).collect();
                    let (x0, x1) = bounds_of(&xs);
                    let (y0, y1) = bounds_of(&ys);
                    (x0 - 1.0, y0 - 1.0, (x1 - x0) + 2.0, (y1 - y0) + 2.0)
                }
            };
            let (training, ids) = build_rss_fingerprints(&scenario, nx, ny, domain)?;
            let csv = io::training_csv(&training, &ids);
            io::emit(out.as_deref(), "training.csv", &csv)?;
            eprintln!("built {} fingerprints over {}×{} cells", training.len(), nx, ny);
        }
        FingerprintCommand::Query { training, queries, k, weighting, out } => {
            let (set, _ids) = io::read_training(&training)?;
            let query_vectors = io::read_queries(&queries, set.dim())?;
            let weighting = match weighting {
                WeightingArg::Uniform => Weighting::Uniform,
                WeightingArg::InverseDistance => Weighting::InverseDistance,
            };
            let estimates = query_fingerprints(&set, &query_vectors, k, weighting)?;
            let mut csv = String::from("x,y\n");
            for p in estimates {
                csv.push_str(&format!("{},{}\n", p.x, p.y));
            }
            io::emit(out.as_deref(), "estimates.csv", &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds_of(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn run_montecarlo(args: MonteCarloArgs) -> Result<ExitCode> {
    let scenario = load_with_overrides(&args.scenario, args.seed, args.trials)?;
    let options = RunOptions { parallel: !args.serial };
    let output = run_monte_carlo(&scenario, &options)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), output.report.to_json())?;
        std::fs::write(dir.join("ranging.csv"), output.ranging_csv())?;
        std::fs::write(dir.join("positions.csv"), output.positions_csv())?;
    }

    match args.format {
        FormatArg::Json => println!("{}", output.report.to_json()),
        FormatArg::Csv => {
            println!("metric,value");
            println!("seed,{}", output.report.seed);
            println!("trials,{}", output.report.trials);
            println!("completed_trials,{}", output.report.completed_trials);
            println!("failed_trials,{}", output.report.failed_trials);
            println!("detection_rate,{}", output.report.detection_rate);
            if let Some(rmse) = output.report.positioning_rmse_m {
                println!("positioning_rmse_m,{rmse}");
            }
            for s in &output.report.ranging {
                let kind = match s.kind {
                    MeasurementKind::ToaRange => "toa_range",
                    MeasurementKind::RssRange => "rss_range",
                    MeasurementKind::Aoa => "aoa",
                    MeasurementKind::TdoaRange => "tdoa_range",
                };
                let cond = if s.nlos { "nlos" } else { "los" };
                println!("ranging_rmse_{kind}_{cond},{}", s.rmse);
            }
            if let Some(b) = output.report.crlb.toa_range_m {
                println!("crlb_toa_range_m,{b}");
            }
        }
    }
    exit_for_failures(&scenario, output.report.failed_trials, output.report.trials)
}

fn exit_for_failures(scenario: &Scenario, failed: usize, total: usize) -> Result<ExitCode> {
    if scenario.failure_policy == FailurePolicy::CountAsFailure && total > 0 {
        let rate = failed as f64 / total as f64;
        if rate > scenario.max_failure_rate {
            eprintln!(
                "estimator failure rate {rate:.4} exceeds the allowed {:.4}",
                scenario.max_failure_rate
            );
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}
