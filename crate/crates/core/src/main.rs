//! Command-line front end for the memweave library.
//!
//! Exit codes: 0 on success, 1 for invalid input of any kind, 2 when the
//! inputs are valid but the request is infeasible (offered demand exceeds
//! what any weighting can carry).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use memweave::{
    analytic, dataset, policy, report, sim, AnalyticError, CurvePoint, DemandPoint,
    InterleaveWeights, Prediction, ProfileSet, SimConfig, SimReport, WorkloadMix,
};

#[derive(Parser)]
#[command(
    name = "memweave",
    version,
    about = "Model, recommend, and simulate weighted page interleaving across memory tiers"
)]
struct Cli {
    /// Calibration profile JSON; defaults to $MEMWEAVE_PROFILE, then the
    /// bundled reference profile.
    #[arg(long, global = true, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect calibration profiles.
    Profiles {
        #[command(subcommand)]
        command: ProfilesCommand,
    },
    /// Predict aggregate bandwidth for a weight vector.
    Predict {
        /// Interleave weights, comma separated, e.g. 3,1.
        #[arg(long)]
        weights: String,
        /// Access mix, e.g. 1r0w, 2r1w, 2r1wnt.
        #[arg(long)]
        mix: String,
        /// Offered demand in GB/s; adds an expected latency estimate.
        #[arg(long)]
        demand: Option<f64>,
    },
    /// Search for the best small-integer weights for a mix.
    Recommend {
        /// Access mix, e.g. 1r0w, 2r1w, 2r1wnt.
        #[arg(long)]
        mix: String,
        /// Weight budget: candidate vectors may use at most this many
        /// weight units in total.
        #[arg(long, default_value_t = 10)]
        max_weight: u32,
        /// Offered demand in GB/s; picks the latency-optimal weights for
        /// that load instead of the bandwidth-optimal ones.
        #[arg(long)]
        demand: Option<f64>,
    },
    /// Run one closed-loop simulation.
    Simulate(SimArgs),
    /// Simulate across concurrency levels or weight vectors and emit a
    /// throughput-latency curve.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        /// What to vary.
        #[arg(long, value_enum)]
        axis: Axis,
        /// Axis values: stream counts like "1,2,4" for concurrency, or
        /// semicolon-separated weight vectors like "1,0;3,1" for weights.
        #[arg(long)]
        values: Option<String>,
        /// Directory for sweep.csv and sweep.svg.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Summarize application results and compare the model against the
    /// bundled reference measurements.
    Report {
        /// Workload results JSON; defaults to the bundled records.
        #[arg(long, value_name = "FILE")]
        workloads: Option<PathBuf>,
    },
    /// Export the page-to-tier assignment for a weight vector.
    Pages {
        /// Interleave weights, comma separated, e.g. 3,1.
        #[arg(long)]
        weights: String,
        /// Number of pages to map.
        #[arg(long, default_value_t = 64)]
        count: usize,
        /// Write CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProfilesCommand {
    /// Load a profile and report what it covers.
    Validate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Concurrency,
    Weights,
}

#[derive(Parser)]
struct SimArgs {
    /// Interleave weights, comma separated, e.g. 3,1.
    #[arg(long, default_value = "3,1")]
    weights: String,
    /// Access mix, e.g. 1r0w, 2r1w, 2r1wnt.
    #[arg(long)]
    mix: String,
    #[arg(long, default_value_t = 32)]
    streams: u32,
    /// Requests each stream keeps in flight.
    #[arg(long, default_value_t = 32)]
    outstanding: u32,
    /// Bytes per request.
    #[arg(long, default_value_t = 64)]
    transfer: u32,
    #[arg(long, default_value_t = 40_320)]
    pages: usize,
    /// uniform_random or sequential.
    #[arg(long, default_value = "uniform_random")]
    pattern: String,
    /// Warmup request count; defaults to a tenth of --measured.
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    measured: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl SimArgs {
    fn to_config(&self) -> anyhow::Result<SimConfig> {
        let mut config = SimConfig::new(parse_weights(&self.weights)?, parse_mix(&self.mix)?);
        config.streams = self.streams;
        config.outstanding_per_stream = self.outstanding;
        config.transfer_bytes = self.transfer;
        config.page_count = self.pages;
        config.pattern = self
            .pattern
            .parse::<sim::AccessPattern>()
            .map_err(anyhow::Error::msg)?;
        config.warmup_requests = self.warmup;
        config.measured_requests = self.measured;
        config.seed = self.seed;
        Ok(config)
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage mistakes are invalid input (exit 1); help and version
            // requests are successes.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(analytic) = cause.downcast_ref::<AnalyticError>() {
            if matches!(
                analytic,
                AnalyticError::InfeasibleLoad { .. } | AnalyticError::NoFeasibleWeights { .. }
            ) {
                return 2;
            }
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let profiles = load_profile_set(cli.profile.as_deref())?;
    match cli.command {
        Command::Profiles {
            command: ProfilesCommand::Validate,
        } => cmd_validate(&profiles, cli.format),
        Command::Predict {
            weights,
            mix,
            demand,
        } => cmd_predict(&profiles, &weights, &mix, demand, cli.format),
        Command::Recommend {
            mix,
            max_weight,
            demand,
        } => cmd_recommend(&profiles, &mix, max_weight, demand, cli.format),
        Command::Simulate(args) => cmd_simulate(&profiles, &args, cli.format),
        Command::Sweep {
            sim,
            axis,
            values,
            out,
        } => cmd_sweep(&profiles, &sim, axis, values.as_deref(), &out),
        Command::Report { workloads } => cmd_report(&profiles, workloads.as_deref(), cli.format),
        Command::Pages {
            weights,
            count,
            out,
        } => cmd_pages(&weights, count, out.as_deref()),
    }
}

/// Resolution order: --profile flag, MEMWEAVE_PROFILE, bundled profile.
fn load_profile_set(flag: Option<&Path>) -> anyhow::Result<ProfileSet> {
    let from_env = std::env::var_os("MEMWEAVE_PROFILE").map(PathBuf::from);
    let path = flag.map(Path::to_path_buf).or(from_env);
    match path {
        Some(path) => memweave::load_profiles(&path).map_err(Into::into),
        None => Ok(dataset::bundled_profiles()),
    }
}

fn parse_weights(text: &str) -> anyhow::Result<InterleaveWeights> {
    text.parse::<InterleaveWeights>()
        .with_context(|| format!("invalid weights {text:?}"))
}

fn parse_mix(text: &str) -> anyhow::Result<WorkloadMix> {
    text.parse::<WorkloadMix>()
        .with_context(|| format!("invalid mix {text:?}"))
}

fn parse_demand(gbps: f64) -> anyhow::Result<DemandPoint> {
    DemandPoint::new(gbps).map_err(Into::into)
}

fn cmd_validate(profiles: &ProfileSet, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Json => {
            let tiers: Vec<serde_json::Value> = profiles
                .tiers()
                .iter()
                .map(|tier| {
                    let fractions: Vec<f64> =
                        tier.points().iter().map(|p| p.mix.read_fraction()).collect();
                    serde_json::json!({
                        "name": tier.name(),
                        "kind": tier.kind().to_string(),
                        "unloaded_latency_ns": tier.unloaded_latency_ns(),
                        "points": tier.points().len(),
                        "read_fraction_min": fractions.iter().cloned().fold(f64::INFINITY, f64::min),
                        "read_fraction_max": fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "tiers": tiers,
                    "valid": true,
                }))?
            );
        }
        _ => {
            for tier in profiles.tiers() {
                let fractions: Vec<f64> = tier
                    .points()
                    .iter()
                    .map(|p| p.mix.read_fraction())
                    .collect();
                let lo = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                println!(
                    "tier {} ({}): unloaded {} ns, {} points, read fraction {:.2}..{:.2}",
                    tier.name(),
                    tier.kind(),
                    tier.unloaded_latency_ns(),
                    tier.points().len(),
                    lo,
                    hi
                );
            }
            println!("ok");
        }
    }
    Ok(())
}

fn prediction_json(
    profiles: &ProfileSet,
    weights: &InterleaveWeights,
    mix: &WorkloadMix,
    prediction: &Prediction,
    expected_latency_ns: Option<f64>,
) -> serde_json::Value {
    serde_json::json!({
        "mix": mix.to_string(),
        "weights": weights.to_string(),
        "aggregate_gbps": report::round4(prediction.aggregate_gbps),
        "bottleneck": profiles.tier(prediction.bottleneck).name(),
        "shares": prediction.shares.iter().map(|s| report::round4(*s)).collect::<Vec<_>>(),
        "utilization": prediction.utilization.iter().map(|u| report::round4(*u)).collect::<Vec<_>>(),
        "expected_latency_ns": expected_latency_ns.map(report::round4),
    })
}

fn print_prediction_text(
    profiles: &ProfileSet,
    weights: &InterleaveWeights,
    mix: &WorkloadMix,
    prediction: &Prediction,
    expected_latency_ns: Option<f64>,
) {
    println!("mix: {mix}");
    println!("weights: {weights}");
    println!("aggregate: {:.2} GB/s", prediction.aggregate_gbps);
    println!(
        "bottleneck: {}",
        profiles.tier(prediction.bottleneck).name()
    );
    for (tier, profile) in profiles.tiers().iter().enumerate() {
        println!(
            "tier {}: share {:.4}, utilization {:.4}",
            profile.name(),
            prediction.shares[tier],
            prediction.utilization[tier]
        );
    }
    if let Some(ns) = expected_latency_ns {
        println!("expected latency: {ns:.2} ns");
    }
}

fn cmd_predict(
    profiles: &ProfileSet,
    weights: &str,
    mix: &str,
    demand: Option<f64>,
    format: Format,
) -> anyhow::Result<()> {
    let weights = parse_weights(weights)?;
    let mix = parse_mix(mix)?;
    let prediction = analytic::predict_bandwidth(profiles, &weights, &mix)?;
    let expected = match demand {
        Some(gbps) => Some(analytic::mixture_latency(
            profiles,
            &weights,
            &mix,
            parse_demand(gbps)?,
        )?),
        None => None,
    };
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&prediction_json(
                profiles,
                &weights,
                &mix,
                &prediction,
                expected
            ))?
        ),
        _ => print_prediction_text(profiles, &weights, &mix, &prediction, expected),
    }
    Ok(())
}

fn cmd_recommend(
    profiles: &ProfileSet,
    mix: &str,
    max_weight: u32,
    demand: Option<f64>,
    format: Format,
) -> anyhow::Result<()> {
    let mix = parse_mix(mix)?;
    let (weights, expected) = match demand {
        Some(gbps) => {
            let (weights, latency_ns) = analytic::recommend_weights_for_demand(
                profiles,
                &mix,
                parse_demand(gbps)?,
                max_weight,
            )?;
            (weights, Some(latency_ns))
        }
        None => {
            let (weights, _) = analytic::recommend_weights(profiles, &mix, max_weight)?;
            (weights, None)
        }
    };
    let prediction = analytic::predict_bandwidth(profiles, &weights, &mix)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&prediction_json(
                profiles,
                &weights,
                &mix,
                &prediction,
                expected
            ))?
        ),
        _ => print_prediction_text(profiles, &weights, &mix, &prediction, expected),
    }
    Ok(())
}

fn cmd_simulate(profiles: &ProfileSet, args: &SimArgs, format: Format) -> anyhow::Result<()> {
    let config = args.to_config()?;
    let report = sim::run(profiles, &config)?;
    print_sim_report(profiles, &config, &report, format)
}

fn print_sim_report(
    profiles: &ProfileSet,
    config: &SimConfig,
    report: &SimReport,
    format: Format,
) -> anyhow::Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
        Format::Csv => {
            println!("{}", SimReport::csv_header(profiles.len()));
            println!("{}", report.csv_row(&config.weights.label()));
        }
        Format::Text => {
            println!("weights: {}", config.weights);
            println!("mix: {}", config.mix);
            println!("achieved: {:.2} GB/s", report.achieved_gbps);
            println!(
                "latency ns: mean {:.1}, p50 {:.1}, p95 {:.1}, p99 {:.1}",
                report.mean_latency_ns,
                report.p50_latency_ns,
                report.p95_latency_ns,
                report.p99_latency_ns
            );
            for (tier, profile) in profiles.tiers().iter().enumerate() {
                println!(
                    "tier {}: {} requests ({} reads, {} writes), utilization {:.4}",
                    profile.name(),
                    report.tier_requests[tier],
                    report.tier_reads[tier],
                    report.tier_writes[tier],
                    report.tier_utilization[tier]
                );
            }
            println!("total time: {:.0} ns", report.total_time_ns);
            println!("seed: {}", report.seed);
        }
    }
    Ok(())
}

const DEFAULT_CONCURRENCY_LEVELS: &str = "1,2,4,8,16,32,64,128,256";
const DEFAULT_WEIGHT_SETS: &str = "1,0;9,1;4,1;3,1;2,1;5,2;1,1;0,1";

fn cmd_sweep(
    profiles: &ProfileSet,
    args: &SimArgs,
    axis: Axis,
    values: Option<&str>,
    out: &Path,
) -> anyhow::Result<()> {
    let base = args.to_config()?;
    let axis = match axis {
        Axis::Concurrency => {
            let text = values.unwrap_or(DEFAULT_CONCURRENCY_LEVELS);
            let levels = text
                .split(',')
                .map(|v| v.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("invalid concurrency values {text:?}"))?;
            sim::SweepAxis::Concurrency(levels)
        }
        Axis::Weights => {
            let text = values.unwrap_or(DEFAULT_WEIGHT_SETS);
            let sets = text
                .split(';')
                .map(parse_weights)
                .collect::<anyhow::Result<Vec<_>>>()?;
            sim::SweepAxis::Weights(sets)
        }
    };
    let points = sim::sweep(profiles, &base, &axis);
    let mut curve = Vec::with_capacity(points.len());
    for point in points {
        let report = point
            .result
            .with_context(|| format!("sweep point {}", point.label))?;
        curve.push(CurvePoint {
            label: point.label,
            gbps: report.achieved_gbps,
            ns: report.mean_latency_ns,
        });
    }
    let (csv_path, svg_path) = report::emit_curve(&curve, out)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_report(
    profiles: &ProfileSet,
    workloads: Option<&Path>,
    format: Format,
) -> anyhow::Result<()> {
    let records = match workloads {
        Some(path) => report::load_workloads(path)?,
        None => dataset::bundled_workloads(),
    };
    let summary = report::summarize(&records)?;

    // Model-vs-measured section: predict every ratio the reference host
    // measured and normalize both sides to their all-DRAM baselines.
    let mut sections = Vec::new();
    for sweep in dataset::REFERENCE_SWEEPS {
        let mix = sweep.mix();
        let sets = sweep
            .rows
            .iter()
            .map(|&(w0, w1, _)| InterleaveWeights::pair(w0, w1))
            .collect::<Result<Vec<_>, _>>()?;
        let model_rows = report::mlc_table(profiles, &mix, &sets)?;
        let measured_baseline = sweep.rows[0].2;
        let rows: Vec<serde_json::Value> = sweep
            .rows
            .iter()
            .zip(&model_rows)
            .map(|(&(_, _, measured), model)| {
                serde_json::json!({
                    "weights": model.weights,
                    "measured_gbps": measured,
                    "predicted_gbps": report::round4(model.predicted_gbps),
                    "measured_normalized": report::round4(measured / measured_baseline),
                    "predicted_normalized": model.normalized,
                })
            })
            .collect();
        sections.push((sweep.name, mix.to_string(), rows));
    }

    if format == Format::Json {
        let json = serde_json::json!({
            "workloads": summary,
            "reference_geomean_speedup": dataset::REFERENCE_GEOMEAN_SPEEDUP,
            "model_vs_measured": sections
                .iter()
                .map(|(name, mix, rows)| {
                    serde_json::json!({ "name": name, "mix": mix, "rows": rows })
                })
                .collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&json)?);
        return Ok(());
    }

    println!("workload speedups over the all-DRAM baseline");
    for row in &summary.rows {
        let parts: Vec<String> = row
            .speedups
            .iter()
            .map(|(label, s)| format!("{label} {s:.2}x"))
            .collect();
        println!(
            "  {} ({}): {}  best {} at {:.2}x",
            row.workload,
            row.metric,
            parts.join(", "),
            row.best_variant,
            row.best_speedup
        );
    }
    println!(
        "geomean of best speedups: {:.2}x (reference host: {:.2}x)",
        summary.geomean_best_speedup,
        dataset::REFERENCE_GEOMEAN_SPEEDUP
    );
    println!();
    println!("model vs measured aggregate bandwidth (normalized to all-DRAM)");
    for (name, mix, rows) in &sections {
        println!("  {name} ({mix})");
        println!("    weights   measured  predicted  meas-norm  model-norm");
        for row in rows {
            println!(
                "    {:<8} {:>9.1} {:>10.1} {:>10.3} {:>11.3}",
                row["weights"].as_str().unwrap(),
                row["measured_gbps"].as_f64().unwrap(),
                row["predicted_gbps"].as_f64().unwrap(),
                row["measured_normalized"].as_f64().unwrap(),
                row["predicted_normalized"].as_f64().unwrap()
            );
        }
    }
    Ok(())
}

fn cmd_pages(weights: &str, count: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let weights = parse_weights(weights)?;
    let map = policy::allocate(count, &weights);
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            map.write_csv(std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            map.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
