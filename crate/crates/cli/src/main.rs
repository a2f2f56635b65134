use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gene_circuits::analysis::{
    binarize, edge_connectivity, feedback_sum, node_strength, returns_after_perturbation, stability_report,
    team_metrics, weight_sign_histogram, StabilityReport, TeamReport, WeightHistogram,
};
use gene_circuits::dynamics::{response_curve, SimConfig};
use gene_circuits::experiments::{
    l1_ablation, learnability_sweep_with, sign_shift_from_records, stability_scatter, stability_trend, train_once,
    ExperimentConfig, TrialRecord,
};
use gene_circuits::io::{fmt_float, load_config, read_circuit, to_json_pretty, write_atomic, CircuitFile, CsvTable, JsonlWriter};
use gene_circuits::targets::{is_success, mse};
use gene_circuits::{verify, Error, GeneCircuit, Trainer};

mod export;

#[derive(Parser)]
#[command(name = "gene-circuits", version, about = "Train and analyze gene circuits that compute band-pass and switch responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one circuit with Adam (hybrid mutation when gd.mutation_rate > 0).
    Train(RunArgs),
    /// Train one circuit with the evolutionary search.
    Evolve(RunArgs),
    /// Learnability sweep over sizes, plus the sign study and optional L1 ablation.
    Sweep(SweepArgs),
    /// Stability, team and weight analysis of a stored circuit.
    Analyze(AnalyzeArgs),
    /// Render a stored circuit as a DOT graph or an edge CSV.
    Export(ExportArgs),
    /// Run the embedded oracle suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config document.
    #[arg(long, short)]
    config: PathBuf,
    /// Dotted-path override, e.g. `gd.max_iters=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, short)]
    out: PathBuf,
    /// Overwrite existing result files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Worker threads; 1 is the reproducibility reference.
    #[arg(long, env = "GENE_CIRCUITS_WORKERS", default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// circuit.json written by train or evolve.
    #[arg(long)]
    circuit: PathBuf,
    /// Config for target, simulator and analysis settings; defaults if absent.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Csv,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Dot)]
    format: Format,
    #[arg(long, default_value_t = 0.1)]
    edge_tau: f64,
    /// Output file.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

/// Failure classes, each with its own exit code.
enum Failure {
    Config(anyhow::Error),
    Output(anyhow::Error),
    Check,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check => 1,
            Failure::Config(_) => 2,
            Failure::Output(_) => 3,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn output_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Output(e.into())
}

fn load(args: &ConfigArgs) -> Outcome<ExperimentConfig> {
    load_config(&args.config, &args.overrides)
        .map_err(|e| config_err(anyhow!("config `{}`: {e}", args.config.display())))
}

/// Creates the output directory and refuses to clobber `names` without `force`.
fn prepare(out: &OutputArgs, names: &[&str]) -> Outcome<()> {
    fs::create_dir_all(&out.out).map_err(|e| output_err(anyhow!("cannot create `{}`: {e}", out.out.display())))?;
    if !out.force {
        if let Some(existing) = names.iter().map(|n| out.out.join(n)).find(|p| p.exists()) {
            return Err(output_err(anyhow!("`{}` exists; pass --force to overwrite", existing.display())));
        }
    }
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome<()> {
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes()).map_err(|e| output_err(anyhow!("cannot write `{}`: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> Outcome<String> {
    to_json_pretty(v).map_err(output_err)
}

fn response_csv(circuit: &GeneCircuit, cfg: &ExperimentConfig) -> gene_circuits::Result<String> {
    let n = circuit.n();
    let curves = response_curve(circuit, &cfg.target.grid(), &cfg.sim)?;
    let mut header = vec!["x".to_string(), "target".into(), "y_out".into()];
    header.extend((1..=n).map(|k| format!("y_{k}")));
    let mut table = CsvTable::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (x, row) in curves.grid.iter().zip(&curves.rows) {
        let mut cells = vec![fmt_float(*x), fmt_float(cfg.target.eval(*x)), fmt_float(row[n - 1])];
        cells.extend(row.iter().map(|v| fmt_float(*v)));
        table.row(&cells);
    }
    Ok(table.as_str().to_string())
}

const RUN_FILES: [&str; 4] = ["circuit.json", "result.jsonl", "loss.csv", "response.csv"];

fn cmd_run(args: RunArgs, evolutionary: bool) -> Outcome<()> {
    let cfg = load(&args.config)?;
    prepare(&args.output, &RUN_FILES)?;
    let dir = &args.output.out;
    let n = cfg.run.size;
    let (trainer, seed) = if evolutionary {
        (Trainer::Evolutionary, cfg.evo.rng_seed)
    } else if cfg.gd.mutation_rate > 0.0 {
        (Trainer::HybridMutatedGd, cfg.gd.rng_seed)
    } else {
        (Trainer::GradientDescent, cfg.gd.rng_seed)
    };
    let started = Instant::now();
    let result = match train_once(n, trainer, seed, &cfg, &cfg.loss) {
        Ok(r) => r.without_timing(),
        Err(e) => {
            // computation failures are results, not process errors
            let line = serde_json::json!({ "error": e.to_string(), "trainer": trainer, "seed": seed });
            write(dir, "result.jsonl", &(line.to_string() + "\n"))?;
            eprintln!("training failed: {e}");
            return Ok(());
        }
    };
    write(dir, "circuit.json", &json(&CircuitFile::from_result(&result))?)?;
    let mut line = serde_json::to_string(&result).map_err(output_err)?;
    line.push('\n');
    write(dir, "result.jsonl", &line)?;
    let mut loss = CsvTable::new(&["iteration", "loss"]);
    for (k, v) in result.loss_history.iter().enumerate() {
        loss.row(&[k.to_string(), fmt_float(*v)]);
    }
    write(dir, "loss.csv", loss.as_str())?;
    match response_csv(&result.circuit, &cfg) {
        Ok(text) => write(dir, "response.csv", &text)?,
        Err(e) => eprintln!("response curve unavailable: {e}"),
    }
    eprintln!(
        "{:?} n={} seed={} success={} mse={:.4e} iterations={} in {:.1}s",
        result.trainer,
        n,
        seed,
        result.success,
        result.final_mse,
        result.iterations_used,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn records_csv_rows(records: &[TrialRecord]) -> (String, String) {
    let mut scatter = CsvTable::new(&["size", "trial", "re", "im"]);
    for (size, trial, re, im) in stability_scatter(records) {
        scatter.row(&[size.to_string(), trial.to_string(), fmt_float(re), fmt_float(im)]);
    }
    let mut trend = CsvTable::new(&["size", "median_max_real_part"]);
    for (size, med) in stability_trend(records) {
        trend.row(&[size.to_string(), med.map(fmt_float).unwrap_or_default()]);
    }
    (scatter.as_str().to_string(), trend.as_str().to_string())
}

fn cmd_sweep(args: SweepArgs) -> Outcome<()> {
    let cfg = load(&args.config)?;
    let mut names = vec![
        "records.jsonl".to_string(),
        "learnability.csv".into(),
        "sweep_summary.json".into(),
        "stability_scatter.csv".into(),
        "stability_trend.csv".into(),
        "signs_summary.csv".into(),
    ];
    names.extend(cfg.sweep.sign_sizes.iter().map(|s| format!("signs_{s}.csv")));
    if cfg.sweep.l1_ablation {
        names.push("l1_ablation.csv".into());
        names.push("l1_records.jsonl".into());
    }
    prepare(&args.output, &names.iter().map(String::as_str).collect::<Vec<_>>())?;
    let dir = &args.output.out;
    let started = Instant::now();

    let mut writer = JsonlWriter::create(&dir.join("records.jsonl")).map_err(output_err)?;
    let mut records = Vec::new();
    let curve = learnability_sweep_with(&cfg, args.workers, |r| {
        writer.append(r)?;
        eprintln!("size {:>2} trial {:>3}: success={} mse={:.3e}", r.size, r.trial, r.success, r.final_mse);
        records.push(r.clone());
        Ok(())
    })
    .map_err(|e| match e {
        Error::Io(_) => output_err(e),
        other => config_err(other),
    })?;

    let mut table = CsvTable::new(&["size", "successes", "trials", "ratio"]);
    for p in &curve.points {
        table.row(&[p.size.to_string(), p.successes.to_string(), p.trials.to_string(), fmt_float(p.ratio)]);
    }
    write(dir, "learnability.csv", table.as_str())?;
    write(dir, "sweep_summary.json", &json(&curve)?)?;
    let (scatter, trend) = records_csv_rows(&records);
    write(dir, "stability_scatter.csv", &scatter)?;
    write(dir, "stability_trend.csv", &trend)?;

    let signs = sign_shift_from_records(&records, &cfg.sweep.sign_sizes, &cfg);
    let mut summary = CsvTable::new(&["size", "included_trials", "omitted", "mean_negative_fraction", "mean_weight"]);
    for s in &signs {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        summary.row(&[
            s.size.to_string(),
            s.included_trials.to_string(),
            s.omitted.to_string(),
            opt(s.mean_negative_fraction),
            opt(s.mean_weight),
        ]);
        let mut bins = CsvTable::new(&["bin_index", "lo", "hi", "count"]);
        if let Some(h) = &s.histogram {
            for b in &h.bins {
                bins.row(&[b.index.to_string(), fmt_float(b.lo), fmt_float(b.hi), b.count.to_string()]);
            }
        }
        let mut text = bins.as_str().to_string();
        if s.omitted {
            text.push_str("# omitted: no successful or near-successful trials at this size\n");
        }
        write(dir, &format!("signs_{}.csv", s.size), &text)?;
    }
    write(dir, "signs_summary.csv", summary.as_str())?;

    if cfg.sweep.l1_ablation {
        let ablation = l1_ablation(&cfg, args.workers).map_err(config_err)?;
        let mut table = CsvTable::new(&[
            "lambda",
            "trials",
            "successes",
            "success_ratio",
            "mean_abs_sum",
            "median_abs_sum",
            "mean_signed_sum",
            "median_signed_sum",
        ]);
        for r in &ablation.rows {
            table.row(&[
                fmt_float(r.lambda),
                r.trials.to_string(),
                r.successes.to_string(),
                fmt_float(r.success_ratio),
                fmt_float(r.mean_abs_sum),
                fmt_float(r.median_abs_sum),
                fmt_float(r.mean_signed_sum),
                fmt_float(r.median_signed_sum),
            ]);
        }
        write(dir, "l1_ablation.csv", table.as_str())?;
        let mut w = JsonlWriter::create(&dir.join("l1_records.jsonl")).map_err(output_err)?;
        for r in ablation.records.iter().flatten() {
            w.append(r).map_err(output_err)?;
        }
    }
    eprintln!(
        "{} trials in {:.1}s, threshold size {:?}",
        records.len(),
        started.elapsed().as_secs_f64(),
        curve.threshold_size
    );
    Ok(())
}

#[derive(Serialize)]
struct AnalysisOutput {
    n: usize,
    output_mse: Option<f64>,
    success: bool,
    stability: Option<StabilityReport>,
    stability_error: Option<String>,
    returns_to_fixed_point: Option<bool>,
    team: Option<TeamReport>,
    histogram: WeightHistogram,
    node_strength: Vec<f64>,
    feedback_sum: Vec<f64>,
    l1_norm: f64,
    signed_sum: f64,
    edge_connectivity: usize,
}

fn cmd_analyze(args: AnalyzeArgs) -> Outcome<()> {
    let cfg = match &args.config {
        Some(path) => load(&ConfigArgs {
            config: path.clone(),
            overrides: args.overrides.clone(),
        })?,
        None => gene_circuits::io::parse_config("{}", &args.overrides).map_err(config_err)?,
    };
    let file = read_circuit(&args.circuit).map_err(|e| config_err(anyhow!("circuit `{}`: {e}", args.circuit.display())))?;
    let circuit = file.circuit().map_err(config_err)?;
    prepare(&args.output, &["analysis.json", "eigenvalues.csv", "response.csv"])?;
    let dir = &args.output.out;
    let a = &cfg.analysis;

    let curves = response_curve(&circuit, &cfg.target.grid(), &cfg.sim).ok();
    let output = curves.as_ref().map(|c| c.output());
    let stability_sim = SimConfig {
        max_steps: a.stability_max_steps.max(cfg.sim.max_steps),
        ..cfg.sim.clone()
    };
    let (stability, stability_error) = match stability_report(&circuit, a.reference_input, &stability_sim) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let returns_to_fixed_point = stability.as_ref().map(|r| {
        returns_after_perturbation(&circuit, r, &stability_sim, a.perturbation_amplitude, a.perturbation_tolerance, file.meta.seed)
    });
    let report = AnalysisOutput {
        n: circuit.n(),
        output_mse: output.as_ref().and_then(|o| mse(o, &cfg.target.target_values()).ok()),
        success: output.as_ref().is_some_and(|o| is_success(o, &cfg.target, &cfg.loss)),
        team: curves.as_ref().map(|c| team_metrics(c, &cfg.target)),
        histogram: weight_sign_histogram(&circuit, a.histogram_bin_width),
        node_strength: node_strength(&circuit),
        feedback_sum: feedback_sum(&circuit),
        l1_norm: circuit.l1_norm(),
        signed_sum: circuit.signed_sum(),
        edge_connectivity: edge_connectivity(&binarize(&circuit, a.edge_tau)),
        stability,
        stability_error,
        returns_to_fixed_point,
    };
    write(dir, "analysis.json", &json(&report)?)?;
    let mut eig = CsvTable::new(&["re", "im"]);
    for e in report.stability.iter().flat_map(|s| &s.eigenvalues) {
        eig.row(&[fmt_float(e.re), fmt_float(e.im)]);
    }
    write(dir, "eigenvalues.csv", eig.as_str())?;
    if let Ok(text) = response_csv(&circuit, &cfg) {
        write(dir, "response.csv", &text)?;
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Outcome<()> {
    let file = read_circuit(&args.circuit).map_err(|e| config_err(anyhow!("circuit `{}`: {e}", args.circuit.display())))?;
    let circuit = file.circuit().map_err(config_err)?;
    if args.edge_tau.is_nan() || args.edge_tau < 0.0 {
        return Err(config_err(anyhow!("--edge-tau must be nonnegative")));
    }
    if args.out.exists() && !args.force {
        return Err(output_err(anyhow!("`{}` exists; pass --force to overwrite", args.out.display())));
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(output_err)?;
    }
    let text = match args.format {
        Format::Dot => export::to_dot(&circuit, args.edge_tau),
        Format::Csv => export::to_edge_csv(&circuit, args.edge_tau),
    };
    write_atomic(&args.out, text.as_bytes()).map_err(|e| output_err(anyhow!("cannot write `{}`: {e}", args.out.display())))
}

fn cmd_verify(args: VerifyArgs) -> Outcome<()> {
    let results = verify::run_all(args.seed);
    print!("{}", verify::render_table(&results));
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => cmd_run(a, false),
        Command::Evolve(a) => cmd_run(a, true),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Export(a) => cmd_export(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) | Failure::Output(e) => eprintln!("error: {e:#}"),
                Failure::Check => eprintln!("oracle checks failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
