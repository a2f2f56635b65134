//! Repeated seeded trials: the learnability-vs-size sweep, the weight-sign
//! study near the collapse sizes and the L1 ablation.
//!
//! Every trial is a pure function of the configuration and its derived seed,
//! so sweeps can be spread over a worker pool and still produce the same
//! record set in the same (size, trial) order.

use std::collections::{BTreeMap, HashMap};
use std::sync::{mpsc, Arc};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    binarize, edge_connectivity, feedback_sum, node_strength, returns_after_perturbation, stability_report,
    team_metrics, weight_sign_histogram, StabilityReport, TeamReport, WeightHistogram,
};
use crate::analysis::weights::bins_from_counts;
use crate::dynamics::{response_curve, SimConfig};
use crate::error::{Error, Result};
use crate::targets::{is_success, mse, LossConfig, TargetSpec};
use crate::train_evo::{evolve, EvoConfig};
use crate::train_gd::{evaluate, prune, train_gd, GdConfig, TrainResult, Trainer};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// Trains without penalty regardless of `loss.l1_lambda`.
    #[default]
    None,
    L1,
    /// L1 training followed by magnitude pruning at `analysis.prune_tau`.
    L1Pruned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub reference_input: f64,
    pub edge_tau: f64,
    pub prune_tau: f64,
    pub histogram_bin_width: f64,
    /// Step cap when locating the fixed point for the stability report.
    pub stability_max_steps: usize,
    pub perturbation_amplitude: f64,
    pub perturbation_tolerance: f64,
    /// Trials with output MSE up to this multiple of the success threshold
    /// count as near-successful in the sign study.
    pub near_success_factor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            reference_input: 1.0,
            edge_tau: 0.1,
            prune_tau: 0.1,
            histogram_bin_width: 0.25,
            stability_max_steps: 20_000,
            perturbation_amplitude: 1e-3,
            perturbation_tolerance: 1e-4,
            near_success_factor: 2.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.reference_input.is_finite() {
            return Err(Error::config("analysis.reference_input must be finite"));
        }
        if !(self.edge_tau >= 0.0 && self.prune_tau >= 0.0) {
            return Err(Error::config("analysis.edge_tau and analysis.prune_tau must be nonnegative"));
        }
        if !(self.histogram_bin_width > 0.0 && self.histogram_bin_width.is_finite()) {
            return Err(Error::config("analysis.histogram_bin_width must be positive"));
        }
        if self.stability_max_steps == 0 {
            return Err(Error::config("analysis.stability_max_steps must be positive"));
        }
        if !(self.perturbation_amplitude > 0.0 && self.perturbation_tolerance > 0.0) {
            return Err(Error::config("analysis perturbation amplitude and tolerance must be positive"));
        }
        if self.near_success_factor.is_nan() || self.near_success_factor < 1.0 {
            return Err(Error::config("analysis.near_success_factor must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub trials_per_size: usize,
    pub trainer: Trainer,
    pub base_seed: u64,
    pub regularization: Regularization,
    pub sign_sizes: Vec<usize>,
    /// Also run the L1 ablation after the sweep (CLI only).
    pub l1_ablation: bool,
    pub l1_lambdas: Vec<f64>,
    pub l1_size: usize,
    pub l1_trials: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: (3..=20).collect(),
            trials_per_size: 100,
            trainer: Trainer::GradientDescent,
            base_seed: 0,
            regularization: Regularization::None,
            sign_sizes: vec![16, 17, 18],
            l1_ablation: false,
            l1_lambdas: vec![0.0, 2e-3, 2e-2, 2e-1],
            l1_size: 7,
            l1_trials: 30,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::config("sweep.sizes must be nonempty"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) || self.sizes[0] < 2 {
            return Err(Error::config("sweep.sizes must be strictly ascending and at least 2"));
        }
        if self.trials_per_size == 0 || self.l1_trials == 0 {
            return Err(Error::config("sweep trial counts must be at least 1"));
        }
        if self.l1_size < 2 || self.sign_sizes.iter().any(|&s| s < 2) {
            return Err(Error::config("sweep sizes must be at least 2"));
        }
        if self.l1_lambdas.is_empty() || self.l1_lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::config("sweep.l1_lambdas must be nonempty values in [0, 1]"));
        }
        Ok(())
    }
}

/// Size of the circuit trained by the single-run subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { size: 4 }
    }
}

/// The whole configuration document, one section per module.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub target: TargetSpec,
    pub loss: LossConfig,
    pub gd: GdConfig,
    pub evo: EvoConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.target.validate()?;
        self.loss.validate()?;
        self.gd.validate()?;
        self.evo.validate()?;
        self.analysis.validate()?;
        self.sweep.validate()?;
        if self.run.size < 2 {
            return Err(Error::config("run.size must be at least 2"));
        }
        Ok(())
    }

    /// Loss settings a trial trains with under the sweep's regularization.
    pub fn trial_loss(&self) -> LossConfig {
        match self.sweep.regularization {
            Regularization::None => LossConfig {
                l1_lambda: 0.0,
                ..self.loss.clone()
            },
            Regularization::L1 | Regularization::L1Pruned => self.loss.clone(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `k` at circuit size `size`.
pub fn trial_seed(base: u64, size: usize, k: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ size as u64) ^ k as u64)
}

/// Trains one circuit with the given trainer and seed.
pub fn train_once(
    size: usize,
    trainer: Trainer,
    seed: u64,
    cfg: &ExperimentConfig,
    loss: &LossConfig,
) -> Result<TrainResult> {
    match trainer {
        Trainer::GradientDescent => {
            let gd = GdConfig {
                rng_seed: seed,
                mutation_rate: 0.0,
                ..cfg.gd.clone()
            };
            train_gd(size, &cfg.target, &cfg.sim, &gd, loss)
        }
        Trainer::HybridMutatedGd => {
            let rate = if cfg.gd.mutation_rate > 0.0 {
                cfg.gd.mutation_rate
            } else {
                0.5 / (size * size) as f64
            };
            let gd = GdConfig {
                rng_seed: seed,
                mutation_rate: rate,
                ..cfg.gd.clone()
            };
            train_gd(size, &cfg.target, &cfg.sim, &gd, loss)
        }
        Trainer::Evolutionary => {
            let evo = EvoConfig {
                rng_seed: seed,
                ..cfg.evo.clone()
            };
            evolve(size, &cfg.target, &cfg.sim, &evo, loss)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub tau: f64,
    pub zeroed: usize,
    pub mse_before: Option<f64>,
    pub mse_after: Option<f64>,
    pub success_after: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub size: usize,
    pub trial: usize,
    pub seed: u64,
    pub trainer: Trainer,
    pub regularization: Regularization,
    pub l1_lambda: f64,
    pub success: bool,
    pub final_mse: f64,
    /// Training output with the wall-clock field zeroed; absent if training errored.
    pub result: Option<TrainResult>,
    pub pruning: Option<PruneOutcome>,
    pub stability: Option<StabilityReport>,
    /// Perturb-and-return check on the stability report's fixed point.
    pub returns_to_fixed_point: Option<bool>,
    pub team: Option<TeamReport>,
    pub histogram: Option<WeightHistogram>,
    pub node_strength: Vec<f64>,
    pub feedback_sum: Vec<f64>,
    pub l1_norm: f64,
    pub signed_sum: f64,
    pub edge_connectivity: Option<usize>,
    /// Stage name mapped to the error that stage hit.
    pub errors: BTreeMap<String, String>,
}

impl TrialRecord {
    pub fn is_near_success(&self, loss: &LossConfig, factor: f64) -> bool {
        self.final_mse.is_finite() && self.final_mse <= factor * loss.success_mse
    }
}

/// Trains and analyzes one trial. Stage failures are recorded, never returned.
pub fn run_trial(size: usize, k: usize, trainer: Trainer, cfg: &ExperimentConfig) -> TrialRecord {
    let seed = trial_seed(cfg.sweep.base_seed, size, k);
    let loss = cfg.trial_loss();
    let mut record = TrialRecord {
        size,
        trial: k,
        seed,
        trainer,
        regularization: cfg.sweep.regularization,
        l1_lambda: loss.l1_lambda,
        success: false,
        final_mse: f64::INFINITY,
        result: None,
        pruning: None,
        stability: None,
        returns_to_fixed_point: None,
        team: None,
        histogram: None,
        node_strength: Vec::new(),
        feedback_sum: Vec::new(),
        l1_norm: 0.0,
        signed_sum: 0.0,
        edge_connectivity: None,
        errors: BTreeMap::new(),
    };
    let mut result = match train_once(size, trainer, seed, cfg, &loss) {
        Ok(r) => r.without_timing(),
        Err(e) => {
            record.errors.insert("train".into(), e.to_string());
            return record;
        }
    };
    if cfg.sweep.regularization == Regularization::L1Pruned {
        let tau = cfg.analysis.prune_tau;
        let pruned = prune(&result.circuit, tau);
        let zeroed = result
            .circuit
            .weights()
            .iter()
            .zip(pruned.weights())
            .filter(|(a, b)| a != b)
            .count();
        let targets = cfg.target.target_values();
        let mse_of = |out: Option<Vec<f64>>| out.and_then(|o| mse(&o, &targets).ok());
        let after = evaluate(&pruned, &cfg.target, &cfg.sim);
        let success_after = after.as_ref().is_some_and(|o| is_success(o, &cfg.target, &loss));
        let outcome = PruneOutcome {
            tau,
            zeroed,
            mse_before: mse_of(evaluate(&result.circuit, &cfg.target, &cfg.sim)),
            mse_after: mse_of(after),
            success_after,
        };
        result.final_mse = outcome.mse_after.unwrap_or(f64::INFINITY);
        result.success = success_after;
        result.circuit = pruned;
        record.pruning = Some(outcome);
    }
    record.success = result.success;
    record.final_mse = result.final_mse;
    analyze_into(&mut record, &result, cfg);
    record.result = Some(result);
    record
}

fn analyze_into(record: &mut TrialRecord, result: &TrainResult, cfg: &ExperimentConfig) {
    let circuit = &result.circuit;
    let a = &cfg.analysis;
    record.histogram = Some(weight_sign_histogram(circuit, a.histogram_bin_width));
    record.node_strength = node_strength(circuit);
    record.feedback_sum = feedback_sum(circuit);
    record.l1_norm = circuit.l1_norm();
    record.signed_sum = circuit.signed_sum();
    record.edge_connectivity = Some(edge_connectivity(&binarize(circuit, a.edge_tau)));

    match response_curve(circuit, &cfg.target.grid(), &cfg.sim) {
        Ok(curves) => record.team = Some(team_metrics(&curves, &cfg.target)),
        Err(e) => {
            record.errors.insert("team".into(), e.to_string());
        }
    }

    let stability_sim = SimConfig {
        max_steps: a.stability_max_steps.max(cfg.sim.max_steps),
        ..cfg.sim.clone()
    };
    match stability_report(circuit, a.reference_input, &stability_sim) {
        Ok(report) => {
            record.returns_to_fixed_point = Some(returns_after_perturbation(
                circuit,
                &report,
                &stability_sim,
                a.perturbation_amplitude,
                a.perturbation_tolerance,
                record.seed,
            ));
            record.stability = Some(report);
        }
        Err(e) => {
            record.errors.insert("stability".into(), e.to_string());
        }
    }
}

/// Runs `jobs` on a pool of `workers` threads and hands each result to
/// `sink` in job order, as soon as all earlier jobs have been handed over.
fn run_ordered<J, F>(
    jobs: Vec<J>,
    workers: usize,
    run: F,
    mut sink: impl FnMut(TrialRecord) -> Result<()>,
) -> Result<()>
where
    J: Send + 'static,
    F: Fn(J) -> TrialRecord + Send + Sync + 'static,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let run = Arc::new(run);
    let (tx, rx) = mpsc::channel();
    let total = jobs.len();
    for (idx, job) in jobs.into_iter().enumerate() {
        let tx = tx.clone();
        let run = Arc::clone(&run);
        pool.spawn(move || {
            let _ = tx.send((idx, run(job)));
        });
    }
    drop(tx);
    let mut pending = HashMap::new();
    let mut next = 0;
    for (idx, record) in rx {
        pending.insert(idx, record);
        while let Some(r) = pending.remove(&next) {
            sink(r)?;
            next += 1;
        }
    }
    if next != total {
        return Err(Error::config("a sweep worker terminated without a result"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub successes: usize,
    pub trials: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnabilityCurve {
    pub points: Vec<CurvePoint>,
    /// Smallest size whose ratio is below half the ratio at the smallest size.
    pub threshold_size: Option<usize>,
}

impl LearnabilityCurve {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut tally: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for r in records {
            let e = tally.entry(r.size).or_default();
            e.0 += usize::from(r.success);
            e.1 += 1;
        }
        let points: Vec<CurvePoint> = tally
            .into_iter()
            .map(|(size, (successes, trials))| CurvePoint {
                size,
                successes,
                trials,
                ratio: successes as f64 / trials as f64,
            })
            .collect();
        let threshold_size = points.first().and_then(|base| {
            points
                .iter()
                .skip(1)
                .find(|p| p.ratio < 0.5 * base.ratio)
                .map(|p| p.size)
        });
        Self { points, threshold_size }
    }

    pub fn ratio_at(&self, size: usize) -> Option<f64> {
        self.points.iter().find(|p| p.size == size).map(|p| p.ratio)
    }
}

/// Sweep with a per-record callback, records arriving in (size, trial) order.
pub fn learnability_sweep_with(
    cfg: &ExperimentConfig,
    workers: usize,
    mut sink: impl FnMut(&TrialRecord) -> Result<()>,
) -> Result<LearnabilityCurve> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .sweep
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.sweep.trials_per_size).map(move |k| (s, k)))
        .collect();
    let shared = Arc::new(cfg.clone());
    let trainer = cfg.sweep.trainer;
    let mut tally = Vec::new();
    run_ordered(
        jobs,
        workers,
        move |(s, k)| run_trial(s, k, trainer, &shared),
        |r| {
            sink(&r)?;
            tally.push(r);
            Ok(())
        },
    )?;
    Ok(LearnabilityCurve::from_records(&tally))
}

pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub curve: LearnabilityCurve,
}

pub fn learnability_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepOutput> {
    let mut records = Vec::new();
    let curve = learnability_sweep_with(cfg, workers, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok(SweepOutput { records, curve })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignSizeSummary {
    pub size: usize,
    pub included_trials: usize,
    /// `None` when no trial at this size was successful or near-successful.
    pub histogram: Option<WeightHistogram>,
    pub omitted: bool,
    pub mean_negative_fraction: Option<f64>,
    pub mean_weight: Option<f64>,
}

/// Pools the weight histograms of successful and near-successful trials per size.
pub fn sign_shift_from_records(
    records: &[TrialRecord],
    sizes: &[usize],
    cfg: &ExperimentConfig,
) -> Vec<SignSizeSummary> {
    let width = cfg.analysis.histogram_bin_width;
    sizes
        .iter()
        .map(|&size| {
            let included: Vec<&WeightHistogram> = records
                .iter()
                .filter(|r| r.size == size && r.is_near_success(&cfg.loss, cfg.analysis.near_success_factor))
                .filter_map(|r| r.histogram.as_ref())
                .collect();
            if included.is_empty() {
                return SignSizeSummary {
                    size,
                    included_trials: 0,
                    histogram: None,
                    omitted: true,
                    mean_negative_fraction: None,
                    mean_weight: None,
                };
            }
            let mut counts = BTreeMap::new();
            let mut total = 0;
            let mut weight_sum = 0.0;
            for h in &included {
                for b in &h.bins {
                    *counts.entry(b.index).or_insert(0usize) += b.count;
                }
                total += h.total;
                weight_sum += h.mean * h.total as f64;
            }
            let m = included.len() as f64;
            let mean_negative_fraction = included.iter().map(|h| h.negative_fraction).sum::<f64>() / m;
            let mean_weight = weight_sum / total as f64;
            SignSizeSummary {
                size,
                included_trials: included.len(),
                histogram: Some(WeightHistogram {
                    bin_width: width,
                    bins: bins_from_counts(&counts, width),
                    negative_fraction: mean_negative_fraction,
                    mean: mean_weight,
                    total,
                }),
                omitted: false,
                mean_negative_fraction: Some(mean_negative_fraction),
                mean_weight: Some(mean_weight),
            }
        })
        .collect()
}

/// Runs `cfg.sweep.trials_per_size` trials at each of `sizes` and pools them.
pub fn sign_shift_study(cfg: &ExperimentConfig, sizes: &[usize], workers: usize) -> Result<Vec<SignSizeSummary>> {
    let mut sub = cfg.clone();
    sub.sweep.sizes = sizes.to_vec();
    let out = learnability_sweep(&sub, workers)?;
    Ok(sign_shift_from_records(&out.records, sizes, cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Row {
    pub lambda: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_ratio: f64,
    pub mean_abs_sum: f64,
    pub median_abs_sum: f64,
    pub mean_signed_sum: f64,
    pub median_signed_sum: f64,
}

pub struct L1Ablation {
    pub rows: Vec<L1Row>,
    /// One record list per lambda, trial `k` of every list sharing a seed.
    pub records: Vec<Vec<TrialRecord>>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}

/// Trains `cfg.sweep.l1_trials` circuits of size `cfg.sweep.l1_size` per
/// lambda, with the same seeds for every lambda.
pub fn l1_ablation(cfg: &ExperimentConfig, workers: usize) -> Result<L1Ablation> {
    cfg.validate()?;
    let lambdas = cfg.sweep.l1_lambdas.clone();
    let size = cfg.sweep.l1_size;
    let trials = cfg.sweep.l1_trials;
    let regularization = match cfg.sweep.regularization {
        Regularization::None => Regularization::L1,
        r => r,
    };
    let jobs: Vec<(f64, usize)> = lambdas.iter().flat_map(|&l| (0..trials).map(move |k| (l, k))).collect();
    let shared = Arc::new(cfg.clone());
    let trainer = cfg.sweep.trainer;
    let mut all = Vec::new();
    run_ordered(
        jobs,
        workers,
        move |(lambda, k)| {
            let mut c = (*shared).clone();
            c.loss.l1_lambda = lambda;
            c.sweep.regularization = regularization;
            run_trial(size, k, trainer, &c)
        },
        |r| {
            all.push(r);
            Ok(())
        },
    )?;
    let records: Vec<Vec<TrialRecord>> = all.chunks(trials).map(<[TrialRecord]>::to_vec).collect();
    let rows = lambdas
        .iter()
        .zip(&records)
        .map(|(&lambda, recs)| {
            let abs: Vec<f64> = recs.iter().map(|r| r.l1_norm).collect();
            let signed: Vec<f64> = recs.iter().map(|r| r.signed_sum).collect();
            let successes = recs.iter().filter(|r| r.success).count();
            L1Row {
                lambda,
                trials: recs.len(),
                successes,
                success_ratio: successes as f64 / recs.len() as f64,
                mean_abs_sum: abs.iter().sum::<f64>() / abs.len() as f64,
                median_abs_sum: median(&abs).unwrap_or(f64::NAN),
                mean_signed_sum: signed.iter().sum::<f64>() / signed.len() as f64,
                median_signed_sum: median(&signed).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(L1Ablation { rows, records })
}

/// `(size, trial, re, im)` rows for the eigenvalue scatter.
pub fn stability_scatter(records: &[TrialRecord]) -> Vec<(usize, usize, f64, f64)> {
    records
        .iter()
        .filter_map(|r| r.stability.as_ref().map(|s| (r, s)))
        .flat_map(|(r, s)| s.eigenvalues.iter().map(move |e| (r.size, r.trial, e.re, e.im)))
        .collect()
}

/// Median largest real part over successful trials, per size.
pub fn stability_trend(records: &[TrialRecord]) -> Vec<(usize, Option<f64>)> {
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        let entry = by_size.entry(r.size).or_default();
        if let (true, Some(s)) = (r.success, &r.stability) {
            entry.push(s.max_real_part);
        }
    }
    by_size.into_iter().map(|(size, v)| (size, median(&v))).collect()
}
