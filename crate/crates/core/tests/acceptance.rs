//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the lines come out in
//! order and unbuffered. The process exits nonzero on a failed criterion only
//! when `ACCEPTANCE_STRICT=1`; failures are always printed.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use gene_circuits::analysis::{eigenvalues, jacobian};
use gene_circuits::dynamics::{response_curve, steady_state};
use gene_circuits::experiments::{
    l1_ablation, learnability_sweep, median, ExperimentConfig, TrialRecord,
};
use gene_circuits::targets::mse;
use gene_circuits::train_evo::evolve;
use gene_circuits::train_gd::prune;
use gene_circuits::verify::{check_connectivity, check_eigen_polynomial, check_gradients};
use gene_circuits::{EvoConfig, GeneCircuit, LossConfig, SimConfig, TargetSpec};

#[derive(Default)]
struct Report {
    lines: Vec<(u32, bool, String)>,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, passed: bool, elapsed: Duration, detail: String) {
        let text = format!(
            "criterion {id:>2} [{}] {title}: {detail} ({:.1} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        println!("{text}");
        self.lines.push((id, passed, text));
    }

    fn failures(&self) -> usize {
        self.lines.iter().filter(|l| !l.1).count()
    }
}

fn criterion_1(report: &mut Report) {
    let started = Instant::now();
    let sim = SimConfig::default();
    let mut state_err: f64 = 0.0;
    let mut eig_err: f64 = 0.0;
    for n in 1..=20 {
        let c = GeneCircuit::zeros(n);
        let ss = steady_state(&c, 0.0, &sim).expect("zero circuit integrates");
        if !ss.converged {
            state_err = f64::INFINITY;
        }
        state_err = ss.state.iter().fold(state_err, |m, y| m.max((y - 0.5).abs()));
        let ev = eigenvalues(&jacobian(&c, &ss.state), n).expect("eigenvalues");
        eig_err = ev.iter().fold(eig_err, |m, e| m.max((e - Complex64::new(-1.0, 0.0)).norm()));
    }
    let elapsed = started.elapsed();
    let passed = state_err <= 1e-6 && eig_err <= 1e-12 && elapsed < Duration::from_secs(1);
    report.line(
        1,
        "analytic fixed point",
        passed,
        elapsed,
        format!("n=1..20, max |y-0.5| = {state_err:.2e} (tol 1e-6), max |lambda+1| = {eig_err:.2e} (tol 1e-12)"),
    );
}

fn criterion_2(report: &mut Report) {
    let started = Instant::now();
    let r = check_gradients(20, 7);
    let elapsed = started.elapsed();
    report.line(
        2,
        "gradient correctness",
        r.passed && elapsed < Duration::from_secs(60),
        elapsed,
        format!("{} circuit/target cases, worst entry error {:.2e} (tol 1e-4)", r.cases, r.worst),
    );
}

fn criterion_3(report: &mut Report) {
    let started = Instant::now();
    let eig = check_eigen_polynomial(50, 8);
    let conn = check_connectivity(100, 9);
    let elapsed = started.elapsed();
    report.line(
        3,
        "eigen and connectivity oracles",
        eig.passed && conn.passed && elapsed < Duration::from_secs(60),
        elapsed,
        format!(
            "50 matrices worst root distance {:.2e} (tol 1e-6), 100 graphs {} mismatches",
            eig.worst, conn.worst as usize
        ),
    );
}

/// Criteria 4 and 8 share the small-size trials.
fn criteria_4_and_8(report: &mut Report) {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.sizes = vec![3, 4];
    cfg.sweep.trials_per_size = 25;
    let out = learnability_sweep(&cfg, 1).expect("sweep runs");
    let elapsed = started.elapsed();
    let successes = out.records.iter().filter(|r| r.success).count();
    let ratio = successes as f64 / out.records.len() as f64;
    report.line(
        4,
        "small-N learnability",
        ratio >= 0.5 && elapsed < Duration::from_secs(600),
        elapsed,
        format!(
            "n=3 {}/25, n=4 {}/25, pooled {successes}/50 = {ratio:.2} (need >= 0.50)",
            out.curve.points[0].successes, out.curve.points[1].successes
        ),
    );

    let started = Instant::now();
    let ok: Vec<&TrialRecord> = out.records.iter().filter(|r| r.success).collect();
    let stable = ok
        .iter()
        .filter(|r| r.stability.as_ref().is_some_and(|s| s.max_real_part < 0.0))
        .count();
    let clear: Vec<&&TrialRecord> = ok
        .iter()
        .filter(|r| r.stability.as_ref().is_some_and(|s| s.max_real_part < -0.05))
        .collect();
    let returned = clear.iter().filter(|r| r.returns_to_fixed_point == Some(true)).count();
    let frac = if ok.is_empty() { 0.0 } else { stable as f64 / ok.len() as f64 };
    report.line(
        8,
        "stability consistency",
        !ok.is_empty() && frac >= 0.9 && returned == clear.len(),
        started.elapsed(),
        format!(
            "{stable}/{} successful circuits stable ({frac:.2}, need >= 0.90); {returned}/{} with max Re < -0.05 return after perturbation",
            ok.len(),
            clear.len()
        ),
    );
}

fn criteria_5_and_10(report: &mut Report) {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.sizes = vec![4, 8, 12, 16, 18];
    cfg.sweep.trials_per_size = 30;

    let started = Instant::now();
    let serial = learnability_sweep(&cfg, 1).expect("sweep runs");
    let elapsed = started.elapsed();
    let curve = &serial.curve;
    let r = |s| curve.ratio_at(s).unwrap_or(f64::NAN);
    let drop_ok = r(18) <= r(4) - 0.40;
    let tail = [r(12), r(16), r(18)];
    let rises: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    let monotone_ok = rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.1);
    let ratios: Vec<String> = curve.points.iter().map(|p| format!("{}:{}/{}", p.size, p.successes, p.trials)).collect();
    report.line(
        5,
        "learnability collapse",
        drop_ok && monotone_ok && elapsed < Duration::from_secs(7200),
        elapsed,
        format!(
            "ratios [{}]; ratio(18) - ratio(4) = {:+.2} (need <= -0.40); 12->16->18 non-increasing up to one 0.1 inversion: {monotone_ok}",
            ratios.join(" "),
            r(18) - r(4)
        ),
    );

    let started = Instant::now();
    let canon = |records: &[TrialRecord]| {
        let mut v: Vec<(usize, usize, String)> = records
            .iter()
            .map(|r| (r.size, r.trial, serde_json::to_string(r).expect("record serializes")))
            .collect();
        v.sort();
        v
    };
    let parallel = learnability_sweep(&cfg, 8).expect("sweep runs");
    let rerun = learnability_sweep(&cfg, 1).expect("sweep runs");
    let base = canon(&serial.records);
    let same_parallel = base == canon(&parallel.records) && parallel.curve == serial.curve;
    let same_rerun = base == canon(&rerun.records) && rerun.curve == serial.curve;
    report.line(
        10,
        "determinism and parallel-equals-serial",
        same_parallel && same_rerun,
        started.elapsed(),
        format!(
            "{} records; workers 1 vs 8 identical: {same_parallel}; rerun identical: {same_rerun}",
            base.len()
        ),
    );
}

fn criterion_6(report: &mut Report) {
    let started = Instant::now();
    let spec = TargetSpec::french_flag();
    let sim = SimConfig::default();
    let loss = LossConfig::default();
    let mut successes = 0;
    let mut monotone = 0;
    let mut generations = Vec::new();
    for seed in 0..20u64 {
        let cfg = EvoConfig {
            rng_seed: seed,
            max_generations: 5000,
            ..EvoConfig::default()
        };
        let r = evolve(4, &spec, &sim, &cfg, &loss).expect("evolution runs");
        successes += usize::from(r.success);
        monotone += usize::from(r.loss_history.windows(2).all(|w| w[1] <= w[0]));
        if r.success {
            generations.push(r.iterations_used as f64);
        }
    }
    let elapsed = started.elapsed();
    report.line(
        6,
        "GA viability",
        successes as f64 / 20.0 >= 0.3 && monotone == 20 && elapsed < Duration::from_secs(1800),
        elapsed,
        format!(
            "{successes}/20 seeds succeed within 5000 generations (need >= 6), median generations {}; elite cost nonincreasing for {monotone}/20",
            median(&generations).map_or("n/a".to_string(), |m| format!("{m:.0}"))
        ),
    );
}

fn criteria_7_and_9(report: &mut Report) {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.l1_size = 7;
    cfg.sweep.l1_trials = 20;
    let ablation = l1_ablation(&cfg, 1).expect("ablation runs");
    let elapsed = started.elapsed();
    let lambda_index = |l: f64| cfg.sweep.l1_lambdas.iter().position(|&x| x == l).expect("lambda in grid");
    let (i0, i2, i3) = (lambda_index(0.0), lambda_index(2e-2), lambda_index(2e-1));
    let pairs: Vec<(f64, f64)> = ablation.records[i0]
        .iter()
        .zip(&ablation.records[i2])
        .filter(|(a, b)| a.success && b.success)
        .map(|(a, b)| (a.l1_norm, b.l1_norm))
        .collect();
    let m0 = median(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let m2 = median(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let shrink_ok = matches!((m0, m2), (Some(a), Some(b)) if b < a);
    let underfit_ok = ablation.rows[i3].success_ratio <= ablation.rows[i2].success_ratio;
    let rows: Vec<String> = ablation
        .rows
        .iter()
        .map(|r| format!("{}: {}/{} |W| {:.1} sumW {:.1}", r.lambda, r.successes, r.trials, r.median_abs_sum, r.median_signed_sum))
        .collect();
    let fmt = |m: Option<f64>| m.map_or("n/a".to_string(), |v| format!("{v:.2}"));
    report.line(
        7,
        "L1 direction",
        shrink_ok && underfit_ok && elapsed < Duration::from_secs(1200),
        elapsed,
        format!(
            "[{}]; {} pairs successful at both 0 and 2e-2, median |W| {} -> {}; success(2e-1) <= success(2e-2): {underfit_ok}",
            rows.join("; "),
            pairs.len(),
            fmt(m0),
            fmt(m2)
        ),
    );

    let started = Instant::now();
    let doubled = LossConfig {
        success_mse: 2.0 * cfg.loss.success_mse,
        ..cfg.loss.clone()
    };
    let targets = cfg.target.target_values();
    let mut kept = 0;
    let mut total = 0;
    for r in ablation.records.iter().flatten().filter(|r| r.success) {
        let circuit = &r.result.as_ref().expect("successful trial has a result").circuit;
        let pruned = prune(circuit, 0.1);
        total += 1;
        let ok = response_curve(&pruned, &cfg.target.grid(), &cfg.sim)
            .ok()
            .and_then(|c| mse(&c.output(), &targets).ok())
            .is_some_and(|e| e.is_finite() && e <= doubled.success_mse);
        kept += usize::from(ok);
    }
    let frac = if total == 0 { 0.0 } else { kept as f64 / total as f64 };
    report.line(
        9,
        "pruning robustness",
        total > 0 && frac >= 0.7,
        started.elapsed(),
        format!("{kept}/{total} successful n=7 circuits pruned at 0.1 stay within MSE {} ({frac:.2}, need >= 0.70)", doubled.success_mse),
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // libtest flags such as --list or --exact are accepted and ignored
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut report = Report::default();
    let started = Instant::now();
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criteria_4_and_8(&mut report);
    criteria_5_and_10(&mut report);
    criterion_6(&mut report);
    criteria_7_and_9(&mut report);
    report.lines.sort_by_key(|l| l.0);
    println!("\nsummary:");
    for (_, _, text) in &report.lines {
        println!("{text}");
    }
    println!(
        "acceptance: {} of {} criteria failed ({:.0} s total)",
        report.failures(),
        report.lines.len(),
        started.elapsed().as_secs_f64()
    );
    if strict && report.failures() > 0 {
        std::process::exit(1);
    }
}
