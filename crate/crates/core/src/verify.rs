//! Embedded oracle suite: independent recomputations of the quantities the
//! library derives analytically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{edge_connectivity, eigenvalues, jacobian, UndirectedGraph};
use crate::dynamics::{rhs, steady_state, GeneCircuit, InputMode, SimConfig};
use crate::targets::{LossConfig, TargetSpec};
use crate::train_gd::GradientEvaluator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// Worst observed error (or mismatch count for exact checks).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, cases: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            cases,
            worst,
            tolerance,
            passed: worst.is_finite() && worst <= tolerance,
        }
    }
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> GeneCircuit {
    let w = (0..n * n).map(|_| rng.random_range(-scale..scale)).collect();
    GeneCircuit::from_flat(n, w).expect("finite draws")
}

/// Zero circuit: every node settles at 0.5 for input 0 and the Jacobian
/// there has eigenvalue -1 with multiplicity n.
pub fn check_zero_circuit() -> Vec<CheckResult> {
    let sim = SimConfig {
        max_steps: 10_000,
        convergence_tol: 1e-9,
        ..SimConfig::default()
    };
    let mut state_err: f64 = 0.0;
    let mut eig_err: f64 = 0.0;
    for n in 1..=8 {
        let c = GeneCircuit::zeros(n);
        match steady_state(&c, 0.0, &sim) {
            Ok(ss) if ss.converged => {
                state_err = ss.state.iter().fold(state_err, |m, y| m.max((y - 0.5).abs()));
                match eigenvalues(&jacobian(&c, &ss.state), n) {
                    Ok(ev) => {
                        eig_err = ev.iter().fold(eig_err, |m, e| m.max((e - Complex64::new(-1.0, 0.0)).norm()));
                    }
                    Err(_) => eig_err = f64::INFINITY,
                }
            }
            _ => state_err = f64::INFINITY,
        }
    }
    vec![
        CheckResult::new("zero circuit steady state 0.5", 8, state_err, 1e-6),
        CheckResult::new("zero circuit eigenvalues -1", 8, eig_err, 1e-12),
    ]
}

/// Analytic gradient against central differences of the loss, on `count`
/// random circuits with up to five nodes, both targets. Entry error is
/// `|g - g_fd| / max(|g_fd|, 1e-3)`: relative, with an absolute floor of
/// 1e-7 at the 1e-4 tolerance.
pub fn check_gradients(count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sim = SimConfig {
        max_steps: 60,
        ..SimConfig::default()
    };
    let loss = LossConfig::default();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for case in 0..count {
        let n = 2 + case % 4;
        let c = random_circuit(&mut rng, n, 2.0);
        for spec in [TargetSpec::french_flag(), TargetSpec::switch()] {
            let eval = GradientEvaluator::new(&spec, &sim, &loss);
            let g = eval.loss_and_gradient(&c).grad;
            let mut fd = vec![0.0; n * n];
            for (k, slot) in fd.iter_mut().enumerate() {
                let mut wp = c.weights().to_vec();
                let mut wm = wp.clone();
                wp[k] += h;
                wm[k] -= h;
                let lp = eval.loss(&GeneCircuit::from_flat(n, wp).expect("finite"));
                let lm = eval.loss(&GeneCircuit::from_flat(n, wm).expect("finite"));
                *slot = (lp - lm) / (2.0 * h);
            }
            let err = g
                .iter()
                .zip(&fd)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1e-3)));
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
    }
    CheckResult::new("gradient vs central differences", 2 * count, worst, 1e-4)
}

/// Jacobian against central differences of the right-hand side.
pub fn check_jacobians(count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for case in 0..count {
        let n = 1 + case % 6;
        let c = random_circuit(&mut rng, n, 3.0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..1.5)).collect();
        let j = jacobian(&c, &y);
        for k in 0..n {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += h;
            ym[k] -= h;
            let fp = rhs(&c, &yp, 0.7, InputMode::DriveFirstNode);
            let fm = rhs(&c, &ym, 0.7, InputMode::DriveFirstNode);
            for i in 0..n {
                worst = worst.max(((fp[i] - fm[i]) / (2.0 * h) - j[i * n + k]).abs());
            }
        }
    }
    CheckResult::new("jacobian vs central differences", count, worst, 1e-6)
}

/// Characteristic polynomial `x^n + c[0] x^(n-1) + ... + c[n-1]` by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(m: &[f64], n: usize) -> Vec<f64> {
    let mul = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    out[i * n + j] += a[i * n + k] * b[k * n + j];
                }
            }
        }
        out
    };
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = vec![0.0; n * n];
    let mut c_prev = 1.0;
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = mul(m, &mk);
        for i in 0..n {
            next[i * n + i] += c_prev;
        }
        mk = next;
        let am = mul(m, &mk);
        let trace: f64 = (0..n).map(|i| am[i * n + i]).sum();
        let c = -trace / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    coeffs
}

fn poly_eval(coeffs: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn quadratic(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let d = (b * b - 4.0 * c).sqrt();
    // larger-magnitude root first, the other from the product
    let q = if (-b + d).norm() >= (-b - d).norm() { -b + d } else { -b - d };
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    let r1 = q / 2.0;
    [r1, c / r1]
}

fn cubic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u1 = (-q / 2.0 + disc).cbrt();
    let u2 = (-q / 2.0 - disc).cbrt();
    let u = if u1.norm() >= u2.norm() { u1 } else { u2 };
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    let mut w = Complex64::new(1.0, 0.0);
    for r in &mut roots {
        let uk = u * w;
        *r = if uk.norm() == 0.0 { shift } else { uk - p / (3.0 * uk) + shift };
        w *= omega;
    }
    roots
}

fn quartic(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 4] {
    let p = b - 3.0 * a * a / 8.0;
    let q = c - a * b / 2.0 + a * a * a / 8.0;
    let r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a * a * a * a / 256.0;
    let shift = -a / 4.0;
    let scale = 1.0 + p.norm() + r.norm().sqrt();
    let ys = if q.norm() <= 1e-14 * scale * scale.sqrt() {
        let [z1, z2] = quadratic(p, r);
        [z1.sqrt(), -z1.sqrt(), z2.sqrt(), -z2.sqrt()]
    } else {
        // resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0; any m != 0 works
        let ms = cubic(p, p * p / 4.0 - r, -q * q / 8.0);
        let m = ms.into_iter().fold(ms[0], |best, m| if m.norm() > best.norm() { m } else { best });
        let s = (2.0 * m).sqrt();
        let t = q / (2.0 * s);
        let [y1, y2] = quadratic(-s, p / 2.0 + m + t);
        let [y3, y4] = quadratic(s, p / 2.0 + m - t);
        [y1, y2, y3, y4]
    };
    ys.map(|y| y + shift)
}

/// Roots of the monic real polynomial by closed form (degree <= 4), each
/// refined by Newton steps that are kept only while they reduce |p|.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let raw: Vec<Complex64> = match c.len() {
        0 => Vec::new(),
        1 => vec![-c[0]],
        2 => quadratic(c[0], c[1]).to_vec(),
        3 => cubic(c[0], c[1], c[2]).to_vec(),
        4 => quartic(c[0], c[1], c[2], c[3]).to_vec(),
        _ => panic!("closed-form roots only up to degree 4"),
    };
    raw.into_iter()
        .map(|mut x| {
            for _ in 0..20 {
                let (p, dp) = poly_eval(coeffs, x);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = x - p / dp;
                if poly_eval(coeffs, cand).0.norm() < p.norm() {
                    x = cand;
                } else {
                    break;
                }
            }
            x
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest, over pairings, of the largest distance between matched roots.
pub fn root_set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    permutations(a.len())
        .iter()
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Solver eigenvalues against roots of the expanded characteristic polynomial.
pub fn check_eigen_polynomial(count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..count {
        let n = 1 + case % 4;
        let m: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let err = match eigenvalues(&m, n) {
            Ok(ev) => root_set_distance(&ev, &polynomial_roots(&characteristic_polynomial(&m, n))),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    CheckResult::new("eigenvalues vs characteristic roots", count, worst, 1e-6)
}

/// Eigenvalue sum against the trace and the sorted-order contract, n <= 20.
pub fn check_eigen_trace(count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..count {
        let n = 1 + case % 20;
        let m: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let bound = 1e-8 * n as f64 * m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let err = match eigenvalues(&m, n) {
            Ok(ev) => {
                let sum: Complex64 = ev.iter().sum();
                let trace: f64 = (0..n).map(|i| m[i * n + i]).sum();
                let sorted = ev.windows(2).all(|w| w[0].re > w[1].re || (w[0].re == w[1].re && w[0].im >= w[1].im));
                if sorted && ev.len() == n {
                    (sum - Complex64::new(trace, 0.0)).norm() / bound
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    CheckResult::new("eigenvalue sum vs trace (scaled)", count, worst, 1.0)
}

/// Fewest edges whose removal disconnects `g`, by exhaustive search.
pub fn brute_force_edge_connectivity(g: &UndirectedGraph) -> usize {
    if g.n < 2 || !g.is_connected() {
        return 0;
    }
    let e = g.edges.len();
    let mut best = e;
    for mask in 0u64..(1 << e) {
        let removed = mask.count_ones() as usize;
        if removed >= best {
            continue;
        }
        let kept = g.edges.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, &ed)| ed);
        if !UndirectedGraph::new(g.n, kept).is_connected() {
            best = removed;
        }
    }
    best
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> UndirectedGraph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|_| rng.random_bool(density))
        .collect();
    UndirectedGraph::new(n, edges)
}

/// Max-flow edge connectivity against brute force; `worst` counts mismatches.
pub fn check_connectivity(count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let density = rng.random_range(0.2..1.0);
        let g = random_graph(&mut rng, n, density);
        if edge_connectivity(&g) != brute_force_edge_connectivity(&g) {
            mismatches += 1;
        }
    }
    CheckResult::new("edge connectivity vs brute force", count, mismatches as f64, 0.0)
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let mut out = check_zero_circuit();
    out.push(check_gradients(20, seed));
    out.push(check_jacobians(30, seed ^ 1));
    out.push(check_eigen_polynomial(50, seed ^ 2));
    out.push(check_eigen_trace(60, seed ^ 3));
    out.push(check_connectivity(100, seed ^ 4));
    out
}

pub fn render_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>6}  {:>12}  {:>10}  result\n", "check", "cases", "worst", "tolerance");
    for r in results {
        s.push_str(&format!(
            "{:<width$}  {:>6}  {:>12.3e}  {:>10.1e}  {}\n",
            r.name,
            r.cases,
            r.worst,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_of_known_matrix() {
        // diag(1, 2, 3): (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let m = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0];
        let c = characteristic_polynomial(&m, 3);
        assert_eq!(c, vec![-6.0, 11.0, -6.0]);
        let roots = polynomial_roots(&c);
        let expected: Vec<Complex64> = [1.0, 2.0, 3.0].iter().map(|&r| Complex64::new(r, 0.0)).collect();
        assert!(root_set_distance(&roots, &expected) < 1e-12);
    }

    #[test]
    fn quartic_roots_cover_cases() {
        // (x^2 + 1)(x - 2)(x + 3) and a biquadratic x^4 - 5x^2 + 4
        let cases: [(Vec<f64>, Vec<Complex64>); 2] = [
            (
                vec![1.0, -5.0, 1.0, -6.0],
                vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0)],
            ),
            (
                vec![0.0, -5.0, 0.0, 4.0],
                [1.0, -1.0, 2.0, -2.0].iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            ),
        ];
        for (coeffs, expected) in cases {
            assert!(root_set_distance(&polynomial_roots(&coeffs), &expected) < 1e-10);
        }
    }

    #[test]
    fn brute_force_known_values() {
        assert_eq!(brute_force_edge_connectivity(&UndirectedGraph::complete(5)), 4);
        assert_eq!(brute_force_edge_connectivity(&UndirectedGraph::path(4)), 1);
    }

    #[test]
    fn suite_passes() {
        let results = run_all(2024);
        let table = render_table(&results);
        assert!(results.iter().all(|r| r.passed), "{table}");
    }
}
