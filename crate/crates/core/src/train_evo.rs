//! Evolutionary search over weight matrices: rank by cost, keep the elite
//! fraction, refill by crossover of survivor pairs, mutate everyone but the
//! elite.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{GeneCircuit, SimConfig};
use crate::error::{Error, Result};
use crate::targets::{is_success, mse, regularized_cost, LossConfig, TargetSpec};
use crate::train_gd::{evaluate, gaussian_circuit, success_notes, TrainResult, Trainer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvoConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Per-entry mutation probability; `None` means `0.5 / n^2`.
    pub mutation_rate: Option<f64>,
    pub mutation_std: f64,
    pub elite_fraction: f64,
    pub max_generations: usize,
    pub init_std: f64,
    pub rng_seed: u64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            crossover_rate: 0.6,
            mutation_rate: None,
            mutation_std: 0.5,
            elite_fraction: 0.25,
            max_generations: 5000,
            init_std: 1.0,
            rng_seed: 0,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("evo.population_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::config("evo.crossover_rate must lie in [0, 1]"));
        }
        if let Some(rate) = self.mutation_rate {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config("evo.mutation_rate must lie in [0, 1]"));
            }
        }
        if !(self.mutation_std > 0.0 && self.mutation_std.is_finite()) {
            return Err(Error::config("evo.mutation_std must be positive"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::config("evo.elite_fraction must lie in (0, 1]"));
        }
        if self.max_generations == 0 {
            return Err(Error::config("evo.max_generations must be positive"));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return Err(Error::config("evo.init_std must be positive"));
        }
        Ok(())
    }

    pub fn mutation_rate_for(&self, n: usize) -> f64 {
        self.mutation_rate.unwrap_or(0.5 / (n * n) as f64)
    }

    pub fn survivors(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize).clamp(1, self.population_size)
    }
}

/// `population_size` circuits with i.i.d. Gaussian entries, streamed from
/// `cfg.rng_seed`.
pub fn init_population(n: usize, cfg: &EvoConfig) -> Vec<GeneCircuit> {
    population_from(n, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed))
}

fn population_from(n: usize, cfg: &EvoConfig, rng: &mut ChaCha8Rng) -> Vec<GeneCircuit> {
    (0..cfg.population_size)
        .map(|_| gaussian_circuit(n, cfg.init_std, rng))
        .collect()
}

/// Indices of the survivors, best first. Ties keep the lower index; NaN
/// costs rank with `+inf`.
pub fn select(costs: &[f64], cfg: &EvoConfig) -> Vec<usize> {
    let key = |c: f64| if c.is_nan() { f64::INFINITY } else { c };
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| key(costs[a]).total_cmp(&key(costs[b])).then(a.cmp(&b)));
    order.truncate(cfg.survivors().min(costs.len()));
    order
}

/// With probability `crossover_rate` each entry comes from `a` or `b` with
/// equal odds; otherwise the child copies `a`.
pub fn crossover(
    a: &GeneCircuit,
    b: &GeneCircuit,
    cfg: &EvoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GeneCircuit> {
    if a.n() != b.n() {
        return Err(Error::SizeMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    if rng.random::<f64>() >= cfg.crossover_rate {
        return Ok(a.clone());
    }
    let weights = a
        .weights()
        .iter()
        .zip(b.weights())
        .map(|(&wa, &wb)| if rng.random::<bool>() { wa } else { wb })
        .collect();
    GeneCircuit::from_flat(a.n(), weights)
}

/// Adds `N(0, mutation_std^2)` to each entry with probability `rate`.
pub fn mutate(c: &GeneCircuit, rate: f64, std: f64, rng: &mut ChaCha8Rng) -> GeneCircuit {
    if rate <= 0.0 {
        return c.clone();
    }
    let noise = Normal::new(0.0, std).expect("positive std");
    let weights = c
        .weights()
        .iter()
        .map(|&w| {
            if rng.random::<f64>() < rate {
                w + noise.sample(rng)
            } else {
                w
            }
        })
        .collect();
    GeneCircuit::from_flat(c.n(), weights).expect("finite mutation")
}

#[derive(Clone)]
struct Scored {
    cost: f64,
    output: Option<Vec<f64>>,
}

fn score(c: &GeneCircuit, spec: &TargetSpec, sim: &SimConfig, loss: &LossConfig, targets: &[f64]) -> Scored {
    match evaluate(c, spec, sim) {
        Some(out) => Scored {
            cost: regularized_cost(c, &out, targets, loss).unwrap_or(f64::INFINITY),
            output: Some(out),
        },
        None => Scored {
            cost: f64::INFINITY,
            output: None,
        },
    }
}

/// One generation's population, kept for inspection by callers that want
/// the full search history.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub population: Vec<GeneCircuit>,
    pub costs: Vec<f64>,
}

/// Runs the search; `observe` sees every evaluated generation.
pub fn evolve_with(
    n: usize,
    spec: &TargetSpec,
    sim: &SimConfig,
    cfg: &EvoConfig,
    loss_cfg: &LossConfig,
    initial: Option<Vec<GeneCircuit>>,
    mut observe: impl FnMut(&Generation),
) -> Result<TrainResult> {
    if n < 2 {
        return Err(Error::config("evolution needs at least 2 nodes"));
    }
    spec.validate()?;
    sim.validate()?;
    cfg.validate()?;
    loss_cfg.validate()?;

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut population = match initial {
        Some(pop) => {
            if pop.len() != cfg.population_size {
                return Err(Error::LengthMismatch {
                    left: pop.len(),
                    right: cfg.population_size,
                });
            }
            if let Some(bad) = pop.iter().find(|c| c.n() != n) {
                return Err(Error::SizeMismatch { left: bad.n(), right: n });
            }
            pop
        }
        None => population_from(n, cfg, &mut rng),
    };
    let targets = spec.target_values();
    let rate = cfg.mutation_rate_for(n);
    let mut scores: Vec<Option<Scored>> = vec![None; population.len()];
    let mut history = Vec::new();
    let mut generations = 0;
    let mut success = false;

    let elite = loop {
        generations += 1;
        for (c, s) in population.iter().zip(scores.iter_mut()) {
            if s.is_none() {
                *s = Some(score(c, spec, sim, loss_cfg, &targets));
            }
        }
        let costs: Vec<f64> = scores.iter().map(|s| s.as_ref().unwrap().cost).collect();
        observe(&Generation {
            population: population.clone(),
            costs: costs.clone(),
        });
        let survivors = select(&costs, cfg);
        let elite = survivors[0];
        history.push(costs[elite]);
        if let Some(out) = &scores[elite].as_ref().unwrap().output {
            if is_success(out, spec, loss_cfg) {
                success = true;
                break elite;
            }
        }
        if generations == cfg.max_generations {
            break elite;
        }

        let parents: Vec<GeneCircuit> = survivors.iter().map(|&i| population[i].clone()).collect();
        let parent_scores: Vec<Scored> = survivors.iter().map(|&i| scores[i].clone().unwrap()).collect();
        let mut next = parents.clone();
        while next.len() < cfg.population_size {
            let a = &parents[rng.random_range(0..parents.len())];
            let b = &parents[rng.random_range(0..parents.len())];
            next.push(crossover(a, b, cfg, &mut rng)?);
        }
        for c in next.iter_mut().skip(1) {
            *c = mutate(c, rate, cfg.mutation_std, &mut rng);
        }
        // Unchanged copies of a parent reuse its evaluation.
        scores = next
            .iter()
            .map(|c| {
                parents
                    .iter()
                    .position(|p| p == c)
                    .map(|k| parent_scores[k].clone())
            })
            .collect();
        population = next;
    };

    let circuit = population[elite].clone();
    let final_mse = scores[elite]
        .as_ref()
        .and_then(|s| s.output.as_ref())
        .and_then(|out| mse(out, &targets).ok())
        .unwrap_or(f64::INFINITY);
    let mut notes = success_notes(spec, sim, loss_cfg);
    notes.insert(
        "crossover".to_string(),
        format!(
            "rate {}: child takes each entry from either parent with probability 1/2, else copies the first parent",
            cfg.crossover_rate
        ),
    );
    notes.insert(
        "mutation".to_string(),
        format!("rate {rate} per entry, additive N(0, {}^2), elite unmutated", cfg.mutation_std),
    );
    notes.insert(
        "selection".to_string(),
        format!("top {} of {} by cost", cfg.survivors(), cfg.population_size),
    );
    Ok(TrainResult {
        circuit,
        loss_history: history
            .into_iter()
            .map(|l| if l.is_finite() { l } else { f64::MAX })
            .collect(),
        success,
        final_mse,
        iterations_used: generations,
        seed: cfg.rng_seed,
        trainer: Trainer::Evolutionary,
        wall_ms: started.elapsed().as_millis() as u64,
        target: spec.label(),
        notes,
    })
}

pub fn evolve(
    n: usize,
    spec: &TargetSpec,
    sim: &SimConfig,
    cfg: &EvoConfig,
    loss_cfg: &LossConfig,
) -> Result<TrainResult> {
    evolve_with(n, spec, sim, cfg, loss_cfg, None, |_| {})
}
