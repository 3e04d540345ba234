//! Real-coded genetic algorithm: rank scaling, stochastic uniform selection,
//! elitism, scattered crossover and shrinking Gaussian mutation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_120_501;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub elite_count: usize,
    pub crossover_fraction: f64,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    /// Mutation standard deviation at generation 0, as a fraction of each
    /// gene's range.
    pub mutation_scale: f64,
    /// Fraction of `mutation_scale` removed linearly by the last generation.
    pub mutation_shrink: f64,
    pub seed: u64,
    /// Per-gene `[lo, hi]`.
    pub bounds: Vec<(f64, f64)>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            elite_count: 2,
            crossover_fraction: 0.8,
            max_generations: 100,
            stall_generations: 50,
            stall_tolerance: 1e-6,
            mutation_scale: 0.1,
            mutation_shrink: 1.0,
            seed: DEFAULT_SEED,
            bounds: Vec::new(),
        }
    }
}

impl GaConfig {
    pub fn with_bounds(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return fail(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.elite_count >= self.population_size {
            return fail(format!(
                "elite_count {} must be below population_size {}",
                self.elite_count, self.population_size
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return fail(format!("crossover_fraction {} outside [0, 1]", self.crossover_fraction));
        }
        if self.max_generations == 0 || self.stall_generations == 0 {
            return fail("max_generations and stall_generations must be positive".into());
        }
        if !(self.stall_tolerance >= 0.0) {
            return fail("stall_tolerance must be non-negative".into());
        }
        if !(self.mutation_scale >= 0.0) || !(0.0..=1.0).contains(&self.mutation_shrink) {
            return fail("mutation_scale must be >= 0 and mutation_shrink in [0, 1]".into());
        }
        if self.bounds.is_empty() {
            return fail("no genes: bounds are empty".into());
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return fail(format!("gene {i}: need finite lo < hi, got [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// Number of crossover children per generation.
    pub fn crossover_count(&self) -> usize {
        (self.crossover_fraction * (self.population_size - self.elite_count) as f64).round() as usize
    }

    pub fn mutation_count(&self) -> usize {
        self.population_size - self.elite_count - self.crossover_count()
    }

    /// Two parents per crossover child, one per mutant.
    pub fn parent_count(&self) -> usize {
        2 * self.crossover_count() + self.mutation_count()
    }

    fn mutation_sigma(&self, generation: usize) -> f64 {
        let progress = generation as f64 / self.max_generations as f64;
        self.mutation_scale * (1.0 - self.mutation_shrink * progress)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub score: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stall,
    MaxGenerations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_genes: Vec<f64>,
    pub best_score: f64,
    /// Entry 0 is the initial population.
    pub history: Vec<GenerationStats>,
    pub generations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl GaResult {
    /// CSV with header `generation,best_j,mean_j`.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["generation", "best_j", "mean_j"])?;
        for h in &self.history {
            w.write_record([h.generation.to_string(), h.best.to_string(), h.mean.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Indices of `scores` from best (lowest) to worst; ties keep input order.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Fitness `∝ 1/√rank`, summing to `total`. Equal scores share the fitness
/// of their mean rank position so that ties are treated symmetrically.
pub fn rank_scale(scores: &[f64], total: f64) -> Vec<f64> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let order = rank_order(scores);
    let mut fitness = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let shared = (start..end).map(|r| 1.0 / ((r + 1) as f64).sqrt()).sum::<f64>() / (end - start) as f64;
        for &i in &order[start..end] {
            fitness[i] = shared;
        }
        start = end;
    }
    let sum: f64 = fitness.iter().sum();
    fitness.iter_mut().for_each(|f| *f *= total / sum);
    fitness
}

/// `count` equally spaced pointers over the cumulative fitness line with a
/// single random offset; returns the selected indices in pointer order.
pub fn stochastic_uniform<R: Rng + ?Sized>(fitness: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = fitness.iter().sum();
    if count == 0 || fitness.is_empty() {
        return Vec::new();
    }
    let step = total / count as f64;
    let mut pointer = rng.random::<f64>() * step;
    let mut selected = Vec::with_capacity(count);
    let mut i = 0;
    let mut cumulative = fitness[0];
    for _ in 0..count {
        while pointer >= cumulative && i + 1 < fitness.len() {
            i += 1;
            cumulative += fitness[i];
        }
        selected.push(i);
        pointer += step;
    }
    selected
}

/// Each gene comes from `a` or `b` by an independent fair coin.
pub fn scattered_crossover<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "parents must have equal length");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
        .collect()
}

/// Adds `N(0, σ_g·(hi − lo))` per gene and clamps into the bounds, with
/// `σ_g` shrinking linearly over the generations.
pub fn gaussian_mutate<R: Rng + ?Sized>(
    parent: &[f64],
    generation: usize,
    config: &GaConfig,
    rng: &mut R,
) -> Vec<f64> {
    let sigma = config.mutation_sigma(generation);
    parent
        .iter()
        .zip(&config.bounds)
        .map(|(&x, &(lo, hi))| {
            let sd = sigma * (hi - lo);
            if sd > 0.0 {
                let noise = Normal::new(0.0, sd).expect("finite positive sd").sample(rng);
                (x + noise).clamp(lo, hi)
            } else {
                x
            }
        })
        .collect()
}

fn evaluate_all<F>(objective: &F, genes: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    genes.par_iter().map(|g| objective(g)).collect()
}

fn stats(generation: usize, population: &[Individual]) -> GenerationStats {
    let best = population.iter().map(|p| p.score).fold(f64::INFINITY, f64::min);
    let mean = population.iter().map(|p| p.score).sum::<f64>() / population.len() as f64;
    GenerationStats { generation, best, mean }
}

/// Minimizes `objective` over the box `config.bounds`.
///
/// Evaluations within a generation run in parallel; all random draws come
/// from one stream seeded by `config.seed`, so results are reproducible
/// regardless of thread count.
pub fn ga_minimize<F>(objective: F, config: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ga_minimize_observed(objective, config, |_, _| {})
}

/// [`ga_minimize`] calling `observer(generation, population)` after every
/// generation, including the initial one. From generation 1 on the first
/// `elite_count` individuals are the carried-over elite.
pub fn ga_minimize_observed<F, O>(objective: F, config: &GaConfig, mut observer: O) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    O: FnMut(usize, &[Individual]),
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_pop = config.population_size;
    let (n_elite, n_xover, n_mut) = (config.elite_count, config.crossover_count(), config.mutation_count());
    let n_parents = config.parent_count();

    let genes: Vec<Vec<f64>> = (0..n_pop)
        .map(|_| config.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let scores = evaluate_all(&objective, &genes);
    let mut evaluations = n_pop;
    let mut population: Vec<Individual> = genes
        .into_iter()
        .zip(scores)
        .map(|(genes, score)| Individual { genes, score, fitness: 0.0 })
        .collect();

    observer(0, &population);
    let mut history = vec![stats(0, &population)];
    let mut termination = Termination::MaxGenerations;
    let mut generation = 0;
    while generation < config.max_generations {
        let scores: Vec<f64> = population.iter().map(|p| p.score).collect();
        let fitness = rank_scale(&scores, n_parents as f64);
        for (p, f) in population.iter_mut().zip(&fitness) {
            p.fitness = *f;
        }
        let mut parents = stochastic_uniform(&fitness, n_parents, &mut rng);
        parents.shuffle(&mut rng);

        let order = rank_order(&scores);
        let mut next: Vec<Individual> = order[..n_elite].iter().map(|&i| population[i].clone()).collect();

        let mut children = Vec::with_capacity(n_xover + n_mut);
        for k in 0..n_xover {
            let (a, b) = (parents[2 * k], parents[2 * k + 1]);
            children.push(scattered_crossover(&population[a].genes, &population[b].genes, &mut rng));
        }
        for k in 0..n_mut {
            let p = parents[2 * n_xover + k];
            children.push(gaussian_mutate(&population[p].genes, generation, config, &mut rng));
        }
        let child_scores = evaluate_all(&objective, &children);
        evaluations += children.len();
        next.extend(
            children
                .into_iter()
                .zip(child_scores)
                .map(|(genes, score)| Individual { genes, score, fitness: 0.0 }),
        );
        population = next;
        generation += 1;
        observer(generation, &population);
        history.push(stats(generation, &population));

        if generation >= config.stall_generations {
            let before = history[generation - config.stall_generations].best;
            if before - history[generation].best < config.stall_tolerance {
                termination = Termination::Stall;
                break;
            }
        }
    }

    let best = &population[rank_order(&population.iter().map(|p| p.score).collect::<Vec<_>>())[0]];
    Ok(GaResult {
        best_genes: best.genes.clone(),
        best_score: best.score,
        history,
        generations: generation,
        evaluations,
        termination,
    })
}
