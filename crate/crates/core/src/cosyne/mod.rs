//! Cooperative-synapse neuroevolution: a population matrix whose rows are
//! genomes and whose columns are subpopulations of one weight each.
//!
//! A generation evaluates every row, sorts by fitness, replaces the bottom
//! three quarters with mutated crossover offspring of the top quarter, and
//! finally shuffles a fitness-dependent random subset of every column.

pub mod fitness;
pub mod operators;

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fitness::{episode_rngs, evaluate_fitness, mean, rollout, Environment};
pub use operators::{crossover, mutate, permutation_probabilities, permute_marked};

use crate::error::{invalid_config, invalid_input, Result};
use crate::numerics::{child_seed, RealMatrix, SimRng};

/// Evolution hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvoParams {
    pub l_pop: usize,
    pub p_mut: f64,
    pub sigma_mut: f64,
    pub generations: usize,
    /// Episodes per fitness evaluation during training.
    pub t_e_train: usize,
    pub permutation_enabled: bool,
    pub init_sigma: f64,
    /// Reuse one episode seed for every generation instead of refreshing it.
    pub freeze_episodes: bool,
}

impl Default for EvoParams {
    fn default() -> Self {
        Self {
            l_pop: 100,
            p_mut: 0.3,
            sigma_mut: 0.2,
            generations: 25,
            t_e_train: 2,
            permutation_enabled: true,
            init_sigma: 0.5,
            freeze_episodes: false,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        if self.l_pop < 4 {
            return Err(invalid_config(format!(
                "evo.l_pop must be at least 4 so the parent quartile is non-empty, got {}",
                self.l_pop
            )));
        }
        if !(0.0..=1.0).contains(&self.p_mut) {
            return Err(invalid_config(format!("evo.p_mut must lie in [0, 1], got {}", self.p_mut)));
        }
        if !(self.sigma_mut >= 0.0 && self.sigma_mut.is_finite()) {
            return Err(invalid_config(format!("evo.sigma_mut must be finite and >= 0, got {}", self.sigma_mut)));
        }
        if !(self.init_sigma >= 0.0 && self.init_sigma.is_finite()) {
            return Err(invalid_config(format!("evo.init_sigma must be finite and >= 0, got {}", self.init_sigma)));
        }
        if self.t_e_train == 0 {
            return Err(invalid_config("evo.t_e_train must be at least 1"));
        }
        Ok(())
    }

    pub fn parents(&self) -> usize {
        self.l_pop / 4
    }
}

/// Population matrix `L_pop x M` with the fitness of its last evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub weights: RealMatrix,
    /// Empty until the population is evaluated.
    pub fitness: Vec<f64>,
    pub generation: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.weights.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.rows() == 0
    }

    pub fn genome_len(&self) -> usize {
        self.weights.cols()
    }

    pub fn genome(&self, l: usize) -> &[f64] {
        self.weights.row(l)
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.len() == self.len()
    }
}

/// Entries i.i.d. `N(0, init_sigma^2)`.
pub fn init_population<R: Rng + ?Sized>(params: &EvoParams, m: usize, rng: &mut R) -> Result<Population> {
    params.validate()?;
    if m == 0 {
        return Err(invalid_input("genome length must be positive"));
    }
    let normal = Normal::new(0.0, params.init_sigma).expect("validated sigma");
    let data = (0..params.l_pop * m).map(|_| normal.sample(rng)).collect();
    Ok(Population {
        weights: RealMatrix::from_vec(params.l_pop, m, data)?,
        fitness: Vec::new(),
        generation: 0,
    })
}

/// Scores every row with `fitness_fn(genome, seed)` in parallel, then
/// reorders the rows by descending fitness (stable on ties).
pub fn evaluate_population<F>(pop: &mut Population, fitness_fn: &F, seed: u64) -> Result<()>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    let scores: Vec<f64> = (0..pop.len())
        .into_par_iter()
        .map(|l| fitness_fn(pop.genome(l), seed))
        .collect::<Result<_>>()?;
    if let Some(bad) = scores.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
        return Err(invalid_input(format!("fitness must be finite and non-negative, got {bad}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let m = pop.genome_len();
    let mut data = Vec::with_capacity(pop.len() * m);
    for &l in &order {
        data.extend_from_slice(pop.genome(l));
    }
    pop.weights = RealMatrix::from_vec(pop.len(), m, data)?;
    pop.fitness = order.iter().map(|&l| scores[l]).collect();
    Ok(())
}

/// Steps 3 to 7 on an evaluated, sorted population: offspring replace the
/// bottom rows, then marked genes are shuffled within their columns.
pub fn breed<R: Rng + ?Sized>(pop: &Population, params: &EvoParams, rng: &mut R) -> Result<Population> {
    params.validate()?;
    if pop.len() != params.l_pop {
        return Err(invalid_input(format!(
            "population has {} rows, params expect {}",
            pop.len(),
            params.l_pop
        )));
    }
    if !pop.is_evaluated() {
        return Err(invalid_input("population must be evaluated before breeding"));
    }
    let parents = params.parents();
    let mut weights = pop.weights.clone();
    let parent_ids: Vec<usize> = (0..parents).collect();
    for l in parents..pop.len() {
        let mut child = if parents == 1 {
            pop.genome(0).to_vec()
        } else {
            let pair: Vec<&usize> = parent_ids.choose_multiple(rng, 2).collect();
            crossover(pop.genome(*pair[0]), pop.genome(*pair[1]), rng)?
        };
        mutate(&mut child, params.p_mut, params.sigma_mut, rng)?;
        weights.as_mut_slice()[l * pop.genome_len()..(l + 1) * pop.genome_len()].copy_from_slice(&child);
    }
    if params.permutation_enabled {
        // offspring inherit the fitness of the slot they replace
        let f_max = pop.fitness[0];
        let p = permutation_probabilities(&pop.fitness, f_max, pop.genome_len())?;
        permute_marked(&mut weights, &p, rng)?;
    }
    Ok(Population {
        weights,
        fitness: Vec::new(),
        generation: pop.generation + 1,
    })
}

/// One full generation: evaluate and sort (steps 1 and 2), then breed.
/// Returns the evaluated input population and its successor.
pub fn evolve_generation<F, R>(
    mut pop: Population,
    fitness_fn: &F,
    params: &EvoParams,
    seed: u64,
    rng: &mut R,
) -> Result<(Population, Population)>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    evaluate_population(&mut pop, fitness_fn, seed)?;
    let next = breed(&pop, params, rng)?;
    Ok((pop, next))
}

/// Per-generation summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Best fitness over all evaluations so far.
    pub best_so_far: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best_genome: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

/// Seed of the training episodes of generation `g`.
pub fn generation_seed(master: u64, params: &EvoParams, g: usize) -> u64 {
    let index = if params.freeze_episodes { 0 } else { g as u64 };
    child_seed(master, "train-episodes", index)
}

/// Runs `params.generations` generations. The initial population and each
/// bred one are evaluated, so the history holds `generations + 1` entries.
/// `on_generation` sees every entry with the current best genome.
pub fn train<F, C>(fitness_fn: &F, m: usize, params: &EvoParams, master_seed: u64, mut on_generation: C) -> Result<TrainOutcome>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
    C: FnMut(&GenerationStats, &[f64]) -> Result<()>,
{
    params.validate()?;
    let start = Instant::now();
    let mut init_rng = SimRng::seeded(child_seed(master_seed, "init", 0));
    let mut pop = init_population(params, m, &mut init_rng)?;
    let mut evo_rng = SimRng::seeded(child_seed(master_seed, "evolve", 0));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history = Vec::with_capacity(params.generations + 1);
    let mut evaluations = 0;
    for g in 0..=params.generations {
        evaluate_population(&mut pop, fitness_fn, generation_seed(master_seed, params, g))?;
        evaluations += pop.len();
        if best.as_ref().is_none_or(|(f, _)| pop.fitness[0] > *f) {
            best = Some((pop.fitness[0], pop.genome(0).to_vec()));
        }
        let (best_fitness, best_genome) = best.as_ref().expect("set above");
        let stats = GenerationStats {
            generation: g,
            best_fitness: pop.fitness[0],
            mean_fitness: mean(&pop.fitness),
            best_so_far: *best_fitness,
            wall_time: start.elapsed().as_secs_f64(),
        };
        on_generation(&stats, best_genome)?;
        history.push(stats);
        if g < params.generations {
            pop = breed(&pop, params, &mut evo_rng)?;
        }
    }
    let (best_fitness, best_genome) = best.expect("at least one evaluation");
    Ok(TrainOutcome {
        best_genome,
        best_fitness,
        history,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l_pop: usize) -> EvoParams {
        EvoParams {
            l_pop,
            ..EvoParams::default()
        }
    }

    /// Fitness peaked at the all-ones genome.
    fn bowl(g: &[f64], _seed: u64) -> Result<f64> {
        Ok(1.0 / (1.0 + g.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>()))
    }

    #[test]
    fn init_examples() {
        let zero = init_population(&EvoParams { init_sigma: 0.0, ..params(4) }, 5, &mut SimRng::seeded(1)).unwrap();
        assert!(zero.weights.as_slice().iter().all(|&v| v == 0.0));
        let a = init_population(&params(8), 10, &mut SimRng::seeded(2)).unwrap();
        let b = init_population(&params(8), 10, &mut SimRng::seeded(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_moments() {
        let p = EvoParams { init_sigma: 0.7, ..params(100) };
        let pop = init_population(&p, 10_000, &mut SimRng::seeded(3)).unwrap();
        let x = pop.weights.as_slice();
        let mu = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        assert!(mu.abs() < 0.01);
        assert!((sd / 0.7 - 1.0).abs() < 0.01);
    }

    #[test]
    fn quartile_arithmetic() {
        assert_eq!(params(100).parents(), 25);
        assert_eq!(params(4).parents(), 1);
        assert!(params(3).validate().is_err());
    }

    #[test]
    fn single_parent_clones_then_mutates() {
        let p = EvoParams { p_mut: 0.0, permutation_enabled: false, ..params(4) };
        let mut pop = init_population(&p, 6, &mut SimRng::seeded(4)).unwrap();
        evaluate_population(&mut pop, &bowl, 0).unwrap();
        let next = breed(&pop, &p, &mut SimRng::seeded(5)).unwrap();
        for l in 0..4 {
            assert_eq!(next.genome(l), pop.genome(0));
        }
    }

    #[test]
    fn identical_parents_degenerate_trace() {
        let p = EvoParams { p_mut: 0.0, permutation_enabled: false, ..params(12) };
        let elite = vec![0.25, -0.5, 1.5];
        let mut pop = Population {
            weights: RealMatrix::from_fn(12, 3, |r, c| if r < 3 { elite[c] } else { -5.0 }),
            fitness: Vec::new(),
            generation: 0,
        };
        evaluate_population(&mut pop, &bowl, 0).unwrap();
        let next = breed(&pop, &p, &mut SimRng::seeded(6)).unwrap();
        for l in 0..12 {
            assert_eq!(next.genome(l), elite.as_slice());
        }
    }

    #[test]
    fn parents_survive_breeding() {
        let p = EvoParams { permutation_enabled: false, ..params(20) };
        let mut pop = init_population(&p, 8, &mut SimRng::seeded(7)).unwrap();
        evaluate_population(&mut pop, &bowl, 0).unwrap();
        assert!(pop.fitness.windows(2).all(|w| w[0] >= w[1]));
        let next = breed(&pop, &p, &mut SimRng::seeded(8)).unwrap();
        for l in 0..5 {
            assert_eq!(next.genome(l), pop.genome(l));
        }
    }

    #[test]
    fn training_examples() {
        let p = EvoParams { generations: 0, ..params(8) };
        let out = train(&bowl, 4, &p, 1, |_, _| Ok(())).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.evaluations, 8);

        let p = EvoParams { generations: 15, ..params(16) };
        let a = train(&bowl, 4, &p, 9, |_, _| Ok(())).unwrap();
        let b = train(&bowl, 4, &p, 9, |_, _| Ok(())).unwrap();
        assert_eq!(a.history.len(), 16);
        let strip = |h: &[GenerationStats]| h.iter().map(|s| (s.best_fitness, s.mean_fitness)).collect::<Vec<_>>();
        assert_eq!(strip(&a.history), strip(&b.history));
        assert_eq!(a.best_genome, b.best_genome);
        assert!(a.best_fitness > a.history[0].best_fitness);
    }

    #[test]
    fn monotone_without_permutation() {
        let noisy = |g: &[f64], seed: u64| -> Result<f64> {
            let jitter = (child_seed(seed, "jitter", 0) % 1000) as f64 * 1e-4;
            Ok(bowl(g, seed)? * (1.0 + jitter))
        };
        let p = EvoParams {
            generations: 25,
            permutation_enabled: false,
            freeze_episodes: true,
            ..params(20)
        };
        let out = train(&noisy, 6, &p, 3, |_, _| Ok(())).unwrap();
        assert!(out.history.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    }
}
