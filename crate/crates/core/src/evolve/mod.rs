//! Grammatical Evolution loop with strict-improvement replacement.

mod operators;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grammar::{Genotype, DEFAULT_CODON_MAX};
use crate::seed;

pub use operators::{crossover_at, one_point_crossover, tournament_select, uniform_mutation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub genotype_length: usize,
    #[serde(default)]
    pub crossover_probability: f64,
    #[serde(default = "one")]
    pub mutation_probability: f64,
    pub gene_mutation_probability: f64,
    /// Parents are drawn by tournament when set, otherwise every individual
    /// reproduces in place.
    #[serde(default)]
    pub tournament_size: Option<usize>,
    #[serde(default = "default_codon_max")]
    pub codon_max: u32,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_codon_max() -> u32 {
    DEFAULT_CODON_MAX
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("crossover_probability", self.crossover_probability),
            ("mutation_probability", self.mutation_probability),
            ("gene_mutation_probability", self.gene_mutation_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.population_size == 0 || self.genotype_length == 0 || self.codon_max == 0 {
            return Err("population_size, genotype_length and codon_max must be >= 1".into());
        }
        if self.crossover_probability > 0.0 && self.genotype_length < 2 {
            return Err("crossover needs genotype_length >= 2".into());
        }
        if self.tournament_size == Some(0) {
            return Err("tournament_size must be >= 1".into());
        }
        Ok(())
    }
}

/// Result of evaluating one genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<P> {
    pub fitness: f64,
    /// Trained phenotype, snapshotted when the fitness was measured.
    pub phenotype: Option<P>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<P> {
    pub genotype: Genotype,
    pub fitness: f64,
    pub phenotype: Option<P>,
}

impl<P> Individual<P> {
    fn new(genotype: Genotype, eval: Evaluation<P>) -> Self {
        // NaN would compare as neither better nor worse
        let fitness = if eval.fitness.is_nan() {
            f64::NEG_INFINITY
        } else {
            eval.fitness
        };
        Individual {
            genotype,
            fitness,
            phenotype: eval.phenotype,
        }
    }
}

/// Which population slots an offspring group competes for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parents {
    One(usize),
    Two(usize, usize),
}

/// Strict-improvement replacement. Returns the number of slots replaced.
///
/// - One parent: each offspring replaces the current occupant if strictly
///   better.
/// - Two parents: if both offspring beat both parents they take both slots,
///   the better offspring replacing the worse parent; otherwise the best
///   offspring replaces the worse parent if it beats it.
pub fn replace<P>(
    parents: Parents,
    mut offspring: Vec<Individual<P>>,
    population: &mut [Individual<P>],
) -> usize {
    offspring.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    let (i, j) = match parents {
        Parents::One(i) => (i, i),
        Parents::Two(i, j) => (i, j),
    };
    if i == j {
        let mut replaced = 0;
        for o in offspring {
            if o.fitness > population[i].fitness {
                population[i] = o;
                replaced += 1;
            }
        }
        return replaced;
    }
    let (worse, better) = if population[j].fitness < population[i].fitness {
        (j, i)
    } else {
        (i, j)
    };
    let mut it = offspring.into_iter();
    let Some(best) = it.next() else { return 0 };
    match it.next() {
        Some(second) if second.fitness > population[better].fitness => {
            population[worse] = best;
            population[better] = second;
            2
        }
        _ if best.fitness > population[worse].fitness => {
            population[worse] = best;
            1
        }
        _ => 0,
    }
}

/// Short hex digest of a genotype's codons.
pub fn digest(g: &Genotype) -> String {
    let mut h = Sha256::new();
    for c in g.codons() {
        h.update(c.to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One line of the run history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    /// 0 is the initial population.
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub champion_digest: String,
    /// Genotypes evaluated in this generation.
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Evolution<P> {
    pub history: Vec<GenerationStats>,
    pub population: Vec<Individual<P>>,
    /// Index of the fittest individual (earliest on ties).
    pub champion: usize,
}

impl<P> Evolution<P> {
    pub fn champion(&self) -> &Individual<P> {
        &self.population[self.champion]
    }
}

fn best_index<P>(pop: &[Individual<P>]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

fn stats<P>(generation: usize, pop: &[Individual<P>], evaluations: usize) -> GenerationStats {
    let champion = best_index(pop);
    GenerationStats {
        generation,
        best: pop[champion].fitness,
        mean: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
        champion_digest: digest(&pop[champion].genotype),
        evaluations,
    }
}

fn evaluate_batch<P, E, F>(
    jobs: Vec<(Genotype, u64)>,
    fitness: &F,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<Individual<P>>, E>
where
    P: Send,
    E: Send,
    F: Fn(&Genotype, u64) -> Result<Evaluation<P>, E> + Sync,
{
    let eval = |(g, s): (Genotype, u64)| fitness(&g, s).map(|e| Individual::new(g, e));
    match pool {
        Some(pool) => pool.install(|| jobs.into_par_iter().map(eval).collect()),
        None => jobs.into_iter().map(eval).collect(),
    }
}

fn maybe_mutate<R: Rng + ?Sized>(g: Genotype, cfg: &EvolutionConfig, rng: &mut R) -> Genotype {
    if rng.random::<f64>() < cfg.mutation_probability {
        uniform_mutation(&g, cfg.gene_mutation_probability, rng)
    } else {
        g
    }
}

/// Offspring groups of one generation, before evaluation.
fn breed<P, R: Rng + ?Sized>(
    pop: &[Individual<P>],
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Vec<(Parents, Vec<Genotype>)> {
    let n = pop.len();
    let fitnesses: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut singles: Vec<usize> = Vec::new();
    match cfg.tournament_size {
        Some(k) => {
            for _ in 0..n / 2 {
                let a = tournament_select(&fitnesses, k, rng);
                let b = tournament_select(&fitnesses, k, rng);
                pairs.push((a, b));
            }
            if n % 2 == 1 {
                singles.push(tournament_select(&fitnesses, k, rng));
            }
        }
        None if cfg.crossover_probability > 0.0 => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for chunk in order.chunks(2) {
                match chunk {
                    [a, b] => pairs.push((*a, *b)),
                    [a] => singles.push(*a),
                    _ => unreachable!(),
                }
            }
        }
        None => singles.extend(0..n),
    }

    let mut groups = Vec::with_capacity(n);
    for (a, b) in pairs {
        let (ga, gb) = (&pop[a].genotype, &pop[b].genotype);
        if rng.random::<f64>() < cfg.crossover_probability {
            let (x, y) = one_point_crossover(ga, gb, rng);
            let x = maybe_mutate(x, cfg, rng);
            let y = maybe_mutate(y, cfg, rng);
            groups.push((Parents::Two(a, b), vec![x, y]));
        } else {
            let x = maybe_mutate(ga.clone(), cfg, rng);
            let y = maybe_mutate(gb.clone(), cfg, rng);
            groups.push((Parents::One(a), vec![x]));
            groups.push((Parents::One(b), vec![y]));
        }
    }
    for a in singles {
        let x = maybe_mutate(pop[a].genotype.clone(), cfg, rng);
        groups.push((Parents::One(a), vec![x]));
    }
    // offspring identical to a parent cannot be strictly better
    for (parents, kids) in &mut groups {
        let (p, q) = match *parents {
            Parents::One(i) => (i, i),
            Parents::Two(i, j) => (i, j),
        };
        kids.retain(|g| *g != pop[p].genotype && *g != pop[q].genotype);
    }
    groups.retain(|(_, kids)| !kids.is_empty());
    groups
}

/// Runs the evolutionary loop.
///
/// `fitness` receives the genotype and a seed derived from the run seed, the
/// generation and the offspring index; it must be a pure function of the
/// two. Evaluations within a generation run on `workers` threads (`None`
/// for rayon's default, `Some(1)` for the calling thread) and are merged in
/// index order, so the result does not depend on the worker count.
pub fn evolve<P, E, F>(
    cfg: &EvolutionConfig,
    fitness: F,
    workers: Option<usize>,
) -> Result<Evolution<P>, E>
where
    P: Send,
    E: Send,
    F: Fn(&Genotype, u64) -> Result<Evaluation<P>, E> + Sync,
{
    if let Err(msg) = cfg.validate() {
        panic!("invalid evolution config: {msg}");
    }
    let pool = match workers {
        Some(1) => None,
        w => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w.unwrap_or(0))
                .build()
                .expect("thread pool"),
        ),
    };
    let mut rng = seed::derived_rng(cfg.seed, seed::stream::EVOLUTION, 0);
    let eval_seed = |generation: usize, k: usize| {
        seed::derive(
            seed::derive(cfg.seed, seed::stream::EVALUATION, generation as u64),
            seed::stream::EVALUATION,
            k as u64,
        )
    };

    let initial: Vec<(Genotype, u64)> = (0..cfg.population_size)
        .map(|k| {
            let g = Genotype::random(cfg.genotype_length, cfg.codon_max, &mut rng);
            (g, eval_seed(0, k))
        })
        .collect();
    let mut population = evaluate_batch(initial, &fitness, pool.as_ref())?;
    let mut history = vec![stats(0, &population, population.len())];

    for generation in 1..=cfg.generations {
        let groups = breed(&population, cfg, &mut rng);
        let mut jobs = Vec::new();
        for (_, kids) in &groups {
            for g in kids {
                let k = jobs.len();
                jobs.push((g.clone(), eval_seed(generation, k)));
            }
        }
        let evaluations = jobs.len();
        let mut evaluated = evaluate_batch(jobs, &fitness, pool.as_ref())?.into_iter();
        for (parents, kids) in groups {
            let offspring: Vec<Individual<P>> = evaluated.by_ref().take(kids.len()).collect();
            replace(parents, offspring, &mut population);
        }
        history.push(stats(generation, &population, evaluations));
    }

    let champion = best_index(&population);
    Ok(Evolution {
        history,
        population,
        champion,
    })
}
