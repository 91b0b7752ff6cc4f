//! Genetic-algorithm search over assignment chromosomes.
//!
//! A chromosome is one scale index per instance; its fitness is the shared
//! game payoff. Each generation keeps the top `elites` chromosomes
//! unchanged and refills the rest with crossover-and-mutation offspring of
//! the top `mating_parents`.
//!
//! The random stream order is fixed so runs replay exactly: for every
//! offspring slot, first the two parent draws (the second skips the first
//! when more than one parent is available), then `crossover_points` cut
//! positions in `1..len`, then one mutation coin per gene, each firing
//! coin followed by a replacement draw that skips the current option
//! (drawn only when the action set has more than one entry).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Payoff, PayoffEngine, SolveOutcome, SolverTrace, Termination, TraceRecord};
use crate::mechanism::ActionSet;
use crate::pdp::AccountingMode;
use crate::preprocess::BinnedDataset;

/// Genetic-algorithm configuration. `generations` has no sensible default
/// and is always supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub mating_parents: usize,
    pub crossover_points: usize,
    pub mutation_rate: f64,
    pub elites: usize,
    pub generations: usize,
    pub seed: u64,
    /// Stop early when the best fitness has not improved for this many
    /// consecutive generations.
    pub stall_generations: usize,
    pub mode: AccountingMode,
}

impl GaConfig {
    pub fn new(generations: usize, seed: u64) -> Self {
        Self {
            population: 500,
            mating_parents: 10,
            crossover_points: 2,
            mutation_rate: 0.05,
            elites: 5,
            generations,
            seed,
            stall_generations: 50,
            mode: AccountingMode::Exact,
        }
    }

    pub fn with_population(mut self, population: usize) -> Self {
        self.population = population;
        self
    }

    pub fn with_mating_parents(mut self, mating_parents: usize) -> Self {
        self.mating_parents = mating_parents;
        self
    }

    pub fn with_crossover_points(mut self, crossover_points: usize) -> Self {
        self.crossover_points = crossover_points;
        self
    }

    pub fn with_mutation_rate(mut self, mutation_rate: f64) -> Self {
        self.mutation_rate = mutation_rate;
        self
    }

    pub fn with_elites(mut self, elites: usize) -> Self {
        self.elites = elites;
        self
    }

    pub fn with_stall_generations(mut self, stall_generations: usize) -> Self {
        self.stall_generations = stall_generations;
        self
    }

    pub fn with_mode(mut self, mode: AccountingMode) -> Self {
        self.mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidConfig("population must be at least 2".into()));
        }
        if self.mating_parents == 0 || self.mating_parents > self.population {
            return Err(Error::InvalidConfig(
                "mating_parents must be in 1..=population".into(),
            ));
        }
        if self.elites > self.population {
            return Err(Error::InvalidConfig(
                "elites cannot exceed population".into(),
            ));
        }
        if self.crossover_points == 0 {
            return Err(Error::InvalidConfig(
                "crossover_points must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidConfig(
                "mutation_rate must lie in [0, 1]".into(),
            ));
        }
        if self.stall_generations == 0 {
            return Err(Error::InvalidConfig(
                "stall_generations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Chromosomes with their evaluated fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Vec<usize>>,
    fitness: Vec<Payoff>,
}

impl Population {
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn fitness(&self) -> &[Payoff] {
        &self.fitness
    }

    /// Index of the fittest member; earliest wins ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.fitness.len() {
            if self.fitness[i].total > self.fitness[best].total {
                best = i;
            }
        }
        best
    }

    /// Member indices from fittest to least fit; ties keep input order.
    fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.members.len()).collect();
        order.sort_by(|&a, &b| self.fitness[b].total.total_cmp(&self.fitness[a].total));
        order
    }
}

/// Uniformly random initial population.
pub fn initial_population(
    binned: &BinnedDataset,
    action: &ActionSet,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Population> {
    cfg.validate()?;
    let engine = PayoffEngine::new(binned, action, cfg.mode)?;
    Ok(random_population(
        &engine,
        binned.len(),
        action.len(),
        cfg,
        rng,
    ))
}

/// Wraps caller-supplied chromosomes, evaluating their fitness.
pub fn population_from_members(
    binned: &BinnedDataset,
    action: &ActionSet,
    mode: AccountingMode,
    members: Vec<Vec<usize>>,
) -> Result<Population> {
    let engine = PayoffEngine::new(binned, action, mode)?;
    for member in &members {
        if member.len() != binned.len() {
            return Err(Error::AssignmentLength {
                expected: binned.len(),
                got: member.len(),
            });
        }
        for &gene in member {
            if gene >= action.len() {
                return Err(Error::IndexOutOfRange {
                    what: "scales",
                    index: gene,
                    len: action.len(),
                });
            }
        }
    }
    let fitness = members.iter().map(|m| evaluate(&engine, m)).collect();
    Ok(Population { members, fitness })
}

/// Advances the population by one generation in place. Deterministic for
/// a given random-stream state; the elites of the output are the top
/// chromosomes of the input, unchanged.
pub fn next_generation(
    binned: &BinnedDataset,
    action: &ActionSet,
    cfg: &GaConfig,
    population: &mut Population,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    cfg.validate()?;
    if population.members.len() != cfg.population {
        return Err(Error::InvalidConfig(format!(
            "population holds {} members but the config says {}",
            population.members.len(),
            cfg.population
        )));
    }
    let engine = PayoffEngine::new(binned, action, cfg.mode)?;
    breed(&engine, action.len(), cfg, population, rng);
    Ok(())
}

fn evaluate(engine: &PayoffEngine, chromosome: &[usize]) -> Payoff {
    engine.payoff_grouped(&engine.counts_of(chromosome))
}

fn random_population(
    engine: &PayoffEngine,
    len: usize,
    options: usize,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Population {
    let members: Vec<Vec<usize>> = (0..cfg.population)
        .map(|_| (0..len).map(|_| rng.random_range(0..options)).collect())
        .collect();
    let fitness = members.iter().map(|m| evaluate(engine, m)).collect();
    Population { members, fitness }
}

fn breed(
    engine: &PayoffEngine,
    options: usize,
    cfg: &GaConfig,
    population: &mut Population,
    rng: &mut ChaCha8Rng,
) {
    let ranking = population.ranking();
    let parents = &ranking[..cfg.mating_parents.min(ranking.len())];
    let len = population.members[0].len();

    let mut members = Vec::with_capacity(cfg.population);
    let mut fitness = Vec::with_capacity(cfg.population);
    for &idx in ranking.iter().take(cfg.elites) {
        members.push(population.members[idx].clone());
        fitness.push(population.fitness[idx]);
    }

    let mut cuts = Vec::with_capacity(cfg.crossover_points);
    for _ in 0..cfg.population - cfg.elites {
        let a = parents[rng.random_range(0..parents.len())];
        let b = if parents.len() > 1 {
            let r = rng.random_range(0..parents.len() - 1);
            let pos = parents.iter().position(|&p| p == a).unwrap();
            if r >= pos {
                parents[r + 1]
            } else {
                parents[r]
            }
        } else {
            a
        };

        cuts.clear();
        for _ in 0..cfg.crossover_points {
            cuts.push(rng.random_range(1..len));
        }
        cuts.sort_unstable();

        let pa = &population.members[a];
        let pb = &population.members[b];
        let mut child = Vec::with_capacity(len);
        let mut from_a = true;
        let mut next_cut = 0usize;
        for gene in 0..len {
            while next_cut < cuts.len() && cuts[next_cut] == gene {
                from_a = !from_a;
                next_cut += 1;
            }
            child.push(if from_a { pa[gene] } else { pb[gene] });
        }

        for gene in child.iter_mut() {
            let coin: f64 = rng.random();
            if coin < cfg.mutation_rate && options > 1 {
                let t = rng.random_range(0..options - 1);
                *gene = if t >= *gene { t + 1 } else { t };
            }
        }

        fitness.push(evaluate(engine, &child));
        members.push(child);
    }

    population.members = members;
    population.fitness = fitness;
}

/// Runs the genetic algorithm and returns the best chromosome ever seen.
///
/// The trace holds one record per generation (generation 0 is the initial
/// population) carrying the best-ever payoff, which is non-decreasing.
pub fn ga_solve(
    binned: &BinnedDataset,
    action: &ActionSet,
    cfg: &GaConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let engine = PayoffEngine::new(binned, action, cfg.mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = random_population(&engine, binned.len(), action.len(), cfg, &mut rng);

    let best = population.best_index();
    let mut best_member = population.members[best].clone();
    let mut best_payoff = population.fitness[best];

    let mut records = vec![TraceRecord {
        step: 0,
        instance: None,
        scale_index: None,
        payoff: best_payoff.total,
        p_e: best_payoff.p_e,
        p_u: best_payoff.p_u,
    }];

    let mut stalled = 0usize;
    let mut termination = Termination::GenerationLimit {
        generations: cfg.generations,
    };
    for generation in 1..=cfg.generations {
        breed(&engine, action.len(), cfg, &mut population, &mut rng);
        let best = population.best_index();
        if population.fitness[best].total > best_payoff.total {
            best_payoff = population.fitness[best];
            best_member = population.members[best].clone();
            stalled = 0;
        } else {
            stalled += 1;
        }
        records.push(TraceRecord {
            step: generation,
            instance: None,
            scale_index: None,
            payoff: best_payoff.total,
            p_e: best_payoff.p_e,
            p_u: best_payoff.p_u,
        });
        if stalled >= cfg.stall_generations {
            termination = Termination::FitnessStall { generation };
            break;
        }
    }

    Ok(SolveOutcome {
        plan: action.plan(best_member)?,
        trace: SolverTrace {
            records,
            termination,
        },
    })
}
