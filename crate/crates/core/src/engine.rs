//! The generational loop: rank with nondominated crowding, select by
//! binary tournament, cluster the selected set in objective space, build
//! and sample one variation model per nonempty cluster, evaluate the
//! offspring, and fold them back with the configured replacement.
//!
//! All operator × clustering × replacement combinations share this loop,
//! so baselines differ from the full algorithm only in the component under
//! study. A run terminates with success as soon as the current population
//! covers every reference front point, or with failure when the
//! generation cap is reached.

use crate::clustering::{kmeans, KmeansParams};
use crate::error::{invalid_argument, invalid_state, Result};
use crate::genotype::{Individual, ObjectiveVector, Population};
use crate::pareto::{front_coverage, rank_and_crowd, tournament_select};
use crate::problems::{Problem, ProblemKind, ReferenceFront};
use crate::replacement::{replace, ReplacementConfig, ReplacementScheme};
use crate::rng::RandomSource;
use crate::variation::{
    ga_variation, hboa_build, hboa_sample, offspring_quotas, umda_build, umda_sample,
    GAOperatorParams,
};

/// Which recombination operator drives variation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// Univariate model: independent per-position frequencies.
    Umda,
    /// Two-point crossover plus bit-flip mutation.
    Ga,
    /// Bayesian network with decision-tree local structures.
    Hboa,
}

impl OperatorKind {
    pub fn id(&self) -> &'static str {
        match self {
            OperatorKind::Umda => "umda",
            OperatorKind::Ga => "ga",
            OperatorKind::Hboa => "hboa",
        }
    }
}

/// Requested cluster count for objective-space k-means.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterCount {
    /// Number of unique objective vectors on the reference front.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusteringMode {
    Off,
    On(ClusterCount),
}

impl ClusteringMode {
    pub fn id(&self) -> String {
        match self {
            ClusteringMode::Off => "off".to_string(),
            ClusteringMode::On(ClusterCount::Auto) => "auto".to_string(),
            ClusteringMode::On(ClusterCount::Fixed(k)) => k.to_string(),
        }
    }
}

/// Full configuration of one algorithm variant on one problem instance.
#[derive(Clone, Debug)]
pub struct AlgorithmConfig {
    pub problem: Problem,
    pub population_size: usize,
    pub operator: OperatorKind,
    pub clustering: ClusteringMode,
    pub replacement: ReplacementConfig,
    /// Generation cap; `None` defaults to `5n` for the model-building
    /// operators and `10n` for the slower-converging GA.
    pub max_generations: Option<usize>,
    pub ga_params: GAOperatorParams,
    pub kmeans: KmeansParams,
}

impl AlgorithmConfig {
    /// Variant with the default pairing: clustering on (auto cluster
    /// count) and hamming-window RTR replacement.
    pub fn new(problem: Problem, operator: OperatorKind, population_size: usize) -> Self {
        let n = problem.size();
        Self {
            problem,
            population_size,
            operator,
            clustering: ClusteringMode::On(ClusterCount::Auto),
            replacement: ReplacementConfig::rtr(crate::replacement::RtrMetric::Hamming),
            max_generations: None,
            ga_params: GAOperatorParams::standard(n),
            kmeans: KmeansParams::default(),
        }
    }

    pub fn with_population(mut self, population_size: usize) -> Self {
        self.population_size = population_size;
        self
    }

    pub fn effective_max_generations(&self) -> usize {
        self.max_generations.unwrap_or_else(|| {
            let n = self.problem.size();
            match self.operator {
                OperatorKind::Umda | OperatorKind::Hboa => 5 * n,
                OperatorKind::Ga => 10 * n,
            }
        })
    }

    /// Cluster count after resolving `Auto`, or `None` when clustering is
    /// off.
    pub fn resolved_cluster_count(&self) -> Option<usize> {
        match self.clustering {
            ClusteringMode::Off => None,
            ClusteringMode::On(ClusterCount::Auto) => Some(reference_front_size(&self.problem)),
            ClusteringMode::On(ClusterCount::Fixed(k)) => Some(k),
        }
    }

    /// Identifier like `umda+auto+rtr`; keys harness seeds and CSV rows.
    pub fn variant_id(&self) -> String {
        format!(
            "{}+{}+{}",
            self.operator.id(),
            self.clustering.id(),
            self.replacement.id()
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(invalid_argument("population size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.ga_params.crossover_prob)
            || !(0.0..=1.0).contains(&self.ga_params.mutation_prob)
        {
            return Err(invalid_argument("GA probabilities must lie in [0, 1]"));
        }
        if let ClusteringMode::On(ClusterCount::Fixed(k)) = self.clustering {
            if k == 0 {
                return Err(invalid_argument("cluster count must be at least 1"));
            }
        }
        if self.replacement.scheme == ReplacementScheme::Rtr {
            if let Some(w) = self.replacement.rtr_window {
                if w == 0 || w > self.population_size {
                    return Err(invalid_argument(format!(
                        "RTR window {w} out of 1..={}",
                        self.population_size
                    )));
                }
            }
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iters == 0 {
            return Err(invalid_argument("k-means needs at least 1 restart and 1 iteration"));
        }
        Ok(())
    }
}

fn reference_front_size(problem: &Problem) -> usize {
    match problem.kind() {
        ProblemKind::OnemaxZeromax => problem.size() + 1,
        ProblemKind::Trap5Invtrap5 => problem.size() / 5 + 1,
    }
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// True iff the reference front was fully covered within the cap.
    pub success: bool,
    /// Generations executed (the initial population is generation 0).
    pub generations_used: usize,
    /// Objective evaluations performed: `N * (generations_used + 1)`.
    pub evaluations_used: u64,
    /// Reference points covered by the final population.
    pub final_front_coverage: usize,
    /// Size of the reference front.
    pub front_size: usize,
    /// Coverage after initialization and after each generation.
    pub trajectory: Vec<usize>,
}

/// A run in progress; drives the loop one generation at a time.
pub struct EngineState {
    cfg: AlgorithmConfig,
    rng: RandomSource,
    population: Population,
    front: ReferenceFront,
    generation: usize,
    evaluations: u64,
    trajectory: Vec<usize>,
    outcome: Option<bool>,
}

impl EngineState {
    /// Validate the configuration, create and evaluate the initial
    /// population, and record its coverage.
    pub fn new(cfg: AlgorithmConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = RandomSource::new(seed);
        let front = cfg.problem.reference_front();
        let mut evaluations = 0u64;
        let mut population =
            Population::random(cfg.problem.size(), cfg.population_size, &mut rng)?;
        population.evaluate(&cfg.problem, &mut evaluations)?;
        let (covered, full) = front_coverage(&population, &front);
        let outcome = if full {
            Some(true)
        } else if cfg.effective_max_generations() == 0 {
            Some(false)
        } else {
            None
        };
        Ok(Self {
            cfg,
            rng,
            population,
            front,
            generation: 0,
            evaluations,
            trajectory: vec![covered],
            outcome,
        })
    }

    pub fn is_terminated(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Execute exactly one generation.
    pub fn step(&mut self) -> Result<()> {
        if self.outcome.is_some() {
            return Err(invalid_state("stepping a terminated run"));
        }
        let pop_size = self.cfg.population_size;

        rank_and_crowd(self.population.members_mut())?;
        let selected = tournament_select(&self.population, pop_size, &mut self.rng)?;

        let cluster_lists = self.cluster_selected(&selected)?;
        let quotas = offspring_quotas(pop_size, cluster_lists.len());

        let mut offspring_members: Vec<Individual> = Vec::with_capacity(pop_size);
        for (list, &quota) in cluster_lists.iter().zip(quotas.iter()) {
            let cluster: Vec<Individual> =
                list.iter().map(|&i| selected.members()[i].clone()).collect();
            let sampled = self.vary_cluster(&cluster, quota)?;
            offspring_members.extend(sampled.into_members());
        }
        debug_assert_eq!(offspring_members.len(), pop_size);

        let mut offspring = Population::new(offspring_members, pop_size);
        offspring.evaluate(&self.cfg.problem, &mut self.evaluations)?;

        let parents = std::mem::replace(&mut self.population, Population::new(Vec::new(), 0));
        self.population = replace(parents, offspring, &self.cfg.replacement, &mut self.rng)?;

        self.generation += 1;
        let (covered, full) = front_coverage(&self.population, &self.front);
        self.trajectory.push(covered);
        if full {
            self.outcome = Some(true);
        } else if self.generation >= self.cfg.effective_max_generations() {
            self.outcome = Some(false);
        }
        Ok(())
    }

    /// Selected member indices grouped per nonempty cluster, ascending by
    /// cluster index; one group holding everyone when clustering is off.
    fn cluster_selected(&mut self, selected: &Population) -> Result<Vec<Vec<usize>>> {
        let Some(k) = self.cfg.resolved_cluster_count() else {
            return Ok(vec![(0..selected.len()).collect()]);
        };
        let points: Vec<ObjectiveVector> = selected
            .iter()
            .map(|m| m.objectives_checked().cloned())
            .collect::<Result<_>>()?;
        let clustering = kmeans(&points, k, &mut self.rng, &self.cfg.kmeans)?;
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in clustering.assignments.iter().enumerate() {
            groups[c].push(i);
        }
        Ok(clustering
            .nonempty
            .iter()
            .map(|&c| std::mem::take(&mut groups[c]))
            .collect())
    }

    fn vary_cluster(&mut self, cluster: &[Individual], quota: usize) -> Result<Population> {
        match self.cfg.operator {
            OperatorKind::Umda => {
                let model = umda_build(cluster)?;
                Ok(umda_sample(&model, quota, &mut self.rng))
            }
            OperatorKind::Hboa => {
                if cluster.len() >= 2 {
                    let model = hboa_build(cluster)?;
                    Ok(hboa_sample(&model, quota, &mut self.rng))
                } else {
                    // A singleton cluster carries no dependency signal;
                    // its univariate model (floored to 1/2) samples
                    // uniformly.
                    let model = umda_build(cluster)?;
                    Ok(umda_sample(&model, quota, &mut self.rng))
                }
            }
            OperatorKind::Ga => ga_variation(cluster, quota, &self.cfg.ga_params, &mut self.rng),
        }
    }

    /// Snapshot of the run's result; final once the run has terminated.
    pub fn result(&self) -> RunResult {
        RunResult {
            success: self.outcome == Some(true),
            generations_used: self.generation,
            evaluations_used: self.evaluations,
            final_front_coverage: *self.trajectory.last().expect("trajectory starts nonempty"),
            front_size: self.front.len(),
            trajectory: self.trajectory.clone(),
        }
    }
}

/// Execute a full run: initialize, iterate until the front is covered or
/// the generation cap is reached, and report the outcome.
pub fn run(cfg: &AlgorithmConfig, seed: u64) -> Result<RunResult> {
    let mut state = EngineState::new(cfg.clone(), seed)?;
    while !state.is_terminated() {
        state.step()?;
    }
    Ok(state.result())
}
