//! Recombination operators: univariate model building/sampling, two-point
//! crossover with bit-flip mutation, and Bayesian networks with
//! decision-tree local structures (see [`bayes`]).
//!
//! Each operator builds from one cluster of selected individuals and emits
//! a requested number of offspring genotypes. Sampled probabilities are
//! clamped to `[p_min, 1 - p_min]` with `p_min = 1/(2s)` for a cluster of
//! size `s`, which keeps every bit reachable and degenerates gracefully on
//! tiny clusters (a singleton cluster samples uniformly).

pub mod bayes;

pub use bayes::{hboa_build, hboa_sample, BayesNetLocal, DecisionTree};

use rand::Rng;

use crate::error::{invalid_argument, Result};
use crate::genotype::{Genotype, Individual, Population};
use crate::rng::RandomSource;

/// Probability floor for sampled bits in a cluster of size `s`.
pub fn probability_floor(cluster_size: usize) -> f64 {
    1.0 / (2.0 * cluster_size as f64)
}

/// Crossover and mutation rates for the GA operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GAOperatorParams {
    /// Probability that a parent pair is recombined rather than copied.
    pub crossover_prob: f64,
    /// Per-bit flip probability applied to every offspring.
    pub mutation_prob: f64,
}

impl GAOperatorParams {
    pub fn new(crossover_prob: f64, mutation_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover_prob) {
            return Err(invalid_argument(format!(
                "crossover probability {crossover_prob} out of [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&mutation_prob) {
            return Err(invalid_argument(format!(
                "mutation probability {mutation_prob} out of [0, 1]"
            )));
        }
        Ok(Self {
            crossover_prob,
            mutation_prob,
        })
    }

    /// The standard setting: crossover 0.6, mutation 1/n.
    pub fn standard(n_bits: usize) -> Self {
        Self {
            crossover_prob: 0.6,
            mutation_prob: 1.0 / n_bits as f64,
        }
    }
}

/// Per-position probability of sampling a 1.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateModel {
    probabilities: Vec<f64>,
}

impl UnivariateModel {
    pub fn new(probabilities: Vec<f64>) -> Self {
        debug_assert!(probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        Self { probabilities }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Raw per-position frequency of ones in a cluster, before clamping.
pub fn bit_frequencies(cluster: &[Individual]) -> Result<Vec<f64>> {
    if cluster.is_empty() {
        return Err(invalid_argument("cannot build a model from an empty cluster"));
    }
    let n = cluster[0].genotype.len();
    let size = cluster.len() as f64;
    let mut freqs = vec![0.0f64; n];
    for ind in cluster {
        debug_assert_eq!(ind.genotype.len(), n);
        for (i, f) in freqs.iter_mut().enumerate() {
            if ind.genotype.get(i) {
                *f += 1.0;
            }
        }
    }
    for f in freqs.iter_mut() {
        *f /= size;
    }
    Ok(freqs)
}

/// Estimate the univariate model of a cluster: per-position one-frequency
/// clamped to `[p_min, 1 - p_min]`.
pub fn umda_build(cluster: &[Individual]) -> Result<UnivariateModel> {
    let mut probabilities = bit_frequencies(cluster)?;
    let floor = probability_floor(cluster.len());
    for p in probabilities.iter_mut() {
        *p = p.clamp(floor, 1.0 - floor);
    }
    Ok(UnivariateModel::new(probabilities))
}

/// Sample `count` offspring, each bit drawn independently.
pub fn umda_sample(model: &UnivariateModel, count: usize, rng: &mut RandomSource) -> Population {
    let n = model.len();
    let mut genotypes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut g = Genotype::zeros(n).expect("model length is positive");
        for (i, &p) in model.probabilities.iter().enumerate() {
            if rng.gen_bool(p) {
                g.set(i, true);
            }
        }
        genotypes.push(g);
    }
    Population::from_genotypes(genotypes)
}

/// Two-point crossover with the cut convention: cut labels `c1 < c2` drawn
/// from `1..=n-1`, positions `c1..c2` (0-based) exchanged.
pub fn two_point_crossover(
    a: &Genotype,
    b: &Genotype,
    c1: usize,
    c2: usize,
) -> (Genotype, Genotype) {
    debug_assert!(c1 < c2 && c1 >= 1 && c2 <= a.len() - 1);
    let mut x = a.clone();
    let mut y = b.clone();
    for i in c1..c2 {
        let (xa, yb) = (a.get(i), b.get(i));
        x.set(i, yb);
        y.set(i, xa);
    }
    (x, y)
}

fn mutate(g: &mut Genotype, p_m: f64, rng: &mut RandomSource) {
    if p_m == 0.0 {
        return;
    }
    for i in 0..g.len() {
        if rng.gen_bool(p_m) {
            g.flip(i);
        }
    }
}

/// GA recombination: repeatedly draw two parents uniformly, recombine with
/// probability `p_c` (otherwise copy), mutate every child bit with
/// probability `p_m`, and emit children until `count` offspring exist.
///
/// Two distinct cut labels need `n >= 3`; shorter strings fall back to
/// copying, so crossover is a no-op there.
pub fn ga_variation(
    selected: &[Individual],
    count: usize,
    params: &GAOperatorParams,
    rng: &mut RandomSource,
) -> Result<Population> {
    if selected.is_empty() {
        return Err(invalid_argument("GA variation needs a nonempty parent set"));
    }
    let n = selected[0].genotype.len();
    let mut offspring = Vec::with_capacity(count);
    while offspring.len() < count {
        let p1 = &selected[rng.gen_range(0..selected.len())].genotype;
        let p2 = &selected[rng.gen_range(0..selected.len())].genotype;
        let (mut c1, mut c2) = if n >= 3 && rng.gen_bool(params.crossover_prob) {
            let (a, b) = distinct_cuts(n, rng);
            two_point_crossover(p1, p2, a, b)
        } else {
            (p1.clone(), p2.clone())
        };
        mutate(&mut c1, params.mutation_prob, rng);
        mutate(&mut c2, params.mutation_prob, rng);
        offspring.push(c1);
        if offspring.len() < count {
            offspring.push(c2);
        }
    }
    Ok(Population::from_genotypes(offspring))
}

fn distinct_cuts(n: usize, rng: &mut RandomSource) -> (usize, usize) {
    let a = rng.gen_range(1..n);
    let mut b = rng.gen_range(1..n);
    while b == a {
        b = rng.gen_range(1..n);
    }
    (a.min(b), a.max(b))
}

/// Split `total` offspring over `clusters` nonempty clusters: each gets
/// `floor(total/clusters)`, and the remainder is handed out one each to
/// the lowest-indexed clusters.
pub fn offspring_quotas(total: usize, clusters: usize) -> Vec<usize> {
    debug_assert!(clusters > 0);
    let base = total / clusters;
    let remainder = total % clusters;
    (0..clusters)
        .map(|i| base + usize::from(i < remainder))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(strings: &[&str]) -> Vec<Individual> {
        strings
            .iter()
            .map(|s| Individual::new(Genotype::from_bit_str(s).unwrap()))
            .collect()
    }

    #[test]
    fn frequencies_before_clamping() {
        let c = cluster(&["111", "110", "100"]);
        let freqs = bit_frequencies(&c).unwrap();
        assert_eq!(freqs, vec![1.0, 2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn build_clamps_saturated_frequencies() {
        let c = cluster(&["11111", "11111"]);
        let model = umda_build(&c).unwrap();
        let expected = 1.0 - probability_floor(2); // 0.75
        assert!(model.probabilities().iter().all(|&p| p == expected));
    }

    #[test]
    fn build_keeps_balanced_frequencies() {
        let c = cluster(&["10101", "01010"]);
        let model = umda_build(&c).unwrap();
        assert!(model.probabilities().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn build_rejects_empty_cluster() {
        assert!(umda_build(&[]).is_err());
        assert!(bit_frequencies(&[]).is_err());
    }

    #[test]
    fn sample_zero_count_is_empty() {
        let model = UnivariateModel::new(vec![0.5; 4]);
        let mut rng = RandomSource::new(0);
        assert!(umda_sample(&model, 0, &mut rng).is_empty());
    }

    #[test]
    fn sample_tracks_model_probability() {
        // All probabilities at 1 - p_min for a 10-member cluster: 0.95.
        // Mean ones-fraction of 1000 samples x 10 bits stays within 3 sigma.
        let p = 1.0 - probability_floor(10);
        let model = UnivariateModel::new(vec![p; 10]);
        let mut rng = RandomSource::new(7);
        let pop = umda_sample(&model, 1000, &mut rng);
        let ones: usize = pop.iter().map(|i| i.genotype.count_ones()).sum();
        let fraction = ones as f64 / 10_000.0;
        let sigma = (p * (1.0 - p) / 10_000.0f64).sqrt();
        assert!(
            (fraction - p).abs() <= 3.0 * sigma,
            "fraction {fraction} vs p {p}"
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = UnivariateModel::new(vec![0.3; 8]);
        let a = umda_sample(&model, 5, &mut RandomSource::new(3));
        let b = umda_sample(&model, 5, &mut RandomSource::new(3));
        assert_eq!(a, b);
    }

    #[test]
    fn crossover_cut_convention() {
        let a = Genotype::from_bit_str("00000").unwrap();
        let b = Genotype::from_bit_str("11111").unwrap();
        let (x, y) = two_point_crossover(&a, &b, 1, 3);
        assert_eq!(x.to_string(), "01100");
        assert_eq!(y.to_string(), "10011");
    }

    #[test]
    fn ga_pure_copy_without_operators() {
        let parents = cluster(&["10110", "01001"]);
        let params = GAOperatorParams::new(0.0, 0.0).unwrap();
        let mut rng = RandomSource::new(11);
        let out = ga_variation(&parents, 6, &params, &mut rng).unwrap();
        assert_eq!(out.len(), 6);
        for child in out.iter() {
            let s = child.genotype.to_string();
            assert!(s == "10110" || s == "01001");
        }
    }

    #[test]
    fn ga_full_mutation_complements_copies() {
        let parents = cluster(&["00000"]);
        let params = GAOperatorParams::new(0.0, 1.0).unwrap();
        let mut rng = RandomSource::new(12);
        let out = ga_variation(&parents, 3, &params, &mut rng).unwrap();
        for child in out.iter() {
            assert_eq!(child.genotype.to_string(), "11111");
        }
    }

    #[test]
    fn ga_truncates_odd_counts() {
        let parents = cluster(&["10110", "01001", "11100"]);
        let params = GAOperatorParams::standard(5);
        let mut rng = RandomSource::new(13);
        assert_eq!(ga_variation(&parents, 7, &params, &mut rng).unwrap().len(), 7);
        assert_eq!(ga_variation(&parents, 0, &params, &mut rng).unwrap().len(), 0);
    }

    #[test]
    fn ga_rejects_empty_parents() {
        let params = GAOperatorParams::standard(5);
        let mut rng = RandomSource::new(14);
        assert!(ga_variation(&[], 2, &params, &mut rng).is_err());
    }

    #[test]
    fn ga_params_validate_ranges() {
        assert!(GAOperatorParams::new(1.2, 0.0).is_err());
        assert!(GAOperatorParams::new(0.5, -0.1).is_err());
        assert!(GAOperatorParams::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn quota_remainder_goes_to_lowest_clusters() {
        assert_eq!(offspring_quotas(10, 3), vec![4, 3, 3]);
        assert_eq!(offspring_quotas(9, 3), vec![3, 3, 3]);
        assert_eq!(offspring_quotas(2, 5), vec![1, 1, 0, 0, 0]);
        assert_eq!(offspring_quotas(0, 2), vec![0, 0]);
        assert_eq!(offspring_quotas(10, 3).iter().sum::<usize>(), 10);
    }
}
