//! Combining parent and offspring populations: elitist replacement under
//! the crowded comparison, and restricted tournament replacement (RTR)
//! with genotype-space or objective-space distance.
//!
//! Both schemes rank parents and offspring together once, then keep or
//! reject under that fixed context. For RTR this is a deliberate choice:
//! the pass replaces parents one offspring at a time, and re-ranking after
//! every replacement would cost a full sort per offspring.

use rand::Rng;

use crate::error::{invalid_argument, Result};
use crate::genotype::{Individual, Population};
use crate::pareto::{compare, rank_and_crowd, Winner};
use crate::rng::RandomSource;

/// Distance used by RTR to find the nearest sampled parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RtrMetric {
    /// Bit positions where the genotypes differ.
    Hamming,
    /// Euclidean distance between objective vectors.
    EuclideanObjective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplacementScheme {
    Elitist,
    Rtr,
}

/// Replacement policy for the generational loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplacementConfig {
    pub scheme: ReplacementScheme,
    /// RTR window size; `None` picks `max(1, min(n, N/20))`.
    pub rtr_window: Option<usize>,
    pub rtr_metric: RtrMetric,
}

impl ReplacementConfig {
    pub fn elitist() -> Self {
        Self {
            scheme: ReplacementScheme::Elitist,
            rtr_window: None,
            rtr_metric: RtrMetric::Hamming,
        }
    }

    pub fn rtr(metric: RtrMetric) -> Self {
        Self {
            scheme: ReplacementScheme::Rtr,
            rtr_window: None,
            rtr_metric: metric,
        }
    }

    pub fn with_window(mut self, w: usize) -> Self {
        self.rtr_window = Some(w);
        self
    }

    /// Window actually used for a problem of `n_bits` bits and parent
    /// population `pop_size`.
    pub fn effective_window(&self, n_bits: usize, pop_size: usize) -> usize {
        self.rtr_window
            .unwrap_or_else(|| (pop_size / 20).min(n_bits).max(1))
    }

    pub fn id(&self) -> &'static str {
        match (self.scheme, self.rtr_metric) {
            (ReplacementScheme::Elitist, _) => "elitist",
            (ReplacementScheme::Rtr, RtrMetric::Hamming) => "rtr",
            (ReplacementScheme::Rtr, RtrMetric::EuclideanObjective) => "rtr-objective",
        }
    }
}

/// Merge parents and offspring, rank and crowd the union, and keep the
/// best `N` by (rank ascending, crowding descending) with uniform random
/// tie-breaking. `N` is the parents' capacity.
pub fn elitist_replace(
    parents: Population,
    offspring: Population,
    rng: &mut RandomSource,
) -> Result<Population> {
    let target = parents.capacity();
    let mut merged: Vec<Individual> = parents.into_members();
    merged.extend(offspring.into_members());
    rank_and_crowd(&mut merged)?;

    let mut order: Vec<usize> = (0..merged.len()).collect();
    // Shuffle before the stable sort so ties resolve uniformly at random.
    shuffle(&mut order, rng);
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&merged[a], &merged[b]);
        ma.rank()
            .cmp(&mb.rank())
            .then_with(|| mb.crowding().unwrap().total_cmp(&ma.crowding().unwrap()))
    });
    order.truncate(target);
    order.sort_unstable(); // keep survivor order stable for reproducibility

    let mut keep: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    let members = order
        .into_iter()
        .map(|i| keep[i].take().expect("indices are unique"))
        .collect();
    Ok(Population::new(members, target))
}

fn shuffle(indices: &mut [usize], rng: &mut RandomSource) {
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
}

/// Restricted tournament replacement: rank the merged parent∪offspring set
/// once, then for each offspring draw `w` distinct parents, find the one
/// nearest under the configured metric, and replace it iff the offspring
/// wins the crowded comparison.
pub fn rtr_replace(
    parents: Population,
    offspring: Population,
    cfg: &ReplacementConfig,
    rng: &mut RandomSource,
) -> Result<Population> {
    let target = parents.capacity();
    let parent_count = parents.len();
    if parent_count == 0 {
        return Err(invalid_argument("RTR needs a nonempty parent population"));
    }
    let n_bits = parents.members()[0].genotype.len();
    let window = cfg.effective_window(n_bits, parent_count);
    if window == 0 || window > parent_count {
        return Err(invalid_argument(format!(
            "RTR window {window} out of 1..={parent_count}"
        )));
    }

    // Fixed ranking context over the union; slots keep their context
    // values as offspring move in.
    let offspring_count = offspring.len();
    let mut merged: Vec<Individual> = parents.into_members();
    merged.extend(offspring.into_members());
    rank_and_crowd(&mut merged)?;
    let incoming: Vec<Individual> = merged.split_off(parent_count);
    let mut current = merged;
    debug_assert_eq!(incoming.len(), offspring_count);

    for child in incoming {
        let sampled = rand::seq::index::sample(rng, parent_count, window);
        let mut nearest = usize::MAX;
        let mut nearest_distance = f64::INFINITY;
        for slot in sampled {
            let d = distance(cfg.rtr_metric, &child, &current[slot])?;
            if d < nearest_distance {
                nearest_distance = d;
                nearest = slot;
            }
        }
        if compare(&child, &current[nearest], rng)? == Winner::First {
            current[nearest] = child;
        }
    }
    Ok(Population::new(current, target))
}

fn distance(metric: RtrMetric, a: &Individual, b: &Individual) -> Result<f64> {
    match metric {
        RtrMetric::Hamming => Ok(a.genotype.hamming_distance(&b.genotype)? as f64),
        RtrMetric::EuclideanObjective => {
            let (oa, ob) = (a.objectives_checked()?, b.objectives_checked()?);
            Ok(oa.squared_distance(ob)) // monotone in the true distance
        }
    }
}

/// Dispatch on the configured scheme.
pub fn replace(
    parents: Population,
    offspring: Population,
    cfg: &ReplacementConfig,
    rng: &mut RandomSource,
) -> Result<Population> {
    match cfg.scheme {
        ReplacementScheme::Elitist => elitist_replace(parents, offspring, rng),
        ReplacementScheme::Rtr => rtr_replace(parents, offspring, cfg, rng),
    }
}
