//! Core representations: binary genotypes, objective vectors, individuals,
//! and populations.
//!
//! Genotypes are fixed-length bit strings stored packed in 64-bit words;
//! the public contract is purely positional. Objective vectors hold `m`
//! finite values under a maximization convention for every coordinate.

use std::fmt;

use rand::RngCore;
use smallvec::SmallVec;

use crate::error::{invalid_argument, invalid_state, Result};
use crate::problems::Problem;
use crate::rng::RandomSource;

/// Fixed-length binary string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    words: SmallVec<[u64; 1]>,
    len: usize,
}

impl Genotype {
    /// All-zeros string of length `n`.
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid_argument("genotype length must be at least 1"));
        }
        let words = smallvec::smallvec![0u64; n.div_ceil(64)];
        Ok(Self { words, len: n })
    }

    /// Uniformly random string: each bit independently 1 with probability 1/2.
    pub fn random(n: usize, rng: &mut RandomSource) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for w in g.words.iter_mut() {
            *w = rng.next_u64();
        }
        g.mask_tail();
        Ok(g)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut g = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                g.set(i, true);
            }
        }
        Ok(g)
    }

    /// Parse a string of `'0'`/`'1'` characters; handy in tests.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(invalid_argument(format!("invalid bit character {c:?}"))),
            }
        }
        Self::from_bits(&bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &Genotype) -> Result<usize> {
        if self.len != other.len {
            return Err(invalid_argument(format!(
                "hamming distance needs equal lengths, got {} and {}",
                self.len, other.len
            )));
        }
        Ok(self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn mask_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({self})")
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter_bits() {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Draw a uniformly random genotype of length `n`.
pub fn random_genotype(n: usize, rng: &mut RandomSource) -> Result<Genotype> {
    Genotype::random(n, rng)
}

/// Count the positions where `a` and `b` differ.
pub fn hamming_distance(a: &Genotype, b: &Genotype) -> Result<usize> {
    a.hamming_distance(b)
}

/// Vector of `m` objective values, every coordinate maximized.
#[derive(Clone, PartialEq)]
pub struct ObjectiveVector {
    values: SmallVec<[f64; 2]>,
}

impl ObjectiveVector {
    pub fn new(values: impl Into<SmallVec<[f64; 2]>>) -> Self {
        let values = values.into();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    /// Number of objectives `m`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, m: usize) -> f64 {
        self.values[m]
    }

    /// Exact-equality key (normalizes -0.0 to 0.0); used for coverage
    /// counting and duplicate grouping.
    pub fn bit_key(&self) -> SmallVec<[u64; 2]> {
        self.values
            .iter()
            .map(|&v| if v == 0.0 { 0.0f64 } else { v }.to_bits())
            .collect()
    }

    pub fn squared_distance(&self, other: &ObjectiveVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl fmt::Debug for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        Self::new(SmallVec::from_vec(v))
    }
}

impl From<[f64; 2]> for ObjectiveVector {
    fn from(v: [f64; 2]) -> Self {
        Self::new(SmallVec::from_slice(&v))
    }
}

/// Candidate solution: genotype plus cached evaluation and ranking state.
///
/// The objective cache is filled by [`Population::evaluate`]; rank and
/// crowding distance are assigned by the `pareto` module and are only
/// meaningful within the ranking context that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    objectives: Option<ObjectiveVector>,
    rank: Option<u32>,
    crowding: Option<f64>,
}

impl Individual {
    pub fn new(genotype: Genotype) -> Self {
        Self {
            genotype,
            objectives: None,
            rank: None,
            crowding: None,
        }
    }

    pub fn objectives(&self) -> Option<&ObjectiveVector> {
        self.objectives.as_ref()
    }

    /// Objectives, or invalid-state if the individual was never evaluated.
    pub fn objectives_checked(&self) -> Result<&ObjectiveVector> {
        self.objectives
            .as_ref()
            .ok_or_else(|| invalid_state("individual has no cached objectives"))
    }

    pub fn set_objectives(&mut self, objectives: ObjectiveVector) {
        self.objectives = Some(objectives);
    }

    pub fn rank(&self) -> Option<u32> {
        self.rank
    }

    pub fn crowding(&self) -> Option<f64> {
        self.crowding
    }

    pub(crate) fn set_rank(&mut self, rank: u32) {
        debug_assert!(rank >= 1);
        self.rank = Some(rank);
    }

    pub(crate) fn set_crowding(&mut self, crowding: f64) {
        debug_assert!(crowding >= 0.0);
        self.crowding = Some(crowding);
    }

    pub(crate) fn clear_ranking(&mut self) {
        self.rank = None;
        self.crowding = None;
    }
}

/// Ordered multiset of individuals with a target capacity.
///
/// Duplicate genotypes are permitted. `capacity` is the population size the
/// generational loop maintains; `members` may transiently differ (e.g. a
/// merged parent+offspring set before replacement).
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
    capacity: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>, capacity: usize) -> Self {
        Self { members, capacity }
    }

    pub fn from_genotypes(genotypes: Vec<Genotype>) -> Self {
        let capacity = genotypes.len();
        Self {
            members: genotypes.into_iter().map(Individual::new).collect(),
            capacity,
        }
    }

    /// `size` uniformly random genotypes of length `n_bits`.
    pub fn random(n_bits: usize, size: usize, rng: &mut RandomSource) -> Result<Self> {
        let mut members = Vec::with_capacity(size);
        for _ in 0..size {
            members.push(Individual::new(Genotype::random(n_bits, rng)?));
        }
        Ok(Self {
            members,
            capacity: size,
        })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Individual] {
        &mut self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Individual> {
        self.members.iter()
    }

    /// Fill every member's objective cache and charge the evaluations to
    /// `eval_counter`. The counter increases by exactly the number of
    /// members evaluated; it is the run's cost meter.
    pub fn evaluate(&mut self, problem: &Problem, eval_counter: &mut u64) -> Result<()> {
        for ind in &mut self.members {
            ind.set_objectives(problem.evaluate(&ind.genotype)?);
        }
        *eval_counter += self.members.len() as u64;
        Ok(())
    }
}

/// Evaluate every member of `pop` against `problem`.
pub fn evaluate_population(
    pop: &mut Population,
    problem: &Problem,
    eval_counter: &mut u64,
) -> Result<()> {
    pop.evaluate(problem, eval_counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Problem;

    #[test]
    fn zero_length_rejected() {
        let mut rng = RandomSource::new(0);
        assert!(Genotype::random(0, &mut rng).is_err());
        assert!(Genotype::zeros(0).is_err());
    }

    #[test]
    fn random_genotype_has_requested_length() {
        let mut rng = RandomSource::new(123);
        let g = random_genotype(5, &mut rng).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.to_string().len(), 5);
    }

    #[test]
    fn random_genotype_is_deterministic() {
        let a = random_genotype(70, &mut RandomSource::new(9)).unwrap();
        let b = random_genotype(70, &mut RandomSource::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_bit_frequency_near_half() {
        // 10,000 single-bit draws; 3-sigma binomial band around 0.5 is
        // roughly +/- 0.015, so [0.47, 0.53] is a comfortable bound.
        let mut rng = RandomSource::new(2024);
        let ones: usize = (0..10_000)
            .map(|_| random_genotype(1, &mut rng).unwrap().count_ones())
            .sum();
        let fraction = ones as f64 / 10_000.0;
        assert!(
            (0.47..=0.53).contains(&fraction),
            "fraction of ones was {fraction}"
        );
    }

    #[test]
    fn hamming_distance_examples() {
        let z = Genotype::from_bit_str("00000").unwrap();
        let o = Genotype::from_bit_str("11111").unwrap();
        let a = Genotype::from_bit_str("10110").unwrap();
        let b = Genotype::from_bit_str("00111").unwrap();
        assert_eq!(hamming_distance(&z, &z).unwrap(), 0);
        assert_eq!(hamming_distance(&z, &o).unwrap(), 5);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 2);
    }

    #[test]
    fn hamming_distance_length_mismatch() {
        let a = Genotype::zeros(4).unwrap();
        let b = Genotype::zeros(5).unwrap();
        assert!(hamming_distance(&a, &b).is_err());
    }

    #[test]
    fn packed_storage_survives_word_boundary() {
        let mut g = Genotype::zeros(130).unwrap();
        for i in [0, 63, 64, 65, 127, 128, 129] {
            g.set(i, true);
            assert!(g.get(i));
        }
        assert_eq!(g.count_ones(), 7);
        g.flip(64);
        assert_eq!(g.count_ones(), 6);
    }

    #[test]
    fn evaluate_population_counts_every_member() {
        let problem = Problem::onemax_zeromax(4).unwrap();
        let mut evals = 0u64;

        let mut empty = Population::from_genotypes(vec![]);
        evaluate_population(&mut empty, &problem, &mut evals).unwrap();
        assert_eq!(evals, 0);

        let mut one = Population::from_genotypes(vec![Genotype::zeros(4).unwrap()]);
        evaluate_population(&mut one, &problem, &mut evals).unwrap();
        assert_eq!(evals, 1);
        assert!(one.members()[0].objectives().is_some());

        let mut rng = RandomSource::new(5);
        let mut many = Population::random(4, 17, &mut rng).unwrap();
        evaluate_population(&mut many, &problem, &mut evals).unwrap();
        assert_eq!(evals, 1 + 17);
        assert!(many.iter().all(|m| m.objectives().is_some()));
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let problem = Problem::onemax_zeromax(4).unwrap();
        let mut evals = 0u64;
        let mut pop = Population::from_genotypes(vec![Genotype::zeros(5).unwrap()]);
        assert!(evaluate_population(&mut pop, &problem, &mut evals).is_err());
    }

    #[test]
    fn objective_vector_bit_key_normalizes_negative_zero() {
        let a = ObjectiveVector::from([0.0, 1.0]);
        let b = ObjectiveVector::from([-0.0, 1.0]);
        assert_eq!(a.bit_key(), b.bit_key());
    }
}
