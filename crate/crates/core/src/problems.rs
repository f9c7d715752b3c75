//! The two two-objective benchmark families and their exact reference
//! Pareto fronts.
//!
//! Both problems maximize both coordinates. `onemax-zeromax` scores the
//! number of ones against the number of zeros, so every genotype sits on
//! the Pareto-optimal front and the front holds `n + 1` distinct objective
//! vectors. `trap5-invtrap5` applies a deceptive 5-bit trap and its
//! mirror image to a fixed partition of the positions into 5-bit blocks;
//! the Pareto-optimal genotypes set each block uniformly to 0s or 1s and
//! the front holds `n/5 + 1` distinct objective vectors.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use smallvec::SmallVec;

use crate::error::{invalid_argument, Result};
use crate::genotype::{Genotype, ObjectiveVector};
use crate::rng::RandomSource;

pub const ONEMAX_ZEROMAX: &str = "onemax-zeromax";
pub const TRAP5_INVTRAP5: &str = "trap5-invtrap5";

/// Number of ones in the string.
pub fn onemax(x: &Genotype) -> usize {
    x.count_ones()
}

/// Number of zeros in the string: `n - onemax(x)`.
pub fn zeromax(x: &Genotype) -> usize {
    x.len() - x.count_ones()
}

/// Deceptive 5-bit trap on a block's ones-count: 5 at `u = 5`, else `4 - u`.
pub fn trap5_block(u: usize) -> Result<usize> {
    if u > 5 {
        return Err(invalid_argument(format!("block ones-count {u} out of 0..=5")));
    }
    Ok(if u == 5 { 5 } else { 4 - u })
}

/// Mirrored trap on a block's ones-count: 5 at `u = 0`, else `u - 1`.
pub fn invtrap5_block(u: usize) -> Result<usize> {
    if u > 5 {
        return Err(invalid_argument(format!("block ones-count {u} out of 0..=5")));
    }
    Ok(if u == 0 { 5 } else { u - 1 })
}

/// How block membership is laid out over the string positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    /// Blocks are {0..4}, {5..9}, ... in positional order.
    Contiguous,
    /// Block membership is a random permutation of the positions. Exists so
    /// tests can verify that operators do not exploit positional adjacency.
    Shuffled,
}

/// Disjoint 5-position blocks covering all `n` positions. Fixed before a
/// run starts and never revealed to the optimizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<[usize; 5]>,
}

impl Partition {
    pub fn blocks(&self) -> &[[usize; 5]] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn positions(&self) -> usize {
        self.blocks.len() * 5
    }
}

/// Split positions `0..n` into `n/5` disjoint blocks of 5.
pub fn make_partition(n: usize, mode: PartitionMode, rng: &mut RandomSource) -> Result<Partition> {
    if n == 0 || n % 5 != 0 {
        return Err(invalid_argument(format!(
            "trap partition needs a positive multiple of 5, got {n}"
        )));
    }
    let mut positions: Vec<usize> = (0..n).collect();
    if mode == PartitionMode::Shuffled {
        positions.shuffle(rng);
    }
    let blocks = positions
        .chunks_exact(5)
        .map(|c| [c[0], c[1], c[2], c[3], c[4]])
        .collect();
    Ok(Partition { blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    OnemaxZeromax,
    Trap5Invtrap5,
}

/// A two-objective benchmark instance of size `n`.
#[derive(Clone, Debug)]
pub struct Problem {
    kind: ProblemKind,
    n: usize,
    partition: Option<Partition>,
}

impl Problem {
    pub fn onemax_zeromax(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid_argument("problem size must be at least 1"));
        }
        Ok(Self {
            kind: ProblemKind::OnemaxZeromax,
            n,
            partition: None,
        })
    }

    /// Trap instance with a freshly drawn partition in the given mode.
    pub fn trap5_invtrap5(n: usize, mode: PartitionMode, rng: &mut RandomSource) -> Result<Self> {
        Ok(Self::trap5_with_partition(make_partition(n, mode, rng)?))
    }

    pub fn trap5_with_partition(partition: Partition) -> Self {
        let n = partition.positions();
        Self {
            kind: ProblemKind::Trap5Invtrap5,
            n,
            partition: Some(partition),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::OnemaxZeromax => ONEMAX_ZEROMAX,
            ProblemKind::Trap5Invtrap5 => TRAP5_INVTRAP5,
        }
    }

    /// Problem size in bits.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of objectives (`m = 2` for both families).
    pub fn objective_count(&self) -> usize {
        2
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn evaluate(&self, x: &Genotype) -> Result<ObjectiveVector> {
        if x.len() != self.n {
            return Err(invalid_argument(format!(
                "genotype length {} does not match problem size {}",
                x.len(),
                self.n
            )));
        }
        match self.kind {
            ProblemKind::OnemaxZeromax => {
                let ones = onemax(x) as f64;
                Ok(ObjectiveVector::from([ones, self.n as f64 - ones]))
            }
            ProblemKind::Trap5Invtrap5 => {
                let partition = self.partition.as_ref().expect("trap problem has a partition");
                let mut f1 = 0usize;
                let mut f2 = 0usize;
                for block in partition.blocks() {
                    let u = block.iter().filter(|&&i| x.get(i)).count();
                    f1 += trap5_block(u)?;
                    f2 += invtrap5_block(u)?;
                }
                Ok(ObjectiveVector::from([f1 as f64, f2 as f64]))
            }
        }
    }

    /// The exact Pareto-optimal front in objective space, from the closed
    /// forms. Brute-force enumeration is kept as a test oracle only.
    pub fn reference_front(&self) -> ReferenceFront {
        let points: Vec<ObjectiveVector> = match self.kind {
            ProblemKind::OnemaxZeromax => (0..=self.n)
                .map(|i| ObjectiveVector::from([i as f64, (self.n - i) as f64]))
                .collect(),
            ProblemKind::Trap5Invtrap5 => {
                let b = self.n / 5;
                (0..=b)
                    .map(|j| ObjectiveVector::from([(4 * b + j) as f64, (5 * b - j) as f64]))
                    .collect()
            }
        };
        ReferenceFront::new(points)
    }
}

/// Unique objective vectors on a problem's Pareto-optimal front.
#[derive(Clone, Debug)]
pub struct ReferenceFront {
    points: Vec<ObjectiveVector>,
    keys: HashSet<SmallVec<[u64; 2]>>,
}

impl ReferenceFront {
    pub fn new(points: Vec<ObjectiveVector>) -> Self {
        let keys = points.iter().map(|p| p.bit_key()).collect();
        Self { points, keys }
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, v: &ObjectiveVector) -> bool {
        self.keys.contains(&v.bit_key())
    }
}
