//! K-means clustering of selected populations in objective space.
//!
//! Centers are initialized by ordering the points along the first
//! objective and picking evenly spaced order statistics, which starts the
//! clusters spread across the occupied stretch of the front. Assignment
//! uses squared Euclidean distance with ties resolved to the lowest
//! cluster index; iteration stops at the first fixed point of
//! assign/recompute or after `max_iters` cycles. Empty clusters are left
//! empty; downstream variation skips them.

use std::collections::HashMap;

use smallvec::SmallVec;

use crate::error::{invalid_argument, Result};
use crate::genotype::ObjectiveVector;
use crate::rng::RandomSource;

/// Result of one k-means run: per-point assignments plus final centers.
#[derive(Clone, Debug)]
pub struct Clustering {
    /// Requested cluster count.
    pub k: usize,
    /// Cluster index of each input point.
    pub assignments: Vec<usize>,
    /// Final center coordinates, one per requested cluster (empty clusters
    /// keep their last position).
    pub centers: Vec<Vec<f64>>,
    /// Ascending indices of clusters holding at least one point.
    pub nonempty: Vec<usize>,
    /// Within-cluster sum of squared distances at termination.
    pub wcss: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct KmeansParams {
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            restarts: 3,
        }
    }
}

/// Deduplicated view of the input points: identical coordinates collapse
/// into one weighted entry, which keeps the iteration cost proportional to
/// the number of distinct objective vectors rather than the population
/// size. Assignment and center math are weight-exact, so results match
/// running on the full multiset.
struct WeightedPoints {
    coords: Vec<Vec<f64>>,
    weights: Vec<usize>,
    point_to_unique: Vec<usize>,
    total: usize,
}

impl WeightedPoints {
    fn build(points: &[ObjectiveVector]) -> Self {
        let mut index: HashMap<SmallVec<[u64; 2]>, usize> = HashMap::new();
        let mut coords = Vec::new();
        let mut weights: Vec<usize> = Vec::new();
        let mut point_to_unique = Vec::with_capacity(points.len());
        for p in points {
            let key = p.bit_key();
            let next = coords.len();
            let u = *index.entry(key).or_insert(next);
            if u == next {
                coords.push(p.values().to_vec());
                weights.push(0);
            }
            weights[u] += 1;
            point_to_unique.push(u);
        }
        Self {
            coords,
            weights,
            point_to_unique,
            total: points.len(),
        }
    }

    /// Unique indices sorted by first objective, ties by the remaining
    /// coordinates in order.
    fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.coords.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&self.coords[a], &self.coords[b]);
            for (x, y) in pa.iter().zip(pb.iter()) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        });
        order
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ordered center initialization: sort the points by the first objective
/// (ties by the second) and place center `i` on the point at 0-based index
/// `floor(N/2k) + i*floor(N/k)`, clamped to the last point.
pub fn init_centers_ordered(points: &[ObjectiveVector], k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(invalid_argument("cluster count must be at least 1"));
    }
    if points.is_empty() {
        return Err(invalid_argument("ordered initialization needs at least 1 point"));
    }
    let wp = WeightedPoints::build(points);
    Ok(ordered_centers(&wp, k))
}

fn ordered_centers(wp: &WeightedPoints, k: usize) -> Vec<Vec<f64>> {
    let order = wp.sorted_order();
    // Prefix sums of multiplicities along the sorted order let us look up
    // the point at any index of the conceptual fully sorted list.
    let mut cumulative = Vec::with_capacity(order.len());
    let mut acc = 0usize;
    for &u in &order {
        acc += wp.weights[u];
        cumulative.push(acc);
    }
    let n = wp.total;
    let offset = n / (2 * k);
    let step = n / k;
    (0..k)
        .map(|i| {
            let idx = (offset + i * step).min(n - 1);
            let pos = cumulative.partition_point(|&c| c <= idx);
            wp.coords[order[pos]].clone()
        })
        .collect()
}

/// Cluster `points` into `k` groups, keeping the lowest-WCSS result over
/// `restarts` attempts. The first attempt uses ordered initialization; the
/// rest seed centers on distinct points drawn uniformly.
pub fn kmeans(
    points: &[ObjectiveVector],
    k: usize,
    rng: &mut RandomSource,
    params: &KmeansParams,
) -> Result<Clustering> {
    if k == 0 {
        return Err(invalid_argument("cluster count must be at least 1"));
    }
    if points.is_empty() {
        return Err(invalid_argument("k-means needs at least 1 point"));
    }
    let wp = WeightedPoints::build(points);
    let restarts = params.restarts.max(1);

    let mut best: Option<(f64, Vec<usize>, Vec<Vec<f64>>)> = None;
    for attempt in 0..restarts {
        let centers = if attempt == 0 {
            ordered_centers(&wp, k)
        } else {
            random_centers(&wp, k, rng)
        };
        let (wcss, unique_assign, centers) = lloyd(&wp, centers, params.max_iters);
        let better = match &best {
            None => true,
            Some((best_wcss, _, _)) => wcss < *best_wcss,
        };
        if better {
            best = Some((wcss, unique_assign, centers));
        }
    }

    let (wcss, unique_assign, centers) = best.expect("at least one attempt ran");
    let assignments: Vec<usize> = wp.point_to_unique.iter().map(|&u| unique_assign[u]).collect();
    let mut counts = vec![0usize; k];
    for &c in &assignments {
        counts[c] += 1;
    }
    let nonempty = (0..k).filter(|&c| counts[c] > 0).collect();
    Ok(Clustering {
        k,
        assignments,
        centers,
        nonempty,
        wcss,
    })
}

/// Centers on `k` distinct points (distinct multiset members, values may
/// coincide). When `k` exceeds the point count the sampled list is reused
/// cyclically; the surplus centers lose every lowest-index tie and end up
/// empty.
fn random_centers(wp: &WeightedPoints, k: usize, rng: &mut RandomSource) -> Vec<Vec<f64>> {
    let n = wp.total;
    let take = k.min(n);
    let sampled = rand::seq::index::sample(rng, n, take);
    let picks: Vec<usize> = sampled.into_iter().collect();
    (0..k)
        .map(|i| {
            let member = picks[i % picks.len()];
            wp.coords[wp.point_to_unique[member]].clone()
        })
        .collect()
}

/// Alternate assignment and center recomputation until no assignment
/// changes or `max_iters` cycles have run. Returns weighted WCSS, the
/// per-unique-point assignment, and the final centers.
fn lloyd(
    wp: &WeightedPoints,
    mut centers: Vec<Vec<f64>>,
    max_iters: usize,
) -> (f64, Vec<usize>, Vec<Vec<f64>>) {
    let k = centers.len();
    let m = wp.coords[0].len();

    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        wp.coords
            .iter()
            .map(|p| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (c, center) in centers.iter().enumerate() {
                    let d = squared_distance(p, center);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut assignments = assign(&centers);
    for _ in 0..max_iters {
        // Recompute centers as weighted means; empty clusters keep their
        // previous position.
        let mut sums = vec![vec![0.0f64; m]; k];
        let mut mass = vec![0usize; k];
        for (u, &c) in assignments.iter().enumerate() {
            let w = wp.weights[u];
            mass[c] += w;
            for (s, v) in sums[c].iter_mut().zip(wp.coords[u].iter()) {
                *s += v * w as f64;
            }
        }
        for c in 0..k {
            if mass[c] > 0 {
                for (dst, s) in centers[c].iter_mut().zip(sums[c].iter()) {
                    *dst = s / mass[c] as f64;
                }
            }
        }

        let next = assign(&centers);
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }

    let wcss = assignments
        .iter()
        .enumerate()
        .map(|(u, &c)| wp.weights[u] as f64 * squared_distance(&wp.coords[u], &centers[c]))
        .sum();
    (wcss, assignments, centers)
}
