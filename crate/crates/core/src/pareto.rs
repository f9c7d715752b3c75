//! Dominance, nondominated sorting, crowding-distance assignment, the
//! crowded comparison, tournament selection, and front-coverage
//! measurement.
//!
//! All comparisons maximize every objective. Ranks start at 1: rank 1 is
//! the subset dominated by nobody, rank 2 the subset dominated only by
//! rank 1, and so on. Crowding is computed per rank from nearest-neighbor
//! objective gaps, with per-objective extremes pinned to infinity; the
//! default form does not normalize gaps by the objective range (see
//! [`CrowdingMode`]).

use std::collections::HashMap;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{invalid_argument, invalid_state, Result};
use crate::genotype::{Individual, ObjectiveVector, Population};
use crate::problems::ReferenceFront;
use crate::rng::RandomSource;

/// True iff `a` is no worse than `b` everywhere and strictly better
/// somewhere (maximization).
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(invalid_argument(format!(
            "objective dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_values(a.values(), b.values()))
}

#[inline]
fn dominates_values(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (&x, &y) in a.iter().zip(b.iter()) {
        if x < y {
            return false;
        }
        if x > y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Assign ranks by repeated nondominated peeling, implemented by dominance
/// counting.
///
/// Rank is a function of the objective vector alone, so members are first
/// grouped by exact objective value and the quadratic dominance count runs
/// over the distinct vectors; with the integer-valued benchmark objectives
/// that keeps generation cost flat as the population grows.
///
/// Previously assigned crowding distances are cleared: they were computed
/// under an older ranking context.
pub fn nondominated_sort(members: &mut [Individual]) -> Result<()> {
    if members.is_empty() {
        return Ok(());
    }
    let mut distinct: Vec<&[f64]> = Vec::new();
    let mut index_of: HashMap<SmallVec<[u64; 2]>, u32> = HashMap::new();
    let mut member_group = Vec::with_capacity(members.len());
    for ind in members.iter() {
        let objectives = ind.objectives_checked()?;
        let key = objectives.bit_key();
        let next = distinct.len() as u32;
        let group = *index_of.entry(key).or_insert(next);
        if group == next {
            distinct.push(objectives.values());
        }
        member_group.push(group);
    }

    let ranks = rank_distinct(&distinct);
    for (ind, &group) in members.iter_mut().zip(member_group.iter()) {
        ind.clear_ranking();
        ind.set_rank(ranks[group as usize]);
    }
    Ok(())
}

/// Dominance-count ranking over distinct objective vectors.
fn rank_distinct(points: &[&[f64]]) -> Vec<u32> {
    let v = points.len();
    let mut dominated_by = vec![0u32; v]; // how many points dominate i
    let mut dominates_list: Vec<Vec<u32>> = vec![Vec::new(); v];
    for i in 0..v {
        for j in (i + 1)..v {
            if dominates_values(points[i], points[j]) {
                dominates_list[i].push(j as u32);
                dominated_by[j] += 1;
            } else if dominates_values(points[j], points[i]) {
                dominates_list[j].push(i as u32);
                dominated_by[i] += 1;
            }
        }
    }

    let mut ranks = vec![0u32; v];
    let mut current: Vec<u32> = (0..v as u32).filter(|&i| dominated_by[i as usize] == 0).collect();
    let mut rank = 1u32;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            ranks[i as usize] = rank;
            for &j in &dominates_list[i as usize] {
                dominated_by[j as usize] -= 1;
                if dominated_by[j as usize] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        rank += 1;
    }
    ranks
}

/// Which crowding-distance formula to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CrowdingMode {
    /// Accumulate raw neighbor gaps `Q(i+1).m - Q(i-1).m`. This is the
    /// authoritative form for all experiments here.
    #[default]
    Unnormalized,
    /// Divide each gap by the rank's objective range `f_max - f_min`
    /// (objectives with zero range contribute nothing). Provided for
    /// comparison against the common NSGA-II formulation.
    Normalized,
}

/// Assign crowding distances, one rank at a time.
///
/// Within a rank, members are sorted by each objective in turn (stable, so
/// ties keep population order); the two extremes of each sorted pass get
/// +inf and interior members accumulate the gap between their neighbors.
pub fn crowding_assign(members: &mut [Individual], mode: CrowdingMode) -> Result<()> {
    let mut by_rank: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, ind) in members.iter().enumerate() {
        let rank = ind
            .rank()
            .ok_or_else(|| invalid_state("crowding assignment requires ranks"))?;
        by_rank.entry(rank).or_default().push(i);
    }
    let objective_count = match members.first() {
        Some(first) => first.objectives_checked()?.len(),
        None => return Ok(()),
    };

    let mut distances = vec![0.0f64; members.len()];
    for group in by_rank.values() {
        if group.len() == 1 {
            distances[group[0]] = f64::INFINITY;
            continue;
        }
        let mut order = group.clone();
        for m in 0..objective_count {
            let value = |idx: usize| members[idx].objectives().expect("checked above").get(m);
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
            let last = order.len() - 1;
            distances[order[0]] = f64::INFINITY;
            distances[order[last]] = f64::INFINITY;
            let scale = match mode {
                CrowdingMode::Unnormalized => 1.0,
                CrowdingMode::Normalized => {
                    let range = value(order[last]) - value(order[0]);
                    if range > 0.0 {
                        range
                    } else {
                        continue;
                    }
                }
            };
            for w in 1..last {
                let idx = order[w];
                if distances[idx].is_finite() {
                    distances[idx] += (value(order[w + 1]) - value(order[w - 1])) / scale;
                }
            }
        }
    }
    for (ind, d) in members.iter_mut().zip(distances) {
        ind.set_crowding(d);
    }
    Ok(())
}

/// Nondominated sort followed by unnormalized crowding assignment.
pub fn rank_and_crowd(members: &mut [Individual]) -> Result<()> {
    nondominated_sort(members)?;
    crowding_assign(members, CrowdingMode::Unnormalized)
}

/// Outcome of a crowded comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
}

/// Crowded comparison: lower rank wins; on equal rank larger crowding
/// wins; on a full tie the winner is drawn uniformly.
///
/// Both individuals must carry rank and crowding assigned under the same
/// ranking context.
pub fn compare(a: &Individual, b: &Individual, rng: &mut RandomSource) -> Result<Winner> {
    let (ra, rb) = match (a.rank(), b.rank()) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => return Err(invalid_state("comparison requires assigned ranks")),
    };
    if ra < rb {
        return Ok(Winner::First);
    }
    if ra > rb {
        return Ok(Winner::Second);
    }
    let (ca, cb) = match (a.crowding(), b.crowding()) {
        (Some(ca), Some(cb)) => (ca, cb),
        _ => return Err(invalid_state("comparison requires assigned crowding")),
    };
    if ca > cb {
        Ok(Winner::First)
    } else if ca < cb {
        Ok(Winner::Second)
    } else if rng.gen_bool(0.5) {
        Ok(Winner::First)
    } else {
        Ok(Winner::Second)
    }
}

/// Binary tournament selection with replacement: `count` winners of
/// tournaments between uniformly drawn pairs.
pub fn tournament_select(
    pop: &Population,
    count: usize,
    rng: &mut RandomSource,
) -> Result<Population> {
    if pop.is_empty() {
        return Err(invalid_argument("tournament selection on empty population"));
    }
    let members = pop.members();
    let mut selected = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.gen_range(0..members.len());
        let j = rng.gen_range(0..members.len());
        let winner = match compare(&members[i], &members[j], rng)? {
            Winner::First => i,
            Winner::Second => j,
        };
        selected.push(members[winner].clone());
    }
    Ok(Population::new(selected, count))
}

/// Count how many reference objective vectors appear exactly among the
/// population's objective vectors. Duplicates count once; the flag is true
/// iff every reference point is represented.
pub fn front_coverage(pop: &Population, front: &ReferenceFront) -> (usize, bool) {
    let mut seen: std::collections::HashSet<SmallVec<[u64; 2]>> = std::collections::HashSet::new();
    for ind in pop.iter() {
        if let Some(obj) = ind.objectives() {
            if front.contains(obj) {
                seen.insert(obj.bit_key());
            }
        }
    }
    let covered = seen.len();
    (covered, covered == front.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::Genotype;
    use crate::problems::Problem;
    use proptest::prelude::*;
    use rand::Rng;

    fn individual(objs: [f64; 2]) -> Individual {
        let mut ind = Individual::new(Genotype::zeros(1).unwrap());
        ind.set_objectives(ObjectiveVector::from(objs));
        ind
    }

    fn ranked(objs: &[[f64; 2]]) -> Vec<Individual> {
        let mut members: Vec<Individual> = objs.iter().map(|&o| individual(o)).collect();
        rank_and_crowd(&mut members).unwrap();
        members
    }

    #[test]
    fn dominance_examples() {
        let d = |a: [f64; 2], b: [f64; 2]| {
            dominates(&ObjectiveVector::from(a), &ObjectiveVector::from(b)).unwrap()
        };
        assert!(d([3.0, 2.0], [2.0, 2.0]));
        assert!(!d([3.0, 2.0], [3.0, 2.0]));
        assert!(!d([3.0, 1.0], [2.0, 2.0]));
        assert!(!d([2.0, 2.0], [3.0, 1.0]));
    }

    #[test]
    fn dominance_dimension_mismatch() {
        let a = ObjectiveVector::from(vec![1.0, 2.0, 3.0]);
        let b = ObjectiveVector::from([1.0, 2.0]);
        assert!(dominates(&a, &b).is_err());
    }

    #[test]
    fn sort_mutually_nondominated_is_all_rank_one() {
        let members = ranked(&[[5.0, 0.0], [0.0, 5.0], [3.0, 3.0]]);
        assert!(members.iter().all(|m| m.rank() == Some(1)));
    }

    #[test]
    fn sort_total_chain_gets_increasing_ranks() {
        let members = ranked(&[[5.0, 5.0], [4.0, 4.0], [3.0, 3.0]]);
        let ranks: Vec<u32> = members.iter().map(|m| m.rank().unwrap()).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn duplicate_objectives_share_rank() {
        let members = ranked(&[[2.0, 2.0], [1.0, 1.0], [2.0, 2.0]]);
        assert_eq!(members[0].rank(), members[2].rank());
        assert_eq!(members[0].rank(), Some(1));
        assert_eq!(members[1].rank(), Some(2));
    }

    #[test]
    fn crowding_worked_example() {
        // Single rank {(1,5),(2,3),(4,1)}: interior member accumulates
        // (4-1) + (5-1) = 7, extremes are infinite.
        let members = ranked(&[[1.0, 5.0], [2.0, 3.0], [4.0, 1.0]]);
        assert_eq!(members[0].crowding(), Some(f64::INFINITY));
        assert_eq!(members[1].crowding(), Some(7.0));
        assert_eq!(members[2].crowding(), Some(f64::INFINITY));
    }

    #[test]
    fn crowding_boundary_rule_for_tiny_ranks() {
        let one = ranked(&[[1.0, 1.0]]);
        assert_eq!(one[0].crowding(), Some(f64::INFINITY));

        let two = ranked(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(two.iter().all(|m| m.crowding() == Some(f64::INFINITY)));
    }

    #[test]
    fn normalized_crowding_divides_by_range() {
        let mut members: Vec<Individual> = [[0.0, 6.0], [1.0, 3.0], [3.0, 0.0]]
            .iter()
            .map(|&o| individual(o))
            .collect();
        nondominated_sort(&mut members).unwrap();
        crowding_assign(&mut members, CrowdingMode::Normalized).unwrap();
        // f1 gap 3/3 + f2 gap 6/6 = 2.
        assert_eq!(members[1].crowding(), Some(2.0));
    }

    #[test]
    fn compare_follows_rank_then_crowding() {
        let mut rng = RandomSource::new(0);
        let members = ranked(&[[5.0, 5.0], [4.0, 4.0]]);
        assert_eq!(
            compare(&members[0], &members[1], &mut rng).unwrap(),
            Winner::First
        );
        assert_eq!(
            compare(&members[1], &members[0], &mut rng).unwrap(),
            Winner::Second
        );

        let members = ranked(&[[1.0, 5.0], [2.0, 3.0], [4.0, 1.0]]);
        // Infinity beats 7 at equal rank.
        assert_eq!(
            compare(&members[0], &members[1], &mut rng).unwrap(),
            Winner::First
        );
    }

    #[test]
    fn compare_errors_without_ranking() {
        let mut rng = RandomSource::new(0);
        let a = individual([1.0, 1.0]);
        let b = individual([2.0, 2.0]);
        assert!(compare(&a, &b, &mut rng).is_err());
    }

    #[test]
    fn compare_full_tie_is_a_fair_coin() {
        let mut rng = RandomSource::new(31);
        let members = ranked(&[[1.0, 2.0], [2.0, 1.0]]); // both rank 1, both infinite
        let mut first_wins = 0u32;
        for _ in 0..10_000 {
            if compare(&members[0], &members[1], &mut rng).unwrap() == Winner::First {
                first_wins += 1;
            }
        }
        let fraction = first_wins as f64 / 10_000.0;
        assert!(
            (0.45..=0.55).contains(&fraction),
            "tie-break fraction {fraction}"
        );
    }

    #[test]
    fn tournament_on_singleton_repeats_it() {
        let mut rng = RandomSource::new(5);
        let mut members = vec![individual([1.0, 1.0])];
        rank_and_crowd(&mut members).unwrap();
        let pop = Population::new(members, 1);
        let out = tournament_select(&pop, 7, &mut rng).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.iter().all(|m| m.objectives() == pop.members()[0].objectives()));
    }

    #[test]
    fn tournament_rejects_empty_population() {
        let mut rng = RandomSource::new(5);
        let pop = Population::new(vec![], 0);
        assert!(tournament_select(&pop, 3, &mut rng).is_err());
    }

    #[test]
    fn tournament_never_loses_to_higher_rank() {
        // One rank-1 point among rank-2 points: whenever it is sampled it
        // must win its tournament, so it can only be absent from the output
        // if it was never drawn.
        let mut rng = RandomSource::new(8);
        let mut members = vec![individual([9.0, 9.0])];
        for _ in 0..7 {
            members.push(individual([1.0, 1.0]));
        }
        rank_and_crowd(&mut members).unwrap();
        let pop = Population::new(members, 8);
        let out = tournament_select(&pop, 64, &mut rng).unwrap();
        // Expected appearances ~ 64 * (1 - (7/8)^2) ≈ 15; allow a wide band.
        let appearances = out
            .iter()
            .filter(|m| m.objectives().unwrap().values() == [9.0, 9.0])
            .count();
        assert!(appearances > 0);
    }

    #[test]
    fn tournament_reduces_mean_rank() {
        let mut worse_count = 0;
        for seed in 0..20u64 {
            let mut rng = RandomSource::new(1000 + seed);
            let mut members: Vec<Individual> = (0..40)
                .map(|_| {
                    individual([
                        rng.gen_range(0..10) as f64,
                        rng.gen_range(0..10) as f64,
                    ])
                })
                .collect();
            rank_and_crowd(&mut members).unwrap();
            let mean_in: f64 = members.iter().map(|m| m.rank().unwrap() as f64).sum::<f64>()
                / members.len() as f64;
            let pop = Population::new(members, 40);
            let out = tournament_select(&pop, 40, &mut rng).unwrap();
            let mean_out: f64 =
                out.iter().map(|m| m.rank().unwrap() as f64).sum::<f64>() / out.len() as f64;
            if mean_out > mean_in {
                worse_count += 1;
            }
        }
        // Selection intensity: the mean rank should essentially never rise.
        assert!(worse_count <= 1, "selection raised mean rank {worse_count}/20 times");
    }

    #[test]
    fn coverage_counting() {
        let problem = Problem::onemax_zeromax(5).unwrap();
        let front = problem.reference_front();

        let empty = Population::new(vec![], 0);
        assert_eq!(front_coverage(&empty, &front), (0, false));

        let mut members = vec![
            individual([5.0, 0.0]),
            individual([5.0, 0.0]),
            individual([0.0, 5.0]),
        ];
        // A point off the front must not count.
        members.push(individual([9.0, 9.0]));
        let pop = Population::new(members, 4);
        assert_eq!(front_coverage(&pop, &front), (2, false));

        let full: Vec<Individual> = (0..=5)
            .map(|i| individual([i as f64, (5 - i) as f64]))
            .collect();
        let pop = Population::new(full, 6);
        assert_eq!(front_coverage(&pop, &front), (6, true));
    }

    proptest! {
        #[test]
        fn dominance_is_antisymmetric_and_transitive(
            points in proptest::collection::vec((0..20i32, 0..20i32), 3)
        ) {
            let v: Vec<ObjectiveVector> = points
                .iter()
                .map(|&(a, b)| ObjectiveVector::from([a as f64, b as f64]))
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    if dominates(&v[i], &v[j]).unwrap() {
                        prop_assert!(!dominates(&v[j], &v[i]).unwrap());
                    }
                }
            }
            if dominates(&v[0], &v[1]).unwrap() && dominates(&v[1], &v[2]).unwrap() {
                prop_assert!(dominates(&v[0], &v[2]).unwrap());
            }
        }

        #[test]
        fn ranks_are_contiguous_and_consistent(
            points in proptest::collection::vec((0..12i32, 0..12i32), 1..40)
        ) {
            let mut members: Vec<Individual> = points
                .iter()
                .map(|&(a, b)| individual([a as f64, b as f64]))
                .collect();
            nondominated_sort(&mut members).unwrap();
            let max_rank = members.iter().map(|m| m.rank().unwrap()).max().unwrap();
            for r in 1..=max_rank {
                prop_assert!(members.iter().any(|m| m.rank() == Some(r)));
            }
            // No member is dominated by anyone of equal or higher rank,
            // and every rank > 1 member is dominated by some lower rank.
            for a in &members {
                for b in &members {
                    if dominates(
                        b.objectives().unwrap(),
                        a.objectives().unwrap(),
                    ).unwrap() {
                        prop_assert!(b.rank().unwrap() < a.rank().unwrap());
                    }
                }
            }
            for a in &members {
                if a.rank().unwrap() > 1 {
                    let dominated_from_below = members.iter().any(|b| {
                        b.rank().unwrap() < a.rank().unwrap()
                            && dominates(b.objectives().unwrap(), a.objectives().unwrap())
                                .unwrap()
                    });
                    prop_assert!(dominated_from_below);
                }
            }
        }

        #[test]
        fn extremes_carry_infinity(
            points in proptest::collection::vec((0..12i32, 0..12i32), 2..30)
        ) {
            let mut members: Vec<Individual> = points
                .iter()
                .map(|&(a, b)| individual([a as f64, b as f64]))
                .collect();
            rank_and_crowd(&mut members).unwrap();
            let max_rank = members.iter().map(|m| m.rank().unwrap()).max().unwrap();
            for r in 1..=max_rank {
                let group: Vec<&Individual> =
                    members.iter().filter(|m| m.rank() == Some(r)).collect();
                for m in 0..2 {
                    let hi = group
                        .iter()
                        .map(|i| i.objectives().unwrap().get(m))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let lo = group
                        .iter()
                        .map(|i| i.objectives().unwrap().get(m))
                        .fold(f64::INFINITY, f64::min);
                    prop_assert!(group
                        .iter()
                        .filter(|i| i.objectives().unwrap().get(m) == hi)
                        .any(|i| i.crowding() == Some(f64::INFINITY)));
                    prop_assert!(group
                        .iter()
                        .filter(|i| i.objectives().unwrap().get(m) == lo)
                        .any(|i| i.crowding() == Some(f64::INFINITY)));
                }
            }
        }
    }
}
