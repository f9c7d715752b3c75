use std::time::Instant;

use mohboa::engine::{AlgorithmConfig, ClusteringMode, OperatorKind};
use mohboa::harness::{bisect_population, seeds_for, success_criterion, BisectionSettings};
use mohboa::problems::{PartitionMode, Problem};
use mohboa::replacement::{ReplacementConfig, RtrMetric};
use mohboa::rng::RandomSource;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "onemax-rtr" => bisect(onemax_cfg(50, OperatorKind::Umda, "rtr"), 3),
        "onemax-rtr-full" => bisect(onemax_cfg(50, OperatorKind::Umda, "rtr"), 10),
        "onemax-elitist" => bisect(onemax_cfg(50, OperatorKind::Umda, "elitist"), 3),
        "onemax-rtr-obj" => bisect(onemax_cfg(50, OperatorKind::Umda, "rtr-objective"), 3),
        "onemax-25" => bisect(onemax_cfg(25, OperatorKind::Umda, "rtr"), 3),
        "onemax-off" => {
            let mut cfg = onemax_cfg(50, OperatorKind::Umda, "elitist");
            cfg.clustering = ClusteringMode::Off;
            bisect(cfg, 1);
        }
        "trap-hboa" => bisect(trap_cfg(30, OperatorKind::Hboa), 3),
        "trap-hboa-full" => bisect(trap_cfg(30, OperatorKind::Hboa), 10),
        "trap-umda" => {
            let n_at = std::env::args()
                .nth(2)
                .and_then(|s| s.parse::<usize>().ok())
                .unwrap_or(2000);
            let cfg = trap_cfg(30, OperatorKind::Umda);
            let t = Instant::now();
            let seeds = seeds_for(&cfg, 0, 10);
            let ok = success_criterion(&cfg, n_at, &seeds).unwrap();
            println!("umda trap30 at N={n_at}: success={ok} ({:?})", t.elapsed());
        }
        "single" => {
            let pop = std::env::args()
                .nth(2)
                .and_then(|s| s.parse::<usize>().ok())
                .unwrap_or(512);
            let cfg = onemax_cfg(50, OperatorKind::Umda, "rtr");
            let t = Instant::now();
            let r = mohboa::engine::run(&cfg.with_population(pop), 42).unwrap();
            println!(
                "single onemax50 rtr N={pop}: success={} gens={} evals={} cov={}/{} ({:?})",
                r.success,
                r.generations_used,
                r.evaluations_used,
                r.final_front_coverage,
                r.front_size,
                t.elapsed()
            );
        }
        other => eprintln!("unknown probe {other:?}"),
    }
}

fn onemax_cfg(n: usize, op: OperatorKind, replacement: &str) -> AlgorithmConfig {
    let mut cfg = AlgorithmConfig::new(Problem::onemax_zeromax(n).unwrap(), op, 0);
    cfg.replacement = match replacement {
        "elitist" => ReplacementConfig::elitist(),
        "rtr" => ReplacementConfig::rtr(RtrMetric::Hamming),
        "rtr-objective" => ReplacementConfig::rtr(RtrMetric::EuclideanObjective),
        _ => unreachable!(),
    };
    cfg
}

fn trap_cfg(n: usize, op: OperatorKind) -> AlgorithmConfig {
    let mut rng = RandomSource::new(7);
    let problem = Problem::trap5_invtrap5(n, PartitionMode::Contiguous, &mut rng).unwrap();
    AlgorithmConfig::new(problem, op, 0)
}

fn bisect(cfg: AlgorithmConfig, reps: usize) {
    let settings = BisectionSettings {
        repetitions: reps,
        ..BisectionSettings::default()
    };
    let t = Instant::now();
    let result = bisect_population(&cfg, &settings).unwrap();
    println!("{} n={} {}: {:?} ({:?})", result.problem, result.n, cfg.variant_id(), summary(&result), t.elapsed());
}

fn summary(r: &mohboa::harness::BisectionResult) -> String {
    match &r.outcome {
        mohboa::harness::BisectionOutcome::Found {
            min_pop,
            rep_minima,
            mean_evals,
            evaluations,
            ..
        } => format!(
            "min_pop={min_pop} reps={rep_minima:?} mean_evals={mean_evals:.0} over {} runs",
            evaluations.len()
        ),
        mohboa::harness::BisectionOutcome::Failed {
            last_failing_pop,
            evaluations_spent,
        } => format!("FAILED last_failing={last_failing_pop:?} spent={evaluations_spent}"),
    }
}
