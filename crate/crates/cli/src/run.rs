//! Multi-replica annealing runs.
//!
//! Each replica is an independent Markov chain with its own deterministic
//! random stream, derived from the master seed and the replica index.
//! Replicas run in parallel but are aggregated in index order, so a run's
//! report depends only on its configuration — never on thread scheduling.

use ptsa_core::exact::KernelKind;
use ptsa_core::ising::{CavityCache, IsingInstance, SpinConfiguration};
use ptsa_core::kernels::{derive_replica_seed, metropolis_step, parallel_trial_step, replica_rng};
use ptsa_core::landscape::{landscape_report, MAX_LANDSCAPE_VERTICES};
use ptsa_core::schedules::{CoolingSchedule, ScheduleError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::report::{BestSummary, FinalSummary, RunReport, StepRecord};

/// Largest instance for which the run tracks configuration ranks (ground-
/// state hits and final-state counts need them).
pub const MAX_RANK_TRACKING_VERTICES: usize = 64;
/// Largest instance for which the report includes per-state final counts.
pub const MAX_HISTOGRAM_VERTICES: usize = 12;

/// How each replica's starting configuration is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// Every spin up.
    AllUp,
    /// Every spin down.
    AllDown,
    /// Uniformly random, drawn from the replica's own stream (the first
    /// `n` draws) so runs stay reproducible.
    UniformRandom,
    /// Every replica starts at this exact configuration.
    Fixed(SpinConfiguration),
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialState::AllUp => write!(f, "all-up"),
            InitialState::AllDown => write!(f, "all-down"),
            InitialState::UniformRandom => write!(f, "random"),
            InitialState::Fixed(sigma) => write!(f, "fixed:{sigma}"),
        }
    }
}

impl Serialize for InitialState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl std::str::FromStr for InitialState {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "all-up" => Ok(InitialState::AllUp),
            "all-down" => Ok(InitialState::AllDown),
            "random" => Ok(InitialState::UniformRandom),
            _ => {
                let signs = text.strip_prefix("fixed:").ok_or_else(|| {
                    format!(
                        "unknown initial state {text:?} (expected all-up, all-down, random, or fixed:<+->)"
                    )
                })?;
                let spins: Result<Vec<i8>, String> = signs
                    .chars()
                    .map(|c| match c {
                        '+' => Ok(1i8),
                        '-' => Ok(-1i8),
                        other => Err(format!("bad spin character {other:?} (expected + or -)")),
                    })
                    .collect();
                let sigma = SpinConfiguration::from_signs(&spins?)
                    .map_err(|e| format!("bad fixed state: {e}"))?;
                Ok(InitialState::Fixed(sigma))
            }
        }
    }
}

/// Full description of one annealing run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Label echoed into the report (usually the instance file path).
    pub instance_label: String,
    pub kernel: KernelKind,
    pub schedule: CoolingSchedule,
    /// The schedule's text form, echoed into the report.
    pub schedule_spec: String,
    /// Number of kernel steps per replica.
    pub steps: u64,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial_state: InitialState,
    /// Statistics are recorded at step 0 and every `record_stride` steps;
    /// must divide `steps`.
    pub record_stride: u64,
}

/// Errors from run configuration or execution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("steps must be at least 1")]
    ZeroSteps,
    #[error("replicas must be at least 1")]
    ZeroReplicas,
    #[error("record stride {stride} must be >= 1 and divide the step count {steps}")]
    BadStride { steps: u64, stride: u64 },
    #[error("schedule table has {len} entries but the run takes {steps} steps")]
    ScheduleTooShort { len: u64, steps: u64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("fixed initial state has {got} spins, instance has {expected}")]
    InitialStateLength { got: usize, expected: usize },
}

fn validate(instance: &IsingInstance, config: &RunConfig) -> Result<(), RunError> {
    if config.steps == 0 {
        return Err(RunError::ZeroSteps);
    }
    if config.replicas == 0 {
        return Err(RunError::ZeroReplicas);
    }
    if config.record_stride == 0 || config.steps % config.record_stride != 0 {
        return Err(RunError::BadStride {
            steps: config.steps,
            stride: config.record_stride,
        });
    }
    config.schedule.validate()?;
    if let Some(len) = config.schedule.len() {
        if len < config.steps {
            return Err(RunError::ScheduleTooShort {
                len,
                steps: config.steps,
            });
        }
    }
    if let InitialState::Fixed(sigma) = &config.initial_state {
        if sigma.len() != instance.vertex_count() {
            return Err(RunError::InitialStateLength {
                got: sigma.len(),
                expected: instance.vertex_count(),
            });
        }
    }
    Ok(())
}

struct ReplicaOutcome {
    /// First step (0 = before stepping) at which the replica sat in a ground
    /// state; `None` if it never did or ground states are unknown.
    first_ground_step: Option<u64>,
    /// Energy at each record point.
    current_energy: Vec<f64>,
    /// Best energy seen so far, at each record point.
    best_energy: Vec<f64>,
    final_rank: Option<u64>,
    final_energy: f64,
}

fn run_replica(
    instance: &IsingInstance,
    config: &RunConfig,
    ground_states: Option<&[u64]>,
    index: u64,
) -> ReplicaOutcome {
    let n = instance.vertex_count();
    let track_rank = n <= MAX_RANK_TRACKING_VERTICES;
    let mut rng = replica_rng(derive_replica_seed(config.master_seed, index));
    let mut sigma = match &config.initial_state {
        InitialState::AllUp => SpinConfiguration::all_up(n),
        InitialState::AllDown => SpinConfiguration::all_down(n),
        InitialState::UniformRandom => SpinConfiguration::random(n, &mut rng),
        InitialState::Fixed(start) => start.clone(),
    };
    let mut cache = CavityCache::new(instance, &sigma);
    let mut energy = instance.energy(&sigma);
    let mut best = energy;

    let in_ground = |sigma: &SpinConfiguration| -> bool {
        match ground_states {
            Some(set) if track_rank => set.binary_search(&sigma.rank()).is_ok(),
            _ => false,
        }
    };
    let mut first_ground_step = if in_ground(&sigma) { Some(0) } else { None };

    let record_count = (config.steps / config.record_stride + 1) as usize;
    let mut current_energy = Vec::with_capacity(record_count);
    let mut best_energy = Vec::with_capacity(record_count);
    current_energy.push(energy);
    best_energy.push(best);

    for k in 1..=config.steps {
        let beta = config.schedule.beta_at(k);
        let outcome = match config.kernel {
            KernelKind::ParallelTrial => {
                parallel_trial_step(instance, &mut sigma, &mut cache, beta, &mut rng)
            }
            KernelKind::Metropolis => {
                metropolis_step(instance, &mut sigma, &mut cache, beta, &mut rng)
            }
        };
        if let Some(x) = outcome.flipped {
            // the post-flip cost of re-flipping x is exactly the negated
            // pre-flip cost, so this keeps the running energy in sync
            energy -= cache.energy_cost(&sigma, x);
            if energy < best {
                best = energy;
            }
            if first_ground_step.is_none() && in_ground(&sigma) {
                first_ground_step = Some(k);
            }
        }
        if k % config.record_stride == 0 {
            current_energy.push(energy);
            best_energy.push(best);
        }
    }

    ReplicaOutcome {
        first_ground_step,
        current_energy,
        best_energy,
        final_rank: track_rank.then(|| sigma.rank()),
        final_energy: energy,
    }
}

fn proportion_se(p: f64, m: usize) -> f64 {
    (p * (1.0 - p) / m as f64).sqrt()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs `config.replicas` independent annealing chains and aggregates them
/// into a [`RunReport`].  Deterministic for a fixed configuration.
///
/// # Errors
///
/// Fails on invalid configuration (see [`RunError`]); execution itself does
/// not fail.
pub fn run_annealing(instance: &IsingInstance, config: &RunConfig) -> Result<RunReport, RunError> {
    validate(instance, config)?;
    let n = instance.vertex_count();

    let ground = if n <= MAX_LANDSCAPE_VERTICES {
        landscape_report(instance)
            .ok()
            .map(|r| (r.ground_energy, r.ground_states))
    } else {
        None
    };
    let ground_ranks = ground.as_ref().map(|(_, ranks)| ranks.as_slice());

    let outcomes: Vec<ReplicaOutcome> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|index| run_replica(instance, config, ground_ranks, index))
        .collect();

    let replicas = config.replicas;
    let know_ground = ground.is_some() && n <= MAX_RANK_TRACKING_VERTICES;
    let record_count = (config.steps / config.record_stride + 1) as usize;
    let mut records = Vec::with_capacity(record_count);
    for r in 0..record_count {
        let step = r as u64 * config.record_stride;
        let p_hat = know_ground.then(|| {
            outcomes
                .iter()
                .filter(|o| o.first_ground_step.is_some_and(|s| s <= step))
                .count() as f64
                / replicas as f64
        });
        let current: Vec<f64> = outcomes.iter().map(|o| o.current_energy[r]).collect();
        let mut best: Vec<f64> = outcomes.iter().map(|o| o.best_energy[r]).collect();
        best.sort_unstable_by(f64::total_cmp);
        records.push(StepRecord {
            step,
            p_hat,
            p_hat_se: p_hat.map(|p| proportion_se(p, replicas)),
            mean_energy: mean(&current),
            best: BestSummary {
                min: best[0],
                q25: quantile(&best, 0.25),
                median: quantile(&best, 0.5),
                q75: quantile(&best, 0.75),
                max: *best.last().expect("at least one replica"),
                mean: mean(&best),
            },
        });
    }

    let final_p_hat = records.last().expect("at least one record").p_hat;
    let non_ground_final_fraction = know_ground.then(|| {
        let ranks = ground_ranks.expect("ground set known");
        outcomes
            .iter()
            .filter(|o| {
                o.final_rank
                    .is_none_or(|rank| ranks.binary_search(&rank).is_err())
            })
            .count() as f64
            / replicas as f64
    });
    let final_energies: Vec<f64> = outcomes.iter().map(|o| o.final_energy).collect();

    let final_state_counts = (n <= MAX_HISTOGRAM_VERTICES).then(|| {
        let mut counts = vec![0u64; 1usize << n];
        for o in &outcomes {
            counts[o.final_rank.expect("small instance tracks ranks") as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(rank, c)| (rank as u64, c))
            .collect::<Vec<(u64, u64)>>()
    });

    Ok(RunReport {
        instance: config.instance_label.clone(),
        vertex_count: n,
        kernel: config.kernel,
        schedule: config.schedule_spec.clone(),
        steps: config.steps,
        replicas,
        master_seed: config.master_seed,
        initial_state: config.initial_state.to_string(),
        record_stride: config.record_stride,
        ground_energy: ground.as_ref().map(|(e, _)| *e),
        ground_states: ground.map(|(_, ranks)| ranks),
        records,
        final_summary: FinalSummary {
            p_hat: final_p_hat,
            p_hat_se: final_p_hat.map(|p| proportion_se(p, replicas)),
            non_ground_final_fraction,
            mean_final_energy: mean(&final_energies),
        },
        final_state_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptsa_core::schedules::parse_schedule;

    fn double_well() -> IsingInstance {
        IsingInstance::new(
            4,
            &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, -2.0)],
            &[1.0, 0.0, 0.0, 0.0],
        )
        .unwrap()
    }

    fn base_config() -> RunConfig {
        RunConfig {
            instance_label: "test".to_string(),
            kernel: KernelKind::ParallelTrial,
            schedule: parse_schedule("const:beta=1").unwrap(),
            schedule_spec: "const:beta=1".to_string(),
            steps: 400,
            replicas: 32,
            master_seed: 7,
            initial_state: InitialState::UniformRandom,
            record_stride: 100,
        }
    }

    #[test]
    fn initial_state_strings_round_trip() {
        for text in ["all-up", "all-down", "random", "fixed:+--+"] {
            let parsed: InitialState = text.parse().unwrap();
            assert_eq!(parsed.to_string(), text);
        }
        assert!("fixed:+x-".parse::<InitialState>().is_err());
        assert!("warm".parse::<InitialState>().is_err());
        assert_eq!(
            "fixed:---+".parse::<InitialState>().unwrap(),
            InitialState::Fixed(SpinConfiguration::from_rank(4, 8))
        );
    }

    #[test]
    fn config_validation_rejects_bad_runs() {
        let instance = double_well();
        let mut config = base_config();
        config.steps = 0;
        assert_eq!(run_annealing(&instance, &config).unwrap_err(), RunError::ZeroSteps);

        let mut config = base_config();
        config.replicas = 0;
        assert_eq!(run_annealing(&instance, &config).unwrap_err(), RunError::ZeroReplicas);

        let mut config = base_config();
        config.record_stride = 7;
        assert!(matches!(
            run_annealing(&instance, &config).unwrap_err(),
            RunError::BadStride { .. }
        ));

        let mut config = base_config();
        config.schedule = CoolingSchedule::Custom { betas: vec![1.0; 10] };
        assert!(matches!(
            run_annealing(&instance, &config).unwrap_err(),
            RunError::ScheduleTooShort { len: 10, steps: 400 }
        ));

        let mut config = base_config();
        config.schedule = CoolingSchedule::Geometric { beta0: 0.5, ratio: 0.9 };
        assert!(matches!(
            run_annealing(&instance, &config).unwrap_err(),
            RunError::Schedule(_)
        ));

        let mut config = base_config();
        config.initial_state = InitialState::Fixed(SpinConfiguration::all_up(3));
        assert!(matches!(
            run_annealing(&instance, &config).unwrap_err(),
            RunError::InitialStateLength { got: 3, expected: 4 }
        ));
    }

    #[test]
    fn reports_are_identical_across_runs_and_thread_pools() {
        let instance = double_well();
        let config = base_config();
        let a = run_annealing(&instance, &config).unwrap();
        let b = run_annealing(&instance, &config).unwrap();
        let json_a = serde_json::to_string(&a).unwrap();
        let json_b = serde_json::to_string(&b).unwrap();
        assert_eq!(json_a, json_b);

        // single-threaded pool must produce the same bytes
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_annealing(&instance, &config).unwrap());
        assert_eq!(json_a, serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn recorded_energies_stay_consistent_with_direct_evaluation() {
        // the incremental energy bookkeeping agrees with full evaluation on
        // an exact-integer instance
        let instance = double_well();
        let mut config = base_config();
        config.steps = 1000;
        config.record_stride = 1000;
        config.replicas = 64;
        let report = run_annealing(&instance, &config).unwrap();

        // every replica's final energy must be one of the 16 exact values
        let valid = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];
        let last = report.records.last().unwrap();
        assert!(valid.contains(&last.best.min));
        assert!(report
            .final_state_counts
            .as_ref()
            .unwrap()
            .iter()
            .map(|&(_, c)| c)
            .sum::<u64>() == 64);

        // best-so-far can never rise
        for o in report.records.windows(2) {
            assert!(o[1].best.min <= o[0].best.min + 1e-12);
            assert!(o[1].best.mean <= o[0].best.mean + 1e-12);
        }
        // p_hat is monotone nondecreasing (visited-by-step semantics)
        for o in report.records.windows(2) {
            assert!(o[1].p_hat.unwrap() >= o[0].p_hat.unwrap());
        }
    }

    #[test]
    fn fixed_start_at_the_trap_reports_step_zero_correctly() {
        let instance = double_well();
        let mut config = base_config();
        config.initial_state = "fixed:---+".parse().unwrap();
        config.schedule = parse_schedule("const:beta=inf").unwrap();
        config.schedule_spec = "const:beta=inf".to_string();
        config.steps = 100;
        config.record_stride = 100;
        let report = run_annealing(&instance, &config).unwrap();
        // frozen at the strict local minimum: never reaches ground
        assert_eq!(report.records[0].p_hat, Some(0.0));
        assert_eq!(report.final_summary.p_hat, Some(0.0));
        assert_eq!(report.final_summary.non_ground_final_fraction, Some(1.0));
        assert_eq!(report.final_state_counts, Some(vec![(8, 32)]));
        assert_eq!(report.ground_states, Some(vec![7]));
        assert_eq!(report.ground_energy, Some(-7.0));

        // ...while starting at ground reports an immediate visit
        config.initial_state = "fixed:+++-".parse().unwrap();
        let report = run_annealing(&instance, &config).unwrap();
        assert_eq!(report.records[0].p_hat, Some(1.0));
        assert_eq!(report.final_summary.non_ground_final_fraction, Some(0.0));
    }
}
