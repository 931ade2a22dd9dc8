//! Serializable report types for every subcommand, plus JSON and CSV
//! rendering.
//!
//! Reports are deterministic byte-for-byte for a fixed configuration and
//! build: struct fields serialize in declaration order, collections are
//! sorted, and no timestamps or host information are included.

use ptsa_core::exact::KernelKind;
use ptsa_core::landscape::LandscapeReport;
use ptsa_core::schedules::SeriesBehavior;
use serde::Serialize;

// ---------------------------------------------------------------------------
// Annealing runs
// ---------------------------------------------------------------------------

/// Distribution summary of per-replica best-so-far energies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Aggregate replica statistics at one record step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    /// Fraction of replicas that have visited a ground state by this step;
    /// `None` when the ground-state set is unknown (instance too large).
    pub p_hat: Option<f64>,
    /// Binomial standard error of `p_hat`.
    pub p_hat_se: Option<f64>,
    /// Mean current energy across replicas.
    pub mean_energy: f64,
    /// Summary of best-so-far energies across replicas.
    pub best: BestSummary,
}

/// End-of-run aggregates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalSummary {
    /// Fraction of replicas that visited a ground state at least once.
    pub p_hat: Option<f64>,
    pub p_hat_se: Option<f64>,
    /// Fraction of replicas whose final configuration is not a ground state.
    pub non_ground_final_fraction: Option<f64>,
    pub mean_final_energy: f64,
}

/// Full annealing-run report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub vertex_count: usize,
    pub kernel: KernelKind,
    pub schedule: String,
    pub steps: u64,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial_state: String,
    pub record_stride: u64,
    /// Ground-state energy when the instance is small enough to analyze.
    pub ground_energy: Option<f64>,
    /// All ground-state ranks, ascending, when known.
    pub ground_states: Option<Vec<u64>>,
    pub records: Vec<StepRecord>,
    pub final_summary: FinalSummary,
    /// `(rank, count)` pairs of final configurations (small instances only).
    pub final_state_counts: Option<Vec<(u64, u64)>>,
}

// ---------------------------------------------------------------------------
// Other subcommands
// ---------------------------------------------------------------------------

/// Exact stationary analysis of one instance at one temperature.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport {
    pub instance: String,
    pub vertex_count: usize,
    pub kernel: KernelKind,
    pub beta: f64,
    pub state_count: usize,
    /// Stationary probability per configuration rank.
    pub stationary: Vec<f64>,
    /// Boltzmann probability per configuration rank.
    pub gibbs: Vec<f64>,
    pub l1_distance_to_gibbs: f64,
    pub ground_states: Vec<u64>,
    pub stationary_ground_mass: f64,
    pub gibbs_ground_mass: f64,
    pub max_row_sum_error: f64,
    /// L1 distance between the direct solve and damped power iteration,
    /// present when the cross-check was requested.
    pub power_iteration_l1: Option<f64>,
}

/// Landscape analysis with the instance label attached.
#[derive(Clone, Debug, Serialize)]
pub struct LandscapeCliReport {
    pub instance: String,
    /// Sign strings of the ground states, aligned with
    /// `report.ground_states`.
    pub ground_state_signs: Vec<String>,
    pub report: LandscapeReport,
}

/// One prefix of the escape series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSum {
    pub k: u64,
    pub sum: f64,
}

/// Schedule classification against a trap depth.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub schedule: String,
    pub gamma_star: f64,
    /// Where `gamma_star` came from: `"instance"` or `"explicit"`.
    pub gamma_star_source: String,
    /// Whether `Σ exp(-γ*·β_k)` diverges (schedule keeps escaping traps).
    pub behavior: SeriesBehavior,
    pub partial_sums: Vec<PartialSum>,
}

/// Outcome of one self-check in `verify`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    /// `"passed"`, `"failed"`, or `"skipped"`.
    pub status: String,
    pub detail: String,
}

/// Built-in identity checks for one instance at one temperature.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub instance: String,
    pub beta: f64,
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Canonical JSON rendering (pretty, trailing newline).
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports are serializable");
    text.push('\n');
    text
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn opt_f64(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV of the per-step records of an annealing run.
pub fn run_report_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "step,p_hat,p_hat_se,mean_energy,best_min,best_q25,best_median,best_q75,best_max,best_mean\n",
    );
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            opt_f64(r.p_hat),
            opt_f64(r.p_hat_se),
            r.mean_energy,
            r.best.min,
            r.best.q25,
            r.best.median,
            r.best.q75,
            r.best.max,
            r.best.mean,
        ));
    }
    out
}

/// CSV of per-state stationary and Boltzmann probabilities.
pub fn stationary_report_csv(report: &StationaryReport) -> String {
    let mut out = String::from("rank,stationary,gibbs\n");
    for rank in 0..report.state_count {
        out.push_str(&format!(
            "{},{},{}\n",
            rank, report.stationary[rank], report.gibbs[rank]
        ));
    }
    out
}

/// CSV of the local minima of a landscape report.
pub fn landscape_report_csv(report: &LandscapeCliReport) -> String {
    let mut out = String::from("rank,energy,depth\n");
    for m in &report.report.local_minima {
        out.push_str(&format!(
            "{},{},{}\n",
            m.rank,
            m.energy,
            opt_f64(m.depth)
        ));
    }
    out
}

/// CSV of escape-series partial sums.
pub fn classify_report_csv(report: &ClassifyReport) -> String {
    let mut out = String::from("k,partial_sum\n");
    for p in &report.partial_sums {
        out.push_str(&format!("{},{}\n", p.k, p.sum));
    }
    out
}

/// CSV of verify-check outcomes.
pub fn verify_report_csv(report: &VerifyReport) -> String {
    let mut out = String::from("name,status,detail\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(&c.name),
            c.status,
            csv_field(&c.detail)
        ));
    }
    out
}
