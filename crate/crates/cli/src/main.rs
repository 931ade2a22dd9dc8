//! `ptsa` — experiment harness for parallel-trial simulated annealing.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ptsa_cli::instance::load_instance;
use ptsa_cli::report::{
    self, ClassifyReport, LandscapeCliReport, PartialSum, StationaryReport, VerifyCheck,
    VerifyReport,
};
use ptsa_cli::run::{run_annealing, InitialState, RunConfig};
use ptsa_core::exact::{
    boltzmann_flow_report, build_transition_matrix_with_cap, gibbs_distribution,
    selection_weight_asymmetry, stationary_by_power_iteration, stationary_distribution,
    KernelKind, DEFAULT_MATRIX_VERTICES,
};
use ptsa_core::ising::{IsingInstance, SpinConfiguration};
use ptsa_core::landscape::{self, landscape_report, landscape_report_with_epsilon};
use ptsa_core::schedules::{divergence_class, escape_series_partial_sum, parse_schedule};

#[derive(Parser)]
#[command(
    name = "ptsa",
    version,
    about = "Parallel-trial simulated annealing toolkit: anneal Ising instances, \
             solve exact stationary distributions, analyze energy landscapes, \
             and classify cooling schedules."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    /// Admit every vertex independently, flip one admitted vertex.
    Parallel,
    /// Propose one uniform vertex per step.
    Metropolis,
}

impl From<KernelArg> for KernelKind {
    fn from(arg: KernelArg) -> Self {
        match arg {
            KernelArg::Parallel => KernelKind::ParallelTrial,
            KernelArg::Metropolis => KernelKind::Metropolis,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run multi-replica annealing and report ground-state visit statistics.
    Anneal {
        /// Instance file (see README for the format).
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Parallel)]
        kernel: KernelArg,
        /// Cooling schedule, e.g. "log:gamma=2,k0=9" or "geom:beta0=0.5,r=1.05".
        #[arg(long)]
        schedule: String,
        /// Kernel steps per replica.
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Master seed; replica seeds derive from it deterministically.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting state: all-up, all-down, random, or fixed:<+- string>.
        #[arg(long, default_value = "random")]
        init: String,
        /// Record statistics every this many steps (must divide --steps;
        /// default: only at the start and end).
        #[arg(long)]
        stride: Option<u64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the exact stationary distribution and compare it to Boltzmann.
    Stationary {
        #[arg(long)]
        instance: PathBuf,
        /// Inverse temperature (finite).
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = KernelArg::Parallel)]
        kernel: KernelArg,
        /// Cross-check the direct solve against damped power iteration.
        #[arg(long)]
        cross_check: bool,
        /// Vertex cap for the dense matrix (hard ceiling 13).
        #[arg(long, default_value_t = DEFAULT_MATRIX_VERTICES)]
        max_vertices: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate local minima, escape depths, and the trap depth gamma*.
    Landscape {
        #[arg(long)]
        instance: PathBuf,
        /// Tolerance for grouping float energy levels (ignored for
        /// integer-valued instances, which are analyzed exactly).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify whether a schedule's escape series diverges for a trap depth.
    Classify {
        /// Cooling schedule, e.g. "log:gamma=2,k0=9".
        #[arg(long)]
        schedule: String,
        /// Trap depth, given explicitly...
        #[arg(long)]
        gamma_star: Option<f64>,
        /// ...or computed from this instance's landscape.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Step counts at which to evaluate escape-series prefixes.
        #[arg(long, value_delimiter = ',')]
        partial_sums: Option<Vec<u64>>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run built-in exactness checks on an instance; exit 1 if any fail.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)
            .with_context(|| format!("cannot write report to {}", path.display()))?;
    }
    Ok(())
}

fn cmd_anneal(
    instance_path: &Path,
    kernel: KernelArg,
    schedule_text: &str,
    steps: u64,
    replicas: usize,
    seed: u64,
    init: &str,
    stride: Option<u64>,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<()> {
    let instance = load_instance(instance_path)
        .with_context(|| format!("cannot load instance {}", instance_path.display()))?;
    let schedule = parse_schedule(schedule_text)
        .with_context(|| format!("cannot parse schedule {schedule_text:?}"))?;
    let initial_state: InitialState = init
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))
        .with_context(|| format!("cannot parse initial state {init:?}"))?;
    let config = RunConfig {
        instance_label: instance_path.display().to_string(),
        kernel: kernel.into(),
        schedule,
        schedule_spec: schedule_text.to_string(),
        steps,
        replicas,
        master_seed: seed,
        initial_state,
        record_stride: stride.unwrap_or(steps),
    };
    let run = run_annealing(&instance, &config).context("annealing run rejected")?;
    let text = match format {
        FormatArg::Json => report::to_json(&run),
        FormatArg::Csv => report::run_report_csv(&run),
    };
    emit(&text, out)
}

fn cmd_stationary(
    instance_path: &Path,
    beta: f64,
    kernel: KernelArg,
    cross_check: bool,
    max_vertices: usize,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<()> {
    let instance = load_instance(instance_path)
        .with_context(|| format!("cannot load instance {}", instance_path.display()))?;
    if !(beta.is_finite() && beta >= 0.0) {
        bail!("stationary analysis needs a finite beta >= 0, got {beta}");
    }
    let kind: KernelKind = kernel.into();
    let matrix = build_transition_matrix_with_cap(&instance, beta, kind, max_vertices)?;
    let pi = stationary_distribution(&matrix)?;
    let gibbs = gibbs_distribution(&instance, beta)?;
    let scape = landscape_report(&instance)?;
    let mass = |dist: &ptsa_core::exact::StateDistribution| {
        scape
            .ground_states
            .iter()
            .map(|&r| dist.prob(r as usize))
            .sum::<f64>()
    };
    let power_iteration_l1 = if cross_check {
        let iterated = stationary_by_power_iteration(&matrix, 1_000_000, 1e-13)?;
        Some(pi.l1_distance(&iterated))
    } else {
        None
    };
    let rep = StationaryReport {
        instance: instance_path.display().to_string(),
        vertex_count: instance.vertex_count(),
        kernel: kind,
        beta,
        state_count: matrix.state_count(),
        l1_distance_to_gibbs: pi.l1_distance(&gibbs),
        stationary_ground_mass: mass(&pi),
        gibbs_ground_mass: mass(&gibbs),
        max_row_sum_error: matrix.max_row_sum_error(),
        power_iteration_l1,
        stationary: pi.as_slice().to_vec(),
        gibbs: gibbs.as_slice().to_vec(),
        ground_states: scape.ground_states,
    };
    let text = match format {
        FormatArg::Json => report::to_json(&rep),
        FormatArg::Csv => report::stationary_report_csv(&rep),
    };
    emit(&text, out)
}

fn cmd_landscape(
    instance_path: &Path,
    epsilon: Option<f64>,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<()> {
    let instance = load_instance(instance_path)
        .with_context(|| format!("cannot load instance {}", instance_path.display()))?;
    let rep = match epsilon {
        Some(eps) => landscape_report_with_epsilon(&instance, eps)?,
        None => landscape_report(&instance)?,
    };
    let n = instance.vertex_count();
    let cli_report = LandscapeCliReport {
        instance: instance_path.display().to_string(),
        ground_state_signs: rep
            .ground_states
            .iter()
            .map(|&rank| SpinConfiguration::from_rank(n, rank).to_string())
            .collect(),
        report: rep,
    };
    let text = match format {
        FormatArg::Json => report::to_json(&cli_report),
        FormatArg::Csv => report::landscape_report_csv(&cli_report),
    };
    emit(&text, out)
}

fn cmd_classify(
    schedule_text: &str,
    gamma_star: Option<f64>,
    instance_path: Option<&Path>,
    partial_sums: Option<Vec<u64>>,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<()> {
    let schedule = parse_schedule(schedule_text)
        .with_context(|| format!("cannot parse schedule {schedule_text:?}"))?;
    let (depth, source) = match (gamma_star, instance_path) {
        (Some(value), None) => {
            if !(value.is_finite() && value >= 0.0) {
                bail!("--gamma-star must be finite and >= 0, got {value}");
            }
            (value, "explicit")
        }
        (None, Some(path)) => {
            let instance = load_instance(path)
                .with_context(|| format!("cannot load instance {}", path.display()))?;
            (landscape::gamma_star(&instance)?, "instance")
        }
        _ => bail!("provide exactly one of --gamma-star or --instance"),
    };

    let mut ks = partial_sums.unwrap_or_else(|| vec![100, 10_000, 1_000_000]);
    if ks.iter().any(|&k| k == 0) {
        bail!("--partial-sums entries must be >= 1");
    }
    if let Some(len) = schedule.len() {
        // finite tables: evaluate prefixes no longer than the table
        for k in &mut ks {
            *k = (*k).min(len);
        }
    }
    ks.sort_unstable();
    ks.dedup();

    let rep = ClassifyReport {
        schedule: schedule_text.to_string(),
        gamma_star: depth,
        gamma_star_source: source.to_string(),
        behavior: divergence_class(&schedule, depth),
        partial_sums: ks
            .into_iter()
            .map(|k| PartialSum {
                k,
                sum: escape_series_partial_sum(&schedule, depth, k),
            })
            .collect(),
    };
    let text = match format {
        FormatArg::Json => report::to_json(&rep),
        FormatArg::Csv => report::classify_report_csv(&rep),
    };
    emit(&text, out)
}

fn verify_checks(instance: &IsingInstance, beta: f64) -> Result<Vec<VerifyCheck>> {
    let mut checks = Vec::new();
    let mut push = |name: &str, status: &str, detail: String| {
        checks.push(VerifyCheck {
            name: name.to_string(),
            status: status.to_string(),
            detail,
        });
    };

    let parallel =
        build_transition_matrix_with_cap(instance, beta, KernelKind::ParallelTrial, DEFAULT_MATRIX_VERTICES)?;
    let metropolis =
        build_transition_matrix_with_cap(instance, beta, KernelKind::Metropolis, DEFAULT_MATRIX_VERTICES)?;
    let gibbs = gibbs_distribution(instance, beta)?;
    let states = parallel.state_count();

    let row_err = parallel.max_row_sum_error().max(metropolis.max_row_sum_error());
    push(
        "row-sums",
        if row_err <= 1e-12 { "passed" } else { "failed" },
        format!("max |row sum - 1| = {row_err:e}"),
    );

    let flow = boltzmann_flow_report(instance, beta)?;
    push(
        "boltzmann-flow-identity",
        if flow.holds() { "passed" } else { "failed" },
        format!(
            "two evaluations of the net Boltzmann flow differ by {:e}",
            flow.max_abs_difference
        ),
    );

    let mut reversibility_err = 0.0f64;
    for i in 0..states {
        for j in 0..states {
            let forward = gibbs.prob(i) * metropolis.entry(i, j);
            let backward = gibbs.prob(j) * metropolis.entry(j, i);
            reversibility_err = reversibility_err.max((forward - backward).abs());
        }
    }
    push(
        "metropolis-reversibility",
        if reversibility_err <= 1e-12 { "passed" } else { "failed" },
        format!("max detailed-balance violation = {reversibility_err:e}"),
    );

    let mut dominance_ok = true;
    for i in 0..states {
        for j in 0..states {
            if i != j && parallel.entry(i, j) < metropolis.entry(i, j) - 1e-15 {
                dominance_ok = false;
            }
        }
    }
    push(
        "off-diagonal-dominance",
        if dominance_ok { "passed" } else { "failed" },
        "every parallel-trial move probability >= the single-proposal one".to_string(),
    );

    match stationary_distribution(&parallel) {
        Ok(pi) => {
            let stepped = parallel.left_apply(pi.as_slice());
            let residual: f64 = stepped
                .iter()
                .zip(pi.as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum();
            push(
                "stationary-residual",
                if residual <= 1e-12 { "passed" } else { "failed" },
                format!("L1 residual of the direct solve = {residual:e}"),
            );
            match stationary_by_power_iteration(&parallel, 1_000_000, 1e-13) {
                Ok(iterated) => {
                    let l1 = pi.l1_distance(&iterated);
                    push(
                        "power-iteration-agreement",
                        if l1 <= 1e-8 { "passed" } else { "failed" },
                        format!("L1 distance between solvers = {l1:e}"),
                    );
                }
                Err(e) => push("power-iteration-agreement", "failed", e.to_string()),
            }
            if instance.edges().is_empty() {
                let l1 = pi.l1_distance(&gibbs);
                push(
                    "field-only-gibbs-match",
                    if l1 <= 1e-10 { "passed" } else { "failed" },
                    format!("L1 distance to the Boltzmann distribution = {l1:e}"),
                );
            } else {
                push(
                    "field-only-gibbs-match",
                    "skipped",
                    "instance has couplings".to_string(),
                );
            }
        }
        Err(e) => push("stationary-residual", "failed", e.to_string()),
    }

    let zero_field = instance.fields().iter().all(|&h| h == 0.0);
    let nonneg = instance.edges().iter().all(|&(_, _, j)| j >= 0.0);
    if zero_field && nonneg && !instance.edges().is_empty() && beta > 0.0 {
        match selection_weight_asymmetry(instance, beta) {
            Ok(rep) => push(
                "selection-asymmetry",
                if rep.all_hold { "passed" } else { "failed" },
                "leaving the aligned ground state always outweighs returning".to_string(),
            ),
            Err(e) => push("selection-asymmetry", "failed", e.to_string()),
        }
    } else {
        push(
            "selection-asymmetry",
            "skipped",
            "requires a zero-field ferromagnet with couplings and beta > 0".to_string(),
        );
    }

    Ok(checks)
}

fn cmd_verify(
    instance_path: &Path,
    beta: f64,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<bool> {
    let instance = load_instance(instance_path)
        .with_context(|| format!("cannot load instance {}", instance_path.display()))?;
    if !(beta.is_finite() && beta >= 0.0) {
        bail!("verify needs a finite beta >= 0, got {beta}");
    }
    let checks = verify_checks(&instance, beta)?;
    let all_passed = checks.iter().all(|c| c.status != "failed");
    let rep = VerifyReport {
        instance: instance_path.display().to_string(),
        beta,
        checks,
        all_passed,
    };
    let text = match format {
        FormatArg::Json => report::to_json(&rep),
        FormatArg::Csv => report::verify_report_csv(&rep),
    };
    emit(&text, out)?;
    Ok(all_passed)
}

fn main() {
    let cli = Cli::parse();
    let result: Result<bool> = match cli.command {
        Command::Anneal {
            instance,
            kernel,
            schedule,
            steps,
            replicas,
            seed,
            init,
            stride,
            format,
            out,
        } => cmd_anneal(
            &instance,
            kernel,
            &schedule,
            steps,
            replicas,
            seed,
            &init,
            stride,
            format,
            out.as_deref(),
        )
        .map(|()| true),
        Command::Stationary {
            instance,
            beta,
            kernel,
            cross_check,
            max_vertices,
            format,
            out,
        } => cmd_stationary(
            &instance,
            beta,
            kernel,
            cross_check,
            max_vertices,
            format,
            out.as_deref(),
        )
        .map(|()| true),
        Command::Landscape {
            instance,
            epsilon,
            format,
            out,
        } => cmd_landscape(&instance, epsilon, format, out.as_deref()).map(|()| true),
        Command::Classify {
            schedule,
            gamma_star,
            instance,
            partial_sums,
            format,
            out,
        } => cmd_classify(
            &schedule,
            gamma_star,
            instance.as_deref(),
            partial_sums,
            format,
            out.as_deref(),
        )
        .map(|()| true),
        Command::Verify {
            instance,
            beta,
            format,
            out,
        } => cmd_verify(&instance, beta, format, out.as_deref()),
    };
    match result {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
