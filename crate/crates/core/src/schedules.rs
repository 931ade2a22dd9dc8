//! Cooling schedules `k ↦ β_k` and the divergence test that decides whether
//! a schedule cools slowly enough to keep visiting ground states.
//!
//! For a landscape whose deepest non-ground local minimum has depth `γ*`,
//! an annealing chain escapes every trap infinitely often exactly when
//!
//! ```text
//! Σ_{k≥1} exp(-γ*·β_k) = ∞
//! ```
//!
//! Schedules that grow like `β_k = ln(k + k₀)/γ` sit on the boundary: the
//! series diverges iff `γ ≥ γ*`.  Geometric or linear growth always makes
//! the series converge (when `γ* > 0`), so such schedules can freeze into a
//! suboptimal minimum with positive probability.  [`divergence_class`]
//! encodes this case analysis and [`escape_series_partial_sum`] evaluates
//! finite prefixes of the series for numerical illustration.
//!
//! Steps are 1-indexed: a run of `K` steps uses `β_1, …, β_K`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from schedule construction, parsing, or evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    /// The schedule family keyword was not recognized.
    #[error("unknown schedule family {family:?} (expected const, log, geom, linear, or table)")]
    UnknownFamily { family: String },
    /// A required parameter was missing from the schedule text.
    #[error("schedule family {family:?} is missing parameter {name:?}")]
    MissingParameter { family: &'static str, name: &'static str },
    /// A parameter key was not recognized for this family.
    #[error("schedule family {family:?} does not take parameter {name:?}")]
    UnknownParameter { family: &'static str, name: String },
    /// A parameter was given twice.
    #[error("parameter {name:?} appears more than once")]
    DuplicateParameter { name: String },
    /// A parameter value failed to parse as a number.
    #[error("parameter {name:?} has unparsable value {text:?}")]
    InvalidNumber { name: String, text: String },
    /// A structurally valid schedule has out-of-range parameters.
    #[error("invalid schedule: {reason}")]
    InvalidParameter { reason: String },
    /// A schedule table file could not be read.
    #[error("cannot read schedule table {path:?}: {message}")]
    TableIo { path: String, message: String },
    /// A schedule table file line could not be parsed.
    #[error("schedule table {path:?} line {line}: unparsable value {text:?}")]
    TableParse { path: String, line: usize, text: String },
    /// A schedule table contained no values.
    #[error("schedule table is empty")]
    EmptyTable,
    /// A step index was zero or beyond the end of a finite table.
    #[error("step {step} is outside the schedule domain (valid: 1..={limit})")]
    StepOutOfRange { step: u64, limit: u64 },
}

/// Whether the escape series `Σ exp(-γ*·β_k)` diverges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesBehavior {
    /// The series diverges: the chain leaves every non-ground minimum
    /// infinitely often.
    Diverges,
    /// The series converges: the chain can freeze into a trap forever.
    Converges,
    /// No closed form applies (finite explicit tables).
    Unknown,
}

/// A deterministic cooling schedule `k ↦ β_k`, `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoolingSchedule {
    /// `β_k = β` for all `k`.
    Constant { beta: f64 },
    /// `β_k = ln(k + k0) / gamma` — the boundary family for trap escape.
    Logarithmic { gamma: f64, k0: u64 },
    /// `β_k = beta0 · ratio^(k-1)`.
    Geometric { beta0: f64, ratio: f64 },
    /// `β_k = beta0 + slope·(k-1)`.
    Linear { beta0: f64, slope: f64 },
    /// An explicit table; `β_k = betas[k-1]`.
    Custom { betas: Vec<f64> },
}

/// `exp(-gamma_star·beta)` with the conventions `gamma_star = 0 ⇒ 1` and
/// `beta = +∞ ⇒ 0`, avoiding the indeterminate `∞·0` product.
fn escape_term(gamma_star: f64, beta: f64) -> f64 {
    if gamma_star <= 0.0 {
        1.0
    } else if beta.is_infinite() {
        0.0
    } else {
        (-gamma_star * beta).exp()
    }
}

impl CoolingSchedule {
    /// The inverse temperature for 1-indexed step `k`.
    ///
    /// Total over every valid domain point — even for parameter values that
    /// [`validate`](Self::validate) rejects for annealing use — so callers
    /// can inspect arbitrary schedules.  Geometric schedules may overflow to
    /// `+∞` for enormous `k`; that is a representable quench, not an error.
    ///
    /// # Errors
    ///
    /// [`ScheduleError::StepOutOfRange`] when `k = 0`, or when `k` is past
    /// the end of a `Custom` table.
    pub fn try_beta_at(&self, k: u64) -> Result<f64, ScheduleError> {
        if k == 0 {
            return Err(ScheduleError::StepOutOfRange {
                step: 0,
                limit: self.len().unwrap_or(u64::MAX),
            });
        }
        match self {
            CoolingSchedule::Constant { beta } => Ok(*beta),
            CoolingSchedule::Logarithmic { gamma, k0 } => {
                Ok(((k + k0) as f64).ln() / gamma)
            }
            CoolingSchedule::Geometric { beta0, ratio } => {
                Ok(beta0 * ratio.powi((k - 1).min(i32::MAX as u64) as i32))
            }
            CoolingSchedule::Linear { beta0, slope } => Ok(beta0 + slope * (k - 1) as f64),
            CoolingSchedule::Custom { betas } => {
                betas
                    .get((k - 1) as usize)
                    .copied()
                    .ok_or(ScheduleError::StepOutOfRange {
                        step: k,
                        limit: betas.len() as u64,
                    })
            }
        }
    }

    /// The inverse temperature for 1-indexed step `k`.
    ///
    /// # Panics
    ///
    /// Panics where [`try_beta_at`](Self::try_beta_at) errors.
    pub fn beta_at(&self, k: u64) -> f64 {
        self.try_beta_at(k)
            .unwrap_or_else(|e| panic!("beta_at({k}): {e}"))
    }

    /// The number of defined steps: `Some(len)` for `Custom`, `None` for the
    /// unbounded families.
    pub fn len(&self) -> Option<u64> {
        match self {
            CoolingSchedule::Custom { betas } => Some(betas.len() as u64),
            _ => None,
        }
    }

    /// Checks the schedule is usable for annealing: parameters finite and in
    /// range, and every defined `β_k ≥ 0`.
    ///
    /// # Errors
    ///
    /// [`ScheduleError::InvalidParameter`] (or [`ScheduleError::EmptyTable`])
    /// describing the first violation found.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |reason: String| Err(ScheduleError::InvalidParameter { reason });
        match self {
            CoolingSchedule::Constant { beta } => {
                // +∞ is a legitimate constant quench
                if beta.is_nan() || *beta < 0.0 {
                    return bad(format!("constant beta must be >= 0, got {beta}"));
                }
            }
            CoolingSchedule::Logarithmic { gamma, k0 } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return bad(format!("logarithmic gamma must be finite and > 0, got {gamma}"));
                }
                if *k0 == 0 {
                    return bad("logarithmic k0 must be >= 1".to_string());
                }
            }
            CoolingSchedule::Geometric { beta0, ratio } => {
                if !(beta0.is_finite() && *beta0 > 0.0) {
                    return bad(format!("geometric beta0 must be finite and > 0, got {beta0}"));
                }
                if !(ratio.is_finite() && *ratio >= 1.0) {
                    return bad(format!("geometric ratio must be finite and >= 1, got {ratio}"));
                }
            }
            CoolingSchedule::Linear { beta0, slope } => {
                if !(beta0.is_finite() && *beta0 >= 0.0) {
                    return bad(format!("linear beta0 must be finite and >= 0, got {beta0}"));
                }
                if !(slope.is_finite() && *slope >= 0.0) {
                    return bad(format!("linear slope must be finite and >= 0, got {slope}"));
                }
            }
            CoolingSchedule::Custom { betas } => {
                if betas.is_empty() {
                    return Err(ScheduleError::EmptyTable);
                }
                for (i, b) in betas.iter().enumerate() {
                    // +∞ entries are allowed (terminal quench)
                    if b.is_nan() || *b < 0.0 {
                        return bad(format!("table entry {} is {b}, must be >= 0", i + 1));
                    }
                }
            }
        }
        Ok(())
    }

    /// The canonical one-line text form, parseable by [`parse_schedule`].
    /// `Custom` tables render as `table:<len entries>` since the file path is
    /// not retained.
    pub fn spec_string(&self) -> String {
        match self {
            CoolingSchedule::Constant { beta } => format!("const:beta={beta}"),
            CoolingSchedule::Logarithmic { gamma, k0 } => format!("log:gamma={gamma},k0={k0}"),
            CoolingSchedule::Geometric { beta0, ratio } => {
                format!("geom:beta0={beta0},r={ratio}")
            }
            CoolingSchedule::Linear { beta0, slope } => {
                format!("linear:beta0={beta0},slope={slope}")
            }
            CoolingSchedule::Custom { betas } => format!("table:<{} entries>", betas.len()),
        }
    }
}

/// Classifies `Σ_{k≥1} exp(-gamma_star·β_k)` for the given schedule.
///
/// `gamma_star = 0` (no traps) always yields [`SeriesBehavior::Diverges`]:
/// with nothing to climb out of, every schedule keeps the chain moving.
/// Finite `Custom` tables yield [`SeriesBehavior::Unknown`] — a finite
/// prefix determines nothing about the tail.
///
/// # Panics
///
/// Panics when `gamma_star` is negative or NaN.
pub fn divergence_class(schedule: &CoolingSchedule, gamma_star: f64) -> SeriesBehavior {
    assert!(
        gamma_star >= 0.0,
        "trap depth must be >= 0, got {gamma_star}"
    );
    if gamma_star == 0.0 {
        return SeriesBehavior::Diverges;
    }
    match schedule {
        CoolingSchedule::Constant { beta } => {
            if beta.is_infinite() {
                // every term is exactly zero
                SeriesBehavior::Converges
            } else {
                SeriesBehavior::Diverges
            }
        }
        // terms are (k + k0)^(-gamma_star/gamma): a p-series, divergent iff
        // the exponent is <= 1, i.e. iff gamma >= gamma_star
        CoolingSchedule::Logarithmic { gamma, .. } => {
            if *gamma >= gamma_star {
                SeriesBehavior::Diverges
            } else {
                SeriesBehavior::Converges
            }
        }
        CoolingSchedule::Geometric { ratio, .. } => {
            if *ratio > 1.0 {
                SeriesBehavior::Converges
            } else {
                // ratio = 1 degenerates to a constant schedule
                SeriesBehavior::Diverges
            }
        }
        CoolingSchedule::Linear { slope, .. } => {
            if *slope > 0.0 {
                SeriesBehavior::Converges
            } else {
                SeriesBehavior::Diverges
            }
        }
        CoolingSchedule::Custom { .. } => SeriesBehavior::Unknown,
    }
}

/// `Σ_{k=1}^{k_max} exp(-gamma_star·β_k)` — a finite prefix of the escape
/// series, for reports and plots.
///
/// # Panics
///
/// Panics when `gamma_star` is negative or NaN, or when the schedule is a
/// `Custom` table shorter than `k_max`.
pub fn escape_series_partial_sum(
    schedule: &CoolingSchedule,
    gamma_star: f64,
    k_max: u64,
) -> f64 {
    assert!(
        gamma_star >= 0.0,
        "trap depth must be >= 0, got {gamma_star}"
    );
    (1..=k_max)
        .map(|k| escape_term(gamma_star, schedule.beta_at(k)))
        .sum()
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn parse_params(
    family: &'static str,
    text: &str,
    allowed: &[&'static str],
) -> Result<Vec<(String, f64)>, ScheduleError> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (key, value) = piece.split_once('=').ok_or_else(|| ScheduleError::InvalidNumber {
            name: piece.to_string(),
            text: String::new(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !allowed.contains(&key) {
            return Err(ScheduleError::UnknownParameter {
                family,
                name: key.to_string(),
            });
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(ScheduleError::DuplicateParameter {
                name: key.to_string(),
            });
        }
        let number: f64 = value.parse().map_err(|_| ScheduleError::InvalidNumber {
            name: key.to_string(),
            text: value.to_string(),
        })?;
        out.push((key.to_string(), number));
    }
    Ok(out)
}

fn lookup(params: &[(String, f64)], name: &str) -> Option<f64> {
    params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
}

fn require(
    family: &'static str,
    params: &[(String, f64)],
    name: &'static str,
) -> Result<f64, ScheduleError> {
    lookup(params, name).ok_or(ScheduleError::MissingParameter { family, name })
}

/// Reads an explicit `β` table: one value per line, blank lines and
/// `#`-comments ignored.
pub fn load_schedule_table(path: &str) -> Result<CoolingSchedule, ScheduleError> {
    let contents = std::fs::read_to_string(path).map_err(|e| ScheduleError::TableIo {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    let mut betas = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| ScheduleError::TableParse {
            path: path.to_string(),
            line: i + 1,
            text: line.to_string(),
        })?;
        betas.push(value);
    }
    let schedule = CoolingSchedule::Custom { betas };
    schedule.validate()?;
    Ok(schedule)
}

/// Parses the one-line schedule grammar and validates the result:
///
/// * `const:beta=2.5`
/// * `log:gamma=2,k0=9` (`k0` defaults to 1)
/// * `geom:beta0=0.5,r=1.05`
/// * `linear:beta0=0.1,slope=0.01`
/// * `table:/path/to/betas.txt` (one `β` per line, `#` comments)
pub fn parse_schedule(text: &str) -> Result<CoolingSchedule, ScheduleError> {
    let text = text.trim();
    let (family, rest) = text.split_once(':').unwrap_or((text, ""));
    let schedule = match family.trim() {
        "const" => {
            let params = parse_params("const", rest, &["beta"])?;
            CoolingSchedule::Constant {
                beta: require("const", &params, "beta")?,
            }
        }
        "log" => {
            let params = parse_params("log", rest, &["gamma", "k0"])?;
            let gamma = require("log", &params, "gamma")?;
            let k0_raw = lookup(&params, "k0").unwrap_or(1.0);
            if !(k0_raw.is_finite() && k0_raw >= 0.0 && k0_raw.fract() == 0.0) {
                return Err(ScheduleError::InvalidParameter {
                    reason: format!("k0 must be a nonnegative integer, got {k0_raw}"),
                });
            }
            CoolingSchedule::Logarithmic {
                gamma,
                k0: k0_raw as u64,
            }
        }
        "geom" => {
            let params = parse_params("geom", rest, &["beta0", "r"])?;
            CoolingSchedule::Geometric {
                beta0: require("geom", &params, "beta0")?,
                ratio: require("geom", &params, "r")?,
            }
        }
        "linear" => {
            let params = parse_params("linear", rest, &["beta0", "slope"])?;
            CoolingSchedule::Linear {
                beta0: require("linear", &params, "beta0")?,
                slope: require("linear", &params, "slope")?,
            }
        }
        "table" => return load_schedule_table(rest.trim()),
        other => {
            return Err(ScheduleError::UnknownFamily {
                family: other.to_string(),
            })
        }
    };
    schedule.validate()?;
    Ok(schedule)
}
