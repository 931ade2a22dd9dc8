//! Exact transition matrices, stationary distributions, and the selection
//! weight that quantifies how the parallel-trial chain distorts single-flip
//! probabilities.
//!
//! On an instance with `n` vertices and a configuration `σ`, write
//! `q_y = exp(-β·E_y(σ)⁺)` for the per-vertex acceptance probabilities used
//! by [`crate::kernels`].  One parallel-trial step admits each vertex
//! independently and then flips one uniform member of the admitted set `S`,
//! so the exact transition probabilities are
//!
//! * `P(σ, σ^x) = Σ_{S ∋ x} (1/|S|) · Π_{y∈S} q_y · Π_{y∉S} (1-q_y)`,
//! * `P(σ, σ)  = Π_y (1-q_y)` (nothing admitted).
//!
//! Factoring out `q_x` gives `P(σ, σ^x) = W(σ, x) · q_x` where the
//! *selection weight* `W(σ, x) = E[1/(K+1)]`, with `K` the number of
//! admitted vertices among `V ∖ {x}`, is computed here in `O(n²)` by
//! convolving the `K`-distribution instead of summing `2^(n-1)` subsets
//! (the literal subset sum survives in [`crate::reference`] as an oracle).
//! Because `1/(K+1) ≥ 1/n`, every off-diagonal entry dominates the
//! single-proposal baseline entry `q_x / n`: the parallel-trial chain never
//! moves less than the classical one.
//!
//! The stationary solver treats `π P = π, Σπ = 1` as a dense linear system
//! (one balance equation replaced by normalization).  Power iteration is
//! retained only as an independent cross-check oracle.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::ising::{IsingInstance, SpinConfiguration};
use crate::kernels::{admit_probability, check_beta};

/// Ceiling for single-row evaluation, Boltzmann weights, and anything else
/// that is linear in the state count.
pub const MAX_ROW_VERTICES: usize = 20;
/// Default ceiling for building a full dense matrix (4096 states).
pub const DEFAULT_MATRIX_VERTICES: usize = 12;
/// Absolute ceiling for dense matrices (~half a gigabyte of entries).
pub const MAX_MATRIX_VERTICES: usize = 13;

/// Stationary solutions must satisfy `‖πP - π‖₁` within this bound.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;
/// The two sides of the Boltzmann-flow identity must agree within this bound.
pub const FLOW_IDENTITY_TOL: f64 = 1e-12;

/// Which dynamics a matrix or annealing run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    /// Admit every vertex independently, flip one admitted vertex uniformly.
    ParallelTrial,
    /// Propose one uniform vertex, admit it or stay.
    Metropolis,
}

/// Errors from the exact-analysis operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    /// The instance exceeds the size cap of the requested operation.
    #[error("{operation} supports at most {max} vertices, instance has {n}")]
    TooManyVertices {
        operation: &'static str,
        n: usize,
        max: usize,
    },
    /// The dense linear system for `πP = π` could not be factored.
    #[error("stationary system is singular")]
    SingularSystem,
    /// The computed stationary candidate fails the residual bound.
    #[error("stationary residual {residual:e} exceeds {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    /// The solve produced a clearly negative probability.
    #[error("stationary solve produced negative probability {value}")]
    NegativeProbability { value: f64 },
    /// Power iteration ran out of sweeps before reaching the tolerance.
    #[error("power iteration did not converge within {sweeps} sweeps (last delta {delta:e})")]
    PowerIterationStalled { sweeps: usize, delta: f64 },
    /// The operation is only defined for zero-field, nonnegative couplings.
    #[error("operation requires a zero-field ferromagnet: {reason}")]
    RequiresZeroFieldFerromagnet { reason: String },
    /// The operation needs a positive, finite inverse temperature.
    #[error("operation requires finite positive beta, got {beta}")]
    BetaOutOfRange { beta: f64 },
}

// ---------------------------------------------------------------------------
// Selection weights and matrix rows
// ---------------------------------------------------------------------------

fn admit_probabilities(instance: &IsingInstance, sigma: &SpinConfiguration, beta: f64) -> Vec<f64> {
    (0..instance.vertex_count())
        .map(|x| admit_probability(instance.energy_cost(sigma, x), beta))
        .collect()
}

/// `E[1/(K+1)]` for `K ~` the number of admitted vertices among `V ∖ {x}`,
/// given each vertex's admit probability.  `O(n²)` via the convolution of
/// Bernoulli counts.
fn selection_weight_from_probs(admit: &[f64], x: usize) -> f64 {
    let n = admit.len();
    // coeffs[k] = P(K = k) over the vertices processed so far
    let mut coeffs = vec![0.0f64; n];
    coeffs[0] = 1.0;
    let mut used = 0;
    for (y, &q) in admit.iter().enumerate() {
        if y == x {
            continue;
        }
        for k in (0..=used).rev() {
            let c = coeffs[k];
            coeffs[k + 1] += c * q;
            coeffs[k] = c * (1.0 - q);
        }
        used += 1;
    }
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &p)| p / (k + 1) as f64)
        .sum()
}

/// The uniform-selection weight `W(σ, x)` with `P(σ, σ^x) = W(σ, x)·q_x`.
///
/// Always lies in `[1/n, 1]`.
///
/// # Panics
///
/// Panics if `beta` is negative or NaN, or on size mismatches.
pub fn selection_weight(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    x: usize,
    beta: f64,
) -> f64 {
    check_beta(beta);
    let admit = admit_probabilities(instance, sigma, beta);
    selection_weight_from_probs(&admit, x)
}

fn check_row_size(operation: &'static str, n: usize, max: usize) -> Result<(), ExactError> {
    if n > max {
        Err(ExactError::TooManyVertices { operation, n, max })
    } else {
        Ok(())
    }
}

/// One full row of the parallel-trial transition matrix, indexed by
/// configuration rank (length `2^n`).
///
/// # Errors
///
/// Fails when `n >` [`MAX_ROW_VERTICES`].
pub fn parallel_trial_row(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    beta: f64,
) -> Result<Vec<f64>, ExactError> {
    check_beta(beta);
    let n = instance.vertex_count();
    check_row_size("parallel_trial_row", n, MAX_ROW_VERTICES)?;

    let admit = admit_probabilities(instance, sigma, beta);
    let mut row = vec![0.0f64; 1usize << n];
    let mut stay = 1.0;
    for &q in &admit {
        stay *= 1.0 - q;
    }
    row[sigma.rank() as usize] = stay;
    for x in 0..n {
        row[sigma.flipped(x).rank() as usize] = selection_weight_from_probs(&admit, x) * admit[x];
    }
    debug_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(row)
}

/// One full row of the single-proposal baseline matrix (`P(σ,σ^x) = q_x/n`),
/// indexed by configuration rank.
///
/// # Errors
///
/// Fails when `n >` [`MAX_ROW_VERTICES`].
pub fn metropolis_row(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    beta: f64,
) -> Result<Vec<f64>, ExactError> {
    check_beta(beta);
    let n = instance.vertex_count();
    check_row_size("metropolis_row", n, MAX_ROW_VERTICES)?;

    let admit = admit_probabilities(instance, sigma, beta);
    let mut row = vec![0.0f64; 1usize << n];
    let mut leave = 0.0;
    for (x, &q) in admit.iter().enumerate() {
        let p = q / n as f64;
        row[sigma.flipped(x).rank() as usize] = p;
        leave += p;
    }
    row[sigma.rank() as usize] = 1.0 - leave;
    Ok(row)
}

// ---------------------------------------------------------------------------
// Dense transition matrices
// ---------------------------------------------------------------------------

/// A dense row-stochastic transition matrix over all `2^n` configurations,
/// rows and columns indexed by configuration rank.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    kind: KernelKind,
    beta: f64,
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Number of vertices of the underlying instance.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of configurations (`2^n`).
    pub fn state_count(&self) -> usize {
        1usize << self.n
    }

    /// The inverse temperature the matrix was built at.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Which dynamics the matrix describes.
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// The row for source state `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let states = self.state_count();
        &self.entries[i * states..(i + 1) * states]
    }

    /// The entry `P(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.state_count() + j]
    }

    /// The row-vector product `dist · P`.
    ///
    /// # Panics
    ///
    /// Panics if `dist` has the wrong length.
    pub fn left_apply(&self, dist: &[f64]) -> Vec<f64> {
        let states = self.state_count();
        assert_eq!(dist.len(), states, "distribution length mismatch");
        let mut out = vec![0.0f64; states];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (j, &p) in self.row(i).iter().enumerate() {
                out[j] += mass * p;
            }
        }
        out
    }

    /// The largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.state_count())
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the full transition matrix at the default size cap
/// ([`DEFAULT_MATRIX_VERTICES`]).
pub fn build_transition_matrix(
    instance: &IsingInstance,
    beta: f64,
    kind: KernelKind,
) -> Result<TransitionMatrix, ExactError> {
    build_transition_matrix_with_cap(instance, beta, kind, DEFAULT_MATRIX_VERTICES)
}

/// Builds the full transition matrix with an explicit vertex cap (at most
/// [`MAX_MATRIX_VERTICES`]; the matrix has `4^n` entries).
pub fn build_transition_matrix_with_cap(
    instance: &IsingInstance,
    beta: f64,
    kind: KernelKind,
    max_vertices: usize,
) -> Result<TransitionMatrix, ExactError> {
    check_beta(beta);
    let n = instance.vertex_count();
    check_row_size("build_transition_matrix", n, max_vertices.min(MAX_MATRIX_VERTICES))?;

    let states = 1usize << n;
    let mut entries = Vec::with_capacity(states * states);
    for rank in 0..states {
        let sigma = SpinConfiguration::from_rank(n, rank as u64);
        let row = match kind {
            KernelKind::ParallelTrial => parallel_trial_row(instance, &sigma, beta)?,
            KernelKind::Metropolis => metropolis_row(instance, &sigma, beta)?,
        };
        entries.extend_from_slice(&row);
    }
    Ok(TransitionMatrix {
        kind,
        beta,
        n,
        entries,
    })
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// A probability distribution over all `2^n` configurations, indexed by rank.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Normalizes nonnegative weights into a distribution.
    ///
    /// # Panics
    ///
    /// Panics if the weights are empty, contain a negative or non-finite
    /// value, or sum to zero.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        assert!(!weights.is_empty(), "empty weight vector");
        assert!(
            weights.iter().all(|w| w.is_finite() && *w >= 0.0),
            "weights must be finite and nonnegative"
        );
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "weights sum to zero");
        let probs = weights.into_iter().map(|w| w / total).collect();
        StateDistribution { probs }
    }

    /// The probability of the state with the given rank.
    pub fn prob(&self, rank: usize) -> f64 {
        self.probs[rank]
    }

    /// All probabilities, rank order.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// True when the distribution covers no states (never constructed so).
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The L1 distance `Σ |p_i - q_i|`.
    ///
    /// # Panics
    ///
    /// Panics on length mismatch.
    pub fn l1_distance(&self, other: &StateDistribution) -> f64 {
        assert_eq!(self.len(), other.len(), "distribution length mismatch");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum()
    }
}

/// The Boltzmann distribution `π(σ) ∝ exp(-β·H(σ))`.
///
/// Weights are computed relative to the minimum energy, so large `β` (up to
/// and including `+∞`, where the distribution concentrates uniformly on the
/// minimizers) cannot overflow.
///
/// # Errors
///
/// Fails when `n >` [`MAX_ROW_VERTICES`].
pub fn gibbs_distribution(
    instance: &IsingInstance,
    beta: f64,
) -> Result<StateDistribution, ExactError> {
    check_beta(beta);
    let n = instance.vertex_count();
    check_row_size("gibbs_distribution", n, MAX_ROW_VERTICES)?;
    let states = 1usize << n;
    let energies: Vec<f64> = (0..states)
        .map(|rank| instance.energy(&SpinConfiguration::from_rank(n, rank as u64)))
        .collect();
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies
        .iter()
        .map(|&e| {
            let excess = e - ground;
            if excess <= 0.0 {
                1.0
            } else {
                (-beta * excess).exp()
            }
        })
        .collect();
    Ok(StateDistribution::from_weights(weights))
}

/// Solves `π P = π`, `Σ π = 1` directly (dense LU; one balance equation
/// replaced by the normalization row) and verifies the residual.
///
/// # Errors
///
/// Fails if the system is singular, a solved entry is clearly negative, or
/// `‖πP - π‖₁ >` [`STATIONARY_RESIDUAL_TOL`].
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<StateDistribution, ExactError> {
    let states = matrix.state_count();
    // Columns of (Pᵀ - I), i.e. balance equation per target state; the last
    // equation (redundant: columns of Pᵀ - I sum to zero) becomes Σπ = 1.
    let mut system = DMatrix::<f64>::zeros(states, states);
    for i in 0..states {
        for (j, &p) in matrix.row(i).iter().enumerate() {
            system[(j, i)] = p;
        }
    }
    for i in 0..states {
        system[(i, i)] -= 1.0;
    }
    for i in 0..states {
        system[(states - 1, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(states);
    rhs[states - 1] = 1.0;

    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(ExactError::SingularSystem)?;

    let mut probs = vec![0.0f64; states];
    for (i, &value) in solution.iter().enumerate() {
        if value < -1e-9 {
            return Err(ExactError::NegativeProbability { value });
        }
        probs[i] = value.max(0.0);
    }
    let dist = StateDistribution::from_weights(probs);

    let stepped = matrix.left_apply(dist.as_slice());
    let residual: f64 = stepped
        .iter()
        .zip(dist.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(ExactError::ResidualTooLarge {
            residual,
            tol: STATIONARY_RESIDUAL_TOL,
        });
    }
    Ok(dist)
}

/// Stationary distribution by damped power iteration — the independent
/// cross-check oracle for [`stationary_distribution`].
///
/// Iterates `v ← (v + vP)/2` (the damping makes periodic chains converge
/// without changing the fixed point) until the L1 step falls below `tol`.
pub fn stationary_by_power_iteration(
    matrix: &TransitionMatrix,
    max_sweeps: usize,
    tol: f64,
) -> Result<StateDistribution, ExactError> {
    let states = matrix.state_count();
    let mut current = vec![1.0 / states as f64; states];
    let mut delta = f64::INFINITY;
    for _ in 0..max_sweeps {
        let stepped = matrix.left_apply(&current);
        let mut next: Vec<f64> = stepped
            .iter()
            .zip(&current)
            .map(|(s, c)| 0.5 * (s + c))
            .collect();
        let total: f64 = next.iter().sum();
        for v in &mut next {
            *v /= total;
        }
        delta = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .sum();
        current = next;
        if delta < tol {
            return Ok(StateDistribution::from_weights(current));
        }
    }
    Err(ExactError::PowerIterationStalled {
        sweeps: max_sweeps,
        delta,
    })
}

// ---------------------------------------------------------------------------
// Boltzmann flow identity
// ---------------------------------------------------------------------------

/// Both sides of the exact identity describing how one parallel-trial step
/// moves probability away from the Boltzmann distribution `π`:
///
/// `(πP)(σ) - π(σ) = π(σ) · Σ_x q_x(σ) · (W(σ^x, x) - W(σ, x))`
///
/// The left side is an explicit matrix-vector product; the right side uses
/// selection weights only.  The net flow vanishes identically iff the
/// selection weights are flip-symmetric, which happens for instances with no
/// couplings — fields alone never bias the admitted-set sizes.
#[derive(Clone, Debug, Serialize)]
pub struct BoltzmannFlowReport {
    /// `(πP)(σ) - π(σ)` per state, by matrix-vector product.
    pub matrix_side: Vec<f64>,
    /// `π(σ)·Σ_x q_x(σ)·(W(σ^x,x) - W(σ,x))` per state, from weights alone.
    pub weight_side: Vec<f64>,
    /// `max_σ |matrix_side - weight_side|`.
    pub max_abs_difference: f64,
}

impl BoltzmannFlowReport {
    /// True when the two sides agree within [`FLOW_IDENTITY_TOL`].
    pub fn holds(&self) -> bool {
        self.max_abs_difference <= FLOW_IDENTITY_TOL
    }

    /// The largest net flow magnitude (zero iff the Boltzmann distribution is
    /// stationary for the parallel-trial chain).
    pub fn max_abs_flow(&self) -> f64 {
        self.matrix_side.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Evaluates the Boltzmann-flow identity both ways on every state.
///
/// # Errors
///
/// Fails for non-finite `beta` or when the instance exceeds the dense-matrix
/// cap.
pub fn boltzmann_flow_report(
    instance: &IsingInstance,
    beta: f64,
) -> Result<BoltzmannFlowReport, ExactError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(ExactError::BetaOutOfRange { beta });
    }
    let n = instance.vertex_count();
    let matrix = build_transition_matrix(instance, beta, KernelKind::ParallelTrial)?;
    let gibbs = gibbs_distribution(instance, beta)?;

    let stepped = matrix.left_apply(gibbs.as_slice());
    let matrix_side: Vec<f64> = stepped
        .iter()
        .zip(gibbs.as_slice())
        .map(|(after, before)| after - before)
        .collect();

    let states = matrix.state_count();
    let mut weight_side = vec![0.0f64; states];
    for rank in 0..states {
        let sigma = SpinConfiguration::from_rank(n, rank as u64);
        let admit = admit_probabilities(instance, &sigma, beta);
        let mut net = 0.0;
        for x in 0..n {
            let weight_out = selection_weight_from_probs(&admit, x);
            let weight_back = selection_weight(instance, &sigma.flipped(x), x, beta);
            net += admit[x] * (weight_back - weight_out);
        }
        weight_side[rank] = gibbs.prob(rank) * net;
    }

    let max_abs_difference = matrix_side
        .iter()
        .zip(&weight_side)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    debug_assert!(max_abs_difference <= FLOW_IDENTITY_TOL);
    Ok(BoltzmannFlowReport {
        matrix_side,
        weight_side,
        max_abs_difference,
    })
}

// ---------------------------------------------------------------------------
// Selection-weight asymmetry at an aligned ground state
// ---------------------------------------------------------------------------

/// Per-vertex comparison of selection weights for leaving the all-up ground
/// state of a zero-field ferromagnet versus returning to it.
#[derive(Clone, Debug, Serialize)]
pub struct VertexAsymmetry {
    pub vertex: usize,
    /// `W(σ*, x)` at the aligned ground state `σ*`.
    pub weight_leaving: f64,
    /// `W(σ*^x, x)`: the weight of the reverse move.
    pub weight_returning: f64,
    /// Whether a strictly positive coupling touches this vertex (equality is
    /// expected exactly when none does).
    pub strict_expected: bool,
    /// `weight_leaving ≥ weight_returning`, strictly when `strict_expected`.
    pub holds: bool,
}

/// Report of [`selection_weight_asymmetry`].
#[derive(Clone, Debug, Serialize)]
pub struct AsymmetryReport {
    pub per_vertex: Vec<VertexAsymmetry>,
    pub all_hold: bool,
}

/// Verifies, vertex by vertex, that leaving the aligned ground state of a
/// zero-field ferromagnet is never selection-favoured less than returning:
/// `W(σ*, x) ≥ W(σ*^x, x)`, strictly iff `x` touches a strictly positive
/// coupling.  This asymmetry is the mechanism that biases the parallel-trial
/// chain's stationary distribution away from the Boltzmann distribution on
/// any instance with a genuine coupling.
///
/// # Errors
///
/// Requires all fields zero, all couplings `≥ 0`, and finite positive `beta`.
pub fn selection_weight_asymmetry(
    instance: &IsingInstance,
    beta: f64,
) -> Result<AsymmetryReport, ExactError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(ExactError::BetaOutOfRange { beta });
    }
    if let Some(x) = instance.fields().iter().position(|&h| h != 0.0) {
        return Err(ExactError::RequiresZeroFieldFerromagnet {
            reason: format!("field on vertex {x} is nonzero"),
        });
    }
    if let Some(&(x, y, j)) = instance.edges().iter().find(|&&(_, _, j)| j < 0.0) {
        return Err(ExactError::RequiresZeroFieldFerromagnet {
            reason: format!("coupling ({x}, {y}) = {j} is negative"),
        });
    }

    let n = instance.vertex_count();
    let ground = SpinConfiguration::all_up(n);
    let admit_at_ground = admit_probabilities(instance, &ground, beta);
    let mut per_vertex = Vec::with_capacity(n);
    for x in 0..n {
        let weight_leaving = selection_weight_from_probs(&admit_at_ground, x);
        let weight_returning = selection_weight(instance, &ground.flipped(x), x, beta);
        let strict_expected = instance.neighbors(x).iter().any(|&(_, j)| j > 0.0);
        let holds = if strict_expected {
            weight_leaving > weight_returning
        } else {
            weight_leaving == weight_returning
        };
        per_vertex.push(VertexAsymmetry {
            vertex: x,
            weight_leaving,
            weight_returning,
            strict_expected,
            holds,
        });
    }
    let all_hold = per_vertex.iter().all(|v| v.holds);
    Ok(AsymmetryReport {
        per_vertex,
        all_hold,
    })
}
