//! Single-step sampling kernels: the parallel-trial annealing move and a
//! classical single-proposal baseline.
//!
//! Both kernels share the acceptance rule for a candidate flip at vertex `x`:
//! admit with probability `exp(-β·max(E_x(σ), 0))`, i.e. always admit
//! downhill or flat moves.  They differ in how candidates are proposed:
//!
//! * [`parallel_trial_step`] evaluates **every** vertex in parallel: each vertex is
//!   independently admitted with its own acceptance probability, and if the
//!   admitted set `S` is nonempty exactly one member of `S` is applied,
//!   chosen uniformly.  The chain stays put only when *no* vertex is
//!   admitted, which makes rejection steps rare and never wastes a sweep of
//!   cost evaluations.
//! * [`metropolis_step`] proposes a single uniformly chosen vertex and
//!   applies the same acceptance rule to it alone.
//!
//! `β = +∞` is accepted by both: a flip is then admitted iff its cost is
//! `<= 0` (zero-cost plateau moves stay admissible).
//!
//! # Randomness contract (frozen)
//!
//! Trajectories must be a pure function of `(instance, initial configuration,
//! β sequence, seed)`, so the draw discipline is fixed:
//!
//! * [`parallel_trial_step`] draws one uniform in `[0, 1)` **per vertex, in ascending
//!   vertex order** — always `n` draws, even for flips admitted with
//!   probability one — and, when the admitted set is nonempty, one uniform
//!   integer in `[0, |S|)` to select the flip.
//! * [`metropolis_step`] draws one uniform integer in `[0, n)` and then one
//!   uniform in `[0, 1)`: always exactly two draws.
//!
//! The concrete generator for reproducible runs is [`ReplicaRng`]
//! (ChaCha with 8 rounds, a fixed cross-platform stream), seeded either
//! directly or through [`derive_replica_seed`].

use rand::{Rng, SeedableRng};

use crate::ising::{CavityCache, IsingInstance, SpinConfiguration};

/// The pinned generator for reproducible trajectories.
///
/// ChaCha's output stream is specified independently of platform and
/// endianness, so seeds recorded in reports replay exactly.
pub type ReplicaRng = rand_chacha::ChaCha8Rng;

/// Builds the pinned generator from a 64-bit seed.
pub fn replica_rng(seed: u64) -> ReplicaRng {
    ReplicaRng::seed_from_u64(seed)
}

/// Derives the seed for one replica of a multi-replica run from the run's
/// master seed.
///
/// The mixing function is frozen: `mix64(master + (index + 1) · GOLDEN)`
/// where `GOLDEN = 0x9E3779B97F4A7C15` and `mix64` is the standard 64-bit
/// finalizer (xor-shift 30 / multiply / xor-shift 27 / multiply / xor-shift
/// 31).  Distinct replica indices map to distinct seeds for any fixed master
/// seed because both stages are bijections on `u64`.
pub fn derive_replica_seed(master_seed: u64, replica_index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    mix64(master_seed.wrapping_add(replica_index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a single kernel step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    /// The vertex whose spin was reversed, or `None` when the chain stayed.
    pub flipped: Option<usize>,
    /// Size of the admitted set (for [`metropolis_step`]: 1 if the proposed
    /// flip was admitted, else 0).
    pub eligible_count: usize,
}

impl StepOutcome {
    /// True when the configuration changed this step.
    pub fn moved(&self) -> bool {
        self.flipped.is_some()
    }
}

/// The shared acceptance rule `exp(-β·max(cost, 0))`, also used by the exact
/// transition-matrix builders so both views of the dynamics agree by
/// construction.
pub(crate) fn admit_probability(cost: f64, beta: f64) -> f64 {
    // `cost <= 0` is handled before touching `beta` so that `β = +∞` never
    // forms the indeterminate product `∞ · 0`.
    if cost <= 0.0 {
        1.0
    } else {
        (-beta * cost).exp()
    }
}

pub(crate) fn check_beta(beta: f64) {
    assert!(
        beta >= 0.0,
        "inverse temperature must be >= 0 (possibly +inf), got {beta}"
    );
}

/// One parallel-trial step: admit every vertex independently with probability
/// `exp(-β·E_x(σ)⁺)`, then flip one uniformly chosen member of the admitted
/// set (or stay put when the set is empty).
///
/// `sigma` and `cache` are updated in place and stay bound to each other.
/// See the module docs for the frozen draw discipline.
///
/// # Panics
///
/// Panics if `beta` is negative or NaN, or if `sigma`/`cache` sizes disagree
/// with the instance.
pub fn parallel_trial_step<R: Rng + ?Sized>(
    instance: &IsingInstance,
    sigma: &mut SpinConfiguration,
    cache: &mut CavityCache,
    beta: f64,
    rng: &mut R,
) -> StepOutcome {
    check_beta(beta);
    let n = instance.vertex_count();
    debug_assert_eq!(sigma.len(), n);

    let mut admitted = Vec::with_capacity(n);
    for x in 0..n {
        let u: f64 = rng.random();
        let cost = cache.energy_cost(sigma, x);
        if u < admit_probability(cost, beta) {
            admitted.push(x);
        }
    }
    if admitted.is_empty() {
        return StepOutcome {
            flipped: None,
            eligible_count: 0,
        };
    }
    let chosen = admitted[rng.random_range(0..admitted.len())];
    sigma.flip(chosen);
    cache.flip_update(instance, sigma, chosen);
    StepOutcome {
        flipped: Some(chosen),
        eligible_count: admitted.len(),
    }
}

/// One classical single-proposal step: pick a vertex uniformly, admit it with
/// probability `exp(-β·E_x(σ)⁺)`.
///
/// # Panics
///
/// Panics if `beta` is negative or NaN, or if `sigma`/`cache` sizes disagree
/// with the instance.
pub fn metropolis_step<R: Rng + ?Sized>(
    instance: &IsingInstance,
    sigma: &mut SpinConfiguration,
    cache: &mut CavityCache,
    beta: f64,
    rng: &mut R,
) -> StepOutcome {
    check_beta(beta);
    let n = instance.vertex_count();
    debug_assert_eq!(sigma.len(), n);

    let x = rng.random_range(0..n);
    let u: f64 = rng.random();
    let cost = cache.energy_cost(sigma, x);
    if u < admit_probability(cost, beta) {
        sigma.flip(x);
        cache.flip_update(instance, sigma, x);
        StepOutcome {
            flipped: Some(x),
            eligible_count: 1,
        }
    } else {
        StepOutcome {
            flipped: None,
            eligible_count: 0,
        }
    }
}
