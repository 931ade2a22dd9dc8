//! Deliberately naive re-implementations used as cross-check oracles.
//!
//! Everything here favours *obviousness* over speed: energies come from a
//! dense coupling matrix and a literal double sum, flip costs from two full
//! energy evaluations, and transition probabilities from explicit sums over
//! all admitted subsets (exponential in the vertex count).  None of this code
//! shares arithmetic with the fast paths in [`crate::ising`] and
//! [`crate::exact`]; that independence is the point.  The `verify` harness
//! subcommand and the test suites compare the fast paths against these
//! oracles entry by entry.

use crate::ising::{IsingInstance, SpinConfiguration};

/// Practical ceiling for the subset-sum oracles (the row oracle walks
/// `2^n` subsets for each of `n` targets).
pub const MAX_ORACLE_VERTICES: usize = 16;

/// Energy via a dense matrix and the literal ordered double sum
/// `-(1/2)·Σ_x Σ_y J[x][y]·σ_x·σ_y - Σ_x h[x]·σ_x`
/// (each coupled pair visited twice, halved once).
pub fn hamiltonian_direct(instance: &IsingInstance, sigma: &SpinConfiguration) -> f64 {
    let n = instance.vertex_count();
    let mut dense = vec![vec![0.0f64; n]; n];
    for &(x, y, j) in instance.edges() {
        dense[x][y] = j;
        dense[y][x] = j;
    }
    let mut pair_part = 0.0;
    for x in 0..n {
        for y in 0..n {
            pair_part += dense[x][y] * sigma.spin_f64(x) * sigma.spin_f64(y);
        }
    }
    let mut field_part = 0.0;
    for x in 0..n {
        field_part += instance.fields()[x] * sigma.spin_f64(x);
    }
    -0.5 * pair_part - field_part
}

/// Flip cost as a difference of two full energy evaluations.
pub fn flip_cost_direct(instance: &IsingInstance, sigma: &SpinConfiguration, x: usize) -> f64 {
    hamiltonian_direct(instance, &sigma.flipped(x)) - hamiltonian_direct(instance, sigma)
}

fn admit_probability_direct(instance: &IsingInstance, sigma: &SpinConfiguration, beta: f64) -> Vec<f64> {
    (0..instance.vertex_count())
        .map(|x| {
            let cost = flip_cost_direct(instance, sigma, x);
            if cost <= 0.0 {
                1.0
            } else {
                (-beta * cost).exp()
            }
        })
        .collect()
}

/// The uniform-selection weight written as its literal subset sum:
/// over every admitted set `S ⊆ V∖{x}`, the probability of drawing `S`
/// times `1/(|S|+1)` (vertex `x` joins `S` before the uniform choice).
///
/// # Panics
///
/// Panics if the instance exceeds [`MAX_ORACLE_VERTICES`].
pub fn selection_weight_subset_sum(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    x: usize,
    beta: f64,
) -> f64 {
    let n = instance.vertex_count();
    assert!(n <= MAX_ORACLE_VERTICES, "oracle supports n <= {MAX_ORACLE_VERTICES}, got {n}");
    let q = admit_probability_direct(instance, sigma, beta);
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        if mask >> x & 1 == 1 {
            continue; // subsets of V ∖ {x} only
        }
        let mut weight = 1.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            weight *= if mask >> y & 1 == 1 { q[y] } else { 1.0 - q[y] };
        }
        total += weight / f64::from(mask.count_ones() + 1);
    }
    total
}

/// One full row of the parallel-trial transition matrix, as its literal
/// subset sum: for each target flip `x`,
/// `P(σ, σ^x) = Σ_{S ∋ x} (1/|S|) · Π_{y∈S} q_y · Π_{y∉S} (1-q_y)`,
/// and the stay probability `P(σ, σ) = Π_y (1-q_y)`, where
/// `q_y = exp(-β·E_y(σ)⁺)`.  Indexed by configuration rank; length `2^n`.
///
/// # Panics
///
/// Panics if the instance exceeds [`MAX_ORACLE_VERTICES`].
pub fn parallel_trial_row_subset_sum(instance: &IsingInstance, sigma: &SpinConfiguration, beta: f64) -> Vec<f64> {
    let n = instance.vertex_count();
    assert!(n <= MAX_ORACLE_VERTICES, "oracle supports n <= {MAX_ORACLE_VERTICES}, got {n}");
    let q = admit_probability_direct(instance, sigma, beta);
    let mut row = vec![0.0f64; 1 << n];

    let mut stay = 1.0;
    for y in 0..n {
        stay *= 1.0 - q[y];
    }
    row[sigma.rank() as usize] = stay;

    for x in 0..n {
        let mut total = 0.0;
        for mask in 0u32..(1u32 << n) {
            if mask >> x & 1 == 0 {
                continue; // admitted sets containing x only
            }
            let mut weight = 1.0;
            for y in 0..n {
                weight *= if mask >> y & 1 == 1 { q[y] } else { 1.0 - q[y] };
            }
            total += weight / f64::from(mask.count_ones());
        }
        row[sigma.flipped(x).rank() as usize] = total;
    }
    row
}

/// One full row of the single-proposal baseline matrix:
/// `P(σ, σ^x) = q_x / n`, stay probability `1 - Σ_x q_x / n`.
pub fn metropolis_row_direct(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    beta: f64,
) -> Vec<f64> {
    let n = instance.vertex_count();
    assert!(n <= MAX_ORACLE_VERTICES, "oracle supports n <= {MAX_ORACLE_VERTICES}, got {n}");
    let q = admit_probability_direct(instance, sigma, beta);
    let mut row = vec![0.0f64; 1 << n];
    let mut leave = 0.0;
    for x in 0..n {
        let p = q[x] / n as f64;
        row[sigma.flipped(x).rank() as usize] = p;
        leave += p;
    }
    row[sigma.rank() as usize] = 1.0 - leave;
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn direct_hamiltonian_agrees_with_the_fast_path() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 1 + (seed as usize % 6);
            let inst = IsingInstance::random(n, 0.6, &mut rng);
            for rank in 0..(1u64 << n) {
                let sigma = SpinConfiguration::from_rank(n, rank);
                let fast = inst.energy(&sigma);
                let slow = hamiltonian_direct(&inst, &sigma);
                assert!((fast - slow).abs() <= 1e-12, "seed {seed} rank {rank}");
            }
        }
    }

    #[test]
    fn subset_sum_rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = IsingInstance::random(5, 0.5, &mut rng);
        for rank in 0..32u64 {
            let sigma = SpinConfiguration::from_rank(5, rank);
            for beta in [0.0, 0.4, 2.5] {
                let row = parallel_trial_row_subset_sum(&inst, &sigma, beta);
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12);
                assert!(row.iter().all(|&p| (-1e-15..=1.0 + 1e-12).contains(&p)));
                let mrow = metropolis_row_direct(&inst, &sigma, beta);
                let msum: f64 = mrow.iter().sum();
                assert!((msum - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn selection_weight_two_vertex_hand_value() {
        // from (+,+) with coupling J: the other vertex is admitted with
        // q = exp(-2βJ), so the weight is (1-q) + q/2 = 1 - q/2
        let inst = IsingInstance::new(2, &[(0, 1, 1.0)], &[0.0, 0.0]).unwrap();
        let sigma = SpinConfiguration::all_up(2);
        for beta in [0.3f64, 1.0, 2.0] {
            let q = (-2.0 * beta).exp();
            let w = selection_weight_subset_sum(&inst, &sigma, 0, beta);
            assert!((w - (1.0 - q / 2.0)).abs() <= 1e-14);
        }
    }
}
