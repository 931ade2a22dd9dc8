//! Energy-landscape analysis: exhaustive state energies, local minima,
//! escape depths, and the maximal trap depth `γ*` that decides which cooling
//! schedules can certify ground-state visits (see [`crate::schedules`]).
//!
//! Definitions (single-flip neighborhood throughout):
//!
//! * `σ'` is *reachable from `σ` at height `E`* when a flip path connects
//!   them through states whose energy never exceeds `E`.
//! * `σ` is a *local minimum* when no strictly lower state is reachable at
//!   height `H(σ)` — members of flat plateaus count.
//! * the *depth* of a non-ground local minimum is the smallest climb `d`
//!   such that some strictly lower state is reachable at `H(σ) + d`;
//!   ground states have infinite depth, encoded as `None`.
//! * `γ*` is the maximum depth over non-ground local minima (`0` if none).
//!
//! Depths are computed in one sweep by merging sublevel-set components in
//! ascending energy order (a union–find persistence pass), rather than one
//! reachability probe per state per height.
//!
//! Integer-valued instances are analyzed in exact `i64` arithmetic, so their
//! level structure, depths, and `γ*` carry no rounding at all.  Float-valued
//! instances evaluate every state's energy directly (no incremental
//! accumulation across the sweep) and then group levels that sit within
//! [`DEFAULT_LEVEL_EPSILON`] of their neighbors; grouping is transitive, and
//! adjacent levels separated by less than ten epsilons are flagged as
//! suspect so callers can see when a landscape's level structure is too fine
//! to trust at the chosen tolerance.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::ising::{IsingInstance, SpinConfiguration};

/// Ceiling for exhaustive landscape sweeps (2^20 states).
pub const MAX_LANDSCAPE_VERTICES: usize = 20;
/// Ceiling for cup extraction, which materializes member lists.
pub const MAX_CUP_VERTICES: usize = 16;
/// Default tolerance for grouping float energy levels.
pub const DEFAULT_LEVEL_EPSILON: f64 = 1e-9;

/// Errors from landscape operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LandscapeError {
    /// The instance exceeds the size cap of the requested operation.
    #[error("{operation} supports at most {max} vertices, instance has {n}")]
    TooManyVertices {
        operation: &'static str,
        n: usize,
        max: usize,
    },
    /// A cup was requested below the energy of its own starting state.
    #[error("starting state has energy {energy}, above the requested height {height}")]
    StartAboveHeight { energy: f64, height: f64 },
    /// The level-grouping tolerance is unusable.
    #[error("level epsilon must be finite and >= 0, got {epsilon}")]
    BadEpsilon { epsilon: f64 },
}

/// One local minimum (possibly a plateau member), with its escape depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalMinimum {
    /// Configuration rank (see [`SpinConfiguration::rank`]).
    pub rank: u64,
    /// Energy of the minimum.
    pub energy: f64,
    /// Escape depth; `None` means unbounded (a ground state).
    pub depth: Option<f64>,
}

impl LocalMinimum {
    /// True for ground states (infinite depth).
    pub fn is_ground(&self) -> bool {
        self.depth.is_none()
    }
}

/// Full landscape summary for one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub vertex_count: usize,
    /// The global minimum energy.
    pub ground_energy: f64,
    /// Ranks of all ground states, ascending.
    pub ground_states: Vec<u64>,
    /// Every local minimum (ground states included), ascending by rank.
    pub local_minima: Vec<LocalMinimum>,
    /// Maximum escape depth over non-ground local minima; `0` when every
    /// local minimum is a ground state.
    pub gamma_star: f64,
    /// Number of distinct energy levels after grouping.
    pub level_count: usize,
    /// The grouping tolerance used, or `None` for exact integer analysis.
    pub level_epsilon: Option<f64>,
    /// Adjacent level pairs closer than ten epsilons — a warning that the
    /// grouping tolerance sits uncomfortably close to real energy gaps.
    pub suspect_level_gaps: Vec<[f64; 2]>,
}

/// A connected component of a sublevel set `{H ≤ height}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cup {
    /// The height defining the sublevel set.
    pub height: f64,
    /// Ranks of the member states, ascending.
    pub members: Vec<u64>,
    /// The lowest energy inside the cup.
    pub bottom_energy: f64,
    /// Ranks of the member states at the bottom energy, ascending.
    pub bottom: Vec<u64>,
    /// The lowest energy among neighbors outside the cup — the cheapest
    /// ridge to cross when leaving.  `None` when the cup is the whole space.
    pub exit_energy: Option<f64>,
    /// `exit_energy - bottom_energy`; `None` when there is no exit.
    pub depth: Option<f64>,
}

fn check_size(operation: &'static str, n: usize, max: usize) -> Result<(), LandscapeError> {
    if n > max {
        Err(LandscapeError::TooManyVertices { operation, n, max })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Energy tables
// ---------------------------------------------------------------------------

/// All `2^n` state energies in exact `i64` arithmetic, walking states in a
/// single-flip order so each step costs `O(degree)`.
fn integer_energy_table(instance: &IsingInstance) -> Vec<i64> {
    let n = instance.vertex_count();
    let states = 1usize << n;
    let mut energies = vec![0i64; states];
    let mut sigma = SpinConfiguration::all_down(n);
    let mut energy = instance
        .energy_int(&sigma)
        .expect("caller checked is_integer_valued");
    energies[0] = energy;
    for i in 1..states {
        let x = (i as u64).trailing_zeros() as usize;
        let mut cavity = instance.fields()[x] as i64;
        for &(y, j) in instance.neighbors(x) {
            cavity += (j as i64) * i64::from(sigma.spin(y));
        }
        let flip_cost = 2 * i64::from(sigma.spin(x)) * cavity;
        sigma.flip(x);
        energy += flip_cost;
        energies[sigma.rank() as usize] = energy;
    }
    energies
}

/// All `2^n` state energies, each evaluated directly from the instance (no
/// incremental accumulation, so no rounding drift across the sweep).
fn float_energy_table(instance: &IsingInstance) -> Vec<f64> {
    let n = instance.vertex_count();
    let states = 1usize << n;
    let mut energies = vec![0.0f64; states];
    let mut sigma = SpinConfiguration::all_down(n);
    energies[0] = instance.energy(&sigma);
    for i in 1..states {
        let x = (i as u64).trailing_zeros() as usize;
        sigma.flip(x);
        energies[sigma.rank() as usize] = instance.energy(&sigma);
    }
    energies
}

/// The energies of all `2^n` states, indexed by configuration rank.
///
/// Integer-valued instances are computed exactly (the returned `f64` values
/// are exact integers); float instances are evaluated per state.
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`].
pub fn state_energies(instance: &IsingInstance) -> Result<Vec<f64>, LandscapeError> {
    check_size("state_energies", instance.vertex_count(), MAX_LANDSCAPE_VERTICES)?;
    if instance.is_integer_valued() {
        Ok(integer_energy_table(instance)
            .into_iter()
            .map(|e| e as f64)
            .collect())
    } else {
        Ok(float_energy_table(instance))
    }
}

// ---------------------------------------------------------------------------
// Level grouping
// ---------------------------------------------------------------------------

struct Levels {
    /// Level class per state, ascending with energy; class 0 is the ground
    /// level.
    class_of: Vec<u32>,
    /// Representative (minimum) energy per class, strictly ascending.
    values: Vec<f64>,
    /// The grouping tolerance, `None` for exact integer classes.
    epsilon: Option<f64>,
    /// Adjacent-level pairs with gaps below ten epsilons.
    suspect_gaps: Vec<[f64; 2]>,
}

fn classify_integer_levels(energies: &[i64]) -> Levels {
    let mut distinct: Vec<i64> = energies.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let class_of = energies
        .iter()
        .map(|e| distinct.binary_search(e).unwrap() as u32)
        .collect();
    Levels {
        class_of,
        values: distinct.iter().map(|&v| v as f64).collect(),
        epsilon: None,
        suspect_gaps: Vec::new(),
    }
}

fn classify_float_levels(energies: &[f64], epsilon: f64) -> Levels {
    let mut distinct: Vec<f64> = energies.to_vec();
    distinct.sort_unstable_by(f64::total_cmp);
    distinct.dedup();

    let mut class_for_distinct = Vec::with_capacity(distinct.len());
    let mut values = Vec::new();
    let mut suspect_gaps = Vec::new();
    for (i, &value) in distinct.iter().enumerate() {
        if i > 0 {
            let gap = value - distinct[i - 1];
            if gap <= epsilon {
                // join the previous value's class
                class_for_distinct.push(*class_for_distinct.last().unwrap());
                continue;
            }
            if gap < 10.0 * epsilon {
                suspect_gaps.push([distinct[i - 1], value]);
            }
        }
        class_for_distinct.push(values.len() as u32);
        values.push(value);
    }

    let class_of = energies
        .iter()
        .map(|e| {
            let idx = distinct
                .binary_search_by(|probe| probe.total_cmp(e))
                .unwrap();
            class_for_distinct[idx]
        })
        .collect();
    Levels {
        class_of,
        values,
        epsilon: Some(epsilon),
        suspect_gaps,
    }
}

// ---------------------------------------------------------------------------
// Persistence sweep
// ---------------------------------------------------------------------------

fn find_root(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// Merges sublevel-set components level by level.  Each component carries
/// the states of its lowest level ("candidate minima").  When a component
/// first touches a component with a strictly lower floor, its candidates
/// die: dying at their own birth level means a same-height path to somewhere
/// lower exists (not minima at all); dying higher records their escape
/// depth.  The single component left at the end holds the ground states.
fn persistence_sweep(n: usize, levels: &Levels) -> (Vec<LocalMinimum>, Vec<u64>, f64) {
    let states = 1usize << n;
    let mut parent: Vec<u32> = (0..states as u32).collect();
    let floor_class: Vec<u32> = levels.class_of.clone();
    let mut candidates: Vec<Vec<u64>> = vec![Vec::new(); states];
    let mut processed = vec![false; states];
    let mut dead: Vec<LocalMinimum> = Vec::new();

    let mut order: Vec<u32> = (0..states as u32).collect();
    order.sort_unstable_by_key(|&s| levels.class_of[s as usize]);

    for &s in &order {
        let class = levels.class_of[s as usize];
        let level_value = levels.values[class as usize];
        processed[s as usize] = true;
        candidates[s as usize].push(s as u64);
        for b in 0..n {
            let neighbor = s ^ (1u32 << b);
            if !processed[neighbor as usize] {
                continue;
            }
            let ra = find_root(&mut parent, s);
            let rb = find_root(&mut parent, neighbor);
            if ra == rb {
                continue;
            }
            let (keep, kill) = if floor_class[ra as usize] <= floor_class[rb as usize] {
                (ra, rb)
            } else {
                (rb, ra)
            };
            if floor_class[keep as usize] == floor_class[kill as usize] {
                // equal floors: both sides' candidates stay alive together
                let moved = std::mem::take(&mut candidates[kill as usize]);
                candidates[keep as usize].extend(moved);
            } else {
                let birth_value = levels.values[floor_class[kill as usize] as usize];
                let depth = level_value - birth_value;
                let members = std::mem::take(&mut candidates[kill as usize]);
                if depth > 0.0 {
                    for rank in members {
                        dead.push(LocalMinimum {
                            rank,
                            energy: birth_value,
                            depth: Some(depth),
                        });
                    }
                }
            }
            parent[kill as usize] = keep;
        }
    }

    // the flip graph is connected, so exactly one component survives
    let root = find_root(&mut parent, 0);
    let mut ground = std::mem::take(&mut candidates[root as usize]);
    ground.sort_unstable();
    let ground_energy = levels.values[floor_class[root as usize] as usize];
    let gamma_star = dead
        .iter()
        .filter_map(|m| m.depth)
        .fold(0.0, f64::max);

    let mut minima = dead;
    minima.extend(ground.iter().map(|&rank| LocalMinimum {
        rank,
        energy: ground_energy,
        depth: None,
    }));
    minima.sort_unstable_by_key(|m| m.rank);
    (minima, ground, gamma_star)
}

fn build_levels(instance: &IsingInstance, epsilon: f64) -> Levels {
    if instance.is_integer_valued() {
        classify_integer_levels(&integer_energy_table(instance))
    } else {
        classify_float_levels(&float_energy_table(instance), epsilon)
    }
}

/// Analyzes the full landscape with an explicit float-level tolerance
/// (ignored for integer-valued instances, which are always exact).
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`] or the tolerance is not a
/// finite nonnegative number.
pub fn landscape_report_with_epsilon(
    instance: &IsingInstance,
    epsilon: f64,
) -> Result<LandscapeReport, LandscapeError> {
    let n = instance.vertex_count();
    check_size("landscape_report", n, MAX_LANDSCAPE_VERTICES)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(LandscapeError::BadEpsilon { epsilon });
    }
    let levels = build_levels(instance, epsilon);
    let (local_minima, ground_states, gamma_star) = persistence_sweep(n, &levels);
    Ok(LandscapeReport {
        vertex_count: n,
        ground_energy: levels.values[0],
        ground_states,
        local_minima,
        gamma_star,
        level_count: levels.values.len(),
        level_epsilon: levels.epsilon,
        suspect_level_gaps: levels.suspect_gaps,
    })
}

/// Analyzes the full landscape ([`DEFAULT_LEVEL_EPSILON`] for float levels).
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`].
pub fn landscape_report(instance: &IsingInstance) -> Result<LandscapeReport, LandscapeError> {
    landscape_report_with_epsilon(instance, DEFAULT_LEVEL_EPSILON)
}

/// Every local minimum with its depth (convenience wrapper).
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`].
pub fn find_local_minima(instance: &IsingInstance) -> Result<Vec<LocalMinimum>, LandscapeError> {
    Ok(landscape_report(instance)?.local_minima)
}

/// The maximal escape depth over non-ground local minima (convenience
/// wrapper).
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`].
pub fn gamma_star(instance: &IsingInstance) -> Result<f64, LandscapeError> {
    Ok(landscape_report(instance)?.gamma_star)
}

// ---------------------------------------------------------------------------
// Reachability and cups
// ---------------------------------------------------------------------------

/// Whether `to` is reachable from `from` through states of energy at most
/// `height` (raw energies, no level grouping; `from` and `to` must
/// themselves fit under the height, else `Ok(false)`).
///
/// # Errors
///
/// Fails when `n >` [`MAX_LANDSCAPE_VERTICES`].
///
/// # Panics
///
/// Panics if either configuration's length differs from the instance size.
pub fn reachable_at_height(
    instance: &IsingInstance,
    from: &SpinConfiguration,
    to: &SpinConfiguration,
    height: f64,
) -> Result<bool, LandscapeError> {
    let n = instance.vertex_count();
    check_size("reachable_at_height", n, MAX_LANDSCAPE_VERTICES)?;
    assert_eq!(from.len(), n, "`from` has wrong length");
    assert_eq!(to.len(), n, "`to` has wrong length");

    let energies = state_energies(instance)?;
    let start = from.rank() as usize;
    let goal = to.rank() as usize;
    if energies[start] > height || energies[goal] > height {
        return Ok(false);
    }
    if start == goal {
        return Ok(true);
    }
    let states = 1usize << n;
    let mut visited = vec![false; states];
    let mut queue = VecDeque::new();
    visited[start] = true;
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        for b in 0..n {
            let neighbor = s ^ (1usize << b);
            if visited[neighbor] || energies[neighbor] > height {
                continue;
            }
            if neighbor == goal {
                return Ok(true);
            }
            visited[neighbor] = true;
            queue.push_back(neighbor);
        }
    }
    Ok(false)
}

/// The connected component of `{H ≤ height}` containing `sigma`, with its
/// bottom states and cheapest exit ridge.
///
/// # Errors
///
/// Fails when `n >` [`MAX_CUP_VERTICES`], or when `sigma` itself lies above
/// the height.
///
/// # Panics
///
/// Panics if `sigma`'s length differs from the instance size.
pub fn cup_of(
    instance: &IsingInstance,
    sigma: &SpinConfiguration,
    height: f64,
) -> Result<Cup, LandscapeError> {
    let n = instance.vertex_count();
    check_size("cup_of", n, MAX_CUP_VERTICES)?;
    assert_eq!(sigma.len(), n, "configuration has wrong length");

    let energies = state_energies(instance)?;
    let start = sigma.rank() as usize;
    if energies[start] > height {
        return Err(LandscapeError::StartAboveHeight {
            energy: energies[start],
            height,
        });
    }

    let states = 1usize << n;
    let mut member = vec![false; states];
    let mut queue = VecDeque::new();
    member[start] = true;
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        for b in 0..n {
            let neighbor = s ^ (1usize << b);
            if !member[neighbor] && energies[neighbor] <= height {
                member[neighbor] = true;
                queue.push_back(neighbor);
            }
        }
    }

    let members: Vec<u64> = (0..states)
        .filter(|&s| member[s])
        .map(|s| s as u64)
        .collect();
    let bottom_energy = members
        .iter()
        .map(|&s| energies[s as usize])
        .fold(f64::INFINITY, f64::min);
    let bottom: Vec<u64> = members
        .iter()
        .copied()
        .filter(|&s| energies[s as usize] == bottom_energy)
        .collect();

    let mut exit_energy: Option<f64> = None;
    for &s in &members {
        for b in 0..n {
            let neighbor = (s as usize) ^ (1usize << b);
            if member[neighbor] {
                continue;
            }
            let e = energies[neighbor];
            exit_energy = Some(match exit_energy {
                Some(best) => best.min(e),
                None => e,
            });
        }
    }
    let depth = exit_energy.map(|e| e - bottom_energy);

    Ok(Cup {
        height,
        members,
        bottom_energy,
        bottom,
        exit_energy,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Four-vertex chain with one strict trap: couplings 2, 2, -2 along the
    /// chain and a field of 1 on vertex 0.  Unique ground state at rank 7
    /// (energy -7); strict local minimum at rank 8 (energy -5, depth 2).
    fn double_well() -> IsingInstance {
        IsingInstance::new(
            4,
            &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, -2.0)],
            &[1.0, 0.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn state_energies_match_direct_evaluation() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 + (seed as usize % 7);
            let instance = IsingInstance::random_integer(n, 0.5, 4, &mut rng);
            assert!(instance.is_integer_valued());
            let table = state_energies(&instance).unwrap();
            for rank in 0..(1u64 << n) {
                let direct = instance.energy(&SpinConfiguration::from_rank(n, rank));
                assert_eq!(table[rank as usize], direct, "seed {seed} rank {rank}");
            }
        }
    }

    #[test]
    fn double_well_energy_table_is_exact() {
        let expected = [
            -1.0, 1.0, 7.0, 1.0, -1.0, 1.0, -1.0, -7.0, -5.0, -3.0, 3.0, -3.0, 3.0, 5.0, 3.0,
            -3.0,
        ];
        assert_eq!(state_energies(&double_well()).unwrap(), expected);
    }

    #[test]
    fn double_well_report_has_one_trap_of_depth_two() {
        let report = landscape_report(&double_well()).unwrap();
        assert_eq!(report.ground_energy, -7.0);
        assert_eq!(report.ground_states, vec![7]);
        assert_eq!(report.gamma_star, 2.0);
        assert_eq!(report.level_epsilon, None); // exact integer analysis
        assert!(report.suspect_level_gaps.is_empty());
        assert_eq!(
            report.local_minima,
            vec![
                LocalMinimum { rank: 7, energy: -7.0, depth: None },
                LocalMinimum { rank: 8, energy: -5.0, depth: Some(2.0) },
            ]
        );
    }

    #[test]
    fn spectator_vertex_doubles_every_minimum_into_a_plateau() {
        // same double well plus a fifth uncoupled, field-free vertex: each
        // minimum becomes a two-state plateau at the same depth
        let instance = IsingInstance::new(
            5,
            &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, -2.0)],
            &[1.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.ground_states, vec![7, 23]);
        assert_eq!(report.gamma_star, 2.0);
        let trap: Vec<_> = report
            .local_minima
            .iter()
            .filter(|m| !m.is_ground())
            .collect();
        assert_eq!(trap.len(), 2);
        for m in trap {
            assert!(m.rank == 8 || m.rank == 24);
            assert_eq!(m.energy, -5.0);
            assert_eq!(m.depth, Some(2.0));
        }
    }

    #[test]
    fn ferromagnetic_pair_has_two_ground_states_and_no_traps() {
        let instance = IsingInstance::new(2, &[(0, 1, 1.0)], &[0.0, 0.0]).unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.ground_states, vec![0, 3]);
        assert_eq!(report.gamma_star, 0.0);
        assert!(report.local_minima.iter().all(|m| m.is_ground()));
    }

    #[test]
    fn frustrated_triangle_has_six_ground_states() {
        let instance = IsingInstance::new(
            3,
            &[(0, 1, -1.0), (0, 2, -1.0), (1, 2, -1.0)],
            &[0.0; 3],
        )
        .unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.ground_energy, -1.0);
        assert_eq!(report.ground_states.len(), 6);
        assert_eq!(report.local_minima.len(), 6);
        assert_eq!(report.gamma_star, 0.0);
    }

    #[test]
    fn flat_landscape_is_all_ground() {
        let instance = IsingInstance::field_only(&[0.0; 3]).unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.ground_states.len(), 8);
        assert_eq!(report.gamma_star, 0.0);
        assert_eq!(report.level_count, 1);
    }

    #[test]
    fn disconnected_ground_plateaus_both_survive() {
        // strong pair + free vertex: ground plateaus {0,4} and {3,7} merge
        // only above the ground level and must both be reported
        let instance = IsingInstance::new(3, &[(0, 1, 2.0)], &[0.0; 3]).unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.ground_states, vec![0, 3, 4, 7]);
        assert_eq!(report.gamma_star, 0.0);
    }

    #[test]
    fn reachability_respects_the_barrier() {
        let instance = double_well();
        let trap = SpinConfiguration::from_rank(4, 8);
        let ground = SpinConfiguration::from_rank(4, 7);
        // the cheapest path out of the trap tops out at energy -3
        assert!(reachable_at_height(&instance, &trap, &ground, -3.0).unwrap());
        assert!(!reachable_at_height(&instance, &trap, &ground, -4.0).unwrap());
        // reflexivity and the above-height guard
        assert!(reachable_at_height(&instance, &trap, &trap, -5.0).unwrap());
        assert!(!reachable_at_height(&instance, &trap, &trap, -6.0).unwrap());
        let high = SpinConfiguration::from_rank(4, 2); // energy 7
        assert!(!reachable_at_height(&instance, &high, &ground, 5.0).unwrap());
        assert!(!reachable_at_height(&instance, &ground, &high, 5.0).unwrap());
    }

    #[test]
    fn cup_below_the_ridge_is_the_trap_alone() {
        let instance = double_well();
        let trap = SpinConfiguration::from_rank(4, 8);
        let cup = cup_of(&instance, &trap, -4.0).unwrap();
        assert_eq!(cup.members, vec![8]);
        assert_eq!(cup.bottom, vec![8]);
        assert_eq!(cup.bottom_energy, -5.0);
        assert_eq!(cup.exit_energy, Some(-3.0));
        assert_eq!(cup.depth, Some(2.0));
    }

    #[test]
    fn cup_at_the_ridge_spans_both_wells() {
        let instance = double_well();
        let trap = SpinConfiguration::from_rank(4, 8);
        let cup = cup_of(&instance, &trap, -3.0).unwrap();
        assert_eq!(cup.members, vec![7, 8, 9, 11, 15]);
        assert_eq!(cup.bottom, vec![7]);
        assert_eq!(cup.bottom_energy, -7.0);
        assert_eq!(cup.exit_energy, Some(-1.0));
        assert_eq!(cup.depth, Some(6.0));
    }

    #[test]
    fn cup_of_everything_has_no_exit() {
        let instance = double_well();
        let any = SpinConfiguration::from_rank(4, 0);
        let cup = cup_of(&instance, &any, 100.0).unwrap();
        assert_eq!(cup.members.len(), 16);
        assert_eq!(cup.exit_energy, None);
        assert_eq!(cup.depth, None);
        assert_eq!(cup.bottom, vec![7]);

        assert!(matches!(
            cup_of(&instance, &SpinConfiguration::from_rank(4, 2), 5.0),
            Err(LandscapeError::StartAboveHeight { energy, height })
                if energy == 7.0 && height == 5.0
        ));
    }

    #[test]
    fn near_degenerate_float_levels_are_flagged() {
        // two levels 5e-9 apart: distinct at the default tolerance, but
        // within the 10x warning band
        let instance = IsingInstance::field_only(&[2.5e-9]).unwrap();
        let report = landscape_report(&instance).unwrap();
        assert_eq!(report.level_count, 2);
        assert_eq!(report.ground_states, vec![1]);
        assert_eq!(report.suspect_level_gaps, vec![[-2.5e-9, 2.5e-9]]);
        assert_eq!(report.gamma_star, 0.0);

        // a coarser tolerance merges them into one flat level
        let coarse = landscape_report_with_epsilon(&instance, 1e-8).unwrap();
        assert_eq!(coarse.level_count, 1);
        assert_eq!(coarse.ground_states, vec![0, 1]);
        assert!(coarse.suspect_level_gaps.is_empty());
    }

    #[test]
    fn size_caps_and_bad_epsilon_are_rejected() {
        let too_big = IsingInstance::field_only(&vec![0.0; MAX_LANDSCAPE_VERTICES + 1]).unwrap();
        assert!(matches!(
            landscape_report(&too_big),
            Err(LandscapeError::TooManyVertices { .. })
        ));
        let cup_big = IsingInstance::field_only(&vec![0.0; MAX_CUP_VERTICES + 1]).unwrap();
        assert!(matches!(
            cup_of(&cup_big, &SpinConfiguration::all_up(MAX_CUP_VERTICES + 1), 100.0),
            Err(LandscapeError::TooManyVertices { .. })
        ));
        let small = IsingInstance::field_only(&[0.0]).unwrap();
        assert!(matches!(
            landscape_report_with_epsilon(&small, f64::NAN),
            Err(LandscapeError::BadEpsilon { .. })
        ));
        assert!(matches!(
            landscape_report_with_epsilon(&small, -1.0),
            Err(LandscapeError::BadEpsilon { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Scaling every coupling and field by a power of two scales every
        /// depth (and γ*) by exactly that factor: the analysis depends only
        /// on the energy order, and dyadic scaling is exact in floats.
        #[test]
        fn prop_depths_scale_exactly_with_dyadic_scaling(
            seed in 0u64..1000,
            n in 2usize..=6,
            exponent in -2i32..=2,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let instance = IsingInstance::random_integer(n, 0.6, 3, &mut rng);
            let factor = 2.0f64.powi(exponent);
            let scaled_edges: Vec<(usize, usize, f64)> = instance
                .edges()
                .iter()
                .map(|&(x, y, j)| (x, y, j * factor))
                .collect();
            let scaled_fields: Vec<f64> =
                instance.fields().iter().map(|h| h * factor).collect();
            let scaled = IsingInstance::new(n, &scaled_edges, &scaled_fields).unwrap();

            let base = landscape_report(&instance).unwrap();
            let report = landscape_report(&scaled).unwrap();
            prop_assert_eq!(&report.ground_states, &base.ground_states);
            prop_assert_eq!(report.gamma_star, base.gamma_star * factor);
            prop_assert_eq!(report.local_minima.len(), base.local_minima.len());
            for (s, b) in report.local_minima.iter().zip(&base.local_minima) {
                prop_assert_eq!(s.rank, b.rank);
                prop_assert_eq!(s.energy, b.energy * factor);
                prop_assert_eq!(s.depth, b.depth.map(|d| d * factor));
            }
        }
    }
}
