//! Ising problem instances, packed spin configurations, and the incremental
//! local-field machinery shared by every sampler in this crate.
//!
//! Conventions (frozen — everything else in the workspace relies on them):
//!
//! * A configuration assigns each vertex `x` a spin `σ_x ∈ {-1, +1}`.
//! * The energy of a configuration is
//!   `H(σ) = -Σ_{x<y} J[x][y]·σ_x·σ_y - Σ_x h[x]·σ_x`,
//!   with each coupled pair counted once.  Positive couplings favour aligned
//!   spins, positive fields favour spin `+1`.
//! * Configurations are numbered by packing spins into bits, vertex 0 in the
//!   least significant bit, with bit `i = (σ_i + 1) / 2` (bit set ⇔ spin up).
//!   This numbering is used for transition-matrix indices, landscape reports,
//!   and state histograms in serialized output.
//! * The *cavity field* at vertex `x` is `h̃_x(σ) = Σ_y J[x][y]·σ_y + h[x]`;
//!   the energy cost of flipping `x` is `E_x(σ) = H(σ^x) - H(σ) = 2·h̃_x(σ)·σ_x`
//!   where `σ^x` is `σ` with spin `x` reversed.  Flipping `x` changes the
//!   cavity field of each neighbour `y` by `2·J[x][y]·σ^x_x` and leaves
//!   `h̃_x` itself unchanged; [`CavityCache`] maintains exactly this update.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Couplings and fields with magnitude at most this and zero fractional part
/// are treated as exact integers, enabling the exact-arithmetic energy path.
/// The bound leaves headroom so that any instance sum `Σ|J| + Σ|h|` over a
/// few hundred terms still fits in the 53-bit exact range of `f64`/`i64`.
pub const MAX_INTEGER_MAGNITUDE: f64 = (1u64 << 40) as f64;

/// Errors raised while assembling or addressing an [`IsingInstance`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    /// The vertex set must be nonempty.
    #[error("instance must have at least one vertex")]
    NoVertices,
    /// A coupling or field referenced a vertex `>= n`.
    #[error("vertex {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    /// Couplings `J[x][x]` are not representable; a diagonal term is an
    /// additive constant and must be dropped by the caller instead.
    #[error("self-coupling on vertex {vertex} is not allowed")]
    SelfCoupling { vertex: usize },
    /// The same unordered pair appeared twice in the coupling list.
    #[error("duplicate coupling for pair ({x}, {y})")]
    DuplicateCoupling { x: usize, y: usize },
    /// The field vector length disagrees with the vertex count.
    #[error("field vector has length {got}, expected {expected}")]
    FieldLength { got: usize, expected: usize },
    /// Couplings and fields must be finite.
    #[error("non-finite value {what} = {value}")]
    NonFinite { what: String, value: f64 },
    /// Spins are encoded as `+1` / `-1` only.
    #[error("spin value must be +1 or -1, got {value} at position {index}")]
    BadSpinValue { value: i8, index: usize },
}

// ---------------------------------------------------------------------------
// Spin configurations
// ---------------------------------------------------------------------------

/// A fixed-length assignment of `{-1, +1}` spins, packed 64 per word.
///
/// Equality and hashing are by value, so configurations can key histograms.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SpinConfiguration {
    n: usize,
    words: Vec<u64>,
}

impl SpinConfiguration {
    fn with_words(n: usize, words: Vec<u64>) -> Self {
        SpinConfiguration { n, words }
    }

    fn word_count(n: usize) -> usize {
        n.div_ceil(64)
    }

    /// All spins `+1`.
    pub fn all_up(n: usize) -> Self {
        let mut words = vec![u64::MAX; Self::word_count(n)];
        if n % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        Self::with_words(n, words)
    }

    /// All spins `-1`.
    pub fn all_down(n: usize) -> Self {
        Self::with_words(n, vec![0; Self::word_count(n)])
    }

    /// Builds a configuration from explicit `+1` / `-1` values.
    pub fn from_signs(signs: &[i8]) -> Result<Self, InstanceError> {
        let mut cfg = Self::all_down(signs.len());
        for (index, &value) in signs.iter().enumerate() {
            match value {
                1 => cfg.set_bit(index, true),
                -1 => {}
                _ => return Err(InstanceError::BadSpinValue { value, index }),
            }
        }
        Ok(cfg)
    }

    /// Draws each spin independently and uniformly, vertex 0 first.
    ///
    /// The draw order (one `bool` per vertex, ascending index) is part of the
    /// reproducibility contract: a seeded generator always yields the same
    /// configuration.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut cfg = Self::all_down(n);
        for x in 0..n {
            if rng.random_bool(0.5) {
                cfg.set_bit(x, true);
            }
        }
        cfg
    }

    /// Decodes a configuration index (see the module docs for the bit layout).
    ///
    /// # Panics
    ///
    /// Panics if `n > 64` or if `rank` has bits above position `n - 1`.
    pub fn from_rank(n: usize, rank: u64) -> Self {
        assert!(n <= 64, "rank encoding supports at most 64 vertices, got {n}");
        if n < 64 {
            assert!(
                rank < (1u64 << n),
                "rank {rank} out of range for {n} vertices"
            );
        }
        let mut cfg = Self::all_down(n);
        if !cfg.words.is_empty() {
            cfg.words[0] = rank;
        }
        cfg
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the configuration has no vertices.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn bit(&self, x: usize) -> bool {
        self.words[x / 64] >> (x % 64) & 1 == 1
    }

    fn set_bit(&mut self, x: usize, up: bool) {
        let mask = 1u64 << (x % 64);
        if up {
            self.words[x / 64] |= mask;
        } else {
            self.words[x / 64] &= !mask;
        }
    }

    /// The spin at vertex `x`, as `+1` or `-1`.
    ///
    /// # Panics
    ///
    /// Panics if `x >= len()`.
    pub fn spin(&self, x: usize) -> i8 {
        assert!(x < self.n, "vertex {x} out of range (n = {})", self.n);
        if self.bit(x) {
            1
        } else {
            -1
        }
    }

    /// The spin at vertex `x` as a float factor (`+1.0` or `-1.0`).
    pub fn spin_f64(&self, x: usize) -> f64 {
        f64::from(self.spin(x))
    }

    /// Reverses the spin at vertex `x`.
    ///
    /// # Panics
    ///
    /// Panics if `x >= len()`.
    pub fn flip(&mut self, x: usize) {
        assert!(x < self.n, "vertex {x} out of range (n = {})", self.n);
        self.words[x / 64] ^= 1u64 << (x % 64);
    }

    /// Returns a copy with the spin at `x` reversed.
    pub fn flipped(&self, x: usize) -> Self {
        let mut copy = self.clone();
        copy.flip(x);
        copy
    }

    /// Encodes the configuration as an index (see the module docs).
    ///
    /// # Panics
    ///
    /// Panics if `len() > 64`.
    pub fn rank(&self) -> u64 {
        assert!(
            self.n <= 64,
            "rank encoding supports at most 64 vertices, got {}",
            self.n
        );
        self.words.first().copied().unwrap_or(0)
    }

    /// The spins as a `+1` / `-1` vector.
    pub fn signs(&self) -> Vec<i8> {
        (0..self.n).map(|x| self.spin(x)).collect()
    }
}

impl fmt::Display for SpinConfiguration {
    /// Renders vertex 0 first, `+` for spin up and `-` for spin down.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.n {
            f.write_str(if self.bit(x) { "+" } else { "-" })?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// A validated Ising problem: symmetric pair couplings plus per-vertex fields.
///
/// Construction canonicalizes couplings to `x < y` order, rejects self-loops
/// and duplicate pairs, and precomputes an adjacency list so that cavity
/// fields and flip costs are `O(degree)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingInstance {
    n: usize,
    fields: Vec<f64>,
    /// Canonical coupling list, `x < y`, sorted lexicographically.
    edges: Vec<(usize, usize, f64)>,
    /// For each vertex, its coupled partners `(y, J[x][y])`, ascending `y`.
    adjacency: Vec<Vec<(usize, f64)>>,
    integer_valued: bool,
}

impl IsingInstance {
    /// Builds an instance from a coupling list and a field vector.
    ///
    /// `couplings` entries are `(x, y, J)` with `x != y`; orientation does not
    /// matter but each unordered pair may appear at most once.  Pairs left out
    /// have coupling zero.  `fields.len()` must equal `n`.
    ///
    /// # Errors
    ///
    /// Rejects empty vertex sets, out-of-range indices, self-couplings,
    /// duplicate pairs, wrong field length, and non-finite values.
    pub fn new(
        n: usize,
        couplings: &[(usize, usize, f64)],
        fields: &[f64],
    ) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::NoVertices);
        }
        if fields.len() != n {
            return Err(InstanceError::FieldLength {
                got: fields.len(),
                expected: n,
            });
        }
        for (x, &h) in fields.iter().enumerate() {
            if !h.is_finite() {
                return Err(InstanceError::NonFinite {
                    what: format!("h[{x}]"),
                    value: h,
                });
            }
        }

        let mut edges = Vec::with_capacity(couplings.len());
        let mut seen = HashSet::with_capacity(couplings.len());
        for &(x, y, j) in couplings {
            for index in [x, y] {
                if index >= n {
                    return Err(InstanceError::VertexOutOfRange { index, n });
                }
            }
            if x == y {
                return Err(InstanceError::SelfCoupling { vertex: x });
            }
            if !j.is_finite() {
                return Err(InstanceError::NonFinite {
                    what: format!("J[{x}][{y}]"),
                    value: j,
                });
            }
            let key = (x.min(y), x.max(y));
            if !seen.insert(key) {
                return Err(InstanceError::DuplicateCoupling { x: key.0, y: key.1 });
            }
            edges.push((key.0, key.1, j));
        }
        edges.sort_unstable_by_key(|&(x, y, _)| (x, y));

        let mut adjacency = vec![Vec::new(); n];
        for &(x, y, j) in &edges {
            adjacency[x].push((y, j));
            adjacency[y].push((x, j));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(y, _)| y);
        }

        let integer_valued = fields
            .iter()
            .chain(edges.iter().map(|(_, _, j)| j))
            .all(|&v| v.fract() == 0.0 && v.abs() <= MAX_INTEGER_MAGNITUDE);

        Ok(IsingInstance {
            n,
            fields: fields.to_vec(),
            edges,
            adjacency,
            integer_valued,
        })
    }

    /// An instance with fields only (all couplings zero).
    pub fn field_only(fields: &[f64]) -> Result<Self, InstanceError> {
        Self::new(fields.len(), &[], fields)
    }

    /// A path `0 - 1 - ... - n-1` with every coupling equal to `j` and no
    /// fields.
    pub fn ferromagnetic_path(n: usize, j: f64) -> Result<Self, InstanceError> {
        let couplings: Vec<_> = (1..n).map(|x| (x - 1, x, j)).collect();
        Self::new(n, &couplings, &vec![0.0; n])
    }

    /// A random instance: each pair is coupled with probability
    /// `edge_probability`, coupling strengths and fields drawn uniformly from
    /// `[-1, 1)`.
    ///
    /// Draw order is frozen (pairs in lexicographic order, then fields in
    /// vertex order), so a seeded generator reproduces the same instance.
    pub fn random<R: Rng + ?Sized>(n: usize, edge_probability: f64, rng: &mut R) -> Self {
        let mut couplings = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if rng.random_bool(edge_probability) {
                    couplings.push((x, y, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let fields: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::new(n, &couplings, &fields).expect("generated couplings are canonical")
    }

    /// Like [`IsingInstance::random`] but with integer couplings and fields in
    /// `[-max_magnitude, max_magnitude]`, yielding exact integer energies.
    pub fn random_integer<R: Rng + ?Sized>(
        n: usize,
        edge_probability: f64,
        max_magnitude: i64,
        rng: &mut R,
    ) -> Self {
        let mut couplings = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if rng.random_bool(edge_probability) {
                    let j = rng.random_range(-max_magnitude..=max_magnitude);
                    couplings.push((x, y, j as f64));
                }
            }
        }
        let fields: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-max_magnitude..=max_magnitude) as f64)
            .collect();
        Self::new(n, &couplings, &fields).expect("generated couplings are canonical")
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Per-vertex fields `h`.
    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Canonicalized couplings `(x, y, J)` with `x < y`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// The coupled partners of `x` as `(y, J[x][y])`, ascending `y`.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// The coupling `J[x][y]` (zero when the pair is uncoupled).
    pub fn coupling(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(v, _)| v)
            .map(|i| self.adjacency[x][i].1)
            .unwrap_or(0.0)
    }

    /// True when every coupling and field is an exact (moderate) integer, in
    /// which case [`IsingInstance::energy_int`] is available and exact.
    pub fn is_integer_valued(&self) -> bool {
        self.integer_valued
    }

    fn check_len(&self, sigma: &SpinConfiguration) {
        assert_eq!(
            sigma.len(),
            self.n,
            "configuration has {} spins, instance has {} vertices",
            sigma.len(),
            self.n
        );
    }

    /// The energy `H(σ)` (see the module docs for the sign convention).
    ///
    /// # Panics
    ///
    /// Panics if the configuration length disagrees with the vertex count.
    pub fn energy(&self, sigma: &SpinConfiguration) -> f64 {
        self.check_len(sigma);
        let mut total = 0.0;
        for &(x, y, j) in &self.edges {
            total -= j * sigma.spin_f64(x) * sigma.spin_f64(y);
        }
        for (x, &h) in self.fields.iter().enumerate() {
            total -= h * sigma.spin_f64(x);
        }
        total
    }

    /// The energy as an exact integer; `None` unless
    /// [`IsingInstance::is_integer_valued`].
    pub fn energy_int(&self, sigma: &SpinConfiguration) -> Option<i64> {
        if !self.integer_valued {
            return None;
        }
        self.check_len(sigma);
        let mut total = 0i64;
        for &(x, y, j) in &self.edges {
            total -= (j as i64) * i64::from(sigma.spin(x)) * i64::from(sigma.spin(y));
        }
        for (x, &h) in self.fields.iter().enumerate() {
            total -= (h as i64) * i64::from(sigma.spin(x));
        }
        Some(total)
    }

    /// The cavity field `h̃_x(σ) = Σ_y J[x][y]·σ_y + h[x]`.
    ///
    /// # Panics
    ///
    /// Panics on configuration-length mismatch or `x >= vertex_count()`.
    pub fn cavity_field(&self, sigma: &SpinConfiguration, x: usize) -> f64 {
        self.check_len(sigma);
        let mut field = self.fields[x];
        for &(y, j) in &self.adjacency[x] {
            field += j * sigma.spin_f64(y);
        }
        field
    }

    /// The single-flip energy cost `E_x(σ) = H(σ^x) - H(σ) = 2·h̃_x(σ)·σ_x`.
    ///
    /// # Panics
    ///
    /// Panics on configuration-length mismatch or `x >= vertex_count()`.
    pub fn energy_cost(&self, sigma: &SpinConfiguration, x: usize) -> f64 {
        2.0 * self.cavity_field(sigma, x) * sigma.spin_f64(x)
    }
}

// ---------------------------------------------------------------------------
// Cavity cache
// ---------------------------------------------------------------------------

/// All cavity fields of one configuration, kept current across flips.
///
/// A cache is *bound* to the `(instance, configuration)` pair it was built
/// from; after each accepted flip, call [`CavityCache::flip_update`] with the
/// **post-flip** configuration to rebind it.  Flip costs then come out in
/// `O(1)` and updates in `O(degree)` instead of `O(n)` per step.
#[derive(Clone, Debug)]
pub struct CavityCache {
    fields: Vec<f64>,
}

impl CavityCache {
    /// Computes every cavity field of `sigma` from scratch.
    pub fn new(instance: &IsingInstance, sigma: &SpinConfiguration) -> Self {
        let fields = (0..instance.vertex_count())
            .map(|x| instance.cavity_field(sigma, x))
            .collect();
        CavityCache { fields }
    }

    /// The cached cavity field `h̃_x`.
    pub fn value(&self, x: usize) -> f64 {
        self.fields[x]
    }

    /// All cached cavity fields, vertex order.
    pub fn as_slice(&self) -> &[f64] {
        &self.fields
    }

    /// The flip cost `E_x(σ) = 2·h̃_x(σ)·σ_x` for the bound configuration.
    pub fn energy_cost(&self, sigma: &SpinConfiguration, x: usize) -> f64 {
        2.0 * self.fields[x] * sigma.spin_f64(x)
    }

    /// Rebinds the cache after the spin at `x` was flipped.
    ///
    /// `sigma_after` must be the configuration **with the flip already
    /// applied**.  Only the neighbours of `x` are touched:
    /// `h̃_y += 2·J[x][y]·σ^x_x`; the field at `x` itself is unchanged.
    pub fn flip_update(
        &mut self,
        instance: &IsingInstance,
        sigma_after: &SpinConfiguration,
        x: usize,
    ) {
        let new_spin = sigma_after.spin_f64(x);
        for &(y, j) in instance.neighbors(x) {
            self.fields[y] += 2.0 * j * new_spin;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn two_spin_ferro(j: f64) -> IsingInstance {
        IsingInstance::new(2, &[(0, 1, j)], &[0.0, 0.0]).unwrap()
    }

    #[test]
    fn sign_encoding_is_frozen() {
        // bit i = (σ_i + 1)/2, vertex 0 in the least significant bit
        let cfg = SpinConfiguration::from_signs(&[-1, 1]).unwrap();
        assert_eq!(cfg.rank(), 2);
        assert_eq!(cfg.to_string(), "-+");
        let back = SpinConfiguration::from_rank(2, 2);
        assert_eq!(back, cfg);
        assert_eq!(back.signs(), vec![-1, 1]);
    }

    #[test]
    fn rank_roundtrip_exhaustive() {
        for n in 1..=6usize {
            for rank in 0..(1u64 << n) {
                let cfg = SpinConfiguration::from_rank(n, rank);
                assert_eq!(cfg.rank(), rank);
            }
        }
    }

    #[test]
    fn flip_twice_is_identity() {
        let mut cfg = SpinConfiguration::from_signs(&[1, -1, 1, 1, -1]).unwrap();
        let original = cfg.clone();
        cfg.flip(3);
        assert_ne!(cfg, original);
        cfg.flip(3);
        assert_eq!(cfg, original);
    }

    #[test]
    fn all_up_all_down_and_wide_configurations() {
        let up = SpinConfiguration::all_up(70);
        let down = SpinConfiguration::all_down(70);
        assert!((0..70).all(|x| up.spin(x) == 1));
        assert!((0..70).all(|x| down.spin(x) == -1));
        let mut cfg = down.clone();
        cfg.flip(69);
        assert_eq!(cfg.spin(69), 1);
        assert_eq!(cfg.spin(68), -1);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn spin_out_of_range_panics() {
        let cfg = SpinConfiguration::all_up(3);
        let _ = cfg.spin(3);
    }

    #[test]
    fn single_vertex_field_energy() {
        let inst = IsingInstance::field_only(&[1.0]).unwrap();
        let up = SpinConfiguration::all_up(1);
        let down = SpinConfiguration::all_down(1);
        assert_eq!(inst.energy(&up), -1.0);
        assert_eq!(inst.energy(&down), 1.0);
    }

    #[test]
    fn two_vertex_ferromagnet_energy() {
        let inst = two_spin_ferro(1.0);
        let aligned = SpinConfiguration::all_up(2);
        let opposed = SpinConfiguration::from_signs(&[1, -1]).unwrap();
        assert_eq!(inst.energy(&aligned), -1.0);
        assert_eq!(inst.energy(&opposed), 1.0);
    }

    #[test]
    fn flip_cost_matches_two_vertex_hand_value() {
        let inst = two_spin_ferro(1.0);
        let aligned = SpinConfiguration::all_up(2);
        assert_eq!(inst.energy_cost(&aligned, 0), 2.0);
        assert_eq!(inst.energy_cost(&aligned, 1), 2.0);
        let opposed = SpinConfiguration::from_signs(&[1, -1]).unwrap();
        assert_eq!(inst.energy_cost(&opposed, 0), -2.0);
        assert_eq!(inst.energy_cost(&opposed, 1), -2.0);
    }

    #[test]
    fn flip_cost_equals_energy_difference_exhaustively() {
        // every configuration and vertex of a handful of random instances
        for seed in 0..8u64 {
            let mut r = rng(seed);
            let n = 1 + (seed as usize % 5);
            let inst = IsingInstance::random(n, 0.6, &mut r);
            for rank in 0..(1u64 << n) {
                let sigma = SpinConfiguration::from_rank(n, rank);
                for x in 0..n {
                    let direct = inst.energy(&sigma.flipped(x)) - inst.energy(&sigma);
                    let cost = inst.energy_cost(&sigma, x);
                    assert!(
                        (direct - cost).abs() <= 1e-12,
                        "seed {seed} rank {rank} vertex {x}: {direct} vs {cost}"
                    );
                }
            }
        }
    }

    #[test]
    fn flip_cost_is_antisymmetric_under_its_own_flip() {
        let mut r = rng(42);
        let inst = IsingInstance::random(6, 0.5, &mut r);
        for rank in 0..(1u64 << 6) {
            let sigma = SpinConfiguration::from_rank(6, rank);
            for x in 0..6 {
                let forward = inst.energy_cost(&sigma, x);
                let backward = inst.energy_cost(&sigma.flipped(x), x);
                assert!((forward + backward).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cavity_cache_incremental_update_is_exact_on_small_instances() {
        for seed in 0..6u64 {
            let mut r = rng(100 + seed);
            let n = 2 + (seed as usize % 4);
            let inst = IsingInstance::random(n, 0.7, &mut r);
            for rank in 0..(1u64 << n) {
                for x in 0..n {
                    let mut sigma = SpinConfiguration::from_rank(n, rank);
                    let mut cache = CavityCache::new(&inst, &sigma);
                    sigma.flip(x);
                    cache.flip_update(&inst, &sigma, x);
                    let fresh = CavityCache::new(&inst, &sigma);
                    for v in 0..n {
                        assert!(
                            (cache.value(v) - fresh.value(v)).abs() <= 1e-12,
                            "seed {seed} rank {rank} flip {x} vertex {v}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cavity_cache_tracks_long_random_flip_sequences() {
        let mut r = rng(7);
        let inst = IsingInstance::random(16, 0.4, &mut r);
        let mut sigma = SpinConfiguration::random(16, &mut r);
        let mut cache = CavityCache::new(&inst, &sigma);
        for _ in 0..500 {
            let x = r.random_range(0..16);
            sigma.flip(x);
            cache.flip_update(&inst, &sigma, x);
        }
        let fresh = CavityCache::new(&inst, &sigma);
        for v in 0..16 {
            assert!((cache.value(v) - fresh.value(v)).abs() <= 1e-9);
        }
    }

    #[test]
    fn cavity_field_worked_example() {
        // two-vertex ferromagnet: h̃_1(++) = J, and after flipping vertex 0,
        // h̃_1(-+) = -J while h̃_0 is unchanged
        let inst = two_spin_ferro(1.5);
        let mut sigma = SpinConfiguration::all_up(2);
        let mut cache = CavityCache::new(&inst, &sigma);
        assert_eq!(cache.value(1), 1.5);
        sigma.flip(0);
        cache.flip_update(&inst, &sigma, 0);
        assert_eq!(cache.value(1), -1.5);
        assert_eq!(cache.value(0), 1.5);
    }

    #[test]
    fn integer_detection_and_exact_energy() {
        let int_inst = IsingInstance::new(3, &[(0, 1, 2.0), (1, 2, -3.0)], &[1.0, 0.0, -4.0])
            .unwrap();
        assert!(int_inst.is_integer_valued());
        let float_inst = IsingInstance::new(2, &[(0, 1, 0.5)], &[0.0, 0.0]).unwrap();
        assert!(!float_inst.is_integer_valued());
        assert_eq!(float_inst.energy_int(&SpinConfiguration::all_up(2)), None);

        for rank in 0..8u64 {
            let sigma = SpinConfiguration::from_rank(3, rank);
            let exact = int_inst.energy_int(&sigma).unwrap();
            assert_eq!(exact as f64, int_inst.energy(&sigma));
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            IsingInstance::new(0, &[], &[]),
            Err(InstanceError::NoVertices)
        );
        assert_eq!(
            IsingInstance::new(2, &[(0, 2, 1.0)], &[0.0, 0.0]),
            Err(InstanceError::VertexOutOfRange { index: 2, n: 2 })
        );
        assert_eq!(
            IsingInstance::new(2, &[(1, 1, 1.0)], &[0.0, 0.0]),
            Err(InstanceError::SelfCoupling { vertex: 1 })
        );
        // a reversed repeat of the same pair is still a duplicate
        assert_eq!(
            IsingInstance::new(3, &[(0, 1, 1.0), (1, 0, 2.0)], &[0.0; 3]),
            Err(InstanceError::DuplicateCoupling { x: 0, y: 1 })
        );
        assert_eq!(
            IsingInstance::new(2, &[], &[0.0]),
            Err(InstanceError::FieldLength { got: 1, expected: 2 })
        );
        assert!(matches!(
            IsingInstance::new(2, &[(0, 1, f64::NAN)], &[0.0, 0.0]),
            Err(InstanceError::NonFinite { .. })
        ));
        assert_eq!(
            SpinConfiguration::from_signs(&[1, 0, -1]),
            Err(InstanceError::BadSpinValue { value: 0, index: 1 })
        );
    }

    #[test]
    fn coupling_lookup() {
        let inst = IsingInstance::new(4, &[(2, 0, -1.25), (1, 2, 3.0)], &[0.0; 4]).unwrap();
        assert_eq!(inst.coupling(0, 2), -1.25);
        assert_eq!(inst.coupling(2, 0), -1.25);
        assert_eq!(inst.coupling(1, 2), 3.0);
        assert_eq!(inst.coupling(0, 3), 0.0);
        assert_eq!(inst.edges(), &[(0, 2, -1.25), (1, 2, 3.0)]);
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = IsingInstance::random(9, 0.5, &mut rng(11));
        let b = IsingInstance::random(9, 0.5, &mut rng(11));
        assert_eq!(a, b);
        let c = IsingInstance::random_integer(9, 0.5, 3, &mut rng(11));
        let d = IsingInstance::random_integer(9, 0.5, 3, &mut rng(11));
        assert_eq!(c, d);
        assert!(c.is_integer_valued());
    }

    #[test]
    #[should_panic(expected = "configuration has 3 spins")]
    fn energy_rejects_mismatched_configuration() {
        let inst = two_spin_ferro(1.0);
        let wrong = SpinConfiguration::all_up(3);
        let _ = inst.energy(&wrong);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_flip_cost_matches_energy_difference(seed in 0u64..1000, n in 1usize..9) {
            let mut r = rng(seed);
            let inst = IsingInstance::random(n, 0.5, &mut r);
            let sigma = SpinConfiguration::random(n, &mut r);
            let x = r.random_range(0..n);
            let direct = inst.energy(&sigma.flipped(x)) - inst.energy(&sigma);
            let cost = inst.energy_cost(&sigma, x);
            prop_assert!((direct - cost).abs() <= 1e-12);
        }

        #[test]
        fn prop_zero_field_energy_is_flip_symmetric(seed in 0u64..1000, n in 1usize..9) {
            let mut r = rng(seed);
            let mut inst = IsingInstance::random(n, 0.5, &mut r);
            inst = IsingInstance::new(n, inst.edges(), &vec![0.0; n]).unwrap();
            let sigma = SpinConfiguration::random(n, &mut r);
            let negated = SpinConfiguration::from_signs(
                &sigma.signs().iter().map(|s| -s).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert!((inst.energy(&sigma) - inst.energy(&negated)).abs() <= 1e-12);
        }
    }
}
