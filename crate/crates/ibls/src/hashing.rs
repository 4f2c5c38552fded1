//! Seeded hash functions replacing the idealized random h1,h2,h3 : U -> [n]
//! and the checksum hash h : U -> 2^r. All of them are a single 64-bit
//! avalanche mixer (the splitmix64 finalizer) keyed by a per-function seed.

use crate::error::{Error, Result};

/// splitmix64's output finalizer, keyed by folding the seed into the input.
#[inline]
pub fn mix64(seed: u64, x: u64) -> u64 {
    let mut z = x.wrapping_add(seed).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default master seed for sketches created without an explicit seed.
pub const DEFAULT_MASTER_SEED: u64 = 0x1B15_5EED_0000_0001;

/// One seed per index hash plus one for the checksum hash. Both parties must
/// use identical seeds for their sketches to be combinable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashSeeds {
    pub index: [u64; 3],
    pub checksum: u64,
}

impl HashSeeds {
    /// Derives the four seeds from a master seed via a splitmix-style chain,
    /// re-rolling until the three index seeds are pairwise distinct.
    pub fn from_master(master: u64) -> Self {
        let mut state = master;
        let mut next = || {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            mix64(0, state)
        };
        let checksum = next();
        let mut index = [next(), next(), next()];
        while index[0] == index[1] || index[0] == index[2] || index[1] == index[2] {
            index = [next(), next(), next()];
        }
        Self { index, checksum }
    }

    pub fn new(index: [u64; 3], checksum: u64) -> Result<Self> {
        if index[0] == index[1] || index[0] == index[2] || index[1] == index[2] {
            return Err(Error::Range("index seeds must be pairwise distinct".into()));
        }
        Ok(Self { index, checksum })
    }
}

impl Default for HashSeeds {
    fn default() -> Self {
        Self::from_master(DEFAULT_MASTER_SEED)
    }
}

/// Deduplicated, ascending set of at most three cell indices. Stored inline
/// so the hot decode loop never allocates.
#[derive(Debug, Clone, Copy, Eq)]
pub struct IndexSet {
    idx: [usize; 3],
    len: u8,
}

impl IndexSet {
    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.idx[..self.len as usize]
    }
}

impl std::ops::Deref for IndexSet {
    type Target = [usize];
    #[inline]
    fn deref(&self) -> &[usize] {
        self.as_slice()
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.as_slice() == other.as_slice()
    }
}

impl IntoIterator for IndexSet {
    type Item = usize;
    type IntoIter = std::iter::Take<std::array::IntoIter<usize, 3>>;
    #[inline]
    fn into_iter(self) -> Self::IntoIter {
        self.idx.into_iter().take(self.len as usize)
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;
    #[inline]
    fn into_iter(self) -> Self::IntoIter {
        self.as_slice().iter()
    }
}

/// h(x) = {h1(x), h2(x), h3(x)} as a deduplicated set of cell indices,
/// returned in ascending order.
#[inline]
pub fn index_set(x: u64, n: usize, seeds: &HashSeeds) -> IndexSet {
    debug_assert!(x != 0 && n >= 1);
    let mut idx = [0usize; 3];
    let mut len = 0u8;
    for &s in &seeds.index {
        let i = (mix64(s, x) % n as u64) as usize;
        if !idx[..len as usize].contains(&i) {
            idx[len as usize] = i;
            len += 1;
        }
    }
    idx[..len as usize].sort_unstable();
    IndexSet { idx, len }
}

/// The low r bits of the mixed key: h : U -> 2^r of the checksum sidecar.
pub fn checksum_hash(x: u64, r: u32, seed: u64) -> Result<u64> {
    if r == 0 || r > 64 {
        return Err(Error::Range(format!("checksum width r={r} not in 1..=64")));
    }
    let v = mix64(seed, x);
    Ok(if r == 64 { v } else { v & ((1u64 << r) - 1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_bucket_and_determinism() {
        let seeds = HashSeeds::default();
        assert_eq!(index_set(42, 1, &seeds).as_slice(), &[0]);
        assert_eq!(index_set(42, 97, &seeds), index_set(42, 97, &seeds));
        assert_eq!(
            checksum_hash(42, 16, seeds.checksum).unwrap(),
            checksum_hash(42, 16, seeds.checksum).unwrap()
        );
    }

    #[test]
    fn index_set_size_and_range() {
        let seeds = HashSeeds::default();
        for x in 1..2000u64 {
            let s = index_set(x, 13, &seeds);
            assert!(!s.is_empty() && s.len() <= 3);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 13));
        }
    }

    #[test]
    fn bucket_loads_uniform_chi_square() {
        // 10^5 keys into n=1024 buckets, 3 indices each (minus dedup losses):
        // per-bucket mean ~293, sd ~17. Require every bucket within 5 sigma.
        let seeds = HashSeeds::default();
        let n = 1024usize;
        let mut loads = vec![0u64; n];
        let mut total = 0u64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let x = rng.gen_range(1..=u64::MAX);
            for i in index_set(x, n, &seeds) {
                loads[i] += 1;
                total += 1;
            }
        }
        let mean = total as f64 / n as f64;
        let sd = (mean * (1.0 - 1.0 / n as f64)).sqrt();
        for &l in &loads {
            assert!(
                (l as f64 - mean).abs() < 5.0 * sd,
                "bucket load {l} deviates from mean {mean:.1} by over 5 sigma"
            );
        }
    }

    #[test]
    fn checksum_collision_rate_birthday() {
        // 10^4 distinct keys at r=16: expected colliding pairs
        // C(10^4,2)/2^16 ~ 763. Accept within 3x either way.
        let seeds = HashSeeds::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut keys = std::collections::HashSet::new();
        while keys.len() < 10_000 {
            keys.insert(rng.gen_range(1..=u64::MAX));
        }
        let hashes: Vec<u64> = keys
            .iter()
            .map(|&x| checksum_hash(x, 16, seeds.checksum).unwrap())
            .collect();
        let mut counts = std::collections::HashMap::new();
        for h in hashes {
            *counts.entry(h).or_insert(0u64) += 1;
        }
        let pairs: u64 = counts.values().map(|&c| c * (c - 1) / 2).sum();
        let expected = 10_000.0f64 * 9_999.0 / 2.0 / 65_536.0;
        assert!(
            (pairs as f64) < 3.0 * expected && (pairs as f64) > expected / 3.0,
            "collision pairs {pairs} vs expected {expected:.0}"
        );
    }

    #[test]
    fn checksum_range_and_errors() {
        let seeds = HashSeeds::default();
        for x in 1..100u64 {
            assert!(checksum_hash(x, 1, seeds.checksum).unwrap() <= 1);
        }
        assert!(checksum_hash(1, 0, 0).is_err());
        assert!(checksum_hash(1, 65, 0).is_err());
        assert_eq!(checksum_hash(1, 64, 5).unwrap(), mix64(5, 1));
    }

    #[test]
    fn derived_seeds_distinct() {
        for master in 0..50u64 {
            let s = HashSeeds::from_master(master);
            assert!(s.index[0] != s.index[1] && s.index[1] != s.index[2]);
        }
        assert!(HashSeeds::new([1, 1, 2], 0).is_err());
    }
}
