//! The keysum-only, 3-hash invertible Bloom lookup table: n cells of w-bit
//! XOR sums, round-based peeling with deduplicating queues and a hard limit
//! of 2n toggle steps.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::FieldParams2;
use crate::hashing::{index_set, HashSeeds};

/// Peelability threshold for 3-hash tables, c3 = 1.22179, in millionths.
pub const C3_MICRO: u64 = 1_221_790;

/// Default headroom over the threshold, epsilon = 0.1, in thousandths.
pub const DEFAULT_EPS_MILLI: u16 = 100;

/// Table size for capacity D: n = ceil((c3 + eps) * D), with eps supplied in
/// thousandths to keep the mapping exact in integers.
pub fn cells_for_capacity(d: u64, eps_milli: u16) -> u64 {
    let factor_micro = C3_MICRO + eps_milli as u64 * 1_000;
    (d * factor_micro + 999_999) / 1_000_000
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iblt {
    cells: Vec<u64>,
    field: FieldParams2,
    seeds: HashSeeds,
}

/// What `decode` returned: the peeled keys plus how the run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub recovered: BTreeSet<u64>,
    pub steps: u64,
    pub timed_out: bool,
    pub residual_nonzero: bool,
}

impl Iblt {
    pub fn new(n: usize, field: FieldParams2, seeds: HashSeeds) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("table must have at least one cell".into()));
        }
        Ok(Self {
            cells: vec![0; n],
            field,
            seeds,
        })
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn field(&self) -> &FieldParams2 {
        &self.field
    }

    pub fn seeds(&self) -> &HashSeeds {
        &self.seeds
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub(crate) fn from_cells(
        cells: Vec<u64>,
        field: FieldParams2,
        seeds: HashSeeds,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Format("table must have at least one cell".into()));
        }
        if cells.iter().any(|&c| c > field.max_element()) {
            return Err(Error::Format("cell value exceeds key width".into()));
        }
        Ok(Self {
            cells,
            field,
            seeds,
        })
    }

    pub fn is_empty_state(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    fn check_key(&self, x: u64) -> Result<()> {
        if x == 0 {
            return Err(Error::KeyZero);
        }
        if x > self.field.max_element() {
            return Err(Error::Range(format!(
                "key {x} exceeds the universe 2^{} - 1",
                self.field.width()
            )));
        }
        Ok(())
    }

    /// Insert-or-delete: XOR x into every cell of h(x).
    pub fn toggle(&mut self, x: u64) -> Result<()> {
        self.check_key(x)?;
        for i in index_set(x, self.cells.len(), &self.seeds) {
            self.cells[i] ^= x;
        }
        Ok(())
    }

    /// Cell-wise XOR; stores the symmetric difference of the operands' sets.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.cells.len() != other.cells.len()
            || self.field != other.field
            || self.seeds != other.seeds
        {
            return Err(Error::IncompatibleSketch(
                "tables differ in size, key width, or hash seeds".into(),
            ));
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            cells,
            field: self.field,
            seeds: self.seeds,
        })
    }

    /// A[i] != 0 and i in h(A[i]): the cell plausibly holds a single key.
    pub fn looks_pure(&self, i: usize) -> bool {
        let v = self.cells[i];
        v != 0 && index_set(v, self.cells.len(), &self.seeds).contains(&i)
    }

    /// Round-based peeling. Q and Q_next deduplicate; each round's queue is
    /// drained in ascending cell order; purity is re-checked on removal since
    /// earlier toggles in the round may have changed the cell. Every toggle
    /// counts one step against the limit t_max = 2n. The table is left
    /// holding S (symmetric difference) S_dec.
    pub fn decode(&mut self) -> DecodeOutcome {
        let n = self.cells.len();
        let t_max = 2 * n as u64;
        // Chronological toggle log; S_dec is its odd-multiplicity fold,
        // computed once at the end (cheaper than per-step set updates).
        let mut toggles: Vec<u64> = Vec::new();
        let mut steps = 0u64;

        let fold = |mut toggles: Vec<u64>| -> BTreeSet<u64> {
            toggles.sort_unstable();
            let mut out = BTreeSet::new();
            let mut i = 0;
            while i < toggles.len() {
                let j = i;
                while i < toggles.len() && toggles[i] == toggles[j] {
                    i += 1;
                }
                if (i - j) % 2 == 1 {
                    out.insert(toggles[j]);
                }
            }
            out
        };

        let mut queue: Vec<usize> = (0..n).filter(|&i| self.looks_pure(i)).collect();
        let mut in_next = vec![false; n];

        while !queue.is_empty() {
            // Snapshot semantics: a queued cell is only processed this round
            // if it is already pure when the round begins; cells that turn
            // pure mid-round wait for the next one.
            queue.retain(|&i| self.looks_pure(i));
            let mut next: Vec<usize> = Vec::new();
            for &i in &queue {
                if !self.looks_pure(i) {
                    continue;
                }
                let x = self.cells[i];
                let h = index_set(x, n, &self.seeds);
                for &j in &h {
                    self.cells[j] ^= x;
                }
                toggles.push(x);
                for &j in &h {
                    if !in_next[j] && self.looks_pure(j) {
                        in_next[j] = true;
                        next.push(j);
                    }
                }
                steps += 1;
                if steps >= t_max {
                    return DecodeOutcome {
                        recovered: fold(toggles),
                        steps,
                        timed_out: true,
                        residual_nonzero: !self.is_empty_state(),
                    };
                }
            }
            next.sort_unstable();
            for &j in &next {
                in_next[j] = false;
            }
            queue = next;
        }

        DecodeOutcome {
            recovered: fold(toggles),
            steps,
            timed_out: false,
            residual_nonzero: !self.is_empty_state(),
        }
    }
}
