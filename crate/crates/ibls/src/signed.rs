//! The signed variant: ternary IBLT cells over Z_3^nu (one sign trit plus a
//! base-3 keysum), a wrap-around arithmetic checksum, and the ternary BCH
//! stash. The diff is oriented: keys only in the first set come out with
//! sign 1, keys only in the second with sign 2.

use std::collections::BTreeMap;

use crate::bch::TernaryBchSketch;
use crate::error::{Error, Result};
use crate::field::{pow3, FieldParams3, Gf3Vec};
use crate::hashing::{checksum_hash, index_set, HashSeeds};
use crate::iblt::cells_for_capacity;

/// Key -> sign trit (1 = first set's surplus, 2 = second's). A key never
/// maps to 0; canceled keys are simply absent.
pub type SignedSet = BTreeMap<u64, u8>;

/// Per-key sign addition in Z_3; keys whose signs sum to 0 cancel.
pub fn signed_sym_diff(a: &SignedSet, b: &SignedSet) -> SignedSet {
    let mut out = a.clone();
    for (&k, &s) in b {
        let merged = (out.get(&k).copied().unwrap_or(0) + s) % 3;
        if merged == 0 {
            out.remove(&k);
        } else {
            out.insert(k, merged);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedIblt {
    cells: Vec<Gf3Vec>,
    seeds: HashSeeds,
    nu: u8,      // trits per cell: 1 sign trit + (nu-1) keysum trits
    key_max: u64,
}

/// Outcome flags of a signed decode, mirroring the unsigned decoder's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDecodeOutcome {
    pub recovered: SignedSet,
    pub steps: u64,
    pub timed_out: bool,
    pub residual_nonzero: bool,
    /// Chronological (key, sign) toggle events, one per decoding step;
    /// exposes repeated reportings of the same key for diagnostics.
    pub events: Vec<(u64, u8)>,
}

impl SignedIblt {
    pub fn new(n: usize, key_width: u32, seeds: HashSeeds) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("table must have at least one cell".into()));
        }
        let m = FieldParams3::degree_for_key_width(key_width);
        Ok(Self {
            cells: vec![Gf3Vec::zero(m + 1); n],
            seeds,
            nu: m + 1,
            key_max: if key_width == 64 {
                u64::MAX
            } else {
                (1u64 << key_width) - 1
            },
        })
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn nu(&self) -> u8 {
        self.nu
    }

    pub fn key_max(&self) -> u64 {
        self.key_max
    }

    pub fn seeds(&self) -> &HashSeeds {
        &self.seeds
    }

    pub fn cells(&self) -> &[Gf3Vec] {
        &self.cells
    }

    pub(crate) fn from_cells(
        cells: Vec<Gf3Vec>,
        seeds: HashSeeds,
        nu: u8,
        key_max: u64,
    ) -> Result<Self> {
        if cells.is_empty() || cells.iter().any(|c| c.width() != nu) {
            return Err(Error::Format("bad signed cell array".into()));
        }
        Ok(Self {
            cells,
            seeds,
            nu,
            key_max,
        })
    }

    pub fn is_empty_state(&self) -> bool {
        self.cells.iter().all(|c| c.is_zero())
    }

    /// The cell contribution of key x with sign +: (1 || x-tilde).
    fn contribution(&self, x: u64) -> Result<Gf3Vec> {
        if x == 0 {
            return Err(Error::KeyZero);
        }
        if x > self.key_max {
            return Err(Error::Range(format!("key {x} exceeds the key universe")));
        }
        let enc = Gf3Vec::encode(x, self.nu - 1)?;
        Gf3Vec::from_quads((enc.quads() << 4) | 1, self.nu)
    }

    /// Adds (1 || x-tilde) to each cell of h(x).
    pub fn insert(&mut self, x: u64) -> Result<()> {
        let c = self.contribution(x)?;
        for i in index_set(x, self.cells.len(), &self.seeds) {
            self.cells[i] = self.cells[i].add(&c)?;
        }
        Ok(())
    }

    /// Subtracts (1 || x-tilde) from each cell of h(x).
    pub fn delete(&mut self, x: u64) -> Result<()> {
        let c = self.contribution(x)?.neg();
        for i in index_set(x, self.cells.len(), &self.seeds) {
            self.cells[i] = self.cells[i].add(&c)?;
        }
        Ok(())
    }

    /// Cell-wise self minus other; non-commutative (the orientation encodes
    /// which side each surviving key came from).
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.cells.len() != other.cells.len()
            || self.seeds != other.seeds
            || self.nu != other.nu
            || self.key_max != other.key_max
        {
            return Err(Error::IncompatibleSketch(
                "signed tables differ in size, width, or seeds".into(),
            ));
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            cells,
            seeds: self.seeds,
            nu: self.nu,
            key_max: self.key_max,
        })
    }

    /// Signed purity check: sign trit 1 means the keysum is the key's
    /// encoding, 2 means its negation. The candidate must decode to a
    /// nonzero in-range key that actually hashes to this cell.
    pub fn looks_pure(&self, i: usize) -> Option<(u64, u8)> {
        let cell = &self.cells[i];
        let sign = cell.quad(0);
        if sign == 0 {
            return None;
        }
        let keysum = Gf3Vec::from_quads(cell.quads() >> 4, self.nu - 1).ok()?;
        let enc = if sign == 1 { keysum } else { keysum.neg() };
        let x = enc.decode().ok()?;
        if x == 0 || x > self.key_max {
            return None;
        }
        if !index_set(x, self.cells.len(), &self.seeds).contains(&i) {
            return None;
        }
        Some((x, sign))
    }

    /// Peeling with signed purity: a detected positive key is deleted, a
    /// negative one inserted; the recovered multiset tracks signs mod 3.
    /// Same dedup queues and 2n step limit as the unsigned decoder.
    pub fn decode(&mut self) -> SignedDecodeOutcome {
        let n = self.cells.len();
        let t_max = 2 * n as u64;
        let mut steps = 0u64;
        let mut events: Vec<(u64, u8)> = Vec::new();
        // S_dec is the mod-3 sign fold of the event log, computed once at
        // the end rather than per step.
        let fold = |events: &[(u64, u8)]| -> SignedSet {
            let mut out = SignedSet::new();
            for &(x, s) in events {
                let merged = (out.get(&x).copied().unwrap_or(0) + s) % 3;
                if merged == 0 {
                    out.remove(&x);
                } else {
                    out.insert(x, merged);
                }
            }
            out
        };
        let mut queue: Vec<usize> = (0..n).filter(|&i| self.looks_pure(i).is_some()).collect();
        let mut in_next = vec![false; n];

        while !queue.is_empty() {
            // Snapshot semantics, as in the unsigned decoder: only cells
            // already pure at the start of the round are processed in it.
            queue.retain(|&i| self.looks_pure(i).is_some());
            let mut next: Vec<usize> = Vec::new();
            for &i in &queue {
                let Some((x, sign)) = self.looks_pure(i) else {
                    continue;
                };
                if sign == 1 {
                    self.delete(x).expect("validated by looks_pure");
                } else {
                    self.insert(x).expect("validated by looks_pure");
                }
                events.push((x, sign));
                for j in index_set(x, n, &self.seeds) {
                    if !in_next[j] && self.looks_pure(j).is_some() {
                        in_next[j] = true;
                        next.push(j);
                    }
                }
                steps += 1;
                if steps >= t_max {
                    return SignedDecodeOutcome {
                        recovered: fold(&events),
                        steps,
                        timed_out: true,
                        residual_nonzero: !self.is_empty_state(),
                        events,
                    };
                }
            }
            next.sort_unstable();
            for &j in &next {
                in_next[j] = false;
            }
            queue = next;
        }
        SignedDecodeOutcome {
            recovered: fold(&events),
            steps,
            timed_out: false,
            residual_nonzero: !self.is_empty_state(),
            events,
        }
    }
}

/// Parameters of a signed sketch (mirrors the unsigned `SketchParams`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedParams {
    pub d: u32,
    pub r: u32,
    pub key_width: u32,
    pub eps_milli: u16,
    pub seeds: HashSeeds,
}

impl SignedParams {
    pub fn new(d: u32, r: u32, key_width: u32, eps_milli: u16, seeds: HashSeeds) -> Result<Self> {
        if d == 0 {
            return Err(Error::Range("capacity D must be at least 1".into()));
        }
        if r == 0 || r > 64 {
            return Err(Error::Range(format!("stash parameter r={r} not in 1..=64")));
        }
        if !(8..=32).contains(&key_width) {
            return Err(Error::Range(format!("unsupported width w={key_width}")));
        }
        Ok(Self {
            d,
            r,
            key_width,
            eps_milli,
            seeds,
        })
    }

    pub fn cells(&self) -> usize {
        cells_for_capacity(self.d as u64, self.eps_milli) as usize
    }

    pub fn key_max(&self) -> u64 {
        (1u64 << self.key_width) - 1
    }

    pub fn ternary_field(&self) -> Result<FieldParams3> {
        let m = FieldParams3::degree_for_key_width(self.key_width);
        debug_assert!(pow3(m) - 1 >= self.key_max());
        FieldParams3::for_degree(m)
    }

    fn checksum_mask(&self) -> u64 {
        if self.r == 64 {
            u64::MAX
        } else {
            (1u64 << self.r) - 1
        }
    }
}

/// Signed report status, mirroring the unsigned one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignedStatus {
    IbltClean,
    StashCorrected,
    Failed,
}

#[derive(Debug, Clone)]
pub struct SignedReport {
    pub keys: SignedSet,
    pub used_stash: bool,
    pub status: SignedStatus,
    pub iblt: SignedDecodeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedSketch {
    a: SignedIblt,
    h: u64,
    c: TernaryBchSketch,
    params: SignedParams,
}

impl SignedSketch {
    pub fn new(params: SignedParams) -> Result<Self> {
        Ok(Self {
            a: SignedIblt::new(params.cells(), params.key_width, params.seeds)?,
            h: 0,
            c: TernaryBchSketch::new(params.r as usize, params.ternary_field()?, params.key_max())?,
            params,
        })
    }

    pub fn params(&self) -> &SignedParams {
        &self.params
    }

    pub fn iblt(&self) -> &SignedIblt {
        &self.a
    }

    pub fn checksum(&self) -> u64 {
        self.h
    }

    pub fn stash(&self) -> &TernaryBchSketch {
        &self.c
    }

    pub(crate) fn from_parts(
        a: SignedIblt,
        h: u64,
        c: TernaryBchSketch,
        params: SignedParams,
    ) -> Self {
        Self { a, h, c, params }
    }

    pub fn is_empty_state(&self) -> bool {
        self.a.is_empty_state() && self.h == 0 && self.c.is_zero()
    }

    fn hash(&self, x: u64) -> u64 {
        checksum_hash(x, self.params.r, self.params.seeds.checksum)
            .expect("r validated at construction")
    }

    /// Adds x: positive IBLT contribution, checksum += h(x), stash sign 1.
    pub fn insert(&mut self, x: u64) -> Result<()> {
        self.a.insert(x)?;
        self.h = self.h.wrapping_add(self.hash(x)) & self.params.checksum_mask();
        self.c.toggle(x, 1)?;
        Ok(())
    }

    /// Removes x (exact inverse of insert).
    pub fn delete(&mut self, x: u64) -> Result<()> {
        self.a.delete(x)?;
        self.h = self.h.wrapping_sub(self.hash(x)) & self.params.checksum_mask();
        self.c.toggle(x, 2)?;
        Ok(())
    }

    /// Oriented difference: self minus other in every component.
    pub fn diff(&self, other: &Self) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::IncompatibleSketch(
                "signed sketches differ in parameters or seeds".into(),
            ));
        }
        Ok(Self {
            a: self.a.merge(&other.a)?,
            h: self.h.wrapping_sub(other.h) & self.params.checksum_mask(),
            c: self.c.merge(&other.c)?,
            params: self.params.clone(),
        })
    }

    /// Folds one reported signed key out of the checksum: subtract h(x) for
    /// sign 1, add it for sign 2.
    fn fold_checksum(&mut self, x: u64, sign: u8) {
        let h = self.hash(x);
        self.h = if sign == 1 {
            self.h.wrapping_sub(h)
        } else {
            self.h.wrapping_add(h)
        } & self.params.checksum_mask();
    }

    /// Signed decode, checksum gate, ternary stash fallback. Mutates self.
    pub fn report(&mut self) -> SignedReport {
        let iblt_out = self.a.decode();
        let s_dec = iblt_out.recovered.clone();
        for (&x, &s) in &s_dec {
            self.fold_checksum(x, s);
        }
        if self.h == 0 {
            return SignedReport {
                keys: s_dec,
                used_stash: false,
                status: SignedStatus::IbltClean,
                iblt: iblt_out,
            };
        }
        // Subtract S_dec's syndrome: adding the opposite sign per key.
        for (&x, &s) in &s_dec {
            self.c.toggle(x, 3 - s).expect("validated during decode");
        }
        match self.c.decode() {
            Ok(residual) => {
                let residual_set: SignedSet = residual.into_iter().collect();
                for (&x, &s) in &residual_set {
                    self.fold_checksum(x, s);
                }
                let keys = signed_sym_diff(&s_dec, &residual_set);
                if self.h != 0 {
                    return SignedReport {
                        keys,
                        used_stash: true,
                        status: SignedStatus::Failed,
                        iblt: iblt_out,
                    };
                }
                SignedReport {
                    keys,
                    used_stash: true,
                    status: SignedStatus::StashCorrected,
                    iblt: iblt_out,
                }
            }
            Err(_) => SignedReport {
                keys: s_dec,
                used_stash: true,
                status: SignedStatus::Failed,
                iblt: iblt_out,
            },
        }
    }
}
