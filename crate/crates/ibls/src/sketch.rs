//! The combined reconciliation sketch: an IBLT sized for D differences, an
//! r-bit checksum gate, and a BCH stash of capacity r that repairs up to r
//! residual keys when the IBLT decode comes up short.

use std::collections::BTreeSet;

use crate::bch::BchSketch;
use crate::error::{Error, Result};
use crate::field::FieldParams2;
use crate::hashing::{checksum_hash, HashSeeds};
use crate::iblt::{cells_for_capacity, DecodeOutcome, Iblt};

/// Everything two sketches must agree on to be combinable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchParams {
    pub d: u32,
    pub r: u32,
    pub field: FieldParams2,
    pub eps_milli: u16,
    pub seeds: HashSeeds,
}

impl SketchParams {
    pub fn new(d: u32, r: u32, field: FieldParams2, eps_milli: u16, seeds: HashSeeds) -> Result<Self> {
        if d == 0 {
            return Err(Error::Range("capacity D must be at least 1".into()));
        }
        if r == 0 || r > 64 {
            return Err(Error::Range(format!("stash parameter r={r} not in 1..=64")));
        }
        Ok(Self {
            d,
            r,
            field,
            eps_milli,
            seeds,
        })
    }

    /// Default stash/checksum parameter: r = min(D, max(8, w)).
    pub fn default_r(d: u32, w: u32) -> u32 {
        d.min(8.max(w))
    }

    pub fn cells(&self) -> usize {
        cells_for_capacity(self.d as u64, self.eps_milli) as usize
    }

    fn checksum_mask(&self) -> u64 {
        if self.r == 64 {
            u64::MAX
        } else {
            (1u64 << self.r) - 1
        }
    }
}

/// How a `report` run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStatus {
    /// The IBLT alone decoded everything and the checksum agrees.
    IbltClean,
    /// The stash repaired a nonzero residual.
    StashCorrected,
    /// The stash could not repair the residual; keys are best-effort only.
    Failed,
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub keys: BTreeSet<u64>,
    pub used_stash: bool,
    pub status: ReportStatus,
    /// Raw IBLT decode flags, for instrumentation.
    pub iblt: DecodeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    a: Iblt,
    h: u64,
    c: BchSketch,
    params: SketchParams,
}

impl Sketch {
    pub fn new(params: SketchParams) -> Result<Self> {
        Ok(Self {
            a: Iblt::new(params.cells(), params.field, params.seeds)?,
            h: 0,
            c: BchSketch::new(params.r as usize, params.field)?,
            params,
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn iblt(&self) -> &Iblt {
        &self.a
    }

    pub fn checksum(&self) -> u64 {
        self.h
    }

    pub fn stash(&self) -> &BchSketch {
        &self.c
    }

    pub(crate) fn from_parts(a: Iblt, h: u64, c: BchSketch, params: SketchParams) -> Self {
        Self { a, h, c, params }
    }

    pub fn is_empty_state(&self) -> bool {
        self.a.is_empty_state() && self.h == 0 && self.c.is_zero()
    }

    /// Insert-or-delete: toggles all three components.
    pub fn insert(&mut self, x: u64) -> Result<()> {
        self.a.toggle(x)?;
        self.h ^= checksum_hash(x, self.params.r, self.params.seeds.checksum)?;
        self.c.toggle(x)?;
        Ok(())
    }

    /// Component-wise combination; stores the symmetric difference.
    pub fn diff(&self, other: &Self) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::IncompatibleSketch(
                "sketches differ in parameters or seeds".into(),
            ));
        }
        Ok(Self {
            a: self.a.merge(&other.a)?,
            h: self.h ^ other.h,
            c: self.c.merge(&other.c)?,
            params: self.params,
        })
    }

    /// Decode the IBLT, gate on the checksum, fall back to the stash.
    /// Mutates self; clone first to preserve the state.
    pub fn report(&mut self) -> ReportOutcome {
        let iblt_out = self.a.decode();
        let s_dec = iblt_out.recovered.clone();
        for &x in &s_dec {
            self.h ^= checksum_hash(x, self.params.r, self.params.seeds.checksum)
                .expect("r validated at construction");
        }
        self.h &= self.params.checksum_mask();
        if self.h == 0 {
            return ReportOutcome {
                keys: s_dec,
                used_stash: false,
                status: ReportStatus::IbltClean,
                iblt: iblt_out,
            };
        }
        // The checksum says the IBLT lied: remove what it did report from
        // the stash, which then holds exactly the residual S (sym-diff) S_dec.
        for &x in &s_dec {
            self.c.toggle(x).expect("reported keys are valid");
        }
        match self.c.decode() {
            Ok(residual) => {
                let mut keys = s_dec;
                for x in residual {
                    if !keys.remove(&x) {
                        keys.insert(x);
                    }
                    self.h ^= checksum_hash(x, self.params.r, self.params.seeds.checksum)
                        .expect("r validated at construction");
                }
                self.h &= self.params.checksum_mask();
                if self.h != 0 {
                    // The stash "corrected" to a set the checksum still
                    // rejects; surface the inconsistency instead of trusting it.
                    return ReportOutcome {
                        keys,
                        used_stash: true,
                        status: ReportStatus::Failed,
                        iblt: iblt_out,
                    };
                }
                ReportOutcome {
                    keys,
                    used_stash: true,
                    status: ReportStatus::StashCorrected,
                    iblt: iblt_out,
                }
            }
            Err(_) => ReportOutcome {
                keys: s_dec,
                used_stash: true,
                status: ReportStatus::Failed,
                iblt: iblt_out,
            },
        }
    }
}
