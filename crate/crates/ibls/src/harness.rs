//! Monte-Carlo experiment runners with ground-truth instrumentation:
//! failure rates across table-size ratios, residual-size tails conditioned
//! on failure, and the full insert-report pipeline with stash statistics.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::field::FieldParams2;
use crate::hashing::{mix64, HashSeeds};
use crate::iblt::Iblt;
use crate::signed::{SignedParams, SignedSketch, SignedStatus};
use crate::sketch::{ReportStatus, Sketch, SketchParams};
use crate::Result;

/// Everything measured about one trial. Serialized as one CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub d: u32,
    pub r: u32,
    pub n: usize,
    pub w: u32,
    pub seed: u64,
    pub set_size: usize,
    pub iblt_success: bool,
    /// |S (sym-diff) S_dec| after the IBLT decode.
    pub residual: usize,
    /// Decoded keys that were never in S (anomaly fallout).
    pub foreign_keys: usize,
    pub steps: u64,
    pub stash_activated: bool,
    pub stash_success: bool,
    pub final_exact: bool,
    pub build_micros: u64,
    pub report_micros: u64,
}

/// Schema tag written as the first line of every CSV export.
pub const CSV_SCHEMA: &str = "# ibls-trials v1";

pub fn csv_header() -> String {
    format!(
        "{CSV_SCHEMA}\ntrial,d,r,n,w,seed,set_size,iblt_success,residual,foreign_keys,steps,\
         stash_activated,stash_success,final_exact,build_micros,report_micros"
    )
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.d,
            self.r,
            self.n,
            self.w,
            self.seed,
            self.set_size,
            self.iblt_success,
            self.residual,
            self.foreign_keys,
            self.steps,
            self.stash_activated,
            self.stash_success,
            self.final_exact,
            self.build_micros,
            self.report_micros,
        )
    }
}

/// Wilson score interval for a binomial rate at ~95% confidence (z = 1.96).
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((centre - half) / denom).max(0.0),
        ((centre + half) / denom).min(1.0),
    )
}

/// Deterministic per-trial RNG: one master seed, split by trial counter.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix64(master, trial))
}

fn sample_keys(rng: &mut ChaCha12Rng, count: usize, key_max: u64) -> BTreeSet<u64> {
    let mut s = BTreeSet::new();
    while s.len() < count {
        s.insert(rng.gen_range(1..=key_max));
    }
    s
}

/// One IBLT-only trial: build |S| = D keys in a table of n cells, decode,
/// compare against ground truth.
pub fn iblt_trial(d: u32, n: usize, w: u32, master: u64, trial: u64) -> Result<TrialRecord> {
    let field = FieldParams2::for_width(w)?;
    let mut rng = trial_rng(master, trial);
    let seeds = HashSeeds::from_master(rng.gen());
    let s = sample_keys(&mut rng, d as usize, field.max_element());
    let t0 = Instant::now();
    let mut iblt = Iblt::new(n, field, seeds)?;
    for &x in &s {
        iblt.toggle(x)?;
    }
    let build_micros = t0.elapsed().as_micros() as u64;
    let t1 = Instant::now();
    let out = iblt.decode();
    let report_micros = t1.elapsed().as_micros() as u64;
    let residual = s.symmetric_difference(&out.recovered).count();
    let foreign_keys = out.recovered.difference(&s).count();
    Ok(TrialRecord {
        trial,
        d,
        r: 0,
        n,
        w,
        seed: master,
        set_size: s.len(),
        iblt_success: residual == 0,
        residual,
        foreign_keys,
        steps: out.steps,
        stash_activated: false,
        stash_success: false,
        final_exact: residual == 0,
        build_micros,
        report_micros,
    })
}

/// Table size for a ratio given in thousandths (ratio_milli = 1320 -> 1.32).
pub fn cells_for_ratio(d: u32, ratio_milli: u32) -> usize {
    ((d as u64 * ratio_milli as u64 + 999) / 1000) as usize
}

/// Decode success statistics at a fixed table-size ratio.
pub fn run_failure_rate(
    d: u32,
    ratio_milli: u32,
    w: u32,
    trials: u64,
    master: u64,
) -> Result<Vec<TrialRecord>> {
    let n = cells_for_ratio(d, ratio_milli);
    (0..trials).map(|t| iblt_trial(d, n, w, master, t)).collect()
}

/// Residual-size histogram conditioned on failure; runs until `max_trials`
/// or `target_failures` observed failures, whichever comes first.
pub struct TailOutcome {
    pub records: Vec<TrialRecord>,
    pub trials_run: u64,
    pub failures: u64,
}

pub fn run_residual_tail(
    d: u32,
    ratio_milli: u32,
    w: u32,
    target_failures: u64,
    max_trials: u64,
    master: u64,
) -> Result<TailOutcome> {
    let n = cells_for_ratio(d, ratio_milli);
    let mut records = Vec::new();
    let mut failures = 0u64;
    let mut t = 0u64;
    while failures < target_failures && t < max_trials {
        let rec = iblt_trial(d, n, w, master, t)?;
        if !rec.iblt_success {
            failures += 1;
            records.push(rec);
        }
        t += 1;
    }
    Ok(TailOutcome {
        records,
        trials_run: t,
        failures,
    })
}

/// One full pipeline trial: insert |S| = D keys into a combined sketch,
/// report, compare with ground truth.
pub fn pipeline_trial(
    d: u32,
    r: u32,
    w: u32,
    eps_milli: u16,
    master: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let field = FieldParams2::for_width(w)?;
    let mut rng = trial_rng(master, trial);
    let seeds = HashSeeds::from_master(rng.gen());
    let params = SketchParams::new(d, r, field, eps_milli, seeds)?;
    let s = sample_keys(&mut rng, d as usize, field.max_element());
    let t0 = Instant::now();
    let mut sketch = Sketch::new(params)?;
    for &x in &s {
        sketch.insert(x)?;
    }
    let build_micros = t0.elapsed().as_micros() as u64;
    let t1 = Instant::now();
    let out = sketch.report();
    let report_micros = t1.elapsed().as_micros() as u64;
    let residual = s.symmetric_difference(&out.iblt.recovered).count();
    let final_exact = out.status != ReportStatus::Failed && out.keys == s;
    Ok(TrialRecord {
        trial,
        d,
        r,
        n: params.cells(),
        w,
        seed: master,
        set_size: s.len(),
        iblt_success: residual == 0,
        residual,
        foreign_keys: out.iblt.recovered.difference(&s).count(),
        steps: out.iblt.steps,
        stash_activated: out.used_stash,
        stash_success: out.used_stash && out.status == ReportStatus::StashCorrected,
        final_exact,
        build_micros,
        report_micros,
    })
}

pub fn run_stash_pipeline(
    d: u32,
    r: u32,
    w: u32,
    eps_milli: u16,
    trials: u64,
    master: u64,
) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .map(|t| pipeline_trial(d, r, w, eps_milli, master, t))
        .collect()
}

/// One signed-reconciliation trial: a random split of `diff_size`
/// differences (plus shared keys) between two sketches; reports whether the
/// oriented output matched the ground-truth partition exactly.
pub fn signed_trial(
    d: u32,
    r: u32,
    w: u32,
    eps_milli: u16,
    diff_size: usize,
    common: usize,
    master: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(master, trial);
    let seeds = HashSeeds::from_master(rng.gen());
    let params = SignedParams::new(d, r, w, eps_milli, seeds)?;
    let key_max = params.key_max();
    let all = sample_keys(&mut rng, diff_size + common, key_max);
    let mut truth = std::collections::BTreeMap::new();
    let t0 = Instant::now();
    let mut s1 = SignedSketch::new(params.clone())?;
    let mut s2 = SignedSketch::new(params.clone())?;
    for (i, &x) in all.iter().enumerate() {
        if i < diff_size {
            if rng.gen_bool(0.5) {
                s1.insert(x)?;
                truth.insert(x, 1u8);
            } else {
                s2.insert(x)?;
                truth.insert(x, 2u8);
            }
        } else {
            s1.insert(x)?;
            s2.insert(x)?;
        }
    }
    let build_micros = t0.elapsed().as_micros() as u64;
    let t1 = Instant::now();
    let mut diff = s1.diff(&s2)?;
    let out = diff.report();
    let report_micros = t1.elapsed().as_micros() as u64;
    let residual = {
        // symmetric difference of signed sets: |truth - S_dec| entries
        let folded = crate::signed::signed_sym_diff(
            &truth,
            &out.iblt
                .recovered
                .iter()
                .map(|(&k, &s)| (k, 3 - s))
                .collect(),
        );
        folded.len()
    };
    let final_exact = out.status != SignedStatus::Failed && out.keys == truth;
    Ok(TrialRecord {
        trial,
        d,
        r,
        n: params.cells(),
        w,
        seed: master,
        set_size: diff_size,
        iblt_success: residual == 0,
        residual,
        foreign_keys: out
            .iblt
            .recovered
            .keys()
            .filter(|k| !truth.contains_key(k))
            .count(),
        steps: out.iblt.steps,
        stash_activated: out.used_stash,
        stash_success: out.used_stash && out.status == SignedStatus::StashCorrected,
        final_exact,
        build_micros,
        report_micros,
    })
}

/// Aggregate rates over a batch of records.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub trials: u64,
    pub iblt_successes: u64,
    pub final_exact: u64,
    pub stash_activations: u64,
    pub stash_successes: u64,
    pub mean_report_micros: f64,
    pub success_rate: f64,
    pub success_ci_low: f64,
    pub success_ci_high: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Summary {
    let trials = records.len() as u64;
    let iblt_successes = records.iter().filter(|r| r.iblt_success).count() as u64;
    let final_exact = records.iter().filter(|r| r.final_exact).count() as u64;
    let stash_activations = records.iter().filter(|r| r.stash_activated).count() as u64;
    let stash_successes = records.iter().filter(|r| r.stash_success).count() as u64;
    let mean_report_micros = if trials == 0 {
        0.0
    } else {
        records.iter().map(|r| r.report_micros as f64).sum::<f64>() / trials as f64
    };
    let (lo, hi) = wilson_interval(final_exact, trials);
    Summary {
        trials,
        iblt_successes,
        final_exact,
        stash_activations,
        stash_successes,
        mean_report_micros,
        success_rate: if trials == 0 {
            0.0
        } else {
            final_exact as f64 / trials as f64
        },
        success_ci_low: lo,
        success_ci_high: hi,
    }
}
