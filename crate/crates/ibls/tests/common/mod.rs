//! Independent reference implementations ("oracles") used to cross-check
//! the production code. Everything here is written the slow, obvious way:
//! symbolic polynomial arithmetic, full-table rescans, exhaustive search.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ibls::bch::BchSketch;
use ibls::field::Gf3Vec;
use ibls::hashing::{index_set, HashSeeds};

/// GF(2^w) multiplication by schoolbook carry-less multiplication followed
/// by polynomial long division. `poly` includes the x^w term.
pub fn gf2_mul_oracle(w: u32, poly: u64, a: u64, b: u64) -> u64 {
    let mut prod: u128 = 0;
    for i in 0..64 {
        if (a >> i) & 1 == 1 {
            prod ^= (b as u128) << i;
        }
    }
    loop {
        if prod == 0 {
            return 0;
        }
        let deg = 127 - prod.leading_zeros();
        if deg < w {
            return prod as u64;
        }
        prod ^= (poly as u128) << (deg - w);
    }
}

/// GF(3)[z] coefficient vectors, low-to-high; all entries in {0,1,2}.
pub fn gf3_poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai * bj) % 3;
        }
    }
    out
}

/// Remainder of a modulo the monic-up-to-scalar modulus, by long division.
pub fn gf3_poly_rem(a: &[u8], modulus: &[u8]) -> Vec<u8> {
    let m = modulus.len() - 1;
    let lead = modulus[m];
    let lead_inv = if lead == 1 { 1 } else { 2 }; // inverses in GF(3)
    let mut rem: Vec<u8> = a.to_vec();
    while rem.len() > m {
        let top = rem.len() - 1;
        let c = rem[top];
        if c != 0 {
            let q = (c * lead_inv) % 3;
            for (i, &mc) in modulus.iter().enumerate() {
                let pos = top - m + i;
                rem[pos] = (rem[pos] + 3 - (q * mc) % 3) % 3;
            }
        }
        rem.pop();
    }
    rem.resize(m, 0);
    rem
}

/// GF(3^m) multiplication oracle on coefficient vectors of length m.
pub fn gf3_mul_oracle(modulus: &[u8], a: &[u8], b: &[u8]) -> Vec<u8> {
    gf3_poly_rem(&gf3_poly_mul(a, b), modulus)
}

/// The trits of a packed vector, low-to-high, as plain bytes.
pub fn trits_of(v: &Gf3Vec) -> Vec<u8> {
    (0..v.width()).map(|i| v.quad(i)).collect()
}

/// Builds a packed vector from plain trits.
pub fn gf3_from_trits(trits: &[u8]) -> Gf3Vec {
    let mut quads = 0u128;
    for (i, &t) in trits.iter().enumerate() {
        quads |= (t as u128) << (4 * i);
    }
    Gf3Vec::from_quads(quads, trits.len() as u8).unwrap()
}

/// Little-endian base-3 digits of x, zero-padded to `width`.
pub fn base3_digits(x: u64, width: usize) -> Vec<u8> {
    let mut digits = Vec::with_capacity(width);
    let mut v = x;
    for _ in 0..width {
        digits.push((v % 3) as u8);
        v /= 3;
    }
    assert_eq!(v, 0, "value does not fit in {width} trits");
    digits
}

/// Reference peeler over a raw cell array: every round takes a snapshot of
/// all pure-looking cells (full rescan, ascending index), then processes
/// them in order with a purity recheck, subject to the same 2n step limit
/// as the production decoder. Returns (S_dec, timed_out).
pub fn rescan_peel(cells_in: &[u64], seeds: &HashSeeds) -> (BTreeSet<u64>, bool) {
    let n = cells_in.len();
    let is_pure = |cells: &[u64], i: usize| {
        let v = cells[i];
        v != 0 && index_set(v, n, seeds).contains(&i)
    };
    let mut cells = cells_in.to_vec();
    let mut s_dec: BTreeSet<u64> = BTreeSet::new();
    let mut steps = 0usize;
    loop {
        let pure: Vec<usize> = (0..n).filter(|&i| is_pure(&cells, i)).collect();
        if pure.is_empty() {
            return (s_dec, false);
        }
        for i in pure {
            if !is_pure(&cells, i) {
                continue;
            }
            let x = cells[i];
            for j in index_set(x, n, seeds) {
                cells[j] ^= x;
            }
            if !s_dec.insert(x) {
                s_dec.remove(&x);
            }
            steps += 1;
            if steps >= 2 * n {
                return (s_dec, true);
            }
        }
    }
}

/// Builds the expected cell array of an IBLT directly from the definition:
/// xor each key into exactly the cells of its (deduplicated) index set.
pub fn naive_cells(keys: &[u64], n: usize, seeds: &HashSeeds) -> Vec<u64> {
    let mut cells = vec![0u64; n];
    for &x in keys {
        for i in index_set(x, n, seeds) {
            cells[i] ^= x;
        }
    }
    cells
}

/// Syndrome vector (s_1, s_3, ..., s_{2r-1}) of a key set, from the
/// definition.
pub fn naive_syndromes(keys: &[u64], r: usize, field: &ibls::field::FieldParams2) -> Vec<u64> {
    let mut out = vec![0u64; r];
    for &x in keys {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot ^= field.pow(x, 2 * j as u64 + 1);
        }
    }
    out
}

/// Exhaustive BCH decoder for tiny parameters: searches every subset of the
/// key universe of size <= r for one whose syndromes match. Only feasible
/// at w=8, r<=3. Returns None if no subset matches.
pub fn bch_exhaustive_decode(sketch: &BchSketch) -> Option<BTreeSet<u64>> {
    let field = sketch.field();
    let r = sketch.r();
    assert!(field.width() == 8 && r <= 3, "oracle is exhaustive-only");
    let target = sketch.syndromes();
    let matches = |keys: &[u64]| naive_syndromes(keys, r, field) == target;
    if matches(&[]) {
        return Some(BTreeSet::new());
    }
    for a in 1..=255u64 {
        if matches(&[a]) {
            return Some(BTreeSet::from([a]));
        }
    }
    for a in 1..=255u64 {
        for b in a + 1..=255 {
            if matches(&[a, b]) {
                return Some(BTreeSet::from([a, b]));
            }
        }
    }
    if r >= 3 {
        // Precompute per-key syndrome triples once; then scan pairs inside.
        let syn: Vec<[u64; 3]> = (0..=255u64)
            .map(|x| [field.pow(x, 1), field.pow(x, 3), field.pow(x, 5)])
            .collect();
        for a in 1..=255u64 {
            for b in a + 1..=255 {
                let s0 = target[0] ^ syn[a as usize][0] ^ syn[b as usize][0];
                let s1 = target[1] ^ syn[a as usize][1] ^ syn[b as usize][1];
                let s2 = target[2] ^ syn[a as usize][2] ^ syn[b as usize][2];
                // remaining key c must satisfy syn[c] == (s0, s1, s2)
                if s0 == 0 || s0 <= b {
                    continue;
                }
                let c = s0 as usize;
                if syn[c][1] == s1 && syn[c][2] == s2 {
                    return Some(BTreeSet::from([a, b, s0]));
                }
            }
        }
    }
    None
}
