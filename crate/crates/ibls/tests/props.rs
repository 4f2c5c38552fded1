//! Property-based tests: field axioms, structural homomorphisms, and
//! serialization round-trips over random operation sequences.

mod common;

use std::collections::BTreeSet;

use ibls::field::{FieldParams2, FieldParams3, Gf3Vec};
use ibls::hashing::HashSeeds;
use ibls::iblt::Iblt;
use ibls::signed::{SignedParams, SignedSketch};
use ibls::sketch::{Sketch, SketchParams};
use ibls::wire::{self, SketchFile};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // --- GF(2^w) field axioms ------------------------------------------

    #[test]
    fn gf2_axioms(a in 0u64..=0xFFFF, b in 0u64..=0xFFFF, c in 0u64..=0xFFFF) {
        let f = FieldParams2::for_width(16).unwrap();
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
        prop_assert_eq!(f.mul(a, 1), a);
        if a != 0 {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }

    #[test]
    fn gf2_mul_matches_oracle_at_w16(a in 0u64..=0xFFFF, b in 0u64..=0xFFFF) {
        let f = FieldParams2::for_width(16).unwrap();
        prop_assert_eq!(f.mul(a, b), common::gf2_mul_oracle(16, f.poly(), a, b));
    }

    // --- GF(3^m) field axioms ------------------------------------------

    #[test]
    fn gf3_axioms(a in 0u64..729, b in 0u64..729, c in 0u64..729) {
        let f = FieldParams3::for_degree(6).unwrap();
        let (av, bv, cv) = (
            Gf3Vec::encode(a, 6).unwrap(),
            Gf3Vec::encode(b, 6).unwrap(),
            Gf3Vec::encode(c, 6).unwrap(),
        );
        prop_assert_eq!(f.mul(&av, &bv).unwrap(), f.mul(&bv, &av).unwrap());
        prop_assert_eq!(
            f.mul(&f.mul(&av, &bv).unwrap(), &cv).unwrap(),
            f.mul(&av, &f.mul(&bv, &cv).unwrap()).unwrap()
        );
        prop_assert_eq!(
            f.mul(&av, &bv.add(&cv).unwrap()).unwrap(),
            f.mul(&av, &bv).unwrap().add(&f.mul(&av, &cv).unwrap()).unwrap()
        );
        prop_assert_eq!(f.mul(&av, &f.one()).unwrap(), av.clone());
        if !av.is_zero() {
            prop_assert_eq!(f.mul(&av, &f.inv(&av).unwrap()).unwrap(), f.one());
        }
        // additive group: a + (-a) = 0
        prop_assert!(av.add(&av.neg()).unwrap().is_zero());
    }

    #[test]
    fn gf3_encode_decode_roundtrip(x in 0u64..=0xFFFF) {
        let enc = Gf3Vec::encode(x, 11).unwrap();
        prop_assert_eq!(enc.decode().unwrap(), x);
        prop_assert_eq!(common::trits_of(&enc), common::base3_digits(x, 11));
    }

    // --- IBLT structure --------------------------------------------------

    #[test]
    fn iblt_toggle_is_involutive(keys in prop::collection::btree_set(1u64..=0xFFFF, 0..12),
                                 master in any::<u64>()) {
        let field = FieldParams2::for_width(16).unwrap();
        let seeds = HashSeeds::from_master(master);
        let mut a = Iblt::new(23, field, seeds).unwrap();
        for &x in &keys {
            a.toggle(x).unwrap();
        }
        for &x in &keys {
            a.toggle(x).unwrap();
        }
        prop_assert!(a.is_empty_state());
    }

    #[test]
    fn iblt_merge_is_symmetric_difference(
        s in prop::collection::btree_set(1u64..=0xFFFF, 0..12),
        t in prop::collection::btree_set(1u64..=0xFFFF, 0..12),
        master in any::<u64>()
    ) {
        let field = FieldParams2::for_width(16).unwrap();
        let seeds = HashSeeds::from_master(master);
        let build = |keys: &BTreeSet<u64>| {
            let mut a = Iblt::new(17, field, seeds).unwrap();
            for &x in keys {
                a.toggle(x).unwrap();
            }
            a
        };
        let merged = build(&s).merge(&build(&t)).unwrap();
        let sym: Vec<u64> = s.symmetric_difference(&t).copied().collect();
        let naive = common::naive_cells(&sym, 17, &seeds);
        prop_assert_eq!(merged.cells(), naive.as_slice());
    }

    // --- Serialization round-trips over random operation sequences ------

    #[test]
    fn unsigned_wire_roundtrip(keys in prop::collection::btree_set(1u64..=0xFFFF, 0..40),
                               toggles in prop::collection::vec(1u64..=0xFFFF, 0..10),
                               master in any::<u64>(),
                               d in 1u32..40, r in 1u32..20) {
        let field = FieldParams2::for_width(16).unwrap();
        let seeds = HashSeeds::from_master(master);
        let params = SketchParams::new(d, r, field, 100, seeds).unwrap();
        let mut sk = Sketch::new(params).unwrap();
        for &x in &keys {
            sk.insert(x).unwrap();
        }
        for &x in &toggles {
            sk.insert(x).unwrap(); // insert is a toggle on every component
        }
        let bytes = wire::serialize(&SketchFile::Unsigned(sk.clone()));
        prop_assert_eq!(bytes.len(), wire::unsigned_file_len(sk.params().cells(), 16, r as usize));
        match wire::deserialize(&bytes) {
            Ok(SketchFile::Unsigned(back)) => prop_assert_eq!(back, sk),
            other => prop_assert!(false, "bad deserialize result: {:?}", other.is_ok()),
        }
    }

    #[test]
    fn signed_wire_roundtrip(ins in prop::collection::btree_set(1u64..=0xFFFF, 0..20),
                             dels in prop::collection::btree_set(1u64..=0xFFFF, 0..20),
                             master in any::<u64>(),
                             d in 1u32..40, r in 1u32..20) {
        let seeds = HashSeeds::from_master(master);
        let params = SignedParams::new(d, r, 16, 100, seeds).unwrap();
        let mut sk = SignedSketch::new(params).unwrap();
        for &x in &ins {
            sk.insert(x).unwrap();
        }
        for &x in &dels {
            sk.delete(x).unwrap();
        }
        let bytes = wire::serialize(&SketchFile::Signed(sk.clone()));
        match wire::deserialize(&bytes) {
            Ok(SketchFile::Signed(back)) => prop_assert_eq!(back, sk),
            other => prop_assert!(false, "bad deserialize result: {:?}", other.is_ok()),
        }
    }

    // Truncated or corrupted headers never panic; they return errors.
    #[test]
    fn deserialize_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = wire::deserialize(&bytes);
    }

    #[test]
    fn truncations_are_rejected(keys in prop::collection::btree_set(1u64..=0xFFFF, 1..20),
                                cut in 1usize..50) {
        let seeds = HashSeeds::default();
        let field = FieldParams2::for_width(16).unwrap();
        let params = SketchParams::new(8, 8, field, 100, seeds).unwrap();
        let mut sk = Sketch::new(params).unwrap();
        for &x in &keys {
            sk.insert(x).unwrap();
        }
        let bytes = wire::serialize(&SketchFile::Unsigned(sk));
        let cut = cut.min(bytes.len());
        prop_assert!(wire::deserialize(&bytes[..bytes.len() - cut]).is_err());
    }
}
