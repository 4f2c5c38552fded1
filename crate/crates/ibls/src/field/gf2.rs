//! Arithmetic in GF(2^w): carry-less multiplication of the binary
//! representations followed by polynomial remainder modulo an irreducible
//! polynomial of degree w.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Shipped irreducible polynomials, indexed by `poly_id` in the wire header.
/// Degree-8 is x^8+x^4+x^3+x+1; the others are standard sparse choices.
pub const POLY_TABLE: &[(u32, u64)] = &[
    (8, 0x11B),
    (16, 0x1100B),
    (24, 0x100001B),
    (32, 0x1_0040_0007),
];

/// Width plus the degree-w irreducible polynomial defining GF(2^w).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldParams2 {
    w: u32,
    poly: u64,
}

impl FieldParams2 {
    /// Builds field parameters, verifying the polynomial has degree exactly
    /// `w` and is irreducible over GF(2).
    pub fn new(w: u32, poly: u64) -> Result<Self> {
        if !(8..=32).contains(&w) {
            return Err(Error::Range(format!("unsupported width w={w}")));
        }
        if poly >> w != 1 {
            return Err(Error::Range(format!(
                "polynomial {poly:#x} does not have degree {w}"
            )));
        }
        if !is_irreducible2(poly, w) {
            return Err(Error::Range(format!("polynomial {poly:#x} is reducible")));
        }
        Ok(Self { w, poly })
    }

    /// The shipped polynomial for a supported width (8, 16, 24 or 32).
    pub fn for_width(w: u32) -> Result<Self> {
        POLY_TABLE
            .iter()
            .find(|&&(tw, _)| tw == w)
            .map(|&(tw, p)| Self { w: tw, poly: p })
            .ok_or_else(|| Error::Range(format!("no shipped polynomial for w={w}")))
    }

    pub fn poly_id(&self) -> Option<u16> {
        POLY_TABLE
            .iter()
            .position(|&(tw, p)| tw == self.w && p == self.poly)
            .map(|i| i as u16)
    }

    pub fn from_poly_id(id: u16) -> Result<Self> {
        let &(w, poly) = POLY_TABLE
            .get(id as usize)
            .ok_or_else(|| Error::Format(format!("unknown poly_id {id}")))?;
        Ok(Self { w, poly })
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Largest key / field element, U = 2^w - 1.
    pub fn max_element(&self) -> u64 {
        if self.w == 64 {
            u64::MAX
        } else {
            (1u64 << self.w) - 1
        }
    }

    /// Field product: carry-less multiply to a (2w-1)-bit string, then
    /// polynomial remainder modulo `self.poly`.
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a <= self.max_element() && b <= self.max_element());
        let mut acc = 0u64;
        for i in 0..self.w {
            if (b >> i) & 1 == 1 {
                acc ^= a << i;
            }
        }
        self.reduce(acc)
    }

    /// Remainder of a (2w-1)-bit polynomial modulo `self.poly`.
    fn reduce(&self, mut acc: u64) -> u64 {
        let mut i = 2 * self.w - 2;
        while i >= self.w {
            if (acc >> i) & 1 == 1 {
                acc ^= self.poly << (i - self.w);
            }
            i -= 1;
        }
        acc
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut out = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                out = self.mul(out, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        out
    }

    /// Multiplicative inverse by exponentiation a^(2^w - 2).
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.max_element() - 1))
    }
}

/// Rabin irreducibility test for a degree-w polynomial over GF(2):
/// x^(2^w) = x (mod f) and gcd(x^(2^(w/q)) - x, f) = 1 for prime q | w.
fn is_irreducible2(poly: u64, w: u32) -> bool {
    let f = FieldParams2 { w, poly }; // mul/reduce are valid for any modulus
    let frob = |elem: u64, times: u32| {
        let mut v = elem;
        for _ in 0..times {
            v = f.mul(v, v);
        }
        v
    };
    let x = 2u64;
    if frob(x, w) != x {
        return false;
    }
    let mut rem = w;
    let mut q = 2;
    while q * q <= rem {
        if rem % q == 0 {
            let h = frob(x, w / q) ^ x;
            if poly_gcd2(h, poly) != 1 {
                return false;
            }
            while rem % q == 0 {
                rem /= q;
            }
        }
        q += 1;
    }
    if rem > 1 && rem < w {
        let h = frob(x, w / rem) ^ x;
        if poly_gcd2(h, poly) != 1 {
            return false;
        }
    }
    true
}

fn poly_gcd2(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let mut r = a;
        while r != 0 && (63 - r.leading_zeros()) >= (63 - b.leading_zeros()) {
            r ^= b << ((63 - r.leading_zeros()) - (63 - b.leading_zeros()));
        }
        a = b;
        b = r;
    }
    a
}

/// Discrete log/antilog tables over a generator, used to speed up the
/// exhaustive root scans of the BCH decoder for w <= 16.
pub struct GfTables {
    pub order: u32, // 2^w - 1
    pub exp: Vec<u32>,
    pub log: Vec<u32>,
}

impl GfTables {
    fn build(p: &FieldParams2) -> Self {
        let order = p.max_element() as u32;
        'gen: for g in 2..=p.max_element() {
            let mut exp = vec![0u32; order as usize];
            let mut log = vec![u32::MAX; order as usize + 1];
            let mut v = 1u64;
            for i in 0..order {
                exp[i as usize] = v as u32;
                if log[v as usize] != u32::MAX {
                    continue 'gen; // g's order is smaller than 2^w - 1
                }
                log[v as usize] = i;
                v = p.mul(v, g);
            }
            if v == 1 {
                return Self { order, exp, log };
            }
        }
        unreachable!("an irreducible polynomial always yields a cyclic group");
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let mut l = self.log[a as usize] + self.log[b as usize];
        if l >= self.order {
            l -= self.order;
        }
        self.exp[l as usize]
    }

    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        let l = self.log[a as usize];
        if l == 0 {
            1
        } else {
            self.exp[(self.order - l) as usize]
        }
    }
}

/// Shared table cache keyed by field parameters; tables are only built for
/// w <= 16 (larger widths fall back to the shift-and-xor multiply).
pub fn tables_for(p: &FieldParams2) -> Option<Arc<GfTables>> {
    if p.w > 16 {
        return None;
    }
    static CACHE: OnceLock<Mutex<HashMap<FieldParams2, Arc<GfTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    Some(
        guard
            .entry(*p)
            .or_insert_with(|| Arc::new(GfTables::build(p)))
            .clone(),
    )
}
