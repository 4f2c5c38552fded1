//! Arithmetic over GF(3^m) and the additive group Z_3^nu, with base-3 digits
//! packed four bits apiece ("quadbits"). The wire format uses 2 bits per trit;
//! the 4-bit layout exists so that digit-wise sums stay below 8 and a
//! branch-free mask reduces every digit modulo 3 at once.

use crate::error::{Error, Result};

const ONES: u128 = 0x1111_1111_1111_1111_1111_1111_1111_1111;
const MASK4: u128 = ONES << 2;
const THREES: u128 = ONES | (ONES << 1);

/// Reduces every quadbit of `x` modulo 3. Valid only while each quadbit is
/// in [0, 5]: A <- (x + 1111...) & 0100...; x <- x - ((A>>2) + (A>>1)).
#[inline]
pub fn mod3_packed(x: u128) -> u128 {
    debug_assert!(quads_at_most(x, 5));
    let a = (x + ONES) & MASK4;
    x - ((a >> 2) + (a >> 1))
}

fn quads_at_most(mut x: u128, limit: u128) -> bool {
    while x != 0 {
        if x & 0xF > limit {
            return false;
        }
        x >>= 4;
    }
    true
}

/// A packed vector of `width` trits; element of Z_3^width, and of GF(3^m)
/// when width equals the field degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gf3Vec {
    quads: u128,
    width: u8,
}

impl Gf3Vec {
    pub fn zero(width: u8) -> Self {
        Self { quads: 0, width }
    }

    pub fn one(width: u8) -> Self {
        Self { quads: 1, width }
    }

    /// Reassembles a vector from raw packed quadbits (e.g. off the wire).
    pub fn from_quads(quads: u128, width: u8) -> Result<Self> {
        if width as u32 * 4 > 128 || quads >> (4 * width) != 0 {
            return Err(Error::Range("packed trits wider than declared".into()));
        }
        if !quads_at_most(quads, 2) {
            return Err(Error::MalformedTrits);
        }
        Ok(Self { quads, width })
    }

    /// G: the i-th quadbit holds the i-th least-significant base-3 digit of x.
    pub fn encode(x: u64, width: u8) -> Result<Self> {
        if x >= pow3(width) {
            return Err(Error::Range(format!("{x} >= 3^{width}")));
        }
        let mut quads = 0u128;
        let mut rest = x;
        for i in 0..width {
            quads |= ((rest % 3) as u128) << (4 * i);
            rest /= 3;
        }
        Ok(Self { quads, width })
    }

    /// G^-1: Horner evaluation base 3, most significant digit first.
    pub fn decode(&self) -> Result<u64> {
        let mut x = 0u64;
        for i in (0..self.width).rev() {
            let d = self.quad(i);
            if d > 2 {
                return Err(Error::MalformedTrits);
            }
            x = x * 3 + d as u64;
        }
        Ok(x)
    }

    #[inline]
    pub fn quad(&self, i: u8) -> u8 {
        ((self.quads >> (4 * i)) & 0xF) as u8
    }

    pub fn quads(&self) -> u128 {
        self.quads
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn is_zero(&self) -> bool {
        self.quads == 0
    }

    /// Trit-wise addition in Z_3^width.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::WidthMismatch);
        }
        Ok(Self {
            quads: mod3_packed(self.quads + other.quads),
            width: self.width,
        })
    }

    /// Trit-wise negation: -v = 2v in characteristic 3.
    pub fn neg(&self) -> Self {
        Self {
            quads: mod3_packed(self.quads + self.quads),
            width: self.width,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Multiplication by a single trit.
    pub fn scale(&self, trit: u8) -> Self {
        match trit {
            0 => Self::zero(self.width),
            1 => *self,
            2 => self.neg(),
            _ => unreachable!("trit out of range"),
        }
    }
}

pub fn pow3(e: u8) -> u64 {
    3u64.pow(e as u32)
}

/// Double-width quadbit accumulator for the schoolbook product (up to
/// 2m-1 quadbits). Per-quadbit invariants keep every limb operation free of
/// cross-limb carries.
#[derive(Debug, Clone, Copy)]
struct Wide {
    lo: u128,
    hi: u128,
}

impl Wide {
    const ZERO: Wide = Wide { lo: 0, hi: 0 };

    fn from_narrow(q: u128) -> Self {
        Wide { lo: q, hi: 0 }
    }

    fn shl4(self) -> Self {
        Wide {
            hi: (self.hi << 4) | (self.lo >> 124),
            lo: self.lo << 4,
        }
    }

    fn shl_quads(self, k: u8) -> Self {
        let mut v = self;
        for _ in 0..k {
            v = v.shl4();
        }
        v
    }

    fn add(self, o: Self) -> Self {
        Wide {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    fn sub(self, o: Self) -> Self {
        Wide {
            lo: self.lo - o.lo,
            hi: self.hi - o.hi,
        }
    }

    fn mod3(self) -> Self {
        Wide {
            lo: mod3_packed(self.lo),
            hi: mod3_packed(self.hi),
        }
    }

    fn quad(&self, i: u8) -> u8 {
        if i < 32 {
            ((self.lo >> (4 * i)) & 0xF) as u8
        } else {
            ((self.hi >> (4 * (i - 32))) & 0xF) as u8
        }
    }
}

/// Trit-width plus the degree-m irreducible polynomial over GF(3) defining
/// GF(3^m). The polynomial is stored packed, with its doubled copy
/// precomputed for the reduction step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldParams3 {
    m: u8,
    poly: u128,  // m+1 quadbits, leading quadbit nonzero
    poly2: u128, // mod3(2 * poly)
}

/// Shipped irreducible polynomials over GF(3), as (degree, coefficients
/// low-to-high). Degrees 6/11/16/21 embed the key universes for
/// w = 8/16/24/32.
pub const POLY3_TABLE: &[(u8, &[u8])] = &[
    (2, &[1, 0, 1]),                                              // z^2 + 1
    (3, &[1, 2, 0, 1]),                                           // z^3 + 2z + 1
    (4, &[2, 1, 0, 0, 1]),                                        // z^4 + z + 2
    (5, &[1, 2, 0, 0, 0, 1]),                                     // z^5 + 2z + 1
    (6, &[2, 1, 0, 0, 0, 0, 1]),                                  // z^6 + z + 2
    (11, &[2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1]),                  // z^11 + z^2 + 2
    (16, &[2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]),   // z^16 + z^4 + 2
    (21, &[1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]), // z^21 + 2z^5 + 1
];

impl FieldParams3 {
    pub fn new(m: u8, coeffs: &[u8]) -> Result<Self> {
        if m == 0 || m > 21 || coeffs.len() != m as usize + 1 {
            return Err(Error::Range(format!("bad GF(3) modulus degree {m}")));
        }
        if coeffs.iter().any(|&c| c > 2) {
            return Err(Error::MalformedTrits);
        }
        if coeffs[m as usize] == 0 {
            return Err(Error::Range("leading coefficient must be nonzero".into()));
        }
        if !is_irreducible3(coeffs) {
            return Err(Error::Range("polynomial is reducible over GF(3)".into()));
        }
        let mut poly = 0u128;
        for (i, &c) in coeffs.iter().enumerate() {
            poly |= (c as u128) << (4 * i);
        }
        Ok(Self {
            m,
            poly,
            poly2: mod3_packed(poly + poly),
        })
    }

    /// The shipped polynomial of the given degree.
    pub fn for_degree(m: u8) -> Result<Self> {
        POLY3_TABLE
            .iter()
            .find(|&&(d, _)| d == m)
            .map(|&(d, c)| Self::new(d, c).expect("shipped polynomial is irreducible"))
            .ok_or_else(|| Error::Range(format!("no shipped GF(3) polynomial of degree {m}")))
    }

    /// Trit-width needed to embed keys of [1, 2^w - 1]: ceil(log3(2^w)).
    pub fn degree_for_key_width(w: u32) -> u8 {
        let mut m = 1u8;
        while ((pow3(m) - 1) as u128) < (1u128 << w) - 1 {
            m += 1;
        }
        m
    }

    pub fn degree(&self) -> u8 {
        self.m
    }

    pub fn zero(&self) -> Gf3Vec {
        Gf3Vec::zero(self.m)
    }

    pub fn one(&self) -> Gf3Vec {
        Gf3Vec::one(self.m)
    }

    /// Field product: schoolbook quadbit multiply, then remainder modulo the
    /// field polynomial (with its precomputed double).
    pub fn mul(&self, a: &Gf3Vec, b: &Gf3Vec) -> Result<Gf3Vec> {
        if a.width != self.m || b.width != self.m {
            return Err(Error::WidthMismatch);
        }
        let mut acc = Wide::ZERO;
        for i in (0..self.m).rev() {
            let t = a.quad(i);
            if t > 2 {
                return Err(Error::MalformedTrits);
            }
            let term = Wide::from_narrow(b.scale(t).quads);
            acc = acc.shl4().add(term).mod3();
        }
        Ok(Gf3Vec {
            quads: self.reduce(acc),
            width: self.m,
        })
    }

    /// Remainder of a (2m-1)-quadbit polynomial modulo `self.poly`.
    fn reduce(&self, mut z: Wide) -> u128 {
        let lead = ((self.poly >> (4 * self.m)) & 0xF) as u8;
        let threes = Wide {
            lo: THREES,
            hi: THREES,
        };
        for j in (self.m..=2 * self.m - 2).rev() {
            let q = z.quad(j);
            if q != 0 {
                let sel = if q == lead { self.poly } else { self.poly2 };
                let aligned = Wide::from_narrow(sel).shl_quads(j - self.m);
                z = z.add(threes).sub(aligned).mod3();
            }
        }
        debug_assert_eq!(z.hi, 0);
        z.lo & low_quads_mask(self.m)
    }

    pub fn pow(&self, base: &Gf3Vec, mut exp: u64) -> Result<Gf3Vec> {
        let mut out = self.one();
        let mut sq = *base;
        while exp > 0 {
            if exp & 1 == 1 {
                out = self.mul(&out, &sq)?;
            }
            sq = self.mul(&sq, &sq)?;
            exp >>= 1;
        }
        Ok(out)
    }

    /// Multiplicative inverse by exponentiation a^(3^m - 2).
    pub fn inv(&self, a: &Gf3Vec) -> Result<Gf3Vec> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        self.pow(a, pow3(self.m) - 2)
    }
}

fn low_quads_mask(m: u8) -> u128 {
    if m >= 32 {
        u128::MAX
    } else {
        (1u128 << (4 * m)) - 1
    }
}

// ---- irreducibility over GF(3), on naive coefficient vectors ----

fn poly_rem3(mut a: Vec<u8>, f: &[u8]) -> Vec<u8> {
    let df = f.len() - 1;
    let lead_inv = if f[df] == 1 { 1 } else { 2 }; // 2*2 = 4 = 1 mod 3
    while a.len() > df {
        let da = a.len() - 1;
        let c = (a[da] * lead_inv) % 3;
        if c != 0 {
            for i in 0..=df {
                let idx = da - df + i;
                a[idx] = (a[idx] + 3 - (c * f[i]) % 3) % 3;
            }
        }
        a.pop();
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
    }
    if a.is_empty() {
        a.push(0);
    }
    a
}

fn poly_mulmod3(a: &[u8], b: &[u8], f: &[u8]) -> Vec<u8> {
    let mut prod = vec![0u8; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        if ca == 0 {
            continue;
        }
        for (j, &cb) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ca * cb) % 3;
        }
    }
    poly_rem3(prod, f)
}

fn poly_gcd3(mut a: Vec<u8>, mut b: Vec<u8>) -> Vec<u8> {
    let trim = |v: &mut Vec<u8>| {
        while v.len() > 1 && *v.last().unwrap() == 0 {
            v.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        let mut ext = b.clone();
        // rem needs deg(modulus) <= deg(a): pad via full reduction
        while ext.len() > 1 && *ext.last().unwrap() == 0 {
            ext.pop();
        }
        let r = poly_rem3(a, &ext);
        a = ext;
        b = r;
        trim(&mut b);
    }
    a
}

/// Rabin test: f of degree m over GF(3) is irreducible iff x^(3^m) = x mod f
/// and gcd(x^(3^(m/q)) - x, f) = 1 for every prime q dividing m.
fn is_irreducible3(f: &[u8]) -> bool {
    let m = f.len() - 1;
    let x = vec![0u8, 1];
    let frob = |times: usize| {
        // x^(3^times) mod f by repeated cubing
        let mut v = x.clone();
        for _ in 0..times {
            let sq = poly_mulmod3(&v, &v, f);
            v = poly_mulmod3(&sq, &v, f);
        }
        v
    };
    let norm = |mut v: Vec<u8>| {
        while v.len() > 1 && *v.last().unwrap() == 0 {
            v.pop();
        }
        v
    };
    if norm(frob(m)) != x {
        return false;
    }
    let mut rem = m;
    let mut q = 2;
    while q <= rem {
        if rem % q == 0 {
            let mut h = frob(m / q);
            while h.len() < 2 {
                h.push(0);
            }
            h[1] = (h[1] + 2) % 3; // subtract x
            let g = poly_gcd3(h, f.to_vec());
            if g.len() > 1 {
                return false;
            }
        }
        while rem % q == 0 {
            rem /= q;
        }
        q += 1;
    }
    true
}
