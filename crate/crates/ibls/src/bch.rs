//! BCH syndrome sketches: the binary stash (r odd power sums over GF(2^w))
//! and the ternary signed stash (2r consecutive power sums over GF(3^m)).
//! Decoding is the classical pipeline — Berlekamp–Massey, exhaustive root
//! scan, Forney for the ternary error values — plus a re-encode check that
//! turns any mis-decode beyond capacity into an explicit failure.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::{tables_for, FieldParams2, FieldParams3, Gf3Vec};

/// The field operations Berlekamp–Massey needs, shared by GF(2^w) on `u64`
/// and GF(3^m) on packed trit vectors.
pub trait SyndromeField {
    type Elem: Copy + Eq + std::fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    /// Inverse of a nonzero element.
    fn inv(&self, a: Self::Elem) -> Self::Elem;
}

impl SyndromeField for FieldParams2 {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        FieldParams2::mul(self, a, b)
    }
    fn inv(&self, a: u64) -> u64 {
        FieldParams2::inv(self, a).expect("inverse of nonzero element")
    }
}

impl SyndromeField for FieldParams3 {
    type Elem = Gf3Vec;
    fn zero(&self) -> Gf3Vec {
        FieldParams3::zero(self)
    }
    fn one(&self) -> Gf3Vec {
        FieldParams3::one(self)
    }
    fn add(&self, a: Gf3Vec, b: Gf3Vec) -> Gf3Vec {
        a.add(&b).expect("syndrome widths match")
    }
    fn sub(&self, a: Gf3Vec, b: Gf3Vec) -> Gf3Vec {
        a.sub(&b).expect("syndrome widths match")
    }
    fn mul(&self, a: Gf3Vec, b: Gf3Vec) -> Gf3Vec {
        FieldParams3::mul(self, &a, &b).expect("syndrome widths match")
    }
    fn inv(&self, a: Gf3Vec) -> Gf3Vec {
        FieldParams3::inv(self, &a).expect("inverse of nonzero element")
    }
}

/// Berlekamp–Massey: shortest LFSR (error locator Λ, Λ(0)=1) generating the
/// syndrome sequence. Returns the trimmed coefficient vector and the LFSR
/// length L; a decode is only plausible when deg Λ = L.
pub fn berlekamp_massey<F: SyndromeField>(f: &F, s: &[F::Elem]) -> (Vec<F::Elem>, usize) {
    let mut c = vec![f.one()];
    let mut b = vec![f.one()];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last_d = f.one();
    for i in 0..s.len() {
        let mut d = s[i];
        for j in 1..=l.min(c.len() - 1) {
            d = f.add(d, f.mul(c[j], s[i - j]));
        }
        if d == f.zero() {
            m += 1;
            continue;
        }
        let coef = f.mul(d, f.inv(last_d));
        let prev_c = c.clone();
        if c.len() < b.len() + m {
            c.resize(b.len() + m, f.zero());
        }
        for j in 0..b.len() {
            c[j + m] = f.sub(c[j + m], f.mul(coef, b[j]));
        }
        if 2 * l <= i {
            l = i + 1 - l;
            b = prev_c;
            last_d = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    while c.len() > 1 && *c.last().unwrap() == f.zero() {
        c.pop();
    }
    (c, l)
}

// ---------------------------------------------------------------- binary

/// Stash of r odd-power syndromes s_j = XOR of x^j (j = 1, 3, ..., 2r-1)
/// over GF(2^w); exactly r*w bits of payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchSketch {
    syndromes: Vec<u64>,
    field: FieldParams2,
}

impl BchSketch {
    pub fn new(r: usize, field: FieldParams2) -> Result<Self> {
        if r == 0 || r > 64 {
            return Err(Error::Range(format!("stash capacity r={r} not in 1..=64")));
        }
        Ok(Self {
            syndromes: vec![0; r],
            field,
        })
    }

    pub fn r(&self) -> usize {
        self.syndromes.len()
    }

    pub fn field(&self) -> &FieldParams2 {
        &self.field
    }

    pub fn syndromes(&self) -> &[u64] {
        &self.syndromes
    }

    pub(crate) fn from_syndromes(syndromes: Vec<u64>, field: FieldParams2) -> Result<Self> {
        if syndromes.is_empty() || syndromes.len() > 64 {
            return Err(Error::Format("bad syndrome count".into()));
        }
        if syndromes.iter().any(|&s| s > field.max_element()) {
            return Err(Error::Format("syndrome exceeds field width".into()));
        }
        Ok(Self { syndromes, field })
    }

    pub fn is_zero(&self) -> bool {
        self.syndromes.iter().all(|&s| s == 0)
    }

    /// Insert-or-delete x: XOR x^j into each stored syndrome.
    pub fn toggle(&mut self, x: u64) -> Result<()> {
        if x == 0 {
            return Err(Error::KeyZero);
        }
        if x > self.field.max_element() {
            return Err(Error::Range(format!("key {x} exceeds the key universe")));
        }
        let x2 = self.field.mul(x, x);
        let mut p = x; // x^(2i+1)
        for s in &mut self.syndromes {
            *s ^= p;
            p = self.field.mul(p, x2);
        }
        Ok(())
    }

    /// Component-wise XOR: stores the symmetric difference.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.field != other.field || self.syndromes.len() != other.syndromes.len() {
            return Err(Error::IncompatibleSketch(
                "stashes differ in field or capacity".into(),
            ));
        }
        Ok(Self {
            syndromes: self
                .syndromes
                .iter()
                .zip(&other.syndromes)
                .map(|(a, b)| a ^ b)
                .collect(),
            field: self.field,
        })
    }

    /// Full decode: returns the stored set when it has at most r keys,
    /// `DecodeFailed` otherwise (root-count or re-encode mismatch).
    pub fn decode(&self) -> Result<BTreeSet<u64>> {
        if self.is_zero() {
            return Ok(BTreeSet::new());
        }
        let f = &self.field;
        let r = self.syndromes.len();
        // Even syndromes follow from the Frobenius identity s_{2j} = s_j^2.
        let mut full = vec![0u64; 2 * r];
        for j in 1..=2 * r {
            full[j - 1] = if j % 2 == 1 {
                self.syndromes[(j - 1) / 2]
            } else {
                f.mul(full[j / 2 - 1], full[j / 2 - 1])
            };
        }
        let (lambda, l) = berlekamp_massey(f, &full);
        if l == 0 || l > r || lambda.len() - 1 != l {
            return Err(Error::DecodeFailed);
        }
        let roots = self.root_scan(&lambda);
        if roots.len() != l {
            return Err(Error::DecodeFailed);
        }
        // Locators are the keys themselves (alpha(x) = x), so each key is
        // the reciprocal of a root of Lambda.
        let keys: BTreeSet<u64> = roots.iter().map(|&b| f.inv(b).unwrap()).collect();
        let mut check = Self::new(r, *f)?;
        for &x in &keys {
            check.toggle(x)?;
        }
        if check.syndromes != self.syndromes {
            return Err(Error::DecodeFailed);
        }
        Ok(keys)
    }

    /// All nonzero roots of Lambda, by exhaustive scan over the field.
    fn root_scan(&self, lambda: &[u64]) -> Vec<u64> {
        let f = &self.field;
        if let Some(t) = tables_for(f) {
            // Chien-style incremental scan in log space: walking the points
            // g^0, g^1, ... multiplies the degree-j term by g^j each step.
            let deg = lambda.len() - 1;
            let mut roots = Vec::new();
            let mut terms: Vec<u32> = lambda[1..].iter().map(|&c| c as u32).collect();
            let steps: Vec<u32> = (1..=deg)
                .map(|j| t.exp[j % t.order as usize])
                .collect();
            for i in 0..t.order {
                let mut v = lambda[0] as u32;
                for term in &terms {
                    v ^= term;
                }
                if v == 0 {
                    roots.push(t.exp[i as usize] as u64);
                }
                for (term, &step) in terms.iter_mut().zip(&steps) {
                    *term = t.mul(*term, step);
                }
            }
            roots
        } else {
            (1..=f.max_element())
                .filter(|&x| {
                    // Horner evaluation of Lambda at x
                    let mut v = 0u64;
                    for &c in lambda.iter().rev() {
                        v = f.mul(v, x) ^ c;
                    }
                    v == 0
                })
                .collect()
        }
    }
}

// ---------------------------------------------------------------- ternary

/// A key with its sign trit: 1 for "+1" (first set's surplus), 2 for "-1".
pub type SignedKey = (u64, u8);

/// Signed stash over GF(3^m): 2r consecutive power sums
/// s_j = sum of sign(x) * alpha3(x)^j, j = 1..2r, with alpha3 the base-3
/// embedding of the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryBchSketch {
    syndromes: Vec<Gf3Vec>, // length 2r
    field: FieldParams3,
    key_max: u64,
}

impl TernaryBchSketch {
    pub fn new(r: usize, field: FieldParams3, key_max: u64) -> Result<Self> {
        if r == 0 || r > 64 {
            return Err(Error::Range(format!("stash capacity r={r} not in 1..=64")));
        }
        if key_max == 0 || key_max > crate::field::pow3(field.degree()) - 1 {
            return Err(Error::Range(
                "key universe does not fit the ternary field".into(),
            ));
        }
        Ok(Self {
            syndromes: vec![field.zero(); 2 * r],
            field,
            key_max,
        })
    }

    pub fn r(&self) -> usize {
        self.syndromes.len() / 2
    }

    pub fn field(&self) -> &FieldParams3 {
        &self.field
    }

    pub fn syndromes(&self) -> &[Gf3Vec] {
        &self.syndromes
    }

    pub(crate) fn from_syndromes(
        syndromes: Vec<Gf3Vec>,
        field: FieldParams3,
        key_max: u64,
    ) -> Result<Self> {
        if syndromes.is_empty() || syndromes.len() % 2 != 0 || syndromes.len() > 128 {
            return Err(Error::Format("bad ternary syndrome count".into()));
        }
        if syndromes.iter().any(|s| s.width() != field.degree()) {
            return Err(Error::Format("syndrome width mismatch".into()));
        }
        Ok(Self {
            syndromes,
            field,
            key_max,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.syndromes.iter().all(|s| s.is_zero())
    }

    /// Adds sign * alpha3(x)^j to each syndrome; sign is the trit 1 or 2.
    pub fn toggle(&mut self, x: u64, sign: u8) -> Result<()> {
        if x == 0 {
            return Err(Error::KeyZero);
        }
        if x > self.key_max {
            return Err(Error::Range(format!("key {x} exceeds the key universe")));
        }
        if !(1..=2).contains(&sign) {
            return Err(Error::Range(format!("sign trit {sign} not in {{1,2}}")));
        }
        let alpha = Gf3Vec::encode(x, self.field.degree())?;
        let mut p = alpha;
        for s in self.syndromes.iter_mut() {
            *s = s.add(&p.scale(sign))?;
            p = self.field.mul(&p, &alpha)?;
        }
        Ok(())
    }

    /// Component-wise self minus other: the *signed* difference (first
    /// operand's surplus keys come out positive).
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.field != other.field
            || self.syndromes.len() != other.syndromes.len()
            || self.key_max != other.key_max
        {
            return Err(Error::IncompatibleSketch(
                "ternary stashes differ in field or capacity".into(),
            ));
        }
        let syndromes = self
            .syndromes
            .iter()
            .zip(&other.syndromes)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            syndromes,
            field: self.field.clone(),
            key_max: self.key_max,
        })
    }

    /// Non-binary BCH decode: BM, exhaustive root scan, Forney values
    /// (which must be the trits 1 or 2), re-encode check.
    pub fn decode(&self) -> Result<Vec<SignedKey>> {
        if self.is_zero() {
            return Ok(Vec::new());
        }
        let f = &self.field;
        let m = f.degree();
        let r = self.r();
        let fmul = |a: Gf3Vec, b: Gf3Vec| SyndromeField::mul(f, a, b);
        let fadd = |a: Gf3Vec, b: Gf3Vec| SyndromeField::add(f, a, b);
        let finv = |a: Gf3Vec| SyndromeField::inv(f, a);
        let (lambda, l) = berlekamp_massey(f, &self.syndromes);
        if l == 0 || l > r || lambda.len() - 1 != l {
            return Err(Error::DecodeFailed);
        }
        let eval = |poly: &[Gf3Vec], x: Gf3Vec| {
            let mut acc = SyndromeField::zero(f);
            for c in poly.iter().rev() {
                acc = fadd(fmul(acc, x), *c);
            }
            acc
        };
        // Roots of Lambda are the reciprocal locators X_k^{-1}.
        let mut roots = Vec::new();
        for v in 1..crate::field::pow3(m) {
            let x = Gf3Vec::encode(v, m).expect("in range");
            if eval(&lambda, x).is_zero() {
                roots.push(x);
                if roots.len() > l {
                    break;
                }
            }
        }
        if roots.len() != l {
            return Err(Error::DecodeFailed);
        }
        // Forney: with S(z) = sum s_j z^j, Omega = Lambda * S mod z^(2r+1),
        // the value at locator X is -X * Omega(X^{-1}) / Lambda'(X^{-1}).
        let mut omega = vec![SyndromeField::zero(f); 2 * r + 1];
        for (i, li) in lambda.iter().enumerate() {
            for (j, sj) in self.syndromes.iter().enumerate() {
                // S's z^(j+1) coefficient is s_{j+1}
                if i + j + 1 <= 2 * r {
                    omega[i + j + 1] = fadd(omega[i + j + 1], fmul(*li, *sj));
                }
            }
        }
        // Derivative in characteristic 3: coefficient j*lambda_j.
        let lambda_deriv: Vec<Gf3Vec> = lambda
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c.scale((j % 3) as u8))
            .collect();
        let mut out: Vec<SignedKey> = Vec::new();
        for root in roots {
            let locator = finv(root);
            let num = fmul(locator, eval(&omega, root));
            let den = eval(&lambda_deriv, root);
            if den.is_zero() {
                return Err(Error::DecodeFailed);
            }
            let e = fmul(num, finv(den)).neg();
            let sign = if e == SyndromeField::one(f) {
                1u8
            } else if e == SyndromeField::one(f).neg() {
                2u8
            } else {
                return Err(Error::DecodeFailed);
            };
            let key = locator.decode()?;
            if key == 0 || key > self.key_max {
                return Err(Error::DecodeFailed);
            }
            out.push((key, sign));
        }
        let mut check = Self::new(r, f.clone(), self.key_max)?;
        for &(x, s) in &out {
            check.toggle(x, s)?;
        }
        if check.syndromes != self.syndromes {
            return Err(Error::DecodeFailed);
        }
        out.sort_unstable();
        Ok(out)
    }
}
