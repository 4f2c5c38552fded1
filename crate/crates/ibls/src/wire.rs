//! Binary sketch file format. Fixed 55-byte little-endian header followed by
//! the IBLT cells, the checksum word, and the stash syndromes. Signed
//! sketches pack ternary payloads at 2 bits per trit.

use crate::bch::{BchSketch, TernaryBchSketch};
use crate::error::{Error, Result};
use crate::field::{FieldParams2, FieldParams3, Gf3Vec, POLY3_TABLE};
use crate::hashing::HashSeeds;
use crate::iblt::{cells_for_capacity, Iblt};
use crate::signed::{SignedIblt, SignedParams, SignedSketch};
use crate::sketch::{Sketch, SketchParams};

pub const MAGIC: &[u8; 4] = b"IBLS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 55;
const FLAG_SIGNED: u8 = 0b0000_0001;

/// Either flavor of sketch, as stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub enum SketchFile {
    Unsigned(Sketch),
    Signed(SignedSketch),
}

fn bytes_per_cell2(w: u32) -> usize {
    (w as usize + 7) / 8
}

fn bytes_per_trits(trits: usize) -> usize {
    (2 * trits + 7) / 8
}

fn push_u64_le(out: &mut Vec<u8>, v: u64, nbytes: usize) {
    out.extend_from_slice(&v.to_le_bytes()[..nbytes]);
}

/// Packs a trit vector at 2 bits per trit, least-significant trit first.
fn push_trits(out: &mut Vec<u8>, v: &Gf3Vec) {
    let nbytes = bytes_per_trits(v.width() as usize);
    let mut packed = 0u64;
    for i in 0..v.width() {
        packed |= (v.quad(i) as u64) << (2 * i);
    }
    push_u64_le(out, packed, nbytes);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated sketch file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn uint_le(&mut self, nbytes: usize) -> Result<u64> {
        let s = self.take(nbytes)?;
        let mut b = [0u8; 8];
        b[..nbytes].copy_from_slice(s);
        Ok(u64::from_le_bytes(b))
    }

    fn trits(&mut self, width: u8) -> Result<Gf3Vec> {
        let packed = self.uint_le(bytes_per_trits(width as usize))?;
        if width < 32 && packed >> (2 * width) != 0 {
            return Err(Error::Format("stray bits in packed trits".into()));
        }
        let mut quads = 0u128;
        for i in 0..width {
            quads |= (((packed >> (2 * i)) & 0b11) as u128) << (4 * i);
        }
        Gf3Vec::from_quads(quads, width).map_err(|_| Error::MalformedTrits)
    }
}

fn header(
    signed: bool,
    w: u32,
    n: u32,
    d: u32,
    r: u16,
    eps_milli: u16,
    poly_id: u16,
    nu: u8,
    seeds: &HashSeeds,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(if signed { FLAG_SIGNED } else { 0 });
    out.push(w as u8);
    out.push(3); // k
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&r.to_le_bytes());
    out.extend_from_slice(&eps_milli.to_le_bytes());
    out.extend_from_slice(&poly_id.to_le_bytes());
    out.push(nu);
    for s in seeds.index {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&seeds.checksum.to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    out
}

/// Expected on-disk size of an unsigned sketch.
pub fn unsigned_file_len(n: usize, w: u32, r: usize) -> usize {
    HEADER_LEN + n * bytes_per_cell2(w) + (r + 7) / 8 + r * bytes_per_cell2(w)
}

/// Expected on-disk size of a signed sketch.
pub fn signed_file_len(n: usize, nu: u8, r: usize) -> usize {
    HEADER_LEN
        + n * bytes_per_trits(nu as usize)
        + (r + 7) / 8
        + 2 * r * bytes_per_trits(nu as usize - 1)
}

pub fn serialize(file: &SketchFile) -> Vec<u8> {
    match file {
        SketchFile::Unsigned(s) => {
            let p = s.params();
            let w = p.field.width();
            let cell_bytes = bytes_per_cell2(w);
            let mut out = header(
                false,
                w,
                s.iblt().n() as u32,
                p.d,
                p.r as u16,
                p.eps_milli,
                p.field.poly_id().expect("shipped polynomial"),
                0,
                &p.seeds,
            );
            for &c in s.iblt().cells() {
                push_u64_le(&mut out, c, cell_bytes);
            }
            push_u64_le(&mut out, s.checksum(), (p.r as usize + 7) / 8);
            for &syn in s.stash().syndromes() {
                push_u64_le(&mut out, syn, cell_bytes);
            }
            out
        }
        SketchFile::Signed(s) => {
            let p = s.params();
            let nu = s.iblt().nu();
            let m = nu - 1;
            let poly_id = POLY3_TABLE
                .iter()
                .position(|&(deg, _)| deg == m)
                .expect("shipped ternary polynomial") as u16;
            let mut out = header(
                true,
                p.key_width,
                s.iblt().n() as u32,
                p.d,
                p.r as u16,
                p.eps_milli,
                poly_id,
                nu,
                &p.seeds,
            );
            for c in s.iblt().cells() {
                push_trits(&mut out, c);
            }
            push_u64_le(&mut out, s.checksum(), (p.r as usize + 7) / 8);
            for syn in s.stash().syndromes() {
                push_trits(&mut out, syn);
            }
            out
        }
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<SketchFile> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if cur.u8()? != VERSION {
        return Err(Error::Format("unsupported version".into()));
    }
    let flags = cur.u8()?;
    if flags & !FLAG_SIGNED != 0 {
        return Err(Error::Format("unknown flags set".into()));
    }
    let signed = flags & FLAG_SIGNED != 0;
    let w = cur.u8()? as u32;
    if cur.u8()? != 3 {
        return Err(Error::Format("unsupported hash count".into()));
    }
    let n = cur.u32()? as usize;
    let d = cur.u32()?;
    let r = cur.u16()? as u32;
    let eps_milli = cur.u16()?;
    let poly_id = cur.u16()?;
    let nu = cur.u8()?;
    let mut idx = [0u64; 3];
    for s in idx.iter_mut() {
        *s = cur.u64()?;
    }
    let checksum_seed = cur.u64()?;
    let seeds = HashSeeds::new(idx, checksum_seed)
        .map_err(|e| Error::Format(format!("bad seeds: {e}")))?;

    if d == 0 || n as u64 != cells_for_capacity(d as u64, eps_milli) {
        return Err(Error::Format(
            "cell count does not match capacity and epsilon".into(),
        ));
    }
    if r == 0 || r > 64 {
        return Err(Error::Format("stash parameter out of range".into()));
    }
    let checksum_bytes = (r as usize + 7) / 8;

    if signed {
        let m = FieldParams3::degree_for_key_width(w);
        if nu != m + 1 {
            return Err(Error::Format("trit width inconsistent with key width".into()));
        }
        let expected = POLY3_TABLE
            .iter()
            .position(|&(deg, _)| deg == m)
            .ok_or_else(|| Error::Format("no shipped ternary polynomial".into()))?;
        if poly_id as usize != expected {
            return Err(Error::Format("polynomial id mismatch".into()));
        }
        let params = SignedParams::new(d, r, w, eps_milli, seeds)
            .map_err(|e| Error::Format(format!("bad parameters: {e}")))?;
        if bytes.len() != signed_file_len(n, nu, r as usize) {
            return Err(Error::Format("payload length mismatch".into()));
        }
        let mut cells = Vec::with_capacity(n);
        for _ in 0..n {
            cells.push(cur.trits(nu)?);
        }
        let a = SignedIblt::from_cells(cells, seeds, nu, params.key_max())?;
        let h = cur.uint_le(checksum_bytes)?;
        if r < 64 && h >> r != 0 {
            return Err(Error::Format("checksum exceeds declared width".into()));
        }
        let field3 = params.ternary_field()?;
        let mut syndromes = Vec::with_capacity(2 * r as usize);
        for _ in 0..2 * r {
            syndromes.push(cur.trits(m)?);
        }
        let c = TernaryBchSketch::from_syndromes(syndromes, field3, params.key_max())?;
        Ok(SketchFile::Signed(SignedSketch::from_parts(a, h, c, params)))
    } else {
        if nu != 0 {
            return Err(Error::Format("trit width set on unsigned sketch".into()));
        }
        let field = FieldParams2::from_poly_id(poly_id)?;
        if field.width() != w {
            return Err(Error::Format("polynomial id inconsistent with width".into()));
        }
        if bytes.len() != unsigned_file_len(n, w, r as usize) {
            return Err(Error::Format("payload length mismatch".into()));
        }
        let cell_bytes = bytes_per_cell2(w);
        let mut cells = Vec::with_capacity(n);
        for _ in 0..n {
            cells.push(cur.uint_le(cell_bytes)?);
        }
        let a = Iblt::from_cells(cells, field, seeds)?;
        let h = cur.uint_le(checksum_bytes)?;
        if r < 64 && h >> r != 0 {
            return Err(Error::Format("checksum exceeds declared width".into()));
        }
        let mut syndromes = Vec::with_capacity(r as usize);
        for _ in 0..r {
            let s = cur.uint_le(cell_bytes)?;
            syndromes.push(s);
        }
        let c = BchSketch::from_syndromes(syndromes, field)?;
        let params = SketchParams::new(d, r, field, eps_milli, seeds)
            .map_err(|e| Error::Format(format!("bad parameters: {e}")))?;
        Ok(SketchFile::Unsigned(Sketch::from_parts(a, h, c, params)))
    }
}
