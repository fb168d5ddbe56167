//! Byte layouts for the objects stored in the DHT, the proof-amortization
//! storage calculator, and the fixture container used by the CLI.
//!
//! All integers are little-endian. Scalars use the canonical 32-byte
//! encoding from [`crate::poly::scalar_to_bytes`]; anything at or above the
//! field modulus is rejected on decode.
//!
//! ```text
//! BaselineCell  proof[48] | data[32]                                  80 bytes
//! GCellBlock    rows_start u32 | rows_end u32 | cols_start u32 | cols_end u32
//! MCell         proof[48] | GCellBlock[16] | count u32 | count x scalar[32]
//! GroupedCells  GCellBlock[16] | count u32 | count x (proof[48] | scalar[32])
//! ```
//!
//! Block ranges are half-open: `[rows_start, rows_end) x [cols_start, cols_end)`.
//! Scalars in grouped objects are row-major over the covered region.

use ark_bls12_381::{G1Affine, G2Affine};
use serde::Serialize;

use crate::error::{Result, WireError};
use crate::grid::GridDims;
use crate::kzg::{g1_from_bytes, g1_to_bytes, g2_from_bytes, g2_to_bytes, Commitment, Srs, G1_BYTES, G2_BYTES};
use crate::poly::{scalar_from_bytes, scalar_to_bytes, Scalar};

pub const SCALAR_BYTES: usize = 32;
pub const PROOF_BYTES: usize = G1_BYTES;
pub const BLOCK_BYTES: usize = 16;
pub const BASELINE_CELL_BYTES: usize = PROOF_BYTES + SCALAR_BYTES;
pub const MCELL_HEADER_BYTES: usize = PROOF_BYTES + BLOCK_BYTES + 4;
pub const GROUPED_CELLS_HEADER_BYTES: usize = BLOCK_BYTES + 4;

/// Region of the extended grid covered by one grouped object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GCellBlock {
    pub rows_start: u32,
    pub rows_end: u32,
    pub cols_start: u32,
    pub cols_end: u32,
}

impl GCellBlock {
    pub fn rows(&self) -> u32 {
        self.rows_end - self.rows_start
    }

    pub fn cols(&self) -> u32 {
        self.cols_end - self.cols_start
    }

    pub fn cell_count(&self) -> u64 {
        self.rows() as u64 * self.cols() as u64
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.rows_start..self.rows_end).contains(&row) && (self.cols_start..self.cols_end).contains(&col)
    }

    /// Covered coordinates in row-major order.
    pub fn coords(&self) -> Vec<(u32, u32)> {
        (self.rows_start..self.rows_end)
            .flat_map(|r| (self.cols_start..self.cols_end).map(move |c| (r, c)))
            .collect()
    }

    pub fn to_bytes(&self) -> [u8; BLOCK_BYTES] {
        let mut out = [0u8; BLOCK_BYTES];
        out[0..4].copy_from_slice(&self.rows_start.to_le_bytes());
        out[4..8].copy_from_slice(&self.rows_end.to_le_bytes());
        out[8..12].copy_from_slice(&self.cols_start.to_le_bytes());
        out[12..16].copy_from_slice(&self.cols_end.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; BLOCK_BYTES]) -> Result<Self, WireError> {
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let block = Self {
            rows_start: word(0),
            rows_end: word(4),
            cols_start: word(8),
            cols_end: word(12),
        };
        block.validate()?;
        Ok(block)
    }

    fn validate(&self) -> Result<(), WireError> {
        if self.rows_start > self.rows_end || self.cols_start > self.cols_end {
            return Err(WireError::InvalidBlock {
                rows_start: self.rows_start,
                rows_end: self.rows_end,
                cols_start: self.cols_start,
                cols_end: self.cols_end,
            });
        }
        Ok(())
    }
}

/// Per-cell baseline object: one data scalar and its own opening proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaselineCell {
    pub proof: [u8; PROOF_BYTES],
    pub data: Scalar,
}

impl BaselineCell {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BASELINE_CELL_BYTES);
        out.extend_from_slice(&self.proof);
        out.extend_from_slice(&scalar_to_bytes(&self.data));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        exact_len(bytes, BASELINE_CELL_BYTES)?;
        Ok(Self {
            proof: bytes[..PROOF_BYTES].try_into().unwrap(),
            data: read_scalar(&bytes[PROOF_BYTES..], 0)?,
        })
    }
}

/// Grouped proof-carrying object: one aggregated proof over every value in
/// its block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MCell {
    pub proof: [u8; PROOF_BYTES],
    pub block: GCellBlock,
    pub scalars: Vec<Scalar>,
}

impl MCell {
    pub fn count(&self) -> u32 {
        self.scalars.len() as u32
    }

    pub fn encoded_len(&self) -> usize {
        MCELL_HEADER_BYTES + SCALAR_BYTES * self.scalars.len()
    }
}

pub fn encode_mcell(m: &MCell) -> Vec<u8> {
    debug_assert_eq!(m.block.cell_count(), m.scalars.len() as u64);
    let mut out = Vec::with_capacity(m.encoded_len());
    out.extend_from_slice(&m.proof);
    out.extend_from_slice(&m.block.to_bytes());
    out.extend_from_slice(&m.count().to_le_bytes());
    for s in &m.scalars {
        out.extend_from_slice(&scalar_to_bytes(s));
    }
    out
}

pub fn decode_mcell(bytes: &[u8]) -> Result<MCell, WireError> {
    min_len(bytes, MCELL_HEADER_BYTES)?;
    let proof: [u8; PROOF_BYTES] = bytes[..PROOF_BYTES].try_into().unwrap();
    let block = GCellBlock::from_bytes(bytes[PROOF_BYTES..PROOF_BYTES + BLOCK_BYTES].try_into().unwrap())?;
    let count = read_u32(&bytes[PROOF_BYTES + BLOCK_BYTES..]);
    let scalars = read_group_body(bytes, MCELL_HEADER_BYTES, &block, count, SCALAR_BYTES, |chunk, i| {
        read_scalar(chunk, i)
    })?;
    Ok(MCell { proof, block, scalars })
}

/// Grouped object without aggregation: each cell keeps its own proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedCells {
    pub block: GCellBlock,
    pub cells: Vec<BaselineCell>,
}

impl GroupedCells {
    pub fn encoded_len(&self) -> usize {
        GROUPED_CELLS_HEADER_BYTES + BASELINE_CELL_BYTES * self.cells.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&self.block.to_bytes());
        out.extend_from_slice(&(self.cells.len() as u32).to_le_bytes());
        for c in &self.cells {
            out.extend_from_slice(&c.encode());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        min_len(bytes, GROUPED_CELLS_HEADER_BYTES)?;
        let block = GCellBlock::from_bytes(bytes[..BLOCK_BYTES].try_into().unwrap())?;
        let count = read_u32(&bytes[BLOCK_BYTES..]);
        let cells = read_group_body(
            bytes,
            GROUPED_CELLS_HEADER_BYTES,
            &block,
            count,
            BASELINE_CELL_BYTES,
            |chunk, i| {
                Ok(BaselineCell {
                    proof: chunk[..PROOF_BYTES].try_into().unwrap(),
                    data: read_scalar(&chunk[PROOF_BYTES..], i)?,
                })
            },
        )?;
        Ok(Self { block, cells })
    }
}

fn read_group_body<T>(
    bytes: &[u8],
    header: usize,
    block: &GCellBlock,
    count: u32,
    item: usize,
    mut read: impl FnMut(&[u8], usize) -> Result<T, WireError>,
) -> Result<Vec<T>, WireError> {
    if count == 0 {
        return Err(WireError::EmptyGroup);
    }
    if count as u64 != block.cell_count() {
        return Err(WireError::CountMismatch {
            count,
            expected: block.cell_count(),
        });
    }
    exact_len(bytes, header + item * count as usize)?;
    bytes[header..]
        .chunks_exact(item)
        .enumerate()
        .map(|(i, chunk)| read(chunk, i))
        .collect()
}

fn read_u32(bytes: &[u8]) -> u32 {
    u32::from_le_bytes(bytes[..4].try_into().unwrap())
}

fn read_scalar(bytes: &[u8], index: usize) -> Result<Scalar, WireError> {
    scalar_from_bytes(bytes[..SCALAR_BYTES].try_into().unwrap()).ok_or(WireError::NonCanonicalScalar(index))
}

fn min_len(bytes: &[u8], needed: usize) -> Result<(), WireError> {
    if bytes.len() < needed {
        return Err(WireError::Truncated {
            needed,
            got: bytes.len(),
        });
    }
    Ok(())
}

fn exact_len(bytes: &[u8], needed: usize) -> Result<(), WireError> {
    min_len(bytes, needed)?;
    if bytes.len() > needed {
        return Err(WireError::TrailingBytes(bytes.len() - needed));
    }
    Ok(())
}

/// Proof-amortization storage figures for `entries` cells grouped by `g`.
///
/// The `grouped_*` figures count one proof plus `g` scalars per object and
/// deliberately leave out block metadata and framing; the `wire_*` figures
/// are the full [`MCell`] encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StorageReport {
    pub entries: u64,
    pub group_size: u64,
    pub baseline_object_bytes: u64,
    pub baseline_total_bytes: u64,
    pub grouped_object_count: u64,
    pub grouped_object_bytes: u64,
    pub grouped_total_bytes: u64,
    /// Amortized bytes per entry as a reduced fraction.
    pub amortized_numerator: u64,
    pub amortized_denominator: u64,
    pub wire_object_bytes: u64,
    pub wire_total_bytes: u64,
}

impl StorageReport {
    /// Amortized bytes per entry when it is a whole number.
    pub fn amortized_exact(&self) -> Option<u64> {
        (self.amortized_denominator == 1).then_some(self.amortized_numerator)
    }

    pub fn amortized(&self) -> f64 {
        self.amortized_numerator as f64 / self.amortized_denominator as f64
    }

    pub fn amortized_display(&self) -> String {
        match self.amortized_exact() {
            Some(v) => v.to_string(),
            None => format!("{}/{}", self.amortized_numerator, self.amortized_denominator),
        }
    }
}

pub fn storage_report(entries: u64, g: u64) -> crate::error::Result<StorageReport> {
    if g == 0 || !entries.is_multiple_of(g) {
        return Err(crate::error::Error::Indivisible {
            domain: entries as usize,
            size: g as usize,
        });
    }
    let objects = entries / g;
    let object_bytes = SCALAR_BYTES as u64 * g + PROOF_BYTES as u64;
    let wire_object_bytes = MCELL_HEADER_BYTES as u64 + SCALAR_BYTES as u64 * g;
    let gcd = gcd(object_bytes, g);
    Ok(StorageReport {
        entries,
        group_size: g,
        baseline_object_bytes: BASELINE_CELL_BYTES as u64,
        baseline_total_bytes: entries * BASELINE_CELL_BYTES as u64,
        grouped_object_count: objects,
        grouped_object_bytes: object_bytes,
        grouped_total_bytes: objects * object_bytes,
        amortized_numerator: object_bytes / gcd,
        amortized_denominator: g / gcd,
        wire_object_bytes,
        wire_total_bytes: objects * wire_object_bytes,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

// ---------------------------------------------------------------------------
// Fixture container
// ---------------------------------------------------------------------------

pub const FIXTURE_MAGIC: &[u8; 4] = b"PMPD";
pub const FIXTURE_VERSION: u8 = 0x01;

pub const SECTION_SRS: [u8; 4] = *b"SRS0";
pub const SECTION_GRID: [u8; 4] = *b"GRID";
pub const SECTION_PARAMS: [u8; 4] = *b"PARM";
pub const SECTION_HEADER: [u8; 4] = *b"HEAD";
pub const SECTION_MCELLS: [u8; 4] = *b"MCEL";

/// `"PMPD" | version u8 | section count u32 | (tag[4] | len u32 | payload)*`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fixture {
    sections: Vec<([u8; 4], Vec<u8>)>,
}

impl Fixture {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a section.
    pub fn put(&mut self, tag: [u8; 4], payload: Vec<u8>) {
        match self.sections.iter_mut().find(|(t, _)| *t == tag) {
            Some(slot) => slot.1 = payload,
            None => self.sections.push((tag, payload)),
        }
    }

    pub fn get(&self, tag: [u8; 4]) -> Result<&[u8], WireError> {
        self.sections
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, p)| p.as_slice())
            .ok_or_else(|| WireError::MissingSection(String::from_utf8_lossy(&tag).into_owned()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FIXTURE_MAGIC);
        out.push(FIXTURE_VERSION);
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for (tag, payload) in &self.sections {
            out.extend_from_slice(tag);
            out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            out.extend_from_slice(payload);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != FIXTURE_MAGIC {
            return Err(WireError::BadMagic);
        }
        let version = r.take(1)?[0];
        if version != FIXTURE_VERSION {
            return Err(WireError::UnsupportedVersion(version));
        }
        let n = r.u32()?;
        let mut sections = Vec::new();
        for _ in 0..n {
            let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
            let len = r.u32()? as usize;
            sections.push((tag, r.take(len)?.to_vec()));
        }
        r.finish()?;
        Ok(Self { sections })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(WireError::Truncated {
                needed: self.pos.saturating_add(n),
                got: self.bytes.len(),
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(read_u32(self.take(4)?))
    }

    fn finish(&self) -> Result<(), WireError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}

fn malformed(tag: &str) -> impl Fn(WireError) -> WireError + '_ {
    move |_| WireError::MalformedSection(tag.to_string())
}

pub fn encode_srs(srs: &Srs) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(srs.degree() as u32).to_le_bytes());
    for p in srs.g1_powers() {
        out.extend_from_slice(&g1_to_bytes(p));
    }
    for p in srs.g2_powers() {
        out.extend_from_slice(&g2_to_bytes(p));
    }
    out
}

pub fn decode_srs(bytes: &[u8]) -> crate::error::Result<Srs> {
    let mut r = Reader::new(bytes);
    let n = r.u32().map_err(malformed("SRS0"))? as usize + 1;
    let g1: Vec<G1Affine> = (0..n)
        .map(|_| {
            let b = r.take(G1_BYTES).map_err(malformed("SRS0"))?;
            g1_from_bytes(b.try_into().unwrap(), "srs g1 power")
        })
        .collect::<crate::error::Result<_>>()?;
    let g2: Vec<G2Affine> = (0..n)
        .map(|_| {
            let b = r.take(G2_BYTES).map_err(malformed("SRS0"))?;
            g2_from_bytes(b.try_into().unwrap(), "srs g2 power")
        })
        .collect::<crate::error::Result<_>>()?;
    r.finish().map_err(malformed("SRS0"))?;
    Srs::from_powers(g1, g2)
}

/// Grid fixture: dimensions plus the raw (unextended) block bytes.
pub fn encode_grid_spec(dims: &GridDims, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [dims.rows, dims.cols, dims.extension_factor, data.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(data);
    out
}

pub fn decode_grid_spec(bytes: &[u8]) -> Result<(GridDims, Vec<u8>), WireError> {
    let mut r = Reader::new(bytes);
    let m = malformed("GRID");
    let rows = r.u32().map_err(&m)?;
    let cols = r.u32().map_err(&m)?;
    let extension_factor = r.u32().map_err(&m)?;
    let len = r.u32().map_err(&m)? as usize;
    let data = r.take(len).map_err(&m)?.to_vec();
    r.finish().map_err(&m)?;
    Ok((
        GridDims {
            rows,
            cols,
            extension_factor,
        },
        data,
    ))
}

/// Grouping parameters: micro-domain size and rows per group.
pub fn encode_params(g: u32, rows_per_group: u32) -> Vec<u8> {
    let mut out = g.to_le_bytes().to_vec();
    out.extend_from_slice(&rows_per_group.to_le_bytes());
    out
}

pub fn decode_params(bytes: &[u8]) -> Result<(u32, u32), WireError> {
    let mut r = Reader::new(bytes);
    let m = malformed("PARM");
    let g = r.u32().map_err(&m)?;
    let rpg = r.u32().map_err(&m)?;
    r.finish().map_err(&m)?;
    Ok((g, rpg))
}

/// Header: the row commitments, in row order.
pub fn encode_header(commitments: &[Commitment]) -> Vec<u8> {
    let mut out = (commitments.len() as u32).to_le_bytes().to_vec();
    for c in commitments {
        out.extend_from_slice(&c.to_bytes());
    }
    out
}

pub fn decode_header(bytes: &[u8]) -> crate::error::Result<Vec<Commitment>> {
    let mut r = Reader::new(bytes);
    let n = r.u32().map_err(malformed("HEAD"))?;
    let out = (0..n)
        .map(|_| {
            let b = r.take(G1_BYTES).map_err(malformed("HEAD"))?;
            Commitment::from_bytes(b.try_into().unwrap())
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    r.finish().map_err(malformed("HEAD"))?;
    Ok(out)
}

/// A list of length-prefixed encoded objects.
pub fn encode_object_list(objects: &[Vec<u8>]) -> Vec<u8> {
    let mut out = (objects.len() as u32).to_le_bytes().to_vec();
    for o in objects {
        out.extend_from_slice(&(o.len() as u32).to_le_bytes());
        out.extend_from_slice(o);
    }
    out
}

pub fn decode_object_list(bytes: &[u8]) -> Result<Vec<Vec<u8>>, WireError> {
    let mut r = Reader::new(bytes);
    let m = malformed("MCEL");
    let n = r.u32().map_err(&m)?;
    let out = (0..n)
        .map(|_| {
            let len = r.u32().map_err(&m)? as usize;
            Ok(r.take(len).map_err(&m)?.to_vec())
        })
        .collect::<Result<Vec<_>, WireError>>()?;
    r.finish().map_err(&m)?;
    Ok(out)
}
