//! Erasure-coded block grid with one committed polynomial per row.
//!
//! Data is cut into 31-byte chunks, each read as a little-endian integer
//! below 2^248 (hence a canonical scalar). Row `r` holds `cols` data scalars
//! at the first `cols` points of the row domain; its polynomial is the
//! interpolant through them, evaluated over the whole extended domain.

use std::ops::Range;

use ark_ff::PrimeField;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kzg::{commit, Commitment, Srs};
use crate::multiproof::OpenedGroup;
use crate::poly::{interpolate, EvaluationDomain, MicroDomain, Polynomial, Scalar};
use crate::wire::GCellBlock;

pub const CHUNK_BYTES: usize = 31;
pub const DEFAULT_EXTENSION: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct GridDims {
    pub rows: u32,
    pub cols: u32,
    pub extension_factor: u32,
}

impl GridDims {
    pub fn new(rows: u32, cols: u32, extension_factor: u32) -> Result<Self> {
        let dims = Self {
            rows,
            cols,
            extension_factor,
        };
        dims.validate()?;
        Ok(dims)
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidDims(format!("{}x{} grid", self.rows, self.cols)));
        }
        if self.extension_factor < 2 {
            return Err(Error::InvalidDims(format!(
                "extension factor {} < 2",
                self.extension_factor
            )));
        }
        self.cols
            .checked_mul(self.extension_factor)
            .and_then(|w| w.checked_mul(self.rows))
            .ok_or_else(|| Error::InvalidDims("grid size overflows u32".into()))?;
        Ok(())
    }

    pub fn extended_cols(&self) -> u32 {
        self.cols * self.extension_factor
    }

    pub fn extended_cells(&self) -> u64 {
        self.rows as u64 * self.extended_cols() as u64
    }

    pub fn capacity_bytes(&self) -> usize {
        self.rows as usize * self.cols as usize * CHUNK_BYTES
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Coordinate {
    pub row: u32,
    pub col: u32,
}

impl Coordinate {
    pub fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }
}

/// `(row band, micro-domain index)` of a grouped object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct GroupId {
    pub band: u32,
    pub index: u32,
}

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "band {} / micro-domain {}", self.band, self.index)
    }
}

/// How cells are packed into grouped objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct GroupLayout {
    /// Micro-domain size `g`.
    pub group_size: u32,
    pub rows_per_group: u32,
}

impl GroupLayout {
    pub fn new(group_size: u32, rows_per_group: u32) -> Result<Self> {
        if group_size == 0 || rows_per_group == 0 {
            return Err(Error::InvalidArgument(
                "group size and rows per group must be positive".into(),
            ));
        }
        Ok(Self {
            group_size,
            rows_per_group,
        })
    }

    pub fn check(&self, dims: &GridDims) -> Result<()> {
        if !dims.extended_cols().is_multiple_of(self.group_size) {
            return Err(Error::Indivisible {
                domain: dims.extended_cols() as usize,
                size: self.group_size as usize,
            });
        }
        Ok(())
    }

    pub fn bands(&self, dims: &GridDims) -> u32 {
        dims.rows.div_ceil(self.rows_per_group)
    }

    pub fn groups_per_band(&self, dims: &GridDims) -> u32 {
        dims.extended_cols() / self.group_size
    }

    /// Rows covered by `band`; the last band may be short.
    pub fn band_rows(&self, dims: &GridDims, band: u32) -> Range<u32> {
        let start = band * self.rows_per_group;
        start..(start + self.rows_per_group).min(dims.rows)
    }

    pub fn block(&self, dims: &GridDims, id: GroupId) -> GCellBlock {
        let rows = self.band_rows(dims, id.band);
        GCellBlock {
            rows_start: rows.start,
            rows_end: rows.end,
            cols_start: id.index * self.group_size,
            cols_end: (id.index + 1) * self.group_size,
        }
    }

    /// All groups in band-major order.
    pub fn groups(&self, dims: &GridDims) -> Vec<GroupId> {
        (0..self.bands(dims))
            .flat_map(|band| (0..self.groups_per_band(dims)).map(move |index| GroupId { band, index }))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct DataGrid {
    dims: GridDims,
    cells: Vec<Vec<Scalar>>,
    row_domain: EvaluationDomain,
    row_polys: Vec<Polynomial>,
    row_commitments: Vec<Commitment>,
}

pub fn chunk_to_scalar(chunk: &[u8]) -> Scalar {
    debug_assert!(chunk.len() <= CHUNK_BYTES);
    Scalar::from_le_bytes_mod_order(chunk)
}

pub fn build_grid(srs: &Srs, data: &[u8], dims: GridDims) -> Result<DataGrid> {
    dims.validate()?;
    if data.len() > dims.capacity_bytes() {
        return Err(Error::DataTooLarge {
            len: data.len(),
            capacity: dims.capacity_bytes(),
        });
    }
    let cols = dims.cols as usize;
    if cols > srs.degree() + 1 {
        return Err(Error::DegreeOverflow {
            degree: cols - 1,
            bound: srs.degree(),
        });
    }
    let row_domain = EvaluationDomain::for_size(dims.extended_cols() as usize)?;
    let systematic = &row_domain.points()[..cols];

    let mut scalars: Vec<Scalar> = data.chunks(CHUNK_BYTES).map(chunk_to_scalar).collect();
    scalars.resize(dims.rows as usize * cols, Scalar::from(0u64));

    let mut cells = Vec::with_capacity(dims.rows as usize);
    let mut row_polys = Vec::with_capacity(dims.rows as usize);
    let mut row_commitments = Vec::with_capacity(dims.rows as usize);
    for row in scalars.chunks(cols) {
        let poly = interpolate(systematic, row)?;
        cells.push(row_domain.evaluate_all(&poly));
        row_commitments.push(commit(srs, &poly)?);
        row_polys.push(poly);
    }
    Ok(DataGrid {
        dims,
        cells,
        row_domain,
        row_polys,
        row_commitments,
    })
}

impl DataGrid {
    pub fn dims(&self) -> &GridDims {
        &self.dims
    }

    pub fn cells(&self) -> &[Vec<Scalar>] {
        &self.cells
    }

    pub fn cell(&self, c: Coordinate) -> Result<Scalar> {
        check_bounds(&self.dims, c)?;
        Ok(self.cells[c.row as usize][c.col as usize])
    }

    pub fn row_domain(&self) -> &EvaluationDomain {
        &self.row_domain
    }

    pub fn row_polys(&self) -> &[Polynomial] {
        &self.row_polys
    }

    pub fn row_commitments(&self) -> &[Commitment] {
        &self.row_commitments
    }

    pub fn block_id(&self) -> [u8; 32] {
        block_id(&self.row_commitments)
    }
}

/// Identifier of a block: digest of its row commitments in order.
pub fn block_id(commitments: &[Commitment]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"PMP-DAS-v1/block");
    for c in commitments {
        h.update(c.to_bytes());
    }
    h.finalize().into()
}

fn check_bounds(dims: &GridDims, c: Coordinate) -> Result<()> {
    if c.row >= dims.rows || c.col >= dims.extended_cols() {
        return Err(Error::OutOfBounds { row: c.row, col: c.col });
    }
    Ok(())
}

pub fn partition_micro_domains(row_domain: &EvaluationDomain, g: usize) -> Result<Vec<MicroDomain>> {
    if g == 0 || !row_domain.len().is_multiple_of(g) {
        return Err(Error::Indivisible {
            domain: row_domain.len(),
            size: g,
        });
    }
    (0..row_domain.len() / g)
        .map(|j| MicroDomain::new(row_domain, j * g, g))
        .collect()
}

pub fn coordinate_to_group(dims: &GridDims, c: Coordinate, layout: &GroupLayout) -> Result<GroupId> {
    check_bounds(dims, c)?;
    Ok(GroupId {
        band: c.row / layout.rows_per_group,
        index: c.col / layout.group_size,
    })
}

pub fn build_opened_group(grid: &DataGrid, band: Range<u32>, md: &MicroDomain) -> Result<OpenedGroup> {
    if band.is_empty() || band.end > grid.dims.rows {
        return Err(Error::Shape(format!(
            "row band {band:?} not within {} rows",
            grid.dims.rows
        )));
    }
    let g = md.size();
    let off = md.offset();
    if !off.is_multiple_of(g)
        || off + g > grid.row_domain.len()
        || md.points() != &grid.row_domain.points()[off..off + g]
    {
        return Err(Error::Shape(
            "micro-domain is not a block of this grid's row domain".into(),
        ));
    }
    let rows = band.start as usize..band.end as usize;
    OpenedGroup::new(
        grid.row_commitments[rows.clone()].to_vec(),
        grid.cells[rows].iter().map(|r| r[off..off + g].to_vec()).collect(),
        md.clone(),
    )
}
