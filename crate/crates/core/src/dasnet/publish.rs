//! Object construction and publishing for each storage mode.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::dht::{Key, SimDht};
use crate::error::{Error, Result};
use crate::grid::{build_opened_group, Coordinate, DataGrid, GroupId, GroupLayout};
use crate::kzg::{open_single_with, OpCounters, Srs};
use crate::multiproof::open_shared_with;
use crate::poly::MicroDomain;
use crate::transcript::{derive_gamma, Transcript};
use crate::wire::{encode_mcell, BaselineCell, GroupedCells, MCell, PROOF_BYTES};

/// Storage and verification strategy under comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum ConfigMode {
    /// One object per cell, each checked with its own pairing equation.
    #[serde(rename = "vanilla")]
    Vanilla,
    /// Same objects as `Vanilla`; a client checks all of its samples in one
    /// randomized batch.
    #[serde(rename = "batched")]
    BatchedSingle,
    /// One object per group carrying every cell's individual proof.
    #[serde(rename = "grouped")]
    GroupedOnly,
    /// One object per group carrying a single aggregated proof.
    #[serde(rename = "pmp")]
    Pmp,
}

impl ConfigMode {
    pub const ALL: [ConfigMode; 4] = [Self::Vanilla, Self::BatchedSingle, Self::GroupedOnly, Self::Pmp];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vanilla => "vanilla",
            Self::BatchedSingle => "batched",
            Self::GroupedOnly => "grouped",
            Self::Pmp => "pmp",
        }
    }

    pub fn is_grouped(&self) -> bool {
        matches!(self, Self::GroupedOnly | Self::Pmp)
    }
}

impl fmt::Display for ConfigMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConfigMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode {s:?}")))
    }
}

/// DHT key of a per-cell object.
pub fn cell_key(block_id: &[u8; 32], c: Coordinate) -> Key {
    let mut h = Sha256::new();
    h.update(b"PMP-DAS-v1/cell");
    h.update(block_id);
    h.update(c.row.to_be_bytes());
    h.update(c.col.to_be_bytes());
    h.finalize().into()
}

/// DHT key of a grouped object. Both grouped modes use the same key.
pub fn group_key(block_id: &[u8; 32], id: GroupId) -> Key {
    let mut h = Sha256::new();
    h.update(b"PMP-DAS-v1/group");
    h.update(block_id);
    h.update(id.band.to_be_bytes());
    h.update(id.index.to_be_bytes());
    h.finalize().into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredObject {
    pub key: Key,
    pub bytes: Vec<u8>,
    /// Proof bytes carried by the object.
    pub proof_bytes: usize,
}

/// Encodes every object `mode` stores for `grid`, in publish order.
pub fn build_objects(
    srs: &Srs,
    grid: &DataGrid,
    layout: &GroupLayout,
    mode: ConfigMode,
    ops: &mut OpCounters,
) -> Result<Vec<StoredObject>> {
    let dims = *grid.dims();
    layout.check(&dims)?;
    let block_id = grid.block_id();
    let points = grid.row_domain().points();
    let cell = |c: Coordinate, ops: &mut OpCounters| -> Result<BaselineCell> {
        let (data, proof) = open_single_with(srs, &grid.row_polys()[c.row as usize], &points[c.col as usize], ops)?;
        Ok(BaselineCell {
            proof: proof.to_bytes(),
            data,
        })
    };
    match mode {
        ConfigMode::Vanilla | ConfigMode::BatchedSingle => {
            let mut out = Vec::with_capacity(dims.extended_cells() as usize);
            for row in 0..dims.rows {
                for col in 0..dims.extended_cols() {
                    let c = Coordinate::new(row, col);
                    out.push(StoredObject {
                        key: cell_key(&block_id, c),
                        bytes: cell(c, ops)?.encode(),
                        proof_bytes: PROOF_BYTES,
                    });
                }
            }
            Ok(out)
        }
        ConfigMode::GroupedOnly => layout
            .groups(&dims)
            .into_iter()
            .map(|id| {
                let block = layout.block(&dims, id);
                let cells = block
                    .coords()
                    .into_iter()
                    .map(|(r, c)| cell(Coordinate::new(r, c), ops))
                    .collect::<Result<Vec<_>>>()?;
                let proof_bytes = PROOF_BYTES * cells.len();
                Ok(StoredObject {
                    key: group_key(&block_id, id),
                    bytes: GroupedCells { block, cells }.encode(),
                    proof_bytes,
                })
            })
            .collect(),
        ConfigMode::Pmp => layout
            .groups(&dims)
            .into_iter()
            .map(|id| {
                let block = layout.block(&dims, id);
                let md = MicroDomain::new(grid.row_domain(), block.cols_start as usize, block.cols() as usize)?;
                let rows = block.rows_start..block.rows_end;
                let group = build_opened_group(grid, rows.clone(), &md)?;
                let gamma = derive_gamma(&Transcript::for_block(srs.id(), group.commitments(), &md, block));
                let polys = &grid.row_polys()[rows.start as usize..rows.end as usize];
                let proof = open_shared_with(srs, polys, &md, &gamma, ops)?;
                let m = MCell {
                    proof: proof.to_bytes(),
                    block,
                    scalars: group.flat_values(),
                };
                Ok(StoredObject {
                    key: group_key(&block_id, id),
                    bytes: encode_mcell(&m),
                    proof_bytes: PROOF_BYTES,
                })
            })
            .collect(),
    }
}

/// Outbound write capacity of the publishing node for one block.
///
/// Each replica write costs the object size plus a fixed per-put overhead.
/// Writes are issued rank by rank (first replica of every object, then the
/// second, ...) until the next write no longer fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PutBudget {
    /// `None` means unlimited.
    pub bytes: Option<u64>,
    pub overhead_bytes: u64,
}

impl PutBudget {
    pub const UNLIMITED: PutBudget = PutBudget {
        bytes: None,
        overhead_bytes: 0,
    };
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct PublishReport {
    /// Replicas that landed, per object in publish order.
    pub replicas: Vec<usize>,
    pub object_bytes: u64,
    pub proof_bytes: u64,
    pub replica_writes: u64,
    /// Writes addressed to a dead peer.
    pub failed_writes: u64,
    /// Bytes charged against the budget, overhead included.
    pub bytes_sent: u64,
    pub ops: OpCounters,
}

impl PublishReport {
    pub fn objects(&self) -> usize {
        self.replicas.len()
    }

    /// Objects with at least one replica.
    pub fn objects_stored(&self) -> usize {
        self.replicas.iter().filter(|&&r| r > 0).count()
    }

    /// Indices of objects that ended with fewer than `target` replicas.
    pub fn under_replicated(&self, target: usize) -> Vec<usize> {
        (0..self.replicas.len())
            .filter(|&i| self.replicas[i] < target)
            .collect()
    }
}

pub fn publish_objects(dht: &mut SimDht, objects: &[StoredObject], budget: PutBudget) -> PublishReport {
    let mut report = PublishReport {
        replicas: vec![0; objects.len()],
        object_bytes: objects.iter().map(|o| o.bytes.len() as u64).sum(),
        proof_bytes: objects.iter().map(|o| o.proof_bytes as u64).sum(),
        ..Default::default()
    };
    'ranks: for rank in 0..dht.replication_factor() {
        for (i, o) in objects.iter().enumerate() {
            let cost = o.bytes.len() as u64 + budget.overhead_bytes;
            if let Some(limit) = budget.bytes {
                if report.bytes_sent + cost > limit {
                    break 'ranks;
                }
            }
            report.bytes_sent += cost;
            if dht.put_at_rank(o.key, &o.bytes, rank) {
                report.replicas[i] += 1;
                report.replica_writes += 1;
            } else {
                report.failed_writes += 1;
            }
        }
    }
    report
}

/// Builds and publishes every object of `grid` under `mode`.
pub fn publish(
    srs: &Srs,
    grid: &DataGrid,
    layout: &GroupLayout,
    mode: ConfigMode,
    dht: &mut SimDht,
    budget: PutBudget,
) -> Result<PublishReport> {
    let mut ops = OpCounters::default();
    let objects = build_objects(srs, grid, layout, mode, &mut ops)?;
    let mut report = publish_objects(dht, &objects, budget);
    report.ops = ops;
    Ok(report)
}
