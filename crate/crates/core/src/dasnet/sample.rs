//! Light-client sampling and verification.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::dht::{Key, SimDht};
use super::publish::{cell_key, group_key, ConfigMode};
use crate::error::{Error, Result};
use crate::grid::{coordinate_to_group, Coordinate, DataGrid, GridDims, GroupId, GroupLayout};
use crate::kzg::{
    verify_batch_independent_with, verify_single_with, Commitment, OpCounters, OpeningProof, SingleOpening, Srs,
};
use crate::multiproof::{verify_shared_with, AggregatedProof, OpenedGroup};
use crate::poly::{EvaluationDomain, MicroDomain, Scalar};
use crate::transcript::{derive_batch_rho, derive_gamma, Transcript};
use crate::wire::{decode_mcell, BaselineCell, GroupedCells};

/// Conservative count of independent samples when each fetch reveals a
/// group of `g` correlated cells.
pub fn effective_samples(s: u64, g: u64) -> Result<u64> {
    if g == 0 {
        return Err(Error::InvalidArgument("group size must be positive".into()));
    }
    Ok(s / g)
}

/// Coordinates to draw so that `effective_samples` reaches `target`.
pub fn required_samples(target: u64, g: u64) -> Result<u64> {
    if g == 0 {
        return Err(Error::InvalidArgument("group size must be positive".into()));
    }
    target
        .checked_mul(g)
        .ok_or_else(|| Error::InvalidArgument("sample count overflows".into()))
}

/// What a light client has to know about a block: the header it trusts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockHeader {
    pub block_id: [u8; 32],
    pub dims: GridDims,
    pub layout: GroupLayout,
    pub commitments: Vec<Commitment>,
}

impl BlockHeader {
    pub fn from_grid(grid: &DataGrid, layout: GroupLayout) -> Self {
        Self {
            block_id: grid.block_id(),
            dims: *grid.dims(),
            layout,
            commitments: grid.row_commitments().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    pub seed: u64,
    pub coordinates: Vec<Coordinate>,
    /// Distinct-group target the plan was sized for, if any.
    pub target_groups: Option<u64>,
}

impl SamplingPlan {
    /// `samples` distinct coordinates drawn uniformly from the extended grid.
    pub fn uniform(dims: &GridDims, samples: u64, seed: u64) -> Result<Self> {
        let total = dims.extended_cells();
        if samples > total {
            return Err(Error::InvalidArgument(format!(
                "{samples} samples requested from {total} cells"
            )));
        }
        let width = dims.extended_cols() as usize;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let coordinates = rand::seq::index::sample(&mut rng, total as usize, samples as usize)
            .into_iter()
            .map(|i| Coordinate::new((i / width) as u32, (i % width) as u32))
            .collect();
        Ok(Self {
            seed,
            coordinates,
            target_groups: None,
        })
    }

    /// Plan sized so that the conservative effective sample count reaches
    /// `target`, with `g` cells per group.
    pub fn for_target(dims: &GridDims, target: u64, g: u64, seed: u64) -> Result<Self> {
        let s = required_samples(target, g)?;
        let mut plan = Self::uniform(dims, s, seed)?;
        plan.target_groups = Some(target);
        Ok(plan)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SampleStatus {
    Verified,
    /// No replica could be fetched within the retry budget.
    FetchFailed,
    /// Data arrived but no fetched copy passed verification.
    VerifyFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SampleResult {
    pub coord: Coordinate,
    pub status: SampleStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RetrievalOutcome {
    pub mode: ConfigMode,
    pub samples: Vec<SampleResult>,
    /// Distinct DHT keys looked up.
    pub lookups: u64,
    /// Peer requests issued, retries included.
    pub attempts: u64,
    pub fetched_bytes: u64,
    /// Retries spent beyond the first attempt of each lookup.
    pub retries: u64,
    pub distinct_coordinates: u64,
    /// Distinct groups of the block layout the plan touches, whatever the
    /// mode.
    pub distinct_groups: u64,
    pub effective_independent_samples: u64,
    pub ops: OpCounters,
}

impl RetrievalOutcome {
    fn count(&self, f: impl Fn(SampleStatus) -> bool) -> u64 {
        self.samples.iter().filter(|s| f(s.status)).count() as u64
    }

    /// Samples whose object was fetched, whatever the verification result.
    pub fn hits(&self) -> u64 {
        self.count(|s| s != SampleStatus::FetchFailed)
    }

    pub fn verified(&self) -> u64 {
        self.count(|s| s == SampleStatus::Verified)
    }

    pub fn verify_failures(&self) -> u64 {
        self.count(|s| s == SampleStatus::VerifyFailed)
    }

    pub fn fetch_failures(&self) -> u64 {
        self.count(|s| s == SampleStatus::FetchFailed)
    }

    pub fn hit_rate(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.hits() as f64 / self.samples.len() as f64
    }
}

struct Fetch<T> {
    value: Option<T>,
    fetched: bool,
    /// Replica rank to try next.
    next: usize,
}

pub struct LightClient<'a> {
    srs: &'a Srs,
    header: &'a BlockHeader,
    row_domain: EvaluationDomain,
    retry_budget: u32,
}

impl<'a> LightClient<'a> {
    pub fn new(srs: &'a Srs, header: &'a BlockHeader, retry_budget: u32) -> Result<Self> {
        header.layout.check(&header.dims)?;
        if header.commitments.len() != header.dims.rows as usize {
            return Err(Error::LengthMismatch {
                expected: header.dims.rows as usize,
                got: header.commitments.len(),
            });
        }
        Ok(Self {
            srs,
            header,
            row_domain: EvaluationDomain::for_size(header.dims.extended_cols() as usize)?,
            retry_budget,
        })
    }

    fn max_attempts(&self) -> usize {
        1 + self.retry_budget as usize
    }

    /// Walks the replica set of `key` from rank `start`, stopping at the
    /// first copy `accept` takes.
    fn fetch<T>(
        &self,
        dht: &SimDht,
        key: &Key,
        start: usize,
        stats: &mut RetrievalOutcome,
        mut accept: impl FnMut(&[u8], &mut OpCounters) -> Option<T>,
    ) -> Fetch<T> {
        let replicas = dht.replica_set(key);
        let end = replicas.len().min(self.max_attempts());
        let mut fetched = false;
        for (rank, &peer) in replicas.iter().enumerate().take(end).skip(start) {
            if rank > 0 {
                stats.retries += 1;
            }
            stats.attempts += 1;
            let Some(bytes) = dht.fetch_from(peer, key) else {
                continue;
            };
            fetched = true;
            stats.fetched_bytes += bytes.len() as u64;
            if let Some(v) = accept(bytes, &mut stats.ops) {
                return Fetch {
                    value: Some(v),
                    fetched,
                    next: rank + 1,
                };
            }
        }
        Fetch {
            value: None,
            fetched,
            next: end,
        }
    }

    fn status<T>(f: &Fetch<T>) -> SampleStatus {
        match (&f.value, f.fetched) {
            (Some(_), _) => SampleStatus::Verified,
            (None, true) => SampleStatus::VerifyFailed,
            (None, false) => SampleStatus::FetchFailed,
        }
    }

    fn cell_opening(&self, c: Coordinate, cell: &BaselineCell) -> Option<SingleOpening> {
        Some(SingleOpening {
            commitment: self.header.commitments[c.row as usize],
            point: self.row_domain.points()[c.col as usize],
            value: cell.data,
            proof: OpeningProof::from_bytes(&cell.proof).ok()?,
        })
    }

    fn check_cell(&self, c: Coordinate, cell: &BaselineCell, ops: &mut OpCounters) -> bool {
        self.cell_opening(c, cell)
            .is_some_and(|o| verify_single_with(self.srs, &o.commitment, &o.point, &o.value, &o.proof, ops))
    }

    fn check_grouped(&self, id: GroupId, bytes: &[u8], ops: &mut OpCounters) -> bool {
        let expected = self.header.layout.block(&self.header.dims, id);
        let Ok(obj) = GroupedCells::decode(bytes) else {
            return false;
        };
        obj.block == expected
            && obj
                .block
                .coords()
                .into_iter()
                .zip(&obj.cells)
                .all(|((r, c), cell)| self.check_cell(Coordinate::new(r, c), cell, ops))
    }

    fn check_pmp(&self, id: GroupId, bytes: &[u8], ops: &mut OpCounters) -> bool {
        let expected = self.header.layout.block(&self.header.dims, id);
        let Ok(m) = decode_mcell(bytes) else {
            return false;
        };
        if m.block != expected {
            return false;
        }
        let Ok(proof) = AggregatedProof::from_bytes(&m.proof) else {
            return false;
        };
        let g = m.block.cols() as usize;
        let Ok(md) = MicroDomain::new(&self.row_domain, m.block.cols_start as usize, g) else {
            return false;
        };
        let commitments = &self.header.commitments[m.block.rows_start as usize..m.block.rows_end as usize];
        let values: Vec<Vec<Scalar>> = m.scalars.chunks(g).map(<[Scalar]>::to_vec).collect();
        let Ok(group) = OpenedGroup::new(commitments.to_vec(), values, md.clone()) else {
            return false;
        };
        let gamma = derive_gamma(&Transcript::for_block(self.srs.id(), commitments, &md, m.block));
        verify_shared_with(self.srs, &group, &proof, &gamma, ops).unwrap_or(false)
    }

    /// Checks one grouped object served for group `id`. Per-cell modes have
    /// no grouped objects and always fail.
    pub fn verify_group_object(&self, mode: ConfigMode, id: GroupId, bytes: &[u8], ops: &mut OpCounters) -> bool {
        match mode {
            ConfigMode::Pmp => self.check_pmp(id, bytes, ops),
            ConfigMode::GroupedOnly => self.check_grouped(id, bytes, ops),
            ConfigMode::Vanilla | ConfigMode::BatchedSingle => false,
        }
    }

    pub fn sample_and_verify(&self, plan: &SamplingPlan, mode: ConfigMode, dht: &SimDht) -> Result<RetrievalOutcome> {
        let dims = &self.header.dims;
        let layout = &self.header.layout;
        let mut groups = BTreeMap::<GroupId, Vec<usize>>::new();
        for (i, &c) in plan.coordinates.iter().enumerate() {
            groups.entry(coordinate_to_group(dims, c, layout)?).or_default().push(i);
        }
        let distinct_groups = groups.len() as u64;
        let cells_per_group = (layout.group_size * layout.rows_per_group) as u64;
        let mut out = RetrievalOutcome {
            mode,
            samples: plan
                .coordinates
                .iter()
                .map(|&coord| SampleResult {
                    coord,
                    status: SampleStatus::FetchFailed,
                })
                .collect(),
            lookups: 0,
            attempts: 0,
            fetched_bytes: 0,
            retries: 0,
            distinct_coordinates: plan.coordinates.iter().collect::<BTreeSet<_>>().len() as u64,
            distinct_groups,
            effective_independent_samples: if mode.is_grouped() {
                effective_samples(plan.coordinates.len() as u64, cells_per_group)?
            } else {
                plan.coordinates.len() as u64
            },
            ops: OpCounters::default(),
        };
        let block_id = self.header.block_id;

        match mode {
            ConfigMode::Vanilla => {
                for (i, &c) in plan.coordinates.iter().enumerate() {
                    out.lookups += 1;
                    let f = self.fetch(dht, &cell_key(&block_id, c), 0, &mut out, |bytes, ops| {
                        let cell = BaselineCell::decode(bytes).ok()?;
                        self.check_cell(c, &cell, ops).then_some(())
                    });
                    out.samples[i].status = Self::status(&f);
                }
            }
            ConfigMode::BatchedSingle => {
                let mut pending = Vec::new();
                for (i, &c) in plan.coordinates.iter().enumerate() {
                    out.lookups += 1;
                    let f = self.fetch(dht, &cell_key(&block_id, c), 0, &mut out, |bytes, _| {
                        let cell = BaselineCell::decode(bytes).ok()?;
                        self.cell_opening(c, &cell).map(|o| (cell, o))
                    });
                    out.samples[i].status = if f.fetched {
                        SampleStatus::VerifyFailed
                    } else {
                        SampleStatus::FetchFailed
                    };
                    if let Some((cell, opening)) = f.value {
                        pending.push((i, cell, opening, f.next));
                    }
                }
                if pending.is_empty() {
                    return Ok(out);
                }
                let openings: Vec<SingleOpening> = pending.iter().map(|p| p.2).collect();
                let rho = derive_batch_rho(self.srs.id(), &openings);
                if verify_batch_independent_with(self.srs, &openings, &rho.scalar(), &mut out.ops)? {
                    for p in &pending {
                        out.samples[p.0].status = SampleStatus::Verified;
                    }
                    return Ok(out);
                }
                // locate the bad cells and retry them on further replicas
                for (i, cell, _, next) in pending {
                    let c = plan.coordinates[i];
                    if self.check_cell(c, &cell, &mut out.ops) {
                        out.samples[i].status = SampleStatus::Verified;
                        continue;
                    }
                    let f = self.fetch(dht, &cell_key(&block_id, c), next, &mut out, |bytes, ops| {
                        let cell = BaselineCell::decode(bytes).ok()?;
                        self.check_cell(c, &cell, ops).then_some(())
                    });
                    if f.value.is_some() {
                        out.samples[i].status = SampleStatus::Verified;
                    }
                }
            }
            ConfigMode::GroupedOnly | ConfigMode::Pmp => {
                for (id, members) in &groups {
                    out.lookups += 1;
                    let f = self.fetch(dht, &group_key(&block_id, *id), 0, &mut out, |bytes, ops| {
                        self.verify_group_object(mode, *id, bytes, ops).then_some(())
                    });
                    let status = Self::status(&f);
                    for &i in members {
                        out.samples[i].status = status;
                    }
                }
            }
        }
        Ok(out)
    }
}
