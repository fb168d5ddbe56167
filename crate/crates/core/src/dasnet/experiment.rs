//! Seeded end-to-end runs: build a block, publish it, apply churn, sample.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::dht::SimDht;
use super::publish::{publish, ConfigMode, PutBudget};
use super::sample::{BlockHeader, LightClient, SamplingPlan};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridDims, GroupLayout};
use crate::kzg::{OpCounters, Srs};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub rows: u32,
    pub cols: u32,
    pub extension: u32,
    pub group_size: u32,
    pub rows_per_group: u32,
    pub peers: usize,
    pub replication: usize,
    pub retry_budget: u32,
    pub light_clients: u32,
    pub samples: u64,
    /// Publisher write budget per block; 0 disables the limit.
    pub put_budget_bytes: u64,
    pub put_overhead_bytes: u64,
    pub churn: Vec<f64>,
    pub modes: Vec<ConfigMode>,
    pub seed: u64,
    pub runs: u64,
    /// Block payload size; defaults to the grid capacity.
    pub data_bytes: Option<usize>,
    /// Kademlia lookup parallelism and bucket size. Recorded for
    /// reference only: the simulated DHT does not route.
    pub kademlia_alpha: u32,
    pub kademlia_k: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 8,
            extension: 2,
            group_size: 4,
            rows_per_group: 1,
            peers: 50,
            replication: 5,
            retry_budget: 3,
            light_clients: 4,
            samples: 16,
            put_budget_bytes: 24 * 1024,
            put_overhead_bytes: 128,
            churn: vec![0.0, 0.1, 0.2, 0.3],
            modes: ConfigMode::ALL.to_vec(),
            seed: 1,
            runs: 1,
            data_bytes: None,
            kademlia_alpha: 3,
            kademlia_k: 20,
        }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value for {key}: {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_field(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// unknown keys are an error. Lists are comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rows" => self.rows = parse_field(key, value)?,
            "cols" => self.cols = parse_field(key, value)?,
            "extension" => self.extension = parse_field(key, value)?,
            "group_size" => self.group_size = parse_field(key, value)?,
            "rows_per_group" => self.rows_per_group = parse_field(key, value)?,
            "peers" => self.peers = parse_field(key, value)?,
            "replication" => self.replication = parse_field(key, value)?,
            "retry_budget" => self.retry_budget = parse_field(key, value)?,
            "light_clients" => self.light_clients = parse_field(key, value)?,
            "samples" => self.samples = parse_field(key, value)?,
            "put_budget_bytes" => self.put_budget_bytes = parse_field(key, value)?,
            "put_overhead_bytes" => self.put_overhead_bytes = parse_field(key, value)?,
            "churn" => self.churn = parse_list(key, value)?,
            "modes" => self.modes = parse_list(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "runs" => self.runs = parse_field(key, value)?,
            "data_bytes" => self.data_bytes = Some(parse_field(key, value)?),
            "kademlia_alpha" => self.kademlia_alpha = parse_field(key, value)?,
            "kademlia_k" => self.kademlia_k = parse_field(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims()?;
        self.layout()?.check(&dims)?;
        if self.peers == 0 || self.replication == 0 {
            return Err(Error::InvalidArgument("peers and replication must be positive".into()));
        }
        if let Some(&c) = self.churn.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!("churn {c} outside [0, 1)")));
        }
        if self.samples > dims.extended_cells() {
            return Err(Error::InvalidArgument(format!(
                "{} samples exceed {} cells",
                self.samples,
                dims.extended_cells()
            )));
        }
        if self.data_bytes.is_some_and(|n| n > dims.capacity_bytes()) {
            return Err(Error::InvalidArgument("data_bytes exceeds grid capacity".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> Result<GridDims> {
        GridDims::new(self.rows, self.cols, self.extension)
    }

    pub fn layout(&self) -> Result<GroupLayout> {
        GroupLayout::new(self.group_size, self.rows_per_group)
    }

    pub fn budget(&self) -> PutBudget {
        PutBudget {
            bytes: (self.put_budget_bytes > 0).then_some(self.put_budget_bytes),
            overhead_bytes: self.put_overhead_bytes,
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        self.seed..self.seed.saturating_add(self.runs)
    }
}

/// One row of experiment output. Operation counts are the verifier side,
/// summed over all light clients.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MetricsRecord {
    pub mode: ConfigMode,
    pub seed: u64,
    pub churn: f64,
    pub objects: u64,
    pub objects_stored: u64,
    pub replica_writes: u64,
    pub proof_bytes: u64,
    pub object_bytes: u64,
    pub samples: u64,
    pub hits: u64,
    pub hit_rate: f64,
    pub verified: u64,
    pub verify_failures: u64,
    pub fetch_failures: u64,
    pub lookups: u64,
    pub attempts: u64,
    pub retries: u64,
    pub distinct_coordinates: u64,
    pub distinct_groups: u64,
    pub effective_samples: u64,
    pub g1_mults: u64,
    pub g2_mults: u64,
    pub pairings: u64,
    pub interpolations: u64,
    pub publisher_g1_mults: u64,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "mode",
    "seed",
    "churn",
    "objects_stored",
    "proof_bytes",
    "object_bytes",
    "hit_rate",
    "verify_failures",
    "g1_mults",
    "g2_mults",
    "pairings",
    "interpolations",
];

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{},{},{},{},{}",
            self.mode,
            self.seed,
            self.churn,
            self.objects_stored,
            self.proof_bytes,
            self.object_bytes,
            self.hit_rate,
            self.verify_failures,
            self.g1_mults,
            self.g2_mults,
            self.pairings,
            self.interpolations
        )
    }
}

pub fn render_csv(records: &[MetricsRecord]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn render_json(records: &[MetricsRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

/// Shared state for a batch of runs: the configuration and its setup.
pub struct Experiment {
    cfg: ExperimentConfig,
    srs: Srs,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        // known-secret setup: simulation only
        let mut rng = ChaCha20Rng::from_seed(*b"pmp-das simulation setup secret!");
        let secret = crate::poly::random_scalar(&mut rng);
        let srs = Srs::gen(cfg.cols.max(cfg.group_size) as usize, secret)?;
        Ok(Self { cfg, srs })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn srs(&self) -> &Srs {
        &self.srs
    }

    /// Block payload for `seed`; independent of mode and churn.
    pub fn block_data(&self, seed: u64) -> Result<Vec<u8>> {
        let dims = self.cfg.dims()?;
        let mut data = vec![0u8; self.cfg.data_bytes.unwrap_or(dims.capacity_bytes())];
        ChaCha20Rng::seed_from_u64(seed ^ 0x5EED_DA7A).fill_bytes(&mut data);
        Ok(data)
    }

    pub fn run(&self, mode: ConfigMode, churn: f64, seed: u64) -> Result<MetricsRecord> {
        Ok(self.run_sweep(mode, seed, &[churn])?.remove(0))
    }

    /// Publishes the block for `seed` once, then samples it under each churn
    /// level on a fresh copy of the network.
    pub fn run_sweep(&self, mode: ConfigMode, seed: u64, churn: &[f64]) -> Result<Vec<MetricsRecord>> {
        if let Some(&c) = churn.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!("churn {c} outside [0, 1)")));
        }
        let cfg = &self.cfg;
        let dims = cfg.dims()?;
        let layout = cfg.layout()?;

        let grid = build_grid(&self.srs, &self.block_data(seed)?, dims)?;
        let header = BlockHeader::from_grid(&grid, layout);
        let mut published = SimDht::new(cfg.peers, cfg.replication, seed);
        let report = publish(&self.srs, &grid, &layout, mode, &mut published, cfg.budget())?;
        let client = LightClient::new(&self.srs, &header, cfg.retry_budget)?;

        let mut records = Vec::with_capacity(churn.len());
        for &c in churn {
            self.srs.clear_cache();
            let mut dht = published.clone();
            dht.apply_churn(c);
            let mut rec = MetricsRecord {
                mode,
                seed,
                churn: c,
                objects: report.objects() as u64,
                objects_stored: report.objects_stored() as u64,
                replica_writes: report.replica_writes,
                proof_bytes: report.proof_bytes,
                object_bytes: report.object_bytes,
                samples: 0,
                hits: 0,
                hit_rate: 0.0,
                verified: 0,
                verify_failures: 0,
                fetch_failures: 0,
                lookups: 0,
                attempts: 0,
                retries: 0,
                distinct_coordinates: 0,
                distinct_groups: 0,
                effective_samples: 0,
                g1_mults: 0,
                g2_mults: 0,
                pairings: 0,
                interpolations: 0,
                publisher_g1_mults: report.ops.g1_scalar_mults,
            };
            let mut ops = OpCounters::default();
            for client_index in 0..cfg.light_clients as u64 {
                let plan_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(client_index);
                let plan = SamplingPlan::uniform(&dims, cfg.samples, plan_seed)?;
                let out = client.sample_and_verify(&plan, mode, &dht)?;
                rec.samples += out.samples.len() as u64;
                rec.hits += out.hits();
                rec.verified += out.verified();
                rec.verify_failures += out.verify_failures();
                rec.fetch_failures += out.fetch_failures();
                rec.lookups += out.lookups;
                rec.attempts += out.attempts;
                rec.retries += out.retries;
                rec.distinct_coordinates += out.distinct_coordinates;
                rec.distinct_groups += out.distinct_groups;
                rec.effective_samples += out.effective_independent_samples;
                ops += out.ops;
            }
            rec.hit_rate = if rec.samples == 0 {
                0.0
            } else {
                rec.hits as f64 / rec.samples as f64
            };
            rec.g1_mults = ops.g1_scalar_mults;
            rec.g2_mults = ops.g2_scalar_mults;
            rec.pairings = ops.pairings;
            rec.interpolations = ops.interpolations;
            records.push(rec);
        }
        Ok(records)
    }

    /// Every configured (mode, churn, seed) combination, sorted by mode,
    /// then churn, then seed.
    pub fn run_all(&self) -> Result<Vec<MetricsRecord>> {
        let mut modes = self.cfg.modes.clone();
        modes.sort();
        modes.dedup();
        let mut churn = self.cfg.churn.clone();
        churn.sort_by(f64::total_cmp);
        churn.dedup();
        let mut out = Vec::new();
        for &mode in &modes {
            for seed in self.cfg.seeds() {
                out.extend(self.run_sweep(mode, seed, &churn)?);
            }
        }
        out.sort_by(|a, b| {
            a.mode
                .cmp(&b.mode)
                .then(a.churn.total_cmp(&b.churn))
                .then(a.seed.cmp(&b.seed))
        });
        Ok(out)
    }
}

/// Convenience wrapper for a single run.
pub fn run_experiment(cfg: &ExperimentConfig, mode: ConfigMode, churn: f64, seed: u64) -> Result<MetricsRecord> {
    Experiment::new(cfg.clone())?.run(mode, churn, seed)
}

pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    Experiment::new(cfg.clone())?.run_all()
}

/// Mean hit rate of `mode` at `churn` over `records`.
pub fn mean_hit_rate(records: &[MetricsRecord], mode: ConfigMode, churn: f64) -> Option<f64> {
    let rates: Vec<f64> = records
        .iter()
        .filter(|r| r.mode == mode && r.churn == churn)
        .map(|r| r.hit_rate)
        .collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            light_clients: 1,
            samples: 8,
            ..Default::default()
        }
    }

    #[test]
    fn parse_config() {
        let cfg = ExperimentConfig::parse(
            "# ablation\nrows = 2\ncols=4\n\nchurn = 0.0, 0.25\nmodes = pmp,vanilla  # two\nput_budget_bytes = 0\n",
        )
        .unwrap();
        assert_eq!((cfg.rows, cfg.cols), (2, 4));
        assert_eq!(cfg.churn, vec![0.0, 0.25]);
        assert_eq!(cfg.modes, vec![ConfigMode::Pmp, ConfigMode::Vanilla]);
        assert_eq!(cfg.budget().bytes, None);
        assert!(ExperimentConfig::parse("colour = blue").is_err());
        assert!(ExperimentConfig::parse("rows").is_err());
        assert!(ExperimentConfig::parse("churn = 1.0").is_err());
        assert!(ExperimentConfig::parse("group_size = 3").is_err());
        assert!(ExperimentConfig::parse("samples = 1000").is_err());
    }

    #[test]
    fn runs_are_reproducible() {
        let exp = Experiment::new(small()).unwrap();
        let a = exp.run(ConfigMode::Pmp, 0.2, 7).unwrap();
        let _ = exp.run(ConfigMode::Vanilla, 0.1, 8).unwrap();
        assert_eq!(exp.run(ConfigMode::Pmp, 0.2, 7).unwrap(), a);
    }

    #[test]
    fn no_churn_means_full_hits() {
        let exp = Experiment::new(small()).unwrap();
        for mode in ConfigMode::ALL {
            let r = exp.run(mode, 0.0, 3).unwrap();
            assert_eq!(r.hit_rate, 1.0, "{mode}");
            assert_eq!(r.verified, r.samples);
        }
    }

    #[test]
    fn total_churn_means_no_hits() {
        let exp = Experiment::new(small()).unwrap();
        let r = exp.run(ConfigMode::Pmp, 1.0 - 1e-9, 3).unwrap();
        assert_eq!(r.hit_rate, 0.0);
        assert!(exp.run(ConfigMode::Pmp, 1.0, 3).is_err());
        assert!(exp.run(ConfigMode::Pmp, -0.1, 3).is_err());
    }

    #[test]
    fn per_cell_modes_share_hit_rates() {
        let exp = Experiment::new(small()).unwrap();
        for seed in 0..3 {
            let v = exp.run(ConfigMode::Vanilla, 0.3, seed).unwrap();
            let b = exp.run(ConfigMode::BatchedSingle, 0.3, seed).unwrap();
            assert_eq!(v.hit_rate, b.hit_rate);
            assert!(b.pairings <= v.pairings);
        }
    }

    #[test]
    fn storage_columns() {
        let exp = Experiment::new(small()).unwrap();
        let v = exp.run(ConfigMode::Vanilla, 0.0, 1).unwrap();
        let g = exp.run(ConfigMode::GroupedOnly, 0.0, 1).unwrap();
        let p = exp.run(ConfigMode::Pmp, 0.0, 1).unwrap();
        assert_eq!((v.objects, v.proof_bytes, v.object_bytes), (64, 64 * 48, 64 * 80));
        assert_eq!(
            (g.objects, g.proof_bytes, g.object_bytes),
            (16, 64 * 48, 16 * (20 + 4 * 80))
        );
        assert_eq!(
            (p.objects, p.proof_bytes, p.object_bytes),
            (16, 16 * 48, 16 * (68 + 4 * 32))
        );
    }

    #[test]
    fn csv_layout() {
        let exp = Experiment::new(ExperimentConfig {
            modes: vec![ConfigMode::Pmp, ConfigMode::Vanilla],
            churn: vec![0.1, 0.0],
            ..small()
        })
        .unwrap();
        let recs = exp.run_all().unwrap();
        let csv = render_csv(&recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("vanilla,1,0,"));
        assert!(lines[4].starts_with("pmp,1,0.1,"));
        assert!(render_json(&recs).contains("\"mode\": \"pmp\""));
    }
}
