//! Subcommand implementations for the `pmp` binary.
//!
//! Exit codes: 0 on success, 1 when a proof fails to verify, 2 for usage,
//! configuration or input-format errors.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pmp_core::dasnet::{
    build_objects, render_csv, render_json, BlockHeader, ConfigMode, Experiment, ExperimentConfig, LightClient,
};
use pmp_core::grid::{block_id, build_grid, GridDims, GroupId, GroupLayout};
use pmp_core::poly::random_scalar;
use pmp_core::wire::{self, Fixture};
use pmp_core::{storage_report, OpCounters, Srs};

/// Environment variable that overrides the seed of an ablation config.
pub const SEED_ENV: &str = "PMP_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "pmp",
    version,
    about = "Shared-point KZG multiproofs for data availability sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print proof-amortization storage figures for a number of entries.
    StorageReport {
        #[arg(long)]
        entries: u64,
        /// Entries per grouped object.
        #[arg(long)]
        group: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run every (mode, churn, seed) combination of a key=value config.
    ///
    /// Columns: mode, seed, churn, objects_stored, proof_bytes,
    /// object_bytes, hit_rate, verify_failures, g1_mults, g2_mults,
    /// pairings, interpolations. PMP_SEED overrides the config seed and
    /// --seed overrides both.
    Ablation {
        /// Config file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// csv or json.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a grid fixture: setup, block bytes and grouping parameters.
    GenFixture {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 4)]
        rows: u32,
        #[arg(long, default_value_t = 8)]
        cols: u32,
        #[arg(long, default_value_t = 2)]
        extension: u32,
        #[arg(long, default_value_t = 4)]
        group: u32,
        #[arg(long, default_value_t = 1)]
        rows_per_group: u32,
        /// Payload length in bytes; defaults to the grid capacity.
        #[arg(long)]
        data_bytes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Commit to a grid fixture and write one aggregated-proof object per group.
    Prove {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Verify every object of a proof file against its header commitments.
    Verify {
        #[arg(long)]
        proofs: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Verification(_) => 1,
            Self::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<pmp_core::Error> for CliError {
    fn from(e: pmp_core::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<pmp_core::WireError> for CliError {
    fn from(e: pmp_core::WireError) -> Self {
        Self::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Runs a parsed command, returning what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::StorageReport { entries, group, format } => cmd_storage_report(entries, group, format),
        Command::Ablation {
            config,
            seed,
            format,
            output,
        } => {
            let env_seed = match std::env::var(SEED_ENV) {
                Ok(v) => Some(
                    v.trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an integer")))?,
                ),
                Err(_) => None,
            };
            let text = cmd_ablation(config.as_deref(), seed.or(env_seed), format)?;
            match output {
                Some(path) => {
                    write(&path, text.as_bytes())?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
        Command::GenFixture {
            output,
            rows,
            cols,
            extension,
            group,
            rows_per_group,
            data_bytes,
            seed,
        } => {
            let dims = GridDims::new(rows, cols, extension)?;
            let layout = GroupLayout::new(group, rows_per_group)?;
            let fixture = gen_fixture(dims, layout, data_bytes, seed)?;
            write(&output, &fixture.encode())?;
            Ok(format!("wrote {}\n", output.display()))
        }
        Command::Prove { fixture, output } => {
            let proofs = cmd_prove(&Fixture::decode(&read(&fixture)?)?)?;
            write(&output, &proofs.encode())?;
            Ok(format!("wrote {}\n", output.display()))
        }
        Command::Verify { proofs } => {
            let n = cmd_verify(&Fixture::decode(&read(&proofs)?)?)?;
            Ok(format!("verified {n} objects\n"))
        }
    }
}

pub fn cmd_storage_report(entries: u64, group: u64, format: Format) -> Result<String, CliError> {
    let r = storage_report(entries, group)?;
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&r).expect("report serializes") + "\n",
        Format::Csv => format!(
            "entries,group_size,baseline_object_bytes,baseline_total_bytes,grouped_object_count,\
             grouped_object_bytes,grouped_total_bytes,amortized_bytes_per_entry,wire_object_bytes,wire_total_bytes\n\
             {},{},{},{},{},{},{},{},{},{}\n",
            r.entries,
            r.group_size,
            r.baseline_object_bytes,
            r.baseline_total_bytes,
            r.grouped_object_count,
            r.grouped_object_bytes,
            r.grouped_total_bytes,
            r.amortized_display(),
            r.wire_object_bytes,
            r.wire_total_bytes
        ),
        Format::Text => format!(
            "entries                    {}\n\
             group size                 {}\n\
             baseline object bytes      {}\n\
             baseline total bytes       {}\n\
             grouped objects            {}\n\
             grouped object bytes       {}\n\
             grouped total bytes        {}\n\
             amortized bytes per entry  {}\n\
             wire object bytes          {}\n\
             wire total bytes           {}\n",
            r.entries,
            r.group_size,
            r.baseline_object_bytes,
            r.baseline_total_bytes,
            r.grouped_object_count,
            r.grouped_object_bytes,
            r.grouped_total_bytes,
            r.amortized_display(),
            r.wire_object_bytes,
            r.wire_total_bytes
        ),
    })
}

pub fn cmd_ablation(config: Option<&Path>, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let mut cfg = match config {
        Some(path) => {
            let text = String::from_utf8(read(path)?)
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let records = Experiment::new(cfg)?.run_all()?;
    match format {
        Format::Csv => Ok(render_csv(&records)),
        Format::Json => Ok(render_json(&records) + "\n"),
        Format::Text => Err(CliError::Usage("ablation output is csv or json".into())),
    }
}

/// Known-secret setup sized for `dims` and `layout`. Test fixtures only.
fn fixture_srs(dims: &GridDims, layout: &GroupLayout, seed: u64) -> Result<Srs, CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5E7C_0DE5);
    Ok(Srs::gen(
        dims.cols.max(layout.group_size) as usize,
        random_scalar(&mut rng),
    )?)
}

pub fn gen_fixture(
    dims: GridDims,
    layout: GroupLayout,
    data_bytes: Option<usize>,
    seed: u64,
) -> Result<Fixture, CliError> {
    layout.check(&dims)?;
    let len = data_bytes.unwrap_or(dims.capacity_bytes());
    if len > dims.capacity_bytes() {
        return Err(CliError::Usage(format!(
            "{len} data bytes exceed the grid capacity of {}",
            dims.capacity_bytes()
        )));
    }
    let mut data = vec![0u8; len];
    ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut data);
    let srs = fixture_srs(&dims, &layout, seed)?;
    let mut f = Fixture::new();
    f.put(wire::SECTION_SRS, wire::encode_srs(&srs));
    f.put(wire::SECTION_GRID, wire::encode_grid_spec(&dims, &data));
    f.put(
        wire::SECTION_PARAMS,
        wire::encode_params(layout.group_size, layout.rows_per_group),
    );
    Ok(f)
}

fn load_params(f: &Fixture) -> Result<(Srs, GridDims, Vec<u8>, GroupLayout), CliError> {
    let srs = wire::decode_srs(f.get(wire::SECTION_SRS)?)?;
    let (dims, data) = wire::decode_grid_spec(f.get(wire::SECTION_GRID)?)?;
    let dims = GridDims::new(dims.rows, dims.cols, dims.extension_factor)?;
    let (g, rpg) = wire::decode_params(f.get(wire::SECTION_PARAMS)?)?;
    let layout = GroupLayout::new(g, rpg)?;
    layout.check(&dims)?;
    Ok((srs, dims, data, layout))
}

/// Builds the grid of a fixture and returns a proof file: the setup, grid
/// dimensions (without data), parameters, header and one object per group.
pub fn cmd_prove(fixture: &Fixture) -> Result<Fixture, CliError> {
    let (srs, dims, data, layout) = load_params(fixture)?;
    let grid = build_grid(&srs, &data, dims)?;
    let objects = build_objects(&srs, &grid, &layout, ConfigMode::Pmp, &mut OpCounters::default())?;
    let mut out = Fixture::new();
    out.put(wire::SECTION_SRS, wire::encode_srs(&srs));
    out.put(wire::SECTION_GRID, wire::encode_grid_spec(&dims, &[]));
    out.put(
        wire::SECTION_PARAMS,
        wire::encode_params(layout.group_size, layout.rows_per_group),
    );
    out.put(wire::SECTION_HEADER, wire::encode_header(grid.row_commitments()));
    out.put(
        wire::SECTION_MCELLS,
        wire::encode_object_list(&objects.into_iter().map(|o| o.bytes).collect::<Vec<_>>()),
    );
    Ok(out)
}

/// Verifies every object of a proof file in group order. Returns the
/// number of objects checked.
pub fn cmd_verify(proofs: &Fixture) -> Result<usize, CliError> {
    let (srs, dims, _, layout) = load_params(proofs)?;
    let commitments = wire::decode_header(proofs.get(wire::SECTION_HEADER)?)?;
    let objects = wire::decode_object_list(proofs.get(wire::SECTION_MCELLS)?)?;
    let header = BlockHeader {
        block_id: block_id(&commitments),
        dims,
        layout,
        commitments,
    };
    let client = LightClient::new(&srs, &header, 0)?;
    let groups = layout.groups(&dims);
    if objects.len() != groups.len() {
        return Err(CliError::Verification(format!(
            "expected {} objects, found {}",
            groups.len(),
            objects.len()
        )));
    }
    let mut ops = OpCounters::default();
    for (id, bytes) in groups.iter().zip(&objects) {
        if !client.verify_group_object(ConfigMode::Pmp, *id, bytes, &mut ops) {
            return Err(failed_group(*id));
        }
    }
    Ok(objects.len())
}

fn failed_group(id: GroupId) -> CliError {
    CliError::Verification(format!("group {id}"))
}
