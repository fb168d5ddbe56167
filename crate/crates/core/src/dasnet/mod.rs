//! Network simulation: DHT storage, publishing, light-client sampling and
//! seeded experiments comparing storage modes.

pub mod dht;
pub mod experiment;
pub mod publish;
pub mod sample;

pub use dht::{Key, PutOutcome, SimDht};
pub use experiment::{
    mean_hit_rate, render_csv, render_json, run_ablation, run_experiment, Experiment, ExperimentConfig, MetricsRecord,
    CSV_COLUMNS,
};
pub use publish::{build_objects, cell_key, group_key, publish, publish_objects, ConfigMode, PublishReport, PutBudget};
pub use sample::{
    effective_samples, required_samples, BlockHeader, LightClient, RetrievalOutcome, SampleResult, SampleStatus,
    SamplingPlan,
};
