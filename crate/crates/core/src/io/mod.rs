//! Data ingestion, synthetic data, run configuration and output files.

mod config;
mod emit;
mod synth;
mod table;

pub use config::{parse_seeds, DataSection, Overrides, PreparedRun, RunConfig, SeedSpec};
pub use emit::{emit_outputs, read_results, read_summary, write_results, OutputFormat};
pub use synth::{generate_synthetic, SyntheticSpec, Truth, BINARY_COEF, CONTINUOUS_COEF};
pub use table::{fmt_f64, load_csv, read_header, write_dataset, ColumnRoles, GroupRoles};
