//! Library side of the `dicke-prep` command-line tool: argument types,
//! subcommand handlers, figure jobs and CSV/JSON emission.

pub mod cli;
pub mod commands;
pub mod error;
pub mod figure;
pub mod output;

pub use cli::Cli;
pub use commands::{load_config, protocol_config, run, Outcome};
pub use error::{CliError, CliResult};
pub use figure::{run_figure_job, FigureId, FigureJob};
pub use output::{data_section, OutputSettings, Table, ARTIFACT_VERSION};
