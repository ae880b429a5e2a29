//! Configuration, file formats, plots and the commands behind the
//! `tactile-grasp` tool, built on [`tactile_grasp_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod svg;

pub use commands::{bias_plot_svg, calibrate, cmd_bias_plot, cmd_calibrate, cmd_simulate, report_text, RunManifest};
pub use config::Config;
pub use error::{exit, CliError};
pub use files::ModelFile;
