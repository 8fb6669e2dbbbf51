//! Command-line front end for `wlsreg`.

pub mod commands;
pub mod csvio;

pub use commands::{run, Cli};
pub use csvio::{parse_dataset, parse_number_list, write_residuals, CsvError};
