//! Command-line drivers for the rkhm library.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => commands::run_gen(a),
        Command::Qr(a) => commands::run_qr(a),
        Command::Pca(a) => commands::run_pca(a),
        Command::PfFit(a) => commands::run_pf_fit(a),
        Command::PfError(a) => commands::run_pf_error(a),
        Command::Modal(a) => commands::run_modal(a),
    }
}
