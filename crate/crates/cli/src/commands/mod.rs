mod gen;
mod modal;
mod pca;
mod pf;
mod qr;
mod series;

pub use gen::run_gen;
pub use modal::run_modal;
pub use pca::run_pca;
pub use pf::{run_pf_error, run_pf_fit};
pub use qr::run_qr;

use crate::error::{CliError, Result};

/// Converts a squared threshold from the command line into ε.
pub(crate) fn epsilon_from_eps2(eps2: f64) -> Result<f64> {
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(CliError::Validation(format!("--eps2 must be a non-negative number, got {eps2}")));
    }
    Ok(eps2.sqrt())
}
