use rkhm::{invariant_term, modal_decompose, pf_fit};
use serde::Serialize;

use super::epsilon_from_eps2;
use super::series::{load_series, training_prefix};
use crate::args::ModalArgs;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, write_csv, write_json, ComplexMatrix};

#[derive(Debug, Serialize)]
struct InvariantFile {
    m: usize,
    #[serde(rename = "T")]
    horizon: usize,
    eps2: f64,
    delta: f64,
    /// Number of eigenvalues in the band around the unit circle.
    band_size: usize,
    /// Condition number of the eigenvector matrix.
    condition: f64,
    trace: f64,
    c_inv: ComplexMatrix,
}

pub fn run_modal(args: &ModalArgs) -> Result<()> {
    if !(args.delta > 0.0 && args.delta.is_finite()) {
        return Err(CliError::Validation(format!("--delta must be positive, got {}", args.delta)));
    }
    let epsilon = epsilon_from_eps2(args.eps2)?;
    let series = load_series(&args.series)?;
    let training = training_prefix(&series, args.horizon)?;
    let model = pf_fit(&args.kernel.spec(), training, epsilon)?;
    let md = modal_decompose(&model)?;
    let band = md.unit_band(args.delta);
    let c_inv = invariant_term(&md, args.delta)?;

    let rows: Vec<Vec<String>> = md
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(t, z)| {
            vec![
                t.to_string(),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm()),
                band.contains(&t).to_string(),
            ]
        })
        .collect();
    let header = ["index", "re", "im", "modulus", "in_band"].map(String::from);
    write_csv(&args.output.join("eigenvalues.csv"), &header, &rows)?;

    let m = c_inv.dim();
    let entries: Vec<Vec<String>> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = c_inv[(i, j)];
            vec![i.to_string(), j.to_string(), fmt_f64(z.re), fmt_f64(z.im)]
        })
        .collect();
    let header = ["i", "j", "re", "im"].map(String::from);
    write_csv(&args.output.join("c_inv.csv"), &header, &entries)?;
    write_json(
        &args.output.join("c_inv.json"),
        &InvariantFile {
            m,
            horizon: model.horizon(),
            eps2: args.eps2,
            delta: args.delta,
            band_size: band.len(),
            condition: md.condition,
            trace: c_inv.trace().re,
            c_inv: ComplexMatrix::from(&c_inv),
        },
    )
}
