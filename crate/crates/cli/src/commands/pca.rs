use rkhm::{first_component_scores, gram, pc_coefficient, pca_fit, BlockVector};
use serde::Serialize;

use crate::args::PcaArgs;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, read_labels, read_samples, write_csv, write_json, ComplexMatrix, ComplexVector};

#[derive(Debug, Serialize)]
struct SampleCoefficients {
    sample: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    /// One m×m block per axis.
    blocks: Vec<ComplexMatrix>,
    /// The first row of each block.
    first_rows: Vec<ComplexVector>,
    /// Operator norm of each block.
    norms: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CoefficientFile {
    n: usize,
    m: usize,
    axes: usize,
    centered: bool,
    sigma: Vec<f64>,
    samples: Vec<SampleCoefficients>,
}

#[derive(Debug, Serialize)]
struct ModelFile {
    n: usize,
    m: usize,
    centered: bool,
    retained_axes: usize,
    /// All retained eigenvalues of the flattened Gram matrix, descending.
    sigma: Vec<f64>,
}

pub fn run_pca(args: &PcaArgs) -> Result<()> {
    if args.axes == 0 {
        return Err(CliError::Validation("--axes must be at least 1".into()));
    }
    let samples = read_samples(&args.samples.input, args.samples.m, args.samples.d)?;
    let labels = match &args.labels {
        Some(path) => {
            let labels = read_labels(path)?;
            if labels.len() != samples.len() {
                return Err(CliError::Validation(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    samples.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    let g = gram(&args.kernel.spec(), &samples)?;
    let model = pca_fit(&g, args.centered)?;
    let n = samples.len();
    let mut entries = Vec::with_capacity(n);
    for t in 0..n {
        let col = BlockVector::from_blocks(&(0..n).map(|s| g.block(s, t)).collect::<Vec<_>>())?;
        let coeffs = (0..args.axes)
            .map(|s| pc_coefficient(&model, s, &col))
            .collect::<rkhm::Result<Vec<_>>>()?;
        entries.push(SampleCoefficients {
            sample: t,
            label: labels.as_ref().map(|l| l[t].clone()),
            blocks: coeffs.iter().map(ComplexMatrix::from).collect(),
            first_rows: coeffs.iter().map(|c| ComplexVector::from(c.row(0).as_slice())).collect(),
            norms: coeffs.iter().map(|c| c.op_norm()).collect(),
        });
    }

    let flat: Vec<Vec<f64>> = (0..args.axes)
        .map(|s| {
            let rows: Vec<Vec<f64>> = entries
                .iter()
                .map(|e| e.first_rows[s].re.iter().chain(&e.first_rows[s].im).cloned().collect())
                .collect();
            first_component_scores(&rows)
        })
        .collect::<rkhm::Result<_>>()?;
    let mut header = vec!["sample".to_string()];
    if labels.is_some() {
        header.push("label".into());
    }
    header.extend((0..args.axes).map(|s| format!("norm_{s}")));
    header.extend((0..args.axes).map(|s| format!("flat_{s}")));
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let mut row = vec![e.sample.to_string()];
            row.extend(e.label.clone());
            row.extend(e.norms.iter().map(|&v| fmt_f64(v)));
            row.extend(flat.iter().map(|f| fmt_f64(f[e.sample])));
            row
        })
        .collect();

    write_csv(&args.output.join("embeddings.csv"), &header, &rows)?;
    write_json(
        &args.output.join("model.json"),
        &ModelFile {
            n,
            m: model.m(),
            centered: args.centered,
            retained_axes: model.n_axes(),
            sigma: model.sigma.clone(),
        },
    )?;
    write_json(
        &args.output.join("coefficients.json"),
        &CoefficientFile {
            n,
            m: model.m(),
            axes: args.axes,
            centered: args.centered,
            sigma: model.sigma[..args.axes.min(model.n_axes())].to_vec(),
            samples: entries,
        },
    )
}
