use rkhm::{gen_interacting, pf_fit, predict_error, prediction_error_sweep, Block, InteractingSpec, StructuredSample};
use serde::Serialize;

use super::epsilon_from_eps2;
use super::series::{load_series, training_prefix};
use crate::args::{PfErrorArgs, PfFitArgs};
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, read_samples, write_csv, write_json, ComplexMatrix};

#[derive(Debug, Serialize)]
struct PfModelFile {
    m: usize,
    #[serde(rename = "T")]
    horizon: usize,
    eps2: f64,
    ranks: Vec<usize>,
    total_rank: usize,
    /// Flattened mT×mT representation of K_T.
    k_matrix: ComplexMatrix,
}

#[derive(Debug, Serialize)]
struct StepError {
    t: usize,
    trace: f64,
    op_norm: f64,
    matrix: ComplexMatrix,
}

fn flat_matrix(a: &ndarray::Array2<rkhm::C64>) -> ComplexMatrix {
    ComplexMatrix {
        re: a.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
        im: a.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
    }
}

pub fn run_pf_fit(args: &PfFitArgs) -> Result<()> {
    let epsilon = epsilon_from_eps2(args.eps2)?;
    let series = load_series(&args.series)?;
    let training = training_prefix(&series, args.horizon)?;
    let model = pf_fit(&args.kernel.spec(), training, epsilon)?;
    let errors = (0..model.horizon())
        .map(|t| {
            let e = predict_error(&model, &training[t], &training[t + 1])?;
            Ok(StepError {
                t,
                trace: e.trace().re,
                op_norm: e.op_norm(),
                matrix: ComplexMatrix::from(&e),
            })
        })
        .collect::<rkhm::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = errors
        .iter()
        .map(|e| vec![e.t.to_string(), fmt_f64(e.trace), fmt_f64(e.op_norm)])
        .collect();
    write_csv(
        &args.output.join("errors.csv"),
        &["t".into(), "trace".into(), "op_norm".into()],
        &rows,
    )?;
    write_json(&args.output.join("errors.json"), &errors)?;
    write_json(
        &args.output.join("model.json"),
        &PfModelFile {
            m: model.m(),
            horizon: model.horizon(),
            eps2: args.eps2,
            ranks: model.qr.ranks.clone(),
            total_rank: model.qr.total_rank(),
            k_matrix: flat_matrix(model.k_matrix.flat()),
        },
    )
}

/// Parses `a:b` into the criterion horizons a, …, b−1.
fn parse_sweep(text: &str) -> Result<std::ops::Range<usize>> {
    let bad = || CliError::Validation(format!("--sweep-T expects a:b with 1 ≤ a < b, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64, usize) {
    let valid: Vec<f64> = values.iter().cloned().filter(|v| v.is_finite()).collect();
    let n = valid.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = valid.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN, n);
    }
    let var = valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt(), n)
}

/// Replica k uses seed + k both for the generated series and for the kernel jitter.
fn replica_series(args: &PfErrorArgs, input: &Option<Vec<StructuredSample>>, k: u64) -> Result<Vec<StructuredSample>> {
    match input {
        Some(series) => Ok(series.clone()),
        None => {
            let spec = InteractingSpec::new(args.m, args.s + 1, args.sigma, args.seed.wrapping_add(k));
            Ok(gen_interacting(&spec)?)
        }
    }
}

pub fn run_pf_error(args: &PfErrorArgs) -> Result<()> {
    if args.s == 0 {
        return Err(CliError::Validation("--S must be at least 1".into()));
    }
    if args.seeds == 0 {
        return Err(CliError::Validation("--seeds must be at least 1".into()));
    }
    if !(args.jitter >= 0.0 && args.jitter.is_finite()) {
        return Err(CliError::Validation(format!("--jitter must be non-negative, got {}", args.jitter)));
    }
    let epsilons = args
        .eps2
        .iter()
        .map(|&e| epsilon_from_eps2(e))
        .collect::<Result<Vec<_>>>()?;
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    let horizons: Vec<usize> = match (&sweep, args.horizon) {
        (Some(range), _) => (range.start..=range.end).collect(),
        (None, Some(t)) if t >= 1 => vec![t],
        (None, _) => return Err(CliError::Validation("either --T ≥ 1 or --sweep-T is required".into())),
    };
    let input = args
        .input
        .as_ref()
        .map(|path| read_samples(path, args.m, args.d))
        .transpose()?;
    let needed = args.s.max(*horizons.last().expect("nonempty")) + 1;

    // errors[e][k][h]: replica k at horizons[h] for the e-th threshold.
    let mut errors: Vec<Vec<Vec<Option<Block>>>> = vec![Vec::new(); epsilons.len()];
    for k in 0..args.seeds {
        let series = replica_series(args, &input, k)?;
        if series.len() < needed {
            return Err(CliError::Validation(format!(
                "the series has {} observations, {needed} are needed",
                series.len()
            )));
        }
        let mut spec = args.kernel.spec();
        if args.jitter > 0.0 {
            spec = spec.with_jitter(args.jitter, args.seed.wrapping_add(k));
        }
        for (e, &epsilon) in epsilons.iter().enumerate() {
            let per_horizon =
                prediction_error_sweep(&spec, &series, epsilon, &horizons, &series[args.s - 1], &series[args.s])?;
            errors[e].push(per_horizon.into_iter().map(|r| r.ok()).collect());
        }
    }

    match sweep {
        Some(range) => {
            let mut rows = Vec::new();
            for (e, &eps2) in args.eps2.iter().enumerate() {
                for (h, t) in range.clone().enumerate() {
                    let values: Vec<f64> = errors[e]
                        .iter()
                        .map(|replica| match (&replica[h], &replica[h + 1]) {
                            (Some(a), Some(b)) => Block::from_array(b.matrix() - a.matrix())
                                .map(|d| d.op_norm())
                                .unwrap_or(f64::NAN),
                            _ => f64::NAN,
                        })
                        .collect();
                    let (mean, stderr, valid) = mean_and_stderr(&values);
                    rows.push(vec![fmt_f64(eps2), t.to_string(), fmt_f64(mean), fmt_f64(stderr), valid.to_string()]);
                }
            }
            let header = ["eps2", "T", "mean", "stderr", "valid"].map(String::from);
            write_csv(&args.output, &header, &rows)
        }
        None => {
            let t = horizons[0];
            let mut rows = Vec::new();
            for (e, &eps2) in args.eps2.iter().enumerate() {
                for (k, replica) in errors[e].iter().enumerate() {
                    let (trace, norm) = match &replica[0] {
                        Some(b) => (b.trace().re, b.op_norm()),
                        None => (f64::NAN, f64::NAN),
                    };
                    rows.push(vec![
                        fmt_f64(eps2),
                        k.to_string(),
                        t.to_string(),
                        args.s.to_string(),
                        fmt_f64(trace),
                        fmt_f64(norm),
                    ]);
                }
            }
            let header = ["eps2", "replica", "T", "S", "trace", "op_norm"].map(String::from);
            write_csv(&args.output, &header, &rows)
        }
    }
}
