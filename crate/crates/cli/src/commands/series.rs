use rkhm::{delay_embed, perturb, standardize_channels, StructuredSample};

use crate::args::SeriesArgs;
use crate::error::{CliError, Result};
use crate::io::{read_samples, read_table};

/// Noise applied to the raw series before delay embedding when --noise is absent.
pub const DELAY_EMBED_NOISE: f64 = 0.2;

/// Loads a series and applies the optional embedding pipeline.
///
/// With `--delay-embed w` each row is one multichannel observation. The raw
/// values are perturbed, standardized per channel and then embedded, giving
/// samples of m = channels·w scalar elements.
pub fn load_series(args: &SeriesArgs) -> Result<Vec<StructuredSample>> {
    match args.delay_embed {
        Some(window) => {
            let raw = read_table(&args.input)?;
            let p = raw[0].len();
            if let Some(m) = args.m {
                if m != p * window {
                    return Err(CliError::Validation(format!(
                        "--m {m} does not match {p} channels times window {window}"
                    )));
                }
            }
            let as_samples = raw
                .iter()
                .map(|y| StructuredSample::from_scalars(y))
                .collect::<rkhm::Result<Vec<_>>>()?;
            let noisy = perturb(&as_samples, args.noise.unwrap_or(DELAY_EMBED_NOISE), args.seed)?;
            let mut values: Vec<Vec<f64>> = noisy.iter().map(|x| x.to_flat()).collect();
            standardize_channels(&mut values)?;
            Ok(delay_embed(&values, window)?)
        }
        None => {
            let m = args
                .m
                .ok_or_else(|| CliError::Validation("--m is required without --delay-embed".into()))?;
            let samples = read_samples(&args.input, m, args.d)?;
            match args.noise {
                Some(sigma) if sigma > 0.0 => Ok(perturb(&samples, sigma, args.seed)?),
                _ => Ok(samples),
            }
        }
    }
}

/// The first `horizon + 1` observations, or all of them.
pub fn training_prefix(series: &[StructuredSample], horizon: Option<usize>) -> Result<&[StructuredSample]> {
    match horizon {
        Some(t) if t + 1 > series.len() => Err(CliError::Validation(format!(
            "--T {t} needs {} observations, the series has {}",
            t + 1,
            series.len()
        ))),
        Some(t) => Ok(&series[..=t]),
        None => Ok(series),
    }
}
