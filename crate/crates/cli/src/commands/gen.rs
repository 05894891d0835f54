use rkhm::{gen_clusters, gen_interacting, ClusterSpec, InteractingSpec};

use crate::args::{GenArgs, GenKind};
use crate::error::Result;
use crate::io::{write_csv, write_samples};

pub fn run_gen(args: &GenArgs) -> Result<()> {
    match args.kind {
        GenKind::Interacting => {
            let spec = InteractingSpec::new(args.m, args.steps, args.sigma.unwrap_or(0.01), args.seed);
            write_samples(&args.output, &gen_interacting(&spec)?)
        }
        GenKind::Clusters => {
            let spec = ClusterSpec::new(args.count, args.sigma.unwrap_or(0.1), args.seed);
            let (samples, labels) = gen_clusters(&spec)?;
            write_samples(&args.output, &samples)?;
            if let Some(path) = &args.labels {
                let rows: Vec<Vec<String>> = labels.iter().map(|l| vec![format!("data{}", l + 1)]).collect();
                write_csv(path, &["label".to_string()], &rows)?;
            }
            Ok(())
        }
    }
}
