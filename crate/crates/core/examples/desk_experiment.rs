//! The full staged pipeline on digits 5 and 6: kernel, features, both
//! projections, the Gaussian-kernel baseline and error-vs-k curves.
//!
//! cargo run --release --example desk_experiment -- [data/mnist] [out] [config]
//!
//! The optional config file uses the same `key = value` lines as `relpca --config`.

use std::path::PathBuf;

use relevance_pca::experiment::{self, curve_csv, ExperimentConfig};

fn main() -> relevance_pca::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let data = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/desk".into()));
    let mut cfg = match args.next() {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.set_data_dir(&data);
    cfg.out = out;

    let report = experiment::run(&cfg)?;
    println!(
        "n = {} train, {} test; {} samples per row; asymmetry {:.3}",
        report.ingest.train, report.ingest.test, report.kernel.samples_per_row, report.kernel.asymmetry
    );
    println!(
        "top relevances {:.4?}",
        &report.eigen.eigenvalues[..4.min(report.eigen.eigenvalues.len())]
    );
    print!("{}", curve_csv(&report.curves.test));
    for f in &report.flags {
        println!("flag: {f}");
    }
    for (stage, secs) in &report.timings {
        println!("{stage}: {secs:.1}s");
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}
