use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relevance_pca::experiment::{self, ExperimentConfig};
use relevance_pca::{Error, ProjectionMethod, Result};

#[derive(Parser, Debug)]
#[command(name = "relpca", version, about = "Channel-adapted kernel PCA on MNIST-style data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `key = value` config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the four standard MNIST IDX files
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    digits: Option<String>,
    #[arg(long, global = true)]
    per_class: Option<usize>,
    #[arg(long, global = true)]
    test_per_class: Option<usize>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    h: Option<f64>,
    /// exponent (noise std h/√2) or variance (per-pixel variance h)
    #[arg(long, global = true)]
    noise: Option<String>,
    /// Total Monte Carlo samples for the kernel
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Comma-separated subset of proj, proj0, rbf
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    proj0_samples: Option<usize>,
    /// RBF width, or a comma-separated grid to search
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    delta_grid_k: Option<usize>,
    #[arg(long, global = true)]
    rbf_blur: Option<bool>,
    #[arg(long, global = true)]
    rbf_centered: Option<bool>,
    /// sqrt (components √λ·v) or whitened (components v)
    #[arg(long, global = true)]
    rbf_scaling: Option<String>,
    #[arg(long, global = true)]
    neighbors: Option<usize>,
    /// inverse, inverse-square or exp
    #[arg(long, global = true)]
    weighting: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select the training subset and test split
    Ingest,
    /// Estimate, symmetrize and detrace the kernel
    Kernel,
    /// Eigendecompose the kernel and keep kmax features
    Eigen,
    /// Project train and test points (proj and/or proj0)
    Project,
    /// RBF kernel PCA baseline
    Rbf,
    /// Error-vs-k curves from stored components
    Classify,
    /// All of the above
    Run,
}

impl Cli {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.data_dir {
            cfg.set_data_dir(d);
        }
        let pairs: [(&str, Option<String>); 20] = [
            ("digits", self.digits.clone()),
            ("per_class", self.per_class.map(|v| v.to_string())),
            ("test_per_class", self.test_per_class.map(|v| v.to_string())),
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("h", self.h.map(|v| v.to_string())),
            ("noise", self.noise.clone()),
            ("samples", self.samples.map(|v| v.to_string())),
            ("kmax", self.kmax.map(|v| v.to_string())),
            ("method", self.method.clone()),
            ("proj0_samples", self.proj0_samples.map(|v| v.to_string())),
            ("delta", self.delta.clone()),
            ("delta_grid_k", self.delta_grid_k.map(|v| v.to_string())),
            ("rbf_blur", self.rbf_blur.map(|v| v.to_string())),
            ("rbf_centered", self.rbf_centered.map(|v| v.to_string())),
            ("rbf_scaling", self.rbf_scaling.clone()),
            ("neighbors", self.neighbors.map(|v| v.to_string())),
            ("weighting", self.weighting.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = cli.config()?;
    match cli.command {
        Command::Ingest => {
            let s = experiment::ingest(&cfg)?;
            println!("train={} test={} image={}x{}", s.train, s.test, s.rows, s.cols);
        }
        Command::Kernel => {
            let s = experiment::kernel_stage(&cfg)?;
            println!(
                "n={} samples_per_row={} asymmetry={:.4} clamped={} resumed={}",
                s.n, s.samples_per_row, s.asymmetry, s.clamped, s.resumed
            );
        }
        Command::Eigen => {
            let s = experiment::eigen_stage(&cfg)?;
            for (j, v) in s.eigenvalues.iter().enumerate() {
                println!("eta_{} = {v:.6}", j + 1);
            }
        }
        Command::Project => {
            let methods: Vec<_> = cfg
                .methods
                .iter()
                .copied()
                .filter(|&m| m != ProjectionMethod::Rbf)
                .collect();
            if methods.is_empty() {
                return Err(Error::Config("project needs --method proj and/or proj0".into()));
            }
            for m in methods {
                experiment::project_stage(&cfg, m)?;
                println!("projected with {m}");
            }
        }
        Command::Rbf => {
            let delta = experiment::rbf_stage(&cfg)?;
            println!("rbf delta={delta}");
        }
        Command::Classify => {
            experiment::classify_stage(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(cfg.out.join("curve.csv")).unwrap_or_default()
            );
        }
        Command::Run => {
            let report = experiment::run(&cfg)?;
            println!(
                "asymmetry={:.4} clamped={} kernel_resumed={}",
                report.kernel.asymmetry, report.kernel.clamped, report.kernel.resumed
            );
            print!("{}", experiment::curve_csv(&report.curves.test));
            for f in &report.flags {
                println!("flag: {f}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
