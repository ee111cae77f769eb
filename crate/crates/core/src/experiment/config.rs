//! Experiment configuration.
//!
//! Files are flat `key = value` lines; `#` starts a comment. Each key has a
//! command line flag of the same name (underscores become dashes), and
//! values given on the command line are applied after the file.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::baseline::RbfScaling;
use crate::channel::NoiseModel;
use crate::classifier::VoteWeighting;
use crate::projection::ProjectionMethod;
use crate::{Error, Result};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub digits: BTreeSet<u8>,
    pub per_class: usize,
    /// 0 keeps the whole test split for the chosen digits.
    pub test_per_class: usize,
    pub sigma: f64,
    pub h: f64,
    pub noise: NoiseModel,
    pub total_samples: usize,
    pub k_max: usize,
    pub methods: Vec<ProjectionMethod>,
    /// Monte Carlo draws per projected point; `None` uses the kernel's per-row count.
    pub proj0_samples: Option<usize>,
    /// `None` picks 40 for {5,6}, 33 otherwise.
    pub delta: Option<f64>,
    pub delta_grid: Vec<f64>,
    pub delta_grid_k: usize,
    pub rbf_blur: bool,
    pub rbf_centered: bool,
    pub rbf_scaling: RbfScaling,
    pub neighbors: usize,
    pub weighting: VoteWeighting,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let data = PathBuf::from("data/mnist");
        ExperimentConfig {
            train_images: data.join(TRAIN_IMAGES),
            train_labels: data.join(TRAIN_LABELS),
            test_images: data.join(TEST_IMAGES),
            test_labels: data.join(TEST_LABELS),
            digits: [5, 6].into_iter().collect(),
            per_class: 256,
            test_per_class: 0,
            sigma: 1.0,
            h: 1.317,
            noise: NoiseModel::Exponent,
            total_samples: 20_000,
            k_max: 16,
            methods: vec![ProjectionMethod::Proj, ProjectionMethod::Proj0, ProjectionMethod::Rbf],
            proj0_samples: None,
            delta: None,
            delta_grid: vec![],
            delta_grid_k: 2,
            rbf_blur: true,
            rbf_centered: true,
            rbf_scaling: RbfScaling::InverseSqrt,
            neighbors: 3,
            weighting: VoteWeighting::InverseDistance,
            seed: 0,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl ExperimentConfig {
    /// Point all four IDX paths at the standard file names inside `dir`.
    pub fn set_data_dir(&mut self, dir: &Path) {
        self.train_images = dir.join(TRAIN_IMAGES);
        self.train_labels = dir.join(TRAIN_LABELS);
        self.test_images = dir.join(TEST_IMAGES);
        self.test_labels = dir.join(TEST_LABELS);
    }

    /// Apply one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "data_dir" => self.set_data_dir(Path::new(v)),
            "train_images" => self.train_images = v.into(),
            "train_labels" => self.train_labels = v.into(),
            "test_images" => self.test_images = v.into(),
            "test_labels" => self.test_labels = v.into(),
            "digits" => {
                let d: Vec<u8> = parse_list(&key, v)?;
                if d.is_empty() || d.iter().any(|&x| x > 9) {
                    return Err(Error::Config(format!("digits: invalid set {v:?}")));
                }
                self.digits = d.into_iter().collect();
            }
            "per_class" => self.per_class = parse(&key, v)?,
            "test_per_class" => self.test_per_class = parse(&key, v)?,
            "sigma" => self.sigma = parse(&key, v)?,
            "h" => self.h = parse(&key, v)?,
            "noise" => {
                self.noise = NoiseModel::parse(v)
                    .ok_or_else(|| Error::Config(format!("noise: expected exponent or variance, got {v:?}")))?
            }
            "samples" | "total_samples" => self.total_samples = parse(&key, v)?,
            "kmax" | "k_max" => self.k_max = parse(&key, v)?,
            "method" | "methods" => {
                self.methods = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| ProjectionMethod::parse(s).ok_or_else(|| Error::Config(format!("method: unknown {s:?}"))))
                    .collect::<Result<_>>()?;
            }
            "proj0_samples" => self.proj0_samples = Some(parse(&key, v)?),
            "delta" => {
                let list: Vec<f64> = parse_list(&key, v)?;
                match list.as_slice() {
                    [single] => {
                        self.delta = Some(*single);
                        self.delta_grid.clear();
                    }
                    [] => return Err(Error::Config("delta: empty".into())),
                    _ => self.delta_grid = list,
                }
            }
            "delta_grid" => self.delta_grid = parse_list(&key, v)?,
            "delta_grid_k" => self.delta_grid_k = parse(&key, v)?,
            "rbf_blur" => self.rbf_blur = parse_bool(&key, v)?,
            "rbf_centered" => self.rbf_centered = parse_bool(&key, v)?,
            "rbf_scaling" => {
                self.rbf_scaling = RbfScaling::parse(v)
                    .ok_or_else(|| Error::Config(format!("rbf_scaling: expected sqrt or whitened, got {v:?}")))?
            }
            "neighbors" => self.neighbors = parse(&key, v)?,
            "weighting" => {
                self.weighting =
                    VoteWeighting::parse(v).ok_or_else(|| Error::Config(format!("weighting: unknown {v:?}")))?
            }
            "seed" => self.seed = parse(&key, v)?,
            "threads" => self.threads = Some(parse(&key, v)?),
            "out" => self.out = v.into(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::default();
        cfg.parse_str(&text)?;
        Ok(cfg)
    }

    /// RBF width: explicit value, else 40 for {5,6} and 33 for anything else.
    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(if self.digits == [5, 6].into_iter().collect() {
            40.0
        } else {
            33.0
        })
    }

    pub fn n(&self) -> usize {
        self.digits.len() * self.per_class
    }

    pub fn has(&self, m: ProjectionMethod) -> bool {
        self.methods.contains(&m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.per_class == 0 {
            return bad("per_class must be >= 1".into());
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.h > 0.0) {
            return bad(format!("h must be > 0, got {}", self.h));
        }
        if self.total_samples < self.n() {
            return bad(format!("samples ({}) must be >= n ({})", self.total_samples, self.n()));
        }
        if self.k_max == 0 || self.k_max > self.n() {
            return bad(format!("kmax must be in 1..={}, got {}", self.n(), self.k_max));
        }
        if self.neighbors == 0 {
            return bad("neighbors must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("no projection method selected".into());
        }
        if self.effective_delta() <= 0.0 || self.delta_grid.iter().any(|&d| d <= 0.0) {
            return bad("delta must be > 0".into());
        }
        if self.delta_grid_k == 0 || self.delta_grid_k > self.k_max {
            return bad(format!("delta_grid_k must be in 1..={}", self.k_max));
        }
        Ok(())
    }

    pub fn check_data_files(&self) -> Result<()> {
        for p in [
            &self.train_images,
            &self.train_labels,
            &self.test_images,
            &self.test_labels,
        ] {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing data file"),
                ));
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "train_images = {}", self.train_images.display());
        let _ = writeln!(s, "train_labels = {}", self.train_labels.display());
        let _ = writeln!(s, "test_images = {}", self.test_images.display());
        let _ = writeln!(s, "test_labels = {}", self.test_labels.display());
        let _ = writeln!(s, "digits = {}", join(self.digits.iter().map(u8::to_string).collect()));
        let _ = writeln!(s, "per_class = {}", self.per_class);
        let _ = writeln!(s, "test_per_class = {}", self.test_per_class);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "h = {}", self.h);
        let _ = writeln!(s, "noise = {}", self.noise.name());
        let _ = writeln!(s, "samples = {}", self.total_samples);
        let _ = writeln!(s, "kmax = {}", self.k_max);
        let _ = writeln!(
            s,
            "method = {}",
            join(self.methods.iter().map(|m| m.name().to_string()).collect())
        );
        if let Some(t) = self.proj0_samples {
            let _ = writeln!(s, "proj0_samples = {t}");
        }
        let _ = writeln!(s, "delta = {}", self.effective_delta());
        if !self.delta_grid.is_empty() {
            let _ = writeln!(
                s,
                "delta_grid = {}",
                join(self.delta_grid.iter().map(f64::to_string).collect())
            );
        }
        let _ = writeln!(s, "delta_grid_k = {}", self.delta_grid_k);
        let _ = writeln!(s, "rbf_blur = {}", self.rbf_blur);
        let _ = writeln!(s, "rbf_centered = {}", self.rbf_centered);
        let _ = writeln!(s, "rbf_scaling = {}", self.rbf_scaling.name());
        let _ = writeln!(s, "neighbors = {}", self.neighbors);
        let w = match self.weighting {
            VoteWeighting::InverseDistance => "inverse",
            VoteWeighting::InverseSquare => "inverse-square",
            VoteWeighting::Exponential => "exp",
        };
        let _ = writeln!(s, "weighting = {w}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}
