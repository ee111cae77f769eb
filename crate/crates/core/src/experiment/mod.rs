//! End-to-end runs: ingest, kernel, spectrum, projections, RBF baseline and
//! classification curves.
//!
//! Each stage reads its inputs from and writes its outputs to the output
//! directory, so the stages can be run one at a time from the command line or
//! chained with [`run`]. Everything written is a deterministic function of
//! the configuration; wall-clock timings go to a separate `timings.txt`.

pub mod config;
pub mod matrix_io;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

pub use config::ExperimentConfig;
pub use matrix_io::{decode_matrix, encode_matrix, read_matrix, write_matrix};

use crate::baseline::{RbfModel, RbfParams};
use crate::channel::{BlurredSet, ChannelParams};
use crate::classifier::{confusion_csv, confusion_matrix, error_rate, knn_classify_with};
use crate::dataset::{parse_idx_images, parse_idx_labels, restrict_to_digits, select_subset, Dataset};
use crate::kernel::{detrace, estimate_kernel, symmetrize, KernelMatrix, KernelMeta, KernelStage};
use crate::projection::{project_batch_fast, project_batch_mc, ComponentMatrix, ProjectionMethod};
use crate::rng::derive_seed;
use crate::spectral::{eigendecompose, top_features, FeatureBasis};
use crate::{Error, Result};

const METHODS: [ProjectionMethod; 3] = [ProjectionMethod::Proj, ProjectionMethod::Proj0, ProjectionMethod::Rbf];

/// File layout of an output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Artifacts { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn points(&self, split: Split) -> PathBuf {
        self.path(&format!("{}_points.rkm", split.name()))
    }

    pub fn labels(&self, split: Split) -> PathBuf {
        self.path(&format!("{}_labels.txt", split.name()))
    }

    pub fn components(&self, method: ProjectionMethod, split: Split) -> PathBuf {
        self.path(&format!("components_{}_{}.rkm", method.name(), split.name()))
    }

    pub fn kernel_raw(&self) -> PathBuf {
        self.path("kernel_raw.rkm")
    }

    pub fn kernel_detraced(&self) -> PathBuf {
        self.path("kernel_detraced.rkm")
    }

    pub fn kernel_meta(&self) -> PathBuf {
        self.path("kernel_meta.txt")
    }

    pub fn basis(&self) -> PathBuf {
        self.path("basis.rkm")
    }

    pub fn eigenvalues(&self) -> PathBuf {
        self.path("eigenvalues.txt")
    }

    pub fn curve(&self) -> PathBuf {
        self.path("curve.csv")
    }

    pub fn train_curve(&self) -> PathBuf {
        self.path("train_curve.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.path("manifest.txt")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// `key = value` lines into pairs.
fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn kv_get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_field<T: std::str::FromStr>(pairs: &[(String, String)], key: &str, file: &Path) -> Result<T> {
    kv_get(pairs, key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("{}: missing or invalid {key}", file.display())))
}

fn save_dataset(art: &Artifacts, split: Split, data: &Dataset) -> Result<()> {
    // column-per-point storage is exactly the row-major layout of n × m
    write_matrix(art.points(split), &data.points().transpose())?;
    let labels = data.labels().unwrap_or(&[]);
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    write_text(&art.labels(split), &text)
}

fn load_dataset(art: &Artifacts, split: Split) -> Result<Dataset> {
    let rows = read_matrix(art.points(split))?;
    let path = art.labels(split);
    let labels: Vec<u8> = read_text(&path)?
        .lines()
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{}: bad label {l:?}", path.display())))
        })
        .collect::<Result<_>>()?;
    Dataset::new(rows.transpose(), Some(labels))
}

fn load_geometry(art: &Artifacts) -> Result<(usize, usize)> {
    let path = art.path("ingest.txt");
    let kv = parse_kv(&read_text(&path)?);
    Ok((parse_field(&kv, "rows", &path)?, parse_field(&kv, "cols", &path)?))
}

fn channel_params(cfg: &ExperimentConfig, art: &Artifacts) -> Result<ChannelParams> {
    let (rows, cols) = load_geometry(art)?;
    Ok(ChannelParams::new(cfg.sigma, cfg.h, rows, cols)?.with_noise(cfg.noise))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub train: usize,
    pub test: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Parse the IDX files and write the train subset and the test split.
pub fn ingest(cfg: &ExperimentConfig) -> Result<IngestSummary> {
    cfg.check_data_files()?;
    let art = Artifacts::new(&cfg.out);
    ensure_dir(&art.dir)?;
    let train_images = parse_idx_images(&read_file(&cfg.train_images)?)?;
    let train_labels = parse_idx_labels(&read_file(&cfg.train_labels)?)?;
    let test_images = parse_idx_images(&read_file(&cfg.test_images)?)?;
    let test_labels = parse_idx_labels(&read_file(&cfg.test_labels)?)?;
    if (test_images.rows, test_images.cols) != (train_images.rows, train_images.cols) {
        return Err(Error::DimensionMismatch {
            expected: train_images.pixels_per_image(),
            found: test_images.pixels_per_image(),
        });
    }

    let train = select_subset(
        &train_images,
        &train_labels,
        &cfg.digits,
        cfg.per_class,
        derive_seed(cfg.seed, "train-subset"),
    )?;
    let test = if cfg.test_per_class == 0 {
        restrict_to_digits(&test_images, &test_labels, &cfg.digits)?
    } else {
        select_subset(
            &test_images,
            &test_labels,
            &cfg.digits,
            cfg.test_per_class,
            derive_seed(cfg.seed, "test-subset"),
        )?
    };
    save_dataset(&art, Split::Train, &train)?;
    save_dataset(&art, Split::Test, &test)?;
    write_text(
        &art.path("ingest.txt"),
        &format!(
            "rows = {}\ncols = {}\ntrain = {}\ntest = {}\n",
            train_images.rows,
            train_images.cols,
            train.len(),
            test.len()
        ),
    )?;
    log::info!("ingest: {} train / {} test points", train.len(), test.len());
    Ok(IngestSummary {
        train: train.len(),
        test: test.len(),
        rows: train_images.rows,
        cols: train_images.cols,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSummary {
    pub n: usize,
    pub samples_per_row: usize,
    pub asymmetry: f64,
    pub clamped: usize,
    pub cache_key: String,
    /// The raw kernel was reused from a previous run with the same inputs.
    pub resumed: bool,
}

fn kernel_cache_key(cfg: &ExperimentConfig, art: &Artifacts, params: &ChannelParams) -> Result<String> {
    let mut h = Sha256::new();
    h.update(read_file(&art.points(Split::Train))?);
    h.update(format!(
        "sigma={};h={};noise={};rows={};cols={};samples={};seed={}",
        params.sigma.to_bits(),
        params.h.to_bits(),
        params.noise.name(),
        params.rows,
        params.cols,
        cfg.total_samples,
        cfg.seed
    ));
    Ok(hex::encode(h.finalize()))
}

fn kernel_meta_text(meta: &KernelMeta, key: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "cache_key = {key}");
    let _ = writeln!(s, "seed = {}", meta.seed);
    let _ = writeln!(s, "samples_per_row = {}", meta.samples_per_row);
    if let Some(c) = meta.channel {
        let _ = writeln!(
            s,
            "sigma = {}\nh = {}\nnoise = {}\nrows = {}\ncols = {}",
            c.sigma,
            c.h,
            c.noise.name(),
            c.rows,
            c.cols
        );
    }
    if let Some(a) = meta.asymmetry {
        let _ = writeln!(s, "asymmetry = {a}");
    }
    let _ = writeln!(s, "clamped = {}", meta.clamped);
    s
}

/// Estimate (or reuse) the raw kernel, then symmetrize and detrace it.
pub fn kernel_stage(cfg: &ExperimentConfig) -> Result<KernelSummary> {
    let art = Artifacts::new(&cfg.out);
    let params = channel_params(cfg, &art)?;
    let key = kernel_cache_key(cfg, &art, &params)?;
    let seed = derive_seed(cfg.seed, "kernel");

    let cached = fs::read_to_string(art.kernel_meta())
        .ok()
        .map(|t| parse_kv(&t))
        .filter(|kv| kv_get(kv, "cache_key") == Some(key.as_str()))
        .filter(|_| art.kernel_raw().is_file());

    let (raw, resumed) = match cached {
        Some(kv) => {
            let entries = read_matrix(art.kernel_raw())?;
            let meta = KernelMeta {
                seed,
                samples_per_row: parse_field(&kv, "samples_per_row", &art.kernel_meta())?,
                channel: Some(params),
                asymmetry: None,
                clamped: 0,
            };
            log::info!("kernel: reusing cached raw kernel {key}");
            (KernelMatrix::new(entries, KernelStage::Raw, meta)?, true)
        }
        None => {
            let train = load_dataset(&art, Split::Train)?.unlabeled();
            let raw = estimate_kernel(&train, &params, cfg.total_samples, seed)?;
            write_matrix(art.kernel_raw(), &raw.entries)?;
            (raw, false)
        }
    };
    let sym = symmetrize(&raw)?;
    let detraced = detrace(&sym)?;
    write_matrix(art.kernel_detraced(), &detraced.entries)?;
    write_text(&art.kernel_meta(), &kernel_meta_text(&detraced.meta, &key))?;
    let asymmetry = sym.meta.asymmetry.unwrap_or(0.0);
    log::info!(
        "kernel: n={} S={} asymmetry={:.4} clamped={}",
        raw.n(),
        raw.meta.samples_per_row,
        asymmetry,
        sym.meta.clamped
    );
    Ok(KernelSummary {
        n: raw.n(),
        samples_per_row: raw.meta.samples_per_row,
        asymmetry,
        clamped: sym.meta.clamped,
        cache_key: key,
        resumed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSummary {
    pub eigenvalues: Vec<f64>,
    pub degenerate: Vec<(usize, usize)>,
}

/// Eigendecompose the detraced kernel and keep `k_max` features.
pub fn eigen_stage(cfg: &ExperimentConfig) -> Result<EigenSummary> {
    let art = Artifacts::new(&cfg.out);
    let entries = read_matrix(art.kernel_detraced())?;
    let kernel = KernelMatrix::new(entries, KernelStage::Detraced, KernelMeta::default())?;
    let spectrum = eigendecompose(&kernel)?;
    let basis = top_features(&spectrum, cfg.k_max.min(kernel.n()))?;
    write_matrix(art.basis(), &basis.coefficients.transpose())?;
    let text: String = basis.eigenvalues.iter().map(|v| format!("{v}\n")).collect();
    write_text(&art.eigenvalues(), &text)?;
    Ok(EigenSummary {
        eigenvalues: basis.eigenvalues,
        degenerate: basis.degenerate,
    })
}

pub fn load_basis(art: &Artifacts) -> Result<FeatureBasis> {
    let coefficients = read_matrix(art.basis())?.transpose();
    let path = art.eigenvalues();
    let eigenvalues: Vec<f64> = read_text(&path)?
        .lines()
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{}: bad value {l:?}", path.display())))
        })
        .collect::<Result<_>>()?;
    if eigenvalues.len() != coefficients.ncols() {
        return Err(Error::LengthMismatch {
            left: coefficients.ncols(),
            right: eigenvalues.len(),
        });
    }
    let degenerate = (1..eigenvalues.len())
        .filter(|&b| (eigenvalues[b - 1] - eigenvalues[b]).abs() <= crate::spectral::DEGENERACY_TOL)
        .map(|b| (b - 1, b))
        .collect();
    Ok(FeatureBasis {
        eigenvalues,
        coefficients,
        degenerate,
    })
}

fn save_components(art: &Artifacts, split: Split, comps: &ComponentMatrix) -> Result<()> {
    write_matrix(art.components(comps.method, split), &comps.values)?;
    let csv = art.path(&format!("components_{}_{}.csv", comps.method.name(), split.name()));
    write_text(&csv, &comps.to_csv())
}

/// Project train and test points with `proj` or `proj0`.
pub fn project_stage(cfg: &ExperimentConfig, method: ProjectionMethod) -> Result<()> {
    let art = Artifacts::new(&cfg.out);
    let params = channel_params(cfg, &art)?;
    let basis = load_basis(&art)?;
    let train = load_dataset(&art, Split::Train)?;
    let refs = BlurredSet::new(&train.unlabeled(), &params)?;
    let samples = cfg
        .proj0_samples
        .unwrap_or_else(|| (cfg.total_samples / train.len().max(1)).max(1));
    for split in [Split::Train, Split::Test] {
        let points = if split == Split::Train {
            train.clone()
        } else {
            load_dataset(&art, Split::Test)?
        };
        let comps = match method {
            ProjectionMethod::Proj => project_batch_fast(&points, &basis, &refs, &params)?,
            ProjectionMethod::Proj0 => {
                let seed = derive_seed(cfg.seed, &format!("proj0-{}", split.name()));
                project_batch_mc(&points, &basis, &refs, &params, samples, seed)?
            }
            ProjectionMethod::Rbf => return Err(Error::Config("use the rbf stage for the RBF baseline".into())),
        };
        save_components(&art, split, &comps)?;
    }
    Ok(())
}

fn rbf_fit_eval(
    cfg: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    params: &ChannelParams,
    delta: f64,
) -> Result<(ComponentMatrix, ComponentMatrix)> {
    let rbf = RbfParams {
        delta,
        apply_blur: cfg.rbf_blur,
        centered: cfg.rbf_centered,
        scaling: cfg.rbf_scaling,
    };
    let model = RbfModel::fit(&train.unlabeled(), rbf, *params, cfg.k_max.min(train.len()))?;
    let train_c = model.training_components(train.labels());
    let test_c = model.project(test)?;
    Ok((train_c, test_c))
}

/// RBF kernel PCA baseline. With a `delta_grid` the width with the lowest
/// test error at `delta_grid_k` components is kept (ties go to the smaller width).
pub fn rbf_stage(cfg: &ExperimentConfig) -> Result<f64> {
    let art = Artifacts::new(&cfg.out);
    let params = channel_params(cfg, &art)?;
    let train = load_dataset(&art, Split::Train)?;
    let test = load_dataset(&art, Split::Test)?;
    let mut grid = cfg.delta_grid.clone();
    if grid.is_empty() {
        grid.push(cfg.effective_delta());
    }
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64, ComponentMatrix, ComponentMatrix)> = None;
    for &delta in &grid {
        let (tr, te) = rbf_fit_eval(cfg, &train, &test, &params, delta)?;
        let err = if grid.len() > 1 {
            curve_error(cfg, &tr, &te, cfg.delta_grid_k)?
        } else {
            0.0
        };
        log::info!("rbf: delta={delta} error@k={}: {err:.3}", cfg.delta_grid_k);
        if best.as_ref().is_none_or(|b| err < b.1) {
            best = Some((delta, err, tr, te));
        }
    }
    let (delta, _, tr, te) = best.expect("grid is non-empty");
    save_components(&art, Split::Train, &tr)?;
    save_components(&art, Split::Test, &te)?;
    write_text(&art.path("rbf.txt"), &format!("delta = {delta}\n"))?;
    Ok(delta)
}

fn curve_error(cfg: &ExperimentConfig, train: &ComponentMatrix, test: &ComponentMatrix, k: usize) -> Result<f64> {
    let labels = train.labels.as_deref().ok_or(Error::Empty)?;
    let truth = test.labels.as_deref().ok_or(Error::Empty)?;
    let neighbors = cfg.neighbors.min(train.rows());
    let pred = knn_classify_with(&train.values, labels, &test.values, k, neighbors, cfg.weighting)?;
    error_rate(&pred, truth)
}

/// One row of an error-vs-k curve; `None` for methods that were not run.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub k: usize,
    pub errors: [Option<f64>; 3],
}

impl CurveRow {
    pub fn error(&self, method: ProjectionMethod) -> Option<f64> {
        self.errors[METHODS.iter().position(|&m| m == method).unwrap()]
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from("k,error_proj,error_proj0,error_rbf\n");
    for r in rows {
        s.push_str(&r.k.to_string());
        for e in &r.errors {
            s.push(',');
            if let Some(v) = e {
                s.push_str(&v.to_string());
            }
        }
        s.push('\n');
    }
    s
}

fn load_components(
    art: &Artifacts,
    method: ProjectionMethod,
    split: Split,
    labels: &Dataset,
) -> Result<ComponentMatrix> {
    let values = read_matrix(art.components(method, split))?;
    if values.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: values.nrows(),
            right: labels.len(),
        });
    }
    Ok(ComponentMatrix::new(values, method).with_labels(labels.labels()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub test: Vec<CurveRow>,
    pub train: Vec<CurveRow>,
}

/// Error-vs-k curves for every method whose components are present.
pub fn classify_stage(cfg: &ExperimentConfig) -> Result<Curves> {
    let art = Artifacts::new(&cfg.out);
    let train = load_dataset(&art, Split::Train)?;
    let test = load_dataset(&art, Split::Test)?;
    let k_max = cfg.k_max.min(train.len());
    if cfg.neighbors > train.len() {
        log::warn!(
            "neighbors={} exceeds training size {}; using {}",
            cfg.neighbors,
            train.len(),
            train.len()
        );
    }
    let mut test_rows: Vec<CurveRow> = (1..=k_max).map(|k| CurveRow { k, errors: [None; 3] }).collect();
    let mut train_rows = test_rows.clone();
    for (slot, &method) in METHODS.iter().enumerate() {
        if !cfg.has(method) || !art.components(method, Split::Test).is_file() {
            continue;
        }
        let tr = load_components(&art, method, Split::Train, &train)?;
        let te = load_components(&art, method, Split::Test, &test)?;
        for k in 1..=k_max.min(tr.k()) {
            test_rows[k - 1].errors[slot] = Some(curve_error(cfg, &tr, &te, k)?);
            train_rows[k - 1].errors[slot] = Some(curve_error(cfg, &tr, &tr, k)?);
        }
        let neighbors = cfg.neighbors.min(tr.rows());
        let kk = k_max.min(tr.k());
        let pred = knn_classify_with(
            &tr.values,
            train.labels().unwrap(),
            &te.values,
            kk,
            neighbors,
            cfg.weighting,
        )?;
        let cm = confusion_matrix(&pred, test.labels().unwrap())?;
        write_text(
            &art.path(&format!("confusion_{}.csv", method.name())),
            &confusion_csv(&cm),
        )?;
    }
    write_text(&art.curve(), &curve_csv(&test_rows))?;
    write_text(&art.train_curve(), &curve_csv(&train_rows))?;
    Ok(Curves {
        test: test_rows,
        train: train_rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub ingest: IngestSummary,
    pub kernel: KernelSummary,
    pub eigen: EigenSummary,
    pub rbf_delta: Option<f64>,
    pub curves: Curves,
    /// Qualitative expectations that did not hold in this run.
    pub flags: Vec<String>,
    pub timings: Vec<(String, f64)>,
}

fn check_expectations(curve: &[CurveRow]) -> Vec<String> {
    let mut flags = Vec::new();
    let at = |k: usize| curve.iter().find(|r| r.k == k);
    if let Some(r) = at(2) {
        if let (Some(p), Some(rbf)) = (r.error(ProjectionMethod::Proj), r.error(ProjectionMethod::Rbf)) {
            if rbf <= p {
                flags.push(format!(
                    "rbf error at k=2 ({rbf:.3}%) does not exceed proj error ({p:.3}%)"
                ));
            }
        }
    }
    if let Some(r) = at(8) {
        if let (Some(p), Some(p0)) = (r.error(ProjectionMethod::Proj), r.error(ProjectionMethod::Proj0)) {
            if p > p0 {
                flags.push(format!("proj error at k=8 ({p:.3}%) exceeds proj0 error ({p0:.3}%)"));
            }
        }
    }
    if let (Some(a), Some(b)) = (at(4), at(16)) {
        if let (Some(e4), Some(e16)) = (a.error(ProjectionMethod::Proj), b.error(ProjectionMethod::Proj)) {
            if (e4 - e16).abs() > 2.0 {
                flags.push(format!(
                    "proj error at k=4 ({e4:.3}%) is not within 2 points of k=16 ({e16:.3}%)"
                ));
            }
        }
    }
    flags
}

fn manifest_text(cfg: &ExperimentConfig, report: &RunReport, art: &Artifacts) -> Result<String> {
    let mut s = String::from("# run manifest\n");
    s.push_str(&cfg.to_text());
    let _ = writeln!(s, "n_train = {}", report.ingest.train);
    let _ = writeln!(s, "n_test = {}", report.ingest.test);
    let _ = writeln!(s, "kernel_seed = {}", derive_seed(cfg.seed, "kernel"));
    let _ = writeln!(s, "kernel_cache_key = {}", report.kernel.cache_key);
    let _ = writeln!(s, "samples_per_row = {}", report.kernel.samples_per_row);
    let _ = writeln!(s, "asymmetry = {}", report.kernel.asymmetry);
    let _ = writeln!(s, "clamped = {}", report.kernel.clamped);
    let _ = writeln!(s, "degenerate_pairs = {:?}", report.eigen.degenerate);
    if let Some(d) = report.rbf_delta {
        let _ = writeln!(s, "rbf_delta_used = {d}");
    }
    for f in &report.flags {
        let _ = writeln!(s, "flag = {f}");
    }
    let mut names: Vec<String> = fs::read_dir(&art.dir)
        .map_err(|e| Error::io(&art.dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".rkm") || n.ends_with(".csv"))
        .collect();
    names.sort();
    for n in names {
        let _ = writeln!(s, "sha256 {} = {}", n, sha256_hex(&read_file(&art.path(&n))?));
    }
    Ok(s)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

/// The whole pipeline.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    with_pool(cfg.threads, || run_inner(cfg))
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunReport> {
    let art = Artifacts::new(&cfg.out);
    let mut timings = Vec::new();
    let mut timed = |name: &str, start: Instant| timings.push((name.to_string(), start.elapsed().as_secs_f64()));

    let t = Instant::now();
    let ingest = ingest(cfg)?;
    timed("ingest", t);
    let t = Instant::now();
    let kernel = kernel_stage(cfg)?;
    timed("kernel", t);
    let t = Instant::now();
    let eigen = eigen_stage(cfg)?;
    timed("eigen", t);
    for m in [ProjectionMethod::Proj, ProjectionMethod::Proj0] {
        if cfg.has(m) {
            let t = Instant::now();
            project_stage(cfg, m)?;
            timed(m.name(), t);
        }
    }
    let rbf_delta = if cfg.has(ProjectionMethod::Rbf) {
        let t = Instant::now();
        let d = rbf_stage(cfg)?;
        timed("rbf", t);
        Some(d)
    } else {
        None
    };
    let t = Instant::now();
    let curves = classify_stage(cfg)?;
    timed("classify", t);

    let flags = check_expectations(&curves.test);
    for f in &flags {
        log::warn!("{f}");
    }
    let report = RunReport {
        ingest,
        kernel,
        eigen,
        rbf_delta,
        curves,
        flags,
        timings,
    };
    write_text(&art.manifest(), &manifest_text(cfg, &report, &art)?)?;
    let mut tt = format!("kernel_resumed = {}\n", report.kernel.resumed);
    for (name, secs) in &report.timings {
        let _ = writeln!(tt, "{name} = {secs:.3}");
    }
    write_text(&art.path("timings.txt"), &tt)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_schema() {
        let rows = vec![
            CurveRow {
                k: 1,
                errors: [Some(12.5), None, Some(3.0)],
            },
            CurveRow {
                k: 2,
                errors: [Some(0.0), None, None],
            },
        ];
        assert_eq!(
            curve_csv(&rows),
            "k,error_proj,error_proj0,error_rbf\n1,12.5,,3\n2,0,,\n"
        );
    }

    #[test]
    fn expectation_flags() {
        let rows: Vec<CurveRow> = (1..=16)
            .map(|k| CurveRow {
                k,
                errors: [Some(5.0), Some(4.0), Some(if k == 2 { 1.0 } else { 30.0 })],
            })
            .collect();
        let flags = check_expectations(&rows);
        assert_eq!(flags.len(), 2);
        assert!(flags[0].starts_with("rbf error at k=2"));
        assert!(flags[1].starts_with("proj error at k=8"));
    }
}
