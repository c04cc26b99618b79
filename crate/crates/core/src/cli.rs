//! Command-line front end for the `rlpa` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classify::{Classifier, ClassifierKind, ElmParams};
use crate::cleansing::{rlpa_cleanse, RlpaConfig};
use crate::datacube::{
    load_cube, load_labels, save_cube, save_labels, synth_cube, to_onehot, CubeFormat, LabelField,
    Spectra, SynthSpec,
};
use crate::error::{Error, Result};
use crate::eval::{self, ExperimentConfig};
use crate::graph::{build_affinity, build_transition};
use crate::noise::{apply_label_noise, NoiseSpec};
use crate::segmentation::{segment_cube, SegmentationParams, SlicParams, SuperpixelMap};

#[derive(Debug, Parser)]
#[command(
    name = "rlpa",
    version,
    about = "Label-noise cleansing for hyperspectral training sets"
)]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic cube and its ground-truth labels.
    Synth(SynthArgs),
    /// Flip labels of a label grid at a given rate.
    Noisify(NoisifyArgs),
    /// Segment a cube into superpixels.
    Segment(SegmentArgs),
    /// Cleanse the labeled pixels of a label grid.
    Cleanse(CleanseArgs),
    /// Fit a classifier on spectra and predict others.
    Classify(ClassifyArgs),
    /// Score a predicted label grid against the ground truth.
    Evaluate(EvaluateArgs),
    /// Run a noise-level experiment from a config file.
    Experiment(ExperimentArgs),
    /// Grid search over eta and alpha.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 60)]
    pub height: usize,
    #[arg(long, default_value_t = 60)]
    pub width: usize,
    #[arg(long, default_value_t = 20)]
    pub bands: usize,
    #[arg(long, default_value_t = 6)]
    pub classes: u32,
    #[arg(long, default_value_t = 3)]
    pub grid_rows: usize,
    #[arg(long, default_value_t = 3)]
    pub grid_cols: usize,
    /// Distance between neighbouring class means.
    #[arg(long, default_value_t = 0.5)]
    pub class_step: f64,
    /// Per-band noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Cube path; `.csv` selects the CSV format, anything else raw f32.
    #[arg(long)]
    pub out_cube: PathBuf,
    #[arg(long)]
    pub out_labels: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoisifyArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentOpts {
    #[arg(long, default_value_t = 2000)]
    pub tbase: usize,
    /// Fixed superpixel count instead of the edge-based budget.
    #[arg(long)]
    pub superpixels: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub slic_iters: usize,
    #[arg(long, default_value_t = 2.0)]
    pub log_sigma: f64,
}

impl SegmentOpts {
    fn params(&self) -> SegmentationParams {
        SegmentationParams {
            t_base: self.tbase,
            fixed_count: self.superpixels,
            log_sigma: self.log_sigma,
            edge_threshold: None,
            slic: SlicParams {
                compactness: self.compactness,
                max_iters: self.slic_iters,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[command(flatten)]
    pub opts: SegmentOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CleanseArgs {
    #[arg(long)]
    pub cube: PathBuf,
    /// Noisy label grid; every non-zero pixel is a training sample.
    #[arg(long)]
    pub labels: PathBuf,
    /// Clean label grid, used only for the diagnostics.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Precomputed superpixel map; otherwise the cube is segmented.
    #[arg(long)]
    pub segmap: Option<PathBuf>,
    #[command(flatten)]
    pub seg: SegmentOpts,
    #[arg(long, default_value_t = 0.7)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub rounds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-round noisy-label counts (CSV).
    #[arg(long)]
    pub diag: Option<PathBuf>,
    /// Also write the transition matrix.
    #[arg(long)]
    pub transition: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Training spectra, one comma-separated spectrum per line.
    #[arg(long)]
    pub train_x: PathBuf,
    /// Training labels, one per line.
    #[arg(long)]
    pub train_y: PathBuf,
    #[arg(long)]
    pub test_x: PathBuf,
    #[arg(long, default_value = "nn")]
    pub clf: String,
    #[arg(long, default_value_t = 500)]
    pub elm_hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub elm_lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Grid whose non-zero pixels are left out (typically the training set).
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// Render the predicted grid as a PPM image.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Config echo, timings and flags.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Grid values for eta; overrides `sweep_eta` in the config.
    #[arg(long)]
    pub eta: Vec<f64>,
    /// Grid values for alpha; overrides `sweep_alpha` in the config.
    #[arg(long)]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn read_spectra(path: &Path) -> Result<Spectra> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Spectra::read_csv(f)
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let spec = SynthSpec::graded(
        a.height,
        a.width,
        a.bands,
        a.classes,
        a.grid_rows,
        a.grid_cols,
        a.class_step,
        a.noise,
        seed,
    );
    spec.validate()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (cube, labels) = synth_cube(&spec, seed)?;
    save_cube(&a.out_cube, &cube, CubeFormat::from_path(&a.out_cube))?;
    save_labels(&a.out_labels, &labels)
}

fn cmd_noisify(a: &NoisifyArgs, seed: u64) -> Result<()> {
    let field = load_labels(&a.labels)?;
    let idx = field.labeled_indices();
    let clean = to_onehot(&field, &idx)?;
    let noisy = apply_label_noise(&clean, &NoiseSpec::new(a.rho, seed)?)?;
    save_labels(&a.out, &field.with_labels(&idx, &noisy.argmax_labels())?)
}

fn cmd_segment(a: &SegmentArgs) -> Result<()> {
    let cube = load_cube(&a.cube, CubeFormat::from_path(&a.cube))?;
    let seg = segment_cube(&cube, &a.opts.params())?;
    seg.map.save(&a.out)
}

fn cmd_cleanse(a: &CleanseArgs, seed: u64) -> Result<()> {
    let cube = load_cube(&a.cube, CubeFormat::from_path(&a.cube))?;
    let noisy_field = load_labels(&a.labels)?;
    noisy_field.check_matches(&cube)?;
    let map = match &a.segmap {
        Some(p) => SuperpixelMap::load(p)?,
        None => segment_cube(&cube, &a.seg.params())?.map,
    };
    let idx = noisy_field.labeled_indices();
    let samples = cube.samples(&idx)?;
    let t = build_transition(&build_affinity(&samples, &map)?);
    if let Some(p) = &a.transition {
        let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = std::io::BufWriter::new(f);
        t.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(p, e))?;
    }
    let noisy = to_onehot(&noisy_field, &idx)?;
    let reference = match &a.clean {
        Some(p) => {
            let clean_field: LabelField = load_labels(p)?;
            clean_field.check_matches(&cube)?;
            Some(to_onehot(&clean_field, &idx)?)
        }
        None => None,
    };
    let cfg = RlpaConfig {
        eta: a.eta,
        alpha: a.alpha,
        rounds: a.rounds,
        seed,
        ..Default::default()
    };
    let out = rlpa_cleanse(&t, &noisy, &cfg, reference.as_ref())?;
    save_labels(&a.out, &noisy_field.with_labels(&idx, &out.labels)?)?;
    if let Some(p) = &a.diag {
        write_file(p, &out.diagnostics.to_csv())?;
    }
    if let (Some(first), Some(last)) =
        (out.diagnostics.initial_noisy, out.diagnostics.rounds.last())
    {
        eprintln!(
            "noisy labels: {first} before, {} after",
            last.cumulative_noisy
        );
    }
    Ok(())
}

fn cmd_classify(a: &ClassifyArgs, seed: u64) -> Result<()> {
    let kind: ClassifierKind = a.clf.parse()?;
    let train_x = read_spectra(&a.train_x)?;
    let train_y = load_labels(&a.train_y)?;
    let test_x = read_spectra(&a.test_x)?;
    let elm = ElmParams {
        hidden: a.elm_hidden,
        lambda: a.elm_lambda,
        seed,
    };
    let model = Classifier::fit(kind, &train_x, train_y.labels(), &elm)?;
    let pred = model.predict(&test_x)?;
    let text: String = pred.iter().map(|l| format!("{l}\n")).collect();
    write_file(&a.out, &text)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let truth = load_labels(&a.truth)?;
    let pred = load_labels(&a.pred)?;
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} pixels, prediction {}",
            truth.len(),
            pred.len()
        )));
    }
    let exclude = a.exclude.as_ref().map(load_labels).transpose()?;
    let idx: Vec<usize> = truth
        .labeled_indices()
        .into_iter()
        .filter(|&i| exclude.as_ref().is_none_or(|e| e.get(i) == 0))
        .collect();
    let t: Vec<u32> = idx.iter().map(|&i| truth.get(i)).collect();
    let p: Vec<u32> = idx.iter().map(|&i| pred.get(i)).collect();
    let classes = truth.classes().max(pred.classes()) as usize;
    let m = eval::confusion(&t, &p, classes)?;
    println!("samples,oa,aa,kappa");
    println!("{},{},{},{}", m.total(), m.oa()?, m.aa()?, m.kappa()?);
    let empty = m.empty_classes();
    if !empty.is_empty() {
        eprintln!("classes without samples (left out of AA): {empty:?}");
    }
    if let Some(path) = &a.map {
        let img = eval::render_map(&pred, &eval::Palette::for_classes(classes))?;
        eval::write_ppm(path, &img)?;
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, seed: Option<u64>) -> Result<()> {
    let cfg = read_config(&a.config, seed)?;
    let report = eval::run_experiment(&cfg)?;
    write_file(&a.out, &report.to_csv())?;
    if let Some(p) = &a.meta {
        write_file(p, &report.metadata())?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, seed: Option<u64>) -> Result<()> {
    let cfg = read_config(&a.config, seed)?;
    let eta = if a.eta.is_empty() {
        &cfg.sweep_eta
    } else {
        &a.eta
    };
    let alpha = if a.alpha.is_empty() {
        &cfg.sweep_alpha
    } else {
        &a.alpha
    };
    let report = eval::parameter_sweep(&cfg, eta, alpha)?;
    write_file(&a.out, &report.to_csv())
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let go = || match &cli.command {
        Command::Synth(a) => cmd_synth(a, seed),
        Command::Noisify(a) => cmd_noisify(a, seed),
        Command::Segment(a) => cmd_segment(a),
        Command::Cleanse(a) => cmd_cleanse(a, seed),
        Command::Classify(a) => cmd_classify(a, seed),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a, cli.seed),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Process exit code for a result: 0, 2 for configuration errors, 3 for
/// data errors.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_config_error() => 2,
        Err(_) => 3,
    }
}
