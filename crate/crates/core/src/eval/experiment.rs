//! Noise-level sweeps: split, corrupt, optionally cleanse, classify, score.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ExperimentConfig, GraphKind, Method, Source};
use super::metrics::{confusion, ConfusionMatrix};
use super::render::{render_map, write_ppm, Palette};
use crate::classify::{Classifier, ClassifierKind, ElmParams};
use crate::cleansing::{rlpa_cleanse, RlpaConfig};
use crate::datacube::{
    load_cube, synth_cube, to_onehot, train_test_split, CubeFormat, LabelField, LabelMatrix,
    SpectralCube,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_affinity, build_affinity_spectral_only, build_transition, TransitionMatrix,
};
use crate::noise::{apply_label_noise, NoiseSpec};
use crate::seed;
use crate::segmentation::{segment_cube, SuperpixelMap};

// stream ids for per-cell seeds
const SPLIT: u64 = 1;
const NOISE: u64 = 2;
const CLEANSE: u64 = 3;
const CLASSIFIER: u64 = 4;

/// Seed for one stage of run `run_seed`, optionally also keyed by noise level.
fn stage_seed(master: u64, run_seed: u64, stage: u64, rho: Option<f64>) -> u64 {
    let s = seed::derive(seed::derive(master, run_seed), stage);
    match rho {
        Some(r) => seed::derive(s, r.to_bits()),
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub rho: f64,
    pub seed: u64,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    /// Classes with no test sample, left out of `aa`.
    pub empty_classes: Vec<u32>,
    /// Training labels that differ from the ground truth.
    pub train_noisy: usize,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub rho: f64,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub setup: Duration,
    pub cells: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// Sorted by method, classifier, rho, seed.
    pub rows: Vec<CellResult>,
    pub config_echo: String,
    pub superpixels: usize,
    pub timings: Timings,
}

fn row_order(a: &CellResult, b: &CellResult) -> Ordering {
    a.method
        .cmp(&b.method)
        .then(a.classifier.cmp(&b.classifier))
        .then(a.rho.total_cmp(&b.rho))
        .then(a.seed.cmp(&b.seed))
}

impl ExperimentReport {
    /// Mean metrics over seeds for each (method, classifier, rho).
    pub fn means(&self) -> Vec<MeanRow> {
        let mut out: Vec<MeanRow> = Vec::new();
        let mut start = 0;
        while start < self.rows.len() {
            let first = &self.rows[start];
            let end = start
                + self.rows[start..]
                    .iter()
                    .take_while(|r| {
                        r.method == first.method
                            && r.classifier == first.classifier
                            && r.rho == first.rho
                    })
                    .count();
            let group = &self.rows[start..end];
            let n = group.len() as f64;
            out.push(MeanRow {
                method: first.method,
                classifier: first.classifier,
                rho: first.rho,
                oa: group.iter().map(|r| r.oa).sum::<f64>() / n,
                aa: group.iter().map(|r| r.aa).sum::<f64>() / n,
                kappa: group.iter().map(|r| r.kappa).sum::<f64>() / n,
            });
            start = end;
        }
        out
    }

    pub fn mean_oa(&self, method: Method, classifier: ClassifierKind, rho: f64) -> Option<f64> {
        self.means()
            .into_iter()
            .find(|m| m.method == method && m.classifier == classifier && m.rho == rho)
            .map(|m| m.oa)
    }

    /// `method,classifier,rho,seed,oa,aa,kappa`; each group of per-seed rows
    /// is followed by its `mean` row. Values use the shortest exact decimal
    /// form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,classifier,rho,seed,oa,aa,kappa\n");
        let means = self.means();
        let mut means = means.iter().peekable();
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method.name(),
                r.classifier.name(),
                r.rho,
                r.seed,
                r.oa,
                r.aa,
                r.kappa
            );
            let group_ends = self.rows.get(i + 1).is_none_or(|n| {
                n.method != r.method || n.classifier != r.classifier || n.rho != r.rho
            });
            if group_ends {
                let m = means.next().expect("one mean per group");
                let _ = writeln!(
                    out,
                    "{},{},{},mean,{},{},{}",
                    m.method.name(),
                    m.classifier.name(),
                    m.rho,
                    m.oa,
                    m.aa,
                    m.kappa
                );
            }
        }
        out
    }

    /// Config echo, superpixel count, timings and flagged empty classes, as
    /// `#`-prefixed lines.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        for line in self.config_echo.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# superpixels = {}", self.superpixels);
        let _ = writeln!(
            out,
            "# setup_seconds = {:.3}",
            self.timings.setup.as_secs_f64()
        );
        let _ = writeln!(
            out,
            "# cells_seconds = {:.3}",
            self.timings.cells.as_secs_f64()
        );
        for r in self.rows.iter().filter(|r| !r.empty_classes.is_empty()) {
            let _ = writeln!(
                out,
                "# empty test classes for {},{},{},{}: {:?}",
                r.method.name(),
                r.classifier.name(),
                r.rho,
                r.seed,
                r.empty_classes
            );
        }
        out
    }
}

/// Cube, ground truth and the superpixel map shared by all cells.
pub struct Dataset {
    pub cube: SpectralCube,
    pub truth: LabelField,
    pub segmap: Option<SuperpixelMap>,
}

impl Dataset {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let (cube, truth) = match &cfg.source {
            Source::Synth(s) => synth_cube(&s.spec(), s.seed)?,
            Source::Files { cube, labels } => {
                let c = load_cube(cube, CubeFormat::from_path(cube))?;
                let l = crate::datacube::load_labels(labels)?;
                l.check_matches(&c)?;
                (c, l)
            }
        };
        let segmap = match cfg.graph {
            GraphKind::Superpixel => Some(segment_cube(&cube, &cfg.segmentation)?.map),
            GraphKind::Knn(_) => None,
        };
        Ok(Self {
            cube,
            truth,
            segmap,
        })
    }
}

struct CellInput<'a> {
    data: &'a Dataset,
    cfg: &'a ExperimentConfig,
    rho: f64,
    seed: u64,
}

fn run_cell(input: &CellInput) -> Result<Vec<CellResult>> {
    let CellInput {
        data,
        cfg,
        rho,
        seed,
    } = *input;
    let ms = cfg.master_seed;
    let wrap = |method: Option<Method>, classifier: Option<ClassifierKind>| {
        move |e: Error| Error::Cell {
            method: method.map_or("-", Method::name).into(),
            classifier: classifier.map_or("-", ClassifierKind::name).into(),
            rho,
            seed,
            source: Box::new(e),
        }
    };
    let split = train_test_split(&data.truth, cfg.split, stage_seed(ms, seed, SPLIT, None))
        .map_err(wrap(None, None))?;
    let clean = to_onehot(&data.truth, &split.train).map_err(wrap(None, None))?;
    let noise =
        NoiseSpec::new(rho, stage_seed(ms, seed, NOISE, Some(rho))).map_err(wrap(None, None))?;
    let noisy = apply_label_noise(&clean, &noise).map_err(wrap(None, None))?;
    let train = data.cube.samples(&split.train).map_err(wrap(None, None))?;
    let test = data.cube.samples(&split.test).map_err(wrap(None, None))?;
    let truth_test: Vec<u32> = split.test.iter().map(|&i| data.truth.get(i)).collect();
    let classes = data.truth.classes() as usize;

    let mut transition: Option<TransitionMatrix> = None;
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let labels = match method {
            Method::Nla => noisy.argmax_labels(),
            Method::OracleClean => clean.argmax_labels(),
            Method::Rlpa => {
                if transition.is_none() {
                    let w = match (cfg.graph, &data.segmap) {
                        (GraphKind::Superpixel, Some(map)) => build_affinity(&train, map),
                        (GraphKind::Knn(k), _) => build_affinity_spectral_only(&train.spectra, k),
                        _ => unreachable!("superpixel graph without a map"),
                    }
                    .map_err(wrap(Some(method), None))?;
                    transition = Some(build_transition(&w));
                }
                let rc = RlpaConfig {
                    seed: stage_seed(ms, seed, CLEANSE, Some(rho)),
                    ..cfg.rlpa
                };
                rlpa_cleanse(transition.as_ref().unwrap(), &noisy, &rc, None)
                    .map_err(wrap(Some(method), None))?
                    .labels
            }
        };
        let train_noisy = (0..clean.rows())
            .filter(|&i| clean.label(i) != labels[i])
            .count();
        for &kind in &cfg.classifiers {
            let w = wrap(Some(method), Some(kind));
            let elm = ElmParams {
                seed: stage_seed(ms, seed, CLASSIFIER, None),
                ..cfg.elm
            };
            let model = Classifier::fit(kind, &train.spectra, &labels, &elm).map_err(&w)?;
            let pred = model.predict(&test.spectra).map_err(&w)?;
            let m = confusion(&truth_test, &pred, classes).map_err(&w)?;
            if let Some(dir) = &cfg.map_dir {
                write_map(
                    dir,
                    data,
                    &split.train,
                    &labels,
                    &split.test,
                    &pred,
                    method,
                    kind,
                    rho,
                    seed,
                )
                .map_err(&w)?;
            }
            out.push(CellResult {
                method,
                classifier: kind,
                rho,
                seed,
                oa: m.oa().map_err(&w)?,
                aa: m.aa().map_err(&w)?,
                kappa: m.kappa().map_err(&w)?,
                empty_classes: m.empty_classes(),
                train_noisy,
                confusion: m,
            });
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn write_map(
    dir: &Path,
    data: &Dataset,
    train: &[usize],
    train_labels: &[u32],
    test: &[usize],
    pred: &[u32],
    method: Method,
    kind: ClassifierKind,
    rho: f64,
    seed: u64,
) -> Result<()> {
    let blank = data.truth.restrict(&[])?;
    let field = blank
        .with_labels(train, train_labels)?
        .with_labels(test, pred)?;
    let img = render_map(&field, &Palette::for_classes(data.truth.classes() as usize))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = format!(
        "{}_{}_rho{}_seed{}.ppm",
        method.name(),
        kind.name(),
        rho,
        seed
    );
    write_ppm(dir.join(name), &img)
}

/// Runs every (rho, seed) cell of `cfg` in parallel on an already loaded
/// dataset.
pub fn run_on(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let cells: Vec<CellInput> = cfg
        .rhos
        .iter()
        .flat_map(|&rho| cfg.seeds.iter().map(move |&seed| (rho, seed)))
        .map(|(rho, seed)| CellInput {
            data,
            cfg,
            rho,
            seed,
        })
        .collect();
    let results: Vec<Vec<CellResult>> = cells.par_iter().map(run_cell).collect::<Result<_>>()?;
    let mut rows: Vec<CellResult> = results.into_iter().flatten().collect();
    rows.sort_by(row_order);
    Ok(ExperimentReport {
        rows,
        config_echo: cfg.to_text(),
        superpixels: data.segmap.as_ref().map_or(0, |m| m.count()),
        timings: Timings {
            setup: Duration::ZERO,
            cells: started.elapsed(),
        },
    })
}

/// Loads (or synthesizes) the data, segments it once and runs all cells.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let data = Dataset::load(cfg)?;
    let setup = started.elapsed();
    let mut report = run_on(&data, cfg)?;
    report.timings.setup = setup;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub eta: f64,
    pub alpha: f64,
    /// Mean OA of the cleansed runs over all noise levels, seeds and
    /// classifiers.
    pub mean_oa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Row-major over `eta` then `alpha`, in grid order.
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eta,alpha,mean_oa\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{}", c.eta, c.alpha, c.mean_oa);
        }
        out
    }

    pub fn get(&self, eta: f64, alpha: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.eta == eta && c.alpha == alpha)
            .map(|c| c.mean_oa)
    }
}

/// Grid search over the cleansing parameters. Only the cleansed method runs;
/// the rest of `cfg` is kept.
pub fn parameter_sweep(
    cfg: &ExperimentConfig,
    eta_grid: &[f64],
    alpha_grid: &[f64],
) -> Result<SweepReport> {
    if eta_grid.is_empty() || alpha_grid.is_empty() {
        return Err(Error::Config("sweep grids must be non-empty".into()));
    }
    if let Some(v) = eta_grid
        .iter()
        .chain(alpha_grid)
        .find(|v| !(**v > 0.0 && **v < 1.0))
    {
        return Err(Error::Config(format!("sweep value {v} outside (0, 1)")));
    }
    let base = ExperimentConfig {
        methods: vec![Method::Rlpa],
        map_dir: None,
        ..cfg.clone()
    };
    base.validate()?;
    let data = Dataset::load(&base)?;
    let mut cells = Vec::new();
    for &eta in eta_grid {
        for &alpha in alpha_grid {
            let mut c = base.clone();
            c.rlpa.eta = eta;
            c.rlpa.alpha = alpha;
            let report = run_on(&data, &c)?;
            let mean_oa = report.rows.iter().map(|r| r.oa).sum::<f64>() / report.rows.len() as f64;
            cells.push(SweepCell {
                eta,
                alpha,
                mean_oa,
            });
        }
    }
    Ok(SweepReport { cells })
}

/// Training labels of one cell after noise and, for [`Method::Rlpa`],
/// cleansing; returns `(clean, labels)`. Useful for inspecting what the
/// classifiers are trained on.
pub fn cell_training_labels(
    data: &Dataset,
    cfg: &ExperimentConfig,
    method: Method,
    rho: f64,
    seed: u64,
) -> Result<(LabelMatrix, Vec<u32>)> {
    let single = ExperimentConfig {
        methods: vec![method],
        classifiers: vec![ClassifierKind::Nn],
        ..cfg.clone()
    };
    let ms = cfg.master_seed;
    let split = train_test_split(&data.truth, single.split, stage_seed(ms, seed, SPLIT, None))?;
    let clean = to_onehot(&data.truth, &split.train)?;
    let noisy = apply_label_noise(
        &clean,
        &NoiseSpec::new(rho, stage_seed(ms, seed, NOISE, Some(rho)))?,
    )?;
    let labels = match method {
        Method::Nla => noisy.argmax_labels(),
        Method::OracleClean => clean.argmax_labels(),
        Method::Rlpa => {
            let train = data.cube.samples(&split.train)?;
            let w = match (cfg.graph, &data.segmap) {
                (GraphKind::Superpixel, Some(map)) => build_affinity(&train, map)?,
                (GraphKind::Knn(k), _) => build_affinity_spectral_only(&train.spectra, k)?,
                _ => return Err(Error::Config("superpixel graph without a map".into())),
            };
            let rc = RlpaConfig {
                seed: stage_seed(ms, seed, CLEANSE, Some(rho)),
                ..cfg.rlpa
            };
            rlpa_cleanse(&build_transition(&w), &noisy, &rc, None)?.labels
        }
    };
    Ok((clean, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::config::SynthSource;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            source: Source::Synth(SynthSource {
                height: 24,
                width: 24,
                bands: 6,
                classes: 4,
                grid_rows: 2,
                grid_cols: 2,
                class_step: 0.5,
                noise_sigma: 0.02,
                seed: 1,
            }),
            split: crate::datacube::SplitScheme::PerClass(30),
            rhos: vec![0.0, 0.3],
            seeds: vec![0, 1],
            rlpa: RlpaConfig {
                rounds: 10,
                ..Default::default()
            },
            segmentation: crate::segmentation::SegmentationParams {
                fixed_count: Some(16),
                ..Default::default()
            },
            elm: ElmParams {
                hidden: 40,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn cardinality_and_means() {
        let report = run_experiment(&small()).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 2 * 2);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 16 + 8);
        for m in report.means() {
            let seeds: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.method == m.method && r.classifier == m.classifier && r.rho == m.rho)
                .map(|r| r.oa)
                .collect();
            assert_eq!(m.oa, seeds.iter().sum::<f64>() / seeds.len() as f64);
        }
        for r in &report.rows {
            assert_eq!(
                r.oa,
                r.confusion.trace() as f64 / r.confusion.total() as f64
            );
            assert!((-1.0..=1.0).contains(&r.kappa));
        }
    }

    #[test]
    fn deterministic_csv() {
        let a = run_experiment(&small()).unwrap().to_csv();
        let b = run_experiment(&small()).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_single_cell_matches_run() {
        let cfg = ExperimentConfig {
            rhos: vec![0.3],
            seeds: vec![2],
            ..small()
        };
        let sweep = parameter_sweep(&cfg, &[0.7], &[0.9]).unwrap();
        let run = run_experiment(&ExperimentConfig {
            methods: vec![Method::Rlpa],
            ..cfg
        })
        .unwrap();
        let mean = run.rows.iter().map(|r| r.oa).sum::<f64>() / run.rows.len() as f64;
        assert_eq!(sweep.get(0.7, 0.9), Some(mean));
        assert!(parameter_sweep(&small(), &[], &[0.9]).is_err());
        assert!(parameter_sweep(&small(), &[1.0], &[0.9])
            .unwrap_err()
            .is_config_error());
    }

    #[test]
    fn errors_name_the_cell() {
        let cfg = ExperimentConfig {
            split: crate::datacube::SplitScheme::PerClass(5),
            rlpa: RlpaConfig {
                eta: 0.01,
                rounds: 2,
                ..Default::default()
            },
            methods: vec![Method::Rlpa],
            ..small()
        };
        match run_experiment(&cfg).unwrap_err() {
            Error::Cell { method, .. } => assert_eq!(method, "rlpa"),
            e => panic!("unexpected {e}"),
        }
    }
}
