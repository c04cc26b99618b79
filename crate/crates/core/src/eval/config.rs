//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line. Blank lines and anything after `#` are
//! ignored; whitespace around keys and values is trimmed. List-valued keys
//! (`rho`, `seed`, `method`, `classifier`, `sweep_eta`, `sweep_alpha`) are
//! repeated, one value per line; every other key may appear at most once.
//! The full key list is in the crate README.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::classify::{ClassifierKind, ElmParams};
use crate::cleansing::RlpaConfig;
use crate::datacube::{SplitScheme, SynthSpec};
use crate::error::{Error, Result};
use crate::segmentation::{SegmentationParams, SlicParams};

/// Which training labels the classifiers see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// The noisy labels as they are.
    Nla,
    /// The noisy labels after cleansing.
    Rlpa,
    /// The clean labels; an upper reference.
    OracleClean,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nla => "nla",
            Method::Rlpa => "rlpa",
            Method::OracleClean => "oracle-clean",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nla" => Ok(Method::Nla),
            "rlpa" => Ok(Method::Rlpa),
            "oracle-clean" => Ok(Method::OracleClean),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSource {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: u32,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub class_step: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSource {
    fn default() -> Self {
        Self {
            height: 60,
            width: 60,
            bands: 20,
            classes: 6,
            grid_rows: 3,
            grid_cols: 3,
            class_step: 0.5,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl SynthSource {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec::graded(
            self.height,
            self.width,
            self.bands,
            self.classes,
            self.grid_rows,
            self.grid_cols,
            self.class_step,
            self.noise_sigma,
            self.seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synth(SynthSource),
    /// Cube file (format from the extension) and ground-truth label grid.
    Files {
        cube: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Affinity restricted to superpixels.
    Superpixel,
    /// Symmetrized k-nearest-neighbour graph on spectra alone.
    Knn(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: Source,
    pub split: SplitScheme,
    pub rhos: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub classifiers: Vec<ClassifierKind>,
    /// Mixed into every derived seed; `--seed` on the command line sets it.
    pub master_seed: u64,
    /// `seed` is ignored; cleansing seeds are derived per cell.
    pub rlpa: RlpaConfig,
    pub segmentation: SegmentationParams,
    pub graph: GraphKind,
    /// `seed` is ignored; classifier seeds are derived per cell.
    pub elm: ElmParams,
    pub sweep_eta: Vec<f64>,
    pub sweep_alpha: Vec<f64>,
    /// Directory for classification maps, one PPM per run.
    pub map_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: Source::Synth(SynthSource::default()),
            split: SplitScheme::PerClass(100),
            rhos: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            seeds: (0..10).collect(),
            methods: vec![Method::Nla, Method::Rlpa],
            classifiers: vec![ClassifierKind::Nn, ClassifierKind::Elm],
            master_seed: 0,
            rlpa: RlpaConfig::default(),
            segmentation: SegmentationParams::default(),
            graph: GraphKind::Superpixel,
            elm: ElmParams::default(),
            sweep_eta: Vec::new(),
            sweep_alpha: Vec::new(),
            map_dir: None,
        }
    }
}

const LIST_KEYS: [&str; 6] = [
    "rho",
    "seed",
    "method",
    "classifier",
    "sweep_eta",
    "sweep_alpha",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_split(v: &str) -> Result<SplitScheme> {
    match v.split_once(':') {
        Some(("per_class", n)) => Ok(SplitScheme::PerClass(parse_num("split", n)?)),
        Some(("fraction", p)) => Ok(SplitScheme::Fraction(parse_num("split", p)?)),
        _ => Err(Error::Config(format!(
            "split must be per_class:N or fraction:P, got `{v}`"
        ))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut single: BTreeMap<String, String> = BTreeMap::new();
        let mut lists: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim().to_owned());
            if let Some(&lk) = LIST_KEYS.iter().find(|&&lk| lk == k) {
                lists.entry(lk).or_default().push(v);
            } else if single.insert(k.to_owned(), v).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{k}`",
                    n + 1
                )));
            }
        }

        let mut cfg = ExperimentConfig::default();
        let mut take = |k: &str| single.remove(k);

        match take("source").as_deref() {
            None | Some("synth") => {
                let mut s = SynthSource::default();
                macro_rules! synth_key {
                    ($field:ident, $key:literal) => {
                        if let Some(v) = take($key) {
                            s.$field = parse_num($key, &v)?;
                        }
                    };
                }
                synth_key!(height, "synth_height");
                synth_key!(width, "synth_width");
                synth_key!(bands, "synth_bands");
                synth_key!(classes, "synth_classes");
                synth_key!(grid_rows, "synth_grid_rows");
                synth_key!(grid_cols, "synth_grid_cols");
                synth_key!(class_step, "synth_class_step");
                synth_key!(noise_sigma, "synth_noise");
                synth_key!(seed, "synth_seed");
                cfg.source = Source::Synth(s);
            }
            Some("files") => {
                let cube = take("cube")
                    .ok_or_else(|| Error::Config("source = files needs `cube`".into()))?;
                let labels = take("labels")
                    .ok_or_else(|| Error::Config("source = files needs `labels`".into()))?;
                cfg.source = Source::Files {
                    cube: cube.into(),
                    labels: labels.into(),
                };
            }
            Some(other) => return Err(Error::Config(format!("unknown source `{other}`"))),
        }

        if let Some(v) = take("split") {
            cfg.split = parse_split(&v)?;
        }
        if let Some(v) = take("master_seed") {
            cfg.master_seed = parse_num("master_seed", &v)?;
        }
        if let Some(v) = take("eta") {
            cfg.rlpa.eta = parse_num("eta", &v)?;
        }
        if let Some(v) = take("alpha") {
            cfg.rlpa.alpha = parse_num("alpha", &v)?;
        }
        if let Some(v) = take("rounds") {
            cfg.rlpa.rounds = parse_num("rounds", &v)?;
        }
        if let Some(v) = take("superpixels") {
            cfg.segmentation.fixed_count = Some(parse_num("superpixels", &v)?);
        }
        if let Some(v) = take("tbase") {
            cfg.segmentation.t_base = parse_num("tbase", &v)?;
        }
        if let Some(v) = take("log_sigma") {
            cfg.segmentation.log_sigma = parse_num("log_sigma", &v)?;
        }
        let mut slic = SlicParams::default();
        if let Some(v) = take("compactness") {
            slic.compactness = parse_num("compactness", &v)?;
        }
        if let Some(v) = take("slic_iters") {
            slic.max_iters = parse_num("slic_iters", &v)?;
        }
        cfg.segmentation.slic = slic;
        match take("graph").as_deref() {
            None | Some("superpixel") => {}
            Some(v) => match v.strip_prefix("knn:") {
                Some(k) => cfg.graph = GraphKind::Knn(parse_num("graph", k)?),
                None => return Err(Error::Config(format!("unknown graph `{v}`"))),
            },
        }
        if let Some(v) = take("elm_hidden") {
            cfg.elm.hidden = parse_num("elm_hidden", &v)?;
        }
        if let Some(v) = take("elm_lambda") {
            cfg.elm.lambda = parse_num("elm_lambda", &v)?;
        }
        if let Some(v) = take("map_dir") {
            cfg.map_dir = Some(v.into());
        }
        if let Some(k) = single.keys().next() {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }

        let list = |k: &str| lists.get(k).cloned().unwrap_or_default();
        if lists.contains_key("rho") {
            cfg.rhos = list("rho")
                .iter()
                .map(|v| parse_num("rho", v))
                .collect::<Result<_>>()?;
        }
        if lists.contains_key("seed") {
            cfg.seeds = list("seed")
                .iter()
                .map(|v| parse_num("seed", v))
                .collect::<Result<_>>()?;
        }
        if lists.contains_key("method") {
            cfg.methods = list("method")
                .iter()
                .map(|v| v.parse())
                .collect::<Result<_>>()?;
        }
        if lists.contains_key("classifier") {
            cfg.classifiers = list("classifier")
                .iter()
                .map(|v| v.parse())
                .collect::<Result<_>>()?;
        }
        cfg.sweep_eta = list("sweep_eta")
            .iter()
            .map(|v| parse_num("sweep_eta", v))
            .collect::<Result<_>>()?;
        cfg.sweep_alpha = list("sweep_alpha")
            .iter()
            .map(|v| parse_num("sweep_alpha", v))
            .collect::<Result<_>>()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rhos.is_empty()
            || self.seeds.is_empty()
            || self.methods.is_empty()
            || self.classifiers.is_empty()
        {
            return bad("rho, seed, method and classifier lists must be non-empty".into());
        }
        if let Some(r) = self.rhos.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("rho {r} not in [0, 1]"));
        }
        for (name, list) in [
            ("rho", &self.rhos),
            ("sweep_eta", &self.sweep_eta),
            ("sweep_alpha", &self.sweep_alpha),
        ] {
            let mut sorted = list.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            if sorted.len() != list.len() {
                return bad(format!("repeated `{name}` value"));
            }
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return bad("repeated `seed` value".into());
        }
        if let Some(v) = self
            .sweep_eta
            .iter()
            .chain(&self.sweep_alpha)
            .find(|v| !(**v > 0.0 && **v < 1.0))
        {
            return bad(format!("sweep value {v} outside (0, 1)"));
        }
        self.rlpa
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.elm.hidden == 0 || self.elm.lambda.is_nan() || self.elm.lambda <= 0.0 {
            return bad("elm_hidden must be >= 1 and elm_lambda > 0".into());
        }
        if let GraphKind::Knn(0) = self.graph {
            return bad("knn graph needs k >= 1".into());
        }
        if let Source::Synth(s) = &self.source {
            s.spec()
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.source {
            Source::Synth(s) => {
                kv("source", "synth".into());
                kv("synth_height", s.height.to_string());
                kv("synth_width", s.width.to_string());
                kv("synth_bands", s.bands.to_string());
                kv("synth_classes", s.classes.to_string());
                kv("synth_grid_rows", s.grid_rows.to_string());
                kv("synth_grid_cols", s.grid_cols.to_string());
                kv("synth_class_step", s.class_step.to_string());
                kv("synth_noise", s.noise_sigma.to_string());
                kv("synth_seed", s.seed.to_string());
            }
            Source::Files { cube, labels } => {
                kv("source", "files".into());
                kv("cube", cube.display().to_string());
                kv("labels", labels.display().to_string());
            }
        }
        kv(
            "split",
            match self.split {
                SplitScheme::PerClass(n) => format!("per_class:{n}"),
                SplitScheme::Fraction(p) => format!("fraction:{p}"),
            },
        );
        for r in &self.rhos {
            kv("rho", r.to_string());
        }
        for s in &self.seeds {
            kv("seed", s.to_string());
        }
        for m in &self.methods {
            kv("method", m.name().into());
        }
        for c in &self.classifiers {
            kv("classifier", c.name().into());
        }
        kv("master_seed", self.master_seed.to_string());
        kv("eta", self.rlpa.eta.to_string());
        kv("alpha", self.rlpa.alpha.to_string());
        kv("rounds", self.rlpa.rounds.to_string());
        if let Some(t) = self.segmentation.fixed_count {
            kv("superpixels", t.to_string());
        }
        kv("tbase", self.segmentation.t_base.to_string());
        kv("log_sigma", self.segmentation.log_sigma.to_string());
        kv(
            "compactness",
            self.segmentation.slic.compactness.to_string(),
        );
        kv("slic_iters", self.segmentation.slic.max_iters.to_string());
        kv(
            "graph",
            match self.graph {
                GraphKind::Superpixel => "superpixel".into(),
                GraphKind::Knn(k) => format!("knn:{k}"),
            },
        );
        kv("elm_hidden", self.elm.hidden.to_string());
        kv("elm_lambda", self.elm.lambda.to_string());
        for v in &self.sweep_eta {
            kv("sweep_eta", v.to_string());
        }
        for v in &self.sweep_alpha {
            kv("sweep_alpha", v.to_string());
        }
        if let Some(d) = &self.map_dir {
            kv("map_dir", d.display().to_string());
        }
        out
    }
}
