//! 1-nearest-neighbour and extreme learning machine classifiers.
//!
//! Both take spectra as [`Spectra`] rows and labels as class ids `1..=C`.
//! [`Classifier`] wraps either one behind per-band standardization, which is
//! how the experiment runner uses them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::datacube::Spectra;
use crate::error::{Error, Result};
use crate::seed;

fn check_training(x: &Spectra, y: &[u32]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} training spectra, {} labels",
            x.len(),
            y.len()
        )));
    }
    if y.contains(&0) {
        return Err(Error::InvalidLabel("training label 0".into()));
    }
    Ok(())
}

fn check_dim(expected: usize, x: &Spectra) -> Result<()> {
    if x.dim() != expected && !x.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {expected} bands, query has {}",
            x.dim()
        )));
    }
    Ok(())
}

/// Per-band affine map to zero mean and unit variance, fitted on training
/// spectra. Constant bands are only centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Spectra) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let n = x.len() as f64;
        let d = x.dim();
        let mut mean = vec![0.0; d];
        for row in x.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, x: &Spectra) -> Result<Spectra> {
        check_dim(self.mean.len(), x)?;
        let data = x
            .rows()
            .flat_map(|row| {
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) * s)
            })
            .collect();
        Spectra::new(self.mean.len(), data)
    }
}

#[derive(Debug, Clone)]
pub struct NnModel {
    x: Spectra,
    y: Vec<u32>,
}

pub fn nn_fit(x: &Spectra, y: &[u32]) -> Result<NnModel> {
    check_training(x, y)?;
    Ok(NnModel {
        x: x.clone(),
        y: y.to_vec(),
    })
}

/// Label of the closest training spectrum (Euclidean); the lower training
/// index wins ties.
pub fn nn_predict(m: &NnModel, x: &Spectra) -> Result<Vec<u32>> {
    check_dim(m.x.dim(), x)?;
    Ok((0..x.len())
        .into_par_iter()
        .map(|q| {
            let query = x.row(q);
            let mut best = f64::INFINITY;
            let mut label = m.y[0];
            for (row, &l) in m.x.rows().zip(&m.y) {
                let d: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best {
                    best = d;
                    label = l;
                }
            }
            label
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElmParams {
    pub hidden: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ElmParams {
    fn default() -> Self {
        Self {
            hidden: 500,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

/// Single-hidden-layer network with a random sigmoid layer and ridge-fitted
/// output weights.
#[derive(Debug, Clone)]
pub struct ElmModel {
    /// `H x D`.
    input_weights: DMatrix<f64>,
    biases: DVector<f64>,
    /// `H x C`.
    output_weights: DMatrix<f64>,
    lambda: f64,
    seed: u64,
}

impl ElmModel {
    pub fn hidden(&self) -> usize {
        self.biases.len()
    }

    pub fn classes(&self) -> usize {
        self.output_weights.ncols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.output_weights
    }

    fn activations(&self, x: &Spectra) -> DMatrix<f64> {
        let xm = DMatrix::from_row_slice(x.len(), x.dim(), x.as_slice());
        let mut g = xm * self.input_weights.transpose();
        for mut row in g.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.biases.iter()) {
                *v = 1.0 / (1.0 + (-(*v + b)).exp());
            }
        }
        g
    }
}

pub fn elm_fit(x: &Spectra, y: &[u32], params: &ElmParams) -> Result<ElmModel> {
    check_training(x, y)?;
    if params.hidden == 0 {
        return Err(Error::InvalidArgument(
            "hidden layer size must be >= 1".into(),
        ));
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda {} must be positive",
            params.lambda
        )));
    }
    let (h, d) = (params.hidden, x.dim());
    let classes = *y.iter().max().unwrap() as usize;
    let mut rng = seed::rng(params.seed);
    let input_weights = DMatrix::from_fn(h, d, |_, _| rng.random_range(-1.0..1.0));
    let biases = DVector::from_fn(h, |_, _| rng.random_range(-1.0..1.0));
    let mut model = ElmModel {
        input_weights,
        biases,
        output_weights: DMatrix::zeros(h, classes),
        lambda: params.lambda,
        seed: params.seed,
    };
    let g = model.activations(x);
    let targets = DMatrix::from_fn(y.len(), classes, |i, k| f64::from(y[i] as usize == k + 1));
    let gram = g.transpose() * &g + DMatrix::identity(h, h) * params.lambda;
    let rhs = g.transpose() * targets;
    let beta = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Solver("ridge system not positive definite".into()))?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite output weights".into()));
    }
    model.output_weights = beta;
    Ok(model)
}

/// Argmax of the network output per row; ties go to the lower class.
pub fn elm_predict(m: &ElmModel, x: &Spectra) -> Result<Vec<u32>> {
    check_dim(m.input_weights.ncols(), x)?;
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let out = m.activations(x) * &m.output_weights;
    Ok(out
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best as u32 + 1
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Nn,
    Elm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Nn => "nn",
            ClassifierKind::Elm => "elm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(ClassifierKind::Nn),
            "elm" => Ok(ClassifierKind::Elm),
            _ => Err(Error::Config(format!("unknown classifier `{s}`"))),
        }
    }
}

/// A fitted classifier. Other model types can be added by implementing
/// this trait.
pub trait Model: Send + Sync {
    fn predict(&self, x: &Spectra) -> Result<Vec<u32>>;
}

impl Model for NnModel {
    fn predict(&self, x: &Spectra) -> Result<Vec<u32>> {
        nn_predict(self, x)
    }
}

impl Model for ElmModel {
    fn predict(&self, x: &Spectra) -> Result<Vec<u32>> {
        elm_predict(self, x)
    }
}

/// A model behind a [`Standardizer`] fitted on the same training data.
pub struct Classifier {
    standardizer: Standardizer,
    model: Box<dyn Model>,
}

impl Classifier {
    pub fn fit(kind: ClassifierKind, x: &Spectra, y: &[u32], elm: &ElmParams) -> Result<Self> {
        check_training(x, y)?;
        let standardizer = Standardizer::fit(x)?;
        let xs = standardizer.transform(x)?;
        let model: Box<dyn Model> = match kind {
            ClassifierKind::Nn => Box::new(nn_fit(&xs, y)?),
            ClassifierKind::Elm => Box::new(elm_fit(&xs, y, elm)?),
        };
        Ok(Self {
            standardizer,
            model,
        })
    }

    pub fn predict(&self, x: &Spectra) -> Result<Vec<u32>> {
        self.model.predict(&self.standardizer.transform(x)?)
    }
}
