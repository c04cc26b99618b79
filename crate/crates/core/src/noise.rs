//! Symmetric label-noise injection.
//!
//! Each labeled row independently keeps its class with probability `1 - rho`
//! and otherwise moves to one of the other `C - 1` classes, chosen uniformly.

use rand::distr::Open01;
use rand::Rng;

use crate::datacube::LabelMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub rho: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(rho: f64, seed: u64) -> Result<Self> {
        let spec = Self { rho, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!(
                "noise level {} not in [0, 1]",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Flips labels of `clean` according to `spec`.
///
/// Rows are processed in index order from a single generator: one uniform
/// draw in (0, 1) decides the flip (`u <= rho`), and a flipped row takes one
/// more draw to pick the new class among the other `C - 1`.
pub fn apply_label_noise(clean: &LabelMatrix, spec: &NoiseSpec) -> Result<LabelMatrix> {
    spec.validate()?;
    if !clean.is_fully_labeled() {
        return Err(Error::InvalidLabel(
            "noise can only be applied to fully labeled rows".into(),
        ));
    }
    let classes = clean.classes();
    if classes < 2 && spec.rho > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cannot flip labels with {classes} class(es)"
        )));
    }
    let mut rng = seed::rng(spec.seed);
    let labels = (0..clean.rows())
        .map(|i| {
            let truth = clean.label(i);
            let u: f64 = rng.sample(Open01);
            if u <= spec.rho {
                // index into the classes with `truth` removed
                let r = rng.random_range(1..classes as u32);
                if r >= truth {
                    r + 1
                } else {
                    r
                }
            } else {
                truth
            }
        })
        .collect();
    LabelMatrix::new(classes, labels)
}

/// Number of rows whose label differs between `a` and `b`.
pub fn count_flips(a: &LabelMatrix, b: &LabelMatrix) -> Result<usize> {
    if a.rows() != b.rows() || a.classes() != b.classes() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.classes(),
            b.rows(),
            b.classes()
        )));
    }
    Ok((0..a.rows()).filter(|&i| a.label(i) != b.label(i)).count())
}
