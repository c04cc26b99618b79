//! Brute-force reference computations.
//!
//! Everything here is written in the most literal dense form available so it
//! can be compared against the sparse, block-wise production code in `rlpa`.
//! This crate intentionally does not depend on `rlpa`.

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeMismatch(pub String);

impl std::fmt::Display for ShapeMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "shape mismatch: {}", self.0)
    }
}

impl std::error::Error for ShapeMismatch {}

/// Runs `F <- alpha * T * F + (1 - alpha) * Y` exactly `iters` times from `F = Y`
/// with naive triple loops.
pub fn dense_fixed_point(
    t: &DenseMatrix,
    y: &DenseMatrix,
    alpha: f64,
    iters: usize,
) -> Result<DenseMatrix, ShapeMismatch> {
    if t.rows != t.cols {
        return Err(ShapeMismatch(format!("T is {}x{}", t.rows, t.cols)));
    }
    if y.rows != t.rows {
        return Err(ShapeMismatch(format!(
            "T has {} rows, Y has {}",
            t.rows, y.rows
        )));
    }
    if iters == 0 {
        return Err(ShapeMismatch("iters must be >= 1".into()));
    }
    let n = t.rows;
    let c = y.cols;
    let mut f = y.clone();
    let mut next = DenseMatrix::zeros(n, c);
    for _ in 0..iters {
        for i in 0..n {
            for k in 0..c {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += t.get(i, j) * f.get(j, k);
                }
                next.set(i, k, alpha * acc + (1.0 - alpha) * y.get(i, k));
            }
        }
        std::mem::swap(&mut f, &mut next);
    }
    Ok(f)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Dense affinity over every sample pair: Gaussian weight for same-segment
/// pairs with the segment's sigma, zero otherwise.
///
/// Sigma is recomputed per row from scratch by scanning every sample, which
/// is wasteful but keeps the computation free of any grouping structure.
pub fn brute_affinity(spectra: &[Vec<f64>], segment_of: &[usize]) -> DenseMatrix {
    assert_eq!(spectra.len(), segment_of.len());
    let n = spectra.len();
    let mut w = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let seg = segment_of[i];
        let mut sum = 0.0;
        let mut members = 0usize;
        for p in 0..n {
            if segment_of[p] != seg {
                continue;
            }
            members += 1;
            for q in 0..n {
                if segment_of[q] == seg {
                    sum += squared_distance(&spectra[p], &spectra[q]);
                }
            }
        }
        let sigma = (sum / members as f64).sqrt().max(1e-12);
        for j in 0..n {
            if segment_of[j] != seg {
                continue;
            }
            let d = squared_distance(&spectra[i], &spectra[j]).sqrt();
            w.set(i, j, (-(d * d) / (2.0 * sigma * sigma)).exp());
        }
    }
    w
}

/// Dense column normalisation `T_ij = W_ij / sum_k W_kj`.
pub fn column_normalize(w: &DenseMatrix) -> DenseMatrix {
    let mut t = w.clone();
    for j in 0..w.cols {
        let mut s = 0.0;
        for i in 0..w.rows {
            s += w.get(i, j);
        }
        for i in 0..w.rows {
            t.set(i, j, w.get(i, j) / s);
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct FlipStats {
    pub trials: usize,
    /// Fraction of trials whose label changed.
    pub rho_hat: f64,
    /// `per_target[k - 1]` is the fraction of trials whose label moved to
    /// `(true + k) mod C`, for `k` in `1..C`.
    pub per_target: Vec<f64>,
}

/// Literal simulation of the noisy-label generator: draw `u` in (0,1), flip
/// when `u <= rho`, and take the first entry of a random permutation of the
/// classes after deleting the true class. The true class is drawn uniformly
/// per trial.
pub fn mc_flip_stats(classes: usize, rho: f64, trials: usize, seed: u64) -> FlipStats {
    assert!(trials >= 1);
    assert!(classes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; classes - 1];
    let mut flips = 0usize;
    for _ in 0..trials {
        let truth = rng.random_range(0..classes);
        let u: f64 = rng.sample(Open01);
        if u <= rho {
            let mut perm: Vec<usize> = (0..classes).collect();
            perm.shuffle(&mut rng);
            perm.retain(|&c| c != truth);
            let target = perm[0];
            let offset = (target + classes - truth) % classes;
            counts[offset - 1] += 1;
            flips += 1;
        }
    }
    FlipStats {
        trials,
        rho_hat: flips as f64 / trials as f64,
        per_target: counts.iter().map(|&c| c as f64 / trials as f64).collect(),
    }
}
