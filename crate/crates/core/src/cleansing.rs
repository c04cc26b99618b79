//! Label propagation and randomized cleansing.
//!
//! Propagation iterates `F <- alpha * T * F + (1 - alpha) * Y` and its fixed
//! point solves `(I - alpha * T) F = (1 - alpha) Y`. Because `T` is block
//! diagonal the solve splits into one small dense system per block.
//!
//! Cleansing repeats: shuffle the samples, keep the labels of the first
//! `round(N * eta)`, blank the rest, propagate, take the per-row argmax. The
//! per-round labels are fused by majority vote.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::datacube::LabelMatrix;
use crate::error::{Error, Result};
use crate::graph::TransitionMatrix;
use crate::seed;

/// Soft label scores, `N x C`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    classes: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(rows: usize, classes: usize) -> Self {
        Self {
            rows,
            classes,
            values: vec![0.0; rows * classes],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::DimensionMismatch("ragged score rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            classes,
            values: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.classes..(i + 1) * self.classes]
    }

    pub fn max_abs_diff(&self, other: &ScoreMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_inputs(t: &TransitionMatrix, y: &LabelMatrix, alpha: f64) -> Result<()> {
    if t.n() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix has {} nodes, label matrix {} rows",
            t.n(),
            y.rows()
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} not in [0, 1)"
        )));
    }
    Ok(())
}

/// `alpha * T * F + (1 - alpha) * Y`.
pub fn propagation_step(
    t: &TransitionMatrix,
    y: &LabelMatrix,
    f: &ScoreMatrix,
    alpha: f64,
) -> ScoreMatrix {
    let c = y.classes();
    let mut out = ScoreMatrix::zeros(y.rows(), c);
    for block in t.blocks() {
        for (li, &i) in block.nodes.iter().enumerate() {
            let row = out.row_mut(i);
            for (lj, &j) in block.nodes.iter().enumerate() {
                let tij = block.weights[(li, lj)];
                if tij != 0.0 {
                    for (o, &fv) in row.iter_mut().zip(f.row(j)) {
                        *o += tij * fv;
                    }
                }
            }
            for (k, o) in row.iter_mut().enumerate() {
                *o = alpha * *o + (1.0 - alpha) * y.get(i, k);
            }
        }
    }
    out
}

/// Exact fixed point of the propagation, solved block by block.
pub fn propagate_closed(t: &TransitionMatrix, y: &LabelMatrix, alpha: f64) -> Result<ScoreMatrix> {
    check_inputs(t, y, alpha)?;
    let c = y.classes();
    let solved: Vec<Option<DMatrix<f64>>> = t
        .blocks()
        .par_iter()
        .map(|block| {
            let m = block.nodes.len();
            if block.nodes.iter().all(|&i| y.label(i) == 0) {
                return Ok(None);
            }
            let a = DMatrix::identity(m, m) - &block.weights * alpha;
            let rhs = DMatrix::from_fn(m, c, |li, k| (1.0 - alpha) * y.get(block.nodes[li], k));
            a.lu()
                .solve(&rhs)
                .map(Some)
                .ok_or_else(|| Error::Solver(format!("singular block {}", block.key)))
        })
        .collect::<Result<_>>()?;
    let mut f = ScoreMatrix::zeros(y.rows(), c);
    for (block, sol) in t.blocks().iter().zip(solved) {
        if let Some(x) = sol {
            for (li, &i) in block.nodes.iter().enumerate() {
                for (k, v) in f.row_mut(i).iter_mut().enumerate() {
                    *v = x[(li, k)];
                }
            }
        }
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite propagation result".into()));
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct IterativeResult {
    pub scores: ScoreMatrix,
    pub iterations: usize,
    /// False when `max_iters` ran out before the change fell to `tol`.
    pub converged: bool,
}

/// Iterates the propagation from `F = Y` until the largest entry change is
/// at most `tol`, or `max_iters` steps.
pub fn propagate_iterative(
    t: &TransitionMatrix,
    y: &LabelMatrix,
    alpha: f64,
    tol: f64,
    max_iters: usize,
) -> Result<IterativeResult> {
    check_inputs(t, y, alpha)?;
    let mut f = ScoreMatrix {
        rows: y.rows(),
        classes: y.classes(),
        values: y.to_dense().concat(),
    };
    for it in 1..=max_iters {
        let next = propagation_step(t, y, &f, alpha);
        let change = next.max_abs_diff(&f);
        f = next;
        if change <= tol {
            return Ok(IterativeResult {
                scores: f,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(IterativeResult {
        scores: f,
        iterations: max_iters,
        converged: false,
    })
}

/// Per-row argmax as class ids `1..=C`.
///
/// A row of zeros (the sample's block had no labeled member) takes its
/// fallback label, or class 1 without one. Ties go to the fallback label if
/// it is among the maxima, otherwise to the lowest class.
pub fn assign_labels(f: &ScoreMatrix, fallback: Option<&[u32]>) -> Vec<u32> {
    (0..f.rows())
        .map(|i| {
            let row = f.row(i);
            let fb = fallback.map(|fb| fb[i]);
            if row.iter().all(|&v| v == 0.0) {
                return fb.unwrap_or(1);
            }
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if let Some(l) = fb {
                if l >= 1 && (l as usize) <= row.len() && row[l as usize - 1] == best {
                    return l;
                }
            }
            row.iter().position(|&v| v == best).unwrap() as u32 + 1
        })
        .collect()
}

/// Most frequent label; ties go to `original` if it is one of the modes,
/// otherwise to the lowest label.
pub fn majority_vote(votes: &[u32], original: u32) -> u32 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in votes {
        *counts.entry(v).or_default() += 1;
    }
    pick_mode(counts.iter().map(|(&l, &c)| (l, c)), original)
}

fn pick_mode(counts: impl Iterator<Item = (u32, usize)>, original: u32) -> u32 {
    let mut best = 0usize;
    let mut label = original;
    let mut original_count = 0;
    for (l, c) in counts {
        if l == original {
            original_count = c;
        }
        if c > best {
            best = c;
            label = l;
        }
    }
    if best > 0 && original_count == best {
        original
    } else {
        label
    }
}

/// What an all-zero score row becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    /// The sample's own noisy label.
    #[default]
    KeepOriginal,
    /// Class 1.
    LowestClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlpaConfig {
    /// Fraction of samples kept labeled in each round.
    pub eta: f64,
    pub alpha: f64,
    pub rounds: usize,
    pub seed: u64,
    pub fallback: Fallback,
}

impl Default for RlpaConfig {
    fn default() -> Self {
        Self {
            eta: 0.7,
            alpha: 0.9,
            rounds: 100,
            seed: 0,
            fallback: Fallback::KeepOriginal,
        }
    }
}

impl RlpaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eta {} not in (0, 1]",
                self.eta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} not in (0, 1)",
                self.alpha
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of samples kept labeled per round.
    pub fn labeled_count(&self, n: usize) -> usize {
        (n as f64 * self.eta).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundDiagnostic {
    /// 1-based round number.
    pub round: usize,
    /// Samples whose label from this round alone disagrees with the reference.
    pub round_noisy: usize,
    /// Samples whose majority label over rounds `1..=round` disagrees.
    pub cumulative_noisy: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Noisy labels before cleansing (needs a reference).
    pub initial_noisy: Option<usize>,
    /// Per-round counts (needs a reference).
    pub rounds: Vec<RoundDiagnostic>,
    /// Total sample-rounds that fell back because no label reached them.
    pub unreachable: usize,
}

impl Diagnostics {
    /// CSV with header `round,cumulative_noisy,round_noisy`; round 0 is the
    /// initial count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,cumulative_noisy,round_noisy\n");
        if let Some(init) = self.initial_noisy {
            out.push_str(&format!("0,{init},{init}\n"));
        }
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{}\n",
                r.round, r.cumulative_noisy, r.round_noisy
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Cleansed {
    pub labels: Vec<u32>,
    pub diagnostics: Diagnostics,
}

struct Round {
    labels: Vec<u32>,
    unreachable: usize,
}

fn run_round(
    t: &TransitionMatrix,
    noisy: &LabelMatrix,
    cfg: &RlpaConfig,
    round: usize,
    fallback: Option<&[u32]>,
) -> Result<Round> {
    let n = noisy.rows();
    let mut rng = seed::stream_rng(cfg.seed, round as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let l = cfg.labeled_count(n);
    let seeds = noisy.mask(&order[..l]);
    let f = propagate_closed(t, &seeds, cfg.alpha)?;
    let unreachable = (0..n)
        .filter(|&i| f.row(i).iter().all(|&v| v == 0.0))
        .count();
    Ok(Round {
        labels: assign_labels(&f, fallback),
        unreachable,
    })
}

/// Randomized propagation with majority-vote fusion.
///
/// `noisy` must label every sample. When `reference` (the clean labels) is
/// given the diagnostics record how many samples disagree with it after each
/// round. Rounds run in parallel; round `s` draws from ChaCha stream `s` of
/// `cfg.seed`, so the result does not depend on the thread count.
pub fn rlpa_cleanse(
    t: &TransitionMatrix,
    noisy: &LabelMatrix,
    cfg: &RlpaConfig,
    reference: Option<&LabelMatrix>,
) -> Result<Cleansed> {
    cfg.validate()?;
    let n = noisy.rows();
    if t.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix has {} nodes, label matrix {n} rows",
            t.n()
        )));
    }
    if !noisy.is_fully_labeled() {
        return Err(Error::InvalidLabel(
            "every sample needs a (possibly noisy) label".into(),
        ));
    }
    if let Some(r) = reference {
        if r.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "reference has {} rows, expected {n}",
                r.rows()
            )));
        }
    }
    if cfg.labeled_count(n) == 0 {
        return Err(Error::InvalidArgument(format!(
            "eta {} labels no sample out of {n}",
            cfg.eta
        )));
    }
    let original = noisy.argmax_labels();
    let fallback = match cfg.fallback {
        Fallback::KeepOriginal => Some(&original[..]),
        Fallback::LowestClass => None,
    };
    let rounds: Vec<Round> = (1..=cfg.rounds)
        .into_par_iter()
        .map(|s| run_round(t, noisy, cfg, s, fallback))
        .collect::<Result<_>>()?;

    let c = noisy.classes();
    let mut counts = vec![0usize; n * (c + 1)];
    let mut diagnostics = Diagnostics {
        initial_noisy: reference.map(|r| (0..n).filter(|&i| r.label(i) != original[i]).count()),
        ..Default::default()
    };
    let mut fused = original.clone();
    for (s, round) in rounds.iter().enumerate() {
        diagnostics.unreachable += round.unreachable;
        for (i, &l) in round.labels.iter().enumerate() {
            counts[i * (c + 1) + l as usize] += 1;
            let row = &counts[i * (c + 1)..(i + 1) * (c + 1)];
            fused[i] = pick_mode(
                row.iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(l, &k)| (l as u32, k)),
                original[i],
            );
        }
        if let Some(r) = reference {
            let wrong = |labels: &[u32]| (0..n).filter(|&i| labels[i] != r.label(i)).count();
            diagnostics.rounds.push(RoundDiagnostic {
                round: s + 1,
                round_noisy: wrong(&round.labels),
                cumulative_noisy: wrong(&fused),
            });
        }
    }
    Ok(Cleansed {
        labels: fused,
        diagnostics,
    })
}
