//! Spectral-spatial affinity graphs and transition matrices.
//!
//! Nodes are training samples. Edges only join samples that fall in the same
//! superpixel, so both the affinity `W` and the transition matrix `T` are
//! block diagonal after grouping nodes by segment. Each block is stored
//! densely in node-local coordinates.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::datacube::{SampleSet, Spectra};
use crate::error::{Error, Result};
use crate::segmentation::SuperpixelMap;

/// Lower bound on the per-segment bandwidth.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// One diagonal block: the global node ids it covers (ascending) and the
/// dense weights between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Segment id for superpixel blocks, component index otherwise.
    pub key: usize,
    pub nodes: Vec<usize>,
    pub weights: DMatrix<f64>,
}

/// Square matrix stored as disjoint dense diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    n: usize,
    blocks: Vec<Block>,
    /// (block, local index) of every node
    location: Vec<(usize, usize)>,
}

impl BlockMatrix {
    fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut location = vec![(usize::MAX, usize::MAX); n];
        for (b, block) in blocks.iter().enumerate() {
            let m = block.nodes.len();
            if m == 0 || block.weights.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!(
                    "block {b} has {m} nodes and a {:?} weight matrix",
                    block.weights.shape()
                )));
            }
            for (local, &node) in block.nodes.iter().enumerate() {
                if node >= n {
                    return Err(Error::IndexOutOfBounds {
                        index: node,
                        len: n,
                    });
                }
                if location[node].0 != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "node {node} appears in more than one block"
                    )));
                }
                location[node] = (b, local);
            }
        }
        if let Some(missing) = location.iter().position(|l| l.0 == usize::MAX) {
            return Err(Error::InvalidArgument(format!(
                "node {missing} is not in any block"
            )));
        }
        Ok(Self {
            n,
            blocks,
            location,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Block index containing `node`.
    pub fn block_of(&self, node: usize) -> usize {
        self.location[node].0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (bi, li) = self.location[i];
        let (bj, lj) = self.location[j];
        if bi == bj {
            self.blocks[bi].weights[(li, lj)]
        } else {
            0.0
        }
    }

    /// Non-zero entries as global `(row, col, value)`, sorted by `(col, row)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for block in &self.blocks {
            for (lj, &j) in block.nodes.iter().enumerate() {
                for (li, &i) in block.nodes.iter().enumerate() {
                    let v = block.weights[(li, lj)];
                    if v != 0.0 {
                        out.push((i, j, v));
                    }
                }
            }
        }
        out.sort_by_key(|&(i, j, _)| (j, i));
        out
    }

    pub fn nnz(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.weights.iter().filter(|&&v| v != 0.0).count())
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for block in &self.blocks {
            for (li, &i) in block.nodes.iter().enumerate() {
                for (lj, &j) in block.nodes.iter().enumerate() {
                    out[i][j] = block.weights[(li, lj)];
                }
            }
        }
        out
    }
}

/// Symmetric, non-negative affinity with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity(BlockMatrix);

impl SparseAffinity {
    /// Validates symmetry, unit diagonal and weights in `[0, 1]`.
    pub fn from_blocks(n: usize, blocks: Vec<Block>) -> Result<Self> {
        for block in &blocks {
            let w = &block.weights;
            for i in 0..w.nrows() {
                if w[(i, i)] != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "diagonal entry of node {} is {}",
                        block.nodes[i],
                        w[(i, i)]
                    )));
                }
                for j in 0..w.ncols() {
                    let v = w[(i, j)];
                    if !(0.0..=1.0).contains(&v) || v != w[(j, i)] {
                        return Err(Error::InvalidArgument(format!(
                            "weight ({}, {}) = {v} breaks symmetry or [0, 1] bounds",
                            block.nodes[i], block.nodes[j]
                        )));
                    }
                }
            }
        }
        BlockMatrix::new(n, blocks).map(Self)
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

/// Column-stochastic, block-diagonal transition matrix; `T_ij` is the
/// probability of moving from node `j` to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(BlockMatrix);

impl TransitionMatrix {
    /// Singleton blocks with `T_jj = 1`.
    pub fn identity(n: usize) -> Self {
        let blocks = (0..n)
            .map(|i| Block {
                key: i,
                nodes: vec![i],
                weights: DMatrix::from_element(1, 1, 1.0),
            })
            .collect();
        Self(BlockMatrix::new(n, blocks).expect("identity blocks are valid"))
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.0.blocks
    }

    /// Largest `|sum_i T_ij - 1|` over all columns.
    pub fn max_column_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for block in &self.0.blocks {
            for j in 0..block.nodes.len() {
                let s: f64 = block.weights.column(j).iter().sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Text form: `"n nnz"` then one `"row col value"` line per non-zero,
    /// sorted by `(col, row)`, values with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let triplets = self.0.triplets();
        writeln!(w, "{} {}", self.0.n, triplets.len())?;
        for (i, j, v) in triplets {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }

    /// Parses [`TransitionMatrix::write_text`] output. Blocks are rebuilt as
    /// connected components of the sparsity pattern.
    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedHeader("empty transition file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::MalformedHeader(header.clone()))
            })
            .collect::<Result<_>>()?;
        let [n, nnz] = dims[..] else {
            return Err(Error::MalformedHeader(header));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad triplet {line:?}")));
            }
            let parse_idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad index {s:?}")))
            };
            let (i, j) = (parse_idx(parts[0])?, parse_idx(parts[1])?);
            let v: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {:?}", parts[2])))?;
            if i >= n || j >= n {
                return Err(Error::IndexOutOfBounds {
                    index: i.max(j),
                    len: n,
                });
            }
            triplets.push((i, j, v));
        }
        if triplets.len() != nnz {
            return Err(Error::SizeMismatch {
                expected: nnz,
                found: triplets.len(),
            });
        }
        let groups = connected_groups(n, triplets.iter().map(|&(i, j, _)| (i, j)));
        let mut location = vec![(0usize, 0usize); n];
        for (g, nodes) in groups.iter().enumerate() {
            for (l, &node) in nodes.iter().enumerate() {
                location[node] = (g, l);
            }
        }
        let mut blocks: Vec<Block> = groups
            .into_iter()
            .enumerate()
            .map(|(g, nodes)| {
                let m = nodes.len();
                Block {
                    key: g,
                    nodes,
                    weights: DMatrix::zeros(m, m),
                }
            })
            .collect();
        for (i, j, v) in triplets {
            let (b, li) = location[i];
            let (_, lj) = location[j];
            blocks[b].weights[(li, lj)] = v;
        }
        BlockMatrix::new(n, blocks).map(Self)
    }
}

/// Connected components over undirected edges; each group ascending, groups
/// ordered by their smallest node.
fn connected_groups(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Euclidean distance between two spectra.
pub fn spectral_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "spectra of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Region bandwidth: square root of the sum of squared distances over all
/// ordered pairs (including self-pairs) divided by the number of spectra,
/// floored at [`SIGMA_FLOOR`].
pub fn region_sigma<'a>(spectra: impl IntoIterator<Item = &'a [f64]>) -> f64 {
    let spectra: Vec<&[f64]> = spectra.into_iter().collect();
    let mut sum = 0.0;
    for p in &spectra {
        for q in &spectra {
            sum += squared_distance(p, q);
        }
    }
    (sum / spectra.len().max(1) as f64).sqrt().max(SIGMA_FLOOR)
}

fn gaussian_weight(d: f64, sigma: f64) -> f64 {
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Superpixel-constrained affinity over the samples: Gaussian weights with a
/// per-segment bandwidth between samples of the same segment, nothing across
/// segments. Blocks are keyed and ordered by segment id.
pub fn build_affinity(samples: &SampleSet, segmap: &SuperpixelMap) -> Result<SparseAffinity> {
    let pixels = segmap.segments().len();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &pixel) in samples.indices.iter().enumerate() {
        if pixel >= pixels {
            return Err(Error::IndexOutOfBounds {
                index: pixel,
                len: pixels,
            });
        }
        groups.entry(segmap.segment(pixel)).or_default().push(node);
    }
    let spectra = &samples.spectra;
    let blocks: Vec<Block> = groups
        .into_par_iter()
        .map(|(segment, nodes)| {
            let sigma = region_sigma(nodes.iter().map(|&i| spectra.row(i)));
            let m = nodes.len();
            let weights = DMatrix::from_fn(m, m, |a, b| {
                let d = squared_distance(spectra.row(nodes[a]), spectra.row(nodes[b])).sqrt();
                gaussian_weight(d, sigma)
            });
            Block {
                key: segment,
                nodes,
                weights,
            }
        })
        .collect();
    BlockMatrix::new(samples.len(), blocks).map(SparseAffinity)
}

/// Spectral-only k-nearest-neighbour affinity (no spatial constraint).
///
/// Each sample links to its `k` nearest samples (ties to the lower index),
/// the graph is symmetrised by union, and weights are Gaussian with `sigma`
/// equal to the mean k-NN distance. Blocks are the connected components.
pub fn build_affinity_spectral_only(spectra: &Spectra, k: usize) -> Result<SparseAffinity> {
    let n = spectra.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be in 1..{n}")));
    }
    let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, squared_distance(spectra.row(i), spectra.row(j)).sqrt()))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d.truncate(k);
            d
        })
        .collect();
    let total: f64 = neighbours.iter().flatten().map(|&(_, d)| d).sum();
    let sigma = (total / (n * k) as f64).max(SIGMA_FLOOR);
    let edges: Vec<(usize, usize)> = neighbours
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&(j, _)| (i, j)))
        .collect();
    let groups = connected_groups(n, edges.iter().copied());
    let mut location = vec![(0usize, 0usize); n];
    for (g, nodes) in groups.iter().enumerate() {
        for (l, &node) in nodes.iter().enumerate() {
            location[node] = (g, l);
        }
    }
    let mut blocks: Vec<Block> = groups
        .into_iter()
        .enumerate()
        .map(|(g, nodes)| {
            let m = nodes.len();
            Block {
                key: g,
                nodes,
                weights: DMatrix::identity(m, m),
            }
        })
        .collect();
    for &(i, j) in &edges {
        let (b, li) = location[i];
        let (_, lj) = location[j];
        let d = squared_distance(spectra.row(i), spectra.row(j)).sqrt();
        let v = gaussian_weight(d, sigma);
        blocks[b].weights[(li, lj)] = v;
        blocks[b].weights[(lj, li)] = v;
    }
    BlockMatrix::new(n, blocks).map(SparseAffinity)
}

/// Normalises every column of `w` to sum to one.
pub fn build_transition(w: &SparseAffinity) -> TransitionMatrix {
    let mut inner = w.0.clone();
    for block in &mut inner.blocks {
        for mut col in block.weights.column_iter_mut() {
            let mut s = 0.0;
            for v in col.iter() {
                s += v;
            }
            for v in col.iter_mut() {
                *v /= s;
            }
        }
    }
    TransitionMatrix(inner)
}
