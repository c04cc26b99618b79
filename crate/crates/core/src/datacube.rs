//! Cubes, label grids, label matrices and sample splits.
//!
//! Pixels are addressed by a flat row-major index `y * width + x` everywhere
//! in the crate. Label value `0` means background / unlabeled; classes are
//! numbered `1..=C`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

/// On-disk cube encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFormat {
    /// ASCII header `"H W D\n"` followed by `H*W*D` little-endian `f32`,
    /// band-interleaved-by-pixel.
    RawF32,
    /// Header line `H,W,D`, then one line of `D` comma-separated values per
    /// pixel in row-major pixel order.
    Csv,
}

impl CubeFormat {
    /// Guesses the format from a file extension (`.csv` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CubeFormat::Csv,
            _ => CubeFormat::RawF32,
        }
    }
}

/// `H x W x D` reflectance cube stored band-interleaved-by-pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f32>,
}

impl SpectralCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::MalformedHeader(format!(
                "dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        let expected = height * width * bands;
        if data.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> &[f32] {
        self.spectrum(y * self.width + x)
    }

    pub fn spectrum(&self, flat: usize) -> &[f32] {
        &self.data[flat * self.bands..(flat + 1) * self.bands]
    }

    /// Spectra of the given pixels, in the given order.
    pub fn samples(&self, indices: &[usize]) -> Result<SampleSet> {
        let n = self.pixel_count();
        let mut data = Vec::with_capacity(indices.len() * self.bands);
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfBounds { index: i, len: n });
            }
            data.extend(self.spectrum(i).iter().map(|&v| f64::from(v)));
        }
        Ok(SampleSet {
            indices: indices.to_vec(),
            spectra: Spectra {
                dim: self.bands,
                data,
            },
        })
    }

    /// Every pixel as a row of spectra.
    pub fn all_spectra(&self) -> Spectra {
        Spectra {
            dim: self.bands,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.height, self.width, self.bands)?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_raw<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = Vec::new();
        r.read_until(b'\n', &mut header)
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        if header.last() != Some(&b'\n') {
            return Err(Error::MalformedHeader("missing header line".into()));
        }
        let header = std::str::from_utf8(&header)
            .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
        let (h, w, d) = parse_dims(header)?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        let expected = h * w * d;
        if payload.len() != expected * 4 {
            return Err(Error::SizeMismatch {
                expected,
                found: payload.len() / 4,
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(h, w, d, data)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},{},{}", self.height, self.width, self.bands)?;
        for p in 0..self.pixel_count() {
            let row: Vec<String> = self.spectrum(p).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let r = BufReader::new(r);
        let mut lines = r.lines().filter(|l| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedHeader("empty file".into()))?
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        let (h, w, d) = parse_dims(&header)?;
        let mut data = Vec::with_capacity(h * w * d);
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let before = data.len();
            for tok in line.split(',') {
                let v: f32 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value {tok:?}")))?;
                data.push(v);
            }
            if data.len() - before != d {
                return Err(Error::SizeMismatch {
                    expected: d,
                    found: data.len() - before,
                });
            }
        }
        Self::new(h, w, d, data)
    }
}

fn parse_dims(header: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = header
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(Error::MalformedHeader(format!(
            "expected 3 dimensions, got {:?}",
            header.trim()
        )));
    }
    let mut dims = [0usize; 3];
    for (slot, p) in dims.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad dimension {p:?}")))?;
        if *slot == 0 {
            return Err(Error::MalformedHeader("dimensions must be positive".into()));
        }
    }
    Ok((dims[0], dims[1], dims[2]))
}

pub fn load_cube(path: impl AsRef<Path>, format: CubeFormat) -> Result<SpectralCube> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        CubeFormat::RawF32 => SpectralCube::read_raw(file),
        CubeFormat::Csv => SpectralCube::read_csv(file),
    }
}

pub fn save_cube(path: impl AsRef<Path>, cube: &SpectralCube, format: CubeFormat) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        CubeFormat::RawF32 => cube.write_raw(&mut w),
        CubeFormat::Csv => cube.write_csv(&mut w),
    }
    .and_then(|_| w.flush())
    .map_err(|e| Error::io(path, e))
}

/// Row-major matrix of spectra, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectra {
    dim: usize,
    data: Vec<f64>,
}

impl Spectra {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::DimensionMismatch("no rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} values, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Spectra {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Spectra {
            dim: self.dim,
            data,
        }
    }

    /// Reads one comma-separated spectrum per line.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for line in BufReader::new(r).lines() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad value {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let s = Self::from_rows(&rows)?;
        if let Some(pos) = s.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.rows() {
            let s: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", s.join(","))?;
        }
        Ok(())
    }
}

/// Spectra together with the flat pixel indices they were taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub indices: Vec<usize>,
    pub spectra: Spectra,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-pixel class ids; `0` is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    classes: u32,
}

impl LabelField {
    /// Builds a field; the class count is the largest label present.
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for a {height}x{width} grid",
                labels.len()
            )));
        }
        let classes = labels.iter().copied().max().unwrap_or(0);
        Ok(Self {
            height,
            width,
            labels,
            classes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    /// False for an all-background field (`C = 0`).
    pub fn has_supervised_classes(&self) -> bool {
        self.classes > 0
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, flat: usize) -> u32 {
        self.labels[flat]
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] > 0)
            .collect()
    }

    /// Copy of `self` with the given pixels relabeled.
    pub fn with_labels(&self, indices: &[usize], labels: &[u32]) -> Result<Self> {
        if indices.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} labels",
                indices.len(),
                labels.len()
            )));
        }
        let mut out = self.labels.clone();
        for (&i, &l) in indices.iter().zip(labels) {
            if i >= out.len() {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    len: out.len(),
                });
            }
            out[i] = l;
        }
        let mut f = Self::new(self.height, self.width, out)?;
        f.classes = f.classes.max(self.classes);
        Ok(f)
    }

    /// Field keeping only the given pixels' labels; everything else becomes
    /// background.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut out = vec![0; self.labels.len()];
        for &i in indices {
            if i >= out.len() {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    len: out.len(),
                });
            }
            out[i] = self.labels[i];
        }
        let mut f = Self::new(self.height, self.width, out)?;
        f.classes = self.classes;
        Ok(f)
    }

    pub fn check_matches(&self, cube: &SpectralCube) -> Result<()> {
        if self.height != cube.height() || self.width != cube.width() {
            return Err(Error::DimensionMismatch(format!(
                "labels are {}x{}, cube is {}x{}",
                self.height,
                self.width,
                cube.height(),
                cube.width()
            )));
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_grid(w, self.width, self.labels.iter().map(|&l| l as usize))
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let (height, width, values) = read_grid(r)?;
        let mut labels = Vec::with_capacity(values.len());
        for v in values {
            if v < 0 {
                return Err(Error::InvalidLabel(format!("negative label {v}")));
            }
            labels.push(
                u32::try_from(v)
                    .map_err(|_| Error::InvalidLabel(format!("label {v} too large")))?,
            );
        }
        Self::new(height, width, labels)
    }
}

/// Writes rows of space-separated integers.
pub(crate) fn write_grid<W: Write>(
    mut w: W,
    width: usize,
    values: impl Iterator<Item = usize>,
) -> std::io::Result<()> {
    let mut line = String::new();
    for (i, v) in values.enumerate() {
        if i % width != 0 {
            line.push(' ');
        }
        line.push_str(&v.to_string());
        if (i + 1) % width == 0 {
            line.push('\n');
            w.write_all(line.as_bytes())?;
            line.clear();
        }
    }
    Ok(())
}

/// Reads a rectangular grid of whitespace-separated integers.
pub(crate) fn read_grid<R: Read>(r: R) -> Result<(usize, usize, Vec<i64>)> {
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for line in BufReader::new(r).lines() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad integer {tok:?}")))?,
            );
        }
        let n = values.len() - before;
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::DimensionMismatch(format!(
                    "row {height} has {n} entries, expected {w}"
                )))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::DimensionMismatch("empty grid".into()))?;
    Ok((height, width, values))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelField> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    LabelField::read_text(file)
}

pub fn save_labels(path: impl AsRef<Path>, field: &LabelField) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    field
        .write_text(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// `N x C` one-hot label matrix. A row holds either one class (`1..=C`) or
/// nothing (`0`, the all-zero row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    classes: usize,
    labels: Vec<u32>,
}

impl LabelMatrix {
    pub fn new(classes: usize, labels: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l as usize > classes) {
            return Err(Error::InvalidLabel(format!(
                "label {bad} exceeds class count {classes}"
            )));
        }
        Ok(Self { classes, labels })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Class of row `i`, `0` for an unlabeled row.
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Entry `(i, j)` with 0-based column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.labels[i] as usize == j + 1 {
            1.0
        } else {
            0.0
        }
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|&l| l > 0)
    }

    /// Per-row argmax as class ids (`0` for all-zero rows).
    pub fn argmax_labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.classes).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Copy keeping only the rows in `keep`; other rows become unlabeled.
    pub fn mask(&self, keep: &[usize]) -> Self {
        let mut labels = vec![0; self.labels.len()];
        for &i in keep {
            labels[i] = self.labels[i];
        }
        Self {
            classes: self.classes,
            labels,
        }
    }
}

/// One-hot rows for the given pixels of `field`.
pub fn to_onehot(field: &LabelField, indices: &[usize]) -> Result<LabelMatrix> {
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= field.len() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                len: field.len(),
            });
        }
        let l = field.get(i);
        if l == 0 {
            return Err(Error::InvalidLabel(format!(
                "pixel {i} is background and has no class"
            )));
        }
        labels.push(l);
    }
    LabelMatrix::new(field.classes() as usize, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitScheme {
    /// `round(p * class size)` training samples per class, at least one.
    Fraction(f64),
    /// `min(n, class size - 1)` training samples per class.
    PerClass(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSplit {
    /// Flat pixel indices, ascending.
    pub train: Vec<usize>,
    /// Flat pixel indices, ascending.
    pub test: Vec<usize>,
    /// Training samples per class.
    pub per_class_counts: BTreeMap<u32, usize>,
}

/// Random per-class split of the labeled pixels of `field`.
pub fn train_test_split(field: &LabelField, scheme: SplitScheme, seed: u64) -> Result<SampleSplit> {
    match scheme {
        SplitScheme::Fraction(p) if !(p > 0.0 && p <= 1.0) => {
            return Err(Error::InvalidArgument(format!(
                "split fraction {p} not in (0, 1]"
            )))
        }
        SplitScheme::PerClass(0) => {
            return Err(Error::InvalidArgument(
                "per-class count must be >= 1".into(),
            ))
        }
        _ => {}
    }
    if field.classes() < 2 {
        return Err(Error::InvalidLabel(format!(
            "need at least 2 classes to split, found {}",
            field.classes()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); field.classes() as usize];
    for (i, &l) in field.labels().iter().enumerate() {
        if l > 0 {
            by_class[l as usize - 1].push(i);
        }
    }
    let mut rng = seed::rng(seed);
    let mut split = SampleSplit {
        train: Vec::new(),
        test: Vec::new(),
        per_class_counts: BTreeMap::new(),
    };
    for (c, mut members) in by_class.into_iter().enumerate() {
        let class = c as u32 + 1;
        let size = members.len();
        let take = match scheme {
            SplitScheme::PerClass(n) => {
                if size < 2 {
                    return Err(Error::InvalidLabel(format!(
                        "class {class} has {size} samples; per-class splits need at least 2"
                    )));
                }
                n.min(size - 1)
            }
            SplitScheme::Fraction(p) => {
                if size == 0 {
                    return Err(Error::InvalidLabel(format!("class {class} has no samples")));
                }
                ((p * size as f64).round() as usize).clamp(1, size)
            }
        };
        members.shuffle(&mut rng);
        split.train.extend_from_slice(&members[..take]);
        split.test.extend_from_slice(&members[take..]);
        split.per_class_counts.insert(class, take);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Synthetic cube layout: a `grid_rows x grid_cols` tiling of rectangular
/// regions, each assigned one class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: u32,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Class of each region, row-major over the region grid.
    pub region_classes: Vec<u32>,
    /// Mean spectrum of each class (`classes` rows of `bands` values).
    pub class_means: Vec<Vec<f64>>,
    /// Standard deviation of the per-band Gaussian noise.
    pub noise_sigma: f64,
}

impl SynthSpec {
    /// A layout whose class means are spread along one spectral direction,
    /// `class_step` apart, with a smaller random class-specific component.
    /// Regions get classes `1, 2, ..., C, 1, 2, ...` in row-major order.
    #[allow(clippy::too_many_arguments)]
    pub fn graded(
        height: usize,
        width: usize,
        bands: usize,
        classes: u32,
        grid_rows: usize,
        grid_cols: usize,
        class_step: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let mut rng = seed::stream_rng(seed, 0x5eed);
        let d = bands as f64;
        let class_means = (0..classes)
            .map(|c| {
                (0..bands)
                    .map(|b| {
                        let base = 0.3 + 0.1 * (std::f64::consts::TAU * b as f64 / d).sin();
                        let jitter = rng.random_range(-0.5..0.5) * class_step;
                        base + (c as f64 * class_step + 0.5 * jitter) / d.sqrt()
                    })
                    .collect()
            })
            .collect();
        let region_classes = (0..grid_rows * grid_cols)
            .map(|k| (k as u32 % classes) + 1)
            .collect();
        Self {
            height,
            width,
            bands,
            classes,
            grid_rows,
            grid_cols,
            region_classes,
            class_means,
            noise_sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return bad("synthetic dimensions must be positive".into());
        }
        if self.classes == 0 {
            return bad("synthetic cube needs at least one class".into());
        }
        if self.grid_rows == 0
            || self.grid_cols == 0
            || self.grid_rows > self.height
            || self.grid_cols > self.width
        {
            return bad(format!(
                "region grid {}x{} does not fit a {}x{} image",
                self.grid_rows, self.grid_cols, self.height, self.width
            ));
        }
        if self.region_classes.len() != self.grid_rows * self.grid_cols {
            return bad(format!(
                "{} region classes for {} regions",
                self.region_classes.len(),
                self.grid_rows * self.grid_cols
            ));
        }
        if let Some(c) = self
            .region_classes
            .iter()
            .find(|&&c| c == 0 || c > self.classes)
        {
            return bad(format!("region class {c} outside 1..={}", self.classes));
        }
        for c in 1..=self.classes {
            if !self.region_classes.contains(&c) {
                return bad(format!("class {c} is not assigned to any region"));
            }
        }
        if self.class_means.len() != self.classes as usize
            || self.class_means.iter().any(|m| m.len() != self.bands)
        {
            return bad("class means must be classes x bands".into());
        }
        if self.class_means.iter().flatten().any(|v| !v.is_finite()) {
            return bad("class means must be finite".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        Ok(())
    }

    /// Class of pixel `(y, x)`.
    pub fn class_at(&self, y: usize, x: usize) -> u32 {
        let r = y * self.grid_rows / self.height;
        let c = x * self.grid_cols / self.width;
        self.region_classes[r * self.grid_cols + c]
    }

    /// Region index of pixel `(y, x)`.
    pub fn region_at(&self, y: usize, x: usize) -> usize {
        let r = y * self.grid_rows / self.height;
        let c = x * self.grid_cols / self.width;
        r * self.grid_cols + c
    }
}

/// Generates a cube and its ground-truth field from `spec`. Every pixel is
/// labeled.
pub fn synth_cube(spec: &SynthSpec, seed: u64) -> Result<(SpectralCube, LabelField)> {
    spec.validate()?;
    let normal =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = seed::rng(seed);
    let n = spec.height * spec.width;
    let mut data = Vec::with_capacity(n * spec.bands);
    let mut labels = Vec::with_capacity(n);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let class = spec.class_at(y, x);
            labels.push(class);
            let mean = &spec.class_means[class as usize - 1];
            for &m in mean {
                let v = if spec.noise_sigma > 0.0 {
                    m + normal.sample(&mut rng)
                } else {
                    m
                };
                data.push(v as f32);
            }
        }
    }
    let cube = SpectralCube::new(spec.height, spec.width, spec.bands, data)?;
    let mut field = LabelField::new(spec.height, spec.width, labels)?;
    field.classes = spec.classes;
    Ok((cube, field))
}
