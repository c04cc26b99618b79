//! Homogeneous-region partition of the image.
//!
//! The cube is reduced to its first principal component, the amount of edge
//! structure in that image (Laplacian of Gaussian zero crossings) sets the
//! superpixel budget `T = T_base * N_f / N_I`, and SLIC clusters the image
//! into that many 4-connected superpixels.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::datacube::{read_grid, write_grid, SpectralCube};
use crate::error::{Error, Result};

/// Smallest superpixel budget produced by [`superpixel_count`].
pub const MIN_SUPERPIXELS: usize = 16;

/// Projection of every pixel on the first principal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PcImage {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    /// Set when the cube has no spectral variance; `values` is then all zero.
    pub zero_variance: bool,
}

impl PcImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width || values.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {height}x{width} image",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            height,
            width,
            values,
            zero_variance: false,
        })
    }

    fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Values rescaled linearly to `[0, top]`; a constant image maps to zeros.
    fn rescaled(&self, top: f64) -> Vec<f64> {
        let (lo, hi) = self.range();
        if hi > lo {
            self.values
                .iter()
                .map(|v| (v - lo) / (hi - lo) * top)
                .collect()
        } else {
            vec![0.0; self.values.len()]
        }
    }
}

/// Projects each pixel (mean-centred) on the unit eigenvector of the band
/// covariance with the largest eigenvalue. The eigenvector sign is fixed so
/// its first non-zero component is positive.
pub fn first_principal_component(cube: &SpectralCube) -> Result<PcImage> {
    let n = cube.pixel_count();
    let d = cube.bands();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "principal components need at least 2 pixels, got {n}"
        )));
    }
    let mut mean = vec![0.0f64; d];
    for p in 0..n {
        for (m, &v) in mean.iter_mut().zip(cube.spectrum(p)) {
            *m += f64::from(v);
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |p, b| f64::from(cube.spectrum(p)[b]) - mean[b]);
    let cov = centered.tr_mul(&centered) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one band");
    let scale = 1.0 + mean.iter().map(|m| m * m).sum::<f64>();
    if lambda <= 1e-24 * scale {
        return Ok(PcImage {
            height: cube.height(),
            width: cube.width(),
            values: vec![0.0; n],
            zero_variance: true,
        });
    }
    let mut axis: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if let Some(first) = axis.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let values = (centered * DMatrix::from_column_slice(d, 1, &axis))
        .iter()
        .copied()
        .collect();
    Ok(PcImage {
        height: cube.height(),
        width: cube.width(),
        values,
        zero_variance: false,
    })
}

/// Edge statistics of the LoG-filtered image.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStats {
    /// `N_f`: marked edge pixels.
    pub edge_pixels: usize,
    /// `N_I`: all pixels.
    pub total_pixels: usize,
    pub edges: Vec<bool>,
}

fn log_kernel(sigma: f64) -> (usize, Vec<f64>) {
    let radius = (3.0 * sigma).ceil() as usize;
    let size = 2 * radius + 1;
    let s2 = sigma * sigma;
    let mut gauss = vec![0.0; size * size];
    let mut r2 = vec![0.0; size * size];
    for ky in 0..size {
        for kx in 0..size {
            let dy = ky as f64 - radius as f64;
            let dx = kx as f64 - radius as f64;
            let rr = dx * dx + dy * dy;
            r2[ky * size + kx] = rr;
            gauss[ky * size + kx] = (-rr / (2.0 * s2)).exp();
        }
    }
    let gsum: f64 = gauss.iter().sum();
    let mut kernel: Vec<f64> = gauss
        .iter()
        .zip(&r2)
        .map(|(g, rr)| g * (rr - 2.0 * s2) / (s2 * s2) / gsum)
        .collect();
    // zero-sum so flat regions give no response
    let mean = kernel.iter().sum::<f64>() / kernel.len() as f64;
    kernel.iter_mut().for_each(|k| *k -= mean);
    (radius, kernel)
}

/// Laplacian-of-Gaussian response of `img` rescaled to `[0, 1]`, with
/// replicated borders.
pub fn log_response(img: &PcImage, kernel_sigma: f64) -> Result<Vec<f64>> {
    if !(kernel_sigma > 0.0 && kernel_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "LoG sigma must be positive, got {kernel_sigma}"
        )));
    }
    let (h, w) = (img.height, img.width);
    let src = img.rescaled(1.0);
    let (radius, kernel) = log_kernel(kernel_sigma);
    let size = 2 * radius + 1;
    let r = radius as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..size {
                let sy = clamp(y as isize + ky as isize - r, h);
                for kx in 0..size {
                    let sx = clamp(x as isize + kx as isize - r, w);
                    acc += kernel[ky * size + kx] * src[sy * w + sx];
                }
            }
            out[y * w + x] = acc;
        }
    }
    Ok(out)
}

/// Counts LoG zero-crossing pixels.
///
/// A horizontally or vertically adjacent pair with responses of opposite
/// sign whose difference exceeds `threshold` marks the member closer to zero;
/// an exactly-zero pixel is marked when its two neighbours along one axis
/// straddle zero by more than `threshold`. `threshold` defaults to `1e-4`
/// times the response range. The image is rescaled to `[0, 1]` first, so a
/// constant image has no edges.
pub fn log_edge_stats(
    img: &PcImage,
    kernel_sigma: f64,
    threshold: Option<f64>,
) -> Result<EdgeStats> {
    let resp = log_response(img, kernel_sigma)?;
    let (h, w) = (img.height, img.width);
    let thr = match threshold {
        Some(t) => t,
        None => {
            let (lo, hi) = resp
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            1e-4 * (hi - lo)
        }
    };
    let mut edges = vec![false; h * w];
    let mut mark_pair = |p: usize, q: usize| {
        let (a, b) = (resp[p], resp[q]);
        if a * b < 0.0 && (a - b).abs() > thr {
            if a.abs() <= b.abs() {
                edges[p] = true;
            } else {
                edges[q] = true;
            }
        }
    };
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                mark_pair(p, p + 1);
            }
            if y + 1 < h {
                mark_pair(p, p + w);
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if resp[p] != 0.0 {
                continue;
            }
            let straddles = |a: f64, b: f64| a * b < 0.0 && (a - b).abs() > thr;
            if (x > 0 && x + 1 < w && straddles(resp[p - 1], resp[p + 1]))
                || (y > 0 && y + 1 < h && straddles(resp[p - w], resp[p + w]))
            {
                edges[p] = true;
            }
        }
    }
    Ok(EdgeStats {
        edge_pixels: edges.iter().filter(|&&e| e).count(),
        total_pixels: h * w,
        edges,
    })
}

/// `round(t_base * n_f / n_i)` clamped to `[16, n_i]` (or `[n_i, n_i]` for
/// images smaller than 16 pixels). Returns 0 for an empty image.
pub fn superpixel_count(n_f: usize, n_i: usize, t_base: usize) -> usize {
    if n_i == 0 {
        return 0;
    }
    let t = (t_base as f64 * n_f as f64 / n_i as f64).round() as usize;
    t.clamp(MIN_SUPERPIXELS.min(n_i), n_i)
}

/// Segment id per pixel, ids `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    segments: Vec<usize>,
    count: usize,
}

impl SuperpixelMap {
    /// Checks the partition and non-empty-id invariants (not connectivity;
    /// see [`SuperpixelMap::is_connected`]).
    pub fn new(height: usize, width: usize, segments: Vec<usize>) -> Result<Self> {
        if segments.len() != height * width || segments.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} segment ids for a {height}x{width} image",
                segments.len()
            )));
        }
        let count = segments.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; count];
        for &s in &segments {
            seen[s] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("segment {empty} is empty")));
        }
        Ok(Self {
            height,
            width,
            segments,
            count,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn segment(&self, flat: usize) -> usize {
        self.segments[flat]
    }

    pub fn segments(&self) -> &[usize] {
        &self.segments
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &s in &self.segments {
            sizes[s] += 1;
        }
        sizes
    }

    /// True when every segment is a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        let comps = components(self.height, self.width, &self.segments);
        comps.count == self.count
    }

    pub fn write_text<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_grid(w, self.width, self.segments.iter().copied())
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let (h, w, values) = read_grid(r)?;
        let segments = values
            .into_iter()
            .map(|v| usize::try_from(v).map_err(|_| Error::Parse(format!("bad segment id {v}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(h, w, segments)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(file)
    }
}

struct Components {
    /// Component id per pixel, numbered in row-major order of first pixel.
    ids: Vec<usize>,
    count: usize,
}

/// 4-connected components of equal-valued pixels.
fn components(h: usize, w: usize, labels: &[usize]) -> Components {
    const UNSET: usize = usize::MAX;
    let mut ids = vec![UNSET; h * w];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if ids[start] != UNSET {
            continue;
        }
        ids[start] = count;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if ids[q] == UNSET && labels[q] == labels[start] {
                    ids[q] = count;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        count += 1;
    }
    Components { ids, count }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub compactness: f64,
    pub max_iters: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            compactness: 10.0,
            max_iters: 10,
        }
    }
}

/// Intensity range SLIC works in; compactness is relative to it.
const SLIC_INTENSITY_RANGE: f64 = 100.0;
const UNASSIGNED: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Center {
    intensity: f64,
    y: f64,
    x: f64,
}

fn seed_grid(h: usize, w: usize, t: usize) -> (usize, usize) {
    let step = ((h * w) as f64 / t as f64).sqrt();
    let mut rows = ((h as f64 / step).round() as usize).clamp(1, h);
    let mut cols = ((w as f64 / step).round() as usize).clamp(1, w);
    while rows * cols > t {
        let cell_h = h as f64 / rows as f64;
        let cell_w = w as f64 / cols as f64;
        if rows > 1 && (cols == 1 || cell_h < cell_w) {
            rows -= 1;
        } else {
            cols -= 1;
        }
    }
    (rows, cols)
}

/// SLIC superpixels of a single-channel image.
///
/// Centers start on a regular grid of about `t` cells (moved to the lowest
/// gradient pixel of their 3x3 neighbourhood) and are refined by k-means on
/// `(intensity, y, x)` with distance `sqrt(dI^2 + (ds / S)^2 * compactness^2)`,
/// searching a `4S x 4S` window around each center. Intensities are rescaled
/// to `[0, 100]` first. Afterwards every label is reduced to its largest
/// 4-connected piece; other pieces join the largest adjacent segment.
/// Equal distances resolve to the lower center id. No randomness is involved.
pub fn segment_superpixels(
    img: &PcImage,
    t: usize,
    compactness: f64,
    max_iters: usize,
) -> Result<SuperpixelMap> {
    let (h, w) = (img.height, img.width);
    let n = h * w;
    if t == 0 || t > n {
        return Err(Error::InvalidArgument(format!(
            "superpixel count {t} must be in 1..={n}"
        )));
    }
    if !(compactness >= 0.0 && compactness.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "compactness must be >= 0, got {compactness}"
        )));
    }
    if t == 1 {
        return SuperpixelMap::new(h, w, vec![0; n]);
    }
    let intensity = img.rescaled(SLIC_INTENSITY_RANGE);
    let at = |y: usize, x: usize| intensity[y * w + x];
    let gradient = |y: usize, x: usize| {
        let l = at(y, x.saturating_sub(1));
        let r = at(y, (x + 1).min(w - 1));
        let u = at(y.saturating_sub(1), x);
        let d = at((y + 1).min(h - 1), x);
        (r - l).powi(2) + (d - u).powi(2)
    };

    let (rows, cols) = seed_grid(h, w, t);
    let mut centers = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let sy = ((r as f64 + 0.5) * h as f64 / rows as f64) as usize;
            let sx = ((c as f64 + 0.5) * w as f64 / cols as f64) as usize;
            let (mut by, mut bx) = (sy, sx);
            let mut best = gradient(sy, sx);
            for y in sy.saturating_sub(1)..=(sy + 1).min(h - 1) {
                for x in sx.saturating_sub(1)..=(sx + 1).min(w - 1) {
                    let g = gradient(y, x);
                    if g < best {
                        best = g;
                        by = y;
                        bx = x;
                    }
                }
            }
            centers.push(Center {
                intensity: at(by, bx),
                y: by as f64,
                x: bx as f64,
            });
        }
    }

    let step = (n as f64 / centers.len() as f64).sqrt();
    let window = (2.0 * step).ceil() as isize;
    let spatial = (compactness / step).powi(2);
    let mut labels = vec![UNASSIGNED; n];
    let mut dist = vec![f64::INFINITY; n];
    for _ in 0..max_iters.max(1) {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        let mut next = vec![UNASSIGNED; n];
        for (k, c) in centers.iter().enumerate() {
            let cy = c.y.round() as isize;
            let cx = c.x.round() as isize;
            let y0 = (cy - window).max(0) as usize;
            let y1 = ((cy + window) as usize).min(h - 1);
            let x0 = (cx - window).max(0) as usize;
            let x1 = ((cx + window) as usize).min(w - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let di = intensity[p] - c.intensity;
                    let dy = y as f64 - c.y;
                    let dx = x as f64 - c.x;
                    let d = di * di + (dy * dy + dx * dx) * spatial;
                    if d < dist[p] {
                        dist[p] = d;
                        next[p] = k;
                    }
                }
            }
        }
        let changed = next != labels;
        labels = next;
        if !changed {
            break;
        }
        let mut sums = vec![(0.0f64, 0.0f64, 0.0f64, 0usize); centers.len()];
        for (p, &k) in labels.iter().enumerate() {
            if k != UNASSIGNED {
                let s = &mut sums[k];
                s.0 += intensity[p];
                s.1 += (p / w) as f64;
                s.2 += (p % w) as f64;
                s.3 += 1;
            }
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.3 > 0 {
                let m = s.3 as f64;
                *c = Center {
                    intensity: s.0 / m,
                    y: s.1 / m,
                    x: s.2 / m,
                };
            }
        }
    }
    enforce_connectivity(h, w, &labels)
}

fn enforce_connectivity(h: usize, w: usize, labels: &[usize]) -> Result<SuperpixelMap> {
    let comps = components(h, w, labels);
    let m = comps.count;
    let mut size = vec![0usize; m];
    let mut label_of = vec![UNASSIGNED; m];
    let mut pixels: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (p, &c) in comps.ids.iter().enumerate() {
        size[c] += 1;
        label_of[c] = labels[p];
        pixels[c].push(p);
    }
    // keep the largest piece of every assigned label (first one on ties)
    let mut keeper: std::collections::HashMap<usize, usize> = Default::default();
    for c in 0..m {
        if label_of[c] == UNASSIGNED {
            continue;
        }
        keeper
            .entry(label_of[c])
            .and_modify(|k| {
                if size[c] > size[*k] {
                    *k = c;
                }
            })
            .or_insert(c);
    }
    const PENDING: usize = usize::MAX;
    let mut root = vec![PENDING; m];
    for &k in keeper.values() {
        root[k] = k;
    }
    let mut total = size.clone();
    let mut pending: Vec<usize> = (0..m).filter(|&c| root[c] == PENDING).collect();
    while !pending.is_empty() {
        let mut still = Vec::new();
        for &c in &pending {
            let mut best: Option<usize> = None;
            for &p in &pixels[c] {
                let (y, x) = (p / w, p % w);
                let mut nbrs = [usize::MAX; 4];
                if x > 0 {
                    nbrs[0] = p - 1;
                }
                if x + 1 < w {
                    nbrs[1] = p + 1;
                }
                if y > 0 {
                    nbrs[2] = p - w;
                }
                if y + 1 < h {
                    nbrs[3] = p + w;
                }
                for q in nbrs.into_iter().filter(|&q| q != usize::MAX) {
                    let r = root[comps.ids[q]];
                    if r == PENDING || comps.ids[q] == c {
                        continue;
                    }
                    best = match best {
                        Some(b) if total[b] > total[r] || (total[b] == total[r] && b <= r) => {
                            Some(b)
                        }
                        _ => Some(r),
                    };
                }
            }
            match best {
                Some(r) => {
                    root[c] = r;
                    total[r] += size[c];
                }
                None => still.push(c),
            }
        }
        if still.len() == pending.len() {
            // nothing was ever assigned a center
            for &c in &still {
                root[c] = still[0];
            }
            break;
        }
        pending = still;
    }
    let mut remap = vec![usize::MAX; m];
    let mut next = 0;
    let mut segments = vec![0; h * w];
    for p in 0..h * w {
        let r = root[comps.ids[p]];
        if remap[r] == usize::MAX {
            remap[r] = next;
            next += 1;
        }
        segments[p] = remap[r];
    }
    SuperpixelMap::new(h, w, segments)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    pub t_base: usize,
    /// Use this superpixel count instead of the LoG budget.
    pub fixed_count: Option<usize>,
    pub log_sigma: f64,
    pub edge_threshold: Option<f64>,
    pub slic: SlicParams,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            t_base: 2000,
            fixed_count: None,
            log_sigma: 2.0,
            edge_threshold: None,
            slic: SlicParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub principal: PcImage,
    /// Present when the budget came from the LoG statistics.
    pub edges: Option<EdgeStats>,
    pub budget: usize,
    pub map: SuperpixelMap,
}

/// First principal component, superpixel budget and SLIC in one call.
pub fn segment_cube(cube: &SpectralCube, params: &SegmentationParams) -> Result<Segmentation> {
    let principal = first_principal_component(cube)?;
    let (edges, budget) = match params.fixed_count {
        Some(t) => (None, t),
        None => {
            let stats = log_edge_stats(&principal, params.log_sigma, params.edge_threshold)?;
            let t = superpixel_count(stats.edge_pixels, stats.total_pixels, params.t_base);
            (Some(stats), t)
        }
    };
    let map = segment_superpixels(
        &principal,
        budget,
        params.slic.compactness,
        params.slic.max_iters,
    )?;
    Ok(Segmentation {
        principal,
        edges,
        budget,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> PcImage {
        let values = (0..h * w).map(|p| f(p / w, p % w)).collect();
        PcImage::new(h, w, values).unwrap()
    }

    #[test]
    fn constant_cube_is_flagged() {
        let cube = SpectralCube::new(3, 3, 4, vec![0.1; 36]).unwrap();
        let pc = first_principal_component(&cube).unwrap();
        assert!(pc.zero_variance);
        assert!(pc.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_pixel_hand_example() {
        let cube = SpectralCube::new(2, 1, 2, vec![0.0, 0.0, 2.0, 2.0]).unwrap();
        let pc = first_principal_component(&cube).unwrap();
        let s = 2f64.sqrt();
        assert!((pc.values[0] + s).abs() < 1e-12, "{:?}", pc.values);
        assert!((pc.values[1] - s).abs() < 1e-12);
    }

    #[test]
    fn too_few_pixels() {
        let cube = SpectralCube::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert!(first_principal_component(&cube).is_err());
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(superpixel_count(21025, 21025, 2000), 2000);
        assert_eq!(superpixel_count(21025 / 4, 21025, 2000), 500);
        assert_eq!(superpixel_count(0, 21025, 2000), 16);
        assert_eq!(superpixel_count(100, 100, 2000), 100);
        assert_eq!(superpixel_count(0, 9, 2000), 9);
    }

    #[test]
    fn constant_image_has_no_edges() {
        let img = image(20, 20, |_, _| 3.5);
        let stats = log_edge_stats(&img, 2.0, None).unwrap();
        assert_eq!(stats.edge_pixels, 0);
        assert_eq!(stats.total_pixels, 400);
    }

    #[test]
    fn step_edge_marked_on_step_column() {
        let step = 12;
        let img = image(30, 30, |_, x| if x < step { 0.0 } else { 1.0 });
        let stats = log_edge_stats(&img, 2.0, None).unwrap();
        assert!(stats.edge_pixels > 0);
        for p in 0..900 {
            if stats.edges[p] {
                let x = p % 30;
                assert!(x + 1 >= step && x <= step, "edge at column {x}");
            }
        }
    }

    #[test]
    fn bad_sigma() {
        let img = image(4, 4, |y, x| (y + x) as f64);
        assert!(log_edge_stats(&img, 0.0, None).is_err());
    }

    #[test]
    fn single_segment() {
        let img = image(10, 40, |y, x| (y * x) as f64);
        let map = segment_superpixels(&img, 1, 10.0, 10).unwrap();
        assert_eq!(map.count(), 1);
        assert!(segment_superpixels(&img, 401, 10.0, 10).is_err());
    }

    #[test]
    fn connectivity_merges_orphans() {
        // label 0 split into two pieces by label 1
        let labels = vec![0, 1, 0, 0, 1, 0, 0, 1, 1];
        let map = enforce_connectivity(3, 3, &labels).unwrap();
        assert!(map.is_connected());
        assert_eq!(map.count(), 2);
    }

    #[test]
    fn map_text_roundtrip() {
        let map = SuperpixelMap::new(2, 3, vec![0, 0, 1, 2, 2, 1]).unwrap();
        let mut buf = Vec::new();
        map.write_text(&mut buf).unwrap();
        assert_eq!(SuperpixelMap::read_text(&buf[..]).unwrap(), map);
        assert!(SuperpixelMap::new(1, 3, vec![0, 2, 2]).is_err());
    }
}
