use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::datacube::LabelField;
use crate::error::{Error, Result};

/// RGB colour for each class id; entry `k` is class `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette(pub Vec<[u8; 3]>);

impl Palette {
    /// Distinct colours for `classes` classes, spread over hue.
    pub fn for_classes(classes: usize) -> Self {
        let base: [[u8; 3]; 16] = [
            [230, 25, 75],
            [60, 180, 75],
            [255, 225, 25],
            [0, 130, 200],
            [245, 130, 48],
            [145, 30, 180],
            [70, 240, 240],
            [240, 50, 230],
            [210, 245, 60],
            [250, 190, 212],
            [0, 128, 128],
            [220, 190, 255],
            [170, 110, 40],
            [255, 250, 200],
            [128, 0, 0],
            [170, 255, 195],
        ];
        Palette(
            (0..classes)
                .map(|k| {
                    let c = base[k % 16];
                    // darken on each wrap so repeated colours stay distinguishable
                    let f = 1.0 / (1 + k / 16) as f64;
                    c.map(|v| (v as f64 * f).round() as u8)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<[u8; 3]>,
}

/// Colours each pixel by class; background (0) is black.
pub fn render_map(field: &LabelField, palette: &Palette) -> Result<RgbImage> {
    let pixels =
        field
            .labels()
            .iter()
            .map(|&l| match l {
                0 => Ok([0, 0, 0]),
                l => palette.0.get(l as usize - 1).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("no palette colour for class {l}"))
                }),
            })
            .collect::<Result<_>>()?;
    Ok(RgbImage {
        height: field.height(),
        width: field.width(),
        pixels,
    })
}

impl RgbImage {
    /// Binary PPM (`P6`, maxval 255).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        for p in &self.pixels {
            w.write_all(p)?;
        }
        Ok(())
    }

    pub fn read_ppm<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut fields = Vec::new();
        let mut line = String::new();
        while fields.len() < 4 {
            line.clear();
            if r.read_line(&mut line)
                .map_err(|e| Error::Parse(e.to_string()))?
                == 0
            {
                return Err(Error::MalformedHeader("truncated PPM header".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            fields.extend(content.split_whitespace().map(str::to_owned));
        }
        if fields.len() != 4 || fields[0] != "P6" {
            return Err(Error::MalformedHeader(format!("bad PPM header {fields:?}")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::MalformedHeader(format!("bad PPM number `{s}`")))
        };
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(Error::MalformedHeader(format!(
                "unsupported maxval {maxval}"
            )));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Parse(e.to_string()))?;
        if bytes.len() != width * height * 3 {
            return Err(Error::SizeMismatch {
                expected: width * height * 3,
                found: bytes.len(),
            });
        }
        Ok(Self {
            height,
            width,
            pixels: bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }
}

pub fn write_ppm(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    img.write_ppm(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    RgbImage::read_ppm(file)
}
