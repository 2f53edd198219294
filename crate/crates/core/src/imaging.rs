//! 8-bit grayscale images, binary PGM I/O, perspective warping and the
//! warp-residual alignment score.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homography::Homography;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Geometry(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample at `(u, v)`, which must lie inside
    /// `[0, w-1] × [0, h-1]`.
    fn bilinear(&self, u: f64, v: f64) -> f64 {
        let x0 = (u.floor() as usize).min(self.width - 1);
        let y0 = (v.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let top = self.get(x0, y0) as f64 * (1.0 - fx) + self.get(x1, y0) as f64 * fx;
        let bottom = self.get(x0, y1) as f64 * (1.0 - fx) + self.get(x1, y1) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Which output pixels of a warp received source data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    width: usize,
    height: usize,
    covered: Vec<bool>,
}

impl CoverageMask {
    pub fn is_covered(&self, x: usize, y: usize) -> bool {
        self.covered[y * self.width + x]
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.covered
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    skip_whitespace_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format(format!("PGM header: missing {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|_| Error::Format(format!("PGM header: {what} out of range")))
}

/// Decodes a binary (P5) PGM with `maxval <= 255`.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (expected magic P5)".into()));
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("empty image {width}x{height}")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("PGM header: expected whitespace after maxval".into())),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let data = &bytes[pos..];
    if data.len() < n {
        return Err(Error::Format(format!(
            "truncated PGM: expected {n} pixel bytes, found {}",
            data.len()
        )));
    }
    let pixels = data[..n].to_vec();
    if let Some(&v) = pixels.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::Format(format!("pixel value {v} exceeds maxval {maxval}")));
    }
    GrayImage::new(width, height, pixels)
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn load_pgm(path: impl AsRef<std::path::Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_pgm(&bytes)
}

pub fn save_pgm(path: impl AsRef<std::path::Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Warps `src` by `h` into an `out_w × out_h` canvas using inverse mapping
/// and bilinear interpolation (rounded half up). Pixels whose preimage
/// falls outside `src` are 0 and left uncovered.
pub fn warp_perspective(
    src: &GrayImage,
    h: &Homography,
    out_w: usize,
    out_h: usize,
) -> Result<(GrayImage, CoverageMask)> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Geometry(format!("empty output size {out_w}x{out_h}")));
    }
    let inv = h.inverse()?;
    let max_u = (src.width - 1) as f64;
    let max_v = (src.height - 1) as f64;
    let mut pixels = vec![0u8; out_w * out_h];
    let mut covered = vec![false; out_w * out_h];
    pixels
        .par_chunks_mut(out_w)
        .zip(covered.par_chunks_mut(out_w))
        .enumerate()
        .for_each(|(y, (prow, crow))| {
            for x in 0..out_w {
                let Ok((u, v)) = inv.project(x as f64, y as f64) else {
                    continue;
                };
                if (0.0..=max_u).contains(&u) && (0.0..=max_v).contains(&v) {
                    prow[x] = (src.bilinear(u, v) + 0.5).floor().clamp(0.0, 255.0) as u8;
                    crow[x] = true;
                }
            }
        });
    Ok((
        GrayImage::new(out_w, out_h, pixels)?,
        CoverageMask {
            width: out_w,
            height: out_h,
            covered,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualScore {
    /// Overlap pixels whose residual exceeds the threshold.
    pub nonzero_count: usize,
    /// Sum of absolute residuals over the overlap.
    pub raw_sum: u64,
    pub overlap_pixels: usize,
    /// `ln(1 + nonzero_count)`.
    pub log_score: f64,
}

/// Intermediate images of the residual computation.
#[derive(Debug, Clone)]
pub struct ResidualImages {
    /// Image 1 warped onto image 2's frame.
    pub d1: GrayImage,
    /// Image 2 with everything outside the warp footprint zeroed.
    pub d2: GrayImage,
    /// `|d1 - d2|` inside the footprint, zero elsewhere.
    pub d3: GrayImage,
    pub mask: CoverageMask,
}

pub fn residual_images(img1: &GrayImage, img2: &GrayImage, h: &Homography) -> Result<ResidualImages> {
    let (d1, mask) = warp_perspective(img1, h, img2.width, img2.height)?;
    let d2_pixels: Vec<u8> = img2
        .pixels
        .iter()
        .zip(&mask.covered)
        .map(|(&p, &c)| if c { p } else { 0 })
        .collect();
    let d3_pixels: Vec<u8> = d1
        .pixels
        .iter()
        .zip(&d2_pixels)
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    Ok(ResidualImages {
        d2: GrayImage::new(img2.width, img2.height, d2_pixels)?,
        d3: GrayImage::new(img2.width, img2.height, d3_pixels)?,
        d1,
        mask,
    })
}

/// Scores how well `h` aligns `img1` with `img2`: the number of overlap
/// pixels whose absolute difference exceeds `nonzero_threshold`.
///
/// Fails when the overlap covers less than `min_overlap_fraction` of
/// `img2`, since an empty footprint would otherwise score as perfect.
pub fn alignment_residual(
    img1: &GrayImage,
    img2: &GrayImage,
    h: &Homography,
    nonzero_threshold: u8,
    min_overlap_fraction: f64,
) -> Result<ResidualScore> {
    let images = residual_images(img1, img2, h)?;
    score_residual(&images, nonzero_threshold, min_overlap_fraction)
}

pub fn score_residual(
    images: &ResidualImages,
    nonzero_threshold: u8,
    min_overlap_fraction: f64,
) -> Result<ResidualScore> {
    let overlap = images.mask.covered_count();
    let required = (min_overlap_fraction * images.d3.len() as f64).ceil() as usize;
    if overlap < required {
        return Err(Error::DegenerateOverlap {
            overlap,
            required,
        });
    }
    let (mut nonzero, mut raw_sum) = (0usize, 0u64);
    for (&d, &c) in images.d3.pixels.iter().zip(&images.mask.covered) {
        if c {
            raw_sum += d as u64;
            if d > nonzero_threshold {
                nonzero += 1;
            }
        }
    }
    Ok(ResidualScore {
        nonzero_count: nonzero,
        raw_sum,
        overlap_pixels: overlap,
        log_score: (nonzero as f64).ln_1p(),
    })
}

pub const DEFAULT_MIN_OVERLAP_FRACTION: f64 = 0.01;
