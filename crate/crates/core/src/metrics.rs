//! Accuracy metrics: reflectivity error over matched points, PSNR and SSIM.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::point_cloud::CloudPoint;
use crate::kdtree::KdTree;

pub const DEFAULT_MATCH_RADIUS: f64 = 0.2;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub sim: usize,
    pub reference: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched: usize,
}

impl Matching {
    pub fn match_fraction(&self) -> f64 {
        let n = self.pairs.len() + self.unmatched;
        if n == 0 {
            0.0
        } else {
            self.pairs.len() as f64 / n as f64
        }
    }
}

/// Pairs each simulated point with its nearest reference point within
/// `radius` (ties → lower reference index). A reference point may serve
/// several simulated points.
pub fn match_points(sim: &[CloudPoint], reference: &[CloudPoint], radius: f64) -> Result<Matching> {
    if !(radius > 0.0) {
        return Err(Error::Input(format!("match radius must be positive, got {radius}")));
    }
    if sim.is_empty() || reference.is_empty() {
        return Err(Error::Input("cannot match empty point clouds".into()));
    }
    let tree = KdTree::new(reference.iter().map(|p| p.position).collect());
    let found: Vec<Option<MatchedPair>> = sim
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            tree.nearest_within(p.position, radius).map(|n| MatchedPair {
                sim: i,
                reference: n.index,
                distance: n.dist2.sqrt(),
            })
        })
        .collect();
    let unmatched = found.iter().filter(|m| m.is_none()).count();
    Ok(Matching {
        pairs: found.into_iter().flatten().collect(),
        unmatched,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityError {
    pub mae: f64,
    /// Lower of the two middle values for even counts.
    pub median: f64,
    pub count: usize,
}

/// Absolute reflectivity differences of each matched pair, in pair order.
pub fn absolute_errors(matching: &Matching, sim: &[CloudPoint], reference: &[CloudPoint]) -> Vec<f64> {
    matching
        .pairs
        .iter()
        .map(|m| (sim[m.sim].reflectivity as f64 - reference[m.reference].reflectivity as f64).abs())
        .collect()
}

pub fn reflectivity_error(abs_errors: &[f64]) -> Result<ReflectivityError> {
    if abs_errors.is_empty() {
        return Err(Error::Input("no matched pairs to compute reflectivity error".into()));
    }
    let n = abs_errors.len();
    let mae = abs_errors.iter().sum::<f64>() / n as f64;
    let mut sorted = abs_errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ReflectivityError {
        mae,
        median: sorted[(n - 1) / 2],
        count: n,
    })
}

/// Interleaved 8-bit image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * channels || channels == 0 {
            return Err(Error::Shape(format!(
                "{} bytes for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Loads PNG as gray, gray+alpha, RGB or RGBA 8-bit.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let (c, data) = match img {
            image::DynamicImage::ImageLuma8(i) => (1, i.into_raw()),
            image::DynamicImage::ImageLumaA8(i) => (2, i.into_raw()),
            image::DynamicImage::ImageRgb8(i) => (3, i.into_raw()),
            image::DynamicImage::ImageRgba8(i) => (4, i.into_raw()),
            other => {
                return Err(Error::Format(format!(
                    "{}: expected 8-bit channels, found {:?}",
                    path.display(),
                    other.color()
                )))
            }
        };
        Self::new(w, h, c, data)
    }

    fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.channels).map(|&v| v as f64).collect()
    }
}

fn same_shape(a: &Image, b: &Image) -> Result<()> {
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels) {
        return Err(Error::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(())
}

/// `10 log10(255² / MSE)` over all channels; `+∞` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / a.data.len() as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable "valid" filtering with the normalized Gaussian window.
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                s += kv * img[y * w + x + i];
            }
            rows[y * ow + x] = s;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                s += kv * rows[(y + i) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    out
}

fn ssim_channel(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let k = gaussian_kernel();
    let c1 = (SSIM_K1 * 255.0).powi(2);
    let c2 = (SSIM_K2 * 255.0).powi(2);
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(a, w, h, &k);
    let mu_b = filter_valid(b, w, h, &k);
    let e_aa = filter_valid(&prod(a, a), w, h, &k);
    let e_bb = filter_valid(&prod(b, b), w, h, &k);
    let e_ab = filter_valid(&prod(a, b), w, h, &k);
    let n = mu_a.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    sum / n as f64
}

/// Mean SSIM with an 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03, over fully contained windows, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {}x{}",
            a.width, a.height
        )));
    }
    let per: Vec<f64> = (0..a.channels)
        .into_par_iter()
        .map(|c| ssim_channel(&a.channel(c), &b.channel(c), a.width, a.height))
        .collect();
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}
