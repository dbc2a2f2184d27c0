//! Saturation-noise removal on 8x8 patches over `[-I | DCT]`.
//!
//! Patches are processed in the headroom domain `h = 255 - pixel`. A pixel
//! pinned to 255 then has its headroom pulled down to zero, which is the
//! non-positive sparse perturbation `-I a` with `a >= 0` that the combined
//! model expects. The restored patch is `255 - D b`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::{run_algorithm, Algorithm, SolverSettings};
use crate::dictgen::{dct2d_dictionary, CombinedDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::greedy::{SparseSolution, Termination};

pub const PATCH: usize = 8;
const PATCH_LEN: usize = PATCH * PATCH;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    /// Row-major intensities in `[0, 255]`.
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Image(format!(
                "{} pixels do not form a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=255.0).contains(p)) {
            return Err(Error::Image("pixel values must lie in [0, 255]".into()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    fn check_patchable(&self) -> Result<()> {
        if self.width % PATCH != 0 || self.height % PATCH != 0 {
            return Err(Error::Image(format!(
                "{}x{} is not divisible into {PATCH}x{PATCH} patches",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Non-overlapping patches in raster order, each vectorized row-major.
    pub fn patches(&self) -> Result<Vec<Vec<f64>>> {
        self.check_patchable()?;
        let mut out = Vec::with_capacity(self.pixels.len() / PATCH_LEN);
        for pr in (0..self.height).step_by(PATCH) {
            for pc in (0..self.width).step_by(PATCH) {
                let mut p = Vec::with_capacity(PATCH_LEN);
                for r in 0..PATCH {
                    let start = (pr + r) * self.width + pc;
                    p.extend_from_slice(&self.pixels[start..start + PATCH]);
                }
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Inverse of [`GrayImage::patches`]; values are clamped to `[0, 255]`.
    pub fn from_patches(width: usize, height: usize, patches: &[Vec<f64>]) -> Result<Self> {
        if width % PATCH != 0 || height % PATCH != 0 || patches.len() != width * height / PATCH_LEN {
            return Err(Error::Image("patch count does not match image size".into()));
        }
        let mut pixels = vec![0.0; width * height];
        let per_row = width / PATCH;
        for (k, p) in patches.iter().enumerate() {
            let (pr, pc) = ((k / per_row) * PATCH, (k % per_row) * PATCH);
            for r in 0..PATCH {
                for c in 0..PATCH {
                    pixels[(pr + r) * width + pc + c] = p[r * PATCH + c].clamp(0.0, 255.0);
                }
            }
        }
        Self::new(width, height, pixels)
    }

    /// Reads an 8-bit binary PGM (P5).
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode_pgm(&fs::read(path)?)
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Image("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Image(format!("expected P5 magic, found {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Image(format!("bad PGM header field '{s}'")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(Error::Image(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let data = bytes
            .get(pos..pos + width * height)
            .ok_or_else(|| Error::Image("truncated PGM raster".into()))?;
        let scale = 255.0 / maxval as f64;
        let pixels = data.iter().map(|&b| (b as f64 * scale).min(255.0)).collect();
        Self::new(width, height, pixels)
    }

    /// Pixels rounded to the nearest integer.
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&p| p.round().clamp(0.0, 255.0) as u8));
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.encode_pgm())?;
        Ok(())
    }
}

/// Pins `floor(fraction * N)` distinct, uniformly chosen pixels to 255.
/// Pixels that already were 255 may be chosen.
pub fn saturate(img: &GrayImage, fraction: f64, seed: u64) -> Result<(GrayImage, Vec<bool>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("saturation fraction {fraction} outside [0, 1]")));
    }
    let n = img.pixels.len();
    let count = ((fraction * n as f64).floor() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    let mut out = img.clone();
    for i in rand::seq::index::sample(&mut rng, n, count) {
        mask[i] = true;
        out.pixels[i] = 255.0;
    }
    Ok((out, mask))
}

/// Peak signal-to-noise ratio in dB over all pixels; infinite for identical
/// images.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    if reference.width != test.width || reference.height != test.height {
        return Err(Error::Dimension("psnr: image sizes differ".into()));
    }
    let mse = reference
        .pixels
        .iter()
        .zip(&test.pixels)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / reference.pixels.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// `[-I_64 | DCT_8x8]` with the identity block as the non-negative part.
pub fn saturation_dictionary() -> Result<CombinedDictionary> {
    let x = Dictionary::identity(PATCH_LEN).negated();
    let d = dct2d_dictionary(PATCH)?;
    CombinedDictionary::from_blocks(&x, &d)
}

#[derive(Debug, Clone)]
pub struct ImageRecovery {
    pub image: GrayImage,
    /// Per-patch solutions in raster order, in the headroom domain.
    pub solutions: Vec<SparseSolution>,
    /// Patches where the solver stalled and the input patch was kept.
    pub stalled_patches: usize,
}

/// Restores every patch with `algorithm`, stopping at `||y - G d|| < eps`.
pub fn recover_image(img: &GrayImage, algorithm: Algorithm, eps: f64) -> Result<ImageRecovery> {
    let settings = SolverSettings { residual_tol: eps, ..SolverSettings::default() };
    recover_image_with(img, algorithm, &settings)
}

/// [`recover_image`] with explicit solver settings.
pub fn recover_image_with(
    img: &GrayImage,
    algorithm: Algorithm,
    settings: &SolverSettings,
) -> Result<ImageRecovery> {
    let g = saturation_dictionary()?;
    let patches = img.patches()?;
    let results: Vec<(Vec<f64>, SparseSolution, bool)> = patches
        .par_iter()
        .map(|p| {
            let y: Vec<f64> = p.iter().map(|v| 255.0 - v).collect();
            let sol = run_algorithm(algorithm, &g, &y, settings)?;
            if sol.termination == Termination::Stalled {
                return Ok((p.clone(), sol, true));
            }
            let beta = &sol.delta[PATCH_LEN..];
            let dict = g.dictionary().matrix();
            let mut h = vec![0.0; PATCH_LEN];
            for (j, &b) in beta.iter().enumerate() {
                if b != 0.0 {
                    crate::linalg::axpy(b, dict.col(PATCH_LEN + j), &mut h);
                }
            }
            let restored = h.iter().map(|v| 255.0 - v).collect();
            Ok((restored, sol, false))
        })
        .collect::<Result<_>>()?;
    let stalled_patches = results.iter().filter(|r| r.2).count();
    let (restored, solutions): (Vec<_>, Vec<_>) = results.into_iter().map(|(p, s, _)| (p, s)).unzip();
    Ok(ImageRecovery {
        image: GrayImage::from_patches(img.width, img.height, &restored)?,
        solutions,
        stalled_patches,
    })
}

/// Summary written by the `image-recover` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    pub algorithm: Algorithm,
    pub saturation: f64,
    pub seed: u64,
    pub saturated_pixels: usize,
    pub psnr_corrupted: f64,
    pub psnr_recovered: f64,
    pub stalled_patches: usize,
}
