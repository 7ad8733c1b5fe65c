//! CPU reference for the foveated composite: zone geometry, block sampling
//! that emulates variable-rate shading, and the per-pixel alpha blend of the
//! foveal and non-foveal renders.
//!
//! Pixel distance maps linearly to visual angle: `total_fov / width` degrees
//! per pixel. The blend weight falls linearly from 1 at the foveal radius to
//! 0 at the transition radius.

use serde::{Deserialize, Serialize};
use std::io::{BufReader, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FoveationError {
    #[error("invalid foveation config: {0}")]
    InvalidConfig(String),
    #[error("gaze point ({0}, {1}) lies outside the {2}x{3} image")]
    GazeOutOfImage(f64, f64, usize, usize),
    #[error("image must have non-zero size")]
    EmptyImage,
    #[error("unsupported sampling ratio {0}:1 (expected 1, 4 or 16)")]
    UnsupportedRatio(u32),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// N:1 shading ratios per zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingRates {
    pub foveal: u32,
    pub transition: u32,
    pub peripheral: u32,
}

impl Default for SamplingRates {
    fn default() -> Self {
        SamplingRates {
            foveal: 1,
            transition: 4,
            peripheral: 16,
        }
    }
}

impl SamplingRates {
    pub const FULL: SamplingRates = SamplingRates {
        foveal: 1,
        transition: 1,
        peripheral: 1,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoveationConfig {
    /// Field of view of the foveal camera, degrees.
    pub delta_foveal: f64,
    /// Added to `delta_foveal` to get the outer edge of the transition ring.
    pub transition_offset: f64,
    /// Horizontal field of view covered by the image.
    pub total_fov: f64,
    pub sampling: SamplingRates,
}

impl Default for FoveationConfig {
    fn default() -> Self {
        FoveationConfig {
            delta_foveal: 60.0,
            transition_offset: 40.0,
            total_fov: 110.0,
            sampling: SamplingRates::default(),
        }
    }
}

impl FoveationConfig {
    pub fn with_delta(delta_foveal: f64) -> Self {
        FoveationConfig {
            delta_foveal,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FoveationError> {
        let bad = |m: &str| Err(FoveationError::InvalidConfig(m.to_string()));
        if !(self.total_fov > 0.0 && self.total_fov.is_finite()) {
            return bad("total_fov must be positive");
        }
        if !(self.delta_foveal > 0.0 && self.delta_foveal <= self.total_fov) {
            return bad("delta_foveal must lie in (0, total_fov]");
        }
        if !(self.transition_offset >= 0.0 && self.transition_offset.is_finite()) {
            return bad("transition_offset must be non-negative");
        }
        if self.delta_foveal + self.transition_offset > 2.0 * self.total_fov {
            return bad("delta_foveal + transition_offset exceeds 2 * total_fov");
        }
        for r in [
            self.sampling.foveal,
            self.sampling.transition,
            self.sampling.peripheral,
        ] {
            block_edge(r)?;
        }
        Ok(())
    }

    /// Transition field of view, clamped to the image field of view.
    pub fn delta_transition(&self) -> f64 {
        (self.delta_foveal + self.transition_offset).min(self.total_fov)
    }

    pub fn foveal_radius(&self) -> f64 {
        self.delta_foveal / 2.0
    }

    pub fn transition_radius(&self) -> f64 {
        self.delta_transition() / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Foveal,
    Transition,
    Peripheral,
}

impl Zone {
    /// Grey level used in the debug mask.
    pub fn grey(self) -> u8 {
        match self {
            Zone::Foveal => 255,
            Zone::Transition => 128,
            Zone::Peripheral => 0,
        }
    }
}

/// Per-pixel zone and foveal weight. The non-foveal weight is always
/// `1 - alpha` and is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMask {
    pub width: usize,
    pub height: usize,
    zones: Vec<Zone>,
    alpha: Vec<f64>,
}

impl ZoneMask {
    /// Uniform mask; mostly useful in tests.
    pub fn uniform(width: usize, height: usize, zone: Zone, alpha: f64) -> Self {
        ZoneMask {
            width,
            height,
            zones: vec![zone; width * height],
            alpha: vec![alpha; width * height],
        }
    }

    pub fn zone(&self, x: usize, y: usize) -> Zone {
        self.zones[y * self.width + x]
    }

    pub fn alpha(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.width + x]
    }

    pub fn beta(&self, x: usize, y: usize) -> f64 {
        1.0 - self.alpha(x, y)
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn count(&self, zone: Zone) -> usize {
        self.zones.iter().filter(|&&z| z == zone).count()
    }

    pub fn to_grey(&self) -> Vec<u8> {
        self.zones.iter().map(|z| z.grey()).collect()
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), FoveationError> {
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.to_grey())
            .expect("mask buffer matches dimensions");
        let file = std::fs::File::create(path)?;
        let mut enc = image::codecs::pnm::PnmEncoder::new(std::io::BufWriter::new(file))
            .with_subtype(image::codecs::pnm::PnmSubtype::Graymap(
                image::codecs::pnm::SampleEncoding::Binary,
            ));
        enc.encode(
            img.as_raw().as_slice(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
        )?;
        Ok(())
    }
}

/// RGB8 image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        Image {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: Vec<[u8; 3]>,
    ) -> Result<Self, FoveationError> {
        if pixels.len() != width * height {
            return Err(FoveationError::DimensionMismatch(
                width,
                height,
                pixels.len(),
                1,
            ));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        self.pixels[y * self.width + x] = c;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self, FoveationError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let dec = image::codecs::pnm::PnmDecoder::new(reader)?;
        let img = image::DynamicImage::from_decoder(dec)?.into_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img
            .pixels()
            .map(|p| p.0)
            .collect::<Vec<[u8; 3]>>();
        Image::from_pixels(w as usize, h as usize, pixels)
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<(), FoveationError> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let mut enc = image::codecs::pnm::PnmEncoder::new(&mut out).with_subtype(
            image::codecs::pnm::PnmSubtype::Pixmap(image::codecs::pnm::SampleEncoding::Binary),
        );
        enc.encode(
            raw.as_slice(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )?;
        out.flush()?;
        Ok(())
    }
}

fn check_gaze(gaze: (f64, f64), width: usize, height: usize) -> Result<(), FoveationError> {
    let (gx, gy) = gaze;
    let inside = gx.is_finite()
        && gy.is_finite()
        && gx >= 0.0
        && gy >= 0.0
        && gx < width as f64
        && gy < height as f64;
    if inside {
        Ok(())
    } else {
        Err(FoveationError::GazeOutOfImage(gx, gy, width, height))
    }
}

/// Visual angle between a pixel and the gaze point.
pub fn angular_distance(
    pixel: (f64, f64),
    gaze: (f64, f64),
    cfg: &FoveationConfig,
    dims: (usize, usize),
) -> Result<f64, FoveationError> {
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(FoveationError::EmptyImage);
    }
    check_gaze(gaze, w, h)?;
    Ok(pixel_distance_deg(pixel, gaze, cfg.total_fov / w as f64))
}

fn pixel_distance_deg(pixel: (f64, f64), gaze: (f64, f64), deg_per_px: f64) -> f64 {
    (pixel.0 - gaze.0).hypot(pixel.1 - gaze.1) * deg_per_px
}

/// Foveal blend weight at angular radius `r` from the gaze point.
pub fn alpha_weight(r: f64, cfg: &FoveationConfig) -> f64 {
    let inner = cfg.foveal_radius();
    let outer = cfg.transition_radius();
    if r <= inner {
        1.0
    } else if r >= outer {
        0.0
    } else {
        (outer - r) / (outer - inner)
    }
}

fn classify(r: f64, cfg: &FoveationConfig) -> Zone {
    if r <= cfg.foveal_radius() {
        Zone::Foveal
    } else if r < cfg.transition_radius() {
        Zone::Transition
    } else {
        Zone::Peripheral
    }
}

pub fn build_mask(
    gaze: (f64, f64),
    dims: (usize, usize),
    cfg: &FoveationConfig,
) -> Result<ZoneMask, FoveationError> {
    cfg.validate()?;
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(FoveationError::EmptyImage);
    }
    check_gaze(gaze, w, h)?;
    if cfg.delta_foveal >= cfg.total_fov {
        // the foveal zone spans the whole display
        return Ok(ZoneMask::uniform(w, h, Zone::Foveal, 1.0));
    }
    let dpp = cfg.total_fov / w as f64;
    let mut zones = Vec::with_capacity(w * h);
    let mut alpha = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let r = pixel_distance_deg((x as f64, y as f64), gaze, dpp);
            let zone = classify(r, cfg);
            zones.push(zone);
            alpha.push(match zone {
                Zone::Foveal => 1.0,
                Zone::Peripheral => 0.0,
                Zone::Transition => alpha_weight(r, cfg),
            });
        }
    }
    Ok(ZoneMask {
        width: w,
        height: h,
        zones,
        alpha,
    })
}

/// Square block edge in pixels for an N:1 ratio.
pub fn block_edge(ratio: u32) -> Result<usize, FoveationError> {
    match ratio {
        1 => Ok(1),
        4 => Ok(2),
        16 => Ok(4),
        other => Err(FoveationError::UnsupportedRatio(other)),
    }
}

/// Emulates N:1 shading: each `√N x √N` block takes its top-left pixel.
pub fn block_sample(img: &Image, ratio: u32) -> Result<Image, FoveationError> {
    let edge = block_edge(ratio)?;
    if edge == 1 {
        return Ok(img.clone());
    }
    Ok(Image::from_fn(img.width, img.height, |x, y| {
        img.get(x - x % edge, y - y % edge)
    }))
}

fn blend_channel(a: f64, f: u8, n: u8) -> u8 {
    let v = a * f64::from(f) + (1.0 - a) * f64::from(n);
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Blends the foveal and non-foveal renders through `mask`.
pub fn composite(
    foveal: &Image,
    nonfoveal: &Image,
    mask: &ZoneMask,
    cfg: &FoveationConfig,
) -> Result<Image, FoveationError> {
    if (foveal.width, foveal.height) != (nonfoveal.width, nonfoveal.height) {
        return Err(FoveationError::DimensionMismatch(
            foveal.width,
            foveal.height,
            nonfoveal.width,
            nonfoveal.height,
        ));
    }
    if (foveal.width, foveal.height) != (mask.width, mask.height) {
        return Err(FoveationError::DimensionMismatch(
            foveal.width,
            foveal.height,
            mask.width,
            mask.height,
        ));
    }
    let s = cfg.sampling;
    let fov_full = block_sample(foveal, s.foveal)?;
    let fov_trans = block_sample(foveal, s.transition)?;
    let non_trans = block_sample(nonfoveal, s.transition)?;
    let non_periph = block_sample(nonfoveal, s.peripheral)?;

    Ok(Image::from_fn(foveal.width, foveal.height, |x, y| {
        let a = mask.alpha(x, y);
        let (f, n) = match mask.zone(x, y) {
            Zone::Foveal => (fov_full.get(x, y), non_trans.get(x, y)),
            Zone::Transition => (fov_trans.get(x, y), non_trans.get(x, y)),
            Zone::Peripheral => (fov_trans.get(x, y), non_periph.get(x, y)),
        };
        [
            blend_channel(a, f[0], n[0]),
            blend_channel(a, f[1], n[1]),
            blend_channel(a, f[2], n[2]),
        ]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneFractions {
    pub foveal: f64,
    pub transition: f64,
    pub peripheral: f64,
}

/// Linear angular share of each zone across the field of view.
pub fn zone_fractions(cfg: &FoveationConfig) -> ZoneFractions {
    let foveal = cfg.delta_foveal / cfg.total_fov;
    let transition = (cfg.delta_transition() - cfg.delta_foveal) / cfg.total_fov;
    ZoneFractions {
        foveal,
        transition,
        peripheral: 1.0 - foveal - transition,
    }
}
