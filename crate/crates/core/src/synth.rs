//! Forward dichromatic renderer with exact ground truth.
//!
//! A scene is described by per-pixel body reflectance `S^I`, a spectrally flat
//! interface reflectance `S^N`, body shading `m_b`, specular coefficient `m_f`
//! and an illumination `E`. Rendering evaluates
//! `L^I = m_f S^N E^I + m_b S^I E^I` in closed form and keeps both terms, so
//! every separation can be scored against the true diffuse and specular parts.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decompose::{channel_mean, compute_body_essence, compute_mixed_neuter, compute_mixed_reflectance};
use crate::error::{Error, Result};
use crate::types::{EssenceField, Grid, Illumination, RadianceImage, Rgb, CHANNELS};

/// Near-red body color, dominated by a single channel.
pub const NEAR_RED: Rgb = [0.9, 0.03, 0.07];
/// Near-magenta body color with two comparable channels.
pub const NEAR_MAGENTA: Rgb = [0.47, 0.05, 0.48];

/// Illumination shared by all presets.
pub const PRESET_ILLUMINATION: Rgb = [0.95, 0.85, 0.7];

/// Presets need at least this many pixels per side.
pub const MIN_PRESET_SIZE: usize = 16;

const PRESET_INTERFACE_REFLECTANCE: f64 = 0.9;
/// Range of the peak interface reflectance `m_f * S^N` of a preset lobe.
const LOBE_PEAK: (f64, f64) = (0.12, 0.2);
/// Lobes are cut off at this many standard deviations.
const LOBE_CUTOFF_SIGMAS: f64 = 3.0;

const BLOB_BACKGROUND: Rgb = [0.1, 0.45, 0.2];
const BLOB_BACKGROUND_SHADING: f64 = 0.6;
const BLOB_DISC_SHADING: f64 = 0.8;

const BARS_COUNT: usize = 4;
const BARS_BRIGHT: Rgb = [0.85, 0.4, 0.05];
const BARS_DIM_SCALE: f64 = 0.25;

const RAMP_START: Rgb = [0.7, 0.2, 0.1];
const RAMP_END: Rgb = [0.1, 0.2, 0.7];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    body_reflectance: Grid<Rgb>,
    interface_reflectance: f64,
    shading: Grid<f64>,
    specular_coeff: Grid<f64>,
    illumination: Illumination,
}

fn check_unit(index: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidValue { index, value })
    }
}

fn check_coeff(index: usize, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue { index, value })
    }
}

impl SyntheticScene {
    pub fn new(
        body_reflectance: Grid<Rgb>,
        interface_reflectance: f64,
        shading: Grid<f64>,
        specular_coeff: Grid<f64>,
        illumination: Illumination,
    ) -> Result<Self> {
        body_reflectance.check_same_dims(&shading)?;
        body_reflectance.check_same_dims(&specular_coeff)?;
        check_unit(0, interface_reflectance)?;
        for (i, &v) in body_reflectance.data().iter().flatten().enumerate() {
            check_unit(i, v)?;
        }
        for (i, &v) in shading.data().iter().enumerate() {
            check_coeff(i, v)?;
        }
        for (i, &v) in specular_coeff.data().iter().enumerate() {
            check_coeff(i, v)?;
        }
        Ok(Self {
            body_reflectance,
            interface_reflectance,
            shading,
            specular_coeff,
            illumination,
        })
    }

    /// Fully random scene: every per-pixel field, `S^N` and `E` drawn from `seed`.
    pub fn random(width: usize, height: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let illumination = Illumination::new([0; CHANNELS].map(|_| rng.gen_range(0.05..1.0)))?;
        let interface_reflectance = rng.gen::<f64>();
        let body = Grid::from_fn(width, height, |_, _| [0; CHANNELS].map(|_| rng.gen::<f64>()))?;
        let shading = Grid::from_fn(width, height, |_, _| rng.gen::<f64>())?;
        let specular = Grid::from_fn(width, height, |_, _| rng.gen::<f64>())?;
        Self::new(body, interface_reflectance, shading, specular, illumination)
    }

    /// The same scene with a different specular coefficient field.
    pub fn with_specular_coeff(&self, specular_coeff: Grid<f64>) -> Result<Self> {
        Self::new(
            self.body_reflectance.clone(),
            self.interface_reflectance,
            self.shading.clone(),
            specular_coeff,
            self.illumination,
        )
    }

    /// The same scene with a different shading field.
    pub fn with_shading(&self, shading: Grid<f64>) -> Result<Self> {
        Self::new(
            self.body_reflectance.clone(),
            self.interface_reflectance,
            shading,
            self.specular_coeff.clone(),
            self.illumination,
        )
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.body_reflectance.dimensions()
    }

    pub fn body_reflectance(&self) -> &Grid<Rgb> {
        &self.body_reflectance
    }

    pub fn interface_reflectance(&self) -> f64 {
        self.interface_reflectance
    }

    pub fn shading(&self) -> &Grid<f64> {
        &self.shading
    }

    pub fn specular_coeff(&self) -> &Grid<f64> {
        &self.specular_coeff
    }

    pub fn illumination(&self) -> Illumination {
        self.illumination
    }
}

/// A random `m_f` field in `[0, 1)`.
pub fn random_specular_coeff(width: usize, height: usize, seed: u64) -> Result<Grid<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(width, height, |_, _| rng.gen::<f64>())
}

/// Rendered composite plus every latent quantity of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub composite: RadianceImage,
    /// `m_b S^I E^I`
    pub diffuse_gt: RadianceImage,
    /// `m_f S^N E^I`
    pub specular_gt: RadianceImage,
    /// Interface reflectance `m_f S^N` per pixel.
    pub interface_reflectance: Grid<f64>,
    /// Body reflectance `m_b S^I` per pixel.
    pub body_reflectance: Grid<Rgb>,
    /// Channel mean of the body reflectance.
    pub body_neuter: Grid<f64>,
    pub body_essence: EssenceField,
}

pub fn render(scene: &SyntheticScene) -> GroundTruth {
    let (width, height) = scene.dimensions();
    let e = scene.illumination.channels();
    let s_n = scene.interface_reflectance;

    let interface = scene.specular_coeff.map(|&m_f| m_f * s_n);
    let body = scene
        .body_reflectance
        .zip_map(&scene.shading, |s, &m_b| s.map(|v| m_b * v))
        .expect("scene dimensions are consistent");
    let body_neuter = body.map(channel_mean);
    let essence = body
        .zip_map(&body_neuter, |b, &eta| b.map(|v| v - eta))
        .expect("same grid");

    let diffuse = body.map(|b| [b[0] * e[0], b[1] * e[1], b[2] * e[2]]);
    let specular = interface.map(|&f| [f * e[0], f * e[1], f * e[2]]);
    let composite = diffuse
        .zip_map(&specular, |d, s| [d[0] + s[0], d[1] + s[1], d[2] + s[2]])
        .expect("same grid");

    let image = |g: Grid<Rgb>| RadianceImage::from_grid(g).expect("validated scene renders nonnegative radiance");
    debug_assert_eq!(composite.dimensions(), (width, height));
    GroundTruth {
        composite: image(composite),
        diffuse_gt: image(diffuse),
        specular_gt: image(specular),
        interface_reflectance: interface,
        body_reflectance: body,
        body_neuter,
        body_essence: EssenceField::from_grid_unchecked(essence),
    }
}

/// Largest deviations between observable and latent quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaReport {
    /// `max |neuter - (interface reflectance + body neuter)|`
    pub max_neuter_deviation: f64,
    /// `max |observable essence - ground-truth essence|` over channels.
    pub max_essence_deviation: f64,
}

impl LemmaReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_neuter_deviation.max(self.max_essence_deviation)
    }
}

/// Checks, on every pixel, that the mixed neuter observed from the composite
/// equals interface reflectance plus body neuter, and that the observable
/// essence equals the latent one.
pub fn verify_lemmas(gt: &GroundTruth, illum: &Illumination) -> Result<LemmaReport> {
    gt.composite.check_same_dims(&gt.interface_reflectance)?;
    gt.composite.check_same_dims(&gt.body_neuter)?;
    gt.composite.check_same_dims(gt.body_essence.as_grid())?;

    let p = compute_mixed_reflectance(&gt.composite, illum);
    let neuter = compute_mixed_neuter(&p);
    let essence = compute_body_essence(&p, &neuter)?;

    let mut report = LemmaReport {
        max_neuter_deviation: 0.0,
        max_essence_deviation: 0.0,
    };
    for (((&n, &f), &eta), (s, s_gt)) in neuter
        .data()
        .iter()
        .zip(gt.interface_reflectance.data())
        .zip(gt.body_neuter.data())
        .zip(essence.data().iter().zip(gt.body_essence.data()))
    {
        report.max_neuter_deviation = report.max_neuter_deviation.max((n - (f + eta)).abs());
        for c in 0..CHANNELS {
            report.max_essence_deviation = report.max_essence_deviation.max((s[c] - s_gt[c]).abs());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Colored discs on a background, each with a specular lobe inside it.
    Blob,
    /// Alternating bars whose body colors are proportional.
    Bars,
    /// Smooth horizontal body-color gradient under a lobe.
    Ramp,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Blob => "blob",
            Preset::Bars => "bars",
            Preset::Ramp => "ramp",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blob" => Ok(Preset::Blob),
            "bars" => Ok(Preset::Bars),
            "ramp" => Ok(Preset::Ramp),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// Isotropic Gaussian bump in `m_f`, zero beyond the cutoff radius.
#[derive(Debug, Clone, Copy)]
struct Lobe {
    cx: f64,
    cy: f64,
    sigma: f64,
    peak: f64,
}

impl Lobe {
    fn value(&self, x: usize, y: usize) -> f64 {
        let dx = x as f64 - self.cx;
        let dy = y as f64 - self.cy;
        let r2 = dx * dx + dy * dy;
        let cutoff = LOBE_CUTOFF_SIGMAS * self.sigma;
        if r2 > cutoff * cutoff {
            0.0
        } else {
            self.peak * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
        }
    }
}

fn lobe_field(width: usize, height: usize, lobes: &[Lobe]) -> Result<Grid<f64>> {
    Grid::from_fn(width, height, |x, y| lobes.iter().map(|l| l.value(x, y)).sum())
}

fn random_peak(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(LOBE_PEAK.0..LOBE_PEAK.1) / PRESET_INTERFACE_REFLECTANCE
}

fn check_preset_size(width: usize, height: usize) -> Result<()> {
    if width < MIN_PRESET_SIZE || height < MIN_PRESET_SIZE {
        Err(Error::SizeTooSmall {
            width,
            height,
            min: MIN_PRESET_SIZE,
        })
    } else {
        Ok(())
    }
}

pub fn preset_scene(preset: Preset, width: usize, height: usize, seed: u64) -> Result<SyntheticScene> {
    match preset {
        Preset::Blob => blob_scene(width, height, seed, &[NEAR_RED, NEAR_MAGENTA]),
        Preset::Bars => bars_scene(width, height, seed),
        Preset::Ramp => ramp_scene(width, height, seed),
    }
}

/// One disc per color, side by side on a green background. Each disc holds a
/// single lobe whose cutoff circle stays inside the disc, so every disc keeps
/// a ring of lobe-free pixels with its exact body color.
pub fn blob_scene(width: usize, height: usize, seed: u64, colors: &[Rgb]) -> Result<SyntheticScene> {
    check_preset_size(width, height)?;
    if colors.is_empty() {
        return Err(Error::InvalidParameter("blob scene needs at least one color".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = width as f64 / colors.len() as f64;
    let radius = 0.38 * cell.min(height as f64);

    let mut discs = Vec::with_capacity(colors.len());
    let mut lobes = Vec::with_capacity(colors.len());
    for k in 0..colors.len() {
        let cx = (k as f64 + 0.5) * cell + rng.gen_range(-0.05..0.05) * radius;
        let cy = 0.5 * height as f64 + rng.gen_range(-0.05..0.05) * radius;
        discs.push((cx, cy));

        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let offset = rng.gen_range(0.0..0.3) * radius;
        lobes.push(Lobe {
            cx: cx + offset * angle.cos(),
            cy: cy + offset * angle.sin(),
            sigma: radius / 7.0,
            peak: random_peak(&mut rng),
        });
    }

    let inside = |x: usize, y: usize| {
        discs.iter().position(|&(cx, cy)| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            dx * dx + dy * dy <= radius * radius
        })
    };
    let body = Grid::from_fn(width, height, |x, y| inside(x, y).map_or(BLOB_BACKGROUND, |k| colors[k]))?;
    let shading = Grid::from_fn(width, height, |x, y| {
        inside(x, y).map_or(BLOB_BACKGROUND_SHADING, |_| BLOB_DISC_SHADING)
    })?;
    SyntheticScene::new(
        body,
        PRESET_INTERFACE_REFLECTANCE,
        shading,
        lobe_field(width, height, &lobes)?,
        Illumination::new(PRESET_ILLUMINATION)?,
    )
}

/// Vertical bars alternating a bright color and the same color scaled down.
/// Lobes sit only on the bright bars, clear of the bar edges.
fn bars_scene(width: usize, height: usize, seed: u64) -> Result<SyntheticScene> {
    check_preset_size(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bar = width as f64 / BARS_COUNT as f64;
    let dim = BARS_BRIGHT.map(|v| v * BARS_DIM_SCALE);
    let bar_of = |x: usize| ((x as f64 / bar) as usize).min(BARS_COUNT - 1);

    let sigma = bar.min(height as f64) / 10.0;
    let lobes: Vec<Lobe> = (0..BARS_COUNT)
        .step_by(2)
        .map(|k| Lobe {
            cx: (k as f64 + 0.5) * bar + rng.gen_range(-0.05..0.05) * bar,
            cy: rng.gen_range(0.3..0.7) * height as f64,
            sigma,
            peak: random_peak(&mut rng),
        })
        .collect();

    let body = Grid::from_fn(width, height, |x, _| if bar_of(x) % 2 == 0 { BARS_BRIGHT } else { dim })?;
    SyntheticScene::new(
        body,
        PRESET_INTERFACE_REFLECTANCE,
        Grid::from_vec(width, height, vec![1.0; width * height])?,
        lobe_field(width, height, &lobes)?,
        Illumination::new(PRESET_ILLUMINATION)?,
    )
}

/// Body color blends linearly from left to right; the endpoints share the
/// same channel mean, so the body neuter is flat while the essence varies.
fn ramp_scene(width: usize, height: usize, seed: u64) -> Result<SyntheticScene> {
    check_preset_size(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let short = width.min(height) as f64;
    let lobe = Lobe {
        cx: 0.5 * width as f64 + rng.gen_range(-0.05..0.05) * short,
        cy: 0.5 * height as f64 + rng.gen_range(-0.05..0.05) * short,
        sigma: short / 10.0,
        peak: random_peak(&mut rng),
    };
    let body = Grid::from_fn(width, height, |x, _| {
        let t = x as f64 / (width - 1) as f64;
        [0, 1, 2].map(|c| (1.0 - t) * RAMP_START[c] + t * RAMP_END[c])
    })?;
    SyntheticScene::new(
        body,
        PRESET_INTERFACE_REFLECTANCE,
        Grid::from_vec(width, height, vec![1.0; width * height])?,
        lobe_field(width, height, &[lobe])?,
        Illumination::new(PRESET_ILLUMINATION)?,
    )
}
