//! Mixed reflectance, mixed neuter and body essence.
//!
//! The mixed reflectance `P = L / E` splits exactly into a spectrally neutral
//! scalar (the channel mean, called the mixed neuter) and a zero-mean triple
//! (the body essence). Interface reflection only ever moves the neuter, so the
//! essence identifies body color regardless of highlights.

use crate::error::Result;
use crate::types::{
    EssenceField, Grid, Illumination, MixedReflectanceField, NeuterField, RadianceImage, Rgb,
    CHANNELS,
};

/// `P^I = L^I / E^I` per pixel and channel.
///
/// `Illumination` already guarantees every channel is at least
/// [`EPS_ILLUM`](crate::EPS_ILLUM); callers holding a raw triple go through
/// [`Illumination::new`] which reports the offending channel.
pub fn compute_mixed_reflectance(
    image: &RadianceImage,
    illum: &Illumination,
) -> MixedReflectanceField {
    let e = illum.channels();
    MixedReflectanceField::from_grid_unchecked(
        image.map(|l| [l[0] / e[0], l[1] / e[1], l[2] / e[2]]),
    )
}

#[inline]
pub(crate) fn channel_mean(p: &Rgb) -> f64 {
    (p[0] + p[1] + p[2]) / CHANNELS as f64
}

/// Mixed neuter: the channel mean of `P` at every pixel.
pub fn compute_mixed_neuter(field: &MixedReflectanceField) -> NeuterField {
    NeuterField::from_grid_unchecked(field.map(channel_mean))
}

/// Body essence `S^I = P^I - neuter`.
///
/// Neutral pixels (all channels equal) get exactly zero essence; the rounded
/// channel mean of three equal values is not always that value.
pub fn compute_body_essence(
    field: &MixedReflectanceField,
    neuter: &NeuterField,
) -> Result<EssenceField> {
    let grid = field.zip_map(neuter.as_grid(), |p, &n| {
        if p[0] == p[1] && p[1] == p[2] {
            [0.0; CHANNELS]
        } else {
            [p[0] - n, p[1] - n, p[2] - n]
        }
    })?;
    Ok(EssenceField::from_grid_unchecked(grid))
}

/// `neuter + essence`, clamped at zero, plus whether any channel was clamped.
#[inline]
pub(crate) fn recombine(neuter: f64, essence: &Rgb) -> (Rgb, bool) {
    let mut clamped = false;
    let p = essence.map(|s| {
        let v = neuter + s;
        if v < 0.0 {
            clamped = true;
            0.0
        } else {
            v
        }
    });
    (p, clamped)
}

/// Inverse of the neuter/essence split. Negative channels, which only occur
/// after the neuter has been demoted below what the essence can carry, are
/// clamped to zero.
pub fn reconstruct_mixed_reflectance(
    neuter: &NeuterField,
    essence: &EssenceField,
) -> Result<MixedReflectanceField> {
    let grid: Grid<Rgb> = neuter.zip_map(essence.as_grid(), |&n, s| recombine(n, s).0)?;
    Ok(MixedReflectanceField::from_grid_unchecked(grid))
}

/// `L^I = P^I * E^I`.
pub fn reconstruct_radiance(field: &MixedReflectanceField, illum: &Illumination) -> RadianceImage {
    let e = illum.channels();
    RadianceImage::from_grid_unchecked(field.map(|p| [p[0] * e[0], p[1] * e[1], p[2] * e[2]]))
}

/// The full forward split of an image: `(P, neuter, essence)`.
pub fn decompose(
    image: &RadianceImage,
    illum: &Illumination,
) -> Result<(MixedReflectanceField, NeuterField, EssenceField)> {
    let p = compute_mixed_reflectance(image, illum);
    let neuter = compute_mixed_neuter(&p);
    let essence = compute_body_essence(&p, &neuter)?;
    Ok((p, neuter, essence))
}
