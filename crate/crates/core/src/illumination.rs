//! Illumination from user input or a gray-world estimate.

use crate::error::Result;
use crate::types::{Illumination, RadianceImage, Rgb};

/// Gray-world estimate: the per-channel mean radiance over every pixel.
///
/// The raw mean is kept; separation is invariant to a global scale of `E`.
/// A channel whose mean falls below [`EPS_ILLUM`](crate::EPS_ILLUM) (a black
/// channel, say) is an error rather than an estimate.
pub fn estimate_illumination_gray_world(image: &RadianceImage) -> Result<Illumination> {
    let mut sum = [0.0f64; 3];
    for px in image.data() {
        for (acc, v) in sum.iter_mut().zip(px) {
            *acc += v;
        }
    }
    let n = image.len() as f64;
    Illumination::new(sum.map(|s| s / n))
}

pub fn validate_user_illumination(e: Rgb) -> Result<Illumination> {
    Illumination::new(e)
}
