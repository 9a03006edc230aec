//! Separation of a single RGB image into body (diffuse) and interface
//! (specular) reflection.
//!
//! The pipeline divides radiance by illumination to get the mixed reflectance,
//! splits it into a neutral scalar (mixed neuter) and a zero-mean chromatic
//! triple (body essence), then demotes the neuter of bright pixels toward
//! neighbors with similar essence. [`synth`] renders scenes with known ground
//! truth for evaluating the result.
//!
//! ```
//! use bren::{separate, synth, Illumination, SeparationParams};
//!
//! let scene = synth::preset_scene(synth::Preset::Blob, 32, 32, 1)?;
//! let gt = synth::render(&scene);
//! let out = separate(&gt.composite, &scene.illumination(), &SeparationParams::default())?;
//! assert!(out.converged);
//! # Ok::<(), bren::Error>(())
//! ```

pub mod decompose;
mod error;
pub mod illumination;
pub mod metrics;
pub mod separation;
pub mod synth;
mod types;

pub use decompose::{
    compute_body_essence, compute_mixed_neuter, compute_mixed_reflectance, decompose,
    reconstruct_mixed_reflectance, reconstruct_radiance,
};
pub use error::{Error, Result};
pub use illumination::{estimate_illumination_gray_world, validate_user_illumination};
pub use metrics::{neuter_trace, psnr, rmse, EvalReport, TraceEntry};
pub use separation::{
    demotion_delta, demotion_step, essence_gradient, essence_weight, high_neuter_mask,
    neuter_gradients, resolve_threshold, separate, separate_observed, Connectivity,
    DemotionState, SeparationParams, SeparationResult, Threshold,
};
pub use types::{
    EssenceField, Grid, HighNeuterMask, Illumination, MixedReflectanceField, NeuterField,
    RadianceImage, Rgb, CHANNELS, EPS_ILLUM,
};
