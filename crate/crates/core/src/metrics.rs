//! Error metrics against ground truth and demotion diagnostics.
//!
//! Everything is computed in linear space with a peak of `1.0`.

use crate::error::{Error, Result};
use crate::separation::DemotionState;
use crate::types::{HighNeuterMask, RadianceImage, CHANNELS};

/// Sum of squared channel differences, worst channel difference and pixel
/// count over the selected pixels.
fn accumulate(a: &RadianceImage, b: &RadianceImage, mask: Option<&HighNeuterMask>) -> Result<(f64, f64, usize)> {
    a.check_same_dims(b)?;
    if let Some(m) = mask {
        a.check_same_dims(m)?;
    }
    let mut sum_sq = 0.0;
    let mut max_abs = 0.0f64;
    let mut pixels = 0;
    for (i, (pa, pb)) in a.data().iter().zip(b.data()).enumerate() {
        if mask.is_some_and(|m| !m.data()[i]) {
            continue;
        }
        pixels += 1;
        for c in 0..CHANNELS {
            let d = pa[c] - pb[c];
            sum_sq += d * d;
            max_abs = max_abs.max(d.abs());
        }
    }
    if pixels == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((sum_sq, max_abs, pixels))
}

fn mse_from(sum_sq: f64, pixels: usize) -> f64 {
    sum_sq / (pixels * CHANNELS) as f64
}

/// Root-mean-square channel difference over the masked pixels, or all pixels
/// when `mask` is `None`.
pub fn rmse(a: &RadianceImage, b: &RadianceImage, mask: Option<&HighNeuterMask>) -> Result<f64> {
    let (sum_sq, _, pixels) = accumulate(a, b, mask)?;
    Ok(mse_from(sum_sq, pixels).sqrt())
}

/// `10 log10(1 / mse)`; `f64::INFINITY` for identical images.
pub fn psnr(a: &RadianceImage, b: &RadianceImage) -> Result<f64> {
    let (sum_sq, _, pixels) = accumulate(a, b, None)?;
    Ok(psnr_from_mse(mse_from(sum_sq, pixels)))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub rmse: f64,
    /// Infinite when the images agree exactly.
    pub psnr: f64,
    pub max_abs_err: f64,
    pub clamp_count: usize,
    pub compared_pixels: usize,
}

impl EvalReport {
    /// Compares `a` with `b`. `clamp_count` starts at zero; callers that ran a
    /// separation fill it from the result.
    pub fn compare(a: &RadianceImage, b: &RadianceImage, mask: Option<&HighNeuterMask>) -> Result<Self> {
        let (sum_sq, max_abs_err, compared_pixels) = accumulate(a, b, mask)?;
        let mse = mse_from(sum_sq, compared_pixels);
        Ok(Self {
            rmse: mse.sqrt(),
            psnr: psnr_from_mse(mse),
            max_abs_err,
            clamp_count: 0,
            compared_pixels,
        })
    }

    pub fn with_clamp_count(mut self, clamp_count: usize) -> Self {
        self.clamp_count = clamp_count;
        self
    }
}

/// Statistics of one demotion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Largest absolute neuter change of any pixel.
    pub max_change: f64,
    pub changed: usize,
}

impl TraceEntry {
    pub fn between(prev: &DemotionState, next: &DemotionState) -> Result<Self> {
        prev.neuter().check_same_dims(next.neuter())?;
        let max_change = prev
            .neuter()
            .data()
            .iter()
            .zip(next.neuter().data())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(Self {
            iteration: next.iteration(),
            max_change,
            changed: next.changed(),
        })
    }
}

/// One entry per consecutive pair of states.
pub fn neuter_trace(states: &[DemotionState]) -> Result<Vec<TraceEntry>> {
    if states.is_empty() {
        return Err(Error::EmptySequence);
    }
    states
        .windows(2)
        .map(|w| TraceEntry::between(&w[0], &w[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::{demotion_step, high_neuter_mask, SeparationParams};
    use crate::types::{EssenceField, NeuterField};

    fn px(p: [f64; 3]) -> RadianceImage {
        RadianceImage::new(1, 1, vec![p]).unwrap()
    }

    #[test]
    fn rmse_examples() {
        let a = px([0.5, 0.5, 0.5]);
        assert_eq!(rmse(&a, &a, None).unwrap(), 0.0);
        let b = px([0.5, 0.5, 0.8]);
        let r = rmse(&a, &b, None).unwrap();
        assert!((r - (0.09f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r - 0.173205).abs() < 1e-6);
        let m = HighNeuterMask::new(1, 1, vec![true]).unwrap();
        assert_eq!(rmse(&a, &b, Some(&m)).unwrap(), r);
    }

    #[test]
    fn rmse_errors() {
        let a = px([0.1; 3]);
        let b = RadianceImage::new(2, 1, vec![[0.1; 3]; 2]).unwrap();
        assert!(matches!(rmse(&a, &b, None), Err(Error::DimensionMismatch { .. })));
        let none = HighNeuterMask::new(1, 1, vec![false]).unwrap();
        assert_eq!(rmse(&a, &a, Some(&none)), Err(Error::EmptyMask));
        let wide = HighNeuterMask::new(2, 1, vec![true; 2]).unwrap();
        assert!(rmse(&a, &a, Some(&wide)).is_err());
    }

    #[test]
    fn psnr_examples() {
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
        assert_eq!(psnr_from_mse(1.0), 0.0);
        let a = px([0.2, 0.4, 0.6]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        // every channel off by 0.1 gives mse 0.01
        let b = px([0.3, 0.5, 0.7]);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn report_fields() {
        let a = RadianceImage::new(2, 1, vec![[0.0; 3], [0.5; 3]]).unwrap();
        let b = RadianceImage::new(2, 1, vec![[0.0; 3], [0.5, 0.5, 0.75]]).unwrap();
        let r = EvalReport::compare(&a, &b, None).unwrap().with_clamp_count(3);
        assert_eq!(r.compared_pixels, 2);
        assert_eq!(r.max_abs_err, 0.25);
        assert_eq!(r.clamp_count, 3);
        assert!((r.rmse - (0.0625f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    fn run(neuter: Vec<f64>, width: usize) -> Vec<DemotionState> {
        let n = neuter.len();
        let field = NeuterField::new(width, n / width, neuter).unwrap();
        let mask = high_neuter_mask(&field, -1.0);
        let essence = EssenceField::new(width, n / width, vec![[0.0; 3]; n]).unwrap();
        let mut states = vec![DemotionState::new(field, essence, mask).unwrap()];
        let params = SeparationParams::default();
        loop {
            let next = demotion_step(states.last().unwrap(), &params);
            let done = next.changed() == 0;
            states.push(next);
            if done {
                break;
            }
        }
        states
    }

    #[test]
    fn trace_of_converged_run() {
        let states = run(vec![0.9, 0.7, 0.2, 0.5], 4);
        let trace = neuter_trace(&states).unwrap();
        assert_eq!(trace.len(), states.len() - 1);
        assert_eq!(trace.last().unwrap().changed, 0);
        assert_eq!(trace.last().unwrap().max_change, 0.0);
        assert!((trace[0].max_change - 0.5).abs() < 1e-15);
        for w in states.windows(2) {
            for (a, b) in w[0].neuter().data().iter().zip(w[1].neuter().data()) {
                assert!(b <= a);
            }
        }
    }

    #[test]
    fn trace_of_constant_field() {
        let states = run(vec![0.4; 6], 3);
        let trace = neuter_trace(&states).unwrap();
        assert!(trace.iter().all(|t| t.max_change == 0.0));
    }

    #[test]
    fn trace_needs_states() {
        assert_eq!(neuter_trace(&[]), Err(Error::EmptySequence));
    }
}
