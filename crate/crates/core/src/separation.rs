//! Highlight removal by neuter demotion.
//!
//! Pixels whose initial mixed neuter exceeds a threshold are repeatedly pulled
//! toward neighbors with a smaller neuter. Each candidate neighbor's neuter
//! gradient is weighted by `exp(-lambda * |dS|^2)`, where `dS` is the essence
//! difference, and the most negative weighted gradient becomes the step. Body
//! essence never changes, so once the neuter settles the diffuse reflectance is
//! `neuter + essence` and the removed neuter is the specular part.
//!
//! Steps are synchronous: every delta of step `k` reads the same snapshot, so
//! the result does not depend on pixel order or thread count.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::decompose::{decompose, recombine};
use crate::error::{Error, Result};
use crate::types::{
    EssenceField, Grid, HighNeuterMask, Illumination, NeuterField, RadianceImage, Rgb,
};

/// Neighbor offsets `(dx, dy)` in enumeration order NW, N, NE, W, E, SW, S, SE.
/// Ties in the weighted minimum go to the earliest entry.
const EIGHT_NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// N, W, E, S.
const FOUR_NEIGHBORS: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &FOUR_NEIGHBORS,
            Connectivity::Eight => &EIGHT_NEIGHBORS,
        }
    }

    pub fn count(self) -> usize {
        self.offsets().len()
    }
}

impl TryFrom<u32> for Connectivity {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParameter(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u32 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("connectivity must be 4 or 8, got `{s}`")))?;
        Connectivity::try_from(n)
    }
}

/// Neuter threshold: a fixed value or the image mean of the initial neuter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    Value(f64),
    #[default]
    Mean,
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mean") {
            return Ok(Threshold::Mean);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Threshold::Value(v)),
            _ => Err(Error::InvalidParameter(format!(
                "tau must be a nonnegative number or `mean`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationParams {
    pub tau: Threshold,
    /// Gaussian falloff on squared essence distance.
    pub lambda: f64,
    pub max_iters: usize,
    /// A pixel counts as changed when its neuter moves by more than this.
    pub epsilon: f64,
    pub connectivity: Connectivity,
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self {
            tau: Threshold::Mean,
            lambda: 100.0,
            max_iters: 500,
            epsilon: 1e-6,
            connectivity: Connectivity::Eight,
        }
    }
}

impl SeparationParams {
    pub fn validate(&self) -> Result<()> {
        if let Threshold::Value(t) = self.tau {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParameter(format!("tau must be >= 0, got {t}")));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

pub fn resolve_threshold(neuter: &NeuterField, tau: Threshold) -> f64 {
    match tau {
        Threshold::Value(t) => t,
        Threshold::Mean => neuter.mean(),
    }
}

/// Marks pixels with neuter strictly above `tau`.
pub fn high_neuter_mask(neuter: &NeuterField, tau: f64) -> HighNeuterMask {
    HighNeuterMask::from_grid_unchecked(neuter.map(|&n| n > tau))
}

#[inline]
fn neighbor(width: usize, height: usize, x: usize, y: usize, (dx, dy): (isize, isize)) -> Option<usize> {
    let nx = x.checked_add_signed(dx)?;
    let ny = y.checked_add_signed(dy)?;
    (nx < width && ny < height).then(|| ny * width + nx)
}

/// Neuter gradients `neuter(p_i) - neuter(p)` toward each in-bounds neighbor,
/// as `(neighbor index, gradient)` in enumeration order.
pub fn neuter_gradients(
    neuter: &NeuterField,
    (x, y): (usize, usize),
    connectivity: Connectivity,
) -> Result<Vec<(usize, f64)>> {
    let i = neuter.check_point(x, y)?;
    let values = neuter.data();
    Ok(connectivity
        .offsets()
        .iter()
        .filter_map(|&off| neighbor(neuter.width(), neuter.height(), x, y, off))
        .map(|j| (j, values[j] - values[i]))
        .collect())
}

#[inline]
fn sub(a: &Rgb, b: &Rgb) -> Rgb {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn norm_sq(v: &Rgb) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Essence difference `essence(q) - essence(p)`.
pub fn essence_gradient(essence: &EssenceField, p: (usize, usize), q: (usize, usize)) -> Result<Rgb> {
    let i = essence.check_point(p.0, p.1)?;
    let j = essence.check_point(q.0, q.1)?;
    Ok(sub(&essence.data()[j], &essence.data()[i]))
}

/// Gaussian essence-similarity weight; lies in `(0, 1]` until it underflows.
#[inline]
pub fn essence_weight(lambda: f64, essence_dist_sq: f64) -> f64 {
    (-lambda * essence_dist_sq).exp()
}

/// Weighted-minimum neuter step at pixel `i`, read from one snapshot.
#[inline]
fn delta_at(
    neuter: &[f64],
    essence: &[Rgb],
    width: usize,
    height: usize,
    i: usize,
    offsets: &[(isize, isize)],
    lambda: f64,
) -> f64 {
    let (x, y) = (i % width, i / width);
    let here = neuter[i];
    let s = &essence[i];
    // the empty eligible set leaves the pixel where it is
    let mut best = 0.0;
    for &off in offsets {
        let Some(j) = neighbor(width, height, x, y, off) else {
            continue;
        };
        let grad = neuter[j] - here;
        if grad < 0.0 {
            let weighted = essence_weight(lambda, norm_sq(&sub(&essence[j], s))) * grad;
            if weighted < best {
                best = weighted;
            }
        }
    }
    best
}

/// One iterate of the demotion: the current neuter, the frozen essence and mask.
#[derive(Debug, Clone)]
pub struct DemotionState {
    k: usize,
    neuter: NeuterField,
    essence: Arc<EssenceField>,
    mask: Arc<HighNeuterMask>,
    changed: usize,
}

impl DemotionState {
    pub fn new(neuter: NeuterField, essence: EssenceField, mask: HighNeuterMask) -> Result<Self> {
        neuter.check_same_dims(essence.as_grid())?;
        neuter.check_same_dims(mask.as_grid())?;
        Ok(Self {
            k: 0,
            neuter,
            essence: Arc::new(essence),
            mask: Arc::new(mask),
            changed: 0,
        })
    }

    /// Iteration counter; `0` for the initial state.
    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn neuter(&self) -> &NeuterField {
        &self.neuter
    }

    pub fn essence(&self) -> &EssenceField {
        &self.essence
    }

    pub fn mask(&self) -> &HighNeuterMask {
        &self.mask
    }

    /// Pixels whose neuter moved by more than epsilon in the step that
    /// produced this state. Always `0` for the initial state.
    pub fn changed(&self) -> usize {
        self.changed
    }
}

/// The neuter step for pixel `p` in `state`; `0` when no neighbor has a
/// smaller neuter. Meaningful for masked pixels, which are the only ones
/// [`demotion_step`] moves.
pub fn demotion_delta(p: (usize, usize), state: &DemotionState, params: &SeparationParams) -> Result<f64> {
    let neuter = state.neuter();
    let i = neuter.check_point(p.0, p.1)?;
    Ok(delta_at(
        neuter.data(),
        state.essence().data(),
        neuter.width(),
        neuter.height(),
        i,
        params.connectivity.offsets(),
        params.lambda,
    ))
}

/// Synchronous update of every masked pixel from the `k` snapshot.
pub fn demotion_step(state: &DemotionState, params: &SeparationParams) -> DemotionState {
    let (width, height) = state.neuter.dimensions();
    let current = state.neuter.data();
    let essence = state.essence.data();
    let mask = state.mask.data();
    let offsets = params.connectivity.offsets();

    let next: Vec<f64> = (0..current.len())
        .into_par_iter()
        .map(|i| {
            if mask[i] {
                current[i] + delta_at(current, essence, width, height, i, offsets, params.lambda)
            } else {
                current[i]
            }
        })
        .collect();
    let changed = next
        .par_iter()
        .zip(current.par_iter())
        .filter(|(a, b)| (*a - *b).abs() > params.epsilon)
        .count();

    DemotionState {
        k: state.k + 1,
        neuter: NeuterField::from_grid_unchecked(
            Grid::from_vec(width, height, next).expect("dimensions preserved"),
        ),
        essence: Arc::clone(&state.essence),
        mask: Arc::clone(&state.mask),
        changed,
    }
}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    /// Body (diffuse) radiance.
    pub diffuse: RadianceImage,
    /// Interface (specular) radiance.
    pub specular: RadianceImage,
    pub iterations_run: usize,
    /// `true` when the last step changed no pixel by more than epsilon.
    pub converged: bool,
    pub initial_neuter: NeuterField,
    pub final_neuter: NeuterField,
    pub essence: EssenceField,
    pub mask: HighNeuterMask,
    pub tau: f64,
    /// Pixels where reconstruction clamped a negative value to zero.
    pub clamp_count: usize,
}

/// Runs the full separation.
pub fn separate(image: &RadianceImage, illum: &Illumination, params: &SeparationParams) -> Result<SeparationResult> {
    separate_observed(image, illum, params, |_| {})
}

/// [`separate`], calling `observe` on the initial state and after every step.
pub fn separate_observed(
    image: &RadianceImage,
    illum: &Illumination,
    params: &SeparationParams,
    mut observe: impl FnMut(&DemotionState),
) -> Result<SeparationResult> {
    params.validate()?;
    let (_, initial_neuter, essence) = decompose(image, illum)?;
    let tau = resolve_threshold(&initial_neuter, params.tau);
    let mask = high_neuter_mask(&initial_neuter, tau);

    let mut state = DemotionState::new(initial_neuter.clone(), essence, mask)?;
    observe(&state);
    let mut converged = false;
    while state.k < params.max_iters {
        state = demotion_step(&state, params);
        observe(&state);
        if state.changed == 0 {
            converged = true;
            break;
        }
    }

    let e = illum.channels();
    let mut clamp_count = 0;
    let mut diffuse = Vec::with_capacity(image.len());
    let mut specular = Vec::with_capacity(image.len());
    for (((l, &n0), &n), s) in image
        .data()
        .iter()
        .zip(initial_neuter.data())
        .zip(state.neuter.data())
        .zip(state.essence.data())
    {
        if n == n0 {
            // untouched pixels carry no removed interface reflection
            diffuse.push(*l);
            specular.push([0.0; 3]);
            continue;
        }
        let (p, mut clamped) = recombine(n, s);
        let lb = [p[0] * e[0], p[1] * e[1], p[2] * e[2]];
        let lf = [0, 1, 2].map(|c| {
            let v = l[c] - lb[c];
            if v < 0.0 {
                clamped = true;
                0.0
            } else {
                v
            }
        });
        clamp_count += usize::from(clamped);
        diffuse.push(lb);
        specular.push(lf);
    }

    let (width, height) = image.dimensions();
    let DemotionState {
        k,
        neuter,
        essence,
        mask,
        ..
    } = state;
    Ok(SeparationResult {
        diffuse: RadianceImage::new(width, height, diffuse)?,
        specular: RadianceImage::new(width, height, specular)?,
        iterations_run: k,
        converged,
        initial_neuter,
        final_neuter: neuter,
        essence: Arc::unwrap_or_clone(essence),
        mask: Arc::unwrap_or_clone(mask),
        tau,
        clamp_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neuter_field(width: usize, height: usize, data: Vec<f64>) -> NeuterField {
        NeuterField::new(width, height, data).unwrap()
    }

    fn state_with(width: usize, height: usize, neuter: Vec<f64>, essence: Vec<Rgb>) -> DemotionState {
        let n = neuter_field(width, height, neuter);
        let mask = high_neuter_mask(&n, -1.0);
        DemotionState::new(n, EssenceField::new(width, height, essence).unwrap(), mask).unwrap()
    }

    #[test]
    fn threshold_resolution() {
        let n = neuter_field(2, 1, vec![0.2, 0.4]);
        assert_eq!(resolve_threshold(&n, Threshold::Value(0.4)), 0.4);
        assert!((resolve_threshold(&n, Threshold::Mean) - 0.3).abs() < 1e-15);
        let uniform = neuter_field(3, 3, vec![0.25; 9]);
        assert_eq!(resolve_threshold(&uniform, Threshold::Mean), 0.25);
    }

    #[test]
    fn threshold_parsing() {
        assert_eq!("mean".parse::<Threshold>().unwrap(), Threshold::Mean);
        assert_eq!("MEAN".parse::<Threshold>().unwrap(), Threshold::Mean);
        assert_eq!("0.4".parse::<Threshold>().unwrap(), Threshold::Value(0.4));
        assert!("-1".parse::<Threshold>().is_err());
        assert!("abc".parse::<Threshold>().is_err());
    }

    #[test]
    fn connectivity_parsing() {
        assert_eq!("8".parse::<Connectivity>().unwrap(), Connectivity::Eight);
        assert_eq!("4".parse::<Connectivity>().unwrap(), Connectivity::Four);
        assert!("6".parse::<Connectivity>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SeparationParams::default().validate().is_ok());
        let bad = [
            SeparationParams { lambda: -1.0, ..Default::default() },
            SeparationParams { max_iters: 0, ..Default::default() },
            SeparationParams { epsilon: 0.0, ..Default::default() },
            SeparationParams { epsilon: -1e-3, ..Default::default() },
            SeparationParams { tau: Threshold::Value(-0.1), ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn mask_is_strict() {
        let n = neuter_field(3, 1, vec![0.5, 0.3, 0.1]);
        let m = high_neuter_mask(&n, 0.3);
        assert_eq!(m.data(), &[true, false, false]);
        let zeros = neuter_field(2, 2, vec![0.0; 4]);
        assert_eq!(high_neuter_mask(&zeros, 0.0).count(), 0);
    }

    #[test]
    fn gradients_interior_and_corner() {
        let n = neuter_field(3, 3, vec![0.4; 9]);
        let g = neuter_gradients(&n, (1, 1), Connectivity::Eight).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.iter().all(|&(_, d)| d == 0.0));
        assert_eq!(neuter_gradients(&n, (0, 0), Connectivity::Eight).unwrap().len(), 3);
        assert_eq!(neuter_gradients(&n, (2, 2), Connectivity::Four).unwrap().len(), 2);
        assert_eq!(neuter_gradients(&n, (1, 0), Connectivity::Eight).unwrap().len(), 5);
        assert!(matches!(
            neuter_gradients(&n, (3, 0), Connectivity::Eight),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn gradient_sign_and_order() {
        let n = neuter_field(2, 1, vec![0.8, 0.5]);
        let g = neuter_gradients(&n, (0, 0), Connectivity::Eight).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].0, 1);
        assert!((g[0].1 + 0.3).abs() < 1e-15);

        // enumeration follows NW, N, NE, W, E, SW, S, SE
        let n = neuter_field(3, 3, (0..9).map(f64::from).collect());
        let idx: Vec<usize> = neuter_gradients(&n, (1, 1), Connectivity::Eight)
            .unwrap()
            .into_iter()
            .map(|(j, _)| j)
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 5, 6, 7, 8]);
    }

    #[test]
    fn essence_gradient_examples() {
        let e = EssenceField::new(2, 1, vec![[0.2, -0.1, -0.1], [0.1, -0.05, -0.05]]).unwrap();
        let d = essence_gradient(&e, (0, 0), (1, 0)).unwrap();
        for (got, want) in d.iter().zip([-0.1, 0.05, 0.05]) {
            assert!((got - want).abs() < 1e-15);
        }
        let back = essence_gradient(&e, (1, 0), (0, 0)).unwrap();
        assert_eq!(back, d.map(|v| -v));
        assert_eq!(essence_gradient(&e, (1, 0), (1, 0)).unwrap(), [0.0; 3]);
        assert!(essence_gradient(&e, (0, 0), (0, 1)).is_err());
    }

    #[test]
    fn delta_with_zero_essence_distance() {
        let s = state_with(2, 1, vec![0.8, 0.5], vec![[0.1, 0.0, -0.1]; 2]);
        let d = demotion_delta((0, 0), &s, &SeparationParams::default()).unwrap();
        assert!((d + 0.3).abs() < 1e-15);
    }

    #[test]
    fn delta_with_gaussian_weight() {
        // |dS|^2 = 0.01 with lambda 100 gives weight e^-1
        let s = state_with(2, 1, vec![0.7, 0.5], vec![[0.0; 3], [0.1, 0.0, 0.0]]);
        let d = demotion_delta((0, 0), &s, &SeparationParams::default()).unwrap();
        assert!((d - (-0.2 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((d + 0.0735759).abs() < 1e-7);
    }

    #[test]
    fn delta_at_local_minimum_is_zero() {
        let s = state_with(3, 1, vec![0.6, 0.2, 0.9], vec![[0.0; 3]; 3]);
        assert_eq!(demotion_delta((1, 0), &s, &SeparationParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn delta_prefers_similar_essence() {
        // deeper neighbor across an essence edge loses to a shallower one of the same color
        let s = state_with(
            3,
            1,
            vec![0.4, 0.9, 0.1],
            vec![[0.0; 3], [0.0; 3], [0.5, -0.25, -0.25]],
        );
        let d = demotion_delta((1, 0), &s, &SeparationParams::default()).unwrap();
        assert!((d + 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_two_pixels() {
        let s = state_with(2, 1, vec![0.8, 0.5], vec![[0.0; 3]; 2]);
        let next = demotion_step(&s, &SeparationParams::default());
        assert_eq!(next.neuter().data(), &[0.5, 0.5]);
        assert_eq!(next.iteration(), 1);
        assert_eq!(next.changed(), 1);
    }

    #[test]
    fn step_constant_field() {
        let s = state_with(3, 3, vec![0.4; 9], vec![[0.0; 3]; 9]);
        let next = demotion_step(&s, &SeparationParams::default());
        assert_eq!(next.neuter(), s.neuter());
        assert_eq!(next.iteration(), 1);
        assert_eq!(next.changed(), 0);
    }

    #[test]
    fn step_is_synchronous_on_strip() {
        let s = state_with(3, 1, vec![0.9, 0.7, 0.2], vec![[0.0; 3]; 3]);
        let next = demotion_step(&s, &SeparationParams::default());
        let got = next.neuter().data();
        for (g, w) in got.iter().zip([0.7, 0.2, 0.2]) {
            assert!((g - w).abs() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn unmasked_pixels_stay() {
        let n = neuter_field(2, 1, vec![0.8, 0.5]);
        let mask = HighNeuterMask::new(2, 1, vec![false, false]).unwrap();
        let s = DemotionState::new(n, EssenceField::new(2, 1, vec![[0.0; 3]; 2]).unwrap(), mask).unwrap();
        let next = demotion_step(&s, &SeparationParams::default());
        assert_eq!(next.neuter().data(), &[0.8, 0.5]);
    }

    #[test]
    fn gray_ramp_reaches_reachable_minimum() {
        // 3x3 gray ramp, neuter 0.1*(x+y)+0.2; essence is zero so every weight is 1
        let data: Vec<Rgb> = (0..9)
            .map(|i| {
                let (x, y) = (i % 3, i / 3);
                [0.1 * (x + y) as f64 + 0.2; 3]
            })
            .collect();
        let image = RadianceImage::new(3, 3, data).unwrap();
        let params = SeparationParams { tau: Threshold::Value(0.0), ..Default::default() };
        let out = separate(&image, &Illumination::white(), &params).unwrap();
        assert!(out.converged);
        assert!(out.essence.data().iter().all(|s| *s == [0.0; 3]));
        for &n in out.final_neuter.data() {
            assert!((n - 0.2).abs() < 1e-15);
        }
        // the far corner needs two steps (diagonal), then one more to see no change
        assert_eq!(out.iterations_run, 3);
    }

    #[test]
    fn nothing_masked_returns_input() {
        let image = RadianceImage::new(2, 2, vec![[0.3, 0.1, 0.2], [0.5, 0.2, 0.1], [0.1, 0.1, 0.1], [0.0; 3]]).unwrap();
        let params = SeparationParams { tau: Threshold::Value(10.0), ..Default::default() };
        let out = separate(&image, &Illumination::new([0.9, 0.8, 0.7]).unwrap(), &params).unwrap();
        assert_eq!(out.diffuse, image);
        assert!(out.specular.data().iter().all(|p| *p == [0.0; 3]));
        assert_eq!(out.mask.count(), 0);
        assert_eq!(out.iterations_run, 1);
        assert!(out.converged);
    }

    #[test]
    fn separate_rejects_bad_params() {
        let image = RadianceImage::new(1, 1, vec![[0.1; 3]]).unwrap();
        let params = SeparationParams { epsilon: 0.0, ..Default::default() };
        assert!(matches!(
            separate(&image, &Illumination::white(), &params),
            Err(Error::InvalidParameter(_))
        ));
    }
}
