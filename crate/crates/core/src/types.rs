//! Pixel grids and the per-pixel fields of the decomposition.
//!
//! Every field is stored row-major, `index = y * width + x`. The wrappers
//! ([`RadianceImage`], [`MixedReflectanceField`], [`NeuterField`],
//! [`EssenceField`], [`HighNeuterMask`]) share the [`Grid`] storage and only
//! differ in the invariants their constructors enforce.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Number of color channels. Fixed to RGB.
pub const CHANNELS: usize = 3;

/// Smallest accepted illumination channel value.
pub const EPS_ILLUM: f64 = 1e-6;

/// One value per color channel, linear.
pub type Rgb = [f64; CHANNELS];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .ok_or(Error::InvalidParameter(format!("grid {width}x{height} overflows")))?;
        if expected == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                len: data.len(),
                expected,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a grid by evaluating `f(x, y)` in row-major order.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&T> {
        if self.contains(x, y) {
            Some(&self.data[self.index_of(x, y)])
        } else {
            None
        }
    }

    pub(crate) fn check_point(&self, x: usize, y: usize) -> Result<usize> {
        if self.contains(x, y) {
            Ok(self.index_of(x, y))
        } else {
            Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn check_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dimensions() == other.dimensions() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dimensions(),
                right: other.dimensions(),
            })
        }
    }

    /// Applies `f` per element, keeping the dimensions.
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Applies `f` elementwise over two equally sized grids.
    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        self.check_same_dims(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

fn check_nonnegative<'a>(values: impl Iterator<Item = &'a f64>) -> Result<()> {
    for (index, &value) in values.enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidValue { index, value });
        }
    }
    Ok(())
}

macro_rules! field_newtype {
    ($(#[$meta:meta])* $name:ident, $elem:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Grid<$elem>);

        impl $name {
            pub(crate) fn from_grid_unchecked(grid: Grid<$elem>) -> Self {
                Self(grid)
            }

            pub fn as_grid(&self) -> &Grid<$elem> {
                &self.0
            }

            pub fn into_grid(self) -> Grid<$elem> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = Grid<$elem>;

            fn deref(&self) -> &Grid<$elem> {
                &self.0
            }
        }
    };
}

field_newtype!(
    /// Linear radiance `L`, one nonnegative triple per pixel.
    RadianceImage,
    Rgb
);
field_newtype!(
    /// Mixed reflectance `P = L / E`.
    MixedReflectanceField,
    Rgb
);
field_newtype!(
    /// Mixed neuter: the spectrally neutral part of the mixed reflectance.
    NeuterField,
    f64
);
field_newtype!(
    /// Body essence: zero-mean chromatic part of the mixed reflectance.
    EssenceField,
    Rgb
);
field_newtype!(
    /// Pixels that take part in neuter demotion.
    HighNeuterMask,
    bool
);

impl RadianceImage {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        Self::from_grid(Grid::from_vec(width, height, data)?)
    }

    pub fn from_grid(grid: Grid<Rgb>) -> Result<Self> {
        check_nonnegative(grid.data().iter().flatten())?;
        Ok(Self(grid))
    }

    /// Multiplies every sample by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_grid(self.map(|px| px.map(|v| v * s)))
    }
}

impl MixedReflectanceField {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        let grid = Grid::from_vec(width, height, data)?;
        check_nonnegative(grid.data().iter().flatten())?;
        Ok(Self(grid))
    }
}

impl NeuterField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let grid = Grid::from_vec(width, height, data)?;
        check_nonnegative(grid.data().iter())?;
        Ok(Self(grid))
    }

    pub fn mean(&self) -> f64 {
        self.data().iter().sum::<f64>() / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl EssenceField {
    /// Accepts any finite triples; the zero-mean property is not re-checked
    /// here so that hand-built test fields stay cheap to construct.
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        let grid = Grid::from_vec(width, height, data)?;
        for (index, &value) in grid.data().iter().flatten().enumerate() {
            if !value.is_finite() {
                return Err(Error::InvalidValue { index, value });
            }
        }
        Ok(Self(grid))
    }
}

impl HighNeuterMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        Ok(Self(Grid::from_vec(width, height, data)?))
    }

    pub fn count(&self) -> usize {
        self.data().iter().filter(|&&m| m).count()
    }
}

/// Per-channel illumination `E`, every channel at least [`EPS_ILLUM`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Illumination(Rgb);

impl Illumination {
    pub fn new(e: Rgb) -> Result<Self> {
        for (channel, &value) in e.iter().enumerate() {
            // NaN fails the comparison and is rejected too
            if !(value >= EPS_ILLUM) || !value.is_finite() {
                return Err(Error::IlluminationTooSmall {
                    channel,
                    value,
                    min: EPS_ILLUM,
                });
            }
        }
        Ok(Self(e))
    }

    pub fn white() -> Self {
        Self([1.0; CHANNELS])
    }

    #[inline]
    pub fn channels(&self) -> Rgb {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.0.map(|v| v * s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_wrong_length() {
        let err = Grid::from_vec(2, 2, vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::BufferLength { expected: 4, .. }));
    }

    #[test]
    fn grid_rejects_empty() {
        assert_eq!(Grid::<f64>::from_vec(0, 3, vec![]).unwrap_err(), Error::EmptyImage);
    }

    #[test]
    fn grid_is_row_major() {
        let g = Grid::from_fn(3, 2, |x, y| (x, y)).unwrap();
        assert_eq!(g.data()[4], (1, 1));
        assert_eq!(g.index_of(2, 1), 5);
        assert_eq!(g.get(3, 0), None);
    }

    #[test]
    fn radiance_rejects_negative_and_nan() {
        assert!(RadianceImage::new(1, 1, vec![[0.1, -0.01, 0.0]]).is_err());
        assert!(RadianceImage::new(1, 1, vec![[0.1, f64::NAN, 0.0]]).is_err());
        assert!(RadianceImage::new(1, 1, vec![[0.0, 0.0, 0.0]]).is_ok());
    }

    #[test]
    fn illumination_threshold() {
        assert!(Illumination::new([0.5, 0.5, 0.4]).is_ok());
        assert!(Illumination::new([1.0, 1.0, 1.0]).is_ok());
        assert!(Illumination::new([EPS_ILLUM, 1.0, 1.0]).is_ok());
        let err = Illumination::new([0.5, 0.0, 0.4]).unwrap_err();
        assert!(matches!(err, Error::IlluminationTooSmall { channel: 1, .. }));
        assert!(Illumination::new([f64::NAN, 1.0, 1.0]).is_err());
        assert!(Illumination::new([f64::INFINITY, 1.0, 1.0]).is_err());
    }
}
