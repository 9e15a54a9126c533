//! Square, dyadic image fields.

use serde::{Deserialize, Serialize};

use crate::error::{EqwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    #[default]
    Real,
    Fourier,
}

/// A square array with a power-of-two side, stored channel-major then
/// row-major: `data[(c * side + y) * side + x]`.
///
/// `x` is the column index and `y` the row index. Frequencies follow the
/// same convention, so `kx` runs along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageField {
    side: usize,
    channels: usize,
    domain: Domain,
    data: Vec<f64>,
}

impl ImageField {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_channels(side, 1, data)
    }

    pub fn with_channels(side: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if side < 2 || !side.is_power_of_two() {
            return Err(EqwsError::InvalidParams(format!(
                "image side {side} is not a power of two"
            )));
        }
        if channels == 0 {
            return Err(EqwsError::InvalidParams("image needs at least one channel".into()));
        }
        let expected = side * side * channels;
        if data.len() != expected {
            return Err(EqwsError::SizeMismatch {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EqwsError::NonFinite("image data"));
        }
        Ok(ImageField {
            side,
            channels,
            domain: Domain::Real,
            data,
        })
    }

    pub fn zeros(side: usize) -> Result<Self> {
        Self::new(side, vec![0.0; side * side])
    }

    /// Builds a single-channel field from a function of `(x, y)`.
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                data.push(f(x, y));
            }
        }
        Self::new(side, data)
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn log2_side(&self) -> u32 {
        self.side.trailing_zeros()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.side + x]
    }

    /// Pixels of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.side * self.side;
        &self.data[c * n..(c + 1) * n]
    }

    /// Extracts one channel as a standalone single-channel field.
    pub fn channel_field(&self, c: usize) -> ImageField {
        ImageField {
            side: self.side,
            channels: 1,
            domain: self.domain,
            data: self.channel(c).to_vec(),
        }
    }

    /// Stacks single-channel fields of equal side into one multi-channel field.
    pub fn stack(fields: &[ImageField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| EqwsError::InvalidParams("cannot stack zero fields".into()))?;
        let mut data = Vec::with_capacity(first.data.len() * fields.len());
        for f in fields {
            if f.side != first.side || f.channels != 1 {
                return Err(EqwsError::InvalidParams(
                    "stacked fields must be single-channel and equally sized".into(),
                ));
            }
            data.extend_from_slice(&f.data);
        }
        Self::with_channels(first.side, fields.len(), data)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Sum of squared values.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub(crate) fn require_single_channel(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(EqwsError::InvalidParams(format!(
                "expected a single-channel image, got {} channels",
                self.channels
            )));
        }
        Ok(())
    }
}
