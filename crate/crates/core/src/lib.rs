//! Equivariant wavelet scattering with triglet filters.

pub mod error;
pub mod fft;
pub mod filterbank;
pub mod image;
pub mod io;
pub mod learn;
pub mod reduction;
pub mod rng;
pub mod synth;
pub mod transform;

pub use error::{EqwsError, ErrorClass, Result};
pub use filterbank::{FilterBank, FilterBankParams, FilterLabel, FlatnessReport, SparseFilter};
pub use image::{Domain, ImageField};
pub use learn::{AngleEstimate, LinearModel, ModelKind};
pub use reduction::{iso_reduce, permute, IsoCoefficients, LogScaler, RwstCoefficients};
pub use synth::{ArcSpec, DiscSpec, Fill, Interpolation, RodSpec};
pub use transform::{
    coefficient_count, normalize_image, scatter, scatter_color, scatter_first_order, scatter_reference,
    CoefficientLayout, ColorScatteringCoefficients, CornerPower, FirstOrder, ScatterEngine, ScatteringCoefficients,
};
