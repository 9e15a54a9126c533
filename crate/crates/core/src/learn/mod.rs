//! Linear models on scattering coefficients.

pub mod angle;
pub mod color;
pub mod lda;
pub mod linreg;
pub mod metrics;
pub mod model;
pub mod spline;
pub mod throwout;

pub use angle::{angle_targets, estimate_angle, fold_angle_error, AngleEstimate};
pub use color::{rgb_to_grey, rgb_to_ycbcr};
pub use lda::{lda_fit, LdaAccumulator, LdaStatistics, DEFAULT_RIDGE};
pub use linreg::{linreg_fit, one_hot, one_hot_classifier};
pub use metrics::{accuracy, confusion_csv, confusion_matrix, stability_delta};
pub use model::{LinearModel, ModelKind};
pub use spline::{predict_coefficient_curve, CoefficientId, PeriodicSpline};
pub use throwout::{greedy_throwout, ThrowoutOptions, ThrowoutReport, ThrowoutTrial};
