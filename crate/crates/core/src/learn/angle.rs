//! Rotation-angle regression on `(cos 2a, sin 2a)` targets.

use serde::{Deserialize, Serialize};

use super::model::LinearModel;
use crate::error::{EqwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub cos_pred: f64,
    pub sin_pred: f64,
    /// Degrees in `[0, 180)`.
    pub theta: f64,
    pub confidence: f64,
}

/// Targets for an image rotated by `alpha` degrees. Doubling the angle
/// removes the 180° ambiguity of the coefficients.
pub fn angle_targets(alpha: f64) -> [f64; 2] {
    let a = (2.0 * alpha).to_radians();
    [a.cos(), a.sin()]
}

pub fn angle_from_predictions(cos_pred: f64, sin_pred: f64) -> AngleEstimate {
    let mut theta = (sin_pred.atan2(cos_pred).to_degrees() / 2.0).rem_euclid(180.0);
    if theta >= 180.0 {
        theta = 0.0;
    }
    AngleEstimate {
        cos_pred,
        sin_pred,
        theta,
        confidence: cos_pred * cos_pred + sin_pred * sin_pred,
    }
}

/// Reads the last two outputs of `model` as `(cos 2a, sin 2a)`.
pub fn estimate_angle(model: &LinearModel, features: &[f64]) -> Result<AngleEstimate> {
    let s = model.scores(features)?;
    if s.len() < 2 {
        return Err(EqwsError::InvalidParams("angle model needs two outputs".into()));
    }
    let k = s.len();
    Ok(angle_from_predictions(s[k - 2], s[k - 1]))
}

/// Difference of two orientations folded into `(-90, 90]`.
pub fn fold_angle_error(truth: f64, estimate: f64) -> f64 {
    let d = (truth - estimate).rem_euclid(180.0);
    if d > 90.0 {
        d - 180.0
    } else {
        d
    }
}

/// Spread of folded errors: population standard deviation about their mean.
pub fn circular_std(truth: &[f64], estimate: &[f64]) -> f64 {
    let e: Vec<f64> = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| fold_angle_error(*t, *e))
        .collect();
    super::metrics::population_std(&e)
}

/// Root-mean-square folded error.
pub fn angle_rms(truth: &[f64], estimate: &[f64]) -> f64 {
    let n = truth.len() as f64;
    (truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| fold_angle_error(*t, *e).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::linreg::linreg_fit;

    #[test]
    fn examples() {
        assert_eq!(angle_from_predictions(1.0, 0.0).theta, 0.0);
        assert!((angle_from_predictions(0.0, 1.0).theta - 45.0).abs() < 1e-12);
        assert!((angle_from_predictions(-1.0, -1e-300).theta - 90.0).abs() < 1e-12);
        assert!((angle_from_predictions(0.0, -1.0).theta - 135.0).abs() < 1e-12);
        for a in [0.0, 17.0, 90.0, 179.0] {
            let [c, s] = angle_targets(a);
            assert!((angle_from_predictions(c, s).theta - a).abs() < 1e-9);
        }
    }

    #[test]
    fn folding() {
        assert_eq!(fold_angle_error(179.0, 1.0), -2.0);
        assert_eq!(fold_angle_error(1.0, 179.0), 2.0);
        assert_eq!(fold_angle_error(90.0, 0.0), 90.0);
        assert_eq!(fold_angle_error(0.0, 90.0), 90.0);
    }

    #[test]
    fn exact_on_linear_data() {
        let angles: Vec<f64> = (0..24).map(|i| i as f64 * 7.5).collect();
        let x: Vec<Vec<f64>> = angles
            .iter()
            .map(|&a| {
                let [c, s] = angle_targets(a);
                vec![2.0 * c + s, c - 3.0 * s, 0.5]
            })
            .collect();
        let y: Vec<Vec<f64>> = angles.iter().map(|&a| angle_targets(a).to_vec()).collect();
        let m = linreg_fit(&x, &y, 0.0).unwrap();
        for (a, row) in angles.iter().zip(&x) {
            let est = estimate_angle(&m, row).unwrap();
            assert!(fold_angle_error(*a, est.theta).abs() < 1e-8);
            assert!((est.confidence - 1.0).abs() < 1e-8);
        }
    }
}
