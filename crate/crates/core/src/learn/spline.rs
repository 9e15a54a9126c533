//! Periodic cubic splines and angular coefficient curves.

use nalgebra::{DMatrix, DVector};

use crate::error::{EqwsError, Result};
use crate::transform::{CoefficientLayout, ScatteringCoefficients};

/// Interpolating cubic spline through equally spaced samples of a periodic
/// function, with continuous second derivative across the wrap.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    period: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PeriodicSpline {
    /// Knots at `i * period / n` for `i in 0..n`.
    pub fn new(values: Vec<f64>, period: f64) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(EqwsError::InvalidParams(
                "a periodic spline needs at least 3 knots".into(),
            ));
        }
        let h = period / n as f64;
        // M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2, cyclically.
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if (i + 1) % n == j || (j + 1) % n == i {
                1.0
            } else {
                0.0
            }
        });
        let rhs = DVector::from_fn(n, |i, _| {
            6.0 * (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]) / (h * h)
        });
        let second = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| EqwsError::Singular("periodic spline system".into()))?;
        Ok(PeriodicSpline {
            period,
            values,
            second: second.iter().copied().collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let u = x.rem_euclid(self.period) / h;
        let i = (u.floor() as usize).min(n - 1);
        let t = u - i as f64;
        let j = (i + 1) % n;
        let (y0, y1) = (self.values[i], self.values[j]);
        let (m0, m1) = (self.second[i], self.second[j]);
        let a = 1.0 - t;
        a * y0 + t * y1 + ((a * a * a - a) * m0 + (t * t * t - t) * m1) * h * h / 6.0
    }
}

/// A single entry of the REG coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientId {
    Mu0,
    Sigma0Sq,
    S1 { j: usize, l: usize },
    S1Phi,
    S2 { j1: usize, l1: usize, j2: usize, l2: usize },
    S2PhiFirst { j: usize, l: usize },
    S2PhiSecond { j: usize, l: usize },
    S2PhiPhi,
}

impl CoefficientId {
    /// Decodes a position in the canonical REG order.
    pub fn from_reg_index(layout: CoefficientLayout, index: usize) -> Result<Self> {
        let (nj, nl) = (layout.n_scales, layout.n_angles);
        let jl = nj * nl;
        let split = |m: usize| (m / nl, m % nl);
        // Block starts in REG order: S0, S1, S1phi, S2, S2phi1, S2phi2, S2phiphi.
        let s1 = 2;
        let s1_phi = s1 + jl;
        let s2 = s1_phi + 1;
        let phi_first = s2 + jl * jl;
        let phi_second = phi_first + jl;
        let phi_phi = phi_second + jl;
        let i = index;
        let id = if i < s1 {
            [CoefficientId::Mu0, CoefficientId::Sigma0Sq][i]
        } else if i < s1_phi {
            let (j, l) = split(i - s1);
            CoefficientId::S1 { j, l }
        } else if i == s1_phi {
            CoefficientId::S1Phi
        } else if i < phi_first {
            let (j1, l1) = split((i - s2) / jl);
            let (j2, l2) = split((i - s2) % jl);
            CoefficientId::S2 { j1, l1, j2, l2 }
        } else if i < phi_second {
            let (j, l) = split(i - phi_first);
            CoefficientId::S2PhiFirst { j, l }
        } else if i < phi_phi {
            let (j, l) = split(i - phi_second);
            CoefficientId::S2PhiSecond { j, l }
        } else if i == phi_phi {
            CoefficientId::S2PhiPhi
        } else {
            return Err(EqwsError::InvalidParams(format!(
                "index {index} outside REG vector of length {}",
                layout.reg_len()
            )));
        };
        Ok(id)
    }

    /// Value of this coefficient after shifting every angle index by `-s`.
    fn shifted_value(&self, c: &ScatteringCoefficients, s: usize) -> Result<f64> {
        let nl = c.n_angles();
        let back = |l: usize| (l + nl - s % nl) % nl;
        Ok(match *self {
            CoefficientId::S1 { j, l } => c.s1_at(j, back(l)),
            CoefficientId::S2 { j1, l1, j2, l2 } => c.s2_at(j1, back(l1), j2, back(l2)),
            CoefficientId::S2PhiFirst { j, l } => c.s2_phi_first[j * nl + back(l)],
            CoefficientId::S2PhiSecond { j, l } => c.s2_phi_second[j * nl + back(l)],
            other => return Err(EqwsError::InvalidParams(format!("{other:?} carries no angle index"))),
        })
    }
}

/// Predicts how a coefficient varies as the image turns through
/// `[0°, 180°)`, from one coefficient set. Rotating by `s * 180 / L` shifts
/// every angle index by `s`, which gives `L` exact knots.
pub fn predict_coefficient_curve(c: &ScatteringCoefficients, target: CoefficientId) -> Result<PeriodicSpline> {
    let nl = c.n_angles();
    let knots = (0..nl)
        .map(|s| target.shifted_value(c, s))
        .collect::<Result<Vec<_>>>()?;
    PeriodicSpline::new(knots, 180.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_constants() {
        let v = vec![1.0, 3.0, -2.0, 0.5, 4.0, 4.0, 0.0, 1.0];
        let s = PeriodicSpline::new(v.clone(), 180.0).unwrap();
        for (i, y) in v.iter().enumerate() {
            assert!((s.eval(i as f64 * 22.5) - y).abs() < 1e-12);
            assert!((s.eval(i as f64 * 22.5 + 180.0) - y).abs() < 1e-12);
        }
        let flat = PeriodicSpline::new(vec![2.5; 8], 180.0).unwrap();
        for x in [0.0, 11.0, 93.3, 179.9] {
            assert!((flat.eval(x) - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let f = |x: f64| (2.0 * x.to_radians()).sin() + 0.3 * (4.0 * x.to_radians()).cos();
        let s = PeriodicSpline::new((0..16).map(|i| f(i as f64 * 11.25)).collect(), 180.0).unwrap();
        for k in 0..100 {
            let x = k as f64 * 1.8;
            assert!((s.eval(x) - f(x)).abs() < 5e-3);
        }
    }

    #[test]
    fn index_decoding() {
        let layout = CoefficientLayout::new(2, 4);
        let names = layout.reg_names();
        for (i, name) in names.iter().enumerate() {
            let id = CoefficientId::from_reg_index(layout, i).unwrap();
            let back = match id {
                CoefficientId::Mu0 => "mu0".to_string(),
                CoefficientId::Sigma0Sq => "sigma0sq".into(),
                CoefficientId::S1 { j, l } => format!("s1[j={j},l={l}]"),
                CoefficientId::S1Phi => "s1phi".into(),
                CoefficientId::S2 { j1, l1, j2, l2 } => format!("s2[j1={j1},l1={l1},j2={j2},l2={l2}]"),
                CoefficientId::S2PhiFirst { j, l } => format!("s2phi1[j2={j},l2={l}]"),
                CoefficientId::S2PhiSecond { j, l } => format!("s2phi2[j1={j},l1={l}]"),
                CoefficientId::S2PhiPhi => "s2phiphi".into(),
            };
            assert_eq!(&back, name);
        }
        assert!(CoefficientId::from_reg_index(layout, names.len()).is_err());
    }

    #[test]
    fn curve_rejects_angle_free_coefficients() {
        let layout = CoefficientLayout::new(1, 4);
        let c = ScatteringCoefficients::from_vec(layout, &vec![1.0; layout.reg_len()]).unwrap();
        assert!(predict_coefficient_curve(&c, CoefficientId::S2PhiPhi).is_err());
        let curve = predict_coefficient_curve(&c, CoefficientId::S1 { j: 0, l: 2 }).unwrap();
        assert!((curve.eval(33.0) - 1.0).abs() < 1e-14);
    }
}
