use serde::{Deserialize, Serialize};

use crate::error::{EqwsError, Result};
use crate::reduction::LogScaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Regression,
}

/// An affine map from (preprocessed) features to per-output scores.
///
/// Unseen rows go through `mask`, then `log_scaler`, then
/// `(x - shift) / scale`, then `z . W + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub mask: Option<Vec<usize>>,
    pub log_scaler: Option<LogScaler>,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major `features x outputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Class id carried by each output column (LDA and one-hot regression).
    pub classes: Vec<usize>,
    pub priors: Vec<f64>,
    pub outputs: Vec<String>,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.shift.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.bias.len()
    }

    /// Raw input width expected by [`scores`](Self::scores).
    pub fn input_width(&self) -> Option<usize> {
        match &self.mask {
            Some(_) => None,
            None => Some(self.n_features()),
        }
    }

    pub fn with_mask(mut self, mask: Vec<usize>) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn with_log_scaler(mut self, scaler: LogScaler) -> Self {
        self.log_scaler = Some(scaler);
        self
    }

    fn prepare(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut x: Vec<f64> = match &self.mask {
            Some(m) => m
                .iter()
                .map(|&i| {
                    row.get(i).copied().ok_or(EqwsError::SizeMismatch {
                        expected: i + 1,
                        got: row.len(),
                    })
                })
                .collect::<Result<_>>()?,
            None => row.to_vec(),
        };
        if let Some(s) = &self.log_scaler {
            x = s.transform(&x)?;
        }
        if x.len() != self.n_features() {
            return Err(EqwsError::SizeMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        for ((v, m), s) in x.iter_mut().zip(&self.shift).zip(&self.scale) {
            *v = (*v - m) / s;
        }
        Ok(x)
    }

    pub fn scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        let z = self.prepare(row)?;
        let k = self.n_outputs();
        let mut out = self.bias.clone();
        for (f, zf) in z.iter().enumerate() {
            let w = &self.weights[f * k..(f + 1) * k];
            for (o, wv) in out.iter_mut().zip(w) {
                *o += zf * wv;
            }
        }
        Ok(out)
    }

    /// Highest-scoring class; ties go to the lowest class id.
    pub fn predict_class(&self, row: &[f64]) -> Result<usize> {
        if self.classes.is_empty() {
            return Err(EqwsError::InvalidParams("model has no class outputs".into()));
        }
        let s = self.scores(row)?;
        Ok(self.classes[argmax_lowest(&s[..self.classes.len()])])
    }
}

/// Index of the maximum; the earliest index wins ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
