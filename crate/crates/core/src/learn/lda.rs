//! Linear discriminant analysis with a shared, ridge-regularized covariance.

use nalgebra::{DMatrix, DVector};

use super::model::{LinearModel, ModelKind};
use crate::error::{EqwsError, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

const FLUSH_ROWS: usize = 256;

/// Streams labelled rows into the sufficient statistics of LDA.
///
/// Rows are shifted by the mean of the first block before accumulating
/// cross products, which keeps the single-pass covariance accurate.
#[derive(Debug, Clone)]
pub struct LdaAccumulator {
    dims: usize,
    n_classes: usize,
    shift: Option<Vec<f64>>,
    counts: Vec<usize>,
    class_sums: Vec<Vec<f64>>,
    cross: DMatrix<f64>,
    pending: Vec<(Vec<f64>, usize)>,
}

impl LdaAccumulator {
    pub fn new(dims: usize, n_classes: usize) -> Self {
        LdaAccumulator {
            dims,
            n_classes,
            shift: None,
            counts: vec![0; n_classes],
            class_sums: vec![vec![0.0; dims]; n_classes],
            cross: DMatrix::zeros(dims, dims),
            pending: Vec::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_samples(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.pending.len()
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.dims {
            return Err(EqwsError::SizeMismatch {
                expected: self.dims,
                got: row.len(),
            });
        }
        if label >= self.n_classes {
            return Err(EqwsError::InvalidParams(format!(
                "label {label} outside 0..{}",
                self.n_classes
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EqwsError::NonFinite("LDA features"));
        }
        self.pending.push((row.to_vec(), label));
        if self.pending.len() >= FLUSH_ROWS {
            self.flush();
        }
        Ok(())
    }

    fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let d = self.dims;
        let shift = self
            .shift
            .get_or_insert_with(|| {
                let mut m = vec![0.0; d];
                for (r, _) in &self.pending {
                    for (a, b) in m.iter_mut().zip(r) {
                        *a += b;
                    }
                }
                let n = self.pending.len() as f64;
                m.iter_mut().for_each(|v| *v /= n);
                m
            })
            .clone();
        let block = DMatrix::from_fn(self.pending.len(), d, |i, k| self.pending[i].0[k] - shift[k]);
        self.cross.gemm_tr(1.0, &block, &block, 1.0);
        for (i, (_, label)) in self.pending.iter().enumerate() {
            self.counts[*label] += 1;
            let sums = &mut self.class_sums[*label];
            for (k, s) in sums.iter_mut().enumerate() {
                *s += block[(i, k)];
            }
        }
        self.pending.clear();
    }

    /// Standardized class means and pooled within-class covariance.
    pub fn statistics(mut self) -> Result<LdaStatistics> {
        self.flush();
        let d = self.dims;
        let k = self.n_classes;
        if k < 2 {
            return Err(EqwsError::InvalidParams("LDA needs at least two classes".into()));
        }
        if let Some(c) = self.counts.iter().position(|&n| n < 2) {
            return Err(EqwsError::InvalidParams(format!(
                "class {c} has {} samples; LDA needs at least two per class",
                self.counts[c]
            )));
        }
        let n: usize = self.counts.iter().sum();
        let nf = n as f64;
        let shift = self.shift.unwrap_or_else(|| vec![0.0; d]);
        let mut total = vec![0.0; d];
        for sums in &self.class_sums {
            for (t, s) in total.iter_mut().zip(sums) {
                *t += s;
            }
        }
        let mean_shifted: Vec<f64> = total.iter().map(|t| t / nf).collect();
        let std: Vec<f64> = (0..d)
            .map(|i| {
                let var = self.cross[(i, i)] / nf - mean_shifted[i] * mean_shifted[i];
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let class_means: Vec<Vec<f64>> = self
            .class_sums
            .iter()
            .zip(&self.counts)
            .map(|(s, &c)| s.iter().map(|v| v / c as f64).collect())
            .collect();
        // Within-class scatter = sum x x^T - sum_c n_c m_c m_c^T, shifted coords.
        let mut within = self.cross;
        for (m, &c) in class_means.iter().zip(&self.counts) {
            let v = DVector::from_column_slice(m);
            within.ger(-(c as f64), &v, &v, 1.0);
        }
        let denom = (n - k) as f64;
        let pooled = DMatrix::from_fn(d, d, |a, b| within[(a, b)] / denom / (std[a] * std[b]));
        let means_z = class_means
            .iter()
            .map(|m| (0..d).map(|i| (m[i] - mean_shifted[i]) / std[i]).collect())
            .collect();
        Ok(LdaStatistics {
            mean: mean_shifted.iter().zip(&shift).map(|(a, b)| a + b).collect(),
            std,
            counts: self.counts,
            class_means: means_z,
            pooled,
        })
    }

    pub fn fit(self, ridge: f64) -> Result<LinearModel> {
        self.statistics()?.fit(ridge)
    }
}

/// Everything LDA needs, in standardized feature coordinates.
#[derive(Debug, Clone)]
pub struct LdaStatistics {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub counts: Vec<usize>,
    /// Per class, `(mean_c - mean) / std`.
    pub class_means: Vec<Vec<f64>>,
    /// Pooled within-class covariance of the standardized features.
    pub pooled: DMatrix<f64>,
}

impl LdaStatistics {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// `pooled + ridge * trace / dim * I`
    pub fn regularized(&self, ridge: f64) -> DMatrix<f64> {
        let d = self.dims();
        let lambda = ridge * self.pooled.trace() / d as f64;
        let mut s = self.pooled.clone();
        for i in 0..d {
            s[(i, i)] += lambda;
        }
        s
    }

    pub fn log_priors(&self) -> Vec<f64> {
        let n: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect()
    }

    pub fn fit(&self, ridge: f64) -> Result<LinearModel> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(EqwsError::InvalidParams(format!("ridge must be >= 0, got {ridge}")));
        }
        let d = self.dims();
        let k = self.counts.len();
        let s = self.regularized(ridge);
        let chol = checked_cholesky(s).ok_or_else(|| {
            EqwsError::Singular(format!(
                "pooled covariance is singular at ridge {ridge}; increase the ridge (default {DEFAULT_RIDGE})"
            ))
        })?;
        let means = DMatrix::from_fn(d, k, |i, c| self.class_means[c][i]);
        let w = chol.solve(&means);
        let log_priors = self.log_priors();
        let bias = (0..k)
            .map(|c| -0.5 * means.column(c).dot(&w.column(c)) + log_priors[c])
            .collect();
        let mut weights = Vec::with_capacity(d * k);
        for i in 0..d {
            for c in 0..k {
                weights.push(w[(i, c)]);
            }
        }
        let n: usize = self.counts.iter().sum();
        Ok(LinearModel {
            kind: ModelKind::Lda,
            mask: None,
            log_scaler: None,
            shift: self.mean.clone(),
            scale: self.std.clone(),
            weights,
            bias,
            classes: (0..k).collect(),
            priors: self.counts.iter().map(|&c| c as f64 / n as f64).collect(),
            outputs: (0..k).map(|c| format!("class{c}")).collect(),
        })
    }
}

/// Cholesky factor, rejecting matrices whose pivots collapse relative to
/// the largest diagonal entry.
pub(crate) fn checked_cholesky(s: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let max_diag = s.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_diag == 0.0 {
        return None;
    }
    let chol = s.cholesky()?;
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v * v));
    if min_pivot <= 1e-13 * max_diag {
        return None;
    }
    Some(chol)
}

/// Fits LDA on in-memory rows; labels are class ids `0..K`.
pub fn lda_fit(features: &[Vec<f64>], labels: &[usize], ridge: f64) -> Result<LinearModel> {
    if features.len() != labels.len() {
        return Err(EqwsError::SizeMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let dims = features.first().map_or(0, |r| r.len());
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut acc = LdaAccumulator::new(dims, k);
    for (row, &l) in features.iter().zip(labels) {
        acc.push(row, l)?;
    }
    acc.fit(ridge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::metrics::accuracy;
    use crate::rng::normal;
    use crate::rng::seeded;

    fn blobs(n: usize, d: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = seeded(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 0..2 {
            for _ in 0..n {
                let centre = if c == 0 { -sep } else { sep };
                x.push((0..d).map(|_| centre + normal(&mut rng)).collect());
                y.push(c);
            }
        }
        (x, y)
    }

    fn predict_all(m: &LinearModel, x: &[Vec<f64>]) -> Vec<usize> {
        x.iter().map(|r| m.predict_class(r).unwrap()).collect()
    }

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(200, 3, 5.0, 1);
        let m = lda_fit(&x, &y, DEFAULT_RIDGE).unwrap();
        let (xt, yt) = blobs(200, 3, 5.0, 2);
        assert_eq!(accuracy(&predict_all(&m, &xt), &yt), 1.0);
    }

    #[test]
    fn singular_features() {
        let x = vec![vec![1.0, 2.0]; 10];
        let y: Vec<usize> = (0..10).map(|i| i % 2).collect();
        assert!(matches!(lda_fit(&x, &y, 0.0), Err(EqwsError::Singular(_))));
        assert!(lda_fit(&x, &y, DEFAULT_RIDGE).is_err());
    }

    #[test]
    fn too_few_samples() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(lda_fit(&x, &[0, 0, 1], 0.0).is_err());
    }

    #[test]
    fn affine_invariance_without_ridge() {
        let (x, y) = blobs(100, 4, 0.7, 3);
        let (xt, _) = blobs(100, 4, 0.7, 4);
        let a = [
            [2.0, 0.3, 0.0, -1.0],
            [0.0, 1.0, 0.5, 0.0],
            [0.1, 0.0, -3.0, 0.2],
            [0.0, 0.0, 0.0, 0.5],
        ];
        let tf = |r: &Vec<f64>| -> Vec<f64> {
            (0..4)
                .map(|i| (0..4).map(|k| a[i][k] * r[k]).sum::<f64>() + 10.0 * i as f64)
                .collect()
        };
        let m1 = lda_fit(&x, &y, 0.0).unwrap();
        let m2 = lda_fit(&x.iter().map(tf).collect::<Vec<_>>(), &y, 0.0).unwrap();
        let p1 = predict_all(&m1, &xt);
        let p2 = predict_all(&m2, &xt.iter().map(tf).collect::<Vec<_>>());
        assert_eq!(p1, p2);
    }

    #[test]
    fn streaming_matches_ordering() {
        let (x, y) = blobs(300, 5, 0.5, 5);
        let m1 = lda_fit(&x, &y, DEFAULT_RIDGE).unwrap();
        let mut rev_x = x.clone();
        let mut rev_y = y.clone();
        rev_x.reverse();
        rev_y.reverse();
        let m2 = lda_fit(&rev_x, &rev_y, DEFAULT_RIDGE).unwrap();
        for (a, b) in m1.weights.iter().zip(&m2.weights) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        // Symmetric classes, test point at the midpoint.
        let x = vec![vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]];
        let m = lda_fit(&x, &[0, 0, 1, 1], 0.0).unwrap();
        assert_eq!(m.predict_class(&[0.0]).unwrap(), 0);
    }
}
