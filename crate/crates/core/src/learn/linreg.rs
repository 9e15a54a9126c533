//! Centred least squares with optional ridge.

use nalgebra::DMatrix;

use super::lda::checked_cholesky;
use super::model::{LinearModel, ModelKind};
use crate::error::{EqwsError, Result};

fn to_matrix(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != d) {
        return Err(EqwsError::InvalidParams(format!("ragged {what} rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EqwsError::NonFinite(what));
    }
    Ok(DMatrix::from_fn(n, d, |i, k| rows[i][k]))
}

fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|k| m.column(k).mean()).collect()
}

fn centre(m: &mut DMatrix<f64>, means: &[f64]) {
    for (k, mu) in means.iter().enumerate() {
        m.column_mut(k).add_scalar_mut(-mu);
    }
}

/// Fits `Y ~ X W + b`.
///
/// With `ridge > 0` the penalty is `ridge * trace(Xc^T Xc) / F`. With
/// `ridge = 0` the minimum-norm least-squares solution is used, which
/// interpolates the training data when there are fewer rows than columns.
pub fn linreg_fit(features: &[Vec<f64>], targets: &[Vec<f64>], ridge: f64) -> Result<LinearModel> {
    if features.len() != targets.len() {
        return Err(EqwsError::SizeMismatch {
            expected: features.len(),
            got: targets.len(),
        });
    }
    if features.is_empty() {
        return Err(EqwsError::InvalidParams("no training rows".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(EqwsError::InvalidParams(format!("ridge must be >= 0, got {ridge}")));
    }
    let mut x = to_matrix(features, "regression features")?;
    let mut y = to_matrix(targets, "regression targets")?;
    let x_mean = column_means(&x);
    let y_mean = column_means(&y);
    centre(&mut x, &x_mean);
    centre(&mut y, &y_mean);
    let (f, k) = (x.ncols(), y.ncols());

    let w = if ridge > 0.0 {
        let mut g = x.tr_mul(&x);
        let lambda = ridge * g.trace() / f as f64;
        for i in 0..f {
            g[(i, i)] += lambda;
        }
        let rhs = x.tr_mul(&y);
        match checked_cholesky(g) {
            Some(c) => c.solve(&rhs),
            None => min_norm(&x, &y)?,
        }
    } else {
        min_norm(&x, &y)?
    };

    let mut bias = y_mean.clone();
    for (o, b) in bias.iter_mut().enumerate() {
        for (i, mu) in x_mean.iter().enumerate() {
            *b -= mu * w[(i, o)];
        }
    }
    let mut weights = Vec::with_capacity(f * k);
    for i in 0..f {
        for o in 0..k {
            weights.push(w[(i, o)]);
        }
    }
    Ok(LinearModel {
        kind: ModelKind::Regression,
        mask: None,
        log_scaler: None,
        shift: vec![0.0; f],
        scale: vec![1.0; f],
        weights,
        bias,
        classes: Vec::new(),
        priors: Vec::new(),
        outputs: (0..k).map(|o| format!("y{o}")).collect(),
    })
}

/// Minimum-norm least squares by complete orthogonal decomposition:
/// `X P = Q R` with column pivoting, then `R1^T = Z T` for the leading
/// `rank` rows of `R`.
fn min_norm(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, f) = x.shape();
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let r00 = if r.nrows() > 0 { r[(0, 0)].abs() } else { 0.0 };
    let tol = r00 * f64::EPSILON * n.max(f) as f64;
    let rank = (0..r.nrows().min(f)).take_while(|&i| r[(i, i)].abs() > tol).count();
    if rank == 0 {
        return Ok(DMatrix::zeros(f, y.ncols()));
    }
    let qty = qr.q().columns(0, rank).tr_mul(y);
    let cod = r.rows(0, rank).transpose().qr();
    let w = cod
        .r()
        .tr_solve_upper_triangular(&qty)
        .ok_or_else(|| EqwsError::Singular("rank-revealing factorisation".into()))?;
    let mut sol = cod.q() * w;
    qr.p().inv_permute_rows(&mut sol);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(EqwsError::NonFinite("least-squares solution"));
    }
    Ok(sol)
}

/// One-hot targets for class ids `0..K`.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|&l| (0..n_classes).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Regression on one-hot targets, marking the outputs as classes.
pub fn one_hot_classifier(features: &[Vec<f64>], labels: &[usize], ridge: f64) -> Result<LinearModel> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut m = linreg_fit(features, &one_hot(labels, k), ridge)?;
    m.classes = (0..k).collect();
    m.outputs = (0..k).map(|c| format!("class{c}")).collect();
    Ok(m)
}
