//! Angular permutation, isotropic reduction and the RWST cosine fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EqwsError, Result};
use crate::transform::{CoefficientLayout, ScatteringCoefficients};

/// Shifts every angular index by `s` (mod `L`): the entry at `l` moves to
/// `l + s`. Matches rotating the image by `s * 180 / L` degrees for a
/// half-plane bank.
pub fn permute(c: &ScatteringCoefficients, s: i64) -> ScatteringCoefficients {
    let nl = c.n_angles();
    let nj = c.n_scales();
    let jl = nj * nl;
    let s = s.rem_euclid(nl as i64) as usize;
    let to = |m: usize| (m / nl) * nl + (m % nl + s) % nl;
    let mut out = c.clone();
    for m in 0..jl {
        out.s1[to(m)] = c.s1[m];
        out.s2_phi_first[to(m)] = c.s2_phi_first[m];
        out.s2_phi_second[to(m)] = c.s2_phi_second[m];
        if let (Some(dst), Some(&v)) = (out.corner.first_layer.get_mut(to(m)), c.corner.first_layer.get(m)) {
            *dst = v;
        }
        for m2 in 0..jl {
            out.s2[to(m) * jl + to(m2)] = c.s2[m * jl + m2];
        }
    }
    out
}

/// Rotation-invariant reduction: sums over the absolute angle.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoCoefficients {
    pub layout: CoefficientLayout,
    pub mu0: f64,
    pub sigma0sq: f64,
    pub s1_iso: Vec<f64>,
    pub s1_phi: f64,
    /// `J x J x L`, index `(j1 * J + j2) * L + dl` with `dl = (l2 - l1) mod L`.
    pub s2_iso: Vec<f64>,
    pub s2_phi_first_iso: Vec<f64>,
    pub s2_phi_second_iso: Vec<f64>,
    pub s2_phi_phi: f64,
}

impl IsoCoefficients {
    pub fn s2_iso_at(&self, j1: usize, j2: usize, dl: usize) -> f64 {
        let (nj, nl) = (self.layout.n_scales, self.layout.n_angles);
        self.s2_iso[(j1 * nj + j2) * nl + dl]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.iso_len());
        out.push(self.mu0);
        out.push(self.sigma0sq);
        out.extend_from_slice(&self.s1_iso);
        out.push(self.s1_phi);
        out.extend_from_slice(&self.s2_iso);
        out.extend_from_slice(&self.s2_phi_first_iso);
        out.extend_from_slice(&self.s2_phi_second_iso);
        out.push(self.s2_phi_phi);
        out
    }
}

/// Order-independent sum: sorting first makes the result identical for
/// any permutation of the inputs.
fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

pub fn iso_reduce(c: &ScatteringCoefficients) -> IsoCoefficients {
    let (nj, nl) = (c.n_scales(), c.n_angles());
    let jl = nj * nl;
    let over_l = |table: &[f64], j: usize| sorted_sum(table[j * nl..(j + 1) * nl].to_vec());
    let mut s2_iso = Vec::with_capacity(nj * nj * nl);
    for j1 in 0..nj {
        for j2 in 0..nj {
            for dl in 0..nl {
                let vals = (0..nl)
                    .map(|l1| c.s2[(j1 * nl + l1) * jl + j2 * nl + (l1 + dl) % nl])
                    .collect();
                s2_iso.push(sorted_sum(vals));
            }
        }
    }
    IsoCoefficients {
        layout: c.layout,
        mu0: c.mu0,
        sigma0sq: c.sigma0sq,
        s1_iso: (0..nj).map(|j| over_l(&c.s1, j)).collect(),
        s1_phi: c.s1_phi,
        s2_iso,
        s2_phi_first_iso: (0..nj).map(|j| over_l(&c.s2_phi_first, j)).collect(),
        s2_phi_second_iso: (0..nj).map(|j| over_l(&c.s2_phi_second, j)).collect(),
        s2_phi_phi: c.s2_phi_phi,
    }
}

/// ISO reduction of a flattened REG vector.
pub fn iso_reduce_vec(layout: CoefficientLayout, reg: &[f64]) -> Result<Vec<f64>> {
    Ok(iso_reduce(&ScatteringCoefficients::from_vec(layout, reg)?).to_vec())
}

/// Default floor: `2^-52` times the largest entry.
pub fn default_floor(values: impl IntoIterator<Item = f64>) -> f64 {
    let max = values.into_iter().fold(0.0, f64::max);
    max * f64::EPSILON
}

fn floored_log2(v: f64, floor: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(EqwsError::InvalidParams(format!(
            "cannot log-normalize negative value {v}"
        )));
    }
    Ok(v.max(floor).log2())
}

/// Log-ratio coefficients feeding the RWST fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwstNormalized {
    pub n_scales: usize,
    pub n_angles: usize,
    /// `log2(S0)`
    pub s0: f64,
    /// `log2(S1 / S0)`, index `j * L + l`.
    pub s1: Vec<f64>,
    /// `log2(S2 / S1(j1, l1))`, indexed like the REG table.
    pub s2: Vec<f64>,
    pub floor: f64,
}

/// Normalizes with `S0 = sigma0sq`. Entries below `floor` are raised to it
/// before taking logs; `None` picks [`default_floor`] over S1 and S2.
pub fn log_normalize_rwst(c: &ScatteringCoefficients, floor: Option<f64>) -> Result<RwstNormalized> {
    let floor = floor.unwrap_or_else(|| default_floor(c.s1.iter().chain(&c.s2).copied()));
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(EqwsError::InvalidParams(format!(
            "log floor must be positive, got {floor}"
        )));
    }
    let (nj, nl) = (c.n_scales(), c.n_angles());
    let jl = nj * nl;
    let s0 = floored_log2(c.sigma0sq, floor)?;
    let mut s1 = Vec::with_capacity(jl);
    for &v in &c.s1 {
        s1.push(floored_log2(v, floor)? - s0);
    }
    let mut s2 = Vec::with_capacity(jl * jl);
    for m in 0..jl {
        let denom = floored_log2(c.s1[m], floor)?;
        for m2 in 0..jl {
            s2.push(floored_log2(c.s2[m * jl + m2], floor)? - denom);
        }
    }
    Ok(RwstNormalized {
        n_scales: nj,
        n_angles: nl,
        s0,
        s1,
        s2,
        floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderFit {
    pub iso: f64,
    pub aniso: f64,
    pub l_ref: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderFit {
    pub iso1: f64,
    pub iso2: f64,
    pub aniso1: f64,
    pub aniso2: f64,
    pub l_ref: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwstCoefficients {
    pub n_scales: usize,
    pub n_angles: usize,
    pub s0: f64,
    pub first: Vec<FirstOrderFit>,
    /// `(j1, j2)` with `j1 < j2`, lexicographic.
    pub pairs: Vec<(usize, usize)>,
    pub second: Vec<SecondOrderFit>,
}

impl RwstCoefficients {
    pub fn first_order_count(&self) -> usize {
        3 * self.first.len()
    }

    pub fn second_order_count(&self) -> usize {
        5 * self.second.len()
    }

    /// `[S0, iso.., aniso.., lref.., iso1.., iso2.., aniso1.., aniso2.., lref..]`
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = vec![self.s0];
        out.extend(self.first.iter().map(|f| f.iso));
        out.extend(self.first.iter().map(|f| f.aniso));
        out.extend(self.first.iter().map(|f| f.l_ref));
        out.extend(self.second.iter().map(|f| f.iso1));
        out.extend(self.second.iter().map(|f| f.iso2));
        out.extend(self.second.iter().map(|f| f.aniso1));
        out.extend(self.second.iter().map(|f| f.aniso2));
        out.extend(self.second.iter().map(|f| f.l_ref));
        out
    }
}

/// Constant terms only: `[S0, iso(j).., iso1(j1 < j2)..]`.
pub fn r_rwst_select(r: &RwstCoefficients) -> Vec<f64> {
    let mut out = vec![r.s0];
    out.extend(r.first.iter().map(|f| f.iso));
    out.extend(r.second.iter().map(|f| f.iso1));
    out
}

fn phase(l: f64, n_angles: usize) -> f64 {
    2.0 * PI * l / n_angles as f64
}

/// Angle index of the direction `(p, q)`, in `[0, L)`; 0 when degenerate.
fn l_ref_of(p: f64, q: f64, n_angles: usize, scale: f64) -> f64 {
    if p.hypot(q) <= 1e-14 * scale.max(1.0) {
        return 0.0;
    }
    let l = q.atan2(p) * n_angles as f64 / (2.0 * PI);
    let l = l.rem_euclid(n_angles as f64);
    if l >= n_angles as f64 {
        0.0
    } else {
        l
    }
}

fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let x = ata.cholesky()?.solve(&aty);
    let r = y - a * &x;
    let rms = (r.norm_squared() / y.len() as f64).sqrt();
    Some((x, rms))
}

/// Fits `iso + aniso * cos(2 pi (l - l_ref) / L)` to `values[l]`.
pub fn fit_first_order(values: &[f64]) -> Result<FirstOrderFit> {
    let nl = values.len();
    if nl < 4 {
        return Err(EqwsError::InvalidParams(format!("RWST fits need L >= 4, got {nl}")));
    }
    let a = DMatrix::from_fn(nl, 3, |l, k| match k {
        0 => 1.0,
        1 => phase(l as f64, nl).cos(),
        _ => phase(l as f64, nl).sin(),
    });
    let y = DVector::from_column_slice(values);
    let (x, rms) = least_squares(&a, &y).ok_or_else(|| EqwsError::Singular("first-order RWST".into()))?;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FirstOrderFit {
        iso: x[0],
        aniso: x[1].hypot(x[2]),
        l_ref: l_ref_of(x[1], x[2], nl, scale),
        residual_rms: rms,
    })
}

/// Evaluates the first-order model.
pub fn first_order_model(n_angles: usize, iso: f64, aniso: f64, l_ref: f64) -> Vec<f64> {
    (0..n_angles)
        .map(|l| iso + aniso * phase(l as f64 - l_ref, n_angles).cos())
        .collect()
}

/// Evaluates the second-order model on an `L x L` grid, index `l1 * L + l2`.
pub fn second_order_model(n_angles: usize, fit: &SecondOrderFit) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_angles * n_angles);
    for l1 in 0..n_angles {
        for l2 in 0..n_angles {
            let (a1, a2) = (l1 as f64, l2 as f64);
            out.push(
                fit.iso1
                    + fit.iso2 * phase(a1 - a2, n_angles).cos()
                    + fit.aniso1 * phase(a1 - fit.l_ref, n_angles).cos()
                    + fit.aniso2 * phase(a2 - fit.l_ref, n_angles).cos(),
            );
        }
    }
    out
}

fn second_order_design(nl: usize, l_ref: Option<f64>) -> DMatrix<f64> {
    let cols = if l_ref.is_some() { 4 } else { 6 };
    DMatrix::from_fn(nl * nl, cols, |row, k| {
        let (a1, a2) = ((row / nl) as f64, (row % nl) as f64);
        match (k, l_ref) {
            (0, _) => 1.0,
            (1, _) => phase(a1 - a2, nl).cos(),
            (2, Some(r)) => phase(a1 - r, nl).cos(),
            (3, Some(r)) => phase(a2 - r, nl).cos(),
            (2, None) => phase(a1, nl).cos(),
            (3, None) => phase(a1, nl).sin(),
            (4, None) => phase(a2, nl).cos(),
            _ => phase(a2, nl).sin(),
        }
    })
}

/// Fits the four-term second-order model to an `L x L` table.
///
/// A six-parameter linear solve gives the two anisotropic directions; the
/// shared phase starts at their principal axis, is checked against a dense
/// grid and then refined by golden-section search on the residual of the
/// four-parameter linear fit.
pub fn fit_second_order(values: &[f64], n_angles: usize) -> std::result::Result<SecondOrderFit, String> {
    let nl = n_angles;
    if nl < 4 || values.len() != nl * nl {
        return Err(format!("need an L x L table with L >= 4, got {} values", values.len()));
    }
    let y = DVector::from_column_slice(values);
    let (x6, _) = least_squares(&second_order_design(nl, None), &y).ok_or("singular linear system")?;
    let (p1, q1, p2, q2) = (x6[2], x6[3], x6[4], x6[5]);
    let sxx = p1 * p1 + p2 * p2;
    let syy = q1 * q1 + q2 * q2;
    let sxy = p1 * q1 + p2 * q2;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let fit_at = |r: f64| -> Option<(DVector<f64>, f64)> { least_squares(&second_order_design(nl, Some(r)), &y) };
    let period = nl as f64 / 2.0;
    if sxx + syy <= (1e-14 * scale).powi(2) {
        let (x, rms) = fit_at(0.0).ok_or("singular linear system")?;
        return Ok(SecondOrderFit {
            iso1: x[0],
            iso2: x[1],
            aniso1: 0.0,
            aniso2: 0.0,
            l_ref: 0.0,
            residual_rms: rms,
        }
        .canonical(nl));
    }
    let principal = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let start = (principal * nl as f64 / (2.0 * PI)).rem_euclid(period);
    let rms = |r: f64| fit_at(r).map(|f| f.1).unwrap_or(f64::INFINITY);
    let steps = 64 * nl;
    let step = period / steps as f64;
    let mut best = (start, rms(start));
    for k in 0..steps {
        let r = k as f64 * step;
        let e = rms(r);
        if e < best.1 - 1e-12 * scale {
            best = (r, e);
        }
    }
    let l_ref = golden_min(&rms, best.0 - step, best.0 + step, best.0);
    let (x, residual_rms) = fit_at(l_ref).ok_or("singular linear system")?;
    Ok(SecondOrderFit {
        iso1: x[0],
        iso2: x[1],
        aniso1: x[2],
        aniso2: x[3],
        l_ref,
        residual_rms,
    }
    .canonical(nl))
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, guess: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    if f(m) <= f(guess) {
        m
    } else {
        guess
    }
}

impl SecondOrderFit {
    /// `aniso1 >= 0` and `l_ref` in `[0, L)`.
    fn canonical(mut self, n_angles: usize) -> Self {
        let nl = n_angles as f64;
        if self.aniso1 < 0.0 {
            self.aniso1 = -self.aniso1;
            self.aniso2 = -self.aniso2;
            self.l_ref += nl / 2.0;
        }
        self.l_ref = self.l_ref.rem_euclid(nl);
        if self.l_ref >= nl {
            self.l_ref = 0.0;
        }
        self
    }
}

pub fn rwst_fit(norm: &RwstNormalized) -> Result<RwstCoefficients> {
    let (nj, nl) = (norm.n_scales, norm.n_angles);
    let jl = nj * nl;
    let first = (0..nj)
        .map(|j| fit_first_order(&norm.s1[j * nl..(j + 1) * nl]))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    let mut second = Vec::new();
    for j1 in 0..nj {
        for j2 in j1 + 1..nj {
            let mut table = Vec::with_capacity(nl * nl);
            for l1 in 0..nl {
                for l2 in 0..nl {
                    table.push(norm.s2[(j1 * nl + l1) * jl + j2 * nl + l2]);
                }
            }
            let fit = fit_second_order(&table, nl).map_err(|reason| EqwsError::FitFailed { j1, j2, reason })?;
            pairs.push((j1, j2));
            second.push(fit);
        }
    }
    Ok(RwstCoefficients {
        n_scales: nj,
        n_angles: nl,
        s0: norm.s0,
        first,
        pairs,
        second,
    })
}

/// Element-wise natural log followed by per-column standard scaling
/// learned on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScaler {
    pub floor: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl LogScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, floor: f64) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sum2: Vec<f64> = Vec::new();
        for row in rows {
            if n == 0 {
                sum = vec![0.0; row.len()];
                sum2 = vec![0.0; row.len()];
            } else if row.len() != sum.len() {
                return Err(EqwsError::SizeMismatch {
                    expected: sum.len(),
                    got: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                let l = log_floor(v, floor)?;
                sum[k] += l;
                sum2[k] += l * l;
            }
            n += 1;
        }
        if n == 0 {
            return Err(EqwsError::InvalidParams("cannot fit a scaler on zero rows".into()));
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let scale = sum2
            .iter()
            .zip(&mean)
            .map(|(s2, m)| {
                let var = (s2 / nf - m * m).max(0.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(LogScaler { floor, mean, scale })
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(EqwsError::SizeMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        row.iter()
            .enumerate()
            .map(|(k, &v)| Ok((log_floor(v, self.floor)? - self.mean[k]) / self.scale[k]))
            .collect()
    }
}

fn log_floor(v: f64, floor: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(EqwsError::InvalidParams(format!("cannot take the log of {v}")));
    }
    Ok(v.max(floor).ln())
}
