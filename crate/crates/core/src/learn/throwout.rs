//! Greedy backward elimination of LDA features.
//!
//! Each step removes the feature whose removal leaves the highest training
//! accuracy. Removing a feature from an LDA model never requires a refit:
//! with `B` the inverse of the regularized pooled covariance, dropping
//! feature `i` changes the linear term of every score by
//! `-(zB)_i W_ic / B_ii` and the quadratic term by `-W_ic^2 / B_ii`, and
//! `B` itself is downdated by its Schur complement. A full elimination on
//! `d` features therefore costs `O(d^2 (n K + d))`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::lda::{checked_cholesky, LdaAccumulator, LdaStatistics, DEFAULT_RIDGE};
use crate::error::{EqwsError, Result};
use crate::rng::{stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrowoutOptions {
    /// Fraction of rows held out for the test trace; 0 disables it.
    pub test_fraction: f64,
    pub ridge: f64,
}

impl Default for ThrowoutOptions {
    fn default() -> Self {
        ThrowoutOptions {
            test_fraction: 0.25,
            ridge: DEFAULT_RIDGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrowoutTrial {
    /// Feature indices in the order they were removed.
    pub order: Vec<usize>,
    /// Accuracy before any removal and after each one.
    pub train_accuracy: Vec<f64>,
    pub test_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrowoutReport {
    pub n_features: usize,
    pub min_dims: usize,
    pub trials: Vec<ThrowoutTrial>,
    /// Per feature, the removal step averaged over trials. Features still
    /// present at the end share the mean of the remaining positions.
    pub mean_removal_index: Vec<f64>,
}

impl ThrowoutReport {
    /// Largest number of removals whose mean test accuracy stays within
    /// `tolerance` of the starting accuracy.
    pub fn removable(&self, tolerance: f64) -> usize {
        let steps = self.trials.first().map_or(0, |t| t.test_accuracy.len());
        if steps == 0 {
            return 0;
        }
        let mean_at = |s: usize| self.trials.iter().map(|t| t.test_accuracy[s]).sum::<f64>() / self.trials.len() as f64;
        let start = mean_at(0);
        (0..steps)
            .filter(|&s| mean_at(s) >= start - tolerance)
            .max()
            .unwrap_or(0)
    }
}

/// Scores of one sample set under the current feature subset.
struct Scored {
    labels: Vec<usize>,
    /// Row-major `n x d`: `z B`.
    zb: Vec<f64>,
    /// Row-major `n x K`: `z W`.
    lin: Vec<f64>,
}

impl Scored {
    fn new(stats: &LdaStatistics, rows: &[&[f64]], labels: Vec<usize>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> Self {
        let d = stats.dims();
        let k = w.ncols();
        let z = DMatrix::from_fn(rows.len(), d, |n, i| (rows[n][i] - stats.mean[i]) / stats.std[i]);
        let zb = z.clone() * b;
        let zw = z * w;
        Scored {
            labels,
            zb: (0..rows.len())
                .flat_map(|n| (0..d).map(move |i| (n, i)))
                .map(|(n, i)| zb[(n, i)])
                .collect(),
            lin: (0..rows.len())
                .flat_map(|n| (0..k).map(move |c| (n, c)))
                .map(|(n, c)| zw[(n, c)])
                .collect(),
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    /// Correct predictions after removing feature `i` (or none).
    fn hits(&self, d: usize, k: usize, drop: Option<(usize, &[f64], &[f64])>, base: &[f64]) -> usize {
        let mut scores = vec![0.0; k];
        let mut hits = 0;
        for n in 0..self.len() {
            let lin = &self.lin[n * k..(n + 1) * k];
            match drop {
                Some((i, coef, konst)) => {
                    let t = self.zb[n * d + i];
                    for c in 0..k {
                        scores[c] = lin[c] - t * coef[c] + konst[c];
                    }
                }
                None => {
                    for c in 0..k {
                        scores[c] = lin[c] + base[c];
                    }
                }
            }
            if super::model::argmax_lowest(&scores) == self.labels[n] {
                hits += 1;
            }
        }
        hits
    }

    fn remove(&mut self, d: usize, k: usize, i: usize, active: &[bool], b: &DMatrix<f64>, w: &DMatrix<f64>) {
        let bii = b[(i, i)];
        for n in 0..self.len() {
            let t = self.zb[n * d + i] / bii;
            for c in 0..k {
                self.lin[n * k + c] -= t * w[(i, c)];
            }
            for j in (0..d).filter(|&j| active[j] && j != i) {
                self.zb[n * d + j] -= t * b[(i, j)];
            }
        }
    }
}

fn accuracy_of(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

fn split(n: usize, test_fraction: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let test = idx[..n_test].to_vec();
    let train = idx[n_test..].to_vec();
    (train, test)
}

fn run_trial(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    min_dims: usize,
    options: ThrowoutOptions,
    rng: &mut Rng,
) -> Result<ThrowoutTrial> {
    let d = features[0].len();
    let k = n_classes;
    let (train, test) = split(features.len(), options.test_fraction, rng);
    let mut acc = LdaAccumulator::new(d, k);
    for &n in &train {
        acc.push(&features[n], labels[n])?;
    }
    let stats = acc.statistics()?;
    let s = stats.regularized(options.ridge);
    let mut b = checked_cholesky(s)
        .ok_or_else(|| EqwsError::Singular("pooled covariance in throw-out; increase the ridge".into()))?
        .inverse();
    let means = DMatrix::from_fn(d, k, |i, c| stats.class_means[c][i]);
    let mut w = &b * &means;
    let log_priors = stats.log_priors();
    let mut quad: Vec<f64> = (0..k).map(|c| means.column(c).dot(&w.column(c))).collect();

    let pick = |set: &[usize]| -> (Vec<&[f64]>, Vec<usize>) {
        (
            set.iter().map(|&n| features[n].as_slice()).collect(),
            set.iter().map(|&n| labels[n]).collect(),
        )
    };
    let (rows, l) = pick(&train);
    let mut tr = Scored::new(&stats, &rows, l, &b, &w);
    let (rows, l) = pick(&test);
    let mut te = Scored::new(&stats, &rows, l, &b, &w);

    let base: Vec<f64> = (0..k).map(|c| -0.5 * quad[c] + log_priors[c]).collect();
    let mut train_accuracy = vec![accuracy_of(tr.hits(d, k, None, &base), tr.len())];
    let mut test_accuracy = Vec::new();
    if te.len() > 0 {
        test_accuracy.push(accuracy_of(te.hits(d, k, None, &base), te.len()));
    }

    let mut active = vec![true; d];
    let mut order = Vec::with_capacity(d - min_dims);
    let mut coef = vec![vec![0.0; k]; d];
    let mut konst = vec![vec![0.0; k]; d];
    for _ in min_dims..d {
        let mut best_hits = 0;
        let mut best: Vec<usize> = Vec::new();
        for i in (0..d).filter(|&i| active[i]) {
            let bii = b[(i, i)];
            for c in 0..k {
                let wic = w[(i, c)];
                coef[i][c] = wic / bii;
                konst[i][c] = -0.5 * (quad[c] - wic * wic / bii) + log_priors[c];
            }
            let h = tr.hits(d, k, Some((i, &coef[i], &konst[i])), &base);
            if best.is_empty() || h > best_hits {
                best_hits = h;
                best.clear();
                best.push(i);
            } else if h == best_hits {
                best.push(i);
            }
        }
        let i = if best.len() == 1 {
            best[0]
        } else {
            best[rng.gen_range(0..best.len())]
        };
        train_accuracy.push(accuracy_of(best_hits, tr.len()));
        if te.len() > 0 {
            test_accuracy.push(accuracy_of(
                te.hits(d, k, Some((i, &coef[i], &konst[i])), &base),
                te.len(),
            ));
        }

        tr.remove(d, k, i, &active, &b, &w);
        te.remove(d, k, i, &active, &b, &w);
        let bii = b[(i, i)];
        for c in 0..k {
            quad[c] -= w[(i, c)] * w[(i, c)] / bii;
        }
        let others: Vec<usize> = (0..d).filter(|&j| active[j] && j != i).collect();
        for &j in &others {
            let f = b[(j, i)] / bii;
            for c in 0..k {
                w[(j, c)] -= f * w[(i, c)];
            }
        }
        for &j in &others {
            let f = b[(j, i)] / bii;
            for &m in &others {
                b[(j, m)] -= f * b[(i, m)];
            }
        }
        active[i] = false;
        order.push(i);
    }
    Ok(ThrowoutTrial {
        order,
        train_accuracy,
        test_accuracy,
    })
}

/// Runs `trials` independent eliminations from `d` features down to
/// `min_dims`. Trial `t` draws its split and its tie breaks from stream `t`
/// of `seed`.
pub fn greedy_throwout(
    features: &[Vec<f64>],
    labels: &[usize],
    min_dims: usize,
    trials: usize,
    seed: u64,
    options: ThrowoutOptions,
) -> Result<ThrowoutReport> {
    if features.len() != labels.len() {
        return Err(EqwsError::SizeMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let d = features.first().map_or(0, |r| r.len());
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    if min_dims + 1 < n_classes {
        return Err(EqwsError::InvalidParams(format!(
            "minDims {min_dims} below number of classes - 1 ({})",
            n_classes.saturating_sub(1)
        )));
    }
    if min_dims > d {
        return Err(EqwsError::InvalidParams(format!(
            "minDims {min_dims} exceeds feature count {d}"
        )));
    }
    if !(0.0..1.0).contains(&options.test_fraction) {
        return Err(EqwsError::InvalidParams("test fraction must be in [0, 1)".into()));
    }
    let mut out = Vec::with_capacity(trials);
    let mut index_sum = vec![0.0; d];
    for t in 0..trials {
        let mut rng = stream(seed, t as u64);
        let trial = run_trial(features, labels, n_classes, min_dims, options, &mut rng)?;
        let mut seen = vec![false; d];
        for (pos, &f) in trial.order.iter().enumerate() {
            index_sum[f] += pos as f64;
            seen[f] = true;
        }
        let r = trial.order.len() as f64;
        let rest = (r + d as f64 - 1.0) / 2.0;
        for f in (0..d).filter(|&f| !seen[f]) {
            index_sum[f] += rest;
        }
        out.push(trial);
    }
    let tn = trials.max(1) as f64;
    Ok(ThrowoutReport {
        n_features: d,
        min_dims,
        trials: out,
        mean_removal_index: index_sum.into_iter().map(|s| s / tn).collect(),
    })
}
