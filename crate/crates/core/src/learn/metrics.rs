use crate::error::{EqwsError, Result};

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Counts indexed `[true][predicted]`.
pub fn confusion_matrix(predicted: &[usize], truth: &[usize], n_classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p < n_classes && t < n_classes {
            m[t][p] += 1;
        }
    }
    m
}

/// CSV with a `true\pred` header row and one row per true class.
pub fn confusion_csv(matrix: &[Vec<u64>]) -> String {
    let k = matrix.len();
    let mut out = String::from("true\\pred");
    for c in 0..k {
        out.push_str(&format!(",{c}"));
    }
    out.push('\n');
    for (t, row) in matrix.iter().enumerate() {
        out.push_str(&t.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub fn population_std(v: &[f64]) -> f64 {
    // The rounded mean of equal values need not equal them.
    if v.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Mean over images and coefficients of the standard deviation across
/// angles. `samples[i][a]` is the coefficient vector of image `i` at angle `a`.
pub fn stability_delta(samples: &[Vec<Vec<f64>>]) -> Result<f64> {
    if samples.is_empty() {
        return Err(EqwsError::InvalidParams("no images".into()));
    }
    let n_coeff = samples[0].first().map_or(0, |v| v.len());
    let mut total = 0.0;
    for per_angle in samples {
        if per_angle.len() < 2 {
            return Err(EqwsError::InvalidParams("stability needs at least two angles".into()));
        }
        for v in per_angle {
            if v.len() != n_coeff {
                return Err(EqwsError::SizeMismatch {
                    expected: n_coeff,
                    got: v.len(),
                });
            }
        }
        let mut column = vec![0.0; per_angle.len()];
        for c in 0..n_coeff {
            for (slot, v) in column.iter_mut().zip(per_angle) {
                *slot = v[c];
            }
            total += population_std(&column);
        }
    }
    Ok(total / (n_coeff * samples.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_examples() {
        let same = vec![vec![vec![1.0, 2.0]; 3]; 2];
        assert_eq!(stability_delta(&same).unwrap(), 0.0);
        let two = vec![vec![vec![3.0], vec![7.0]]];
        assert_eq!(stability_delta(&two).unwrap(), 2.0);
        assert!(stability_delta(&[vec![vec![1.0]]]).is_err());
    }

    #[test]
    fn confusion() {
        let m = confusion_matrix(&[0, 1, 1, 2], &[0, 1, 2, 2], 3);
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]]);
        assert_eq!(confusion_csv(&m), "true\\pred,0,1,2\n0,1,0,0\n1,0,1,0\n2,0,1,1\n");
        assert_eq!(accuracy(&[0, 1, 1, 2], &[0, 1, 2, 2]), 0.75);
    }
}
