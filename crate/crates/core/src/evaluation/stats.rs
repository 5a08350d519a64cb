use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Ranks with the largest value ranked `n` and the smallest `1`; tied values
/// share the mean of their ranks.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank of every method over subjects; `scores[s][m]` is the score of
/// method `m` for subject `s`, higher is better.
pub fn average_ranks(scores: &[Vec<f64>]) -> Result<Vec<f64>, EvaluationError> {
    let m = scores.first().ok_or(EvaluationError::NoOutcomes)?.len();
    let mut acc = vec![0.0; m];
    for row in scores {
        if row.len() != m {
            return Err(EvaluationError::LengthMismatch {
                objects: row.len(),
                classes: m,
            });
        }
        for (a, r) in acc.iter_mut().zip(rank_descending(row)) {
            *a += r;
        }
    }
    Ok(acc.into_iter().map(|a| a / scores.len() as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    /// Smaller of the positive and negative rank sums.
    pub statistic: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided Wilcoxon signed-rank test, normal approximation with tie
/// correction and continuity correction. Zero differences are discarded.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, EvaluationError> {
    if x.len() != y.len() {
        return Err(EvaluationError::LengthMismatch {
            objects: x.len(),
            classes: y.len(),
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n,
            statistic: 0.0,
            r_plus: 0.0,
            r_minus: 0.0,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| libm::fabs(*v)).collect();
    let ranks = rank_descending(&abs);
    let r_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let r_minus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v < 0.0).map(|(_, r)| r).sum();
    let t = r_plus.min(r_minus);
    let nf = n as f64;
    let mn = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t_size = (j - i + 1) as f64;
        var -= (t_size * t_size * t_size - t_size) / 48.0;
        i = j + 1;
    }
    let se = libm::sqrt(var);
    let diff = t - mn;
    let corrected = diff - 0.5 * sign(diff);
    let z = if se > 0.0 { corrected / se } else { 0.0 };
    let p = libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2).min(1.0);
    Ok(WilcoxonResult {
        n,
        statistic: t,
        r_plus,
        r_minus,
        z,
        p_value: p,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Holm step-down: hypotheses are visited by increasing p-value and rejected
/// while `p <= alpha / (m - i)`; the first acceptance stops the procedure.
pub fn holm(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (i, &k) in order.iter().enumerate() {
        if p_values[k] <= alpha / (m - i) as f64 {
            reject[k] = true;
        } else {
            break;
        }
    }
    reject
}
