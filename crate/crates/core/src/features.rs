//! Wavelet-domain feature extraction and the mutual-information filter.
//!
//! Every channel is decomposed with a 3-level db6 transform; each of the four
//! subbands `[A3, D3, D2, D1]` contributes the mean absolute value, the slope
//! sign change count and three autoregressive coefficients.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::SignalRecord;
use crate::wavelet::{dwt_db6, WaveletError};
use crate::ClassLabel;

pub const DWT_LEVELS: usize = 3;
pub const SUBBANDS: usize = DWT_LEVELS + 1;
pub const AR_ORDER: usize = 3;
pub const FEATURES_PER_SUBBAND: usize = 2 + AR_ORDER;
pub const MIN_SUBBAND_LEN: usize = 4;
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("channel {channel}, subband {subband}: {len} coefficients, need {MIN_SUBBAND_LEN}")]
    SubbandTooShort {
        channel: usize,
        subband: Subband,
        len: usize,
    },
    #[error("non-finite feature at index {0}")]
    NonFinite(usize),
    #[error("feature and label vectors differ in length ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },
    #[error("at least two distinct labels are required")]
    SingleLabel,
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedMatrix { row: usize, expected: usize, found: usize },
    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("bin count must be positive")]
    ZeroBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subband {
    A3,
    D3,
    D2,
    D1,
}

impl Subband {
    pub const ALL: [Subband; SUBBANDS] = [Subband::A3, Subband::D3, Subband::D2, Subband::D1];
}

impl fmt::Display for Subband {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Mav,
    Ssc,
    Ar1,
    Ar2,
    Ar3,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; FEATURES_PER_SUBBAND] = [
        FeatureKind::Mav,
        FeatureKind::Ssc,
        FeatureKind::Ar1,
        FeatureKind::Ar2,
        FeatureKind::Ar3,
    ];
}

/// Where a feature index comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlot {
    pub channel: usize,
    pub subband: Subband,
    pub kind: FeatureKind,
}

impl fmt::Display for FeatureSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}_{}_{:?}", self.channel + 1, self.subband, self.kind)
    }
}

/// Feature-vector dimensionality for a channel count.
pub fn feature_dim(num_channels: usize) -> usize {
    num_channels * SUBBANDS * FEATURES_PER_SUBBAND
}

/// Layout descriptor: channel-major, then subband, then feature kind.
pub fn feature_layout(num_channels: usize) -> Vec<FeatureSlot> {
    let mut out = Vec::with_capacity(feature_dim(num_channels));
    for channel in 0..num_channels {
        for subband in Subband::ALL {
            for kind in FeatureKind::ALL {
                out.push(FeatureSlot { channel, subband, kind });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub num_channels: usize,
}

impl FeatureVector {
    pub fn layout(&self) -> Vec<FeatureSlot> {
        feature_layout(self.num_channels)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn mean_absolute_value(c: &[f64]) -> f64 {
    c.iter().map(|v| libm::fabs(*v)).sum::<f64>() / c.len() as f64
}

/// Count of interior points where the slope changes sign (zero threshold).
pub fn slope_sign_changes(c: &[f64]) -> usize {
    c.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count()
}

/// AR(3) predictor coefficients `x_t ~ a1 x_{t-1} + a2 x_{t-2} + a3 x_{t-3}`
/// from the biased autocovariance via Levinson-Durbin.
///
/// A subband whose variance is negligible against its squared mean gives
/// zeros.
pub fn ar_coefficients(c: &[f64]) -> [f64; AR_ORDER] {
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let mut r = [0.0; AR_ORDER + 1];
    for (lag, slot) in r.iter_mut().enumerate() {
        *slot = c
            .iter()
            .zip(c.iter().skip(lag))
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n;
    }
    let mut a = [0.0; AR_ORDER];
    if !(r[0] > 1e-12 * (mean * mean) && r[0] > f64::MIN_POSITIVE) {
        return a;
    }
    let mut err = r[0];
    for m in 1..=AR_ORDER {
        let mut acc = r[m];
        for i in 1..m {
            acc -= a[i - 1] * r[m - i];
        }
        let k = acc / err;
        let prev = a;
        a[m - 1] = k;
        for i in 1..m {
            a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        }
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    a
}

pub fn extract_features(record: &SignalRecord) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(feature_dim(record.num_channels()));
    for (channel, samples) in record.channels().iter().enumerate() {
        let bands = dwt_db6(samples, DWT_LEVELS)?;
        for (band, subband) in bands.iter().zip(Subband::ALL) {
            if band.len() < MIN_SUBBAND_LEN {
                return Err(FeatureError::SubbandTooShort {
                    channel,
                    subband,
                    len: band.len(),
                });
            }
            values.push(mean_absolute_value(band));
            values.push(slope_sign_changes(band) as f64);
            values.extend_from_slice(&ar_coefficients(band));
        }
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(i));
    }
    Ok(FeatureVector {
        values,
        num_channels: record.num_channels(),
    })
}

/// Equal-frequency bin index per value. Tied values share the bin of their
/// first occurrence in sorted order, so the result depends only on the
/// multiset of values.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]].total_cmp(&values[order[start]]) == Ordering::Equal {
            end += 1;
        }
        let bin = start * bins / n;
        for &i in &order[start..end] {
            out[i] = bin;
        }
        start = end;
    }
    out
}

/// Plug-in mutual information (nats) between an equal-frequency-binned
/// feature and the class label.
pub fn mutual_information(feature: &[f64], labels: &[ClassLabel], bins: usize) -> Result<f64, FeatureError> {
    if feature.len() != labels.len() {
        return Err(FeatureError::LengthMismatch {
            features: feature.len(),
            labels: labels.len(),
        });
    }
    if bins == 0 {
        return Err(FeatureError::ZeroBins);
    }
    let mut classes: Vec<ClassLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(FeatureError::SingleLabel);
    }
    let binned = equal_frequency_bins(feature, bins);
    let k = classes.len();
    let mut joint = vec![0usize; bins * k];
    for (&b, y) in binned.iter().zip(labels) {
        let c = classes.binary_search(y).unwrap_or(0);
        joint[b * k + c] += 1;
    }
    let n = feature.len() as f64;
    let bin_tot: Vec<usize> = (0..bins).map(|b| joint[b * k..(b + 1) * k].iter().sum()).collect();
    let cls_tot: Vec<usize> = (0..k).map(|c| (0..bins).map(|b| joint[b * k + c]).sum()).collect();
    let mut mi = 0.0;
    for b in 0..bins {
        for c in 0..k {
            let nbc = joint[b * k + c];
            if nbc == 0 {
                continue;
            }
            let ratio = (nbc as f64 * n) / (bin_tot[b] as f64 * cls_tot[c] as f64);
            mi += nbc as f64 / n * libm::log(ratio);
        }
    }
    Ok(if mi > 0.0 { mi } else { 0.0 })
}

/// Indices of the retained features plus the score of every source feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMask {
    selected: Vec<usize>,
    source_dim: usize,
    scores: Vec<f64>,
}

impl FeatureMask {
    /// Mask keeping every feature (scores zero).
    pub fn identity(dim: usize) -> Self {
        Self {
            selected: (0..dim).collect(),
            source_dim: dim,
            scores: vec![0.0; dim],
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.selected.iter().map(|&i| x[i]).collect()
    }
}

/// Count of features kept for a fraction: `ceil(fraction * d)`, at least one.
pub fn selected_count(fraction: f64, dim: usize) -> usize {
    let k = libm::ceil(fraction * dim as f64) as usize;
    k.clamp(1, dim)
}

/// Score every column by mutual information and keep the best
/// `ceil(fraction * d)`; equal scores favour the lower column index.
pub fn select_features(rows: &[Vec<f64>], labels: &[ClassLabel], fraction: f64) -> Result<FeatureMask, FeatureError> {
    if rows.len() < 2 {
        return Err(FeatureError::TooFewRows(rows.len()));
    }
    if rows.len() != labels.len() {
        return Err(FeatureError::LengthMismatch {
            features: rows.len(),
            labels: labels.len(),
        });
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(FeatureError::InvalidFraction(fraction));
    }
    let dim = rows[0].len();
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(FeatureError::RaggedMatrix {
            row,
            expected: dim,
            found: r.len(),
        });
    }
    let mut column = vec![0.0; rows.len()];
    let mut scores = Vec::with_capacity(dim);
    for j in 0..dim {
        for (slot, r) in column.iter_mut().zip(rows) {
            *slot = r[j];
        }
        scores.push(mutual_information(&column, labels, DEFAULT_BINS)?);
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = order[..selected_count(fraction, dim)].to_vec();
    selected.sort_unstable();
    Ok(FeatureMask {
        selected,
        source_dim: dim,
        scores,
    })
}

/// Column names for CSV export (`f0..f{d-1}` annotated with their slot).
pub fn feature_names(num_channels: usize) -> Vec<String> {
    feature_layout(num_channels)
        .iter()
        .map(|s| alloc::format!("{s}"))
        .collect()
}
