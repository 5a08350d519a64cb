//! Labelled multichannel biosignal records, segmentation and stratified folds.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::ClassLabel;

/// Shortest admissible record, in samples.
pub const MIN_RECORD_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("signalset contains no records")]
    NoRecords,
    #[error("record {record_id}: ragged channels ({detail})")]
    RaggedRecord { record_id: String, detail: String },
    #[error("record {record_id}: {len} samples, at least {MIN_RECORD_SAMPLES} required")]
    RecordTooShort { record_id: String, len: usize },
    #[error("record {record_id}: label {label} outside 1..={num_classes}")]
    LabelOutOfRange {
        record_id: String,
        label: ClassLabel,
        num_classes: u32,
    },
    #[error("class {0} has no records")]
    EmptyClass(ClassLabel),
    #[error("record {record_id}: {found} channels, expected {expected}")]
    ChannelCountMismatch {
        record_id: String,
        expected: usize,
        found: usize,
    },
    #[error("record {record_id}: sample rate {found} Hz, expected {expected} Hz")]
    SampleRateMismatch {
        record_id: String,
        expected: u32,
        found: u32,
    },
    #[error("duplicate record id {0}")]
    DuplicateRecordId(String),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("number of classes must be positive")]
    NoClasses,
    #[error("window of {window} samples is shorter than {MIN_RECORD_SAMPLES}")]
    WindowTooShort { window: usize },
    #[error("window of {window} samples exceeds shortest record ({shortest} samples)")]
    WindowTooLong { window: usize, shortest: usize },
    #[error("class {class} has {count} records, {k} folds need at least {k}")]
    TooFewPerClass { class: ClassLabel, count: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
}

/// One labelled window of multichannel samples (channel-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    record_id: String,
    channels: Vec<Vec<f64>>,
    sample_rate_hz: u32,
    class_label: ClassLabel,
}

impl SignalRecord {
    pub fn new(
        record_id: impl Into<String>,
        channels: Vec<Vec<f64>>,
        sample_rate_hz: u32,
        class_label: ClassLabel,
    ) -> Result<Self, SignalError> {
        let record_id = record_id.into();
        if sample_rate_hz == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        let first = match channels.first() {
            Some(c) => c.len(),
            None => {
                return Err(SignalError::RaggedRecord {
                    record_id,
                    detail: "no channels".into(),
                })
            }
        };
        if let Some((i, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != first) {
            return Err(SignalError::RaggedRecord {
                detail: format!("channel {} has {} samples, channel 1 has {}", i + 1, c.len(), first),
                record_id,
            });
        }
        if first < MIN_RECORD_SAMPLES {
            return Err(SignalError::RecordTooShort { record_id, len: first });
        }
        Ok(Self {
            record_id,
            channels,
            sample_rate_hz,
            class_label,
        })
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn class_label(&self) -> ClassLabel {
        self.class_label
    }
}

/// A validated collection of records over the classes `1..=num_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSet {
    records: Vec<SignalRecord>,
    num_classes: u32,
    num_channels: usize,
    sample_rate_hz: u32,
}

impl SignalSet {
    pub fn new(records: Vec<SignalRecord>, num_classes: u32) -> Result<Self, SignalError> {
        if num_classes == 0 {
            return Err(SignalError::NoClasses);
        }
        let first = records.first().ok_or(SignalError::NoRecords)?;
        let num_channels = first.num_channels();
        let sample_rate_hz = first.sample_rate_hz();
        let mut seen = BTreeSet::new();
        let mut counts = alloc::vec![0usize; num_classes as usize];
        for r in &records {
            if r.num_channels() != num_channels {
                return Err(SignalError::ChannelCountMismatch {
                    record_id: r.record_id.clone(),
                    expected: num_channels,
                    found: r.num_channels(),
                });
            }
            if r.sample_rate_hz != sample_rate_hz {
                return Err(SignalError::SampleRateMismatch {
                    record_id: r.record_id.clone(),
                    expected: sample_rate_hz,
                    found: r.sample_rate_hz,
                });
            }
            if r.class_label == 0 || r.class_label > num_classes {
                return Err(SignalError::LabelOutOfRange {
                    record_id: r.record_id.clone(),
                    label: r.class_label,
                    num_classes,
                });
            }
            if !seen.insert(r.record_id.as_str()) {
                return Err(SignalError::DuplicateRecordId(r.record_id.clone()));
            }
            counts[(r.class_label - 1) as usize] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(SignalError::EmptyClass(c as ClassLabel + 1));
        }
        Ok(Self {
            records,
            num_classes,
            num_channels,
            sample_rate_hz,
        })
    }

    pub fn records(&self) -> &[SignalRecord] {
        &self.records
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.records.iter().map(|r| r.class_label).collect()
    }

    /// Record count per class, index 0 holding class 1.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.num_classes as usize];
        for r in &self.records {
            counts[(r.class_label - 1) as usize] += 1;
        }
        counts
    }
}

/// Split every record into non-overlapping windows of `window_ms`; the
/// trailing partial window is dropped.
pub fn segment(set: &SignalSet, window_ms: u32) -> Result<SignalSet, SignalError> {
    let window = (window_ms as u64 * set.sample_rate_hz as u64 / 1000) as usize;
    if window < MIN_RECORD_SAMPLES {
        return Err(SignalError::WindowTooShort { window });
    }
    let shortest = set.records.iter().map(SignalRecord::len).min().unwrap_or(0);
    if window > shortest {
        return Err(SignalError::WindowTooLong { window, shortest });
    }
    let mut out = Vec::new();
    for r in &set.records {
        for w in 0..r.len() / window {
            let span = w * window..(w + 1) * window;
            out.push(SignalRecord {
                record_id: format!("{}-w{}", r.record_id, w),
                channels: r.channels.iter().map(|c| c[span.clone()].to_vec()).collect(),
                sample_rate_hz: r.sample_rate_hz,
                class_label: r.class_label,
            });
        }
    }
    SignalSet::new(out, set.num_classes)
}

/// Assignment of every record to one of `k` folds, stratified by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    record_ids: Vec<String>,
    fold_of: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fold index per record, aligned with the source record order.
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn assignment(&self, record_id: &str) -> Option<usize> {
        self.record_ids
            .iter()
            .position(|id| id == record_id)
            .map(|i| self.fold_of[i])
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&str, usize)> {
        self.record_ids
            .iter()
            .map(String::as_str)
            .zip(self.fold_of.iter().copied())
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        fold_members(&self.fold_of, fold, true)
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        fold_members(&self.fold_of, fold, false)
    }
}

pub(crate) fn fold_members(fold_of: &[usize], fold: usize, inside: bool) -> Vec<usize> {
    fold_of
        .iter()
        .enumerate()
        .filter(|(_, &f)| (f == fold) == inside)
        .map(|(i, _)| i)
        .collect()
}

pub fn stratified_folds(set: &SignalSet, k: usize, seed: u64) -> Result<FoldPlan, SignalError> {
    let fold_of = stratified_assignment(&set.labels(), set.num_classes, k, seed)?;
    Ok(FoldPlan {
        k,
        seed,
        record_ids: set.records.iter().map(|r| r.record_id.clone()).collect(),
        fold_of,
    })
}

/// Label-level stratified assignment: each class is shuffled and dealt
/// round-robin, continuing the dealer position across classes so overall fold
/// sizes also stay within one of each other.
pub fn stratified_assignment(
    labels: &[ClassLabel],
    num_classes: u32,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, SignalError> {
    if k < 2 {
        return Err(SignalError::InvalidFoldCount(k));
    }
    let mut rng = rng_from_seed(seed);
    let mut fold_of = alloc::vec![0usize; labels.len()];
    let mut dealer = 0usize;
    for class in 1..=num_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(SignalError::TooFewPerClass {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members {
            fold_of[i] = dealer % k;
            dealer += 1;
        }
    }
    Ok(fold_of)
}
