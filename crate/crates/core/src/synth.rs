//! Synthetic labelled signalsets and random box structures.
//!
//! Every channel is a stationary second-order autoregressive Gaussian process
//! whose resonance frequency and gain depend on the class, plus white noise.
//! Record-level jitter of the resonance makes neighbouring classes overlap.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::context::{validate_structure, BoxDef, StructureDef};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signal::{SignalError, SignalRecord, SignalSet};
use crate::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub num_classes: u32,
    pub records_per_class: usize,
    pub num_channels: usize,
    pub samples: usize,
    pub sample_rate_hz: u32,
    /// Resonance band shared by all classes, in Hz.
    pub band_hz: (f64, f64),
    /// Pole radius of the resonators; closer to 1 gives sharper peaks.
    pub pole_radius: f64,
    /// Standard deviation of the per-record resonance shift, in Hz.
    pub jitter_hz: f64,
    /// Standard deviation of the additive white noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_classes: 6,
            records_per_class: 100,
            num_channels: 4,
            samples: 256,
            sample_rate_hz: 1000,
            band_hz: (40.0, 360.0),
            pole_radius: 0.9,
            jitter_hz: 80.0,
            noise: 4.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Resonance frequency of `channel` for `class`: channels alternate
    /// between ascending and descending class order, rotated by the channel.
    pub fn resonance_hz(&self, class: ClassLabel, channel: usize) -> f64 {
        let c = self.num_classes as usize;
        let k = class as usize - 1;
        let slot = if channel.is_multiple_of(2) {
            k + channel
        } else {
            c - 1 - k + channel
        } % c;
        let (lo, hi) = self.band_hz;
        if c == 1 {
            return (lo + hi) / 2.0;
        }
        lo + (hi - lo) * slot as f64 / (c - 1) as f64
    }

    pub fn gain(&self, class: ClassLabel, channel: usize) -> f64 {
        1.0 + 0.5 * (((class as usize - 1) + channel) % 3) as f64
    }
}

fn ar2<R: Rng + ?Sized>(n: usize, freq: f64, radius: f64, fs: f64, rng: &mut R) -> Vec<f64> {
    let theta = 2.0 * core::f64::consts::PI * freq / fs;
    let a1 = 2.0 * radius * libm::cos(theta);
    let a2 = -radius * radius;
    let burn = 64;
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for t in 0..n + burn {
        let e: f64 = rng.sample(StandardNormal);
        let x = a1 * x1 + a2 * x2 + e;
        x2 = x1;
        x1 = x;
        if t >= burn {
            out.push(x);
        }
    }
    out
}

/// Generate the signalset described by `spec`; deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<SignalSet, SignalError> {
    let fs = spec.sample_rate_hz as f64;
    let nyquist_margin = fs / 2.0 - 1.0;
    let mut records = Vec::with_capacity(spec.num_classes as usize * spec.records_per_class);
    for class in 1..=spec.num_classes {
        for i in 0..spec.records_per_class {
            let index = (class as u64 - 1) * spec.records_per_class as u64 + i as u64;
            let mut rng = rng_from_seed(derive_seed(spec.seed, index));
            let shift: f64 = rng.sample::<f64, _>(StandardNormal) * spec.jitter_hz;
            let channels: Vec<Vec<f64>> = (0..spec.num_channels)
                .map(|ch| {
                    let f = (spec.resonance_hz(class, ch) + shift).clamp(1.0, nyquist_margin);
                    let g = spec.gain(class, ch);
                    ar2(spec.samples, f, spec.pole_radius, fs, &mut rng)
                        .into_iter()
                        .map(|v| g * v + spec.noise * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            records.push(SignalRecord::new(
                format!("s{class}_{i:04}"),
                channels,
                spec.sample_rate_hz,
                class,
            )?);
        }
    }
    SignalSet::new(records, spec.num_classes)
}

/// A valid random structure over `num_classes` classes with up to
/// `max_boxes` nested boxes of at most `max_internal` internal movements.
/// Feasibility is not guaranteed.
pub fn random_structure<R: Rng + ?Sized>(
    num_classes: u32,
    max_boxes: usize,
    max_internal: usize,
    rng: &mut R,
) -> StructureDef {
    let c = num_classes;
    let max_internal = max_internal.clamp(1, (c as usize).saturating_sub(1).max(1));
    loop {
        let mut def = StructureDef::with_boxes(c, &[(0, None, None, &[])]);
        def.boxes[0].internal_movements = (1..=c).collect();
        let count = rng.gen_range(0..=max_boxes);
        for id in 1..=count as u32 {
            let parent = rng.gen_range(0..def.boxes.len());
            let used: Vec<u32> = def
                .boxes
                .iter()
                .filter(|b| b.parent == Some(def.boxes[parent].id))
                .filter_map(|b| b.opens_with_movement)
                .collect();
            let free: Vec<u32> = def.boxes[parent]
                .internal_movements
                .iter()
                .copied()
                .filter(|m| !used.contains(m))
                .collect();
            let Some(&opener) = free.choose(rng) else { continue };
            let mut pool: Vec<u32> = (1..=2 * c).filter(|&m| m != opener).collect();
            pool.shuffle(rng);
            pool.truncate(rng.gen_range(1..=max_internal));
            def.boxes.push(BoxDef {
                id,
                parent: Some(def.boxes[parent].id),
                opens_with_movement: Some(opener),
                closes_with_movement: None,
                internal_movements: pool,
            });
        }
        if validate_structure(&def).is_empty() {
            return def;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            records_per_class: 3,
            seed: 5,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn shape_and_labels() {
        let s = generate(&small()).unwrap();
        assert_eq!(s.len(), 18);
        assert_eq!(s.num_classes(), 6);
        assert_eq!(s.num_channels(), 4);
        assert_eq!(s.class_counts(), alloc::vec![3; 6]);
        assert!(s.records().iter().all(|r| r.len() == 256));
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SynthSpec { seed: 6, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn classes_differ_in_resonance_per_channel() {
        let s = SynthSpec::default();
        for ch in 0..s.num_channels {
            let mut f: Vec<u64> = (1..=6).map(|c| s.resonance_hz(c, ch) as u64).collect();
            f.sort_unstable();
            f.dedup();
            assert_eq!(f.len(), 6, "channel {ch}");
        }
    }

    #[test]
    fn random_structures_are_valid() {
        let mut rng = rng_from_seed(3);
        for c in 2..=6 {
            for _ in 0..20 {
                let def = random_structure(c, 4, 3, &mut rng);
                assert!(validate_structure(&def).is_empty());
                assert_eq!(def.boxes[0].internal_movements.len(), c as usize);
            }
        }
    }

    #[test]
    fn spectral_peak_near_resonance() {
        // zero-crossing rate of a sharp resonator tracks its frequency
        let mut rng = rng_from_seed(1);
        let x = ar2(4000, 100.0, 0.98, 1000.0, &mut rng);
        let crossings = x.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
        let est = crossings as f64 / 2.0 / 4.0;
        assert!((est - 100.0).abs() < 15.0, "{est}");
    }
}
