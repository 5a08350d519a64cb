//! Daubechies-6 discrete wavelet transform (analysis and synthesis banks).
//!
//! Analysis convolves with the decomposition filters and keeps the odd
//! samples of the full convolution, so a stage maps `n` samples to
//! `floor((n + 11) / 2)` coefficients. Two boundary modes are provided:
//! half-sample symmetric extension (used for feature extraction) and periodic
//! extension, which makes the transform orthonormal and is used as a test
//! oracle for energy preservation.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// db6 decomposition low-pass filter.
pub const DB6_DEC_LO: [f64; 12] = [
    -0.0010773010853084796,
    0.004777257510945511,
    0.0005538422011614961,
    -0.03158203931748603,
    0.027522865530305727,
    0.09750160558732304,
    -0.12976686756726194,
    -0.22626469396543983,
    0.31525035170919763,
    0.7511339080210954,
    0.49462389039845306,
    0.11154074335010947,
];

pub const TAPS: usize = DB6_DEC_LO.len();

/// Quadrature-mirror high-pass: `g[t] = (-1)^(t+1) h[TAPS-1-t]`.
pub const DB6_DEC_HI: [f64; TAPS] = {
    let mut g = [0.0; TAPS];
    let mut t = 0;
    while t < TAPS {
        let v = DB6_DEC_LO[TAPS - 1 - t];
        g[t] = if t % 2 == 0 { -v } else { v };
        t += 1;
    }
    g
};

const fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

// Sum = sqrt(2), unit energy, orthogonal to its even shifts.
const _: () = {
    let mut sum = 0.0;
    let mut t = 0;
    while t < TAPS {
        sum += DB6_DEC_LO[t];
        t += 1;
    }
    assert!(abs(sum - core::f64::consts::SQRT_2) < 1e-12);
    let mut shift = 0;
    while shift < TAPS / 2 {
        let mut dot = 0.0;
        let mut t = 0;
        while t + 2 * shift < TAPS {
            dot += DB6_DEC_LO[t] * DB6_DEC_LO[t + 2 * shift];
            t += 1;
        }
        let want = if shift == 0 { 1.0 } else { 0.0 };
        assert!(abs(dot - want) < 1e-12);
        shift += 1;
    }
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum WaveletError {
    #[error("signal of {len} samples is too short for {levels} levels")]
    SignalTooShort { len: usize, levels: usize },
    #[error("decomposition needs at least one level")]
    ZeroLevels,
    #[error("periodic mode needs a length divisible by 2^{levels}, got {len}")]
    NotDyadic { len: usize, levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Half-sample symmetric: `x[-1] = x[0]`, `x[n] = x[n-1]`.
    Symmetric,
    /// Periodic wrap; orthonormal for even lengths.
    Periodic,
}

/// Multi-level decomposition, coarsest approximation first.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub approx: Vec<f64>,
    /// Detail bands from coarsest (`D_L`) to finest (`D_1`).
    pub details: Vec<Vec<f64>>,
    /// Input length at each stage, finest first; needed to invert.
    lengths: Vec<usize>,
    mode: Extension,
}

impl Decomposition {
    /// Subbands in the order `[A_L, D_L, ..., D_1]`.
    pub fn into_subbands(self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.details.len() + 1);
        out.push(self.approx);
        out.extend(self.details);
        out
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn mode(&self) -> Extension {
        self.mode
    }
}

/// Number of coefficients one analysis stage produces from `n` samples.
pub fn coeff_len(n: usize, mode: Extension) -> usize {
    match mode {
        Extension::Symmetric => (n + TAPS - 1) / 2,
        Extension::Periodic => n / 2,
    }
}

fn reflect(k: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = k.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn extended(x: &[f64], k: isize, mode: Extension) -> f64 {
    match mode {
        Extension::Symmetric => x[reflect(k, x.len())],
        Extension::Periodic => x[k.rem_euclid(x.len() as isize) as usize],
    }
}

/// One analysis stage: `(approx, detail)`.
pub fn dwt_step(x: &[f64], mode: Extension) -> (Vec<f64>, Vec<f64>) {
    let out_len = coeff_len(x.len(), mode);
    let mut a = vec![0.0; out_len];
    let mut d = vec![0.0; out_len];
    for j in 0..out_len {
        let centre = 2 * j as isize + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        for t in 0..TAPS {
            let v = extended(x, centre - t as isize, mode);
            sa += DB6_DEC_LO[t] * v;
            sd += DB6_DEC_HI[t] * v;
        }
        a[j] = sa;
        d[j] = sd;
    }
    (a, d)
}

/// One synthesis stage reconstructing `n` samples; the adjoint of
/// [`dwt_step`] restricted to the original support.
pub fn idwt_step(a: &[f64], d: &[f64], n: usize, mode: Extension) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for j in 0..a.len() {
        let centre = 2 * j as isize + 1;
        for t in 0..TAPS {
            let k = centre - t as isize;
            let idx = match mode {
                Extension::Symmetric if k < 0 || k >= n as isize => continue,
                Extension::Symmetric => k as usize,
                Extension::Periodic => k.rem_euclid(n as isize) as usize,
            };
            x[idx] += DB6_DEC_LO[t] * a[j] + DB6_DEC_HI[t] * d[j];
        }
    }
    x
}

pub fn wavedec(samples: &[f64], levels: usize, mode: Extension) -> Result<Decomposition, WaveletError> {
    if levels == 0 {
        return Err(WaveletError::ZeroLevels);
    }
    let len = samples.len();
    if len < 1 << levels {
        return Err(WaveletError::SignalTooShort { len, levels });
    }
    if mode == Extension::Periodic && !len.is_multiple_of(1 << levels) {
        return Err(WaveletError::NotDyadic { len, levels });
    }
    let mut lengths = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    let mut current = samples.to_vec();
    for _ in 0..levels {
        lengths.push(current.len());
        let (a, d) = dwt_step(&current, mode);
        details.push(d);
        current = a;
    }
    details.reverse();
    Ok(Decomposition {
        approx: current,
        details,
        lengths,
        mode,
    })
}

pub fn waverec(dec: &Decomposition) -> Vec<f64> {
    let mut current = dec.approx.clone();
    for (detail, &n) in dec.details.iter().zip(dec.lengths.iter().rev()) {
        current = idwt_step(&current, detail, n, dec.mode);
    }
    current
}

/// Symmetric-mode db6 decomposition returning `[A_L, D_L, ..., D_1]`.
pub fn dwt_db6(samples: &[f64], levels: usize) -> Result<Vec<Vec<f64>>, WaveletError> {
    wavedec(samples, levels, Extension::Symmetric).map(Decomposition::into_subbands)
}
