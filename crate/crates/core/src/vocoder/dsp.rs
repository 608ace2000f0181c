//! Spectral primitives shared by analysis and synthesis: real-signal FFT
//! wrappers, all-pass cepstral warping and minimum-phase reconstruction.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse complex FFTs of one size, shareable across threads.
#[derive(Clone)]
pub(crate) struct Spectral {
    pub n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    /// Spectrum of a real signal (zero-padded or truncated to `n`).
    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> =
            (0..self.n).map(|i| Complex::new(x.get(i).copied().unwrap_or(0.0), 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn power(&self, x: &[f64]) -> Vec<f64> {
        self.forward_real(x)[..=self.n / 2].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Real part of the normalized inverse transform.
    pub fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.inverse.process(&mut spec);
        let scale = 1.0 / self.n as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Evaluates `d0 + sum_{m>=1} d_m cos(m w_k)` on bins 0..=n/2.
    pub fn cosine_series(&self, one_sided: &[f64]) -> Vec<f64> {
        let half = self.n / 2;
        let mut buf = vec![Complex::new(0.0, 0.0); self.n];
        for (m, &d) in one_sided.iter().enumerate().take(half + 1) {
            if m == 0 || m == half {
                buf[m].re += d;
            } else {
                buf[m].re += 0.5 * d;
                buf[self.n - m].re += 0.5 * d;
            }
        }
        self.forward.process(&mut buf);
        buf[..=half].iter().map(|c| c.re).collect()
    }

    /// One-sided cepstrum `d` of a real, even log spectrum given on bins
    /// 0..=n/2, so that `cosine_series(d)` reproduces it.
    pub fn one_sided_cepstrum(&self, log_half: &[f64]) -> Vec<f64> {
        let half = self.n / 2;
        let full: Vec<Complex<f64>> = (0..self.n)
            .map(|k| Complex::new(log_half[if k <= half { k } else { self.n - k }], 0.0))
            .collect();
        let c = self.inverse_real(full);
        (0..=half).map(|m| if m == 0 || m == half { c[m] } else { 2.0 * c[m] }).collect()
    }

    /// Minimum-phase spectrum (all n bins) whose log magnitude is `log_amp`.
    pub fn minimum_phase(&self, log_amp: &[f64]) -> Vec<Complex<f64>> {
        let d = self.one_sided_cepstrum(log_amp);
        let mut buf = vec![Complex::new(0.0, 0.0); self.n];
        for (m, &v) in d.iter().enumerate() {
            buf[m].re = v;
        }
        self.forward.process(&mut buf);
        buf.iter().map(|c| c.exp()).collect()
    }
}

/// All-pass frequency transform of a one-sided cepstrum, returning
/// `out_order + 1` coefficients. A positive `alpha` stretches low frequencies
/// (warping); `-alpha` undoes it.
pub fn freqt(c: &[f64], out_order: usize, alpha: f64) -> Vec<f64> {
    let beta = 1.0 - alpha * alpha;
    let mut g = vec![0.0; out_order + 1];
    let mut d = vec![0.0; out_order + 1];
    for &ci in c.iter().rev() {
        d[0] = g[0];
        g[0] = ci + alpha * d[0];
        if out_order >= 1 {
            d[1] = g[1];
            g[1] = beta * d[0] + alpha * d[1];
        }
        for j in 2..=out_order {
            d[j] = g[j];
            g[j] = d[j - 1] + alpha * (d[j] - g[j - 1]);
        }
    }
    g
}

/// Warped frequency (radians) that linear frequency `omega` maps to.
pub fn warp_frequency(omega: f64, alpha: f64) -> f64 {
    omega + 2.0 * (alpha * omega.sin() / (1.0 - alpha * omega.cos())).atan()
}

/// Symmetric Hann window of length `len` scaled to unit energy.
pub(crate) fn unit_energy_hann(len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / len as f64).cos())
        .collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.into_iter().map(|v| v / norm).collect()
}

/// Moving average of a half spectrum over `width` bins (fractional),
/// mirrored at DC and Nyquist.
pub(crate) fn smooth_bins(power: &[f64], width: f64) -> Vec<f64> {
    let half = power.len() - 1;
    if width <= 1.0 {
        return power.to_vec();
    }
    let pad = width.ceil() as usize + 1;
    let at = |j: isize| -> f64 {
        let mut j = j.unsigned_abs();
        let period = 2 * half;
        j %= period.max(1);
        if j > half {
            j = period - j;
        }
        power[j]
    };
    // cumulative sum over the mirrored extension, cum[i] = sum of ext[..i]
    let ext_len = half + 1 + 2 * pad;
    let mut cum = Vec::with_capacity(ext_len + 1);
    cum.push(0.0);
    for i in 0..ext_len {
        let v = at(i as isize - pad as isize);
        cum.push(cum[i] + v);
    }
    let interp = |x: f64| -> f64 {
        let i = x.floor().clamp(0.0, (cum.len() - 2) as f64) as usize;
        let f = x - i as f64;
        cum[i] + f * (cum[i + 1] - cum[i])
    };
    (0..=half)
        .map(|k| {
            // bin k covers [k - 0.5, k + 0.5) in the cumulative coordinate
            let centre = k as f64 + pad as f64 + 0.5;
            (interp(centre + width / 2.0) - interp(centre - width / 2.0)) / width
        })
        .collect()
}

/// Windowed-sinc fractional-delay read of `x` at real position `pos`
/// (zero outside the buffer).
pub(crate) fn sample_at(x: &[f64], pos: f64) -> f64 {
    const TAPS: isize = 32;
    let base = pos.floor();
    let frac = pos - base;
    let base = base as isize;
    if frac.abs() < 1e-12 {
        return if base >= 0 && (base as usize) < x.len() { x[base as usize] } else { 0.0 };
    }
    let mut acc = 0.0;
    for t in -TAPS + 1..=TAPS {
        let idx = base + t;
        if idx < 0 || idx as usize >= x.len() {
            continue;
        }
        let d = t as f64 - frac;
        let sinc = (std::f64::consts::PI * d).sin() / (std::f64::consts::PI * d);
        let phi = std::f64::consts::PI * d / TAPS as f64;
        let win = 0.42 + 0.5 * phi.cos() + 0.08 * (2.0 * phi).cos();
        acc += x[idx as usize] * sinc * win;
    }
    acc
}
