//! Periodogram of uniformly sampled signals.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz, from 0 to Nyquist.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest non-DC bin.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.freqs
            .iter()
            .zip(&self.power)
            .skip(1)
            .fold(None, |best: Option<(f64, f64)>, (&f, &p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((f, p)),
            })
    }

    /// Summed power over `[lo, hi)`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().skip(1).sum()
    }
}

/// Removes the least-squares line from `x`.
pub fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return vec![0.0; x.len()];
    }
    let mt = (n - 1.0) / 2.0;
    let mx = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let d = i as f64 - mt;
        sxy += d * (v - mx);
        sxx += d * d;
    }
    let slope = sxy / sxx;
    x.iter().enumerate().map(|(i, v)| v - mx - slope * (i as f64 - mt)).collect()
}

/// One-sided periodogram `|X_k|^2 / N` of the linearly detrended signal
/// sampled every `sample_dt` seconds.
pub fn periodogram(x: &[f64], sample_dt: f64) -> Result<Spectrum> {
    if x.len() < 4 {
        return Err(Error::InvalidParameter("periodogram needs at least four samples".into()));
    }
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidParameter("sample spacing must be positive".into()));
    }
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = detrend(x).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    Ok(Spectrum {
        freqs: (0..half).map(|k| k as f64 / (n as f64 * sample_dt)).collect(),
        power: buf[..half].iter().map(|c| c.norm_sqr() / n as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detrend_removes_lines() {
        let x: Vec<f64> = (0..50).map(|i| 3.0 - 0.2 * i as f64).collect();
        assert!(detrend(&x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn finds_sinusoid_peak() {
        let dt = 1e-13;
        let f0 = 6.2e11;
        let x: Vec<f64> = (0..2000)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * f0 * i as f64 * dt).sin() + 1e-3 * i as f64)
            .collect();
        let s = periodogram(&x, dt).unwrap();
        let (f, _) = s.peak().unwrap();
        let bin = 1.0 / (2000.0 * dt);
        assert!((f - f0).abs() <= bin, "{f}");
        assert!(s.band_power(f0 - 3.0 * bin, f0 + 3.0 * bin) > 0.9 * s.total_power());
    }

    #[test]
    fn short_input_rejected() {
        assert!(periodogram(&[1.0, 2.0], 1.0).is_err());
    }
}
