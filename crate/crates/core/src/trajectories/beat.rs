//! Windowed spectra of conditioned records and the quantum-beat revival
//! detector.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::run::TrajectoryRecord;
use super::state::{JumpEvent, JumpKind};
use crate::error::{Error, Result};

/// Amplitude spectrum of a linearly detrended, Hann-windowed segment,
/// scaled so a sinusoid of amplitude `A` peaks at `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Angular frequencies.
    pub omega: Vec<f64>,
    pub amplitude: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Angular frequency, interpolated between bins.
    pub omega: f64,
    pub amplitude: f64,
    /// Peak exceeds four times the band median.
    pub significant: bool,
}

fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let ym = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in x.iter().enumerate() {
        let dt = i as f64 - tm;
        sxy += dt * (y - ym);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter().enumerate().map(|(i, &y)| y - ym - slope * (i as f64 - tm)).collect()
}

impl Spectrum {
    /// Zero-pads to at least `4·len` (a power of two).
    pub fn of(samples: &[f64], dt: f64) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::EmptySeries);
        }
        let n = samples.len();
        let x = detrend(samples);
        let w: Vec<f64> = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
            .collect();
        let wsum: f64 = w.iter().sum();
        let m = (4 * n).next_power_of_two();
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
        for i in 0..n {
            buf[i] = Complex::new(x[i] * w[i], 0.0);
        }
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let half = m / 2 + 1;
        let omega = (0..half).map(|k| 2.0 * std::f64::consts::PI * k as f64 / (m as f64 * dt)).collect();
        let amplitude = buf[..half].iter().map(|z| 2.0 * z.norm() / wsum).collect();
        Ok(Self { omega, amplitude })
    }

    /// Bin-wise mean of spectra on a common grid.
    pub fn average(spectra: &[Spectrum]) -> Result<Self> {
        let first = spectra.first().ok_or(Error::EmptySeries)?;
        if spectra.iter().any(|s| s.omega.len() != first.omega.len()) {
            return Err(Error::Unsupported("averaging spectra with different grids".into()));
        }
        let n = spectra.len() as f64;
        let amplitude = (0..first.omega.len())
            .map(|k| spectra.iter().map(|s| s.amplitude[k]).sum::<f64>() / n)
            .collect();
        Ok(Self { omega: first.omega.clone(), amplitude })
    }

    /// Largest local maximum with `lo ≤ ω ≤ hi`.
    pub fn peak(&self, lo: f64, hi: f64) -> Option<Peak> {
        let idx: Vec<usize> = (0..self.omega.len()).filter(|&k| self.omega[k] >= lo && self.omega[k] <= hi).collect();
        let &best = idx.iter().max_by(|&&a, &&b| self.amplitude[a].partial_cmp(&self.amplitude[b]).unwrap())?;
        let amp = self.amplitude[best];
        if !(amp > 1e-12) {
            return None;
        }
        let mut band: Vec<f64> = idx.iter().map(|&k| self.amplitude[k]).collect();
        band.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = band[band.len() / 2];
        let mut omega = self.omega[best];
        let mut amplitude = amp;
        if best > 0 && best + 1 < self.omega.len() {
            let (a, b, c) = (self.amplitude[best - 1], amp, self.amplitude[best + 1]);
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                let p = 0.5 * (a - c) / denom;
                let step = self.omega[1] - self.omega[0];
                omega += p * step;
                amplitude = b - 0.25 * (a - c) * p;
            }
        }
        Some(Peak { omega, amplitude, significant: amp > 4.0 * median })
    }
}

/// Dominant spectral peak of a uniformly sampled segment inside `[lo, hi]`.
pub fn dominant_peak(samples: &[f64], dt: f64, lo: f64, hi: f64) -> Result<Option<Peak>> {
    Ok(Spectrum::of(samples, dt)?.peak(lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatSeries {
    PhotonNumber,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeatSpec {
    /// Length of the pre- and post-event windows.
    pub window: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub series: BeatSeries,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatReport {
    pub event: JumpEvent,
    pub pre: Option<Peak>,
    pub post: Option<Peak>,
    /// Post-event over pre-event band amplitude.
    pub gain: f64,
}

fn band_amplitude(p: &Option<Peak>) -> f64 {
    p.map_or(0.0, |p| p.amplitude)
}

/// Spectral estimate in `[t − T, t)` and `[t, t + T)` around `event`.
pub fn beat_revival_detector(record: &TrajectoryRecord, event: &JumpEvent, spec: &BeatSpec) -> Result<BeatReport> {
    let dt = record.sample_interval();
    let series = match spec.series {
        BeatSeries::PhotonNumber => &record.n_cond,
        BeatSeries::Quadrature => &record.a_cond,
    };
    let pre_range = record.window(event.time - spec.window, event.time)?;
    let post_range = record.window(event.time, event.time + spec.window)?;
    let pre = dominant_peak(&series[pre_range], dt, spec.band_lo, spec.band_hi)?;
    let post = dominant_peak(&series[post_range.start + 1..post_range.end], dt, spec.band_lo, spec.band_hi)?;
    let gain = band_amplitude(&post) / band_amplitude(&pre).max(1e-300);
    Ok(BeatReport { event: *event, pre, post, gain })
}

/// Events with no other event within `±window` and full windows inside
/// the record.
pub fn isolated_events(record: &TrajectoryRecord, window: f64, after: f64) -> Vec<JumpEvent> {
    let end = record.t.last().copied().unwrap_or(0.0);
    let ev = &record.events;
    (0..ev.len())
        .filter(|&i| {
            let t = ev[i].time;
            let clear_before = i == 0 || t - ev[i - 1].time > window;
            let clear_after = i + 1 == ev.len() || ev[i + 1].time - t > window;
            clear_before && clear_after && t - window >= after && t + window <= end
        })
        .map(|i| ev[i])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainComparison {
    pub n_spontaneous: usize,
    pub n_apd: usize,
    pub mean_gain_spontaneous: f64,
    pub mean_gain_apd: f64,
    pub mean_log_gain_spontaneous: f64,
    pub mean_log_gain_apd: f64,
    /// Welch statistic on log gains.
    pub z: f64,
    /// `z` above the one-sided 95 % point.
    pub significant: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// One-sided Welch test that spontaneous-emission gains exceed APD gains.
pub fn compare_gains(reports: &[BeatReport]) -> Result<GainComparison> {
    let pick = |k: JumpKind| -> Vec<f64> {
        reports.iter().filter(|r| r.event.kind == k && r.gain.is_finite() && r.gain > 0.0).map(|r| r.gain).collect()
    };
    let sp = pick(JumpKind::Spontaneous);
    let apd = pick(JumpKind::Apd);
    if sp.len() < 2 || apd.len() < 2 {
        return Err(Error::EmptySeries);
    }
    let lsp: Vec<f64> = sp.iter().map(|g| g.ln()).collect();
    let lapd: Vec<f64> = apd.iter().map(|g| g.ln()).collect();
    let (m1, v1) = mean_var(&lsp);
    let (m2, v2) = mean_var(&lapd);
    let z = (m1 - m2) / (v1 / lsp.len() as f64 + v2 / lapd.len() as f64).sqrt();
    Ok(GainComparison {
        n_spontaneous: sp.len(),
        n_apd: apd.len(),
        mean_gain_spontaneous: mean_var(&sp).0,
        mean_gain_apd: mean_var(&apd).0,
        mean_log_gain_spontaneous: m1,
        mean_log_gain_apd: m2,
        z,
        significant: z > 1.645,
    })
}

/// Mean spacing of local extrema after three passes of a centred moving
/// average over `smooth` (same units as `tau`); extrema closer than `smooth` to the
/// previous one are dropped.
pub fn mean_extremum_spacing(tau: &[f64], values: &[f64], smooth: f64) -> Option<f64> {
    if tau.len() < 3 {
        return None;
    }
    let step = tau[1] - tau[0];
    let half = ((smooth / step) / 2.0).round() as usize;
    let mut sm = values.to_vec();
    for _ in 0..3 {
        let n = sm.len();
        if n <= 2 * half + 2 {
            return None;
        }
        sm = (half..n - half).map(|i| sm[i - half..=i + half].iter().sum::<f64>() / (2 * half + 1) as f64).collect();
    }
    let half = 3 * half;
    let mut ext = Vec::new();
    for i in 1..sm.len().saturating_sub(1) {
        let (a, b, c) = (sm[i - 1], sm[i], sm[i + 1]);
        if (b > a && b >= c) || (b < a && b <= c) {
            let t = tau[i + half];
            if ext.last().is_none_or(|&l: &f64| t - l > smooth) {
                ext.push(t);
            }
        }
    }
    (ext.len() >= 2).then(|| (ext[ext.len() - 1] - ext[0]) / (ext.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_sinusoid_frequency() {
        let dt = 1e-3;
        let w = 400.0;
        let x: Vec<f64> = (0..300).map(|i| 0.3 + 0.7 * (w * i as f64 * dt).sin() + 0.01 * i as f64).collect();
        let p = dominant_peak(&x, dt, 100.0, 1000.0).unwrap().unwrap();
        assert!((p.omega / w - 1.0).abs() < 0.02, "{}", p.omega);
        assert!((p.amplitude / 0.7 - 1.0).abs() < 0.1, "{}", p.amplitude);
        assert!(p.significant);
    }

    #[test]
    fn flat_record_has_no_peak() {
        let x = vec![0.25; 256];
        assert!(dominant_peak(&x, 1e-3, 10.0, 1000.0).unwrap().is_none());
        let ramp: Vec<f64> = (0..256).map(|i| i as f64).collect();
        assert!(dominant_peak(&ramp, 1e-3, 10.0, 1000.0).unwrap().is_none_or(|p| p.amplitude < 1e-9));
    }

    #[test]
    fn extrema_of_a_damped_cosine() {
        let tau: Vec<f64> = (0..4001).map(|i| i as f64 * 1e-3).collect();
        let w = 14.0;
        let v: Vec<f64> = tau.iter().map(|t| (-0.5 * t).exp() * (w * t).cos() + 0.05 * (400.0 * t).sin()).collect();
        let s = mean_extremum_spacing(&tau, &v, 2.0 * std::f64::consts::PI / 400.0).unwrap();
        assert!((s / (std::f64::consts::PI / w) - 1.0).abs() < 0.02, "{s}");
    }

    #[test]
    fn welch_direction() {
        let mk = |kind, gain| BeatReport { event: JumpEvent { time: 0.0, kind, delta_omega: 0.0 }, pre: None, post: None, gain };
        let mut r = Vec::new();
        for i in 0..50 {
            r.push(mk(JumpKind::Spontaneous, 3.0 + 0.1 * (i % 5) as f64));
            r.push(mk(JumpKind::Apd, 1.0 + 0.1 * (i % 5) as f64));
        }
        let c = compare_gains(&r).unwrap();
        assert!(c.significant && c.z > 0.0);
    }
}
