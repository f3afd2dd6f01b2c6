//! Autocorrelation pitch tracking on a 10 ms / 40 ms frame grid.

use serde::{Deserialize, Serialize};

use super::{AudioSignal, FrameGrid, WINDOW};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PitchSettings {
    pub floor_hz: f64,
    pub ceiling_hz: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Frames with a lower RMS are treated as silence.
    pub silence_rms: f64,
}

impl Default for PitchSettings {
    fn default() -> Self {
        PitchSettings {
            floor_hz: 75.0,
            ceiling_hz: 500.0,
            voicing_threshold: 0.45,
            silence_rms: 3e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    /// Hz; 0 for unvoiced frames.
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
}

/// Samples of the analysis window centred on frame `index`, zero-padded
/// past either end of the signal.
pub(crate) fn frame_window(audio: &AudioSignal, grid: &FrameGrid, index: usize) -> Vec<f64> {
    let sr = audio.sample_rate() as f64;
    let len = (WINDOW * sr).round() as i64;
    let center = (grid.center(index) * sr).round() as i64;
    let first = center - len / 2;
    let samples = audio.samples();
    (first..first + len)
        .map(|i| {
            if i >= 0 && (i as usize) < samples.len() {
                samples[i as usize]
            } else {
                0.0
            }
        })
        .collect()
}

pub(crate) fn rms(window: &[f64]) -> f64 {
    (window.iter().map(|x| x * x).sum::<f64>() / window.len() as f64).sqrt()
}

pub fn compute_f0(
    audio: &AudioSignal,
    grid: &FrameGrid,
    settings: &PitchSettings,
) -> Result<PitchTrack> {
    let window_len = (WINDOW * audio.sample_rate() as f64).round() as usize;
    if audio.samples().len() < window_len {
        return Err(Error::Audio(format!(
            "signal has {} samples, shorter than one {window_len}-sample analysis window",
            audio.samples().len()
        )));
    }
    let sr = audio.sample_rate() as f64;
    let min_lag = (sr / settings.ceiling_hz).floor() as usize;
    let max_lag = (sr / settings.floor_hz).ceil() as usize;

    let mut f0 = Vec::with_capacity(grid.count);
    let mut voiced = Vec::with_capacity(grid.count);
    for i in 0..grid.count {
        let mut w = frame_window(audio, grid, i);
        let energy = rms(&w);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        w.iter_mut().for_each(|x| *x -= mean);

        let estimate = if energy >= settings.silence_rms {
            best_period(&w, min_lag, max_lag)
        } else {
            None
        };
        match estimate {
            Some((lag, strength)) if strength >= settings.voicing_threshold => {
                f0.push(sr / lag);
                voiced.push(true);
            }
            _ => {
                f0.push(0.0);
                voiced.push(false);
            }
        }
    }
    Ok(PitchTrack { f0, voiced })
}

/// Normalized cross-correlation of the window with itself at `lag`.
fn nccf(w: &[f64], lag: usize) -> f64 {
    let n = w.len() - lag;
    let (mut num, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        num += w[i] * w[i + lag];
        e0 += w[i] * w[i];
        e1 += w[i + lag] * w[i + lag];
    }
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        num / denom
    } else {
        0.0
    }
}

/// Fractional period (in samples) and its correlation strength.
///
/// Picks the shortest-lag local maximum within 10% of the global maximum,
/// which keeps pure tones from locking onto multiples of their period.
fn best_period(w: &[f64], min_lag: usize, max_lag: usize) -> Option<(f64, f64)> {
    let lo = min_lag.saturating_sub(1).max(1);
    let hi = (max_lag + 1).min(w.len() - 2);
    if hi <= lo + 1 {
        return None;
    }
    let r: Vec<f64> = (lo..=hi).map(|lag| nccf(w, lag)).collect();
    let peaks: Vec<usize> = (1..r.len() - 1)
        .filter(|&j| {
            let lag = lo + j;
            (min_lag..=max_lag).contains(&lag) && r[j] >= r[j - 1] && r[j] >= r[j + 1] && r[j] > 0.0
        })
        .collect();
    let best = peaks
        .iter()
        .map(|&j| r[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let j = *peaks.iter().find(|&&j| r[j] >= 0.9 * best)?;

    let (a, b, c) = (r[j - 1], r[j], r[j + 1]);
    let curvature = a - 2.0 * b + c;
    let shift = if curvature < 0.0 {
        0.5 * (a - c) / curvature
    } else {
        0.0
    };
    let peak = b - 0.25 * (a - c) * shift;
    Some(((lo + j) as f64 + shift, peak.min(1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedF0 {
    pub f0: Vec<f64>,
    /// Set when no frame was voiced and the track was filled with the default.
    pub fallback: bool,
}

/// Fill unvoiced frames by linear interpolation between the nearest voiced
/// neighbours, holding the edge values beyond the first/last voiced frame.
pub fn interpolate_unvoiced(f0: &[f64], voiced: &[bool], default_hz: f64) -> InterpolatedF0 {
    let anchors: Vec<usize> = (0..f0.len()).filter(|&i| voiced[i]).collect();
    let (Some(&first), Some(&last)) = (anchors.first(), anchors.last()) else {
        return InterpolatedF0 {
            f0: vec![default_hz; f0.len()],
            fallback: true,
        };
    };
    let mut out = f0.to_vec();
    out[..first].fill(f0[first]);
    out[last + 1..].fill(f0[last]);
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            out[i] = f0[a] + t * (f0[b] - f0[a]);
        }
    }
    InterpolatedF0 {
        f0: out,
        fallback: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prosody::{sine, SAMPLE_RATE};

    fn grid_for(audio: &AudioSignal) -> FrameGrid {
        FrameGrid::new(0.0, audio.duration())
    }

    #[test]
    fn tone_100hz_all_interior_frames_voiced() {
        let tone = sine(100.0, 0.5, 0.5);
        let track = compute_f0(&tone, &grid_for(&tone), &PitchSettings::default()).unwrap();
        assert_eq!(track.f0.len(), 50);
        for i in 1..track.f0.len() - 1 {
            assert!(track.voiced[i], "frame {i} unvoiced");
            assert!(
                (track.f0[i] - 100.0).abs() <= 1.0,
                "frame {i}: {}",
                track.f0[i]
            );
        }
    }

    #[test]
    fn tone_200hz() {
        let tone = sine(200.0, 0.3, 0.3);
        let track = compute_f0(&tone, &grid_for(&tone), &PitchSettings::default()).unwrap();
        for i in 1..track.f0.len() - 1 {
            assert!(
                (track.f0[i] - 200.0).abs() <= 2.0,
                "frame {i}: {}",
                track.f0[i]
            );
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        let audio = AudioSignal::new(vec![0.0; 8000], SAMPLE_RATE).unwrap();
        let track = compute_f0(&audio, &grid_for(&audio), &PitchSettings::default()).unwrap();
        assert!(track.voiced.iter().all(|v| !v));
        assert!(track.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn too_short_rejected() {
        let audio = AudioSignal::new(vec![0.1; 100], SAMPLE_RATE).unwrap();
        assert!(compute_f0(
            &audio,
            &FrameGrid::new(0.0, 0.01),
            &PitchSettings::default()
        )
        .is_err());
    }

    #[test]
    fn interpolation_cases() {
        let r = interpolate_unvoiced(
            &[100.0, 0.0, 0.0, 130.0],
            &[true, false, false, true],
            100.0,
        );
        assert_eq!(r.f0, vec![100.0, 110.0, 120.0, 130.0]);
        assert!(!r.fallback);

        let same = interpolate_unvoiced(&[90.0, 95.0], &[true, true], 100.0);
        assert_eq!(same.f0, vec![90.0, 95.0]);

        let edges = interpolate_unvoiced(&[0.0, 120.0, 0.0], &[false, true, false], 100.0);
        assert_eq!(edges.f0, vec![120.0, 120.0, 120.0]);

        let none = interpolate_unvoiced(&[0.0, 0.0], &[false, false], 100.0);
        assert_eq!(none.f0, vec![100.0, 100.0]);
        assert!(none.fallback);
    }
}
