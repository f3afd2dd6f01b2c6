use super::pitch::{frame_window, rms};
use super::{AudioSignal, FrameGrid};

/// Offset that turns dB relative to full scale into a positive quantity.
pub const INTENSITY_OFFSET_DB: f64 = 100.0;

/// Per-frame intensity as `20·log10(RMS + 1e-10) + 100`, clamped at 0.
pub fn compute_intensity(audio: &AudioSignal, grid: &FrameGrid) -> Vec<f64> {
    (0..grid.count)
        .map(|i| {
            let r = rms(&frame_window(audio, grid, i));
            (20.0 * (r + 1e-10).log10() + INTENSITY_OFFSET_DB).max(0.0)
        })
        .collect()
}
