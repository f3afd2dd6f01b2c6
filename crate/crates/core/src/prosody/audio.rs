use std::path::Path;

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;

/// Mono 16 kHz audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Audio(format!(
                "sample rate {sample_rate} Hz is not supported; resample to {SAMPLE_RATE} Hz first (e.g. `sox in.wav -r 16000 out.wav`)"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Audio("empty signal".into()));
        }
        Ok(AudioSignal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Read a 16-bit PCM mono WAV file.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_wav_inner(path).map_err(|e| e.in_file(path))
    }

    fn read_wav_inner(path: &Path) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::Audio(format!(
                "{} channels; expected mono",
                spec.channels
            )));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::Audio(format!(
                "{}-bit {:?} samples; expected 16-bit PCM",
                spec.bits_per_sample, spec.sample_format
            )));
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(samples, spec.sample_rate)
    }

    /// Write as 16-bit PCM mono.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let path = path.as_ref();
        let mut writer =
            hound::WavWriter::create(path, spec).map_err(|e| Error::from(e).in_file(path))?;
        for &s in &self.samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer
                .write_sample(v)
                .map_err(|e| Error::from(e).in_file(path))?;
        }
        writer
            .finalize()
            .map_err(|e| Error::from(e).in_file(path))?;
        Ok(())
    }
}

/// A sine tone, handy for fixtures.
pub fn sine(frequency: f64, amplitude: f64, duration: f64) -> AudioSignal {
    let n = (duration * SAMPLE_RATE as f64).round() as usize;
    let samples = (0..n)
        .map(|i| {
            amplitude
                * (2.0 * std::f64::consts::PI * frequency * i as f64 / SAMPLE_RATE as f64).sin()
        })
        .collect();
    AudioSignal::new(samples, SAMPLE_RATE).expect("valid tone")
}
