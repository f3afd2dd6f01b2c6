//! Line-delimited JSON feature files. Values are stored at six significant
//! digits, so rewriting a file that was read back reproduces it exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProsodicFeatures;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub word: String,
    pub speaker_id: String,
    pub f0: Vec<f64>,
    pub intensity: Vec<f64>,
    pub voiced: Vec<u8>,
    pub subphoneme_durations: Vec<f64>,
    pub frame_to_subphoneme: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub f0_fallback: bool,
}

fn six_digits(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

impl FeatureRecord {
    pub fn new(word: &str, speaker_id: &str, f: &ProsodicFeatures) -> Self {
        let round = |xs: &[f64]| xs.iter().copied().map(six_digits).collect();
        FeatureRecord {
            word: word.to_string(),
            speaker_id: speaker_id.to_string(),
            f0: round(&f.f0),
            intensity: round(&f.intensity),
            voiced: f.voiced.iter().map(|&v| v as u8).collect(),
            subphoneme_durations: round(&f.subphoneme_durations),
            frame_to_subphoneme: f.frame_to_subphoneme.clone(),
            f0_fallback: f.f0_fallback,
        }
    }

    pub fn features(&self) -> ProsodicFeatures {
        ProsodicFeatures {
            f0: self.f0.clone(),
            intensity: self.intensity.clone(),
            voiced: self.voiced.iter().map(|&v| v != 0).collect(),
            subphoneme_durations: self.subphoneme_durations.clone(),
            frame_to_subphoneme: self.frame_to_subphoneme.clone(),
            f0_fallback: self.f0_fallback,
        }
    }
}

pub fn read_features(reader: impl Read) -> Result<Vec<FeatureRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let index = out.len();
        let rec: FeatureRecord =
            serde_json::from_str(&line).map_err(|e| Error::record(index, e))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_features(records: &[FeatureRecord], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(read_features)
        .map_err(|e| e.in_file(path))
}

pub fn write_feature_file(records: &[FeatureRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    File::create(path)
        .map_err(Error::from)
        .and_then(|f| write_features(records, f))
        .map_err(|e| e.in_file(path))
}
