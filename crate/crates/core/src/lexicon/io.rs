//! Line-delimited JSON alignment files, one word per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Phoneme, PhonemeId, Source, StressPattern, WordAlignment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneRecord {
    pub symbol: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentRecord {
    pub word: String,
    pub speaker_id: String,
    pub phones: Vec<PhoneRecord>,
    pub canonical: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized: Option<Vec<u8>>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
}

impl From<&WordAlignment> for AlignmentRecord {
    fn from(w: &WordAlignment) -> Self {
        AlignmentRecord {
            word: w.word.clone(),
            speaker_id: w.speaker_id.clone(),
            phones: w
                .phonemes
                .iter()
                .map(|p| PhoneRecord {
                    symbol: p.symbol.symbol().to_string(),
                    start_s: p.start,
                    end_s: p.end,
                })
                .collect(),
            canonical: w.canonical.bits(),
            realized: w.realized.as_ref().map(StressPattern::bits),
            source: w.source,
            audio: w.audio.clone(),
        }
    }
}

impl TryFrom<AlignmentRecord> for WordAlignment {
    type Error = Error;

    fn try_from(rec: AlignmentRecord) -> Result<Self> {
        let phonemes = rec
            .phones
            .iter()
            .map(|p| {
                Ok(Phoneme::new(
                    PhonemeId::from_symbol(&p.symbol)?,
                    p.start_s,
                    p.end_s,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let canonical = StressPattern::from_bits(&rec.canonical)?;
        let realized = rec
            .realized
            .as_deref()
            .map(StressPattern::from_bits)
            .transpose()?;
        let mut w = WordAlignment::new(
            rec.word,
            rec.speaker_id,
            rec.source,
            phonemes,
            canonical,
            realized,
        )?;
        w.audio = rec.audio;
        Ok(w)
    }
}

pub fn read_alignments(reader: impl Read) -> Result<Vec<WordAlignment>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let index = out.len();
        let rec: AlignmentRecord =
            serde_json::from_str(&line).map_err(|e| Error::record(index, e))?;
        let word = WordAlignment::try_from(rec).map_err(|e| Error::record(index, e))?;
        out.push(word);
    }
    Ok(out)
}

pub fn write_alignments(words: &[WordAlignment], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for word in words {
        serde_json::to_writer(&mut w, &AlignmentRecord::from(word))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_alignment_file(path: impl AsRef<Path>) -> Result<Vec<WordAlignment>> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(read_alignments)
        .map_err(|e| e.in_file(path))
}

pub fn write_alignment_file(words: &[WordAlignment], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    File::create(path)
        .map_err(Error::from)
        .and_then(|f| write_alignments(words, f))
        .map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GARAGE: &str = r#"{"word":"garage","speaker_id":"pl01","phones":[{"symbol":"G","start_s":0.1,"end_s":0.16},{"symbol":"AA","start_s":0.16,"end_s":0.31},{"symbol":"R","start_s":0.31,"end_s":0.37},{"symbol":"AA","start_s":0.37,"end_s":0.46},{"symbol":"ZH","start_s":0.46,"end_s":0.55}],"canonical":[0,1],"realized":[1,0],"source":"human"}"#;

    #[test]
    fn parses_record() {
        let words = read_alignments(GARAGE.as_bytes()).unwrap();
        assert_eq!(words.len(), 1);
        assert_eq!(words[0].syllable_count(), 2);
        assert_eq!(words[0].has_stress_error(), Some(true));
    }

    #[test]
    fn error_names_record() {
        let bad = GARAGE.replace("\"end_s\":0.37", "\"end_s\":0.31");
        let input = format!("{GARAGE}\n{bad}\n");
        let err = read_alignments(input.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("record 1:"), "{msg}");
        assert!(msg.contains("`R`"), "{msg}");
    }

    #[test]
    fn unknown_symbol_and_field() {
        let bad = GARAGE.replace("\"ZH\"", "\"QQ\"");
        let err = read_alignments(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("record 0") && err.contains("QQ"), "{err}");
        let extra = GARAGE.replace("\"source\"", "\"colour\":1,\"source\"");
        assert!(read_alignments(extra.as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let words = read_alignments(GARAGE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_alignments(&words, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim(), GARAGE);
        assert_eq!(read_alignments(buf.as_slice()).unwrap(), words);
    }
}
