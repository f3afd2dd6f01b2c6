use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const PAD_SYMBOL: &str = "<pad>";

pub const VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

pub const CONSONANTS: [&str; 24] = [
    "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N", "NG", "P", "R", "S", "SH", "T",
    "TH", "V", "W", "Y", "Z", "ZH",
];

/// 39 ARPAbet symbols plus the padding symbol at index 0.
pub const INVENTORY_SIZE: usize = 1 + VOWELS.len() + CONSONANTS.len();

const UNVOICED: [&str; 9] = ["CH", "F", "HH", "K", "P", "S", "SH", "T", "TH"];

/// Index into the phoneme inventory. Index 0 is padding; vowels follow,
/// then consonants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhonemeId(u8);

impl PhonemeId {
    pub const PAD: PhonemeId = PhonemeId(0);

    pub fn from_symbol(symbol: &str) -> Result<Self> {
        if symbol == PAD_SYMBOL {
            return Ok(Self::PAD);
        }
        VOWELS
            .iter()
            .chain(CONSONANTS.iter())
            .position(|&s| s == symbol)
            .map(|i| PhonemeId(i as u8 + 1))
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < INVENTORY_SIZE).then_some(PhonemeId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> &'static str {
        match self.0 as usize {
            0 => PAD_SYMBOL,
            i if i <= VOWELS.len() => VOWELS[i - 1],
            i => CONSONANTS[i - 1 - VOWELS.len()],
        }
    }

    pub fn is_pad(self) -> bool {
        self.0 == 0
    }

    pub fn is_vowel(self) -> bool {
        (1..=VOWELS.len()).contains(&(self.0 as usize))
    }

    /// Whether the phoneme is produced with vocal fold vibration.
    pub fn is_voiced(self) -> bool {
        !self.is_pad() && !UNVOICED.contains(&self.symbol())
    }
}

impl fmt::Display for PhonemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for PhonemeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for PhonemeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PhonemeId::from_symbol(&s).map_err(serde::de::Error::custom)
    }
}
