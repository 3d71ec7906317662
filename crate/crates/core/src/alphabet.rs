//! Output alphabets shared by the normalizer, the decoder and the network's
//! final layer.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlphabetError {
    #[error("alphabet is empty")]
    Empty,
    #[error("symbol {0:?} appears more than once")]
    Duplicate(String),
    #[error("symbol {0:?} must be exactly one character")]
    NotSingleChar(String),
    #[error("blank index {found} must equal the symbol count {expected}")]
    BlankIndex { expected: usize, found: usize },
    #[error("unknown alphabet preset {0:?}")]
    UnknownPreset(String),
    #[error("reading alphabet file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing alphabet file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Deserialize)]
struct RawAlphabet {
    symbols: Vec<String>,
    blank_index: Option<usize>,
}

/// Ordered grapheme list. The CTC blank is not a member and always sits at
/// index `len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAlphabet")]
pub struct AlphabetSpec {
    symbols: Vec<String>,
    blank_index: usize,
    #[serde(skip)]
    lookup: HashMap<char, usize>,
}

impl TryFrom<RawAlphabet> for AlphabetSpec {
    type Error = AlphabetError;

    fn try_from(raw: RawAlphabet) -> Result<Self, Self::Error> {
        let spec = AlphabetSpec::new(raw.symbols)?;
        if let Some(found) = raw.blank_index {
            if found != spec.blank_index {
                return Err(AlphabetError::BlankIndex {
                    expected: spec.blank_index,
                    found,
                });
            }
        }
        Ok(spec)
    }
}

const LATIN: &str = "abcdefghijklmnopqrstuvwxyz";

impl AlphabetSpec {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self, AlphabetError> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            let mut chars = s.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(AlphabetError::NotSingleChar(s.clone())),
            };
            if lookup.insert(c, i).is_some() {
                return Err(AlphabetError::Duplicate(s.clone()));
            }
        }
        let blank_index = symbols.len();
        Ok(Self {
            symbols,
            blank_index,
            lookup,
        })
    }

    /// Space, `a`..`z`, apostrophe: 28 symbols.
    pub fn english() -> Self {
        let mut symbols = vec![" ".to_string()];
        symbols.extend(LATIN.chars().map(String::from));
        symbols.push("'".into());
        Self::new(symbols).expect("static alphabet")
    }

    /// English plus `ñ` appended before the blank.
    pub fn spanish() -> Self {
        let mut symbols = Self::english().symbols;
        symbols.push("ñ".into());
        Self::new(symbols).expect("static alphabet")
    }

    /// Built-in alphabets. German, French and Italian share the English
    /// letters once their diacritics are flattened.
    pub fn preset(name: &str) -> Result<Self, AlphabetError> {
        match name {
            "en" | "de" | "fr" | "it" => Ok(Self::english()),
            "es" => Ok(Self::spanish()),
            other => Err(AlphabetError::UnknownPreset(other.to_string())),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, AlphabetError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Accepts a preset name or a path to a JSON file `{"symbols": [...]}`.
    pub fn resolve(name_or_path: &str) -> Result<Self, AlphabetError> {
        match Self::preset(name_or_path) {
            Ok(a) => Ok(a),
            Err(AlphabetError::UnknownPreset(_)) if Path::new(name_or_path).is_file() => {
                Self::from_json_file(name_or_path)
            }
            Err(e) => Err(e),
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    /// Width of a CTC output frame: symbols plus blank.
    pub fn output_width(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn index_of_char(&self, c: char) -> Option<usize> {
        self.lookup.get(&c).copied()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        let mut chars = symbol.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => self.index_of_char(c),
            _ => None,
        }
    }

    pub fn contains_char(&self, c: char) -> bool {
        self.lookup.contains_key(&c)
    }

    pub fn space_index(&self) -> Option<usize> {
        self.index_of_char(' ')
    }

    /// Maps labels (excluding blank) to text. Out-of-range labels are skipped.
    pub fn labels_to_text(&self, labels: &[usize]) -> String {
        labels
            .iter()
            .filter_map(|&l| self.symbols.get(l))
            .map(String::as_str)
            .collect()
    }
}

impl fmt::Display for AlphabetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s:?}")?;
        }
        write!(f, "] + blank@{}", self.blank_index)
    }
}
