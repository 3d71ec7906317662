//! Transcript normalization driven by per-language JSON rule files.
//!
//! Pipeline: NFC, lowercase, numbers and units to words, replacement rules,
//! alphabet filter, whitespace collapse.

mod numbers;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use crate::alphabet::AlphabetSpec;
pub use numbers::{number_to_words, MAX_NUMBER, SUPPORTED_LANGUAGES};

#[derive(Debug, Error)]
pub enum NormError {
    #[error("reading rule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed rule file: {0}")]
    Parse(serde_json::Error),
    #[error("rule file does not match the schema: {0}")]
    Schema(serde_json::Error),
    #[error("replacement pattern must not be empty")]
    EmptyPattern,
    #[error("unsupported number language {0:?}")]
    UnsupportedLanguage(String),
    #[error("number {0} is outside the supported range 0..=10^12")]
    NumberOutOfRange(u64),
    #[error("unknown rule preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    replacements: Vec<(String, String)>,
    #[serde(default)]
    units: BTreeMap<String, String>,
    #[serde(default = "default_language")]
    number_language: String,
    #[serde(default = "default_true")]
    lowercase: bool,
}

fn default_language() -> String {
    "en".into()
}

fn default_true() -> bool {
    true
}

/// Ordered pattern → replacement table applied in a single left-to-right
/// scan. At each position the longest matching pattern wins; among equally
/// long patterns the one listed first wins.
#[derive(Debug, Clone, Default)]
pub struct ReplacementMap {
    rules: Vec<(String, String)>,
    // first char -> rule indices, longest pattern first, then file order
    by_first: HashMap<char, Vec<usize>>,
}

impl ReplacementMap {
    pub fn new(rules: Vec<(String, String)>) -> Result<Self, NormError> {
        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, (pattern, _)) in rules.iter().enumerate() {
            let first = pattern.chars().next().ok_or(NormError::EmptyPattern)?;
            by_first.entry(first).or_default().push(i);
        }
        for indices in by_first.values_mut() {
            indices.sort_by(|&a, &b| rules[b].0.len().cmp(&rules[a].0.len()).then(a.cmp(&b)));
        }
        Ok(Self { rules, by_first })
    }

    pub fn rules(&self) -> &[(String, String)] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn apply(&self, text: &str) -> String {
        if self.rules.is_empty() {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let mut pos = 0;
        while let Some(c) = text[pos..].chars().next() {
            let rest = &text[pos..];
            let hit = self.by_first.get(&c).and_then(|candidates| {
                candidates
                    .iter()
                    .map(|&i| &self.rules[i])
                    .find(|(pattern, _)| rest.starts_with(pattern.as_str()))
            });
            match hit {
                Some((pattern, replacement)) => {
                    out.push_str(replacement);
                    pos += pattern.len();
                }
                None => {
                    out.push(c);
                    pos += c.len_utf8();
                }
            }
        }
        out
    }
}

/// Validated normalization rules for one language.
#[derive(Debug, Clone)]
pub struct NormRules {
    replacements: ReplacementMap,
    units: BTreeMap<String, String>,
    number_language: String,
    lowercase: bool,
}

impl Default for NormRules {
    fn default() -> Self {
        Self {
            replacements: ReplacementMap::default(),
            units: BTreeMap::new(),
            number_language: default_language(),
            lowercase: true,
        }
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("de", include_str!("../../rules/de.json")),
    ("en", include_str!("../../rules/en.json")),
    ("es", include_str!("../../rules/es.json")),
    ("fr", include_str!("../../rules/fr.json")),
    ("it", include_str!("../../rules/it.json")),
];

impl NormRules {
    pub fn from_json_str(text: &str) -> Result<Self, NormError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(NormError::Parse)?;
        let file: RuleFile = serde_json::from_value(value).map_err(NormError::Schema)?;
        if !SUPPORTED_LANGUAGES.contains(&file.number_language.as_str()) {
            return Err(NormError::UnsupportedLanguage(file.number_language));
        }
        let fold = |s: String| if file.lowercase { s.to_lowercase() } else { s };
        let replacements = file
            .replacements
            .into_iter()
            .map(|(p, r)| (fold(p.nfc().collect()), fold(r.nfc().collect())))
            .collect();
        let mut units = BTreeMap::new();
        for (token, spoken) in file.units {
            if token.is_empty() {
                return Err(NormError::EmptyPattern);
            }
            units.insert(fold(token.nfc().collect()), fold(spoken));
        }
        Ok(Self {
            replacements: ReplacementMap::new(replacements)?,
            units,
            number_language: file.number_language,
            lowercase: file.lowercase,
        })
    }

    /// Rules shipped with the crate, by language tag.
    pub fn preset(lang: &str) -> Result<Self, NormError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(tag, _)| *tag == lang)
            .ok_or_else(|| NormError::UnknownPreset(lang.to_string()))?;
        Self::from_json_str(text)
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(tag, _)| *tag)
    }

    /// Preset tag or path to a rule file.
    pub fn resolve(name_or_path: &str) -> Result<Self, NormError> {
        if Path::new(name_or_path).is_file() {
            load_rules(name_or_path)
        } else {
            Self::preset(name_or_path)
        }
    }

    pub fn replacements(&self) -> &ReplacementMap {
        &self.replacements
    }

    pub fn units(&self) -> &BTreeMap<String, String> {
        &self.units
    }

    pub fn number_language(&self) -> &str {
        &self.number_language
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<NormRules, NormError> {
    let text = std::fs::read_to_string(path)?;
    NormRules::from_json_str(&text)
}

pub fn transliterate(text: &str, map: &ReplacementMap) -> String {
    map.apply(text)
}

/// Replaces digit runs with spelled-out numbers and expands a unit token
/// directly following a number.
fn expand_numbers(text: &str, rules: &NormRules) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() * 2);
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let (groups, next) = scan_number(&chars, i);
        out.push(' ');
        let spelled: Vec<String> = groups
            .iter()
            .map(|g| spell_group(g, &rules.number_language))
            .collect();
        out.push_str(&spelled.join(" "));
        out.push(' ');
        i = next;

        // optional unit after the number, possibly separated by spaces
        let mut j = i;
        while j < chars.len() && chars[j] == ' ' {
            j += 1;
        }
        if let Some((len, spoken)) = match_unit(&chars[j..], &rules.units) {
            out.push_str(spoken);
            out.push(' ');
            i = j + len;
        }
    }
    out
}

/// Scans a numeral starting at `start`. Thousands-separated forms
/// ("1.000.000", "12,500") become one group; any other digit runs joined by
/// '.' or ',' (decimals, dates) become separate groups.
fn scan_number(chars: &[char], start: usize) -> (Vec<String>, usize) {
    let digit_run = |from: usize| -> usize {
        let mut k = from;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
        k
    };
    let first_end = digit_run(start);
    let mut groups: Vec<String> = vec![chars[start..first_end].iter().collect()];
    let mut end = first_end;

    // thousands separators: 1-3 leading digits, then (sep + exactly 3 digits)+
    if first_end - start <= 3 {
        let mut k = first_end;
        let mut merged = groups[0].clone();
        let mut separator: Option<char> = None;
        while k < chars.len()
            && matches!(chars[k], '.' | ',')
            && separator.is_none_or(|s| s == chars[k])
        {
            let run_end = digit_run(k + 1);
            if run_end - (k + 1) != 3 {
                break;
            }
            separator = Some(chars[k]);
            merged.extend(&chars[k + 1..run_end]);
            k = run_end;
        }
        if k > first_end {
            groups[0] = merged;
            end = k;
        }
    }

    // decimals and other punctuated digit sequences, group by group
    while end + 1 < chars.len() && matches!(chars[end], '.' | ',') && chars[end + 1].is_ascii_digit() {
        let run_end = digit_run(end + 1);
        groups.push(chars[end + 1..run_end].iter().collect());
        end = run_end;
    }
    (groups, end)
}

fn spell_group(digits: &str, lang: &str) -> String {
    match digits.parse::<u64>() {
        Ok(n) if n <= MAX_NUMBER => number_to_words(n, lang).expect("language validated on load"),
        // too long for a cardinal: read digit by digit
        _ => digits
            .chars()
            .map(|d| number_to_words(d.to_digit(10).unwrap() as u64, lang).expect("validated"))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

/// Longest unit token at the start of `chars` that ends on a token boundary.
fn match_unit<'a>(chars: &[char], units: &'a BTreeMap<String, String>) -> Option<(usize, &'a str)> {
    let mut best: Option<(usize, &str)> = None;
    for (token, spoken) in units {
        let n = token.chars().count();
        if n > chars.len() || best.is_some_and(|(len, _)| len >= n) {
            continue;
        }
        if !token.chars().zip(chars).all(|(a, &b)| a == b) {
            continue;
        }
        let boundary = chars.get(n).is_none_or(|c| !c.is_alphanumeric());
        if boundary {
            best = Some((n, spoken.as_str()));
        }
    }
    best
}

/// Normalizes a transcript so that every output character belongs to
/// `alphabet`. Words are separated by single spaces when the alphabet has a
/// space symbol and concatenated otherwise.
pub fn normalize_text(text: &str, rules: &NormRules, alphabet: &AlphabetSpec) -> String {
    let mut s: String = text.nfc().collect();
    if rules.lowercase {
        s = s.to_lowercase();
    }
    let s = expand_numbers(&s, rules);
    let s = rules.replacements.apply(&s);

    let filtered: String = s
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if alphabet.contains_char(c) {
                Some(c)
            } else {
                None
            }
        })
        .collect();
    let separator = if alphabet.contains_char(' ') { " " } else { "" };
    filtered.split_whitespace().collect::<Vec<_>>().join(separator)
}
