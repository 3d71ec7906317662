use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Entry, LmError, NgramModel};

pub fn parse_arpa(path: &Path) -> Result<NgramModel, LmError> {
    let text = fs::read_to_string(path).map_err(|source| LmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_arpa_str(&text)
}

fn parse_err(line: usize, reason: impl Into<String>) -> LmError {
    LmError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_f32(field: &str, line: usize) -> Result<f32, LmError> {
    field
        .parse::<f32>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| parse_err(line, format!("{field:?} is not a number")))
}

enum State {
    Preamble,
    Header,
    Section(usize),
    Done,
}

pub fn parse_arpa_str(text: &str) -> Result<NgramModel, LmError> {
    let mut declared: Vec<usize> = Vec::new();
    let mut orders: Vec<Vec<(Vec<String>, Entry)>> = Vec::new();
    let mut state = State::Preamble;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            if matches!(state, State::Preamble) {
                return Err(LmError::MissingSection("\\data\\".into()));
            }
            state = State::Done;
            break;
        }
        if let Some(k) = line
            .strip_prefix('\\')
            .and_then(|l| l.strip_suffix("-grams:"))
        {
            if matches!(state, State::Preamble) {
                return Err(LmError::MissingSection("\\data\\".into()));
            }
            let k: usize = k.parse().map_err(|_| parse_err(lineno, format!("bad section {line:?}")))?;
            if k == 0 || k > declared.len() {
                return Err(parse_err(lineno, format!("section {line:?} not declared in the header")));
            }
            if k != orders.len() + 1 {
                return Err(parse_err(lineno, format!("section {line:?} out of order")));
            }
            orders.push(Vec::with_capacity(declared[k - 1]));
            state = State::Section(k);
            continue;
        }
        match state {
            State::Preamble => {
                if line == "\\data\\" {
                    state = State::Header;
                }
            }
            State::Header => {
                let spec = line
                    .strip_prefix("ngram ")
                    .and_then(|s| s.split_once('='))
                    .ok_or_else(|| parse_err(lineno, format!("expected 'ngram k=count', got {line:?}")))?;
                let k: usize = spec.0.trim().parse().map_err(|_| parse_err(lineno, "bad n-gram order"))?;
                let count: usize = spec.1.trim().parse().map_err(|_| parse_err(lineno, "bad n-gram count"))?;
                if k != declared.len() + 1 {
                    return Err(parse_err(lineno, format!("expected order {}, got {k}", declared.len() + 1)));
                }
                declared.push(count);
            }
            State::Section(k) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != k + 1 && fields.len() != k + 2 {
                    return Err(parse_err(lineno, format!("expected {k} tokens in {line:?}")));
                }
                let log10_prob = parse_f32(fields[0], lineno)?;
                let mut backoff = match fields.get(k + 1) {
                    Some(b) => Some(parse_f32(b, lineno)?),
                    None => None,
                };
                if k == declared.len() && backoff.is_some() {
                    log::warn!("line {lineno}: backoff weight on a highest-order n-gram ignored");
                    backoff = None;
                }
                let tokens = fields[1..=k].iter().map(|t| t.to_string()).collect();
                orders[k - 1].push((tokens, Entry { log10_prob, backoff }));
            }
            State::Done => unreachable!(),
        }
    }

    if !matches!(state, State::Done) {
        return Err(match state {
            State::Preamble => LmError::MissingSection("\\data\\".into()),
            _ => LmError::MissingSection("\\end\\".into()),
        });
    }
    if declared.is_empty() {
        return Err(LmError::MissingSection("ngram counts".into()));
    }
    if orders.len() < declared.len() {
        return Err(LmError::MissingSection(format!("\\{}-grams:", orders.len() + 1)));
    }
    for (k, (entries, &count)) in orders.iter().zip(&declared).enumerate() {
        if entries.len() != count {
            return Err(LmError::CountMismatch {
                order: k + 1,
                declared: count,
                found: entries.len(),
            });
        }
    }
    NgramModel::from_entries(orders)
}

/// ARPA text with sections in order and entries sorted by token strings.
pub fn serialize(model: &NgramModel) -> String {
    let mut out = String::from("\\data\\\n");
    for (k, n) in model.counts().iter().enumerate() {
        writeln!(out, "ngram {}={n}", k + 1).unwrap();
    }
    for k in 1..=model.order() {
        write!(out, "\n\\{k}-grams:\n").unwrap();
        for (tokens, e) in model.sorted_entries(k) {
            write!(out, "{}\t{}", e.log10_prob, tokens.join(" ")).unwrap();
            if let Some(b) = e.backoff {
                write!(out, "\t{b}").unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write_arpa(model: &NgramModel, path: &Path) -> Result<(), LmError> {
    fs::write(path, serialize(model)).map_err(|source| LmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl NgramModel {
    pub fn to_arpa(&self) -> String {
        serialize(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_counts_checked() {
        let ok = "\\data\\\nngram 1=3\n\n\\1-grams:\n-1 a\n-1 b\n-1 c\n\\end\\\n";
        let m = parse_arpa_str(ok).unwrap();
        assert_eq!((m.order(), m.total_entries()), (1, 3));
        let bad = ok.replace("ngram 1=3", "ngram 1=4");
        assert!(matches!(
            parse_arpa_str(&bad),
            Err(LmError::CountMismatch { declared: 4, found: 3, .. })
        ));
    }

    #[test]
    fn structural_errors() {
        let no_end = "\\data\\\nngram 1=1\n\\1-grams:\n-1 a\n";
        assert!(matches!(parse_arpa_str(no_end), Err(LmError::MissingSection(s)) if s == "\\end\\"));
        let no_section = "\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-1 a\n\\end\\\n";
        assert!(matches!(parse_arpa_str(no_section), Err(LmError::MissingSection(_))));
        let bad_num = "\\data\\\nngram 1=1\n\\1-grams:\nabc a\n\\end\\\n";
        assert!(matches!(parse_arpa_str(bad_num), Err(LmError::Parse { line: 4, .. })));
        assert!(matches!(parse_arpa_str(""), Err(LmError::MissingSection(_))));
    }

    #[test]
    fn serialize_is_sorted() {
        let m = parse_arpa_str("\\data\\\nngram 1=2\nngram 2=1\n\\1-grams:\n-1 b -0.5\n-2 a\n\\2-grams:\n-0.1 b a\n\\end\\\n").unwrap();
        assert_eq!(m.to_arpa(), "\\data\\\nngram 1=2\nngram 2=1\n\n\\1-grams:\n-2\ta\n-1\tb\t-0.5\n\n\\2-grams:\n-0.1\tb a\n\n\\end\\\n");
    }
}
