//! Cardinal number spelling for the shipped languages.
//!
//! Output is lowercase and uses single spaces where the written form would
//! use hyphens, so the result survives alphabet filtering intact.

use super::NormError;

pub const MAX_NUMBER: u64 = 1_000_000_000_000;

pub const SUPPORTED_LANGUAGES: &[&str] = &["en", "de", "es", "fr", "it"];

pub fn number_to_words(n: u64, lang: &str) -> Result<String, NormError> {
    if n > MAX_NUMBER {
        return Err(NormError::NumberOutOfRange(n));
    }
    let words = match lang {
        "en" => english(n),
        "de" => german(n),
        "es" => spanish(n),
        "fr" => french(n),
        "it" => italian(n),
        other => return Err(NormError::UnsupportedLanguage(other.to_string())),
    };
    Ok(words)
}

fn join(parts: Vec<String>) -> String {
    parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------- english

const EN_ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const EN_TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

fn english_below_1000(n: u64) -> String {
    let mut parts = Vec::new();
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        parts.push(format!("{} hundred", EN_ONES[hundreds as usize]));
    }
    if rest >= 20 {
        parts.push(EN_TENS[(rest / 10) as usize].to_string());
        if rest % 10 > 0 {
            parts.push(EN_ONES[(rest % 10) as usize].to_string());
        }
    } else if rest > 0 {
        parts.push(EN_ONES[rest as usize].to_string());
    }
    join(parts)
}

fn english(n: u64) -> String {
    if n == 0 {
        return EN_ONES[0].to_string();
    }
    const SCALES: [(u64, &str); 4] = [
        (1_000_000_000_000, "trillion"),
        (1_000_000_000, "billion"),
        (1_000_000, "million"),
        (1_000, "thousand"),
    ];
    let mut rest = n;
    let mut parts = Vec::new();
    for (scale, name) in SCALES {
        let count = rest / scale;
        if count > 0 {
            parts.push(format!("{} {name}", english_below_1000(count)));
            rest %= scale;
        }
    }
    parts.push(english_below_1000(rest));
    join(parts)
}

// ----------------------------------------------------------------- german

const DE_ONES: [&str; 20] = [
    "null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben", "acht", "neun", "zehn", "elf",
    "zwölf", "dreizehn", "vierzehn", "fünfzehn", "sechzehn", "siebzehn", "achtzehn", "neunzehn",
];
const DE_TENS: [&str; 10] = [
    "", "", "zwanzig", "dreißig", "vierzig", "fünfzig", "sechzig", "siebzig", "achtzig", "neunzig",
];

/// `final_position` selects "eins" over the compounding form "ein".
fn german_below_100(n: u64, final_position: bool) -> String {
    match n {
        0 => String::new(),
        1 if !final_position => "ein".into(),
        1..=19 => DE_ONES[n as usize].into(),
        _ => {
            let unit = n % 10;
            let tens = DE_TENS[(n / 10) as usize];
            match unit {
                0 => tens.into(),
                1 => format!("einund{tens}"),
                u => format!("{}und{tens}", DE_ONES[u as usize]),
            }
        }
    }
}

fn german_below_1000(n: u64, final_position: bool) -> String {
    let hundreds = n / 100;
    let mut out = String::new();
    if hundreds > 0 {
        out.push_str(&german_below_100(hundreds, false));
        out.push_str("hundert");
    }
    out.push_str(&german_below_100(n % 100, final_position));
    out
}

fn german_below_million(n: u64) -> String {
    let thousands = n / 1000;
    let mut out = String::new();
    if thousands > 0 {
        out.push_str(&german_below_1000(thousands, false));
        out.push_str("tausend");
    }
    out.push_str(&german_below_1000(n % 1000, true));
    out
}

fn german(n: u64) -> String {
    if n == 0 {
        return DE_ONES[0].into();
    }
    const SCALES: [(u64, &str, &str); 3] = [
        (1_000_000_000_000, "billion", "billionen"),
        (1_000_000_000, "milliarde", "milliarden"),
        (1_000_000, "million", "millionen"),
    ];
    let mut rest = n;
    let mut parts = Vec::new();
    for (scale, singular, plural) in SCALES {
        let count = rest / scale;
        if count == 1 {
            parts.push(format!("eine {singular}"));
        } else if count > 1 {
            parts.push(format!("{} {plural}", german_below_1000(count, false)));
        }
        rest %= scale;
    }
    parts.push(german_below_million(rest));
    join(parts)
}

// ---------------------------------------------------------------- spanish

const ES_ONES: [&str; 30] = [
    "cero", "uno", "dos", "tres", "cuatro", "cinco", "seis", "siete", "ocho", "nueve", "diez", "once",
    "doce", "trece", "catorce", "quince", "dieciséis", "diecisiete", "dieciocho", "diecinueve",
    "veinte", "veintiuno", "veintidós", "veintitrés", "veinticuatro", "veinticinco", "veintiséis",
    "veintisiete", "veintiocho", "veintinueve",
];
const ES_TENS: [&str; 10] = [
    "", "", "", "treinta", "cuarenta", "cincuenta", "sesenta", "setenta", "ochenta", "noventa",
];
const ES_HUNDREDS: [&str; 10] = [
    "",
    "ciento",
    "doscientos",
    "trescientos",
    "cuatrocientos",
    "quinientos",
    "seiscientos",
    "setecientos",
    "ochocientos",
    "novecientos",
];

fn spanish_below_100(n: u64) -> String {
    match n {
        0 => String::new(),
        1..=29 => ES_ONES[n as usize].into(),
        _ if n % 10 == 0 => ES_TENS[(n / 10) as usize].into(),
        _ => format!("{} y {}", ES_TENS[(n / 10) as usize], ES_ONES[(n % 10) as usize]),
    }
}

fn spanish_below_1000(n: u64) -> String {
    if n == 100 {
        return "cien".into();
    }
    join(vec![
        ES_HUNDREDS[(n / 100) as usize].to_string(),
        spanish_below_100(n % 100),
    ])
}

fn spanish_below_million(n: u64) -> String {
    let thousands = n / 1000;
    let head = match thousands {
        0 => String::new(),
        1 => "mil".into(),
        t => format!("{} mil", spanish_below_1000(t)),
    };
    join(vec![head, spanish_below_1000(n % 1000)])
}

fn spanish(n: u64) -> String {
    if n == 0 {
        return ES_ONES[0].into();
    }
    let mut parts = Vec::new();
    let mut rest = n;
    let billions = rest / 1_000_000_000_000;
    if billions > 0 {
        // only 10^12 itself is in range
        parts.push("un billón".to_string());
        rest %= 1_000_000_000_000;
    }
    let millions = rest / 1_000_000;
    match millions {
        0 => {}
        1 => parts.push("un millón".into()),
        m => parts.push(format!("{} millones", spanish_below_million(m))),
    }
    parts.push(spanish_below_million(rest % 1_000_000));
    join(parts)
}

// ----------------------------------------------------------------- french

const FR_ONES: [&str; 20] = [
    "zéro", "un", "deux", "trois", "quatre", "cinq", "six", "sept", "huit", "neuf", "dix", "onze",
    "douze", "treize", "quatorze", "quinze", "seize", "dix sept", "dix huit", "dix neuf",
];
const FR_TENS: [&str; 7] = ["", "", "vingt", "trente", "quarante", "cinquante", "soixante"];

/// `plural_tail` marks positions where "vingts"/"cents" take their plural
/// ending: end of the number or before a scale noun (million, milliard).
fn french_below_100(n: u64, plural_tail: bool) -> String {
    match n {
        0 => String::new(),
        1..=19 => FR_ONES[n as usize].into(),
        20..=69 => {
            let tens = FR_TENS[(n / 10) as usize];
            match n % 10 {
                0 => tens.into(),
                1 => format!("{tens} et un"),
                u => format!("{tens} {}", FR_ONES[u as usize]),
            }
        }
        70..=79 => {
            if n == 71 {
                "soixante et onze".into()
            } else {
                format!("soixante {}", FR_ONES[(n - 60) as usize])
            }
        }
        80 => {
            if plural_tail {
                "quatre vingts".into()
            } else {
                "quatre vingt".into()
            }
        }
        _ => format!("quatre vingt {}", FR_ONES[(n - 80) as usize]),
    }
}

fn french_below_1000(n: u64, plural_tail: bool) -> String {
    let hundreds = n / 100;
    let rest = n % 100;
    let head = match hundreds {
        0 => String::new(),
        1 => "cent".into(),
        h if rest == 0 && plural_tail => format!("{} cents", FR_ONES[h as usize]),
        h => format!("{} cent", FR_ONES[h as usize]),
    };
    join(vec![head, french_below_100(rest, plural_tail)])
}

fn french(n: u64) -> String {
    if n == 0 {
        return FR_ONES[0].into();
    }
    const SCALES: [(u64, &str, &str); 3] = [
        (1_000_000_000_000, "billion", "billions"),
        (1_000_000_000, "milliard", "milliards"),
        (1_000_000, "million", "millions"),
    ];
    let mut rest = n;
    let mut parts = Vec::new();
    for (scale, singular, plural) in SCALES {
        let count = rest / scale;
        if count == 1 {
            parts.push(format!("un {singular}"));
        } else if count > 1 {
            parts.push(format!("{} {plural}", french_below_1000(count, true)));
        }
        rest %= scale;
    }
    let thousands = rest / 1000;
    match thousands {
        0 => {}
        1 => parts.push("mille".into()),
        t => parts.push(format!("{} mille", french_below_1000(t, false))),
    }
    parts.push(french_below_1000(rest % 1000, true));
    join(parts)
}

// ---------------------------------------------------------------- italian

const IT_ONES: [&str; 20] = [
    "zero",
    "uno",
    "due",
    "tre",
    "quattro",
    "cinque",
    "sei",
    "sette",
    "otto",
    "nove",
    "dieci",
    "undici",
    "dodici",
    "tredici",
    "quattordici",
    "quindici",
    "sedici",
    "diciassette",
    "diciotto",
    "diciannove",
];
const IT_TENS: [&str; 10] = [
    "", "", "venti", "trenta", "quaranta", "cinquanta", "sessanta", "settanta", "ottanta", "novanta",
];

/// Appends `tail` to `head`, eliding the final vowel of `head` before a
/// vowel-initial `uno`/`otto`/`ottanta`.
fn italian_glue(head: &str, tail: &str, elide_before_uno: bool) -> String {
    let elide = tail.starts_with("ott") || (elide_before_uno && tail.starts_with("uno"));
    if elide && head.ends_with(['a', 'e', 'i', 'o']) {
        format!("{}{tail}", &head[..head.len() - 1])
    } else {
        format!("{head}{tail}")
    }
}

fn italian_below_100(n: u64) -> String {
    match n {
        0 => String::new(),
        1..=19 => IT_ONES[n as usize].into(),
        _ => {
            let tens = IT_TENS[(n / 10) as usize];
            match n % 10 {
                0 => tens.into(),
                u => italian_glue(tens, IT_ONES[u as usize], true),
            }
        }
    }
}

fn italian_below_1000(n: u64) -> String {
    let hundreds = n / 100;
    let rest = italian_below_100(n % 100);
    if hundreds == 0 {
        return rest;
    }
    let head = if hundreds == 1 {
        "cento".to_string()
    } else {
        format!("{}cento", IT_ONES[hundreds as usize])
    };
    italian_glue(&head, &rest, false)
}

/// A trailing "tre" inside a compound carries a stress accent.
fn italian_accent_final_three(n: u64, words: String) -> String {
    if n > 3 && n % 10 == 3 && n % 100 != 13 {
        if let Some(stem) = words.strip_suffix("tre") {
            return format!("{stem}tré");
        }
    }
    words
}

fn italian_below_million(n: u64) -> String {
    let thousands = n / 1000;
    let rest = n % 1000;
    let head = match thousands {
        0 => String::new(),
        1 => "mille".into(),
        t => format!("{}mila", italian_below_1000(t)),
    };
    italian_accent_final_three(n, format!("{head}{}", italian_below_1000(rest)))
}

fn italian(n: u64) -> String {
    if n == 0 {
        return IT_ONES[0].into();
    }
    const SCALES: [(u64, &str, &str); 3] = [
        (1_000_000_000_000, "bilione", "bilioni"),
        (1_000_000_000, "miliardo", "miliardi"),
        (1_000_000, "milione", "milioni"),
    ];
    let mut rest = n;
    let mut parts = Vec::new();
    for (scale, singular, plural) in SCALES {
        let count = rest / scale;
        if count == 1 {
            parts.push(format!("un {singular}"));
        } else if count > 1 {
            parts.push(format!("{} {plural}", italian_below_1000(count)));
        }
        rest %= scale;
    }
    parts.push(italian_below_million(rest));
    join(parts)
}
