use std::fmt;

use serde::Serialize;

use super::DatasetItem;

/// Exclusion rules, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Metric {
    /// Shorter than half a second (includes zero-length audio).
    TooShort = 1,
    /// Longer than 30 seconds.
    TooLong = 2,
    /// Transcript longer than 512 characters.
    TextTooLong = 3,
    /// Spoken more than twice as fast as the corpus average.
    TooFast = 4,
    /// Less than one character per three seconds.
    TooSlow = 5,
    /// Slower than a third of the average rate, unless the clip is short
    /// (at most a fifth of the mean duration).
    SlowForLength = 6,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::TooShort,
        Metric::TooLong,
        Metric::TextTooLong,
        Metric::TooFast,
        Metric::TooSlow,
        Metric::SlowForLength,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn description(self) -> &'static str {
        match self {
            Metric::TooShort => "audio shorter than 0.5 s",
            Metric::TooLong => "audio longer than 30 s",
            Metric::TextTooLong => "transcript longer than 512 characters",
            Metric::TooFast => "more than 2x the average characters per second",
            Metric::TooSlow => "fewer than 1 character per 3 seconds",
            Metric::SlowForLength => "below average/3 characters per second and longer than mean duration/5",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.id(), self.description())
    }
}

const MIN_DURATION: f64 = 0.5;
const MAX_DURATION: f64 = 30.0;
const MAX_CHARS: usize = 512;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleaningReport {
    pub kept: Vec<DatasetItem>,
    pub excluded: Vec<(DatasetItem, Metric)>,
    /// Corpus-wide mean characters per second used by metrics 4-6.
    pub mean_chars_per_second: f64,
    /// Corpus-wide mean duration used by metric 6.
    pub mean_duration: f64,
}

impl CleaningReport {
    pub fn count(&self, metric: Metric) -> usize {
        self.excluded.iter().filter(|(_, m)| *m == metric).count()
    }
}

/// Lowest-numbered metric that fires for `item`, given corpus averages.
fn first_violation(item: &DatasetItem, mean_cps: f64, mean_duration: f64) -> Option<Metric> {
    let d = item.duration;
    if d < MIN_DURATION {
        return Some(Metric::TooShort);
    }
    if d > MAX_DURATION {
        return Some(Metric::TooLong);
    }
    if item.char_count() > MAX_CHARS {
        return Some(Metric::TextTooLong);
    }
    let cps = item.char_count() as f64 / d;
    if cps > 2.0 * mean_cps {
        return Some(Metric::TooFast);
    }
    if cps < 1.0 / 3.0 {
        return Some(Metric::TooSlow);
    }
    if cps < mean_cps / 3.0 && d > mean_duration / 5.0 {
        return Some(Metric::SlowForLength);
    }
    None
}

/// Splits `items` into kept and excluded. Averages are taken once over the
/// whole input (items with positive duration), before any filtering.
pub fn clean_corpus(items: &[DatasetItem]) -> CleaningReport {
    let (mut n, mut cps_sum, mut dur_sum) = (0usize, 0f64, 0f64);
    for item in items {
        if let Some(cps) = item.chars_per_second() {
            n += 1;
            cps_sum += cps;
            dur_sum += item.duration;
        }
    }
    let (mean_cps, mean_duration) = if n > 0 {
        (cps_sum / n as f64, dur_sum / n as f64)
    } else {
        (0.0, 0.0)
    };

    let mut report = CleaningReport {
        mean_chars_per_second: mean_cps,
        mean_duration,
        ..Default::default()
    };
    for item in items {
        match first_violation(item, mean_cps, mean_duration) {
            Some(metric) => report.excluded.push((item.clone(), metric)),
            None => report.kept.push(item.clone()),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(text_len: usize, duration: f64) -> DatasetItem {
        DatasetItem::new("x.wav", "a".repeat(text_len), duration)
    }

    #[test]
    fn duration_bounds() {
        let report = clean_corpus(&[item(5, 0.3), item(300, 31.0), item(20, 2.0)]);
        assert_eq!(report.excluded[0].1, Metric::TooShort);
        assert_eq!(report.excluded[1].1, Metric::TooLong);
        assert_eq!(report.kept.len(), 1);
    }

    #[test]
    fn zero_duration_is_metric_one() {
        let report = clean_corpus(&[item(5, 0.0), item(20, 2.0)]);
        assert_eq!(report.excluded, vec![(item(5, 0.0), Metric::TooShort)]);
        // average ignores the zero-length item
        assert_eq!(report.mean_chars_per_second, 10.0);
    }

    #[test]
    fn text_length_limit() {
        let report = clean_corpus(&[item(513, 29.0), item(512, 29.0)]);
        assert_eq!(report.excluded.len(), 1);
        assert_eq!(report.excluded[0].1, Metric::TextTooLong);
    }

    #[test]
    fn fast_speaker() {
        // cps 10, 10, 100 -> mean 40; 100 = 2.5 * mean
        let items = [item(20, 2.0), item(20, 2.0), item(200, 2.0)];
        let report = clean_corpus(&items);
        assert_eq!(report.mean_chars_per_second, 40.0);
        assert!(report.excluded.contains(&(item(200, 2.0), Metric::TooFast)));
    }

    #[test]
    fn slow_metrics() {
        // 2 chars in 10 s = 0.2 cps < 1/3
        let report = clean_corpus(&[item(2, 10.0), item(50, 5.0), item(50, 5.0)]);
        assert_eq!(report.excluded[0].1, Metric::TooSlow);

        // cps 1.0 vs mean ~ (1 + 10 + 10)/3 = 7; 1 < 7/3 and 10 s > mean_dur/5
        let report = clean_corpus(&[item(10, 10.0), item(50, 5.0), item(50, 5.0)]);
        assert_eq!(report.excluded.len(), 1);
        assert_eq!(report.excluded[0].1, Metric::SlowForLength);
    }

    #[test]
    fn metric_six_spares_short_clips() {
        // 0.6 s clip at 1.67 cps among long fast clips: mean_dur/5 > 0.6
        let items = [item(1, 0.6), item(290, 29.0), item(290, 29.0), item(290, 29.0)];
        let report = clean_corpus(&items);
        assert!(report.kept.contains(&item(1, 0.6)));
    }

    #[test]
    fn empty_input() {
        let report = clean_corpus(&[]);
        assert!(report.kept.is_empty() && report.excluded.is_empty());
    }
}
