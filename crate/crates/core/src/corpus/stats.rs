use std::collections::HashMap;

use serde::Serialize;

use super::DatasetItem;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub item_count: usize,
    pub total_duration: f64,
    /// Over items with positive duration.
    pub mean_chars_per_second: f64,
    /// Over items with positive duration.
    pub mean_duration: f64,
    /// Count descending, then name ascending.
    pub top_speakers: Vec<(String, usize)>,
}

/// Mergeable partial sums, so that stats over shards can be combined.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    items: usize,
    total_duration: f64,
    timed: usize,
    cps_sum: f64,
    timed_duration: f64,
    speakers: HashMap<String, usize>,
}

impl StatsAccumulator {
    pub fn add(&mut self, item: &DatasetItem) {
        self.items += 1;
        self.total_duration += item.duration;
        if let Some(cps) = item.chars_per_second() {
            self.timed += 1;
            self.cps_sum += cps;
            self.timed_duration += item.duration;
        }
        if let Some(s) = &item.speaker {
            *self.speakers.entry(s.clone()).or_default() += 1;
        }
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.items += other.items;
        self.total_duration += other.total_duration;
        self.timed += other.timed;
        self.cps_sum += other.cps_sum;
        self.timed_duration += other.timed_duration;
        for (s, n) in other.speakers {
            *self.speakers.entry(s).or_default() += n;
        }
        self
    }

    pub fn finish(self) -> CorpusStats {
        let mut top: Vec<(String, usize)> = self.speakers.into_iter().collect();
        top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let per = |sum: f64| if self.timed > 0 { sum / self.timed as f64 } else { 0.0 };
        CorpusStats {
            item_count: self.items,
            total_duration: self.total_duration,
            mean_chars_per_second: per(self.cps_sum),
            mean_duration: per(self.timed_duration),
            top_speakers: top,
        }
    }
}

pub fn compute_stats(items: &[DatasetItem]) -> CorpusStats {
    let mut acc = StatsAccumulator::default();
    for item in items {
        acc.add(item);
    }
    acc.finish()
}
