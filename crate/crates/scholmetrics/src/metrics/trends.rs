//! Topic growth analysis between two reference years: popularity bands by
//! end-year volume, ranked by growth ratio within each band.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::classifier::TopicAnnotation;
use crate::corpus::PaperRecord;
use crate::metrics::MetricsError;

/// Annotated papers per topic per year. Undated papers are skipped; a
/// paper counts once for every topic in its annotation.
pub fn topic_counts_by_year(
    papers: &[PaperRecord],
    annotations: &BTreeMap<String, TopicAnnotation>,
) -> BTreeMap<String, BTreeMap<i32, u64>> {
    let mut counts: BTreeMap<String, BTreeMap<i32, u64>> = BTreeMap::new();
    for paper in papers {
        let Some(year) = paper.year else { continue };
        let Some(annotation) = annotations.get(&paper.paper_id) else {
            continue;
        };
        for topic in &annotation.all_topics {
            *counts.entry(topic.clone()).or_default().entry(year).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendEntry {
    pub topic_id: String,
    pub start_count: u64,
    pub end_count: u64,
    /// `end/start`; `None` when the start count is zero (unbounded growth).
    pub ratio: Option<f64>,
}

/// One popularity band: topics whose end-year count lies in
/// `[lower, upper)`, `upper = None` meaning unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendBand {
    pub lower: u64,
    pub upper: Option<u64>,
    pub entries: Vec<TrendEntry>,
}

/// Bucket topics by end-year count into the bands induced by
/// `thresholds` (strictly descending, all positive), then rank each band by
/// growth ratio descending. Unbounded growth (start count 0) outranks every
/// finite ratio; ties fall back to end count descending, then topic id.
/// Topics below the last threshold are dropped.
pub fn topic_trend_analysis(
    counts: &BTreeMap<String, BTreeMap<i32, u64>>,
    start_year: i32,
    end_year: i32,
    thresholds: &[u64],
) -> Result<Vec<TrendBand>, MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::Argument(
            "at least one group threshold is required".to_string(),
        ));
    }
    if thresholds.contains(&0) {
        return Err(MetricsError::Argument(
            "group thresholds must be positive".to_string(),
        ));
    }
    if !thresholds.windows(2).all(|w| w[0] > w[1]) {
        return Err(MetricsError::Argument(format!(
            "group thresholds must be strictly descending, got {thresholds:?}"
        )));
    }

    let mut bands: Vec<TrendBand> = thresholds
        .iter()
        .enumerate()
        .map(|(i, &t)| TrendBand {
            lower: t,
            upper: if i == 0 { None } else { Some(thresholds[i - 1]) },
            entries: Vec::new(),
        })
        .collect();

    for (topic_id, by_year) in counts {
        let start_count = by_year.get(&start_year).copied().unwrap_or(0);
        let end_count = by_year.get(&end_year).copied().unwrap_or(0);
        let Some(band) = bands.iter_mut().find(|b| end_count >= b.lower) else {
            continue;
        };
        let ratio = if start_count > 0 {
            Some(end_count as f64 / start_count as f64)
        } else {
            None
        };
        band.entries.push(TrendEntry {
            topic_id: topic_id.clone(),
            start_count,
            end_count,
            ratio,
        });
    }

    for band in &mut bands {
        band.entries.sort_by(|a, b| {
            let by_ratio = match (a.ratio, b.ratio) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(x), Some(y)) => y.partial_cmp(&x).expect("ratios are finite"),
            };
            by_ratio
                .then_with(|| b.end_count.cmp(&a.end_count))
                .then_with(|| a.topic_id.cmp(&b.topic_id))
        });
    }
    Ok(bands)
}
