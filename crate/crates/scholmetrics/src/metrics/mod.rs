//! Aggregate analytics over a venue corpus: rankings, citation matrices,
//! geopolitical indicators, rank stability, and topic restrictions.
//!
//! Every operation is a fold over papers or contributions with a
//! deterministic sort at the end; identical inputs yield identical tables.

pub mod spearman;
pub mod trends;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::classifier::TopicAnnotation;
use crate::corpus::{contributions, CountryCode, PaperRecord, Partition, VenueCorpus};
use crate::ontology::TopicOntology;
pub use spearman::spearman_rho;
pub use trends::{topic_counts_by_year, topic_trend_analysis, TrendBand, TrendEntry};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown topic: {0}")]
    TopicNotFound(String),
}

/// Venue key used in tables for records without a venue id.
pub const UNSPECIFIED_VENUE: &str = "n/a";

/// Default row cap for venue citation tables.
pub const DEFAULT_TOP_K: usize = 30;

/// Default retention threshold for solo-country papers.
pub const DEFAULT_SOLO_MIN_PAPERS: u64 = 5;

/// Ranked key→count table, descending by count, ties broken by key.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountTable {
    entries: Vec<(String, u64)>,
}

impl CountTable {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        CountTable { entries }
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, key: &str) -> Option<u64> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, c)| *c)
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Keys in rank order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn truncated(&self, top_k: usize) -> CountTable {
        CountTable {
            entries: self.entries.iter().take(top_k).cloned().collect(),
        }
    }
}

/// Rectangular count matrix over an inclusive, contiguous year range.
/// `unplaced_by_row` holds events that belong to a row but carry no year,
/// so `row_sum + unplaced` is conserved even on partially dated corpora.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearMatrix {
    pub row_keys: Vec<String>,
    pub col_years: Vec<i32>,
    cells: Vec<u64>,
    pub unplaced_by_row: Vec<u64>,
}

impl YearMatrix {
    /// Builds a matrix from raw parts. Panics when the cell buffer or the
    /// unplaced vector disagree with the declared dimensions.
    pub fn from_parts(
        row_keys: Vec<String>,
        col_years: Vec<i32>,
        cells: Vec<u64>,
        unplaced_by_row: Vec<u64>,
    ) -> Self {
        assert_eq!(cells.len(), row_keys.len() * col_years.len());
        assert_eq!(unplaced_by_row.len(), row_keys.len());
        YearMatrix {
            row_keys,
            col_years,
            cells,
            unplaced_by_row,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.cells[row * self.col_years.len() + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        let w = self.col_years.len();
        &self.cells[row * w..(row + 1) * w]
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.row(row).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.row_keys.is_empty() || self.col_years.is_empty()
    }

    pub fn max_cell(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }
}

/// Accumulates (row, optional year) events, then materializes a rectangular
/// matrix whose column range spans exactly the years observed.
struct MatrixAccum {
    row_keys: Vec<String>,
    counts: BTreeMap<(usize, i32), u64>,
    unplaced: Vec<u64>,
}

impl MatrixAccum {
    fn new(row_keys: Vec<String>) -> Self {
        let unplaced = vec![0; row_keys.len()];
        MatrixAccum {
            row_keys,
            counts: BTreeMap::new(),
            unplaced,
        }
    }

    fn add(&mut self, row: usize, year: Option<i32>) {
        match year {
            Some(y) => *self.counts.entry((row, y)).or_insert(0) += 1,
            None => self.unplaced[row] += 1,
        }
    }

    fn finish(self) -> YearMatrix {
        let years: BTreeSet<i32> = self.counts.keys().map(|(_, y)| *y).collect();
        let col_years: Vec<i32> = match (years.first(), years.last()) {
            (Some(&lo), Some(&hi)) => (lo..=hi).collect(),
            _ => Vec::new(),
        };
        let width = col_years.len();
        let mut cells = vec![0u64; self.row_keys.len() * width];
        if width > 0 {
            let first = col_years[0];
            for ((row, year), n) in self.counts {
                cells[row * width + (year - first) as usize] = n;
            }
        }
        YearMatrix {
            row_keys: self.row_keys,
            col_years,
            cells,
            unplaced_by_row: self.unplaced,
        }
    }
}

/// Reference-age analysis: rows are accepted-paper years, columns are the
/// years of the papers they cite. References whose source or target lacks a
/// year, or whose target is absent from the store, are counted separately
/// and placed in no cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceMemory {
    pub matrix: YearMatrix,
    pub unresolved_references: u64,
    pub missing_year_references: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Debit {
    Ratio(f64),
    /// The country cites the venue but is never cited by it.
    NeverCited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebitEntry {
    pub country_code: CountryCode,
    pub citing_contribs: u64,
    pub cited_contribs: u64,
    pub debit: Debit,
}

/// One consecutive-year comparison; `rho` is `None` when the coefficient is
/// undefined (fewer than two countries, or zero rank variance).
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub year_a: i32,
    pub year_b: i32,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StabilitySeries {
    pub points: Vec<StabilityPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FirstAuthorStat {
    pub first_author_institutions: u64,
    pub never_first_institutions: u64,
    pub total_institutions: u64,
}

impl FirstAuthorStat {
    /// Percentage of institutions never at position 0; `None` when no
    /// institution appears at all.
    pub fn pct_never_first(&self) -> Option<f64> {
        if self.total_institutions == 0 {
            None
        } else {
            Some(self.never_first_institutions as f64 * 100.0 / self.total_institutions as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstAuthorTrends {
    /// One row per accepted-paper year, ascending.
    pub per_year: Vec<(i32, FirstAuthorStat)>,
    /// Pooled over all accepted papers, dated or not.
    pub overall: FirstAuthorStat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CitationDirection {
    /// Venues the accepted papers cite.
    Cited,
    /// Venues whose papers cite the accepted ones.
    Citing,
}

impl CitationDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            CitationDirection::Cited => "cited",
            CitationDirection::Citing => "citing",
        }
    }
}

fn venue_key(record: &PaperRecord) -> &str {
    if record.venue_id.is_empty() {
        UNSPECIFIED_VENUE
    } else {
        &record.venue_id
    }
}

fn cited_lookup(corpus: &VenueCorpus) -> HashMap<&str, &PaperRecord> {
    corpus
        .cited
        .iter()
        .map(|p| (p.paper_id.as_str(), p))
        .collect()
}

/// Contributions per institution over a partition; authorships without an
/// institution id aggregate under `unknown`.
pub fn institution_ranking(corpus: &VenueCorpus, partition: Partition) -> CountTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for paper in corpus.partition(partition) {
        for a in &paper.authorships {
            let key = a
                .institution_id
                .clone()
                .unwrap_or_else(|| CountryCode::UNKNOWN.to_string());
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    CountTable::from_counts(counts)
}

/// `Cited`: reference occurrences from accepted papers, keyed by the target
/// paper's venue. `Citing`: citing papers, keyed by their own venue. Both
/// aggregate unspecified venues under `n/a` and truncate to `top_k` after
/// full aggregation.
pub fn venue_citation_table(
    corpus: &VenueCorpus,
    direction: CitationDirection,
    top_k: usize,
) -> CountTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    match direction {
        CitationDirection::Cited => {
            let cited = cited_lookup(corpus);
            for paper in &corpus.accepted {
                for r in &paper.references {
                    if let Some(target) = cited.get(r.as_str()) {
                        *counts.entry(venue_key(target).to_string()).or_insert(0) += 1;
                    }
                }
            }
        }
        CitationDirection::Citing => {
            for paper in &corpus.citing {
                *counts.entry(venue_key(paper).to_string()).or_insert(0) += 1;
            }
        }
    }
    CountTable::from_counts(counts).truncated(top_k)
}

/// Year breakdown of [`venue_citation_table`]: rows are its top venues in
/// table order; the column year is the accepted paper's year (`Cited`) or
/// the citing paper's year (`Citing`).
pub fn venue_year_matrix(
    corpus: &VenueCorpus,
    direction: CitationDirection,
    top_k: usize,
) -> YearMatrix {
    let table = venue_citation_table(corpus, direction, top_k);
    let row_keys: Vec<String> = table.keys().map(str::to_string).collect();
    let row_index: HashMap<String, usize> = row_keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();

    let mut accum = MatrixAccum::new(row_keys);
    match direction {
        CitationDirection::Cited => {
            let cited = cited_lookup(corpus);
            for paper in &corpus.accepted {
                for r in &paper.references {
                    if let Some(target) = cited.get(r.as_str()) {
                        if let Some(&row) = row_index.get(venue_key(target)) {
                            accum.add(row, paper.year);
                        }
                    }
                }
            }
        }
        CitationDirection::Citing => {
            for paper in &corpus.citing {
                if let Some(&row) = row_index.get(venue_key(paper)) {
                    accum.add(row, paper.year);
                }
            }
        }
    }
    accum.finish()
}

/// How far back accepted papers reach: cell (y, x) counts references from
/// year-y accepted papers to year-x papers. Row years form the contiguous
/// range of observed accepted years.
pub fn reference_memory_matrix(corpus: &VenueCorpus) -> ReferenceMemory {
    let cited = cited_lookup(corpus);
    let years: BTreeSet<i32> = corpus.accepted.iter().filter_map(|p| p.year).collect();
    let row_years: Vec<i32> = match (years.first(), years.last()) {
        (Some(&lo), Some(&hi)) => (lo..=hi).collect(),
        _ => Vec::new(),
    };
    let row_index: HashMap<i32, usize> = row_years.iter().enumerate().map(|(i, &y)| (y, i)).collect();

    let mut accum = MatrixAccum::new(row_years.iter().map(i32::to_string).collect());
    let mut unresolved = 0u64;
    let mut missing_year = 0u64;
    for paper in &corpus.accepted {
        for r in &paper.references {
            let Some(target) = cited.get(r.as_str()) else {
                unresolved += 1;
                continue;
            };
            match (paper.year, target.year) {
                (Some(src), Some(dst)) => accum.add(row_index[&src], Some(dst)),
                _ => missing_year += 1,
            }
        }
    }
    ReferenceMemory {
        matrix: accum.finish(),
        unresolved_references: unresolved,
        missing_year_references: missing_year,
    }
}

/// Contributions per resolved country over a partition; missing affiliation
/// data aggregates under `unknown`.
pub fn country_distribution(corpus: &VenueCorpus, partition: Partition) -> CountTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    add_country_contributions(corpus, corpus.partition(partition), &mut counts);
    CountTable::from_counts(counts)
}

fn add_country_contributions(
    corpus: &VenueCorpus,
    papers: &[PaperRecord],
    counts: &mut BTreeMap<String, u64>,
) {
    for paper in papers {
        for c in contributions(paper, corpus.institutions()) {
            *counts.entry(c.country_code.as_str().to_string()).or_insert(0) += 1;
        }
    }
}

/// Per-year country distributions over a partition; undated papers are
/// omitted (they belong to no year).
pub fn yearly_country_distribution(
    corpus: &VenueCorpus,
    partition: Partition,
) -> BTreeMap<i32, CountTable> {
    let mut per_year: BTreeMap<i32, BTreeMap<String, u64>> = BTreeMap::new();
    for paper in corpus.partition(partition) {
        let Some(year) = paper.year else { continue };
        let counts = per_year.entry(year).or_default();
        for c in contributions(paper, corpus.institutions()) {
            *counts.entry(c.country_code.as_str().to_string()).or_insert(0) += 1;
        }
    }
    per_year
        .into_iter()
        .map(|(y, counts)| (y, CountTable::from_counts(counts)))
        .collect()
}

/// Accepted papers written entirely from one country, counted per country;
/// countries below `min_papers` are dropped. Papers with any unresolved
/// country are excluded outright.
pub fn solo_country_papers(corpus: &VenueCorpus, min_papers: u64) -> CountTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for paper in &corpus.accepted {
        let cs = contributions(paper, corpus.institutions());
        if cs.is_empty() || cs.iter().any(|c| c.country_code.is_unknown()) {
            continue;
        }
        let countries: BTreeSet<&str> = cs.iter().map(|c| c.country_code.as_str()).collect();
        if countries.len() == 1 {
            let country = countries.into_iter().next().expect("nonempty set");
            *counts.entry(country.to_string()).or_insert(0) += 1;
        }
    }
    counts.retain(|_, c| *c >= min_papers);
    CountTable::from_counts(counts)
}

/// Countries' citing-vs-cited contribution balance towards the venue.
/// Entries are sorted by debit descending (never-cited counts as infinite),
/// ties by country code.
pub fn knowledge_debit(corpus: &VenueCorpus) -> Vec<DebitEntry> {
    let mut citing: BTreeMap<CountryCode, u64> = BTreeMap::new();
    let mut cited: BTreeMap<CountryCode, u64> = BTreeMap::new();
    for paper in &corpus.citing {
        for c in contributions(paper, corpus.institutions()) {
            *citing.entry(c.country_code).or_insert(0) += 1;
        }
    }
    for paper in &corpus.cited {
        for c in contributions(paper, corpus.institutions()) {
            *cited.entry(c.country_code).or_insert(0) += 1;
        }
    }
    debit_from_counts(&citing, &cited)
}

/// Core of [`knowledge_debit`], exposed for direct testing against count
/// fixtures. Countries with zero on both sides yield no entry.
pub fn debit_from_counts(
    citing: &BTreeMap<CountryCode, u64>,
    cited: &BTreeMap<CountryCode, u64>,
) -> Vec<DebitEntry> {
    let countries: BTreeSet<&CountryCode> = citing.keys().chain(cited.keys()).collect();
    let mut entries: Vec<DebitEntry> = Vec::new();
    for country in countries {
        let citing_contribs = citing.get(country).copied().unwrap_or(0);
        let cited_contribs = cited.get(country).copied().unwrap_or(0);
        if citing_contribs == 0 && cited_contribs == 0 {
            continue;
        }
        let debit = if cited_contribs > 0 {
            Debit::Ratio(citing_contribs as f64 / cited_contribs as f64)
        } else {
            Debit::NeverCited
        };
        entries.push(DebitEntry {
            country_code: country.clone(),
            citing_contribs,
            cited_contribs,
            debit,
        });
    }
    entries.sort_by(|a, b| {
        let key = |e: &DebitEntry| match e.debit {
            Debit::NeverCited => f64::INFINITY,
            Debit::Ratio(r) => r,
        };
        key(b)
            .partial_cmp(&key(a))
            .expect("ratios are finite or infinite, never NaN")
            .then_with(|| a.country_code.cmp(&b.country_code))
    });
    entries
}

/// Rank correlation between each pair of consecutive years present in the
/// input. The country universe per pair is the union of both years, absent
/// countries counted as zero.
pub fn ranking_stability(yearly: &BTreeMap<i32, CountTable>) -> StabilitySeries {
    let mut points = Vec::new();
    for (&year, table) in yearly {
        let Some(next) = yearly.get(&(year + 1)) else {
            continue;
        };
        let universe: BTreeSet<&str> = table.keys().chain(next.keys()).collect();
        let xs: Vec<f64> = universe
            .iter()
            .map(|c| table.count(c).unwrap_or(0) as f64)
            .collect();
        let ys: Vec<f64> = universe
            .iter()
            .map(|c| next.count(c).unwrap_or(0) as f64)
            .collect();
        // Undefined and erroneous (degenerate-length) comparisons both
        // surface as a missing point.
        let rho = spearman_rho(&xs, &ys).unwrap_or_default();
        points.push(StabilityPoint {
            year_a: year,
            year_b: year + 1,
            rho,
        });
    }
    StabilitySeries { points }
}

/// Institutions represented by first authors vs those never at position 0,
/// per accepted-paper year and pooled. Authorships without an institution
/// id contribute to neither set.
pub fn first_author_institution_trends(corpus: &VenueCorpus) -> FirstAuthorTrends {
    #[derive(Default)]
    struct Sets<'a> {
        first: BTreeSet<&'a str>,
        any: BTreeSet<&'a str>,
    }
    impl Sets<'_> {
        fn stat(&self) -> FirstAuthorStat {
            let first = self.first.len() as u64;
            let total = self.any.len() as u64;
            FirstAuthorStat {
                first_author_institutions: first,
                never_first_institutions: total - first,
                total_institutions: total,
            }
        }
    }

    let mut per_year: BTreeMap<i32, Sets> = BTreeMap::new();
    let mut overall = Sets::default();
    for paper in &corpus.accepted {
        let year_sets = paper.year.map(|y| per_year.entry(y).or_default());
        // Insert into the year bucket and the pooled bucket in one pass.
        if let Some(sets) = year_sets {
            for a in &paper.authorships {
                if let Some(inst) = a.institution_id.as_deref() {
                    sets.any.insert(inst);
                    if a.position == 0 {
                        sets.first.insert(inst);
                    }
                }
            }
        }
        for a in &paper.authorships {
            if let Some(inst) = a.institution_id.as_deref() {
                overall.any.insert(inst);
                if a.position == 0 {
                    overall.first.insert(inst);
                }
            }
        }
    }
    FirstAuthorTrends {
        per_year: per_year.iter().map(|(y, s)| (*y, s.stat())).collect(),
        overall: overall.stat(),
    }
}

/// Accepted (or other partition) paper counts per year, plus the number of
/// undated papers.
pub fn papers_per_year(papers: &[PaperRecord]) -> (BTreeMap<i32, u64>, u64) {
    let mut by_year: BTreeMap<i32, u64> = BTreeMap::new();
    let mut undated = 0u64;
    for p in papers {
        match p.year {
            Some(y) => *by_year.entry(y).or_insert(0) += 1,
            None => undated += 1,
        }
    }
    (by_year, undated)
}

/// [`country_distribution`] over accepted papers annotated with `topic_id`
/// (directly or through enrichment, compared after canonicalization).
pub fn topic_country_distribution(
    corpus: &VenueCorpus,
    annotations: &BTreeMap<String, TopicAnnotation>,
    ontology: &TopicOntology,
    topic_id: &str,
) -> Result<CountTable, MetricsError> {
    let topic_id = topic_id.to_lowercase();
    if !ontology.contains(&topic_id) {
        return Err(MetricsError::TopicNotFound(topic_id));
    }
    let rep = ontology.canonical_of(&topic_id).unwrap_or(&topic_id);

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for paper in &corpus.accepted {
        let annotated = annotations
            .get(&paper.paper_id)
            .is_some_and(|a| a.all_topics.contains(rep));
        if !annotated {
            continue;
        }
        for c in contributions(paper, corpus.institutions()) {
            *counts.entry(c.country_code.as_str().to_string()).or_insert(0) += 1;
        }
    }
    Ok(CountTable::from_counts(counts))
}
