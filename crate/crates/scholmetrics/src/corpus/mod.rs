//! Bibliographic data model: records, institutions, venue-centered corpora.
//!
//! Identifiers (paper, author, institution, venue) are opaque strings that
//! must not contain tabs, newlines, `;`, or `,`; those four characters are
//! the record encoding's delimiters. Free-text fields (title, abstract, doi)
//! only exclude tabs and newlines.

pub mod extract;
pub mod ingest;

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

pub use extract::{extract_logical_venue, extract_venue_dataset};
pub use ingest::{ingest, load_institutions, IngestMode, IngestStats, SchemaField, TsvSchema};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid record {paper_id:?}: {message}")]
    Invalid { paper_id: String, message: String },

    #[error("venue not found: {0}")]
    VenueNotFound(String),
}

/// Calendar-year bounds on ingested records.
pub const YEAR_MIN: i32 = 1800;
pub const YEAR_MAX: i32 = 2100;

/// One author slot on one paper. `position` 0 is the first author.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Authorship {
    pub author_id: String,
    pub institution_id: Option<String>,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub doi: Option<String>,
    pub title: String,
    pub abstract_text: Option<String>,
    pub year: Option<i32>,
    pub venue_id: String,
    pub authorships: Vec<Authorship>,
    pub references: Vec<String>,
}

/// ISO 3166-1 alpha-2 code, or the sentinel `unknown` when affiliation data
/// is missing or unresolvable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode(String);

impl CountryCode {
    pub const UNKNOWN: &'static str = "unknown";

    pub fn unknown() -> Self {
        CountryCode(Self::UNKNOWN.to_string())
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        if s == Self::UNKNOWN {
            return Ok(Self::unknown());
        }
        if s.len() == 2 && s.bytes().all(|b| b.is_ascii_uppercase()) {
            return Ok(CountryCode(s.to_string()));
        }
        Err(format!(
            "country code must be two uppercase letters or {:?}, got {s:?}",
            Self::UNKNOWN
        ))
    }

    pub fn is_unknown(&self) -> bool {
        self.0 == Self::UNKNOWN
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CountryCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Institution {
    pub institution_id: String,
    pub name: String,
    pub country_code: CountryCode,
}

/// Affiliation lookup keyed by institution id.
#[derive(Debug, Clone, Default)]
pub struct InstitutionTable {
    by_id: BTreeMap<String, Institution>,
}

impl InstitutionTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Duplicate ids keep the first occurrence (reference data in the wild
    /// repeats rows); a warning is logged.
    pub fn from_institutions(institutions: Vec<Institution>) -> Self {
        let mut by_id: BTreeMap<String, Institution> = BTreeMap::new();
        for inst in institutions {
            match by_id.entry(inst.institution_id.clone()) {
                Entry::Occupied(slot) => {
                    log::warn!(
                        "duplicate institution id {:?}; keeping first occurrence",
                        slot.key()
                    );
                }
                Entry::Vacant(slot) => {
                    slot.insert(inst);
                }
            }
        }
        InstitutionTable { by_id }
    }

    pub fn get(&self, institution_id: &str) -> Option<&Institution> {
        self.by_id.get(institution_id)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Institution> {
        self.by_id.values()
    }
}

/// One (author, paper) pair with resolved country.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contribution {
    pub author_id: String,
    pub institution_id: Option<String>,
    pub country_code: CountryCode,
    pub position: usize,
}

/// One contribution per authorship, in author order; the country degrades to
/// `unknown` when the institution or its country is missing.
pub fn contributions(paper: &PaperRecord, institutions: &InstitutionTable) -> Vec<Contribution> {
    paper
        .authorships
        .iter()
        .map(|a| {
            let country_code = a
                .institution_id
                .as_deref()
                .and_then(|id| institutions.get(id))
                .map(|inst| inst.country_code.clone())
                .unwrap_or_else(CountryCode::unknown);
            Contribution {
                author_id: a.author_id.clone(),
                institution_id: a.institution_id.clone(),
                country_code,
                position: a.position,
            }
        })
        .collect()
}

/// Immutable record store produced by ingestion.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    records: Vec<PaperRecord>,
    by_id: HashMap<String, usize>,
    institutions: Arc<InstitutionTable>,
}

impl CorpusStore {
    /// Build a store from already-parsed records, enforcing every record
    /// invariant (unique nonempty ids, year bounds, contiguous authorship
    /// positions, no self or duplicate references, delimiter-free fields).
    pub fn from_records(
        records: Vec<PaperRecord>,
        institutions: Arc<InstitutionTable>,
    ) -> Result<Self, CorpusError> {
        let mut by_id: HashMap<String, usize> = HashMap::with_capacity(records.len());
        for (idx, rec) in records.iter().enumerate() {
            validate_record(rec)?;
            if by_id.insert(rec.paper_id.clone(), idx).is_some() {
                return Err(CorpusError::Invalid {
                    paper_id: rec.paper_id.clone(),
                    message: "duplicate paper_id".to_string(),
                });
            }
        }
        Ok(CorpusStore {
            records,
            by_id,
            institutions,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.by_id.get(paper_id).map(|&i| &self.records[i])
    }

    pub fn institutions(&self) -> &Arc<InstitutionTable> {
        &self.institutions
    }

    /// Distinct venue ids present, sorted.
    pub fn venue_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.venue_id.as_str()).collect()
    }
}

/// Which slice of a venue corpus a figure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Partition {
    Accepted,
    Citing,
    Cited,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Accepted, Partition::Citing, Partition::Cited];

    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Accepted => "accepted",
            Partition::Citing => "citing",
            Partition::Cited => "cited",
        }
    }
}

/// A venue's accepted papers plus the papers citing them and the papers they
/// cite, resolved against one store. Partitions may overlap.
#[derive(Debug, Clone)]
pub struct VenueCorpus {
    pub venue_label: String,
    pub venue_ids: Vec<String>,
    pub accepted: Vec<PaperRecord>,
    pub citing: Vec<PaperRecord>,
    pub cited: Vec<PaperRecord>,
    /// Reference occurrences in accepted papers whose target is absent from
    /// the store. These participate in no metric.
    pub dangling_references: u64,
    institutions: Arc<InstitutionTable>,
}

impl VenueCorpus {
    /// Reassembles a corpus from staged artifacts. Callers must pass
    /// partitions that came out of [`extract::extract_logical_venue`] for
    /// the same store; nothing is re-validated here.
    pub(crate) fn from_parts(
        venue_label: String,
        venue_ids: Vec<String>,
        accepted: Vec<PaperRecord>,
        citing: Vec<PaperRecord>,
        cited: Vec<PaperRecord>,
        dangling_references: u64,
        institutions: Arc<InstitutionTable>,
    ) -> Self {
        VenueCorpus {
            venue_label,
            venue_ids,
            accepted,
            citing,
            cited,
            dangling_references,
            institutions,
        }
    }

    pub fn partition(&self, p: Partition) -> &[PaperRecord] {
        match p {
            Partition::Accepted => &self.accepted,
            Partition::Citing => &self.citing,
            Partition::Cited => &self.cited,
        }
    }

    pub fn institutions(&self) -> &Arc<InstitutionTable> {
        &self.institutions
    }

    pub fn accepted_ids(&self) -> BTreeSet<&str> {
        self.accepted.iter().map(|p| p.paper_id.as_str()).collect()
    }
}

const ID_FORBIDDEN: [char; 5] = ['\t', '\n', '\r', ';', ','];
const TEXT_FORBIDDEN: [char; 3] = ['\t', '\n', '\r'];

pub(crate) fn check_id(kind: &str, id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err(format!("{kind} is empty"));
    }
    if id.contains(ID_FORBIDDEN) {
        return Err(format!("{kind} {id:?} contains a delimiter character"));
    }
    Ok(())
}

fn check_text(kind: &str, text: &str) -> Result<(), String> {
    if text.contains(TEXT_FORBIDDEN) {
        return Err(format!("{kind} contains a tab or line break"));
    }
    Ok(())
}

fn validate_record(rec: &PaperRecord) -> Result<(), CorpusError> {
    let fail = |message: String| CorpusError::Invalid {
        paper_id: rec.paper_id.clone(),
        message,
    };

    check_id("paper_id", &rec.paper_id).map_err(fail)?;
    if !rec.venue_id.is_empty() {
        check_id("venue_id", &rec.venue_id).map_err(fail)?;
    }
    check_text("title", &rec.title).map_err(fail)?;
    if let Some(doi) = &rec.doi {
        check_text("doi", doi).map_err(fail)?;
    }
    if let Some(abs) = &rec.abstract_text {
        check_text("abstract", abs).map_err(fail)?;
    }
    if let Some(y) = rec.year {
        if !(YEAR_MIN..=YEAR_MAX).contains(&y) {
            return Err(fail(format!("year {y} outside [{YEAR_MIN}, {YEAR_MAX}]")));
        }
    }
    for (i, a) in rec.authorships.iter().enumerate() {
        check_id("author_id", &a.author_id).map_err(fail)?;
        if let Some(inst) = &a.institution_id {
            check_id("institution_id", inst).map_err(fail)?;
        }
        if a.position != i {
            return Err(fail(format!(
                "authorship positions must be contiguous from 0; index {i} has position {}",
                a.position
            )));
        }
    }
    let mut seen = BTreeSet::new();
    for r in &rec.references {
        check_id("reference", r).map_err(fail)?;
        if r == &rec.paper_id {
            return Err(fail("record references itself".to_string()));
        }
        if !seen.insert(r.as_str()) {
            return Err(fail(format!("duplicate reference {r:?}")));
        }
    }
    Ok(())
}

/// Canonical column order used by [`write_records_tsv`] and
/// [`TsvSchema::canonical`].
pub const CANONICAL_COLUMNS: [SchemaField; 8] = [
    SchemaField::PaperId,
    SchemaField::Doi,
    SchemaField::Title,
    SchemaField::Abstract,
    SchemaField::Year,
    SchemaField::VenueId,
    SchemaField::Authorships,
    SchemaField::References,
];

fn encode_authorships(authorships: &[Authorship]) -> String {
    authorships
        .iter()
        .map(|a| match &a.institution_id {
            Some(inst) => format!("{},{}", a.author_id, inst),
            None => a.author_id.clone(),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Serialize records in canonical column order, one headerless TSV row each.
/// Re-ingesting the output under [`TsvSchema::canonical`] reproduces the
/// records field-by-field.
pub fn write_records_tsv<W: Write>(mut w: W, records: &[PaperRecord]) -> io::Result<()> {
    for rec in records {
        let year = rec.year.map(|y| y.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            rec.paper_id,
            rec.doi.as_deref().unwrap_or(""),
            rec.title,
            rec.abstract_text.as_deref().unwrap_or(""),
            year,
            rec.venue_id,
            encode_authorships(&rec.authorships),
            rec.references.join(";"),
        )?;
    }
    Ok(())
}

/// Serialize an institution table as headerless TSV rows
/// (institution_id, name, country_code), sorted by id.
pub fn write_institutions_tsv<W: Write>(mut w: W, table: &InstitutionTable) -> io::Result<()> {
    for inst in table.iter() {
        writeln!(
            w,
            "{}\t{}\t{}",
            inst.institution_id, inst.name, inst.country_code
        )?;
    }
    Ok(())
}
