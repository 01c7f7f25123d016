//! Flat-file ingestion: schema-mapped TSV dumps and institution tables.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::sync::Arc;

use crate::corpus::{
    check_id, Authorship, CorpusError, CorpusStore, CountryCode, Institution, InstitutionTable,
    PaperRecord, CANONICAL_COLUMNS, YEAR_MAX, YEAR_MIN,
};

/// Record columns a schema can map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SchemaField {
    PaperId,
    Doi,
    Title,
    Abstract,
    Year,
    VenueId,
    Authorships,
    References,
}

impl SchemaField {
    pub fn name(self) -> &'static str {
        match self {
            SchemaField::PaperId => "paper_id",
            SchemaField::Doi => "doi",
            SchemaField::Title => "title",
            SchemaField::Abstract => "abstract",
            SchemaField::Year => "year",
            SchemaField::VenueId => "venue_id",
            SchemaField::Authorships => "authorships",
            SchemaField::References => "references",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CANONICAL_COLUMNS.into_iter().find(|f| f.name() == name)
    }

    /// Required fields must be mapped by every schema; their row values may
    /// still be empty (a record can lack a year or venue).
    pub fn required(self) -> bool {
        matches!(
            self,
            SchemaField::PaperId | SchemaField::Year | SchemaField::VenueId
        )
    }
}

/// Column mapping for a dump file: field name to zero-based column index.
///
/// The on-disk form is one `name=index` pair per line; `#` comments and
/// blank lines are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsvSchema {
    columns: BTreeMap<SchemaField, usize>,
}

impl TsvSchema {
    /// The column order produced by [`crate::corpus::write_records_tsv`].
    pub fn canonical() -> Self {
        TsvSchema {
            columns: CANONICAL_COLUMNS
                .into_iter()
                .enumerate()
                .map(|(i, f)| (f, i))
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut columns: BTreeMap<SchemaField, usize> = BTreeMap::new();
        let mut used: BTreeMap<usize, SchemaField> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CorpusError::Config(format!("schema line {}: expected name=index", idx + 1))
            })?;
            let field = SchemaField::from_name(key.trim()).ok_or_else(|| {
                CorpusError::Config(format!("schema line {}: unknown column {key:?}", idx + 1))
            })?;
            let index: usize = value.trim().parse().map_err(|_| {
                CorpusError::Config(format!(
                    "schema line {}: invalid column index {value:?}",
                    idx + 1
                ))
            })?;
            if columns.insert(field, index).is_some() {
                return Err(CorpusError::Config(format!(
                    "schema maps column {:?} twice",
                    field.name()
                )));
            }
            if let Some(other) = used.insert(index, field) {
                return Err(CorpusError::Config(format!(
                    "schema maps index {index} to both {:?} and {:?}",
                    other.name(),
                    field.name()
                )));
            }
        }
        let schema = TsvSchema { columns };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for field in CANONICAL_COLUMNS {
            if field.required() && !self.columns.contains_key(&field) {
                return Err(CorpusError::Config(format!(
                    "schema is missing required column {:?}",
                    field.name()
                )));
            }
        }
        Ok(())
    }

    pub fn column(&self, field: SchemaField) -> Option<usize> {
        self.columns.get(&field).copied()
    }

    /// Render as `name=index` lines sorted by index.
    pub fn to_text(&self) -> String {
        let mut by_index: Vec<(usize, SchemaField)> =
            self.columns.iter().map(|(f, i)| (*i, *f)).collect();
        by_index.sort();
        let mut out = String::new();
        for (i, f) in by_index {
            out.push_str(f.name());
            out.push('=');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestMode {
    /// Abort on the first malformed row.
    Strict,
    /// Skip malformed rows and count them.
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub rows_read: u64,
    pub records_kept: u64,
    pub rows_skipped: u64,
    pub duplicate_ids: u64,
    pub self_references_dropped: u64,
    pub duplicate_references_dropped: u64,
    pub authorship_rows: u64,
}

struct ParsedRow {
    record: PaperRecord,
    self_refs: u64,
    dup_refs: u64,
}

/// Ingest a tab-separated dump into an immutable store.
///
/// Rows shorter than the schema's highest index are padded with empty
/// values. Empty segments in the references column are ignored;
/// self-references and duplicate references are dropped and counted.
/// Duplicate paper ids keep the first occurrence in lenient mode and fail
/// in strict mode.
pub fn ingest<R: BufRead>(
    source: R,
    schema: &TsvSchema,
    mode: IngestMode,
    institutions: Arc<InstitutionTable>,
) -> Result<(CorpusStore, IngestStats), CorpusError> {
    let mut stats = IngestStats::default();
    let mut records: Vec<PaperRecord> = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        stats.rows_read += 1;

        match parse_row(line, schema) {
            Ok(row) => {
                if seen_ids.contains(&row.record.paper_id) {
                    match mode {
                        IngestMode::Strict => {
                            return Err(CorpusError::Parse {
                                line: line_no,
                                message: format!("duplicate paper_id {:?}", row.record.paper_id),
                            });
                        }
                        IngestMode::Lenient => {
                            stats.duplicate_ids += 1;
                            continue;
                        }
                    }
                }
                seen_ids.insert(row.record.paper_id.clone());
                stats.records_kept += 1;
                stats.self_references_dropped += row.self_refs;
                stats.duplicate_references_dropped += row.dup_refs;
                stats.authorship_rows += row.record.authorships.len() as u64;
                records.push(row.record);
            }
            Err(message) => match mode {
                IngestMode::Strict => return Err(CorpusError::Parse { line: line_no, message }),
                IngestMode::Lenient => {
                    log::debug!("skipping row {line_no}: {message}");
                    stats.rows_skipped += 1;
                }
            },
        }
    }

    let store = CorpusStore::from_records(records, institutions)
        .expect("row-level checks enforce every store invariant");
    Ok((store, stats))
}

fn parse_row(line: &str, schema: &TsvSchema) -> Result<ParsedRow, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    let get = |field: SchemaField| -> &str {
        schema
            .column(field)
            .and_then(|i| cols.get(i).copied())
            .unwrap_or("")
    };

    let paper_id = get(SchemaField::PaperId);
    check_id("paper_id", paper_id)?;

    let venue_id = get(SchemaField::VenueId);
    if !venue_id.is_empty() {
        check_id("venue_id", venue_id)?;
    }

    let year_raw = get(SchemaField::Year);
    let year = if year_raw.is_empty() {
        None
    } else {
        let y: i32 = year_raw
            .parse()
            .map_err(|_| format!("invalid year {year_raw:?}"))?;
        if !(YEAR_MIN..=YEAR_MAX).contains(&y) {
            return Err(format!("year {y} outside [{YEAR_MIN}, {YEAR_MAX}]"));
        }
        Some(y)
    };

    let doi = match get(SchemaField::Doi) {
        "" => None,
        d => Some(d.to_string()),
    };
    let title = get(SchemaField::Title).to_string();
    let abstract_text = match get(SchemaField::Abstract) {
        "" => None,
        a => Some(a.to_string()),
    };

    let mut authorships = Vec::new();
    let raw_auth = get(SchemaField::Authorships);
    if !raw_auth.is_empty() {
        for (position, entry) in raw_auth.split(';').enumerate() {
            if entry.is_empty() {
                return Err("empty authorship entry".to_string());
            }
            let (author_id, institution_id) = match entry.split_once(',') {
                None => (entry, None),
                Some((a, "")) => (a, None),
                Some((a, inst)) => {
                    if inst.contains(',') {
                        return Err(format!("authorship entry {entry:?} has too many fields"));
                    }
                    (a, Some(inst))
                }
            };
            check_id("author_id", author_id)?;
            if let Some(inst) = institution_id {
                check_id("institution_id", inst)?;
            }
            authorships.push(Authorship {
                author_id: author_id.to_string(),
                institution_id: institution_id.map(str::to_string),
                position,
            });
        }
    }

    let mut references = Vec::new();
    let mut seen_refs: BTreeSet<&str> = BTreeSet::new();
    let mut self_refs = 0u64;
    let mut dup_refs = 0u64;
    for r in get(SchemaField::References).split(';') {
        if r.is_empty() {
            continue;
        }
        check_id("reference", r)?;
        if r == paper_id {
            self_refs += 1;
            continue;
        }
        if !seen_refs.insert(r) {
            dup_refs += 1;
            continue;
        }
        references.push(r.to_string());
    }

    Ok(ParsedRow {
        record: PaperRecord {
            paper_id: paper_id.to_string(),
            doi,
            title,
            abstract_text,
            year,
            venue_id: venue_id.to_string(),
            authorships,
            references,
        },
        self_refs,
        dup_refs,
    })
}

/// Load a headerless institution TSV (institution_id, name, country_code).
/// Blank lines are skipped; any other malformed row is an error.
pub fn load_institutions<R: BufRead>(source: R) -> Result<InstitutionTable, CorpusError> {
    let mut institutions = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        check_id("institution_id", cols[0]).map_err(|message| CorpusError::Parse {
            line: line_no,
            message,
        })?;
        let country_code =
            CountryCode::parse(cols[2]).map_err(|message| CorpusError::Parse {
                line: line_no,
                message,
            })?;
        institutions.push(Institution {
            institution_id: cols[0].to_string(),
            name: cols[1].to_string(),
            country_code,
        });
    }
    Ok(InstitutionTable::from_institutions(institutions))
}
