//! Deterministic report emission: CSV tables, TSV annotations, SVG heatmaps.
//!
//! Every writer produces identical bytes for identical inputs: no
//! timestamps, no map-iteration nondeterminism, fixed column orders.

pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::classifier::TopicAnnotation;
use crate::corpus::Partition;
use crate::metrics::{
    CountTable, Debit, DebitEntry, FirstAuthorTrends, StabilitySeries, TrendBand, YearMatrix,
};
use crate::ontology::TopicOntology;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Year-column value for events that carry no year.
pub const NO_YEAR: &str = "n/a";

/// Cell value for undefined statistics (gaps, empty denominators).
pub const UNDEFINED: &str = "undefined";

/// Ratio value for unbounded growth (start count zero).
pub const INFINITE: &str = "inf";

pub fn write_papers_per_year_csv<W: Write>(
    w: W,
    by_year: &BTreeMap<i32, u64>,
    undated: u64,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["year", "papers"])?;
    for (year, count) in by_year {
        csv.write_record([year.to_string(), count.to_string()])?;
    }
    if undated > 0 {
        csv.write_record([NO_YEAR.to_string(), undated.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_count_table_csv<W: Write>(
    w: W,
    key_header: &str,
    count_header: &str,
    table: &CountTable,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([key_header, count_header])?;
    for (key, count) in table.entries() {
        csv.write_record([key.as_str(), &count.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Long-form matrix: one row per cell, zeros included so the rectangle is
/// explicit; unplaced (year-less) events follow as `n/a`-year rows.
pub fn write_year_matrix_csv<W: Write>(
    w: W,
    key_header: &str,
    count_header: &str,
    matrix: &YearMatrix,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([key_header, "year", count_header])?;
    for (row, key) in matrix.row_keys.iter().enumerate() {
        for (col, year) in matrix.col_years.iter().enumerate() {
            csv.write_record([
                key.as_str(),
                &year.to_string(),
                &matrix.get(row, col).to_string(),
            ])?;
        }
        let unplaced = matrix.unplaced_by_row[row];
        if unplaced > 0 {
            csv.write_record([key.as_str(), NO_YEAR, &unplaced.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Dense grid form: first column the row key, one column per year.
pub fn write_year_matrix_grid_csv<W: Write>(
    w: W,
    key_header: &str,
    matrix: &YearMatrix,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec![key_header.to_string()];
    header.extend(matrix.col_years.iter().map(i32::to_string));
    csv.write_record(&header)?;
    for (row, key) in matrix.row_keys.iter().enumerate() {
        let mut record = vec![key.clone()];
        record.extend(matrix.row(row).iter().map(u64::to_string));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_country_distribution_csv<W: Write>(
    w: W,
    tables: &[(Partition, CountTable)],
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["partition", "country_code", "contributions"])?;
    for (partition, table) in tables {
        for (country, count) in table.entries() {
            csv.write_record([partition.as_str(), country, &count.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_debit_csv<W: Write>(w: W, entries: &[DebitEntry]) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "country_code",
        "citing_contributions",
        "cited_contributions",
        "debit",
    ])?;
    for e in entries {
        let debit = match e.debit {
            Debit::Ratio(r) => r.to_string(),
            Debit::NeverCited => "NEVER_CITED".to_string(),
        };
        csv.write_record([
            e.country_code.as_str(),
            &e.citing_contribs.to_string(),
            &e.cited_contribs.to_string(),
            &debit,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_stability_csv<W: Write>(w: W, series: &StabilitySeries) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["year_a", "year_b", "rho"])?;
    for p in &series.points {
        let rho = p.rho.map(|r| r.to_string()).unwrap_or_else(|| UNDEFINED.to_string());
        csv.write_record([p.year_a.to_string(), p.year_b.to_string(), rho])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-year rows first (scope = the year), then one pooled `overall` row.
pub fn write_first_author_csv<W: Write>(
    w: W,
    trends: &FirstAuthorTrends,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "scope",
        "first_author_institutions",
        "never_first_institutions",
        "total_institutions",
        "pct_never_first",
    ])?;
    let mut write_row = |scope: String, stat: &crate::metrics::FirstAuthorStat| {
        let pct = stat
            .pct_never_first()
            .map(|p| p.to_string())
            .unwrap_or_else(|| UNDEFINED.to_string());
        csv.write_record([
            scope,
            stat.first_author_institutions.to_string(),
            stat.never_first_institutions.to_string(),
            stat.total_institutions.to_string(),
            pct,
        ])
    };
    for (year, stat) in &trends.per_year {
        write_row(year.to_string(), stat)?;
    }
    write_row("overall".to_string(), &trends.overall)?;
    csv.flush()?;
    Ok(())
}

/// Bands in threshold order; `band_upper` empty for the unbounded top band,
/// `ratio` is `inf` for topics growing from zero.
pub fn write_topic_trends_csv<W: Write>(w: W, bands: &[TrendBand]) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "band_lower",
        "band_upper",
        "rank",
        "topic_id",
        "start_count",
        "end_count",
        "ratio",
    ])?;
    for band in bands {
        let upper = band.upper.map(|u| u.to_string()).unwrap_or_default();
        for (i, e) in band.entries.iter().enumerate() {
            let ratio = e
                .ratio
                .map(|r| r.to_string())
                .unwrap_or_else(|| INFINITE.to_string());
            csv.write_record([
                band.lower.to_string(),
                upper.clone(),
                (i + 1).to_string(),
                e.topic_id.clone(),
                e.start_count.to_string(),
                e.end_count.to_string(),
                ratio,
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_topic_country_csv<W: Write>(
    w: W,
    per_topic: &[(String, CountTable)],
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["topic_id", "country_code", "contributions"])?;
    for (topic, table) in per_topic {
        for (country, count) in table.entries() {
            csv.write_record([topic.as_str(), country, &count.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Headerless annotation rows: paper_id, `;`-joined direct topics,
/// `;`-joined enriched topics. Topic labels never contain `;` or tabs.
pub fn write_annotations_tsv<W: Write>(
    mut w: W,
    annotations: &BTreeMap<String, TopicAnnotation>,
) -> Result<(), ReportError> {
    for (paper_id, ann) in annotations {
        let direct: Vec<&str> = ann.direct_topics.iter().map(String::as_str).collect();
        let enriched: Vec<&str> = ann.enriched_topics.iter().map(String::as_str).collect();
        writeln!(w, "{paper_id}\t{}\t{}", direct.join(";"), enriched.join(";"))?;
    }
    Ok(())
}

/// Inverse of [`write_annotations_tsv`]; the union set is recomputed via
/// the ontology's canonicalization, so the ontology must be the one the
/// annotations were produced with.
pub fn read_annotations_tsv<R: BufRead>(
    reader: R,
    ontology: &TopicOntology,
) -> Result<BTreeMap<String, TopicAnnotation>, ReportError> {
    let mut annotations = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(ReportError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].is_empty() {
            return Err(ReportError::Parse {
                line: line_no,
                message: "empty paper_id".to_string(),
            });
        }
        let split = |s: &str| -> BTreeSet<String> {
            s.split(';')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        };
        let ann = TopicAnnotation::assemble(
            cols[0].to_string(),
            split(cols[1]),
            split(cols[2]),
            ontology,
        );
        if annotations.insert(cols[0].to_string(), ann).is_some() {
            return Err(ReportError::Parse {
                line: line_no,
                message: format!("duplicate paper_id {:?}", cols[0]),
            });
        }
    }
    Ok(annotations)
}
