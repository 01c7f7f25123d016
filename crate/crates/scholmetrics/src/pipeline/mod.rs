//! Config-driven batch pipeline behind the CLI.
//!
//! Stages communicate only through files under the output directory, so any
//! stage can rerun from artifacts on disk:
//!
//! ```text
//! out/
//!   store/               ingest:   records.tsv, institutions.tsv,
//!                                  schema.txt, store_manifest.txt
//!   venues/<NAME>/       extract:  accepted.ids, citing.ids, cited.ids,
//!                                  corpus_manifest.txt
//!                        classify: annotations.tsv, classify_manifest.txt
//!     reports/           report:   14 CSV reports + 3 SVG heatmaps
//!   run_manifest.txt     every command
//! ```
//!
//! Nothing here writes timestamps or machine identifiers: rerunning a
//! command with identical inputs produces byte-identical artifacts.

pub mod config;

pub use config::{ConfigOverrides, PipelineConfig};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::{Classifier, Stopwords, TopicAnnotation};
use crate::corpus::{
    ingest, load_institutions, write_institutions_tsv, write_records_tsv, CorpusError,
    CorpusStore, IngestMode, IngestStats, PaperRecord, Partition, TsvSchema, VenueCorpus,
};
use crate::metrics::{
    self, CitationDirection, MetricsError,
};
use crate::ontology::{load_ontology, TopicOntology};
use crate::report::{self, ReportError};

/// The 14 CSV reports the report stage emits, in emission order.
pub const REPORT_FILES: [&str; 14] = [
    "accepted_by_year.csv",
    "institution_ranking.csv",
    "venues_cited.csv",
    "venues_cited_by_year.csv",
    "venues_citing.csv",
    "venues_citing_by_year.csv",
    "reference_memory.csv",
    "country_distribution.csv",
    "solo_country_papers.csv",
    "knowledge_debit.csv",
    "ranking_stability.csv",
    "first_author_institutions.csv",
    "topic_trends.csv",
    "topic_country_distribution.csv",
];

/// SVG renderings of the three year-matrix reports.
pub const HEATMAP_FILES: [&str; 3] = [
    "venues_cited_by_year.svg",
    "venues_citing_by_year.svg",
    "reference_memory.svg",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad invocation or configuration. Exit code 1.
    #[error("{0}")]
    Usage(String),

    /// A required artifact from an earlier stage is missing. Exit code 2.
    #[error("{0}")]
    Dependency(String),

    /// Inputs or artifacts exist but cannot be processed. Exit code 3.
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Dependency(_) => 2,
            PipelineError::Data(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Extract,
    Classify,
    Report,
    All,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Ingest => "ingest",
            Command::Extract => "extract",
            Command::Classify => "classify",
            Command::Report => "report",
            Command::All => "all",
        };
        f.write_str(name)
    }
}

/// One human-readable line per completed stage, for the CLI to print.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub lines: Vec<String>,
}

/// Output-directory layout shared by all stages.
struct Layout {
    out: PathBuf,
}

impl Layout {
    fn new(out: &Path) -> Self {
        Layout { out: out.to_path_buf() }
    }

    fn store_dir(&self) -> PathBuf {
        self.out.join("store")
    }
    fn records(&self) -> PathBuf {
        self.store_dir().join("records.tsv")
    }
    fn institutions(&self) -> PathBuf {
        self.store_dir().join("institutions.tsv")
    }
    fn schema(&self) -> PathBuf {
        self.store_dir().join("schema.txt")
    }
    fn store_manifest(&self) -> PathBuf {
        self.store_dir().join("store_manifest.txt")
    }

    fn venue_dir(&self, name: &str) -> PathBuf {
        self.out.join("venues").join(name)
    }
    fn ids(&self, name: &str, partition: Partition) -> PathBuf {
        self.venue_dir(name).join(format!("{}.ids", partition.as_str()))
    }
    fn corpus_manifest(&self, name: &str) -> PathBuf {
        self.venue_dir(name).join("corpus_manifest.txt")
    }
    fn annotations(&self, name: &str) -> PathBuf {
        self.venue_dir(name).join("annotations.tsv")
    }
    fn classify_manifest(&self, name: &str) -> PathBuf {
        self.venue_dir(name).join("classify_manifest.txt")
    }
    fn reports_dir(&self, name: &str) -> PathBuf {
        self.venue_dir(name).join("reports")
    }
    fn run_manifest(&self) -> PathBuf {
        self.out.join("run_manifest.txt")
    }
}

/// Runs one command against a validated configuration.
pub fn run(command: Command, config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let mut ctx = Ctx {
        config,
        layout: Layout::new(&config.out_dir),
        inputs: BTreeMap::new(),
        summary: RunSummary::default(),
    };
    match command {
        Command::Ingest => ctx.ingest()?,
        Command::Extract => ctx.extract()?,
        Command::Classify => ctx.classify()?,
        Command::Report => ctx.report()?,
        Command::All => {
            ctx.ingest()?;
            ctx.extract()?;
            ctx.classify()?;
            ctx.report()?;
        }
    }
    ctx.write_run_manifest(command)?;
    Ok(ctx.summary)
}

struct Ctx<'a> {
    config: &'a PipelineConfig,
    layout: Layout,
    /// External inputs consumed by this run: name -> digest or version tag.
    inputs: BTreeMap<String, String>,
    summary: RunSummary,
}

impl Ctx<'_> {
    // ----- stage: ingest ---------------------------------------------------

    fn ingest(&mut self) -> Result<(), PipelineError> {
        let dump_bytes = read_input(&self.config.dump)?;
        self.note_input("dump", &dump_bytes);
        let inst_bytes = read_input(&self.config.institutions)?;
        self.note_input("institutions", &inst_bytes);

        let schema = match &self.config.schema {
            None => TsvSchema::canonical(),
            Some(path) => {
                let text = read_input(path)?;
                self.note_input("schema", &text);
                TsvSchema::parse(&String::from_utf8_lossy(&text)).map_err(|e| {
                    PipelineError::Usage(format!("schema file {}: {e}", path.display()))
                })?
            }
        };

        let institutions = load_institutions(&inst_bytes[..]).map_err(|e| {
            PipelineError::Data(format!(
                "institution table {}: {e}",
                self.config.institutions.display()
            ))
        })?;
        let (store, stats) = ingest(
            &dump_bytes[..],
            &schema,
            self.config.mode,
            Arc::new(institutions),
        )
        .map_err(|e| {
            PipelineError::Data(format!("dump {}: {e}", self.config.dump.display()))
        })?;

        let dir = self.layout.store_dir();
        clear_dir(&dir)?;
        let mut records = Vec::new();
        write_records_tsv(&mut records, store.records())
            .expect("writing to memory cannot fail");
        write_file(&self.layout.records(), &records)?;
        let mut insts = Vec::new();
        write_institutions_tsv(&mut insts, store.institutions())
            .expect("writing to memory cannot fail");
        write_file(&self.layout.institutions(), &insts)?;
        // records.tsv is always written in canonical order, whatever the
        // source dump looked like.
        write_file(
            &self.layout.schema(),
            TsvSchema::canonical().to_text().as_bytes(),
        )?;
        write_file(
            &self.layout.store_manifest(),
            store_manifest_text(&stats, &self.inputs).as_bytes(),
        )?;

        self.summary.lines.push(format!(
            "ingest: {} records kept, {} rows skipped ({} duplicate ids), \
             {} self references and {} duplicate references dropped",
            stats.records_kept,
            stats.rows_skipped,
            stats.duplicate_ids,
            stats.self_references_dropped,
            stats.duplicate_references_dropped,
        ));
        Ok(())
    }

    // ----- stage: extract --------------------------------------------------

    fn extract(&mut self) -> Result<(), PipelineError> {
        let store = self.load_store()?;
        for (name, ids) in self.config.selected_venues() {
            let corpus = crate::corpus::extract_logical_venue(&store, name, ids)
                .map_err(|e| match e {
                    CorpusError::Config(msg) => PipelineError::Usage(msg),
                    other => PipelineError::Data(format!("venue {name}: {other}")),
                })?;
            let dir = self.layout.venue_dir(name);
            clear_dir(&dir)?;
            for partition in Partition::ALL {
                let mut body = String::new();
                for paper in corpus.partition(partition) {
                    body.push_str(&paper.paper_id);
                    body.push('\n');
                }
                write_file(&self.layout.ids(name, partition), body.as_bytes())?;
            }
            write_file(
                &self.layout.corpus_manifest(name),
                corpus_manifest_text(&corpus).as_bytes(),
            )?;
            self.summary.lines.push(format!(
                "extract {name}: {} accepted / {} citing / {} cited papers, \
                 {} dangling references",
                corpus.accepted.len(),
                corpus.citing.len(),
                corpus.cited.len(),
                corpus.dangling_references,
            ));
        }
        Ok(())
    }

    // ----- stage: classify -------------------------------------------------

    fn classify(&mut self) -> Result<(), PipelineError> {
        let store = self.load_store()?;
        let (ontology, ontology_digest) = self.load_ontology()?;
        let stopwords = self.load_stopwords()?;
        let stopword_version = stopwords.version().to_string();
        let classifier = Classifier::new(Arc::new(ontology), stopwords, self.config.threshold)
            .map_err(|e| PipelineError::Usage(e.to_string()))?;

        for (name, _) in self.config.selected_venues() {
            let ids_path = self.layout.ids(name, Partition::Accepted);
            require_artifact(&ids_path, "extract")?;
            let accepted = self.resolve_ids(&store, &ids_path)?;
            let annotations = classifier.classify_corpus(&accepted);
            let empty = annotations.values().filter(|a| a.is_empty()).count();

            let mut body = Vec::new();
            report::write_annotations_tsv(&mut body, &annotations)
                .expect("writing to memory cannot fail");
            write_file(&self.layout.annotations(name), &body)?;
            write_file(
                &self.layout.classify_manifest(name),
                classify_manifest_text(
                    annotations.len() as u64,
                    empty as u64,
                    &ontology_digest,
                    &stopword_version,
                    classifier.threshold(),
                    classifier.ontology().len() as u64,
                )
                .as_bytes(),
            )?;
            self.summary.lines.push(format!(
                "classify {name}: {} papers annotated ({} without topics), \
                 threshold {}",
                annotations.len(),
                empty,
                classifier.threshold(),
            ));
        }
        Ok(())
    }

    // ----- stage: report ---------------------------------------------------

    fn report(&mut self) -> Result<(), PipelineError> {
        let store = self.load_store()?;
        let (ontology, ontology_digest) = self.load_ontology()?;

        for (name, _) in self.config.selected_venues() {
            let manifest_path = self.layout.corpus_manifest(name);
            require_artifact(&manifest_path, "extract")?;
            let corpus_manifest = read_kv(&manifest_path)?;
            let annotations_path = self.layout.annotations(name);
            require_artifact(&annotations_path, "classify")?;
            let classify_manifest = read_kv(&self.layout.classify_manifest(name))?;

            if let Some(expected) = classify_manifest.get("ontology_sha256") {
                if *expected != ontology_digest {
                    return Err(PipelineError::Data(format!(
                        "venue {name}: annotations were produced with a different \
                         ontology (digest {expected}, current {ontology_digest}); \
                         re-run the classify stage"
                    )));
                }
            }

            let corpus = self.load_corpus(&store, name, &corpus_manifest)?;
            let annotations_bytes = read_input(&annotations_path)?;
            let annotations = report::read_annotations_tsv(&annotations_bytes[..], &ontology)
                .map_err(|e| {
                    PipelineError::Data(format!("{}: {e}", annotations_path.display()))
                })?;

            let completed = self.write_reports(name, &corpus, &annotations, &ontology)?;
            self.summary.lines.push(format!(
                "report {name}: {} reports, {} heatmaps",
                completed,
                HEATMAP_FILES.len()
            ));
        }
        Ok(())
    }

    /// Computes every report, then writes them one file at a time. A write
    /// failure aborts and names the reports already completed.
    fn write_reports(
        &self,
        name: &str,
        corpus: &VenueCorpus,
        annotations: &BTreeMap<String, TopicAnnotation>,
        ontology: &TopicOntology,
    ) -> Result<usize, PipelineError> {
        let cfg = self.config;
        let data_err = |e: MetricsError| PipelineError::Data(e.to_string());

        let (by_year, undated) = metrics::papers_per_year(&corpus.accepted);
        let institution_ranking = metrics::institution_ranking(corpus, Partition::Accepted);
        let venues_cited =
            metrics::venue_citation_table(corpus, CitationDirection::Cited, cfg.top_k);
        let venues_cited_matrix =
            metrics::venue_year_matrix(corpus, CitationDirection::Cited, cfg.top_k);
        let venues_citing =
            metrics::venue_citation_table(corpus, CitationDirection::Citing, cfg.top_k);
        let venues_citing_matrix =
            metrics::venue_year_matrix(corpus, CitationDirection::Citing, cfg.top_k);
        let memory = metrics::reference_memory_matrix(corpus);
        let country_tables: Vec<_> = Partition::ALL
            .iter()
            .map(|&p| (p, metrics::country_distribution(corpus, p)))
            .collect();
        let solo = metrics::solo_country_papers(corpus, cfg.solo_min_papers);
        let debit = metrics::knowledge_debit(corpus);
        let stability = metrics::ranking_stability(&metrics::yearly_country_distribution(
            corpus,
            Partition::Accepted,
        ));
        let first_author = metrics::first_author_institution_trends(corpus);
        let topic_counts = metrics::topic_counts_by_year(&corpus.accepted, annotations);
        let bands = metrics::topic_trend_analysis(
            &topic_counts,
            cfg.start_year,
            cfg.end_year,
            &cfg.trend_thresholds,
        )
        .map_err(data_err)?;
        let annotated_topics: BTreeSet<&str> = annotations
            .values()
            .flat_map(|a| a.all_topics.iter().map(String::as_str))
            .collect();
        let mut per_topic = Vec::with_capacity(annotated_topics.len());
        for topic in annotated_topics {
            let table = metrics::topic_country_distribution(corpus, annotations, ontology, topic)
                .map_err(data_err)?;
            per_topic.push((topic.to_string(), table));
        }

        let render = |f: &dyn Fn(&mut Vec<u8>) -> Result<(), ReportError>| -> Vec<u8> {
            let mut buf = Vec::new();
            f(&mut buf).expect("writing to memory cannot fail");
            buf
        };
        let files: Vec<(&str, Vec<u8>)> = vec![
            (
                REPORT_FILES[0],
                render(&|w| report::write_papers_per_year_csv(w, &by_year, undated)),
            ),
            (
                REPORT_FILES[1],
                render(&|w| {
                    report::write_count_table_csv(
                        w,
                        "institution_id",
                        "contributions",
                        &institution_ranking,
                    )
                }),
            ),
            (
                REPORT_FILES[2],
                render(&|w| {
                    report::write_count_table_csv(w, "venue_id", "references", &venues_cited)
                }),
            ),
            (
                REPORT_FILES[3],
                render(&|w| {
                    report::write_year_matrix_csv(w, "venue_id", "references", &venues_cited_matrix)
                }),
            ),
            (
                REPORT_FILES[4],
                render(&|w| {
                    report::write_count_table_csv(w, "venue_id", "citing_papers", &venues_citing)
                }),
            ),
            (
                REPORT_FILES[5],
                render(&|w| {
                    report::write_year_matrix_csv(
                        w,
                        "venue_id",
                        "citing_papers",
                        &venues_citing_matrix,
                    )
                }),
            ),
            (
                REPORT_FILES[6],
                render(&|w| {
                    report::write_year_matrix_csv(w, "paper_year", "references", &memory.matrix)
                }),
            ),
            (
                REPORT_FILES[7],
                render(&|w| report::write_country_distribution_csv(w, &country_tables)),
            ),
            (
                REPORT_FILES[8],
                render(&|w| report::write_count_table_csv(w, "country_code", "papers", &solo)),
            ),
            (
                REPORT_FILES[9],
                render(&|w| report::write_debit_csv(w, &debit)),
            ),
            (
                REPORT_FILES[10],
                render(&|w| report::write_stability_csv(w, &stability)),
            ),
            (
                REPORT_FILES[11],
                render(&|w| report::write_first_author_csv(w, &first_author)),
            ),
            (
                REPORT_FILES[12],
                render(&|w| report::write_topic_trends_csv(w, &bands)),
            ),
            (
                REPORT_FILES[13],
                render(&|w| report::write_topic_country_csv(w, &per_topic)),
            ),
            (
                HEATMAP_FILES[0],
                report::svg::year_matrix_heatmap(&venues_cited_matrix, "venues_cited_by_year")
                    .into_bytes(),
            ),
            (
                HEATMAP_FILES[1],
                report::svg::year_matrix_heatmap(&venues_citing_matrix, "venues_citing_by_year")
                    .into_bytes(),
            ),
            (
                HEATMAP_FILES[2],
                report::svg::year_matrix_heatmap(&memory.matrix, "reference_memory").into_bytes(),
            ),
        ];

        let dir = self.layout.reports_dir(name);
        clear_dir(&dir)?;
        let mut completed: Vec<&str> = Vec::new();
        for (file, bytes) in &files {
            let path = dir.join(file);
            if let Err(e) = std::fs::write(&path, bytes) {
                return Err(PipelineError::Data(format!(
                    "venue {name}: report {file} failed: {e}; completed reports: [{}]",
                    completed.join(", ")
                )));
            }
            completed.push(file);
        }
        Ok(REPORT_FILES.len())
    }

    // ----- shared loading --------------------------------------------------

    fn load_store(&mut self) -> Result<CorpusStore, PipelineError> {
        require_artifact(&self.layout.records(), "ingest")?;
        require_artifact(&self.layout.institutions(), "ingest")?;
        let inst_bytes = read_input(&self.layout.institutions())?;
        let institutions = load_institutions(&inst_bytes[..]).map_err(|e| {
            PipelineError::Data(format!("{}: {e}", self.layout.institutions().display()))
        })?;
        let record_bytes = read_input(&self.layout.records())?;
        // Stored records are canonical and pre-validated, so strict mode
        // only trips on artifacts damaged after the fact.
        let (store, _) = ingest(
            &record_bytes[..],
            &TsvSchema::canonical(),
            IngestMode::Strict,
            Arc::new(institutions),
        )
        .map_err(|e| PipelineError::Data(format!("{}: {e}", self.layout.records().display())))?;
        Ok(store)
    }

    fn load_ontology(&mut self) -> Result<(TopicOntology, String), PipelineError> {
        let bytes = read_input(&self.config.ontology)?;
        let digest = sha256_hex(&bytes);
        self.inputs.insert("ontology".to_string(), digest.clone());
        let ontology = load_ontology(&bytes[..]).map_err(|e| {
            PipelineError::Data(format!("ontology {}: {e}", self.config.ontology.display()))
        })?;
        Ok((ontology, digest))
    }

    fn load_stopwords(&mut self) -> Result<Stopwords, PipelineError> {
        let stopwords = match &self.config.stopwords {
            None => Stopwords::builtin(),
            Some(path) => Stopwords::from_path(path).map_err(|e| {
                PipelineError::Data(format!("stopword list {}: {e}", path.display()))
            })?,
        };
        self.inputs
            .insert("stopwords".to_string(), stopwords.version().to_string());
        Ok(stopwords)
    }

    fn resolve_ids(
        &self,
        store: &CorpusStore,
        path: &Path,
    ) -> Result<Vec<PaperRecord>, PipelineError> {
        let bytes = read_input(path)?;
        let text = String::from_utf8_lossy(&bytes);
        let mut records = Vec::new();
        for id in text.lines().filter(|l| !l.is_empty()) {
            let Some(record) = store.get(id) else {
                return Err(PipelineError::Data(format!(
                    "{}: paper {id:?} is not in the store; re-run ingest and extract",
                    path.display()
                )));
            };
            records.push(record.clone());
        }
        Ok(records)
    }

    fn load_corpus(
        &self,
        store: &CorpusStore,
        name: &str,
        corpus_manifest: &BTreeMap<String, String>,
    ) -> Result<VenueCorpus, PipelineError> {
        let mut parts = Vec::with_capacity(3);
        for partition in Partition::ALL {
            let path = self.layout.ids(name, partition);
            require_artifact(&path, "extract")?;
            parts.push(self.resolve_ids(store, &path)?);
        }
        let cited = parts.pop().expect("three partitions");
        let citing = parts.pop().expect("three partitions");
        let accepted = parts.pop().expect("three partitions");

        let manifest_path = self.layout.corpus_manifest(name);
        let dangling = corpus_manifest
            .get("dangling_references")
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| {
                PipelineError::Data(format!(
                    "{}: missing or invalid dangling_references",
                    manifest_path.display()
                ))
            })?;
        let venue_ids: Vec<String> = corpus_manifest
            .get("venue_ids")
            .map(|v| v.split(';').map(str::to_string).collect())
            .ok_or_else(|| {
                PipelineError::Data(format!(
                    "{}: missing venue_ids",
                    manifest_path.display()
                ))
            })?;

        Ok(VenueCorpus::from_parts(
            name.to_string(),
            venue_ids,
            accepted,
            citing,
            cited,
            dangling,
            Arc::clone(store.institutions()),
        ))
    }

    fn note_input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), sha256_hex(bytes));
    }

    // ----- run manifest ----------------------------------------------------

    fn write_run_manifest(&mut self, command: Command) -> Result<(), PipelineError> {
        let config_text = self.config.canonical_text();
        let mut out = String::new();
        let _ = writeln!(out, "command = {command}");
        let _ = writeln!(out, "config_sha256 = {}", sha256_hex(config_text.as_bytes()));
        let _ = writeln!(out);
        let _ = writeln!(out, "[config]");
        out.push_str(&config_text);
        let _ = writeln!(out);
        let _ = writeln!(out, "[inputs]");
        for (name, digest) in &self.inputs {
            let _ = writeln!(out, "{name} = {digest}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "[counters]");
        for (key, value) in self.gather_counters()? {
            let _ = writeln!(out, "{key} = {value}");
        }
        write_file(&self.layout.run_manifest(), out.as_bytes())?;
        self.summary
            .lines
            .push(format!("manifest: {}", self.layout.run_manifest().display()));
        Ok(())
    }

    /// Collects counters from whatever stage manifests exist on disk, so a
    /// single-stage run still records everything known about the output
    /// directory.
    fn gather_counters(&self) -> Result<BTreeMap<String, String>, PipelineError> {
        let mut counters = BTreeMap::new();
        if self.layout.store_manifest().is_file() {
            for (k, v) in read_kv(&self.layout.store_manifest())? {
                counters.insert(format!("store.{k}"), v);
            }
        }
        for (name, _) in self.config.selected_venues() {
            if self.layout.corpus_manifest(name).is_file() {
                for (k, v) in read_kv(&self.layout.corpus_manifest(name))? {
                    counters.insert(format!("venue.{name}.{k}"), v);
                }
            }
            if self.layout.classify_manifest(name).is_file() {
                for (k, v) in read_kv(&self.layout.classify_manifest(name))? {
                    counters.insert(format!("venue.{name}.{k}"), v);
                }
            }
        }
        Ok(counters)
    }
}

// ----- small helpers -------------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path)
        .map_err(|e| PipelineError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes)
        .map_err(|e| PipelineError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Recreates `dir` empty, discarding stale artifacts from earlier runs.
fn clear_dir(dir: &Path) -> Result<(), PipelineError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir)
            .map_err(|e| PipelineError::Data(format!("cannot clear {}: {e}", dir.display())))?;
    }
    std::fs::create_dir_all(dir)
        .map_err(|e| PipelineError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn require_artifact(path: &Path, produced_by: &str) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::Dependency(format!(
            "missing artifact {}: run the {produced_by} stage first",
            path.display()
        )))
    }
}

/// Parses a stage manifest (`key = value` lines, `[section]` lines ignored).
fn read_kv(path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let bytes = read_input(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(PipelineError::Data(format!(
                "{} line {}: expected key = value",
                path.display(),
                idx + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn store_manifest_text(stats: &IngestStats, inputs: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "authorship_rows = {}", stats.authorship_rows);
    let _ = writeln!(out, "duplicate_ids = {}", stats.duplicate_ids);
    let _ = writeln!(
        out,
        "duplicate_references_dropped = {}",
        stats.duplicate_references_dropped
    );
    let _ = writeln!(out, "records_kept = {}", stats.records_kept);
    let _ = writeln!(out, "rows_read = {}", stats.rows_read);
    let _ = writeln!(out, "rows_skipped = {}", stats.rows_skipped);
    let _ = writeln!(
        out,
        "self_references_dropped = {}",
        stats.self_references_dropped
    );
    for (name, digest) in inputs {
        let _ = writeln!(out, "source.{name}_sha256 = {digest}");
    }
    out
}

fn corpus_manifest_text(corpus: &VenueCorpus) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accepted = {}", corpus.accepted.len());
    let _ = writeln!(out, "cited = {}", corpus.cited.len());
    let _ = writeln!(out, "citing = {}", corpus.citing.len());
    let _ = writeln!(out, "dangling_references = {}", corpus.dangling_references);
    let _ = writeln!(out, "venue_ids = {}", corpus.venue_ids.join(";"));
    out
}

fn classify_manifest_text(
    annotated: u64,
    empty: u64,
    ontology_digest: &str,
    stopword_version: &str,
    threshold: f64,
    topics: u64,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "annotated_papers = {annotated}");
    let _ = writeln!(out, "empty_annotations = {empty}");
    let _ = writeln!(out, "ontology_sha256 = {ontology_digest}");
    let _ = writeln!(out, "ontology_topics = {topics}");
    let _ = writeln!(out, "stopword_version = {stopword_version}");
    let _ = writeln!(out, "threshold = {threshold}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    /// Two-venue fixture: V1/V2 form the logical venue MAIN, X is external.
    fn write_fixture(dir: &Path) -> PathBuf {
        let dump = "\
p1\t\tbrain computer interfaces for text entry\t\t2010\tV1\talice,i1;bob,i2\tp2;c1;ghost
p2\t\tuser studies of haptic feedback\t\t2011\tV2\tcarol,i2\tc1
c1\t\tfoundations of haptic rendering\t\t2001\tX\tdan,i3\t
x1\t\tsurvey of brain computer interfaces\t\t2012\tX\terin,i3\tp1
bad\t\tmalformed year row\t\tnot-a-year\tX\t\t
x2\t\thaptic feedback in games\t\t2013\tX\tfrank,\tp2;p1
";
        let institutions = "\
i1\tUniv One\tUS
i2\tUniv Two\tDE
i3\tUniv Three\tBR
";
        let ontology = "\
brain computer interfaces\tsuperTopicOf\ttext entry
haptic feedback\trelatedEquivalent\thaptic rendering
haptic feedback\tprimaryLabel\thaptic feedback
";
        let config = "\
dump = dump.tsv
institutions = institutions.tsv
ontology = ontology.tsv
out = out
threshold = 0.94
start_year = 2010
end_year = 2013
trend_thresholds = 2;1
venue.MAIN = V1;V2
";
        fs::write(dir.join("dump.tsv"), dump).unwrap();
        fs::write(dir.join("institutions.tsv"), institutions).unwrap();
        fs::write(dir.join("ontology.tsv"), ontology).unwrap();
        let config_path = dir.join("run.conf");
        fs::write(&config_path, config).unwrap();
        config_path
    }

    fn load(config_path: &Path) -> PipelineConfig {
        PipelineConfig::load(config_path, &ConfigOverrides::default()).unwrap()
    }

    #[test]
    fn all_produces_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let config = load(&write_fixture(dir.path()));
        run(Command::All, &config).unwrap();

        let out = dir.path().join("out");
        for file in ["records.tsv", "institutions.tsv", "schema.txt", "store_manifest.txt"] {
            assert!(out.join("store").join(file).is_file(), "missing store/{file}");
        }
        let venue = out.join("venues/MAIN");
        for file in [
            "accepted.ids",
            "citing.ids",
            "cited.ids",
            "corpus_manifest.txt",
            "annotations.tsv",
            "classify_manifest.txt",
        ] {
            assert!(venue.join(file).is_file(), "missing venues/MAIN/{file}");
        }
        for file in REPORT_FILES.iter().chain(HEATMAP_FILES.iter()) {
            assert!(
                venue.join("reports").join(file).is_file(),
                "missing report {file}"
            );
        }
        assert!(out.join("run_manifest.txt").is_file());

        let accepted = fs::read_to_string(venue.join("accepted.ids")).unwrap();
        assert_eq!(accepted, "p1\np2\n");
        // p1 cites accepted p2, so it lands in the citing partition too.
        let citing = fs::read_to_string(venue.join("citing.ids")).unwrap();
        assert_eq!(citing, "p1\nx1\nx2\n");
        let cited = fs::read_to_string(venue.join("cited.ids")).unwrap();
        assert_eq!(cited, "c1\np2\n");

        let manifest = fs::read_to_string(out.join("run_manifest.txt")).unwrap();
        assert!(manifest.contains("command = all"));
        assert!(manifest.contains("store.records_kept = 5"));
        assert!(manifest.contains("store.rows_skipped = 1"));
        assert!(manifest.contains("venue.MAIN.accepted = 2"));
        assert!(manifest.contains("venue.MAIN.dangling_references = 1"));
        assert!(manifest.contains("venue.MAIN.annotated_papers = 2"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = load(&write_fixture(dir.path()));
        run(Command::All, &config).unwrap();

        let out = dir.path().join("out");
        let mut first: BTreeMap<PathBuf, Vec<u8>> = BTreeMap::new();
        collect_files(&out, &mut first);
        assert!(first.len() > 20, "fixture should produce many artifacts");

        run(Command::All, &config).unwrap();
        let mut second: BTreeMap<PathBuf, Vec<u8>> = BTreeMap::new();
        collect_files(&out, &mut second);
        assert_eq!(first, second);
    }

    fn collect_files(dir: &Path, into: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                collect_files(&path, into);
            } else {
                into.insert(path.clone(), fs::read(&path).unwrap());
            }
        }
    }

    #[test]
    fn stages_gate_on_their_dependencies() {
        let dir = tempfile::tempdir().unwrap();
        let config = load(&write_fixture(dir.path()));

        let err = run(Command::Extract, &config).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("records.tsv"));
        assert!(err.to_string().contains("ingest"));

        run(Command::Ingest, &config).unwrap();
        let err = run(Command::Report, &config).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("extract"));

        run(Command::Extract, &config).unwrap();
        let err = run(Command::Report, &config).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("annotations.tsv"));

        run(Command::Classify, &config).unwrap();
        run(Command::Report, &config).unwrap();
    }

    #[test]
    fn strict_mode_rejects_the_malformed_row() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = write_fixture(dir.path());
        let overrides = ConfigOverrides { strict: true, ..ConfigOverrides::default() };
        let config = PipelineConfig::load(&config_path, &overrides).unwrap();
        let err = run(Command::Ingest, &config).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("line 5"), "{err}");
    }

    #[test]
    fn missing_input_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = write_fixture(dir.path());
        fs::remove_file(dir.path().join("dump.tsv")).unwrap();
        let config = load(&config_path);
        let err = run(Command::Ingest, &config).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("dump.tsv"));
    }

    #[test]
    fn unknown_venue_in_store_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = write_fixture(dir.path());
        let text = fs::read_to_string(&config_path).unwrap();
        fs::write(
            &config_path,
            format!("{text}venue.GHOST = NOWHERE\n"),
        )
        .unwrap();
        let config = load(&config_path);
        run(Command::Ingest, &config).unwrap();
        let err = run(Command::Extract, &config).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("GHOST"));
    }

    #[test]
    fn ontology_swap_after_classify_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = write_fixture(dir.path());
        let config = load(&config_path);
        run(Command::Ingest, &config).unwrap();
        run(Command::Extract, &config).unwrap();
        run(Command::Classify, &config).unwrap();
        fs::write(
            dir.path().join("ontology.tsv"),
            "something else\tsuperTopicOf\tentirely\n",
        )
        .unwrap();
        let err = run(Command::Report, &config).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("different"), "{err}");
    }

    #[test]
    fn venue_filter_limits_stage_work() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = write_fixture(dir.path());
        let text = fs::read_to_string(&config_path).unwrap();
        fs::write(&config_path, format!("{text}venue.SIDE = X\n")).unwrap();

        let overrides = ConfigOverrides {
            venue: Some("MAIN".into()),
            ..ConfigOverrides::default()
        };
        let config = PipelineConfig::load(&config_path, &overrides).unwrap();
        run(Command::All, &config).unwrap();
        let out = dir.path().join("out");
        assert!(out.join("venues/MAIN/accepted.ids").is_file());
        assert!(!out.join("venues/SIDE").exists());
    }

    #[test]
    fn annotations_contain_expected_topics() {
        let dir = tempfile::tempdir().unwrap();
        let config = load(&write_fixture(dir.path()));
        run(Command::All, &config).unwrap();
        let text = fs::read_to_string(
            dir.path().join("out/venues/MAIN/annotations.tsv"),
        )
        .unwrap();
        // p1's title matches both the super topic and its child label;
        // p2 matches the haptic equivalence class canonicalized to
        // "haptic feedback".
        assert!(text.contains("p1\tbrain computer interfaces;text entry\t"));
        assert!(text.contains("p2\thaptic feedback\t"));
    }

    #[test]
    fn report_csvs_match_hand_computed_fixture_values() {
        let dir = tempfile::tempdir().unwrap();
        let config = load(&write_fixture(dir.path()));
        run(Command::All, &config).unwrap();
        let reports = dir.path().join("out/venues/MAIN/reports");
        let read = |name: &str| fs::read_to_string(reports.join(name)).unwrap();

        assert_eq!(read("accepted_by_year.csv"), "year,papers\n2010,1\n2011,1\n");
        // p1 cites p2 (venue V2) and c1 (venue X); p2 cites c1 (X); ghost
        // is dangling and counts nowhere.
        assert_eq!(
            read("venues_cited.csv"),
            "venue_id,references\nX,2\nV2,1\n"
        );
        assert_eq!(
            read("venues_citing.csv"),
            "venue_id,citing_papers\nX,2\nV1,1\n"
        );
        // Accepted contributions: alice@i1 (US), bob@i2 (DE), carol@i2 (DE).
        let country = read("country_distribution.csv");
        assert!(country.contains("accepted,DE,2\n"));
        assert!(country.contains("accepted,US,1\n"));
        // x2's second authorship has no institution.
        assert!(country.contains("citing,unknown,1\n"));
    }
}
