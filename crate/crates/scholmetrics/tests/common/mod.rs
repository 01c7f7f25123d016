//! Shared helpers for integration tests: a seeded synthetic-corpus
//! generator and the bundled 200-paper fixture definition.
//!
//! Everything here is deterministic in the seed, so fixtures can be
//! regenerated byte-for-byte and corpora re-derived inside tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scholmetrics::corpus::{
    write_records_tsv, Authorship, CorpusStore, Institution, InstitutionTable, PaperRecord,
};

pub const COUNTRIES: [&str; 8] = ["US", "DE", "GB", "BR", "JP", "FR", "CN", "IN"];

const FILLERS: [&str; 12] = [
    "study", "analysis", "evaluation", "framework", "survey", "method",
    "design", "effects", "model", "field", "approach", "practice",
];

#[derive(Debug, Clone)]
pub struct GenParams {
    pub seed: u64,
    pub n_papers: usize,
    pub n_institutions: usize,
    pub n_venues: usize,
    pub years: (i32, i32),
    pub p_missing_year: f64,
    pub p_empty_venue: f64,
    pub p_missing_institution: f64,
    pub p_no_authors: f64,
    pub max_authors: usize,
    pub max_refs: usize,
    pub p_ghost_ref: f64,
    /// Phrases woven into titles so the classifier finds matches. Empty
    /// means filler-only titles.
    pub vocab: Vec<String>,
}

impl GenParams {
    /// Small corpus with parameters themselves sampled from the seed, for
    /// property suites that want varied shapes.
    pub fn sampled(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        GenParams {
            seed,
            n_papers: rng.random_range(20..=80),
            n_institutions: rng.random_range(4..=15),
            n_venues: rng.random_range(2..=6),
            years: (2005, 2020),
            p_missing_year: 0.1,
            p_empty_venue: 0.05,
            p_missing_institution: 0.2,
            p_no_authors: 0.05,
            max_authors: 5,
            max_refs: 6,
            p_ghost_ref: 0.15,
            vocab: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub records: Vec<PaperRecord>,
    pub institutions: Vec<Institution>,
}

impl Synthetic {
    pub fn dump_tsv(&self) -> String {
        let mut buf = Vec::new();
        write_records_tsv(&mut buf, &self.records).expect("memory write");
        String::from_utf8(buf).expect("records are valid UTF-8")
    }

    pub fn institutions_tsv(&self) -> String {
        let mut out = String::new();
        for inst in &self.institutions {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                inst.institution_id, inst.name, inst.country_code
            ));
        }
        out
    }

    pub fn store(&self) -> CorpusStore {
        let table = InstitutionTable::from_institutions(self.institutions.clone());
        CorpusStore::from_records(self.records.clone(), Arc::new(table))
            .expect("generated records satisfy store invariants")
    }

    /// Distinct venue ids actually present, sorted, excluding the empty id.
    pub fn venue_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .iter()
            .map(|r| r.venue_id.clone())
            .filter(|v| !v.is_empty())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

pub fn generate(params: &GenParams) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let institutions: Vec<Institution> = (0..params.n_institutions)
        .map(|i| Institution {
            institution_id: format!("inst{i:03}"),
            name: format!("Institute {i}"),
            country_code: scholmetrics::corpus::CountryCode::parse(
                COUNTRIES[rng.random_range(0..COUNTRIES.len())],
            )
            .expect("pool codes are valid"),
        })
        .collect();

    let paper_id = |i: usize| format!("p{i:05}");
    let mut records = Vec::with_capacity(params.n_papers);
    for i in 0..params.n_papers {
        let year = if rng.random_bool(params.p_missing_year) {
            None
        } else {
            Some(rng.random_range(params.years.0..=params.years.1))
        };
        let venue_id = if rng.random_bool(params.p_empty_venue) {
            String::new()
        } else {
            format!("V{}", rng.random_range(1..=params.n_venues))
        };

        let n_authors = if rng.random_bool(params.p_no_authors) {
            0
        } else {
            rng.random_range(1..=params.max_authors)
        };
        let authorships: Vec<Authorship> = (0..n_authors)
            .map(|j| Authorship {
                author_id: format!("a{i}_{j}"),
                institution_id: if rng.random_bool(params.p_missing_institution) {
                    None
                } else {
                    Some(format!("inst{:03}", rng.random_range(0..params.n_institutions)))
                },
                position: j,
            })
            .collect();

        let mut references: Vec<String> = Vec::new();
        for _ in 0..rng.random_range(0..=params.max_refs) {
            let target = if rng.random_bool(params.p_ghost_ref) {
                format!("ghost{}", rng.random_range(0..50))
            } else {
                paper_id(rng.random_range(0..params.n_papers))
            };
            if target != paper_id(i) && !references.contains(&target) {
                references.push(target);
            }
        }

        let title = make_title(&mut rng, &params.vocab, i);
        let abstract_text = if rng.random_bool(0.7) {
            Some(make_title(&mut rng, &params.vocab, i + params.n_papers))
        } else {
            None
        };
        records.push(PaperRecord {
            paper_id: paper_id(i),
            doi: if rng.random_bool(0.5) {
                Some(format!("10.1000/p{i:05}"))
            } else {
                None
            },
            title,
            abstract_text,
            year,
            venue_id,
            authorships,
            references,
        });
    }

    Synthetic { records, institutions }
}

fn make_title(rng: &mut ChaCha8Rng, vocab: &[String], salt: usize) -> String {
    let mut parts: Vec<String> = Vec::new();
    let phrases = if vocab.is_empty() { 0 } else { rng.random_range(1..=2) };
    for _ in 0..phrases {
        parts.push(vocab[rng.random_range(0..vocab.len())].clone());
    }
    for _ in 0..rng.random_range(2..=4) {
        parts.push(FILLERS[rng.random_range(0..FILLERS.len())].to_string());
    }
    // The salt keeps titles distinct without consuming extra randomness.
    parts.push(format!("no{salt}"));
    parts.join(" ")
}

// ----- the bundled 200-paper fixture ----------------------------------------

pub const FIXTURE200_SEED: u64 = 20090;

pub fn fixture200_vocab() -> Vec<String> {
    [
        "machine learning",
        "deep learning",
        "neural networks",
        "text entry",
        "mobile text entry",
        "haptic feedback",
        "haptic rendering",
        "virtual reality",
        "mixed reality",
        "augmented reality",
        "user experience",
        "usability evaluation",
        "eye tracking",
        "gaze interaction",
        "speech recognition",
        "gesture recognition",
        "accessibility",
        "assistive technology",
        "privacy",
        "social computing",
        "crowdsourcing",
        "visualization",
        "information retrieval",
        "recommender systems",
        "gamification",
    ]
    .into_iter()
    .map(str::to_string)
    .collect()
}

pub fn fixture200_ontology() -> String {
    let relations = "\
machine learning\tsuperTopicOf\tdeep learning
deep learning\tsuperTopicOf\tneural networks
text entry\tsuperTopicOf\tmobile text entry
user experience\tsuperTopicOf\tusability evaluation
accessibility\tsuperTopicOf\tassistive technology
virtual reality\trelatedEquivalent\tmixed reality
virtual reality\tprimaryLabel\tvirtual reality
haptic feedback\trelatedEquivalent\thaptic rendering
haptic feedback\tprimaryLabel\thaptic feedback
eye tracking\trelatedEquivalent\tgaze interaction
eye tracking\tprimaryLabel\teye tracking
";
    let mentioned = [
        "machine learning",
        "deep learning",
        "neural networks",
        "text entry",
        "mobile text entry",
        "user experience",
        "usability evaluation",
        "accessibility",
        "assistive technology",
        "virtual reality",
        "mixed reality",
        "haptic feedback",
        "haptic rendering",
        "eye tracking",
        "gaze interaction",
    ];
    let mut out = relations.to_string();
    for label in fixture200_vocab() {
        if !mentioned.contains(&label.as_str()) {
            out.push_str(&format!("{label}\tprimaryLabel\t{label}\n"));
        }
    }
    out.push_str("augmented reality\tsuperTopicOf\tmixed reality\n");
    out
}

pub fn fixture200_config() -> String {
    "\
# 200-paper synthetic corpus, two logical venues.
dump = dump.tsv
institutions = institutions.tsv
ontology = ontology.tsv
out = out
mode = lenient
threshold = 0.94
start_year = 2009
end_year = 2018
trend_thresholds = 8;4;2
top_k = 10
solo_min_papers = 2
venue.MAIN = V1;V2
venue.OTHER = V3
"
    .to_string()
}

pub fn fixture200_params() -> GenParams {
    GenParams {
        seed: FIXTURE200_SEED,
        n_papers: 200,
        n_institutions: 12,
        n_venues: 5,
        years: (2009, 2018),
        p_missing_year: 0.05,
        p_empty_venue: 0.04,
        p_missing_institution: 0.15,
        p_no_authors: 0.03,
        max_authors: 4,
        max_refs: 6,
        p_ghost_ref: 0.1,
        vocab: fixture200_vocab(),
    }
}

/// Dump text for the bundled fixture: 200 valid rows plus two malformed
/// ones (bad year, bad country-free row is still fine, so both use years)
/// that lenient ingest must skip and strict ingest must reject.
pub fn fixture200_dump() -> String {
    let mut dump = generate(&fixture200_params()).dump_tsv();
    dump.push_str("bad1\t\tmalformed year row\t\tnot-a-year\tV1\t\t\n");
    dump.push_str("bad2\t\tout of range year\t\t1200\tV2\t\t\n");
    dump
}

pub fn fixture200_institutions() -> String {
    generate(&fixture200_params()).institutions_tsv()
}

/// Path of the committed fixture directory.
pub fn fixture200_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fixture200")
}
