//! Topic assignment by n-gram/Levenshtein matching against ontology labels.
//!
//! The procedure per paper: lowercase the text, drop stopwords, split into
//! token runs at stopword and punctuation boundaries, enumerate 1..=3-grams
//! within each run, and match every n-gram against every ontology label at a
//! similarity threshold. Matched topics are canonicalized, then enriched
//! with their transitive super-topics.

pub mod levenshtein;
pub mod stopwords;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::PaperRecord;
use crate::ontology::TopicOntology;
pub use levenshtein::{levenshtein_distance, levenshtein_similarity};
pub use stopwords::Stopwords;

/// Largest n-gram size considered during matching.
pub const MAX_NGRAM: usize = 3;

/// Default similarity threshold for label matching.
pub const DEFAULT_THRESHOLD: f64 = 0.94;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("similarity threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

/// Per-paper classification result.
///
/// `all_topics` is always `canonicalize(direct ∪ enriched)`; construct via
/// [`TopicAnnotation::assemble`] to keep that invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAnnotation {
    pub paper_id: String,
    pub direct_topics: BTreeSet<String>,
    pub enriched_topics: BTreeSet<String>,
    pub all_topics: BTreeSet<String>,
}

impl TopicAnnotation {
    pub fn assemble(
        paper_id: String,
        direct_topics: BTreeSet<String>,
        enriched_topics: BTreeSet<String>,
        ontology: &TopicOntology,
    ) -> Self {
        let union: BTreeSet<String> = direct_topics.union(&enriched_topics).cloned().collect();
        let all_topics = ontology.canonicalize(&union);
        TopicAnnotation {
            paper_id,
            direct_topics,
            enriched_topics,
            all_topics,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.all_topics.is_empty()
    }
}

/// Split lowercased text into token runs.
///
/// Tokens are maximal alphanumeric sequences; whitespace and `-` separate
/// tokens within a run; any other non-alphanumeric character ends the run,
/// as does a stopword (which is itself dropped).
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<Vec<String>> {
    let lowered = text.to_lowercase();
    let mut runs: Vec<Vec<String>> = Vec::new();
    let mut run: Vec<String> = Vec::new();
    let mut token = String::new();

    for ch in lowered.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() {
            token.push(ch);
            continue;
        }
        if !token.is_empty() {
            if stopwords.contains(&token) {
                if !run.is_empty() {
                    runs.push(std::mem::take(&mut run));
                }
                token.clear();
            } else {
                run.push(std::mem::take(&mut token));
            }
        }
        let run_continues = ch.is_whitespace() || ch == '-';
        if !run_continues && !run.is_empty() {
            runs.push(std::mem::take(&mut run));
        }
    }
    if !run.is_empty() {
        runs.push(run);
    }
    runs
}

/// All 1..=`max_n`-grams within each run, space-joined, never bridging runs.
/// Per run, shorter n-grams come first, positions ascend; duplicates kept.
pub fn ngrams(runs: &[Vec<String>], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for run in runs {
        for n in 1..=max_n {
            if n > run.len() {
                break;
            }
            for window in run.windows(n) {
                out.push(window.join(" "));
            }
        }
    }
    out
}

struct LabelEntry {
    chars: Vec<char>,
    topic_id: String,
}

/// Reusable matcher: owns the ontology and a label index bucketed by label
/// length so most labels are skipped without touching the edit-distance DP.
pub struct Classifier {
    ontology: Arc<TopicOntology>,
    stopwords: Stopwords,
    threshold: f64,
    by_len: BTreeMap<usize, Vec<LabelEntry>>,
    exact: HashMap<String, String>,
}

impl Classifier {
    pub fn new(
        ontology: Arc<TopicOntology>,
        stopwords: Stopwords,
        threshold: f64,
    ) -> Result<Self, ClassifyError> {
        if !threshold.is_finite() || threshold <= 0.0 || threshold > 1.0 {
            return Err(ClassifyError::InvalidThreshold(threshold));
        }
        let mut by_len: BTreeMap<usize, Vec<LabelEntry>> = BTreeMap::new();
        let mut exact: HashMap<String, String> = HashMap::new();
        for (label, topic_id) in ontology.labels() {
            let chars: Vec<char> = label.chars().collect();
            by_len.entry(chars.len()).or_default().push(LabelEntry {
                chars,
                topic_id: topic_id.to_string(),
            });
            exact.insert(label.to_string(), topic_id.to_string());
        }
        Ok(Classifier {
            ontology,
            stopwords,
            threshold,
            by_len,
            exact,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn ontology(&self) -> &Arc<TopicOntology> {
        &self.ontology
    }

    pub fn classify(&self, paper: &PaperRecord) -> TopicAnnotation {
        let mut text = paper.title.clone();
        if let Some(abs) = &paper.abstract_text {
            text.push(' ');
            text.push_str(abs);
        }
        self.classify_text(&paper.paper_id, &text)
    }

    /// Classify raw text. The matching decision for every (n-gram, label)
    /// pair is exactly `levenshtein_similarity(gram, label) >= threshold`;
    /// the length prefilter and the banded DP only skip pairs that cannot
    /// reach the threshold.
    pub fn classify_text(&self, paper_id: &str, text: &str) -> TopicAnnotation {
        let runs = tokenize(text, &self.stopwords);
        let grams = ngrams(&runs, MAX_NGRAM);
        let unique: BTreeSet<&str> = grams.iter().map(String::as_str).collect();

        let mut matched: BTreeSet<String> = BTreeSet::new();
        for gram in unique {
            self.match_gram(gram, &mut matched);
        }

        let direct = self.ontology.canonicalize(&matched);
        let enriched = self
            .ontology
            .super_topic_closure(&direct)
            .expect("matched topics come from the ontology's own label index");
        TopicAnnotation::assemble(paper_id.to_string(), direct, enriched, &self.ontology)
    }

    /// Classify a batch in parallel. Output is keyed, so scheduling order
    /// never shows.
    pub fn classify_corpus(&self, papers: &[PaperRecord]) -> BTreeMap<String, TopicAnnotation> {
        papers
            .par_iter()
            .map(|p| (p.paper_id.clone(), self.classify(p)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    fn match_gram(&self, gram: &str, hits: &mut BTreeSet<String>) {
        if gram.is_empty() {
            return;
        }
        if self.threshold >= 1.0 {
            if let Some(id) = self.exact.get(gram) {
                hits.insert(id.clone());
            }
            return;
        }
        let g: Vec<char> = gram.chars().collect();
        let glen = g.len();
        // Label lengths outside [t*glen, glen/t] cannot pass the band test;
        // widen by 1 so float rounding never drops a boundary length.
        let lo = ((self.threshold * glen as f64).floor() as usize)
            .saturating_sub(1)
            .max(1);
        let hi = (glen as f64 / self.threshold).ceil() as usize + 1;
        for entries in self.by_len.range(lo..=hi).map(|(_, v)| v) {
            for entry in entries {
                let llen = entry.chars.len();
                let maxlen = glen.max(llen);
                let band = 1.0 - glen.abs_diff(llen) as f64 / maxlen as f64;
                if band < self.threshold {
                    continue;
                }
                // Cap overestimates the admissible distance by design; the
                // exact similarity comparison below makes the call.
                let cap = ((1.0 - self.threshold) * maxlen as f64).floor() as usize + 1;
                if let Some(d) = levenshtein::distance_within(&g, &entry.chars, cap) {
                    let sim = 1.0 - d as f64 / maxlen as f64;
                    if sim >= self.threshold {
                        hits.insert(entry.topic_id.clone());
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::load_ontology;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn stop_the_of() -> Stopwords {
        Stopwords::from_list("test", "the\nof\n")
    }

    fn runs(items: &[&[&str]]) -> Vec<Vec<String>> {
        items
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn tokenize_drops_stopwords_and_splits_runs() {
        assert_eq!(
            tokenize("The Evolution of Topics", &stop_the_of()),
            runs(&[&["evolution"], &["topics"]])
        );
    }

    #[test]
    fn tokenize_empty_text_is_empty() {
        assert_eq!(tokenize("", &stop_the_of()), runs(&[]));
    }

    #[test]
    fn tokenize_keeps_contiguous_content_words_together() {
        assert_eq!(
            tokenize("neural networks", &stop_the_of()),
            runs(&[&["neural", "networks"]])
        );
    }

    #[test]
    fn hyphen_separates_tokens_within_a_run_but_punctuation_breaks() {
        assert_eq!(
            tokenize("The design of user-centred systems, of course", &stop_the_of()),
            runs(&[&["design"], &["user", "centred", "systems"], &["course"]])
        );
    }

    #[test]
    fn ngrams_enumerates_within_a_run() {
        assert_eq!(
            ngrams(&runs(&[&["a", "b", "c"]]), 3),
            vec!["a", "b", "c", "a b", "b c", "a b c"]
        );
    }

    #[test]
    fn ngrams_never_bridge_runs() {
        assert_eq!(ngrams(&runs(&[&["a"], &["b"]]), 3), vec!["a", "b"]);
    }

    #[test]
    fn ngrams_of_nothing_is_nothing() {
        assert_eq!(ngrams(&[], 3), Vec::<String>::new());
    }

    fn chain_ontology() -> Arc<TopicOntology> {
        Arc::new(
            load_ontology(Cursor::new(
                "machine learning\tsuperTopicOf\tneural networks\n\
                 artificial intelligence\tsuperTopicOf\tmachine learning\n",
            ))
            .unwrap(),
        )
    }

    fn paper(id: &str, title: &str) -> PaperRecord {
        PaperRecord {
            paper_id: id.to_string(),
            doi: None,
            title: title.to_string(),
            abstract_text: None,
            year: Some(2015),
            venue_id: "v1".to_string(),
            authorships: Vec::new(),
            references: Vec::new(),
        }
    }

    #[test]
    fn classify_infers_super_topics() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let ann = c.classify(&paper("p1", "Deep Neural Networks"));
        let direct: Vec<&str> = ann.direct_topics.iter().map(String::as_str).collect();
        assert_eq!(direct, vec!["neural networks"]);
        let enriched: Vec<&str> = ann.enriched_topics.iter().map(String::as_str).collect();
        assert_eq!(enriched, vec!["artificial intelligence", "machine learning"]);
        for t in ["neural networks", "machine learning", "artificial intelligence"] {
            assert!(ann.all_topics.contains(t), "missing {t}");
        }
    }

    #[test]
    fn classify_with_no_label_overlap_is_empty() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let ann = c.classify(&paper("p1", "Gardening for Beginners"));
        assert!(ann.is_empty());
        assert!(ann.direct_topics.is_empty());
        assert!(ann.enriched_topics.is_empty());
    }

    #[test]
    fn near_miss_below_threshold_does_not_match() {
        // similarity("machine learnin", "machine learning") = 0.9375 < 0.94.
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let ann = c.classify(&paper("p1", "machine learnin"));
        assert!(ann.all_topics.is_empty());

        // The threshold comparison is inclusive.
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.9375).unwrap();
        let ann = c.classify(&paper("p1", "machine learnin"));
        assert!(ann.direct_topics.contains("machine learning"));
    }

    #[test]
    fn classification_is_case_insensitive() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let lower = c.classify(&paper("p1", "deep neural networks"));
        let upper = c.classify(&paper("p1", "DEEP NEURAL NETWORKS"));
        assert_eq!(lower, upper);
    }

    #[test]
    fn abstract_text_participates_in_matching() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let mut p = paper("p1", "An Unrelated Title");
        p.abstract_text = Some("We study neural networks at scale.".to_string());
        assert!(c.classify(&p).direct_topics.contains("neural networks"));
    }

    #[test]
    fn direct_topics_are_canonicalized() {
        let ont = Arc::new(
            load_ontology(Cursor::new(
                "ontology matching\trelatedEquivalent\tontology mapping\n\
                 ontology mapping\tprimaryLabel\tontology matching\n",
            ))
            .unwrap(),
        );
        let c = Classifier::new(ont, Stopwords::builtin(), 0.94).unwrap();
        let ann = c.classify(&paper("p1", "Advances in Ontology Mapping"));
        let direct: Vec<&str> = ann.direct_topics.iter().map(String::as_str).collect();
        assert_eq!(direct, vec!["ontology matching"]);
    }

    #[test]
    fn exact_threshold_uses_exact_lookup() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 1.0).unwrap();
        assert!(c
            .classify(&paper("p1", "neural networks"))
            .direct_topics
            .contains("neural networks"));
        assert!(c.classify(&paper("p2", "neural network")).all_topics.is_empty());
    }

    #[test]
    fn invalid_thresholds_are_rejected() {
        for t in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                Classifier::new(chain_ontology(), Stopwords::builtin(), t),
                Err(ClassifyError::InvalidThreshold(_))
            ));
        }
    }

    #[test]
    fn classify_corpus_covers_every_paper_and_is_deterministic() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let papers = vec![
            paper("p1", "Neural Networks Today"),
            paper("p2", "Machine Learning in Practice"),
            paper("p3", "Completely Unrelated"),
        ];
        let first = c.classify_corpus(&papers);
        let second = c.classify_corpus(&papers);
        assert_eq!(first.len(), 3);
        assert_eq!(first, second);
        assert!(first["p2"].direct_topics.contains("machine learning"));
        assert!(first["p3"].all_topics.is_empty());
    }

    #[test]
    fn enriched_topics_are_reachable_from_direct() {
        let c = Classifier::new(chain_ontology(), Stopwords::builtin(), 0.94).unwrap();
        let ann = c.classify(&paper("p1", "neural networks and machine learning"));
        let closure = c
            .ontology()
            .super_topic_closure(&ann.direct_topics)
            .unwrap();
        assert_eq!(ann.enriched_topics, closure);
    }

    proptest! {
        // Raising the threshold never adds a direct topic.
        #[test]
        fn threshold_monotonicity(
            words in proptest::collection::vec("[a-c]{1,8}", 1..6),
            t_low in 0.5f64..0.9,
            bump in 0.0f64..0.1,
        ) {
            let text = words.join(" ");
            let t_high = (t_low + bump).min(1.0);
            let ont = chain_ontology();
            let low = Classifier::new(Arc::clone(&ont), Stopwords::builtin(), t_low).unwrap();
            let high = Classifier::new(ont, Stopwords::builtin(), t_high).unwrap();
            let a_low = low.classify_text("p", &text);
            let a_high = high.classify_text("p", &text);
            prop_assert!(a_high.direct_topics.is_subset(&a_low.direct_topics));
        }

        // The banded matcher agrees with the brute-force definition.
        #[test]
        fn matcher_agrees_with_oracle(
            words in proptest::collection::vec("[a-z]{1,12}", 1..5),
            threshold in 0.5f64..1.0,
        ) {
            let text = words.join(" ");
            let ont = chain_ontology();
            let c = Classifier::new(Arc::clone(&ont), Stopwords::builtin(), threshold).unwrap();
            let got = c.classify_text("p", &text);

            let sw = Stopwords::builtin();
            let grams = ngrams(&tokenize(&text, &sw), MAX_NGRAM);
            let mut matched = BTreeSet::new();
            for gram in &grams {
                for (label, id) in ont.labels() {
                    if levenshtein_similarity(gram, label) >= threshold {
                        matched.insert(id.to_string());
                    }
                }
            }
            prop_assert_eq!(got.direct_topics, ont.canonicalize(&matched));
        }
    }
}
