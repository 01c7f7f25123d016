//! Research-topic ontology: label lookup, super-topic closure, and
//! equivalence canonicalization.
//!
//! The on-disk form is a flat UTF-8 TSV of relation triples, one per line:
//!
//! ```text
//! subject_label<TAB>relation<TAB>object_label
//! ```
//!
//! with the relation vocabulary exactly `superTopicOf`, `relatedEquivalent`,
//! and `primaryLabel`. `(A, superTopicOf, B)` makes `A` a super-topic of `B`;
//! `(A, relatedEquivalent, B)` marks the two topics as synonyms;
//! `(A, primaryLabel, B)` designates `B` as the canonical representative of
//! `A`'s equivalence class. Labels are lowercased on load and double as topic
//! identifiers. Labels must not contain `;` (reserved as the list separator
//! in annotation output).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dangling topic references: {}", offenders.join(", "))]
    DanglingRefs { offenders: Vec<String> },

    #[error("unknown topic: {0}")]
    TopicNotFound(String),
}

/// One research area. The id is the lowercased label the topic was first
/// mentioned under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    pub primary_label: String,
    pub alt_labels: BTreeSet<String>,
    pub super_topics: BTreeSet<String>,
    pub equivalents: BTreeSet<String>,
    /// Object of a `primaryLabel` triple naming this topic's class
    /// representative, when one was declared.
    pub canonical_target: Option<String>,
}

impl Topic {
    pub fn new(label: &str) -> Self {
        let label = label.to_lowercase();
        Topic {
            topic_id: label.clone(),
            primary_label: label,
            alt_labels: BTreeSet::new(),
            super_topics: BTreeSet::new(),
            equivalents: BTreeSet::new(),
            canonical_target: None,
        }
    }
}

/// Immutable topic graph. All queries are read-only.
#[derive(Debug, Clone)]
pub struct TopicOntology {
    topics: BTreeMap<String, Topic>,
    label_index: BTreeMap<String, String>,
    /// topic_id -> representative of its equivalence class.
    canonical_rep: BTreeMap<String, String>,
}

/// Parse a triple stream into an ontology.
pub fn load_ontology<R: BufRead>(reader: R) -> Result<TopicOntology, OntologyError> {
    let mut topics: BTreeMap<String, Topic> = BTreeMap::new();

    fn ensure<'a>(topics: &'a mut BTreeMap<String, Topic>, label: &str) -> &'a mut Topic {
        topics
            .entry(label.to_string())
            .or_insert_with(|| Topic::new(label))
    }

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(OntologyError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let subject = cols[0].trim().to_lowercase();
        let relation = cols[1].trim();
        let object = cols[2].trim().to_lowercase();
        if subject.is_empty() || object.is_empty() {
            return Err(OntologyError::Parse {
                line: line_no,
                message: "empty topic label".to_string(),
            });
        }
        if subject.contains(';') || object.contains(';') {
            return Err(OntologyError::Parse {
                line: line_no,
                message: "topic labels must not contain ';'".to_string(),
            });
        }
        match relation {
            "superTopicOf" => {
                ensure(&mut topics, &subject);
                ensure(&mut topics, &object).super_topics.insert(subject);
            }
            "relatedEquivalent" => {
                ensure(&mut topics, &subject).equivalents.insert(object.clone());
                ensure(&mut topics, &object).equivalents.insert(subject);
            }
            "primaryLabel" => {
                // The designation links synonyms just like relatedEquivalent.
                let s = ensure(&mut topics, &subject);
                s.canonical_target = Some(object.clone());
                if subject != object {
                    s.equivalents.insert(object.clone());
                    ensure(&mut topics, &object).equivalents.insert(subject);
                }
            }
            other => {
                return Err(OntologyError::Parse {
                    line: line_no,
                    message: format!("unknown relation {other:?}"),
                });
            }
        }
    }

    TopicOntology::from_topics(topics.into_values().collect())
}

impl TopicOntology {
    /// Build from explicit topics, enforcing symmetric equivalence,
    /// validating references, and precomputing class representatives.
    pub fn from_topics(topic_list: Vec<Topic>) -> Result<Self, OntologyError> {
        let mut topics: BTreeMap<String, Topic> = BTreeMap::new();
        for t in topic_list {
            topics.insert(t.topic_id.clone(), t);
        }

        // Symmetric closure of the equivalence relation.
        let mut to_add: Vec<(String, String)> = Vec::new();
        for (id, t) in &topics {
            for eq in &t.equivalents {
                to_add.push((eq.clone(), id.clone()));
            }
        }
        for (owner, eq) in to_add {
            if let Some(t) = topics.get_mut(&owner) {
                t.equivalents.insert(eq);
            }
        }

        // Every referenced id must exist.
        let mut offenders: BTreeSet<String> = BTreeSet::new();
        for t in topics.values() {
            for r in t
                .super_topics
                .iter()
                .chain(t.equivalents.iter())
                .chain(t.canonical_target.iter())
            {
                if !topics.contains_key(r) {
                    offenders.insert(r.clone());
                }
            }
        }
        if !offenders.is_empty() {
            return Err(OntologyError::DanglingRefs {
                offenders: offenders.into_iter().collect(),
            });
        }

        let canonical_rep = compute_representatives(&topics);

        let mut label_index: BTreeMap<String, String> = BTreeMap::new();
        for (id, t) in &topics {
            for label in std::iter::once(&t.primary_label).chain(t.alt_labels.iter()) {
                let label = label.to_lowercase();
                match label_index.get(&label) {
                    Some(existing) if existing != id => {
                        // Collisions resolve to the smallest topic_id.
                        let winner = existing.min(id).clone();
                        log::warn!(
                            "label {label:?} maps to both {existing:?} and {id:?}; keeping {winner:?}"
                        );
                        label_index.insert(label, winner);
                    }
                    Some(_) => {}
                    None => {
                        label_index.insert(label, id.clone());
                    }
                }
            }
        }

        Ok(TopicOntology {
            topics,
            label_index,
            canonical_rep,
        })
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn contains(&self, topic_id: &str) -> bool {
        self.topics.contains_key(topic_id)
    }

    pub fn get(&self, topic_id: &str) -> Option<&Topic> {
        self.topics.get(topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn topic_by_label(&self, label: &str) -> Option<&Topic> {
        let id = self.label_index.get(&label.to_lowercase())?;
        self.topics.get(id)
    }

    /// Every (label, topic_id) pair: primary and alternate labels.
    pub fn labels(&self) -> impl Iterator<Item = (&str, &str)> {
        self.label_index
            .iter()
            .map(|(label, id)| (label.as_str(), id.as_str()))
    }

    /// Transitive super-topic closure of `topic_ids`, excluding the inputs
    /// themselves. Cycles are handled by the visited set.
    pub fn super_topic_closure(
        &self,
        topic_ids: &BTreeSet<String>,
    ) -> Result<BTreeSet<String>, OntologyError> {
        for id in topic_ids {
            if !self.topics.contains_key(id) {
                return Err(OntologyError::TopicNotFound(id.clone()));
            }
        }
        let mut visited: BTreeSet<String> = topic_ids.clone();
        let mut queue: VecDeque<&str> = topic_ids.iter().map(String::as_str).collect();
        let mut result = BTreeSet::new();
        while let Some(id) = queue.pop_front() {
            let topic = &self.topics[id];
            for sup in &topic.super_topics {
                if visited.insert(sup.clone()) {
                    result.insert(sup.clone());
                    queue.push_back(sup);
                }
            }
        }
        // Inputs never count as their own enrichment, even via a cycle.
        Ok(&result - topic_ids)
    }

    /// Replace each topic by the representative of its equivalence class and
    /// deduplicate. Ids not present in the ontology pass through unchanged.
    pub fn canonicalize(&self, topic_ids: &BTreeSet<String>) -> BTreeSet<String> {
        topic_ids
            .iter()
            .map(|id| {
                self.canonical_rep
                    .get(id)
                    .cloned()
                    .unwrap_or_else(|| id.clone())
            })
            .collect()
    }

    pub fn canonical_of(&self, topic_id: &str) -> Option<&str> {
        self.canonical_rep.get(topic_id).map(String::as_str)
    }
}

/// Representative per equivalence class (connected component of the
/// equivalents graph): the topic designated as the object of a
/// `primaryLabel` triple, falling back to the smallest primary label.
fn compute_representatives(topics: &BTreeMap<String, Topic>) -> BTreeMap<String, String> {
    let mut rep: BTreeMap<String, String> = BTreeMap::new();
    let mut assigned: BTreeSet<String> = BTreeSet::new();

    for start in topics.keys() {
        if assigned.contains(start) {
            continue;
        }
        // Collect the component.
        let mut component: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<String> = VecDeque::new();
        component.insert(start.clone());
        queue.push_back(start.clone());
        while let Some(id) = queue.pop_front() {
            for eq in &topics[&id].equivalents {
                if component.insert(eq.clone()) {
                    queue.push_back(eq.clone());
                }
            }
        }

        let designated: BTreeSet<&String> = component
            .iter()
            .filter_map(|id| topics[id].canonical_target.as_ref())
            .filter(|t| component.contains(*t))
            .collect();
        let representative = match designated.iter().next() {
            Some(first) => {
                if designated.len() > 1 {
                    log::warn!(
                        "equivalence class of {start:?} has {} designated representatives; keeping {first:?}",
                        designated.len()
                    );
                }
                (*first).clone()
            }
            None => component
                .iter()
                .min_by(|a, b| topics[*a].primary_label.cmp(&topics[*b].primary_label))
                .expect("component is nonempty")
                .clone(),
        };

        for id in component {
            rep.insert(id.clone(), representative.clone());
            assigned.insert(id);
        }
    }
    rep
}
