//! Venue-centered corpus extraction: accepted papers plus citing/cited
//! closure within one store.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::corpus::{CorpusError, CorpusStore, PaperRecord, VenueCorpus};

/// Extract the corpus of a single venue id.
pub fn extract_venue_dataset(
    store: &CorpusStore,
    venue_id: &str,
) -> Result<VenueCorpus, CorpusError> {
    let ids = [venue_id.to_string()];
    extract_logical_venue(store, venue_id, &ids)
}

/// Extract the corpus of a logical venue spanning several venue ids
/// (a journal renamed over its history keeps one id per era).
///
/// At least one of `venue_ids` must appear in the store; ids with no
/// records are tolerated so historical aliases can be listed freely.
pub fn extract_logical_venue(
    store: &CorpusStore,
    label: &str,
    venue_ids: &[String],
) -> Result<VenueCorpus, CorpusError> {
    if venue_ids.is_empty() {
        return Err(CorpusError::Config(format!(
            "logical venue {label:?} lists no venue ids"
        )));
    }
    if venue_ids.iter().any(|v| v.is_empty()) {
        return Err(CorpusError::Config(format!(
            "logical venue {label:?} lists an empty venue id"
        )));
    }

    let id_set: BTreeSet<&str> = venue_ids.iter().map(String::as_str).collect();
    let present = store.venue_ids();
    if id_set.is_disjoint(&present) {
        return Err(CorpusError::VenueNotFound(format!(
            "{label} (venue ids {})",
            venue_ids.join(", ")
        )));
    }

    let mut accepted: Vec<PaperRecord> = store
        .records()
        .iter()
        .filter(|r| id_set.contains(r.venue_id.as_str()))
        .cloned()
        .collect();
    accepted.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    let accepted_ids: BTreeSet<&str> = accepted.iter().map(|p| p.paper_id.as_str()).collect();

    let mut cited_ids: BTreeSet<&str> = BTreeSet::new();
    let mut dangling_references = 0u64;
    for paper in &accepted {
        for r in &paper.references {
            match store.get(r) {
                Some(target) => {
                    cited_ids.insert(target.paper_id.as_str());
                }
                None => dangling_references += 1,
            }
        }
    }
    let cited: Vec<PaperRecord> = cited_ids
        .iter()
        .map(|id| store.get(id).expect("id came from the store").clone())
        .collect();

    let mut citing: Vec<PaperRecord> = store
        .records()
        .iter()
        .filter(|r| r.references.iter().any(|x| accepted_ids.contains(x.as_str())))
        .cloned()
        .collect();
    citing.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));

    Ok(VenueCorpus {
        venue_label: label.to_string(),
        venue_ids: venue_ids.to_vec(),
        accepted,
        citing,
        cited,
        dangling_references,
        institutions: Arc::clone(store.institutions()),
    })
}
