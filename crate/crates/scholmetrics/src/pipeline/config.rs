//! Run configuration: a flat `key = value` file plus command-line overrides.
//!
//! Relative paths in the file resolve against the file's own directory, so
//! a config can travel with its fixture data. Command-line flags win over
//! file values. Every validation failure names the offending field.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus::IngestMode;

use super::PipelineError;

pub const DEFAULT_THRESHOLD: f64 = crate::classifier::DEFAULT_THRESHOLD;
pub const DEFAULT_START_YEAR: i32 = 2009;
pub const DEFAULT_END_YEAR: i32 = 2018;
pub const DEFAULT_TREND_THRESHOLDS: [u64; 4] = [60, 20, 10, 5];

/// Effective settings for one run, after file parsing, overrides, and
/// validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dump: PathBuf,
    pub institutions: PathBuf,
    pub ontology: PathBuf,
    /// `None` means the built-in English list.
    pub stopwords: Option<PathBuf>,
    /// `None` means the canonical column order.
    pub schema: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub mode: IngestMode,
    pub threshold: f64,
    pub start_year: i32,
    pub end_year: i32,
    pub trend_thresholds: Vec<u64>,
    /// Logical venue name -> venue ids it aggregates.
    pub venues: BTreeMap<String, Vec<String>>,
    pub top_k: usize,
    pub solo_min_papers: u64,
    /// Restrict venue-level stages to this logical venue.
    pub venue_filter: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub venue: Option<String>,
    pub threshold: Option<f64>,
    pub start_year: Option<i32>,
    pub end_year: Option<i32>,
    pub strict: bool,
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &ConfigOverrides) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_text(&text, base, overrides)
    }

    pub fn from_text(
        text: &str,
        base: &Path,
        overrides: &ConfigOverrides,
    ) -> Result<Self, PipelineError> {
        let mut keys: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::Usage(format!(
                    "config line {}: expected key = value, found {:?}",
                    idx + 1,
                    raw
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(PipelineError::Usage(format!(
                    "config line {}: empty key",
                    idx + 1
                )));
            }
            if keys.insert(key.clone(), value).is_some() {
                return Err(PipelineError::Usage(format!(
                    "config line {}: duplicate key {key:?}",
                    idx + 1
                )));
            }
        }

        let mut venues: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut plain: BTreeMap<String, String> = BTreeMap::new();
        for (key, value) in keys {
            if let Some(name) = key.strip_prefix("venue.") {
                let ids: Vec<String> = value
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                venues.insert(name.to_string(), ids);
            } else {
                plain.insert(key, value);
            }
        }

        let path_field = |plain: &BTreeMap<String, String>, field: &str| -> Result<PathBuf, PipelineError> {
            match plain.get(field) {
                Some(v) if !v.is_empty() => Ok(base.join(v)),
                Some(_) => Err(PipelineError::Usage(format!("config field {field}: empty path"))),
                None => Err(PipelineError::Usage(format!("config field {field}: missing"))),
            }
        };
        let opt_path_field = |plain: &BTreeMap<String, String>, field: &str| -> Result<Option<PathBuf>, PipelineError> {
            match plain.get(field) {
                Some(v) if !v.is_empty() => Ok(Some(base.join(v))),
                Some(_) => Err(PipelineError::Usage(format!("config field {field}: empty path"))),
                None => Ok(None),
            }
        };

        let dump = path_field(&plain, "dump")?;
        let institutions = path_field(&plain, "institutions")?;
        let ontology = path_field(&plain, "ontology")?;
        let stopwords = opt_path_field(&plain, "stopwords")?;
        let schema = opt_path_field(&plain, "schema")?;
        let out_file = path_field(&plain, "out")?;

        let mode = match plain.get("mode").map(String::as_str) {
            None | Some("lenient") => IngestMode::Lenient,
            Some("strict") => IngestMode::Strict,
            Some(other) => {
                return Err(PipelineError::Usage(format!(
                    "config field mode: expected strict or lenient, found {other:?}"
                )))
            }
        };

        fn parse_num<T: std::str::FromStr>(
            plain: &BTreeMap<String, String>,
            field: &str,
            default: T,
        ) -> Result<T, PipelineError> {
            match plain.get(field) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| {
                    PipelineError::Usage(format!("config field {field}: invalid value {v:?}"))
                }),
            }
        }

        let threshold = parse_num(&plain, "threshold", DEFAULT_THRESHOLD)?;
        let start_year = parse_num(&plain, "start_year", DEFAULT_START_YEAR)?;
        let end_year = parse_num(&plain, "end_year", DEFAULT_END_YEAR)?;
        let top_k = parse_num(&plain, "top_k", crate::metrics::DEFAULT_TOP_K)?;
        let solo_min_papers =
            parse_num(&plain, "solo_min_papers", crate::metrics::DEFAULT_SOLO_MIN_PAPERS)?;

        let trend_thresholds = match plain.get("trend_thresholds") {
            None => DEFAULT_TREND_THRESHOLDS.to_vec(),
            Some(v) => v
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<u64>().map_err(|_| {
                        PipelineError::Usage(format!(
                            "config field trend_thresholds: invalid value {s:?}"
                        ))
                    })
                })
                .collect::<Result<Vec<u64>, _>>()?,
        };

        const KNOWN: [&str; 13] = [
            "dump",
            "institutions",
            "ontology",
            "stopwords",
            "schema",
            "out",
            "mode",
            "threshold",
            "start_year",
            "end_year",
            "top_k",
            "solo_min_papers",
            "trend_thresholds",
        ];
        for key in plain.keys() {
            if !KNOWN.contains(&key.as_str()) {
                return Err(PipelineError::Usage(format!("config field {key}: unknown key")));
            }
        }

        let mut config = PipelineConfig {
            dump,
            institutions,
            ontology,
            stopwords,
            schema,
            out_dir: out_file,
            mode,
            threshold,
            start_year,
            end_year,
            trend_thresholds,
            venues,
            top_k,
            solo_min_papers,
            venue_filter: None,
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, overrides: &ConfigOverrides) {
        if let Some(v) = &overrides.venue {
            self.venue_filter = Some(v.clone());
        }
        if let Some(t) = overrides.threshold {
            self.threshold = t;
        }
        if let Some(y) = overrides.start_year {
            self.start_year = y;
        }
        if let Some(y) = overrides.end_year {
            self.end_year = y;
        }
        if overrides.strict {
            self.mode = IngestMode::Strict;
        }
        if let Some(out) = &overrides.out {
            self.out_dir = out.clone();
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let usage = |msg: String| Err(PipelineError::Usage(msg));
        if !self.threshold.is_finite() || self.threshold <= 0.0 || self.threshold > 1.0 {
            return usage(format!(
                "config field threshold: must be in (0, 1], found {}",
                self.threshold
            ));
        }
        if self.start_year >= self.end_year {
            return usage(format!(
                "config field start_year: must be below end_year, found {} >= {}",
                self.start_year, self.end_year
            ));
        }
        if self.trend_thresholds.is_empty() {
            return usage("config field trend_thresholds: must not be empty".to_string());
        }
        if self.trend_thresholds.contains(&0) {
            return usage("config field trend_thresholds: thresholds must be positive".to_string());
        }
        if !self.trend_thresholds.windows(2).all(|w| w[0] > w[1]) {
            return usage(
                "config field trend_thresholds: must be strictly descending".to_string(),
            );
        }
        if self.venues.is_empty() {
            return usage("config field venue.*: at least one logical venue required".to_string());
        }
        for (name, ids) in &self.venues {
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return usage(format!(
                    "config field venue.{name}: name must be nonempty [A-Za-z0-9_-]"
                ));
            }
            if ids.is_empty() {
                return usage(format!("config field venue.{name}: no venue ids listed"));
            }
        }
        if self.top_k == 0 {
            return usage("config field top_k: must be at least 1".to_string());
        }
        if self.solo_min_papers == 0 {
            return usage("config field solo_min_papers: must be at least 1".to_string());
        }
        if let Some(filter) = &self.venue_filter {
            if !self.venues.contains_key(filter) {
                return usage(format!(
                    "flag --venue: {filter:?} is not a configured logical venue"
                ));
            }
        }
        Ok(())
    }

    /// Logical venues this run operates on, honoring `--venue`.
    pub fn selected_venues(&self) -> Vec<(&str, &[String])> {
        self.venues
            .iter()
            .filter(|(name, _)| {
                self.venue_filter
                    .as_deref()
                    .is_none_or(|f| f == name.as_str())
            })
            .map(|(name, ids)| (name.as_str(), ids.as_slice()))
            .collect()
    }

    /// Canonical text form of the effective configuration. The run manifest
    /// embeds and hashes this, so it must be deterministic.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dump = {}", self.dump.display());
        let _ = writeln!(out, "end_year = {}", self.end_year);
        let _ = writeln!(out, "institutions = {}", self.institutions.display());
        let _ = writeln!(
            out,
            "mode = {}",
            match self.mode {
                IngestMode::Strict => "strict",
                IngestMode::Lenient => "lenient",
            }
        );
        let _ = writeln!(out, "ontology = {}", self.ontology.display());
        let _ = writeln!(out, "out = {}", self.out_dir.display());
        if let Some(schema) = &self.schema {
            let _ = writeln!(out, "schema = {}", schema.display());
        }
        let _ = writeln!(out, "solo_min_papers = {}", self.solo_min_papers);
        let _ = writeln!(out, "start_year = {}", self.start_year);
        if let Some(stopwords) = &self.stopwords {
            let _ = writeln!(out, "stopwords = {}", stopwords.display());
        }
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "top_k = {}", self.top_k);
        let thresholds: Vec<String> =
            self.trend_thresholds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "trend_thresholds = {}", thresholds.join(";"));
        for (name, ids) in &self.venues {
            let _ = writeln!(out, "venue.{name} = {}", ids.join(";"));
        }
        if let Some(filter) = &self.venue_filter {
            let _ = writeln!(out, "venue_filter = {filter}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
dump = dump.tsv
institutions = institutions.tsv
ontology = ontology.tsv
out = out
venue.MAIN = v1;v2
";

    fn load(text: &str) -> Result<PipelineConfig, PipelineError> {
        PipelineConfig::from_text(text, Path::new("/base"), &ConfigOverrides::default())
    }

    #[test]
    fn minimal_config_fills_defaults_and_resolves_paths() {
        let cfg = load(MINIMAL).unwrap();
        assert_eq!(cfg.dump, PathBuf::from("/base/dump.tsv"));
        assert_eq!(cfg.out_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.threshold, DEFAULT_THRESHOLD);
        assert_eq!(cfg.mode, IngestMode::Lenient);
        assert_eq!(cfg.trend_thresholds, vec![60, 20, 10, 5]);
        assert_eq!(cfg.venues["MAIN"], vec!["v1", "v2"]);
        assert!(cfg.stopwords.is_none());
        assert!(cfg.schema.is_none());
    }

    #[test]
    fn comments_blanks_and_spacing_are_tolerated() {
        let text = format!("# header\n\n  threshold =  0.9 \n{MINIMAL}");
        let cfg = load(&text).unwrap();
        assert_eq!(cfg.threshold, 0.9);
    }

    #[test]
    fn overrides_beat_file_values() {
        let overrides = ConfigOverrides {
            venue: Some("MAIN".into()),
            threshold: Some(0.8),
            start_year: Some(2000),
            end_year: Some(2001),
            strict: true,
            out: Some(PathBuf::from("/elsewhere")),
        };
        let cfg =
            PipelineConfig::from_text(MINIMAL, Path::new("/base"), &overrides).unwrap();
        assert_eq!(cfg.threshold, 0.8);
        assert_eq!((cfg.start_year, cfg.end_year), (2000, 2001));
        assert_eq!(cfg.mode, IngestMode::Strict);
        assert_eq!(cfg.out_dir, PathBuf::from("/elsewhere"));
        assert_eq!(cfg.venue_filter.as_deref(), Some("MAIN"));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("threshold = 1.5", "threshold"),
            ("threshold = nope", "threshold"),
            ("start_year = 2020\nend_year = 2010", "start_year"),
            ("trend_thresholds = 5;10", "trend_thresholds"),
            ("trend_thresholds = 5;0", "trend_thresholds"),
            ("mode = fast", "mode"),
            ("top_k = 0", "top_k"),
            ("mystery = 1", "mystery"),
        ];
        for (extra, field) in cases {
            let text = format!("{MINIMAL}{extra}\n");
            let err = load(&text).unwrap_err();
            let PipelineError::Usage(msg) = &err else {
                panic!("expected usage error for {extra:?}, got {err:?}");
            };
            assert!(msg.contains(field), "{msg:?} should mention {field:?}");
        }
    }

    #[test]
    fn missing_required_path_is_a_usage_error() {
        let err = load("out = out\nvenue.V = x\n").unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("dump")));
    }

    #[test]
    fn venue_rules_are_enforced() {
        let err = load("dump = d\ninstitutions = i\nontology = o\nout = out\n").unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("venue")));

        let err = load(&format!("{MINIMAL}venue.bad name = x\n")).unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("bad name")));

        let err = load(&format!("{MINIMAL}venue.EMPTY = ;\n")).unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("EMPTY")));

        let overrides = ConfigOverrides {
            venue: Some("GHOST".into()),
            ..ConfigOverrides::default()
        };
        let err =
            PipelineConfig::from_text(MINIMAL, Path::new("/base"), &overrides).unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("GHOST")));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = load(&format!("{MINIMAL}threshold = 0.9\nthreshold = 0.8\n")).unwrap_err();
        assert!(matches!(err, PipelineError::Usage(m) if m.contains("duplicate")));
    }

    #[test]
    fn canonical_text_is_stable_and_reflects_overrides() {
        let cfg = load(MINIMAL).unwrap();
        assert_eq!(cfg.canonical_text(), load(MINIMAL).unwrap().canonical_text());

        let overrides = ConfigOverrides {
            threshold: Some(0.8),
            ..ConfigOverrides::default()
        };
        let changed =
            PipelineConfig::from_text(MINIMAL, Path::new("/base"), &overrides).unwrap();
        assert_ne!(cfg.canonical_text(), changed.canonical_text());
        assert!(changed.canonical_text().contains("threshold = 0.8"));
    }

    #[test]
    fn selected_venues_honors_filter() {
        let text = format!("{MINIMAL}venue.OTHER = v9\n");
        let all = load(&text).unwrap();
        assert_eq!(all.selected_venues().len(), 2);

        let overrides = ConfigOverrides {
            venue: Some("OTHER".into()),
            ..ConfigOverrides::default()
        };
        let one = PipelineConfig::from_text(&text, Path::new("/base"), &overrides).unwrap();
        let selected = one.selected_venues();
        assert_eq!(selected.len(), 1);
        assert_eq!(selected[0].0, "OTHER");
    }
}
