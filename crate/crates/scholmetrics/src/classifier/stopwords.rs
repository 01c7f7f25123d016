//! Versioned stopword lists. Classification output records which list was
//! used, so the bundled list is frozen: changing it means bumping the version.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

const BUILTIN_LIST: &str = include_str!("../../data/stopwords_en_v1.txt");
const BUILTIN_VERSION: &str = "en-v1";

/// A set of words removed during tokenization, tagged with a version string.
#[derive(Debug, Clone)]
pub struct Stopwords {
    version: String,
    words: HashSet<String>,
}

impl Stopwords {
    /// The English list bundled with the crate (`en-v1`).
    pub fn builtin() -> Self {
        Self::from_list(BUILTIN_VERSION, BUILTIN_LIST)
    }

    /// Load a list from a file, one word per line, `#` comments allowed.
    /// The version is derived from the file content digest so that runs
    /// record exactly which list they used.
    pub fn from_path(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        let digest = Sha256::digest(text.as_bytes());
        let version = format!("file-{}", hex::encode(&digest[..6]));
        Ok(Self::from_list(&version, &text))
    }

    /// Parse a newline-separated word list; blank lines and `#` comments are
    /// skipped, words are lowercased.
    pub fn from_list(version: &str, text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stopwords {
            version: version.to_string(),
            words,
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn builtin_contains_core_function_words() {
        let sw = Stopwords::builtin();
        assert_eq!(sw.version(), "en-v1");
        for w in ["the", "of", "and", "a", "is"] {
            assert!(sw.contains(w), "missing stopword {w:?}");
        }
        assert!(!sw.contains("evolution"));
        assert!(!sw.contains("networks"));
    }

    #[test]
    fn file_list_version_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# tiny list\nfoo\nBAR\n").unwrap();
        drop(f);

        let sw = Stopwords::from_path(&path).unwrap();
        assert!(sw.version().starts_with("file-"));
        assert!(sw.contains("foo"));
        assert!(sw.contains("bar"));
        assert!(!sw.contains("# tiny list"));

        let again = Stopwords::from_path(&path).unwrap();
        assert_eq!(sw.version(), again.version());
    }
}
