//! Word lists and the abbreviation map.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, LazyLock};

use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

const BUNDLED_ENGLISH: &str = include_str!("../../data/english_words.txt");
const BUNDLED_FINANCIAL: &str = include_str!("../../data/financial_lexicon.txt");
const BUNDLED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.tsv");

static ENGLISH: LazyLock<Arc<WordSet>> =
    LazyLock::new(|| Arc::new(WordSet::parse(BUNDLED_ENGLISH, "bundled English vocabulary").unwrap()));

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{name} line {line}: {message}")]
    Format {
        name: String,
        line: usize,
        message: String,
    },
    #[error("{name} is empty")]
    Empty { name: String },
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Yields `(1-based line number, trimmed content)` for non-blank,
/// non-comment lines.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Set of lowercase single-token words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordSet {
    words: HashSet<String>,
}

impl WordSet {
    pub fn parse(text: &str, name: &str) -> Result<Self, LexiconError> {
        let mut words = HashSet::new();
        for (line, raw) in data_lines(text) {
            let w = raw.trim();
            if w.chars().any(char::is_whitespace) {
                return Err(LexiconError::Format {
                    name: name.into(),
                    line,
                    message: format!("{w:?} is not a single token"),
                });
            }
            if w.to_lowercase() != w {
                return Err(LexiconError::Format {
                    name: name.into(),
                    line,
                    message: format!("{w:?} is not lowercase"),
                });
            }
            words.insert(w.to_owned());
        }
        if words.is_empty() {
            return Err(LexiconError::Empty { name: name.into() });
        }
        Ok(WordSet { words })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        WordSet {
            words: words.into_iter().map(Into::into).collect(),
        }
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

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Crypto-market terms a text must mention to enter the financial corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinancialLexicon(WordSet);

impl FinancialLexicon {
    pub fn bundled() -> Self {
        FinancialLexicon(WordSet::parse(BUNDLED_FINANCIAL, "bundled financial lexicon").unwrap())
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        WordSet::load(path).map(FinancialLexicon)
    }

    pub fn from_words<I, S>(words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set = WordSet::from_words(words);
        if set.is_empty() {
            return Err(LexiconError::Empty {
                name: "financial lexicon".into(),
            });
        }
        Ok(FinancialLexicon(set))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn words(&self) -> &WordSet {
        &self.0
    }
}

/// Words kept by OOV removal: the English list plus the financial lexicon.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    english: Arc<WordSet>,
    financial: FinancialLexicon,
}

impl Vocabulary {
    pub fn new(english: impl Into<Arc<WordSet>>, financial: FinancialLexicon) -> Result<Self, LexiconError> {
        let english = english.into();
        if english.is_empty() {
            return Err(LexiconError::Empty {
                name: "English vocabulary".into(),
            });
        }
        Ok(Vocabulary { english, financial })
    }

    /// Parsed once per process and shared.
    pub fn bundled_english() -> Arc<WordSet> {
        Arc::clone(&ENGLISH)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.english.contains(word) || self.financial.contains(word)
    }

    pub fn financial(&self) -> &FinancialLexicon {
        &self.financial
    }
}

/// Slang and abbreviation expansions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbreviationMap {
    entries: BTreeMap<String, String>,
}

impl AbbreviationMap {
    pub fn parse(text: &str, name: &str) -> Result<Self, LexiconError> {
        let mut entries = BTreeMap::new();
        for (line, raw) in data_lines(text) {
            let err = |message: String| LexiconError::Format {
                name: name.into(),
                line,
                message,
            };
            let (key, phrase) = raw
                .split_once('\t')
                .ok_or_else(|| err("expected token<TAB>phrase".into()))?;
            let (key, phrase) = (key.trim(), phrase.trim());
            if key.is_empty() || phrase.is_empty() {
                return Err(err("empty token or phrase".into()));
            }
            if key.to_lowercase() != key || key.chars().any(char::is_whitespace) {
                return Err(err(format!("key {key:?} must be one lowercase token")));
            }
            if key == phrase {
                return Err(err(format!("{key:?} maps to itself")));
            }
            if entries.insert(key.to_owned(), phrase.to_owned()).is_some() {
                return Err(err(format!("duplicate key {key:?}")));
            }
        }
        for (key, phrase) in &entries {
            if let Some(w) = phrase.unicode_words().find(|w| entries.contains_key(*w)) {
                return Err(LexiconError::Format {
                    name: name.into(),
                    line: 0,
                    message: format!("phrase for {key:?} contains key {w:?}"),
                });
            }
        }
        Ok(AbbreviationMap { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_ABBREVIATIONS, "bundled abbreviations").unwrap()
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.entries.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replaces every whole-word key with its phrase. Everything between
    /// words is left as is.
    pub fn expand(&self, text: &str) -> String {
        text.split_word_bounds()
            .map(|seg| self.get(seg).unwrap_or(seg))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_resources_load() {
        let lex = FinancialLexicon::bundled();
        assert!((700..=900).contains(&lex.words().len()));
        assert!(lex.contains("luna") && lex.contains("btc"));
        let en = Vocabulary::bundled_english();
        assert!(en.len() >= 50_000);
        assert!(!en.contains("xqzt"));
        assert!(AbbreviationMap::bundled().len() >= 50);
    }

    #[test]
    fn expansion() {
        let map = AbbreviationMap::bundled();
        assert_eq!(map.expand("fomo is real"), "fear of missing out is real");
        assert_eq!(map.expand("hodl on comrade!"), "hold on comrade!");
        assert_eq!(map.expand("no abbreviations here"), "no abbreviations here");
        assert_eq!(map.expand("hodlers, btd"), "holders, buy the dip");
        let once = map.expand("gm fomo u");
        assert_eq!(map.expand(&once), once);
    }

    #[test]
    fn abbreviation_validation() {
        assert!(AbbreviationMap::parse("a\ta", "t").is_err());
        assert!(AbbreviationMap::parse("a\tb c\nb\tx", "t").is_err());
        assert!(AbbreviationMap::parse("A\tb", "t").is_err());
        assert!(AbbreviationMap::parse("nophrase", "t").is_err());
        assert!(AbbreviationMap::parse("# c\n\nab\tx y\n", "t").unwrap().len() == 1);
    }

    #[test]
    fn word_set_validation() {
        assert!(matches!(
            WordSet::parse("# only\n", "t"),
            Err(LexiconError::Empty { .. })
        ));
        assert!(WordSet::parse("Upper\n", "t").is_err());
        assert!(WordSet::parse("two words\n", "t").is_err());
        assert!(FinancialLexicon::from_words(Vec::<String>::new()).is_err());
        assert!(Vocabulary::new(WordSet::default(), FinancialLexicon::bundled()).is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            FinancialLexicon::load(Path::new("/nonexistent/lexicon.txt")),
            Err(LexiconError::Io { .. })
        ));
    }
}
