//! Averaged polarity/subjectivity over a word-sense lexicon with intensity
//! modifiers and negation, following the pattern library's behavior.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

use super::SentimentError;

const BUNDLED_LEXICON: &str = include_str!("../../data/blob_lexicon.tsv");

const PUNCTUATION: &str = ".,;:!?()[]{}`''\"@#$^&*+-|=~_";
const NEGATIONS: [&str; 4] = ["no", "not", "n't", "never"];
const EOS: &str = "\u{0}EOS\u{0}";

const CONTRACTIONS: [(&str, &str); 7] = [
    ("'d", " 'd"),
    ("'m", " 'm"),
    ("'s", " 's"),
    ("'ll", " 'll"),
    ("'re", " 're"),
    ("'ve", " 've"),
    ("n't", " n't"),
];

const ABBREVIATIONS: &[&str] = &[
    "a.", "adj.", "adv.", "al.", "a.m.", "c.", "cf.", "comp.", "conf.", "def.", "ed.", "e.g.", "esp.",
    "etc.", "ex.", "f.", "fig.", "gen.", "id.", "i.e.", "int.", "l.", "m.", "Med.", "Mil.", "Mr.", "n.",
    "n.q.", "orig.", "pl.", "pred.", "pres.", "p.m.", "ref.", "v.", "vs.", "w/",
];

/// (polarity, emoticons) in lookup order.
const EMOTICONS: &[(f64, &[&str])] = &[
    (1.00, &["<3", "♥"]),
    (
        1.00,
        &[">:D", ":-D", ":D", "=-D", "=D", "X-D", "x-D", "XD", "xD", "8-D"],
    ),
    (
        0.75,
        &[">:P", ":-P", ":P", ":-p", ":p", ":-b", ":b", ":c)", ":o)", ":^)"],
    ),
    (
        0.50,
        &[
            ">:)", ":-)", ":)", "=)", "=]", ":]", ":}", ":>", ":3", "8)", "8-)",
        ],
    ),
    (0.25, &[">;]", ";-)", ";)", ";-]", ";]", ";D", ";^)", "*-)", "*)"]),
    (
        0.05,
        &[">:o", ":-O", ":O", ":o", ":-o", "o_O", "o.O", "°O°", "°o°"],
    ),
    (
        -0.25,
        &[
            ">:/", ":-/", ":/", ":\\", ">:\\", ":-.", ":-s", ":s", ":S", ":-S", ">.>",
        ],
    ),
    (
        -0.75,
        &[
            ">:[", ":-(", ":(", "=(", ":-[", ":[", ":{", ":-<", ":c", ":-c", "=/",
        ],
    ),
    (-1.00, &[":'(", ":'''(", ";'("]),
];

static RE_ABBR1: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Za-z]\.$").unwrap());
static RE_ABBR2: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^([A-Za-z]\.)+$").unwrap());
// The consonant class also admits '|', as in the reference pattern.
static RE_ABBR3: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Z][b|c|d|f|g|h|j|k|l|m|n|p|q|r|s|t|v|w|x|z]+.$").unwrap());
static RE_SARCASM: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\( ?! ?\)").unwrap());
static RE_LINEBREAK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\n{2,}").unwrap());
static RE_EMOTICONS: LazyLock<Regex> = LazyLock::new(|| {
    // Longest spellings first so that alternation order never depends on
    // set iteration order.
    let mut all: Vec<&str> = EMOTICONS.iter().flat_map(|(_, e)| e.iter().copied()).collect();
    all.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    let alts: Vec<String> = all
        .iter()
        .map(|e| {
            e.chars()
                .map(|c| regex::escape(&c.to_string()))
                .collect::<Vec<_>>()
                .join(" ?")
        })
        .collect();
    Regex::new(&format!(r"({})($|\s)", alts.join("|"))).unwrap()
});

/// (polarity, subjectivity, intensity)
type Psi = (f64, f64, f64);
/// Part-of-speech tag with its senses.
type PosSenses = (Option<String>, Vec<Psi>);

/// Word senses keyed by part of speech; the `None` key holds the average
/// over all parts of speech.
#[derive(Debug, Clone)]
pub struct BlobLexicon {
    words: HashMap<String, Vec<(Option<String>, Psi)>>,
}

fn avg(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / (values.len().max(1) as f64)
}

fn avg_psi(list: &[Psi]) -> Psi {
    let p: Vec<f64> = list.iter().map(|x| x.0).collect();
    let s: Vec<f64> = list.iter().map(|x| x.1).collect();
    let i: Vec<f64> = list.iter().map(|x| x.2).collect();
    (avg(&p), avg(&s), avg(&i))
}

impl BlobLexicon {
    /// Parses `form<TAB>pos<TAB>polarity<TAB>subjectivity<TAB>intensity` rows,
    /// one per word sense, in source order.
    pub fn parse(text: &str) -> Result<Self, SentimentError> {
        // form -> ordered (pos -> senses)
        let mut order: Vec<String> = Vec::new();
        let mut senses: HashMap<String, Vec<PosSenses>> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(SentimentError::Lexicon(format!(
                    "line {}: expected 5 tab-separated columns",
                    n + 1
                )));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| SentimentError::Lexicon(format!("line {}: bad number {s:?}", n + 1)))
            };
            let psi = (num(cols[2])?, num(cols[3])?, num(cols[4])?);
            let form = cols[0].to_owned();
            if form.is_empty() {
                continue;
            }
            let pos = (!cols[1].is_empty()).then(|| cols[1].to_owned());
            let entry = senses.entry(form.clone()).or_insert_with(|| {
                order.push(form.clone());
                Vec::new()
            });
            match entry.iter_mut().find(|(p, _)| *p == pos) {
                Some((_, list)) => list.push(psi),
                None => entry.push((pos, vec![psi])),
            }
        }
        if order.is_empty() {
            return Err(SentimentError::Lexicon("subjectivity lexicon is empty".into()));
        }

        let mut words: HashMap<String, Vec<(Option<String>, Psi)>> = HashMap::new();
        for form in &order {
            let mut by_pos: Vec<(Option<String>, Psi)> = senses[form]
                .iter()
                .map(|(pos, list)| (pos.clone(), avg_psi(list)))
                .collect();
            let all: Vec<Psi> = by_pos.iter().map(|(_, v)| *v).collect();
            set_pos(&mut by_pos, None, avg_psi(&all));
            words.insert(form.clone(), by_pos);
        }
        let mut lex = BlobLexicon { words };

        // Adverbs derived from adjectives: "terrible" -> "terribly".
        for form in &order {
            let Some(jj) = lex.get(form, Some("JJ")) else {
                continue;
            };
            let mut w = form.clone();
            if w.ends_with('y') {
                w.pop();
                w.push('i');
            }
            if w.ends_with("le") {
                w.truncate(w.len() - 2);
            }
            w.push_str("ly");
            lex.annotate(&w, "RB", jj);
        }
        Ok(lex)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled subjectivity lexicon is valid")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SentimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SentimentError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn annotate(&mut self, word: &str, pos: &str, psi: Psi) {
        let entry = self.words.entry(word.to_owned()).or_default();
        set_pos(entry, Some(pos.to_owned()), psi);
        set_pos(entry, None, psi);
    }

    fn get(&self, word: &str, pos: Option<&str>) -> Option<Psi> {
        self.words
            .get(word)?
            .iter()
            .find(|(p, _)| p.as_deref() == pos)
            .map(|(_, v)| *v)
    }

    fn has_pos(&self, word: &str, pos: &str) -> bool {
        self.get(word, Some(pos)).is_some()
    }
}

fn set_pos(entry: &mut Vec<(Option<String>, Psi)>, pos: Option<String>, psi: Psi) {
    match entry.iter_mut().find(|(p, _)| *p == pos) {
        Some(slot) => slot.1 = psi,
        None => entry.push((pos, psi)),
    }
}

fn is_punct(c: char) -> bool {
    c != '.' && PUNCTUATION.contains(c)
}

fn is_abbreviation(t: &str) -> bool {
    ABBREVIATIONS.contains(&t) || RE_ABBR1.is_match(t) || RE_ABBR2.is_match(t) || RE_ABBR3.is_match(t)
}

fn is_contraction(t: &str) -> bool {
    CONTRACTIONS.iter().any(|(k, _)| *k == t)
}

/// Splits text into sentences of space-separated tokens.
pub fn find_tokens(text: &str) -> Vec<String> {
    let mut s = text.to_owned();
    for (a, b) in CONTRACTIONS {
        s = s.replace(a, b);
    }
    for q in ['“', '”', '‘', '’', '\'', '"'] {
        s = s.replace(q, &format!(" {q} "));
    }
    let s = s.replace("\r\n", "\n");
    let s = RE_LINEBREAK.replace_all(&s, format!(" {EOS} ").as_str());

    let mut tokens: Vec<String> = Vec::new();
    for word in s.split_whitespace() {
        let mut t = word;
        let mut tail: Vec<String> = Vec::new();
        while t.starts_with(is_punct) && !is_contraction(t) {
            let c = t.chars().next().unwrap();
            tokens.push(c.to_string());
            t = &t[c.len_utf8()..];
        }
        while (t.ends_with(is_punct) || t.ends_with('.')) && !is_contraction(t) {
            if t.ends_with(is_punct) {
                let c = t.chars().next_back().unwrap();
                tail.push(c.to_string());
                t = &t[..t.len() - c.len_utf8()];
            }
            if t.ends_with("...") {
                tail.push("...".into());
                t = t[..t.len() - 3].trim_end_matches('.');
            }
            if t.ends_with('.') {
                if is_abbreviation(t) {
                    break;
                }
                tail.push(".".into());
                t = &t[..t.len() - 1];
            }
        }
        if !t.is_empty() {
            tokens.push(t.to_owned());
        }
        tokens.extend(tail.into_iter().rev());
    }

    let is_end = |t: &str| matches!(t, "..." | "." | "!" | "?") || t == EOS;
    let is_closing =
        |t: &str| matches!(t, "'" | "\"" | "”" | "’" | "..." | "." | "!" | "?" | ")") || t == EOS;
    let mut sentences: Vec<Vec<String>> = vec![Vec::new()];
    let (mut i, mut j) = (0usize, 0usize);
    while j < tokens.len() {
        if is_end(&tokens[j]) {
            while j < tokens.len() && is_closing(&tokens[j]) {
                let t = tokens[j].as_str();
                if (t == "'" || t == "\"")
                    && sentences.last().unwrap().iter().filter(|x| *x == t).count() % 2 == 0
                {
                    break;
                }
                j += 1;
            }
            let chunk: Vec<String> = tokens[i..j].iter().filter(|t| *t != EOS).cloned().collect();
            sentences.last_mut().unwrap().extend(chunk);
            sentences.push(Vec::new());
            i = j;
        }
        j += 1;
    }
    let end = j.min(tokens.len());
    if i < end {
        sentences
            .last_mut()
            .unwrap()
            .extend(tokens[i..end].iter().cloned());
    }
    sentences
        .into_iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let joined = s.join(" ");
            let joined = RE_SARCASM.replace_all(&joined, "(!)");
            RE_EMOTICONS
                .replace_all(&joined, |c: &regex::Captures| {
                    format!("{}{}", c[1].replace(' ', ""), &c[2])
                })
                .into_owned()
        })
        .collect()
}

struct Assessment {
    p: f64,
    s: f64,
    i: f64,
    negated: bool,
}

fn is_alpha(w: &str) -> bool {
    !w.is_empty() && w.chars().all(char::is_alphabetic)
}

fn emoticon_polarity(w: &str) -> Option<f64> {
    EMOTICONS
        .iter()
        .find(|(_, set)| set.iter().any(|e| e.to_lowercase() == w))
        .map(|(p, _)| *p)
}

pub struct Blob {
    lexicon: BlobLexicon,
}

impl Blob {
    pub fn new(lexicon: BlobLexicon) -> Self {
        Blob { lexicon }
    }

    pub fn bundled() -> Self {
        Blob::new(BlobLexicon::bundled())
    }

    /// Returns (polarity, subjectivity); (0, 0) when nothing is assessed.
    pub fn scores(&self, text: &str) -> (f64, f64) {
        let words: Vec<String> = find_tokens(text)
            .join(" ")
            .split_whitespace()
            .map(str::to_lowercase)
            .collect();
        let a = self.assessments(&words);
        if a.is_empty() {
            return (0.0, 0.0);
        }
        let n = a.len() as f64;
        let p: f64 = a.iter().map(|x| x.0).sum();
        let s: f64 = a.iter().map(|x| x.1).sum();
        (p / n, s / n)
    }

    /// Per-chunk (polarity, subjectivity) after modifiers and negation.
    fn assessments(&self, words: &[String]) -> Vec<(f64, f64)> {
        let lex = &self.lexicon;
        let mut a: Vec<Assessment> = Vec::new();
        let mut m: Option<&str> = None;
        let mut n: Option<&str> = None;
        for w in words {
            let w = w.as_str();
            if let Some((p, s, i)) = lex.get(w, None) {
                if m.is_none() {
                    a.push(Assessment {
                        p,
                        s,
                        i,
                        negated: false,
                    });
                } else {
                    let last = a.last_mut().unwrap();
                    last.p = (p * last.i).clamp(-1.0, 1.0);
                    last.s = (s * last.i).clamp(-1.0, 1.0);
                    last.i = i;
                }
                if n.is_some() {
                    let last = a.last_mut().unwrap();
                    last.i = 1.0 / last.i;
                    last.negated = true;
                }
                m = None;
                n = None;
                if lex.has_pos(w, "RB") {
                    m = Some(w);
                }
                if NEGATIONS.contains(&w) {
                    n = Some(w);
                }
            } else {
                if NEGATIONS.contains(&w) {
                    n = Some(w);
                } else if n.is_some() && w.trim_matches('\'').chars().count() > 1 {
                    n = None;
                }
                if n.is_some() && m.is_some_and(|mw| mw.ends_with("ly")) {
                    a.last_mut().unwrap().negated = true;
                    n = None;
                } else if m.is_some() && w.chars().count() > 2 {
                    m = None;
                }
                if w == "!" {
                    if let Some(last) = a.last_mut() {
                        last.p = (last.p * 1.25).clamp(-1.0, 1.0);
                    }
                }
                if w == "(!)" {
                    a.push(Assessment {
                        p: 0.0,
                        s: 1.0,
                        i: 1.0,
                        negated: false,
                    });
                }
                if !is_alpha(w) && w.chars().count() <= 5 && !PUNCTUATION.contains(w) {
                    if let Some(p) = emoticon_polarity(w) {
                        a.push(Assessment {
                            p,
                            s: 1.0,
                            i: 1.0,
                            negated: false,
                        });
                    }
                }
            }
        }
        a.into_iter()
            .map(|x| (if x.negated { x.p * -0.5 } else { x.p }, x.s))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_punctuation_and_contractions() {
        assert_eq!(find_tokens("Hello, world!"), vec!["Hello , world !"]);
        assert_eq!(find_tokens("don't"), vec!["do n ' t"]);
        assert_eq!(find_tokens("Wait... what?"), vec!["Wait ...", "what ?"]);
        assert_eq!(find_tokens("Mr. Smith left."), vec!["Mr. Smith left ."]);
        assert_eq!(find_tokens("U.S. is big"), vec!["U.S. is big"]);
        assert_eq!(find_tokens("nice :)"), vec!["nice :)"]);
        assert_eq!(find_tokens("so (!) true"), vec!["so (!)", "true"]);
        assert_eq!(find_tokens("a\n\nb"), vec!["a", "b"]);
        assert!(find_tokens("   ").is_empty());
    }

    #[test]
    fn reference_values() {
        let b = Blob::bundled();
        let close = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12;
        assert!(close(b.scores("great"), (0.8, 0.75)));
        assert!(close(b.scores("terrible loss"), (-1.0, 1.0)));
        assert!(close(b.scores("not good"), (-0.35, 0.6)));
        assert!(close(b.scores("very good"), (0.91, 0.78)));
        assert_eq!(b.scores("hodl on comrade!"), (0.0, 0.0));
    }

    #[test]
    fn derived_adverbs() {
        let lex = BlobLexicon::bundled();
        assert!(lex.has_pos("terribly", "RB"));
        assert_eq!(lex.get("terribly", Some("RB")), lex.get("terrible", Some("JJ")));
    }

    #[test]
    fn malformed_lexicon() {
        assert!(BlobLexicon::parse("good\tJJ\t0.7\n").is_err());
        assert!(BlobLexicon::parse("good\tJJ\tx\t0.6\t1.0\n").is_err());
        assert!(BlobLexicon::parse("# empty\n").is_err());
    }
}
