//! Rule-based valence scoring over a lexicon of rated tokens.
//!
//! Follows the published reference behavior: booster and dampener words,
//! negation within three preceding tokens, ALL-CAPS emphasis, the "but"
//! shift, a handful of idioms, and `!`/`?` amplification. Emoji-to-text
//! substitution is not performed.

use std::collections::HashMap;
use std::path::Path;

use super::SentimentError;

const B_INCR: f64 = 0.293;
const B_DECR: f64 = -0.293;
const C_INCR: f64 = 0.733;
const N_SCALAR: f64 = -0.74;
const ALPHA: f64 = 15.0;

const BUNDLED_LEXICON: &str = include_str!("../../data/vader_lexicon.tsv");

const NEGATE: &[&str] = &[
    "aint",
    "arent",
    "cannot",
    "cant",
    "couldnt",
    "darent",
    "didnt",
    "doesnt",
    "ain't",
    "aren't",
    "can't",
    "couldn't",
    "daren't",
    "didn't",
    "doesn't",
    "dont",
    "hadnt",
    "hasnt",
    "havent",
    "isnt",
    "mightnt",
    "mustnt",
    "neither",
    "don't",
    "hadn't",
    "hasn't",
    "haven't",
    "isn't",
    "mightn't",
    "mustn't",
    "neednt",
    "needn't",
    "never",
    "none",
    "nope",
    "nor",
    "not",
    "nothing",
    "nowhere",
    "oughtnt",
    "shant",
    "shouldnt",
    "uhuh",
    "wasnt",
    "werent",
    "oughtn't",
    "shan't",
    "shouldn't",
    "uh-uh",
    "wasn't",
    "weren't",
    "without",
    "wont",
    "wouldnt",
    "won't",
    "wouldn't",
    "rarely",
    "seldom",
    "despite",
];

const BOOSTERS_UP: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerable",
    "considerably",
    "decidedly",
    "deeply",
    "effing",
    "enormous",
    "enormously",
    "entirely",
    "especially",
    "exceptional",
    "exceptionally",
    "extreme",
    "extremely",
    "fabulously",
    "flipping",
    "flippin",
    "frackin",
    "fracking",
    "fricking",
    "frickin",
    "frigging",
    "friggin",
    "fully",
    "fuckin",
    "fucking",
    "fuggin",
    "fugging",
    "greatly",
    "hella",
    "highly",
    "hugely",
    "incredible",
    "incredibly",
    "intensely",
    "major",
    "majorly",
    "more",
    "most",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "so",
    "substantially",
    "thoroughly",
    "total",
    "totally",
    "tremendous",
    "tremendously",
    "uber",
    "unbelievably",
    "unusually",
    "utter",
    "utterly",
    "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "just enough",
    "kind of",
    "kinda",
    "kindof",
    "kind-of",
    "less",
    "little",
    "marginal",
    "marginally",
    "occasional",
    "occasionally",
    "partly",
    "scarce",
    "scarcely",
    "slight",
    "slightly",
    "somewhat",
    "sort of",
    "sorta",
    "sortof",
    "sort-of",
];

const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

/// ASCII punctuation stripped from token edges.
const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Valences, booster increments and negators.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    pub entries: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negators: Vec<String>,
}

impl SentimentLexicon {
    /// Parses `token<TAB>valence` rows (`#` comments allowed) and attaches
    /// the standard booster and negator lists.
    pub fn parse(text: &str) -> Result<Self, SentimentError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(token), Some(score)) = (cols.next(), cols.next()) else {
                return Err(SentimentError::Lexicon(format!(
                    "line {}: expected token<TAB>score",
                    i + 1
                )));
            };
            let v: f64 = score
                .trim()
                .parse()
                .map_err(|_| SentimentError::Lexicon(format!("line {}: bad score {score:?}", i + 1)))?;
            if !(-4.0..=4.0).contains(&v) {
                return Err(SentimentError::Lexicon(format!(
                    "line {}: valence {v} outside [-4, 4]",
                    i + 1
                )));
            }
            entries.insert(token.trim().to_owned(), v);
        }
        if entries.is_empty() {
            return Err(SentimentError::Lexicon("valence lexicon is empty".into()));
        }
        let boosters = BOOSTERS_UP
            .iter()
            .map(|w| (w.to_string(), B_INCR))
            .chain(BOOSTERS_DOWN.iter().map(|w| (w.to_string(), B_DECR)))
            .collect();
        Ok(SentimentLexicon {
            entries,
            boosters,
            negators: NEGATE.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled valence lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, SentimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SentimentError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Output of [`Vader::scores`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaderScores {
    pub compound: f64,
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
}

/// S / sqrt(S² + 15), clamped to [-1, 1].
pub fn normalize(score: f64) -> f64 {
    (score / (score * score + ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// At least one cased character and no lowercase ones.
fn is_upper(s: &str) -> bool {
    let mut cased = false;
    for c in s.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            cased = true;
        }
    }
    cased
}

fn strip_punc_if_word(token: &str) -> &str {
    let stripped = token.trim_matches(|c| PUNCTUATION.contains(c));
    if stripped.chars().count() <= 2 {
        token
    } else {
        stripped
    }
}

pub struct Vader {
    lexicon: SentimentLexicon,
}

struct Words<'a> {
    raw: Vec<&'a str>,
    lower: Vec<String>,
    cap_diff: bool,
}

impl Vader {
    pub fn new(lexicon: SentimentLexicon) -> Self {
        Vader { lexicon }
    }

    pub fn bundled() -> Self {
        Vader::new(SentimentLexicon::bundled())
    }

    fn in_lexicon(&self, w: &str) -> bool {
        self.lexicon.entries.contains_key(w)
    }

    fn negated(&self, w: &str) -> bool {
        self.lexicon.negators.iter().any(|n| n == w) || w.contains("n't")
    }

    fn scalar_inc_dec(&self, word: &str, lower: &str, valence: f64, cap_diff: bool) -> f64 {
        let Some(&b) = self.lexicon.boosters.get(lower) else {
            return 0.0;
        };
        let mut scalar = if valence < 0.0 { -b } else { b };
        if is_upper(word) && cap_diff {
            if valence > 0.0 {
                scalar += C_INCR;
            } else {
                scalar -= C_INCR;
            }
        }
        scalar
    }

    pub fn scores(&self, text: &str) -> VaderScores {
        let text = text.trim();
        let raw: Vec<&str> = text.split_whitespace().map(strip_punc_if_word).collect();
        if raw.is_empty() {
            return VaderScores {
                compound: 0.0,
                neg: 0.0,
                neu: 1.0,
                pos: 0.0,
            };
        }
        let upper = raw.iter().filter(|w| is_upper(w)).count();
        let words = Words {
            lower: raw.iter().map(|w| w.to_lowercase()).collect(),
            cap_diff: upper > 0 && upper < raw.len(),
            raw,
        };

        let n = words.raw.len();
        let mut sentiments = Vec::with_capacity(n);
        for i in 0..n {
            let lw = words.lower[i].as_str();
            if self.lexicon.boosters.contains_key(lw)
                || (i + 1 < n && lw == "kind" && words.lower[i + 1] == "of")
            {
                sentiments.push(0.0);
                continue;
            }
            sentiments.push(self.valence(&words, i));
        }
        but_check(&words.lower, &mut sentiments);
        score_valence(&sentiments, text)
    }

    fn valence(&self, words: &Words, i: usize) -> f64 {
        let item = words.raw[i];
        let lw = words.lower[i].as_str();
        let Some(&base) = self.lexicon.entries.get(lw) else {
            return 0.0;
        };
        let n = words.raw.len();
        let lower = |k: usize| words.lower[k].as_str();
        let mut valence = base;
        if lw == "no" && i != n - 1 && self.in_lexicon(lower(i + 1)) {
            valence = 0.0;
        }
        if (i > 0 && lower(i - 1) == "no")
            || (i > 1 && lower(i - 2) == "no")
            || (i > 2 && lower(i - 3) == "no" && matches!(lower(i - 1), "or" | "nor"))
        {
            valence = base * N_SCALAR;
        }
        if is_upper(item) && words.cap_diff {
            if valence > 0.0 {
                valence += C_INCR;
            } else {
                valence -= C_INCR;
            }
        }
        for start_i in 0..3 {
            if i > start_i && !self.in_lexicon(lower(i - (start_i + 1))) {
                let k = i - (start_i + 1);
                let mut s = self.scalar_inc_dec(words.raw[k], lower(k), valence, words.cap_diff);
                if start_i == 1 && s != 0.0 {
                    s *= 0.95;
                }
                if start_i == 2 && s != 0.0 {
                    s *= 0.9;
                }
                valence += s;
                valence = self.negation_check(valence, words, start_i, i);
                if start_i == 2 {
                    valence = special_idioms_check(valence, words, i, &self.lexicon.boosters);
                }
            }
        }
        least_check(valence, words, i, |w| self.in_lexicon(w))
    }

    fn negation_check(&self, valence: f64, words: &Words, start_i: usize, i: usize) -> f64 {
        let lower = |k: usize| words.lower[k].as_str();
        match start_i {
            0 => {
                if self.negated(lower(i - 1)) {
                    return valence * N_SCALAR;
                }
            }
            1 => {
                if lower(i - 2) == "never" && matches!(lower(i - 1), "so" | "this") {
                    return valence * 1.25;
                } else if lower(i - 2) == "without" && lower(i - 1) == "doubt" {
                    return valence;
                } else if self.negated(lower(i - 2)) {
                    return valence * N_SCALAR;
                }
            }
            _ => {
                if (lower(i - 3) == "never" && matches!(lower(i - 2), "so" | "this"))
                    || matches!(lower(i - 1), "so" | "this")
                {
                    return valence * 1.25;
                } else if lower(i - 3) == "without" && (lower(i - 2) == "doubt" || lower(i - 1) == "doubt") {
                    return valence;
                } else if self.negated(lower(i - 3)) {
                    return valence * N_SCALAR;
                }
            }
        }
        valence
    }
}

fn special_case(seq: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(k, _)| *k == seq).map(|(_, v)| *v)
}

fn special_idioms_check(mut valence: f64, words: &Words, i: usize, boosters: &HashMap<String, f64>) -> f64 {
    let w = |k: usize| words.lower[k].as_str();
    let onezero = format!("{} {}", w(i - 1), w(i));
    let twoonezero = format!("{} {} {}", w(i - 2), w(i - 1), w(i));
    let twoone = format!("{} {}", w(i - 2), w(i - 1));
    let threetwoone = format!("{} {} {}", w(i - 3), w(i - 2), w(i - 1));
    let threetwo = format!("{} {}", w(i - 3), w(i - 2));
    for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
        if let Some(v) = special_case(seq) {
            valence = v;
            break;
        }
    }
    let n = words.lower.len();
    if n - 1 > i {
        if let Some(v) = special_case(&format!("{} {}", w(i), w(i + 1))) {
            valence = v;
        }
    }
    if n - 1 > i + 1 {
        if let Some(v) = special_case(&format!("{} {} {}", w(i), w(i + 1), w(i + 2))) {
            valence = v;
        }
    }
    for gram in [&threetwoone, &threetwo, &twoone] {
        if let Some(b) = boosters.get(gram.as_str()) {
            valence += b;
        }
    }
    valence
}

fn least_check(valence: f64, words: &Words, i: usize, in_lexicon: impl Fn(&str) -> bool) -> f64 {
    let w = |k: usize| words.lower[k].as_str();
    if i > 1 && !in_lexicon(w(i - 1)) && w(i - 1) == "least" {
        if w(i - 2) != "at" && w(i - 2) != "very" {
            return valence * N_SCALAR;
        }
    } else if i > 0 && !in_lexicon(w(i - 1)) && w(i - 1) == "least" {
        return valence * N_SCALAR;
    }
    valence
}

/// Halves sentiment before the first "but" and boosts it by half after.
/// Reproduces the reference lookup by value: each position rewrites the
/// first entry equal to its current value.
fn but_check(lower: &[String], sentiments: &mut [f64]) {
    let Some(bi) = lower.iter().position(|w| w == "but") else {
        return;
    };
    for j in 0..sentiments.len() {
        let v = sentiments[j];
        let si = sentiments.iter().position(|x| *x == v).unwrap_or(j);
        if si < bi {
            sentiments[si] = v * 0.5;
        } else if si > bi {
            sentiments[si] = v * 1.5;
        }
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep = text.matches('!').count().min(4) as f64 * 0.292;
    let qm_count = text.matches('?').count();
    let qm = match qm_count {
        0 | 1 => 0.0,
        2 | 3 => qm_count as f64 * 0.18,
        _ => 0.96,
    };
    ep + qm
}

fn score_valence(sentiments: &[f64], text: &str) -> VaderScores {
    let mut sum_s: f64 = sentiments.iter().sum();
    let amp = punctuation_emphasis(text);
    if sum_s > 0.0 {
        sum_s += amp;
    } else if sum_s < 0.0 {
        sum_s -= amp;
    }
    let compound = normalize(sum_s);

    let (mut pos_sum, mut neg_sum, mut neu_count) = (0.0f64, 0.0f64, 0usize);
    for &s in sentiments {
        if s > 0.0 {
            pos_sum += s + 1.0;
        }
        if s < 0.0 {
            neg_sum += s - 1.0;
        }
        if s == 0.0 {
            neu_count += 1;
        }
    }
    if pos_sum > neg_sum.abs() {
        pos_sum += amp;
    } else if pos_sum < neg_sum.abs() {
        neg_sum -= amp;
    }
    let total = pos_sum + neg_sum.abs() + neu_count as f64;
    VaderScores {
        compound,
        neg: (neg_sum / total).abs(),
        neu: (neu_count as f64 / total).abs(),
        pos: (pos_sum / total).abs(),
    }
}
