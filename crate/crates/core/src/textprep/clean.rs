//! The eight-step cleanup applied to every decoded text.

use std::sync::LazyLock;

use regex::Regex;

static ESCAPE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\x[0-9a-fA-F]{2}|\\[ntr\\]").unwrap());
static HEX_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^0[xX][0-9a-fA-F]{16,}$").unwrap());
static URL_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:[a-z][a-z0-9+.\-]*://|www\.)").unwrap());

/// Step thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cleaner {
    /// Longest allowed run of non-whitespace characters.
    pub max_run: usize,
    /// Minimum length of a surviving text, in characters.
    pub min_len: usize,
}

impl Default for Cleaner {
    fn default() -> Self {
        Cleaner {
            max_run: 25,
            min_len: 2,
        }
    }
}

/// Step 1: unwraps a `b'…'` / `b"…"` byte-string repr and removes the escape
/// sequences it leaves behind.
pub fn strip_artifacts(s: &str) -> String {
    let t = s.trim();
    let inner = ["b'", "b\""]
        .iter()
        .zip(['\'', '"'])
        .find_map(|(prefix, close)| t.strip_prefix(prefix).and_then(|rest| rest.strip_suffix(close)))
        .unwrap_or(t);
    ESCAPE
        .replace_all(inner, |caps: &regex::Captures| match &caps[0] {
            "\\n" | "\\t" | "\\r" => " ",
            _ => "",
        })
        .into_owned()
}

/// Step 2: control characters, JSON structural punctuation when the whole
/// string is a JSON object or array, and whitespace-delimited `0x` tokens of
/// 16 or more hex digits.
pub fn remove_noise(s: &str) -> String {
    let s: String = s.chars().filter(|c| !c.is_control()).collect();
    let is_json = matches!(
        serde_json::from_str::<serde_json::Value>(s.trim()),
        Ok(serde_json::Value::Object(_) | serde_json::Value::Array(_))
    );
    let s = if is_json {
        s.chars()
            .map(|c| if "{}[]\":,".contains(c) { ' ' } else { c })
            .collect()
    } else {
        s
    };
    drop_hex_tokens(&s)
}

fn drop_hex_tokens(s: &str) -> String {
    s.split_whitespace()
        .filter(|tok| !HEX_TOKEN.is_match(tok))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Step 3: base64 padding at the end of the text.
pub fn ends_with_base64_padding(s: &str) -> bool {
    s.trim_end().ends_with("==")
}

/// Step 4: drops whitespace-delimited tokens that start with a URL scheme
/// or `www.`.
pub fn remove_urls(s: &str) -> String {
    s.split_whitespace()
        .filter(|tok| !URL_TOKEN.is_match(tok))
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Step 5: deletes every character other than letters, digits and
/// whitespace; an apostrophe survives only between two letters. Whitespace is
/// collapsed afterwards.
pub fn remove_symbols(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || c.is_whitespace()
            || (is_apostrophe(c)
                && i > 0
                && chars[i - 1].is_alphabetic()
                && chars.get(i + 1).is_some_and(|n| n.is_alphabetic()));
        if keep {
            out.push(c);
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Step 6: deletes digit runs that have a letter immediately on both sides.
pub fn remove_sandwiched_digits(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_numeric() {
            let start = i;
            while i < chars.len() && chars[i].is_numeric() {
                i += 1;
            }
            let before = start > 0 && chars[start - 1].is_alphabetic();
            let after = i < chars.len() && chars[i].is_alphabetic();
            if !(before && after) {
                out.extend(&chars[start..i]);
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Step 7 predicate.
pub fn has_long_run(s: &str, max_run: usize) -> bool {
    s.split_whitespace().any(|tok| tok.chars().count() > max_run)
}

/// Step 8 predicate.
pub fn too_short_or_numeric(s: &str, min_len: usize) -> bool {
    let t = s.trim();
    t.chars().count() < min_len || t.chars().all(|c| c.is_numeric() || c.is_whitespace())
}

impl Cleaner {
    /// Full cleanup; `None` when any rejection step fires.
    pub fn clean(&self, raw: &str) -> Option<String> {
        let s = strip_artifacts(raw);
        let s = remove_noise(&s);
        if ends_with_base64_padding(&s) {
            return None;
        }
        let s = remove_urls(&s);
        let lowered = self.finish(&s)?.to_lowercase();
        // Lowercasing can split a letter into letter + combining mark
        // (U+0130), so the character-level steps run once more.
        self.finish(&lowered)
    }

    fn finish(&self, s: &str) -> Option<String> {
        let s = remove_symbols(s);
        let s = remove_sandwiched_digits(&s);
        if has_long_run(&s, self.max_run) {
            return None;
        }
        // Symbol removal can expose hex tokens that were wrapped in
        // punctuation; they are dropped only after the run-length check.
        let s = drop_hex_tokens(&s);
        if too_short_or_numeric(&s, self.min_len) {
            return None;
        }
        Some(s)
    }

    /// Steps 1 and 8 only, case preserved. Used for the raw-sentiment corpus.
    pub fn minimal(&self, raw: &str) -> Option<String> {
        let s = strip_artifacts(raw);
        let s = s.trim();
        if too_short_or_numeric(s, self.min_len) {
            return None;
        }
        Some(s.to_owned())
    }
}

/// [`Cleaner::clean`] with default thresholds.
pub fn clean_text(raw: &str) -> Option<String> {
    Cleaner::default().clean(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_string_wrapper() {
        assert_eq!(clean_text("b'Hello World'").as_deref(), Some("hello world"));
        assert_eq!(strip_artifacts("b\"gm\\nfrens\""), "gm frens");
        assert_eq!(strip_artifacts("b'\\x00\\x01text'"), "text");
        assert_eq!(strip_artifacts("plain"), "plain");
    }

    #[test]
    fn base64_padding() {
        assert_eq!(clean_text("aGVsbG8gd29ybGQ=="), None);
        assert!(ends_with_base64_padding("abc== "));
        assert!(!ends_with_base64_padding("abc="));
    }

    #[test]
    fn long_runs() {
        assert_eq!(
            clean_text("SWAP:ETH.ETH:0xff6763c12c4cc54b2fd4115690d7792ecb78bd55:242384111"),
            None
        );
        let ok = "a".repeat(25);
        assert!(!has_long_run(&ok, 25));
        assert!(has_long_run(&format!("{ok}a"), 25));
    }

    #[test]
    fn numbers_only() {
        assert_eq!(clean_text("42"), None);
        assert_eq!(clean_text("12 345"), None);
        assert_eq!(clean_text("x"), None);
    }

    #[test]
    fn noise_removal() {
        assert_eq!(remove_noise("a\u{7}b"), "ab");
        assert_eq!(remove_noise(r#"{"msg":"to the moon"}"#), "msg to the moon");
        assert_eq!(
            remove_noise("send 0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed now"),
            "send now"
        );
        assert_eq!(remove_noise("0xabc is short"), "0xabc is short");
        assert_eq!(clean_text("(0xabcdefabcdefabcdef) ok").as_deref(), Some("ok"));
    }

    #[test]
    fn urls() {
        assert_eq!(
            remove_urls("see https://bitcoin.org/en now and www.example.com"),
            "see now and"
        );
        assert_eq!(clean_text("http://x.io").as_deref(), None);
    }

    #[test]
    fn symbols_and_apostrophes() {
        assert_eq!(remove_symbols("don't 'quote' it's!"), "don't quote it's");
        assert_eq!(remove_symbols("100 % BTC / 0 % USD"), "100 BTC 0 USD");
        assert_eq!(remove_symbols("a-b_c"), "abc");
    }

    #[test]
    fn sandwiched_digits() {
        assert_eq!(
            remove_sandwiched_digits("b1tcoin 2020 a1 1a"),
            "btcoin 2020 a1 1a"
        );
        assert_eq!(remove_sandwiched_digits("x123y"), "xy");
    }

    #[test]
    fn minimal_keeps_case() {
        let c = Cleaner::default();
        assert_eq!(c.minimal("b'Buy BTC!!'").as_deref(), Some("Buy BTC!!"));
        assert_eq!(c.minimal("7"), None);
    }

    #[test]
    fn dotted_capital_i_is_stable() {
        let once = clean_text("İstanbul coin").unwrap();
        assert_eq!(clean_text(&once).as_deref(), Some(once.as_str()));
    }
}
