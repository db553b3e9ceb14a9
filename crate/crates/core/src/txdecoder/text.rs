//! Text detection over raw payload bytes.

use super::script::{Instruction, Instructions};

/// Rule deciding whether a decoded byte run counts as text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Printability {
    /// Minimum number of characters after trimming surrounding whitespace.
    pub min_chars: usize,
    /// Minimum fraction of text characters.
    pub min_ratio: f64,
}

impl Default for Printability {
    fn default() -> Self {
        Printability {
            min_chars: 2,
            min_ratio: 0.9,
        }
    }
}

/// Printable ASCII (including tab/newline/carriage return) or a non-ASCII
/// letter or digit.
pub fn is_text_char(c: char) -> bool {
    if c.is_ascii() {
        matches!(c, ' '..='~' | '\t' | '\n' | '\r')
    } else {
        c.is_alphanumeric()
    }
}

fn trim_text(s: &str) -> &str {
    s.trim_matches(|c: char| c.is_whitespace() || c.is_control())
}

impl Printability {
    /// Returns the trimmed string when it qualifies as text.
    pub fn accept<'a>(&self, s: &'a str) -> Option<&'a str> {
        let t = trim_text(s);
        let total = t.chars().count();
        if total < self.min_chars.max(1) {
            return None;
        }
        let good = t.chars().filter(|c| is_text_char(*c)).count();
        if (good as f64) < self.min_ratio * total as f64 {
            return None;
        }
        Some(t)
    }

    /// Whole-payload check: strips trailing NUL padding, requires valid UTF-8
    /// and applies the ratio rule to the entire string.
    pub fn whole_payload(&self, bytes: &[u8]) -> Option<String> {
        let end = bytes.iter().rposition(|b| *b != 0).map_or(0, |i| i + 1);
        let s = std::str::from_utf8(&bytes[..end]).ok()?;
        self.accept(s).map(str::to_owned)
    }

    /// Longest maximal run of text characters inside `bytes` that passes the
    /// rule. Invalid UTF-8 sequences break runs. Ties go to the earliest run.
    pub fn longest_run(&self, bytes: &[u8]) -> Option<(usize, String)> {
        let mut best: Option<(usize, usize, String)> = None;
        let mut consider = |start: usize, run: &str| {
            if let Some(t) = self.accept(run) {
                let len = t.chars().count();
                if best.as_ref().is_none_or(|(_, l, _)| len > *l) {
                    best = Some((start, len, t.to_owned()));
                }
            }
        };

        let mut offset = 0usize;
        let mut run = String::new();
        let mut run_start = 0usize;
        for chunk in bytes.utf8_chunks() {
            for (i, c) in chunk.valid().char_indices() {
                if is_text_char(c) {
                    if run.is_empty() {
                        run_start = offset + i;
                    }
                    run.push(c);
                } else if !run.is_empty() {
                    consider(run_start, &run);
                    run.clear();
                }
            }
            offset += chunk.valid().len();
            if !chunk.invalid().is_empty() && !run.is_empty() {
                consider(run_start, &run);
                run.clear();
            }
            offset += chunk.invalid().len();
        }
        if !run.is_empty() {
            consider(run_start, &run);
        }
        best.map(|(start, _, text)| (start, text))
    }
}

/// Splits a coinbase script into candidate regions: the data of each leading
/// push, then everything from the first byte that does not parse as a push.
fn coinbase_regions(script: &[u8]) -> Vec<(usize, &[u8])> {
    let mut regions = Vec::new();
    let mut it = Instructions::new(script);
    loop {
        let pos = it.position();
        match it.next() {
            None => break,
            Some(Ok(Instruction::Push { data, .. })) => {
                if !data.is_empty() {
                    regions.push((it.position() - data.len(), data));
                }
            }
            Some(Ok(Instruction::Op { .. })) | Some(Err(_)) => {
                regions.push((pos, &script[pos..]));
                break;
            }
        }
    }
    regions
}

/// Longest printable run inside a coinbase scriptSig, skipping the binary
/// height and extra-nonce pushes that precede miner tags.
pub fn extract_coinbase_text(script_sig: &[u8], rule: &Printability) -> Option<String> {
    let mut best: Option<(usize, usize, String)> = None;
    for (base, region) in coinbase_regions(script_sig) {
        if let Some((off, text)) = rule.longest_run(region) {
            let len = text.chars().count();
            let start = base + off;
            let better = match &best {
                None => true,
                Some((b_start, b_len, _)) => len > *b_len || (len == *b_len && start < *b_start),
            };
            if better {
                best = Some((start, len, text));
            }
        }
    }
    best.map(|(_, _, t)| t)
}

/// Decodes a Base58 address and returns its payload (version byte and 4-byte
/// checksum dropped) when it reads as text. The checksum is not verified:
/// burn addresses built from arbitrary bytes cannot carry a valid one.
pub fn extract_ascii_address(address: &str, rule: &Printability) -> Option<String> {
    let bytes = bs58::decode(address.trim()).into_vec().ok()?;
    if bytes.len() < 1 + 2 + 4 {
        return None;
    }
    rule.whole_payload(&bytes[1..bytes.len() - 4])
}

/// Ethereum transaction input data that is itself UTF-8 text.
pub fn extract_eth_calldata_text(data: &[u8], rule: &Printability) -> Option<String> {
    if data.is_empty() {
        return None;
    }
    rule.whole_payload(data)
}

/// Text carried inside public-key pushes (P2PK or bare multisig). The SEC
/// prefix byte of each key is skipped.
pub fn extract_pubkey_text(keys: &[&[u8]], rule: &Printability) -> Option<String> {
    let mut joined = Vec::with_capacity(keys.len() * 65);
    for key in keys {
        let body = match key.first() {
            Some(0x02..=0x04) => &key[1..],
            _ => key,
        };
        joined.extend_from_slice(body);
    }
    rule.whole_payload(&joined)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENESIS_SCRIPT_SIG: &str = "04ffff001d0104455468652054696d65732030332f4a616e2f32303039204368616e63656c6c6f72206f6e206272696e6b206f66207365636f6e64206261696c6f757420666f722062616e6b73";

    fn hex(s: &str) -> Vec<u8> {
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
            .collect()
    }

    #[test]
    fn genesis_message() {
        let text = extract_coinbase_text(&hex(GENESIS_SCRIPT_SIG), &Printability::default());
        assert_eq!(
            text.as_deref(),
            Some("The Times 03/Jan/2009 Chancellor on brink of second bailout for banks")
        );
    }

    #[test]
    fn zero_bytes_have_no_text() {
        assert_eq!(extract_coinbase_text(&[0u8; 40], &Printability::default()), None);
        assert_eq!(extract_coinbase_text(&[], &Printability::default()), None);
    }

    #[test]
    fn pool_tag_behind_binary_prefix() {
        // BIP34 height push, a 4-byte push, the merged-mining magic as raw
        // bytes, then the tag itself.
        let mut script = hex("0300350c04a1b2c3d4fabe6d6d");
        script.extend_from_slice(&[0x9f, 0x01, 0xee]);
        script.extend_from_slice(b"/Foundry USA Pool/");
        script.extend_from_slice(&hex("ff00a1"));
        let text = extract_coinbase_text(&script, &Printability::default());
        assert_eq!(text.as_deref(), Some("/Foundry USA Pool/"));
    }

    #[test]
    fn pool_tag_as_push() {
        let mut script = hex("0300350c");
        script.push(18);
        script.extend_from_slice(b"/Foundry USA Pool/");
        script.extend_from_slice(&hex("08deadbeefcafebabe"));
        let text = extract_coinbase_text(&script, &Printability::default());
        assert_eq!(text.as_deref(), Some("/Foundry USA Pool/"));
    }

    #[test]
    fn ties_prefer_earliest_run() {
        let mut script = vec![2];
        script.extend_from_slice(b"ab");
        script.push(2);
        script.extend_from_slice(b"cd");
        assert_eq!(
            extract_coinbase_text(&script, &Printability::default()).as_deref(),
            Some("ab")
        );
    }

    #[test]
    fn calldata() {
        let rule = Printability::default();
        assert_eq!(
            extract_eth_calldata_text(b"hodl on comrade!", &rule).as_deref(),
            Some("hodl on comrade!")
        );
        assert_eq!(extract_eth_calldata_text(b"", &rule), None);
        let mut abi = hex("a9059cbb");
        abi.extend_from_slice(&hex(
            "8f3a9c2b7e11d0c4a5b6f7e8091a2b3c4d5e6f708192a3b4c5d6e7f8091a2b3c",
        ));
        assert_eq!(extract_eth_calldata_text(&abi, &rule), None);
        assert_eq!(
            extract_eth_calldata_text(b"gm frens\0\0\0\0", &rule).as_deref(),
            Some("gm frens")
        );
    }

    #[test]
    fn ratio_rule() {
        let rule = Printability::default();
        // 9 of 10 characters printable passes, 8 of 10 fails
        assert!(rule.accept("abcd\u{1}efghi").is_some());
        assert!(rule.accept("abcd\u{1}efg\u{2}h").is_none());
        assert!(rule.accept("a").is_none());
        assert!(rule.accept("  a \n").is_none());
        assert_eq!(rule.accept("  héllo "), Some("héllo"));
    }

    #[test]
    fn genesis_address_is_not_text() {
        let rule = Printability::default();
        assert_eq!(
            extract_ascii_address("1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNa", &rule),
            None
        );
        assert_eq!(extract_ascii_address("0invalid", &rule), None);
        assert_eq!(extract_ascii_address("", &rule), None);
    }
}
