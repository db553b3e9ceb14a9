//! Minimal Bitcoin script walking: data pushes and the handful of output
//! templates that can carry arbitrary bytes.

use thiserror::Error;

pub const OP_0: u8 = 0x00;
pub const OP_PUSHDATA1: u8 = 0x4c;
pub const OP_PUSHDATA2: u8 = 0x4d;
pub const OP_PUSHDATA4: u8 = 0x4e;
pub const OP_RETURN: u8 = 0x6a;
pub const OP_DUP: u8 = 0x76;
pub const OP_EQUAL: u8 = 0x87;
pub const OP_EQUALVERIFY: u8 = 0x88;
pub const OP_HASH160: u8 = 0xa9;
pub const OP_CHECKSIG: u8 = 0xac;
pub const OP_CHECKMULTISIG: u8 = 0xae;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("push at offset {offset} declares {declared} bytes but only {available} remain")]
    TruncatedPush {
        offset: usize,
        declared: usize,
        available: usize,
    },
}

/// One parsed script element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction<'a> {
    /// Data push (including the empty push of `OP_0`).
    Push { offset: usize, data: &'a [u8] },
    /// Any non-push opcode.
    Op { offset: usize, opcode: u8 },
}

/// Iterator over script instructions. Yields an error once on a truncated
/// push and then stops.
pub struct Instructions<'a> {
    script: &'a [u8],
    pos: usize,
    failed: bool,
}

impl<'a> Instructions<'a> {
    pub fn new(script: &'a [u8]) -> Self {
        Instructions {
            script,
            pos: 0,
            failed: false,
        }
    }

    /// Byte offset of the next unread instruction.
    pub fn position(&self) -> usize {
        self.pos
    }

    fn take(&mut self, offset: usize, len: usize) -> Result<&'a [u8], ScriptError> {
        let available = self.script.len() - self.pos;
        if len > available {
            self.failed = true;
            return Err(ScriptError::TruncatedPush {
                offset,
                declared: len,
                available,
            });
        }
        let data = &self.script[self.pos..self.pos + len];
        self.pos += len;
        Ok(data)
    }

    fn read_len(&mut self, offset: usize, width: usize) -> Result<usize, ScriptError> {
        let bytes = self.take(offset, width)?;
        let mut len = 0usize;
        for (i, b) in bytes.iter().enumerate() {
            len |= (*b as usize) << (8 * i);
        }
        Ok(len)
    }
}

impl<'a> Iterator for Instructions<'a> {
    type Item = Result<Instruction<'a>, ScriptError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.pos >= self.script.len() {
            return None;
        }
        let offset = self.pos;
        let opcode = self.script[offset];
        self.pos += 1;
        let result = match opcode {
            OP_0 => Ok(Instruction::Push {
                offset,
                data: &self.script[offset + 1..offset + 1],
            }),
            0x01..=0x4b => self
                .take(offset, opcode as usize)
                .map(|data| Instruction::Push { offset, data }),
            OP_PUSHDATA1 | OP_PUSHDATA2 | OP_PUSHDATA4 => {
                let width = match opcode {
                    OP_PUSHDATA1 => 1,
                    OP_PUSHDATA2 => 2,
                    _ => 4,
                };
                self.read_len(offset, width)
                    .and_then(|len| self.take(offset, len))
                    .map(|data| Instruction::Push { offset, data })
            }
            _ => Ok(Instruction::Op { offset, opcode }),
        };
        Some(result)
    }
}

/// Returns the concatenated pushed data of a nulldata (`OP_RETURN`) script,
/// or `None` when the script is not nulldata. Non-push opcodes after
/// `OP_RETURN` carry no data and are skipped.
pub fn extract_op_return(script: &[u8]) -> Result<Option<Vec<u8>>, ScriptError> {
    if script.first() != Some(&OP_RETURN) {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(script.len());
    for ins in Instructions::new(&script[1..]) {
        if let Instruction::Push { data, .. } = ins? {
            out.extend_from_slice(data);
        }
    }
    Ok(Some(out))
}

/// Output templates whose payload bytes may hold text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputTemplate<'a> {
    NullData,
    /// P2PKH or P2SH: the 20-byte hash an address is built from.
    AddressHash {
        version: u8,
        hash: &'a [u8],
    },
    /// P2PK or bare multisig: the raw public key pushes.
    PubKeys(Vec<&'a [u8]>),
    Other,
}

pub fn classify_output(script: &[u8]) -> OutputTemplate<'_> {
    match script {
        [OP_RETURN, ..] => OutputTemplate::NullData,
        [OP_DUP, OP_HASH160, 0x14, hash @ .., OP_EQUALVERIFY, OP_CHECKSIG] if hash.len() == 20 => {
            OutputTemplate::AddressHash { version: 0x00, hash }
        }
        [OP_HASH160, 0x14, hash @ .., OP_EQUAL] if hash.len() == 20 => {
            OutputTemplate::AddressHash { version: 0x05, hash }
        }
        [len @ (0x21 | 0x41), key @ .., OP_CHECKSIG] if key.len() == *len as usize => {
            OutputTemplate::PubKeys(vec![key])
        }
        [first, .., last]
            if script.len() >= 4 && *last == OP_CHECKMULTISIG && (0x51..=0x60).contains(first) =>
        {
            let body = &script[1..script.len() - 2];
            let mut keys = Vec::new();
            for ins in Instructions::new(body) {
                match ins {
                    Ok(Instruction::Push { data, .. }) if !data.is_empty() => keys.push(data),
                    _ => return OutputTemplate::Other,
                }
            }
            if keys.is_empty() {
                OutputTemplate::Other
            } else {
                OutputTemplate::PubKeys(keys)
            }
        }
        _ => OutputTemplate::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(s: &str) -> Vec<u8> {
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
            .collect()
    }

    #[test]
    fn direct_push() {
        let data = extract_op_return(&hex("6a0b68656c6c6f20776f726c64")).unwrap();
        assert_eq!(data.as_deref(), Some(&b"hello world"[..]));
    }

    #[test]
    fn pushdata1() {
        let data = extract_op_return(&hex("6a4c0548656c6c6f")).unwrap();
        assert_eq!(data.as_deref(), Some(&b"Hello"[..]));
    }

    #[test]
    fn pushdata2_and_4() {
        let mut s = vec![OP_RETURN, OP_PUSHDATA2, 0x03, 0x00];
        s.extend_from_slice(b"abc");
        s.extend_from_slice(&[OP_PUSHDATA4, 0x02, 0, 0, 0]);
        s.extend_from_slice(b"de");
        assert_eq!(extract_op_return(&s).unwrap().unwrap(), b"abcde");
    }

    #[test]
    fn p2pkh_is_not_nulldata() {
        let script = hex("76a91462e907b15cbf27d5425399ebf6f0fb50ebb88f1888ac");
        assert_eq!(extract_op_return(&script).unwrap(), None);
        assert!(matches!(
            classify_output(&script),
            OutputTemplate::AddressHash { version: 0, .. }
        ));
    }

    #[test]
    fn truncated_push_is_malformed() {
        let err = extract_op_return(&hex("6a0b68656c")).unwrap_err();
        assert_eq!(
            err,
            ScriptError::TruncatedPush {
                offset: 0,
                declared: 11,
                available: 3
            }
        );
        assert!(extract_op_return(&hex("6a4c")).is_err());
        assert!(extract_op_return(&hex("6a4d0100")).is_err());
    }

    #[test]
    fn bare_op_return_is_empty() {
        assert_eq!(extract_op_return(&[OP_RETURN]).unwrap(), Some(vec![]));
    }

    #[test]
    fn classifies_p2pk_and_multisig() {
        let mut p2pk = vec![0x21];
        p2pk.extend_from_slice(&[0x02; 33]);
        p2pk.push(OP_CHECKSIG);
        assert!(matches!(classify_output(&p2pk), OutputTemplate::PubKeys(k) if k.len() == 1));

        let mut ms = vec![0x51];
        for _ in 0..3 {
            ms.push(0x21);
            ms.extend_from_slice(&[0x03; 33]);
        }
        ms.extend_from_slice(&[0x53, OP_CHECKMULTISIG]);
        assert!(matches!(classify_output(&ms), OutputTemplate::PubKeys(k) if k.len() == 3));

        let p2sh = hex("a914748284390f9e263a4b766a75d0633c50426eb87587");
        assert!(matches!(
            classify_output(&p2sh),
            OutputTemplate::AddressHash { version: 5, .. }
        ));
        assert_eq!(classify_output(&[0x51]), OutputTemplate::Other);
    }
}
