//! Record framing shared by scheme logs, snapshots and the registry journal:
//! 4-byte big-endian payload length, payload, 4-byte big-endian CRC-32 of the
//! payload.

const HEADER: usize = 4;
const TRAILER: usize = 4;

pub fn encode(payload: &[u8]) -> Vec<u8> {
    let len = u32::try_from(payload.len()).expect("record larger than 4 GiB");
    let mut out = Vec::with_capacity(HEADER + payload.len() + TRAILER);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_be_bytes());
    out
}

#[derive(Debug, PartialEq, Eq)]
pub struct Scan<'a> {
    pub payloads: Vec<&'a [u8]>,
    /// Length of the prefix made of complete, verified records.
    pub valid_len: usize,
    /// Bytes after `valid_len` that do not form a complete record.
    pub torn: bool,
}

/// A complete record whose checksum does not match. `index` is 0-based.
#[derive(Debug, PartialEq, Eq)]
pub struct BadChecksum {
    pub index: usize,
}

/// Splits `bytes` into records. An incomplete record at the end is reported
/// as torn rather than as an error: it is what an interrupted append leaves.
pub fn scan(bytes: &[u8]) -> Result<Scan<'_>, BadChecksum> {
    let mut payloads = Vec::new();
    let mut pos = 0;
    loop {
        let rest = &bytes[pos..];
        if rest.is_empty() {
            return Ok(Scan { payloads, valid_len: pos, torn: false });
        }
        if rest.len() < HEADER {
            return Ok(Scan { payloads, valid_len: pos, torn: true });
        }
        let len = u32::from_be_bytes(rest[..HEADER].try_into().unwrap()) as usize;
        let Some(total) = len.checked_add(HEADER + TRAILER).filter(|t| *t <= rest.len()) else {
            return Ok(Scan { payloads, valid_len: pos, torn: true });
        };
        let payload = &rest[HEADER..HEADER + len];
        let crc = u32::from_be_bytes(rest[HEADER + len..total].try_into().unwrap());
        if crc32fast::hash(payload) != crc {
            return Err(BadChecksum { index: payloads.len() });
        }
        payloads.push(payload);
        pos += total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_torn_tail() {
        let mut buf = encode(b"one");
        buf.extend(encode(b"two"));
        let full = scan(&buf).unwrap();
        assert_eq!(full.payloads, [b"one".as_slice(), b"two".as_slice()]);
        assert!(!full.torn);
        for cut in 12..buf.len() {
            let s = scan(&buf[..cut]).unwrap();
            assert_eq!(s.payloads.len(), 1);
            assert_eq!(s.valid_len, 11);
            assert!(s.torn);
        }
    }

    #[test]
    fn flipped_payload_bit_is_detected() {
        let mut buf = encode(b"one");
        buf.extend(encode(b"two"));
        buf[11 + 5] ^= 0x01;
        assert_eq!(scan(&buf), Err(BadChecksum { index: 1 }));
    }
}
