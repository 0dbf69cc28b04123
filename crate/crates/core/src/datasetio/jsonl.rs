//! Sealed line-delimited JSON.
//!
//! One compact JSON object per line, followed by a final seal line
//! `{"seal":{"crc32":"<8 hex>","records":<n>}}` whose CRC covers every byte
//! before it. Readers also require each record line to equal its own
//! canonical re-serialization, so any edit that survives parsing is caught.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonlError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line} is not in canonical form")]
    NonCanonical { line: usize },
    #[error("missing seal line")]
    Unsealed,
    #[error("seal expects {expected} records, found {found}")]
    RecordCount { expected: u64, found: u64 },
    #[error("checksum mismatch: seal {expected}, content {actual}")]
    Checksum { expected: String, actual: String },
    #[error("invalid UTF-8 at byte {0}")]
    Utf8(usize),
    #[error("serialize: {0}")]
    Serialize(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SealLine {
    seal: Seal,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Seal {
    crc32: String,
    records: u64,
}

pub fn write_sealed<T: Serialize>(records: &[T]) -> Result<String, JsonlError> {
    let mut body = String::new();
    for r in records {
        body.push_str(&serde_json::to_string(r).map_err(|e| JsonlError::Serialize(e.to_string()))?);
        body.push('\n');
    }
    let seal = SealLine {
        seal: Seal {
            crc32: format!("{:08x}", crc32fast::hash(body.as_bytes())),
            records: records.len() as u64,
        },
    };
    body.push_str(&serde_json::to_string(&seal).expect("plain struct"));
    body.push('\n');
    Ok(body)
}

pub fn read_sealed<T: Serialize + DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    let body = text.strip_suffix('\n').ok_or(JsonlError::Unsealed)?;
    let (records_part, seal_line) = match body.rfind('\n') {
        Some(i) => (&text[..i + 1], &body[i + 1..]),
        None => ("", body),
    };
    let lines: Vec<&str> = records_part.lines().collect();
    let seal: SealLine = serde_json::from_str(seal_line).map_err(|_| JsonlError::Unsealed)?;
    if serde_json::to_string(&seal).expect("plain struct") != seal_line {
        return Err(JsonlError::NonCanonical { line: lines.len() + 1 });
    }
    let actual = format!("{:08x}", crc32fast::hash(records_part.as_bytes()));
    if actual != seal.seal.crc32 {
        return Err(JsonlError::Checksum {
            expected: seal.seal.crc32,
            actual,
        });
    }
    if lines.len() as u64 != seal.seal.records {
        return Err(JsonlError::RecordCount {
            expected: seal.seal.records,
            found: lines.len() as u64,
        });
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let v: T = serde_json::from_str(l).map_err(|e| JsonlError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if serde_json::to_string(&v).map_err(|e| JsonlError::Serialize(e.to_string()))? != *l {
                return Err(JsonlError::NonCanonical { line: i + 1 });
            }
            Ok(v)
        })
        .collect()
}

pub fn read_sealed_bytes<T: Serialize + DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, JsonlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| JsonlError::Utf8(e.valid_up_to()))?;
    read_sealed(text)
}
