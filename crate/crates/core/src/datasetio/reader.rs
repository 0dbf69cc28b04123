//! Bounds-checked little-endian reader shared by the binary formats.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReadError {
    #[error("bad magic at offset {offset}")]
    BadMagic { offset: usize },
    #[error("unsupported version {found} at offset {offset} (expected {expected})")]
    Version { found: u16, expected: u16, offset: usize },
    #[error("truncated at offset {offset}: {needed} more bytes needed")]
    Truncated { offset: usize, needed: usize },
    #[error("{section} checksum mismatch at offset {offset}")]
    Checksum { section: String, offset: usize },
    #[error("{extra} unexpected trailing bytes at offset {offset}")]
    Trailing { offset: usize, extra: usize },
    #[error("invalid UTF-8 at offset {offset}")]
    Utf8 { offset: usize },
}

pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ReadError> {
        let left = self.bytes.len() - self.pos;
        if n > left {
            return Err(ReadError::Truncated {
                offset: self.pos,
                needed: n - left,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ReadError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, ReadError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, ReadError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, ReadError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, ReadError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32, ReadError> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn magic(&mut self, magic: &[u8]) -> Result<(), ReadError> {
        let offset = self.pos;
        match self.take(magic.len()) {
            Ok(m) if m == magic => Ok(()),
            _ => Err(ReadError::BadMagic { offset }),
        }
    }

    pub fn version(&mut self, expected: u16) -> Result<(), ReadError> {
        let offset = self.pos;
        let found = self.u16()?;
        if found == expected {
            Ok(())
        } else {
            Err(ReadError::Version { found, expected, offset })
        }
    }

    pub fn string_u16(&mut self) -> Result<String, ReadError> {
        let len = self.u16()? as usize;
        let offset = self.pos;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| ReadError::Utf8 { offset })
    }

    /// Reads a u32 CRC and checks it against `bytes[start..]` read so far.
    pub fn check_crc(&mut self, section: &str, start: usize) -> Result<(), ReadError> {
        let covered = &self.bytes[start..self.pos];
        let offset = self.pos;
        let stored = self.u32()?;
        if crc32fast::hash(covered) == stored {
            Ok(())
        } else {
            Err(ReadError::Checksum {
                section: section.into(),
                offset,
            })
        }
    }

    pub fn finish(&self) -> Result<(), ReadError> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(ReadError::Trailing {
                offset: self.pos,
                extra: self.bytes.len() - self.pos,
            })
        }
    }
}
