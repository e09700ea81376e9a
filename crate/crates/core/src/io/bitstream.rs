//! Bitstream files.
//!
//! Binary layout, all integers little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `MQRNGBIT`                       |
//! | 8      | 4    | format version (1)                     |
//! | 12     | ⌈n/8⌉| payload, MSB-first, zero-padded        |
//! | end-8  | 8    | bit count `n`                          |
//!
//! ASCII files hold one `'0'`/`'1'` character per bit, 64 per line, every
//! line newline-terminated.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, format, Error, Result};
use crate::extractors::BitBuf;

pub const BITSTREAM_MAGIC: [u8; 8] = *b"MQRNGBIT";
pub const BITSTREAM_VERSION: u32 = 1;
pub const ASCII_LINE_BITS: usize = 64;
const HEADER_LEN: usize = 12;
const TRAILER_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitFormat {
    Bin,
    Ascii,
}

impl fmt::Display for BitFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bin => "bin",
            Self::Ascii => "ascii",
        })
    }
}

impl FromStr for BitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(Self::Bin),
            "ascii" => Ok(Self::Ascii),
            other => config(format!(
                "unknown bit format {other:?}; expected bin or ascii"
            )),
        }
    }
}

/// How to read a file of bits. `Auto` picks binary on a magic match, ASCII
/// when every byte is `0`, `1` or a line break, and raw bytes otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Auto,
    Bin,
    Ascii,
    Raw,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "bin" => Ok(Self::Bin),
            "ascii" => Ok(Self::Ascii),
            "raw" => Ok(Self::Raw),
            other => config(format!(
                "unknown input format {other:?}; expected auto, bin, ascii or raw"
            )),
        }
    }
}

pub fn encode_bitstream(bits: &BitBuf) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + bits.as_bytes().len() + TRAILER_LEN);
    out.extend_from_slice(&BITSTREAM_MAGIC);
    out.extend_from_slice(&BITSTREAM_VERSION.to_le_bytes());
    out.extend_from_slice(bits.as_bytes());
    out.extend_from_slice(&bits.bit_len().to_le_bytes());
    out
}

pub fn decode_bitstream(bytes: &[u8]) -> Result<BitBuf> {
    if bytes.len() < HEADER_LEN + TRAILER_LEN {
        return format(format!(
            "bitstream is {} bytes, shorter than its framing",
            bytes.len()
        ));
    }
    if bytes[..8] != BITSTREAM_MAGIC {
        return format("missing bitstream magic");
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != BITSTREAM_VERSION {
        return format(format!("unsupported bitstream version {version}"));
    }
    let (payload, trailer) = bytes[HEADER_LEN..].split_at(bytes.len() - HEADER_LEN - TRAILER_LEN);
    let bit_len = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
    BitBuf::from_parts(payload.to_vec(), bit_len).ok_or_else(|| {
        Error::Format(format!(
            "trailer claims {bit_len} bits but payload is {} bytes or has non-zero padding",
            payload.len()
        ))
    })
}

pub fn encode_ascii(bits: &BitBuf) -> Vec<u8> {
    let mut out = Vec::new();
    let mut w = BitWriter::new(&mut out, BitFormat::Ascii).expect("vec writes cannot fail");
    w.write_bits(bits).expect("vec writes cannot fail");
    w.finish().expect("vec writes cannot fail");
    out
}

pub fn decode_ascii(bytes: &[u8]) -> Result<BitBuf> {
    let mut buf = BitBuf::new();
    let mut line = 1usize;
    for &b in bytes {
        match b {
            b'0' => buf.push_bit(false),
            b'1' => buf.push_bit(true),
            b'\n' => line += 1,
            b'\r' => {}
            other => {
                return format(format!(
                    "line {line}: unexpected byte 0x{other:02x} in ASCII bitstream"
                ))
            }
        }
    }
    Ok(buf)
}

pub fn decode_bits(bytes: &[u8], fmt: InputFormat) -> Result<BitBuf> {
    match fmt {
        InputFormat::Bin => decode_bitstream(bytes),
        InputFormat::Ascii => decode_ascii(bytes),
        InputFormat::Raw => Ok(BitBuf::from_bytes(bytes.to_vec())),
        InputFormat::Auto => {
            if bytes.starts_with(&BITSTREAM_MAGIC) {
                decode_bitstream(bytes)
            } else if !bytes.is_empty()
                && bytes
                    .iter()
                    .all(|b| matches!(b, b'0' | b'1' | b'\n' | b'\r'))
            {
                decode_ascii(bytes)
            } else {
                Ok(BitBuf::from_bytes(bytes.to_vec()))
            }
        }
    }
}

/// Incremental writer for either format; holds at most one partial byte
/// (binary) or nothing (ASCII) between calls.
pub struct BitWriter<W: Write> {
    inner: W,
    format: BitFormat,
    pending: BitBuf,
    total: u64,
    column: usize,
}

impl<W: Write> BitWriter<W> {
    pub fn new(mut inner: W, format: BitFormat) -> io::Result<Self> {
        if format == BitFormat::Bin {
            inner.write_all(&BITSTREAM_MAGIC)?;
            inner.write_all(&BITSTREAM_VERSION.to_le_bytes())?;
        }
        Ok(Self {
            inner,
            format,
            pending: BitBuf::new(),
            total: 0,
            column: 0,
        })
    }

    pub fn bits_written(&self) -> u64 {
        self.total
    }

    pub fn write_bits(&mut self, bits: &BitBuf) -> io::Result<()> {
        self.total += bits.bit_len();
        match self.format {
            BitFormat::Bin => {
                self.pending.extend(bits);
                let full = self.pending.take_full_bytes();
                self.inner.write_all(&full)
            }
            BitFormat::Ascii => {
                let mut text = Vec::with_capacity(bits.bit_len() as usize * 65 / 64 + 1);
                for i in 0..bits.bit_len() {
                    text.push(if bits.get(i).expect("in range") {
                        b'1'
                    } else {
                        b'0'
                    });
                    self.column += 1;
                    if self.column == ASCII_LINE_BITS {
                        text.push(b'\n');
                        self.column = 0;
                    }
                }
                self.inner.write_all(&text)
            }
        }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> io::Result<()> {
        if self.format == BitFormat::Bin && self.pending.is_empty() {
            self.total += bytes.len() as u64 * 8;
            self.inner.write_all(bytes)
        } else {
            self.write_bits(&BitBuf::from_bytes(bytes.to_vec()))
        }
    }

    /// Flushes the tail and framing; returns the sink and the bit count.
    pub fn finish(mut self) -> io::Result<(W, u64)> {
        match self.format {
            BitFormat::Bin => {
                self.inner.write_all(self.pending.as_bytes())?;
                self.inner.write_all(&self.total.to_le_bytes())?;
            }
            BitFormat::Ascii => {
                if self.column > 0 {
                    self.inner.write_all(b"\n")?;
                }
            }
        }
        self.inner.flush()?;
        Ok((self.inner, self.total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractors::pack_bits;
    use proptest::prelude::*;

    #[test]
    fn binary_framing() {
        let bits = pack_bits(&[1, 0, 1]);
        let enc = encode_bitstream(&bits);
        assert_eq!(&enc[..8], b"MQRNGBIT");
        assert_eq!(enc[12], 0xa0);
        assert_eq!(&enc[13..], &3u64.to_le_bytes());
        assert_eq!(decode_bitstream(&enc).unwrap(), bits);
    }

    #[test]
    fn binary_rejects_damage() {
        let enc = encode_bitstream(&pack_bits(&[1, 1, 0, 1, 1]));
        assert!(decode_bitstream(&enc[..enc.len() - 1]).is_err());
        let mut bad = enc.clone();
        bad[0] = b'X';
        assert!(decode_bitstream(&bad).is_err());
        let mut pad = enc.clone();
        pad[12] |= 1;
        assert!(decode_bitstream(&pad).is_err());
        let mut ver = enc;
        ver[8] = 2;
        assert!(decode_bitstream(&ver).is_err());
    }

    #[test]
    fn ascii_lines() {
        let bits = pack_bits(&[1u8; 130]);
        let text = encode_ascii(&bits);
        let lines: Vec<&[u8]> = text.split(|&b| b == b'\n').collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].len(), 64);
        assert_eq!(lines[2].len(), 2);
        assert!(lines[3].is_empty());
        assert!(decode_ascii(b"01\n2")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert_eq!(decode_ascii(b"10\r\n1\r\n").unwrap(), pack_bits(&[1, 0, 1]));
    }

    #[test]
    fn auto_detection() {
        let bits = pack_bits(&[0, 1, 1, 0, 1, 0, 0, 1]);
        assert_eq!(
            decode_bits(&encode_bitstream(&bits), InputFormat::Auto).unwrap(),
            bits
        );
        assert_eq!(
            decode_bits(&encode_ascii(&bits), InputFormat::Auto).unwrap(),
            bits
        );
        assert_eq!(decode_bits(&[0x69], InputFormat::Auto).unwrap(), bits);
        assert!(decode_bits(&[], InputFormat::Auto).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn streaming_writer_matches_whole_encoders(chunks in proptest::collection::vec(proptest::collection::vec(0u8..2, 0..40), 0..8)) {
            let mut all = Vec::new();
            let mut bin = BitWriter::new(Vec::new(), BitFormat::Bin).unwrap();
            let mut asc = BitWriter::new(Vec::new(), BitFormat::Ascii).unwrap();
            for c in &chunks {
                all.extend_from_slice(c);
                bin.write_bits(&pack_bits(c)).unwrap();
                asc.write_bits(&pack_bits(c)).unwrap();
            }
            let whole = pack_bits(&all);
            let (bin, n) = bin.finish().unwrap();
            prop_assert_eq!(n, all.len() as u64);
            prop_assert_eq!(&bin, &encode_bitstream(&whole));
            prop_assert_eq!(decode_bitstream(&bin).unwrap(), whole.clone());
            let (asc, _) = asc.finish().unwrap();
            prop_assert_eq!(decode_ascii(&asc).unwrap(), whole);
        }
    }
}
