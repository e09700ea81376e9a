//! Per-channel sample files.
//!
//! A 32-byte little-endian header followed by the samples:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 8    | magic `MQRNGCOD` (codes) or `MQRNGANA` (analog) |
//! | 8      | 4    | format version (1)                           |
//! | 12     | 2    | channel id                                   |
//! | 14     | 1    | ADC bits (codes) or 0 (analog)               |
//! | 15     | 1    | reserved, 0                                  |
//! | 16     | 8    | index of the first sample in the channel stream |
//! | 24     | 8    | sample count                                 |
//!
//! Codes are `u16`, analog samples `f64`.

use std::io::{self, Read, Write};

use crate::adc::{decode_codes_le, write_codes_le};
use crate::error::{format, Error, Result};
use crate::source::decode_analog_le;

pub const CODES_MAGIC: [u8; 8] = *b"MQRNGCOD";
pub const ANALOG_MAGIC: [u8; 8] = *b"MQRNGANA";
pub const SAMPLES_VERSION: u32 = 1;
pub const SAMPLE_HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Codes,
    Analog,
}

impl SampleKind {
    pub fn sample_size(&self) -> usize {
        match self {
            Self::Codes => 2,
            Self::Analog => 8,
        }
    }

    fn magic(&self) -> [u8; 8] {
        match self {
            Self::Codes => CODES_MAGIC,
            Self::Analog => ANALOG_MAGIC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleHeader {
    pub kind: SampleKind,
    pub channel_id: u16,
    pub adc_bits: u8,
    pub start_index: u64,
    pub count: u64,
}

impl SampleHeader {
    pub fn encode(&self) -> [u8; SAMPLE_HEADER_LEN] {
        let mut h = [0u8; SAMPLE_HEADER_LEN];
        h[..8].copy_from_slice(&self.kind.magic());
        h[8..12].copy_from_slice(&SAMPLES_VERSION.to_le_bytes());
        h[12..14].copy_from_slice(&self.channel_id.to_le_bytes());
        h[14] = match self.kind {
            SampleKind::Codes => self.adc_bits,
            SampleKind::Analog => 0,
        };
        h[16..24].copy_from_slice(&self.start_index.to_le_bytes());
        h[24..32].copy_from_slice(&self.count.to_le_bytes());
        h
    }

    pub fn decode(h: &[u8]) -> Result<Self> {
        if h.len() < SAMPLE_HEADER_LEN {
            return format(format!(
                "sample file header is truncated ({} bytes)",
                h.len()
            ));
        }
        let kind = match &h[..8] {
            m if m == CODES_MAGIC => SampleKind::Codes,
            m if m == ANALOG_MAGIC => SampleKind::Analog,
            _ => return format("not a sample file (bad magic)"),
        };
        let version = u32::from_le_bytes(h[8..12].try_into().expect("4 bytes"));
        if version != SAMPLES_VERSION {
            return format(format!("unsupported sample file version {version}"));
        }
        let adc_bits = h[14];
        match kind {
            SampleKind::Codes if !(1..=16).contains(&adc_bits) => {
                return format(format!("codes file declares {adc_bits}-bit ADC"))
            }
            SampleKind::Analog if adc_bits != 0 => {
                return format("analog file has non-zero ADC bits field")
            }
            _ => {}
        }
        if h[15] != 0 {
            return format("reserved header byte is not zero");
        }
        Ok(Self {
            kind,
            channel_id: u16::from_le_bytes(h[12..14].try_into().expect("2 bytes")),
            adc_bits,
            start_index: u64::from_le_bytes(h[16..24].try_into().expect("8 bytes")),
            count: u64::from_le_bytes(h[24..32].try_into().expect("8 bytes")),
        })
    }

    pub fn payload_len(&self) -> Option<u64> {
        self.count.checked_mul(self.kind.sample_size() as u64)
    }
}

pub fn encode_codes_file(header: &SampleHeader, codes: &[u16]) -> Vec<u8> {
    let mut out = header.encode().to_vec();
    write_codes_le(codes, &mut out).expect("vec writes cannot fail");
    out
}

fn split_payload(bytes: &[u8], want: SampleKind) -> Result<(SampleHeader, &[u8])> {
    let header = SampleHeader::decode(bytes)?;
    if header.kind != want {
        return format(format!("expected a {want:?} file, found {:?}", header.kind));
    }
    let payload = &bytes[SAMPLE_HEADER_LEN..];
    if header.payload_len() != Some(payload.len() as u64) {
        return format(format!(
            "header declares {} samples but payload is {} bytes",
            header.count,
            payload.len()
        ));
    }
    Ok((header, payload))
}

pub fn decode_codes_file(bytes: &[u8]) -> Result<(SampleHeader, Vec<u16>)> {
    let (header, payload) = split_payload(bytes, SampleKind::Codes)?;
    Ok((header, decode_codes_le(payload, header.adc_bits)?))
}

pub fn decode_analog_file(bytes: &[u8]) -> Result<(SampleHeader, Vec<f64>)> {
    let (header, payload) = split_payload(bytes, SampleKind::Analog)?;
    Ok((header, decode_analog_le(payload)?))
}

/// Streams samples out of a file in bounded chunks.
pub struct SampleReader<R: Read> {
    inner: R,
    header: SampleHeader,
    remaining: u64,
}

impl<R: Read> SampleReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut h = [0u8; SAMPLE_HEADER_LEN];
        read_exact_or_format(&mut inner, &mut h, "header")?;
        let header = SampleHeader::decode(&h)?;
        if header.payload_len().is_none() {
            return format("sample count overflows");
        }
        Ok(Self {
            inner,
            header,
            remaining: header.count,
        })
    }

    pub fn header(&self) -> &SampleHeader {
        &self.header
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    fn next_payload(&mut self, max: usize) -> Result<Vec<u8>> {
        let n = (max as u64).min(self.remaining) as usize;
        let mut buf = vec![0u8; n * self.header.kind.sample_size()];
        read_exact_or_format(&mut self.inner, &mut buf, "payload")?;
        self.remaining -= n as u64;
        if self.remaining == 0 {
            let mut probe = [0u8; 1];
            if self.inner.read(&mut probe)? != 0 {
                return format("trailing bytes after the declared samples");
            }
        }
        Ok(buf)
    }

    /// Up to `max` codes; empty once the file is exhausted.
    pub fn read_codes(&mut self, max: usize) -> Result<Vec<u16>> {
        if self.header.kind != SampleKind::Codes {
            return format("not a codes file");
        }
        let bytes = self.next_payload(max)?;
        decode_codes_le(&bytes, self.header.adc_bits)
    }

    pub fn read_analog(&mut self, max: usize) -> Result<Vec<f64>> {
        if self.header.kind != SampleKind::Analog {
            return format("not an analog file");
        }
        let bytes = self.next_payload(max)?;
        decode_analog_le(&bytes)
    }
}

fn read_exact_or_format<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Format(format!("sample file {what} is truncated")),
        _ => Error::Io(e),
    })
}

pub fn write_sample_header<W: Write>(w: &mut W, header: &SampleHeader) -> io::Result<()> {
    w.write_all(&header.encode())
}
