//! Randomness extractors.
//!
//! * raw: the eight LSBs of every 12-bit code, 8 bits per sample;
//! * CMAC: AES-CMAC over 16 LSB bytes, 63 bits out per 16 samples;
//! * two-source: inner product of two 36-bit inputs from different
//!   channels, 1 bit out per 3 + 3 samples.

mod bits;
mod cmac;
mod two_source;

pub use bits::{pack_bits, unpack_bits, BitBuf};
pub use cmac::{
    aes128_encrypt, cmac_tag, derive_cmac_key, extract_cmac, CmacState, CMAC_INPUT_BYTES,
    DEFAULT_OUT_BITS, DEFAULT_RAW_BYTE_ENTROPY,
};
pub use two_source::{
    extract_two_source, inner_product, pack_codes36, TwoSourceExtractor, CODES_PER_INPUT,
    TWO_SOURCE_INPUT_BITS,
};

use crate::adc::{lsb8, DigitizedBlock};
use crate::error::Result;

/// Extractor A: one LSB byte per code.
pub fn extract_raw(block: &DigitizedBlock) -> Result<Vec<u8>> {
    extract_raw_codes(&block.codes)
}

pub fn extract_raw_codes(codes: &[u16]) -> Result<Vec<u8>> {
    codes.iter().map(|&c| lsb8(c)).collect()
}

/// Extractor B over a whole block: one output per 16 codes, trailing codes
/// that do not fill a block are left unused.
pub fn extract_cmac_codes(codes: &[u16], state: &mut CmacState) -> Result<Vec<u64>> {
    let raw = extract_raw_codes(codes)?;
    raw.chunks_exact(CMAC_INPUT_BYTES)
        .map(|chunk| state.extract(chunk))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adc::AdcConfig;

    #[test]
    fn raw_examples() {
        let block = DigitizedBlock {
            channel_id: 1,
            codes: vec![0, 255, 256, 4095],
            adc: AdcConfig::new(1.0, 1.0).unwrap(),
        };
        assert_eq!(extract_raw(&block).unwrap(), vec![0, 255, 0, 255]);
        assert!(extract_raw_codes(&[4096]).is_err());
    }

    #[test]
    fn cmac_block_accounting() {
        let mut s = CmacState::with_key(derive_cmac_key(1)).unwrap();
        let codes: Vec<u16> = (0..1000).map(|i| (i * 37 % 4096) as u16).collect();
        let out = extract_cmac_codes(&codes, &mut s).unwrap();
        assert_eq!(out.len(), 1000 / 16);
        assert!(out.iter().all(|&v| v < 1 << 63));
    }

    #[test]
    fn extractors_replay_identically() {
        let codes: Vec<u16> = (0..160).map(|i| (i * 911 % 4096) as u16).collect();
        let run = || {
            let mut s = CmacState::with_key(derive_cmac_key(7)).unwrap();
            extract_cmac_codes(&codes, &mut s).unwrap()
        };
        assert_eq!(run(), run());
        assert_eq!(
            extract_raw_codes(&codes).unwrap(),
            extract_raw_codes(&codes).unwrap()
        );
    }
}
