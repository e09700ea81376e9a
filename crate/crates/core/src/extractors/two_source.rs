//! Single-bit two-source extractor: the GF(2) inner product of two weak
//! inputs drawn from different detectors.

use crate::error::{config, input, Result};

pub const TWO_SOURCE_INPUT_BITS: u32 = 36;
/// 12-bit codes packed into each input.
pub const CODES_PER_INPUT: usize = 3;

/// Packs three consecutive 12-bit codes, first code in the top bits.
pub fn pack_codes36(codes: &[u16]) -> Result<u64> {
    if codes.len() != CODES_PER_INPUT {
        return input(format!(
            "two-source input needs {CODES_PER_INPUT} codes, got {}",
            codes.len()
        ));
    }
    codes.iter().try_fold(0u64, |acc, &c| {
        if c > 4095 {
            input(format!("code {c} exceeds the 12-bit range"))
        } else {
            Ok((acc << 12) | u64::from(c))
        }
    })
}

/// `<x, y>` over GF(2): parity of `popcount(x & y)`.
pub fn inner_product(x: u64, y: u64) -> u8 {
    ((x & y).count_ones() & 1) as u8
}

/// Width-checked inner product of two 36-bit inputs.
pub fn extract_two_source(x: u64, y: u64) -> Result<u8> {
    let limit = 1u64 << TWO_SOURCE_INPUT_BITS;
    if x >= limit || y >= limit {
        return input(format!(
            "two-source inputs must fit in {TWO_SOURCE_INPUT_BITS} bits"
        ));
    }
    Ok(inner_product(x, y))
}

/// One extractor bound to a pair of distinct channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoSourceExtractor {
    first: u16,
    second: u16,
}

impl TwoSourceExtractor {
    pub fn new(first: u16, second: u16) -> Result<Self> {
        if first == second {
            return config(format!(
                "two-source extractor needs two different channels, got {first} twice"
            ));
        }
        Ok(Self { first, second })
    }

    pub fn channels(&self) -> (u16, u16) {
        (self.first, self.second)
    }

    /// One output bit per three codes of each input; both blocks must be
    /// the same length and a multiple of three.
    pub fn extract_block(&self, a: &[u16], b: &[u16]) -> Result<Vec<u8>> {
        if a.len() != b.len() || !a.len().is_multiple_of(CODES_PER_INPUT) {
            return input(format!(
                "two-source blocks must be equal multiples of {CODES_PER_INPUT} codes, got {} and {}",
                a.len(),
                b.len()
            ));
        }
        a.chunks_exact(CODES_PER_INPUT)
            .zip(b.chunks_exact(CODES_PER_INPUT))
            .map(|(x, y)| Ok(inner_product(pack_codes36(x)?, pack_codes36(y)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(extract_two_source(0, 0xf_ffff_ffff).unwrap(), 0);
        let ones = (1u64 << 36) - 1;
        assert_eq!(extract_two_source(ones, ones).unwrap(), 0);
        assert_eq!(extract_two_source(1, 1).unwrap(), 1);
        assert!(extract_two_source(1 << 36, 1).is_err());
    }

    #[test]
    fn packing_is_msb_first() {
        assert_eq!(pack_codes36(&[1, 2, 3]).unwrap(), (1 << 24) | (2 << 12) | 3);
        assert_eq!(pack_codes36(&[4095; 3]).unwrap(), (1 << 36) - 1);
        assert!(pack_codes36(&[4096, 0, 0]).is_err());
        assert!(pack_codes36(&[1, 2]).is_err());
    }

    #[test]
    fn same_channel_rejected() {
        assert!(TwoSourceExtractor::new(3, 3).is_err());
        assert!(TwoSourceExtractor::new(3, 4).is_ok());
    }

    #[test]
    fn block_extraction() {
        let ex = TwoSourceExtractor::new(1, 2).unwrap();
        let out = ex
            .extract_block(&[0, 0, 1, 0, 0, 3], &[0, 0, 1, 0, 0, 1])
            .unwrap();
        assert_eq!(out, vec![1, 1]);
        assert!(ex.extract_block(&[0, 0, 1], &[0, 0]).is_err());
        assert!(ex.extract_block(&[0, 0], &[0, 0]).is_err());
    }

    #[test]
    fn inner_product_is_bilinear() {
        let (x, y, z) = (0x9_1234_5678u64, 0x3_0f0f_0f0fu64, 0xa_aaaa_5555u64);
        assert_eq!(
            inner_product(x ^ z, y),
            inner_product(x, y) ^ inner_product(z, y)
        );
        assert_eq!(inner_product(x, y), inner_product(y, x));
    }
}
