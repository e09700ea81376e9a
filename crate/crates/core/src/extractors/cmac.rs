//! AES-CMAC conditioning with per-call key refresh.
//!
//! Each call MACs one 128-bit block (eight LSBs of sixteen consecutive
//! samples). The top `out_bits` of the tag are emitted; the remaining
//! `128 - out_bits` tag bits are never output and become the high part of
//! the next key, with the top `out_bits` of the old key filling the rest.

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{config, input, Result};

pub const CMAC_INPUT_BYTES: usize = 16;
pub const DEFAULT_OUT_BITS: u32 = 63;
/// Min-entropy per raw LSB byte assumed when sizing the CMAC output.
pub const DEFAULT_RAW_BYTE_ENTROPY: f64 = 7.897;

/// Keystream id used to derive initial CMAC keys from a channel seed.
const KEY_STREAM: u64 = 0x636d_6163;

const RB: u128 = 0x87;

/// AES-128 forward cipher on one block.
pub fn aes128_encrypt(block: [u8; 16], key: [u8; 16]) -> [u8; 16] {
    let cipher = Aes128::new(&key.into());
    let mut b = block.into();
    cipher.encrypt_block(&mut b);
    b.into()
}

fn dbl(x: u128) -> u128 {
    let carry = x >> 127;
    (x << 1) ^ (carry * RB)
}

/// AES-CMAC tag of an arbitrary-length message.
pub fn cmac_tag(message: &[u8], key: [u8; 16]) -> [u8; 16] {
    let cipher = Aes128::new(&key.into());
    let enc = |x: u128| -> u128 {
        let mut b = x.to_be_bytes().into();
        cipher.encrypt_block(&mut b);
        u128::from_be_bytes(b.into())
    };
    let k1 = dbl(enc(0));
    let k2 = dbl(k1);

    let full_last = !message.is_empty() && message.len().is_multiple_of(16);
    let n_blocks = message.len().div_ceil(16).max(1);
    let mut x = 0u128;
    for chunk in message.chunks(16).take(n_blocks - 1) {
        x = enc(x ^ u128::from_be_bytes(chunk.try_into().expect("full block")));
    }
    let tail = &message[16 * (n_blocks - 1)..];
    let last = if full_last {
        u128::from_be_bytes(tail.try_into().expect("full block")) ^ k1
    } else {
        let mut padded = [0u8; 16];
        padded[..tail.len()].copy_from_slice(tail);
        padded[tail.len()] = 0x80;
        u128::from_be_bytes(padded) ^ k2
    };
    enc(x ^ last).to_be_bytes()
}

/// Initial CMAC key derived from a channel seed.
pub fn derive_cmac_key(seed: u64) -> u128 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(KEY_STREAM);
    (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64())
}

/// Per-channel CMAC extractor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmacState {
    key: u128,
    out_bits: u32,
    input_entropy_k: f64,
}

impl CmacState {
    /// Builds a state, rejecting `out_bits > floor(k / 2)` where `k` is the
    /// min-entropy of one 128-bit input block.
    pub fn new(key: u128, out_bits: u32, input_entropy_k: f64) -> Result<Self> {
        if !(1..=64).contains(&out_bits) {
            return config(format!(
                "CMAC output width must be 1..=64 bits, got {out_bits}"
            ));
        }
        if !(input_entropy_k > 0.0 && input_entropy_k <= 128.0) {
            return config(format!(
                "input min-entropy must be in (0, 128] bits per block, got {input_entropy_k}"
            ));
        }
        let limit = (input_entropy_k / 2.0).floor();
        if f64::from(out_bits) > limit {
            return config(format!(
                "taking {out_bits} bits from inputs with {input_entropy_k:.3} bits of min-entropy \
                 exceeds the full-entropy limit of {limit}"
            ));
        }
        Ok(Self {
            key,
            out_bits,
            input_entropy_k,
        })
    }

    /// 63 output bits, `k = 16 * 7.897`.
    pub fn with_key(key: u128) -> Result<Self> {
        Self::new(key, DEFAULT_OUT_BITS, 16.0 * DEFAULT_RAW_BYTE_ENTROPY)
    }

    pub fn key(&self) -> u128 {
        self.key
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn input_entropy_k(&self) -> f64 {
        self.input_entropy_k
    }

    /// Conditions one block and refreshes the key in place.
    pub fn extract(&mut self, input_block: &[u8]) -> Result<u64> {
        let (out, next) = extract_cmac(input_block, self)?;
        *self = next;
        Ok(out)
    }
}

/// Pure form: returns the output bits and the refreshed state.
pub fn extract_cmac(input_block: &[u8], state: &CmacState) -> Result<(u64, CmacState)> {
    if input_block.len() != CMAC_INPUT_BYTES {
        return input(format!(
            "CMAC extractor takes exactly {CMAC_INPUT_BYTES} bytes, got {}",
            input_block.len()
        ));
    }
    let tag = u128::from_be_bytes(cmac_tag(input_block, state.key.to_be_bytes()));
    let ob = state.out_bits;
    let output = (tag >> (128 - ob)) as u64;
    let leftover = tag & ((1u128 << (128 - ob)) - 1);
    let key = (leftover << ob) | (state.key >> (128 - ob));
    Ok((output, CmacState { key, ..*state }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h16(s: &str) -> [u8; 16] {
        hex::decode(s).unwrap().try_into().unwrap()
    }

    #[test]
    fn fips197_appendix_c1() {
        let key = h16("000102030405060708090a0b0c0d0e0f");
        let pt = h16("00112233445566778899aabbccddeeff");
        assert_eq!(
            aes128_encrypt(pt, key),
            h16("69c4e0d86a7b0430d8cdb78070b4c55a")
        );
    }

    #[test]
    fn rfc4493_subkeys() {
        let key = h16("2b7e151628aed2a6abf7158809cf4f3c");
        let l = u128::from_be_bytes(aes128_encrypt([0; 16], key));
        assert_eq!(
            l,
            u128::from_be_bytes(h16("7df76b0c1ab899b33e42f047b91b546f"))
        );
        assert_eq!(
            dbl(l),
            u128::from_be_bytes(h16("fbeed618357133667c85e08f7236a8de"))
        );
        assert_eq!(
            dbl(dbl(l)),
            u128::from_be_bytes(h16("f7ddac306ae266ccf90bc11ee46d513b"))
        );
    }

    #[test]
    fn encryption_is_injective_under_one_key() {
        let key = derive_cmac_key(1).to_be_bytes();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = std::collections::HashSet::new();
        let mut inputs = std::collections::HashSet::new();
        for _ in 0..10_000 {
            let mut b = [0u8; 16];
            rng.fill_bytes(&mut b);
            if inputs.insert(b) {
                assert!(seen.insert(aes128_encrypt(b, key)));
            }
        }
    }

    #[test]
    fn different_keys_give_different_ciphertexts() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pt = [0x5au8; 16];
        for _ in 0..1000 {
            let (mut k1, mut k2) = ([0u8; 16], [0u8; 16]);
            rng.fill_bytes(&mut k1);
            rng.fill_bytes(&mut k2);
            if k1 != k2 {
                assert_ne!(aes128_encrypt(pt, k1), aes128_encrypt(pt, k2));
            }
        }
    }

    #[test]
    fn one_bit_change_flips_about_half_the_tag() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let key = h16("2b7e151628aed2a6abf7158809cf4f3c");
        let mut total = 0u32;
        for t in 0..1000 {
            let mut msg = [0u8; 16];
            rng.fill_bytes(&mut msg);
            let a = u128::from_be_bytes(cmac_tag(&msg, key));
            msg[t % 16] ^= 1 << (t % 8);
            let b = u128::from_be_bytes(cmac_tag(&msg, key));
            total += (a ^ b).count_ones();
        }
        let mean = f64::from(total) / 1000.0;
        assert!((mean - 64.0).abs() < 8.0, "{mean}");
    }

    #[test]
    fn key_refresh_layout() {
        let key = 0x0123_4567_89ab_cdef_fedc_ba98_7654_3210u128;
        let state = CmacState::with_key(key).unwrap();
        let block = [7u8; 16];
        let (out, next) = extract_cmac(&block, &state).unwrap();
        let tag = u128::from_be_bytes(cmac_tag(&block, key.to_be_bytes()));
        assert_eq!(u128::from(out), tag >> 65);
        assert_eq!(next.key() >> 63, tag & ((1u128 << 65) - 1));
        assert_eq!(next.key() & ((1u128 << 63) - 1), key >> 65);
        assert!(out < 1 << 63);
    }

    #[test]
    fn refresh_changes_output_for_repeated_input() {
        let mut s = CmacState::with_key(derive_cmac_key(4)).unwrap();
        let k0 = s.key();
        let a = s.extract(&[1u8; 16]).unwrap();
        let k1 = s.key();
        let b = s.extract(&[1u8; 16]).unwrap();
        assert_ne!(a, b);
        assert_ne!(k0, k1);
        assert_ne!(k1, s.key());
    }

    #[test]
    fn builder_enforces_full_entropy_condition() {
        let k = 16.0 * DEFAULT_RAW_BYTE_ENTROPY;
        assert_eq!((k / 2.0f64).floor(), 63.0);
        assert!(CmacState::new(0, 63, k).is_ok());
        assert!(CmacState::new(0, 64, k).is_err());
        assert!(CmacState::new(0, 63, 125.9).is_err());
        assert!(CmacState::new(0, 0, k).is_err());
        assert!(CmacState::new(0, 10, 0.0).is_err());
    }

    #[test]
    fn wrong_width_rejected() {
        let s = CmacState::with_key(0).unwrap();
        assert!(extract_cmac(&[0u8; 15], &s).is_err());
        assert!(extract_cmac(&[0u8; 17], &s).is_err());
    }
}
