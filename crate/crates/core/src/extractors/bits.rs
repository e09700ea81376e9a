//! MSB-first bit packing.

/// A packed bit string. Bits fill each byte from the most significant end;
/// the final byte is zero-padded and `bit_len` records the true length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitBuf {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitBuf {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps packed bytes. Fails if `bit_len` does not fit `bytes` exactly
    /// or the padding bits are not zero.
    pub fn from_parts(bytes: Vec<u8>, bit_len: u64) -> Option<Self> {
        if bytes.len() as u64 != bit_len.div_ceil(8) {
            return None;
        }
        let pad = (8 - bit_len % 8) % 8;
        if pad > 0 && bytes.last().is_some_and(|b| b & ((1u8 << pad) - 1) != 0) {
            return None;
        }
        Some(Self { bytes, bit_len })
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bit_len = bytes.len() as u64 * 8;
        Self { bytes, bit_len }
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn get(&self, i: u64) -> Option<bool> {
        if i >= self.bit_len {
            return None;
        }
        Some(self.bytes[(i / 8) as usize] >> (7 - i % 8) & 1 == 1)
    }

    pub fn push_bit(&mut self, bit: bool) {
        let off = self.bit_len % 8;
        if off == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed above") |= 0x80 >> off;
        }
        self.bit_len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        let mut remaining = width;
        while remaining > 0 {
            let off = (self.bit_len % 8) as u32;
            if off == 0 {
                self.bytes.push(0);
            }
            let take = remaining.min(8 - off);
            let chunk = ((value >> (remaining - take)) & ((1u64 << take) - 1)) as u8;
            *self.bytes.last_mut().expect("byte pushed above") |= chunk << (8 - off - take);
            remaining -= take;
            self.bit_len += u64::from(take);
        }
    }

    pub fn push_byte(&mut self, byte: u8) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.push(byte);
            self.bit_len += 8;
        } else {
            self.push_bits(u64::from(byte), 8);
        }
    }

    pub fn extend(&mut self, other: &BitBuf) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.bit_len += other.bit_len;
        } else {
            let full = (other.bit_len / 8) as usize;
            for &b in &other.bytes[..full] {
                self.push_bits(u64::from(b), 8);
            }
            let tail = (other.bit_len % 8) as u32;
            if tail > 0 {
                self.push_bits(u64::from(other.bytes[full] >> (8 - tail)), tail);
            }
        }
    }

    /// Removes and returns every complete byte, keeping a trailing partial
    /// byte (if any) buffered.
    pub fn take_full_bytes(&mut self) -> Vec<u8> {
        let full = (self.bit_len / 8) as usize;
        let rest = self.bytes.split_off(full);
        self.bit_len %= 8;
        std::mem::replace(&mut self.bytes, rest)
    }

    /// Unpacked view, one `0`/`1` byte per bit.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.bit_len)
            .map(|i| u8::from(self.get(i).expect("in range")))
            .collect()
    }

    pub fn read_bits(&self, start: u64, width: u32) -> Option<u64> {
        if width > 64 || start + u64::from(width) > self.bit_len {
            return None;
        }
        Some((0..u64::from(width)).fold(0u64, |acc, i| {
            (acc << 1) | u64::from(self.get(start + i).expect("bounds checked"))
        }))
    }
}

/// Packs a sequence of bits (any non-zero byte counts as 1).
pub fn pack_bits(bits: &[u8]) -> BitBuf {
    let mut buf = BitBuf::new();
    for &b in bits {
        buf.push_bit(b != 0);
    }
    buf
}

pub fn unpack_bits(buf: &BitBuf) -> Vec<u8> {
    buf.to_bits()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(pack_bits(&[1, 0, 0, 0, 0, 0, 0, 0]).as_bytes(), &[0x80]);
        assert!(pack_bits(&[]).is_empty());
        let b = pack_bits(&[1, 1, 1]);
        assert_eq!(b.as_bytes(), &[0xe0]);
        assert_eq!(b.bit_len(), 3);
    }

    #[test]
    fn from_parts_checks_length_and_padding() {
        assert!(BitBuf::from_parts(vec![0xe0], 3).is_some());
        assert!(BitBuf::from_parts(vec![0xe1], 3).is_none());
        assert!(BitBuf::from_parts(vec![0xe0, 0], 3).is_none());
        assert!(BitBuf::from_parts(vec![], 0).is_some());
    }

    proptest! {
        #[test]
        fn packed_63_bit_values_round_trip(values in proptest::collection::vec(0u64..(1u64 << 63), 0..20)) {
            let mut buf = BitBuf::new();
            for &v in &values {
                buf.push_bits(v, 63);
            }
            prop_assert_eq!(buf.bit_len(), 63 * values.len() as u64);
            let unpacked = unpack_bits(&buf);
            prop_assert_eq!(&pack_bits(&unpacked), &buf);
            for (i, &v) in values.iter().enumerate() {
                prop_assert_eq!(buf.read_bits(63 * i as u64, 63), Some(v));
            }
        }

        #[test]
        fn mixed_pushes_match_bitwise_pushes(chunks in proptest::collection::vec((any::<u64>(), 0u32..=64), 0..16)) {
            let mut fast = BitBuf::new();
            let mut slow = BitBuf::new();
            for &(v, w) in &chunks {
                fast.push_bits(v, w);
                for i in (0..w).rev() {
                    slow.push_bit(v >> i & 1 == 1);
                }
            }
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn extend_matches_bitwise_concatenation(a in proptest::collection::vec(0u8..2, 0..70), b in proptest::collection::vec(0u8..2, 0..70)) {
            let mut joined = pack_bits(&a);
            joined.extend(&pack_bits(&b));
            let mut all = a.clone();
            all.extend_from_slice(&b);
            prop_assert_eq!(joined, pack_bits(&all));
        }

        #[test]
        fn take_full_bytes_keeps_the_tail(bits in proptest::collection::vec(0u8..2, 0..70)) {
            let mut buf = pack_bits(&bits);
            let taken = buf.take_full_bytes();
            let k = bits.len() / 8 * 8;
            let head = pack_bits(&bits[..k]);
            prop_assert_eq!(&taken[..], head.as_bytes());
            prop_assert_eq!(buf, pack_bits(&bits[k..]));
        }
    }
}
