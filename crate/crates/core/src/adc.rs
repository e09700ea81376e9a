//! Analog-to-digital conversion.
//!
//! A mid-rise quantizer over `[-R, +R)` with clamping saturation: codes are
//! unsigned, `code = clamp(floor((v + R) / delta), 0, 2^bits - 1)` with
//! `delta = 2R / 2^bits`. The two end codes absorb everything outside the
//! range, which is exactly what the worst-case entropy bound has to price in.

use std::io::{self, Write};

use crate::entropy::{worst_case_min_entropy, ConditionalModel};
use crate::error::{domain, format, input, Result};
use crate::source::{AnalogBlock, ChannelModel};

/// Resolution of the detector ADC.
pub const ADC_BITS: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    bits: u8,
    full_scale: f64,
    sample_rate: f64,
}

impl AdcConfig {
    /// A 12-bit converter spanning `[-full_scale, +full_scale)`.
    pub fn new(full_scale: f64, sample_rate: f64) -> Result<Self> {
        Self::with_bits(ADC_BITS, full_scale, sample_rate)
    }

    /// Reduced-resolution converters are used to cross-check the entropy
    /// bound against exhaustive evaluation.
    pub fn with_bits(bits: u8, full_scale: f64, sample_rate: f64) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return domain(format!("ADC resolution must be 1..=16 bits, got {bits}"));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return domain(format!(
                "full scale must be positive and finite, got {full_scale}"
            ));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return domain(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            ));
        }
        Ok(Self {
            bits,
            full_scale,
            sample_rate,
        })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn full_scale(&self) -> f64 {
        self.full_scale
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn num_codes(&self) -> u32 {
        1u32 << self.bits
    }

    pub fn max_code(&self) -> u16 {
        (self.num_codes() - 1) as u16
    }

    /// Bin width `delta = 2R / 2^bits`.
    pub fn bin_width(&self) -> f64 {
        2.0 * self.full_scale / f64::from(self.num_codes())
    }

    /// Voltage interval `[lo, hi)` of a bin, ignoring saturation.
    pub fn bin_edges(&self, code: u16) -> (f64, f64) {
        let d = self.bin_width();
        let lo = -self.full_scale + f64::from(code) * d;
        (lo, lo + d)
    }

    #[inline]
    fn quantize_unchecked(&self, v: f64) -> u16 {
        let idx = ((v + self.full_scale) / self.bin_width()).floor();
        if idx <= 0.0 {
            0
        } else if idx >= f64::from(self.max_code()) {
            self.max_code()
        } else {
            idx as u16
        }
    }

    pub fn quantize(&self, v: f64) -> Result<u16> {
        if !v.is_finite() {
            return input(format!("cannot quantize non-finite value {v}"));
        }
        Ok(self.quantize_unchecked(v))
    }

    pub fn digitize(&self, block: &AnalogBlock) -> Result<DigitizedBlock> {
        let mut codes = Vec::with_capacity(block.len());
        for (i, &v) in block.samples.iter().enumerate() {
            if !v.is_finite() {
                return input(format!(
                    "sample {} of channel {} is not finite",
                    block.start_index + i as u64,
                    block.channel_id
                ));
            }
            codes.push(self.quantize_unchecked(v));
        }
        Ok(DigitizedBlock {
            channel_id: block.channel_id,
            codes,
            adc: *self,
        })
    }
}

/// Free-function form of [`AdcConfig::quantize`].
pub fn quantize(v: f64, cfg: &AdcConfig) -> Result<u16> {
    cfg.quantize(v)
}

/// Free-function form of [`AdcConfig::digitize`].
pub fn digitize_block(block: &AnalogBlock, cfg: &AdcConfig) -> Result<DigitizedBlock> {
    cfg.digitize(block)
}

/// Low byte of a 12-bit code.
pub fn lsb8(code: u16) -> Result<u8> {
    if code > 4095 {
        return input(format!("code {code} exceeds the 12-bit range"));
    }
    Ok((code & 0xff) as u8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitizedBlock {
    pub channel_id: u16,
    pub codes: Vec<u16>,
    pub adc: AdcConfig,
}

impl DigitizedBlock {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Packed little-endian u16 dump (low bits significant).
    pub fn write_le<W: Write>(&self, w: W) -> io::Result<()> {
        write_codes_le(&self.codes, w)
    }
}

pub fn write_codes_le<W: Write>(codes: &[u16], mut w: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(codes.len() * 2);
    for c in codes {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Decodes a packed little-endian u16 code dump, rejecting codes wider
/// than `bits`.
pub fn decode_codes_le(bytes: &[u8], bits: u8) -> Result<Vec<u16>> {
    if !bytes.len().is_multiple_of(2) {
        return format(format!("code dump length {} is odd", bytes.len()));
    }
    let limit = if bits >= 16 { u32::MAX } else { 1u32 << bits };
    bytes
        .chunks_exact(2)
        .enumerate()
        .map(|(i, c)| {
            let code = u16::from_le_bytes([c[0], c[1]]);
            if u32::from(code) >= limit {
                format(format!("code {code} at index {i} exceeds {bits} bits"))
            } else {
                Ok(code)
            }
        })
        .collect()
}

/// Result of [`optimize_range`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeOptimum {
    pub full_scale: f64,
    pub h_min: f64,
}

const SCAN_POINTS: usize = 64;
const GOLDEN_REL_TOL: f64 = 1e-3;

/// Full-scale range maximizing the worst-case conditional min-entropy.
///
/// Log-spaced scan of `R` over `[sigma_m, 32 sigma_m]`, then golden-section
/// search inside the bracket around the best scan point. `H_min(R)` is the
/// minimum of a decreasing curve (center-bin mass) and an increasing one
/// (saturation tail), hence unimodal; ties go to the smaller range.
pub fn optimize_range(model: &ChannelModel, bits: u8) -> Result<RangeOptimum> {
    if !(model.sigma_q2() > 0.0) {
        return domain("range optimization needs a non-zero quantum variance");
    }
    let sigma_m = model.sigma_m2().sqrt();
    let eval = |r: f64| -> Result<f64> {
        let adc = AdcConfig::with_bits(bits, r, 1.0)?;
        worst_case_min_entropy(&ConditionalModel::new(
            model.sigma_q2(),
            model.sigma_e2(),
            adc,
        )?)
    };

    let (lo, hi) = (sigma_m.ln(), (32.0 * sigma_m).ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();
    let mut best = 0;
    let mut best_h = f64::NEG_INFINITY;
    for (i, &r) in grid.iter().enumerate() {
        let h = eval(r)?;
        if h > best_h {
            best_h = h;
            best = i;
        }
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut hc = eval(c)?;
    let mut hd = eval(d)?;
    while (b - a) > GOLDEN_REL_TOL * 0.5 * (a + b) {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - inv_phi * (b - a);
            hc = eval(c)?;
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + inv_phi * (b - a);
            hd = eval(d)?;
        }
    }
    let (r, h) = if hc >= hd { (c, hc) } else { (d, hd) };
    Ok(if h >= best_h {
        RangeOptimum {
            full_scale: r,
            h_min: h,
        }
    } else {
        RangeOptimum {
            full_scale: grid[best],
            h_min: best_h,
        }
    })
}
