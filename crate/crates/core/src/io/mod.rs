//! File formats: run configs, bitstreams, sample files and manifests.

mod bitstream;
mod config;
mod manifest;
mod samples;

pub use bitstream::{
    decode_ascii, decode_bits, decode_bitstream, encode_ascii, encode_bitstream, BitFormat,
    BitWriter, InputFormat, ASCII_LINE_BITS, BITSTREAM_MAGIC, BITSTREAM_VERSION,
};
pub use config::{
    channel_seed, format_cmac_key, parse_cmac_key, AdcSection, ChannelSection, PipelineSection,
    RunConfig, DEFAULT_CHANNELS, DEFAULT_SAMPLE_RATE,
};
pub use manifest::{digest_file, sha256_hex, FileDigest, RunManifest, MANIFEST_VERSION};
pub use samples::{
    decode_analog_file, decode_codes_file, encode_codes_file, write_sample_header, SampleHeader,
    SampleKind, SampleReader, ANALOG_MAGIC, CODES_MAGIC, SAMPLES_VERSION, SAMPLE_HEADER_LEN,
};
