//! Lossy compression for ECG-like sampled signals.
//!
//! The pipeline transforms a record with a multi-level CDF 9/7 wavelet,
//! optionally keeps only the largest coefficients up to an energy budget,
//! quantizes with a mid-tread uniform quantizer, drops zero-mapped
//! coefficients, delta-codes the surviving positions, and stores the result
//! in a chunked-DEFLATE container. A matching decoder, quality metrics
//! (PRD/PRDN/CR/QS and local prd statistics), and a distortion tuner round
//! out the crate.

pub mod codec;
pub mod container;
pub mod dwt;
pub mod entropy;
pub mod error;
pub mod metrics;
pub mod signal_io;
pub mod tuner;

pub use codec::{CodecParams, Mode, QuantizedSet};
pub use container::{Archive, ArchiveOptions, EntropyMode, IndexMode};
pub use error::{Error, Result};
pub use signal_io::Signal;

/// Encode a signal and serialize it in one step. The archive records the
/// selection mode from `params` alongside the storage options.
pub fn compress(
    signal: &Signal,
    params: &CodecParams,
    options: &ArchiveOptions,
) -> Result<Vec<u8>> {
    let set = codec::encode(signal, params)?;
    let options = ArchiveOptions {
        mode: params.mode,
        ..*options
    };
    container::serialize(&set, &options)
}

/// Deserialize and decode an archive back into a signal.
pub fn decompress(bytes: &[u8]) -> Result<Signal> {
    codec::decode(&container::deserialize(bytes)?)
}
