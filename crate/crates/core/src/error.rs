use thiserror::Error;

/// Errors produced by the codec pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input ended before the requested number of samples could be decoded.
    #[error("short read: need {needed} bytes, got {got}")]
    ShortRead { needed: usize, got: usize },

    /// Requested channel does not exist in the record.
    #[error("channel {0} out of range (expected 0 or 1)")]
    ChannelOutOfRange(usize),

    /// A text record contained a non-numeric sample line.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Signal length is not divisible by 2^levels; pad before transforming.
    #[error("signal length {n} not divisible by 2^{levels}; pad with pad_to_multiple first")]
    NotDivisible { n: usize, levels: usize },

    /// Band bounds of a coefficient vector are inconsistent.
    #[error("invalid band layout: {0}")]
    BandLayout(String),

    /// Index vector contains a repeated position.
    #[error("duplicate coefficient index {0}")]
    DuplicateIndex(u32),

    /// A parameter violated its domain (delta <= 0, levels = 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Archive does not start with the expected magic bytes.
    #[error("bad magic: not a WECG archive")]
    BadMagic,

    /// Archive was written by an unsupported format version.
    #[error("unsupported archive version {0}")]
    VersionMismatch(u8),

    /// Whole-file integrity check failed.
    #[error("archive checksum mismatch")]
    ChecksumMismatch,

    /// A compressed chunk failed to inflate.
    #[error("chunk inflate failure: {0}")]
    Inflate(String),

    /// Decoded arrays violate a structural invariant of the quantized set.
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),

    /// An array element does not fit the widest supported storage width.
    #[error("unrepresentable value: {0}")]
    Unrepresentable(String),

    /// A symbol exceeds the Huffman table's 16-bit alphabet.
    #[error("symbol {0} exceeds Huffman alphabet limit")]
    SymbolRange(u64),

    /// A Huffman bit stream could not be decoded with its table.
    #[error("corrupt entropy stream: {0}")]
    CorruptStream(String),

    /// Reference signal has zero norm; PRD is undefined.
    #[error("zero-norm reference signal")]
    ZeroNormReference,

    /// Signal is constant; PRDN is undefined.
    #[error("constant reference signal")]
    ConstantSignal,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
