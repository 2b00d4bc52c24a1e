//! Chunked-DEFLATE archive holding a [`QuantizedSet`].
//!
//! Layout (little-endian): magic `WECG`, u8 version, u8 flags
//! (bit0 mode, bit1 entropy, bit2 index), u32 n, u32 original_length,
//! u8 levels, f64 delta, u32 k, then three array sections (magnitudes,
//! signs, index data), each `{u8 element_width, u32 chunk_count,
//! per chunk: u32 compressed_len + raw DEFLATE stream}`, and a trailing
//! u32 CRC32 of everything before it so corruption is always detected.
//!
//! Arrays are packed at the minimal element width in {8, 16, 32} bits
//! (signs bit-packed 8 per byte, width tag 1), split into 64 KiB chunks,
//! and each chunk is DEFLATE-compressed at maximum effort. With Huffman
//! entropy the packed stream is replaced by a canonical table plus an
//! MSB-first code stream before chunking.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::codec::{delta_decode_indices, Mode, QuantizedSet};
use crate::entropy::{
    huffman_decode, huffman_encode, run_length_decode_flags, run_length_encode_flags,
    HuffmanTable, RunLengthStream,
};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"WECG";
pub const VERSION: u8 = 1;
pub const CHUNK_SIZE: usize = 64 * 1024;

const FLAG_MODE_B: u8 = 1 << 0;
const FLAG_HUFFMAN: u8 = 1 << 1;
const FLAG_RUN_LENGTH: u8 = 1 << 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyMode {
    #[default]
    None,
    Huffman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexMode {
    #[default]
    Delta,
    RunLength,
}

/// Storage choices recorded in the archive flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchiveOptions {
    pub entropy_mode: EntropyMode,
    pub index_mode: IndexMode,
    /// Which selection approach produced the set; informational only,
    /// the decoder does not branch on it.
    pub mode: Mode,
}

impl Default for ArchiveOptions {
    fn default() -> Self {
        Self {
            entropy_mode: EntropyMode::None,
            index_mode: IndexMode::Delta,
            mode: Mode::B,
        }
    }
}

/// A parsed archive: storage options plus the recovered set.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub options: ArchiveOptions,
    pub set: QuantizedSet,
}

/// Serialize a quantized set into archive bytes.
pub fn serialize(set: &QuantizedSet, options: &ArchiveOptions) -> Result<Vec<u8>> {
    set.validate().map_err(|e| match e {
        Error::CorruptArchive(msg) => Error::InvalidParam(msg),
        other => other,
    })?;

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    let mut flags = 0u8;
    if options.mode == Mode::B {
        flags |= FLAG_MODE_B;
    }
    if options.entropy_mode == EntropyMode::Huffman {
        flags |= FLAG_HUFFMAN;
    }
    if options.index_mode == IndexMode::RunLength {
        flags |= FLAG_RUN_LENGTH;
    }
    out.push(flags);
    out.extend_from_slice(&set.n.to_le_bytes());
    out.extend_from_slice(&set.original_length.to_le_bytes());
    out.push(set.levels);
    out.extend_from_slice(&set.delta.to_le_bytes());
    out.extend_from_slice(&(set.k() as u32).to_le_bytes());

    let huffman = options.entropy_mode == EntropyMode::Huffman;

    write_section(&mut out, &symbol_payload(&set.magnitudes, huffman)?)?;
    let sign_bytes = pack_bits(&set.signs);
    let signs_payload = if huffman && !sign_bytes.is_empty() {
        let symbols: Vec<u64> = sign_bytes.iter().map(|&b| u64::from(b)).collect();
        let (table, bits, _) = huffman_encode(&symbols)?;
        let mut payload = table.to_bytes();
        payload.extend_from_slice(&bits);
        Payload {
            bytes: payload,
            element_width: 1,
        }
    } else {
        Payload {
            bytes: sign_bytes,
            element_width: 1,
        }
    };
    write_section(&mut out, &signs_payload)?;

    let index_payload = match options.index_mode {
        IndexMode::Delta => {
            let symbols: Vec<u64> = set.index_deltas.iter().map(|&d| u64::from(d)).collect();
            symbol_payload(&symbols, huffman)?
        }
        IndexMode::RunLength => {
            let indices = delta_decode_indices(&set.index_deltas)?;
            let stream = run_length_encode_flags(&indices, set.n)?;
            let runs: Vec<u64> = stream.runs.iter().map(|&r| u64::from(r)).collect();
            if huffman {
                // the run count is not derivable from k, so it leads the payload
                let (table, bits, _) = huffman_encode(&runs)?;
                let mut payload = (runs.len() as u32).to_le_bytes().to_vec();
                payload.extend_from_slice(&table.to_bytes());
                payload.extend_from_slice(&bits);
                Payload {
                    bytes: payload,
                    element_width: minimal_width(&runs)?,
                }
            } else {
                symbol_payload(&runs, false)?
            }
        }
    };
    write_section(&mut out, &index_payload)?;

    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Deserialize archive bytes back into the exact quantized set.
pub fn deserialize(bytes: &[u8]) -> Result<QuantizedSet> {
    Ok(parse(bytes)?.set)
}

/// Parse an archive, exposing the storage options alongside the set.
pub fn parse(bytes: &[u8]) -> Result<Archive> {
    let mut cursor = Cursor::new(bytes);
    let magic = cursor.take_bytes(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = cursor.take_u8()?;
    if version != VERSION {
        return Err(Error::VersionMismatch(version));
    }
    if bytes.len() < 31 {
        return Err(Error::ShortRead {
            needed: 31,
            got: bytes.len(),
        });
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(Error::ChecksumMismatch);
    }

    let flags = cursor.take_u8()?;
    if flags & !(FLAG_MODE_B | FLAG_HUFFMAN | FLAG_RUN_LENGTH) != 0 {
        return Err(Error::CorruptArchive(format!(
            "reserved flag bits set: {flags:#04x}"
        )));
    }
    let options = ArchiveOptions {
        mode: if flags & FLAG_MODE_B != 0 { Mode::B } else { Mode::A },
        entropy_mode: if flags & FLAG_HUFFMAN != 0 {
            EntropyMode::Huffman
        } else {
            EntropyMode::None
        },
        index_mode: if flags & FLAG_RUN_LENGTH != 0 {
            IndexMode::RunLength
        } else {
            IndexMode::Delta
        },
    };
    let n = cursor.take_u32()?;
    let original_length = cursor.take_u32()?;
    let levels = cursor.take_u8()?;
    let delta = f64::from_le_bytes(cursor.take_bytes(8)?.try_into().unwrap());
    let k = cursor.take_u32()? as usize;

    let huffman = options.entropy_mode == EntropyMode::Huffman;
    let (mag_width, mag_payload) = read_section(&mut cursor, body.len())?;
    let magnitudes = decode_symbols(&mag_payload, mag_width, k, huffman)?;

    let (sign_width, sign_payload) = read_section(&mut cursor, body.len())?;
    if sign_width != 1 {
        return Err(Error::CorruptArchive(format!(
            "sign section width {sign_width}, expected 1"
        )));
    }
    let sign_byte_count = k.div_ceil(8);
    let sign_bytes = if huffman && k > 0 {
        let symbols = decode_huffman_payload(&sign_payload, sign_byte_count)?;
        symbols.iter().map(|&s| s as u8).collect()
    } else {
        sign_payload
    };
    let signs = unpack_bits(&sign_bytes, k)?;

    let (index_width, index_payload) = read_section(&mut cursor, body.len())?;
    let index_deltas = match options.index_mode {
        IndexMode::Delta => {
            let symbols = decode_symbols(&index_payload, index_width, k, huffman)?;
            to_u32s(&symbols)?
        }
        IndexMode::RunLength => {
            let runs = if huffman {
                if index_payload.len() < 4 {
                    return Err(Error::CorruptArchive("run count truncated".into()));
                }
                let count = u32::from_le_bytes(index_payload[..4].try_into().unwrap()) as usize;
                decode_huffman_payload(&index_payload[4..], count)?
            } else {
                unpack_fixed(&index_payload, index_width)?
            };
            let stream = RunLengthStream {
                n,
                runs: to_u32s(&runs)?,
            };
            let indices = run_length_decode_flags(&stream)?;
            if indices.len() != k {
                return Err(Error::CorruptArchive(format!(
                    "run-length stream holds {} indices, header says {k}",
                    indices.len()
                )));
            }
            let mut deltas = Vec::with_capacity(indices.len());
            let mut previous = 0u32;
            for &index in &indices {
                deltas.push(index - previous);
                previous = index;
            }
            deltas
        }
    };

    if cursor.remaining() != 4 {
        return Err(Error::CorruptArchive(format!(
            "{} trailing bytes after sections",
            cursor.remaining().saturating_sub(4)
        )));
    }

    let set = QuantizedSet {
        n,
        levels,
        delta,
        magnitudes,
        signs,
        index_deltas,
        original_length,
    };
    set.validate()?;
    Ok(Archive { options, set })
}

struct Payload {
    bytes: Vec<u8>,
    element_width: u8,
}

/// Packed (or Huffman-coded) form of an integer array.
fn symbol_payload(values: &[u64], huffman: bool) -> Result<Payload> {
    let element_width = minimal_width(values)?;
    let bytes = if huffman && !values.is_empty() {
        let (table, bits, _) = huffman_encode(values)?;
        let mut payload = table.to_bytes();
        payload.extend_from_slice(&bits);
        payload
    } else {
        pack_fixed(values, element_width)
    };
    Ok(Payload {
        bytes,
        element_width,
    })
}

fn decode_symbols(payload: &[u8], width: u8, count: usize, huffman: bool) -> Result<Vec<u64>> {
    if huffman && count > 0 {
        decode_huffman_payload(payload, count)
    } else {
        let values = unpack_fixed(payload, width)?;
        if values.len() != count {
            return Err(Error::CorruptArchive(format!(
                "section holds {} elements, expected {count}",
                values.len()
            )));
        }
        Ok(values)
    }
}

fn decode_huffman_payload(payload: &[u8], count: usize) -> Result<Vec<u64>> {
    let (table, consumed) = HuffmanTable::from_bytes(payload)?;
    huffman_decode(&table, &payload[consumed..], count)
}

fn minimal_width(values: &[u64]) -> Result<u8> {
    let max = values.iter().copied().max().unwrap_or(0);
    if max > u64::from(u32::MAX) {
        return Err(Error::Unrepresentable(format!(
            "element {max} exceeds 32-bit storage"
        )));
    }
    Ok(if max <= 0xFF {
        8
    } else if max <= 0xFFFF {
        16
    } else {
        32
    })
}

fn pack_fixed(values: &[u64], width: u8) -> Vec<u8> {
    let bytes_per = usize::from(width / 8);
    let mut out = Vec::with_capacity(values.len() * bytes_per);
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes()[..bytes_per]);
    }
    out
}

fn unpack_fixed(bytes: &[u8], width: u8) -> Result<Vec<u64>> {
    if !matches!(width, 8 | 16 | 32) {
        return Err(Error::CorruptArchive(format!("bad element width {width}")));
    }
    let bytes_per = usize::from(width / 8);
    if !bytes.len().is_multiple_of(bytes_per) {
        return Err(Error::CorruptArchive(format!(
            "section length {} not a multiple of element size {bytes_per}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(bytes_per)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..bytes_per].copy_from_slice(chunk);
            u64::from_le_bytes(buf)
        })
        .collect())
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &bit) in bits.iter().enumerate() {
        if bit {
            out[i / 8] |= 1 << (7 - i % 8);
        }
    }
    out
}

fn unpack_bits(bytes: &[u8], count: usize) -> Result<Vec<bool>> {
    if bytes.len() != count.div_ceil(8) {
        return Err(Error::CorruptArchive(format!(
            "sign section holds {} bytes, expected {}",
            bytes.len(),
            count.div_ceil(8)
        )));
    }
    Ok((0..count)
        .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
        .collect())
}

fn to_u32s(values: &[u64]) -> Result<Vec<u32>> {
    values
        .iter()
        .map(|&v| {
            u32::try_from(v).map_err(|_| Error::CorruptArchive(format!("value {v} exceeds u32")))
        })
        .collect()
}

fn write_section(out: &mut Vec<u8>, payload: &Payload) -> Result<()> {
    out.push(payload.element_width);
    let chunks: Vec<&[u8]> = payload.bytes.chunks(CHUNK_SIZE).collect();
    out.extend_from_slice(&(chunks.len() as u32).to_le_bytes());
    for chunk in chunks {
        let compressed = deflate(chunk)?;
        out.extend_from_slice(&(compressed.len() as u32).to_le_bytes());
        out.extend_from_slice(&compressed);
    }
    Ok(())
}

fn read_section(cursor: &mut Cursor, body_len: usize) -> Result<(u8, Vec<u8>)> {
    let width = cursor.take_u8()?;
    let chunk_count = cursor.take_u32()? as usize;
    // each chunk needs at least its length prefix
    if chunk_count > body_len / 4 {
        return Err(Error::CorruptArchive(format!(
            "implausible chunk count {chunk_count}"
        )));
    }
    let mut payload = Vec::new();
    for i in 0..chunk_count {
        let compressed_len = cursor.take_u32()? as usize;
        let compressed = cursor.take_bytes(compressed_len)?;
        let chunk = inflate(compressed, CHUNK_SIZE)?;
        if i + 1 < chunk_count && chunk.len() != CHUNK_SIZE {
            return Err(Error::CorruptArchive(format!(
                "interior chunk {i} inflated to {} bytes",
                chunk.len()
            )));
        }
        payload.extend_from_slice(&chunk);
    }
    Ok((width, payload))
}

fn deflate(data: &[u8]) -> Result<Vec<u8>> {
    let mut encoder = DeflateEncoder::new(Vec::new(), Compression::best());
    encoder.write_all(data)?;
    Ok(encoder.finish()?)
}

fn inflate(data: &[u8], cap: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut decoder = DeflateDecoder::new(data).take(cap as u64 + 1);
    decoder
        .read_to_end(&mut out)
        .map_err(|e| Error::Inflate(e.to_string()))?;
    if out.len() > cap {
        return Err(Error::Inflate(format!(
            "chunk inflated past the {cap}-byte limit"
        )));
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take_bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.remaining() < len {
            return Err(Error::ShortRead {
                needed: self.pos + len,
                got: self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn take_u8(&mut self) -> Result<u8> {
        Ok(self.take_bytes(1)?[0])
    }

    fn take_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take_bytes(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng) -> QuantizedSet {
        let levels = rng.gen_range(1..=5u8);
        let blocks = rng.gen_range(1..=64usize);
        let n = (blocks << levels) as u32;
        let k = rng.gen_range(0..=n as usize / 2);
        let mut positions = std::collections::BTreeSet::new();
        while positions.len() < k {
            positions.insert(rng.gen_range(1..=n));
        }
        let mut deltas = Vec::with_capacity(k);
        let mut prev = 0;
        for &p in &positions {
            deltas.push(p - prev);
            prev = p;
        }
        QuantizedSet {
            n,
            levels,
            delta: rng.gen_range(0.001..500.0),
            magnitudes: (0..k).map(|_| rng.gen_range(1..5000u64)).collect(),
            signs: (0..k).map(|_| rng.gen_bool(0.5)).collect(),
            index_deltas: deltas,
            original_length: n - rng.gen_range(0..(1u32 << levels).min(n)),
        }
    }

    fn all_options() -> Vec<ArchiveOptions> {
        let mut out = Vec::new();
        for entropy_mode in [EntropyMode::None, EntropyMode::Huffman] {
            for index_mode in [IndexMode::Delta, IndexMode::RunLength] {
                out.push(ArchiveOptions {
                    entropy_mode,
                    index_mode,
                    mode: Mode::A,
                });
            }
        }
        out
    }

    #[test]
    fn diag_section_sizes() {
        use crate::codec::{self, CodecParams, Mode};
        use crate::signal_io::Signal;
        let text = std::fs::read_to_string("/tmp/ecg_ap.txt").unwrap();
        let signal = crate::signal_io::read_text(&text).unwrap();
        for (label, params) in [
            ("prd0.45 d35 modeB", CodecParams::mode_b(35.0)),
            ("prd0.19 d8.5 modeA", CodecParams::mode_a(8.5, 0.15)),
        ] {
            let set = codec::encode(&signal, &params).unwrap();
            println!("== {label}: k={} n={}", set.k(), set.n);
            let max_mag = set.magnitudes.iter().max().unwrap();
            println!("   max magnitude {max_mag}");
            for (name, huff) in [("plain", false), ("huffman", true)] {
                let opts = ArchiveOptions {
                    entropy_mode: if huff { EntropyMode::Huffman } else { EntropyMode::None },
                    index_mode: IndexMode::Delta,
                    mode: Mode::B,
                };
                let bytes = serialize(&set, &opts).unwrap();
                // re-walk the sections to get their compressed sizes
                let mut cur = Cursor::new(&bytes);
                cur.take_bytes(27).unwrap();
                let mut sizes = Vec::new();
                for _ in 0..3 {
                    let start = cur.pos;
                    cur.take_u8().unwrap();
                    let chunks = cur.take_u32().unwrap();
                    for _ in 0..chunks {
                        let len = cur.take_u32().unwrap() as usize;
                        cur.take_bytes(len).unwrap();
                    }
                    sizes.push(cur.pos - start);
                }
                println!("   {name}: total={} mags={} signs={} deltas={}", bytes.len(), sizes[0], sizes[1], sizes[2]);
            }
        }
    }

    #[test]
    fn empty_set_archive_is_tiny() {
        let set = QuantizedSet {
            n: 16,
            levels: 4,
            delta: 1.0,
            magnitudes: vec![],
            signs: vec![],
            index_deltas: vec![],
            original_length: 16,
        };
        let bytes = serialize(&set, &ArchiveOptions::default()).unwrap();
        assert!(bytes.len() <= 128, "archive is {} bytes", bytes.len());
        assert_eq!(deserialize(&bytes).unwrap(), set);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..40 {
            let set = random_set(&mut rng);
            for options in all_options() {
                let bytes = serialize(&set, &options).unwrap();
                let archive = parse(&bytes).unwrap();
                assert_eq!(archive.set, set);
                assert_eq!(archive.options, options);
                let again = serialize(&archive.set, &archive.options).unwrap();
                assert_eq!(again, bytes);
            }
        }
    }

    #[test]
    fn truncation_is_a_short_read() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let set = random_set(&mut rng);
        let bytes = serialize(&set, &ArchiveOptions::default()).unwrap();
        assert!(matches!(
            deserialize(&bytes[..10]),
            Err(Error::ShortRead { .. })
        ));
    }

    #[test]
    fn flipped_magic_reports_bad_magic() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let set = random_set(&mut rng);
        let mut bytes = serialize(&set, &ArchiveOptions::default()).unwrap();
        bytes[0] ^= 0xFF;
        assert!(matches!(deserialize(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn unknown_version_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let set = random_set(&mut rng);
        let mut bytes = serialize(&set, &ArchiveOptions::default()).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            deserialize(&bytes),
            Err(Error::VersionMismatch(9))
        ));
    }

    #[test]
    fn any_payload_flip_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let set = random_set(&mut rng);
        let bytes = serialize(&set, &ArchiveOptions::default()).unwrap();
        for _ in 0..100 {
            let mut mutated = bytes.clone();
            let pos = rng.gen_range(0..mutated.len());
            let mask = rng.gen_range(1..=255u8);
            mutated[pos] ^= mask;
            assert!(deserialize(&mutated).is_err(), "mutation at {pos} accepted");
        }
    }

    #[test]
    fn chunked_size_tracks_plain_deflate() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let k = 40_000usize;
        let set = QuantizedSet {
            n: 650_000,
            levels: 4,
            delta: 35.0,
            magnitudes: (0..k).map(|_| rng.gen_range(1..40u64)).collect(),
            signs: (0..k).map(|_| rng.gen_bool(0.5)).collect(),
            index_deltas: (0..k).map(|_| rng.gen_range(1..16u32)).collect(),
            original_length: 650_000,
        };
        let archive = serialize(&set, &ArchiveOptions::default()).unwrap();

        let mut packed = Vec::new();
        packed.extend(pack_fixed(&set.magnitudes, 8));
        packed.extend(pack_bits(&set.signs));
        packed.extend(pack_fixed(
            &set.index_deltas.iter().map(|&d| u64::from(d)).collect::<Vec<_>>(),
            8,
        ));
        let reference = deflate(&packed).unwrap();
        let ratio = archive.len() as f64 / reference.len() as f64;
        assert!(
            (0.8..=1.2).contains(&ratio),
            "container {} vs reference deflate {}",
            archive.len(),
            reference.len()
        );
    }
}
