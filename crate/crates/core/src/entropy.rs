//! Optional post-codec symbol coding: canonical Huffman streams and the
//! run-length baseline for the nonzero-coefficient flag vector.
//!
//! Bit streams are MSB-first within bytes. A Huffman table serializes as a
//! little-endian u16 symbol count followed by one u8 code length per symbol,
//! so canonical codes are reconstructible from lengths alone.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Largest symbol value a table can describe (u16 symbol count).
const MAX_SYMBOL: u64 = u16::MAX as u64 - 1;

/// Canonical Huffman table: code lengths per symbol, lengths-only form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    code_lengths: Vec<u8>,
}

impl HuffmanTable {
    /// Build optimal code lengths from symbol frequencies. Ties in tree
    /// construction break by symbol value; a one-symbol alphabet gets
    /// code length 1 so the payload stays prefix-free and non-empty.
    pub fn from_symbols(symbols: &[u64]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParam("no symbols to code".into()));
        }
        let max = *symbols.iter().max().unwrap();
        if max > MAX_SYMBOL {
            return Err(Error::SymbolRange(max));
        }
        let count = max as usize + 1;
        let mut freq = vec![0u64; count];
        for &s in symbols {
            freq[s as usize] += 1;
        }

        let mut code_lengths = vec![0u8; count];
        let present: Vec<usize> = (0..count).filter(|&s| freq[s] > 0).collect();
        if present.len() == 1 {
            code_lengths[present[0]] = 1;
            return Ok(Self { code_lengths });
        }

        // Min-heap over (freq, tie key); leaves carry their symbol value so
        // equal-frequency leaves merge in symbol order, internal nodes carry
        // a creation counter. Parents get larger node ids than children,
        // which lets depths resolve in one reverse pass.
        #[derive(PartialEq, Eq)]
        struct Node {
            freq: u64,
            tie: (u8, u64),
            id: usize,
        }
        impl Ord for Node {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                (other.freq, other.tie).cmp(&(self.freq, self.tie))
            }
        }
        impl PartialOrd for Node {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut parent: Vec<usize> = vec![usize::MAX; present.len()];
        let mut heap: BinaryHeap<Node> = present
            .iter()
            .enumerate()
            .map(|(id, &s)| Node {
                freq: freq[s],
                tie: (0, s as u64),
                id,
            })
            .collect();
        let mut merges = 0u64;
        while heap.len() > 1 {
            let a = heap.pop().unwrap();
            let b = heap.pop().unwrap();
            let id = parent.len();
            parent[a.id] = id;
            parent[b.id] = id;
            parent.push(usize::MAX);
            heap.push(Node {
                freq: a.freq + b.freq,
                tie: (1, merges),
                id,
            });
            merges += 1;
        }
        let mut depth = vec![0u8; parent.len()];
        for id in (0..parent.len() - 1).rev() {
            depth[id] = depth[parent[id]] + 1;
        }
        for (id, &s) in present.iter().enumerate() {
            code_lengths[s] = depth[id];
        }
        Ok(Self { code_lengths })
    }

    pub fn symbol_count(&self) -> usize {
        self.code_lengths.len()
    }

    pub fn code_lengths(&self) -> &[u8] {
        &self.code_lengths
    }

    /// u16 LE symbol count, then one length byte per symbol.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + self.code_lengths.len());
        out.extend_from_slice(&(self.code_lengths.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.code_lengths);
        out
    }

    /// Parse a table and return it with the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 2 {
            return Err(Error::CorruptStream("table header truncated".into()));
        }
        let count = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
        if bytes.len() < 2 + count {
            return Err(Error::CorruptStream("table lengths truncated".into()));
        }
        let table = Self {
            code_lengths: bytes[2..2 + count].to_vec(),
        };
        table.check_kraft()?;
        Ok((table, 2 + count))
    }

    /// Kraft sum over assigned lengths must not exceed 1, otherwise the
    /// canonical code is overfull and not decodable.
    fn check_kraft(&self) -> Result<()> {
        let mut sum = 0.0f64;
        for &len in &self.code_lengths {
            if len > 0 {
                sum += (0.5f64).powi(i32::from(len));
            }
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::CorruptStream("overfull code (Kraft sum > 1)".into()));
        }
        Ok(())
    }

    /// Canonical codes: symbols sorted by (length, value) receive
    /// consecutive codes per length.
    fn assign_codes(&self) -> Vec<(u32, u8)> {
        let max_len = self.code_lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut bl_count = vec![0u32; max_len + 1];
        for &len in &self.code_lengths {
            if len > 0 {
                bl_count[len as usize] += 1;
            }
        }
        let mut next_code = vec![0u32; max_len + 2];
        let mut code = 0u32;
        for len in 1..=max_len {
            code = (code + bl_count[len - 1]) << 1;
            next_code[len] = code;
        }
        self.code_lengths
            .iter()
            .map(|&len| {
                if len == 0 {
                    (0, 0)
                } else {
                    let c = next_code[len as usize];
                    next_code[len as usize] += 1;
                    (c, len)
                }
            })
            .collect()
    }
}

/// MSB-first bit accumulator.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bits(&mut self, code: u32, len: u8) {
        for shift in (0..len).rev() {
            let bit = (code >> shift) & 1;
            if self.bit_len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                let byte = self.bit_len / 8;
                self.bytes[byte] |= 1 << (7 - self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// MSB-first bit cursor over a byte slice.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn next_bit(&mut self) -> Result<u32> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(Error::CorruptStream("bit stream truncated".into()));
        }
        let bit = (self.bytes[byte] >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(u32::from(bit))
    }
}

/// Encode symbols with a freshly built canonical table. Returns the table,
/// the packed bit stream, and its exact length in bits.
pub fn huffman_encode(symbols: &[u64]) -> Result<(HuffmanTable, Vec<u8>, usize)> {
    let table = HuffmanTable::from_symbols(symbols)?;
    let codes = table.assign_codes();
    let mut writer = BitWriter::new();
    for &s in symbols {
        let (code, len) = codes[s as usize];
        writer.push_bits(code, len);
    }
    let bit_len = writer.bit_len();
    Ok((table, writer.into_bytes(), bit_len))
}

/// Decode exactly `count` symbols from an MSB-first bit stream.
pub fn huffman_decode(table: &HuffmanTable, bits: &[u8], count: usize) -> Result<Vec<u64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    // Per-length canonical decode tables: first code, and the symbols of
    // that length in value order.
    let max_len = table.code_lengths.iter().copied().max().unwrap_or(0) as usize;
    if max_len == 0 {
        return Err(Error::CorruptStream("empty code for nonzero count".into()));
    }
    let mut by_length: Vec<Vec<u64>> = vec![Vec::new(); max_len + 1];
    for (symbol, &len) in table.code_lengths.iter().enumerate() {
        if len > 0 {
            by_length[len as usize].push(symbol as u64);
        }
    }
    let mut first_code = vec![0u32; max_len + 1];
    let mut code = 0u32;
    for len in 1..=max_len {
        code = (code + by_length[len - 1].len() as u32) << 1;
        first_code[len] = code;
    }

    let mut reader = BitReader::new(bits);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut code = 0u32;
        let mut len = 0usize;
        loop {
            code = (code << 1) | reader.next_bit()?;
            len += 1;
            if len > max_len {
                return Err(Error::CorruptStream("code exceeds maximum length".into()));
            }
            let offset = code.wrapping_sub(first_code[len]);
            if (offset as usize) < by_length[len].len() {
                out.push(by_length[len][offset as usize]);
                break;
            }
        }
    }
    Ok(out)
}

/// Zero/nonzero flag vector over positions 1..=n stored as alternating run
/// lengths, zeros first (the leading zeros run may be empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLengthStream {
    pub n: u32,
    pub runs: Vec<u32>,
}

/// Encode strictly increasing 1-based indices as the run-length form of
/// their flag vector.
pub fn run_length_encode_flags(indices: &[u32], n: u32) -> Result<RunLengthStream> {
    let mut runs = Vec::new();
    let mut position = 0u32; // flags emitted so far
    let mut ones_open = false;
    for &index in indices {
        if index == 0 || index <= position {
            return Err(Error::InvalidParam(
                "indices must be strictly increasing and 1-based".into(),
            ));
        }
        if index > n {
            return Err(Error::InvalidParam(format!("index {index} exceeds n={n}")));
        }
        if ones_open && index == position + 1 {
            *runs.last_mut().unwrap() += 1;
        } else {
            runs.push(index - position - 1); // zeros gap, possibly 0 up front
            runs.push(1);
            ones_open = true;
        }
        position = index;
    }
    if position < n || runs.is_empty() {
        runs.push(n - position); // trailing zeros (the whole vector if empty)
    }
    Ok(RunLengthStream { n, runs })
}

/// Recover the 1-based indices of set flags.
pub fn run_length_decode_flags(stream: &RunLengthStream) -> Result<Vec<u32>> {
    let mut indices = Vec::new();
    let mut position = 0u64;
    for (i, &run) in stream.runs.iter().enumerate() {
        if run == 0 && i != 0 {
            return Err(Error::CorruptArchive("zero-length run".into()));
        }
        let ones = i % 2 == 1;
        if ones {
            for _ in 0..run {
                position += 1;
                indices.push(position as u32);
            }
        } else {
            position += u64::from(run);
        }
        if position > u64::from(stream.n) {
            return Err(Error::CorruptArchive("runs exceed flag count".into()));
        }
    }
    if position != u64::from(stream.n) {
        return Err(Error::CorruptArchive(format!(
            "runs cover {position} of {} flags",
            stream.n
        )));
    }
    Ok(indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_symbol_alphabet_gets_one_bit() {
        let (table, bytes, bit_len) = huffman_encode(&[7, 7, 7, 7]).unwrap();
        assert_eq!(table.code_lengths()[7], 1);
        assert_eq!(bit_len, 4);
        assert_eq!(bytes.len(), 1);
        let back = huffman_decode(&table, &bytes, 4).unwrap();
        assert_eq!(back, vec![7, 7, 7, 7]);
    }

    #[test]
    fn two_symbol_alphabet() {
        let symbols = [0u64, 1, 0, 1, 0];
        let (table, bytes, bit_len) = huffman_encode(&symbols).unwrap();
        assert_eq!(table.code_lengths(), &[1, 1]);
        assert_eq!(bit_len, 5);
        assert_eq!(huffman_decode(&table, &bytes, 5).unwrap(), symbols);
    }

    #[test]
    fn empty_decode_with_zero_count() {
        let (table, _, _) = huffman_encode(&[3]).unwrap();
        assert_eq!(huffman_decode(&table, &[], 0).unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn truncated_stream_errors() {
        let symbols: Vec<u64> = (0..32).map(|i| i % 5).collect();
        let (table, bytes, _) = huffman_encode(&symbols).unwrap();
        let cut = &bytes[..bytes.len() - 1];
        assert!(matches!(
            huffman_decode(&table, cut, symbols.len()),
            Err(Error::CorruptStream(_))
        ));
    }

    #[test]
    fn invalid_prefix_walk_errors() {
        // one-symbol table has only code '0'; an all-ones stream is invalid
        let (table, _, _) = huffman_encode(&[2, 2]).unwrap();
        assert!(matches!(
            huffman_decode(&table, &[0xFF], 1),
            Err(Error::CorruptStream(_))
        ));
    }

    #[test]
    fn table_bytes_roundtrip() {
        let (table, _, _) = huffman_encode(&[1, 2, 3, 3, 3, 2]).unwrap();
        let bytes = table.to_bytes();
        let (parsed, consumed) = HuffmanTable::from_bytes(&bytes).unwrap();
        assert_eq!(consumed, bytes.len());
        assert_eq!(parsed, table);
    }

    #[test]
    fn overfull_table_rejected() {
        let bytes = [3u8, 0, 1, 1, 1]; // three length-1 codes
        assert!(matches!(
            HuffmanTable::from_bytes(&bytes),
            Err(Error::CorruptStream(_))
        ));
    }

    #[test]
    fn symbol_above_alphabet_limit_rejected() {
        assert!(matches!(
            huffman_encode(&[70000]),
            Err(Error::SymbolRange(70000))
        ));
    }

    #[test]
    fn roundtrip_random_zipf_like() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let len = rng.gen_range(1..2000usize);
            let symbols: Vec<u64> = (0..len)
                .map(|_| {
                    let u: f64 = rng.gen_range(0.0..1.0);
                    ((1.0 / (1.0 - u)).powf(0.7) as u64).min(500)
                })
                .collect();
            let (table, bytes, _) = huffman_encode(&symbols).unwrap();
            let decoded = huffman_decode(&table, &bytes, symbols.len()).unwrap();
            assert_eq!(decoded, symbols);
        }
    }

    #[test]
    fn roundtrip_large_zipf_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let symbols: Vec<u64> = (0..100_000)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0..1.0);
                ((1.0 / (1.0 - u)) as u64).min(10_000)
            })
            .collect();
        let (table, bytes, bit_len) = huffman_encode(&symbols).unwrap();
        assert_eq!(huffman_decode(&table, &bytes, symbols.len()).unwrap(), symbols);
        // skewed stream must beat the fixed-width packing it replaces
        assert!(bit_len < symbols.len() * 8);
    }

    #[test]
    fn run_length_all_ones() {
        let stream = run_length_encode_flags(&[1, 2, 3], 3).unwrap();
        assert_eq!(stream.runs, vec![0, 3]);
        assert_eq!(run_length_decode_flags(&stream).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn run_length_all_zeros() {
        let stream = run_length_encode_flags(&[], 5).unwrap();
        assert_eq!(stream.runs, vec![5]);
        assert_eq!(run_length_decode_flags(&stream).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn run_length_mixed_example() {
        let stream = run_length_encode_flags(&[2, 5], 6).unwrap();
        assert_eq!(stream.runs, vec![1, 1, 2, 1, 1]);
        assert_eq!(run_length_decode_flags(&stream).unwrap(), vec![2, 5]);
    }

    #[test]
    fn run_length_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(1..500u32);
            let mut indices: Vec<u32> = (1..=n).filter(|_| rng.gen_bool(0.3)).collect();
            indices.dedup();
            let stream = run_length_encode_flags(&indices, n).unwrap();
            assert_eq!(run_length_decode_flags(&stream).unwrap(), indices);
        }
    }

    #[test]
    fn run_length_rejects_bad_totals() {
        let stream = RunLengthStream {
            n: 4,
            runs: vec![2, 1],
        };
        assert!(matches!(
            run_length_decode_flags(&stream),
            Err(Error::CorruptArchive(_))
        ));
    }
}
