//! Splittable bzip2 reading.
//!
//! A bzip2 stream is a 4 byte header (`BZh1`..`BZh9`) followed by blocks,
//! each introduced by the 48-bit magic `0x314159265359`, and terminated by
//! the end-of-stream magic `0x177245385090` plus a 32-bit combined CRC. None
//! of these are byte aligned. We locate every candidate magic, cut the
//! compressed stream into per-block bit ranges, and decode those ranges
//! independently by wrapping each one into a minimal single-block stream.
//!
//! The magic values can also appear by chance inside Huffman-coded data, so
//! a candidate is only trusted once the wrapped block decodes and its CRC
//! checks out. A range that fails is merged with the following one.

use std::collections::VecDeque;
use std::io::{self, Read};
use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::IngestError;

pub const BLOCK_MAGIC: u64 = 0x3141_5926_5359;
pub const EOS_MAGIC: u64 = 0x1772_4538_5090;
const MAGIC_MASK: u64 = (1 << 48) - 1;

/// Longest run of candidate ranges we will merge before declaring a block
/// corrupt. A legitimate block never contains this many false positives.
const MAX_MERGE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    Block,
    EndOfStream,
}

/// Bit offsets of block magics in a bzip2 file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockIndex {
    pub offsets: Vec<u64>,
}

impl BlockIndex {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

fn check_header(data: &[u8]) -> Result<(), IngestError> {
    if data.len() < 4 || &data[..3] != b"BZh" || !(b'1'..=b'9').contains(&data[3]) {
        let shown: Vec<u8> = data.iter().take(4).copied().collect();
        return Err(IngestError::MalformedHeader(format!(
            "expected BZh[1-9], found {:?}",
            String::from_utf8_lossy(&shown)
        )));
    }
    Ok(())
}

/// All candidate magic positions (bit offsets) in `data[from..to]`, in order.
///
/// Only matches that start inside the byte range are reported; matches may
/// extend past `to`.
fn scan_range(data: &[u8], from: usize, to: usize) -> Vec<(u64, MarkerKind)> {
    let mut found = Vec::new();
    // A 48-bit match starting in byte `from` ends at most 7 bytes later.
    let end = (to + 7).min(data.len());
    let mut window: u64 = 0;
    for (idx, &byte) in data.iter().enumerate().take(end).skip(from.saturating_sub(6)) {
        window = (window << 8) | byte as u64;
        if idx < 5 {
            continue;
        }
        // Bit index of the last bit of `byte` is 8*idx + 7.
        for shift in (0..8).rev() {
            let candidate = (window >> shift) & MAGIC_MASK;
            let kind = if candidate == BLOCK_MAGIC {
                MarkerKind::Block
            } else if candidate == EOS_MAGIC {
                MarkerKind::EndOfStream
            } else {
                continue;
            };
            let first_bit = (8 * idx as u64 + 7 - shift as u64).checked_sub(47);
            if let Some(pos) = first_bit {
                if pos >= 8 * from as u64 && pos < 8 * to as u64 {
                    found.push((pos, kind));
                }
            }
        }
    }
    found
}

/// Every bit position where a block or end-of-stream magic occurs. Scanning
/// is split into chunks and run on `pool` when one is given.
pub fn scan_markers(data: &[u8], pool: Option<&ThreadPool>) -> Vec<(u64, MarkerKind)> {
    const CHUNK: usize = 4 << 20;
    if data.len() <= CHUNK || pool.is_none() {
        return scan_range(data, 0, data.len());
    }
    let ranges: Vec<(usize, usize)> = (0..data.len())
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(data.len())))
        .collect();
    let pool = pool.expect("checked above");
    pool.install(|| {
        ranges
            .par_iter()
            .map(|&(from, to)| scan_range(data, from, to))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    })
}

/// Candidate block offsets in a complete bzip2 file.
///
/// Offsets are bit granular. Candidates have not been validated yet; see
/// [`ParallelBzip2Reader`] for the validating decoder.
pub fn scan_bzip2_blocks(data: &[u8]) -> Result<BlockIndex, IngestError> {
    check_header(data)?;
    let offsets = scan_markers(data, None)
        .into_iter()
        .filter(|(_, kind)| *kind == MarkerKind::Block)
        .map(|(pos, _)| pos)
        .collect();
    Ok(BlockIndex { offsets })
}

/// Appends bits `[start, end)` of `data` to `out` starting at its current bit
/// length `out_bits`. Returns the new bit length.
fn append_bits(out: &mut Vec<u8>, out_bits: u64, data: &[u8], start: u64, end: u64) -> u64 {
    let mut bits = out_bits;
    let mut pos = start;
    if bits % 8 == 0 && end - pos >= 8 {
        // Byte-aligned output: copy whole shifted bytes.
        debug_assert_eq!(out.len() as u64 * 8, bits);
        let shift = (pos % 8) as u32;
        let first = (pos / 8) as usize;
        let whole = ((end - pos) / 8) as usize;
        out.reserve(whole);
        out.extend((first..first + whole).map(|i| {
            let hi = data[i] as u16;
            let lo = data.get(i + 1).copied().unwrap_or(0) as u16;
            (((hi << 8) | lo) << shift >> 8) as u8
        }));
        bits += whole as u64 * 8;
        pos += whole as u64 * 8;
    }
    while pos < end {
        // Copy up to 8 bits at a time from an arbitrary input offset.
        let take = (end - pos).min(8) as u32;
        let byte_idx = (pos / 8) as usize;
        let bit_in_byte = (pos % 8) as u32;
        let hi = data[byte_idx] as u16;
        let lo = data.get(byte_idx + 1).copied().unwrap_or(0) as u16;
        let word = (hi << 8) | lo;
        let value = ((word << bit_in_byte) >> 8) as u8 >> (8 - take);
        push_bits(out, bits, value as u64, take);
        bits += take as u64;
        pos += take as u64;
    }
    bits
}

/// Appends the low `count` bits of `value` (MSB first).
fn push_bits(out: &mut Vec<u8>, bit_len: u64, value: u64, count: u32) {
    let mut bit_len = bit_len;
    for i in (0..count).rev() {
        let bit = ((value >> i) & 1) as u8;
        let byte_idx = (bit_len / 8) as usize;
        if byte_idx == out.len() {
            out.push(0);
        }
        out[byte_idx] |= bit << (7 - (bit_len % 8));
        bit_len += 1;
    }
}

fn read_bits(data: &[u8], start: u64, count: u32) -> Option<u64> {
    if start + count as u64 > data.len() as u64 * 8 {
        return None;
    }
    let mut value = 0u64;
    for i in 0..count as u64 {
        let pos = start + i;
        let bit = (data[(pos / 8) as usize] >> (7 - pos % 8)) & 1;
        value = (value << 1) | bit as u64;
    }
    Some(value)
}

/// Wraps the block occupying bits `[start, end)` into a standalone stream:
/// header, the block bits, an end-of-stream marker and the combined CRC
/// (which equals the block CRC for a one-block stream).
fn wrap_block(data: &[u8], start: u64, end: u64) -> Option<Vec<u8>> {
    let block_crc = read_bits(data, start + 48, 32)?;
    let mut out = Vec::with_capacity(((end - start) / 8) as usize + 16);
    out.extend_from_slice(b"BZh9");
    let mut bits = 32;
    bits = append_bits(&mut out, bits, data, start, end);
    push_bits(&mut out, bits, EOS_MAGIC, 48);
    bits += 48;
    push_bits(&mut out, bits, block_crc, 32);
    Some(out)
}

/// Decodes one block range. Fails on truncation or CRC mismatch.
pub fn decode_block(data: &[u8], start: u64, end: u64) -> Result<Vec<u8>, String> {
    let wrapped = wrap_block(data, start, end).ok_or_else(|| "block header truncated".to_string())?;
    let mut decoder = bzip2::read::BzDecoder::new(&wrapped[..]);
    let mut out = Vec::new();
    decoder.read_to_end(&mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

/// A block candidate and the position of the next marker after it.
#[derive(Debug, Clone, Copy)]
struct Segment {
    start: u64,
    end: u64,
}

fn segments(markers: &[(u64, MarkerKind)], total_bits: u64) -> Vec<Segment> {
    markers
        .iter()
        .enumerate()
        .filter(|(_, (_, kind))| *kind == MarkerKind::Block)
        .map(|(i, &(start, _))| Segment {
            start,
            end: markers.get(i + 1).map_or(total_bits, |&(pos, _)| pos),
        })
        .collect()
}

/// Decoded output of a run of segments that together form one real block.
struct DecodedBlock {
    bytes: Vec<u8>,
    segments_used: usize,
}

/// Decodes bzip2 blocks concurrently and yields the output in block order.
///
/// Output is byte-identical to a sequential decode for any pool size.
pub struct ParallelBzip2Reader {
    data: Arc<Vec<u8>>,
    segments: Vec<Segment>,
    next_segment: usize,
    next_ordinal: usize,
    pool: Arc<ThreadPool>,
    batch: usize,
    ready: VecDeque<Vec<u8>>,
    current: Vec<u8>,
    current_pos: usize,
}

impl ParallelBzip2Reader {
    pub fn new(data: Vec<u8>, pool: Arc<ThreadPool>) -> Result<Self, IngestError> {
        check_header(&data)?;
        let markers = scan_markers(&data, Some(&pool));
        let segments = segments(&markers, data.len() as u64 * 8);
        let batch = pool.current_num_threads().max(1) * 2;
        Ok(ParallelBzip2Reader {
            data: Arc::new(data),
            segments,
            next_segment: 0,
            next_ordinal: 0,
            pool,
            batch,
            ready: VecDeque::new(),
            current: Vec::new(),
            current_pos: 0,
        })
    }

    /// Validated block offsets. Consumes the reader's work: every block is
    /// decoded once to confirm it.
    pub fn validated_blocks(mut self) -> Result<BlockIndex, IngestError> {
        let mut offsets = Vec::new();
        while self.next_segment < self.segments.len() {
            let first = self.next_segment;
            let decoded = self.decode_batch()?;
            let mut seg = first;
            for block in decoded {
                offsets.push(self.segments[seg].start);
                seg += block.segments_used;
            }
        }
        Ok(BlockIndex { offsets })
    }

    fn decode_batch(&mut self) -> Result<Vec<DecodedBlock>, IngestError> {
        let from = self.next_segment;
        let to = (from + self.batch).min(self.segments.len());
        let data = &self.data;
        let segs = &self.segments[from..to];
        let attempts: Vec<Result<Vec<u8>, String>> = self.pool.install(|| {
            segs.par_iter()
                .map(|seg| decode_block(data, seg.start, seg.end))
                .collect()
        });

        let mut out = Vec::new();
        let mut idx = from;
        let mut attempts = attempts.into_iter().map(Some).collect::<Vec<_>>();
        while idx < to {
            let attempt = attempts[idx - from].take().expect("each attempt consumed once");
            match attempt {
                Ok(bytes) => {
                    out.push(DecodedBlock { bytes, segments_used: 1 });
                    idx += 1;
                }
                Err(first_error) => {
                    let block = self.merge_forward(idx, first_error)?;
                    idx += block.segments_used;
                    out.push(block);
                }
            }
            self.next_ordinal += 1;
        }
        self.next_segment = idx;
        Ok(out)
    }

    /// Retries a failed segment merged with its successors, which drops any
    /// false-positive markers inside the real block.
    fn merge_forward(&self, idx: usize, first_error: String) -> Result<DecodedBlock, IngestError> {
        let start = self.segments[idx].start;
        let mut last_error = first_error;
        for extra in 1..MAX_MERGE {
            let Some(seg) = self.segments.get(idx + extra) else { break };
            // The range ends at the marker after the absorbed segment.
            match decode_block(&self.data, start, seg.end) {
                Ok(bytes) => {
                    log::debug!("bzip2 block at bit {start} spans {} candidate markers", extra + 1);
                    return Ok(DecodedBlock { bytes, segments_used: extra + 1 });
                }
                Err(e) => last_error = e,
            }
        }
        Err(IngestError::CorruptBlock {
            ordinal: self.next_ordinal,
            bit_offset: start,
            reason: last_error,
        })
    }

    fn refill(&mut self) -> io::Result<bool> {
        while self.ready.is_empty() {
            if self.next_segment >= self.segments.len() {
                return Ok(false);
            }
            let blocks = self.decode_batch().map_err(io::Error::other)?;
            self.ready.extend(blocks.into_iter().map(|b| b.bytes));
        }
        Ok(true)
    }
}

impl Read for ParallelBzip2Reader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        loop {
            if self.current_pos < self.current.len() {
                let n = (self.current.len() - self.current_pos).min(buf.len());
                buf[..n].copy_from_slice(&self.current[self.current_pos..self.current_pos + n]);
                self.current_pos += n;
                return Ok(n);
            }
            if !self.refill()? {
                return Ok(0);
            }
            self.current = self.ready.pop_front().expect("refill guarantees a block");
            self.current_pos = 0;
        }
    }
}
