//! Compressed input: splittable bzip2, gzip, page record splitting, dedup and
//! the file merger.

pub mod bzip2;
mod merge;
mod split;

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

pub use self::bzip2::{scan_bzip2_blocks, BlockIndex, ParallelBzip2Reader};
pub use merge::{merge_files, MergeCodec, MergeReport};
pub use split::{dedup_records, split_pages, Dedup, PageSplitter, RawPageRecord, MAX_RECORD_BYTES};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a bzip2 stream: {0}")]
    MalformedHeader(String),
    #[error("corrupt bzip2 block {ordinal} at bit {bit_offset}: {reason}")]
    CorruptBlock {
        ordinal: usize,
        bit_offset: u64,
        reason: String,
    },
    #[error("input ended inside a <page> element starting at byte {offset}")]
    UnterminatedPage { offset: u64 },
    #[error("page record of {size} bytes exceeds the {limit} byte limit (title: {title})")]
    UnsplittableRecord { size: u64, limit: u64, title: String },
    #[error("directory {0} contains no input files")]
    EmptyDirectory(String),
}

impl From<IngestError> for io::Error {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(inner) => inner,
            other => io::Error::other(other),
        }
    }
}

/// Unwraps an [`IngestError`] carried through an `io::Error`.
pub fn ingest_error(e: io::Error) -> IngestError {
    if e.get_ref().is_some_and(|inner| inner.is::<IngestError>()) {
        let inner = e.into_inner().expect("checked above");
        *inner.downcast::<IngestError>().expect("checked above")
    } else {
        IngestError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    Bzip2,
    Gzip,
    Plain,
}

impl Codec {
    pub fn from_path(path: &Path) -> Codec {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bz2") => Codec::Bzip2,
            Some("gz") => Codec::Gzip,
            _ => Codec::Plain,
        }
    }
}

/// Opens `path` and returns its decompressed bytes as a reader.
///
/// `.bz2` files are decoded block-parallel on `parallelism` threads; `.gz`
/// files are decoded sequentially (multi-member aware); anything else is
/// passed through. Output is identical for every `parallelism`.
pub fn read_decompressed(path: &Path, parallelism: usize) -> Result<Box<dyn Read + Send>, IngestError> {
    match Codec::from_path(path) {
        Codec::Bzip2 => {
            let data = std::fs::read(path)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(parallelism.max(1))
                .thread_name(|i| format!("bzip2-{i}"))
                .build()
                .map_err(io::Error::other)?;
            Ok(Box::new(ParallelBzip2Reader::new(data, Arc::new(pool))?))
        }
        Codec::Gzip => {
            let file = BufReader::new(File::open(path)?);
            Ok(Box::new(flate2::bufread::MultiGzDecoder::new(file)))
        }
        Codec::Plain => Ok(Box::new(File::open(path)?)),
    }
}

/// Reads everything from [`read_decompressed`] into memory.
pub fn read_decompressed_to_vec(path: &Path, parallelism: usize) -> Result<Vec<u8>, IngestError> {
    let mut out = Vec::new();
    read_decompressed(path, parallelism)?
        .read_to_end(&mut out)
        .map_err(ingest_error)?;
    Ok(out)
}
