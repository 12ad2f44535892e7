use std::collections::HashSet;
use std::io::Read;

use sha2::{Digest, Sha256};

use super::{ingest_error, IngestError};

/// Largest page record we accept.
pub const MAX_RECORD_BYTES: u64 = 2 << 30;

const OPEN: &[u8] = b"<page";
const CLOSE: &[u8] = b"</page>";

/// One complete `<page>...</page>` fragment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawPageRecord {
    xml: String,
}

impl RawPageRecord {
    /// Fails unless `xml` starts with a page tag and ends with `</page>`.
    pub fn new(xml: impl Into<String>) -> Result<Self, String> {
        let xml = xml.into();
        let opens = xml.as_bytes().starts_with(OPEN)
            && matches!(xml.as_bytes().get(OPEN.len()), Some(b'>') | Some(b' ' | b'\t' | b'\n' | b'\r'));
        if !opens || !xml.ends_with("</page>") {
            return Err(format!("not a page fragment: {:.40}", xml));
        }
        Ok(RawPageRecord { xml })
    }

    pub fn xml(&self) -> &str {
        &self.xml
    }

    pub fn into_xml(self) -> String {
        self.xml
    }
}

/// Position of the next `<page>` or `<page ` opening tag at or after `from`.
fn find_open(buf: &[u8], from: usize) -> Option<usize> {
    let mut at = from;
    while let Some(rel) = memchr::memmem::find(&buf[at..], OPEN) {
        let pos = at + rel;
        match buf.get(pos + OPEN.len()) {
            Some(b'>' | b' ' | b'\t' | b'\n' | b'\r') => return Some(pos),
            // Could still become a match once more bytes arrive.
            None => return Some(pos),
            _ => at = pos + 1,
        }
    }
    None
}

fn title_hint(fragment: &[u8]) -> String {
    let text = String::from_utf8_lossy(&fragment[..fragment.len().min(4096)]);
    text.split_once("<title>")
        .and_then(|(_, rest)| rest.split_once("</title>"))
        .map_or_else(|| "<unknown>".to_string(), |(t, _)| t.to_string())
}

/// Streams page fragments out of a decompressed dump.
///
/// Anything outside page elements is dropped. Matching is on literal bytes,
/// with no XML parsing.
pub struct PageSplitter<R> {
    source: R,
    buf: Vec<u8>,
    /// Start of the page currently being collected, relative to `buf`.
    page_start: Option<usize>,
    /// Where to resume searching inside `buf`.
    cursor: usize,
    /// Absolute stream offset of `buf[0]`.
    consumed: u64,
    eof: bool,
    limit: u64,
}

impl<R: Read> PageSplitter<R> {
    pub fn new(source: R) -> Self {
        Self::with_limit(source, MAX_RECORD_BYTES)
    }

    /// Uses a custom record size limit instead of [`MAX_RECORD_BYTES`].
    pub fn with_limit(source: R, limit: u64) -> Self {
        PageSplitter {
            source,
            buf: Vec::with_capacity(1 << 20),
            page_start: None,
            cursor: 0,
            consumed: 0,
            eof: false,
            limit,
        }
    }

    fn fill(&mut self) -> Result<bool, IngestError> {
        // Drop bytes nobody can reference any more.
        let keep_from = self.page_start.unwrap_or(self.cursor.saturating_sub(CLOSE.len()));
        if keep_from > 0 && keep_from >= self.buf.len() / 2 {
            self.buf.drain(..keep_from);
            self.consumed += keep_from as u64;
            self.cursor -= keep_from;
            if let Some(start) = self.page_start.as_mut() {
                *start -= keep_from;
            }
        }
        let old = self.buf.len();
        self.buf.resize(old + (1 << 20), 0);
        let n = loop {
            match self.source.read(&mut self.buf[old..]) {
                Ok(n) => break n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.buf.truncate(old);
                    return Err(ingest_error(e));
                }
            }
        };
        self.buf.truncate(old + n);
        if n == 0 {
            self.eof = true;
        }
        Ok(n > 0)
    }

    fn next_record(&mut self) -> Result<Option<RawPageRecord>, IngestError> {
        loop {
            match self.page_start {
                None => match find_open(&self.buf, self.cursor) {
                    Some(pos) if pos + OPEN.len() < self.buf.len() => {
                        self.page_start = Some(pos);
                        self.cursor = pos + OPEN.len();
                    }
                    Some(pos) => {
                        // Tag prefix at the end of the buffer; wait for more.
                        self.cursor = pos;
                        if !self.fill()? {
                            return Ok(None);
                        }
                    }
                    None => {
                        self.cursor = self.buf.len().saturating_sub(OPEN.len());
                        if !self.fill()? {
                            return Ok(None);
                        }
                    }
                },
                Some(start) => {
                    if let Some(rel) = memchr::memmem::find(&self.buf[self.cursor..], CLOSE) {
                        let end = self.cursor + rel + CLOSE.len();
                        self.check_size((end - start) as u64, start)?;
                        let bytes = self.buf[start..end].to_vec();
                        self.page_start = None;
                        self.cursor = end;
                        let xml = String::from_utf8(bytes).map_err(|e| {
                            IngestError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
                        })?;
                        return Ok(Some(RawPageRecord { xml }));
                    }
                    self.cursor = self.buf.len().saturating_sub(CLOSE.len() - 1).max(start + OPEN.len());
                    self.check_size((self.buf.len() - start) as u64, start)?;
                    if !self.fill()? {
                        return Err(IngestError::UnterminatedPage {
                            offset: self.consumed + self.page_start.unwrap_or(0) as u64,
                        });
                    }
                }
            }
        }
    }

    fn check_size(&self, size: u64, start: usize) -> Result<(), IngestError> {
        if size > self.limit {
            return Err(IngestError::UnsplittableRecord {
                size,
                limit: self.limit,
                title: title_hint(&self.buf[start..]),
            });
        }
        Ok(())
    }
}

impl<R: Read> Iterator for PageSplitter<R> {
    type Item = Result<RawPageRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.eof && self.page_start.is_none() && self.cursor >= self.buf.len() {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(e) => {
                // Stop after the first error.
                self.eof = true;
                self.page_start = None;
                self.cursor = self.buf.len();
                Some(Err(e))
            }
        }
    }
}

pub fn split_pages<R: Read>(decompressed: R) -> PageSplitter<R> {
    PageSplitter::new(decompressed)
}

/// Seen-set for exact duplicate suppression. Stores digests, not records.
#[derive(Debug, Default)]
pub struct Dedup {
    seen: HashSet<[u8; 32]>,
    dropped: u64,
}

impl Dedup {
    pub fn new() -> Self {
        Self::default()
    }

    /// True the first time a given fragment is offered.
    pub fn first_time(&mut self, record: &RawPageRecord) -> bool {
        let digest: [u8; 32] = Sha256::digest(record.xml.as_bytes()).into();
        let fresh = self.seen.insert(digest);
        if !fresh {
            self.dropped += 1;
        }
        fresh
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// Drops exact duplicate fragments, keeping the first occurrence.
pub fn dedup_records<I>(records: I) -> impl Iterator<Item = I::Item>
where
    I: IntoIterator<Item = Result<RawPageRecord, IngestError>>,
{
    let mut dedup = Dedup::new();
    records.into_iter().filter(move |r| match r {
        Ok(record) => dedup.first_time(record),
        Err(_) => true,
    })
}
