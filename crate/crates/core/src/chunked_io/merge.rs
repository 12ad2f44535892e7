use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeCodec {
    None,
    Gzip,
    Bzip2,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub files_read: u64,
    pub lines_written: u64,
    /// Decompressed bytes read from the inputs.
    pub bytes_in: u64,
    /// Bytes written to the output file (after compression).
    pub bytes_out: u64,
}

struct CountingWriter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn open_input(path: &Path) -> Result<Box<dyn Read>, IngestError> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(flate2::bufread::MultiGzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

/// Concatenates the lines of every regular file in `input_dir`, in filename
/// order, into one optionally compressed file.
///
/// A final line without a newline gets one, so the output always ends in a
/// newline (unless empty).
pub fn merge_files(input_dir: &Path, output: &Path, codec: MergeCodec) -> Result<MergeReport, IngestError> {
    let mut inputs = Vec::new();
    for entry in std::fs::read_dir(input_dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() && entry.path() != output {
            inputs.push(entry.path());
        }
    }
    if inputs.is_empty() {
        return Err(IngestError::EmptyDirectory(input_dir.display().to_string()));
    }
    inputs.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let counter = CountingWriter {
        inner: BufWriter::new(File::create(output)?),
        written: 0,
    };
    let mut sink: Box<dyn Write> = match codec {
        MergeCodec::None => Box::new(counter),
        MergeCodec::Gzip => Box::new(flate2::write::GzEncoder::new(counter, flate2::Compression::default())),
        MergeCodec::Bzip2 => Box::new(bzip2::write::BzEncoder::new(counter, bzip2::Compression::best())),
    };

    let mut report = MergeReport::default();
    let mut line = Vec::new();
    for path in &inputs {
        let mut reader = BufReader::new(open_input(path)?);
        loop {
            line.clear();
            let n = reader.read_until(b'\n', &mut line)?;
            if n == 0 {
                break;
            }
            report.bytes_in += n as u64;
            if line.last() != Some(&b'\n') {
                line.push(b'\n');
            }
            sink.write_all(&line)?;
            report.lines_written += 1;
        }
        report.files_read += 1;
    }
    sink.flush()?;
    drop(sink);
    report.bytes_out = std::fs::metadata(output)?.len();
    log::info!(
        "merged {} files, {} lines, {} -> {} bytes",
        report.files_read,
        report.lines_written,
        report.bytes_in,
        report.bytes_out
    );
    Ok(report)
}
