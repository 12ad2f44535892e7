//! Pageview lines: `<project> <title> <count> <size>`.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use percent_encoding::percent_decode_str;

use crate::chunked_io::{read_decompressed, IngestError};
use crate::model::{Page, Pageview};

const PROJECT_SUFFIXES: &[&str] = &["b", "d", "m", "mw", "n", "q", "s", "v", "w"];

/// A wiki tag with an optional project suffix, e.g. `aa` or `bg.d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectTag(String);

impl ProjectTag {
    pub fn new(value: &str) -> Result<Self, String> {
        let (wiki, suffix) = match value.split_once('.') {
            Some((wiki, suffix)) => (wiki, Some(suffix)),
            None => (value, None),
        };
        if wiki.is_empty() || wiki.contains(char::is_whitespace) {
            return Err(format!("invalid wiki tag in {value:?}"));
        }
        if let Some(suffix) = suffix {
            if !PROJECT_SUFFIXES.contains(&suffix) {
                return Err(format!(
                    "unknown project suffix .{suffix} (expected one of {})",
                    PROJECT_SUFFIXES.iter().map(|s| format!(".{s}")).collect::<Vec<_>>().join(" ")
                ));
            }
        }
        Ok(ProjectTag(value.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for ProjectTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProjectTag::new(s)
    }
}

impl std::fmt::Display for ProjectTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Problems seen while reading pageview data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PageviewStats {
    pub lines: u64,
    pub malformed_lines: u64,
    /// Titles kept verbatim because they were not valid percent-encoding.
    pub undecodable_titles: u64,
}

/// Replaces `_` with spaces and percent-decodes as UTF-8. The boolean is
/// false when decoding failed and the title was kept as is.
pub fn decode_title(raw: &str) -> (String, bool) {
    let spaced = raw.replace('_', " ");
    let bytes = spaced.as_bytes();
    let well_formed = bytes.iter().enumerate().all(|(i, &b)| {
        b != b'%'
            || (bytes.get(i + 1).is_some_and(u8::is_ascii_hexdigit)
                && bytes.get(i + 2).is_some_and(u8::is_ascii_hexdigit))
    });
    if !well_formed {
        return (spaced, false);
    }
    match percent_decode_str(&spaced).decode_utf8() {
        Ok(decoded) => (decoded.into_owned(), true),
        Err(_) => (spaced, false),
    }
}

/// Parses one line, returning `None` for malformed lines.
pub fn parse_pageview_line(line: &str) -> Option<Pageview> {
    parse_line_checked(line).map(|(pv, _)| pv)
}

fn parse_line_checked(line: &str) -> Option<(Pageview, bool)> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let parts: Vec<&str> = line.split(' ').collect();
    let [project, title, count, size] = parts.as_slice() else {
        return None;
    };
    if project.is_empty() || title.is_empty() {
        return None;
    }
    let request_count = count.parse().ok()?;
    let request_size = size.parse().ok()?;
    let (page_title, decoded) = decode_title(title);
    Some((
        Pageview {
            project_name: project.to_string(),
            page_title,
            request_count,
            request_size,
        },
        decoded,
    ))
}

/// Streaming accumulator: filters by project and sums per (project, title).
#[derive(Debug, Default)]
pub struct PageviewAggregator {
    project: Option<String>,
    totals: HashMap<(String, String), (u64, u64)>,
    stats: PageviewStats,
}

impl PageviewAggregator {
    pub fn new(project: Option<&ProjectTag>) -> Self {
        PageviewAggregator {
            project: project.map(|p| p.as_str().to_string()),
            ..Default::default()
        }
    }

    pub fn add(&mut self, view: Pageview) {
        if let Some(project) = &self.project {
            if &view.project_name != project {
                return;
            }
        }
        let entry = self.totals.entry((view.project_name, view.page_title)).or_default();
        entry.0 = entry.0.saturating_add(view.request_count);
        entry.1 = entry.1.saturating_add(view.request_size);
    }

    pub fn add_line(&mut self, line: &str) {
        self.stats.lines += 1;
        match parse_line_checked(line) {
            Some((view, decoded)) => {
                if !decoded {
                    self.stats.undecodable_titles += 1;
                }
                self.add(view);
            }
            None => {
                self.stats.malformed_lines += 1;
                log::debug!("skipping malformed pageview line {line:.80?}");
            }
        }
    }

    /// Sums another aggregator into this one.
    pub fn merge(&mut self, other: PageviewAggregator) {
        for ((project, title), (count, size)) in other.totals {
            let entry = self.totals.entry((project, title)).or_default();
            entry.0 = entry.0.saturating_add(count);
            entry.1 = entry.1.saturating_add(size);
        }
        self.stats.lines += other.stats.lines;
        self.stats.malformed_lines += other.stats.malformed_lines;
        self.stats.undecodable_titles += other.stats.undecodable_titles;
    }

    pub fn stats(&self) -> PageviewStats {
        self.stats
    }

    /// Aggregated views ordered by (project, title).
    pub fn finish(self) -> Vec<Pageview> {
        let mut out: Vec<Pageview> = self
            .totals
            .into_iter()
            .map(|((project_name, page_title), (request_count, request_size))| Pageview {
                project_name,
                page_title,
                request_count,
                request_size,
            })
            .collect();
        out.sort_by(|a, b| (&a.project_name, &a.page_title).cmp(&(&b.project_name, &b.page_title)));
        out
    }
}

/// Filters by project (exact match) and sums duplicates per (project, title).
pub fn aggregate_pageviews<I>(views: I, project: Option<&ProjectTag>) -> Vec<Pageview>
where
    I: IntoIterator<Item = Pageview>,
{
    let mut agg = PageviewAggregator::new(project);
    for view in views {
        agg.add(view);
    }
    agg.finish()
}

/// Reads and aggregates pageviews from a file (any supported codec) or from
/// every file in a directory.
pub fn load_pageviews(
    path: &Path,
    project: Option<&ProjectTag>,
    parallelism: usize,
) -> Result<(Vec<Pageview>, PageviewStats), IngestError> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                files.push(entry.path());
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(IngestError::EmptyDirectory(path.display().to_string()));
        }
    } else {
        files.push(path.to_path_buf());
    }
    let mut agg = PageviewAggregator::new(project);
    let mut line = Vec::new();
    for file in files {
        let mut reader = std::io::BufReader::new(read_decompressed(&file, parallelism)?);
        loop {
            line.clear();
            if reader.read_until(b'\n', &mut line).map_err(crate::chunked_io::ingest_error)? == 0 {
                break;
            }
            agg.add_line(&String::from_utf8_lossy(&line));
        }
    }
    let stats = agg.stats();
    if stats.malformed_lines > 0 || stats.undecodable_titles > 0 {
        log::warn!(
            "pageviews: {} malformed lines skipped, {} titles kept undecoded",
            stats.malformed_lines,
            stats.undecodable_titles
        );
    }
    Ok((agg.finish(), stats))
}

/// Title lookup for the left outer join. Views sharing a title (possible
/// when no project filter was applied) are summed.
#[derive(Debug, Default, Clone)]
pub struct PageviewIndex {
    by_title: BTreeMap<String, Pageview>,
}

impl PageviewIndex {
    pub fn new(views: Vec<Pageview>) -> Self {
        let mut by_title: BTreeMap<String, Pageview> = BTreeMap::new();
        for view in views {
            match by_title.get_mut(&view.page_title) {
                Some(existing) => {
                    existing.request_count = existing.request_count.saturating_add(view.request_count);
                    existing.request_size = existing.request_size.saturating_add(view.request_size);
                }
                None => {
                    by_title.insert(view.page_title.clone(), view);
                }
            }
        }
        PageviewIndex { by_title }
    }

    pub fn len(&self) -> usize {
        self.by_title.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_title.is_empty()
    }

    pub fn get(&self, title: &str) -> Option<&Pageview> {
        self.by_title.get(title)
    }

    /// Sets the page's pageview, or clears it when the title is unknown.
    pub fn attach(&self, page: &mut Page) {
        page.pageview = self.get(&page.title).cloned();
    }
}

/// Left outer join on the decoded title: every page is returned, with its
/// pageview set when one exists.
pub fn join_pages_with_views(pages: Vec<Page>, views: Vec<Pageview>) -> Vec<Page> {
    let index = PageviewIndex::new(views);
    pages
        .into_iter()
        .map(|mut page| {
            index.attach(&mut page);
            page
        })
        .collect()
}
