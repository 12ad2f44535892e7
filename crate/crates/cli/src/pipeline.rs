//! Parse, store, process, output.
//!
//! A reader thread decompresses the dump, splits it into page records and
//! drops duplicates. Records travel in batches over a bounded channel to the
//! worker pool, which parses, filters and scores each page. Per-page
//! results are collected in input order, then reduced per contributor.

use std::path::Path;
use std::sync::mpsc::sync_channel;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use wikimpact_core::chunked_io::{read_decompressed, split_pages, Dedup, RawPageRecord};
use wikimpact_core::measures::{
    pageview_weighted, reduce_by_contributor, score_page, score_page_all, Measure, RevisionScore,
};
use wikimpact_core::pageviews::{load_pageviews, PageviewIndex};
use wikimpact_core::scores::{rank, RankedScore};
use wikimpact_core::wikidump::{
    parse_equivalence_ids, passes_postfilters, process_record, ParserConfig, PostFilter, PreFilter, RecordOutcome,
    RegexTable,
};
use wikimpact_core::Page;

use crate::config::{MeasureSelection, RunConfig};

/// Records per batch sent to the workers.
const BATCH: usize = 256;
/// Batches in flight between reader and workers.
const QUEUE: usize = 4;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunReport {
    /// Distinct page records read from the dump.
    pub records: u64,
    pub duplicates_dropped: u64,
    /// Records that went through parsing or were filtered before it.
    pub pages_parsed: u64,
    /// Rejected by a prefilter, an exclusion rule or a postfilter.
    pub pages_filtered: u64,
    pub pages_measured: u64,
    pub revisions_retained: u64,
    /// Measured pages that found pageview data.
    pub pages_with_views: u64,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "records: {}\nduplicates dropped: {}\npages parsed: {}\npages filtered: {}\npages measured: {}\nrevisions retained: {}\n",
            self.records,
            self.duplicates_dropped,
            self.pages_parsed,
            self.pages_filtered,
            self.pages_measured,
            self.revisions_retained,
        );
        if self.pages_with_views > 0 {
            out.push_str(&format!("pages with pageviews: {}\n", self.pages_with_views));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

pub fn worker_pool(parallelism: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .thread_name(|i| format!("worker-{i}"))
        .build()
        .context("building worker pool")
}

enum PageResult<T> {
    Dropped,
    Malformed(String),
    Kept { revisions: u64, with_views: bool, value: T },
}

/// Streams every page of `dump` through `per_page` on the worker pool.
/// Results are returned in dump order.
fn stream_pages<T, F>(
    dump: &Path,
    parser: &ParserConfig,
    postfilters: &[PostFilter],
    parallelism: usize,
    per_page: F,
) -> Result<(Vec<T>, RunReport)>
where
    T: Send,
    F: Fn(Page) -> (T, bool) + Sync,
{
    let pool = worker_pool(parallelism)?;
    let mut report = RunReport::default();
    let mut results = Vec::new();

    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = sync_channel::<Result<Vec<RawPageRecord>>>(QUEUE);
        let reader = scope.spawn(move || -> u64 {
            let mut dedup = Dedup::new();
            let source = match read_decompressed(dump, parallelism) {
                Ok(r) => r,
                Err(e) => {
                    let _ = tx.send(Err(anyhow!(e).context(format!("reading {}", dump.display()))));
                    return 0;
                }
            };
            let mut batch = Vec::with_capacity(BATCH);
            for record in split_pages(source) {
                match record {
                    Ok(r) => {
                        if dedup.first_time(&r) {
                            batch.push(r);
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(anyhow!(e).context("splitting pages")));
                        return dedup.dropped();
                    }
                }
                if batch.len() == BATCH && tx.send(Ok(std::mem::take(&mut batch))).is_err() {
                    return dedup.dropped();
                }
            }
            if !batch.is_empty() {
                let _ = tx.send(Ok(batch));
            }
            dedup.dropped()
        });

        for batch in rx {
            let batch = batch?;
            report.records += batch.len() as u64;
            let processed: Vec<PageResult<T>> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|record| match process_record(record, parser) {
                        RecordOutcome::Parsed(page) if passes_postfilters(&page, postfilters) => {
                            let revisions = page.revisions.len() as u64;
                            let (value, with_views) = per_page(page);
                            PageResult::Kept {
                                revisions,
                                with_views,
                                value,
                            }
                        }
                        RecordOutcome::Malformed(e) => PageResult::Malformed(e.to_string()),
                        _ => PageResult::Dropped,
                    })
                    .collect()
            });
            for r in processed {
                match r {
                    PageResult::Dropped => report.pages_filtered += 1,
                    PageResult::Malformed(e) => report.warnings.push(format!("skipped malformed page: {e}")),
                    PageResult::Kept {
                        revisions,
                        with_views,
                        value,
                    } => {
                        report.pages_measured += 1;
                        report.revisions_retained += revisions;
                        report.pages_with_views += u64::from(with_views);
                        results.push(value);
                    }
                }
            }
        }
        report.duplicates_dropped = reader.join().map_err(|_| anyhow!("reader thread panicked"))?;
        Ok(())
    })?;
    report.pages_parsed = report.pages_filtered + report.pages_measured;
    Ok((results, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub pages: u64,
    pub revisions: u64,
}

/// Parse-only pass: pages and processable revisions after filtering.
pub fn run_count(
    dump: &Path,
    parser: &ParserConfig,
    postfilters: &[PostFilter],
    parallelism: usize,
) -> Result<(Counts, RunReport)> {
    let (_, report) = stream_pages(dump, parser, postfilters, parallelism, |_| ((), false))?;
    let counts = Counts {
        pages: report.pages_measured,
        revisions: report.revisions_retained,
    };
    Ok((counts, report))
}

#[derive(Debug, Clone)]
pub struct Ranking {
    pub measure: Measure,
    pub rows: Vec<RankedScore>,
}

/// Runs the full pipeline and ranks contributors for each selected measure.
pub fn run_ranking(config: &RunConfig) -> Result<(Vec<Ranking>, RunReport)> {
    let mut warnings = Vec::new();
    let views = match (&config.pageview_path, &config.project_tag) {
        (Some(path), tag) => {
            let (views, stats) = load_pageviews(path, tag.as_ref(), config.parallelism)
                .with_context(|| format!("loading pageviews from {}", path.display()))?;
            if stats.malformed_lines > 0 {
                warnings.push(format!("{} malformed pageview lines skipped", stats.malformed_lines));
            }
            if stats.undecodable_titles > 0 {
                warnings.push(format!("{} pageview titles kept undecoded", stats.undecodable_titles));
            }
            Some(Arc::new(PageviewIndex::new(views)))
        }
        (None, _) => None,
    };

    let measures: Vec<Measure> = match config.measure {
        MeasureSelection::One(m) => vec![m],
        MeasureSelection::All => Measure::ALL.to_vec(),
    };
    let judges = config.judges;
    let selection = config.measure;
    let weighting = config.pageview_weighting;

    let per_page = |mut page: Page| -> (Vec<Vec<RevisionScore>>, bool) {
        if let Some(index) = &views {
            index.attach(&mut page);
        }
        let with_views = page.pageview.is_some();
        let scored: Vec<Vec<RevisionScore>> = match selection {
            MeasureSelection::One(m) => vec![score_page(&page, &config.measure_config(m))],
            MeasureSelection::All => score_page_all(&page, judges).into_iter().map(|(_, s)| s).collect(),
        };
        let scored = if weighting {
            scored.into_iter().map(|s| pageview_weighted(s, &page)).collect()
        } else {
            scored
        };
        (scored, with_views)
    };

    let (per_page_scores, mut report) =
        stream_pages(&config.dump_path, &config.parser, &config.postfilters, config.parallelism, per_page)?;
    report.warnings.extend(warnings);

    let rankings = measures
        .iter()
        .enumerate()
        .map(|(i, &measure)| {
            let scores = per_page_scores.iter().flat_map(|page| page[i].iter().cloned());
            let mut rows = rank(reduce_by_contributor(scores), config.drop_zero, config.drop_anonymous);
            if let Some(n) = config.top {
                rows.truncate(n);
            }
            Ranking { measure, rows }
        })
        .collect();
    Ok((rankings, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub event_revisions: usize,
    pub regex_revisions: usize,
    /// Ids found only by the event parser.
    pub only_event: Vec<u64>,
    /// Ids found only by the regex parser.
    pub only_regex: Vec<u64>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.only_event.is_empty() && self.only_regex.is_empty()
    }

    /// Smallest revision id present in one set but not the other.
    pub fn first_divergent(&self) -> Option<u64> {
        self.only_event.iter().chain(&self.only_regex).min().copied()
    }
}

/// Set difference of two sorted id lists.
fn missing_from(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().filter(|id| b.binary_search(id).is_err()).copied().collect()
}

/// Parses the dump with both parsers and compares the revision id sets.
pub fn run_parser_check(
    dump: &Path,
    prefilters: &[PreFilter],
    regex_table: Arc<RegexTable>,
    parallelism: usize,
) -> Result<CheckResult> {
    let (event, regex) = parse_equivalence_ids(dump, prefilters, regex_table, parallelism)
        .with_context(|| format!("parsing {}", dump.display()))?;
    Ok(CheckResult {
        event_revisions: event.len(),
        regex_revisions: regex.len(),
        only_event: missing_from(&event, &regex),
        only_regex: missing_from(&regex, &event),
    })
}
