//! `bench-report`: timings on the local machine, reported with the
//! compression factor, throughput and speed-up formulas.

use std::io;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use wikimpact_core::bench::{compression_factor, speedup_percent, throughput, BenchReport, BenchSample};
use wikimpact_core::chunked_io::{read_decompressed, read_decompressed_to_vec, split_pages, RawPageRecord};
use wikimpact_core::measures::{pageview_weighted, score_page, Measure, MeasureConfig};
use wikimpact_core::pageviews::{load_pageviews, PageviewIndex, ProjectTag};
use wikimpact_core::wikidump::{
    passes_postfilters, process_record, ParserConfig, ParserVariant, PostFilter, PreFilter, RecordOutcome,
};

use crate::config::BenchArgs;

const MB: f64 = 1_000_000.0;

/// Fastest of `repeat` runs, in seconds, with the last run's result.
fn time<T>(repeat: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let start = Instant::now();
        let value = f()?;
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(value);
    }
    Ok((best.max(1e-9), last.expect("at least one run")))
}

/// Seconds to decompress `path` with `workers` threads, and the output size.
pub fn time_decompression(path: &Path, workers: usize, repeat: usize) -> Result<(f64, u64)> {
    time(repeat, || {
        let mut reader = read_decompressed(path, workers)?;
        Ok(io::copy(&mut reader, &mut io::sink())?)
    })
}

fn count_revisions(records: &[RawPageRecord], config: &ParserConfig, postfilters: &[PostFilter]) -> u64 {
    records
        .par_iter()
        .map(|r| match process_record(r, config) {
            RecordOutcome::Parsed(p) if passes_postfilters(&p, postfilters) => p.revisions.len() as u64,
            _ => 0,
        })
        .sum()
}

pub fn run_bench(args: &BenchArgs) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    let compressed = std::fs::metadata(&args.dump)
        .with_context(|| format!("reading {}", args.dump.display()))?
        .len();

    let mut reference: Option<f64> = None;
    for &workers in &args.workers {
        let (secs, bytes) = time_decompression(&args.dump, workers, args.repeat)?;
        let sample = BenchSample {
            decompressed_mb: bytes as f64 / MB,
            compressed_mb: compressed as f64 / MB,
            elapsed_ms: secs * 1000.0,
        };
        if reference.is_none() {
            report.push("decompress", "compression factor", compression_factor(&sample)?, "x");
        }
        report.push("decompress", format!("workers={workers} time"), secs, "s");
        report.push("decompress", format!("workers={workers} throughput"), throughput(&sample)?, "MB/s");
        match reference {
            None => reference = Some(secs),
            Some(base) => report.push("decompress", format!("workers={workers} speedup"), speedup_percent(base, secs)?, "%"),
        }
    }

    let text = read_decompressed_to_vec(&args.dump, args.workers.iter().copied().max().unwrap_or(1))?;
    let records: Vec<RawPageRecord> = split_pages(text.as_slice()).collect::<Result<_, _>>()?;
    drop(text);

    let mut parse_times = Vec::new();
    for (name, variant) in [("event", ParserVariant::EventXml), ("regex", ParserVariant::RegexLines)] {
        let config = ParserConfig::new(variant);
        let (secs, revisions) = time(args.repeat, || Ok(count_revisions(&records, &config, &[])))?;
        report.push("parse", format!("{name} time"), secs, "s");
        report.push("parse", format!("{name} rate"), revisions as f64 / secs, "R/s");
        parse_times.push(secs);
    }
    report.push("parse", "regex vs event speedup", speedup_percent(parse_times[0], parse_times[1])?, "%");

    let prefilter_cases = [
        ("regex prefilter", PreFilter::main_namespace()),
        ("xpath prefilter", PreFilter::path_query("/page/ns = 0")?),
        ("xquery prefilter", PreFilter::struct_query("for $p in /page where $p/ns = 0 return $p/title")?),
    ];
    for (name, filter) in prefilter_cases {
        let config = ParserConfig::default().with_prefilters(vec![filter]);
        let (secs, _) = time(args.repeat, || Ok(count_revisions(&records, &config, &[])))?;
        report.push("filter", name, secs, "s");
    }
    let post = [PostFilter::namespace(0)];
    let (secs, _) = time(args.repeat, || Ok(count_revisions(&records, &ParserConfig::default(), &post)))?;
    report.push("filter", "postfilter", secs, "s");

    if let (Some(path), Some(tag)) = (&args.pageviews, &args.project) {
        let tag: ProjectTag = tag.parse().map_err(anyhow::Error::msg)?;
        let measure = MeasureConfig::new(Measure::TextOnly);
        let config = ParserConfig::default();
        let score = |index: Option<&PageviewIndex>| -> f64 {
            records
                .par_iter()
                .map(|r| match process_record(r, &config) {
                    RecordOutcome::Parsed(mut page) => {
                        let scores = score_page(&page, &measure);
                        match index {
                            Some(index) => {
                                index.attach(&mut page);
                                pageview_weighted(scores, &page).iter().map(|s| s.score).sum()
                            }
                            None => scores.iter().map(|s| s.score).sum(),
                        }
                    }
                    _ => 0.0,
                })
                .sum()
        };
        let (plain, _) = time(args.repeat, || Ok(score(None)))?;
        let (with_views, _) = time(args.repeat, || {
            let (views, _) = load_pageviews(path, Some(&tag), 1)?;
            Ok(score(Some(&PageviewIndex::new(views))))
        })?;
        report.push("pageviews", "without", plain, "s");
        report.push("pageviews", "with", with_views, "s");
        report.push("pageviews", "slowdown", with_views / plain, "x");
    }
    Ok(report)
}
