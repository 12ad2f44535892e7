//! Command line front end: configuration, the processing pipeline and
//! output formats.

pub mod benchmark;
pub mod config;
pub mod output;
pub mod pipeline;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use wikimpact_core::chunked_io::merge_files;
use wikimpact_core::wikidump::RegexTable;

use config::{Cli, Command, MeasureSelection, RunConfig};
use output::write_ranking;
use pipeline::{run_count, run_parser_check, run_ranking};

fn open_output(path: Option<&std::path::Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn rank(config: &RunConfig) -> Result<ExitCode> {
    let (rankings, report) = run_ranking(config)?;
    match config.measure {
        MeasureSelection::One(_) => {
            let mut out = open_output(config.output.as_deref())?;
            write_ranking(&mut out, &rankings[0].rows, config.output_format)?;
            out.flush()?;
        }
        MeasureSelection::All => match &config.output {
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for r in &rankings {
                    let path = dir.join(format!("{}.{}", r.measure.name(), config.output_format.extension()));
                    let mut out = open_output(Some(&path))?;
                    write_ranking(&mut out, &r.rows, config.output_format)?;
                    out.flush()?;
                }
            }
            None => {
                let mut out = open_output(None)?;
                for r in &rankings {
                    writeln!(out, "# {}", r.measure)?;
                    write_ranking(&mut out, &r.rows, config.output_format)?;
                }
                out.flush()?;
            }
        },
    }
    eprint!("{}", report.render());
    Ok(ExitCode::SUCCESS)
}

/// Runs one command line invocation.
pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rank(args) => rank(&RunConfig::from_args(&args)?),
        Command::Count(args) => {
            let parser = args.parse.parser_config(&args.dump)?;
            let (counts, report) = run_count(&args.dump, &parser, &args.parse.postfilters(), args.parse.parallelism())?;
            if args.json {
                println!("{}", serde_json::to_string(&counts)?);
            } else {
                println!("pages: {}\nrevisions: {}", counts.pages, counts.revisions);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MergePageviews(args) => {
            let report = merge_files(&args.input_dir, &args.output, args.codec())?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ParserCheck(args) => {
            let result = run_parser_check(
                &args.dump,
                &args.parse.prefilters()?,
                Arc::new(RegexTable::default()),
                args.parse.parallelism(),
            )?;
            println!(
                "event parser: {} revisions\nregex parser: {} revisions",
                result.event_revisions, result.regex_revisions
            );
            if result.passed() {
                println!("PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                println!(
                    "FAIL: {} only in event output, {} only in regex output, first divergent revision {}",
                    result.only_event.len(),
                    result.only_regex.len(),
                    result.first_divergent().unwrap_or_default()
                );
                Ok(ExitCode::from(1))
            }
        }
        Command::BenchReport(args) => {
            let report = benchmark::run_bench(&args)?;
            if args.csv {
                print!("{}", report.to_csv());
            } else {
                print!("{}", report.to_table());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
