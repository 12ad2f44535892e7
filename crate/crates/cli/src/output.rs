//! Ranking output as console table, CSV or JSON.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use wikimpact_core::scores::RankedScore;

use crate::config::OutputFormat;

#[derive(Debug, Serialize)]
struct Row<'a> {
    rank: usize,
    subject_id: i64,
    label: &'a str,
    score: f64,
}

fn rows(ranking: &[RankedScore]) -> impl Iterator<Item = Row<'_>> {
    ranking.iter().map(|r| Row {
        rank: r.rank,
        subject_id: r.score.subject_id(),
        label: r.score.label(),
        score: r.score.score(),
    })
}

pub fn write_csv<W: Write>(out: W, ranking: &[RankedScore]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "subject_id", "label", "score"])?;
    for row in rows(ranking) {
        w.write_record([
            row.rank.to_string(),
            row.subject_id.to_string(),
            row.label.to_string(),
            format!("{:.6}", row.score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, ranking: &[RankedScore]) -> Result<()> {
    let all: Vec<Row> = rows(ranking).collect();
    serde_json::to_writer_pretty(&mut out, &all)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_console<W: Write>(mut out: W, ranking: &[RankedScore]) -> Result<()> {
    let label_width = ranking.iter().map(|r| r.score.label().chars().count()).max().unwrap_or(0).max(5);
    writeln!(out, "{:>6}  {:>20}  {:<label_width$}  {:>16}", "rank", "subject_id", "label", "score")?;
    for row in rows(ranking) {
        writeln!(
            out,
            "{:>6}  {:>20}  {:<label_width$}  {:>16.6}",
            row.rank, row.subject_id, row.label, row.score
        )?;
    }
    Ok(())
}

pub fn write_ranking<W: Write>(out: W, ranking: &[RankedScore], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Console => write_console(out, ranking),
        OutputFormat::Csv => write_csv(out, ranking),
        OutputFormat::Json => write_json(out, ranking),
    }
}
