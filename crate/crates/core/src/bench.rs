//! Measurement formulas used in performance reports: compression factor,
//! throughput and speed-up, plus parsing of `h:mm:ss` style durations.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("cannot parse duration {0:?}")]
    BadDuration(String),
}

fn positive(name: &str, value: f64) -> Result<f64, BenchError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(BenchError::InvalidSample(format!("{name} must be positive, got {value}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchSample {
    pub decompressed_mb: f64,
    pub compressed_mb: f64,
    pub elapsed_ms: f64,
}

impl BenchSample {
    /// Sample for input read without compression.
    pub fn uncompressed(size_mb: f64, elapsed_ms: f64) -> Self {
        BenchSample {
            decompressed_mb: size_mb,
            compressed_mb: size_mb,
            elapsed_ms,
        }
    }
}

/// `S_d / S_c`.
pub fn compression_factor(s: &BenchSample) -> Result<f64, BenchError> {
    Ok(positive("decompressed size", s.decompressed_mb)? / positive("compressed size", s.compressed_mb)?)
}

/// `(S_c * 1000 / t_ms) * F_c` in MB/s of decompressed data.
pub fn throughput(s: &BenchSample) -> Result<f64, BenchError> {
    let factor = compression_factor(s)?;
    Ok(s.compressed_mb * 1000.0 / positive("elapsed time", s.elapsed_ms)? * factor)
}

/// `(t_reference / t_candidate - 1) * 100`; positive when the candidate is
/// faster.
pub fn speedup_percent(t_reference_s: f64, t_candidate_s: f64) -> Result<f64, BenchError> {
    Ok((positive("reference time", t_reference_s)? / positive("candidate time", t_candidate_s)? - 1.0) * 100.0)
}

/// Parses `23.22s`, `09:05.16m`, `02:45:07h`, `0:47.63` or plain seconds.
///
/// A trailing unit letter only tells which field is the largest: `s` for
/// seconds, `m` for `mm:ss`, `h` for `hh:mm:ss`. Without one, colon
/// separated fields are read right to left as seconds, minutes, hours.
/// A trailing `*` is ignored.
pub fn parse_duration(text: &str) -> Result<f64, BenchError> {
    let bad = || BenchError::BadDuration(text.to_string());
    let mut s = text.trim().trim_end_matches('*');
    let unit = s.chars().last().filter(|c| matches!(c, 's' | 'm' | 'h'));
    if let Some(u) = unit {
        s = &s[..s.len() - u.len_utf8()];
    }
    let fields: Vec<&str> = s.split(':').collect();
    let expected = match unit {
        Some('s') => Some(1),
        Some('m') => Some(2),
        Some('h') => Some(3),
        _ => None,
    };
    if fields.len() > 3 || expected.is_some_and(|n| n != fields.len()) {
        return Err(bad());
    }
    let mut seconds = 0.0;
    for (i, field) in fields.iter().rev().enumerate() {
        let value: f64 = field.parse().map_err(|_| bad())?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(bad());
        }
        seconds += value * 60f64.powi(i as i32);
    }
    Ok(seconds)
}

/// One line of a bench report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub section: String,
    pub name: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn push(&mut self, section: &str, name: impl Into<String>, value: f64, unit: &str) {
        self.rows.push(ReportRow {
            section: section.to_string(),
            name: name.into(),
            value,
            unit: unit.to_string(),
        });
    }

    pub fn to_table(&self) -> String {
        let w_section = self.rows.iter().map(|r| r.section.len()).max().unwrap_or(0).max(7);
        let w_name = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(4);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w_section$}  {:<w_name$}  {:>14}  unit", "section", "name", "value");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w_section$}  {:<w_name$}  {:>14.3}  {}",
                r.section, r.name, r.value, r.unit
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,value,unit\n");
        for r in &self.rows {
            let quote = |s: &str| {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.to_string()
                }
            };
            let _ = writeln!(out, "{},{},{:.6},{}", quote(&r.section), quote(&r.name), r.value, quote(&r.unit));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn compression_factor_table_rows() {
        for (c, d, f) in [(65.0, 273.38, 4.21), (87.0, 386.65, 4.44), (110.0, 460.69, 4.19)] {
            let s = BenchSample {
                decompressed_mb: d,
                compressed_mb: c,
                elapsed_ms: 1.0,
            };
            assert!(close(compression_factor(&s).unwrap(), f, 0.01), "{d}/{c}");
        }
        assert_eq!(compression_factor(&BenchSample::uncompressed(5.0, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(&BenchSample::uncompressed(100.0, 1000.0)).unwrap(), 100.0);
        let s = BenchSample {
            decompressed_mb: 2000.0,
            compressed_mb: 100.0,
            elapsed_ms: 1000.0,
        };
        assert_eq!(throughput(&s).unwrap(), 2000.0);
        let slower = BenchSample { elapsed_ms: 2000.0, ..s };
        assert_eq!(throughput(&slower).unwrap(), 1000.0);
    }

    #[test]
    fn speedup_examples() {
        let t_ref = parse_duration("02:45:07h").unwrap();
        let t_cand = parse_duration("8:40.59").unwrap();
        assert_eq!(t_ref, 9907.0);
        assert!(close(t_cand, 520.59, 1e-9));
        assert!(close(speedup_percent(t_ref, t_cand).unwrap(), 1803.03, 0.5));
        assert_eq!(speedup_percent(3.0, 3.0).unwrap(), 0.0);
        assert!(close(speedup_percent(545.16, 35.57).unwrap(), 1432.6, 0.1));
    }

    #[test]
    fn invalid_samples() {
        assert!(speedup_percent(0.0, 1.0).is_err());
        assert!(speedup_percent(1.0, -1.0).is_err());
        assert!(compression_factor(&BenchSample::uncompressed(0.0, 1.0)).is_err());
        assert!(throughput(&BenchSample::uncompressed(1.0, 0.0)).is_err());
    }

    #[test]
    fn durations() {
        assert!(close(parse_duration("23.22s").unwrap(), 23.22, 1e-9));
        assert!(close(parse_duration("09:05.16m").unwrap(), 545.16, 1e-9));
        assert!(close(parse_duration("0:47.63").unwrap(), 47.63, 1e-9));
        assert!(close(parse_duration("1:34.55*").unwrap(), 94.55, 1e-9));
        assert_eq!(parse_duration("12").unwrap(), 12.0);
        for bad in ["", "1:2:3:4", "x", "1:30h", "-1"] {
            assert!(parse_duration(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn report_formats() {
        let mut r = BenchReport::default();
        r.push("decompress", "p=1", 12.5, "MB/s");
        assert!(r.to_table().contains("p=1"));
        assert_eq!(r.to_csv(), "section,name,value,unit\ndecompress,p=1,12.500000,MB/s\n");
    }
}
