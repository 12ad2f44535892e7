//! Command line definitions and their translation into run configurations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wikimpact_core::chunked_io::MergeCodec;
use wikimpact_core::measures::{Measure, MeasureConfig};
use wikimpact_core::pageviews::ProjectTag;
use wikimpact_core::wikidump::{ParserConfig, ParserVariant, PostFilter, PreFilter};

/// Inputs above this compressed size default to the regex parser.
pub const AUTO_REGEX_THRESHOLD: u64 = 500 * 1024 * 1024;

#[derive(Debug, Parser)]
#[command(name = "wikimpact", version, about = "Rank Wikipedia authors from edit-history dumps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score contributors and print a ranking.
    Rank(RankArgs),
    /// Count pages and processable revisions.
    Count(CountArgs),
    /// Concatenate pageview files into one dataset.
    MergePageviews(MergeArgs),
    /// Compare the revision ids found by both parsers.
    ParserCheck(CheckArgs),
    /// Time decompression, parsing and filtering on a dump.
    BenchReport(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParserChoice {
    Auto,
    Event,
    Regex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Console,
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Console => "txt",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodecChoice {
    Auto,
    None,
    Gzip,
    Bzip2,
}

#[derive(Debug, Clone, Args)]
pub struct ParseArgs {
    /// Parser variant; `auto` picks by compressed input size.
    #[arg(long, value_enum, default_value = "auto", env = "WIKIMPACT_PARSER")]
    pub parser: ParserChoice,

    /// Keep only main-namespace pages, checked on the raw XML.
    #[arg(long, env = "WIKIMPACT_MAIN_NAMESPACE")]
    pub main_namespace: bool,

    /// Regex prefilter over the whole page XML. Repeatable.
    #[arg(long = "prefilter-regex", value_name = "REGEX")]
    pub prefilter_regex: Vec<String>,

    /// XPath prefilter; the page is kept when the expression is true or
    /// selects nodes. Repeatable.
    #[arg(long = "prefilter-xpath", value_name = "XPATH")]
    pub prefilter_xpath: Vec<String>,

    /// FLWOR-style prefilter such as
    /// `for $p in /page where $p/ns = 0 return $p/title`. Repeatable.
    #[arg(long = "prefilter-xquery", value_name = "QUERY")]
    pub prefilter_xquery: Vec<String>,

    /// Keep only pages in this namespace, checked after parsing.
    #[arg(long, value_name = "NS")]
    pub namespace: Option<i32>,

    /// Keep only pages with at least this many retained revisions.
    #[arg(long, value_name = "N")]
    pub min_revisions: Option<usize>,

    /// Keep consecutive revisions by the same author.
    #[arg(long)]
    pub no_collapse: bool,

    /// Worker threads for decompression and processing.
    #[arg(long, env = "WIKIMPACT_PARALLELISM")]
    pub parallelism: Option<usize>,
}

impl ParseArgs {
    pub fn parallelism(&self) -> usize {
        self.parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
            .max(1)
    }

    pub fn prefilters(&self) -> Result<Vec<PreFilter>> {
        let mut filters = Vec::new();
        if self.main_namespace {
            filters.push(PreFilter::main_namespace());
        }
        for e in &self.prefilter_regex {
            filters.push(PreFilter::regex(e).with_context(|| format!("prefilter {e:?}"))?);
        }
        for e in &self.prefilter_xpath {
            filters.push(PreFilter::path_query(e).with_context(|| format!("prefilter {e:?}"))?);
        }
        for e in &self.prefilter_xquery {
            filters.push(PreFilter::struct_query(e).with_context(|| format!("prefilter {e:?}"))?);
        }
        Ok(filters)
    }

    pub fn postfilters(&self) -> Vec<PostFilter> {
        let mut filters = Vec::new();
        if let Some(ns) = self.namespace {
            filters.push(PostFilter::namespace(ns));
        }
        if let Some(n) = self.min_revisions {
            filters.push(PostFilter::min_revisions(n));
        }
        filters
    }

    pub fn variant_for(&self, dump: &std::path::Path) -> ParserVariant {
        match self.parser {
            ParserChoice::Event => ParserVariant::EventXml,
            ParserChoice::Regex => ParserVariant::RegexLines,
            ParserChoice::Auto => {
                let size = std::fs::metadata(dump).map(|m| m.len()).unwrap_or(0);
                if size > AUTO_REGEX_THRESHOLD {
                    ParserVariant::RegexLines
                } else {
                    ParserVariant::EventXml
                }
            }
        }
    }

    pub fn parser_config(&self, dump: &std::path::Path) -> Result<ParserConfig> {
        let mut config = ParserConfig::new(self.variant_for(dump)).with_prefilters(self.prefilters()?);
        config.collapse_consecutive = !self.no_collapse;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    /// Dump file (.xml, .xml.bz2 or .xml.gz).
    #[arg(value_name = "DUMP", required_unless_present = "dump")]
    pub dump_pos: Option<PathBuf>,
    /// Pageview file or directory of hourly files.
    #[arg(value_name = "PAGEVIEWS")]
    pub pageviews_pos: Option<PathBuf>,
    /// Project tag of the dump in the pageview data, e.g. `aa` or `bg.d`.
    #[arg(value_name = "TAG")]
    pub project_pos: Option<String>,

    /// Same as DUMP; the positional form wins when both are given.
    #[arg(long, env = "WIKIMPACT_DUMP")]
    pub dump: Option<PathBuf>,
    /// Same as PAGEVIEWS.
    #[arg(long, env = "WIKIMPACT_PAGEVIEWS")]
    pub pageviews: Option<PathBuf>,
    /// Same as TAG.
    #[arg(long, env = "WIKIMPACT_PROJECT")]
    pub project: Option<String>,

    /// Contribution measure, or `all` for every measure in one pass.
    #[arg(long, default_value = "num-edits", env = "WIKIMPACT_MEASURE")]
    pub measure: String,

    /// Following revisions used as judges.
    #[arg(long, default_value_t = 10, env = "WIKIMPACT_JUDGES")]
    pub judges: usize,

    #[arg(long, value_enum, default_value = "console", env = "WIKIMPACT_FORMAT")]
    pub format: OutputFormat,

    /// Output file; a directory when `--measure all`. Defaults to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Leave out contributors scoring exactly zero.
    #[arg(long)]
    pub drop_zero: bool,

    /// Leave out the shared anonymous contributor.
    #[arg(long)]
    pub drop_anonymous: bool,

    /// Print at most this many rows.
    #[arg(long)]
    pub top: Option<usize>,

    #[command(flatten)]
    pub parse: ParseArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[arg(value_name = "DUMP")]
    pub dump: PathBuf,
    /// Print the counts as JSON.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub parse: ParseArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    #[arg(value_name = "INPUT_DIR")]
    pub input_dir: PathBuf,
    #[arg(value_name = "OUTPUT")]
    pub output: PathBuf,
    /// Output compression; `auto` follows the output file suffix.
    #[arg(long, value_enum, default_value = "auto")]
    pub codec: CodecChoice,
}

impl MergeArgs {
    pub fn codec(&self) -> MergeCodec {
        match self.codec {
            CodecChoice::None => MergeCodec::None,
            CodecChoice::Gzip => MergeCodec::Gzip,
            CodecChoice::Bzip2 => MergeCodec::Bzip2,
            CodecChoice::Auto => match self.output.extension().and_then(|e| e.to_str()) {
                Some("gz") => MergeCodec::Gzip,
                Some("bz2") => MergeCodec::Bzip2,
                _ => MergeCodec::None,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(value_name = "DUMP")]
    pub dump: PathBuf,
    #[command(flatten)]
    pub parse: ParseArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(value_name = "DUMP")]
    pub dump: PathBuf,
    /// Worker counts to time decompression with.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub workers: Vec<usize>,
    /// Pageview data for the with/without pageviews comparison.
    #[arg(long)]
    pub pageviews: Option<PathBuf>,
    #[arg(long)]
    pub project: Option<String>,
    /// Runs per timing; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Write CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
}

/// Which measures a ranking run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSelection {
    One(Measure),
    All,
}

/// Fully resolved settings for `rank`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dump_path: PathBuf,
    pub pageview_path: Option<PathBuf>,
    pub project_tag: Option<ProjectTag>,
    pub measure: MeasureSelection,
    pub judges: usize,
    pub parser: ParserConfig,
    pub postfilters: Vec<PostFilter>,
    pub parallelism: usize,
    pub output_format: OutputFormat,
    pub output: Option<PathBuf>,
    pub drop_zero: bool,
    pub drop_anonymous: bool,
    pub top: Option<usize>,
    pub pageview_weighting: bool,
}

impl RunConfig {
    pub fn measure_config(&self, measure: Measure) -> MeasureConfig {
        MeasureConfig {
            judges: self.judges,
            measure,
        }
    }

    pub fn from_args(args: &RankArgs) -> Result<Self> {
        let dump_path = args
            .dump_pos
            .clone()
            .or_else(|| args.dump.clone())
            .context("no dump given")?;
        let pageview_path = args.pageviews_pos.clone().or_else(|| args.pageviews.clone());
        let project_tag = args
            .project_pos
            .as_deref()
            .or(args.project.as_deref())
            .map(|t| t.parse::<ProjectTag>().map_err(anyhow::Error::msg))
            .transpose()?;
        if pageview_path.is_some() && project_tag.is_none() {
            bail!("pageview data needs a project tag (--project or third positional argument)");
        }
        let measure = if args.measure.eq_ignore_ascii_case("all") {
            MeasureSelection::All
        } else {
            MeasureSelection::One(args.measure.parse::<Measure>().map_err(anyhow::Error::msg)?)
        };
        if args.judges == 0 {
            bail!("--judges must be positive");
        }
        if measure == MeasureSelection::All && args.output.as_ref().is_some_and(|p| p.is_file()) {
            bail!("--measure all writes one file per measure; --output must be a directory");
        }
        Ok(RunConfig {
            parser: args.parse.parser_config(&dump_path)?,
            postfilters: args.parse.postfilters(),
            parallelism: args.parse.parallelism(),
            pageview_weighting: pageview_path.is_some(),
            dump_path,
            pageview_path,
            project_tag,
            measure,
            judges: args.judges,
            output_format: args.format,
            output: args.output.clone(),
            drop_zero: args.drop_zero,
            drop_anonymous: args.drop_anonymous,
            top: args.top,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank(argv: &[&str]) -> RankArgs {
        let mut full = vec!["wikimpact", "rank"];
        full.extend_from_slice(argv);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Rank(args) => args,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positional_fallbacks() {
        let cfg = RunConfig::from_args(&rank(&["dump.xml", "views", "bg.d"])).unwrap();
        assert_eq!(cfg.dump_path, PathBuf::from("dump.xml"));
        assert_eq!(cfg.pageview_path, Some(PathBuf::from("views")));
        assert_eq!(cfg.project_tag.unwrap().as_str(), "bg.d");
        assert!(cfg.pageview_weighting);
    }

    #[test]
    fn flags_and_defaults() {
        let cfg = RunConfig::from_args(&rank(&["--dump", "d.xml", "--measure", "tlwp", "--parallelism", "3"])).unwrap();
        assert_eq!(cfg.measure, MeasureSelection::One(Measure::TextLongevityWithPenalty));
        assert_eq!(cfg.parallelism, 3);
        assert_eq!(cfg.judges, 10);
        assert_eq!(cfg.parser.variant, ParserVariant::EventXml);
        assert!(!cfg.pageview_weighting);
        let all = RunConfig::from_args(&rank(&["d.xml", "--measure", "all"])).unwrap();
        assert_eq!(all.measure, MeasureSelection::All);
    }

    #[test]
    fn pageviews_need_a_tag() {
        assert!(RunConfig::from_args(&rank(&["d.xml", "views"])).is_err());
        assert!(RunConfig::from_args(&rank(&["d.xml", "--measure", "bogus"])).is_err());
        assert!(RunConfig::from_args(&rank(&["d.xml", "views", "x y"])).is_err());
    }

    #[test]
    fn merge_codec_from_suffix() {
        let parse = |argv: &[&str]| match Cli::try_parse_from(argv).unwrap().command {
            Command::MergePageviews(m) => m.codec(),
            other => panic!("{other:?}"),
        };
        assert_eq!(parse(&["w", "merge-pageviews", "in", "out.gz"]), MergeCodec::Gzip);
        assert_eq!(parse(&["w", "merge-pageviews", "in", "out.bz2"]), MergeCodec::Bzip2);
        assert_eq!(parse(&["w", "merge-pageviews", "in", "out", "--codec", "gzip"]), MergeCodec::Gzip);
        assert_eq!(parse(&["w", "merge-pageviews", "in", "out.txt"]), MergeCodec::None);
    }
}
