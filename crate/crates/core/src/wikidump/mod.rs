//! Turning raw page fragments into [`Page`] objects.
//!
//! Two interchangeable parsers are provided: an event based XML parser and a
//! line oriented regex parser. Both feed the same [`PageDraft`] structure and
//! share the exclusion and collapse rules, so their output can be compared
//! revision by revision.

mod event;
mod filters;
mod lines;

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::chunked_io::{read_decompressed, split_pages, Dedup, IngestError, RawPageRecord};
use crate::model::{Contributor, Page, Revision};

pub use filters::{
    apply_postfilters, apply_prefilters, passes_postfilters, FilterError, PostFilter, PreFilter, PreFilterKind,
};
pub use lines::RegexTable;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed page XML: {0}")]
    MalformedPageXml(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParserVariant {
    EventXml,
    RegexLines,
}

impl std::str::FromStr for ParserVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "event" | "eventxml" | "event-xml" | "xml" => Ok(ParserVariant::EventXml),
            "regex" | "regexlines" | "regex-lines" | "lines" => Ok(ParserVariant::RegexLines),
            other => Err(format!("unknown parser variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParserConfig {
    pub variant: ParserVariant,
    pub prefilters: Vec<PreFilter>,
    pub collapse_consecutive: bool,
    /// Patterns used by [`ParserVariant::RegexLines`].
    pub regex_table: Arc<RegexTable>,
}

impl ParserConfig {
    pub fn new(variant: ParserVariant) -> Self {
        ParserConfig {
            variant,
            prefilters: Vec::new(),
            collapse_consecutive: true,
            regex_table: Arc::new(RegexTable::default()),
        }
    }

    pub fn with_prefilters(mut self, prefilters: Vec<PreFilter>) -> Self {
        self.prefilters = prefilters;
        self
    }
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig::new(ParserVariant::EventXml)
    }
}

/// Revision fields as found in the dump, before validation.
#[derive(Debug, Default)]
pub(crate) struct RevisionDraft {
    pub id: Option<String>,
    pub parent_id: Option<String>,
    pub timestamp: Option<String>,
    pub text: String,
    pub username: Option<String>,
    pub user_id: Option<String>,
    pub ip: Option<String>,
    pub contributor_deleted: bool,
}

#[derive(Debug, Default)]
pub(crate) struct PageDraft {
    pub id: Option<String>,
    pub title: Option<String>,
    pub namespace: Option<String>,
    /// A `<redirect>` tag appeared before the first revision.
    pub redirect: bool,
    pub revisions: Vec<RevisionDraft>,
}

fn parse_number<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, ParseError> {
    value
        .trim()
        .parse()
        .map_err(|_| ParseError::MalformedPageXml(format!("{field} is not a number: {value:?}")))
}

impl RevisionDraft {
    fn contributor(&self) -> Result<Contributor, ParseError> {
        if self.contributor_deleted {
            return Ok(Contributor::Deleted);
        }
        let user_id = self
            .user_id
            .as_deref()
            .map(|v| parse_number::<u64>("contributor id", v))
            .transpose()?;
        Ok(match (&self.username, &self.ip) {
            (Some(username), _) => Contributor::Registered {
                user_id,
                username: username.clone(),
            },
            (None, Some(ip)) => Contributor::anonymous(ip.clone()),
            // No usable identity at all; treat like a suppressed account.
            (None, None) => Contributor::Deleted,
        })
    }

    fn finish(self) -> Result<Revision, ParseError> {
        let id = self
            .id
            .as_deref()
            .ok_or_else(|| ParseError::MalformedPageXml("revision without id".into()))?;
        Ok(Revision {
            id: parse_number("revision id", id)?,
            parent_id: self
                .parent_id
                .as_deref()
                .map(|v| parse_number("parent id", v))
                .transpose()?,
            contributor: self.contributor()?,
            timestamp: self.timestamp,
            text: self.text,
            within_page_id: 0,
        })
    }
}

/// Drops the earlier of two adjacent revisions whose contributors match and
/// numbers the survivors from 1.
///
/// Removal repeats against the new predecessor, so no adjacent retained pair
/// matches afterwards even when matching is not transitive.
pub fn collapse_revisions(revisions: Vec<Revision>) -> Vec<Revision> {
    let mut kept: Vec<Revision> = Vec::with_capacity(revisions.len());
    for rev in revisions {
        while kept
            .last()
            .is_some_and(|prev| prev.contributor.identity_matches(&rev.contributor))
        {
            kept.pop();
        }
        kept.push(rev);
    }
    number_revisions(&mut kept);
    kept
}

fn number_revisions(revisions: &mut [Revision]) {
    for (i, rev) in revisions.iter_mut().enumerate() {
        rev.within_page_id = i as u32 + 1;
    }
}

/// Validates a draft and applies the exclusion and collapse rules.
pub(crate) fn finalize(draft: PageDraft, collapse: bool) -> Result<Option<Page>, ParseError> {
    let id = draft
        .id
        .as_deref()
        .ok_or_else(|| ParseError::MalformedPageXml("page without id".into()))?;
    let id = parse_number("page id", id)?;
    let title = draft.title.unwrap_or_default();
    if draft.redirect && title.contains(':') {
        return Ok(None);
    }
    let namespace = match draft.namespace.as_deref() {
        Some(ns) => parse_number("namespace", ns)?,
        None => 0,
    };
    let revisions = draft
        .revisions
        .into_iter()
        .map(RevisionDraft::finish)
        .collect::<Result<Vec<_>, _>>()?;
    let revisions = if collapse {
        collapse_revisions(revisions)
    } else {
        let mut revisions = revisions;
        number_revisions(&mut revisions);
        revisions
    };
    Ok(Some(Page {
        id,
        title,
        namespace,
        revisions,
        pageview: None,
    }))
}

/// Parses one page fragment. Returns `None` for excluded pages.
///
/// Prefilters are not applied here; see [`apply_prefilters`] and
/// [`process_record`].
pub fn parse_page(record: &RawPageRecord, config: &ParserConfig) -> Result<Option<Page>, ParseError> {
    let draft = match config.variant {
        ParserVariant::EventXml => event::parse_draft(record.xml())?,
        ParserVariant::RegexLines => lines::parse_draft(record.xml(), &config.regex_table)?,
    };
    finalize(draft, config.collapse_consecutive)
}

/// What happened to a single record.
#[derive(Debug)]
pub enum RecordOutcome {
    /// Rejected by a prefilter.
    Filtered,
    /// Dropped by an exclusion rule (redirect page with a colon title).
    Excluded,
    Parsed(Page),
    /// Could not be parsed; the page is skipped.
    Malformed(ParseError),
}

/// Prefilters then parses a record.
pub fn process_record(record: &RawPageRecord, config: &ParserConfig) -> RecordOutcome {
    if !apply_prefilters(record, &config.prefilters) {
        return RecordOutcome::Filtered;
    }
    match parse_page(record, config) {
        Ok(Some(page)) => RecordOutcome::Parsed(page),
        Ok(None) => RecordOutcome::Excluded,
        Err(e) => {
            log::warn!("skipping page: {e}");
            RecordOutcome::Malformed(e)
        }
    }
}

/// Revision ids produced by the event parser and by the regex parser for the
/// same dump, each sorted ascending.
pub fn parse_equivalence_ids(
    dump: &Path,
    prefilters: &[PreFilter],
    regex_table: Arc<RegexTable>,
    parallelism: usize,
) -> Result<(Vec<u64>, Vec<u64>), ParseError> {
    let reader = read_decompressed(dump, parallelism)?;
    let mut dedup = Dedup::new();
    let mut records = Vec::new();
    for record in split_pages(reader) {
        let record = record?;
        if dedup.first_time(&record) {
            records.push(record);
        }
    }
    let mut event = ParserConfig::new(ParserVariant::EventXml).with_prefilters(prefilters.to_vec());
    event.regex_table = regex_table.clone();
    let mut regex = event.clone();
    regex.variant = ParserVariant::RegexLines;

    let ids = |config: &ParserConfig| -> Vec<u64> {
        let mut ids: Vec<u64> = records
            .par_iter()
            .flat_map_iter(|record| match process_record(record, config) {
                RecordOutcome::Parsed(page) => page.revisions.into_iter().map(|r| r.id).collect(),
                _ => Vec::new(),
            })
            .collect();
        ids.sort_unstable();
        ids
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| IngestError::Io(std::io::Error::other(e)))?;
    Ok(pool.install(|| (ids(&event), ids(&regex))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rev(id: u64, contributor: Contributor) -> Revision {
        Revision {
            id,
            parent_id: None,
            timestamp: None,
            text: String::new(),
            contributor,
            within_page_id: 0,
        }
    }

    #[test]
    fn collapse_drops_previous_revision() {
        let a = Contributor::registered(1, "A");
        let b = Contributor::registered(2, "B");
        let out = collapse_revisions(vec![rev(1, a.clone()), rev(2, a), rev(3, b)]);
        let ids: Vec<(u64, u32)> = out.iter().map(|r| (r.id, r.within_page_id)).collect();
        assert_eq!(ids, vec![(2, 1), (3, 2)]);
    }

    #[test]
    fn collapse_handles_non_transitive_matches() {
        // y has no id, so it matches both neighbours by username; x and z
        // carry different ids and do not match each other.
        let x = Contributor::registered(5, "X");
        let y = Contributor::Registered { user_id: None, username: "X".into() };
        let z = Contributor::Registered { user_id: Some(6), username: "X".into() };
        let out = collapse_revisions(vec![rev(1, x), rev(2, y), rev(3, z)]);
        assert_eq!(out.iter().map(|r| r.id).collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn redirect_with_colon_is_excluded() {
        let draft = PageDraft {
            id: Some("3".into()),
            title: Some("Wikipedia:About".into()),
            redirect: true,
            ..Default::default()
        };
        assert!(finalize(draft, true).unwrap().is_none());
        let draft = PageDraft {
            id: Some("3".into()),
            title: Some("About".into()),
            redirect: true,
            ..Default::default()
        };
        assert!(finalize(draft, true).unwrap().is_some());
    }

    #[test]
    fn missing_ids_are_malformed() {
        assert!(matches!(
            finalize(PageDraft::default(), true),
            Err(ParseError::MalformedPageXml(_))
        ));
        let draft = PageDraft {
            id: Some("1".into()),
            revisions: vec![RevisionDraft::default()],
            ..Default::default()
        };
        assert!(finalize(draft, true).is_err());
    }

    #[test]
    fn empty_contributor_is_deleted() {
        let draft = RevisionDraft {
            id: Some("9".into()),
            ..Default::default()
        };
        assert_eq!(draft.finish().unwrap().contributor, Contributor::Deleted);
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("event".parse::<ParserVariant>().unwrap(), ParserVariant::EventXml);
        assert_eq!("Regex".parse::<ParserVariant>().unwrap(), ParserVariant::RegexLines);
        assert!("sax".parse::<ParserVariant>().is_err());
    }
}
