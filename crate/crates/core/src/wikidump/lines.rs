//! Line oriented parser.
//!
//! Dumps put every element except revision text on its own line, so most
//! fields can be picked out with anchored patterns. Text is collected from
//! the opening `<text ...>` line up to the line holding `</text>`.

use quick_xml::escape::unescape;
use regex::Regex;

use super::{PageDraft, ParseError, RevisionDraft};

/// The patterns used to recognise dump lines. Fields are public so tests can
/// swap in a deliberately wrong pattern.
#[derive(Debug, Clone)]
pub struct RegexTable {
    pub title: Regex,
    pub namespace: Regex,
    pub id: Regex,
    pub redirect: Regex,
    pub revision_open: Regex,
    pub revision_close: Regex,
    pub parent_id: Regex,
    pub timestamp: Regex,
    pub contributor_open: Regex,
    pub contributor_empty: Regex,
    pub contributor_close: Regex,
    pub username: Regex,
    pub contributor_id: Regex,
    pub ip: Regex,
    /// Self-closing text element; the revision has empty text.
    pub text_empty: Regex,
    /// Opening text tag; group 1 holds whatever follows it on the line.
    pub text_open: Regex,
    pub text_close: &'static str,
}

fn element(name: &str) -> Regex {
    Regex::new(&format!(r"^\s*<{name}>(.*)</{name}>\s*$")).expect("static pattern")
}

impl Default for RegexTable {
    fn default() -> Self {
        RegexTable {
            title: element("title"),
            namespace: element("ns"),
            id: element("id"),
            redirect: Regex::new(r"^\s*<redirect[\s/>]").expect("static pattern"),
            revision_open: Regex::new(r"^\s*<revision>").expect("static pattern"),
            revision_close: Regex::new(r"^\s*</revision>").expect("static pattern"),
            parent_id: element("parentid"),
            timestamp: element("timestamp"),
            contributor_open: Regex::new(r"^\s*<contributor>").expect("static pattern"),
            contributor_empty: Regex::new(r"^\s*<contributor\b[^>]*/>").expect("static pattern"),
            contributor_close: Regex::new(r"^\s*</contributor>").expect("static pattern"),
            username: element("username"),
            contributor_id: element("id"),
            ip: element("ip"),
            text_empty: Regex::new(r"^\s*<text\b[^>]*/>").expect("static pattern"),
            // Any attributes, as long as the tag is not self-closing.
            text_open: Regex::new(r#"^\s*<text(?:\s[^>]*[^/>])?>(.*)$"#).expect("static pattern"),
            text_close: "</text>",
        }
    }
}

fn xml_unescape(raw: &str) -> Result<String, ParseError> {
    unescape(raw)
        .map(|s| s.into_owned())
        .map_err(|e| ParseError::MalformedPageXml(format!("bad escape in {raw:.60}: {e}")))
}

fn capture(re: &Regex, line: &str) -> Option<String> {
    re.captures(line).map(|c| c[1].to_string())
}

/// Splits on `\r\n`, `\r` or `\n`, the same line breaks XML normalises.
fn lines(xml: &str) -> impl Iterator<Item = &str> {
    let mut rest = Some(xml);
    std::iter::from_fn(move || {
        let s = rest?;
        match s.find(['\r', '\n']) {
            Some(i) => {
                let skip = if s[i..].starts_with("\r\n") { 2 } else { 1 };
                rest = Some(&s[i + skip..]);
                Some(&s[..i])
            }
            None => {
                rest = None;
                Some(s)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Page,
    Revision,
    Contributor,
    Text,
}

pub(super) fn parse_draft(xml: &str, table: &RegexTable) -> Result<PageDraft, ParseError> {
    let mut draft = PageDraft::default();
    let mut state = State::Page;
    let mut text = String::new();

    for line in lines(xml) {
        match state {
            State::Text => {
                if let Some(end) = line.find(table.text_close) {
                    text.push('\n');
                    text.push_str(&line[..end]);
                    finish_text(&mut draft, &mut text)?;
                    state = State::Revision;
                } else {
                    text.push('\n');
                    text.push_str(line);
                }
            }
            State::Page => {
                if table.revision_open.is_match(line) {
                    draft.revisions.push(RevisionDraft::default());
                    state = State::Revision;
                } else if let Some(v) = capture(&table.title, line) {
                    draft.title = Some(xml_unescape(&v)?);
                } else if let Some(v) = capture(&table.namespace, line) {
                    draft.namespace = Some(v);
                } else if let Some(v) = capture(&table.id, line) {
                    draft.id = Some(v);
                } else if table.redirect.is_match(line) && draft.revisions.is_empty() {
                    draft.redirect = true;
                }
            }
            State::Revision => {
                let rev = draft.revisions.last_mut().expect("inside a revision");
                if table.revision_close.is_match(line) {
                    state = State::Page;
                } else if table.contributor_empty.is_match(line) {
                    rev.contributor_deleted = true;
                } else if table.contributor_open.is_match(line) {
                    state = State::Contributor;
                } else if table.text_empty.is_match(line) {
                    rev.text.clear();
                } else if let Some(rest) = capture(&table.text_open, line) {
                    match rest.find(table.text_close) {
                        Some(end) => {
                            text.push_str(&rest[..end]);
                            finish_text(&mut draft, &mut text)?;
                        }
                        None => {
                            text.push_str(&rest);
                            state = State::Text;
                        }
                    }
                } else if let Some(v) = capture(&table.parent_id, line) {
                    rev.parent_id = Some(v);
                } else if let Some(v) = capture(&table.timestamp, line) {
                    rev.timestamp = Some(xml_unescape(&v)?);
                } else if let Some(v) = capture(&table.id, line) {
                    rev.id = Some(v);
                }
            }
            State::Contributor => {
                let rev = draft.revisions.last_mut().expect("inside a revision");
                if table.contributor_close.is_match(line) {
                    state = State::Revision;
                } else if let Some(v) = capture(&table.username, line) {
                    rev.username = Some(xml_unescape(&v)?);
                } else if let Some(v) = capture(&table.contributor_id, line) {
                    rev.user_id = Some(v);
                } else if let Some(v) = capture(&table.ip, line) {
                    rev.ip = Some(xml_unescape(&v)?);
                }
            }
        }
    }
    if state == State::Text {
        return Err(ParseError::MalformedPageXml("unterminated <text> element".into()));
    }
    Ok(draft)
}

fn finish_text(draft: &mut PageDraft, raw: &mut String) -> Result<(), ParseError> {
    let value = xml_unescape(raw)?;
    raw.clear();
    if let Some(rev) = draft.revisions.last_mut() {
        rev.text = value;
    }
    Ok(())
}
