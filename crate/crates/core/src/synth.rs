//! Synthetic dumps for tests and benchmarks.
//!
//! Pages are generated from a seed and rendered in the MediaWiki export
//! format, so the same histories can be fed to either parser.

use std::fmt::Write as _;
use std::io::{self, Write};

use quick_xml::escape::escape;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::model::Contributor;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRevision {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub contributor: Contributor,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPage {
    pub id: u64,
    pub title: String,
    pub namespace: i32,
    pub redirect: Option<String>,
    pub revisions: Vec<SynthRevision>,
}

const HEADER: &str = r#"<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">
  <siteinfo>
    <sitename>Synthetic</sitename>
    <dbname>synthwiki</dbname>
    <namespaces>
      <namespace key="0" case="first-letter" />
      <namespace key="1" case="first-letter">Talk</namespace>
      <namespace key="4" case="first-letter">Project</namespace>
    </namespaces>
  </siteinfo>
"#;

const FOOTER: &str = "</mediawiki>\n";

fn contributor_xml(out: &mut String, c: &Contributor) {
    match c {
        Contributor::Registered { user_id, username } => {
            out.push_str("      <contributor>\n");
            let _ = writeln!(out, "        <username>{}</username>", escape(username.as_str()));
            if let Some(id) = user_id {
                let _ = writeln!(out, "        <id>{id}</id>");
            }
            out.push_str("      </contributor>\n");
        }
        Contributor::Anonymous { ip } => {
            let _ = writeln!(out, "      <contributor>\n        <ip>{}</ip>\n      </contributor>", escape(ip.as_str()));
        }
        Contributor::Deleted => out.push_str("      <contributor deleted=\"deleted\" />\n"),
    }
}

impl SynthPage {
    /// Renders the page as one `<page>` element.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str("  <page>\n");
        let _ = writeln!(out, "    <title>{}</title>", escape(self.title.as_str()));
        let _ = writeln!(out, "    <ns>{}</ns>", self.namespace);
        let _ = writeln!(out, "    <id>{}</id>", self.id);
        if let Some(target) = &self.redirect {
            let _ = writeln!(out, "    <redirect title=\"{}\" />", escape(target.as_str()));
        }
        for rev in &self.revisions {
            out.push_str("    <revision>\n");
            let _ = writeln!(out, "      <id>{}</id>", rev.id);
            if let Some(parent) = rev.parent_id {
                let _ = writeln!(out, "      <parentid>{parent}</parentid>");
            }
            let _ = writeln!(out, "      <timestamp>2017-05-01T00:00:{:02}Z</timestamp>", rev.id % 60);
            contributor_xml(&mut out, &rev.contributor);
            out.push_str("      <model>wikitext</model>\n      <format>text/x-wiki</format>\n");
            if rev.text.is_empty() {
                out.push_str("      <text xml:space=\"preserve\" bytes=\"0\" />\n");
            } else {
                let _ = writeln!(
                    out,
                    "      <text xml:space=\"preserve\" bytes=\"{}\">{}</text>",
                    rev.text.len(),
                    escape(rev.text.as_str())
                );
            }
            out.push_str("      <sha1>0</sha1>\n    </revision>\n");
        }
        out.push_str("  </page>\n");
        out
    }
}

/// Writes a complete dump document.
pub fn write_dump<W: Write>(mut out: W, pages: &[SynthPage]) -> io::Result<()> {
    out.write_all(HEADER.as_bytes())?;
    for page in pages {
        out.write_all(page.to_xml().as_bytes())?;
    }
    out.write_all(FOOTER.as_bytes())
}

pub fn dump_string(pages: &[SynthPage]) -> String {
    let mut buf = Vec::new();
    write_dump(&mut buf, pages).expect("writing to a Vec");
    String::from_utf8(buf).expect("generated XML is UTF-8")
}

/// Knobs for [`random_pages`].
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub pages: usize,
    pub max_revisions: usize,
    pub max_tokens: usize,
    /// Vocabulary size; small values force repeated words.
    pub vocabulary: usize,
    /// Probability that a page is a redirect.
    pub redirect_rate: f64,
    /// Probability that a title contains a colon.
    pub colon_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pages: 20,
            max_revisions: 8,
            max_tokens: 12,
            vocabulary: 16,
            redirect_rate: 0.1,
            colon_rate: 0.2,
        }
    }
}

const WORDS: &[&str] = &[
    "the", "cat", "sat", "on", "a", "mat", "wiki", "page", "edit", "river", "stone", "[[link]]", "{{cite}}", "R&amp;D",
    "<b>", "x\"y", "'quoted'", "année", "東京", "==head==", "1997", "é", "rock", "and", "roll",
];

fn word(rng: &mut StdRng, vocabulary: usize) -> String {
    let n = vocabulary.max(1);
    let i = rng.random_range(0..n);
    match WORDS.get(i) {
        Some(w) => (*w).to_string(),
        None => format!("w{i}"),
    }
}

fn separator(rng: &mut StdRng) -> &'static str {
    match rng.random_range(0..10) {
        0 => "\n",
        1 => "  ",
        2 => "\t",
        _ => " ",
    }
}

/// Random text whose next version is derived from `previous` by local
/// edits, so histories share words the way real ones do.
fn next_text(rng: &mut StdRng, previous: &str, cfg: &SynthConfig) -> String {
    let mut tokens: Vec<String> = previous.split_whitespace().map(str::to_string).collect();
    match rng.random_range(0..6) {
        0 => tokens.clear(),
        1 => tokens = (0..rng.random_range(0..=cfg.max_tokens)).map(|_| word(rng, cfg.vocabulary)).collect(),
        _ => {
            for _ in 0..rng.random_range(1..4) {
                if !tokens.is_empty() && rng.random_bool(0.4) {
                    let i = rng.random_range(0..tokens.len());
                    tokens.remove(i);
                } else if tokens.len() < cfg.max_tokens {
                    let i = rng.random_range(0..=tokens.len());
                    tokens.insert(i, word(rng, cfg.vocabulary));
                }
            }
        }
    }
    tokens.truncate(cfg.max_tokens);
    let mut text = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            text.push_str(separator(rng));
        }
        text.push_str(t);
    }
    text
}

fn contributor(rng: &mut StdRng) -> Contributor {
    match rng.random_range(0..10) {
        0 => Contributor::Deleted,
        1..=3 => Contributor::anonymous(format!("10.0.0.{}", rng.random_range(1..4))),
        4 => Contributor::anonymous(format!("2001:db8::{}", rng.random_range(1..3))),
        _ => {
            let id = rng.random_range(1..6u64);
            // Renamed accounts: same id, another name.
            let name = if rng.random_bool(0.2) {
                format!("Renamed{id}")
            } else {
                format!("User{id}")
            };
            Contributor::registered(id, name)
        }
    }
}

/// Generates pages with ids `first_page_id..` and globally unique revision
/// ids starting at `first_revision_id`.
pub fn random_pages_from(rng: &mut StdRng, cfg: &SynthConfig, first_page_id: u64, first_revision_id: u64) -> Vec<SynthPage> {
    let mut next_rev = first_revision_id;
    (0..cfg.pages)
        .map(|p| {
            let id = first_page_id + p as u64;
            let namespace = if rng.random_bool(0.8) { 0 } else { [1, 4][rng.random_range(0..2)] };
            let title = if rng.random_bool(cfg.colon_rate) {
                format!("Talk:Topic {id}")
            } else {
                format!("Topic {id}")
            };
            let redirect = rng.random_bool(cfg.redirect_rate).then(|| format!("Target {id}"));
            let mut text = String::new();
            let mut parent = None;
            let revisions = (0..rng.random_range(1..=cfg.max_revisions.max(1)))
                .map(|_| {
                    text = next_text(rng, &text, cfg);
                    let rev = SynthRevision {
                        id: next_rev,
                        parent_id: parent,
                        contributor: contributor(rng),
                        text: text.clone(),
                    };
                    parent = Some(next_rev);
                    next_rev += 1;
                    rev
                })
                .collect();
            SynthPage {
                id,
                title,
                namespace,
                redirect,
                revisions,
            }
        })
        .collect()
}

pub fn random_pages(seed: u64, cfg: &SynthConfig) -> Vec<SynthPage> {
    random_pages_from(&mut StdRng::seed_from_u64(seed), cfg, 1, 1)
}

/// Streams a dump of roughly `target_bytes` of XML, generated in batches.
/// Returns the number of pages written.
pub fn write_sized_dump<W: Write>(mut out: W, seed: u64, target_bytes: u64, cfg: &SynthConfig) -> io::Result<u64> {
    let mut rng = StdRng::seed_from_u64(seed);
    out.write_all(HEADER.as_bytes())?;
    let mut written = HEADER.len() as u64;
    let mut pages = 0u64;
    let mut next_rev = 1u64;
    while written < target_bytes {
        for page in random_pages_from(&mut rng, cfg, pages + 1, next_rev) {
            next_rev += page.revisions.len() as u64;
            pages += 1;
            let xml = page.to_xml();
            written += xml.len() as u64;
            out.write_all(xml.as_bytes())?;
        }
    }
    out.write_all(FOOTER.as_bytes())?;
    Ok(pages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_dump() {
        let cfg = SynthConfig::default();
        assert_eq!(dump_string(&random_pages(7, &cfg)), dump_string(&random_pages(7, &cfg)));
        assert_ne!(dump_string(&random_pages(7, &cfg)), dump_string(&random_pages(8, &cfg)));
    }

    #[test]
    fn revision_ids_are_unique() {
        let pages = random_pages(3, &SynthConfig { pages: 50, ..Default::default() });
        let mut ids: Vec<u64> = pages.iter().flat_map(|p| p.revisions.iter().map(|r| r.id)).collect();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn sized_dump_reaches_target() {
        let mut buf = Vec::new();
        let pages = write_sized_dump(&mut buf, 1, 100_000, &SynthConfig::default()).unwrap();
        assert!(buf.len() >= 100_000);
        assert!(pages > 0);
        assert!(buf.ends_with(FOOTER.as_bytes()));
    }
}
