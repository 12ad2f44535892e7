//! Random page histories and the skip/exclusion rules they must obey.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use wikimpact_core::chunked_io::RawPageRecord;
use wikimpact_core::synth::{SynthPage, SynthRevision};
use wikimpact_core::wikidump::{parse_page, ParserConfig, ParserVariant};
use wikimpact_core::Contributor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Who {
    Registered { id: u64, renamed: bool },
    Anonymous(u8),
    Deleted,
}

impl Who {
    pub fn contributor(self) -> Contributor {
        match self {
            Who::Registered { id, renamed: false } => Contributor::registered(id, format!("User{id}")),
            Who::Registered { id, renamed: true } => Contributor::registered(id, format!("New name {id}")),
            Who::Anonymous(n) => Contributor::anonymous(format!("192.0.2.{n}")),
            Who::Deleted => Contributor::Deleted,
        }
    }

    /// Same author, decided from the generator's own description.
    pub fn same_author(self, other: Who) -> bool {
        match (self, other) {
            (Who::Registered { id: a, .. }, Who::Registered { id: b, .. }) => a == b,
            (Who::Anonymous(a), Who::Anonymous(b)) => a == b,
            (Who::Deleted, Who::Deleted) => true,
            _ => false,
        }
    }
}

fn who() -> impl Strategy<Value = Who> {
    prop_oneof![
        4 => (1u64..4, any::<bool>()).prop_map(|(id, renamed)| Who::Registered { id, renamed }),
        3 => (1u8..4).prop_map(Who::Anonymous),
        1 => Just(Who::Deleted),
    ]
}

#[derive(Debug, Clone)]
pub struct History {
    pub colon: bool,
    pub redirect: bool,
    pub authors: Vec<Who>,
}

pub fn history() -> impl Strategy<Value = History> {
    (any::<bool>(), any::<bool>(), prop::collection::vec(who(), 1..10)).prop_map(|(colon, redirect, authors)| History {
        colon,
        redirect,
        authors,
    })
}

pub fn render(h: &History) -> RawPageRecord {
    let page = SynthPage {
        id: 42,
        title: if h.colon { "Talk:Some page".into() } else { "Some page".into() },
        namespace: 0,
        redirect: h.redirect.then(|| "Elsewhere".to_string()),
        revisions: h
            .authors
            .iter()
            .enumerate()
            .map(|(i, w)| SynthRevision {
                id: 100 + i as u64,
                parent_id: i.checked_sub(1).map(|p| 100 + p as u64),
                contributor: w.contributor(),
                text: format!("text of revision {i}"),
            })
            .collect(),
    };
    RawPageRecord::new(page.to_xml().trim().to_string()).unwrap()
}

/// Revision ids expected to survive: a revision is dropped when the next
/// one is by the same author.
pub fn expected_ids(h: &History) -> Vec<u64> {
    (0..h.authors.len())
        .filter(|&i| h.authors.get(i + 1).is_none_or(|next| !h.authors[i].same_author(*next)))
        .map(|i| 100 + i as u64)
        .collect()
}

/// Parses the history with both parsers and checks rules (a) to (d).
pub fn check_history(h: &History) -> Result<(), TestCaseError> {
    let record = render(h);
    for variant in [ParserVariant::EventXml, ParserVariant::RegexLines] {
        let page = parse_page(&record, &ParserConfig::new(variant)).map_err(|e| TestCaseError::fail(e.to_string()))?;

        // (b) redirect pages with a colon title are absent.
        if h.redirect && h.colon {
            prop_assert!(page.is_none());
            continue;
        }
        let page = page.ok_or_else(|| TestCaseError::fail("page unexpectedly excluded"))?;
        let kept: Vec<u64> = page.revisions.iter().map(|r| r.id).collect();

        // (a) no adjacent retained pair has the same author.
        for pair in page.revisions.windows(2) {
            prop_assert!(!pair[0].contributor.identity_matches(&pair[1].contributor));
        }

        // (c) and (d): the earlier of two same-author neighbours is dropped,
        // renamed accounts included; anonymous neighbours only when the IPs
        // are equal.
        for (i, pair) in h.authors.windows(2).enumerate() {
            let earlier = 100 + i as u64;
            match (pair[0], pair[1]) {
                (Who::Registered { id: a, .. }, Who::Registered { id: b, .. }) if a == b => {
                    prop_assert!(!kept.contains(&earlier));
                }
                (Who::Anonymous(a), Who::Anonymous(b)) => {
                    prop_assert_eq!(kept.contains(&earlier), a != b);
                }
                _ => {}
            }
        }
        prop_assert_eq!(kept.last().copied(), Some(100 + h.authors.len() as u64 - 1));
        prop_assert_eq!(&kept, &expected_ids(h));

        let positions: Vec<u32> = page.revisions.iter().map(|r| r.within_page_id).collect();
        prop_assert_eq!(positions, (1..=kept.len() as u32).collect::<Vec<_>>());
    }
    Ok(())
}
