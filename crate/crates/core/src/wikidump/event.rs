//! Event based parser built on a pull XML reader.

use quick_xml::escape::resolve_xml_entity;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{PageDraft, ParseError, RevisionDraft};

fn malformed(e: impl std::fmt::Display) -> ParseError {
    ParseError::MalformedPageXml(e.to_string())
}

fn is_deleted(tag: &BytesStart<'_>) -> bool {
    matches!(
        tag.try_get_attribute("deleted"),
        Ok(Some(attr)) if attr.value.as_ref() == "deleted"
    )
}

/// Element names we track, relative to `<page>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    Namespace,
    PageId,
    RevisionId,
    ParentId,
    Timestamp,
    Text,
    Username,
    UserId,
    Ip,
}

fn field_for(path: &[Vec<u8>]) -> Option<Field> {
    let names: Vec<&[u8]> = path.iter().map(Vec::as_slice).collect();
    Some(match names.as_slice() {
        [b"page", b"title"] => Field::Title,
        [b"page", b"ns"] => Field::Namespace,
        [b"page", b"id"] => Field::PageId,
        [b"page", b"revision", b"id"] => Field::RevisionId,
        [b"page", b"revision", b"parentid"] => Field::ParentId,
        [b"page", b"revision", b"timestamp"] => Field::Timestamp,
        [b"page", b"revision", b"text"] => Field::Text,
        [b"page", b"revision", b"contributor", b"username"] => Field::Username,
        [b"page", b"revision", b"contributor", b"id"] => Field::UserId,
        [b"page", b"revision", b"contributor", b"ip"] => Field::Ip,
        _ => return None,
    })
}

fn store(draft: &mut PageDraft, field: Field, value: String) {
    let rev = draft.revisions.last_mut();
    match (field, rev) {
        (Field::Title, _) => draft.title = Some(value),
        (Field::Namespace, _) => draft.namespace = Some(value),
        (Field::PageId, _) => draft.id = Some(value),
        (Field::RevisionId, Some(rev)) => rev.id = Some(value),
        (Field::ParentId, Some(rev)) => rev.parent_id = Some(value),
        (Field::Timestamp, Some(rev)) => rev.timestamp = Some(value),
        (Field::Text, Some(rev)) => rev.text = value,
        (Field::Username, Some(rev)) => rev.username = Some(value),
        (Field::UserId, Some(rev)) => rev.user_id = Some(value),
        (Field::Ip, Some(rev)) => rev.ip = Some(value),
        _ => {}
    }
}

/// Parses a page fragment into a draft.
///
/// Character data for one element may arrive as several events (text runs,
/// entity references, CDATA); it is accumulated until the element closes.
pub(super) fn parse_draft(xml: &str) -> Result<PageDraft, ParseError> {
    let mut reader = Reader::from_str(xml);
    let mut draft = PageDraft::default();
    let mut path: Vec<Vec<u8>> = Vec::new();
    let mut current: Option<Field> = None;
    let mut buffer = String::new();

    loop {
        match reader.read_event().map_err(malformed)? {
            Event::Start(tag) => {
                let name = tag.local_name().as_ref().as_bytes().to_vec();
                path.push(name);
                match path.iter().map(Vec::as_slice).collect::<Vec<_>>().as_slice() {
                    [b"page", b"revision"] => draft.revisions.push(RevisionDraft::default()),
                    [b"page", b"redirect"] if draft.revisions.is_empty() => draft.redirect = true,
                    [b"page", b"revision", b"contributor"] if is_deleted(&tag) => {
                        if let Some(rev) = draft.revisions.last_mut() {
                            rev.contributor_deleted = true;
                        }
                    }
                    _ => {}
                }
                current = field_for(&path);
                buffer.clear();
            }
            Event::Empty(tag) => {
                let name = tag.local_name().as_ref().as_bytes().to_vec();
                path.push(name);
                match path.iter().map(Vec::as_slice).collect::<Vec<_>>().as_slice() {
                    [b"page", b"redirect"] if draft.revisions.is_empty() => draft.redirect = true,
                    [b"page", b"revision"] => draft.revisions.push(RevisionDraft::default()),
                    [b"page", b"revision", b"contributor"] => {
                        // A bodiless contributor only occurs for suppressed accounts.
                        if let Some(rev) = draft.revisions.last_mut() {
                            rev.contributor_deleted = true;
                        }
                    }
                    _ => {
                        if let Some(field) = field_for(&path) {
                            store(&mut draft, field, String::new());
                        }
                    }
                }
                path.pop();
            }
            Event::End(_) => {
                if let Some(field) = current.take() {
                    store(&mut draft, field, std::mem::take(&mut buffer));
                }
                path.pop();
            }
            Event::Text(text) if current.is_some() => buffer.push_str(&text.xml10_content()),
            Event::CData(data) if current.is_some() => buffer.push_str(&data.xml10_content()),
            Event::GeneralRef(entity) if current.is_some() => {
                if let Some(ch) = entity.resolve_char_ref().map_err(malformed)? {
                    buffer.push(ch);
                } else {
                    let name = entity.xml10_content();
                    let resolved = resolve_xml_entity(&name)
                        .ok_or_else(|| malformed(format!("unknown entity &{name};")))?;
                    buffer.push_str(resolved);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !path.is_empty() {
        return Err(malformed("unexpected end of page fragment"));
    }
    Ok(draft)
}
