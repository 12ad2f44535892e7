//! Domain types shared by the ingestion, parsing and scoring stages.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Username assigned to every anonymous contributor.
///
/// Contains `#`, `<` and `>`, none of which MediaWiki allows in account
/// names, so it can never collide with a registered user.
pub const ANONYMOUS_USERNAME: &str = "##<<__-=ANONYMOUS=-__>>##";

/// Identity string used for contributors whose account was suppressed
/// (`<contributor deleted="deleted" />`).
pub const DELETED_IDENTITY: &str = "##DELETED##";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContributorKind {
    Registered,
    Anonymous,
    Deleted,
}

/// The author of a revision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Contributor {
    Registered { user_id: Option<u64>, username: String },
    Anonymous { ip: String },
    Deleted,
}

impl Contributor {
    pub fn registered(user_id: u64, username: impl Into<String>) -> Self {
        Contributor::Registered {
            user_id: Some(user_id),
            username: username.into(),
        }
    }

    pub fn anonymous(ip: impl Into<String>) -> Self {
        Contributor::Anonymous { ip: ip.into() }
    }

    pub fn kind(&self) -> ContributorKind {
        match self {
            Contributor::Registered { .. } => ContributorKind::Registered,
            Contributor::Anonymous { .. } => ContributorKind::Anonymous,
            Contributor::Deleted => ContributorKind::Deleted,
        }
    }

    pub fn user_id(&self) -> Option<u64> {
        match self {
            Contributor::Registered { user_id, .. } => *user_id,
            _ => None,
        }
    }

    /// Username as stored on the parsed object; anonymous contributors carry
    /// the sentinel.
    pub fn username(&self) -> Option<&str> {
        match self {
            Contributor::Registered { username, .. } => Some(username),
            Contributor::Anonymous { .. } => Some(ANONYMOUS_USERNAME),
            Contributor::Deleted => None,
        }
    }

    pub fn ip(&self) -> Option<&str> {
        match self {
            Contributor::Anonymous { ip } => Some(ip),
            _ => None,
        }
    }

    /// The string hashed by [`Contributor::identifier`] and shown as a label.
    pub fn identity_string(&self) -> &str {
        match self {
            Contributor::Registered { username, .. } => username,
            Contributor::Anonymous { .. } => ANONYMOUS_USERNAME,
            Contributor::Deleted => DELETED_IDENTITY,
        }
    }

    /// Positional byte hash of the identity string: `sum(b_k * k)` over the
    /// bytes with 1-based `k`.
    ///
    /// Bytes are read as signed values, the way the JVM exposes them, so
    /// identifiers of non-ASCII names match the original tooling. The sum
    /// saturates instead of wrapping.
    pub fn identifier(&self) -> i64 {
        identity_hash(self.identity_string())
    }

    /// Whether two adjacent revisions count as the same author for the
    /// consecutive-edit collapse.
    ///
    /// User ids are compared first when both sides have one (the same id with
    /// different usernames matches). Anonymous contributors match only on an
    /// identical IP address, and deleted contributors always match each other.
    pub fn identity_matches(&self, other: &Contributor) -> bool {
        if let (Some(a), Some(b)) = (self.user_id(), other.user_id()) {
            return a == b;
        }
        match (self, other) {
            (
                Contributor::Registered { username: a, .. },
                Contributor::Registered { username: b, .. },
            ) => a == b,
            (Contributor::Anonymous { ip: a }, Contributor::Anonymous { ip: b }) => a == b,
            (Contributor::Deleted, Contributor::Deleted) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Contributor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contributor::Registered {
                user_id: Some(id),
                username,
            } => write!(f, "{username} (#{id})"),
            Contributor::Registered { username, .. } => f.write_str(username),
            Contributor::Anonymous { ip } => write!(f, "anonymous {ip}"),
            Contributor::Deleted => f.write_str("deleted contributor"),
        }
    }
}

pub(crate) fn identity_hash(s: &str) -> i64 {
    s.bytes()
        .zip(1i64..)
        .fold(0i64, |acc, (b, k)| acc.saturating_add((b as i8 as i64).saturating_mul(k)))
}

/// Identifier shared by all anonymous contributors.
pub fn anonymous_identifier() -> i64 {
    identity_hash(ANONYMOUS_USERNAME)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub id: u64,
    pub parent_id: Option<u64>,
    /// Kept verbatim from the dump.
    pub timestamp: Option<String>,
    pub text: String,
    pub contributor: Contributor,
    /// 1-based position among the page's retained revisions.
    pub within_page_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub id: u64,
    pub title: String,
    pub namespace: i32,
    pub revisions: Vec<Revision>,
    pub pageview: Option<Pageview>,
}

impl Page {
    /// Retained revision preceding position `index`, if any.
    pub fn parent_of(&self, index: usize) -> Option<&Revision> {
        index.checked_sub(1).and_then(|i| self.revisions.get(i))
    }

    pub fn child_of(&self, index: usize) -> Option<&Revision> {
        self.revisions.get(index + 1)
    }

    pub fn request_count(&self) -> u64 {
        self.pageview.as_ref().map_or(0, |pv| pv.request_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pageview {
    pub project_name: String,
    pub page_title: String,
    pub request_count: u64,
    pub request_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("score {0} is not finite")]
pub struct NonFiniteScore(pub f64);

/// A scored subject (usually a contributor). The score is always finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceScore {
    subject_id: i64,
    label: String,
    score: f64,
}

impl RelevanceScore {
    pub fn new(subject_id: i64, label: impl Into<String>, score: f64) -> Result<Self, NonFiniteScore> {
        if !score.is_finite() {
            return Err(NonFiniteScore(score));
        }
        Ok(RelevanceScore {
            subject_id,
            label: label.into(),
            score,
        })
    }

    pub fn subject_id(&self) -> i64 {
        self.subject_id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub(crate) fn with_score(&self, score: f64) -> Result<Self, NonFiniteScore> {
        RelevanceScore::new(self.subject_id, self.label.clone(), score)
    }
}

/// Optional numeric difference between two revisions. Absent means the
/// difference is undefined (for example a zero denominator).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DifferenceValue(Option<f64>);

impl DifferenceValue {
    pub const NONE: DifferenceValue = DifferenceValue(None);

    pub fn new(value: Option<f64>) -> Result<Self, NonFiniteScore> {
        match value {
            Some(v) if !v.is_finite() => Err(NonFiniteScore(v)),
            _ => Ok(DifferenceValue(value)),
        }
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifier_is_positional_byte_sum() {
        assert_eq!(Contributor::registered(1, "ab").identifier(), 97 + 98 * 2);
        assert_eq!(Contributor::registered(7, "A").identifier(), 65);
        assert_eq!(Contributor::Deleted.identifier(), identity_hash(DELETED_IDENTITY));
    }

    #[test]
    fn identifier_ignores_everything_but_identity_string() {
        let a = Contributor::registered(1, "Keuramat");
        let b = Contributor::registered(99, "Keuramat");
        assert_eq!(a.identifier(), b.identifier());
    }

    #[test]
    fn anonymous_contributors_share_identifier() {
        let a = Contributor::anonymous("1.2.3.4");
        let b = Contributor::anonymous("9.9.9.9");
        assert_eq!(a.identifier(), b.identifier());
        assert_eq!(a.identifier(), anonymous_identifier());
        assert_eq!(a.username(), Some(ANONYMOUS_USERNAME));
    }

    #[test]
    fn non_ascii_bytes_are_signed() {
        // "é" is 0xC3 0xA9 in UTF-8: -61*1 + -87*2
        assert_eq!(Contributor::registered(1, "é").identifier(), -61 - 87 * 2);
    }

    #[test]
    fn same_id_different_usernames_match() {
        let a = Contributor::registered(0, "Lam Tamot");
        let b = Contributor::registered(0, "Keuramat");
        assert!(a.identity_matches(&b));
    }

    #[test]
    fn ids_take_precedence_over_usernames() {
        let a = Contributor::registered(1, "Same");
        let b = Contributor::registered(2, "Same");
        assert!(!a.identity_matches(&b));
        let c = Contributor::Registered { user_id: None, username: "Same".into() };
        assert!(a.identity_matches(&c));
    }

    #[test]
    fn anonymous_match_on_ip_only() {
        let a = Contributor::anonymous("1.2.3.4");
        assert!(!a.identity_matches(&Contributor::anonymous("5.6.7.8")));
        assert!(a.identity_matches(&Contributor::anonymous("1.2.3.4")));
    }

    #[test]
    fn cross_kind_never_matches() {
        let reg = Contributor::registered(1, "x");
        let anon = Contributor::anonymous("1.2.3.4");
        assert!(!reg.identity_matches(&anon));
        assert!(!reg.identity_matches(&Contributor::Deleted));
        assert!(!anon.identity_matches(&Contributor::Deleted));
        assert!(Contributor::Deleted.identity_matches(&Contributor::Deleted));
    }

    #[test]
    fn relevance_score_rejects_non_finite() {
        assert!(RelevanceScore::new(1, "x", f64::NAN).is_err());
        assert!(RelevanceScore::new(1, "x", f64::INFINITY).is_err());
        assert!(DifferenceValue::new(Some(f64::NEG_INFINITY)).is_err());
        assert_eq!(DifferenceValue::new(None).unwrap().value(), None);
    }
}
