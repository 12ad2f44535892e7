//! Mining Wikipedia edit-history dumps and pageview data to score authors.

pub mod bench;
pub mod chunked_io;
pub mod measures;
pub mod model;
pub mod pageviews;
pub mod scores;
pub mod synth;
pub mod wikidump;

pub use model::{Contributor, ContributorKind, DifferenceValue, Page, Pageview, RelevanceScore, Revision};
