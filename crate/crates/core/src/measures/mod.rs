//! Contribution measures.
//!
//! Every retained revision is compared with its parent (the previous
//! retained revision, or empty text for the first one) and with up to `J`
//! following revisions, the judges.

mod diff;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use diff::{edit_distance, edit_quality, live_tokens, tokenize, word_diff, WordDiff};
use diff::{distance_symbols, quality_from_distances, word_diff_symbols};

use crate::model::{Page, RelevanceScore};

/// Revisions looked at by [`Measure::TenRevisions`].
pub const TEN_REVISIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Measure {
    NumEdits,
    TextOnly,
    EditOnly,
    TextLongevity,
    EditLongevity,
    TenRevisions,
    TextLongevityWithPenalty,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::NumEdits,
        Measure::TextOnly,
        Measure::EditOnly,
        Measure::TextLongevity,
        Measure::EditLongevity,
        Measure::TenRevisions,
        Measure::TextLongevityWithPenalty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::NumEdits => "num-edits",
            Measure::TextOnly => "text-only",
            Measure::EditOnly => "edit-only",
            Measure::TextLongevity => "text-longevity",
            Measure::EditLongevity => "edit-longevity",
            Measure::TenRevisions => "ten-revisions",
            Measure::TextLongevityWithPenalty => "text-longevity-with-penalty",
        }
    }

    fn needs_judges(self) -> bool {
        matches!(
            self,
            Measure::TextLongevity
                | Measure::EditLongevity
                | Measure::TenRevisions
                | Measure::TextLongevityWithPenalty
        )
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Measure::ALL
            .into_iter()
            .find(|m| m.name().replace('-', "") == key)
            .or(match key.as_str() {
                "tlwp" | "textlongevitypenalty" => Some(Measure::TextLongevityWithPenalty),
                "edits" => Some(Measure::NumEdits),
                _ => None,
            })
            .ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureConfig {
    /// Number of following revisions used as judges.
    pub judges: usize,
    pub measure: Measure,
}

impl MeasureConfig {
    pub fn new(measure: Measure) -> Self {
        MeasureConfig { judges: 10, measure }
    }
}

/// Score of one revision, attributed to its contributor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionScore {
    pub revision_id: u64,
    pub contributor_id: i64,
    pub contributor_label: String,
    pub score: f64,
}

/// Everything the seven measures are built from, for one revision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RevisionMetrics {
    pub text: f64,
    pub edit: f64,
    pub text_longevity: f64,
    pub edit_longevity: f64,
    pub ten_revisions: f64,
}

impl RevisionMetrics {
    pub fn get(&self, measure: Measure) -> f64 {
        match measure {
            Measure::NumEdits => 1.0,
            Measure::TextOnly => self.text,
            Measure::EditOnly => self.edit,
            Measure::TextLongevity => self.text_longevity,
            Measure::EditLongevity => self.edit_longevity,
            Measure::TenRevisions => self.ten_revisions,
            Measure::TextLongevityWithPenalty => self.text_longevity + self.edit_longevity.min(0.0),
        }
    }
}

/// Page texts as interned token sequences, with memoised distances.
struct PageTokens {
    /// Index 0 is the empty text before the first revision.
    texts: Vec<Vec<u32>>,
    distances: HashMap<(usize, usize), usize>,
}

impl PageTokens {
    fn new(page: &Page) -> Self {
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let mut texts = vec![Vec::new()];
        for rev in &page.revisions {
            let seq = tokenize(&rev.text)
                .into_iter()
                .map(|t| {
                    let next = ids.len() as u32;
                    *ids.entry(t).or_insert(next)
                })
                .collect();
            texts.push(seq);
        }
        PageTokens {
            texts,
            distances: HashMap::new(),
        }
    }

    fn distance(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&d) = self.distances.get(&key) {
            return d;
        }
        let d = distance_symbols(&self.texts[key.0], &self.texts[key.1]);
        self.distances.insert(key, d);
        d
    }

    fn live(&self, added: &[u32], future: usize) -> usize {
        let mut available: HashMap<u32, usize> = HashMap::new();
        for &t in &self.texts[future] {
            *available.entry(t).or_default() += 1;
        }
        added
            .iter()
            .filter(|t| match available.get_mut(t) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    true
                }
                _ => false,
            })
            .count()
    }
}

/// Computes the building blocks for every retained revision of a page.
///
/// With `with_judges` false only the parent comparison is done and the
/// judge-based fields are left at zero.
pub fn page_metrics(page: &Page, judges: usize, with_judges: bool) -> Vec<RevisionMetrics> {
    let mut tokens = PageTokens::new(page);
    let n = page.revisions.len();
    let mut out = Vec::with_capacity(n);
    for idx in 1..=n {
        let prev = idx - 1;
        let diff = word_diff_symbols(&tokens.texts[prev], &tokens.texts[idx]);
        let added: Vec<u32> = diff.added.iter().map(|&j| tokens.texts[idx][j]).collect();
        let txt = diff.inserted;
        let edit = diff.inserted.max(diff.deleted);
        tokens.distances.insert((prev, idx), edit);
        let mut m = RevisionMetrics {
            text: txt as f64,
            edit: edit as f64,
            ..Default::default()
        };
        if with_judges {
            let followers = n - idx;
            let k_max = judges.min(followers);

            m.text_longevity = if txt == 0 {
                0.0
            } else if k_max == 0 {
                txt as f64
            } else {
                let live: usize = (1..=k_max).map(|k| tokens.live(&added, idx + k)).sum();
                live as f64 / k_max as f64
            };

            let qualities: Vec<f64> = (1..=k_max)
                .filter_map(|k| {
                    let judge = idx + k;
                    quality_from_distances(tokens.distance(prev, judge), tokens.distance(idx, judge), edit)
                })
                .collect();
            m.edit_longevity = if qualities.is_empty() {
                0.0
            } else {
                edit as f64 * (qualities.iter().sum::<f64>() / qualities.len() as f64)
            };

            m.ten_revisions = if followers == 0 || txt == 0 {
                0.0
            } else {
                tokens.live(&added, idx + TEN_REVISIONS.min(followers)) as f64
            };
        }
        out.push(m);
    }
    out
}

fn to_scores(page: &Page, metrics: &[RevisionMetrics], measure: Measure) -> Vec<RevisionScore> {
    page.revisions
        .iter()
        .zip(metrics)
        .map(|(rev, m)| RevisionScore {
            revision_id: rev.id,
            contributor_id: rev.contributor.identifier(),
            contributor_label: rev.contributor.identity_string().to_string(),
            score: m.get(measure),
        })
        .collect()
}

/// Scores every retained revision of `page` with one measure.
pub fn score_page(page: &Page, config: &MeasureConfig) -> Vec<RevisionScore> {
    let metrics = if config.measure == Measure::NumEdits {
        vec![RevisionMetrics::default(); page.revisions.len()]
    } else {
        page_metrics(page, config.judges, config.measure.needs_judges())
    };
    to_scores(page, &metrics, config.measure)
}

/// Scores a page with all seven measures in one pass, in [`Measure::ALL`]
/// order.
pub fn score_page_all(page: &Page, judges: usize) -> Vec<(Measure, Vec<RevisionScore>)> {
    let metrics = page_metrics(page, judges, true);
    Measure::ALL
        .into_iter()
        .map(|m| (m, to_scores(page, &metrics, m)))
        .collect()
}

/// Multiplies every score by the page's request count (0 without pageview).
pub fn pageview_weighted(scores: Vec<RevisionScore>, page: &Page) -> Vec<RevisionScore> {
    let weight = page.request_count() as f64;
    scores
        .into_iter()
        .map(|mut s| {
            s.score *= weight;
            s
        })
        .collect()
}

/// Sums revision scores per contributor.
///
/// Input order does not matter: scores are sorted by contributor and
/// revision before summing, so floating point results are reproducible. The
/// label is the smallest label seen for the identifier. Output is ordered by
/// subject id.
pub fn reduce_by_contributor<I>(scores: I) -> Vec<RelevanceScore>
where
    I: IntoIterator<Item = RevisionScore>,
{
    let mut scores: Vec<RevisionScore> = scores.into_iter().collect();
    scores.sort_by(|a, b| {
        (a.contributor_id, a.revision_id, a.score.to_bits()).cmp(&(b.contributor_id, b.revision_id, b.score.to_bits()))
    });
    let mut out: Vec<RelevanceScore> = Vec::new();
    let mut iter = scores.into_iter().peekable();
    while let Some(first) = iter.next() {
        let id = first.contributor_id;
        let mut label = first.contributor_label;
        let mut total = first.score;
        while let Some(next) = iter.next_if(|s| s.contributor_id == id) {
            total += next.score;
            if next.contributor_label < label {
                label = next.contributor_label;
            }
        }
        match RelevanceScore::new(id, label, total) {
            Ok(score) => out.push(score),
            Err(e) => log::warn!("dropping contributor {id}: {e}"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Contributor, Pageview, Revision};

    fn page(revs: &[(u64, &str, &str)]) -> Page {
        Page {
            id: 1,
            title: "T".into(),
            namespace: 0,
            revisions: revs
                .iter()
                .enumerate()
                .map(|(i, (id, user, text))| Revision {
                    id: *id,
                    parent_id: None,
                    timestamp: None,
                    text: text.to_string(),
                    contributor: Contributor::registered(*id, *user),
                    within_page_id: i as u32 + 1,
                })
                .collect(),
            pageview: None,
        }
    }

    fn scores(p: &Page, m: Measure) -> Vec<f64> {
        score_page(p, &MeasureConfig::new(m)).into_iter().map(|s| s.score).collect()
    }

    #[test]
    fn single_revision_text_only() {
        assert_eq!(scores(&page(&[(1, "a", "a b c")]), Measure::TextOnly), vec![3.0]);
    }

    #[test]
    fn two_revision_history() {
        let p = page(&[(1, "u", "a b c d"), (2, "v", "a b")]);
        assert_eq!(scores(&p, Measure::TextLongevity)[0], 2.0);
        assert_eq!(scores(&p, Measure::EditLongevity)[0], 0.0);
        assert_eq!(scores(&p, Measure::TenRevisions)[0], 2.0);
        assert_eq!(scores(&p, Measure::EditOnly), vec![4.0, 2.0]);
        // Last revision: no followers.
        assert_eq!(scores(&p, Measure::TextLongevity)[1], 0.0);
        assert_eq!(scores(&p, Measure::EditLongevity)[1], 0.0);
        assert_eq!(scores(&p, Measure::NumEdits), vec![1.0, 1.0]);
    }

    #[test]
    fn last_revision_keeps_its_text() {
        let p = page(&[(1, "u", "a"), (2, "v", "a b c")]);
        assert_eq!(scores(&p, Measure::TextLongevity), vec![1.0, 2.0]);
        assert_eq!(scores(&p, Measure::TenRevisions), vec![1.0, 0.0]);
    }

    #[test]
    fn penalty_only_subtracts() {
        // r2 vandalises, r3 restores: r2's edit quality is negative.
        let p = page(&[(1, "u", "a b c d"), (2, "v", "x"), (3, "w", "a b c d")]);
        let el = scores(&p, Measure::EditLongevity);
        let tl = scores(&p, Measure::TextLongevity);
        let tlwp = scores(&p, Measure::TextLongevityWithPenalty);
        assert!(el[1] < 0.0);
        for i in 0..3 {
            assert_eq!(tlwp[i], tl[i] + el[i].min(0.0));
        }
    }

    #[test]
    fn all_measures_agree_with_single_runs() {
        let p = page(&[(1, "u", "a b c d"), (2, "v", "a b x"), (3, "w", "a x y b"), (4, "u", "y")]);
        for (m, all) in score_page_all(&p, 10) {
            assert_eq!(all, score_page(&p, &MeasureConfig::new(m)), "{m}");
        }
    }

    #[test]
    fn reduce_sums_per_contributor() {
        let s = |rev, id, score| RevisionScore {
            revision_id: rev,
            contributor_id: id,
            contributor_label: format!("user{id}"),
            score,
        };
        let out = reduce_by_contributor(vec![s(1, 7, 2.0), s(2, 7, 3.0), s(3, 9, 1.0)]);
        let pairs: Vec<(i64, f64)> = out.iter().map(|r| (r.subject_id(), r.score())).collect();
        assert_eq!(pairs, vec![(7, 5.0), (9, 1.0)]);
        assert!(reduce_by_contributor(Vec::new()).is_empty());
    }

    #[test]
    fn pageview_weighting() {
        let mut p = page(&[(1, "u", "a b"), (2, "v", "a b c d e")]);
        let base = score_page(&p, &MeasureConfig::new(Measure::TextOnly));
        let zero: Vec<f64> = pageview_weighted(base.clone(), &p).iter().map(|s| s.score).collect();
        assert_eq!(zero, vec![0.0, 0.0]);
        p.pageview = Some(Pageview {
            project_name: "aa".into(),
            page_title: "T".into(),
            request_count: 10,
            request_size: 0,
        });
        let weighted: Vec<f64> = pageview_weighted(base, &p).iter().map(|s| s.score).collect();
        assert_eq!(weighted, vec![20.0, 30.0]);
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert_eq!("TextLongevityWithPenalty".parse::<Measure>().unwrap(), Measure::TextLongevityWithPenalty);
        assert_eq!("num_edits".parse::<Measure>().unwrap(), Measure::NumEdits);
        assert!("bogus".parse::<Measure>().is_err());
    }
}
