//! Brute-force reference for the contribution measures.
//!
//! The reference enumerates every subset of the newer revision's tokens,
//! keeps the largest ones that are subsequences of the older revision, and
//! takes the lexicographically smallest index set as the alignment.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use wikimpact_core::measures::{score_page, Measure, MeasureConfig};
use wikimpact_core::{Contributor, Page, Revision};

fn is_subsequence(needle: &[&str], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Indices of `newer` matched by the pinned alignment.
fn matched(older: &[&str], newer: &[&str]) -> Vec<usize> {
    let n = newer.len();
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<&str> = idx.iter().map(|&i| newer[i]).collect();
        if !is_subsequence(&sub, older) {
            continue;
        }
        best = match best {
            None => Some(idx),
            Some(b) if idx.len() > b.len() || (idx.len() == b.len() && idx < b) => Some(idx),
            keep => keep,
        };
    }
    best.unwrap_or_default()
}

pub struct Diff<'a> {
    pub inserted: usize,
    pub deleted: usize,
    pub added: Vec<&'a str>,
}

pub fn diff<'a>(older: &[&'a str], newer: &[&'a str]) -> Diff<'a> {
    let m = matched(older, newer);
    Diff {
        inserted: newer.len() - m.len(),
        deleted: older.len() - m.len(),
        added: (0..newer.len()).filter(|i| !m.contains(i)).map(|i| newer[i]).collect(),
    }
}

pub fn distance(a: &[&str], b: &[&str]) -> usize {
    let d = diff(a, b);
    d.inserted.max(d.deleted)
}

pub fn live(added: &[&str], future: &[&str]) -> usize {
    let mut pool: Vec<&str> = future.to_vec();
    added
        .iter()
        .filter(|t| match pool.iter().position(|p| p == *t) {
            Some(i) => {
                pool.swap_remove(i);
                true
            }
            None => false,
        })
        .count()
}

pub fn quality(prev: &[&str], cur: &[&str], judge: &[&str]) -> Option<f64> {
    let denom = distance(prev, cur);
    if denom == 0 {
        return None;
    }
    let q = (distance(prev, judge) as f64 - distance(cur, judge) as f64) / denom as f64;
    Some(q.clamp(-1.0, 1.0))
}

/// Reference scores for every revision; `texts[0]` is the first revision.
pub fn reference(texts: &[Vec<&str>], judges: usize, measure: Measure) -> Vec<f64> {
    let empty: Vec<&str> = Vec::new();
    let n = texts.len();
    (0..n)
        .map(|i| {
            let prev = if i == 0 { &empty } else { &texts[i - 1] };
            let cur = &texts[i];
            let d = diff(prev, cur);
            let txt = d.inserted;
            let edit = d.inserted.max(d.deleted);
            let followers = n - 1 - i;
            let k = judges.min(followers);
            let tl = if txt == 0 {
                0.0
            } else if k == 0 {
                txt as f64
            } else {
                let alpha: f64 =
                    (1..=k).map(|j| live(&d.added, &texts[i + j]) as f64 / txt as f64).sum::<f64>() / k as f64;
                txt as f64 * alpha
            };
            let qs: Vec<f64> = (1..=k).filter_map(|j| quality(prev, cur, &texts[i + j])).collect();
            let el = if qs.is_empty() {
                0.0
            } else {
                edit as f64 * qs.iter().sum::<f64>() / qs.len() as f64
            };
            let ten = if followers == 0 || txt == 0 {
                0.0
            } else {
                live(&d.added, &texts[i + 10.min(followers)]) as f64
            };
            match measure {
                Measure::NumEdits => 1.0,
                Measure::TextOnly => txt as f64,
                Measure::EditOnly => edit as f64,
                Measure::TextLongevity => tl,
                Measure::EditLongevity => el,
                Measure::TenRevisions => ten,
                Measure::TextLongevityWithPenalty => tl + el.min(0.0),
            }
        })
        .collect()
}

pub fn page(texts: &[Vec<&str>]) -> Page {
    Page {
        id: 1,
        title: "P".into(),
        namespace: 0,
        revisions: texts
            .iter()
            .enumerate()
            .map(|(i, t)| Revision {
                id: i as u64 + 1,
                parent_id: None,
                timestamp: None,
                text: t.join(" "),
                contributor: Contributor::registered(i as u64 + 1, format!("u{i}")),
                within_page_id: i as u32 + 1,
            })
            .collect(),
        pageview: None,
    }
}

/// Measures whose scores are whole numbers and must match exactly.
pub fn exact(m: Measure) -> bool {
    matches!(m, Measure::NumEdits | Measure::TextOnly | Measure::EditOnly | Measure::TenRevisions)
}

/// Up to five revisions of up to six tokens over a four-word vocabulary.
pub fn histories() -> impl Strategy<Value = Vec<Vec<&'static str>>> {
    let token = prop::sample::select(vec!["a", "b", "c", "d"]);
    prop::collection::vec(prop::collection::vec(token, 0..=6), 1..=5)
}

pub fn judge_counts() -> impl Strategy<Value = usize> {
    prop_oneof![Just(10usize), 1usize..4]
}

pub const TOLERANCE: f64 = 1e-9;

/// Compares `score_page` with the reference for every measure.
pub fn check_measures(texts: &[Vec<&str>], judges: usize) -> Result<(), TestCaseError> {
    let p = page(texts);
    for m in Measure::ALL {
        let got: Vec<f64> = score_page(&p, &MeasureConfig { judges, measure: m })
            .into_iter()
            .map(|s| s.score)
            .collect();
        let want = reference(texts, judges, m);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            if exact(m) {
                prop_assert_eq!(g, w, "{} on {:?}", m, texts);
            } else {
                prop_assert!((g - w).abs() <= TOLERANCE, "{} on {:?}: {} vs {}", m, texts, g, w);
            }
        }
    }
    Ok(())
}
