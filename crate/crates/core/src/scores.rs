//! Algebra over collections of relevance scores, ranking and the h-index.

use std::collections::BTreeMap;

use crate::model::{anonymous_identifier, NonFiniteScore, RelevanceScore};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("division by zero for subject {0}")]
    DivisionByZero(i64),
    #[error("division by a zero scalar")]
    ZeroScalar,
    #[error("min/max of an empty collection")]
    EmptyCollection,
    #[error(transparent)]
    NonFinite(#[from] NonFiniteScore),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Min,
    Max,
    Sum,
}

/// Scores keyed by subject id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    entries: BTreeMap<i64, RelevanceScore>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later entries for the same subject replace earlier ones.
    pub fn insert(&mut self, score: RelevanceScore) {
        self.entries.insert(score.subject_id(), score);
    }

    pub fn get(&self, subject_id: i64) -> Option<&RelevanceScore> {
        self.entries.get(&subject_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending subject id order.
    pub fn iter(&self) -> impl Iterator<Item = &RelevanceScore> {
        self.entries.values()
    }

    pub fn into_vec(self) -> Vec<RelevanceScore> {
        self.entries.into_values().collect()
    }
}

impl FromIterator<RelevanceScore> for ScoreTable {
    fn from_iter<I: IntoIterator<Item = RelevanceScore>>(iter: I) -> Self {
        let mut table = ScoreTable::new();
        for score in iter {
            table.insert(score);
        }
        table
    }
}

/// Item-wise operation on subjects present in both tables. Subjects found
/// in only one table are dropped. The label comes from `a`.
pub fn join_op(a: &ScoreTable, b: &ScoreTable, op: Op) -> Result<ScoreTable, ScoreError> {
    let mut out = ScoreTable::new();
    for left in a.iter() {
        let Some(right) = b.get(left.subject_id()) else {
            continue;
        };
        if op == Op::Div && right.score() == 0.0 {
            return Err(ScoreError::DivisionByZero(left.subject_id()));
        }
        out.insert(left.with_score(op.apply(left.score(), right.score()))?);
    }
    Ok(out)
}

/// Applies `score op alpha` to every entry.
pub fn scalar_op(a: &ScoreTable, alpha: f64, op: Op) -> Result<ScoreTable, ScoreError> {
    if op == Op::Div && alpha == 0.0 {
        return Err(ScoreError::ZeroScalar);
    }
    a.iter()
        .map(|s| s.with_score(op.apply(s.score(), alpha)).map_err(ScoreError::from))
        .collect()
}

/// Min, max or sum of the scores. Summation runs in ascending subject order.
pub fn aggregate(a: &ScoreTable, kind: Aggregate) -> Result<f64, ScoreError> {
    let scores = a.iter().map(RelevanceScore::score);
    match kind {
        Aggregate::Sum => Ok(scores.sum()),
        Aggregate::Min => scores.reduce(f64::min).ok_or(ScoreError::EmptyCollection),
        Aggregate::Max => scores.reduce(f64::max).ok_or(ScoreError::EmptyCollection),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedScore {
    pub rank: usize,
    pub score: RelevanceScore,
}

/// Sorts by descending score, ties by ascending subject id, and numbers the
/// result from 1. Optionally drops zero scores and the anonymous subject.
pub fn rank<I>(scores: I, drop_zero: bool, drop_anonymous: bool) -> Vec<RankedScore>
where
    I: IntoIterator<Item = RelevanceScore>,
{
    let anonymous = anonymous_identifier();
    let mut kept: Vec<RelevanceScore> = scores
        .into_iter()
        .filter(|s| !(drop_zero && s.score() == 0.0))
        .filter(|s| !(drop_anonymous && s.subject_id() == anonymous))
        .collect();
    kept.sort_by(|a, b| {
        b.score()
            .total_cmp(&a.score())
            .then_with(|| a.subject_id().cmp(&b.subject_id()))
    });
    kept.into_iter()
        .enumerate()
        .map(|(i, score)| RankedScore { rank: i + 1, score })
        .collect()
}

/// Largest `i` such that `i` entries are at least `i`.
pub fn h_index(citations: &[u64]) -> u64 {
    let mut sorted = citations.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|(i, &c)| c > *i as u64)
        .count() as u64
}
