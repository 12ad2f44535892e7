//! Word level differences between two token sequences.
//!
//! The longest common subsequence (LCS) is computed with the bit-parallel
//! row recurrence, 64 columns per machine word. Lengths alone need a single
//! row; recovering an alignment keeps a checkpoint every `sqrt(n)` rows and
//! recomputes the rows between checkpoints on demand, so memory stays near
//! `O(sqrt(n) * m / 64)` words even for very long revisions.

use std::collections::HashMap;
use std::hash::Hash;

/// Splits on runs of Unicode whitespace. Punctuation stays attached.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Result of comparing an older and a newer token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordDiff {
    /// Tokens of the newer sequence not covered by the alignment.
    pub inserted: usize,
    /// Tokens of the older sequence not covered by the alignment.
    pub deleted: usize,
    /// Positions (into the newer sequence) of the inserted tokens, ascending.
    pub added: Vec<usize>,
}

impl WordDiff {
    pub fn lcs_len(&self, newer_len: usize) -> usize {
        newer_len - self.inserted
    }

    pub fn added_tokens<'a, T>(&self, newer: &'a [T]) -> Vec<&'a T> {
        self.added.iter().map(|&j| &newer[j]).collect()
    }
}

fn common_affixes<T: Eq>(a: &[T], b: &[T]) -> (usize, usize) {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    (prefix, suffix)
}

/// Match masks for `b`: for every distinct symbol, the set of positions in
/// `b` holding it.
struct Masks {
    words: usize,
    by_symbol: HashMap<u32, Vec<u64>>,
    zero: Vec<u64>,
}

impl Masks {
    fn new(b: &[u32]) -> Self {
        let words = b.len().div_ceil(64).max(1);
        let mut by_symbol: HashMap<u32, Vec<u64>> = HashMap::new();
        for (j, &sym) in b.iter().enumerate() {
            by_symbol.entry(sym).or_insert_with(|| vec![0; words])[j / 64] |= 1 << (j % 64);
        }
        Masks {
            words,
            by_symbol,
            zero: vec![0; words],
        }
    }

    fn get(&self, sym: u32) -> &[u64] {
        self.by_symbol.get(&sym).map_or(&self.zero, Vec::as_slice)
    }
}

/// One step of the row recurrence: `V' = (V + (V & M)) | (V & !M)`, with
/// the addition carried across words. Zero bits of `V` count the LCS.
fn advance(row: &mut [u64], mask: &[u64]) {
    let mut carry = 0u64;
    for (v, &m) in row.iter_mut().zip(mask) {
        let u = *v & m;
        let (s1, c1) = v.overflowing_add(u);
        let (s2, c2) = s1.overflowing_add(carry);
        carry = (c1 || c2) as u64;
        *v = s2 | (*v & !m);
    }
}

fn zeros_below(row: &[u64], len: usize) -> usize {
    let full = len / 64;
    let mut ones: usize = row[..full].iter().map(|w| w.count_ones() as usize).sum();
    if len % 64 != 0 {
        ones += (row[full] & ((1u64 << (len % 64)) - 1)).count_ones() as usize;
    }
    len - ones
}

/// LCS length of two symbol sequences.
pub(crate) fn lcs_len_symbols(a: &[u32], b: &[u32]) -> usize {
    let (p, s) = common_affixes(a, b);
    let a = &a[p..a.len() - s];
    let b = &b[p..b.len() - s];
    if a.is_empty() || b.is_empty() {
        return p + s;
    }
    // Bits run over the shorter side.
    let (a, b) = if b.len() <= a.len() { (a, b) } else { (b, a) };
    let masks = Masks::new(b);
    let mut row = vec![u64::MAX; masks.words];
    for &sym in a {
        advance(&mut row, masks.get(sym));
    }
    p + s + zeros_below(&row, b.len())
}

/// Suffix LCS oracle for the alignment walk: `lsuf(i, j)` is the LCS length
/// of `a[i..]` and `b[j..]`.
///
/// Rows are built over the reversed sequences, so row `k` holds the LCS of
/// the last `k` symbols of `a` against every suffix of `b`.
struct SuffixLcs {
    a_rev: Vec<u32>,
    masks: Masks,
    m: usize,
    stride: usize,
    checkpoints: Vec<Vec<u64>>,
    /// Rows `block * stride ..= block * stride + stride` recomputed from a
    /// checkpoint.
    block: Option<(usize, Vec<Vec<u64>>)>,
}

impl SuffixLcs {
    fn new(a: &[u32], b: &[u32]) -> Self {
        let a_rev: Vec<u32> = a.iter().rev().copied().collect();
        let b_rev: Vec<u32> = b.iter().rev().copied().collect();
        let masks = Masks::new(&b_rev);
        let n = a.len();
        let stride = ((n + 1) as f64).sqrt().ceil().max(1.0) as usize;
        let mut checkpoints = Vec::with_capacity(n / stride + 1);
        let mut row = vec![u64::MAX; masks.words];
        for k in 0..=n {
            if k % stride == 0 {
                checkpoints.push(row.clone());
            }
            if k < n {
                advance(&mut row, masks.get(a_rev[k]));
            }
        }
        SuffixLcs {
            a_rev,
            masks,
            m: b.len(),
            stride,
            checkpoints,
            block: None,
        }
    }

    fn row(&mut self, k: usize) -> &[u64] {
        // Blocks include their end row, so rows k and k - 1 always share one.
        let block = k.saturating_sub(1) / self.stride;
        if self.block.as_ref().is_none_or(|(b, _)| *b != block) {
            let mut rows = Vec::with_capacity(self.stride + 1);
            let mut row = self.checkpoints[block].clone();
            let start = block * self.stride;
            let end = (start + self.stride).min(self.a_rev.len());
            rows.push(row.clone());
            for &sym in &self.a_rev[start..end] {
                advance(&mut row, self.masks.get(sym));
                rows.push(row.clone());
            }
            self.block = Some((block, rows));
        }
        let (_, rows) = self.block.as_ref().expect("filled above");
        &rows[k - block * self.stride]
    }

    fn lsuf(&mut self, i: usize, j: usize) -> usize {
        let n = self.a_rev.len();
        let len = self.m - j;
        zeros_below(self.row(n - i), len)
    }
}

/// Aligns `older` and `newer` and reports the unmatched tokens.
///
/// The alignment is pinned: the common prefix and suffix are matched first;
/// in the middle, among all maximum alignments, the one whose sequence of
/// matched newer positions is lexicographically smallest is chosen, ties
/// broken by the smaller older positions.
pub fn word_diff<T: Eq + Hash>(older: &[T], newer: &[T]) -> WordDiff {
    let mut ids: HashMap<&T, u32> = HashMap::new();
    let mut intern = |t| {
        let next = ids.len() as u32;
        *ids.entry(t).or_insert(next)
    };
    let a: Vec<u32> = older.iter().map(&mut intern).collect();
    let b: Vec<u32> = newer.iter().map(&mut intern).collect();
    word_diff_symbols(&a, &b)
}

pub(crate) fn word_diff_symbols(a: &[u32], b: &[u32]) -> WordDiff {
    let (p, s) = common_affixes(a, b);
    let mid_a = &a[p..a.len() - s];
    let mid_b = &b[p..b.len() - s];
    let mut added = Vec::new();
    let mut matched = p + s;
    if mid_a.is_empty() {
        added.extend(p..p + mid_b.len());
    } else if !mid_b.is_empty() {
        let mut oracle = SuffixLcs::new(mid_a, mid_b);
        let (mut i, mut j) = (0, 0);
        while i < mid_a.len() && j < mid_b.len() {
            if mid_a[i] == mid_b[j] {
                matched += 1;
                i += 1;
                j += 1;
            } else if oracle.lsuf(i + 1, j) >= oracle.lsuf(i, j + 1) {
                i += 1;
            } else {
                added.push(p + j);
                j += 1;
            }
        }
        added.extend(p + j..p + mid_b.len());
    }
    WordDiff {
        inserted: b.len() - matched,
        deleted: a.len() - matched,
        added,
    }
}

/// `max(inserted, deleted)` between two sequences.
pub fn edit_distance<T: Eq + Hash>(older: &[T], newer: &[T]) -> usize {
    let mut ids: HashMap<&T, u32> = HashMap::new();
    let mut intern = |t| {
        let next = ids.len() as u32;
        *ids.entry(t).or_insert(next)
    };
    let a: Vec<u32> = older.iter().map(&mut intern).collect();
    let b: Vec<u32> = newer.iter().map(&mut intern).collect();
    distance_symbols(&a, &b)
}

pub(crate) fn distance_symbols(a: &[u32], b: &[u32]) -> usize {
    let l = lcs_len_symbols(a, b);
    (a.len() - l).max(b.len() - l)
}

/// `(d(prev, judge) - d(cur, judge)) / d(prev, cur)` clamped to `[-1, 1]`;
/// `None` when `prev` and `cur` do not differ.
pub fn edit_quality<T: Eq + Hash>(prev: &[T], cur: &[T], judge: &[T]) -> Option<f64> {
    quality_from_distances(
        edit_distance(prev, judge),
        edit_distance(cur, judge),
        edit_distance(prev, cur),
    )
}

pub(crate) fn quality_from_distances(prev_judge: usize, cur_judge: usize, prev_cur: usize) -> Option<f64> {
    if prev_cur == 0 {
        return None;
    }
    let q = (prev_judge as f64 - cur_judge as f64) / prev_cur as f64;
    Some(q.clamp(-1.0, 1.0))
}

/// How many of `added` (with multiplicity) also occur in `future`.
pub fn live_tokens<T: Eq + Hash>(added: &[T], future: &[T]) -> usize {
    let mut available: HashMap<&T, usize> = HashMap::new();
    for t in future {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        tokenize(s)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks("the cat  sat"), vec!["the", "cat", "sat"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("a\nb\tc"), vec!["a", "b", "c"]);
        assert_eq!(toks("\u{3000}x\u{a0}y, z."), vec!["x", "y,", "z."]);
    }

    #[test]
    fn diff_examples() {
        let d = word_diff(&toks("the cat sat"), &toks("the dog sat"));
        assert_eq!((d.inserted, d.deleted), (1, 1));
        assert_eq!(d.added_tokens(&toks("the dog sat")), vec![&"dog"]);

        let x = toks("a b c");
        let d = word_diff(&x, &x);
        assert_eq!((d.inserted, d.deleted, d.added.len()), (0, 0, 0));

        let d = word_diff(&[], &toks("a b"));
        assert_eq!((d.inserted, d.deleted, d.added.clone()), (2, 0, vec![0, 1]));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance(&[], &toks("a b c d")), 4);
        assert_eq!(edit_distance(&toks("a b c"), &toks("a b c")), 0);
        assert_eq!(edit_distance(&toks("a b c"), &toks("a")), 2);
    }

    #[test]
    fn quality_examples() {
        let empty: Vec<&str> = vec![];
        assert_eq!(edit_quality(&empty, &toks("a b c d"), &toks("a b c d")), Some(1.0));
        assert_eq!(edit_quality(&empty, &toks("a b c d"), &toks("a b")), Some(0.0));
        assert_eq!(edit_quality(&toks("x"), &toks("x"), &toks("y")), None);
    }

    #[test]
    fn live_examples() {
        assert_eq!(live_tokens(&["x", "y"], &["x", "z"]), 1);
        assert_eq!(live_tokens::<&str>(&[], &["x"]), 0);
        assert_eq!(live_tokens(&["a", "a"], &["a", "b"]), 1);
    }

    #[test]
    fn swapped_pair_keeps_first_newer_token() {
        // Both one-token alignments are maximal; the pinned rule matches the
        // earliest newer position.
        let d = word_diff(&["a", "b"], &["b", "a"]);
        assert_eq!(d.added, vec![1]);
    }

    fn naive_lcs(a: &[u32], b: &[u32]) -> usize {
        let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in (0..a.len()).rev() {
            for j in (0..b.len()).rev() {
                dp[i][j] = if a[i] == b[j] {
                    dp[i + 1][j + 1] + 1
                } else {
                    dp[i + 1][j].max(dp[i][j + 1])
                };
            }
        }
        dp[0][0]
    }

    #[test]
    fn bit_parallel_matches_table_across_word_boundaries() {
        let mut state = 12345u64;
        let mut next = |k: u64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % k) as u32
        };
        for case in 0..60 {
            let n = (next(200) + 1) as usize;
            let m = (next(200) + 1) as usize;
            let alphabet = 2 + (case % 5) as u64;
            let a: Vec<u32> = (0..n).map(|_| next(alphabet)).collect();
            let b: Vec<u32> = (0..m).map(|_| next(alphabet)).collect();
            let expected = naive_lcs(&a, &b);
            assert_eq!(lcs_len_symbols(&a, &b), expected);
            let d = word_diff_symbols(&a, &b);
            assert_eq!(d.lcs_len(m), expected);
            assert_eq!(d.deleted, n - expected);
            // Unmatched newer positions leave a common subsequence behind.
            let kept: Vec<u32> = (0..m).filter(|j| !d.added.contains(j)).map(|j| b[j]).collect();
            assert_eq!(naive_lcs(&a, &kept), kept.len());
        }
    }

    #[test]
    fn long_middle_uses_checkpoints() {
        let a: Vec<u32> = (0..3000).map(|i| (i * 7 % 13) as u32).collect();
        let b: Vec<u32> = (0..2500).map(|i| (i * 5 % 11) as u32).collect();
        let d = word_diff_symbols(&a, &b);
        assert_eq!(d.lcs_len(b.len()), naive_lcs(&a, &b));
    }
}
