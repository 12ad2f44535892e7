//! Laws of the score algebra, checked on random tables.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use wikimpact_core::scores::{aggregate, join_op, rank, scalar_op, Aggregate, Op, ScoreError, ScoreTable};
use wikimpact_core::RelevanceScore;

pub const TOLERANCE: f64 = 1e-9;

pub type Table = BTreeMap<i64, f64>;

pub fn table_from(map: &Table) -> ScoreTable {
    map.iter()
        .map(|(&id, &s)| RelevanceScore::new(id, format!("s{id}"), s).unwrap())
        .collect()
}

pub fn tables() -> impl Strategy<Value = Table> {
    prop::collection::btree_map(0i64..30, -1e6f64..1e6, 0..20)
}

/// Same subjects, scores equal up to a relative tolerance.
pub fn close(a: &ScoreTable, b: &ScoreTable) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(x, y)| {
            x.subject_id() == y.subject_id() && (x.score() - y.score()).abs() <= TOLERANCE * (1.0 + x.score().abs())
        })
}

fn ok<T>(r: Result<T, ScoreError>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

pub fn check_commutative(a: &Table, b: &Table) -> Result<(), TestCaseError> {
    let (ta, tb) = (table_from(a), table_from(b));
    for op in [Op::Add, Op::Mul] {
        prop_assert!(close(&ok(join_op(&ta, &tb, op))?, &ok(join_op(&tb, &ta, op))?));
    }
    Ok(())
}

pub fn check_associative(a: &Table, b: &Table, c: &Table) -> Result<(), TestCaseError> {
    // Keep products in a range where relative error stays small.
    let shrink = |m: &Table| -> Table { m.iter().map(|(&k, &v)| (k, v / 1e4)).collect() };
    let (ta, tb, tc) = (table_from(&shrink(a)), table_from(&shrink(b)), table_from(&shrink(c)));
    for op in [Op::Add, Op::Mul] {
        let left = ok(join_op(&ok(join_op(&ta, &tb, op))?, &tc, op))?;
        let right = ok(join_op(&ta, &ok(join_op(&tb, &tc, op))?, op))?;
        prop_assert!(close(&left, &right));
    }
    Ok(())
}

pub fn check_unmatched_omitted(a: &Table, b: &Table) -> Result<(), TestCaseError> {
    let out = ok(join_op(&table_from(a), &table_from(b), Op::Sub))?;
    let expected: Vec<i64> = a.keys().filter(|k| b.contains_key(k)).copied().collect();
    let got: Vec<i64> = out.iter().map(|s| s.subject_id()).collect();
    prop_assert_eq!(got, expected);
    for s in out.iter() {
        prop_assert_eq!(s.score(), a[&s.subject_id()] - b[&s.subject_id()]);
    }
    Ok(())
}

pub fn check_scalar_identity(a: &Table) -> Result<(), TestCaseError> {
    let t = table_from(a);
    prop_assert_eq!(&ok(scalar_op(&t, 1.0, Op::Mul))?, &t);
    prop_assert_eq!(&ok(scalar_op(&t, 0.0, Op::Add))?, &t);
    prop_assert_eq!(&ok(scalar_op(&t, 1.0, Op::Div))?, &t);
    let zeros: ScoreTable = t.iter().map(|s| RelevanceScore::new(s.subject_id(), "z", 0.0).unwrap()).collect();
    let sums: Vec<f64> = ok(join_op(&t, &zeros, Op::Add))?.iter().map(|s| s.score()).collect();
    prop_assert_eq!(sums, t.iter().map(|s| s.score()).collect::<Vec<_>>());
    Ok(())
}

pub fn check_argmax_scaling(a: &Table, alpha: f64) -> Result<(), TestCaseError> {
    let t = table_from(a);
    let scaled = ok(scalar_op(&t, alpha, Op::Mul))?;
    let top = |t: &ScoreTable| rank(t.clone().into_vec(), false, false).first().map(|r| r.score.subject_id());
    prop_assert_eq!(top(&t), top(&scaled));
    if !t.is_empty() {
        let max = ok(aggregate(&t, Aggregate::Max))?;
        let scaled_max = ok(aggregate(&scaled, Aggregate::Max))?;
        prop_assert!((scaled_max - max * alpha).abs() <= TOLERANCE * (1.0 + (max * alpha).abs()));
    }
    Ok(())
}

pub fn check_division_by_zero(a: &Table, zero_at: i64) -> Result<(), TestCaseError> {
    let t = table_from(a);
    let mut divisor: Table = a.keys().map(|&k| (k, 2.0)).collect();
    divisor.insert(zero_at, 0.0);
    let result = join_op(&t, &table_from(&divisor), Op::Div);
    if a.contains_key(&zero_at) {
        prop_assert_eq!(result, Err(ScoreError::DivisionByZero(zero_at)));
    } else {
        prop_assert!(result.is_ok());
    }
    prop_assert_eq!(scalar_op(&t, 0.0, Op::Div), Err(ScoreError::ZeroScalar));
    Ok(())
}

/// Every law on one random case.
pub fn check_all(a: &Table, b: &Table, c: &Table, alpha: f64, zero_at: i64) -> Result<(), TestCaseError> {
    check_commutative(a, b)?;
    check_associative(a, b, c)?;
    check_unmatched_omitted(a, b)?;
    check_scalar_identity(a)?;
    check_argmax_scaling(a, alpha)?;
    check_division_by_zero(a, zero_at)
}
