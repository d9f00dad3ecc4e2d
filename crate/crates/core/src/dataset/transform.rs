use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use super::{AuditEvent, Column, ColumnData, ColumnRole, FactorColumn, RawTable};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LEVELS: usize = 12;

/// Drops every predictor column whose missing count is at least
/// `ratio * nrows`. Id, response and excluded columns are never dropped.
pub fn drop_sparse_columns(table: &RawTable, ratio: f64) -> Result<RawTable> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidRatio(ratio));
    }
    if table.nrows() == 0 {
        return Err(Error::NoDataRows);
    }
    let n = table.nrows();
    let threshold = ratio * n as f64;
    let mut kept = Vec::new();
    let mut audit = table.audit().to_vec();
    for c in table.columns() {
        if c.role.is_predictor() {
            let missing = c.data.missing_count();
            if missing as f64 >= threshold {
                audit.push(AuditEvent::DroppedColumn {
                    name: c.name.clone(),
                    missing,
                    rows: n,
                });
                continue;
            }
        }
        kept.push(c.clone());
    }
    if !kept.iter().any(|c| c.role.is_predictor()) {
        return Err(Error::NoPredictors);
    }
    Ok(RawTable::from_parts(kept, n, audit))
}

enum IdKey<'a> {
    Numeric(f64),
    Text(&'a str),
}

fn id_keys<'a>(ids: &[&'a str], numeric: bool) -> Vec<IdKey<'a>> {
    ids.iter()
        .map(|s| {
            if numeric {
                IdKey::Numeric(s.parse().unwrap())
            } else {
                IdKey::Text(s)
            }
        })
        .collect()
}

fn cmp_keys(a: &IdKey, b: &IdKey) -> Ordering {
    match (a, b) {
        (IdKey::Numeric(x), IdKey::Numeric(y)) => x.total_cmp(y),
        (IdKey::Text(x), IdKey::Text(y)) => x.cmp(y),
        _ => unreachable!("mixed id key kinds"),
    }
}

fn id_strings(c: &Column) -> Vec<&str> {
    match &c.data {
        ColumnData::Text(v) => v.iter().map(|s| s.as_deref().unwrap_or("")).collect(),
        _ => unreachable!("id columns are stored as text"),
    }
}

/// Inner join on the shared id column. Rows are sorted ascending by id
/// (numerically when every id parses as a number). Columns present in both
/// tables must agree on the matched rows and are kept once.
pub fn merge_by_id(a: &RawTable, b: &RawTable) -> Result<RawTable> {
    let ida = a.id_column()?;
    let idb = b.id_column()?;
    if ida.name != idb.name {
        return Err(Error::IdMismatch {
            left: ida.name.clone(),
            right: idb.name.clone(),
        });
    }
    let va = id_strings(ida);
    let vb = id_strings(idb);
    let index_of = |ids: &[&str], table: &'static str| -> Result<HashMap<String, usize>> {
        let mut m = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if m.insert((*id).to_owned(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: (*id).to_owned(),
                    table,
                });
            }
        }
        Ok(m)
    };
    let ia = index_of(&va, "left")?;
    let ib = index_of(&vb, "right")?;

    let numeric = va.iter().chain(&vb).all(|s| s.parse::<f64>().is_ok_and(f64::is_finite));
    let mut matched: Vec<(usize, usize)> = va
        .iter()
        .enumerate()
        .filter_map(|(i, id)| ib.get(*id).map(|&j| (i, j)))
        .collect();
    let keys = id_keys(&va, numeric);
    matched.sort_by(|x, y| cmp_keys(&keys[x.0], &keys[y.0]));

    let sort_ids = |ids: Vec<&str>| -> Vec<String> {
        let k = id_keys(&ids, numeric);
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&x, &y| cmp_keys(&k[x], &k[y]));
        order.into_iter().map(|i| ids[i].to_owned()).collect()
    };
    let left_only = sort_ids(va.iter().copied().filter(|id| !ib.contains_key(*id)).collect());
    let right_only = sort_ids(vb.iter().copied().filter(|id| !ia.contains_key(*id)).collect());

    let rows_a: Vec<usize> = matched.iter().map(|m| m.0).collect();
    let rows_b: Vec<usize> = matched.iter().map(|m| m.1).collect();
    let ta = a.take_rows(&rows_a);
    let tb = b.take_rows(&rows_b);

    let mut columns: Vec<Column> = ta.columns().to_vec();
    for c in tb.columns() {
        if c.role == ColumnRole::Id {
            continue;
        }
        match columns.iter().find(|x| x.name == c.name) {
            Some(existing) => {
                if existing.role != c.role || existing.data != c.data {
                    return Err(Error::ColumnConflict(c.name.clone()));
                }
            }
            None => columns.push(c.clone()),
        }
    }

    let mut audit = a.audit().to_vec();
    audit.extend(b.audit().iter().cloned());
    if !left_only.is_empty() || !right_only.is_empty() {
        audit.push(AuditEvent::UnmatchedIds {
            left_only,
            right_only,
        });
    }
    Ok(RawTable::from_parts(columns, matched.len(), audit))
}

/// Removes every row with a missing cell in an id, response or predictor
/// column. Excluded columns do not count.
pub fn drop_incomplete_rows(table: &RawTable) -> Result<RawTable> {
    let considered: Vec<&Column> = table
        .columns()
        .iter()
        .filter(|c| c.role != ColumnRole::Exclude)
        .collect();
    let keep: Vec<usize> = (0..table.nrows())
        .filter(|&i| considered.iter().all(|c| !c.data.is_missing(i)))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyAfterNaOmission);
    }
    let dropped = table.nrows() - keep.len();
    let out = if dropped == 0 {
        table.clone()
    } else {
        table.take_rows(&keep)
    };
    Ok(out.with_event(AuditEvent::DroppedRows { count: dropped }))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorCoercion {
    /// Coerce exactly these numeric predictor columns.
    Explicit(Vec<String>),
    /// Coerce every numeric predictor whose observed values lie in {0, 1}.
    AutoBinary,
}

fn label_for(v: f64) -> String {
    // normalises -0.0
    (v + 0.0).to_string()
}

/// Converts numeric predictor columns to factors whose levels are the
/// distinct observed values rendered as labels.
pub fn coerce_to_factor(
    table: &RawTable,
    which: &FactorCoercion,
    max_levels: usize,
) -> Result<RawTable> {
    let targets: BTreeSet<&str> = match which {
        FactorCoercion::Explicit(names) => {
            for name in names {
                let c = table
                    .column(name)
                    .ok_or_else(|| Error::ColumnNotFound(name.clone()))?;
                if c.role != ColumnRole::Numeric {
                    return Err(Error::NotNumeric(name.clone()));
                }
            }
            names.iter().map(String::as_str).collect()
        }
        FactorCoercion::AutoBinary => table
            .columns()
            .iter()
            .filter(|c| c.role == ColumnRole::Numeric)
            .filter(|c| match &c.data {
                ColumnData::Numeric(v) => v.iter().flatten().all(|&x| x == 0.0 || x == 1.0),
                _ => false,
            })
            .map(|c| c.name.as_str())
            .collect(),
    };

    let mut audit = table.audit().to_vec();
    let mut columns = Vec::with_capacity(table.ncols());
    for c in table.columns() {
        if !targets.contains(c.name.as_str()) {
            columns.push(c.clone());
            continue;
        }
        let values = match &c.data {
            ColumnData::Numeric(v) => v,
            _ => unreachable!("targets are numeric"),
        };
        let labels: Vec<Option<String>> = values.iter().map(|v| v.map(label_for)).collect();
        let factor = FactorColumn::from_labels(&labels);
        if factor.levels().len() > max_levels {
            return Err(Error::TooManyLevels {
                column: c.name.clone(),
                levels: factor.levels().len(),
                max: max_levels,
            });
        }
        audit.push(AuditEvent::CoercedToFactor {
            column: c.name.clone(),
            levels: factor.levels().to_vec(),
        });
        columns.push(Column {
            name: c.name.clone(),
            role: ColumnRole::Factor,
            data: ColumnData::Factor(factor),
        });
    }
    Ok(RawTable::from_parts(columns, table.nrows(), audit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_with_missing(n: usize, missing: usize) -> Vec<Option<f64>> {
        (0..n)
            .map(|i| if i < missing { None } else { Some(i as f64) })
            .collect()
    }

    fn sparse_table() -> RawTable {
        let ids: Vec<usize> = (1..=100).collect();
        RawTable::new(vec![
            Column::id("ID", &ids),
            Column::numeric("one_missing", col_with_missing(100, 1)),
            Column::numeric("complete", col_with_missing(100, 0)),
            Column::response("y", col_with_missing(100, 5)),
        ])
        .unwrap()
    }

    #[test]
    fn sparse_threshold_uses_greater_or_equal() {
        let t = drop_sparse_columns(&sparse_table(), 0.01).unwrap();
        assert_eq!(t.column_names(), ["ID", "complete", "y"]);
        assert!(matches!(
            t.audit().last(),
            Some(AuditEvent::DroppedColumn { missing: 1, rows: 100, .. })
        ));
    }

    #[test]
    fn sparse_ratio_zero_removes_all_predictors() {
        assert!(matches!(
            drop_sparse_columns(&sparse_table(), 0.0),
            Err(Error::NoPredictors)
        ));
        assert!(matches!(
            drop_sparse_columns(&sparse_table(), 1.5),
            Err(Error::InvalidRatio(_))
        ));
    }

    fn keyed(ids: &[i64], col: &str) -> RawTable {
        RawTable::new(vec![
            Column::id("ID", ids),
            Column::numeric(col, ids.iter().map(|&i| Some(i as f64 * 10.0)).collect()),
        ])
        .unwrap()
    }

    #[test]
    fn merge_is_inner_join_sorted_by_id() {
        let a = keyed(&[3, 1, 2], "a");
        let b = keyed(&[4, 2, 3], "b");
        let m = merge_by_id(&a, &b).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(
            m.column("ID").unwrap().data,
            ColumnData::Text(vec![Some("2".into()), Some("3".into())])
        );
        assert_eq!(
            m.column("b").unwrap().data,
            ColumnData::Numeric(vec![Some(20.0), Some(30.0)])
        );
        assert!(matches!(
            m.audit().last(),
            Some(AuditEvent::UnmatchedIds { left_only, right_only })
                if left_only == &["1"] && right_only == &["4"]
        ));
    }

    #[test]
    fn merge_sorts_ids_numerically() {
        let m = merge_by_id(&keyed(&[10, 9, 100], "a"), &keyed(&[100, 10, 9], "b")).unwrap();
        assert_eq!(
            m.column("ID").unwrap().data,
            ColumnData::Text(vec![Some("9".into()), Some("10".into()), Some("100".into())])
        );
    }

    #[test]
    fn merge_with_itself_is_column_union() {
        let a = keyed(&[1, 2, 3], "a");
        let m = merge_by_id(&a, &a).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.column_names(), ["ID", "a"]);
    }

    #[test]
    fn merge_rejects_duplicate_ids() {
        let a = keyed(&[7, 7, 1], "a");
        let b = keyed(&[7, 1], "b");
        assert!(matches!(merge_by_id(&a, &b), Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn incomplete_rows_are_removed() {
        let t = RawTable::new(vec![
            Column::id("ID", &[1, 2, 3, 4, 5]),
            Column::numeric("x", vec![Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)]),
            Column::exclude("note", vec![None; 5]),
        ])
        .unwrap();
        let out = drop_incomplete_rows(&t).unwrap();
        assert_eq!(out.nrows(), 4);
        assert_eq!(out.audit().last(), Some(&AuditEvent::DroppedRows { count: 1 }));

        let complete = out.clone().without_audit();
        let again = drop_incomplete_rows(&complete).unwrap();
        assert_eq!(again.nrows(), 4);

        let all_missing = RawTable::new(vec![
            Column::id("ID", &[1, 2]),
            Column::numeric("x", vec![None, None]),
        ])
        .unwrap();
        assert!(matches!(
            drop_incomplete_rows(&all_missing),
            Err(Error::EmptyAfterNaOmission)
        ));
    }

    #[test]
    fn row_filter_refreshes_factor_levels() {
        let t = RawTable::new(vec![
            Column::id("ID", &[1, 2, 3]),
            Column::factor("f", &[Some("a"), Some("b"), Some("c")]),
            Column::numeric("x", vec![Some(1.0), None, Some(3.0)]),
        ])
        .unwrap();
        let out = drop_incomplete_rows(&t).unwrap();
        match &out.column("f").unwrap().data {
            ColumnData::Factor(f) => assert_eq!(f.levels(), ["a", "c"]),
            _ => unreachable!(),
        }
    }

    fn numeric_table(values: Vec<Option<f64>>) -> RawTable {
        let ids: Vec<usize> = (0..values.len()).collect();
        RawTable::new(vec![Column::id("ID", &ids), Column::numeric("v", values)]).unwrap()
    }

    #[test]
    fn explicit_coercion_of_binary_column() {
        let t = numeric_table(vec![Some(0.0), Some(1.0), Some(1.0), None]);
        let out = coerce_to_factor(&t, &FactorCoercion::Explicit(vec!["v".into()]), 12).unwrap();
        match &out.column("v").unwrap().data {
            ColumnData::Factor(f) => {
                assert_eq!(f.levels(), ["0", "1"]);
                assert_eq!(f.codes(), [Some(0), Some(1), Some(1), None]);
            }
            _ => panic!("not coerced"),
        }
    }

    #[test]
    fn auto_coercion_skips_non_binary() {
        let t = numeric_table(vec![Some(0.0), Some(1.0), Some(2.0)]);
        let out = coerce_to_factor(&t, &FactorCoercion::AutoBinary, 12).unwrap();
        assert_eq!(out.column("v").unwrap().role, ColumnRole::Numeric);
        let bin = numeric_table(vec![Some(0.0), Some(1.0), Some(-0.0)]);
        let out = coerce_to_factor(&bin, &FactorCoercion::AutoBinary, 12).unwrap();
        assert_eq!(out.column("v").unwrap().role, ColumnRole::Factor);
    }

    #[test]
    fn coercion_guards() {
        let t = numeric_table((0..20).map(|i| Some(i as f64)).collect());
        assert!(matches!(
            coerce_to_factor(&t, &FactorCoercion::Explicit(vec!["v".into()]), 12),
            Err(Error::TooManyLevels { levels: 20, max: 12, .. })
        ));
        assert!(matches!(
            coerce_to_factor(&t, &FactorCoercion::Explicit(vec!["w".into()]), 12),
            Err(Error::ColumnNotFound(_))
        ));
        assert!(matches!(
            coerce_to_factor(&t, &FactorCoercion::Explicit(vec!["ID".into()]), 12),
            Err(Error::NotNumeric(_))
        ));
    }
}
