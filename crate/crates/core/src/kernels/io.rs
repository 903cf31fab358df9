//! Kernel documents.
//!
//! A kernel is a JSON object with an integer `order` and exactly one of
//!
//! * `dense`: nested arrays of depth `order` (a bare number for order 0),
//! * `sparse`: `{"i,j,…": value}` or `[[[i, j, …], value], …]`; missing tuples are zero,
//! * `multiset`: like `sparse`, but each entry sets every permutation of its tuple.
//!
//! Dense and sparse kernels must be symmetric unless `"symmetrize": true`
//! asks for canonical symmetrization.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::space::{num17, MeasureSpace};

use super::{Kernel, MultisetIndex, SymKernel};

pub fn kernel_from_value(space: &Arc<MeasureSpace>, v: &Value, field: &str) -> Result<SymKernel> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::parse(field, "expected a kernel object"))?;
    let order = obj
        .get("order")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse(format!("{field}.order"), "missing or not an integer"))?
        as usize;
    let symmetrize = obj
        .get("symmetrize")
        .map(|s| {
            s.as_bool()
                .ok_or_else(|| Error::parse(format!("{field}.symmetrize"), "expected a boolean"))
        })
        .transpose()?
        .unwrap_or(false);
    let n = space.n_atoms();

    let present: Vec<&str> = ["dense", "sparse", "multiset"]
        .into_iter()
        .filter(|k| obj.contains_key(*k))
        .collect();
    if present.len() != 1 {
        return Err(Error::parse(
            field,
            "exactly one of `dense`, `sparse`, `multiset` is required",
        ));
    }
    let dense = match present[0] {
        "dense" => {
            let mut values = Vec::new();
            flatten_dense(
                &obj["dense"],
                order,
                n,
                &format!("{field}.dense"),
                &mut values,
            )?;
            Kernel::from_values(space, order, values)?
        }
        "sparse" => {
            let mut k = Kernel::zeros(space, order)?;
            for (tuple, value) in
                sparse_entries(&obj["sparse"], order, n, &format!("{field}.sparse"))?
            {
                k.set(&tuple, value);
            }
            k
        }
        _ => {
            let idx = MultisetIndex::shared(n, order)?;
            let mut values: Vec<Option<f64>> = vec![None; idx.len()];
            let f = format!("{field}.multiset");
            for (tuple, value) in sparse_entries(&obj["multiset"], order, n, &f)? {
                let r = idx.rank_of(&tuple);
                if values[r].is_some_and(|old| old != value) {
                    return Err(Error::parse(
                        &f,
                        format!("conflicting values for multiset {tuple:?}"),
                    ));
                }
                values[r] = Some(value);
            }
            let values = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
            return SymKernel::from_values(space, order, values);
        }
    };
    if symmetrize {
        Ok(dense.symmetrize())
    } else {
        SymKernel::from_dense(&dense)
    }
}

fn flatten_dense(v: &Value, depth: usize, n: usize, field: &str, out: &mut Vec<f64>) -> Result<()> {
    if depth == 0 {
        let x = v
            .as_f64()
            .ok_or_else(|| Error::parse(field, "expected a number"))?;
        out.push(x);
        return Ok(());
    }
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(field, "expected a nested array"))?;
    if arr.len() != n {
        return Err(Error::parse(
            field,
            format!("expected {n} entries per level, found {}", arr.len()),
        ));
    }
    for (i, item) in arr.iter().enumerate() {
        flatten_dense(item, depth - 1, n, &format!("{field}[{i}]"), out)?;
    }
    Ok(())
}

fn parse_tuple(key: &str, order: usize, n: usize, field: &str) -> Result<Vec<usize>> {
    let tuple: Vec<usize> = if key.trim().is_empty() {
        Vec::new()
    } else {
        key.split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(field, format!("bad tuple key `{key}`")))?
    };
    check_tuple(&tuple, order, n, field)?;
    Ok(tuple)
}

fn check_tuple(tuple: &[usize], order: usize, n: usize, field: &str) -> Result<()> {
    if tuple.len() != order {
        return Err(Error::parse(
            field,
            format!(
                "tuple {tuple:?} has length {}, kernel order is {order}",
                tuple.len()
            ),
        ));
    }
    if let Some(z) = tuple.iter().find(|&&z| z >= n) {
        return Err(Error::parse(
            field,
            format!("atom {z} out of range (n = {n})"),
        ));
    }
    Ok(())
}

fn sparse_entries(
    v: &Value,
    order: usize,
    n: usize,
    field: &str,
) -> Result<Vec<(Vec<usize>, f64)>> {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(key, val)| {
                let tuple = parse_tuple(key, order, n, field)?;
                let x = val.as_f64().ok_or_else(|| {
                    Error::parse(format!("{field}[\"{key}\"]"), "expected a number")
                })?;
                Ok((tuple, x))
            })
            .collect(),
        Value::Array(entries) => entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let f = format!("{field}[{i}]");
                let pair = e
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::parse(&f, "expected [[atoms...], value]"))?;
                let tuple = pair[0]
                    .as_array()
                    .ok_or_else(|| Error::parse(&f, "expected an atom array"))?
                    .iter()
                    .map(|z| z.as_u64().map(|z| z as usize))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::parse(&f, "atoms must be non-negative integers"))?;
                check_tuple(&tuple, order, n, &f)?;
                let x = pair[1]
                    .as_f64()
                    .ok_or_else(|| Error::parse(&f, "expected a number"))?;
                Ok((tuple, x))
            })
            .collect(),
        _ => Err(Error::parse(
            field,
            "expected an object or an array of entries",
        )),
    }
}

/// Multiset form of a symmetric kernel; zero entries are omitted.
pub fn kernel_to_value(k: &SymKernel) -> Value {
    let mut entries = Map::new();
    for (tuple, v) in k.multisets() {
        if v != 0.0 {
            let key = tuple
                .iter()
                .map(|z| z.to_string())
                .collect::<Vec<_>>()
                .join(",");
            entries.insert(key, num17(v));
        }
    }
    let mut obj = Map::new();
    obj.insert("order".into(), Value::from(k.order() as u64));
    obj.insert("multiset".into(), Value::Object(entries));
    Value::Object(obj)
}

/// Reads the `kernels` array of a kernel document.
pub fn load_kernels(space: &Arc<MeasureSpace>, doc: &Value) -> Result<Vec<SymKernel>> {
    let arr = doc
        .get("kernels")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("kernels", "missing or not an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| kernel_from_value(space, v, &format!("kernels[{i}]")))
        .collect()
}

/// Reads the `coordinates` array (one kernel list per coordinate) of a
/// multivariate kernel document.
pub fn load_coordinates(space: &Arc<MeasureSpace>, doc: &Value) -> Result<Vec<Vec<SymKernel>>> {
    let arr = doc
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("coordinates", "missing or not an array"))?;
    arr.iter()
        .enumerate()
        .map(|(c, list)| {
            list.as_array()
                .ok_or_else(|| Error::parse(format!("coordinates[{c}]"), "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, v)| kernel_from_value(space, v, &format!("coordinates[{c}][{i}]")))
                .collect()
        })
        .collect()
}

/// `{order → kernel}` view, handy for chaos-vector documents.
pub fn kernels_by_order(kernels: &[SymKernel]) -> BTreeMap<usize, &SymKernel> {
    kernels.iter().map(|k| (k.order(), k)).collect()
}
