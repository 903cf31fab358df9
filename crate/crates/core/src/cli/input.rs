//! Reading run inputs: index ranges, kernel families, functionals.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::diagnostics::{family_by_name, KernelFamily};
use crate::error::{Error, Result};
use crate::kernels::io::kernel_from_value;
use crate::kernels::SymKernel;
use crate::path::{Envelope, PathFunctional};
use crate::product::ChaosVector;
use crate::space::{load_space_file, read_document, MeasureSpace};

/// Inclusive range `A..B` (also `A..=B` or a single index `A`).
pub fn parse_indices(s: &str) -> Result<Vec<usize>> {
    let bad = || {
        Error::parse(
            "indices",
            format!("expected `A..B` with 1 <= A <= B, got `{s}`"),
        )
    };
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// `p,q`.
pub fn parse_orders(s: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::parse(
            "orders",
            format!("expected `p,q` with p, q >= 1, got `{s}`"),
        )
    };
    let (p, q) = s.split_once(',').ok_or_else(bad)?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    let q: usize = q.trim().parse().map_err(|_| bad())?;
    if p == 0 || q == 0 {
        return Err(bad());
    }
    Ok((p, q))
}

pub fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::parse("target", e.to_string()))?;
    matrix_from_value(&v, "target")
}

fn matrix_from_value(v: &Value, field: &str) -> Result<Vec<Vec<f64>>> {
    v.as_array()
        .ok_or_else(|| Error::parse(field, "expected an array of rows"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::parse(field, "expected an array of rows"))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::parse(field, "non-numeric entry"))
                })
                .collect()
        })
        .collect()
}

/// Kernel with entries uniform on `[-1, 1)` drawn from `rng`.
pub fn random_kernel(
    space: &Arc<MeasureSpace>,
    order: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SymKernel> {
    SymKernel::from_fn(space, order, |_| rng.random_range(-1.0..1.0))
}

pub fn random_pair(
    space: &Arc<MeasureSpace>,
    p: usize,
    q: usize,
    seed: u64,
) -> Result<(SymKernel, SymKernel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((
        random_kernel(space, p, &mut rng)?,
        random_kernel(space, q, &mut rng)?,
    ))
}

pub fn optional_space(path: Option<&Path>) -> Result<Option<Arc<MeasureSpace>>> {
    path.map(|p| load_space_file(p).map(Arc::new)).transpose()
}

fn entry_space(
    entry: &Value,
    default: Option<&Arc<MeasureSpace>>,
    field: &str,
) -> Result<Arc<MeasureSpace>> {
    match entry.get("space") {
        Some(s) => Ok(Arc::new(MeasureSpace::from_value(s)?)),
        None => default
            .cloned()
            .ok_or_else(|| Error::parse(format!("{field}.space"), "missing, and no --space given")),
    }
}

fn sequence_entries(doc: &Value) -> Result<&Vec<Value>> {
    doc.get("sequence")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("sequence", "missing or not an array"))
}

fn entry_index(entry: &Value, field: &str) -> Result<usize> {
    entry
        .get("index")
        .and_then(Value::as_u64)
        .filter(|&n| n >= 1)
        .map(|n| n as usize)
        .ok_or_else(|| Error::parse(format!("{field}.index"), "missing or not an integer >= 1"))
}

/// `(index, kernel)` pairs of an explicit family document, restricted to `indices`.
pub fn explicit_sequence(
    path: &Path,
    default_space: Option<&Arc<MeasureSpace>>,
    indices: &[usize],
) -> Result<Vec<(usize, SymKernel)>> {
    let doc = read_document(path)?;
    let mut out = Vec::new();
    for (i, e) in sequence_entries(&doc)?.iter().enumerate() {
        let field = format!("sequence[{i}]");
        let n = entry_index(e, &field)?;
        if !indices.contains(&n) {
            continue;
        }
        let sp = entry_space(e, default_space, &field)?;
        let k = e
            .get("kernel")
            .ok_or_else(|| Error::parse(format!("{field}.kernel"), "missing"))?;
        out.push((n, kernel_from_value(&sp, k, &format!("{field}.kernel"))?));
    }
    if out.is_empty() {
        return Err(Error::Validation(
            "no kernels at the requested indices".into(),
        ));
    }
    Ok(out)
}

/// Explicit multivariate document: per-index coordinate lists and optional target.
type Coordinates = Vec<(usize, Vec<SymKernel>)>;

pub fn explicit_coordinates(
    path: &Path,
    default_space: Option<&Arc<MeasureSpace>>,
    indices: &[usize],
) -> Result<(Coordinates, Option<Vec<Vec<f64>>>)> {
    let doc = read_document(path)?;
    let mut out = Vec::new();
    for (i, e) in sequence_entries(&doc)?.iter().enumerate() {
        let field = format!("sequence[{i}]");
        let n = entry_index(e, &field)?;
        if !indices.contains(&n) {
            continue;
        }
        let sp = entry_space(e, default_space, &field)?;
        let coords = e
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse(format!("{field}.coordinates"), "missing or not an array"))?
            .iter()
            .enumerate()
            .map(|(c, k)| kernel_from_value(&sp, k, &format!("{field}.coordinates[{c}]")))
            .collect::<Result<Vec<_>>>()?;
        out.push((n, coords));
    }
    if out.is_empty() {
        return Err(Error::Validation(
            "no kernels at the requested indices".into(),
        ));
    }
    let target = doc
        .get("target")
        .map(|t| matrix_from_value(t, "target"))
        .transpose()?;
    Ok((out, target))
}

pub fn named_family(name: &str, param: Option<f64>) -> Result<Box<dyn KernelFamily>> {
    family_by_name(name, param)
}

/// A functional read from a `functional` document entry, with a label.
pub struct FunctionalSpec {
    pub functional: PathFunctional,
    pub declared_order: usize,
    pub label: String,
}

/// Reads `doc.functional`, one of
/// `{"kind": "chaos", "kernels": [...]}` (sum of integrals),
/// `{"kind": "product", "kernels": [f, g]}` (`I_p(f) I_q(g)`) or
/// `{"kind": "polynomial", "terms": [{"coefficient": c, "powers": [a_1, ...]}]}`
/// (`Σ c ∏ N_i^{a_i}`).
pub fn functional_from_document(space: &Arc<MeasureSpace>, doc: &Value) -> Result<FunctionalSpec> {
    let f = doc
        .get("functional")
        .ok_or_else(|| Error::parse("functional", "missing"))?;
    let kind = f
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse("functional.kind", "missing or not a string"))?;
    let kernels = || -> Result<Vec<SymKernel>> {
        f.get("kernels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("functional.kernels", "missing or not an array"))?
            .iter()
            .enumerate()
            .map(|(i, k)| kernel_from_value(space, k, &format!("functional.kernels[{i}]")))
            .collect()
    };
    match kind {
        "chaos" => {
            let ks = kernels()?;
            let v = ChaosVector::from_kernels(space, ks)?;
            let order = v.max_order().unwrap_or(0);
            Ok(FunctionalSpec {
                functional: PathFunctional::chaos(&v),
                declared_order: order,
                label: "chaos".into(),
            })
        }
        "product" => {
            let ks = kernels()?;
            if ks.len() != 2 {
                return Err(Error::parse(
                    "functional.kernels",
                    "a product takes exactly two kernels",
                ));
            }
            let func =
                PathFunctional::integral(&ks[0]).product(&PathFunctional::integral(&ks[1]))?;
            Ok(FunctionalSpec {
                functional: func,
                declared_order: ks[0].order() + ks[1].order(),
                label: "product".into(),
            })
        }
        "polynomial" => polynomial(space.n_atoms(), f),
        other => Err(Error::parse(
            "functional.kind",
            format!("unknown kind `{other}` (expected chaos, product or polynomial)"),
        )),
    }
}

fn polynomial(n: usize, f: &Value) -> Result<FunctionalSpec> {
    let terms = f
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("functional.terms", "missing or not an array"))?;
    let mut parsed: Vec<(f64, Vec<u32>)> = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let field = format!("functional.terms[{i}]");
        let c = t
            .get("coefficient")
            .and_then(Value::as_f64)
            .filter(|c| c.is_finite())
            .ok_or_else(|| Error::parse(format!("{field}.coefficient"), "missing or not finite"))?;
        let powers: Vec<u32> = t
            .get("powers")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse(format!("{field}.powers"), "missing or not an array"))?
            .iter()
            .map(|a| a.as_u64().map(|a| a as u32))
            .collect::<Option<_>>()
            .ok_or_else(|| {
                Error::parse(format!("{field}.powers"), "expected nonnegative integers")
            })?;
        if powers.len() != n {
            return Err(Error::parse(
                format!("{field}.powers"),
                format!("expected {n} exponents, got {}", powers.len()),
            ));
        }
        parsed.push((c, powers));
    }
    let degree = parsed
        .iter()
        .map(|(_, a)| a.iter().sum::<u32>())
        .max()
        .unwrap_or(0);
    // |∏ N_i^{a_i}| <= |N|^{deg} <= (|N| + 1)^{degree}.
    let env = Envelope {
        scale: parsed.iter().map(|(c, _)| c.abs()).sum(),
        shift: 1.0,
        degree,
    };
    let functional = PathFunctional::from_fn(n, env, Some(degree as usize), move |counts| {
        parsed
            .iter()
            .map(|(c, a)| {
                c * counts
                    .iter()
                    .zip(a)
                    .map(|(&x, &k)| (x as f64).powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    });
    Ok(FunctionalSpec {
        functional,
        declared_order: degree as usize,
        label: "polynomial".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_ranges() {
        assert_eq!(parse_indices("1..50").unwrap().len(), 50);
        assert_eq!(parse_indices("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_indices("7").unwrap(), vec![7]);
        assert!(parse_indices("0..3").is_err());
        assert!(parse_indices("5..2").is_err());
        assert!(parse_indices("a..b").is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(parse_orders("2,3").unwrap(), (2, 3));
        assert!(parse_orders("0,1").is_err());
        assert!(parse_orders("2").is_err());
    }
}
