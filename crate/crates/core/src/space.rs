//! Finite atomic measure spaces and configuration-document I/O.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// A finite atomic measure space `(Z, μ)`: `n_atoms` points with strictly
/// positive masses. Every integral over `Z^p` is a finite weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    masses: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Validation(
                "a measure space needs at least one atom".into(),
            ));
        }
        for (i, &m) in masses.iter().enumerate() {
            if !m.is_finite() || m <= 0.0 {
                return Err(Error::Validation(format!(
                    "mass of atom {i} must be finite and strictly positive, got {m}"
                )));
            }
        }
        let space = MeasureSpace { masses };
        if !space.total_mass().is_finite() {
            return Err(Error::Validation("total mass overflows".into()));
        }
        Ok(space)
    }

    /// `n` atoms of identical mass.
    pub fn uniform(n_atoms: usize, mass: f64) -> Result<Self> {
        Self::new(vec![mass; n_atoms])
    }

    pub fn n_atoms(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, atom: usize) -> f64 {
        self.masses[atom]
    }

    /// `μ(Z)`.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `∏ μ_{z_i}` for an atom tuple.
    pub fn tuple_weight(&self, tuple: &[usize]) -> f64 {
        tuple.iter().map(|&z| self.masses[z]).product()
    }

    /// Disjoint union: atoms of `self` first, then those of `other`.
    pub fn disjoint_union(&self, other: &MeasureSpace) -> MeasureSpace {
        let mut masses = self.masses.clone();
        masses.extend_from_slice(&other.masses);
        MeasureSpace { masses }
    }

    /// Serialize to the configuration-document schema.
    pub fn to_document(&self) -> String {
        let mut obj = Map::new();
        obj.insert("atoms".into(), Value::from(self.n_atoms() as u64));
        obj.insert(
            "masses".into(),
            Value::Array(self.masses.iter().map(|&m| num17(m)).collect()),
        );
        serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable")
    }

    pub fn from_value(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::parse("<root>", "expected a JSON object"))?;
        let atoms = obj
            .get("atoms")
            .ok_or_else(|| Error::parse("atoms", "missing"))?
            .as_u64()
            .ok_or_else(|| Error::parse("atoms", "expected a non-negative integer"))?;
        let masses = obj
            .get("masses")
            .ok_or_else(|| Error::parse("masses", "missing"))?
            .as_array()
            .ok_or_else(|| Error::parse("masses", "expected an array of numbers"))?;
        if atoms == 0 {
            return Err(Error::Validation("atoms must be at least 1".into()));
        }
        if masses.len() as u64 != atoms {
            return Err(Error::parse(
                "masses",
                format!("expected {atoms} entries, found {}", masses.len()),
            ));
        }
        let masses = masses
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64()
                    .ok_or_else(|| Error::parse(format!("masses[{i}]"), "expected a number"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(masses)
    }
}

/// Parse a measure space from a configuration document.
pub fn load_space(document: &str) -> Result<MeasureSpace> {
    let doc = parse_document(document)?;
    MeasureSpace::from_value(&doc)
}

pub fn parse_document(document: &str) -> Result<Value> {
    serde_json::from_str(document).map_err(|e| Error::parse("<document>", e.to_string()))
}

pub fn read_document(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

pub fn load_space_file(path: &Path) -> Result<MeasureSpace> {
    MeasureSpace::from_value(&read_document(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Decimal rendering with 17 significant digits; exact round trip for `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON number with 17 significant digits (`null` for non-finite values).
pub fn num17(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let n: serde_json::Number = serde_json::from_str(&fmt17(x)).expect("valid JSON number");
    Value::Number(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_uniform_unit_masses() {
        let s = load_space(r#"{"atoms": 3, "masses": [1, 1, 1]}"#).unwrap();
        assert_eq!(s.n_atoms(), 3);
        assert_eq!(s.masses(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn loads_single_atom() {
        let s = load_space(r#"{"atoms": 1, "masses": [0.5]}"#).unwrap();
        assert_eq!(s.masses(), &[0.5]);
        assert_eq!(s.total_mass(), 0.5);
    }

    #[test]
    fn rejects_negative_mass() {
        let err = load_space(r#"{"atoms": 2, "masses": [1, -1]}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn rejects_zero_mass() {
        assert!(matches!(
            load_space(r#"{"atoms": 2, "masses": [1, 0]}"#),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn parse_errors_name_the_field() {
        match load_space(r#"{"atoms": 2, "masses": [1]}"#) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "masses"),
            other => panic!("{other:?}"),
        }
        match load_space(r#"{"masses": [1]}"#) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "atoms"),
            other => panic!("{other:?}"),
        }
        match load_space(r#"{"atoms": 2, "masses": [1, "x"]}"#) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "masses[1]"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_space("{atoms"), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn document_round_trip_is_bit_exact(
            masses in proptest::collection::vec(1e-12f64..1e6, 1..8)
        ) {
            let s = MeasureSpace::new(masses.clone()).unwrap();
            let back = load_space(&s.to_document()).unwrap();
            for (a, b) in back.masses().iter().zip(&masses) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            let direct: f64 = masses.iter().sum();
            prop_assert_eq!(s.total_mass(), direct);
        }
    }
}
