use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::MeasureSpace;

use super::multiset::{decode_position, dense_len, dense_position, MultisetIndex};
use super::{same_space, SymKernel};

/// A (not necessarily symmetric) kernel `f ∈ L²(μ^p)`, stored densely over
/// all atom tuples `(z_1, …, z_p) ∈ [n]^p` in row-major order.
#[derive(Debug, Clone)]
pub struct Kernel {
    space: Arc<MeasureSpace>,
    order: usize,
    values: Vec<f64>,
}

impl Kernel {
    pub fn zeros(space: &Arc<MeasureSpace>, order: usize) -> Result<Self> {
        let len = dense_len(space.n_atoms(), order)?;
        Ok(Kernel {
            space: Arc::clone(space),
            order,
            values: vec![0.0; len],
        })
    }

    pub fn from_fn(
        space: &Arc<MeasureSpace>,
        order: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let mut k = Self::zeros(space, order)?;
        let n = space.n_atoms();
        let mut buf = vec![0usize; order];
        for (pos, v) in k.values.iter_mut().enumerate() {
            decode_position(n, pos, &mut buf);
            *v = f(&buf);
        }
        k.check_finite()?;
        Ok(k)
    }

    pub fn from_values(space: &Arc<MeasureSpace>, order: usize, values: Vec<f64>) -> Result<Self> {
        let len = dense_len(space.n_atoms(), order)?;
        if values.len() != len {
            return Err(Error::Validation(format!(
                "order-{order} kernel on {} atoms needs {len} values, got {}",
                space.n_atoms(),
                values.len()
            )));
        }
        let k = Kernel {
            space: Arc::clone(space),
            order,
            values,
        };
        k.check_finite()?;
        Ok(k)
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "kernel entry at position {pos} is not finite"
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_atoms(&self) -> usize {
        self.space.n_atoms()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        debug_assert_eq!(tuple.len(), self.order);
        self.values[dense_position(self.n_atoms(), tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], value: f64) {
        let pos = dense_position(self.n_atoms(), tuple);
        self.values[pos] = value;
    }

    /// Product of masses along the tuple at each dense position.
    pub(crate) fn weights(space: &MeasureSpace, order: usize) -> Result<Vec<f64>> {
        let n = space.n_atoms();
        let mut w = vec![1.0; dense_len(n, order)?];
        let mut buf = vec![0usize; order];
        for (pos, slot) in w.iter_mut().enumerate() {
            decode_position(n, pos, &mut buf);
            *slot = space.tuple_weight(&buf);
        }
        Ok(w)
    }

    /// `⟨f, g⟩_{L²(μ^p)}`.
    pub fn inner(&self, other: &Kernel) -> Result<f64> {
        if self.order != other.order || !same_space(&self.space, &other.space) {
            return Err(Error::Contract(format!(
                "inner product needs kernels of equal order on the same space, got orders {} and {}",
                self.order, other.order
            )));
        }
        let w = Self::weights(&self.space, self.order)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same kernel").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// Canonical symmetrization `f̃ = (1/p!) Σ_π f∘π`.
    ///
    /// Every tuple with occupation `α` appears equally often in the
    /// permutation average, so `f̃(α)` is the mean of `f` over those tuples.
    pub fn symmetrize(&self) -> SymKernel {
        let index =
            MultisetIndex::shared(self.n_atoms(), self.order).expect("dense kernel already fits");
        let mut acc = vec![0.0; index.len()];
        for (pos, v) in self.values.iter().enumerate() {
            acc[index.rank_of_position(pos)] += v;
        }
        for (rank, a) in acc.iter_mut().enumerate() {
            *a /= index.multiplicity(rank);
        }
        SymKernel::from_parts(Arc::clone(&self.space), index, acc)
    }

    /// Tensor product `(f ⊗ g)(t, s) = f(t) g(s)`.
    pub fn tensor(&self, other: &Kernel) -> Result<Kernel> {
        super::contract_dense(self, other, 0, 0)
    }
}
