use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::MeasureSpace;

use super::multiset::MultisetIndex;
use super::{same_space, Kernel};

/// Relative tolerance for the symmetry check on construction from dense data.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric kernel `f ∈ L²_s(μ^p)`, one value per multiset of `p` atoms.
#[derive(Debug, Clone)]
pub struct SymKernel {
    space: Arc<MeasureSpace>,
    index: Arc<MultisetIndex>,
    values: Vec<f64>,
}

impl SymKernel {
    pub(crate) fn from_parts(
        space: Arc<MeasureSpace>,
        index: Arc<MultisetIndex>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(index.len(), values.len());
        SymKernel {
            space,
            index,
            values,
        }
    }

    pub fn zeros(space: &Arc<MeasureSpace>, order: usize) -> Result<Self> {
        let index = MultisetIndex::shared(space.n_atoms(), order)?;
        let values = vec![0.0; index.len()];
        Ok(Self::from_parts(Arc::clone(space), index, values))
    }

    /// Order-0 kernel, i.e. a constant.
    pub fn scalar(space: &Arc<MeasureSpace>, c: f64) -> Self {
        let mut k = Self::zeros(space, 0).expect("order 0 always fits");
        k.values[0] = c;
        k
    }

    /// Builds a symmetric kernel from its values on sorted atom tuples.
    pub fn from_fn(
        space: &Arc<MeasureSpace>,
        order: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let index = MultisetIndex::shared(space.n_atoms(), order)?;
        let values: Vec<f64> = (0..index.len()).map(|r| f(index.tuple(r))).collect();
        Self::from_values(space, order, values)
    }

    /// Values listed in multiset-rank order.
    pub fn from_values(space: &Arc<MeasureSpace>, order: usize, values: Vec<f64>) -> Result<Self> {
        let index = MultisetIndex::shared(space.n_atoms(), order)?;
        if values.len() != index.len() {
            return Err(Error::Validation(format!(
                "symmetric order-{order} kernel on {} atoms needs {} values, got {}",
                space.n_atoms(),
                index.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("kernel has non-finite entries".into()));
        }
        Ok(Self::from_parts(Arc::clone(space), index, values))
    }

    /// Compresses a dense kernel, rejecting it unless it is symmetric up to
    /// [`SYMMETRY_TOL`] relative to its largest entry.
    pub fn from_dense(k: &Kernel) -> Result<Self> {
        let index = MultisetIndex::shared(k.n_atoms(), k.order())?;
        let mut values = vec![f64::NAN; index.len()];
        let scale = k.max_abs();
        for (pos, &v) in k.values().iter().enumerate() {
            let r = index.rank_of_position(pos);
            if values[r].is_nan() {
                values[r] = v;
            } else if (values[r] - v).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Validation(format!(
                    "kernel is not symmetric: entries of multiset {:?} differ by {:e}",
                    index.tuple(r),
                    (values[r] - v).abs()
                )));
            }
        }
        Ok(Self::from_parts(Arc::clone(k.space()), index, values))
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.index.order()
    }

    pub fn n_atoms(&self) -> usize {
        self.space.n_atoms()
    }

    pub fn index(&self) -> &MultisetIndex {
        &self.index
    }

    /// Values in multiset-rank order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at an atom tuple in any argument order.
    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.index.rank_of(tuple)]
    }

    /// Scalar value of an order-0 kernel.
    pub fn scalar_value(&self) -> f64 {
        debug_assert_eq!(self.order(), 0);
        self.values[0]
    }

    /// `(sorted tuple, value)` pairs over all multisets.
    pub fn multisets(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        (0..self.values.len()).map(move |r| (self.index.tuple(r), self.values[r]))
    }

    /// Full tensor over `[n]^p`.
    pub fn expand(&self) -> Kernel {
        let values = (0..self.index.dense_len())
            .map(|pos| self.values[self.index.rank_of_position(pos)])
            .collect();
        Kernel::from_values(&self.space, self.order(), values).expect("consistent sizes")
    }

    fn check_compatible(&self, other: &SymKernel) -> Result<()> {
        if self.order() != other.order() || !same_space(&self.space, &other.space) {
            return Err(Error::Contract(format!(
                "kernels of orders {} and {} are not on the same space and order",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    /// `⟨f, g⟩_{L²(μ^p)} = Σ_α (p!/α!) f(α) g(α) μ^α`.
    pub fn inner(&self, other: &SymKernel) -> Result<f64> {
        self.check_compatible(other)?;
        Ok((0..self.values.len())
            .map(|r| {
                self.index.multiplicity(r)
                    * self.space.tuple_weight(self.index.tuple(r))
                    * self.values[r]
                    * other.values[r]
            })
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("same kernel")
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> SymKernel {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &SymKernel) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Section `f(z, ·)`, a symmetric kernel of order `p − 1`.
    pub fn section(&self, atom: usize) -> Result<SymKernel> {
        let p = self.order();
        if p == 0 {
            return Err(Error::Contract("section of an order-0 kernel".into()));
        }
        if atom >= self.n_atoms() {
            return Err(Error::Contract(format!("atom {atom} out of range")));
        }
        let mut buf = vec![0usize; p];
        SymKernel::from_fn(&self.space, p - 1, |rest| {
            buf[0] = atom;
            buf[1..].copy_from_slice(rest);
            self.get(&buf)
        })
    }

    /// Same kernel on a larger space, zero on atoms outside
    /// `offset..offset + n_atoms`.
    pub fn embed(&self, target: &Arc<MeasureSpace>, offset: usize) -> Result<SymKernel> {
        let n = self.n_atoms();
        if offset + n > target.n_atoms()
            || (0..n).any(|i| target.mass(offset + i) != self.space.mass(i))
        {
            return Err(Error::Contract(
                "embedding target does not contain the kernel's space at the given offset".into(),
            ));
        }
        let mut local = vec![0usize; self.order()];
        SymKernel::from_fn(target, self.order(), |tuple| {
            for (slot, &z) in local.iter_mut().zip(tuple) {
                if z < offset || z >= offset + n {
                    return 0.0;
                }
                *slot = z - offset;
            }
            self.get(&local)
        })
    }
}
