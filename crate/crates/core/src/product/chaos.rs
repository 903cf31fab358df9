use std::collections::BTreeMap;
use std::sync::Arc;

use crate::combinatorics::factorial_f64;
use crate::error::{Error, Result};
use crate::kernels::{same_space, SymKernel};
use crate::space::MeasureSpace;

/// Finite chaotic decomposition `F = E[F] + Σ_k I_k(f_k)`.
///
/// The order-0 term is stored as a scalar kernel; absent orders are zero.
#[derive(Debug, Clone)]
pub struct ChaosVector {
    space: Arc<MeasureSpace>,
    terms: BTreeMap<usize, SymKernel>,
}

impl ChaosVector {
    pub fn zero(space: &Arc<MeasureSpace>) -> Self {
        ChaosVector {
            space: Arc::clone(space),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<MeasureSpace>, c: f64) -> Self {
        let mut v = Self::zero(space);
        v.terms.insert(0, SymKernel::scalar(space, c));
        v
    }

    /// `I_p(f)`.
    pub fn single(kernel: SymKernel) -> Self {
        let mut v = Self::zero(kernel.space());
        v.terms.insert(kernel.order(), kernel);
        v
    }

    /// Sum of `I_{p_i}(f_i)`; kernels of equal order are added.
    pub fn from_kernels(
        space: &Arc<MeasureSpace>,
        kernels: impl IntoIterator<Item = SymKernel>,
    ) -> Result<Self> {
        let mut v = Self::zero(space);
        for k in kernels {
            v.add_scaled_term(1.0, &k)?;
        }
        Ok(v)
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub(crate) fn check_space(&self, other: &ChaosVector) -> Result<()> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::Contract(
                "chaos vectors live on different spaces".into(),
            ));
        }
        Ok(())
    }

    /// `self += c · I_k(kernel)`.
    pub fn add_scaled_term(&mut self, c: f64, kernel: &SymKernel) -> Result<()> {
        if !same_space(&self.space, kernel.space()) {
            return Err(Error::Contract("kernel lives on a different space".into()));
        }
        match self.terms.get_mut(&kernel.order()) {
            Some(existing) => existing.add_scaled(c, kernel)?,
            None => {
                self.terms.insert(kernel.order(), kernel.scaled(c));
            }
        }
        Ok(())
    }

    pub fn term(&self, order: usize) -> Option<&SymKernel> {
        self.terms.get(&order)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&usize, &SymKernel)> {
        self.terms.iter()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }

    pub fn max_order(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    /// `E[F]`, the order-0 term.
    pub fn mean(&self) -> f64 {
        self.terms.get(&0).map_or(0.0, SymKernel::scalar_value)
    }

    /// `E[F G] = Σ_k k! ⟨f_k, g_k⟩` by the isometry.
    pub fn inner(&self, other: &ChaosVector) -> Result<f64> {
        self.check_space(other)?;
        let mut acc = 0.0;
        for (k, f) in &self.terms {
            if let Some(g) = other.terms.get(k) {
                acc += factorial_f64(*k) * f.inner(g)?;
            }
        }
        Ok(acc)
    }

    /// `E[F²]`.
    pub fn second_moment(&self) -> f64 {
        self.inner(self).expect("same vector")
    }

    /// `Var F = Σ_{k≥1} k! ‖f_k‖²`.
    pub fn variance(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| **k > 0)
            .map(|(k, f)| factorial_f64(*k) * f.norm_sq())
            .sum()
    }

    pub fn scaled(&self, c: f64) -> ChaosVector {
        ChaosVector {
            space: Arc::clone(&self.space),
            terms: self.terms.iter().map(|(k, f)| (*k, f.scaled(c))).collect(),
        }
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, c: f64, other: &ChaosVector) -> Result<ChaosVector> {
        self.check_space(other)?;
        let mut out = self.clone();
        for f in other.terms.values() {
            out.add_scaled_term(c, f)?;
        }
        Ok(out)
    }

    /// Ornstein–Uhlenbeck generator: `L I_k(f) = −k I_k(f)`.
    pub fn generator(&self) -> ChaosVector {
        ChaosVector {
            space: Arc::clone(&self.space),
            terms: self
                .terms
                .iter()
                .map(|(k, f)| (*k, f.scaled(-(*k as f64))))
                .collect(),
        }
    }

    /// Largest `|entry|` over all kernels.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .values()
            .map(SymKernel::max_abs)
            .fold(0.0, f64::max)
    }
}
