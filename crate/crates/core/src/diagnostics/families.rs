//! Indexed kernel families `n ↦ f_n` used as test sequences.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::SymKernel;
use crate::space::MeasureSpace;

pub trait KernelFamily: Send + Sync {
    fn name(&self) -> String;

    fn order(&self) -> usize;

    /// The kernel at sequence index `n` (with its own space).
    fn kernel(&self, n: usize) -> Result<SymKernel>;
}

/// `n` atoms of mass `λ`, `f_n ≡ (nλ)^{−1/2}` (order 1). `E[F_n²] = 1` and
/// the excess fourth cumulant is `1/(nλ)`.
#[derive(Debug, Clone, Copy)]
pub struct UniformFamily {
    pub mass: f64,
}

impl KernelFamily for UniformFamily {
    fn name(&self) -> String {
        format!("uniform(mass={})", self.mass)
    }

    fn order(&self) -> usize {
        1
    }

    fn kernel(&self, n: usize) -> Result<SymKernel> {
        if n == 0 {
            return Err(Error::Validation("family index must be >= 1".into()));
        }
        let sp = Arc::new(MeasureSpace::uniform(n, self.mass)?);
        let c = (n as f64 * self.mass).sqrt().recip();
        SymKernel::from_fn(&sp, 1, |_| c)
    }
}

/// `n` blocks of `block` atoms, each block of total mass one;
/// `f_n = (2n)^{−1/2} Σ_b 1_{B_b} ⊗ 1_{B_b}` (order 2), so that `E[F_n²] = 1`.
#[derive(Debug, Clone, Copy)]
pub struct BlockTensorFamily {
    pub block: usize,
}

impl KernelFamily for BlockTensorFamily {
    fn name(&self) -> String {
        format!("block-tensor(block={})", self.block)
    }

    fn order(&self) -> usize {
        2
    }

    fn kernel(&self, n: usize) -> Result<SymKernel> {
        if n == 0 || self.block == 0 {
            return Err(Error::Validation(
                "family index and block size must be >= 1".into(),
            ));
        }
        let k = self.block;
        let sp = Arc::new(MeasureSpace::uniform(n * k, 1.0 / k as f64)?);
        let c = (2.0 * n as f64).sqrt().recip();
        SymKernel::from_fn(&sp, 2, |t| if t[0] / k == t[1] / k { c } else { 0.0 })
    }
}

/// The same kernel at every index.
#[derive(Debug, Clone)]
pub struct ConstantFamily {
    pub kernel: SymKernel,
}

impl KernelFamily for ConstantFamily {
    fn name(&self) -> String {
        "constant".into()
    }

    fn order(&self) -> usize {
        self.kernel.order()
    }

    fn kernel(&self, _n: usize) -> Result<SymKernel> {
        Ok(self.kernel.clone())
    }
}

/// Kernels listed index by index.
#[derive(Debug, Clone)]
pub struct ExplicitFamily {
    kernels: BTreeMap<usize, SymKernel>,
}

impl ExplicitFamily {
    pub fn new(kernels: BTreeMap<usize, SymKernel>) -> Result<Self> {
        let mut orders = kernels.values().map(SymKernel::order);
        if let Some(p) = orders.next() {
            if orders.any(|q| q != p) {
                return Err(Error::Validation(
                    "explicit family mixes kernel orders".into(),
                ));
            }
        }
        Ok(ExplicitFamily { kernels })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.kernels.keys().copied().collect()
    }
}

impl KernelFamily for ExplicitFamily {
    fn name(&self) -> String {
        "explicit".into()
    }

    fn order(&self) -> usize {
        self.kernels.values().next().map_or(0, SymKernel::order)
    }

    fn kernel(&self, n: usize) -> Result<SymKernel> {
        self.kernels
            .get(&n)
            .cloned()
            .ok_or_else(|| Error::Validation(format!("explicit family has no kernel at index {n}")))
    }
}

/// Named parametric builders: `uniform` (param = atom mass, default 1) and
/// `block-tensor` (param = atoms per block, default 2).
pub fn family_by_name(name: &str, param: Option<f64>) -> Result<Box<dyn KernelFamily>> {
    match name {
        "uniform" => {
            let mass = param.unwrap_or(1.0);
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::Validation(format!(
                    "uniform family mass must be > 0, got {mass}"
                )));
            }
            Ok(Box::new(UniformFamily { mass }))
        }
        "block-tensor" => {
            let k = param.unwrap_or(2.0);
            if !(k >= 1.0 && k.fract() == 0.0 && k <= 1e6) {
                return Err(Error::Validation(format!(
                    "block-tensor family needs an integer block size >= 1, got {k}"
                )));
            }
            Ok(Box::new(BlockTensorFamily { block: k as usize }))
        }
        other => Err(Error::Validation(format!(
            "unknown family `{other}` (expected `uniform` or `block-tensor`)"
        ))),
    }
}

/// Places kernels living on separate spaces onto their disjoint union, in
/// order, each vanishing outside its own block of atoms.
pub fn embed_disjoint(kernels: &[SymKernel]) -> Result<Vec<SymKernel>> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::Contract("nothing to embed".into()))?;
    let mut union = first.space().as_ref().clone();
    for k in &kernels[1..] {
        union = union.disjoint_union(k.space());
    }
    let union = Arc::new(union);
    let mut offset = 0;
    kernels
        .iter()
        .map(|k| {
            let e = k.embed(&union, offset)?;
            offset += k.n_atoms();
            Ok(e)
        })
        .collect()
}
