//! Products of multiple integrals: the closed-form `h` kernels, the
//! classical (ungrouped) product formula, chaos vectors, and the word
//! enumeration that reproduces the `h` kernels from first principles.

mod chaos;
pub mod words;

pub use chaos::ChaosVector;
pub use words::{word_oracle_h, Characteristic, WordOracleOutput};

use crate::combinatorics::{binomial, factorial};
use crate::error::{Error, Result};
use crate::kernels::{contract_dense, Kernel, SymKernel};

/// `p! q! / ((p−s)! (q−s)! (2s−m)! (m−s)!)`, the weight of the symmetrized
/// contraction `f ⋆_s^{m−s} g` inside `h_{p+q−m}`.
pub fn h_coefficient(p: usize, q: usize, m: usize, s: usize) -> u128 {
    debug_assert!(2 * s >= m && s <= m && s <= p.min(q));
    factorial(p) * factorial(q)
        / (factorial(p - s) * factorial(q - s) * factorial(2 * s - m) * factorial(m - s))
}

fn check_orders(f: &SymKernel, g: &SymKernel) -> Result<()> {
    if f.order() == 0 || g.order() == 0 {
        return Err(Error::Contract(
            "h kernels are defined for orders p, q >= 1".into(),
        ));
    }
    Ok(())
}

fn h_kernel_dense(f: &Kernel, g: &Kernel, m: usize) -> Result<SymKernel> {
    let (p, q) = (f.order(), g.order());
    let mut h = SymKernel::zeros(f.space(), p + q - m)?;
    for s in m.div_ceil(2)..=m.min(p).min(q) {
        let c = h_coefficient(p, q, m, s) as f64;
        let term = contract_dense(f, g, s, m - s)?.symmetrize();
        h.add_scaled(c, &term)?;
    }
    Ok(h)
}

/// The single kernel `h_{p+q−m}` of the product `I_p(f) I_q(g)`.
pub fn h_kernel(f: &SymKernel, g: &SymKernel, m: usize) -> Result<SymKernel> {
    check_orders(f, g)?;
    if m > 2 * f.order().min(g.order()) {
        return Err(Error::Contract(format!(
            "m = {m} exceeds 2 min(p, q) = {}",
            2 * f.order().min(g.order())
        )));
    }
    h_kernel_dense(&f.expand(), &g.expand(), m)
}

/// All kernels `h_{p+q−m}`, `m = 0 ..= 2 min(p, q)`, indexed by `m`.
/// `h_{p+q}` is the symmetrized tensor product; the last entry is a scalar
/// exactly when `p = q`.
pub fn h_kernels(f: &SymKernel, g: &SymKernel) -> Result<Vec<SymKernel>> {
    check_orders(f, g)?;
    let (fd, gd) = (f.expand(), g.expand());
    (0..=2 * f.order().min(g.order()))
        .map(|m| h_kernel_dense(&fd, &gd, m))
        .collect()
}

/// One term of the ungrouped classical product formula.
#[derive(Debug, Clone)]
pub struct ClassicalTerm {
    /// Number of shared arguments.
    pub r: usize,
    /// Number of shared arguments that are integrated out.
    pub l: usize,
    /// `r! C(p, r) C(q, r) C(r, l)`.
    pub coefficient: u128,
    /// Symmetrized contraction `(f ⋆_r^l g)~`.
    pub kernel: SymKernel,
}

/// Every `(r, l)` term of the classical product formula, `0 <= l <= r <= min(p, q)`.
pub fn classical_product_terms(f: &SymKernel, g: &SymKernel) -> Result<Vec<ClassicalTerm>> {
    check_orders(f, g)?;
    let (p, q) = (f.order(), g.order());
    let (fd, gd) = (f.expand(), g.expand());
    let mut out = Vec::new();
    for r in 0..=p.min(q) {
        for l in 0..=r {
            out.push(ClassicalTerm {
                r,
                l,
                coefficient: factorial(r) * binomial(p, r) * binomial(q, r) * binomial(r, l),
                kernel: contract_dense(&fd, &gd, r, l)?.symmetrize(),
            });
        }
    }
    Ok(out)
}

/// Regroups classical terms by `m = r + l`; index `m` of the result holds the
/// kernel of order `p + q − m`.
pub fn regroup_classical(terms: &[ClassicalTerm], p: usize, q: usize) -> Result<Vec<SymKernel>> {
    let space = terms
        .first()
        .map(|t| t.kernel.space().clone())
        .ok_or_else(|| Error::Contract("no classical terms to regroup".into()))?;
    let mut out = (0..=2 * p.min(q))
        .map(|m| SymKernel::zeros(&space, p + q - m))
        .collect::<Result<Vec<_>>>()?;
    for t in terms {
        out[t.r + t.l].add_scaled(t.coefficient as f64, &t.kernel)?;
    }
    Ok(out)
}

/// Product `F G` of two finite chaos expansions, by bilinearity of the
/// product formula. Constant factors scale the other operand.
pub fn product_chaos(a: &ChaosVector, b: &ChaosVector) -> Result<ChaosVector> {
    a.check_space(b)?;
    let mut out = ChaosVector::zero(a.space());
    for (&p, f) in a.terms() {
        for (&q, g) in b.terms() {
            if p == 0 || q == 0 {
                let (c, k) = if p == 0 {
                    (f.scalar_value(), g)
                } else {
                    (g.scalar_value(), f)
                };
                out.add_scaled_term(c, k)?;
                continue;
            }
            for h in h_kernels(f, g)? {
                out.add_scaled_term(1.0, &h)?;
            }
        }
    }
    Ok(out)
}

/// `max |a − b| / max(1, max |b|)`: entrywise deviation measured against
/// the scale of the reference kernel, insensitive to cancellation in
/// individual entries.
pub fn max_scaled_deviation(a: &SymKernel, b: &SymKernel) -> f64 {
    assert_eq!(a.values().len(), b.values().len());
    let d = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    d / b.max_abs().max(1.0)
}

/// Largest entrywise relative deviation `|a − b| / max(|a|, |b|)` (zero when
/// both entries vanish).
pub fn max_rel_deviation(a: &SymKernel, b: &SymKernel) -> f64 {
    assert_eq!(a.values().len(), b.values().len());
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let d = (x - y).abs();
            let s = x.abs().max(y.abs());
            if d == 0.0 {
                0.0
            } else {
                d / s
            }
        })
        .fold(0.0, f64::max)
}
