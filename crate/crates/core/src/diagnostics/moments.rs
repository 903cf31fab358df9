//! Fourth moments, `h` norms, contraction norms and the carré du champ of
//! a single multiple integral `F = I_p(f)`.

use std::collections::BTreeMap;

use crate::combinatorics::{binomial, factorial_f64};
use crate::error::{Error, Result};
use crate::kernels::{contract_equal, SymKernel};
use crate::product::{h_kernel, product_chaos, ChaosVector};

fn require_order(f: &SymKernel) -> Result<usize> {
    match f.order() {
        0 => Err(Error::Contract(
            "diagnostics need a kernel of order p >= 1".into(),
        )),
        p => Ok(p),
    }
}

/// `E[F²] = p! ‖f‖²`.
pub fn second_moment(f: &SymKernel) -> f64 {
    factorial_f64(f.order()) * f.norm_sq()
}

/// The kernels `h_{2p−m}` of `F²` for `m = 1 ..= 2p−1`, keyed by `m`.
pub fn h_sequence(f: &SymKernel) -> Result<BTreeMap<usize, SymKernel>> {
    let p = require_order(f)?;
    (1..2 * p).map(|m| Ok((m, h_kernel(f, f, m)?))).collect()
}

/// `m ↦ ‖h_{2p−m}‖`, `m = 1 ..= 2p−1`.
pub fn h_norm_sequence(f: &SymKernel) -> Result<BTreeMap<usize, f64>> {
    Ok(h_sequence(f)?
        .into_iter()
        .map(|(m, h)| (m, h.norm()))
        .collect())
}

/// `r ↦ ‖f ⊗_r f‖` (unsymmetrized), `r = 1 ..= p−1`.
pub fn contraction_norms(f: &SymKernel) -> Result<BTreeMap<usize, f64>> {
    let p = require_order(f)?;
    (1..p)
        .map(|r| Ok((r, contract_equal(f, f, r)?.norm())))
        .collect()
}

/// Ingredients of the fourth-moment identity, kept so callers can reuse
/// the norms without recomputing contractions.
#[derive(Debug, Clone, PartialEq)]
pub struct FourthMomentParts {
    pub order: usize,
    pub second_moment: f64,
    /// `m ↦ ‖h_{2p−m}‖`.
    pub h_norms: BTreeMap<usize, f64>,
    /// `r ↦ ‖f ⊗_r f‖`.
    pub contraction_norms: BTreeMap<usize, f64>,
}

impl FourthMomentParts {
    pub fn compute(f: &SymKernel) -> Result<Self> {
        Ok(FourthMomentParts {
            order: require_order(f)?,
            second_moment: second_moment(f),
            h_norms: h_norm_sequence(f)?,
            contraction_norms: contraction_norms(f)?,
        })
    }

    /// `E[F⁴] = (p!‖f‖²)² + 2(p!)²‖f‖⁴ + Σ_m (2p−m)! ‖h_{2p−m}‖²
    ///          + (p!)² Σ_r C(p,r)² ‖f ⊗_r f‖²`.
    pub fn fourth_moment(&self) -> f64 {
        let e2 = self.second_moment;
        e2 * e2 + 2.0 * e2 * e2 + self.middle_sum()
    }

    /// `E[F⁴] − 3 E[F²]²`: the middle `h` terms plus the contraction terms.
    pub fn excess(&self) -> f64 {
        self.middle_sum()
    }

    fn middle_sum(&self) -> f64 {
        let p = self.order;
        let pf = factorial_f64(p);
        let h: f64 = self
            .h_norms
            .iter()
            .map(|(&m, &n)| factorial_f64(2 * p - m) * n * n)
            .sum();
        let c: f64 = self
            .contraction_norms
            .iter()
            .map(|(&r, &n)| (binomial(p, r) as f64).powi(2) * n * n)
            .sum();
        h + pf * pf * c
    }

    /// `Var Γ(F,F) = ¼ Σ_m m² (2p−m)! ‖h_{2p−m}‖²`.
    pub fn var_gamma(&self) -> f64 {
        let p = self.order;
        0.25 * self
            .h_norms
            .iter()
            .map(|(&m, &n)| (m * m) as f64 * factorial_f64(2 * p - m) * n * n)
            .sum::<f64>()
    }
}

/// `E[I_p(f)⁴]` from the fourth-moment identity.
pub fn fourth_moment(f: &SymKernel) -> Result<f64> {
    Ok(FourthMomentParts::compute(f)?.fourth_moment())
}

/// `Var Γ(F,F)` for `F = I_p(f)` from the `h` norms.
pub fn var_gamma(f: &SymKernel) -> Result<f64> {
    Ok(FourthMomentParts::compute(f)?.var_gamma())
}

/// `Γ(F,G) = ½ (L(FG) − F LG − G LF)`, every product taken with the
/// product formula.
pub fn gamma(f: &ChaosVector, g: &ChaosVector) -> Result<ChaosVector> {
    let fg = product_chaos(f, g)?;
    let f_lg = product_chaos(f, &g.generator())?;
    let g_lf = product_chaos(g, &f.generator())?;
    fg.generator()
        .add_scaled(-1.0, &f_lg)?
        .add_scaled(-1.0, &g_lf)
        .map(|v| v.scaled(0.5))
}

/// `Γ(I_p f, I_p f) = ½ Σ_{m=1}^{2p} m I_{2p−m}(h_{2p−m})`.
pub fn gamma_single(f: &SymKernel) -> Result<ChaosVector> {
    let p = require_order(f)?;
    let mut out = ChaosVector::zero(f.space());
    for m in 1..=2 * p {
        out.add_scaled_term(0.5 * m as f64, &h_kernel(f, f, m)?)?;
    }
    Ok(out)
}

/// `Var Γ(F,F)` as the isometry variance of the chaos vector built from
/// the definition of `Γ`.
pub fn var_gamma_isometry(f: &SymKernel) -> Result<f64> {
    let v = ChaosVector::single(f.clone());
    Ok(gamma(&v, &v)?.variance())
}
