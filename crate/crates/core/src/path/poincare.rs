//! Poincaré inequality and the iterated variance identity.

use std::sync::Arc;

use crate::combinatorics::factorial_f64;
use crate::error::Result;
use crate::kernels::multiset::MultisetIndex;
use crate::space::MeasureSpace;

use super::expectation::ExpectationEngine;
use super::functional::{add_one_cost, iterated_difference, PathFunctional};

/// Both sides of `E[F²] ≤ (E F)² + Σ_z μ_z E[(D_z^+ F)²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareCheck {
    pub second_moment: f64,
    pub mean: f64,
    pub dirichlet: f64,
    /// Largest certified truncation error among the expectations used.
    pub tail_bound: f64,
}

impl PoincareCheck {
    /// `(E F)² + Σ_z μ_z E[(D_z F)²] − E[F²]`, nonnegative when the inequality holds.
    pub fn gap(&self) -> f64 {
        self.mean * self.mean + self.dirichlet - self.second_moment
    }
}

pub fn poincare(
    f: &PathFunctional,
    space: &MeasureSpace,
    engine: &ExpectationEngine,
) -> Result<PoincareCheck> {
    let mut fs = vec![f.clone(), f.powi(2)];
    for z in 0..space.n_atoms() {
        fs.push(add_one_cost(f, z)?.powi(2));
    }
    let e = engine.expect_all(space, &fs)?;
    let dirichlet = space
        .masses()
        .iter()
        .zip(&e[2..])
        .map(|(&m, x)| m * x.value)
        .sum();
    Ok(PoincareCheck {
        second_moment: e[1].value,
        mean: e[0].value,
        dirichlet,
        tail_bound: e.iter().map(|x| x.tail_bound).fold(0.0, f64::max),
    })
}

/// Terms of the iterated variance expansion up to order `m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedVariance {
    pub second_moment: f64,
    pub mean: f64,
    /// `S_m = Σ_{z ∈ Z^m} μ^m(z) (E D^{(m)}_z F)²` for `m = 1..=m_max`.
    pub sums: Vec<f64>,
}

impl IteratedVariance {
    /// `(E F)² + Σ_m S_m / m!`, equal to `E[F²]` once `D^{(m_max+1)} F ≡ 0`.
    pub fn identity_rhs(&self) -> f64 {
        self.mean * self.mean
            + self
                .sums
                .iter()
                .enumerate()
                .map(|(i, s)| s / factorial_f64(i + 1))
                .sum::<f64>()
    }

    /// `(E F)² + Σ_m S_m`, the cruder bound obtained by iterating the
    /// Poincaré inequality without the `1/m!` weights.
    pub fn chain_bound(&self) -> f64 {
        self.mean * self.mean + self.sums.iter().sum::<f64>()
    }
}

pub fn iterated_variance(
    f: &PathFunctional,
    space: &Arc<MeasureSpace>,
    m_max: usize,
    engine: &ExpectationEngine,
) -> Result<IteratedVariance> {
    let base = engine.expect_all(space, &[f.clone(), f.powi(2)])?;
    let mut sums = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let index = MultisetIndex::shared(space.n_atoms(), m)?;
        let fs: Vec<PathFunctional> = (0..index.len())
            .map(|r| iterated_difference(f, index.tuple(r)))
            .collect::<Result<_>>()?;
        let e = engine.expect_all(space, &fs)?;
        // Ordered tuples are grouped by multiset; each class has m!/α! members.
        let s = (0..index.len())
            .map(|r| {
                index.multiplicity(r) * space.tuple_weight(index.tuple(r)) * e[r].value.powi(2)
            })
            .sum();
        sums.push(s);
    }
    Ok(IteratedVariance {
        second_moment: base[1].value,
        mean: base[0].value,
        sums,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SymKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poincare_holds_for_polynomials() {
        let sp = Arc::new(MeasureSpace::new(vec![0.7, 1.4]).unwrap());
        let engine = ExpectationEngine::default();
        let f = PathFunctional::count(2, 0)
            .product(&PathFunctional::count(2, 1))
            .unwrap()
            .add_scaled(-0.5, &PathFunctional::count(2, 1).powi(3))
            .unwrap();
        let c = poincare(&f, &sp, &engine).unwrap();
        assert!(c.gap() >= -1e-9, "gap {}", c.gap());
    }

    #[test]
    fn single_chaos_identity_is_exact() {
        let sp = Arc::new(MeasureSpace::new(vec![0.5, 0.9, 0.3]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let engine = ExpectationEngine::default();
        for p in 1..=3 {
            let k = SymKernel::from_fn(&sp, p, |_| rng.random_range(-1.0..1.0)).unwrap();
            let f = PathFunctional::integral(&k);
            let it = iterated_variance(&f, &sp, p, &engine).unwrap();
            let rel = (it.identity_rhs() - it.second_moment).abs() / it.second_moment;
            assert!(rel < 1e-8, "p={p}: rel {rel}");
            assert!(it.chain_bound() >= it.second_moment * (1.0 - 1e-10));
        }
    }
}
