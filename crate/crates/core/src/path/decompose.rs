//! Chaos kernels of a functional from expected iterated differences,
//! `f_p(z_1..z_p) = (1/p!) E[D^{(p)}_{z_1..z_p} F]`.

use std::sync::Arc;

use crate::combinatorics::factorial_f64;
use crate::error::{Error, Result};
use crate::kernels::multiset::MultisetIndex;
use crate::kernels::SymKernel;
use crate::product::ChaosVector;
use crate::space::MeasureSpace;

use super::expectation::ExpectationEngine;
use super::functional::{iterated_difference, PathFunctional};

/// Highest order `extract_kernels` accepts.
pub const MAX_EXTRACT_ORDER: usize = 8;

/// Kernels of `F` up to order `max_order`. The order-`p` kernel takes one
/// exact expectation per atom multiset of size `p`, so the result is
/// symmetric by construction.
///
/// A functional whose declared chaos order exceeds `max_order` is refused
/// with [`Error::ResidualChaos`].
pub fn extract_kernels(
    f: &PathFunctional,
    space: &Arc<MeasureSpace>,
    max_order: usize,
    engine: &ExpectationEngine,
) -> Result<ChaosVector> {
    if max_order > MAX_EXTRACT_ORDER {
        return Err(Error::Refused(format!(
            "kernel extraction is limited to order {MAX_EXTRACT_ORDER}, got {max_order}"
        )));
    }
    if let Some(declared) = f.max_order() {
        if declared > max_order {
            return Err(Error::ResidualChaos {
                max_order,
                detail: format!("functional declares chaos order {declared}"),
            });
        }
    }
    let mut out = ChaosVector::zero(space);
    for p in 0..=max_order {
        let index = MultisetIndex::shared(space.n_atoms(), p)?;
        let fs: Vec<PathFunctional> = if p == 0 {
            vec![f.clone()]
        } else {
            (0..index.len())
                .map(|r| iterated_difference(f, index.tuple(r)))
                .collect::<Result<_>>()?
        };
        let e = engine.expect_all(space, &fs)?;
        let scale = 1.0 / factorial_f64(p);
        let values = e.iter().map(|x| x.value * scale).collect();
        out.add_scaled_term(1.0, &SymKernel::from_values(space, p, values)?)?;
    }
    Ok(out)
}
