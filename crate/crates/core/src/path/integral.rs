//! Pathwise multiple integrals.
//!
//! On an atomic space the order-`p` integral of a symmetric kernel is a
//! polynomial in the counts:
//! `I_p(f)(N) = Σ_{|α| = p} (p!/α!) f(α) ∏_i C_{α_i}(N_i; μ_i)`.

use crate::kernels::SymKernel;
use crate::product::ChaosVector;

use super::charlier::charlier_row;

/// `I_p(f)` evaluated at the counts `N`.
pub fn eval_integral(f: &SymKernel, counts: &[u32]) -> f64 {
    let p = f.order();
    if p == 0 {
        return f.scalar_value();
    }
    let n = f.n_atoms();
    debug_assert_eq!(counts.len(), n);
    let masses = f.space().masses();
    let stride = p + 1;
    let mut table = vec![0.0; n * stride];
    for i in 0..n {
        charlier_row(
            p,
            counts[i],
            masses[i],
            &mut table[i * stride..(i + 1) * stride],
        );
    }
    let index = f.index();
    let mut acc = 0.0;
    for (rank, &v) in f.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let tuple = index.tuple(rank);
        let mut prod = 1.0;
        let mut j = 0;
        while j < p {
            let z = tuple[j];
            let mut run = 1;
            while j + run < p && tuple[j + run] == z {
                run += 1;
            }
            prod *= table[z * stride + run];
            j += run;
        }
        acc += index.multiplicity(rank) * v * prod;
    }
    acc
}

/// `F(N) = Σ_k I_k(f_k)(N)` for a finite chaos expansion.
pub fn eval_chaos(f: &ChaosVector, counts: &[u32]) -> f64 {
    f.terms().map(|(_, k)| eval_integral(k, counts)).sum()
}

/// `Σ_k |I_k(f_k)(N)|`, the magnitude scale against which pathwise
/// residuals of a chaos expansion are measured.
pub fn eval_chaos_abs(f: &ChaosVector, counts: &[u32]) -> f64 {
    f.terms().map(|(_, k)| eval_integral(k, counts).abs()).sum()
}

/// Relative residual of a pathwise product identity at one configuration:
/// `|I_p(f) I_q(g) − Σ_k I_k(h_k)| / max(|I_p(f) I_q(g)|, Σ_k |I_k(h_k)|)`.
///
/// The denominator accounts for cancellation among the chaos terms, which
/// a plain `|FG|` normalization would misreport as formula error.
pub fn product_residual(
    f: &SymKernel,
    g: &SymKernel,
    product: &ChaosVector,
    counts: &[u32],
) -> f64 {
    let lhs = eval_integral(f, counts) * eval_integral(g, counts);
    let rhs = eval_chaos(product, counts);
    let d = (lhs - rhs).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / lhs.abs().max(eval_chaos_abs(product, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MeasureSpace;
    use std::sync::Arc;

    #[test]
    fn first_order_indicator_is_compensated_count() {
        let sp = Arc::new(MeasureSpace::new(vec![0.5, 2.0, 1.5]).unwrap());
        let f = SymKernel::from_fn(&sp, 1, |t| if t[0] == 1 { 1.0 } else { 0.0 }).unwrap();
        for counts in [[0, 0, 0], [3, 5, 1], [1, 0, 7]] {
            assert_eq!(eval_integral(&f, &counts), counts[1] as f64 - 2.0);
        }
    }

    #[test]
    fn second_order_single_atom_is_charlier() {
        let lambda = 1.7;
        let sp = Arc::new(MeasureSpace::new(vec![lambda]).unwrap());
        let f = SymKernel::from_values(&sp, 2, vec![1.0]).unwrap();
        for n in 0..12u32 {
            let x = n as f64;
            let expect = (x - lambda).powi(2) - x;
            assert!((eval_integral(&f, &[n]) - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn scalar_kernel_is_constant() {
        let sp = Arc::new(MeasureSpace::uniform(2, 1.0).unwrap());
        assert_eq!(eval_integral(&SymKernel::scalar(&sp, -2.5), &[4, 1]), -2.5);
    }
}
