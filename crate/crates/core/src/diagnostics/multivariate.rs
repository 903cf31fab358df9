//! Vectors of multiple integrals `(I_{p_1}(f_1), …, I_{p_d}(f_d))` sharing
//! one space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::combinatorics::factorial_f64;
use crate::error::{Error, Result};
use crate::kernels::SymKernel;

use super::sequence::{
    assemble, diagnose_kernel, judge, Condition, DiagnoseOptions, DiagnosticsReport,
    SequenceDiagnostics, Verdict,
};

/// Smallest eigenvalue tolerated for a covariance matrix.
pub const PSD_TOL: f64 = 1e-10;

/// `Σ(i,j) = δ_{p_i p_j} p_i! ⟨f_i, f_j⟩`.
pub fn covariance(kernels: &[SymKernel]) -> Result<Vec<Vec<f64>>> {
    let d = kernels.len();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let (a, b) = (&kernels[i], &kernels[j]);
            if a.order() == b.order() {
                let c = factorial_f64(a.order()) * a.inner(b)?;
                out[i][j] = c;
                out[j][i] = c;
            }
        }
    }
    Ok(out)
}

pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    if d == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_fn(d, d, |i, j| m[i][j]);
    mat.symmetric_eigenvalues().min()
}

/// Multivariate diagnostics at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateReport {
    pub index: usize,
    pub orders: Vec<usize>,
    pub covariance: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    /// `max_{i,j} |Σ(i,j) − V(i,j)|`.
    pub max_deviation: f64,
    pub coordinates: Vec<DiagnosticsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateDiagnostics {
    pub target: Vec<Vec<f64>>,
    pub reports: Vec<MultivariateReport>,
    /// Per-coordinate sequence diagnostics against `V(k,k)`.
    pub coordinates: Vec<SequenceDiagnostics>,
    /// Trend of `max |Σ_n − V|`.
    pub covariance_verdict: Verdict,
    pub warnings: Vec<String>,
}

impl MultivariateDiagnostics {
    pub fn consistent(&self) -> bool {
        self.covariance_verdict.consistent
            && self.coordinates.iter().all(SequenceDiagnostics::consistent)
    }
}

/// Statement added to multivariate footers.
pub const GAMMA_TARGET_NOTE: &str =
    "Per-coordinate carre du champ targets use p_k V(k,k), with p_k the order of coordinate k.";

/// Diagnoses `(index, [f_1..f_d])` against the target covariance `target`.
pub fn diagnose_multivariate(
    kernels: &[(usize, Vec<SymKernel>)],
    target: &[Vec<f64>],
    opts: &DiagnoseOptions,
) -> Result<MultivariateDiagnostics> {
    let d = target.len();
    if d == 0 || target.iter().any(|row| row.len() != d) {
        return Err(Error::Validation(
            "target covariance must be a non-empty square matrix".into(),
        ));
    }
    let symmetric =
        (0..d).all(|i| (0..d).all(|j| target[i][j].is_finite() && target[i][j] == target[j][i]));
    if !symmetric {
        return Err(Error::Validation(
            "target covariance must be finite and symmetric".into(),
        ));
    }
    if min_eigenvalue(target) < -PSD_TOL {
        return Err(Error::Validation(
            "target covariance is not positive semidefinite".into(),
        ));
    }
    if kernels.is_empty() {
        return Err(Error::Validation("no indices to diagnose".into()));
    }
    let mut sorted: Vec<&(usize, Vec<SymKernel>)> = kernels.iter().collect();
    sorted.sort_by_key(|(n, _)| *n);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation("duplicate sequence index".into()));
    }
    let orders: Vec<usize> = sorted[0].1.iter().map(SymKernel::order).collect();
    for (n, ks) in &sorted {
        if ks.len() != d {
            return Err(Error::Refused(format!(
                "index {n} has {} coordinates but the target is {d} x {d}",
                ks.len()
            )));
        }
        if ks.iter().map(SymKernel::order).ne(orders.iter().copied()) {
            return Err(Error::Validation(format!(
                "coordinate orders change at index {n}"
            )));
        }
    }

    let reports: Vec<MultivariateReport> = sorted
        .par_iter()
        .map(|(n, ks)| {
            let cov = covariance(ks)?;
            let coordinates = ks
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    let o = DiagnoseOptions {
                        target_variance: target[k][k],
                        ..*opts
                    };
                    diagnose_kernel(*n, f, &o)
                })
                .collect::<Result<Vec<_>>>()?;
            let max_deviation = cov
                .iter()
                .flatten()
                .zip(target.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(MultivariateReport {
                index: *n,
                orders: orders.clone(),
                min_eigenvalue: min_eigenvalue(&cov),
                covariance: cov,
                max_deviation,
                coordinates,
            })
        })
        .collect::<Result<_>>()?;

    let coordinates: Vec<SequenceDiagnostics> = (0..d)
        .map(|k| {
            let o = DiagnoseOptions {
                target_variance: target[k][k],
                ..*opts
            };
            assemble(
                reports.iter().map(|r| r.coordinates[k].clone()).collect(),
                o,
            )
        })
        .collect();
    let series: Vec<(usize, Option<f64>)> = reports
        .iter()
        .map(|r| (r.index, Some(r.max_deviation)))
        .collect();
    let covariance_verdict = judge(Condition::Variance, &series, opts.threshold);
    let warnings = reports
        .iter()
        .filter(|r| r.min_eigenvalue < -PSD_TOL)
        .map(|r| {
            format!(
                "covariance at index {} has eigenvalue {} < 0",
                r.index, r.min_eigenvalue
            )
        })
        .collect();
    Ok(MultivariateDiagnostics {
        target: target.to_vec(),
        reports,
        coordinates,
        covariance_verdict,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::families::{
        embed_disjoint, BlockTensorFamily, KernelFamily, UniformFamily,
    };
    use crate::diagnostics::sequence::diagnose_sequence;

    fn identity(d: usize) -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn one_dimension_collapses() {
        let fam = UniformFamily { mass: 1.0 };
        let uni: Vec<(usize, SymKernel)> = (1..=8).map(|n| (n, fam.kernel(n).unwrap())).collect();
        let multi: Vec<(usize, Vec<SymKernel>)> =
            uni.iter().map(|(n, f)| (*n, vec![f.clone()])).collect();
        let opts = DiagnoseOptions::default();
        let a = diagnose_sequence(&uni, &opts).unwrap();
        let b = diagnose_multivariate(&multi, &[vec![1.0]], &opts).unwrap();
        assert_eq!(a, b.coordinates[0]);
    }

    #[test]
    fn independent_blocks_have_identity_covariance() {
        let fam = UniformFamily { mass: 1.0 };
        let ks: Vec<(usize, Vec<SymKernel>)> = (1..=6)
            .map(|n| {
                let f = fam.kernel(n).unwrap();
                (n, embed_disjoint(&[f.clone(), f]).unwrap())
            })
            .collect();
        let d = diagnose_multivariate(&ks, &identity(2), &DiagnoseOptions::default()).unwrap();
        for r in &d.reports {
            assert_eq!(r.covariance[0][1], 0.0);
            assert!(r.max_deviation < 1e-14);
        }
    }

    #[test]
    fn mixed_orders_are_uncorrelated() {
        let a = UniformFamily { mass: 1.0 }.kernel(4).unwrap();
        let b = BlockTensorFamily { block: 1 }.kernel(4).unwrap();
        // Same atoms, different orders.
        let b = SymKernel::from_fn(a.space(), 2, |t| b.get(t)).unwrap();
        let cov = covariance(&[a, b]).unwrap();
        assert_eq!(cov[0][1], 0.0);
        assert_eq!(cov[1][0], 0.0);
    }

    #[test]
    fn dimension_mismatch_refused() {
        let f = UniformFamily { mass: 1.0 }.kernel(2).unwrap();
        let r = diagnose_multivariate(&[(2, vec![f])], &identity(2), &DiagnoseOptions::default());
        assert!(matches!(r, Err(Error::Refused(_))));
    }

    #[test]
    fn indefinite_target_rejected() {
        let f = UniformFamily { mass: 1.0 }.kernel(2).unwrap();
        let v = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let r = diagnose_multivariate(&[(2, vec![f.clone(), f])], &v, &DiagnoseOptions::default());
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
