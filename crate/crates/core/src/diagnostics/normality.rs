//! Empirical normality of a multiple integral.

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::kernels::SymKernel;
use crate::path::{eval_integral, sample_configs};

/// Fewest samples `mc_normality` accepts.
pub const MIN_KS_SAMPLES: usize = 1000;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_N(x) − Φ(x)|` for the empirical law of `values`.
///
/// Tied values are handled correctly: inside a run of ties both candidate
/// differences lie between the left and right limits of the step.
pub fn ks_distance_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            ((i + 1) as f64 / n - phi).max(phi - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov–Smirnov distance between the law of `I_p(f)` under
/// `samples` draws of the configuration and `N(0,1)`. No studentization.
pub fn mc_normality(f: &SymKernel, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_KS_SAMPLES {
        return Err(Error::Validation(format!(
            "normality check needs at least {MIN_KS_SAMPLES} samples, got {samples}"
        )));
    }
    let values: Vec<f64> = sample_configs(f.space(), seed, samples)
        .par_iter()
        .map(|c| eval_integral(f, c.counts()))
        .collect();
    Ok(ks_distance_normal(&values))
}
