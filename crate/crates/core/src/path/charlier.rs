//! Monic Charlier polynomials, the orthogonal polynomials of the Poisson law.

use statrs::function::factorial::ln_factorial;

/// `C_m(x; λ)` from the three-term recurrence
/// `C_{k+1} = (x − k − λ) C_k − k λ C_{k−1}`, `C_0 = 1`, `C_1 = x − λ`.
pub fn charlier(m: usize, x: u32, lambda: f64) -> f64 {
    let x = x as f64;
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = x - lambda;
    for k in 1..m {
        let kf = k as f64;
        let next = (x - kf - lambda) * cur - kf * lambda * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_0(x; λ), …, C_m(x; λ)` in one pass.
pub fn charlier_row(m: usize, x: u32, lambda: f64, out: &mut [f64]) {
    debug_assert!(out.len() > m);
    let xf = x as f64;
    out[0] = 1.0;
    if m == 0 {
        return;
    }
    out[1] = xf - lambda;
    for k in 1..m {
        let kf = k as f64;
        out[k + 1] = (xf - kf - lambda) * out[k] - kf * lambda * out[k - 1];
    }
}

/// Poisson probability mass `e^{−λ} λ^x / x!`.
pub fn poisson_pmf(x: u64, lambda: f64) -> f64 {
    if x == 0 {
        return (-lambda).exp();
    }
    (-lambda + x as f64 * lambda.ln() - ln_factorial(x)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::factorial_f64;

    #[test]
    fn low_orders() {
        for x in 0..10u32 {
            for &l in &[0.3, 1.0, 2.7] {
                assert_eq!(charlier(0, x, l), 1.0);
                let xf = x as f64;
                assert!((charlier(1, x, l) - (xf - l)).abs() < 1e-15);
                let c2 = (xf - l).powi(2) - xf;
                assert!((charlier(2, x, l) - c2).abs() < 1e-12 * (1.0 + c2.abs()));
            }
        }
    }

    #[test]
    fn row_matches_scalar() {
        let mut row = [0.0; 9];
        charlier_row(8, 5, 1.3, &mut row);
        for (m, v) in row.iter().enumerate() {
            assert_eq!(*v, charlier(m, 5, 1.3));
        }
    }

    /// Truncated orthogonality sums; the neglected mass beyond `x_max` is
    /// below 1e−30 for λ ≤ 3 and degree ≤ 12 integrands.
    #[test]
    fn orthogonality_against_poisson_weights() {
        for &lambda in &[0.2, 1.0, 2.0, 3.0] {
            let x_max = 120u32;
            for j in 0..=6 {
                for k in 0..=6 {
                    let s: f64 = (0..=x_max)
                        .map(|x| {
                            charlier(j, x, lambda)
                                * charlier(k, x, lambda)
                                * poisson_pmf(x as u64, lambda)
                        })
                        .sum();
                    let expect = if j == k {
                        factorial_f64(j) * lambda.powi(j as i32)
                    } else {
                        0.0
                    };
                    let scale = (factorial_f64(j)
                        * lambda.powi(j as i32)
                        * factorial_f64(k)
                        * lambda.powi(k as i32))
                    .sqrt();
                    assert!(
                        (s - expect).abs() <= 1e-8 * scale,
                        "j={j} k={k} λ={lambda}: {s} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn recurrence_residual_and_finiteness() {
        for &lambda in &[0.1, 1.0, 3.0] {
            for x in 0..=40u32 {
                let mut row = [0.0; 11];
                charlier_row(10, x, lambda, &mut row);
                assert!(row.iter().all(|v| v.is_finite()));
                for k in 1..10 {
                    let kf = k as f64;
                    let rhs = (x as f64 - kf - lambda) * row[k] - kf * lambda * row[k - 1];
                    let scale = ((x as f64 - kf - lambda) * row[k]).abs()
                        + (kf * lambda * row[k - 1]).abs();
                    assert!((row[k + 1] - rhs).abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE));
                }
            }
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = (0..200).map(|x| poisson_pmf(x, 4.5)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
