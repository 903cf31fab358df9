//! Exact integer combinatorics. Coefficients are formed in `u128` and only
//! converted to `f64` by the caller, at the last moment.

/// `n!` as an exact integer. Overflows past `34!`.
pub fn factorial(n: usize) -> u128 {
    assert!(n <= 34, "factorial({n}) overflows u128");
    (1..=n as u128).product()
}

pub fn factorial_f64(n: usize) -> f64 {
    factorial(n) as f64
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc * (n - i) as u128 / (i as u128 + 1);
    }
    acc
}

/// Falling factorial `(n)_m = n (n-1) ... (n-m+1)`.
pub fn falling_factorial(n: usize, m: usize) -> u128 {
    if m > n {
        return 0;
    }
    ((n - m + 1) as u128..=n as u128).product()
}

/// Multinomial `k! / (a_1! a_2! ...)` for `Σ a_i = k`.
pub fn multinomial(parts: &[usize]) -> u128 {
    let mut total = 0usize;
    let mut acc: u128 = 1;
    for &a in parts {
        total += a;
        acc *= binomial(total, a);
    }
    acc
}

/// Stirling numbers of the second kind `S(n, k)` for `k = 0..=n`, as floats.
pub fn stirling2_row(n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    row[0] = 1.0;
    for i in 1..=n {
        for k in (1..=i).rev() {
            row[k] = k as f64 * row[k] + row[k - 1];
        }
        row[0] = 0.0;
    }
    row
}

/// Raw moment `E[X^j]` of a Poisson(λ) variable (Touchard polynomial).
pub fn poisson_raw_moment(j: usize, lambda: f64) -> f64 {
    let row = stirling2_row(j);
    let mut acc = 0.0;
    let mut pow = 1.0;
    for s in row.iter() {
        acc += s * pow;
        pow *= lambda;
    }
    acc
}
