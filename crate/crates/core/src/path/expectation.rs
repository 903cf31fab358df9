//! Exact truncated expectations with certified tail bounds, and plain
//! Monte Carlo averages.

use rayon::prelude::*;

use crate::combinatorics::poisson_raw_moment;
use crate::error::{Error, Result};
use crate::space::MeasureSpace;

use super::charlier::poisson_pmf;
use super::config::sample_configs;
use super::functional::{Envelope, PathFunctional};

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Result of one exact expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    /// Certified bound on the mass of `|F|` outside the truncation box.
    pub tail_bound: f64,
    /// Per-atom truncation level `K`.
    pub truncation: u32,
    /// Number of grid states visited, `(K+1)^n`.
    pub states: f64,
}

/// Sums `F(N) ∏ pmf(N_i)` over the box `{0..K}^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationEngine {
    /// Target for the certified tail bound.
    pub tol: f64,
    /// Largest admissible `n · (K+1)^n`.
    pub budget: f64,
    pub max_truncation: u32,
}

impl Default for ExpectationEngine {
    fn default() -> Self {
        ExpectationEngine {
            tol: 1e-12,
            budget: 5e7,
            max_truncation: 10_000,
        }
    }
}

/// `E[N^d 1{N > k}]` for `N ~ Poisson(λ)`, rounded up.
fn tail_moment(lambda: f64, d: u32, k: u32) -> f64 {
    let mut acc = 0.0;
    let mut x = k as u64 + 1;
    loop {
        let term = poisson_pmf(x, lambda) * (x as f64).powi(d as i32);
        acc += term;
        // Ratio of consecutive terms, decreasing in x.
        let ratio = lambda / (x + 1) as f64 * ((x + 1) as f64 / x as f64).powi(d as i32);
        if ratio <= 0.5 && (term <= 1e-18 * acc || term == 0.0) {
            // Geometric remainder with ratio ≤ 1/2 is at most one more term.
            acc += term;
            break;
        }
        x += 1;
    }
    acc * (1.0 + 1e-9)
}

impl ExpectationEngine {
    pub fn with_tol(tol: f64) -> Self {
        ExpectationEngine {
            tol,
            ..Self::default()
        }
    }

    /// Bound on `E[|F| 1{N ∉ {0..K}^n}]` for a functional with envelope `env`.
    ///
    /// Uses `1{N ∉ box} ≤ Σ_i 1{N_i > K}`, `(a + b)^d ≤ 2^{d−1}(a^d + b^d)`
    /// and independence of `N_i` from the remaining counts.
    pub fn tail_bound(space: &MeasureSpace, env: Envelope, k: u32) -> f64 {
        if env.scale == 0.0 {
            return 0.0;
        }
        let total = space.total_mass();
        let d = env.degree;
        let mut acc = 0.0;
        for &lambda in space.masses() {
            let p_out = tail_moment(lambda, 0, k);
            if d == 0 {
                acc += env.scale * p_out;
                continue;
            }
            // E[(R + shift)^d] with R ~ Poisson(total − λ).
            let rest = (total - lambda).max(0.0);
            let shifted: f64 = (0..=d)
                .map(|j| {
                    crate::combinatorics::binomial(d as usize, j as usize) as f64
                        * poisson_raw_moment(j as usize, rest)
                        * env.shift.powi((d - j) as i32)
                })
                .sum();
            let factor = 2f64.powi(d as i32 - 1);
            acc += env.scale * factor * (tail_moment(lambda, d, k) + shifted * p_out);
        }
        acc * (1.0 + 1e-9)
    }

    /// Smallest `K` whose certified tail bound meets `tol` for every envelope.
    pub fn truncation_for(&self, space: &MeasureSpace, envs: &[Envelope]) -> Result<u32> {
        let max_mass = space.masses().iter().cloned().fold(0.0, f64::max);
        let mut k = max_mass.ceil().max(1.0) as u32;
        loop {
            if envs
                .iter()
                .all(|&e| Self::tail_bound(space, e, k) < self.tol)
            {
                return Ok(k);
            }
            if k >= self.max_truncation {
                return Err(Error::Budget {
                    required_k: k,
                    work: f64::INFINITY,
                    budget: self.budget,
                });
            }
            k += 1;
        }
    }

    pub fn expect(&self, space: &MeasureSpace, f: &PathFunctional) -> Result<Expectation> {
        Ok(self.expect_all(space, std::slice::from_ref(f))?.remove(0))
    }

    /// Expectations of several functionals from one sweep of the grid.
    pub fn expect_all(
        &self,
        space: &MeasureSpace,
        fs: &[PathFunctional],
    ) -> Result<Vec<Expectation>> {
        let n = space.n_atoms();
        if let Some(f) = fs.iter().find(|f| f.n_atoms() != n) {
            return Err(Error::Contract(format!(
                "functional on {} atoms evaluated on a space with {n}",
                f.n_atoms()
            )));
        }
        let envs: Vec<Envelope> = fs.iter().map(|f| f.envelope()).collect();
        let k = self.truncation_for(space, &envs)?;
        let side = k as usize + 1;
        let states = (side as f64).powi(n as i32);
        let work = n as f64 * states;
        if work > self.budget {
            return Err(Error::Budget {
                required_k: k,
                work,
                budget: self.budget,
            });
        }
        let pmf: Vec<Vec<f64>> = space
            .masses()
            .iter()
            .map(|&m| (0..side as u64).map(|x| poisson_pmf(x, m)).collect())
            .collect();

        // Parallel over the first coordinate, each slab summed in a fixed
        // order, slabs combined sequentially: the result does not depend on
        // the thread count.
        let slabs: Vec<Vec<Neumaier>> = (0..side)
            .into_par_iter()
            .map(|first| {
                let mut sums = vec![Neumaier::default(); fs.len()];
                let mut counts = vec![0u32; n];
                counts[0] = first as u32;
                let w0 = pmf[0][first];
                loop {
                    let mut w = w0;
                    for i in 1..n {
                        w *= pmf[i][counts[i] as usize];
                    }
                    if w > 0.0 {
                        for (s, f) in sums.iter_mut().zip(fs) {
                            s.add(w * f.eval(&counts));
                        }
                    }
                    // Odometer over coordinates 1..n.
                    let mut i = 1;
                    while i < n {
                        counts[i] += 1;
                        if counts[i] as usize <= k as usize {
                            break;
                        }
                        counts[i] = 0;
                        i += 1;
                    }
                    if i >= n {
                        break;
                    }
                }
                sums
            })
            .collect();

        let mut total = vec![Neumaier::default(); fs.len()];
        for slab in &slabs {
            for (t, s) in total.iter_mut().zip(slab) {
                t.add(s.value());
            }
        }
        Ok(total
            .iter()
            .zip(&envs)
            .map(|(t, &e)| Expectation {
                value: t.value(),
                tail_bound: Self::tail_bound(space, e, k),
                truncation: k,
                states,
            })
            .collect())
    }
}

/// Monte Carlo estimate of `E[F]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean and standard error of `F` over `samples` configurations.
pub fn monte_carlo(
    space: &MeasureSpace,
    f: &PathFunctional,
    seed: u64,
    samples: usize,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::Validation(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let values: Vec<f64> = sample_configs(space, seed, samples)
        .par_iter()
        .map(|c| f.eval(c.counts()))
        .collect();
    let mut sum = Neumaier::default();
    values.iter().for_each(|&v| sum.add(v));
    let mean = sum.value() / samples as f64;
    let mut ss = Neumaier::default();
    values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
    let var = ss.value() / (samples - 1) as f64;
    Ok(McEstimate {
        mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SymKernel;
    use std::sync::Arc;

    #[test]
    fn poisson_mean() {
        let sp = MeasureSpace::new(vec![2.0]).unwrap();
        let e = ExpectationEngine::default()
            .expect(&sp, &PathFunctional::count(1, 0))
            .unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!(e.tail_bound < 1e-12);
    }

    #[test]
    fn centered_integrals() {
        let sp = Arc::new(MeasureSpace::new(vec![0.5, 1.5]).unwrap());
        for p in 1..=3 {
            let f = SymKernel::from_fn(&sp, p, |t| 1.0 + t.iter().sum::<usize>() as f64).unwrap();
            let e = ExpectationEngine::default()
                .expect(&sp, &PathFunctional::integral(&f))
                .unwrap();
            assert!(e.value.abs() < 1e-10, "p={p}: {}", e.value);
        }
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        // F = N^3 on one atom: the mass beyond K is known exactly.
        let sp = MeasureSpace::new(vec![1.3]).unwrap();
        let f = PathFunctional::count(1, 0).powi(3);
        for k in [2u32, 4, 8] {
            let exact_tail: f64 = (k as u64 + 1..200)
                .map(|x| poisson_pmf(x, 1.3) * (x as f64).powi(3))
                .sum();
            let bound = ExpectationEngine::tail_bound(&sp, f.envelope(), k);
            assert!(bound >= exact_tail, "K={k}: {bound} < {exact_tail}");
        }
    }

    #[test]
    fn budget_refusal_reports_required_k() {
        let sp = MeasureSpace::uniform(12, 1.0).unwrap();
        let engine = ExpectationEngine {
            budget: 1e4,
            ..ExpectationEngine::default()
        };
        match engine.expect(&sp, &PathFunctional::count(12, 0)) {
            Err(Error::Budget {
                required_k, work, ..
            }) => {
                assert!(required_k > 0);
                assert!(work > 1e4);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_mean_within_band() {
        let sp = MeasureSpace::new(vec![2.0, 0.5]).unwrap();
        let est = monte_carlo(&sp, &PathFunctional::count(2, 0), 5, 20_000).unwrap();
        assert!((est.mean - 2.0).abs() < 4.0 * est.std_error);
    }
}
