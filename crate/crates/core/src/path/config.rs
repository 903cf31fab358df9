use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::space::MeasureSpace;

/// Name of the random stream construction, recorded in reports.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9): key = seed_from_u64(seed), stream = sample index; Poisson counts via rand_distr 0.5";

/// One realization of the Poisson measure: a point count per atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointConfiguration {
    counts: Vec<u32>,
}

impl PointConfiguration {
    pub fn new(counts: Vec<u32>) -> Self {
        PointConfiguration { counts }
    }

    pub fn empty(n_atoms: usize) -> Self {
        PointConfiguration {
            counts: vec![0; n_atoms],
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n_atoms(&self) -> usize {
        self.counts.len()
    }

    /// `η + δ_z`.
    pub fn with_point(&self, atom: usize) -> Self {
        let mut c = self.counts.clone();
        c[atom] += 1;
        PointConfiguration { counts: c }
    }
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Independent counts `N_i ~ Poisson(μ_i)` drawn from stream `index` of `seed`.
pub fn sample_config_indexed(space: &MeasureSpace, seed: u64, index: u64) -> PointConfiguration {
    let mut rng = stream_rng(seed, index);
    let counts = space
        .masses()
        .iter()
        .map(|&m| {
            let d = Poisson::new(m).expect("masses are finite and positive");
            let x: f64 = d.sample(&mut rng);
            x as u32
        })
        .collect();
    PointConfiguration { counts }
}

pub fn sample_config(space: &MeasureSpace, seed: u64) -> PointConfiguration {
    sample_config_indexed(space, seed, 0)
}

/// `count` configurations, one stream per sample index. Parallel and serial
/// runs produce identical output.
pub fn sample_configs(space: &MeasureSpace, seed: u64, count: usize) -> Vec<PointConfiguration> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_config_indexed(space, seed, i))
        .collect()
}
