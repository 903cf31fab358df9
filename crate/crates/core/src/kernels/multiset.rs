//! Indexing of atom multisets (occupation vectors) for symmetric storage.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::combinatorics::{binomial, factorial};
use crate::error::{Error, Result};

type IndexCache = HashMap<(usize, usize), Arc<MultisetIndex>>;

/// Largest dense tensor (`n^p` entries) the engine will materialize.
pub const MAX_DENSE_LEN: usize = 1 << 26;

pub fn dense_len(n_atoms: usize, order: usize) -> Result<usize> {
    match n_atoms.checked_pow(order as u32) {
        Some(len) if len <= MAX_DENSE_LEN => Ok(len),
        _ => Err(Error::Refused(format!(
            "dense tensor with {n_atoms}^{order} entries exceeds the limit of {MAX_DENSE_LEN}"
        ))),
    }
}

/// Row-major position of an atom tuple (first argument most significant).
pub fn dense_position(n_atoms: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &z| acc * n_atoms + z)
}

/// Inverse of [`dense_position`].
pub fn decode_position(n_atoms: usize, mut pos: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = pos % n_atoms;
        pos /= n_atoms;
    }
}

/// All multisets of size `order` over `n_atoms` atoms, in lexicographic order
/// of their sorted tuples, together with the map from dense positions to
/// multiset ranks.
#[derive(Debug)]
pub struct MultisetIndex {
    n_atoms: usize,
    order: usize,
    tuples: Vec<usize>,
    dense_to_rank: Vec<u32>,
    multiplicity: Vec<f64>,
}

impl MultisetIndex {
    fn build(n_atoms: usize, order: usize) -> Result<Self> {
        let len = dense_len(n_atoms, order)?;
        let count = binomial(n_atoms + order - 1, order) as usize;
        let mut tuples = Vec::with_capacity(count * order);
        let mut sorted_rank = vec![u32::MAX; len];
        let mut multiplicity = Vec::with_capacity(count);
        let p_fact = factorial(order) as f64;

        let mut cur = vec![0usize; order];
        let mut rank = 0u32;
        loop {
            tuples.extend_from_slice(&cur);
            sorted_rank[dense_position(n_atoms, &cur)] = rank;
            let mut denom = 1u128;
            let mut run = 1usize;
            for i in 1..=order {
                if i < order && cur[i] == cur[i - 1] {
                    run += 1;
                } else {
                    denom *= factorial(run);
                    run = 1;
                }
            }
            multiplicity.push(p_fact / denom as f64);
            rank += 1;

            // next non-decreasing tuple
            let Some(i) = (0..order).rev().find(|&i| cur[i] + 1 < n_atoms) else {
                break;
            };
            let v = cur[i] + 1;
            for slot in &mut cur[i..] {
                *slot = v;
            }
        }
        debug_assert_eq!(rank as usize, count);

        let mut dense_to_rank = vec![0u32; len];
        let mut buf = vec![0usize; order];
        for (pos, slot) in dense_to_rank.iter_mut().enumerate() {
            decode_position(n_atoms, pos, &mut buf);
            buf.sort_unstable();
            *slot = sorted_rank[dense_position(n_atoms, &buf)];
        }

        Ok(MultisetIndex {
            n_atoms,
            order,
            tuples,
            dense_to_rank,
            multiplicity,
        })
    }

    /// Shared index for `(n_atoms, order)`; built once per process.
    pub fn shared(n_atoms: usize, order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<IndexCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(idx) = cache.lock().expect("index cache").get(&(n_atoms, order)) {
            return Ok(Arc::clone(idx));
        }
        let built = Arc::new(Self::build(n_atoms, order)?);
        let mut guard = cache.lock().expect("index cache");
        Ok(Arc::clone(guard.entry((n_atoms, order)).or_insert(built)))
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of multisets, `C(n + p - 1, p)`.
    pub fn len(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicity.is_empty()
    }

    pub fn dense_len(&self) -> usize {
        self.dense_to_rank.len()
    }

    /// Sorted atom tuple of the multiset with the given rank.
    pub fn tuple(&self, rank: usize) -> &[usize] {
        &self.tuples[rank * self.order..(rank + 1) * self.order]
    }

    /// Number of distinct tuples with this occupation, `p! / ∏ α_i!`.
    pub fn multiplicity(&self, rank: usize) -> f64 {
        self.multiplicity[rank]
    }

    pub fn rank_of_position(&self, pos: usize) -> usize {
        self.dense_to_rank[pos] as usize
    }

    /// Rank of an arbitrary (unsorted) atom tuple.
    pub fn rank_of(&self, tuple: &[usize]) -> usize {
        self.rank_of_position(dense_position(self.n_atoms, tuple))
    }

    /// Occupation vector `α` of a multiset: `α_i` = multiplicity of atom `i`.
    pub fn occupation(&self, rank: usize) -> Vec<u32> {
        let mut occ = vec![0u32; self.n_atoms];
        for &z in self.tuple(rank) {
            occ[z] += 1;
        }
        occ
    }
}
