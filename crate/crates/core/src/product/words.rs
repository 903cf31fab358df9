//! Enumeration of words over `{L, R, B}`.
//!
//! Differentiating a product `F G` with `D_z^+` distributes over the factors
//! in three ways: `L` differentiates `F`, `R` differentiates `G`, `B`
//! differentiates both. A word of length `k` records one such choice per
//! point `z_1, …, z_k`. Taking expectations of the resulting products with
//! the isometry and summing over all words yields the chaos kernel
//! `h_k = (1/k!) E[D^{(k)}(F G)]`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::combinatorics::{factorial, factorial_f64};
use crate::error::{Error, Result};
use crate::kernels::{contract_dense, Kernel, SymKernel};

pub const MAX_WORD_LENGTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    L,
    R,
    B,
}

impl Letter {
    const ALL: [Letter; 3] = [Letter::L, Letter::R, Letter::B];
}

/// Letter counts `(l, r, b)` of a word; `l + r + b` is the word length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Characteristic {
    pub l: usize,
    pub r: usize,
    pub b: usize,
}

impl Characteristic {
    pub fn of(word: &[Letter]) -> Self {
        let mut c = Characteristic { l: 0, r: 0, b: 0 };
        for w in word {
            match w {
                Letter::L => c.l += 1,
                Letter::R => c.r += 1,
                Letter::B => c.b += 1,
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.l + self.r + self.b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether words of this characteristic can contribute to `h_k` for a
    /// product of integrals of orders `p` and `q`: neither factor is
    /// differentiated beyond its order, and both leftover orders agree.
    pub fn survives(&self, p: usize, q: usize) -> bool {
        self.l + self.b <= p && self.r + self.b <= q && p - self.l - self.b == q - self.r - self.b
    }

    /// `k! / (l! r! b!)`, the number of words with this characteristic.
    pub fn class_size(&self) -> u128 {
        factorial(self.len()) / (factorial(self.l) * factorial(self.r) * factorial(self.b))
    }
}

/// Decodes word number `code` of length `k` (base 3, first letter most significant).
pub fn decode_word(mut code: u64, k: usize, out: &mut Vec<Letter>) {
    out.clear();
    out.resize(k, Letter::L);
    for slot in out.iter_mut().rev() {
        *slot = Letter::ALL[(code % 3) as usize];
        code /= 3;
    }
}

/// Output of [`word_oracle_h`].
#[derive(Debug, Clone)]
pub struct WordOracleOutput {
    pub kernel: SymKernel,
    /// Number of enumerated words per surviving characteristic.
    pub class_counts: BTreeMap<Characteristic, u64>,
    pub words_enumerated: u64,
    pub words_discarded: u64,
}

/// Closed form of the summed contribution of one characteristic class:
/// `p! q! / (l! r! b! (p−l−b)!) · (f ⋆_{p−l}^{p−l−b} g)~`.
pub fn class_kernel(f: &SymKernel, g: &SymKernel, chi: Characteristic) -> Result<SymKernel> {
    let (p, q) = (f.order(), g.order());
    if !chi.survives(p, q) {
        return SymKernel::zeros(f.space(), chi.len());
    }
    let coef = factorial(p) * factorial(q)
        / (factorial(chi.l) * factorial(chi.r) * factorial(chi.b) * factorial(p - chi.l - chi.b));
    let c = contract_dense(&f.expand(), &g.expand(), p - chi.l, p - chi.l - chi.b)?;
    Ok(c.symmetrize().scaled(coef as f64))
}

/// Recomputes `h_k` for `I_p(f) I_q(g)` by enumerating all `3^k` words.
///
/// Every surviving word contributes `p! q! / ((p−l−b)! k!)` times the
/// contraction `f ⋆_{p−l}^{p−l−b} g` evaluated with `z_i` placed in the
/// `B`, `L` or `R` argument block according to the `i`-th letter. No
/// symmetrization is applied; symmetry of the result comes from the sum
/// over words.
pub fn word_oracle_h(f: &SymKernel, g: &SymKernel, k: usize) -> Result<WordOracleOutput> {
    let (p, q) = (f.order(), g.order());
    if k > p + q {
        return Err(Error::Contract(format!(
            "target order {k} exceeds p + q = {}",
            p + q
        )));
    }
    if k > MAX_WORD_LENGTH {
        return Err(Error::Refused(format!(
            "word enumeration capped at length {MAX_WORD_LENGTH}, requested {k}"
        )));
    }
    let (fd, gd) = (f.expand(), g.expand());
    let mut out = SymKernel::zeros(f.space(), k)?;
    let mut contractions: BTreeMap<Characteristic, Kernel> = BTreeMap::new();
    let mut class_counts = BTreeMap::new();
    let mut discarded = 0u64;
    let total = 3u64.pow(k as u32);
    let k_fact = factorial_f64(k);
    let ranks = out.index().len();

    let mut word = Vec::with_capacity(k);
    let mut slots = vec![0usize; k];
    let mut args = vec![0usize; k];
    let mut values = vec![0.0; ranks];
    for code in 0..total {
        decode_word(code, k, &mut word);
        let chi = Characteristic::of(&word);
        if !chi.survives(p, q) {
            discarded += 1;
            continue;
        }
        *class_counts.entry(chi).or_insert(0u64) += 1;
        let c = match contractions.entry(chi) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(contract_dense(&fd, &gd, p - chi.l, p - chi.l - chi.b)?),
        };
        let weight = (factorial(p) * factorial(q) / factorial(p - chi.l - chi.b)) as f64 / k_fact;

        // slot of z_i: B block first, then L, then R; stable within a block
        let mut seen = [0usize; 3];
        for (i, w) in word.iter().enumerate() {
            let (base, j) = match w {
                Letter::B => (0, 2),
                Letter::L => (chi.b, 0),
                Letter::R => (chi.b + chi.l, 1),
            };
            slots[i] = base + seen[j];
            seen[j] += 1;
        }
        for (rank, v) in values.iter_mut().enumerate() {
            let z = out.index().tuple(rank);
            for (i, &s) in slots.iter().enumerate() {
                args[s] = z[i];
            }
            *v += weight * c.get(&args);
        }
    }
    out.values_mut().copy_from_slice(&values);
    Ok(WordOracleOutput {
        kernel: out,
        class_counts,
        words_enumerated: total,
        words_discarded: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::{h_kernels, max_rel_deviation};
    use crate::space::MeasureSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_sym(sp: &Arc<MeasureSpace>, order: usize, rng: &mut ChaCha8Rng) -> SymKernel {
        SymKernel::from_fn(sp, order, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn top_order_is_the_symmetrized_tensor_product() {
        let sp = Arc::new(MeasureSpace::new(vec![1.0, 0.5]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = random_sym(&sp, 2, &mut rng);
        let g = random_sym(&sp, 1, &mut rng);
        let out = word_oracle_h(&f, &g, 3).unwrap();
        // only words with every letter spent on a single factor survive
        let chi = Characteristic { l: 2, r: 1, b: 0 };
        assert_eq!(
            out.class_counts.keys().copied().collect::<Vec<_>>(),
            vec![chi]
        );
        assert_eq!(out.class_counts[&chi] as u128, chi.class_size());
        let tensor = f.expand().tensor(&g.expand()).unwrap().symmetrize();
        assert!(max_rel_deviation(&out.kernel, &tensor) <= 1e-14);

        // the empty word survives only for equal orders
        let out = word_oracle_h(&f, &g, 0).unwrap();
        assert!(out.class_counts.is_empty());
        assert!(out.kernel.is_zero());
    }

    #[test]
    fn first_order_single_letter_words() {
        let sp = Arc::new(MeasureSpace::new(vec![1.0, 2.0, 0.25]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let f = random_sym(&sp, 1, &mut rng);
        let g = random_sym(&sp, 1, &mut rng);
        let out = word_oracle_h(&f, &g, 1).unwrap();
        assert_eq!(out.words_enumerated, 3);
        assert_eq!(out.words_discarded, 2);
        assert_eq!(
            out.class_counts.keys().copied().collect::<Vec<_>>(),
            vec![Characteristic { l: 0, r: 0, b: 1 }]
        );
        for z in 0..3 {
            assert!((out.kernel.get(&[z]) - f.get(&[z]) * g.get(&[z])).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_matches_closed_form_for_second_order() {
        let sp = Arc::new(MeasureSpace::new(vec![0.6, 1.4]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = random_sym(&sp, 2, &mut rng);
        let g = random_sym(&sp, 2, &mut rng);
        let h = h_kernels(&f, &g).unwrap();
        for k in 0..=4 {
            let out = word_oracle_h(&f, &g, k).unwrap();
            assert!(
                max_rel_deviation(&out.kernel, &h[4 - k]) <= 1e-12,
                "k = {k}"
            );
            for (chi, count) in &out.class_counts {
                assert_eq!(*count as u128, chi.class_size());
            }
        }
    }

    #[test]
    fn class_kernels_sum_to_oracle() {
        let sp = Arc::new(MeasureSpace::new(vec![0.6, 1.4, 1.0]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let f = random_sym(&sp, 3, &mut rng);
        let g = random_sym(&sp, 2, &mut rng);
        for k in 0..=5 {
            let out = word_oracle_h(&f, &g, k).unwrap();
            let mut sum = SymKernel::zeros(&sp, k).unwrap();
            for chi in out.class_counts.keys() {
                sum.add_scaled(1.0, &class_kernel(&f, &g, *chi).unwrap())
                    .unwrap();
            }
            assert!(max_rel_deviation(&sum, &out.kernel) <= 1e-12, "k = {k}");
        }
    }

    #[test]
    fn rejects_orders_beyond_p_plus_q() {
        let sp = Arc::new(MeasureSpace::uniform(1, 1.0).unwrap());
        let f = SymKernel::zeros(&sp, 1).unwrap();
        assert!(matches!(word_oracle_h(&f, &f, 3), Err(Error::Contract(_))));
    }
}
