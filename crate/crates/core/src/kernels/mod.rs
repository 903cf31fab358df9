//! Symmetric-kernel tensor algebra: dense and multiset storage,
//! symmetrization, inner products, tensor products and contractions.

mod dense;
pub mod io;
pub mod multiset;
mod sym;

use std::sync::Arc;

pub use dense::Kernel;
pub use multiset::MultisetIndex;
pub use sym::{SymKernel, SYMMETRY_TOL};

use crate::error::{Error, Result};
use crate::space::MeasureSpace;

pub(crate) fn same_space(a: &Arc<MeasureSpace>, b: &Arc<MeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Contraction kernel `f ⋆_r^l g` of order `p + q − r − l`.
///
/// `r` arguments are shared between `f` and `g`; the first `l` of them are
/// integrated against `μ^l`, the remaining `r − l` are identified. Result
/// arguments are ordered `(y_1..y_{r−l}, t_1..t_{p−r}, s_1..s_{q−r})` where
/// `f` sees `(x, y, t)` and `g` sees `(x, y, s)`.
pub fn contract_dense(f: &Kernel, g: &Kernel, r: usize, l: usize) -> Result<Kernel> {
    let (p, q) = (f.order(), g.order());
    if l > r || r > p.min(q) {
        return Err(Error::Contract(format!(
            "contraction indices need 0 <= l <= r <= min(p, q); got r = {r}, l = {l}, p = {p}, q = {q}"
        )));
    }
    if !same_space(f.space(), g.space()) {
        return Err(Error::Contract(
            "contraction of kernels on different spaces".into(),
        ));
    }
    let n = f.n_atoms();
    let pow = |e: usize| n.pow(e as u32);
    let (nx, ny, nt, ns) = (pow(l), pow(r - l), pow(p - r), pow(q - r));
    let (fx_stride, fy_stride) = (pow(p - l), pow(p - r));
    let (gx_stride, gy_stride) = (pow(q - l), pow(q - r));
    let wx = Kernel::weights(f.space(), l)?;

    let (fv, gv) = (f.values(), g.values());
    let mut values = vec![0.0; ny * nt * ns];
    for y in 0..ny {
        for t in 0..nt {
            for s in 0..ns {
                let mut acc = 0.0;
                for (x, w) in wx.iter().enumerate().take(nx) {
                    acc += w
                        * fv[x * fx_stride + y * fy_stride + t]
                        * gv[x * gx_stride + y * gy_stride + s];
                }
                values[(y * nt + t) * ns + s] = acc;
            }
        }
    }
    Kernel::from_values(f.space(), p + q - r - l, values)
}

/// Contraction of two symmetric kernels; see [`contract_dense`]. The result
/// is generally not symmetric when `r > l`.
pub fn contract(f: &SymKernel, g: &SymKernel, r: usize, l: usize) -> Result<Kernel> {
    contract_dense(&f.expand(), &g.expand(), r, l)
}

/// `f ⊗_r g = f ⋆_r^r g`.
pub fn contract_equal(f: &SymKernel, g: &SymKernel, r: usize) -> Result<Kernel> {
    contract(f, g, r, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(masses: &[f64]) -> Arc<MeasureSpace> {
        Arc::new(MeasureSpace::new(masses.to_vec()).unwrap())
    }

    fn random_dense(sp: &Arc<MeasureSpace>, order: usize, rng: &mut ChaCha8Rng) -> Kernel {
        Kernel::from_fn(sp, order, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_sym(sp: &Arc<MeasureSpace>, order: usize, rng: &mut ChaCha8Rng) -> SymKernel {
        SymKernel::from_fn(sp, order, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0..n.pow(k as u32))
            .map(|pos| {
                let mut t = vec![0; k];
                multiset::decode_position(n, pos, &mut t);
                t
            })
            .collect()
    }

    /// Literal transcription of the contraction definition: iterate over all
    /// argument tuples of `f` and `g`, keep the pairs that agree on the
    /// shared block, and accumulate into the output slot.
    fn contraction_oracle(f: &Kernel, g: &Kernel, r: usize, l: usize) -> Vec<f64> {
        let (p, q, n) = (f.order(), g.order(), f.n_atoms());
        let sp = f.space();
        let out_order = p + q - r - l;
        let mut out = vec![0.0; n.pow(out_order as u32)];
        for a in all_tuples(n, p) {
            for b in all_tuples(n, q) {
                if a[..r] != b[..r] {
                    continue;
                }
                let w: f64 = a[..l].iter().map(|&z| sp.mass(z)).product();
                let mut slot = Vec::new();
                slot.extend_from_slice(&a[l..r]);
                slot.extend_from_slice(&a[r..]);
                slot.extend_from_slice(&b[r..]);
                out[multiset::dense_position(n, &slot)] += w * f.get(&a) * g.get(&b);
            }
        }
        out
    }

    #[test]
    fn symmetrize_fixed_point() {
        let sp = space(&[1.0, 2.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_sym(&sp, 3, &mut rng);
        let back = f.expand().symmetrize();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn symmetrize_two_term_average() {
        let sp = space(&[1.0, 1.0]);
        let f = Kernel::from_fn(&sp, 2, |t| if t == [0, 1] { 1.0 } else { 0.0 }).unwrap();
        let s = f.symmetrize();
        assert_eq!(s.get(&[0, 1]), 0.5);
        assert_eq!(s.get(&[1, 0]), 0.5);
        assert_eq!(s.get(&[0, 0]), 0.0);
        assert_eq!(s.get(&[1, 1]), 0.0);
    }

    #[test]
    fn symmetrize_matches_permutation_average() {
        let sp = space(&[1.0, 0.3, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_dense(&sp, 3, &mut rng);
        let s = f.symmetrize();
        for z in all_tuples(3, 3) {
            let perms: Vec<Vec<usize>> = (0..3).permutations(3).collect();
            let avg: f64 = perms
                .iter()
                .map(|pi| f.get(&[z[pi[0]], z[pi[1]], z[pi[2]]]))
                .sum::<f64>()
                / 6.0;
            assert!((s.get(&z) - avg).abs() < 1e-14);
        }
    }

    #[test]
    fn inner_single_weighted_term() {
        let sp = space(&[0.5, 1.0]);
        let f = SymKernel::from_fn(&sp, 1, |t| if t[0] == 0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(f.inner(&f).unwrap(), 0.5);
        let g = SymKernel::from_fn(&sp, 1, |t| if t[0] == 1 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(f.inner(&g).unwrap(), 0.0);
    }

    #[test]
    fn inner_matches_double_loop() {
        let sp = space(&[0.7, 1.3, 2.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_sym(&sp, 2, &mut rng);
        let g = random_sym(&sp, 2, &mut rng);
        let mut direct = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                direct += f.get(&[i, j]) * g.get(&[i, j]) * sp.mass(i) * sp.mass(j);
            }
        }
        assert!((f.inner(&g).unwrap() - direct).abs() < 1e-14);
        assert!((f.expand().inner(&g.expand()).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn inner_rejects_mismatched_orders() {
        let sp = space(&[1.0]);
        let f = SymKernel::zeros(&sp, 1).unwrap();
        let g = SymKernel::zeros(&sp, 2).unwrap();
        assert!(matches!(f.inner(&g), Err(Error::Contract(_))));
        let other = space(&[2.0]);
        let h = SymKernel::zeros(&other, 1).unwrap();
        assert!(matches!(f.inner(&h), Err(Error::Contract(_))));
    }

    #[test]
    fn full_identification_is_pointwise_square() {
        let sp = space(&[1.0, 0.4]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_sym(&sp, 2, &mut rng);
        let sq = contract(&f, &f, 2, 0).unwrap();
        let dense = f.expand();
        for (a, b) in sq.values().iter().zip(dense.values()) {
            assert_eq!(*a, b * b);
        }
    }

    #[test]
    fn zero_contraction_is_tensor_product() {
        let sp = space(&[1.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_sym(&sp, 1, &mut rng);
        let g = random_sym(&sp, 2, &mut rng);
        let t = contract(&f, &g, 0, 0).unwrap();
        assert_eq!(t.order(), 3);
        for z in all_tuples(2, 3) {
            assert_eq!(t.get(&z), f.get(&z[..1]) * g.get(&z[1..]));
        }
    }

    #[test]
    fn hand_computed_full_contraction() {
        let sp = space(&[1.0, 2.0]);
        let f = SymKernel::from_values(&sp, 1, vec![1.0, 2.0]).unwrap();
        let g = SymKernel::from_values(&sp, 1, vec![3.0, 4.0]).unwrap();
        let c = contract(&f, &g, 1, 1).unwrap();
        assert_eq!(c.order(), 0);
        assert_eq!(c.values()[0], 19.0);
    }

    #[test]
    fn contraction_rejects_bad_indices() {
        let sp = space(&[1.0]);
        let f = SymKernel::zeros(&sp, 2).unwrap();
        let g = SymKernel::zeros(&sp, 1).unwrap();
        assert!(matches!(contract(&f, &g, 2, 0), Err(Error::Contract(_))));
        assert!(matches!(contract(&f, &g, 0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn from_dense_rejects_asymmetric() {
        let sp = space(&[1.0, 1.0]);
        let f = Kernel::from_fn(&sp, 2, |t| t[0] as f64).unwrap();
        assert!(matches!(
            SymKernel::from_dense(&f),
            Err(Error::Validation(_))
        ));
        let g = Kernel::from_fn(&sp, 2, |t| (t[0] + t[1]) as f64).unwrap();
        assert!(SymKernel::from_dense(&g).is_ok());
    }

    #[test]
    fn section_fixes_first_argument() {
        let sp = space(&[1.0, 2.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_sym(&sp, 3, &mut rng);
        let s = f.section(1).unwrap();
        assert_eq!(s.order(), 2);
        assert_eq!(s.get(&[2, 0]), f.get(&[1, 2, 0]));
    }

    fn small_case() -> impl Strategy<Value = (Vec<f64>, usize, usize, usize, usize, u64)> {
        (1usize..=3, 0usize..=3, 0usize..=3, any::<u64>()).prop_flat_map(|(n, p, q, seed)| {
            let m = p.min(q);
            (
                proptest::collection::vec(0.1f64..2.0, n),
                Just(p),
                Just(q),
                0..=m,
                Just(seed),
            )
                .prop_flat_map(|(masses, p, q, r, seed)| {
                    (Just(masses), Just(p), Just(q), Just(r), 0..=r, Just(seed))
                })
        })
    }

    proptest! {
        #[test]
        fn contraction_matches_nested_loop_oracle((masses, p, q, r, l, seed) in small_case()) {
            let sp = space(&masses);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_sym(&sp, p, &mut rng);
            let g = random_sym(&sp, q, &mut rng);
            let fast = contract(&f, &g, r, l).unwrap();
            let slow = contraction_oracle(&f.expand(), &g.expand(), r, l);
            prop_assert_eq!(fast.values().len(), slow.len());
            for (a, b) in fast.values().iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn equal_index_contraction_obeys_cauchy_schwarz((masses, p, q, r, _l, seed) in small_case()) {
            let sp = space(&masses);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_sym(&sp, p, &mut rng);
            let g = random_sym(&sp, q, &mut rng);
            let c = contract_equal(&f, &g, r).unwrap();
            prop_assert!(c.norm() <= f.norm() * g.norm() * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn tensor_norm_is_product_of_norms((masses, p, q, _r, _l, seed) in small_case()) {
            let sp = space(&masses);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_sym(&sp, p, &mut rng);
            let g = random_sym(&sp, q, &mut rng);
            let t = f.expand().tensor(&g.expand()).unwrap();
            let expect = f.norm() * g.norm();
            prop_assert!((t.norm() - expect).abs() <= 1e-12 * expect.max(1e-300));
        }

        #[test]
        fn symmetrize_is_idempotent_contraction(
            masses in proptest::collection::vec(0.1f64..2.0, 1..=3),
            order in 0usize..=3,
            seed in any::<u64>(),
        ) {
            let sp = space(&masses);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_dense(&sp, order, &mut rng);
            let s = f.symmetrize();
            let twice = s.expand().symmetrize();
            for (a, b) in s.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
            }
            prop_assert!(s.norm() <= f.norm() * (1.0 + 1e-12));
        }
    }
}
