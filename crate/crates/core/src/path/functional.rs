//! Functionals of the point configuration and their add-one-cost operators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::SymKernel;
use crate::product::ChaosVector;

use super::integral::{eval_chaos, eval_integral};

/// Growth certificate `|F(N)| <= scale · (|N| + shift)^degree`, with
/// `|N| = Σ_i N_i`. The exact-expectation engine turns it into a tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub scale: f64,
    pub shift: f64,
    pub degree: u32,
}

impl Envelope {
    pub fn constant(c: f64) -> Self {
        Envelope {
            scale: c.abs(),
            shift: 1.0,
            degree: 0,
        }
    }

    fn sum(a: Envelope, b: Envelope) -> Self {
        Envelope {
            scale: a.scale + b.scale,
            shift: a.shift.max(b.shift).max(1.0),
            degree: a.degree.max(b.degree),
        }
    }

    fn product(a: Envelope, b: Envelope) -> Self {
        Envelope {
            scale: a.scale * b.scale,
            shift: a.shift.max(b.shift),
            degree: a.degree + b.degree,
        }
    }
}

type Rule = Arc<dyn Fn(&[u32]) -> f64 + Send + Sync>;

/// A deterministic map from point configurations to reals, `F = 𝔣(η)`,
/// together with a growth envelope and an optional declared chaos order.
#[derive(Clone)]
pub struct PathFunctional {
    n_atoms: usize,
    rule: Rule,
    envelope: Envelope,
    max_order: Option<usize>,
}

impl fmt::Debug for PathFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathFunctional")
            .field("n_atoms", &self.n_atoms)
            .field("envelope", &self.envelope)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl PathFunctional {
    /// Wraps an arbitrary evaluation rule. The caller vouches for the envelope.
    pub fn from_fn(
        n_atoms: usize,
        envelope: Envelope,
        max_order: Option<usize>,
        rule: impl Fn(&[u32]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PathFunctional {
            n_atoms,
            rule: Arc::new(rule),
            envelope,
            max_order,
        }
    }

    pub fn constant(n_atoms: usize, c: f64) -> Self {
        Self::from_fn(n_atoms, Envelope::constant(c), Some(0), move |_| c)
    }

    /// `N_i`, the number of points at one atom.
    pub fn count(n_atoms: usize, atom: usize) -> Self {
        let env = Envelope {
            scale: 1.0,
            shift: 0.0,
            degree: 1,
        };
        Self::from_fn(n_atoms, env, Some(1), move |n| n[atom] as f64)
    }

    /// `I_p(f)`.
    pub fn integral(f: &SymKernel) -> Self {
        let env = Envelope {
            scale: f.max_abs(),
            shift: f.space().total_mass(),
            degree: f.order() as u32,
        };
        let f = f.clone();
        Self::from_fn(f.n_atoms(), env, Some(f.order()), move |n| {
            eval_integral(&f, n)
        })
    }

    /// `Σ_k I_k(f_k)`.
    pub fn chaos(v: &ChaosVector) -> Self {
        let env = v.terms().fold(Envelope::constant(0.0), |acc, (_, k)| {
            Envelope::sum(acc, PathFunctional::integral(k).envelope)
        });
        let v = v.clone();
        Self::from_fn(
            v.space().n_atoms(),
            env,
            Some(v.max_order().unwrap_or(0)),
            move |n| eval_chaos(&v, n),
        )
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn max_order(&self) -> Option<usize> {
        self.max_order
    }

    /// Forgets the declared chaos order (the functional is then treated as opaque).
    pub fn without_declared_order(mut self) -> Self {
        self.max_order = None;
        self
    }

    pub fn eval(&self, counts: &[u32]) -> f64 {
        debug_assert_eq!(counts.len(), self.n_atoms);
        (self.rule)(counts)
    }

    fn check_atoms(&self, other: &PathFunctional) -> Result<()> {
        if self.n_atoms != other.n_atoms {
            return Err(Error::Contract(format!(
                "functionals on {} and {} atoms cannot be combined",
                self.n_atoms, other.n_atoms
            )));
        }
        Ok(())
    }

    /// Pointwise product `F G`.
    pub fn product(&self, other: &PathFunctional) -> Result<Self> {
        self.check_atoms(other)?;
        let (a, b) = (self.rule.clone(), other.rule.clone());
        let order = self.max_order.zip(other.max_order).map(|(p, q)| p + q);
        Ok(Self::from_fn(
            self.n_atoms,
            Envelope::product(self.envelope, other.envelope),
            order,
            move |n| a(n) * b(n),
        ))
    }

    /// `F^k`.
    pub fn powi(&self, k: u32) -> Self {
        let a = self.rule.clone();
        let env = Envelope {
            scale: self.envelope.scale.powi(k as i32),
            shift: self.envelope.shift,
            degree: self.envelope.degree * k,
        };
        Self::from_fn(
            self.n_atoms,
            env,
            self.max_order.map(|p| p * k as usize),
            move |n| a(n).powi(k as i32),
        )
    }

    /// `F + c G`.
    pub fn add_scaled(&self, c: f64, other: &PathFunctional) -> Result<Self> {
        self.check_atoms(other)?;
        let (a, b) = (self.rule.clone(), other.rule.clone());
        let mut env_b = other.envelope;
        env_b.scale *= c.abs();
        let order = self.max_order.zip(other.max_order).map(|(p, q)| p.max(q));
        Ok(Self::from_fn(
            self.n_atoms,
            Envelope::sum(self.envelope, env_b),
            order,
            move |n| a(n) + c * b(n),
        ))
    }
}

/// Add-one cost `D_z^+ F = 𝔣(η + δ_z) − 𝔣(η)`.
pub fn add_one_cost(f: &PathFunctional, atom: usize) -> Result<PathFunctional> {
    iterated_difference(f, &[atom])
}

/// Largest number of points an iterated difference may add (`2^m` evaluations).
pub const MAX_DIFFERENCE_ORDER: usize = 20;

/// `D^{(m)}_{z_1..z_m} F = Σ_{J ⊆ [m]} (−1)^{m−|J|} 𝔣(η + Σ_{i∈J} δ_{z_i})`.
pub fn iterated_difference(f: &PathFunctional, atoms: &[usize]) -> Result<PathFunctional> {
    let m = atoms.len();
    if m == 0 {
        return Err(Error::Contract(
            "iterated difference needs at least one atom".into(),
        ));
    }
    if m > MAX_DIFFERENCE_ORDER {
        return Err(Error::Refused(format!(
            "iterated difference of order {m} needs 2^{m} evaluations (limit {MAX_DIFFERENCE_ORDER})"
        )));
    }
    if let Some(z) = atoms.iter().find(|&&z| z >= f.n_atoms) {
        return Err(Error::Contract(format!("atom {z} out of range")));
    }
    let rule = f.rule.clone();
    // Canonical order makes the result bitwise symmetric in the atoms.
    let mut atoms = atoms.to_vec();
    atoms.sort_unstable();
    let env = Envelope {
        scale: f.envelope.scale * (1u64 << m) as f64,
        shift: f.envelope.shift + m as f64,
        degree: f.envelope.degree,
    };
    Ok(PathFunctional::from_fn(
        f.n_atoms,
        env,
        f.max_order.map(|p| p.saturating_sub(m)),
        move |n| {
            let mut shifted = n.to_vec();
            let mut acc = 0.0;
            for mask in 0u32..(1 << atoms.len()) {
                shifted.copy_from_slice(n);
                for (i, &z) in atoms.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        shifted[z] += 1;
                    }
                }
                let sign = if (atoms.len() as u32 - mask.count_ones()).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                acc += sign * rule(&shifted);
            }
            acc
        },
    ))
}

/// Add-one cost on a chaos expansion through the chaos rule
/// `D_z^+ I_p(f) = p I_{p−1}(f(z, ·))`.
pub fn add_one_cost_chaos(f: &ChaosVector, atom: usize) -> Result<ChaosVector> {
    let mut out = ChaosVector::zero(f.space());
    for (&p, k) in f.terms() {
        if p == 0 {
            continue;
        }
        out.add_scaled_term(p as f64, &k.section(atom)?)?;
    }
    Ok(out)
}

/// `D^{(m)}` on a chaos expansion, applying the chaos rule once per atom.
pub fn iterated_difference_chaos(f: &ChaosVector, atoms: &[usize]) -> Result<ChaosVector> {
    atoms
        .iter()
        .rev()
        .try_fold(f.clone(), |acc, &z| add_one_cost_chaos(&acc, z))
}

/// `K(D^{[W]}(F, G))`: the letters `L` and `B` differentiate `F`, `R` and
/// `B` differentiate `G`, then the two results are multiplied.
pub fn word_product(
    f: &PathFunctional,
    g: &PathFunctional,
    word: &[crate::product::words::Letter],
    atoms: &[usize],
) -> Result<PathFunctional> {
    use crate::product::words::Letter;
    if word.len() != atoms.len() {
        return Err(Error::Contract("word and atom list lengths differ".into()));
    }
    let pick = |keep: fn(&Letter) -> bool| -> Vec<usize> {
        word.iter()
            .zip(atoms)
            .filter(|(w, _)| keep(w))
            .map(|(_, &z)| z)
            .collect()
    };
    let left = pick(|w| matches!(w, Letter::L | Letter::B));
    let right = pick(|w| matches!(w, Letter::R | Letter::B));
    let df = if left.is_empty() {
        f.clone()
    } else {
        iterated_difference(f, &left)?
    };
    let dg = if right.is_empty() {
        g.clone()
    } else {
        iterated_difference(g, &right)?
    };
    df.product(&dg)
}
