//! Chaos calculus on finite atomic Poisson spaces.
//!
//! Multiple Wiener–Itô integrals with respect to a compensated Poisson
//! measure are realized exactly on a finite set of atoms: symmetric kernels
//! are stored per multiset, integrals are evaluated pathwise through Charlier
//! polynomials, and every closed-form identity (product formula,
//! fourth-moment identity, carré-du-champ variance) comes with an
//! independent brute-force route to check it against.

pub mod combinatorics;
pub mod error;
pub mod kernels;
pub mod space;

pub use error::{Error, Result};
pub use kernels::{Kernel, SymKernel};
pub use space::MeasureSpace;
pub mod cli;
pub mod diagnostics;
pub mod path;
pub mod product;
