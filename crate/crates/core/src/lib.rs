//! Outer space at desk scale: marked metric graphs, Lipschitz distances,
//! folding paths with train-track bookkeeping, free factor projections, and
//! flaring experiments for free-group extensions.

pub mod aut;
pub mod bundle;
pub mod error;
pub mod factors;
pub mod flaring;
pub mod fold;
pub mod graph;
pub mod lipschitz;
pub mod lp;
pub mod marked;
pub mod optimal;
pub mod path;
pub mod profile;
pub mod random;
pub mod rational;
pub mod stallings;
pub mod word;

pub use aut::{Automorphism, IntMatrix};
pub use error::{Error, Result};
pub use rational::{LogScalar, Q};
pub use word::{Basis, CyclicWord, Letter, Word};
