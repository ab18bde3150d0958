//! Structural and dynamical analysis of polynomial reaction networks, aimed
//! at multi-strain epidemic models.
//!
//! The pipeline runs roughly in module order: [`netio`] parses a model,
//! [`siphons`] finds the boundary faces that can be invaded, [`igms`] checks
//! how those faces feed each other, [`ngm`] builds next-generation matrices,
//! [`boundary`] solves for equilibria on faces and evaluates invasion
//! numbers, and [`dynamics`] integrates the ODE.

pub mod boundary;
pub mod dynamics;
pub mod fixtures;
pub mod halton;
pub mod igms;
pub mod linalg;
pub mod lp;
pub mod netio;
pub mod ngm;
pub mod poly;
pub mod report;
pub mod siphons;

pub use netio::{parse_network, ParameterAssignment, ReactionNetwork};
pub use poly::{Polynomial, Rational};

/// How data-parallel loops are run. `Parallel` degrades to sequential when
/// the crate is built without the `parallel` feature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}
