//! Exact measure algebra over finite and parameterized families of
//! probability measures.

pub mod binomial;
pub mod cli;
pub mod families;
pub mod hahnext;
pub mod lp;
pub mod measures;
pub mod model;
pub mod rational;
pub mod realsets;
pub mod testing;

pub use measures::{Atom, AtomSet, ProbabilityMeasure, SignedMeasure};
pub use rational::Rational;
