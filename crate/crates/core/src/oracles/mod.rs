//! Independent reference computations used to validate the implicit
//! solution: lattice extremization, characteristics, a monotone grid scheme,
//! and field comparison.

mod characteristics;
mod compare;
mod hopf;
mod lax_friedrichs;

pub use characteristics::{characteristics_solve, RaySample};
pub use compare::{compare_fields, compare_scattered, ComparisonReport};
pub use hopf::{hopf_bruteforce, HopfResult};
pub use lax_friedrichs::{lax_friedrichs_solve, lax_friedrichs_solve_with, LfOptions, INSTABILITY_FACTOR};
