//! Exact game-theoretic oracle for small boards.

pub mod bits;
pub mod case;
pub mod certificate;
pub mod dead;
pub mod solver;

pub use case::{check_case, verify_case, CaseViolation};
pub use certificate::{verify_virtual_connection, Certificate, Refutation};
pub use dead::{is_captured, is_dead};
pub use solver::{brute_force, OracleError, SolveResult, Solver};
