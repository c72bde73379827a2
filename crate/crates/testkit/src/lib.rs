//! Shared fixtures, a deterministic generator of numeric C functions and
//! scripted fake compilers for the test suites.

pub mod fixtures;
pub mod fake;
pub mod gen;
