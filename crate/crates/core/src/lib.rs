//! Numerical explicit formulas for elliptic curves and Dirichlet characters,
//! and the family averages ("murmurations") they produce.

pub mod arith;
pub mod cli;
pub mod dirichlet;
pub mod elliptic;
pub mod explicit;
pub mod family;
pub mod io;
pub mod lfunc;
pub mod verify;
