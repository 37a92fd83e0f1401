//! Shared numerical substrate and the family-agnostic Stratonovich-Weyl machinery.

pub mod axioms;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod special;
pub mod transforms;
