//! Half-integral weight forms, the metaplectic cover and numerical
//! verification of the classical Voronoi summation formula.

pub mod arith;
pub mod metaplectic;
pub mod qseries;
pub mod quad;
pub mod bessel;
pub mod forms;
pub mod voronoi;
pub mod suites;
