//! Dense linear-algebra kernels.

pub mod charpoly;
pub mod eigen;
pub mod xprec;

pub use eigen::eigenvalues;
