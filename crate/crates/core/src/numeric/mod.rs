//! Numeric building blocks: compensated summation, double-double arithmetic,
//! Gauss–Legendre rules, and small dense solves with condition estimates.

pub mod dd;
pub mod ddlu;
pub mod gauss;
pub mod linalg;
pub mod sum;
pub mod transform;
