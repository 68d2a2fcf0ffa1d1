//! Exact volumes of normal complexes of marked simplicial fans.
//!
//! Given a pure simplicial fan with marked ray generators, a positive
//! definite inner product, and a truncation vector `z`, the crate computes
//! the polytopes that the truncating hyperplanes cut out of each maximal
//! cone, their exact volumes, and the matching intersection-theoretic
//! quantity from the fan's Chow ring — entirely in rational arithmetic.
//! Bergman fans of matroids (with respect to a building set) come with a
//! constructor for truncation vectors that are certified to cut every cone
//! into a combinatorial cube.

pub mod arith;
pub mod chow;
pub mod cli;
pub mod fan;
pub mod fixtures;
pub mod matroid;
pub mod normal;
pub mod rng;
