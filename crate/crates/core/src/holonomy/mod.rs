//! Holonomy representations: the triangle-reflection deformation family, word
//! enumeration with deduplication, spectral invariants and conjugacy census.

mod census;
mod representation;
mod spectral;
mod words;

pub use census::{
    census_from_ball, conjugacy_census, Census, ConjugacyClass, DIVISIBILITY_TOL,
    RELIABILITY_MARGIN,
};
pub use representation::{
    projective_identity_residual, triangle_cartan_matrix, vinberg_triangle, InvariantForm,
    Representation, RELATION_TOL,
};
pub use spectral::{
    eigen_data, eigen_data_matrix, eigen_data_with_inverse, invariants_from_logs, EigenData,
    PROXIMALITY_GAP,
};
pub use words::{word_ball, Alphabet, GroupElement, Lookup, MatrixIndex, WordBall, DEDUP_TOL};
