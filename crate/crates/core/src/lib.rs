pub mod cli;
pub mod endo_space;
pub mod grassmann_geometry;
pub mod homogeneous_bundle;
pub mod linalg;
pub mod moduli;
pub mod rep_su2;
