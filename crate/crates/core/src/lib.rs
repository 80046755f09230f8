//! Numerical engine for magnetic quarter-plane tight-binding systems.
//!
//! Two 2-d materials under constant perpendicular magnetic fields meet along
//! the boundary of the first quadrant of Z^2. This crate builds the magnetic
//! translations, flux operator and half-line projections of that geometry
//! exactly on finite windows, assembles Harper-type Hamiltonians for the full
//! system and for its bulk and Iwatsuka-type asymptotic limits, and computes
//! the topological quantities that tie them together: real-space and Bloch
//! Chern numbers, interface winding numbers and current densities, spectral
//! flow of periodic operator families, and Fredholm/gap diagnostics.
//!
//! Everything is deterministic: fixed site ordering, a fixed eigensolver
//! path, seeded randomness only.

pub mod experiments;
pub mod invariants;
pub mod lattice;
pub mod linalg;
pub mod operators;
pub mod report;
pub mod spectral;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("degenerate field: b_corner - b_star in 2*pi*Z")]
    DegenerateField,
    #[error("window too small for translation")]
    WindowTooSmall,
    #[error("empty window or region")]
    EmptyRegion,
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NonHermitian(f64),
    #[error("operator is not unitary on the interior (defect {0:.3e})")]
    NonUnitary(f64),
    #[error("operator is not a projection (defect {0:.3e})")]
    NonProjection(f64),
    #[error("Fermi level on spectrum (distance {0:.3e})")]
    FermiOnSpectrum(f64),
    #[error("no common gap (widest found {0:.3e})")]
    NoCommonGap(f64),
    #[error("band crossing detected (min gap {0:.3e})")]
    BandCrossing(f64),
    #[error("non-converged Chern (imaginary residue {0:.3e})")]
    NonConvergedChern(f64),
    #[error("refine grid: eigenvalue matching ambiguous between t={0} and t={1}")]
    RefineGrid(f64, f64),
    #[error("family not admissible: instantaneous gap closes (min gap {0:.3e})")]
    FamilyNotAdmissible(f64),
    #[error("family not periodic: |H(0) - H(1)| = {0:.3e}")]
    FamilyNotPeriodic(f64),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
