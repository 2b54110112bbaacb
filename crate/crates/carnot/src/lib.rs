//! Exact computation with graded and Carnot nilpotent Lie algebras,
//! tangent cones of polynomial horizontal distributions, Lyapunov spectra,
//! and nilmanifold Anosov automorphisms.

pub mod autgroup;
pub mod io;
pub mod lie;
pub mod linalg;
pub mod metivier;
pub mod nilmanifold;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod spectra;
pub mod upoly;
