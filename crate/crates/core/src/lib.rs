//! Numerical toolkit for the spherical-mean Radon transform restricted to
//! spheres centered on a quadric observation surface.
//!
//! The pipeline mirrors the factorization `T = B P R` of the inversion
//! operator: [`forward`] samples the transform `R(f)(z, r)` on a sinogram
//! grid, [`filter`] applies the radial filter `P` column by column (an
//! iterated `(1/2r) d/dr` for odd dimension, a principal-value integral for
//! even dimension), and [`backprojection`] evaluates the weighted
//! back-projection `B` on an image grid. [`microlocal`] holds the partial-data
//! machinery (smooth cutoffs, visible-zone classification, principal symbols)
//! and a small symbol laboratory that verifies the polynomial cancellation
//! identities that make the inversion smoothing-exact on quadrics.

pub mod backprojection;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod microlocal;
pub mod phantom;
pub(crate) mod vecmath;

pub use error::{Error, Result};

/// Maps `f` over `0..count`, preserving index order in the output.
/// Runs on the rayon pool with the `parallel` feature, sequentially
/// otherwise; results are identical either way.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}
