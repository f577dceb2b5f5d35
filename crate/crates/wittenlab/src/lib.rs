//! Numerical laboratory for the Witten deformation of the de Rham complex.
//!
//! Discretized closed manifolds (cubical tori, icospheres) carry a cochain
//! complex with diagonal Hodge-star inner products. Conjugating the
//! differential by `e^{tf}` gives the Witten complex, whose Laplacian spectra
//! are tracked in `t` and compared with harmonic-oscillator models, with the
//! Morse complex extracted from gradient flow, and with finite torsion
//! identities.

pub mod complexes;
pub mod config;
pub mod derham;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod morse;
pub mod oscillator;
pub mod torsion;
pub mod witten;

pub use error::{Error, Result};
