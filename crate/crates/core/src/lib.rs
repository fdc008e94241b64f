//! Numerical engine for solutions of the Darboux-Egoroff system.
//!
//! The crate is organized bottom-up:
//!
//! * [`de`]: points, γ-fields, central differences and Darboux-Egoroff residuals.
//! * [`hurwitz`]: genus-zero Hurwitz seeds: polynomial maps, their critical data
//!   and a Newton chart in the critical values.
//! * [`wave`]: the truncated wave-matrix hierarchy Ψ₀,…,Ψ_D, the C-matrix,
//!   flat coordinates and the prepotential.
//! * [`deform`]: infinitesimal loop-algebra actions on γ and Ψ_d, and the
//!   closed-form special deformation flow of the triple (γ, ω, B).
//! * [`fock`]: an independent oracle evaluating γ and Ψ_d as finite sections of
//!   semi-infinite wedge matrix elements.
//! * [`crosscheck`]: oracle-vs-formula comparisons around the identity element.
//!
//! Sweeps over grids of points run on rayon when the `parallel` feature is on;
//! see [`exec::Exec`].

pub mod crosscheck;
pub mod de;
pub mod deform;
pub mod error;
pub mod exec;
pub mod fock;
pub mod hurwitz;
pub mod linalg;
pub mod wave;

mod ode;

pub use error::{DegorError, Result};
pub use linalg::{CMat, C64};
