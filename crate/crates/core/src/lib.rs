//! Phase-space representations of quantum systems.
//!
//! Kernels (Wigner, Q, P and the s-parameterized family) for the
//! Heisenberg-Weyl group, spin j, the qubit Wootters lattice, SU(N) and
//! tensor products of these, together with transforms, figures of merit,
//! reconstruction from samples and Moyal dynamics on a phase-space grid.

pub mod composite;
pub mod error;
pub mod foundation;
pub mod hw;
pub mod metrics;
pub mod moyal;
pub mod states;
pub mod su2;
pub mod sun;
pub mod tomography;
pub mod wootters;

pub use error::{PsError, Result};
pub use foundation::kernel::{Domain, EulerPoint, Family, KernelSpec, LatticePoint, PhasePoint, SampledFunction};
pub use foundation::operator::{Ket, Operator, C64};
