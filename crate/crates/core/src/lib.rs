//! Mean values of bounded observables from one binary generalized measurement.
//!
//! Any observable `A` with spectrum in `[a_min, a_max]` can be encoded into a
//! two-outcome POVM whose single probability `p₀` determines `⟨A⟩` exactly.
//! The POVM is realised by one qubit ancilla, a joint unitary and a σ_z
//! readout of the ancilla. For product observables shared between distant
//! parties, the local binary POVMs plus the joint "all zero" probabilities
//! reconstruct `⟨A ⊗ B ⊗ …⟩`, which covers entanglement witnesses and Bell
//! expressions.
//!
//! Modules:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition, PSD
//!   square roots, tensor products, seeded random fixtures.
//! - [`encode`]: spectral bounds, the `(a₋, a₊)` shift/scale, the binary
//!   POVM and mean recovery, non-Hermitian operators.
//! - [`dilate`]: the system ⊗ qubit unitary and ancilla statistics.
//! - [`estimation`]: seeded shot sampling, error bars and the von Neumann
//!   baseline.
//! - [`locc`]: correlation probabilities, product means, witnesses, Bell
//!   expressions over binary probabilities.
//! - [`presets`]: Pauli matrices, Bell/GHZ/thermal states and truncated
//!   oscillator operators.

#![forbid(unsafe_code)]

pub mod dilate;
pub mod encode;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod locc;
pub mod presets;

pub use error::{BoundSide, Error, Result};
pub use num_complex::Complex64;
