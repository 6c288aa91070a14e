//! Qubit-ancilla dilation of a binary POVM.
//!
//! The joint space is ordered system ⊗ ancilla, so the composite index of
//! `|i⟩ ⊗ |a⟩` is `2i + a`. In the ancilla basis the unitary has the block
//! form
//!
//! ```text
//!        ancilla:  |0⟩    |1⟩
//!   ⟨0|   [        V₀     −V₁ ]
//!   ⟨1|   [        V₁      V₀ ]
//! ```
//!
//! i.e. `U = V₀ ⊗ I + V₁ ⊗ (|1⟩⟨0| − |0⟩⟨1|)`. It is unitary because
//! `V₀² + V₁² = I` and `V₀V₁ = V₁V₀`.

use crate::encode::{checked_probability, BinaryPovm};
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, ComplexMatrix, DensityMatrix, ZERO};

/// Allowed unitarity residual at construction.
pub const UNITARITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DilationUnitary {
    dim_system: usize,
    matrix: ComplexMatrix,
}

impl DilationUnitary {
    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    /// The full `2d × 2d` matrix in system ⊗ ancilla ordering.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// The `d × d` block `⟨row| U |col⟩` on the ancilla.
    pub fn block(&self, row: usize, col: usize) -> ComplexMatrix {
        assert!(row < 2 && col < 2, "ancilla index out of range");
        let d = self.dim_system;
        ComplexMatrix::from_fn(d, d, |i, j| self.matrix[(2 * i + row, 2 * j + col)])
    }

    /// max(‖U†U − I‖_max, ‖UU† − I‖_max).
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let id = ComplexMatrix::identity(n, n);
        let adj = self.matrix.adjoint();
        max_abs_diff(&(&adj * &self.matrix), &id).max(max_abs_diff(&(&self.matrix * &adj), &id))
    }
}

pub fn naimark_unitary(povm: &BinaryPovm) -> Result<DilationUnitary> {
    let d = povm.dim();
    let v0 = povm.v0().matrix();
    let v1 = povm.v1().matrix();
    let mut u = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            u[(2 * i, 2 * j)] = v0[(i, j)];
            u[(2 * i, 2 * j + 1)] = -v1[(i, j)];
            u[(2 * i + 1, 2 * j)] = v1[(i, j)];
            u[(2 * i + 1, 2 * j + 1)] = v0[(i, j)];
        }
    }
    let dilation = DilationUnitary {
        dim_system: d,
        matrix: u,
    };
    let residual = dilation.unitarity_residual();
    if residual > UNITARITY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(dilation)
}

/// U (ρ ⊗ |0⟩⟨0|) U†.
pub fn evolve(u: &DilationUnitary, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let d = u.dim_system;
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let mut joint = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            joint[(2 * i, 2 * j)] = rho.matrix()[(i, j)];
        }
    }
    Ok(&u.matrix * joint * u.matrix.adjoint())
}

/// Unnormalised system states conditioned on ancilla outcome 0 and 1:
/// `⟨a| U(ρ ⊗ |0⟩⟨0|)U† |a⟩`, which equal `V_a ρ V_a†`.
pub fn conditional_states(u: &DilationUnitary, rho: &DensityMatrix) -> Result<[ComplexMatrix; 2]> {
    let evolved = evolve(u, rho)?;
    let d = u.dim_system;
    let pick = |a: usize| ComplexMatrix::from_fn(d, d, |i, j| evolved[(2 * i + a, 2 * j + a)]);
    Ok([pick(0), pick(1)])
}

/// Probability that a σ_z measurement on the ancilla returns "up" after the
/// dilation: `Tr[(I ⊗ |0⟩⟨0|) U(ρ ⊗ |0⟩⟨0|)U†]`.
pub fn ancilla_p0(u: &DilationUnitary, rho: &DensityMatrix) -> Result<f64> {
    let evolved = evolve(u, rho)?;
    let p0 = (0..u.dim_system).fold(ZERO, |acc, i| acc + evolved[(2 * i, 2 * i)]);
    checked_probability(p0.re)
}
