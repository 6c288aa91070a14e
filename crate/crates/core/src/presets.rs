//! Named operators and states: Pauli matrices, Bell/GHZ states, and
//! truncated harmonic-oscillator operators in the Fock basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator, I, ONE, ZERO};

fn hermitian_2x2(entries: [Complex64; 4]) -> HermitianOperator {
    HermitianOperator::new(ComplexMatrix::from_row_slice(2, 2, &entries))
        .expect("Pauli matrices are Hermitian")
}

pub fn pauli_x() -> HermitianOperator {
    hermitian_2x2([ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> HermitianOperator {
    hermitian_2x2([ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> HermitianOperator {
    hermitian_2x2([ONE, ZERO, ZERO, -ONE])
}

/// |index⟩⟨index| in dimension `dim`.
pub fn basis_state(dim: usize, index: usize) -> Result<DensityMatrix> {
    if index >= dim {
        return Err(Error::Invalid(format!(
            "basis index {index} out of range for dimension {dim}"
        )));
    }
    let mut amplitudes = vec![ZERO; dim];
    amplitudes[index] = ONE;
    DensityMatrix::from_ket(&amplitudes)
}

pub fn maximally_mixed(dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    DensityMatrix::new(ComplexMatrix::identity(dim, dim).map(|z| z / dim as f64))
}

/// (|01⟩ − |10⟩)/√2 with factor dims [2, 2].
pub fn singlet() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_ket(&[ZERO, ONE * s, -ONE * s, ZERO])
        .and_then(|rho| rho.with_factor_dims(vec![2, 2]))
        .expect("singlet is a valid state")
}

/// (|0…0⟩ + |1…1⟩)/√2 on `n` qubits.
pub fn ghz(n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let dim = 1usize << n;
    let mut amplitudes = vec![ZERO; dim];
    amplitudes[0] = ONE;
    amplitudes[dim - 1] = ONE;
    DensityMatrix::from_ket(&amplitudes)?.with_factor_dims(vec![2; n])
}

/// Thermal state with mean occupation `nbar`, truncated to `dim` Fock levels
/// and renormalised: p_n ∝ nbar^n / (nbar + 1)^(n+1).
pub fn thermal(nbar: f64, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::Invalid(format!(
            "thermal occupation must be finite and non-negative, got {nbar}"
        )));
    }
    let ratio = nbar / (nbar + 1.0);
    let weights: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let diag = nalgebra::DVector::from_iterator(
        dim,
        weights.iter().map(|w| Complex64::new(w / total, 0.0)),
    );
    DensityMatrix::new(ComplexMatrix::from_diagonal(&diag))
}

/// Truncated annihilation operator a|n⟩ = √n |n−1⟩.
pub fn annihilation(dim: usize) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn number(dim: usize) -> Result<HermitianOperator> {
    let levels: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    HermitianOperator::diagonal(&levels)
}

/// Photon-number parity (−1)^n.
pub fn parity(dim: usize) -> Result<HermitianOperator> {
    let signs: Vec<f64> = (0..dim)
        .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    HermitianOperator::diagonal(&signs)
}

/// x = (a + a†)/√2.
pub fn position(dim: usize) -> Result<HermitianOperator> {
    let a = annihilation(dim)?;
    HermitianOperator::new((&a + a.adjoint()) * Complex64::from(std::f64::consts::FRAC_1_SQRT_2))
}

/// p = i(a† − a)/√2.
pub fn momentum(dim: usize) -> Result<HermitianOperator> {
    let a = annihilation(dim)?;
    HermitianOperator::new((a.adjoint() - &a) * (I * std::f64::consts::FRAC_1_SQRT_2))
}
