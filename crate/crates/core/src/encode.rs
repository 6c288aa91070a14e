//! Encoding a bounded observable into a two-outcome POVM.
//!
//! For an observable `A` with spectrum inside `[a_min, a_max]` the shifted,
//! rescaled operator `D' = (a₋ I + A) / a₊` satisfies `0 ≤ D' ≤ I`, where
//!
//! ```text
//! a₋ = max(0, −a_min)        a₊ = max(a₋, a₋ + a_max)
//! ```
//!
//! The POVM has Kraus operators `V₀ = √D'` and `V₁ = √(I − D')`. Outcome 0
//! occurs with probability `p₀ = Tr(V₀²ρ) = (a₋ + ⟨A⟩) / a₊`, so the mean
//! value is recovered from that single number as `⟨A⟩ = a₊ p₀ − a₋`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BoundSide, Error, Result};
use crate::linalg::{
    eig_hermitian, max_abs_diff, trace_of_product, ComplexMatrix, DensityMatrix, Eigen,
    HermitianOperator, SpectralBounds, PSD_TOL,
};

/// Slack allowed on a computed probability before it is treated as an error.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// Shift `a₋` and scale `a₊` mapping the spectrum of `A` into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftScale {
    pub a_minus: f64,
    pub a_plus: f64,
}

impl ShiftScale {
    pub fn from_bounds(bounds: &SpectralBounds) -> Self {
        let a_minus = (-bounds.a_min).max(0.0);
        let a_plus = a_minus.max(a_minus + bounds.a_max);
        Self { a_minus, a_plus }
    }

    /// `a₊ = 0` happens only for the zero observable.
    pub fn is_degenerate(&self) -> bool {
        self.a_plus == 0.0
    }

    /// Probability of outcome 0 implied by a mean value: `(a₋ + mean) / a₊`.
    pub fn p0_for_mean(&self, mean: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (self.a_minus + mean) / self.a_plus
        }
    }
}

pub fn shift_scale(bounds: &SpectralBounds) -> ShiftScale {
    ShiftScale::from_bounds(bounds)
}

/// Exact spectral bounds from the eigensolver.
pub fn spectral_bounds(a: &HermitianOperator) -> Result<SpectralBounds> {
    let eig = eig_hermitian(a)?;
    bounds_of(&eig)
}

fn bounds_of(eig: &Eigen) -> Result<SpectralBounds> {
    let lo = *eig.values.first().ok_or(Error::EmptyDimension)?;
    let hi = *eig.values.last().ok_or(Error::EmptyDimension)?;
    SpectralBounds::new(lo, hi)
}

/// Binary POVM `{V₀, V₁}` encoding one observable.
#[derive(Clone, Debug)]
pub struct BinaryPovm {
    v0: HermitianOperator,
    v1: HermitianOperator,
    effect0: HermitianOperator,
    effect1: HermitianOperator,
    shift_scale: ShiftScale,
    bounds: SpectralBounds,
    degenerate: bool,
}

impl BinaryPovm {
    pub fn dim(&self) -> usize {
        self.v0.dim()
    }

    pub fn v0(&self) -> &HermitianOperator {
        &self.v0
    }

    pub fn v1(&self) -> &HermitianOperator {
        &self.v1
    }

    /// `V₀†V₀`, the effect of outcome 0.
    pub fn effect0(&self) -> &HermitianOperator {
        &self.effect0
    }

    /// `V₁†V₁ = I − V₀†V₀`.
    pub fn effect1(&self) -> &HermitianOperator {
        &self.effect1
    }

    pub fn shift_scale(&self) -> ShiftScale {
        self.shift_scale
    }

    /// The bounds the POVM was built from (tight or user-supplied).
    pub fn bounds(&self) -> SpectralBounds {
        self.bounds
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// ‖V₀†V₀ + V₁†V₁ − I‖_max.
    pub fn completeness_residual(&self) -> f64 {
        let v0 = self.v0.matrix();
        let v1 = self.v1.matrix();
        let sum = v0.adjoint() * v0 + v1.adjoint() * v1;
        max_abs_diff(&sum, &ComplexMatrix::identity(self.dim(), self.dim()))
    }

    /// ‖V₀V₁ − V₁V₀‖_max.
    pub fn commutator_residual(&self) -> f64 {
        let v0 = self.v0.matrix();
        let v1 = self.v1.matrix();
        max_abs_diff(&(v0 * v1), &(v1 * v0))
    }
}

/// Build the POVM for `A`, from its exact spectrum or from caller-certified
/// bounds. Loose bounds are accepted; bounds that cut into the spectrum by
/// more than `PSD_TOL` (relative to the spectral radius) are rejected.
pub fn build_binary_povm(
    a: &HermitianOperator,
    bounds: Option<SpectralBounds>,
) -> Result<BinaryPovm> {
    let eig = eig_hermitian(a)?;
    let exact = bounds_of(&eig)?;
    let bounds = match bounds {
        None => exact,
        Some(b) => {
            let slack = PSD_TOL * exact.a_min.abs().max(exact.a_max.abs()).max(1.0);
            if b.a_min > exact.a_min + slack {
                return Err(Error::InvalidBounds {
                    side: BoundSide::Lower,
                    bound: b.a_min,
                    eigenvalue: exact.a_min,
                });
            }
            if b.a_max < exact.a_max - slack {
                return Err(Error::InvalidBounds {
                    side: BoundSide::Upper,
                    bound: b.a_max,
                    eigenvalue: exact.a_max,
                });
            }
            b
        }
    };
    let ss = ShiftScale::from_bounds(&bounds);
    let dim = a.dim();

    if ss.is_degenerate() {
        let zero = HermitianOperator::zero(dim)?;
        let id = HermitianOperator::identity(dim)?;
        return Ok(BinaryPovm {
            v0: zero.clone(),
            v1: id.clone(),
            effect0: zero,
            effect1: id,
            shift_scale: ss,
            bounds,
            degenerate: true,
        });
    }

    // D' shares A's eigenbasis, so V₀, V₁ and both effects are spectral
    // functions of one decomposition and commute by construction.
    let d_prime = |lambda: f64| ((ss.a_minus + lambda) / ss.a_plus).clamp(0.0, 1.0);
    let wrap = |m: ComplexMatrix| HermitianOperator::new(m);
    Ok(BinaryPovm {
        v0: wrap(eig.reconstruct_with(|l| d_prime(l).sqrt()))?,
        v1: wrap(eig.reconstruct_with(|l| (1.0 - d_prime(l)).sqrt()))?,
        effect0: wrap(eig.reconstruct_with(d_prime))?,
        effect1: wrap(eig.reconstruct_with(|l| 1.0 - d_prime(l)))?,
        shift_scale: ss,
        bounds,
        degenerate: false,
    })
}

/// Clamp a probability that is within [`PROBABILITY_TOL`] of `[0, 1]`.
pub(crate) fn checked_probability(value: f64) -> Result<f64> {
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `p₀ = Re Tr(V₀†V₀ ρ)`.
pub fn exact_p0(povm: &BinaryPovm, rho: &DensityMatrix) -> Result<f64> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho.dim(),
        });
    }
    let p0 = trace_of_product(povm.effect0.matrix(), rho.matrix()).re;
    checked_probability(p0)
}

/// `⟨A⟩ = a₊ p₀ − a₋`; zero for the degenerate (zero-observable) encoding.
pub fn mean_from_p0(p0: f64, ss: &ShiftScale) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::ProbabilityOutOfRange { value: p0 });
    }
    if ss.is_degenerate() {
        return Ok(0.0);
    }
    Ok(ss.a_plus * p0 - ss.a_minus)
}

/// Split `X = H + iK` with `H = (X + X†)/2` and `K = (X − X†)/(2i)`.
pub fn decompose_nonhermitian(x: &ComplexMatrix) -> Result<(HermitianOperator, HermitianOperator)> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let adj = x.adjoint();
    let h = (x + &adj).map(|z| z * 0.5);
    let k = (x - &adj).map(|z| z / Complex64::new(0.0, 2.0));
    Ok((HermitianOperator::new(h)?, HermitianOperator::new(k)?))
}

/// Both halves of a non-Hermitian mean, each from its own binary POVM.
#[derive(Clone, Debug)]
pub struct NonHermitianMean {
    pub value: Complex64,
    pub hermitian_povm: BinaryPovm,
    pub antihermitian_povm: BinaryPovm,
    pub p0_hermitian: f64,
    pub p0_antihermitian: f64,
}

/// `⟨X⟩ = ⟨H⟩ + i⟨K⟩` with both parts recovered through the binary pipeline.
pub fn mean_nonhermitian(x: &ComplexMatrix, rho: &DensityMatrix) -> Result<Complex64> {
    Ok(mean_nonhermitian_detailed(x, rho)?.value)
}

pub fn mean_nonhermitian_detailed(
    x: &ComplexMatrix,
    rho: &DensityMatrix,
) -> Result<NonHermitianMean> {
    let (h, k) = decompose_nonhermitian(x)?;
    let run = |op: &HermitianOperator| -> Result<(BinaryPovm, f64, f64)> {
        let povm = build_binary_povm(op, None)?;
        let p0 = exact_p0(&povm, rho)?;
        let mean = mean_from_p0(p0, &povm.shift_scale())?;
        Ok((povm, p0, mean))
    };
    let (hermitian_povm, p0_hermitian, re) = run(&h)?;
    let (antihermitian_povm, p0_antihermitian, im) = run(&k)?;
    Ok(NonHermitianMean {
        value: Complex64::new(re, im),
        hermitian_povm,
        antihermitian_povm,
        p0_hermitian,
        p0_antihermitian,
    })
}
