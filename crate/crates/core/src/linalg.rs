//! Dense complex linear algebra: Hermitian operators, density matrices,
//! spectral decomposition, PSD square roots and tensor products.
//!
//! Storage is `nalgebra::DMatrix<Complex64>` throughout. All targets are
//! desk-scale (dimension ≤ 256), so nothing here is sparse or blocked.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Allowed ‖M − M†‖_max, relative to max(1, ‖M‖_max).
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Allowed negative eigenvalue magnitude, relative to max(1, ‖M‖_max).
pub const PSD_TOL: f64 = 1e-9;
/// Allowed |Tr ρ − 1|.
pub const TRACE_TOL: f64 = 1e-9;
/// Relative residual required of every spectral reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// ‖a − b‖_max. Panics on shape mismatch.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Tr(a·b) without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A square complex matrix equal to its adjoint within [`HERMITICITY_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::EmptyDimension);
        }
        let residual = hermiticity_residual(&matrix);
        if residual > HERMITICITY_TOL * max_norm(&matrix).max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { matrix })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDimension);
        }
        let diag = nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        );
        Ok(Self {
            matrix: ComplexMatrix::from_diagonal(&diag),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Real scalar multiple.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    /// Real linear combination Σ cᵢ Hᵢ of operators of equal dimension.
    pub fn linear_combination(terms: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::EmptyList)?;
        let dim = first.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (c, op) in terms {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            acc += op.matrix.map(|z| z * *c);
        }
        Ok(Self { matrix: acc })
    }
}

/// Spectral bounds of an observable: every eigenvalue lies in `[a_min, a_max]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralBounds {
    pub a_min: f64,
    pub a_max: f64,
}

impl SpectralBounds {
    pub fn new(a_min: f64, a_max: f64) -> Result<Self> {
        if !a_min.is_finite() || !a_max.is_finite() || a_min > a_max {
            return Err(Error::InvertedBounds { a_min, a_max });
        }
        Ok(Self { a_min, a_max })
    }

    /// Widen both sides by `slack`.
    pub fn widened(&self, slack: f64) -> Result<Self> {
        Self::new(self.a_min - slack, self.a_max + slack)
    }
}

/// A state: Hermitian, positive semidefinite, unit trace, with an optional
/// tensor-factor structure for multipartite systems.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    factor_dims: Option<Vec<usize>>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)?;
        let trace = op.matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace {
                re: trace.re,
                im: trace.im,
            });
        }
        let eig = eig_hermitian(&op)?;
        let floor = -PSD_TOL * max_norm(&op.matrix).max(1.0);
        if let Some(&lowest) = eig.values.first() {
            if lowest < floor {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: lowest });
            }
        }
        Ok(Self {
            matrix: op.matrix,
            factor_dims: None,
        })
    }

    /// Attach a tensor-factor structure; the product must equal the dimension.
    pub fn with_factor_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::EmptyDimension);
        }
        let product: usize = dims.iter().product();
        if product != self.dim() {
            return Err(Error::FactorDims {
                dims,
                dim: self.dim(),
            });
        }
        self.factor_dims = Some(dims);
        Ok(self)
    }

    /// |ψ⟩⟨ψ| for a normalised (or normalisable) ket.
    pub fn from_ket(amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::EmptyDimension);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroKet);
        }
        let psi =
            nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|z| z / norm));
        Self::new(&psi * psi.adjoint())
    }

    /// Tensor product of states; factor dims are concatenated.
    pub fn product(states: &[&DensityMatrix]) -> Result<Self> {
        let mats: Vec<&ComplexMatrix> = states.iter().map(|s| &s.matrix).collect();
        let matrix = tensor(&mats)?;
        let dims = states
            .iter()
            .flat_map(|s| s.factor_dims.clone().unwrap_or_else(|| vec![s.dim()]))
            .collect();
        Self::new(matrix)?.with_factor_dims(dims)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn factor_dims(&self) -> Option<&[usize]> {
        self.factor_dims.as_deref()
    }
}

/// Eigendecomposition H = U diag(λ) U† with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// U f(diag λ) U†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

pub fn eig_hermitian(h: &HermitianOperator) -> Result<Eigen> {
    let dim = h.dim();
    let max_iter = 1000 + 100 * dim;
    let decomposition = h
        .matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_iter)
        .ok_or(Error::EigenNoConvergence { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
    let values = order
        .iter()
        .map(|&k| decomposition.eigenvalues[k])
        .collect();
    let mut vectors = ComplexMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &decomposition.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

/// Apply `f` to the spectrum of a PSD operator after clamping eigenvalues in
/// `[-PSD_TOL, 0)` to zero.
pub(crate) fn psd_function(
    p: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<(Eigen, ComplexMatrix)> {
    let mut eig = eig_hermitian(p)?;
    let floor = -PSD_TOL * max_norm(&p.matrix).max(1.0);
    if let Some(&lowest) = eig.values.first() {
        if lowest < floor {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: lowest });
        }
    }
    for v in eig.values.iter_mut() {
        *v = v.max(0.0);
    }
    let result = eig.reconstruct_with(f);
    Ok((eig, result))
}

/// Principal square root of a positive semidefinite operator.
pub fn sqrt_psd(p: &HermitianOperator) -> Result<HermitianOperator> {
    let (_, root) = psd_function(p, f64::sqrt)?;
    Ok(HermitianOperator { matrix: root })
}

/// Re Tr(Aρ).
pub fn expectation(a: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: rho.dim(),
        });
    }
    let value = trace_of_product(&a.matrix, &rho.matrix);
    let allowed = 1e-10 * max_norm(&a.matrix).max(1.0);
    if value.im.abs() > allowed {
        return Err(Error::ComplexExpectation { im: value.im });
    }
    Ok(value.re)
}

/// Tr(Xρ) for an arbitrary square X.
pub fn complex_expectation(x: &ComplexMatrix, rho: &DensityMatrix) -> Result<Complex64> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    if x.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: rho.dim(),
        });
    }
    Ok(trace_of_product(x, &rho.matrix))
}

/// Kronecker product in list order.
pub fn tensor(ops: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = ops.split_first().ok_or(Error::EmptyList)?;
    Ok(rest
        .iter()
        .fold((*first).clone(), |acc, op| acc.kronecker(op)))
}

/// Tensor product of Hermitian operators (Hermitian by construction).
pub fn tensor_hermitian(ops: &[&HermitianOperator]) -> Result<HermitianOperator> {
    let mats: Vec<&ComplexMatrix> = ops.iter().map(|op| &op.matrix).collect();
    Ok(HermitianOperator {
        matrix: tensor(&mats)?,
    })
}

/// Reduced state on the factors listed in `keep` (ascending, no repeats).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.factor_dims().ok_or(Error::MissingFactorDims)?.to_vec();
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidSubsystems {
            keep: keep.to_vec(),
            parties: dims.len(),
        });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    // Row-major multi-index with the first factor most significant.
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut r = kept_idx;
        for (pos, &k) in keep.iter().enumerate().rev() {
            digits[k] = r % kept_dims[pos];
            r /= kept_dims[pos];
        }
        let mut r = traced_idx;
        for (pos, &k) in traced.iter().enumerate().rev() {
            digits[k] = r % traced_dims[pos];
            r /= traced_dims[pos];
        }
        digits
            .iter()
            .zip(&dims)
            .fold(0usize, |acc, (&digit, &d)| acc * d + digit)
    };

    let mut reduced = ComplexMatrix::zeros(kept_total, kept_total);
    for i in 0..kept_total {
        for j in 0..kept_total {
            let mut acc = ZERO;
            for t in 0..traced_total {
                acc += rho.matrix[(compose(i, t), compose(j, t))];
            }
            reduced[(i, j)] = acc;
        }
    }
    let out = DensityMatrix::new(reduced)?;
    if kept_dims.is_empty() {
        Ok(out)
    } else {
        out.with_factor_dims(kept_dims)
    }
}

fn gaussian_matrix(dim: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// (G + G†)·scale/2 for a seeded complex Gaussian G.
pub fn random_hermitian(dim: usize, seed: u64, scale: f64) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = gaussian_matrix(dim, &mut rng);
    let matrix = (&g + g.adjoint()).map(|z| z * (scale / 2.0));
    Ok(HermitianOperator { matrix })
}

/// G G† / Tr(G G†) for a seeded complex Gaussian G.
pub fn random_density(dim: usize, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = gaussian_matrix(dim, &mut rng);
    let gg = &g * g.adjoint();
    let trace = gg.trace().re;
    DensityMatrix::new(gg.map(|z| z / trace))
}

/// Seeded complex Gaussian matrix with no structure; used for non-Hermitian inputs.
pub fn random_complex(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(gaussian_matrix(dim, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{pauli_x, pauli_z, singlet};

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let diff = max_abs_diff(a, b);
        assert!(diff <= tol, "matrices differ by {diff:e}");
    }

    #[test]
    fn eig_of_pauli_z() {
        let eig = eig_hermitian(&pauli_z()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn eig_of_identity() {
        let eig = eig_hermitian(&HermitianOperator::identity(4).unwrap()).unwrap();
        assert_eq!(eig.values, vec![1.0; 4]);
        let u = &eig.vectors;
        assert_close(&(u.adjoint() * u), &identity(4), 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let h = random_hermitian(8, 11, 1.0).unwrap();
        let eig = eig_hermitian(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let tol = RECONSTRUCTION_TOL * max_norm(h.matrix());
        assert_close(&eig.reconstruct(), h.matrix(), tol);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = sqrt_psd(&HermitianOperator::diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert_close(
            r.matrix(),
            HermitianOperator::diagonal(&[2.0, 3.0]).unwrap().matrix(),
            1e-14,
        );
        let r = sqrt_psd(&HermitianOperator::identity(5).unwrap()).unwrap();
        assert_close(r.matrix(), &identity(5), 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let q = random_hermitian(6, 5, 1.0).unwrap();
        let p = HermitianOperator::new(q.matrix() * q.matrix()).unwrap();
        let r = sqrt_psd(&p).unwrap();
        let tol = 1e-10 * max_norm(p.matrix()).max(1.0);
        assert_close(&(r.matrix() * r.matrix()), p.matrix(), tol);
    }

    #[test]
    fn sqrt_rejects_negative_spectrum() {
        let err = sqrt_psd(&HermitianOperator::diagonal(&[1.0, -0.5]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemidefinite { eigenvalue } if eigenvalue == -0.5));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalue() {
        let r = sqrt_psd(&HermitianOperator::diagonal(&[1.0, -1e-12]).unwrap()).unwrap();
        assert_eq!(r.matrix()[(1, 1)], ZERO);
    }

    #[test]
    fn pauli_z_expectations() {
        let up = DensityMatrix::from_ket(&[ONE, ZERO]).unwrap();
        assert_eq!(expectation(&pauli_z(), &up).unwrap(), 1.0);
        let mixed = DensityMatrix::new(identity(2).map(|z| z * 0.5)).unwrap();
        assert_eq!(expectation(&pauli_z(), &mixed).unwrap(), 0.0);
    }

    #[test]
    fn expectation_matches_spectral_sum() {
        let a = random_hermitian(6, 21, 1.0).unwrap();
        let rho = random_density(6, 22).unwrap();
        let eig = eig_hermitian(&a).unwrap();
        let oracle: f64 = (0..6)
            .map(|k| {
                let psi = eig.vectors.column(k);
                let weight = (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re;
                eig.values[k] * weight
            })
            .sum();
        assert!((expectation(&a, &rho).unwrap() - oracle).abs() <= 1e-10);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let rho = random_density(3, 1).unwrap();
        assert!(matches!(
            expectation(&pauli_z(), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kronecker_examples() {
        let zi = tensor(&[pauli_z().matrix(), &identity(2)]).unwrap();
        assert_eq!(
            zi,
            *HermitianOperator::diagonal(&[1.0, 1.0, -1.0, -1.0])
                .unwrap()
                .matrix()
        );
        assert_eq!(tensor(&[&identity(2), &identity(2)]).unwrap(), identity(4));
        assert!(matches!(tensor(&[]), Err(Error::EmptyList)));
    }

    #[test]
    fn xx_on_singlet_is_minus_one() {
        let xx = tensor_hermitian(&[&pauli_x(), &pauli_x()]).unwrap();
        let value = expectation(&xx, &singlet()).unwrap();
        assert!((value + 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_fixtures_are_deterministic_and_valid() {
        let a = random_density(4, 7).unwrap();
        let b = random_density(4, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.matrix().trace().re - 1.0).abs() <= TRACE_TOL);
        assert!(HermitianOperator::new(random_hermitian(5, 3, 1.0).unwrap().into_matrix()).is_ok());
        assert!(matches!(random_density(0, 1), Err(Error::EmptyDimension)));
        assert!(matches!(
            random_hermitian(0, 1, 1.0),
            Err(Error::EmptyDimension)
        ));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = ONE;
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn density_rejects_bad_trace_and_negativity() {
        assert!(matches!(
            DensityMatrix::new(identity(2)),
            Err(Error::InvalidTrace { .. })
        ));
        let m = HermitianOperator::diagonal(&[1.5, -0.5])
            .unwrap()
            .into_matrix();
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn partial_trace_of_singlet_is_maximally_mixed() {
        let reduced = partial_trace(&singlet(), &[1]).unwrap();
        assert_close(reduced.matrix(), &identity(2).map(|z| z * 0.5), 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = random_density(2, 1).unwrap();
        let b = random_density(3, 2).unwrap();
        let c = random_density(2, 3).unwrap();
        let abc = DensityMatrix::product(&[&a, &b, &c]).unwrap();
        assert_close(
            partial_trace(&abc, &[1]).unwrap().matrix(),
            b.matrix(),
            1e-14,
        );
        let ac = DensityMatrix::product(&[&a, &c]).unwrap();
        assert_close(
            partial_trace(&abc, &[0, 2]).unwrap().matrix(),
            ac.matrix(),
            1e-14,
        );
    }
}
