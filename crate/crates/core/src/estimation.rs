//! Finite-shot simulation of the binary experiment and the von Neumann
//! baseline it replaces.
//!
//! Every shot stream is a ChaCha20 generator seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. A shot draws one uniform `f64` in
//! `[0, 1)` (53 random mantissa bits) and reports outcome 0 when the draw is
//! below `p₀`. Multi-outcome draws use the same uniform against the
//! cumulative distribution in a fixed outcome order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{build_binary_povm, exact_p0, BinaryPovm, ShiftScale};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, expectation, trace_of_product, DensityMatrix, HermitianOperator, SpectralBounds,
};

/// Eigenvalues closer than this are one outcome of the projective measurement.
pub const DEGENERACY_TOL: f64 = 1e-9;

pub(crate) fn shot_stream(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Index of the outcome selected by `u` under `probs` (last outcome absorbs
/// rounding in the cumulative sum).
pub(crate) fn pick_outcome(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shots: u64,
    pub count0: u64,
    pub seed: u64,
}

impl ShotRecord {
    pub fn p0_hat(&self) -> f64 {
        self.count0 as f64 / self.shots as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BinaryPovm,
    VonNeumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
    pub shots: u64,
    pub method: Method,
}

pub fn sample_binary(
    povm: &BinaryPovm,
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p0 = exact_p0(povm, rho)?;
    let mut rng = shot_stream(seed);
    let count0 = (0..shots).filter(|_| rng.random::<f64>() < p0).count() as u64;
    Ok(ShotRecord {
        shots,
        count0,
        seed,
    })
}

pub fn estimate_mean(record: &ShotRecord, ss: &ShiftScale) -> Result<MeanEstimate> {
    if record.shots == 0 {
        return Err(Error::ZeroShots);
    }
    if record.count0 > record.shots {
        return Err(Error::Invalid(format!(
            "count0 {} exceeds shots {}",
            record.count0, record.shots
        )));
    }
    let (value, std_error) = if ss.is_degenerate() {
        (0.0, 0.0)
    } else {
        let p = record.p0_hat();
        (
            ss.a_plus * p - ss.a_minus,
            ss.a_plus * (p * (1.0 - p) / record.shots as f64).sqrt(),
        )
    };
    Ok(MeanEstimate {
        value,
        std_error,
        shots: record.shots,
        method: Method::BinaryPovm,
    })
}

/// `a₊² p₀(1 − p₀) / N`.
pub fn binary_theoretical_variance(ss: &ShiftScale, p0: f64, shots: u64) -> f64 {
    ss.a_plus * ss.a_plus * p0 * (1.0 - p0) / shots as f64
}

/// One projective-measurement outcome: a distinct eigenvalue and its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOutcome {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub probability: f64,
}

/// Outcome distribution of the projective measurement of `A` on `ρ`, with
/// eigenvalues grouped within [`DEGENERACY_TOL`].
pub fn spectral_distribution(
    a: &HermitianOperator,
    rho: &DensityMatrix,
) -> Result<Vec<SpectralOutcome>> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: rho.dim(),
        });
    }
    let eig = eig_hermitian(a)?;
    let mut outcomes: Vec<SpectralOutcome> = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for (k, &lambda) in eig.values.iter().enumerate() {
        let psi = eig.vectors.column(k);
        let weight = (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re.max(0.0);
        match outcomes.last_mut() {
            Some(last) if lambda - previous <= DEGENERACY_TOL => {
                let m = last.multiplicity as f64;
                last.eigenvalue = (last.eigenvalue * m + lambda) / (m + 1.0);
                last.multiplicity += 1;
                last.probability += weight;
            }
            _ => outcomes.push(SpectralOutcome {
                eigenvalue: lambda,
                multiplicity: 1,
                probability: weight,
            }),
        }
        previous = lambda;
    }
    Ok(outcomes)
}

/// Number of independent probabilities a projective measurement of `A`
/// must estimate: distinct eigenvalues minus one.
pub fn von_neumann_parameter_count(a: &HermitianOperator) -> Result<usize> {
    let eig = eig_hermitian(a)?;
    let distinct = 1 + eig
        .values
        .windows(2)
        .filter(|w| w[1] - w[0] > DEGENERACY_TOL)
        .count();
    Ok(distinct - 1)
}

/// Sample `shots` projective measurements of `A` and average the eigenvalues.
pub fn von_neumann_estimate(
    a: &HermitianOperator,
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<(MeanEstimate, usize)> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let outcomes = spectral_distribution(a, rho)?;
    let probs: Vec<f64> = outcomes.iter().map(|o| o.probability).collect();
    let mut counts = vec![0u64; outcomes.len()];
    let mut rng = shot_stream(seed);
    for _ in 0..shots {
        counts[pick_outcome(&probs, rng.random::<f64>())] += 1;
    }
    let n = shots as f64;
    let value: f64 = outcomes
        .iter()
        .zip(&counts)
        .map(|(o, &c)| o.eigenvalue * c as f64 / n)
        .sum();
    let second: f64 = outcomes
        .iter()
        .zip(&counts)
        .map(|(o, &c)| o.eigenvalue * o.eigenvalue * c as f64 / n)
        .sum();
    let std_error = ((second - value * value).max(0.0) / n).sqrt();
    let estimate = MeanEstimate {
        value,
        std_error,
        shots,
        method: Method::VonNeumann,
    };
    Ok((estimate, outcomes.len() - 1))
}

/// Binary estimates for many seeds, computed in parallel; output order
/// follows `seeds`.
pub fn binary_estimates(
    povm: &BinaryPovm,
    rho: &DensityMatrix,
    shots: u64,
    seeds: &[u64],
) -> Result<Vec<MeanEstimate>> {
    let ss = povm.shift_scale();
    seeds
        .par_iter()
        .map(|&seed| estimate_mean(&sample_binary(povm, rho, shots, seed)?, &ss))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub parameters_estimated: usize,
    pub mean_estimate: f64,
    pub rmse: f64,
    pub theoretical_variance: f64,
    pub theoretical_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub oracle: f64,
    pub shots: u64,
    pub seeds: usize,
    pub p0: f64,
    pub shift_scale: ShiftScale,
    pub binary: MethodSummary,
    pub von_neumann: MethodSummary,
}

pub fn compare_methods(
    a: &HermitianOperator,
    rho: &DensityMatrix,
    shots: u64,
    seeds: &[u64],
) -> Result<Comparison> {
    compare_methods_with_bounds(a, rho, shots, seeds, None)
}

/// Binary POVM versus von Neumann over a list of seeds. The binary POVM is
/// built from `bounds` when given.
pub fn compare_methods_with_bounds(
    a: &HermitianOperator,
    rho: &DensityMatrix,
    shots: u64,
    seeds: &[u64],
    bounds: Option<SpectralBounds>,
) -> Result<Comparison> {
    if seeds.is_empty() {
        return Err(Error::EmptyList);
    }
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let oracle = expectation(a, rho)?;
    let povm = build_binary_povm(a, bounds)?;
    let ss = povm.shift_scale();
    let p0 = exact_p0(&povm, rho)?;

    let binary = binary_estimates(&povm, rho, shots, seeds)?;
    let von_neumann: Vec<(MeanEstimate, usize)> = seeds
        .par_iter()
        .map(|&seed| von_neumann_estimate(a, rho, shots, seed))
        .collect::<Result<_>>()?;

    let rmse = |values: &mut dyn Iterator<Item = f64>| {
        let (sum, count) =
            values.fold((0.0, 0usize), |(s, c), v| (s + (v - oracle).powi(2), c + 1));
        (sum / count as f64).sqrt()
    };
    let mean = |values: &mut dyn Iterator<Item = f64>| {
        let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        sum / count as f64
    };

    let binary_var = binary_theoretical_variance(&ss, p0, shots);
    let a_sq = a.matrix() * a.matrix();
    let second_moment = trace_of_product(&a_sq, rho.matrix()).re;
    let vn_var = (second_moment - oracle * oracle).max(0.0) / shots as f64;

    Ok(Comparison {
        oracle,
        shots,
        seeds: seeds.len(),
        p0,
        shift_scale: ss,
        binary: MethodSummary {
            method: Method::BinaryPovm,
            parameters_estimated: 1,
            mean_estimate: mean(&mut binary.iter().map(|e| e.value)),
            rmse: rmse(&mut binary.iter().map(|e| e.value)),
            theoretical_variance: binary_var,
            theoretical_std: binary_var.sqrt(),
        },
        von_neumann: MethodSummary {
            method: Method::VonNeumann,
            parameters_estimated: von_neumann[0].1,
            mean_estimate: mean(&mut von_neumann.iter().map(|(e, _)| e.value)),
            rmse: rmse(&mut von_neumann.iter().map(|(e, _)| e.value)),
            theoretical_variance: vn_var,
            theoretical_std: vn_var.sqrt(),
        },
    })
}
