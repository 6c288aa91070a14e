//! Distant-labs protocols built from local binary POVMs.
//!
//! Each party `k` measures its own binary POVM with outcome-0 effect
//! `E₀⁽ᵏ⁾ = V₀⁽ᵏ⁾²`. Parties are indexed in tensor-factor order and subsets
//! of parties are bitmasks: bit `k` set means party `k` belongs to the
//! subset. `p_S` is the probability that every party in `S` obtains outcome 0
//! on the same copy of the shared state, with `p_∅ = 1`.
//!
//! Substituting `A_k = a₊⁽ᵏ⁾ E₀⁽ᵏ⁾ − a₋⁽ᵏ⁾ I` into `⊗_k A_k` and expanding
//! gives
//!
//! ```text
//! ⟨⊗_k A_k⟩ = Σ_S  Π_{k∈S} a₊⁽ᵏ⁾ · Π_{k∉S} (−a₋⁽ᵏ⁾) · p_S
//! ```
//!
//! which for two parties is `a₊b₊p₀₀ + a₋b₋ − a₊b₋p₀ − a₋b₊q₀`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{build_binary_povm, checked_probability, BinaryPovm, ShiftScale};
use crate::error::{Error, Result};
use crate::estimation::{pick_outcome, shot_stream, MeanEstimate, Method};
use crate::linalg::{
    tensor, trace_of_product, ComplexMatrix, DensityMatrix, HermitianOperator, SpectralBounds,
};

/// Slack on the monotonicity of subset probabilities.
pub const MONOTONE_TOL: f64 = 1e-10;

/// One party: its observable and the binary POVM encoding it.
#[derive(Clone, Debug)]
pub struct PartySpec {
    observable: HermitianOperator,
    povm: BinaryPovm,
}

impl PartySpec {
    pub fn new(observable: HermitianOperator, bounds: Option<SpectralBounds>) -> Result<Self> {
        let povm = build_binary_povm(&observable, bounds)?;
        Ok(Self { observable, povm })
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn povm(&self) -> &BinaryPovm {
        &self.povm
    }

    pub fn shift_scale(&self) -> ShiftScale {
        self.povm.shift_scale()
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }
}

/// Probabilities `p_S` for every subset `S` of `n` parties, indexed by bitmask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProbs {
    parties: usize,
    probs: Vec<f64>,
}

impl CorrelationProbs {
    /// `probs[mask]` for all `2ⁿ` masks. `probs[0]` must be exactly 1 and the
    /// family must be monotone under inclusion.
    pub fn new(parties: usize, probs: Vec<f64>) -> Result<Self> {
        if parties == 0 {
            return Err(Error::EmptyList);
        }
        let expected = 1usize << parties;
        if probs.len() != expected {
            return Err(Error::MissingSubset {
                mask: probs.len().min(expected - 1),
            });
        }
        if probs[0] != 1.0 {
            return Err(Error::Invalid(format!(
                "empty-subset probability must be 1, got {}",
                probs[0]
            )));
        }
        for (mask, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { value: p });
            }
            for k in 0..parties {
                let smaller = mask & !(1 << k);
                if smaller != mask && p > probs[smaller] + MONOTONE_TOL {
                    return Err(Error::Invalid(format!(
                        "p[{mask:#b}] = {p} exceeds p[{smaller:#b}] = {}",
                        probs[smaller]
                    )));
                }
            }
        }
        Ok(Self { parties, probs })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn get(&self, mask: usize) -> Option<f64> {
        self.probs.get(mask).copied()
    }

    /// Probability that party `k` alone obtains outcome 0.
    pub fn marginal(&self, k: usize) -> Option<f64> {
        (k < self.parties).then(|| self.probs[1 << k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// For two parties: `(p₀, q₀, p₀₀)`.
    pub fn bipartite_triple(&self) -> Result<(f64, f64, f64)> {
        if self.parties != 2 {
            return Err(Error::PartyCount {
                expected: 2,
                found: self.parties,
            });
        }
        Ok((self.probs[0b01], self.probs[0b10], self.probs[0b11]))
    }
}

/// Human-readable subset label, e.g. `"AC"` for mask `0b101`; `"∅"` for 0.
/// Parties beyond `Z` are written `P26`, `P27`, ...
pub fn subset_label(mask: usize, parties: usize) -> String {
    if mask == 0 {
        return "∅".to_string();
    }
    (0..parties)
        .filter(|k| mask & (1 << k) != 0)
        .map(|k| {
            if k < 26 {
                char::from(b'A' + k as u8).to_string()
            } else {
                format!("P{k}")
            }
        })
        .collect()
}

fn check_parties(parties: &[PartySpec], rho: &DensityMatrix) -> Result<()> {
    if parties.is_empty() {
        return Err(Error::EmptyList);
    }
    let dims = rho.factor_dims().ok_or(Error::MissingFactorDims)?;
    if dims.len() != parties.len() {
        return Err(Error::PartyCount {
            expected: dims.len(),
            found: parties.len(),
        });
    }
    for (party, &d) in parties.iter().zip(dims) {
        if party.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: party.dim(),
            });
        }
    }
    Ok(())
}

fn tensor_effect(
    parties: &[PartySpec],
    pick: impl Fn(usize) -> Option<bool>,
) -> Result<ComplexMatrix> {
    // pick(k): Some(true) → E₀, Some(false) → E₁, None → I.
    let identities: Vec<ComplexMatrix> = parties
        .iter()
        .map(|p| ComplexMatrix::identity(p.dim(), p.dim()))
        .collect();
    let factors: Vec<&ComplexMatrix> = parties
        .iter()
        .enumerate()
        .map(|(k, p)| match pick(k) {
            Some(true) => p.povm.effect0().matrix(),
            Some(false) => p.povm.effect1().matrix(),
            None => &identities[k],
        })
        .collect();
    tensor(&factors)
}

/// `p_S = Tr[(⊗_{k∈S} E₀⁽ᵏ⁾ ⊗_{k∉S} I) ρ]` for every subset.
pub fn exact_correlation_probs(
    parties: &[PartySpec],
    rho: &DensityMatrix,
) -> Result<CorrelationProbs> {
    check_parties(parties, rho)?;
    let n = parties.len();
    let mut probs = vec![1.0; 1 << n];
    for (mask, slot) in probs.iter_mut().enumerate().skip(1) {
        let effect = tensor_effect(parties, |k| (mask & (1 << k) != 0).then_some(true))?;
        *slot = checked_probability(trace_of_product(&effect, rho.matrix()).re)?;
    }
    // Rounding can break monotonicity by a few ulps; repair from small to large
    // subsets. Anything larger is left for `CorrelationProbs::new` to reject.
    for mask in 1..probs.len() {
        for k in 0..n {
            let smaller = mask & !(1 << k);
            let excess = probs[mask] - probs[smaller];
            if smaller != mask && excess > 0.0 && excess <= MONOTONE_TOL {
                probs[mask] = probs[smaller];
            }
        }
    }
    CorrelationProbs::new(n, probs)
}

/// `a₊b₊p₀₀ + a₋b₋ − a₊b₋p₀ − a₋b₊q₀`.
pub fn product_mean_bipartite(
    probs: &CorrelationProbs,
    ss_a: &ShiftScale,
    ss_b: &ShiftScale,
) -> Result<f64> {
    let (p0, q0, p00) = probs.bipartite_triple()?;
    if ss_a.is_degenerate() || ss_b.is_degenerate() {
        return Ok(0.0);
    }
    Ok(
        ss_a.a_plus * ss_b.a_plus * p00 + ss_a.a_minus * ss_b.a_minus
            - (ss_a.a_plus * ss_b.a_minus * p0 + ss_a.a_minus * ss_b.a_plus * q0),
    )
}

/// Coefficient of `p_S` in the expansion of `⟨⊗_k A_k⟩`.
pub fn subset_coefficient(mask: usize, ss_list: &[ShiftScale]) -> f64 {
    ss_list
        .iter()
        .enumerate()
        .map(|(k, ss)| {
            if mask & (1 << k) != 0 {
                ss.a_plus
            } else {
                -ss.a_minus
            }
        })
        .product()
}

/// `Σ_S Π_{k∈S} a₊⁽ᵏ⁾ Π_{k∉S} (−a₋⁽ᵏ⁾) p_S`.
pub fn product_mean_multipartite(probs: &CorrelationProbs, ss_list: &[ShiftScale]) -> Result<f64> {
    if ss_list.len() != probs.parties() {
        return Err(Error::PartyCount {
            expected: probs.parties(),
            found: ss_list.len(),
        });
    }
    if ss_list.iter().any(ShiftScale::is_degenerate) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for mask in 0..(1usize << ss_list.len()) {
        let p = probs.get(mask).ok_or(Error::MissingSubset { mask })?;
        total += subset_coefficient(mask, ss_list) * p;
    }
    Ok(total)
}

/// Joint law of the local outcomes: entry `z` is the probability that exactly
/// the parties in bitmask `z` obtain outcome 0 (the rest obtain 1).
pub fn joint_distribution(parties: &[PartySpec], rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_parties(parties, rho)?;
    let n = parties.len();
    (0..(1usize << n))
        .map(|z| {
            let effect = tensor_effect(parties, |k| Some(z & (1 << k) != 0))?;
            checked_probability(trace_of_product(&effect, rho.matrix()).re)
        })
        .collect()
}

/// Merged shot record of all parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts {
    pub parties: usize,
    pub shots: u64,
    pub seed: u64,
    /// `outcome_counts[z]`: shots where exactly the parties in `z` got 0.
    pub outcome_counts: Vec<u64>,
    /// `subset_counts[S]`: shots where every party in `S` got 0.
    pub subset_counts: Vec<u64>,
}

impl JointCounts {
    pub fn estimated_probs(&self) -> Result<CorrelationProbs> {
        let n = self.shots as f64;
        CorrelationProbs::new(
            self.parties,
            self.subset_counts.iter().map(|&c| c as f64 / n).collect(),
        )
    }

    /// Product-observable estimate with its standard error. Each shot
    /// contributes `Π_k x_k` with `x_k = a₊⁽ᵏ⁾ − a₋⁽ᵏ⁾` on outcome 0 and
    /// `−a₋⁽ᵏ⁾` on outcome 1; the mean of these equals the subset expansion
    /// evaluated on `p̂_S`.
    pub fn product_estimate(&self, ss_list: &[ShiftScale]) -> Result<MeanEstimate> {
        if ss_list.len() != self.parties {
            return Err(Error::PartyCount {
                expected: self.parties,
                found: ss_list.len(),
            });
        }
        let n = self.shots as f64;
        let degenerate = ss_list.iter().any(ShiftScale::is_degenerate);
        let shot_value = |z: usize| -> f64 {
            if degenerate {
                return 0.0;
            }
            ss_list
                .iter()
                .enumerate()
                .map(|(k, ss)| {
                    if z & (1 << k) != 0 {
                        ss.a_plus - ss.a_minus
                    } else {
                        -ss.a_minus
                    }
                })
                .product()
        };
        let (mut first, mut second) = (0.0, 0.0);
        for (z, &c) in self.outcome_counts.iter().enumerate() {
            let v = shot_value(z);
            first += v * c as f64 / n;
            second += v * v * c as f64 / n;
        }
        Ok(MeanEstimate {
            value: first,
            std_error: ((second - first * first).max(0.0) / n).sqrt(),
            shots: self.shots,
            method: Method::BinaryPovm,
        })
    }
}

/// One joint outcome tuple per shot, drawn from [`joint_distribution`] with a
/// single seeded stream.
pub fn sample_joint(
    parties: &[PartySpec],
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<JointCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let probs = joint_distribution(parties, rho)?;
    let n = parties.len();
    let mut outcome_counts = vec![0u64; 1 << n];
    let mut rng = shot_stream(seed);
    for _ in 0..shots {
        outcome_counts[pick_outcome(&probs, rng.random::<f64>())] += 1;
    }
    let subset_counts = (0..(1usize << n))
        .map(|s| {
            outcome_counts
                .iter()
                .enumerate()
                .filter(|(z, _)| z & s == s)
                .map(|(_, &c)| c)
                .sum()
        })
        .collect();
    Ok(JointCounts {
        parties: n,
        shots,
        seed,
        outcome_counts,
        subset_counts,
    })
}

/// `W = Σ_k A_k ⊗ B_k`.
#[derive(Clone, Debug)]
pub struct WitnessSpec {
    terms: Vec<(HermitianOperator, HermitianOperator)>,
}

impl WitnessSpec {
    pub fn new(terms: Vec<(HermitianOperator, HermitianOperator)>) -> Result<Self> {
        let (a0, b0) = terms.first().ok_or(Error::EmptyList)?;
        let (da, db) = (a0.dim(), b0.dim());
        for (a, b) in &terms {
            if a.dim() != da {
                return Err(Error::DimensionMismatch {
                    expected: da,
                    found: a.dim(),
                });
            }
            if b.dim() != db {
                return Err(Error::DimensionMismatch {
                    expected: db,
                    found: b.dim(),
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(HermitianOperator, HermitianOperator)] {
        &self.terms
    }

    pub fn local_dims(&self) -> (usize, usize) {
        (self.terms[0].0.dim(), self.terms[0].1.dim())
    }

    /// The full operator `Σ_k A_k ⊗ B_k`.
    pub fn operator(&self) -> Result<HermitianOperator> {
        let (da, db) = self.local_dims();
        let mut acc = ComplexMatrix::zeros(da * db, db * da);
        for (a, b) in &self.terms {
            acc += tensor(&[a.matrix(), b.matrix()])?;
        }
        HermitianOperator::new(acc)
    }

    pub fn concat(&self, other: &WitnessSpec) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EvalMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

/// Seed for term `k` of a sampled multi-term evaluation.
pub fn term_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

/// Per-term record: the binary probabilities and what they reconstruct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermResult {
    pub p0: f64,
    pub q0: f64,
    pub p00: f64,
    pub shift_scale_a: ShiftScale,
    pub shift_scale_b: ShiftScale,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub value: f64,
    pub std_error: Option<f64>,
    pub terms: Vec<TermResult>,
}

fn bipartite_state(rho: &DensityMatrix, da: usize, db: usize) -> Result<DensityMatrix> {
    match rho.factor_dims() {
        Some(dims) if dims == [da, db] => Ok(rho.clone()),
        Some(dims) => Err(Error::FactorDims {
            dims: dims.to_vec(),
            dim: rho.dim(),
        }),
        None => rho.clone().with_factor_dims(vec![da, db]),
    }
}

fn evaluate_term(
    a: &HermitianOperator,
    b: &HermitianOperator,
    rho: &DensityMatrix,
    mode: EvalMode,
    k: usize,
) -> Result<TermResult> {
    let parties = [
        PartySpec::new(a.clone(), None)?,
        PartySpec::new(b.clone(), None)?,
    ];
    let ss_a = parties[0].shift_scale();
    let ss_b = parties[1].shift_scale();
    match mode {
        EvalMode::Exact => {
            let probs = exact_correlation_probs(&parties, rho)?;
            let (p0, q0, p00) = probs.bipartite_triple()?;
            Ok(TermResult {
                p0,
                q0,
                p00,
                shift_scale_a: ss_a,
                shift_scale_b: ss_b,
                value: product_mean_bipartite(&probs, &ss_a, &ss_b)?,
                std_error: None,
            })
        }
        EvalMode::Sampled { shots, seed } => {
            let counts = sample_joint(&parties, rho, shots, term_seed(seed, k))?;
            let probs = counts.estimated_probs()?;
            let (p0, q0, p00) = probs.bipartite_triple()?;
            let estimate = counts.product_estimate(&[ss_a, ss_b])?;
            Ok(TermResult {
                p0,
                q0,
                p00,
                shift_scale_a: ss_a,
                shift_scale_b: ss_b,
                value: estimate.value,
                std_error: Some(estimate.std_error),
            })
        }
    }
}

/// `⟨W⟩` assembled term by term from bipartite binary statistics.
pub fn witness_mean(w: &WitnessSpec, rho: &DensityMatrix, mode: EvalMode) -> Result<WitnessResult> {
    let (da, db) = w.local_dims();
    let rho = bipartite_state(rho, da, db)?;
    let terms: Vec<TermResult> = w
        .terms
        .iter()
        .enumerate()
        .map(|(k, (a, b))| evaluate_term(a, b, &rho, mode, k))
        .collect::<Result<_>>()?;
    let value = terms.iter().map(|t| t.value).sum();
    let std_error = match mode {
        EvalMode::Exact => None,
        EvalMode::Sampled { .. } => Some(
            terms
                .iter()
                .map(|t| t.std_error.unwrap_or(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        ),
    };
    Ok(WitnessResult {
        value,
        std_error,
        terms,
    })
}

/// A linear Bell-type expression `Σ_j c_j ⟨A_{x_j} ⊗ B_{y_j}⟩` over local
/// measurement settings.
#[derive(Clone, Debug)]
pub struct BellExpression {
    pub alice_settings: Vec<HermitianOperator>,
    pub bob_settings: Vec<HermitianOperator>,
    /// `(c_j, x_j, y_j)`.
    pub terms: Vec<(f64, usize, usize)>,
}

impl BellExpression {
    /// `c₀₀⟨A₀B₀⟩ + c₀₁⟨A₀B₁⟩ + c₁₀⟨A₁B₀⟩ + c₁₁⟨A₁B₁⟩` over two settings per side.
    pub fn chsh(
        alice: [HermitianOperator; 2],
        bob: [HermitianOperator; 2],
        coeffs: [f64; 4],
    ) -> Self {
        Self {
            alice_settings: alice.to_vec(),
            bob_settings: bob.to_vec(),
            terms: vec![
                (coeffs[0], 0, 0),
                (coeffs[1], 0, 1),
                (coeffs[2], 1, 0),
                (coeffs[3], 1, 1),
            ],
        }
    }

    /// The full Bell operator `Σ_j c_j A_{x_j} ⊗ B_{y_j}`.
    pub fn operator(&self) -> Result<HermitianOperator> {
        let (_, x0, y0) = self.terms.first().ok_or(Error::EmptyList)?;
        let da = self.setting_a(*x0)?.dim();
        let db = self.setting_b(*y0)?.dim();
        let mut acc = ComplexMatrix::zeros(da * db, da * db);
        for &(c, x, y) in &self.terms {
            let ab = tensor(&[self.setting_a(x)?.matrix(), self.setting_b(y)?.matrix()])?;
            acc += ab * Complex64::from(c);
        }
        HermitianOperator::new(acc)
    }

    fn setting_a(&self, x: usize) -> Result<&HermitianOperator> {
        self.alice_settings.get(x).ok_or(Error::SettingIndex {
            index: x,
            available: self.alice_settings.len(),
        })
    }

    fn setting_b(&self, y: usize) -> Result<&HermitianOperator> {
        self.bob_settings.get(y).ok_or(Error::SettingIndex {
            index: y,
            available: self.bob_settings.len(),
        })
    }
}

/// One term of the expression rewritten over binary probabilities:
/// `c⟨A⊗B⟩ = constant + coeff_p0·p₀ + coeff_q0·q₀ + coeff_p00·p₀₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryBellTerm {
    pub coefficient: f64,
    pub alice_setting: usize,
    pub bob_setting: usize,
    pub p0: f64,
    pub q0: f64,
    pub p00: f64,
    pub constant: f64,
    pub coeff_p0: f64,
    pub coeff_q0: f64,
    pub coeff_p00: f64,
    pub value: f64,
}

impl BinaryBellTerm {
    pub fn evaluate(&self, p0: f64, q0: f64, p00: f64) -> f64 {
        self.constant + self.coeff_p0 * p0 + self.coeff_q0 * q0 + self.coeff_p00 * p00
    }
}

/// The expression as an affine function of binary joint probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryBellForm {
    pub value: f64,
    /// Sum of all term constants.
    pub constant: f64,
    pub terms: Vec<BinaryBellTerm>,
}

pub fn bell_binary_expression(
    expr: &BellExpression,
    rho: &DensityMatrix,
) -> Result<BinaryBellForm> {
    let alice: Vec<PartySpec> = expr
        .alice_settings
        .iter()
        .map(|a| PartySpec::new(a.clone(), None))
        .collect::<Result<_>>()?;
    let bob: Vec<PartySpec> = expr
        .bob_settings
        .iter()
        .map(|b| PartySpec::new(b.clone(), None))
        .collect::<Result<_>>()?;

    let mut terms = Vec::with_capacity(expr.terms.len());
    for &(c, x, y) in &expr.terms {
        expr.setting_a(x)?;
        expr.setting_b(y)?;
        let pair = [alice[x].clone(), bob[y].clone()];
        let rho = bipartite_state(rho, pair[0].dim(), pair[1].dim())?;
        let probs = exact_correlation_probs(&pair, &rho)?;
        let (p0, q0, p00) = probs.bipartite_triple()?;
        let (sa, sb) = (pair[0].shift_scale(), pair[1].shift_scale());
        let degenerate = sa.is_degenerate() || sb.is_degenerate();
        let (constant, coeff_p0, coeff_q0, coeff_p00) = if degenerate {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            (
                c * sa.a_minus * sb.a_minus,
                -c * sa.a_plus * sb.a_minus,
                -c * sa.a_minus * sb.a_plus,
                c * sa.a_plus * sb.a_plus,
            )
        };
        let mut term = BinaryBellTerm {
            coefficient: c,
            alice_setting: x,
            bob_setting: y,
            p0,
            q0,
            p00,
            constant,
            coeff_p0,
            coeff_q0,
            coeff_p00,
            value: 0.0,
        };
        term.value = term.evaluate(p0, q0, p00);
        terms.push(term);
    }
    Ok(BinaryBellForm {
        value: terms.iter().map(|t| t.value).sum(),
        constant: terms.iter().map(|t| t.constant).sum(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation, random_density, random_hermitian, tensor_hermitian};
    use crate::presets::{basis_state, ghz, pauli_x, pauli_y, pauli_z, singlet};

    fn z_parties() -> [PartySpec; 2] {
        [
            PartySpec::new(pauli_z(), None).unwrap(),
            PartySpec::new(pauli_z(), None).unwrap(),
        ]
    }

    fn zero_zero() -> DensityMatrix {
        let up = basis_state(2, 0).unwrap();
        DensityMatrix::product(&[&up, &up]).unwrap()
    }

    #[test]
    fn singlet_probabilities() {
        let probs = exact_correlation_probs(&z_parties(), &singlet()).unwrap();
        let (p0, q0, p00) = probs.bipartite_triple().unwrap();
        assert!((p0 - 0.5).abs() < 1e-15 && (q0 - 0.5).abs() < 1e-15);
        assert!(p00.abs() < 1e-15);
    }

    #[test]
    fn product_state_probabilities() {
        let probs = exact_correlation_probs(&z_parties(), &zero_zero()).unwrap();
        assert_eq!(probs.bipartite_triple().unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn missing_factor_dims_is_an_error() {
        let rho = random_density(4, 1).unwrap();
        assert!(matches!(
            exact_correlation_probs(&z_parties(), &rho),
            Err(Error::MissingFactorDims)
        ));
    }

    #[test]
    fn random_probs_match_direct_trace() {
        let a = random_hermitian(3, 1, 1.0).unwrap();
        let b = random_hermitian(3, 2, 1.0).unwrap();
        let rho = random_density(9, 3)
            .unwrap()
            .with_factor_dims(vec![3, 3])
            .unwrap();
        let parties = [
            PartySpec::new(a, None).unwrap(),
            PartySpec::new(b, None).unwrap(),
        ];
        let probs = exact_correlation_probs(&parties, &rho).unwrap();
        let e_a = parties[0].povm().effect0();
        let e_b = parties[1].povm().effect0();
        let id = HermitianOperator::identity(3).unwrap();
        let oracle = |x: &HermitianOperator, y: &HermitianOperator| {
            expectation(&tensor_hermitian(&[x, y]).unwrap(), &rho).unwrap()
        };
        assert!((probs.get(0b01).unwrap() - oracle(e_a, &id)).abs() <= 1e-10);
        assert!((probs.get(0b10).unwrap() - oracle(&id, e_b)).abs() <= 1e-10);
        assert!((probs.get(0b11).unwrap() - oracle(e_a, e_b)).abs() <= 1e-10);
    }

    #[test]
    fn bipartite_reconstruction_examples() {
        let ss = ShiftScale {
            a_minus: 1.0,
            a_plus: 2.0,
        };
        let singlet_probs = CorrelationProbs::new(2, vec![1.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(
            product_mean_bipartite(&singlet_probs, &ss, &ss).unwrap(),
            -1.0
        );
        let product = CorrelationProbs::new(2, vec![1.0; 4]).unwrap();
        assert_eq!(product_mean_bipartite(&product, &ss, &ss).unwrap(), 1.0);
        let three = CorrelationProbs::new(3, vec![1.0; 8]).unwrap();
        assert!(matches!(
            product_mean_bipartite(&three, &ss, &ss),
            Err(Error::PartyCount { .. })
        ));
    }

    #[test]
    fn random_bipartite_matches_tensor_expectation() {
        let a = random_hermitian(2, 5, 1.0).unwrap();
        let b = random_hermitian(4, 6, 1.0).unwrap();
        let rho = random_density(8, 7)
            .unwrap()
            .with_factor_dims(vec![2, 4])
            .unwrap();
        let oracle = expectation(&tensor_hermitian(&[&a, &b]).unwrap(), &rho).unwrap();
        let parties = [
            PartySpec::new(a, None).unwrap(),
            PartySpec::new(b, None).unwrap(),
        ];
        let probs = exact_correlation_probs(&parties, &rho).unwrap();
        let mean =
            product_mean_bipartite(&probs, &parties[0].shift_scale(), &parties[1].shift_scale())
                .unwrap();
        assert!((mean - oracle).abs() <= 1e-10);
        let multi = product_mean_multipartite(
            &probs,
            &[parties[0].shift_scale(), parties[1].shift_scale()],
        )
        .unwrap();
        assert!((multi - mean).abs() <= 1e-12);
    }

    #[test]
    fn ghz_xxx_is_one() {
        let parties: Vec<PartySpec> = (0..3)
            .map(|_| PartySpec::new(pauli_x(), None).unwrap())
            .collect();
        let probs = exact_correlation_probs(&parties, &ghz(3).unwrap()).unwrap();
        let ss: Vec<ShiftScale> = parties.iter().map(PartySpec::shift_scale).collect();
        let mean = product_mean_multipartite(&probs, &ss).unwrap();
        assert!((mean - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn single_party_reduces_to_binary_mean() {
        let ss = ShiftScale {
            a_minus: 1.5,
            a_plus: 4.0,
        };
        let probs = CorrelationProbs::new(1, vec![1.0, 0.3]).unwrap();
        let mean = product_mean_multipartite(&probs, &[ss]).unwrap();
        assert!((mean - (4.0 * 0.3 - 1.5)).abs() < 1e-15);
    }

    #[test]
    fn correlation_probs_validation() {
        assert!(CorrelationProbs::new(2, vec![1.0, 0.5, 0.5]).is_err());
        assert!(CorrelationProbs::new(2, vec![0.9, 0.5, 0.5, 0.1]).is_err());
        assert!(CorrelationProbs::new(2, vec![1.0, 0.2, 0.5, 0.4]).is_err());
        let ss = ShiftScale {
            a_minus: 1.0,
            a_plus: 2.0,
        };
        let probs = CorrelationProbs::new(2, vec![1.0, 0.5, 0.5, 0.25]).unwrap();
        assert!(product_mean_multipartite(&probs, &[ss]).is_err());
        assert_eq!(subset_label(0b101, 3), "AC");
        assert_eq!(subset_label(0, 3), "∅");
    }

    #[test]
    fn joint_sampling_examples() {
        let counts = sample_joint(&z_parties(), &singlet(), 10_000, 8).unwrap();
        assert_eq!(counts.subset_counts[0b11], 0);
        assert_eq!(counts.subset_counts[0], 10_000);

        let counts = sample_joint(&z_parties(), &zero_zero(), 500, 8).unwrap();
        assert!(counts.subset_counts.iter().all(|&c| c == 500));

        let a = random_hermitian(2, 11, 1.0).unwrap();
        let b = random_hermitian(3, 12, 1.0).unwrap();
        let rho = random_density(6, 13)
            .unwrap()
            .with_factor_dims(vec![2, 3])
            .unwrap();
        let parties = [
            PartySpec::new(a, None).unwrap(),
            PartySpec::new(b, None).unwrap(),
        ];
        let exact = exact_correlation_probs(&parties, &rho).unwrap();
        let n = 20_000;
        let counts = sample_joint(&parties, &rho, n, 14).unwrap();
        for mask in 0..4 {
            let p = exact.get(mask).unwrap();
            let p_hat = counts.subset_counts[mask] as f64 / n as f64;
            assert!((p_hat - p).abs() <= 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn joint_distribution_sums_to_one() {
        let a = random_hermitian(3, 21, 1.0).unwrap();
        let b = random_hermitian(2, 22, 1.0).unwrap();
        let rho = random_density(6, 23)
            .unwrap()
            .with_factor_dims(vec![3, 2])
            .unwrap();
        let parties = [
            PartySpec::new(a, None).unwrap(),
            PartySpec::new(b, None).unwrap(),
        ];
        let total: f64 = joint_distribution(&parties, &rho).unwrap().iter().sum();
        assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn identity_witness() {
        let id = HermitianOperator::identity(2).unwrap();
        let w = WitnessSpec::new(vec![(id.clone(), id)]).unwrap();
        let rho = random_density(4, 31).unwrap();
        let result = witness_mean(&w, &rho, EvalMode::Exact).unwrap();
        assert!((result.value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn swap_witness_on_singlet() {
        let half = |op: HermitianOperator| op.scaled(0.5);
        let w = WitnessSpec::new(vec![
            (
                half(HermitianOperator::identity(2).unwrap()),
                HermitianOperator::identity(2).unwrap(),
            ),
            (half(pauli_x()), pauli_x()),
            (half(pauli_y()), pauli_y()),
            (half(pauli_z()), pauli_z()),
        ])
        .unwrap();
        let rho = singlet();
        let oracle = expectation(&w.operator().unwrap(), &rho).unwrap();
        assert!((oracle + 1.0).abs() < 1e-14);
        let result = witness_mean(&w, &rho, EvalMode::Exact).unwrap();
        assert!((result.value - oracle).abs() <= 1e-10 * 4.0);
        assert_eq!(result.terms.len(), 4);
    }

    #[test]
    fn sampled_witness_reports_error_bar() {
        let w = WitnessSpec::new(vec![(pauli_z(), pauli_z()), (pauli_x(), pauli_x())]).unwrap();
        // Perfect anticorrelation on the singlet: every shot gives −1 per term.
        let result = witness_mean(
            &w,
            &singlet(),
            EvalMode::Sampled {
                shots: 1000,
                seed: 5,
            },
        )
        .unwrap();
        assert_eq!((result.value, result.std_error), (-2.0, Some(0.0)));

        let rho = random_density(4, 6).unwrap();
        let oracle = expectation(&w.operator().unwrap(), &rho).unwrap();
        let result = witness_mean(
            &w,
            &rho,
            EvalMode::Sampled {
                shots: 20_000,
                seed: 5,
            },
        )
        .unwrap();
        let se = result.std_error.unwrap();
        assert!(se > 0.0);
        assert!((result.value - oracle).abs() <= 5.0 * se);
    }

    #[test]
    fn chsh_on_singlet_and_product_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b0 =
            HermitianOperator::linear_combination(&[(-s, &pauli_z()), (-s, &pauli_x())]).unwrap();
        let b1 =
            HermitianOperator::linear_combination(&[(s, &pauli_z()), (-s, &pauli_x())]).unwrap();
        let expr = BellExpression::chsh([pauli_z(), pauli_x()], [b0, b1], [1.0, -1.0, 1.0, 1.0]);
        let form = bell_binary_expression(&expr, &singlet()).unwrap();
        assert!((form.value - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-9);
        let oracle = expectation(&expr.operator().unwrap(), &singlet()).unwrap();
        assert!((form.value - oracle).abs() <= 1e-10);

        let form = bell_binary_expression(&expr, &zero_zero()).unwrap();
        assert!(form.value <= 2.0 + 1e-9);

        let zero = BellExpression::chsh([pauli_z(), pauli_x()], [pauli_z(), pauli_x()], [0.0; 4]);
        assert_eq!(
            bell_binary_expression(&zero, &singlet()).unwrap().value,
            0.0
        );
    }

    #[test]
    fn bell_setting_out_of_range() {
        let expr = BellExpression {
            alice_settings: vec![pauli_z()],
            bob_settings: vec![pauli_z()],
            terms: vec![(1.0, 0, 3)],
        };
        assert!(matches!(
            bell_binary_expression(&expr, &singlet()),
            Err(Error::SettingIndex { index: 3, .. })
        ));
    }
}
