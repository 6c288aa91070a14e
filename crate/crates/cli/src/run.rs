//! Dispatch a validated scenario to the library pipelines.

use std::time::Instant;

use binary_povm::dilate::naimark_unitary;
use binary_povm::encode::{
    build_binary_povm, exact_p0, mean_from_p0, mean_nonhermitian_detailed, BinaryPovm,
};
use binary_povm::estimation::{compare_methods_with_bounds, estimate_mean, sample_binary};
use binary_povm::linalg::{
    complex_expectation, expectation, tensor_hermitian, DensityMatrix, HermitianOperator,
};
use binary_povm::locc::{
    bell_binary_expression, exact_correlation_probs, product_mean_bipartite,
    product_mean_multipartite, sample_joint, subset_label, term_seed, witness_mean, BellExpression,
    CorrelationProbs, EvalMode, PartySpec, WitnessSpec,
};
use binary_povm::Error;

use crate::error::CliResult;
use crate::report::{Probability, Residuals, RunReport, Sampled, Status};
use crate::scenario::{Kind, Mode, Scenario, SCHEMA_VERSION};

pub fn run(scenario: &Scenario) -> CliResult<RunReport> {
    let start = Instant::now();
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        name: scenario.name().to_string(),
        kind: scenario.kind(),
        mode: scenario.mode(),
        status: Status::Ok,
        failures: Vec::new(),
        oracle: 0.0,
        reconstructed: 0.0,
        oracle_imag: None,
        reconstructed_imag: None,
        abs_error: 0.0,
        sampled: None,
        probabilities: Vec::new(),
        shift_scales: Vec::new(),
        residuals: Residuals::default(),
        witness_terms: None,
        bell_constant: None,
        bell_terms: None,
        comparison: None,
        elapsed_ms: 0.0,
    };
    match scenario.kind() {
        Kind::Single => single(scenario, &mut report)?,
        Kind::Nonhermitian => nonhermitian(scenario, &mut report)?,
        Kind::Bipartite | Kind::Multipartite => multiparty(scenario, &mut report)?,
        Kind::Witness => witness(scenario, &mut report)?,
        Kind::Bell => bell(scenario, &mut report)?,
        Kind::Compare => compare(scenario, &mut report)?,
    }
    if report.oracle_imag.is_none() {
        report.abs_error = (report.reconstructed - report.oracle).abs();
    }
    report.finalize_status();
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn sampled(scenario: &Scenario) -> bool {
    scenario.mode() == Mode::Sampled
}

fn absorb(residuals: &mut Residuals, povm: &BinaryPovm) -> CliResult<()> {
    residuals.povm_completeness = residuals
        .povm_completeness
        .max(povm.completeness_residual());
    residuals.povm_commutator = residuals.povm_commutator.max(povm.commutator_residual());
    let unitarity = match naimark_unitary(povm) {
        Ok(u) => u.unitarity_residual(),
        Err(Error::NotUnitary { residual }) => residual,
        Err(e) => return Err(e.into()),
    };
    residuals.dilation_unitarity = residuals.dilation_unitarity.max(unitarity);
    Ok(())
}

fn probability(label: impl Into<String>, value: f64) -> Probability {
    Probability {
        label: label.into(),
        value,
    }
}

fn single(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let a = s.hermitian(0);
    let povm = build_binary_povm(a, s.bounds[0])?;
    let ss = povm.shift_scale();
    let p0 = exact_p0(&povm, &s.state)?;
    report.oracle = expectation(a, &s.state)?;
    report.reconstructed = mean_from_p0(p0, &ss)?;
    report.probabilities = vec![probability("p0", p0)];
    report.shift_scales = vec![ss];
    absorb(&mut report.residuals, &povm)?;
    if sampled(s) {
        let record = sample_binary(&povm, &s.state, s.shots, s.seed)?;
        let est = estimate_mean(&record, &ss)?;
        report.sampled = Some(Sampled {
            value: est.value,
            std_error: est.std_error,
            shots: s.shots,
            seed: s.seed,
            value_imag: None,
            std_error_imag: None,
            probabilities: vec![probability("p0", record.p0_hat())],
        });
    }
    Ok(())
}

fn nonhermitian(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let x = s.observables[0].matrix();
    let oracle = complex_expectation(x, &s.state)?;
    let detail = mean_nonhermitian_detailed(x, &s.state)?;
    report.oracle = oracle.re;
    report.oracle_imag = Some(oracle.im);
    report.reconstructed = detail.value.re;
    report.reconstructed_imag = Some(detail.value.im);
    report.abs_error = (detail.value - oracle).norm();
    report.probabilities = vec![
        probability("p0_hermitian", detail.p0_hermitian),
        probability("p0_antihermitian", detail.p0_antihermitian),
    ];
    report.shift_scales = vec![
        detail.hermitian_povm.shift_scale(),
        detail.antihermitian_povm.shift_scale(),
    ];
    absorb(&mut report.residuals, &detail.hermitian_povm)?;
    absorb(&mut report.residuals, &detail.antihermitian_povm)?;
    if sampled(s) {
        let records = [
            sample_binary(&detail.hermitian_povm, &s.state, s.shots, s.seed)?,
            sample_binary(
                &detail.antihermitian_povm,
                &s.state,
                s.shots,
                term_seed(s.seed, 1),
            )?,
        ];
        let re = estimate_mean(&records[0], &detail.hermitian_povm.shift_scale())?;
        let im = estimate_mean(&records[1], &detail.antihermitian_povm.shift_scale())?;
        report.sampled = Some(Sampled {
            value: re.value,
            std_error: re.std_error,
            shots: s.shots,
            seed: s.seed,
            value_imag: Some(im.value),
            std_error_imag: Some(im.std_error),
            probabilities: vec![
                probability("p0_hermitian", records[0].p0_hat()),
                probability("p0_antihermitian", records[1].p0_hat()),
            ],
        });
    }
    Ok(())
}

fn subset_probabilities(probs: &CorrelationProbs) -> Vec<Probability> {
    let n = probs.parties();
    probs
        .as_slice()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(mask, &p)| probability(subset_label(mask, n), p))
        .collect()
}

fn with_dims(rho: &DensityMatrix, dims: Vec<usize>) -> CliResult<DensityMatrix> {
    Ok(match rho.factor_dims() {
        Some(_) => rho.clone(),
        None => rho.clone().with_factor_dims(dims)?,
    })
}

fn multiparty(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let parties: Vec<PartySpec> = (0..s.observables.len())
        .map(|k| PartySpec::new(s.hermitian(k).clone(), s.bounds[k]))
        .collect::<binary_povm::Result<_>>()?;
    let rho = with_dims(&s.state, parties.iter().map(PartySpec::dim).collect())?;
    let ops: Vec<&HermitianOperator> = parties.iter().map(PartySpec::observable).collect();
    let ss: Vec<_> = parties.iter().map(PartySpec::shift_scale).collect();
    let probs = exact_correlation_probs(&parties, &rho)?;

    report.oracle = expectation(&tensor_hermitian(&ops)?, &rho)?;
    report.reconstructed = if s.kind() == Kind::Bipartite {
        product_mean_bipartite(&probs, &ss[0], &ss[1])?
    } else {
        product_mean_multipartite(&probs, &ss)?
    };
    report.probabilities = subset_probabilities(&probs);
    report.shift_scales = ss.clone();
    for party in &parties {
        absorb(&mut report.residuals, party.povm())?;
    }
    if sampled(s) {
        let counts = sample_joint(&parties, &rho, s.shots, s.seed)?;
        let est = counts.product_estimate(&ss)?;
        report.sampled = Some(Sampled {
            value: est.value,
            std_error: est.std_error,
            shots: s.shots,
            seed: s.seed,
            value_imag: None,
            std_error_imag: None,
            probabilities: subset_probabilities(&counts.estimated_probs()?),
        });
    }
    Ok(())
}

/// `(coeff · A, B)` pairs for every term.
fn weighted_terms(s: &Scenario) -> Vec<(HermitianOperator, HermitianOperator)> {
    s.terms
        .iter()
        .map(|t| (s.hermitian(t.a).scaled(t.coeff), s.hermitian(t.b).clone()))
        .collect()
}

fn term_probabilities(triples: impl Iterator<Item = (f64, f64, f64)>) -> Vec<Probability> {
    triples
        .enumerate()
        .flat_map(|(j, (p0, q0, p00))| {
            [
                probability(format!("term{j}.p0"), p0),
                probability(format!("term{j}.q0"), q0),
                probability(format!("term{j}.p00"), p00),
            ]
        })
        .collect()
}

fn sampled_witness(s: &Scenario, w: &WitnessSpec, rho: &DensityMatrix) -> CliResult<Sampled> {
    let result = witness_mean(
        w,
        rho,
        EvalMode::Sampled {
            shots: s.shots,
            seed: s.seed,
        },
    )?;
    Ok(Sampled {
        value: result.value,
        std_error: result.std_error.unwrap_or(0.0),
        shots: s.shots,
        seed: s.seed,
        value_imag: None,
        std_error_imag: None,
        probabilities: term_probabilities(result.terms.iter().map(|t| (t.p0, t.q0, t.p00))),
    })
}

fn witness(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let w = WitnessSpec::new(weighted_terms(s))?;
    let (da, db) = w.local_dims();
    let rho = with_dims(&s.state, vec![da, db])?;
    let result = witness_mean(&w, &rho, EvalMode::Exact)?;

    report.oracle = expectation(&w.operator()?, &rho)?;
    report.reconstructed = result.value;
    report.probabilities = term_probabilities(result.terms.iter().map(|t| (t.p0, t.q0, t.p00)));
    report.shift_scales = result
        .terms
        .iter()
        .flat_map(|t| [t.shift_scale_a, t.shift_scale_b])
        .collect();
    for (a, b) in w.terms() {
        absorb(&mut report.residuals, &build_binary_povm(a, None)?)?;
        absorb(&mut report.residuals, &build_binary_povm(b, None)?)?;
    }
    if sampled(s) {
        report.sampled = Some(sampled_witness(s, &w, &rho)?);
    }
    report.witness_terms = Some(result.terms);
    Ok(())
}

fn bell(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let settings: Vec<HermitianOperator> = (0..s.observables.len())
        .map(|k| s.hermitian(k).clone())
        .collect();
    let expr = BellExpression {
        alice_settings: settings.clone(),
        bob_settings: settings,
        terms: s.terms.iter().map(|t| (t.coeff, t.a, t.b)).collect(),
    };
    let (da, db) = (
        s.hermitian(s.terms[0].a).dim(),
        s.hermitian(s.terms[0].b).dim(),
    );
    let rho = with_dims(&s.state, vec![da, db])?;
    let form = bell_binary_expression(&expr, &rho)?;

    report.oracle = expectation(&expr.operator()?, &rho)?;
    report.reconstructed = form.value;
    report.probabilities = term_probabilities(form.terms.iter().map(|t| (t.p0, t.q0, t.p00)));
    let mut used: Vec<usize> = s.terms.iter().flat_map(|t| [t.a, t.b]).collect();
    used.sort_unstable();
    used.dedup();
    for k in used {
        let povm = build_binary_povm(s.hermitian(k), None)?;
        report.shift_scales.push(povm.shift_scale());
        absorb(&mut report.residuals, &povm)?;
    }
    if sampled(s) {
        let w = WitnessSpec::new(weighted_terms(s))?;
        report.sampled = Some(sampled_witness(s, &w, &rho)?);
    }
    report.bell_constant = Some(form.constant);
    report.bell_terms = Some(form.terms);
    Ok(())
}

fn compare(s: &Scenario, report: &mut RunReport) -> CliResult<()> {
    let a = s.hermitian(0);
    let povm = build_binary_povm(a, s.bounds[0])?;
    let ss = povm.shift_scale();
    let p0 = exact_p0(&povm, &s.state)?;
    report.oracle = expectation(a, &s.state)?;
    report.reconstructed = mean_from_p0(p0, &ss)?;
    report.probabilities = vec![probability("p0", p0)];
    report.shift_scales = vec![ss];
    absorb(&mut report.residuals, &povm)?;
    report.comparison = Some(compare_methods_with_bounds(
        a,
        &s.state,
        s.shots,
        &s.seeds,
        s.bounds[0],
    )?);
    Ok(())
}
