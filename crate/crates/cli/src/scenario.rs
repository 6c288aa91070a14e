//! Scenario files: JSON, versioned by `schema_version`.
//!
//! Complex entries are `[re, im]` pairs and matrices are lists of rows.
//! [`parse_scenario`] deserializes and then resolves every operator and the
//! state, so dimension problems surface before anything runs.

use std::path::Path;

use binary_povm::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator, SpectralBounds};
use binary_povm::{presets, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SHOTS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPETITIONS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Single,
    Nonhermitian,
    Bipartite,
    Multipartite,
    Witness,
    Bell,
    Compare,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

/// A `[re, im]` pair.
pub type ComplexEntry = [f64; 2];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    /// `Σ c_k O_k` as `[[c, observable], ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum: Option<Vec<(f64, ObservableSpec)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// `basis`, `maximally_mixed`, `singlet`, `ghz`, `thermal` or `random`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Pure state amplitudes, normalised on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ket: Option<Vec<ComplexEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexEntry>>>,
    /// Tensor product of the listed states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<StateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_dims: Option<Vec<usize>>,
}

/// One `coeff · A ⊗ B` term; `a` and `b` index into `observables`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub a: usize,
    pub b: usize,
    #[serde(default = "one")]
    pub coeff: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub kind: Kind,
    pub observables: Vec<ObservableSpec>,
    pub state: StateSpec,
    /// One entry per observable; `null` means tight bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<Option<SpectralBounds>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    /// Explicit seed list for `compare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// For `compare` without `seeds`: use `seed, seed + 1, ...`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<u64>,
}

/// A resolved observable. Only `nonhermitian` keeps a general matrix.
#[derive(Clone, Debug)]
pub enum Observable {
    Hermitian(HermitianOperator),
    General(ComplexMatrix),
}

impl Observable {
    pub fn hermitian(&self) -> Option<&HermitianOperator> {
        match self {
            Observable::Hermitian(h) => Some(h),
            Observable::General(_) => None,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        match self {
            Observable::Hermitian(h) => h.matrix(),
            Observable::General(m) => m,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix().nrows()
    }
}

/// Validated scenario, ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub observables: Vec<Observable>,
    pub state: DensityMatrix,
    pub bounds: Vec<Option<SpectralBounds>>,
    pub shots: u64,
    pub seed: u64,
    pub terms: Vec<TermSpec>,
    pub seeds: Vec<u64>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn kind(&self) -> Kind {
        self.file.kind
    }

    pub fn mode(&self) -> Mode {
        self.file.mode
    }

    pub fn hermitian(&self, k: usize) -> &HermitianOperator {
        self.observables[k]
            .hermitian()
            .expect("validated as Hermitian")
    }
}

/// CLI-level overrides applied before validation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

pub fn parse_scenario(path: &Path) -> CliResult<Scenario> {
    parse_scenario_with(path, Overrides::default())
}

pub fn parse_scenario_with(path: &Path, overrides: Overrides) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text, overrides)
}

pub fn parse_scenario_str(text: &str, overrides: Overrides) -> CliResult<Scenario> {
    let mut file: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if overrides.shots.is_some() {
        file.shots = overrides.shots;
    }
    if overrides.seed.is_some() {
        file.seed = overrides.seed;
    }
    validate(file)
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn validate(file: ScenarioFile) -> CliResult<Scenario> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                file.schema_version
            ),
        ));
    }
    let n_obs = file.observables.len();
    let general = file.kind == Kind::Nonhermitian;
    let observables = file
        .observables
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let field = format!("observables[{k}]");
            let m = resolve_observable(spec, &field)?;
            if general {
                Ok(Observable::General(m))
            } else {
                HermitianOperator::new(m)
                    .map(Observable::Hermitian)
                    .map_err(|e| invalid(field, e.to_string()))
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    let state = resolve_state(&file.state, "state")?;

    let bounds = match &file.bounds {
        None => vec![None; n_obs],
        Some(b) if b.len() == n_obs => b.clone(),
        Some(b) => {
            return Err(invalid(
                "bounds",
                format!("{} entries for {n_obs} observables", b.len()),
            ))
        }
    };
    let tight_only = matches!(file.kind, Kind::Nonhermitian | Kind::Witness | Kind::Bell);
    if tight_only && bounds.iter().any(Option::is_some) {
        return Err(invalid(
            "bounds",
            format!("not supported for {:?} scenarios", file.kind),
        ));
    }

    let shots = file.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(invalid("shots", "must be positive"));
    }
    let seed = file.seed.unwrap_or(DEFAULT_SEED);
    let terms = file.terms.clone().unwrap_or_default();
    let needs_terms = matches!(file.kind, Kind::Witness | Kind::Bell);
    if needs_terms && terms.is_empty() {
        return Err(invalid("terms", "required for witness and bell scenarios"));
    }
    if !needs_terms && !terms.is_empty() {
        return Err(invalid("terms", "only used by witness and bell scenarios"));
    }
    for (j, t) in terms.iter().enumerate() {
        if t.a >= n_obs || t.b >= n_obs {
            return Err(invalid(
                format!("terms[{j}]"),
                format!("observable index out of range (have {n_obs})"),
            ));
        }
        if !t.coeff.is_finite() {
            return Err(invalid(format!("terms[{j}].coeff"), "must be finite"));
        }
    }

    let seeds = match (&file.seeds, file.repetitions) {
        (Some(_), Some(_)) => return Err(invalid("seeds", "give either seeds or repetitions")),
        (Some(s), None) => s.clone(),
        (None, r) => {
            let r = r.unwrap_or(DEFAULT_REPETITIONS);
            (0..r).map(|k| seed.wrapping_add(k)).collect()
        }
    };
    if file.kind == Kind::Compare && seeds.is_empty() {
        return Err(invalid("seeds", "compare needs at least one seed"));
    }

    check_dims(&file, &observables, &state)?;

    Ok(Scenario {
        file,
        observables,
        state,
        bounds,
        shots,
        seed,
        terms,
        seeds,
    })
}

fn mismatch(field: &str, expected: usize, found: usize) -> CliError {
    invalid(
        field,
        format!("dimension mismatch: expected {expected}, found {found}"),
    )
}

fn check_dims(file: &ScenarioFile, obs: &[Observable], state: &DensityMatrix) -> CliResult<()> {
    let count = |expected: usize| -> CliResult<()> {
        if obs.len() != expected {
            return Err(invalid(
                "observables",
                format!(
                    "{:?} needs {expected} observables, found {}",
                    file.kind,
                    obs.len()
                ),
            ));
        }
        Ok(())
    };
    match file.kind {
        Kind::Single | Kind::Nonhermitian | Kind::Compare => {
            count(1)?;
            if obs[0].dim() != state.dim() {
                return Err(mismatch("state", obs[0].dim(), state.dim()));
            }
        }
        Kind::Bipartite | Kind::Multipartite => {
            if file.kind == Kind::Bipartite {
                count(2)?;
            } else if obs.len() < 2 {
                return Err(invalid(
                    "observables",
                    "multipartite needs at least 2 observables",
                ));
            }
            let dims: Vec<usize> = obs.iter().map(Observable::dim).collect();
            check_factor_dims(state, &dims)?;
        }
        Kind::Witness | Kind::Bell => {
            if obs.is_empty() {
                return Err(invalid("observables", "at least one observable required"));
            }
            let terms = file.terms.as_deref().unwrap_or_default();
            let da = obs[terms[0].a].dim();
            let db = obs[terms[0].b].dim();
            for (j, t) in terms.iter().enumerate() {
                if obs[t.a].dim() != da {
                    return Err(mismatch(&format!("terms[{j}].a"), da, obs[t.a].dim()));
                }
                if obs[t.b].dim() != db {
                    return Err(mismatch(&format!("terms[{j}].b"), db, obs[t.b].dim()));
                }
            }
            check_factor_dims(state, &[da, db])?;
        }
    }
    Ok(())
}

fn check_factor_dims(state: &DensityMatrix, dims: &[usize]) -> CliResult<()> {
    match state.factor_dims() {
        Some(f) if f != dims => Err(invalid(
            "state.factor_dims",
            format!("{f:?} does not match observable dimensions {dims:?}"),
        )),
        _ => {
            let total: usize = dims.iter().product();
            if total != state.dim() {
                Err(mismatch("state", total, state.dim()))
            } else {
                Ok(())
            }
        }
    }
}

fn to_matrix(rows: &[Vec<ComplexEntry>], field: &str) -> CliResult<ComplexMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(invalid(field, "empty matrix"));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(invalid(
            format!("{field}[{r}]"),
            format!("row has {} entries, matrix must be {n}x{n}", row.len()),
        ));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn require_dim(dim: Option<usize>, field: &str, preset: &str) -> CliResult<usize> {
    match dim {
        Some(d) if d > 0 => Ok(d),
        Some(_) => Err(invalid(format!("{field}.dim"), "must be positive")),
        None => Err(invalid(
            format!("{field}.dim"),
            format!("preset '{preset}' needs a dimension"),
        )),
    }
}

fn core_err(field: &str) -> impl Fn(binary_povm::Error) -> CliError + '_ {
    move |e| invalid(field, e.to_string())
}

pub fn resolve_observable(spec: &ObservableSpec, field: &str) -> CliResult<ComplexMatrix> {
    let sources = [
        spec.preset.is_some(),
        spec.matrix.is_some(),
        spec.diagonal.is_some(),
        spec.sum.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if sources != 1 {
        return Err(invalid(
            field,
            "give exactly one of preset, matrix, diagonal or sum",
        ));
    }
    if spec.dim.is_some() && spec.preset.is_none() {
        return Err(invalid(format!("{field}.dim"), "only used with a preset"));
    }
    let base = if let Some(name) = &spec.preset {
        let qubit = |op: HermitianOperator| -> CliResult<ComplexMatrix> {
            match spec.dim {
                Some(d) if d != 2 => Err(mismatch(&format!("{field}.dim"), 2, d)),
                _ => Ok(op.into_matrix()),
            }
        };
        let err = core_err(field);
        match name.as_str() {
            "pauli_x" => qubit(presets::pauli_x())?,
            "pauli_y" => qubit(presets::pauli_y())?,
            "pauli_z" => qubit(presets::pauli_z())?,
            "identity" => HermitianOperator::identity(require_dim(spec.dim, field, name)?)
                .map_err(&err)?
                .into_matrix(),
            "number" => presets::number(require_dim(spec.dim, field, name)?)
                .map_err(&err)?
                .into_matrix(),
            "parity" => presets::parity(require_dim(spec.dim, field, name)?)
                .map_err(&err)?
                .into_matrix(),
            "position" => presets::position(require_dim(spec.dim, field, name)?)
                .map_err(&err)?
                .into_matrix(),
            "momentum" => presets::momentum(require_dim(spec.dim, field, name)?)
                .map_err(&err)?
                .into_matrix(),
            "annihilation" => {
                presets::annihilation(require_dim(spec.dim, field, name)?).map_err(&err)?
            }
            other => {
                return Err(invalid(
                    format!("{field}.preset"),
                    format!("unknown observable preset '{other}'"),
                ))
            }
        }
    } else if let Some(rows) = &spec.matrix {
        to_matrix(rows, &format!("{field}.matrix"))?
    } else if let Some(diag) = &spec.diagonal {
        HermitianOperator::diagonal(diag)
            .map_err(core_err(field))?
            .into_matrix()
    } else {
        let parts = spec.sum.as_deref().unwrap_or_default();
        if parts.is_empty() {
            return Err(invalid(format!("{field}.sum"), "empty sum"));
        }
        let mut acc: Option<ComplexMatrix> = None;
        for (k, (c, sub)) in parts.iter().enumerate() {
            let sub_field = format!("{field}.sum[{k}]");
            let m = resolve_observable(sub, &sub_field)? * Complex64::from(*c);
            acc = Some(match acc {
                None => m,
                Some(a) if a.shape() == m.shape() => a + m,
                Some(a) => return Err(mismatch(&sub_field, a.nrows(), m.nrows())),
            });
        }
        acc.expect("non-empty sum")
    };
    Ok(match spec.scale {
        Some(s) if !s.is_finite() => {
            return Err(invalid(format!("{field}.scale"), "must be finite"))
        }
        Some(s) => base * Complex64::from(s),
        None => base,
    })
}

pub fn resolve_state(spec: &StateSpec, field: &str) -> CliResult<DensityMatrix> {
    let sources = [
        spec.preset.is_some(),
        spec.ket.is_some(),
        spec.matrix.is_some(),
        spec.product.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if sources != 1 {
        return Err(invalid(
            field,
            "give exactly one of preset, ket, matrix or product",
        ));
    }
    let err = core_err(field);
    let rho = if let Some(name) = &spec.preset {
        match name.as_str() {
            "basis" => {
                presets::basis_state(require_dim(spec.dim, field, name)?, spec.index.unwrap_or(0))
                    .map_err(&err)?
            }
            "maximally_mixed" => {
                presets::maximally_mixed(require_dim(spec.dim, field, name)?).map_err(&err)?
            }
            "singlet" => presets::singlet(),
            "ghz" => presets::ghz(
                spec.n
                    .ok_or_else(|| invalid(format!("{field}.n"), "ghz needs a party count"))?,
            )
            .map_err(&err)?,
            "thermal" => presets::thermal(
                spec.nbar
                    .ok_or_else(|| invalid(format!("{field}.nbar"), "thermal needs nbar"))?,
                require_dim(spec.dim, field, name)?,
            )
            .map_err(&err)?,
            "random" => binary_povm::linalg::random_density(
                require_dim(spec.dim, field, name)?,
                spec.seed.unwrap_or(0),
            )
            .map_err(&err)?,
            other => {
                return Err(invalid(
                    format!("{field}.preset"),
                    format!("unknown state preset '{other}'"),
                ))
            }
        }
    } else if let Some(amps) = &spec.ket {
        let amps: Vec<Complex64> = amps
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        DensityMatrix::from_ket(&amps).map_err(&err)?
    } else if let Some(rows) = &spec.matrix {
        DensityMatrix::new(to_matrix(rows, &format!("{field}.matrix"))?).map_err(&err)?
    } else {
        let parts = spec
            .product
            .as_deref()
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(k, s)| resolve_state(s, &format!("{field}.product[{k}]")))
            .collect::<CliResult<Vec<_>>>()?;
        let refs: Vec<&DensityMatrix> = parts.iter().collect();
        DensityMatrix::product(&refs).map_err(&err)?
    };
    match &spec.factor_dims {
        Some(dims) => rho
            .with_factor_dims(dims.clone())
            .map_err(core_err(&format!("{field}.factor_dims"))),
        None => Ok(rho),
    }
}
