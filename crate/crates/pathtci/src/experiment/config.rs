//! Declarative experiment configuration.
//!
//! A single human-editable TOML document drives every campaign. Drift,
//! diffusion, and perturbation coefficients are chosen from a catalog of
//! named forms instead of arbitrary expressions, which keeps the declared
//! Lipschitz/dissipativity constants auditable. Validation collects every
//! schema violation, not just the first. The canonical form for hashing is
//! the JSON serialization of the validated config (fixed key order), so
//! whitespace-only edits hash identically.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{InequalityTag, DEFAULT_DAVIS_CONSTANT};
use crate::error::{Error, Result};
use crate::transport::DEFAULT_EXACT_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Lipschitz,
    Dissipative,
    Multivalued,
    Dyson,
    Custom,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::Lipschitz => "lipschitz",
            Scenario::Dissipative => "dissipative",
            Scenario::Multivalued => "multivalued",
            Scenario::Dyson => "dyson",
            Scenario::Custom => "custom",
        };
        write!(f, "{name}")
    }
}

/// Named path-dependent drift forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftForm {
    Zero,
    Constant { value: Vec<f64> },
    /// `b = rate * x_t`.
    Linear { rate: f64 },
    /// `b = -theta * x_t`.
    Ou { theta: f64 },
    /// Componentwise running maximum: `b_j = coeff * sup_{s<=t} x_j(s)`.
    SupPast { coeff: f64 },
    /// Yosida drift `b_n` of a monotone operator.
    Yosida { operator: OperatorSpec, n: u32 },
    /// Raw singular interacting-particle drift (simulable only away from
    /// collisions; ladder campaigns regularize it through `yosida`).
    Dyson { gamma: f64 },
}

/// Monotone operator specifications for `yosida` drifts and ladders.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Linear { matrix: Vec<Vec<f64>> },
    NormalConeBox { lower: Vec<f64>, upper: Vec<f64> },
    NormalConeHalfSpace { normal: Vec<f64>, offset: f64 },
    NormalConeOrdered,
    LogGap { gamma: f64 },
}

/// Named state-dependent (Lipschitz) drift forms for the `m` slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDriftForm {
    Zero,
    Constant { value: Vec<f64> },
    Linear { rate: f64 },
}

/// Named diffusion forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaForm {
    /// `value * I`.
    Constant { value: f64 },
    /// Constant full matrix.
    Matrix { entries: Vec<Vec<f64>> },
    /// `diag(base + amplitude * sin(x_j))`: bounded, `amplitude`-Lipschitz.
    BoundedSine { base: f64, amplitude: f64 },
    /// `diag(offset + slope * x_j)`: Lipschitz but unbounded.
    LinearState { offset: f64, slope: f64 },
}

/// Named perturbation forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationForm {
    Zero,
    /// Scalar broadcast to every component.
    Constant { value: f64 },
    ConstantVector { value: Vec<f64> },
    /// `v̇(t) = slope * t`, broadcast.
    TimeLinear { slope: f64 },
    /// `v̇_j = amplitude * sin(x_j)`.
    SinState { amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub initial: Vec<f64>,
    pub lipschitz_k: f64,
    pub growth_n: f64,
    pub sigma_sup: Option<f64>,
    pub drift: DriftForm,
    pub extra_drift: StateDriftForm,
    pub sigma: SigmaForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub form: PerturbationForm,
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtSolver {
    Exact,
    Sinkhorn,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OtSettings {
    pub solver: OtSolver,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub cap: usize,
}

impl Default for OtSettings {
    fn default() -> Self {
        Self {
            solver: OtSolver::None,
            epsilon: 1e-3,
            max_iters: 10_000,
            tol: 1e-9,
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderSpec {
    pub n_values: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSettings {
    pub c_davis: f64,
    pub eq4_alt_bracket: bool,
    /// Lipschitz constant entering the bound constants; defaults to the
    /// problem's declared constant. Dissipative scenarios use the constant
    /// of sigma and m only, which is typically smaller.
    pub k: Option<f64>,
    pub prop2_a: Option<f64>,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            c_davis: DEFAULT_DAVIS_CONSTANT,
            eq4_alt_bracket: false,
            k: None,
            prop2_a: None,
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_paths: usize,
    pub out_dir: String,
    pub inequalities: Vec<InequalityTag>,
    pub grid: GridSpec,
    pub problem: ProblemSpec,
    pub perturbation: PerturbationSpec,
    pub ot: OtSettings,
    pub ladder: Option<LadderSpec>,
    pub bounds: BoundSettings,
}

impl ExperimentConfig {
    /// Canonical byte representation: JSON with the fixed field order of
    /// the validated struct.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    /// SHA-256 of the canonical bytes, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    seed: Option<u64>,
    n_paths: Option<usize>,
    out_dir: Option<String>,
    inequalities: Option<Vec<String>>,
    grid: Option<RawGrid>,
    problem: Option<RawProblem>,
    perturbation: Option<toml::Value>,
    ot: Option<RawOt>,
    ladder: Option<RawLadder>,
    bounds: Option<RawBounds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    horizon: Option<f64>,
    n_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    dimension: Option<usize>,
    initial: Option<Vec<f64>>,
    lipschitz_k: Option<f64>,
    growth_n: Option<f64>,
    sigma_sup: Option<f64>,
    drift: Option<toml::Value>,
    extra_drift: Option<toml::Value>,
    sigma: Option<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOt {
    solver: Option<String>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadder {
    n_values: Option<Vec<u32>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    c_davis: Option<f64>,
    eq4_alt_bracket: Option<bool>,
    k: Option<f64>,
    prop2_a: Option<f64>,
}

struct Violations(Vec<String>);

impl Violations {
    fn push(&mut self, path: &str, message: impl std::fmt::Display) {
        self.0.push(format!("{path}: {message}"));
    }
}

fn parse_form<T: serde::de::DeserializeOwned>(
    value: &Option<toml::Value>,
    path: &str,
    default: T,
    violations: &mut Violations,
) -> T {
    match value {
        None => default,
        Some(v) => match v.clone().try_into::<T>() {
            Ok(form) => form,
            Err(e) => {
                violations.push(path, e.message());
                default
            }
        },
    }
}

/// Parse and validate a configuration document. Syntax errors surface as a
/// single violation; schema errors are all collected and reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::Config(vec![format!("toml: {}", e.message())]))?;
    let mut v = Violations(Vec::new());

    let scenario = match raw.scenario.as_deref() {
        None => {
            v.push("scenario", "required field is missing");
            Scenario::Custom
        }
        Some("lipschitz") => Scenario::Lipschitz,
        Some("dissipative") => Scenario::Dissipative,
        Some("multivalued") => Scenario::Multivalued,
        Some("dyson") => Scenario::Dyson,
        Some("custom") => Scenario::Custom,
        Some(other) => {
            v.push("scenario", format!("unknown scenario `{other}`"));
            Scenario::Custom
        }
    };

    let seed = match raw.seed {
        Some(s) => s,
        None => {
            v.push("seed", "required field is missing");
            0
        }
    };

    let n_paths = raw.n_paths.unwrap_or(0);
    if n_paths == 0 {
        v.push("n_paths", "must be a positive integer");
    }

    let grid = match raw.grid {
        None => {
            v.push("grid", "required section is missing");
            GridSpec {
                horizon: 1.0,
                n_steps: 1,
            }
        }
        Some(g) => {
            let horizon = g.horizon.unwrap_or(1.0);
            if !(horizon > 0.0) || !horizon.is_finite() {
                v.push("grid.horizon", "must be positive and finite");
            }
            let n_steps = g.n_steps.unwrap_or(0);
            if n_steps == 0 {
                v.push("grid.n_steps", "must be a positive integer");
            }
            GridSpec {
                horizon,
                n_steps: n_steps.max(1),
            }
        }
    };

    let problem = validate_problem(raw.problem, &mut v);
    let perturbation = validate_perturbation(raw.perturbation, &mut v);

    let mut inequalities = Vec::new();
    for tag in raw.inequalities.unwrap_or_default() {
        match tag.as_str() {
            "thm1" => inequalities.push(InequalityTag::Thm1),
            "prop1" => inequalities.push(InequalityTag::Prop1),
            "prop2" => inequalities.push(InequalityTag::Prop2),
            other => v.push("inequalities", format!("unknown inequality `{other}`")),
        }
    }
    if inequalities.contains(&InequalityTag::Prop1) && problem.sigma_sup.is_none() {
        v.push(
            "problem.sigma_sup",
            "prop1 needs a uniform bound on sigma; use prop2 for unbounded sigma",
        );
    }

    let ot = match raw.ot {
        None => OtSettings::default(),
        Some(o) => {
            let solver = match o.solver.as_deref() {
                None => OtSolver::None,
                Some("exact") => OtSolver::Exact,
                Some("sinkhorn") => OtSolver::Sinkhorn,
                Some("none") => OtSolver::None,
                Some(other) => {
                    v.push("ot.solver", format!("unknown solver `{other}`"));
                    OtSolver::None
                }
            };
            let d = OtSettings::default();
            let epsilon = o.epsilon.unwrap_or(d.epsilon);
            if !(epsilon > 0.0) {
                v.push("ot.epsilon", "must be positive");
            }
            OtSettings {
                solver,
                epsilon,
                max_iters: o.max_iters.unwrap_or(d.max_iters),
                tol: o.tol.unwrap_or(d.tol),
                cap: o.cap.unwrap_or(d.cap),
            }
        }
    };

    let ladder = match raw.ladder {
        None => None,
        Some(l) => {
            let n_values = l.n_values.unwrap_or_default();
            if n_values.is_empty() {
                v.push("ladder.n_values", "must list at least one level");
            }
            if n_values.iter().any(|n| *n == 0) {
                v.push("ladder.n_values", "levels must be positive integers");
            }
            if !matches!(
                problem.drift,
                DriftForm::Yosida { .. } | DriftForm::Dyson { .. }
            ) {
                v.push(
                    "ladder",
                    "a ladder needs a `yosida` or `dyson` drift to regularize",
                );
            }
            Some(LadderSpec { n_values })
        }
    };

    let bounds = match raw.bounds {
        None => BoundSettings::default(),
        Some(b) => {
            let d = BoundSettings::default();
            let c_davis = b.c_davis.unwrap_or(d.c_davis);
            if !(c_davis > 0.0) {
                v.push("bounds.c_davis", "must be positive");
            }
            BoundSettings {
                c_davis,
                eq4_alt_bracket: b.eq4_alt_bracket.unwrap_or(false),
                k: b.k,
                prop2_a: b.prop2_a,
            }
        }
    };

    // Scenario/drift coherence.
    match scenario {
        Scenario::Dyson => {
            let ok = matches!(problem.drift, DriftForm::Dyson { .. })
                || matches!(
                    problem.drift,
                    DriftForm::Yosida {
                        operator: OperatorSpec::LogGap { .. },
                        ..
                    }
                );
            if !ok {
                v.push(
                    "problem.drift",
                    "dyson scenario needs a `dyson` drift or a `yosida` drift over `log_gap`",
                );
            }
        }
        Scenario::Multivalued => {
            if !matches!(problem.drift, DriftForm::Yosida { .. })
                && !matches!(problem.drift, DriftForm::Dyson { .. })
            {
                v.push(
                    "problem.drift",
                    "multivalued scenario needs a `yosida` drift",
                );
            }
        }
        _ => {}
    }

    if !v.0.is_empty() {
        return Err(Error::Config(v.0));
    }
    Ok(ExperimentConfig {
        scenario,
        seed,
        n_paths,
        out_dir: raw.out_dir.unwrap_or_else(|| "out".into()),
        inequalities,
        grid,
        problem,
        perturbation,
        ot,
        ladder,
        bounds,
    })
}

fn validate_problem(raw: Option<RawProblem>, v: &mut Violations) -> ProblemSpec {
    let fallback = ProblemSpec {
        dimension: 1,
        initial: vec![0.0],
        lipschitz_k: 0.0,
        growth_n: 0.0,
        sigma_sup: None,
        drift: DriftForm::Zero,
        extra_drift: StateDriftForm::Zero,
        sigma: SigmaForm::Constant { value: 1.0 },
    };
    let Some(raw) = raw else {
        v.push("problem", "required section is missing");
        return fallback;
    };
    let dimension = raw.dimension.unwrap_or(0);
    if dimension == 0 {
        v.push("problem.dimension", "must be a positive integer");
    }
    let initial = raw.initial.unwrap_or_default();
    if dimension > 0 && initial.len() != dimension {
        v.push(
            "problem.initial",
            format!("needs {dimension} components, got {}", initial.len()),
        );
    }
    let lipschitz_k = raw.lipschitz_k.unwrap_or(0.0);
    if lipschitz_k < 0.0 || !lipschitz_k.is_finite() {
        v.push("problem.lipschitz_k", "must be finite and nonnegative");
    }
    let growth_n = raw.growth_n.unwrap_or(0.0);
    if growth_n < 0.0 || !growth_n.is_finite() {
        v.push("problem.growth_n", "must be finite and nonnegative");
    }
    if let Some(s) = raw.sigma_sup {
        if !(s >= 0.0) || !s.is_finite() {
            v.push("problem.sigma_sup", "must be finite and nonnegative");
        }
    }

    let drift = parse_form(&raw.drift, "problem.drift", DriftForm::Zero, v);
    validate_drift(&drift, dimension, &initial, v);
    let extra_drift = parse_form(
        &raw.extra_drift,
        "problem.extra_drift",
        StateDriftForm::Zero,
        v,
    );
    if let StateDriftForm::Constant { value } = &extra_drift {
        if dimension > 0 && value.len() != dimension {
            v.push("problem.extra_drift.value", "length must match the dimension");
        }
    }
    let sigma = parse_form(
        &raw.sigma,
        "problem.sigma",
        SigmaForm::Constant { value: 1.0 },
        v,
    );
    if let SigmaForm::Matrix { entries } = &sigma {
        if dimension > 0
            && (entries.len() != dimension
                || entries.iter().any(|row| row.len() != dimension))
        {
            v.push("problem.sigma.entries", "must be a square dimension x dimension matrix");
        }
    }

    ProblemSpec {
        dimension: dimension.max(1),
        initial,
        lipschitz_k,
        growth_n,
        sigma_sup: raw.sigma_sup,
        drift,
        extra_drift,
        sigma,
    }
}

fn validate_drift(drift: &DriftForm, dimension: usize, initial: &[f64], v: &mut Violations) {
    match drift {
        DriftForm::Constant { value } => {
            if dimension > 0 && value.len() != dimension {
                v.push("problem.drift.value", "length must match the dimension");
            }
        }
        DriftForm::Dyson { gamma } => {
            if !(*gamma > 0.0) {
                v.push("problem.drift.gamma", "must be positive");
            }
            if dimension < 2 {
                v.push("problem.drift", "dyson drift needs dimension at least 2");
            }
            if initial.windows(2).any(|w| w[1] <= w[0]) {
                v.push(
                    "problem.initial",
                    "dyson drift needs a strictly increasing initial point",
                );
            }
        }
        DriftForm::Yosida { operator, .. } => match operator {
            OperatorSpec::LogGap { gamma } => {
                if !(*gamma > 0.0) {
                    v.push("problem.drift.operator.gamma", "must be positive");
                }
            }
            OperatorSpec::Linear { matrix } => {
                if dimension > 0
                    && (matrix.len() != dimension
                        || matrix.iter().any(|row| row.len() != dimension))
                {
                    v.push(
                        "problem.drift.operator.matrix",
                        "must be a square dimension x dimension matrix",
                    );
                }
            }
            OperatorSpec::NormalConeBox { lower, upper } => {
                if dimension > 0 && (lower.len() != dimension || upper.len() != dimension) {
                    v.push(
                        "problem.drift.operator",
                        "box bounds must match the dimension",
                    );
                }
            }
            OperatorSpec::NormalConeHalfSpace { normal, .. } => {
                if dimension > 0 && normal.len() != dimension {
                    v.push(
                        "problem.drift.operator.normal",
                        "must match the dimension",
                    );
                }
            }
            OperatorSpec::NormalConeOrdered => {}
        },
        _ => {}
    }
    if let DriftForm::Yosida { n, .. } = drift {
        if *n == 0 {
            v.push("problem.drift.n", "must be a positive integer");
        }
    }
}

fn validate_perturbation(raw: Option<toml::Value>, v: &mut Violations) -> PerturbationSpec {
    let Some(value) = raw else {
        return PerturbationSpec {
            form: PerturbationForm::Zero,
            budget: None,
        };
    };
    match value.try_into::<PerturbationSpec>() {
        Ok(spec) => {
            if let Some(b) = spec.budget {
                if !(b > 0.0) {
                    v.push("perturbation.budget", "must be positive");
                }
            }
            spec
        }
        Err(e) => {
            v.push("perturbation", e.message());
            PerturbationSpec {
                form: PerturbationForm::Zero,
                budget: None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
scenario = "lipschitz"
seed = 42
n_paths = 16
inequalities = ["thm1"]

[grid]
horizon = 1.0
n_steps = 32

[problem]
dimension = 1
initial = [0.0]
lipschitz_k = 0.0
growth_n = 0.0
sigma_sup = 1.0

[problem.drift]
form = "zero"

[problem.sigma]
form = "constant"
value = 1.0

[perturbation]
form = "constant"
value = 1.0
"#;

    #[test]
    fn minimal_document_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.scenario, Scenario::Lipschitz);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.inequalities, vec![InequalityTag::Thm1]);
        assert!(matches!(cfg.problem.drift, DriftForm::Zero));
        assert!(matches!(
            cfg.perturbation.form,
            PerturbationForm::Constant { value } if value == 1.0
        ));
    }

    #[test]
    fn missing_seed_is_named() {
        let text = MINIMAL.replace("seed = 42", "");
        match parse_config(&text) {
            Err(Error::Config(violations)) => {
                assert!(
                    violations.iter().any(|v| v.starts_with("seed:")),
                    "{violations:?}"
                );
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn negative_gamma_rejected() {
        let text = r#"
scenario = "dyson"
seed = 1
n_paths = 4

[grid]
horizon = 1.0
n_steps = 8

[problem]
dimension = 3
initial = [-1.0, 0.0, 1.0]
lipschitz_k = 0.0
growth_n = 0.0

[problem.drift]
form = "dyson"
gamma = -1.0

[problem.sigma]
form = "constant"
value = 1.0
"#;
        match parse_config(text) {
            Err(Error::Config(violations)) => {
                assert!(
                    violations
                        .iter()
                        .any(|v| v.contains("gamma") && v.contains("positive")),
                    "{violations:?}"
                );
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn all_violations_collected() {
        let text = r#"
scenario = "nope"
n_paths = 0

[grid]
n_steps = 0

[problem]
dimension = 2
initial = [0.0]
lipschitz_k = -1.0
growth_n = 0.0

[problem.drift]
form = "wiggle"

[problem.sigma]
form = "constant"
value = 1.0
"#;
        match parse_config(text) {
            Err(Error::Config(violations)) => {
                assert!(violations.len() >= 6, "{violations:?}");
                for needle in [
                    "scenario",
                    "seed",
                    "n_paths",
                    "grid.n_steps",
                    "problem.initial",
                    "problem.lipschitz_k",
                    "problem.drift",
                ] {
                    assert!(
                        violations.iter().any(|v| v.starts_with(needle)),
                        "missing violation for {needle}: {violations:?}"
                    );
                }
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn hash_stable_under_whitespace_edits() {
        let a = parse_config(MINIMAL).unwrap();
        let reformatted = MINIMAL.replace("seed = 42", "seed    =   42").replace('\n', "\n\n");
        let b = parse_config(&reformatted).unwrap();
        assert_eq!(a.hash(), b.hash());
        // A real edit changes the hash.
        let c = parse_config(&MINIMAL.replace("seed = 42", "seed = 43")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn config_roundtrips_through_canonical_json() {
        let cfg = parse_config(MINIMAL).unwrap();
        let json = String::from_utf8(cfg.canonical_bytes()).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg.hash(), back.hash());
    }
}
