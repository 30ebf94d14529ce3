//! Configuration-driven verification campaigns: simulate, couple, estimate,
//! bound, report.

pub mod catalog;
pub mod config;
pub mod report;

use std::time::Instant;

use serde::Serialize;

use crate::bounds::{verify_inequality, BoundParams, BoundReport};
use crate::error::Result;
use crate::estimate::Estimate;
use crate::girsanov::{
    coupling_cost, entropy_estimate, martingale_check, simulate_coupled, CoupledEnsemble,
};
use crate::grid::TimeGrid;
use crate::transport::{
    empirical_w2_exact_with_cap, empirical_w2_sinkhorn, OtMethod, OtResult,
};

use config::{ExperimentConfig, OtSolver, Scenario};

/// Solver metadata for the bundle, without the plan payload.
#[derive(Debug, Clone, Serialize)]
pub struct OtSummary {
    pub value: f64,
    pub method: OtMethod,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&OtResult> for OtSummary {
    fn from(r: &OtResult) -> Self {
        Self {
            value: r.value,
            method: r.method,
            epsilon: r.epsilon,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Raw Monte Carlo estimates backing the verdicts of one record.
#[derive(Debug, Clone, Serialize)]
pub struct RawEstimates {
    pub coupling_cost: Estimate,
    pub entropy: Estimate,
    /// Mean importance weight `exp(log_density)`; 1 in expectation.
    pub martingale_mean: Estimate,
    pub ot: Option<OtSummary>,
    /// Mean over paths of the minimum adjacent gap of the sorted state,
    /// minimized over time; only for dimension >= 2.
    pub min_gap: Option<Estimate>,
    pub truncated_pairs: usize,
}

/// One scenario evaluation (one ladder rung, or the single main record).
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRecord {
    pub label: String,
    pub yosida_n: Option<u32>,
    pub estimates: RawEstimates,
    pub reports: Vec<BoundReport>,
}

/// Everything a campaign produces, reproducible from `(config, version)`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<ScenarioRecord>,
    pub timing_ms: u64,
}

impl ReportBundle {
    /// Serialization with the timing field zeroed: the byte-comparison
    /// surface for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let mut clone = self.clone();
        clone.timing_ms = 0;
        serde_json::to_string_pretty(&clone).expect("bundle serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn all_reports(&self) -> impl Iterator<Item = &BoundReport> {
        self.records.iter().flat_map(|r| r.reports.iter())
    }
}

/// A campaign result with optionally retained coupled ensembles (for the
/// per-path dump).
pub struct ExperimentOutput {
    pub bundle: ReportBundle,
    pub coupled: Vec<(String, CoupledEnsemble)>,
}

/// Run the campaign a config describes. Ladder configs produce one record
/// per regularization level; everything else produces a single record.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    Ok(run_experiment_with_paths(config, false)?.bundle)
}

/// As [`run_experiment`], retaining the coupled ensembles when `keep_paths`
/// is set so they can be dumped to containers.
pub fn run_experiment_with_paths(
    config: &ExperimentConfig,
    keep_paths: bool,
) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let grid = TimeGrid::new(config.grid.horizon, config.grid.n_steps)?;
    let pert = catalog::build_perturbation(&config.perturbation)?;

    let rungs: Vec<Option<u32>> = match &config.ladder {
        Some(ladder) => ladder.n_values.iter().map(|n| Some(*n)).collect(),
        None => vec![None],
    };

    let mut records = Vec::with_capacity(rungs.len());
    let mut coupled_kept = Vec::new();
    for rung in rungs {
        let problem = catalog::build_problem(&config.problem, rung)?;
        let label = match rung {
            Some(n) => format!("n={n}"),
            None => "main".to_string(),
        };
        let coupled = simulate_coupled(&problem, &pert, &grid, config.n_paths, config.seed)?;
        let record = evaluate_record(config, &label, rung, &coupled)?;
        records.push(record);
        if keep_paths {
            coupled_kept.push((label, coupled));
        }
    }

    let bundle = ReportBundle {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario,
        seed: config.seed,
        config_hash: config.hash(),
        records,
        timing_ms: start.elapsed().as_millis() as u64,
    };
    Ok(ExperimentOutput {
        bundle,
        coupled: coupled_kept,
    })
}

fn evaluate_record(
    config: &ExperimentConfig,
    label: &str,
    yosida_n: Option<u32>,
    coupled: &CoupledEnsemble,
) -> Result<ScenarioRecord> {
    let cost = coupling_cost(coupled)?;
    let entropy_full = entropy_estimate(coupled, coupled.grid().horizon())?;
    let entropy = Estimate {
        value: entropy_full.value,
        std_err: entropy_full.std_err,
        n: entropy_full.n_pairs,
    };
    let martingale = martingale_check(coupled);

    let ot = match config.ot.solver {
        OtSolver::None => None,
        OtSolver::Exact => {
            let mu = coupled.base_marginal();
            let nu = coupled.shifted_marginal();
            Some(OtSummary::from(&empirical_w2_exact_with_cap(
                &mu,
                &nu,
                config.ot.cap,
            )?))
        }
        OtSolver::Sinkhorn => {
            let mu = coupled.base_marginal();
            let nu = coupled.shifted_marginal();
            Some(OtSummary::from(&empirical_w2_sinkhorn(
                &mu,
                &nu,
                config.ot.epsilon,
                config.ot.max_iters,
                config.ot.tol,
            )?))
        }
    };

    let min_gap = (coupled.pairs()[0].base.dim() >= 2).then(|| min_gap_estimate(coupled));
    let truncated_pairs = coupled.pairs().iter().filter(|p| p.truncated).count();

    let params = BoundParams {
        lipschitz_k: config.bounds.k.unwrap_or(config.problem.lipschitz_k),
        sigma_sup: config.problem.sigma_sup,
        davis_constant: config.bounds.c_davis,
        prop2_a: config.bounds.prop2_a,
        delta: None,
        horizon: config.grid.horizon,
        eq4_alt_bracket: config.bounds.eq4_alt_bracket,
    };
    let mut reports = Vec::with_capacity(config.inequalities.len());
    for tag in &config.inequalities {
        reports.push(verify_inequality(*tag, cost, entropy, &params)?);
    }

    Ok(ScenarioRecord {
        label: label.to_string(),
        yosida_n,
        estimates: RawEstimates {
            coupling_cost: cost,
            entropy,
            martingale_mean: martingale,
            ot,
            min_gap,
            truncated_pairs,
        },
        reports,
    })
}

/// Per base path: the minimum over grid nodes of the smallest adjacent gap
/// of the component-sorted state.
fn min_gap_estimate(coupled: &CoupledEnsemble) -> Estimate {
    let d = coupled.pairs()[0].base.dim();
    let gaps: Vec<f64> = coupled
        .pairs()
        .iter()
        .map(|pair| {
            let mut min_gap = f64::INFINITY;
            let mut sorted = vec![0.0; d];
            for k in 0..pair.base.n_nodes() {
                sorted.copy_from_slice(pair.base.node(k));
                sorted.sort_by(f64::total_cmp);
                for w in sorted.windows(2) {
                    min_gap = min_gap.min(w[1] - w[0]);
                }
            }
            min_gap
        })
        .collect();
    Estimate::from_samples(&gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Verdict;
    use config::parse_config;

    const ADDITIVE: &str = r#"
scenario = "lipschitz"
seed = 11
n_paths = 64
inequalities = ["thm1"]

[grid]
horizon = 1.0
n_steps = 128

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
    fn additive_scenario_holds_exactly() {
        let cfg = parse_config(ADDITIVE).unwrap();
        let bundle = run_experiment(&cfg).unwrap();
        assert_eq!(bundle.records.len(), 1);
        let rec = &bundle.records[0];
        assert_eq!(rec.estimates.coupling_cost.value, 1.0);
        assert_eq!(rec.estimates.coupling_cost.std_err, 0.0);
        assert_eq!(rec.estimates.entropy.value, 0.5);
        let report = &rec.reports[0];
        assert_eq!(report.rhs, 3.0);
        assert_eq!(report.verdict, Verdict::Holds);
    }

    #[test]
    fn reruns_are_byte_identical_modulo_timing() {
        let cfg = parse_config(ADDITIVE).unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
    }

    #[test]
    fn ladder_produces_one_record_per_rung() {
        let cfg = parse_config(
            r#"
scenario = "dyson"
seed = 5
n_paths = 16
inequalities = ["prop1"]

[grid]
horizon = 1.0
n_steps = 64

[problem]
dimension = 3
initial = [-1.0, 0.0, 1.0]
lipschitz_k = 0.0
growth_n = 0.0
sigma_sup = 1.7320508075688772

[problem.drift]
form = "dyson"
gamma = 0.5

[problem.sigma]
form = "constant"
value = 1.0

[perturbation]
form = "constant"
value = 1.0

[ladder]
n_values = [1, 4, 16]

[bounds]
k = 0.0
"#,
        )
        .unwrap();
        let bundle = run_experiment(&cfg).unwrap();
        assert_eq!(bundle.records.len(), 3);
        for (rec, n) in bundle.records.iter().zip([1u32, 4, 16]) {
            assert_eq!(rec.yosida_n, Some(n));
            assert_eq!(rec.label, format!("n={n}"));
            assert!(rec.estimates.min_gap.is_some());
            assert_eq!(rec.reports[0].verdict, Verdict::Holds);
            // Bound constants are n-independent.
            assert_eq!(rec.reports[0].params.lipschitz_k, 0.0);
        }
    }
}
