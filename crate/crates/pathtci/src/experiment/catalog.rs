//! Lowering of named catalog forms into evaluators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::girsanov::{
    sin_state_perturbation, time_linear_perturbation, DriftPerturbation,
};
use crate::monotone::{make_yosida_problem, ConvexSet, MonotoneOperator, YosidaApprox};
use crate::path::PastPath;
use crate::sde::{Diffusion, DiffusionFn, PathDrift, SdeProblem, StateDrift};

use super::config::{
    DriftForm, OperatorSpec, PerturbationForm, PerturbationSpec, ProblemSpec, SigmaForm,
    StateDriftForm,
};

pub fn build_operator(spec: &OperatorSpec, dim: usize) -> Result<MonotoneOperator> {
    match spec {
        OperatorSpec::Linear { matrix } => {
            let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
            MonotoneOperator::linear(flat, dim)
        }
        OperatorSpec::NormalConeBox { lower, upper } => MonotoneOperator::normal_cone(
            ConvexSet::Box {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            dim,
        ),
        OperatorSpec::NormalConeHalfSpace { normal, offset } => MonotoneOperator::normal_cone(
            ConvexSet::HalfSpace {
                normal: normal.clone(),
                offset: *offset,
            },
            dim,
        ),
        OperatorSpec::NormalConeOrdered => {
            MonotoneOperator::normal_cone(ConvexSet::OrderedCone, dim)
        }
        OperatorSpec::LogGap { gamma } => MonotoneOperator::log_gap_barrier(*gamma, dim),
    }
}

fn build_sigma(spec: &SigmaForm) -> Arc<dyn Diffusion> {
    match spec {
        SigmaForm::Constant { value } => {
            let c = *value;
            Arc::new(DiffusionFn(move |_t: f64, x: &[f64], out: &mut [f64]| {
                let d = x.len();
                out.fill(0.0);
                for j in 0..d {
                    out[j * d + j] = c;
                }
            }))
        }
        SigmaForm::Matrix { entries } => {
            let flat: Vec<f64> = entries.iter().flatten().copied().collect();
            Arc::new(DiffusionFn(move |_t: f64, _x: &[f64], out: &mut [f64]| {
                out.copy_from_slice(&flat);
            }))
        }
        SigmaForm::BoundedSine { base, amplitude } => {
            let (b, a) = (*base, *amplitude);
            Arc::new(DiffusionFn(move |_t: f64, x: &[f64], out: &mut [f64]| {
                let d = x.len();
                out.fill(0.0);
                for j in 0..d {
                    out[j * d + j] = b + a * x[j].sin();
                }
            }))
        }
        SigmaForm::LinearState { offset, slope } => {
            let (b, a) = (*offset, *slope);
            Arc::new(DiffusionFn(move |_t: f64, x: &[f64], out: &mut [f64]| {
                let d = x.len();
                out.fill(0.0);
                for j in 0..d {
                    out[j * d + j] = b + a * x[j];
                }
            }))
        }
    }
}

fn build_extra_drift(spec: &StateDriftForm) -> Option<Arc<dyn StateDrift>> {
    match spec {
        StateDriftForm::Zero => None,
        StateDriftForm::Constant { value } => {
            let v = value.clone();
            let f: Arc<dyn StateDrift> =
                Arc::new(move |_t: f64, _x: &[f64], out: &mut [f64]| {
                    out.copy_from_slice(&v)
                });
            Some(f)
        }
        StateDriftForm::Linear { rate } => {
            let r = *rate;
            let f: Arc<dyn StateDrift> = Arc::new(move |_t: f64, x: &[f64], out: &mut [f64]| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = r * xi;
                }
            });
            Some(f)
        }
    }
}

fn simple_drift(form: &DriftForm) -> Option<(Arc<dyn PathDrift>, bool)> {
    let drift: (Arc<dyn PathDrift>, bool) = match form {
        DriftForm::Zero => (crate::sde::zero_drift(), true),
        DriftForm::Constant { value } => {
            let v = value.clone();
            (
                Arc::new(move |_t: f64, _past: PastPath<'_>, out: &mut [f64]| {
                    out.copy_from_slice(&v)
                }),
                true,
            )
        }
        DriftForm::Linear { rate } => (crate::sde::linear_drift(*rate), true),
        DriftForm::Ou { theta } => (crate::sde::linear_drift(-theta), true),
        DriftForm::SupPast { coeff } => {
            let c = *coeff;
            (
                Arc::new(move |_t: f64, past: PastPath<'_>, out: &mut [f64]| {
                    for (j, o) in out.iter_mut().enumerate() {
                        let sup = (0..past.n_nodes())
                            .map(|k| past.node(k)[j])
                            .fold(f64::NEG_INFINITY, f64::max);
                        *o = c * sup;
                    }
                }),
                true,
            )
        }
        DriftForm::Dyson { gamma } => {
            let g = *gamma;
            (
                Arc::new(move |_t: f64, past: PastPath<'_>, out: &mut [f64]| {
                    match crate::monotone::dyson_drift(past.current(), g) {
                        Ok(b) => out.copy_from_slice(&b),
                        Err(_) => out.fill(f64::NAN),
                    }
                }),
                false,
            )
        }
        DriftForm::Yosida { .. } => return None,
    };
    Some(drift)
}

/// Build the full problem a spec describes; `yosida_n` overrides the drift's
/// regularization level (the ladder hook).
pub fn build_problem(spec: &ProblemSpec, yosida_n: Option<u32>) -> Result<SdeProblem> {
    let base_drift = match &spec.drift {
        DriftForm::Yosida { .. } => crate::sde::zero_drift(),
        other => match simple_drift(other) {
            Some((drift, _)) => drift,
            None => unreachable!(),
        },
    };
    let mut problem = SdeProblem::new(spec.initial.clone(), base_drift, build_sigma(&spec.sigma))?
        .with_lipschitz_k(spec.lipschitz_k)
        .with_growth_n(spec.growth_n);
    if let Some(s) = spec.sigma_sup {
        problem = problem.with_sigma_sup(s);
    }
    if let Some(m) = build_extra_drift(&spec.extra_drift) {
        problem = problem.with_extra_drift(m);
    }

    match (&spec.drift, yosida_n) {
        (DriftForm::Yosida { operator, n }, over) => {
            let op = build_operator(operator, spec.dimension)?;
            let approx = YosidaApprox::new(op, over.unwrap_or(*n))?;
            make_yosida_problem(&problem, approx)
        }
        (DriftForm::Dyson { gamma }, Some(n)) => {
            // Ladder rung: regularize the singular drift through its
            // Yosida approximation.
            let op = MonotoneOperator::log_gap_barrier(*gamma, spec.dimension)?;
            let approx = YosidaApprox::new(op, n)?;
            make_yosida_problem(&problem, approx)
        }
        (form, _) => {
            let (drift, lipschitz) = simple_drift(form).expect("yosida handled above");
            problem.drift = drift;
            problem.drift_is_lipschitz = lipschitz;
            Ok(problem)
        }
    }
}

pub fn build_perturbation(spec: &PerturbationSpec) -> Result<DriftPerturbation> {
    let pert = match &spec.form {
        PerturbationForm::Zero => DriftPerturbation::zero(),
        PerturbationForm::Constant { value } => DriftPerturbation::constant(*value),
        PerturbationForm::ConstantVector { value } => {
            let v = value.clone();
            DriftPerturbation::new(Arc::new(
                move |_t: f64, _past: PastPath<'_>, out: &mut [f64]| {
                    out.copy_from_slice(&v)
                },
            ))
        }
        PerturbationForm::TimeLinear { slope } => time_linear_perturbation(*slope),
        PerturbationForm::SinState { amplitude } => sin_state_perturbation(*amplitude),
    };
    match spec.budget {
        Some(b) if b > 0.0 => Ok(pert.with_budget(b)),
        Some(b) => Err(Error::InvalidArgument(format!(
            "perturbation budget must be positive, got {b}"
        ))),
        None => Ok(pert),
    }
}
