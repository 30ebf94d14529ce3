//! Girsanov couplings: drift perturbations, the pair simulation `(x, x^v)`
//! under shared noise, relative entropy, and the exponential-martingale
//! log-density.
//!
//! The measure `Q` is parameterized solely through an adapted perturbation
//! `v̇`; the shifted path solves the same SDE driven by `dW + v̇ dt`. The
//! perturbation is evaluated on the past of the shifted path, so that the
//! shifted path solves the stated equation under the shifted noise;
//! evaluating on the base path instead would represent a different measure.
//!
//! The pair integrator advances the base path by Euler and the difference
//! path `delta = x^v - x` by the exact algebra of the two Euler recursions,
//! then materializes `x^v = x + delta`. In exact arithmetic this is the
//! plain Euler recursion for `x^v`; in floating point it avoids the
//! catastrophic cancellation of recomputing small differences of O(1)
//! states, and makes additive-noise couplings with deterministic shifts
//! reproduce the deterministic difference path bit-for-bit across pairs.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::grid::TimeGrid;
use crate::la;
use crate::path::{PastPath, PathEnsemble, PathSample};
use crate::sde::{draw_increments, SdeProblem};

/// Adapted drift perturbation `v̇(t, x_{[0,t]})`.
pub trait Perturbation: Send + Sync {
    fn eval(&self, t: f64, past: PastPath<'_>, out: &mut [f64]);
}

impl<F> Perturbation for F
where
    F: Fn(f64, PastPath<'_>, &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, past: PastPath<'_>, out: &mut [f64]) {
        self(t, past, out)
    }
}

/// The sole parameterization of the target measure `Q`.
#[derive(Clone)]
pub struct DriftPerturbation {
    eval: Arc<dyn Perturbation>,
    /// Optional cap on the accumulated energy `sum |v̇(t_k)|^2 h` per path.
    /// Once a step would exceed it, the perturbation is truncated to zero
    /// for the remaining steps and the pair is flagged.
    budget: Option<f64>,
}

impl DriftPerturbation {
    pub fn new(eval: Arc<dyn Perturbation>) -> Self {
        Self { eval, budget: None }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    /// Constant-in-time perturbation, `value` broadcast to every component.
    pub fn constant(value: f64) -> Self {
        Self::new(Arc::new(
            move |_t: f64, _past: PastPath<'_>, out: &mut [f64]| out.fill(value),
        ))
    }

    /// Constant-in-time vector perturbation.
    pub fn constant_vector(value: Vec<f64>) -> Self {
        Self::new(Arc::new(
            move |_t: f64, _past: PastPath<'_>, out: &mut [f64]| {
                out.copy_from_slice(&value)
            },
        ))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }
}

/// One coupled trajectory pair driven by the same Gaussian increments.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    /// The unshifted path `x`; its law is the base measure `P`. Carries the
    /// Gaussian increments.
    pub base: PathSample,
    /// The shifted path `x^v`; its law is `Q`.
    pub shifted: PathSample,
    /// Difference path `x^v - x`, node-major, integrated directly.
    diff: Vec<f64>,
    /// Per-step energies `|v̇(t_k, x^v)|^2 h` (left-endpoint quadrature,
    /// consistent with the Euler scheme).
    step_energies: Vec<f64>,
    /// Girsanov log-density `log rho(-delta v)` accumulated along the base
    /// path: `-sum v̇(t_k, x)·dW_k - 1/2 sum |v̇(t_k, x)|^2 h`. Its
    /// exponential is the importance weight with `P`-mean 1.
    pub log_density: f64,
    /// Set when the energy budget truncated the perturbation on this pair.
    pub truncated: bool,
}

impl CoupledPair {
    /// Reassemble a pair from its stored parts (deserialization).
    pub fn from_parts(
        base: PathSample,
        shifted: PathSample,
        diff: Vec<f64>,
        step_energies: Vec<f64>,
        log_density: f64,
        truncated: bool,
    ) -> Result<Self> {
        if shifted.dim() != base.dim()
            || shifted.n_nodes() != base.n_nodes()
            || diff.len() != base.values_flat().len()
            || step_energies.len() != base.n_steps()
        {
            return Err(Error::InvalidArgument(
                "coupled pair parts have inconsistent shapes".into(),
            ));
        }
        if !log_density.is_finite() || step_energies.iter().any(|e| *e < 0.0) {
            return Err(Error::InvalidArgument(
                "coupled pair scalars out of range".into(),
            ));
        }
        Ok(Self {
            base,
            shifted,
            diff,
            step_energies,
            log_density,
            truncated,
        })
    }

    /// Total accumulated `sum |v̇|^2 h` along the shifted path.
    pub fn v_energy(&self) -> f64 {
        self.step_energies.iter().sum()
    }

    pub fn step_energies(&self) -> &[f64] {
        &self.step_energies
    }

    pub fn diff_node(&self, k: usize) -> &[f64] {
        let d = self.base.dim();
        &self.diff[k * d..(k + 1) * d]
    }

    /// `sup_k |x^v(t_k) - x(t_k)|_2` from the directly-integrated difference.
    pub fn sup_diff(&self) -> f64 {
        let d = self.base.dim();
        let mut sup: f64 = 0.0;
        for k in 0..self.base.n_nodes() {
            sup = sup.max(la::norm(&self.diff[k * d..(k + 1) * d]));
        }
        sup
    }
}

/// Paired trajectories `(x, x^v)` on a shared grid; the empirical coupling.
#[derive(Debug, Clone)]
pub struct CoupledEnsemble {
    grid: TimeGrid,
    seed: u64,
    pairs: Vec<CoupledPair>,
}

impl CoupledEnsemble {
    /// Reassemble an ensemble from stored pairs (deserialization).
    pub fn from_parts(grid: TimeGrid, seed: u64, pairs: Vec<CoupledPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "coupled ensemble must contain at least one pair".into(),
            ));
        }
        for p in &pairs {
            if p.base.n_nodes() != grid.n_nodes() {
                return Err(Error::GridMismatch(
                    "pair does not match the grid".into(),
                ));
            }
        }
        Ok(Self { grid, seed, pairs })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[CoupledPair] {
        &self.pairs
    }

    /// The `P`-marginal as a standalone ensemble.
    pub fn base_marginal(&self) -> PathEnsemble {
        let paths = self.pairs.iter().map(|p| p.base.clone()).collect();
        PathEnsemble::new(self.grid.clone(), paths, self.seed).expect("pairs share the grid")
    }

    /// The `Q`-marginal as a standalone ensemble.
    pub fn shifted_marginal(&self) -> PathEnsemble {
        let paths = self.pairs.iter().map(|p| p.shifted.clone()).collect();
        PathEnsemble::new(self.grid.clone(), paths, self.seed).expect("pairs share the grid")
    }
}

/// Relative-entropy estimate for a time horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub horizon_t: f64,
    pub value: f64,
    pub std_err: f64,
    pub n_pairs: usize,
}

struct PairAccumulator<'a> {
    problem: &'a SdeProblem,
    pert: &'a DriftPerturbation,
    grid: &'a TimeGrid,
}

impl PairAccumulator<'_> {
    fn simulate(&self, index: usize, noise: Vec<f64>) -> Result<CoupledPair> {
        let d = self.problem.dim;
        let n = self.grid.n_steps();
        let h = self.grid.step();
        let times = self.grid.times();

        let mut base = Vec::with_capacity((n + 1) * d);
        base.extend_from_slice(&self.problem.initial);
        let mut shifted = base.clone();
        let mut diff = vec![0.0; d];
        let mut diff_path = Vec::with_capacity((n + 1) * d);
        diff_path.extend_from_slice(&diff);

        let mut b_x = vec![0.0; d];
        let mut b_v = vec![0.0; d];
        let mut m_x = vec![0.0; d];
        let mut m_v = vec![0.0; d];
        let mut sig_x = vec![0.0; d * d];
        let mut sig_v = vec![0.0; d * d];
        let mut vdot_base = vec![0.0; d];
        let mut vdot_shift = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        let mut tmp2 = vec![0.0; d];

        let mut log_density = 0.0;
        let mut step_energies = Vec::with_capacity(n);
        let mut energy_base = 0.0;
        let mut energy_shift = 0.0;
        let mut truncated = false;

        let located = |step: usize, what: &str| Error::Simulation {
            step,
            path: index,
            message: format!("{what} evaluator returned a non-finite value"),
        };

        for k in 0..n {
            let t = times[k];
            let dw = &noise[k * d..(k + 1) * d];
            let past_x = PastPath::new(&times[..=k], d, &base);
            let past_v = PastPath::new(&times[..=k], d, &shifted);
            let x = past_x.current();
            let xv = past_v.current();

            self.problem.drift.eval(t, past_x, &mut b_x);
            self.problem.drift.eval(t, past_v, &mut b_v);
            if b_x.iter().chain(b_v.iter()).any(|v| !v.is_finite()) {
                return Err(located(k, "drift"));
            }
            if let Some(extra) = &self.problem.extra_drift {
                extra.eval(t, x, &mut m_x);
                extra.eval(t, xv, &mut m_v);
                if m_x.iter().chain(m_v.iter()).any(|v| !v.is_finite()) {
                    return Err(located(k, "extra drift"));
                }
            }
            self.problem.diffusion.eval(t, x, &mut sig_x);
            self.problem.diffusion.eval(t, xv, &mut sig_v);
            if sig_x.iter().chain(sig_v.iter()).any(|v| !v.is_finite()) {
                return Err(located(k, "diffusion"));
            }

            self.pert.eval.eval(t, past_x, &mut vdot_base);
            self.pert.eval.eval(t, past_v, &mut vdot_shift);
            if vdot_base
                .iter()
                .chain(vdot_shift.iter())
                .any(|v| !v.is_finite())
            {
                return Err(located(k, "perturbation"));
            }

            // Budget truncation, applied independently per evaluation stream.
            if let Some(budget) = self.pert.budget {
                if energy_base + la::dot(&vdot_base, &vdot_base) * h > budget {
                    vdot_base.fill(0.0);
                    truncated = true;
                }
                if energy_shift + la::dot(&vdot_shift, &vdot_shift) * h > budget {
                    vdot_shift.fill(0.0);
                    truncated = true;
                }
            }

            // Girsanov log-density along the base path.
            let vb_sq = la::dot(&vdot_base, &vdot_base);
            log_density -= la::dot(&vdot_base, dw) + 0.5 * vb_sq * h;
            energy_base += vb_sq * h;

            // Entropy quadrature along the shifted path.
            let vs_sq = la::dot(&vdot_shift, &vdot_shift);
            let e_k = vs_sq * h;
            step_energies.push(e_k);
            energy_shift += e_k;

            // Base Euler step.
            la::matvec(&sig_x, dw, &mut tmp);
            for j in 0..d {
                tmp[j] += (b_x[j] + m_x[j]) * h + x[j];
            }

            // Difference step:
            // delta' = delta + (b_v - b_x) h + (m_v - m_x) h
            //        + (sig_v - sig_x) dW + sig_v v̇ h.
            la::matvec(&sig_v, &vdot_shift, &mut tmp2);
            for j in 0..d {
                let mut dsig_dw = 0.0;
                for l in 0..d {
                    dsig_dw += (sig_v[j * d + l] - sig_x[j * d + l]) * dw[l];
                }
                diff[j] += (b_v[j] - b_x[j]) * h
                    + (m_v[j] - m_x[j]) * h
                    + dsig_dw
                    + tmp2[j] * h;
            }

            base.extend_from_slice(&tmp);
            for j in 0..d {
                tmp[j] += diff[j];
            }
            shifted.extend_from_slice(&tmp);
            diff_path.extend_from_slice(&diff);
        }

        Ok(CoupledPair {
            base: PathSample::new(d, base, Some(noise))?,
            shifted: PathSample::new(d, shifted, None)?,
            diff: diff_path,
            step_energies,
            log_density,
            truncated,
        })
    }
}

/// Simulate `n_pairs` coupled pairs; the base paths are bit-identical to
/// [`crate::sde::simulate_paths`] with the same `(problem, grid, seed)`.
pub fn simulate_coupled(
    problem: &SdeProblem,
    pert: &DriftPerturbation,
    grid: &TimeGrid,
    n_pairs: usize,
    seed: u64,
) -> Result<CoupledEnsemble> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let acc = PairAccumulator {
        problem,
        pert,
        grid,
    };
    let h = grid.step();
    let pairs: Result<Vec<CoupledPair>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let noise = draw_increments(seed, i as u64, grid.n_steps(), problem.dim, h);
            acc.simulate(i, noise)
        })
        .collect();
    Ok(CoupledEnsemble {
        grid: grid.clone(),
        seed,
        pairs: pairs?,
    })
}

/// Entropy for the horizon `[0, t)`:
/// `H_t = 1/2 * mean over pairs of sum_{t_k < t} |v̇(t_k)|^2 h`.
pub fn entropy_estimate(coupled: &CoupledEnsemble, horizon_t: f64) -> Result<EntropyEstimate> {
    let horizon = coupled.grid().horizon();
    if !(horizon_t > 0.0 && horizon_t <= horizon) {
        return Err(Error::InvalidArgument(format!(
            "horizon_t = {horizon_t} outside (0, {horizon}]"
        )));
    }
    let k_max = coupled
        .grid()
        .times()
        .iter()
        .take(coupled.grid().n_steps())
        .filter(|t| **t < horizon_t)
        .count();
    let halves: Vec<f64> = coupled
        .pairs()
        .iter()
        .map(|p| 0.5 * p.step_energies()[..k_max].iter().sum::<f64>())
        .collect();
    let est = Estimate::from_samples(&halves);
    Ok(EntropyEstimate {
        horizon_t,
        value: est.value,
        std_err: est.std_err,
        n_pairs: coupled.n_pairs(),
    })
}

/// Exponential-martingale log-density
/// `log L = -sum_k v̇_k · dW_k - 1/2 sum_k |v̇_k|^2 h`
/// for aligned step sequences laid out step-major with `dim` components.
pub fn girsanov_log_density(
    increments: &[f64],
    vdot: &[f64],
    dim: usize,
    h: f64,
) -> Result<f64> {
    if dim == 0 || increments.len() != vdot.len() || increments.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "increments ({}) and perturbation ({}) must align in steps of dimension {dim}",
            increments.len(),
            vdot.len()
        )));
    }
    let mut acc = 0.0;
    for (dw, v) in increments.chunks(dim).zip(vdot.chunks(dim)) {
        acc -= la::dot(v, dw) + 0.5 * la::dot(v, v) * h;
    }
    Ok(acc)
}

/// Coupling cost `E_Q |x^v - x|_sup^2` with its standard error; an upper
/// bound for the squared Wasserstein distance between the marginals.
pub fn coupling_cost(coupled: &CoupledEnsemble) -> Result<Estimate> {
    if coupled.n_pairs() == 0 {
        return Err(Error::InvalidArgument("empty coupled ensemble".into()));
    }
    let sq: Vec<f64> = coupled
        .pairs()
        .iter()
        .map(|p| {
            let s = p.sup_diff();
            s * s
        })
        .collect();
    Ok(Estimate::from_samples(&sq))
}

/// Mean and standard error of the importance weights `exp(log_density)`;
/// equals 1 in expectation under `P`-sampling.
pub fn martingale_check(coupled: &CoupledEnsemble) -> Estimate {
    let ws: Vec<f64> = coupled
        .pairs()
        .iter()
        .map(|p| p.log_density.exp())
        .collect();
    Estimate::from_samples(&ws)
}

/// Drift perturbation `v̇(t) = slope * t`, broadcast to every component.
pub fn time_linear_perturbation(slope: f64) -> DriftPerturbation {
    DriftPerturbation::new(Arc::new(
        move |t: f64, _past: PastPath<'_>, out: &mut [f64]| out.fill(slope * t),
    ))
}

/// State-dependent perturbation `v̇_j = amplitude * sin(x_j)`.
pub fn sin_state_perturbation(amplitude: f64) -> DriftPerturbation {
    DriftPerturbation::new(Arc::new(
        move |_t: f64, past: PastPath<'_>, out: &mut [f64]| {
            for (o, x) in out.iter_mut().zip(past.current()) {
                *o = amplitude * x.sin();
            }
        },
    ))
}
