//! Strong Euler–Maruyama integration for SDEs
//! `dX_t = sigma(t, X_t) dW_t + b(t, X) dt + m(t, X_t) dt`
//! whose drift `b` may depend on the whole past of the path.
//!
//! Discretization: explicit Euler–Maruyama,
//! `X_{k+1} = X_k + [b(t_k, X_{0..k}) + m(t_k, X_k)] h + sigma(t_k, X_k) dW_k`,
//! strong order 0.5. Path-dependent drifts receive the discrete past
//! (values at `t_0..t_k`); continuous-time functionals are approximated by
//! their grid restriction.
//!
//! Noise: one root seed; path `i` draws from ChaCha stream `i`, so path `i`
//! is independent of `n_paths` and ensembles may be filled by concurrent
//! workers without changing the output.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::la;
use crate::path::{PastPath, PathEnsemble, PathSample};

/// Path-dependent drift `b(t, x_{[0,t]})`, written into `out` (length `d`).
pub trait PathDrift: Send + Sync {
    fn eval(&self, t: f64, past: PastPath<'_>, out: &mut [f64]);
}

impl<F> PathDrift for F
where
    F: Fn(f64, PastPath<'_>, &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, past: PastPath<'_>, out: &mut [f64]) {
        self(t, past, out)
    }
}

/// State-dependent drift `m(t, x_t)`, written into `out` (length `d`).
pub trait StateDrift: Send + Sync {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
}

impl<F> StateDrift for F
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self(t, x, out)
    }
}

/// Diffusion coefficient `sigma(t, x_t)`, written into `out` as a row-major
/// `d x d` matrix.
pub trait Diffusion: Send + Sync {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
}

/// Wrapper making any closure usable as a diffusion evaluator (a plain
/// blanket impl would collide with the [`StateDrift`] one).
pub struct DiffusionFn<F>(pub F);

impl<F> Diffusion for DiffusionFn<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.0)(t, x, out)
    }
}

/// An SDE together with the declared constants its hypotheses involve.
///
/// `lipschitz_k` covers the components claimed Lipschitz: always `sigma` and
/// `m`, and `b` as well when `drift_is_lipschitz` is set. The declarations
/// are auditable against sampled difference quotients via
/// [`check_lipschitz`]; they are never inferred.
#[derive(Clone)]
pub struct SdeProblem {
    pub dim: usize,
    pub initial: Vec<f64>,
    pub drift: Arc<dyn PathDrift>,
    pub extra_drift: Option<Arc<dyn StateDrift>>,
    pub diffusion: Arc<dyn Diffusion>,
    pub lipschitz_k: f64,
    pub growth_n: f64,
    pub sigma_sup: Option<f64>,
    pub drift_is_lipschitz: bool,
}

impl SdeProblem {
    pub fn new(
        initial: Vec<f64>,
        drift: Arc<dyn PathDrift>,
        diffusion: Arc<dyn Diffusion>,
    ) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::InvalidArgument(
                "initial point must have positive dimension".into(),
            ));
        }
        Ok(Self {
            dim: initial.len(),
            initial,
            drift,
            extra_drift: None,
            diffusion,
            lipschitz_k: 0.0,
            growth_n: 0.0,
            sigma_sup: None,
            drift_is_lipschitz: true,
        })
    }

    pub fn with_extra_drift(mut self, m: Arc<dyn StateDrift>) -> Self {
        self.extra_drift = Some(m);
        self
    }

    pub fn with_lipschitz_k(mut self, k: f64) -> Self {
        self.lipschitz_k = k;
        self
    }

    pub fn with_growth_n(mut self, n: f64) -> Self {
        self.growth_n = n;
        self
    }

    pub fn with_sigma_sup(mut self, s: f64) -> Self {
        self.sigma_sup = Some(s);
        self
    }

    pub fn with_drift_lipschitz(mut self, claimed: bool) -> Self {
        self.drift_is_lipschitz = claimed;
        self
    }
}

/// Gaussian increments for one path: `n_steps * dim` values with per-step
/// covariance `h * I`, drawn from ChaCha stream `stream` under `seed`.
pub(crate) fn draw_increments(
    seed: u64,
    stream: u64,
    n_steps: usize,
    dim: usize,
    h: f64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sqrt_h = h.sqrt();
    (0..n_steps * dim)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sqrt_h
        })
        .collect()
}

fn check_finite(
    buf: &[f64],
    what: &str,
    step: usize,
    path: usize,
) -> Result<()> {
    if buf.iter().any(|v| !v.is_finite()) {
        return Err(Error::Simulation {
            step,
            path,
            message: format!("{what} evaluator returned a non-finite value"),
        });
    }
    Ok(())
}

fn simulate_single(
    problem: &SdeProblem,
    grid: &TimeGrid,
    path_index: usize,
    noise: Vec<f64>,
) -> Result<PathSample> {
    let d = problem.dim;
    let n = grid.n_steps();
    let h = grid.step();

    let mut values = Vec::with_capacity((n + 1) * d);
    values.extend_from_slice(&problem.initial);

    let mut b = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut sigma = vec![0.0; d * d];
    let mut diffu = vec![0.0; d];
    let mut next = vec![0.0; d];

    for k in 0..n {
        let t = grid.time(k);
        let past = PastPath::new(&grid.times()[..=k], d, &values);
        let x = past.current();

        problem.drift.eval(t, past, &mut b);
        check_finite(&b, "drift", k, path_index)?;
        if let Some(extra) = &problem.extra_drift {
            extra.eval(t, x, &mut m);
            check_finite(&m, "extra drift", k, path_index)?;
        } else {
            m.fill(0.0);
        }
        problem.diffusion.eval(t, x, &mut sigma);
        check_finite(&sigma, "diffusion", k, path_index)?;

        la::matvec(&sigma, &noise[k * d..(k + 1) * d], &mut diffu);
        for j in 0..d {
            next[j] = x[j] + (b[j] + m[j]) * h + diffu[j];
        }
        values.extend_from_slice(&next);
    }

    PathSample::new(d, values, Some(noise))
}

/// Simulate `n_paths` independent trajectories of `problem` on `grid`.
///
/// Identical `(problem, grid, n_paths, seed)` reproduce bit-identical output,
/// independent of the number of worker threads.
pub fn simulate_paths(
    problem: &SdeProblem,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if problem.initial.len() != problem.dim {
        return Err(Error::InvalidArgument(
            "initial point dimension mismatch".into(),
        ));
    }
    let h = grid.step();
    let paths: Result<Vec<PathSample>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let noise = draw_increments(seed, i as u64, grid.n_steps(), problem.dim, h);
            simulate_single(problem, grid, i, noise)
        })
        .collect();
    PathEnsemble::new(grid.clone(), paths?, seed)
}

/// One audited difference quotient: the worst ratio observed and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientAudit {
    pub worst: f64,
    /// Probe pair realizing the worst quotient.
    pub pair: (usize, usize),
    pub time_index: usize,
}

/// Empirical audit of the declared Lipschitz and growth constants.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub declared_k: f64,
    pub declared_growth: f64,
    /// Worst `|b(t,xi)-b(t,eta)| / sup_{s<=t}|xi-eta|`; only audited when the
    /// drift claims the Lipschitz hypothesis.
    pub drift: Option<QuotientAudit>,
    pub extra_drift: Option<QuotientAudit>,
    /// Frobenius-norm quotient for the diffusion matrix.
    pub diffusion: QuotientAudit,
    /// Worst `|b(t,x)| / (1 + sup_{s<=t}|x_s|)` against `growth_n`.
    pub growth: QuotientAudit,
    pub flagged: bool,
}

const AUDIT_SLACK: f64 = 1e-6;

/// Audit the declared constants of `problem` on an ensemble of probe paths.
///
/// Report-only: a violation sets `flagged`, it is never an error.
pub fn check_lipschitz(
    problem: &SdeProblem,
    probes: &PathEnsemble,
) -> Result<LipschitzReport> {
    let np = probes.n_paths();
    if np < 2 {
        return Err(Error::InvalidArgument(
            "lipschitz audit needs at least 2 probe paths".into(),
        ));
    }
    if probes.dim() != problem.dim {
        return Err(Error::GridMismatch(
            "probe ensemble dimension differs from the problem".into(),
        ));
    }
    let d = problem.dim;
    let grid = probes.grid();
    let nodes = grid.n_nodes();

    // Evaluate all coefficients once per (path, node).
    let mut bs = vec![0.0; np * nodes * d];
    let mut ms = vec![0.0; np * nodes * d];
    let mut sigmas = vec![0.0; np * nodes * d * d];
    for i in 0..np {
        let p = probes.path(i);
        for k in 0..nodes {
            let t = grid.time(k);
            let past = PastPath::new(
                &grid.times()[..=k],
                d,
                &p.values_flat()[..(k + 1) * d],
            );
            let off = (i * nodes + k) * d;
            problem.drift.eval(t, past, &mut bs[off..off + d]);
            if let Some(m) = &problem.extra_drift {
                m.eval(t, p.node(k), &mut ms[off..off + d]);
            }
            let soff = (i * nodes + k) * d * d;
            problem
                .diffusion
                .eval(t, p.node(k), &mut sigmas[soff..soff + d * d]);
        }
    }

    let mut drift_audit = QuotientAudit {
        worst: 0.0,
        pair: (0, 1),
        time_index: 0,
    };
    let mut extra_audit = drift_audit;
    let mut sigma_audit = drift_audit;
    let mut growth_audit = drift_audit;

    for i in 0..np {
        // Growth audit is per-path.
        let p = probes.path(i);
        let mut runsup: f64 = 0.0;
        for k in 0..nodes {
            runsup = runsup.max(la::norm(p.node(k)));
            let off = (i * nodes + k) * d;
            let ratio = la::norm(&bs[off..off + d]) / (1.0 + runsup);
            if ratio > growth_audit.worst {
                growth_audit = QuotientAudit {
                    worst: ratio,
                    pair: (i, i),
                    time_index: k,
                };
            }
        }
        for j in i + 1..np {
            let q = probes.path(j);
            let mut pair_sup: f64 = 0.0;
            for k in 0..nodes {
                let node_dist = la::dist(p.node(k), q.node(k));
                pair_sup = pair_sup.max(node_dist);
                let off_i = (i * nodes + k) * d;
                let off_j = (j * nodes + k) * d;
                if pair_sup > 0.0 {
                    let num = la::dist(&bs[off_i..off_i + d], &bs[off_j..off_j + d]);
                    let ratio = num / pair_sup;
                    if ratio > drift_audit.worst {
                        drift_audit = QuotientAudit {
                            worst: ratio,
                            pair: (i, j),
                            time_index: k,
                        };
                    }
                }
                if node_dist > 0.0 {
                    if problem.extra_drift.is_some() {
                        let num = la::dist(&ms[off_i..off_i + d], &ms[off_j..off_j + d]);
                        let ratio = num / node_dist;
                        if ratio > extra_audit.worst {
                            extra_audit = QuotientAudit {
                                worst: ratio,
                                pair: (i, j),
                                time_index: k,
                            };
                        }
                    }
                    let soff_i = (i * nodes + k) * d * d;
                    let soff_j = (j * nodes + k) * d * d;
                    let num = la::dist(
                        &sigmas[soff_i..soff_i + d * d],
                        &sigmas[soff_j..soff_j + d * d],
                    );
                    let ratio = num / node_dist;
                    if ratio > sigma_audit.worst {
                        sigma_audit = QuotientAudit {
                            worst: ratio,
                            pair: (i, j),
                            time_index: k,
                        };
                    }
                }
            }
        }
    }

    let k_cap = problem.lipschitz_k * (1.0 + AUDIT_SLACK);
    let n_cap = problem.growth_n * (1.0 + AUDIT_SLACK);
    let mut flagged = sigma_audit.worst > k_cap || growth_audit.worst > n_cap;
    if problem.drift_is_lipschitz && drift_audit.worst > k_cap {
        flagged = true;
    }
    if problem.extra_drift.is_some() && extra_audit.worst > k_cap {
        flagged = true;
    }

    Ok(LipschitzReport {
        declared_k: problem.lipschitz_k,
        declared_growth: problem.growth_n,
        drift: problem.drift_is_lipschitz.then_some(drift_audit),
        extra_drift: problem.extra_drift.is_some().then_some(extra_audit),
        diffusion: sigma_audit,
        growth: growth_audit,
        flagged,
    })
}

/// Zero path-dependent drift.
pub fn zero_drift() -> Arc<dyn PathDrift> {
    Arc::new(|_t: f64, _past: PastPath<'_>, out: &mut [f64]| out.fill(0.0))
}

/// Diffusion `c * I`.
pub fn scalar_diffusion(c: f64) -> Arc<dyn Diffusion> {
    Arc::new(DiffusionFn(move |_t: f64, x: &[f64], out: &mut [f64]| {
        let d = x.len();
        out.fill(0.0);
        for j in 0..d {
            out[j * d + j] = c;
        }
    }))
}

/// Drift `rate * x_t` as a path functional (state feedback).
pub fn linear_drift(rate: f64) -> Arc<dyn PathDrift> {
    Arc::new(move |_t: f64, past: PastPath<'_>, out: &mut [f64]| {
        for (o, x) in out.iter_mut().zip(past.current()) {
            *o = rate * x;
        }
    })
}
