//! Maximal monotone operators, their resolvents and Yosida drifts, and the
//! singular interacting-particle drift they regularize.
//!
//! The operator catalog is closed: a linear operator with positive
//! semidefinite symmetric part, the normal cone of a convex set (box,
//! half-space, or ordered cone), and the negative gradient of the concave
//! log-gap potential `F(x) = gamma * sum_{i<j} log(x^j - x^i)`. These cover
//! reflection-type constraints, the interacting-particle drift, and a linear
//! sanity case without a general convex-analysis engine.
//!
//! The resolvent `J_n = (I + A/n)^{-1}` is closed-form for the linear and
//! normal-cone variants (linear solve, Euclidean projection). For the
//! log-gap potential it is a proximal problem solved by damped Newton with a
//! fraction-to-boundary line search on the strictly ordered cone; `d = 2`
//! reduces to a quadratic in the gap and is solved in closed form.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::la;
use crate::path::{PastPath, PathEnsemble};
use crate::sde::{PathDrift, SdeProblem, StateDrift};

/// Convex sets whose normal cones are supported as operators.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `{x : lower_i <= x_i <= upper_i}`; entries may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : normal . x <= offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `{x : x_1 <= x_2 <= ... <= x_d}`.
    OrderedCone,
}

impl ConvexSet {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ConvexSet::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(Error::InvalidArgument(
                        "box bounds must match the dimension".into(),
                    ));
                }
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidArgument(
                        "box must satisfy lower <= upper".into(),
                    ));
                }
            }
            ConvexSet::HalfSpace { normal, .. } => {
                if normal.len() != dim {
                    return Err(Error::InvalidArgument(
                        "half-space normal must match the dimension".into(),
                    ));
                }
                if la::norm(normal) == 0.0 {
                    return Err(Error::InvalidArgument(
                        "half-space normal must be nonzero".into(),
                    ));
                }
            }
            ConvexSet::OrderedCone => {}
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ConvexSet::Box { lower, upper } => {
                for i in 0..x.len() {
                    out[i] = x[i].clamp(lower[i], upper[i]);
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let excess = la::dot(normal, x) - offset;
                if excess <= 0.0 {
                    out.copy_from_slice(x);
                } else {
                    let nn = la::dot(normal, normal);
                    for i in 0..x.len() {
                        out[i] = x[i] - excess * normal[i] / nn;
                    }
                }
            }
            ConvexSet::OrderedCone => isotonic_projection(x, out),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            ConvexSet::HalfSpace { normal, offset } => la::dot(normal, x) <= offset + tol,
            ConvexSet::OrderedCone => x.windows(2).all(|w| w[1] >= w[0] - tol),
        }
    }
}

/// Pool-adjacent-violators projection onto the nondecreasing cone.
fn isotonic_projection(x: &[f64], out: &mut [f64]) {
    // Blocks of (sum, count); merged while adjacent means violate order.
    let mut sums: Vec<f64> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for &v in x {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let k = sums.len();
            if sums[k - 2] / counts[k - 2] as f64 > sums[k - 1] / counts[k - 1] as f64 {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                sums[k - 2] += s;
                counts[k - 2] += c;
            } else {
                break;
            }
        }
    }
    let mut pos = 0;
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        for _ in 0..*c {
            out[pos] = mean;
            pos += 1;
        }
    }
}

/// The closed catalog of maximal monotone operators.
#[derive(Debug, Clone)]
pub enum MonotoneOperator {
    /// `A x = M x` with `M + M^T` positive semidefinite.
    Linear { matrix: Vec<f64>, dim: usize },
    /// The normal cone of a convex set; `-A` generates reflection at the
    /// boundary.
    NormalCone { set: ConvexSet, dim: usize },
    /// `A = -grad F` for the concave log-gap potential with weight `gamma`;
    /// `-A` is the singular interacting-particle drift.
    LogGapBarrier { gamma: f64, dim: usize },
}

impl MonotoneOperator {
    pub fn linear(matrix: Vec<f64>, dim: usize) -> Result<Self> {
        if matrix.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "linear operator needs a {dim}x{dim} matrix"
            )));
        }
        if !la::symmetric_part_psd(&matrix, dim, 1e-12) {
            return Err(Error::InvalidArgument(
                "linear operator must have positive semidefinite symmetric part".into(),
            ));
        }
        Ok(MonotoneOperator::Linear { matrix, dim })
    }

    pub fn normal_cone(set: ConvexSet, dim: usize) -> Result<Self> {
        set.validate(dim)?;
        Ok(MonotoneOperator::NormalCone { set, dim })
    }

    pub fn log_gap_barrier(gamma: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(MonotoneOperator::LogGapBarrier { gamma, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneOperator::Linear { dim, .. }
            | MonotoneOperator::NormalCone { dim, .. }
            | MonotoneOperator::LogGapBarrier { dim, .. } => *dim,
        }
    }

    /// Decidable membership in `D(A)`.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            MonotoneOperator::Linear { .. } => true,
            MonotoneOperator::NormalCone { set, .. } => set.contains(x, 1e-12),
            MonotoneOperator::LogGapBarrier { .. } => x.windows(2).all(|w| w[1] > w[0]),
        }
    }

    /// Minimal selection `A(x)` where it is single-valued; a domain error
    /// outside `D(A)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            MonotoneOperator::Linear { matrix, dim } => {
                let mut out = vec![0.0; *dim];
                la::matvec(matrix, x, &mut out);
                Ok(out)
            }
            MonotoneOperator::NormalCone { set, .. } => {
                if !set.contains(x, 1e-12) {
                    return Err(Error::Domain(
                        "normal cone evaluated outside its set".into(),
                    ));
                }
                Ok(vec![0.0; x.len()])
            }
            MonotoneOperator::LogGapBarrier { gamma, .. } => {
                let drift = dyson_drift(x, *gamma)?;
                Ok(drift.into_iter().map(|v| -v).collect())
            }
        }
    }
}

/// The resolvent/Yosida pair `(J_n, b_n)` at regularization level `n`.
#[derive(Debug, Clone)]
pub struct YosidaApprox {
    operator: MonotoneOperator,
    n: u32,
}

impl YosidaApprox {
    pub fn new(operator: MonotoneOperator, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be a positive integer".into()));
        }
        Ok(Self { operator, n })
    }

    pub fn operator(&self) -> &MonotoneOperator {
        &self.operator
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `J_n(x) = (I + A/n)^{-1} x`, the unique `y` with `y + A(y)/n` owning
    /// `x`. Nonexpansive and defined on all of `R^d`.
    pub fn resolvent(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.operator.dim();
        if x.len() != d {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, operator expects {d}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("point must be finite".into()));
        }
        let n = self.n as f64;
        match &self.operator {
            MonotoneOperator::Linear { matrix, dim } => {
                let d = *dim;
                let mut system = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        system[i * d + j] =
                            matrix[i * d + j] / n + if i == j { 1.0 } else { 0.0 };
                    }
                }
                let mut rhs = x.to_vec();
                if !la::solve_in_place(&mut system, &mut rhs) {
                    return Err(Error::NoConvergence {
                        context: "linear resolvent solve".into(),
                        residual: f64::NAN,
                    });
                }
                Ok(rhs)
            }
            MonotoneOperator::NormalCone { set, .. } => {
                // The resolvent of a normal cone is the projection, for any n.
                let mut out = vec![0.0; d];
                set.project(x, &mut out);
                Ok(out)
            }
            MonotoneOperator::LogGapBarrier { gamma, .. } => {
                log_gap_resolvent(x, *gamma, n)
            }
        }
    }

    /// Yosida drift `b_n(x) = -n (x - J_n(x))`: dissipative, Lipschitz with
    /// constant at most `2n`, and converging to the minimal selection of
    /// `-A` on `D(A)`.
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.resolvent(x)?;
        let n = self.n as f64;
        Ok(x.iter().zip(&y).map(|(xi, yi)| -n * (xi - yi)).collect())
    }

    /// Residual `|y + A(y)/n - x|` of a claimed resolvent value, for the
    /// single-valued branches.
    pub fn resolvent_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let a = self.operator.apply(y)?;
        let n = self.n as f64;
        let r: f64 = (0..x.len())
            .map(|i| {
                let v = y[i] + a[i] / n - x[i];
                v * v
            })
            .sum();
        Ok(r.sqrt())
    }
}

/// Proximal problem for the log-gap barrier: find the strictly ordered `y`
/// with `y - (gamma/n) g(y) = x`, `g_k(y) = sum_{j != k} 1/(y_k - y_j)`.
fn log_gap_resolvent(x: &[f64], gamma: f64, n: f64) -> Result<Vec<f64>> {
    let d = x.len();
    let lam = gamma / n;
    if d == 1 {
        // No pairs: the potential is empty and A = 0.
        return Ok(x.to_vec());
    }
    if d == 2 {
        // One gap: s^2 - (x2 - x1) s - 2 lam = 0, center preserved.
        let delta = x[1] - x[0];
        let s = 0.5 * (delta + (delta * delta + 8.0 * lam).sqrt());
        let c = 0.5 * (x[0] + x[1]);
        return Ok(vec![c - 0.5 * s, c + 0.5 * s]);
    }

    // Strictly ordered start: sorted input with a gap floor at the scale the
    // prox enforces between coinciding particles.
    let mut y = x.to_vec();
    y.sort_by(f64::total_cmp);
    let floor = 0.5 * lam.sqrt();
    for k in 1..d {
        if y[k] < y[k - 1] + floor {
            y[k] = y[k - 1] + floor;
        }
    }

    let tol = 1e-12 * la::norm(x).max(1.0);
    let mut r = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut step = vec![0.0; d];
    let mut trial = vec![0.0; d];

    let residual = |y: &[f64], r: &mut [f64]| {
        for k in 0..d {
            let mut g = 0.0;
            for j in 0..d {
                if j != k {
                    g += 1.0 / (y[k] - y[j]);
                }
            }
            r[k] = y[k] - lam * g - x[k];
        }
    };

    residual(&y, &mut r);
    let mut r_norm = la::norm(&r);
    for _ in 0..100 {
        if r_norm <= tol {
            return Ok(y);
        }
        hess.fill(0.0);
        for k in 0..d {
            let mut diag = 1.0;
            for j in 0..d {
                if j != k {
                    let inv_sq = 1.0 / ((y[k] - y[j]) * (y[k] - y[j]));
                    diag += lam * inv_sq;
                    hess[k * d + j] = -lam * inv_sq;
                }
            }
            hess[k * d + k] = diag;
        }
        for k in 0..d {
            step[k] = -r[k];
        }
        if !la::solve_in_place(&mut hess, &mut step) {
            break;
        }
        // Fraction to boundary: keep all adjacent gaps strictly positive.
        let mut alpha: f64 = 1.0;
        for k in 1..d {
            let gap = y[k] - y[k - 1];
            let dgap = step[k] - step[k - 1];
            if dgap < 0.0 {
                alpha = alpha.min(-0.995 * gap / dgap);
            }
        }
        // Backtrack on the residual norm.
        let mut accepted = false;
        for _ in 0..60 {
            for k in 0..d {
                trial[k] = y[k] + alpha * step[k];
            }
            residual(&trial, &mut r);
            let trial_norm = la::norm(&r);
            if trial_norm < r_norm * (1.0 - 1e-4 * alpha) || trial_norm <= tol {
                y.copy_from_slice(&trial);
                r_norm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r_norm <= tol {
        return Ok(y);
    }
    Err(Error::NoConvergence {
        context: "log-gap resolvent (damped Newton)".into(),
        residual: r_norm,
    })
}

/// The singular interacting-particle drift
/// `b_i(x) = gamma * sum_{j != i} 1/(x_i - x_j)` on the strictly ordered
/// cone; components sum to zero by pairwise antisymmetry.
///
/// No clamping near the boundary: a non-strictly-ordered input is a domain
/// error. Simulations use the globally defined Yosida drift instead.
pub fn dyson_drift(x: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "interacting-particle drift needs strictly increasing coordinates".into(),
        ));
    }
    let d = x.len();
    let mut out = vec![0.0; d];
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..d {
            if j != i {
                acc += 1.0 / (x[i] - x[j]);
            }
        }
        out[i] = gamma * acc;
    }
    Ok(out)
}

/// Worst monotonicity violation of a drift over probe pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    /// `max (b(t,x) - b(t,y), x_t - y_t)` over sampled pairs and times.
    pub max_inner: f64,
    /// `(pair_i, pair_j, time_index)` realizing the maximum.
    pub witness: (usize, usize, usize),
    /// Set when the maximum exceeds 1e-12.
    pub flagged: bool,
}

const DISSIPATIVITY_TOL: f64 = 1e-12;

/// Audit `(b(t,x) - b(t,y)) . (x_t - y_t) <= 0` over all probe-path pairs
/// and grid times. Report-only.
pub fn check_dissipativity(
    drift: &dyn PathDrift,
    probes: &PathEnsemble,
) -> Result<DissipativityReport> {
    let np = probes.n_paths();
    if np < 2 {
        return Err(Error::InvalidArgument(
            "dissipativity audit needs at least 2 probe paths".into(),
        ));
    }
    let d = probes.dim();
    let grid = probes.grid();
    let nodes = grid.n_nodes();
    let mut evals = vec![0.0; np * nodes * d];
    for i in 0..np {
        let p = probes.path(i);
        for k in 0..nodes {
            let past = PastPath::new(&grid.times()[..=k], d, &p.values_flat()[..(k + 1) * d]);
            let off = (i * nodes + k) * d;
            drift.eval(grid.time(k), past, &mut evals[off..off + d]);
        }
    }
    let mut report = DissipativityReport {
        max_inner: f64::NEG_INFINITY,
        witness: (0, 1, 0),
        flagged: false,
    };
    for i in 0..np {
        for j in i + 1..np {
            for k in 0..nodes {
                let off_i = (i * nodes + k) * d;
                let off_j = (j * nodes + k) * d;
                let mut inner = 0.0;
                for c in 0..d {
                    inner += (evals[off_i + c] - evals[off_j + c])
                        * (probes.path(i).node(k)[c] - probes.path(j).node(k)[c]);
                }
                if inner > report.max_inner {
                    report.max_inner = inner;
                    report.witness = (i, j, k);
                }
            }
        }
    }
    report.flagged = report.max_inner > DISSIPATIVITY_TOL;
    Ok(report)
}

/// State-drift variant over explicit point pairs.
pub fn check_dissipativity_states(
    drift: &dyn StateDrift,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<DissipativityReport> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(
            "dissipativity audit needs at least 2 probe pairs".into(),
        ));
    }
    let d = pairs[0].0.len();
    let mut bx = vec![0.0; d];
    let mut by = vec![0.0; d];
    let mut report = DissipativityReport {
        max_inner: f64::NEG_INFINITY,
        witness: (0, 0, 0),
        flagged: false,
    };
    for (idx, (x, y)) in pairs.iter().enumerate() {
        drift.eval(0.0, x, &mut bx);
        drift.eval(0.0, y, &mut by);
        let mut inner = 0.0;
        for c in 0..d {
            inner += (bx[c] - by[c]) * (x[c] - y[c]);
        }
        if inner > report.max_inner {
            report.max_inner = inner;
            report.witness = (idx, idx, 0);
        }
    }
    report.flagged = report.max_inner > DISSIPATIVITY_TOL;
    Ok(report)
}

/// Replace the drift of `base` with the Yosida drift `b_n` evaluated at the
/// current state, declaring its `2n` Lipschitz constant for audits (bound
/// constants still come from the sigma/m constants supplied by the caller).
///
/// A resolvent failure inside the integrator surfaces as a located
/// simulation error via a non-finite drift value.
pub fn make_yosida_problem(base: &SdeProblem, approx: YosidaApprox) -> Result<SdeProblem> {
    if approx.operator.dim() != base.dim {
        return Err(Error::InvalidArgument(format!(
            "operator dimension {} does not match problem dimension {}",
            approx.operator.dim(),
            base.dim
        )));
    }
    let n = approx.n as f64;
    // Linear-growth envelope from the anchor at the initial point.
    let anchor = approx.drift(&base.initial)?;
    let growth = base
        .growth_n
        .max(2.0 * n * (1.0 + la::norm(&base.initial)) + la::norm(&anchor));
    let k = base.lipschitz_k.max(2.0 * n);

    let drift_approx = approx.clone();
    let drift: Arc<dyn PathDrift> = Arc::new(
        move |_t: f64, past: PastPath<'_>, out: &mut [f64]| {
            match drift_approx.drift(past.current()) {
                Ok(b) => out.copy_from_slice(&b),
                Err(_) => out.fill(f64::NAN),
            }
        },
    );
    let mut problem = base.clone();
    problem.drift = drift;
    problem.lipschitz_k = k;
    problem.growth_n = growth;
    problem.drift_is_lipschitz = true;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{scalar_diffusion, simulate_paths, zero_drift};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_op(d: usize) -> MonotoneOperator {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        MonotoneOperator::linear(m, d).unwrap()
    }

    fn half_line() -> MonotoneOperator {
        MonotoneOperator::normal_cone(
            ConvexSet::Box {
                lower: vec![0.0],
                upper: vec![f64::INFINITY],
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn linear_resolvent_closed_forms() {
        let a = YosidaApprox::new(identity_op(1), 1).unwrap();
        assert_relative_eq!(a.resolvent(&[1.0]).unwrap()[0], 0.5);
        let a3 = YosidaApprox::new(identity_op(1), 3).unwrap();
        assert_relative_eq!(a3.resolvent(&[1.0]).unwrap()[0], 0.75);
    }

    #[test]
    fn normal_cone_resolvent_is_projection() {
        for n in [1, 4, 1024] {
            let a = YosidaApprox::new(half_line(), n).unwrap();
            assert_eq!(a.resolvent(&[-2.0]).unwrap(), vec![0.0]);
            assert_eq!(a.resolvent(&[3.0]).unwrap(), vec![3.0]);
        }
    }

    #[test]
    fn yosida_drift_examples() {
        let a = YosidaApprox::new(identity_op(1), 1).unwrap();
        assert_relative_eq!(a.drift(&[1.0]).unwrap()[0], -0.5);
        let cone = YosidaApprox::new(half_line(), 4).unwrap();
        assert_relative_eq!(cone.drift(&[-2.0]).unwrap()[0], 8.0);
        // Zeros of A are fixed points with zero drift.
        assert_eq!(cone.drift(&[1.5]).unwrap()[0], 0.0);
        let lin = YosidaApprox::new(identity_op(2), 7).unwrap();
        let b = lin.drift(&[0.0, 0.0]).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);
    }

    #[test]
    fn linear_yosida_closed_form_identity() {
        // For A = I: b_n(x) = -n x / (n+1), |b_n(x) + x| = |x|/(n+1).
        for n in [1u32, 2, 4, 16, 256, 1024] {
            let a = YosidaApprox::new(identity_op(1), n).unwrap();
            for x in [-3.0, -0.5, 0.2, 10.0] {
                let b = a.drift(&[x]).unwrap()[0];
                let expect = -(n as f64) * x / (n as f64 + 1.0);
                assert!((b - expect).abs() <= 1e-12 * expect.abs().max(1.0));
                assert_relative_eq!(
                    (b + x).abs(),
                    x.abs() / (n as f64 + 1.0),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn log_gap_resolvent_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [2usize, 3, 5, 8] {
            let op = MonotoneOperator::log_gap_barrier(0.5, d).unwrap();
            for n in [1u32, 8, 1024] {
                let approx = YosidaApprox::new(op.clone(), n).unwrap();
                for _ in 0..50 {
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let y = approx.resolvent(&x).unwrap();
                    assert!(
                        y.windows(2).all(|w| w[1] > w[0]),
                        "resolvent not strictly ordered"
                    );
                    let res = approx.resolvent_residual(&x, &y).unwrap();
                    assert!(res < 1e-10, "residual {res} at d={d}, n={n}");
                }
            }
        }
    }

    #[test]
    fn resolvent_nonexpansive_and_drift_dissipative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ops = vec![
            identity_op(3),
            MonotoneOperator::normal_cone(ConvexSet::OrderedCone, 3).unwrap(),
            MonotoneOperator::normal_cone(
                ConvexSet::HalfSpace {
                    normal: vec![1.0, 1.0, 1.0],
                    offset: 1.0,
                },
                3,
            )
            .unwrap(),
            MonotoneOperator::log_gap_barrier(0.5, 3).unwrap(),
        ];
        for op in ops {
            let approx = YosidaApprox::new(op, 8).unwrap();
            let n = approx.n() as f64;
            for _ in 0..1000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let jx = approx.resolvent(&x).unwrap();
                let jy = approx.resolvent(&y).unwrap();
                assert!(la::dist(&jx, &jy) <= la::dist(&x, &y) + 1e-10);
                let bx = approx.drift(&x).unwrap();
                let by = approx.drift(&y).unwrap();
                let inner: f64 = (0..3)
                    .map(|c| (bx[c] - by[c]) * (x[c] - y[c]))
                    .sum();
                assert!(inner <= 1e-9, "dissipativity violated: {inner}");
                assert!(la::dist(&bx, &by) <= 2.0 * n * la::dist(&x, &y) + 1e-9);
            }
        }
    }

    #[test]
    fn resolvent_maps_into_domain_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cone = MonotoneOperator::normal_cone(ConvexSet::OrderedCone, 4).unwrap();
        let approx = YosidaApprox::new(cone.clone(), 2).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = approx.resolvent(&x).unwrap();
            assert!(ConvexSet::OrderedCone.contains(&y, 1e-12));
            // Projection characterization: (x - y, z - y) <= 0 for z in C.
            let z: Vec<f64> = {
                let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let inner: f64 = (0..4).map(|c| (x[c] - y[c]) * (z[c] - y[c])).sum();
            assert!(inner <= 1e-10);
        }
    }

    #[test]
    fn dyson_drift_values() {
        assert_eq!(dyson_drift(&[0.0, 1.0], 1.0).unwrap(), vec![-1.0, 1.0]);
        let b = dyson_drift(&[0.0, 1.0, 3.0], 0.5).unwrap();
        assert_relative_eq!(b[0], -2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(b[1], 0.25, max_relative = 1e-14);
        assert_relative_eq!(b[2], 5.0 / 12.0, max_relative = 1e-14);
        let b = dyson_drift(&[0.0, 0.1], 2.0).unwrap();
        assert_relative_eq!(b[0], -20.0, max_relative = 1e-12);
        assert_relative_eq!(b[1], 20.0, max_relative = 1e-12);
        assert!(matches!(
            dyson_drift(&[1.0, 1.0], 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            dyson_drift(&[2.0, 1.0], 1.0),
            Err(Error::Domain(_))
        ));
        assert!(dyson_drift(&[0.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn dyson_components_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let d = rng.random_range(2..8);
            let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            x.sort_by(f64::total_cmp);
            x.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            if x.len() < 2 {
                continue;
            }
            let b = dyson_drift(&x, 1.3).unwrap();
            assert!(b.iter().sum::<f64>().abs() < 1e-12 * 10.0);
        }
    }

    #[test]
    fn dissipativity_audits() {
        let probe_problem = crate::sde::SdeProblem::new(
            vec![0.0],
            zero_drift(),
            scalar_diffusion(1.0),
        )
        .unwrap();
        let grid = crate::grid::TimeGrid::new(1.0, 8).unwrap();
        let probes = simulate_paths(&probe_problem, &grid, 20, 2).unwrap();

        let contracting = crate::sde::linear_drift(-1.0);
        let r = check_dissipativity(contracting.as_ref(), &probes).unwrap();
        assert!(!r.flagged);
        assert!(r.max_inner <= 0.0);

        let expanding = crate::sde::linear_drift(1.0);
        let r = check_dissipativity(expanding.as_ref(), &probes).unwrap();
        assert!(r.flagged);
        assert!(r.max_inner > 0.0);
    }

    #[test]
    fn dyson_drift_dissipative_on_ordered_pairs() {
        // Concavity of the log-gap potential forces monotone decrease; the
        // oracle is a direct sign check over random ordered pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut pairs = Vec::new();
        for _ in 0..1000 {
            let mut x = vec![rng.random_range(-2.0..2.0), 0.0];
            x[1] = x[0] + rng.random_range(0.05..2.0);
            let mut y = vec![rng.random_range(-2.0..2.0), 0.0];
            y[1] = y[0] + rng.random_range(0.05..2.0);
            pairs.push((x, y));
        }
        let drift = |_t: f64, x: &[f64], out: &mut [f64]| {
            let b = dyson_drift(x, 1.0).unwrap();
            out.copy_from_slice(&b);
        };
        let r = check_dissipativity_states(&drift, &pairs).unwrap();
        assert!(!r.flagged, "max inner product {}", r.max_inner);
    }

    #[test]
    fn yosida_problem_linear_is_ou() {
        let base = crate::sde::SdeProblem::new(
            vec![1.0],
            zero_drift(),
            scalar_diffusion(0.0),
        )
        .unwrap();
        let approx = YosidaApprox::new(identity_op(1), 3).unwrap();
        let problem = make_yosida_problem(&base, approx).unwrap();
        assert_eq!(problem.lipschitz_k, 6.0);
        let grid = crate::grid::TimeGrid::new(1.0, 4).unwrap();
        let ens = simulate_paths(&problem, &grid, 1, 0).unwrap();
        // Deterministic Euler for x' = -(3/4) x from 1.
        let mut x = 1.0;
        for k in 0..4 {
            assert_relative_eq!(ens.path(0).node(k)[0], x, max_relative = 1e-12);
            x += -0.75 * x * 0.25;
        }
    }

    #[test]
    fn yosida_problem_respects_half_line() {
        let base = crate::sde::SdeProblem::new(
            vec![1.0],
            zero_drift(),
            scalar_diffusion(1.0),
        )
        .unwrap();
        let approx = YosidaApprox::new(half_line(), 64).unwrap();
        let problem = make_yosida_problem(&base, approx).unwrap();
        let grid = crate::grid::TimeGrid::new(1.0, 256).unwrap();
        let ens = simulate_paths(&problem, &grid, 64, 15).unwrap();
        let mut negative_nodes = 0usize;
        let mut total = 0usize;
        let mut min_val = f64::INFINITY;
        for p in ens.paths() {
            for k in 0..p.n_nodes() {
                total += 1;
                if p.node(k)[0] < 0.0 {
                    negative_nodes += 1;
                }
                min_val = min_val.min(p.node(k)[0]);
            }
        }
        // Excursions below zero are brief and shallow at n = 64.
        assert!(
            (negative_nodes as f64) < 0.15 * total as f64,
            "{negative_nodes}/{total} nodes below 0"
        );
        assert!(min_val > -0.6, "min value {min_val}");
        // The drift audit confirms dissipativity of b_n.
        let report = check_dissipativity(problem.drift.as_ref(), &ens).unwrap();
        assert!(!report.flagged);
    }

    #[test]
    fn yosida_dyson_problem_simulates() {
        let base = crate::sde::SdeProblem::new(
            vec![-1.0, 0.0, 1.0],
            zero_drift(),
            scalar_diffusion(1.0),
        )
        .unwrap();
        let op = MonotoneOperator::log_gap_barrier(0.5, 3).unwrap();
        let approx = YosidaApprox::new(op, 16).unwrap();
        let problem = make_yosida_problem(&base, approx).unwrap();
        let grid = crate::grid::TimeGrid::new(1.0, 128).unwrap();
        let ens = simulate_paths(&problem, &grid, 32, 8).unwrap();
        assert_eq!(ens.n_paths(), 32);
        for p in ens.paths() {
            assert!(p.values_flat().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn rejects_non_monotone_linear_operator() {
        assert!(MonotoneOperator::linear(vec![-1.0], 1).is_err());
        // Skew-symmetric is fine.
        assert!(MonotoneOperator::linear(vec![0.0, -1.0, 1.0, 0.0], 2).is_ok());
    }

    #[test]
    fn isotonic_projection_examples() {
        let mut out = vec![0.0; 3];
        isotonic_projection(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
        isotonic_projection(&[3.0, 1.0], &mut out[..2]);
        assert_eq!(&out[..2], &[2.0, 2.0]);
        isotonic_projection(&[4.0, 1.0, 1.0], &mut out);
        assert_eq!(out, vec![2.0, 2.0, 2.0]);
    }
}
