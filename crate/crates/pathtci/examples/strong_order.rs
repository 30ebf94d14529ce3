//! Strong convergence order of the integrator on geometric dynamics.
//!
//! `dX = mu X dt + sigma X dW` has the closed-form solution
//! `X_t = X_0 exp((mu - sigma^2/2) t + sigma W_t)`; evaluating it on the
//! same increments as the numerical path isolates the discretization error.
//! The RMS endpoint error scales like `h^{1/2}`.

use std::sync::Arc;

use pathtci::sde::{DiffusionFn, PathDrift, SdeProblem};
use pathtci::{simulate_paths, PastPath, TimeGrid};

const MU: f64 = 1.5;
const SIGMA: f64 = 1.0;
const X0: f64 = 1.0;

fn main() -> pathtci::Result<()> {
    let drift: Arc<dyn PathDrift> = Arc::new(|_t: f64, past: PastPath<'_>, out: &mut [f64]| {
        out[0] = MU * past.current()[0];
    });
    let diffusion = Arc::new(DiffusionFn(|_t: f64, x: &[f64], out: &mut [f64]| {
        out[0] = SIGMA * x[0];
    }));
    let problem = SdeProblem::new(vec![X0], drift, diffusion)?;

    let mut points = Vec::new();
    println!("{:>8} {:>8} {:>12}", "steps", "h", "rms error");
    for exp in 4..=10 {
        let n_steps = 1usize << exp;
        let grid = TimeGrid::new(1.0, n_steps)?;
        let ens = simulate_paths(&problem, &grid, 2000, 1234)?;
        let mut sq_sum = 0.0;
        for p in ens.paths() {
            let w: f64 = (0..p.n_steps()).map(|k| p.noise_step(k).unwrap()[0]).sum();
            let exact = X0 * ((MU - 0.5 * SIGMA * SIGMA) + SIGMA * w).exp();
            let err = p.endpoint()[0] - exact;
            sq_sum += err * err;
        }
        let rms = (sq_sum / ens.n_paths() as f64).sqrt();
        let h = grid.step();
        println!("{n_steps:>8} {h:>8.5} {rms:>12.6}");
        points.push((h.ln(), rms.ln()));
    }

    let slope = least_squares_slope(&points);
    println!("fitted strong order: {slope:.3} (theory: 0.5)");
    assert!((slope - 0.5).abs() <= 0.15, "slope {slope} out of range");
    Ok(())
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
