//! The one case where everything is exact: Brownian motion with a constant
//! unit drift shift.
//!
//! With `b = 0`, `sigma = 1`, `v̇ = 1`, the shifted path differs from the
//! base path by exactly `t`, so the coupling cost is exactly 1 with zero
//! variance and the entropy is exactly 1/2. The bound constant at `K = 0`
//! is 6, so the inequality holds with margin 2.

use pathtci::bounds::{verify_inequality, BoundParams, InequalityTag};
use pathtci::{
    coupling_cost, entropy_estimate, simulate_coupled, DriftPerturbation, Estimate, SdeProblem,
    TimeGrid,
};
use pathtci::sde::{scalar_diffusion, zero_drift};

fn main() -> pathtci::Result<()> {
    let problem = SdeProblem::new(vec![0.0], zero_drift(), scalar_diffusion(1.0))?
        .with_sigma_sup(1.0);
    let grid = TimeGrid::new(1.0, 128)?;
    let pert = DriftPerturbation::constant(1.0);

    let coupled = simulate_coupled(&problem, &pert, &grid, 1000, 7)?;
    let cost = coupling_cost(&coupled)?;
    let entropy = entropy_estimate(&coupled, 1.0)?;

    println!("coupling cost   : {} +- {}", cost.value, cost.std_err);
    println!("entropy H(Q|P)  : {} +- {}", entropy.value, entropy.std_err);

    let params = BoundParams::default();
    let report = verify_inequality(
        InequalityTag::Thm1,
        cost,
        Estimate {
            value: entropy.value,
            std_err: entropy.std_err,
            n: entropy.n_pairs,
        },
        &params,
    )?;
    println!(
        "bound           : {} * H = {} -> verdict {}",
        report.rhs / report.entropy,
        report.rhs,
        report.verdict
    );
    assert_eq!(cost.value, 1.0);
    assert_eq!(entropy.value, 0.5);
    Ok(())
}
