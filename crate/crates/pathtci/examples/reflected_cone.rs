//! Reflection at a boundary through Yosida regularization of a normal cone.
//!
//! The multivalued drift `-N_{[0,inf)}` keeps paths nonnegative in the
//! limit; its Yosida drift `b_n` is an ordinary Lipschitz drift pushing
//! back into the half-line with force `n`. Excursions below zero shrink as
//! `n` grows while the drift stays dissipative at every level.

use pathtci::sde::{scalar_diffusion, zero_drift};
use pathtci::{
    check_dissipativity, make_yosida_problem, simulate_paths, ConvexSet, MonotoneOperator,
    SdeProblem, TimeGrid, YosidaApprox,
};

fn main() -> pathtci::Result<()> {
    let base = SdeProblem::new(vec![0.5], zero_drift(), scalar_diffusion(1.0))?
        .with_sigma_sup(1.0);
    let cone = MonotoneOperator::normal_cone(
        ConvexSet::Box {
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        },
        1,
    )?;
    let grid = TimeGrid::new(1.0, 512)?;

    println!("{:>6} {:>12} {:>14} {:>12}", "n", "min value", "frac below 0", "dissipative");
    for n in [1u32, 4, 16, 64, 256] {
        let problem = make_yosida_problem(&base, YosidaApprox::new(cone.clone(), n)?)?;
        let ens = simulate_paths(&problem, &grid, 200, 11)?;
        let mut min_val = f64::INFINITY;
        let mut below = 0usize;
        let mut total = 0usize;
        for p in ens.paths() {
            for k in 0..p.n_nodes() {
                let v = p.node(k)[0];
                min_val = min_val.min(v);
                below += usize::from(v < 0.0);
                total += 1;
            }
        }
        let report = check_dissipativity(problem.drift.as_ref(), &ens)?;
        println!(
            "{n:>6} {min_val:>12.5} {:>13.2}% {:>12}",
            100.0 * below as f64 / total as f64,
            !report.flagged
        );
    }
    Ok(())
}
