//! A full config-driven campaign: parse, run, emit, and inspect.
//!
//! The same document drives the `pathtci` binary; here the library API is
//! used directly. Artifacts land in a temp directory and the bundle JSON is
//! echoed.

use pathtci::experiment::config::parse_config;
use pathtci::experiment::report::{emit_reports, OutputFormat};
use pathtci::experiment::run_experiment_with_paths;

const CONFIG: &str = r#"
scenario = "dissipative"
seed = 7
n_paths = 512
inequalities = ["thm1", "prop1"]
out_dir = "out"

[grid]
horizon = 1.0
n_steps = 256

[problem]
dimension = 1
initial = [1.0]
lipschitz_k = 1.0
growth_n = 1.0
sigma_sup = 1.0

[problem.drift]
form = "ou"
theta = 1.0

[problem.sigma]
form = "constant"
value = 1.0

[perturbation]
form = "constant"
value = 1.0

[ot]
solver = "exact"

[bounds]
k = 1.0
"#;

fn main() -> pathtci::Result<()> {
    let config = parse_config(CONFIG)?;
    println!("config hash: {}", config.hash());

    let output = run_experiment_with_paths(&config, false)?;
    let dir = std::env::temp_dir().join("pathtci_campaign");
    let files = emit_reports(&output, &dir, &[OutputFormat::Json, OutputFormat::Csv])?;
    for f in &files {
        println!("wrote {}", f.display());
    }

    for record in &output.bundle.records {
        let est = &record.estimates;
        println!(
            "[{}] coupling {:.5}, entropy {:.5}, ot {:?}, mean weight {:.4}",
            record.label,
            est.coupling_cost.value,
            est.entropy.value,
            est.ot.as_ref().map(|o| o.value),
            est.martingale_mean.value,
        );
        for report in &record.reports {
            println!(
                "  {}: lhs {:.5} <= rhs {:.5} ? {} (margin {:.5})",
                report.tag, report.lhs, report.rhs, report.verdict, report.margin
            );
        }
    }
    Ok(())
}
