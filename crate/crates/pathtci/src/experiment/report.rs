//! Bundle emission: JSON, CSV, and optional per-path containers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bounds::BoundReport;
use crate::error::Result;
use crate::io::write_coupled_binary;

use super::ExperimentOutput;

/// Output formats for [`emit_reports`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    /// Per-record coupled-path dump in the binary container.
    Paths,
}

impl OutputFormat {
    pub fn parse_list(spec: &str) -> Result<Vec<OutputFormat>> {
        let mut formats = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            formats.push(match item {
                "json" => OutputFormat::Json,
                "csv" => OutputFormat::Csv,
                "paths" => OutputFormat::Paths,
                other => {
                    return Err(crate::error::Error::InvalidArgument(format!(
                        "unknown output format `{other}` (expected json, csv, paths)"
                    )))
                }
            });
        }
        Ok(formats)
    }
}

/// Write the bundle artifacts into `out_dir`; returns the files written.
pub fn emit_reports(
    output: &ExperimentOutput,
    out_dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Json) {
        let path = out_dir.join("bundle.json");
        fs::write(&path, output.bundle.to_json())?;
        written.push(path);
    }
    if formats.contains(&OutputFormat::Csv) {
        let path = out_dir.join("reports.csv");
        let mut csv = format!("record,{}\n", BoundReport::csv_header());
        for record in &output.bundle.records {
            for report in &record.reports {
                csv.push_str(&format!("{},{}\n", record.label, report.csv_row()));
            }
        }
        fs::write(&path, csv)?;
        written.push(path);
    }
    if formats.contains(&OutputFormat::Paths) {
        for (label, coupled) in &output.coupled {
            let safe = label.replace('=', "_");
            let path = out_dir.join(format!("coupled_{safe}.ptcc"));
            write_coupled_binary(&path, coupled)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::parse_config;
    use crate::experiment::run_experiment_with_paths;

    const CFG: &str = r#"
scenario = "lipschitz"
seed = 2
n_paths = 8
inequalities = ["thm1", "prop1"]

[grid]
horizon = 1.0
n_steps = 16

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
    fn emits_json_csv_and_paths() {
        let cfg = parse_config(CFG).unwrap();
        let output = run_experiment_with_paths(&cfg, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_reports(
            &output,
            dir.path(),
            &[OutputFormat::Json, OutputFormat::Csv, OutputFormat::Paths],
        )
        .unwrap();
        assert_eq!(files.len(), 3);
        let csv = std::fs::read_to_string(dir.path().join("reports.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 reports
        assert!(lines[0].starts_with("record,tag,"));
        let json = std::fs::read_to_string(dir.path().join("bundle.json")).unwrap();
        assert!(json.contains("\"config_hash\""));
        assert!(crate::io::read_coupled_binary(&dir.path().join("coupled_main.ptcc")).is_ok());
    }

    #[test]
    fn empty_inequations_give_header_only_csv() {
        let cfg = parse_config(&CFG.replace(
            "inequalities = [\"thm1\", \"prop1\"]",
            "inequalities = []",
        ))
        .unwrap();
        let output = run_experiment_with_paths(&cfg, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_reports(&output, dir.path(), &[OutputFormat::Json, OutputFormat::Csv]).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("reports.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let json = std::fs::read_to_string(dir.path().join("bundle.json")).unwrap();
        assert!(json.contains("\"reports\": []"));
    }

    #[test]
    fn format_list_parsing() {
        assert_eq!(
            OutputFormat::parse_list("json,csv").unwrap(),
            vec![OutputFormat::Json, OutputFormat::Csv]
        );
        assert!(OutputFormat::parse_list("yaml").is_err());
    }
}
