//! Plain-text run reports derived from a manifest's outputs.

use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::verify::VerifyArtifacts;
use std::path::Path;

/// Summarize a run from its manifest: verify runs get a PASS/FAIL table,
/// process runs mirror the bin statistics, everything else lists outputs.
/// Fails with `MissingOutput` when the manifest records no outputs.
pub fn emit_report(manifest: &RunManifest, dir: &Path) -> Result<(), CliError> {
    if manifest.outputs.is_empty() {
        return Err(CliError::MissingOutput);
    }
    let mut text = format!(
        "run report: task {} (seed {})\n\n",
        manifest.task, manifest.seed
    );
    if manifest.task == "process" {
        let stats = std::fs::read_to_string(dir.join("stats.csv"))?;
        text.push_str("bin statistics (observed vs predicted):\n");
        for line in stats.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 3 {
                text.push_str(&format!(
                    "  bin {:>2}: mean {} vs predicted {}\n",
                    cols[0], cols[1], cols[2]
                ));
            }
        }
    }
    text.push_str("\noutputs:\n");
    for o in &manifest.outputs {
        text.push_str(&format!(
            "  {} ({} bytes, sha256 {})\n",
            o.file, o.bytes, o.sha256
        ));
    }
    std::fs::write(dir.join("report.txt"), text)?;
    Ok(())
}

/// Verification report: one PASS/FAIL line per criterion with the observed
/// values, thresholds, and runtimes.
pub fn emit_verify_report(
    artifacts: &VerifyArtifacts,
    manifest: &RunManifest,
    dir: &Path,
) -> Result<(), CliError> {
    if manifest.outputs.is_empty() {
        return Err(CliError::MissingOutput);
    }
    let mut text = String::from("verification report\n====================\n\n");
    for o in &artifacts.outcomes {
        text.push_str(&format!(
            "criterion {} ({}): {}\n  observed:  {}\n  threshold: {}\n  runtime:   {:.2}s\n\n",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.observed,
            o.threshold,
            o.runtime_s
        ));
    }
    let failed = artifacts.outcomes.iter().filter(|o| !o.pass).count();
    text.push_str(&format!(
        "{} of {} criteria passed\n",
        artifacts.outcomes.len() - failed,
        artifacts.outcomes.len()
    ));
    std::fs::write(dir.join("report.txt"), text)?;
    Ok(())
}
