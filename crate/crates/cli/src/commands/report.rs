//! `report`: condense an evaluated matrix into a markdown report with the
//! five marginal-accuracy tables and a list of any failed cells.

use std::fmt::Write as _;

use rctherm_core::evaluate::{all_marginals, EvaluationMatrix, MarginalDimension, MarginalRow};

use crate::error::{CliError, CliResult, Completion};
use crate::manifest::RunManifest;

use super::{Context, MATRIX_FILE, REPORT_FILE};

fn marginal_section(out: &mut String, dimension: MarginalDimension, rows: &[MarginalRow]) {
    let _ = writeln!(out, "### By {}\n", dimension.label());
    let _ = writeln!(out, "| {} | T_z accuracy (%) | P_HVAC accuracy (%) | cells |", dimension.label());
    let _ = writeln!(out, "|---|---:|---:|---:|");
    for row in rows.iter().filter(|r| r.dimension == dimension) {
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {} |",
            row.group, row.t_z_accuracy, row.p_hvac_accuracy, row.n_cells
        );
    }
    out.push('\n');
}

/// Renders the report body; separated from IO for testing.
pub fn render(matrix: &EvaluationMatrix, config_hash: &str, manifest: Option<&RunManifest>) -> CliResult<String> {
    // An all-failed (or empty) matrix has no marginal tables; surface the
    // underlying error instead of an empty report.
    let marginals = all_marginals(matrix)?;

    let n_scored = matrix.scored().count();
    let n_failed = matrix.n_failed();
    let mut out = String::new();
    let _ = writeln!(out, "# Thermal-model robustness report\n");
    let _ = writeln!(out, "- configuration hash: `{config_hash}`");
    if let Some(manifest) = manifest {
        let _ = writeln!(out, "- produced by: `{}` v{}", manifest.command, manifest.tool_version);
        let _ = writeln!(out, "- root seed: {}", manifest.root_seed);
    }
    let _ = writeln!(out, "- cells: {} scored, {} failed\n", n_scored, n_failed);

    let _ = writeln!(out, "## Marginal accuracies\n");
    let _ = writeln!(
        out,
        "Unweighted means over scored cells; accuracy = 100 − MAPE. Zone\n\
         temperature is scored at native cadence, HVAC electrical power on\n\
         3-hour bin means.\n"
    );
    for dimension in MarginalDimension::ALL {
        marginal_section(&mut out, dimension, &marginals);
    }

    if n_failed > 0 {
        let _ = writeln!(out, "## Failed cells\n");
        let _ = writeln!(
            out,
            "The matrix is partial: the marginal means above skip these\n\
             cells entirely.\n"
        );
        for (key, outcome) in &matrix.cells {
            if let Some((stage, message)) = outcome.failure() {
                let _ = writeln!(out, "- `{key}`: {stage} failed — {message}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn run(ctx: &Context) -> CliResult<Completion> {
    let matrix_path = ctx.out_dir.join(MATRIX_FILE);
    if !matrix_path.exists() {
        return Err(CliError::Config(format!(
            "no {MATRIX_FILE} in {} — run `evaluate` first",
            ctx.out_dir.display()
        )));
    }
    let matrix = crate::csvio::read_matrix_csv(&matrix_path)?;
    let manifest = RunManifest::read(&ctx.out_dir).ok();
    let config_hash = manifest
        .as_ref()
        .map(|m| m.config_hash.clone())
        .unwrap_or_else(|| ctx.config.hash());
    let body = render(&matrix, &config_hash, manifest.as_ref())?;
    let path = ctx.out_dir.join(REPORT_FILE);
    std::fs::write(&path, &body).map_err(|e| CliError::io(&path, e))?;
    println!("{}", path.display());
    let n_failed = matrix.n_failed();
    if n_failed == 0 {
        Ok(Completion::Clean)
    } else {
        Ok(Completion::WithFailures { failed: n_failed })
    }
}
