use std::time::Instant;

use geoflow_core::acceptance::{self, CriterionReport};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub suite: String,
    pub passed: bool,
    pub criteria_passed: usize,
    pub criteria_total: usize,
    pub seconds: f64,
    pub reports: Vec<CriterionReport>,
}

impl VerifySummary {
    pub fn failing(&self) -> Vec<&CriterionReport> {
        self.reports.iter().filter(|r| !r.passed).collect()
    }
}

/// Runs the acceptance criteria for `suite` (`all` or a module name),
/// calling `progress` after each one.
pub fn verify(suite: &str, mut progress: impl FnMut(&CriterionReport)) -> Result<VerifySummary, CliError> {
    let selected = acceptance::select(suite).ok_or_else(|| {
        CliError::Config(format!(
            "module: unknown suite `{suite}`; expected `all` or one of {}",
            acceptance::MODULES.join(", ")
        ))
    })?;
    let start = Instant::now();
    let mut reports = Vec::with_capacity(selected.len());
    for c in &selected {
        let r = acceptance::run_criterion(c);
        progress(&r);
        reports.push(r);
    }
    let criteria_passed = reports.iter().filter(|r| r.passed).count();
    Ok(VerifySummary {
        suite: suite.to_string(),
        passed: criteria_passed == reports.len(),
        criteria_passed,
        criteria_total: reports.len(),
        seconds: start.elapsed().as_secs_f64(),
        reports,
    })
}
