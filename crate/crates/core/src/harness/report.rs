use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::eval::EvalReport;
use crate::error::Result;

pub const REPORT_HEADER: &str = "scenario,success_rate_pct,avg_completion_time_s";

fn completion(rep: &EvalReport) -> String {
    rep.mean_completion_time
        .map(|t| format!("{:.2}", t))
        .unwrap_or_else(|| "n/a".to_string())
}

/// One row per report, in input order.
pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", REPORT_HEADER);
    for rep in reports {
        let _ = writeln!(
            out,
            "{},{:.2},{}",
            rep.scenario.label(),
            rep.success_rate * 100.0,
            completion(rep)
        );
    }
    out
}

/// Fixed-width table including the mean episode reward.
pub fn report_text(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:>9} {:>16} {:>24} {:>12}",
        "scenario", "episodes", "success rate (%)", "avg completion time (s)", "mean reward"
    );
    for rep in reports {
        let scenario = match rep.scenario.joint() {
            Some(j) => format!("{} (joint {})", rep.scenario.label(), j),
            None => rep.scenario.label().to_string(),
        };
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>16.2} {:>24} {:>12.2}",
            scenario,
            rep.episodes,
            rep.success_rate * 100.0,
            completion(rep),
            rep.mean_reward
        );
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt` next to each other.
pub fn write_report(reports: &[EvalReport], csv_path: &Path) -> Result<()> {
    fs::write(csv_path, report_csv(reports))?;
    fs::write(csv_path.with_extension("txt"), report_text(reports))?;
    Ok(())
}
