//! Plot-ready report files for a finished run.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::ExperimentConfig;
use crate::run::{relative_slack, write_json, RunRecord, TrajectoryRow};

/// Relative-slack histogram bins over `[-1, 1]`; values outside are clamped.
pub const HISTOGRAM_BINS: usize = 20;

const TRAJECTORY_HEADER: [&str; 7] = ["t", "L1_dist_to_q", "lhs", "rhs", "slack", "mass_drift", "momentum_drift"];

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(f));
    let ctx = || format!("writing {}", path.display());
    w.write_record(TRAJECTORY_HEADER).with_context(ctx)?;
    for r in rows {
        w.serialize(r).with_context(ctx)?;
    }
    w.flush().with_context(ctx)
}

/// Counts per relative-slack bin; `(lower, upper, count)` rows.
pub fn slack_histogram(record: &RunRecord) -> Vec<(f64, f64, usize)> {
    let width = 2.0 / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for tc in &record.certificates {
        if let Some(r) = relative_slack(&tc.certificate) {
            let k = ((r.clamp(-1.0, 1.0) + 1.0) / width).floor() as usize;
            counts[k.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    counts.into_iter().enumerate().map(|(k, c)| (-1.0 + k as f64 * width, -1.0 + (k + 1) as f64 * width, c)).collect()
}

fn write_histogram_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    let ctx = || format!("writing {}", path.display());
    w.write_record(["bin_lower", "bin_upper", "count"]).with_context(ctx)?;
    if !record.certificates.is_empty() {
        for (lo, hi, c) in slack_histogram(record) {
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()]).with_context(ctx)?;
        }
    }
    w.flush().with_context(ctx)
}

/// Writes `summary.json`, `slack_histogram.csv` and `trajectory.csv` into the
/// run directory and returns their paths. Empty records give header-only CSVs.
pub fn emit_report(record: &RunRecord) -> Result<Vec<PathBuf>> {
    let dir = &record.run_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = dir.join("summary.json");
    #[derive(serde::Serialize)]
    struct SummaryFile<'a> {
        experiment: &'a str,
        seed: u64,
        summary: &'a crate::run::Summary,
        diagnostics: &'a std::collections::BTreeMap<String, f64>,
    }
    write_json(
        &summary,
        &SummaryFile {
            experiment: record.config.experiment.name(),
            seed: record.config.seed,
            summary: &record.summary,
            diagnostics: &record.diagnostics,
        },
    )?;
    let hist = dir.join("slack_histogram.csv");
    write_histogram_csv(&hist, record)?;
    let traj = dir.join("trajectory.csv");
    write_trajectory_csv(&traj, &record.trajectory)?;
    Ok(vec![summary, hist, traj])
}

/// Reads `run.json` from a run directory, or rebuilds an empty record from
/// `config.json` when the run had no trials.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    let run = dir.join("run.json");
    if run.exists() {
        let text = std::fs::read_to_string(&run).with_context(|| format!("reading {}", run.display()))?;
        let mut rec: RunRecord = serde_json::from_str(&text).with_context(|| format!("parsing {}", run.display()))?;
        rec.run_dir = dir.to_path_buf();
        return Ok(rec);
    }
    let cfg = dir.join("config.json");
    if !cfg.exists() {
        anyhow::bail!("{} holds neither run.json nor config.json", dir.display());
    }
    let config = ExperimentConfig::load(&cfg)?;
    Ok(RunRecord::empty(config, dir.to_path_buf()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::{Summary, TrialCertificate};
    use rlab_core::certify::{Certificate, InequalityId, Relation};

    fn record(dir: &Path, certs: Vec<Certificate>) -> RunRecord {
        let config: ExperimentConfig =
            serde_json::from_str(r#"{"seed": 5, "experiment": "certify_sweep", "output_dir": "x", "sigma": {"family": "radius_squared"}}"#)
                .unwrap();
        let mut r = RunRecord::empty(config, dir.to_path_buf());
        r.certificates =
            certs.into_iter().enumerate().map(|(i, c)| TrialCertificate { trial: i, label: String::new(), certificate: c }).collect();
        r.summary = Summary::of(&r.certificates);
        r
    }

    #[test]
    fn empty_record_gives_header_only_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let r = record(dir.path(), vec![]);
        emit_report(&r).unwrap();
        let h = std::fs::read_to_string(dir.path().join("slack_histogram.csv")).unwrap();
        assert_eq!(h, "bin_lower,bin_upper,count\n");
        let t = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(t, "t,L1_dist_to_q,lhs,rhs,slack,mass_drift,momentum_drift\n");
    }

    #[test]
    fn histogram_has_one_row_per_bin_and_counts_violations() {
        let dir = tempfile::tempdir().unwrap();
        let certs = vec![
            Certificate::assess(InequalityId::Thm1Ineq1, Relation::Le, 1.0, 2.0),
            Certificate::assess(InequalityId::Thm1Ineq1, Relation::Le, 3.0, 2.0),
            Certificate::assess(InequalityId::Thm1Ineq2, Relation::Le, 0.0, 0.0),
        ];
        let r = record(dir.path(), certs);
        assert_eq!(r.summary.violations, 1);
        assert_eq!(r.summary.by_inequality["thm1_ineq1"].violations, 1);
        let h = slack_histogram(&r);
        assert_eq!(h.len(), HISTOGRAM_BINS);
        assert_eq!(h.iter().map(|x| x.2).sum::<usize>(), 3);
        emit_report(&r).unwrap();
        let text = std::fs::read_to_string(dir.path().join("slack_histogram.csv")).unwrap();
        assert_eq!(text.lines().count(), HISTOGRAM_BINS + 1);
    }
}
