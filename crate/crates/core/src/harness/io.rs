use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentReport, TraceRow, TrialRecord};
use crate::{Error, Result};

pub const TRIALS_HEADER: &str =
    "trial_id,failed,tau,max_distortion,final_S,final_A,final_B_sq,boundary_crossed";

pub const TRACE_HEADER: &str = "t,x_t,inner,Y,S,distortion,good,tau_set";

fn write_file(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        let tau = r.tau.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.failed,
            tau,
            r.max_distortion,
            r.final_sum_sq,
            r.final_a,
            r.final_b_sq,
            r.boundary_crossed
        );
    }
    out
}

pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    write_file(path, trials_csv(records))
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t, r.x, r.inner, r.deviation, r.sum_sq, r.distortion, r.good, r.tau_set
        );
    }
    out
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_file(path, trace_csv(rows))
}

pub const SWEEP_HEADER: &str = "index,label,M,planned_M,eps,delta,T,strategy,n_valid,failures,\
failure_rate,failure_lo,failure_hi,boundary_crossing_rate,mixture_mean,max_distortion,error";

/// One row per sweep point; failed points keep their row with the error message.
pub fn sweep_csv(labels: &[Option<String>], results: &[Result<ExperimentReport>]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for (i, res) in results.iter().enumerate() {
        let label = labels.get(i).cloned().flatten().unwrap_or_default();
        match res {
            Ok(r) => {
                let p = &r.config.plan;
                let max_d = r.distortion_profile.iter().map(|p| p.max).fold(0.0, f64::max);
                let _ = writeln!(
                    out,
                    "{i},{label},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    r.dim,
                    r.planned_dim,
                    p.eps,
                    p.delta,
                    p.horizon,
                    r.strategy,
                    r.n_valid,
                    r.failure.successes,
                    r.failure.rate,
                    r.failure.lower,
                    r.failure.upper,
                    r.boundary_crossing.rate,
                    r.mixture.mean,
                    max_d
                );
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "{i},{label},,,,,,,,,,,,,,,{msg}");
            }
        }
    }
    out
}

pub fn write_sweep_csv(
    path: &Path,
    labels: &[Option<String>],
    results: &[Result<ExperimentReport>],
) -> Result<()> {
    write_file(path, sweep_csv(labels, results))
}
