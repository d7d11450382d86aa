//! On-disk formats. Every file is written whole, from data gathered in
//! rep order, so identical (config, seed) pairs give identical bytes.
//!
//! | file | columns |
//! |---|---|
//! | `trajectories.csv` | `rep,n,arm,log_evalue` (arm 1-based) |
//! | `stopping.csv` | `rep,tau,censored` (`tau` is the horizon when censored) |
//! | `alpha_sweep.csv` | `alpha,mean_tau,ci_lo,ci_hi,ratio,censored_frac` |
//! | `validation.csv` | `criterion,check,status,measured,bound,mc_error,note` |
//! | `summary.json` | schema version, command, seed, resolved config, results |
//!
//! Floats use the shortest representation that round-trips; a zero-wealth
//! statistic appears as `-inf`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{ConfigFile, SimConfig};
use crate::diagnostics::{CheckReport, OracleSolution, SweepRow};
use crate::error::{Result, SimError};
use crate::harness::{McSummary, RepOutcome};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const STOPPING: &str = "stopping.csv";
pub const ALPHA_SWEEP: &str = "alpha_sweep.csv";
pub const VALIDATION: &str = "validation.csv";
pub const SUMMARY: &str = "summary.json";

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| SimError::Io(e.into_error()))?.flush()?;
    Ok(())
}

pub fn write_trajectories<W: Write>(out: W, reps: &[RepOutcome]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["rep", "n", "arm", "log_evalue"])?;
    for r in reps {
        for p in &r.path {
            w.write_record([
                r.rep.to_string(),
                p.n.to_string(),
                (p.arm + 1).to_string(),
                p.log_evalue.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_stopping<W: Write>(out: W, reps: &[RepOutcome]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["rep", "tau", "censored"])?;
    for r in reps {
        w.write_record([
            r.rep.to_string(),
            r.stopping.time().to_string(),
            (!r.stopping.rejected()).to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_alpha_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["alpha", "mean_tau", "ci_lo", "ci_hi", "ratio", "censored_frac"])?;
    for r in rows {
        w.write_record([r.alpha, r.mean_tau, r.ci_lo, r.ci_hi, r.ratio, r.censored_frac].map(|v| v.to_string()))?;
    }
    finish(w)
}

/// One row per check, tagged with the criterion it belongs to.
pub fn write_validation<W: Write>(out: W, rows: &[(String, CheckReport)]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["criterion", "check", "status", "measured", "bound", "mc_error", "note"])?;
    for (criterion, c) in rows {
        w.write_record([
            criterion.clone(),
            c.name.clone(),
            c.status().to_string(),
            c.measured.to_string(),
            c.bound.to_string(),
            c.mc_error.map(|e| e.to_string()).unwrap_or_default(),
            c.note.clone(),
        ])?;
    }
    finish(w)
}

/// The structured document accompanying each run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub seed: u64,
    pub config: ConfigFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<&'a OracleSolution>,
    pub results: T,
}

impl<'a, T: Serialize> Summary<'a, T> {
    pub fn new(command: &'a str, config: &SimConfig, oracle: Option<&'a OracleSolution>, results: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            seed: config.master_seed,
            config: config.to_file(),
            oracle,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

/// Renders with `render` into memory and writes the result as `dir/name`.
pub fn write_with(dir: &Path, name: &str, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    render(&mut buf)?;
    write_file(dir, name, &buf)
}

/// Everything `simulate` writes, as `(file name, bytes)`.
pub fn render_simulation(
    config: &SimConfig,
    reps: &[RepOutcome],
    summary: &McSummary,
) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut trajectories = Vec::new();
    write_trajectories(&mut trajectories, reps)?;
    let mut stopping = Vec::new();
    write_stopping(&mut stopping, reps)?;
    let json = Summary::new("simulate", config, None, summary).to_json()?;
    Ok(vec![
        (TRAJECTORIES, trajectories),
        (STOPPING, stopping),
        (SUMMARY, json.into_bytes()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{PathPoint, StoppingResult};

    fn rep(rep: u64, stopping: StoppingResult) -> RepOutcome {
        RepOutcome {
            rep,
            path: vec![
                PathPoint {
                    n: 1,
                    arm: 0,
                    log_evalue: 0.0,
                },
                PathPoint {
                    n: 2,
                    arm: 2,
                    log_evalue: f64::NEG_INFINITY,
                },
            ],
            checkpoint_log_evalues: vec![],
            stopping,
            rounds: 2,
            final_log_evalue: f64::NEG_INFINITY,
            pulls: vec![1, 0, 1],
        }
    }

    #[test]
    fn csv_layouts() {
        let reps = [
            rep(0, StoppingResult::Censored { horizon: 2 }),
            rep(1, StoppingResult::Rejected { tau: 1 }),
        ];
        let mut t = Vec::new();
        write_trajectories(&mut t, &reps).unwrap();
        assert_eq!(
            String::from_utf8(t).unwrap(),
            "rep,n,arm,log_evalue\n0,1,1,0\n0,2,3,-inf\n1,1,1,0\n1,2,3,-inf\n"
        );
        let mut s = Vec::new();
        write_stopping(&mut s, &reps).unwrap();
        assert_eq!(String::from_utf8(s).unwrap(), "rep,tau,censored\n0,2,true\n1,1,false\n");
    }

    #[test]
    fn sweep_and_validation_layouts() {
        let row = SweepRow {
            alpha: 0.01,
            mean_tau: 50.0,
            ci_lo: 45.0,
            ci_hi: 55.0,
            ratio: 1.1,
            ratio_se: 0.01,
            censored_frac: 0.0,
        };
        let mut a = Vec::new();
        write_alpha_sweep(&mut a, &[row]).unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "alpha,mean_tau,ci_lo,ci_hi,ratio,censored_frac\n0.01,50,45,55,1.1,0\n"
        );
        let mut v = Vec::new();
        let check = CheckReport::at_most("x, y", 1.0, 2.0).with_note("ok");
        write_validation(&mut v, &[("1".into(), check)]).unwrap();
        assert_eq!(
            String::from_utf8(v).unwrap(),
            "criterion,check,status,measured,bound,mc_error,note\n1,\"x, y\",PASS,1,2,,ok\n"
        );
    }

    #[test]
    fn summary_echoes_resolved_config() {
        let config = crate::presets::easy();
        let json = Summary::new("oracle", &config, None, ()).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "oracle");
        assert_eq!(v["config"]["gamma"], 3.0);
        assert_eq!(v["config"]["arms"][0], "bernoulli(0.7)");
        assert!(v.get("oracle").is_none());
    }
}
