//! Run-directory layout. Every file is written to a temporary sibling and
//! renamed into place, so a crash never leaves a half-written file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::stream::{Aggregate, EvalReport};
use crate::dataio::{Ablation, RunConfig};
use crate::{Error, Result};

pub const CONFIG_FILE: &str = "config.txt";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const LOG_FILE: &str = "events.log";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub repeat: usize,
    pub m0: Option<Metrics>,
    pub mi: Option<Metrics>,
}

/// The small, human-facing digest of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ablation: Ablation,
    pub pretrain_loss: (f64, f64),
    pub subjects_per_repeat: usize,
    pub repeats: Vec<RepeatSummary>,
    pub aggregate: Option<Aggregate>,
}

impl RunSummary {
    pub fn of(report: &EvalReport) -> Self {
        Self {
            ablation: report.ablation,
            pretrain_loss: report.pretrain_loss,
            subjects_per_repeat: report.repeats.first().map_or(0, |r| r.rows.len()),
            repeats: report
                .repeats
                .iter()
                .map(|r| {
                    let m = r.means();
                    RepeatSummary {
                        repeat: r.repeat,
                        m0: m.map(|p| p.0),
                        mi: m.map(|p| p.1),
                    }
                })
                .collect(),
            aggregate: report.aggregate.clone(),
        }
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variant {} | {} subjects per repeat", self.ablation, self.subjects_per_repeat);
        match &self.aggregate {
            Some(a) => {
                let _ = writeln!(s, "{:<6} {:>16} {:>16}", "model", "ACC", "MF1");
                for (name, acc, mf1) in [("M0", a.acc_m0, a.mf1_m0), ("Mi", a.acc_mi, a.mf1_mi)] {
                    let _ = writeln!(
                        s,
                        "{name:<6} {:>7.2} ± {:<6.2} {:>7.2} ± {:<6.2}",
                        100.0 * acc.mean,
                        100.0 * acc.std,
                        100.0 * mf1.mean,
                        100.0 * mf1.std
                    );
                }
            }
            None => s.push_str("no labelled evaluation epochs\n"),
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn report_csv(report: &EvalReport) -> String {
    let mut s = String::from(
        "repeat,step,subject,node,degree,activated,replay_samples,pseudo_labels,stored_samples,\
         fallback,degenerate,failed,acc_m0,acc_mi,mf1_m0,mf1_mi\n",
    );
    for r in report.repeats.iter().flat_map(|r| &r.rows) {
        let a = &r.adaptation;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.repeat,
            r.step,
            a.subject,
            a.node.0,
            a.degree,
            a.activated.len(),
            a.replay_samples,
            a.pseudo_labels,
            a.stored_samples,
            a.fallback,
            a.degenerate,
            a.failed,
            opt(r.m0.map(|m| m.acc)),
            opt(r.mi.map(|m| m.acc)),
            opt(r.m0.map(|m| m.mf1)),
            opt(r.mi.map(|m| m.mf1)),
        );
    }
    s
}

pub fn trajectory_csv(report: &EvalReport) -> String {
    let mut s = String::from("repeat,step,node,mean_strength\n");
    for r in &report.repeats {
        for p in &r.trajectories {
            let _ = writeln!(s, "{},{},{},{:.9}", r.repeat, p.step, p.node.0, p.mean_strength);
        }
    }
    s
}

fn event_log(report: &EvalReport) -> String {
    let mut s = String::new();
    for r in report.repeats.iter().flat_map(|r| &r.rows) {
        for e in &r.adaptation.events {
            let _ = writeln!(s, "repeat {} step {} {}: {e}", r.repeat, r.step, r.adaptation.subject);
        }
    }
    s
}

/// Writes config, per-subject report, summary, trajectories, snapshots and
/// every node's final parameters under `dir`.
pub fn write_run_dir(dir: &Path, config: &RunConfig, report: &EvalReport) -> Result<()> {
    write_atomic(&dir.join(CONFIG_FILE), config.to_text().as_bytes())?;
    write_atomic(&dir.join(REPORT_FILE), report_csv(report).as_bytes())?;
    write_atomic(&dir.join(TRAJECTORY_FILE), trajectory_csv(report).as_bytes())?;
    write_atomic(&dir.join(LOG_FILE), event_log(report).as_bytes())?;
    let summary = serde_json::to_string_pretty(&RunSummary::of(report))? + "\n";
    write_atomic(&dir.join(SUMMARY_FILE), summary.as_bytes())?;
    if let Some(m0) = &report.m0 {
        write_atomic(&dir.join("params").join("m0.bin"), &m0.to_bytes())?;
    }
    for r in &report.repeats {
        let rdir = format!("repeat_{}", r.repeat);
        for snap in &r.snapshots {
            let path = dir.join("snapshots").join(&rdir).join(format!("step_{}.json", snap.step));
            write_atomic(&path, snap.to_json()?.as_bytes())?;
        }
        if let Some(net) = &r.network {
            for n in net.nodes().filter(|n| !n.is_source) {
                if let Some(p) = &n.params {
                    let path = dir.join("params").join(&rdir).join(format!("node_{}.bin", n.id.0));
                    write_atomic(&path, &p.to_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
}
