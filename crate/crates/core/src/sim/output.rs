//! Run bundles: per-slot CSV, deployment CSV, game trace CSV and summary JSON.
//!
//! Files are written to a temporary name and renamed into place. Nothing in a
//! bundle depends on wall-clock time, so equal runs give equal bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::coalition::MoveKind;
use crate::sim::horizon::RunResult;
use crate::sim::ServeMode;

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePaths {
    pub slots: PathBuf,
    pub deployments: PathBuf,
    pub trace: PathBuf,
    pub summary: PathBuf,
}

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

fn mode_name(m: ServeMode) -> &'static str {
    match m {
        ServeMode::Split => "split",
        ServeMode::FallbackLocal => "fallback-local",
        ServeMode::EdgeOnDemand => "edge-on-demand",
    }
}

pub fn slots_csv(run: &RunResult) -> io::Result<Vec<u8>> {
    let header = [
        "slot", "md", "server", "n_associated", "model", "d_items", "mode", "z", "c2e_s", "down_s",
        "local_s", "up_s", "edge_s", "total_s", "loss", "budget", "queue_after",
    ];
    let rows = run.slots.iter().flat_map(|s| {
        let q: f64 = s.queues_after.iter().sum();
        s.records.iter().map(move |r| {
            vec![
                r.slot.to_string(),
                r.md.to_string(),
                r.server.to_string(),
                r.n_associated.to_string(),
                r.model.to_string(),
                r.d_items.to_string(),
                mode_name(r.mode).to_string(),
                r.z.to_string(),
                r.c2e_s.to_string(),
                r.down_s.to_string(),
                r.local_s.to_string(),
                r.up_s.to_string(),
                r.edge_s.to_string(),
                r.total_s.to_string(),
                r.loss.to_string(),
                r.budget.to_string(),
                q.to_string(),
            ]
        })
    });
    csv_bytes(&header, rows)
}

pub fn deployments_csv(run: &RunResult) -> io::Result<Vec<u8>> {
    let header = ["slot", "server", "models", "used_bytes", "value"];
    let rows = run.slots.iter().flat_map(|s| {
        s.deployments.iter().map(move |d| {
            let models: Vec<String> = d.deployed.iter().map(|m| m.to_string()).collect();
            vec![
                s.slot.to_string(),
                d.server_id.to_string(),
                models.join(";"),
                d.used_bytes.to_string(),
                d.value.to_string(),
            ]
        })
    });
    csv_bytes(&header, rows)
}

pub fn trace_csv(run: &RunResult) -> io::Result<Vec<u8>> {
    let header = ["slot", "iteration", "kind", "a", "b", "accepted", "welfare", "sweep"];
    let rows = run.trace.iter().map(|t| {
        let r = &t.record;
        vec![
            t.slot.to_string(),
            r.iteration.to_string(),
            match r.kind {
                MoveKind::Switch => "switch".to_string(),
                MoveKind::Exchange => "exchange".to_string(),
            },
            r.a.to_string(),
            r.b.to_string(),
            r.accepted.to_string(),
            r.welfare.to_string(),
            r.sweep.to_string(),
        ]
    });
    csv_bytes(&header, rows)
}

pub fn summary_json(run: &RunResult) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(&run.summary).expect("summary serialises");
    s.push(b'\n');
    s
}

/// Writes the four bundle files into `dir`, named after the run's stem.
pub fn write_bundle(dir: &Path, run: &RunResult) -> io::Result<BundlePaths> {
    fs::create_dir_all(dir)?;
    let stem = run.file_stem();
    let paths = BundlePaths {
        slots: dir.join(format!("{stem}_slots.csv")),
        deployments: dir.join(format!("{stem}_deployments.csv")),
        trace: dir.join(format!("{stem}_trace.csv")),
        summary: dir.join(format!("{stem}_summary.json")),
    };
    write_atomic(&paths.slots, &slots_csv(run)?)?;
    write_atomic(&paths.deployments, &deployments_csv(run)?)?;
    write_atomic(&paths.trace, &trace_csv(run)?)?;
    write_atomic(&paths.summary, &summary_json(run))?;
    Ok(paths)
}
