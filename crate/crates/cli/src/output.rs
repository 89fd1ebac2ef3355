//! Run artifacts: the background dump writer, CSV tables and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;

use pbdm_core::diagnostics::DeviationSeries;

use crate::{fld, CliError, CliResult};

struct Job {
    path: PathBuf,
    dims: Vec<usize>,
    values: Vec<f64>,
}

/// Writes field dumps on a separate thread. At most `QUEUE` finished
/// snapshots wait in the hand-off queue; `push` blocks beyond that.
pub struct DumpWriter {
    tx: Option<SyncSender<Job>>,
    handle: Option<JoinHandle<CliResult<Vec<PathBuf>>>>,
}

const QUEUE: usize = 2;

impl DumpWriter {
    pub fn spawn() -> Self {
        let (tx, rx) = sync_channel::<Job>(QUEUE);
        let handle = std::thread::spawn(move || {
            let mut written = Vec::new();
            for job in rx {
                fld::write(&job.path, &job.dims, &job.values)?;
                written.push(job.path);
            }
            Ok(written)
        });
        Self {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    pub fn push(&self, path: PathBuf, dims: Vec<usize>, values: Vec<f64>) -> CliResult<()> {
        let tx = self.tx.as_ref().expect("writer open until finish");
        tx.send(Job { path, dims, values })
            .map_err(|_| CliError::Format("dump writer stopped early".into()))
    }

    /// Drains the queue and returns every file written.
    pub fn finish(mut self) -> CliResult<Vec<PathBuf>> {
        self.close()
    }

    fn close(&mut self) -> CliResult<Vec<PathBuf>> {
        self.tx.take();
        match self.handle.take() {
            Some(h) => h.join().map_err(|_| CliError::Format("dump writer panicked".into()))?,
            None => Ok(Vec::new()),
        }
    }
}

impl Drop for DumpWriter {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn deviation_csv(series: &DeviationSeries) -> String {
    let mut s = String::from("t,R\n");
    for (t, v) in series.times.iter().zip(&series.values) {
        let _ = writeln!(s, "{t},{v}");
    }
    s
}

pub fn gap_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("kappa,gap\n");
    for (k, g) in rows {
        let _ = writeln!(s, "{k},{g}");
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub kappa: f64,
    /// `dx` or `dz`
    pub axis: &'static str,
    pub mesh: f64,
    pub error: Option<f64>,
    /// Order against the next finer mesh of the same axis.
    pub order: Option<f64>,
    pub note: Option<String>,
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    let mut s = String::from("kappa,axis,mesh,error,order\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.kappa, r.axis, r.mesh, num(r.error), num(r.order));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub case: String,
    pub k: f64,
    pub family: String,
    pub re: f64,
    pub im: f64,
    pub class: String,
}

pub fn stability_csv(rows: &[StabilityRow]) -> String {
    let mut s = String::from("case,K,family,Re,Im,class\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.case, r.k, r.family, r.re, r.im, r.class);
    }
    s
}

/// Completion record of one run directory.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub name: String,
    pub status: String,
    pub failed_step: Option<u64>,
    pub error: Option<String>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn render(&self, root: &Path) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "config = config.toml");
        let _ = writeln!(s, "status = {}", self.status);
        if let Some(step) = self.failed_step {
            let _ = writeln!(s, "failed_step = {step}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error = {e}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        let mut files: Vec<String> = self
            .files
            .iter()
            .map(|p| p.strip_prefix(root).unwrap_or(p).display().to_string())
            .collect();
        files.sort();
        for f in files {
            let _ = writeln!(s, "file = {f}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_flushes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let w = DumpWriter::spawn();
        for i in 0..5 {
            w.push(dir.path().join(format!("f{i}.fld")), vec![2], vec![i as f64, 1.0])
                .unwrap();
        }
        let files = w.finish().unwrap();
        assert_eq!(files.len(), 5);
        let d = fld::read(&dir.path().join("f3.fld")).unwrap();
        assert_eq!(d.values, vec![3.0, 1.0]);
    }

    #[test]
    fn csv_headers() {
        assert!(deviation_csv(&DeviationSeries::default()).starts_with("t,R\n"));
        assert_eq!(gap_csv(&[(8.0, 0.5)]), "kappa,gap\n8,0.5\n");
        assert!(stability_csv(&[]).starts_with("case,K,family,Re,Im,class"));
        let row = ErrorRow {
            kappa: 8.0,
            axis: "dx",
            mesh: 0.05,
            error: Some(0.1),
            order: None,
            note: None,
        };
        assert_eq!(errors_csv(&[row]), "kappa,axis,mesh,error,order\n8,dx,0.05,0.1,\n");
    }
}
