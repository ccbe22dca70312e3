//! On-disk state of a sweep.
//!
//! A sweep directory holds
//!
//! * `sweep.json`: dataset reference and hash, the grid spec and its expansion;
//! * `manifest.jsonl`: append-only log, one line per finished run;
//! * `runs/<run_id>.json` and `runs/<run_id>.ckpt`: record and checkpoint.
//!
//! A run is done once its log line exists. Lines are written only after the
//! record and checkpoint are in place, so a crash never leaves a logged run
//! without its files. A torn final line is ignored on reload.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{expand_grid, GridSpec};
use crate::error::{Error, Result};
use crate::vae::{Hyperparams, ModelRecord, VaeModel};

pub const HEADER_FILE: &str = "sweep.json";
pub const LOG_FILE: &str = "manifest.jsonl";
pub const RUNS_DIR: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Completed,
    Failed,
}

/// One line of the manifest log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run_id: String,
    pub grid_index: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub record: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    dataset_ref: String,
    dataset_hash: String,
    spec: GridSpec,
    grid: Vec<Hyperparams>,
}

/// Run identity: hash of the dataset hash, the hyperparameters and the seed.
pub fn run_id(dataset_hash: &str, hp: &Hyperparams, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(dataset_hash.as_bytes());
    h.update(serde_json::to_vec(hp).expect("hyperparams serialize"));
    h.update(seed.to_le_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepManifest {
    pub dir: PathBuf,
    pub dataset_ref: String,
    pub dataset_hash: String,
    pub spec: GridSpec,
    pub grid: Vec<Hyperparams>,
    entries: BTreeMap<(usize, u64), RunEntry>,
}

impl SweepManifest {
    /// Starts a new sweep in `dir`. Fails if one is already there.
    pub fn create(dir: &Path, spec: GridSpec, dataset_ref: &str, dataset_hash: &str) -> Result<Self> {
        let grid = expand_grid(&spec)?;
        let header_path = dir.join(HEADER_FILE);
        if header_path.exists() {
            return Err(Error::Usage(format!(
                "{} already holds a sweep; resume it instead",
                dir.display()
            )));
        }
        fs::create_dir_all(dir.join(RUNS_DIR)).map_err(|e| Error::io(dir, e))?;
        let header = Header {
            dataset_ref: dataset_ref.to_string(),
            dataset_hash: dataset_hash.to_string(),
            spec,
            grid,
        };
        let text = serde_json::to_string_pretty(&header).expect("header serializes");
        write_atomic(&header_path, text.as_bytes())?;
        File::create(dir.join(LOG_FILE)).map_err(|e| Error::io(dir.join(LOG_FILE), e))?;
        Ok(SweepManifest {
            dir: dir.to_path_buf(),
            dataset_ref: header.dataset_ref,
            dataset_hash: header.dataset_hash,
            spec: header.spec,
            grid: header.grid,
            entries: BTreeMap::new(),
        })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let header_path = dir.join(HEADER_FILE);
        let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let header: Header = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", header_path.display())))?;
        let log_path = dir.join(LOG_FILE);
        let log = fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let lines: Vec<&str> = log.lines().filter(|l| !l.trim().is_empty()).collect();
        let mut entries = BTreeMap::new();
        for (i, line) in lines.iter().enumerate() {
            let entry: RunEntry = match serde_json::from_str(line) {
                Ok(e) => e,
                // a crash mid-append can only tear the last line
                Err(_) if i + 1 == lines.len() && !log.ends_with('\n') => break,
                Err(e) => {
                    return Err(Error::Ingest {
                        path: log_path,
                        line: i + 1,
                        msg: e.to_string(),
                    })
                }
            };
            let hp = header.grid.get(entry.grid_index).ok_or_else(|| {
                Error::Data(format!("log names grid index {} outside the grid", entry.grid_index))
            })?;
            if entry.run_id != run_id(&header.dataset_hash, hp, entry.seed) {
                return Err(Error::Data(format!("run id mismatch for {}", entry.run_id)));
            }
            entries.insert((entry.grid_index, entry.seed), entry);
        }
        Ok(SweepManifest {
            dir: dir.to_path_buf(),
            dataset_ref: header.dataset_ref,
            dataset_hash: header.dataset_hash,
            spec: header.spec,
            grid: header.grid,
            entries,
        })
    }

    /// Every `(grid_index, seed)` task, grid-major.
    pub fn tasks(&self) -> Vec<(usize, u64)> {
        (0..self.grid.len())
            .flat_map(|g| self.spec.seeds.iter().map(move |&s| (g, s)))
            .collect()
    }

    pub fn status(&self, grid_index: usize, seed: u64) -> RunStatus {
        self.entries
            .get(&(grid_index, seed))
            .map_or(RunStatus::Pending, |e| e.status)
    }

    pub fn pending(&self) -> Vec<(usize, u64)> {
        self.tasks()
            .into_iter()
            .filter(|&(g, s)| self.status(g, s) == RunStatus::Pending)
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &RunEntry> {
        self.entries.values()
    }

    pub fn count(&self, status: RunStatus) -> usize {
        match status {
            RunStatus::Pending => self.pending().len(),
            s => self.entries.values().filter(|e| e.status == s).count(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.entries.len() == self.tasks().len()
    }

    /// More than a quarter of the runs finished as failures.
    pub fn is_failed(&self) -> bool {
        4 * self.count(RunStatus::Failed) > self.tasks().len()
    }

    pub fn run_id(&self, grid_index: usize, seed: u64) -> String {
        run_id(&self.dataset_hash, &self.grid[grid_index], seed)
    }

    pub fn check_dataset(&self, hash: &str) -> Result<()> {
        if hash != self.dataset_hash {
            return Err(Error::Data(format!(
                "dataset hash {hash} does not match the sweep's {}",
                self.dataset_hash
            )));
        }
        Ok(())
    }

    pub(crate) fn append(&mut self, log: &mut File, entry: RunEntry) -> Result<()> {
        let mut line = serde_json::to_string(&entry).expect("entry serializes");
        line.push('\n');
        log.write_all(line.as_bytes())
            .and_then(|_| log.sync_data())
            .map_err(|e| Error::io(self.dir.join(LOG_FILE), e))?;
        self.entries.insert((entry.grid_index, entry.seed), entry);
        Ok(())
    }

    pub(crate) fn open_log(&self) -> Result<File> {
        let path = self.dir.join(LOG_FILE);
        let f = OpenOptions::new()
            .append(true)
            .read(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        // drop a torn tail so the next line starts cleanly
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if !text.is_empty() && !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            f.set_len(keep as u64).map_err(|e| Error::io(&path, e))?;
        }
        Ok(f)
    }

    /// Records of all finished runs, ordered by `(grid_index, seed)`.
    pub fn load_records(&self) -> Result<Vec<ModelRecord>> {
        self.entries
            .values()
            .map(|e| {
                let path = self.dir.join(&e.record);
                let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
                serde_json::from_str(&text).map_err(|err| Error::Data(format!("{}: {err}", path.display())))
            })
            .collect()
    }

    pub fn load_model(&self, record: &ModelRecord) -> Result<VaeModel> {
        let path = self.dir.join(&record.checkpoint_ref);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        VaeModel::from_checkpoint(&text)
    }
}

/// Writes a finished run's record and, for successful runs, its checkpoint.
/// Does not touch the log.
pub(crate) fn store_run(dir: &Path, record: &ModelRecord, model: Option<&VaeModel>) -> Result<RunEntry> {
    let runs = dir.join(RUNS_DIR);
    if let Some(m) = model {
        write_atomic(&runs.join(format!("{}.ckpt", record.run_id)), m.to_checkpoint().as_bytes())?;
    }
    let text = serde_json::to_string_pretty(record).expect("record serializes");
    write_atomic(&runs.join(format!("{}.json", record.run_id)), text.as_bytes())?;
    Ok(RunEntry {
        run_id: record.run_id.clone(),
        grid_index: record.grid_index,
        seed: record.seed,
        status: if record.failed {
            RunStatus::Failed
        } else {
            RunStatus::Completed
        },
        record: format!("{RUNS_DIR}/{}.json", record.run_id),
    })
}

pub(crate) fn checkpoint_ref(run_id: &str) -> String {
    format!("{RUNS_DIR}/{run_id}.ckpt")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_data())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
