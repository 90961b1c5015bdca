//! A project is a directory: the uploaded files, `config.json`,
//! `state.json` and one exported document per completed run under
//! `snapshots/`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use reviewlens_core::pipeline::{run_pipeline, PipelineError, PipelineInputs, ProjectConfig, Snapshot};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::files::FileKind;

const CONFIG_FILE: &str = "config.json";
const STATE_FILE: &str = "state.json";
const SNAPSHOT_DIR: &str = "snapshots";

/// Persistent part of a project's state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StoredState {
    pub snapshot_version: u64,
    /// Seeds changed after the latest snapshot was produced.
    pub stale: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("no {0} file uploaded")]
    MissingFile(FileKind),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// Failure reason reported in the run status.
    pub fn reason(&self) -> String {
        match self {
            Self::MissingFile(k) => format!("MissingFile({k})"),
            Self::Pipeline(e) => e.code().to_string(),
            Self::Io(_) => "IoError".to_string(),
        }
    }
}

/// Serialized form of a snapshot; identical inputs give identical bytes.
pub fn export_document(snapshot: &Snapshot) -> String {
    let mut s = serde_json::to_string_pretty(snapshot).expect("snapshot serializes");
    s.push('\n');
    s
}

/// Hex SHA-256 of an exported document.
pub fn checksum(document: &str) -> String {
    hex::encode(Sha256::digest(document.as_bytes()))
}

/// Loaded input files of a run.
#[derive(Debug, Clone, Default)]
pub struct InputFiles {
    pub reviews: Option<String>,
    pub conllu: Option<String>,
    pub seeds: Option<String>,
    pub vectors: Option<String>,
}

impl InputFiles {
    pub fn get(&self, kind: FileKind) -> Option<&str> {
        match kind {
            FileKind::Reviews => self.reviews.as_deref(),
            FileKind::Conllu => self.conllu.as_deref(),
            FileKind::Seeds => self.seeds.as_deref(),
            FileKind::Vectors => self.vectors.as_deref(),
        }
    }

    pub fn set(&mut self, kind: FileKind, text: String) {
        let slot = match kind {
            FileKind::Reviews => &mut self.reviews,
            FileKind::Conllu => &mut self.conllu,
            FileKind::Seeds => &mut self.seeds,
            FileKind::Vectors => &mut self.vectors,
        };
        *slot = Some(text);
    }

    /// Runs the pipeline and returns the snapshot with its exported form.
    pub fn run(&self, config: &ProjectConfig) -> Result<(Snapshot, String), RunError> {
        let inputs = PipelineInputs {
            reviews: self.reviews.as_deref().ok_or(RunError::MissingFile(FileKind::Reviews))?,
            conllu: self.conllu.as_deref().ok_or(RunError::MissingFile(FileKind::Conllu))?,
            seeds: self.seeds.as_deref(),
            vectors: self.vectors.as_deref(),
        };
        let snapshot = run_pipeline(inputs, config)?;
        let doc = export_document(&snapshot);
        Ok((snapshot, doc))
    }
}

#[derive(Debug, Clone)]
pub struct ProjectDir {
    root: PathBuf,
}

impl ProjectDir {
    pub fn create(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join(SNAPSHOT_DIR))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn file_path(&self, kind: FileKind) -> PathBuf {
        self.root.join(kind.file_name())
    }

    pub fn read(&self, kind: FileKind) -> io::Result<Option<String>> {
        read_optional(&self.file_path(kind))
    }

    pub fn write(&self, kind: FileKind, text: &str) -> io::Result<()> {
        write_atomic(&self.file_path(kind), text)
    }

    pub fn inputs(&self) -> io::Result<InputFiles> {
        let mut files = InputFiles::default();
        for kind in FileKind::ALL {
            if let Some(text) = self.read(kind)? {
                files.set(kind, text);
            }
        }
        Ok(files)
    }

    pub fn config(&self) -> io::Result<ProjectConfig> {
        match read_optional(&self.root.join(CONFIG_FILE))? {
            Some(text) => serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            None => Ok(ProjectConfig::default()),
        }
    }

    pub fn save_config(&self, config: &ProjectConfig) -> io::Result<()> {
        let text = serde_json::to_string_pretty(config).expect("config serializes");
        write_atomic(&self.root.join(CONFIG_FILE), &text)
    }

    pub fn state(&self) -> io::Result<StoredState> {
        match read_optional(&self.root.join(STATE_FILE))? {
            Some(text) => serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            None => Ok(StoredState::default()),
        }
    }

    pub fn save_state(&self, state: StoredState) -> io::Result<()> {
        let text = serde_json::to_string(&state).expect("state serializes");
        write_atomic(&self.root.join(STATE_FILE), &text)
    }

    pub fn snapshot_path(&self, version: u64) -> PathBuf {
        self.root.join(SNAPSHOT_DIR).join(format!("{version:06}.json"))
    }

    pub fn write_snapshot(&self, version: u64, document: &str) -> io::Result<()> {
        write_atomic(&self.snapshot_path(version), document)
    }

    /// The exported document of the latest completed run.
    pub fn latest_snapshot(&self) -> io::Result<Option<(u64, String)>> {
        let version = self.state()?.snapshot_version;
        if version == 0 {
            return Ok(None);
        }
        Ok(read_optional(&self.snapshot_path(version))?.map(|d| (version, d)))
    }
}

fn read_optional(path: &Path) -> io::Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}
