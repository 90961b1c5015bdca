//! `reviewlens validate | run | export | serve`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use reviewlens_core::pipeline::{describe, ProjectConfig};

use crate::files::{self, FileKind};
use crate::project::{InputFiles, ProjectDir, StoredState};
use crate::server::{self, AppState, ADDR_ENV, DEFAULT_ADDR};

#[derive(Debug, Parser)]
#[command(name = "reviewlens", version, about = "Version-aware app review analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check input files without running anything.
    Validate(InputArgs),
    /// Run the pipeline and write the snapshot document.
    Run {
        #[command(flatten)]
        inputs: InputArgs,
        /// Where to write the snapshot document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Copy the latest snapshot of a project directory.
    Export {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API over the projects under `--root`.
    Serve {
        #[arg(long, default_value = "projects")]
        root: PathBuf,
        #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
        addr: String,
    },
}

#[derive(Debug, Args, Default)]
pub struct InputArgs {
    #[arg(long)]
    pub reviews: Option<PathBuf>,
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// JSON project configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Project directory; its files fill in any flag not given, and a run
    /// stores its snapshot there.
    #[arg(long)]
    pub project: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> anyhow::Result<(InputFiles, ProjectConfig)> {
        let dir = self.project.as_ref().map(ProjectDir::create).transpose()?;
        let mut files = match &dir {
            Some(d) => d.inputs()?,
            None => InputFiles::default(),
        };
        for (kind, path) in [
            (FileKind::Reviews, &self.reviews),
            (FileKind::Conllu, &self.conllu),
            (FileKind::Seeds, &self.seeds),
            (FileKind::Vectors, &self.vectors),
        ] {
            if let Some(p) = path {
                files.set(kind, read(p)?);
            }
        }
        let config = match (&self.config, &dir) {
            (Some(p), _) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
            (None, Some(d)) => d.config()?,
            (None, None) => ProjectConfig::default(),
        };
        Ok((files, config))
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses `args` and runs the command. Exit code 0 means success (`done`
/// for a run), 1 a failed run or invalid input, 2 a usage error.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Validate(inputs) => validate(&inputs),
        Command::Run { inputs, out } => run(&inputs, out.as_deref()),
        Command::Export { project, out } => {
            let dir = ProjectDir::create(project)?;
            let Some((version, doc)) = dir.latest_snapshot()? else {
                bail!("project has no completed run");
            };
            fs::write(&out, doc)?;
            println!("exported snapshot {version} to {}", out.display());
            Ok(true)
        }
        Command::Serve { root, addr } => {
            let state = AppState::open(root)?;
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on {addr}");
            rt.block_on(server::serve(state, &addr))?;
            Ok(true)
        }
    }
}

fn validate(inputs: &InputArgs) -> anyhow::Result<bool> {
    let (files, config) = inputs.load()?;
    let mut ok = true;
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = config.validate() {
        writeln!(stdout, "config: {e}")?;
        ok = false;
    }
    let ids = files.reviews.as_deref().map(files::review_ids);
    for kind in FileKind::ALL {
        let Some(text) = files.get(kind) else {
            if matches!(kind, FileKind::Reviews | FileKind::Conllu) {
                writeln!(stdout, "{kind}: missing")?;
                ok = false;
            }
            continue;
        };
        match files::validate(kind, text, ids.as_ref()) {
            Ok(r) => {
                writeln!(stdout, "{kind}: ok, {} lines, {} accepted, {} skipped", r.lines, r.accepted, r.skipped.len())?;
                for s in &r.skipped {
                    writeln!(stdout, "  {s}")?;
                }
                for c in &r.conflicts {
                    writeln!(stdout, "  conflicting seed {c}")?;
                }
            }
            Err(e) => {
                writeln!(stdout, "{e}")?;
                if !e.orphan_ids.is_empty() {
                    writeln!(stdout, "  orphan review ids: {:?}", e.orphan_ids)?;
                }
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn run(inputs: &InputArgs, out: Option<&Path>) -> anyhow::Result<bool> {
    if out.is_none() && inputs.project.is_none() {
        bail!("give --out, --project or both");
    }
    let (files, config) = inputs.load()?;
    let (snapshot, doc) = match files.run(&config) {
        Ok(r) => r,
        Err(e) => {
            println!("failed({})", e.reason());
            eprintln!("{e}");
            return Ok(false);
        }
    };
    if let Some(out) = out {
        fs::write(out, &doc).with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(p) = &inputs.project {
        let dir = ProjectDir::create(p)?;
        let version = dir.state()?.snapshot_version + 1;
        dir.write_snapshot(version, &doc)?;
        dir.save_state(StoredState {
            snapshot_version: version,
            stale: false,
        })?;
    }
    eprintln!("{}", describe(&snapshot));
    println!("done");
    Ok(true)
}
