//! Subcommand dispatch. Every command yields a rendered body and an exit
//! status; failures that prevent a verdict map to status 2.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depdec_core::advisories::{advisories_at, load_path, severity_of, AdvisoryStore, ReleaseCatalog};
use depdec_core::changes::classify_changes;
use depdec_core::corpus::run_corpus_file;
use depdec_core::harness::{run_instance, HeadSource, TaskInstance};
use depdec_core::manifests::{detect_format, parse_lockfile, parse_manifest};
use depdec_core::time::parse_utc;
use depdec_core::version::Version;

use crate::render::{self, AuditRow};

#[derive(Debug, Parser)]
#[command(name = "depdec", version, about = "Dependency-decision analysis and benchmark scoring")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Advisory snapshot (JSON Lines, one record per line).
    #[arg(long, global = true)]
    pub snapshot: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackArg {
    Specified,
    Unspecified,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify dependency changes between two versions of one manifest.
    Diff { base: PathBuf, head: PathBuf },
    /// List pinned dependencies affected by advisories published by a date.
    Audit {
        manifest: PathBuf,
        #[arg(long)]
        ref_date: String,
    },
    /// Score a patch or head tree against a benchmark instance.
    Score {
        instance: PathBuf,
        #[arg(long, conflicts_with = "head_dir", required_unless_present = "head_dir")]
        patch: Option<PathBuf>,
        #[arg(long)]
        head_dir: Option<PathBuf>,
        /// Withhold or show the instance policy; defaults to showing it when present.
        #[arg(long, value_enum)]
        track: Option<TrackArg>,
    },
    /// Replay a corpus of pull-request records and tabulate outcomes.
    Corpus {
        corpus: PathBuf,
        /// Release lists per package, used to find safe versions.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
}

pub struct Outcome {
    pub body: String,
    pub status: u8,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn store(global: &GlobalArgs) -> Result<AdvisoryStore> {
    let path = global
        .snapshot
        .as_ref()
        .ok_or_else(|| anyhow!("--snapshot is required for this command"))?;
    Ok(load_path(path).map_err(|e| anyhow!("{}: {e}", path.display()))?.0)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn diff(global: &GlobalArgs, base: &Path, head: &Path) -> Result<Outcome> {
    let (base_text, head_text) = (read(base)?, read(head)?);
    let format = detect_format(head)
        .or_else(|| detect_format(base))
        .ok_or_else(|| anyhow!("{} is not a recognized manifest", head.display()))?;
    if detect_format(base).is_some_and(|f| f != format) {
        bail!("{} and {} are different manifest formats", base.display(), head.display());
    }
    if format.is_lockfile() {
        bail!("{} is a lockfile; compare the manifests instead", head.display());
    }
    let name = head.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let b = parse_manifest(format, &base_text, &name).map_err(|e| anyhow!("{}: {e}", base.display()))?;
    let h = parse_manifest(format, &head_text, &name).map_err(|e| anyhow!("{}: {e}", head.display()))?;
    let changes = classify_changes(&b, &h)?;
    let body = match global.format {
        Format::Json => json(&changes),
        Format::Table => render::changes_table(&changes),
    };
    Ok(Outcome { body, status: 0 })
}

fn audit(global: &GlobalArgs, manifest: &Path, ref_date: &str) -> Result<Outcome> {
    let at = parse_utc(ref_date).ok_or_else(|| anyhow!("--ref-date {ref_date:?} is not a UTC date or timestamp"))?;
    let store = store(global)?;
    let text = read(manifest)?;
    let format =
        detect_format(manifest).ok_or_else(|| anyhow!("{} is not a recognized manifest", manifest.display()))?;
    let bad = |e| anyhow!("{}: {e}", manifest.display());
    let pinned: Vec<(String, Version)> = if format.is_lockfile() {
        parse_lockfile(format, &text).map_err(bad)?
    } else {
        let name = manifest.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        parse_manifest(format, &text, &name)
            .map_err(bad)?
            .decls
            .into_iter()
            .filter_map(|d| d.pinned.map(|v| (d.name, v)))
            .collect()
    };
    let mut rows = Vec::new();
    for (name, version) in &pinned {
        for a in advisories_at(&store, format.ecosystem(), name, version, at) {
            rows.push(AuditRow {
                package: name.clone(),
                version: version.raw().to_string(),
                advisory: a.id.clone(),
                severity: severity_of(a).label().to_string(),
            });
        }
    }
    let status = u8::from(!rows.is_empty());
    let body = match global.format {
        Format::Json => json(&rows),
        Format::Table => render::audit_table(&rows),
    };
    Ok(Outcome { body, status })
}

fn score(
    global: &GlobalArgs,
    config: &Path,
    patch: Option<&Path>,
    head_dir: Option<&Path>,
    track: Option<TrackArg>,
) -> Result<Outcome> {
    let mut instance = TaskInstance::load(config)?;
    if track == Some(TrackArg::Unspecified) {
        instance = instance.without_policy();
    } else if track == Some(TrackArg::Specified) && instance.policy.is_none() {
        bail!("{} has no policy to show", config.display());
    }
    let store = store(global)?;
    let head = match (patch, head_dir) {
        (Some(p), None) => HeadSource::Diff(read(p)?),
        (None, Some(d)) => HeadSource::Dir(d.to_path_buf()),
        _ => bail!("give exactly one of --patch and --head-dir"),
    };
    let report = run_instance(&instance, &head, &store)?;
    let body = match global.format {
        Format::Json => json(&report),
        Format::Table => render::score_report(&report),
    };
    Ok(Outcome {
        body,
        status: u8::from(!report.passed()),
    })
}

fn corpus(global: &GlobalArgs, path: &Path, candidates: Option<&Path>) -> Result<Outcome> {
    let store = store(global)?;
    let catalog = candidates
        .map(|p| ReleaseCatalog::from_json(&read(p)?).with_context(|| format!("{}: bad release lists", p.display())))
        .transpose()?;
    let report = run_corpus_file(path, &store, catalog.as_ref()).with_context(|| format!("cannot read {}", path.display()))?;
    let body = match global.format {
        Format::Json => json(&report),
        Format::Table => render::corpus_report(&report.aggregate, &report.diagnostics),
    };
    Ok(Outcome { body, status: 0 })
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Diff { base, head } => diff(g, base, head),
        Command::Audit { manifest, ref_date } => audit(g, manifest, ref_date),
        Command::Score {
            instance,
            patch,
            head_dir,
            track,
        } => score(g, instance, patch.as_deref(), head_dir.as_deref(), *track),
        Command::Corpus { corpus: path, candidates } => corpus(g, path, candidates.as_deref()),
    }
}

/// Runs the command and delivers its body; returns the process status.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match execute(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("depdec: {e:#}");
            return 2;
        }
    };
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &outcome.body) {
                eprintln!("depdec: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{}", outcome.body),
    }
    outcome.status
}
