//! Batch front end: collects input documents, runs the analysis pipeline on a
//! worker pool, and writes check, extract and stats output.

pub mod generate;
pub mod render;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use tlex_core::analysis::{analyze, Analysis, AnalysisOptions, CycleReport, DocumentReport, IndeterminacyMode};
use tlex_core::model::TimeMLGraph;
use tlex_core::parser::{parse_document, resolve_graph};
use tlex_core::trunk_branch::{corpus_stats, CorpusStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Indeterminacy {
    None,
    #[default]
    Sections,
    Full,
}

impl From<Indeterminacy> for IndeterminacyMode {
    fn from(m: Indeterminacy) -> Self {
        match m {
            Indeterminacy::None => IndeterminacyMode::None,
            Indeterminacy::Sections => IndeterminacyMode::Sections,
            Indeterminacy::Full => IndeterminacyMode::Full,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: Format,
    pub drop_self_loops: bool,
    pub include_alinks: bool,
    pub indeterminacy: Indeterminacy,
    pub anchors_file: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` lets the pool decide.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>) -> Self {
        RunConfig {
            inputs,
            format: Format::Json,
            drop_self_loops: true,
            include_alinks: true,
            indeterminacy: Indeterminacy::Sections,
            anchors_file: None,
            out_dir: None,
            jobs: None,
        }
    }

    pub fn analysis_options(&self) -> anyhow::Result<AnalysisOptions> {
        let anchors = match &self.anchors_file {
            Some(path) => Some(read_anchors(path)?),
            None => None,
        };
        Ok(AnalysisOptions {
            drop_self_loops: self.drop_self_loops,
            include_alinks: self.include_alinks,
            indeterminacy: self.indeterminacy.into(),
            anchors,
            ..AnalysisOptions::default()
        })
    }
}

/// One node id per line; `#` starts a comment.
pub fn read_anchors(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading anchors file {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn is_document(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("tml" | "xml" | "json"))
}

/// Expands directories (recursively) into their `.tml`, `.xml` and `.json`
/// files. Explicit file arguments are kept whatever their extension. The
/// result is sorted and free of duplicates.
pub fn collect_inputs(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    if paths.is_empty() {
        bail!("no input paths given");
    }
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
                let entry = entry.with_context(|| format!("reading directory {}", p.display()))?;
                if entry.file_type().is_file() && is_document(entry.path()) {
                    files.push(entry.into_path());
                }
            }
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            bail!("input {} does not exist", p.display());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "document".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Reads a `.json` graph dump or a TimeML document and returns its id and
/// graph.
pub fn load_graph(path: &Path, options: &AnalysisOptions) -> Result<(String, TimeMLGraph), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("read error: {e}"))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let text = String::from_utf8(bytes).map_err(|e| format!("invalid UTF-8: {e}"))?;
        let graph = TimeMLGraph::from_json(&text).map_err(|e| e.to_string())?;
        let graph = graph.with_options(options.graph_options()).map_err(|e| e.to_string())?;
        return Ok((file_stem(path), graph));
    }
    let doc = parse_document(&bytes).map_err(|e| format!("parse error: {e}"))?;
    let graph = resolve_graph(&doc, options.graph_options()).map_err(|e| e.to_string())?;
    let id = if doc.doc_id.trim().is_empty() { file_stem(path) } else { doc.doc_id.trim().to_string() };
    Ok((id, graph))
}

#[derive(Debug)]
pub struct DocOutcome {
    pub path: PathBuf,
    pub result: Result<Analysis, String>,
}

fn analyze_path(path: &Path, options: &AnalysisOptions) -> Result<Analysis, String> {
    let (id, graph) = load_graph(path, options)?;
    analyze(&id, &graph, options).map_err(|e| e.to_string())
}

/// Number of worker threads: `jobs`, else `TLEX_JOBS`, else the pool default.
pub fn resolve_jobs(jobs: Option<usize>) -> Option<usize> {
    jobs.or_else(|| std::env::var("TLEX_JOBS").ok().and_then(|v| v.trim().parse().ok())).filter(|&n| n > 0)
}

/// Runs the pipeline over every input. Results come back in input order.
pub fn process(config: &RunConfig) -> anyhow::Result<Vec<DocOutcome>> {
    let files = collect_inputs(&config.inputs)?;
    let options = config.analysis_options()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = resolve_jobs(config.jobs) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    Ok(pool.install(|| {
        files
            .into_par_iter()
            .map(|path| {
                let result = analyze_path(&path, &options);
                DocOutcome { path, result }
            })
            .collect()
    }))
}

/// 2 if any document failed to load, else 1 if any is inconsistent, else 0.
pub fn exit_code(outcomes: &[DocOutcome]) -> i32 {
    if outcomes.iter().any(|o| o.result.is_err()) {
        2
    } else if outcomes.iter().any(|o| o.result.as_ref().is_ok_and(|a| !a.is_consistent())) {
        1
    } else {
        0
    }
}

#[derive(Debug, Serialize)]
pub struct CheckEntry {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent_tlinks_only: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent_with_alinks: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mlic: Vec<CycleReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckEntry {
    pub fn from_outcome(o: &DocOutcome) -> Self {
        let path = o.path.display().to_string();
        match &o.result {
            Ok(a) => {
                let r = a.report();
                CheckEntry {
                    path,
                    doc_id: Some(r.doc_id),
                    consistent: Some(r.consistent),
                    consistent_tlinks_only: a.consistent_tlinks_only,
                    consistent_with_alinks: a.consistent_with_alinks,
                    mlic: r.mlic,
                    warnings: r.warnings,
                    error: None,
                }
            }
            Err(e) => CheckEntry {
                path,
                doc_id: None,
                consistent: None,
                consistent_tlinks_only: None,
                consistent_with_alinks: None,
                mlic: vec![],
                warnings: vec![],
                error: Some(e.clone()),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ExtractEntry {
    pub path: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub report: Option<DocumentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExtractEntry {
    pub fn from_outcome(o: &DocOutcome) -> Self {
        let path = o.path.display().to_string();
        match &o.result {
            Ok(a) => ExtractEntry { path, report: Some(a.report()), error: None },
            Err(e) => ExtractEntry { path, report: None, error: Some(e.clone()) },
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serialization is infallible");
    s.push('\n');
    s
}

pub fn cmd_check(config: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let outcomes = process(config)?;
    let entries: Vec<CheckEntry> = outcomes.iter().map(CheckEntry::from_outcome).collect();
    match config.format {
        Format::Json => out.write_all(to_json(&entries).as_bytes())?,
        Format::Text => {
            for e in &entries {
                out.write_all(render::check_entry(e).as_bytes())?;
            }
        }
    }
    Ok(exit_code(&outcomes))
}

/// Writes one report per document. With an output directory each document
/// goes to `<dir>/<stem>.json` (or `.txt`); otherwise everything goes to
/// `out` (a JSON array in JSON mode).
pub fn cmd_extract(config: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let outcomes = process(config)?;
    let entries: Vec<ExtractEntry> = outcomes.iter().map(ExtractEntry::from_outcome).collect();
    let render_one = |e: &ExtractEntry| match config.format {
        Format::Json => to_json(e),
        Format::Text => render::extract_entry(e),
    };
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let ext = match config.format {
            Format::Json => "json",
            Format::Text => "txt",
        };
        let mut used = BTreeSet::new();
        for (o, e) in outcomes.iter().zip(&entries) {
            let stem = file_stem(&o.path);
            let mut name = format!("{stem}.{ext}");
            let mut k = 1;
            while !used.insert(name.clone()) {
                k += 1;
                name = format!("{stem}-{k}.{ext}");
            }
            let target = dir.join(&name);
            std::fs::write(&target, render_one(e)).with_context(|| format!("writing {}", target.display()))?;
            if let Some(err) = &e.error {
                writeln!(out, "{}: {err}", e.path)?;
            }
        }
    } else {
        match config.format {
            Format::Json => out.write_all(to_json(&entries).as_bytes())?,
            Format::Text => {
                for e in &entries {
                    out.write_all(render_one(e).as_bytes())?;
                }
            }
        }
    }
    Ok(exit_code(&outcomes))
}

#[derive(Debug, Serialize)]
pub struct StatsOutput {
    #[serde(flatten)]
    pub stats: CorpusStats,
    pub errors: Vec<CheckEntry>,
}

pub fn stats_of(outcomes: &[DocOutcome]) -> StatsOutput {
    let rows = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).map(Analysis::doc_stats).collect();
    StatsOutput {
        stats: corpus_stats(rows),
        errors: outcomes.iter().filter(|o| o.result.is_err()).map(CheckEntry::from_outcome).collect(),
    }
}

pub fn cmd_stats(config: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let outcomes = process(config)?;
    let stats = stats_of(&outcomes);
    match config.format {
        Format::Json => out.write_all(to_json(&stats).as_bytes())?,
        Format::Text => out.write_all(render::stats(&stats).as_bytes())?,
    }
    Ok(exit_code(&outcomes))
}
