//! The pipeline stages behind each subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stereoqual_core::artifacts::{derive_seed, render_condition_set, ArtifactKind, RenderRequest};
use stereoqual_core::audio::{read_wav, write_wav, BitDepth};
use stereoqual_core::manifest::Manifest;
use stereoqual_core::planner::{design_experiment, TrialPlan};
use stereoqual_core::synth;
use stereoqual_session::http::AppState;
use stereoqual_session::{ExportFilter, SessionError, SessionStore};
use stereoqual_stats::figures::Layout;
use stereoqual_stats::{
    compare_lr_ms, export_figure_data, ingest_scores, summarize, Comparison, Grouping, StatsSummary,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::input(path.display(), e)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes stereo synthetic stand-ins for the configured items.
pub fn cmd_synth(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dir = &cfg.paths.items;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, &kind) in &cfg.synth.items {
        let seed = derive_seed(cfg.generation.seed, &format!("synth/{name}"));
        let audio = synth::generate(kind, cfg.synth.seconds, cfg.synth.sample_rate, seed);
        let path = dir.join(format!("{name}.wav"));
        write_wav(&audio, &path, BitDepth::Int24)
            .map_err(|e| CliError::input(path.display(), e))?;
        written.push(path);
    }
    Ok(written)
}

/// Items the plan needs, with the artifact types to render for each.
pub fn required_items(cfg: &RunConfig) -> BTreeMap<String, BTreeSet<ArtifactKind>> {
    let mut out: BTreeMap<String, BTreeSet<ArtifactKind>> = BTreeMap::new();
    for &series in &cfg.plan.series {
        for item in cfg.plan.items_for(series) {
            out.entry(item.clone())
                .or_default()
                .insert(series.artifact());
        }
    }
    for t in &cfg.plan.training {
        out.entry(t.item.clone())
            .or_default()
            .insert(t.series.artifact());
    }
    out
}

#[derive(Debug)]
pub struct GenerateReport {
    pub manifest: Manifest,
    /// Rows whose hash differs from the previous manifest (all rows when
    /// there was none).
    pub changed: usize,
}

/// Renders every condition and anchor of every required item and writes
/// the manifest.
pub fn cmd_generate(cfg: &RunConfig) -> CliResult<GenerateReport> {
    let items = required_items(cfg);
    if items.is_empty() {
        return Err(CliError::Input("configuration selects no items".into()));
    }
    let missing: Vec<String> = items
        .keys()
        .filter(|name| !cfg.paths.items.join(format!("{name}.wav")).is_file())
        .map(|name| format!("{name}.wav"))
        .collect();
    if !missing.is_empty() {
        let expected: Vec<String> = items.keys().map(|n| format!("{n}.wav")).collect();
        return Err(CliError::Input(format!(
            "missing input items in {}: {}; expected: {}",
            cfg.paths.items.display(),
            missing.join(", "),
            expected.join(", ")
        )));
    }
    let stimuli = cfg.stimuli_dir();
    fs::create_dir_all(&stimuli).map_err(io_err(&stimuli))?;
    let previous = Manifest::read(cfg.manifest_path()).ok();
    let mut rows = Vec::new();
    for (name, kinds) in &items {
        let path = cfg.paths.items.join(format!("{name}.wav"));
        let audio = read_wav(&path).map_err(|e| CliError::input(path.display(), e))?;
        if audio.num_channels() != 2 {
            return Err(CliError::Input(format!(
                "{}: expected a stereo file",
                path.display()
            )));
        }
        let request = RenderRequest {
            bit_depth: cfg.generation.bit_depth,
            ..RenderRequest::full(kinds.iter().copied())
        };
        log::info!("rendering {name} ({} kinds)", kinds.len());
        let item_rows = render_condition_set(
            name,
            &audio,
            &request,
            cfg.generation.seed,
            &stimuli,
            &cfg.generation.engine,
        )
        .map_err(|e| CliError::input(name, e))?;
        rows.extend(item_rows);
    }
    let manifest = Manifest::new(rows);
    let changed = match &previous {
        Some(prev) => manifest
            .rows
            .iter()
            .filter(|r| {
                !prev
                    .rows
                    .iter()
                    .any(|p| p.file == r.file && p.sha256 == r.sha256)
            })
            .count(),
        None => manifest.len(),
    };
    let out = cfg.manifest_path();
    manifest
        .write(&out)
        .map_err(|e| CliError::input(out.display(), e))?;
    let snapshot = cfg.paths.out.join("config.toml");
    fs::write(&snapshot, cfg.to_toml()).map_err(io_err(&snapshot))?;
    Ok(GenerateReport { manifest, changed })
}

/// The design plus the digest of the manifest it was resolved against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub manifest_sha256: String,
    pub plan: TrialPlan,
}

fn read_manifest(cfg: &RunConfig) -> CliResult<(Manifest, String)> {
    let path = cfg.manifest_path();
    let bytes = fs::read(&path)
        .map_err(|e| CliError::input(format!("{} (run `generate` first)", path.display()), e))?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(path.display(), e))?;
    let manifest =
        Manifest::try_from(text.as_str()).map_err(|e| CliError::input(path.display(), e))?;
    Ok((manifest, sha256_hex(text.as_bytes())))
}

fn check_stimuli(cfg: &RunConfig, manifest: &Manifest) -> CliResult<()> {
    let stale = manifest.stale_rows(cfg.stimuli_dir());
    if stale.is_empty() {
        return Ok(());
    }
    let names: Vec<&str> = stale.iter().take(5).map(|r| r.file.as_str()).collect();
    Err(CliError::Contract(format!(
        "{} stimulus file(s) missing or changed since generation (e.g. {}); re-run `generate`",
        stale.len(),
        names.join(", ")
    )))
}

pub fn cmd_plan(cfg: &RunConfig) -> CliResult<PlanFile> {
    let (manifest, manifest_sha256) = read_manifest(cfg)?;
    check_stimuli(cfg, &manifest)?;
    let plan =
        design_experiment(&manifest, &cfg.plan).map_err(|e| CliError::Contract(e.to_string()))?;
    let file = PlanFile {
        manifest_sha256,
        plan,
    };
    let path = cfg.plan_path();
    let json = serde_json::to_string_pretty(&file).expect("plan is serialisable");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(file)
}

pub fn load_plan(cfg: &RunConfig) -> CliResult<PlanFile> {
    let path = cfg.plan_path();
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::input(
            format!("no plan at {} (run `plan` first)", path.display()),
            e,
        )
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::input(path.display(), e))
}

fn open_store(cfg: &RunConfig, plan: TrialPlan) -> CliResult<SessionStore> {
    let dir = cfg.database_dir();
    SessionStore::open(&dir, plan, cfg.serve.session_seed).map_err(|e| match e {
        SessionError::PlanMismatch { .. } | SessionError::EmptyPlan | SessionError::Plan(_) => {
            CliError::Contract(format!("{}: {e}", dir.display()))
        }
        other => CliError::input(dir.display(), other),
    })
}

/// Checks that the plan, manifest and stimuli still agree and opens the
/// session store.
pub fn prepare_serve(cfg: &RunConfig) -> CliResult<AppState> {
    let plan = load_plan(cfg)?;
    let (manifest, manifest_sha256) = read_manifest(cfg)?;
    if manifest_sha256 != plan.manifest_sha256 {
        return Err(CliError::Contract(format!(
            "stale manifest: plan was built against {}, {} now hashes to {}; re-run `plan`",
            plan.manifest_sha256,
            cfg.manifest_path().display(),
            manifest_sha256
        )));
    }
    check_stimuli(cfg, &manifest)?;
    let store = open_store(cfg, plan.plan)?;
    Ok(AppState {
        store: Arc::new(store),
        audio_dir: cfg.stimuli_dir(),
    })
}

pub fn cmd_serve(cfg: &RunConfig) -> CliResult<()> {
    let state = prepare_serve(cfg)?;
    let addr = cfg
        .serve
        .addr
        .parse()
        .map_err(|e| CliError::input(&cfg.serve.addr, e))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::input("runtime", e))?;
    runtime
        .block_on(stereoqual_session::http::serve(addr, state))
        .map_err(|e| CliError::input(addr, e))
}

/// Writes the score table of the session store to `to` (default: the
/// configured scores path).
pub fn cmd_export(cfg: &RunConfig, to: Option<&Path>, filter: ExportFilter) -> CliResult<PathBuf> {
    let plan = load_plan(cfg)?;
    let store = open_store(cfg, plan.plan)?;
    let csv = store
        .export_csv(filter)
        .map_err(|e| CliError::input("export", e))?;
    let path = to
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.scores_path());
    fs::write(&path, csv).map_err(io_err(&path))?;
    Ok(path)
}

#[derive(Debug)]
pub struct Analysis {
    pub per_item: Vec<StatsSummary>,
    pub pooled: Vec<StatsSummary>,
    pub comparison: Comparison,
    pub files: Vec<PathBuf>,
}

fn summary_csv(rows: &[StatsSummary]) -> String {
    let mut s = String::from("item,series,condition,n,mean,ci_low,ci_high\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.4},{:.4},{:.4}",
            r.item.as_deref().unwrap_or("pooled"),
            r.series,
            r.condition,
            r.n,
            r.mean,
            r.ci_low,
            r.ci_high
        );
    }
    s
}

fn significance_csv(c: &Comparison) -> String {
    let mut s = String::from(
        "item,context,kind,quality,lr_series,lr_condition,ms_series,ms_condition,n,mean_difference,p_value,stars,test\n",
    );
    for r in &c.results {
        let context = serde_json::to_value(r.context).expect("enum");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{:.4},{:.6e},{},{}",
            r.item.as_deref().unwrap_or("pooled"),
            context.as_str().unwrap_or_default(),
            r.kind,
            r.quality,
            r.lr.series,
            r.lr.condition,
            r.ms.series,
            r.ms.condition,
            r.n,
            r.mean_difference,
            r.p_value,
            r.stars,
            r.test
        );
    }
    s
}

/// Summaries, LR/MS comparisons and figure tables for a score table.
pub fn cmd_analyze(cfg: &RunConfig, scores: Option<&Path>) -> CliResult<Analysis> {
    let path = scores
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.scores_path());
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let dataset =
        ingest_scores(file, &cfg.stats.columns).map_err(|e| CliError::input(path.display(), e))?;
    let per_item = summarize(&dataset, Grouping::PerItem, &cfg.stats.bootstrap);
    let pooled = summarize(&dataset, Grouping::Pooled, &cfg.stats.bootstrap);
    let mut comparison = compare_lr_ms(&dataset, Grouping::PerItem, &cfg.stats.stars);
    let pooled_cmp = compare_lr_ms(&dataset, Grouping::Pooled, &cfg.stats.stars);
    comparison.results.extend(pooled_cmp.results);
    comparison.skipped.extend(pooled_cmp.skipped);
    for s in &comparison.skipped {
        log::warn!(
            "skipped {} vs {} ({}): {}",
            s.lr.condition,
            s.ms.condition,
            s.item.as_deref().unwrap_or("pooled"),
            s.reason
        );
    }

    let dir = cfg.analysis_dir();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut outputs: Vec<(String, String)> = vec![
        ("summary_per_item.csv".into(), summary_csv(&per_item)),
        ("summary_pooled.csv".into(), summary_csv(&pooled)),
        ("significance.csv".into(), significance_csv(&comparison)),
    ];
    let all: Vec<StatsSummary> = per_item.iter().chain(&pooled).cloned().collect();
    for (layout, name) in [
        (Layout::Overall, "overall"),
        (Layout::Mixed, "mixed"),
        (Layout::PerItem, "per_item"),
    ] {
        let table = export_figure_data(&all, &comparison.results, layout);
        outputs.push((format!("figure_{name}_points.csv"), table.points_csv()));
        outputs.push((format!("figure_{name}_bars.csv"), table.bars_csv()));
    }
    let mut files = Vec::new();
    for (name, text) in outputs {
        let p = dir.join(name);
        fs::write(&p, text).map_err(io_err(&p))?;
        files.push(p);
    }
    Ok(Analysis {
        per_item,
        pooled,
        comparison,
        files,
    })
}

/// Human-readable table of pooled results.
pub fn format_pooled(analysis: &Analysis) -> String {
    let mut s = format!(
        "{:<8} {:<10} {:>3} {:>7} {:>17}\n",
        "series", "condition", "n", "mean", "95% CI"
    );
    for r in &analysis.pooled {
        let _ = writeln!(
            s,
            "{:<8} {:<10} {:>3} {:>7.2} [{:>6.2}, {:>6.2}]",
            r.series.to_string(),
            r.condition,
            r.n,
            r.mean,
            r.ci_low,
            r.ci_high
        );
    }
    for r in analysis
        .comparison
        .results
        .iter()
        .filter(|r| r.item.is_none())
    {
        let _ = writeln!(
            s,
            "{} vs {} ({}): p = {:.3e} {}",
            r.lr.condition, r.ms.condition, r.lr.series, r.p_value, r.stars
        );
    }
    s
}
