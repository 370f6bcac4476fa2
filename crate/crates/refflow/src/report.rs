//! Declarative pipeline: config parsing, stage orchestration, the report
//! CSV bundle, and run manifests with content digests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymmetry::{ra_matrix, EntityFilter};
use crate::corpus::{ingest_works, CorpusStore};
use crate::cube::CountsCube;
use crate::error::{Error, Result};
use crate::indicators::{
    indicator_table, scatter_points, self_impact_table, outlet_shares, DenomMode, Granularity,
    IndicatorRow, SchemeSel,
};
use crate::registry::{builtin_schemes, load_periods, load_registry, Registry, SchemeConfig};
use crate::robustness::{count_journals_by_scheme, field_indicators_by_scheme};
use crate::share::{format_share, share_to_f64};
use crate::stats::{distribution_summary, permutation_test, SampleSet};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The seven CSV families of a complete report bundle, with the stage that
/// produces each.
pub const BUNDLE_FILES: [(&str, &str); 7] = [
    ("field_shares.csv", "indicators"),
    ("indicator_distributions.csv", "indicators"),
    ("boxplot_summary.csv", "indicators"),
    ("outlet_shares.csv", "indicators"),
    ("scatter_points.csv", "test-equality"),
    ("heatmap_long.csv", "asymmetry"),
    ("scheme_field_indicators.csv", "robustness"),
];

pub const STAGES: [&str; 7] = [
    "ingest",
    "cube",
    "indicators",
    "asymmetry",
    "test-equality",
    "robustness",
    "report",
];

#[derive(Debug, Clone, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub stages: Vec<String>,
    pub inputs: InputsConfig,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InputsConfig {
    pub registry: PathBuf,
    pub clusters: PathBuf,
    pub periods: PathBuf,
    pub works: Option<PathBuf>,
    pub cited_metadata: Option<PathBuf>,
    /// Pre-built cube snapshot, used when the cube stage is not run.
    pub cube: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OptionsConfig {
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    pub base_scheme: Option<String>,
    #[serde(default)]
    pub journal_only_denominator: bool,
    #[serde(default = "default_permutations")]
    pub n_permutations: u64,
}

fn default_schemes() -> Vec<String> {
    vec!["econlit".to_string()]
}

fn default_permutations() -> u64 {
    199
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig {
            schemes: default_schemes(),
            base_scheme: None,
            journal_only_denominator: false,
            n_permutations: default_permutations(),
        }
    }
}

impl PipelineConfig {
    pub fn base_scheme(&self) -> String {
        self.options
            .base_scheme
            .clone()
            .unwrap_or_else(|| self.options.schemes[0].clone())
    }

    pub fn denom(&self) -> DenomMode {
        if self.options.journal_only_denominator {
            DenomMode::JournalOnly
        } else {
            DenomMode::AllOutlets
        }
    }
}

/// Parse a TOML run description. Paths are resolved relative to the config
/// file's directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config: PipelineConfig = toml::from_str(&raw)
        .map_err(|e| Error::usage(format!("bad config {}: {e}", path.display())))?;
    if let Some(dir) = path.parent() {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        rebase(&mut config.inputs.registry);
        rebase(&mut config.inputs.clusters);
        rebase(&mut config.inputs.periods);
        for opt in [
            &mut config.inputs.works,
            &mut config.inputs.cited_metadata,
            &mut config.inputs.cube,
        ] {
            if let Some(p) = opt {
                rebase(p);
            }
        }
    }
    Ok(config)
}

/// Validate the whole config up front, reporting every violation at once.
pub fn preflight(config: &PipelineConfig) -> Result<()> {
    let mut violations = Vec::new();
    if config.stages.is_empty() {
        violations.push("stages: at least one stage is required".to_string());
    }
    for stage in &config.stages {
        if !STAGES.contains(&stage.as_str()) {
            violations.push(format!("stages: unknown stage '{stage}'"));
        }
    }
    if config.options.schemes.is_empty() {
        violations.push("options.schemes: at least one scheme is required".to_string());
    }
    if config.options.n_permutations == 0 {
        violations.push("options.n_permutations: must be at least 1".to_string());
    }
    let mut check = |label: &str, path: &Path| {
        if !path.exists() {
            violations.push(format!("inputs.{label}: no such file {}", path.display()));
        }
    };
    check("registry", &config.inputs.registry);
    check("clusters", &config.inputs.clusters);
    check("periods", &config.inputs.periods);
    for (label, path) in [
        ("works", &config.inputs.works),
        ("cited_metadata", &config.inputs.cited_metadata),
        ("cube", &config.inputs.cube),
    ] {
        if let Some(p) = path {
            check(label, p);
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "config violations:\n  - {}",
            violations.join("\n  - ")
        )))
    }
}

/// Stage sub-seed: the run seed mixed with a stable hash of the stage name.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(stage.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

fn sha256_file(path: &Path) -> Result<String> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&data)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub status: String,
    pub stages_completed: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_at: u64,
    pub finished_at: u64,
}

/// Held for the duration of a run; one pipeline per working directory.
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(out_dir: &Path) -> Result<LockGuard> {
        let path = out_dir.join(".refflow.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "pid={}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::usage(format!(
                "another pipeline holds {} (remove it if stale)",
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

struct StageContext {
    registry: Registry,
    store: Option<CorpusStore>,
    cube: Option<CountsCube>,
    outputs: Vec<PathBuf>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn scheme_configs(scheme_ids: &[String]) -> Vec<SchemeConfig> {
    let builtin = builtin_schemes();
    scheme_ids
        .iter()
        .map(|id| {
            builtin
                .iter()
                .find(|s| s.scheme_id == *id)
                .cloned()
                .unwrap_or_else(|| SchemeConfig::column(id))
        })
        .collect()
}

/// Execute the configured stages in order. Partial failures leave completed
/// outputs intact and a manifest marked `partial`.
pub fn run_pipeline(
    config: &PipelineConfig,
    config_path: &Path,
    out_dir: &Path,
    command: &str,
) -> Result<RunManifest> {
    preflight(config)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let _lock = LockGuard::acquire(out_dir)?;
    let started_at = unix_now();

    let registry = load_registry(
        &config.inputs.registry,
        &config.inputs.clusters,
        &scheme_configs(&config.options.schemes),
    )?;
    let mut ctx = StageContext {
        registry,
        store: None,
        cube: None,
        outputs: Vec::new(),
    };

    let mut completed = Vec::new();
    let mut failure = None;
    for stage in &config.stages {
        match run_stage(stage, config, out_dir, &mut ctx) {
            Ok(()) => completed.push(stage.clone()),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    let mut inputs = BTreeMap::new();
    let mut named: Vec<(&str, &Path)> = vec![
        ("registry", &config.inputs.registry),
        ("clusters", &config.inputs.clusters),
        ("periods", &config.inputs.periods),
    ];
    for (label, path) in [
        ("works", &config.inputs.works),
        ("cited_metadata", &config.inputs.cited_metadata),
        ("cube", &config.inputs.cube),
    ] {
        if let Some(p) = path {
            named.push((label, p));
        }
    }
    for (label, path) in named {
        if path.exists() {
            inputs.insert(label.to_string(), sha256_file(path)?);
        }
    }
    let mut outputs = BTreeMap::new();
    for path in &ctx.outputs {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        outputs.insert(name, sha256_file(path)?);
    }

    let manifest = RunManifest {
        engine_version: ENGINE_VERSION.to_string(),
        command: command.to_string(),
        config_digest: sha256_file(config_path)?,
        seed: config.seed,
        status: if failure.is_some() { "partial" } else { "complete" }.to_string(),
        stages_completed: completed,
        inputs,
        outputs,
        started_at,
        finished_at: unix_now(),
    };
    let manifest_path = out_dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(|e| Error::io(&manifest_path, e))?;

    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn run_stage(
    stage: &str,
    config: &PipelineConfig,
    out_dir: &Path,
    ctx: &mut StageContext,
) -> Result<()> {
    match stage {
        "ingest" => stage_ingest(config, out_dir, ctx),
        "cube" => stage_cube(config, out_dir, ctx),
        "indicators" => stage_indicators(config, out_dir, ctx),
        "asymmetry" => stage_asymmetry(config, out_dir, ctx),
        "test-equality" => stage_test_equality(config, out_dir, ctx),
        "robustness" => stage_robustness(config, out_dir, ctx),
        "report" => stage_report(out_dir, ctx),
        other => Err(Error::usage(format!("unknown stage '{other}'"))),
    }
}

fn stage_ingest(config: &PipelineConfig, out_dir: &Path, ctx: &mut StageContext) -> Result<()> {
    let works = config
        .inputs
        .works
        .as_ref()
        .ok_or_else(|| Error::usage("ingest stage needs inputs.works"))?;
    let periods = load_periods(&config.inputs.periods)?;
    let file = fs::File::open(works).map_err(|e| Error::io(works, e))?;
    let mut store = ingest_works(BufReader::new(file), &ctx.registry, &periods)?;
    if let Some(meta) = &config.inputs.cited_metadata {
        let file = fs::File::open(meta).map_err(|e| Error::io(meta, e))?;
        store.load_cited_metadata(BufReader::new(file))?;
    }
    let report = serde_json::json!({
        "stored": store.report.stored,
        "malformed": store.report.malformed,
        "missing_journal_id": store.report.missing_journal_id,
        "missing_year": store.report.missing_year,
        "outside_windows": store.report.outside_windows,
        "unknown_journal": store.report.unknown_journal,
        "works_per_period": store.works_per_period(),
        "refs_per_period": store.refs_per_period(),
    });
    let path = out_dir.join("ingest_report.json");
    fs::write(&path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Error::io(&path, e))?;
    ctx.outputs.push(path);
    ctx.store = Some(store);
    Ok(())
}

fn stage_cube(_config: &PipelineConfig, out_dir: &Path, ctx: &mut StageContext) -> Result<()> {
    let store = ctx
        .store
        .as_ref()
        .ok_or_else(|| Error::usage("cube stage needs the ingest stage first"))?;
    let cube = CountsCube::build(store, &ctx.registry);
    let path = out_dir.join("cube.snapshot");
    let mut buf = Vec::new();
    cube.write_snapshot(&mut buf)?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    ctx.outputs.push(path);
    ctx.cube = Some(cube);
    Ok(())
}

fn ensure_cube(config: &PipelineConfig, ctx: &mut StageContext) -> Result<()> {
    if ctx.cube.is_none() {
        let path = config
            .inputs
            .cube
            .as_ref()
            .ok_or_else(|| Error::usage("no cube available: run the cube stage or set inputs.cube"))?;
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        ctx.cube = Some(CountsCube::read_snapshot(BufReader::new(file))?);
    }
    Ok(())
}

fn open_csv(path: &Path, metadata: &[(String, String)]) -> Result<fs::File> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# engine_version={ENGINE_VERSION}").map_err(|e| Error::io(path, e))?;
    for (key, value) in metadata {
        writeln!(file, "# {key}={value}").map_err(|e| Error::io(path, e))?;
    }
    Ok(file)
}

fn write_indicator_rows(w: &mut impl Write, rows: &[IndicatorRow]) -> std::io::Result<()> {
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.scheme,
            row.period_id,
            row.granularity.as_str(),
            row.scope_id,
            row.itype.code(),
            row.s,
            row.r,
            format_share(row.share)
        )?;
    }
    Ok(())
}

fn stage_indicators(config: &PipelineConfig, out_dir: &Path, ctx: &mut StageContext) -> Result<()> {
    let denom = config.denom();
    let base = config.base_scheme();
    ensure_cube(config, ctx)?;
    let cube = ctx.cube.as_ref().unwrap();
    let sel = SchemeSel::same(&base);
    let mut outputs = Vec::new();
    let meta = vec![
        ("scheme".to_string(), base.clone()),
        ("denominator".to_string(), denom.as_str().to_string()),
    ];
    let err_for = |path: &Path| {
        let p = path.to_path_buf();
        move |e: std::io::Error| Error::io(&p, e)
    };

    // field shares (table-4 family)
    let path = out_dir.join("field_shares.csv");
    let mut f = open_csv(&path, &meta)?;
    writeln!(f, "scheme,period,granularity,scope,type,S,R,I").map_err(err_for(&path))?;
    for period in &cube.period_ids {
        let (rows, _) = indicator_table(cube, &sel, denom, Granularity::Field, period)?;
        write_indicator_rows(&mut f, &rows).map_err(err_for(&path))?;
    }
    outputs.push(path);

    // per-cluster and per-journal distributions, with self-impact
    let path = out_dir.join("indicator_distributions.csv");
    let mut f = open_csv(&path, &meta)?;
    writeln!(f, "scheme,period,granularity,scope,type,S,R,I").map_err(err_for(&path))?;
    let mut grouped: BTreeMap<(String, String, u8), Vec<f64>> = BTreeMap::new();
    for period in &cube.period_ids {
        for granularity in [Granularity::Cluster, Granularity::Journal] {
            let (rows, _) = indicator_table(cube, &sel, denom, granularity, period)?;
            write_indicator_rows(&mut f, &rows).map_err(err_for(&path))?;
            for row in &rows {
                grouped
                    .entry((
                        period.clone(),
                        granularity.as_str().to_string(),
                        row.itype.code(),
                    ))
                    .or_default()
                    .push(share_to_f64(row.share));
            }
            let (si_rows, _) = self_impact_table(cube, &sel, granularity, period)?;
            for row in &si_rows {
                writeln!(
                    f,
                    "{},{},{},{},SI,{},{},{}",
                    row.scheme,
                    row.period_id,
                    row.granularity.as_str(),
                    row.scope_id,
                    row.sc,
                    row.c,
                    format_share(row.si)
                )
                .map_err(err_for(&path))?;
            }
        }
    }
    outputs.push(path);

    // boxplot summaries of the distributions
    let path = out_dir.join("boxplot_summary.csv");
    let mut meta_box = meta.clone();
    meta_box.push(("quantile_rule".to_string(), "type-7".to_string()));
    meta_box.push(("whiskers".to_string(), "1.5-iqr".to_string()));
    let mut f = open_csv(&path, &meta_box)?;
    writeln!(
        f,
        "period,granularity,type,n,median,q1,q3,lower_whisker,upper_whisker,n_outliers"
    )
    .map_err(err_for(&path))?;
    for ((period, granularity, code), values) in &grouped {
        let n = values.len();
        let summary = distribution_summary(&[(format!("{period}/{granularity}/{code}"), values.clone())])?;
        let s = &summary[0];
        writeln!(
            f,
            "{period},{granularity},{code},{n},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            s.median,
            s.q1,
            s.q3,
            s.lower_whisker,
            s.upper_whisker,
            s.outliers.len()
        )
        .map_err(err_for(&path))?;
    }
    outputs.push(path);

    // outlet-type shares (table-3 family)
    let path = out_dir.join("outlet_shares.csv");
    let mut f = open_csv(&path, &[])?;
    writeln!(f, "period,outlet_type,citations,share").map_err(err_for(&path))?;
    for period in &cube.period_ids {
        for row in outlet_shares(cube, period) {
            writeln!(
                f,
                "{},{},{},{}",
                row.period_id,
                row.outlet_type.as_str(),
                row.citations,
                format_share(row.share)
            )
            .map_err(err_for(&path))?;
        }
    }
    outputs.push(path);
    ctx.outputs.extend(outputs);
    Ok(())
}

fn stage_asymmetry(config: &PipelineConfig, out_dir: &Path, ctx: &mut StageContext) -> Result<()> {
    let denom = DenomMode::JournalOnly;
    let base = config.base_scheme();
    ensure_cube(config, ctx)?;
    let cube = ctx.cube.as_ref().unwrap();
    let sel = SchemeSel::same(&base);
    let path = out_dir.join("heatmap_long.csv");
    let mut f = open_csv(
        &path,
        &[
            ("scheme".to_string(), base.clone()),
            ("denominator".to_string(), denom.as_str().to_string()),
            (
                "sign_convention".to_string(),
                "negative-means-row-entity-is-net-exporter-to-column-entity".to_string(),
            ),
        ],
    )?;
    writeln!(f, "period,granularity,row_entity,col_entity,flow_ij,flow_ji,ra")
        .map_err(|e| Error::io(&path, e))?;
    for period in &cube.period_ids {
        let matrix = ra_matrix(
            cube,
            &sel,
            denom,
            Granularity::Cluster,
            &EntityFilter::AllClusters,
            period,
        )?;
        let n = matrix.entity_ids.len();
        for i in 0..n {
            for j in 0..n {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{}",
                    period,
                    matrix.granularity.as_str(),
                    matrix.entity_ids[i],
                    matrix.entity_ids[j],
                    matrix.flows[i][j],
                    matrix.flows[j][i],
                    format_share(matrix.ra[i][j])
                )
                .map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    ctx.outputs.push(path);
    Ok(())
}

fn stage_test_equality(
    config: &PipelineConfig,
    out_dir: &Path,
    ctx: &mut StageContext,
) -> Result<()> {
    let denom = config.denom();
    let base = config.base_scheme();
    let n_permutations = config.options.n_permutations;
    let seed = stage_seed(config.seed, "test-equality");
    ensure_cube(config, ctx)?;
    let cube = ctx.cube.as_ref().unwrap();
    let sel = SchemeSel::same(&base);

    let mut all_points: Vec<(String, String, crate::indicators::ScatterPoint)> = Vec::new();
    let mut test_lines = Vec::new();
    for granularity in [Granularity::Cluster, Granularity::Journal] {
        let mut groups: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
        for period in &cube.period_ids {
            let (points, _) = scatter_points(cube, &sel, denom, granularity, period)?;
            let coords: Vec<Vec<f64>> = points
                .iter()
                .map(|p| vec![share_to_f64(p.x), share_to_f64(p.y)])
                .collect();
            if !coords.is_empty() {
                groups.push((period.clone(), coords));
            }
            for p in points {
                all_points.push((period.clone(), granularity.as_str().to_string(), p));
            }
        }
        let label = granularity.as_str();
        if groups.len() < 2 {
            test_lines.push(format!("test_{label}=skipped(insufficient-groups)"));
            continue;
        }
        let samples = SampleSet::new(groups)?;
        let result = permutation_test(&samples, n_permutations, seed)?;
        test_lines.push(format!(
            "test_{label}=E:{:.6},p:{:.6},n_permutations:{},seed:{}",
            result.e, result.p_value, result.n_permutations, result.seed
        ));
    }

    let path = out_dir.join("scatter_points.csv");
    let mut meta = vec![
        ("scheme".to_string(), base.clone()),
        ("denominator".to_string(), denom.as_str().to_string()),
    ];
    for line in &test_lines {
        let (k, v) = line.split_once('=').unwrap();
        meta.push((k.to_string(), v.to_string()));
    }
    let mut f = open_csv(&path, &meta)?;
    writeln!(f, "scope,period,granularity,x,y").map_err(|e| Error::io(&path, e))?;
    for (period, granularity, p) in &all_points {
        writeln!(
            f,
            "{},{},{},{},{}",
            p.scope_id,
            period,
            granularity,
            format_share(p.x),
            format_share(p.y)
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    ctx.outputs.push(path);
    Ok(())
}

fn stage_robustness(config: &PipelineConfig, out_dir: &Path, ctx: &mut StageContext) -> Result<()> {
    let denom = config.denom();
    let schemes = config.options.schemes.clone();

    // scheme journal counts need the raw store (works + references)
    if let Some(store) = &ctx.store {
        let path = out_dir.join("scheme_counts.csv");
        let mut f = open_csv(&path, &[("schemes".to_string(), schemes.join("|"))])?;
        writeln!(f, "scheme,period,citing_journals,cited_journals")
            .map_err(|e| Error::io(&path, e))?;
        let period_ids: Vec<String> = store.periods.iter().map(|p| p.period_id.clone()).collect();
        for period in &period_ids {
            for row in count_journals_by_scheme(&ctx.registry, store, period, &schemes)? {
                writeln!(
                    f,
                    "{},{},{},{}",
                    row.scheme, row.period_id, row.citing_count, row.cited_count
                )
                .map_err(|e| Error::io(&path, e))?;
            }
        }
        ctx.outputs.push(path);
    }

    ensure_cube(config, ctx)?;
    let cube = ctx.cube.as_ref().unwrap();
    let path = out_dir.join("scheme_field_indicators.csv");
    let mut f = open_csv(
        &path,
        &[
            ("schemes".to_string(), schemes.join("|")),
            ("denominator".to_string(), denom.as_str().to_string()),
        ],
    )?;
    writeln!(f, "scheme,period,granularity,scope,type,S,R,I").map_err(|e| Error::io(&path, e))?;
    for period in &cube.period_ids {
        for scheme in &schemes {
            let rows = field_indicators_by_scheme(cube, scheme, period, denom, None)?;
            write_indicator_rows(&mut f, &rows).map_err(|e| Error::io(&path, e))?;
        }
    }
    ctx.outputs.push(path);
    Ok(())
}

fn stage_report(out_dir: &Path, _ctx: &mut StageContext) -> Result<()> {
    verify_bundle(out_dir)
}

/// Check the bundle is complete, naming the stage that produces anything
/// missing.
pub fn verify_bundle(out_dir: &Path) -> Result<()> {
    for (file, stage) in BUNDLE_FILES {
        if !out_dir.join(file).exists() {
            return Err(Error::data(format!(
                "missing report output '{file}': run the {stage} stage"
            )));
        }
    }
    Ok(())
}
