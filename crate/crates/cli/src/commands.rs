use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use cocoft_core::coco::{self, CocoError, Dataset};
use cocoft_core::config::{parse_config, ConfigError, SubsetConfig};
use cocoft_core::eval::{self, EvalError};
use cocoft_core::prototxt::{self, PrototxtError, RewriteCounts};
use cocoft_core::subset::{self, CategoryMap, SubsetError};

use crate::Format;

/// Command failure with its exit-code class: usage 1, data/integrity 2,
/// empty result 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Empty(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Empty(m) => m,
        }
    }
}

impl From<CocoError> for CliError {
    fn from(e: CocoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SubsetError> for CliError {
    fn from(e: SubsetError) -> Self {
        match e {
            SubsetError::EmptySubset | SubsetError::NotEnoughEligible { .. } => {
                CliError::Empty(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

fn prototxt_error(path: &Path, e: PrototxtError) -> CliError {
    let message = format!("{}: {e}", path.display());
    match e {
        PrototxtError::NoRewriteTargets => CliError::Empty(message),
        _ => CliError::Data(message),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_instances(path: &Path) -> Result<Dataset, CliError> {
    let parsed = coco::parse_dataset(&read_bytes(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.dataset)
}

fn read_config(path: &Path) -> Result<SubsetConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn category_map(d: &Dataset, cfg: &SubsetConfig) -> Result<CategoryMap, CliError> {
    Ok(subset::make_category_map(d, &cfg.cat_ids)?)
}

pub fn list_categories(instances: &Path, format: Format) -> Result<(), CliError> {
    let d = read_instances(instances)?;
    let cats = coco::list_categories(&d);
    match format {
        Format::Tsv => {
            for c in &cats {
                println!("{}\t{}\t{}", c.id, c.name, c.supercategory);
            }
        }
        Format::Json => {
            let rows: Vec<_> = cats
                .iter()
                .map(|c| json!({"id": c.id, "name": c.name, "supercategory": c.supercategory}))
                .collect();
            println!("{}", serde_json::Value::Array(rows));
        }
    }
    Ok(())
}

pub fn filter(instances: &Path, cfg_path: &Path, out: &Path) -> Result<(), CliError> {
    let d = read_instances(instances)?;
    let cfg = read_config(cfg_path)?;
    let map = category_map(&d, &cfg)?;
    let (filtered, report) = subset::filter_dataset(&d, &map)?;

    fs::create_dir_all(out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    write_bytes(&out.join("filtered.json"), &coco::serialize_dataset(&filtered))?;
    write_bytes(&out.join("category_map.json"), map.to_json().as_bytes())?;
    println!("{}", serde_json::to_string(&report).expect("report JSON"));
    Ok(())
}

struct RewriteJob {
    source: PathBuf,
    document: prototxt::Document,
    counts: RewriteCounts,
}

fn rewrite_one(path: &Path, k: usize, verify: bool) -> Result<RewriteJob, CliError> {
    let doc = prototxt::parse_prototxt_bytes(&read_bytes(path)?)
        .map_err(|e| prototxt_error(path, e))?;
    let plan = prototxt::plan_rewrites(&doc, k);
    let (rewritten, counts) =
        prototxt::apply_rewrites(&doc, &plan).map_err(|e| prototxt_error(path, e))?;
    if verify {
        prototxt::verify_consistency(&rewritten).map_err(|e| prototxt_error(path, e))?;
    }
    Ok(RewriteJob {
        source: path.to_path_buf(),
        document: rewritten,
        counts,
    })
}

fn counts_json(counts: &RewriteCounts) -> serde_json::Value {
    json!({
        "cls_score": counts.cls_score,
        "bbox_pred": counts.bbox_pred,
        "param_str": counts.param_str,
    })
}

pub fn rewrite(
    prototxts: &[PathBuf],
    cfg_path: &Path,
    out: Option<&Path>,
    in_place: bool,
    verify: bool,
) -> Result<(), CliError> {
    if out.is_some() == in_place {
        return Err(CliError::Usage(
            "specify exactly one of --out DIR or --in-place".into(),
        ));
    }
    let cfg = read_config(cfg_path)?;
    let k = cfg.cat_ids.len();

    // Plan and rewrite everything before touching any file, so a bad input
    // cannot leave a half-written set behind.
    let jobs: Vec<RewriteJob> = prototxts
        .iter()
        .map(|p| rewrite_one(p, k, verify))
        .collect::<Result<_, _>>()?;

    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut files = Vec::new();
    for job in &jobs {
        let target = match out {
            Some(dir) => dir.join(job.source.file_name().expect("input file name")),
            None => job.source.clone(),
        };
        write_bytes(&target, prototxt::serialize_prototxt(&job.document).as_bytes())?;
        files.push(json!({
            "path": target.display().to_string(),
            "applied": counts_json(&job.counts),
            "total": job.counts.total(),
        }));
    }
    println!(
        "{}",
        json!({"num_classes": k + 1, "verified": verify, "files": files})
    );
    Ok(())
}

pub fn select_demo(
    instances: &Path,
    cfg_path: &Path,
    count: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let d = read_instances(instances)?;
    let cfg = read_config(cfg_path)?;
    let map = category_map(&d, &cfg)?;
    let n = count.unwrap_or(cfg.demo_count);
    if n == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let picked = subset::select_demo_images(&d, &map, n, seed.unwrap_or(cfg.seed))?;
    let names: Vec<&str> = picked.iter().map(|img| img.file_name.as_str()).collect();
    println!("{}", serde_json::to_string(&names).expect("names JSON"));
    Ok(())
}

pub fn evaluate(instances: &Path, detections: &Path, cfg_path: &Path) -> Result<(), CliError> {
    let d = read_instances(instances)?;
    let dets = eval::parse_detections(&read_bytes(detections)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", detections.display())))?;
    let cfg = read_config(cfg_path)?;
    let map = category_map(&d, &cfg)?;
    let report = eval::evaluate(&d, &dets, &map)?;
    eprint!("{}", report.summary_table());
    print!("{}", report.to_json());
    Ok(())
}

pub fn validate(instances: &Path) -> Result<(), CliError> {
    match coco::parse_dataset(&read_bytes(instances)?) {
        Ok(parsed) => {
            let warnings: Vec<String> = parsed.warnings.iter().map(|w| w.to_string()).collect();
            println!(
                "{}",
                json!({
                    "valid": true,
                    "findings": [],
                    "warnings": warnings,
                    "warning_count": parsed.warnings.len(),
                })
            );
            Ok(())
        }
        Err(e) => {
            println!(
                "{}",
                json!({
                    "valid": false,
                    "findings": [e.to_string()],
                    "warnings": [],
                    "warning_count": 0,
                })
            );
            Err(CliError::Data(format!("{}: {e}", instances.display())))
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn pipeline(
    instances: &Path,
    cfg_path: &Path,
    out: &Path,
    prototxts: &[PathBuf],
    count: Option<usize>,
    seed: Option<u64>,
    verify: bool,
) -> Result<(), CliError> {
    let d = read_instances(instances)?;
    let cfg = read_config(cfg_path)?;
    let map = category_map(&d, &cfg)?;
    let (filtered, report) = subset::filter_dataset(&d, &map)?;

    fs::create_dir_all(out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    write_bytes(&out.join("filtered.json"), &coco::serialize_dataset(&filtered))?;
    write_bytes(&out.join("category_map.json"), map.to_json().as_bytes())?;

    let k = cfg.cat_ids.len();
    let jobs: Vec<RewriteJob> = prototxts
        .iter()
        .map(|p| rewrite_one(p, k, verify))
        .collect::<Result<_, _>>()?;
    let mut rewrites = Vec::new();
    for job in &jobs {
        let target = out.join(job.source.file_name().expect("input file name"));
        write_bytes(&target, prototxt::serialize_prototxt(&job.document).as_bytes())?;
        rewrites.push(json!({
            "path": target.display().to_string(),
            "applied": counts_json(&job.counts),
            "total": job.counts.total(),
        }));
    }

    let n = count.unwrap_or(cfg.demo_count);
    if n == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let picked = subset::select_demo_images(&d, &map, n, seed.unwrap_or(cfg.seed))?;
    let names: Vec<&str> = picked.iter().map(|img| img.file_name.as_str()).collect();
    let mut demo_json = serde_json::to_string_pretty(&names).expect("names JSON");
    demo_json.push('\n');
    write_bytes(&out.join("demo_images.json"), demo_json.as_bytes())?;

    println!(
        "{}",
        json!({"filter": report, "rewrites": rewrites, "demo_images": names})
    );
    Ok(())
}
