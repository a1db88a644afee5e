use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Engine, InputKind, NormalizationScope, ParamSource, RunConfig};
use super::engines::{davidson_report, qtext_report, ufg_report, DavidsonReport, QTextParamChoice, QTextReport, UfgReport};
use super::ingest::{parse_csv, parse_generations, parse_jsonl, parse_ratings};
use super::{agreement, EngineError, InputError, PipelineError, EXIT_OK, EXIT_PARTIAL};
use crate::dominance::{Comparator, MetricRecord, MetricSet};
use crate::qtext::{QTextModel, TuneConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    #[serde(flatten)]
    pub file: FileDigest,
    pub dataset: Option<String>,
    pub kind: InputKind,
    pub records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    /// Ratings and parameter files.
    pub auxiliary: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub partial: Vec<String>,
}

/// Report files by name, ready to be written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub files: BTreeMap<String, String>,
    /// Reasons the run counts as partial; empty when every engine finished.
    pub partial: Vec<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.partial.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), PipelineError> {
        let err = |p: &Path, e: std::io::Error| PipelineError::Output { path: p.display().to_string(), message: e.to_string() };
        std::fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| err(&p, e))?;
        }
        Ok(())
    }
}

fn digest(path: &str, bytes: &[u8]) -> FileDigest {
    FileDigest { path: path.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() }
}

fn read_bytes(base: &Path, path: &str) -> Result<Vec<u8>, InputError> {
    let full = RunConfig::resolve(base, path);
    std::fs::read(&full).map_err(|e| InputError::Io { path: full.display().to_string(), message: e.to_string() })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

struct Ingested {
    /// Per input: dataset label and records.
    tables: Vec<(String, Vec<MetricRecord>)>,
    digests: Vec<InputDigest>,
}

impl Ingested {
    fn all(&self) -> Vec<MetricRecord> {
        self.tables.iter().flat_map(|(_, r)| r.iter().cloned()).collect()
    }
}

fn ingest_all(cfg: &RunConfig, base: &Path, metrics: &MetricSet) -> Result<Ingested, InputError> {
    let mut tables = Vec::new();
    let mut digests = Vec::new();
    let mut owner: HashMap<(String, String), String> = HashMap::new();
    for spec in &cfg.inputs {
        let bytes = read_bytes(base, spec.path())?;
        let source = spec.path();
        let mut recs = match spec.kind() {
            InputKind::Generations => parse_generations(bytes.as_slice(), source)?,
            InputKind::Metrics if matches!(Path::new(source).extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson")) => {
                parse_jsonl(bytes.as_slice(), metrics, source)?
            }
            InputKind::Metrics => parse_csv(bytes.as_slice(), metrics, source)?,
        };
        if let Some(ds) = spec.dataset() {
            for r in &mut recs {
                r.instance_id = format!("{ds}/{}", r.instance_id);
            }
        }
        for r in &recs {
            let key = (r.instance_id.clone(), r.method_id.clone());
            if let Some(first) = owner.insert(key, source.to_string()) {
                return Err(InputError::DuplicateAcrossInputs {
                    instance: r.instance_id.clone(),
                    method: r.method_id.clone(),
                    first,
                    second: source.to_string(),
                });
            }
        }
        digests.push(InputDigest {
            file: digest(source, &bytes),
            dataset: spec.dataset().map(str::to_string),
            kind: spec.kind(),
            records: recs.len(),
        });
        tables.push((spec.dataset().unwrap_or(source).to_string(), recs));
    }
    Ok(Ingested { tables, digests })
}

fn qtext_choice(cfg: &RunConfig, base: &Path, aux: &mut Vec<FileDigest>) -> Result<QTextParamChoice, InputError> {
    Ok(match &cfg.qtext.params {
        ParamSource::Published => {
            let model = QTextModel::published();
            QTextParamChoice::Fixed { params: model.params, bounds: None, source: model.source }
        }
        ParamSource::File { path } => {
            let bytes = read_bytes(base, path)?;
            aux.push(digest(path, &bytes));
            let text = String::from_utf8(bytes).map_err(|e| InputError::parse(path, 0, e.to_string()))?;
            let model = QTextModel::from_json(&text).map_err(|e| InputError::parse(path, 0, e.to_string()))?;
            QTextParamChoice::Fixed { params: model.params, bounds: model.bounds, source: format!("{path}: {}", model.source) }
        }
        ParamSource::Tune { ratings, granularity, max_trials, restarts, perturbation_scale, anchor } => {
            let bytes = read_bytes(base, ratings)?;
            aux.push(digest(ratings, &bytes));
            QTextParamChoice::Tune {
                ratings: parse_ratings(bytes.as_slice(), ratings)?,
                granularity: *granularity,
                cfg: TuneConfig {
                    max_trials: *max_trials,
                    perturbation_scale: *perturbation_scale,
                    seed: cfg.seed,
                    restarts: *restarts,
                    anchor: *anchor,
                    ..TuneConfig::default()
                },
            }
        }
    })
}

/// Reads every configured input, with dataset prefixes applied, as one
/// record list in input order.
pub fn ingest(cfg: &RunConfig, base: &Path) -> Result<Vec<MetricRecord>, InputError> {
    let metrics = cfg.metric_set()?;
    Ok(ingest_all(cfg, base, &metrics)?.all())
}

fn tag(engine: Engine) -> impl Fn(EngineError) -> PipelineError {
    move |source| PipelineError::Engine { engine: engine.name(), source }
}

/// Runs the configured engines. Relative paths in `cfg` resolve against
/// `base`. Engines share the ingested records read-only and run on separate
/// threads; their reports do not depend on which other engines are enabled.
pub fn run(cfg: &RunConfig, base: &Path) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let metrics = cfg.metric_set()?;
    let ingested = ingest_all(cfg, base, &metrics)?;
    let mut auxiliary = Vec::new();
    let choice = if cfg.engines.contains(&Engine::Qtext) { Some(qtext_choice(cfg, base, &mut auxiliary)?) } else { None };
    let records = ingested.all();
    let cmp = Comparator::new(metrics).with_tolerance(cfg.eq_tolerance);

    let (dav, ufg, qt) = std::thread::scope(|s| {
        let dav = cfg.engines.contains(&Engine::Davidson).then(|| {
            s.spawn(|| davidson_report(&records, &cmp, &cfg.davidson).map_err(tag(Engine::Davidson)))
        });
        let ufg = cfg.engines.contains(&Engine::Ufg).then(|| {
            s.spawn(|| {
                ufg_report(&records, &cmp, cfg.ufg.methods.as_deref(), cfg.ufg.method_limit, cfg.ufg.max_size, cfg.ufg.mode)
                    .map_err(tag(Engine::Ufg))
            })
        });
        let qt = choice.as_ref().map(|choice| {
            s.spawn(|| {
                let groups = match cfg.qtext.normalization {
                    NormalizationScope::Pooled => vec![("pooled".to_string(), records.clone())],
                    NormalizationScope::PerInput => ingested.tables.clone(),
                };
                qtext_report(&groups, choice).map_err(tag(Engine::Qtext))
            })
        });
        (
            dav.map(|h| h.join().expect("engine thread panicked")),
            ufg.map(|h| h.join().expect("engine thread panicked")),
            qt.map(|h| h.join().expect("engine thread panicked")),
        )
    });
    let dav: Option<DavidsonReport> = dav.transpose()?;
    let ufg: Option<UfgReport> = ufg.transpose()?;
    let qt: Option<(QTextReport, _)> = qt.transpose()?;

    let mut files = BTreeMap::new();
    let mut partial = Vec::new();
    if let Some(d) = &dav {
        if !d.table.converged {
            partial.push(format!("davidson fit stopped after {} iterations without converging", d.table.iterations));
        }
        files.insert("davidson.json".to_string(), to_json(d));
        files.insert("davidson.txt".to_string(), d.table.to_text());
    }
    if let Some(u) = &ufg {
        if u.depth.truncated {
            partial.push(format!("ufg enumeration capped at sets of size {}", u.depth.max_size));
        }
        files.insert("ufg.json".to_string(), to_json(u));
    }
    if let Some((q, trace)) = &qt {
        files.insert("qtext.json".to_string(), to_json(q));
        files.insert("qtext.txt".to_string(), q.to_text());
        if let Some(trace) = trace {
            files.insert("qtext_trace.json".to_string(), to_json(trace));
        }
    }
    if let (Some(d), Some((q, _))) = (&dav, &qt) {
        let report = agreement(&d.table, &q.method_means, cfg.agreement.top_k).map_err(tag(Engine::Qtext))?;
        files.insert("agreement.json".to_string(), to_json(&report));
        files.insert("agreement.txt".to_string(), report.to_text());
    }

    let outputs = files.iter().map(|(name, body)| digest(name, body.as_bytes())).collect();
    let manifest = Manifest {
        tool: "decobench".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg.clone(),
        inputs: ingested.digests,
        auxiliary,
        outputs,
        partial: partial.clone(),
    };
    files.insert("manifest.json".to_string(), to_json(&manifest));
    Ok(RunOutput { files, partial })
}
