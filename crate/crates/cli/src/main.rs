use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use decobench::davidson::ZeroCountPolicy;
use decobench::dominance::{Comparator, DominanceSummary};
use decobench::pipeline::{
    agreement, ingest, instance_posets, run, ufg_roster, write_csv, DavidsonReport, Engine, EngineError, InputError,
    InputKind, InputSpec, NormalizationScope, ParamSource, PipelineError, QTextReport, RunConfig, RunOutput, EXIT_OK,
    EXIT_PARTIAL,
};
use decobench::qtext::{Anchor, Granularity};
use decobench::ufg::DepthMode;

#[derive(Parser)]
#[command(name = "decobench", version, about = "Rank text decoding methods from per-instance metric tables")]
struct Cli {
    /// Run configuration (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write every report and the manifest here instead of printing the main report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct Inputs {
    /// Input tables; replace the inputs listed in --config.
    inputs: Vec<PathBuf>,
    /// Inputs hold tokens and log-probabilities rather than metrics.
    #[arg(long)]
    generations: bool,
    /// Metric values closer than this count as equal.
    #[arg(long)]
    eq_tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs and print them as one canonical metric table.
    Ingest(Inputs),
    /// Pairwise dominance tallies.
    Dominance {
        #[command(flatten)]
        inputs: Inputs,
        /// Share of instances a method must dominate on to be counted.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Davidson worth parameters.
    Bt {
        #[command(flatten)]
        inputs: Inputs,
        /// Add half a count to every cell instead of rejecting separated data.
        #[arg(long)]
        haldane: bool,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// ufg depth of the per-instance partial orders.
    Ufg {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Also write each instance's partial order to this JSON file.
        #[arg(long)]
        dump_posets: Option<PathBuf>,
    },
    #[command(subcommand)]
    Qtext(Qtext),
    /// Compare a Davidson ranking with mean Q*Text scores.
    Agreement {
        /// davidson.json from a previous run.
        #[arg(long)]
        davidson: PathBuf,
        /// qtext.json from a previous run.
        #[arg(long)]
        qtext: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Run every configured engine.
    Report(Inputs),
}

#[derive(Subcommand)]
enum Qtext {
    /// Score records with fixed parameters.
    Score {
        #[command(flatten)]
        inputs: Inputs,
        /// Parameter file; the shipped parameters are used otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Normalize each input separately.
        #[arg(long)]
        per_input: bool,
    },
    /// Tune parameters against human ratings, then score.
    Tune {
        #[command(flatten)]
        inputs: Inputs,
        /// CSV with columns key,rating.
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, value_enum, default_value_t = Gran::Record)]
        granularity: Gran,
        #[arg(long, default_value_t = 10_000)]
        max_trials: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0.1)]
        perturbation_scale: f64,
        /// Perturb from the origin every trial instead of from the best point.
        #[arg(long)]
        from_origin: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Weighted,
    UniformCount,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gran {
    Record,
    Method,
}

fn absolute(p: &Path) -> String {
    let full = if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir().unwrap_or_default().join(p) };
    full.display().to_string()
}

struct Ctx {
    cfg: RunConfig,
    base: PathBuf,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Ctx, PipelineError> {
        let (mut cfg, base) = match &cli.config {
            Some(path) => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (RunConfig::load(path)?, base)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        Ok(Ctx { cfg, base, out: cli.out.clone(), format: cli.format })
    }

    fn apply(&mut self, inputs: &Inputs, engines: &[Engine]) {
        if !inputs.inputs.is_empty() {
            let kind = if inputs.generations { InputKind::Generations } else { InputKind::Metrics };
            self.cfg.inputs = inputs
                .inputs
                .iter()
                .map(|p| InputSpec::Table { path: absolute(p), dataset: None, kind })
                .collect();
        }
        if let Some(t) = inputs.eq_tolerance {
            self.cfg.eq_tolerance = t;
        }
        if !engines.is_empty() {
            self.cfg.engines = engines.iter().copied().collect();
        }
    }

    /// Prints the main report of `json`/`text`, or writes every file to `--out`.
    fn emit(&self, output: &RunOutput, json: &str, text: Option<&str>) -> Result<i32, PipelineError> {
        match &self.out {
            Some(dir) => output.write_to(dir)?,
            None => {
                let name = match (self.format, text) {
                    (Format::Table, Some(t)) => t,
                    _ => json,
                };
                print!("{}", output.files[name]);
            }
        }
        for note in &output.partial {
            eprintln!("partial: {note}");
        }
        Ok(output.exit_code())
    }

    fn emit_one(&self, name: &str, json: String, text: String) -> Result<i32, PipelineError> {
        let body = if self.format == Format::Table { text } else { json };
        match &self.out {
            Some(dir) => {
                let mut files = BTreeMap::new();
                files.insert(name.to_string(), body);
                RunOutput { files, partial: Vec::new() }.write_to(dir)?;
            }
            None => print!("{body}"),
        }
        Ok(EXIT_OK)
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io { path: shown.clone(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Input(InputError::Parse { file: shown, line: 0, message: e.to_string() }))
}

fn engine_err(engine: &'static str) -> impl Fn(EngineError) -> PipelineError {
    move |source| PipelineError::Engine { engine, source }
}

fn execute(cli: Cli) -> Result<i32, PipelineError> {
    let mut ctx = Ctx::new(&cli)?;
    match cli.command {
        Command::Ingest(inputs) => {
            ctx.apply(&inputs, &[]);
            ctx.cfg.validate()?;
            let records = ingest(&ctx.cfg, &ctx.base)?;
            let metrics = ctx.cfg.metric_set()?;
            let mut buf = Vec::new();
            write_csv(&records, &metrics, &mut buf)
                .map_err(|e| PipelineError::Output { path: "records.csv".into(), message: e.to_string() })?;
            let csv = String::from_utf8(buf).expect("csv output is UTF-8");
            let json = to_json(&records);
            match ctx.format {
                Format::Json => ctx.emit_one("records.json", json, csv),
                Format::Table => ctx.emit_one("records.csv", json, csv),
            }
        }
        Command::Dominance { inputs, threshold } => {
            ctx.apply(&inputs, &[]);
            ctx.cfg.validate()?;
            let records = ingest(&ctx.cfg, &ctx.base)?;
            let cmp = Comparator::new(ctx.cfg.metric_set()?).with_tolerance(ctx.cfg.eq_tolerance);
            let tallies = cmp.tally(&records).map_err(|e| engine_err("dominance")(e.into()))?;
            let summary = DominanceSummary::from_tallies(&tallies, threshold);
            let mut text = format!("{:<24} {:<24} {:>8} {:>8} {:>8}\n", "method i", "method j", "i wins", "j wins", "ties");
            for t in &tallies {
                text.push_str(&format!("{:<24} {:<24} {:>8} {:>8} {:>8}\n", t.method_i, t.method_j, t.wins_i, t.wins_j, t.ties));
            }
            let json = to_json(&serde_json::json!({ "tallies": tallies, "summary": summary }));
            ctx.emit_one("dominance.json", json, text)
        }
        Command::Bt { inputs, haldane, max_iterations } => {
            ctx.apply(&inputs, &[Engine::Davidson]);
            if haldane {
                ctx.cfg.davidson.zero_counts = ZeroCountPolicy::Haldane;
            }
            if let Some(n) = max_iterations {
                ctx.cfg.davidson.max_iterations = n;
            }
            let out = run(&ctx.cfg, &ctx.base)?;
            ctx.emit(&out, "davidson.json", Some("davidson.txt"))
        }
        Command::Ufg { inputs, methods, max_size, mode, dump_posets } => {
            ctx.apply(&inputs, &[Engine::Ufg]);
            if methods.is_some() {
                ctx.cfg.ufg.methods = methods;
            }
            if let Some(k) = max_size {
                ctx.cfg.ufg.max_size = k;
            }
            match mode {
                Some(Mode::Weighted) => ctx.cfg.ufg.mode = DepthMode::Weighted,
                Some(Mode::UniformCount) => ctx.cfg.ufg.mode = DepthMode::UniformCount,
                None => {}
            }
            let out = run(&ctx.cfg, &ctx.base)?;
            if let Some(path) = dump_posets {
                let records = ingest(&ctx.cfg, &ctx.base)?;
                let cmp = Comparator::new(ctx.cfg.metric_set()?).with_tolerance(ctx.cfg.eq_tolerance);
                let roster = ufg_roster(&records, ctx.cfg.ufg.methods.as_deref(), ctx.cfg.ufg.method_limit)
                    .map_err(engine_err("ufg"))?;
                let (posets, _) = instance_posets(&records, &roster, &cmp).map_err(engine_err("ufg"))?;
                let dump: Vec<_> =
                    posets.iter().map(|(inst, p)| serde_json::json!({ "instance_id": inst, "poset": p })).collect();
                std::fs::write(&path, to_json(&dump))
                    .map_err(|e| PipelineError::Output { path: path.display().to_string(), message: e.to_string() })?;
            }
            if ctx.out.is_none() && ctx.format == Format::Table {
                let report: decobench::pipeline::UfgReport = serde_json::from_str(&out.files["ufg.json"]).expect("own report");
                print!("{}", report.to_text());
                for note in &out.partial {
                    eprintln!("partial: {note}");
                }
                return Ok(out.exit_code());
            }
            ctx.emit(&out, "ufg.json", None)
        }
        Command::Qtext(Qtext::Score { inputs, params, per_input }) => {
            ctx.apply(&inputs, &[Engine::Qtext]);
            if let Some(p) = params {
                ctx.cfg.qtext.params = ParamSource::File { path: absolute(&p) };
            }
            if per_input {
                ctx.cfg.qtext.normalization = NormalizationScope::PerInput;
                label_inputs(&mut ctx.cfg);
            }
            let out = run(&ctx.cfg, &ctx.base)?;
            ctx.emit(&out, "qtext.json", Some("qtext.txt"))
        }
        Command::Qtext(Qtext::Tune {
            inputs,
            ratings,
            granularity,
            max_trials,
            restarts,
            perturbation_scale,
            from_origin,
        }) => {
            ctx.apply(&inputs, &[Engine::Qtext]);
            ctx.cfg.qtext.params = ParamSource::Tune {
                ratings: absolute(&ratings),
                granularity: match granularity {
                    Gran::Record => Granularity::Record,
                    Gran::Method => Granularity::Method,
                },
                max_trials,
                restarts,
                perturbation_scale,
                anchor: if from_origin { Anchor::Origin } else { Anchor::Incumbent },
            };
            let out = run(&ctx.cfg, &ctx.base)?;
            ctx.emit(&out, "qtext.json", Some("qtext.txt"))
        }
        Command::Agreement { davidson, qtext, top_k } => {
            let d: DavidsonReport = read_json(&davidson)?;
            let q: QTextReport = read_json(&qtext)?;
            let k = top_k.unwrap_or(ctx.cfg.agreement.top_k);
            let report = agreement(&d.table, &q.method_means, k).map_err(engine_err("agreement"))?;
            ctx.emit_one("agreement.json", to_json(&report), report.to_text())
        }
        Command::Report(inputs) => {
            ctx.apply(&inputs, &[]);
            let out = run(&ctx.cfg, &ctx.base)?;
            let dir = ctx.out.clone().unwrap_or_else(|| RunConfig::resolve(&ctx.base, &ctx.cfg.out_dir));
            out.write_to(&dir)?;
            for note in &out.partial {
                eprintln!("partial: {note}");
            }
            eprintln!("wrote {} files to {}", out.files.len(), dir.display());
            Ok(out.exit_code())
        }
    }
}

/// Per-input normalization needs dataset names; inputs given on the command
/// line are named after their file stems.
fn label_inputs(cfg: &mut RunConfig) {
    for spec in &mut cfg.inputs {
        if let InputSpec::Table { path, dataset: dataset @ None, .. } = spec {
            *dataset = Path::new(path).file_stem().map(|s| s.to_string_lossy().into_owned());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => {
            debug_assert!(code == EXIT_OK || code == EXIT_PARTIAL);
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
