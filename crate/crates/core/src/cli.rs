//! The `psyscreen` command line. `main.rs` only forwards to [`main_with_args`]
//! so the whole interface can be driven from tests.
//!
//! Exit codes: 0 success (including runs with missing predictions), 2 bad
//! input or usage, 3 backend failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::backend::{build_backend, BackendSpec, Cassette, ChatBackend, RecordingBackend};
use crate::config::RunConfig;
use crate::knowledge::{load_config, KnowledgeKind};
use crate::metrics::THRESHOLDS;
use crate::orchestrator::{Orchestrator, RunOptions};
use crate::parser::ParseRuleSet;
use crate::prompt::{PromptAssembler, PromptBundle, TokenBudget};
use crate::report::{self, CompareRow, EvaluationReport, DEFAULT_THRESHOLD};
use crate::run::{RunDir, Sessions};
use crate::tokens::TokenizerSpec;
use crate::transcript::{
    extract_participant_text, load_labels, load_transcript_dir, parse_split, read_dialogues_csv, summarize_cohort,
    token_histogram, validate_splits, write_dialogues_csv, DatasetSplit, JointDialogue, LabelRecord, SplitName,
};

/// A cassette being recorded into, with the file it is saved to.
type Tape = (Arc<Cassette>, PathBuf);

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Backend(m) => write!(f, "backend error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn input(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn backend(e: impl fmt::Display) -> CliError {
    CliError::Backend(e.to_string())
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(input)
}

#[derive(Debug, Parser)]
#[command(
    name = "psyscreen",
    version,
    about = "Transcript-based depression screening with chat models"
)]
pub struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract participant speech into a dialogue CSV and print cohort counts.
    Ingest(IngestArgs),
    /// Query a model for every participant and store the run.
    Assess(Box<AssessArgs>),
    /// Sweep decision thresholds over a task 1 run.
    Calibrate(CalibrateArgs),
    /// Score a run against the labels.
    Evaluate(EvaluateArgs),
    /// Tabulate several task 1 runs, best F1 first.
    Compare(CompareArgs),
    /// Count tokens per dialogue.
    Tokens(TokensArgs),
}

fn parse_pair(s: &str) -> Result<(String, PathBuf), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=PATH, got {s:?}"))?;
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected NAME=PATH, got {s:?}"));
    }
    Ok((k.to_string(), PathBuf::from(v)))
}

fn parse_threshold(s: &str) -> Result<u8, String> {
    let t: u8 = s.parse().map_err(|_| format!("{s:?} is not a threshold"))?;
    if THRESHOLDS.contains(&t) {
        Ok(t)
    } else {
        Err(format!("threshold {t} outside 3..=7"))
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of `<id>_TRANSCRIPT.csv` files.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// Label CSV with participant id and PHQ-8 columns.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Split membership file, as NAME=PATH (repeatable).
    #[arg(long = "split", value_parser = parse_pair)]
    pub splits: Vec<(String, PathBuf)>,
    /// Output dialogue CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub task: u8,
    #[arg(long)]
    pub preset: Option<String>,
    /// Backend spec (TOML).
    #[arg(long)]
    pub backend: Option<PathBuf>,
    /// Participants per task 1 prompt.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Cassette to replay from, or to record into with `--record`.
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    /// Record every exchange into the cassette.
    #[arg(long)]
    pub record: bool,
    /// With `--record`, replace existing cassette entries.
    #[arg(long)]
    pub overwrite: bool,
    /// Dialogue CSV from `ingest`.
    #[arg(long)]
    pub dialogues: Option<PathBuf>,
    /// Transcript directory, used when no dialogue CSV is given.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// Labels; task 2 takes its external score from here.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Restrict to one split.
    #[arg(long)]
    pub split: Option<String>,
    /// Split membership file, as NAME=PATH (repeatable).
    #[arg(long = "split-file", value_parser = parse_pair)]
    pub split_files: Vec<(String, PathBuf)>,
    /// Knowledge document, as KIND=PATH (repeatable).
    #[arg(long = "doc", value_parser = parse_pair)]
    pub docs: Vec<(String, PathBuf)>,
    /// Prompt template file (TOML).
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub repair_retries: Option<u32>,
    /// Also accept spelled-out likelihood ratings ("five out of 7").
    #[arg(long)]
    pub word_numbers: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub run_dir: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Thresholds to sweep (default 3..=7).
    #[arg(long, value_delimiter = ',', value_parser = parse_threshold)]
    pub thresholds: Vec<u8>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub run_dir: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Task 1 decision threshold (default 5).
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<u8>,
    /// Width of the |estimate - truth| histogram bins for task 2.
    #[arg(long)]
    pub bin_width: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<u8>,
    /// Also write the CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TokensArgs {
    #[arg(long)]
    pub dialogues: Option<PathBuf>,
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// `word-approx` (default) or `whitespace`.
    #[arg(long)]
    pub tokenizer: Option<String>,
    /// Print a histogram instead of per-participant counts.
    #[arg(long)]
    pub histogram: bool,
    #[arg(long)]
    pub bin_width: Option<usize>,
}

/// Parse `args` (including the program name) and run. Normal output goes to
/// `out`, diagnostics to `err`; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_INPUT
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(input)?,
        None => RunConfig::default(),
    };
    cfg.validate().map_err(input)?;
    match cli.command {
        Command::Ingest(a) => ingest(a, &cfg, out),
        Command::Assess(a) => assess(*a, &cfg, out),
        Command::Calibrate(a) => calibrate(a, &cfg, out),
        Command::Evaluate(a) => evaluate(a, &cfg, out),
        Command::Compare(a) => compare(a, &cfg, out),
        Command::Tokens(a) => tokens(a, &cfg, out),
    }
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    value.ok_or_else(|| CliError::Input(format!("{flag} is required")))
}

fn read_labels(path: &Path) -> Result<Vec<LabelRecord>, CliError> {
    let mut file = fs::File::open(path).map_err(|e| CliError::Input(format!("labels file {}: {e}", path.display())))?;
    load_labels(&mut file).map_err(|e| CliError::Input(format!("labels file {}: {e}", path.display())))
}

fn read_splits(pairs: BTreeMap<String, PathBuf>) -> Result<Vec<DatasetSplit>, CliError> {
    let mut splits = Vec::new();
    for (name, path) in pairs {
        let name: SplitName = name.parse().map_err(input)?;
        let text =
            fs::read_to_string(&path).map_err(|e| CliError::Input(format!("split file {}: {e}", path.display())))?;
        splits.push(
            parse_split(name, &text).map_err(|e| CliError::Input(format!("split file {}: {e}", path.display())))?,
        );
    }
    validate_splits(&splits).map_err(input)?;
    Ok(splits)
}

fn merged(base: &BTreeMap<String, PathBuf>, extra: Vec<(String, PathBuf)>) -> BTreeMap<String, PathBuf> {
    let mut map = base.clone();
    map.extend(extra);
    map
}

fn dialogues_from_transcripts(dir: &Path) -> Result<Vec<JointDialogue>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Input(format!(
            "transcript directory {} not found",
            dir.display()
        )));
    }
    let transcripts = load_transcript_dir(dir).map_err(input)?;
    if transcripts.is_empty() {
        return Err(CliError::Input(format!(
            "no <id>_TRANSCRIPT.csv files in {}",
            dir.display()
        )));
    }
    Ok(transcripts.iter().map(extract_participant_text).collect())
}

fn load_dialogues(dialogues: Option<PathBuf>, transcripts: Option<PathBuf>) -> Result<Vec<JointDialogue>, CliError> {
    match (dialogues, transcripts) {
        (Some(p), _) => {
            let mut file =
                fs::File::open(&p).map_err(|e| CliError::Input(format!("dialogue file {}: {e}", p.display())))?;
            read_dialogues_csv(&mut file).map_err(|e| CliError::Input(format!("dialogue file {}: {e}", p.display())))
        }
        (None, Some(dir)) => dialogues_from_transcripts(&dir),
        (None, None) => Err(CliError::Input("--dialogues or --transcripts is required".into())),
    }
}

fn ingest(a: IngestArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let transcripts = required(a.transcripts.or(cfg.transcripts_dir.clone()), "--transcripts")?;
    let labels_path = required(a.labels.or(cfg.labels.clone()), "--labels")?;
    let out_path = required(a.out.or(cfg.dialogues.clone()), "--out")?;

    let labels = read_labels(&labels_path)?;
    let splits = read_splits(merged(&cfg.splits, a.splits))?;
    let dialogues = dialogues_from_transcripts(&transcripts)?;

    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
    }
    let mut file = fs::File::create(&out_path).map_err(|e| CliError::Input(format!("{}: {e}", out_path.display())))?;
    write_dialogues_csv(&dialogues, &mut file).map_err(input)?;

    let overall = summarize_cohort(&labels, None).map_err(input)?;
    let per_split = splits
        .iter()
        .map(|s| summarize_cohort(&labels, Some(s)).map(|c| (s.name, c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    write_out(
        out,
        &format!("wrote {} dialogues to {}\n\n", dialogues.len(), out_path.display()),
    )?;
    write_out(out, &report::cohort_table(&overall, &per_split))
}

fn assess(a: AssessArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let preset = a
        .preset
        .or(cfg.preset.clone())
        .ok_or_else(|| input("--preset is required"))?;
    let spec_path = required(a.backend.or(cfg.backend.clone()), "--backend")?;
    let batch_size = a.batch_size.or(cfg.batch_size).unwrap_or(1);
    if batch_size == 0 {
        return Err(input("--batch-size must be at least 1"));
    }
    let repair_retries = a.repair_retries.or(cfg.repair_retries).unwrap_or(1);
    let out_dir = a
        .out_dir
        .or(cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let run_id = a
        .run_id
        .or(cfg.run_id.clone())
        .unwrap_or_else(|| format!("{preset}-task{}", a.task));
    let cassette = a.cassette.or(cfg.cassette.clone());

    let mut docs = BTreeMap::new();
    for (key, path) in merged(&cfg.docs, a.docs) {
        docs.insert(key.parse::<KnowledgeKind>().map_err(input)?, path);
    }
    let knowledge = load_config(&preset, &docs).map_err(input)?;
    let bundle = match a.templates.or(cfg.templates.clone()) {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            PromptBundle::from_toml_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => PromptBundle::default(),
    };

    let mut dialogues = load_dialogues(
        a.dialogues.or(cfg.dialogues.clone()),
        a.transcripts.or(cfg.transcripts_dir.clone()),
    )?;
    if let Some(name) = a.split.or(cfg.split.clone()) {
        let name: SplitName = name.parse().map_err(input)?;
        let splits = read_splits(merged(&cfg.splits, a.split_files))?;
        let split = splits
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Input(format!("no split file given for {name}")))?;
        dialogues.retain(|d| split.participant_ids.contains(&d.participant_id));
    }
    if dialogues.is_empty() {
        return Err(input("no dialogues to assess"));
    }
    let labels = match a.labels.or(cfg.labels.clone()) {
        Some(p) => Some(read_labels(&p)?),
        None if a.task == 2 => return Err(input("--labels is required for task 2")),
        None => None,
    };

    let spec = BackendSpec::load(&spec_path).map_err(backend)?;
    let (chat, tape): (Box<dyn ChatBackend>, Option<Tape>) = if a.record {
        let path = cassette.clone().ok_or_else(|| backend("--record needs --cassette"))?;
        let inner = build_backend(&spec, None).map_err(backend)?;
        let tape = Arc::new(Cassette::load_or_new(&path).map_err(backend)?);
        (
            Box::new(RecordingBackend::new(inner, tape.clone(), a.overwrite)),
            Some((tape, path)),
        )
    } else {
        (build_backend(&spec, cassette.as_deref()).map_err(backend)?, None)
    };

    let mut rules = ParseRuleSet::v1();
    if a.word_numbers {
        rules = rules.with_word_numbers();
    }
    let options = RunOptions {
        run_id: run_id.clone(),
        batch_size,
        repair_retries,
        rules,
        cassette: cassette.as_ref().map(|p| p.display().to_string()),
    };
    let run_dir = RunDir::create(&out_dir, &run_id).map_err(input)?;
    let budget = TokenBudget {
        max_batch: batch_size.max(TokenBudget::default().max_batch),
        ..TokenBudget::default()
    };
    let assembler = PromptAssembler::new(&knowledge, &bundle).with_budget(budget);
    let orchestrator = Orchestrator::new(&*chat, &spec, assembler)
        .with_options(options)
        .with_sink(&run_dir);

    let manifest = if a.task == 1 {
        let run = orchestrator.run_task1(&dialogues).map_err(input)?;
        run_dir.write_task1(&run.assessments).map_err(input)?;
        run.manifest
    } else {
        let totals: BTreeMap<u32, u8> = labels
            .unwrap_or_default()
            .iter()
            .map(|l| (l.participant_id, l.phq8_total))
            .collect();
        let inputs = dialogues
            .into_iter()
            .map(|d| match totals.get(&d.participant_id) {
                Some(&score) => Ok((d, score)),
                None => Err(CliError::Input(format!(
                    "no label for participant {}",
                    d.participant_id
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let run = orchestrator.run_task2_all(&inputs).map_err(input)?;
        run_dir.write_task2(&run.sessions).map_err(input)?;
        run.manifest
    };
    run_dir.write_manifest(&manifest).map_err(input)?;
    if let Some((tape, path)) = tape {
        tape.save(&path).map_err(backend)?;
    }
    write_out(
        out,
        &format!(
            "run {}: task {}, {} participants, {} NA -> {}\n",
            manifest.run_id,
            manifest.task,
            manifest.n_participants,
            manifest.n_na,
            run_dir.root().display()
        ),
    )
}

fn open_run(path: &Path) -> Result<(RunDir, crate::orchestrator::RunManifest, Sessions), CliError> {
    let run = RunDir::open(path).map_err(input)?;
    let manifest = run.read_manifest().map_err(input)?;
    let sessions = run.read_sessions().map_err(input)?;
    if sessions.is_empty() {
        return Err(CliError::Input(format!("run {} has no sessions", path.display())));
    }
    Ok((run, manifest, sessions))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn calibrate(a: CalibrateArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let labels = read_labels(&required(a.labels.or(cfg.labels.clone()), "--labels")?)?;
    let thresholds = if !a.thresholds.is_empty() {
        a.thresholds
    } else {
        cfg.thresholds.clone().unwrap_or_else(|| THRESHOLDS.collect())
    };
    let (run, manifest, sessions) = open_run(&a.run_dir)?;
    let Sessions::Task1(assessments) = sessions else {
        return Err(input("calibrate needs a task 1 run"));
    };
    let report = report::calibrate(&manifest.run_id, &assessments, &labels, &thresholds).map_err(input)?;
    write_json(&run.root().join("calibration.json"), &report)?;
    write_out(out, &report::calibration_table(&report))
}

fn evaluate(a: EvaluateArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let labels = read_labels(&required(a.labels.or(cfg.labels.clone()), "--labels")?)?;
    let threshold = a.threshold.or(cfg.threshold).unwrap_or(DEFAULT_THRESHOLD);
    let bin_width = a.bin_width.or(cfg.bin_width.map(|w| w as u32)).unwrap_or(1);
    let (run, manifest, sessions) = open_run(&a.run_dir)?;
    let mut eval = EvaluationReport::new(&manifest);
    let mut summary = String::new();
    match sessions {
        Sessions::Task1(assessments) => {
            let t1 = report::evaluate_task1(&assessments, &labels, threshold).map_err(input)?;
            match &t1.classification {
                Some(c) => summary.push_str(&format!(
                    "threshold {threshold}: F1 {} macro-F1 {} accuracy {} recall {} precision {} ROC-AUC {}\n",
                    c.rounded.f1,
                    c.rounded.macro_f1,
                    c.rounded.accuracy,
                    c.rounded.recall,
                    c.rounded.precision,
                    c.rounded.roc_auc.as_deref().unwrap_or("n/a"),
                )),
                None => summary.push_str("no scored participants\n"),
            }
            eval.task1 = Some(t1);
        }
        Sessions::Task2(sessions) => {
            let t2 = report::evaluate_task2(&sessions, &labels, bin_width).map_err(input)?;
            for (stage, s) in &t2.stages {
                match &s.regression {
                    Some(r) => summary.push_str(&format!(
                        "{stage}: MAE {} RMSE {} R2 {} (n={}, excluded {})\n",
                        r.rounded["mae"],
                        r.rounded["rmse"],
                        r.rounded.get("r_squared").map_or("n/a", String::as_str),
                        s.n_scored,
                        s.n_excluded
                    )),
                    None => summary.push_str(&format!("{stage}: too few scored participants ({})\n", s.n_scored)),
                }
            }
            summary.push_str(&format!(
                "verdicts: agree {} disagree {} unclear {}\n",
                t2.verdicts.agree, t2.verdicts.disagree, t2.verdicts.unclear
            ));
            let hist = run.root().join("abs_diff_histogram.csv");
            fs::write(&hist, report::histogram_csv(&t2))
                .map_err(|e| CliError::Input(format!("{}: {e}", hist.display())))?;
            eval.task2 = Some(t2);
        }
    }
    summary.push_str(&format!("excluded (NA): {}\n", eval.n_excluded()));
    write_json(&run.root().join("evaluation.json"), &eval)?;
    write_out(out, &summary)
}

fn compare(a: CompareArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let labels = read_labels(&required(a.labels.or(cfg.labels.clone()), "--labels")?)?;
    let threshold = a.threshold.or(cfg.threshold).unwrap_or(DEFAULT_THRESHOLD);
    let mut rows = Vec::new();
    for dir in &a.run_dirs {
        let (_, manifest, sessions) = open_run(dir)?;
        let Sessions::Task1(assessments) = sessions else {
            return Err(CliError::Input(format!(
                "schema mismatch: {} is a task {} run; compare takes task 1 runs",
                dir.display(),
                manifest.task
            )));
        };
        let eval = report::evaluate_task1(&assessments, &labels, threshold).map_err(input)?;
        rows.push(CompareRow::new(&manifest, &eval));
    }
    let csv = report::compare_csv(&rows).map_err(input)?;
    if let Some(path) = a.out {
        fs::write(&path, &csv).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    write_out(out, &csv)
}

fn tokens(a: TokensArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let tokenizer: TokenizerSpec = match a.tokenizer.or(cfg.tokenizer.clone()) {
        Some(name) => name.parse().map_err(input)?,
        None => TokenizerSpec::default(),
    };
    let dialogues = load_dialogues(
        a.dialogues.or(cfg.dialogues.clone()),
        a.transcripts.or(cfg.transcripts_dir.clone()),
    )?;
    let counter = tokenizer.counter();
    let mut text = String::new();
    if a.histogram {
        let width = a.bin_width.or(cfg.bin_width).unwrap_or(1000);
        if width == 0 {
            return Err(input("--bin-width must be positive"));
        }
        text.push_str("bin_start,count\n");
        for (start, n) in token_histogram(&dialogues, width, counter) {
            text.push_str(&format!("{start},{n}\n"));
        }
    } else {
        text.push_str("participant_id,tokens\n");
        for d in &dialogues {
            text.push_str(&format!("{},{}\n", d.participant_id, counter.count(&d.text)));
        }
    }
    write_out(out, &text)
}
