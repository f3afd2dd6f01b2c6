//! `lexstress`: corpus generation, feature extraction, training, detection
//! and evaluation from the command line.
//!
//! Config files are JSON; unknown keys are rejected and flags override
//! values read from the file.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lexstress::augmentation::{generate_corpus, CorpusSpec};
use lexstress::eval::{
    detect_all, run_ablation, AblationConfig, AblationCorpora, EvalReport, ModelReport,
};
use lexstress::lexicon::{read_alignment_file, StressPattern, WordAlignment};
use lexstress::model::{forward, Checkpoint, Matrix, ModelConfig, Pooling};
use lexstress::prosody::{
    extract_features, write_feature_file, AudioSignal, FeatureConfig, FeatureRecord,
};
use lexstress::training::gradcheck::{gradient_check, random_instance, DEFAULT_STEP};
use lexstress::training::{
    load_examples, train, write_loss_log_file, Split, TrainConfig, TrainingExample,
};

#[derive(Parser)]
#[command(name = "lexstress", version, about = "Lexical stress error detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus (alignments, features, manifest) from a corpus spec.
    SynthCorpus(SynthCorpusArgs),
    /// Extract prosodic features for aligned words from 16 kHz mono WAV files.
    Extract(ExtractArgs),
    /// Train a model on the train/validation entries of a manifest.
    Train(TrainArgs),
    /// Flag words whose realized stress differs from the canonical pattern.
    Detect(DetectArgs),
    /// PR curves, AUC and operating points of one or more checkpoints.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients on random instances.
    Gradcheck(GradcheckArgs),
    /// Export the attention matrices of one word as CSV.
    Attention(AttentionArgs),
    /// Train and evaluate the four attention/augmentation variants.
    Ablation(AblationArgs),
}

#[derive(Args)]
struct SynthCorpusArgs {
    /// Corpus spec (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Alignment file (JSON lines).
    #[arg(long)]
    alignments: PathBuf,
    /// Directory holding the WAV files. A word's `audio` field is resolved
    /// against it; without one, `<speaker_id>_<word>.wav` is used.
    #[arg(long)]
    wav_dir: PathBuf,
    /// Feature settings (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output feature file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrainFile {
    model: ModelConfig,
    train: TrainConfig,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// `{"model": {...}, "train": {...}}` (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Train the nucleus-mean model instead of the attention model.
    #[arg(long)]
    no_attention: bool,
    /// Checkpoint path; the loss log is written next to it as `<stem>.loss.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Only words of this split (train, validation, test).
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    /// TSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// `name=path` or a path (named after its file stem); repeatable.
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<String>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long, default_value_t = 0.5)]
    target_recall: f64,
    /// Directory for report.json, report.txt, per-model CSVs and the SVG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GradcheckFile {
    instances: usize,
    step: f64,
    tolerance: f64,
    seed: u64,
}

impl Default for GradcheckFile {
    fn default() -> Self {
        GradcheckFile {
            instances: 10,
            step: DEFAULT_STEP,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
}

#[derive(Args)]
struct AttentionArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest line (0-based).
    #[arg(long)]
    record: usize,
    /// Directory for frame_attention.csv and phone_attention.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblationArgs {
    /// Ablation settings (JSON): `{"model", "train", "target_recall"}`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds both the generated corpora and training.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<Split, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown split `{s}`; expected train, validation or test"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), |p| read_json(p))
}

fn require_file(path: &Path) -> Result<()> {
    ensure!(
        path.is_file(),
        "{} does not exist or is not a file",
        path.display()
    );
    Ok(())
}

fn examples(manifest: &Path, split: Option<Split>) -> Result<Vec<(usize, TrainingExample)>> {
    require_file(manifest)?;
    let all = load_examples(manifest)?;
    Ok(all
        .into_iter()
        .enumerate()
        .filter(|(_, (s, _))| split.is_none_or(|want| *s == want))
        .map(|(i, (_, e))| (i, e))
        .collect())
}

fn pattern(p: &StressPattern) -> String {
    p.bits().iter().map(u8::to_string).collect()
}

fn synth_corpus(args: SynthCorpusArgs) -> Result<()> {
    let mut spec: CorpusSpec = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let corpus =
        generate_corpus(&spec).with_context(|| format!("corpus spec {}", args.config.display()))?;
    corpus.write(&args.out)?;
    print!("{}", corpus.summary());
    println!("manifest: {}", corpus.manifest_path(&args.out).display());
    Ok(())
}

fn wav_path(dir: &Path, word: &WordAlignment) -> PathBuf {
    match &word.audio {
        Some(a) => dir.join(a),
        None => dir.join(format!("{}_{}.wav", word.speaker_id, word.word)),
    }
}

fn extract(args: ExtractArgs) -> Result<()> {
    require_file(&args.alignments)?;
    ensure!(
        args.wav_dir.is_dir(),
        "{} is not a directory",
        args.wav_dir.display()
    );
    let config: FeatureConfig = read_config(args.config.as_ref())?;
    let words = read_alignment_file(&args.alignments)?;
    let mut audio: HashMap<PathBuf, AudioSignal> = HashMap::new();
    let mut records = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let path = wav_path(&args.wav_dir, word);
        if !audio.contains_key(&path) {
            let signal = AudioSignal::read_wav(&path)
                .with_context(|| format!("record {i} (`{}`)", word.word))?;
            audio.insert(path.clone(), signal);
        }
        let features = extract_features(&audio[&path], word, &config).with_context(|| {
            format!(
                "{}: record {i} (`{}`)",
                args.alignments.display(),
                word.word
            )
        })?;
        records.push(FeatureRecord::new(&word.word, &word.speaker_id, &features));
    }
    write_feature_file(&records, &args.out)?;
    println!(
        "{} feature records written to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn loss_log_path(checkpoint: &Path) -> PathBuf {
    let stem = checkpoint
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    checkpoint.with_file_name(format!("{stem}.loss.csv"))
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let mut file: TrainFile = read_config(args.config.as_ref())?;
    if let Some(seed) = args.seed {
        file.train.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        file.train.epochs = epochs;
    }
    if let Some(lr) = args.learning_rate {
        file.train.learning_rate = lr;
    }
    if args.no_attention {
        file.model.pooling = Pooling::NucleusMean;
    }
    require_file(&args.manifest)?;
    let (mut train_set, mut validation) = (Vec::new(), Vec::new());
    let loaded = load_examples(&args.manifest)?;
    let total = loaded.len();
    for (split, e) in loaded {
        match split {
            Split::Train => train_set.push(e),
            Split::Validation => validation.push(e),
            Split::Test => {}
        }
    }
    ensure!(
        !train_set.is_empty(),
        "{} has no train entries ({total} entries in total)",
        args.manifest.display()
    );
    let start = Instant::now();
    let outcome = train(&train_set, &validation, &file.model, &file.train)?;
    Checkpoint::new(file.model, outcome.params)?.save(&args.out)?;
    let log_path = loss_log_path(&args.out);
    write_loss_log_file(&outcome.log, &log_path)?;
    let last = outcome.log.last().expect("log holds epoch 0");
    println!(
        "{} train / {} validation words; {} epochs in {:.1} s; best epoch {}; final train loss {:.6}",
        train_set.len(),
        validation.len(),
        last.epoch,
        start.elapsed().as_secs_f64(),
        outcome.best_epoch,
        last.train_loss
    );
    println!(
        "checkpoint: {}\nloss log: {}",
        args.out.display(),
        log_path.display()
    );
    Ok(())
}

fn detect_cmd(args: DetectArgs) -> Result<()> {
    require_file(&args.checkpoint)?;
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let rows = examples(&args.manifest, args.split)?;
    let words: Vec<TrainingExample> = rows.iter().map(|(_, e)| e.clone()).collect();
    let results = detect_all(
        &checkpoint.params,
        &checkpoint.config,
        &words,
        args.threshold,
    )?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(
        out,
        "record\tword\tspeaker\tcanonical\tpredicted\tscore\tflagged"
    )?;
    for ((i, e), r) in rows.iter().zip(&results) {
        let predicted: String = r
            .predicted
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{predicted}\t{:.6}\t{}",
            e.alignment.word,
            e.speaker(),
            pattern(&e.alignment.canonical),
            r.score,
            u8::from(r.flagged)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    let rows = examples(&args.manifest, args.split)?;
    let words: Vec<TrainingExample> = rows.into_iter().map(|(_, e)| e).collect();
    let mut models = Vec::new();
    for spec in &args.checkpoints {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| spec.clone());
                (name, p)
            }
        };
        require_file(&path)?;
        let checkpoint = Checkpoint::load(&path)?;
        let report = ModelReport::evaluate(
            &name,
            &checkpoint.params,
            &checkpoint.config,
            &words,
            args.target_recall,
        )
        .with_context(|| format!("evaluating {}", path.display()))?;
        models.push(report);
    }
    let report = EvalReport {
        target_recall: args.target_recall,
        models,
    };
    report.write(&args.out)?;
    print!("{}", report.table());
    Ok(())
}

fn gradcheck_cmd(args: GradcheckArgs) -> Result<bool> {
    let mut file: GradcheckFile = read_config(args.config.as_ref())?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(n) = args.instances {
        file.instances = n;
    }
    ensure!(file.instances > 0, "instances must be positive");
    println!(
        "{:>8}  {:<12} {:<22} {:>7} {:>11} {:>11}  result",
        "instance", "pooling", "block", "entries", "max abs", "max rel"
    );
    let mut all_passed = true;
    for i in 0..file.instances {
        let seed = file.seed.wrapping_add(i as u64);
        let pooling = if i % 2 == 0 {
            Pooling::Attention
        } else {
            Pooling::NucleusMean
        };
        let (config, batch, labels, params) = random_instance(seed, pooling);
        let report = gradient_check(&batch, &labels, &params, &config, Some(seed), file.step)?;
        for b in &report.blocks {
            let ok = b.max_rel_error <= file.tolerance;
            all_passed &= ok;
            println!(
                "{i:>8}  {:<12} {:<22} {:>7} {:>11.3e} {:>11.3e}  {}",
                format!("{pooling:?}"),
                b.name,
                b.entries,
                b.max_abs_error,
                b.max_rel_error,
                if ok { "pass" } else { "FAIL" }
            );
        }
    }
    println!(
        "{} (tolerance {:.0e}, step {:.0e})",
        if all_passed {
            "all blocks passed"
        } else {
            "some blocks failed"
        },
        file.tolerance,
        file.step
    );
    Ok(all_passed)
}

fn write_matrix_csv(m: &Matrix, cols: usize, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r)[..cols].iter().map(|x| format!("{x:.9}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn attention_cmd(args: AttentionArgs) -> Result<()> {
    require_file(&args.checkpoint)?;
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    ensure!(
        checkpoint.config.pooling == Pooling::Attention,
        "{} is a nucleus-mean model and has no attention",
        args.checkpoint.display()
    );
    let rows = examples(&args.manifest, None)?;
    let Some((_, example)) = rows.iter().find(|(i, _)| *i == args.record) else {
        bail!("{} has no record {}", args.manifest.display(), args.record);
    };
    let input = example.input()?;
    let pass = forward(&input, &checkpoint.params, &checkpoint.config, None)?;
    let (frames, phones) = (pass.frame_attention(), pass.phone_attention());
    let (Some(frames), Some(phones)) = (frames, phones) else {
        bail!("forward pass returned no attention");
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_matrix_csv(
        frames,
        input.valid_frames,
        &args.out.join("frame_attention.csv"),
    )?;
    write_matrix_csv(
        phones,
        input.valid_tokens,
        &args.out.join("phone_attention.csv"),
    )?;
    println!(
        "`{}`: {} syllables × {} frames and {} sub-phonemes written to {}",
        example.alignment.word,
        input.syllables,
        input.valid_frames,
        input.valid_tokens,
        args.out.display()
    );
    Ok(())
}

fn ablation_cmd(args: AblationArgs) -> Result<()> {
    let mut config: AblationConfig = read_config(args.config.as_ref())?;
    let seed = args.seed.unwrap_or(config.train.seed);
    config.train.seed = seed;
    let start = Instant::now();
    let (data, corpora) = AblationCorpora::new(seed).generate()?;
    for c in &corpora {
        print!("{}", c.summary());
    }
    let outcome = run_ablation(&data, &config)?;
    print!("{}", outcome.report.table());
    println!("{:.0} s", start.elapsed().as_secs_f64());
    if let Some(dir) = &args.out {
        outcome.report.write(dir)?;
        for (variant, model, trained) in &outcome.models {
            Checkpoint::new(model.clone(), trained.params.clone())?
                .save(dir.join(format!("{}.json", variant.name())))?;
            write_loss_log_file(
                &trained.log,
                dir.join(format!("{}.loss.csv", variant.name())),
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SynthCorpus(a) => synth_corpus(a)?,
        Command::Extract(a) => extract(a)?,
        Command::Train(a) => train_cmd(a)?,
        Command::Detect(a) => detect_cmd(a)?,
        Command::Eval(a) => eval_cmd(a)?,
        Command::Gradcheck(a) => return gradcheck_cmd(a),
        Command::Attention(a) => attention_cmd(a)?,
        Command::Ablation(a) => ablation_cmd(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
