//! The `racism-detect` command line: preprocess, embed, train, evaluate,
//! ensemble, predict, report.
//!
//! Precedence is flags > config file > built-in defaults. Every subcommand
//! writes only into the output directory. Exit codes: 0 success, 2
//! config/usage, 3 dataset, 4 provider, 5 file format, 6 divergence,
//! 7 refusal, 1 other I/O.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::corpus::{
    class_distribution, count_duplicate_texts, load_dataset, split_train_test, write_dataset,
    BinaryLabel, DatasetSplit, LabeledRecord,
};
use crate::embedding::{
    embed_batch, provider_from_name, read_cache, write_cache, EmbeddingCache, EmbeddingProvider,
    EmbeddingVector,
};
use crate::ensemble::{ensemble_dataset, ensemble_proba_mode, EnsemblePrediction, VoteMode};
use crate::error::{Error, Result};
use crate::metrics::{write_report, ConfusionMatrix, MetricsReport};
use crate::model::{
    build_model, load_checkpoint, save_checkpoint, train, Architecture, ModelInput, Prediction,
    SampleSet, TrainedModel,
};
use crate::plots::{render_accuracy_loss, render_confusion};
use crate::preprocess::{clean, CleanConfig, Stage};

#[derive(Parser)]
#[command(
    name = "racism-detect",
    version,
    about = "Ensemble pipeline for detecting racist Bengali social-media text"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the raw dataset through the removal stages
    Preprocess(PreprocessArgs),
    /// Embed a cleaned dataset into a binary cache
    Embed(EmbedArgs),
    /// Train one architecture on cached embeddings
    Train(TrainArgs),
    /// Evaluate checkpoints on the held-out split: reports, table, plots
    Evaluate(EvaluateArgs),
    /// Score a whole cache with three checkpoints combined
    Ensemble(EnsembleArgs),
    /// Clean, embed, and classify one text
    Predict(PredictArgs),
    /// Merge stored report files into one combined table
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Pipeline config file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override: sets the split, embedding, and training seeds
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            config.data.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.split.seed = seed;
            config.embedding.seed = seed;
            config.train.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args, Clone)]
struct ProviderArgs {
    /// Embedding provider
    #[arg(long, value_parser = ["bangla-bert", "bangla-bert-base", "sahaj-bert", "stub"])]
    provider: Option<String>,
    /// Vector width; required for the stub provider
    #[arg(long)]
    dim: Option<usize>,
    /// Out-of-process embedding command (also via RD_EMBED_CMD)
    #[arg(long)]
    embed_cmd: Option<String>,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raw dataset CSV (header `text,label`); overrides the config
    #[arg(long)]
    input: Option<PathBuf>,
    /// Skip digit removal
    #[arg(long)]
    no_numbers: bool,
    /// Skip punctuation removal
    #[arg(long)]
    no_punct: bool,
    /// Skip emoji removal
    #[arg(long)]
    no_emoji: bool,
    /// Skip POS stopword removal
    #[arg(long)]
    no_pos: bool,
    /// POS tags to drop (comma separated)
    #[arg(long, value_delimiter = ',')]
    drop_tags: Option<Vec<String>>,
    /// Lexicon file of `tag<TAB>word` lines
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Keep rows that clean to the empty string
    #[arg(long)]
    keep_empty: bool,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Cleaned dataset CSV (defaults to <out>/cleaned.csv)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Provider batch size
    #[arg(long)]
    batch_size: Option<usize>,
    /// Re-embed even if a stale cache exists
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Architecture to train
    #[arg(long)]
    model: Architecture,
    /// Cleaned dataset CSV (defaults to <out>/cleaned.csv)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Embedding cache (defaults to <out>/<provider>.emb)
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Three caches for the multi-channel per-provider mode (MCNN-LSTM only)
    #[arg(long, value_delimiter = ',', num_args = 3)]
    caches: Option<Vec<PathBuf>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Sequence view of the flat embedding
    #[arg(long)]
    sequence_length: Option<usize>,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// One to three checkpoint files; three enable the ensemble row
    #[arg(long, num_args = 1..=3, required = true)]
    checkpoints: Vec<PathBuf>,
    /// Cleaned dataset CSV (defaults to <out>/cleaned.csv)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Embedding cache (defaults to <out>/<provider>.emb)
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Average thresholded labels instead of probabilities
    #[arg(long)]
    hard_vote: bool,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exactly three checkpoint files
    #[arg(long, num_args = 3, required = true)]
    checkpoints: Vec<PathBuf>,
    /// Embedding cache to score
    #[arg(long, required = true)]
    cache: PathBuf,
    /// Average thresholded labels instead of probabilities
    #[arg(long)]
    hard_vote: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// One checkpoint for a single model, or three for the ensemble
    #[arg(long, num_args = 1..=3, required = true)]
    checkpoints: Vec<PathBuf>,
    /// Text to classify
    #[arg(long, required = true)]
    text: String,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Average thresholded labels instead of probabilities
    #[arg(long)]
    hard_vote: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory to scan for *.report.toml files
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Explicit report files
    #[arg(long, num_args = 1..)]
    reports: Vec<PathBuf>,
}

pub fn run() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn resolve_provider(
    config: &PipelineConfig,
    args: &ProviderArgs,
) -> Result<Box<dyn EmbeddingProvider>> {
    let name = args.provider.as_deref().unwrap_or(&config.embedding.provider);
    let dim = args.dim.or(config.embedding.dimension);
    let cmd = args.embed_cmd.as_deref().or(config.embedding.command.as_deref());
    provider_from_name(name, dim, config.embedding.seed, cmd)
}

fn cleaned_path(config: &PipelineConfig, flag: &Option<PathBuf>) -> PathBuf {
    flag.clone().unwrap_or_else(|| config.data.out_dir.join("cleaned.csv"))
}

fn default_cache_path(config: &PipelineConfig, provider: &dyn EmbeddingProvider) -> PathBuf {
    config.data.out_dir.join(format!("{}.emb", provider.name()))
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<()> {
    let config = args.common.load()?;
    let input = args.input.clone().unwrap_or_else(|| config.data.dataset.clone());
    let mut clean_config = {
        let mut section = config.preprocess.clone();
        if let Some(tags) = &args.drop_tags {
            section.drop_tags = tags.clone();
        }
        if let Some(lexicon) = &args.lexicon {
            section.lexicon = Some(lexicon.clone());
        }
        section.to_clean_config()?
    };
    clean_config.numbers &= !args.no_numbers;
    clean_config.punctuation &= !args.no_punct;
    clean_config.emoji &= !args.no_emoji;
    clean_config.pos &= !args.no_pos;
    let drop_empty = config.preprocess.drop_empty && !args.keep_empty;

    let records = load_dataset(&input)?;
    let duplicates = count_duplicate_texts(&records);

    let mut changed: BTreeMap<Stage, usize> = BTreeMap::new();
    let mut kept: Vec<LabeledRecord> = Vec::with_capacity(records.len());
    let mut dropped: Vec<usize> = Vec::new();
    for record in &records {
        let result = clean(&record.text, &clean_config);
        for stage in &result.stages_changed {
            *changed.entry(*stage).or_default() += 1;
        }
        if result.empty_output && drop_empty {
            dropped.push(record.id);
            continue;
        }
        kept.push(LabeledRecord::new(kept.len(), result.cleaned, record.racism_type));
    }

    ensure_out_dir(&config.data.out_dir)?;
    let out_csv = config.data.out_dir.join("cleaned.csv");
    write_dataset(&kept, &out_csv)?;

    let mut stats = String::new();
    stats.push_str(&format!("rows_in = {}\n", records.len()));
    stats.push_str(&format!("rows_out = {}\n", kept.len()));
    stats.push_str(&format!("dropped_empty = {}\n", dropped.len()));
    stats.push_str(&format!("duplicate_texts_input = {duplicates}\n"));
    for stage in [Stage::Numbers, Stage::Punctuation, Stage::Emoji, Stage::Pos, Stage::Whitespace] {
        stats.push_str(&format!(
            "changed_{stage} = {}\n",
            changed.get(&stage).copied().unwrap_or(0)
        ));
    }
    stats.push_str(&format!(
        "dropped_ids = \"{}\"\n",
        dropped.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    ));
    let stats_path = config.data.out_dir.join("preprocess_stats.txt");
    std::fs::write(&stats_path, &stats).map_err(|e| Error::io(&stats_path, e))?;

    let distribution = class_distribution(&kept);
    println!(
        "cleaned {} rows -> {} ({} dropped as empty) into {}",
        records.len(),
        kept.len(),
        dropped.len(),
        out_csv.display()
    );
    println!(
        "binary classes: {} racism / {} non-racism",
        distribution.racism, distribution.non_racism
    );
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let config = args.common.load()?;
    let input = cleaned_path(&config, &args.input);
    let provider = resolve_provider(&config, &args.provider)?;
    let batch_size = args.batch_size.unwrap_or(config.embedding.batch_size);

    let records = load_dataset(&input)?;
    let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();

    ensure_out_dir(&config.data.out_dir)?;
    let out_path = default_cache_path(&config, provider.as_ref());
    if out_path.exists() && !args.force {
        let existing = read_cache(&out_path)?;
        existing.validate_dimension(provider.dimension())?;
        existing.validate_texts(texts.iter().copied())?;
        println!(
            "cache up to date: {} ({} rows x {})",
            out_path.display(),
            existing.len(),
            existing.dimension()
        );
        return Ok(());
    }

    let rows = embed_batch(&texts, provider.as_ref(), batch_size)?;
    let cache = EmbeddingCache::new(provider.spec(), rows)?;
    write_cache(&cache, &out_path)?;
    println!(
        "wrote {} rows x {} to {}",
        cache.len(),
        cache.dimension(),
        out_path.display()
    );
    Ok(())
}

/// Load the cleaned records and a cache, check alignment, and split.
fn load_aligned(
    config: &PipelineConfig,
    input: &Option<PathBuf>,
    cache_path: &Path,
    expected_dim: Option<usize>,
) -> Result<(Vec<LabeledRecord>, EmbeddingCache, DatasetSplit)> {
    let records = load_dataset(cleaned_path(config, input))?;
    let cache = read_cache(cache_path)?;
    if let Some(dim) = expected_dim {
        cache.validate_dimension(dim)?;
    }
    cache.validate_texts(records.iter().map(|r| r.text.as_str()))?;
    let split = split_train_test(
        &records,
        config.split.ratio,
        config.split.seed,
        config.split.stratify,
    )?;
    Ok((records, cache, split))
}

fn single_inputs(cache: &EmbeddingCache, ids: impl Iterator<Item = usize>) -> Vec<ModelInput> {
    ids.map(|id| ModelInput::Single(cache.rows[id].clone())).collect()
}

fn triple_inputs(
    caches: &[EmbeddingCache; 3],
    ids: impl Iterator<Item = usize>,
) -> Vec<ModelInput> {
    ids.map(|id| {
        ModelInput::Triple(Box::new([
            caches[0].rows[id].clone(),
            caches[1].rows[id].clone(),
            caches[2].rows[id].clone(),
        ]))
    })
    .collect()
}

fn labels_of(records: &[LabeledRecord]) -> Vec<BinaryLabel> {
    records.iter().map(|r| r.binary_label).collect()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = args.common.load()?;
    let architecture = args.model;

    ensure_out_dir(&config.data.out_dir)?;
    let (train_inputs, val_inputs, split, input_dim) = if let Some(cache_paths) = &args.caches {
        if architecture != Architecture::McnnLstm {
            return Err(Error::Config(
                "--caches (per-provider channels) applies to --model mcnn-lstm only".into(),
            ));
        }
        let records = load_dataset(cleaned_path(&config, &args.input))?;
        let mut caches = Vec::with_capacity(3);
        for path in cache_paths {
            let cache = read_cache(path)?;
            cache.validate_texts(records.iter().map(|r| r.text.as_str()))?;
            caches.push(cache);
        }
        let caches: [EmbeddingCache; 3] = caches.try_into().expect("three caches");
        let dim = caches[0].dimension();
        for c in &caches[1..] {
            c.validate_dimension(dim)?;
        }
        let split = split_train_test(
            &records,
            config.split.ratio,
            config.split.seed,
            config.split.stratify,
        )?;
        let train_inputs = triple_inputs(&caches, split.train.iter().map(|r| r.id));
        let val_inputs = triple_inputs(&caches, split.test.iter().map(|r| r.id));
        (train_inputs, val_inputs, split, dim)
    } else {
        let provider = resolve_provider(&config, &args.provider)?;
        let cache_path = args
            .cache
            .clone()
            .unwrap_or_else(|| default_cache_path(&config, provider.as_ref()));
        let (_, cache, split) =
            load_aligned(&config, &args.input, &cache_path, Some(provider.dimension()))?;
        let train_inputs = single_inputs(&cache, split.train.iter().map(|r| r.id));
        let val_inputs = single_inputs(&cache, split.test.iter().map(|r| r.id));
        let dim = cache.dimension();
        (train_inputs, val_inputs, split, dim)
    };

    let mut model_config = config.model.to_model_config(architecture, input_dim);
    if let Some(seq) = args.sequence_length {
        model_config.sequence_length = seq;
    }
    let mut tcfg = config.train.to_train_config(architecture);
    if let Some(epochs) = args.epochs {
        tcfg.epochs = epochs;
    }
    if let Some(batch_size) = args.batch_size {
        tcfg.batch_size = batch_size;
    }
    if let Some(lr) = args.lr {
        tcfg.learning_rate = lr;
    }

    split.write_manifest(config.data.out_dir.join("split_manifest.csv"))?;

    let train_set = SampleSet {
        labels: labels_of(&split.train),
        inputs: train_inputs,
    };
    let val_set = SampleSet {
        labels: labels_of(&split.test),
        inputs: val_inputs,
    };

    println!(
        "training {} on {} samples (validating on {}), {} epochs",
        architecture,
        train_set.len(),
        val_set.len(),
        tcfg.epochs
    );
    let model = build_model(&model_config, tcfg.seed)?;
    let trained = train(model, &train_set, &val_set, &tcfg)?;

    let ckpt_path = config.data.out_dir.join(format!("{architecture}.ckpt"));
    save_checkpoint(&trained, &ckpt_path)?;
    let history_path = config.data.out_dir.join(format!("{architecture}_history.json"));
    let history_json = serde_json::to_string_pretty(&trained.history)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    std::fs::write(&history_path, history_json).map_err(|e| Error::io(&history_path, e))?;

    let last = trained.history.last().expect("at least one epoch");
    println!(
        "epoch {}: train acc {:.4} loss {:.4} | val acc {:.4} loss {:.4}",
        last.epoch, last.train_acc, last.train_loss, last.val_acc, last.val_loss
    );
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

fn unique_stem(used: &mut BTreeMap<String, usize>, base: &str) -> String {
    let n = used.entry(base.to_string()).or_insert(0);
    *n += 1;
    if *n == 1 {
        base.to_string()
    } else {
        format!("{base}-{n}")
    }
}

fn config_echo(
    config: &PipelineConfig,
    model: &TrainedModel,
    embedding_name: &str,
    vote: Option<VoteMode>,
) -> BTreeMap<String, String> {
    let mut echo = BTreeMap::new();
    echo.insert("embedding".into(), embedding_name.to_string());
    echo.insert("architecture".into(), model.config.architecture.to_string());
    echo.insert("input_dim".into(), model.config.input_dim.to_string());
    echo.insert("sequence_length".into(), model.config.sequence_length.to_string());
    echo.insert("hidden_units".into(), model.config.hidden_units.to_string());
    echo.insert("epochs_trained".into(), model.history.len().to_string());
    echo.insert("split_ratio".into(), config.split.ratio.to_string());
    echo.insert("split_seed".into(), config.split.seed.to_string());
    echo.insert("stratify".into(), config.split.stratify.to_string());
    if model.config.architecture == Architecture::McnnLstm {
        echo.insert(
            "kernel_sizes".into(),
            format!("{:?}", model.config.kernel_sizes),
        );
        echo.insert("conv_filters".into(), model.config.conv_filters.to_string());
        echo.insert("pool_size".into(), model.config.pool_size.to_string());
    }
    if let Some(mode) = vote {
        echo.insert(
            "vote".into(),
            match mode {
                VoteMode::Soft => "soft (mean probability)".into(),
                VoteMode::Hard => "hard (mean label)".into(),
            },
        );
    }
    echo
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let config = args.common.load()?;
    let provider = resolve_provider(&config, &args.provider)?;
    let embedding_name = provider.name().to_string();
    let cache_path = args
        .cache
        .clone()
        .unwrap_or_else(|| default_cache_path(&config, provider.as_ref()));

    for path in &args.checkpoints {
        if !path.exists() {
            return Err(Error::Config(format!(
                "--checkpoints: no such file {}",
                path.display()
            )));
        }
    }
    let models: Vec<TrainedModel> = args
        .checkpoints
        .iter()
        .map(load_checkpoint)
        .collect::<Result<_>>()?;

    let (_, cache, split) =
        load_aligned(&config, &args.input, &cache_path, Some(provider.dimension()))?;
    for m in &models {
        if m.config.input_dim != cache.dimension() {
            return Err(Error::Config(format!(
                "checkpoint {} expects dimension {} but the cache is {}",
                m.config.architecture,
                m.config.input_dim,
                cache.dimension()
            )));
        }
    }

    let test_inputs = single_inputs(&cache, split.test.iter().map(|r| r.id));
    let truths = labels_of(&split.test);
    let vote = if args.hard_vote { VoteMode::Hard } else { VoteMode::Soft };

    ensure_out_dir(&config.data.out_dir)?;
    let out = &config.data.out_dir;
    let mut stems = BTreeMap::new();
    let mut reports = Vec::new();
    for model in &models {
        let predictions = model.predict_batch(&test_inputs)?;
        let predicted: Vec<BinaryLabel> = predictions.iter().map(|p| p.label).collect();
        let confusion = ConfusionMatrix::from_labels(&truths, &predicted)?;
        let mut report = MetricsReport::from_confusion(
            model.config.architecture.display_name(),
            embedding_name.clone(),
            confusion,
        );
        report.config_echo = config_echo(&config, model, &embedding_name, None);
        let stem = unique_stem(&mut stems, model.config.architecture.as_str());
        write_report(&report, out.join(format!("{stem}.report.toml")))?;
        render_accuracy_loss(
            &model.history,
            model.config.architecture.display_name(),
            out.join(format!("{stem}_accuracy_loss.svg")),
        )?;
        render_confusion(
            &report.confusion,
            &format!("{} ({embedding_name})", model.config.architecture.display_name()),
            out.join(format!("{stem}_confusion.svg")),
        )?;
        println!(
            "{:<10} accuracy {:.4} ({} test rows)",
            model.config.architecture.to_string(),
            report.accuracy,
            truths.len()
        );
        reports.push(report);
    }

    if models.len() == 3 {
        let members: Vec<&TrainedModel> = models.iter().collect();
        let combined = ensemble_dataset(&members, &test_inputs, vote)?;
        let predicted: Vec<BinaryLabel> = combined.iter().map(|p| p.label).collect();
        let confusion = ConfusionMatrix::from_labels(&truths, &predicted)?;
        let mut report =
            MetricsReport::from_confusion("Ensemble", embedding_name.clone(), confusion);
        report.config_echo = config_echo(&config, &models[0], &embedding_name, Some(vote));
        write_report(&report, out.join("ensemble.report.toml"))?;
        render_confusion(
            &report.confusion,
            &format!("Ensemble ({embedding_name})"),
            out.join("ensemble_confusion.svg"),
        )?;
        println!("{:<10} accuracy {:.4}", "ensemble", report.accuracy);
        reports.push(report);
    }

    let table = crate::metrics::report_table(&reports)?;
    let table_path = out.join("report_table.txt");
    std::fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    println!("\n{table}");
    Ok(())
}

fn write_predictions_csv(
    predictions: &[EnsemblePrediction],
    path: &Path,
) -> Result<()> {
    let mut out = String::from("id,probability,label\n");
    for (id, p) in predictions.iter().enumerate() {
        out.push_str(&format!(
            "{id},{},{}\n",
            p.mean_probability,
            p.label.class_index()
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn cmd_ensemble(args: EnsembleArgs) -> Result<()> {
    let config = args.common.load()?;
    let models: Vec<TrainedModel> = args
        .checkpoints
        .iter()
        .map(load_checkpoint)
        .collect::<Result<_>>()?;
    let cache = read_cache(&args.cache)?;
    let vote = if args.hard_vote { VoteMode::Hard } else { VoteMode::Soft };

    let inputs = single_inputs(&cache, 0..cache.len());
    let members: Vec<&TrainedModel> = models.iter().collect();
    let combined = ensemble_dataset(&members, &inputs, vote)?;

    ensure_out_dir(&config.data.out_dir)?;
    let out_path = config.data.out_dir.join("ensemble_predictions.csv");
    write_predictions_csv(&combined, &out_path)?;
    let positives = combined.iter().filter(|p| p.label == BinaryLabel::Racism).count();
    println!(
        "scored {} rows: {} racism / {} non-racism -> {}",
        combined.len(),
        positives,
        combined.len() - positives,
        out_path.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let config = args.common.load()?;
    let clean_config: CleanConfig = config.preprocess.to_clean_config()?;
    let result = clean(&args.text, &clean_config);
    if result.empty_output {
        return Err(Error::Refusal(format!(
            "text cleaned to the empty string (stages: {}); nothing to classify",
            result
                .stages_applied
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    let models: Vec<TrainedModel> = args
        .checkpoints
        .iter()
        .map(load_checkpoint)
        .collect::<Result<_>>()?;
    let input_dim = models[0].config.input_dim;
    if models.iter().any(|m| m.config.input_dim != input_dim) {
        return Err(Error::Config("checkpoints disagree on embedding dimension".into()));
    }

    // The stub's width follows the checkpoint unless given explicitly.
    let provider_args = ProviderArgs {
        dim: args.provider.dim.or(Some(input_dim)),
        ..args.provider.clone()
    };
    let provider = resolve_provider(&config, &provider_args)?;
    if provider.dimension() != input_dim {
        return Err(Error::Config(format!(
            "provider emits {} dimensions but the checkpoint expects {}",
            provider.dimension(),
            input_dim
        )));
    }

    let vector: EmbeddingVector = crate::embedding::embed_text(&result.cleaned, provider.as_ref())?;
    println!("cleaned: {}", result.cleaned);
    match models.len() {
        1 => {
            let p: Prediction = models[0].predict_vector(&vector)?;
            println!(
                "{}: probability {:.4} -> {} (class {})",
                models[0].config.architecture.display_name(),
                p.probability,
                p.label,
                p.label.class_index()
            );
        }
        3 => {
            let vote = if args.hard_vote { VoteMode::Hard } else { VoteMode::Soft };
            let member: Vec<Prediction> = models
                .iter()
                .map(|m| m.predict_vector(&vector))
                .collect::<Result<_>>()?;
            let combined = ensemble_proba_mode(&member[0], &member[1], &member[2], vote)?;
            for (m, p) in models.iter().zip(&member) {
                println!(
                    "{}: probability {:.4}",
                    m.config.architecture.display_name(),
                    p.probability
                );
            }
            println!(
                "ensemble: mean probability {:.4} -> {} (class {})",
                combined.mean_probability,
                combined.label,
                combined.label.class_index()
            );
        }
        n => {
            return Err(Error::Config(format!(
                "predict takes 1 or 3 checkpoints, got {n}"
            )));
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let config = args.common.load()?;
    let mut paths: Vec<PathBuf> = args.reports.clone();
    if let Some(dir) = &args.dir {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".report.toml"))
            {
                paths.push(path);
            }
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(
            "no report files given (use --reports or --dir)".into(),
        ));
    }
    let reports: Vec<MetricsReport> = paths
        .iter()
        .map(crate::metrics::read_report)
        .collect::<Result<_>>()?;
    let table = crate::metrics::report_table(&reports)?;
    ensure_out_dir(&config.data.out_dir)?;
    let table_path = config.data.out_dir.join("report_table.txt");
    std::fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    println!("{table}");
    Ok(())
}

/// Architecture is parsed from its CLI names via FromStr.
impl clap::builder::ValueParserFactory for Architecture {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| {
            s.parse::<Architecture>().map_err(std::io::Error::other)
        })
    }
}
