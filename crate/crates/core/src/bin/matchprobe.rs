//! Command-line entry point for batch cross-encoder experiments.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use matchprobe::cli::{
    cmd_ablate, cmd_heads, cmd_negatives, cmd_score, ExperimentConfig, SweepMode,
};

#[derive(Parser)]
#[command(name = "matchprobe", version, about = "Cross-encoder scoring, ablation and attention analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score all judged (query, document) pairs and report nDCG@k.
    Score(CommonArgs),
    /// Run ablation specs (and optional layer sweeps) against the baseline.
    Ablate(AblateArgs),
    /// Emit per-head attention statistics, contrasts, histograms and
    /// matching-head diagnostics.
    Heads(CommonArgs),
    /// Sample easy negatives for every judged query.
    Negatives(CommonArgs),
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Ablation spec (text grammar or JSON array); repeatable.
    #[arg(long = "spec")]
    specs: Vec<String>,

    /// Sweep a bare direction (e.g. "D<-D") across layers, one row per layer.
    #[arg(long)]
    sweep_layers: Option<String>,

    /// Sweep reading: cumulative from the input (`from-bottom`, layers 0..=l)
    /// or from the output (`from-top`, layers l..L).
    #[arg(long, default_value = "from-bottom")]
    sweep_mode: String,
}

/// Flags mirror the experiment-config fields; `--config` loads a JSON
/// file first and individual flags override it.
#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config (field names match these flags).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Model config JSON.
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// Weight archive (safetensors layout).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Vocabulary file (one token per line).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Queries TSV (id<TAB>text).
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Collection TSV (id<TAB>text).
    #[arg(long)]
    collection: Option<PathBuf>,
    /// TREC 4-column qrels.
    #[arg(long)]
    qrels: Option<PathBuf>,

    /// Pre-sampled easy-negatives file (4-column, grade -1).
    #[arg(long)]
    negatives: Option<PathBuf>,

    /// Easy negatives to synthesize per query (heads/negatives commands).
    #[arg(long)]
    easy_negatives: Option<usize>,

    /// Seed for all sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Maximum assembled input length (clamped to the model's positions).
    #[arg(long)]
    max_len: Option<usize>,
    /// Pairs handled per scheduling chunk (memory knob, not results).
    #[arg(long)]
    batch_size: Option<usize>,
    /// Worker threads (changes wall time only, never output bytes).
    #[arg(long)]
    workers: Option<usize>,

    /// nDCG rank cutoff.
    #[arg(long)]
    k: Option<usize>,

    /// Histogram bins.
    #[arg(long)]
    bins: Option<usize>,

    /// Minimum pairs for the query/document embedding means.
    #[arg(long)]
    min_qd_sample: Option<u64>,

    /// Comma-separated grades counted as relevant (default "2,3").
    #[arg(long)]
    relevant_grades: Option<String>,
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig {
                model_config: PathBuf::new(),
                weights: PathBuf::new(),
                vocab: PathBuf::new(),
                queries: PathBuf::new(),
                collection: PathBuf::new(),
                qrels: PathBuf::new(),
                negatives: None,
                easy_negatives: 0,
                seed: 0,
                output_dir: PathBuf::from("out"),
                max_len: 512,
                batch_size: 32,
                workers: 1,
                k: 10,
                bins: 20,
                min_qd_sample: 100,
                relevant_grades: vec![2, 3],
            },
        };
        macro_rules! override_with {
            ($field:ident, $flag:expr) => {
                if let Some(v) = &$flag {
                    cfg.$field = v.clone();
                }
            };
        }
        override_with!(model_config, self.model_config);
        override_with!(weights, self.weights);
        override_with!(vocab, self.vocab);
        override_with!(queries, self.queries);
        override_with!(collection, self.collection);
        override_with!(qrels, self.qrels);
        override_with!(output_dir, self.out);
        if self.negatives.is_some() {
            cfg.negatives = self.negatives.clone();
        }
        if let Some(v) = self.easy_negatives {
            cfg.easy_negatives = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.max_len {
            cfg.max_len = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.bins {
            cfg.bins = v;
        }
        if let Some(v) = self.min_qd_sample {
            cfg.min_qd_sample = v;
        }
        if let Some(grades) = &self.relevant_grades {
            cfg.relevant_grades = grades
                .split(',')
                .map(|g| g.trim().parse::<i8>().context("bad grade in --relevant-grades"))
                .collect::<anyhow::Result<_>>()?;
        }
        Ok(cfg)
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Score(common) => {
            let cfg = common.resolve()?;
            let out = cmd_score(&cfg)?;
            println!("scored {} queries, mean nDCG@{} = {:.4}", out.per_query.len(), cfg.k, out.mean_ndcg);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Ablate(args) => {
            let cfg = args.common.resolve()?;
            if args.specs.is_empty() && args.sweep_layers.is_none() {
                bail!("ablate needs at least one --spec or --sweep-layers");
            }
            let mode = match args.sweep_mode.as_str() {
                "from-bottom" => SweepMode::FromBottom,
                "from-top" => SweepMode::FromTop,
                other => bail!("unknown --sweep-mode \"{other}\" (want from-bottom or from-top)"),
            };
            let sweep = args.sweep_layers.as_deref().map(|d| (d, mode));
            let out = cmd_ablate(&cfg, &args.specs, sweep)?;
            println!("baseline mean nDCG@{} = {:.4}", cfg.k, out.baseline);
            for row in &out.rows {
                let sig = match row.significant {
                    Some(true) => " *",
                    _ => "",
                };
                let p = row.p.map(|p| format!(" (p={p:.4})")).unwrap_or_default();
                println!("  {} -> {:.4}{}{}", row.spec, row.mean_ndcg, p, sig);
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Heads(common) => {
            let cfg = common.resolve()?;
            let out = cmd_heads(&cfg)?;
            println!(
                "traced {} pairs; {} stat rows, {} diagnostic rows{}",
                out.pairs_scored,
                out.stats.len(),
                out.diagnostics.len(),
                if out.contrast.is_some() { "" } else { " (no contrast: single class)" },
            );
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Negatives(common) => {
            let cfg = common.resolve()?;
            let (count, files) = cmd_negatives(&cfg)?;
            println!("sampled {count} easy negatives");
            for f in &files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}
