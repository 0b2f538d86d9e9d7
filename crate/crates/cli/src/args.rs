use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, ValueEnum};
use elm_ctr::ActivationKind;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Hashed,
    Embedded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSplit {
    Train,
    Validation,
    Test,
    All,
}

/// Train, evaluate and apply extreme learning machines on click logs.
#[derive(Debug, Clone, Parser)]
#[command(name = "elm-ctr", version, args_override_self = true, allow_negative_numbers = true)]
#[command(group(
    ArgGroup::new("command")
        .required(true)
        .args(["train", "eval", "predict", "pretrain_emb"])
))]
pub struct Args {
    /// Train a model on the training split and report validation metrics.
    #[arg(long)]
    pub train: bool,
    /// Evaluate a saved model on one split.
    #[arg(long)]
    pub eval: bool,
    /// Write one score per input record.
    #[arg(long)]
    pub predict: bool,
    /// Pretrain field embedding tables with a logistic surrogate.
    #[arg(long = "pretrain-emb")]
    pub pretrain_emb: bool,

    /// File of `key = value` lines using the long flag names; flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Schema file; defaults to the 39-feature Criteo layout.
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model_out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model_in: Option<PathBuf>,
    /// Score file for --predict, `-` for stdout.
    #[arg(long, value_name = "PATH")]
    pub scores_out: Option<PathBuf>,
    /// Key-value metrics file.
    #[arg(long, value_name = "PATH")]
    pub metrics_out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Mode::Hashed)]
    pub mode: Mode,
    /// Embedding table to read (embedded mode) or write (--pretrain-emb).
    #[arg(long, value_name = "PATH")]
    pub emb_table: Option<PathBuf>,
    #[arg(long, default_value_t = 1 << 14)]
    pub hash_dims: usize,

    #[arg(long, default_value_t = elm_ctr::elm::DEFAULT_HIDDEN)]
    pub hidden: usize,
    /// Autoencoder layer widths, e.g. "500;500"; selects a multilayer ELM.
    #[arg(long, value_name = "WIDTHS")]
    pub layers: Option<String>,
    #[arg(long, default_value_t = elm_ctr::elm::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Ridge penalty of the autoencoder layers; defaults to --lambda.
    #[arg(long)]
    pub lambda_ae: Option<f64>,
    #[arg(long, default_value = "relu", value_parser = parse_head_activation)]
    pub activation: ActivationKind,
    /// Feature activation of autoencoder layers (also accepts identity).
    #[arg(long)]
    pub ae_activation: Option<ActivationKind>,
    /// Add a constant hidden unit so the output layer has an intercept.
    #[arg(long)]
    pub intercept: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = elm_ctr::elm::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Train/validation/test ratios, e.g. "0.8,0.1,0.1" or "8/1/1".
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: elm_ctr::SplitSpec,
    /// Shuffle records with this seed before splitting.
    #[arg(long, value_name = "SEED")]
    pub shuffle: Option<u64>,
    /// Threshold for precision/recall/F1: `fixed:<x>` or `tuned`.
    #[arg(long, default_value = "fixed:0.5")]
    pub threshold: ThresholdMode,
    #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
    pub eval_split: EvalSplit,

    #[arg(long, default_value_t = elm_ctr::embedding::DEFAULT_DIM)]
    pub emb_dim: usize,
    /// Hash buckets per embedded field.
    #[arg(long, default_value_t = 1 << 14)]
    pub emb_buckets: usize,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,

    /// Worker threads for parsing and encoding; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    Fixed(f64),
    Tuned,
}

impl std::str::FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "tuned" {
            return Ok(ThresholdMode::Tuned);
        }
        let x = s
            .strip_prefix("fixed:")
            .ok_or_else(|| format!("expected fixed:<x> or tuned, got {s:?}"))?;
        let t: f64 = x.parse().map_err(|_| format!("bad threshold {x:?}"))?;
        if !t.is_finite() {
            return Err(format!("threshold must be finite, got {x}"));
        }
        Ok(ThresholdMode::Fixed(t))
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdMode::Fixed(t) => write!(f, "fixed:{t}"),
            ThresholdMode::Tuned => f.write_str("tuned"),
        }
    }
}

fn parse_head_activation(s: &str) -> Result<ActivationKind, String> {
    match s.parse::<ActivationKind>() {
        Ok(ActivationKind::Identity) => Err("identity is only available for --ae-activation".into()),
        Ok(a) => Ok(a),
        Err(e) => Err(e.to_string()),
    }
}

/// Turns a config file into flag arguments, one `key = value` per line.
/// A bare key is a switch.
pub fn config_file_args(text: &str, path: &Path) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() || key.contains(char::is_whitespace) || key == "config" {
            return Err(CliError::Config(format!(
                "{}:{}: bad config entry {raw:?}",
                path.display(),
                i + 1
            )));
        }
        let key = key.trim_start_matches("--").replace('_', "-");
        out.push(format!("--{key}").into());
        if let Some(v) = value {
            out.push(v.into());
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

/// Parses the command line, splicing in a `--config` file's entries ahead
/// of the explicit flags so that the flags take precedence.
pub fn parse_args<I, T>(argv: I) -> Result<Args, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut full: Vec<OsString> = argv.first().cloned().into_iter().collect();
    if let Some(path) = config_path(&argv) {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        full.extend(config_file_args(&text, &path)?);
    }
    full.extend(argv.into_iter().skip(1));
    Args::try_parse_from(full).map_err(CliError::Usage)
}
