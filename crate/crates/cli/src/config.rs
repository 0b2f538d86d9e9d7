//! Validated run configuration. Everything here is checked before any
//! dataset byte is read.

use std::fmt::Write as _;
use std::path::PathBuf;

use elm_ctr::{ActivationKind, ElmConfig, FeatureSchema, MlElmConfig, SplitSpec};

use crate::args::{Args, EvalSplit, Mode, ThresholdMode};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Predict,
    PretrainEmb,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Predict => "predict",
            Command::PretrainEmb => "pretrain-emb",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub data: PathBuf,
    pub schema_path: Option<PathBuf>,
    pub schema: FeatureSchema,
    pub mode: Mode,
    pub emb_table: Option<PathBuf>,
    pub hash_dims: usize,
    pub layers: Vec<usize>,
    pub elm: ElmConfig,
    pub lambda_ae: f64,
    pub ae_activation: ActivationKind,
    pub split: SplitSpec,
    pub threshold: ThresholdMode,
    pub eval_split: EvalSplit,
    pub emb_dim: usize,
    pub emb_buckets: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub model_in: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
    pub scores_out: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
    pub threads: usize,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses "500;500" (commas also accepted) into positive widths.
pub fn parse_layers(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split([';', ','])
        .map(|w| match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(config_err(format!("--layers: bad width {w:?} in {s:?}"))),
        })
        .collect()
}

fn check_penalty(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let command = match (args.train, args.eval, args.predict, args.pretrain_emb) {
            (true, _, _, _) => Command::Train,
            (_, true, _, _) => Command::Eval,
            (_, _, true, _) => Command::Predict,
            _ => Command::PretrainEmb,
        };
        let data = args
            .data
            .clone()
            .ok_or_else(|| config_err(format!("--{} needs --data", command.name())))?;
        let schema = match &args.schema {
            Some(p) => FeatureSchema::load(p).map_err(|e| config_err(e.to_string()))?,
            None => FeatureSchema::criteo(),
        };

        for (name, v) in [
            ("--hash-dims", args.hash_dims),
            ("--hidden", args.hidden),
            ("--batch-size", args.batch_size),
            ("--emb-dim", args.emb_dim),
            ("--emb-buckets", args.emb_buckets),
            ("--epochs", args.epochs),
        ] {
            if v == 0 {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if args.hash_dims > u32::MAX as usize {
            return Err(config_err("--hash-dims must fit in 32 bits"));
        }
        check_penalty("--lambda", args.lambda)?;
        let lambda_ae = args.lambda_ae.unwrap_or(args.lambda);
        check_penalty("--lambda-ae", lambda_ae)?;
        check_penalty("--learning-rate", args.learning_rate)?;
        let layers = parse_layers(args.layers.as_deref().unwrap_or(""))?;

        match command {
            Command::Train => {}
            Command::Eval | Command::Predict => {
                if args.model_in.is_none() {
                    return Err(config_err(format!("--{} needs --model-in", command.name())));
                }
            }
            Command::PretrainEmb => {
                if args.emb_table.is_none() {
                    return Err(config_err("--pretrain-emb needs --emb-table for its output"));
                }
            }
        }
        if command == Command::Predict && args.scores_out.is_none() {
            return Err(config_err("--predict needs --scores-out (use - for stdout)"));
        }
        if args.mode == Mode::Embedded && command != Command::PretrainEmb && args.emb_table.is_none() {
            return Err(config_err("embedded mode needs --emb-table"));
        }

        let elm = ElmConfig {
            hidden: args.hidden,
            activation: args.activation,
            lambda: args.lambda,
            seed: args.seed,
            batch_size: args.batch_size,
            constant_unit: args.intercept,
        };
        let split = match args.shuffle {
            Some(s) => args.split.with_shuffle(s),
            None => args.split,
        };
        Ok(RunConfig {
            command,
            data,
            schema_path: args.schema.clone(),
            schema,
            mode: args.mode,
            emb_table: args.emb_table.clone(),
            hash_dims: args.hash_dims,
            layers,
            elm,
            lambda_ae,
            ae_activation: args.ae_activation.unwrap_or(args.activation),
            split,
            threshold: args.threshold,
            eval_split: args.eval_split,
            emb_dim: args.emb_dim,
            emb_buckets: args.emb_buckets,
            learning_rate: args.learning_rate,
            epochs: args.epochs,
            model_in: args.model_in.clone(),
            model_out: args.model_out.clone(),
            scores_out: args.scores_out.clone(),
            metrics_out: args.metrics_out.clone(),
            threads: args.threads,
        })
    }

    pub fn model_kind(&self) -> &'static str {
        if self.layers.is_empty() {
            "elm"
        } else {
            "ml-elm"
        }
    }

    pub fn ml_elm(&self) -> MlElmConfig {
        let mut c = MlElmConfig::new(self.layers.clone(), self.elm.clone());
        c.lambda_ae = self.lambda_ae;
        c.ae_activation = Some(self.ae_activation);
        c
    }

    /// Settings in effect, as `(key, value)` pairs.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let layers = if self.layers.is_empty() {
            "-".to_string()
        } else {
            self.layers.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
        };
        vec![
            ("command", self.command.name().to_string()),
            ("data", self.data.display().to_string()),
            (
                "schema",
                self.schema_path
                    .as_ref()
                    .map_or("criteo (built in)".to_string(), |p| p.display().to_string()),
            ),
            ("fields", self.schema.field_count().to_string()),
            ("model", self.model_kind().to_string()),
            ("mode", format!("{:?}", self.mode).to_lowercase()),
            (
                "hash_dims",
                match self.command {
                    Command::Eval | Command::Predict => "from model".to_string(),
                    _ => self.hash_dims.to_string(),
                },
            ),
            ("emb_table", path(&self.emb_table)),
            ("emb_dim", self.emb_dim.to_string()),
            ("hidden", self.elm.hidden.to_string()),
            ("layers", layers),
            ("activation", self.elm.activation.to_string()),
            ("ae_activation", self.ae_activation.to_string()),
            ("lambda", self.elm.lambda.to_string()),
            ("lambda_ae", self.lambda_ae.to_string()),
            ("intercept", self.elm.constant_unit.to_string()),
            ("seed", self.elm.seed.to_string()),
            ("batch_size", self.elm.batch_size.to_string()),
            ("split", self.split.to_string()),
            (
                "shuffle",
                self.split.shuffle_seed().map_or("none".to_string(), |s| s.to_string()),
            ),
            ("threshold", self.threshold.to_string()),
        ]
    }

    pub fn echo_text(&self) -> String {
        let mut out = String::from("[config]\n");
        for (k, v) in self.echo() {
            let _ = writeln!(out, "{k:<14} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::parse_args;

    fn config(extra: &[&str]) -> Result<RunConfig, CliError> {
        let mut argv = vec!["elm-ctr"];
        argv.extend_from_slice(extra);
        RunConfig::from_args(&parse_args(argv)?)
    }

    #[test]
    fn layer_lists() {
        assert_eq!(parse_layers("500;500").unwrap(), vec![500, 500]);
        assert_eq!(parse_layers("64,32").unwrap(), vec![64, 32]);
        assert_eq!(parse_layers("").unwrap(), Vec::<usize>::new());
        assert!(parse_layers("500;0").is_err());
        assert!(parse_layers("a").is_err());
    }

    #[test]
    fn named_errors() {
        let msg = |r: Result<RunConfig, CliError>| r.unwrap_err().to_string();
        assert!(msg(config(&["--train"])).contains("--data"));
        assert!(msg(config(&["--train", "--data", "x", "--mode", "embedded"])).contains("--emb-table"));
        assert!(msg(config(&["--eval", "--data", "x"])).contains("--model-in"));
        assert!(msg(config(&["--predict", "--data", "x", "--model-in", "m"])).contains("--scores-out"));
        assert!(msg(config(&["--pretrain-emb", "--data", "x"])).contains("--emb-table"));
        assert!(msg(config(&["--train", "--data", "x", "--lambda", "-1"])).contains("--lambda"));
        assert!(msg(config(&["--train", "--data", "x", "--hidden", "0"])).contains("--hidden"));
    }

    #[test]
    fn default_echo() {
        let c = config(&["--train", "--data", "x"]).unwrap();
        let echo: std::collections::HashMap<_, _> = c.echo().into_iter().collect();
        assert_eq!(echo["hidden"], "1000");
        assert_eq!(echo["activation"], "relu");
        assert_eq!(echo["batch_size"], "10000");
        assert_eq!(echo["emb_dim"], "8");
        assert_eq!(echo["split"], "0.8,0.1,0.1");
        assert_eq!(echo["model"], "elm");
        assert_eq!(echo["fields"], "39");
        let c = config(&["--train", "--data", "x", "--layers", "500;500"]).unwrap();
        assert_eq!(c.model_kind(), "ml-elm");
        assert_eq!(c.ml_elm().ae_layers, vec![500, 500]);
    }
}
