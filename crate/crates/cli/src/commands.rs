use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use elm_ctr::metrics::{tune_threshold, DEFAULT_THRESHOLD};
use elm_ctr::{
    load_embeddings, load_model, pretrain_embeddings, save_embeddings, split_dataset, train_elm, train_ml_elm,
    Dataset, ElmError, EmbeddingTable, MetricReport, PretrainConfig, SavedModel, Splits, Subset, TimingReport,
};

use crate::args::{EvalSplit, Mode, ThresholdMode};
use crate::config::{Command, RunConfig};
use crate::data::{load_embedded, load_hashed, permute, read_records};
use crate::error::CliError;
use crate::report::{metric_table, timing_table, KeyValues};

type Out<'a> = &'a mut dyn Write;

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Run(ElmError::io("<report>", e)))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Run(ElmError::io(path, e)))
}

pub fn run(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    emit(out, &cfg.echo_text())?;
    let mut kv = KeyValues::default();
    for (k, v) in cfg.echo() {
        kv.push(&format!("config.{k}"), v);
    }
    match cfg.command {
        Command::Train => train(cfg, out, &mut kv)?,
        Command::Eval => eval(cfg, out, &mut kv)?,
        Command::Predict => predict(cfg, out)?,
        Command::PretrainEmb => pretrain(cfg, out, &mut kv)?,
    }
    if let Some(path) = &cfg.metrics_out {
        write_file(path, &std::mem::take(&mut kv).into_string())?;
    }
    Ok(())
}

fn load_table(cfg: &RunConfig) -> Result<EmbeddingTable, CliError> {
    let path = cfg.emb_table.as_ref().expect("validated: embedded mode has a table");
    let table = load_embeddings(path)?;
    if table.field_count() != cfg.schema.field_count() {
        return Err(ElmError::Shape(format!(
            "embedding table has {} fields, schema has {}",
            table.field_count(),
            cfg.schema.field_count()
        ))
        .into());
    }
    Ok(table)
}

/// Fixed-threshold row, plus a tuned row when the labels allow one. The
/// configured mode picks which row is primary.
fn metric_rows(
    name: &str,
    scores: &[f64],
    labels: &[u8],
    mode: ThresholdMode,
) -> elm_ctr::Result<(Vec<(String, MetricReport)>, MetricReport)> {
    let fixed_t = match mode {
        ThresholdMode::Fixed(t) => t,
        ThresholdMode::Tuned => DEFAULT_THRESHOLD,
    };
    let fixed = MetricReport::compute(scores, labels, fixed_t)?;
    let mut rows = vec![(format!("{name}@fixed"), fixed.clone())];
    let tuned = tune_threshold(scores, labels).and_then(|t| MetricReport::compute(scores, labels, t));
    if let Ok(t) = &tuned {
        rows.push((format!("{name}@tuned"), t.clone()));
    }
    let primary = match mode {
        ThresholdMode::Fixed(_) => fixed,
        ThresholdMode::Tuned => tuned?,
    };
    Ok((rows, primary))
}

fn report_metrics(
    out: Out,
    kv: &mut KeyValues,
    name: &str,
    scores: &[f64],
    labels: &[u8],
    mode: ThresholdMode,
) -> elm_ctr::Result<Result<(), CliError>> {
    let (rows, primary) = metric_rows(name, scores, labels, mode)?;
    kv.push_raw(&primary.key_values(&format!("{name}.")));
    Ok(emit(out, &metric_table(&rows)))
}

fn split_line(splits: &Splits) -> String {
    let [a, b, c] = splits.sizes();
    format!("[split]\ntrain = {a}\nvalidation = {b}\ntest = {c}\n")
}

fn train(cfg: &RunConfig, out: Out, kv: &mut KeyValues) -> Result<(), CliError> {
    let shuffle = cfg.split.shuffle_seed();
    match cfg.mode {
        Mode::Hashed => {
            let data = load_hashed(&cfg.data, &cfg.schema, cfg.hash_dims, cfg.elm.seed, shuffle)?;
            let labels = data.labels();
            train_on(cfg, &data, &labels, out, kv)
        }
        Mode::Embedded => {
            let data = load_embedded(&cfg.data, &cfg.schema, load_table(cfg)?, shuffle)?;
            train_on(cfg, &data, data.labels(), out, kv)
        }
    }
}

fn train_on<D: Dataset>(
    cfg: &RunConfig,
    data: &D,
    labels: &[u8],
    out: Out,
    kv: &mut KeyValues,
) -> Result<(), CliError> {
    let splits = split_dataset(data.len(), &cfg.split)?;
    emit(out, &split_line(&splits))?;
    let train = Subset::new(data, splits.train.clone())?;
    let (model, timing): (SavedModel, TimingReport) = if cfg.layers.is_empty() {
        let (m, t) = train_elm(&train, &cfg.elm)?;
        (m.into(), t)
    } else {
        let (m, t) = train_ml_elm(&train, &cfg.ml_elm())?;
        (m.into(), t)
    };
    if let Some(path) = &cfg.model_out {
        model.save(path)?;
    }
    if !splits.validation.is_empty() {
        let val = Subset::new(data, splits.validation.clone())?;
        let scores = model.scores(&val, cfg.elm.batch_size)?;
        let labels = &labels[splits.validation.clone()];
        match report_metrics(out, kv, "validation", &scores, labels, cfg.threshold) {
            Ok(written) => written?,
            Err(e) => emit(out, &format!("[metrics]\nvalidation metrics unavailable: {e}\n"))?,
        }
    }
    emit(out, &timing_table(&timing))?;
    kv.timing(&timing);
    Ok(())
}

fn eval_range(cfg: &RunConfig, n: usize) -> Result<Range<usize>, CliError> {
    if cfg.eval_split == EvalSplit::All {
        return Ok(0..n);
    }
    let s = split_dataset(n, &cfg.split)?;
    Ok(match cfg.eval_split {
        EvalSplit::Train => s.train,
        EvalSplit::Validation => s.validation,
        _ => s.test,
    })
}

fn model_line(model: &SavedModel) -> String {
    let kind = match model {
        SavedModel::Elm(_) => "elm",
        SavedModel::MlElm(_) => "ml-elm",
    };
    format!(
        "[model]\nkind = {kind}\ninput_dim = {}\nactivation = {}\nseed = {}\n",
        model.input_dim(),
        model.activation(),
        model.seed()
    )
}

fn eval(cfg: &RunConfig, out: Out, kv: &mut KeyValues) -> Result<(), CliError> {
    let model = load_model(cfg.model_in.as_ref().expect("validated"))?;
    emit(out, &model_line(&model))?;
    let shuffle = cfg.split.shuffle_seed();
    match cfg.mode {
        Mode::Hashed => {
            let data = load_hashed(&cfg.data, &cfg.schema, model.input_dim(), model.seed(), shuffle)?;
            let labels = data.labels();
            eval_on(cfg, &model, &data, &labels, out, kv)
        }
        Mode::Embedded => {
            let data = load_embedded(&cfg.data, &cfg.schema, load_table(cfg)?, shuffle)?;
            eval_on(cfg, &model, &data, data.labels(), out, kv)
        }
    }
}

fn check_dims(model: &SavedModel, dim: usize) -> Result<(), CliError> {
    if model.input_dim() != dim {
        return Err(ElmError::Shape(format!(
            "model expects {} input features, data provides {dim}",
            model.input_dim()
        ))
        .into());
    }
    Ok(())
}

fn eval_on<D: Dataset>(
    cfg: &RunConfig,
    model: &SavedModel,
    data: &D,
    labels: &[u8],
    out: Out,
    kv: &mut KeyValues,
) -> Result<(), CliError> {
    check_dims(model, data.dim())?;
    let range = eval_range(cfg, data.len())?;
    let name = format!("{:?}", cfg.eval_split).to_lowercase();
    let subset = Subset::new(data, range.clone())?;
    let scores = model.scores(&subset, cfg.elm.batch_size)?;
    report_metrics(out, kv, &name, &scores, &labels[range], cfg.threshold)??;
    Ok(())
}

fn predict(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let model = load_model(cfg.model_in.as_ref().expect("validated"))?;
    emit(out, &model_line(&model))?;
    let scores = match cfg.mode {
        Mode::Hashed => {
            let data = load_hashed(&cfg.data, &cfg.schema, model.input_dim(), model.seed(), None)?;
            model.scores(&data, cfg.elm.batch_size)?
        }
        Mode::Embedded => {
            let data = load_embedded(&cfg.data, &cfg.schema, load_table(cfg)?, None)?;
            check_dims(&model, data.dim())?;
            model.scores(&data, cfg.elm.batch_size)?
        }
    };
    let mut text = String::with_capacity(scores.len() * 20);
    for s in &scores {
        text.push_str(&s.to_string());
        text.push('\n');
    }
    let path = cfg.scores_out.as_ref().expect("validated");
    if path.as_os_str() == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Run(ElmError::io("<stdout>", e)))?;
    } else {
        write_file(path, &text)?;
    }
    emit(out, &format!("[predict]\nscores = {}\n", scores.len()))
}

fn pretrain(cfg: &RunConfig, out: Out, kv: &mut KeyValues) -> Result<(), CliError> {
    let started = Instant::now();
    let mut records = read_records(&cfg.data, &cfg.schema)?;
    if let Some(s) = cfg.split.shuffle_seed() {
        records = permute(records, s);
    }
    let splits = split_dataset(records.len(), &cfg.split)?;
    emit(out, &split_line(&splits))?;
    let pc = PretrainConfig {
        dim: cfg.emb_dim,
        buckets: vec![cfg.emb_buckets],
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        seed: cfg.elm.seed,
    };
    let p = pretrain_embeddings(&records[splits.train.clone()], &pc)?;
    save_embeddings(&p.table, cfg.emb_table.as_ref().expect("validated"))?;
    let losses = &p.step_losses;
    let decile = (losses.len() / 10).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (first, last) = (mean(&losses[..decile]), mean(&losses[losses.len() - decile..]));
    emit(
        out,
        &format!("[pretrain]\nsteps = {}\nloss_first_decile = {first:.6}\nloss_last_decile = {last:.6}\n", losses.len()),
    )?;
    kv.push("pretrain.steps", losses.len());
    kv.push("pretrain.loss_first_decile", first);
    kv.push("pretrain.loss_last_decile", last);
    if !splits.validation.is_empty() {
        let val = &records[splits.validation.clone()];
        let scores = val.iter().map(|r| p.probability(r)).collect::<elm_ctr::Result<Vec<_>>>()?;
        let labels: Vec<u8> = val.iter().map(|r| r.label).collect();
        match report_metrics(out, kv, "validation", &scores, &labels, cfg.threshold) {
            Ok(written) => written?,
            Err(e) => emit(out, &format!("[metrics]\nvalidation metrics unavailable: {e}\n"))?,
        }
    }
    let total = started.elapsed().as_secs_f64();
    kv.push("pretrain.total_seconds", total);
    emit(out, &format!("[timing]\ntotal_seconds = {total:.3}\n"))
}
