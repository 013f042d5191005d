use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use fairattn::data::{
    generate_proxy_variant, generate_synthetic, load_csv, load_schema, split, write_csv,
    write_schema, Dataset, Task,
};
use fairattn::exec::Exec;
use fairattn::metrics::{fairness_report, performance_report};
use fairattn::model::{check_same_schema, ModelConfig};
use fairattn::training::{lambda_sweep, CarForm, LambdaMode, TrainConfig, TrainedModel};
use serde::Serialize;

use crate::manifest::{sibling, write_json, Run};
use crate::{CliError, TaskArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Binary X_1 (sensitive), X_2, X_3 with a binary response.
    Main,
    /// Adds a continuous proxy X_4 of X_1; continuous response.
    Proxy,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "main")]
    variant: Variant,
    /// Dataset CSV; the schema is written next to it as `<stem>.schema.json`.
    #[arg(long)]
    out: PathBuf,
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut run = Run::start("synth", &args, Some(args.seed));
    let ds = match args.variant {
        Variant::Main => generate_synthetic(args.n, args.seed)?,
        Variant::Proxy => generate_proxy_variant(args.n, args.seed)?,
    };
    write_csv(&ds, &args.out)?;
    let schema_path = sibling(&args.out, "schema.json");
    write_schema(ds.schema(), &schema_path)?;
    run.output(&args.out);
    run.output(&schema_path);
    run.finish(&sibling(&args.out, "manifest.json"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CarArg {
    Aug,
    Cda,
    Off,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Must agree with the schema when given.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// CAR form; defaults to `aug`, or `off` with --remove-sensitive.
    #[arg(long, value_enum)]
    car: Option<CarArg>,
    /// `auto` or a non-negative number.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long)]
    residual_attn: bool,
    #[arg(long)]
    remove_sensitive: bool,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON; the epoch log goes to `<stem>.epochs.jsonl`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_lambda(raw: Option<&str>) -> Result<Option<LambdaMode>, CliError> {
    match raw {
        None => Ok(None),
        Some("auto") => Ok(Some(LambdaMode::Auto)),
        Some(v) => match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.is_finite() => Ok(Some(LambdaMode::Fixed(x))),
            _ => Err(CliError::Usage(format!("--lambda expects `auto` or a non-negative number, got `{v}`"))),
        },
    }
}

fn resolve_lambda(args: &TrainArgs) -> Result<(LambdaMode, CarForm), CliError> {
    let lambda = parse_lambda(args.lambda.as_deref())?;
    let car = match (args.remove_sensitive, args.car) {
        (true, Some(CarArg::Aug | CarArg::Cda)) => {
            return Err(CliError::Usage(
                "--car needs the sensitive feature; it cannot be combined with --remove-sensitive".into(),
            ))
        }
        (true, _) => CarArg::Off,
        (false, c) => c.unwrap_or(CarArg::Aug),
    };
    match (car, lambda) {
        (CarArg::Off, None | Some(LambdaMode::Fixed(0.0))) => Ok((LambdaMode::Off, CarForm::Augmented)),
        (CarArg::Off, Some(_)) => Err(CliError::Usage(
            "--lambda other than 0 requires CAR to be enabled".into(),
        )),
        (CarArg::Aug, l) => Ok((l.unwrap_or(LambdaMode::Auto), CarForm::Augmented)),
        (CarArg::Cda, l) => Ok((l.unwrap_or(LambdaMode::Auto), CarForm::Cda)),
    }
}

fn task_of(arg: TaskArg) -> Task {
    match arg {
        TaskArg::Classification => Task::Classification,
        TaskArg::Regression => Task::Regression,
    }
}

fn load_with_schema(data: &Path, schema: &Path, task: Option<TaskArg>) -> Result<Dataset, CliError> {
    let schema = Arc::new(load_schema(schema)?);
    if let Some(t) = task.map(task_of) {
        if t != schema.task() {
            return Err(CliError::Usage(format!(
                "--task {t:?} conflicts with the schema's task {:?}",
                schema.task()
            )));
        }
    }
    Ok(load_csv(data, &schema)?)
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let (lambda, car_form) = resolve_lambda(&args)?;
    let mut run = Run::start("train", &args, Some(args.seed));
    let ds = load_with_schema(&args.data, &args.schema, args.task)?;
    run.input(&args.data);
    run.input(&args.schema);

    let mut model_config = ModelConfig::new(ds.schema().task());
    model_config.n_encoder_layers = args.layers;
    model_config.residual_attention = args.residual_attn;
    model_config.removal_baseline = args.remove_sensitive;
    model_config.init_seed = args.seed;
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        lambda,
        car_form,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let trained = fairattn::training::train(&ds, &config, &model_config)?;

    trained.save(&args.out)?;
    run.output(&args.out);
    let log_path = sibling(&args.out, "epochs.jsonl");
    let mut log = String::new();
    for record in trained.history() {
        log.push_str(&serde_json::to_string(record).expect("loss record serializes"));
        log.push('\n');
    }
    std::fs::write(&log_path, log).map_err(|e| CliError::io(&log_path, e))?;
    run.output(&log_path);
    run.finish(&sibling(&args.out, "manifest.json"))?;

    if let Some(last) = trained.history().last() {
        let line = serde_json::to_string(last).expect("loss record serializes");
        writeln!(std::io::stdout(), "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Optional schema document, checked against the model's schema.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn load_model_and_data(
    model: &Path,
    data: &Path,
    schema: Option<&Path>,
    run: &mut Run,
) -> Result<(TrainedModel, Dataset), CliError> {
    let trained = TrainedModel::load(model)?;
    run.input(model);
    let expected = trained.model().schema_arc().clone();
    if let Some(path) = schema {
        check_same_schema(&expected, &load_schema(path)?)?;
        run.input(path);
    }
    let ds = load_csv(data, &expected)?;
    run.input(data);
    Ok((trained, ds))
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let mut run = Run::start("eval", &args, None);
    let (trained, ds) = load_model_and_data(&args.model, &args.data, args.schema.as_deref(), &mut run)?;
    let report = performance_report(&trained, &ds, Exec::default())?;
    write_json(&args.out, &report)?;
    run.output(&args.out);
    run.finish(&sibling(&args.out, "manifest.json"))
}

pub fn audit(args: EvalArgs) -> Result<(), CliError> {
    let mut run = Run::start("audit", &args, None);
    let (trained, ds) = load_model_and_data(&args.model, &args.data, args.schema.as_deref(), &mut run)?;
    let report = fairness_report(&trained, &ds, Exec::default())?;
    write_json(&args.out, &report)?;
    run.output(&args.out);
    run.finish(&sibling(&args.out, "manifest.json"))
}

#[derive(Debug, Args, Serialize)]
pub struct AttentionArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output directory, created if needed.
    #[arg(long)]
    out: PathBuf,
    /// Also write the matrices of every encoder layer.
    #[arg(long)]
    all_layers: bool,
}

fn write_matrix(path: &Path, names: &[String], m: &[f64]) -> Result<(), CliError> {
    let k = names.len();
    let mut text = names.join(",");
    text.push('\n');
    for row in m.chunks(k) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn attention(args: AttentionArgs) -> Result<(), CliError> {
    let mut run = Run::start("attention", &args, None);
    let (trained, ds) = load_model_and_data(&args.model, &args.data, None, &mut run)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let prepared = trained.prepare(&ds)?;
    let model = trained.model();
    let summary = model.attention_summary(&prepared, Exec::default())?;
    let names = &summary.features;

    let emit = |name: String, m: &[f64], run: &mut Run| -> Result<(), CliError> {
        let path = args.out.join(name);
        write_matrix(&path, names, m)?;
        run.output(path);
        Ok(())
    };
    let first = &summary.layers[0];
    emit("pre_softmax.csv".into(), &first.pre_softmax, &mut run)?;
    emit("post_softmax.csv".into(), &first.post_softmax, &mut run)?;
    if args.all_layers {
        for (l, layer) in summary.layers.iter().enumerate() {
            emit(format!("layer{}_pre_softmax.csv", l + 1), &layer.pre_softmax, &mut run)?;
            emit(format!("layer{}_post_softmax.csv", l + 1), &layer.post_softmax, &mut run)?;
        }
    }
    let profile = model.significance(&prepared, Exec::default())?;
    let path = args.out.join("significance.json");
    write_json(&path, &profile)?;
    run.output(path);
    run.finish(&args.out.join("manifest.json"))
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Comma-separated λ values, at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows used for training; the rest is the evaluation split.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, value_enum, default_value = "aug")]
    car: CarArg,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Sweep table CSV; full reports go to `<stem>.json`.
    #[arg(long)]
    out: PathBuf,
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("FAIRATTN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("FAIRATTN_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let car_form = match args.car {
        CarArg::Aug => CarForm::Augmented,
        CarArg::Cda => CarForm::Cda,
        CarArg::Off => return Err(CliError::Usage("a λ sweep needs CAR (--car aug or cda)".into())),
    };
    let threads = thread_cap()?;
    let mut run = Run::start("sweep", &args, Some(args.seed));
    let ds = load_with_schema(&args.data, &args.schema, None)?;
    run.input(&args.data);
    run.input(&args.schema);
    let (train_ds, eval_ds) = split(&ds, args.train_fraction, args.seed)?;

    let mut model_config = ModelConfig::new(ds.schema().task());
    model_config.n_encoder_layers = args.layers;
    model_config.init_seed = args.seed;
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        car_form,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let go = || lambda_sweep(&train_ds, &eval_ds, &args.lambdas, &config, &model_config, Exec::Parallel);
    let table = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(go)?,
        None => go()?,
    };

    table.write_csv(&args.out)?;
    run.output(&args.out);
    let json_path = sibling(&args.out, "json");
    write_json(&json_path, &table)?;
    run.output(&json_path);
    run.finish(&sibling(&args.out, "manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_parsing() {
        assert_eq!(parse_lambda(Some("auto")).unwrap(), Some(LambdaMode::Auto));
        assert_eq!(parse_lambda(Some("2.5")).unwrap(), Some(LambdaMode::Fixed(2.5)));
        assert_eq!(parse_lambda(None).unwrap(), None);
        for bad in ["-1", "nan", "inf", "x"] {
            assert!(matches!(parse_lambda(Some(bad)), Err(CliError::Usage(_))));
        }
    }
}
