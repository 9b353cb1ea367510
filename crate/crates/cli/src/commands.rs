use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use riskcast_core::data_io::{load_model, save_model, synth_generate, DatasetBundle, ModelFile, SynthConfig};
use riskcast_core::eval::{compare_models, EvalReport};
use riskcast_core::models::{predict_batch, HybridConfig, HybridDims, HybridModel, Model};
use riskcast_core::pipeline::{
    evaluate_model, prepare, split_for_state, train_hybrid, train_linear, transform, PipelineConfig, PipelineState,
};
use riskcast_core::tensor::Distribution;
use riskcast_core::training::{evaluate_mse, gradient_check, GradCheckOptions, GridPoint, TrainConfig, TrainLog};
use riskcast_core::{Error, Result, SeededRng, Tensor};

use crate::{CompareArgs, EvaluateArgs, GenDataArgs, GradcheckArgs, PredictArgs, TrainArgs};

const META_PIPELINE: &str = "pipeline";
const LOG_HEADER: &str = "trial,learning_rate,hidden_size,epoch,train_mse,val_mse\n";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn load_with_state(path: &Path) -> Result<(ModelFile, PipelineState)> {
    let file = load_model(path)?;
    let json = file.meta.get(META_PIPELINE).ok_or_else(|| {
        Error::ModelFormat(format!("{} has no `{META_PIPELINE}` metadata; was it written by `riskcast train`?", path.display()))
    })?;
    let state = PipelineState::from_json(json)?;
    Ok((file, state))
}

fn test_report(file: &ModelFile, state: &PipelineState, bundle: &DatasetBundle, threshold: f64) -> Result<EvalReport> {
    let samples = transform(bundle, state)?;
    let (_, _, test) = split_for_state(&samples, state)?;
    evaluate_model(&file.model, &test, threshold)
}

pub fn gen_data(a: &GenDataArgs) -> Result<bool> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        n_days: a.days,
        seed: a.seed,
        sigma0: a.sigma0.unwrap_or(defaults.sigma0),
        regime_prob: a.regime_prob.unwrap_or(defaults.regime_prob),
        kappa: a.kappa.unwrap_or(defaults.kappa),
        nonlinear: !a.linear,
    };
    let bundle = synth_generate(&cfg)?;
    bundle.write_dir(&a.out)?;
    let mut files = vec!["market.csv", "financial.csv"];
    if bundle.macroeconomic.is_some() {
        files.push("macro.csv");
    }
    files.extend(["news.csv", "policy.csv"]);
    let manifest = serde_json::json!({
        "generator": "synth_generate",
        "seed": cfg.seed,
        "config": cfg,
        "files": files,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Schema(format!("cannot encode manifest: {e}")))?;
    write_file(&a.out.join("manifest.json"), &(text + "\n"))?;
    println!("wrote {} files for {} days to {}", files.len() + 1, cfg.n_days, a.out.display());
    Ok(true)
}

fn parse_list<T: std::str::FromStr>(key: &str, values: &str) -> Result<Vec<T>> {
    values
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Parameter(format!("bad value `{v}` for grid key `{key}`"))))
        .collect()
}

/// `lr=..` and `hidden=..` lists, expanded as a product with lr outermost.
fn parse_grid(specs: &[String], base: &TrainConfig) -> Result<Vec<GridPoint>> {
    let mut lrs = vec![base.learning_rate];
    let mut hiddens = vec![base.hidden_size];
    for spec in specs {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("grid entry `{spec}` is not KEY=V1,V2")))?;
        match key {
            "lr" => lrs = parse_list(key, values)?,
            "hidden" => hiddens = parse_list(key, values)?,
            other => return Err(Error::Parameter(format!("unknown grid key `{other}` (expected lr or hidden)"))),
        }
    }
    Ok(lrs
        .iter()
        .flat_map(|&learning_rate| hiddens.iter().map(move |&hidden_size| GridPoint { learning_rate, hidden_size }))
        .collect())
}

fn log_rows(out: &mut String, trial: usize, lr: f64, hidden: usize, log: &TrainLog) {
    for e in &log.epochs {
        let _ = writeln!(out, "{trial},{lr},{hidden},{},{},{}", e.epoch, e.train_mse, e.val_mse);
    }
}

fn default_log_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".log.csv");
    model.with_file_name(name)
}

pub fn train(a: &TrainArgs) -> Result<bool> {
    let defaults = TrainConfig::default();
    let mut cfg = TrainConfig {
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        hidden_size: a.hidden.unwrap_or(defaults.hidden_size),
        dropout_p: a.dropout.unwrap_or(defaults.dropout_p),
        max_epochs: a.epochs.unwrap_or(defaults.max_epochs),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        patience: a.patience.unwrap_or(defaults.patience),
        seed: a.seed,
        ..defaults
    };
    if !a.grid.is_empty() {
        if a.baseline.is_some() {
            return Err(Error::Parameter("--grid applies to the hybrid model only".into()));
        }
        cfg.grid = parse_grid(&a.grid, &cfg)?;
    }
    cfg.validate()?;
    let pcfg = PipelineConfig {
        window: a.window.unwrap_or(PipelineConfig::default().window),
        horizon: a.horizon.unwrap_or(PipelineConfig::default().horizon),
        ..Default::default()
    };

    let bundle = DatasetBundle::load_dir(&a.data)?;
    let data = prepare(&bundle, &pcfg)?;
    info!(
        "{} samples: {} train, {} validation, {} test",
        data.samples.len(),
        data.train.len(),
        data.val.len(),
        data.test.len()
    );

    let mut log = String::from(LOG_HEADER);
    let mut file;
    if a.baseline.is_some() {
        let model = train_linear(&data)?;
        let train_mse = evaluate_mse(&model, &data.train)?;
        let val_mse = evaluate_mse(&model, &data.val)?;
        let _ = writeln!(log, "0,,,0,{train_mse},{val_mse}");
        println!("linear baseline: train MSE {train_mse:.6}, validation MSE {val_mse:.6}");
        file = ModelFile::new(Model::Linear(model));
        file.meta.insert("val_mse".into(), val_mse.to_string());
    } else {
        let run = train_hybrid(&data, &cfg)?;
        if run.trials.is_empty() {
            log_rows(&mut log, 0, cfg.learning_rate, cfg.hidden_size, &run.log);
        } else {
            for (i, t) in run.trials.iter().enumerate() {
                log_rows(&mut log, i, t.point.learning_rate, t.point.hidden_size, &t.log);
                println!(
                    "trial {i}: lr {} hidden {}: best validation MSE {:.6} after {} epochs",
                    t.point.learning_rate, t.point.hidden_size, t.best_val_mse, t.epochs_run
                );
            }
        }
        let best = run.log.best_val_mse().unwrap_or(f64::NAN);
        println!(
            "hybrid (lr {}, hidden {}): best validation MSE {best:.6} at epoch {} of {}{}",
            run.config.learning_rate,
            run.config.hidden_size,
            run.log.best_epoch.unwrap_or(0),
            run.log.epochs.len(),
            if run.log.stopped_early { ", stopped early" } else { "" }
        );
        file = ModelFile::new(Model::Hybrid(run.model));
        file.meta.insert("val_mse".into(), best.to_string());
        file.meta.insert("learning_rate".into(), run.config.learning_rate.to_string());
        file.meta.insert("hidden_size".into(), run.config.hidden_size.to_string());
        file.meta.insert("epochs".into(), run.log.epochs.len().to_string());
    }
    file.meta.insert("seed".into(), cfg.seed.to_string());
    file.meta.insert(META_PIPELINE.into(), data.state.to_json()?);
    save_model(&a.model, &file)?;
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.model));
    write_file(&log_path, &log)?;
    println!("saved {} and {}", a.model.display(), log_path.display());
    Ok(true)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<bool> {
    let (file, state) = load_with_state(&a.model)?;
    let bundle = DatasetBundle::load_dir(&a.data)?;
    let report = test_report(&file, &state, &bundle, a.threshold)?;
    print!("model      {}\n{}", file.model.kind(), report.to_text());
    if let Some(path) = &a.csv {
        let csv = format!(
            "model,mse,accuracy,r2,n,threshold\n{},{},{},{},{},{}\n",
            file.model.kind(),
            report.mse,
            report.accuracy,
            report.r2,
            report.n,
            report.threshold
        );
        write_file(path, &csv)?;
    }
    Ok(true)
}

pub fn predict(a: &PredictArgs) -> Result<bool> {
    let (file, state) = load_with_state(&a.model)?;
    let bundle = DatasetBundle::load_dir(&a.data)?;
    let mut out = String::from("date,risk_score\n");
    match transform(&bundle, &state) {
        Ok(samples) => {
            for p in predict_batch(&file.model, &samples)? {
                let _ = writeln!(out, "{},{}", p.sample_date, p.risk_score);
            }
        }
        Err(Error::InsufficientData { needed, available }) => {
            warn!("no admissible windows (need {needed} feature rows, have {available}); writing header only");
        }
        Err(e) => return Err(e),
    }
    match &a.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(true)
}

fn row_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for p in paths {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
        let mut name = stem.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{stem}#{k}");
            k += 1;
        }
        names.push(name);
    }
    names
}

pub fn compare(a: &CompareArgs) -> Result<bool> {
    if a.models.len() < 2 {
        return Err(Error::Parameter("compare needs at least two --model files".into()));
    }
    let loaded: Vec<_> = a.models.iter().map(|p| load_with_state(p)).collect::<Result<_>>()?;
    let first = &loaded[0].1;
    for ((_, state), path) in loaded.iter().zip(&a.models).skip(1) {
        if state.split != first.split || state.config != first.config {
            return Err(Error::Contract(format!(
                "{} was trained on a different split than {} ({} vs {} samples, {}..{} vs {}..{})",
                path.display(),
                a.models[0].display(),
                state.split.samples,
                first.split.samples,
                state.split.first_date,
                state.split.last_date,
                first.split.first_date,
                first.split.last_date
            )));
        }
    }
    let bundle = DatasetBundle::load_dir(&a.data)?;
    let mut reports = Vec::new();
    for (name, (file, state)) in row_names(&a.models).into_iter().zip(&loaded) {
        reports.push((name, test_report(file, state, &bundle, a.threshold)?));
    }
    let cmp = compare_models(&reports)?;
    print!("{}", cmp.to_table());
    if let Some(path) = &a.csv {
        write_file(path, &cmp.to_csv())?;
    }
    Ok(true)
}

/// Tiny hybrid for the gradient check: T=4, hidden 3, two conv channels,
/// three static features.
fn tiny_problem(seed: u64) -> Result<(HybridModel, Tensor, Vec<f64>, f64)> {
    let mut rng = SeededRng::new(seed);
    let dims = HybridDims {
        window: 4,
        market: 2,
        sentiment: 4,
        statics: 3,
    };
    let cfg = HybridConfig {
        conv_width: 3,
        conv_channels: 2,
        hidden: 3,
        dropout: 0.2,
    };
    let model = HybridModel::new(dims, &cfg, &mut rng)?;
    let x = Tensor::random(&mut rng, &[dims.window, dims.market + dims.sentiment], Distribution::Normal { mean: 0.0, std_dev: 1.0 })?;
    let s = (0..dims.statics).map(|_| rng.normal(0.0, 1.0)).collect();
    let y = rng.uniform(0.0, 1.0);
    Ok((model, x, s, y))
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<bool> {
    let (model, x, s, y) = tiny_problem(a.seed)?;
    let opts = GradCheckOptions {
        epsilon: a.epsilon,
        corrupt: a.break_layer.clone(),
    };
    let sample = riskcast_core::features::SampleRef { x_seq: &x, x_static: &s, y };
    let r = gradient_check(&model, sample, &opts)?;
    let pass = r.max_rel_error < a.tolerance;
    println!(
        "max relative error {:.6e} at {}[{}] over {} entries: {}",
        r.max_rel_error,
        r.worst_parameter,
        r.worst_index,
        r.checked,
        if pass { "ok" } else { "FAILED" }
    );
    Ok(pass)
}
