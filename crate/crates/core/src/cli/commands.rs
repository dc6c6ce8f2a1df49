use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::args::*;
use super::parse_grid;
use crate::clustering::{fit_median_of_trials, ClusterFit, FitConfig, FmmPriors, LdaParams};
use crate::dataset::{split_dataset, Dataset, SplitRatios};
use crate::error::{Error, Result};
use crate::io::{load_dataset, to_csv, to_jsonl, write_atomic, DatasetFormat};
use crate::nbp::{build_nbp_pooling, neighborhood_profile, NbpConfig, NeighborhoodStats};
use crate::pooling::Pooling;
use crate::predict::{evaluate, features_of, refined_targets, train, SoftmaxModel, TrainConfig};
use crate::report::report_label_histogram;
use crate::samplers::{
    bootstrap_sampler, cluster_sampler, generate_population_sample, nbp_sampler, GenerativeConfig, SamplerKind,
};
use crate::selection::{select_cluster_count, select_radius, ClusterSelection, Loss, RadiusSelection, SelectionReport};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Contents of a pooling file written by `pool nbp` or `pool cluster`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolingFile {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub pooling: Pooling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<NeighborhoodStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<ClusterFit>,
}

impl PoolingFile {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Contents of a model file written by `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub labels: Vec<String>,
    pub model: SoftmaxModel,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Dataset output in the format implied by the extension; CSV gets the
/// config as `#` lines since it has no header object.
fn write_dataset(path: &Path, dataset: &Dataset, command: &str, config: &Value) -> Result<()> {
    let text = match DatasetFormat::from_path(path) {
        DatasetFormat::Csv => {
            let mut out: String = csv_preamble(command, config)
                .iter()
                .map(|l| format!("# {l}\n"))
                .collect();
            out.push_str(&to_csv(dataset)?);
            out
        }
        DatasetFormat::Jsonl => to_jsonl(dataset, Some(&header(command, config)))?,
    };
    write_atomic(path, text.as_bytes())
}

fn load(data: &Path, format: Option<DatasetFormat>) -> Result<Dataset> {
    load_dataset(data, format.unwrap_or_else(|| DatasetFormat::from_path(data)))
}

fn config_of<T: Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn csv_preamble(command: &str, config: &Value) -> Vec<String> {
    vec![format!("pldl {VERSION} {command}"), format!("config {config}")]
}

fn echo(value: Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("json values serialize")
    );
}

pub(super) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(&a),
        Command::Pool(PoolCommand::Nbp(a)) => pool_nbp(&a),
        Command::Pool(PoolCommand::Profile(a)) => pool_profile(&a),
        Command::Pool(PoolCommand::Cluster(a)) => pool_cluster(&a),
        Command::Select(SelectCommand::Clusters(a)) => select_clusters(&a),
        Command::Select(SelectCommand::Radius(a)) => select_radius_cmd(&a),
        Command::Sample(a) => sample(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Report(a) => report(&a),
    }
}

fn parse_ratios(text: &str) -> Result<SplitRatios> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidConfig(format!("bad ratios {text:?}; use train:dev:test")))?;
    let [train, dev, test] = parts[..] else {
        return Err(Error::InvalidConfig(format!("bad ratios {text:?}; use train:dev:test")));
    };
    Ok(SplitRatios { train, dev, test })
}

fn header(command: &str, config: &Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), config.clone());
    m
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    write_dataset(&a.out, &data, "ingest", &config)?;
    let mut summary = json!({
        "command": "ingest",
        "config": config,
        "n": data.len(),
        "d": data.num_labels(),
        "labels": data.label_space().names(),
        "uniform_m": data.uniform_votes(),
        "feature_dim": data.feature_dim(),
    });
    if let Some(dir) = &a.split_dir {
        let (tr, dev, te) = split_dataset(&data, parse_ratios(&a.ratios)?, a.seed)?;
        for (name, part) in [("train", &tr), ("dev", &dev), ("test", &te)] {
            write_dataset(&dir.join(format!("{name}.jsonl")), part, "ingest", &config)?;
        }
        summary["split"] = json!({"train": tr.len(), "dev": dev.len(), "test": te.len()});
    }
    echo(summary);
    Ok(())
}

fn pool_nbp(a: &NbpArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let nbp = NbpConfig {
        radius: a.radius,
        measure: a.measure,
        comparison_alpha: a.comparison_alpha,
        alpha: a.alpha,
    };
    let (pooling, stats) = build_nbp_pooling(&data, &nbp)?;
    echo(json!({
        "command": "pool nbp",
        "config": config,
        "p": pooling.num_pools(),
        "n_median": stats.median,
        "n_max": stats.maximum,
    }));
    write_json(
        &a.out,
        &PoolingFile {
            version: VERSION.into(),
            command: "pool nbp".into(),
            config,
            pooling,
            stats: Some(stats),
            fit: None,
        },
    )
}

fn pool_profile(a: &ProfileArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let mut nbp = NbpConfig::new(0.0).with_measure(a.measure);
    nbp.comparison_alpha = a.comparison_alpha;
    let rows = neighborhood_profile(&data, &parse_grid(&a.grid)?, &nbp, a.loss_alpha)?;
    let mut out = String::new();
    for line in csv_preamble("pool profile", &config) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("r,mean_kl,n_median,n_max\n");
    for r in &rows {
        out.push_str(&format!("{:.6},{:.6},{:.6},{}\n", r.r, r.mean_kl, r.n_median, r.n_max));
    }
    write_atomic(&a.out, out.as_bytes())?;
    echo(json!({"command": "pool profile", "config": config, "rows": rows.len()}));
    Ok(())
}

fn fit_config(p: usize, seed: u64, f: &FitArgs) -> FitConfig {
    FitConfig {
        p,
        max_iter: f.max_iter,
        tol: f.tol,
        seed,
        fmm: FmmPriors {
            gamma_pi: f.gamma_pi,
            gamma_phi: f.gamma_phi,
        },
        lda: LdaParams {
            alpha: f.lda_alpha,
            beta: f.lda_beta,
            sweeps: f.sweeps,
            burn_in: f.burn_in,
        },
        variance_floor: FitConfig::new(p, seed).variance_floor,
    }
}

fn pool_cluster(a: &ClusterArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let loss = Loss::new(a.loss, a.loss_alpha);
    let fit = fit_median_of_trials(&data, a.model, &fit_config(a.p, a.seed, &a.fit), a.trials, &loss)?;
    let pooling = fit.pooling(&data, a.alpha)?;
    echo(json!({
        "command": "pool cluster",
        "config": config,
        "selected_seed": fit.seed,
        "objective": fit.objective,
        "converged": fit.converged,
        "pool_sizes": pooling.pool_sizes(),
        "loss": loss.evaluate(&pooling, &data)?,
    }));
    if !fit.converged {
        eprintln!("warning: selected fit reached max_iter before converging");
    }
    write_json(
        &a.out,
        &PoolingFile {
            version: VERSION.into(),
            command: "pool cluster".into(),
            config,
            pooling,
            stats: None,
            fit: Some(fit),
        },
    )
}

fn write_report(dir: &Path, command: &str, config: &Value, report: &SelectionReport) -> Result<()> {
    write_atomic(
        dir.join("selection.csv"),
        report.to_csv(&csv_preamble(command, config))?.as_bytes(),
    )?;
    write_json(
        &dir.join("selection.json"),
        &json!({
            "version": VERSION,
            "command": command,
            "config": config,
            "chosen": report.chosen,
            "report": report,
        }),
    )?;
    let mut summary = json!({
        "command": command,
        "config": config,
        "chosen": report.chosen,
        "failed": report.failed,
    });
    if let Some(e) = &report.elbow {
        summary["no_elbow"] = json!(e.no_elbow);
    }
    echo(summary);
    Ok(())
}

fn select_clusters(a: &SelectClustersArgs) -> Result<()> {
    let config = config_of(a)?;
    if a.p_min == 0 || a.p_max < a.p_min {
        return Err(Error::InvalidConfig("need 1 <= p_min <= p_max".into()));
    }
    let data = load(&a.input.data, a.input.format)?;
    let sel = ClusterSelection {
        p_grid: (a.p_min..=a.p_max).collect(),
        trials: a.trials,
        loss: Loss::new(a.loss, a.loss_alpha),
        b: a.b,
        seed: a.seed,
        fit: fit_config(a.p_min, a.seed, &a.fit),
        weights: a.weights,
        criterion: a.criterion,
        bootstrap_comparison: !a.no_bootstrap,
    };
    let report = select_cluster_count(&data, a.model, &sel)?;
    write_report(&a.out_dir, "select clusters", &config, &report)
}

fn select_radius_cmd(a: &SelectRadiusArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let mut nbp = NbpConfig::new(0.0).with_measure(a.measure);
    nbp.comparison_alpha = a.comparison_alpha;
    let sel = RadiusSelection {
        r_grid: parse_grid(&a.grid)?,
        sampler: a.sampler,
        loss: Loss::new(a.loss, a.loss_alpha),
        b: a.b,
        seed: a.seed,
        nbp,
    };
    let report = select_radius(&data, &sel)?;
    write_report(&a.out_dir, "select radius", &config, &report)
}

/// Dataset named in a pooling file's configuration.
fn data_from_pooling(file: &PoolingFile) -> Result<PathBuf> {
    file.config
        .get("data")
        .and_then(Value::as_str)
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidConfig("pooling file does not name its dataset; pass --data".into()))
}

fn sample(a: &SampleArgs) -> Result<()> {
    let config = config_of(a)?;
    let pooling_file = a.pooling.as_deref().map(PoolingFile::read).transpose()?;
    let reference = match (&a.data, &pooling_file) {
        (Some(d), _) => Some(load(d, a.format)?),
        (None, Some(f)) if a.generator != SamplerKind::Population => Some(load(&data_from_pooling(f)?, None)?),
        _ => None,
    };
    let votes = |reference: Option<&Dataset>| -> Result<Vec<u64>> {
        match (a.n, a.m, reference) {
            (n, Some(m), r) => {
                let n = n
                    .or(r.map(Dataset::len))
                    .ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
                Ok(vec![m; n])
            }
            (n, None, Some(r)) => {
                let v = r.votes();
                Ok((0..n.unwrap_or(v.len())).map(|i| v[i % v.len()]).collect())
            }
            (_, None, None) => Err(Error::InvalidConfig(
                "--m is required without a reference dataset".into(),
            )),
        }
    };
    let need_pooling = || {
        pooling_file
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("generator {} needs --pooling", a.generator)))
    };
    let need_data = || {
        reference
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("generator {} needs --data", a.generator)))
    };
    let dataset = match a.generator {
        SamplerKind::Population => {
            let path = a
                .population
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("generator population needs --population".into()))?;
            let mut gen: GenerativeConfig = read_json(path)?;
            if let Some(n) = a.n {
                gen.n = n;
            }
            if let Some(m) = a.m {
                gen.votes = crate::samplers::VotesPerItem::Uniform(m);
            }
            generate_population_sample(&gen, a.seed)?
        }
        SamplerKind::Cluster => {
            let file = need_pooling()?;
            let fit = file
                .fit
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("cluster generator needs a pooling from `pool cluster`".into()))?;
            let data = need_data()?;
            cluster_sampler(fit, &file.pooling, &votes(Some(data))?, a.seed, a.weights)?
                .to_dataset(data.label_space().clone())?
        }
        SamplerKind::Nbp => {
            let file = need_pooling()?;
            let data = need_data()?;
            nbp_sampler(&file.pooling, &votes(Some(data))?, a.seed)?.to_dataset(data.label_space().clone())?
        }
        SamplerKind::Bootstrap => {
            let data = need_data()?;
            bootstrap_sampler(data, &votes(Some(data))?, a.seed)?.to_dataset(data.label_space().clone())?
        }
    };
    write_dataset(&a.out, &dataset, "sample", &config)?;
    echo(json!({"command": "sample", "config": config, "n": dataset.len(), "d": dataset.num_labels()}));
    Ok(())
}

fn targets(data: &Dataset, pooling: Option<&Path>) -> Result<Vec<crate::labels::LabelDistribution>> {
    match pooling {
        Some(p) => refined_targets(data, &PoolingFile::read(p)?.pooling),
        None => data.distributions(0.0),
    }
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let features = features_of(&data)?;
    let targets = targets(&data, a.pooling.as_deref())?;
    let model = train(
        &features,
        &targets,
        TrainConfig {
            learning_rate: a.lr,
            epochs: a.epochs,
            seed: a.seed,
        },
    )?;
    echo(json!({
        "command": "train",
        "config": config,
        "initial_loss": model.loss_history.first(),
        "final_loss": model.loss_history.last(),
    }));
    write_json(
        &a.out,
        &ModelFile {
            version: VERSION.into(),
            command: "train".into(),
            config,
            labels: data.label_space().names().to_vec(),
            model,
        },
    )
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let config = config_of(a)?;
    let data = load(&a.input.data, a.input.format)?;
    let file: ModelFile = read_json(&a.model)?;
    if file.labels != data.label_space().names() {
        return Err(Error::Validation("model and dataset label spaces differ".into()));
    }
    let metrics = evaluate(
        &file.model,
        &features_of(&data)?,
        &targets(&data, a.pooling.as_deref())?,
    )?;
    let out = json!({
        "version": VERSION,
        "command": "evaluate",
        "config": config,
        "mean_kl": metrics.mean_kl,
        "accuracy": metrics.accuracy,
        "n": metrics.n,
    });
    match &a.out {
        Some(path) => {
            write_json(path, &out)?;
            echo(json!({"mean_kl": metrics.mean_kl, "accuracy": metrics.accuracy}));
        }
        None => echo(out),
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let config = config_of(a)?;
    let pooling_file = a.pooling.as_deref().map(PoolingFile::read).transpose()?;
    let data_path = match (&a.data, &pooling_file) {
        (Some(d), _) => d.clone(),
        (None, Some(f)) => data_from_pooling(f)?,
        (None, None) => return Err(Error::InvalidConfig("report needs --data or --pooling".into())),
    };
    let data = load(&data_path, a.format)?;
    let rows = report_label_histogram(&data);
    let refined_mean: Option<Vec<f64>> = match &pooling_file {
        Some(f) => {
            if f.pooling.num_items() != data.len() {
                return Err(Error::DimensionMismatch {
                    expected: data.len(),
                    found: f.pooling.num_items(),
                });
            }
            let mut mean = vec![0.0; data.num_labels()];
            for i in 0..data.len() {
                for (m, v) in mean.iter_mut().zip(f.pooling.refined_for_item(i).iter()) {
                    *m += v / data.len() as f64;
                }
            }
            Some(mean)
        }
        None => None,
    };
    let mut out = String::new();
    for line in csv_preamble("report", &config) {
        out.push_str(&format!("# {line}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["label", "total", "fraction"];
    if refined_mean.is_some() {
        head.push("refined_fraction");
    }
    w.write_record(&head)?;
    for (y, r) in rows.iter().enumerate() {
        let mut rec = vec![r.label.clone(), r.total.to_string(), format!("{:.6}", r.fraction)];
        if let Some(m) = &refined_mean {
            rec.push(format!("{:.6}", m[y]));
        }
        w.write_record(&rec)?;
    }
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| Error::Validation(e.to_string()))?).expect("utf-8"));
    match &a.out {
        Some(p) => write_atomic(p, out.as_bytes()),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}
