//! The five subcommands. Each writes its artifacts plus `config.json`,
//! `timings.tsv` and `manifest.json` into the output directory.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;
use irefined::dataio::{
    clean_samples, load_feature_table_with, normalize_features, split_samples, FeatureTable, LoadOptions, SplitIndex,
};
use irefined::distances::{embedding_distances, pairwise_euclidean, DistanceMatrix};
use irefined::ensemble::{
    fit_reference_regressor, fit_stacking, predict_reference, predict_stacked, rmse, stack_images, PixelSource,
    PredictionSet,
};
use irefined::evaluation::{
    bootstrap_metrics, gap_statistic, kendall_tau_distances, kl_divergence_distances, null_bootstrap,
    null_model_predictions, robustness_wins, score, GapOptions, GapResult, Metric, MetricReport, PerMetric,
};
use irefined::refined::{
    irefined_pipeline, refined_pipeline, save_images, ImageFormat, ProjectionSpec, RefinedImageSet, RefinedOutput,
};
use serde::Serialize;

use crate::config::{require, require_file, RegressorConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunContext, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Embed,
    Irefined,
    Stack,
    Evaluate,
    Diagnose,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Embed => "embed",
            CommandKind::Irefined => "irefined",
            CommandKind::Stack => "stack",
            CommandKind::Evaluate => "evaluate",
            CommandKind::Diagnose => "diagnose",
        }
    }
}

pub fn run_command(kind: CommandKind, cfg: &RunConfig) -> CliResult<RunManifest> {
    let out = require(&cfg.output_dir, "output_dir")?.clone();
    match kind {
        CommandKind::Embed => {
            if cfg.projections.len() != 1 {
                return Err(CliError::config(format!(
                    "`projections`: embed takes exactly one projection, got {}",
                    cfg.projections.len()
                )));
            }
        }
        CommandKind::Irefined => {
            if cfg.projections.len() < 2 {
                return Err(CliError::config(format!(
                    "`projections`: integrated REFINED requires at least 2 projections, got {}",
                    cfg.projections.len()
                )));
            }
        }
        CommandKind::Stack => {
            if cfg.projections.is_empty() {
                return Err(CliError::config("`projections`: stack needs at least one projection"));
            }
        }
        CommandKind::Evaluate => {
            let ev = require(&cfg.evaluate, "evaluate")?;
            require(&cfg.bootstrap, "bootstrap")?;
            if ev.predictions.is_empty() {
                return Err(CliError::config("`evaluate.predictions` is empty"));
            }
            for p in &ev.predictions {
                require_file(p, "evaluate.predictions")?;
            }
            require_file(&ev.responses, "evaluate.responses")?;
        }
        CommandKind::Diagnose => {
            for p in &cfg.diagnose.distances {
                require_file(p, "diagnose.distances")?;
            }
        }
    }
    let mut ctx = RunContext::new(&out)?;
    match kind {
        CommandKind::Embed | CommandKind::Irefined => cmd_refined(kind, cfg, &mut ctx)?,
        CommandKind::Stack => cmd_stack(cfg, &mut ctx)?,
        CommandKind::Evaluate => cmd_evaluate(cfg, &mut ctx)?,
        CommandKind::Diagnose => cmd_diagnose(cfg, &mut ctx)?,
    }
    ctx.finish(kind.name(), cfg)
}

struct Prepared {
    /// Cleaned and normalized (with training-row parameters), all samples.
    table: FeatureTable,
    split: SplitIndex,
}

impl Prepared {
    fn layout(&self) -> CliResult<FeatureTable> {
        Ok(self.table.select_rows(&self.split.train)?)
    }

    fn ids(&self, rows: &[usize]) -> Vec<String> {
        rows.iter().map(|&i| self.table.sample_ids()[i].clone()).collect()
    }

    fn responses(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.table.response()[i]).collect()
    }
}

fn prepare(cfg: &RunConfig, ctx: &mut RunContext) -> CliResult<Prepared> {
    let t0 = Instant::now();
    let input = require(&cfg.input, "input")?;
    require_file(input, "input")?;
    let rc = require(&cfg.response_column, "response_column")?;
    let split_cfg = require(&cfg.split, "split")?;
    if !cfg.delimiter.is_ascii() {
        return Err(CliError::config("`delimiter` must be a single ASCII character"));
    }
    let raw = load_feature_table_with(
        input,
        &LoadOptions::new(rc.as_str()).with_delimiter(cfg.delimiter as u8),
    )?;
    let cleaned = clean_samples(&raw, cfg.clean_threshold)?;
    if cleaned.n_samples() < raw.n_samples() {
        log::info!(
            "cleaning dropped {} of {} samples",
            raw.n_samples() - cleaned.n_samples(),
            raw.n_samples()
        );
    }
    let split = split_samples(cleaned.n_samples(), split_cfg.ratios, split_cfg.seed)?;
    let (table, params) = normalize_features(&cleaned, cfg.normalization, &split.train)?;
    ctx.write_json("split.json", &split)?;
    ctx.write_json("normalization.json", &params)?;

    let mut partition = vec![""; table.n_samples()];
    for (rows, name) in [
        (&split.train, "train"),
        (&split.validation, "validation"),
        (&split.test, "test"),
    ] {
        for &i in rows {
            partition[i] = name;
        }
    }
    let mut w = ctx.create_file("responses.csv")?;
    let mut csv = String::from("sample_id,response,partition\n");
    for (i, id) in table.sample_ids().iter().enumerate() {
        csv.push_str(&format!(
            "{},{:?},{}\n",
            csv_field(id),
            table.response()[i],
            partition[i]
        ));
    }
    w.write_all(csv.as_bytes()).map_err(|e| irefined::Error::Io {
        path: ctx.path("responses.csv"),
        source: e,
    })?;
    ctx.record("prepare", t0);
    Ok(Prepared { table, split })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Makes repeated tags distinct by appending the 1-based position.
fn unique_tags(tags: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    let dup: HashSet<String> = tags.iter().filter(|t| !seen.insert(t.as_str())).cloned().collect();
    tags.into_iter()
        .enumerate()
        .map(|(a, t)| if dup.contains(&t) { format!("{t}_{}", a + 1) } else { t })
        .collect()
}

fn write_images(ctx: &mut RunContext, dir: &str, set: &RefinedImageSet, format: ImageFormat) -> CliResult<()> {
    for f in save_images(set, ctx.path(dir), format)? {
        ctx.add_artifact(format!("{dir}/{f}"));
    }
    Ok(())
}

fn write_distances(ctx: &mut RunContext, rel: &str, d: &DistanceMatrix) -> CliResult<()> {
    let w = ctx.create_file(rel)?;
    d.write_csv(w)?;
    Ok(())
}

fn write_predictions(ctx: &mut RunContext, rel: &str, p: &PredictionSet) -> CliResult<()> {
    let w = ctx.create_file(rel)?;
    p.write_csv(w)?;
    Ok(())
}

/// Fits the reference regressor on the training rows and predicts every sample.
fn train_regressor<X: PixelSource + ?Sized>(
    ctx: &mut RunContext,
    rel: &str,
    train: &X,
    all: &X,
    y_train: &[f64],
    rc: RegressorConfig,
) -> CliResult<Vec<f64>> {
    let t0 = Instant::now();
    let model = fit_reference_regressor(train, y_train, rc.lambda, rc.feature_map, &ctx.counters)?;
    ctx.record(&format!("regressor {rel}"), t0);
    ctx.write_json(rel, &model)?;
    Ok(predict_reference(&model, all)?)
}

fn partition_predictions(ids: Vec<String>, rows: &[usize], columns: &[(String, Vec<f64>)]) -> CliResult<PredictionSet> {
    Ok(PredictionSet::from_columns(
        ids,
        columns
            .iter()
            .map(|(t, v)| (t.clone(), rows.iter().map(|&i| v[i]).collect()))
            .collect(),
    )?)
}

fn write_refined_output(ctx: &mut RunContext, prefix: &str, out: &RefinedOutput, format: ImageFormat) -> CliResult<()> {
    write_images(ctx, &format!("{prefix}images"), &out.images, format)?;
    ctx.write_json(&format!("{prefix}report.json"), &out.report)?;
    write_distances(ctx, &format!("{prefix}target_distances.csv"), &out.target)?;
    for (a, e) in out.embeddings.iter().enumerate() {
        let w = ctx.create_file(&format!("{prefix}embeddings/{a}_{}.csv", e.method_tag()))?;
        e.write_csv(w)?;
    }
    Ok(())
}

fn cmd_refined(kind: CommandKind, cfg: &RunConfig, ctx: &mut RunContext) -> CliResult<()> {
    let prep = prepare(cfg, ctx)?;
    let layout = prep.layout()?;
    let t0 = Instant::now();
    let out = match kind {
        CommandKind::Embed => refined_pipeline(&layout, &prep.table, cfg.projections[0], &cfg.pipeline, &ctx.counters)?,
        _ => irefined_pipeline(
            &layout,
            &prep.table,
            &cfg.projections,
            cfg.fusion,
            &cfg.pipeline,
            &ctx.counters,
        )?,
    };
    ctx.record("pipeline", t0);
    write_refined_output(ctx, "", &out, cfg.image_format)?;
    let tag = out.report.method_tag.clone();
    ctx.add_method_tag(tag.clone());

    if let Some(rc) = cfg.regressor {
        let train = out.images.select(&prep.split.train)?;
        let yhat = train_regressor(
            ctx,
            "regressor.json",
            &train,
            &out.images,
            &prep.responses(&prep.split.train),
            rc,
        )?;
        let cols = [(tag, yhat)];
        for (rows, name) in [(&prep.split.validation, "validation"), (&prep.split.test, "test")] {
            let p = partition_predictions(prep.ids(rows), rows, &cols)?;
            write_predictions(ctx, &format!("predictions_{name}.csv"), &p)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StackCheck {
    validation_rmse: IndexMap<String, f64>,
    stacked_validation_rmse: f64,
    best_single_validation_rmse: f64,
    stacked_not_worse: bool,
    residuals: ResidualSummary,
}

/// Moments of the stacked validation residuals `y − ŷ`; recorded only, the
/// fit is plain least squares whatever their shape.
#[derive(Serialize)]
struct ResidualSummary {
    mean: f64,
    sd: f64,
    skewness: f64,
    excess_kurtosis: f64,
}

impl ResidualSummary {
    fn new(r: &[f64]) -> Self {
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let moment = |k: i32| r.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let m2 = moment(2);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (moment(3) / m2.powf(1.5), moment(4) / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self {
            mean,
            sd: m2.sqrt(),
            skewness,
            excess_kurtosis,
        }
    }
}

fn cmd_stack(cfg: &RunConfig, ctx: &mut RunContext) -> CliResult<()> {
    let prep = prepare(cfg, ctx)?;
    let layout = prep.layout()?;
    let rc = cfg.regressor.unwrap_or_default();
    let tags = unique_tags(cfg.projections.iter().map(|s| format!("refined_{}", s.tag())).collect());
    let split = &prep.split;
    let y_train = prep.responses(&split.train);

    let mut sets = Vec::with_capacity(tags.len());
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (spec, tag) in cfg.projections.iter().zip(&tags) {
        let t0 = Instant::now();
        let mut out = refined_pipeline(&layout, &prep.table, *spec, &cfg.pipeline, &ctx.counters)?;
        ctx.record(&format!("pipeline {tag}"), t0);
        out.images = out.images.with_tag(tag.as_str());
        out.report.method_tag = tag.clone();
        write_refined_output(ctx, &format!("{tag}/"), &out, cfg.image_format)?;
        let train = out.images.select(&split.train)?;
        let yhat = train_regressor(ctx, &format!("{tag}/regressor.json"), &train, &out.images, &y_train, rc)?;
        columns.push((tag.clone(), yhat));
        ctx.add_method_tag(tag.clone());
        sets.push(out.images);
    }

    let val_ids = prep.ids(&split.validation);
    let y_val = prep.responses(&split.validation);
    let singles_val = partition_predictions(val_ids, &split.validation, &columns)?;
    let t0 = Instant::now();
    let model = fit_stacking(&singles_val, &y_val)?;
    ctx.record("stacking", t0);
    ctx.write_json("stacking.json", &model)?;
    let all = partition_predictions(
        prep.table.sample_ids().to_vec(),
        &(0..prep.table.n_samples()).collect::<Vec<_>>(),
        &columns,
    )?;
    let stacked = predict_stacked(&model, &all)?;

    let validation_rmse: IndexMap<String, f64> = columns
        .iter()
        .map(|(t, v)| {
            (
                t.clone(),
                rmse(&y_val, &split.validation.iter().map(|&i| v[i]).collect::<Vec<_>>()),
            )
        })
        .collect();
    let stacked_val: Vec<f64> = split.validation.iter().map(|&i| stacked[i]).collect();
    let best_single_validation_rmse = validation_rmse.values().copied().fold(f64::INFINITY, f64::min);
    let stacked_validation_rmse = rmse(&y_val, &stacked_val);
    let residuals: Vec<f64> = y_val.iter().zip(&stacked_val).map(|(a, b)| a - b).collect();
    let check = StackCheck {
        validation_rmse,
        stacked_validation_rmse,
        best_single_validation_rmse,
        stacked_not_worse: stacked_validation_rmse <= best_single_validation_rmse + 1e-9,
        residuals: ResidualSummary::new(&residuals),
    };
    if check.stacked_not_worse {
        log::info!(
            "stacked validation RMSE {:.6} <= best single {:.6}",
            check.stacked_validation_rmse,
            check.best_single_validation_rmse
        );
    } else {
        log::warn!(
            "stacked validation RMSE {:.6} exceeds best single {:.6}",
            check.stacked_validation_rmse,
            check.best_single_validation_rmse
        );
    }
    ctx.write_json("stack_check.json", &check)?;
    columns.push(("stacked".to_string(), stacked));
    ctx.add_method_tag("stacked");

    if cfg.image_stacking {
        let refs: Vec<&RefinedImageSet> = sets.iter().collect();
        let tensors = stack_images(&refs)?;
        let train_sets: Vec<RefinedImageSet> = sets.iter().map(|s| s.select(&split.train)).collect::<Result<_, _>>()?;
        let train_tensors = stack_images(&train_sets.iter().collect::<Vec<_>>())?;
        let w = ctx.create_file("image_stacked/tensors.csv")?;
        tensors.write_csv(w)?;
        let yhat = train_regressor(
            ctx,
            "image_stacked/regressor.json",
            &train_tensors,
            &tensors,
            &y_train,
            rc,
        )?;
        columns.push(("image_stacked".to_string(), yhat));
        ctx.add_method_tag("image_stacked");
    }

    for (rows, name) in [(&split.validation, "validation"), (&split.test, "test")] {
        let p = partition_predictions(prep.ids(rows), rows, &columns)?;
        write_predictions(ctx, &format!("predictions_{name}.csv"), &p)?;
    }
    Ok(())
}

struct Responses {
    ids: Vec<String>,
    values: Vec<f64>,
    partition: Option<Vec<String>>,
}

fn read_responses(path: &Path) -> CliResult<Responses> {
    let mut rdr = csv::Reader::from_path(path).map_err(irefined::Error::from)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(irefined::Error::from)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 2 || header[0] != "sample_id" {
        return Err(irefined::Error::Malformed(format!(
            "{}: expected `sample_id,response[,partition]`",
            path.display()
        ))
        .into());
    }
    let has_partition = header.get(2).map(String::as_str) == Some("partition");
    let mut r = Responses {
        ids: Vec::new(),
        values: Vec::new(),
        partition: has_partition.then(Vec::new),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(irefined::Error::from)?;
        r.ids.push(rec[0].to_string());
        let cell = rec.get(1).unwrap_or("");
        r.values
            .push(cell.trim().parse().map_err(|_| irefined::Error::NonNumeric {
                row: row + 1,
                column: header[1].clone(),
                value: cell.to_string(),
            })?);
        if let Some(p) = r.partition.as_mut() {
            p.push(rec.get(2).unwrap_or("").trim().to_string());
        }
    }
    Ok(r)
}

#[derive(Serialize)]
struct MetricsFile {
    ybar_ref: f64,
    n_test: usize,
    n_reference: usize,
    models: IndexMap<String, MetricReport>,
}

#[derive(Serialize)]
struct RobustnessEntry {
    model: String,
    versus: String,
    /// Fraction of replicates where `model` strictly beats `versus`.
    wins: PerMetric<f64>,
}

fn cmd_evaluate(cfg: &RunConfig, ctx: &mut RunContext) -> CliResult<()> {
    let ev = require(&cfg.evaluate, "evaluate")?;
    let boot = *require(&cfg.bootstrap, "bootstrap")?;
    let t0 = Instant::now();
    let sets = ev
        .predictions
        .iter()
        .map(PredictionSet::load_csv)
        .collect::<Result<Vec<_>, _>>()?;
    let preds = PredictionSet::concat(&sets)?;
    let responses = read_responses(&ev.responses)?;

    let y: Vec<f64> = preds
        .sample_ids()
        .iter()
        .map(|id| {
            responses
                .ids
                .iter()
                .position(|r| r == id)
                .map(|i| responses.values[i])
                .ok_or_else(|| irefined::Error::LabelMismatch(format!("no response for sample `{id}`")))
        })
        .collect::<Result<_, _>>()?;
    let predicted: HashSet<&str> = preds.sample_ids().iter().map(String::as_str).collect();
    let reference: Vec<f64> = (0..responses.ids.len())
        .filter(|&i| match &responses.partition {
            Some(p) => p[i] != "test",
            None => !predicted.contains(responses.ids[i].as_str()),
        })
        .map(|i| responses.values[i])
        .collect();
    if reference.is_empty() {
        return Err(irefined::Error::Malformed("no reference (non-test) responses".into()).into());
    }
    let ybar_ref = reference.iter().sum::<f64>() / reference.len() as f64;
    ctx.record("load", t0);

    let t0 = Instant::now();
    let mut models = IndexMap::new();
    for (a, tag) in preds.model_tags().iter().enumerate() {
        models.insert(tag.clone(), score(&y, &preds.column(a), ybar_ref)?);
    }
    if ev.null_model {
        let null = null_model_predictions(&reference, y.len(), boot.seed)?;
        models.insert("null".to_string(), score(&y, &null, ybar_ref)?);
    }
    ctx.write_json(
        "metrics.json",
        &MetricsFile {
            ybar_ref,
            n_test: y.len(),
            n_reference: reference.len(),
            models,
        },
    )?;

    let mut summaries = bootstrap_metrics(&y, &preds, ybar_ref, boot.replicates, boot.seed)?;
    let null = if ev.null_model {
        let s = null_bootstrap(&y, &reference, ybar_ref, boot.replicates, boot.seed)?;
        summaries.push(s.clone());
        Some(s)
    } else {
        None
    };
    ctx.record("bootstrap", t0);
    ctx.write_json("bootstrap.json", &summaries)?;
    let mut w = ctx.create_file("bootstrap_replicates.csv")?;
    let mut csv = String::from("model_tag,replicate,nrmse,nmae,pcc,bias\n");
    for s in &summaries {
        for r in 0..s.replicates {
            csv.push_str(&format!(
                "{},{r},{:?},{:?},{:?},{:?}\n",
                csv_field(&s.model_tag),
                s.values.nrmse[r],
                s.values.nmae[r],
                s.values.pcc[r],
                s.values.bias[r]
            ));
        }
    }
    w.write_all(csv.as_bytes()).map_err(|e| irefined::Error::Io {
        path: ctx.path("bootstrap_replicates.csv"),
        source: e,
    })?;
    drop(w);

    let mut robustness = Vec::new();
    for a in &summaries {
        for b in &summaries {
            if a.model_tag != b.model_tag {
                let mut wins = PerMetric::default();
                for m in Metric::ALL {
                    let f = robustness_wins(a, b, m)?;
                    match m {
                        Metric::Nrmse => wins.nrmse = f,
                        Metric::Nmae => wins.nmae = f,
                        Metric::Pcc => wins.pcc = f,
                        Metric::Bias => wins.bias = f,
                    }
                }
                robustness.push(RobustnessEntry {
                    model: a.model_tag.clone(),
                    versus: b.model_tag.clone(),
                    wins,
                });
            }
        }
    }
    ctx.write_json("robustness.json", &robustness)?;

    if let Some(null) = null {
        let t0 = Instant::now();
        let opts = GapOptions {
            kmax: cfg.gap.kmax,
            b_ref: cfg.gap.b_ref,
            seed: boot.seed,
            restarts: cfg.gap.restarts,
        };
        let vector = |s: &irefined::evaluation::BootstrapSummary, r: usize| {
            vec![s.values.nrmse[r], s.values.nmae[r], s.values.pcc[r], s.values.bias[r]]
        };
        let mut gaps: IndexMap<String, GapResult> = IndexMap::new();
        for s in summaries.iter().filter(|s| s.model_tag != null.model_tag) {
            let mut points = Vec::with_capacity(2 * s.replicates);
            let mut sources = Vec::with_capacity(2 * s.replicates);
            for r in 0..s.replicates {
                points.push(vector(s, r));
                sources.push(0);
            }
            for r in 0..null.replicates {
                points.push(vector(&null, r));
                sources.push(1);
            }
            gaps.insert(s.model_tag.clone(), gap_statistic(&points, Some(&sources), &opts)?);
        }
        ctx.record("gap", t0);
        ctx.write_json("gap.json", &gaps)?;
    }
    for tag in preds.model_tags() {
        ctx.add_method_tag(tag.clone());
    }
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseFile {
    labels: Vec<String>,
    bins: usize,
    log_scale: bool,
    /// `kendall_tau[i][j]` between the upper triangles of matrices `i` and `j`.
    kendall_tau: Vec<Vec<f64>>,
    /// `kl_divergence[i][j]` is D_KL(i ∥ j) of the distance histograms.
    kl_divergence: Vec<Vec<f64>>,
}

fn cmd_diagnose(cfg: &RunConfig, ctx: &mut RunContext) -> CliResult<()> {
    let diag = &cfg.diagnose;
    let mut matrices: Vec<(String, DistanceMatrix)> = Vec::new();
    if diag.distances.is_empty() {
        let prep = prepare(cfg, ctx)?;
        let layout = prep.layout()?;
        layout.validate_for_embedding()?;
        let t0 = Instant::now();
        let ambient = pairwise_euclidean(&layout)?;
        let tags = unique_tags(cfg.projections.iter().map(|s| s.tag().to_string()).collect());
        let rescale = |d: DistanceMatrix| {
            if cfg.pipeline.rescale {
                d.rescaled_unit_mean()
            } else {
                d
            }
        };
        matrices.push(("ambient".to_string(), rescale(ambient.clone())));
        for (spec, tag) in cfg.projections.iter().zip(tags) {
            let e = ProjectionSpec::embed(spec, &layout, &ambient)?;
            ctx.counters.add_projection();
            matrices.push((tag, rescale(embedding_distances(&e)?)));
        }
        ctx.record("projections", t0);
        for (tag, d) in &matrices {
            write_distances(ctx, &format!("distances/{tag}.csv"), d)?;
        }
    } else {
        let names = unique_tags(
            diag.distances
                .iter()
                .map(|p| {
                    p.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
        );
        for (p, name) in diag.distances.iter().zip(names) {
            matrices.push((name, DistanceMatrix::load_csv(p)?));
        }
    }
    if matrices.len() < 2 {
        return Err(CliError::config(
            "diagnose needs at least two distance matrices (`diagnose.distances` or `projections`)",
        ));
    }
    let t0 = Instant::now();
    let m = matrices.len();
    let mut tau = vec![vec![1.0; m]; m];
    let mut kl = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                if i < j {
                    tau[i][j] = kendall_tau_distances(&matrices[i].1, &matrices[j].1)?;
                    tau[j][i] = tau[i][j];
                }
                kl[i][j] = kl_divergence_distances(&matrices[i].1, &matrices[j].1, diag.log_scale, diag.bins)?;
            }
        }
    }
    ctx.record("diagnostics", t0);
    ctx.write_json(
        "diagnose.json",
        &DiagnoseFile {
            labels: matrices.iter().map(|(t, _)| t.clone()).collect(),
            bins: diag.bins,
            log_scale: diag.log_scale,
            kendall_tau: tau,
            kl_divergence: kl,
        },
    )?;
    Ok(())
}
