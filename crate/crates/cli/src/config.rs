//! Run configuration: one JSON file, with command-line overrides applied on
//! top of the parsed JSON before it is typed.

use std::path::{Path, PathBuf};

use irefined::dataio::NormalizationMode;
use irefined::distances::FusionMode;
use irefined::ensemble::PixelFeatureMap;
use irefined::evaluation::DEFAULT_BINS;
use irefined::refined::{ImageFormat, PipelineOptions, ProjectionSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Feature table: header row, sample id in the first column.
    pub input: Option<PathBuf>,
    pub response_column: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub output_dir: Option<PathBuf>,
    /// Samples with a larger fraction of zero or missing features are dropped.
    #[serde(default = "default_clean_threshold")]
    pub clean_threshold: f64,
    #[serde(default)]
    pub normalization: NormalizationMode,
    pub split: Option<SplitConfig>,
    #[serde(default)]
    pub projections: Vec<ProjectionSpec>,
    #[serde(default)]
    pub fusion: FusionMode,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default = "default_image_format")]
    pub image_format: ImageFormat,
    /// Reference regressor; `stack` always trains one per projection, the
    /// other commands only when this is present.
    pub regressor: Option<RegressorConfig>,
    /// Also train one regressor on the channel-stacked images (`stack`).
    #[serde(default)]
    pub image_stacking: bool,
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub gap: GapConfig,
    pub evaluate: Option<EvaluateConfig>,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
}

fn default_delimiter() -> char {
    ','
}

fn default_clean_threshold() -> f64 {
    0.10
}

fn default_image_format() -> ImageFormat {
    ImageFormat::Png
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    pub seed: u64,
}

fn default_ratios() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_feature_map")]
    pub feature_map: PixelFeatureMap,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_feature_map() -> PixelFeatureMap {
    PixelFeatureMap::AvgPool { size: 2 }
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            feature_map: default_feature_map(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Also seeds the null model and the gap statistic's reference sets.
    pub seed: u64,
}

fn default_replicates() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapConfig {
    pub kmax: usize,
    pub b_ref: usize,
    pub restarts: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            kmax: 4,
            b_ref: 10,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Prediction CSVs (`sample_id` then one column per model), all over the same samples.
    pub predictions: Vec<PathBuf>,
    /// `sample_id,response[,partition]`. Rows for the predicted samples are the
    /// truth; the remaining rows (or those not marked `test`) are the reference
    /// responses for the mean and the null model.
    pub responses: PathBuf,
    #[serde(default = "default_true")]
    pub null_model: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseConfig {
    /// Distance-matrix CSVs; when empty the projections are computed from `input`.
    pub distances: Vec<PathBuf>,
    pub bins: usize,
    pub log_scale: bool,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            distances: Vec::new(),
            bins: DEFAULT_BINS,
            log_scale: false,
        }
    }
}

/// Override of one config field; `path` is dot-separated (`split.seed`).
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: String,
    pub value: Value,
}

impl Override {
    pub fn new(path: impl Into<String>, value: impl Into<Value>) -> Self {
        Self {
            path: path.into(),
            value: value.into(),
        }
    }

    /// Parses `key=value`; the value is read as JSON when it parses, else as a string.
    pub fn parse(s: &str) -> CliResult<Self> {
        let (path, raw) = s
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{s}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Self::new(path.trim(), value))
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::config(format!("empty segment in override path `{path}`")));
        }
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("`{path}`: `{part}` is inside a non-object value")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides` in order and types the result.
    pub fn load(path: Option<&Path>, overrides: &[Override]) -> CliResult<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            set_path(&mut value, &o.path, o.value.clone())?;
        }
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))
    }

    /// SHA-256 of the resolved configuration's canonical JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Returns the value of a required field or a config error naming it.
pub fn require<'a, T>(v: &'a Option<T>, field: &str) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::config(format!("missing required field `{field}`")))
}

/// Checks that a configured input path exists.
pub fn require_file(p: &Path, field: &str) -> CliResult<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!("`{field}`: no such file {}", p.display())))
    }
}

/// Parses `mds`, `isomap:K`, `lle:K`, `le:K` or `le:K:{median,binary,SIGMA}`.
pub fn parse_projection(s: &str) -> CliResult<ProjectionSpec> {
    use irefined::projections::HeatKernel;
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::config(format!("cannot parse projection `{s}`"));
    let k = || -> CliResult<usize> { parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad()) };
    Ok(match (parts[0], parts.len()) {
        ("mds", 1) => ProjectionSpec::Mds,
        ("isomap", 2) => ProjectionSpec::Isomap { k: k()? },
        ("lle", 2) => ProjectionSpec::Lle { k: k()? },
        ("le", 2) => ProjectionSpec::Le {
            k: k()?,
            heat: HeatKernel::Median,
        },
        ("le", 3) => ProjectionSpec::Le {
            k: k()?,
            heat: match parts[2] {
                "median" => HeatKernel::Median,
                "binary" => HeatKernel::Binary,
                v => HeatKernel::Sigma(v.parse().map_err(|_| bad())?),
            },
        },
        _ => return Err(bad()),
    })
}
