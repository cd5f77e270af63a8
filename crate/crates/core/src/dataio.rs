//! Feature table ingestion, cleaning, normalization and sample splits.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cell strings treated as missing values.
pub const MISSING_CODES: [&str; 3] = ["", "NA", "NaN"];

/// `n × p` numeric table: one row per sample, one column per feature, plus a
/// scalar response per sample. Missing cells are stored as NaN until
/// [`clean_samples`] imputes them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    sample_ids: Vec<String>,
    feature_names: Vec<String>,
    values: DMatrix<f64>,
    response: Vec<f64>,
}

impl FeatureTable {
    pub fn new(
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        values: DMatrix<f64>,
        response: Vec<f64>,
    ) -> Result<Self> {
        if values.nrows() != sample_ids.len() || response.len() != sample_ids.len() {
            return Err(Error::Shape(format!(
                "{} sample ids, {} value rows, {} responses",
                sample_ids.len(),
                values.nrows(),
                response.len()
            )));
        }
        if values.ncols() != feature_names.len() {
            return Err(Error::Shape(format!(
                "{} feature names for {} value columns",
                feature_names.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        Ok(Self {
            sample_ids,
            feature_names,
            values,
            response,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Row `i` is sample `i`, column `j` is feature `j`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Checks the minimum size for a 2D embedding plus grid (n ≥ 3, p ≥ 4)
    /// and that every value is finite.
    pub fn validate_for_embedding(&self) -> Result<()> {
        if self.n_samples() < 3 || self.n_features() < 4 {
            return Err(Error::Shape(format!(
                "need at least 3 samples and 4 features, got {}×{}",
                self.n_samples(),
                self.n_features()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("table contains missing or non-finite values".into()));
        }
        Ok(())
    }

    /// New table restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples()) {
            return Err(Error::InvalidArgument(format!("row {bad} out of range")));
        }
        let values = self.values.select_rows(rows);
        Ok(Self {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values,
            response: rows.iter().map(|&r| self.response[r]).collect(),
        })
    }
}

/// Options for [`read_feature_table`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub response_column: String,
    pub delimiter: u8,
}

impl LoadOptions {
    pub fn new(response_column: impl Into<String>) -> Self {
        Self {
            response_column: response_column.into(),
            delimiter: b',',
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

fn parse_cell(raw: &str) -> Option<Option<f64>> {
    let s = raw.trim();
    if MISSING_CODES.contains(&s) {
        return Some(None);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
}

/// Loads a comma-delimited table whose first column is the sample id.
pub fn load_feature_table(path: impl AsRef<Path>, response_column: &str) -> Result<FeatureTable> {
    load_feature_table_with(path, &LoadOptions::new(response_column))
}

pub fn load_feature_table_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<FeatureTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_table(file, opts)
}

pub fn read_feature_table<R: Read>(reader: R, opts: &LoadOptions) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(Error::Shape(
            "header needs a sample id column and at least one more".into(),
        ));
    }
    let response_idx = header
        .iter()
        .skip(1)
        .position(|h| *h == opts.response_column)
        .map(|i| i + 1)
        .ok_or_else(|| Error::MissingResponseColumn(opts.response_column.clone()))?;

    let feature_cols: Vec<usize> = (1..header.len()).filter(|&c| c != response_idx).collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let mut seen = HashSet::new();
    for name in &feature_names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateFeature(name.clone()));
        }
    }

    let mut sample_ids = Vec::new();
    let mut flat = Vec::new();
    let mut response = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Shape(format!(
                "row {row} has {} cells, header has {}",
                record.len(),
                header.len()
            )));
        }
        let id = record[0].trim().to_string();
        for &c in &feature_cols {
            match parse_cell(&record[c]) {
                Some(v) => flat.push(v.unwrap_or(f64::NAN)),
                None => {
                    return Err(Error::NonNumeric {
                        row,
                        column: header[c].clone(),
                        value: record[c].to_string(),
                    })
                }
            }
        }
        match parse_cell(&record[response_idx]) {
            Some(Some(v)) => response.push(v),
            Some(None) => return Err(Error::MissingResponse(id)),
            None => {
                return Err(Error::NonNumeric {
                    row,
                    column: header[response_idx].clone(),
                    value: record[response_idx].to_string(),
                })
            }
        }
        sample_ids.push(id);
    }
    let n = sample_ids.len();
    let values = DMatrix::from_row_slice(n, feature_names.len(), &flat);
    FeatureTable::new(sample_ids, feature_names, values, response)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Drops samples whose fraction of zero-or-missing features is strictly
/// greater than `threshold`, then imputes remaining missing cells with the
/// per-feature median of the retained samples.
pub fn clean_samples(t: &FeatureTable, threshold: f64) -> Result<FeatureTable> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} not in [0, 1]")));
    }
    let p = t.n_features();
    let keep: Vec<usize> = (0..t.n_samples())
        .filter(|&i| {
            let bad = t.values.row(i).iter().filter(|v| v.is_nan() || **v == 0.0).count();
            (bad as f64) / (p as f64) <= threshold
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyTable);
    }
    let dropped = t.n_samples() - keep.len();
    if dropped > 0 {
        log::info!("cleaning dropped {dropped} of {} samples", t.n_samples());
    }
    let mut out = t.select_rows(&keep)?;
    for j in 0..p {
        let col = out.values.column(j);
        if !col.iter().any(|v| v.is_nan()) {
            continue;
        }
        let mut present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let fill = median(&mut present).unwrap_or_else(|| {
            log::warn!(
                "feature `{}` is missing in every retained sample; imputing 0",
                t.feature_names[j]
            );
            0.0
        });
        for v in out.values.column_mut(j).iter_mut() {
            if v.is_nan() {
                *v = fill;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    #[default]
    Minmax01,
    Zscore,
}

/// Per-feature affine maps fitted on a subset of rows; `v = (x - offset) / scale`
/// except for degenerate features (zero scale), which map to a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mode: NormalizationMode,
    pub features: Vec<String>,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features with zero spread on the fitting rows.
    pub degenerate: Vec<String>,
}

impl NormalizationParams {
    /// Fits the map on `rows` (min/max for `Minmax01`, mean and population
    /// standard deviation for `Zscore`).
    pub fn fit(t: &FeatureTable, mode: NormalizationMode, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "normalization needs at least one fitting row".into(),
            ));
        }
        if t.has_missing() {
            return Err(Error::Malformed(
                "normalize a cleaned table (missing values present)".into(),
            ));
        }
        let mut offset = Vec::with_capacity(t.n_features());
        let mut scale = Vec::with_capacity(t.n_features());
        let mut degenerate = Vec::new();
        for j in 0..t.n_features() {
            let vals: Vec<f64> = rows.iter().map(|&r| t.values[(r, j)]).collect();
            let (o, s) = match mode {
                NormalizationMode::Minmax01 => {
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
                NormalizationMode::Zscore => {
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
            };
            if s == 0.0 {
                log::warn!("feature `{}` is constant on the fitting rows", t.feature_names[j]);
                degenerate.push(t.feature_names[j].clone());
            }
            offset.push(o);
            scale.push(s);
        }
        Ok(Self {
            mode,
            features: t.feature_names.clone(),
            offset,
            scale,
            degenerate,
        })
    }

    fn degenerate_value(&self) -> f64 {
        match self.mode {
            NormalizationMode::Minmax01 => 0.5,
            NormalizationMode::Zscore => 0.0,
        }
    }

    fn check(&self, t: &FeatureTable) -> Result<()> {
        if t.feature_names != self.features {
            return Err(Error::LabelMismatch(
                "table features differ from normalization params".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, t: &FeatureTable) -> Result<FeatureTable> {
        self.check(t)?;
        let mut out = t.clone();
        let fill = self.degenerate_value();
        for j in 0..t.n_features() {
            let (o, s) = (self.offset[j], self.scale[j]);
            for v in out.values.column_mut(j).iter_mut() {
                *v = if s == 0.0 { fill } else { (*v - o) / s };
            }
        }
        Ok(out)
    }

    /// Inverse of [`apply`](Self::apply); degenerate features return their offset.
    pub fn invert(&self, t: &FeatureTable) -> Result<FeatureTable> {
        self.check(t)?;
        let mut out = t.clone();
        for j in 0..t.n_features() {
            let (o, s) = (self.offset[j], self.scale[j]);
            for v in out.values.column_mut(j).iter_mut() {
                *v = o + *v * s;
            }
        }
        Ok(out)
    }
}

/// Fits normalization on `fit_rows` and applies it to every row of `t`.
pub fn normalize_features(
    t: &FeatureTable,
    mode: NormalizationMode,
    fit_rows: &[usize],
) -> Result<(FeatureTable, NormalizationParams)> {
    let params = NormalizationParams::fit(t, mode, fit_rows)?;
    Ok((params.apply(t)?, params))
}

/// Disjoint train / validation / test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndex {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndex {
    /// Every index outside the test partition.
    pub fn non_test(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.train.iter().chain(&self.validation).copied().collect();
        v.sort_unstable();
        v
    }
}

/// Partition sizes: floor of `n · ratio`, each empty partition gets one of
/// the leftover samples first, the rest go by largest fractional part, and a
/// partition that is still empty takes one sample from the largest.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidSplit(format!("ratios must be positive, got {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSplit(format!("ratios sum to {total}, expected 1")));
    }
    if n < 3 {
        return Err(Error::InvalidSplit(format!("{n} samples cannot fill three partitions")));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for i in 0..3 {
        sizes[i] = exact[i].floor() as usize;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    for size in sizes.iter_mut() {
        if *size == 0 && left > 0 {
            *size = 1;
            left -= 1;
        }
    }
    let mut by_frac: Vec<usize> = (0..3).collect();
    by_frac.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in by_frac.iter().cycle().take(left) {
        sizes[i] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let largest = (0..3).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
        sizes[largest] -= 1;
        sizes[empty] += 1;
    }
    Ok(sizes)
}

/// Deterministic seeded shuffle followed by a contiguous partition.
pub fn split_samples(n: usize, ratios: [f64; 3], seed: u64) -> Result<SplitIndex> {
    let [n_train, n_val, _] = split_sizes(n, ratios)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Ok(SplitIndex {
        seed,
        train: idx,
        validation,
        test,
    })
}
