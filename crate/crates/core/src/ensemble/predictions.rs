use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Predictions of `A` models for the same `n` samples, one column per model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    sample_ids: Vec<String>,
    model_tags: Vec<String>,
    yhat: DMatrix<f64>,
}

impl PredictionSet {
    pub fn new(sample_ids: Vec<String>, model_tags: Vec<String>, yhat: DMatrix<f64>) -> Result<Self> {
        if yhat.nrows() != sample_ids.len() || yhat.ncols() != model_tags.len() {
            return Err(Error::Shape(format!(
                "{}×{} predictions for {} samples and {} models",
                yhat.nrows(),
                yhat.ncols(),
                sample_ids.len(),
                model_tags.len()
            )));
        }
        if model_tags.is_empty() {
            return Err(Error::Shape("prediction set has no models".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = model_tags.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::LabelMismatch(format!("duplicate model tag `{dup}`")));
        }
        if yhat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite prediction".into()));
        }
        Ok(Self {
            sample_ids,
            model_tags,
            yhat,
        })
    }

    pub fn from_columns(sample_ids: Vec<String>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let n = sample_ids.len();
        if let Some((tag, _)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::Shape(format!("column `{tag}` does not have {n} predictions")));
        }
        let yhat = DMatrix::from_fn(n, columns.len(), |i, a| columns[a].1[i]);
        Self::new(sample_ids, columns.into_iter().map(|(t, _)| t).collect(), yhat)
    }

    pub fn n_samples(&self) -> usize {
        self.yhat.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.yhat.ncols()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn model_tags(&self) -> &[String] {
        &self.model_tags
    }

    pub fn yhat(&self) -> &DMatrix<f64> {
        &self.yhat
    }

    pub fn column(&self, a: usize) -> Vec<f64> {
        self.yhat.column(a).iter().copied().collect()
    }

    pub fn column_by_tag(&self, tag: &str) -> Option<Vec<f64>> {
        self.model_tags.iter().position(|t| t == tag).map(|a| self.column(a))
    }

    /// Side-by-side union of sets over the same samples in the same order.
    pub fn concat(sets: &[PredictionSet]) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::Shape("no prediction sets".into()))?;
        let mut columns = Vec::new();
        for s in sets {
            if s.sample_ids != first.sample_ids {
                return Err(Error::LabelMismatch("prediction sets list different samples".into()));
            }
            for (a, tag) in s.model_tags.iter().enumerate() {
                columns.push((tag.clone(), s.column(a)));
            }
        }
        Self::from_columns(first.sample_ids.clone(), columns)
    }

    /// CSV with a `sample_id` column followed by one column per model tag.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["sample_id"];
        header.extend(self.model_tags.iter().map(String::as_str));
        wtr.write_record(&header)?;
        for (i, id) in self.sample_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.yhat.row(i).iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.first().map(String::as_str) != Some("sample_id") {
            return Err(Error::Malformed(
                "prediction CSV must start with a `sample_id` column".into(),
            ));
        }
        let tags = header[1..].to_vec();
        let mut ids = Vec::new();
        let mut flat = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Malformed(format!(
                    "row with {} fields, expected {}",
                    rec.len(),
                    header.len()
                )));
            }
            ids.push(rec[0].to_string());
            for (cell, tag) in rec.iter().skip(1).zip(&tags) {
                flat.push(cell.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: row + 1,
                    column: tag.clone(),
                    value: cell.to_string(),
                })?);
            }
        }
        let n = ids.len();
        Self::new(ids, tags.clone(), DMatrix::from_row_slice(n, tags.len(), &flat))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> PredictionSet {
        PredictionSet::from_columns(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                ("mds".into(), vec![0.1, 0.2, 1.0 / 3.0]),
                ("lle".into(), vec![-4.0, 5e-300, 7.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = set();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("sample_id,mds,lle\n"));
        assert_eq!(PredictionSet::read_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_input() {
        let ids = vec!["a".to_string()];
        assert!(PredictionSet::new(ids.clone(), vec!["x".into(), "x".into()], DMatrix::zeros(1, 2)).is_err());
        assert!(PredictionSet::new(ids.clone(), vec!["x".into()], DMatrix::from_element(1, 1, f64::NAN)).is_err());
        assert!(PredictionSet::new(ids, vec!["x".into()], DMatrix::zeros(2, 1)).is_err());
        assert!(PredictionSet::read_csv("id,x\na,1\n".as_bytes()).is_err());
        assert!(PredictionSet::read_csv("sample_id,x\na,oops\n".as_bytes()).is_err());
    }

    #[test]
    fn concat_and_lookup() {
        let s = set();
        let both = PredictionSet::concat(&[
            s.clone(),
            PredictionSet::from_columns(s.sample_ids().to_vec(), vec![("null".into(), vec![1.0; 3])]).unwrap(),
        ])
        .unwrap();
        assert_eq!(both.model_tags(), ["mds", "lle", "null"]);
        assert_eq!(both.column_by_tag("null"), Some(vec![1.0; 3]));
        assert!(PredictionSet::concat(&[s.clone(), s]).is_err());
    }
}
