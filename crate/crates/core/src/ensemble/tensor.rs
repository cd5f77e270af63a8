use std::io::Write;
use std::path::Path;

use crate::refined::RefinedImageSet;
use crate::{Error, Result};

/// One `g × g × A` tensor per sample. Sample `i` is stored flat with
/// channel `a` of cell `(r, c)` at index `(r·g + c)·A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensorSet {
    grid_size: usize,
    channel_tags: Vec<String>,
    sample_ids: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl ImageTensorSet {
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn channels(&self) -> usize {
        self.channel_tags.len()
    }

    pub fn channel_tags(&self) -> &[String] {
        &self.channel_tags
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn value(&self, i: usize, r: usize, c: usize, a: usize) -> f64 {
        self.data[i][(r * self.grid_size + c) * self.channels() + a]
    }

    /// Channel `a` of sample `i` as a row-major `g × g` image.
    pub fn channel(&self, i: usize, a: usize) -> Vec<f64> {
        let ch = self.channels();
        self.data[i].iter().skip(a).step_by(ch).copied().collect()
    }

    /// CSV with a `sample_id` column and one column per `(cell, channel)`,
    /// named `r{r}c{c}_{tag}`, in storage order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let g = self.grid_size;
        let mut header = vec!["sample_id".to_string()];
        for r in 0..g {
            for c in 0..g {
                for tag in &self.channel_tags {
                    header.push(format!("r{r}c{c}_{tag}"));
                }
            }
        }
        wtr.write_record(&header)?;
        for (id, t) in self.sample_ids.iter().zip(&self.data) {
            let mut rec = vec![id.clone()];
            rec.extend(t.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Concatenates image sets channel-wise; channel tags are the sets' method tags.
pub fn stack_images(sets: &[&RefinedImageSet]) -> Result<ImageTensorSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Shape("no image sets to stack".into()))?;
    let g = first.grid_size();
    for s in sets {
        if s.grid_size() != g {
            return Err(Error::Shape(format!("grid sizes {} and {g} differ", s.grid_size())));
        }
        if s.sample_ids() != first.sample_ids() {
            return Err(Error::LabelMismatch("image sets list different samples".into()));
        }
    }
    let a = sets.len();
    let data = (0..first.len())
        .map(|i| {
            let mut t = vec![0.0; g * g * a];
            for (ch, s) in sets.iter().enumerate() {
                for (cell, &v) in s.image(i).iter().enumerate() {
                    t[cell * a + ch] = v;
                }
            }
            t
        })
        .collect();
    Ok(ImageTensorSet {
        grid_size: g,
        channel_tags: sets.iter().map(|s| s.method_tag().to_string()).collect(),
        sample_ids: first.sample_ids().to_vec(),
        data,
    })
}
