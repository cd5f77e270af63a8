use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::raster::PixelAssignment;
use super::render::RefinedImageSet;
use crate::{Error, Result};

pub const ASSIGNMENT_FILE: &str = "assignment.json";
pub const METADATA_FILE: &str = "images.json";
pub const CSV_FILE: &str = "images.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    /// One 8-bit grayscale PNG per sample, intensity `round(255·v)`.
    Png,
    /// All images in one CSV at full precision.
    Csv,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    format: ImageFormat,
    grid_size: usize,
    fill: f64,
    method_tag: String,
    sample_ids: Vec<String>,
    files: Vec<String>,
}

/// Writes the images, `assignment.json` and an `images.json` index into `dir`.
/// Returns the written file names relative to `dir`.
pub fn save_images(set: &RefinedImageSet, dir: impl AsRef<Path>, format: ImageFormat) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = set.grid_size();
    let mut written = vec![ASSIGNMENT_FILE.to_string()];
    set.assignment().save(dir.join(ASSIGNMENT_FILE))?;

    let files = match format {
        ImageFormat::Png => {
            let mut files = Vec::with_capacity(set.len());
            for (i, im) in set.images().iter().enumerate() {
                let name = format!("{i:05}.png");
                let bytes: Vec<u8> = im.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
                let buf = image::GrayImage::from_raw(g as u32, g as u32, bytes)
                    .ok_or_else(|| Error::Shape("image buffer size mismatch".into()))?;
                buf.save_with_format(dir.join(&name), image::ImageFormat::Png)?;
                files.push(name);
            }
            files
        }
        ImageFormat::Csv => {
            let path = dir.join(CSV_FILE);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
            let mut header = vec!["sample_id".to_string()];
            for r in 0..g {
                for c in 0..g {
                    header.push(format!("r{r}c{c}"));
                }
            }
            w.write_record(&header)?;
            for (id, im) in set.sample_ids().iter().zip(set.images()) {
                let mut rec = vec![id.clone()];
                rec.extend(im.iter().map(|v| format!("{v:?}")));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            vec![CSV_FILE.to_string()]
        }
    };
    written.extend(files.iter().cloned());

    let meta = Metadata {
        format,
        grid_size: g,
        fill: set.fill(),
        method_tag: set.method_tag().to_string(),
        sample_ids: set.sample_ids().to_vec(),
        files,
    };
    let path = dir.join(METADATA_FILE);
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&path, e))?;
    written.push(METADATA_FILE.to_string());
    Ok(written)
}

/// Reads an image set written by [`save_images`].
pub fn load_images(dir: impl AsRef<Path>) -> Result<RefinedImageSet> {
    let dir = dir.as_ref();
    let path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: Metadata = serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{METADATA_FILE}: {e}")))?;
    let assignment = PixelAssignment::load(dir.join(ASSIGNMENT_FILE))?;
    if assignment.grid_size() != meta.grid_size {
        return Err(Error::Malformed(
            "grid size differs between index and assignment".into(),
        ));
    }
    let g = meta.grid_size;
    let images = match meta.format {
        ImageFormat::Png => meta
            .files
            .iter()
            .map(|name| {
                let im = image::open(dir.join(name))?.into_luma8();
                if im.width() as usize != g || im.height() as usize != g {
                    return Err(Error::Shape(format!("{name} is not {g}×{g}")));
                }
                Ok(im.into_raw().into_iter().map(|b| b as f64 / 255.0).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?,
        ImageFormat::Csv => {
            let path = dir.join(CSV_FILE);
            let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            let mut rdr = csv::Reader::from_reader(f);
            let mut images = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                if rec.len() != g * g + 1 {
                    return Err(Error::Malformed(format!("{CSV_FILE} row has {} fields", rec.len())));
                }
                let im = rec
                    .iter()
                    .skip(1)
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::Malformed(format!("bad intensity `{s}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                images.push(im);
            }
            images
        }
    };
    RefinedImageSet::new(assignment, meta.sample_ids, images, meta.fill, meta.method_tag)
}
