#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `groups` latent factors, each copied into `per_group` noisy features; the
/// response is a fixed linear function of the factors plus noise.
pub fn write_grouped_csv(path: &Path, n: usize, groups: usize, per_group: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let coef: Vec<f64> = (0..groups).map(|g| [1.0, -1.0, 0.5, 0.0][g % 4]).collect();
    let mut f = fs::File::create(path).unwrap();
    let mut header = vec!["id".to_string()];
    for g in 0..groups {
        for j in 0..per_group {
            header.push(format!("g{g}_{j}"));
        }
    }
    header.push("y".into());
    writeln!(f, "{}", header.join(",")).unwrap();
    for i in 0..n {
        let z: Vec<f64> = (0..groups).map(|_| std.sample(&mut rng)).collect();
        let mut row = vec![format!("s{i}")];
        for zg in &z {
            for _ in 0..per_group {
                row.push(format!("{:.6}", zg + 0.5 * std.sample(&mut rng)));
            }
        }
        let y: f64 = z.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + 0.1 * std.sample(&mut rng);
        row.push(format!("{y:.6}"));
        writeln!(f, "{}", row.join(",")).unwrap();
    }
}

/// Every file below `dir` keyed by its relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_irefined")
}
