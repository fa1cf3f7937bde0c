//! Dataset ingestion: TTEN directories, PGM image folders, synthetic specs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ttda_core::io::{load_tensor, save_tensor};
use ttda_core::{Dataset, Tensor};

use crate::config::{ExperimentConfig, Source};
use crate::error::{CliError, CliResult};
use crate::synthetic::generate_synthetic;

pub const LABELS_FILE: &str = "labels.csv";

fn sorted_entries(dir: &Path, want_dirs: bool) -> CliResult<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| CliError::Dataset(format!("cannot read {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry?.path();
        if path.is_dir() == want_dirs {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Class names to indices: numeric order when every name is an integer,
/// lexicographic otherwise.
fn class_index(names: &[String]) -> BTreeMap<String, usize> {
    let mut distinct: Vec<&String> = names.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|n| n.parse::<i64>().is_ok()) {
        distinct.sort_by_key(|n| n.parse::<i64>().unwrap());
    }
    distinct.into_iter().enumerate().map(|(i, n)| (n.clone(), i)).collect()
}

/// Reads every `.tten` file of `dir` in lexicographic order, labeled by
/// `labels.csv` (`filename,class` rows; a `filename,class` header is
/// optional).
pub fn load_tten_dir(dir: &Path) -> CliResult<Dataset> {
    let labels_path = dir.join(LABELS_FILE);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(&labels_path)
        .map_err(|e| CliError::Dataset(format!("missing labels {}: {e}", labels_path.display())))?;
    let mut labels = BTreeMap::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != 2 {
            return Err(CliError::Dataset(format!("{}: row {} is not filename,class", LABELS_FILE, n + 1)));
        }
        if n == 0 && &row[0] == "filename" && &row[1] == "class" {
            continue;
        }
        labels.insert(row[0].to_string(), row[1].to_string());
    }
    let files: Vec<PathBuf> =
        sorted_entries(dir, false)?.into_iter().filter(|p| p.extension().is_some_and(|e| e == "tten")).collect();
    if files.is_empty() {
        return Err(CliError::Dataset(format!("no .tten files in {}", dir.display())));
    }
    let mut names = Vec::with_capacity(files.len());
    for f in &files {
        let name = file_name(f);
        let class =
            labels.get(&name).ok_or_else(|| CliError::Dataset(format!("no label for {name} in {LABELS_FILE}")))?;
        names.push(class.clone());
    }
    if let Some(orphan) = labels.keys().find(|k| !dir.join(k).is_file()) {
        return Err(CliError::Dataset(format!("{LABELS_FILE} lists missing file {orphan}")));
    }
    let index = class_index(&names);
    let samples = files
        .iter()
        .map(|f| load_tensor::<f64>(f).map_err(|e| CliError::Dataset(format!("{}: {e}", f.display()))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Dataset::new(samples, names.iter().map(|n| index[n]).collect())?)
}

/// Writes one `sample_NNNNN.tten` per sample plus `labels.csv`.
pub fn save_tten_dir(dir: &Path, data: &Dataset) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(LABELS_FILE))?;
    w.write_record(["filename", "class"])?;
    let width = data.len().to_string().len().max(5);
    for (k, (sample, label)) in data.iter().enumerate() {
        let name = format!("sample_{k:0width$}.tten");
        save_tensor(dir.join(&name), sample)?;
        w.write_record([name, label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Parses a binary (`P5`) or ASCII (`P2`) PGM image into a `[width, height]`
/// tensor with values divided by the maximum gray value, so the raster
/// order of the file is the canonical linear order.
pub fn parse_pgm(bytes: &[u8]) -> CliResult<Tensor> {
    let bad = |m: &str| CliError::Dataset(format!("PGM: {m}"));
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| bad("empty file"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(bad("not a P2/P5 graymap")),
    };
    let mut header = [0usize; 3];
    for h in &mut header {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| bad("truncated header"))?;
        *h = std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad header number"))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad("invalid dimensions or maximum value"));
    }
    let n = width * height;
    let scale = maxval as f64;
    let data: Vec<f64> = if binary {
        pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let raster = bytes.get(pos..pos + need).ok_or_else(|| bad("truncated raster"))?;
        if wide {
            raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale).collect()
        } else {
            raster.iter().map(|&b| b as f64 / scale).collect()
        }
    } else {
        (0..n)
            .map(|_| {
                let tok = next_token(bytes, &mut pos).ok_or_else(|| bad("truncated raster"))?;
                let v: usize =
                    std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad pixel"))?;
                Ok(v.min(maxval) as f64 / scale)
            })
            .collect::<CliResult<_>>()?
    };
    Ok(Tensor::new(vec![width, height], data)?)
}

/// One class per subdirectory (lexicographic order), `.pgm` files inside
/// in lexicographic order.
pub fn load_pgm_dir(dir: &Path) -> CliResult<Dataset> {
    let class_dirs = sorted_entries(dir, true)?;
    if class_dirs.is_empty() {
        return Err(CliError::Dataset(format!("no class subdirectories in {}", dir.display())));
    }
    let mut classes = Vec::with_capacity(class_dirs.len());
    for cdir in &class_dirs {
        let files: Vec<PathBuf> = sorted_entries(cdir, false)?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
            .collect();
        if files.is_empty() {
            return Err(CliError::Dataset(format!("class directory {} has no .pgm files", cdir.display())));
        }
        let samples = files
            .iter()
            .map(|f| {
                let bytes = fs::read(f).map_err(|e| CliError::Dataset(format!("{}: {e}", f.display())))?;
                parse_pgm(&bytes).map_err(|e| CliError::Dataset(format!("{}: {e}", f.display())))
            })
            .collect::<CliResult<Vec<_>>>()?;
        classes.push(samples);
    }
    Ok(Dataset::from_classes(classes)?)
}

/// Loads the configured source and applies the reshape target.
pub fn load_dataset(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    let data = match &cfg.source {
        Source::Synthetic => generate_synthetic(&cfg.synthetic)?.0,
        Source::Tten(dir) => load_tten_dir(dir)?,
        Source::Pgm(dir) => load_pgm_dir(dir)?,
    };
    match &cfg.reshape {
        Some(shape) => {
            let target: usize = shape.iter().product();
            if target != data.sample_len() {
                return Err(CliError::Dataset(format!(
                    "reshape {shape:?} has {target} entries, samples have {}",
                    data.sample_len()
                )));
            }
            Ok(data.reshape(shape)?)
        }
        None => Ok(data),
    }
}
