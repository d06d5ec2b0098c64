//! Dataset directories: `manifest.json` plus one headerless CSV per view
//! (one sample per row) and a labels CSV.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mvncd_core::{split_known_novel, MultiViewDataset};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub views: Vec<ViewEntry>,
    /// Relative paths resolve against the manifest's directory.
    pub labels: String,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub path: String,
    pub dim: usize,
}

/// Accepts either a dataset directory or the manifest file itself.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let path = manifest_path(path);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Manifest { path, source })
}

/// Loads a dataset with the first-half known-class split.
pub fn load_dataset(path: &Path) -> Result<MultiViewDataset> {
    load_dataset_with_split(path, None)
}

/// Loads a dataset, optionally overriding which classes are known.
pub fn load_dataset_with_split(path: &Path, known: Option<&[usize]>) -> Result<MultiViewDataset> {
    let manifest_file = manifest_path(path);
    let manifest = read_manifest(&manifest_file)?;
    let base = manifest_file.parent().unwrap_or(Path::new("."));
    if manifest.views.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: manifest lists no views",
            manifest_file.display()
        )));
    }

    let labels = read_labels(&base.join(&manifest.labels))?;
    let mut views = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let file = base.join(&entry.path);
        let x = read_view(&file, entry.dim)?;
        if x.ncols() != labels.len() {
            return Err(CliError::Invalid(format!(
                "{}: {} samples, but the labels file has {}",
                file.display(),
                x.ncols(),
                labels.len()
            )));
        }
        views.push(x);
    }

    let known = match known {
        Some(k) => k.to_vec(),
        None => split_known_novel(&labels, manifest.num_classes)?.0,
    };
    Ok(MultiViewDataset::new(views, labels, manifest.num_classes, known)?)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_error(path: &Path, err: csv::Error) -> CliError {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a `n × dim` sample-per-row CSV into a `dim × n` matrix.
pub fn read_view(path: &Path, dim: usize) -> Result<DMatrix<f64>> {
    let mut reader = csv_reader(path)?;
    let mut values = Vec::new();
    let mut n = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e))?;
        let line = row + 1;
        let bad = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != dim {
            return Err(bad(format!("expected {dim} values, found {}", record.len())));
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| bad(format!("column {}: not a number: {field:?}", col + 1)))?;
            if !value.is_finite() {
                return Err(bad(format!("column {}: non-finite value {field:?}", col + 1)));
            }
            values.push(value);
        }
        n += 1;
    }
    // row-major n × dim is column-major dim × n
    Ok(DMatrix::from_vec(dim, n, values))
}

/// One class id per line, or `id,class` lines whose ids must be unique.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut reader = csv_reader(path)?;
    let mut labels = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e))?;
        let line = row + 1;
        let bad = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = match record.len() {
            1 => &record[0],
            2 => {
                let id = record[0].to_string();
                if let Some(first) = seen.insert(id.clone(), line) {
                    return Err(CliError::DuplicateSample {
                        path: path.to_path_buf(),
                        id,
                        first,
                        second: line,
                    });
                }
                &record[1]
            }
            n => return Err(bad(format!("expected 1 or 2 fields, found {n}"))),
        };
        labels.push(field.parse().map_err(|_| bad(format!("not a class id: {field:?}")))?);
    }
    Ok(labels)
}

/// One cluster id per line.
pub fn read_assignment(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("not a cluster id: {l:?}"),
            })
        })
        .collect()
}

/// Writes `bytes` to a sibling temporary file and renames it into place, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes `ds` as `view_<v>.csv`, `labels.csv` and `manifest.json` under
/// `dir`. Values use the shortest representation that round-trips.
pub fn write_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut entries = Vec::new();
    for (v, view) in ds.views().iter().enumerate() {
        let x = view.data();
        let mut out = String::new();
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&x[(i, j)].to_string());
            }
            out.push('\n');
        }
        let name = format!("view_{v}.csv");
        write_atomic(&dir.join(&name), out.as_bytes())?;
        entries.push(ViewEntry {
            path: name,
            dim: x.nrows(),
        });
    }
    let labels: String = ds.labels().iter().map(|l| format!("{l}\n")).collect();
    write_atomic(&dir.join("labels.csv"), labels.as_bytes())?;
    let manifest = Manifest {
        views: entries,
        labels: "labels.csv".into(),
        num_classes: ds.num_classes(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&dir.join(MANIFEST_NAME), json.as_bytes())
}
