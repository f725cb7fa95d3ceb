use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Dataset, Manifest};
use crate::error::{Error, Result};
use crate::graphgen::HrrpSample;

/// `data/train.csv` -> `data/train.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().unwrap_or_default().to_string_lossy();
    csv_path.with_file_name(format!("{stem}.manifest.json"))
}

/// Writes the CSV only. Amplitudes use the shortest decimal that parses back
/// to the same double.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::io(path, e);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path).map_err(io)?));
    let header = std::iter::once("label".to_string()).chain((0..dataset.n_cells()).map(|i| format!("h_{i}")));
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    let mut row = Vec::with_capacity(dataset.n_cells() + 1);
    for s in &dataset.samples {
        row.clear();
        row.push(s.label.to_string());
        row.extend(s.amplitudes.iter().map(|a| a.to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.into_inner()
        .map_err(|e| io(e.into_error()))?
        .flush()
        .map_err(io)
}

/// Writes the CSV and its JSON manifest sidecar.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    save_csv(dataset, path)?;
    let mpath = manifest_path(path);
    let mut text = serde_json::to_string_pretty(&dataset.manifest)?;
    text.push('\n');
    std::fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))
}

/// Reads a dataset CSV. When a manifest sidecar exists it supplies the class
/// names and provenance; otherwise the class count is `max label + 1`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(Error::Format(format!("{}: empty file, expected a header", path.display()))),
        Some(r) => r.map_err(|e| csv_err(path, e))?,
    };
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with 'label' followed by one column per range cell".into(),
        });
    }
    let n_cells = header.len() - 1;

    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n_cells + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", n_cells + 1, record.len()),
            });
        }
        let label = record[0].trim().parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("label '{}' is not a class index", &record[0]),
        })?;
        let amplitudes = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, field)| match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    message: format!("h_{i} = '{field}' is not a finite nonnegative number"),
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(HrrpSample::new(amplitudes, label));
    }
    if samples.is_empty() {
        return Err(Error::Format(format!("{}: no samples", path.display())));
    }

    let mpath = manifest_path(path);
    let manifest = if mpath.exists() {
        let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", mpath.display())))?;
        if m.n_cells != n_cells {
            return Err(Error::Format(format!(
                "{} declares {} cells but {} has {n_cells}",
                mpath.display(),
                m.n_cells,
                path.display()
            )));
        }
        m
    } else {
        let classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
        let names = (0..classes).map(|c| format!("class_{c}")).collect();
        Manifest::new(n_cells, names, path.display().to_string())
    };
    Dataset::new(samples, manifest)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
