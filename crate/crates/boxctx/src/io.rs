//! On-disk formats: signalset directories, structure and feasible-set JSON,
//! metrics, trace and feature CSV files, and ensemble files.

use std::fs;
use std::path::{Path, PathBuf};

use boxctx_core::classify::TrainedModel;
use boxctx_core::context::{ContextError, ContextStructure, FeasibleSet, StructureDef};
use boxctx_core::evaluation::{Method, MetricsRow};
use boxctx_core::features::{extract_features, feature_dim, FeatureError};
use boxctx_core::optimizer::TraceRow;
use boxctx_core::runtime::ContextEnsemble;
use boxctx_core::signal::{SignalError, SignalRecord, SignalSet};
use boxctx_core::ClassLabel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const META_FILE: &str = "meta.json";
pub const RECORDS_DIR: &str = "records";
pub const ENSEMBLE_FORMAT: &str = "boxctx-ensemble";
pub const ENSEMBLE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Signal { path: PathBuf, source: SignalError },
    #[error("{}: {source}", path.display())]
    Context { path: PathBuf, source: ContextError },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Deserialize JSON, reporting the field path and position of any error.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        let message = if at == "." {
            inner.to_string()
        } else {
            format!("at `{at}`: {inner}")
        };
        parse_err(path, message)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_json(&text, path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsetMeta {
    pub num_classes: u32,
    pub num_channels: usize,
    pub sample_rate_hz: u32,
}

/// `<id>_<label>.csv` split at the last underscore.
fn parse_record_name(name: &str) -> Option<(&str, ClassLabel)> {
    let stem = name.strip_suffix(".csv")?;
    let (id, label) = stem.rsplit_once('_')?;
    if id.is_empty() {
        return None;
    }
    Some((id, label.parse().ok()?))
}

fn read_record(path: &Path, id: &str, label: ClassLabel, meta: &SignalsetMeta) -> Result<SignalRecord, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    let width = header.len();
    let mut channels = vec![Vec::new(); width];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != width {
            return Err(IoError::Signal {
                path: path.to_path_buf(),
                source: SignalError::RaggedRecord {
                    record_id: id.to_string(),
                    detail: format!("row {} has {} values, header has {width}", row + 1, rec.len()),
                },
            });
        }
        for (ch, field) in channels.iter_mut().zip(rec.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("row {}: '{field}' is not a number", row + 1)))?;
            ch.push(v);
        }
    }
    if width != meta.num_channels {
        return Err(IoError::Signal {
            path: path.to_path_buf(),
            source: SignalError::RaggedRecord {
                record_id: id.to_string(),
                detail: format!("{width} channel columns, {} declared", meta.num_channels),
            },
        });
    }
    SignalRecord::new(id, channels, meta.sample_rate_hz, label).map_err(|source| IoError::Signal {
        path: path.to_path_buf(),
        source,
    })
}

/// Read `meta.json` and every `records/<id>_<label>.csv` (sorted by file name).
pub fn load_signalset(dir: &Path) -> Result<SignalSet, IoError> {
    let meta: SignalsetMeta = read_json(&dir.join(META_FILE))?;
    let rec_dir = dir.join(RECORDS_DIR);
    let mut names: Vec<String> = Vec::new();
    if rec_dir.is_dir() {
        for entry in fs::read_dir(&rec_dir).map_err(io_err(&rec_dir))? {
            let entry = entry.map_err(io_err(&rec_dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") {
                names.push(name);
            }
        }
    }
    names.sort();
    let mut records = Vec::with_capacity(names.len());
    for name in &names {
        let path = rec_dir.join(name);
        let (id, label) =
            parse_record_name(name).ok_or_else(|| parse_err(&path, "file name must be <id>_<label>.csv"))?;
        records.push(read_record(&path, id, label, &meta)?);
    }
    SignalSet::new(records, meta.num_classes).map_err(|source| IoError::Signal {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn save_signalset(dir: &Path, set: &SignalSet) -> Result<(), IoError> {
    let rec_dir = dir.join(RECORDS_DIR);
    fs::create_dir_all(&rec_dir).map_err(io_err(&rec_dir))?;
    write_json(
        &dir.join(META_FILE),
        &SignalsetMeta {
            num_classes: set.num_classes(),
            num_channels: set.num_channels(),
            sample_rate_hz: set.sample_rate_hz(),
        },
    )?;
    for r in set.records() {
        let path = rec_dir.join(format!("{}_{}.csv", r.record_id(), r.class_label()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        let header: Vec<String> = (1..=r.num_channels()).map(|c| format!("c{c}")).collect();
        w.write_record(&header).map_err(csv_err(&path))?;
        for t in 0..r.len() {
            w.write_record(r.channels().iter().map(|ch| ch[t].to_string()))
                .map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn read_structure_def(path: &Path) -> Result<StructureDef, IoError> {
    read_json(path)
}

pub fn load_structure(path: &Path) -> Result<ContextStructure, IoError> {
    ContextStructure::new(read_structure_def(path)?).map_err(|source| IoError::Context {
        path: path.to_path_buf(),
        source,
    })
}

/// The feasible set as a JSON list of permutations.
pub fn write_feasible(path: &Path, set: &FeasibleSet) -> Result<(), IoError> {
    let perms: Vec<&[ClassLabel]> = set.iter().map(|b| b.secondary()).collect();
    let text = serde_json::to_string(&perms).map_err(|e| parse_err(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["method", "classifier", "fold", "zo", "sqcov"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.method.tag().to_string(),
            r.classifier.clone(),
            r.fold.to_string(),
            r.zo.to_string(),
            r.sqcov.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Deserialize)]
struct CsvMetrics {
    method: Method,
    classifier: String,
    fold: usize,
    zo: f64,
    sqcov: f64,
}

/// Read a metrics CSV; per-fold spreads and sequence counts are not stored
/// there and come back as zero.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize::<CsvMetrics>()
        .map(|row| {
            let row = row.map_err(csv_err(path))?;
            Ok(MetricsRow {
                method: row.method,
                classifier: row.classifier,
                fold: row.fold,
                sequences: 0,
                movements: 0,
                zo: row.zo,
                zo_std: 0.0,
                sqcov: row.sqcov,
                sqcov_std: 0.0,
            })
        })
        .collect()
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["generation", "best_fitness", "mean_fitness", "evaluations"])
        .map_err(csv_err(path))?;
    for t in trace {
        w.write_record([
            t.generation.to_string(),
            t.best_fitness.to_string(),
            t.mean_fitness.to_string(),
            t.evaluations.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// `record_id,label,f0..f{d-1}`, one row per record.
pub fn write_features_csv(path: &Path, set: &SignalSet) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec![String::from("record_id"), String::from("label")];
    header.extend((0..feature_dim(set.num_channels())).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for r in set.records() {
        let f = extract_features(r)?;
        let mut row = vec![r.record_id().to_string(), r.class_label().to_string()];
        row.extend(f.values.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    format: String,
    version: u32,
    ensemble: ContextEnsemble<TrainedModel>,
}

pub fn save_ensemble(path: &Path, ensemble: &ContextEnsemble<TrainedModel>) -> Result<(), IoError> {
    let file = EnsembleFile {
        format: ENSEMBLE_FORMAT.to_string(),
        version: ENSEMBLE_VERSION,
        ensemble: ensemble.clone(),
    };
    let text = serde_json::to_string(&file).map_err(|e| parse_err(path, e.to_string()))?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_ensemble(path: &Path) -> Result<ContextEnsemble<TrainedModel>, IoError> {
    let file: EnsembleFile = read_json(path)?;
    if file.format != ENSEMBLE_FORMAT || file.version != ENSEMBLE_VERSION {
        return Err(parse_err(
            path,
            format!(
                "unsupported ensemble file {} v{} (expected {ENSEMBLE_FORMAT} v{ENSEMBLE_VERSION})",
                file.format, file.version
            ),
        ));
    }
    Ok(file.ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_names() {
        assert_eq!(parse_record_name("s1_0003_4.csv"), Some(("s1_0003", 4)));
        assert_eq!(parse_record_name("r_x.csv"), None);
        assert_eq!(parse_record_name("_2.csv"), None);
        assert_eq!(parse_record_name("a_2.txt"), None);
    }

    #[test]
    fn json_errors_carry_field_path() {
        let e = parse_json::<StructureDef>(
            r#"{"num_classes": 2, "movements": [{"id": "x"}], "boxes": []}"#,
            Path::new("s.json"),
        )
        .unwrap_err();
        let text = e.to_string();
        assert!(text.contains("movements[0].id"), "{text}");
        assert!(text.contains("line 1"), "{text}");
    }
}
