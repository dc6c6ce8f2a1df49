//! Dataset files.
//!
//! JSON lines: a header object `{"labels": [...]}` followed by one object per
//! item with keys `id`, `counts`, and optionally `features` and `annotators`.
//! When the first line is not a header, label names are read from a sidecar
//! file `<stem>.labels.json` (either a JSON array or `{"labels": [...]}`).
//!
//! CSV: a header row with `id`, one count column per label (in order), and
//! optional feature columns prefixed `f_`. Lines starting with `#` are
//! ignored.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{DataItem, Dataset};
use crate::error::{Error, Result};
use crate::labels::{LabelCounts, LabelSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guesses the format from the file extension; anything but `.csv` is
    /// treated as JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DatasetFormat::Jsonl => parse_jsonl(path, &text),
        DatasetFormat::Csv => parse_csv(path, &text),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    id: String,
    counts: Vec<u64>,
    #[serde(default)]
    features: Option<Vec<f64>>,
    #[serde(default)]
    annotators: Option<Vec<String>>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    path.with_file_name(format!("{stem}.labels.json"))
}

fn labels_from_value(v: &Value) -> Option<Vec<String>> {
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(o) => o.get("labels")?.as_array()?,
        _ => return None,
    };
    arr.iter().map(|x| x.as_str().map(str::to_owned)).collect()
}

fn parse_jsonl(path: &Path, text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let header = match lines.peek() {
        Some((line, first)) => {
            let v: Value = serde_json::from_str(first).map_err(|e| parse_error(path, *line, e.to_string()))?;
            match &v {
                Value::Object(o) if o.contains_key("labels") && !o.contains_key("counts") => {
                    let labels = labels_from_value(&v)
                        .ok_or_else(|| parse_error(path, *line, "labels must be an array of strings"))?;
                    lines.next();
                    Some(labels)
                }
                _ => None,
            }
        }
        None => None,
    };
    let labels = match header {
        Some(l) => l,
        None => {
            let side = sidecar_path(path);
            let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| parse_error(&side, 1, e.to_string()))?;
            labels_from_value(&v).ok_or_else(|| parse_error(&side, 1, "expected a label name array"))?
        }
    };
    let space = LabelSpace::new(labels)?;

    let mut items = Vec::new();
    for (line, l) in lines {
        let row: JsonRow = serde_json::from_str(l).map_err(|e| parse_error(path, line, e.to_string()))?;
        items.push(make_item(
            path,
            line,
            &space,
            row.id,
            row.counts,
            row.features,
            row.annotators,
        )?);
    }
    Dataset::new(space, items)
}

fn make_item(
    path: &Path,
    line: usize,
    space: &LabelSpace,
    id: String,
    counts: Vec<u64>,
    features: Option<Vec<f64>>,
    annotators: Option<Vec<String>>,
) -> Result<DataItem> {
    if counts.len() != space.len() {
        return Err(parse_error(
            path,
            line,
            format!(
                "item {id:?}: dimension mismatch: expected {} counts, found {}",
                space.len(),
                counts.len()
            ),
        ));
    }
    let counts = LabelCounts::new(counts).map_err(|_| Error::ZeroTotal { id: id.clone() })?;
    Ok(DataItem {
        id,
        counts,
        features,
        annotator_ids: annotators,
    })
}

fn parse_csv(path: &Path, text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let id_col = headers
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| parse_error(path, 1, "missing id column"))?;
    let label_cols: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(i, h)| *i != id_col && !h.starts_with("f_"))
        .collect();
    let feature_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("f_"))
        .map(|(i, _)| i)
        .collect();
    let space = LabelSpace::new(label_cols.iter().map(|(_, h)| h.to_string()))?;

    let mut items = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(parse_error(
                path,
                line,
                format!(
                    "dimension mismatch: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            ));
        }
        let id = record[id_col].to_string();
        let counts = label_cols
            .iter()
            .map(|(i, h)| {
                record[*i]
                    .parse::<u64>()
                    .map_err(|e| parse_error(path, line, format!("column {h}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let features = if feature_cols.is_empty() {
            None
        } else {
            Some(
                feature_cols
                    .iter()
                    .map(|&i| {
                        record[i]
                            .parse::<f64>()
                            .map_err(|e| parse_error(path, line, format!("column {}: {e}", &headers[i])))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        items.push(make_item(path, line, &space, id, counts, features, None)?);
    }
    Dataset::new(space, items)
}

/// Serializes a dataset as JSON lines with a header object. Extra keys
/// (for instance the producing configuration) are merged into the header.
pub fn to_jsonl(dataset: &Dataset, header_extra: Option<&Map<String, Value>>) -> Result<String> {
    let mut header = Map::new();
    header.insert("labels".into(), serde_json::to_value(dataset.label_space().names())?);
    if let Some(extra) = header_extra {
        for (k, v) in extra {
            header.insert(k.clone(), v.clone());
        }
    }
    let mut out = serde_json::to_string(&Value::Object(header))?;
    out.push('\n');
    for item in dataset.items() {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

/// Serializes a dataset as CSV (features written as `f_0`, `f_1`, ...).
pub fn to_csv(dataset: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(dataset.label_space().names().iter().cloned());
    let fdim = dataset.feature_dim().unwrap_or(0);
    header.extend((0..fdim).map(|i| format!("f_{i}")));
    w.write_record(&header)?;
    for item in dataset.items() {
        let mut row = vec![item.id.clone()];
        row.extend(item.counts.iter().map(u64::to_string));
        if let Some(f) = &item.features {
            row.extend(f.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
