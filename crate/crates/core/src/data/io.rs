//! Dataset files.
//!
//! * `Csv`: header `sample_id,label,t,x1[,x2,...]`, one row per
//!   (sample, time-step), time-steps `0..=H` contiguous per sample.
//! * `Json`: `{"H": .., "d": .., "samples": [{"label": .., "values": [[..], ..]}]}`
//!   with one inner array per time-step.
//! * `Ucr`: one sample per line, the label followed by the values of a
//!   one-dimensional trace, separated by commas, tabs or spaces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Sample};
use crate::error::{Error, Result};
use crate::stl::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Csv,
    Json,
    Ucr,
}

impl Schema {
    /// Guesses the schema from the file extension.
    pub fn from_path(path: &Path) -> Schema {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Schema::Json,
            Some("tsv") | Some("txt") | Some("ucr") => Schema::Ucr,
            _ => Schema::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WideFile {
    #[serde(rename = "H")]
    horizon: usize,
    d: usize,
    samples: Vec<WideSample>,
}

#[derive(Serialize, Deserialize)]
struct WideSample {
    label: usize,
    values: Vec<Vec<f64>>,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: Schema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match schema {
        Schema::Csv => parse_csv(&text),
        Schema::Json => parse_json(&text),
        Schema::Ucr => parse_ucr(&text),
    }
}

pub fn save_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>, schema: Schema) -> Result<()> {
    let path = path.as_ref();
    let text = match schema {
        Schema::Csv => to_csv(dataset),
        Schema::Json => to_json(dataset)?,
        Schema::Ucr => to_ucr(dataset)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_label(cell: &str, row: usize) -> Result<usize> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
        _ => Err(Error::UnknownLabel {
            row,
            label: cell.to_string(),
        }),
    }
}

fn parse_value(cell: &str, row: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonNumeric {
            row,
            cell: cell.to_string(),
        })
}

fn parse_csv(text: &str) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let expected_prefix = ["sample_id", "label", "t"];
    let dims = header.len().saturating_sub(3);
    let header_ok = header.iter().take(3).eq(expected_prefix.iter().copied())
        && dims >= 1
        && header
            .iter()
            .skip(3)
            .enumerate()
            .all(|(j, name)| name == format!("x{}", j + 1));
    if !header_ok {
        return Err(Error::InvalidDataset(format!(
            "unexpected header {:?}; expected sample_id,label,t,x1[,x2,...]",
            header.iter().collect::<Vec<_>>()
        )));
    }

    struct Pending {
        id: String,
        label: usize,
        first_row: usize,
        rows: Vec<Vec<f64>>,
    }
    let mut done: Vec<Pending> = Vec::new();
    let mut current: Option<Pending> = None;
    for (offset, record) in reader.records().enumerate() {
        // Line numbers are one-based and count the header.
        let row = offset + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::InvalidDataset(format!(
                "row {row}: {} fields, expected {}",
                record.len(),
                header.len()
            )));
        }
        let id = record[0].to_string();
        let label = parse_label(&record[1], row)?;
        let t: usize = record[2].parse().map_err(|_| Error::NonNumeric {
            row,
            cell: record[2].to_string(),
        })?;
        let values = (3..record.len())
            .map(|j| parse_value(&record[j], row))
            .collect::<Result<Vec<_>>>()?;

        if current.as_ref().map(|p| p.id != id).unwrap_or(true) {
            if done.iter().any(|p| p.id == id) {
                return Err(Error::InvalidDataset(format!(
                    "row {row}: rows of sample {id:?} are not contiguous"
                )));
            }
            done.extend(current.take());
            current = Some(Pending {
                id: id.clone(),
                label,
                first_row: row,
                rows: Vec::new(),
            });
        }
        let pending = current.as_mut().expect("set above");
        if pending.label != label {
            return Err(Error::InvalidDataset(format!("row {row}: sample {id:?} changes label")));
        }
        if t != pending.rows.len() {
            return Err(Error::InvalidDataset(format!(
                "row {row}: expected time-step {} for sample {id:?}, found {t}",
                pending.rows.len()
            )));
        }
        pending.rows.push(values);
    }
    done.extend(current);

    let expected_len = done.first().map(|p| p.rows.len()).ok_or(Error::EmptyDataset)?;
    let mut samples = Vec::with_capacity(done.len());
    for p in done {
        if p.rows.len() != expected_len {
            return Err(Error::RaggedTrace {
                row: p.first_row,
                expected: expected_len,
                found: p.rows.len(),
            });
        }
        samples.push(Sample {
            signal: Signal::new(p.rows)?,
            label: p.label,
        });
    }
    LabeledDataset::new(samples, None)
}

fn parse_json(text: &str) -> Result<LabeledDataset> {
    let file: WideFile = serde_json::from_str(text)?;
    let mut samples = Vec::with_capacity(file.samples.len());
    for (i, s) in file.samples.into_iter().enumerate() {
        if s.values.len() != file.horizon + 1 {
            return Err(Error::RaggedTrace {
                row: i,
                expected: file.horizon + 1,
                found: s.values.len(),
            });
        }
        if s.values.iter().any(|r| r.len() != file.d) {
            return Err(Error::InvalidDataset(format!(
                "sample {i}: every time-step needs {} values",
                file.d
            )));
        }
        if s.label == 0 {
            return Err(Error::UnknownLabel {
                row: i,
                label: "0".into(),
            });
        }
        samples.push(Sample {
            signal: Signal::new(s.values)?,
            label: s.label,
        });
    }
    LabeledDataset::new(samples, None)
}

fn parse_ucr(text: &str) -> Result<LabeledDataset> {
    let mut samples = Vec::new();
    let mut expected = None;
    for (offset, line) in text.lines().enumerate() {
        let row = offset + 1;
        let cells: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        let Some((label, values)) = cells.split_first() else {
            continue;
        };
        let label = parse_label(label, row)?;
        let values = values.iter().map(|c| parse_value(c, row)).collect::<Result<Vec<_>>>()?;
        let len = *expected.get_or_insert(values.len());
        if values.len() != len {
            return Err(Error::RaggedTrace {
                row,
                expected: len,
                found: values.len(),
            });
        }
        samples.push(Sample {
            signal: Signal::scalar(values)?,
            label,
        });
    }
    LabeledDataset::new(samples, None)
}

fn to_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::from("sample_id,label,t");
    for j in 1..=dataset.dims() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for (i, s) in dataset.samples().iter().enumerate() {
        for k in 0..s.signal.len() {
            let _ = write!(out, "{i},{},{k}", s.label);
            for v in s.signal.row(k) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

fn to_json(dataset: &LabeledDataset) -> Result<String> {
    let file = WideFile {
        horizon: dataset.horizon(),
        d: dataset.dims(),
        samples: dataset
            .samples()
            .iter()
            .map(|s| WideSample {
                label: s.label,
                values: (0..s.signal.len()).map(|k| s.signal.row(k).to_vec()).collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

fn to_ucr(dataset: &LabeledDataset) -> Result<String> {
    if dataset.dims() != 1 {
        return Err(Error::InvalidDataset(
            "the UCR layout holds one-dimensional traces only".into(),
        ));
    }
    let mut out = String::new();
    for s in dataset.samples() {
        let _ = write!(out, "{}", s.label);
        for v in s.signal.channel(0) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    Ok(out)
}
