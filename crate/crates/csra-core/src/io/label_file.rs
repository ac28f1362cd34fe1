//! Text label table: one line per sample, comma-separated, `id` first and
//! then one `{0, 1, -1}` entry per class (`-1` marks an ignored label).
//! An optional first line starting with `#` is treated as a header.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::label::Label;

/// One parsed line: sample id plus its class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub id: String,
    pub labels: Vec<Label>,
}

/// Parses label-table text. Column counts must be constant and ids unique.
pub fn parse_labels(text: &str) -> Result<Vec<LabelRecord>> {
    let mut records: Vec<LabelRecord> = Vec::new();
    let mut classes: Option<usize> = None;
    let mut seen_data = false;

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if seen_data {
                return Err(Error::LabelFormat {
                    line: line_no,
                    message: "comment lines are only allowed as a leading header".to_string(),
                });
            }
            continue;
        }
        seen_data = true;

        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::LabelFormat {
                line: line_no,
                message: "empty sample id".to_string(),
            });
        }
        let labels: Vec<Label> = fields
            .map(|f| {
                let v: i8 = f.trim().parse().map_err(|_| Error::LabelFormat {
                    line: line_no,
                    message: format!("label field {:?} is not 0, 1, or -1", f.trim()),
                })?;
                Label::from_i8(v).map_err(|_| Error::LabelFormat {
                    line: line_no,
                    message: format!("label field {v} is not 0, 1, or -1"),
                })
            })
            .collect::<Result<_>>()?;
        if labels.is_empty() {
            return Err(Error::LabelFormat {
                line: line_no,
                message: "line has an id but no labels".to_string(),
            });
        }
        match classes {
            None => classes = Some(labels.len()),
            Some(c) if c != labels.len() => {
                return Err(Error::LabelFormat {
                    line: line_no,
                    message: format!("expected {c} labels, found {}", labels.len()),
                });
            }
            _ => {}
        }
        if records.iter().any(|r| r.id == id) {
            return Err(Error::LabelFormat {
                line: line_no,
                message: format!("duplicate sample id {id:?}"),
            });
        }
        records.push(LabelRecord { id, labels });
    }

    if records.is_empty() {
        return Err(Error::LabelFormat {
            line: 0,
            message: "label file has no data lines".to_string(),
        });
    }
    Ok(records)
}

pub fn format_labels(records: &[LabelRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.id);
        for l in &r.labels {
            out.push(',');
            out.push_str(&l.to_i8().to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn write_label_file(path: impl AsRef<Path>, records: &[LabelRecord]) -> Result<()> {
    fs::write(path, format_labels(records))?;
    Ok(())
}
