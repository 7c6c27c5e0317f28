use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{LabeledExample, SentimentLabel};
use crate::{Error, Result};

/// A document without a label. `id` comes from the record's `id` field when
/// present, else from `<prefix><line number>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledDoc {
    pub id: String,
    pub text: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_object(line: &str, line_no: usize) -> Result<serde_json::Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::Parse {
            line: line_no,
            msg: "expected a JSON object".into(),
        }),
        Err(e) => Err(Error::Parse {
            line: line_no,
            msg: format!("malformed JSON ({e})"),
        }),
    }
}

fn text_field(map: &serde_json::Map<String, Value>, line_no: usize) -> Result<String> {
    match map.get("text") {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(Error::Parse {
            line: line_no,
            msg: "empty text".into(),
        }),
        Some(_) => Err(Error::Parse {
            line: line_no,
            msg: "field 'text' is not a string".into(),
        }),
        None => Err(Error::Parse {
            line: line_no,
            msg: "missing field 'text'".into(),
        }),
    }
}

fn parse_labeled(line: &str, line_no: usize) -> Result<LabeledExample> {
    let map = parse_object(line, line_no)?;
    let text = text_field(&map, line_no)?;
    let label = match map.get("label") {
        Some(Value::String(s)) => SentimentLabel::from_name(s).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("unknown label '{s}'"),
        })?,
        Some(other) => {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("unknown label '{other}'"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: line_no,
                msg: "missing field 'label'".into(),
            })
        }
    };
    Ok(LabeledExample { text, label })
}

/// Streams `{"text", "label"}` records, one per non-blank line.
pub fn read_labeled_jsonl<R: BufRead>(reader: R) -> impl Iterator<Item = Result<LabeledExample>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::Parse {
                line: i + 1,
                msg: format!("unreadable line ({e})"),
            })),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(parse_labeled(&l, i + 1)),
        })
}

/// Streams `{"text"}` records (an optional `id` string or number is kept).
pub fn read_unlabeled_jsonl<R: BufRead>(
    reader: R,
    id_prefix: impl Into<String>,
) -> impl Iterator<Item = Result<UnlabeledDoc>> {
    let id_prefix = id_prefix.into();
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line_no = i + 1;
            let l = match line {
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: line_no,
                        msg: format!("unreadable line ({e})"),
                    }))
                }
                Ok(l) if l.trim().is_empty() => return None,
                Ok(l) => l,
            };
            Some(parse_object(&l, line_no).and_then(|map| {
                let text = text_field(&map, line_no)?;
                let id = match map.get("id") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => format!("{id_prefix}{line_no}"),
                };
                Ok(UnlabeledDoc { id, text })
            }))
        })
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    read_labeled_jsonl(open(path.as_ref())?).collect()
}

pub fn open_unlabeled_jsonl(
    path: impl AsRef<Path>,
    id_prefix: impl Into<String>,
) -> Result<impl Iterator<Item = Result<UnlabeledDoc>>> {
    Ok(read_unlabeled_jsonl(open(path.as_ref())?, id_prefix))
}

/// Sentiment-140 CSV: six quoted fields, polarity in field 0 (0/2/4) and the
/// text in field 5.
pub fn load_sentiment140_csv(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    read_sentiment140_csv(open(path.as_ref())?)
}

pub fn read_sentiment140_csv<R: std::io::Read>(reader: R) -> Result<Vec<LabeledExample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            msg: format!("malformed CSV ({e})"),
        })?;
        let line_no = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 6 fields, found {}", rec.len()),
            });
        }
        let label = match rec[0].trim() {
            "0" => SentimentLabel::Negative,
            "2" => SentimentLabel::Neutral,
            "4" => SentimentLabel::Positive,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("polarity '{other}' not in {{0, 2, 4}}"),
                })
            }
        };
        let text = rec[5].to_string();
        if text.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty text".into(),
            });
        }
        out.push(LabeledExample { text, label });
    }
    Ok(out)
}

/// Writes any serializable records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Incremental JSON-lines writer.
pub struct JsonlWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(JsonlWriter {
            out: BufWriter::new(file),
            path,
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
