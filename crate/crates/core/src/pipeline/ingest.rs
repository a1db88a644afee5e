//! Reading and writing metric tables, raw generations and human ratings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde_json::Value;

use super::InputError;
use crate::dominance::{MetricRecord, MetricSet};
use crate::metrics;
use crate::qtext::HumanRatings;

/// Separator for composite method ids built from model, strategy and params.
pub const METHOD_PARTS_SEPARATOR: &str = "|";

enum MethodColumns {
    Single(usize),
    Parts([usize; 3]),
}

impl MethodColumns {
    fn from_header(header: &[&str], source: &str) -> Result<Self, InputError> {
        let find = |name: &str| header.iter().position(|h| *h == name);
        match (find("method_id"), find("model"), find("strategy"), find("params")) {
            (Some(i), None, None, None) => Ok(MethodColumns::Single(i)),
            (None, Some(m), Some(s), Some(p)) => Ok(MethodColumns::Parts([m, s, p])),
            (Some(_), ..) => Err(InputError::parse(source, 1, "header has both method_id and model/strategy/params")),
            _ => Err(InputError::parse(source, 1, "header needs method_id or model,strategy,params")),
        }
    }

    fn columns(&self) -> Vec<usize> {
        match self {
            MethodColumns::Single(i) => vec![*i],
            MethodColumns::Parts(p) => p.to_vec(),
        }
    }

    fn method_id(&self, field: impl Fn(usize) -> String) -> String {
        match self {
            MethodColumns::Single(i) => field(*i),
            MethodColumns::Parts(p) => p.map(&field).join(METHOD_PARTS_SEPARATOR),
        }
    }
}

struct Dedup<'a> {
    source: &'a str,
    seen: HashMap<(String, String), u64>,
}

impl<'a> Dedup<'a> {
    fn new(source: &'a str) -> Self {
        Dedup { source, seen: HashMap::new() }
    }

    fn check(&mut self, r: &MetricRecord, line: u64) -> Result<(), InputError> {
        if let Some(&first_line) = self.seen.get(&(r.instance_id.clone(), r.method_id.clone())) {
            return Err(InputError::DuplicateRecord {
                file: self.source.to_string(),
                line,
                first_line,
                instance: r.instance_id.clone(),
                method: r.method_id.clone(),
            });
        }
        self.seen.insert((r.instance_id.clone(), r.method_id.clone()), line);
        Ok(())
    }
}

fn parse_value(raw: &str, source: &str, line: u64, column: &str) -> Result<f64, InputError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(InputError::parse(source, line, format!("missing value for {column}")));
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| InputError::parse(source, line, format!("{column}: {raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(InputError::NonFiniteValue { file: source.to_string(), line, column: column.to_string() });
    }
    Ok(v)
}

/// Parses a metric table with a header row. Columns are the instance id, the
/// method identity and one column per configured metric, in any order.
pub fn parse_csv<R: Read>(reader: R, metrics: &MetricSet, source: &str) -> Result<Vec<MetricRecord>, InputError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| InputError::parse(source, 1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let instance_col = names
        .iter()
        .position(|h| *h == "instance_id")
        .ok_or_else(|| InputError::parse(source, 1, "header has no instance_id column"))?;
    let method = MethodColumns::from_header(&names, source)?;
    let mut metric_cols = Vec::new();
    for name in metrics.names() {
        let col = names
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| InputError::parse(source, 1, format!("header has no {name} column")))?;
        metric_cols.push((name.to_string(), col));
    }
    let known = 1 + method.columns().len() + metric_cols.len();
    if names.len() != known {
        let extra: Vec<&str> = names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != instance_col && !method.columns().contains(i) && !metric_cols.iter().any(|(_, c)| c == i))
            .map(|(_, h)| *h)
            .collect();
        return Err(InputError::parse(source, 1, format!("undeclared columns {extra:?}")));
    }

    let mut out = Vec::new();
    let mut dedup = Dedup::new(source);
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            InputError::parse(source, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != names.len() {
            return Err(InputError::parse(
                source,
                line,
                format!("expected {} fields, found {}", names.len(), row.len()),
            ));
        }
        let field = |i: usize| row[i].trim().to_string();
        let instance_id = field(instance_col);
        if instance_id.is_empty() {
            return Err(InputError::parse(source, line, "empty instance_id"));
        }
        let method_id = method.method_id(field);
        if method_id.is_empty() {
            return Err(InputError::parse(source, line, "empty method id"));
        }
        let mut values = std::collections::BTreeMap::new();
        for (name, col) in &metric_cols {
            values.insert(name.clone(), parse_value(&row[*col], source, line, name)?);
        }
        let rec = MetricRecord { instance_id, method_id, values };
        dedup.check(&rec, line)?;
        out.push(rec);
    }
    Ok(out)
}

fn json_string(obj: &serde_json::Map<String, Value>, key: &str, source: &str, line: u64) -> Result<Option<String>, InputError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(_) => Err(InputError::parse(source, line, format!("{key} must be a string"))),
    }
}

/// Parses JSON lines with the same keys as the CSV header. Blank lines are
/// skipped.
pub fn parse_jsonl<R: BufRead>(reader: R, metrics: &MetricSet, source: &str) -> Result<Vec<MetricRecord>, InputError> {
    let mut out = Vec::new();
    let mut dedup = Dedup::new(source);
    for (k, line_text) in reader.lines().enumerate() {
        let line = k as u64 + 1;
        let text = line_text.map_err(|e| InputError::parse(source, line, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| InputError::parse(source, line, e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(InputError::parse(source, line, "expected a JSON object"));
        };
        let instance_id = json_string(&obj, "instance_id", source, line)?
            .ok_or_else(|| InputError::parse(source, line, "missing instance_id"))?;
        let method_id = match json_string(&obj, "method_id", source, line)? {
            Some(m) => m,
            None => {
                let parts = ["model", "strategy", "params"]
                    .iter()
                    .map(|k| {
                        json_string(&obj, k, source, line)?
                            .ok_or_else(|| InputError::parse(source, line, "missing method_id (or model, strategy, params)"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                parts.join(METHOD_PARTS_SEPARATOR)
            }
        };
        let mut values = std::collections::BTreeMap::new();
        for name in metrics.names() {
            let v = match obj.get(name) {
                Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
                Some(Value::Null) | None => return Err(InputError::parse(source, line, format!("missing value for {name}"))),
                Some(Value::String(s)) => parse_value(s, source, line, name)?,
                Some(_) => return Err(InputError::parse(source, line, format!("{name} must be a number"))),
            };
            if !v.is_finite() {
                return Err(InputError::NonFiniteValue { file: source.to_string(), line, column: name.to_string() });
            }
            values.insert(name.to_string(), v);
        }
        let rec = MetricRecord { instance_id, method_id, values };
        dedup.check(&rec, line)?;
        out.push(rec);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File, InputError> {
    File::open(path).map_err(|e| InputError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

/// Reads a metric table, choosing JSON lines by a `.jsonl` or `.ndjson`
/// extension and CSV otherwise.
pub fn read_metric_table(path: &Path, metrics: &MetricSet) -> Result<Vec<MetricRecord>, InputError> {
    let source = path.display().to_string();
    let file = open(path)?;
    if is_jsonl(path) {
        parse_jsonl(BufReader::new(file), metrics, &source)
    } else {
        parse_csv(file, metrics, &source)
    }
}

/// Writes records as CSV with the canonical header.
pub fn write_csv<W: Write>(records: &[MetricRecord], metrics: &MetricSet, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["instance_id".to_string(), "method_id".to_string()];
    header.extend(metrics.names().map(str::to_string));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.instance_id.clone(), r.method_id.clone()];
        row.extend(metrics.names().map(|m| r.get(m).map_or(String::new(), |v| v.to_string())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn json_array<T: serde::de::DeserializeOwned>(raw: &str, source: &str, line: u64, column: &str) -> Result<Vec<T>, InputError> {
    serde_json::from_str(raw).map_err(|e| InputError::parse(source, line, format!("{column}: {e}")))
}

/// Computes metric records from raw generations.
///
/// Columns: `instance_id`, `method_id`, `tokens` (JSON array of strings) and
/// `logprobs` (JSON array of the generating model's token log-probabilities).
/// An optional `coherence_logprobs` column holds the scoring model's
/// prompt-conditioned log-probabilities; without it coherence uses `logprobs`.
pub fn parse_generations<R: Read>(reader: R, source: &str) -> Result<Vec<MetricRecord>, InputError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers().map_err(|e| InputError::parse(source, 1, e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let need = |name: &str| col(name).ok_or_else(|| InputError::parse(source, 1, format!("header has no {name} column")));
    let (ic, mc, tc, lc) = (need("instance_id")?, need("method_id")?, need("tokens")?, need("logprobs")?);
    let cc = col("coherence_logprobs");
    let mut out = Vec::new();
    let mut dedup = Dedup::new(source);
    for row in rdr.records() {
        let row = row.map_err(|e| InputError::parse(source, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let tokens: Vec<String> = json_array(&row[tc], source, line, "tokens")?;
        let logprobs: Vec<f64> = json_array(&row[lc], source, line, "logprobs")?;
        let coherence_lp: Vec<f64> = match cc {
            Some(c) => json_array(&row[c], source, line, "coherence_logprobs")?,
            None => logprobs.clone(),
        };
        let metric_err = |e: metrics::MetricsError| InputError::Metrics { file: source.to_string(), line, message: e.to_string() };
        let rec = MetricRecord::new(
            row[ic].trim(),
            row[mc].trim(),
            [
                ("coherence", metrics::coherence(&coherence_lp).map_err(metric_err)?),
                ("diversity", metrics::diversity(&tokens).map_err(metric_err)?),
                ("perplexity", metrics::perplexity(&logprobs).map_err(metric_err)?),
            ],
        );
        dedup.check(&rec, line)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_generations(path: &Path) -> Result<Vec<MetricRecord>, InputError> {
    parse_generations(open(path)?, &path.display().to_string())
}

/// Parses a `key,rating` table.
pub fn parse_ratings<R: Read>(reader: R, source: &str) -> Result<HumanRatings, InputError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers().map_err(|e| InputError::parse(source, 1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["key", "rating"] {
        return Err(InputError::parse(source, 1, "ratings header must be key,rating"));
    }
    let mut ratings = HumanRatings::default();
    for row in rdr.records() {
        let row = row.map_err(|e| InputError::parse(source, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let key = row[0].trim().to_string();
        let v = parse_value(&row[1], source, line, "rating")?;
        if ratings.ratings.insert(key.clone(), v).is_some() {
            return Err(InputError::parse(source, line, format!("duplicate rating key {key:?}")));
        }
    }
    Ok(ratings)
}

pub fn read_ratings(path: &Path) -> Result<HumanRatings, InputError> {
    parse_ratings(open(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> MetricSet {
        MetricSet::text_default()
    }

    #[test]
    fn three_row_csv() {
        let text = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1.5,0.9,4\n1,b,-2,0.8,5.5\n2,a,-1,0.7,3\n";
        let recs = parse_csv(text.as_bytes(), &m(), "t.csv").unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].method_id, "b");
        assert_eq!(recs[1].get("perplexity"), Some(5.5));
    }

    #[test]
    fn columns_in_any_order_and_composite_methods() {
        let text = "perplexity,model,diversity,strategy,instance_id,params,coherence\n4,gpt2,0.9,topk,7,k=5,-1\n";
        let recs = parse_csv(text.as_bytes(), &m(), "t.csv").unwrap();
        assert_eq!(recs[0].method_id, "gpt2|topk|k=5");
        assert_eq!(recs[0].instance_id, "7");
        assert_eq!(recs[0].get("coherence"), Some(-1.0));
    }

    #[test]
    fn missing_column_names_the_line() {
        let text = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1.5,0.9,4\n1,b,-2,,5\n";
        match parse_csv(text.as_bytes(), &m(), "t.csv") {
            Err(InputError::Parse { line: 3, message, .. }) => assert!(message.contains("diversity")),
            other => panic!("{other:?}"),
        }
        let short = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1.5,4\n";
        assert!(matches!(parse_csv(short.as_bytes(), &m(), "t.csv"), Err(InputError::Parse { line: 2, .. })));
        let no_col = "instance_id,method_id,coherence,perplexity\n1,a,-1.5,4\n";
        assert!(matches!(parse_csv(no_col.as_bytes(), &m(), "t.csv"), Err(InputError::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicates_and_non_finite_values() {
        let dup = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1,0.9,4\n2,a,-1,0.9,4\n1,a,-2,0.5,3\n";
        assert_eq!(
            parse_csv(dup.as_bytes(), &m(), "t.csv").unwrap_err(),
            InputError::DuplicateRecord { file: "t.csv".into(), line: 4, first_line: 2, instance: "1".into(), method: "a".into() }
        );
        let nan = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1,NaN,4\n";
        assert!(matches!(parse_csv(nan.as_bytes(), &m(), "t.csv"), Err(InputError::NonFiniteValue { line: 2, .. })));
    }

    #[test]
    fn undeclared_columns_are_rejected() {
        let text = "instance_id,method_id,coherence,diversity,perplexity,mauve\n1,a,-1,0.9,4,0.3\n";
        assert!(matches!(parse_csv(text.as_bytes(), &m(), "t.csv"), Err(InputError::Parse { line: 1, .. })));
    }

    #[test]
    fn jsonl_matches_csv() {
        let csv_text = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1.5,0.9,4\n1,b,-2,0.8,5.5\n";
        let jsonl = "{\"instance_id\":\"1\",\"method_id\":\"a\",\"coherence\":-1.5,\"diversity\":0.9,\"perplexity\":4}\n\n{\"instance_id\":1,\"model\":\"x\",\"strategy\":\"y\",\"params\":\"z\",\"coherence\":-2,\"diversity\":0.8,\"perplexity\":5.5}\n";
        let a = parse_csv(csv_text.as_bytes(), &m(), "t").unwrap();
        let b = parse_jsonl(jsonl.as_bytes(), &m(), "t").unwrap();
        assert_eq!(a[0], b[0]);
        assert_eq!(b[1].method_id, "x|y|z");
        assert_eq!(b[1].instance_id, "1");
        let bad = "{\"instance_id\":\"1\",\"method_id\":\"a\",\"coherence\":-1.5,\"perplexity\":4}\n";
        assert!(matches!(parse_jsonl(bad.as_bytes(), &m(), "t"), Err(InputError::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let text = "instance_id,method_id,coherence,diversity,perplexity\n1,a,-1.2345678901234567,0.9,4\n\"x,y\",b,-2,0.1,1e-3\n";
        let recs = parse_csv(text.as_bytes(), &m(), "t").unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &m(), &mut buf).unwrap();
        assert_eq!(parse_csv(buf.as_slice(), &m(), "t").unwrap(), recs);
    }

    #[test]
    fn generations_become_metrics() {
        let text = "instance_id,method_id,tokens,logprobs\n1,a,\"[\"\"a\"\",\"\"b\"\",\"\"c\"\",\"\"d\"\",\"\"e\"\"]\",\"[-0.5,-1.5]\"\n";
        let recs = parse_generations(text.as_bytes(), "g").unwrap();
        assert_eq!(recs[0].get("diversity"), Some(1.0));
        assert_eq!(recs[0].get("coherence"), Some(-1.0));
        assert_eq!(recs[0].get("perplexity"), Some(1f64.exp()));
        let short = "instance_id,method_id,tokens,logprobs\n1,a,\"[\"\"a\"\"]\",\"[-0.5]\"\n";
        assert!(matches!(parse_generations(short.as_bytes(), "g"), Err(InputError::Metrics { line: 2, .. })));
    }

    #[test]
    fn ratings_table() {
        let r = parse_ratings("key,rating\n1:a,3.5\nb,2\n".as_bytes(), "r").unwrap();
        assert_eq!(r.ratings["1:a"], 3.5);
        assert!(parse_ratings("key,score\n".as_bytes(), "r").is_err());
        assert!(parse_ratings("key,rating\na,1\na,2\n".as_bytes(), "r").is_err());
    }
}
