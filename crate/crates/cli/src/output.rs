use occkit::dist::Pmf;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// One command result. `payload` holds a single keyed section (`pmf`,
/// `moments`, `reports`, ...) appended after the common header fields.
pub struct Record {
    pub command: String,
    pub params: Map<String, Value>,
    pub backend: String,
    pub error_bound: f64,
    pub payload: Vec<(String, Value)>,
    pub csv: Csv,
}

pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Record {
    pub fn new(command: &str, params: Map<String, Value>, backend: &str, error_bound: f64) -> Self {
        Record {
            command: command.to_string(),
            params,
            backend: backend.to_string(),
            error_bound,
            payload: Vec::new(),
            csv: Csv { header: Vec::new(), rows: Vec::new() },
        }
    }

    pub fn section(mut self, key: &str, value: Value) -> Self {
        self.payload.push((key.to_string(), value));
        self
    }

    pub fn csv(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.csv = Csv { header, rows };
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("command".into(), json!(self.command));
        obj.insert("params".into(), Value::Object(self.params.clone()));
        obj.insert("backend".into(), json!(self.backend));
        obj.insert("error_bound".into(), json!(self.error_bound));
        for (k, v) in &self.payload {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("values are finite or null");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.csv.header).expect("in-memory write");
                for row in &self.csv.rows {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
            }
        }
    }
}

/// Shortest decimal that parses back to the same double.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

pub fn pmf_object(pmf: &Pmf) -> Value {
    let mut map = Map::new();
    for (k, p) in pmf.iter() {
        map.insert(k.to_string(), json!(p));
    }
    Value::Object(map)
}

pub fn cdf_object(pmf: &Pmf) -> Value {
    let mut map = Map::new();
    for (k, c) in (pmf.support_min()..).zip(pmf.cumulative()) {
        map.insert(k.to_string(), json!(c));
    }
    Value::Object(map)
}

pub fn pmf_rows(pmf: &Pmf) -> Vec<Vec<String>> {
    pmf.iter().map(|(k, p)| vec![k.to_string(), num(p)]).collect()
}

pub fn cdf_rows(pmf: &Pmf) -> Vec<Vec<String>> {
    (pmf.support_min()..).zip(pmf.cumulative()).map(|(k, c)| vec![k.to_string(), num(c)]).collect()
}

/// Key-value rows for CSV output of a flat JSON object.
pub fn field_rows(obj: &Value) -> Vec<Vec<String>> {
    obj.as_object()
        .map(|m| {
            m.iter()
                .map(|(k, v)| {
                    let cell = match v {
                        Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
                        Value::String(s) => s.clone(),
                        Value::Null => "nan".into(),
                        other => other.to_string(),
                    };
                    vec![k.clone(), cell]
                })
                .collect()
        })
        .unwrap_or_default()
}
