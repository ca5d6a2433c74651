use nalgebra::DMatrix;
use qmetro::numat::CMatrix;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`]; non-finite values become strings since
/// JSON has no representation for them.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        });
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    json!(rounded)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn real_matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

/// Row-major `[[ [re, im], ... ], ...]`.
pub fn complex_matrix(m: &CMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|z| Value::Array(vec![num(z.re), num(z.im)]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything a command echoes back about how it was invoked.
#[derive(Default)]
pub struct Inputs {
    fields: Map<String, Value>,
    files: Map<String, Value>,
}

impl Inputs {
    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.to_string(), value);
    }

    pub fn file(&mut self, key: &str, path: &std::path::Path, contents: &str) {
        self.fields
            .insert(key.to_string(), Value::String(path.display().to_string()));
        self.files
            .insert(key.to_string(), Value::String(sha256_hex(contents.as_bytes())));
    }

    fn into_value(self) -> Value {
        let mut fields = self.fields;
        fields.insert("file_sha256".into(), Value::Object(self.files));
        Value::Object(fields)
    }
}

pub struct Report {
    pub command: &'static str,
    pub inputs: Inputs,
    pub results: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Inputs::default(),
            results: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn into_json(self) -> Value {
        let inputs = self.inputs.into_value();
        let digest = sha256_hex(inputs.to_string().as_bytes());
        json!({
            "command": self.command,
            "inputs": inputs,
            "inputs_sha256": digest,
            "results": Value::Object(self.results),
            "warnings": self.warnings,
            "version": concat!("qmetro ", env!("CARGO_PKG_VERSION")),
        })
    }
}
