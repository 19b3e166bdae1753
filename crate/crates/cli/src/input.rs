//! Loading JSON inputs with located diagnostics.
//!
//! Documents are first decoded strictly. If that fails, a relaxed form is
//! tried in which JSON numbers stand for their decimal literal and a bare
//! array of pairs stands for an interval union. Errors carry the JSON path
//! and, for documents not using the shorthand, the line and column.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::Value;

/// Where in an input file decoding failed.
#[derive(Debug, Clone)]
pub struct InputError {
    pub file: PathBuf,
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file.display())?;
        if self.line > 0 {
            write!(f, ":{}:{}", self.line, self.column)?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, " at {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for InputError {}

/// Which top-level shape a document has; selects the relaxed rewrites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Set,
    Function,
    Fragmentation,
}

pub fn load<T: DeserializeOwned>(file: &Path, shape: Shape) -> anyhow::Result<T> {
    let text = fs::read_to_string(file)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", file.display()))?;
    parse(&text, shape).map_err(|mut e| {
        e.file = file.to_path_buf();
        e.into()
    })
}

pub fn parse<T: DeserializeOwned>(text: &str, shape: Shape) -> Result<T, InputError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let located = match serde_path_to_error::deserialize::<_, T>(&mut de) {
        Ok(v) => {
            return match de.end() {
                Ok(()) => Ok(v),
                Err(e) => Err(located_error(String::new(), &e)),
            }
        }
        Err(e) => {
            let located = located_error(e.path().to_string(), e.inner());
            if !e.inner().is_data() {
                return Err(located);
            }
            located
        }
    };
    let Ok(value) = serde_json::from_str::<Value>(text) else {
        return Err(located);
    };
    let relaxed = relax(value.clone(), shape);
    if relaxed == value {
        return Err(located);
    }
    // The shorthand was used, so its error is the relevant one; positions
    // refer to the original text and are not available for it.
    serde_path_to_error::deserialize::<_, T>(relaxed).map_err(|e| InputError {
        file: PathBuf::new(),
        path: e.path().to_string(),
        line: 0,
        column: 0,
        message: e.inner().to_string(),
    })
}

fn located_error(path: String, e: &serde_json::Error) -> InputError {
    InputError {
        file: PathBuf::new(),
        path,
        line: e.line(),
        column: e.column(),
        message: strip_location(&e.to_string()),
    }
}

fn strip_location(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn numbers_to_strings(v: Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(items) => Value::Array(items.into_iter().map(numbers_to_strings).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, numbers_to_strings(v)))
                .collect(),
        ),
        other => other,
    }
}

fn wrap_set(v: Value) -> Value {
    match v {
        Value::Array(_) => serde_json::json!({ "parts": v }),
        other => other,
    }
}

fn relax(v: Value, shape: Shape) -> Value {
    let v = numbers_to_strings(v);
    match shape {
        Shape::Function => v,
        Shape::Set => wrap_set(v),
        Shape::Fragmentation => match v {
            Value::Object(mut map) => {
                if let Some(Value::Array(frags)) = map.remove("fragments") {
                    map.insert(
                        "fragments".into(),
                        Value::Array(frags.into_iter().map(wrap_set).collect()),
                    );
                }
                Value::Object(map)
            }
            other => other,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use thicksum::{Fragmentation, IntervalUnion};

    #[test]
    fn canonical_and_relaxed_sets_agree() {
        let a: IntervalUnion = parse(r#"{"parts":[["0","4"],["5","9"]]}"#, Shape::Set).unwrap();
        let b: IntervalUnion = parse("[[0,4],[5,9]]", Shape::Set).unwrap();
        let c: IntervalUnion = parse(r#"[["0", 4], [5, "9"]]"#, Shape::Set).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d: IntervalUnion = parse("[[0.5, 1.25]]", Shape::Set).unwrap();
        assert_eq!(d.to_string(), "[[1/2, 5/4]]");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e =
            parse::<IntervalUnion>("{\"parts\": [[\"0\", \"1\"],\n  ]}", Shape::Set).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.column > 0);
    }

    #[test]
    fn semantic_errors_carry_path() {
        let e = parse::<Fragmentation>(
            r#"{"fragments":[{"parts":[["0","1"]]},{"parts":[["2","x"]]}]}"#,
            Shape::Fragmentation,
        )
        .unwrap_err();
        assert!(e.path.starts_with("fragments[1]"), "{}", e.path);
        assert!(e.message.contains("invalid number"), "{}", e.message);
    }

    #[test]
    fn relaxed_fragmentation() {
        let f: Fragmentation = parse(
            r#"{"fragments":[[[0,1]]],"tail":{"kind":"translate","period":2}}"#,
            Shape::Fragmentation,
        )
        .unwrap();
        assert_eq!(f.period().unwrap().to_string(), "2");
    }
}
