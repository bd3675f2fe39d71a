//! Run configuration, check records and the JSON/CSV report writers.

use std::io;
use std::time::Instant;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::combinatorics::QScalar;
use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub dim: usize,
    pub max_level: usize,
    pub tol: f64,
    pub cut: Option<usize>,
    pub steps: u32,
    pub report_path: Option<String>,
    pub seed: u64,
    pub format: Format,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        QScalar::new(self.q)?;
        if self.dim == 0 || self.dim > 256 {
            return Err(Error::InvalidArgument(format!("dim must lie in 1..=256, got {}", self.dim)));
        }
        if self.max_level == 0 {
            return Err(Error::InvalidArgument("max-level must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.steps > 24 {
            return Err(Error::InvalidArgument(format!("steps must be at most 24, got {}", self.steps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub parameters: Value,
    pub residual: f64,
    pub bound: f64,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, parameters: Value, residual: f64, bound: f64, started: Instant) -> Self {
        CheckResult {
            name: name.into(),
            parameters,
            residual,
            bound,
            // NaN residuals fail
            passed: residual <= bound,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }
}

/// Pretty JSON with every float written in `{:.16e}` form (17 significant
/// digits), so values round-trip exactly.
struct ExactFloats(PrettyFormatter<'static>);

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Top-level report: schema version, command, echoed config, then payload.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub schema: u32,
    pub command: &'static str,
    pub config: RunConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, config: RunConfig, body: T) -> Self {
        Report {
            schema: SCHEMA,
            command,
            config,
            body,
        }
    }
}

pub fn checks_csv(checks: &[CheckResult]) -> String {
    let mut out = String::from("name,residual,bound,passed\n");
    for c in checks {
        out.push_str(&format!("{},{:.16e},{:.16e},{}\n", csv_field(&c.name), c.residual, c.bound, c.passed));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json(&json!({"x": 0.1, "y": [1.0, -2.5e-300], "n": 3, "z": f64::NAN}));
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"z\": null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig {
            q: 0.5,
            dim: 2,
            max_level: 6,
            tol: 1e-10,
            cut: None,
            steps: 6,
            report_path: None,
            seed: 0,
            format: Format::Json,
        };
        assert!(c.validate().is_ok());
        c.q = 1.0;
        assert!(c.validate().is_err());
        c.q = 0.5;
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn check_pass_flag() {
        let t = Instant::now();
        assert!(CheckResult::new("a", Value::Null, 1e-13, 1e-12, t).passed);
        assert!(!CheckResult::new("a", Value::Null, f64::NAN, 1e-12, t).passed);
        assert!(checks_csv(&[CheckResult::new("a,b", Value::Null, 0.0, 1.0, t)]).contains("\"a,b\""));
    }
}
