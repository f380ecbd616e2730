//! Report sink: human-readable text or line-delimited JSON records.
//!
//! Identical invocations produce byte-identical output: record order is the
//! call order, there are no timestamps, and every numeric value is an exact
//! `p/q` string (decimal approximations are clearly labeled and truncated to
//! 12 digits).

use buckdens::arith::{rational_to_decimal_string, rational_to_fraction_string, Rational};
use buckdens::periodic::EventuallyPeriodicSet;
use serde_json::json;

pub const SCHEMA_NAME: &str = "buckdens.report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum Format {
    /// Human-readable lines.
    Text,
    /// Line-delimited JSON records with an in-band schema header.
    Records,
}

pub struct Report {
    format: Format,
    checks: u32,
    failures: u32,
}

impl Report {
    pub fn new(format: Format, command: &str) -> Self {
        if format == Format::Records {
            println!(
                "{}",
                json!({
                    "record": "schema",
                    "name": SCHEMA_NAME,
                    "version": SCHEMA_VERSION,
                    "command": command,
                })
            );
        }
        Report {
            format,
            checks: 0,
            failures: 0,
        }
    }

    /// Free-form heading, text mode only (records carry the command in the
    /// schema header).
    pub fn heading(&mut self, text: &str) {
        if self.format == Format::Text {
            println!("{text}");
        }
    }

    /// An exact rational value with its labeled 12-digit approximation.
    pub fn value(&mut self, key: &str, value: &Rational) {
        match self.format {
            Format::Text => println!(
                "{key} = {} (approx {})",
                rational_to_fraction_string(value),
                rational_to_decimal_string(value, 12)
            ),
            Format::Records => println!(
                "{}",
                json!({
                    "record": "value",
                    "key": key,
                    "exact": rational_to_fraction_string(value),
                    "approx": rational_to_decimal_string(value, 12),
                })
            ),
        }
    }

    /// An exact rational interval.
    pub fn interval(&mut self, key: &str, lo: &Rational, hi: &Rational) {
        match self.format {
            Format::Text => println!(
                "{key} = [{}, {}] (approx [{}, {}])",
                rational_to_fraction_string(lo),
                rational_to_fraction_string(hi),
                rational_to_decimal_string(lo, 12),
                rational_to_decimal_string(hi, 12)
            ),
            Format::Records => println!(
                "{}",
                json!({
                    "record": "interval",
                    "key": key,
                    "exact_lo": rational_to_fraction_string(lo),
                    "exact_hi": rational_to_fraction_string(hi),
                    "approx_lo": rational_to_decimal_string(lo, 12),
                    "approx_hi": rational_to_decimal_string(hi, 12),
                })
            ),
        }
    }

    /// A set in the canonical grammar. Text mode abbreviates very large
    /// renderings; records always carry the exact text.
    pub fn set(&mut self, role: &str, set: &EventuallyPeriodicSet) {
        match self.format {
            Format::Text => {
                let text = set.render();
                if text.len() <= 400 {
                    println!("{role} = {text}");
                } else {
                    println!(
                        "{role} = <mod {} with {} residues, threshold {}, {} exceptions; \
                         use --format records for the exact set>",
                        set.modulus(),
                        set.residues().len(),
                        set.threshold(),
                        set.exceptions().len(),
                    );
                }
            }
            Format::Records => println!(
                "{}",
                json!({
                    "record": "set",
                    "role": role,
                    "text": set.render(),
                })
            ),
        }
    }

    /// An arbitrary table row (records mode carries the fields verbatim).
    pub fn row(&mut self, kind: &str, fields: Vec<(&str, String)>) {
        match self.format {
            Format::Text => {
                let rendered: Vec<String> =
                    fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{kind}: {}", rendered.join(" "));
            }
            Format::Records => {
                let mut obj = serde_json::Map::new();
                obj.insert("record".into(), json!("row"));
                obj.insert("kind".into(), json!(kind));
                for (k, v) in fields {
                    obj.insert(k.to_string(), json!(v));
                }
                println!("{}", serde_json::Value::Object(obj));
            }
        }
    }

    /// A named check; failures flip the final exit code to 1.
    pub fn check(&mut self, name: &str, pass: bool, detail: &str) {
        self.checks += 1;
        if !pass {
            self.failures += 1;
        }
        match self.format {
            Format::Text => {
                let status = if pass { "pass" } else { "FAIL" };
                println!("[{status}] {name}: {detail}");
            }
            Format::Records => println!(
                "{}",
                json!({
                    "record": "check",
                    "name": name,
                    "pass": pass,
                    "detail": detail,
                })
            ),
        }
    }

    /// Prints the summary record and returns the process exit code.
    pub fn finish(self) -> std::process::ExitCode {
        match self.format {
            Format::Text => {
                if self.checks > 0 {
                    println!(
                        "summary: {}/{} checks passed",
                        self.checks - self.failures,
                        self.checks
                    );
                }
            }
            Format::Records => println!(
                "{}",
                json!({
                    "record": "summary",
                    "checks": self.checks,
                    "failures": self.failures,
                    "pass": self.failures == 0,
                })
            ),
        }
        if self.failures == 0 {
            std::process::ExitCode::SUCCESS
        } else {
            std::process::ExitCode::from(1)
        }
    }
}
