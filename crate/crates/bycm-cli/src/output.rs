use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies one run: everything that affects the data, nothing that does not.
pub struct Meta {
    pub command: &'static str,
    pub config: Value,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &'static str, config: Value, seed: u64) -> Self {
        Self { command, config, seed }
    }

    /// SHA-256 of the canonical JSON of command, config and seed.
    pub fn config_hash(&self) -> String {
        let canonical = json!({ "command": self.command, "config": self.config, "seed": self.seed });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn header_lines(&self) -> String {
        format!(
            "# bycm {VERSION} {}\n# config_hash {}\n# seed {}\n",
            self.command,
            self.config_hash(),
            self.seed
        )
    }

    fn json_header(&self) -> Value {
        json!({
            "tool": format!("bycm {VERSION}"),
            "command": self.command,
            "config_hash": self.config_hash(),
            "seed": self.seed,
            "config": self.config,
        })
    }
}

/// A CSV table: header row plus rows of already formatted cells.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, meta: &Meta) -> String {
        let mut s = meta.header_lines();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip representation; `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn emit(prefix: Option<&Path>, ext: &str, text: &str) -> Result<(), CliError> {
    match prefix {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => {
            let mut path = p.as_os_str().to_owned();
            path.push(".");
            path.push(ext);
            std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", Path::new(&path).display())))
        }
    }
}

pub fn write_csv(prefix: Option<&Path>, meta: &Meta, table: &Table) -> Result<(), CliError> {
    emit(prefix, "csv", &table.render(meta))
}

pub fn write_json<T: Serialize>(prefix: Option<&Path>, meta: &Meta, result: &T) -> Result<(), CliError> {
    let doc = json!({ "meta": meta.json_header(), "result": result });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    emit(prefix, "json", &text)
}
