//! Run record: a plain-text summary written next to the tables, even when the
//! run fails.
//!
//! ```text
//! # qedlab run record v1
//! kind = <run kind>
//! config-hash = <sha256>
//! status = pass | fail | error
//! exit-code = <n>
//! started-unix = <seconds>
//! wall-time-s = <seconds>
//! qedlab-version = <version>
//! operator-format = # qedlab sparse-operator v1
//! vector-format = # qedlab vector v1
//! table-format = # qedlab table v1
//!
//! [artifacts]
//! <file name per line>
//!
//! [cache]
//! <stage> = hit | miss | rebuilt (<reason>) | disabled
//!
//! [assertions]
//! <name> = pass | fail: <detail>
//!
//! [error]
//! message = <text>
//! ```

use std::fmt::Write as _;

use qedlab_core::io::{OPERATOR_MAGIC, VECTOR_MAGIC};

use crate::table::TABLE_MAGIC;

pub const RECORD_MAGIC: &str = "# qedlab run record v1";
pub const RECORD_FILE: &str = "run-record.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub kind: String,
    pub config_hash: String,
    pub exit_code: i32,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
    pub cache: Vec<(String, String)>,
    pub assertions: Vec<Assertion>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn status(&self) -> &'static str {
        match self.exit_code {
            0 => "pass",
            1 => "fail",
            _ => "error",
        }
    }

    pub fn cache_hits(&self) -> usize {
        self.cache.iter().filter(|(_, v)| v == "hit").count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{RECORD_MAGIC}");
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "config-hash = {}", self.config_hash);
        let _ = writeln!(s, "status = {}", self.status());
        let _ = writeln!(s, "exit-code = {}", self.exit_code);
        let _ = writeln!(s, "started-unix = {}", self.started_unix);
        let _ = writeln!(s, "wall-time-s = {:.6}", self.wall_time_s);
        let _ = writeln!(s, "qedlab-version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "operator-format = {OPERATOR_MAGIC}");
        let _ = writeln!(s, "vector-format = {VECTOR_MAGIC}");
        let _ = writeln!(s, "table-format = {TABLE_MAGIC}");
        let _ = writeln!(s, "\n[artifacts]");
        for a in &self.artifacts {
            let _ = writeln!(s, "{a}");
        }
        let _ = writeln!(s, "\n[cache]");
        for (k, v) in &self.cache {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[assertions]");
        for a in &self.assertions {
            if a.passed {
                let _ = writeln!(s, "{} = pass ({})", a.name, a.detail);
            } else {
                let _ = writeln!(s, "{} = fail: {}", a.name, a.detail);
            }
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "\n[error]\nmessage = {}", e.replace('\n', " "));
        }
        s
    }
}
