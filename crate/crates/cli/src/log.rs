use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

/// Structured logger: one JSON object per line, to stderr and `log.jsonl`.
pub struct Logger {
    start: Instant,
    file: Option<File>,
    quiet: bool,
}

impl Logger {
    pub fn new(quiet: bool) -> Self {
        Self { start: Instant::now(), file: None, quiet }
    }

    /// Also append to `dir/log.jsonl`. Failure to open the file is not fatal.
    pub fn attach(&mut self, dir: &Path) {
        if std::fs::create_dir_all(dir).is_ok() {
            self.file = OpenOptions::new().create(true).append(true).open(dir.join("log.jsonl")).ok();
        }
    }

    pub fn event(&mut self, stage: &str, fields: Value) {
        let mut obj = Map::new();
        obj.insert("elapsed_s".into(), json!((self.start.elapsed().as_secs_f64() * 1e3).round() / 1e3));
        obj.insert("stage".into(), json!(stage));
        if let Value::Object(extra) = fields {
            obj.extend(extra);
        }
        let line = Value::Object(obj).to_string();
        if !self.quiet {
            eprintln!("{line}");
        }
        if let Some(f) = &mut self.file {
            let _ = writeln!(f, "{line}");
        }
    }
}
