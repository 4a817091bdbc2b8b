//! TOML-formatted run report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub struct Report {
    body: String,
    files: Vec<String>,
}

pub fn toml_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

impl Report {
    pub fn new(scenario: &str, seed: u64) -> Self {
        let mut r = Self { body: String::new(), files: Vec::new() };
        r.text("scenario", scenario);
        r.int("seed", seed as i128);
        r
    }

    pub fn float(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.body, "{key} = {}", toml_float(v));
    }

    pub fn int(&mut self, key: &str, v: i128) {
        let _ = writeln!(self.body, "{key} = {v}");
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        let _ = writeln!(self.body, "{key} = {v}");
    }

    pub fn text(&mut self, key: &str, v: &str) {
        let _ = writeln!(self.body, "{key} = {}", quote(v));
    }

    /// Appends `key = value` lines with every key prefixed.
    pub fn prefixed(&mut self, prefix: &str, lines: &str) {
        for line in lines.lines().filter(|l| !l.trim().is_empty()) {
            let _ = writeln!(self.body, "{prefix}{line}");
        }
    }

    pub fn file(&mut self, name: &str) {
        self.files.push(name.to_owned());
    }

    pub fn render(&self) -> String {
        let list: Vec<String> = self.files.iter().chain([&"report.toml".to_string()]).map(|f| quote(f)).collect();
        format!("{}files = [{}]\n", self.body, list.join(", "))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<String> {
        let text = self.render();
        fs::write(dir.join("report.toml"), &text)?;
        Ok(text)
    }
}
