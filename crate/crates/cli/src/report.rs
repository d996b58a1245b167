use std::fs;
use std::path::Path;

use fockml::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

/// A CSV file produced by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|v| v.to_string()).collect());
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Parse(e.to_string());
        wtr.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            wtr.write_record(row).map_err(err)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Everything a run produced. `metrics.json`, the CSV tables and the extra
/// files are deterministic given the configuration; only `report.json`
/// carries the wall time.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub metrics: Map<String, Value>,
    pub tables: Vec<Table>,
    /// Additional structured files, e.g. trained models.
    pub files: Vec<(String, String)>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct ReportIndex<'a> {
    command: &'a str,
    seeds: &'a [u64],
    wall_time_s: f64,
    tables: Vec<String>,
    files: Vec<&'a str>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self { command: command.into(), config: config.clone(), seeds: Vec::new(), metrics: Map::new(), tables: Vec::new(), files: Vec::new(), wall_time_s: 0.0 }
    }

    pub fn metric<V: Serialize>(&mut self, key: &str, value: V) {
        self.metrics.insert(key.into(), serde_json::to_value(value).expect("metrics are plain data"));
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn metrics_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.metrics).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.toml"), self.config.to_toml_string()?)?;
        fs::write(dir.join("metrics.json"), self.metrics_json()?)?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv_string()?)?;
        }
        for (name, body) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, body)?;
        }
        let index = ReportIndex {
            command: &self.command,
            seeds: &self.seeds,
            wall_time_s: self.wall_time_s,
            tables: self.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
            files: self.files.iter().map(|(n, _)| n.as_str()).collect(),
        };
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&index).map_err(|e| Error::Parse(e.to_string()))?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push([num(0.1), num(-2.0)]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n0.1,-2.0\n");
    }

    #[test]
    fn writes_run_directory() {
        let dir = std::env::temp_dir().join(format!("fockml-report-{}", std::process::id()));
        let mut r = RunReport::new("dof-table", &RunConfig::default());
        r.metric("x", 1.5);
        r.tables.push(Table::new("grid", &["a"]));
        r.files.push(("models/m.json".into(), "{}".into()));
        r.write(&dir).unwrap();
        for f in ["config.toml", "metrics.json", "report.json", "grid.csv", "models/m.json"] {
            assert!(dir.join(f).exists(), "{f}");
        }
        assert_eq!(r.metric_f64("x"), Some(1.5));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
