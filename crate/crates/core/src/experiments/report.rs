use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Comparison used by a verdict: `value <relation> threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = ">=")]
    GreaterEq,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Less => value < threshold,
            Relation::LessEq => value <= threshold,
            Relation::Greater => value > threshold,
            Relation::GreaterEq => value >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::LessEq => "<=",
            Relation::Greater => ">",
            Relation::GreaterEq => ">=",
        }
    }
}

/// Outcome of one named rule.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub rule: String,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.rule,
            self.value,
            self.relation.symbol(),
            self.threshold
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// A numeric table written as CSV.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Structured result of an experiment. Runtimes and auxiliary files are
/// kept out of the serialized report so that it is reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub inputs: BTreeMap<String, Value>,
    pub quantities: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub oracles: BTreeMap<String, Value>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
    /// Extra files for `--mesh-out`: name and contents.
    #[serde(skip)]
    pub attachments: Vec<(String, Vec<u8>)>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_owned(),
            inputs: BTreeMap::new(),
            quantities: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            oracles: BTreeMap::new(),
            tables: Vec::new(),
            timings: BTreeMap::new(),
            attachments: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(key.to_owned(), to_value(value));
    }

    pub fn quantity(&mut self, key: &str, value: impl Serialize) {
        self.quantities.insert(key.to_owned(), to_value(value));
    }

    pub fn oracle(&mut self, key: &str, value: impl Serialize) {
        self.oracles.insert(key.to_owned(), to_value(value));
    }

    pub fn check(
        &mut self,
        rule: &str,
        value: f64,
        relation: Relation,
        threshold: f64,
        detail: impl Into<String>,
    ) -> bool {
        let passed = relation.holds(value, threshold);
        self.verdicts.push(Verdict {
            rule: rule.to_owned(),
            passed,
            value,
            relation,
            threshold,
            detail: detail.into(),
        });
        passed
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn time(&mut self, label: &str, start: Instant) {
        *self.timings.entry(label.to_owned()).or_insert(0.0) += start.elapsed().as_secs_f64();
    }

    pub fn verdict(&self, rule: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.rule == rule)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn quantity_f64(&self, key: &str) -> Option<f64> {
        self.quantities.get(key).and_then(Value::as_f64)
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// The report as pretty JSON with a leading timestamp.
    pub fn to_json(&self, timestamp: &str) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut v {
            map.insert("timestamp".into(), Value::String(timestamp.to_owned()));
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `report.json`, `timings.json`, one CSV per table, `oracle.json`
    /// when oracle values were recorded, and the attachments if requested.
    pub fn write(&self, dir: &Path, timestamp: &str, attachments: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json(timestamp)? + "\n")?;
        fs::write(
            dir.join("timings.json"),
            serde_json::to_string_pretty(&self.timings)? + "\n",
        )?;
        if !self.oracles.is_empty() {
            fs::write(
                dir.join("oracle.json"),
                serde_json::to_string_pretty(&self.oracles)? + "\n",
            )?;
        }
        for t in &self.tables {
            t.write_csv(fs::File::create(dir.join(format!("{}.csv", t.name)))?)?;
        }
        if attachments {
            for (name, bytes) in &self.attachments {
                fs::write(dir.join(name), bytes)?;
            }
        }
        Ok(())
    }
}

fn to_value(value: impl Serialize) -> Value {
    // Non-finite floats serialize as null.
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// SHA-256 of the JSON serialization, as hex.
pub fn digest(value: &impl Serialize) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_relations() {
        let mut r = ExperimentReport::new("x");
        assert!(r.check("a", 1.0, Relation::Less, 2.0, ""));
        assert!(!r.check("b", 2.0, Relation::Less, 2.0, ""));
        assert!(r.check("c", 2.0, Relation::LessEq, 2.0, ""));
        assert!(!r.passed());
        assert_eq!(r.verdict("b").map(|v| v.passed), Some(false));
    }

    #[test]
    fn json_is_deterministic_apart_from_timestamp() {
        let mut r = ExperimentReport::new("x");
        r.quantity("lambda", 9.87);
        r.time("solve", Instant::now());
        let a = r.to_json("t0").unwrap();
        let b = r.to_json("t0").unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("solve"));
    }

    #[test]
    fn digest_is_stable() {
        let d = digest(&vec![1.0, 2.0]).unwrap();
        assert_eq!(d.len(), 64);
        assert_eq!(d, digest(&vec![1.0, 2.0]).unwrap());
    }
}
