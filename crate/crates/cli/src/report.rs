//! Report emission: CSV series, JSON summary and a plain-text table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dirac1d::fit::DecaySeries;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    Csv,
    Json,
}

/// `t,norm` with 17 significant digits, one row per sample; an empty series is the header alone.
pub fn series_csv(series: &DecaySeries) -> String {
    let mut s = String::from("t,norm\n");
    for (t, n) in series.times.iter().zip(&series.norms) {
        let _ = writeln!(s, "{t:.16e},{n:.16e}");
    }
    s
}

pub fn parse_series_csv(text: &str) -> Result<DecaySeries> {
    let mut lines = text.lines();
    if lines.next() != Some("t,norm") {
        bail!("missing `t,norm` header");
    }
    let (mut times, mut norms) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let (t, n) = line.split_once(',').with_context(|| format!("row {} has no comma", i + 1))?;
        times.push(t.parse::<f64>().with_context(|| format!("row {}: bad time", i + 1))?);
        norms.push(n.parse::<f64>().with_context(|| format!("row {}: bad norm", i + 1))?);
    }
    DecaySeries::new(times, norms).map_err(Into::into)
}

pub fn emit_series(series: &DecaySeries, path: &Path, format: SeriesFormat) -> Result<()> {
    let body = match format {
        SeriesFormat::Csv => series_csv(series),
        SeriesFormat::Json => serde_json::to_string_pretty(series)? + "\n",
    };
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// One pass/fail verdict with the measured value and the bound it was held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `in [-1.7, -1.3]` or `< 1e-2`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, max: f64) -> Self {
        Check { name: name.into(), value, bound: format!("< {max:e}"), pass: value < max }
    }

    pub fn at_most(name: &str, value: f64, max: f64) -> Self {
        Check { name: name.into(), value, bound: format!("<= {max}"), pass: value <= max }
    }

    pub fn above(name: &str, value: f64, min: f64) -> Self {
        Check { name: name.into(), value, bound: format!("> {min}"), pass: value > min }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: value >= lo && value <= hi }
    }

    pub fn flag(name: &str, ok: bool, what: &str) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: what.into(), pass: ok }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub config_hash: String,
    pub config: Value,
    pub seed: Option<u64>,
    /// Fixed choices that are not configuration keys (initial data, sample times, quadrature).
    pub setup: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip)]
    pub series: Vec<(String, DecaySeries)>,
    /// Fitted exponents and other measured scalars, keyed by name.
    pub results: Value,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn finish(&mut self) {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind: {}", self.kind);
        let _ = writeln!(s, "config: {}", self.config_hash);
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(s, "{:<w$}  {:>14}  {:<22}  result", "check", "value", "bound");
        for c in &self.checks {
            let _ = writeln!(s, "{:<w$}  {:>14.6e}  {:<22}  {}", c.name, c.value, c.bound, if c.pass { "PASS" } else { "FAIL" });
        }
        for d in &self.diagnostics {
            let _ = writeln!(s, "note: {d}");
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }

    /// Writes `<kind>.json`, `summary.txt` and one `<name>.csv` per series into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        let mut json = serde_json::to_value(self)?;
        let series: serde_json::Map<String, Value> =
            self.series.iter().map(|(n, s)| (n.clone(), serde_json::to_value(s).expect("series serializes"))).collect();
        json["series"] = Value::Object(series);
        let p = dir.join(format!("{}.json", self.kind));
        fs::write(&p, serde_json::to_string_pretty(&json)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        let p = dir.join("summary.txt");
        fs::write(&p, self.summary_table()).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        for (name, s) in &self.series {
            let p = dir.join(format!("{name}.csv"));
            emit_series(s, &p, SeriesFormat::Csv)?;
            written.push(p);
        }
        Ok(written)
    }
}
