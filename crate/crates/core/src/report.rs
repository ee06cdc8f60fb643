//! Run reports shared by the command-line front end and the tests.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// What the headline number measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Headline {
    /// Independent vertices per vertex.
    IndependenceRatio,
    /// Good edges per vertex in a cubic graph (1.5 edges per vertex).
    GoodEdgesPerVertex,
}

impl Headline {
    pub fn label(self) -> &'static str {
        match self {
            Headline::IndependenceRatio => "independence ratio",
            Headline::GoodEdgesPerVertex => "good edges per vertex",
        }
    }

    pub fn corollary_label(self) -> &'static str {
        match self {
            Headline::IndependenceRatio => "fractional coloring bound (1/ratio)",
            Headline::GoodEdgesPerVertex => "fractional edge coloring bound (1.5/good)",
        }
    }

    /// `1/x` for independence ratios, `1.5/x` for good edges per vertex.
    pub fn corollary(self, value: f64) -> f64 {
        match self {
            Headline::IndependenceRatio => 1.0 / value,
            Headline::GoodEdgesPerVertex => 1.5 / value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub stddev: f64,
}

impl SeedSummary {
    pub fn new(values: Vec<f64>) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let stddev = if values.len() > 1 {
            (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { values, mean, stddev }
    }
}

/// One command's outcome. Corollaries are derived from `value` on demand
/// and never serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub headline: Headline,
    /// Headline value; the seed mean when `seeds` is present.
    pub value: f64,
    pub seeds: Option<SeedSummary>,
    pub details: BTreeMap<String, Value>,
    pub valid: bool,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn new(command: Vec<String>, headline: Headline, value: f64) -> Self {
        Self {
            command,
            parameters: BTreeMap::new(),
            seed: None,
            headline,
            value,
            seeds: None,
            details: BTreeMap::new(),
            valid: true,
            wall_seconds: 0.0,
        }
    }

    pub fn corollary(&self) -> f64 {
        self.headline.corollary(self.value)
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// JSON with the wall time zeroed, for reproducibility comparisons.
    pub fn to_json_without_time(&self) -> String {
        Self { wall_seconds: 0.0, ..self.clone() }.to_json()
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command.join(" "));
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "  {k} = {v}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "  seed = {seed}");
        }
        let _ = writeln!(out, "{}: {:.6}", self.headline.label(), self.value);
        if let Some(s) = &self.seeds {
            let _ = writeln!(out, "  over {} seeds: mean {:.6}, stddev {:.6}", s.values.len(), s.mean, s.stddev);
        }
        let _ = writeln!(out, "{}: {:.6}", self.headline.corollary_label(), self.corollary());
        for (k, v) in &self.details {
            let _ = writeln!(out, "  {k}: {v}");
        }
        let _ = writeln!(out, "valid: {}", self.valid);
        let _ = writeln!(out, "wall time: {:.3} s", self.wall_seconds);
        out
    }
}
