use std::fmt::Write as _;

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::{CommandKind, OutputFormat, RunConfig, Scheme};

/// A float written to JSON with 17 significant digits in exponent form;
/// non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - expected| <= tolerance`
    Within,
    /// `measured <= tolerance`; `expected` is the ideal value 0.
    AtMost,
    /// `measured > expected`
    Above,
}

#[derive(Serialize, Clone, Debug)]
pub struct Check {
    pub name: String,
    pub measured: Num,
    pub expected: Num,
    pub tolerance: Num,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured - expected).abs() <= tolerance;
        Self::build(name, measured, expected, tolerance, Relation::Within, pass)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        let pass = measured <= tolerance;
        Self::build(name, measured, 0.0, tolerance, Relation::AtMost, pass)
    }

    pub fn above(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        let pass = measured > threshold;
        Self::build(name, measured, threshold, 0.0, Relation::Above, pass)
    }

    fn build(
        name: impl Into<String>,
        measured: f64,
        expected: f64,
        tolerance: f64,
        relation: Relation,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            measured: Num(measured),
            expected: Num(expected),
            tolerance: Num(tolerance),
            relation,
            // NaN comparisons are false, so a NaN measurement never passes.
            pass,
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct ConfigEcho {
    pub d_a: usize,
    pub d_b: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub tol: Num,
    pub output: OutputFormat,
    pub scheme: Scheme,
    pub transcript: Option<String>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        Self {
            d_a: c.d_a,
            d_b: c.d_b,
            samples: c.samples,
            seed: c.seed,
            workers: c.workers,
            tol: Num(c.tol),
            output: c.output,
            scheme: c.scheme,
            transcript: c.transcript.as_ref().map(|p| p.display().to_string()),
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct TableRow {
    pub d_a: u64,
    pub d_b: u64,
    pub p_global: Num,
    pub p_separable: Num,
    pub gap: Num,
}

#[derive(Serialize, Clone, Debug)]
pub struct TableSection {
    pub rows: Vec<TableRow>,
    pub limits: LimitRow,
}

#[derive(Serialize, Clone, Debug)]
pub struct LimitRow {
    pub p_global: Num,
    pub p_separable: Num,
    pub gap: Num,
}

#[derive(Serialize, Clone, Debug)]
pub struct MonteCarloSection {
    pub scheme: Scheme,
    pub target: Num,
    pub z_score: Num,
    pub n_samples: usize,
    pub seed: u64,
    pub mean_success: Num,
    pub stderr_success: Num,
    pub mean_error: Num,
    pub max_error_sample: Num,
    pub mean_inconclusive: Num,
    pub probability_min: Num,
    pub probability_max: Num,
    pub max_total_residual: Num,
}

#[derive(Serialize, Clone, Debug)]
pub struct LabelCounts {
    pub inconclusive: usize,
    pub first: usize,
    pub second: usize,
}

#[derive(Serialize, Clone, Debug)]
pub struct ProtocolSection {
    pub runs: usize,
    pub label_counts: LabelCounts,
    pub label_frequencies: [Num; 3],
    pub successes: usize,
    pub misidentifications: usize,
    pub unreachable_runs: usize,
    pub success_frequency: Num,
    pub element_residuals: [Num; 3],
    pub probability_difference: Num,
    pub transcript: Option<String>,
}

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub command: CommandKind,
    pub config: ConfigEcho,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_seconds: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            command: config.command,
            config: config.into(),
            checks: Vec::new(),
            pass: true,
            wall_seconds: Num(0.0),
            table: None,
            monte_carlo: None,
            protocol: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "pureid {}  d_a={} d_b={}",
            self.command.name(),
            c.d_a,
            c.d_b
        );

        if let Some(table) = &self.table {
            let _ = writeln!(
                out,
                "\n{:>4} {:>4}  {:>20} {:>20} {:>20}",
                "d_a", "d_b", "p_global", "p_separable", "gap"
            );
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "{:>4} {:>4}  {:>20.16} {:>20.16} {:>20.16}",
                    r.d_a, r.d_b, r.p_global.0, r.p_separable.0, r.gap.0
                );
            }
            let l = &table.limits;
            let _ = writeln!(
                out,
                "{:>9}  {:>20.16} {:>20.16} {:>20.16}",
                "limit", l.p_global.0, l.p_separable.0, l.gap.0
            );
        }

        if let Some(mc) = &self.monte_carlo {
            let _ = writeln!(
                out,
                "\nscheme {:?}, {} samples, seed {}",
                mc.scheme, mc.n_samples, mc.seed
            );
            let _ = writeln!(
                out,
                "  mean success      {:.10} +- {:.3e}",
                mc.mean_success.0, mc.stderr_success.0
            );
            let _ = writeln!(out, "  target            {:.10}", mc.target.0);
            let _ = writeln!(out, "  z-score           {:.3}", mc.z_score.0);
            let _ = writeln!(
                out,
                "  mean error        {:.3e} (max {:.3e})",
                mc.mean_error.0, mc.max_error_sample.0
            );
            let _ = writeln!(out, "  mean inconclusive {:.10}", mc.mean_inconclusive.0);
        }

        if let Some(p) = &self.protocol {
            let _ = writeln!(out, "\n{} runs", p.runs);
            let _ = writeln!(
                out,
                "  labels 0/1/2      {} / {} / {}",
                p.label_counts.inconclusive, p.label_counts.first, p.label_counts.second
            );
            let _ = writeln!(out, "  success frequency {:.6}", p.success_frequency.0);
            let _ = writeln!(out, "  misidentified     {}", p.misidentifications);
            if let Some(path) = &p.transcript {
                let _ = writeln!(out, "  transcript        {path}");
            }
        }

        let _ = writeln!(out);
        for check in &self.checks {
            let verdict = if check.pass { "PASS" } else { "FAIL" };
            let rule = match check.relation {
                Relation::Within => format!(
                    "expected {:.6e} +- {:.1e}",
                    check.expected.0, check.tolerance.0
                ),
                Relation::AtMost => format!("<= {:.1e}", check.tolerance.0),
                Relation::Above => format!("> {:.1e}", check.expected.0),
            };
            let _ = writeln!(
                out,
                "[{verdict}] {:<36} {:>24.16e}  {rule}",
                check.name, check.measured.0
            );
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(
            out,
            "\n{} ({passed}/{} checks) in {:.2}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.wall_seconds.0
        );
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => self.to_json(),
        }
    }
}
