use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::{CheckName, Tolerances};

pub const REPORT_VERSION: u32 = 1;
/// Significant digits kept for every float in the JSON report.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub status: Status,
    /// Residuals and counts; absent for skipped checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl CheckReport {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Self {
            status: Status::Skipped,
            detail: None,
            message: Some(reason.into()),
            wall_time_s: None,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            status: Status::Error,
            detail: None,
            message: Some(message.into()),
            wall_time_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub grid_counts: Vec<usize>,
    pub checks_requested: Vec<CheckName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foliation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_box: Option<Vec<[f64; 2]>>,
    pub sample_points: usize,
    pub orbit_steps: usize,
    pub convexity_pairs: usize,
    pub holonomy_n_max: usize,
    /// Only with `--timing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub skipped: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub report_version: u32,
    pub scenario: String,
    pub provenance: Provenance,
    pub checks: BTreeMap<CheckName, CheckReport>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_body: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morse: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<Value>,
    /// Construction residuals recorded by the scenario builder.
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    pub fn summarize(&mut self) {
        let mut s = Summary::default();
        for c in self.checks.values() {
            match c.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::Error => s.errors += 1,
                Status::Skipped => s.skipped += 1,
            }
        }
        s.all_passed = s.failed == 0 && s.errors == 0;
        self.summary = s;
    }

    /// Process exit status: nonzero iff some requested check failed or errored.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.summary.all_passed)
    }

    pub fn status(&self, check: CheckName) -> Option<Status> {
        self.checks.get(&check).map(|c| c.status)
    }

    /// Canonical JSON: sorted keys, two-space indentation, floats at
    /// [`SIGNIFICANT_DIGITS`] significant digits, non-finite values as `null`.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Pretty printer that rounds floats; everything else is `PrettyFormatter`.
struct Canonical<'a>(PrettyFormatter<'a>);

impl Formatter for Canonical<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // `{:?}` is the shortest round-trip form and switches to exponents for tiny or huge values.
        write!(writer, "{:?}", round_significant(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes through [`Value`], whose maps are ordered by key, then prints canonically.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("report values serialize");
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, Canonical(PrettyFormatter::new()));
    tree.serialize(&mut ser)
        .expect("writing to a Vec cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
