//! Run configuration and its text format.
//!
//! The format is line based:
//!
//! ```text
//! # comment
//! scenario = cn(3,1)
//! checks = [body, morse]
//! seed = 7
//! clip_box = [[-1.5, 3.5], [-1.5, 3.5]]
//! grid_override = [4, 9, 9, 9, 9, 4]
//!
//! [tolerances]
//! tol_rank = 1e-9
//! ```
//!
//! Keys before any section header are run settings; keys under
//! `[tolerances]` are tolerances. Tolerance keys are also accepted at the top
//! level. Values are bare words, numbers, booleans, or bracketed lists of
//! numbers, words or lists. Absent keys take the defaults of [`RunConfig`].

use std::fmt;
use std::str::FromStr;

use cosym_core::constructions::build_scenario;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("line {line}: unknown check {name:?}")]
    UnknownCheck { line: usize, name: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

/// Checks in dependency order: classification comes before the checks that
/// read it, `quasi_iso` before `orbit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Classify,
    Closed,
    Action,
    Moment,
    Clean,
    Body,
    Morse,
    QuasiIso,
    Basic,
    Orbit,
    Arrow,
    Holonomy,
    Reduce,
}

impl CheckName {
    pub const ALL: [CheckName; 13] = [
        CheckName::Classify,
        CheckName::Closed,
        CheckName::Action,
        CheckName::Moment,
        CheckName::Clean,
        CheckName::Body,
        CheckName::Morse,
        CheckName::QuasiIso,
        CheckName::Basic,
        CheckName::Orbit,
        CheckName::Arrow,
        CheckName::Holonomy,
        CheckName::Reduce,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Classify => "classify",
            CheckName::Closed => "closed",
            CheckName::Action => "action",
            CheckName::Moment => "moment",
            CheckName::Clean => "clean",
            CheckName::Body => "body",
            CheckName::Morse => "morse",
            CheckName::QuasiIso => "quasi_iso",
            CheckName::Basic => "basic",
            CheckName::Orbit => "orbit",
            CheckName::Arrow => "arrow",
            CheckName::Holonomy => "holonomy",
            CheckName::Reduce => "reduce",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for kernels and ranks.
    pub tol_rank: f64,
    /// Closedness residual bound for `dω` and `dη`.
    pub tol_closed: f64,
    /// Action, moment-map and basic-form residual bound.
    pub tol_action: f64,
    /// Critical points: `‖dμ^ξ‖ ≤ tol_crit · max ‖dμ^ξ‖`.
    pub tol_crit: f64,
    /// Zero eigenvalues relative to the largest Hessian eigenvalue.
    pub tol_eig: f64,
    pub holonomy_tol: f64,
    /// Projection residual for subspace comparisons.
    pub tol_subspace: f64,
    /// `s*ω = t*ω` bound on arrow charts.
    pub tol_arrow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: 1e-9,
            tol_closed: 1e-4,
            tol_action: 1e-6,
            tol_crit: 1e-4,
            tol_eig: 1e-6,
            holonomy_tol: 1e-8,
            tol_subspace: 1e-8,
            tol_arrow: 1e-9,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 8] = [
        "tol_rank",
        "tol_closed",
        "tol_action",
        "tol_crit",
        "tol_eig",
        "holonomy_tol",
        "tol_subspace",
        "tol_arrow",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "tol_rank" => &mut self.tol_rank,
            "tol_closed" => &mut self.tol_closed,
            "tol_action" => &mut self.tol_action,
            "tol_crit" => &mut self.tol_crit,
            "tol_eig" => &mut self.tol_eig,
            "holonomy_tol" => &mut self.holonomy_tol,
            "tol_subspace" => &mut self.tol_subspace,
            "tol_arrow" => &mut self.tol_arrow,
            _ => return None,
        })
    }

    pub fn is_tolerance(name: &str) -> bool {
        Self::NAMES.contains(&name)
    }

    /// Sets one tolerance; values must be finite and positive.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("{name} must be a positive number, got {value}"));
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| format!("unknown tolerance {name:?}"))?;
        if name == "tol_rank" && value >= 1.0 {
            return Err(format!("tol_rank must lie in (0, 1), got {value}"));
        }
        *slot = value;
        Ok(())
    }
}

/// Which foliation the groupoid checks use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FoliationChoice {
    Default,
    Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub tolerances: Tolerances,
    pub grid_override: Option<Vec<usize>>,
    pub clip_box: Option<Vec<[f64; 2]>>,
    /// Requested checks in dependency order.
    pub checks: Vec<CheckName>,
    /// `false` when the check list was left at its default (every check).
    pub checks_explicit: bool,
    pub seed: u64,
    pub foliation: FoliationChoice,
    /// Base point for the pointwise checks; random grid points when absent.
    pub point: Option<Vec<f64>>,
    /// Moment-map generators for the Morse–Bott check; the moment basis when absent.
    pub generators: Option<Vec<Vec<f64>>>,
    pub sample_points: usize,
    pub orbit_steps: usize,
    pub convexity_pairs: usize,
    pub holonomy_n_max: usize,
    /// Record wall time in the report; breaks byte-identical output.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.trim().to_string(),
            tolerances: Tolerances::default(),
            grid_override: None,
            clip_box: None,
            checks: CheckName::ALL.to_vec(),
            checks_explicit: false,
            seed: 0,
            foliation: FoliationChoice::Default,
            point: None,
            generators: None,
            sample_points: 50,
            orbit_steps: 10,
            convexity_pairs: 1000,
            holonomy_n_max: 10_000,
            timing: false,
        }
    }

    pub fn with_checks(mut self, checks: &[CheckName]) -> Self {
        let mut c = checks.to_vec();
        c.sort();
        c.dedup();
        self.checks = c;
        self.checks_explicit = true;
        self
    }

    pub fn requested(&self, check: CheckName) -> bool {
        self.checks.contains(&check)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Word(String),
    Number(f64),
    List(Vec<Value>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Word(_) => "a word",
            Value::Number(_) => "a number",
            Value::List(_) => "a list",
        }
    }
}

struct ValueParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl<'a> ValueParser<'a> {
    fn parse(text: &'a str) -> Result<Value, String> {
        let mut p = ValueParser {
            chars: text.char_indices().peekable(),
            text,
        };
        let v = p.value()?;
        p.skip_ws();
        if let Some((i, _)) = p.chars.peek() {
            return Err(format!("unexpected trailing text {:?}", &text[*i..]));
        }
        Ok(v)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.chars.peek() {
            None => Err("missing value".into()),
            Some((_, '[')) => {
                self.chars.next();
                let mut items = Vec::new();
                self.skip_ws();
                if let Some((_, ']')) = self.chars.peek() {
                    self.chars.next();
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.next() {
                        Some((_, ',')) => continue,
                        Some((_, ']')) => return Ok(Value::List(items)),
                        Some((_, c)) => return Err(format!("expected ',' or ']', found {c:?}")),
                        None => return Err("unterminated list".into()),
                    }
                }
            }
            Some((_, '"')) => {
                self.chars.next();
                let mut s = String::new();
                for (_, c) in self.chars.by_ref() {
                    if c == '"' {
                        return Ok(Value::Word(s));
                    }
                    s.push(c);
                }
                Err("unterminated string".into())
            }
            Some(&(start, _)) => {
                // A bare atom runs to the next top-level ',' or ']'; parentheses nest
                // so that `cn(3, 1)` stays one word.
                let mut depth = 0usize;
                let mut end = self.text.len();
                while let Some(&(i, c)) = self.chars.peek() {
                    match c {
                        '(' => depth += 1,
                        ')' => depth = depth.saturating_sub(1),
                        ',' | ']' if depth == 0 => {
                            end = i;
                            break;
                        }
                        _ => {}
                    }
                    self.chars.next();
                }
                let atom = self.text[start..end].trim();
                if atom.is_empty() {
                    return Err("empty value".into());
                }
                Ok(match atom.parse::<f64>() {
                    Ok(x) => Value::Number(x),
                    Err(_) => Value::Word(atom.to_string()),
                })
            }
        }
    }
}

fn number(v: &Value, line: usize, key: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Number(x) => Ok(*x),
        other => Err(parse_err(
            line,
            format!("{key} expects a number, got {}", other.describe()),
        )),
    }
}

fn count(v: &Value, line: usize, key: &str) -> Result<usize, ConfigError> {
    let x = number(v, line, key)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(parse_err(
            line,
            format!("{key} expects a non-negative integer, got {x}"),
        ));
    }
    Ok(x as usize)
}

fn list<'v>(v: &'v Value, line: usize, key: &str) -> Result<&'v [Value], ConfigError> {
    match v {
        Value::List(items) => Ok(items),
        other => Err(parse_err(
            line,
            format!("{key} expects a list, got {}", other.describe()),
        )),
    }
}

fn numbers(v: &Value, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    list(v, line, key)?
        .iter()
        .map(|x| number(x, line, key))
        .collect()
}

fn word(v: &Value, line: usize, key: &str) -> Result<String, ConfigError> {
    match v {
        Value::Word(w) => Ok(w.clone()),
        other => Err(parse_err(
            line,
            format!("{key} expects a word, got {}", other.describe()),
        )),
    }
}

fn boolean(v: &Value, line: usize, key: &str) -> Result<bool, ConfigError> {
    match word(v, line, key)?.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(parse_err(
            line,
            format!("{key} expects true or false, got {other:?}"),
        )),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Tolerances,
}

/// Parses the text format documented at the top of this module.
///
/// The scenario name is checked against the registry by building it.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new("");
    let mut scenario: Option<(String, usize)> = None;
    let mut section = Section::Top;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            if !header.contains('[') && !header.contains(',') {
                section = match header.trim() {
                    "tolerances" => Section::Tolerances,
                    other => return Err(parse_err(line, format!("unknown section [{other}]"))),
                };
                continue;
            }
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let key = key.trim();
        let value = ValueParser::parse(value.trim()).map_err(|m| parse_err(line, m))?;

        if section == Section::Tolerances || Tolerances::is_tolerance(key) {
            let x = number(&value, line, key)?;
            cfg.tolerances.set(key, x).map_err(|m| parse_err(line, m))?;
            continue;
        }
        match key {
            "scenario" => {
                let name = match &value {
                    Value::Word(w) => w.clone(),
                    other => {
                        return Err(parse_err(
                            line,
                            format!("scenario expects a name, got {}", other.describe()),
                        ))
                    }
                };
                scenario = Some((name, line));
            }
            "checks" => {
                let mut checks = Vec::new();
                for item in list(&value, line, key)? {
                    let name = word(item, line, key)?;
                    let check = name
                        .parse::<CheckName>()
                        .map_err(|name| ConfigError::UnknownCheck { line, name })?;
                    checks.push(check);
                }
                cfg = cfg.with_checks(&checks);
            }
            "seed" => cfg.seed = count(&value, line, key)? as u64,
            "grid_override" => {
                let counts = list(&value, line, key)?
                    .iter()
                    .map(|v| count(v, line, key))
                    .collect::<Result<Vec<_>, _>>()?;
                cfg.grid_override = Some(counts);
            }
            "clip_box" => {
                let mut boxes = Vec::new();
                for item in list(&value, line, key)? {
                    let pair = numbers(item, line, key)?;
                    match pair[..] {
                        [lo, hi] if lo < hi => boxes.push([lo, hi]),
                        _ => {
                            return Err(parse_err(
                                line,
                                "clip_box entries must be [lo, hi] with lo < hi",
                            ))
                        }
                    }
                }
                cfg.clip_box = Some(boxes);
            }
            "foliation" => {
                cfg.foliation = match word(&value, line, key)?.as_str() {
                    "default" => FoliationChoice::Default,
                    "variant" => FoliationChoice::Variant,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("foliation must be default or variant, got {other:?}"),
                        ))
                    }
                }
            }
            "point" => cfg.point = Some(numbers(&value, line, key)?),
            "generators" => {
                let gens = list(&value, line, key)?
                    .iter()
                    .map(|g| numbers(g, line, key))
                    .collect::<Result<Vec<_>, _>>()?;
                cfg.generators = Some(gens);
            }
            "sample_points" => cfg.sample_points = count(&value, line, key)?,
            "orbit_steps" => cfg.orbit_steps = count(&value, line, key)?,
            "convexity_pairs" => cfg.convexity_pairs = count(&value, line, key)?,
            "holonomy_n_max" => cfg.holonomy_n_max = count(&value, line, key)?.max(1),
            "timing" => cfg.timing = boolean(&value, line, key)?,
            other => return Err(parse_err(line, format!("unknown key {other:?}"))),
        }
    }

    let (name, line) = scenario.ok_or_else(|| parse_err(0, "missing `scenario`"))?;
    match build_scenario(&name) {
        Ok(_) => {}
        Err(cosym_core::Error::UnknownScenario(n)) => return Err(ConfigError::UnknownScenario(n)),
        Err(e) => return Err(parse_err(line, e.to_string())),
    }
    cfg.scenario = name.chars().filter(|c| !c.is_whitespace()).collect();
    Ok(cfg)
}
