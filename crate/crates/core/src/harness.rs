//! Experiment configs, end-to-end verification runs, and report output.
//!
//! Config files are flat `key = value` text. `[name]` starts a new
//! experiment; keys before the first header belong to one unnamed
//! experiment. `#` starts a comment.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `symbol` | composition chain, e.g. `auto(0.5)*dil(0.5)` | required |
//! | `weights` | comma list of weight specs | `hardy` |
//! | `N` | truncation order | 128 |
//! | `refine` | double `N` until the tail bound certifies | `false` |
//! | `cap_method` | comma list of `closed_form`, `equilibrium`, `grid` | `closed_form` |
//! | `M` | boundary panels | 512 |
//! | `h` | grid spacing, decimal or `1/n` | `1/256` |
//! | `tol` | relative tolerance for every pairing | 1% vs closed form, 2% otherwise |
//! | `univalent` | assert the symbol is univalent | `false` |

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{
    cap_dirichlet_grid, closed_form, discretize, solve_equilibrium, CapacityEstimate,
    CapacityMethod, CompactSetSpec,
};
use crate::operator::{beta_for_symbol, DEFAULT_ORDER, MAX_ORDER};
use crate::symbols::{sup_norm, Symbol};
use crate::weights::WeightSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_PANELS: usize = 512;
pub const DEFAULT_GRID_H: f64 = 1.0 / 256.0;
pub const CLOSED_FORM_TOL: f64 = 0.01;
pub const NUMERIC_TOL: f64 = 0.02;
pub const SUMMARY_HEADER: &str = "name,symbol,weight,beta,cap_method,cap,m_value,discrepancy,pass";
pub const REPORT_HEADER: &str = "symbol,weight,beta,cap_method,cap,m_value,discrepancy,pass";

const KEYS: [&str; 9] = [
    "symbol",
    "weights",
    "N",
    "refine",
    "cap_method",
    "M",
    "h",
    "tol",
    "univalent",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("experiment `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("unknown format `{0}` (json, csv, text)")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One experiment: a symbol, its weights, and the capacity routes to compare.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub symbol: Symbol,
    pub weights: Vec<WeightSpec>,
    pub order: usize,
    pub refine: bool,
    pub cap_methods: Vec<CapacityMethod>,
    pub panels: usize,
    pub grid_h: f64,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, symbol: Symbol) -> Self {
        Self {
            name: name.into(),
            symbol,
            weights: vec![WeightSpec::hardy()],
            order: DEFAULT_ORDER,
            refine: false,
            cap_methods: vec![CapacityMethod::ClosedForm],
            panels: DEFAULT_PANELS,
            grid_h: DEFAULT_GRID_H,
            tol: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::Invalid {
            name: self.name.clone(),
            reason,
        };
        if self.weights.is_empty() {
            return Err(invalid("no weights".into()));
        }
        if self.cap_methods.is_empty() {
            return Err(invalid("no capacity method".into()));
        }
        if !(8..=MAX_ORDER).contains(&self.order) {
            return Err(invalid(format!(
                "N = {} outside 8..={MAX_ORDER}",
                self.order
            )));
        }
        let rho = sup_norm(&self.symbol, 1024);
        if !(rho < 1.0) {
            return Err(invalid(format!("sup norm {rho} is not below 1")));
        }
        if matches!(self.tol, Some(t) if !(t > 0.0)) {
            return Err(invalid("tol must be positive".into()));
        }
        Ok(())
    }

    /// Tolerance applied to a pairing with capacity method `m`.
    pub fn tol_for(&self, m: CapacityMethod) -> f64 {
        self.tol.unwrap_or(match m {
            CapacityMethod::ClosedForm => CLOSED_FORM_TOL,
            _ => NUMERIC_TOL,
        })
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            symbol: self.symbol.to_string(),
            univalent: self.symbol.declared_univalent(),
            weights: self.weights.iter().map(|w| w.to_string()).collect(),
            n: self.order,
            refine: self.refine,
            cap_methods: self.cap_methods.clone(),
            m: self.panels,
            h: self.grid_h,
            tol: self.tol,
        }
    }
}

/// Split on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_spacing(v: &str) -> Option<f64> {
    match v.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => v.parse().ok(),
    }
}

#[derive(Default)]
struct Draft {
    name: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Draft {
    fn build(self) -> Result<ExperimentConfig, ConfigError> {
        let bad = |line: usize, key: &str, reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };
        let mut univalent = false;
        let mut symbol: Option<Symbol> = None;
        for (line, key, value) in self.entries.iter().filter(|e| e.1 == "symbol") {
            symbol = Some(value.parse().map_err(|e| bad(*line, key, format!("{e}")))?);
        }
        let symbol = symbol.ok_or_else(|| ConfigError::Invalid {
            name: self.name.clone(),
            reason: format!("missing `symbol` (section starting at line {})", self.line),
        })?;
        let mut cfg = ExperimentConfig::new(self.name.clone(), symbol);
        for (line, key, value) in &self.entries {
            let line = *line;
            let v = value.as_str();
            match key.as_str() {
                "symbol" => {}
                "weights" => {
                    cfg.weights = split_top_level(v)
                        .iter()
                        .map(|w| w.parse::<WeightSpec>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(line, key, e.to_string()))?
                }
                "N" => cfg.order = v.parse().map_err(|e| bad(line, key, format!("{e}")))?,
                "refine" => cfg.refine = v.parse().map_err(|e| bad(line, key, format!("{e}")))?,
                "univalent" => univalent = v.parse().map_err(|e| bad(line, key, format!("{e}")))?,
                "cap_method" => {
                    cfg.cap_methods = split_top_level(v)
                        .iter()
                        .map(|m| m.parse::<CapacityMethod>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(line, key, e.to_string()))?
                }
                "M" => cfg.panels = v.parse().map_err(|e| bad(line, key, format!("{e}")))?,
                "h" => {
                    cfg.grid_h =
                        parse_spacing(v).ok_or_else(|| bad(line, key, "not a number".into()))?
                }
                "tol" => cfg.tol = Some(v.parse().map_err(|e| bad(line, key, format!("{e}")))?),
                _ => unreachable!("keys are checked while reading"),
            }
        }
        if univalent {
            cfg.symbol = cfg.symbol.with_univalent(true);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse a config file body into experiments, in file order.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let mut drafts: Vec<Draft> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            drafts.push(Draft {
                name: name.trim().to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if drafts.is_empty() {
            drafts.push(Draft {
                name: "experiment".into(),
                line,
                entries: Vec::new(),
            });
        }
        let d = drafts.last_mut().expect("just pushed");
        d.entries
            .push((line, key.to_string(), value.trim().to_string()));
    }
    drafts.into_iter().map(Draft::build).collect()
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    parse_config(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub symbol: String,
    pub univalent: bool,
    pub weights: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub refine: bool,
    pub cap_methods: Vec<CapacityMethod>,
    #[serde(rename = "M")]
    pub m: usize,
    pub h: f64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub weight: String,
    pub beta: Option<f64>,
    pub window: Option<(usize, usize)>,
    pub order: Option<usize>,
    pub certified: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEntry {
    pub method: CapacityMethod,
    pub value: Option<f64>,
    pub m_value: Option<f64>,
    pub error_indicator: Option<f64>,
    pub frostman_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub weight: String,
    pub cap_method: CapacityMethod,
    pub beta: Option<f64>,
    pub cap: Option<f64>,
    pub m_value: Option<f64>,
    pub discrepancy: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub started: String,
    pub runtime_ms: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub name: String,
    pub config: ConfigEcho,
    pub set: Option<String>,
    pub betas: Vec<BetaEntry>,
    pub capacities: Vec<CapacityEntry>,
    pub pairings: Vec<Pairing>,
    pub pass: bool,
    pub meta: ReportMeta,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn capacity_entry(
    method: CapacityMethod,
    set: &CompactSetSpec,
    cfg: &ExperimentConfig,
) -> CapacityEntry {
    let mut frostman = None;
    let result: Result<CapacityEstimate, String> = match method {
        CapacityMethod::ClosedForm => closed_form(set).map_err(|e| e.to_string()),
        CapacityMethod::Equilibrium => discretize(set, cfg.panels)
            .and_then(|p| solve_equilibrium(&p))
            .map(|s| {
                frostman = finite(s.frostman_residual);
                s.estimate()
            })
            .map_err(|e| e.to_string()),
        CapacityMethod::Grid => cap_dirichlet_grid(set, cfg.grid_h).map_err(|e| e.to_string()),
    };
    match result {
        Ok(e) if e.value.is_finite() && e.value > 0.0 => CapacityEntry {
            method,
            value: Some(e.value),
            m_value: finite(e.m_value),
            error_indicator: finite(e.error_indicator),
            frostman_residual: frostman,
            error: None,
        },
        Ok(e) => CapacityEntry {
            method,
            value: None,
            m_value: None,
            error_indicator: None,
            frostman_residual: frostman,
            error: Some(format!("non-finite capacity {}", e.value)),
        },
        Err(msg) => CapacityEntry {
            method,
            value: None,
            m_value: None,
            error_indicator: None,
            frostman_residual: None,
            error: Some(msg),
        },
    }
}

/// Run one experiment. Solver failures are recorded in the report as error
/// tags and make it fail; they never abort the run.
pub fn run_verification(cfg: &ExperimentConfig) -> VerificationReport {
    let started = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let clock = Instant::now();

    let betas: Vec<BetaEntry> = cfg
        .weights
        .iter()
        .map(
            |spec| match beta_for_symbol(&cfg.symbol, spec, cfg.order, cfg.refine) {
                Ok(run) => BetaEntry {
                    weight: spec.to_string(),
                    beta: finite(run.estimate.beta),
                    window: Some(run.estimate.window),
                    order: Some(run.order),
                    certified: Some(run.certified),
                    error: (!run.estimate.beta.is_finite()).then(|| "non-finite beta".to_string()),
                },
                Err(e) => BetaEntry {
                    weight: spec.to_string(),
                    beta: None,
                    window: None,
                    order: None,
                    certified: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();

    let set = CompactSetSpec::from_symbol(&cfg.symbol).and_then(|s| s.validate().map(|_| s));
    let capacities: Vec<CapacityEntry> = cfg
        .cap_methods
        .iter()
        .map(|&m| match &set {
            Ok(set) => capacity_entry(m, set, cfg),
            Err(e) => CapacityEntry {
                method: m,
                value: None,
                m_value: None,
                error_indicator: None,
                frostman_residual: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut pairings = Vec::new();
    for b in &betas {
        for c in &capacities {
            let tol = cfg.tol_for(c.method);
            let discrepancy = match (b.beta, c.m_value) {
                (Some(beta), Some(m)) if m > 0.0 => finite((beta - m).abs() / m),
                _ => None,
            };
            pairings.push(Pairing {
                weight: b.weight.clone(),
                cap_method: c.method,
                beta: b.beta,
                cap: c.value,
                m_value: c.m_value,
                discrepancy,
                tol,
                pass: matches!(discrepancy, Some(d) if d <= tol),
            });
        }
    }
    let pass = !pairings.is_empty() && pairings.iter().all(|p| p.pass);
    VerificationReport {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        config: cfg.echo(),
        set: set.as_ref().ok().map(|s| s.to_string()),
        betas,
        capacities,
        pairings,
        pass,
        meta: ReportMeta {
            started,
            runtime_ms: clock.elapsed().as_secs_f64() * 1e3,
            threads: rayon::current_num_threads(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "txt",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(ConfigError::Format(other.to_string())),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_rows(r: &VerificationReport, prefix: Option<&str>) -> String {
    let mut out = String::new();
    for p in &r.pairings {
        if let Some(name) = prefix {
            let _ = write!(out, "{name},");
        }
        let _ = writeln!(
            out,
            "\"{}\",\"{}\",{},{},{},{},{},{}",
            r.config.symbol,
            p.weight,
            opt(p.beta),
            p.cap_method,
            opt(p.cap),
            opt(p.m_value),
            opt(p.discrepancy),
            p.pass
        );
    }
    out
}

/// Serialize a report. JSON field order follows the struct definitions.
pub fn emit_report(r: &VerificationReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => format!("{REPORT_HEADER}\n{}", csv_rows(r, None)).into_bytes(),
        ReportFormat::Text => {
            let mut out = String::new();
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{} [{verdict}] symbol {}", r.name, r.config.symbol);
            if let Some(set) = &r.set {
                let _ = writeln!(out, "  image set {set}");
            }
            for b in &r.betas {
                match (&b.beta, &b.error) {
                    (Some(beta), _) => {
                        let (lo, hi) = b.window.unwrap_or_default();
                        let _ = writeln!(
                            out,
                            "  beta[{}] = {beta:.8} (fit n={lo}..{hi}, N={})",
                            b.weight,
                            b.order.unwrap_or(0)
                        );
                    }
                    (None, e) => {
                        let _ = writeln!(
                            out,
                            "  beta[{}] failed: {}",
                            b.weight,
                            e.as_deref().unwrap_or("?")
                        );
                    }
                }
            }
            for c in &r.capacities {
                match (c.value, &c.error) {
                    (Some(v), _) => {
                        let _ = writeln!(
                            out,
                            "  cap[{}] = {v:.8}, M = {:.8}",
                            c.method,
                            c.m_value.unwrap_or(0.0)
                        );
                    }
                    (None, e) => {
                        let _ = writeln!(
                            out,
                            "  cap[{}] failed: {}",
                            c.method,
                            e.as_deref().unwrap_or("?")
                        );
                    }
                }
            }
            for p in &r.pairings {
                let d = p
                    .discrepancy
                    .map(|d| format!("{d:.3e}"))
                    .unwrap_or_else(|| "n/a".into());
                let v = if p.pass { "ok" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "  {} vs {}: discrepancy {d} (tol {}) {v}",
                    p.weight, p.cap_method, p.tol
                );
            }
            out.into_bytes()
        }
    }
}

/// Summary table over a suite, one row per pairing.
pub fn summary_csv(reports: &[VerificationReport]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in reports {
        out.push_str(&csv_rows(r, Some(&r.name)));
    }
    out
}

/// 0 when every experiment passes (including the empty suite), 1 otherwise.
pub fn exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}

/// Create `<base>/run-<timestamp>`, adding a numeric suffix rather than
/// reusing an existing directory.
pub fn fresh_output_dir(base: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(base)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S").to_string();
    for k in 0..10_000 {
        let name = if k == 0 {
            format!("run-{stamp}")
        } else {
            format!("run-{stamp}-{k}")
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    Err(io::Error::new(
        io::ErrorKind::AlreadyExists,
        "no free output directory",
    ))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub dir: PathBuf,
    pub reports: Vec<VerificationReport>,
}

/// Run every experiment in the config file concurrently, then write one
/// report per experiment and `summary.csv` into a fresh directory.
pub fn run_suite(
    path: &Path,
    out_base: &Path,
    format: ReportFormat,
) -> Result<SuiteOutcome, ConfigError> {
    let configs = load_config(path)?;
    let reports: Vec<VerificationReport> = configs.par_iter().map(run_verification).collect();
    let dir = fresh_output_dir(out_base)?;
    for (i, r) in reports.iter().enumerate() {
        let file = dir.join(format!(
            "{:03}-{}.{}",
            i + 1,
            file_stem(&r.name),
            format.extension()
        ));
        fs::write(file, emit_report(r, format))?;
    }
    fs::write(dir.join("summary.csv"), summary_csv(&reports))?;
    Ok(SuiteOutcome { dir, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sections_and_defaults() {
        let text = "# demo\n[a]\nsymbol = dil(0.5)\n\n[b]\nsymbol = affine(0.3,0.4)\nweights = hardy, alpha(1)\nh = 1/128\ncap_method = closed_form, grid\n";
        let cfgs = parse_config(text).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[0].name, "a");
        assert_eq!(cfgs[0].order, 128);
        assert_eq!(cfgs[1].weights.len(), 2);
        assert_eq!(cfgs[1].grid_h, 1.0 / 128.0);
        assert_eq!(
            cfgs[1].cap_methods,
            vec![CapacityMethod::ClosedForm, CapacityMethod::Grid]
        );
        assert_eq!(cfgs[1].tol_for(CapacityMethod::Grid), NUMERIC_TOL);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("symbol = dil(0.5)\ncolour = red\n").unwrap_err();
        assert!(err.to_string().contains("`colour`"), "{err}");
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn invalid_experiments() {
        assert!(matches!(
            parse_config("[x]\nN = 64\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            parse_config("symbol = dil(0.5)\nweights = alpha(-2)\n"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            parse_config("symbol = dil(0.5)\nN 64\n"),
            Err(ConfigError::Syntax { line: 2 })
        ));
        assert!(parse_config("symbol = auto(0.5)\n").is_err());
        assert!(parse_config("").unwrap().is_empty());
    }

    #[test]
    fn top_level_split() {
        assert_eq!(
            split_top_level("alpha(1), hardy"),
            vec!["alpha(1)", "hardy"]
        );
        assert_eq!(split_top_level("poly(0,0.3)"), vec!["poly(0,0.3)"]);
    }

    #[test]
    fn dilation_report() {
        let cfg = &parse_config("symbol = dil(0.5)\n").unwrap()[0];
        let r = run_verification(cfg);
        assert!(r.pass);
        let p = &r.pairings[0];
        assert!(p.discrepancy.unwrap() < 1e-3);
        let json = String::from_utf8(emit_report(&r, ReportFormat::Json)).unwrap();
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let csv = String::from_utf8(emit_report(&r, ReportFormat::Csv)).unwrap();
        assert!(csv.starts_with(REPORT_HEADER));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn failure_is_tagged() {
        // no closed form for a non-univalent polynomial image
        let cfg = &parse_config("symbol = poly(0,0.3,0.2)\n").unwrap()[0];
        let r = run_verification(cfg);
        assert!(!r.pass);
        assert!(r.capacities[0].error.is_some());
        let json = String::from_utf8(emit_report(&r, ReportFormat::Json)).unwrap();
        assert!(json.contains("\"error\": \""));
        assert!(json.contains("\"pass\": false"));
    }

    #[test]
    fn determinism_outside_meta() {
        let cfg = &parse_config(
            "symbol = affine(0.3,0.4)\ncap_method = closed_form, equilibrium\nM = 64\n",
        )
        .unwrap()[0];
        let strip = |r: VerificationReport| {
            let mut v = serde_json::to_value(r).unwrap();
            v.as_object_mut().unwrap().remove("meta");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(run_verification(cfg)), strip(run_verification(cfg)));
    }

    #[test]
    fn empty_summary() {
        assert_eq!(summary_csv(&[]), format!("{SUMMARY_HEADER}\n"));
        assert_eq!(exit_code(&[]), 0);
    }
}
