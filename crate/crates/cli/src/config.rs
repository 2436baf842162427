//! Experiment configuration: a TOML file plus `section.key=value` overrides.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparse_qi::grids::{comparison_rule, energy_rule, hybrid_rule, mixed_rule, Family, LevelRule, SmoothnessKind};
use sparse_qi::{Error as CoreError, SmoothnessSpec, SplineOrder};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub kind: String,
    pub p: f64,
    pub theta: f64,
    pub q: f64,
    pub r: u32,
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub a: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: String,
    pub budgets: Vec<u64>,
    pub corpus: Vec<String>,
    pub lacunary_s: f64,
    pub lattice: String,
    pub resolution: usize,
    pub offset: bool,
    pub graded_level: u32,
    pub graded_depth: u32,
    pub graded_nodes: usize,
    pub reference_offset: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: "auto".into(),
            budgets: vec![100, 1000, 10000],
            corpus: Vec::new(),
            lacunary_s: 1.5,
            lattice: "auto".into(),
            resolution: 257,
            offset: false,
            graded_level: 7,
            graded_depth: 50,
            graded_nodes: 5,
            reference_offset: 6.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<String>,
    pub plot_dir: Option<String>,
}

/// A configuration problem, located in the source file when possible.
#[derive(Debug)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.origin, l, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Effective configuration and the text it came from.
#[derive(Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub spec: SmoothnessSpec,
    pub hash: String,
    source: Source,
}

#[derive(Debug)]
struct Source {
    origin: String,
    text: String,
    overridden: Vec<String>,
}

impl Source {
    fn error(&self, key: Option<&str>, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        if let Some(key) = key {
            if self.overridden.iter().any(|k| k == key) {
                return ConfigError {
                    origin: format!("--set {key}"),
                    line: None,
                    message,
                };
            }
        }
        ConfigError {
            origin: self.origin.clone(),
            line: key.and_then(|k| locate_key(&self.text, k)),
            message,
        }
    }
}

/// 1-based line of `section.key = ...` in TOML text.
pub fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current != section {
            continue;
        }
        if let Some((lhs, _)) = line.split_once('=') {
            if lhs.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    None
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<String, ConfigError> {
    let bad = |m: String| ConfigError {
        origin: format!("--set {assignment}"),
        line: None,
        message: m,
    };
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| bad("expected section.key=value".into()))?;
    let key = key.trim();
    let (section, field) = key
        .split_once('.')
        .ok_or_else(|| bad(format!("key `{key}` must have the form section.key")))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let sub = entry
        .as_table_mut()
        .ok_or_else(|| bad(format!("`{section}` is not a section")))?;
    sub.insert(field.to_string(), parse_value(value.trim()));
    Ok(key.to_string())
}

/// Reads `path`, applies overrides (later ones win) and validates the result.
pub fn load(path: &Path, overrides: &[String]) -> Result<Loaded, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: origin.clone(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    load_str(&text, &origin, overrides)
}

pub fn load_str(text: &str, origin: &str, overrides: &[String]) -> Result<Loaded, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError {
            origin: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })?;
    let mut overridden = Vec::new();
    for o in overrides {
        overridden.push(apply_override(&mut table, o)?);
    }
    let source = Source {
        origin: origin.to_string(),
        text: text.to_string(),
        overridden,
    };
    let config: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let message = e.message().to_string();
        let key = guess_key(&message, text);
        source.error(key.as_deref(), message)
    })?;
    let spec = build_spec(&config, &source)?;
    check_run(&config, &source)?;
    let hash = config_hash(&config);
    Ok(Loaded {
        config,
        spec,
        hash,
        source,
    })
}

fn guess_key(message: &str, text: &str) -> Option<String> {
    let field = message.split('`').nth(1)?;
    ["spec", "run", "output"]
        .iter()
        .map(|s| format!("{s}.{field}"))
        .find(|k| locate_key(text, k).is_some())
}

const SPEC_KEYS: [&str; 6] = ["alpha", "beta", "a", "gamma", "tau", "epsilon"];

fn key_for_message(message: &str) -> Option<&'static str> {
    let lower = message.to_lowercase();
    if lower.contains("epsilon") {
        return Some("epsilon");
    }
    if lower.contains("gamma") {
        return Some("gamma");
    }
    if lower.contains("smoothness vector") || lower.contains("a_1") || lower.contains("a_2") {
        return Some("a");
    }
    SPEC_KEYS
        .iter()
        .chain(["theta", "tau", "p", "q", "d"].iter())
        .find(|k| lower.starts_with(&format!("{k} ")) || lower.contains(&format!("need {k}")))
        .copied()
}

fn build_spec(config: &ExperimentConfig, source: &Source) -> Result<SmoothnessSpec, ConfigError> {
    let s = &config.spec;
    let r = SplineOrder::new(s.r).map_err(|e| source.error(Some("spec.r"), e.to_string()))?;
    let spec = match s.kind.as_str() {
        "mixed" => {
            let a =
                s.a.clone()
                    .ok_or_else(|| source.error(Some("spec.kind"), "mixed smoothness needs `a`"))?;
            if let Some(d) = s.d {
                if d != a.len() {
                    return Err(source.error(
                        Some("spec.d"),
                        format!("d = {d} but the smoothness vector has {} entries", a.len()),
                    ));
                }
            }
            SmoothnessSpec::mixed(s.p, s.theta, s.q, r, a)
        }
        "hybrid" => {
            let d =
                s.d.ok_or_else(|| source.error(Some("spec.kind"), "hybrid smoothness needs `d`"))?;
            let alpha = s
                .alpha
                .ok_or_else(|| source.error(Some("spec.kind"), "hybrid smoothness needs `alpha`"))?;
            let beta = s
                .beta
                .ok_or_else(|| source.error(Some("spec.kind"), "hybrid smoothness needs `beta`"))?;
            SmoothnessSpec::hybrid(s.p, s.theta, s.q, r, d, alpha, beta)
        }
        other => {
            return Err(source.error(
                Some("spec.kind"),
                format!("unknown kind `{other}`, expected `hybrid` or `mixed`"),
            ))
        }
    };
    let mut spec = match s.gamma {
        Some(g) => spec.with_gamma(g, s.tau.unwrap_or(s.q)),
        None => spec,
    };
    if let Some(e) = s.epsilon {
        spec = spec.with_epsilon(e);
    }
    let locate = |e: &CoreError| match e {
        CoreError::EpsilonOutOfRange { .. } => Some("spec.epsilon".to_string()),
        CoreError::DimensionMismatch { .. } => Some("spec.a".to_string()),
        CoreError::InvalidSpec(m) => key_for_message(m).map(|k| format!("spec.{k}")),
        _ => None,
    };
    spec.validate()
        .and_then(|_| spec.level_rule().map(|_| ()))
        .map_err(|e| source.error(locate(&e).as_deref(), e.to_string()))?;
    Ok(spec)
}

pub const CORPUS_NAMES: [&str; 5] = ["poly_const", "poly_top", "sine", "kink", "lacunary"];
const FAMILIES: [&str; 6] = ["auto", "hybrid", "mixed", "energy", "full", "smolyak"];
const LATTICES: [&str; 3] = ["auto", "graded", "uniform"];
const FORMATS: [&str; 2] = ["csv", "jsonl"];

fn check_run(config: &ExperimentConfig, source: &Source) -> Result<(), ConfigError> {
    let run = &config.run;
    let one_of = |key: &str, value: &str, legal: &[&str]| {
        if legal.contains(&value) {
            Ok(())
        } else {
            Err(source.error(
                Some(key),
                format!("unknown value `{value}`, expected one of {}", legal.join(", ")),
            ))
        }
    };
    one_of("run.family", &run.family, &FAMILIES)?;
    one_of("run.lattice", &run.lattice, &LATTICES)?;
    if let Some(f) = &config.output.format {
        one_of("output.format", f, &FORMATS)?;
    }
    for name in &run.corpus {
        one_of("run.corpus", name, &CORPUS_NAMES)?;
    }
    if run.budgets.is_empty() {
        return Err(source.error(Some("run.budgets"), "at least one budget is required"));
    }
    let minimal = 1u64 << config.spec.d.unwrap_or(1).min(63);
    if let Some(&n) = run.budgets.iter().find(|&&n| n < minimal) {
        return Err(source.error(
            Some("run.budgets"),
            format!("budget {n} is below the smallest grid ({minimal} points)"),
        ));
    }
    if !(run.lacunary_s > 0.0 && run.lacunary_s.is_finite()) {
        return Err(source.error(Some("run.lacunary_s"), "lacunary_s must be positive"));
    }
    if run.resolution < 2 {
        return Err(source.error(Some("run.resolution"), "resolution must be at least 2"));
    }
    if run.graded_nodes == 0 {
        return Err(source.error(Some("run.graded_nodes"), "graded_nodes must be positive"));
    }
    if !(run.reference_offset > 0.0 && run.reference_offset.is_finite()) {
        return Err(source.error(Some("run.reference_offset"), "reference_offset must be positive"));
    }
    let needs_gamma = run.family == "energy";
    if needs_gamma && (config.spec.gamma.is_none() || config.spec.kind != "hybrid") {
        return Err(source.error(
            Some("run.family"),
            "family `energy` needs hybrid smoothness with `gamma`",
        ));
    }
    Ok(())
}

/// Hex SHA-256 (first 16 digits) of the canonical JSON of the effective
/// `[spec]` and `[run]` sections. Output settings do not affect results.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::json!({ "spec": config.spec, "run": config.run });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl Loaded {
    /// Level-set rule for the configured family.
    pub fn rule(&self) -> Result<LevelRule, ConfigError> {
        let spec = &self.spec;
        let cls = spec.class();
        let key = Some("run.family");
        let (lf, ls) = sparse_qi::analysis::matched_lambdas(spec);
        let rule = match self.config.run.family.as_str() {
            "auto" => spec.level_rule(),
            "hybrid" => match spec.kind {
                SmoothnessKind::Hybrid { .. } => hybrid_rule(spec, cls),
                _ => return Err(self.source.error(key, "family `hybrid` needs hybrid smoothness")),
            },
            "mixed" => match spec.kind {
                SmoothnessKind::Mixed { .. } => mixed_rule(spec, cls),
                _ => return Err(self.source.error(key, "family `mixed` needs mixed smoothness")),
            },
            "energy" => energy_rule(spec, spec.theta > spec.tau_star()),
            "full" => comparison_rule(lf, Family::FullGrid, spec.d),
            "smolyak" => comparison_rule(ls, Family::Smolyak, spec.d),
            _ => unreachable!("family checked on load"),
        };
        rule.map_err(|e| self.source.error(key, e.to_string()))
    }

    /// Predicted `log n` slope of the cubature error for this family.
    pub fn cubature_exponent(&self, rule: &LevelRule) -> f64 {
        match rule.family {
            Family::FullGrid | Family::Smolyak => -rule.nu,
            _ => -self.spec.cubature_nu(),
        }
    }

    pub fn format(&self) -> &str {
        self.config.output.format.as_deref().unwrap_or("csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str =
        "[spec]\nkind = \"hybrid\"\np = 2.0\ntheta = 1.0\nq = 2.0\nr = 4\nd = 2\nalpha = 1.5\nbeta = -0.5\n";

    #[test]
    fn locates_keys_by_section() {
        let text = "[run]\nseed = 1\n[spec]\n  seed = 2\n";
        assert_eq!(locate_key(text, "run.seed"), Some(2));
        assert_eq!(locate_key(text, "spec.seed"), Some(4));
        assert_eq!(locate_key(text, "output.seed"), None);
    }

    #[test]
    fn overrides_win_and_change_the_hash() {
        let a = load_str(BASE, "x.toml", &[]).unwrap();
        let b = load_str(BASE, "x.toml", &["run.budgets=[50, 500]".into()]).unwrap();
        assert_eq!(b.config.run.budgets, vec![50, 500]);
        assert_ne!(a.hash, b.hash);
        let c = load_str(BASE, "x.toml", &[]).unwrap();
        assert_eq!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 16);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = load_str("[spec]\nkind = \"hybrid\"\np = = 2\n", "bad.toml", &[]).unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = format!("{BASE}epsilon = -1.0\n");
        let err = load_str(&text, "e.toml", &[]).unwrap_err();
        assert_eq!(err.line, Some(10), "{err}");
        let err = load_str(BASE, "e.toml", &["spec.epsilon=-1".into()]).unwrap_err();
        assert!(err.to_string().starts_with("--set spec.epsilon"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{BASE}[run]\nbudget = [4]\n");
        let err = load_str(&text, "u.toml", &[]).unwrap_err();
        assert!(err.message.contains("budget"), "{err}");
    }

    #[test]
    fn infinite_parameters_parse() {
        let text = BASE.replace("theta = 1.0", "theta = inf");
        let l = load_str(&text, "i.toml", &[]).unwrap();
        assert!(l.spec.theta.is_infinite());
    }
}
