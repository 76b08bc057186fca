use crate::error::{invalid, Error, Result};
use crate::fiber_solver::SolverConfig;
use crate::states::ProfileFamily;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

const MAX_RANGE_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Bands,
    Derivative,
    Kdelta,
    Quasimode,
    Verify,
    Bulk,
    Edge,
    Localize,
    Synthesize,
}

const SOLVER_KEYS: [&str; 6] = ["step", "margin", "tol", "crosscheck", "format", "out"];

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Bands => "bands",
            CommandKind::Derivative => "derivative",
            CommandKind::Kdelta => "kdelta",
            CommandKind::Quasimode => "quasimode",
            CommandKind::Verify => "verify",
            CommandKind::Bulk => "bulk",
            CommandKind::Edge => "edge",
            CommandKind::Localize => "localize",
            CommandKind::Synthesize => "synthesize",
        }
    }

    /// Keys accepted on top of the solver and output settings.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            CommandKind::Bands | CommandKind::Derivative | CommandKind::Quasimode => &["n", "k"],
            CommandKind::Kdelta => &["n", "delta"],
            CommandKind::Verify => &["n"],
            CommandKind::Bulk => &["n", "delta", "profile", "b", "mu"],
            CommandKind::Edge => &["n", "interval", "b"],
            CommandKind::Localize => &["n", "delta", "profile", "epsilon", "b", "c"],
            CommandKind::Synthesize => &["n", "delta", "profile", "x", "y"],
        }
    }

    fn accepts(self, key: &str) -> bool {
        self.keys().contains(&key) || SOLVER_KEYS.contains(&key)
    }

    fn default_format(self) -> Format {
        match self {
            CommandKind::Verify => Format::Json,
            _ => Format::Csv,
        }
    }

    fn default_k(self) -> Option<Range> {
        match self {
            CommandKind::Bands | CommandKind::Derivative => Some(Range { lo: 0.0, hi: 4.0, step: 0.5 }),
            CommandKind::Quasimode => Some(Range { lo: 3.0, hi: 4.5, step: 0.5 }),
            _ => None,
        }
    }

    fn default_delta(self) -> Vec<f64> {
        match self {
            CommandKind::Kdelta => vec![1e-4, 1e-6, 1e-8, 1e-10],
            CommandKind::Bulk | CommandKind::Localize => vec![1e-4, 1e-6, 1e-8],
            CommandKind::Synthesize => vec![1e-4],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("format must be csv or json, got '{other}'"))),
        }
    }
}

/// Closed arithmetic progression lo, lo + step, …, ≤ hi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    fn parse(key: &str, s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let range = match parts.as_slice() {
            [single] => {
                let v = parse_f64(key, single)?;
                Range { lo: v, hi: v, step: 1.0 }
            }
            [lo, hi, step] => Range { lo: parse_f64(key, lo)?, hi: parse_f64(key, hi)?, step: parse_f64(key, step)? },
            _ => return Err(invalid(format!("{key} must be a number or lo:hi:step, got '{s}'"))),
        };
        if !(range.step > 0.0) {
            return Err(invalid(format!("{key} step must be positive, got {}", range.step)));
        }
        if range.hi < range.lo {
            return Err(invalid(format!("{key} range is empty: {} > {}", range.lo, range.hi)));
        }
        if range.count() > MAX_RANGE_POINTS {
            return Err(invalid(format!("{key} range has more than {MAX_RANGE_POINTS} points")));
        }
        Ok(range)
    }

    pub fn count(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// Fully parsed and validated settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Range>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileFamily>,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Range>,
    pub solver: SolverConfig,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Maps a flag or key spelling to its canonical key.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    Some(match key.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "n" => "n",
        "k" | "k-range" => "k",
        "delta" | "delta-list" => "delta",
        "interval" => "interval",
        "epsilon" | "eps" => "epsilon",
        "profile" => "profile",
        "b" => "b",
        "mu" => "mu",
        "c" => "c",
        "x" | "x-range" => "x",
        "y" | "y-range" => "y",
        "step" => "step",
        "margin" => "margin",
        "tol" => "tol",
        "crosscheck" => "crosscheck",
        "format" => "format",
        "out" => "out",
        _ => return None,
    })
}

/// Raw settings from the three layers, lowest precedence first.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    pub file: BTreeMap<String, String>,
    pub tokens: BTreeMap<String, String>,
    pub flags: BTreeMap<String, String>,
}

impl Layers {
    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("{}:{}: expected key=value, got '{line}'", path.display(), i + 1)))?;
            let key = canonical_key(k).ok_or_else(|| invalid(format!("{}:{}: unknown key '{}'", path.display(), i + 1, k.trim())))?;
            self.file.insert(key.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn add_token(&mut self, token: &str) -> Result<()> {
        let (k, v) = token.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got '{token}'")))?;
        let key = canonical_key(k).ok_or_else(|| invalid(format!("unknown key '{}'", k.trim())))?;
        if self.tokens.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(invalid(format!("key '{key}' given more than once")));
        }
        Ok(())
    }

    pub fn add_flag(&mut self, key: &'static str, value: Option<&String>) {
        if let Some(v) = value {
            self.flags.insert(key.to_string(), v.trim().to_string());
        }
    }

    /// Flags override tokens, which override the file. Keys foreign to the command are rejected
    /// when given explicitly and ignored when they come from the file.
    fn merged(&self, command: CommandKind) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.file {
            if command.accepts(k) {
                out.insert(k.clone(), v.clone());
            }
        }
        for (k, v) in self.tokens.iter().chain(&self.flags) {
            if !command.accepts(k) {
                return Err(invalid(format!("'{k}' does not apply to the {command} command")));
            }
            out.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    /// Output format as far as it can be read, for reporting failures of the full parse.
    pub fn format_hint(&self, command: CommandKind) -> Format {
        self.flags
            .get("format")
            .or_else(|| self.tokens.get("format"))
            .or_else(|| self.file.get("format"))
            .and_then(|s| Format::parse(s).ok())
            .unwrap_or(command.default_format())
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| invalid(format!("{key}: '{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(invalid(format!("{key} must be finite, got {v}")));
    }
    Ok(v)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    let values = s.split(',').map(|v| parse_f64(key, v)).collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(invalid(format!("{key} list is empty")));
    }
    Ok(values)
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(invalid(format!("{key} must be true or false, got '{other}'"))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{key} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Merges the layers and validates every value; nothing is computed here.
    pub fn from_layers(command: CommandKind, layers: &Layers) -> Result<Self> {
        let map = layers.merged(command)?;
        let get = |k: &str| map.get(k).map(String::as_str);

        let n = match get("n") {
            Some(s) => s.trim().parse::<usize>().map_err(|_| invalid(format!("n must be a positive integer, got '{s}'")))?,
            None => 1,
        };
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }

        let k = match get("k") {
            Some(s) => Some(Range::parse("k", s)?),
            None => command.default_k(),
        };

        let delta = match get("delta") {
            Some(s) => parse_list("delta", s)?,
            None => command.default_delta(),
        };
        for &d in &delta {
            positive("delta", d)?;
        }
        if command == CommandKind::Synthesize && delta.len() != 1 {
            return Err(invalid("synthesize takes exactly one delta"));
        }

        let interval = match get("interval") {
            Some(s) => match parse_list("interval", s)?.as_slice() {
                &[lo, hi] if lo < hi => Some((lo, hi)),
                &[lo, hi] => return Err(invalid(format!("interval needs lo < hi, got {lo},{hi}"))),
                _ => return Err(invalid(format!("interval must be lo,hi, got '{s}'"))),
            },
            None => None,
        };
        if command == CommandKind::Edge && interval.is_none() {
            return Err(invalid("edge needs an energy interval (interval=lo,hi)"));
        }

        let epsilon = match get("epsilon") {
            Some(s) => parse_list("epsilon", s)?,
            None if command == CommandKind::Localize => vec![0.3, 0.5, 0.7],
            None => Vec::new(),
        };
        if let Some(e) = epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {e}")));
        }

        let profile = match get("profile") {
            Some(s) => Some(s.parse::<ProfileFamily>()?),
            None if command.keys().contains(&"profile") => Some(ProfileFamily::Indicator { from: 0.0, to: 1.0 }),
            None => None,
        };

        if let Some(p) = &profile {
            p.validate()?;
        }

        let b = match get("b") {
            Some(s) => positive("b", parse_f64("b", s)?)?,
            None => 1.0,
        };
        let mu = match get("mu") {
            Some(s) => {
                let v = parse_f64("mu", s)?;
                if v < 0.0 {
                    return Err(invalid(format!("mu must be nonnegative, got {v}")));
                }
                Some(v)
            }
            None => None,
        };
        let c = match get("c") {
            Some(s) => positive("c", parse_f64("c", s)?)?,
            None => 1.0,
        };

        let x = match get("x") {
            Some(s) => Some(Range::parse("x", s)?),
            None if command == CommandKind::Synthesize => Some(Range { lo: 0.0, hi: 12.0, step: 0.25 }),
            None => None,
        };
        let y = match get("y") {
            Some(s) => Some(Range::parse("y", s)?),
            None if command == CommandKind::Synthesize => Some(Range { lo: -8.0, hi: 8.0, step: 0.5 }),
            None => None,
        };
        if let Some(r) = x {
            if r.lo < 0.0 {
                return Err(invalid(format!("x grid must lie in the half-plane x >= 0, got lo = {}", r.lo)));
            }
        }

        let mut solver = SolverConfig::default();
        if let Some(s) = get("step") {
            solver.step = parse_f64("step", s)?;
        }
        if let Some(s) = get("margin") {
            solver.domain_margin = parse_f64("margin", s)?;
        }
        if let Some(s) = get("tol") {
            solver.lambda_tol = parse_f64("tol", s)?;
        }
        if let Some(s) = get("crosscheck") {
            solver.crosscheck = parse_bool("crosscheck", s)?;
        }
        solver.validate()?;

        let format = match get("format") {
            Some(s) => Format::parse(s)?,
            None => command.default_format(),
        };
        let out = get("out").map(PathBuf::from);

        Ok(RunConfig { command, n, k, delta, interval, epsilon, profile, b, mu, c, x, y, solver, format, out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers(tokens: &[&str]) -> Layers {
        let mut l = Layers::default();
        for t in tokens {
            l.add_token(t).unwrap();
        }
        l
    }

    #[test]
    fn ranges_count_inclusive_endpoints() {
        let r = Range::parse("k", "0:4:0.5").unwrap();
        assert_eq!(r.count(), 9);
        assert_eq!(r.values().last().copied(), Some(4.0));
        assert_eq!(Range::parse("k", "-2").unwrap().values(), vec![-2.0]);
        assert!(Range::parse("k", "1:0:0.1").is_err());
        assert!(Range::parse("k", "0:1:0").is_err());
        assert!(Range::parse("k", "0:1").is_err());
    }

    #[test]
    fn precedence_is_flags_then_tokens_then_file() {
        let mut l = layers(&["n=2", "k=0:1:0.5"]);
        l.file.insert("n".into(), "3".into());
        l.file.insert("tol".into(), "1e-10".into());
        l.file.insert("delta".into(), "1e-3".into());
        let cfg = RunConfig::from_layers(CommandKind::Bands, &l).unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.solver.lambda_tol, 1e-10);
        l.add_flag("n", Some(&"4".to_string()));
        assert_eq!(RunConfig::from_layers(CommandKind::Bands, &l).unwrap().n, 4);
    }

    #[test]
    fn explicit_foreign_keys_are_rejected() {
        let l = layers(&["delta=1e-4"]);
        assert!(RunConfig::from_layers(CommandKind::Bands, &l).is_err());
        assert!(layers(&[]).add_token("bogus=1").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for tokens in [&["n=0"][..], &["k=a:b:c"], &["step=-1"], &["format=xml"], &["crosscheck=maybe"]] {
            assert!(RunConfig::from_layers(CommandKind::Bands, &layers(tokens)).is_err(), "{tokens:?}");
        }
        assert!(RunConfig::from_layers(CommandKind::Localize, &layers(&["epsilon=1.5"])).is_err());
        assert!(RunConfig::from_layers(CommandKind::Edge, &layers(&[])).is_err());
        assert!(RunConfig::from_layers(CommandKind::Edge, &layers(&["interval=2,1"])).is_err());
        assert!(RunConfig::from_layers(CommandKind::Bulk, &layers(&["profile=power:0.4"])).is_err());
        assert!(RunConfig::from_layers(CommandKind::Bulk, &layers(&["profile=cubic:1"])).is_err());
    }

    #[test]
    fn defaults_follow_the_command() {
        let v = RunConfig::from_layers(CommandKind::Verify, &layers(&[])).unwrap();
        assert_eq!(v.format, Format::Json);
        let b = RunConfig::from_layers(CommandKind::Bands, &layers(&[])).unwrap();
        assert_eq!((b.format, b.k.unwrap().count()), (Format::Csv, 9));
        let loc = RunConfig::from_layers(CommandKind::Localize, &layers(&[])).unwrap();
        assert_eq!(loc.epsilon, vec![0.3, 0.5, 0.7]);
        assert_eq!(loc.profile, Some(ProfileFamily::Indicator { from: 0.0, to: 1.0 }));
    }
}
