//! Line-oriented run configuration.
//!
//! One `key = value` pair per line, keys dotted by section (`grid.L = 32`).
//! `#` starts a comment. Lists are comma separated. Unknown keys, repeated
//! keys and malformed values are errors that carry the line number.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use lcflow::flow::{FlowMode, FlowOptions, StopCriterion};
use lcflow::verify::Tolerances;
use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("{key} {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Round,
    Mobius,
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Codazzi,
    Simons,
    GradientInequality,
    Variation,
    Evolution,
    Monotonicity,
    GradientEstimate,
}

impl Check {
    /// Checks that need a trajectory rather than a single cross section.
    pub fn needs_trajectory(self) -> bool {
        matches!(self, Check::Evolution | Check::Monotonicity | Check::GradientEstimate)
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "codazzi" => Check::Codazzi,
            "simons" => Check::Simons,
            "gradient_inequality" => Check::GradientInequality,
            "variation" => Check::Variation,
            "evolution" => Check::Evolution,
            "monotonicity" => Check::Monotonicity,
            "gradient_estimate" => Check::GradientEstimate,
            _ => return Err(format!("unknown check `{s}`")),
        })
    }
}

fn ratio_str<S: Serializer>(r: &Ratio<u32>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(serialize_with = "ratio_str")]
    pub oversample: Ratio<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub c: f64,
    pub a: [f64; 3],
    pub amplitude: f64,
    pub l0: usize,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    /// Step of the finite-difference probe in the variation check.
    pub epsilon: f64,
    /// `(l, m)` of the harmonic used as variation direction.
    pub probe: (usize, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    /// Left out of reports so that identical runs into different
    /// directories produce identical bytes.
    #[serde(skip)]
    pub directory: PathBuf,
    pub csv: bool,
    pub snapshot_stride: usize,
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub flow: FlowOptions<f64>,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig {
                l: 32,
                oversample: Ratio::from_integer(2),
            },
            initial: InitialConfig {
                kind: InitialKind::Round,
                c: 1.0,
                a: [0.0; 3],
                amplitude: 0.1,
                l0: 4,
                file: None,
            },
            flow: FlowOptions::default(),
            verify: VerifyConfig {
                checks: vec![Check::Codazzi, Check::Simons, Check::GradientInequality, Check::Variation],
                tolerances: Tolerances::default(),
                epsilon: 1e-3,
                probe: (2, 1),
            },
            output: OutputConfig {
                directory: PathBuf::from("out"),
                csv: true,
                snapshot_stride: 1,
                deterministic: false,
            },
            seed: None,
        }
    }
}

const KEYS: &[&str] = &[
    "grid.L",
    "grid.oversample",
    "initial.kind",
    "initial.c",
    "initial.a",
    "initial.amplitude",
    "initial.l0",
    "initial.file",
    "flow.mode",
    "flow.rk_tolerance",
    "flow.dt_initial",
    "flow.dt_min",
    "flow.dt_max",
    "flow.stop",
    "flow.eps_ext",
    "flow.eps_conv",
    "flow.t_final",
    "flow.snapshot_every",
    "flow.sigmas",
    "flow.k0",
    "flow.max_steps",
    "flow.record_stride",
    "verify.checks",
    "verify.epsilon",
    "verify.probe",
    "verify.codazzi",
    "verify.simons",
    "verify.gradient_inequality",
    "verify.variation",
    "verify.variation_order",
    "verify.evolution",
    "verify.monotonicity",
    "verify.decay_r2",
    "verify.gradient_estimate_slack",
    "output.directory",
    "output.csv",
    "output.snapshot_stride",
    "output.deterministic",
    "seed",
];

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: Display,
    {
        let Some((line, raw)) = self.0.get(key) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|e| ConfigError::Syntax {
            line: *line,
            msg: format!("{key}: {e} (`{raw}`)"),
        })
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T::Err: Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: Display,
    {
        let Some((line, raw)) = self.0.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e| ConfigError::Syntax {
                    line: *line,
                    msg: format!("{key}: {e} (`{s}`)"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |(l, _)| *l)
    }
}

fn lexed(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("{key} has no value"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("{key} already set on line {first}"),
            });
        }
    }
    Ok(Entries(map))
}

fn enum_value<T>(e: &Entries, key: &str, table: &[(&str, T)]) -> Result<Option<T>, ConfigError>
where
    T: Copy,
{
    let Some(raw) = e.get::<String>(key)? else {
        return Ok(None);
    };
    table
        .iter()
        .find(|(name, _)| *name == raw)
        .map(|(_, v)| Some(*v))
        .ok_or_else(|| ConfigError::Syntax {
            line: e.line(key),
            msg: format!(
                "{key}: expected one of {}, got `{raw}`",
                table.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ),
        })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = lexed(text)?;
    let mut cfg = RunConfig::default();

    e.set("grid.L", &mut cfg.grid.l)?;
    e.set("grid.oversample", &mut cfg.grid.oversample)?;

    let kinds = [
        ("round", InitialKind::Round),
        ("mobius", InitialKind::Mobius),
        ("random", InitialKind::Random),
        ("file", InitialKind::File),
    ];
    if let Some(k) = enum_value(&e, "initial.kind", &kinds)? {
        cfg.initial.kind = k;
    }
    e.set("initial.c", &mut cfg.initial.c)?;
    if let Some(a) = e.list::<f64>("initial.a")? {
        cfg.initial.a = a.try_into().map_err(|_| ConfigError::Syntax {
            line: e.line("initial.a"),
            msg: "initial.a: expected three comma-separated numbers".into(),
        })?;
    }
    e.set("initial.amplitude", &mut cfg.initial.amplitude)?;
    e.set("initial.l0", &mut cfg.initial.l0)?;
    cfg.initial.file = e.get("initial.file")?;

    let f = &mut cfg.flow;
    if let Some(m) = enum_value(
        &e,
        "flow.mode",
        &[("unnormalized", FlowMode::Unnormalized), ("normalized", FlowMode::Normalized)],
    )? {
        f.mode = m;
    }
    if let Some(s) = enum_value(
        &e,
        "flow.stop",
        &[
            ("extinction", StopCriterion::Extinction),
            ("convergence", StopCriterion::Convergence),
            ("t_final", StopCriterion::TFinal),
        ],
    )? {
        f.stop = s;
    }
    e.set("flow.rk_tolerance", &mut f.rk_tolerance)?;
    e.set("flow.dt_initial", &mut f.dt_initial)?;
    e.set("flow.dt_min", &mut f.dt_min)?;
    e.set("flow.dt_max", &mut f.dt_max)?;
    e.set("flow.eps_ext", &mut f.eps_ext)?;
    e.set("flow.eps_conv", &mut f.eps_conv)?;
    e.set("flow.t_final", &mut f.t_final)?;
    e.set("flow.snapshot_every", &mut f.snapshot_every)?;
    if let Some(s) = e.list("flow.sigmas")? {
        f.sigmas = s;
    }
    e.set("flow.k0", &mut f.k0)?;
    e.set("flow.max_steps", &mut f.max_steps)?;
    e.set("flow.record_stride", &mut f.record_stride)?;

    let v = &mut cfg.verify;
    if let Some(c) = e.list("verify.checks")? {
        v.checks = c;
    }
    e.set("verify.epsilon", &mut v.epsilon)?;
    if let Some(p) = e.list::<i64>("verify.probe")? {
        match p[..] {
            [l, m] if l >= 0 => v.probe = (l as usize, m),
            _ => {
                return Err(ConfigError::Syntax {
                    line: e.line("verify.probe"),
                    msg: "verify.probe: expected `l, m`".into(),
                })
            }
        }
    }
    let t = &mut v.tolerances;
    e.set("verify.codazzi", &mut t.codazzi)?;
    e.set("verify.simons", &mut t.simons)?;
    e.set("verify.gradient_inequality", &mut t.gradient_inequality)?;
    e.set("verify.variation", &mut t.variation)?;
    e.set("verify.variation_order", &mut t.variation_order)?;
    e.set("verify.evolution", &mut t.evolution)?;
    e.set("verify.monotonicity", &mut t.monotonicity)?;
    e.set("verify.decay_r2", &mut t.decay_r2)?;
    e.set("verify.gradient_estimate_slack", &mut t.gradient_estimate_slack)?;

    e.set("output.directory", &mut cfg.output.directory)?;
    e.set("output.csv", &mut cfg.output.csv)?;
    e.set("output.snapshot_stride", &mut cfg.output.snapshot_stride)?;
    e.set("output.deterministic", &mut cfg.output.deterministic)?;
    cfg.seed = e.get("seed")?;

    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid.l < 4 {
            return Err(invalid("grid.L", "must be ≥ 4"));
        }
        if self.grid.oversample < Ratio::from_integer(1) {
            return Err(invalid("grid.oversample", "must be ≥ 1"));
        }
        let i = &self.initial;
        if !(i.c > 0.0) || !i.c.is_finite() {
            return Err(invalid("initial.c", "must be positive"));
        }
        if i.a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("initial.a", "must be finite"));
        }
        if !(i.amplitude >= 0.0) {
            return Err(invalid("initial.amplitude", "must be non-negative"));
        }
        if i.kind == InitialKind::Random && !(2..=self.grid.l).contains(&i.l0) {
            return Err(invalid("initial.l0", format!("must lie in [2, {}]", self.grid.l)));
        }
        match (&i.file, i.kind) {
            (None, InitialKind::File) => return Err(invalid("initial.file", "is required when initial.kind = file")),
            (Some(p), _) if !p.is_file() => {
                return Err(invalid("initial.file", format!("does not exist: {}", p.display())))
            }
            _ => {}
        }
        self.flow
            .validate()
            .map_err(|e| invalid("flow", e.to_string()))?;
        let t = &self.verify.tolerances;
        for (key, v) in [
            ("verify.codazzi", t.codazzi),
            ("verify.simons", t.simons),
            ("verify.gradient_inequality", t.gradient_inequality),
            ("verify.variation", t.variation),
            ("verify.variation_order", t.variation_order),
            ("verify.evolution", t.evolution),
            ("verify.monotonicity", t.monotonicity),
            ("verify.decay_r2", t.decay_r2),
            ("verify.gradient_estimate_slack", t.gradient_estimate_slack),
            ("verify.epsilon", self.verify.epsilon),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(key, "must be positive"));
            }
        }
        let (l, m) = self.verify.probe;
        if l > self.grid.l || m.unsigned_abs() as usize > l {
            return Err(invalid("verify.probe", format!("needs |m| ≤ l ≤ {}", self.grid.l)));
        }
        if self.output.snapshot_stride == 0 {
            return Err(invalid("output.snapshot_stride", "must be at least 1"));
        }
        Ok(())
    }
}
