//! Flat `key=value` run and convergence configurations.
//!
//! One key per line; `#` starts a comment; blank lines are ignored.
//! Every error names the line and key it comes from.

use std::collections::BTreeMap;
use std::path::PathBuf;

use smsplit_core::{
    cfl_grid_pairs, reaction_matrix_example, MixtureParams, Profile, ReactionMatrix, Scenario, Scheme,
};

use crate::error::{HarnessError, Result};

/// Default probe location of the paper's time series plots.
pub const DEFAULT_PROBE: f64 = 0.72;

/// The five named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PureDiffusionUphill,
    PureDiffusionAsymptotic,
    Hydrogen(u8),
}

impl ScenarioKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "pure-diffusion-uphill" => ScenarioKind::PureDiffusionUphill,
            "pure-diffusion-asymptotic" => ScenarioKind::PureDiffusionAsymptotic,
            "hydrogen-1" => ScenarioKind::Hydrogen(1),
            "hydrogen-2" => ScenarioKind::Hydrogen(2),
            "hydrogen-3" => ScenarioKind::Hydrogen(3),
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            ScenarioKind::PureDiffusionUphill => "pure-diffusion-uphill".into(),
            ScenarioKind::PureDiffusionAsymptotic => "pure-diffusion-asymptotic".into(),
            ScenarioKind::Hydrogen(id) => format!("hydrogen-{id}"),
        }
    }

    pub fn mixture(&self) -> MixtureParams {
        match self {
            ScenarioKind::PureDiffusionUphill => MixtureParams::uphill(),
            ScenarioKind::PureDiffusionAsymptotic => MixtureParams::asymptotic(),
            ScenarioKind::Hydrogen(_) => MixtureParams::hydrogen(),
        }
    }

    pub fn default_profile(&self) -> Profile {
        match self {
            ScenarioKind::PureDiffusionAsymptotic => Profile::Step,
            _ => Profile::Uphill,
        }
    }

    pub fn reaction(&self) -> Option<ReactionMatrix> {
        match self {
            ScenarioKind::Hydrogen(id) => reaction_matrix_example(*id).ok(),
            _ => None,
        }
    }

    pub fn has_reaction(&self) -> bool {
        matches!(self, ScenarioKind::Hydrogen(_))
    }
}

/// A validated `run` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ScenarioKind,
    pub scenario: Scenario,
    pub probe: f64,
    pub out: Option<PathBuf>,
}

/// A validated `convergence` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub kind: ScenarioKind,
    pub profile: Profile,
    pub schemes: Vec<Scheme>,
    /// `(J, N)` pairs, coarsest first.
    pub levels: Vec<(usize, usize)>,
    pub probe: f64,
    pub out: Option<PathBuf>,
}

/// Schemes of the convergence study when none are listed.
pub const DEFAULT_SCHEMES: [Scheme; 5] = [
    Scheme::Ab,
    Scheme::AbaFrozen,
    Scheme::AbaUpdated,
    Scheme::PicardReaction { iters: 2 },
    Scheme::PicardReaction { iters: 3 },
];

/// `(line, value)` per key, in first-seen order of the file.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(config_error(line, content, "expected key=value"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !allowed.contains(&key) {
                return Err(config_error(line, key, "unknown key"));
            }
            if value.is_empty() {
                return Err(config_error(line, key, "empty value"));
            }
            if map.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(config_error(line, key, "duplicate key"));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, value)) => f(value).map(Some).map_err(|m| config_error(line, key, &m)),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.get(key).map_or(0, |(l, _)| l)
    }
}

fn config_error(line: usize, key: &str, message: &str) -> HarnessError {
    HarnessError::Config {
        line,
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn parse_count(value: &str) -> std::result::Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, got {value:?}"))
}

/// `JxN`, e.g. `140x40000`.
pub fn parse_grid(value: &str) -> std::result::Result<(usize, usize), String> {
    let (j, n) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected JxN, got {value:?}"))?;
    Ok((parse_count(j.trim())?, parse_count(n.trim())?))
}

/// Hierarchy level `0..=4`, 0 being the coarsest `50x5000`.
pub fn level_grid(value: &str) -> std::result::Result<(usize, usize), String> {
    let level = parse_count(value)?;
    let pairs = cfl_grid_pairs();
    if level >= pairs.len() {
        return Err(format!("level must be 0..=4, got {level}"));
    }
    let pair = pairs[pairs.len() - 1 - level];
    Ok((pair.intervals, pair.time_steps))
}

fn parse_profile(value: &str) -> std::result::Result<Profile, String> {
    match value {
        "uphill" => Ok(Profile::Uphill),
        "step" => Ok(Profile::Step),
        other => Err(format!("unknown profile {other:?} (uphill | step)")),
    }
}

fn parse_probe(value: &str) -> std::result::Result<f64, String> {
    let x: f64 = value.parse().map_err(|_| format!("expected a number, got {value:?}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("probe must lie in [0, 1], got {x}"))
    }
}

/// Scheme names; `picard` and `nested` read their counts from the
/// `iterations`, `inner` and `outer` keys.
fn parse_scheme_name(name: &str, entries: &Entries) -> std::result::Result<Scheme, String> {
    let count = |key: &str, default: Option<usize>| -> std::result::Result<usize, String> {
        match entries.get(key) {
            Some((_, v)) => parse_count(v).map_err(|m| format!("{key}: {m}")),
            None => default.ok_or_else(|| format!("scheme {name} needs {key}=")),
        }
    };
    match name {
        "diffusion" => Ok(Scheme::PureDiffusion),
        "ab" => Ok(Scheme::Ab),
        "aba-frozen" => Ok(Scheme::AbaFrozen),
        "aba-updated" => Ok(Scheme::AbaUpdated),
        "iter2" => Ok(Scheme::PicardReaction { iters: 2 }),
        "iter3" => Ok(Scheme::PicardReaction { iters: 3 }),
        "picard" => Ok(Scheme::PicardReaction {
            iters: count("iterations", None)?,
        }),
        "nested" => Ok(Scheme::PicardNested {
            inner: count("inner", Some(2))?,
            outer: count("outer", Some(2))?,
        }),
        other => Err(format!(
            "unknown scheme {other:?} (diffusion | ab | aba-frozen | aba-updated | iter2 | iter3 | picard | nested)"
        )),
    }
}

fn scenario_kind(entries: &Entries, default: Option<ScenarioKind>) -> Result<ScenarioKind> {
    match entries.get("scenario") {
        Some((line, v)) => ScenarioKind::parse(v).ok_or_else(|| {
            config_error(
                line,
                "scenario",
                &format!("unknown scenario {v:?} (pure-diffusion-uphill | pure-diffusion-asymptotic | hydrogen-1 | hydrogen-2 | hydrogen-3)"),
            )
        }),
        None => default.ok_or_else(|| config_error(0, "scenario", "missing required key")),
    }
}

const RUN_KEYS: [&str; 11] = [
    "scenario", "scheme", "iterations", "inner", "outer", "grid", "level", "cadence", "out", "probe", "profile",
];

/// Parses and validates a `run` configuration, including the CFL bound.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = Entries::parse(text, &RUN_KEYS)?;
    let kind = scenario_kind(&entries, None)?;

    let scheme = match entries.get("scheme") {
        Some((line, v)) => parse_scheme_name(v, &entries).map_err(|m| config_error(line, "scheme", &m))?,
        None if !kind.has_reaction() => Scheme::PureDiffusion,
        None => return Err(config_error(0, "scheme", "missing required key for a reaction scenario")),
    };
    if scheme.needs_reaction() != kind.has_reaction() {
        let message = if kind.has_reaction() {
            format!("scenario {} needs a splitting scheme, not diffusion", kind.name())
        } else {
            format!("scenario {} has no reaction; use scheme=diffusion", kind.name())
        };
        return Err(config_error(entries.line_of("scheme"), "scheme", &message));
    }

    let grid = entries.parse_with("grid", parse_grid)?;
    let level = entries.parse_with("level", level_grid)?;
    let (grid_key, (intervals, steps)) = match (grid, level) {
        (Some(g), None) => ("grid", g),
        (None, Some(l)) => ("level", l),
        (Some(_), Some(_)) => return Err(config_error(entries.line_of("level"), "level", "give either grid or level, not both")),
        (None, None) => return Err(config_error(0, "grid", "missing required key (grid=JxN or level=0..4)")),
    };

    let profile = entries.parse_with("profile", parse_profile)?.unwrap_or(kind.default_profile());
    let mut scenario = Scenario::new(profile, kind.mixture(), kind.reaction(), intervals, steps, scheme)
        .map_err(|e| config_error(entries.line_of(grid_key), grid_key, &e.to_string()))?;
    if let Some(every) = entries.parse_with("cadence", parse_count)? {
        scenario = scenario
            .with_snapshot_every(every)
            .map_err(|e| config_error(entries.line_of("cadence"), "cadence", &e.to_string()))?;
    }
    Ok(RunConfig {
        kind,
        scenario,
        probe: entries.parse_with("probe", parse_probe)?.unwrap_or(DEFAULT_PROBE),
        out: entries.get("out").map(|(_, v)| PathBuf::from(v)),
    })
}

const CONVERGENCE_KEYS: [&str; 9] = [
    "scenario", "schemes", "iterations", "inner", "outer", "levels", "out", "probe", "profile",
];

/// Parses a `convergence` configuration. Defaults: `hydrogen-1`, all five
/// schemes, levels 0–3 (the four grids below the reference).
pub fn parse_convergence_config(text: &str) -> Result<ConvergenceConfig> {
    let entries = Entries::parse(text, &CONVERGENCE_KEYS)?;
    let kind = scenario_kind(&entries, Some(ScenarioKind::Hydrogen(1)))?;
    if !kind.has_reaction() {
        return Err(config_error(entries.line_of("scenario"), "scenario", "the convergence study needs a hydrogen scenario"));
    }
    let schemes = match entries.get("schemes") {
        None => DEFAULT_SCHEMES.to_vec(),
        Some((line, v)) => {
            let mut out = Vec::new();
            for name in v.split(',').map(str::trim) {
                let s = parse_scheme_name(name, &entries).map_err(|m| config_error(line, "schemes", &m))?;
                if !s.needs_reaction() {
                    return Err(config_error(line, "schemes", "diffusion is not a splitting scheme"));
                }
                if out.contains(&s) {
                    return Err(config_error(line, "schemes", &format!("{name} listed twice")));
                }
                out.push(s);
            }
            out
        }
    };
    let levels = match entries.get("levels") {
        None => (0..4).map(|l| level_grid(&l.to_string()).expect("valid level")).collect(),
        Some((line, v)) => {
            let mut out: Vec<(usize, usize)> = Vec::new();
            for item in v.split(',').map(str::trim) {
                let pair = level_grid(item).map_err(|m| config_error(line, "levels", &m))?;
                if pair.0 == 190 {
                    return Err(config_error(line, "levels", "level 4 is the reference grid"));
                }
                if out.contains(&pair) {
                    return Err(config_error(line, "levels", &format!("level {item} listed twice")));
                }
                out.push(pair);
            }
            out.sort();
            out
        }
    };
    Ok(ConvergenceConfig {
        kind,
        profile: entries.parse_with("profile", parse_profile)?.unwrap_or(kind.default_profile()),
        schemes,
        levels,
        probe: entries.parse_with("probe", parse_probe)?.unwrap_or(DEFAULT_PROBE),
        out: entries.get("out").map(|(_, v)| PathBuf::from(v)),
    })
}
