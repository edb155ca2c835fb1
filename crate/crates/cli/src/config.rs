use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use oscint_core::lab::cutoff::Profile;
use oscint_core::lab::fmt_f64;
use oscint_core::lab::operator::DEFAULT_GRID_BUDGET;

/// Flags shared by every command; each may also come from the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub phase: Option<String>,
    #[arg(long)]
    pub vertex: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long = "re-z", allow_hyphen_values = true)]
    pub re_z: Option<f64>,
    #[arg(long)]
    pub damped: bool,
    #[arg(long = "modified-damping")]
    pub modified_damping: bool,
    #[arg(long = "lambda-min")]
    pub lambda_min: Option<f64>,
    #[arg(long = "lambda-max")]
    pub lambda_max: Option<f64>,
    #[arg(long = "lambda-count")]
    pub lambda_count: Option<usize>,
    #[arg(long = "grid-budget")]
    pub grid_budget: Option<usize>,
    #[arg(long = "cutoff-width")]
    pub cutoff_width: Option<f64>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub suite: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quick,
    Full,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub phase: Option<String>,
    pub vertex: Option<usize>,
    pub p: Option<f64>,
    pub re_z: Option<f64>,
    pub damped: bool,
    pub modified_damping: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub grid_budget: usize,
    pub cutoff_width: f64,
    pub profile: Profile,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub suite: Suite,
}

const KEYS: &[&str] = &[
    "phase",
    "vertex",
    "p",
    "re-z",
    "damped",
    "modified-damping",
    "lambda-min",
    "lambda-max",
    "lambda-count",
    "grid-budget",
    "cutoff-width",
    "profile",
    "seed",
    "out-dir",
    "suite",
];

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(format!("line {}: unknown key `{k}`", i + 1));
        }
        map.insert(k, v.trim().to_owned());
    }
    Ok(map)
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| format!("invalid value `{v}` for `{key}`")))
        .transpose()
}

fn pick_bool(flag: bool, file: &BTreeMap<String, String>, key: &str) -> Result<bool, String> {
    Ok(flag || pick::<bool>(None, file, key)?.unwrap_or(false))
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, String> {
        let file = match &flags.config {
            Some(path) => parse_config(&read(path)?)?,
            None => BTreeMap::new(),
        };
        let profile = match pick(flags.profile.clone(), &file, "profile")? {
            Some(s) => s.parse::<Profile>()?,
            None => Profile::SmoothBump,
        };
        let suite = match pick(flags.suite.clone(), &file, "suite")?.as_deref() {
            None | Some("quick") => Suite::Quick,
            Some("full") => Suite::Full,
            Some(other) => return Err(format!("unknown suite `{other}` (expected quick or full)")),
        };
        let cfg = RunConfig {
            phase: pick(flags.phase.clone(), &file, "phase")?,
            vertex: pick(flags.vertex, &file, "vertex")?,
            p: pick(flags.p, &file, "p")?,
            re_z: pick(flags.re_z, &file, "re-z")?,
            damped: pick_bool(flags.damped, &file, "damped")?,
            modified_damping: pick_bool(flags.modified_damping, &file, "modified-damping")?,
            lambda_min: pick(flags.lambda_min, &file, "lambda-min")?.unwrap_or(30.0),
            lambda_max: pick(flags.lambda_max, &file, "lambda-max")?.unwrap_or(3000.0),
            lambda_count: pick(flags.lambda_count, &file, "lambda-count")?.unwrap_or(12),
            grid_budget: pick(flags.grid_budget, &file, "grid-budget")?.unwrap_or(DEFAULT_GRID_BUDGET),
            cutoff_width: pick(flags.cutoff_width, &file, "cutoff-width")?.unwrap_or(0.5),
            profile,
            seed: pick(flags.seed, &file, "seed")?.unwrap_or(0),
            out_dir: pick(flags.out_dir.clone(), &file, "out-dir")?,
            suite,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min && self.lambda_max.is_finite()) {
            return Err("need 0 < lambda-min ≤ lambda-max".into());
        }
        if self.lambda_count == 0 {
            return Err("lambda-count must be positive".into());
        }
        if !(self.cutoff_width > 0.0 && self.cutoff_width.is_finite()) {
            return Err("cutoff-width must be positive".into());
        }
        if let Some(p) = self.p {
            if !(p > 1.0 && p.is_finite()) {
                return Err(format!("p must lie in (1, ∞), got {p}"));
            }
        }
        if self.damped && self.modified_damping {
            return Err("--damped and --modified-damping are exclusive".into());
        }
        Ok(())
    }

    /// The resolved configuration in the config-file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(p) = &self.phase {
            put("phase", p.clone());
        }
        if let Some(v) = self.vertex {
            put("vertex", v.to_string());
        }
        if let Some(p) = self.p {
            put("p", fmt_f64(p));
        }
        if let Some(z) = self.re_z {
            put("re-z", fmt_f64(z));
        }
        put("damped", self.damped.to_string());
        put("modified-damping", self.modified_damping.to_string());
        put("lambda-min", fmt_f64(self.lambda_min));
        put("lambda-max", fmt_f64(self.lambda_max));
        put("lambda-count", self.lambda_count.to_string());
        put("grid-budget", self.grid_budget.to_string());
        put("cutoff-width", fmt_f64(self.cutoff_width));
        put(
            "profile",
            match self.profile {
                Profile::SmoothBump => "smooth-bump",
                Profile::Box => "box",
            }
            .into(),
        );
        put("seed", self.seed.to_string());
        put(
            "suite",
            match self.suite {
                Suite::Quick => "quick",
                Suite::Full => "full",
            }
            .into(),
        );
        out
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let m = parse_config("# run\nphase = x*y  # hyperbolic\nlambda_min=10\n\n").unwrap();
        assert_eq!(m["phase"], "x*y");
        assert_eq!(m["lambda-min"], "10");
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("phase").is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let flags = Flags {
            phase: Some("x^2*y".into()),
            p: Some(1.5),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        let back = parse_config(&cfg.to_text()).unwrap();
        let flags2 = Flags::default();
        let mut resolved = RunConfig::resolve(&flags2).unwrap();
        resolved.phase = back.get("phase").cloned();
        resolved.p = back.get("p").map(|v| v.parse().unwrap());
        resolved.seed = back["seed"].parse().unwrap();
        assert_eq!(resolved, cfg);
    }
}
