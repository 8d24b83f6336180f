//! Run configuration: line-oriented `key = value` with `[section]` headers,
//! `#` comments, and comma lists.
//!
//! ```text
//! [map]
//! matrix = 5, 0, 0, 5
//! mode = auto
//! [shear]
//! t = 4
//! r = 4
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value that is either computed (`auto`) or given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: Copy> Auto<T> {
    pub fn or(self, v: T) -> T {
        match self {
            Auto::Auto => v,
            Auto::Value(x) => x,
        }
    }

    pub fn value(self) -> Option<T> {
        match self {
            Auto::Auto => None,
            Auto::Value(x) => Some(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Homothety,
    General,
}

/// Shear profile: the built-in one for the divisor, or explicit
/// coefficients of `c0 + Σ cos_n cos(2πnu) + sin_n sin(2πnu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileSpec {
    Builtin,
    Coefficients {
        constant: f64,
        /// `(n, cos, sin)` triples.
        harmonics: Vec<(u32, f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub matrix: [i64; 4],
    pub mode: Mode,
    pub profile: ProfileSpec,
    pub a: Auto<f64>,
    pub b: Auto<f64>,
    /// Half size of the critical intervals (homothety).
    pub delta: Auto<f64>,
    /// Critical size (general case).
    pub l: Auto<f64>,
    pub centers: Auto<(f64, f64)>,
    pub permissive: bool,
    pub alpha: Auto<f64>,
    pub t: f64,
    pub r: f64,
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub depth: Auto<usize>,
    /// Points along `x1`, points along `x2`, directions.
    pub grid: (usize, usize, usize),
    pub seed: u64,
    pub samples: usize,
    pub lyapunov_steps: usize,
    pub lyapunov_seeds: usize,
    pub burn_in: usize,
    pub report: Option<String>,
    pub csv: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            matrix: [5, 0, 0, 5],
            mode: Mode::Auto,
            profile: ProfileSpec::Builtin,
            a: Auto::Auto,
            b: Auto::Auto,
            delta: Auto::Auto,
            l: Auto::Auto,
            centers: Auto::Auto,
            permissive: false,
            alpha: Auto::Auto,
            t: 4.0,
            r: 4.0,
            t_grid: (1..=10).map(f64::from).collect(),
            r_grid: Vec::new(),
            depth: Auto::Auto,
            grid: (32, 32, 16),
            seed: 0,
            samples: 1000,
            lyapunov_steps: 100_000,
            lyapunov_seeds: 4,
            burn_in: 1000,
            report: None,
            csv: None,
        }
    }
}

fn err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(path: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| err(path, format!("not a number: `{v}`")))?;
    if !x.is_finite() {
        return Err(err(path, "must be finite"));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(path: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| err(path, format!("not a non-negative integer: `{v}`")))
}

fn list(v: &str) -> Vec<&str> {
    if v.trim().is_empty() {
        return Vec::new();
    }
    v.split(',').map(str::trim).collect()
}

fn auto_f64(path: &str, v: &str) -> Result<Auto<f64>> {
    if v.trim() == "auto" {
        Ok(Auto::Auto)
    } else {
        parse_f64(path, v).map(Auto::Value)
    }
}

fn positive(path: &str, x: Auto<f64>) -> Result<()> {
    match x {
        Auto::Value(v) if v <= 0.0 => Err(err(path, format!("must be positive, got {v}"))),
        _ => Ok(()),
    }
}

/// `n:cos:sin` triples separated by commas.
fn parse_harmonics(path: &str, v: &str) -> Result<Vec<(u32, f64, f64)>> {
    list(v)
        .into_iter()
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            if parts.len() != 3 {
                return Err(err(path, format!("expected n:cos:sin, got `{item}`")));
            }
            let n: u32 = parse_int(path, parts[0])?;
            if n == 0 {
                return Err(err(path, "harmonic index must be >= 1"));
            }
            Ok((n, parse_f64(path, parts[1])?, parse_f64(path, parts[2])?))
        })
        .collect()
}

const KEYS: &[&str] = &[
    "map.matrix",
    "map.mode",
    "profile.kind",
    "profile.constant",
    "profile.harmonics",
    "profile.a",
    "profile.b",
    "partition.delta",
    "partition.l",
    "partition.centers",
    "partition.permissive",
    "cone.alpha",
    "shear.t",
    "shear.r",
    "shear.t_grid",
    "shear.r_grid",
    "lab.depth",
    "lab.grid",
    "lab.seed",
    "lab.samples",
    "lab.lyapunov_steps",
    "lab.lyapunov_seeds",
    "lab.burn_in",
    "output.report",
    "output.csv",
];

impl RunConfig {
    /// Parse a config file; unknown keys and sections are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                err(
                    &format!("line {}", no + 1),
                    format!("expected key = value: `{line}`"),
                )
            })?;
            let path = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if !KEYS.contains(&path.as_str()) {
                return Err(err(&path, "unknown key"));
            }
            if entries.insert(path.clone(), v.trim().to_string()).is_some() {
                return Err(err(&path, "duplicate key"));
            }
        }
        let mut c = RunConfig::default();
        let get = |k: &str| entries.get(k).map(String::as_str);

        if let Some(v) = get("map.matrix") {
            let xs = list(v);
            if xs.len() != 4 {
                return Err(err(
                    "map.matrix",
                    "expected four integers e11, e12, e21, e22",
                ));
            }
            for (i, x) in xs.iter().enumerate() {
                c.matrix[i] = x
                    .parse()
                    .map_err(|_| err("map.matrix", format!("not an integer: `{x}`")))?;
            }
        }
        if let Some(v) = get("map.mode") {
            c.mode = match v {
                "auto" => Mode::Auto,
                "homothety" => Mode::Homothety,
                "general" => Mode::General,
                _ => return Err(err("map.mode", "expected auto, homothety or general")),
            };
        }
        let kind = get("profile.kind").unwrap_or("builtin");
        c.profile = match kind {
            "builtin" => {
                if get("profile.constant").is_some() || get("profile.harmonics").is_some() {
                    return Err(err(
                        "profile.kind",
                        "coefficients given with kind = builtin",
                    ));
                }
                ProfileSpec::Builtin
            }
            "coefficients" => ProfileSpec::Coefficients {
                constant: get("profile.constant")
                    .map(|v| parse_f64("profile.constant", v))
                    .transpose()?
                    .unwrap_or(0.0),
                harmonics: parse_harmonics(
                    "profile.harmonics",
                    get("profile.harmonics")
                        .ok_or_else(|| err("profile.harmonics", "required for coefficients"))?,
                )?,
            },
            _ => return Err(err("profile.kind", "expected builtin or coefficients")),
        };
        for (key, slot) in [
            ("profile.a", &mut c.a),
            ("profile.b", &mut c.b),
            ("partition.delta", &mut c.delta),
            ("partition.l", &mut c.l),
            ("cone.alpha", &mut c.alpha),
        ] {
            if let Some(v) = get(key) {
                *slot = auto_f64(key, v)?;
                positive(key, *slot)?;
            }
        }
        if let Some(v) = get("partition.centers") {
            c.centers = if v == "auto" {
                Auto::Auto
            } else {
                let xs = list(v);
                if xs.len() != 2 {
                    return Err(err("partition.centers", "expected two numbers or auto"));
                }
                Auto::Value((
                    parse_f64("partition.centers", xs[0])?,
                    parse_f64("partition.centers", xs[1])?,
                ))
            };
        }
        if let Some(v) = get("partition.permissive") {
            c.permissive = match v {
                "true" => true,
                "false" => false,
                _ => return Err(err("partition.permissive", "expected true or false")),
            };
        }
        for (key, slot) in [("shear.t", &mut c.t), ("shear.r", &mut c.r)] {
            if let Some(v) = get(key) {
                *slot = parse_f64(key, v)?;
                if *slot < 0.0 {
                    return Err(err(key, "must be >= 0"));
                }
            }
        }
        for (key, slot) in [
            ("shear.t_grid", &mut c.t_grid),
            ("shear.r_grid", &mut c.r_grid),
        ] {
            if let Some(v) = get(key) {
                *slot = list(v)
                    .into_iter()
                    .map(|x| parse_f64(key, x))
                    .collect::<Result<_>>()?;
                if slot.iter().any(|x| *x < 0.0) {
                    return Err(err(key, "entries must be >= 0"));
                }
            }
        }
        if let Some(v) = get("lab.depth") {
            c.depth = if v == "auto" {
                Auto::Auto
            } else {
                let n: usize = parse_int("lab.depth", v)?;
                if n == 0 {
                    return Err(err("lab.depth", "must be >= 1"));
                }
                Auto::Value(n)
            };
        }
        if let Some(v) = get("lab.grid") {
            c.grid = parse_grid(v).map_err(|m| err("lab.grid", m))?;
        }
        if let Some(v) = get("lab.seed") {
            c.seed = parse_int("lab.seed", v)?;
        }
        for (key, slot) in [
            ("lab.samples", &mut c.samples),
            ("lab.lyapunov_steps", &mut c.lyapunov_steps),
            ("lab.lyapunov_seeds", &mut c.lyapunov_seeds),
            ("lab.burn_in", &mut c.burn_in),
        ] {
            if let Some(v) = get(key) {
                *slot = parse_int(key, v)?;
            }
        }
        for key in ["lab.samples", "lab.lyapunov_steps", "lab.lyapunov_seeds"] {
            let v = match key {
                "lab.samples" => c.samples,
                "lab.lyapunov_steps" => c.lyapunov_steps,
                _ => c.lyapunov_seeds,
            };
            if v == 0 {
                return Err(err(key, "must be >= 1"));
            }
        }
        c.report = get("output.report").map(str::to_string);
        c.csv = get("output.csv").map(str::to_string);
        Ok(c)
    }

    /// Serialize every field; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        fn af(x: Auto<f64>) -> String {
            match x {
                Auto::Auto => "auto".into(),
                Auto::Value(v) => format!("{v:?}"),
            }
        }
        fn fl(xs: &[f64]) -> String {
            xs.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        }
        let mut s = String::new();
        let m = self.matrix;
        let _ = writeln!(s, "[map]\nmatrix = {}, {}, {}, {}", m[0], m[1], m[2], m[3]);
        let mode = match self.mode {
            Mode::Auto => "auto",
            Mode::Homothety => "homothety",
            Mode::General => "general",
        };
        let _ = writeln!(s, "mode = {mode}\n\n[profile]");
        match &self.profile {
            ProfileSpec::Builtin => {
                let _ = writeln!(s, "kind = builtin");
            }
            ProfileSpec::Coefficients {
                constant,
                harmonics,
            } => {
                let hs: Vec<String> = harmonics
                    .iter()
                    .map(|(n, c, si)| format!("{n}:{c:?}:{si:?}"))
                    .collect();
                let _ = writeln!(
                    s,
                    "kind = coefficients\nconstant = {constant:?}\nharmonics = {}",
                    hs.join(", ")
                );
            }
        }
        let _ = writeln!(s, "a = {}\nb = {}\n", af(self.a), af(self.b));
        let centers = match self.centers {
            Auto::Auto => "auto".to_string(),
            Auto::Value((p, q)) => format!("{p:?}, {q:?}"),
        };
        let _ = writeln!(
            s,
            "[partition]\ndelta = {}\nl = {}\ncenters = {centers}\npermissive = {}\n",
            af(self.delta),
            af(self.l),
            self.permissive
        );
        let _ = writeln!(s, "[cone]\nalpha = {}\n", af(self.alpha));
        let _ = writeln!(
            s,
            "[shear]\nt = {:?}\nr = {:?}\nt_grid = {}\nr_grid = {}\n",
            self.t,
            self.r,
            fl(&self.t_grid),
            fl(&self.r_grid)
        );
        let depth = match self.depth {
            Auto::Auto => "auto".to_string(),
            Auto::Value(n) => n.to_string(),
        };
        let (w, h, d) = self.grid;
        let _ = writeln!(
            s,
            "[lab]\ndepth = {depth}\ngrid = {w}, {h}, {d}\nseed = {}\nsamples = {}\nlyapunov_steps = {}\nlyapunov_seeds = {}\nburn_in = {}",
            self.seed, self.samples, self.lyapunov_steps, self.lyapunov_seeds, self.burn_in
        );
        if self.report.is_some() || self.csv.is_some() {
            let _ = writeln!(s, "\n[output]");
            if let Some(p) = &self.report {
                let _ = writeln!(s, "report = {p}");
            }
            if let Some(p) = &self.csv {
                let _ = writeln!(s, "csv = {p}");
            }
        }
        s
    }
}

/// `W x H x D` or `W, H, D`; each at least 1, with `D >= 4` for the cone edges.
pub fn parse_grid(v: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = v.split(['x', ',']).map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected WxHxD, got `{v}`"));
    }
    let n: Vec<usize> = parts
        .iter()
        .map(|p| {
            p.parse()
                .map_err(|_| format!("not a positive integer: `{p}`"))
        })
        .collect::<std::result::Result<_, _>>()?;
    if n[0] == 0 || n[1] == 0 || n[2] < 4 {
        return Err(format!("grid {v} needs W, H >= 1 and D >= 4"));
    }
    Ok((n[0], n[1], n[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(RunConfig::parse("").unwrap(), c);
    }

    #[test]
    fn full_round_trip() {
        let c = RunConfig {
            matrix: [4, 2, 0, 2],
            mode: Mode::General,
            profile: ProfileSpec::Coefficients {
                constant: 0.25,
                harmonics: vec![(1, 0.0, 1.0), (3, -0.1, 0.2)],
            },
            a: Auto::Value(0.1),
            centers: Auto::Value((0.2, 0.7)),
            permissive: true,
            depth: Auto::Value(2),
            report: Some("out.json".into()),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_paths() {
        let e = RunConfig::parse("[shear]\nt = abc").unwrap_err();
        assert!(
            matches!(e, Error::Config { ref path, .. } if path == "shear.t"),
            "{e}"
        );
        let e = RunConfig::parse("[map]\nmatrix = 1, 2").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "map.matrix"));
        let e = RunConfig::parse("[lab]\ncolour = red").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "lab.colour"));
        assert!(RunConfig::parse("[cone]\nalpha = -1").is_err());
        assert!(RunConfig::parse("[lab]\ngrid = 4x4x2").is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("32x32x16").unwrap(), (32, 32, 16));
        assert_eq!(parse_grid("8, 8, 6").unwrap(), (8, 8, 6));
    }
}
