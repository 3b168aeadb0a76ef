//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Angles accept radians or
//! rational multiples of pi (`pi`, `pi/3`, `2*pi/5`, `-pi/4`, `3pi/4`).
//! Vectors are two comma-separated numbers, optionally in parentheses.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;
use wedgeflow::{Drift, Vec2, WedgeGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("give the drift either as `mu` or as `mu_norm` and `mu_angle`")]
    DriftForm,
}

/// An angle kept in the form it was written, so rendering is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// `p * pi / q` with `q > 0`.
    PiRational {
        p: i64,
        q: i64,
    },
    Radians(f64),
}

impl Angle {
    pub fn radians(&self) -> f64 {
        match *self {
            Angle::PiRational { p, q } => p as f64 * PI / q as f64,
            Angle::Radians(r) => r,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::PiRational { p, q } => {
                match p {
                    1 => write!(f, "pi")?,
                    -1 => write!(f, "-pi")?,
                    _ => write!(f, "{p}*pi")?,
                }
                if q != 1 {
                    write!(f, "/{q}")?;
                }
                Ok(())
            }
            Angle::Radians(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(at) = compact.find("pi") else {
            return compact
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Angle::Radians)
                .ok_or_else(|| "not a number or multiple of pi".to_string());
        };
        let (head, tail) = (&compact[..at], &compact[at + 2..]);
        let head = head.strip_suffix('*').unwrap_or(head);
        let p: i64 = match head {
            "" | "+" => 1,
            "-" => -1,
            h => h.parse().map_err(|_| format!("bad numerator `{h}`"))?,
        };
        let q: i64 = match tail {
            "" => 1,
            t => {
                let t = t
                    .strip_prefix('/')
                    .ok_or_else(|| format!("unexpected `{t}` after pi"))?;
                t.parse().map_err(|_| format!("bad denominator `{t}`"))?
            }
        };
        if q <= 0 {
            return Err("denominator must be positive".into());
        }
        Ok(Angle::PiRational { p, q })
    }
}

/// How the drift was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSpec {
    Cartesian(Vec2),
    Polar { norm: f64, angle: Angle },
}

impl MuSpec {
    pub fn drift(&self) -> wedgeflow::Result<Drift> {
        match self {
            MuSpec::Cartesian(v) => Drift::new(*v),
            MuSpec::Polar { norm, angle } => Drift::from_polar(*norm, angle.radians()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Push {
    Mirror,
    Project,
}

impl fmt::Display for Push {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Push::Mirror => "mirror",
            Push::Project => "project",
        })
    }
}

impl FromStr for Push {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mirror" => Ok(Push::Mirror),
            "project" => Ok(Push::Project),
            _ => Err("expected `mirror` or `project`".into()),
        }
    }
}

/// Everything a run needs. Only the geometry and drift are required; the
/// rest have defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub xi: Angle,
    pub delta: Angle,
    pub epsilon: Angle,
    pub mu: MuSpec,
    pub seed: u64,

    pub quad_nodes: usize,
    pub grid_n_theta: usize,
    pub grid_n_r: usize,
    /// `None`: the radius beyond which the density has mass `1e-4`.
    pub grid_r_max: Option<f64>,

    pub interior_theta: usize,
    pub interior_r: usize,
    pub face_points: usize,
    pub lambdas: usize,
    /// Test hook: scale coefficient `index` by `1 + rel` before validating.
    pub perturb: Option<(usize, f64)>,

    pub dt: f64,
    pub steps: u64,
    pub paths: u64,
    pub burn_in: u64,
    pub start: Vec2,
    pub push: Push,
    pub hist_n_theta: usize,
    pub hist_n_r: usize,
    /// `None`: chosen from the closed form, or 10 when there is none.
    pub hist_r_max: Option<f64>,

    /// Point `x` for the survival and duality commands.
    pub x: Vec2,
    pub horizon: f64,
    pub survival_dt: f64,
    pub survival_paths: u64,
}

impl RunConfig {
    pub fn new(xi: Angle, delta: Angle, epsilon: Angle, mu: MuSpec) -> Self {
        Self {
            xi,
            delta,
            epsilon,
            mu,
            seed: 1,
            quad_nodes: 256,
            grid_n_theta: 50,
            grid_n_r: 50,
            grid_r_max: None,
            interior_theta: 40,
            interior_r: 25,
            face_points: 200,
            lambdas: 20,
            perturb: None,
            dt: 1e-3,
            steps: 1_000_000,
            paths: 40,
            burn_in: 10_000,
            start: Vec2::new(0.5, 0.25),
            push: Push::Mirror,
            hist_n_theta: 64,
            hist_n_r: 128,
            hist_r_max: None,
            x: Vec2::new(1.0, 1.0),
            horizon: 50.0,
            survival_dt: 1e-2,
            survival_paths: 20_000,
        }
    }

    pub fn geometry(&self) -> wedgeflow::Result<WedgeGeometry> {
        WedgeGeometry::new(
            self.xi.radians(),
            self.delta.radians(),
            self.epsilon.radians(),
        )
    }

    pub fn drift(&self) -> wedgeflow::Result<Drift> {
        self.mu.drift()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: i + 1, key });
            }
        }
        let mut kv = Fields(map);

        let xi = kv.required("xi")?;
        let delta = kv.required("delta")?;
        let epsilon = kv.required("epsilon")?;
        let mu = match (
            kv.take::<VecLit>("mu")?,
            kv.take::<f64>("mu_norm")?,
            kv.take::<Angle>("mu_angle")?,
        ) {
            (Some(v), None, None) => MuSpec::Cartesian(v.0),
            (None, Some(norm), Some(angle)) => MuSpec::Polar { norm, angle },
            _ => return Err(ConfigError::DriftForm),
        };
        let mut c = RunConfig::new(xi, delta, epsilon, mu);

        macro_rules! opt {
            ($($field:ident),*) => {
                $( if let Some(v) = kv.take(stringify!($field))? { c.$field = v; } )*
            };
        }
        opt!(
            seed,
            quad_nodes,
            grid_n_theta,
            grid_n_r,
            interior_theta,
            interior_r,
            face_points,
            lambdas,
            dt,
            steps,
            paths,
            burn_in,
            push,
            hist_n_theta,
            hist_n_r,
            horizon,
            survival_dt,
            survival_paths
        );
        c.grid_r_max = kv.take("grid_r_max")?;
        c.hist_r_max = kv.take("hist_r_max")?;
        if let Some(VecLit(v)) = kv.take("start")? {
            c.start = v;
        }
        if let Some(VecLit(v)) = kv.take("x")? {
            c.x = v;
        }
        c.perturb = match (
            kv.take::<usize>("perturb_index")?,
            kv.take::<f64>("perturb_rel")?,
        ) {
            (Some(i), Some(r)) => Some((i, r)),
            (None, None) => None,
            (Some(_), None) => return Err(ConfigError::Missing("perturb_rel")),
            (None, Some(_)) => return Err(ConfigError::Missing("perturb_index")),
        };
        if let Some(key) = kv.0.keys().next() {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        Ok(c)
    }

    /// Every key, one per line, in a form [`RunConfig::parse`] reads back
    /// to an equal value.
    pub fn render(&self) -> String {
        let mut lines = vec![
            format!("xi = {}", self.xi),
            format!("delta = {}", self.delta),
            format!("epsilon = {}", self.epsilon),
        ];
        match self.mu {
            MuSpec::Cartesian(v) => lines.push(format!("mu = {}", VecLit(v))),
            MuSpec::Polar { norm, angle } => {
                lines.push(format!("mu_norm = {norm}"));
                lines.push(format!("mu_angle = {angle}"));
            }
        }
        macro_rules! put {
            ($($field:ident),*) => {
                $( lines.push(format!("{} = {}", stringify!($field), self.$field)); )*
            };
        }
        put!(
            seed,
            quad_nodes,
            grid_n_theta,
            grid_n_r,
            interior_theta,
            interior_r,
            face_points,
            lambdas,
            dt,
            steps,
            paths,
            burn_in,
            push,
            hist_n_theta,
            hist_n_r,
            horizon,
            survival_dt,
            survival_paths
        );
        if let Some(r) = self.grid_r_max {
            lines.push(format!("grid_r_max = {r}"));
        }
        if let Some(r) = self.hist_r_max {
            lines.push(format!("hist_r_max = {r}"));
        }
        lines.push(format!("start = {}", VecLit(self.start)));
        lines.push(format!("x = {}", VecLit(self.x)));
        if let Some((i, r)) = self.perturb {
            lines.push(format!("perturb_index = {i}"));
            lines.push(format!("perturb_rel = {r}"));
        }
        lines.join("\n") + "\n"
    }
}

struct VecLit(Vec2);

impl fmt::Display for VecLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.0.x, self.0.y)
    }
}

impl FromStr for VecLit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [a, b] = parts[..] else {
            return Err("expected two comma-separated numbers".into());
        };
        let a: f64 = a.parse().map_err(|_| format!("bad number `{a}`"))?;
        let b: f64 = b.parse().map_err(|_| format!("bad number `{b}`"))?;
        if !(a.is_finite() && b.is_finite()) {
            return Err("components must be finite".into());
        }
        Ok(VecLit(Vec2::new(a, b)))
    }
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(value) = self.0.remove(key) else {
            return Ok(None);
        };
        value
            .parse()
            .map(Some)
            .map_err(|e: T::Err| ConfigError::Value {
                key: key.to_string(),
                value,
                reason: e.to_string(),
            })
    }

    fn required<T: FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.take(key)?.ok_or(ConfigError::Missing(key))
    }
}
