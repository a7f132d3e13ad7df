//! Run configuration: a flat `key = value` file with command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use thinspec::Error;

const KEYS: &[&str] = &[
    "model", "a", "lengths", "h_plus", "h_minus", "path", "theta", "beta", "eps", "resolution", "count",
    "tol", "out", "jobs", "levels", "n", "m", "group", "numeric", "export_vectors",
];

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidInput(msg.into()).into()
}

/// Raw settings, keyed by normalized name (`-` becomes `_`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected key = value, got {raw:?}", no + 1)))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid(format!("unknown config key {key:?}")));
        }
        self.0.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Later settings win.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

/// Flags shared by `expand`, `sweep` and `spectrum`. Every flag overrides the
/// config-file key of the same name.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Flat key = value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ellipsoid | lemniscate | rectangle | slab | sampled | jet
    #[arg(long)]
    pub model: Option<String>,
    /// Ellipsoid semi-axes, thin axis last (e.g. 1,1)
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Slab side lengths
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h_plus: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h_minus: Option<String>,
    /// Sampled-width CSV (columns x1..x_{d-1}, h_plus, h_minus)
    #[arg(long)]
    pub path: Option<String>,
    /// Oscillator frequencies of a synthetic jet (model = jet)
    #[arg(long)]
    pub theta: Option<String>,
    /// Cubic tensor of a synthetic jet, flattened n^3 entries
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Comma-separated eps values
    #[arg(long)]
    pub eps: Option<String>,
    /// Grid intervals per base axis (power of two, 32..=1024)
    #[arg(long)]
    pub resolution: Option<String>,
    /// Eigenvalues per direct solve
    #[arg(long)]
    pub count: Option<String>,
    /// Eigen-solver residual tolerance
    #[arg(long)]
    pub tol: Option<String>,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: Option<String>,
    /// Concurrent sweep rows
    #[arg(long)]
    pub jobs: Option<String>,
    /// Oscillator levels to list
    #[arg(long)]
    pub levels: Option<String>,
    /// Transverse mode number
    #[arg(long)]
    pub n: Option<String>,
    /// Oscillator multi-index of the branch (e.g. 0,1)
    #[arg(long)]
    pub m: Option<String>,
    /// Degenerate group whose splitting matrix is reported
    #[arg(long)]
    pub group: Option<String>,
    /// Also solve the oscillator numerically
    #[arg(long)]
    pub numeric: bool,
    /// Write finest-grid eigenvectors next to the sweep report
    #[arg(long)]
    pub export_vectors: bool,
}

impl ConfigArgs {
    /// Config file (if any) overlaid with the explicit flags.
    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("model", &self.model),
            ("a", &self.a),
            ("lengths", &self.lengths),
            ("h_plus", &self.h_plus),
            ("h_minus", &self.h_minus),
            ("path", &self.path),
            ("theta", &self.theta),
            ("beta", &self.beta),
            ("eps", &self.eps),
            ("resolution", &self.resolution),
            ("count", &self.count),
            ("tol", &self.tol),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("levels", &self.levels),
            ("n", &self.n),
            ("m", &self.m),
            ("group", &self.group),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, v)?;
            }
        }
        if self.numeric {
            flags.set("numeric", "true")?;
        }
        if self.export_vectors {
            flags.set("export_vectors", "true")?;
        }
        s.merge(&flags);
        Ok(s)
    }
}

/// Geometry or jet selected by the configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Ellipsoid { axes: Vec<f64> },
    Lemniscate,
    Slab { lengths: Vec<f64>, h_plus: f64, h_minus: f64 },
    Sampled { path: PathBuf },
    /// A jet given directly by its frequencies (`H0 = 1`, mode 1) and cubic tensor.
    Jet { theta: Vec<f64>, beta: Option<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    /// Strictly positive, sorted descending.
    pub eps: Vec<f64>,
    pub resolution: usize,
    pub count: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub levels: usize,
    pub mode: usize,
    pub m: Option<Vec<usize>>,
    pub group: Option<usize>,
    pub numeric: bool,
    pub export_vectors: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            eps: vec![0.2, 0.1, 0.05],
            resolution: 64,
            count: 1,
            tol: 1e-9,
            out: None,
            jobs: 1,
            levels: 4,
            mode: 1,
            m: None,
            group: None,
            numeric: false,
            export_vectors: false,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| invalid(format!("{key}: cannot parse {p:?}"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| invalid(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(invalid(format!("{key}: expected true or false, got {other:?}"))),
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(name) = s.get("model") {
            c.model = Some(model_spec(name, s)?);
        }
        if let Some(v) = s.get("eps") {
            c.eps = list("eps", v)?;
        }
        if c.eps.is_empty() || c.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid(format!("eps values must be positive, got {:?}", c.eps)));
        }
        c.eps.sort_by(|a, b| b.total_cmp(a));
        if c.eps.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("eps values must be distinct"));
        }
        if let Some(v) = s.get("resolution") {
            c.resolution = scalar("resolution", v)?;
        }
        if !(c.resolution.is_power_of_two() && (32..=1024).contains(&c.resolution)) {
            return Err(invalid(format!(
                "resolution must be a power of two in 32..=1024, got {}",
                c.resolution
            )));
        }
        if let Some(v) = s.get("count") {
            c.count = scalar("count", v)?;
        }
        if let Some(v) = s.get("tol") {
            c.tol = scalar("tol", v)?;
        }
        if !(c.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        c.out = s.get("out").map(PathBuf::from);
        if let Some(v) = s.get("jobs") {
            c.jobs = scalar("jobs", v)?;
        }
        if let Some(v) = s.get("levels") {
            c.levels = scalar("levels", v)?;
        }
        if let Some(v) = s.get("n") {
            c.mode = scalar("n", v)?;
        }
        if let Some(v) = s.get("m") {
            c.m = Some(list("m", v)?);
        }
        if let Some(v) = s.get("group") {
            c.group = Some(scalar("group", v)?);
        }
        if let Some(v) = s.get("numeric") {
            c.numeric = flag("numeric", v)?;
        }
        if let Some(v) = s.get("export_vectors") {
            c.export_vectors = flag("export_vectors", v)?;
        }
        if c.count == 0 || c.jobs == 0 || c.levels == 0 || c.mode == 0 {
            return Err(invalid("count, jobs, levels and n must be at least 1"));
        }
        Ok(c)
    }

    pub fn require_model(&self) -> Result<&ModelSpec> {
        self.model.as_ref().ok_or_else(|| invalid("no model given (use --model)"))
    }
}

fn model_spec(name: &str, s: &Settings) -> Result<ModelSpec> {
    match name.trim() {
        "ellipsoid" | "ellipse" => {
            let axes = list("a", s.get("a").unwrap_or("1,1"))?;
            Ok(ModelSpec::Ellipsoid { axes })
        }
        "lemniscate" => Ok(ModelSpec::Lemniscate),
        "rectangle" | "slab" => {
            let lengths = list("lengths", s.get("lengths").unwrap_or("1"))?;
            let h_plus = scalar("h_plus", s.get("h_plus").unwrap_or("0.5"))?;
            let h_minus = scalar("h_minus", s.get("h_minus").unwrap_or("0.5"))?;
            Ok(ModelSpec::Slab { lengths, h_plus, h_minus })
        }
        "sampled" => {
            let path = s.get("path").ok_or_else(|| invalid("model sampled needs path"))?;
            Ok(ModelSpec::Sampled { path: PathBuf::from(path) })
        }
        "jet" => {
            let theta = list("theta", s.get("theta").ok_or_else(|| invalid("model jet needs theta"))?)?;
            let beta = s.get("beta").map(|b| list("beta", b)).transpose()?;
            Ok(ModelSpec::Jet { theta, beta })
        }
        other => Err(invalid(format!("unknown model {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("model = ellipsoid\n# comment\na = 1, 2\neps = 0.1,0.4\n").unwrap();
        let mut f = Settings::default();
        f.set("a", "3,1").unwrap();
        s.merge(&f);
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!(c.model, Some(ModelSpec::Ellipsoid { axes: vec![3.0, 1.0] }));
        assert_eq!(c.eps, vec![0.4, 0.1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::parse("model ellipsoid").is_err());
        assert!(Settings::parse("colour = red").is_err());
        let s = Settings::parse("resolution = 48").unwrap();
        assert!(RunConfig::from_settings(&s).is_err());
        let s = Settings::parse("eps = 0.1, -0.2").unwrap();
        assert!(RunConfig::from_settings(&s).is_err());
    }
}
