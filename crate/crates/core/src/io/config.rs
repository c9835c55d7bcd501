//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment. Several pairs may share a line
//! when separated by commas (`n = 45, T = 2`); a comma-separated segment
//! without `=` continues the previous value, so lists read naturally
//! (`sweep_n = 8, 16, 24`). Keys are case-insensitive.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::{FrameKind, TimeFrame};
use crate::error::{Error, Result};
use crate::experiments::{BoundConstants, HorizonMode, InitialState, ProblemTemplate, SweepPlan};
use crate::network::{ControlLayout, Flavor, LayoutSpec, NonlinearitySpec, ScalarMap, Scaling};
use crate::synthesis::{MinimizeOptions, ObjectiveSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub flavor: Flavor,
    pub layout: LayoutSpec,
    /// Built-in scalar map name.
    pub nonlinearity: String,
    pub scaling: Scaling,
    /// Consensus value `ȳ` with `G(ȳ) = 0`.
    pub shift: f64,
    /// Supplied `‖g‖_∞`; estimated from the data when absent.
    pub g_inf: Option<f64>,
    pub frame: FrameKind,
    /// Rescaled horizon.
    pub horizon: f64,
    pub n_steps: Option<usize>,
    pub beta: f64,
    pub initial: InitialState,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub memory: usize,
    pub sweep_n: Vec<usize>,
    pub sweep_regimes: Vec<Scaling>,
    pub horizon_mode: HorizonMode,
    pub sweep_flavor: Flavor,
    pub sweep_layout: LayoutSpec,
    pub kalman_n: Vec<usize>,
    pub c0: f64,
    pub c1: f64,
    pub c_beta: f64,
    pub seed: u64,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 16,
            flavor: Flavor::Neumann,
            layout: LayoutSpec::TwoBoundary,
            nonlinearity: ScalarMap::GaussianDamped.name(),
            scaling: Scaling::InverseNSquared,
            shift: 0.0,
            g_inf: None,
            frame: FrameKind::Rescaled,
            horizon: 1.0,
            n_steps: None,
            beta: 1e-15,
            initial: InitialState::Sine,
            max_iters: MinimizeOptions::default().max_iters,
            grad_tol: MinimizeOptions::default().grad_tol,
            memory: MinimizeOptions::default().memory,
            sweep_n: vec![8, 16, 24, 32, 48],
            sweep_regimes: Scaling::ALL.to_vec(),
            horizon_mode: HorizonMode::TimeGrowsAsN2,
            sweep_flavor: Flavor::Dirichlet,
            sweep_layout: LayoutSpec::InteriorFraction { ratio: 0.5 },
            kalman_n: (2..=24).collect(),
            c0: 1.0,
            c1: 1.0,
            c_beta: 1.0,
            seed: 0,
            output: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 29] = [
    "n",
    "flavor",
    "layout",
    "nonlinearity",
    "scaling",
    "shift",
    "g_inf",
    "frame",
    "T",
    "n_steps",
    "beta",
    "initial",
    "max_iters",
    "grad_tol",
    "memory",
    "sweep_n",
    "sweep_regimes",
    "horizon_mode",
    "sweep_flavor",
    "sweep_layout",
    "kalman_n",
    "C0",
    "C1",
    "C_beta",
    "seed",
    "output",
    // aliases
    "horizon",
    "ginf",
    "out",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().to_ascii_lowercase();
    let c = match k.as_str() {
        "horizon" => "T",
        "ginf" => "g_inf",
        "out" => "output",
        "cbeta" => "C_beta",
        _ => CONFIG_KEYS.iter().find(|c| c.to_ascii_lowercase() == k)?,
    };
    Some(c)
}

/// Parse `a..b` (inclusive) or a comma list.
pub fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start '{a}'"))?;
        let b = b.trim().trim_start_matches('=');
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end '{b}'"))?;
        if a > b {
            return Err(format!("empty range {a}..{b}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| format!("'{}' is not a non-negative integer", p.trim())))
        .collect()
}

fn parse_value<T: FromStr>(key: &str, raw: &str, what: &str) -> std::result::Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("'{raw}' is not {what} (key {key})"))
}

fn parse_optional<T: FromStr>(key: &str, raw: &str, what: &str) -> std::result::Result<Option<T>, String> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "auto" | "none" | "" => Ok(None),
        _ => parse_value(key, raw, what).map(Some),
    }
}

fn list_of<T: FromStr>(raw: &str, what: &str) -> std::result::Result<Vec<T>, String> {
    raw.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("'{p}' is not {what}")))
        .collect()
}

/// Split a document into `(line number, key, value)` triples.
fn pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut first = true;
        for seg in body.split(',') {
            match seg.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    if k.is_empty() {
                        return Err(Error::config(format!("line {lineno}"), "missing key before '='"));
                    }
                    out.push((lineno, k.to_string(), v.trim().to_string()));
                }
                None if first => {
                    return Err(Error::config(
                        format!("line {lineno}"),
                        format!("expected 'key = value', got '{}'", seg.trim()),
                    ))
                }
                None => {
                    let last = out.last_mut().expect("a pair precedes continuation segments");
                    last.2.push(',');
                    last.2.push_str(seg.trim());
                }
            }
            first = false;
        }
    }
    Ok(out)
}

impl RunConfig {
    fn set(&mut self, key: &'static str, raw: &str) -> std::result::Result<(), String> {
        match key {
            "n" => self.n = parse_value(key, raw, "an integer")?,
            "flavor" => self.flavor = raw.parse().map_err(|e: Error| e.to_string())?,
            "layout" => self.layout = raw.parse().map_err(|e: Error| e.to_string())?,
            "nonlinearity" => {
                self.nonlinearity = ScalarMap::parse_builtin(raw).map_err(|e| e.to_string())?.name();
            }
            "scaling" => self.scaling = raw.parse().map_err(|e: Error| e.to_string())?,
            "shift" => self.shift = parse_value(key, raw, "a number")?,
            "g_inf" => self.g_inf = parse_optional(key, raw, "a number")?,
            "frame" => self.frame = raw.parse().map_err(|e: Error| e.to_string())?,
            "T" => self.horizon = parse_value(key, raw, "a number")?,
            "n_steps" => self.n_steps = parse_optional(key, raw, "an integer")?,
            "beta" => self.beta = parse_value(key, raw, "a number")?,
            "initial" => self.initial = raw.parse().map_err(|e: Error| e.to_string())?,
            "max_iters" => self.max_iters = parse_value(key, raw, "an integer")?,
            "grad_tol" => self.grad_tol = parse_value(key, raw, "a number")?,
            "memory" => self.memory = parse_value(key, raw, "an integer")?,
            "sweep_n" => self.sweep_n = parse_usize_list(raw)?,
            "sweep_regimes" => self.sweep_regimes = list_of(raw, "a scaling regime")?,
            "horizon_mode" => self.horizon_mode = raw.parse().map_err(|e: Error| e.to_string())?,
            "sweep_flavor" => self.sweep_flavor = raw.parse().map_err(|e: Error| e.to_string())?,
            "sweep_layout" => self.sweep_layout = raw.parse().map_err(|e: Error| e.to_string())?,
            "kalman_n" => self.kalman_n = parse_usize_list(raw)?,
            "C0" => self.c0 = parse_value(key, raw, "a number")?,
            "C1" => self.c1 = parse_value(key, raw, "a number")?,
            "C_beta" => self.c_beta = parse_value(key, raw, "a number")?,
            "seed" => self.seed = parse_value(key, raw, "an integer")?,
            "output" => {
                let v = raw.trim();
                self.output = (!v.is_empty()).then(|| v.to_string());
            }
            _ => unreachable!("canonical keys only"),
        }
        Ok(())
    }

    /// Range checks on a fully assembled config; errors name the key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(format!("key {key}"), msg));
        if self.n < 2 {
            return bad("n", format!("a chain needs at least 2 agents, got {}", self.n));
        }
        if let Err(e) = ControlLayout::build(self.n, &self.layout) {
            return bad("layout", e.to_string());
        }
        if let Err(e) = self.nonlinearity_spec() {
            return bad("shift", e.to_string());
        }
        if let Some(g) = self.g_inf {
            if !(g >= 0.0 && g.is_finite()) {
                return bad("g_inf", format!("must be a non-negative number, got {g}"));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("T", format!("must be positive, got {}", self.horizon));
        }
        if self.n_steps == Some(0) {
            return bad("n_steps", "must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta", format!("must be non-negative, got {}", self.beta));
        }
        if self.grad_tol.is_nan() || self.grad_tol < 0.0 {
            return bad("grad_tol", format!("must be non-negative, got {}", self.grad_tol));
        }
        if self.memory == 0 {
            return bad("memory", "must be at least 1".into());
        }
        if self.sweep_n.is_empty() || self.sweep_n.windows(2).any(|w| w[0] >= w[1]) || self.sweep_n[0] < 2 {
            return bad("sweep_n", "must be a strictly increasing list of chain sizes >= 2".into());
        }
        if self.sweep_regimes.is_empty() {
            return bad("sweep_regimes", "must list at least one regime".into());
        }
        if self.kalman_n.is_empty() || self.kalman_n.iter().any(|&n| n < 2) {
            return bad("kalman_n", "every chain needs at least 2 agents".into());
        }
        for (key, v) in [("C0", self.c0), ("C1", self.c1), ("C_beta", self.c_beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Apply `key = value` pairs from `text` on top of `self`.
    pub fn apply_document(mut self, text: &str) -> Result<Self> {
        let mut seen: Vec<&'static str> = Vec::new();
        for (lineno, key, value) in pairs(text)? {
            let loc = format!("line {lineno}, key {key}");
            let Some(canon) = canonical_key(&key) else {
                return Err(Error::config(loc, "unknown key"));
            };
            if seen.contains(&canon) {
                return Err(Error::config(loc, "key given twice"));
            }
            seen.push(canon);
            self.set(canon, &value).map_err(|m| Error::config(loc, m))?;
        }
        Ok(self)
    }

    /// Every key with its resolved value, one per line; parses back to `self`.
    pub fn to_document(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("n", self.n.to_string());
        line("flavor", self.flavor.name().into());
        line("layout", self.layout.to_string());
        line("nonlinearity", self.nonlinearity.clone());
        line("scaling", self.scaling.name().into());
        line("shift", format!("{:?}", self.shift));
        line("g_inf", opt(self.g_inf.map(|g| format!("{g:?}"))));
        line("frame", self.frame.name().into());
        line("T", format!("{:?}", self.horizon));
        line("n_steps", opt(self.n_steps.map(|n| n.to_string())));
        line("beta", format!("{:?}", self.beta));
        line("initial", self.initial.to_string());
        line("max_iters", self.max_iters.to_string());
        line("grad_tol", format!("{:?}", self.grad_tol));
        line("memory", self.memory.to_string());
        line("sweep_n", list(&self.sweep_n));
        line(
            "sweep_regimes",
            self.sweep_regimes.iter().map(|r| r.name()).collect::<Vec<_>>().join(", "),
        );
        line("horizon_mode", self.horizon_mode.name().into());
        line("sweep_flavor", self.sweep_flavor.name().into());
        line("sweep_layout", self.sweep_layout.to_string());
        line("kalman_n", list(&self.kalman_n));
        line("C0", format!("{:?}", self.c0));
        line("C1", format!("{:?}", self.c1));
        line("C_beta", format!("{:?}", self.c_beta));
        line("seed", self.seed.to_string());
        line("output", self.output.clone().unwrap_or_default());
        s
    }

    pub fn nonlinearity_spec(&self) -> Result<NonlinearitySpec> {
        let map = ScalarMap::parse_builtin(&self.nonlinearity)?;
        let spec = if self.shift != 0.0 {
            NonlinearitySpec::with_shift(map, self.scaling, self.shift)?
        } else {
            NonlinearitySpec::new(map, self.scaling)?
        };
        match self.g_inf {
            Some(g) => spec.with_lipschitz_bound(g),
            None => Ok(spec),
        }
    }

    pub fn time_frame(&self) -> Result<TimeFrame> {
        TimeFrame::new(self.frame, self.n, self.horizon)
    }

    pub fn steps(&self) -> Result<usize> {
        Ok(match self.n_steps {
            Some(s) => s,
            None => self.time_frame()?.default_steps(),
        })
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.initial.generate(self.n, self.seed)
    }

    pub fn objective(&self) -> ObjectiveSpec {
        ObjectiveSpec::new(self.beta)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            memory: self.memory,
            ..Default::default()
        }
    }

    pub fn bound_constants(&self) -> BoundConstants {
        BoundConstants {
            c0: self.c0,
            c1: self.c1,
            c_beta: self.c_beta,
        }
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        Ok(SweepPlan {
            n_values: self.sweep_n.clone(),
            regimes: self.sweep_regimes.clone(),
            horizon_mode: self.horizon_mode,
            base_t: self.horizon,
            template: ProblemTemplate {
                flavor: self.sweep_flavor,
                layout: self.sweep_layout,
                map: ScalarMap::parse_builtin(&self.nonlinearity)?,
                initial: self.initial,
            },
            beta: self.beta,
            options: self.minimize_options(),
            n_steps: self.n_steps,
            seed: self.seed,
        })
    }
}

/// Parse a document over the defaults and validate the result.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg = RunConfig::default().apply_document(text)?;
    cfg.validate()?;
    Ok(cfg)
}
