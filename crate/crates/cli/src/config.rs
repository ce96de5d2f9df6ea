//! Configuration: a preset, then a TOML file, then command-line flags, each
//! layer overriding the previous one field by field. Rate functions and the
//! initial data are replaced as a whole.

use std::path::{Path, PathBuf};

use forest_renewal::{
    BetaFunction, BetaTable, GrowthFunction, GrowthTable, History, InitialData, Model, ModelParams,
    Numerics, TailMode,
};
use serde::Deserialize;

use crate::error::{config_error, CliError, CliResult};
use crate::presets;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub model: Option<RawModel>,
    pub numerics: Option<RawNumerics>,
    pub simulate: Option<RawSimulate>,
    pub curve: Option<RawCurve>,
    pub spectrum: Option<RawSpectrum>,
    pub sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub mu: Option<f64>,
    pub x_m: Option<f64>,
    pub beta: Option<RawBeta>,
    pub g: Option<RawGrowth>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBeta {
    pub kind: String,
    pub alpha: Option<f64>,
    pub k: Option<f64>,
    pub origin: Option<f64>,
    pub samples: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrowth {
    pub kind: String,
    pub p: Option<f64>,
    pub samples: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub panels: Option<usize>,
    pub tol_tail: Option<f64>,
    pub tol_eq: Option<f64>,
    pub tol_crit: Option<f64>,
    pub delta: Option<f64>,
    pub h: Option<f64>,
    pub a_max: Option<f64>,
    pub t_end: Option<f64>,
    pub conv_tol: Option<f64>,
    pub conv_window: Option<f64>,
    pub b_max: Option<f64>,
    pub n_scan: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimulate {
    pub init: Option<RawInit>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInit {
    pub kind: String,
    pub value: Option<f64>,
    pub b_star: Option<f64>,
    pub eps: Option<f64>,
    pub omega: Option<f64>,
    pub path: Option<PathBuf>,
    /// zero | constant_last | periodic
    pub tail: Option<String>,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCurve {
    pub which: Option<String>,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpectrum {
    pub b: Option<f64>,
    pub index: Option<usize>,
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub alpha: Option<RawRange>,
    pub p: Option<RawRange>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

fn pick<T>(base: Option<T>, top: Option<T>) -> Option<T> {
    top.or(base)
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $ty:ident { $($f:ident),* }) => {
        match ($base, $top) {
            (None, t) => t,
            (b, None) => b,
            (Some(b), Some(t)) => Some($ty { $($f: pick(b.$f, t.$f)),* }),
        }
    };
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| config_error(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut raw = Self::parse(&text, &path.display().to_string())?;
        // Relative data paths are relative to the configuration file.
        if let Some(dir) = path.parent() {
            if let Some(init) = raw.simulate.as_mut().and_then(|s| s.init.as_mut()) {
                if let Some(p) = init.path.as_mut() {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(raw)
    }

    /// `top` wins wherever it sets a value.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let model = match (self.model, top.model) {
            (None, t) => t,
            (b, None) => b,
            (Some(b), Some(t)) => Some(RawModel {
                mu: pick(b.mu, t.mu),
                x_m: pick(b.x_m, t.x_m),
                beta: pick(b.beta, t.beta),
                g: pick(b.g, t.g),
            }),
        };
        let simulate = match (self.simulate, top.simulate) {
            (None, t) => t,
            (b, None) => b,
            (Some(b), Some(t)) => Some(RawSimulate {
                init: pick(b.init, t.init),
            }),
        };
        RawConfig {
            preset: pick(self.preset, top.preset),
            model,
            numerics: overlay_fields!(self.numerics, top.numerics, RawNumerics {
                panels, tol_tail, tol_eq, tol_crit, delta, h, a_max, t_end, conv_tol, conv_window, b_max, n_scan
            }),
            simulate,
            curve: overlay_fields!(self.curve, top.curve, RawCurve { which, b_min, b_max, n }),
            spectrum: overlay_fields!(self.spectrum, top.spectrum, RawSpectrum { b, index, re_min, re_max, im_max }),
            sweep: overlay_fields!(self.sweep, top.sweep, RawSweep { alpha, p }),
        }
    }
}

/// Preset (from the flag or the file), then the file.
pub fn assemble(config: Option<&Path>, preset_flag: Option<&str>) -> CliResult<RawConfig> {
    let file = match config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    let name = preset_flag.map(str::to_owned).or_else(|| file.preset.clone());
    let base = match name {
        Some(name) => {
            let preset = presets::find(&name).ok_or_else(|| {
                let known: Vec<&str> = presets::PRESETS.iter().map(|p| p.name).collect();
                config_error(format!("unknown preset {name:?}; known presets: {}", known.join(", ")))
            })?;
            let mut raw = RawConfig::parse(&preset.toml(), &format!("preset {name}"))?;
            raw.preset = Some(name);
            raw
        }
        None => RawConfig::default(),
    };
    let mut merged = base.overlay(RawConfig { preset: None, ..file });
    if merged.preset.is_none() {
        merged.preset = preset_flag.map(str::to_owned);
    }
    Ok(merged)
}

fn unused(kind: &str, keys: &[(&str, bool)]) -> CliResult<()> {
    for (name, set) in keys {
        if *set {
            return Err(config_error(format!("key `{name}` does not apply to kind {kind:?}")));
        }
    }
    Ok(())
}

fn required(section: &str, name: &str, v: Option<f64>) -> CliResult<f64> {
    v.ok_or_else(|| config_error(format!("[{section}] needs `{name}`")))
}

fn pairs(samples: &[[f64; 2]]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s[0], s[1])).collect()
}

impl RawBeta {
    pub fn build(&self, x_m: f64) -> CliResult<BetaFunction> {
        let s = "model.beta";
        let beta = match self.kind.as_str() {
            "nicholson" => {
                unused("nicholson", &[("k", self.k.is_some()), ("origin", self.origin.is_some()), ("samples", self.samples.is_some())])?;
                BetaFunction::Nicholson {
                    alpha: required(s, "alpha", self.alpha)?,
                }
            }
            "saturating" => {
                unused("saturating", &[("samples", self.samples.is_some())])?;
                BetaFunction::Saturating {
                    alpha: required(s, "alpha", self.alpha)?,
                    k: required(s, "k", self.k)?,
                    origin: self.origin.unwrap_or(x_m),
                }
            }
            "table" => {
                unused("table", &[("alpha", self.alpha.is_some()), ("k", self.k.is_some()), ("origin", self.origin.is_some())])?;
                let samples = self
                    .samples
                    .as_ref()
                    .ok_or_else(|| config_error("[model.beta] kind \"table\" needs `samples`"))?;
                BetaFunction::Table(BetaTable::new(&pairs(samples))?)
            }
            other => {
                return Err(config_error(format!(
                    "[model.beta] unknown kind {other:?}; expected nicholson, saturating or table"
                )))
            }
        };
        beta.validate()?;
        Ok(beta)
    }
}

impl RawGrowth {
    pub fn build(&self) -> CliResult<GrowthFunction> {
        let g = match self.kind.as_str() {
            "exp_decay" => {
                unused("exp_decay", &[("samples", self.samples.is_some())])?;
                GrowthFunction::ExpDecay {
                    p: required("model.g", "p", self.p)?,
                }
            }
            "table" => {
                unused("table", &[("p", self.p.is_some())])?;
                let samples = self
                    .samples
                    .as_ref()
                    .ok_or_else(|| config_error("[model.g] kind \"table\" needs `samples`"))?;
                GrowthFunction::Table(GrowthTable::new(&pairs(samples))?)
            }
            other => {
                return Err(config_error(format!(
                    "[model.g] unknown kind {other:?}; expected exp_decay or table"
                )))
            }
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone)]
pub struct SimSettings {
    pub h: f64,
    pub a_max: f64,
    pub t_end: f64,
    pub conv_tol: f64,
    pub conv_window: f64,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub preset: Option<String>,
    pub model: Model,
    /// `[model]` as written, for sweeps that swap `α` and `p`.
    pub raw_model: RawModel,
    pub sim: SimSettings,
    /// Explicit scan bound; otherwise each model's default.
    pub b_max: Option<f64>,
    pub n_scan: usize,
    pub init: Option<RawInit>,
    pub curve: RawCurve,
    pub spectrum: RawSpectrum,
    pub sweep: RawSweep,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(format!("[numerics] `{name}` must be > 0, got {v}")))
    }
}

pub fn build_params(model: &RawModel) -> CliResult<ModelParams> {
    let mu = model.mu.unwrap_or(1.0);
    let x_m = model.x_m.unwrap_or(0.0);
    let beta = model
        .beta
        .as_ref()
        .ok_or_else(|| config_error("no fertility function: set [model.beta] or use --preset"))?
        .build(x_m)?;
    let g = model
        .g
        .as_ref()
        .ok_or_else(|| config_error("no growth function: set [model.g] or use --preset"))?
        .build()?;
    Ok(ModelParams::new(mu, x_m, beta, g)?)
}

impl Resolved {
    pub fn new(raw: RawConfig) -> CliResult<Self> {
        let raw_model = raw
            .model
            .ok_or_else(|| config_error("no model: give --preset NAME or a [model] section"))?;
        let params = build_params(&raw_model)?;
        let n = raw.numerics.unwrap_or_default();
        let defaults = Numerics::default();
        let numerics = Numerics {
            panels: n.panels.unwrap_or(defaults.panels),
            tol_tail: n.tol_tail.unwrap_or(defaults.tol_tail),
            tol_eq: n.tol_eq.unwrap_or(defaults.tol_eq),
            tol_crit: n.tol_crit.unwrap_or(defaults.tol_crit),
            delta: n.delta.unwrap_or(defaults.delta),
        };
        let mu = params.mu();
        let model = Model::with_numerics(params, numerics)?;
        let sim = SimSettings {
            h: positive("h", n.h.unwrap_or(0.05))?,
            a_max: positive("a_max", n.a_max.unwrap_or(30.0))?,
            t_end: positive("t_end", n.t_end.unwrap_or(200.0))?,
            conv_tol: positive("conv_tol", n.conv_tol.unwrap_or(1e-6))?,
            conv_window: positive("conv_window", n.conv_window.unwrap_or(10.0 / mu))?,
        };
        let b_max = n.b_max.map(|v| positive("b_max", v)).transpose()?;
        let n_scan = n.n_scan.unwrap_or(400);
        if n_scan < 2 {
            return Err(config_error(format!("[numerics] `n_scan` must be ≥ 2, got {n_scan}")));
        }
        Ok(Self {
            preset: raw.preset,
            model,
            raw_model,
            sim,
            b_max,
            n_scan,
            init: raw.simulate.and_then(|s| s.init),
            curve: raw.curve.unwrap_or_default(),
            spectrum: raw.spectrum.unwrap_or_default(),
            sweep: raw.sweep.unwrap_or_default(),
        })
    }

    pub fn scan_bound(&self, model: &Model) -> f64 {
        self.b_max.unwrap_or_else(|| model.default_scan_bound())
    }
}

/// `constant:C`, `periodic:B_STAR,EPS,OMEGA` or `file:PATH`.
pub fn parse_init_flag(text: &str) -> CliResult<RawInit> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| config_error(format!("--init {text:?}: expected KIND:VALUES")))?;
    let number = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| config_error(format!("--init {text:?}: {s:?} is not a number")))
    };
    let mut init = RawInit {
        kind: kind.to_string(),
        value: None,
        b_star: None,
        eps: None,
        omega: None,
        path: None,
        tail: None,
        period: None,
    };
    match kind {
        "constant" => init.value = Some(number(rest)?),
        "periodic" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(config_error(format!("--init {text:?}: periodic needs B_STAR,EPS,OMEGA")));
            }
            init.b_star = Some(number(parts[0])?);
            init.eps = Some(number(parts[1])?);
            init.omega = Some(number(parts[2])?);
        }
        "file" => init.path = Some(PathBuf::from(rest)),
        other => {
            return Err(config_error(format!(
                "--init kind {other:?}: expected constant, periodic or file"
            )))
        }
    }
    Ok(init)
}

impl RawInit {
    pub fn build(&self) -> CliResult<InitialData> {
        let s = "simulate.init";
        let init = match self.kind.as_str() {
            "constant" => InitialData::Constant {
                value: required(s, "value", self.value)?,
            },
            "periodic" => InitialData::Periodic {
                b_star: required(s, "b_star", self.b_star)?,
                eps: required(s, "eps", self.eps)?,
                omega: required(s, "omega", self.omega)?,
            },
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| config_error("[simulate.init] kind \"file\" needs `path`"))?;
                let tail = match self.tail.as_deref().unwrap_or("zero") {
                    "zero" => TailMode::Zero,
                    "constant_last" => TailMode::ConstantLast,
                    "periodic" => TailMode::PeriodicExtension {
                        period: required(s, "period", self.period)?,
                    },
                    other => {
                        return Err(config_error(format!(
                            "[simulate.init] unknown tail {other:?}; expected zero, constant_last or periodic"
                        )))
                    }
                };
                InitialData::Tabulated {
                    history: read_history(path, tail)?,
                }
            }
            other => {
                return Err(config_error(format!(
                    "[simulate.init] unknown kind {other:?}; expected constant, periodic or file"
                )))
            }
        };
        init.validate()?;
        Ok(init)
    }

    pub fn describe(&self) -> String {
        match self.kind.as_str() {
            "constant" => format!("constant {}", self.value.unwrap_or(f64::NAN)),
            "periodic" => format!(
                "periodic b_star = {}, eps = {}, omega = {}",
                self.b_star.unwrap_or(f64::NAN),
                self.eps.unwrap_or(f64::NAN),
                self.omega.unwrap_or(f64::NAN)
            ),
            _ => format!(
                "tabulated from {}",
                self.path.as_deref().map(|p| p.display().to_string()).unwrap_or_default()
            ),
        }
    }
}

/// Reads `a,phi` rows (`phi(-a)` on a uniform age grid starting at 0);
/// `#` lines and a header row are skipped.
pub fn read_history(path: &Path, tail: TailMode) -> CliResult<History> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let where_ = |line: usize| format!("{}:{}", path.display(), line + 1);
    let mut ages = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(config_error(format!("{}: expected two columns a,phi", where_(i))));
        }
        match (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
            (Ok(a), Ok(v)) => {
                ages.push(a);
                values.push(v);
            }
            _ if ages.is_empty() && fields == ["a", "phi"] => {}
            _ => return Err(config_error(format!("{}: not a pair of numbers", where_(i)))),
        }
    }
    if ages.len() < 2 {
        return Err(config_error(format!("{}: need at least two rows", path.display())));
    }
    if ages[0] != 0.0 {
        return Err(config_error(format!("{}: first age must be 0", path.display())));
    }
    let n = ages.len() - 1;
    let h = ages[n] / n as f64;
    for (k, &a) in ages.iter().enumerate() {
        if (a - k as f64 * h).abs() > 1e-9 * h.max(a) {
            return Err(config_error(format!(
                "{}: ages must be uniformly spaced (row {k}: {a})",
                path.display()
            )));
        }
    }
    Ok(History::new(h, values, tail)?)
}

/// Inverse of [`read_history`], exact to the last bit.
pub fn write_history(samples: &[f64], h: f64) -> String {
    let mut s = String::from("# initial history phi(-a) on the simulation grid\n# a: age before t = 0 [time]\n# phi: birth rate [births per unit time]\na,phi\n");
    for (k, v) in samples.iter().enumerate() {
        s.push_str(&format!("{},{}\n", k as f64 * h, v));
    }
    s
}

pub fn parse_range(name: &str, text: &str) -> CliResult<RawRange> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || config_error(format!("--{name} {text:?}: expected MIN:MAX:STEPS"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(RawRange {
        min: parts[0].trim().parse().map_err(|_| bad())?,
        max: parts[1].trim().parse().map_err(|_| bad())?,
        steps: parts[2].trim().parse().map_err(|_| bad())?,
    })
}

impl RawRange {
    pub fn points(&self, name: &str) -> CliResult<Vec<f64>> {
        if self.steps == 0 {
            return Err(config_error(format!("[sweep] {name}: steps must be ≥ 1")));
        }
        if !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() {
            return Err(config_error(format!(
                "[sweep] {name}: need 0 < min ≤ max, got {}..{}",
                self.min, self.max
            )));
        }
        if self.steps == 1 {
            return Ok(vec![self.min]);
        }
        let d = (self.max - self.min) / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + i as f64 * d })
            .collect())
    }
}
