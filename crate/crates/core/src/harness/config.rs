//! Flat `group.key = value` experiment configs.
//!
//! ```text
//! # comment
//! problem.kind = quadratic          # quadratic | separable_nonconvex |
//!                                   # dense_grad_sparse_curv | sparse_grad_dense_curv
//! problem.d = 16
//! problem.scale = 1.0               # fills coeffs when problem.coeffs is absent
//! problem.coeffs = 1, 2, 0.5        # optional explicit vector
//! problem.plateau = 3.0             # dense extreme case only
//! noise.distribution = rademacher   # rademacher | gaussian
//! noise.profile = constant          # constant | spike | custom
//! noise.scale = 1.0
//! noise.values = 0.1, 0.2           # custom profile
//! optimizer.method = adagrad        # adagrad | adagrad_norm | sgd
//! optimizer.eta_rule = inv_sqrt_d   # constant | inv_sqrt_d | sgd_tuned
//! optimizer.eta = 0.5               # constant rule; implies it when no rule is given
//! optimizer.eta_scale = 1.0         # numerator of inv_sqrt_d, factor on sgd_tuned
//! optimizer.delta_rule = half_inv_d # constant | half_inv_d
//! optimizer.delta = 1e-8            # constant rule; implies it when no rule is given
//! T = 1000
//! seeds = [1, 2, 3]                 # or 1..100 (half-open) or 1..=100
//! record.trajectory = false
//! record.diagnostics = true
//! record.summary_only = false
//! output_dir = out
//! name = run
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optimizers::{sgd_tuned_eta, Method};
use crate::oracle::{NoiseDistribution, NoiseModel};
use crate::problems::{
    make_extreme_case_with_plateau, make_quadratic, make_separable_nonconvex, ExtremeCase, Problem,
    DEFAULT_PLATEAU,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemChoice {
    Quadratic,
    SeparableNonconvex,
    Extreme(ExtremeCase),
}

impl FromStr for ProblemChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "quadratic" => Self::Quadratic,
            "separable_nonconvex" => Self::SeparableNonconvex,
            "dense_grad_sparse_curv" => Self::Extreme(ExtremeCase::DenseGradSparseCurv),
            "sparse_grad_dense_curv" => Self::Extreme(ExtremeCase::SparseGradDenseCurv),
            _ => return Err(format!("unknown problem kind `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemChoice,
    pub d: usize,
    pub scale: f64,
    pub coeffs: Option<Vec<f64>>,
    pub plateau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaProfile {
    Constant(f64),
    /// `(s, s/d, ..., s/d)`.
    Spike(f64),
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    pub profile: SigmaProfile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    Constant(f64),
    /// `scale / sqrt(d)`.
    InvSqrtD(f64),
    /// `scale * sgd_tuned_eta(...)`.
    SgdTuned(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    Constant(f64),
    /// `min(1e-8, 1/(2d))`.
    HalfInvD,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSpec {
    pub method: Method,
    pub eta: EtaRule,
    pub delta: DeltaRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordSpec {
    pub trajectory: bool,
    pub diagnostics: bool,
    pub summary_only: bool,
}

impl Default for RecordSpec {
    fn default() -> Self {
        Self { trajectory: false, diagnostics: true, summary_only: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub noise: NoiseSpec,
    pub optimizer: OptimizerSpec,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub record: RecordSpec,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Copy with another dimension (sweeps).
    pub fn with_dim(&self, d: usize) -> Self {
        let mut c = self.clone();
        c.problem.d = d;
        c
    }

    pub fn with_horizon(&self, t: usize) -> Self {
        let mut c = self.clone();
        c.horizon = t;
        c
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let ps = &self.problem;
        let coeffs = match &ps.coeffs {
            Some(c) if c.len() != ps.d => {
                return Err(Error::DimensionMismatch { expected: ps.d, got: c.len() })
            }
            Some(c) => c.clone(),
            None => vec![ps.scale; ps.d],
        };
        match ps.kind {
            ProblemChoice::Quadratic => make_quadratic(&coeffs),
            ProblemChoice::SeparableNonconvex => make_separable_nonconvex(&coeffs),
            ProblemChoice::Extreme(kind) => make_extreme_case_with_plateau(kind, ps.d, ps.scale, ps.plateau),
        }
    }

    pub fn build_noise(&self) -> Result<NoiseModel> {
        let d = self.problem.d;
        let dist = self.noise.distribution;
        match &self.noise.profile {
            SigmaProfile::Constant(s) => NoiseModel::constant(d, *s, dist),
            SigmaProfile::Spike(s) => NoiseModel::spike(d, *s, dist),
            SigmaProfile::Custom(v) if v.len() != d => Err(Error::DimensionMismatch { expected: d, got: v.len() }),
            SigmaProfile::Custom(v) => NoiseModel::new(v.clone(), dist),
        }
    }

    pub fn resolve_eta(&self, p: &Problem, nm: &NoiseModel) -> Result<f64> {
        let d = self.problem.d as f64;
        let eta = match self.optimizer.eta {
            EtaRule::Constant(e) => e,
            EtaRule::InvSqrtD(s) => s / d.sqrt(),
            EtaRule::SgdTuned(s) => {
                let sigma_l2 = crate::metrics::norms(&nm.sigma).1;
                s * sgd_tuned_eta(p.smoothness_linf(), sigma_l2, p.delta1(), self.horizon)?
            }
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolved eta = {eta} is not positive")));
        }
        Ok(eta)
    }

    pub fn resolve_delta(&self) -> f64 {
        match self.optimizer.delta {
            DeltaRule::Constant(x) => x,
            DeltaRule::HalfInvD => 1e-8f64.min(0.5 / self.problem.d as f64),
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| err(line, format!("`{key}` expects a number, got `{v}`")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(line, format!("`{key}` expects true or false, got `{v}`"))),
    }
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let inner = v.trim_start_matches('[').trim_end_matches(']').trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|x| parse_num(line, key, x.trim())).collect()
}

fn parse_seeds(line: usize, v: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (b, inclusive) = match b.strip_prefix('=') {
            Some(b) => (b, true),
            None => (b, false),
        };
        let a: u64 = parse_num(line, "seeds", a.trim())?;
        let b: u64 = parse_num(line, "seeds", b.trim())?;
        let end = if inclusive { b.saturating_add(1) } else { b };
        return Ok((a..end).collect());
    }
    let inner = v.trim_start_matches('[').trim_end_matches(']').trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|x| parse_num(line, "seeds", x.trim())).collect()
}

#[derive(Default)]
struct Raw {
    name: Option<String>,
    kind: Option<(usize, ProblemChoice)>,
    d: Option<(usize, usize)>,
    scale: Option<f64>,
    coeffs: Option<Vec<f64>>,
    plateau: Option<f64>,
    distribution: Option<NoiseDistribution>,
    profile: Option<(usize, String)>,
    noise_scale: Option<f64>,
    noise_values: Option<Vec<f64>>,
    method: Option<Method>,
    eta: Option<(usize, f64)>,
    eta_rule: Option<(usize, String)>,
    eta_scale: Option<f64>,
    delta: Option<(usize, f64)>,
    delta_rule: Option<(usize, String)>,
    horizon: Option<(usize, usize)>,
    seeds: Option<(usize, Vec<u64>)>,
    record: RecordSpec,
    output_dir: Option<PathBuf>,
}

/// Parses and validates a config document. Errors carry the 1-based line.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut r = Raw::default();
    let mut seen = std::collections::HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let v = value.trim().trim_matches('"');
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(line, format!("duplicate key `{key}` (first on line {prev})")));
        }
        match key {
            "name" | "run.name" => r.name = Some(v.to_string()),
            "problem.kind" => r.kind = Some((line, v.parse().map_err(|e: String| err(line, e))?)),
            "problem.d" => r.d = Some((line, parse_num(line, key, v)?)),
            "problem.scale" => r.scale = Some(parse_num(line, key, v)?),
            "problem.coeffs" => r.coeffs = Some(parse_list(line, key, v)?),
            "problem.plateau" => r.plateau = Some(parse_num(line, key, v)?),
            "noise.distribution" => {
                r.distribution = Some(match v {
                    "rademacher" => NoiseDistribution::Rademacher,
                    "gaussian" => NoiseDistribution::Gaussian,
                    _ => return Err(err(line, format!("unknown noise distribution `{v}`"))),
                })
            }
            "noise.profile" => r.profile = Some((line, v.to_string())),
            "noise.scale" => r.noise_scale = Some(parse_num(line, key, v)?),
            "noise.values" => r.noise_values = Some(parse_list(line, key, v)?),
            "optimizer.method" => r.method = Some(v.parse().map_err(|e: String| err(line, e))?),
            "optimizer.eta" => r.eta = Some((line, parse_num(line, key, v)?)),
            "optimizer.eta_rule" => r.eta_rule = Some((line, v.to_string())),
            "optimizer.eta_scale" => r.eta_scale = Some(parse_num(line, key, v)?),
            "optimizer.delta" => r.delta = Some((line, parse_num(line, key, v)?)),
            "optimizer.delta_rule" => r.delta_rule = Some((line, v.to_string())),
            "T" | "run.T" => r.horizon = Some((line, parse_num(line, key, v)?)),
            "seeds" | "run.seeds" => r.seeds = Some((line, parse_seeds(line, v)?)),
            "record.trajectory" => r.record.trajectory = parse_bool(line, key, v)?,
            "record.diagnostics" => r.record.diagnostics = parse_bool(line, key, v)?,
            "record.summary_only" => r.record.summary_only = parse_bool(line, key, v)?,
            "output_dir" | "output.dir" => r.output_dir = Some(PathBuf::from(v)),
            _ => return Err(err(line, format!("unknown key `{key}`"))),
        }
    }
    // Missing keys are reported at the end of the document.
    finish(r, text.lines().count() + 1)
}

fn finish(r: Raw, end: usize) -> Result<ExperimentConfig> {
    let (_, kind) = r.kind.ok_or_else(|| err(end, "missing required key `problem.kind`"))?;
    let (d_line, d) = r.d.ok_or_else(|| err(end, "missing required key `problem.d`"))?;
    if d == 0 {
        return Err(err(d_line, "`problem.d` must be >= 1"));
    }
    let method = r.method.ok_or_else(|| err(end, "missing required key `optimizer.method`"))?;
    let (t_line, horizon) = r.horizon.ok_or_else(|| err(end, "missing required key `T`"))?;
    if horizon == 0 {
        return Err(err(t_line, "`T` must be >= 1"));
    }
    let (s_line, seeds) = r.seeds.ok_or_else(|| err(end, "missing required key `seeds`"))?;
    if seeds.is_empty() {
        return Err(err(s_line, "`seeds` must not be empty"));
    }

    let noise_scale = r.noise_scale.unwrap_or(0.0);
    let profile = match r.profile.as_ref().map(|(l, s)| (*l, s.as_str())) {
        None | Some((_, "constant")) => SigmaProfile::Constant(noise_scale),
        Some((_, "spike")) => SigmaProfile::Spike(noise_scale),
        Some((line, "custom")) => SigmaProfile::Custom(
            r.noise_values
                .clone()
                .ok_or_else(|| err(line, "custom noise profile needs `noise.values`"))?,
        ),
        Some((line, other)) => return Err(err(line, format!("unknown noise profile `{other}`"))),
    };

    let eta_scale = r.eta_scale.unwrap_or(1.0);
    let eta = match (r.eta_rule.as_ref().map(|(l, s)| (*l, s.as_str())), r.eta) {
        (Some((_, "constant")), Some((_, e))) | (None, Some((_, e))) => EtaRule::Constant(e),
        (Some((line, "constant")), None) => return Err(err(line, "constant eta rule needs `optimizer.eta`")),
        (Some((_, "inv_sqrt_d")), _) | (None, None) => EtaRule::InvSqrtD(eta_scale),
        (Some((_, "sgd_tuned")), _) => EtaRule::SgdTuned(eta_scale),
        (Some((line, other)), _) => return Err(err(line, format!("unknown eta rule `{other}`"))),
    };
    let (EtaRule::Constant(e) | EtaRule::InvSqrtD(e) | EtaRule::SgdTuned(e)) = eta;
    if !(e > 0.0 && e.is_finite()) {
        let line = r.eta.map(|x| x.0).unwrap_or(end);
        return Err(err(line, format!("eta must be positive, got {e}")));
    }
    let delta = match (r.delta_rule.as_ref().map(|(l, s)| (*l, s.as_str())), r.delta) {
        (Some((_, "constant")), Some((_, x))) | (None, Some((_, x))) => DeltaRule::Constant(x),
        (Some((line, "constant")), None) => return Err(err(line, "constant delta rule needs `optimizer.delta`")),
        (Some((_, "half_inv_d")), _) | (None, None) => DeltaRule::HalfInvD,
        (Some((line, other)), _) => return Err(err(line, format!("unknown delta rule `{other}`"))),
    };
    if let DeltaRule::Constant(x) = delta {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(err(r.delta.map(|x| x.0).unwrap_or(end), format!("delta must be >= 0, got {x}")));
        }
    }

    let cfg = ExperimentConfig {
        name: r.name.unwrap_or_else(|| "run".into()),
        problem: ProblemSpec {
            kind,
            d,
            scale: r.scale.unwrap_or(1.0),
            coeffs: r.coeffs,
            plateau: r.plateau.unwrap_or(DEFAULT_PLATEAU),
        },
        noise: NoiseSpec { distribution: r.distribution.unwrap_or_default(), profile },
        optimizer: OptimizerSpec { method, eta, delta },
        horizon,
        seeds,
        record: r.record,
        output_dir: r.output_dir.unwrap_or_else(|| PathBuf::from("out")),
    };
    // Surface construction errors (bad coeffs, negative sigma) at load time.
    cfg.build_problem()?;
    cfg.build_noise()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    load_config(&std::fs::read_to_string(path)?)
}
