//! Job files: one JSON document per run, fully explicit.
//!
//! Every optional key has a serde default; the resolved parameters (defaults
//! filled, domain files inlined) are echoed into the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use layerspec_core::model::{validate_domain, DomainConfig, DomainErrors, InnerBc, LayeredBallDomain};
use layerspec_core::resolvent::ExteriorDomain;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::plot::{PlotError, PlotStyle};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{what}: {source}")]
    Domain { what: String, source: DomainErrors },
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("{0}")]
    Threads(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Validate,
    Spectrum,
    Sweep,
    ExteriorSweep,
    Evolve,
    DecayCompare,
    DtnExponent,
}

impl fmt::Display for JobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Validate => "validate",
            Self::Spectrum => "spectrum",
            Self::Sweep => "sweep",
            Self::ExteriorSweep => "exterior-sweep",
            Self::Evolve => "evolve",
            Self::DecayCompare => "decay-compare",
            Self::DtnExponent => "dtn-exponent",
        };
        f.write_str(s)
    }
}

/// A domain given inline or as a path relative to the job file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DomainRef {
    Path(PathBuf),
    Inline(DomainConfig),
}

impl<'de> Deserialize<'de> for DomainRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => Ok(Self::Path(s.into())),
            v @ Value::Object(_) => DomainConfig::deserialize(v).map(Self::Inline).map_err(D::Error::custom),
            _ => Err(D::Error::custom("domain must be a file path or an inline domain object")),
        }
    }
}

impl DomainRef {
    /// Loads and validates; afterwards `self` holds the inline form.
    fn resolve(&mut self, base: &Path, what: &str) -> Result<LayeredBallDomain<f64>, ConfigError> {
        if let Self::Path(p) = self {
            let path = base.join(&*p);
            let cfg: DomainConfig = read_json(&path)?;
            *self = Self::Inline(cfg);
        }
        let Self::Inline(cfg) = self else { unreachable!() };
        validate_domain(cfg).map_err(|source| ConfigError::Domain { what: what.to_string(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorConfig {
    /// Interface radii from the obstacle outwards (at least the obstacle).
    pub radii: Vec<f64>,
    pub speeds: Vec<f64>,
    pub c_ext: f64,
    pub inner_bc: InnerBc,
}

impl ExteriorConfig {
    fn build(&self) -> Result<ExteriorDomain<f64>, ConfigError> {
        ExteriorDomain::new(&self.radii, &self.speeds, self.c_ext, self.inner_bc).map_err(|e| invalid("exterior", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Either an explicit list or `count` evenly spaced points on `[start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    Range(LambdaRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl LambdaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range(r) if r.count == 1 => vec![r.start],
            Self::Range(r) => (0..r.count)
                .map(|i| r.start + (r.end - r.start) * i as f64 / (r.count - 1) as f64)
                .collect(),
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        if let Self::Range(r) = self {
            if r.count == 0 || !(r.end >= r.start) {
                return Err(invalid("lambdas", "need count ≥ 1 and end ≥ start"));
            }
        }
        let v = self.values();
        if v.is_empty() || v.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("lambdas", "every frequency must be finite and positive (λ ≠ 0)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Wave,
    Schrodinger,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Equal travel time per cell in every layer.
    Optical,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Gaussian,
    /// `exp(−1/(1−x²))`, compactly supported on `|r − center| < width`.
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub shape: Shape,
    pub center: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl InitialData {
    pub fn eval(&self, r: f64) -> f64 {
        let x = (r - self.center) / self.width;
        self.amplitude
            * match self.shape {
                Shape::Gaussian => (-x * x).exp(),
                Shape::Bump if x.abs() < 1.0 => (-1.0 / (1.0 - x * x)).exp(),
                Shape::Bump => 0.0,
            }
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !(self.width > 0.0 && self.center.is_finite() && self.amplitude.is_finite()) {
            return Err(invalid("initial", "width must be positive, center and amplitude finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub start: f64,
    pub end: f64,
}

fn one() -> f64 {
    1.0
}
fn default_quadrature() -> usize {
    2000
}
fn default_extra() -> usize {
    10
}
fn default_extensions() -> usize {
    3
}
fn default_tail() -> usize {
    5
}
fn default_newton_tol() -> f64 {
    1e-12
}
fn default_residual_tol() -> f64 {
    1e-9
}
fn default_grid() -> GridKind {
    GridKind::Optical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateJob {
    pub domain: DomainRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumJob {
    pub domain: DomainRef,
    pub j: u8,
    pub ells: Vec<usize>,
    #[serde(rename = "box")]
    pub search_box: SearchBox,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub plot: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(default = "default_quadrature")]
    pub quadrature_n: usize,
    #[serde(default = "default_extra")]
    pub ell_extra: usize,
    #[serde(default = "default_extensions")]
    pub max_extensions: usize,
    #[serde(default = "default_tail")]
    pub tail: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            quadrature_n: default_quadrature(),
            ell_extra: default_extra(),
            max_extensions: default_extensions(),
            tail: default_tail(),
        }
    }
}

impl SweepSettings {
    fn check(&self) -> Result<(), ConfigError> {
        if self.quadrature_n < 16 || self.tail < 2 || self.ell_extra == 0 || self.tail > self.ell_extra {
            return Err(invalid("sweep", "need quadrature_n ≥ 16, ell_extra ≥ 1 and 2 ≤ tail ≤ ell_extra"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub domain: DomainRef,
    pub j: u8,
    pub lambdas: LambdaSpec,
    #[serde(default)]
    pub settings: SweepSettings,
    #[serde(default)]
    pub plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorSweepJob {
    pub exterior: ExteriorConfig,
    pub cutoff_radius: f64,
    #[serde(default)]
    pub im_lambda: f64,
    pub lambdas: LambdaSpec,
    #[serde(default)]
    pub settings: SweepSettings,
    #[serde(default)]
    pub plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveJob {
    pub equation: Equation,
    #[serde(default)]
    pub domain: Option<DomainRef>,
    #[serde(default)]
    pub exterior: Option<ExteriorConfig>,
    pub ell: usize,
    pub t_final: f64,
    pub dr: f64,
    pub dt: f64,
    #[serde(default = "default_grid")]
    pub grid: GridKind,
    pub initial: InitialData,
    /// Exterior runs only: energy radius and truncation radius.
    #[serde(default)]
    pub r_k: Option<f64>,
    #[serde(default)]
    pub r_big: Option<f64>,
    #[serde(default)]
    pub fit_window: Option<WindowConfig>,
    #[serde(default)]
    pub plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCompareJob {
    pub monotone: DomainRef,
    pub reversed: DomainRef,
    pub ell: usize,
    pub t_final: f64,
    pub dr: f64,
    pub dt: f64,
    #[serde(default = "default_grid")]
    pub grid: GridKind,
    pub initial: InitialData,
    #[serde(default)]
    pub fit_window: Option<WindowConfig>,
    #[serde(default)]
    pub plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnExponentJob {
    pub c: f64,
    pub r: f64,
    pub lambdas: LambdaSpec,
    #[serde(default)]
    pub plot: Option<String>,
}

/// A parsed, validated job with its domains loaded.
#[derive(Debug, Clone)]
pub enum Job {
    Validate(ValidateJob, LayeredBallDomain<f64>),
    Spectrum(SpectrumJob, LayeredBallDomain<f64>),
    Sweep(SweepJob, LayeredBallDomain<f64>),
    ExteriorSweep(ExteriorSweepJob, ExteriorDomain<f64>),
    Evolve(EvolveJob, EvolveTarget),
    DecayCompare(DecayCompareJob, LayeredBallDomain<f64>, LayeredBallDomain<f64>),
    DtnExponent(DtnExponentJob),
}

#[derive(Debug, Clone)]
pub enum EvolveTarget {
    Interior(LayeredBallDomain<f64>),
    Exterior(ExteriorDomain<f64>),
}

impl Job {
    /// Resolved parameters as echoed into the manifest.
    pub fn parameters(&self) -> Value {
        let v = match self {
            Self::Validate(j, _) => serde_json::to_value(j),
            Self::Spectrum(j, _) => serde_json::to_value(j),
            Self::Sweep(j, _) => serde_json::to_value(j),
            Self::ExteriorSweep(j, _) => serde_json::to_value(j),
            Self::Evolve(j, _) => serde_json::to_value(j),
            Self::DecayCompare(j, _, _) => serde_json::to_value(j),
            Self::DtnExponent(j) => serde_json::to_value(j),
        };
        v.expect("job parameters serialize")
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
}

fn check_plot(style: &Option<String>) -> Result<(), ConfigError> {
    if let Some(s) = style {
        s.parse::<PlotStyle>()?;
    }
    Ok(())
}

fn check_j(j: u8) -> Result<(), ConfigError> {
    if j > 1 {
        return Err(invalid("j", "must be 0 (Schrödinger-type) or 1 (wave)"));
    }
    Ok(())
}

fn positive(field: &'static str, x: f64) -> Result<(), ConfigError> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(field, "must be finite and positive"));
    }
    Ok(())
}

fn check_window(w: &Option<WindowConfig>) -> Result<(), ConfigError> {
    if let Some(w) = w {
        if !(w.end > w.start) {
            return Err(invalid("fit_window", "end must exceed start"));
        }
    }
    Ok(())
}

/// Reads `path` as a job of the given kind and validates it completely.
pub fn load(kind: JobKind, path: &Path) -> Result<Job, ConfigError> {
    let base = path.parent().unwrap_or(Path::new("."));
    match kind {
        JobKind::Validate => {
            let mut j: ValidateJob = read_json(path)?;
            let d = j.domain.resolve(base, "domain")?;
            Ok(Job::Validate(j, d))
        }
        JobKind::Spectrum => {
            let mut j: SpectrumJob = read_json(path)?;
            let d = j.domain.resolve(base, "domain")?;
            check_j(j.j)?;
            check_plot(&j.plot)?;
            let b = j.search_box;
            if !(b.re_max > b.re_min && b.im_max > b.im_min) || [b.re_min, b.re_max, b.im_min, b.im_max].iter().any(|x| !x.is_finite()) {
                return Err(invalid("box", "need finite bounds with re_max > re_min and im_max > im_min"));
            }
            if b.re_min <= 0.0 && b.re_max >= 0.0 && b.im_min <= 0.0 && b.im_max >= 0.0 {
                return Err(invalid("box", "contains λ = 0, but the characteristic function is only defined for λ ≠ 0"));
            }
            if j.j == 0 && b.re_min <= 0.0 {
                return Err(invalid("box", "Schrödinger-type searches need re_min > 0 (λ ≠ 0, z = λ²)"));
            }
            if j.ells.is_empty() {
                return Err(invalid("ells", "at least one degree is required"));
            }
            positive("newton_tol", j.newton_tol)?;
            positive("residual_tol", j.residual_tol)?;
            Ok(Job::Spectrum(j, d))
        }
        JobKind::Sweep => {
            let mut j: SweepJob = read_json(path)?;
            let d = j.domain.resolve(base, "domain")?;
            check_j(j.j)?;
            check_plot(&j.plot)?;
            j.lambdas.check()?;
            j.settings.check()?;
            Ok(Job::Sweep(j, d))
        }
        JobKind::ExteriorSweep => {
            let j: ExteriorSweepJob = read_json(path)?;
            let e = j.exterior.build()?;
            check_plot(&j.plot)?;
            j.lambdas.check()?;
            j.settings.check()?;
            if !(j.cutoff_radius > e.last_radius() && j.cutoff_radius.is_finite()) {
                return Err(invalid("cutoff_radius", "must exceed the last interface radius"));
            }
            if !j.im_lambda.is_finite() {
                return Err(invalid("im_lambda", "must be finite"));
            }
            Ok(Job::ExteriorSweep(j, e))
        }
        JobKind::Evolve => {
            let mut j: EvolveJob = read_json(path)?;
            check_plot(&j.plot)?;
            check_window(&j.fit_window)?;
            j.initial.check()?;
            positive("t_final", j.t_final)?;
            positive("dr", j.dr)?;
            positive("dt", j.dt)?;
            let target = match j.equation {
                Equation::Wave | Equation::Schrodinger => {
                    if j.exterior.is_some() || j.r_k.is_some() || j.r_big.is_some() {
                        return Err(invalid("equation", "exterior, r_k and r_big apply to exterior runs only"));
                    }
                    let d = j.domain.as_mut().ok_or_else(|| invalid("domain", "required for interior runs"))?;
                    EvolveTarget::Interior(d.resolve(base, "domain")?)
                }
                Equation::Exterior => {
                    if j.domain.is_some() {
                        return Err(invalid("domain", "exterior runs take an \"exterior\" object instead"));
                    }
                    let e = j.exterior.as_ref().ok_or_else(|| invalid("exterior", "required for exterior runs"))?.build()?;
                    let (rk, rb) = match (j.r_k, j.r_big) {
                        (Some(a), Some(b)) => (a, b),
                        _ => return Err(invalid("r_k", "exterior runs need r_k and r_big")),
                    };
                    if !(rk > e.last_radius() && rb > rk) {
                        return Err(invalid("r_k", "need last interface < r_k < r_big"));
                    }
                    if j.initial.shape != Shape::Bump || j.initial.center + j.initial.width > rk {
                        return Err(invalid("initial", "exterior data must be a bump supported in r ≤ r_k"));
                    }
                    if j.ell != 0 {
                        return Err(invalid("ell", "exterior evolution supports ℓ = 0 only"));
                    }
                    if j.grid != GridKind::Optical {
                        return Err(invalid("grid", "exterior runs always use the optical grid"));
                    }
                    EvolveTarget::Exterior(e)
                }
            };
            Ok(Job::Evolve(j, target))
        }
        JobKind::DecayCompare => {
            let mut j: DecayCompareJob = read_json(path)?;
            let m = j.monotone.resolve(base, "monotone")?;
            let r = j.reversed.resolve(base, "reversed")?;
            check_plot(&j.plot)?;
            check_window(&j.fit_window)?;
            j.initial.check()?;
            positive("t_final", j.t_final)?;
            positive("dr", j.dr)?;
            positive("dt", j.dt)?;
            Ok(Job::DecayCompare(j, m, r))
        }
        JobKind::DtnExponent => {
            let j: DtnExponentJob = read_json(path)?;
            check_plot(&j.plot)?;
            positive("c", j.c)?;
            positive("r", j.r)?;
            j.lambdas.check()?;
            Ok(Job::DtnExponent(j))
        }
    }
}
