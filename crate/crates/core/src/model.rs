//! Layered geometry, mode selection and the per-mode weighted norms.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerBc {
    Dirichlet,
    Neumann,
}

/// Domain description as it appears in configuration files.
///
/// ```json
/// { "radii": [1, 2, 3], "speeds": [2, 1], "a0": 1.0, "inner_bc": "dirichlet" }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub radii: Vec<f64>,
    pub speeds: Vec<f64>,
    pub a0: f64,
    pub inner_bc: InnerBc,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("radii[{index}] is not strictly larger than radii[{}]", index - 1)]
    NonMonotoneRadii { index: usize },
    #[error("radii[{index}] must be positive")]
    NonPositiveRadius { index: usize },
    #[error("speeds[{index}] must be positive")]
    NonPositiveSpeed { index: usize },
    #[error("a0 must be non-negative")]
    NegativeDissipation,
    #[error("at least one layer (two radii, one speed) is required")]
    EmptyLayers,
    #[error("{got} speeds given for {radii} radii; expected {}", radii.saturating_sub(1))]
    SpeedCountMismatch { radii: usize, got: usize },
    #[error("{field}[{index}] is not finite")]
    NonFinite { field: &'static str, index: usize },
}

/// Every violation found in one candidate domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct DomainErrors(pub Vec<DomainError>);

impl fmt::Display for DomainErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "invalid domain: {}", parts.join("; "))
    }
}

/// Concentric balls `r_0 < … < r_{m+1}` with a constant speed per shell.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredBallDomain<T> {
    radii: Vec<T>,
    speeds: Vec<T>,
    a0: T,
    inner_bc: InnerBc,
}

/// Checks every invariant and reports all violations at once.
pub fn validate_domain<T: Real>(raw: &DomainConfig) -> Result<LayeredBallDomain<T>, DomainErrors> {
    let mut errs = Vec::new();
    let nr = raw.radii.len();
    if nr < 2 || raw.speeds.is_empty() {
        errs.push(DomainError::EmptyLayers);
    }
    if nr >= 2 && raw.speeds.len() != nr - 1 {
        errs.push(DomainError::SpeedCountMismatch { radii: nr, got: raw.speeds.len() });
    }
    for (i, &r) in raw.radii.iter().enumerate() {
        if !r.is_finite() {
            errs.push(DomainError::NonFinite { field: "radii", index: i });
        } else if r <= 0.0 {
            errs.push(DomainError::NonPositiveRadius { index: i });
        }
        if i > 0 && r.is_finite() && raw.radii[i - 1].is_finite() && r <= raw.radii[i - 1] {
            errs.push(DomainError::NonMonotoneRadii { index: i });
        }
    }
    for (i, &c) in raw.speeds.iter().enumerate() {
        if !c.is_finite() {
            errs.push(DomainError::NonFinite { field: "speeds", index: i });
        } else if c <= 0.0 {
            errs.push(DomainError::NonPositiveSpeed { index: i });
        }
    }
    if !raw.a0.is_finite() {
        errs.push(DomainError::NonFinite { field: "a0", index: 0 });
    } else if raw.a0 < 0.0 {
        errs.push(DomainError::NegativeDissipation);
    }
    if !errs.is_empty() {
        return Err(DomainErrors(errs));
    }
    Ok(LayeredBallDomain {
        radii: raw.radii.iter().map(|&r| T::of(r)).collect(),
        speeds: raw.speeds.iter().map(|&c| T::of(c)).collect(),
        a0: T::of(raw.a0),
        inner_bc: raw.inner_bc,
    })
}

impl<T: Real> LayeredBallDomain<T> {
    /// Convenience constructor running the same checks as [`validate_domain`].
    pub fn new(radii: &[f64], speeds: &[f64], a0: f64, inner_bc: InnerBc) -> Result<Self, DomainErrors> {
        validate_domain(&DomainConfig {
            radii: radii.to_vec(),
            speeds: speeds.to_vec(),
            a0,
            inner_bc,
        })
    }

    pub fn to_config(&self) -> DomainConfig {
        DomainConfig {
            radii: self.radii.iter().map(|r| r.to_f64_lossy()).collect(),
            speeds: self.speeds.iter().map(|c| c.to_f64_lossy()).collect(),
            a0: self.a0.to_f64_lossy(),
            inner_bc: self.inner_bc,
        }
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }
    pub fn speeds(&self) -> &[T] {
        &self.speeds
    }
    pub fn a0(&self) -> T {
        self.a0
    }
    pub fn inner_bc(&self) -> InnerBc {
        self.inner_bc
    }
    pub fn n_layers(&self) -> usize {
        self.speeds.len()
    }
    pub fn inner_radius(&self) -> T {
        self.radii[0]
    }
    pub fn outer_radius(&self) -> T {
        *self.radii.last().expect("validated domain has radii")
    }
    pub fn min_speed(&self) -> T {
        self.speeds.iter().copied().fold(T::infinity(), T::min)
    }
    pub fn max_speed(&self) -> T {
        self.speeds.iter().copied().fold(T::zero(), T::max)
    }

    /// `(r_in, r_out, c)` for each shell, innermost first.
    pub fn layers(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.speeds
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.radii[k], self.radii[k + 1], c))
    }

    pub fn with_a0(&self, a0: T) -> Self {
        assert!(a0 >= T::zero());
        Self { a0, ..self.clone() }
    }

    /// Same domain with an interface of equal speeds inserted at `r`.
    pub fn split_at(&self, r: T) -> Self {
        let k = self
            .layers()
            .position(|(a, b, _)| a < r && r < b)
            .expect("split radius strictly inside a layer");
        let mut radii = self.radii.clone();
        let mut speeds = self.speeds.clone();
        radii.insert(k + 1, r);
        speeds.insert(k, speeds[k]);
        Self { radii, speeds, ..self.clone() }
    }

    /// All radii multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        assert!(s > T::zero());
        Self {
            radii: self.radii.iter().map(|&r| r * s).collect(),
            ..self.clone()
        }
    }

    /// Time for a wave to cross the whole shell region once.
    pub fn transit_time(&self) -> T {
        self.layers().map(|(a, b, c)| (b - a) / c).sum()
    }
}

/// True iff the speeds strictly decrease outward.
pub fn speeds_monotone<T: Real>(d: &LayeredBallDomain<T>) -> bool {
    d.speeds.windows(2).all(|w| w[0] > w[1])
}

/// The two boundary-row exponents `λ^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    /// `j = 0`: Schrödinger-type row, spectral parameter `z = λ²`.
    Schrodinger,
    /// `j = 1`: damped wave row.
    Wave,
}

impl ProblemKind {
    pub fn from_j(j: u8) -> Option<Self> {
        match j {
            0 => Some(Self::Schrodinger),
            1 => Some(Self::Wave),
            _ => None,
        }
    }
    pub fn j(self) -> u8 {
        match self {
            Self::Schrodinger => 0,
            Self::Wave => 1,
        }
    }
}

/// One decoupled radial problem: kind `j` and angular degree `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeProblem {
    pub kind: ProblemKind,
    pub ell: usize,
}

impl ModeProblem {
    pub fn new(kind: ProblemKind, ell: usize) -> Self {
        Self { kind, ell }
    }
    pub fn j(&self) -> u8 {
        self.kind.j()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid does not match the domain: {0}")]
    GridMismatch(String),
}

/// Sample radii covering `[r_0, r_{m+1}]` with each interface hit exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    r: Vec<T>,
    /// Node index of every radius `r_k`.
    breaks: Vec<usize>,
}

impl<T: Real> RadialGrid<T> {
    /// Roughly `n` intervals in total, split across layers by thickness
    /// (never fewer than two per layer).
    pub fn with_intervals(d: &LayeredBallDomain<T>, n: usize) -> Self {
        let total = d.outer_radius() - d.inner_radius();
        let counts = d
            .layers()
            .map(|(a, b, _)| {
                let share = (T::of_usize(n) * (b - a) / total).round().to_usize().unwrap_or(2);
                share.max(2)
            })
            .collect::<Vec<_>>();
        Self::from_counts(d, &counts)
    }

    /// Uniform spacing at most `dr` inside every layer.
    pub fn with_spacing(d: &LayeredBallDomain<T>, dr: T) -> Self {
        assert!(dr > T::zero());
        let counts = d
            .layers()
            .map(|(a, b, _)| ((b - a) / dr - T::of(1e-9)).ceil().to_usize().unwrap_or(1).max(2))
            .collect::<Vec<_>>();
        Self::from_counts(d, &counts)
    }

    /// Spacing at most `dr·c_k/max c` in layer `k`: equal travel time per
    /// cell everywhere, so every layer has the same discrete cutoff frequency.
    pub fn with_optical_spacing(d: &LayeredBallDomain<T>, dr: T) -> Self {
        assert!(dr > T::zero());
        let cmax = d.max_speed();
        let counts = d
            .layers()
            .map(|(a, b, c)| ((b - a) * cmax / (c * dr) - T::of(1e-9)).ceil().to_usize().unwrap_or(1).max(2))
            .collect::<Vec<_>>();
        Self::from_counts(d, &counts)
    }

    fn from_counts(d: &LayeredBallDomain<T>, counts: &[usize]) -> Self {
        let mut r = vec![d.inner_radius()];
        let mut breaks = vec![0];
        for ((a, b, _), &n) in d.layers().zip(counts) {
            let h = (b - a) / T::of_usize(n);
            for i in 1..n {
                r.push(a + h * T::of_usize(i));
            }
            r.push(b);
            breaks.push(r.len() - 1);
        }
        Self { r, breaks }
    }

    /// Adopts an explicit set of radii after checking it against `d`.
    pub fn from_radii(d: &LayeredBallDomain<T>, r: Vec<T>) -> Result<Self, GridError> {
        if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GridError::GridMismatch("radii must be strictly increasing".into()));
        }
        let mut breaks = Vec::with_capacity(d.radii().len());
        for (k, &rk) in d.radii().iter().enumerate() {
            match r.iter().position(|&x| x == rk) {
                Some(i) => breaks.push(i),
                None => return Err(GridError::GridMismatch(format!("radius r_{k} is not a grid node"))),
            }
        }
        if breaks[0] != 0 || *breaks.last().unwrap() != r.len() - 1 {
            return Err(GridError::GridMismatch("grid must end at the inner and outer radii".into()));
        }
        Ok(Self { r, breaks })
    }

    pub fn radii(&self) -> &[T] {
        &self.r
    }
    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    /// Node index range `[start, end]` (inclusive) of layer `k`.
    pub fn layer_nodes(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        self.breaks[k]..=self.breaks[k + 1]
    }

    pub(crate) fn check(&self, d: &LayeredBallDomain<T>) -> Result<(), GridError> {
        if self.breaks.len() != d.radii().len()
            || self.breaks.iter().zip(d.radii()).any(|(&i, &rk)| self.r[i] != rk)
        {
            return Err(GridError::GridMismatch("interfaces do not coincide with domain radii".into()));
        }
        Ok(())
    }

    /// Per-node trapezoid weights inside each layer (layers never straddled).
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let mut w = vec![T::zero(); self.r.len()];
        let half = T::of(0.5);
        for i in 0..self.r.len() - 1 {
            let h = self.r[i + 1] - self.r[i];
            w[i] = w[i] + half * h;
            w[i + 1] = w[i + 1] + half * h;
        }
        w
    }
}

/// Complex samples of a radial factor `R(r)` on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T> {
    pub grid: RadialGrid<T>,
    pub values: Vec<Cx<T>>,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: RadialGrid<T>, values: Vec<Cx<T>>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid<T>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Cx::new(T::zero(), T::zero()); n] }
    }

    pub fn from_fn(grid: RadialGrid<T>, f: impl Fn(T) -> Cx<T>) -> Self {
        let values = grid.radii().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }
}

/// Composite trapezoid of `f(i)` over every layer.
fn layer_trapezoid<T: Real>(d: &LayeredBallDomain<T>, g: &RadialGrid<T>, f: impl Fn(usize, usize) -> T) -> T {
    let r = g.radii();
    let half = T::of(0.5);
    let mut acc = T::zero();
    for k in 0..d.n_layers() {
        let nodes = g.layer_nodes(k);
        let (s, e) = (*nodes.start(), *nodes.end());
        for i in s..e {
            acc = acc + half * (r[i + 1] - r[i]) * (f(k, i) + f(k, i + 1));
        }
    }
    acc
}

/// `∫ |R|² r²/c² dr`, trapezoid per layer.
pub fn h_norm_mode<T: Real>(d: &LayeredBallDomain<T>, f: &RadialField<T>) -> Result<T, GridError> {
    f.grid.check(d)?;
    let r = f.grid.radii();
    Ok(layer_trapezoid(d, &f.grid, |k, i| {
        let c = d.speeds()[k];
        f.values[i].norm_sqr() * r[i] * r[i] / (c * c)
    }))
}

/// Second-order derivative of the samples inside one layer; one-sided at its ends.
pub(crate) fn layer_derivative<T: Real>(r: &[T], v: &[Cx<T>], out: &mut [Cx<T>]) {
    let n = r.len();
    debug_assert!(n >= 2);
    if n == 2 {
        let d = (v[1] - v[0]) / (r[1] - r[0]);
        out[0] = d;
        out[1] = d;
        return;
    }
    // three-point weights on a possibly non-uniform stencil, derivative at x
    let w3 = |x0: T, x1: T, x2: T, x: T| {
        let a = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let b = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let c = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        (a, b, c)
    };
    for i in 0..n {
        let s = i.clamp(1, n - 2) - 1;
        let (a, b, c) = w3(r[s], r[s + 1], r[s + 2], r[i]);
        out[i] = v[s] * a + v[s + 1] * b + v[s + 2] * c;
    }
}

/// `∫ (|R'|² + ℓ(ℓ+1)|R|²/r² + |R_t|²/c²) r² dr`, derivative taken per layer.
pub fn energy_norm_mode<T: Real>(
    d: &LayeredBallDomain<T>,
    f: &RadialField<T>,
    f_t: &RadialField<T>,
    ell: usize,
) -> Result<T, GridError> {
    f.grid.check(d)?;
    f_t.grid.check(d)?;
    if f.grid != f_t.grid {
        return Err(GridError::GridMismatch("value and rate fields on different grids".into()));
    }
    let g = &f.grid;
    let r = g.radii();
    let ll = T::of_usize(ell * (ell + 1));
    // derivative is double-valued at interfaces, so keep one slice per layer
    let mut per_layer: Vec<Vec<Cx<T>>> = Vec::with_capacity(d.n_layers());
    for k in 0..d.n_layers() {
        let nodes = g.layer_nodes(k);
        let (s, e) = (*nodes.start(), *nodes.end());
        let mut out = vec![Cx::new(T::zero(), T::zero()); e - s + 1];
        layer_derivative(&r[s..=e], &f.values[s..=e], &mut out);
        per_layer.push(out);
    }
    Ok(layer_trapezoid(d, g, |k, i| {
        let c = d.speeds()[k];
        let dr = per_layer[k][i - g.breaks()[k]];
        let rr = r[i] * r[i];
        dr.norm_sqr() * rr + ll * f.values[i].norm_sqr() + f_t.values[i].norm_sqr() * rr / (c * c)
    }))
}
