//! Transfer-matrix characteristic functions and their complex zeros.
//!
//! In a shell of speed `c` every radial solution is a combination of
//! `j_ℓ(λr/c)` and `y_ℓ(λr/c)`. Cauchy data `(R, R')` are continuous across
//! interfaces, so propagating them shell by shell from the inner boundary gives
//! the unique (up to scale) inner-admissible solution at the outer sphere,
//! where the boundary row `R' + iλ^j a₀ R` is evaluated.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InnerBc, LayeredBallDomain, ModeProblem, ProblemKind};
use crate::num::{cx, imag_unit, max_abs, pow_j, re, Cx, Real};
use crate::special::{sph_j, sph_y, SpecialError, SphericalBesselValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("the radial basis is singular at λ = 0")]
    SingularBasis,
    #[error("search box contains λ = 0 (λ ≠ 0 is required){0}")]
    ZeroInBox(&'static str),
    #[error("invalid search box: {0}")]
    InvalidBox(String),
    #[error("a root lies on or too close to the contour near {re} + {im}i")]
    ContourNearRoot { re: f64, im: f64 },
    #[error("Newton iteration did not converge near {re} + {im}i (residual {residual:e})")]
    NonConvergedNewton { re: f64, im: f64, residual: f64 },
    #[error("characteristic function lost to cancellation near {re} + {im}i (noise floor {floor:e}); lower the box's Im λ")]
    PrecisionLoss { re: f64, im: f64, floor: f64 },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Cauchy data `(R, R')` implicitly multiplied by `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState<T> {
    pub value: Cx<T>,
    pub deriv: Cx<T>,
    pub log_scale: T,
}

impl<T: Real> BoundaryState<T> {
    /// Rescales so that `max(|value|, |deriv|) = 1`.
    pub fn normalized(value: Cx<T>, deriv: Cx<T>, log_scale: T) -> Self {
        let m = max_abs(value, deriv);
        if m == T::zero() || !m.is_finite() {
            return Self { value, deriv, log_scale };
        }
        Self {
            value: value / m,
            deriv: deriv / m,
            log_scale: log_scale + m.ln(),
        }
    }

    /// Plain values; may overflow for extreme scales.
    pub fn unscaled(&self) -> (Cx<T>, Cx<T>) {
        let s = self.log_scale.exp();
        (self.value * s, self.deriv * s)
    }
}

/// Admissible Cauchy data at the inner sphere.
pub fn seed_state<T: Real>(bc: InnerBc) -> BoundaryState<T> {
    let (v, d) = match bc {
        InnerBc::Dirichlet => (T::zero(), T::one()),
        InnerBc::Neumann => (T::one(), T::zero()),
    };
    BoundaryState { value: re(v), deriv: re(d), log_scale: T::zero() }
}

/// A shell solution `R = A j_ℓ(κr) + B y_ℓ(κr)` with scaled coefficients
/// (`A = a·e^{sa}`, `B = b·e^{sb}`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerCoeffs<T> {
    pub kappa: Cx<T>,
    pub a: Cx<T>,
    pub sa: T,
    pub b: Cx<T>,
    pub sb: T,
    /// Magnitudes of the products `a` and `b` were formed from (same scale).
    pub a_terms: T,
    pub b_terms: T,
}

/// Expands Cauchy data at `r` in the shell basis, via the Wronskian `1/z²`.
pub(crate) fn coeffs_from_state<T: Real>(
    kappa: Cx<T>,
    r: T,
    s: &BoundaryState<T>,
    jv: &SphericalBesselValue<T>,
    yv: &SphericalBesselValue<T>,
) -> LayerCoeffs<T> {
    let z = kappa * r;
    let z2 = z * z;
    let dk = s.deriv / kappa;
    let (a1, a2) = (z2 * s.value * yv.df, z2 * dk * yv.f);
    let (b1, b2) = (z2 * dk * jv.f, z2 * s.value * jv.df);
    LayerCoeffs {
        kappa,
        a: a1 - a2,
        sa: s.log_scale + yv.log_scale,
        b: b1 - b2,
        sb: s.log_scale + jv.log_scale,
        a_terms: a1.norm().max(a2.norm()),
        b_terms: b1.norm().max(b2.norm()),
    }
}

/// Cauchy data of the shell solution at the point where `jv`, `yv` were taken.
pub(crate) fn eval_coeffs<T: Real>(
    c: &LayerCoeffs<T>,
    jv: &SphericalBesselValue<T>,
    yv: &SphericalBesselValue<T>,
) -> BoundaryState<T> {
    eval_coeffs_with_terms(c, jv, yv).0
}

/// As [`eval_coeffs`], also returning the log-magnitude of the largest product
/// entering the result, counting the products that formed the coefficients
/// (the scale on which cancellation errors are committed).
pub(crate) fn eval_coeffs_with_terms<T: Real>(
    c: &LayerCoeffs<T>,
    jv: &SphericalBesselValue<T>,
    yv: &SphericalBesselValue<T>,
) -> (BoundaryState<T>, T) {
    let e1 = c.sa + jv.log_scale;
    let e2 = c.sb + yv.log_scale;
    let (m1, m2) = (c.a_terms, c.b_terms);
    // a vanishing coefficient must not drag the common exponent along
    let m = match (m1 > T::zero(), m2 > T::zero()) {
        (true, true) => e1.max(e2),
        (true, false) => e1,
        (false, true) => e2,
        (false, false) => {
            let z = re(T::zero());
            return (BoundaryState { value: z, deriv: z, log_scale: T::zero() }, T::neg_infinity());
        }
    };
    let w1 = if m1 > T::zero() { (e1 - m).exp() } else { T::zero() };
    let w2 = if m2 > T::zero() { (e2 - m).exp() } else { T::zero() };
    let (tv1, tv2) = (c.a * jv.f * w1, c.b * yv.f * w2);
    let (td1, td2) = (c.kappa * c.a * jv.df * w1, c.kappa * c.b * yv.df * w2);
    let terms = (m1 * w1 * jv.f.norm().max(c.kappa.norm() * jv.df.norm()))
        .max(m2 * w2 * yv.f.norm().max(c.kappa.norm() * yv.df.norm()));
    let st = BoundaryState::normalized(tv1 + tv2, td1 + td2, m);
    (st, m + terms.ln())
}

/// Carries Cauchy data from `r_a` to `r_b` inside one shell of speed `c`.
pub(crate) fn step_layer<T: Real>(
    ell: usize,
    lambda: Cx<T>,
    c: T,
    r_a: T,
    r_b: T,
    s: &BoundaryState<T>,
) -> Result<(BoundaryState<T>, T), SpectralError> {
    let kappa = lambda / c;
    let ja = sph_j(ell, kappa * r_a);
    let ya = sph_y(ell, kappa * r_a)?;
    let co = coeffs_from_state(kappa, r_a, s, &ja, &ya);
    let jb = sph_j(ell, kappa * r_b);
    let yb = sph_y(ell, kappa * r_b)?;
    Ok(eval_coeffs_with_terms(&co, &jb, &yb))
}

fn propagate_terms<T: Real>(
    d: &LayeredBallDomain<T>,
    ell: usize,
    lambda: Cx<T>,
    s: BoundaryState<T>,
) -> Result<(BoundaryState<T>, T), SpectralError> {
    if lambda.norm() == T::zero() {
        return Err(SpectralError::SingularBasis);
    }
    let mut st = (s, s.log_scale);
    for (a, b, c) in d.layers() {
        st = step_layer(ell, lambda, c, a, b, &st.0)?;
    }
    Ok(st)
}

/// Propagates inner Cauchy data through every shell to the outer sphere.
pub fn propagate<T: Real>(
    d: &LayeredBallDomain<T>,
    ell: usize,
    lambda: Cx<T>,
    s: BoundaryState<T>,
) -> Result<BoundaryState<T>, SpectralError> {
    Ok(propagate_terms(d, ell, lambda, s)?.0)
}

/// Propagates outer Cauchy data inward to the inner sphere.
pub fn propagate_inward<T: Real>(
    d: &LayeredBallDomain<T>,
    ell: usize,
    lambda: Cx<T>,
    s: BoundaryState<T>,
) -> Result<BoundaryState<T>, SpectralError> {
    if lambda.norm() == T::zero() {
        return Err(SpectralError::SingularBasis);
    }
    let layers: Vec<_> = d.layers().collect();
    let mut st = s;
    for &(a, b, c) in layers.iter().rev() {
        st = step_layer(ell, lambda, c, b, a, &st)?.0;
    }
    Ok(st)
}

/// Boundary-row value `d·exp(log_scale)`; `d` is relative to the Cauchy-data envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicValue<T> {
    pub d: Cx<T>,
    pub log_scale: T,
    /// Log-magnitude of the largest basis term summed in the outermost shell.
    pub log_terms: T,
}

impl<T: Real> CharacteristicValue<T> {
    /// `|D|` relative to the terms it was summed from.
    pub fn relative_residual(&self) -> T {
        let rel = (self.log_scale - self.log_terms).exp().min(T::one());
        self.d.norm() * rel
    }
}

/// `D(λ) = R'(r_{m+1}) + iλ^j a₀ R(r_{m+1})` for the inner-admissible solution.
pub fn characteristic<T: Real>(
    d: &LayeredBallDomain<T>,
    mp: ModeProblem,
    lambda: Cx<T>,
) -> Result<CharacteristicValue<T>, SpectralError> {
    let (st, log_terms) = propagate_terms(d, mp.ell, lambda, seed_state(d.inner_bc()))?;
    let row = imag_unit::<T>() * pow_j(lambda, mp.j()) * d.a0();
    Ok(CharacteristicValue { d: st.deriv + row * st.value, log_scale: st.log_scale, log_terms })
}

/// Axis-aligned rectangle in the complex λ plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
}

impl<T: Real> Rect<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Self {
        Self { re_min, re_max, im_min, im_max }
    }
    pub fn width(&self) -> T {
        self.re_max - self.re_min
    }
    pub fn height(&self) -> T {
        self.im_max - self.im_min
    }
    pub fn contains(&self, z: Cx<T>) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
    /// Closed rectangle contains the origin.
    pub fn contains_zero(&self) -> bool {
        self.contains(re(T::zero()))
    }
    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, z: Cx<T>) -> T {
        (z.re - self.re_min)
            .min(self.re_max - z.re)
            .min(z.im - self.im_min)
            .min(self.im_max - z.im)
    }
    fn corners(&self) -> [Cx<T>; 4] {
        [
            cx(self.re_min, self.im_min),
            cx(self.re_max, self.im_min),
            cx(self.re_max, self.im_max),
            cx(self.re_min, self.im_max),
        ]
    }
    fn center(&self) -> Cx<T> {
        cx(
            (self.re_min + self.re_max) * T::of(0.5),
            (self.im_min + self.im_max) * T::of(0.5),
        )
    }
    fn split(&self, frac: T) -> (Self, Self) {
        if self.width() >= self.height() {
            let x = self.re_min + frac * self.width();
            (Self { re_max: x, ..*self }, Self { re_min: x, ..*self })
        } else {
            let y = self.im_min + frac * self.height();
            (Self { im_max: y, ..*self }, Self { im_min: y, ..*self })
        }
    }
    fn expanded(&self, by: T) -> Self {
        Self::new(self.re_min - by, self.re_max + by, self.im_min - by, self.im_max + by)
    }
    /// Every side moved outward by `by`, except that a side which would cross
    /// the origin's abscissa or ordinate moves inward instead.
    fn perturbed(&self, by: T) -> Self {
        let z = T::zero();
        let lo = |v: T| if v > z && v - by <= z { v + by } else { v - by };
        let hi = |v: T| if v < z && v + by >= z { v - by } else { v + by };
        Self::new(lo(self.re_min), hi(self.re_max), lo(self.im_min), hi(self.im_max))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FindOptions<T> {
    /// Newton stopping tolerance on the step, relative to `max(1, |λ|)`.
    pub newton_tol: T,
    pub max_newton: usize,
    /// Initial sample spacing along contour edges; `None` derives it from
    /// the optical depth of the domain.
    pub edge_step: Option<T>,
    /// Residual `|D|` (relative to the Cauchy-data envelope) a root must meet.
    pub residual_tol: T,
    pub max_depth: usize,
}

impl<T: Real> Default for FindOptions<T> {
    fn default() -> Self {
        Self {
            newton_tol: T::of(1e-12),
            max_newton: 60,
            edge_step: None,
            residual_tol: T::of(1e-9),
            max_depth: 48,
        }
    }
}

/// One polished zero with the certified leaf box it was found in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub lambda: Cx<T>,
    /// `λ²` for the Schrödinger-type problem.
    pub z: Option<Cx<T>>,
    pub residual: T,
    pub leaf: Rect<T>,
    pub ell: usize,
    pub j: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport<T> {
    pub roots: Vec<Root<T>>,
    /// The rectangle actually certified (may be slightly enlarged after a retry).
    pub search_box: Rect<T>,
    /// Argument-principle count over `search_box`.
    pub winding: usize,
    /// Minimum `Im λ` over the roots; `+∞` when there are none.
    pub gap: T,
}

impl<T: Real> SpectrumReport<T> {
    /// True iff every certified count matches the listed roots.
    pub fn counts_consistent(&self) -> bool {
        self.winding == self.roots.len()
    }
}

/// Largest rounding floor of `D` (in units of the envelope) a contour sample may carry.
pub const MAX_NOISE_FLOOR: f64 = 1e-3;

const SPLIT_FRACTIONS: [f64; 4] = [0.4937, 0.4601, 0.5319, 0.4213];

struct Searcher<'a, T> {
    d: &'a LayeredBallDomain<T>,
    mp: ModeProblem,
    opts: FindOptions<T>,
    h: T,
}

impl<'a, T: Real> Searcher<'a, T> {
    fn eval(&self, lambda: Cx<T>) -> Result<CharacteristicValue<T>, SpectralError> {
        characteristic(self.d, self.mp, lambda)
    }

    fn near_root(&self, z: Cx<T>) -> SpectralError {
        SpectralError::ContourNearRoot { re: z.re.to_f64_lossy(), im: z.im.to_f64_lossy() }
    }

    fn segment(
        &self,
        pa: Cx<T>,
        da: Cx<T>,
        pb: Cx<T>,
        db: Cx<T>,
        depth: usize,
    ) -> Result<T, SpectralError> {
        let delta = (db / da).arg();
        if delta.abs() <= T::of(PI / 4.0) {
            return Ok(delta);
        }
        let scale = T::one().max(pa.norm());
        if depth >= 40 || (pb - pa).norm() < T::of(1e-7) * scale {
            return Err(self.near_root((pa + pb) * T::of(0.5)));
        }
        let pm = (pa + pb) * T::of(0.5);
        let dm = self.sample(pm)?;
        Ok(self.segment(pa, da, pm, dm, depth + 1)? + self.segment(pm, dm, pb, db, depth + 1)?)
    }

    fn sample(&self, z: Cx<T>) -> Result<Cx<T>, SpectralError> {
        let v = self.eval(z)?;
        let floor = T::epsilon() * (v.log_terms - v.log_scale).exp();
        if floor > T::of(MAX_NOISE_FLOOR) {
            return Err(SpectralError::PrecisionLoss {
                re: z.re.to_f64_lossy(),
                im: z.im.to_f64_lossy(),
                floor: floor.to_f64_lossy(),
            });
        }
        if v.d.norm() == T::zero() || !v.d.norm().is_finite() {
            return Err(self.near_root(z));
        }
        Ok(v.d)
    }

    fn edge_phase(&self, a: Cx<T>, b: Cx<T>) -> Result<T, SpectralError> {
        let len = (b - a).norm();
        let n = (len / self.h).ceil().to_usize().unwrap_or(1).max(1);
        let pts: Vec<Cx<T>> = (0..=n).map(|k| a + (b - a) * (T::of_usize(k) / T::of_usize(n))).collect();
        let vals: Vec<Cx<T>> = pts.par_iter().map(|&z| self.sample(z)).collect::<Result<_, _>>()?;
        let mut total = T::zero();
        for k in 0..n {
            total = total + self.segment(pts[k], vals[k], pts[k + 1], vals[k + 1], 0)?;
        }
        Ok(total)
    }

    /// Number of zeros enclosed by the positively oriented boundary of `r`.
    fn winding(&self, r: &Rect<T>) -> Result<usize, SpectralError> {
        let c = r.corners();
        let mut total = T::zero();
        for k in 0..4 {
            total = total + self.edge_phase(c[k], c[(k + 1) % 4])?;
        }
        let w = total / T::of(2.0 * PI);
        let n = w.round();
        if (w - n).abs() > T::of(0.05) || n < T::zero() {
            return Err(self.near_root(r.center()));
        }
        Ok(n.to_usize().unwrap_or(0))
    }

    fn newton(&self, start: Cx<T>) -> Result<(Cx<T>, T, bool), SpectralError> {
        let mut lam = start;
        let mut last_step = T::infinity();
        for _ in 0..self.opts.max_newton {
            let hstep = T::of(1e-6) * T::one().max(lam.norm());
            let d0 = self.eval(lam)?;
            if d0.d.norm() == T::zero() {
                return Ok((lam, T::zero(), true));
            }
            let dp = self.eval(lam + hstep)?;
            let dm = self.eval(lam - hstep)?;
            let rp = dp.d / d0.d * (dp.log_scale - d0.log_scale).exp();
            let rm = dm.d / d0.d * (dm.log_scale - d0.log_scale).exp();
            let logder = (rp - rm) / (hstep + hstep);
            if !logder.norm().is_finite() || logder.norm() == T::zero() {
                break;
            }
            let step = logder.inv();
            lam = lam - step;
            last_step = step.norm();
            if last_step < self.opts.newton_tol * T::one().max(lam.norm()) {
                let res = self.eval(lam)?.relative_residual();
                return Ok((lam, res, true));
            }
        }
        let res = self.eval(lam)?.relative_residual();
        // roundoff can keep the last step just above a very tight tolerance
        let ok = res < self.opts.residual_tol && last_step < T::of(1e-8) * T::one().max(lam.norm());
        Ok((lam, res, ok))
    }

    fn search(&self, r: Rect<T>, w: usize, depth: usize) -> Result<Vec<Root<T>>, SpectralError> {
        if w == 0 {
            return Ok(Vec::new());
        }
        let diam = r.width().max(r.height());
        // below this the contour refinement cannot separate the edges from a root
        let tiny = diam < T::of(1e-6) * T::one().max(r.center().norm());
        if w == 1 || tiny || depth >= self.opts.max_depth {
            let (lam, res, ok) = self.newton(r.center())?;
            let slack = T::of(1e-10) * T::one().max(lam.norm());
            let inside = r.expanded(slack).contains(lam);
            if ok && inside && res < self.opts.residual_tol {
                let root = Root {
                    lambda: lam,
                    z: (self.mp.kind == ProblemKind::Schrodinger).then(|| lam * lam),
                    residual: res,
                    leaf: r,
                    ell: self.mp.ell,
                    j: self.mp.j(),
                };
                // a degenerate leaf keeps its full multiplicity
                return Ok(vec![root; w]);
            }
            if tiny || depth >= self.opts.max_depth {
                return Err(SpectralError::NonConvergedNewton {
                    re: lam.re.to_f64_lossy(),
                    im: lam.im.to_f64_lossy(),
                    residual: res.to_f64_lossy(),
                });
            }
        }
        let mut last_err = None;
        for &f in SPLIT_FRACTIONS.iter() {
            let (left, right) = r.split(T::of(f));
            let wl = match self.winding(&left) {
                Ok(wl) if wl <= w => wl,
                Ok(_) => continue,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            // children handle their own split retries; failures propagate
            let (a, b) = rayon::join(
                || self.search(left, wl, depth + 1),
                || self.search(right, w - wl, depth + 1),
            );
            let mut a = a?;
            a.extend(b?);
            return Ok(a);
        }
        Err(last_err.unwrap_or_else(|| self.near_root(r.center())))
    }
}

/// Optical depth `Σ (r_k − r_{k−1}) / c_k` of the shells.
fn optical_depth<T: Real>(d: &LayeredBallDomain<T>) -> T {
    d.layers().map(|(a, b, c)| (b - a) / c).sum()
}

/// Locates every zero of the characteristic function inside `rect`.
///
/// The count is certified by the argument principle (accumulated phase of `D`
/// along adaptively refined edges); the box is bisected until each piece holds
/// one zero, which Newton then polishes. For the Schrödinger-type problem the
/// search runs in `λ` with `Re λ > 0` and each root also carries `z = λ²`.
pub fn find_roots<T: Real>(
    d: &LayeredBallDomain<T>,
    mp: ModeProblem,
    rect: Rect<T>,
    opts: &FindOptions<T>,
) -> Result<SpectrumReport<T>, SpectralError> {
    if !(rect.width() > T::zero() && rect.height() > T::zero()) {
        return Err(SpectralError::InvalidBox("box must have positive width and height".into()));
    }
    if rect.contains_zero() {
        return Err(SpectralError::ZeroInBox(""));
    }
    if mp.kind == ProblemKind::Schrodinger && rect.re_min <= T::zero() {
        return Err(SpectralError::ZeroInBox(" (Schrödinger-type search requires Re λ > 0)"));
    }
    let h = opts
        .edge_step
        .unwrap_or_else(|| T::of(0.2) / optical_depth(d))
        .min(rect.width().max(rect.height()) / T::of(4.0));
    let s = Searcher { d, mp, opts: *opts, h };

    let size = rect.width().max(rect.height());
    let mut last_err = None;
    for attempt in 0..=3usize {
        // move the sides by a few irregular multiples of a small fraction of the box
        let bump = size * T::of(1e-3 * [0.0, 1.0, 2.718, 4.669][attempt]);
        let r = rect.perturbed(bump);
        let w = match s.winding(&r) {
            Ok(w) => w,
            Err(e @ SpectralError::ContourNearRoot { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut roots = match s.search(r, w, 0) {
            Ok(v) => v,
            Err(e @ SpectralError::ContourNearRoot { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let close = roots
            .iter()
            .find(|rt| r.boundary_distance(rt.lambda) < T::of(1e-6));
        if let Some(rt) = close {
            last_err = Some(s.near_root(rt.lambda));
            continue;
        }
        roots.sort_by(|a, b| {
            a.lambda
                .re
                .partial_cmp(&b.lambda.re)
                .unwrap()
                .then(a.lambda.im.partial_cmp(&b.lambda.im).unwrap())
        });
        let gap = roots.iter().map(|rt| rt.lambda.im).fold(T::infinity(), T::min);
        return Ok(SpectrumReport { roots, search_box: r, winding: w, gap });
    }
    Err(last_err.unwrap_or(SpectralError::ContourNearRoot { re: f64::NAN, im: f64::NAN }))
}

/// Depth below the real axis included in band searches.
pub const BAND_UNDERSHOOT: f64 = 0.05;

/// Minimum `Im λ` over the roots with `Re λ ∈ [re_min, re_max]`, `Im λ ≤ im_max`.
pub fn spectral_gap<T: Real>(
    d: &LayeredBallDomain<T>,
    mp: ModeProblem,
    re_min: T,
    re_max: T,
    im_max: T,
    opts: &FindOptions<T>,
) -> Result<(T, SpectrumReport<T>), SpectralError> {
    if !(re_max > re_min) || !(im_max > T::zero()) {
        return Err(SpectralError::InvalidBox("band needs re_max > re_min and im_max > 0".into()));
    }
    let rect = Rect::new(re_min, re_max, -T::of(BAND_UNDERSHOOT), im_max);
    let rep = find_roots(d, mp, rect, opts)?;
    let gap = rep
        .roots
        .iter()
        .filter(|rt| rt.lambda.re >= re_min && rt.lambda.re <= re_max)
        .map(|rt| rt.lambda.im)
        .fold(T::infinity(), T::min);
    Ok((gap, rep))
}
