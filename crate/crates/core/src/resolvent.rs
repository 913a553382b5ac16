//! Per-mode resolvents through their Green kernels, operator norms and the
//! outgoing Dirichlet-to-Neumann coefficient.
//!
//! For one angular degree the stationary problem `(λ² + c²Δ_ℓ)u = V` is the
//! Sturm–Liouville equation `(r²u')' + (λ²r²/c² − ℓ(ℓ+1))u = r²V/c²`, whose
//! Green kernel is `G(r,s) = φ(r_<)ψ(r_>)/pw` with `φ` admissible at the inner
//! sphere, `ψ` admissible at the outer end and `pw = r²(φψ' − φ'ψ)` constant.
//! Because `G` is sampled exactly, the discrete operator is exact up to the
//! trapezoid weights, and `K = D G D` (`D² = trapezoid weight · r²/c²`) is a
//! semiseparable matrix with an `O(n)` product.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{GridError, InnerBc, LayeredBallDomain, ProblemKind, RadialField, RadialGrid};
use crate::num::{cx, imag_unit, pow_j, re, Cx, Real};
use crate::spectral::{coeffs_from_state, eval_coeffs, seed_state, BoundaryState, LayerCoeffs, SpectralError};
use crate::special::{sph_h_radiating, sph_h_radiating_range, sph_j_range, sph_y_range, SpecialError, SphericalBesselValue};

/// Below this value of `|pw| / (r²(|φ||ψ'| + |φ'||ψ|))` the Green kernel is
/// considered numerically singular.
pub const NEAR_EIGENVALUE_THRESHOLD: f64 = 1e-10;

pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 500;
pub const DEFAULT_QUADRATURE_N: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError {
    #[error("λ = {re} + {im}i is numerically an eigenvalue (Wronskian conditioning {conditioning:e})")]
    NearEigenvalue { re: f64, im: f64, conditioning: f64 },
    #[error("cutoff radius {cutoff} must exceed the last interface {last}")]
    InvalidCutoff { cutoff: f64, last: f64 },
    #[error("invalid exterior domain: {0}")]
    InvalidExterior(String),
    #[error("spectral parameter must be nonzero")]
    ZeroLambda,
    #[error("mode-norm tail not decreasing at λ = {lambda} after {extensions} extensions")]
    TailNotDecreasing { lambda: f64, extensions: usize },
    #[error("glancing fit needs at least {need} distinct positive values spanning a factor of 2")]
    TooFewPoints { need: usize },
    #[error("non-positive glancing sample at λ = {lambda}")]
    NonPositiveMax { lambda: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Shells `r_0 < … < r_k` with speeds `c_1..c_k`, surrounded by a homogeneous
/// medium of speed `c_ext` extending to infinity. `k = 0` is a bare obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorDomain<T> {
    radii: Vec<T>,
    speeds: Vec<T>,
    c_ext: T,
    inner_bc: InnerBc,
}

impl<T: Real> ExteriorDomain<T> {
    pub fn new(radii: &[f64], speeds: &[f64], c_ext: f64, inner_bc: InnerBc) -> Result<Self, ResolventError> {
        let bad = |m: &str| Err(ResolventError::InvalidExterior(m.to_string()));
        if radii.is_empty() || speeds.len() + 1 != radii.len() {
            return bad("need k+1 radii and k speeds");
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad("radii must be positive and strictly increasing");
        }
        if speeds.iter().chain(std::iter::once(&c_ext)).any(|&c| !(c > 0.0) || !c.is_finite()) {
            return bad("speeds must be positive");
        }
        Ok(Self {
            radii: radii.iter().map(|&r| T::of(r)).collect(),
            speeds: speeds.iter().map(|&c| T::of(c)).collect(),
            c_ext: T::of(c_ext),
            inner_bc,
        })
    }

    /// The first `k` shells of a bounded domain, with shell `k+1`'s speed
    /// continued to infinity.
    pub fn from_domain(d: &LayeredBallDomain<T>, k: usize) -> Self {
        assert!(k < d.n_layers(), "k must leave an exterior speed");
        Self {
            radii: d.radii()[..=k].to_vec(),
            speeds: d.speeds()[..k].to_vec(),
            c_ext: d.speeds()[k],
            inner_bc: d.inner_bc(),
        }
    }

    pub fn last_radius(&self) -> T {
        *self.radii.last().unwrap()
    }
    pub fn c_ext(&self) -> T {
        self.c_ext
    }
    pub fn min_speed(&self) -> T {
        self.speeds.iter().copied().fold(self.c_ext, T::min)
    }

    /// The region `r_0 ≤ r ≤ cutoff` as a layered domain (`a₀` unused).
    pub fn truncated(&self, cutoff: T) -> Result<LayeredBallDomain<T>, ResolventError> {
        if !(cutoff > self.last_radius()) {
            return Err(ResolventError::InvalidCutoff {
                cutoff: cutoff.to_f64_lossy(),
                last: self.last_radius().to_f64_lossy(),
            });
        }
        let mut radii: Vec<f64> = self.radii.iter().map(|r| r.to_f64_lossy()).collect();
        radii.push(cutoff.to_f64_lossy());
        let mut speeds: Vec<f64> = self.speeds.iter().map(|c| c.to_f64_lossy()).collect();
        speeds.push(self.c_ext.to_f64_lossy());
        Ok(LayeredBallDomain::new(&radii, &speeds, 0.0, self.inner_bc).expect("validated exterior"))
    }
}

/// Where the resolvent lives.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry<T> {
    /// Bounded layered ball with the dissipative boundary row.
    Interior(LayeredBallDomain<T>),
    /// Outgoing exterior problem, observed on `r ≤ cutoff`.
    Exterior { domain: ExteriorDomain<T>, cutoff: T },
}

#[derive(Debug, Clone, Copy)]
enum Outer<T> {
    /// `ψ' = −α ψ` at the outer sphere.
    Impedance(Cx<T>),
    /// `ψ = h_ℓ(λr/c)` throughout the last shell.
    Radiating,
}

/// A geometry resolved into a truncated domain and an outer condition.
#[derive(Debug, Clone)]
struct Setup<T> {
    dom: LayeredBallDomain<T>,
    outer: Outer<T>,
    lambda: Cx<T>,
}

impl<T: Real> Setup<T> {
    fn new(g: &Geometry<T>, kind: ProblemKind, lambda: Cx<T>) -> Result<Self, ResolventError> {
        if lambda.norm() == T::zero() {
            return Err(ResolventError::ZeroLambda);
        }
        Ok(match g {
            Geometry::Interior(d) => Setup {
                dom: d.clone(),
                outer: Outer::Impedance(imag_unit::<T>() * pow_j(lambda, kind.j()) * d.a0()),
                lambda,
            },
            Geometry::Exterior { domain, cutoff } => Setup {
                dom: domain.truncated(*cutoff)?,
                outer: Outer::Radiating,
                lambda,
            },
        })
    }

    fn kappa(&self, k: usize) -> Cx<T> {
        self.lambda / self.dom.speeds()[k]
    }

    fn nlay(&self) -> usize {
        self.dom.n_layers()
    }
}

fn h_state<T: Real>(h: &SphericalBesselValue<T>, kappa: Cx<T>) -> BoundaryState<T> {
    BoundaryState::normalized(h.f, h.df * kappa, h.log_scale)
}

/// Per-layer coefficients of `φ` and `ψ` for a block of degrees, plus `pw`.
struct Coefficients<T> {
    l0: usize,
    /// `phi[k][ℓ − l0]`
    phi: Vec<Vec<LayerCoeffs<T>>>,
    /// `psi[k][ℓ − l0]`; the last shell is absent for radiating problems.
    psi: Vec<Vec<LayerCoeffs<T>>>,
    /// `(pw mantissa, pw log-scale, conditioning)` per degree.
    pw: Vec<(Cx<T>, T, T)>,
}

fn wronskian_at<T: Real>(r: T, p: &BoundaryState<T>, q: &BoundaryState<T>) -> (Cx<T>, T, T) {
    let a = p.value * q.deriv;
    let b = p.deriv * q.value;
    let w = (a - b) * r * r;
    // sine of the angle between the Cauchy data
    let norm = |s: &BoundaryState<T>| (s.value.norm_sqr() + s.deriv.norm_sqr()).sqrt();
    let denom = norm(p) * norm(q) * r * r;
    let cond = if denom > T::zero() { w.norm() / denom } else { T::zero() };
    (w, p.log_scale + q.log_scale, cond)
}

fn coefficients<T: Real>(s: &Setup<T>, l0: usize, l1: usize) -> Result<Coefficients<T>, ResolventError> {
    let nl = s.nlay();
    let radii = s.dom.radii();
    let nb = l1 - l0 + 1;
    // basis values at both ends of every shell
    let mut ends = Vec::with_capacity(nl);
    for k in 0..nl {
        let kap = s.kappa(k);
        let ja = sph_j_range(l0, l1, kap * radii[k]);
        let ya = sph_y_range(l0, l1, kap * radii[k])?;
        let jb = sph_j_range(l0, l1, kap * radii[k + 1]);
        let yb = sph_y_range(l0, l1, kap * radii[k + 1])?;
        ends.push((ja, ya, jb, yb));
    }

    let mut phi = Vec::with_capacity(nl);
    let mut phi_at: Vec<Vec<BoundaryState<T>>> = vec![vec![seed_state(s.dom.inner_bc()); nb]];
    for k in 0..nl {
        let (ja, ya, jb, yb) = &ends[k];
        let kap = s.kappa(k);
        let co: Vec<_> = (0..nb)
            .map(|i| coeffs_from_state(kap, radii[k], &phi_at[k][i], &ja[i], &ya[i]))
            .collect();
        phi_at.push((0..nb).map(|i| eval_coeffs(&co[i], &jb[i], &yb[i])).collect());
        phi.push(co);
    }

    // ψ from the outside in; psi_at[k] holds the state at radii[k]
    let mut psi_at: Vec<Vec<BoundaryState<T>>> = vec![Vec::new(); nl + 1];
    let mut psi: Vec<Vec<LayerCoeffs<T>>> = vec![Vec::new(); nl];
    let first_inward = match s.outer {
        Outer::Impedance(alpha) => {
            psi_at[nl] = vec![BoundaryState::normalized(re(T::one()), -alpha, T::zero()); nb];
            nl
        }
        Outer::Radiating => {
            let kap = s.kappa(nl - 1);
            let hb = sph_h_radiating_range(l0, l1, kap * radii[nl])?;
            let ha = sph_h_radiating_range(l0, l1, kap * radii[nl - 1])?;
            psi_at[nl] = hb.iter().map(|h| h_state(h, kap)).collect();
            psi_at[nl - 1] = ha.iter().map(|h| h_state(h, kap)).collect();
            nl - 1
        }
    };
    for k in (0..first_inward).rev() {
        let (ja, ya, jb, yb) = &ends[k];
        let kap = s.kappa(k);
        let co: Vec<_> = (0..nb)
            .map(|i| coeffs_from_state(kap, radii[k + 1], &psi_at[k + 1][i], &jb[i], &yb[i]))
            .collect();
        psi_at[k] = (0..nb).map(|i| eval_coeffs(&co[i], &ja[i], &ya[i])).collect();
        psi[k] = co;
    }

    // pw from the best-conditioned radius
    let pw = (0..nb)
        .map(|i| {
            (0..=nl)
                .map(|k| wronskian_at(radii[k], &phi_at[k][i], &psi_at[k][i]))
                .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
                .unwrap()
        })
        .collect();
    Ok(Coefficients { l0, phi, psi, pw })
}

/// `φ` and `ψ` on every grid node for a block of degrees.
fn node_states<T: Real>(
    s: &Setup<T>,
    grid: &RadialGrid<T>,
    co: &Coefficients<T>,
    nb: usize,
) -> Result<(Vec<Vec<BoundaryState<T>>>, Vec<Vec<BoundaryState<T>>>), ResolventError> {
    let n = grid.len();
    let r = grid.radii();
    let l1 = co.l0 + nb - 1;
    let zero = BoundaryState { value: re(T::zero()), deriv: re(T::zero()), log_scale: T::zero() };
    let mut phi = vec![vec![zero; n]; nb];
    let mut psi = vec![vec![zero; n]; nb];
    let nl = s.nlay();
    // interface nodes are evaluated in the outer shell (data are continuous)
    let owner: Vec<usize> = (0..n)
        .map(|i| grid.breaks()[..nl].iter().rposition(|&b| b <= i).unwrap_or(0))
        .collect();
    let rows: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_, ResolventError> {
            let k = owner[i];
            let kap = s.kappa(k);
            let z = kap * r[i];
            let jt = sph_j_range(co.l0, l1, z);
            let yt = sph_y_range(co.l0, l1, z)?;
            let radiating = matches!(s.outer, Outer::Radiating) && k == nl - 1;
            let ht = if radiating { Some(sph_h_radiating_range(co.l0, l1, z)?) } else { None };
            let mut out = Vec::with_capacity(nb);
            for b in 0..nb {
                let p = eval_coeffs(&co.phi[k][b], &jt[b], &yt[b]);
                let q = match &ht {
                    Some(h) => h_state(&h[b], kap),
                    None => eval_coeffs(&co.psi[k][b], &jt[b], &yt[b]),
                };
                out.push((p, q));
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    for (i, row) in rows.into_iter().enumerate() {
        for (b, (p, q)) in row.into_iter().enumerate() {
            phi[b][i] = p;
            psi[b][i] = q;
        }
    }
    Ok((phi, psi))
}

/// Node weights `Σ_layers (h/2)·r²/c²` of the weighted trapezoid rule.
fn h_weights<T: Real>(d: &LayeredBallDomain<T>, g: &RadialGrid<T>) -> Vec<T> {
    let r = g.radii();
    let mut w = vec![T::zero(); g.len()];
    let half = T::of(0.5);
    for (k, &c) in d.speeds().iter().enumerate() {
        let nodes = g.layer_nodes(k);
        for i in *nodes.start()..*nodes.end() {
            let h = r[i + 1] - r[i];
            w[i] = w[i] + half * h * r[i] * r[i] / (c * c);
            w[i + 1] = w[i + 1] + half * h * r[i + 1] * r[i + 1] / (c * c);
        }
    }
    w
}

/// Solutions satisfying the inner (`phi`) and outer (`psi`) conditions on a grid.
#[derive(Debug, Clone)]
pub struct FundamentalPair<T> {
    pub grid: RadialGrid<T>,
    pub phi: Vec<BoundaryState<T>>,
    pub psi: Vec<BoundaryState<T>>,
    /// `r²(φψ' − φ'ψ) = pw·exp(pw_log_scale)`.
    pub pw: Cx<T>,
    pub pw_log_scale: T,
    /// `|pw| / (r²(|φ||ψ'| + |φ'||ψ|))` at the radius `pw` was taken from.
    pub conditioning: T,
    domain: LayeredBallDomain<T>,
}

impl<T: Real> FundamentalPair<T> {
    /// `r²(φψ' − φ'ψ)` at every node, relative to [`Self::pw`].
    pub fn pw_profile(&self) -> Vec<Cx<T>> {
        let r = self.grid.radii();
        (0..r.len())
            .map(|i| {
                let (w, s, _) = wronskian_at(r[i], &self.phi[i], &self.psi[i]);
                w / self.pw * (s - self.pw_log_scale).exp()
            })
            .collect()
    }

    /// The domain the grid was built on (truncated for exterior problems).
    pub fn domain(&self) -> &LayeredBallDomain<T> {
        &self.domain
    }
}

/// Builds the fundamental pair on a grid of about `quadrature_n` intervals.
pub fn fundamental_pair<T: Real>(
    geometry: &Geometry<T>,
    kind: ProblemKind,
    ell: usize,
    lambda: Cx<T>,
    quadrature_n: usize,
) -> Result<FundamentalPair<T>, ResolventError> {
    let s = Setup::new(geometry, kind, lambda)?;
    let grid = RadialGrid::with_intervals(&s.dom, quadrature_n);
    fundamental_pair_on(&s, grid, ell)
}

fn fundamental_pair_on<T: Real>(s: &Setup<T>, grid: RadialGrid<T>, ell: usize) -> Result<FundamentalPair<T>, ResolventError> {
    let co = coefficients(s, ell, ell)?;
    let (pw, pw_log_scale, conditioning) = co.pw[0];
    if conditioning < T::of(NEAR_EIGENVALUE_THRESHOLD) && matches!(s.outer, Outer::Impedance(_)) {
        return Err(near(s.lambda, conditioning));
    }
    let (mut phi, mut psi) = node_states(s, &grid, &co, 1)?;
    Ok(FundamentalPair {
        grid,
        phi: phi.pop().unwrap(),
        psi: psi.pop().unwrap(),
        pw,
        pw_log_scale,
        conditioning,
        domain: s.dom.clone(),
    })
}

fn near<T: Real>(lambda: Cx<T>, cond: T) -> ResolventError {
    ResolventError::NearEigenvalue {
        re: lambda.re.to_f64_lossy(),
        im: lambda.im.to_f64_lossy(),
        conditioning: cond.to_f64_lossy(),
    }
}

/// The weighted kernel `K = D G D` in semiseparable form.
#[derive(Debug, Clone)]
pub struct ModeKernel<T> {
    d: Vec<T>,
    phi: Vec<Cx<T>>,
    psi: Vec<Cx<T>>,
    /// `exp(a_{i-1} − a_i)`
    ea: Vec<T>,
    /// `exp(b_{i+1} − b_i)`
    eb: Vec<T>,
    /// `D_i exp(a_i + b_i − P) / p̃`
    c: Vec<Cx<T>>,
}

impl<T: Real> ModeKernel<T> {
    fn new(
        weights: &[T],
        phi: &[BoundaryState<T>],
        psi: &[BoundaryState<T>],
        pw: Cx<T>,
        pw_log: T,
    ) -> Self {
        let n = weights.len();
        let d: Vec<T> = weights.iter().map(|w| w.sqrt()).collect();
        let mut ea = vec![T::one(); n];
        let mut eb = vec![T::one(); n];
        for i in 1..n {
            ea[i] = (phi[i - 1].log_scale - phi[i].log_scale).exp();
        }
        for i in 0..n - 1 {
            eb[i] = (psi[i + 1].log_scale - psi[i].log_scale).exp();
        }
        let c = (0..n)
            .map(|i| pw.inv() * ((phi[i].log_scale + psi[i].log_scale - pw_log).exp() * d[i]))
            .collect();
        Self {
            d,
            phi: phi.iter().map(|s| s.value).collect(),
            psi: psi.iter().map(|s| s.value).collect(),
            ea,
            eb,
            c,
        }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }
    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// `out = K x`.
    pub fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let n = self.len();
        let zero = re(T::zero());
        // backward sums first, stored in out
        let mut t = zero;
        out[n - 1] = zero;
        for i in (0..n - 1).rev() {
            t = (t + self.psi[i + 1] * x[i + 1] * self.d[i + 1]) * self.eb[i];
            out[i] = self.phi[i] * t;
        }
        let mut s = zero;
        for i in 0..n {
            s = s * self.ea[i] + self.phi[i] * x[i] * self.d[i];
            out[i] = self.c[i] * (self.psi[i] * s + out[i]);
        }
    }

    /// `out = K^H x`, using that `K` is complex symmetric.
    pub fn apply_adjoint(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let xc: Vec<Cx<T>> = x.iter().map(|v| v.conj()).collect();
        self.apply(&xc, out);
        for v in out.iter_mut() {
            *v = v.conj();
        }
    }

    /// Frobenius norm, an upper bound for the operator norm.
    pub fn frobenius(&self) -> T {
        let n = self.len();
        let mut q = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            if i > 0 {
                let prev = self.d[i - 1] * self.phi[i - 1].norm();
                q = (q + prev * prev) * self.ea[i] * self.ea[i];
            }
            let row = (self.c[i] * self.psi[i]).norm_sqr();
            let diag = self.d[i] * self.phi[i].norm();
            total = total + row * (q + q + diag * diag);
        }
        total.sqrt()
    }

    /// Dense entry `K_ij` (tests and diagnostics).
    pub fn entry(&self, i: usize, j: usize) -> Cx<T> {
        let (lo, hi) = if j <= i { (j, i) } else { (i, j) };
        let mut f = T::one();
        for k in lo + 1..=hi {
            f = f * self.ea[k];
        }
        self.c[hi] * self.psi[hi] * self.phi[lo] * self.d[lo] * f
    }
}

/// Largest singular value from power iteration on `K^H K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate<T> {
    pub norm: T,
    pub iterations: usize,
    /// Set when the Rayleigh quotient had not settled to `POWER_TOL`.
    pub stalled: bool,
}

pub fn power_norm<T: Real>(k: &ModeKernel<T>, tol: T, max_iter: usize) -> NormEstimate<T> {
    let n = k.len();
    let start = T::one() / T::of_usize(n).sqrt();
    let mut v = vec![re(start); n];
    let mut w = vec![re(T::zero()); n];
    let mut z = vec![re(T::zero()); n];
    let mut rho = T::zero();
    for it in 1..=max_iter {
        k.apply(&v, &mut w);
        let new_rho: T = w.iter().map(|x| x.norm_sqr()).sum();
        k.apply_adjoint(&w, &mut z);
        let nz: T = z.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        if nz == T::zero() || !nz.is_finite() {
            return NormEstimate { norm: new_rho.sqrt(), iterations: it, stalled: !nz.is_finite() };
        }
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = *zi / nz;
        }
        if it > 1 && (new_rho - rho).abs() <= tol * new_rho {
            return NormEstimate { norm: new_rho.sqrt(), iterations: it, stalled: false };
        }
        rho = new_rho;
    }
    NormEstimate { norm: rho.sqrt(), iterations: max_iter, stalled: true }
}

fn kernel_for<T: Real>(fp: &FundamentalPair<T>) -> ModeKernel<T> {
    let w = h_weights(&fp.domain, &fp.grid);
    ModeKernel::new(&w, &fp.phi, &fp.psi, fp.pw, fp.pw_log_scale)
}

/// Solves `(λ² + c²Δ_ℓ)u = V` with the sampled Green kernel.
pub fn apply_resolvent<T: Real>(
    geometry: &Geometry<T>,
    kind: ProblemKind,
    ell: usize,
    lambda: Cx<T>,
    v: &RadialField<T>,
) -> Result<RadialField<T>, ResolventError> {
    let s = Setup::new(geometry, kind, lambda)?;
    let fp = fundamental_pair_on(&s, v.grid.clone(), ell)?;
    let k = kernel_for(&fp);
    let x: Vec<Cx<T>> = v.values.iter().zip(&k.d).map(|(vi, di)| *vi * *di).collect();
    let mut out = vec![re(T::zero()); x.len()];
    k.apply(&x, &mut out);
    let values = out.iter().zip(&k.d).map(|(u, di)| *u / *di).collect();
    Ok(RadialField::new(v.grid.clone(), values)?)
}

/// Kernel of one mode on a grid of about `quadrature_n` intervals.
pub fn mode_kernel<T: Real>(
    geometry: &Geometry<T>,
    kind: ProblemKind,
    ell: usize,
    lambda: Cx<T>,
    quadrature_n: usize,
) -> Result<ModeKernel<T>, ResolventError> {
    Ok(kernel_for(&fundamental_pair(geometry, kind, ell, lambda, quadrature_n)?))
}

/// Operator norm of one mode of the resolvent on `H`.
pub fn mode_norm<T: Real>(
    geometry: &Geometry<T>,
    kind: ProblemKind,
    ell: usize,
    lambda: Cx<T>,
    quadrature_n: usize,
) -> Result<NormEstimate<T>, ResolventError> {
    let k = mode_kernel(geometry, kind, ell, lambda, quadrature_n)?;
    Ok(power_norm(&k, T::of(POWER_TOL), POWER_MAX_ITER))
}

/// Sharp-cutoff norm `‖1_{r≤cutoff} ℛ(λ) 1_{r≤cutoff}‖` of one exterior mode.
pub fn exterior_mode_norm<T: Real>(
    ext: &ExteriorDomain<T>,
    ell: usize,
    lambda: Cx<T>,
    cutoff: T,
    quadrature_n: usize,
) -> Result<NormEstimate<T>, ResolventError> {
    let g = Geometry::Exterior { domain: ext.clone(), cutoff };
    mode_norm(&g, ProblemKind::Wave, ell, lambda, quadrature_n)
}

/// How many degrees a sweep row covers and how it is checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPolicy {
    pub quadrature_n: usize,
    /// Degrees added past `λ·R/min c`.
    pub extra: usize,
    /// Extensions by `extra` degrees while the tail is not decreasing.
    pub max_extensions: usize,
    /// Number of trailing degrees that must have strictly decreasing norms.
    pub tail: usize,
}

impl Default for SweepPolicy {
    fn default() -> Self {
        Self { quadrature_n: DEFAULT_QUADRATURE_N, extra: 10, max_extensions: 3, tail: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub lambda: T,
    pub norm: T,
    pub lambda_pow_j_times_norm: T,
    pub ell_argmax: usize,
    pub ell_max: usize,
    pub tail_ok: bool,
    /// Some mode's power iteration stalled.
    pub stalled: bool,
}

/// Degrees per block of Bessel tables (bounds memory per sweep row).
const BLOCK: usize = 64;

fn sweep_row<T: Real>(
    geometry: &Geometry<T>,
    kind: ProblemKind,
    lambda: Cx<T>,
    radius: T,
    min_c: T,
    policy: &SweepPolicy,
) -> Result<SweepRow<T>, ResolventError> {
    let s = Setup::new(geometry, kind, lambda)?;
    let grid = RadialGrid::with_intervals(&s.dom, policy.quadrature_n);
    let weights = h_weights(&s.dom, &grid);
    let base = (lambda.norm() * radius / min_c).ceil().to_usize().unwrap_or(0) + policy.extra;

    let mut norms: Vec<Option<T>> = Vec::new();
    let mut best = T::zero();
    let mut argmax = 0usize;
    let mut stalled = false;
    let mut ell_max = base;
    let mut tail_ok = false;
    let mut done = 0usize; // degrees below this are settled
    for ext in 0..=policy.max_extensions {
        ell_max = base + ext * policy.extra;
        let tail_from = (ell_max + 1).saturating_sub(policy.tail);
        norms.resize(ell_max + 1, None);
        // degrees before the previous tail may be skipped by the bound;
        // every degree in the current tail is computed
        let mut l0 = done.min(tail_from);
        while l0 <= ell_max {
            let l1 = (l0 + BLOCK - 1).min(ell_max);
            let co = coefficients(&s, l0, l1)?;
            let nb = l1 - l0 + 1;
            let need: Vec<bool> = (l0..=l1)
                .map(|l| match norms[l] {
                    None => true,
                    Some(v) => l >= tail_from && v == T::neg_infinity(),
                })
                .collect();
            if need.iter().any(|&b| b) {
                for b in 0..nb {
                    let (_, _, cond) = co.pw[b];
                    if need[b] && cond < T::of(NEAR_EIGENVALUE_THRESHOLD) && matches!(s.outer, Outer::Impedance(_)) {
                        return Err(near(s.lambda, cond));
                    }
                }
                let (phi, psi) = node_states(&s, &grid, &co, nb)?;
                for b in 0..nb {
                    let l = l0 + b;
                    if !need[b] {
                        continue;
                    }
                    let (pw, pl, _) = co.pw[b];
                    let k = ModeKernel::new(&weights, &phi[b], &psi[b], pw, pl);
                    let in_tail = l >= tail_from;
                    if !in_tail && k.frobenius() <= best {
                        // cannot exceed the current maximum
                        norms[l] = Some(T::neg_infinity());
                        continue;
                    }
                    let est = power_norm(&k, T::of(POWER_TOL), POWER_MAX_ITER);
                    stalled |= est.stalled;
                    norms[l] = Some(est.norm);
                    if est.norm > best {
                        best = est.norm;
                        argmax = l;
                    }
                }
            }
            l0 = l1 + 1;
        }
        let tail: Vec<T> = (tail_from..=ell_max).map(|l| norms[l].unwrap()).collect();
        tail_ok = tail.windows(2).all(|w| w[1] < w[0]);
        if tail_ok {
            break;
        }
        done = ell_max + 1;
    }
    let lpj = match kind {
        ProblemKind::Schrodinger => best,
        ProblemKind::Wave => best * lambda.norm(),
    };
    Ok(SweepRow {
        lambda: lambda.re,
        norm: best,
        lambda_pow_j_times_norm: lpj,
        ell_argmax: argmax,
        ell_max,
        tail_ok,
        stalled,
    })
}

/// `max_ℓ ‖R_ℓ^j(λ)‖` over `ℓ ≤ ⌈λ r_{m+1}/min c⌉ + extra` for each `λ`.
///
/// Rows whose tail never became decreasing are returned with `tail_ok = false`.
pub fn full_norm_sweep<T: Real>(
    d: &LayeredBallDomain<T>,
    kind: ProblemKind,
    lambdas: &[T],
    policy: &SweepPolicy,
) -> Result<Vec<SweepRow<T>>, ResolventError> {
    let g = Geometry::Interior(d.clone());
    lambdas
        .par_iter()
        .map(|&l| sweep_row(&g, kind, re(l), d.outer_radius(), d.min_speed(), policy))
        .collect()
}

/// Sweep of the sharp-cutoff exterior norm along `Re λ` at fixed `Im λ`,
/// maximised over degrees; `lambda_pow_j_times_norm` uses `|λ|`.
pub fn exterior_norm_sweep<T: Real>(
    ext: &ExteriorDomain<T>,
    cutoff: T,
    im_lambda: T,
    lambdas: &[T],
    policy: &SweepPolicy,
) -> Result<Vec<SweepRow<T>>, ResolventError> {
    let g = Geometry::Exterior { domain: ext.clone(), cutoff };
    lambdas
        .par_iter()
        .map(|&l| sweep_row(&g, ProblemKind::Wave, cx(l, im_lambda), cutoff, ext.min_speed(), policy))
        .collect()
}

/// Per-degree value of the outgoing Neumann operator at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtnCoefficient<T> {
    pub nu: Cx<T>,
}

/// `ν = λ⁻¹ ∂_r h_ℓ(λr/c) / h_ℓ(λr/c) = h_ℓ'(z) / (c h_ℓ(z))`.
pub fn outgoing_dtn<T: Real>(ell: usize, lambda: Cx<T>, c: T, r: T) -> Result<DtnCoefficient<T>, ResolventError> {
    if lambda.norm() == T::zero() {
        return Err(ResolventError::ZeroLambda);
    }
    let h = sph_h_radiating(ell, lambda * r / c)?;
    Ok(DtnCoefficient { nu: h.df / (h.f * c) })
}

/// Glancing-regime decay of the dissipative part of the outgoing Neumann operator.
#[derive(Debug, Clone, PartialEq)]
pub struct GlancingFit<T> {
    pub slope: T,
    /// `(λ, ℓ_g, s(λ))` per input frequency.
    pub samples: Vec<(T, usize, T)>,
}

/// Degree closest to glancing, `ℓ + ½ ≈ λr/c`.
pub fn glancing_degree<T: Real>(lambda: T, c: T, r: T) -> usize {
    (lambda * r / c - T::of(0.5)).round().max(T::zero()).to_usize().unwrap_or(0)
}

/// Least-squares slope of `log s(λ)` against `log λ`, where `s(λ) = −Re ν`
/// at the glancing degree.
pub fn glancing_exponent<T: Real>(c: T, r: T, lambdas: &[T]) -> Result<GlancingFit<T>, ResolventError> {
    let mut distinct: Vec<T> = lambdas.iter().copied().filter(|l| *l > T::zero()).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let (lo, hi) = (distinct.first().copied(), distinct.last().copied());
    let spans = matches!((lo, hi), (Some(lo), Some(hi)) if hi >= lo * T::of(2.0));
    if distinct.len() < 4 || lambdas.iter().any(|l| !(*l > T::zero())) || !spans {
        return Err(ResolventError::TooFewPoints { need: 4 });
    }
    let mut samples = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let lg = glancing_degree(l, c, r);
        let nu = outgoing_dtn(lg, re(l), c, r)?.nu;
        let s = -nu.re;
        if !(s > T::zero()) {
            return Err(ResolventError::NonPositiveMax { lambda: l.to_f64_lossy() });
        }
        samples.push((l, lg, s));
    }
    let xs: Vec<T> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<T> = samples.iter().map(|s| s.2.ln()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys);
    Ok(GlancingFit { slope, samples })
}

/// Ordinary least squares: `(slope, intercept, r²)`.
pub(crate) fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: T = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() { sxy * sxy / (sxx * syy) } else { T::zero() };
    (slope, my - slope * mx, r2)
}
