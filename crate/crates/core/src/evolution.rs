//! Per-mode time stepping for the damped wave and Schrödinger-type problems,
//! and the monopole exterior problem.
//!
//! Everything is written for `v = rR`, which satisfies
//! `v_tt = c²(v_rr − ℓ(ℓ+1)v/r²)` inside each shell with `v`, `v_r`
//! continuous across interfaces. Space is discretised by piecewise-linear
//! finite elements with a lumped mass, so interfaces need no special stencil
//! and every scheme below has an exact discrete energy balance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GridError, InnerBc, LayeredBallDomain, RadialField, RadialGrid};
use crate::num::{imag_unit, re, Cx, Real};
use crate::resolvent::{linear_fit, ExteriorDomain, ResolventError};

/// Courant number bound relative to the finest grid spacing.
pub const CFL_LIMIT: f64 = 0.9;
/// Relative energy growth treated as instability.
pub const GROWTH_TOL: f64 = 1e-6;
pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("time step {dt} exceeds the CFL bound {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("energy grew by {growth:e} (relative) at t = {time}")]
    UnstableRun { time: f64, growth: f64 },
    #[error("singular implicit system at row {row}")]
    SolveFailure { row: usize },
    #[error("exterior evolution supports only ℓ = 0, got ℓ = {ell}")]
    UnsupportedMode { ell: usize },
    #[error("fit window holds {got} samples, need at least {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("non-positive energy {value} at t = {time}")]
    NonPositiveEnergy { time: f64, value: f64 },
    #[error("invalid run parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Exterior(#[from] ResolventError),
}

/// Sampled energy history.
///
/// For wave runs `energy[k]` is the discrete energy at the half step
/// `times[k]`, and `energy[k] − energy[k−1] = −dt·boundary_flux[k]` holds to
/// rounding; `boundary_flux[0]` is the rate at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace<T> {
    pub times: Vec<T>,
    pub energy: Vec<T>,
    /// Empty for Schrödinger and exterior runs.
    pub boundary_flux: Vec<T>,
    /// Effective time step (the requested one, shortened to hit `t_final`).
    pub dt: T,
}

impl<T: Real> EnergyTrace<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    /// Largest single-step increase relative to the first sample.
    pub fn max_step_increase(&self) -> T {
        let e0 = self.energy.first().copied().unwrap_or(T::zero());
        self.energy
            .windows(2)
            .map(|w| (w[1] - w[0]) / e0)
            .fold(T::zero(), T::max)
    }
}

/// Final state together with the energy trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution<T> {
    pub trace: EnergyTrace<T>,
    /// `R(·, t_final)`.
    pub field: RadialField<T>,
}

/// Least-squares decay fit of `log E` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    pub rate: T,
    pub r_squared: T,
    pub window_start: T,
    pub window_end: T,
    /// Set when `log E` is constant over the window (r² undefined, reported 0).
    pub degenerate: bool,
}

/// Fitted time interval; `None` in [`fit_decay`] means the last third.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow<T> {
    pub start: T,
    pub end: T,
}

/// Stiffness and mass of the lumped finite-element model for one mode.
struct Fem<T> {
    r: Vec<T>,
    /// element lengths
    h: Vec<T>,
    /// lumped `∫ φ_i / c²`
    mass: Vec<T>,
    /// per-element `h/c`
    transit: Vec<T>,
    /// lumped `∫ ℓ(ℓ+1) φ_i / r²` plus boundary terms
    diag: Vec<T>,
    dirichlet: bool,
}

impl<T: Real> Fem<T> {
    /// `outer_term`: whether the `−v²/r` boundary term of the `R`-energy
    /// appears at the outer node (interior problems).
    fn new(d: &LayeredBallDomain<T>, g: &RadialGrid<T>, ell: usize, outer_term: bool) -> Self {
        let r = g.radii().to_vec();
        let n = r.len();
        let h: Vec<T> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let half = T::of(0.5);
        let q = T::of_usize(ell * (ell + 1));
        let mut mass = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut transit = vec![T::zero(); n - 1];
        for (k, &c) in d.speeds().iter().enumerate() {
            let nodes = g.layer_nodes(k);
            for i in *nodes.start()..*nodes.end() {
                transit[i] = h[i] / c;
                let m = half * h[i] / (c * c);
                mass[i] = mass[i] + m;
                mass[i + 1] = mass[i + 1] + m;
            }
        }
        for i in 0..n {
            let lumped = if i == 0 {
                half * h[0]
            } else if i == n - 1 {
                half * h[n - 2]
            } else {
                half * (h[i - 1] + h[i])
            };
            diag[i] = q * lumped / (r[i] * r[i]);
        }
        let dirichlet = d.inner_bc() == InnerBc::Dirichlet;
        if !dirichlet {
            diag[0] = diag[0] + T::one() / r[0];
        }
        if outer_term {
            diag[n - 1] = diag[n - 1] - T::one() / r[n - 1];
        }
        Self { r, h, mass, transit, diag, dirichlet }
    }

    fn len(&self) -> usize {
        self.r.len()
    }

    /// `out = A v`.
    fn stiff(&self, v: &[Cx<T>], out: &mut [Cx<T>]) {
        let n = self.len();
        for i in 0..n {
            out[i] = v[i] * self.diag[i];
        }
        for e in 0..n - 1 {
            let g = (v[e + 1] - v[e]) / self.h[e];
            out[e] = out[e] - g;
            out[e + 1] = out[e + 1] + g;
        }
        if self.dirichlet {
            out[0] = re(T::zero());
        }
    }

    /// `Re(aᴴ A b)` over nodes `< upto` and the elements between them.
    fn form(&self, a: &[Cx<T>], b: &[Cx<T>], upto: usize) -> T {
        let mut s = T::zero();
        for i in 0..upto {
            s = s + self.diag[i] * (a[i].conj() * b[i]).re;
        }
        for e in 0..upto.saturating_sub(1) {
            s = s + ((a[e + 1] - a[e]).conj() * (b[e + 1] - b[e])).re / self.h[e];
        }
        s
    }

    fn mass_form(&self, a: &[Cx<T>], b: &[Cx<T>], upto: usize) -> T {
        (0..upto).map(|i| self.mass[i] * (a[i].conj() * b[i]).re).sum()
    }

    fn min_transit(&self) -> T {
        self.transit.iter().copied().fold(T::infinity(), T::min)
    }

    fn to_v(&self, f: &RadialField<T>) -> Vec<Cx<T>> {
        let mut v: Vec<Cx<T>> = f.values.iter().zip(&self.r).map(|(x, r)| *x * *r).collect();
        if self.dirichlet {
            v[0] = re(T::zero());
        }
        v
    }

    fn to_field(&self, g: &RadialGrid<T>, v: &[Cx<T>]) -> RadialField<T> {
        RadialField {
            grid: g.clone(),
            values: v.iter().zip(&self.r).map(|(x, r)| *x / *r).collect(),
        }
    }
}

fn step_count<T: Real>(t_final: T, dt: T) -> Result<(usize, T), EvolutionError> {
    if !(t_final > T::zero() && dt > T::zero()) {
        return Err(EvolutionError::InvalidParameters("t_final and dt must be positive".into()));
    }
    let n = (t_final / dt - T::of(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    Ok((n, t_final / T::of_usize(n)))
}

/// `dt ≤ CFL_LIMIT · min_e h_e/c_e` (equals `CFL_LIMIT·dr/max c` on uniform grids).
fn check_cfl<T: Real>(dt: T, min_transit: T) -> Result<(), EvolutionError> {
    let limit = T::of(CFL_LIMIT) * min_transit;
    if dt > limit {
        return Err(EvolutionError::CflViolation { dt: dt.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok(())
}

/// Leapfrog core shared by the bounded and exterior runs. `damping` is the
/// coefficient `β` of the boundary term `β·v_t` at the outer node.
struct Leapfrog<'a, T> {
    fem: &'a Fem<T>,
    damping: T,
    dt: T,
    prev: Vec<Cx<T>>,
    cur: Vec<Cx<T>>,
    next: Vec<Cx<T>>,
    work: Vec<Cx<T>>,
}

impl<'a, T: Real> Leapfrog<'a, T> {
    fn new(fem: &'a Fem<T>, damping: T, dt: T, v0: Vec<Cx<T>>, v1_rate: &[Cx<T>]) -> Self {
        let n = fem.len();
        let mut work = vec![re(T::zero()); n];
        fem.stiff(&v0, &mut work);
        let half = T::of(0.5);
        let mut cur = v0.clone();
        for i in 0..n {
            let mut acc = -work[i];
            if i == n - 1 {
                acc = acc - v1_rate[i] * damping;
            }
            cur[i] = v0[i] + v1_rate[i] * dt + acc / fem.mass[i] * (half * dt * dt);
        }
        if fem.dirichlet {
            cur[0] = re(T::zero());
        }
        Self { fem, damping, dt, prev: v0, cur, next: vec![re(T::zero()); n], work }
    }

    /// Advances one step; afterwards `prev`, `cur` are the two newest levels.
    fn step(&mut self) {
        let n = self.fem.len();
        let dt2 = self.dt * self.dt;
        self.fem.stiff(&self.cur, &mut self.work);
        for i in 0..n - 1 {
            self.next[i] = self.cur[i] * T::of(2.0) - self.prev[i] - self.work[i] * (dt2 / self.fem.mass[i]);
        }
        // outer node: damping averaged over the two neighbouring levels
        let m = self.fem.mass[n - 1];
        let g = self.damping * self.dt * T::of(0.5);
        let i = n - 1;
        self.next[i] = (self.cur[i] * (m + m) - self.prev[i] * (m - g) - self.work[i] * dt2) / (m + g);
        if self.fem.dirichlet {
            self.next[0] = re(T::zero());
        }
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.cur, &mut self.next);
    }

    /// Staggered energy `|Δv|²_M/dt² + Re(v_newᴴ A v_old)` over nodes `< upto`.
    fn energy(&self, upto: usize) -> T {
        let dv: Vec<Cx<T>> = self.cur.iter().zip(&self.prev).map(|(a, b)| *a - *b).collect();
        self.fem.mass_form(&dv, &dv, upto) / (self.dt * self.dt) + self.fem.form(&self.cur, &self.prev, upto)
    }
}

/// Damped wave equation for one mode with the dissipative outer row
/// `∂_r R + a₀∂_t R = 0`.
///
/// Runs on the grid of `init.0`; `dt` is shortened so that an integer number
/// of steps reaches `t_final`. The recorded energy is the scheme's own
/// conserved/dissipated quantity (`∫ r²|R_r|² + ℓ(ℓ+1)|R|² + r²|R_t|²/c²`
/// up to `O(dt²)`, no factor ½), and the flux is `2a₀|v_t(r_out)|²`.
pub fn evolve_wave<T: Real>(
    d: &LayeredBallDomain<T>,
    ell: usize,
    init: (&RadialField<T>, &RadialField<T>),
    t_final: T,
    dt: T,
) -> Result<Evolution<T>, EvolutionError> {
    let (f0, f1) = init;
    f0.grid.check(d)?;
    if f1.grid != f0.grid {
        return Err(GridError::GridMismatch("value and rate fields on different grids".into()).into());
    }
    let fem = Fem::new(d, &f0.grid, ell, true);
    let (steps, dt) = step_count(t_final, dt)?;
    check_cfl(dt, fem.min_transit())?;

    let v0 = fem.to_v(f0);
    let w0 = fem.to_v(f1);
    let n = fem.len();
    let a0 = d.a0();
    let two = T::of(2.0);
    let mut lf = Leapfrog::new(&fem, a0, dt, v0, &w0);

    let half = T::of(0.5);
    let mut times = Vec::with_capacity(steps);
    let mut energy = Vec::with_capacity(steps);
    let mut flux = Vec::with_capacity(steps);
    times.push(half * dt);
    energy.push(lf.energy(n));
    flux.push(two * a0 * w0[n - 1].norm_sqr());
    let e0 = energy[0];
    for s in 1..steps {
        let old = lf.prev[n - 1];
        lf.step();
        let rate = (lf.cur[n - 1] - old) / (two * dt);
        let e = lf.energy(n);
        let t = (T::of_usize(s) + half) * dt;
        if !e.is_finite() || e - e0 > T::of(GROWTH_TOL) * e0.abs() {
            return Err(EvolutionError::UnstableRun {
                time: t.to_f64_lossy(),
                growth: ((e - e0) / e0).to_f64_lossy(),
            });
        }
        times.push(t);
        energy.push(e);
        flux.push(two * a0 * rate.norm_sqr());
    }
    // final level is cur at t = steps·dt
    let field = fem.to_field(&f0.grid, &lf.cur);
    Ok(Evolution { trace: EnergyTrace { times, energy, boundary_flux: flux, dt }, field })
}

/// Crank–Nicolson for `∂_t R = iA₀R`, `A₀ = −c²Δ_ℓ`, with the outer row
/// `∂_r R + i a₀ R = 0`; `‖R‖²_H` is recorded at every step.
pub fn evolve_schrodinger<T: Real>(
    d: &LayeredBallDomain<T>,
    ell: usize,
    init: &RadialField<T>,
    t_final: T,
    dt: T,
) -> Result<Evolution<T>, EvolutionError> {
    init.grid.check(d)?;
    let fem = Fem::new(d, &init.grid, ell, true);
    let (steps, dt) = step_count(t_final, dt)?;
    let n = fem.len();
    let i = imag_unit::<T>();
    let half_dt = dt * T::of(0.5);

    // A_S = A + i a₀ e_N e_Nᵀ; system (M − i dt/2 A_S) u⁺ = (M + i dt/2 A_S) u
    let mut sub = vec![re(T::zero()); n];
    let mut dia = vec![re(T::zero()); n];
    let mut sup = vec![re(T::zero()); n];
    for k in 0..n {
        dia[k] = re(fem.diag[k]);
    }
    for e in 0..n - 1 {
        let g = T::one() / fem.h[e];
        dia[e] = dia[e] + g;
        dia[e + 1] = dia[e + 1] + g;
        sup[e] = re(-g);
        sub[e + 1] = re(-g);
    }
    dia[n - 1] = dia[n - 1] + i * d.a0();
    // left operator L = M − i dt/2 A_S, right R = M + i dt/2 A_S
    let c = i * half_dt;
    let (mut l_sub, mut l_dia, mut l_sup) = (vec![re(T::zero()); n], vec![re(T::zero()); n], vec![re(T::zero()); n]);
    for k in 0..n {
        l_sub[k] = -c * sub[k];
        l_dia[k] = re(fem.mass[k]) - c * dia[k];
        l_sup[k] = -c * sup[k];
    }
    if fem.dirichlet {
        l_dia[0] = re(T::one());
        l_sup[0] = re(T::zero());
        if n > 1 {
            l_sub[1] = re(T::zero());
        }
    }
    let solver = Tridiagonal::factor(&l_sub, &l_dia, &l_sup)?;

    let mut u = fem.to_v(init);
    let mut rhs = vec![re(T::zero()); n];
    let mut times = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    energy.push(fem.mass_form(&u, &u, n));
    for s in 1..=steps {
        for k in 0..n {
            let mut au = dia[k] * u[k];
            if k > 0 {
                au = au + sub[k] * u[k - 1];
            }
            if k + 1 < n {
                au = au + sup[k] * u[k + 1];
            }
            rhs[k] = u[k] * fem.mass[k] + c * au;
        }
        if fem.dirichlet {
            rhs[0] = re(T::zero());
        }
        solver.solve(&mut rhs);
        std::mem::swap(&mut u, &mut rhs);
        times.push(T::of_usize(s) * dt);
        energy.push(fem.mass_form(&u, &u, n));
    }
    let field = fem.to_field(&init.grid, &u);
    Ok(Evolution { trace: EnergyTrace { times, energy, boundary_flux: Vec::new(), dt }, field })
}

/// LU factors of a tridiagonal matrix (no pivoting).
struct Tridiagonal<T> {
    sub: Vec<Cx<T>>,
    /// pivots
    piv: Vec<Cx<T>>,
    sup: Vec<Cx<T>>,
}

impl<T: Real> Tridiagonal<T> {
    fn factor(sub: &[Cx<T>], dia: &[Cx<T>], sup: &[Cx<T>]) -> Result<Self, EvolutionError> {
        let n = dia.len();
        let mut piv = vec![re(T::zero()); n];
        let tiny = T::epsilon() * T::of(16.0);
        for k in 0..n {
            piv[k] = if k == 0 { dia[0] } else { dia[k] - sub[k] * sup[k - 1] / piv[k - 1] };
            if !(piv[k].norm() > tiny * dia[k].norm()) {
                return Err(EvolutionError::SolveFailure { row: k });
            }
        }
        Ok(Self { sub: sub.to_vec(), piv, sup: sup.to_vec() })
    }

    fn solve(&self, b: &mut [Cx<T>]) {
        let n = b.len();
        for k in 1..n {
            b[k] = b[k] - self.sub[k] / self.piv[k - 1] * b[k - 1];
        }
        b[n - 1] = b[n - 1] / self.piv[n - 1];
        for k in (0..n - 1).rev() {
            b[k] = (b[k] - self.sup[k] * b[k + 1]) / self.piv[k];
        }
    }
}

/// Parameters of an `ℓ = 0` exterior run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorRun<T> {
    /// Energy is measured over `r ≤ r_k`.
    pub r_k: T,
    /// Truncation radius carrying the transparent condition.
    pub r_big: T,
    pub dr: T,
    pub dt: T,
    pub t_final: T,
}

/// Monopole wave outside the shells, with `(∂_t + c∂_r)v = 0` at `r_big`.
///
/// `init` gives `(R, R_t)` at `t = 0` as functions of `r`; both must vanish
/// for `r > r_k`. The recorded quantity is the staggered discrete form of
/// `∫_{r≤r_k} |v_t|²/c² + |v_r|² dr` (plus `|v(r₀)|²/r₀` for Neumann).
pub fn evolve_exterior_l0<T: Real>(
    ext: &ExteriorDomain<T>,
    ell: usize,
    init: (&dyn Fn(T) -> Cx<T>, &dyn Fn(T) -> Cx<T>),
    run: &ExteriorRun<T>,
) -> Result<EnergyTrace<T>, EvolutionError> {
    if ell != 0 {
        return Err(EvolutionError::UnsupportedMode { ell });
    }
    if !(run.r_big > run.r_k && run.r_k > ext.last_radius()) {
        return Err(EvolutionError::InvalidParameters(
            "need last interface < r_k < r_big".into(),
        ));
    }
    // put r_k on the grid by splitting the exterior shell there
    let d = ext.truncated(run.r_big)?.split_at(run.r_k);
    let grid = RadialGrid::with_optical_spacing(&d, run.dr);
    let kidx = grid
        .radii()
        .iter()
        .position(|&x| x == run.r_k)
        .ok_or_else(|| EvolutionError::InvalidParameters("r_k not on grid".into()))?;
    let fem = Fem::new(&d, &grid, 0, false);
    let (steps, dt) = step_count(run.t_final, run.dt)?;
    check_cfl(dt, fem.min_transit())?;

    let f0 = RadialField::from_fn(grid.clone(), |r| (init.0)(r));
    let f1 = RadialField::from_fn(grid.clone(), |r| (init.1)(r));
    let v0 = fem.to_v(&f0);
    let w0 = fem.to_v(&f1);
    let mut lf = Leapfrog::new(&fem, T::one() / ext.c_ext(), dt, v0, &w0);
    let upto = kidx + 1;
    let half = T::of(0.5);
    let mut times = Vec::with_capacity(steps);
    let mut energy = Vec::with_capacity(steps);
    times.push(half * dt);
    energy.push(lf.energy(upto));
    for s in 1..steps {
        lf.step();
        times.push((T::of_usize(s) + half) * dt);
        energy.push(lf.energy(upto));
    }
    Ok(EnergyTrace { times, energy, boundary_flux: Vec::new(), dt })
}

/// Decay rate `−d log E/dt` from a least-squares line over `window`
/// (default: the last third of the trace).
pub fn fit_decay<T: Real>(trace: &EnergyTrace<T>, window: Option<FitWindow<T>>) -> Result<DecayFit<T>, EvolutionError> {
    let n = trace.len();
    let w = window.unwrap_or_else(|| {
        let start = if n == 0 { T::zero() } else { trace.times[(2 * n) / 3] };
        FitWindow { start, end: trace.times.last().copied().unwrap_or(T::zero()) }
    });
    let idx: Vec<usize> = (0..n)
        .filter(|&k| trace.times[k] >= w.start && trace.times[k] <= w.end)
        .collect();
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(EvolutionError::WindowTooShort { got: idx.len(), need: MIN_FIT_SAMPLES });
    }
    if let Some(&k) = idx.iter().find(|&&k| !(trace.energy[k] > T::zero())) {
        return Err(EvolutionError::NonPositiveEnergy {
            time: trace.times[k].to_f64_lossy(),
            value: trace.energy[k].to_f64_lossy(),
        });
    }
    let x: Vec<T> = idx.iter().map(|&k| trace.times[k]).collect();
    let y: Vec<T> = idx.iter().map(|&k| trace.energy[k].ln()).collect();
    let my = y.iter().copied().sum::<T>() / T::of_usize(y.len());
    let degenerate = y.iter().all(|&v| (v - my).abs() <= T::epsilon() * T::of(8.0) * (T::one() + my.abs()));
    let (slope, _, r2) = if degenerate { (T::zero(), my, T::zero()) } else { linear_fit(&x, &y) };
    Ok(DecayFit {
        rate: -slope,
        r_squared: r2,
        window_start: w.start,
        window_end: w.end,
        degenerate,
    })
}
