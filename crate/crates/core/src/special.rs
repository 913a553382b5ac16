//! Spherical Bessel and Hankel functions of complex argument.
//!
//! Values are returned in a scaled form: the pair `(f, df)` is implicitly
//! multiplied by `exp(log_scale)`. For moderate magnitudes `log_scale` is zero
//! and `(f, df)` are the plain values; outside the representable band the pair
//! is normalised so that `max(|f|, |df|) = 1`.
//!
//! # Radiating branch
//!
//! The radiating solution is `h(z) = j(z) - i y(z)`, i.e. the second spherical
//! Hankel function with large-argument behaviour `e^{-iz}/z`. With `z = λr/c`
//! it is square integrable at infinity when `Im λ < 0`, which is the half plane
//! where the exterior resolvent is holomorphic. Its logarithmic derivative on
//! the real axis has negative imaginary part, so the outgoing Neumann operator
//! built from it is dissipative.
//!
//! # Evaluation strategy
//!
//! * `|z| < 1e-3`: ascending series for `j`.
//! * otherwise `j` by Miller's downward recurrence normalised against
//!   `j_0` or `j_1`, whichever is larger at the evaluation point;
//! * `y` and `h` by upward recurrence from their closed forms at orders 0 and 1.
//!
//! Every recurrence rescales its running pair once it exceeds
//! [`Real::rescale_threshold`], so no order or argument overflows.

use num_complex::Complex;
use thiserror::Error;

use crate::num::{cx, imag_unit, re, Cx, Real};

/// Below this modulus `j_ℓ` is summed from its ascending series.
pub const SERIES_RADIUS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("spherical Bessel function of the second kind is singular at z = 0")]
    ArgumentZero,
    #[error("value exceeds the representable range (log magnitude {log_magnitude})")]
    OverflowRisk { log_magnitude: f64 },
}

/// Function value and argument derivative, scaled by `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalBesselValue<T> {
    pub f: Cx<T>,
    pub df: Cx<T>,
    pub log_scale: T,
}

impl<T: Real> SphericalBesselValue<T> {
    /// Builds a value, renormalising only if the pair leaves the safe band.
    pub fn normalized(f: Cx<T>, df: Cx<T>, log_scale: T) -> Self {
        let m = f.norm().max(df.norm());
        let hi = T::rescale_threshold();
        if m == T::zero() || !m.is_finite() || (m <= hi && m >= hi.recip()) {
            return Self { f, df, log_scale };
        }
        let inv = m.recip();
        Self {
            f: f * inv,
            df: df * inv,
            log_scale: log_scale + m.ln(),
        }
    }

    /// The plain `(f, df)` pair, if it is representable.
    pub fn unscaled(&self) -> Result<(Cx<T>, Cx<T>), SpecialError> {
        let lim = T::max_value().ln() - T::of(1.0);
        let mag = self.f.norm().max(self.df.norm());
        if mag > T::zero() && self.log_scale + mag.ln() > lim {
            return Err(SpecialError::OverflowRisk {
                log_magnitude: (self.log_scale + mag.ln()).to_f64_lossy(),
            });
        }
        let s = self.log_scale.exp();
        Ok((self.f * s, self.df * s))
    }

    /// Natural log of `max(|f|, |df|)` including the scale.
    pub fn log_magnitude(&self) -> T {
        self.log_scale + self.f.norm().max(self.df.norm()).ln()
    }
}

/// `sin z` and `cos z` scaled by `exp(-|Im z|)`; returns `(sin, cos, |Im z|)`.
pub(crate) fn scaled_sincos<T: Real>(z: Cx<T>) -> (Cx<T>, Cx<T>, T) {
    let (x, y) = (z.re, z.im);
    let ay = y.abs();
    let half = T::of(0.5);
    let e2 = (-(ay + ay)).exp();
    let ch = half * (T::one() + e2);
    let sh = -half * (-(ay + ay)).exp_m1() * y.signum();
    let (sx, cxv) = x.sin_cos();
    let sin = cx(sx * ch, cxv * sh);
    let cos = cx(cxv * ch, -sx * sh);
    (sin, cos, ay)
}

fn double_factorial_log<T: Real>(ell: usize) -> T {
    // ln((2ℓ+1)!!)
    (1..=ell)
        .map(|i| T::of_usize(2 * i + 1).ln())
        .fold(T::zero(), |a, b| a + b)
}

fn series_j<T: Real>(ell: usize, z: Cx<T>) -> SphericalBesselValue<T> {
    let z2 = z * z;
    let mut term = T::one();
    let mut sum = re(T::one());
    let mut dsum = re(T::of_usize(ell));
    let mut zpow = re(T::one());
    for k in 1..8usize {
        term = term * T::of(-0.5) / (T::of_usize(k) * T::of_usize(2 * ell + 2 * k + 1));
        zpow = zpow * z2;
        let t = zpow * term;
        sum = sum + t;
        dsum = dsum + t * T::of_usize(ell + 2 * k);
        if t.norm() < T::epsilon() * T::of(1e-3) {
            break;
        }
    }
    let r = z.norm();
    let theta = z.im.atan2(z.re);
    let phase = Complex::from_polar(T::one(), theta * T::of_usize(ell));
    let log_scale = T::of_usize(ell) * r.ln() - double_factorial_log::<T>(ell);
    SphericalBesselValue::normalized(phase * sum, phase * dsum / z, log_scale)
}

fn miller_start<T: Real>(lmax: usize, z: Cx<T>) -> usize {
    let a = z.norm().to_f64_lossy();
    let base = (lmax + 1).max(a.ceil() as usize);
    base + 30 + (10.0 * a.cbrt()).ceil() as usize
}

/// `j_ℓ(z)` for `ℓ ∈ lmin..=lmax`.
pub fn sph_j_range<T: Real>(lmin: usize, lmax: usize, z: Cx<T>) -> Vec<SphericalBesselValue<T>> {
    assert!(lmin <= lmax, "empty order range");
    if z.norm() == T::zero() {
        return (lmin..=lmax)
            .map(|l| {
                let (f, df) = match l {
                    0 => (T::one(), T::zero()),
                    1 => (T::zero(), T::one() / T::of(3.0)),
                    _ => (T::zero(), T::zero()),
                };
                SphericalBesselValue { f: re(f), df: re(df), log_scale: T::zero() }
            })
            .collect();
    }
    if z.norm() < T::of(SERIES_RADIUS) {
        return (lmin..=lmax).map(|l| series_j(l, z)).collect();
    }

    let big = T::rescale_threshold();
    let inv_big = big.recip();
    let lbig = big.ln();
    let top = miller_start(lmax, z);
    let width = lmax + 2 - lmin;
    let mut stored: Vec<(Cx<T>, T)> = vec![(re(T::zero()), T::zero()); width];

    let mut fp1 = re(T::zero());
    let mut f = re(T::one());
    let mut s = T::zero();
    if top >= lmin && top <= lmax + 1 {
        stored[top - lmin] = (f, s);
    }
    for n in (1..=top).rev() {
        let fm1 = f * (T::of_usize(2 * n + 1)) / z - fp1;
        fp1 = f;
        f = fm1;
        if f.norm() > big {
            f = f * inv_big;
            fp1 = fp1 * inv_big;
            s = s + lbig;
        }
        let idx = n - 1;
        if idx >= lmin && idx <= lmax + 1 {
            stored[idx - lmin] = (f, s);
        }
    }
    let (f0, f1) = (f, fp1);
    let (sn, cs, sc) = scaled_sincos(z);
    let j0 = sn / z;
    let j1 = sn / (z * z) - cs / z;
    let factor = if f0.norm() >= f1.norm() { j0 / f0 } else { j1 / f1 };
    let log_factor = sc - s;

    (lmin..=lmax)
        .map(|l| {
            let (fl, sl) = stored[l - lmin];
            let (fl1, sl1) = stored[l + 1 - lmin];
            let jl = fl * factor;
            let jl1 = fl1 * factor * (sl1 - sl).exp();
            let df = jl * T::of_usize(l) / z - jl1;
            SphericalBesselValue::normalized(jl, df, sl + log_factor)
        })
        .collect()
}

/// Upward recurrence from closed forms at orders 0 and 1 (shared by `y` and `h`).
fn upward<T: Real>(
    lmin: usize,
    lmax: usize,
    z: Cx<T>,
    f0: Cx<T>,
    f1: Cx<T>,
    scale: T,
) -> Vec<SphericalBesselValue<T>> {
    let big = T::rescale_threshold();
    let inv_big = big.recip();
    let lbig = big.ln();
    let last = lmax.max(1);
    let mut seq: Vec<(Cx<T>, T)> = Vec::with_capacity(last + 1);
    seq.push((f0, scale));
    seq.push((f1, scale));
    let mut prev = f0;
    let mut cur = f1;
    let mut s = scale;
    for n in 1..last {
        let next = cur * T::of_usize(2 * n + 1) / z - prev;
        prev = cur;
        cur = next;
        if cur.norm() > big {
            cur = cur * inv_big;
            prev = prev * inv_big;
            s = s + lbig;
        }
        seq.push((cur, s));
    }
    (lmin..=lmax)
        .map(|l| {
            let (fl, sl) = seq[l];
            let df = if l == 0 {
                let (g1, s1) = seq[1];
                -g1 * (s1 - sl).exp()
            } else {
                let (gm, sm) = seq[l - 1];
                gm * (sm - sl).exp() - fl * T::of_usize(l + 1) / z
            };
            SphericalBesselValue::normalized(fl, df, sl)
        })
        .collect()
}

/// `y_ℓ(z)` for `ℓ ∈ lmin..=lmax`.
pub fn sph_y_range<T: Real>(
    lmin: usize,
    lmax: usize,
    z: Cx<T>,
) -> Result<Vec<SphericalBesselValue<T>>, SpecialError> {
    assert!(lmin <= lmax, "empty order range");
    if z.norm() == T::zero() {
        return Err(SpecialError::ArgumentZero);
    }
    let (sn, cs, sc) = scaled_sincos(z);
    let y0 = -cs / z;
    let y1 = -cs / (z * z) - sn / z;
    Ok(upward(lmin, lmax, z, y0, y1, sc))
}

/// Radiating `h_ℓ(z) = j_ℓ(z) - i y_ℓ(z)` for `ℓ ∈ lmin..=lmax`.
pub fn sph_h_radiating_range<T: Real>(
    lmin: usize,
    lmax: usize,
    z: Cx<T>,
) -> Result<Vec<SphericalBesselValue<T>>, SpecialError> {
    assert!(lmin <= lmax, "empty order range");
    if z.norm() == T::zero() {
        return Err(SpecialError::ArgumentZero);
    }
    let i = imag_unit::<T>();
    // e^{-iz} = e^{-i Re z} e^{Im z}
    let (sx, cxv) = z.re.sin_cos();
    let e = cx(cxv, -sx);
    let h0 = i * e / z;
    let h1 = e * (i / (z * z) - z.inv());
    Ok(upward(lmin, lmax, z, h0, h1, z.im))
}

pub fn sph_j<T: Real>(ell: usize, z: Cx<T>) -> SphericalBesselValue<T> {
    sph_j_range(ell, ell, z)[0]
}

pub fn sph_y<T: Real>(ell: usize, z: Cx<T>) -> Result<SphericalBesselValue<T>, SpecialError> {
    Ok(sph_y_range(ell, ell, z)?[0])
}

pub fn sph_h_radiating<T: Real>(ell: usize, z: Cx<T>) -> Result<SphericalBesselValue<T>, SpecialError> {
    Ok(sph_h_radiating_range(ell, ell, z)?[0])
}

/// `|j y' - j' y - 1/z²| · |z|²`, the deviation from the exact Wronskian.
///
/// Returns `+∞` at `z = 0`.
pub fn wronskian_residual<T: Real>(ell: usize, z: Cx<T>) -> T {
    let Ok(y) = sph_y(ell, z) else {
        return T::infinity();
    };
    let j = sph_j(ell, z);
    let w = (j.f * y.df - j.df * y.f) * (j.log_scale + y.log_scale).exp();
    (w * z * z - re(T::one())).norm()
}

/// Which function family a recurrence check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    J,
    Y,
    H,
}

/// Relative residual of `f_{ℓ-1} + f_{ℓ+1} = (2ℓ+1)/z f_ℓ` for `ℓ ≥ 1`.
///
/// Normalised by the largest of the three terms.
pub fn recurrence_residual<T: Real>(family: Family, ell: usize, z: Cx<T>) -> Result<T, SpecialError> {
    assert!(ell >= 1, "recurrence needs ℓ ≥ 1");
    let vals = match family {
        Family::J => sph_j_range(ell - 1, ell + 1, z),
        Family::Y => sph_y_range(ell - 1, ell + 1, z)?,
        Family::H => sph_h_radiating_range(ell - 1, ell + 1, z)?,
    };
    let ref_scale = vals[1].log_scale;
    let at = |k: usize| vals[k].f * (vals[k].log_scale - ref_scale).exp();
    let a = at(0);
    let c = at(2);
    let b = at(1) * T::of_usize(2 * ell + 1) / z;
    let denom = a.norm().max(b.norm()).max(c.norm());
    if denom == T::zero() {
        return Ok(T::zero());
    }
    Ok((a + c - b).norm() / denom)
}
