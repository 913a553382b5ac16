use layerspec_core::model::*;
use layerspec_core::resolvent::*;
use layerspec_core::spectral::*;
use layerspec_core::Complex as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mono() -> LayeredBallDomain<f64> {
    LayeredBallDomain::new(&[1.0, 2.0, 3.0], &[2.0, 1.0], 1.0, InnerBc::Dirichlet).unwrap()
}

fn m2() -> LayeredBallDomain<f64> {
    LayeredBallDomain::new(&[1.0, 2.0, 3.0, 4.0], &[3.0, 2.0, 1.0], 1.0, InnerBc::Dirichlet).unwrap()
}

fn kind(j: u8) -> ProblemKind {
    ProblemKind::from_j(j).unwrap()
}

/// Smooth random source: a few random Fourier modes.
fn random_source(grid: &RadialGrid<f64>, rng: &mut ChaCha8Rng) -> RadialField<f64> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(0.5..6.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3)))
        .collect();
    RadialField::from_fn(grid.clone(), |r| {
        modes.iter().map(|&(k, a, b, p)| C::new(a, b) * (k * r + p).sin()).sum()
    })
}

/// `Σ w_i a_i b_i` with the trapezoid weights `r²/c²` (bilinear; no conjugate).
fn bilinear(d: &LayeredBallDomain<f64>, a: &RadialField<f64>, b: &RadialField<f64>) -> C {
    let g = &a.grid;
    let r = g.radii();
    let mut s = C::new(0.0, 0.0);
    for (k, &c) in d.speeds().iter().enumerate() {
        let nodes = g.layer_nodes(k);
        for i in *nodes.start()..*nodes.end() {
            let h = r[i + 1] - r[i];
            s += 0.5 * h / (c * c) * (r[i] * r[i] * a.values[i] * b.values[i] + r[i + 1] * r[i + 1] * a.values[i + 1] * b.values[i + 1]);
        }
    }
    s
}

/// `Im⟨u, V⟩_H` against `λ^j a₀ r_out² |u(r_out)|²`.
fn green_residual(d: &LayeredBallDomain<f64>, j: u8, ell: usize, lam: f64, v: &RadialField<f64>) -> f64 {
    let g = Geometry::Interior(d.clone());
    let u = apply_resolvent(&g, kind(j), ell, C::new(lam, 0.0), v).unwrap();
    let vc = RadialField { grid: v.grid.clone(), values: v.values.iter().map(|x| x.conj()).collect() };
    let lhs = bilinear(d, &u, &vc).im;
    let b = d.outer_radius();
    let rhs = lam.powi(j as i32) * d.a0() * b * b * u.values.last().unwrap().norm_sqr();
    (lhs - rhs).abs() / rhs.abs().max(lhs.abs())
}

#[test]
fn wronskian_is_constant_across_interfaces() {
    for d in [mono(), m2()] {
        for j in [0u8, 1] {
            for &lam in &[C::new(5.0, 0.0), C::new(20.0, 0.3), C::new(37.5, -0.2)] {
                for ell in [0usize, 3, 10, 40] {
                    let fp = fundamental_pair(&Geometry::Interior(d.clone()), kind(j), ell, lam, 100).unwrap();
                    let spread = fp.pw_profile().iter().map(|w| (w - 1.0).norm()).fold(0.0, f64::max);
                    assert!(spread < 1e-8, "j={j} ℓ={ell} λ={lam}: {spread:e}");
                }
            }
        }
    }
}

#[test]
fn exterior_wronskian_and_decay() {
    let ext = ExteriorDomain::from_domain(&mono(), 1);
    let g = Geometry::Exterior { domain: ext.clone(), cutoff: 5.0 };
    for ell in [0usize, 4, 12] {
        let lam = C::new(10.0, -0.5);
        let fp = fundamental_pair(&g, ProblemKind::Wave, ell, lam, 400).unwrap();
        let spread = fp.pw_profile().iter().map(|w| (w - 1.0).norm()).fold(0.0, f64::max);
        assert!(spread < 1e-8);
        // |ψ| beyond the last interface
        let r = fp.grid.radii();
        let mags: Vec<f64> = (0..r.len())
            .filter(|&i| r[i] >= ext.last_radius())
            .map(|i| fp.psi[i].value.norm().ln() + fp.psi[i].log_scale)
            .collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]), "ℓ={ell}");
    }
}

#[test]
fn wronskian_collapses_at_a_root() {
    let d = mono();
    let mp = ModeProblem::new(ProblemKind::Wave, 4);
    let rep = find_roots(&d, mp, Rect::new(10.0, 14.0, -0.05, 3.0), &FindOptions::default()).unwrap();
    let root = rep.roots[0].lambda;
    let g = Geometry::Interior(d.clone());
    let generic = fundamental_pair(&g, ProblemKind::Wave, 4, C::new(root.re, 0.0), 100).unwrap().conditioning;
    let at_root = match fundamental_pair(&g, ProblemKind::Wave, 4, root, 100) {
        Err(ResolventError::NearEigenvalue { conditioning, .. }) => conditioning,
        Ok(fp) => fp.conditioning,
        Err(e) => panic!("{e}"),
    };
    assert!(generic / at_root >= 1e6, "{generic:e} vs {at_root:e}");
}

#[test]
fn defining_equation_holds() {
    // second differences inside each layer, relative to max |V|
    let d = mono();
    let g = RadialGrid::with_intervals(&d, 8000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = random_source(&g, &mut rng);
    let vmax = v.values.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for (j, ell, lam) in [(1u8, 0usize, 5.0), (0, 4, 3.0), (1, 2, 8.0)] {
        let u = apply_resolvent(&Geometry::Interior(d.clone()), kind(j), ell, C::new(lam, 0.0), &v).unwrap();
        let r = g.radii();
        let q = (ell * (ell + 1)) as f64;
        let mut worst: f64 = 0.0;
        for (k, &c) in d.speeds().iter().enumerate() {
            let nodes = g.layer_nodes(k);
            for i in nodes.start() + 1..*nodes.end() {
                let h = r[i + 1] - r[i];
                let u2 = (u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1]) / (h * h);
                let u1 = (u.values[i + 1] - u.values[i - 1]) / (2.0 * h);
                let lap = u2 + 2.0 * u1 / r[i] - q * u.values[i] / (r[i] * r[i]);
                let res = c * c * lap + lam * lam * u.values[i] - v.values[i];
                worst = worst.max(res.norm() / vmax);
            }
        }
        assert!(worst < 1e-6, "j={j} ℓ={ell} λ={lam}: {worst:e}");
    }
}

#[test]
fn zero_source_and_linearity() {
    let d = m2();
    let g = RadialGrid::with_intervals(&d, 600);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_source(&g, &mut rng);
    let w = random_source(&g, &mut rng);
    let geo = Geometry::Interior(d.clone());
    let lam = C::new(13.0, 0.0);
    let (a, b) = (C::new(0.3, -1.2), C::new(2.0, 0.5));
    let comb = RadialField { grid: g.clone(), values: v.values.iter().zip(&w.values).map(|(x, y)| a * x + b * y).collect() };
    let ru = apply_resolvent(&geo, ProblemKind::Wave, 5, lam, &v).unwrap();
    let rw = apply_resolvent(&geo, ProblemKind::Wave, 5, lam, &w).unwrap();
    let rc = apply_resolvent(&geo, ProblemKind::Wave, 5, lam, &comb).unwrap();
    let scale = rc.values.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for i in 0..g.len() {
        assert!((rc.values[i] - a * ru.values[i] - b * rw.values[i]).norm() < 1e-12 * scale);
    }
    let z = apply_resolvent(&geo, ProblemKind::Wave, 5, lam, &RadialField::zeros(g)).unwrap();
    assert!(z.values.iter().all(|x| *x == C::new(0.0, 0.0)));
}

#[test]
fn kernel_is_transpose_symmetric() {
    for d in [mono(), m2()] {
        let g = RadialGrid::with_intervals(&d, 800);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_source(&g, &mut rng);
        let w = random_source(&g, &mut rng);
        let geo = Geometry::Interior(d.clone());
        for (j, ell, lam) in [(0u8, 2usize, C::new(7.0, 0.0)), (1, 9, C::new(21.0, 0.4))] {
            let rv = apply_resolvent(&geo, kind(j), ell, lam, &v).unwrap();
            let rw = apply_resolvent(&geo, kind(j), ell, lam, &w).unwrap();
            let a = bilinear(&d, &rv, &w);
            let b = bilinear(&d, &v, &rw);
            assert!((a - b).norm() < 1e-10 * a.norm(), "{a} vs {b}");
        }
    }
}

#[test]
fn exterior_restriction_is_exact() {
    let ext = ExteriorDomain::<f64>::new(&[1.0], &[], 1.0, InnerBc::Dirichlet).unwrap();
    let lam = C::new(9.0, -0.25);
    let small = ext.truncated(2.0).unwrap();
    let big = ext.truncated(3.0).unwrap();
    let gs = RadialGrid::with_spacing(&small, 1e-3);
    let gb = RadialGrid::with_spacing(&big, 1e-3);
    // vanishes before the smaller cutoff, so both quadratures see the same source
    let src = |r: f64| if (r - 1.5).abs() < 0.3 { C::new((3.0 * r).cos(), r) * (0.09 - (r - 1.5).powi(2)) } else { C::new(0.0, 0.0) };
    let vs = RadialField::from_fn(gs.clone(), src);
    let vb = RadialField::from_fn(gb.clone(), |r| if r <= 2.0 + 1e-12 { src(r) } else { C::new(0.0, 0.0) });
    let us = apply_resolvent(&Geometry::Exterior { domain: ext.clone(), cutoff: 2.0 }, ProblemKind::Wave, 3, lam, &vs).unwrap();
    let ub = apply_resolvent(&Geometry::Exterior { domain: ext.clone(), cutoff: 3.0 }, ProblemKind::Wave, 3, lam, &vb).unwrap();
    for i in 0..gs.len() {
        assert!((gs.radii()[i] - gb.radii()[i]).abs() < 1e-12);
        let e = (us.values[i] - ub.values[i]).norm();
        assert!(e < 1e-9 * us.values[i].norm().max(1e-3), "r={} {} vs {}", gs.radii()[i], us.values[i], ub.values[i]);
    }
}

#[test]
fn self_adjoint_limit_matches_distance_to_spectrum() {
    let d = mono().with_a0(0.0);
    let g = Geometry::Interior(d.clone());
    for &(ell, lam) in &[(0usize, 5.3), (3, 12.7), (7, 20.2)] {
        let rep = find_roots(&d, ModeProblem::new(ProblemKind::Schrodinger, ell), Rect::new(0.5, lam + 5.0, -0.05, 0.05), &FindOptions::default()).unwrap();
        let dist = rep.roots.iter().map(|r| (lam * lam - (r.lambda * r.lambda).re).abs()).fold(f64::INFINITY, f64::min);
        let n = mode_norm(&g, ProblemKind::Schrodinger, ell, C::new(lam, 0.0), 2000).unwrap();
        assert!((n.norm * dist - 1.0).abs() < 0.02);
    }
}

#[test]
fn norm_converges_under_refinement() {
    let g = Geometry::Interior(mono());
    for (j, ell, lam) in [(1u8, 4usize, 17.3), (0, 20, 41.0)] {
        let a = mode_norm(&g, kind(j), ell, C::new(lam, 0.0), 2000).unwrap().norm;
        let b = mode_norm(&g, kind(j), ell, C::new(lam, 0.0), 4000).unwrap().norm;
        assert!((a - b).abs() < 0.005 * b);
    }
}

#[test]
fn norm_grows_near_a_quasi_mode() {
    let rev = LayeredBallDomain::new(&[1.0, 2.0, 3.0], &[1.0, 2.0], 1.0, InnerBc::Dirichlet).unwrap();
    let mp = ModeProblem::new(ProblemKind::Wave, 25);
    let rep = find_roots(&rev, mp, Rect::new(20.0, 40.0, -0.05, 1.0), &FindOptions::default()).unwrap();
    let root = rep.roots.iter().min_by(|a, b| a.lambda.im.partial_cmp(&b.lambda.im).unwrap()).unwrap().lambda;
    let g = Geometry::Interior(rev);
    let near = mode_norm(&g, ProblemKind::Wave, 25, C::new(root.re, 0.0), 2000).unwrap().norm;
    let base = mode_norm(&g, ProblemKind::Wave, 25, C::new(root.re + 0.7, 0.0), 2000).unwrap().norm;
    assert!(near >= 10.0 * base, "{near:e} vs {base:e} at {root}");
}

#[test]
fn outgoing_resolvent_bound_off_axis() {
    let ext = ExteriorDomain::<f64>::new(&[1.0], &[], 1.0, InnerBc::Dirichlet).unwrap();
    let lam = C::new((100.0f64 - 0.25).sqrt(), -0.5);
    for ell in [0usize, 7, 20] {
        let n = exterior_mode_norm(&ext, ell, lam, 3.0, 2000).unwrap().norm;
        assert!(n <= 1.05 / (lam.norm() * 0.5));
    }
}

#[test]
fn sweep_rows_verify_their_tail() {
    let rows = full_norm_sweep(&mono(), ProblemKind::Wave, &[12.0, 25.0], &SweepPolicy { quadrature_n: 600, ..Default::default() }).unwrap();
    for r in &rows {
        assert!(r.tail_ok && !r.stalled);
        assert!(r.ell_max >= (r.lambda * 3.0).ceil() as usize + 10);
        assert!((r.lambda_pow_j_times_norm - r.lambda * r.norm).abs() < 1e-12);
    }
}

#[test]
fn sweep_is_the_maximum_over_modes() {
    let d = mono();
    let lam = 9.0;
    let rows = full_norm_sweep(&d, ProblemKind::Schrodinger, &[lam], &SweepPolicy { quadrature_n: 500, ..Default::default() }).unwrap();
    let g = Geometry::Interior(d);
    let best = (0..=rows[0].ell_max)
        .map(|l| mode_norm(&g, ProblemKind::Schrodinger, l, C::new(lam, 0.0), 500).unwrap().norm)
        .fold(0.0, f64::max);
    assert!((rows[0].norm - best).abs() < 1e-10 * best);
}

#[test]
fn dtn_limits() {
    let nu = outgoing_dtn(0, C::new(7.0, 0.0), 2.0, 1.5).unwrap().nu;
    let want = C::new(-1.0 / (7.0 * 1.5), -0.5);
    assert!((nu - want).norm() < 1e-12 * want.norm());
    // (ℓ+½)/(λr) = ½ at λ = 200
    let nu = outgoing_dtn(99, C::new(200.0, 0.0), 1.0, 1.0).unwrap().nu;
    assert!((nu.im + 0.75f64.sqrt()).abs() < 0.02 * 0.75f64.sqrt());
    assert!(matches!(outgoing_dtn(3, C::new(0.0, 0.0), 1.0, 1.0), Err(ResolventError::ZeroLambda)));
}

#[test]
fn glancing_exponent_is_scale_covariant() {
    let lams = [50.0, 100.0, 200.0, 400.0];
    let a = glancing_exponent(1.0f64, 1.0, &lams).unwrap();
    let b = glancing_exponent(1.0, 2.0, &lams).unwrap();
    assert!((-0.43..=-0.23).contains(&a.slope));
    assert!((a.slope - b.slope).abs() < 0.05);
    assert!(glancing_exponent(1.0, 1.0, &[100.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_identity(seed in any::<u64>(), j in 0u8..2, ell in 0usize..=10, which in 0usize..3, m2_domain in any::<bool>()) {
        let d = if m2_domain { m2() } else { mono() };
        let lam = [5.0, 20.0, 50.0][which];
        let g = RadialGrid::with_intervals(&d, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_source(&g, &mut rng);
        let r = green_residual(&d, j, ell, lam, &v);
        prop_assert!(r < 1e-8, "{r:e}");
    }

    #[test]
    fn dtn_is_dissipative_in_the_hyperbolic_range(lam in 1.0f64..300.0, c in 0.3f64..3.0, r in 0.5f64..3.0, frac in 0.0f64..1.0) {
        let ell = (frac * lam * r / c).floor() as usize;
        let nu = outgoing_dtn(ell, C::new(lam, 0.0), c, r).unwrap().nu;
        prop_assert!(nu.im < 0.0 && nu.re < 0.0, "ℓ={ell}: {nu}");
    }
}
