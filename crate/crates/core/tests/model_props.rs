use layerspec_core::model::*;
use proptest::prelude::*;

fn domain_strategy() -> impl Strategy<Value = DomainConfig> {
    (1usize..5, 0.1f64..2.0, 0.0f64..3.0, any::<bool>()).prop_flat_map(|(m, r0, a0, dir)| {
        (
            prop::collection::vec(0.05f64..2.0, m),
            prop::collection::vec(0.1f64..5.0, m),
        )
            .prop_map(move |(gaps, speeds)| {
                let mut radii = vec![r0];
                for g in gaps {
                    radii.push(radii.last().unwrap() + g);
                }
                DomainConfig {
                    radii,
                    speeds,
                    a0,
                    inner_bc: if dir { InnerBc::Dirichlet } else { InnerBc::Neumann },
                }
            })
    })
}

proptest! {
    #[test]
    fn config_roundtrips_through_json(cfg in domain_strategy()) {
        let s = serde_json::to_string(&cfg).unwrap();
        let back: DomainConfig = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(&back, &cfg);
        let d = validate_domain::<f64>(&cfg).unwrap();
        prop_assert_eq!(d.to_config(), cfg);
    }

    #[test]
    fn swapping_two_radii_is_reported(cfg in domain_strategy(), k in 0usize..4) {
        prop_assume!(cfg.radii.len() > k + 1);
        let mut bad = cfg.clone();
        bad.radii.swap(k, k + 1);
        let errs = validate_domain::<f64>(&bad).unwrap_err();
        let want = DomainError::NonMonotoneRadii { index: k + 1 };
        prop_assert!(errs.0.contains(&want));
    }

    #[test]
    fn grids_contain_every_interface(cfg in domain_strategy(), n in 4usize..300) {
        let d = validate_domain::<f64>(&cfg).unwrap();
        let g = RadialGrid::with_intervals(&d, n);
        for (k, &i) in g.breaks().iter().enumerate() {
            prop_assert_eq!(g.radii()[i], d.radii()[k]);
        }
        let w: f64 = g.trapezoid_weights().iter().sum();
        prop_assert!((w - (d.outer_radius() - d.inner_radius())).abs() < 1e-12);
    }

    #[test]
    fn h_norm_is_quadratic(cfg in domain_strategy(), s in -3.0f64..3.0) {
        let d = validate_domain::<f64>(&cfg).unwrap();
        let g = RadialGrid::with_intervals(&d, 200);
        let f = RadialField::from_fn(g, |r| num_complex::Complex64::new(r.sin(), r.cos()));
        let a = h_norm_mode(&d, &f).unwrap();
        let b = h_norm_mode(&d, &f.scale(num_complex::Complex64::new(s, 0.0))).unwrap();
        prop_assert!((b - s * s * a).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn reference_config_parses() {
    let s = r#"{"radii":[1,2,3],"speeds":[2,1],"a0":1,"inner_bc":"dirichlet"}"#;
    let cfg: DomainConfig = serde_json::from_str(s).unwrap();
    let d = validate_domain::<f64>(&cfg).unwrap();
    assert!(speeds_monotone(&d));
    assert_eq!(d.transit_time(), 1.5);
}

#[test]
fn single_precision_instantiation() {
    let d = LayeredBallDomain::<f32>::new(&[1.0, 2.0], &[1.0], 0.0, InnerBc::Dirichlet).unwrap();
    let g = RadialGrid::with_intervals(&d, 400);
    let one = RadialField::from_fn(g, |_| num_complex::Complex32::new(1.0, 0.0));
    assert!((h_norm_mode(&d, &one).unwrap() - 7.0 / 3.0).abs() < 1e-4);
}
