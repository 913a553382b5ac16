use layerspec_core::special::*;
use layerspec_core::Complex as C;
use proptest::prelude::*;

// mpmath, 40 digits: j_ℓ(z) = sqrt(π/2z) J_{ℓ+½}(z), same for y
const TABLE: &[(usize, f64, f64, f64, f64, f64, f64)] = &[
    (0, 0.5, 0.0, 9.58851077208406e-1, 0.0, -1.7551651237807454, 0.0),
    (0, 3.7, 0.0, -1.4319895700229546e-1, 0.0, 2.292162247865968e-1, 0.0),
    (0, 25.0, 0.0, -5.2940700039109212e-3, 0.0, -3.9648112474538944e-2, 0.0),
    (0, 80.0, 0.0, -1.242360817404219e-2, 0.0, 1.3798405479880945e-3, 0.0),
    (0, 10.0, 3.0, -7.3382887642506923e-1, -6.2042270041632738e-1, 6.2500072577927055e-1, -7.3249376240981115e-1),
    (0, 2.0, -5.0, -6.7032159451825751e-1, 1.3763911685498479e+1, 1.3763048718647279e+1, 6.7122757632443583e-1),
    (0, 0.01, 0.02, 1.0000499994166435, -6.6668666675396733e-5, -1.9994999541660972e+1, 4.0010000083328055e+1),
    (1, 0.5, 0.0, 1.6253703063606657e-1, 0.0, -4.4691813247698969, 0.0),
    (1, 3.7, 0.0, 1.9051380397516559e-1, 0.0, 2.051492880257e-1, 0.0),
    (1, 25.0, 0.0, -3.9859875274695381e-2, 0.0, 3.7081455049293634e-3, 0.0),
    (1, 80.0, 0.0, 1.2245454458125671e-3, 0.0, 1.2440856180892041e-2, 0.0),
    (1, 10.0, 3.0, 5.4060112150863134e-1, -7.6921615117025212e-1, 7.7100801376968641e-1, 5.3601958297196111e-1),
    (1, 2.0, -5.0, 1.1343731421525593e+1, 1.504890176269459, 1.5037684757483396, -1.1344680694261056e+1),
    (1, 0.01, 0.02, 3.333700004880946e-3, 6.6667333288094625e-3, 1.1994999625004861e+3, 1.6000000500016667e+3),
    (5, 0.5, 0.0, 2.9774668754574456e-6, 0.0, -6.1327563166980636e+4, 0.0),
    (5, 3.7, 0.0, 3.8613656933813524e-2, 0.0, -8.920372653142623e-1, 0.0),
    (5, 25.0, 0.0, -3.6117795989722372e-2, 0.0, -1.8309489232548348e-2, 0.0),
    (5, 80.0, 0.0, -9.6200450071302631e-4, 0.0, 1.2477658581324191e-2, 0.0),
    (5, 10.0, 3.0, -4.4512177257728978e-1, -4.8733594008270423e-1, 4.9513544155127208e-1, -4.4465726452580772e-1),
    (5, 2.0, -5.0, 4.9888415137119246e-1, 8.2786072186331499e-1, 8.1493750659442761e-1, -4.9858563914914875e-1),
    (5, 0.01, 0.02, 3.9441932134538262e-13, -3.6557065161492812e-13, -7.0761011977500625e+12, 2.660918403e+12),
    (20, 0.5, 0.0, 7.2515880810153971e-32, 0.0, -6.7288761838234723e+29, 0.0),
    (20, 3.7, 0.0, 1.5029677809049535e-14, 0.0, -4.4593862618448745e+11, 0.0),
    (20, 25.0, 0.0, 2.8500071484154682e-2, 0.0, 4.403198567527645e-2, 0.0),
    (20, 80.0, 0.0, 1.0400578884991936e-2, 0.0, -7.3123450945617127e-3, 0.0),
    (20, 10.0, 3.0, 2.3137377197668714e-6, -5.7336955091598326e-6, -2.3360668655105318e+2, -3.5325243344464058e+2),
    (20, 2.0, -5.0, 5.644167242820259e-13, 4.0946453324444005e-11, -9.9799324312446137e+7, 4.0954252118589725e+7),
    (20, 0.01, 0.02, -7.3616073177351469e-59, -1.1263145865568147e-59, 4.4935165325126022e+57, -1.3940166354994786e+58),
    (50, 0.5, 0.0, 3.2227215374275173e-96, 0.0, -6.1447912922121701e+93, 0.0),
    (50, 3.7, 0.0, 8.7388829861430681e-53, 0.0, -3.0703667311086535e+49, 0.0),
    (50, 25.0, 0.0, 1.2540416973758975e-12, 0.0, -3.6351814071026861e+8, 0.0),
    (50, 80.0, 0.0, -1.0638570118081817e-2, 0.0, -9.3934266037485882e-3, 0.0),
    (50, 10.0, 3.0, -2.8458342560176529e-31, 1.9916889441219602e-30, 1.9621585706496956e+26, 4.3799365544681491e+26),
    (50, 2.0, -5.0, -1.4064370118946308e-44, -3.9327701567668743e-45, 7.658012758235271e+40, 9.9273763892979675e+40),
    (50, 0.01, 0.02, 4.011484970997641e-164, -1.0056228097887427e-163, -4.075267471651376e+162, -3.4347947272213477e+161),
];

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn matches_high_precision_table() {
    for &(l, zr, zi, jr, ji, yr, yi) in TABLE {
        let z = C::new(zr, zi);
        let (j, _) = sph_j(l, z).unscaled().unwrap();
        let (y, _) = sph_y(l, z).unwrap().unscaled().unwrap();
        // accuracy is relative to the envelope e^{|Im z|}, not to |j| itself
        let env = zi.abs().exp();
        let tol = 1e-12;
        let ej = (j - C::new(jr, ji)).norm() / C::new(jr, ji).norm().max(env * f64::EPSILON);
        assert!(ej < tol || rel(j, C::new(jr, ji)) < tol, "j_{l}({z}) = {j}, want ({jr}, {ji}), err {ej:e}");
        assert!(rel(y, C::new(yr, yi)) < tol, "y_{l}({z}) = {y}, want ({yr}, {yi})");
    }
}

#[test]
fn derivative_matches_neighbouring_orders() {
    // j_ℓ' = j_{ℓ-1} − (ℓ+1) j_ℓ / z
    for &(l, zr, zi, ..) in TABLE.iter().filter(|t| t.0 > 0) {
        let z = C::new(zr, zi);
        let (j, dj) = sph_j(l, z).unscaled().unwrap();
        let (jm, _) = sph_j(l - 1, z).unscaled().unwrap();
        let want = jm - j * (l as f64 + 1.0) / z;
        assert!((dj - want).norm() <= 1e-11 * want.norm().max(jm.norm()), "ℓ={l} z={z}");
    }
}

#[test]
fn radiating_branch_is_j_minus_i_y() {
    for &(l, zr, zi, jr, ji, yr, yi) in TABLE {
        let z = C::new(zr, zi);
        let (h, _) = sph_h_radiating(l, z).unwrap().unscaled().unwrap();
        let want = C::new(jr, ji) - C::i() * C::new(yr, yi);
        assert!(rel(h, want) < 1e-11, "h_{l}({z})");
    }
}

#[test]
fn small_argument_limits() {
    // j_ℓ(z) ≈ z^ℓ/(2ℓ+1)!!, y_ℓ(z) ≈ −(2ℓ−1)!!/z^{ℓ+1}
    for l in 0..8usize {
        let z = C::new(1e-4, 3e-5);
        let dfact = |n: i64| (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>();
        let j0 = z.powi(l as i32) / dfact(2 * l as i64 + 1);
        let y0 = -dfact(2 * l as i64 - 1) / z.powi(l as i32 + 1);
        let (j, _) = sph_j(l, z).unscaled().unwrap();
        let (y, _) = sph_y(l, z).unwrap().unscaled().unwrap();
        assert!(rel(j, j0) < 1e-6, "ℓ={l}");
        assert!(rel(y, y0) < 1e-6, "ℓ={l}");
    }
}

#[test]
fn zero_argument_is_rejected_for_singular_families() {
    let z = C::new(0.0, 0.0);
    assert!(matches!(sph_y(0, z), Err(SpecialError::ArgumentZero)));
    assert!(matches!(sph_h_radiating(3, z), Err(SpecialError::ArgumentZero)));
    assert_eq!(sph_j(0, z).unscaled().unwrap().0, C::new(1.0, 0.0));
}

#[test]
fn range_agrees_with_single_order() {
    let z = C::new(7.3, -1.1);
    let all = sph_j_range(0, 30, z);
    for (l, v) in all.iter().enumerate() {
        let one = sph_j(l, z);
        let (a, _) = v.unscaled().unwrap();
        let (b, _) = one.unscaled().unwrap();
        assert!(rel(a, b) < 1e-13, "ℓ={l}");
    }
}

#[test]
fn huge_orders_stay_finite_when_scaled() {
    let v = sph_y(400, C::new(0.5, 0.0)).unwrap();
    assert!(v.log_magnitude() > 700.0);
    assert!(v.f.norm().is_finite() && v.df.norm().is_finite());
    assert!(matches!(v.unscaled(), Err(SpecialError::OverflowRisk { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recurrences_hold(l in 1usize..60, re in 0.01f64..120.0, im in -6.0f64..6.0) {
        let z = C::new(re, im);
        for fam in [Family::J, Family::Y, Family::H] {
            let r = recurrence_residual(fam, l, z).unwrap();
            prop_assert!(r < 1e-12, "{fam:?} ℓ={l} z={z} residual {r:e}");
        }
    }

    #[test]
    fn wronskian_on_moderate_strip(l in 0usize..60, re in 0.05f64..120.0, im in -2.0f64..2.0) {
        let z = C::new(re, im);
        prop_assert!(wronskian_residual(l, z) < 1e-10);
    }

    #[test]
    fn conjugate_symmetry(l in 0usize..40, re in 0.01f64..50.0, im in -4.0f64..4.0) {
        let z = C::new(re, im);
        let (a, _) = sph_j(l, z).unscaled().unwrap();
        let (b, _) = sph_j(l, z.conj()).unscaled().unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-13 * a.norm().max(1e-300));
    }
}
