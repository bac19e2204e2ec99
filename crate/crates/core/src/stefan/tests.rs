use super::*;
use crate::engine::SmoothBump;
use proptest::prelude::*;

#[test]
fn inverse_and_flux_values() {
    assert_eq!(enthalpy_inverse(-1.5), -0.5);
    assert_eq!(enthalpy_inverse(0.3), 0.3);
    assert_eq!(enthalpy_inverse(-0.5), 0.0);
    assert_eq!(enthalpy_inverse(-1.0), 0.0);
    assert_eq!(enthalpy_inverse(0.0), 0.0);
    assert_eq!(flux_a(0.0, 3.0, 2.0), 0.0);
    assert_eq!(flux_a(0.5, 3.0, 2.0), 1.0);
    assert_eq!(flux_a(-0.5, 3.0, 2.0), -1.5);
    for rho in [-0.7, -0.1, 0.2, 0.9] {
        assert!((enthalpy_inverse(enthalpy(rho)) - rho).abs() < 1e-15);
    }
}

#[test]
fn hand_stencil() {
    let dx = 0.1;
    let mut f = EnthalpyField::from_enthalpy(&[1.0, 0.5, 1.0], 1.0, 1.0, dx).unwrap();
    f.step(0.25 * dx * dx).unwrap();
    assert!((f.h()[1] - 0.75).abs() < 1e-15);
    let c = EnthalpyField::from_enthalpy(&[0.4; 6], 1.0, 2.0, dx).unwrap();
    assert_eq!(step_enthalpy(&c, 0.002).unwrap().h(), c.h());
}

#[test]
fn cfl_is_enforced() {
    let f = EnthalpyField::from_enthalpy(&[0.4; 6], 1.0, 2.0, 0.1).unwrap();
    assert!(matches!(step_enthalpy(&f, 0.0026), Err(Error::Cfl { .. })));
    assert!(step_enthalpy(&f, 0.0025).is_ok());
    let p = PdeParams { dt: Some(0.01), ..PdeParams::new(1.0, 1.0, 1.0, 0.1) };
    assert!(matches!(solve_stefan(&Profile::step(-1.0, 1.0), &p, &[0.1]), Err(Error::Cfl { .. })));
}

#[test]
fn front_examples() {
    let b = extract_front(&[-1.5, -0.5, 0.5], 0.1).unwrap().unwrap();
    assert!(b.abs() < 1e-15);
    let b = extract_front(&[-1.2, 0.4], 0.1).unwrap().unwrap();
    assert!((b - (-0.05 + 0.1 / 3.0)).abs() < 1e-15);
    // the melted fraction sits on the liquid side of the mushy cell
    let b = extract_front(&[-1.3, -0.8, 0.2, 0.6], 0.1).unwrap().unwrap();
    assert!((b - (0.0 - 0.1 * 0.2)).abs() < 1e-15);
    assert_eq!(extract_front(&[0.3, 0.4], 0.1).unwrap(), None);
    assert_eq!(extract_front(&[-1.3, -1.4], 0.1).unwrap(), None);
    assert!(matches!(
        extract_front(&[-1.3, -0.5, 0.2, -0.5, 0.3], 0.1),
        Err(Error::MultiInterface { .. })
    ));
    assert!(matches!(extract_front(&[0.3, -1.4], 0.1), Err(Error::MultiInterface { .. })));
}

#[test]
fn symmetric_front_is_exactly_zero() {
    for theta in [1.0, 0.45] {
        let p = PdeParams::new(1.3, 1.3, 2.0, 1.0 / 64.0);
        let sol = solve_stefan(&Profile::step(-theta, theta), &p, &[0.0, 0.05, 0.1, 0.25]).unwrap();
        for b in &sol.front {
            assert_eq!(*b, Some(0.0));
        }
        for row in &sol.rho {
            let n = row.len();
            for j in 0..n {
                assert_eq!(row[j], -row[n - 1 - j]);
            }
        }
    }
}

#[test]
fn enthalpy_is_conserved_per_step() {
    let p = PdeParams::new(0.7, 1.4, 3.0, 1.0 / 128.0).with_history();
    let sol = solve_stefan(&Profile::step(-0.6, 1.0), &p, &[0.02, 0.1]).unwrap();
    assert!(sol.max_conservation_defect <= 1e-12, "{}", sol.max_conservation_defect);
    let last = sol.history.last().unwrap();
    let field = EnthalpyField::from_enthalpy(last, 0.7, 1.4, p.dx).unwrap();
    let drift = field.total_enthalpy() - sol.initial_enthalpy - sol.boundary_inflow;
    assert!(drift.abs() < 1e-9, "{drift}");
}

#[test]
fn no_interface_matches_heat_kernel() {
    let rho0 = Profile::step(0.3, 1.0);
    let dx = 1.0 / 64.0;
    let p = PdeParams::new(0.5, 1.0, 4.0, dx);
    let sol = solve_stefan(&rho0, &p, &[0.1]).unwrap();
    assert_eq!(sol.front, vec![None]);
    let mut worst: f64 = 0.0;
    for (u, r) in sol.centers.iter().zip(&sol.rho[0]) {
        worst = worst.max((r - heat_solution(&rho0, 1.0, 0.1, *u)).abs());
        assert!((0.3..=1.0).contains(r));
    }
    assert!(worst <= 2.0 * dx, "max error {worst}");
}

/// Shoots `f'' + 2 s f' = 0` from `f(-alpha) = 0`, `f'(-alpha) = 2 alpha`
/// (the Stefan condition) and returns `f(+inf)`.
fn shoot(alpha: f64) -> f64 {
    let rhs = |s: f64, y: [f64; 2]| [y[1], -2.0 * s * y[1]];
    let mut y = [0.0, 2.0 * alpha];
    let mut s = -alpha;
    let h = 1e-3;
    while s < 8.0 {
        let k1 = rhs(s, y);
        let k2 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += h;
    }
    y[0]
}

fn shooting_alpha(theta: f64) -> f64 {
    let (mut lo, mut hi) = (1e-6, 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid) < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn similarity_exponent_matches_shooting() {
    for theta in [0.2, 0.8, 1.0] {
        let a = one_phase_alpha(theta);
        assert!((a - shooting_alpha(theta)).abs() < 1e-6, "theta {theta}");
    }
}

#[test]
fn one_phase_front_converges_to_similarity() {
    let alpha = shooting_alpha(0.8);
    let t: f64 = 0.25;
    let exact = -2.0 * alpha * t.sqrt();
    let mut errs = Vec::new();
    for dx in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let p = PdeParams::new(0.0, 1.0, 3.0, dx);
        let sol = solve_stefan(&Profile::step(0.0, 0.8), &p, &[t]).unwrap();
        errs.push((sol.front[0].unwrap() - exact).abs());
    }
    assert!(errs[2] < errs[0], "{errs:?}");
    assert!(errs[2] <= 0.02 * exact.abs(), "{errs:?}");
}

#[test]
fn absorbed_quadrature_matches_erf() {
    let one = |_: f64| 1.0;
    let q = absorbed_heat_solution(&one, 1.0, 1.0, 2.0);
    assert!((q - 0.842_700_792_949_714_9).abs() < 1e-8, "{q}");
    assert!((absorbed_heat_closed_form(1.0, 1.0, 2.0) - q).abs() < 1e-8);
    for (b, t, u) in [(0.5, 0.3, 0.1), (2.0, 0.01, 0.4), (1.0, 4.0, 3.0)] {
        let d = absorbed_heat_solution(&one, b, t, u) - absorbed_heat_closed_form(b, t, u);
        assert!(d.abs() < 1e-8);
    }
    assert_eq!(absorbed_heat_solution(&one, 1.0, 1.0, 0.0), 0.0);
    let bump = |v: f64| (1.0 - (v - 1.0).powi(2)).max(0.0);
    assert!((absorbed_heat_solution(&bump, 1.0, 1e-8, 1.2) - bump(1.2)).abs() < 1e-3);
}

#[test]
fn dissipated_mass_values() {
    assert_eq!(dissipated_mass(1.0, 0.0), 0.0);
    assert!((dissipated_mass(1.0, 1.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
    assert!((dissipated_mass(0.7, 16.0 * 0.3) - 4.0 * dissipated_mass(0.7, 0.3)).abs() < 1e-14);
    // int_0^inf (1 - erf(u / 2)) du by Simpson
    let m = 4000;
    let h = 20.0 / m as f64;
    let mut s = 0.0;
    for k in 0..=m {
        let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * (1.0 - absorbed_heat_closed_form(1.0, 1.0, k as f64 * h));
    }
    assert!((s * h / 3.0 - dissipated_mass(1.0, 1.0)).abs() < 1e-9);
}

#[test]
fn weak_residual_support_and_zero() {
    let p = PdeParams::new(1.0, 1.0, 1.0, 1.0 / 32.0).with_history();
    let sol = solve_stefan(&Profile::step(-1.0, 1.0), &p, &[0.2]).unwrap();
    let zero = SmoothBump::space_time("z", 0.0, 0.5, 0.0, 0.1, 0.05);
    assert_eq!(weak_residual(&sol, &zero).unwrap(), 0.0);
    let wide = SmoothBump::space_time("w", 0.0, 1.5, 1.0, 0.1, 0.05);
    assert!(matches!(weak_residual(&sol, &wide), Err(Error::Support { .. })));
    let late = SmoothBump::space_time("l", 0.0, 0.5, 1.0, 0.15, 0.1);
    assert!(matches!(weak_residual(&sol, &late), Err(Error::Support { .. })));
    let still = SmoothBump::spatial("s", 0.0, 0.5, 1.0);
    assert!(matches!(weak_residual(&sol, &still), Err(Error::Support { .. })));
    let no_history = solve_stefan(&Profile::step(-1.0, 1.0), &PdeParams::new(1.0, 1.0, 1.0, 1.0 / 32.0), &[0.2]).unwrap();
    let ok = SmoothBump::space_time("g", 0.0, 0.5, 1.0, 0.1, 0.05);
    assert!(weak_residual(&no_history, &ok).is_err());
}

#[test]
fn translated_snapshots_round_trip() {
    let f = |u: f64| (u * 2.0).tanh();
    let df = 2.0;
    let dx = 1.0 / 64.0;
    let c = 0.137;
    let p = PdeParams::new(1.0, 1.0, 2.0, dx);
    let n = (4.0 / dx) as usize;
    let centers: Vec<f64> = (0..n).map(|j| cell_center(j, n, dx)).collect();
    let rho: Vec<Vec<f64>> = (0..3).map(|_| centers.iter().map(|&u| f(u - c)).collect()).collect();
    let sol = StefanSolution::from_snapshots(p, vec![0.0, 0.1, 0.2], rho, vec![Some(c); 3]);
    let mf = to_moving_frame(&sol).unwrap();
    assert_eq!(mf.d, vec![c; 3]);
    for row in &mf.lambda {
        for (u, l) in mf.centers.iter().zip(row) {
            if u.abs() < 1.8 {
                assert!((l - f(*u)).abs() <= dx * df, "{u}");
            }
        }
    }
}

#[test]
fn symmetric_moving_frame_is_identity() {
    let p = PdeParams::new(1.0, 1.0, 2.0, 1.0 / 32.0);
    let sol = solve_stefan(&Profile::step(-1.0, 1.0), &p, &[0.0, 0.1]).unwrap();
    let mf = to_moving_frame(&sol).unwrap();
    assert_eq!(mf.lambda, sol.rho);
}

#[test]
fn csv_headers() {
    let p = PdeParams::new(1.0, 1.0, 1.0, 0.25);
    let sol = solve_stefan(&Profile::step(-1.0, 1.0), &p, &[0.0, 0.01]).unwrap();
    let csv = sol.to_csv();
    assert!(csv.starts_with("time,u,rho\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 8);
    assert_eq!(sol.front_csv(), "time,B\n0,0\n0.01,0\n");
}

#[test]
fn bad_grids_are_rejected() {
    assert!(solve_stefan(&Profile::step(-1.0, 1.0), &PdeParams::new(1.0, 1.0, 1.0, 0.3), &[0.1]).is_err());
    assert!(solve_stefan(&Profile::step(-1.0, 1.0), &PdeParams::new(1.0, 0.0, 1.0, 0.25), &[0.1]).is_err());
    assert!(solve_stefan(&Profile::step(-1.0, 1.0), &PdeParams::new(1.0, 1.0, 1.0, 0.25), &[0.2, 0.1]).is_err());
}

#[test]
fn rescaling_round_trip() {
    let p = scaled_initial_profile(&Profile::step(-0.5, 0.25), 2.0);
    assert_eq!((p.eval(-1.0), p.eval(1.0)), (-1.0, 0.5));
    assert_eq!(rescale_temperature(&[-1.0, 0.5], 2.0), vec![-0.5, 0.25]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn step_is_monotone(
        base in prop::collection::vec(-2.0f64..1.0, 8),
        bump in prop::collection::vec(0.0f64..0.5, 8),
        am in 0.0f64..2.0, ap in 0.1f64..2.0,
    ) {
        let dx = 0.1;
        let upper: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let lo = EnthalpyField::from_enthalpy(&base, am, ap, dx).unwrap();
        let hi = EnthalpyField::from_enthalpy(&upper, am, ap, dx).unwrap();
        let dt = lo.cfl_limit();
        let (lo, hi) = (step_enthalpy(&lo, dt).unwrap(), step_enthalpy(&hi, dt).unwrap());
        for (a, b) in lo.h().iter().zip(hi.h()) {
            prop_assert!(*a <= b + 1e-12);
        }
    }
}
