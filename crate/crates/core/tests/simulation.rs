use solgas_core::geometry::Verdict;
use solgas_core::kernels::KernelSpec;
use solgas_core::simulator::{
    characteristics_check, hamiltonian_drift, mode_discrepancy, observed_orders, refinement_study,
    run, FieldState, Grid1D, InitialData, Profile, RunOptions, Variables,
};
use solgas_core::structures::Catalogue;

const X_MIN: f64 = -5.0;
const X_MAX: f64 = 5.0;

fn scalar_pulse() -> InitialData {
    InitialData {
        u: vec![Profile::Constant { value: 0.1 }],
        eta: vec![Profile::Gaussian {
            base: 1.2,
            amplitude: 0.1,
            center: 0.0,
            width: 1.25,
        }],
    }
}

/// η(x, t) = η₀(ξ) with x = ξ + 4η₀(ξ)² t, solved by bisection for ξ.
fn exact_scalar(init: &Profile, x: f64, t: f64) -> f64 {
    let len = X_MAX - X_MIN;
    let eta0 = |xi: f64| init.eval(X_MIN + (xi - X_MIN).rem_euclid(len));
    let f = |xi: f64| xi + 4.0 * eta0(xi).powi(2) * t - x;
    let (mut lo, mut hi) = (x - 4.0 * 1.4f64.powi(2) * t - 1.0, x + 1.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eta0(0.5 * (lo + hi))
}

#[test]
fn scalar_kdv_matches_exact_characteristics() {
    let k = KernelSpec::kdv();
    let init = scalar_pulse();
    let t = 0.2;
    let mut dx = Vec::new();
    let mut err = Vec::new();
    for m in [100, 200, 400] {
        let g = Grid1D::new(m, X_MIN, X_MAX, true).unwrap();
        let s0 = FieldState::from_initial(&k, &g, Variables::UEta, &init).unwrap();
        let opts = RunOptions {
            t_max: t,
            output_every: usize::MAX,
            ..RunOptions::default()
        };
        let out = run(&s0, &k, &opts, None).unwrap();
        let last = out.trajectory.last().unwrap();
        let e = g
            .centres()
            .iter()
            .zip(&last.eta[0])
            .map(|(&x, &h)| (h - exact_scalar(&init.eta[0], x, t)).abs())
            .fold(0.0f64, f64::max);
        dx.push(g.dx);
        err.push(e);
    }
    let orders = observed_orders(&dx, &err);
    assert!(orders.iter().all(|o| *o >= 0.8), "{err:?} {orders:?}");
    // O(dx) with a unit constant
    assert!(err.iter().zip(&dx).all(|(e, h)| e <= h), "{err:?}");
}

#[test]
fn scalar_characteristics_check_passes_and_converges() {
    let k = KernelSpec::kdv();
    let mut dx = Vec::new();
    let mut dev = Vec::new();
    for m in [100, 200, 400] {
        let g = Grid1D::new(m, X_MIN, X_MAX, true).unwrap();
        let s0 = FieldState::from_initial(&k, &g, Variables::UEta, &scalar_pulse()).unwrap();
        let out = run(&s0, &k, &RunOptions::default(), None).unwrap();
        let rep = characteristics_check(&out.trajectory, &k).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert!(rep.shock_time.is_none());
        dx.push(g.dx);
        dev.push(rep.max_deviation);
    }
    let orders = observed_orders(&dx, &dev);
    assert!(orders.iter().all(|o| *o >= 0.8), "{dev:?} {orders:?}");
}

#[test]
fn two_component_kdv_conservation() {
    let k = KernelSpec::kdv();
    let h = Catalogue::builtin()
        .family("kdv_flat")
        .unwrap()
        .instantiate(2)
        .unwrap()
        .densities
        .unwrap();
    let g = Grid1D::new(200, X_MIN, X_MAX, true).unwrap();
    let s0 = FieldState::from_initial(
        &k,
        &g,
        Variables::UEta,
        &InitialData::default_pulse(&k, 2, &g),
    )
    .unwrap();
    let out = run(&s0, &k, &RunOptions::default(), Some(&h)).unwrap();
    assert!(out.error.is_none());
    assert!(out.report.mass_drift.iter().all(|d| *d <= 1e-10));
    assert!(out.report.shock_time.is_none());

    let study = refinement_study(&[100, 200, 400], X_MIN, X_MAX, true, |g| {
        hamiltonian_drift(
            &k,
            g,
            &InitialData::default_pulse(&k, 2, g),
            &RunOptions::default(),
            &h,
        )
    })
    .unwrap();
    assert!(study.min_order >= 0.8, "{study:?}");
}

#[test]
fn weight_and_parameter_forms_agree() {
    let k = KernelSpec::kdv();
    let study = refinement_study(&[100, 200, 400], X_MIN, X_MAX, true, |g| {
        mode_discrepancy(
            &k,
            g,
            &InitialData::default_pulse(&k, 2, g),
            &RunOptions::default(),
        )
    })
    .unwrap();
    for (d, dx) in study.values.iter().zip(&study.dx) {
        assert!(d <= dx, "{study:?}");
    }
    assert!(study.values.windows(2).all(|w| w[1] < w[0]), "{study:?}");
}

#[test]
fn pulses_stay_smooth_past_the_test_horizon() {
    let k = KernelSpec::kdv();
    let g = Grid1D::new(200, X_MIN, X_MAX, true).unwrap();
    let s0 = FieldState::from_initial(
        &k,
        &g,
        Variables::UEta,
        &InitialData::default_pulse(&k, 2, &g),
    )
    .unwrap();
    let opts = RunOptions {
        t_max: 0.6,
        output_every: usize::MAX,
        ..RunOptions::default()
    };
    let out = run(&s0, &k, &opts, None).unwrap();
    assert!(out.report.shock_time.is_none(), "{:?}", out.report);
}
