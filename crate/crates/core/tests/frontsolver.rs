use kppfront::charspec::chi_roots;
use kppfront::domain::{GridOptions, GridProfile, LeftTail, Params, RightTail};
use kppfront::frontsolver::{
    apply_Am, apply_B, apply_B2, check_cone, lower_value, monotone_front, semi_wavefront,
    uniqueness_probe, OperatorConfig, SolveOptions, UpperSolution,
};
use kppfront::oracle::{aligned_distance, collocation_front, BvpSpec};
use kppfront::shape::{classify, Kind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logistic(p: Params, window: (f64, f64)) -> GridProfile {
    let (lambda, _) = chi_roots(p.c.max(2.0)).unwrap();
    let grid = GridOptions {
        window: Some(window),
        ..GridOptions::default()
    }
    .build(&p, lambda, None)
    .unwrap();
    GridProfile::from_fn(
        &grid,
        |t| 1.0 / (1.0 + (-t).exp()),
        LeftTail::exponential(1.0),
        RightTail::ExponentialApproach {
            limit: 1.0,
            amplitude: 1.0,
            rate: -1.0,
        },
        p,
    )
    .unwrap()
}

#[test]
fn confluent_kernel_limit() {
    let window = (-40.0, 40.0);
    let near = logistic(Params::new(2.0 + 1e-6, 0.3).unwrap(), window);
    let at = logistic(Params::new(2.0, 0.3).unwrap(), window);
    let b = apply_B(&near).unwrap();
    let b2 = apply_B2(&at).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..at.len() {
        worst = worst.max((b.value_at(at.t(i)) - b2.values[i]).abs());
    }
    assert!(worst <= 1e-4, "B vs B2 differ by {worst:e}");
}

#[test]
fn b2_rejects_other_speeds() {
    let p = logistic(Params::new(2.5, 0.3).unwrap(), (-40.0, 40.0));
    assert!(apply_B2(&p).is_err());
}

#[test]
fn front_is_a_fixed_point_of_b() {
    let p = Params::new(2.5, 0.2).unwrap();
    let s = monotone_front(&p, 1e-10, 5000).unwrap();
    let b = apply_B(&s.profile).unwrap();
    let gap = b
        .values
        .iter()
        .zip(&s.profile.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-8, "|B phi - phi| = {gap:e}");
    assert!(s.profile.values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn b_preserves_order() {
    let p = Params::new(2.5, 0.3).unwrap();
    let s = monotone_front(&p, 1e-10, 5000).unwrap();
    let phi = &s.profile;
    // a left translate of an increasing profile lies above it
    let psi = GridProfile {
        values: (0..phi.len()).map(|i| phi.value_at(phi.t(i) + 0.7)).collect(),
        ..phi.clone()
    };
    let (bphi, bpsi) = (apply_B(phi).unwrap(), apply_B(&psi).unwrap());
    for i in 0..phi.len() {
        assert!(psi.values[i] >= phi.values[i] - 1e-12);
        assert!(bpsi.values[i] >= bphi.values[i] - 1e-10, "order lost at t = {}", phi.t(i));
    }
}

#[test]
fn operators_commute_with_grid_shifts() {
    let p = Params::new(3.0, 0.5).unwrap();
    let phi = logistic(p, (-50.0, 50.0));
    let k = 37.0;
    let mut shifted = phi.clone();
    shifted.t0 += k * phi.dt;
    shifted.left_tail = LeftTail::exponential(1.0);
    shifted.right_tail = RightTail::ExponentialApproach {
        limit: 1.0,
        amplitude: (k * phi.dt).exp(),
        rate: -1.0,
    };
    let (a, b) = (apply_B(&phi).unwrap(), apply_B(&shifted).unwrap());
    let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-12, "B shift gap {gap:e}");
    let cfg = OperatorConfig::new(&p).unwrap();
    let (a, b) = (apply_Am(&phi, &cfg, false).unwrap(), apply_Am(&shifted, &cfg, false).unwrap());
    let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-10, "A_m shift gap {gap:e}");
}

#[test]
fn am_maps_the_cone_into_itself() {
    let p = Params::new(3.0, 1.0).unwrap();
    let cfg = OperatorConfig::new(&p).unwrap();
    let up = UpperSolution::new(&cfg);
    let grid = GridOptions {
        window: Some((-80.0, up.t_beta + 120.0)),
        ..GridOptions::default()
    }
    .build(&p, cfg.lambda, None)
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_251_019);
    for _ in 0..100 {
        let base: f64 = rng.gen_range(0.1..0.9);
        let amp: f64 = rng.gen_range(0.0..0.09);
        let w: f64 = rng.gen_range(0.1..2.0);
        let ph: f64 = rng.gen_range(0.0..6.3);
        let (a, b) = (rng.gen_range(-60.0..0.0), rng.gen_range(5.0..60.0));
        let theta = |t: f64| {
            let window = 1.0 / (1.0 + (a - t).exp()) / (1.0 + (t - b).exp());
            base + amp * (w * t + ph).sin() * window
        };
        let limit = base * 2.0 * cfg.beta;
        let phi = GridProfile::from_fn(
            &grid,
            |t| {
                let lo = lower_value(&cfg, t);
                lo + theta(t) * (up.value(t) - lo)
            },
            LeftTail::exponential(cfg.lambda),
            RightTail::ConstantLimit {
                limit,
                tol: 1e-6 * limit,
            },
            p,
        )
        .unwrap();
        let out = apply_Am(&phi, &cfg, true).unwrap();
        check_cone(&out, &cfg, 1e-8).unwrap();
    }
}

#[test]
fn upper_solution_matches_collocation() {
    let p = Params::new(3.0, 0.1).unwrap();
    let cfg = OperatorConfig::new(&p).unwrap();
    let beta = cfg.beta;
    let up = UpperSolution::new(&cfg);
    let g = move |u: f64| -> (f64, f64) {
        if u <= beta {
            (u, 1.0)
        } else if u <= 2.0 * beta {
            (2.0 * beta - u, -1.0)
        } else {
            (0.0, 0.0)
        }
    };
    let front = collocation_front(&BvpSpec {
        c: 3.0,
        reaction: &g,
        limit: 2.0 * beta,
        t_left: up.t_beta - 60.0,
        t_right: up.t_beta + 60.0,
        left_value: 1e-8 * beta,
        nodes: 12_000,
    })
    .unwrap();
    let grid = GridOptions {
        window: Some((up.t_beta - 50.0, up.t_beta + 40.0)),
        ..GridOptions::default()
    }
    .build(&p, cfg.lambda, None)
    .unwrap();
    let sampled = GridProfile::from_fn(
        &grid,
        |t| up.value(t) / (2.0 * beta),
        LeftTail::exponential(cfg.lambda),
        RightTail::ConstantLimit { limit: 1.0, tol: 1.0 },
        p,
    )
    .unwrap();
    let mut scaled = front.clone();
    scaled.phi.iter_mut().for_each(|v| *v /= 2.0 * beta);
    scaled.dphi.iter_mut().for_each(|v| *v /= 2.0 * beta);
    let (_, dist) = aligned_distance(&sampled, &scaled).unwrap();
    assert!(dist <= 1e-6, "upper solution vs collocation: {dist:e}");
}

#[test]
fn semi_wavefront_settles_at_one_for_moderate_delay() {
    let p = Params::new(2.5, 0.8).unwrap();
    let s = semi_wavefront(&p, 1e-10, 50, 1.0).unwrap();
    let v = &s.profile.values;
    assert!((v[v.len() - 1] - 1.0).abs() <= 1e-6);
    assert!(s.report.ode_residual <= 1e-7, "ode residual {:e}", s.report.ode_residual);
    let r = classify(&s.profile, &p).unwrap();
    assert_eq!(r.kind, Kind::SlowOscillating);
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn seeds_give_the_same_semi_wavefront() {
    let p = Params::new(2.5, 0.8).unwrap();
    let opts = SolveOptions {
        tol: 1e-10,
        max_iter: 50,
        ..SolveOptions::default()
    };
    let spread = uniqueness_probe(&p, &opts).unwrap();
    assert!(spread <= 1e-6, "seed spread {spread:e}");
}

#[test]
fn sub_minimal_speed_is_rejected() {
    let p = Params::new(1.5, 0.1).unwrap();
    assert!(monotone_front(&p, 1e-8, 10).is_err());
    assert!(semi_wavefront(&p, 1e-8, 10, 1.0).is_err());
}
