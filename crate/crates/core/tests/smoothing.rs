use dualreach::kinematics::{planar_dual_arm, ChainSpec, JointSpec, JointVector, LinkSpec, Obstacle, RobotModel, RobotSpec};
use dualreach::smoothing::{
    binary_search_p, configuration_ok, evaluate_constraints, fit_joint, fit_smoothing_spline, knot_roughness, second_difference_roughness,
    spline_fit_all, trajectory_feasible, trajectory_feasible_at, JointCurve, KnotSeries, SmoothingConfig,
    SmoothingContext, TrajectoryState, VERIFY_FACTOR,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_series(seed: u64, n: usize) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (i as f64 * 0.3).sin() + 0.2 * r.random_range(-1.0..1.0))
        .collect()
}

/// Knot values of the smoothing spline from the dense system
/// `(p W + (1 - p) Q R^-1 Q') a = p W y`.
fn dense_fit(t: &[f64], y: &[f64], w: &[f64], p: f64) -> (DVector<f64>, DVector<f64>) {
    let n = t.len();
    let m = n - 2;
    let h: Vec<f64> = t.windows(2).map(|x| x[1] - x[0]).collect();
    let mut q = DMatrix::zeros(n, m);
    let mut r = DMatrix::zeros(m, m);
    for j in 0..m {
        q[(j, j)] = 1.0 / h[j];
        q[(j + 1, j)] = -1.0 / h[j] - 1.0 / h[j + 1];
        q[(j + 2, j)] = 1.0 / h[j + 1];
        r[(j, j)] = (h[j] + h[j + 1]) / 3.0;
        if j + 1 < m {
            r[(j, j + 1)] = h[j + 1] / 6.0;
            r[(j + 1, j)] = h[j + 1] / 6.0;
        }
    }
    let rinv = r.clone().try_inverse().unwrap();
    let k = &q * &rinv * q.transpose();
    let wm = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let lhs = &wm * p + k * (1.0 - p);
    let rhs = &wm * DVector::from_column_slice(y) * p;
    let a = lhs.lu().solve(&rhs).unwrap();
    let gamma = rinv * q.transpose() * &a;
    (a, gamma)
}

fn ls_line(t: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let (mut s0, mut s1, mut s2, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..t.len() {
        s0 += w[i];
        s1 += w[i] * t[i];
        s2 += w[i] * t[i] * t[i];
        b0 += w[i] * y[i];
        b1 += w[i] * t[i] * y[i];
    }
    let det = s0 * s2 - s1 * s1;
    ((s2 * b0 - s1 * b1) / det, (s0 * b1 - s1 * b0) / det)
}

#[test]
fn fit_matches_dense_normal_equations() {
    for seed in 0..20 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let n = r.random_range(3..30);
        let mut t = vec![0.0];
        for _ in 1..n {
            let last = *t.last().unwrap();
            t.push(last + r.random_range(0.2..2.0));
        }
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
        let knots = KnotSeries::new(t.clone(), y.clone(), w.clone()).unwrap();
        for p in [0.01, 0.3, 0.9, 0.999] {
            let s = fit_smoothing_spline(&knots, p).unwrap();
            let (a, gamma) = dense_fit(&t, &y, &w, p);
            for i in 0..n {
                assert!((s.eval(t[i]).unwrap() - a[i]).abs() < 1e-9, "seed {seed} p {p} knot {i}");
            }
            for j in 0..n - 2 {
                assert!((s.eval_all(t[j + 1]).unwrap().d2 - gamma[j]).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn interpolates_at_p_one() {
    for seed in 0..10 {
        let y = noisy_series(seed, 40);
        let s = fit_smoothing_spline(&KnotSeries::uniform(&y, 1e6).unwrap(), 1.0).unwrap();
        for (i, yi) in y.iter().enumerate() {
            assert!((s.eval(i as f64).unwrap() - yi).abs() < 1e-8);
        }
    }
}

#[test]
fn least_squares_line_at_p_zero() {
    for seed in 0..10 {
        let y = noisy_series(seed, 25);
        let mut r = ChaCha8Rng::seed_from_u64(seed + 50);
        let mut w: Vec<f64> = (0..25).map(|_| r.random_range(0.5..2.0)).collect();
        if seed % 2 == 0 {
            w[0] = 1e6;
            w[24] = 1e6;
        }
        let t: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let s = fit_smoothing_spline(&KnotSeries::new(t.clone(), y.clone(), w.clone()).unwrap(), 0.0).unwrap();
        let (c0, c1) = ls_line(&t, &y, &w);
        for i in 0..s.intervals() {
            assert!((s.a[i] - (c0 + c1 * t[i])).abs() < 1e-6);
            assert!((s.b[i] - c1).abs() < 1e-6);
            assert!(s.c[i].abs() < 1e-6 && s.d[i].abs() < 1e-6);
        }
    }
}

#[test]
fn second_derivative_continuity() {
    let y = noisy_series(3, 50);
    for p in [0.1, 0.5, 0.99] {
        let s = fit_smoothing_spline(&KnotSeries::uniform(&y, 1e6).unwrap(), p).unwrap();
        for i in 1..49 {
            let (l, r) = s.one_sided_at_knot(i);
            for d in 0..3 {
                assert!((l[d] - r[d]).abs() < 1e-9, "knot {i} derivative {d}");
            }
        }
        assert_eq!(s.eval_all(0.0).unwrap().d2, 0.0);
        assert!(s.eval_all(49.0).unwrap().d2.abs() < 1e-12);
    }
}

#[test]
fn roughness_matches_quadrature() {
    let y = noisy_series(5, 12);
    let s = fit_smoothing_spline(&KnotSeries::uniform(&y, 1e6).unwrap(), 0.7).unwrap();
    // Simpson is exact for the quadratic f''^2 on each interval.
    let mut integral = 0.0;
    for i in 0..11 {
        let t0 = i as f64;
        let f = |t: f64| s.eval_all(t).unwrap().d2.powi(2);
        integral += (f(t0) + 4.0 * f(t0 + 0.5) + f(t0 + 1.0 - 1e-12)) / 6.0;
    }
    assert!((integral - s.roughness()).abs() < 1e-9 * integral.max(1.0));
}

#[test]
fn roughness_examples() {
    let line: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
    assert!(knot_roughness(&line).unwrap().abs() < 1e-20);
    assert!(second_difference_roughness(&line) < 1e-25);
    let sine: Vec<f64> = (0..30).map(|i| (i as f64 * 0.4).sin()).collect();
    assert!(knot_roughness(&sine).unwrap() > 0.0);
    assert!(second_difference_roughness(&sine) > 0.0);
}

#[test]
fn fidelity_and_curvature_trade_off_monotonically() {
    for seed in 0..10 {
        let y = noisy_series(seed, 30);
        let knots = KnotSeries::uniform(&y, 1e6).unwrap();
        let mut prev_res = f64::INFINITY;
        let mut prev_curv = -1.0;
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let s = fit_smoothing_spline(&knots, p).unwrap();
            let res: f64 = (0..30)
                .map(|t| knots.weights[t] * (y[t] - s.eval(t as f64).unwrap()).powi(2))
                .sum();
            let curv = s.roughness();
            assert!(res <= prev_res * (1.0 + 1e-9));
            assert!(curv >= prev_curv * (1.0 - 1e-9));
            prev_res = res;
            prev_curv = curv;
        }
    }
}

#[test]
fn bisection_examples() {
    let all = binary_search_p(|_| Ok(true), 1e-6, 0).unwrap();
    assert!(all.p_opt <= 1e-6);
    assert_eq!(all.evaluations, 21);

    let r = binary_search_p(|p| Ok(p >= 0.75), 1e-6, 0).unwrap();
    assert!((r.p_opt - 0.75).abs() <= 2e-6);
    assert!(r.p_opt >= 0.75);
    assert_eq!(r.evaluations, 21);

    assert!(binary_search_p(|_| Ok(false), 1e-6, 3).is_err());
    assert!(binary_search_p(|_| Ok(true), 0.0, 0).is_err());
}

proptest! {
    #[test]
    fn bisection_matches_linear_scan(threshold in 0.0f64..1.0) {
        let precision = 1e-6;
        let r = binary_search_p(|p| Ok(p >= threshold), precision, 0).unwrap();
        let steps = (1.0 / precision) as usize;
        let scan = (0..=steps).map(|i| i as f64 * precision).find(|&p| p >= threshold).unwrap();
        prop_assert!((r.p_opt - scan).abs() <= 2.0 * precision);
        prop_assert!(r.p_opt >= threshold);
        prop_assert!(r.evaluations <= 21);
    }
}

fn planar() -> RobotModel {
    RobotModel::from_spec(&planar_dual_arm()).unwrap()
}

/// Home posture drifting with a wiggle on every joint.
fn wiggly_trajectory(seed: u64, steps: usize, amp: f64) -> Vec<JointVector> {
    let model = planar();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let drift: Vec<f64> = (0..5).map(|_| r.random_range(-0.3..0.3)).collect();
    (0..=steps)
        .map(|t| {
            let s = t as f64 / steps as f64;
            let q: Vec<f64> = model
                .home()
                .iter()
                .zip(&drift)
                .map(|(h, d)| h + d * s + amp * r.random_range(-1.0..1.0))
                .collect();
            model.clamp_to_limits(&q).unwrap()
        })
        .collect()
}

#[test]
fn interpolating_fit_of_feasible_knots_is_feasible() {
    let model = planar();
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &[],
        config: SmoothingConfig::default(),
    };
    let rows = wiggly_trajectory(1, 30, 0.02);
    let state = TrajectoryState::new(&rows).unwrap();
    for j in 0..5 {
        assert!(evaluate_constraints(&state, j, 1.0, &ctx).unwrap());
    }
}

#[test]
fn enveloping_obstacle_is_infeasible_everywhere() {
    let model = planar();
    let obstacles = [Obstacle::Sphere {
        center: [0.0, 0.0, 0.0],
        radius: 5.0,
    }];
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &obstacles,
        config: SmoothingConfig::default(),
    };
    let state = TrajectoryState::new(&wiggly_trajectory(2, 20, 0.02)).unwrap();
    for p in [0.0, 0.5, 1.0] {
        assert!(!evaluate_constraints(&state, 0, p, &ctx).unwrap());
    }
    assert!(spline_fit_all(&wiggly_trajectory(2, 20, 0.02), &ctx).is_err());
}

#[test]
fn evaluation_does_not_modify_state() {
    let model = planar();
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &[],
        config: SmoothingConfig::default(),
    };
    let state = TrajectoryState::new(&wiggly_trajectory(3, 20, 0.05)).unwrap();
    let before = state.clone();
    let _ = evaluate_constraints(&state, 2, 0.3, &ctx).unwrap();
    assert_eq!(state, before);
}

#[test]
fn screen_agrees_with_denser_sampling() {
    let model = planar();
    let mut agree = 0;
    let mut infeasible = 0;
    for seed in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + seed);
        let obstacles = vec![Obstacle::Sphere {
            center: [r.random_range(0.2..0.6), r.random_range(-0.4..0.4), 0.0],
            radius: r.random_range(0.03..0.08),
        }];
        let ctx = SmoothingContext {
            model: &model,
            obstacles: &obstacles,
            config: SmoothingConfig::default(),
        };
        let state = TrajectoryState::new(&wiggly_trajectory(seed, 20, 0.1)).unwrap();
        let p = r.random_range(0.0..1.0);
        let joint = (seed % 5) as usize;
        let fast = evaluate_constraints(&state, joint, p, &ctx).unwrap();
        let mut probe = state.clone();
        probe.set_curve(joint, JointCurve::Spline(fit_joint(&state, joint, p, &ctx).unwrap()));
        let dense = trajectory_feasible_at(&probe, &ctx, 100);
        agree += usize::from(fast == dense);
        infeasible += usize::from(!dense);
    }
    assert_eq!(agree, 100);
    assert!(infeasible > 5 && infeasible < 95, "cases should exercise both outcomes: {infeasible}");
}

#[test]
fn straight_trajectories_smooth_to_lines() {
    let model = planar();
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &[],
        config: SmoothingConfig::default(),
    };
    let home = model.home().clone();
    let rows: Vec<JointVector> = (0..=20)
        .map(|t| JointVector(home.iter().map(|h| h + 0.01 * t as f64).collect()))
        .collect();
    let out = spline_fit_all(&rows, &ctx).unwrap();
    for (rep, spline) in out.reports.iter().zip(out.splines()) {
        assert!(rep.p_opt <= 1e-6);
        for t in 0..=20 {
            assert!((spline.eval(t as f64).unwrap() - rows[t][rep.joint]).abs() < 1e-9);
        }
    }
}

fn single_joint_robot() -> RobotModel {
    RobotModel::from_spec(&RobotSpec {
        joints: vec![JointSpec {
            name: "j".into(),
            axis: [0.0, 0.0, 1.0],
            limits: [-3.0, 3.0],
            parent: None,
            origin: [0.0; 3],
            rpy: [0.0; 3],
        }],
        links: vec![LinkSpec {
            joint: 0,
            a: [0.0; 3],
            b: [0.5, 0.0, 0.0],
            radius: 0.02,
            mass: 0.0,
        }],
        chains: vec![ChainSpec {
            name: "arm".into(),
            joints: vec![0],
            tip: [0.5, 0.0, 0.0],
        }],
        shared_joints: vec![],
        support_polygon: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        base_mass: 1.0,
        base_com: [0.0; 3],
        home: vec![0.0],
    })
    .unwrap()
}

#[test]
fn single_joint_sweep_equals_direct_composition() {
    let model = single_joint_robot();
    // A smoothstep from -1 to 0 rad; with free endpoints the least-squares
    // line overshoots past 0 into the obstacle.
    let rows: Vec<JointVector> = (0..=20)
        .map(|t| {
            let s = t as f64 / 20.0;
            JointVector(vec![-1.0 + s * s * (3.0 - 2.0 * s)])
        })
        .collect();
    let obstacles = [Obstacle::Sphere {
        center: [0.45 * 0.15f64.cos(), 0.45 * 0.15f64.sin(), 0.0],
        radius: 0.03,
    }];
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &obstacles,
        config: SmoothingConfig {
            endpoint_weight: 1.0,
            ..SmoothingConfig::default()
        },
    };
    let out = spline_fit_all(&rows, &ctx).unwrap();
    let state = TrajectoryState::new(&rows).unwrap();
    let direct = binary_search_p(|p| evaluate_constraints(&state, 0, p, &ctx), 1e-6, 0).unwrap();
    assert_eq!(out.reports[0].p_opt, direct.p_opt);
    assert!(direct.p_opt > 1e-3, "the obstacle should force some fidelity");
    let expected = fit_joint(&state, 0, direct.p_opt, &ctx).unwrap();
    assert_eq!(out.splines()[0], &expected);
    assert!(trajectory_feasible(&out.state, &ctx));
}

#[test]
fn sweep_preserves_endpoints_and_reduces_roughness() {
    let model = planar();
    let ctx = SmoothingContext {
        model: &model,
        obstacles: &[],
        config: SmoothingConfig::default(),
    };
    for seed in 0..5 {
        let rows = wiggly_trajectory(seed, 40, 0.03);
        let out = spline_fit_all(&rows, &ctx).unwrap();
        let smoothed = out.state.rows();
        for j in 0..5 {
            assert!((smoothed[0][j] - rows[0][j]).abs() < 1e-3);
            assert!((smoothed[40][j] - rows[40][j]).abs() < 1e-3);
        }
        for rep in &out.reports {
            assert!(rep.roughness_after <= rep.roughness_before);
            assert!((0.0..=1.0).contains(&rep.p_opt));
        }
        assert!(trajectory_feasible(&out.state, &ctx));
    }
}

/// Noisy detour around a sphere placed on the straight path between the
/// endpoints; heavy smoothing pulls the motion back into it.
fn detour(model: &RobotModel, seed: u64) -> (Vec<JointVector>, Vec<Obstacle>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(case) = detour_candidate(model, &mut r) {
            return case;
        }
    }
}

fn detour_candidate(model: &RobotModel, r: &mut ChaCha8Rng) -> Option<(Vec<JointVector>, Vec<Obstacle>)> {
    let drift: Vec<f64> = (0..5).map(|_| r.random_range(-0.4..0.4)).collect();
    let bump: Vec<f64> = (0..5).map(|_| r.random_range(-0.5..0.5)).collect();
    let line = |s: f64| -> Vec<f64> { model.home().iter().zip(&drift).map(|(h, d)| h + d * s).collect() };
    let rows: Vec<JointVector> = (0..=40)
        .map(|t| {
            let s = t as f64 / 40.0;
            let q: Vec<f64> = line(s)
                .iter()
                .zip(&bump)
                .map(|(q, b)| q + b * (std::f64::consts::PI * s).sin() + 0.03 * r.random_range(-1.0..1.0))
                .collect();
            model.clamp_to_limits(&q).unwrap()
        })
        .collect();
    let hand = model.end_effectors(&line(0.5)).unwrap()[r.random_range(0..2)];
    let obstacles = vec![Obstacle::Sphere {
        center: [hand.x, hand.y, 0.0],
        radius: r.random_range(0.02..0.05),
    }];
    let ctx = SmoothingContext {
        model,
        obstacles: &obstacles,
        config: SmoothingConfig::default(),
    };
    let state = TrajectoryState::new(&rows).unwrap();
    (rows.iter().all(|q| configuration_ok(&ctx, q)) && trajectory_feasible(&state, &ctx)).then_some((rows, obstacles))
}

#[test]
fn sweep_output_stays_feasible_when_joints_cannot_be_smoothed() {
    let model = planar();
    let (mut kept, mut bound) = (0, 0);
    for seed in 0..20 {
        let (rows, obstacles) = detour(&model, seed);
        let ctx = SmoothingContext {
            model: &model,
            obstacles: &obstacles,
            config: SmoothingConfig::default(),
        };
        let out = spline_fit_all(&rows, &ctx).unwrap();
        let fine = ctx.config.subdivisions * VERIFY_FACTOR * 10;
        assert!(trajectory_feasible_at(&out.state, &ctx, fine), "seed {seed}");
        for rep in &out.reports {
            match out.state.curve(rep.joint) {
                JointCurve::Knots(k) => {
                    assert!(!rep.smoothed && rep.p_opt == 1.0);
                    assert_eq!(k.as_slice(), out.state.knots(rep.joint));
                    kept += 1;
                }
                JointCurve::Spline(s) => {
                    assert!(rep.smoothed);
                    let state = TrajectoryState::new(&rows).unwrap();
                    assert_eq!(s, &fit_joint(&state, rep.joint, rep.p_opt, &ctx).unwrap());
                    bound += usize::from(rep.p_opt > 1e-5);
                }
            }
        }
    }
    assert!(kept > 0 && bound > 0, "both paths should be exercised: kept {kept}, bound {bound}");
}
