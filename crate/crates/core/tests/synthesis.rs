use std::f64::consts::PI;

use opinion_core::dynamics::{integrate, weighted_norm, FrameKind, IntegrateOptions, System, TimeFrame};
use opinion_core::network::{ChainOperator, ControlLayout, Flavor, NonlinearitySpec, ScalarMap, Scaling};
use opinion_core::synthesis::{
    boundary_flux_norm, checkpoint_interval, directional_check, evaluate_objective, gradient, gradient_with,
    minimize, synthesize_boundary_via_extension, ControlProblem, GradientOptions, MinimizeOptions, ObjectiveSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian() -> NonlinearitySpec {
    NonlinearitySpec::new(ScalarMap::GaussianDamped, Scaling::InverseNSquared).unwrap()
}

fn problem(n: usize, flavor: Flavor, nl: NonlinearitySpec, frame: TimeFrame, steps: usize, y0: Vec<f64>) -> ControlProblem {
    let sys = System::new(ChainOperator::new(n, flavor).unwrap(), nl).with_layout(ControlLayout::two_boundary(n).unwrap());
    ControlProblem::new(sys, y0, frame, steps).unwrap()
}

fn sine(n: usize) -> Vec<f64> {
    (1..=n).map(|j| (PI * j as f64 / n as f64).sin()).collect()
}

#[test]
fn zero_control_objective_is_free_terminal_energy() {
    let n = 8;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Neumann, gaussian(), frame, 300, sine(n));
    let free = integrate(&p.system, None, &p.y0, &frame, 300, IntegrateOptions::default()).unwrap();
    let expected: f64 = free.terminal_state().iter().map(|y| y * y).sum();
    let j = evaluate_objective(&p, &p.zero_control(), &ObjectiveSpec::new(0.3)).unwrap();
    assert!((j - expected).abs() <= 1e-14 * expected);

    let rest = problem(n, Flavor::Neumann, gaussian(), frame, 300, vec![0.0; n]);
    assert_eq!(evaluate_objective(&rest, &rest.zero_control(), &ObjectiveSpec::new(0.3)).unwrap(), 0.0);
}

#[test]
fn zero_beta_objective_is_terminal_energy() {
    let n = 6;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Dirichlet, gaussian(), frame, 200, sine(n));
    let c = p.control_from_values((0..400).map(|i| (i as f64 * 0.1).sin() * 30.0).collect()).unwrap();
    let tr = integrate(&p.system, Some(&c), &p.y0, &frame, 200, IntegrateOptions::default()).unwrap();
    let expected: f64 = tr.terminal_state().iter().map(|y| y * y).sum();
    let j = evaluate_objective(&p, &c, &ObjectiveSpec::new(0.0)).unwrap();
    assert!((j - expected).abs() <= 1e-14 * expected);
}

#[test]
fn objective_is_frame_invariant() {
    let n = 7;
    let rescaled = TimeFrame::rescaled(n, 0.4).unwrap();
    let physical = rescaled.with_kind(FrameKind::Physical);
    let pr = problem(n, Flavor::Neumann, gaussian(), rescaled, 250, sine(n));
    let pp = problem(n, Flavor::Neumann, gaussian(), physical, 250, sine(n));
    let u = pr.control_from_values((0..500).map(|i| (i as f64 * 0.03).cos() * 20.0).collect()).unwrap();
    let v = u.convert(&physical).unwrap();
    let obj = ObjectiveSpec::new(1e-3);
    let a = evaluate_objective(&pr, &u, &obj).unwrap();
    let b = evaluate_objective(&pp, &v, &obj).unwrap();
    assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
}

#[test]
fn gradient_vanishes_at_rest() {
    let n = 6;
    let frame = TimeFrame::rescaled(n, 1.0).unwrap();
    let p = problem(n, Flavor::Neumann, gaussian(), frame, 100, vec![0.0; n]);
    let g = gradient(&p, &p.zero_control(), &ObjectiveSpec::new(1e-2)).unwrap();
    assert!(g.grad.iter().all(|&v| v == 0.0));
}

fn random_direction(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn linear_gradient_matches_finite_differences() {
    let n = 6;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Neumann, NonlinearitySpec::zero(), frame, 150, sine(n));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = p.control_from_values(random_direction(&mut rng, 300).iter().map(|v| 10.0 * v).collect()).unwrap();
    let obj = ObjectiveSpec::new(1e-3);
    for _ in 0..5 {
        let d = random_direction(&mut rng, 300);
        let chk = directional_check(&p, &c, &obj, &d, 1e-3).unwrap();
        assert!(chk.relative_error <= 1e-6, "{chk:?}");
    }
}

#[test]
fn nonlinear_gradient_matches_finite_differences() {
    let n = 10;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Neumann, gaussian(), frame, 200, sine(n));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let c = p.control_from_values(random_direction(&mut rng, 400).iter().map(|v| 20.0 * v).collect()).unwrap();
    let obj = ObjectiveSpec::new(1e-4);
    for _ in 0..5 {
        let d = random_direction(&mut rng, 400);
        let chk = directional_check(&p, &c, &obj, &d, 1e-4).unwrap();
        assert!(chk.relative_error <= 1e-5, "{chk:?}");
    }
}

#[test]
fn checkpointed_gradient_equals_stored_gradient() {
    let n = 9;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Dirichlet, gaussian(), frame, 997, sine(n));
    let c = p.control_from_values((0..2 * 997).map(|i| (i as f64 * 0.01).sin() * 5.0).collect()).unwrap();
    let obj = ObjectiveSpec::new(1e-2);
    let full = gradient(&p, &c, &obj).unwrap();
    let budget = 4000;
    assert!(checkpoint_interval(997, n, budget) > 1);
    let cp = gradient_with(&p, &c, &obj, GradientOptions { memory_budget: budget }).unwrap();
    assert_eq!(full.grad, cp.grad);
    assert_eq!(full.value, cp.value);
}

#[test]
fn linear_objective_is_convex_along_segments() {
    let n = 8;
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let p = problem(n, Flavor::Dirichlet, NonlinearitySpec::zero(), frame, 120, sine(n));
    let obj = ObjectiveSpec::new(1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let a: Vec<f64> = random_direction(&mut rng, 240).iter().map(|v| 50.0 * v).collect();
        let b: Vec<f64> = random_direction(&mut rng, 240).iter().map(|v| 50.0 * v).collect();
        let js: Vec<f64> = (0..=10)
            .map(|i| {
                let t = i as f64 / 10.0;
                let x = a.iter().zip(&b).map(|(p, q)| (1.0 - t) * p + t * q).collect();
                evaluate_objective(&p, &p.control_from_values(x).unwrap(), &obj).unwrap()
            })
            .collect();
        for w in js.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-10 * w[1].abs().max(1.0));
        }
    }
}

#[test]
fn minimize_at_rest_stops_immediately() {
    let n = 5;
    let frame = TimeFrame::rescaled(n, 1.0).unwrap();
    let p = problem(n, Flavor::Neumann, gaussian(), frame, 100, vec![0.0; n]);
    let r = minimize(&p, &ObjectiveSpec::new(1e-6), &p.zero_control(), &MinimizeOptions::default()).unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.converged);
    assert!(r.control.values().iter().all(|&v| v == 0.0));
}

#[test]
fn linear_dirichlet_problem_is_driven_to_the_ball() {
    let n = 10;
    let frame = TimeFrame::rescaled(n, 1.0).unwrap();
    let y0 = sine(n);
    let p = problem(n, Flavor::Dirichlet, NonlinearitySpec::zero(), frame, frame.default_steps(), y0.clone());
    let obj = ObjectiveSpec::new(1e-10);
    let r = minimize(&p, &obj, &p.zero_control(), &MinimizeOptions::default()).unwrap();
    assert!(r.terminal_norm <= 1e-3 * weighted_norm(&y0, n), "{}", r.terminal_norm);
    for w in r.history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let recomputed = obj.terminal_cost(r.trajectory.terminal_state()) + obj.penalty(&r.control);
    assert!((recomputed - r.objective_value).abs() <= 1e-12 * r.objective_value);
    let direct = evaluate_objective(&p, &r.control, &obj).unwrap();
    assert!((direct - r.objective_value).abs() <= 1e-12 * r.objective_value);
    assert!((r.control_cost - r.control.l2_norm()).abs() == 0.0);
}

#[test]
fn extension_reintegration_reproduces_inner_trajectory() {
    for n in [10usize, 7] {
        let y0 = sine(n);
        let steps = 2000;
        let r = synthesize_boundary_via_extension(
            n,
            &NonlinearitySpec::zero(),
            &y0,
            1.0,
            steps,
            &ObjectiveSpec::new(1e-10),
            &MinimizeOptions { max_iters: 60, ..Default::default() },
        )
        .unwrap();
        let frame = TimeFrame::rescaled(n, 1.0).unwrap();
        let neumann = System::new(ChainOperator::new(n, Flavor::Neumann).unwrap(), NonlinearitySpec::zero())
            .with_layout(ControlLayout::two_boundary(n).unwrap());
        let re = integrate(&neumann, Some(&r.boundary_control), &y0, &frame, steps, IntegrateOptions::dense()).unwrap();
        let err = re.sup_distance(&r.inner_trajectory);
        assert!(err <= 1e-6, "n={n}: {err}");
        assert!(r.inner_trajectory.terminal_norm() <= r.extended_trajectory.terminal_norm());
    }
}

#[test]
fn flux_norm_regroups_extracted_controls() {
    let n = 8;
    let r = synthesize_boundary_via_extension(
        n,
        &gaussian(),
        &sine(n),
        1.0,
        1000,
        &ObjectiveSpec::new(1e-8),
        &MinimizeOptions { max_iters: 20, ..Default::default() },
    )
    .unwrap();
    // (N/3)·differences = u/N, so N·‖differences‖ = 3‖u‖/N
    let c = &r.boundary_control;
    let norm = |ch: usize| (c.dt() * c.channel(ch).iter().map(|u| u * u).sum::<f64>()).sqrt();
    let expected = 3.0 * (norm(0) + norm(1)) / n as f64;
    assert!((r.boundary_flux_norm - expected).abs() <= 1e-12 * expected);
    assert_eq!(boundary_flux_norm(&r.extended_trajectory, n), r.boundary_flux_norm);
}

#[test]
fn gaussian_extension_inner_norm_below_extended_norm() {
    let n = 10;
    let r = synthesize_boundary_via_extension(
        n,
        &gaussian(),
        &sine(n),
        1.0,
        1000,
        &ObjectiveSpec::new(1e-10),
        &MinimizeOptions { max_iters: 40, ..Default::default() },
    )
    .unwrap();
    assert!(r.inner_trajectory.terminal_norm() <= r.extended_result.terminal_norm);
}
