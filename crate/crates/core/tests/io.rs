use opinion_core::dynamics::{integrate, ControlSignal, IntegrateOptions, System, TimeFrame};
use opinion_core::experiments::{fit_growth, GrowthModel, HorizonMode, SweepRecord};
use opinion_core::io::{
    agent_lines, cost_vs_n, heatline, parse_config, read_numeric_table, read_sweep, write_control, write_sweep,
    write_trajectory, CostSeries, RunConfig,
};
use opinion_core::network::{ChainOperator, Flavor, NonlinearitySpec, ScalarMap, Scaling};
use opinion_core::Error;
use proptest::prelude::*;

fn sine_run(n: usize, steps: usize) -> opinion_core::dynamics::Trajectory {
    let nl = NonlinearitySpec::new(ScalarMap::GaussianDamped, Scaling::InverseNSquared).unwrap();
    let sys = System::new(ChainOperator::new(n, Flavor::Neumann).unwrap(), nl);
    let frame = TimeFrame::rescaled(n, 0.5).unwrap();
    let y0: Vec<f64> = (1..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).sin()).collect();
    integrate(&sys, None, &y0, &frame, steps, IntegrateOptions::default()).unwrap()
}

#[test]
fn trajectory_csv_reparses_exactly() {
    let tr = sine_run(6, 2500);
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &tr, 1).unwrap();
    let t = read_numeric_table(buf.as_slice()).unwrap();
    assert_eq!(
        t.header,
        ["step", "tau", "t", "norm2", "mean", "maxabs", "y_1", "y_2", "y_3", "y_4", "y_5", "y_6"]
    );
    assert_eq!(t.rows.len(), tr.states().len());
    for (row, (state, &step)) in t.rows.iter().zip(tr.states().iter().zip(tr.stored_steps())) {
        assert_eq!(row[0], step as f64);
        assert_eq!(row[1].to_bits(), tr.tau(step).to_bits());
        for (a, b) in row[6..].iter().zip(state) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    let last = t.rows.last().unwrap();
    assert_eq!(last[3], tr.terminal_norm());
}

#[test]
fn large_chains_omit_state_columns() {
    let tr = sine_run(70, 10);
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &tr, 1).unwrap();
    let t = read_numeric_table(buf.as_slice()).unwrap();
    assert_eq!(t.header.len(), 6);
}

#[test]
fn control_csv_reparses_exactly() {
    let frame = TimeFrame::rescaled(7, 1.0).unwrap();
    let c = ControlSignal::from_fn(frame, 2, 50, |tau, ch| (tau * 3.0).sin() * 1e3 + ch as f64 / 3.0);
    let mut buf = Vec::new();
    write_control(&mut buf, &c).unwrap();
    let t = read_numeric_table(buf.as_slice()).unwrap();
    assert_eq!(t.header, ["step", "tau", "u_1", "u_2"]);
    let u2 = t.column("u_2").unwrap();
    for (k, v) in u2.iter().enumerate() {
        assert_eq!(v.to_bits(), c.value(k, 1).to_bits());
    }
}

#[test]
fn reference_configuration_parses() {
    let c = parse_config("n = 45, T = 2, beta = 1e-15").unwrap();
    assert_eq!(c.n, 45);
    assert_eq!(c.horizon, 2.0);
    assert_eq!(c.beta, 1e-15);
    assert_eq!(c.flavor, Flavor::Neumann);
    assert_eq!(c.nonlinearity, "gaussian-damped");
}

#[test]
fn config_errors_carry_location() {
    let e = parse_config("# header\nn = 8\nT = banana\n").unwrap_err();
    let text = e.to_string();
    assert!(text.contains("line 3") && text.contains("T"), "{text}");
    assert!(matches!(parse_config("n = 1"), Err(Error::Config { .. })));
}

#[test]
fn zero_trajectory_plots_flat_lines() {
    let sys = System::new(ChainOperator::new(5, Flavor::Dirichlet).unwrap(), NonlinearitySpec::zero());
    let frame = TimeFrame::rescaled(5, 1.0).unwrap();
    let tr = integrate(&sys, None, &[0.0; 5], &frame, 100, IntegrateOptions::default()).unwrap();
    let svg = agent_lines(&tr, "rest").unwrap();
    let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
    assert_eq!(lines.len(), 5);
    for l in lines {
        let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }
    assert!(heatline(&tr, "rest").unwrap().contains("#ffffff"));
}

fn circles(svg: &str, radius: &str) -> Vec<(f64, f64)> {
    svg.lines()
        .filter(|l| l.starts_with("<circle") && l.contains(&format!("r=\"{radius}\"")))
        .map(|l| {
            let attr = |name: &str| -> f64 {
                let rest = l.split(&format!("{name}=\"")).nth(1).unwrap();
                rest[..rest.find('"').unwrap()].parse().unwrap()
            };
            (attr("cx"), attr("cy"))
        })
        .collect()
}

#[test]
fn quadratic_exponent_data_is_straight_on_the_inset() {
    let pts: Vec<(usize, f64)> = [8usize, 16, 24, 32, 48]
        .iter()
        .map(|&n| (n, (0.5 + 0.01 * (n * n) as f64).exp()))
        .collect();
    let fit = fit_growth(&pts).unwrap();
    assert_eq!(fit.model, GrowthModel::ExpInN2);
    let svg = cost_vs_n(
        &[CostSeries {
            label: "synthetic".into(),
            points: pts,
            fit: Some(fit),
        }],
        "cost",
    )
    .unwrap();
    let inset = circles(&svg, "2.5");
    assert_eq!(inset.len(), 5);
    let (x0, y0) = inset[0];
    let (x1, y1) = inset[4];
    for &(x, y) in &inset[1..4] {
        let on_line = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        assert!((y - on_line).abs() < 0.05, "{y} vs {on_line}");
    }
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn empty_data_is_rejected() {
    assert!(matches!(cost_vs_n(&[], "x"), Err(Error::EmptyData(_))));
    let series = CostSeries {
        label: "none".into(),
        points: vec![(8, 0.0), (16, f64::NAN)],
        fit: None,
    };
    assert!(matches!(cost_vs_n(&[series], "x"), Err(Error::EmptyData(_))));
}

fn record() -> impl Strategy<Value = SweepRecord> {
    (
        2usize..500,
        0usize..3,
        any::<bool>(),
        (-1e300f64..1e300, 0.0f64..1e6, 0.0f64..1e6),
        0usize..1000,
        any::<bool>(),
        "[a-z ,:0-9]{0,20}",
    )
        .prop_map(|(n, r, fixed, (base_t, tn, cp), it, conv, status)| SweepRecord {
            n,
            regime: [Scaling::InverseNSquared, Scaling::InverseN, Scaling::Unscaled][r],
            horizon_mode: if fixed { HorizonMode::FixedT } else { HorizonMode::TimeGrowsAsN2 },
            base_t,
            terminal_norm: tn,
            cost_physical: cp,
            cost_rescaled: cp * n as f64,
            iterations: it,
            converged: conv,
            runtime_ms: it as u64 * 3,
            status,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sweep_tables_round_trip(recs in proptest::collection::vec(record(), 0..12)) {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &recs).unwrap();
        prop_assert_eq!(read_sweep(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn resolved_config_round_trips(
        n in 2usize..200,
        beta in 0.0f64..1.0,
        horizon in 0.01f64..10.0,
        seed in any::<u64>(),
        dirichlet in any::<bool>(),
        steps in proptest::option::of(1usize..10_000),
    ) {
        let cfg = RunConfig {
            n,
            beta,
            horizon,
            seed,
            n_steps: steps,
            flavor: if dirichlet { Flavor::Dirichlet } else { Flavor::Neumann },
            ..RunConfig::default()
        };
        prop_assert_eq!(parse_config(&cfg.to_document()).unwrap(), cfg);
    }
}
