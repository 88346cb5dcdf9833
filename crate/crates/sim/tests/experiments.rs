use fredkin_core::fredkin::HamiltonianMode;
use fredkin_sim::experiments::{
    read_results, sweep_detuning, sweep_inhomogeneity, write_results, Scenario, SweepRow, SweepSpec, Timing,
};

fn row(big_d: f64, fidelity: f64, closed: Option<f64>, status: &str) -> SweepRow {
    SweepRow {
        scenario: "noon".into(),
        big_d,
        c: 1.0 + 1e-4 / 3.0,
        d: 0.1 + 0.2,
        delta_over_2pi_hz: 1.12e9,
        lambda_over_2pi_hz: 4.375e6 / 7.0,
        t_swap_s: std::f64::consts::PI * 1e-7,
        fidelity,
        leak_a: 9.058123456789e-3,
        trace_error: 3.3e-16,
        wall_time_s: None,
        fidelity_closed_pulse: closed,
        status: status.into(),
    }
}

fn small_spec() -> SweepSpec {
    let mut spec = SweepSpec::reference(Scenario::Noon { n: 2 });
    spec.base.d1 = 3;
    spec.base.d2 = 3;
    spec.protocol.mode = HamiltonianMode::Effective;
    spec.protocol.lossy = false;
    spec
}

#[test]
fn empty_table_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_results(&[], &path, &["nothing".into()], false).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1);
    assert!(data[0].starts_with("scenario,D,c,d,"));
    assert!(read_results(&path).unwrap().is_empty());
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = vec![
        row(16.0, 0.953911380612345, Some(0.9612), "ok"),
        row(5.0, f64::NAN, None, "integrator diverged: trace off by 1e-3"),
        row(40.0, 1.0 - f64::EPSILON, None, "ok"),
    ];
    write_results(&rows, &path, &["a comment".into()], false).unwrap();
    let back = read_results(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.big_d.to_bits(), b.big_d.to_bits());
        assert_eq!(a.c.to_bits(), b.c.to_bits());
        assert_eq!(a.d.to_bits(), b.d.to_bits());
        assert_eq!(a.lambda_over_2pi_hz.to_bits(), b.lambda_over_2pi_hz.to_bits());
        assert_eq!(a.t_swap_s.to_bits(), b.t_swap_s.to_bits());
        assert_eq!(a.leak_a.to_bits(), b.leak_a.to_bits());
        assert_eq!(a.trace_error.to_bits(), b.trace_error.to_bits());
        assert_eq!(a.fidelity.is_nan(), b.fidelity.is_nan());
        if !a.fidelity.is_nan() {
            assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        }
        assert_eq!(a.fidelity_closed_pulse.map(f64::to_bits), b.fidelity_closed_pulse.map(f64::to_bits));
        assert_eq!(a.status, b.status);
    }
}

#[test]
fn wall_time_column_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let without = dir.path().join("a.csv");
    let with = dir.path().join("b.csv");
    let mut r = row(16.0, 0.95, None, "ok");
    write_results(&[r.clone()], &without, &[], false).unwrap();
    r.wall_time_s = Some(1.5);
    write_results(&[r], &with, &[], true).unwrap();
    assert!(!std::fs::read_to_string(&without).unwrap().contains("wall_time_s"));
    assert!(std::fs::read_to_string(&with).unwrap().contains("wall_time_s"));
    assert_eq!(read_results(&with).unwrap()[0].wall_time_s, Some(1.5));
}

#[test]
fn sweeps_are_independent_of_worker_count() {
    let mut spec = small_spec();
    spec.detuning_ratios = vec![8.0, 30.0, 12.0];
    let one = sweep_detuning(&spec, 1).unwrap();
    let three = sweep_detuning(&spec, 3).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.iter().map(|r| r.big_d).collect::<Vec<_>>(), vec![8.0, 30.0, 12.0]);
}

#[test]
fn inhomogeneity_grid_order_has_c_slowest() {
    let mut spec = small_spec();
    spec.c_grid = vec![0.9999, 1.0001];
    spec.d_grid = vec![0.98, 1.0, 1.02];
    let rows = sweep_inhomogeneity(&spec, 2).unwrap();
    let cd: Vec<(f64, f64)> = rows.iter().map(|r| (r.c, r.d)).collect();
    assert_eq!(
        cd,
        vec![(0.9999, 0.98), (0.9999, 1.0), (0.9999, 1.02), (1.0001, 0.98), (1.0001, 1.0), (1.0001, 1.02)]
    );
    assert!(rows.iter().all(|r| r.is_ok()));
    let center = rows.iter().find(|r| r.c == 0.9999 && r.d == 1.0).unwrap();
    assert!(center.fidelity < 1.0);
}

#[test]
fn nominal_timing_ignores_inhomogeneity() {
    let mut spec = small_spec();
    spec.c_grid = vec![1.0003];
    spec.d_grid = vec![1.04];
    spec.timing = Timing::Nominal;
    let nominal = sweep_inhomogeneity(&spec, 1).unwrap();
    spec.timing = Timing::Actual;
    let actual = sweep_inhomogeneity(&spec, 1).unwrap();
    let base = sweep_detuning(&SweepSpec {
        detuning_ratios: vec![spec.base_ratio],
        ..small_spec()
    }, 1)
    .unwrap();
    assert_eq!(nominal[0].t_swap_s, base[0].t_swap_s);
    assert_ne!(actual[0].t_swap_s, base[0].t_swap_s);
}

#[test]
fn invalid_grids_are_rejected() {
    let mut spec = small_spec();
    spec.detuning_ratios = vec![];
    assert!(sweep_detuning(&spec, 1).is_err());
    let mut spec = small_spec();
    spec.d_grid = vec![2.0];
    assert!(sweep_inhomogeneity(&spec, 1).is_err());
}
