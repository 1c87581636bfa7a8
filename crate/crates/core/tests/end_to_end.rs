//! Mode → potential → dispersion → packet → probe through the public API.

use nanorbit_core::consts::{H, PI};
use nanorbit_core::dispersion::{sweep, timescales, TrapParams, TrapSetup};
use nanorbit_core::fibermode::solve_he11;
use nanorbit_core::materials::{default_cesium, FiberSpec};
use nanorbit_core::potentials::{DEFAULT_POINTS, DEFAULT_SPAN};
use nanorbit_core::probe::{analyze, coefficients, rate_direct, sampled};
use nanorbit_core::wavepacket::{build, count_azimuthal_peaks};

fn setup() -> TrapSetup {
    TrapSetup::new(TrapParams {
        fiber: FiberSpec::vacuum_clad(200e-9).unwrap(),
        atom: default_cesium(),
        trap_wavelength: 1064e-9,
        trap_power: 20e-3,
        r_span: DEFAULT_SPAN,
        grid_points: DEFAULT_POINTS,
    })
    .unwrap()
}

#[test]
fn default_trap_end_to_end() {
    let setup = setup();
    assert!((setup.mode.v_number - 1.24).abs() < 0.01);
    assert!(setup.mode.single_mode);

    let table = sweep(&setup, 400, 560).unwrap();
    assert!(table.failures.is_empty());
    assert!(table.is_contiguous());
    let (lo, hi) = table.m_window().unwrap();
    assert!((lo - 430).abs() <= 15 && (hi - 530).abs() <= 15, "{lo}..{hi}");
    let (blo, bhi) = table.bound_window().unwrap();
    assert!(table.first_differences(blo..=bhi).unwrap().iter().all(|d| d.1 > 0.0));
    assert!(table.second_differences(blo..=bhi).unwrap().iter().all(|d| d.1 < 0.0));

    let (e1, e2) = table.derivatives_at(468).unwrap();
    assert!(((e1 / H) - 214e3).abs() / 214e3 <= 0.2);
    assert!(((e2.abs() / H) - 2.52e3).abs() / 2.52e3 <= 0.3);
    let ts = timescales(e1, e2, 6.0).unwrap();
    let t_rev = ts.t_rev.unwrap();
    assert!((ts.t_rot / ts.t_osc_sca - 2.0).abs() <= 1e-12);
    assert!((ts.t_coll.unwrap() / ts.t_fall_sca.unwrap() - 4.0 / PI.sqrt()).abs() <= 1e-12);

    let wp = build(&table, 468, 6.0, 446, 510).unwrap();
    let grid = wp.default_grid();
    let refined = wp.revival_time(t_rev, 0.1).unwrap();
    let peaks: Vec<usize> = [0.0, t_rev / 8.0, t_rev / 4.0, t_rev / 2.0, refined]
        .iter()
        .map(|&t| {
            let snap = wp.evolve(t, &grid).unwrap();
            assert!((snap.norm() - 1.0).abs() <= 1e-6);
            count_azimuthal_peaks(&snap, 0.5).unwrap()
        })
        .collect();
    assert_eq!(peaks, [1, 4, 2, 1, 1]);

    let probe = solve_he11(&setup.params.fiber, setup.params.atom.probe_wavelength).unwrap();
    let coeff = coefficients(&wp, &probe).unwrap();
    let coarse = wp.polar_grid(1000, 64).unwrap();
    for t in [0.0, 0.3 * t_rev, t_rev] {
        let direct = rate_direct(&wp, &probe, 0.0, t, &coarse).unwrap();
        assert!((coeff.rate(t, 0.0) - direct).abs() / direct <= 1e-3);
    }

    let trace = sampled(&coeff, 1.15 * t_rev, ts.t_osc_sca / 40.0, 0.0).unwrap();
    let a = analyze(&trace, &ts).unwrap();
    assert!((a.t_osc / ts.t_osc_sca - 1.0).abs() <= 0.02);
    assert!((a.visibility_initial - 0.4).abs() <= 0.1);
    assert!(a.t_fall.unwrap() < 2.0 * ts.t_fall_sca.unwrap());
    for k in 1..=4 {
        let target = k as f64 * t_rev / 4.0;
        assert!(a.resumption_times.iter().any(|t| (t - target).abs() <= 0.05 * target), "k = {k}");
    }
    let ratio = a.visibility_at_rev.unwrap() / a.visibility_initial;
    assert!((ratio - 1.0 / 3.0).abs() <= 0.15);
}
