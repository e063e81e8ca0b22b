mod common;

use common::random_road_graph;
use evfleet::energy::{
    build_energy_graph, edge_energy, min_energy_path, savitzky_golay, SpeedProfile, TimeModel,
    VehicleParams,
};
use proptest::prelude::*;

#[test]
fn condensed_graph_agrees_with_pairwise_search() {
    let params = VehicleParams::default();
    let mut built = 0;
    for seed in 0..30 {
        // dense enough to be strongly connected in practice
        let g = random_road_graph(300 + seed, 6, 0.8);
        let ids: Vec<String> = g.vertices().iter().map(|v| v.id.clone()).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let Ok(eg) = build_energy_graph(&g, &params, &refs, TimeModel::ProfileDurations, false) else {
            continue;
        };
        built += 1;
        for (i, a) in refs.iter().enumerate() {
            for (j, b) in refs.iter().enumerate() {
                let (path, e) = min_energy_path(&g, &params, a, b, false).unwrap();
                assert_eq!(eg.energy(i, j), e, "{a}->{b}");
                assert_eq!(eg.paths[i][j], path);
                let t: f64 = path
                    .windows(2)
                    .map(|w| {
                        let (f, t) = (g.vertex_index(&w[0]).unwrap(), g.vertex_index(&w[1]).unwrap());
                        g.edge(f, t).unwrap().profile.duration()
                    })
                    .sum();
                assert_eq!(eg.time(i, j), t);
            }
        }
    }
    assert!(built >= 10, "only {built} graphs were strongly connected");
}

fn speeds() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..25.0, 2..200)
}

proptest! {
    #[test]
    fn clamping_never_lowers_energy(v in speeds(), dz in -30.0f64..30.0) {
        let p = VehicleParams::default();
        let profile = SpeedProfile::from_speeds(&v, 10.0).unwrap();
        let raw = edge_energy(&p, &profile, dz, false).unwrap();
        let clamped = edge_energy(&p, &profile, dz, true).unwrap();
        prop_assert!(clamped >= raw - 1e-15);
    }

    #[test]
    fn clamped_flat_section_is_non_negative(v in speeds()) {
        let p = VehicleParams::default();
        let profile = SpeedProfile::from_speeds(&v, 10.0).unwrap();
        prop_assert!(edge_energy(&p, &profile, 0.0, true).unwrap() >= 0.0);
    }

    #[test]
    fn steady_energy_grows_with_speed_and_time(v in 1.0f64..30.0, dv in 0.1f64..5.0, n in 2usize..300) {
        let p = VehicleParams::default();
        let e = |speed: f64, len: usize| {
            edge_energy(&p, &SpeedProfile::from_speeds(&vec![speed; len], 1.0).unwrap(), 0.0, false).unwrap()
        };
        prop_assert!(e(v + dv, n) > e(v, n));
        // (2n - 1) samples span twice the time of n samples
        let doubled = e(v, 2 * n - 1);
        prop_assert!((doubled - 2.0 * e(v, n)).abs() <= 1e-12 * doubled.abs());
    }

    #[test]
    fn elevation_enters_linearly(v in speeds(), dz in -50.0f64..50.0) {
        let p = VehicleParams::default();
        let profile = SpeedProfile::from_speeds(&v, 10.0).unwrap();
        let flat = edge_energy(&p, &profile, 0.0, false).unwrap();
        let hill = edge_energy(&p, &profile, dz, false).unwrap();
        let want = -p.mass * p.gravity * dz / p.powertrain_eff / 3.6e6;
        prop_assert!((hill - flat - want).abs() <= 1e-12 * (1.0 + want.abs() + flat.abs()));
    }

    #[test]
    fn savitzky_golay_keeps_cubics(
        c in prop::array::uniform4(-1.0f64..1.0),
        n in 30usize..200,
    ) {
        // offset keeps the cubic positive, so the non-negativity clamp is idle
        let x = |i: usize| i as f64 / n as f64;
        let v: Vec<f64> = (0..n)
            .map(|i| 10.0 + c[0] + c[1] * x(i) + c[2] * x(i).powi(2) + c[3] * x(i).powi(3))
            .collect();
        let profile = SpeedProfile::from_speeds(&v, 10.0).unwrap();
        let out = savitzky_golay(&profile, 11, 3).unwrap().speeds();
        for (a, b) in out.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let twice = savitzky_golay(&savitzky_golay(&profile, 11, 3).unwrap(), 11, 3).unwrap().speeds();
        for (a, b) in twice.iter().zip(&out) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
