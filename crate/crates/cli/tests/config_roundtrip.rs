use proptest::prelude::*;
use wedgeflow::Vec2;
use wedgeflow_cli::config::{Angle, MuSpec, Push, RunConfig};

fn angle() -> impl Strategy<Value = Angle> {
    prop_oneof![
        (-12i64..13, 1i64..13).prop_map(|(p, q)| Angle::PiRational { p, q }),
        (-10.0f64..10.0).prop_map(Angle::Radians),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        any::<f64>().prop_filter("finite", |v| v.is_finite())
    ]
}

fn vec2() -> impl Strategy<Value = Vec2> {
    (finite(), finite()).prop_map(|(a, b)| Vec2::new(a, b))
}

prop_compose! {
    fn config()(
        (xi, delta, epsilon) in (angle(), angle(), angle()),
        mu in prop_oneof![
            vec2().prop_map(MuSpec::Cartesian),
            (finite(), angle()).prop_map(|(norm, angle)| MuSpec::Polar { norm, angle }),
        ],
        seed in any::<u64>(),
        sizes in (1usize..500, 1usize..500, 1usize..500, 1usize..500),
        r_max in proptest::option::of(0.1f64..100.0),
        perturb in proptest::option::of((0usize..9, finite())),
        sim in (1e-6f64..1e-1, 1u64..10_000_000, 1u64..1000, 0u64..100_000, any::<bool>()),
        start in vec2(),
        x in vec2(),
        surv in (1e-3f64..1e3, 1e-5f64..1e-1, 1u64..1_000_000),
    ) -> RunConfig {
        let mut c = RunConfig::new(xi, delta, epsilon, mu);
        c.seed = seed;
        (c.grid_n_theta, c.grid_n_r, c.hist_n_theta, c.hist_n_r) = sizes;
        c.grid_r_max = r_max;
        c.hist_r_max = r_max.map(|r| 2.0 * r);
        c.perturb = perturb;
        (c.dt, c.steps, c.paths, c.burn_in) = (sim.0, sim.1, sim.2, sim.3);
        c.push = if sim.4 { Push::Mirror } else { Push::Project };
        c.start = start;
        c.x = x;
        (c.horizon, c.survival_dt, c.survival_paths) = surv;
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_render_round_trip(c in config()) {
        let text = c.render();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }
}
