use cablepul::greens::assemble_g;
use cablepul::io::{parse_system, Format, InputDocument, ParsedInput, SweepSpec};
use cablepul::model::validate_geometry;
use cablepul::surfop::{hollow_admittance, solid_admittance, HarmonicLayout};
use cablepul::{CableSystem, ConductorSpec, GroundModel, GroundSpec, Medium, MomSystem, ReferencePolicy};
use proptest::prelude::*;
use std::f64::consts::PI;

fn conductor() -> impl Strategy<Value = ConductorSpec> {
    (
        -0.2f64..0.2,
        -0.2f64..0.2,
        0.002f64..0.04,
        prop::option::of(0.1f64..0.95),
        1e6f64..6e7,
        0u32..4,
    )
        .prop_map(|(x, y, a, hole, sigma, n)| match hole {
            Some(h) => ConductorSpec::hollow(x, y, a, h * a, sigma).with_order(n),
            None => ConductorSpec::solid(x, y, a, sigma).with_order(n),
        })
}

/// Non-overlapping conductors on a row, spacing at least the sum of radii.
fn row(max: usize) -> impl Strategy<Value = Vec<ConductorSpec>> {
    prop::collection::vec((0.003f64..0.03, 0.0f64..0.05, -0.01f64..0.01, 1e6f64..6e7, prop::option::of(0.2f64..0.9), 0u32..4), 1..=max).prop_map(
        |items| {
            let mut x = 0.0;
            let mut prev = 0.0;
            items
                .into_iter()
                .enumerate()
                .map(|(i, (a, gap, y, sigma, hole, n))| {
                    if i > 0 {
                        x += prev + a + gap;
                    }
                    prev = a;
                    let c = match hole {
                        Some(h) => ConductorSpec::hollow(x, y, a, h * a, sigma),
                        None => ConductorSpec::solid(x, y, a, sigma),
                    };
                    c.with_order(n)
                })
                .collect()
        },
    )
}

fn violation_set(cs: &[ConductorSpec], relabel: &[usize]) -> Vec<(String, Vec<usize>)> {
    let mut v: Vec<(String, Vec<usize>)> = validate_geometry(cs)
        .into_iter()
        .map(|v| {
            let mut ids: Vec<usize> = v.conductors.iter().map(|&i| relabel[i]).collect();
            ids.sort_unstable();
            (format!("{:?}", v.rule), ids)
        })
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_is_permutation_invariant(cs in prop::collection::vec(conductor(), 1..6), seed in any::<u64>()) {
        let n = cs.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<ConductorSpec> = perm.iter().map(|&i| cs[i].clone()).collect();
        let identity: Vec<usize> = (0..n).collect();
        prop_assert_eq!(violation_set(&cs, &identity), violation_set(&permuted, &perm));
    }

    #[test]
    fn document_round_trip(cs in row(4), ground in prop::option::of(0.001f64..1.0), order in 0u32..5, toml in any::<bool>()) {
        let ground = ground.map(|sigma| GroundSpec { model: GroundModel::InfiniteEarthAnalytic, sigma });
        let system = CableSystem::new(cs, Medium::default(), ground, ReferencePolicy::auto_tube()).unwrap();
        let input = ParsedInput {
            system,
            sweep: Some(SweepSpec::parse("1:1e6:31:log").unwrap()),
            shunt: None,
            default_order: order,
        };
        let format = if toml { Format::Toml } else { Format::Json };
        let text = InputDocument::from_input(&input).to_string(format);
        let back = parse_system(&text, format).unwrap();
        prop_assert_eq!(&back.system, &input.system);
        prop_assert_eq!(back.sweep, input.sweep);
        let again = InputDocument::from_input(&back).to_string(format);
        prop_assert_eq!(text, again);
    }

    #[test]
    fn admittances_depend_on_order_magnitude_only(c in conductor(), f in 1.0f64..1e6, n in 0i32..8) {
        let w = 2.0 * PI * f;
        let m = Medium::default();
        if c.is_hollow() {
            prop_assert_eq!(hollow_admittance(&c, &m, w, n).unwrap(), hollow_admittance(&c, &m, w, -n).unwrap());
        } else {
            prop_assert_eq!(solid_admittance(&c, &m, w, n).unwrap(), solid_admittance(&c, &m, w, -n).unwrap());
        }
    }

    #[test]
    fn greens_matrix_reciprocity(cs in row(3)) {
        let sys = CableSystem::new(cs, Medium::default(), None, ReferencePolicy::auto_tube()).unwrap();
        let layout = HarmonicLayout::new(&sys);
        let g = assemble_g(&sys, &layout).unwrap().matrix;
        for cp in layout.contours(&sys.conductors) {
            for cq in layout.contours(&sys.conductors) {
                let (np, nq) = (cp.order as i32, cq.order as i32);
                for m in -np..=np {
                    for n in -nq..=nq {
                        let x = g[(cp.index(m), cq.index(n))];
                        let y = g[(cq.index(-n), cp.index(-m))];
                        prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(y.norm()));
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn impedance_is_symmetric_and_passive(cs in row(3), logf in 0.0f64..6.0) {
        let f = 10f64.powf(logf);
        let sys = CableSystem::new(cs, Medium::default(), None, ReferencePolicy::auto_tube()).unwrap();
        let r = MomSystem::new(&sys).unwrap().solve(f).unwrap();
        let zmax = r.z.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let asym = (&r.z - r.z.transpose()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(asym <= 1e-10 * zmax, "asymmetry {asym:e} of {zmax:e}");
        let rs = (&r.r + r.r.transpose()) * 0.5;
        prop_assert!(rs.symmetric_eigenvalues().min() >= -1e-12 * rs.norm());
        let ls = (&r.l + r.l.transpose()) * 0.5;
        prop_assert!(ls.cholesky().is_some());
    }

    #[test]
    fn proximity_never_lowers_total_resistance_of_a_pair(a in 0.003f64..0.02, gap in 0.0f64..0.02, logf in 2.0f64..6.0, n in 1u32..5) {
        let f = 10f64.powf(logf);
        let build = |order: u32| {
            let cs = vec![ConductorSpec::solid(0.0, 0.0, a, 5.8e7).with_order(order), ConductorSpec::solid(2.0 * a + gap, 0.0, a, 5.8e7).with_order(order)];
            let sys = CableSystem::new(cs, Medium::default(), None, ReferencePolicy::Explicit(1)).unwrap();
            MomSystem::new(&sys).unwrap().solve(f).unwrap().z[(0, 0)]
        };
        let (z0, zn) = (build(0), build(n));
        prop_assert!(zn.re >= z0.re * (1.0 - 1e-12), "{zn} vs {z0}");
        prop_assert!(zn.im <= z0.im * (1.0 + 1e-12), "{zn} vs {z0}");
    }
}
