#![allow(dead_code)]

use cablepul::io::{read_input, ParsedInput};
use cablepul::{CableSystem, ConductorSpec, GroundModel, GroundSpec, Medium, ReferencePolicy, C64};
use nalgebra::DMatrix;
use std::path::PathBuf;

pub fn inputs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs")
}

pub fn load(name: &str) -> ParsedInput {
    read_input(&inputs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Three copper shells, 40 mm diameter, 4 mm wall, 45 mm apart.
pub fn shells(order: u32) -> CableSystem {
    let c = [-0.045, 0.0, 0.045]
        .iter()
        .map(|&x| ConductorSpec::hollow(x, 0.0, 0.02, 0.016, 58e6).with_order(order))
        .collect();
    CableSystem::new(c, Medium::default(), None, ReferencePolicy::auto_tube()).unwrap()
}

/// Two buried solid conductors, a = 25 mm, 70 mm apart, earth 0.1 S/m.
pub fn buried_pair(order: u32) -> CableSystem {
    let c = [-0.035, 0.035]
        .iter()
        .map(|&x| ConductorSpec::solid(x, 0.0, 0.025, 58e5).with_order(order))
        .collect();
    let ground = GroundSpec {
        model: GroundModel::InfiniteEarthAnalytic,
        sigma: 0.1,
    };
    CableSystem::new(c, Medium::default(), Some(ground), ReferencePolicy::auto_tube()).unwrap()
}

/// Positive-sequence impedance of a symmetric-ish group: mean self minus
/// mean mutual.
pub fn positive_sequence(z: &DMatrix<C64>) -> C64 {
    let n = z.nrows();
    let mut own = C64::new(0.0, 0.0);
    let mut mutual = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                own += z[(i, j)];
            } else {
                mutual += z[(i, j)];
            }
        }
    }
    own / n as f64 - mutual / (n * (n - 1)) as f64
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn crel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}
