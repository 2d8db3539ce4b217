//! Shunt admittance of coaxial single-core cables from their insulation.

use crate::specfun::C64;
use crate::EPS0;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricLayer {
    pub inner_radius_m: f64,
    pub outer_radius_m: f64,
    pub eps_r: f64,
}

/// Conductors of one cable, innermost first; `gaps[i]` is the insulation
/// outside conductor i (the last gap separates the outermost conductor from
/// the surrounding earth or medium).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoaxialCable {
    pub conductors: Vec<usize>,
    pub gaps: Vec<Vec<DielectricLayer>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntSpec {
    pub cables: Vec<CoaxialCable>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShuntError {
    #[error("insulation radii are not strictly nested: {0}")]
    NotNested(String),
    #[error("cable has {conductors} conductors but {gaps} insulation gaps")]
    GapCount { conductors: usize, gaps: usize },
    #[error("conductor {0} is not covered by any cable or appears twice")]
    Coverage(usize),
}

/// C = 2πε / ln(r_out/r_in) per layer, layers of one gap in series.
pub fn gap_capacitance(layers: &[DielectricLayer]) -> Result<f64, ShuntError> {
    if layers.is_empty() {
        return Err(ShuntError::NotNested("empty insulation gap".into()));
    }
    let mut elastance = 0.0;
    let mut last_outer = 0.0;
    for l in layers {
        if !(l.inner_radius_m > 0.0 && l.outer_radius_m > l.inner_radius_m && l.inner_radius_m >= last_outer) {
            return Err(ShuntError::NotNested(format!(
                "layer {} -> {} after radius {last_outer}",
                l.inner_radius_m, l.outer_radius_m
            )));
        }
        if !(l.eps_r > 0.0) {
            return Err(ShuntError::NotNested(format!("eps_r {}", l.eps_r)));
        }
        elastance += (l.outer_radius_m / l.inner_radius_m).ln() / (2.0 * PI * EPS0 * l.eps_r);
        last_outer = l.outer_radius_m;
    }
    Ok(1.0 / elastance)
}

/// jωC matrix of one cable in conductor (phase) quantities:
/// Y_ii = C_{i-1} + C_i, Y_{i,i+1} = -C_i.
pub fn coaxial_shunt_y(cable: &CoaxialCable, omega: f64) -> Result<DMatrix<C64>, ShuntError> {
    let k = cable.conductors.len();
    if cable.gaps.len() != k {
        return Err(ShuntError::GapCount {
            conductors: k,
            gaps: cable.gaps.len(),
        });
    }
    let mut last_outer = 0.0;
    for gap in &cable.gaps {
        if let Some(first) = gap.first() {
            if first.inner_radius_m < last_outer {
                return Err(ShuntError::NotNested(format!(
                    "gap starting at {} overlaps previous gap ending at {last_outer}",
                    first.inner_radius_m
                )));
            }
        }
        last_outer = gap.last().map_or(last_outer, |l| l.outer_radius_m);
    }
    let c: Vec<f64> = cable.gaps.iter().map(|g| gap_capacitance(g)).collect::<Result<_, _>>()?;
    let jw = C64::new(0.0, omega);
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            jw * (c[i] + if i > 0 { c[i - 1] } else { 0.0 })
        } else if j == i + 1 {
            -jw * c[i]
        } else if i == j + 1 {
            -jw * c[j]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Block-diagonal shunt admittance over `conductors` (the reduced ordering).
pub fn system_shunt_y(spec: &ShuntSpec, conductors: &[usize], omega: f64) -> Result<DMatrix<C64>, ShuntError> {
    let n = conductors.len();
    let mut y = DMatrix::zeros(n, n);
    let mut covered = vec![false; n];
    for cable in &spec.cables {
        let yc = coaxial_shunt_y(cable, omega)?;
        let pos: Vec<usize> = cable
            .conductors
            .iter()
            .map(|c| conductors.iter().position(|x| x == c).ok_or(ShuntError::Coverage(*c)))
            .collect::<Result<_, _>>()?;
        for (a, &pa) in pos.iter().enumerate() {
            if std::mem::replace(&mut covered[pa], true) {
                return Err(ShuntError::Coverage(conductors[pa]));
            }
            for (b, &pb) in pos.iter().enumerate() {
                y[(pa, pb)] = yc[(a, b)];
            }
        }
    }
    if let Some(i) = covered.iter().position(|&c| !c) {
        return Err(ShuntError::Coverage(conductors[i]));
    }
    Ok(y)
}
