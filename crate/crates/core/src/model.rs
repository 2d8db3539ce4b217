//! Geometry and material description of a cable system.

use crate::MU0;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative tolerance used when deciding whether two circles touch.
const TOUCH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Solid,
    Hollow { inner_radius: f64 },
}

/// One round conductor.  Lengths in metres, conductivity in S/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub outer_radius: f64,
    pub shape: Shape,
    pub sigma: f64,
    pub eps_r: f64,
    pub mu_r: f64,
    pub order: u32,
}

impl ConductorSpec {
    pub fn solid(x: f64, y: f64, radius: f64, sigma: f64) -> Self {
        ConductorSpec {
            center_x: x,
            center_y: y,
            outer_radius: radius,
            shape: Shape::Solid,
            sigma,
            eps_r: 1.0,
            mu_r: 1.0,
            order: 0,
        }
    }

    pub fn hollow(x: f64, y: f64, outer_radius: f64, inner_radius: f64, sigma: f64) -> Self {
        ConductorSpec {
            shape: Shape::Hollow { inner_radius },
            ..ConductorSpec::solid(x, y, outer_radius, sigma)
        }
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn inner_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Solid => None,
            Shape::Hollow { inner_radius } => Some(inner_radius),
        }
    }

    pub fn is_hollow(&self) -> bool {
        matches!(self.shape, Shape::Hollow { .. })
    }

    pub fn area(&self) -> f64 {
        let inner = self.inner_radius().unwrap_or(0.0);
        std::f64::consts::PI * (self.outer_radius.powi(2) - inner.powi(2))
    }

    pub fn mu(&self) -> f64 {
        self.mu_r * MU0
    }

    pub fn distance_to(&self, other: &ConductorSpec) -> f64 {
        (self.center_x - other.center_x).hypot(self.center_y - other.center_y)
    }

    /// True when `other` lies inside this conductor's cavity.
    pub fn encloses(&self, other: &ConductorSpec) -> bool {
        match self.inner_radius() {
            Some(r) => self.distance_to(other) + other.outer_radius <= r * (1.0 + TOUCH_TOLERANCE),
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub eps_r: f64,
    pub mu_r: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Medium { eps_r: 1.0, mu_r: 1.0 }
    }
}

impl Medium {
    pub fn mu(&self) -> f64 {
        self.mu_r * MU0
    }
    pub fn eps(&self) -> f64 {
        self.eps_r * crate::EPS0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundModel {
    None,
    InfiniteEarthAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundSpec {
    pub model: GroundModel,
    pub sigma: f64,
}

/// How the return conductor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReferencePolicy {
    Explicit(usize),
    /// Remote tube centred on the centroid of the conductor centres.
    /// `sigma: None` copies the first conductor's conductivity.
    AutoTube {
        radius: f64,
        thickness: f64,
        sigma: Option<f64>,
    },
}

impl ReferencePolicy {
    pub const DEFAULT_TUBE_RADIUS: f64 = 10.0;
    pub const DEFAULT_TUBE_THICKNESS: f64 = 1e-3;

    pub fn auto_tube() -> Self {
        ReferencePolicy::AutoTube {
            radius: Self::DEFAULT_TUBE_RADIUS,
            thickness: Self::DEFAULT_TUBE_THICKNESS,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    NonPositiveRadius,
    BadInnerRadius,
    NonPositiveConductivity,
    NonPositivePermeability,
    PermittivityBelowOne,
    Overlap,
    ReferenceOutOfRange,
    TubeDoesNotEnclose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    /// Conductor indices involved; pairs are reported with the smaller first.
    pub conductors: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {:?}: {}", self.rule, self.conductors, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("geometry violations: {}", format_violations(.0))]
    Geometry(Vec<Violation>),
    #[error("no conductors given")]
    Empty,
    #[error("reference conductor {0} does not exist")]
    MissingReference(usize),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Validated set of conductors plus medium, ground and return choice.
///
/// With an automatic return the tube is appended as the last conductor.
#[derive(Debug, Clone, PartialEq)]
pub struct CableSystem {
    pub conductors: Vec<ConductorSpec>,
    pub medium: Medium,
    pub ground: Option<GroundSpec>,
    pub reference_policy: ReferencePolicy,
    pub reference: usize,
}

impl CableSystem {
    pub fn new(
        conductors: Vec<ConductorSpec>,
        medium: Medium,
        ground: Option<GroundSpec>,
        reference_policy: ReferencePolicy,
    ) -> Result<Self, ModelError> {
        if conductors.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut all = conductors;
        let reference = match reference_policy {
            ReferencePolicy::Explicit(i) => {
                if i >= all.len() {
                    return Err(ModelError::MissingReference(i));
                }
                i
            }
            ReferencePolicy::AutoTube {
                radius,
                thickness,
                sigma,
            } => {
                let n = all.len() as f64;
                let cx = all.iter().map(|c| c.center_x).sum::<f64>() / n;
                let cy = all.iter().map(|c| c.center_y).sum::<f64>() / n;
                let sigma = sigma.unwrap_or(all[0].sigma);
                all.push(ConductorSpec::hollow(cx, cy, radius, radius - thickness, sigma));
                all.len() - 1
            }
        };
        let mut violations = validate_geometry(&all);
        if matches!(reference_policy, ReferencePolicy::AutoTube { .. }) {
            let tube = &all[reference];
            for (i, c) in all[..reference].iter().enumerate() {
                if !tube.encloses(c) {
                    violations.push(Violation {
                        rule: Rule::TubeDoesNotEnclose,
                        conductors: vec![i, reference],
                        message: format!("return tube does not enclose conductor {i}"),
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(ModelError::Geometry(violations));
        }
        Ok(CableSystem {
            conductors: all,
            medium,
            ground,
            reference_policy,
            reference,
        })
    }

    pub fn len(&self) -> usize {
        self.conductors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conductors.is_empty()
    }

    pub fn has_auto_return(&self) -> bool {
        matches!(self.reference_policy, ReferencePolicy::AutoTube { .. })
    }

    /// Conductors given by the user (the auto-return tube excluded).
    pub fn user_conductors(&self) -> &[ConductorSpec] {
        if self.has_auto_return() {
            &self.conductors[..self.conductors.len() - 1]
        } else {
            &self.conductors
        }
    }

    /// Indices that survive reduction to the reference conductor.
    pub fn signal_conductors(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.reference).collect()
    }

    /// Copy with every harmonic order replaced by `order` (the auto-return
    /// tube stays at order 0).
    pub fn with_order(&self, order: u32) -> CableSystem {
        let mut out = self.clone();
        let n = out.conductors.len();
        for (i, c) in out.conductors.iter_mut().enumerate() {
            if !(self.has_auto_return() && i == n - 1) {
                c.order = order;
            }
        }
        out
    }

    pub fn max_order(&self) -> u32 {
        self.conductors.iter().map(|c| c.order).max().unwrap_or(0)
    }
}

/// Checks every per-conductor and pairwise invariant; an empty list means the
/// geometry is valid.  Touching circles are allowed.
pub fn validate_geometry(conductors: &[ConductorSpec]) -> Vec<Violation> {
    let mut out = Vec::new();
    let single = |out: &mut Vec<Violation>, i: usize, rule: Rule, message: String| {
        out.push(Violation {
            rule,
            conductors: vec![i],
            message,
        })
    };
    for (i, c) in conductors.iter().enumerate() {
        if !(c.outer_radius > 0.0) {
            single(&mut out, i, Rule::NonPositiveRadius, format!("outer radius {}", c.outer_radius));
        }
        if let Some(r) = c.inner_radius() {
            if !(r > 0.0 && r < c.outer_radius) {
                single(&mut out, i, Rule::BadInnerRadius, format!("inner radius {r} not in (0, {})", c.outer_radius));
            }
        }
        if !(c.sigma > 0.0) {
            single(&mut out, i, Rule::NonPositiveConductivity, format!("sigma {}", c.sigma));
        }
        if !(c.mu_r > 0.0) {
            single(&mut out, i, Rule::NonPositivePermeability, format!("mu_r {}", c.mu_r));
        }
        if !(c.eps_r >= 1.0) {
            single(&mut out, i, Rule::PermittivityBelowOne, format!("eps_r {}", c.eps_r));
        }
    }
    for p in 0..conductors.len() {
        for q in p + 1..conductors.len() {
            let (a, b) = (&conductors[p], &conductors[q]);
            let d = a.distance_to(b);
            let apart = d >= (a.outer_radius + b.outer_radius) * (1.0 - TOUCH_TOLERANCE);
            if !(apart || a.encloses(b) || b.encloses(a)) {
                out.push(Violation {
                    rule: Rule::Overlap,
                    conductors: vec![p, q],
                    message: format!(
                        "centre distance {d} < {} and neither lies in the other's cavity",
                        a.outer_radius + b.outer_radius
                    ),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_is_allowed_and_overlap_is_not() {
        let a = ConductorSpec::solid(0.0, 0.0, 0.01, 1e7);
        let b = ConductorSpec::solid(0.02, 0.0, 0.01, 1e7);
        assert!(validate_geometry(&[a.clone(), b]).is_empty());
        let c = ConductorSpec::solid(0.018, 0.0, 0.01, 1e7);
        let v = validate_geometry(&[a, c]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::Overlap);
        assert_eq!(v[0].conductors, vec![0, 1]);
    }

    #[test]
    fn auto_tube_is_appended_at_the_centroid() {
        let sys = CableSystem::new(
            vec![
                ConductorSpec::solid(-0.035, 0.0, 0.025, 58e5),
                ConductorSpec::solid(0.035, 0.1, 0.025, 58e5),
            ],
            Medium::default(),
            None,
            ReferencePolicy::auto_tube(),
        )
        .unwrap();
        assert_eq!(sys.len(), 3);
        assert_eq!(sys.reference, 2);
        let t = &sys.conductors[2];
        assert_eq!((t.center_x, t.center_y), (0.0, 0.05));
        assert_eq!(t.inner_radius(), Some(10.0 - 1e-3));
        assert_eq!(t.sigma, 58e5);
        assert_eq!(sys.signal_conductors(), vec![0, 1]);
    }

    #[test]
    fn explicit_reference_must_exist() {
        let r = CableSystem::new(
            vec![ConductorSpec::solid(0.0, 0.0, 0.01, 1e7)],
            Medium::default(),
            None,
            ReferencePolicy::Explicit(3),
        );
        assert_eq!(r, Err(ModelError::MissingReference(3)));
    }
}
