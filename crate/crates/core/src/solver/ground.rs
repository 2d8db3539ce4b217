//! Additive infinite-earth return correction.
//!
//! Z = Z_analytic + ΔZ_prox, where Z_analytic holds skin-effect internal
//! impedances and earth-return terms from closed-form Bessel expressions, and
//! ΔZ_prox = Z_MoM(N) - Z_MoM(0) computed with the same remote return.
//!
//! Concentric cables (a core inside one or more tubes) are handled by the
//! usual loop formulation: each loop is a conductor returning through the
//! next tube outward, the outermost returning through earth, and the loop
//! matrix is transformed to conductor quantities.

use super::{MomSystem, PulResult, SolveError};
use crate::model::{CableSystem, ConductorSpec, GroundModel, Shape};
use crate::specfun::{self, ModifiedKind, Scaled, SpecfunError, C64};
use crate::MU0;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Skin depth in earth must exceed this multiple of the largest spacing for
/// the additive model to be trusted.
pub const PENETRATION_FACTOR: f64 = 10.0;

/// Relative tolerance for treating nested conductors as concentric.
const CONCENTRIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundError {
    #[error("ground model is {0:?}; the analytic correction needs an earth model")]
    Unsupported(GroundModel),
    #[error("the return conductor must be a tube enclosing every other conductor")]
    ReferenceNotRemote,
    #[error("conductor {inner} is not concentric with its enclosing conductor {outer}")]
    Eccentric { inner: usize, outer: usize },
    #[error("conductor {0} encloses more than one conductor")]
    PipeType(usize),
    #[error("matrix dimensions differ: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("proximity runs use different return conductors")]
    ReturnMismatch,
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Internal impedance (Ω/m) of a solid round wire: (m/2πaσ) I0(ma)/I1(ma).
pub fn solid_internal_impedance(cond: &ConductorSpec, omega: f64) -> Result<C64, SpecfunError> {
    let m = specfun::diffusion_constant(omega, cond.mu(), cond.sigma);
    let a = cond.outer_radius;
    Ok(m / (2.0 * PI * a * cond.sigma) * specfun::bessel_i0_over_i1(m * a)?)
}

/// Surface impedances of a tube (Ω/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeImpedance {
    /// Outer surface, return path outside the tube.
    pub outer: C64,
    /// Inner surface, return path inside the cavity.
    pub inner: C64,
    /// Transfer impedance between the two surfaces.
    pub mutual: C64,
}

/// Tube internal impedances from modified Bessel functions.
pub fn tube_impedance(cond: &ConductorSpec, omega: f64) -> Result<TubeImpedance, SpecfunError> {
    let b = cond.inner_radius().expect("tube_impedance called on a solid conductor");
    let a = cond.outer_radius;
    let sigma = cond.sigma;
    let m = specfun::diffusion_constant(omega, cond.mu(), sigma);
    let i = |n, z| specfun::modified_bessel_scaled(ModifiedKind::I, n, z);
    let k = |n, z| specfun::modified_bessel_scaled(ModifiedKind::K, n, z);
    let (ma, mb) = (m * a, m * b);
    let den: Scaled = i(1, ma)? * k(1, mb)? - i(1, mb)? * k(1, ma)?;
    let outer_num = i(0, ma)? * k(1, mb)? + k(0, ma)? * i(1, mb)?;
    let inner_num = i(0, mb)? * k(1, ma)? + k(0, mb)? * i(1, ma)?;
    Ok(TubeImpedance {
        outer: m / (2.0 * PI * a * sigma) * (outer_num / den).value(),
        inner: m / (2.0 * PI * b * sigma) * (inner_num / den).value(),
        mutual: 1.0 / (2.0 * PI * a * b * sigma) / den.value(),
    })
}

fn earth_constant(omega: f64, sigma_earth: f64) -> C64 {
    specfun::diffusion_constant(omega, MU0, sigma_earth)
}

/// Earth-return self impedance of a conductor of radius a in infinite earth.
pub fn earth_self_impedance(radius: f64, sigma_earth: f64, omega: f64) -> Result<C64, SpecfunError> {
    let mo = earth_constant(omega, sigma_earth);
    Ok(mo / (2.0 * PI * radius * sigma_earth) * specfun::bessel_k0_over_k1(mo * radius)?)
}

/// Earth-return mutual impedance between conductors of radii a_p, a_q at
/// centre distance d: K0(m_o d) / (2π a_p a_q σ_o K1(m_o a_p) K1(m_o a_q)).
pub fn earth_mutual_impedance(distance: f64, radius_p: f64, radius_q: f64, sigma_earth: f64, omega: f64) -> Result<C64, SpecfunError> {
    let mo = earth_constant(omega, sigma_earth);
    // Fixed operand order keeps the result bitwise symmetric.
    let (radius_p, radius_q) = (radius_p.min(radius_q), radius_p.max(radius_q));
    let k0 = specfun::modified_bessel_scaled(ModifiedKind::K, 0, mo * distance)?;
    let k1p = specfun::modified_bessel_scaled(ModifiedKind::K, 1, mo * radius_p)?;
    let k1q = specfun::modified_bessel_scaled(ModifiedKind::K, 1, mo * radius_q)?;
    Ok((k0 / (k1p * k1q)).value() / (2.0 * PI * radius_p * radius_q * sigma_earth))
}

/// Signal conductors grouped into concentric cables, innermost first.
pub fn concentric_groups(sys: &CableSystem) -> Result<Vec<Vec<usize>>, GroundError> {
    let signal = sys.signal_conductors();
    let cs = &sys.conductors;
    // Direct parent: the tightest enclosing conductor.
    let parent = |i: usize| -> Option<usize> {
        signal
            .iter()
            .copied()
            .filter(|&p| p != i && cs[p].encloses(&cs[i]))
            .min_by(|&x, &y| cs[x].outer_radius.total_cmp(&cs[y].outer_radius))
    };
    let parents: Vec<Option<usize>> = signal.iter().map(|&i| parent(i)).collect();
    let mut child_of = vec![None; cs.len()];
    for (&i, &p) in signal.iter().zip(&parents) {
        if let Some(p) = p {
            if child_of[p].replace(i).is_some() {
                return Err(GroundError::PipeType(p));
            }
            let tol = CONCENTRIC_TOLERANCE * cs[p].outer_radius;
            if cs[p].distance_to(&cs[i]) > tol {
                return Err(GroundError::Eccentric { inner: i, outer: p });
            }
        }
    }
    let mut groups = Vec::new();
    for (&root, &p) in signal.iter().zip(&parents) {
        if p.is_some() {
            continue;
        }
        let mut chain = vec![root];
        while let Some(c) = child_of[*chain.last().unwrap()] {
            chain.push(c);
        }
        chain.reverse();
        groups.push(chain);
    }
    Ok(groups)
}

fn outer_surface(cond: &ConductorSpec, omega: f64) -> Result<C64, SpecfunError> {
    match cond.shape {
        Shape::Solid => solid_internal_impedance(cond, omega),
        Shape::Hollow { .. } => Ok(tube_impedance(cond, omega)?.outer),
    }
}

fn check_remote_return(sys: &CableSystem) -> Result<(), GroundError> {
    let r = &sys.conductors[sys.reference];
    if sys.signal_conductors().iter().all(|&i| r.encloses(&sys.conductors[i])) {
        Ok(())
    } else {
        Err(GroundError::ReferenceNotRemote)
    }
}

/// Skin-effect plus earth-return impedance, no proximity, indexed like the
/// reduced MoM result (signal conductors in order).
pub fn ground_analytic(sys: &CableSystem, omega: f64) -> Result<DMatrix<C64>, GroundError> {
    let ground = match sys.ground {
        Some(g) if g.model == GroundModel::InfiniteEarthAnalytic => g,
        Some(g) => return Err(GroundError::Unsupported(g.model)),
        None => return Err(GroundError::Unsupported(GroundModel::None)),
    };
    check_remote_return(sys)?;
    let cs = &sys.conductors;
    let signal = sys.signal_conductors();
    let pos = |i: usize| signal.iter().position(|&s| s == i).unwrap();
    let groups = concentric_groups(sys)?;
    let mut z = DMatrix::zeros(signal.len(), signal.len());
    let mu = sys.medium.mu();

    for group in &groups {
        let k = group.len();
        let mut zl = DMatrix::<C64>::zeros(k, k);
        for (li, &c) in group.iter().enumerate() {
            zl[(li, li)] += outer_surface(&cs[c], omega)?;
            if li + 1 < k {
                let next = &cs[group[li + 1]];
                let tube = tube_impedance(next, omega)?;
                let gap = next.inner_radius().unwrap() / cs[c].outer_radius;
                zl[(li, li)] += C64::new(0.0, omega * mu / (2.0 * PI) * gap.ln()) + tube.inner;
                zl[(li, li + 1)] = -tube.mutual;
                zl[(li + 1, li)] = -tube.mutual;
            } else {
                zl[(li, li)] += earth_self_impedance(cs[c].outer_radius, ground.sigma, omega)?;
            }
        }
        // I_loop = T I_phase with T lower-triangular ones; Z_phase = T^T Z_loop T.
        let t = DMatrix::from_fn(k, k, |i, j| if j <= i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let zp = t.transpose() * zl * t;
        for (a, &ca) in group.iter().enumerate() {
            for (b, &cb) in group.iter().enumerate() {
                z[(pos(ca), pos(cb))] = zp[(a, b)];
            }
        }
    }
    for (ga, a) in groups.iter().enumerate() {
        for b in groups.iter().skip(ga + 1) {
            let (oa, ob) = (&cs[*a.last().unwrap()], &cs[*b.last().unwrap()]);
            let zm = earth_mutual_impedance(oa.distance_to(ob), oa.outer_radius, ob.outer_radius, ground.sigma, omega)?;
            for &i in a {
                for &j in b {
                    z[(pos(i), pos(j))] = zm;
                    z[(pos(j), pos(i))] = zm;
                }
            }
        }
    }
    Ok(z)
}

/// Warns when the earth skin depth is below [`PENETRATION_FACTOR`] times the
/// largest spacing between signal conductors.
pub fn penetration_warning(sys: &CableSystem, omega: f64) -> Option<String> {
    let g = sys.ground?;
    if g.model != GroundModel::InfiniteEarthAnalytic {
        return None;
    }
    let signal = sys.signal_conductors();
    let mut spacing: f64 = 0.0;
    for &i in &signal {
        for &j in &signal {
            spacing = spacing.max(sys.conductors[i].distance_to(&sys.conductors[j]));
        }
    }
    let delta = (2.0 / (omega * MU0 * g.sigma)).sqrt();
    (delta < PENETRATION_FACTOR * spacing).then(|| {
        format!(
            "earth skin depth {delta:.4} m is below {PENETRATION_FACTOR} x conductor spacing {spacing:.4} m at {:.6e} Hz; the additive earth model may be inaccurate",
            omega / (2.0 * PI)
        )
    })
}

pub fn combine_ground(analytic: &DMatrix<C64>, delta: &DMatrix<C64>) -> Result<DMatrix<C64>, GroundError> {
    if analytic.shape() != delta.shape() {
        return Err(GroundError::DimensionMismatch(analytic.nrows(), delta.nrows()));
    }
    Ok(analytic + delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundCorrectionParts {
    pub frequency_hz: f64,
    /// Skin effect and earth return, no proximity.
    pub analytic: DMatrix<C64>,
    /// Z_MoM(N) - Z_MoM(0).
    pub delta: DMatrix<C64>,
    pub combined: DMatrix<C64>,
    pub warning: Option<String>,
}

/// The two MoM runs (requested orders and all-zero orders) sharing one return.
#[derive(Debug, Clone)]
pub struct ProximityPipeline {
    pub with_proximity: MomSystem,
    pub skin_only: MomSystem,
}

impl ProximityPipeline {
    pub fn new(sys: &CableSystem) -> Result<Self, SolveError> {
        Ok(ProximityPipeline {
            with_proximity: MomSystem::new(sys)?,
            skin_only: MomSystem::new(&sys.with_order(0))?,
        })
    }

    pub fn delta(&self, frequency_hz: f64) -> Result<(DMatrix<C64>, PulResult, PulResult), GroundError> {
        let full = self.with_proximity.solve(frequency_hz)?;
        let base = self.skin_only.solve(frequency_hz)?;
        proximity_difference(&full, &base).map(|d| (d, full, base))
    }

    pub fn correct(&self, frequency_hz: f64) -> Result<GroundCorrectionParts, GroundError> {
        let omega = 2.0 * PI * frequency_hz;
        let (delta, _, _) = self.delta(frequency_hz)?;
        let analytic = ground_analytic(&self.with_proximity.system, omega)?;
        let combined = combine_ground(&analytic, &delta)?;
        Ok(GroundCorrectionParts {
            frequency_hz,
            analytic,
            delta,
            combined,
            warning: penetration_warning(&self.with_proximity.system, omega),
        })
    }
}

/// ΔZ_prox from two reduced results that must share the return conductor.
pub fn proximity_difference(full: &PulResult, base: &PulResult) -> Result<DMatrix<C64>, GroundError> {
    if full.reference != base.reference
        || full.conductors != base.conductors
        || full.orders[full.reference] != base.orders[base.reference]
        || full.z.shape() != base.z.shape()
    {
        return Err(GroundError::ReturnMismatch);
    }
    Ok(&full.z - &base.z)
}

/// ΔZ_prox at one frequency, building both moment systems.
pub fn proximity_delta(sys: &CableSystem, omega: f64) -> Result<DMatrix<C64>, GroundError> {
    Ok(ProximityPipeline::new(sys)?.delta(omega / (2.0 * PI))?.0)
}

/// Common and loop modes of a symmetric conductor pair.
///
/// Common mode is Z_s + Z_m (half the sum of all entries: both conductors in
/// parallel, normalised per conductor); loop mode is (Z11 + Z22 - 2 Z12)/2.
pub fn pair_modes(z: &DMatrix<C64>) -> (C64, C64) {
    assert_eq!(z.shape(), (2, 2), "pair_modes needs a 2x2 matrix");
    let common = z.sum() / 2.0;
    let loop_mode = (z[(0, 0)] + z[(1, 1)] - z[(0, 1)] - z[(1, 0)]) / 2.0;
    (common, loop_mode)
}
