//! Surface admittance operator: per-harmonic relation between the tangential
//! electric field on each conductor contour and the equivalent surface current.

use crate::model::{CableSystem, ConductorSpec, Medium, Shape};
use crate::specfun::{self, SpecfunError, C64};
use nalgebra::{DMatrix, Matrix2};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConductorBlock {
    pub order: u32,
    pub hollow: bool,
    pub offset: usize,
}

impl ConductorBlock {
    pub fn harmonics(&self) -> usize {
        2 * self.order as usize + 1
    }
    pub fn contours(&self) -> usize {
        if self.hollow {
            2
        } else {
            1
        }
    }
}

/// One contour of one conductor together with its slice of the unknowns.
#[derive(Debug, Clone, Copy)]
pub struct ContourRef {
    pub conductor: usize,
    pub side: Side,
    pub circle: Circle,
    pub order: u32,
    pub offset: usize,
}

impl ContourRef {
    pub fn index(&self, n: i32) -> usize {
        (self.offset as i64 + n as i64 + self.order as i64) as usize
    }
}

/// Map (conductor, contour, harmonic) -> global unknown index.  Within a
/// hollow conductor all inner-contour harmonics precede the outer ones; within
/// a contour harmonics run from -N to N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicLayout {
    pub blocks: Vec<ConductorBlock>,
    pub size: usize,
}

impl HarmonicLayout {
    pub fn new(sys: &CableSystem) -> Self {
        Self::from_conductors(&sys.conductors)
    }

    pub fn from_conductors(conductors: &[ConductorSpec]) -> Self {
        let mut offset = 0;
        let blocks = conductors
            .iter()
            .map(|c| {
                let b = ConductorBlock {
                    order: c.order,
                    hollow: c.is_hollow(),
                    offset,
                };
                offset += b.harmonics() * b.contours();
                b
            })
            .collect();
        HarmonicLayout { blocks, size: offset }
    }

    pub fn index(&self, conductor: usize, side: Side, n: i32) -> Option<usize> {
        let b = self.blocks.get(conductor)?;
        let order = b.order as i32;
        if n.abs() > order || (side == Side::Inner && !b.hollow) {
            return None;
        }
        let contour = usize::from(b.hollow && side == Side::Outer);
        Some(b.offset + contour * b.harmonics() + (n + order) as usize)
    }

    /// Inverse of [`HarmonicLayout::index`].
    pub fn locate(&self, row: usize) -> Option<(usize, Side, i32)> {
        let p = self.blocks.iter().rposition(|b| b.offset <= row)?;
        let b = &self.blocks[p];
        let local = row - b.offset;
        if local >= b.harmonics() * b.contours() {
            return None;
        }
        let side = if b.hollow && local < b.harmonics() {
            Side::Inner
        } else {
            Side::Outer
        };
        Some((p, side, (local % b.harmonics()) as i32 - b.order as i32))
    }

    pub fn contours(&self, conductors: &[ConductorSpec]) -> Vec<ContourRef> {
        let mut out = Vec::new();
        for (p, (b, c)) in self.blocks.iter().zip(conductors).enumerate() {
            let center = C64::new(c.center_x, c.center_y);
            if let Some(r) = c.inner_radius() {
                out.push(ContourRef {
                    conductor: p,
                    side: Side::Inner,
                    circle: Circle { center, radius: r },
                    order: b.order,
                    offset: b.offset,
                });
            }
            out.push(ContourRef {
                conductor: p,
                side: Side::Outer,
                circle: Circle {
                    center,
                    radius: c.outer_radius,
                },
                order: b.order,
                offset: b.offset + if b.hollow { b.harmonics() } else { 0 },
            });
        }
        out
    }
}

fn prefactor(omega: f64) -> C64 {
    C64::new(0.0, -2.0 * PI / omega)
}

fn medium_wavenumber(medium: &Medium, omega: f64) -> C64 {
    specfun::wavenumber(omega, medium.mu(), medium.eps(), 0.0)
}

fn conductor_wavenumber(cond: &ConductorSpec, omega: f64) -> C64 {
    specfun::wavenumber(omega, cond.mu(), cond.eps_r * crate::EPS0, cond.sigma)
}

/// Scalar admittance of a solid conductor for harmonic n (depends on |n| only).
pub fn solid_admittance(cond: &ConductorSpec, medium: &Medium, omega: f64, n: i32) -> Result<C64, SpecfunError> {
    let n = n.unsigned_abs();
    let a = cond.outer_radius;
    let k = conductor_wavenumber(cond, omega);
    let ko = medium_wavenumber(medium, omega);
    let (mu, mu_o) = (cond.mu(), medium.mu());
    // z J'/J = n + shifted; the shared n is handled exactly.
    let sc = specfun::bessel_log_derivative_shifted(n, k * a)?;
    let so = if ko * a == C64::new(0.0, 0.0) {
        C64::new(0.0, 0.0)
    } else {
        specfun::bessel_log_derivative_shifted(n, ko * a)?
    };
    let lead = n as f64 * (1.0 / mu - 1.0 / mu_o);
    Ok(prefactor(omega) * (lead + sc / mu - so / mu_o))
}

/// 2×2 admittance of a hollow conductor for harmonic n, ordered [inner; outer].
pub fn hollow_admittance(
    cond: &ConductorSpec,
    medium: &Medium,
    omega: f64,
    n: i32,
) -> Result<Matrix2<C64>, SpecfunError> {
    let n = n.unsigned_abs();
    let a = cond.outer_radius;
    let ai = cond
        .inner_radius()
        .expect("hollow_admittance called on a solid conductor");
    let k = conductor_wavenumber(cond, omega);
    let ko = medium_wavenumber(medium, omega);
    let (mu, mu_o) = (cond.mu(), medium.mu());

    let m = specfun::mn_kernel(n, k * a, k * ai)?;
    let mo = specfun::mn_kernel(n, ko * a, ko * ai)?;
    let c = |x: C64, y: C64| -> Result<C64, SpecfunError> { Ok((specfun::chi_kernel(n, x, y)? / m).value() / mu) };
    let co = |x: C64, y: C64| -> Result<C64, SpecfunError> { Ok((specfun::chi_kernel(n, x, y)? / mo).value() / mu_o) };

    let f = prefactor(omega);
    let y11 = f * (c(k * a, k * ai)? - co(ko * a, ko * ai)?);
    let y12 = f * (co(ko * ai, ko * ai)? - c(k * ai, k * ai)?);
    let y21 = f * (co(ko * a, ko * a)? - c(k * a, k * a)?);
    let y22 = f * (c(k * ai, k * a)? - co(ko * ai, ko * a)?);
    Ok(Matrix2::new(y11, y12, y21, y22))
}

/// Per-conductor, per-|n| admittance blocks.
#[derive(Debug, Clone)]
pub enum AdmittanceBlock {
    Solid(Vec<C64>),
    Hollow(Vec<Matrix2<C64>>),
}

impl AdmittanceBlock {
    pub fn solid(&self, n: i32) -> C64 {
        match self {
            AdmittanceBlock::Solid(v) => v[n.unsigned_abs() as usize],
            AdmittanceBlock::Hollow(_) => panic!("solid block requested from hollow conductor"),
        }
    }
    pub fn hollow(&self, n: i32) -> Matrix2<C64> {
        match self {
            AdmittanceBlock::Hollow(v) => v[n.unsigned_abs() as usize],
            AdmittanceBlock::Solid(_) => panic!("hollow block requested from solid conductor"),
        }
    }
}

/// Block-diagonal operator Y_s.  Only the per-|n| blocks are stored; the
/// ±n blocks are the same object, so the |n| symmetry is exact.
#[derive(Debug, Clone)]
pub struct SurfaceOperator {
    pub omega: f64,
    pub layout: HarmonicLayout,
    pub blocks: Vec<AdmittanceBlock>,
}

pub fn assemble_ys(sys: &CableSystem, layout: &HarmonicLayout, omega: f64) -> Result<SurfaceOperator, SpecfunError> {
    assert_eq!(layout.blocks.len(), sys.conductors.len(), "layout does not match system");
    let blocks = sys
        .conductors
        .iter()
        .zip(&layout.blocks)
        .map(|(c, b)| {
            let orders = 0..=b.order as i32;
            Ok(match c.shape {
                Shape::Solid => AdmittanceBlock::Solid(
                    orders
                        .map(|n| solid_admittance(c, &sys.medium, omega, n))
                        .collect::<Result<_, _>>()?,
                ),
                Shape::Hollow { .. } => AdmittanceBlock::Hollow(
                    orders
                        .map(|n| hollow_admittance(c, &sys.medium, omega, n))
                        .collect::<Result<_, _>>()?,
                ),
            })
        })
        .collect::<Result<_, SpecfunError>>()?;
    Ok(SurfaceOperator {
        omega,
        layout: layout.clone(),
        blocks,
    })
}

impl SurfaceOperator {
    /// Y_s · X without forming Y_s.
    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(x.nrows(), self.layout.size);
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (p, (b, blk)) in self.layout.blocks.iter().zip(&self.blocks).enumerate() {
            let order = b.order as i32;
            for n in -order..=order {
                let o = self.layout.index(p, Side::Outer, n).unwrap();
                match blk {
                    AdmittanceBlock::Solid(_) => {
                        let y = blk.solid(n);
                        for c in 0..x.ncols() {
                            out[(o, c)] = y * x[(o, c)];
                        }
                    }
                    AdmittanceBlock::Hollow(_) => {
                        let y = blk.hollow(n);
                        let i = self.layout.index(p, Side::Inner, n).unwrap();
                        for c in 0..x.ncols() {
                            let (xi, xo) = (x[(i, c)], x[(o, c)]);
                            out[(i, c)] = y[(0, 0)] * xi + y[(0, 1)] * xo;
                            out[(o, c)] = y[(1, 0)] * xi + y[(1, 1)] * xo;
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense Y_s (for inspection and tests).
    pub fn to_dense(&self) -> DMatrix<C64> {
        self.apply(&DMatrix::identity(self.layout.size, self.layout.size))
    }
}
