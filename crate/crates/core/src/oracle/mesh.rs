//! Polar filament meshes: graded rings times equal angular sectors.

use super::OracleError;
use crate::model::{CableSystem, ConductorSpec};
use crate::specfun::C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// First radial cell at a surface, as a fraction of the skin depth.
    pub surface_fraction: f64,
    /// Ratio between consecutive radial cells moving away from a surface.
    pub growth: f64,
    /// Cap on radial cells as a fraction of the outer radius.
    pub max_cell_fraction: f64,
    /// Target arc length of a sector at the outer surface, in skin depths.
    pub arc_skin_depths: f64,
    pub min_sectors: usize,
    /// Dense inter-conductor storage limit in bytes.
    pub memory_budget: usize,
    /// Conductors treated analytically as uniform rings when they enclose all
    /// others and their radius exceeds this many times the largest enclosed
    /// extent (the remote return tube).
    pub ring_return_ratio: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            surface_fraction: 0.125,
            growth: 1.4,
            max_cell_fraction: 1.0 / 6.0,
            arc_skin_depths: 1.0,
            min_sectors: 96,
            memory_budget: 3 << 29,
            ring_return_ratio: 20.0,
        }
    }
}

impl MeshOptions {
    /// Every cell dimension halved.
    pub fn refined(&self) -> Self {
        MeshOptions {
            surface_fraction: self.surface_fraction / 2.0,
            max_cell_fraction: self.max_cell_fraction / 2.0,
            arc_skin_depths: self.arc_skin_depths / 2.0,
            min_sectors: self.min_sectors * 2,
            ..*self
        }
    }
}

/// Sector of an annulus, approximated by a rectangle with the same area and
/// radial width when near-field integrals are needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filament {
    pub center: C64,
    /// Angle of the radial direction through the filament.
    pub angle: f64,
    pub radial: f64,
    pub tangential: f64,
    pub area: f64,
    pub conductor: usize,
}

impl Filament {
    pub fn equivalent_radius(&self) -> f64 {
        (self.area / PI).sqrt()
    }

    pub fn size(&self) -> f64 {
        self.radial.max(self.tangential)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConductorMesh {
    pub conductor: usize,
    pub center: C64,
    /// Ring edges, ascending.
    pub edges: Vec<f64>,
    pub sectors: usize,
    pub offset: usize,
}

impl ConductorMesh {
    pub fn rings(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn len(&self) -> usize {
        self.rings() * self.sectors
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global filament index of (ring, sector).
    pub fn index(&self, ring: usize, sector: usize) -> usize {
        self.offset + ring * self.sectors + sector
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub conductor: usize,
    pub filaments: usize,
    pub rings: usize,
    pub sectors: usize,
    pub area_relative_error: f64,
    pub max_radial_m: f64,
    pub max_tangential_m: f64,
    pub min_radial_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilamentMesh {
    pub filaments: Vec<Filament>,
    pub conductors: Vec<ConductorMesh>,
    /// Conductor handled as a uniform ring instead of being meshed.
    pub ring_return: Option<usize>,
    pub design_frequency_hz: f64,
}

impl FilamentMesh {
    pub fn len(&self) -> usize {
        self.filaments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filaments.is_empty()
    }

    pub fn stats(&self, sys: &CableSystem) -> Vec<MeshStats> {
        self.conductors
            .iter()
            .map(|cm| {
                let fs = &self.filaments[cm.offset..cm.offset + cm.len()];
                let area: f64 = fs.iter().map(|f| f.area).sum();
                let fold = |g: fn(&Filament) -> f64, init: f64, op: fn(f64, f64) -> f64| fs.iter().map(g).fold(init, op);
                MeshStats {
                    conductor: cm.conductor,
                    filaments: cm.len(),
                    rings: cm.rings(),
                    sectors: cm.sectors,
                    area_relative_error: (area / sys.conductors[cm.conductor].area() - 1.0).abs(),
                    max_radial_m: fold(|f| f.radial, 0.0, f64::max),
                    max_tangential_m: fold(|f| f.tangential, 0.0, f64::max),
                    min_radial_m: fold(|f| f.radial, f64::INFINITY, f64::min),
                }
            })
            .collect()
    }
}

pub fn skin_depth(cond: &ConductorSpec, frequency_hz: f64) -> f64 {
    (2.0 / (2.0 * PI * frequency_hz * cond.mu() * cond.sigma)).sqrt()
}

/// Cell widths from one surface inward over `length`, starting at `first`
/// and growing geometrically up to `cap`.  A short last cell is merged.
fn one_sided(length: f64, first: f64, growth: f64, cap: f64) -> Vec<f64> {
    let mut cells = Vec::new();
    let mut covered = 0.0;
    let mut h = first.min(cap);
    while covered + h < length * (1.0 - 1e-12) {
        cells.push(h);
        covered += h;
        h = (h * growth).min(cap);
    }
    let rest = length - covered;
    match cells.last_mut() {
        Some(last) if rest < 0.5 * *last => *last += rest,
        _ => cells.push(rest),
    }
    cells
}

/// Ring edges for [inner, outer]; both surfaces are refined for a tube, only
/// the outer one for a solid round.
pub fn radial_edges(inner: f64, outer: f64, first: f64, growth: f64, cap: f64) -> Vec<f64> {
    if inner > 0.0 {
        let half = one_sided((outer - inner) / 2.0, first, growth, cap);
        let mut edges = vec![inner];
        let mut r = inner;
        for h in &half {
            r += h;
            edges.push(r);
        }
        edges.pop();
        edges.push(0.5 * (inner + outer));
        for h in half.iter().rev().take(half.len() - 1) {
            let last = *edges.last().unwrap();
            edges.push(last + h);
        }
        edges.push(outer);
        edges
    } else {
        let cells = one_sided(outer, first, growth, cap);
        let mut edges = vec![outer];
        let mut r = outer;
        for h in &cells[..cells.len() - 1] {
            r -= h;
            edges.push(r);
        }
        edges.push(0.0);
        edges.reverse();
        edges
    }
}

fn ring_return(sys: &CableSystem, ratio: f64) -> Option<usize> {
    let r = sys.reference;
    let tube = &sys.conductors[r];
    let inner = tube.inner_radius()?;
    let others: Vec<&ConductorSpec> = sys.conductors.iter().enumerate().filter(|&(i, _)| i != r).map(|(_, c)| c).collect();
    let extent = others
        .iter()
        .map(|c| c.distance_to(tube) + c.outer_radius)
        .fold(0.0, f64::max);
    (others.iter().all(|c| tube.encloses(c)) && inner > ratio * extent).then_some(r)
}

/// Builds a mesh resolving the skin depth at `frequency_hz`.
pub fn build_mesh(sys: &CableSystem, frequency_hz: f64, opts: &MeshOptions) -> Result<FilamentMesh, OracleError> {
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(OracleError::BadFrequency(frequency_hz));
    }
    for (i, c) in sys.conductors.iter().enumerate() {
        if c.mu_r != sys.medium.mu_r {
            return Err(OracleError::Magnetic(i));
        }
    }
    let ring = ring_return(sys, opts.ring_return_ratio);
    let mut filaments = Vec::new();
    let mut conductors = Vec::new();
    for (p, c) in sys.conductors.iter().enumerate() {
        if Some(p) == ring {
            continue;
        }
        let delta = skin_depth(c, frequency_hz);
        let a = c.outer_radius;
        let inner = c.inner_radius().unwrap_or(0.0);
        let thickness = a - inner;
        let cap = opts.max_cell_fraction * a;
        let first = (opts.surface_fraction * delta).min(opts.max_cell_fraction * thickness);
        let edges = radial_edges(inner, a, first, opts.growth, cap);
        let wanted = (2.0 * PI * a / (opts.arc_skin_depths * delta)).ceil() as usize;
        let sectors = wanted.max(opts.min_sectors).div_ceil(4) * 4;
        let center = C64::new(c.center_x, c.center_y);
        let cm = ConductorMesh {
            conductor: p,
            center,
            edges,
            sectors,
            offset: filaments.len(),
        };
        let sinc = {
            let x = PI / sectors as f64;
            x.sin() / x
        };
        for w in cm.edges.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            let rc = 2.0 / 3.0 * (r1.powi(3) - r0.powi(3)) / (r1 * r1 - r0 * r0) * sinc;
            let area = PI * (r1 * r1 - r0 * r0) / sectors as f64;
            for s in 0..sectors {
                let angle = 2.0 * PI * s as f64 / sectors as f64;
                filaments.push(Filament {
                    center: center + C64::from_polar(rc, angle),
                    angle,
                    radial: r1 - r0,
                    tangential: area / (r1 - r0),
                    area,
                    conductor: p,
                });
            }
        }
        conductors.push(cm);
    }
    let mut cross = 0usize;
    for (i, a) in conductors.iter().enumerate() {
        for b in &conductors[i + 1..] {
            cross += a.len() * b.len();
        }
    }
    let bytes = cross * std::mem::size_of::<f64>();
    if bytes > opts.memory_budget {
        return Err(OracleError::Budget {
            filaments: filaments.len(),
            bytes,
            budget: opts.memory_budget,
        });
    }
    Ok(FilamentMesh {
        filaments,
        conductors,
        ring_return: ring,
        design_frequency_hz: frequency_hz,
    })
}
