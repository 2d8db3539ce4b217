//! Moment-system assembly and solution, R/L extraction, sweeps.

pub mod ground;
pub mod modal;
pub mod shunt;

use crate::greens::{assemble_g, GreensError, GreensMatrix};
use crate::model::{CableSystem, GroundModel};
use crate::specfun::{SpecfunError, C64};
use crate::surfop::{assemble_ys, HarmonicLayout, Side};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Condition estimate above which one pass of iterative refinement is made.
pub const REFINEMENT_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("frequency must be positive and finite, got {0} Hz")]
    BadFrequency(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error("singular system at {frequency_hz} Hz (condition estimate {condition:e})")]
    Singular { frequency_hz: f64, condition: f64 },
}

/// Selection of the zeroth harmonics: U^T x gives total conductor currents.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentMap {
    pub u: DMatrix<f64>,
}

impl CurrentMap {
    pub fn new(layout: &HarmonicLayout) -> Self {
        let p = layout.blocks.len();
        let mut u = DMatrix::zeros(layout.size, p);
        for (i, b) in layout.blocks.iter().enumerate() {
            u[(layout.index(i, Side::Outer, 0).unwrap(), i)] = 1.0;
            if b.hollow {
                u[(layout.index(i, Side::Inner, 0).unwrap(), i)] = 1.0;
            }
        }
        CurrentMap { u }
    }

    pub fn complex(&self) -> DMatrix<C64> {
        self.u.map(|x| C64::new(x, 0.0))
    }
}

/// Z'_ij = Z_ij - Z_ir - Z_rj + Z_rr with row/column r removed.
pub fn reduce_to_reference(z: &DMatrix<C64>, r: usize) -> DMatrix<C64> {
    let keep: Vec<usize> = (0..z.nrows()).filter(|&i| i != r).collect();
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| {
        let (a, b) = (keep[i], keep[j]);
        z[(a, b)] - z[(a, r)] - z[(r, b)] + z[(r, r)]
    })
}

/// Per-unit-length result at one frequency.
///
/// `z_full` is the P×P matrix of all conductors with free-space logarithms
/// referred to 1 m; `z`, `r` and `l` are reduced to the resolved return
/// conductor and indexed by `conductors`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulResult {
    pub frequency_hz: f64,
    pub z_full: DMatrix<C64>,
    pub z: DMatrix<C64>,
    /// Ω/m
    pub r: DMatrix<f64>,
    /// H/m
    pub l: DMatrix<f64>,
    pub conductors: Vec<usize>,
    pub reference: usize,
    pub orders: Vec<u32>,
    pub ground: GroundModel,
    pub condition: f64,
}

impl PulResult {
    pub fn from_full(
        frequency_hz: f64,
        z_full: DMatrix<C64>,
        reference: usize,
        orders: Vec<u32>,
        condition: f64,
    ) -> Self {
        let z = reduce_to_reference(&z_full, reference);
        Self::with_reduced(frequency_hz, z_full, z, reference, orders, condition, GroundModel::None)
    }

    fn with_reduced(
        frequency_hz: f64,
        z_full: DMatrix<C64>,
        z: DMatrix<C64>,
        reference: usize,
        orders: Vec<u32>,
        condition: f64,
        ground: GroundModel,
    ) -> Self {
        let omega = 2.0 * PI * frequency_hz;
        PulResult {
            frequency_hz,
            r: z.map(|v| v.re),
            l: z.map(|v| v.im / omega),
            conductors: (0..z_full.nrows()).filter(|&i| i != reference).collect(),
            z_full,
            z,
            reference,
            orders,
            ground,
            condition,
        }
    }

    /// Replace the reduced matrix (e.g. by a ground-corrected one).
    pub fn with_impedance(&self, z: DMatrix<C64>, ground: GroundModel) -> Self {
        Self::with_reduced(
            self.frequency_hz,
            self.z_full.clone(),
            z,
            self.reference,
            self.orders.clone(),
            self.condition,
            ground,
        )
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves the moment system at `frequency_hz`:
/// Z = [U^T (1 - jωμ Y_s G)^{-1} Y_s U]^{-1}.
pub fn solve_pul(sys: &CableSystem, layout: &HarmonicLayout, g: &GreensMatrix, frequency_hz: f64) -> Result<PulResult, SolveError> {
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(SolveError::BadFrequency(frequency_hz));
    }
    let omega = 2.0 * PI * frequency_hz;
    let ys = assemble_ys(sys, layout, omega)?;
    let u = CurrentMap::new(layout).complex();
    let mut a = ys.apply(&g.matrix) * C64::new(0.0, -omega * sys.medium.mu());
    for i in 0..layout.size {
        a[(i, i)] += C64::new(1.0, 0.0);
    }
    let rhs = ys.apply(&u);
    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or(SolveError::Singular {
        frequency_hz,
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&a) * one_norm(&inverse);
    let mut x = &inverse * &rhs;
    if condition > REFINEMENT_CONDITION {
        let residual = &rhs - &a * &x;
        x += &inverse * residual;
    }
    let w = u.transpose() * x;
    let z_full = w.try_inverse().ok_or(SolveError::Singular { frequency_hz, condition })?;
    if !z_full.iter().all(|v| v.is_finite()) {
        return Err(SolveError::Singular { frequency_hz, condition });
    }
    let orders = layout.blocks.iter().map(|b| b.order).collect();
    Ok(PulResult::from_full(frequency_hz, z_full, sys.reference, orders, condition))
}

/// How a sweep distributes its frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over frequencies; falls back to sequential when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over the frequencies, preserving input order.
pub fn map_frequencies<T, F>(freqs: &[f64], exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            freqs.par_iter().map(|&x| f(x)).collect()
        }
        _ => freqs.iter().map(|&x| f(x)).collect(),
    }
}

/// A system with its Green's matrix assembled once for all frequencies.
#[derive(Debug, Clone)]
pub struct MomSystem {
    pub system: CableSystem,
    pub layout: HarmonicLayout,
    pub g: GreensMatrix,
    pub g_assembly: Duration,
}

impl MomSystem {
    pub fn new(sys: &CableSystem) -> Result<Self, SolveError> {
        let start = Instant::now();
        let layout = HarmonicLayout::new(sys);
        let g = assemble_g(sys, &layout)?;
        Ok(MomSystem {
            system: sys.clone(),
            layout,
            g,
            g_assembly: start.elapsed(),
        })
    }

    pub fn solve(&self, frequency_hz: f64) -> Result<PulResult, SolveError> {
        solve_pul(&self.system, &self.layout, &self.g, frequency_hz)
    }

    /// Independent per-frequency solves; failures are collected, not fatal.
    pub fn sweep(&self, frequencies: &[f64], exec: Execution) -> Vec<Result<PulResult, SolveError>> {
        map_frequencies(frequencies, exec, |f| self.solve(f))
    }
}
