//! Brute-force filament (conductor partitioning) impedance, independent of the
//! surface operator and the harmonic Green's matrix.
//!
//! Each conductor is cut into ring sectors carrying uniform current.  Partial
//! impedances are R = 1/(σA) on the diagonal and -jωμ/2π times the mean of
//! ln|r - r'| over the two cross-sections; neighbouring cells use the exact
//! rectangle integral, distant ones the centre distance.  The per-conductor
//! blocks are block-circulant in the sector index, which gives an exact
//! FFT-based block preconditioner for GMRES.

pub mod mesh;
pub mod rect;

pub use mesh::{build_mesh, FilamentMesh, MeshOptions, MeshStats};

use crate::model::CableSystem;
use crate::solver::ground::tube_impedance;
use crate::solver::{map_frequencies, reduce_to_reference, Execution};
use crate::specfun::{SpecfunError, C64};
use mesh::Filament;
use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

type FftPlan = Arc<dyn Fft<f64>>;

/// Pairs closer than this many cell sizes get the exact rectangle integral.
pub const NEAR_FACTOR: f64 = 4.0;
pub const GMRES_TOLERANCE: f64 = 1e-10;
const GMRES_RESTART: usize = 60;
const GMRES_MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("frequency must be positive and finite, got {0} Hz")]
    BadFrequency(f64),
    #[error("conductor {0} is magnetic; the filament oracle assumes the medium permeability everywhere")]
    Magnetic(usize),
    #[error("mesh needs {filaments} filaments and {bytes} bytes of coupling storage, over the {budget}-byte budget")]
    Budget { filaments: usize, bytes: usize, budget: usize },
    #[error("GMRES stalled at relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("bundle reduction is singular at {0} Hz")]
    Singular(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

fn near(a: &Filament, b: &Filament) -> bool {
    (a.center - b.center).norm() < NEAR_FACTOR * a.size().max(b.size())
}

fn rotate(v: C64, angle: f64) -> (f64, f64) {
    let r = v * C64::from_polar(1.0, -angle);
    (r.re, r.im)
}

/// Mean log distance between two cells of the same conductor (centre `c`).
fn same_conductor_kernel(a: &Filament, b: &Filament, c: C64) -> f64 {
    if !near(a, b) {
        return (a.center - b.center).norm().ln();
    }
    let mut d = b.angle - a.angle;
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    let mean = a.angle + d / 2.0;
    rect::mean_log_distance(
        rotate(a.center - c, mean),
        (a.radial, a.tangential),
        rotate(b.center - c, mean),
        (b.radial, b.tangential),
    )
}

/// Cells on different conductors; orientations are matched modulo π so that
/// facing cells share a frame.
fn cross_kernel(a: &Filament, b: &Filament) -> f64 {
    if !near(a, b) {
        return (a.center - b.center).norm().ln();
    }
    let mut d = (b.angle - a.angle).rem_euclid(PI);
    if d > PI / 2.0 {
        d -= PI;
    }
    let mean = a.angle + d / 2.0;
    rect::mean_log_distance(
        rotate(a.center, mean),
        (a.radial, a.tangential),
        rotate(b.center, mean),
        (b.radial, b.tangential),
    )
}

/// Spectrum of one conductor's block-circulant self coupling:
/// `spectrum[(ri * rings + rj) * sectors + k]`.
struct SelfBlock {
    rings: usize,
    sectors: usize,
    spectrum: Vec<C64>,
    resistance: Vec<f64>,
}

/// Frequency-independent kernels of a mesh.
pub struct FilamentOperator {
    pub system: CableSystem,
    pub mesh: FilamentMesh,
    self_blocks: Vec<SelfBlock>,
    /// ln-kernel blocks for conductor-mesh pairs (i < j), row-major n_i x n_j.
    cross: Vec<((usize, usize), Vec<f64>)>,
    fft: Vec<(FftPlan, FftPlan)>,
}

impl std::fmt::Debug for FilamentOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilamentOperator")
            .field("filaments", &self.mesh.len())
            .field("conductors", &self.mesh.conductors.len())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilamentResult {
    pub frequency_hz: f64,
    /// All conductors, free-space logarithms referred to 1 m.
    pub z_full: DMatrix<C64>,
    /// Reduced to the system's reference conductor.
    pub z: DMatrix<C64>,
    pub conductors: Vec<usize>,
    pub reference: usize,
    pub filaments: usize,
    pub gmres_iterations: usize,
}

impl FilamentResult {
    pub fn r(&self) -> DMatrix<f64> {
        self.z.map(|v| v.re)
    }

    pub fn l(&self) -> DMatrix<f64> {
        let w = 2.0 * PI * self.frequency_hz;
        self.z.map(|v| v.im / w)
    }
}

impl FilamentOperator {
    pub fn new(sys: &CableSystem, mesh: FilamentMesh) -> Self {
        let mut planner = FftPlanner::new();
        let fs = &mesh.filaments;
        let mut self_blocks = Vec::new();
        let mut fft = Vec::new();
        for cm in &mesh.conductors {
            let (nr, nt) = (cm.rings(), cm.sectors);
            let forward = planner.plan_fft_forward(nt);
            let mut spectrum = vec![C64::new(0.0, 0.0); nr * nr * nt];
            for ri in 0..nr {
                let a = &fs[cm.index(ri, 0)];
                for rj in 0..nr {
                    let row = &mut spectrum[(ri * nr + rj) * nt..(ri * nr + rj + 1) * nt];
                    // y(t) = Σ_d c(d) x(t + d) is a convolution with c(-d).
                    for (d, v) in row.iter_mut().enumerate() {
                        let b = &fs[cm.index(rj, (nt - d) % nt)];
                        *v = C64::new(same_conductor_kernel(a, b, cm.center), 0.0);
                    }
                    forward.process(row);
                }
            }
            let resistance = (0..nr)
                .map(|r| 1.0 / (sys.conductors[cm.conductor].sigma * fs[cm.index(r, 0)].area))
                .collect();
            self_blocks.push(SelfBlock {
                rings: nr,
                sectors: nt,
                spectrum,
                resistance,
            });
            fft.push((forward, planner.plan_fft_inverse(nt)));
        }
        let mut cross = Vec::new();
        for (i, a) in mesh.conductors.iter().enumerate() {
            for (j, b) in mesh.conductors.iter().enumerate().skip(i + 1) {
                let mut block = Vec::with_capacity(a.len() * b.len());
                for fa in &fs[a.offset..a.offset + a.len()] {
                    for fb in &fs[b.offset..b.offset + b.len()] {
                        block.push(cross_kernel(fa, fb));
                    }
                }
                cross.push(((i, j), block));
            }
        }
        FilamentOperator {
            system: sys.clone(),
            mesh,
            self_blocks,
            cross,
            fft,
        }
    }

    fn ring_fft(&self, p: usize, x: &[C64], inverse: bool) -> Vec<C64> {
        let (nr, nt) = (self.self_blocks[p].rings, self.self_blocks[p].sectors);
        let mut out = x.to_vec();
        let plan = if inverse { &self.fft[p].1 } else { &self.fft[p].0 };
        for r in 0..nr {
            plan.process(&mut out[r * nt..(r + 1) * nt]);
        }
        if inverse {
            let s = 1.0 / nt as f64;
            out.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// Applies (per Fourier mode) either the self block or its inverse.
    fn self_apply(&self, p: usize, x: &[C64], kappa: C64, invert: bool) -> Vec<C64> {
        let sb = &self.self_blocks[p];
        let (nr, nt) = (sb.rings, sb.sectors);
        let xf = self.ring_fft(p, x, false);
        let mut yf = vec![C64::new(0.0, 0.0); nr * nt];
        let mut m = DMatrix::<C64>::zeros(nr, nr);
        for k in 0..nt {
            for ri in 0..nr {
                for rj in 0..nr {
                    m[(ri, rj)] = kappa * sb.spectrum[(ri * nr + rj) * nt + k];
                }
                m[(ri, ri)] += sb.resistance[ri];
            }
            let xk = nalgebra::DVector::from_fn(nr, |r, _| xf[r * nt + k]);
            let yk = if invert {
                m.clone().lu().solve(&xk).unwrap_or_else(|| nalgebra::DVector::from_element(nr, C64::new(f64::NAN, 0.0)))
            } else {
                &m * xk
            };
            for r in 0..nr {
                yf[r * nt + k] = yk[r];
            }
        }
        self.ring_fft(p, &yf, true)
    }

    fn matvec(&self, x: &[C64], kappa: C64) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (p, cm) in self.mesh.conductors.iter().enumerate() {
            let r = cm.offset..cm.offset + cm.len();
            let v = self.self_apply(p, &x[r.clone()], kappa, false);
            y[r].copy_from_slice(&v);
        }
        for ((i, j), block) in &self.cross {
            let (a, b) = (&self.mesh.conductors[*i], &self.mesh.conductors[*j]);
            let (na, nb) = (a.len(), b.len());
            let xa = &x[a.offset..a.offset + na];
            let xb = &x[b.offset..b.offset + nb];
            let mut yb = vec![C64::new(0.0, 0.0); nb];
            for (ia, row) in block.chunks_exact(nb).enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (l, xv) in row.iter().zip(xb) {
                    acc += xv * *l;
                }
                y[a.offset + ia] += kappa * acc;
                let xv = xa[ia];
                for (l, yv) in row.iter().zip(yb.iter_mut()) {
                    *yv += xv * *l;
                }
            }
            for (k, v) in yb.into_iter().enumerate() {
                y[b.offset + k] += kappa * v;
            }
        }
        y
    }

    fn precondition(&self, x: &[C64], kappa: C64) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (p, cm) in self.mesh.conductors.iter().enumerate() {
            let r = cm.offset..cm.offset + cm.len();
            let v = self.self_apply(p, &x[r.clone()], kappa, true);
            y[r].copy_from_slice(&v);
        }
        y
    }

    /// Impedance matrix at one frequency.
    pub fn impedance(&self, frequency_hz: f64) -> Result<FilamentResult, OracleError> {
        if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
            return Err(OracleError::BadFrequency(frequency_hz));
        }
        let omega = 2.0 * PI * frequency_hz;
        let mu = self.system.medium.mu();
        let kappa = C64::new(0.0, -omega * mu / (2.0 * PI));
        let n = self.mesh.len();
        let meshed = &self.mesh.conductors;
        let mut w = DMatrix::<C64>::zeros(meshed.len(), meshed.len());
        let mut iterations = 0;
        for (q, cm) in meshed.iter().enumerate() {
            let mut b = vec![C64::new(0.0, 0.0); n];
            b[cm.offset..cm.offset + cm.len()].iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
            let (x, it) = gmres(|v| self.matvec(v, kappa), |v| self.precondition(v, kappa), &b)?;
            iterations += it;
            for (p, cp) in meshed.iter().enumerate() {
                w[(p, q)] = x[cp.offset..cp.offset + cp.len()].iter().sum();
            }
        }
        let zc = w.try_inverse().ok_or(OracleError::Singular(frequency_hz))?;
        let total = self.system.len();
        let mut z_full = DMatrix::<C64>::zeros(total, total);
        for (p, cp) in meshed.iter().enumerate() {
            for (q, cq) in meshed.iter().enumerate() {
                z_full[(cp.conductor, cq.conductor)] = zc[(p, q)];
            }
        }
        if let Some(t) = self.mesh.ring_return {
            // A uniform ring of radius b sets a constant ln b potential
            // inside it; its own current flows on the inner surface.
            let tube = &self.system.conductors[t];
            let b = tube.inner_radius().expect("ring return is a tube");
            let coupling = kappa * b.ln();
            for cp in meshed {
                z_full[(cp.conductor, t)] = coupling;
                z_full[(t, cp.conductor)] = coupling;
            }
            z_full[(t, t)] = coupling + tube_impedance(tube, omega)?.inner;
        }
        let reference = self.system.reference;
        Ok(FilamentResult {
            frequency_hz,
            z: reduce_to_reference(&z_full, reference),
            z_full,
            conductors: self.system.signal_conductors(),
            reference,
            filaments: n,
            gmres_iterations: iterations,
        })
    }

    pub fn sweep(&self, frequencies: &[f64], exec: Execution) -> Vec<Result<FilamentResult, OracleError>> {
        map_frequencies(frequencies, exec, |f| self.impedance(f))
    }
}

/// One-shot: mesh at `frequency_hz` with default options and solve there.
pub fn filament_impedance(sys: &CableSystem, frequency_hz: f64) -> Result<FilamentResult, OracleError> {
    let mesh = build_mesh(sys, frequency_hz, &MeshOptions::default())?;
    FilamentOperator::new(sys, mesh).impedance(frequency_hz)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES with right preconditioning; returns the solution and the
/// number of inner iterations.
fn gmres<A, M>(apply: A, precondition: M, b: &[C64]) -> Result<(Vec<C64>, usize), OracleError>
where
    A: Fn(&[C64]) -> Vec<C64>,
    M: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut total = 0;
    let mut residual = 1.0;
    while total < GMRES_MAX_ITERATIONS {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        residual = beta / bnorm;
        if residual < GMRES_TOLERANCE {
            return Ok((x, total));
        }
        let m = GMRES_RESTART;
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut z: Vec<Vec<C64>> = Vec::new();
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && total < GMRES_MAX_ITERATIONS {
            let zk = precondition(&v[k]);
            let mut wv = apply(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &wv);
                h[i][k] = hij;
                wv.iter_mut().zip(vi).for_each(|(w, vv)| *w -= hij * vv);
            }
            let hn = norm(&wv);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            cs[k] = a / den;
            sn[k] = bb / den;
            h[k][k] = C64::new(den, 0.0);
            h[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            total += 1;
            k += 1;
            residual = g[k].norm() / bnorm;
            if residual < GMRES_TOLERANCE * 0.1 || hn == 0.0 {
                break;
            }
            v.push(wv.iter().map(|c| c / hn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, zj) in z.iter().enumerate().take(k) {
            x.iter_mut().zip(zj).for_each(|(xv, zv)| *xv += y[j] * zv);
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let final_residual = norm(&r) / bnorm;
    if final_residual < GMRES_TOLERANCE {
        Ok((x, total))
    } else {
        Err(OracleError::NotConverged {
            iterations: total,
            residual: final_residual.max(residual),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConductorSpec, ReferencePolicy};

    #[test]
    fn dc_resistance_of_solid_round() {
        let a = 0.01;
        let sigma = 5.8e7;
        let sys = CableSystem::new(vec![ConductorSpec::solid(0.0, 0.0, a, sigma)], Default::default(), None, ReferencePolicy::auto_tube()).unwrap();
        let mesh = build_mesh(&sys, 0.01, &MeshOptions::default()).unwrap();
        let op = FilamentOperator::new(&sys, mesh);
        let r = op.impedance(0.01).unwrap();
        let tube = &sys.conductors[1];
        let expected = 1.0 / (sigma * PI * a * a) + 1.0 / (sigma * tube.area());
        assert!((r.z[(0, 0)].re / expected - 1.0).abs() < 1e-3, "{} vs {expected}", r.z[(0, 0)].re);
    }

    #[test]
    fn gmres_small_system() {
        let a = DMatrix::from_fn(5, 5, |i, j| if i == j { C64::new(4.0, 1.0) } else { C64::new(0.3 / (1.0 + (i + j) as f64), 0.1) });
        let b: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        let apply = |x: &[C64]| (&a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let (x, _) = gmres(apply, |v| v.to_vec(), &b).unwrap();
        let r = &a * nalgebra::DVector::from_column_slice(&x) - nalgebra::DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-9);
    }
}
