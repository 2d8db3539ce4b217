//! Modal decomposition of Z·Y and propagation velocities tracked over frequency.

use crate::specfun::C64;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Relative eigen-residual above which a pair is reported as defective.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// A mode assignment with a weaker normalised overlap is flagged ambiguous.
pub const AMBIGUOUS_OVERLAP: f64 = 0.5;
/// Assignments up to this size are matched exhaustively.
const BRUTE_FORCE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModalError {
    #[error("Z is {z}x{z} but Y is {y}x{y}")]
    Dimension { z: usize, y: usize },
    #[error("frequency grid has {freqs} points but {z} Z and {y} Y matrices were given")]
    Grid { freqs: usize, z: usize, y: usize },
    #[error("eigen-decomposition of ZY did not converge at {0} Hz")]
    NoConvergence(f64),
    #[error("defective eigenpair {mode} at {frequency_hz} Hz (relative residual {residual:e})")]
    Defective { frequency_hz: f64, mode: usize, residual: f64 },
}

/// Modes at one frequency. Column i of `vectors` is the unit eigenvector of
/// ZY for `lambda[i]`; gamma = sqrt(lambda) with Re gamma >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalPoint {
    pub frequency_hz: f64,
    pub lambda: Vec<C64>,
    pub gamma: Vec<C64>,
    /// m/s
    pub velocity: Vec<f64>,
    /// Np/m
    pub attenuation: Vec<f64>,
    pub vectors: DMatrix<C64>,
    /// Smallest overlap with the previous frequency's matched mode (1 at the
    /// first point).
    pub min_overlap: f64,
    pub ambiguous: bool,
}

impl ModalPoint {
    fn permuted(&self, perm: &[usize]) -> ModalPoint {
        let n = perm.len();
        ModalPoint {
            frequency_hz: self.frequency_hz,
            lambda: perm.iter().map(|&j| self.lambda[j]).collect(),
            gamma: perm.iter().map(|&j| self.gamma[j]).collect(),
            velocity: perm.iter().map(|&j| self.velocity[j]).collect(),
            attenuation: perm.iter().map(|&j| self.attenuation[j]).collect(),
            vectors: DMatrix::from_fn(n, n, |r, c| self.vectors[(r, perm[c])]),
            min_overlap: self.min_overlap,
            ambiguous: self.ambiguous,
        }
    }
}

/// Principal root, already with Re >= 0.
fn propagation(lambda: C64) -> C64 {
    lambda.sqrt()
}

/// Eigenvector for a known eigenvalue by shifted inverse iteration.
fn eigenvector(a: &DMatrix<C64>, lambda: C64) -> Option<nalgebra::DVector<C64>> {
    let n = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let shift = lambda + C64::new(scale * 1e-10, scale * 1e-10);
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut x = nalgebra::DVector::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    for _ in 0..3 {
        x = lu.solve(&x)?;
        let norm = x.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        x /= C64::new(norm, 0.0);
    }
    // Fix the phase so the largest component is real positive.
    let (imax, _) = x.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
    let phase = x[imax] / x[imax].norm();
    Some(x / phase)
}

/// Eigen-decomposition of Z·Y at angular frequency `omega`, modes unordered.
pub fn decompose(z: &DMatrix<C64>, y: &DMatrix<C64>, omega: f64) -> Result<ModalPoint, ModalError> {
    if z.nrows() != y.nrows() || !z.is_square() || !y.is_square() {
        return Err(ModalError::Dimension { z: z.nrows(), y: y.nrows() });
    }
    let frequency_hz = omega / (2.0 * PI);
    let a = z * y;
    let n = a.nrows();
    let schur = a
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or(ModalError::NoConvergence(frequency_hz))?;
    let (_, t) = schur.unpack();
    let lambda: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut vectors = DMatrix::zeros(n, n);
    for (i, &l) in lambda.iter().enumerate() {
        let v = eigenvector(&a, l).ok_or(ModalError::Defective {
            frequency_hz,
            mode: i,
            residual: f64::INFINITY,
        })?;
        let residual = (&a * &v - &v * l).norm() / scale;
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(ModalError::Defective { frequency_hz, mode: i, residual });
        }
        vectors.set_column(i, &v);
    }
    let gamma: Vec<C64> = lambda.iter().map(|&l| propagation(l)).collect();
    Ok(ModalPoint {
        frequency_hz,
        velocity: gamma.iter().map(|g| omega / g.im).collect(),
        attenuation: gamma.iter().map(|g| g.re).collect(),
        lambda,
        gamma,
        vectors,
        min_overlap: 1.0,
        ambiguous: false,
    })
}

fn overlap_matrix(prev: &DMatrix<C64>, next: &DMatrix<C64>) -> DMatrix<f64> {
    let n = prev.ncols();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (prev.column(i), next.column(j));
        a.dotc(&b).norm() / (a.norm() * b.norm())
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// perm[i] = column of `next` assigned to previous mode i, maximising the
/// summed overlap.
fn assign(overlap: &DMatrix<f64>) -> Vec<usize> {
    let n = overlap.nrows();
    if n <= BRUTE_FORCE_LIMIT {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for p in permutations(n) {
            let s: f64 = p.iter().enumerate().map(|(i, &j)| overlap[(i, j)]).sum();
            if s > best.0 {
                best = (s, p);
            }
        }
        best.1
    } else {
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        pairs.sort_by(|a, b| overlap[*b].total_cmp(&overlap[*a]).then(a.cmp(b)));
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for (i, j) in pairs {
            if perm[i] == usize::MAX && !used[j] {
                perm[i] = j;
                used[j] = true;
            }
        }
        perm
    }
}

/// Modes at each frequency, identity tracked by eigenvector continuity.
///
/// Frequencies are processed in ascending order whatever the input order; the
/// lowest-frequency modes are numbered by descending velocity. Output follows
/// the input order.
pub fn modal_velocities(frequencies_hz: &[f64], z: &[DMatrix<C64>], y: &[DMatrix<C64>]) -> Result<Vec<ModalPoint>, ModalError> {
    if frequencies_hz.len() != z.len() || z.len() != y.len() {
        return Err(ModalError::Grid {
            freqs: frequencies_hz.len(),
            z: z.len(),
            y: y.len(),
        });
    }
    let mut order: Vec<usize> = (0..frequencies_hz.len()).collect();
    order.sort_by(|&a, &b| frequencies_hz[a].total_cmp(&frequencies_hz[b]).then(a.cmp(&b)));
    let mut out: Vec<Option<ModalPoint>> = vec![None; frequencies_hz.len()];
    let mut prev: Option<DMatrix<C64>> = None;
    for &k in &order {
        let point = decompose(&z[k], &y[k], 2.0 * PI * frequencies_hz[k])?;
        let tracked = match &prev {
            None => {
                let mut perm: Vec<usize> = (0..point.lambda.len()).collect();
                perm.sort_by(|&a, &b| point.velocity[b].total_cmp(&point.velocity[a]).then(a.cmp(&b)));
                point.permuted(&perm)
            }
            Some(pv) => {
                let ov = overlap_matrix(pv, &point.vectors);
                let perm = assign(&ov);
                let min_overlap = perm.iter().enumerate().map(|(i, &j)| ov[(i, j)]).fold(1.0, f64::min);
                let mut p = point.permuted(&perm);
                p.min_overlap = min_overlap;
                p.ambiguous = min_overlap < AMBIGUOUS_OVERLAP;
                p
            }
        };
        prev = Some(tracked.vectors.clone());
        out[k] = Some(tracked);
    }
    Ok(out.into_iter().map(|p| p.expect("every frequency visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_system() {
        let w = 2.0 * PI * 1e3;
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, w * 1e-6), C64::new(0.0, w * 4e-6)]));
        let y = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, w * 1e-10), C64::new(0.0, w * 1e-10)]));
        let p = modal_velocities(&[1e3], &[z], &[y]).unwrap();
        let v = &p[0].velocity;
        assert!((v[0] - 1.0 / (1e-16f64).sqrt()).abs() / v[0] < 1e-10);
        assert!((v[1] - 1.0 / (4e-16f64).sqrt()).abs() / v[1] < 1e-10);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn greedy_assignment_matches_identity() {
        let ov = DMatrix::from_fn(10, 10, |i, j| if i == j { 0.9 } else { 0.1 });
        assert_eq!(assign(&ov), (0..10).collect::<Vec<_>>());
    }
}
