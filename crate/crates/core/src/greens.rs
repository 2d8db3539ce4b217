//! Harmonic-to-harmonic coupling through the 2-D free-space Green's function
//! g(r, r') = ln|r - r'| / 2π.
//!
//! Entry (p,q,m,n) is (1/4π²) ∬ g(r_p(θ), r_q(θ')) e^{jnθ'} e^{-jmθ} dθ dθ'.
//! Closed forms come from ln|r - r'| = ln ρ> - Σ_k (1/k)(ρ</ρ>)^k cos k(φ - φ')
//! combined with the binomial expansion of the offset between circle centres.
//! The kernel is real but the offset D enters as a complex number, so entries
//! are complex unless all centres lie on the real axis.

use crate::model::CableSystem;
use crate::quad::{self, QuadratureError};
use crate::specfun::C64;
use crate::surfop::{Circle, HarmonicLayout};
use nalgebra::DMatrix;
use std::f64::consts::PI;

const INV_2PI: f64 = 1.0 / (2.0 * PI);

/// Relative slack when classifying touching / nested / concentric circles.
const GEOMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GreensError {
    #[error("contours intersect: centres {0} and {1}, radii {2} and {3}")]
    Overlap(C64, C64, f64, f64),
    #[error("distinct concentric contours with equal radius {0}")]
    CoincidentContours(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Binomial coefficients C(k, i) for k up to a fixed maximum.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<f64>>,
}

impl Binomials {
    pub fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max + 1);
        for k in 0..=max {
            let mut row = vec![1.0; k + 1];
            for i in 1..k {
                row[i] = rows[k - 1][i - 1] + rows[k - 1][i];
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.rows[k][i]
    }

    pub fn max(&self) -> usize {
        self.rows.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Relation {
    Concentric,
    External,
    /// Test contour inside the source circle.
    TestInside,
    /// Source contour inside the test circle.
    SourceInside,
}

fn classify(p: &Circle, q: &Circle) -> Result<Relation, GreensError> {
    let d = (p.center - q.center).norm();
    let scale = p.radius.max(q.radius);
    let slack = GEOMETRY_TOLERANCE * scale;
    if d <= slack {
        return Ok(Relation::Concentric);
    }
    if d >= p.radius + q.radius - slack {
        Ok(Relation::External)
    } else if d + p.radius <= q.radius + slack {
        Ok(Relation::TestInside)
    } else if d + q.radius <= p.radius + slack {
        Ok(Relation::SourceInside)
    } else {
        Err(GreensError::Overlap(p.center, q.center, p.radius, q.radius))
    }
}

/// Closed-form entry for test contour `p`, source contour `q`.
/// `same` marks the self term (p and q are the same contour).
pub fn greens_entry(p: &Circle, q: &Circle, m: i32, n: i32, same: bool, binom: &Binomials) -> Result<C64, GreensError> {
    let zero = C64::new(0.0, 0.0);
    let real = |x: f64| C64::new(x, 0.0);
    match classify(p, q)? {
        Relation::Concentric => {
            if !same && (p.radius - q.radius).abs() <= GEOMETRY_TOLERANCE * p.radius {
                return Err(GreensError::CoincidentContours(p.radius));
            }
            let (small, big) = (p.radius.min(q.radius), p.radius.max(q.radius));
            if m != n {
                Ok(zero)
            } else if n == 0 {
                Ok(real(big.ln() * INV_2PI))
            } else {
                let k = n.unsigned_abs() as i32;
                Ok(real(-(small / big).powi(k) / (4.0 * PI * k as f64)))
            }
        }
        Relation::External => {
            let d = p.center - q.center;
            if m == 0 && n == 0 {
                return Ok(real(d.norm().ln() * INV_2PI));
            }
            let (mm, nn, dd) = if m >= 0 && n <= 0 {
                (m as usize, (-n) as usize, d)
            } else if m <= 0 && n >= 0 {
                (-m as usize, n as usize, d.conj())
            } else {
                return Ok(zero);
            };
            let k = mm + nn;
            let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
            let v = (p.radius / dd).powi(mm as i32) * (q.radius / dd).powi(nn as i32)
                * (-sign * binom.get(k, mm) / (2.0 * k as f64) * INV_2PI);
            Ok(v)
        }
        Relation::TestInside => {
            let (b, s) = (q.radius, p.radius);
            let d = p.center - q.center;
            if m == 0 && n == 0 {
                return Ok(real(b.ln() * INV_2PI));
            }
            let (nn, mm, dd) = if n >= 1 && m >= 0 && m <= n {
                (n as usize, m as usize, d)
            } else if n <= -1 && m <= 0 && m >= n {
                ((-n) as usize, (-m) as usize, d.conj())
            } else {
                return Ok(zero);
            };
            Ok((dd / b).powi((nn - mm) as i32)
                * ((s / b).powi(mm as i32) * -binom.get(nn, mm) / (2.0 * nn as f64) * INV_2PI))
        }
        Relation::SourceInside => {
            let (b, s) = (p.radius, q.radius);
            let d = q.center - p.center;
            if m == 0 && n == 0 {
                return Ok(real(b.ln() * INV_2PI));
            }
            let (mm, nn, dd) = if m <= -1 && n <= 0 && n >= m {
                ((-m) as usize, (-n) as usize, d)
            } else if m >= 1 && n >= 0 && n <= m {
                (m as usize, n as usize, d.conj())
            } else {
                return Ok(zero);
            };
            Ok((dd / b).powi((mm - nn) as i32)
                * ((s / b).powi(nn as i32) * -binom.get(mm, nn) / (2.0 * mm as f64) * INV_2PI))
        }
    }
}

/// Adaptive-quadrature evaluation of the defining double integral (oracle for
/// [`greens_entry`]).  `tol` is an absolute tolerance on the entry.
pub fn greens_entry_quadrature(p: &Circle, q: &Circle, m: i32, n: i32, same: bool, tol: f64) -> Result<C64, GreensError> {
    let tol = tol.max(1e-15);
    let two_pi = 2.0 * PI;
    let scale = 1.0 / (4.0 * PI * PI) * INV_2PI;
    if same {
        // |r(θ) - r(θ')| = 2a|sin((θ'-θ)/2)|; the θ integral leaves 2π δ_mn.
        if m != n {
            return Ok(C64::new(0.0, 0.0));
        }
        let a = p.radius;
        let nf = n as f64;
        // Symmetric about φ = π, so integrate [0, π] and double; the sine
        // part vanishes.
        let v = quad::integrate(
            |phi| C64::new((2.0 * a * (0.5 * phi).sin()).ln() * (nf * phi).cos(), 0.0),
            0.0,
            PI,
            tol / (2.0 * two_pi * scale),
        )?;
        return Ok(v * 2.0 * two_pi * scale);
    }
    classify(p, q)?;
    let (mf, nf) = (m as f64, n as f64);
    let mut failure = None;
    let inner_tol = tol / (4.0 * two_pi * scale);
    let outer = quad::integrate(
        |theta| {
            let rp = p.center + C64::from_polar(p.radius, theta);
            let inner = quad::integrate(
                |tp| {
                    let rq = q.center + C64::from_polar(q.radius, tp);
                    C64::from_polar(1.0, nf * tp) * (rp - rq).norm().ln()
                },
                0.0,
                two_pi,
                inner_tol,
            );
            match inner {
                Ok(v) => v * C64::from_polar(1.0, -mf * theta),
                Err(e) => {
                    failure.get_or_insert(e);
                    C64::new(0.0, 0.0)
                }
            }
        },
        0.0,
        two_pi,
        tol / (2.0 * scale),
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(outer * scale)
}

/// Dense G for a layout; frequency independent.
#[derive(Debug, Clone)]
pub struct GreensMatrix {
    pub matrix: DMatrix<C64>,
    pub layout: HarmonicLayout,
}

pub fn assemble_g(sys: &CableSystem, layout: &HarmonicLayout) -> Result<GreensMatrix, GreensError> {
    let contours = layout.contours(&sys.conductors);
    let max_order = layout.blocks.iter().map(|b| b.order).max().unwrap_or(0) as usize;
    let binom = Binomials::new(2 * max_order + 2);
    let mut g = DMatrix::zeros(layout.size, layout.size);
    for (ip, cp) in contours.iter().enumerate() {
        for (iq, cq) in contours.iter().enumerate() {
            let (np, nq) = (cp.order as i32, cq.order as i32);
            for m in -np..=np {
                for n in -nq..=nq {
                    g[(cp.index(m), cq.index(n))] = greens_entry(&cp.circle, &cq.circle, m, n, ip == iq, &binom)?;
                }
            }
        }
    }
    Ok(GreensMatrix {
        matrix: g,
        layout: layout.clone(),
    })
}
