//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! gating failure.  Run with `cargo test -p cablepul --test acceptance`.

mod common;

use cablepul::greens::{greens_entry, greens_entry_quadrature, Binomials};
use cablepul::oracle::{build_mesh, FilamentOperator, MeshOptions};
use cablepul::solver::ground::{ground_analytic, pair_modes, solid_internal_impedance, tube_impedance, ProximityPipeline};
use cablepul::solver::modal::decompose;
use cablepul::solver::shunt::{system_shunt_y, CoaxialCable, DielectricLayer, ShuntSpec};
use cablepul::surfop::HarmonicLayout;
use cablepul::{CableSystem, ConductorSpec, Execution, Medium, MomSystem, ReferencePolicy, C0, C64, MU0};
use common::*;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::time::Instant;

mod tolerances {
    /// Table II values, Ω/km: loop (re, im) and common (re, im).
    pub const TABLE2_LOOP: (f64, f64) = (0.75, 11.64);
    pub const TABLE2_COMMON: (f64, f64) = (20.39, 142.68);
    pub const TABLE2_REL: f64 = 0.02;
    pub const TABLE2_SECONDS: f64 = 5.0;
    /// Published analytic-vs-combined loop differences, percent.
    pub const PROXIMITY_SHARE: (f64, f64) = (-26.92, 15.67);
    pub const PROXIMITY_SHARE_PP: f64 = 5.0;
    pub const TWO_WIRE_REL: f64 = 1e-6;
    pub const TUBE_REL: f64 = 1e-3;
    pub const FILAMENT_REL: f64 = 0.02;
    /// Largest change of the oracle's R and L when every cell is halved.
    pub const MESH_REFINEMENT_REL: f64 = 5e-3;
    pub const GREENS_REL: f64 = 1e-9;
    pub const RECIPROCITY_REL: f64 = 1e-12;
    pub const SYMMETRY_REL: f64 = 1e-10;
    pub const R_EIGEN_FLOOR: f64 = 1e-12;
    pub const G_ASSEMBLY_SECONDS: f64 = 5.0;
    pub const SOLVE_SECONDS: f64 = 0.5;
    pub const SWEEP_SECONDS: f64 = 60.0;
    pub const COAX_VELOCITY_REL: f64 = 5e-3;
}

use tolerances as tol;

struct Report {
    failures: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(id);
        }
    }

    fn advisory(&self, id: u32, name: &str, pass: bool, detail: String) {
        println!("{} [{id}] {name} (advisory): {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn table2(report: &mut Report) {
    let start = Instant::now();
    let sys = buried_pair(4);
    let parts = ProximityPipeline::new(&sys).unwrap().correct(1e4).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let (common, lp) = pair_modes(&parts.combined);
    let (_, lp_analytic) = pair_modes(&parts.analytic);
    let km = |z: C64| z * 1e3;
    let (common, lp, lp_analytic) = (km(common), km(lp), km(lp_analytic));
    let errs = [
        rel(lp.re, tol::TABLE2_LOOP.0),
        rel(lp.im, tol::TABLE2_LOOP.1),
        rel(common.re, tol::TABLE2_COMMON.0),
        rel(common.im, tol::TABLE2_COMMON.1),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    report.line(
        1,
        "buried pair at 10 kHz, N=4",
        worst <= tol::TABLE2_REL && elapsed <= tol::TABLE2_SECONDS,
        format!(
            "loop {:.5}+j{:.5}, common {:.4}+j{:.4} ohm/km, worst rel {:.3e} (tol {}), {:.3} s",
            lp.re, lp.im, common.re, common.im, worst, tol::TABLE2_REL, elapsed
        ),
    );
    let share = (
        100.0 * (lp_analytic.re - lp.re) / lp.re,
        100.0 * (lp_analytic.im - lp.im) / lp.im,
    );
    let dev = (share.0 - tol::PROXIMITY_SHARE.0).abs().max((share.1 - tol::PROXIMITY_SHARE.1).abs());
    report.line(
        2,
        "proximity share of loop impedance",
        dev <= tol::PROXIMITY_SHARE_PP && share.0 < 0.0 && share.1 > 0.0,
        format!("{:+.2}% / {:+.2}% vs {:+.2}% / {:+.2}%, max deviation {:.2} pp", share.0, share.1, tol::PROXIMITY_SHARE.0, tol::PROXIMITY_SHARE.1, dev),
    );
}

fn two_wire(report: &mut Report) {
    let (a, d, sigma) = (0.01, 0.05, 5.8e7);
    let wires = vec![ConductorSpec::solid(0.0, 0.0, a, sigma), ConductorSpec::solid(d, 0.0, a, sigma)];
    let sys = CableSystem::new(wires, Medium::default(), None, ReferencePolicy::Explicit(1)).unwrap();
    let mom = MomSystem::new(&sys).unwrap();
    let mut worst: f64 = 0.0;
    for f in [50.0, 1e4, 1e6] {
        let w = 2.0 * PI * f;
        let z = mom.solve(f).unwrap().z[(0, 0)];
        let zi = solid_internal_impedance(&sys.conductors[0], w).unwrap();
        let expected = 2.0 * zi + C64::new(0.0, w * MU0 / PI * (d / a).ln());
        worst = worst.max(crel(z, expected));
    }
    report.line(
        3,
        "two-wire loop, N=0, vs internal + external closed form",
        worst <= tol::TWO_WIRE_REL,
        format!("worst rel {worst:.3e} over 50 Hz, 10 kHz, 1 MHz (tol {:e})", tol::TWO_WIRE_REL),
    );
}

fn tube(report: &mut Report) {
    // Tube with a small solid return far away; removing the return's
    // internal impedance and both external logarithms leaves the tube's
    // outer-surface internal impedance.
    let (a, b, sigma) = (0.02, 0.016, 58e6);
    let (ar, d) = (0.005, 5.0);
    let conductors = vec![ConductorSpec::hollow(0.0, 0.0, a, b, sigma), ConductorSpec::solid(d, 0.0, ar, sigma)];
    let sys = CableSystem::new(conductors, Medium::default(), None, ReferencePolicy::Explicit(1)).unwrap();
    let mom = MomSystem::new(&sys).unwrap();
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..=60 {
        let f = 10f64.powf(k as f64 / 10.0);
        let w = 2.0 * PI * f;
        let z = mom.solve(f).unwrap().z[(0, 0)];
        let external = C64::new(0.0, w * MU0 / (2.0 * PI) * ((d / a).ln() + (d / ar).ln()));
        let ret = solid_internal_impedance(&sys.conductors[1], w).unwrap();
        let internal = z - external - ret;
        let expected = tube_impedance(&sys.conductors[0], w).unwrap().outer;
        let e = rel(internal.re, expected.re).max(rel(internal.im, expected.im));
        if e > worst {
            worst = e;
            at = f;
        }
    }
    report.line(
        4,
        "tube N=0 internal impedance vs Bessel tube formula",
        worst <= tol::TUBE_REL,
        format!("worst rel {worst:.3e} at {at:.3e} Hz over 1 Hz..1 MHz (tol {:e})", tol::TUBE_REL),
    );
}

fn filament(report: &mut Report) {
    let mom4 = MomSystem::new(&shells(4)).unwrap();
    let mom0 = MomSystem::new(&shells(0)).unwrap();
    let sys = shells(4);
    let mut worst: f64 = 0.0;
    let mut refine: f64 = 0.0;
    let mut rows = Vec::new();
    for f in [50.0, 1e3, 1e4] {
        let w = 2.0 * PI * f;
        let zm = positive_sequence(&mom4.solve(f).unwrap().z);
        let start = Instant::now();
        let coarse = {
            let mesh = build_mesh(&sys, f, &MeshOptions::default()).unwrap();
            FilamentOperator::new(&sys, mesh).impedance(f).unwrap()
        };
        let zf = positive_sequence(&coarse.z);
        let fine = {
            let mesh = build_mesh(&sys, f, &MeshOptions::default().refined()).unwrap();
            FilamentOperator::new(&sys, mesh).impedance(f).unwrap()
        };
        let zr = positive_sequence(&fine.z);
        let (er, el) = (rel(zm.re, zf.re), rel(zm.im, zf.im));
        worst = worst.max(er).max(el);
        refine = refine.max(rel(zf.re, zr.re)).max(rel(zf.im, zr.im));
        rows.push(format!(
            "{f} Hz R {:.4e}/{:.4e} L {:.4e}/{:.4e} ({} filaments, {:.1} s)",
            zm.re,
            zf.re,
            zm.im / w,
            zf.im / w,
            coarse.filaments,
            start.elapsed().as_secs_f64()
        ));
    }
    for r in &rows {
        println!("     {r}");
    }
    let mut direction = true;
    for f in [1e4, 3e4, 1e5] {
        let z4 = positive_sequence(&mom4.solve(f).unwrap().z);
        let z0 = positive_sequence(&mom0.solve(f).unwrap().z);
        direction &= z4.im < z0.im && z4.re > z0.re;
    }
    report.line(
        5,
        "three shells, MoM N=4 vs filament oracle; proximity direction",
        worst <= tol::FILAMENT_REL && refine <= tol::MESH_REFINEMENT_REL && direction,
        format!(
            "worst rel {worst:.3e} (tol {}), mesh refinement change {refine:.3e} (tol {}), L(N=4)<L(N=0) and R(N=4)>R(N=0) at 10k/30k/100 kHz: {direction}",
            tol::FILAMENT_REL,
            tol::MESH_REFINEMENT_REL
        ),
    );
}

fn greens_gate(sys: &CableSystem) -> (f64, f64) {
    let layout = HarmonicLayout::new(sys);
    let contours = layout.contours(&sys.conductors);
    let binom = Binomials::new(2 * sys.max_order() as usize + 2);
    let g = cablepul::greens::assemble_g(sys, &layout).unwrap().matrix;
    let mut worst: f64 = 0.0;
    for (ip, cp) in contours.iter().enumerate() {
        for (iq, cq) in contours.iter().enumerate() {
            let (np, nq) = (cp.order as i32, cq.order as i32);
            for m in -np..=np {
                for n in -nq..=nq {
                    let a = greens_entry(&cp.circle, &cq.circle, m, n, ip == iq, &binom).unwrap();
                    let q = greens_entry_quadrature(&cp.circle, &cq.circle, m, n, ip == iq, 1e-15).unwrap();
                    // Entries that vanish by symmetry are compared with the
                    // quadrature noise floor instead.
                    let scale = a.norm().max(1e-6);
                    worst = worst.max((a - q).norm() / scale);
                }
            }
        }
    }
    let mut reciprocity: f64 = 0.0;
    for cp in &contours {
        for cq in &contours {
            let (np, nq) = (cp.order as i32, cq.order as i32);
            for m in -np..=np {
                for n in -nq..=nq {
                    let x = g[(cp.index(m), cq.index(n))];
                    let y = g[(cq.index(-n), cp.index(-m))];
                    let s = x.norm().max(y.norm());
                    if s > 0.0 {
                        reciprocity = reciprocity.max((x - y).norm() / s);
                    }
                }
            }
        }
    }
    (worst, reciprocity)
}

fn greens(report: &mut Report) {
    let (w1, r1) = greens_gate(&shells(4));
    let (w2, r2) = greens_gate(&buried_pair(4));
    let (worst, recip) = (w1.max(w2), r1.max(r2));
    report.line(
        6,
        "closed-form G vs adaptive quadrature; reciprocity",
        worst <= tol::GREENS_REL && recip <= tol::RECIPROCITY_REL,
        format!("worst rel {worst:.3e} (tol {:e}), reciprocity {recip:.3e} (tol {:e})", tol::GREENS_REL, tol::RECIPROCITY_REL),
    );
}

fn structural_violation(z: &DMatrix<C64>, omega: f64) -> Option<String> {
    let zmax = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let asym = (z - z.transpose()).iter().map(|v| v.norm()).fold(0.0, f64::max) / zmax;
    if asym > tol::SYMMETRY_REL {
        return Some(format!("asymmetry {asym:.3e}"));
    }
    let r = z.map(|v| v.re);
    let r = (&r + r.transpose()) * 0.5;
    let rn = r.norm();
    let rmin = r.symmetric_eigenvalues().min();
    if rmin < -tol::R_EIGEN_FLOOR * rn {
        return Some(format!("R eigenvalue {rmin:.3e}"));
    }
    let l = z.map(|v| v.im / omega);
    let l = (&l + l.transpose()) * 0.5;
    if l.cholesky().is_none() {
        return Some("L not positive definite".into());
    }
    None
}

fn structural(report: &mut Report) {
    let freqs: Vec<f64> = (0..120).map(|k| 10f64.powf(6.0 * k as f64 / 119.0)).collect();
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut check = |label: &str, f: f64, z: &DMatrix<C64>| {
        checked += 1;
        if let Some(v) = structural_violation(z, 2.0 * PI * f) {
            bad.push(format!("{label} at {f:.3e} Hz: {v}"));
        }
    };
    let shells = MomSystem::new(&shells(4)).unwrap();
    for r in shells.sweep(&freqs, Execution::default()) {
        let r = r.unwrap();
        check("shells", r.frequency_hz, &r.z);
    }
    for (label, sys) in [("buried pair", buried_pair(4)), ("single-core trio", load("single_core_trio.toml").system)] {
        let pipe = ProximityPipeline::new(&sys).unwrap();
        for &f in &freqs {
            let parts = pipe.correct(f).unwrap();
            check(label, f, &parts.combined);
            let (_, full, _) = pipe.delta(f).unwrap();
            check(label, f, &full.z);
        }
    }
    report.line(
        7,
        "symmetry, passive R, positive-definite L on 120-point sweeps",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{checked} matrices checked")
        } else {
            format!("{} of {checked} failed, first: {}", bad.len(), bad[0])
        },
    );
}

fn performance(report: &Report) {
    let sys = load("single_core_trio.toml").system;
    let start = Instant::now();
    let mom = MomSystem::new(&sys).unwrap();
    let g = mom.g_assembly.as_secs_f64();
    let freqs: Vec<f64> = (0..120).map(|k| 10f64.powf(6.0 * k as f64 / 119.0)).collect();
    let sweep_start = Instant::now();
    let results = mom.sweep(&freqs, Execution::Sequential);
    let per = sweep_start.elapsed().as_secs_f64() / freqs.len() as f64;
    let total = start.elapsed().as_secs_f64();
    let ok = results.iter().all(|r| r.is_ok());
    report.advisory(
        8,
        "performance envelope, 6 conductors + return at N=4",
        ok && g <= tol::G_ASSEMBLY_SECONDS && per <= tol::SOLVE_SECONDS && total <= tol::SWEEP_SECONDS,
        format!("G {g:.4} s, per frequency {per:.4} s, 120-point sequential sweep {total:.3} s, unknowns {}", mom.layout.size),
    );
}

fn modal(report: &mut Report) {
    // Lossless-limit coax: very high conductivity, 1 MHz.
    let eps = 2.25;
    let coax = vec![
        ConductorSpec::solid(0.0, 0.0, 0.005, 1e12),
        ConductorSpec::hollow(0.0, 0.0, 0.0125, 0.012, 1e12),
    ];
    let sys = CableSystem::new(coax, Medium::default(), None, ReferencePolicy::auto_tube()).unwrap();
    let shunt = ShuntSpec {
        cables: vec![CoaxialCable {
            conductors: vec![0, 1],
            gaps: vec![
                vec![DielectricLayer { inner_radius_m: 0.005, outer_radius_m: 0.012, eps_r: eps }],
                vec![DielectricLayer { inner_radius_m: 0.0125, outer_radius_m: 0.015, eps_r: 2.5 }],
            ],
        }],
    };
    let f = 1e6;
    let w = 2.0 * PI * f;
    let z = MomSystem::new(&sys).unwrap().solve(f).unwrap().z;
    let y = system_shunt_y(&shunt, &sys.signal_conductors(), w).unwrap();
    let p = decompose(&z, &y, w).unwrap();
    let v = p.velocity.iter().cloned().fold(0.0, f64::max);
    let coax_err = rel(v, C0 / eps.sqrt());

    let trio = load("single_core_trio.toml");
    let shunt = trio.shunt.expect("trio input has a shunt section");
    let sys = trio.system;
    let f = 1e6;
    let w = 2.0 * PI * f;
    let y = system_shunt_y(&shunt, &sys.signal_conductors(), w).unwrap();
    let with = ProximityPipeline::new(&sys).unwrap().correct(f).unwrap().combined;
    let without = ground_analytic(&sys, w).unwrap();
    let sorted = |z: &DMatrix<C64>| {
        let mut v = decompose(z, &y, w).unwrap().velocity;
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (vp, v0) = (sorted(&with), sorted(&without));
    // Three coaxial modes are fastest and the earth mode slowest; the two in
    // between are the intersheath modes.
    let faster = (3..5).all(|i| vp[i] > v0[i]);
    report.line(
        9,
        "modal velocities",
        coax_err <= tol::COAX_VELOCITY_REL && faster,
        format!(
            "coax {v:.6e} m/s vs c/sqrt(eps_r) rel {coax_err:.3e} (tol {:e}); trio intersheath at 1 MHz with proximity {:.4e}, {:.4e} vs without {:.4e}, {:.4e}",
            tol::COAX_VELOCITY_REL,
            vp[3],
            vp[4],
            v0[3],
            v0[4]
        ),
    );
}

fn main() {
    // Libtest-style flags (e.g. --nocapture, filters) are ignored.
    let mut report = Report { failures: Vec::new() };
    table2(&mut report);
    two_wire(&mut report);
    tube(&mut report);
    filament(&mut report);
    greens(&mut report);
    structural(&mut report);
    performance(&report);
    modal(&mut report);
    if report.failures.is_empty() {
        println!("acceptance: all gating criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", report.failures);
        std::process::exit(1);
    }
}
