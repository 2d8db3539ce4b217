//! Fixed-format CSV writers (17 significant digits) and a reader for them.

use cablepul::oracle::FilamentResult;
use cablepul::solver::modal::ModalPoint;
use cablepul::solver::PulResult;
use cablepul::C64;
use nalgebra::DMatrix;

/// Shortest fixed representation carrying 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn banner(manifest: &str, input_sha256: &str) -> String {
    format!("# manifest={manifest} input_sha256={input_sha256}\n")
}

fn upper(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// f_hz, R_i_j..., L_i_j... over the upper triangle; `names` are the
/// conductor indices of the reduced matrices.
pub fn results(banner: &str, names: &[usize], rows: &[(f64, DMatrix<f64>, DMatrix<f64>)], per_km: bool) -> String {
    let (scale, r_unit, l_unit) = if per_km { (1e3, "ohm_per_km", "H_per_km") } else { (1.0, "ohm_per_m", "H_per_m") };
    let n = names.len();
    let mut out = String::from(banner);
    out.push_str("f_hz");
    for (i, j) in upper(n) {
        out.push_str(&format!(",R_{}_{}_{r_unit}", names[i], names[j]));
    }
    for (i, j) in upper(n) {
        out.push_str(&format!(",L_{}_{}_{l_unit}", names[i], names[j]));
    }
    out.push('\n');
    for (f, r, l) in rows {
        out.push_str(&num(*f));
        for (i, j) in upper(n) {
            out.push(',');
            out.push_str(&num(r[(i, j)] * scale));
        }
        for (i, j) in upper(n) {
            out.push(',');
            out.push_str(&num(l[(i, j)] * scale));
        }
        out.push('\n');
    }
    out
}

/// Combined (ground-corrected) and purely analytic Z in ohm/km; pair modes
/// are appended for two signal conductors.
pub fn combined(
    banner: &str,
    names: &[usize],
    rows: &[(f64, DMatrix<C64>)],
    analytic: &[DMatrix<C64>],
    modes: fn(&DMatrix<C64>) -> (C64, C64),
) -> String {
    let n = names.len();
    let pair = n == 2;
    let mut out = String::from(banner);
    out.push_str("f_hz");
    for kind in ["Z", "Zanalytic"] {
        for (i, j) in upper(n) {
            out.push_str(&format!(",{kind}_re_{}_{}_ohm_per_km,{kind}_im_{}_{}_ohm_per_km", names[i], names[j], names[i], names[j]));
        }
    }
    if pair {
        out.push_str(",common_re_ohm_per_km,common_im_ohm_per_km,loop_re_ohm_per_km,loop_im_ohm_per_km");
        out.push_str(",loop_analytic_re_ohm_per_km,loop_analytic_im_ohm_per_km,loop_rel_diff_re,loop_rel_diff_im");
    }
    out.push('\n');
    for ((f, z), za) in rows.iter().zip(analytic) {
        out.push_str(&num(*f));
        for m in [z, za] {
            for (i, j) in upper(n) {
                out.push_str(&format!(",{},{}", num(m[(i, j)].re * 1e3), num(m[(i, j)].im * 1e3)));
            }
        }
        if pair {
            let (c, l) = modes(z);
            let (_, la) = modes(za);
            for v in [c.re, c.im, l.re, l.im, la.re, la.im] {
                out.push(',');
                out.push_str(&num(v * 1e3));
            }
            out.push_str(&format!(",{},{}", num((la.re - l.re) / l.re), num((la.im - l.im) / l.im)));
        }
        out.push('\n');
    }
    out
}

pub fn modes(banner: &str, points: &[ModalPoint]) -> String {
    let k = points.first().map_or(0, |p| p.velocity.len());
    let mut out = String::from(banner);
    out.push_str("f_hz");
    for m in 0..k {
        out.push_str(&format!(",v_{m}_m_per_s"));
    }
    for m in 0..k {
        out.push_str(&format!(",alpha_{m}_np_per_m"));
    }
    out.push_str(",min_overlap,ambiguous\n");
    for p in points {
        out.push_str(&num(p.frequency_hz));
        for v in p.velocity.iter().chain(&p.attenuation) {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push_str(&format!(",{},{}\n", num(p.min_overlap), u8::from(p.ambiguous)));
    }
    out
}

/// MoM against filament values with relative differences, upper triangle.
pub fn filament(banner: &str, names: &[usize], mom: &[&PulResult], fil: &[FilamentResult]) -> String {
    let n = names.len();
    let mut out = String::from(banner);
    out.push_str("f_hz,filaments");
    for (i, j) in upper(n) {
        let t = format!("{}_{}", names[i], names[j]);
        out.push_str(&format!(
            ",R_{t}_mom_ohm_per_m,R_{t}_filament_ohm_per_m,R_{t}_rel_diff,L_{t}_mom_H_per_m,L_{t}_filament_H_per_m,L_{t}_rel_diff"
        ));
    }
    out.push('\n');
    for (m, f) in mom.iter().zip(fil) {
        out.push_str(&format!("{},{}", num(m.frequency_hz), f.filaments));
        let (fr, fl) = (f.r(), f.l());
        for (i, j) in upper(n) {
            let (rm, rf, lm, lf) = (m.r[(i, j)], fr[(i, j)], m.l[(i, j)], fl[(i, j)]);
            for v in [rm, rf, (rf - rm) / rm.abs(), lm, lf, (lf - lm) / lm.abs()] {
                out.push(',');
                out.push_str(&num(v));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Reads a file written by this module; `#` lines are skipped.
pub fn read_table(text: &str) -> Result<Table, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines.next().ok_or("empty table")?.split(',').map(str::to_string).collect();
    let rows = lines
        .enumerate()
        .map(|(k, l)| {
            let row: Vec<f64> = l
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|e| format!("row {k}: {v:?}: {e}")))
                .collect::<Result<_, _>>()?;
            if row.len() == header.len() {
                Ok(row)
            } else {
                Err(format!("row {k} has {} fields, header has {}", row.len(), header.len()))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(Table { header, rows })
}
