//! Command-line driver: reads a cable description, sweeps frequency and writes
//! CSV results plus a JSON run manifest.

pub mod csv;

use cablepul::greens::{greens_entry, greens_entry_quadrature, Binomials, GreensError};
use cablepul::io::{parse_frequency_list, read_input, InputError, ParsedInput, SweepSpec};
use cablepul::model::{CableSystem, GroundModel, ModelError, ReferencePolicy};
use cablepul::oracle::{build_mesh, FilamentOperator, MeshOptions, OracleError};
use cablepul::solver::ground::{combine_ground, ground_analytic, pair_modes, penetration_warning, GroundError, ProximityPipeline};
use cablepul::solver::modal::{modal_velocities, ModalError};
use cablepul::solver::shunt::{system_shunt_y, ShuntError};
use cablepul::solver::{map_frequencies, Execution, MomSystem, PulResult, SolveError};
use cablepul::surfop::HarmonicLayout;
use cablepul::C64;
use clap::{Parser, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;
pub const EXIT_PARTIAL: i32 = 6;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const COMBINED_FILE: &str = "combined_z.csv";
pub const MODES_FILE: &str = "modes.csv";
pub const FILAMENT_FILE: &str = "oracle_filament.csv";
pub const GREENS_FILE: &str = "oracle_greens.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundArg {
    None,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleArg {
    None,
    Filament,
    QuadratureGreens,
}

/// Per-unit-length R(f), L(f) of round solid and tubular conductors.
#[derive(Debug, Parser)]
#[command(name = "cablepul", version)]
pub struct Cli {
    /// Cable description (JSON or TOML).
    #[arg(long)]
    pub input: PathBuf,
    /// Harmonic order for every conductor, overriding the input.
    #[arg(long)]
    pub order: Option<u32>,
    /// Skin effect only (all orders 0).
    #[arg(long)]
    pub no_proximity: bool,
    /// Ground-return model, overriding the input.
    #[arg(long, value_enum)]
    pub ground: Option<GroundArg>,
    /// min:max:points:log|linear
    #[arg(long, conflicts_with = "freqs")]
    pub sweep: Option<String>,
    /// Comma-separated frequencies in Hz.
    #[arg(long)]
    pub freqs: Option<String>,
    #[arg(long, value_enum, default_value = "none")]
    pub oracle: OracleArg,
    /// Modal velocities (needs a `shunt` section in the input).
    #[arg(long)]
    pub modes: bool,
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Report R in ohm/km and L in H/km.
    #[arg(long)]
    pub ohm_per_km: bool,
    /// Solve frequencies one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(InputError),
    #[error(transparent)]
    Geometry(ModelError),
    #[error("{0}")]
    Numerical(String),
    #[error("{failed} of {total} frequencies failed")]
    Partial { failed: usize, total: usize },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Input(InputError::Read { .. }) => EXIT_IO,
            RunError::Input(InputError::Model(_)) | RunError::Geometry(_) => EXIT_GEOMETRY,
            RunError::Input(_) => EXIT_PARSE,
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Partial { .. } => EXIT_PARTIAL,
            RunError::Write { .. } => EXIT_IO,
        }
    }
}

impl From<InputError> for RunError {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Model(m) => RunError::Geometry(m),
            other => RunError::Input(other),
        }
    }
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical!(SolveError, GroundError, OracleError, ModalError, ShuntError, GreensError);

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedDefaults {
    pub orders: Vec<u32>,
    pub reference: usize,
    pub reference_policy: String,
    /// Auto-return tube material, recorded because it is a modelling choice.
    pub auto_return_mu_r: Option<f64>,
    pub auto_return_eps_r: Option<f64>,
    pub ground_model: String,
    pub ground_sigma_s_per_m: Option<f64>,
    pub proximity: bool,
    pub execution: String,
    pub units: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub g_assembly_s: f64,
    pub per_frequency_solve_s: Vec<f64>,
    pub oracle_s: Option<f64>,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyFailure {
    pub frequency_hz: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub input: String,
    pub input_sha256: String,
    pub frequencies: usize,
    pub resolved: ResolvedDefaults,
    pub timings: Timings,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<FrequencyFailure>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The per-frequency series impedance actually reported.
struct Solved {
    frequency_hz: f64,
    z: DMatrix<C64>,
    analytic: Option<DMatrix<C64>>,
    mom: PulResult,
    seconds: f64,
}

fn frequencies(cli: &Cli, input: &ParsedInput) -> Result<Vec<f64>, RunError> {
    if let Some(list) = &cli.freqs {
        return Ok(parse_frequency_list(list)?);
    }
    if let Some(s) = &cli.sweep {
        return Ok(SweepSpec::parse(s)?.frequencies());
    }
    input
        .sweep
        .map(|s| s.frequencies())
        .ok_or_else(|| RunError::Usage("no frequencies: give --sweep, --freqs or a sweep section".into()))
}

fn resolve_system(cli: &Cli, input: &ParsedInput) -> Result<CableSystem, RunError> {
    let mut sys = input.system.clone();
    if let Some(n) = cli.order {
        sys = sys.with_order(n);
    }
    if cli.no_proximity {
        sys = sys.with_order(0);
    }
    match cli.ground {
        None => {}
        Some(GroundArg::None) => sys.ground = None,
        Some(GroundArg::Analytic) => match sys.ground {
            Some(g) if g.model == GroundModel::InfiniteEarthAnalytic => {}
            _ => return Err(RunError::Usage("--ground analytic needs a ground section with sigma_S_per_m in the input".into())),
        },
    }
    Ok(sys)
}

fn uses_ground(sys: &CableSystem) -> bool {
    matches!(sys.ground, Some(g) if g.model == GroundModel::InfiniteEarthAnalytic)
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Runs the CLI and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), RunError> {
    let start = Instant::now();
    let bytes = std::fs::read(&cli.input).map_err(|source| {
        RunError::Input(InputError::Read {
            path: cli.input.display().to_string(),
            source,
        })
    })?;
    let input = read_input(&cli.input)?;
    let sys = resolve_system(cli, &input)?;
    let freqs = frequencies(cli, &input)?;
    if cli.modes && input.shunt.is_none() {
        return Err(RunError::Usage("--modes needs a shunt section in the input".into()));
    }
    std::fs::create_dir_all(&cli.output).map_err(|source| RunError::Write {
        path: cli.output.display().to_string(),
        source,
    })?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let ground = uses_ground(&sys);

    let mut timings = Timings::default();
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    let mut outputs = Vec::new();

    // Series impedance at every frequency.
    let pipeline = if ground { Some(ProximityPipeline::new(&sys)?) } else { None };
    let mom = match &pipeline {
        Some(p) => {
            timings.g_assembly_s = (p.with_proximity.g_assembly + p.skin_only.g_assembly).as_secs_f64();
            None
        }
        None => {
            let m = MomSystem::new(&sys)?;
            timings.g_assembly_s = m.g_assembly.as_secs_f64();
            Some(m)
        }
    };
    let outcomes = map_frequencies(&freqs, exec, |f| {
        let t = Instant::now();
        let r: Result<Solved, RunError> = match (&pipeline, &mom) {
            (Some(p), _) => p.delta(f).map_err(RunError::from).and_then(|(delta, full, _)| {
                let analytic = ground_analytic(&p.with_proximity.system, 2.0 * std::f64::consts::PI * f)?;
                Ok(Solved {
                    frequency_hz: f,
                    z: combine_ground(&analytic, &delta)?,
                    analytic: Some(analytic),
                    mom: full,
                    seconds: 0.0,
                })
            }),
            (None, Some(m)) => m.solve(f).map_err(RunError::from).map(|r| Solved {
                frequency_hz: f,
                z: r.z.clone(),
                analytic: None,
                mom: r,
                seconds: 0.0,
            }),
            (None, None) => unreachable!(),
        };
        r.map(|mut s| {
            s.seconds = t.elapsed().as_secs_f64();
            s
        })
    });
    let mut solved = Vec::new();
    for (f, o) in freqs.iter().zip(outcomes) {
        match o {
            Ok(s) => {
                timings.per_frequency_solve_s.push(s.seconds);
                solved.push(s);
            }
            Err(e) => failures.push(FrequencyFailure {
                frequency_hz: *f,
                error: e.to_string(),
            }),
        }
    }
    if ground {
        if let Some(w) = freqs.iter().rev().find_map(|&f| penetration_warning(&sys, 2.0 * std::f64::consts::PI * f)) {
            warnings.push(w);
        }
    }

    let hash = sha256_hex(&bytes);
    let banner = csv::banner(MANIFEST_FILE, &hash);
    let names = sys.signal_conductors();
    write(&cli.output.join(RESULTS_FILE), &csv::results(&banner, &names, &solved_rl(&solved), cli.ohm_per_km))?;
    outputs.push(RESULTS_FILE.to_string());
    if ground {
        let rows: Vec<(f64, DMatrix<C64>)> = solved.iter().map(|s| (s.frequency_hz, s.z.clone())).collect();
        let analytic: Vec<DMatrix<C64>> = solved.iter().map(|s| s.analytic.clone().expect("ground run")).collect();
        write(&cli.output.join(COMBINED_FILE), &csv::combined(&banner, &names, &rows, &analytic, pair_modes))?;
        outputs.push(COMBINED_FILE.to_string());
    }

    if cli.modes {
        let shunt = input.shunt.as_ref().expect("checked above");
        let mut ys = Vec::new();
        for s in &solved {
            ys.push(system_shunt_y(shunt, &names, 2.0 * std::f64::consts::PI * s.frequency_hz)?);
        }
        let fs: Vec<f64> = solved.iter().map(|s| s.frequency_hz).collect();
        let zs: Vec<DMatrix<C64>> = solved.iter().map(|s| s.z.clone()).collect();
        let points = modal_velocities(&fs, &zs, &ys)?;
        for p in points.iter().filter(|p| p.ambiguous) {
            warnings.push(format!("mode tracking ambiguous at {} Hz (overlap {:.3})", p.frequency_hz, p.min_overlap));
        }
        write(&cli.output.join(MODES_FILE), &csv::modes(&banner, &points))?;
        outputs.push(MODES_FILE.to_string());
    }

    match cli.oracle {
        OracleArg::None => {}
        OracleArg::Filament => {
            let t = Instant::now();
            let plain = CableSystem { ground: None, ..sys.clone() };
            let f_max = solved.iter().map(|s| s.frequency_hz).fold(0.0, f64::max);
            if f_max > 0.0 {
                let mesh = build_mesh(&plain, f_max, &MeshOptions::default())?;
                let op = FilamentOperator::new(&plain, mesh);
                let fs: Vec<f64> = solved.iter().map(|s| s.frequency_hz).collect();
                let fil = op.sweep(&fs, exec).into_iter().collect::<Result<Vec<_>, _>>()?;
                let mom: Vec<&PulResult> = solved.iter().map(|s| &s.mom).collect();
                write(&cli.output.join(FILAMENT_FILE), &csv::filament(&banner, &names, &mom, &fil))?;
                outputs.push(FILAMENT_FILE.to_string());
            }
            timings.oracle_s = Some(t.elapsed().as_secs_f64());
        }
        OracleArg::QuadratureGreens => {
            let t = Instant::now();
            write(&cli.output.join(GREENS_FILE), &greens_comparison(&banner, &sys)?)?;
            outputs.push(GREENS_FILE.to_string());
            timings.oracle_s = Some(t.elapsed().as_secs_f64());
        }
    }

    timings.total_s = start.elapsed().as_secs_f64();
    let manifest = RunManifest {
        tool: "cablepul".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input: cli.input.display().to_string(),
        input_sha256: hash,
        frequencies: freqs.len(),
        resolved: resolved_defaults(cli, &sys, exec),
        timings,
        outputs,
        warnings,
        failures,
    };
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    write(&cli.output.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
    let failed = manifest.failures.len();
    if failed == 0 {
        Ok(())
    } else if failed == freqs.len() {
        Err(RunError::Numerical(format!("every frequency failed; first: {}", manifest.failures[0].error)))
    } else {
        Err(RunError::Partial { failed, total: freqs.len() })
    }
}

fn solved_rl(solved: &[Solved]) -> Vec<(f64, DMatrix<f64>, DMatrix<f64>)> {
    solved
        .iter()
        .map(|s| {
            let w = 2.0 * std::f64::consts::PI * s.frequency_hz;
            (s.frequency_hz, s.z.map(|v| v.re), s.z.map(|v| v.im / w))
        })
        .collect()
}

fn resolved_defaults(cli: &Cli, sys: &CableSystem, exec: Execution) -> ResolvedDefaults {
    let auto = sys.has_auto_return();
    let tube = auto.then(|| &sys.conductors[sys.reference]);
    ResolvedDefaults {
        orders: sys.conductors.iter().map(|c| c.order).collect(),
        reference: sys.reference,
        reference_policy: match sys.reference_policy {
            ReferencePolicy::Explicit(i) => format!("explicit({i})"),
            ReferencePolicy::AutoTube { radius, thickness, .. } => format!(
                "auto_tube(radius={radius} m, thickness={thickness} m, sigma={} S/m)",
                tube.map_or(f64::NAN, |t| t.sigma)
            ),
        },
        auto_return_mu_r: tube.map(|t| t.mu_r),
        auto_return_eps_r: tube.map(|t| t.eps_r),
        ground_model: match sys.ground {
            Some(g) if g.model == GroundModel::InfiniteEarthAnalytic => "infinite_earth_analytic".into(),
            _ => "none".into(),
        },
        ground_sigma_s_per_m: sys.ground.map(|g| g.sigma),
        proximity: sys.signal_conductors().iter().any(|&i| sys.conductors[i].order > 0),
        execution: format!("{exec:?}").to_lowercase(),
        units: if cli.ohm_per_km { "ohm_per_km, H_per_km" } else { "ohm_per_m, H_per_m" }.into(),
    }
}

/// Every analytic G entry of the system next to its quadrature value.
pub fn greens_comparison(banner: &str, sys: &CableSystem) -> Result<String, RunError> {
    let layout = HarmonicLayout::new(sys);
    let contours = layout.contours(&sys.conductors);
    let binom = Binomials::new(2 * sys.max_order() as usize + 2);
    let mut out = String::from(banner);
    out.push_str("row,col,analytic_re,analytic_im,quadrature_re,quadrature_im,abs_diff,rel_diff\n");
    for (ip, cp) in contours.iter().enumerate() {
        for (iq, cq) in contours.iter().enumerate() {
            let (np, nq) = (cp.order as i32, cq.order as i32);
            for m in -np..=np {
                for n in -nq..=nq {
                    let same = ip == iq;
                    let a = greens_entry(&cp.circle, &cq.circle, m, n, same, &binom)?;
                    let q = greens_entry_quadrature(&cp.circle, &cq.circle, m, n, same, 1e-13)?;
                    let d = (a - q).norm();
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        cp.index(m),
                        cq.index(n),
                        csv::num(a.re),
                        csv::num(a.im),
                        csv::num(q.re),
                        csv::num(q.im),
                        csv::num(d),
                        csv::num(if a.norm() > 0.0 { d / a.norm() } else { d })
                    ));
                }
            }
        }
    }
    Ok(out)
}
