//! The `relbosons` command line.

mod output;
mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigensolver::{gamma_curve, RadialGrid};
use crate::kg_fields::{scan_density, uniform_radii, SpectralProfile, WavepacketParams};
use crate::numkernel::QuadratureSpec;
use crate::potentials::{DValue, PotentialSpec};
use crate::variational::{
    minimize_on, minimize_transverse_massless, random_transverse_init, CylGrid, DispersionFunctional,
    Geometry, MinimizeOptions, Minimized, Objective, RadialMesh,
};

pub use output::{sig9, write_atomic};
pub use verify::{run_checks, Check};

/// `d` values used when a sweep is not given: the two exact endpoints and
/// three intermediate values.
pub const DEFAULT_D_SWEEP: &str = "0,0.5,1,2,inf";

#[derive(Debug, Parser)]
#[command(name = "relbosons", version, about = "Position and momentum spreads of massive spin-0 and spin-1 wave packets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial charge and energy densities of a Klein-Gordon wavepacket.
    ///
    /// Main CSV columns: r,rho,eps. Map CSV columns: x,z,rho (plane y = 0).
    /// Shells JSON: [{r_min, r_max, rho_min}]. A summary goes to stderr.
    Density(DensityArgs),
    /// Effective radial potential W(q) of the ground-level eigenproblem.
    ///
    /// CSV columns: q,W for a single d, d,q,W for several.
    Potential(PotentialArgs),
    /// Ground level γ(d) by shooting, cross-checked by finite differences.
    ///
    /// CSV columns: d,gamma,residual,method, where residual is the relative
    /// operator residual of the shooting eigenfunction on q >= 0.2.
    Gamma(GammaArgs),
    /// Direct minimization of a dispersion functional on a momentum mesh.
    ///
    /// JSON keys: gamma, delta_q2, delta_rq2, iterations, plus diagnostics.
    /// Samples CSV columns: q,f (radial) or q_perp,q_z,f (cylindrical).
    Rayleigh(RayleighArgs),
    /// Runs every reference check and prints a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    /// cos(p/m)/√(m² + p²).
    Cosine,
    /// exp(-p²/(2σ²)).
    Gaussian,
}

#[derive(Debug, clap::Args)]
pub struct DensityArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// Damping `a` of the e^{-aE} factor.
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, default_value_t = 0.05)]
    pub t: f64,
    #[arg(long, default_value_t = 6.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dr: f64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Cosine)]
    pub profile: ProfileArg,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Radial CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Planar map CSV over [-rmax, rmax]².
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub map_step: f64,
    /// Negative-shell JSON.
    #[arg(long)]
    pub shells: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Scalar,
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct PotentialArgs {
    #[arg(long, default_value = "0", value_parser = ["0", "1"])]
    pub spin: String,
    /// Comma-separated d values; `inf` is the massless limit.
    #[arg(long, default_value = DEFAULT_D_SWEEP)]
    pub d: String,
    /// Angular index l (spin 0) or j (spin 1).
    #[arg(long, default_value_t = 0)]
    pub l: u32,
    /// `start:stop:step`.
    #[arg(long, default_value = "0.05:6:0.05")]
    pub q: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct GammaArgs {
    #[arg(long, default_value = "0", value_parser = ["0", "1"])]
    pub spin: String,
    /// Must match the spin: scalar for 0, longitudinal for 1.
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    #[arg(long, default_value = DEFAULT_D_SWEEP)]
    pub d: String,
    #[arg(long, default_value_t = 0)]
    pub l: u32,
    /// Grid nodes.
    #[arg(long, default_value_t = 8000)]
    pub n: usize,
    #[arg(long, default_value_t = 12.0)]
    pub qmax: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub qmin: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Spin0,
    Long,
    TransNonrel,
    TransMassless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// A Gaussian of the wrong width (times q_perp for the massless case).
    Gaussian,
    /// The Gaussian start with a uniform [0.5, 1.5) factor per sample.
    Random,
}

#[derive(Debug, clap::Args)]
pub struct RayleighArgs {
    #[arg(long, value_enum)]
    pub case: CaseArg,
    /// Only for spin0 and long.
    #[arg(long)]
    pub d: Option<String>,
    /// Mesh step; 0.01 radial, 0.02 cylindrical by default.
    #[arg(long)]
    pub h: Option<f64>,
    /// Mesh extent; 10 radial, 8 cylindrical by default.
    #[arg(long)]
    pub qmax: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitArg::Gaussian)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the minimizer samples.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {}

/// A failure with the offending point named; maps to exit code 1.
#[derive(Debug)]
pub struct RunError(pub String);

impl<E: std::fmt::Display> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError(e.to_string())
    }
}

type RunResult = Result<(), RunError>;

/// Parses `argv` and runs the subcommand. Returns the process exit code:
/// 0 on success, 1 on a computational failure, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = validate(&cli.command) {
        eprintln!("error: {msg}");
        return 2;
    }
    configure_threads();
    let result = match &cli.command {
        Command::Density(a) => density(a),
        Command::Potential(a) => potential(a),
        Command::Gamma(a) => gamma(a),
        Command::Rayleigh(a) => rayleigh(a),
        Command::Verify(_) => verify(),
    };
    match result {
        Ok(()) => 0,
        Err(RunError(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("RELBOSONS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn parse_d_list(s: &str) -> Result<Vec<DValue>, String> {
    let list: Vec<DValue> = s
        .split(',')
        .map(|t| t.parse::<DValue>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("empty d list".into());
    }
    Ok(list)
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad range component {t:?} in {s:?}")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(format!("range {s:?} is not start:stop:step"));
    };
    if !(start > 0.0 && stop >= start && step > 0.0 && stop.is_finite()) {
        return Err(format!("range {s:?} needs 0 < start <= stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("--{name} must be positive, got {v}"))
    }
}

fn family(spin: &str, l: u32) -> PotentialSpec {
    let base = if spin == "0" {
        PotentialSpec::scalar(DValue::Finite(0.0))
    } else {
        PotentialSpec::longitudinal(DValue::Finite(0.0))
    };
    base.with_angular_index(l)
}

/// Flag checks that run before any computation.
fn validate(cmd: &Command) -> Result<(), String> {
    match cmd {
        Command::Density(a) => {
            positive("m", a.m)?;
            positive("a", a.a)?;
            positive("rmax", a.rmax)?;
            positive("dr", a.dr)?;
            positive("sigma", a.sigma)?;
            positive("map-step", a.map_step)?;
            if !a.t.is_finite() {
                return Err(format!("--t must be finite, got {}", a.t));
            }
            if a.dr > a.rmax {
                return Err("--dr exceeds --rmax".into());
            }
        }
        Command::Potential(a) => {
            parse_d_list(&a.d)?;
            parse_range(&a.q)?;
        }
        Command::Gamma(a) => {
            parse_d_list(&a.d)?;
            let expected = if a.spin == "0" { ChannelArg::Scalar } else { ChannelArg::Longitudinal };
            if let Some(c) = a.channel {
                if c != expected {
                    return Err(format!("spin {} has no {:?} channel", a.spin, c));
                }
            }
            RadialGrid::new(a.qmin, a.qmax, a.n).map_err(|e| e.to_string())?;
        }
        Command::Rayleigh(a) => {
            if let Some(h) = a.h {
                positive("h", h)?;
            }
            if let Some(q) = a.qmax {
                positive("qmax", q)?;
            }
            match (a.case, &a.d) {
                (CaseArg::TransNonrel | CaseArg::TransMassless, Some(_)) => {
                    return Err("--d applies to spin0 and long only".into());
                }
                (_, Some(d)) => {
                    d.parse::<DValue>().map_err(|e| e.to_string())?;
                }
                _ => {}
            }
        }
        Command::Verify(_) => {}
    }
    Ok(())
}

fn density(a: &DensityArgs) -> RunResult {
    let profile = match a.profile {
        ProfileArg::Cosine => SpectralProfile::Cosine,
        ProfileArg::Gaussian => SpectralProfile::Gaussian { sigma: a.sigma },
    };
    let params = WavepacketParams::new(a.m, a.a, a.t, profile)?;
    let radii = uniform_radii(a.rmax, a.dr);
    let field = scan_density(&params, &radii, &QuadratureSpec::default())?;
    if let Some((r, msg)) = field.failures.first() {
        return Err(RunError(format!("density quadrature failed at r = {}: {msg}", sig9(*r))));
    }
    let mut csv = String::from("r,rho,eps\n");
    for i in 0..radii.len() {
        let _ = writeln!(csv, "{},{},{}", sig9(radii[i]), sig9(field.rho[i]), sig9(field.eps[i]));
    }
    output::emit(a.out.as_deref(), &csv)?;
    if let Some(path) = &a.map {
        let mut map = String::from("x,z,rho\n");
        for (x, z, rho) in field.planar_map(a.rmax, a.map_step) {
            let _ = writeln!(map, "{},{},{}", sig9(x), sig9(z), sig9(rho));
        }
        write_atomic(path, map.as_bytes())?;
    }
    if let Some(path) = &a.shells {
        let json = serde_json::to_string_pretty(&field.negative_shells)?;
        write_atomic(path, (json + "\n").as_bytes())?;
    }

    let (i_min, rho_min) = field
        .rho
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let eps_min = field.eps.iter().copied().fold(f64::INFINITY, f64::min);
    eprintln!(
        "density: {} radii in (0, {}], min rho {} at r = {}, min eps {}",
        radii.len(),
        sig9(a.rmax),
        sig9(rho_min),
        sig9(radii[i_min]),
        sig9(eps_min)
    );
    eprintln!("negative shells: {}", field.negative_shells.len());
    for s in &field.negative_shells {
        eprintln!("  r in [{}, {}], min rho {}", sig9(s.r_min), sig9(s.r_max), sig9(s.rho_min));
    }
    Ok(())
}

fn potential(a: &PotentialArgs) -> RunResult {
    let ds = parse_d_list(&a.d).map_err(RunError)?;
    let qs = parse_range(&a.q).map_err(RunError)?;
    let base = family(&a.spin, a.l);
    let mut csv = String::from(if ds.len() == 1 { "q,W\n" } else { "d,q,W\n" });
    for d in &ds {
        let spec = base.with_d(*d);
        for &q in &qs {
            let w = spec.value_at(q);
            if ds.len() == 1 {
                let _ = writeln!(csv, "{},{}", sig9(q), sig9(w));
            } else {
                let _ = writeln!(csv, "{d},{},{}", sig9(q), sig9(w));
            }
        }
    }
    output::emit(a.out.as_deref(), &csv)?;
    Ok(())
}

#[derive(Serialize)]
struct GammaJson<'a> {
    spin: u32,
    channel: &'static str,
    angular_index: u32,
    grid: RadialGrid,
    method: &'static str,
    points: &'a [crate::eigensolver::GammaPoint],
}

fn gamma(a: &GammaArgs) -> RunResult {
    let ds = parse_d_list(&a.d).map_err(RunError)?;
    let grid = RadialGrid::new(a.qmin, a.qmax, a.n)?;
    let curve = gamma_curve(&family(&a.spin, a.l), &ds, &grid);
    let text = match a.format {
        FormatArg::Csv => {
            let mut csv = String::from("d,gamma,residual,method\n");
            for p in &curve.points {
                let num = |v: Option<f64>| v.map(sig9).unwrap_or_else(|| "nan".into());
                let _ = writeln!(csv, "{},{},{},shooting", p.d, num(p.gamma), num(p.residual));
            }
            csv
        }
        FormatArg::Json => {
            let doc = GammaJson {
                spin: if a.spin == "0" { 0 } else { 1 },
                channel: if a.spin == "0" { "scalar" } else { "longitudinal" },
                angular_index: a.l,
                grid,
                method: "shooting",
                points: &curve.points,
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    output::emit(a.out.as_deref(), &text)?;
    let failed: Vec<String> = curve
        .points
        .iter()
        .filter(|p| p.failed())
        .map(|p| format!("d = {}: {}", p.d, p.error.as_deref().unwrap_or("")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError(format!("gamma failed at {}", failed.join("; "))))
    }
}

#[derive(Serialize)]
struct RayleighJson {
    case: &'static str,
    d: Option<DValue>,
    gamma: f64,
    delta_q2: f64,
    delta_rq2: f64,
    iterations: usize,
    objective: Objective,
    stationarity: f64,
    balance: f64,
    geometry: Geometry,
}

fn rayleigh(a: &RayleighArgs) -> RunResult {
    let d = a
        .d
        .as_deref()
        .map(|s| s.parse::<DValue>())
        .transpose()?
        .unwrap_or(DValue::Finite(0.0));
    let options = MinimizeOptions::default();
    let (label, result, d_out): (&'static str, Minimized, Option<DValue>) = match a.case {
        CaseArg::TransMassless => {
            let h = a.h.unwrap_or(0.02);
            let extent = a.qmax.unwrap_or(8.0);
            let grid = CylGrid::new(h, extent, h, extent)?;
            let init = match a.init {
                InitArg::Gaussian => {
                    Geometry::Cylindrical(grid).sample(|qp, z| qp * (-(qp * qp + z * z)).exp())
                }
                InitArg::Random => random_transverse_init(&grid, a.seed),
            };
            ("trans-massless", minimize_transverse_massless(&grid, &init, &options)?, None)
        }
        case => {
            let (label, functional, d_out) = match case {
                CaseArg::Spin0 => ("spin0", DispersionFunctional::spin0(d), Some(d)),
                CaseArg::Long => ("long", DispersionFunctional::longitudinal(d), Some(d)),
                _ => ("trans-nonrel", DispersionFunctional::transverse_nonrel(), None),
            };
            let mesh = RadialMesh::new(a.h.unwrap_or(0.01), a.qmax.unwrap_or(10.0))?;
            let geometry = Geometry::Radial(mesh);
            let mut init = geometry.sample(|q, _| (-q * q).exp());
            if a.init == InitArg::Random {
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                init.iter_mut().for_each(|v| *v *= rng.gen_range(0.5..1.5));
            }
            let m = minimize_on(&geometry, &functional, &init, &options)?;
            (label, m, d_out)
        }
    };
    let state = &result.state;
    let doc = RayleighJson {
        case: label,
        d: d_out,
        gamma: state.gamma,
        delta_q2: state.delta_q2,
        delta_rq2: state.delta_rq2,
        iterations: result.iterations,
        objective: result.objective,
        stationarity: result.stationarity,
        balance: result.balance,
        geometry: state.geometry,
    };
    output::emit(a.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    if let Some(path) = &a.samples {
        write_samples(path, &state.geometry, &state.f_samples)?;
    }
    Ok(())
}

fn write_samples(path: &Path, geometry: &Geometry, f: &[f64]) -> RunResult {
    let mut csv = String::from(match geometry {
        Geometry::Radial(_) => "q,f\n",
        Geometry::Cylindrical(_) => "q_perp,q_z,f\n",
    });
    for ((a, b), v) in geometry.points().into_iter().zip(f) {
        match geometry {
            Geometry::Radial(_) => {
                let _ = writeln!(csv, "{},{}", sig9(a), sig9(*v));
            }
            Geometry::Cylindrical(_) => {
                let _ = writeln!(csv, "{},{},{}", sig9(a), sig9(b), sig9(*v));
            }
        }
    }
    write_atomic(path, csv.as_bytes())?;
    Ok(())
}

fn verify() -> RunResult {
    let checks = run_checks();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(10);
    println!("{:<width$}  {:>16}  {:>16}  {:>9}  result", "check", "value", "expected", "tol");
    for c in &checks {
        println!(
            "{:<width$}  {:>16}  {:>16}  {:>9}  {}",
            c.name,
            sig9(c.value),
            c.expected,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    println!("{} of {} checks passed", checks.len() - failed.len(), checks.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError(format!("failed checks: {}", failed.join(", "))))
    }
}
