//! `esdg` command-line driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esdg::config::{load_settings, Assignment, Settings};
use esdg::diagnostics::{
    density_jump, fitted_rate, l2_error, max_entropy_rhs, vortex_convergence, ConstantsRow,
};
use esdg::error::Error;
use esdg::mesh::{build_uniform_mesh, warp_mesh, Domain, MeshKind};
use esdg::quadrature::ElementKind;
use esdg::ref_elem::QuadratureOption;
use esdg::sbp::{gsbp_residual, row_sum_residual, sbp_residual, skew_difference};
use esdg::solver::{Discretization, FluxMode, RunConfig, Simulation, StepRecord};

#[derive(Parser, Debug)]
#[command(name = "esdg", version, about = "Entropy stable DG for the 2D compressible Euler equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check SBP properties of the reference operators.
    CheckOperators(Common),
    /// Tabulate inverse and trace constants.
    Constants(Common),
    /// Sweep surface accuracy and mapping degree, recording the entropy RHS.
    EntropyTest {
        #[command(flatten)]
        common: Common,
        /// Sweep spec such as `Ngeo=1..4,M=1,3,5`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Isentropic vortex convergence study.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Quadrature options to compare.
        #[arg(long, default_value = "1,2,3")]
        options: String,
        /// Number of refinement levels; `nx` doubles between levels.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Run one simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial condition: vortex, density-jump or constant.
        #[arg(long, default_value = "vortex")]
        initial: String,
    },
    /// Write mesh elements, adjacency and mapping coefficients.
    MeshDump(Common),
}

/// Configuration file plus per-key overrides. Sweeping commands read
/// `--N` as a list such as `1..7` or `2,4`.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long = "Ngeo")]
    ngeo: Option<String>,
    #[arg(long)]
    option: Option<String>,
    #[arg(long = "element_kind")]
    element_kind: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    /// `x0,x1,y0,y1`
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    /// `ec` or `es`
    #[arg(long)]
    flux: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "out_dir")]
    out_dir: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Common {
    fn overrides(&self, skip_degree: bool) -> Vec<Assignment> {
        let pairs = [
            ("N", if skip_degree { &None } else { &self.n }),
            ("Ngeo", &self.ngeo),
            ("option", &self.option),
            ("element_kind", &self.element_kind),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("domain", &self.domain),
            ("alpha", &self.alpha),
            ("cfl", &self.cfl),
            ("T", &self.t),
            ("flux", &self.flux),
            ("gamma", &self.gamma),
            ("out_dir", &self.out_dir),
            ("threads", &self.threads),
            ("seed", &self.seed),
        ];
        pairs.iter().filter_map(|(k, v)| v.as_ref().map(|v| Assignment::new(0, k, v))).collect()
    }

    /// Defaults, then the configuration file, then command-line overrides.
    fn settings(&self, base: RunConfig, skip_degree: bool) -> Result<Settings, Failure> {
        let mut s = Settings::new(base);
        if let Some(path) = &self.config {
            s = load_settings(path, s).map_err(|e| match e {
                Error::Io(io) => Failure::Config(format!("{}: {io}", path.display())),
                Error::Config { line, message } => Failure::Config(format!("{}:{line}: {message}", path.display())),
                other => Failure::from(other),
            })?;
        }
        for a in self.overrides(skip_degree) {
            s.apply(&a).map_err(|e| match e {
                Error::Config { message, .. } => Failure::Config(format!("--{}: {message}", a.key)),
                other => Failure::from(other),
            })?;
        }
        s.run.validate().map_err(Failure::from)?;
        Ok(s)
    }

    fn degrees(&self, default: &str) -> Result<Vec<usize>, Failure> {
        parse_list(self.n.as_deref().unwrap_or(default)).map_err(|m| Failure::Config(format!("--N: {m}")))
    }
}

#[derive(Debug)]
enum Failure {
    /// Malformed configuration or arguments.
    Config(String),
    /// Nonphysical state or invalid geometry during a run.
    Physics(String),
    /// An internal check did not pass.
    Check(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidArgument(_) | Error::InsufficientQuadrature(_) => {
                Failure::Config(e.to_string())
            }
            Error::NonPhysical { .. } | Error::InvertedElement { .. } => Failure::Physics(e.to_string()),
            Error::Io(_) | Error::Domain(..) => Failure::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Physics(_) => 3,
            Failure::Check(_) | Failure::Io(_) => 1,
        }
    }
}

/// Parse `1..7`, `2,4` or a mix such as `1..3,6` into an ascending list.
fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad integer `{t}` in `{s}`"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(format!("empty list `{s}`"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parse `Ngeo=1..4,M=1,3,5` into per-key lists.
fn parse_sweep(s: &str) -> Result<Vec<(String, Vec<usize>)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.to_string())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(',');
                    v.push_str(part);
                }
                None => return Err(format!("sweep `{s}` must start with key=values")),
            },
        }
    }
    out.into_iter().map(|(k, v)| Ok((k, parse_list(&v)?))).collect()
}

fn out_dir(s: &Settings) -> Result<PathBuf, Failure> {
    let dir = s.out_dir.clone().unwrap_or_else(|| PathBuf::from("esdg-out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn mesh_kinds(mesh: MeshKind) -> Vec<ElementKind> {
    match mesh {
        MeshKind::Triangle => vec![ElementKind::Triangle],
        MeshKind::Quad => vec![ElementKind::Quad],
        MeshKind::Hybrid => vec![ElementKind::Triangle, ElementKind::Quad],
    }
}

fn check_operators(common: &Common) -> Result<(), Failure> {
    let s = common.settings(RunConfig::default(), true)?;
    let degrees = common.degrees("1..7")?;
    let options = match &common.option {
        Some(_) => vec![s.run.option],
        None => vec![QuadratureOption::GllGll, QuadratureOption::GllGauss, QuadratureOption::GaussGauss],
    };
    let mut csv = String::from("element_kind,N,option,sbp_residual,row_sum_residual,gsbp_residual,skew_difference\n");
    let mut failures = Vec::new();
    for kind in [ElementKind::Triangle, ElementKind::Quad] {
        for &n in &degrees {
            for option in &options {
                let ops = option.config(kind, n)?.build()?;
                let both = |f: fn(&_, usize) -> f64| f(&ops, 0).max(f(&ops, 1));
                let (sbp, rows) = (both(sbp_residual), both(row_sum_residual));
                let (gsbp, skew) = (both(gsbp_residual), both(skew_difference));
                writeln!(csv, "{},{n},{},{sbp:.3e},{rows:.3e},{gsbp:.3e},{skew:.3e}", kind.name(), option.label()).unwrap();
                if sbp > 1e-13 || rows > 1e-12 {
                    failures.push(format!("{} N={n} option {}", kind.name(), option.label()));
                }
            }
        }
    }
    write_file(&out_dir(&s)?, "operators.csv", &csv)?;
    if failures.is_empty() {
        println!("all skew-hybridized operators satisfy SBP and annihilate constants");
        Ok(())
    } else {
        Err(Failure::Check(format!("SBP check failed for {}", failures.join(", "))))
    }
}

fn constants(common: &Common) -> Result<(), Failure> {
    let s = common.settings(RunConfig::default(), true)?;
    let mut csv = format!("{}\n", ConstantsRow::CSV_HEADER);
    println!("{:>2} {:>9} {:>9} {:>7} {:>7} {:>9} {:>9} {:>7} {:>7}", "N", "qCI-GLL", "qCI-Gauss", "qCT-GLL",
        "qCT-Gs", "qCT-GL/Gs", "tCI", "tCT-Gs", "tCT-GLL");
    for n in common.degrees("1..7")? {
        let r = ConstantsRow::new(n)?;
        writeln!(csv, "{}", r.csv_row()).unwrap();
        println!("{n:>2} {:>9.2} {:>9.2} {:>7.2} {:>7.2} {:>9.2} {:>9.2} {:>7.2} {:>7.2}", r.quad_gll.inverse,
            r.quad_gauss.inverse, r.quad_gll.trace, r.quad_gauss.trace, r.quad_gll_gauss.trace,
            r.tri_gauss.inverse, r.tri_gauss.trace, r.tri_gll.trace);
    }
    write_file(&out_dir(&s)?, "constants.csv", &csv)?;
    Ok(())
}

fn entropy_test(common: &Common, sweep: Option<&str>) -> Result<(), Failure> {
    let base = RunConfig {
        degree: 4,
        mesh: MeshKind::Triangle,
        nx: 12,
        ny: 2,
        domain: Domain::new(0.0, 15.0, -0.5, 0.5),
        alpha: 0.125,
        final_time: 1.0,
        flux: FluxMode::Conservative,
        ..RunConfig::default()
    };
    let s = common.settings(base, false)?;
    let n = s.run.degree;
    let sweep = sweep.map(str::to_string).unwrap_or_else(|| format!("Ngeo=1..{n},M=1,3,5"));
    let parsed = parse_sweep(&sweep).map_err(|m| Failure::Config(format!("--sweep: {m}")))?;
    let mut ngeos = vec![s.run.ngeo];
    let mut ms = Vec::new();
    for (k, v) in parsed {
        match k.as_str() {
            "Ngeo" => ngeos = v,
            "M" => ms = v,
            other => return Err(Failure::Config(format!("--sweep: unknown key `{other}`"))),
        }
    }
    let options: Vec<QuadratureOption> = if ms.is_empty() {
        vec![s.run.option]
    } else {
        ms.iter().map(|&m| QuadratureOption::GllSurface { m }).collect()
    };
    let meshes = match &common.element_kind {
        Some(_) => vec![s.run.mesh],
        None => vec![MeshKind::Triangle, MeshKind::Quad],
    };
    let mut csv = String::from("element_kind,N,option,Ngeo,ngeo_limit,max_entropy_rhs,status\n");
    let mut failures = Vec::new();
    for &mesh in &meshes {
        for option in &options {
            let mut line = format!("{:>6} {:>4}:", mesh.name(), option.label());
            for &ngeo in &ngeos {
                let cfg = RunConfig { mesh, ngeo, option: *option, ..s.run.clone() };
                let limit = mesh_kinds(mesh).iter().map(|&k| cfg.ngeo_limit(k)).collect::<Result<Vec<_>, _>>()?;
                let limit = limit.into_iter().min().unwrap_or(0);
                let mut seen = 0.0f64;
                let run = max_entropy_rhs(&cfg, |d| d.project(density_jump(&d.gas, &d.config.domain)), |r| {
                    seen = seen.max(r.entropy_rhs.abs())
                });
                let (value, status) = match run {
                    Ok(v) => (v, "ok"),
                    Err(Error::NonPhysical { .. }) if ngeo > limit => (seen, "nonphysical"),
                    Err(e) => return Err(e.into()),
                };
                if ngeo <= limit && value > 1e-10 {
                    failures.push(format!("{} {} Ngeo={ngeo}: {value:.2e}", mesh.name(), option.label()));
                }
                writeln!(csv, "{},{n},{},{ngeo},{limit},{value:.6e},{status}", mesh.name(), option.label()).unwrap();
                write!(line, " {value:9.2e}").unwrap();
            }
            println!("{line}");
        }
    }
    write_file(&out_dir(&s)?, "entropy.csv", &csv)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("entropy RHS above 1e-10 within the admissible range: {}", failures.join("; "))))
    }
}

fn convergence(common: &Common, options: &str, levels: usize) -> Result<(), Failure> {
    let base = RunConfig { nx: 4, ny: 4, final_time: 5.0, ..RunConfig::default() };
    let s = common.settings(base, true)?;
    if levels == 0 {
        return Err(Failure::Config("--levels must be at least 1".into()));
    }
    let options: Vec<QuadratureOption> = options
        .split(',')
        .map(|o| QuadratureOption::parse(o).ok_or_else(|| Failure::Config(format!("--options: bad option `{o}`"))))
        .collect::<Result<_, _>>()?;
    let sizes: Vec<usize> = (0..levels).map(|i| s.run.nx << i).collect();
    let mut csv = String::from("N,option,nx,h,error,rate\n");
    let mut rates = String::from("N,option,fitted_rate\n");
    for n in common.degrees("2..3")? {
        for option in &options {
            let cfg = RunConfig { degree: n, option: *option, ..s.run.clone() };
            let rows = vortex_convergence(&cfg, &sizes)?;
            for r in &rows {
                let rate = r.rate.map(|x| format!("{x:.4}")).unwrap_or_default();
                writeln!(csv, "{n},{},{},{:.6e},{:.6e},{rate}", option.label(), r.nx, r.h, r.error).unwrap();
            }
            let fit = if rows.len() > 1 { fitted_rate(&rows) } else { f64::NAN };
            writeln!(rates, "{n},{},{fit:.4}", option.label()).unwrap();
            let errs: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.error)).collect();
            println!("N={n} option {}: errors {} fitted rate {fit:.2}", option.label(), errs.join(" "));
        }
    }
    let dir = out_dir(&s)?;
    write_file(&dir, "convergence.csv", &csv)?;
    write_file(&dir, "rates.csv", &rates)?;
    Ok(())
}

fn simulate(common: &Common, initial: &str) -> Result<(), Failure> {
    let s = common.settings(RunConfig::default(), false)?;
    if let Some(w) = s.run.ngeo_warning() {
        eprintln!("warning: {w}");
    }
    let disc = Discretization::new(s.run.clone())?;
    let gas = disc.gas;
    let vortex = disc.vortex();
    let u = match initial {
        "vortex" => disc.project(|x, y| vortex.state(&gas, x, y, 0.0)),
        "density-jump" => disc.project(density_jump(&gas, &s.run.domain)),
        "constant" => {
            let c = gas.from_primitive(1.0, 0.5, -0.25, 1.0);
            disc.project(|_, _| c)
        }
        other => return Err(Failure::Config(format!("--initial: unknown initial condition `{other}`"))),
    };
    let mut history = format!("{}\n", StepRecord::CSV_HEADER);
    let mut sim = Simulation::new(disc, u);
    let result = sim.run(s.run.final_time, |r| {
        history.push_str(&r.csv_row());
        history.push('\n');
    });
    let dir = out_dir(&s)?;
    write_file(&dir, "history.csv", &history)?;
    result?;
    let mut solution = String::from("element,x,y,rho,rhou,rhov,E\n");
    for (k, c) in sim.u.iter().enumerate() {
        let vals = sim.disc.volume_values(k, c);
        for (p, xy) in sim.disc.volume_points(k).iter().enumerate() {
            writeln!(solution, "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", xy[0], xy[1],
                vals[(p, 0)], vals[(p, 1)], vals[(p, 2)], vals[(p, 3)]).unwrap();
        }
    }
    write_file(&dir, "solution.csv", &solution)?;
    let totals = sim.disc.totals(&sim.u);
    println!("t = {:.6}, totals [{:.12e}, {:.12e}, {:.12e}, {:.12e}]", sim.t, totals[0], totals[1], totals[2], totals[3]);
    if initial == "vortex" {
        let t = sim.t;
        let err = l2_error(&sim.disc, &sim.u, |x, y| vortex.state(&gas, x, y, t))?;
        println!("L2 error against the exact vortex: {:.6e}", err.total);
    }
    Ok(())
}

fn mesh_dump(common: &Common) -> Result<(), Failure> {
    let s = common.settings(RunConfig::default(), false)?;
    let r = &s.run;
    let mesh = build_uniform_mesh(r.mesh, r.nx, r.ny, r.domain)?;
    let mapping = warp_mesh(&mesh, r.alpha, r.ngeo)?;
    let mut dump = Vec::new();
    mesh.write_dump(&mut dump)?;
    let mut text = String::from_utf8(dump).expect("mesh dump is ASCII");
    writeln!(text, "mapping degree {} alpha {}", mapping.ngeo, mapping.alpha).unwrap();
    for (k, c) in mapping.coeffs.iter().enumerate() {
        for (axis, coeffs) in ["x", "y"].iter().zip(c) {
            let vals: Vec<String> = coeffs.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(text, "{k} {axis} {}", vals.join(" ")).unwrap();
        }
    }
    write_file(&out_dir(&s)?, "mesh.txt", &text)?;
    println!("{} elements, {} face links", mesh.num_elements(), mesh.num_face_links());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::CheckOperators(c) => check_operators(c),
        Command::Constants(c) => constants(c),
        Command::EntropyTest { common, sweep } => entropy_test(common, sweep.as_deref()),
        Command::Convergence { common, options, levels } => convergence(common, options, *levels),
        Command::Simulate { common, initial } => simulate(common, initial),
        Command::MeshDump(c) => mesh_dump(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Config(m) => ("configuration error", m),
                Failure::Physics(m) => ("physics failure", m),
                Failure::Check(m) => ("check failed", m),
                Failure::Io(m) => ("i/o error", m),
            };
            eprintln!("esdg: {kind}: {msg}");
            ExitCode::from(f.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("1..7").unwrap(), (1..=7).collect::<Vec<_>>());
        assert_eq!(parse_list("5,1..3,2").unwrap(), vec![1, 2, 3, 5]);
        assert_eq!(parse_list("4").unwrap(), vec![4]);
        assert!(parse_list("3..1").is_err());
        assert!(parse_list("a").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn sweep_parsing() {
        let s = parse_sweep("Ngeo=1..6,M=1,3,5").unwrap();
        assert_eq!(s[0], ("Ngeo".to_string(), (1..=6).collect()));
        assert_eq!(s[1], ("M".to_string(), vec![1, 3, 5]));
        assert!(parse_sweep("1,2").is_err());
    }

    #[test]
    fn failure_exit_codes() {
        assert_eq!(Failure::from(Error::Config { line: 3, message: "x".into() }).exit_code(), 2);
        assert_eq!(Failure::from(Error::NonPhysical { element: Some(1), detail: "p<0".into() }).exit_code(), 3);
        assert_eq!(Failure::Check("x".into()).exit_code(), 1);
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
