//! Batch front-end: load a problem config, dispatch to the library, emit
//! CSV/JSON artifacts.
//!
//! Exit codes: 0 success / verification PASS, 1 verification FAIL,
//! 2 input or compute error. Floats are printed with 17 significant digits
//! so identical configs produce byte-identical artifacts.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use sturmq::asymptotics;
use sturmq::coefficients::CoefficientSet;
use sturmq::config::{MapConfig, ProblemConfig, ResolvedMap};
use sturmq::debranges;
use sturmq::inverse_verify;
use sturmq::ode::OdeOptions;
use sturmq::spectral::{self, BoundaryCondition, EigOptions};
use sturmq::transforms::{self, LiouvilleMap};

#[derive(Parser)]
#[command(
    name = "sturmq",
    about = "Forward and inverse spectral computations for Sturm-Liouville operators with distributional potentials",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output path for the artifact (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative tolerance of the ODE integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_ode: f64,
    /// Absolute eigenvalue tolerance of the root refinement.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_eig: f64,
    /// Spectral window [LO, HI].
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Ray angle arg(z) for asymptotic scans.
    #[arg(long, global = true)]
    ray: Option<f64>,
    /// Seed for the default nonreal sample points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues and measure atoms in the window: CSV (n, lambda_n, mu_n).
    Eig(ProblemArg),
    /// Weyl-Titchmarsh m-function samples: CSV (Re z, Im z, Re m, Im m).
    Mfun {
        #[command(flatten)]
        problem: ProblemArg,
        /// Sample points "re,im" (repeatable).
        #[arg(long = "z", allow_hyphen_values = true)]
        zs: Vec<String>,
        /// Moduli along --ray (alternative to --z).
        #[arg(long, num_args = 1..)]
        moduli: Vec<f64>,
    },
    /// Spectral measure atoms: CSV (n, lambda_n, mu_n).
    Measure(ProblemArg),
    /// de Branges function and kernel-identity defect:
    /// CSV (Re z, Im z, |E|, defect).
    Debranges {
        #[command(flatten)]
        problem: ProblemArg,
        /// Interior kernel point.
        #[arg(long)]
        cpt: f64,
        /// Sample points "re,im" in the upper half-plane (repeatable;
        /// seeded defaults when omitted).
        #[arg(long = "z", allow_hyphen_values = true)]
        zs: Vec<String>,
    },
    /// Apply a transform (JSON map file) and emit the transformed problem
    /// config with transported boundary angles.
    Transform {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long)]
        map: PathBuf,
    },
    /// Verification suites; exit 1 on FAIL.
    Verify {
        #[command(subcommand)]
        what: VerifyCmd,
    },
    /// High-energy asymptotics scans: CSV (|z|, measured, predicted, deviation).
    Asym {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long, value_enum)]
        kind: AsymKind,
        /// Evaluation point for phi/green/b6 scans.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, num_args = 1..)]
        moduli: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Both spectra of a transform-related pair must agree pairwise.
    TwoSpectra {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long)]
        map: PathBuf,
        /// Second angle at the left endpoint (first is the config's phi_a).
        #[arg(long)]
        angle2: f64,
        /// Pass tolerance for pairwise eigenvalue deviations.
        #[arg(long, default_value_t = 2e-7)]
        tol: f64,
    },
    /// Auxiliary-function identity of the interval split at --cpt.
    ThreeSpectra {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long)]
        cpt: f64,
        /// Interior boundary angle at the split point.
        #[arg(long, default_value_t = 0.0)]
        phi_c: f64,
        #[arg(long = "z", allow_hyphen_values = true)]
        zs: Vec<String>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Local decay of m1 - m2 for problems agreeing left of --cpt.
    Bm {
        #[command(flatten)]
        problem: ProblemArg,
        /// Config of the second problem.
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        cpt: f64,
        #[arg(long, num_args = 1..)]
        moduli: Vec<f64>,
        /// Max admissible log-log slope of the decay ratio.
        #[arg(long, default_value_t = 0.1)]
        slope: f64,
    },
}

#[derive(Args)]
struct ProblemArg {
    /// Problem config (JSON).
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AsymKind {
    Phi,
    M,
    Green,
    B6,
}

enum Failure {
    Input(String),
}

impl From<sturmq::Error> for Failure {
    fn from(e: sturmq::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

struct Ctx {
    ode: OdeOptions,
    eig: EigOptions,
    window: (f64, f64),
    ray: f64,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn load_problem(
    path: &PathBuf,
) -> Result<(CoefficientSet, BoundaryCondition, BoundaryCondition), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ProblemConfig::parse(&text)?;
    Ok(cfg.build()?)
}

fn parse_z(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::Input(format!("expected 're,im', got '{s}'")));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| Failure::Input(format!("bad real part '{s}': {e}")))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| Failure::Input(format!("bad imag part '{s}': {e}")))?;
    Ok(Complex64::new(re, im))
}

/// splitmix64, for deterministic default sample points.
fn next_u64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (next_u64(state) >> 11) as f64 / (1u64 << 53) as f64
}

fn default_upper_half_samples(seed: u64, n: usize) -> Vec<Complex64> {
    let mut state = seed.wrapping_add(0x5eed);
    (0..n)
        .map(|_| Complex64::new(-3.0 + 9.0 * unit(&mut state), 0.3 + 3.0 * unit(&mut state)))
        .collect()
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let ode = OdeOptions::with_tol(cli.tol_ode, cli.tol_ode * 1e-2);
    let eig = EigOptions {
        tol_abs: cli.tol_eig,
        tol_rel: cli.tol_eig * 1e-2,
        ode,
        ..EigOptions::default()
    };
    let window = match &cli.window {
        Some(w) => (w[0], w[1]),
        None => (0.0, 110.0),
    };
    let ctx = Ctx {
        ode,
        eig,
        window,
        ray: cli.ray.unwrap_or(0.75 * std::f64::consts::PI),
        seed: cli.seed,
        out: cli.out.clone(),
    };
    match cli.cmd {
        Cmd::Eig(p) | Cmd::Measure(p) => cmd_eig(&ctx, &p),
        Cmd::Mfun {
            problem,
            zs,
            moduli,
        } => cmd_mfun(&ctx, &problem, &zs, &moduli),
        Cmd::Debranges { problem, cpt, zs } => cmd_debranges(&ctx, &problem, cpt, &zs),
        Cmd::Transform { problem, map } => cmd_transform(&ctx, &problem, &map),
        Cmd::Verify { what } => match what {
            VerifyCmd::TwoSpectra {
                problem,
                map,
                angle2,
                tol,
            } => cmd_two_spectra(&ctx, &problem, &map, angle2, tol),
            VerifyCmd::ThreeSpectra {
                problem,
                cpt,
                phi_c,
                zs,
                tol,
            } => cmd_three_spectra(&ctx, &problem, cpt, phi_c, &zs, tol),
            VerifyCmd::Bm {
                problem,
                other,
                cpt,
                moduli,
                slope,
            } => cmd_bm(&ctx, &problem, &other, cpt, &moduli, slope),
        },
        Cmd::Asym {
            problem,
            kind,
            x,
            moduli,
        } => cmd_asym(&ctx, &problem, kind, x, &moduli),
    }
}

fn cmd_eig(ctx: &Ctx, p: &ProblemArg) -> Result<bool, Failure> {
    let (c, phi_a, phi_b) = load_problem(&p.config)?;
    let spec = spectral::eigenvalues(&c, phi_a, phi_b, ctx.window, &ctx.eig)?;
    let mut out = String::from("n,lambda_n,mu_n\n");
    for (n, (l, nn)) in spec.eigenvalues.iter().zip(spec.norming.iter()).enumerate() {
        writeln!(out, "{},{},{}", n + 1, fmt_f(*l), fmt_f(1.0 / nn)).unwrap();
    }
    ctx.emit(&out)?;
    Ok(true)
}

fn cmd_mfun(ctx: &Ctx, p: &ProblemArg, zs: &[String], moduli: &[f64]) -> Result<bool, Failure> {
    let (c, phi_a, phi_b) = load_problem(&p.config)?;
    let mut points: Vec<Complex64> = Vec::new();
    for s in zs {
        points.push(parse_z(s)?);
    }
    for &m in moduli {
        points.push(Complex64::from_polar(m, ctx.ray));
    }
    if points.is_empty() {
        points = default_upper_half_samples(ctx.seed, 20);
    }
    let mut out = String::from("re_z,im_z,re_m,im_m\n");
    for z in points {
        let w = spectral::m_function(&c, z.into(), phi_a, phi_b, &ctx.ode)?;
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f(z.re),
            fmt_f(z.im),
            fmt_f(w.m_value.re),
            fmt_f(w.m_value.im)
        )
        .unwrap();
    }
    ctx.emit(&out)?;
    Ok(true)
}

fn cmd_debranges(ctx: &Ctx, p: &ProblemArg, cpt: f64, zs: &[String]) -> Result<bool, Failure> {
    let (c, phi_a, _) = load_problem(&p.config)?;
    let mut points: Vec<Complex64> = Vec::new();
    for s in zs {
        let z = parse_z(s)?;
        if z.im <= 0.0 {
            return Err(Failure::Input(format!(
                "de Branges samples must lie in the upper half-plane: {z}"
            )));
        }
        points.push(z);
    }
    if points.is_empty() {
        points = default_upper_half_samples(ctx.seed, 10);
    }
    let mut out = String::from("re_z,im_z,abs_e,defect\n");
    for z in points {
        let e = debranges::e_function(&c, z.into(), cpt, phi_a, &ctx.ode)?;
        let defect = debranges::elag_defect(&c, z, z, cpt, phi_a, &ctx.ode)?;
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f(z.re),
            fmt_f(z.im),
            fmt_f(e.e.norm()),
            fmt_f(defect)
        )
        .unwrap();
    }
    ctx.emit(&out)?;
    Ok(true)
}

fn load_map(path: &PathBuf) -> Result<MapConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(MapConfig::parse(&text)?)
}

fn apply_map(
    c: &CoefficientSet,
    resolved: &ResolvedMap,
) -> Result<(CoefficientSet, LiouvilleMap), Failure> {
    match resolved {
        ResolvedMap::Liouville(map) => Ok((transforms::liouville_apply(c, map)?, map.clone())),
        ResolvedMap::Gauge(spec) => Ok((transforms::gauge_transform(c, spec)?, spec.to_map()?)),
        ResolvedMap::Impedance(spec) => Ok((
            transforms::impedance_transform(c.p(), spec)?,
            spec.to_map(c.p())?,
        )),
    }
}

fn cmd_transform(ctx: &Ctx, p: &ProblemArg, map_path: &PathBuf) -> Result<bool, Failure> {
    let (c, phi_a, phi_b) = load_problem(&p.config)?;
    let resolved = load_map(map_path)?.resolve()?;
    let (c2, map) = apply_map(&c, &resolved)?;
    let cfg = ProblemConfig::from_parts(
        &c2,
        map.transport_angle(phi_a, true),
        map.transport_angle(phi_b, false),
    );
    ctx.emit(&(cfg.to_json() + "\n"))?;
    Ok(true)
}

fn cmd_two_spectra(
    ctx: &Ctx,
    p: &ProblemArg,
    map_path: &PathBuf,
    angle2: f64,
    tol: f64,
) -> Result<bool, Failure> {
    let (c1, phi_a, phi_b) = load_problem(&p.config)?;
    let resolved = load_map(map_path)?.resolve()?;
    let (c2, map) = apply_map(&c1, &resolved)?;
    let report = inverse_verify::two_spectra_verify(
        &c1,
        &c2,
        &map,
        (phi_a, BoundaryCondition::new(angle2)?),
        phi_b,
        ctx.window,
        tol,
        &ctx.eig,
    )?;
    let json = serde_json::json!({
        "check": "two-spectra",
        "assumptions": ["de Branges quotients of bounded type (analytic hypothesis, not numerically certifiable)"],
        "pass": report.pass(),
        "max_deviation": report.max_deviation,
        "tolerance": report.tolerance,
        "count_mismatch": report.count_mismatch,
        "interlacing": report.interlacing,
        "sigma_s": report.sigma_s1,
        "sigma_t": report.sigma_t1,
    });
    ctx.emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(&json).unwrap()
    ))?;
    Ok(report.pass())
}

fn cmd_three_spectra(
    ctx: &Ctx,
    p: &ProblemArg,
    cpt: f64,
    phi_c: f64,
    zs: &[String],
    tol: f64,
) -> Result<bool, Failure> {
    let (c, phi_a, phi_b) = load_problem(&p.config)?;
    let mut points: Vec<Complex64> = Vec::new();
    for s in zs {
        points.push(parse_z(s)?);
    }
    if points.is_empty() {
        points = vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, 1.0),
        ];
    }
    let report = inverse_verify::three_spectra_verify(
        &c,
        cpt,
        BoundaryCondition::new(phi_c)?,
        phi_a,
        phi_b,
        ctx.window,
        &points,
        &ctx.eig,
    )?;
    let pass = report.n_defect < tol;
    let json = serde_json::json!({
        "check": "three-spectra",
        "assumptions": ["de Branges quotients of bounded type (analytic hypothesis, not numerically certifiable)"],
        "pass": pass,
        "n_defect": report.n_defect,
        "tolerance": tol,
        "disjoint": report.disjoint,
        "sigma_full": report.sigma_full.eigenvalues,
        "sigma_a": report.sigma_a.eigenvalues,
        "sigma_b": report.sigma_b.eigenvalues,
    });
    ctx.emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(&json).unwrap()
    ))?;
    Ok(pass)
}

fn cmd_bm(
    ctx: &Ctx,
    p: &ProblemArg,
    other: &PathBuf,
    cpt: f64,
    moduli: &[f64],
    max_slope: f64,
) -> Result<bool, Failure> {
    let (c1, phi_a, phi_b1) = load_problem(&p.config)?;
    let (c2, _, phi_b2) = load_problem(other)?;
    let moduli: Vec<f64> = if moduli.is_empty() {
        asymptotics::default_moduli()
    } else {
        moduli.to_vec()
    };
    let report = inverse_verify::borg_marchenko_decay(
        &c1, &c2, cpt, phi_a, phi_b1, phi_b2, ctx.ray, &moduli, &ctx.ode,
    )?;
    let slope = report.log_slope();
    let pass = slope <= max_slope;
    let json = serde_json::json!({
        "check": "borg-marchenko-decay",
        "assumptions": ["solution families of finite growth order with matching leading behavior along the rays"],
        "pass": pass,
        "log_slope": slope,
        "max_slope": max_slope,
        "ray": report.ray_angle,
        "attained_modulus": report.attained_modulus,
        "moduli": report.moduli,
        "m_differences": report.m_differences,
        "ratios": report.ratios,
    });
    ctx.emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(&json).unwrap()
    ))?;
    Ok(pass)
}

fn cmd_asym(
    ctx: &Ctx,
    p: &ProblemArg,
    kind: AsymKind,
    x: Option<f64>,
    moduli: &[f64],
) -> Result<bool, Failure> {
    let (c, phi_a, phi_b) = load_problem(&p.config)?;
    let moduli: Vec<f64> = if moduli.is_empty() {
        asymptotics::default_moduli()
    } else {
        moduli.to_vec()
    };
    let mid = 0.5 * (c.a() + c.b());
    let x = x.unwrap_or(mid);
    let reports = match kind {
        AsymKind::Phi => {
            asymptotics::phi_asymptotics(&c, x, 0.5 * (c.a() + x), ctx.ray, &moduli, &ctx.ode)?
        }
        AsymKind::M => vec![asymptotics::m_asymptotics(
            &c, phi_a, phi_b, ctx.ray, &moduli, &ctx.ode,
        )?],
        AsymKind::Green => {
            asymptotics::green_diag_asymptotics(&c, x, phi_a, phi_b, ctx.ray, &moduli, &ctx.ode)?
        }
        AsymKind::B6 => asymptotics::b6_fixed_point_check(&c, x, ctx.ray, &moduli, &ctx.ode)?,
    };
    let mut out = String::from("quantity,modulus,measured,predicted,deviation\n");
    for report in &reports {
        for row in &report.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                report.quantity,
                fmt_f(row.modulus),
                fmt_f(row.measured.norm()),
                fmt_f(row.predicted.norm()),
                fmt_f(row.deviation())
            )
            .unwrap();
        }
    }
    ctx.emit(&out)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
