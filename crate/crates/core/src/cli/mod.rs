//! Command-line entry point: configuration, orchestration of the experiments,
//! CSV and SVG artifacts. Exit codes are 0 when every gated check passes, 1
//! when a check fails and 2 for usage, configuration or input errors.

pub mod config;
pub mod gridio;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{fefferman_stein, hl_maximal, sharp_maximal, vmo_modulus, BallFamily, BallFamilyConfig};
use crate::error::{Error, Result};
use crate::estimates::{higher_order_ratio, DiscreteOperator, StencilOrder};
use crate::geometry::{cc_distance, doubling_ratios, fit_growth, volume_ratio, BoxDomain, CCGraphConfig, GridMetric};
use crate::grid::GridFunction;
use crate::hvf::{builtin_names, validate};
use crate::kernels::{cij_constant, integrability, IntegrabilityFit, SmoothedKernel, SmoothedKernelSpec};
use crate::lift::{calibrate_equivalence, lift, matrix_sweep, verify_lift, ConstantMatrix, FundamentalSolution};
use crate::stats::spread;
use crate::testfn::planar_family;

use config::{check_budget, load_system, ExperimentConfig};
use output::{line_plot, num, write_text, Series, Table};

#[derive(Parser, Debug)]
#[command(name = "subelliptic", version, about = "Experiments on homogeneous Hormander vector fields")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural checks of a vector-field system.
    System {
        #[command(subcommand)]
        action: SystemAction,
    },
    /// Control distances and ball volumes.
    Geom {
        #[command(subcommand)]
        action: GeomAction,
    },
    /// Lifting to a Carnot group and the lifted fundamental solution.
    Lift {
        #[command(subcommand)]
        action: LiftAction,
    },
    /// Singular kernels: c_ij constants and local integrability.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Maximal functions of a grid function.
    Maximal(MaximalArgs),
    /// A-priori estimate ratios under a dilation sweep.
    Apriori(AprioriArgs),
    /// Summarise the CSV reports of a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum SystemAction {
    /// Homogeneity, Lie closure and the rank condition at the origin.
    Check {
        /// Built-in name or path to a JSON catalog entry.
        #[arg(long)]
        name: Option<String>,
    },
    /// Built-in system names.
    List,
}

#[derive(Subcommand, Debug)]
enum GeomAction {
    /// |B(0, 2r)| / |B(0, r)| against 2^q, growth exponents and doubling off the origin.
    Balls {
        #[arg(long)]
        system: Option<String>,
        /// Nodes per axis of the coarse grid.
        #[arg(long, default_value_t = 81)]
        nodes: usize,
    },
    /// d(x, y) with an error bound from two resolutions.
    Distance {
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to: Vec<f64>,
        #[arg(long, default_value_t = 80)]
        cells: usize,
    },
}

#[derive(Subcommand, Debug)]
enum LiftAction {
    /// Lift axioms and reproduction residuals of the fundamental solution.
    Verify {
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Also validate every matrix of the sweep at this ellipticity.
        #[arg(long)]
        sweep_nu: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum KernelAction {
    /// c_ij for every pair, surface against shell forms, and the trace identity.
    Cij {
        #[arg(long)]
        name: Option<String>,
        /// JSON matrix file (identity when omitted).
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Growth of int |K_{eps,R}(x, y)| dy against log(R / eps).
    Integrability {
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 1)]
        i: usize,
        #[arg(long, default_value_t = 2)]
        j: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
        at: Vec<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MaximalOp {
    Hl,
    Sharp,
    Vmo,
    Fs,
}

#[derive(Args, Debug)]
struct MaximalArgs {
    #[arg(long, value_enum)]
    op: MaximalOp,
    /// Grid file (HVFG binary or CSV).
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    system: Option<String>,
    #[arg(long, default_value_t = 2)]
    stride: usize,
    #[arg(long, default_value_t = 0.1)]
    r0: f64,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum SweepKind {
    Dilation,
    None,
}

#[derive(Args, Debug)]
struct AprioriArgs {
    #[arg(long)]
    system: Option<String>,
    /// JSON coefficient specification.
    #[arg(long)]
    coeffs: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, value_enum, default_value = "dilation")]
    sweep: SweepKind,
    /// Index into the planar test family.
    #[arg(long, default_value_t = 2)]
    function: usize,
    #[arg(long, default_value_t = 161)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
}

/// Coefficients of `L = sum a_ij(x) X_i X_j` for the `apriori` command.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant { matrix: Vec<Vec<f64>>, nu: f64 },
    /// `a_11 = base + amplitude sin x1`, the other entries those of the identity.
    SineDiagonal { base: f64, amplitude: f64, nu: f64 },
    /// Identity plus `amplitude` times products of sines with the given frequencies.
    Oscillatory { amplitude: f64, frequencies: [f64; 3], nu: f64 },
}

impl CoefficientSpec {
    pub fn nu(&self) -> f64 {
        match self {
            CoefficientSpec::Constant { nu, .. } | CoefficientSpec::SineDiagonal { nu, .. } | CoefficientSpec::Oscillatory { nu, .. } => *nu,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            CoefficientSpec::Constant { matrix, .. } => matrix.clone(),
            CoefficientSpec::SineDiagonal { base, amplitude, .. } => vec![vec![base + amplitude * x[0].sin(), 0.0], vec![0.0, 1.0]],
            CoefficientSpec::Oscillatory { amplitude, frequencies: [f1, f2, f3], .. } => {
                let s = (f1 * x[0]).sin() * (f2 * x[1]).cos();
                let c = 0.5 * (f3 * (x[0] + x[1])).sin();
                vec![vec![1.0 + amplitude * s, amplitude * c], vec![amplitude * c, 1.0 - amplitude * s]]
            }
        }
    }
}

/// Result of a command: whether every gated check passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from(ok: bool) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Errors that mean "the mathematical check failed" rather than "bad input".
fn is_check_failure(e: &Error) -> bool {
    matches!(e, Error::NotHomogeneous(_) | Error::RankDeficient { .. } | Error::ClosureDepthExceeded(_) | Error::LiftInvalid(_))
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    match execute(cli, out) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e) if is_check_failure(&e) => {
            let _ = writeln!(err, "check failed: {e}");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let c = ExperimentConfig::load(p)?;
            c.validate()?;
            c
        }
        None => ExperimentConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    let w = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(Error::from);
    match cli.command {
        Command::System { action: SystemAction::List } => {
            for name in builtin_names() {
                w(out, name.to_string())?;
            }
            Ok(Outcome::Pass)
        }
        Command::System { action: SystemAction::Check { name } } => {
            if let Some(n) = name {
                cfg.system = n;
            }
            system_check(&cfg, out)
        }
        Command::Geom { action: GeomAction::Balls { system, nodes } } => {
            if let Some(n) = system {
                cfg.system = n;
            }
            geom_balls(&cfg, nodes, out)
        }
        Command::Geom { action: GeomAction::Distance { system, from, to, cells } } => {
            if let Some(n) = system {
                cfg.system = n;
            }
            let sys = cfg.system()?;
            check_budget(4 * cells.pow(sys.n() as u32))?;
            let d = cc_distance(&sys, &from, &to, cells, &CCGraphConfig::default())?;
            w(out, format!("d = {} (coarse {}, error bound {})", d.value, d.coarse, d.error_bound))?;
            Ok(Outcome::Pass)
        }
        Command::Lift { action: LiftAction::Verify { name, samples, sweep_nu } } => {
            if let Some(n) = name {
                cfg.lift = n;
            }
            lift_verify(&cfg, samples, sweep_nu, out)
        }
        Command::Kernel { action: KernelAction::Cij { name, matrix } } => {
            if let Some(n) = name {
                cfg.lift = n;
            }
            if let Some(m) = matrix {
                cfg.matrices = vec![m];
            }
            kernel_cij(&cfg, out)
        }
        Command::Kernel { action: KernelAction::Integrability { name, i, j, at } } => {
            if let Some(n) = name {
                cfg.lift = n;
            }
            kernel_integrability(&cfg, i, j, &at, out)
        }
        Command::Maximal(args) => {
            if let Some(n) = &args.system {
                cfg.system = n.clone();
            }
            maximal(&cfg, &args, out)
        }
        Command::Apriori(args) => {
            if let Some(n) = &args.system {
                cfg.system = n.clone();
            }
            apriori(&cfg, &args, out)
        }
        Command::Report { dir } => report(&dir, out),
    }
}

fn system_check(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let sys = load_system(&cfg.system)?;
    let s = validate(&sys)?;
    let ok = s.rank_at_origin == s.n && s.big_n >= s.n && s.q > 2;
    let mut t = Table::new(&["system", "n", "m", "q", "N", "rank_at_origin", "pass"]);
    t.push(vec![cfg.system.clone(), s.n.to_string(), s.m.to_string(), s.q.to_string(), s.big_n.to_string(), s.rank_at_origin.to_string(), ok.to_string()]);
    t.write(&cfg.output_dir.join("system.csv"), &cfg.hash())?;
    writeln!(out, "{}: q={}, N={}, rank@0={}, n={}, m={}", sys_label(cfg), s.q, s.big_n, s.rank_at_origin, s.n, s.m)?;
    Ok(Outcome::from(ok))
}

fn sys_label(cfg: &ExperimentConfig) -> String {
    Path::new(&cfg.system).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| cfg.system.clone())
}

fn geom_balls(cfg: &ExperimentConfig, nodes: usize, out: &mut dyn Write) -> Result<Outcome> {
    let sys = cfg.system()?;
    if sys.n() != 2 {
        return Err(Error::InvalidParameter("geom balls runs on planar systems".into()));
    }
    let gcfg = CCGraphConfig::default();
    let r = cfg.sweep.r.first().copied().unwrap_or(0.5);
    let default = BoxDomain::new(vec![-2.2 * r, -2.2 * r.powi(sys.sigma()[1] as i32)], vec![2.2 * r, 2.2 * r.powi(sys.sigma()[1] as i32)], vec![nodes, nodes])?;
    let dom = cfg.domain_or(default)?;
    check_budget(dom.refined().len())?;
    let target = 2f64.powi(sys.q() as i32);
    let tol = cfg.tolerance("volume_ratio", 0.05);
    let ratio = volume_ratio(&sys, &[0.0, 0.0], r, 2.0, &dom, &gcfg)?;
    let ratio_ok = (ratio.fine - target).abs() <= tol * target;

    // growth and doubling off the origin
    let center = [dom.hi[0] * 0.45, 0.0];
    let radii: Vec<f64> = [0.1, 0.15, 0.2, 0.3].iter().map(|s| s * dom.hi[0]).collect();
    let doubling = doubling_ratios(&sys, &center, &radii[..2], &dom, &gcfg)?;
    let solver = crate::geometry::DistanceSolver::new(&sys, &gcfg)?;
    let field = solver.solve(&dom, &center, Some(radii[3] * 1.01))?;
    let vols: Vec<f64> = radii.iter().map(|r| field.ball_volume(*r)).collect::<Result<_>>()?;
    let growth = fit_growth(&radii, &vols)?;
    let growth_ok = growth.exponent >= 2.0 - 0.25 && growth.exponent <= sys.q() as f64 + 0.25;
    let doubling_ok = doubling.iter().all(|d| d.is_finite() && *d > 1.0);

    let mut t = Table::new(&["quantity", "value", "reference", "pass"]);
    t.push(vec!["ratio_coarse".into(), num(ratio.coarse), num(target), String::new()]);
    t.push(vec!["ratio_fine".into(), num(ratio.fine), num(target), ratio_ok.to_string()]);
    t.push(vec!["ratio_extrapolated".into(), num(ratio.extrapolated), num(target), String::new()]);
    t.push(vec!["growth_exponent".into(), num(growth.exponent), format!("[2,{}]", sys.q()), growth_ok.to_string()]);
    for (r, d) in radii.iter().zip(&doubling) {
        t.push(vec![format!("doubling_r{}", num(*r)), num(*d), String::new(), d.is_finite().to_string()]);
    }
    t.write(&cfg.output_dir.join("geom_balls.csv"), &cfg.hash())?;
    let svg = line_plot("ball volume growth", "r", "|B(x, r)|", &[Series { name: "off-origin centre".into(), points: radii.iter().copied().zip(vols.iter().copied()).collect() }], true, true);
    write_text(&cfg.output_dir.join("geom_balls.svg"), &svg)?;
    writeln!(out, "volume ratio {:.4} (coarse {:.4}) vs 2^q = {target}; growth exponent {:.3}", ratio.fine, ratio.coarse, growth.exponent)?;
    Ok(Outcome::from(ratio_ok && growth_ok && doubling_ok))
}

fn lift_verify(cfg: &ExperimentConfig, samples: usize, sweep_nu: Option<f64>, out: &mut dyn Write) -> Result<Outcome> {
    let l = lift(&cfg.lift)?;
    let rep = verify_lift(&l, samples, 7);
    let mut t = Table::new(&["check", "value", "tolerance", "pass"]);
    t.push(vec!["projection".into(), String::new(), String::new(), rep.projection.to_string()]);
    t.push(vec!["left_invariance".into(), num(rep.left_invariance_residual), num(crate::lift::LEFT_INVARIANCE_TOL), rep.left_invariance.to_string()]);
    t.push(vec!["left_invariance_exact".into(), String::new(), String::new(), rep.left_invariance_exact.to_string()]);
    t.push(vec!["homogeneity".into(), String::new(), String::new(), rep.homogeneity.to_string()]);
    t.push(vec!["group_axioms".into(), String::new(), String::new(), rep.group_axioms.to_string()]);
    t.push(vec!["lie_rank".into(), rep.lie_rank.to_string(), rep.big_n.to_string(), (rep.lie_rank == rep.big_n).to_string()]);
    let mut ok = rep.pass();
    if l.has_fundamental_solution() {
        let mut matrices = vec![ConstantMatrix::identity(l.m())];
        matrices.extend(cfg.load_matrices()?);
        if let Some(nu) = sweep_nu {
            matrices.extend(matrix_sweep(nu)?);
        }
        for (k, a) in matrices.iter().enumerate() {
            let v = FundamentalSolution::unvalidated(&l, a)?.validation();
            ok &= v.pass();
            t.push(vec![format!("reproduction_{k}"), num(v.residual), num(v.tolerance), v.pass().to_string()]);
        }
    }
    t.write(&cfg.output_dir.join("lift.csv"), &cfg.hash())?;
    writeln!(out, "lift {}: N={}, Q={}, left-invariance residual {:.2e}, {}", cfg.lift, l.big_n(), l.big_q(), rep.left_invariance_residual, if ok { "pass" } else { "FAIL" })?;
    Ok(Outcome::from(ok))
}

fn kernel_cij(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let l = lift(&cfg.lift)?;
    let a = cfg.load_matrices()?.into_iter().next().unwrap_or_else(|| ConstantMatrix::identity(l.m()));
    let fs = FundamentalSolution::new(&l, &a)?;
    let tol_trace = cfg.tolerance("trace", 2e-3);
    let mut t = Table::new(&["i", "j", "surface", "shell_smooth", "shell_quintic", "surface_shell_gap", "profile_gap", "pass"]);
    let mut trace = 0.0;
    let mut ok = true;
    for i in 0..l.m() {
        for j in 0..l.m() {
            let c = cij_constant(&fs, i, j)?;
            let pass = c.surface_shell_gap <= cfg.tolerance("surface_shell", 0.01) && c.profile_gap <= cfg.tolerance("profile", 0.005);
            ok &= pass;
            trace += a.get(i, j) * c.surface;
            t.push(vec![(i + 1).to_string(), (j + 1).to_string(), num(c.surface), num(c.shell_smooth), num(c.shell_quintic), num(c.surface_shell_gap), num(c.profile_gap), pass.to_string()]);
        }
    }
    let trace_ok = (trace + 1.0).abs() <= tol_trace;
    t.push(vec!["trace".into(), String::new(), num(trace), String::new(), String::new(), num((trace + 1.0).abs()), String::new(), trace_ok.to_string()]);
    t.write(&cfg.output_dir.join("kernel_cij.csv"), &cfg.hash())?;
    writeln!(out, "c_ij for {}: trace sum a_ij c_ij = {trace:.6} (expected -1), {}", cfg.lift, if ok && trace_ok { "pass" } else { "FAIL" })?;
    Ok(Outcome::from(ok && trace_ok))
}

fn kernel_integrability(cfg: &ExperimentConfig, i: usize, j: usize, at: &[f64], out: &mut dyn Write) -> Result<Outcome> {
    if i == 0 || j == 0 {
        return Err(Error::InvalidParameter("field indices are 1-based".into()));
    }
    let l = lift(&cfg.lift)?;
    let cal = calibrate_equivalence(&l, 200, 3, 40)?;
    let a = cfg.load_matrices()?.into_iter().next().unwrap_or_else(|| ConstantMatrix::identity(l.m()));
    let fs = FundamentalSolution::new(&l, &a)?;
    let eps_list = if cfg.sweep.eps.is_empty() { vec![0.02, 0.05, 0.1] } else { cfg.sweep.eps.clone() };
    let r_list = if cfg.sweep.r.is_empty() { vec![0.5, 1.0, 2.0] } else { cfg.sweep.r.clone() };
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut t = Table::new(&["eps", "R", "row_integral", "column_integral"]);
    for &eps in &eps_list {
        for &r in &r_list {
            let sk = SmoothedKernel::new(&fs, SmoothedKernelSpec::new(i - 1, j - 1, a.clone(), eps, r)?, &cal)?;
            let row = integrability(&sk, at, false, 24, 3.0)?;
            let col = integrability(&sk, at, true, 24, 3.0)?;
            t.push(vec![num(eps), num(r), num(row), num(col)]);
            ratios.push(r / eps);
            rows.push(row);
            cols.push(col);
        }
    }
    let fit = IntegrabilityFit::new(ratios.clone(), rows.clone());
    let tfit = IntegrabilityFit::new(ratios.clone(), cols);
    let min_r2 = cfg.tolerance("r2", 0.95);
    let ok = fit.fit.r2 >= min_r2 && tfit.fit.r2 >= min_r2;
    t.write(&cfg.output_dir.join("kernel_integrability.csv"), &cfg.hash())?;
    let svg = line_plot("int |K_eps,R| against R / eps", "R / eps", "integral", &[Series { name: "rows".into(), points: ratios.iter().copied().zip(rows).collect() }], true, false);
    write_text(&cfg.output_dir.join("kernel_integrability.svg"), &svg)?;
    writeln!(out, "integrability fit: slope {:.4}, R^2 {:.4} (transposed R^2 {:.4}), {}", fit.fit.slope, fit.fit.r2, tfit.fit.r2, if ok { "pass" } else { "FAIL" })?;
    Ok(Outcome::from(ok))
}

fn maximal(cfg: &ExperimentConfig, args: &MaximalArgs, out: &mut dyn Write) -> Result<Outcome> {
    let f = gridio::read_grid(&args.f)?;
    let sys = cfg.system()?;
    let metric = GridMetric::new(&sys, f.domain.clone(), &CCGraphConfig::default())?;
    let family = BallFamily::new(&metric, &BallFamilyConfig::dyadic(args.stride, args.r0, args.levels))?;
    let hash = cfg.hash();
    let stem = match args.op {
        MaximalOp::Hl => "maximal_hl",
        MaximalOp::Sharp => "maximal_sharp",
        MaximalOp::Vmo => "maximal_vmo",
        MaximalOp::Fs => "maximal_fs",
    };
    let ok = match args.op {
        MaximalOp::Hl | MaximalOp::Sharp => {
            let g = if args.op == MaximalOp::Hl { hl_maximal(&f, &family)? } else { sharp_maximal(&f, &family)? };
            gridio::write_grid(&cfg.output_dir.join(format!("{stem}.hvfg")), &g)?;
            let finite = g.values.iter().all(|v| v.is_finite());
            let dominates = args.op == MaximalOp::Sharp || g.values.iter().zip(&f.values).all(|(m, v)| *m >= v.abs());
            let mut t = Table::new(&["op", "balls", "clipped", "sup_f", "sup_result", "pass"]);
            t.push(vec![stem.into(), family.len().to_string(), family.clipped.to_string(), num(f.sup_norm()), num(g.sup_norm()), (finite && dominates).to_string()]);
            t.write(&cfg.output_dir.join(format!("{stem}.csv")), &hash)?;
            writeln!(out, "{stem}: {} balls ({} clipped), sup {:.6}", family.len(), family.clipped, g.sup_norm())?;
            finite && dominates
        }
        MaximalOp::Vmo => {
            let rep = vmo_modulus(&f, &family)?;
            let mut t = Table::new(&["r", "level_oscillation", "eta"]);
            for k in 0..rep.radii.len() {
                t.push(vec![num(rep.radii[k]), num(rep.level_oscillation[k]), num(rep.eta[k])]);
            }
            t.write(&cfg.output_dir.join(format!("{stem}.csv")), &hash)?;
            let svg = line_plot("VMO modulus", "r", "eta(r)", &[Series { name: "eta".into(), points: rep.radii.iter().copied().zip(rep.eta.iter().copied()).collect() }], true, false);
            write_text(&cfg.output_dir.join(format!("{stem}.svg")), &svg)?;
            writeln!(out, "{stem}: eta = {:?}", rep.eta)?;
            rep.eta.iter().all(|v| v.is_finite())
        }
        MaximalOp::Fs => {
            let ps = if args.p.is_empty() { if cfg.sweep.p.is_empty() { vec![2.0] } else { cfg.sweep.p.clone() } } else { args.p.clone() };
            let mut t = Table::new(&["p", "lhs", "rhs", "ratio", "pass"]);
            let mut ok = true;
            for p in ps {
                let rec = fefferman_stein(&f, &family, p)?;
                let pass = rec.ratio().is_finite();
                ok &= pass;
                t.push(vec![num(p), num(rec.lhs), num(rec.rhs), num(rec.ratio()), pass.to_string()]);
                writeln!(out, "{stem}: p {p}: ||f||_p / ||f#||_p = {:.4}", rec.ratio())?;
            }
            t.write(&cfg.output_dir.join(format!("{stem}.csv")), &hash)?;
            ok
        }
    };
    Ok(Outcome::from(ok))
}

fn apriori(cfg: &ExperimentConfig, args: &AprioriArgs, out: &mut dyn Write) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.coeffs).map_err(|e| Error::Io(format!("{}: {e}", args.coeffs.display())))?;
    let spec: CoefficientSpec = serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("coefficients: {e}")))?;
    let sys = cfg.system()?;
    if sys.n() != 2 {
        return Err(Error::InvalidParameter("apriori runs on planar systems".into()));
    }
    let fam = planar_family();
    let f = fam.get(args.function).ok_or_else(|| Error::InvalidParameter(format!("test function index {} (0..{})", args.function, fam.len())))?;
    check_budget(args.nodes * args.nodes)?;
    let order = StencilOrder::from_order(args.order)?;
    let lambdas = match args.sweep {
        SweepKind::None => vec![1.0],
        SweepKind::Dilation if cfg.sweep.lambda.is_empty() => vec![0.25, 0.5, 1.0, 2.0, 4.0],
        SweepKind::Dilation => cfg.sweep.lambda.clone(),
    };
    let sigma = sys.sigma().to_vec();
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &lambda in &lambdas {
        let g = f.dilated(&sigma, lambda);
        let half: Vec<f64> = sigma.iter().map(|s| 1.25 / lambda.powi(*s as i32)).collect();
        let dom = BoxDomain::new(half.iter().map(|h| -h).collect(), half.clone(), vec![args.nodes, args.nodes])?;
        let u = GridFunction::from_fn(&dom, |x| g.eval(x));
        let op = DiscreteOperator::from_fn(&sys, &dom, |x| spec.eval(x), spec.nu(), order)?;
        let rec = higher_order_ratio(&op, &u, args.k, args.p)?;
        rows.push(vec![num(lambda), args.k.to_string(), num(args.p), num(rec.solution.total), num(rec.operator.total), num(rec.u_norm), num(rec.ratio)]);
        ratios.push(rec.ratio);
    }
    let s = spread(&ratios);
    let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0) && s <= cfg.tolerance("spread", 2.0);
    let mut t = Table::new(&["lambda", "k", "p", "solution_norm", "operator_norm", "u_norm", "ratio", "spread", "pass"]);
    for mut row in rows {
        row.extend([num(s), ok.to_string()]);
        t.push(row);
    }
    t.write(&cfg.output_dir.join("apriori.csv"), &cfg.hash())?;
    let svg = line_plot("a-priori ratio under dilation", "lambda", "ratio", &[Series { name: format!("k = {}", args.k), points: lambdas.iter().copied().zip(ratios.iter().copied()).collect() }], true, false);
    write_text(&cfg.output_dir.join("apriori.svg"), &svg)?;
    writeln!(out, "apriori k={} p={}: ratios {:?}, spread {s:.3}, {}", args.k, args.p, ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>(), if ok { "pass" } else { "FAIL" })?;
    Ok(Outcome::from(ok))
}

/// Rows and failed rows of every CSV report in `dir`.
fn report(dir: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != "summary.csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("no reports in {}", dir.display())));
    }
    let mut t = Table::new(&["report", "rows", "failed", "config_hashes"]);
    let mut failed_total = 0;
    for path in &files {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        let pass_col = headers.iter().position(|h| h == "pass");
        let hash_col = headers.iter().position(|h| h == "config_hash");
        let (mut rows, mut failed) = (0, 0);
        let mut hashes: Vec<String> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            rows += 1;
            if pass_col.and_then(|c| rec.get(c)) == Some("false") {
                failed += 1;
            }
            if let Some(h) = hash_col.and_then(|c| rec.get(c)) {
                if !hashes.iter().any(|x| x == h) {
                    hashes.push(h.to_string());
                }
            }
        }
        failed_total += failed;
        let name = path.file_name().expect("file").to_string_lossy().into_owned();
        writeln!(out, "{name}: {rows} rows, {failed} failed")?;
        t.push(vec![name, rows.to_string(), failed.to_string(), hashes.join(" ")]);
    }
    t.write(&dir.join("summary.csv"), "summary")?;
    writeln!(out, "{} reports, {failed_total} failed rows", files.len())?;
    Ok(Outcome::from(failed_total == 0))
}
