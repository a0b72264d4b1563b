//! `sps` subcommands. Every command computes all of its outputs before the
//! first file is written, and each file is replaced atomically.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use sps_core::approx::Approximation;
use sps_core::control::{output_error_bound, BoundReport, PlantDoc, SemilinearPlant};
use sps_core::expr::parse;
use sps_core::layers::LayerFamily;
use sps_core::numeric::linspace;
use sps_core::output::{fmt_g, fmt_g17, to_json, write_atomic, Table};
use sps_core::problem::{eta_derivatives, load_problem, Problem, ProblemDoc, DEFAULT_DELTA, DEFAULT_EPSILON};
use sps_core::quadratic::{ConditionReport, QuadraticInstance};
use sps_core::solver::{compare, solve_bvp3, DiscreteSolution, Metrics};
use sps_core::turning::{shoot_bc, shot_trajectory, turning_scan, TurningDoc};
use sps_core::{Error, Result};

const LAYER_COLUMNS: [&str; 7] = ["t", "eta", "zeta", "zeta_hat", "psi", "v_corr", "y_tilde"];
const REFERENCE_COLUMNS: [&str; 3] = ["y_ref", "w_ref", "err"];

#[derive(Debug, Parser)]
#[command(name = "sps", version, about = "Boundary-layer approximations and reference solutions for three-point singularly perturbed problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Layer functions and the approximation on a uniform grid.
    Layers(ProblemArgs),
    /// The approximation on a uniform grid, with per-eps summaries.
    Approx(ProblemArgs),
    /// Reference solution on a layer-adapted mesh.
    Solve(ProblemArgs),
    /// Reference solution against the approximation, with error metrics.
    Compare(ProblemArgs),
    /// Feasible lambda interval for `f = y^2 + u`.
    CheckQuadratic(QuadraticArgs),
    /// Open-loop input achieving a desired output.
    Control(ControlArgs),
    /// Turning points of autonomous problems by shooting.
    Turning(TurningArgs),
}

#[derive(Debug, Args)]
struct EpsArgs {
    /// Perturbation parameter.
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated, strictly decreasing perturbation parameters.
    #[arg(long, value_delimiter = ',', conflicts_with = "eps")]
    eps_ladder: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem JSON file.
    problem: PathBuf,
    #[command(flatten)]
    eps: EpsArgs,
    /// Mesh cells for the reference solver (multiple of 4, at least 64).
    #[arg(long = "N", default_value_t = 512)]
    n: usize,
    /// Points of the uniform output grid.
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the problem's lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the problem's tube half-width.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Args)]
struct QuadraticArgs {
    problem: PathBuf,
    /// Lambda at which to report the conditions; defaults to the problem's.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ControlArgs {
    /// Plant JSON file.
    plant: PathBuf,
    /// Desired output `v0(t)`.
    #[arg(long)]
    v0: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    #[arg(long)]
    delta: Option<f64>,
    /// Also solve the closed-loop problem on a mesh of this many cells.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TurningArgs {
    /// Turning-point JSON file.
    spec: PathBuf,
    /// Overrides the sensor point.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    eps: EpsArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<Vec<PathBuf>> {
    let out = match cmd {
        Command::Layers(a) => problem_command(Kind::Layers, &a)?,
        Command::Approx(a) => problem_command(Kind::Approx, &a)?,
        Command::Solve(a) => problem_command(Kind::Solve, &a)?,
        Command::Compare(a) => problem_command(Kind::Compare, &a)?,
        Command::CheckQuadratic(a) => check_quadratic(&a)?,
        Command::Control(a) => control(&a)?,
        Command::Turning(a) => turning(&a)?,
    };
    out.commit()
}

/// Files produced by one command, held until everything has been computed.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn add(&mut self, name: String, body: String) {
        self.files.push((name, body.into_bytes()));
    }

    fn add_json<T: Serialize>(&mut self, name: String, value: &T) -> Result<()> {
        let body = to_json(value)?;
        self.add(name, body);
        Ok(())
    }

    fn commit(self) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, body) in self.files {
            let path = self.dir.join(name);
            write_atomic(&path, &body)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn eps_tag(eps: f64) -> String {
    fmt_g(eps, 6)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// The requested eps values and whether they came from a ladder.
fn eps_values(args: &EpsArgs, default: f64) -> Result<(Vec<f64>, bool)> {
    match (&args.eps_ladder, args.eps) {
        (Some(ladder), _) => {
            if ladder.is_empty() {
                return Err(Error::Invalid("empty --eps-ladder".into()));
            }
            for &e in ladder {
                check_positive("eps", e)?;
            }
            if ladder.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Invalid("--eps-ladder must be strictly decreasing".into()));
            }
            Ok((ladder.clone(), true))
        }
        (None, Some(e)) => {
            check_positive("eps", e)?;
            Ok((vec![e], false))
        }
        (None, None) => Ok((vec![default], false)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Layers,
    Approx,
    Solve,
    Compare,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Layers => "layers",
            Kind::Approx => "approx",
            Kind::Solve => "solve",
            Kind::Compare => "compare",
        }
    }

    fn solves(self) -> bool {
        matches!(self, Kind::Solve | Kind::Compare)
    }
}

#[derive(Debug, Serialize)]
struct LayerSummary {
    epsilon: f64,
    s: f64,
    m: f64,
    big_a: f64,
    big_b: f64,
    /// `ln D`; `D` itself overflows for small eps.
    ln_big_d: f64,
    psi_a: f64,
    psi_gamma: f64,
    psi_b: f64,
}

impl LayerSummary {
    fn new(l: &LayerFamily) -> Self {
        let (_, scaled) = l.big_d();
        LayerSummary {
            epsilon: l.eps,
            s: l.s,
            m: l.m,
            big_a: l.big_a,
            big_b: l.big_b,
            ln_big_d: l.s * l.x + scaled.ln(),
            psi_a: l.psi(l.a),
            psi_gamma: l.psi(l.gamma),
            psi_b: l.psi(l.b),
        }
    }
}

#[derive(Debug, Serialize)]
struct ApproxSummary {
    epsilon: f64,
    case_id: u8,
    c: f64,
    branch: f64,
    /// Largest `|y~ - eta|` on the grid.
    max_layer_offset: f64,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    epsilon: f64,
    n: usize,
    newton_iters: usize,
    residual_norm: f64,
    tol: f64,
    tube_violations: Option<usize>,
    tau_a: f64,
    tau_b: f64,
    y_a: f64,
    y_gamma: f64,
    y_b: f64,
    w_a: f64,
    w_b: f64,
}

impl SolveSummary {
    fn new(eps: f64, sol: &DiscreteSolution) -> Self {
        let last = sol.y.len() - 1;
        SolveSummary {
            epsilon: eps,
            n: last,
            newton_iters: sol.newton_iters,
            residual_norm: sol.residual_norm,
            tol: sol.tol,
            tube_violations: sol.tube_violations,
            tau_a: sol.mesh.tau_a,
            tau_b: sol.mesh.tau_b,
            y_a: sol.y[0],
            y_gamma: sol.y[sol.mesh.gamma_index],
            y_b: sol.y[last],
            w_a: sol.w[0],
            w_b: sol.w[last],
        }
    }
}

#[derive(Debug, Serialize)]
struct CompareSummary {
    epsilon: f64,
    n: usize,
    #[serde(flatten)]
    metrics: Metrics,
}

#[derive(Debug, Serialize)]
struct Ladder<T> {
    runs: Vec<T>,
    /// `max_err(eps_{i+1}) / max_err(eps_i)`
    #[serde(skip_serializing_if = "Option::is_none")]
    error_ratios: Option<Vec<f64>>,
}

struct Run {
    eps: f64,
    csv: String,
    summary: serde_json::Value,
    max_err: Option<f64>,
}

fn load_problem_args(args: &ProblemArgs) -> Result<Problem> {
    let doc: ProblemDoc = read_json(&args.problem)?;
    let mut p = load_problem(&doc)?;
    if let Some(l) = args.lambda {
        p = p.with_lambda(l)?;
    }
    if let Some(d) = args.delta {
        p = p.with_delta(d)?;
    }
    Ok(p)
}

fn layer_row(appr: &Approximation, t: f64) -> Result<Vec<f64>> {
    let l = &appr.layers;
    Ok(vec![t, appr.eta(t)?, l.zeta(t), l.zeta_hat(t), l.psi(t), l.v_corr(t), appr.y_tilde(t)?])
}

fn problem_command(kind: Kind, args: &ProblemArgs) -> Result<Outputs> {
    let p = load_problem_args(args)?;
    let (ladder, is_ladder) = eps_values(&args.eps, p.epsilon)?;
    if args.grid < 2 {
        return Err(Error::Invalid("--grid needs at least 2 points".into()));
    }
    let path = eta_derivatives(&p)?;
    let grid = linspace(p.a, p.b, args.grid);
    info!("{} on {} eps value(s)", kind.name(), ladder.len());

    let runs = ladder
        .par_iter()
        .map(|&eps| -> Result<Run> {
            let appr = Approximation::new(&path, eps)?;
            if !kind.solves() {
                let mut table = Table::new(LAYER_COLUMNS.to_vec());
                let mut offset = 0.0f64;
                for &t in &grid {
                    let row = layer_row(&appr, t)?;
                    offset = offset.max((row[6] - row[1]).abs());
                    table.push(row);
                }
                let summary = if kind == Kind::Layers {
                    serde_json::to_value(LayerSummary::new(&appr.layers))?
                } else {
                    serde_json::to_value(ApproxSummary {
                        epsilon: eps,
                        case_id: appr.case.id(),
                        c: appr.c,
                        branch: appr.branch,
                        max_layer_offset: offset,
                    })?
                };
                return Ok(Run { eps, csv: table.to_csv(), summary, max_err: None });
            }
            let sol = solve_bvp3(&p.with_epsilon(eps)?, args.n)?;
            let header = LAYER_COLUMNS.iter().chain(REFERENCE_COLUMNS.iter()).copied().collect();
            let mut table = Table::new(header);
            for ((&t, &y), &w) in sol.mesh.nodes.iter().zip(&sol.y).zip(&sol.w) {
                let mut row = layer_row(&appr, t)?;
                let err = row[6] - y;
                row.extend([y, w, err]);
                table.push(row);
            }
            let (summary, max_err) = if kind == Kind::Solve {
                (serde_json::to_value(SolveSummary::new(eps, &sol))?, None)
            } else {
                let metrics = compare(&sol, &appr, 1e-8 + 10.0 * sol.tol)?;
                let e = metrics.max_err;
                (serde_json::to_value(CompareSummary { epsilon: eps, n: args.n, metrics })?, Some(e))
            };
            Ok(Run { eps, csv: table.to_csv(), summary, max_err })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Outputs::new(&args.out_dir);
    let name = kind.name();
    for run in &runs {
        let tag = eps_tag(run.eps);
        out.add(format!("{name}_eps{tag}.csv"), run.csv.clone());
        out.add_json(format!("{name}_eps{tag}.json"), &run.summary)?;
    }
    if is_ladder {
        let error_ratios = (kind == Kind::Compare).then(|| {
            runs.windows(2)
                .map(|w| w[1].max_err.unwrap_or(f64::NAN) / w[0].max_err.unwrap_or(f64::NAN))
                .collect()
        });
        let ladder = Ladder { runs: runs.iter().map(|r| &r.summary).collect(), error_ratios };
        out.add_json(format!("{name}_ladder.json"), &ladder)?;
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct QuadraticReport {
    /// Longest lambda interval in `(0, -k)` where all conditions hold.
    interval: Option<(f64, f64)>,
    conditions: ConditionReport,
}

fn check_quadratic(args: &QuadraticArgs) -> Result<Outputs> {
    let doc: ProblemDoc = read_json(&args.problem)?;
    let inst = QuadraticInstance::from_doc(&doc)?;
    let lambda = args.lambda.unwrap_or(doc.lambda);
    let report = QuadraticReport { interval: inst.lambda_interval()?, conditions: inst.check_conditions(lambda)? };
    let mut out = Outputs::new(&args.out_dir);
    out.add_json("check_quadratic.json".into(), &report)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ClosedLoopReport {
    n: usize,
    newton_iters: usize,
    /// `max|g(y) - v0|` over the middle 60% of the interval.
    max_tracking_error: f64,
    /// `max|eta0''| / m`
    c: f64,
    /// `bound + 2 C eps`
    tracking_tolerance: f64,
}

#[derive(Debug, Serialize)]
struct ControlReport {
    v0: String,
    /// `u0(t)`, when `eta0` has a closed form.
    u0: Option<String>,
    bound: BoundReport,
    closed_loop: Option<ClosedLoopReport>,
}

fn control(args: &ControlArgs) -> Result<Outputs> {
    let doc: PlantDoc = read_json(&args.plant)?;
    check_positive("eps", args.eps)?;
    if args.grid < 2 {
        return Err(Error::Invalid("--grid needs at least 2 points".into()));
    }
    let plant = SemilinearPlant::from_doc(&doc)?;
    let v0 = parse(&args.v0, &["t"]).map_err(|source| Error::Expr { field: "v0", source })?;
    let syn = plant.synthesize_input(&v0)?;
    let geom = (doc.a, doc.gamma, doc.b);
    let delta = args.delta.or(doc.delta).unwrap_or(DEFAULT_DELTA);

    let mut table = Table::new(vec!["t", "v0", "eta0", "u0"]);
    for t in linspace(doc.a, doc.b, args.grid) {
        table.push(vec![t, syn.v0_at(t)?, syn.eta0(t)?, syn.u0(t)?]);
    }
    let bound = output_error_bound(&syn, geom, delta, args.eps)?;

    let closed_loop = match args.n {
        Some(n) => {
            let p = syn.closed_loop_problem(geom, delta, args.eps)?;
            let c = eta_derivatives(&p)?.c_constant();
            let sol = solve_bvp3(&p, n)?;
            let span = doc.b - doc.a;
            let (lo, hi) = (doc.a + 0.2 * span, doc.b - 0.2 * span);
            let mut worst = 0.0f64;
            for (&t, &y) in sol.mesh.nodes.iter().zip(&sol.y) {
                if t >= lo && t <= hi {
                    let g = plant.g.eval1("y", y).map_err(|source| Error::Expr { field: "g", source })?;
                    worst = worst.max((g - syn.v0_at(t)?).abs());
                }
            }
            Some(ClosedLoopReport {
                n,
                newton_iters: sol.newton_iters,
                max_tracking_error: worst,
                c,
                tracking_tolerance: bound.bound + 2.0 * c * args.eps,
            })
        }
        None => None,
    };
    let report = ControlReport { v0: v0.to_string(), u0: syn.u0_expr().map(|e| e.to_string()), bound, closed_loop };

    let mut out = Outputs::new(&args.out_dir);
    out.add("control_u0.csv".into(), table.to_csv());
    out.add_json("control.json".into(), &report)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct TurningRow {
    eps: f64,
    y1: f64,
    t_star: f64,
    t_star_quadrature: f64,
    t_star_closed: Option<f64>,
    /// `t* - gamma/2`
    drift: f64,
    /// `y(gamma) - y0` at the shot slope
    mismatch: f64,
    /// `max|eps*y'^2 + F~(y) - c1| / c1` along the shot trajectory
    energy_drift: f64,
}

#[derive(Debug, Serialize)]
struct TurningReport {
    f_tilde: String,
    gamma: f64,
    y0: f64,
    rows: Vec<TurningRow>,
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_g17(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_else(|| "nan".into())
}

fn turning(args: &TurningArgs) -> Result<Outputs> {
    let mut doc: TurningDoc = read_json(&args.spec)?;
    if let Some(g) = args.gamma {
        doc.gamma = g;
    }
    check_positive("gamma", doc.gamma)?;
    let (ladder, _) = eps_values(&args.eps, doc.epsilon.unwrap_or(DEFAULT_EPSILON))?;
    let gamma = doc.gamma;
    let mut out = Outputs::new(&args.out_dir);

    if let Some((f, controls)) = doc.scan_inputs()? {
        let scan = turning_scan(&f, &controls, &ladder, doc.y0, gamma);
        let mut csv = String::from("control,eps,y1,t_star,drift\n");
        for r in &scan.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_quote(&r.control),
                fmt_g17(r.eps),
                opt_g17(r.y1),
                opt_g17(r.t_star),
                opt_g17(r.drift)
            ));
        }
        out.add("turning_scan.csv".into(), csv);
        out.add_json("turning_scan.json".into(), &scan)?;
        return Ok(out);
    }

    let results = ladder
        .par_iter()
        .map(|&eps| -> Result<(TurningRow, Table)> {
            let template = doc.autonomous(eps)?;
            let shot = shoot_bc(&template, gamma)?;
            let solved = template.with_y1(shot.y1)?;
            let tr = shot_trajectory(&template, gamma, shot.y1)?;
            let energy = solved.energy()?;
            let mut drift = 0.0f64;
            let mut table = Table::new(vec!["t", "y", "yp"]);
            for ((&t, &y), &yp) in tr.t.iter().zip(&tr.y).zip(&tr.yp) {
                let e = solved.first_integral(&energy, y, yp)?;
                drift = drift.max((e - energy.c1).abs() / energy.c1.abs());
                table.push(vec![t, y, yp]);
            }
            let row = TurningRow {
                eps,
                y1: shot.y1,
                t_star: shot.t_star,
                t_star_quadrature: solved.turning_time()?,
                t_star_closed: solved.exp_turning_time(),
                drift: shot.t_star - 0.5 * gamma,
                mismatch: shot.mismatch,
                energy_drift: drift,
            };
            Ok((row, table))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Table::new(vec!["eps", "y1", "t_star", "t_star_quadrature", "t_star_closed", "drift"]);
    let mut rows = Vec::with_capacity(results.len());
    for (row, traj) in results {
        summary.push(vec![
            row.eps,
            row.y1,
            row.t_star,
            row.t_star_quadrature,
            row.t_star_closed.unwrap_or(f64::NAN),
            row.drift,
        ]);
        out.add(format!("turning_traj_eps{}.csv", eps_tag(row.eps)), traj.to_csv());
        rows.push(row);
    }
    out.add("turning.csv".into(), summary.to_csv());
    out.add_json("turning.json".into(), &TurningReport { f_tilde: doc.f_tilde.clone(), gamma, y0: doc.y0, rows })?;
    Ok(out)
}
